//! Line-oriented AF API server.
//!
//! Protocol: `SET_PRIORITY <ip> HP\n` or `REVERT_PRIORITY <ip>\n`, answered
//! with `OK\n` or `ERR <code>\n`. This lets an out-of-process application
//! drive the priority APIs against a live registry.

use std::io::{BufRead, BufReader, Write};
use std::net::{SocketAddr, TcpListener, TcpStream};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex};
use std::thread::JoinHandle;

use crate::registry::Registry;
use crate::types::CpError;

pub struct AfServer {
    pub addr: SocketAddr,
    shutdown: Arc<AtomicBool>,
    handle: Option<JoinHandle<()>>,
}

impl AfServer {
    /// Binds 127.0.0.1 on an ephemeral port and serves until dropped.
    pub fn spawn(registry: Arc<Mutex<Registry>>) -> std::io::Result<Self> {
        let listener = TcpListener::bind("127.0.0.1:0")?;
        let addr = listener.local_addr()?;
        listener.set_nonblocking(true)?;
        let shutdown = Arc::new(AtomicBool::new(false));
        let stop = Arc::clone(&shutdown);
        let handle = std::thread::spawn(move || {
            while !stop.load(Ordering::Relaxed) {
                match listener.accept() {
                    Ok((stream, _)) => {
                        stream.set_nonblocking(false).ok();
                        let registry = Arc::clone(&registry);
                        let stop = Arc::clone(&stop);
                        std::thread::spawn(move || serve_client(stream, registry, stop));
                    }
                    Err(ref e) if e.kind() == std::io::ErrorKind::WouldBlock => {
                        std::thread::sleep(std::time::Duration::from_millis(5));
                    }
                    Err(_) => break,
                }
            }
        });
        Ok(Self {
            addr,
            shutdown,
            handle: Some(handle),
        })
    }
}

impl Drop for AfServer {
    fn drop(&mut self) {
        self.shutdown.store(true, Ordering::Relaxed);
        if let Some(handle) = self.handle.take() {
            let _ = handle.join();
        }
    }
}

fn serve_client(stream: TcpStream, registry: Arc<Mutex<Registry>>, stop: Arc<AtomicBool>) {
    let mut writer = match stream.try_clone() {
        Ok(w) => w,
        Err(_) => return,
    };
    let reader = BufReader::new(stream);
    for line in reader.lines() {
        if stop.load(Ordering::Relaxed) {
            break;
        }
        let Ok(line) = line else { break };
        let reply = handle_command(&line, &registry);
        if writer.write_all(reply.as_bytes()).is_err() || writer.flush().is_err() {
            break;
        }
    }
}

/// Parses and executes one command line, producing the reply line.
pub fn handle_command(line: &str, registry: &Mutex<Registry>) -> String {
    let fields: Vec<&str> = line.split_whitespace().collect();
    let result = match fields.as_slice() {
        ["SET_PRIORITY", ip, "HP"] => registry.lock().expect("registry").set_priority(ip),
        ["REVERT_PRIORITY", ip] => registry.lock().expect("registry").revert_priority(ip),
        _ => return "ERR BAD_REQUEST\n".to_string(),
    };
    match result {
        Ok(()) => "OK\n".to_string(),
        Err(CpError::UnknownIp) => "ERR UNKNOWN_IP\n".to_string(),
        Err(CpError::NotEligible) => "ERR NOT_ELIGIBLE\n".to_string(),
        Err(other) => format!("ERR {other}\n"),
    }
}
