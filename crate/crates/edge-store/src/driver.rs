//! Blocking drivers that run sync sessions over byte streams.
//!
//! These realize the client-facing sync APIs in live mode: a session is
//! polled for frames which are written to the stream, and acks are read back
//! as they arrive. The same sessions run under a simulated clock inside a
//! discrete-event harness without any of this code.

use std::io::{Read, Write};
use std::net::{TcpStream, ToSocketAddrs};
use std::sync::Mutex;

use crate::clock::Clock;
use crate::error::{SyncError, WireError};
use crate::receiver::Receiver;
use crate::session::{BlockingReport, SessionStep, SourceSession, SyncReport};
use crate::store::Store;
use crate::wire::{read_frame, write_frame, Frame};

/// Drives a session to completion over a connected stream.
pub fn drive_session<S: Read + Write>(
    store: &Mutex<Store>,
    session: &mut SourceSession,
    stream: &mut S,
    clock: &dyn Clock,
) -> Result<SyncReport, SyncError> {
    loop {
        let step = {
            let mut store = store.lock().expect("store poisoned");
            session.poll(&mut store, clock.now_ms())
        };
        match step {
            SessionStep::Send(frame) => {
                if let Err(err) = write_frame(stream, &frame) {
                    return Err(fail(store, session, clock, err));
                }
            }
            SessionStep::Wait => {
                let ack = match read_frame(stream) {
                    Ok(frame) => frame,
                    Err(err) => return Err(fail(store, session, clock, err)),
                };
                let mut store = store.lock().expect("store poisoned");
                session.on_ack(&mut store, &ack, clock.now_ms());
            }
            SessionStep::Finished(report) => return Ok(*report),
        }
    }
}

fn fail(
    store: &Mutex<Store>,
    session: &mut SourceSession,
    clock: &dyn Clock,
    err: WireError,
) -> SyncError {
    let mut store = store.lock().expect("store poisoned");
    session.fail(&mut store, clock.now_ms());
    match err {
        WireError::Io(io) => SyncError::PeerUnreachable(io.to_string()),
        other => SyncError::Wire(other),
    }
}

/// Connects to `dest` and runs a full background sync for `user_id`.
pub fn background_sync<A: ToSocketAddrs>(
    store: &Mutex<Store>,
    user_id: &str,
    dest: &str,
    dest_addr: A,
    clock: &dyn Clock,
) -> Result<SyncReport, SyncError> {
    let mut stream = connect(dest_addr)?;
    let mut session = {
        let mut guard = store.lock().expect("store poisoned");
        SourceSession::background(&mut guard, user_id, dest, clock.now_ms())?
    };
    drive_session(store, &mut session, &mut stream, clock)
}

/// Connects to `dest` and runs a blocking sync, returning once the peer has
/// committed the full state.
pub fn blocking_sync<A: ToSocketAddrs>(
    store: &Mutex<Store>,
    user_id: &str,
    dest: &str,
    dest_addr: A,
    retain: bool,
    clock: &dyn Clock,
) -> Result<BlockingReport, SyncError> {
    let mut stream = connect(dest_addr)?;
    let mut session = {
        let mut guard = store.lock().expect("store poisoned");
        SourceSession::blocking(&mut guard, user_id, dest, retain, clock.now_ms())?
    };
    drive_session(store, &mut session, &mut stream, clock)?;
    Ok(session.blocking_report().expect("blocking session finished"))
}

fn connect<A: ToSocketAddrs>(addr: A) -> Result<TcpStream, SyncError> {
    TcpStream::connect(addr).map_err(|e| SyncError::PeerUnreachable(e.to_string()))
}

/// Serves one peer connection against the local store until the peer hangs
/// up. Corrupted payloads are answered with retry acks; header corruption is
/// connection-fatal.
pub fn serve_stream<S: Read + Write>(
    store: &Mutex<Store>,
    stream: &mut S,
    clock: &dyn Clock,
) -> Result<(), WireError> {
    let mut receiver = Receiver::new();
    loop {
        let frame: Frame = match read_frame(stream) {
            Ok(frame) => frame,
            Err(WireError::ChecksumMismatch { .. }) => {
                log::warn!("payload checksum mismatch, requesting retransmit");
                write_frame(stream, &receiver.retry_ack())?;
                continue;
            }
            Err(WireError::Io(err)) if err.kind() == std::io::ErrorKind::UnexpectedEof => {
                return Ok(());
            }
            Err(err) => return Err(err),
        };
        let reply = {
            let mut store = store.lock().expect("store poisoned");
            receiver.handle_frame(&mut store, &frame, clock.now_ms())
        };
        if let Some(reply) = reply {
            write_frame(stream, &reply)?;
        }
    }
}
