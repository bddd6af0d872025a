//! AF priority API over a live local socket.

use std::io::{BufRead, BufReader, Write};
use std::net::TcpStream;
use std::sync::{Arc, Mutex};

use control_plane::{AfServer, Registry, UeClass};

fn send_line(stream: &mut TcpStream, reader: &mut BufReader<TcpStream>, line: &str) -> String {
    stream.write_all(line.as_bytes()).unwrap();
    stream.flush().unwrap();
    let mut reply = String::new();
    reader.read_line(&mut reply).unwrap();
    reply
}

#[test]
fn af_socket_drives_priority_transitions() {
    let registry = Arc::new(Mutex::new(Registry::new()));
    {
        let mut reg = registry.lock().unwrap();
        reg.attach(1, "10.1.0.1", UeClass::Mp);
        reg.attach(2, "10.1.0.2", UeClass::Lp);
    }
    let server = AfServer::spawn(Arc::clone(&registry)).unwrap();
    let mut stream = TcpStream::connect(server.addr).unwrap();
    let mut reader = BufReader::new(stream.try_clone().unwrap());

    assert_eq!(
        send_line(&mut stream, &mut reader, "SET_PRIORITY 10.1.0.1 HP\n"),
        "OK\n"
    );
    assert_eq!(
        registry.lock().unwrap().klass_of(1).unwrap(),
        UeClass::Hp,
        "promotion visible in the registry"
    );
    assert_eq!(
        send_line(&mut stream, &mut reader, "SET_PRIORITY 10.1.0.2 HP\n"),
        "ERR NOT_ELIGIBLE\n"
    );
    assert_eq!(
        send_line(&mut stream, &mut reader, "SET_PRIORITY 10.9.9.9 HP\n"),
        "ERR UNKNOWN_IP\n"
    );
    assert_eq!(
        send_line(&mut stream, &mut reader, "REVERT_PRIORITY 10.1.0.1\n"),
        "OK\n"
    );
    assert_eq!(registry.lock().unwrap().klass_of(1).unwrap(), UeClass::Mp);
    assert_eq!(
        send_line(&mut stream, &mut reader, "GIBBERISH\n"),
        "ERR BAD_REQUEST\n"
    );
}
