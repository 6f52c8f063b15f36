use std::io::{self, BufRead, BufReader, Read, Write};
use std::net::{SocketAddr, TcpListener, TcpStream, ToSocketAddrs};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::thread;

use super::wire::Reply;
use super::Hub;

/// Longest accepted line, bytes. Longer lines are answered `malformed` and discarded.
const MAX_LINE: usize = 64 * 1024;

/// TCP front end: one thread per node connection, one reply line per request line.
pub struct GatewayServer {
    listener: TcpListener,
    hub: Arc<Hub>,
    stop: Arc<AtomicBool>,
}

#[derive(Clone)]
pub struct ShutdownHandle {
    addr: SocketAddr,
    stop: Arc<AtomicBool>,
}

impl ShutdownHandle {
    /// Stops accepting new connections. Open sessions run until their peer disconnects.
    pub fn shutdown(&self) {
        self.stop.store(true, Ordering::SeqCst);
        // wake the blocking accept
        let _ = TcpStream::connect(self.addr);
    }
}

impl GatewayServer {
    pub fn bind(addr: impl ToSocketAddrs, hub: Arc<Hub>) -> io::Result<Self> {
        Ok(GatewayServer {
            listener: TcpListener::bind(addr)?,
            hub,
            stop: Arc::new(AtomicBool::new(false)),
        })
    }

    pub fn local_addr(&self) -> io::Result<SocketAddr> {
        self.listener.local_addr()
    }

    pub fn hub(&self) -> &Arc<Hub> {
        &self.hub
    }

    pub fn shutdown_handle(&self) -> io::Result<ShutdownHandle> {
        Ok(ShutdownHandle {
            addr: self.local_addr()?,
            stop: self.stop.clone(),
        })
    }

    /// Accept loop; returns after [`ShutdownHandle::shutdown`].
    pub fn run(self) -> io::Result<()> {
        for stream in self.listener.incoming() {
            if self.stop.load(Ordering::SeqCst) {
                break;
            }
            let stream = match stream {
                Ok(s) => s,
                Err(_) => continue,
            };
            let hub = self.hub.clone();
            thread::spawn(move || {
                let _ = serve_connection(stream, &hub);
            });
        }
        Ok(())
    }

    pub fn spawn(self) -> io::Result<(ShutdownHandle, thread::JoinHandle<io::Result<()>>)> {
        let handle = self.shutdown_handle()?;
        Ok((handle, thread::spawn(move || self.run())))
    }
}

fn serve_connection(stream: TcpStream, hub: &Hub) -> io::Result<()> {
    stream.set_nodelay(true)?;
    let mut writer = stream.try_clone()?;
    let mut reader = BufReader::new(stream);
    let mut line = Vec::with_capacity(256);
    loop {
        line.clear();
        let n = (&mut reader).take(MAX_LINE as u64 + 1).read_until(b'\n', &mut line)?;
        if n == 0 {
            return Ok(());
        }
        let reply = if line.len() > MAX_LINE {
            // drain the remainder of the oversized line
            let mut sink = Vec::new();
            if line.last() != Some(&b'\n') {
                reader.read_until(b'\n', &mut sink)?;
            }
            Reply::Err {
                code: "malformed".into(),
            }
        } else if line.iter().all(u8::is_ascii_whitespace) {
            continue;
        } else {
            hub.handle_line(&line)
        };
        writer.write_all(reply.to_line().as_bytes())?;
    }
}

#[cfg(test)]
mod tests {
    use super::super::{HubConfig, NodeKind, WireFrame};
    use super::*;

    #[test]
    fn session_round_trip() {
        let hub = Arc::new(Hub::new(HubConfig::new("t")));
        let server = GatewayServer::bind("127.0.0.1:0", hub.clone()).unwrap();
        let addr = server.local_addr().unwrap();
        let (stop, join) = server.spawn().unwrap();

        let mut conn = TcpStream::connect(addr).unwrap();
        let mut replies = BufReader::new(conn.try_clone().unwrap());
        let mut ask = |line: &str| {
            conn.write_all(line.as_bytes()).unwrap();
            let mut r = String::new();
            replies.read_line(&mut r).unwrap();
            Reply::parse(&r).unwrap()
        };
        assert_eq!(ask(&WireFrame::register("w-01", NodeKind::Wearable, "t").to_line()), Reply::Ok { seq: 0 });
        assert_eq!(
            ask(&WireFrame::wearable("w-01", 1.0, 70.0, 2.0, 0.5, 1.2, "t").to_line()),
            Reply::Ok { seq: 1 }
        );
        assert_eq!(ask("{\"v\":1,\"op\n"), Reply::Err { code: "malformed".into() });
        assert_eq!(
            ask(&WireFrame::wearable("w-01", 1.0, 70.0, 2.0, 0.5, 1.2, "t").to_line()),
            Reply::Err { code: "stale_timestamp".into() }
        );
        assert_eq!(
            ask(&WireFrame::wearable("w-01", 2.0, 70.0, 2.0, 0.5, 1.2, "t").to_line()),
            Reply::Ok { seq: 2 }
        );
        let big = format!("{}\n", "x".repeat(MAX_LINE + 10));
        assert_eq!(ask(&big), Reply::Err { code: "malformed".into() });
        assert_eq!(
            ask(&WireFrame::wearable("w-01", 3.0, 70.0, 2.0, 0.5, 1.2, "t").to_line()),
            Reply::Ok { seq: 3 }
        );
        stop.shutdown();
        join.join().unwrap().unwrap();
        assert_eq!(hub.total_samples(), 3);
    }
}
