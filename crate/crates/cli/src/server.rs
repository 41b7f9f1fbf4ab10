//! TCP (line-delimited JSON) and WebSocket transports. Every connection
//! runs on its own thread with its own [`Session`].

use std::io::{self, BufRead, BufReader, Write};
use std::net::{SocketAddr, TcpListener, TcpStream};
use std::path::PathBuf;
use std::thread;

use tungstenite::Message;

use crate::protocol::{hello, Session};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Transport {
    Tcp,
    WebSocket,
}

pub const DEFAULT_PORT: u16 = 1042;

pub struct Server {
    listener: TcpListener,
    transport: Transport,
    root: Option<PathBuf>,
}

impl Server {
    pub fn bind(addr: impl Into<SocketAddr>, transport: Transport, root: Option<PathBuf>) -> io::Result<Self> {
        Ok(Server {
            listener: TcpListener::bind(addr.into())?,
            transport,
            root,
        })
    }

    pub fn local_addr(&self) -> io::Result<SocketAddr> {
        self.listener.local_addr()
    }

    /// Accept clients until the listener fails.
    pub fn run(self) -> io::Result<()> {
        for stream in self.listener.incoming() {
            let stream = match stream {
                Ok(s) => s,
                Err(e) => {
                    eprintln!("accept failed: {e}");
                    continue;
                }
            };
            let session = Session::new(self.root.clone());
            let transport = self.transport;
            thread::spawn(move || {
                let peer = stream.peer_addr().ok();
                let outcome = match transport {
                    Transport::Tcp => serve_tcp(stream, session),
                    Transport::WebSocket => serve_ws(stream, session),
                };
                if let Err(e) = outcome {
                    eprintln!("client {peer:?}: {e}");
                }
            });
        }
        Ok(())
    }

    /// Run on a background thread and return the bound address.
    pub fn spawn(self) -> io::Result<SocketAddr> {
        let addr = self.local_addr()?;
        thread::spawn(move || self.run());
        Ok(addr)
    }
}

fn serve_tcp(stream: TcpStream, mut session: Session) -> io::Result<()> {
    let mut writer = stream.try_clone()?;
    writeln!(writer, "{}", hello())?;
    for line in BufReader::new(stream).lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let response = session.handle_text(&line);
        writeln!(writer, "{response}")?;
    }
    Ok(())
}

fn serve_ws(stream: TcpStream, mut session: Session) -> io::Result<()> {
    let mut ws = tungstenite::accept(stream).map_err(io::Error::other)?;
    ws.send(Message::text(hello().to_string())).map_err(io::Error::other)?;
    loop {
        let msg = match ws.read() {
            Ok(m) => m,
            Err(tungstenite::Error::ConnectionClosed | tungstenite::Error::AlreadyClosed) => return Ok(()),
            Err(e) => return Err(io::Error::other(e)),
        };
        let text = match msg {
            Message::Text(t) => t.to_string(),
            Message::Binary(b) => String::from_utf8_lossy(&b).into_owned(),
            Message::Close(_) => return Ok(()),
            _ => continue,
        };
        let response = session.handle_text(&text);
        ws.send(Message::text(response.to_string())).map_err(io::Error::other)?;
    }
}
