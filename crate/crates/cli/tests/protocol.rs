use std::io::{BufRead, BufReader, Write};
use std::net::{SocketAddr, TcpStream};
use std::time::Duration;

use rdfg_cli::protocol::{hello, Request, Session};
use rdfg_cli::server::{Server, Transport};
use serde_json::{json, Value};

const REQUESTS: &str = include_str!("golden/requests.jsonl");
const RESPONSES: &str = include_str!("golden/responses.jsonl");

fn without_version(mut v: Value) -> Value {
    if let Some(m) = v.as_object_mut() {
        m.remove("version");
    }
    v
}

fn golden() -> Vec<Value> {
    RESPONSES
        .lines()
        .map(|l| without_version(serde_json::from_str(l).unwrap()))
        .collect()
}

fn check_transcript(actual: Vec<Value>) {
    let expected = golden();
    assert_eq!(actual.len(), expected.len());
    for (i, (a, e)) in actual.into_iter().zip(expected).enumerate() {
        assert_eq!(without_version(a), e, "message {i}");
    }
}

fn tcp_server() -> SocketAddr {
    let addr: SocketAddr = "127.0.0.1:0".parse().unwrap();
    Server::bind(addr, Transport::Tcp, None).unwrap().spawn().unwrap()
}

struct TcpClient {
    reader: BufReader<TcpStream>,
    writer: TcpStream,
}

impl TcpClient {
    fn connect(addr: SocketAddr) -> (Self, Value) {
        let stream = TcpStream::connect(addr).unwrap();
        stream.set_read_timeout(Some(Duration::from_secs(20))).unwrap();
        let mut c = TcpClient {
            writer: stream.try_clone().unwrap(),
            reader: BufReader::new(stream),
        };
        let hello = c.recv();
        (c, hello)
    }

    fn send(&mut self, line: &str) {
        writeln!(self.writer, "{line}").unwrap();
    }

    fn recv(&mut self) -> Value {
        let mut line = String::new();
        self.reader.read_line(&mut line).unwrap();
        serde_json::from_str(&line).unwrap()
    }

    fn call(&mut self, v: Value) -> Value {
        self.send(&v.to_string());
        self.recv()
    }
}

#[test]
fn golden_session_in_process() {
    let mut session = Session::default();
    let mut actual = vec![hello()];
    actual.extend(REQUESTS.lines().map(|l| session.handle_text(l)));
    check_transcript(actual);
}

#[test]
fn golden_session_over_tcp() {
    let (mut client, hello) = TcpClient::connect(tcp_server());
    let mut actual = vec![hello];
    for line in REQUESTS.lines() {
        client.send(line);
        actual.push(client.recv());
    }
    check_transcript(actual);
}

#[test]
fn golden_session_over_websocket() {
    let addr: SocketAddr = "127.0.0.1:0".parse().unwrap();
    let addr = Server::bind(addr, Transport::WebSocket, None).unwrap().spawn().unwrap();
    let (mut ws, _) = tungstenite::connect(format!("ws://{addr}")).unwrap();
    let read = |ws: &mut tungstenite::WebSocket<_>| -> Value {
        let msg = ws.read().unwrap();
        serde_json::from_str(msg.to_text().unwrap()).unwrap()
    };
    let mut actual = vec![read(&mut ws)];
    for line in REQUESTS.lines() {
        ws.send(tungstenite::Message::text(line)).unwrap();
        actual.push(read(&mut ws));
    }
    ws.close(None).unwrap();
    check_transcript(actual);
}

#[test]
fn requests_round_trip() {
    for line in REQUESTS.lines() {
        let Ok(original) = serde_json::from_str::<Value>(line) else { continue };
        let Ok(request) = serde_json::from_value::<Request>(original.clone()) else { continue };
        assert_eq!(serde_json::to_value(&request).unwrap(), original);
    }
    for line in RESPONSES.lines() {
        let v: Value = serde_json::from_str(line).unwrap();
        assert_eq!(serde_json::from_str::<Value>(&v.to_string()).unwrap(), v);
    }
}

#[test]
fn clients_have_isolated_sessions() {
    let addr = tcp_server();
    let (mut a, _) = TcpClient::connect(addr);
    let (mut b, _) = TcpClient::connect(addr);
    a.call(json!({"type": "file-analysis", "id": "a1", "content": "x <- 2"}));
    b.call(json!({"type": "file-analysis", "id": "b1", "content": "a <- 1\nb <- a\nc <- b"}));
    let ra = a.call(json!({"type": "slice", "id": "a2", "criteria": ["$2"]}));
    let rb = b.call(json!({"type": "slice", "id": "b2", "criteria": ["3@c"]}));
    assert_eq!(ra["ids"], json!([0, 1, 2]));
    assert_eq!(rb["lines"]["<text>"], json!([1, 2, 3]));
}

#[test]
fn pipelined_requests_keep_their_ids_in_order() {
    let (mut c, _) = TcpClient::connect(tcp_server());
    c.send(&json!({"type": "file-analysis", "id": "0", "content": "x <- 1\ny <- x + 1"}).to_string());
    for i in 1..20 {
        let msg = if i % 3 == 0 {
            json!({"type": "lint", "id": i.to_string()})
        } else {
            json!({"type": "slice", "id": i.to_string(), "criteria": ["2@y"]})
        };
        c.send(&msg.to_string());
    }
    for i in 0..20 {
        let r = c.recv();
        assert_eq!(r["id"], i.to_string());
        assert_ne!(r["type"], "error", "{r}");
    }
}

#[test]
fn server_survives_disconnects_and_bad_input() {
    let addr = tcp_server();
    {
        let (mut c, _) = TcpClient::connect(addr);
        c.send(r#"{"type":"file-analysis","id":"1","content":"x <- 1"}"#);
    }
    let (mut c, _) = TcpClient::connect(addr);
    assert_eq!(c.call(json!("just a string"))["type"], "error");
    c.send("not json");
    assert_eq!(c.recv()["type"], "error");
    let r = c.call(json!({"type": "file-analysis", "id": "2", "content": "x <- 1"}));
    assert_eq!(r["type"], "file-analysis-response");
}

#[test]
fn analysis_of_a_project_directory() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("a.R"), "x <- 1\n").unwrap();
    std::fs::write(dir.path().join("main.R"), "source(\"a.R\")\nprint(x)\n").unwrap();
    let mut s = Session::default();
    let r = s.handle(json!({"type": "file-analysis", "id": "1", "path": dir.path()}));
    assert_eq!(r["files"].as_array().unwrap().len(), 2, "{r}");
    let r = s.handle(json!({"type": "query", "id": "2", "queries": [{"type": "dependencies"}]}));
    assert_eq!(r["results"]["dependencies"]["reads"].as_array().unwrap().len(), 1, "{r}");
}
