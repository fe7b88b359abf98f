//! Minimal HTTP stub shared by the integration suites: just enough of the
//! protocol to stand in for a scoring service on 127.0.0.1.

#![allow(dead_code)]

use std::io::{Read, Write};
use std::net::{TcpListener, TcpStream};
use std::thread::{self, JoinHandle};

/// Serves `expected` requests, answering each POST body through `respond`,
/// then shuts down. Returns the base URL and the server handle.
pub fn spawn_stub<F>(expected: usize, respond: F) -> (String, JoinHandle<()>)
where
    F: Fn(&str) -> String + Send + 'static,
{
    let listener = TcpListener::bind("127.0.0.1:0").expect("bind stub listener");
    let url = format!("http://{}", listener.local_addr().expect("stub addr"));
    let handle = thread::spawn(move || {
        for _ in 0..expected {
            let (mut stream, _) = listener.accept().expect("accept");
            let body = read_request(&mut stream);
            let response = respond(&body);
            stream
                .write_all(response.as_bytes())
                .expect("write response");
        }
    });
    (url, handle)
}

fn read_request(stream: &mut TcpStream) -> String {
    let mut buf = Vec::new();
    let mut chunk = [0u8; 1024];
    let header_end = loop {
        let n = stream.read(&mut chunk).expect("read request");
        assert!(n > 0, "connection closed before headers");
        buf.extend_from_slice(&chunk[..n]);
        if let Some(pos) = buf.windows(4).position(|w| w == b"\r\n\r\n") {
            break pos;
        }
    };
    let headers = String::from_utf8_lossy(&buf[..header_end]).to_string();
    let content_length: usize = headers
        .lines()
        .find_map(|line| {
            let (name, value) = line.split_once(':')?;
            if name.eq_ignore_ascii_case("content-length") {
                value.trim().parse().ok()
            } else {
                None
            }
        })
        .expect("content-length header");
    let body_start = header_end + 4;
    while buf.len() < body_start + content_length {
        let n = stream.read(&mut chunk).expect("read body");
        assert!(n > 0, "connection closed before body");
        buf.extend_from_slice(&chunk[..n]);
    }
    String::from_utf8(buf[body_start..body_start + content_length].to_vec()).expect("utf8 body")
}

pub fn http_json(body: &str) -> String {
    format!(
        "HTTP/1.1 200 OK\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
        body.len(),
    )
}

/// Backend outputs with cosine similarity 1 and certainty `2a - 1`, so the
/// alignment score computed from them is exactly `a`.
pub fn outputs_with_alignment(a: f64) -> serde_json::Value {
    let hidden: Vec<f64> = std::iter::once(1.0)
        .chain(std::iter::repeat_n(0.0, 7))
        .collect();
    serde_json::json!({
        "token_logprobs": [(2.0 * a - 1.0).ln()],
        "nl_hidden": hidden,
        "fl_hidden": hidden,
        "model_id": "stub",
    })
}
