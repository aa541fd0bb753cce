//! Static file server for the viewer assets and `viz/` bundles.

use std::io::{self, BufRead, BufReader, Write};
use std::net::{SocketAddr, TcpListener, TcpStream, ToSocketAddrs};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::thread;

use super::viz::{write_index, VIZ_INDEX};

const PLACEHOLDER: &str = "<!doctype html>\n<html><head><meta charset=\"utf-8\"><title>gazeattn</title></head>\n<body><p>No viewer assets configured. Bundles are listed at <a href=\"/viz/index.json\">/viz/index.json</a>.</p></body></html>\n";

struct Roots {
    viz: PathBuf,
    assets: Option<PathBuf>,
}

pub struct Server {
    listener: TcpListener,
    roots: Arc<Roots>,
}

impl Server {
    /// Binds to `addr`. `viz_dir` holds the exported bundles; `assets` is
    /// the viewer build served at the root.
    pub fn bind(addr: impl ToSocketAddrs, viz_dir: impl Into<PathBuf>, assets: Option<PathBuf>) -> io::Result<Server> {
        Ok(Server {
            listener: TcpListener::bind(addr)?,
            roots: Arc::new(Roots {
                viz: viz_dir.into(),
                assets,
            }),
        })
    }

    pub fn local_addr(&self) -> io::Result<SocketAddr> {
        self.listener.local_addr()
    }

    /// Accepts connections until the listener fails, one thread each.
    pub fn serve_forever(self) -> io::Result<()> {
        for stream in self.listener.incoming() {
            let stream = match stream {
                Ok(s) => s,
                Err(e) => {
                    log::warn!("accept failed: {e}");
                    continue;
                }
            };
            let roots = Arc::clone(&self.roots);
            thread::spawn(move || {
                if let Err(e) = handle(stream, &roots) {
                    log::debug!("connection error: {e}");
                }
            });
        }
        Ok(())
    }
}

struct Response {
    status: &'static str,
    content_type: &'static str,
    body: Vec<u8>,
}

impl Response {
    fn error(status: &'static str) -> Self {
        Response {
            status,
            content_type: "text/plain; charset=utf-8",
            body: format!("{status}\n").into_bytes(),
        }
    }
}

fn handle(stream: TcpStream, roots: &Roots) -> io::Result<()> {
    let mut reader = BufReader::new(stream.try_clone()?);
    let mut request_line = String::new();
    reader.read_line(&mut request_line)?;
    loop {
        let mut header = String::new();
        if reader.read_line(&mut header)? == 0 || header.trim().is_empty() {
            break;
        }
    }
    let mut parts = request_line.split_whitespace();
    let method = parts.next().unwrap_or("");
    let target = parts.next().unwrap_or("/");
    let response = match method {
        "GET" | "HEAD" => route(target, roots),
        _ => Response::error("405 Method Not Allowed"),
    };
    let mut out = stream;
    write!(
        out,
        "HTTP/1.1 {}\r\nContent-Type: {}\r\nContent-Length: {}\r\nConnection: close\r\n\r\n",
        response.status,
        response.content_type,
        response.body.len()
    )?;
    if method != "HEAD" {
        out.write_all(&response.body)?;
    }
    out.flush()
}

fn route(target: &str, roots: &Roots) -> Response {
    let path = target.split(['?', '#']).next().unwrap_or("/");
    let Some(segments) = clean_segments(path) else {
        return Response::error("400 Bad Request");
    };
    match segments.as_slice() {
        [] => match &roots.assets {
            Some(dir) if dir.join("index.html").is_file() => file_response(&dir.join("index.html")),
            _ => Response {
                status: "200 OK",
                content_type: "text/html; charset=utf-8",
                body: PLACEHOLDER.as_bytes().to_vec(),
            },
        },
        [viz, name] if viz == "viz" && name == VIZ_INDEX => match write_index(&roots.viz) {
            Ok(body) => Response {
                status: "200 OK",
                content_type: "application/json",
                body: body.into_bytes(),
            },
            Err(_) => Response::error("404 Not Found"),
        },
        [viz, rest @ ..] if viz == "viz" => file_response(&join(&roots.viz, rest)),
        rest => match &roots.assets {
            Some(dir) => file_response(&join(dir, rest)),
            None => Response::error("404 Not Found"),
        },
    }
}

/// Decoded path segments, or `None` when the path tries to leave the root.
fn clean_segments(path: &str) -> Option<Vec<String>> {
    let decoded = percent_decode(path)?;
    let mut out = Vec::new();
    for seg in decoded.split('/') {
        match seg {
            "" | "." => continue,
            ".." => return None,
            s if s.contains('\\') || s.contains('\0') => return None,
            s => out.push(s.to_string()),
        }
    }
    Some(out)
}

fn percent_decode(s: &str) -> Option<String> {
    let bytes = s.as_bytes();
    let mut out = Vec::with_capacity(bytes.len());
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i] == b'%' {
            let hex = s.get(i + 1..i + 3)?;
            out.push(u8::from_str_radix(hex, 16).ok()?);
            i += 3;
        } else {
            out.push(bytes[i]);
            i += 1;
        }
    }
    String::from_utf8(out).ok()
}

fn join(root: &Path, segments: &[String]) -> PathBuf {
    let mut p = root.to_path_buf();
    for s in segments {
        p.push(s);
    }
    p
}

fn content_type(path: &Path) -> &'static str {
    match path.extension().and_then(|e| e.to_str()) {
        Some("html") => "text/html; charset=utf-8",
        Some("js" | "mjs") => "text/javascript",
        Some("css") => "text/css",
        Some("json") => "application/json",
        Some("svg") => "image/svg+xml",
        Some("png") => "image/png",
        Some("ico") => "image/x-icon",
        _ => "application/octet-stream",
    }
}

fn file_response(path: &Path) -> Response {
    match std::fs::read(path) {
        Ok(body) if path.is_file() => Response {
            status: "200 OK",
            content_type: content_type(path),
            body,
        },
        _ => Response::error("404 Not Found"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_traversal() {
        assert_eq!(clean_segments("/viz/../secret"), None);
        assert_eq!(clean_segments("/viz/%2e%2e/secret"), None);
        assert_eq!(clean_segments("/a%5cb"), None);
        assert_eq!(clean_segments("/viz//d01.json").unwrap(), vec!["viz", "d01.json"]);
        assert_eq!(clean_segments("/").unwrap(), Vec::<String>::new());
    }
}
