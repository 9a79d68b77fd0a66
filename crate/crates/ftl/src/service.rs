//! Loopback TCP service exposing the log.
//!
//! Framing is a big-endian u32 length followed by that many bytes of UTF-8
//! text; one request frame gets one response frame per round trip, and a
//! connection can carry any number of round trips. Request and response
//! bodies reuse the canonical record lines from [`crate::codec`].
//!
//! Requests:
//!   `epoch`                    -> `epoch value=<E>`
//!   `root`                     -> signed root line for the current epoch
//!   `meta name=<n>`            -> publish line reflecting committed metadata
//!   `prove name=<n>`           -> proof line for the current epoch
//!   `advance`                  -> signed root line for the new epoch
//!   `approve msg=<hex>`        -> `approvals value=<...>` (demo signing)
//!   any publish/withdraw/protest line -> `ok` / `err msg=<...>`

use crate::codec::{self, Record};
use crate::log::Ftl;
use crate::store::Store;
use std::io::{self, Read, Write};
use std::net::{TcpListener, TcpStream, ToSocketAddrs};

pub const MAX_FRAME: u32 = 1 << 20;

pub fn write_frame(stream: &mut TcpStream, body: &str) -> io::Result<()> {
    let bytes = body.as_bytes();
    if bytes.len() as u64 > MAX_FRAME as u64 {
        return Err(io::Error::new(io::ErrorKind::InvalidInput, "frame too big"));
    }
    stream.write_all(&(bytes.len() as u32).to_be_bytes())?;
    stream.write_all(bytes)
}

pub fn read_frame(stream: &mut TcpStream) -> io::Result<Option<String>> {
    let mut len = [0u8; 4];
    match stream.read_exact(&mut len) {
        Ok(()) => {}
        Err(e) if e.kind() == io::ErrorKind::UnexpectedEof => return Ok(None),
        Err(e) => return Err(e),
    }
    let len = u32::from_be_bytes(len);
    if len > MAX_FRAME {
        return Err(io::Error::new(io::ErrorKind::InvalidData, "frame too big"));
    }
    let mut body = vec![0u8; len as usize];
    stream.read_exact(&mut body)?;
    String::from_utf8(body)
        .map(Some)
        .map_err(|_| io::Error::new(io::ErrorKind::InvalidData, "frame is not UTF-8"))
}

/// One client round trip.
pub fn request(addr: impl ToSocketAddrs, line: &str) -> io::Result<String> {
    let mut stream = TcpStream::connect(addr)?;
    write_frame(&mut stream, line)?;
    read_frame(&mut stream)?
        .ok_or_else(|| io::Error::new(io::ErrorKind::UnexpectedEof, "service closed connection"))
}

pub struct Service {
    ftl: Ftl,
    store: Option<Store>,
}

impl Service {
    pub fn new(ftl: Ftl, store: Option<Store>) -> Self {
        Service { ftl, store }
    }

    pub fn ftl(&self) -> &Ftl {
        &self.ftl
    }

    fn persist(&self, line: &str) -> io::Result<()> {
        match &self.store {
            Some(store) => store.append(line),
            None => Ok(()),
        }
    }

    pub fn handle(&mut self, line: &str) -> String {
        match self.try_handle(line) {
            Ok(response) => response,
            Err(msg) => format!("err msg={}", msg.replace(' ', "_")),
        }
    }

    fn try_handle(&mut self, line: &str) -> Result<String, String> {
        let line = line.trim();
        let (verb, rest) = line.split_once(' ').unwrap_or((line, ""));
        match verb {
            "epoch" => Ok(format!("epoch value={}", self.ftl.current_epoch())),
            "root" => Ok(codec::encode_root(&self.ftl.signed_root())),
            "advance" => {
                let root = self.ftl.advance_epoch();
                self.persist(&codec::encode_advance(root.epoch))
                    .map_err(|e| e.to_string())?;
                if let Some(store) = &self.store {
                    store
                        .write_root(root.epoch, &codec::encode_root(&root))
                        .map_err(|e| e.to_string())?;
                }
                Ok(codec::encode_root(&root))
            }
            "meta" => {
                let name = field(rest, "name").ok_or("missing name")?;
                let meta = self.ftl.meta(name).ok_or("not published")?;
                let mut out = format!(
                    "meta name={} e_protest={} e_push={} plugin_hash={} protests={} withdrawn={}",
                    meta.name,
                    meta.e_protest,
                    meta.e_push,
                    hex::encode(meta.plugin_hash),
                    meta.protests.len(),
                    meta.withdraw.is_some(),
                );
                if let Some(w) = &meta.withdraw {
                    out.push_str(&format!(" withdraw_push_epoch={}", w.push_epoch));
                }
                Ok(out)
            }
            "prove" => {
                let name = field(rest, "name").ok_or("missing name")?;
                let proof = self.ftl.prove(name).ok_or("not in current tree")?;
                Ok(codec::encode_proof(&proof))
            }
            "approve" => {
                let msg_hex = field(rest, "msg").ok_or("missing msg")?;
                let msg = hex::decode(msg_hex).map_err(|_| "bad msg hex")?;
                let approvals = self.ftl.approve_as_authorities(&msg);
                let text = approvals
                    .iter()
                    .map(|a| format!("{}:{}", a.signer, hex::encode(a.sig)))
                    .collect::<Vec<_>>()
                    .join(",");
                Ok(format!("approvals value={text}"))
            }
            "publish" | "withdraw" | "protest" => {
                let record = codec::parse_record(line).map_err(|e| e.to_string())?;
                match record {
                    Record::Publish(o) => {
                        self.ftl.submit_publish(o).map_err(|e| e.to_string())?
                    }
                    Record::Withdraw(o) => {
                        self.ftl.submit_withdraw(o).map_err(|e| e.to_string())?
                    }
                    Record::Protest(p) => {
                        self.ftl.submit_protest(p).map_err(|e| e.to_string())?;
                    }
                    _ => unreachable!("verb restricted above"),
                }
                self.persist(line).map_err(|e| e.to_string())?;
                Ok("ok".to_string())
            }
            other => Err(format!("unknown request {other}")),
        }
    }

    /// Serves connections until the listener fails. Connections are handled
    /// one at a time; the log is strictly serialized.
    pub fn serve(mut self, listener: TcpListener) -> io::Result<()> {
        for stream in listener.incoming() {
            let mut stream = stream?;
            while let Some(line) = read_frame(&mut stream)? {
                let response = self.handle(&line);
                write_frame(&mut stream, &response)?;
            }
        }
        Ok(())
    }
}

fn field<'a>(rest: &'a str, key: &str) -> Option<&'a str> {
    rest.split(' ')
        .filter_map(|tok| tok.split_once('='))
        .find(|(k, _)| *k == key)
        .map(|(_, v)| v)
}
