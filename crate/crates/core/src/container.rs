//! Binary index container.
//!
//! Layout, all integers little-endian and fixed width:
//!
//! ```text
//! magic       6 bytes  "RBIDX1"
//! version     u16
//! method      u8       1 = ch, 2 = tnr, 3 = silc, 4 = pcpd
//! fingerprint u64      RoadNetwork::fingerprint of the indexed graph
//! payload     method specific
//! ```
//!
//! Loading checks the fingerprint against the supplied graph, so an index
//! cannot silently be used with a different network.

use std::fmt;
use std::path::Path as FsPath;
use std::str::FromStr;

use thiserror::Error;

use crate::ch::{ChEngine, ChIndex};
use crate::graph::RoadNetwork;
use crate::pcpd::{PcpdEngine, PcpdIndex};
use crate::silc::{SilcEngine, SilcIndex};
use crate::tnr::{TnrEngine, TnrIndex};
use crate::QueryEngine;

pub const MAGIC: &[u8; 6] = b"RBIDX1";
pub const VERSION: u16 = 1;

#[derive(Debug, Error)]
pub enum ContainerError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("not an index container (bad magic)")]
    BadMagic,
    #[error("unsupported container version {0}")]
    UnsupportedVersion(u16),
    #[error("unknown method tag {0}")]
    UnknownMethod(u8),
    #[error("graph fingerprint mismatch: index built for {expected:016x}, graph is {found:016x}")]
    FingerprintMismatch { expected: u64, found: u64 },
    #[error("container truncated")]
    Truncated,
    #[error("{0} trailing bytes after payload")]
    TrailingBytes(usize),
    #[error("invalid payload: {0}")]
    Payload(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    Ch = 1,
    Tnr = 2,
    Silc = 3,
    Pcpd = 4,
}

impl Method {
    pub fn tag(self) -> u8 {
        self as u8
    }

    pub fn from_tag(tag: u8) -> Result<Self, ContainerError> {
        match tag {
            1 => Ok(Method::Ch),
            2 => Ok(Method::Tnr),
            3 => Ok(Method::Silc),
            4 => Ok(Method::Pcpd),
            t => Err(ContainerError::UnknownMethod(t)),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Method::Ch => "ch",
            Method::Tnr => "tnr",
            Method::Silc => "silc",
            Method::Pcpd => "pcpd",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "ch" => Ok(Method::Ch),
            "tnr" => Ok(Method::Tnr),
            "silc" => Ok(Method::Silc),
            "pcpd" => Ok(Method::Pcpd),
            other => Err(format!("unknown method `{other}` (expected ch, tnr, silc or pcpd)")),
        }
    }
}

#[derive(Default)]
pub struct ByteWriter {
    buf: Vec<u8>,
}

impl ByteWriter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn u8(&mut self, x: u8) {
        self.buf.push(x);
    }

    pub fn u16(&mut self, x: u16) {
        self.buf.extend_from_slice(&x.to_le_bytes());
    }

    pub fn u32(&mut self, x: u32) {
        self.buf.extend_from_slice(&x.to_le_bytes());
    }

    pub fn u64(&mut self, x: u64) {
        self.buf.extend_from_slice(&x.to_le_bytes());
    }

    pub fn i64(&mut self, x: i64) {
        self.buf.extend_from_slice(&x.to_le_bytes());
    }

    pub fn bytes(&mut self, b: &[u8]) {
        self.buf.extend_from_slice(b);
    }

    pub fn len(&self) -> usize {
        self.buf.len()
    }

    pub fn is_empty(&self) -> bool {
        self.buf.is_empty()
    }

    pub fn into_inner(self) -> Vec<u8> {
        self.buf
    }
}

pub struct ByteReader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> ByteReader<'a> {
    pub fn new(buf: &'a [u8]) -> Self {
        ByteReader { buf, pos: 0 }
    }

    fn take<const N: usize>(&mut self) -> Result<[u8; N], ContainerError> {
        let end = self.pos.checked_add(N).ok_or(ContainerError::Truncated)?;
        let slice = self.buf.get(self.pos..end).ok_or(ContainerError::Truncated)?;
        self.pos = end;
        Ok(slice.try_into().expect("slice has length N"))
    }

    pub fn u8(&mut self) -> Result<u8, ContainerError> {
        Ok(self.take::<1>()?[0])
    }

    pub fn u16(&mut self) -> Result<u16, ContainerError> {
        self.take().map(u16::from_le_bytes)
    }

    pub fn u32(&mut self) -> Result<u32, ContainerError> {
        self.take().map(u32::from_le_bytes)
    }

    pub fn u64(&mut self) -> Result<u64, ContainerError> {
        self.take().map(u64::from_le_bytes)
    }

    pub fn i64(&mut self) -> Result<i64, ContainerError> {
        self.take().map(i64::from_le_bytes)
    }

    /// Reads a count and checks that at least `count * min_bytes` remain,
    /// so corrupt counts fail before allocating.
    pub fn count(&mut self, min_bytes: usize) -> Result<usize, ContainerError> {
        let c = self.u64()? as usize;
        if c.saturating_mul(min_bytes) > self.remaining() {
            return Err(ContainerError::Truncated);
        }
        Ok(c)
    }

    pub fn remaining(&self) -> usize {
        self.buf.len() - self.pos
    }
}

/// Any built index.
#[derive(Clone, Debug)]
pub enum Index {
    Ch(ChIndex),
    Tnr(TnrIndex),
    Silc(SilcIndex),
    Pcpd(PcpdIndex),
}

impl Index {
    pub fn method(&self) -> Method {
        match self {
            Index::Ch(_) => Method::Ch,
            Index::Tnr(_) => Method::Tnr,
            Index::Silc(_) => Method::Silc,
            Index::Pcpd(_) => Method::Pcpd,
        }
    }

    /// A fresh query engine over this index.
    pub fn engine<'a>(&'a self, net: &'a RoadNetwork) -> Box<dyn QueryEngine + 'a> {
        match self {
            Index::Ch(idx) => Box::new(ChEngine::new(idx, net)),
            Index::Tnr(idx) => Box::new(TnrEngine::new(idx, net)),
            Index::Silc(idx) => Box::new(SilcEngine::new(idx, net)),
            Index::Pcpd(idx) => Box::new(PcpdEngine::new(idx, net)),
        }
    }

    pub fn to_bytes(&self, net: &RoadNetwork) -> Vec<u8> {
        let mut w = ByteWriter::new();
        w.bytes(MAGIC);
        w.u16(VERSION);
        w.u8(self.method().tag());
        w.u64(net.fingerprint());
        match self {
            Index::Ch(idx) => idx.write_payload(&mut w),
            Index::Tnr(idx) => idx.write_payload(&mut w),
            Index::Silc(idx) => idx.write_payload(&mut w),
            Index::Pcpd(idx) => idx.write_payload(&mut w),
        }
        w.into_inner()
    }

    pub fn from_bytes(bytes: &[u8], net: &RoadNetwork) -> Result<Self, ContainerError> {
        let mut r = ByteReader::new(bytes);
        let mut magic = [0u8; 6];
        for b in &mut magic {
            *b = r.u8().map_err(|_| ContainerError::BadMagic)?;
        }
        if &magic != MAGIC {
            return Err(ContainerError::BadMagic);
        }
        let version = r.u16()?;
        if version != VERSION {
            return Err(ContainerError::UnsupportedVersion(version));
        }
        let method = Method::from_tag(r.u8()?)?;
        let expected = r.u64()?;
        let found = net.fingerprint();
        if expected != found {
            return Err(ContainerError::FingerprintMismatch { expected, found });
        }
        let idx = match method {
            Method::Ch => Index::Ch(ChIndex::read_payload(&mut r)?),
            Method::Tnr => Index::Tnr(TnrIndex::read_payload(&mut r, net)?),
            Method::Silc => Index::Silc(SilcIndex::read_payload(&mut r, net)?),
            Method::Pcpd => Index::Pcpd(PcpdIndex::read_payload(&mut r, net)?),
        };
        if r.remaining() != 0 {
            return Err(ContainerError::TrailingBytes(r.remaining()));
        }
        Ok(idx)
    }

    pub fn store(&self, net: &RoadNetwork, path: impl AsRef<FsPath>) -> Result<usize, ContainerError> {
        let bytes = self.to_bytes(net);
        std::fs::write(path, &bytes)?;
        Ok(bytes.len())
    }

    pub fn load(path: impl AsRef<FsPath>, net: &RoadNetwork) -> Result<Self, ContainerError> {
        let bytes = std::fs::read(path)?;
        Self::from_bytes(&bytes, net)
    }
}
