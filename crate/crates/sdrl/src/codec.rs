//! Little-endian binary encoding shared by the snapshot and checkpoint files.
//!
//! A file is `magic (8 bytes) | version (u32) | body | sha256(previous bytes)`.
//! Strings are a `u64` byte length followed by UTF-8; `f64` values are
//! stored as their IEEE-754 bit patterns so round trips are exact.

use std::fs;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub const DIGEST_LEN: usize = 32;

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

pub fn file_sha256(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(sha256_hex(&bytes))
}

/// Writes through a sibling temporary file so readers never see a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = std::path::PathBuf::from(tmp);
    fs::write(&tmp, bytes).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

pub struct Encoder {
    buf: Vec<u8>,
}

impl Encoder {
    pub fn new(magic: &[u8; 8], version: u32) -> Self {
        let mut e = Self { buf: Vec::new() };
        e.buf.extend_from_slice(magic);
        e.u32(version);
        e
    }

    pub fn u8(&mut self, v: u8) {
        self.buf.push(v);
    }

    pub fn u32(&mut self, v: u32) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    pub fn u64(&mut self, v: u64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    pub fn usize(&mut self, v: usize) {
        self.u64(v as u64);
    }

    pub fn f64(&mut self, v: f64) {
        self.buf.extend_from_slice(&v.to_bits().to_le_bytes());
    }

    pub fn str(&mut self, s: &str) {
        self.usize(s.len());
        self.buf.extend_from_slice(s.as_bytes());
    }

    pub fn f64s(&mut self, values: &[f64]) {
        self.usize(values.len());
        for &v in values {
            self.f64(v);
        }
    }

    /// Appends the digest trailer and returns the file bytes.
    pub fn finish(mut self) -> Vec<u8> {
        let digest = Sha256::digest(&self.buf);
        self.buf.extend_from_slice(&digest);
        self.buf
    }
}

pub struct Decoder<'a> {
    path: &'a Path,
    body: &'a [u8],
    pos: usize,
}

impl<'a> Decoder<'a> {
    /// Checks length, digest, magic and version, in that order.
    pub fn open(path: &'a Path, bytes: &'a [u8], magic: &[u8; 8], version: u32) -> Result<Self> {
        if bytes.len() < 12 + DIGEST_LEN {
            return Err(Error::integrity(path, "file is truncated"));
        }
        let (content, digest) = bytes.split_at(bytes.len() - DIGEST_LEN);
        if Sha256::digest(content).as_slice() != digest {
            return Err(Error::integrity(path, "checksum mismatch (file is corrupt or truncated)"));
        }
        if &content[..8] != magic {
            return Err(Error::integrity(
                path,
                format!("not a {} file", String::from_utf8_lossy(magic)),
            ));
        }
        let found = u32::from_le_bytes(content[8..12].try_into().expect("4 bytes"));
        if found != version {
            return Err(Error::integrity(
                path,
                format!("unsupported format version {found} (this build reads version {version})"),
            ));
        }
        Ok(Self {
            path,
            body: content,
            pos: 12,
        })
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.body.len() - self.pos < n {
            return Err(Error::integrity(self.path, "unexpected end of data"));
        }
        let s = &self.body[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    pub fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    pub fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    pub fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    pub fn usize(&mut self) -> Result<usize> {
        let v = self.u64()?;
        usize::try_from(v).map_err(|_| Error::integrity(self.path, format!("length {v} does not fit in memory")))
    }

    /// A length that must be coverable by the remaining bytes at `unit` bytes each.
    fn len(&mut self, unit: usize) -> Result<usize> {
        let n = self.usize()?;
        if n.checked_mul(unit.max(1)).is_none_or(|b| b > self.body.len() - self.pos) {
            return Err(Error::integrity(self.path, format!("length {n} exceeds the file")));
        }
        Ok(n)
    }

    pub fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_bits(self.u64()?))
    }

    pub fn str(&mut self) -> Result<String> {
        let n = self.len(1)?;
        let bytes = self.take(n)?;
        String::from_utf8(bytes.to_vec()).map_err(|_| Error::integrity(self.path, "string is not UTF-8"))
    }

    pub fn f64s(&mut self) -> Result<Vec<f64>> {
        let n = self.len(8)?;
        (0..n).map(|_| self.f64()).collect()
    }

    /// A count of records each at least `min_record` bytes long.
    pub fn count(&mut self, min_record: usize) -> Result<usize> {
        self.len(min_record)
    }

    pub fn finish(self) -> Result<()> {
        if self.pos != self.body.len() {
            return Err(Error::integrity(self.path, "trailing bytes after the last record"));
        }
        Ok(())
    }

    pub fn error(&self, message: impl Into<String>) -> Error {
        Error::integrity(self.path, message)
    }
}
