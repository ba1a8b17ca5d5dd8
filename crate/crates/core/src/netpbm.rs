//! Binary netpbm codecs: PPM (P6) for images, PGM (P5) for label maps.

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

/// Decoded netpbm raster: `channels` samples per pixel, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Netpbm {
    pub width: usize,
    pub height: usize,
    pub maxval: u32,
    pub channels: usize,
    pub samples: Vec<u16>,
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Cursor<'_> {
    fn skip_space_and_comments(&mut self) {
        while self.pos < self.bytes.len() {
            match self.bytes[self.pos] {
                b'#' => {
                    while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                        self.pos += 1;
                    }
                }
                b if b.is_ascii_whitespace() => self.pos += 1,
                _ => break,
            }
        }
    }

    fn number(&mut self) -> Result<u32> {
        self.skip_space_and_comments();
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(Error::Format("expected a header integer".into()));
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::Format("header integer out of range".into()))
    }
}

/// Parses a binary PPM (`P6`) or PGM (`P5`) byte buffer.
pub fn decode(bytes: &[u8]) -> Result<Netpbm> {
    if bytes.len() < 2 || bytes[0] != b'P' {
        return Err(Error::Format("missing netpbm magic".into()));
    }
    let channels = match bytes[1] {
        b'6' => 3,
        b'5' => 1,
        other => {
            return Err(Error::Unsupported(format!(
                "netpbm variant P{}",
                other as char
            )))
        }
    };
    let mut cur = Cursor { bytes, pos: 2 };
    let width = cur.number()? as usize;
    let height = cur.number()? as usize;
    let maxval = cur.number()?;
    if width == 0 || height == 0 {
        return Err(Error::Format("zero image dimension".into()));
    }
    if maxval == 0 || maxval > 65535 {
        return Err(Error::Format(format!("maxval {maxval} out of range")));
    }
    // exactly one whitespace byte separates the header from the raster
    if cur.pos >= bytes.len() || !bytes[cur.pos].is_ascii_whitespace() {
        return Err(Error::Format("missing header terminator".into()));
    }
    cur.pos += 1;
    let bytes_per_sample = if maxval > 255 { 2 } else { 1 };
    let count = width * height * channels;
    let data = &bytes[cur.pos..];
    if data.len() < count * bytes_per_sample {
        return Err(Error::Format(format!(
            "truncated raster: need {} bytes, have {}",
            count * bytes_per_sample,
            data.len()
        )));
    }
    let samples = if bytes_per_sample == 1 {
        data[..count].iter().map(|&b| b as u16).collect()
    } else {
        data[..2 * count]
            .chunks_exact(2)
            .map(|c| u16::from_be_bytes([c[0], c[1]]))
            .collect()
    };
    Ok(Netpbm {
        width,
        height,
        maxval,
        channels,
        samples,
    })
}

pub fn read(path: &Path) -> Result<Netpbm> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes)
}

/// Encodes a raster as binary netpbm; 16-bit big-endian when `maxval > 255`.
pub fn encode(img: &Netpbm) -> Vec<u8> {
    let magic = if img.channels == 3 { "P6" } else { "P5" };
    let mut out = format!("{magic}\n{} {}\n{}\n", img.width, img.height, img.maxval).into_bytes();
    if img.maxval > 255 {
        for &s in &img.samples {
            out.extend_from_slice(&s.to_be_bytes());
        }
    } else {
        out.extend(img.samples.iter().map(|&s| s as u8));
    }
    out
}

/// Writes `bytes` to `path` through a temporary sibling so readers never see
/// a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension(format!(
        "{}.tmp",
        path.extension().and_then(|e| e.to_str()).unwrap_or("")
    ));
    let mut f = std::fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
    f.write_all(bytes).map_err(|e| Error::io(&tmp, e))?;
    f.sync_all().map_err(|e| Error::io(&tmp, e))?;
    drop(f);
    std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decodes_header_with_comments() {
        let mut bytes = b"P6\n# made by hand\n1 1\n255\n".to_vec();
        bytes.extend_from_slice(&[255, 0, 0]);
        let img = decode(&bytes).unwrap();
        assert_eq!((img.width, img.height, img.channels), (1, 1, 3));
        assert_eq!(img.samples, vec![255, 0, 0]);
    }

    #[test]
    fn sixteen_bit_pgm_roundtrip() {
        let img = Netpbm {
            width: 3,
            height: 1,
            maxval: 65535,
            channels: 1,
            samples: vec![0, 300, 65535],
        };
        assert_eq!(decode(&encode(&img)).unwrap(), img);
    }

    #[test]
    fn rejects_truncated_and_ascii_variants() {
        assert!(matches!(decode(b"P6\n2 2\n255\n\0\0"), Err(Error::Format(_))));
        assert!(matches!(decode(b"P3\n1 1\n255\n0 0 0"), Err(Error::Unsupported(_))));
    }
}
