//! Binary PGM (P5) label maps and PPM (P6) visualizations.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

/// Writes 16-bit big-endian samples with maxval 65535.
pub fn write_pgm16(path: impl AsRef<Path>, width: usize, height: usize, samples: &[u16]) -> Result<()> {
    let path = path.as_ref();
    assert_eq!(samples.len(), width * height);
    let mut bytes = format!("P5\n{width} {height}\n65535\n").into_bytes();
    bytes.reserve(samples.len() * 2);
    for s in samples {
        bytes.extend_from_slice(&s.to_be_bytes());
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn write_ppm(path: impl AsRef<Path>, width: usize, height: usize, rgb: &[[u8; 3]]) -> Result<()> {
    let path = path.as_ref();
    assert_eq!(rgb.len(), width * height);
    let mut bytes = format!("P6\n{width} {height}\n255\n").into_bytes();
    for px in rgb {
        bytes.extend_from_slice(px);
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Reads a binary PGM with either 8-bit or 16-bit samples.
pub fn read_pgm(path: impl AsRef<Path>) -> Result<(usize, usize, Vec<u16>)> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_pgm(&bytes)
}

pub fn decode_pgm(bytes: &[u8]) -> Result<(usize, usize, Vec<u16>)> {
    let mut pos = 0;
    let mut tokens = Vec::with_capacity(4);
    while tokens.len() < 4 {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if pos < bytes.len() && bytes[pos] == b'#' {
            while pos < bytes.len() && bytes[pos] != b'\n' {
                pos += 1;
            }
            continue;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(Error::Format("truncated PGM header".into()));
        }
        tokens.push(String::from_utf8_lossy(&bytes[start..pos]).into_owned());
    }
    // exactly one whitespace byte separates the header from the raster
    pos += 1;
    if tokens[0] != "P5" {
        return Err(Error::Format(format!("expected P5 magic, found {:?}", tokens[0])));
    }
    let parse = |t: &str| {
        t.parse::<usize>()
            .map_err(|_| Error::Format(format!("bad PGM header field {t:?}")))
    };
    let (width, height, maxval) = (parse(&tokens[1])?, parse(&tokens[2])?, parse(&tokens[3])?);
    if width == 0 || height == 0 || maxval == 0 || maxval > 65535 {
        return Err(Error::Format("invalid PGM dimensions or maxval".into()));
    }
    let n = width * height;
    let payload = bytes.get(pos..).unwrap_or(&[]);
    let samples = if maxval < 256 {
        if payload.len() < n {
            return Err(Error::Truncated { expected: n, found: payload.len() });
        }
        payload[..n].iter().map(|&b| b as u16).collect()
    } else {
        if payload.len() < 2 * n {
            return Err(Error::Truncated { expected: n, found: payload.len() / 2 });
        }
        payload[..2 * n]
            .chunks_exact(2)
            .map(|c| u16::from_be_bytes([c[0], c[1]]))
            .collect()
    };
    Ok((width, height, samples))
}
