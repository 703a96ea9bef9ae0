//! Image file formats: a minimal typed binary format and binary PGM.
//!
//! The binary format is the 4-byte magic `IMCL`, then little-endian `u32`
//! dtype code (0 float, 1 int, 2 uint, 3 uchar), width and height, then the
//! row-major pixel data in little-endian order.

use super::buffer::Buffer;
use super::value::Value;
use crate::frontend::ast::ScalarType;
use std::path::Path;
use thiserror::Error;

pub const MAGIC: &[u8; 4] = b"IMCL";

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}: malformed image file: {message}")]
    Format { path: String, message: String },
}

fn dtype_code(t: ScalarType) -> u32 {
    match t {
        ScalarType::Float => 0,
        ScalarType::Int => 1,
        ScalarType::Uint => 2,
        ScalarType::Uchar => 3,
    }
}

pub fn encode(b: &Buffer) -> Vec<u8> {
    let mut out = Vec::with_capacity(16 + b.len() * b.ty.size_bytes() as usize);
    out.extend_from_slice(MAGIC);
    for v in [dtype_code(b.ty), b.width as u32, b.height as u32] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    for v in &b.data {
        match v.convert(b.ty) {
            Value::F32(x) => out.extend_from_slice(&x.to_le_bytes()),
            Value::I32(x) => out.extend_from_slice(&x.to_le_bytes()),
            Value::U32(x) => out.extend_from_slice(&x.to_le_bytes()),
            Value::U8(x) => out.push(x),
        }
    }
    out
}

pub fn decode(bytes: &[u8]) -> Result<Buffer, String> {
    if bytes.len() < 16 || &bytes[..4] != MAGIC {
        return Err("missing IMCL header".into());
    }
    let word = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().unwrap());
    let ty = match word(4) {
        0 => ScalarType::Float,
        1 => ScalarType::Int,
        2 => ScalarType::Uint,
        3 => ScalarType::Uchar,
        c => return Err(format!("unknown dtype code {c}")),
    };
    let (width, height) = (word(8) as usize, word(12) as usize);
    let size = ty.size_bytes() as usize;
    let body = &bytes[16..];
    let expected = width.checked_mul(height).and_then(|n| n.checked_mul(size)).ok_or("image too large")?;
    if body.len() != expected {
        return Err(format!("expected {expected} data bytes for {width}x{height} {ty}, found {}", body.len()));
    }
    let data = body
        .chunks_exact(size)
        .map(|c| match ty {
            ScalarType::Float => Value::F32(f32::from_le_bytes(c.try_into().unwrap())),
            ScalarType::Int => Value::I32(i32::from_le_bytes(c.try_into().unwrap())),
            ScalarType::Uint => Value::U32(u32::from_le_bytes(c.try_into().unwrap())),
            ScalarType::Uchar => Value::U8(c[0]),
        })
        .collect();
    Ok(Buffer { ty, width, height, data })
}

/// Binary (`P5`) PGM with maxval ≤ 255, read as a uchar image.
pub fn decode_pgm(bytes: &[u8]) -> Result<Buffer, String> {
    let mut fields = Vec::new();
    let mut i = 0;
    while fields.len() < 4 {
        while i < bytes.len() && bytes[i].is_ascii_whitespace() {
            i += 1;
        }
        if i < bytes.len() && bytes[i] == b'#' {
            while i < bytes.len() && bytes[i] != b'\n' {
                i += 1;
            }
            continue;
        }
        let start = i;
        while i < bytes.len() && !bytes[i].is_ascii_whitespace() {
            i += 1;
        }
        if start == i {
            return Err("truncated PGM header".into());
        }
        fields.push(String::from_utf8_lossy(&bytes[start..i]).into_owned());
    }
    if fields[0] != "P5" {
        return Err("only binary P5 PGM is supported".into());
    }
    let num = |s: &str| s.parse::<usize>().map_err(|_| format!("bad PGM header field `{s}`"));
    let (width, height, maxval) = (num(&fields[1])?, num(&fields[2])?, num(&fields[3])?);
    if maxval == 0 || maxval > 255 {
        return Err(format!("unsupported PGM maxval {maxval}"));
    }
    let data = &bytes[(i + 1).min(bytes.len())..];
    if data.len() != width * height {
        return Err(format!("expected {} pixel bytes, found {}", width * height, data.len()));
    }
    Ok(Buffer { ty: ScalarType::Uchar, width, height, data: data.iter().map(|b| Value::U8(*b)).collect() })
}

pub fn encode_pgm(b: &Buffer) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", b.width, b.height).into_bytes();
    out.extend(b.data.iter().map(|v| match v.convert(ScalarType::Uchar) {
        Value::U8(x) => x,
        _ => unreachable!(),
    }));
    out
}

fn is_pgm(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("pgm"))
}

/// Load an image, choosing the format by extension (`.pgm` or binary).
pub fn read_image(path: &Path) -> Result<Buffer, IoError> {
    let p = path.display().to_string();
    let bytes = std::fs::read(path).map_err(|source| IoError::Io { path: p.clone(), source })?;
    let parsed = if is_pgm(path) { decode_pgm(&bytes) } else { decode(&bytes) };
    parsed.map_err(|message| IoError::Format { path: p, message })
}

pub fn write_image(path: &Path, b: &Buffer) -> Result<(), IoError> {
    let bytes = if is_pgm(path) { encode_pgm(b) } else { encode(b) };
    std::fs::write(path, bytes).map_err(|source| IoError::Io { path: path.display().to_string(), source })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn binary_roundtrip() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        for ty in [ScalarType::Float, ScalarType::Int, ScalarType::Uint, ScalarType::Uchar] {
            let b = Buffer::random(ty, 7, 5, &mut rng);
            let back = decode(&encode(&b)).unwrap();
            assert!(back.bit_identical(&b));
        }
    }

    #[test]
    fn header_layout() {
        let b = Buffer::filled(ScalarType::Uchar, 2, 1, 9.0);
        assert_eq!(encode(&b), b"IMCL\x03\0\0\0\x02\0\0\0\x01\0\0\0\x09\x09");
    }

    #[test]
    fn malformed_inputs() {
        assert!(decode(b"IMCX").is_err());
        assert!(decode(b"IMCL\x00\0\0\0\x02\0\0\0\x01\0\0\0\x01").is_err());
        assert!(decode(b"IMCL\x09\0\0\0\x00\0\0\0\x00\0\0\0").is_err());
    }

    #[test]
    fn pgm_roundtrip() {
        let b = Buffer::from_fn(ScalarType::Uchar, 3, 2, |x, y| (x * 10 + y) as f64);
        assert_eq!(decode_pgm(&encode_pgm(&b)).unwrap(), b);
        let with_comment = b"P5\n# made by hand\n2 1\n255\n\x01\x02";
        assert_eq!(decode_pgm(with_comment).unwrap().data, [Value::U8(1), Value::U8(2)]);
    }
}
