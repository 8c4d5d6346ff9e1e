//! Binary PGM (`P5`) and PPM (`P6`) codecs, maxval 255 only.
//!
//! Header comments starting with `#` are skipped. The encoder always writes the
//! canonical form `magic\nW H\n255\n` followed by the raw payload.

use alloc::format;
use alloc::string::ToString;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::raster::Raster;

struct HeaderReader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> HeaderReader<'a> {
    fn skip_whitespace_and_comments(&mut self) {
        while self.pos < self.bytes.len() {
            match self.bytes[self.pos] {
                b' ' | b'\t' | b'\n' | b'\r' | 0x0b | 0x0c => self.pos += 1,
                b'#' => {
                    while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                        self.pos += 1;
                    }
                }
                _ => break,
            }
        }
    }

    fn number(&mut self, what: &str) -> Result<u32> {
        self.skip_whitespace_and_comments();
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(Error::PnmHeader(format!("expected {what} at byte {start}")));
        }
        // Digits only, so this is valid UTF-8.
        let text = core::str::from_utf8(&self.bytes[start..self.pos]).unwrap_or("");
        text.parse::<u32>()
            .map_err(|_| Error::PnmHeader(format!("{what} out of range: {text}")))
    }
}

pub fn decode_pnm(bytes: &[u8]) -> Result<Raster> {
    if bytes.len() < 2 {
        return Err(Error::PnmHeader("missing magic number".to_string()));
    }
    let channels = match &bytes[..2] {
        b"P5" => 1,
        b"P6" => 3,
        other => {
            return Err(Error::PnmHeader(format!(
                "unsupported magic {:?}",
                core::str::from_utf8(other).unwrap_or("??")
            )))
        }
    };
    let mut reader = HeaderReader { bytes, pos: 2 };
    let width = reader.number("width")? as usize;
    let height = reader.number("height")? as usize;
    let maxval = reader.number("maxval")?;
    if width == 0 || height == 0 {
        return Err(Error::PnmHeader(format!("zero dimension {width}x{height}")));
    }
    if maxval != 255 {
        return Err(Error::PnmMaxval(maxval));
    }
    // Exactly one whitespace byte separates the header from the payload.
    match bytes.get(reader.pos) {
        Some(b) if b.is_ascii_whitespace() => reader.pos += 1,
        _ => return Err(Error::PnmHeader("missing whitespace after maxval".to_string())),
    }
    let expected = width * height * channels;
    let payload = &bytes[reader.pos..];
    if payload.len() < expected {
        return Err(Error::PnmTruncated {
            expected,
            found: payload.len(),
        });
    }
    Raster::new(width, height, channels, payload[..expected].to_vec())
}

pub fn encode_pnm(r: &Raster) -> Vec<u8> {
    let magic = if r.channels() == 1 { "P5" } else { "P6" };
    let header = format!("{magic}\n{} {}\n255\n", r.width(), r.height());
    let mut out = Vec::with_capacity(header.len() + r.data().len());
    out.extend_from_slice(header.as_bytes());
    out.extend_from_slice(r.data());
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn minimal_gray() {
        let r = decode_pnm(b"P5 1 1 255 \x00").unwrap();
        assert_eq!((r.width(), r.height(), r.channels()), (1, 1, 1));
        assert_eq!(r.data(), &[0]);
    }

    #[test]
    fn rgb_pixels() {
        let mut bytes = b"P6 2 1 255\n".to_vec();
        bytes.extend_from_slice(&[255, 0, 0, 0, 0, 255]);
        let r = decode_pnm(&bytes).unwrap();
        assert_eq!(r.channels(), 3);
        assert_eq!(r.pixel(0, 0), &[255, 0, 0]);
        assert_eq!(r.pixel(1, 0), &[0, 0, 255]);
    }

    #[test]
    fn encode_goldens() {
        let r = Raster::new(1, 1, 1, vec![7]).unwrap();
        assert_eq!(encode_pnm(&r), b"P5\n1 1\n255\n\x07".to_vec());
        let z = Raster::filled(2, 2, 3, 0).unwrap();
        let bytes = encode_pnm(&z);
        assert_eq!(&bytes[..11], b"P6\n2 2\n255\n");
        assert_eq!(&bytes[11..], &[0u8; 12]);
    }

    #[test]
    fn comments_are_skipped() {
        let r = decode_pnm(b"P5\n# made by hand\n2 1 # trailing\n255\n\x01\x02").unwrap();
        assert_eq!(r.data(), &[1, 2]);
    }

    #[test]
    fn distinct_errors() {
        assert!(matches!(decode_pnm(b"P3 1 1 255 0"), Err(Error::PnmHeader(_))));
        assert!(matches!(decode_pnm(b"P5 1 x 255 0"), Err(Error::PnmHeader(_))));
        assert!(matches!(
            decode_pnm(b"P5 1 1 65535 \x00\x00"),
            Err(Error::PnmMaxval(65535))
        ));
        assert!(matches!(
            decode_pnm(b"P6 2 2 255\n\x00\x00"),
            Err(Error::PnmTruncated { expected: 12, found: 2 })
        ));
    }
}
