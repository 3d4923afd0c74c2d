//! Binary PGM (P5, maxval 255) reading and writing.

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::scene::Image;

/// Encodes a `width × height` 8-bit raster as P5.
pub fn encode(width: usize, height: usize, pixels: &[u8]) -> Vec<u8> {
    assert_eq!(pixels.len(), width * height, "raster size mismatch");
    let mut out = format!("P5\n{width} {height}\n255\n").into_bytes();
    out.extend_from_slice(pixels);
    out
}

/// Decodes a P5 file into `(width, height, pixels)`. Comments in the header
/// are skipped; only maxval 255 is accepted.
pub fn decode(data: &[u8]) -> Result<(usize, usize, Vec<u8>)> {
    if data.len() < 2 || &data[..2] != b"P5" {
        return Err(Error::Pgm("missing P5 magic".into()));
    }
    let mut pos = 2;
    let mut fields = [0usize; 3];
    for field in fields.iter_mut() {
        *field = read_header_number(data, &mut pos)?;
    }
    let [width, height, maxval] = fields;
    if maxval != 255 {
        return Err(Error::Pgm(format!("unsupported maxval {maxval}")));
    }
    // Exactly one whitespace byte separates the header from the raster.
    match data.get(pos) {
        Some(b) if b.is_ascii_whitespace() => pos += 1,
        _ => return Err(Error::Pgm("header not terminated by whitespace".into())),
    }
    let raster = &data[pos..];
    if raster.len() != width * height {
        return Err(Error::Pgm(format!(
            "expected {} raster bytes, found {}",
            width * height,
            raster.len()
        )));
    }
    Ok((width, height, raster.to_vec()))
}

fn read_header_number(data: &[u8], pos: &mut usize) -> Result<usize> {
    loop {
        match data.get(*pos) {
            Some(b'#') => {
                while data.get(*pos).is_some_and(|&b| b != b'\n') {
                    *pos += 1;
                }
            }
            Some(b) if b.is_ascii_whitespace() => *pos += 1,
            Some(_) => break,
            None => return Err(Error::Pgm("truncated header".into())),
        }
    }
    let start = *pos;
    while data.get(*pos).is_some_and(|b| b.is_ascii_digit()) {
        *pos += 1;
    }
    std::str::from_utf8(&data[start..*pos])
        .ok()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| Error::Pgm(format!("bad header number at byte {start}")))
}

pub fn write_raster(path: impl AsRef<Path>, width: usize, height: usize, pixels: &[u8]) -> Result<()> {
    let path = path.as_ref();
    let mut file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(&encode(width, height, pixels))
        .map_err(|e| Error::io(path, e))
}

pub fn write_image(path: impl AsRef<Path>, image: &Image) -> Result<()> {
    write_raster(path, image.size(), image.size(), image.pixels())
}

/// Reads a square P5 image.
pub fn read_image(path: impl AsRef<Path>) -> Result<Image> {
    let path = path.as_ref();
    let data = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let (width, height, pixels) = decode(&data)?;
    if width != height {
        return Err(Error::Pgm(format!("expected a square image, got {width}x{height}")));
    }
    Image::new(width, pixels)
}
