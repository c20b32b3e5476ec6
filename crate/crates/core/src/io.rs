//! IMG1 raster files and 16-bit PGM export.
//!
//! IMG1 layout (all little-endian):
//!
//! | offset | size | field                                  |
//! |--------|------|----------------------------------------|
//! | 0      | 4    | magic `SIMG`                           |
//! | 4      | 2    | version, always 1                      |
//! | 6      | 1    | dtype: 1 = f32, 2 = u16                |
//! | 7      | 1    | pad, 0                                 |
//! | 8      | 4    | width                                  |
//! | 12     | 4    | height                                 |
//! | 16     | 8    | pixel size in nm (f64)                 |
//! | 24     | ...  | row-major samples                      |

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::image::Image2D;

pub const MAGIC: &[u8; 4] = b"SIMG";
pub const VERSION: u16 = 1;
pub const HEADER_LEN: usize = 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum Dtype {
    F32 = 1,
    U16 = 2,
}

impl Dtype {
    fn from_byte(b: u8) -> Option<Self> {
        match b {
            1 => Some(Dtype::F32),
            2 => Some(Dtype::U16),
            _ => None,
        }
    }

    fn sample_len(self) -> usize {
        match self {
            Dtype::F32 => 4,
            Dtype::U16 => 2,
        }
    }
}

/// Serializes an image to IMG1 bytes.
///
/// `U16` applies linear min-max scaling onto `0..=65535` and does not record
/// the scale, so it is an export format only.
pub fn encode_img1(img: &Image2D, dtype: Dtype) -> Vec<u8> {
    let n = img.width() * img.height();
    let mut out = Vec::with_capacity(HEADER_LEN + n * dtype.sample_len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.push(dtype as u8);
    out.push(0);
    out.extend_from_slice(&(img.width() as u32).to_le_bytes());
    out.extend_from_slice(&(img.height() as u32).to_le_bytes());
    out.extend_from_slice(&img.pixel_size_nm().to_le_bytes());
    match dtype {
        Dtype::F32 => {
            for &v in img.data() {
                out.extend_from_slice(&(v as f32).to_le_bytes());
            }
        }
        Dtype::U16 => {
            for s in scale_to_u16(img) {
                out.extend_from_slice(&s.to_le_bytes());
            }
        }
    }
    out
}

pub fn decode_img1(bytes: &[u8]) -> Result<Image2D> {
    let fail = |offset: usize, msg: String| Error::Format {
        offset: offset as u64,
        msg,
    };
    if bytes.len() < HEADER_LEN {
        return Err(fail(
            bytes.len(),
            format!("truncated header: {} of {HEADER_LEN} bytes", bytes.len()),
        ));
    }
    if &bytes[0..4] != MAGIC {
        return Err(fail(
            0,
            format!("bad magic {:?}", String::from_utf8_lossy(&bytes[0..4])),
        ));
    }
    let version = u16::from_le_bytes([bytes[4], bytes[5]]);
    if version != VERSION {
        return Err(fail(4, format!("unsupported version {version}")));
    }
    let dtype = Dtype::from_byte(bytes[6]).ok_or_else(|| fail(6, format!("bad dtype {}", bytes[6])))?;
    if bytes[7] != 0 {
        return Err(fail(7, format!("nonzero pad byte {}", bytes[7])));
    }
    let width = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let height = u32::from_le_bytes(bytes[12..16].try_into().unwrap()) as usize;
    let pixel = f64::from_le_bytes(bytes[16..24].try_into().unwrap());
    if width == 0 || height == 0 {
        return Err(fail(8, format!("zero dimension {width}x{height}")));
    }
    if !(pixel.is_finite() && pixel > 0.0) {
        return Err(fail(16, format!("bad pixel size {pixel}")));
    }
    let expected = width
        .checked_mul(height)
        .and_then(|n| n.checked_mul(dtype.sample_len()))
        .ok_or_else(|| fail(8, "dimensions overflow".into()))?;
    let payload = &bytes[HEADER_LEN..];
    if payload.len() != expected {
        let offset = HEADER_LEN + payload.len().min(expected);
        return Err(fail(
            offset,
            format!(
                "payload is {} bytes, expected {expected}",
                payload.len()
            ),
        ));
    }
    let data: Vec<f64> = match dtype {
        Dtype::F32 => payload
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
            .collect(),
        Dtype::U16 => payload
            .chunks_exact(2)
            .map(|c| u16::from_le_bytes(c.try_into().unwrap()) as f64)
            .collect(),
    };
    if let Some(i) = data.iter().position(|v| !v.is_finite()) {
        return Err(fail(HEADER_LEN + i * 4, "non-finite sample".into()));
    }
    Image2D::new(width, height, pixel, data)
}

pub fn write_img1(img: &Image2D, path: impl AsRef<Path>) -> Result<()> {
    write_img1_as(img, path, Dtype::F32)
}

pub fn write_img1_as(img: &Image2D, path: impl AsRef<Path>, dtype: Dtype) -> Result<()> {
    write_atomic(path.as_ref(), &encode_img1(img, dtype))
}

pub fn read_img1(path: impl AsRef<Path>) -> Result<Image2D> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_img1(&bytes)
}

fn scale_to_u16(img: &Image2D) -> Vec<u16> {
    let (lo, hi) = img.min_max();
    if hi <= lo {
        return vec![32768; img.data().len()];
    }
    img.data()
        .iter()
        .map(|&v| ((v - lo) / (hi - lo) * 65535.0).round() as u16)
        .collect()
}

/// Binary 16-bit PGM (`P5`, maxval 65535, big-endian samples) with linear
/// min-max scaling. Constant images map to 32768.
pub fn encode_pgm16(img: &Image2D) -> Vec<u8> {
    let header = format!("P5\n{} {}\n65535\n", img.width(), img.height());
    let mut out = header.into_bytes();
    for s in scale_to_u16(img) {
        out.extend_from_slice(&s.to_be_bytes());
    }
    out
}

pub fn export_pgm16(img: &Image2D, path: impl AsRef<Path>) -> Result<()> {
    write_atomic(path.as_ref(), &encode_pgm16(img))
}

/// Writes through a sibling temp file and renames it into place.
pub(crate) fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let file_name = path
        .file_name()
        .ok_or_else(|| Error::invalid(format!("{} has no file name", path.display())))?;
    let mut tmp_name = std::ffi::OsString::from(".");
    tmp_name.push(file_name);
    tmp_name.push(format!(".tmp{}", std::process::id()));
    let tmp = path.with_file_name(tmp_name);
    let mut f = fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
    f.write_all(bytes).map_err(|e| Error::io(&tmp, e))?;
    drop(f);
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn f32_file_length_and_round_trip() {
        let img = Image2D::new(2, 1, 219.5, vec![1.5, -3.25]).unwrap();
        let bytes = encode_img1(&img, Dtype::F32);
        assert_eq!(bytes.len(), 24 + 8);
        assert_eq!(&bytes[0..4], b"SIMG");
        assert_eq!(decode_img1(&bytes).unwrap(), img);
    }

    #[test]
    fn rejects_bad_headers() {
        let img = Image2D::new(2, 2, 1.0, vec![0.0; 4]).unwrap();
        let good = encode_img1(&img, Dtype::F32);

        let mut bad = good.clone();
        bad[0] = b'X';
        assert!(matches!(decode_img1(&bad), Err(Error::Format { offset: 0, .. })));

        let mut bad = good.clone();
        bad[4] = 2;
        assert!(matches!(decode_img1(&bad), Err(Error::Format { offset: 4, .. })));

        let mut bad = good.clone();
        bad[6] = 9;
        assert!(matches!(decode_img1(&bad), Err(Error::Format { offset: 6, .. })));

        let bad = &good[..good.len() - 3];
        assert!(matches!(decode_img1(bad), Err(Error::Format { offset: 37, .. })));

        assert!(matches!(decode_img1(&good[..10]), Err(Error::Format { .. })));
    }

    #[test]
    fn u16_export_reads_back_as_scaled_floats() {
        let img = Image2D::new(2, 2, 5.0, vec![-1.0, 0.0, 1.0, 3.0]).unwrap();
        let back = decode_img1(&encode_img1(&img, Dtype::U16)).unwrap();
        assert_eq!(back.data(), &[0.0, 16384.0, 32768.0, 65535.0]);
        assert_eq!(back.pixel_size_nm(), 5.0);
    }

    #[test]
    fn pgm_scaling_and_header() {
        let img = Image2D::new(2, 2, 1.0, vec![0.0, 1.0, 2.0, 3.0]).unwrap();
        let bytes = encode_pgm16(&img);
        let header = b"P5\n2 2\n65535\n";
        assert!(bytes.starts_with(header));
        let samples: Vec<u16> = bytes[header.len()..]
            .chunks_exact(2)
            .map(|c| u16::from_be_bytes([c[0], c[1]]))
            .collect();
        assert_eq!(samples, vec![0, 21845, 43690, 65535]);

        let flat = Image2D::new(3, 1, 1.0, vec![7.0; 3]).unwrap();
        let bytes = encode_pgm16(&flat);
        let body = &bytes[b"P5\n3 1\n65535\n".len()..];
        assert!(body.chunks_exact(2).all(|c| u16::from_be_bytes([c[0], c[1]]) == 32768));
    }
}
