//! PNG images and raw pileup tensors.
//!
//! Pileup files are a 12-byte header (`MBPU`, then height and width as
//! little-endian u32) followed by `height * width * 6` bytes, row-major,
//! channels interleaved.

use std::io::Cursor;
use std::path::Path;

use medbench_core::preprocess::{ImageTensor, PILEUP_CHANNELS};

use crate::fsio::atomic_write;
use crate::Error;

pub const PILEUP_MAGIC: &[u8; 4] = b"MBPU";

fn image_err(path: &Path, message: impl ToString) -> Error {
    Error::Image {
        path: path.to_path_buf(),
        message: message.to_string(),
    }
}

/// Decodes to 8-bit grayscale or RGB. Alpha is dropped, palettes are
/// expanded and 16-bit samples keep their high byte.
pub fn decode_png(path: &Path, bytes: &[u8]) -> Result<ImageTensor, Error> {
    let mut decoder = png::Decoder::new(Cursor::new(bytes));
    decoder.set_transformations(png::Transformations::EXPAND | png::Transformations::STRIP_16);
    let mut reader = decoder.read_info().map_err(|e| image_err(path, e))?;
    let size = reader
        .output_buffer_size()
        .ok_or_else(|| image_err(path, "image too large"))?;
    let mut buf = vec![0; size];
    let info = reader.next_frame(&mut buf).map_err(|e| image_err(path, e))?;
    buf.truncate(info.buffer_size());
    let (h, w) = (info.height as usize, info.width as usize);
    let (channels, keep) = match info.color_type {
        png::ColorType::Grayscale => (1, 1),
        png::ColorType::GrayscaleAlpha => (2, 1),
        png::ColorType::Rgb => (3, 3),
        png::ColorType::Rgba => (4, 3),
        png::ColorType::Indexed => return Err(image_err(path, "unexpanded palette")),
    };
    let data: Vec<u8> = if channels == keep {
        buf
    } else {
        buf.chunks_exact(channels)
            .flat_map(|px| px[..keep].iter().copied())
            .collect()
    };
    ImageTensor::new(h, w, keep, data).map_err(|e| image_err(path, e))
}

pub fn read_png(path: &Path) -> Result<ImageTensor, Error> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_png(path, &bytes)
}

pub fn encode_png(image: &ImageTensor) -> Result<Vec<u8>, Error> {
    let color = match image.channels() {
        1 => png::ColorType::Grayscale,
        3 => png::ColorType::Rgb,
        c => {
            return Err(Error::Image {
                path: Default::default(),
                message: format!("cannot store {c} channels as PNG"),
            })
        }
    };
    let mut out = Vec::new();
    {
        let mut enc = png::Encoder::new(&mut out, image.width() as u32, image.height() as u32);
        enc.set_color(color);
        enc.set_depth(png::BitDepth::Eight);
        let mut w = enc.write_header().map_err(|e| image_err(Path::new(""), e))?;
        w.write_image_data(image.data())
            .map_err(|e| image_err(Path::new(""), e))?;
    }
    Ok(out)
}

pub fn write_png(path: &Path, image: &ImageTensor) -> Result<(), Error> {
    atomic_write(path, &encode_png(image)?)
}

pub fn decode_pileup(path: &Path, bytes: &[u8]) -> Result<ImageTensor, Error> {
    if bytes.len() < 12 || &bytes[..4] != PILEUP_MAGIC {
        return Err(image_err(path, "missing pileup header"));
    }
    let h = u32::from_le_bytes(bytes[4..8].try_into().unwrap_or_default()) as usize;
    let w = u32::from_le_bytes(bytes[8..12].try_into().unwrap_or_default()) as usize;
    ImageTensor::new(h, w, PILEUP_CHANNELS, bytes[12..].to_vec()).map_err(|e| image_err(path, e))
}

pub fn encode_pileup(image: &ImageTensor) -> Vec<u8> {
    let mut out = Vec::with_capacity(12 + image.data().len());
    out.extend_from_slice(PILEUP_MAGIC);
    out.extend_from_slice(&(image.height() as u32).to_le_bytes());
    out.extend_from_slice(&(image.width() as u32).to_le_bytes());
    out.extend_from_slice(image.data());
    out
}

/// Reads a PNG, or a pileup when the file carries the pileup header.
pub fn read_image(path: &Path) -> Result<ImageTensor, Error> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.starts_with(PILEUP_MAGIC) {
        decode_pileup(path, &bytes)
    } else {
        decode_png(path, &bytes)
    }
}
