//! Grayscale PGM/PNG reading and writing, label images.

use std::path::Path;

use image::codecs::pnm::{PnmEncoder, PnmSubtype, SampleEncoding};
use image::{DynamicImage, ImageBuffer, Luma};

use crate::error::{Error, Result};
use crate::image::{GrayImage, Grid, PhasePartition};

/// Raw samples of a grayscale file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Samples {
    pub width: usize,
    pub height: usize,
    pub data: Vec<u16>,
    pub max_value: u16,
}

fn format_err(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::Format(format!("{}: {e}", path.display()))
}

/// Reads 8- or 16-bit grayscale samples from a PGM or PNG file.
pub fn read_samples(path: impl AsRef<Path>) -> Result<Samples> {
    let path = path.as_ref();
    let img = image::ImageReader::open(path)?
        .with_guessed_format()?
        .decode()
        .map_err(|e| format_err(path, e))?;
    let (width, height) = (img.width() as usize, img.height() as usize);
    match img {
        DynamicImage::ImageLuma8(buf) => Ok(Samples {
            width,
            height,
            data: buf.into_raw().into_iter().map(u16::from).collect(),
            max_value: u8::MAX as u16,
        }),
        DynamicImage::ImageLuma16(buf) => Ok(Samples {
            width,
            height,
            data: buf.into_raw(),
            max_value: u16::MAX,
        }),
        other => Err(format_err(
            path,
            format!("expected a grayscale image, found {:?}", other.color()),
        )),
    }
}

/// Reads a grayscale image, mapping samples linearly to [0, 1].
pub fn read_image(path: impl AsRef<Path>) -> Result<GrayImage> {
    let s = read_samples(path)?;
    let scale = 1.0 / s.max_value as f64;
    GrayImage::new(
        s.width,
        s.height,
        s.data.iter().map(|&v| v as f64 * scale).collect(),
    )
}

fn save(path: &Path, img: DynamicImage) -> Result<()> {
    let is_pnm = path
        .extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| matches!(e.to_ascii_lowercase().as_str(), "pgm" | "pnm"));
    if is_pnm {
        if let DynamicImage::ImageLuma16(buf) = &img {
            // 16-bit P5: big-endian samples
            let mut bytes = format!("P5\n{} {}\n65535\n", buf.width(), buf.height()).into_bytes();
            bytes.extend(buf.as_raw().iter().flat_map(|v| v.to_be_bytes()));
            return Ok(std::fs::write(path, bytes)?);
        }
        let file = std::io::BufWriter::new(std::fs::File::create(path)?);
        let encoder = PnmEncoder::new(file)
            .with_subtype(PnmSubtype::Graymap(SampleEncoding::Binary));
        img.write_with_encoder(encoder).map_err(|e| format_err(path, e))
    } else {
        img.save(path).map_err(|e| format_err(path, e))
    }
}

fn quantize(v: f64, max: f64) -> f64 {
    (v.clamp(0.0, 1.0) * max).round()
}

fn buffer8(width: usize, height: usize, data: Vec<u8>) -> DynamicImage {
    DynamicImage::ImageLuma8(
        ImageBuffer::<Luma<u8>, _>::from_raw(width as u32, height as u32, data)
            .expect("buffer length matches shape"),
    )
}

fn buffer16(width: usize, height: usize, data: Vec<u16>) -> DynamicImage {
    DynamicImage::ImageLuma16(
        ImageBuffer::<Luma<u16>, _>::from_raw(width as u32, height as u32, data)
            .expect("buffer length matches shape"),
    )
}

/// Writes an 8-bit image; the format follows the extension (`.pgm` or `.png`).
/// Values are clamped to [0, 1].
pub fn write_image(path: impl AsRef<Path>, img: &Grid) -> Result<()> {
    let data = img.data().iter().map(|&v| quantize(v, 255.0) as u8).collect();
    save(path.as_ref(), buffer8(img.width(), img.height(), data))
}

/// Writes a 16-bit image.
pub fn write_image16(path: impl AsRef<Path>, img: &Grid) -> Result<()> {
    let data = img.data().iter().map(|&v| quantize(v, 65535.0) as u16).collect();
    save(path.as_ref(), buffer16(img.width(), img.height(), data))
}

/// Gray value of phase `i` of `k` in an 8-bit label image.
pub fn label_gray(i: usize, k: usize) -> u8 {
    if k <= 1 {
        0
    } else {
        (i as f64 * 255.0 / (k - 1) as f64).round() as u8
    }
}

/// Writes phase `i` as `round(i * 255 / (K - 1))`.
pub fn write_labels(path: impl AsRef<Path>, part: &PhasePartition) -> Result<()> {
    if part.phases() > 256 {
        return Err(Error::InvalidParameter(format!(
            "{} phases do not fit an 8-bit label image",
            part.phases()
        )));
    }
    let k = part.phases();
    let data = part.labels().iter().map(|&l| label_gray(l, k)).collect();
    save(path.as_ref(), buffer8(part.width(), part.height(), data))
}

/// Writes phase indices directly as 16-bit samples.
pub fn write_labels_raw(path: impl AsRef<Path>, part: &PhasePartition) -> Result<()> {
    if part.phases() > 65536 {
        return Err(Error::InvalidParameter(format!(
            "{} phases do not fit a 16-bit label image",
            part.phases()
        )));
    }
    let data = part.labels().iter().map(|&l| l as u16).collect();
    save(path.as_ref(), buffer16(part.width(), part.height(), data))
}

/// Reads a label image: distinct gray values, ranked, become phases
/// `0..n`. With `phases` set, the partition is padded to that many phases.
pub fn read_labels(path: impl AsRef<Path>, phases: Option<usize>) -> Result<PhasePartition> {
    let s = read_samples(path)?;
    let mut distinct = s.data.clone();
    distinct.sort_unstable();
    distinct.dedup();
    let labels = s
        .data
        .iter()
        .map(|v| distinct.binary_search(v).expect("value present"))
        .collect();
    let part = PhasePartition::new(s.width, s.height, labels, distinct.len())?;
    match phases {
        Some(k) if k < distinct.len() => Err(Error::PhaseCountMismatch(distinct.len(), k)),
        Some(k) => part.with_phases(k),
        None => Ok(part),
    }
}

/// Piecewise-constant image with phase `i` set to `means[i]`.
pub fn mean_image(part: &PhasePartition, means: &[f64]) -> Result<Grid> {
    if means.len() != part.phases() {
        return Err(Error::PhaseCountMismatch(means.len(), part.phases()));
    }
    Grid::new(
        part.width(),
        part.height(),
        part.labels().iter().map(|&l| means[l]).collect(),
    )
}
