//! Seeded synthetic test images with ground truth.
//!
//! Every generator draws from a single `ChaCha8Rng` seeded with
//! `seed_from_u64(seed)`, consumed in a fixed order (geometry first, then one
//! Gaussian sample per pixel in row-major order), so outputs are bit-identical
//! across runs and platforms. Noise is added to the clean image and the result
//! is clamped to `[0, 1]`.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::energy::Codebook;
use crate::error::{Error, Result};
use crate::image::{BinaryMask, GrayImage, Grid, PhasePartition};

pub const DEFAULT_SIZE: usize = 128;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseKind {
    #[default]
    Gaussian,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub kind: NoiseKind,
    pub mean: f64,
    pub variance: f64,
}

impl NoiseSpec {
    pub fn gaussian(variance: f64) -> Self {
        Self {
            kind: NoiseKind::Gaussian,
            mean: 0.0,
            variance,
        }
    }

    fn apply(&self, clean: &Grid, rng: &mut ChaCha8Rng) -> Result<Grid> {
        if !(self.variance >= 0.0 && self.variance.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "noise variance must be >= 0, got {}",
                self.variance
            )));
        }
        let normal = Normal::new(self.mean, self.variance.sqrt())
            .map_err(|e| Error::InvalidParameter(e.to_string()))?;
        let data = clean
            .data()
            .iter()
            .map(|&v| (v + normal.sample(rng)).clamp(0.0, 1.0))
            .collect();
        Grid::new(clean.width(), clean.height(), data)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub partition: PhasePartition,
    /// Per-phase mean of the clean image.
    pub codebook: Codebook,
}

/// A generated image with its ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct Synthetic {
    /// The degraded image `f`.
    pub image: GrayImage,
    /// Noise-free image on the same intensity scale as `image`.
    pub clean: GrayImage,
    pub truth: GroundTruth,
    /// Pixels whose value was removed (set to 0).
    pub removed: Option<BinaryMask>,
    /// Stripe index per pixel, for regrouping stripe truth at any `K`.
    stripe_labels: Option<PhasePartition>,
}

impl Synthetic {
    /// Ground truth with `phases` labels. Stripe images merge adjacent
    /// stripes into equal groups; other images only have their native count.
    pub fn truth_for(&self, phases: usize) -> Result<GroundTruth> {
        if phases == self.truth.partition.phases() {
            return Ok(self.truth.clone());
        }
        match &self.stripe_labels {
            Some(fine) => merge_stripes(fine, &self.clean, phases),
            None => Err(Error::PhaseCountMismatch(
                phases,
                self.truth.partition.phases(),
            )),
        }
    }
}

/// Builds truth from a region map and the clean image: phases are the
/// distinct clean levels in increasing order.
fn truth_from_levels(clean: &Grid) -> Result<GroundTruth> {
    let mut levels: Vec<f64> = clean.data().to_vec();
    levels.sort_by(f64::total_cmp);
    levels.dedup();
    let labels = clean
        .data()
        .iter()
        .map(|v| levels.partition_point(|l| l < v))
        .collect();
    let partition = PhasePartition::new(clean.width(), clean.height(), labels, levels.len())?;
    Ok(GroundTruth {
        partition,
        codebook: Codebook::new(levels)?,
    })
}

fn class_means(partition: &PhasePartition, clean: &Grid) -> Vec<f64> {
    let k = partition.phases();
    let mut sums = vec![0.0; k];
    let mut counts = vec![0usize; k];
    for (&l, &v) in partition.labels().iter().zip(clean.data()) {
        sums[l] += v;
        counts[l] += 1;
    }
    sums.iter().zip(&counts).map(|(s, &c)| s / c.max(1) as f64).collect()
}

fn merge_stripes(fine: &PhasePartition, clean: &Grid, phases: usize) -> Result<GroundTruth> {
    let n = fine.phases();
    if phases == 0 || phases > n {
        return Err(Error::InvalidParameter(format!(
            "cannot merge {n} stripes into {phases} groups"
        )));
    }
    let map: Vec<usize> = (0..n).map(|s| s * phases / n).collect();
    let partition = fine.relabel(&map, phases)?;
    let codebook = Codebook::new(class_means(&partition, clean))?;
    Ok(GroundTruth {
        partition,
        codebook,
    })
}

/// Normalized pixel-center coordinates in `[0, 1)`.
#[inline]
fn coords(x: usize, y: usize, w: usize, h: usize) -> (f64, f64) {
    ((x as f64 + 0.5) / w as f64, (y as f64 + 0.5) / h as f64)
}

fn in_disk(p: (f64, f64), c: (f64, f64), r: f64) -> bool {
    let (dx, dy) = (p.0 - c.0, p.1 - c.1);
    dx * dx + dy * dy <= r * r
}

fn in_rect(p: (f64, f64), x0: f64, x1: f64, y0: f64, y1: f64) -> bool {
    p.0 >= x0 && p.0 < x1 && p.1 >= y0 && p.1 < y1
}

/// Star with `points` tips; the radius oscillates between `r_in` and `r_out`.
fn in_star(p: (f64, f64), c: (f64, f64), r_in: f64, r_out: f64, points: f64) -> bool {
    let (dx, dy) = (p.0 - c.0, p.1 - c.1);
    let theta = dy.atan2(dx);
    let r = r_in + (r_out - r_in) * 0.5 * (1.0 + (points * theta).cos());
    dx * dx + dy * dy <= r * r
}

fn in_triangle(p: (f64, f64), a: (f64, f64), b: (f64, f64), c: (f64, f64)) -> bool {
    let cross = |o: (f64, f64), s: (f64, f64), t: (f64, f64)| {
        (s.0 - o.0) * (t.1 - o.1) - (s.1 - o.1) * (t.0 - o.0)
    };
    let d1 = cross(a, b, p);
    let d2 = cross(b, c, p);
    let d3 = cross(c, a, p);
    (d1 >= 0.0 && d2 >= 0.0 && d3 >= 0.0) || (d1 <= 0.0 && d2 <= 0.0 && d3 <= 0.0)
}

fn check_size(size: usize) -> Result<()> {
    if size < 8 {
        return Err(Error::InvalidParameter(format!(
            "image size must be >= 8, got {size}"
        )));
    }
    Ok(())
}

/// Disk and rectangle at intensity 1 on a 0 background, with
/// `floor(fraction * N)` randomly chosen pixels set to 0.
pub fn gen_two_phase_missing(size: usize, fraction_removed: f64, seed: u64) -> Result<Synthetic> {
    check_size(size)?;
    if !(0.0..1.0).contains(&fraction_removed) {
        return Err(Error::InvalidParameter(format!(
            "removal fraction must be in [0, 1), got {fraction_removed}"
        )));
    }
    let clean = Grid::from_fn(size, size, |x, y| {
        let p = coords(x, y, size, size);
        let inside = in_disk(p, (0.32, 0.34), 0.23) || in_rect(p, 0.56, 0.9, 0.58, 0.9);
        f64::from(u8::from(inside))
    })?;
    let truth = truth_from_levels(&clean)?;
    let n = clean.len();
    let count = (fraction_removed * n as f64).floor() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut bits = vec![false; n];
    for i in index::sample(&mut rng, n, count) {
        bits[i] = true;
    }
    let removed = BinaryMask::new(size, size, bits)?;
    let data = clean
        .data()
        .iter()
        .zip(removed.bits())
        .map(|(&v, &r)| if r { 0.0 } else { v })
        .collect();
    Ok(Synthetic {
        image: GrayImage::new(size, size, data)?,
        clean: GrayImage::from_grid(clean)?,
        truth,
        removed: Some(removed),
        stripe_labels: None,
    })
}

/// Region layout of the close-intensity masks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CloseMask {
    /// A shaped "black" part on a "white" background.
    TwoPhase,
    /// A "black" and a "white" part on an untouched background.
    ThreePhase,
}

impl CloseMask {
    /// `0` for the untouched part, `1 + j` for the part shifted by `factors[j]`.
    fn region(self, p: (f64, f64)) -> usize {
        match self {
            Self::TwoPhase => {
                let ring = in_disk(p, (0.5, 0.45), 0.32) && !in_disk(p, (0.5, 0.45), 0.16);
                let bar = in_rect(p, 0.12, 0.88, 0.82, 0.92);
                usize::from(ring || bar)
            }
            Self::ThreePhase => {
                if in_star(p, (0.3, 0.35), 0.14, 0.24, 5.0) {
                    1
                } else if in_rect(p, 0.55, 0.9, 0.5, 0.9) || in_disk(p, (0.25, 0.78), 0.13) {
                    2
                } else {
                    0
                }
            }
        }
    }

    fn parts(self) -> usize {
        match self {
            Self::TwoPhase => 1,
            Self::ThreePhase => 2,
        }
    }
}

/// How a factor lowers a region's intensity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ShiftMode {
    /// `v - factor`
    #[default]
    Subtractive,
    /// `v * (1 - factor)`
    Multiplicative,
}

impl ShiftMode {
    fn apply(self, v: f64, factor: f64) -> f64 {
        match self {
            Self::Subtractive => v - factor,
            Self::Multiplicative => v * (1.0 - factor),
        }
    }
}

/// Constant 0.5 plus noise, with mask regions lowered by `factors`; the
/// noisy result is then min-max normalized to `[0, 1]` (the clean image is
/// mapped by the same affine transform).
pub fn gen_close_intensity(
    size: usize,
    mask: CloseMask,
    variance: f64,
    factors: &[f64],
    mode: ShiftMode,
    seed: u64,
) -> Result<Synthetic> {
    check_size(size)?;
    if factors.len() != mask.parts() {
        return Err(Error::InvalidParameter(format!(
            "mask needs {} factors, got {}",
            mask.parts(),
            factors.len()
        )));
    }
    let base = 0.5;
    let region_level = |r: usize| -> f64 {
        if r == 0 {
            base
        } else {
            mode.apply(base, factors[r - 1])
        }
    };
    if let Some(v) = (0..=factors.len()).map(region_level).find(|v| !(0.0..=1.0).contains(v)) {
        return Err(Error::InvalidParameter(format!(
            "factors move an intensity outside [0, 1]: {v}"
        )));
    }
    let clean = Grid::from_fn(size, size, |x, y| region_level(mask.region(coords(x, y, size, size))))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noisy = NoiseSpec::gaussian(variance).apply(&clean, &mut rng)?;
    let (lo, hi) = (noisy.min(), noisy.max());
    let scale = if hi > lo { 1.0 / (hi - lo) } else { 1.0 };
    let offset = if hi > lo { lo } else { 0.0 };
    let map = |v: f64| ((v - offset) * scale).clamp(0.0, 1.0);
    let image = Grid::new(size, size, noisy.data().iter().map(|&v| map(v)).collect())?;
    let clean = Grid::new(size, size, clean.data().iter().map(|&v| map(v)).collect())?;
    let truth = truth_from_levels(&clean)?;
    Ok(Synthetic {
        image: GrayImage::from_grid(image)?,
        clean: GrayImage::from_grid(clean)?,
        truth,
        removed: None,
        stripe_labels: None,
    })
}

/// `n_stripes` equal-width vertical stripes with intensities `s / (n - 1)`.
/// The width is rounded up to a multiple of `n_stripes`.
pub fn gen_stripes(n_stripes: usize, size: usize, variance: f64, seed: u64) -> Result<Synthetic> {
    check_size(size)?;
    if n_stripes < 2 {
        return Err(Error::InvalidParameter(format!(
            "need at least 2 stripes, got {n_stripes}"
        )));
    }
    if n_stripes > size {
        return Err(Error::InvalidParameter(format!(
            "{n_stripes} stripes do not fit in width {size}"
        )));
    }
    let stripe_w = size.div_ceil(n_stripes);
    let width = stripe_w * n_stripes;
    let step = 1.0 / (n_stripes - 1) as f64;
    let clean = Grid::from_fn(width, size, |x, _| (x / stripe_w) as f64 * step)?;
    let fine = PhasePartition::new(
        width,
        size,
        (0..width * size).map(|i| (i % width) / stripe_w).collect(),
        n_stripes,
    )?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let image = NoiseSpec::gaussian(variance).apply(&clean, &mut rng)?;
    let codebook = Codebook::new(class_means(&fine, &clean))?;
    Ok(Synthetic {
        image: GrayImage::from_grid(image)?,
        clean: GrayImage::from_grid(clean)?,
        truth: GroundTruth {
            partition: fine.clone(),
            codebook,
        },
        removed: None,
        stripe_labels: Some(fine),
    })
}

/// Piecewise-constant layouts for [`gen_multilevel`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Layout {
    /// Background, square, star, disk and triangle (five regions).
    Cartoon,
    /// Synthetic head slice: background, skull, gray and white matter (four regions).
    Brain,
    /// Four quadrants with wavy borders (four regions).
    Shapes,
}

impl Layout {
    pub fn regions(self) -> usize {
        match self {
            Self::Cartoon => 5,
            Self::Brain | Self::Shapes => 4,
        }
    }

    fn region(self, p: (f64, f64)) -> usize {
        match self {
            Self::Cartoon => {
                if in_rect(p, 0.05, 0.47, 0.05, 0.47) {
                    1
                } else if in_star(p, (0.74, 0.27), 0.16, 0.26, 5.0) {
                    2
                } else if in_disk(p, (0.27, 0.73), 0.22) {
                    3
                } else if in_triangle(p, (0.5, 0.97), (0.97, 0.97), (0.97, 0.47)) {
                    4
                } else {
                    0
                }
            }
            Self::Brain => {
                let (dx, dy) = ((p.0 - 0.5) / 0.42, (p.1 - 0.5) / 0.47);
                let r = (dx * dx + dy * dy).sqrt();
                let theta = dy.atan2(dx);
                let white = 0.55 + 0.08 * (6.0 * theta).sin() + 0.04 * (11.0 * theta).cos();
                if r > 1.0 {
                    0
                } else if r > 0.86 {
                    1
                } else if r > white {
                    2
                } else if in_disk(p, (0.47, 0.46), 0.05) || in_disk(p, (0.55, 0.55), 0.04) {
                    1
                } else {
                    3
                }
            }
            Self::Shapes => {
                let right = p.0 >= 0.5 + 0.07 * (4.0 * PI * p.1).sin();
                let lower = p.1 >= 0.5 + 0.07 * (4.0 * PI * p.0 + 1.0).sin();
                match (right, lower) {
                    (false, false) => 0,
                    (true, true) => 1,
                    (true, false) => 2,
                    (false, true) => 3,
                }
            }
        }
    }
}

/// `layout` painted with `levels` (region `r` gets `levels[min(r, L-1)]`)
/// plus Gaussian noise.
pub fn gen_multilevel(
    levels: &Codebook,
    layout: Layout,
    size: usize,
    variance: f64,
    seed: u64,
) -> Result<Synthetic> {
    check_size(size)?;
    let l = levels.len();
    let clean = Grid::from_fn(size, size, |x, y| {
        let r = layout.region(coords(x, y, size, size));
        levels.values()[r.min(l - 1)]
    })?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let image = NoiseSpec::gaussian(variance).apply(&clean, &mut rng)?;
    let truth = truth_from_levels(&clean)?;
    Ok(Synthetic {
        image: GrayImage::from_grid(image)?,
        clean: GrayImage::from_grid(clean)?,
        truth,
        removed: None,
        stripe_labels: None,
    })
}

/// Thin random-walk curves on a 0 background, at `intensities.0` in the left
/// half and `intensities.1` in the right half, plus Gaussian noise.
pub fn gen_thin_structures(
    size: usize,
    intensities: (f64, f64),
    variance: f64,
    seed: u64,
) -> Result<Synthetic> {
    check_size(size)?;
    let (left, right) = intensities;
    for v in [left, right] {
        if !(v > 0.0 && v <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "vessel intensity must be in (0, 1], got {v}"
            )));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = size as f64;
    let mut vessel = vec![false; size * size];
    let walkers = 14;
    for w in 0..walkers {
        // alternate halves so both intensities get curves
        let half = (w % 2) as f64 * 0.5;
        let mut x = (half + rng.random_range(0.08..0.42)) * n;
        let mut y = rng.random_range(0.05..0.95) * n;
        let mut theta = rng.random_range(0.0..2.0 * PI);
        let thick = rng.random_bool(0.3);
        for _ in 0..(2 * size) {
            theta += rng.random_range(-0.25..0.25);
            x += theta.cos();
            y += theta.sin();
            if x < 0.0 || y < 0.0 || x >= n || y >= n {
                break;
            }
            let (px, py) = (x as usize, y as usize);
            vessel[py * size + px] = true;
            if thick && px + 1 < size {
                vessel[py * size + px + 1] = true;
            }
        }
    }
    let clean = Grid::from_fn(size, size, |x, y| {
        if !vessel[y * size + x] {
            0.0
        } else if x < size / 2 {
            left
        } else {
            right
        }
    })?;
    let image = NoiseSpec::gaussian(variance).apply(&clean, &mut rng)?;
    let truth = truth_from_levels(&clean)?;
    Ok(Synthetic {
        image: GrayImage::from_grid(image)?,
        clean: GrayImage::from_grid(clean)?,
        truth,
        removed: None,
        stripe_labels: None,
    })
}

/// Named benchmark images.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Preset {
    #[serde(rename = "example1")]
    Example1,
    #[serde(rename = "example2")]
    Example2,
    #[serde(rename = "example3")]
    Example3,
    #[serde(rename = "example4")]
    Example4,
    #[serde(rename = "example5")]
    Example5,
    #[serde(rename = "example6")]
    Example6,
    #[serde(rename = "example7")]
    Example7,
    #[serde(rename = "retina-like")]
    RetinaLike,
}

/// Overrides for [`Preset::generate`]; `None` keeps the preset default.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PresetOptions {
    pub size: Option<usize>,
    pub seed: u64,
    pub variance: Option<f64>,
    pub stripes: Option<usize>,
    pub fraction: Option<f64>,
}

/// Example 3 levels; chosen so that clamping and noise put the FCM centers
/// near the published codebook.
pub const EXAMPLE3_LEVELS: [f64; 5] = [0.0, 0.42, 0.6, 0.73, 0.94];
pub const EXAMPLE4_LEVELS: [f64; 4] = [0.0, 0.32, 0.64, 0.88];
pub const EXAMPLE7_LEVELS: [f64; 4] = [0.0, 0.25, 0.7, 0.95];

impl Preset {
    pub const ALL: [Preset; 8] = [
        Preset::Example1,
        Preset::Example2,
        Preset::Example3,
        Preset::Example4,
        Preset::Example5,
        Preset::Example6,
        Preset::Example7,
        Preset::RetinaLike,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::Example1 => "example1",
            Self::Example2 => "example2",
            Self::Example3 => "example3",
            Self::Example4 => "example4",
            Self::Example5 => "example5",
            Self::Example6 => "example6",
            Self::Example7 => "example7",
            Self::RetinaLike => "retina-like",
        }
    }

    /// Fidelity weight used for this image in the benchmark runs.
    pub fn mu(self) -> f64 {
        match self {
            Self::Example1 => 1.0,
            Self::Example4 => 40.0,
            Self::Example7 => 4.0,
            Self::RetinaLike => 25.0,
            _ => 8.0,
        }
    }

    /// Phase count segmented in the benchmark runs.
    pub fn phases(self) -> usize {
        match self {
            Self::Example1 | Self::Example2 => 2,
            Self::Example3 | Self::Example5 => 5,
            Self::Example4 | Self::Example7 => 4,
            Self::Example6 | Self::RetinaLike => 3,
        }
    }

    pub fn default_variance(self) -> f64 {
        match self {
            Self::Example1 => 0.0,
            Self::Example2 => 1e-8,
            Self::Example3 | Self::Example6 => 1e-2,
            Self::Example4 => 2e-3,
            Self::Example5 => 1e-3,
            Self::Example7 => 3e-2,
            Self::RetinaLike => 0.1,
        }
    }

    pub fn generate(self, opts: &PresetOptions) -> Result<Synthetic> {
        let size = opts.size.unwrap_or(DEFAULT_SIZE);
        let var = opts.variance.unwrap_or(self.default_variance());
        let seed = opts.seed;
        match self {
            Self::Example1 => {
                let f = opts.fraction.unwrap_or(0.8);
                let mut s = gen_two_phase_missing(size, f, seed)?;
                if var > 0.0 {
                    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
                    s.image = GrayImage::from_grid(NoiseSpec::gaussian(var).apply(&s.image, &mut rng)?)?;
                }
                Ok(s)
            }
            Self::Example2 => gen_close_intensity(
                size,
                CloseMask::TwoPhase,
                var,
                &[opts.fraction.unwrap_or(2e-4)],
                ShiftMode::Subtractive,
                seed,
            ),
            Self::Example3 => {
                gen_multilevel(&Codebook::new(EXAMPLE3_LEVELS.to_vec())?, Layout::Cartoon, size, var, seed)
            }
            Self::Example4 => {
                gen_multilevel(&Codebook::new(EXAMPLE4_LEVELS.to_vec())?, Layout::Brain, size, var, seed)
            }
            Self::Example5 => gen_stripes(opts.stripes.unwrap_or(30), size, var, seed),
            Self::Example6 => gen_close_intensity(
                size,
                CloseMask::ThreePhase,
                var,
                &[0.1, 0.6],
                ShiftMode::Multiplicative,
                seed,
            ),
            Self::Example7 => {
                gen_multilevel(&Codebook::new(EXAMPLE7_LEVELS.to_vec())?, Layout::Shapes, size, var, seed)
            }
            Self::RetinaLike => gen_thin_structures(size, (1.0, 0.3), var, seed),
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::UnknownPreset(s.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn per_phase_clean_means(s: &Synthetic) -> Vec<f64> {
        class_means(&s.truth.partition, &s.clean)
    }

    #[test]
    fn missing_pixels_examples() {
        let s = gen_two_phase_missing(32, 0.0, 1).unwrap();
        assert_eq!(s.image, s.clean);
        assert_eq!(s.removed.as_ref().unwrap().count(), 0);

        let s = gen_two_phase_missing(256, 0.8, 1).unwrap();
        assert_eq!(s.removed.as_ref().unwrap().count(), (0.8f64 * 65536.0).floor() as usize);
        for (&v, &r) in s.image.data().iter().zip(s.removed.as_ref().unwrap().bits()) {
            if r {
                assert_eq!(v, 0.0);
            }
        }
        assert_eq!(s.truth.codebook.values(), &[0.0, 1.0]);
        assert_eq!(gen_two_phase_missing(64, 0.8, 9).unwrap(), gen_two_phase_missing(64, 0.8, 9).unwrap());
        assert!(gen_two_phase_missing(64, 1.0, 9).is_err());
    }

    #[test]
    fn close_intensity_examples() {
        let s = gen_close_intensity(32, CloseMask::TwoPhase, 1e-8, &[0.0], ShiftMode::Subtractive, 3).unwrap();
        assert_eq!(s.truth.partition.phases(), 1);

        let s = Preset::Example2.generate(&PresetOptions { seed: 3, ..Default::default() }).unwrap();
        assert_eq!(s.truth.partition.phases(), 2);
        // normalized gap between the two clean levels corresponds to the 2e-4 shift
        let cb = s.truth.codebook.values();
        let gap = cb[1] - cb[0];
        assert!(gap > 0.1 && gap < 0.4, "{cb:?}");
        assert!(s.image.min() == 0.0 && s.image.max() == 1.0);

        let s = Preset::Example6.generate(&PresetOptions { seed: 3, ..Default::default() }).unwrap();
        assert_eq!(s.truth.partition.phases(), 3);

        assert!(gen_close_intensity(32, CloseMask::TwoPhase, 0.0, &[0.1, 0.2], ShiftMode::Subtractive, 0).is_err());
        assert!(gen_close_intensity(32, CloseMask::TwoPhase, 0.0, &[0.7], ShiftMode::Subtractive, 0).is_err());
    }

    #[test]
    fn stripe_examples() {
        let s = gen_stripes(2, 16, 0.0, 0).unwrap();
        for y in 0..16 {
            for x in 0..16 {
                assert_eq!(s.image.get(x, y), if x < 8 { 0.0 } else { 1.0 });
            }
        }
        let s = Preset::Example5.generate(&PresetOptions::default()).unwrap();
        assert_eq!(s.image.width(), 150);
        assert_eq!(s.truth.partition.phases(), 30);
        let t5 = s.truth_for(5).unwrap();
        assert_eq!(t5.partition.phases(), 5);
        assert!(t5.partition.counts().iter().all(|&c| c == 30 * 128));
        assert!(gen_stripes(200, 128, 0.0, 0).is_err());
        assert!(gen_stripes(1, 128, 0.0, 0).is_err());
    }

    #[test]
    fn multilevel_examples() {
        let one = Codebook::new(vec![0.4]).unwrap();
        let s = gen_multilevel(&one, Layout::Cartoon, 32, 0.0, 0).unwrap();
        assert!(s.image.data().iter().all(|&v| v == 0.4));
        let s = Preset::Example3.generate(&PresetOptions::default()).unwrap();
        assert_eq!(s.truth.partition.phases(), 5);
        assert!(s.truth.partition.counts().iter().all(|&c| c > 500));
        let s = Preset::Example7.generate(&PresetOptions::default()).unwrap();
        assert_eq!(s.truth.partition.phases(), 4);
        let s = Preset::Example4.generate(&PresetOptions::default()).unwrap();
        assert_eq!(s.truth.partition.phases(), 4);
    }

    #[test]
    fn thin_structure_examples() {
        let s = gen_thin_structures(64, (1.0, 0.3), 0.0, 5).unwrap();
        assert_eq!(s.image, s.clean);
        assert_eq!(s.truth.codebook.values(), &[0.0, 0.3, 1.0]);
        let a = gen_thin_structures(64, (1.0, 0.3), 0.1, 5).unwrap();
        assert_eq!(a.truth, s.truth);
        assert_eq!(a, gen_thin_structures(64, (1.0, 0.3), 0.1, 5).unwrap());
    }

    #[test]
    fn every_preset_is_valid_and_deterministic() {
        for p in Preset::ALL {
            let opts = PresetOptions { size: Some(48), seed: 7, ..Default::default() };
            let s = p.generate(&opts).unwrap();
            assert!(s.image.data().iter().all(|v| (0.0..=1.0).contains(v)), "{p}");
            let means = per_phase_clean_means(&s);
            for (a, b) in means.iter().zip(s.truth.codebook.values()) {
                assert!((a - b).abs() < 1e-12, "{p}: {a} vs {b}");
            }
            assert_eq!(s, p.generate(&opts).unwrap(), "{p}");
            assert_eq!(p.name().parse::<Preset>().unwrap(), p);
        }
        assert!(matches!("example9".parse::<Preset>(), Err(Error::UnknownPreset(_))));
    }
}
