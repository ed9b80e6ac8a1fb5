//! Image, mask and partition types plus the discrete differential operators.
//!
//! All grids are row-major with `index = y * width + x`. Differences are
//! forward differences with a zero difference across the far boundary
//! (replicated border), so `divergence` is exactly the negative adjoint of
//! `gradient`.

use std::ops::Deref;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Discretization of the total variation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TvVariant {
    /// `sum sqrt(dx^2 + dy^2)`
    #[default]
    Isotropic,
    /// `sum |dx| + |dy|`
    Anisotropic,
}

/// Unconstrained real-valued grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl Grid {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        check_dims(width, height)?;
        if data.len() != width * height {
            return Err(Error::DataLength {
                width,
                height,
                len: data.len(),
            });
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn zeros(width: usize, height: usize) -> Result<Self> {
        Self::new(width, height, vec![0.0; width * height])
    }

    pub fn from_fn(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> f64,
    ) -> Result<Self> {
        check_dims(width, height)?;
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self::new(width, height, data)
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn shape(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    pub fn min(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().sum::<f64>() / self.data.len() as f64
    }

    pub fn scaled(&self, c: f64) -> Grid {
        Grid {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|v| c * v).collect(),
        }
    }

    pub fn dot(&self, other: &Grid) -> Result<f64> {
        ensure_shape(self.shape(), other.shape())?;
        Ok(dot(&self.data, &other.data))
    }
}

/// A grid whose intensities are all in `[0, 1]`: the observed image `f`
/// and the (clamped) ROF solution `u`.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage(Grid);

impl GrayImage {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        Self::from_grid(Grid::new(width, height, data)?)
    }

    pub fn from_grid(grid: Grid) -> Result<Self> {
        if let Some((index, &value)) = grid
            .data
            .iter()
            .enumerate()
            .find(|(_, v)| !(0.0..=1.0).contains(*v))
        {
            return Err(Error::IntensityOutOfRange { index, value });
        }
        Ok(Self(grid))
    }

    /// Clamps every value into `[0, 1]` (NaN becomes 0).
    pub fn from_grid_clamped(mut grid: Grid) -> Self {
        for v in grid.data.iter_mut() {
            *v = if v.is_nan() { 0.0 } else { v.clamp(0.0, 1.0) };
        }
        Self(grid)
    }

    pub fn constant(width: usize, height: usize, value: f64) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    pub fn from_fn(
        width: usize,
        height: usize,
        f: impl FnMut(usize, usize) -> f64,
    ) -> Result<Self> {
        Self::from_grid(Grid::from_fn(width, height, f)?)
    }

    pub fn grid(&self) -> &Grid {
        &self.0
    }

    pub fn into_grid(self) -> Grid {
        self.0
    }
}

impl Deref for GrayImage {
    type Target = Grid;

    fn deref(&self) -> &Grid {
        &self.0
    }
}

impl AsRef<Grid> for GrayImage {
    fn as_ref(&self) -> &Grid {
        &self.0
    }
}

impl AsRef<Grid> for Grid {
    fn as_ref(&self) -> &Grid {
        self
    }
}

/// Two-component field living on the pixel grid (output of [`gradient`]).
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    width: usize,
    height: usize,
    pub dx: Vec<f64>,
    pub dy: Vec<f64>,
}

impl VectorField {
    pub fn new(width: usize, height: usize, dx: Vec<f64>, dy: Vec<f64>) -> Result<Self> {
        check_dims(width, height)?;
        let n = width * height;
        if dx.len() != n || dy.len() != n {
            return Err(Error::DataLength {
                width,
                height,
                len: dx.len().min(dy.len()),
            });
        }
        Ok(Self {
            width,
            height,
            dx,
            dy,
        })
    }

    pub fn zeros(width: usize, height: usize) -> Result<Self> {
        let n = width * height;
        Self::new(width, height, vec![0.0; n], vec![0.0; n])
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn dot(&self, other: &VectorField) -> Result<f64> {
        ensure_shape(self.shape(), other.shape())?;
        Ok(dot(&self.dx, &other.dx) + dot(&self.dy, &other.dy))
    }
}

/// A discrete set of pixels.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BinaryMask {
    width: usize,
    height: usize,
    bits: Vec<bool>,
}

impl BinaryMask {
    pub fn new(width: usize, height: usize, bits: Vec<bool>) -> Result<Self> {
        check_dims(width, height)?;
        if bits.len() != width * height {
            return Err(Error::DataLength {
                width,
                height,
                len: bits.len(),
            });
        }
        Ok(Self {
            width,
            height,
            bits,
        })
    }

    pub fn empty(width: usize, height: usize) -> Result<Self> {
        Self::new(width, height, vec![false; width * height])
    }

    pub fn full(width: usize, height: usize) -> Result<Self> {
        Self::new(width, height, vec![true; width * height])
    }

    pub fn from_fn(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> bool,
    ) -> Result<Self> {
        check_dims(width, height)?;
        let mut bits = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                bits.push(f(x, y));
            }
        }
        Self::new(width, height, bits)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn get(&self, x: usize, y: usize) -> bool {
        self.bits[y * self.width + x]
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn is_empty_set(&self) -> bool {
        !self.bits.iter().any(|&b| b)
    }

    /// `self ⊆ other`
    pub fn is_subset_of(&self, other: &BinaryMask) -> bool {
        self.shape() == other.shape() && self.bits.iter().zip(&other.bits).all(|(&a, &b)| !a || b)
    }

    pub fn difference(&self, other: &BinaryMask) -> Result<BinaryMask> {
        ensure_shape(self.shape(), other.shape())?;
        let bits = self
            .bits
            .iter()
            .zip(&other.bits)
            .map(|(&a, &b)| a && !b)
            .collect();
        BinaryMask::new(self.width, self.height, bits)
    }

    pub fn complement(&self) -> BinaryMask {
        BinaryMask {
            width: self.width,
            height: self.height,
            bits: self.bits.iter().map(|b| !b).collect(),
        }
    }

    /// The indicator function `χ_A` as a grid.
    pub fn indicator(&self) -> Grid {
        Grid {
            width: self.width,
            height: self.height,
            data: self.bits.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect(),
        }
    }
}

/// Per-pixel phase labels `0..K`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PhasePartition {
    width: usize,
    height: usize,
    labels: Vec<usize>,
    phases: usize,
}

impl PhasePartition {
    pub fn new(width: usize, height: usize, labels: Vec<usize>, phases: usize) -> Result<Self> {
        check_dims(width, height)?;
        if phases == 0 {
            return Err(Error::InvalidParameter("phase count must be >= 1".into()));
        }
        if labels.len() != width * height {
            return Err(Error::DataLength {
                width,
                height,
                len: labels.len(),
            });
        }
        if let Some(&label) = labels.iter().find(|&&l| l >= phases) {
            return Err(Error::LabelOutOfRange { label, phases });
        }
        Ok(Self {
            width,
            height,
            labels,
            phases,
        })
    }

    /// Single-phase partition of the whole domain.
    pub fn trivial(width: usize, height: usize) -> Result<Self> {
        Self::new(width, height, vec![0; width * height], 1)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn phases(&self) -> usize {
        self.phases
    }

    pub fn label(&self, x: usize, y: usize) -> usize {
        self.labels[y * self.width + x]
    }

    /// Pixel count of every phase.
    pub fn counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.phases];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }

    /// `Ω_i = {label == i}`
    pub fn phase_mask(&self, i: usize) -> BinaryMask {
        BinaryMask {
            width: self.width,
            height: self.height,
            bits: self.labels.iter().map(|&l| l == i).collect(),
        }
    }

    /// `Σ_i = Ω_i ∪ … ∪ Ω_{K-1} = {label >= i}`
    pub fn upper_mask(&self, i: usize) -> BinaryMask {
        BinaryMask {
            width: self.width,
            height: self.height,
            bits: self.labels.iter().map(|&l| l >= i).collect(),
        }
    }

    /// Nested masks `Σ_1 ⊇ … ⊇ Σ_{K-1}`.
    pub fn nested_masks(&self) -> Vec<BinaryMask> {
        (1..self.phases).map(|i| self.upper_mask(i)).collect()
    }

    /// Rebuilds a partition from nested masks: `label(x) = #{i : x ∈ Σ_i}`.
    pub fn from_nested_masks(masks: &[BinaryMask]) -> Result<Self> {
        let first = masks
            .first()
            .ok_or_else(|| Error::InvalidParameter("at least one mask required".into()))?;
        let (w, h) = first.shape();
        for (i, pair) in masks.windows(2).enumerate() {
            ensure_shape((w, h), pair[1].shape())?;
            if !pair[1].is_subset_of(&pair[0]) {
                return Err(Error::NotNested(i + 1));
            }
        }
        let mut labels = vec![0usize; w * h];
        for m in masks {
            for (l, &b) in labels.iter_mut().zip(&m.bits) {
                *l += b as usize;
            }
        }
        Self::new(w, h, labels, masks.len() + 1)
    }

    /// Applies a label map `old -> new` producing a partition with `phases` labels.
    pub fn relabel(&self, map: &[usize], phases: usize) -> Result<Self> {
        if map.len() < self.phases {
            return Err(Error::PhaseCountMismatch(map.len(), self.phases));
        }
        let labels = self.labels.iter().map(|&l| map[l]).collect();
        Self::new(self.width, self.height, labels, phases)
    }

    /// Same labels, larger label space (extra phases are empty).
    pub fn with_phases(&self, phases: usize) -> Result<Self> {
        Self::new(self.width, self.height, self.labels.clone(), phases)
    }
}

/// Strictly increasing thresholds `τ_1 < … < τ_{K-1}`, all in `(0, 1)`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct ThresholdVector(Vec<f64>);

impl ThresholdVector {
    pub fn new(taus: Vec<f64>) -> Result<Self> {
        if let Some(t) = taus.iter().find(|t| !(**t > 0.0 && **t < 1.0)) {
            return Err(Error::InvalidThresholds(format!(
                "threshold {t} is not inside (0, 1)"
            )));
        }
        if let Some(w) = taus.windows(2).find(|w| w[0] >= w[1]) {
            return Err(Error::InvalidThresholds(format!(
                "thresholds not strictly increasing: {} >= {}",
                w[0], w[1]
            )));
        }
        Ok(Self(taus))
    }

    pub fn empty() -> Self {
        Self(Vec::new())
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Number of phases `K = len + 1`.
    pub fn phases(&self) -> usize {
        self.0.len() + 1
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

impl TryFrom<Vec<f64>> for ThresholdVector {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<ThresholdVector> for Vec<f64> {
    fn from(t: ThresholdVector) -> Self {
        t.0
    }
}

fn check_dims(width: usize, height: usize) -> Result<()> {
    if width == 0 || height == 0 {
        return Err(Error::InvalidDimensions { width, height });
    }
    Ok(())
}

pub(crate) fn ensure_shape(expected: (usize, usize), actual: (usize, usize)) -> Result<()> {
    if expected != actual {
        return Err(Error::ShapeMismatch { expected, actual });
    }
    Ok(())
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Forward differences; zero across the last column / last row.
pub fn gradient(u: &Grid) -> VectorField {
    let (w, h) = u.shape();
    let mut dx = vec![0.0; w * h];
    let mut dy = vec![0.0; w * h];
    gradient_into(u.data(), w, h, &mut dx, &mut dy);
    VectorField {
        width: w,
        height: h,
        dx,
        dy,
    }
}

pub(crate) fn gradient_into(u: &[f64], w: usize, h: usize, dx: &mut [f64], dy: &mut [f64]) {
    for y in 0..h {
        let row = y * w;
        for x in 0..w {
            let i = row + x;
            dx[i] = if x + 1 < w { u[i + 1] - u[i] } else { 0.0 };
            dy[i] = if y + 1 < h { u[i + w] - u[i] } else { 0.0 };
        }
    }
}

/// Discrete divergence, the negative adjoint of [`gradient`]:
/// `<gradient(u), p> = -<u, divergence(p)>`.
pub fn divergence(p: &VectorField) -> Grid {
    let (w, h) = p.shape();
    let mut out = vec![0.0; w * h];
    divergence_into(&p.dx, &p.dy, w, h, &mut out);
    Grid {
        width: w,
        height: h,
        data: out,
    }
}

/// Divergence of `p`, checking that it lives on the given grid shape.
pub fn divergence_checked(p: &VectorField, shape: (usize, usize)) -> Result<Grid> {
    ensure_shape(shape, p.shape())?;
    Ok(divergence(p))
}

pub(crate) fn divergence_into(px: &[f64], py: &[f64], w: usize, h: usize, out: &mut [f64]) {
    for y in 0..h {
        let row = y * w;
        for x in 0..w {
            let i = row + x;
            let mut d = 0.0;
            if x + 1 < w {
                d += px[i];
            }
            if x > 0 {
                d -= px[i - 1];
            }
            if y + 1 < h {
                d += py[i];
            }
            if y > 0 {
                d -= py[i - w];
            }
            out[i] = d;
        }
    }
}

/// Total variation.
pub fn tv(u: &Grid, variant: TvVariant) -> f64 {
    let (w, h) = u.shape();
    let d = u.data();
    let mut sum = 0.0;
    for y in 0..h {
        let row = y * w;
        for x in 0..w {
            let i = row + x;
            let gx = if x + 1 < w { d[i + 1] - d[i] } else { 0.0 };
            let gy = if y + 1 < h { d[i + w] - d[i] } else { 0.0 };
            sum += match variant {
                TvVariant::Isotropic => (gx * gx + gy * gy).sqrt(),
                TvVariant::Anisotropic => gx.abs() + gy.abs(),
            };
        }
    }
    sum
}

/// `Per(A; Ω) = TV(χ_A)`.
pub fn perimeter(mask: &BinaryMask, variant: TvVariant) -> f64 {
    tv(&mask.indicator(), variant)
}

/// Mean of `f` over `A`; exactly 0 when `A` is empty.
pub fn mean_over(f: &Grid, mask: &BinaryMask) -> Result<f64> {
    ensure_shape(f.shape(), mask.shape())?;
    let (sum, count) = f
        .data()
        .iter()
        .zip(mask.bits())
        .filter(|(_, &b)| b)
        .fold((0.0, 0usize), |(s, c), (v, _)| (s + v, c + 1));
    Ok(if count == 0 { 0.0 } else { sum / count as f64 })
}

/// Strict super-level set `{x : u(x) > τ}`.
pub fn threshold_set(u: &Grid, tau: f64) -> BinaryMask {
    BinaryMask {
        width: u.width(),
        height: u.height(),
        bits: u.data().iter().map(|&v| v > tau).collect(),
    }
}

/// `label(x) = #{i : u(x) > τ_i}`.
pub fn partition_from_thresholds(u: &Grid, taus: &ThresholdVector) -> PhasePartition {
    let t = taus.as_slice();
    let labels = u
        .data()
        .iter()
        .map(|&v| t.partition_point(|&tau| tau < v))
        .collect();
    PhasePartition {
        width: u.width(),
        height: u.height(),
        labels,
        phases: taus.phases(),
    }
}

/// Same as [`partition_from_thresholds`] for a raw slice of thresholds,
/// which must be nondecreasing.
pub(crate) fn labels_from_sorted_thresholds(u: &[f64], taus: &[f64]) -> Vec<usize> {
    u.iter()
        .map(|&v| taus.partition_point(|&tau| tau < v))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_grid(rng: &mut ChaCha8Rng, w: usize, h: usize) -> Grid {
        Grid::from_fn(w, h, |_, _| rng.random::<f64>()).unwrap()
    }

    #[test]
    fn gradient_of_constant_is_zero() {
        let g = gradient(&Grid::new(3, 4, vec![0.7; 12]).unwrap());
        assert!(g.dx.iter().chain(&g.dy).all(|&v| v == 0.0));
    }

    #[test]
    fn gradient_single_difference() {
        let g = gradient(&Grid::new(2, 1, vec![0.0, 1.0]).unwrap());
        assert_eq!(g.dx, vec![1.0, 0.0]);
        assert_eq!(g.dy, vec![0.0, 0.0]);
    }

    #[test]
    fn gradient_matches_elementwise_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let u = random_grid(&mut rng, 4, 4);
        let g = gradient(&u);
        for y in 0..4 {
            for x in 0..4 {
                let ex = if x < 3 { u.get(x + 1, y) - u.get(x, y) } else { 0.0 };
                let ey = if y < 3 { u.get(x, y + 1) - u.get(x, y) } else { 0.0 };
                assert_eq!(g.dx[y * 4 + x], ex);
                assert_eq!(g.dy[y * 4 + x], ey);
            }
        }
    }

    #[test]
    fn divergence_of_zero_field() {
        let d = divergence(&VectorField::zeros(5, 3).unwrap());
        assert!(d.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn divergence_shape_mismatch() {
        let p = VectorField::zeros(5, 3).unwrap();
        assert!(matches!(
            divergence_checked(&p, (3, 5)),
            Err(Error::ShapeMismatch { .. })
        ));
    }

    #[test]
    fn adjoint_identity_random_pairs() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..10 {
            let u = random_grid(&mut rng, 8, 8);
            let px: Vec<f64> = (0..64).map(|_| rng.random::<f64>() - 0.5).collect();
            let py: Vec<f64> = (0..64).map(|_| rng.random::<f64>() - 0.5).collect();
            let p = VectorField::new(8, 8, px, py).unwrap();
            let lhs = gradient(&u).dot(&p).unwrap();
            let rhs = -u.dot(&divergence(&p)).unwrap();
            assert!((lhs - rhs).abs() < 1e-10, "{lhs} vs {rhs}");
        }
    }

    #[test]
    fn divergence_of_gradient_spike_is_laplacian_stencil() {
        // centered spike of height 1 on a 5x5 grid; interior 5-point Laplacian:
        // -4 at the center, +1 at the four neighbours, 0 elsewhere
        let u = Grid::from_fn(5, 5, |x, y| if (x, y) == (2, 2) { 1.0 } else { 0.0 }).unwrap();
        let lap = divergence(&gradient(&u));
        for y in 0..5 {
            for x in 0..5 {
                let expected = match (x as i32 - 2, y as i32 - 2) {
                    (0, 0) => -4.0,
                    (dx, dy) if dx.abs() + dy.abs() == 1 => 1.0,
                    _ => 0.0,
                };
                assert_eq!(lap.get(x, y), expected, "at ({x},{y})");
            }
        }
    }

    #[test]
    fn tv_examples() {
        assert_eq!(tv(&Grid::new(3, 3, vec![0.4; 9]).unwrap(), TvVariant::Isotropic), 0.0);
        let step = Grid::new(2, 2, vec![0.0, 1.0, 0.0, 1.0]).unwrap();
        assert_eq!(tv(&step, TvVariant::Anisotropic), 2.0);
        // vertical edge of height h across n rows
        let (n, h) = (7, 0.3);
        let edge = Grid::from_fn(6, n, |x, _| if x >= 3 { h } else { 0.0 }).unwrap();
        assert!((tv(&edge, TvVariant::Anisotropic) - n as f64 * h).abs() < 1e-12);
    }

    #[test]
    fn perimeter_examples() {
        let empty = BinaryMask::empty(4, 4).unwrap();
        let full = BinaryMask::full(4, 4).unwrap();
        assert_eq!(perimeter(&empty, TvVariant::Anisotropic), 0.0);
        assert_eq!(perimeter(&full, TvVariant::Isotropic), 0.0);
        let dot = BinaryMask::from_fn(5, 5, |x, y| (x, y) == (2, 2)).unwrap();
        assert_eq!(perimeter(&dot, TvVariant::Anisotropic), 4.0);
        assert!(perimeter(&dot, TvVariant::Isotropic) <= perimeter(&dot, TvVariant::Anisotropic));
    }

    #[test]
    fn mean_over_examples() {
        let f = Grid::new(1, 2, vec![0.2, 0.8]).unwrap();
        assert_eq!(mean_over(&f, &BinaryMask::empty(1, 2).unwrap()).unwrap(), 0.0);
        assert!((mean_over(&f, &BinaryMask::full(1, 2).unwrap()).unwrap() - 0.5).abs() < 1e-15);
        let c = Grid::new(3, 3, vec![0.37; 9]).unwrap();
        let a = BinaryMask::from_fn(3, 3, |x, y| x == y).unwrap();
        assert!((mean_over(&c, &a).unwrap() - 0.37).abs() < 1e-15);
        assert!(matches!(
            mean_over(&c, &BinaryMask::full(2, 2).unwrap()),
            Err(Error::ShapeMismatch { .. })
        ));
    }

    #[test]
    fn threshold_set_examples() {
        let u = Grid::new(3, 1, vec![0.1, 0.5, 0.9]).unwrap();
        assert_eq!(threshold_set(&u, 0.5).bits(), &[false, false, true]);
        assert!(threshold_set(&u, 0.9).is_empty_set());
        assert_eq!(threshold_set(&u, 0.05).count(), 3);
    }

    #[test]
    fn partition_from_thresholds_examples() {
        let u = Grid::new(3, 1, vec![0.1, 0.4, 0.8]).unwrap();
        let p = partition_from_thresholds(&u, &ThresholdVector::empty());
        assert_eq!(p.labels(), &[0, 0, 0]);
        assert_eq!(p.phases(), 1);
        let t = ThresholdVector::new(vec![0.3, 0.6]).unwrap();
        let p = partition_from_thresholds(&u, &t);
        assert_eq!(p.labels(), &[0, 1, 2]);
        let masks = p.nested_masks();
        assert!(masks[1].is_subset_of(&masks[0]));
        assert_eq!(PhasePartition::from_nested_masks(&masks).unwrap(), p);
    }

    #[test]
    fn threshold_vector_validation() {
        assert!(ThresholdVector::new(vec![0.5, 0.5]).is_err());
        assert!(ThresholdVector::new(vec![0.6, 0.5]).is_err());
        assert!(ThresholdVector::new(vec![0.0]).is_err());
        assert!(ThresholdVector::new(vec![1.0]).is_err());
        assert!(ThresholdVector::new(vec![0.2, 0.7]).is_ok());
    }

    #[test]
    fn gray_image_range_checked() {
        assert!(GrayImage::new(2, 1, vec![0.0, 1.0]).is_ok());
        assert!(matches!(
            GrayImage::new(2, 1, vec![0.0, 1.5]),
            Err(Error::IntensityOutOfRange { index: 1, .. })
        ));
        assert!(matches!(
            GrayImage::new(2, 2, vec![0.0]),
            Err(Error::DataLength { .. })
        ));
        assert!(GrayImage::new(0, 2, vec![]).is_err());
    }
}
