//! ROF restoration `min_u TV(u) + (mu/2) |u - f|^2`.
//!
//! [`solve_rof`] uses ADMM on the split `z = ∇u` with scaled dual `b`:
//!
//! ```text
//! u <- (mu I + rho ∇ᵀ∇)^{-1} (mu f + rho ∇ᵀ(z - b))     (conjugate gradient)
//! z <- shrink(∇u + b, 1/rho)
//! b <- b + ∇u - z
//! ```
//!
//! and stops once `|u_i - u_{i-1}| / |u_i| <= eps_u`. [`taut_string_1d`] is an
//! exact direct solver for one-dimensional signals, used to check the ADMM
//! path.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::{
    divergence_into, ensure_shape, gradient_into, tv, GrayImage, Grid, TvVariant,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RofParams {
    /// Fidelity weight.
    pub mu: f64,
    /// ADMM penalty.
    pub rho: f64,
    /// Relative-change tolerance on `u`.
    pub eps_u: f64,
    pub max_iter: usize,
    pub variant: TvVariant,
    /// Relative residual tolerance of the inner CG solve.
    pub cg_tol: f64,
    pub cg_max_iter: usize,
}

impl RofParams {
    pub fn new(mu: f64) -> Self {
        Self {
            mu,
            ..Self::default()
        }
    }

    pub fn with_variant(mut self, variant: TvVariant) -> Self {
        self.variant = variant;
        self
    }

    pub fn with_eps_u(mut self, eps_u: f64) -> Self {
        self.eps_u = eps_u;
        self
    }

    pub fn with_max_iter(mut self, max_iter: usize) -> Self {
        self.max_iter = max_iter;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("mu", self.mu),
            ("rho", self.rho),
            ("eps_u", self.eps_u),
            ("cg_tol", self.cg_tol),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        if self.eps_u >= 1.0 {
            return Err(Error::InvalidParameter(format!(
                "eps_u must be < 1, got {}",
                self.eps_u
            )));
        }
        if self.max_iter == 0 || self.cg_max_iter == 0 {
            return Err(Error::InvalidParameter(
                "iteration limits must be positive".into(),
            ));
        }
        Ok(())
    }
}

impl Default for RofParams {
    fn default() -> Self {
        Self {
            mu: 8.0,
            rho: 2.0,
            eps_u: 1e-4,
            max_iter: 2000,
            variant: TvVariant::Isotropic,
            cg_tol: 1e-8,
            cg_max_iter: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RofSolution {
    /// Minimizer, clamped to `[min f, max f]`.
    pub u: GrayImage,
    pub iterations: usize,
    pub relative_change_history: Vec<f64>,
    /// ROF energy of the clamped `u`.
    pub final_energy: f64,
    /// False when `max_iter` was hit before the relative change fell below `eps_u`.
    pub converged: bool,
    /// Extremes of the last iterate before clamping.
    pub raw_min: f64,
    pub raw_max: f64,
}

/// `TV(u) + (mu/2) Σ (u - f)^2`
pub fn rof_energy(u: &Grid, f: &Grid, mu: f64, variant: TvVariant) -> Result<f64> {
    ensure_shape(f.shape(), u.shape())?;
    let fidelity: f64 = u
        .data()
        .iter()
        .zip(f.data())
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    Ok(tv(u, variant) + 0.5 * mu * fidelity)
}

/// Solves the ROF problem by ADMM. Non-convergence is reported through
/// [`RofSolution::converged`], not as an error.
pub fn solve_rof(f: &GrayImage, params: &RofParams) -> Result<RofSolution> {
    params.validate()?;
    let (w, h) = f.shape();
    let n = w * h;
    let fd = f.data();
    let mu = params.mu;
    let rho = params.rho;
    let shrink = 1.0 / rho;

    let mut u = fd.to_vec();
    let mut u_prev = vec![0.0; n];
    let mut zx = vec![0.0; n];
    let mut zy = vec![0.0; n];
    gradient_into(&u, w, h, &mut zx, &mut zy);
    let mut bx = vec![0.0; n];
    let mut by = vec![0.0; n];
    let mut gx = vec![0.0; n];
    let mut gy = vec![0.0; n];
    let mut rhs = vec![0.0; n];
    let mut div = vec![0.0; n];
    let mut cg = CgWorkspace::new(n);

    let mut history = Vec::new();
    let mut converged = false;
    let mut iterations = 0;

    for _ in 0..params.max_iter {
        iterations += 1;
        for i in 0..n {
            gx[i] = zx[i] - bx[i];
            gy[i] = zy[i] - by[i];
        }
        divergence_into(&gx, &gy, w, h, &mut div);
        for i in 0..n {
            rhs[i] = mu * fd[i] - rho * div[i];
        }
        u_prev.copy_from_slice(&u);
        cg.solve(&mut u, &rhs, w, h, mu, rho, params.cg_tol, params.cg_max_iter);

        gradient_into(&u, w, h, &mut gx, &mut gy);
        match params.variant {
            TvVariant::Isotropic => {
                for i in 0..n {
                    let vx = gx[i] + bx[i];
                    let vy = gy[i] + by[i];
                    let norm = (vx * vx + vy * vy).sqrt();
                    let s = if norm > shrink { 1.0 - shrink / norm } else { 0.0 };
                    zx[i] = s * vx;
                    zy[i] = s * vy;
                }
            }
            TvVariant::Anisotropic => {
                for i in 0..n {
                    zx[i] = soft_threshold(gx[i] + bx[i], shrink);
                    zy[i] = soft_threshold(gy[i] + by[i], shrink);
                }
            }
        }
        let mut primal_residual = 0.0f64;
        for i in 0..n {
            let rx = gx[i] - zx[i];
            let ry = gy[i] - zy[i];
            bx[i] += rx;
            by[i] += ry;
            primal_residual = primal_residual.max(rx.abs()).max(ry.abs());
        }

        let diff: f64 = u
            .iter()
            .zip(&u_prev)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        let norm: f64 = u.iter().map(|a| a * a).sum::<f64>().sqrt();
        let rel = if norm == 0.0 { 0.0 } else { diff / norm };
        history.push(rel);
        // With the warm start u = f, z = ∇f the first u-update never moves,
        // so a zero change is only meaningful once the split is consistent.
        let stationary = iterations > 1 || primal_residual == 0.0;
        if stationary && rel <= params.eps_u {
            converged = true;
            break;
        }
    }

    let raw_min = u.iter().copied().fold(f64::INFINITY, f64::min);
    let raw_max = u.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let (lo, hi) = (f.min(), f.max());
    for v in u.iter_mut() {
        *v = v.clamp(lo, hi);
    }
    let u = GrayImage::from_grid(Grid::new(w, h, u)?)?;
    let final_energy = rof_energy(&u, f, mu, params.variant)?;
    Ok(RofSolution {
        u,
        iterations,
        relative_change_history: history,
        final_energy,
        converged,
        raw_min,
        raw_max,
    })
}

#[inline]
fn soft_threshold(v: f64, t: f64) -> f64 {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}

struct CgWorkspace {
    r: Vec<f64>,
    p: Vec<f64>,
    ap: Vec<f64>,
    gx: Vec<f64>,
    gy: Vec<f64>,
}

impl CgWorkspace {
    fn new(n: usize) -> Self {
        Self {
            r: vec![0.0; n],
            p: vec![0.0; n],
            ap: vec![0.0; n],
            gx: vec![0.0; n],
            gy: vec![0.0; n],
        }
    }

    /// `out = mu v - rho div(∇v)`
    fn apply(&mut self, v: &[f64], out: &mut [f64], w: usize, h: usize, mu: f64, rho: f64) {
        gradient_into(v, w, h, &mut self.gx, &mut self.gy);
        divergence_into(&self.gx, &self.gy, w, h, out);
        for (o, &vi) in out.iter_mut().zip(v) {
            *o = mu * vi - rho * *o;
        }
    }

    /// Conjugate gradient for `(mu I + rho ∇ᵀ∇) x = b`, warm-started at `x`.
    #[allow(clippy::too_many_arguments)]
    fn solve(
        &mut self,
        x: &mut [f64],
        b: &[f64],
        w: usize,
        h: usize,
        mu: f64,
        rho: f64,
        tol: f64,
        max_iter: usize,
    ) -> usize {
        let mut ax = std::mem::take(&mut self.ap);
        self.apply(x, &mut ax, w, h, mu, rho);
        self.ap = ax;
        for i in 0..x.len() {
            self.r[i] = b[i] - self.ap[i];
        }
        let b_norm = b.iter().map(|v| v * v).sum::<f64>().sqrt();
        let target = tol * b_norm.max(f64::MIN_POSITIVE);
        let mut rr: f64 = self.r.iter().map(|v| v * v).sum();
        if rr.sqrt() <= target {
            return 0;
        }
        self.p.copy_from_slice(&self.r);
        for k in 1..=max_iter {
            let p = std::mem::take(&mut self.p);
            let mut ap = std::mem::take(&mut self.ap);
            self.apply(&p, &mut ap, w, h, mu, rho);
            let pap: f64 = p.iter().zip(&ap).map(|(a, b)| a * b).sum();
            let alpha = rr / pap;
            for i in 0..x.len() {
                x[i] += alpha * p[i];
                self.r[i] -= alpha * ap[i];
            }
            self.p = p;
            self.ap = ap;
            let rr_new: f64 = self.r.iter().map(|v| v * v).sum();
            if rr_new.sqrt() <= target {
                return k;
            }
            let beta = rr_new / rr;
            rr = rr_new;
            for i in 0..x.len() {
                self.p[i] = self.r[i] + beta * self.p[i];
            }
        }
        max_iter
    }
}

/// Exact minimizer of `Σ|u_{k+1} - u_k| + (mu/2) Σ(u_k - f_k)^2`.
///
/// Direct taut-string algorithm (Condat's formulation) with
/// `lambda = 1 / mu`; linear time in practice.
pub fn taut_string_1d(f: &[f64], mu: f64) -> Vec<f64> {
    let n = f.len();
    let mut out = vec![0.0; n];
    if n == 0 {
        return out;
    }
    let lambda = 1.0 / mu;
    let two_lambda = 2.0 * lambda;
    let min_lambda = -lambda;

    // k: current sample, k0: start of current segment; kplus/kminus: last
    // positions where umax = -lambda / umin = lambda.
    let (mut k, mut k0, mut kplus, mut kminus) = (0usize, 0usize, 0usize, 0usize);
    let mut umin = lambda;
    let mut umax = -lambda;
    let mut vmin = f[0] - lambda;
    let mut vmax = f[0] + lambda;

    loop {
        while k == n - 1 {
            if umin < 0.0 {
                loop {
                    out[k0] = vmin;
                    k0 += 1;
                    if k0 > kminus {
                        break;
                    }
                }
                k = k0;
                kminus = k0;
                vmin = f[k0];
                umin = lambda;
                umax = vmin + umin - vmax;
            } else if umax > 0.0 {
                loop {
                    out[k0] = vmax;
                    k0 += 1;
                    if k0 > kplus {
                        break;
                    }
                }
                k = k0;
                kplus = k0;
                vmax = f[k0];
                umax = min_lambda;
                umin = vmax + umax - vmin;
            } else {
                vmin += umin / (k - k0 + 1) as f64;
                loop {
                    out[k0] = vmin;
                    k0 += 1;
                    if k0 > k {
                        break;
                    }
                }
                return out;
            }
        }
        umin += f[k + 1] - vmin;
        if umin < min_lambda {
            loop {
                out[k0] = vmin;
                k0 += 1;
                if k0 > kminus {
                    break;
                }
            }
            k = k0;
            kplus = k0;
            kminus = k0;
            vmin = f[k0];
            vmax = vmin + two_lambda;
            umin = lambda;
            umax = min_lambda;
            continue;
        }
        umax += f[k + 1] - vmax;
        if umax > lambda {
            loop {
                out[k0] = vmax;
                k0 += 1;
                if k0 > kplus {
                    break;
                }
            }
            k = k0;
            kplus = k0;
            kminus = k0;
            vmax = f[k0];
            vmin = vmax - two_lambda;
            umin = lambda;
            umax = min_lambda;
        } else {
            k += 1;
            if umin >= lambda {
                kminus = k;
                vmin += (umin - lambda) / (kminus - k0 + 1) as f64;
                umin = lambda;
            }
            if umax <= min_lambda {
                kplus = k;
                vmax += (umax + lambda) / (kplus - k0 + 1) as f64;
                umax = min_lambda;
            }
        }
    }
}
