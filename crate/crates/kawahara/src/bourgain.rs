//! Discrete surrogates for the space-time restriction norms and an
//! empirical probe of the bilinear derivative estimate.
//!
//! Fields are zero-extended off the computational window before the
//! two-dimensional discrete transform; this gives an upper surrogate for
//! the restriction norm (which is defined through an infimum over
//! extensions), never the infimum itself. The fifth power of the spatial
//! frequency in the modulation weight `<tau - xi^5>` is evaluated on the
//! same discrete lattice as the transform; frequencies beyond the window's
//! Nyquist limit do not occur.
//!
//! Probe ratios are empirical constants on a finite window. They are never
//! bounds; reports carry an explicit flag to that effect.

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rustfft::{num_complex::Complex, FftPlanner};
use serde::Serialize;

use crate::error::{KawaError, Result};
use crate::grid::SpaceTimeGrid;

/// A sampled space-time field, implicitly zero off the window.
#[derive(Debug, Clone)]
pub struct SpaceTimeField {
    pub values: Array2<f64>,
    pub grid: SpaceTimeGrid,
}

impl SpaceTimeField {
    pub fn from_fn(grid: &SpaceTimeGrid, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut values = Array2::zeros((grid.n_time + 1, grid.n_space + 1));
        for n in 0..=grid.n_time {
            for j in 0..=grid.n_space {
                values[[n, j]] = f(grid.t(n), grid.x(j));
            }
        }
        SpaceTimeField {
            values,
            grid: *grid,
        }
    }

    /// Discrete `L^2_{t,x}` norm (rectangle rule, matching the transform's
    /// Parseval convention).
    pub fn l2(&self) -> f64 {
        let sum: f64 = self.values.iter().map(|v| v * v).sum();
        (sum * self.grid.tau * self.grid.h).sqrt()
    }

    /// Pointwise product with another field on the same grid.
    pub fn product(&self, other: &SpaceTimeField) -> SpaceTimeField {
        assert_eq!(self.values.dim(), other.values.dim());
        SpaceTimeField {
            values: &self.values * &other.values,
            grid: self.grid,
        }
    }
}

/// Which weighted norm to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum NormKind {
    /// `<xi>^{2s} <tau - xi^5>^{2b}` against the dispersion surface.
    Xsb,
    /// Time-adapted variant `<tau>^{2s/5} <tau - xi^5>^{2b}`.
    Ysb,
    /// Low-frequency localization `<tau>^{2a} 1_{|xi| <= 1}`.
    Dalpha,
}

/// Unitary-convention space-time transform of the zero-extended samples:
/// `fft2(u) * tau * h / (2 pi)`, bin `(k, m)` at angular frequencies
/// `tau_k = 2 pi k / (n_t tau)`, `xi_m = 2 pi m / (n_x h)` (signed).
fn transform(field: &SpaceTimeField) -> (Array2<Complex<f64>>, Vec<f64>, Vec<f64>) {
    let n_t = field.grid.n_time + 1;
    let n_x = field.grid.n_space + 1;
    let mut data: Vec<Complex<f64>> = field
        .values
        .iter()
        .map(|&v| Complex::new(v, 0.0))
        .collect();
    let mut planner = FftPlanner::new();
    // rows (space direction) first
    let fft_x = planner.plan_fft_forward(n_x);
    for row in data.chunks_exact_mut(n_x) {
        fft_x.process(row);
    }
    // then columns (time direction)
    let fft_t = planner.plan_fft_forward(n_t);
    let mut col = vec![Complex::new(0.0, 0.0); n_t];
    for m in 0..n_x {
        for k in 0..n_t {
            col[k] = data[k * n_x + m];
        }
        fft_t.process(&mut col);
        for k in 0..n_t {
            data[k * n_x + m] = col[k];
        }
    }
    let scale = field.grid.tau * field.grid.h / (2.0 * std::f64::consts::PI);
    let spectrum =
        Array2::from_shape_vec((n_t, n_x), data.into_iter().map(|c| c * scale).collect())
            .expect("shape");
    let signed = |idx: usize, len: usize, period: f64| -> f64 {
        let k = if idx <= len / 2 {
            idx as f64
        } else {
            idx as f64 - len as f64
        };
        2.0 * std::f64::consts::PI * k / period
    };
    let tau_freqs: Vec<f64> = (0..n_t)
        .map(|k| signed(k, n_t, n_t as f64 * field.grid.tau))
        .collect();
    let xi_freqs: Vec<f64> = (0..n_x)
        .map(|m| signed(m, n_x, n_x as f64 * field.grid.h))
        .collect();
    (spectrum, tau_freqs, xi_freqs)
}

fn bracket_sq(v: f64) -> f64 {
    1.0 + v * v
}

/// Weighted space-time norm of the zero-extended field.
pub fn weighted_spacetime_norm(
    field: &SpaceTimeField,
    kind: NormKind,
    s: f64,
    b_or_alpha: f64,
) -> f64 {
    assert!(
        s.is_finite() && b_or_alpha.is_finite(),
        "norm parameters must be finite"
    );
    let (spectrum, tau_freqs, xi_freqs) = transform(field);
    let n_t = tau_freqs.len();
    let n_x = xi_freqs.len();
    let d_tau = 2.0 * std::f64::consts::PI / (n_t as f64 * field.grid.tau);
    let d_xi = 2.0 * std::f64::consts::PI / (n_x as f64 * field.grid.h);
    let mut acc = 0.0;
    for k in 0..n_t {
        let tau = tau_freqs[k];
        for m in 0..n_x {
            let xi = xi_freqs[m];
            let weight = match kind {
                NormKind::Xsb => {
                    bracket_sq(xi).powf(s) * bracket_sq(tau - xi.powi(5)).powf(b_or_alpha)
                }
                NormKind::Ysb => {
                    bracket_sq(tau).powf(s / 5.0) * bracket_sq(tau - xi.powi(5)).powf(b_or_alpha)
                }
                NormKind::Dalpha => {
                    if xi.abs() <= 1.0 {
                        bracket_sq(tau).powf(b_or_alpha)
                    } else {
                        0.0
                    }
                }
            };
            acc += weight * spectrum[[k, m]].norm_sqr();
        }
    }
    (acc * d_tau * d_xi).max(0.0).sqrt()
}

/// `X^{s,-b}` norm of the spatial derivative of a field, evaluated in
/// Fourier space as `|xi| |F[w]|`.
pub fn xsb_norm_of_x_derivative(field: &SpaceTimeField, s: f64, b: f64) -> f64 {
    let (spectrum, tau_freqs, xi_freqs) = transform(field);
    let n_t = tau_freqs.len();
    let n_x = xi_freqs.len();
    let d_tau = 2.0 * std::f64::consts::PI / (n_t as f64 * field.grid.tau);
    let d_xi = 2.0 * std::f64::consts::PI / (n_x as f64 * field.grid.h);
    let mut acc = 0.0;
    for k in 0..n_t {
        let tau = tau_freqs[k];
        for m in 0..n_x {
            let xi = xi_freqs[m];
            let weight = bracket_sq(xi).powf(s) * bracket_sq(tau - xi.powi(5)).powf(-b);
            acc += weight * (xi * xi) * spectrum[[k, m]].norm_sqr();
        }
    }
    (acc * d_tau * d_xi).max(0.0).sqrt()
}

/// `max(Xsb, Dalpha)` combination used as the factor norm in the probe.
pub fn intersection_norm(field: &SpaceTimeField, s: f64, b: f64, alpha: f64) -> f64 {
    weighted_spacetime_norm(field, NormKind::Xsb, s, b)
        .max(weighted_spacetime_norm(field, NormKind::Dalpha, 0.0, alpha))
}

/// Statistics of the empirical bilinear-estimate probe.
#[derive(Debug, Clone, Serialize)]
pub struct ProbeReport {
    pub s: f64,
    pub b: f64,
    pub alpha: f64,
    pub seed: u64,
    pub ensemble_size: usize,
    pub max_ratio: f64,
    pub median_ratio: f64,
    pub ratios: Vec<f64>,
    /// Ratios are measured constants on one window, not bounds.
    pub empirical_only: bool,
}

/// Random smooth compactly supported field: a few modulated Gaussian bumps
/// kept away from the window edges.
pub fn random_probe_field(grid: &SpaceTimeGrid, seed: u64, member: u64, stream: u64) -> SpaceTimeField {
    let mut rng =
        ChaCha8Rng::seed_from_u64(seed ^ member.wrapping_mul(0x9E3779B97F4A7C15) ^ (stream << 32));
    let t_span = grid.horizon;
    let x_lo = grid.x_min;
    let x_span = grid.x(grid.n_space) - x_lo;
    let mut bumps = Vec::new();
    for _ in 0..3 {
        let amp: f64 = rng.gen_range(-1.0..1.0);
        let tc: f64 = rng.gen_range(0.3 * t_span..0.7 * t_span);
        let xc: f64 = rng.gen_range(x_lo + 0.3 * x_span..x_lo + 0.7 * x_span);
        let tw: f64 = rng.gen_range(0.05 * t_span..0.12 * t_span);
        let xw: f64 = rng.gen_range(0.05 * x_span..0.12 * x_span);
        let kt: f64 = rng.gen_range(0.0..3.0) * 2.0 * std::f64::consts::PI / t_span;
        let kx: f64 = rng.gen_range(0.0..3.0) * 2.0 * std::f64::consts::PI / x_span;
        let phase: f64 = rng.gen_range(0.0..2.0 * std::f64::consts::PI);
        bumps.push((amp, tc, xc, tw, xw, kt, kx, phase));
    }
    SpaceTimeField::from_fn(grid, move |t, x| {
        bumps
            .iter()
            .map(|&(amp, tc, xc, tw, xw, kt, kx, phase)| {
                amp * (-((t - tc) / tw).powi(2) - ((x - xc) / xw).powi(2)).exp()
                    * (kt * t + kx * x + phase).cos()
            })
            .sum()
    })
}

/// For random field pairs, compare `||d_x(uv)||_{X^{s,-b}}` with the
/// product of the factors' intersection norms and report the ratio
/// statistics. A vanishing denominator counts as ratio zero.
pub fn bilinear_probe(
    grid: &SpaceTimeGrid,
    ensemble_size: usize,
    s: f64,
    b: f64,
    alpha: f64,
    seed: u64,
) -> Result<ProbeReport> {
    if !(b < 0.5) {
        return Err(KawaError::Validation(format!(
            "the modulation exponent must satisfy b < 1/2, got {b}"
        )));
    }
    if !(alpha > 0.5) {
        return Err(KawaError::Validation(format!(
            "the low-frequency exponent must satisfy alpha > 1/2, got {alpha}"
        )));
    }
    if !(s > -1.75) {
        return Err(KawaError::Validation(format!(
            "the regularity must satisfy s > -7/4, got {s}"
        )));
    }
    if ensemble_size == 0 {
        return Err(KawaError::Validation("ensemble size must be >= 1".into()));
    }
    let ratios: Vec<f64> = (0..ensemble_size)
        .into_par_iter()
        .map(|member| {
            let u = random_probe_field(grid, seed, member as u64, 1);
            let v = random_probe_field(grid, seed, member as u64, 2);
            let nu = intersection_norm(&u, s, b, alpha);
            let nv = intersection_norm(&v, s, b, alpha);
            if nu == 0.0 || nv == 0.0 {
                return 0.0;
            }
            let numerator = xsb_norm_of_x_derivative(&u.product(&v), s, b);
            numerator / (nu * nv)
        })
        .collect();
    let mut sorted = ratios.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(ProbeReport {
        s,
        b,
        alpha,
        seed,
        ensemble_size,
        max_ratio: *sorted.last().unwrap(),
        median_ratio: sorted[sorted.len() / 2],
        ratios,
        empirical_only: true,
    })
}

/// Default probe window: a periodic-friendly box, resolution capped so
/// ensembles stay fast.
pub fn probe_grid(n_space: usize, n_time: usize) -> SpaceTimeGrid {
    let domain = crate::grid::Domain::right_half_line(24.0);
    SpaceTimeGrid::new(&domain, n_space, n_time, 4.0).expect("probe grid")
}
