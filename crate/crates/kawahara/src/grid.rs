//! Uniform space-time grids on truncated domains.

use serde::{Deserialize, Serialize};

use crate::error::{KawaError, Result};

/// Computational domain: a truncation of the right half-line or of the
/// real line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum DomainKind {
    /// `[0, R]`, boundary data imposed at `x = 0`.
    RightHalfLine,
    /// `[-L, R]`, homogeneous closures at both ends.
    RealLine,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Domain {
    pub kind: DomainKind,
    /// Right truncation radius `R > 0`.
    pub truncation_radius: f64,
    /// Left cutoff `L > 0`; only meaningful for [`DomainKind::RealLine`].
    pub left_cutoff: f64,
}

impl Domain {
    pub fn right_half_line(radius: f64) -> Self {
        Domain {
            kind: DomainKind::RightHalfLine,
            truncation_radius: radius,
            left_cutoff: 0.0,
        }
    }

    pub fn real_line(left_cutoff: f64, radius: f64) -> Self {
        Domain {
            kind: DomainKind::RealLine,
            truncation_radius: radius,
            left_cutoff,
        }
    }

    pub fn x_min(&self) -> f64 {
        match self.kind {
            DomainKind::RightHalfLine => 0.0,
            DomainKind::RealLine => -self.left_cutoff,
        }
    }

    pub fn x_max(&self) -> f64 {
        self.truncation_radius
    }

    pub fn length(&self) -> f64 {
        self.x_max() - self.x_min()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.truncation_radius > 0.0) || !self.truncation_radius.is_finite() {
            return Err(KawaError::Validation(format!(
                "truncation radius must be positive and finite, got {}",
                self.truncation_radius
            )));
        }
        if self.kind == DomainKind::RealLine
            && (!(self.left_cutoff > 0.0) || !self.left_cutoff.is_finite())
        {
            return Err(KawaError::Validation(format!(
                "real-line domain needs a positive left cutoff, got {}",
                self.left_cutoff
            )));
        }
        Ok(())
    }
}

/// Uniform tensor grid: `n_space + 1` nodes in space, `n_time + 1` in time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpaceTimeGrid {
    pub h: f64,
    pub tau: f64,
    pub n_space: usize,
    pub n_time: usize,
    pub horizon: f64,
    pub x_min: f64,
}

impl SpaceTimeGrid {
    /// Build the grid covering `domain x [0, horizon]` with `n_space` space
    /// cells and `n_time` time steps.
    pub fn new(domain: &Domain, n_space: usize, n_time: usize, horizon: f64) -> Result<Self> {
        if n_space < 16 {
            return Err(KawaError::Validation(format!(
                "need at least 16 space cells for the interior stencils, got {n_space}"
            )));
        }
        if n_time < 2 {
            return Err(KawaError::Validation(format!(
                "need at least 2 time steps, got {n_time}"
            )));
        }
        if !(horizon > 0.0) || !horizon.is_finite() {
            return Err(KawaError::Validation(format!(
                "horizon must be positive, got {horizon}"
            )));
        }
        let h = domain.length() / n_space as f64;
        let tau = horizon / n_time as f64;
        Ok(SpaceTimeGrid {
            h,
            tau,
            n_space,
            n_time,
            horizon,
            x_min: domain.x_min(),
        })
    }

    pub fn x(&self, j: usize) -> f64 {
        self.x_min + j as f64 * self.h
    }

    pub fn t(&self, n: usize) -> f64 {
        n as f64 * self.tau
    }

    pub fn x_nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..=self.n_space).map(move |j| self.x(j))
    }

    pub fn t_nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..=self.n_time).map(move |n| self.t(n))
    }

    /// Consistency between step counts, spacings and the stated spans.
    pub fn validate(&self) -> Result<()> {
        let t_span = self.n_time as f64 * self.tau;
        if (t_span - self.horizon).abs() > 1e-9 * self.horizon.max(1.0) {
            return Err(KawaError::Validation(format!(
                "n_time * tau = {t_span} does not reproduce the horizon {}",
                self.horizon
            )));
        }
        if !(self.h > 0.0) || !(self.tau > 0.0) {
            return Err(KawaError::Validation(
                "grid spacings must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Composite trapezoid weights: 1/2 at the ends, 1 inside, scaled by the
/// spacing.
pub fn trapezoid_weight(i: usize, n_last: usize, spacing: f64) -> f64 {
    if i == 0 || i == n_last {
        0.5 * spacing
    } else {
        spacing
    }
}

/// Composite trapezoid quadrature of sampled values.
pub fn trapezoid(values: &[f64], spacing: f64) -> f64 {
    let m = values.len();
    if m < 2 {
        return 0.0;
    }
    let mut acc = 0.5 * (values[0] + values[m - 1]);
    for v in &values[1..m - 1] {
        acc += v;
    }
    acc * spacing
}

/// Trapezoid inner product of two sample vectors on the same grid.
pub fn trapezoid_inner(a: &[f64], b: &[f64], spacing: f64) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let m = a.len();
    if m < 2 {
        return 0.0;
    }
    let mut acc = 0.5 * (a[0] * b[0] + a[m - 1] * b[m - 1]);
    for i in 1..m - 1 {
        acc += a[i] * b[i];
    }
    acc * spacing
}

/// Discrete L2 norm via trapezoid quadrature.
pub fn trapezoid_l2(values: &[f64], spacing: f64) -> f64 {
    trapezoid_inner(values, values, spacing).max(0.0).sqrt()
}
