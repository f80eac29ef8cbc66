//! The source shape `g(t, x)` multiplying the scalar control input.

use ndarray::Array2;

use crate::error::{KawaError, Result};
use crate::grid::SpaceTimeGrid;
use crate::interp::cubic_2d;

/// `g(t, x)` sampled on the space-time grid (rows: time nodes, columns:
/// space nodes). A preset tag is kept when the shape came from a named
/// closed form, so problem files round-trip.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceShape {
    samples: Array2<f64>,
    tau: f64,
    h: f64,
    x_min: f64,
    pub preset: Option<String>,
}

impl SourceShape {
    pub fn from_fn(grid: &SpaceTimeGrid, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut samples = Array2::zeros((grid.n_time + 1, grid.n_space + 1));
        for n in 0..=grid.n_time {
            for j in 0..=grid.n_space {
                samples[[n, j]] = f(grid.t(n), grid.x(j));
            }
        }
        SourceShape {
            samples,
            tau: grid.tau,
            h: grid.h,
            x_min: grid.x_min,
            preset: None,
        }
    }

    pub fn from_samples(grid: &SpaceTimeGrid, samples: Array2<f64>) -> Result<Self> {
        if samples.nrows() != grid.n_time + 1 || samples.ncols() != grid.n_space + 1 {
            return Err(KawaError::Validation(format!(
                "source shape dimensions {:?} do not match the {} x {} grid",
                samples.dim(),
                grid.n_time + 1,
                grid.n_space + 1
            )));
        }
        if samples.iter().any(|v| !v.is_finite()) {
            return Err(KawaError::Validation(
                "source shape contains non-finite samples".into(),
            ));
        }
        Ok(SourceShape {
            samples,
            tau: grid.tau,
            h: grid.h,
            x_min: grid.x_min,
            preset: None,
        })
    }

    pub fn with_preset(mut self, name: &str) -> Self {
        self.preset = Some(name.to_string());
        self
    }

    pub fn samples(&self) -> &Array2<f64> {
        &self.samples
    }

    pub fn value(&self, n: usize, j: usize) -> f64 {
        self.samples[[n, j]]
    }

    /// Row of samples at time node `n`.
    pub fn space_slice(&self, n: usize) -> &[f64] {
        self.samples.row(n).to_slice().expect("contiguous row")
    }

    /// Cubic interpolation at an arbitrary point of the covered window.
    pub fn eval(&self, t: f64, x: f64) -> f64 {
        cubic_2d(&self.samples, self.tau, self.x_min, self.h, t, x)
    }

    /// Resample onto another grid contained in the covered window.
    pub fn resample(&self, grid: &SpaceTimeGrid, map_t: impl Fn(f64) -> f64, map_x: impl Fn(f64) -> f64, scale: f64) -> SourceShape {
        SourceShape::from_fn(grid, |t, x| scale * self.eval(map_t(t), map_x(x)))
    }
}

/// Named source presets on a grid.
pub fn preset_source(name: &str, grid: &SpaceTimeGrid) -> Result<SourceShape> {
    let shape = match name {
        // time-independent exponential, the canonical choice on a half-line
        "exp_decay" => SourceShape::from_fn(grid, |_, x| (-x).exp()),
        // centered bump, usable on the real line
        "gaussian" => SourceShape::from_fn(grid, |_, x| (-(x * x)).exp()),
        other => {
            return Err(KawaError::Parse(format!(
                "unknown source preset '{other}' (expected exp_decay or gaussian)"
            )))
        }
    };
    Ok(shape.with_preset(name))
}
