//! Ready-made problems and data functions shared by tests, examples and
//! the problem-file loader.

use crate::error::{KawaError, Result};
use crate::grid::{Domain, SpaceTimeGrid};
use crate::problem::{Coefficients, Problem};
use crate::signal::{NormExponent, TimeSignal};
use crate::source::preset_source;
use crate::weight::preset_weight;

/// Named time-signal presets.
pub fn time_preset(name: &str, amplitude: f64, n_time: usize, tau: f64) -> Result<TimeSignal> {
    let horizon = n_time as f64 * tau;
    let f: Box<dyn Fn(f64) -> f64> = match name {
        "zero" => Box::new(|_| 0.0),
        "const" => Box::new(move |_| amplitude),
        "exp_decay" => Box::new(move |t| amplitude * (-t).exp()),
        "ramp_exp" => Box::new(move |t| amplitude * t * (-t).exp()),
        "sine" => Box::new(move |t| amplitude * (std::f64::consts::PI * t / horizon).sin()),
        other => {
            return Err(KawaError::Parse(format!(
                "unknown time preset '{other}' (expected zero, const, exp_decay, ramp_exp or sine)"
            )))
        }
    };
    Ok(TimeSignal::from_fn(n_time, tau, f))
}

/// Named initial-datum presets.
pub fn space_preset(name: &str, amplitude: f64, grid: &SpaceTimeGrid) -> Result<Vec<f64>> {
    let f: Box<dyn Fn(f64) -> f64> = match name {
        "zero" => Box::new(|_| 0.0),
        // vanishing value and slope at the origin, exponential tail
        "poly_exp" => Box::new(move |x| amplitude * x * x * (-x).exp()),
        "gauss_bump" => {
            let center = 0.35 * (grid.x(grid.n_space) + grid.x_min);
            Box::new(move |x| amplitude * (-((x - center) / 2.0).powi(2)).exp())
        }
        other => {
            return Err(KawaError::Parse(format!(
                "unknown initial-datum preset '{other}' (expected zero, poly_exp or gauss_bump)"
            )))
        }
    };
    Ok(grid.x_nodes().map(f).collect())
}

/// The canonical half-line experiment used throughout the diagnostics:
/// `alpha = beta = 1`, `R = 40`, horizon `T = 1`, source `e^{-x}`, weight
/// `x^3 e^{-x}`, target `phi(t) = 0.01 t e^{-t}`, `p = 2`, `g0 = 0.3`.
pub fn canonical_problem(n_space: usize, n_time: usize) -> Problem {
    canonical_problem_with_horizon(n_space, n_time, 1.0)
}

/// Canonical data restricted to an arbitrary horizon.
pub fn canonical_problem_with_horizon(n_space: usize, n_time: usize, horizon: f64) -> Problem {
    let domain = Domain::right_half_line(40.0);
    let grid = SpaceTimeGrid::new(&domain, n_space, n_time, horizon).expect("grid");
    let g = preset_source("exp_decay", &grid).expect("source preset");
    let omega = preset_weight("cubic_exp", &grid).expect("weight preset");
    let phi = TimeSignal::from_fn(n_time, grid.tau, |t| 0.01 * t * (-t).exp());
    Problem {
        coefficients: Coefficients::new(1.0, 1.0, 1).unwrap(),
        domain,
        grid,
        u0: vec![0.0; n_space + 1],
        mu: TimeSignal::zeros(n_time, grid.tau),
        nu: TimeSignal::zeros(n_time, grid.tau),
        g,
        omega,
        phi,
        p: NormExponent::Finite(2.0),
        g0: 0.3,
    }
}

/// Real-line variant: Gaussian weight and source, no boundary data.
pub fn real_line_problem(n_space: usize, n_time: usize, horizon: f64) -> Problem {
    let domain = Domain::real_line(15.0, 15.0);
    let grid = SpaceTimeGrid::new(&domain, n_space, n_time, horizon).expect("grid");
    let g = preset_source("gaussian", &grid).expect("source preset");
    let omega = preset_weight("gaussian_realline", &grid).expect("weight preset");
    let phi = TimeSignal::from_fn(n_time, grid.tau, |t| 0.01 * t * (-t).exp());
    Problem {
        coefficients: Coefficients::new(1.0, 1.0, 1).unwrap(),
        domain,
        grid,
        u0: vec![0.0; n_space + 1],
        mu: TimeSignal::zeros(n_time, grid.tau),
        nu: TimeSignal::zeros(n_time, grid.tau),
        g,
        omega,
        phi,
        p: NormExponent::Finite(2.0),
        g0: 0.5,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_fixture_is_compatible() {
        let pb = canonical_problem(400, 100);
        assert!(pb.validate().passed);
        // phi(0) = 0 matches int u0 w = 0 exactly
        assert_eq!(pb.phi.value(0), 0.0);
    }

    #[test]
    fn real_line_fixture_validates() {
        let pb = real_line_problem(600, 100, 1.0);
        let r = pb.validate();
        assert!(r.passed, "{:?}", r.checks);
    }

    #[test]
    fn unknown_presets_error() {
        let grid = SpaceTimeGrid::new(&Domain::right_half_line(40.0), 100, 10, 1.0).unwrap();
        assert!(time_preset("nope", 1.0, 10, 0.1).is_err());
        assert!(space_preset("nope", 1.0, &grid).is_err());
    }
}
