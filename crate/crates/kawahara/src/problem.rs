//! Full description of one control experiment and its validation.

use serde::Serialize;

use crate::error::{KawaError, Result};
use crate::grid::{trapezoid_inner, trapezoid_l2, Domain, DomainKind, SpaceTimeGrid};
use crate::signal::{NormExponent, TimeSignal};
use crate::source::SourceShape;
use crate::weight::{Weight, WeightClass};

/// Equation coefficients. The fifth-order coefficient is fixed to -1; the
/// nonlinearity is `u^p u_x` with `p` in `{1, 2}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coefficients {
    pub alpha: f64,
    pub beta: f64,
    pub nonlinearity_power: u8,
}

impl Coefficients {
    pub fn new(alpha: f64, beta: f64, nonlinearity_power: u8) -> Result<Self> {
        if !(nonlinearity_power == 1 || nonlinearity_power == 2) {
            return Err(KawaError::Validation(format!(
                "nonlinearity power must be 1 or 2, got {nonlinearity_power}"
            )));
        }
        if !alpha.is_finite() || !beta.is_finite() {
            return Err(KawaError::Validation(
                "coefficients must be finite".into(),
            ));
        }
        Ok(Coefficients {
            alpha,
            beta,
            nonlinearity_power,
        })
    }
}

/// One fully specified experiment.
#[derive(Debug, Clone)]
pub struct Problem {
    pub coefficients: Coefficients,
    pub domain: Domain,
    pub grid: SpaceTimeGrid,
    /// Initial datum sampled on the space nodes.
    pub u0: Vec<f64>,
    /// Dirichlet trace at the inflow boundary.
    pub mu: TimeSignal,
    /// Neumann trace at the inflow boundary.
    pub nu: TimeSignal,
    /// Source shape multiplying the scalar control.
    pub g: SourceShape,
    /// Observation weight.
    pub omega: Weight,
    /// Target observation trace.
    pub phi: TimeSignal,
    /// Norm exponent used for the control space.
    pub p: NormExponent,
    /// Configured lower bound for `|int g w dx|`.
    pub g0: f64,
}

/// One validation check with its measured value.
#[derive(Debug, Clone, Serialize)]
pub struct ValidationCheck {
    pub name: String,
    pub passed: bool,
    pub measured: f64,
    pub threshold: f64,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub passed: bool,
    pub checks: Vec<ValidationCheck>,
}

impl ValidationReport {
    fn push(
        &mut self,
        name: &str,
        passed: bool,
        measured: f64,
        threshold: f64,
        detail: impl Into<String>,
    ) {
        self.passed &= passed;
        self.checks.push(ValidationCheck {
            name: name.to_string(),
            passed,
            measured,
            threshold,
            detail: detail.into(),
        });
    }
}

impl Problem {
    /// Observation of the initial datum, `int u0 w dx`.
    pub fn initial_observation(&self) -> f64 {
        trapezoid_inner(&self.u0, self.omega.values(), self.grid.h)
    }

    /// `g1(t) = int g(t,.) w dx` on every time node.
    pub fn g1_samples(&self) -> TimeSignal {
        let w = self.omega.values();
        let vals: Vec<f64> = (0..=self.grid.n_time)
            .map(|n| trapezoid_inner(self.g.space_slice(n), w, self.grid.h))
            .collect();
        TimeSignal::new(vals, self.grid.tau)
    }

    /// Magnitude used to scale residual tolerances: at least one, else the
    /// peak of the target trace.
    pub fn scale(&self) -> f64 {
        self.phi.max_abs().max(1.0)
    }

    /// Run every validation check and collect the report. Pure: identical
    /// problems yield identical reports.
    pub fn validate(&self) -> ValidationReport {
        let mut report = ValidationReport {
            passed: true,
            checks: Vec::new(),
        };
        let g = &self.grid;

        // grid sanity
        match (self.domain.validate(), g.validate()) {
            (Ok(()), Ok(())) => {
                report.push("grid_sanity", true, g.h, 0.0, "domain and grid consistent")
            }
            (Err(e), _) | (_, Err(e)) => report.push("grid_sanity", false, 0.0, 0.0, e.to_string()),
        }
        let span_err = (g.n_time as f64 * g.tau - g.horizon).abs() / g.horizon.max(1.0);
        report.push(
            "time_span",
            span_err <= 1e-9,
            span_err,
            1e-9,
            "n_time * tau must reproduce the horizon",
        );

        // dimensions
        let dims_ok = self.u0.len() == g.n_space + 1
            && self.mu.len() == g.n_time + 1
            && self.nu.len() == g.n_time + 1
            && self.phi.len() == g.n_time + 1
            && self.g.samples().dim() == (g.n_time + 1, g.n_space + 1)
            && self.omega.n_nodes() == g.n_space + 1;
        report.push(
            "dimensions",
            dims_ok,
            0.0,
            0.0,
            "sampled data must cover every grid node",
        );
        if !dims_ok {
            return report; // further quadrature would index out of bounds
        }

        // finiteness
        let finite = self.u0.iter().all(|v| v.is_finite())
            && self.mu.samples().iter().all(|v| v.is_finite())
            && self.nu.samples().iter().all(|v| v.is_finite())
            && self.phi.samples().iter().all(|v| v.is_finite())
            && self.g.samples().iter().all(|v| v.is_finite());
        report.push("finite_data", finite, 0.0, 0.0, "no NaN or infinite samples");
        if !finite {
            return report;
        }

        // nonlinearity power
        let p_nl = self.coefficients.nonlinearity_power;
        report.push(
            "nonlinearity_power",
            p_nl == 1 || p_nl == 2,
            p_nl as f64,
            2.0,
            "u^p u_x with p in {1, 2}",
        );

        // norm exponent
        let p_ok = match self.p {
            NormExponent::Infinity => true,
            NormExponent::Finite(p) => p >= 2.0,
        };
        report.push("norm_exponent", p_ok, self.p.as_f64(), 2.0, "p must be >= 2");

        // weight class
        let wc = self.omega.class_check(g.x_min);
        let origin_tol = 1e-12;
        match self.omega.class {
            WeightClass::JRight => {
                report.push(
                    "weight_origin_trace",
                    wc.origin_trace <= origin_tol,
                    wc.origin_trace,
                    origin_tol,
                    "|w(0)| + |w'(0)| + |w''(0)| for the half-line class",
                );
            }
            WeightClass::RealLineH5 => {
                report.push(
                    "weight_origin_trace",
                    true,
                    wc.origin_trace,
                    f64::INFINITY,
                    "real-line weights carry no origin constraint",
                );
            }
        }
        report.push(
            "weight_truncation_decay",
            wc.boundary_decay <= 1e-10,
            wc.boundary_decay,
            1e-10,
            "all six derivative orders must decay below 1e-10 at the cutoff",
        );
        report.push(
            "weight_h5_finite",
            wc.h5_norm.is_finite(),
            wc.h5_norm,
            f64::INFINITY,
            "discrete H^5 norm",
        );

        // domain/weight/boundary-data consistency
        match self.domain.kind {
            DomainKind::RightHalfLine => {
                report.push(
                    "weight_class_matches_domain",
                    self.omega.class == WeightClass::JRight,
                    0.0,
                    0.0,
                    "half-line problems use the vanishing-trace class",
                );
            }
            DomainKind::RealLine => {
                let traces = self.mu.max_abs().max(self.nu.max_abs());
                report.push(
                    "real_line_homogeneous_traces",
                    traces == 0.0,
                    traces,
                    0.0,
                    "the real-line system carries no boundary data",
                );
            }
        }

        // initial datum decay at the artificial boundary
        let u0_scale = self.u0.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let tail = match self.domain.kind {
            DomainKind::RightHalfLine => self.u0[self.u0.len() - 1].abs(),
            DomainKind::RealLine => self.u0[self.u0.len() - 1].abs().max(self.u0[0].abs()),
        };
        let decay_tol = 1e-10 * (1.0 + u0_scale);
        report.push(
            "initial_datum_decay",
            tail <= decay_tol,
            tail,
            decay_tol,
            "u0 must vanish at the truncation boundary",
        );

        // compatibility phi(0) = int u0 w
        let q0 = self.initial_observation();
        let u0_l2 = trapezoid_l2(&self.u0, g.h);
        let compat_tol = 1e-8 * (1.0 + u0_l2);
        let compat = (self.phi.value(0) - q0).abs();
        report.push(
            "compatibility",
            compat <= compat_tol,
            compat,
            compat_tol,
            format!("|phi(0) - int u0 w| with int u0 w = {q0:.6e}"),
        );

        // lower bound on |g1|
        let g1 = self.g1_samples();
        let g1_min = g1
            .samples()
            .iter()
            .fold(f64::INFINITY, |m, v| m.min(v.abs()));
        report.push(
            "g1_lower_bound",
            self.g0 > 0.0 && g1_min >= self.g0,
            g1_min,
            self.g0,
            "min_t |int g w dx| must dominate the configured g0",
        );

        report
    }

    /// Validation gate used by the control routines.
    pub fn ensure_valid(&self) -> Result<ValidationReport> {
        let report = self.validate();
        if report.passed {
            Ok(report)
        } else {
            let failed: Vec<&str> = report
                .checks
                .iter()
                .filter(|c| !c.passed)
                .map(|c| c.name.as_str())
                .collect();
            Err(KawaError::Validation(format!(
                "problem validation failed: {}",
                failed.join(", ")
            )))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets;

    #[test]
    fn canonical_problem_validates() {
        let pb = presets::canonical_problem(400, 100);
        let report = pb.validate();
        assert!(report.passed, "failed: {:?}", report.checks);
    }

    #[test]
    fn zero_data_compatibility_has_zero_residual() {
        let mut pb = presets::canonical_problem(400, 100);
        pb.phi = TimeSignal::zeros(pb.grid.n_time, pb.grid.tau);
        let report = pb.validate();
        let compat = report
            .checks
            .iter()
            .find(|c| c.name == "compatibility")
            .unwrap();
        assert!(compat.passed);
        assert_eq!(compat.measured, 0.0);
    }

    #[test]
    fn forced_compatibility_violation_fails() {
        let mut pb = presets::canonical_problem(400, 100);
        let n = pb.grid.n_time;
        pb.phi = TimeSignal::from_fn(n, pb.grid.tau, |_| 1.0);
        let report = pb.validate();
        assert!(!report.passed);
        assert!(!report
            .checks
            .iter()
            .find(|c| c.name == "compatibility")
            .unwrap()
            .passed);
    }

    #[test]
    fn g1_bound_passes_for_gamma_integral_value() {
        // g = e^{-x}, w = x^3 e^{-x}: int g w = Gamma(4)/2^4 = 0.375
        let pb = presets::canonical_problem(1600, 50);
        let g1 = pb.g1_samples();
        for &v in g1.samples() {
            assert!((v - 0.375).abs() < 1e-8, "{v}");
        }
        let check = pb.validate();
        assert!(check.passed);
    }

    #[test]
    fn g1_bound_fails_when_g0_too_large() {
        let mut pb = presets::canonical_problem(400, 50);
        pb.g0 = 0.4; // above the true 0.375
        let report = pb.validate();
        assert!(!report.passed);
    }

    #[test]
    fn validation_is_pure() {
        let pb = presets::canonical_problem(400, 100);
        let a = serde_json::to_string(&pb.validate()).unwrap();
        let b = serde_json::to_string(&pb.validate()).unwrap();
        assert_eq!(a, b);
    }
}
