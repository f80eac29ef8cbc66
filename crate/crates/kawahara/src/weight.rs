//! Test weights with exact derivative closures up to fifth order.
//!
//! Every weight is supplied analytically: the observation identity consumes
//! the fifth derivative directly, and numerically differentiating a sampled
//! weight five times would drown it in noise. Presets therefore hand-code
//! their derivative formulas, and dilation/amplification wrap them with the
//! exact chain rule.

use ndarray::Array2;

use crate::error::{KawaError, Result};
use crate::grid::{trapezoid_l2, SpaceTimeGrid};

/// Membership class of a weight.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeightClass {
    /// `H^5` on the right half-line with vanishing value, slope and
    /// curvature at the origin.
    JRight,
    /// `H^5` on the (truncated) real line; no origin constraints.
    RealLineH5,
}

/// Analytic description of the weight; evaluation returns all derivative
/// orders `0..=5` at once.
#[derive(Debug, Clone, PartialEq)]
pub enum WeightKind {
    /// `x^3 e^{-x}`
    CubicExp,
    /// `x^4 e^{-x}`
    QuarticExp,
    /// `e^{-x^2}`
    GaussianRealLine,
    /// Dilation `w(delta x)`; derivatives pick up `delta^k`.
    Scaled { base: Box<WeightKind>, delta: f64 },
    /// Constant multiple `c * w(x)`.
    Amplified { base: Box<WeightKind>, factor: f64 },
}

impl WeightKind {
    /// Value and derivatives `(w, w', w'', w''', w'''', w''''')` at `x`.
    pub fn eval(&self, x: f64) -> [f64; 6] {
        match self {
            WeightKind::CubicExp => poly_exp_eval(x, &CUBIC_EXP_POLYS),
            WeightKind::QuarticExp => poly_exp_eval(x, &QUARTIC_EXP_POLYS),
            WeightKind::GaussianRealLine => {
                let e = (-x * x).exp();
                [
                    e,
                    -2.0 * x * e,
                    (4.0 * x * x - 2.0) * e,
                    (12.0 * x - 8.0 * x.powi(3)) * e,
                    (16.0 * x.powi(4) - 48.0 * x * x + 12.0) * e,
                    (-32.0 * x.powi(5) + 160.0 * x.powi(3) - 120.0 * x) * e,
                ]
            }
            WeightKind::Scaled { base, delta } => {
                let inner = base.eval(delta * x);
                let mut out = [0.0; 6];
                let mut factor = 1.0;
                for k in 0..6 {
                    out[k] = factor * inner[k];
                    factor *= delta;
                }
                out
            }
            WeightKind::Amplified { base, factor } => {
                let mut out = base.eval(x);
                for v in &mut out {
                    *v *= factor;
                }
                out
            }
        }
    }

    pub fn class(&self) -> WeightClass {
        match self {
            WeightKind::CubicExp | WeightKind::QuarticExp => WeightClass::JRight,
            WeightKind::GaussianRealLine => WeightClass::RealLineH5,
            WeightKind::Scaled { base, .. } | WeightKind::Amplified { base, .. } => base.class(),
        }
    }

    pub fn preset_name(&self) -> Option<&'static str> {
        match self {
            WeightKind::CubicExp => Some("cubic_exp"),
            WeightKind::QuarticExp => Some("quartic_exp"),
            WeightKind::GaussianRealLine => Some("gaussian_realline"),
            _ => None,
        }
    }
}

/// Polynomial coefficient rows (ascending powers) of `P_k` in
/// `d^k/dx^k [P_0(x) e^{-x}] = P_k(x) e^{-x}`, for `P_0 = x^3`.
const CUBIC_EXP_POLYS: [[f64; 6]; 6] = [
    [0.0, 0.0, 0.0, 1.0, 0.0, 0.0],
    [0.0, 0.0, 3.0, -1.0, 0.0, 0.0],
    [0.0, 6.0, -6.0, 1.0, 0.0, 0.0],
    [6.0, -18.0, 9.0, -1.0, 0.0, 0.0],
    [-24.0, 36.0, -12.0, 1.0, 0.0, 0.0],
    [60.0, -60.0, 15.0, -1.0, 0.0, 0.0],
];

/// Same for `P_0 = x^4`.
const QUARTIC_EXP_POLYS: [[f64; 6]; 6] = [
    [0.0, 0.0, 0.0, 0.0, 1.0, 0.0],
    [0.0, 0.0, 0.0, 4.0, -1.0, 0.0],
    [0.0, 0.0, 12.0, -8.0, 1.0, 0.0],
    [0.0, 24.0, -36.0, 12.0, -1.0, 0.0],
    [24.0, -96.0, 72.0, -16.0, 1.0, 0.0],
    [-120.0, 240.0, -120.0, 20.0, -1.0, 0.0],
];

fn poly_exp_eval(x: f64, polys: &[[f64; 6]; 6]) -> [f64; 6] {
    let e = (-x).exp();
    let mut out = [0.0; 6];
    for (k, row) in polys.iter().enumerate() {
        // Horner, ascending coefficients
        let mut p = 0.0;
        for &c in row.iter().rev() {
            p = p * x + c;
        }
        out[k] = p * e;
    }
    out
}

/// A weight bound to a grid: analytic kind plus cached samples of all six
/// derivative orders (rows `0..=5`, columns over space nodes).
#[derive(Debug, Clone, PartialEq)]
pub struct Weight {
    pub kind: WeightKind,
    pub class: WeightClass,
    samples: Array2<f64>,
    h: f64,
}

impl Weight {
    pub fn from_kind(kind: WeightKind, grid: &SpaceTimeGrid) -> Self {
        let mut samples = Array2::zeros((6, grid.n_space + 1));
        for j in 0..=grid.n_space {
            let vals = kind.eval(grid.x(j));
            for k in 0..6 {
                samples[[k, j]] = vals[k];
            }
        }
        let class = kind.class();
        Weight {
            kind,
            class,
            samples,
            h: grid.h,
        }
    }

    /// Samples of the `k`-th derivative on the grid, `k <= 5`.
    pub fn derivative_samples(&self, k: usize) -> &[f64] {
        self.samples.row(k).to_slice().expect("contiguous row")
    }

    pub fn values(&self) -> &[f64] {
        self.derivative_samples(0)
    }

    pub fn n_nodes(&self) -> usize {
        self.samples.ncols()
    }

    pub fn spacing(&self) -> f64 {
        self.h
    }

    /// Derivatives at the left boundary node (exact, from the closure).
    pub fn boundary_derivatives(&self, x0: f64) -> [f64; 6] {
        self.kind.eval(x0)
    }

    /// Trapezoid `L^2` norm of the `k`-th derivative over the grid.
    pub fn derivative_l2(&self, k: usize) -> f64 {
        trapezoid_l2(self.derivative_samples(k), self.h)
    }

    /// Discrete `H^5` norm (all six derivative orders).
    pub fn h5_norm(&self) -> f64 {
        let mut acc = 0.0;
        for k in 0..6 {
            let v = self.derivative_l2(k);
            acc += v * v;
        }
        acc.sqrt()
    }

    /// The combination `alpha w' + beta w''' - w'''''` entering both the
    /// observation identity and the contraction operator.
    pub fn adjoint_combination(&self, alpha: f64, beta: f64) -> Vec<f64> {
        let w1 = self.derivative_samples(1);
        let w3 = self.derivative_samples(3);
        let w5 = self.derivative_samples(5);
        (0..w1.len())
            .map(|j| alpha * w1[j] + beta * w3[j] - w5[j])
            .collect()
    }

    /// Class-membership diagnostics: origin traces for `JRight` weights and
    /// decay of every derivative order at the truncation boundary.
    pub fn class_check(&self, x0: f64) -> WeightClassCheck {
        let at0 = self.kind.eval(x0);
        let origin_trace = at0[0].abs() + at0[1].abs() + at0[2].abs();
        let n = self.n_nodes();
        let mut boundary_decay = 0.0_f64;
        for k in 0..6 {
            boundary_decay = boundary_decay.max(self.samples[[k, n - 1]].abs());
            if self.class == WeightClass::RealLineH5 {
                boundary_decay = boundary_decay.max(self.samples[[k, 0]].abs());
            }
        }
        WeightClassCheck {
            origin_trace,
            boundary_decay,
            h5_norm: self.h5_norm(),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct WeightClassCheck {
    /// `|w(0)| + |w'(0)| + |w''(0)|` (must vanish for the `J` class).
    pub origin_trace: f64,
    /// Largest derivative magnitude at the truncation boundary.
    pub boundary_decay: f64,
    pub h5_norm: f64,
}

/// Named weight presets.
pub fn preset_weight(name: &str, grid: &SpaceTimeGrid) -> Result<Weight> {
    let kind = match name {
        "cubic_exp" => WeightKind::CubicExp,
        "quartic_exp" => WeightKind::QuarticExp,
        "gaussian_realline" => WeightKind::GaussianRealLine,
        other => {
            return Err(KawaError::Parse(format!(
                "unknown weight preset '{other}' (expected cubic_exp, quartic_exp or gaussian_realline)"
            )))
        }
    };
    Ok(Weight::from_kind(kind, grid))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Domain;

    fn grid() -> SpaceTimeGrid {
        SpaceTimeGrid::new(&Domain::right_half_line(40.0), 800, 10, 1.0).unwrap()
    }

    /// Finite-difference cross-check of every analytic derivative closure.
    fn check_derivatives(kind: &WeightKind, x: f64) {
        let d = 1e-4;
        let vals = kind.eval(x);
        for k in 0..5 {
            let plus = kind.eval(x + d)[k];
            let minus = kind.eval(x - d)[k];
            let fd = (plus - minus) / (2.0 * d);
            let scale = vals[k + 1].abs().max(1.0);
            assert!(
                (fd - vals[k + 1]).abs() < 1e-6 * scale,
                "{kind:?} order {} at x={x}: fd={fd} exact={}",
                k + 1,
                vals[k + 1]
            );
        }
    }

    #[test]
    fn analytic_derivatives_match_finite_differences() {
        for kind in [
            WeightKind::CubicExp,
            WeightKind::QuarticExp,
            WeightKind::GaussianRealLine,
            WeightKind::Scaled {
                base: Box::new(WeightKind::CubicExp),
                delta: 0.7,
            },
            WeightKind::Amplified {
                base: Box::new(WeightKind::QuarticExp),
                factor: -2.5,
            },
        ] {
            for &x in &[0.3, 1.0, 2.7, 5.0] {
                check_derivatives(&kind, x);
            }
        }
    }

    #[test]
    fn cubic_exp_origin_values() {
        let vals = WeightKind::CubicExp.eval(0.0);
        assert_eq!(vals, [0.0, 0.0, 0.0, 6.0, -24.0, 60.0]);
    }

    #[test]
    fn quartic_exp_origin_values() {
        let vals = WeightKind::QuarticExp.eval(0.0);
        assert_eq!(vals, [0.0, 0.0, 0.0, 0.0, 24.0, -120.0]);
    }

    #[test]
    fn gaussian_origin_values() {
        let vals = WeightKind::GaussianRealLine.eval(0.0);
        assert_eq!(vals[0], 1.0);
        assert_eq!(vals[1], 0.0);
    }

    #[test]
    fn j_class_presets_vanish_at_origin_exactly() {
        let g = grid();
        for name in ["cubic_exp", "quartic_exp"] {
            let w = preset_weight(name, &g).unwrap();
            let check = w.class_check(0.0);
            assert_eq!(check.origin_trace, 0.0, "{name}");
            assert!(check.boundary_decay < 1e-10, "{name}");
            assert!(check.h5_norm.is_finite());
        }
    }

    #[test]
    fn unknown_preset_is_a_parse_error() {
        let g = grid();
        assert!(preset_weight("septic_exp", &g).is_err());
    }

    #[test]
    fn cubic_exp_l2_norm_matches_gamma_integral() {
        // || x^3 e^{-x} ||_{L^2}^2 = Gamma(7) / 2^7 = 5.625
        let g = grid();
        let w = preset_weight("cubic_exp", &g).unwrap();
        let got = w.derivative_l2(0).powi(2);
        assert!((got - 5.625).abs() < 1e-8, "got {got}");
    }

    #[test]
    fn dilation_matches_direct_evaluation() {
        let delta = 0.5;
        let scaled = WeightKind::Scaled {
            base: Box::new(WeightKind::CubicExp),
            delta,
        };
        for &x in &[0.0, 1.0, 3.3] {
            let direct = WeightKind::CubicExp.eval(delta * x);
            let via = scaled.eval(x);
            assert!((via[0] - direct[0]).abs() < 1e-15);
            // first derivative picks up one factor of delta
            assert!((via[1] - delta * direct[1]).abs() < 1e-15);
            assert!((via[5] - delta.powi(5) * direct[5]).abs() < 1e-15);
        }
    }
}
