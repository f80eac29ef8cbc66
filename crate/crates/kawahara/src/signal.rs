//! Time signals on the uniform time grid and their norms.
//!
//! Signals carry their own step size so that the quadrature-based norms
//! (`L^p(0,T)`, fractional Sobolev) are self-contained.

use rustfft::{num_complex::Complex, FftPlanner};

use crate::error::{KawaError, Result};
use crate::grid::trapezoid;

/// Lebesgue exponent restricted to `[2, inf]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NormExponent {
    Finite(f64),
    Infinity,
}

impl NormExponent {
    pub fn finite(p: f64) -> Result<Self> {
        if !(p >= 2.0) || !p.is_finite() {
            return Err(KawaError::Validation(format!(
                "norm exponent must satisfy p >= 2 (or infinity), got {p}"
            )));
        }
        Ok(NormExponent::Finite(p))
    }

    /// Conjugate exponent `p'` with `1/p + 1/p' = 1`.
    pub fn conjugate(&self) -> f64 {
        match self {
            NormExponent::Finite(p) => p / (p - 1.0),
            NormExponent::Infinity => 1.0,
        }
    }

    pub fn as_f64(&self) -> f64 {
        match self {
            NormExponent::Finite(p) => *p,
            NormExponent::Infinity => f64::INFINITY,
        }
    }
}

/// A real-valued signal sampled on the nodes `t_n = n * dt`, `n = 0..=len-1`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSignal {
    samples: Vec<f64>,
    dt: f64,
}

impl TimeSignal {
    pub fn new(samples: Vec<f64>, dt: f64) -> Self {
        assert!(dt > 0.0, "time step must be positive");
        assert!(samples.len() >= 2, "a signal needs at least two samples");
        TimeSignal { samples, dt }
    }

    pub fn zeros(n_time: usize, dt: f64) -> Self {
        TimeSignal::new(vec![0.0; n_time + 1], dt)
    }

    /// Sample a closure on `n_time + 1` nodes spanning `[0, n_time * dt]`.
    pub fn from_fn(n_time: usize, dt: f64, f: impl Fn(f64) -> f64) -> Self {
        TimeSignal::new((0..=n_time).map(|n| f(n as f64 * dt)).collect(), dt)
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn horizon(&self) -> f64 {
        (self.samples.len() - 1) as f64 * self.dt
    }

    pub fn value(&self, n: usize) -> f64 {
        self.samples[n]
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> TimeSignal {
        TimeSignal::new(self.samples.iter().map(|&v| f(v)).collect(), self.dt)
    }

    pub fn scaled(&self, c: f64) -> TimeSignal {
        self.map(|v| c * v)
    }

    pub fn sub(&self, other: &TimeSignal) -> TimeSignal {
        assert_eq!(self.samples.len(), other.samples.len());
        TimeSignal::new(
            self.samples
                .iter()
                .zip(&other.samples)
                .map(|(a, b)| a - b)
                .collect(),
            self.dt,
        )
    }

    pub fn max_abs(&self) -> f64 {
        self.samples.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// Second-order finite difference in time: centered in the interior,
    /// one-sided three-point formulas at both endpoints.
    pub fn derivative(&self) -> TimeSignal {
        let n = self.samples.len();
        let dt = self.dt;
        let s = &self.samples;
        let mut d = vec![0.0; n];
        if n == 2 {
            let slope = (s[1] - s[0]) / dt;
            d[0] = slope;
            d[1] = slope;
            return TimeSignal::new(d, dt);
        }
        d[0] = (-3.0 * s[0] + 4.0 * s[1] - s[2]) / (2.0 * dt);
        for i in 1..n - 1 {
            d[i] = (s[i + 1] - s[i - 1]) / (2.0 * dt);
        }
        d[n - 1] = (3.0 * s[n - 1] - 4.0 * s[n - 2] + s[n - 3]) / (2.0 * dt);
        TimeSignal::new(d, dt)
    }

    /// Cumulative trapezoid integral, anchored at zero.
    pub fn cumulative_integral(&self) -> TimeSignal {
        let mut acc = vec![0.0; self.samples.len()];
        for i in 1..self.samples.len() {
            acc[i] = acc[i - 1] + 0.5 * self.dt * (self.samples[i - 1] + self.samples[i]);
        }
        TimeSignal::new(acc, self.dt)
    }
}

/// Composite-trapezoid `L^p(0,T)` norm; `p = inf` is the max norm.
pub fn lp_time_norm(signal: &TimeSignal, p: NormExponent) -> f64 {
    match p {
        NormExponent::Infinity => signal.max_abs(),
        NormExponent::Finite(p) => {
            let powered: Vec<f64> = signal.samples.iter().map(|v| v.abs().powf(p)).collect();
            trapezoid(&powered, signal.dt).max(0.0).powf(1.0 / p)
        }
    }
}

/// Natural log of the exponentially weighted norm `|| e^{-gamma t} f ||_p`.
///
/// The weighted norm itself underflows once `gamma * T` exceeds a few
/// hundred, which happens routinely for the contraction weight of the
/// control iteration, so all ratios of weighted norms go through logs.
/// Returns `f64::NEG_INFINITY` for the zero signal.
pub fn log_weighted_lp_norm(signal: &TimeSignal, gamma: f64, p: NormExponent) -> f64 {
    let n = signal.samples.len();
    let dt = signal.dt;
    match p {
        NormExponent::Infinity => signal
            .samples
            .iter()
            .enumerate()
            .map(|(i, &v)| {
                if v == 0.0 {
                    f64::NEG_INFINITY
                } else {
                    -gamma * (i as f64 * dt) + v.abs().ln()
                }
            })
            .fold(f64::NEG_INFINITY, f64::max),
        NormExponent::Finite(p) => {
            // log of trapezoid sum of w_i * e^{-p gamma t_i} |v_i|^p via
            // log-sum-exp.
            let mut terms = Vec::with_capacity(n);
            for (i, &v) in signal.samples.iter().enumerate() {
                if v == 0.0 {
                    continue;
                }
                let w = if i == 0 || i == n - 1 { 0.5 * dt } else { dt };
                terms.push(w.ln() - p * gamma * (i as f64 * dt) + p * v.abs().ln());
            }
            if terms.is_empty() {
                return f64::NEG_INFINITY;
            }
            let m = terms.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
            let sum: f64 = terms.iter().map(|&t| (t - m).exp()).sum();
            (m + sum.ln()) / p
        }
    }
}

/// Discrete `H^s(0,T)` norm, `s` in `[0, 1]`.
///
/// The signal is extended by even reflection about `t = T` to a
/// `2T`-periodic sequence before the discrete Fourier transform; this
/// suppresses the artificial jump at `t = T`. The norm weights mode `k`
/// of the reflected sequence by `<k>^{2s}`, so order zero reduces to the
/// trapezoid `L^2` norm exactly.
pub fn fractional_sobolev_norm(signal: &TimeSignal, order: f64) -> f64 {
    assert!(
        (0.0..=1.0).contains(&order),
        "fractional order must lie in [0, 1], got {order}"
    );
    let m = signal.samples.len() - 1;
    assert!(m >= 1);
    let ext_len = 2 * m;
    let mut buf: Vec<Complex<f64>> = Vec::with_capacity(ext_len);
    for i in 0..=m {
        buf.push(Complex::new(signal.samples[i], 0.0));
    }
    for i in (1..m).rev() {
        buf.push(Complex::new(signal.samples[i], 0.0));
    }
    debug_assert_eq!(buf.len(), ext_len);

    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(ext_len);
    fft.process(&mut buf);

    let dt = signal.dt;
    let mut acc = 0.0;
    for (idx, c) in buf.iter().enumerate() {
        // signed mode index of the 2T-periodic extension
        let k = if idx <= ext_len / 2 {
            idx as f64
        } else {
            idx as f64 - ext_len as f64
        };
        let weight = (1.0 + k * k).powf(order);
        acc += weight * c.norm_sqr();
    }
    // (tau/2) * (1/ext_len) * sum matches the trapezoid L2 norm at order 0.
    (acc * dt / (2.0 * ext_len as f64)).max(0.0).sqrt()
}
