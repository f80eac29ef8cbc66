//! Spatial discretization and the implicit-explicit stepping engine.
//!
//! The fifth-order operator is discretized with centered second-order
//! stencils in the interior. The node next to the inflow boundary uses a
//! biased eight-point fifth-derivative closure (third-order consistent).
//! Boundary conditions are imposed as bordered rows of the system:
//!
//! * half-line: `u(t,0) = mu`, `u_x(t,0) = nu` on the left, and the
//!   artificial homogeneous closure `u = u_x = u_xx = 0` at `x = R`;
//! * truncated real line: `u = u_x = 0` on the left, same right closure.
//!
//! Counting (two conditions on the inflow side, three on the other) matches
//! the integral identities of the fifth-order operator, which admit two
//! boundary traces at the left end of a right half-line.
//!
//! Time stepping is trapezoidal in the stiff linear part (one banded solve
//! per step, factorization reused across steps and across repeated solves on
//! the same problem) with the nonlinear flux handled explicitly by
//! second-order extrapolation.

use ndarray::Array2;

use crate::banded::{BandedLu, BandedMatrix};
use crate::error::{KawaError, Result};
use crate::grid::{DomainKind, SpaceTimeGrid};
use crate::problem::Coefficients;
use crate::solver::stencil::uniform_weights;

const KL: usize = 3;
const KU: usize = 5;

/// Bordered Crank-Nicolson operator for the linearized equation, factored
/// once per (coefficients, grid, domain) triple.
#[derive(Debug, Clone)]
pub struct StepOperator {
    pub grid: SpaceTimeGrid,
    pub domain_kind: DomainKind,
    pub coeffs: Coefficients,
    lhs: BandedLu,
    rhs: BandedMatrix,
    /// The spatial operator `L` on PDE rows (zero on boundary rows).
    linear_part: BandedMatrix,
    /// Inclusive node range carrying the PDE (rows outside are boundary rows).
    pub pde_rows: (usize, usize),
    /// Weights of the left Neumann row (nodes 0, 1, 2).
    neumann_row: [f64; 3],
}

impl StepOperator {
    pub fn new(coeffs: &Coefficients, domain_kind: DomainKind, grid: &SpaceTimeGrid) -> Result<Self> {
        let n = grid.n_space;
        if n < 16 {
            return Err(KawaError::Validation(format!(
                "spatial grid too coarse for the interior stencils: {n} cells"
            )));
        }
        let h = grid.h;
        let tau = grid.tau;
        let size = n + 1;

        let mut lhs = BandedMatrix::zeros(size, KL, KU);
        let mut rhs = BandedMatrix::zeros(size, KL, KU);
        let mut linear_part = BandedMatrix::zeros(size, KL, KU);

        // interior PDE rows: u_t + L u = f with L = alpha D1 + beta D3 - D5
        let d1 = uniform_weights(0, &[-1, 0, 1], 1, h);
        let d3 = uniform_weights(0, &[-2, -1, 0, 1, 2], 3, h);
        let d5_centered = uniform_weights(0, &[-3, -2, -1, 0, 1, 2, 3], 5, h);
        let biased_offsets: Vec<i64> = (-2..=5).collect();
        let d5_biased = uniform_weights(0, &biased_offsets, 5, h);

        let (alpha, beta) = (coeffs.alpha, coeffs.beta);
        for j in 2..=n - 3 {
            let mut row: Vec<(usize, f64)> = Vec::with_capacity(10);
            let mut push = |col: i64, w: f64| {
                if w != 0.0 {
                    row.push((col as usize, w));
                }
            };
            for (k, &w) in d1.iter().enumerate() {
                push(j as i64 + k as i64 - 1, alpha * w);
            }
            for (k, &w) in d3.iter().enumerate() {
                push(j as i64 + k as i64 - 2, beta * w);
            }
            if j == 2 {
                for (k, &w) in d5_biased.iter().enumerate() {
                    push(j as i64 + biased_offsets[k], -w);
                }
            } else {
                for (k, &w) in d5_centered.iter().enumerate() {
                    push(j as i64 + k as i64 - 3, -w);
                }
            }
            // accumulate: lhs = I/tau + L/2, rhs = I/tau - L/2
            lhs.add(j, j, 1.0 / tau);
            rhs.add(j, j, 1.0 / tau);
            for (col, w) in row {
                lhs.add(j, col, 0.5 * w);
                rhs.add(j, col, -0.5 * w);
                linear_part.add(j, col, w);
            }
        }

        // left boundary rows
        let neumann = uniform_weights(0, &[0, 1, 2], 1, h);
        lhs.set(0, 0, 1.0);
        for (k, &w) in neumann.iter().enumerate() {
            lhs.set(1, k, w);
        }
        // right boundary rows: curvature, slope, value
        let d2_onesided = uniform_weights(0, &[0, -1, -2, -3], 2, h);
        for (k, &w) in d2_onesided.iter().enumerate() {
            lhs.set(n - 2, n - k, w);
        }
        let d1_onesided = uniform_weights(0, &[0, -1, -2], 1, h);
        for (k, &w) in d1_onesided.iter().enumerate() {
            lhs.set(n - 1, n - k, w);
        }
        lhs.set(n, n, 1.0);

        let neumann_row = [neumann[0], neumann[1], neumann[2]];
        let lhs = lhs.factor()?;
        Ok(StepOperator {
            grid: *grid,
            domain_kind,
            coeffs: *coeffs,
            lhs,
            rhs,
            linear_part,
            pde_rows: (2, n - 3),
            neumann_row,
        })
    }

    /// Transpose image `L^T y` of the spatial operator (PDE rows only).
    ///
    /// With `y` the quadrature-weighted weight samples, the result is the
    /// summation-by-parts-exact discretization of the adjoint coupling
    /// `-int u (alpha w' + beta w''' - w''''') dx`: pairing a solution
    /// snapshot against it reproduces the discrete rate of change of the
    /// observation up to the trapezoidal-in-time error alone.
    pub fn adjoint_image(&self, y: &[f64]) -> Vec<f64> {
        let n = self.grid.n_space;
        assert_eq!(y.len(), n + 1);
        let mut out = vec![0.0; n + 1];
        let (lo, hi) = self.pde_rows;
        for j in lo..=hi {
            let yj = y[j];
            if yj == 0.0 {
                continue;
            }
            let k_lo = j.saturating_sub(KL);
            let k_hi = (j + KU).min(n);
            for k in k_lo..=k_hi {
                let w = self.linear_part.get(j, k);
                if w != 0.0 {
                    out[k] += w * yj;
                }
            }
        }
        out
    }

    /// One trapezoidal step from `u` (at `t_n`) to `t_{n+1}`.
    ///
    /// `forcing_mid[j]` must hold the time-centered source on PDE rows
    /// (average of the two endpoint samples, plus any extrapolated nonlinear
    /// flux, all with the sign of the right-hand side of `u_t + L u = f`).
    /// `mu_next`/`nu_next` are the boundary traces at `t_{n+1}`; they are
    /// ignored on the real line where the left closure is homogeneous.
    pub fn step(&self, u: &[f64], forcing_mid: &[f64], mu_next: f64, nu_next: f64) -> Vec<f64> {
        let n = self.grid.n_space;
        let mut b = self.rhs.matvec(u);
        let (lo, hi) = self.pde_rows;
        for j in lo..=hi {
            b[j] += forcing_mid[j];
        }
        let (mu_b, nu_b) = match self.domain_kind {
            DomainKind::RightHalfLine => (mu_next, nu_next),
            DomainKind::RealLine => (0.0, 0.0),
        };
        b[0] = mu_b;
        b[1] = nu_b;
        b[n - 2] = 0.0;
        b[n - 1] = 0.0;
        b[n] = 0.0;
        let mut u_next = self.lhs.solve(&b);
        // the Dirichlet rows hold exactly, not just to LU roundoff
        u_next[0] = mu_b;
        u_next[n] = 0.0;
        u_next
    }

    /// Discrete slope recovered by the left Neumann row; equals the imposed
    /// trace on every computed step.
    pub fn left_slope(&self, u_row: &[f64]) -> f64 {
        self.neumann_row[0] * u_row[0] + self.neumann_row[1] * u_row[1] + self.neumann_row[2] * u_row[2]
    }

    /// Conservative nonlinear flux derivative `(u^{p+1}/(p+1))_x` on PDE
    /// rows (zero elsewhere).
    pub fn nonlinear_flux(&self, u: &[f64], out: &mut [f64]) {
        let n = self.grid.n_space;
        let p = self.coeffs.nonlinearity_power;
        let inv = 1.0 / (p as f64 + 1.0);
        let w = |v: f64| match p {
            1 => 0.5 * v * v,
            2 => v * v * v * inv,
            _ => v.powi(p as i32 + 1) * inv,
        };
        let scale = 1.0 / (2.0 * self.grid.h);
        out[..=1].fill(0.0);
        out[n - 2..].fill(0.0);
        let (lo, hi) = self.pde_rows;
        for j in lo..=hi {
            out[j] = (w(u[j + 1]) - w(u[j - 1])) * scale;
        }
    }
}

/// Measure the discrete residual of the full (nonlinear) equation for a
/// given space-time field: time derivative by centered differences at the
/// interior time nodes, space terms by the interior stencils, forcing
/// subtracted. Used by the dilation-symmetry diagnostics.
///
/// Rows touched by boundary closures are always skipped. `inflow_margin`
/// additionally excludes a strip (in length units) next to the inflow
/// boundary: the bordered closure leaves a boundary-layer error there
/// whose fifth difference does not shrink with the grid, so including it
/// would measure the evaluator, not the field.
pub fn discrete_pde_residual(
    values: &Array2<f64>,
    grid: &SpaceTimeGrid,
    coeffs: &Coefficients,
    forcing: &Array2<f64>,
    inflow_margin: f64,
) -> f64 {
    let n = grid.n_space;
    let m = grid.n_time;
    let h = grid.h;
    let tau = grid.tau;
    let d1 = uniform_weights(0, &[-1, 0, 1], 1, h);
    let d3 = uniform_weights(0, &[-2, -1, 0, 1, 2], 3, h);
    let d5 = uniform_weights(0, &[-3, -2, -1, 0, 1, 2, 3], 5, h);
    let p = coeffs.nonlinearity_power;
    let w = |v: f64| v.powi(p as i32 + 1) / (p as f64 + 1.0);
    let j_lo = (3usize).max((inflow_margin / h).ceil() as usize);

    let mut worst = 0.0_f64;
    for nt in 1..m {
        for j in j_lo..=n - 3 {
            let ut = (values[[nt + 1, j]] - values[[nt - 1, j]]) / (2.0 * tau);
            let mut ux = 0.0;
            for (k, &wgt) in d1.iter().enumerate() {
                ux += wgt * values[[nt, j + k - 1]];
            }
            let mut uxxx = 0.0;
            for (k, &wgt) in d3.iter().enumerate() {
                uxxx += wgt * values[[nt, j + k - 2]];
            }
            let mut uxxxxx = 0.0;
            for (k, &wgt) in d5.iter().enumerate() {
                uxxxxx += wgt * values[[nt, j + k - 3]];
            }
            let flux = (w(values[[nt, j + 1]]) - w(values[[nt, j - 1]])) / (2.0 * h);
            let r = ut + coeffs.alpha * ux + coeffs.beta * uxxx - uxxxxx + flux
                - forcing[[nt, j]];
            worst = worst.max(r.abs());
        }
    }
    worst
}
