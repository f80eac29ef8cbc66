//! Shared helpers for the integration suites: the manufactured-solution
//! oracle (closed-form differentiation, independent of the solver) and
//! problem builders.

use kawahara::presets::canonical_problem;
use kawahara::signal::TimeSignal;
use kawahara::solver::Forcing;
use kawahara::Problem;
use ndarray::Array2;

/// Polynomial parts of `d^k/dx^k [(x + x^2) e^{-x}]`.
pub fn mms_poly(k: usize, x: f64) -> f64 {
    match k {
        0 => x + x * x,
        1 => 1.0 + x - x * x,
        2 => x * x - 3.0 * x,
        3 => -x * x + 5.0 * x - 3.0,
        4 => x * x - 7.0 * x + 8.0,
        5 => -x * x + 9.0 * x - 15.0,
        _ => unreachable!(),
    }
}

/// Manufactured solution `u*(t, x) = e^{-t} (x + x^2) e^{-x}`.
pub fn mms_exact(t: f64, x: f64) -> f64 {
    (-t).exp() * mms_poly(0, x) * (-x).exp()
}

/// Forcing making `u*` solve the linear equation (`u*_t` contributes the
/// `-poly(0)` term).
pub fn mms_forcing_linear(alpha: f64, beta: f64, t: f64, x: f64) -> f64 {
    (-t).exp()
        * (-x).exp()
        * (-mms_poly(0, x) + alpha * mms_poly(1, x) + beta * mms_poly(3, x) - mms_poly(5, x))
}

/// Additional quadratic term for the nonlinear equation with `p = 1`.
pub fn mms_forcing_nonlinear(alpha: f64, beta: f64, t: f64, x: f64) -> f64 {
    mms_forcing_linear(alpha, beta, t, x)
        + (-2.0 * t).exp() * (-2.0 * x).exp() * mms_poly(0, x) * mms_poly(1, x)
}

/// Canonical problem with the manufactured initial datum and slope trace.
pub fn mms_problem(n_space: usize, n_time: usize) -> Problem {
    let mut pb = canonical_problem(n_space, n_time);
    pb.u0 = pb.grid.x_nodes().map(|x| mms_exact(0.0, x)).collect();
    pb.nu = TimeSignal::from_fn(n_time, pb.grid.tau, |t| (-t).exp() * mms_poly(1, 0.0));
    pb
}

/// Sample a closure into a forcing table on the problem grid.
pub fn forcing_from(pb: &Problem, f: impl Fn(f64, f64) -> f64) -> Forcing {
    let grid = pb.grid;
    let mut table = Array2::zeros((grid.n_time + 1, grid.n_space + 1));
    for n in 0..=grid.n_time {
        for j in 0..=grid.n_space {
            table[[n, j]] = f(grid.t(n), grid.x(j));
        }
    }
    Forcing::from_samples(table)
}

/// Max-norm distance between a trajectory and the manufactured solution.
pub fn mms_error(traj: &kawahara::Trajectory) -> f64 {
    let grid = traj.grid;
    let mut err = 0.0_f64;
    for n in 0..=grid.n_time {
        for j in 0..=grid.n_space {
            err = err.max((traj.values[[n, j]] - mms_exact(grid.t(n), grid.x(j))).abs());
        }
    }
    err
}
