//! Convergence study against the manufactured solution
//! `u*(t, x) = e^{-t} (x + x^2) e^{-x}`: the forcing is derived by
//! closed-form differentiation, the solvers chase `u*`, and the max-norm
//! error falls at second order in the joint grid parameter.
//!
//! ```bash
//! cargo run --release --example manufactured_convergence
//! ```

use kawahara::presets::canonical_problem;
use kawahara::signal::TimeSignal;
use kawahara::solver::{solve_linear, solve_nonlinear, Forcing};
use ndarray::Array2;

fn poly(k: usize, x: f64) -> f64 {
    match k {
        0 => x + x * x,
        1 => 1.0 + x - x * x,
        3 => -x * x + 5.0 * x - 3.0,
        5 => -x * x + 9.0 * x - 15.0,
        _ => unreachable!(),
    }
}

fn exact(t: f64, x: f64) -> f64 {
    (-t).exp() * poly(0, x) * (-x).exp()
}

fn run(n: usize, nonlinear: bool) -> f64 {
    let mut pb = canonical_problem(n, n);
    pb.u0 = pb.grid.x_nodes().map(|x| exact(0.0, x)).collect();
    pb.nu = TimeSignal::from_fn(n, pb.grid.tau, |t| (-t).exp());
    let grid = pb.grid;
    let mut table = Array2::zeros((n + 1, n + 1));
    for nt in 0..=n {
        let et = (-grid.t(nt)).exp();
        for j in 0..=n {
            let x = grid.x(j);
            let mut f = et * (-x).exp() * (-poly(0, x) + poly(1, x) + poly(3, x) - poly(5, x));
            if nonlinear {
                f += et * et * (-2.0 * x).exp() * poly(0, x) * poly(1, x);
            }
            table[[nt, j]] = f;
        }
    }
    let forcing = Forcing::from_samples(table);
    let traj = if nonlinear {
        solve_nonlinear(&pb, &forcing).expect("solve")
    } else {
        solve_linear(&pb, &forcing).expect("solve")
    };
    let mut err = 0.0_f64;
    for nt in 0..=n {
        for j in 0..=n {
            err = err.max((traj.values[[nt, j]] - exact(grid.t(nt), grid.x(j))).abs());
        }
    }
    err
}

fn main() {
    for (label, nonlinear) in [("linear", false), ("nonlinear", true)] {
        println!("{label} solver, max-norm error vs (h, tau) halving:");
        println!("  n      error        ratio");
        let mut prev: Option<f64> = None;
        for n in [250usize, 500, 1000, 2000] {
            let e = run(n, nonlinear);
            match prev {
                Some(p) => println!("  {n:<6} {e:.3e}  {:.2}", p / e),
                None => println!("  {n:<6} {e:.3e}"),
            }
            prev = Some(e);
        }
        println!();
    }
}
