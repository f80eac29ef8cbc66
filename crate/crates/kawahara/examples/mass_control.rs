//! Mass control: steer the weighted mass `[u(t)] = int u w dx` from the
//! initial to a target value by tracking the straight-line interpolant of
//! the two masses.
//!
//! ```bash
//! cargo run --release --example mass_control
//! ```

use kawahara::control::{control_nonlinear, mass_control_check};
use kawahara::grid::trapezoid_inner;
use kawahara::presets::canonical_problem;
use kawahara::signal::TimeSignal;

fn main() {
    let eps = 1e-3;
    let mut pb = canonical_problem(600, 300);
    pb.u0 = pb
        .grid
        .x_nodes()
        .map(|x| eps * x * x * (-x).exp())
        .collect();
    let u_target: Vec<f64> = pb
        .grid
        .x_nodes()
        .map(|x| eps * (x * x + 0.5 * x * x * x) * (-x).exp())
        .collect();
    let q0 = pb.initial_observation();
    let q_t = trapezoid_inner(&u_target, pb.omega.values(), pb.grid.h);
    let horizon = pb.grid.horizon;
    pb.phi = TimeSignal::from_fn(pb.grid.n_time, pb.grid.tau, |t| {
        (1.0 - t / horizon) * q0 + (t / horizon) * q_t
    });
    pb.ensure_valid().expect("valid problem");

    println!("initial mass [u(0)]  = {q0:+.8e}");
    println!("target mass  [u_T]   = {q_t:+.8e}");
    let outcome = control_nonlinear(&pb, 1e-7, 30, None).expect("synthesis");
    let check = mass_control_check(&pb, &u_target, &outcome.result).expect("certificate");
    println!("synthesis residual   = {:.3e}", outcome.closed_loop_residual);
    println!("|[u(T)] - [u_T]|     = {:.3e} (allowed {:.3e})", check.lhs, check.rhs);
    println!("verdict: {:?}", check.verdict);
}
