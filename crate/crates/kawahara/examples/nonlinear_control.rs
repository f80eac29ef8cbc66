//! Nonlinear synthesis: the outer fixed point treats the previous sweep's
//! quadratic flux as a known source component, runs the linear synthesis,
//! and repeats until the trajectory settles. The found control is then fed
//! to the true nonlinear solver for a closed-loop verdict.
//!
//! ```bash
//! cargo run --release --example nonlinear_control
//! ```

use kawahara::control::control_nonlinear;
use kawahara::presets::canonical_problem;
use kawahara::signal::TimeSignal;

fn main() {
    let eps = 1e-3;
    let mut pb = canonical_problem(800, 400);
    pb.u0 = pb
        .grid
        .x_nodes()
        .map(|x| eps * x * x * (-x).exp())
        .collect();
    let q0 = pb.initial_observation();
    pb.phi = TimeSignal::from_fn(pb.grid.n_time, pb.grid.tau, |t| {
        q0 + eps * 0.5 * t * (-t).exp()
    });
    pb.ensure_valid().expect("valid problem");

    let outcome = control_nonlinear(&pb, 1e-7, 30, None).expect("synthesis");
    println!(
        "data size c1 = {:.4e}, advisory threshold {:.4e} (within: {})",
        outcome.smallness_c1, outcome.smallness_threshold, outcome.smallness_ok
    );
    println!("sweeps:");
    println!("  #   sup_L2(v)    (sqrt(T)+1)||v||^2   diff_sup     obs residual");
    for s in &outcome.sweeps {
        println!(
            "  {}   {:.4e}   {:.4e}          {:.4e}   {:.4e}",
            s.sweep, s.v_sup_l2, s.quadratic_bound_term, s.diff_sup, s.observation_residual
        );
    }
    println!("difference ratios: {:?}", outcome.sweep_diff_ratios);
    println!(
        "closed-loop residual on the true nonlinear equation: {:.3e}",
        outcome.closed_loop_residual
    );
    for w in &outcome.result.warnings {
        println!("note: {w}");
    }
}
