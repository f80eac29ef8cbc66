//! Integrate the free (uncontrolled) nonlinear evolution of a Gaussian-type
//! initial bump on the half-line and watch the observation drift.
//!
//! ```bash
//! cargo run --release --example solve_free_evolution
//! ```

use kawahara::observation::observe;
use kawahara::presets::canonical_problem;
use kawahara::solver::{solve_nonlinear, Forcing};

fn main() {
    let mut pb = canonical_problem(800, 400);
    pb.u0 = pb
        .grid
        .x_nodes()
        .map(|x| 0.05 * x * x * (-x).exp())
        .collect();
    // free evolution: no compatibility demanded of phi here, it is unused
    let traj = solve_nonlinear(&pb, &Forcing::zero()).expect("solve");
    let q = observe(&traj, &pb.omega).expect("observe");

    println!("free nonlinear evolution on [0, 40] x [0, 1]");
    println!("  sup_t ||u(t)||_L2 = {:.6e}", traj.sup_l2());
    println!("  max |u|           = {:.6e}", traj.max_abs());
    println!();
    println!("  t       q(t) = int u w dx");
    for n in (0..=pb.grid.n_time).step_by(pb.grid.n_time / 10) {
        println!("  {:<7.3} {:+.6e}", pb.grid.t(n), q.value(n));
    }
    println!();
    println!("the observation drifts freely; the control examples pin it to a target");
}
