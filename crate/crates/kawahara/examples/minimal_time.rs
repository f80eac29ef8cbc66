//! The minimal certified horizon: compute the contraction constant, form
//! `delta0 = (2 c0)^{-1/5}`, shrink for data smallness, and certify the
//! horizon `T0 = delta0^5` by synthesizing on the dilated problem.
//!
//! ```bash
//! cargo run --release --example minimal_time
//! ```

use kawahara::presets::canonical_problem;
use kawahara::scaling::minimal_time;

fn main() {
    let pb = canonical_problem(800, 400);
    let report = minimal_time(&pb, 1e-6, 40, None, true).expect("minimal horizon");
    println!("c0               = {:.6}", report.c0);
    println!("delta0           = {:.6}  (= (2 c0)^(-1/5))", report.delta0);
    println!("delta_effective  = {:.6}", report.delta_effective);
    println!("c1 (data size)   = {:.6e}", report.c1);
    println!("T0               = {:.6e}", report.t0);
    println!(
        "certification    : horizon {:.6e}, residual {:.3e}, certified = {}",
        report.certification_horizon.unwrap_or(f64::NAN),
        report.certification_residual.unwrap_or(f64::NAN),
        report.certified
    );
    println!();
    println!("larger data shrink the horizon:");
    for scale in [1.0, 10.0, 100.0] {
        let mut bigger = pb.clone();
        bigger.phi = pb.phi.scaled(scale);
        let r = minimal_time(&bigger, 1e-6, 40, None, false).expect("report");
        println!(
            "  phi x {scale:<5}: c1 = {:.4e}, T0 = {:.6e}",
            r.c1, r.t0
        );
    }
}
