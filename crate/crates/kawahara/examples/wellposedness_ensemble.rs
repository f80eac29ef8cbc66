//! Empirical solution-map bound: the ratio of the solution's `sup-L2` size
//! to the combined data norms, over an ensemble of random admissible data.
//!
//! ```bash
//! cargo run --release --example wellposedness_ensemble
//! ```

use kawahara::presets::canonical_problem;
use kawahara::solver::wellposedness_ratio;

fn main() {
    let pb = canonical_problem(400, 200);
    for seed in [0u64, 1, 2] {
        let report = wellposedness_ratio(&pb, 50, seed).expect("ensemble");
        println!(
            "seed {seed}: max ratio {:.4}, median {:.4} over {} members",
            report.max_ratio, report.median_ratio, report.ensemble_size
        );
    }
    println!();
    println!("the maximum feeds the advisory smallness threshold of the nonlinear synthesis");
}
