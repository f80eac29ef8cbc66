//! Discrete surrogates of the space-time restriction norms, Parseval
//! sanity, and the empirical probe of the bilinear derivative estimate.
//!
//! ```bash
//! cargo run --release --example bourgain_probe
//! ```

use kawahara::bourgain::{
    bilinear_probe, probe_grid, random_probe_field, weighted_spacetime_norm, NormKind,
};

fn main() {
    let grid = probe_grid(128, 128);
    let field = random_probe_field(&grid, 1, 0, 1);
    let l2 = field.l2();
    println!("random smooth field on the probe window:");
    println!("  L2            = {l2:.6e}");
    println!(
        "  Xsb(0, 0)     = {:.6e}  (Parseval: equals L2)",
        weighted_spacetime_norm(&field, NormKind::Xsb, 0.0, 0.0)
    );
    println!(
        "  Xsb(0, 0.45)  = {:.6e}",
        weighted_spacetime_norm(&field, NormKind::Xsb, 0.0, 0.45)
    );
    println!(
        "  Ysb(0, 0.45)  = {:.6e}",
        weighted_spacetime_norm(&field, NormKind::Ysb, 0.0, 0.45)
    );
    println!(
        "  Dalpha(0.55)  = {:.6e}",
        weighted_spacetime_norm(&field, NormKind::Dalpha, 0.0, 0.55)
    );
    println!();

    for (n, m) in [(128usize, 128usize), (256, 256)] {
        let report = bilinear_probe(&probe_grid(n, m), 40, 0.0, 0.45, 0.55, 7).expect("probe");
        println!(
            "bilinear probe on {n}x{m}: max ratio {:.4}, median {:.4} (empirical only: {})",
            report.max_ratio, report.median_ratio, report.empirical_only
        );
    }
    println!();
    println!("ratios estimate ||d_x(uv)|| / (||u|| ||v||) on one window; they are");
    println!("measured constants, never bounds");
}
