//! Finite-difference weights on uniform node sets (Fornberg's algorithm).
//!
//! All stencils used by the spatial operator are generated here rather than
//! hard-coded: centered interior formulas, the biased fifth-derivative
//! closure next to the left boundary, and the one-sided boundary rows.

/// Weights approximating the `m`-th derivative at `x0` from values at
/// `nodes` (arbitrary distinct points). Classic Fornberg recursion.
pub fn fd_weights(x0: f64, nodes: &[f64], m: usize) -> Vec<f64> {
    let n = nodes.len();
    assert!(n > m, "need more than m nodes for the m-th derivative");
    // c[k][j]: weight of node j for derivative order k
    let mut c = vec![vec![0.0; n]; m + 1];
    let mut c1 = 1.0;
    let mut c4 = nodes[0] - x0;
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(m);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = nodes[i] - x0;
        for j in 0..i {
            let c3 = nodes[i] - nodes[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[k][i] = c1 * (k as f64 * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
                }
                c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
            }
            for k in (1..=mn).rev() {
                c[k][j] = (c4 * c[k][j] - k as f64 * c[k - 1][j]) / c3;
            }
            c[0][j] = c4 * c[0][j] / c3;
        }
        c1 = c2;
    }
    c[m].clone()
}

/// Weights for the `m`-th derivative at integer offset `at` from values at
/// integer offsets `offsets`, on a grid with spacing `h`.
pub fn uniform_weights(at: i64, offsets: &[i64], m: usize, h: f64) -> Vec<f64> {
    let nodes: Vec<f64> = offsets.iter().map(|&o| o as f64).collect();
    let scale = h.powi(m as i32);
    fd_weights(at as f64, &nodes, m)
        .into_iter()
        .map(|w| w / scale)
        .collect()
}
