//! Cubic Lagrange interpolation on uniform grids.
//!
//! Four-point cubic interpolation is fourth-order accurate on smooth data
//! and reproduces nodal values exactly, which keeps grid-aligned resampling
//! (the common case for the dilation symmetry) free of interpolation error.

use ndarray::Array2;

/// Interpolate `values` sampled at `x_min + j * h` at the point `x`.
///
/// Points outside the table are clamped to the boundary stencil; callers are
/// expected to stay in range (dilation with `delta <= 1` always does).
pub fn cubic_1d(values: &[f64], x_min: f64, h: f64, x: f64) -> f64 {
    let n = values.len();
    assert!(n >= 4, "cubic interpolation needs at least 4 nodes");
    let s = (x - x_min) / h;
    // base index of the 4-point stencil [i0, i0+3], centered when possible
    let mut i0 = s.floor() as isize - 1;
    i0 = i0.clamp(0, n as isize - 4);
    let i0 = i0 as usize;
    let u = s - i0 as f64; // local coordinate, nodes at 0,1,2,3
    let l0 = -(u - 1.0) * (u - 2.0) * (u - 3.0) / 6.0;
    let l1 = u * (u - 2.0) * (u - 3.0) / 2.0;
    let l2 = -u * (u - 1.0) * (u - 3.0) / 2.0;
    let l3 = u * (u - 1.0) * (u - 2.0) / 6.0;
    values[i0] * l0 + values[i0 + 1] * l1 + values[i0 + 2] * l2 + values[i0 + 3] * l3
}

/// Linear interpolation on the same table; used as a cross-check to
/// estimate interpolation error a posteriori.
pub fn linear_1d(values: &[f64], x_min: f64, h: f64, x: f64) -> f64 {
    let n = values.len();
    let s = ((x - x_min) / h).clamp(0.0, (n - 1) as f64);
    let i = (s.floor() as usize).min(n - 2);
    let u = s - i as f64;
    values[i] * (1.0 - u) + values[i + 1] * u
}

/// Tensor-product cubic interpolation of a space-time table
/// (rows: time nodes at `n * tau`, columns: space nodes at `x_min + j * h`).
pub fn cubic_2d(table: &Array2<f64>, tau: f64, x_min: f64, h: f64, t: f64, x: f64) -> f64 {
    let n_rows = table.nrows();
    assert!(n_rows >= 4);
    let s = t / tau;
    let mut r0 = s.floor() as isize - 1;
    r0 = r0.clamp(0, n_rows as isize - 4);
    let r0 = r0 as usize;
    let mut col_vals = [0.0; 4];
    for (k, cv) in col_vals.iter_mut().enumerate() {
        let row = table.row(r0 + k);
        *cv = cubic_1d(row.to_slice().expect("contiguous row"), x_min, h, x);
    }
    let u = s - r0 as f64;
    let l0 = -(u - 1.0) * (u - 2.0) * (u - 3.0) / 6.0;
    let l1 = u * (u - 2.0) * (u - 3.0) / 2.0;
    let l2 = -u * (u - 1.0) * (u - 3.0) / 2.0;
    let l3 = u * (u - 1.0) * (u - 2.0) / 6.0;
    col_vals[0] * l0 + col_vals[1] * l1 + col_vals[2] * l2 + col_vals[3] * l3
}
