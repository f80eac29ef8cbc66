//! Banded matrices and banded LU factorization with partial pivoting.
//!
//! Storage follows the LAPACK band convention: a matrix with `kl` sub- and
//! `ku` superdiagonals is stored in a `(2*kl + ku + 1) x n` array so that
//! `a[i][j]` lives at row `kl + ku + i - j`, column `j`. The extra `kl` rows
//! absorb the fill-in produced by row pivoting, which widens the upper band
//! to `kl + ku`.

use crate::error::{KawaError, Result};

#[derive(Debug, Clone)]
pub struct BandedMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    /// Row-major `(2*kl + ku + 1) x n` band storage.
    data: Vec<f64>,
}

impl BandedMatrix {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        BandedMatrix {
            n,
            kl,
            ku,
            data: vec![0.0; (2 * kl + ku + 1) * n],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    fn storage_index(&self, i: usize, j: usize) -> usize {
        let row = self.kl + self.ku + i - j;
        row * self.n + j
    }

    /// Logical band of the assembled operator (before factorization).
    #[inline]
    pub fn in_band(&self, i: usize, j: usize) -> bool {
        (j as isize - i as isize) <= self.ku as isize
            && (i as isize - j as isize) <= self.kl as isize
    }

    /// Storable region, including pivoting fill-in.
    #[inline]
    fn in_storage(&self, i: usize, j: usize) -> bool {
        (j as isize - i as isize) <= (self.ku + self.kl) as isize
            && (i as isize - j as isize) <= self.kl as isize
    }

    #[inline]
    fn get_raw(&self, i: usize, j: usize) -> f64 {
        debug_assert!(self.in_storage(i, j));
        self.data[self.storage_index(i, j)]
    }

    #[inline]
    fn set_raw(&mut self, i: usize, j: usize, v: f64) {
        debug_assert!(self.in_storage(i, j));
        let idx = self.storage_index(i, j);
        self.data[idx] = v;
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        assert!(self.in_band(i, j), "({i},{j}) outside band");
        self.set_raw(i, j, v);
    }

    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        assert!(self.in_band(i, j), "({i},{j}) outside band");
        let idx = self.storage_index(i, j);
        self.data[idx] += v;
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if i < self.n && j < self.n && self.in_band(i, j) {
            self.data[self.storage_index(i, j)]
        } else {
            0.0
        }
    }

    /// `y = A x` for the assembled (unfactored) operator.
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n);
        let mut y = vec![0.0; self.n];
        for i in 0..self.n {
            let j_lo = i.saturating_sub(self.kl);
            let j_hi = (i + self.ku).min(self.n - 1);
            let mut acc = 0.0;
            for j in j_lo..=j_hi {
                acc += self.data[self.storage_index(i, j)] * x[j];
            }
            y[i] = acc;
        }
        y
    }

    /// LU factorization with partial pivoting, consuming the matrix.
    pub fn factor(mut self) -> Result<BandedLu> {
        let n = self.n;
        let kl = self.kl;
        let ku_eff = self.kl + self.ku;
        let mut pivots = vec![0usize; n];
        let mut max_pivot = 0.0_f64;
        let mut min_pivot = f64::INFINITY;

        for k in 0..n {
            // pivot search in column k, rows k..=min(k+kl, n-1)
            let i_max = (k + kl).min(n - 1);
            let mut p = k;
            let mut p_val = self.get_raw(k, k).abs();
            for i in k + 1..=i_max {
                let v = self.get_raw(i, k).abs();
                if v > p_val {
                    p = i;
                    p_val = v;
                }
            }
            if p_val == 0.0 {
                return Err(KawaError::Solver(format!(
                    "singular banded system: zero pivot in column {k} \
                     (condition diagnostic: |pivot| range [{min_pivot:.3e}, {max_pivot:.3e}] so far)"
                )));
            }
            max_pivot = max_pivot.max(p_val);
            min_pivot = min_pivot.min(p_val);
            pivots[k] = p;
            let j_hi = (k + ku_eff).min(n - 1);
            if p != k {
                for j in k..=j_hi {
                    let a = self.get_raw(k, j);
                    let b = self.get_raw(p, j);
                    self.set_raw(k, j, b);
                    self.set_raw(p, j, a);
                }
            }
            let pivot = self.get_raw(k, k);
            for i in k + 1..=i_max {
                let factor = self.get_raw(i, k) / pivot;
                self.set_raw(i, k, factor); // store the multiplier in place
                if factor != 0.0 {
                    for j in k + 1..=j_hi {
                        let delta = factor * self.get_raw(k, j);
                        if delta != 0.0 {
                            let v = self.get_raw(i, j) - delta;
                            self.set_raw(i, j, v);
                        }
                    }
                }
            }
        }
        Ok(BandedLu {
            mat: self,
            pivots,
            pivot_ratio: max_pivot / min_pivot,
        })
    }
}

/// Factored banded system, reusable across many right-hand sides.
#[derive(Debug, Clone)]
pub struct BandedLu {
    mat: BandedMatrix,
    pivots: Vec<usize>,
    /// max/min pivot magnitude; a crude conditioning indicator.
    pub pivot_ratio: f64,
}

impl BandedLu {
    pub fn n(&self) -> usize {
        self.mat.n
    }

    /// Solve `A x = b` in place.
    pub fn solve_in_place(&self, b: &mut [f64]) {
        let n = self.mat.n;
        assert_eq!(b.len(), n);
        let kl = self.mat.kl;
        let ku_eff = self.mat.kl + self.mat.ku;
        // forward substitution with the stored multipliers
        for k in 0..n {
            let p = self.pivots[k];
            if p != k {
                b.swap(k, p);
            }
            let i_max = (k + kl).min(n - 1);
            let bk = b[k];
            if bk != 0.0 {
                for i in k + 1..=i_max {
                    b[i] -= self.mat.get_raw(i, k) * bk;
                }
            }
        }
        // back substitution
        for k in (0..n).rev() {
            let j_hi = (k + ku_eff).min(n - 1);
            let mut acc = b[k];
            for j in k + 1..=j_hi {
                acc -= self.mat.get_raw(k, j) * b[j];
            }
            b[k] = acc / self.mat.get_raw(k, k);
        }
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Dense Gaussian elimination with partial pivoting: the oracle.
    fn dense_solve(a: &[Vec<f64>], b: &[f64]) -> Vec<f64> {
        let n = b.len();
        let mut m: Vec<Vec<f64>> = a.to_vec();
        let mut rhs = b.to_vec();
        for k in 0..n {
            let mut p = k;
            for i in k + 1..n {
                if m[i][k].abs() > m[p][k].abs() {
                    p = i;
                }
            }
            m.swap(k, p);
            rhs.swap(k, p);
            for i in k + 1..n {
                let f = m[i][k] / m[k][k];
                for j in k..n {
                    m[i][j] -= f * m[k][j];
                }
                rhs[i] -= f * rhs[k];
            }
        }
        for k in (0..n).rev() {
            let mut acc = rhs[k];
            for j in k + 1..n {
                acc -= m[k][j] * rhs[j];
            }
            rhs[k] = acc / m[k][k];
        }
        rhs
    }

    fn pseudo_random(state: &mut u64) -> f64 {
        // xorshift; deterministic fixture generator
        *state ^= *state << 13;
        *state ^= *state >> 7;
        *state ^= *state << 17;
        (*state % 10_000) as f64 / 5_000.0 - 1.0
    }

    #[test]
    fn banded_lu_matches_dense_solver() {
        let mut state = 0x9E3779B97F4A7C15_u64;
        for &(n, kl, ku) in &[(12usize, 3usize, 5usize), (40, 2, 2), (25, 3, 5), (9, 1, 4)] {
            let mut banded = BandedMatrix::zeros(n, kl, ku);
            let mut dense = vec![vec![0.0; n]; n];
            for i in 0..n {
                for j in 0..n {
                    if banded.in_band(i, j) {
                        let v = pseudo_random(&mut state) + if i == j { 4.0 } else { 0.0 };
                        banded.set(i, j, v);
                        dense[i][j] = v;
                    }
                }
            }
            let b: Vec<f64> = (0..n).map(|_| pseudo_random(&mut state)).collect();
            let lu = banded.factor().unwrap();
            let x = lu.solve(&b);
            let x_ref = dense_solve(&dense, &b);
            for i in 0..n {
                assert!(
                    (x[i] - x_ref[i]).abs() < 1e-10,
                    "n={n} kl={kl} ku={ku} i={i}: {} vs {}",
                    x[i],
                    x_ref[i]
                );
            }
        }
    }

    #[test]
    fn heavy_pivoting_still_matches_dense() {
        // rows ordered so pivoting is forced at almost every step
        let mut state = 0xDEADBEEF_u64;
        let n = 30;
        let (kl, ku) = (3, 5);
        let mut banded = BandedMatrix::zeros(n, kl, ku);
        let mut dense = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in 0..n {
                if banded.in_band(i, j) {
                    // make subdiagonal entries dominant
                    let v = pseudo_random(&mut state) * if i > j { 10.0 } else { 1.0 };
                    banded.set(i, j, v);
                    dense[i][j] = v;
                }
            }
        }
        let b: Vec<f64> = (0..n).map(|_| pseudo_random(&mut state)).collect();
        let lu = banded.factor().unwrap();
        let x = lu.solve(&b);
        let x_ref = dense_solve(&dense, &b);
        for i in 0..n {
            assert!((x[i] - x_ref[i]).abs() < 1e-8, "i={i}");
        }
    }

    #[test]
    fn pivoting_handles_zero_diagonal() {
        // [[0, 1], [1, 0]] has zero diagonal but is perfectly solvable
        let mut m = BandedMatrix::zeros(2, 1, 1);
        m.set(0, 1, 1.0);
        m.set(1, 0, 1.0);
        let lu = m.factor().unwrap();
        let x = lu.solve(&[2.0, 3.0]);
        assert!((x[0] - 3.0).abs() < 1e-14);
        assert!((x[1] - 2.0).abs() < 1e-14);
    }

    #[test]
    fn singular_matrix_is_reported() {
        let mut m = BandedMatrix::zeros(3, 1, 1);
        m.set(0, 0, 1.0);
        m.set(1, 1, 0.0);
        m.set(2, 2, 1.0);
        assert!(matches!(m.factor(), Err(KawaError::Solver(_))));
    }

    #[test]
    fn matvec_consistent_with_solve() {
        let mut state = 7_u64;
        let n = 30;
        let mut m = BandedMatrix::zeros(n, 3, 5);
        for i in 0..n {
            for j in 0..n {
                if m.in_band(i, j) {
                    m.set(i, j, pseudo_random(&mut state) + if i == j { 5.0 } else { 0.0 });
                }
            }
        }
        let x: Vec<f64> = (0..n).map(|_| pseudo_random(&mut state)).collect();
        let y = m.matvec(&x);
        let lu = m.clone().factor().unwrap();
        let x_back = lu.solve(&y);
        for i in 0..n {
            assert!((x[i] - x_back[i]).abs() < 1e-11);
        }
    }
}
