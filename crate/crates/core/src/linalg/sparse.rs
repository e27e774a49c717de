//! Thin helpers over `sprs` compressed sparse row matrices.

use nalgebra::DMatrix;
use sprs::{CsMat, TriMat};

pub type CsrMatrix = CsMat<f64>;

/// `y = A x`.
pub fn spmv(a: &CsrMatrix, x: &[f64], y: &mut [f64]) {
    debug_assert!(a.is_csr());
    debug_assert_eq!(x.len(), a.cols());
    debug_assert_eq!(y.len(), a.rows());
    for (i, row) in a.outer_iterator().enumerate() {
        y[i] = row.iter().map(|(j, v)| v * x[j]).sum();
    }
}

pub fn mul_vec(a: &CsrMatrix, x: &[f64]) -> Vec<f64> {
    let mut y = vec![0.0; a.rows()];
    spmv(a, x, &mut y);
    y
}

/// `y += A^T x`.
pub fn spmv_transpose_add(a: &CsrMatrix, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), a.rows());
    debug_assert_eq!(y.len(), a.cols());
    for (i, row) in a.outer_iterator().enumerate() {
        let xi = x[i];
        if xi != 0.0 {
            for (j, v) in row.iter() {
                y[j] += v * xi;
            }
        }
    }
}

pub fn mul_transpose_vec(a: &CsrMatrix, x: &[f64]) -> Vec<f64> {
    let mut y = vec![0.0; a.cols()];
    spmv_transpose_add(a, x, &mut y);
    y
}

/// `x^T A x`.
pub fn quadratic_form(a: &CsrMatrix, x: &[f64]) -> f64 {
    a.outer_iterator()
        .enumerate()
        .map(|(i, row)| x[i] * row.iter().map(|(j, v)| v * x[j]).sum::<f64>())
        .sum()
}

pub fn to_dense(a: &CsrMatrix) -> DMatrix<f64> {
    let mut d = DMatrix::zeros(a.rows(), a.cols());
    for (i, row) in a.outer_iterator().enumerate() {
        for (j, v) in row.iter() {
            d[(i, j)] += *v;
        }
    }
    d
}

pub fn from_dense(d: &DMatrix<f64>) -> CsrMatrix {
    let mut t = TriMat::new((d.nrows(), d.ncols()));
    for i in 0..d.nrows() {
        for j in 0..d.ncols() {
            if d[(i, j)] != 0.0 {
                t.add_triplet(i, j, d[(i, j)]);
            }
        }
    }
    t.to_csr()
}

/// Entry `(i, j)` or zero.
pub fn get(a: &CsrMatrix, i: usize, j: usize) -> f64 {
    a.get(i, j).copied().unwrap_or(0.0)
}

/// Largest `|A_ij - A_ji|` relative to the largest `|A_ij|`.
pub fn symmetry_defect(a: &CsrMatrix) -> f64 {
    let mut max_entry: f64 = 0.0;
    let mut max_diff: f64 = 0.0;
    for (i, row) in a.outer_iterator().enumerate() {
        for (j, v) in row.iter() {
            max_entry = max_entry.max(v.abs());
            max_diff = max_diff.max((v - get(a, j, i)).abs());
        }
    }
    if max_entry == 0.0 {
        0.0
    } else {
        max_diff / max_entry
    }
}

/// `(A + A^T) / 2`.
pub fn symmetrize(a: &CsrMatrix) -> CsrMatrix {
    let at = a.transpose_view().to_csr();
    let sum = a + &at;
    sum.map(|v| 0.5 * v)
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}
