//! Dense symmetric-definite generalized eigenproblems with deflation.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

/// Default cap on the dimension of dense eigenproblems.
pub const DEFAULT_DENSE_CAP: usize = 4000;

/// Applies the reflector `H = I - beta v v^T` from both sides of a symmetric
/// matrix, in place.
fn reflect_symmetric(a: &mut DMatrix<f64>, v: &DVector<f64>, beta: f64) {
    let p = &*a * v * beta;
    let k = 0.5 * beta * v.dot(&p);
    let q = p - v * k;
    a.ger(-1.0, v, &q, 1.0);
    a.ger(-1.0, &q, v, 1.0);
}

/// Householder vector mapping `x[j..]` onto a multiple of `e_j`.
fn householder(x: &DVector<f64>, j: usize) -> Option<(DVector<f64>, f64)> {
    let n = x.len();
    let tail = x.rows(j, n - j);
    let alpha = tail.norm();
    if alpha == 0.0 {
        return None;
    }
    let mut v = DVector::zeros(n);
    v.rows_mut(j, n - j).copy_from(&tail);
    let sign = if x[j] >= 0.0 { 1.0 } else { -1.0 };
    v[j] += sign * alpha;
    let vv = v.norm_squared();
    Some((v, 2.0 / vv))
}

/// Restricts symmetric matrices to the Euclidean orthogonal complement of the
/// span of `constraints`, returning the reduced matrices in an orthonormal
/// basis of the complement. Constraints that are (numerically) linearly
/// dependent on earlier ones are skipped.
pub fn deflate(mats: &[&DMatrix<f64>], constraints: &[DVector<f64>]) -> Result<Vec<DMatrix<f64>>> {
    let n = mats.first().map(|m| m.nrows()).unwrap_or(0);
    for m in mats {
        if m.nrows() != n || m.ncols() != n {
            return Err(Error::Dimension("deflation needs square matrices of equal size".into()));
        }
    }
    let mut work: Vec<DMatrix<f64>> = mats.iter().map(|m| (*m).clone()).collect();
    let mut ws: Vec<DVector<f64>> = Vec::with_capacity(constraints.len());
    for w in constraints {
        if w.len() != n {
            return Err(Error::Dimension("deflation vector has wrong length".into()));
        }
        ws.push(w.clone());
    }
    let mut j = 0;
    for idx in 0..ws.len() {
        let scale = ws[idx].norm();
        let x = ws[idx].clone();
        let tail_norm = if j < n { x.rows(j, n - j).norm() } else { 0.0 };
        if scale == 0.0 || tail_norm <= 1e-12 * scale {
            continue;
        }
        let (v, beta) = householder(&x, j).expect("nonzero tail");
        for m in work.iter_mut() {
            reflect_symmetric(m, &v, beta);
        }
        for w in ws.iter_mut().skip(idx + 1) {
            let s = beta * v.dot(w);
            w.axpy(-s, &v, 1.0);
        }
        j += 1;
    }
    Ok(work
        .into_iter()
        .map(|m| m.view((j, j), (n - j, n - j)).into_owned())
        .collect())
}

/// Eigenvalues (ascending) of the pencil `S x = lambda T x` with `T` SPD.
pub fn pencil_eigenvalues(s: &DMatrix<f64>, t: &DMatrix<f64>) -> Result<Vec<f64>> {
    let n = s.nrows();
    if s.ncols() != n || t.nrows() != n || t.ncols() != n {
        return Err(Error::Dimension("pencil matrices must be square and equal size".into()));
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    let chol = t.clone().cholesky().ok_or_else(|| {
        let row = (0..n).find(|&i| !(t[(i, i)] > 0.0)).unwrap_or(0);
        Error::NotPositiveDefinite {
            row,
            pivot: t[(row, row)],
        }
    })?;
    let l = chol.l();
    let x = l
        .solve_lower_triangular(s)
        .ok_or_else(|| Error::LinearSolver("singular Cholesky factor".into()))?;
    let c = l
        .solve_lower_triangular(&x.transpose())
        .ok_or_else(|| Error::LinearSolver("singular Cholesky factor".into()))?;
    let c = (&c + c.transpose()) * 0.5;
    let mut vals: Vec<f64> = SymmetricEigen::new(c).eigenvalues.iter().copied().collect();
    vals.sort_by(f64::total_cmp);
    Ok(vals)
}

/// Ascending eigenvalues of `S x = lambda T x` on the Euclidean orthogonal
/// complement of `deflation`.
pub fn generalized_eigs(s: &DMatrix<f64>, t: &DMatrix<f64>, deflation: &[DVector<f64>]) -> Result<Vec<f64>> {
    let reduced = deflate(&[s, t], deflation)?;
    pencil_eigenvalues(&reduced[0], &reduced[1])
}

/// Extremal eigenvalues of a sorted spectrum, ignoring the near-kernel
/// (values below `rel_cut * lambda_max`).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpectrumSummary {
    pub lambda_min_nonzero: f64,
    pub lambda_max: f64,
    pub kernel_dim: usize,
}

/// Relative threshold below which eigenvalues are treated as kernel.
pub const KERNEL_CUTOFF: f64 = 1e-10;

pub fn summarize_spectrum(vals: &[f64]) -> Result<SpectrumSummary> {
    let lambda_max = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if vals.is_empty() || !(lambda_max > 0.0) {
        return Err(Error::LinearSolver("spectrum has no positive eigenvalue".into()));
    }
    let cut = KERNEL_CUTOFF * lambda_max;
    let kernel_dim = vals.iter().filter(|&&v| v < cut).count();
    let lambda_min_nonzero = vals
        .iter()
        .copied()
        .filter(|&v| v >= cut)
        .fold(f64::INFINITY, f64::min);
    Ok(SpectrumSummary {
        lambda_min_nonzero,
        lambda_max,
        kernel_dim,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{rngs::StdRng, Rng, SeedableRng};

    fn random_spd(n: usize, rng: &mut StdRng) -> DMatrix<f64> {
        let g = DMatrix::from_fn(n, n, |_, _| rng.random::<f64>() - 0.5);
        &g * g.transpose() + DMatrix::identity(n, n) * 0.5
    }

    #[test]
    fn identical_and_scaled_pencils() {
        let mut rng = StdRng::seed_from_u64(1);
        let t = random_spd(6, &mut rng);
        for v in pencil_eigenvalues(&t, &t).unwrap() {
            assert!((v - 1.0).abs() < 1e-12);
        }
        for v in pencil_eigenvalues(&(&t * 2.0), &t).unwrap() {
            assert!((v - 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn pencil_matches_inverse_oracle() {
        let mut rng = StdRng::seed_from_u64(2);
        let s = random_spd(5, &mut rng);
        let t = random_spd(5, &mut rng);
        let got = pencil_eigenvalues(&s, &t).unwrap();
        // T^-1 S is similar to a symmetric matrix, so its eigenvalues are real
        let prod = t.clone().try_inverse().unwrap() * &s;
        let mut expect: Vec<f64> = prod.complex_eigenvalues().iter().map(|z| z.re).collect();
        expect.sort_by(f64::total_cmp);
        for (a, b) in got.iter().zip(&expect) {
            assert!((a - b).abs() < 1e-10 * b.abs());
        }
    }

    #[test]
    fn deflation_removes_weighted_kernel() {
        // S has kernel spanned by ones, T arbitrary SPD; deflating T*ones gives
        // exactly the nonzero eigenvalues of the full pencil
        let mut rng = StdRng::seed_from_u64(3);
        let n = 7;
        let t = random_spd(n, &mut rng);
        let ones = DVector::from_element(n, 1.0);
        let g = DMatrix::from_fn(n, n, |_, _| rng.random::<f64>() - 0.5);
        let proj = DMatrix::identity(n, n) - &ones * ones.transpose() / n as f64;
        let s = &proj * (&g * g.transpose()) * &proj;
        let full = pencil_eigenvalues(&s, &t).unwrap();
        assert!(full[0].abs() < 1e-12);
        let w = &t * &ones;
        let defl = generalized_eigs(&s, &t, &[w]).unwrap();
        assert_eq!(defl.len(), n - 1);
        for (a, b) in defl.iter().zip(&full[1..]) {
            assert!((a - b).abs() < 1e-10 * b.abs());
        }
    }

    #[test]
    fn dependent_constraints_are_skipped() {
        let mut rng = StdRng::seed_from_u64(4);
        let s = random_spd(4, &mut rng);
        let w = DVector::from_vec(vec![1.0, 2.0, 3.0, 4.0]);
        let out = deflate(&[&s], &[w.clone(), w * 2.0]).unwrap();
        assert_eq!(out[0].nrows(), 3);
    }

    #[test]
    fn summary_ignores_kernel() {
        let s = summarize_spectrum(&[1e-15, 0.5, 2.0]).unwrap();
        assert_eq!(s.kernel_dim, 1);
        assert_eq!(s.lambda_min_nonzero, 0.5);
        assert_eq!(s.lambda_max, 2.0);
    }
}
