//! Envelope (skyline) Cholesky factorization of sparse SPD matrices with a
//! reverse Cuthill-McKee ordering.

use sprs::TriMat;

use super::sparse::CsrMatrix;
use crate::error::{Error, Result};

/// `P A P^T = L L^T`, with the rows of `L` stored contiguously from the first
/// structurally nonzero column up to the diagonal.
#[derive(Clone, Debug)]
pub struct SparseCholesky {
    n: usize,
    /// `perm[new] = old`.
    perm: Vec<usize>,
    /// `inv[old] = new`.
    inv: Vec<usize>,
    first: Vec<usize>,
    start: Vec<usize>,
    values: Vec<f64>,
}

fn rcm_permutation(a: &CsrMatrix) -> Vec<usize> {
    let n = a.rows();
    let mut tri = TriMat::with_capacity((n, n), 2 * a.nnz() + n);
    for (i, row) in a.outer_iterator().enumerate() {
        tri.add_triplet(i, i, 1.0);
        for (j, _) in row.iter() {
            if j != i {
                tri.add_triplet(i, j, 1.0);
                tri.add_triplet(j, i, 1.0);
            }
        }
    }
    // duplicates are summed, so map every stored value back to one
    let pattern: CsrMatrix = tri.to_csr::<usize>().map(|_| 1.0);
    let ordering = sprs::linalg::reverse_cuthill_mckee(pattern.view());
    ordering.perm.vec()
}

impl SparseCholesky {
    /// Factorizes a symmetric positive definite matrix. Only the lower
    /// triangle (in the permuted numbering) is read, so `a` must be
    /// symmetric.
    pub fn new(a: &CsrMatrix) -> Result<Self> {
        if a.rows() != a.cols() {
            return Err(Error::Dimension(format!(
                "Cholesky needs a square matrix, got {}x{}",
                a.rows(),
                a.cols()
            )));
        }
        let a = if a.is_csr() { a.clone() } else { a.to_csr() };
        let n = a.rows();
        let perm = rcm_permutation(&a);
        let mut inv = vec![0; n];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }

        let mut first: Vec<usize> = (0..n).collect();
        for (i, row) in a.outer_iterator().enumerate() {
            let pi = inv[i];
            for (j, _) in row.iter() {
                let pj = inv[j];
                if pj < pi {
                    first[pi] = first[pi].min(pj);
                } else if pi < pj {
                    first[pj] = first[pj].min(pi);
                }
            }
        }
        let mut start = Vec::with_capacity(n + 1);
        start.push(0);
        for i in 0..n {
            start.push(start[i] + (i - first[i] + 1));
        }
        let mut values = vec![0.0; start[n]];
        for (i, row) in a.outer_iterator().enumerate() {
            let pi = inv[i];
            for (j, &v) in row.iter() {
                let pj = inv[j];
                if pj <= pi {
                    values[start[pi] + pj - first[pi]] = v;
                }
            }
        }

        for i in 0..n {
            let fi = first[i];
            let (done, rest) = values.split_at_mut(start[i]);
            let row_i = &mut rest[..i - fi + 1];
            for j in fi..i {
                let fj = first[j];
                let row_j = &done[start[j]..start[j + 1]];
                let k0 = fi.max(fj);
                let mut s = row_i[j - fi];
                let a_part = &row_i[k0 - fi..j - fi];
                let b_part = &row_j[k0 - fj..j - fj];
                s -= a_part.iter().zip(b_part).map(|(x, y)| x * y).sum::<f64>();
                row_i[j - fi] = s / row_j[j - fj];
            }
            let off = &row_i[..i - fi];
            let d = row_i[i - fi] - off.iter().map(|x| x * x).sum::<f64>();
            if !(d > 0.0) || !d.is_finite() {
                return Err(Error::NotPositiveDefinite { row: perm[i], pivot: d });
            }
            row_i[i - fi] = d.sqrt();
        }
        Ok(SparseCholesky {
            n,
            perm,
            inv,
            first,
            start,
            values,
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Number of stored entries of the factor.
    pub fn envelope_size(&self) -> usize {
        self.values.len()
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.values[self.start[i]..self.start[i + 1]]
    }

    /// Solves `L y = b` in place for a permuted right-hand side whose
    /// entries before `from` are zero.
    fn forward_from(&self, y: &mut [f64], from: usize) {
        for i in from..self.n {
            let fi = self.first[i].max(from);
            let row = self.row(i);
            let lo = fi - self.first[i];
            let s: f64 = row[lo..i - self.first[i]]
                .iter()
                .zip(&y[fi..i])
                .map(|(l, v)| l * v)
                .sum();
            y[i] = (y[i] - s) / row[i - self.first[i]];
        }
    }

    /// Solves `L^T x = y` in place.
    fn backward(&self, x: &mut [f64]) {
        for i in (0..self.n).rev() {
            let fi = self.first[i];
            let row = self.row(i);
            let xi = x[i] / row[i - fi];
            x[i] = xi;
            if xi != 0.0 {
                for (k, l) in (fi..i).zip(row) {
                    x[k] -= l * xi;
                }
            }
        }
    }

    /// Solves `A x = b`.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        self.solve_into(b, &mut out);
        out
    }

    pub fn solve_into(&self, b: &[f64], x: &mut [f64]) {
        assert_eq!(b.len(), self.n);
        let mut y: Vec<f64> = self.perm.iter().map(|&old| b[old]).collect();
        let from = y.iter().position(|&v| v != 0.0).unwrap_or(self.n);
        self.forward_from(&mut y, from);
        self.backward(&mut y);
        for (new, &old) in self.perm.iter().enumerate() {
            x[old] = y[new];
        }
    }

    /// Solves `A x = b` for a right-hand side given by its nonzero entries.
    pub fn solve_sparse(&self, entries: &[(usize, f64)]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        let mut from = self.n;
        for &(i, v) in entries {
            let p = self.inv[i];
            y[p] += v;
            from = from.min(p);
        }
        self.forward_from(&mut y, from);
        self.backward(&mut y);
        let mut x = vec![0.0; self.n];
        for (new, &old) in self.perm.iter().enumerate() {
            x[old] = y[new];
        }
        x
    }

    /// `log det A`.
    pub fn log_det(&self) -> f64 {
        (0..self.n)
            .map(|i| 2.0 * self.row(i)[i - self.first[i]].ln())
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::sparse::{from_dense, mul_vec};
    use nalgebra::{DMatrix, DVector};
    use rand::{rngs::StdRng, Rng, SeedableRng};

    fn laplacian_1d(n: usize) -> CsrMatrix {
        let mut t = TriMat::new((n, n));
        for i in 0..n {
            t.add_triplet(i, i, 2.0);
            if i + 1 < n {
                t.add_triplet(i, i + 1, -1.0);
                t.add_triplet(i + 1, i, -1.0);
            }
        }
        t.to_csr()
    }

    #[test]
    fn tridiagonal_solve_and_determinant() {
        let n = 50;
        let a = laplacian_1d(n);
        let chol = SparseCholesky::new(&a).unwrap();
        let b: Vec<f64> = (0..n).map(|i| (i as f64).cos()).collect();
        let x = chol.solve(&b);
        let r = mul_vec(&a, &x);
        for (ri, bi) in r.iter().zip(&b) {
            assert!((ri - bi).abs() < 1e-11);
        }
        // det of the 1D Dirichlet Laplacian is n + 1
        assert!((chol.log_det() - ((n + 1) as f64).ln()).abs() < 1e-11);
        assert!(chol.envelope_size() <= 2 * n);
    }

    #[test]
    fn random_spd_matches_dense() {
        let mut rng = StdRng::seed_from_u64(7);
        let n = 30;
        let mut g = DMatrix::<f64>::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                if rng.random::<f64>() < 0.15 {
                    g[(i, j)] = rng.random::<f64>() - 0.5;
                }
            }
        }
        let a = &g * g.transpose() + DMatrix::identity(n, n);
        let chol = SparseCholesky::new(&from_dense(&a)).unwrap();
        let b = DVector::from_fn(n, |i, _| (i as f64 * 0.7).sin());
        let expect = a.clone().cholesky().unwrap().solve(&b);
        let x = chol.solve(b.as_slice());
        for i in 0..n {
            assert!((x[i] - expect[i]).abs() < 1e-12 * expect.amax().max(1.0));
        }
        let xs = chol.solve_sparse(&[(3, 1.0), (17, -2.0)]);
        let mut e = DVector::zeros(n);
        e[3] = 1.0;
        e[17] = -2.0;
        let expect = a.cholesky().unwrap().solve(&e);
        for i in 0..n {
            assert!((xs[i] - expect[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn indefinite_matrix_is_rejected() {
        let mut a = DMatrix::<f64>::identity(3, 3);
        a[(1, 1)] = -1.0;
        assert!(matches!(
            SparseCholesky::new(&from_dense(&a)),
            Err(Error::NotPositiveDefinite { .. })
        ));
    }
}
