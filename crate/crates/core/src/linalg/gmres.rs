//! Restarted GMRES with left preconditioning (modified Gram-Schmidt Arnoldi,
//! Givens rotations).

use super::sparse::{axpy, dot, norm};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GmresConfig {
    /// Tolerance on the preconditioned residual relative to `|M^-1 b|`.
    pub tol: f64,
    pub restart: usize,
    pub max_iters: usize,
}

impl Default for GmresConfig {
    fn default() -> Self {
        GmresConfig {
            tol: 1e-10,
            restart: 200,
            max_iters: 2000,
        }
    }
}

#[derive(Clone, Debug)]
pub struct GmresOutcome {
    pub x: Vec<f64>,
    pub iterations: usize,
    /// Final preconditioned relative residual.
    pub residual: f64,
    pub converged: bool,
    /// The Arnoldi process broke down without reaching the tolerance.
    pub breakdown: bool,
}

fn apply_givens(cs: &[f64], sn: &[f64], h: &mut [f64], k: usize) {
    for i in 0..k {
        let t = cs[i] * h[i] + sn[i] * h[i + 1];
        h[i + 1] = -sn[i] * h[i] + cs[i] * h[i + 1];
        h[i] = t;
    }
}

/// Solves `A x = b` using the left-preconditioned system `M^-1 A x = M^-1 b`.
/// `apply_a(x, y)` writes `A x` to `y`, `apply_m(r, z)` writes `M^-1 r` to `z`.
pub fn gmres<A, M>(mut apply_a: A, mut apply_m: M, b: &[f64], x0: Option<&[f64]>, cfg: &GmresConfig) -> GmresOutcome
where
    A: FnMut(&[f64], &mut [f64]),
    M: FnMut(&[f64], &mut [f64]),
{
    let n = b.len();
    let mut x = x0.map(|v| v.to_vec()).unwrap_or_else(|| vec![0.0; n]);
    let mut tmp = vec![0.0; n];
    let mut r = vec![0.0; n];

    apply_m(b, &mut r);
    let bnorm = norm(&r);
    if bnorm == 0.0 {
        return GmresOutcome {
            x: vec![0.0; n],
            iterations: 0,
            residual: 0.0,
            converged: true,
            breakdown: false,
        };
    }

    let m = cfg.restart.max(1);
    let mut iterations = 0;
    let mut residual;
    loop {
        apply_a(&x, &mut tmp);
        for (t, bi) in tmp.iter_mut().zip(b) {
            *t = bi - *t;
        }
        apply_m(&tmp, &mut r);
        let beta = norm(&r);
        residual = beta / bnorm;
        if residual <= cfg.tol {
            return GmresOutcome {
                x,
                iterations,
                residual,
                converged: true,
                breakdown: false,
            };
        }
        if iterations >= cfg.max_iters {
            return GmresOutcome {
                x,
                iterations,
                residual,
                converged: false,
                breakdown: false,
            };
        }

        let mut v: Vec<Vec<f64>> = Vec::with_capacity(m + 1);
        v.push(r.iter().map(|ri| ri / beta).collect());
        let mut h: Vec<Vec<f64>> = Vec::with_capacity(m);
        let mut cs = Vec::with_capacity(m);
        let mut sn = Vec::with_capacity(m);
        let mut g = vec![0.0; m + 1];
        g[0] = beta;
        let mut k = 0;
        let mut breakdown = false;
        while k < m && iterations < cfg.max_iters {
            apply_a(&v[k], &mut tmp);
            let mut w = vec![0.0; n];
            apply_m(&tmp, &mut w);
            let mut hk = vec![0.0; k + 2];
            for (i, vi) in v.iter().enumerate() {
                hk[i] = dot(&w, vi);
                axpy(-hk[i], vi, &mut w);
            }
            hk[k + 1] = norm(&w);
            apply_givens(&cs, &sn, &mut hk, k);
            let denom = hk[k].hypot(hk[k + 1]);
            let (c, s) = if denom == 0.0 { (1.0, 0.0) } else { (hk[k] / denom, hk[k + 1] / denom) };
            let sub = hk[k + 1];
            hk[k] = denom;
            hk[k + 1] = 0.0;
            cs.push(c);
            sn.push(s);
            g[k + 1] = -s * g[k];
            g[k] *= c;
            h.push(hk);
            iterations += 1;
            k += 1;
            residual = g[k].abs() / bnorm;
            if residual <= cfg.tol {
                break;
            }
            if sub <= 1e-14 * denom.max(f64::MIN_POSITIVE) {
                breakdown = true;
                break;
            }
            v.push(w.iter().map(|wi| wi / sub).collect());
        }

        // back substitution for the k x k upper triangular system
        let mut y = vec![0.0; k];
        for i in (0..k).rev() {
            let mut s = g[i];
            for j in i + 1..k {
                s -= h[j][i] * y[j];
            }
            y[i] = if h[i][i] != 0.0 { s / h[i][i] } else { 0.0 };
        }
        for (j, yj) in y.iter().enumerate() {
            axpy(*yj, &v[j], &mut x);
        }
        if breakdown {
            apply_a(&x, &mut tmp);
            for (t, bi) in tmp.iter_mut().zip(b) {
                *t = bi - *t;
            }
            apply_m(&tmp, &mut r);
            residual = norm(&r) / bnorm;
            return GmresOutcome {
                x,
                iterations,
                residual,
                converged: residual <= cfg.tol,
                breakdown: residual > cfg.tol,
            };
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_converges_in_one_iteration() {
        let b = vec![1.0, -2.0, 3.0];
        let out = gmres(|x, y| y.copy_from_slice(x), |r, z| z.copy_from_slice(r), &b, None, &GmresConfig::default());
        assert!(out.converged);
        assert_eq!(out.iterations, 1);
        for (x, b) in out.x.iter().zip(&b) {
            assert!((x - b).abs() < 1e-14);
        }
    }

    #[test]
    fn nonsymmetric_system_with_restarts() {
        let n = 40;
        let apply = |x: &[f64], y: &mut [f64]| {
            for i in 0..n {
                y[i] = 3.0 * x[i];
                if i > 0 {
                    y[i] -= x[i - 1];
                }
                if i + 1 < n {
                    y[i] -= 0.5 * x[i + 1];
                }
            }
        };
        let b: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let cfg = GmresConfig {
            tol: 1e-12,
            restart: 5,
            max_iters: 500,
        };
        let out = gmres(apply, |r, z| z.copy_from_slice(r), &b, None, &cfg);
        assert!(out.converged);
        let mut ax = vec![0.0; n];
        apply(&out.x, &mut ax);
        for (a, b) in ax.iter().zip(&b) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn exact_preconditioner_needs_one_iteration() {
        let d = [1.0, 10.0, 100.0, 1000.0];
        let b = vec![1.0; 4];
        let out = gmres(
            |x, y| {
                for i in 0..4 {
                    y[i] = d[i] * x[i];
                }
            },
            |r, z| {
                for i in 0..4 {
                    z[i] = r[i] / d[i];
                }
            },
            &b,
            None,
            &GmresConfig::default(),
        );
        assert_eq!(out.iterations, 1);
        assert!(out.converged);
    }

    #[test]
    fn zero_rhs_returns_zero() {
        let out = gmres(|x, y| y.copy_from_slice(x), |r, z| z.copy_from_slice(r), &[0.0; 3], None, &GmresConfig::default());
        assert_eq!(out.iterations, 0);
        assert_eq!(out.x, vec![0.0; 3]);
    }
}
