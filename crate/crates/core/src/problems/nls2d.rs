//! Cubic Schrödinger lattice in two dimensions:
//!   i dA/dt = -1/2 (B A + A B) - alpha * A .* conj(A) .* A,
//! with B = tridiag(1, 0, 1) (no wrap; the lattice indexes neighbors
//! without periodicity). Complex-valued.

use num_complex::Complex64;

use super::{FieldStats, MatrixField};
use crate::kernels::{FactoredMatrix, OuterProductSum};
use crate::mat::Mat;

type C = Complex64;

pub struct Nls2d {
    pub n: usize,
    pub alpha: f64,
    stats: FieldStats,
}

impl Nls2d {
    pub fn new(n: usize, alpha: f64) -> Self {
        assert!(n >= 8);
        Nls2d {
            n,
            alpha,
            stats: FieldStats::default(),
        }
    }

    /// Rank-2 sum of two Gaussian bumps with scaled parameters
    /// sigma = 0.1n, mu = (0.6n, 0.5n), nu = (0.5n, 0.4n).
    pub fn initial(&self) -> Mat<C> {
        let n = self.n as f64;
        let sigma2 = (0.1 * n) * (0.1 * n);
        let (mu1, mu2, nu1, nu2) = (0.6 * n, 0.5 * n, 0.5 * n, 0.4 * n);
        let a = Mat::from_fn(self.n, self.n, |j, k| {
            let (jf, kf) = (j as f64, k as f64);
            let g1 = (-(jf - mu1).powi(2) / sigma2 - (kf - nu1).powi(2) / sigma2).exp();
            let g2 = (-(jf - mu2).powi(2) / sigma2 - (kf - nu2).powi(2) / sigma2).exp();
            C::new(g1 + g2, 0.0)
        });
        assert!(a.all_finite(), "initial state must be finite");
        a
    }

    /// t in [0, 0.01] is integrated densely before truncating the initial
    /// value, so the low-rank run starts from a full-rank state.
    pub fn warmup_time(&self) -> f64 {
        0.01
    }

    #[inline]
    fn row_of_f(&self, prev: Option<&[C]>, cur: &[C], next: Option<&[C]>, out: &mut [C]) {
        let n = self.n;
        let ih = C::new(0.0, 0.5);
        let ia = C::new(0.0, self.alpha);
        for k in 0..n {
            let mut lin = C::new(0.0, 0.0);
            if let Some(p) = prev {
                lin += p[k];
            }
            if let Some(nx) = next {
                lin += nx[k];
            }
            if k > 0 {
                lin += cur[k - 1];
            }
            if k + 1 < n {
                lin += cur[k + 1];
            }
            let c = cur[k];
            let cubic = c * c.norm_sqr();
            out[k] = ih * lin + ia * cubic;
        }
    }
}

impl MatrixField<C> for Nls2d {
    fn shape(&self) -> (usize, usize) {
        (self.n, self.n)
    }

    fn eval_dense(&self, a: &Mat<C>) -> Mat<C> {
        let mut out = Mat::zeros(self.n, self.n);
        self.eval_dense_into(a, &mut out);
        out
    }

    fn eval_dense_into(&self, a: &Mat<C>, out: &mut Mat<C>) {
        let n = self.n;
        FieldStats::bump(&self.stats.dense_evals, (n * n) as u64);
        let ih = C::new(0.0, 0.5);
        let ia = C::new(0.0, self.alpha);
        for k in 0..n {
            let lo = if k > 0 { Some(a.col(k - 1)) } else { None };
            let hi = if k + 1 < n { Some(a.col(k + 1)) } else { None };
            let cur = a.col(k);
            let dst = out.col_mut(k);
            for j in 0..n {
                let mut lin = C::new(0.0, 0.0);
                if j > 0 {
                    lin += cur[j - 1];
                }
                if j + 1 < n {
                    lin += cur[j + 1];
                }
                if let Some(p) = lo {
                    lin += p[j];
                }
                if let Some(p) = hi {
                    lin += p[j];
                }
                let c = cur[j];
                dst[j] = ih * lin + ia * (c * c.norm_sqr());
            }
        }
    }

    fn eval_factored(&self, y: &FactoredMatrix<C>, cap: usize) -> Option<OuterProductSum<C>> {
        let n = self.n;
        let r = y.rank();
        FieldStats::bump(&self.stats.dense_evals, (n * (2 * r + r * r * r)) as u64);
        let mut sum = OuterProductSum::new(n, n, cap);
        let us = y.u.mul(&y.s);
        let b = crate::kernels::PeriodicTridiag::lattice_hopping(n);
        let bu = apply_op_cols(&b, &us);
        let bv = apply_op_cols(&b, &y.v);
        // i/2 (BA + AB)
        sum.push(bu.scaled_s(C::new(0.0, 0.5)), y.v.clone()).ok()?;
        sum.push(us.scaled_s(C::new(0.0, 0.5)), bv).ok()?;
        // i alpha * A .* conj(A) .* A as a rank r^3 outer product
        let l3 = us.row_kron(&us.conj()).row_kron(&us);
        let r3 = y.v.row_kron(&y.v.conj()).row_kron(&y.v);
        sum.push(l3.scaled_s(C::new(0.0, self.alpha)), r3).ok()?;
        Some(sum)
    }

    fn eval_rows(&self, y: &FactoredMatrix<C>, rows: &[usize]) -> Mat<C> {
        FieldStats::bump(&self.stats.row_queries, rows.len() as u64);
        let n = self.n;
        let mut out = Mat::zeros(rows.len(), n);
        let mut buf = vec![C::new(0.0, 0.0); n];
        for (q, &j) in rows.iter().enumerate() {
            let prev = if j > 0 { Some(y.row_dense(j - 1)) } else { None };
            let cur = y.row_dense(j);
            let next = if j + 1 < n {
                Some(y.row_dense(j + 1))
            } else {
                None
            };
            self.row_of_f(prev.as_deref(), &cur, next.as_deref(), &mut buf);
            for k in 0..n {
                out[(q, k)] = buf[k];
            }
        }
        out
    }

    fn eval_cols(&self, y: &FactoredMatrix<C>, cols: &[usize]) -> Mat<C> {
        FieldStats::bump(&self.stats.col_queries, cols.len() as u64);
        let n = self.n;
        let ih = C::new(0.0, 0.5);
        let ia = C::new(0.0, self.alpha);
        let mut out = Mat::zeros(n, cols.len());
        for (q, &k) in cols.iter().enumerate() {
            let prev = if k > 0 { Some(y.col_dense(k - 1)) } else { None };
            let cur = y.col_dense(k);
            let next = if k + 1 < n {
                Some(y.col_dense(k + 1))
            } else {
                None
            };
            let dst = out.col_mut(q);
            for j in 0..n {
                let mut lin = C::new(0.0, 0.0);
                if j > 0 {
                    lin += cur[j - 1];
                }
                if j + 1 < n {
                    lin += cur[j + 1];
                }
                if let Some(p) = &prev {
                    lin += p[j];
                }
                if let Some(p) = &next {
                    lin += p[j];
                }
                let c = cur[j];
                dst[j] = ih * lin + ia * (c * c.norm_sqr());
            }
        }
        out
    }

    fn stats(&self) -> &FieldStats {
        &self.stats
    }
}

fn apply_op_cols(op: &crate::kernels::PeriodicTridiag, m: &Mat<C>) -> Mat<C> {
    use crate::kernels::SymOp;
    let mut out = Mat::zeros(m.nrows(), m.ncols());
    let mut re = vec![0.0; m.nrows()];
    let mut im = vec![0.0; m.nrows()];
    let mut ore = vec![0.0; m.nrows()];
    let mut oim = vec![0.0; m.nrows()];
    for j in 0..m.ncols() {
        for (i, x) in m.col(j).iter().enumerate() {
            re[i] = x.re;
            im[i] = x.im;
        }
        op.apply(&re, &mut ore);
        op.apply(&im, &mut oim);
        for (i, x) in out.col_mut(j).iter_mut().enumerate() {
            *x = C::new(ore[i], oim[i]);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mat::{random_normal, random_orthonormal};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn factored_state(n: usize, r: usize, seed: u64) -> FactoredMatrix<C> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        FactoredMatrix::new(
            random_orthonormal::<C, _>(n, r, &mut rng),
            random_normal::<C, _>(r, r, &mut rng),
            random_orthonormal::<C, _>(n, r, &mut rng),
        )
    }

    #[test]
    fn real_symmetric_state_gives_imaginary_field() {
        let n = 16;
        let p = Nls2d::new(n, 0.1);
        let mut rng = ChaCha8Rng::seed_from_u64(401);
        let g = random_normal::<f64, _>(n, n, &mut rng);
        let sym = g.add(&g.transpose()).scaled(0.5).cast::<C>();
        let f = p.eval_dense(&sym);
        for j in 0..n {
            for i in 0..n {
                assert!(f[(i, j)].re.abs() < 1e-13, "field should be i * (real)");
                assert!((f[(i, j)] - f[(j, i)]).norm() < 1e-13, "symmetry preserved");
            }
        }
    }

    #[test]
    fn sampled_rows_and_cols_agree_with_dense() {
        let n = 64;
        let p = Nls2d::new(n, 0.1);
        let y = factored_state(n, 4, 402);
        let dense = p.eval_dense(&y.dense());
        let rows = p.eval_rows(&y, &[0, 7, 31, 63]);
        for (q, &j) in [0usize, 7, 31, 63].iter().enumerate() {
            for k in 0..n {
                assert!((rows[(q, k)] - dense[(j, k)]).norm() < 1e-13);
            }
        }
        let cols = p.eval_cols(&y, &[0, 9, 40, 63]);
        for (q, &k) in [0usize, 9, 40, 63].iter().enumerate() {
            for j in 0..n {
                assert!((cols[(j, q)] - dense[(j, k)]).norm() < 1e-13);
            }
        }
    }

    #[test]
    fn factored_evaluation_matches_dense() {
        let n = 24;
        let p = Nls2d::new(n, 0.3);
        let y = factored_state(n, 3, 403);
        let sum = p.eval_factored(&y, 64).unwrap();
        let dense = p.eval_dense(&y.dense());
        assert!(sum.dense().sub(&dense).norm_fro() < 1e-12 * dense.norm_fro());
    }

    #[test]
    fn initial_state_is_rank_two_and_finite() {
        let p = Nls2d::new(64, 0.1);
        let a0 = p.initial();
        let s = crate::la::jacobi_svd(&a0);
        assert!(s.sigma[2] < 1e-10 * s.sigma[0], "two Gaussian bumps have rank 2");
    }
}
