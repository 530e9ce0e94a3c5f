//! Allen-Cahn equation on [0, 2pi]^2 with periodic boundary conditions:
//!   dA/dt = D A + A D + A - A .* A .* A,
//! where D is the kappa-scaled second-difference operator with wrap-around
//! corner entries (periodicity requires them). Real-valued and stiff; the
//! linear part is treated exactly by the exponential integrators, so the
//! reaction G(A) = A - A^3 is exposed as its own sampled field.

use std::sync::Arc;

use super::{FieldStats, MatrixField};
use crate::kernels::{FactoredMatrix, OuterProductSum, PeriodicTridiag, SymOp};
use crate::mat::Mat;

pub struct AllenCahn2d {
    pub n: usize,
    pub kappa: f64,
    pub operator: Arc<PeriodicTridiag>,
    stats: FieldStats,
}

impl AllenCahn2d {
    pub fn new(n: usize, kappa: f64) -> Self {
        assert!(n >= 8);
        AllenCahn2d {
            n,
            kappa,
            operator: Arc::new(PeriodicTridiag::laplacian_periodic(n, kappa)),
            stats: FieldStats::default(),
        }
    }

    /// Grid registration x_i = 2 pi i / n, i = 0..n-1 (left-closed).
    pub fn grid(&self) -> Vec<f64> {
        (0..self.n)
            .map(|i| 2.0 * std::f64::consts::PI * i as f64 / self.n as f64)
            .collect()
    }

    pub fn initial(&self) -> Mat<f64> {
        let x = self.grid();
        let a = Mat::from_fn(self.n, self.n, |i, j| {
            let (xi, yj) = (x[i], x[j]);
            let num = ((-xi.tan().powi(2)).exp() + (-yj.tan().powi(2)).exp()) * xi.sin() * yj.sin();
            let den = 1.0 + csc_guarded(-xi / 2.0).abs().exp() + csc_guarded(-yj / 2.0).abs().exp();
            num / den
        });
        assert!(a.all_finite(), "initial state must be finite");
        a
    }

    /// The reaction part G(A) = A - A^3 with its own sampling oracles.
    pub fn reaction(&self) -> AllenCahnReaction2d {
        AllenCahnReaction2d {
            n: self.n,
            stats: FieldStats::default(),
        }
    }

    fn stencil(&self) -> (f64, f64) {
        let dx = 2.0 * std::f64::consts::PI / self.n as f64;
        let s = self.kappa / (dx * dx);
        (-2.0 * s, s)
    }
}

fn csc_guarded(x: f64) -> f64 {
    let s = x.sin();
    if s.abs() < 1e-300 {
        // the grid avoids exact poles; this clamp only normalizes the sign
        // of the following overflow to +inf
        1.0 / 1e-300
    } else {
        1.0 / s
    }
}

impl MatrixField<f64> for AllenCahn2d {
    fn shape(&self) -> (usize, usize) {
        (self.n, self.n)
    }

    fn eval_dense(&self, a: &Mat<f64>) -> Mat<f64> {
        let mut out = Mat::zeros(self.n, self.n);
        self.eval_dense_into(a, &mut out);
        out
    }

    fn eval_dense_into(&self, a: &Mat<f64>, out: &mut Mat<f64>) {
        let n = self.n;
        FieldStats::bump(&self.stats.dense_evals, (n * n) as u64);
        let (d0, d1) = self.stencil();
        for k in 0..n {
            let km = if k == 0 { n - 1 } else { k - 1 };
            let kp = if k + 1 == n { 0 } else { k + 1 };
            let lo = a.col(km).to_vec();
            let hi = a.col(kp).to_vec();
            let cur = a.col(k).to_vec();
            let dst = out.col_mut(k);
            for j in 0..n {
                let jm = if j == 0 { n - 1 } else { j - 1 };
                let jp = if j + 1 == n { 0 } else { j + 1 };
                let da = d0 * cur[j] + d1 * (cur[jm] + cur[jp]);
                let ad = d0 * cur[j] + d1 * (lo[j] + hi[j]);
                let c = cur[j];
                dst[j] = da + ad + c - c * c * c;
            }
        }
    }

    fn eval_factored(&self, y: &FactoredMatrix<f64>, cap: usize) -> Option<OuterProductSum<f64>> {
        let n = self.n;
        let r = y.rank();
        FieldStats::bump(&self.stats.dense_evals, (n * (3 * r + r * r * r)) as u64);
        let mut sum = OuterProductSum::new(n, n, cap);
        let us = y.u.mul(&y.s);
        let du = apply_cols(self.operator.as_ref(), &us);
        let dv = apply_cols(self.operator.as_ref(), &y.v);
        sum.push(du, y.v.clone()).ok()?; // D A
        sum.push(us.clone(), dv).ok()?; // A D
        sum.push(us.clone(), y.v.clone()).ok()?; // + A
        let l3 = us.row_kron(&us).row_kron(&us).scaled(-1.0);
        let r3 = y.v.row_kron(&y.v).row_kron(&y.v);
        sum.push(l3, r3).ok()?; // - A^3
        Some(sum)
    }

    fn eval_rows(&self, y: &FactoredMatrix<f64>, rows: &[usize]) -> Mat<f64> {
        FieldStats::bump(&self.stats.row_queries, rows.len() as u64);
        let n = self.n;
        let (d0, d1) = self.stencil();
        let mut out = Mat::zeros(rows.len(), n);
        for (q, &j) in rows.iter().enumerate() {
            let jm = if j == 0 { n - 1 } else { j - 1 };
            let jp = if j + 1 == n { 0 } else { j + 1 };
            let prev = y.row_dense(jm);
            let cur = y.row_dense(j);
            let next = y.row_dense(jp);
            for k in 0..n {
                let km = if k == 0 { n - 1 } else { k - 1 };
                let kp = if k + 1 == n { 0 } else { k + 1 };
                let da = d0 * cur[k] + d1 * (prev[k] + next[k]);
                let ad = d0 * cur[k] + d1 * (cur[km] + cur[kp]);
                let c = cur[k];
                out[(q, k)] = da + ad + c - c * c * c;
            }
        }
        out
    }

    fn eval_cols(&self, y: &FactoredMatrix<f64>, cols: &[usize]) -> Mat<f64> {
        FieldStats::bump(&self.stats.col_queries, cols.len() as u64);
        let n = self.n;
        let (d0, d1) = self.stencil();
        let mut out = Mat::zeros(n, cols.len());
        for (q, &k) in cols.iter().enumerate() {
            let km = if k == 0 { n - 1 } else { k - 1 };
            let kp = if k + 1 == n { 0 } else { k + 1 };
            let prev = y.col_dense(km);
            let cur = y.col_dense(k);
            let next = y.col_dense(kp);
            let dst = out.col_mut(q);
            for j in 0..n {
                let jm = if j == 0 { n - 1 } else { j - 1 };
                let jp = if j + 1 == n { 0 } else { j + 1 };
                let da = d0 * cur[j] + d1 * (cur[jm] + cur[jp]);
                let ad = d0 * cur[j] + d1 * (prev[j] + next[j]);
                let c = cur[j];
                dst[j] = da + ad + c - c * c * c;
            }
        }
        out
    }

    fn stats(&self) -> &FieldStats {
        &self.stats
    }
}

/// G(A) = A - A .* A .* A, the non-stiff reaction part.
pub struct AllenCahnReaction2d {
    n: usize,
    stats: FieldStats,
}

impl MatrixField<f64> for AllenCahnReaction2d {
    fn shape(&self) -> (usize, usize) {
        (self.n, self.n)
    }

    fn eval_dense(&self, a: &Mat<f64>) -> Mat<f64> {
        FieldStats::bump(&self.stats.dense_evals, (self.n * self.n) as u64);
        a.map(|c| c - c * c * c)
    }

    fn eval_factored(&self, y: &FactoredMatrix<f64>, cap: usize) -> Option<OuterProductSum<f64>> {
        let r = y.rank();
        FieldStats::bump(
            &self.stats.dense_evals,
            (self.n * (r + r * r * r)) as u64,
        );
        let mut sum = OuterProductSum::new(self.n, self.n, cap);
        let us = y.u.mul(&y.s);
        sum.push(us.clone(), y.v.clone()).ok()?;
        let l3 = us.row_kron(&us).row_kron(&us).scaled(-1.0);
        let r3 = y.v.row_kron(&y.v).row_kron(&y.v);
        sum.push(l3, r3).ok()?;
        Some(sum)
    }

    fn eval_rows(&self, y: &FactoredMatrix<f64>, rows: &[usize]) -> Mat<f64> {
        FieldStats::bump(&self.stats.row_queries, rows.len() as u64);
        let mut out = Mat::zeros(rows.len(), self.n);
        for (q, &j) in rows.iter().enumerate() {
            let cur = y.row_dense(j);
            for (k, &c) in cur.iter().enumerate() {
                out[(q, k)] = c - c * c * c;
            }
        }
        out
    }

    fn eval_cols(&self, y: &FactoredMatrix<f64>, cols: &[usize]) -> Mat<f64> {
        FieldStats::bump(&self.stats.col_queries, cols.len() as u64);
        let mut out = Mat::zeros(self.n, cols.len());
        for (q, &k) in cols.iter().enumerate() {
            let cur = y.col_dense(k);
            for (j, &c) in cur.iter().enumerate() {
                out[(j, q)] = c - c * c * c;
            }
        }
        out
    }

    fn stats(&self) -> &FieldStats {
        &self.stats
    }
}

fn apply_cols(op: &dyn SymOp, m: &Mat<f64>) -> Mat<f64> {
    let mut out = Mat::zeros(m.nrows(), m.ncols());
    let mut buf = vec![0.0; m.nrows()];
    for j in 0..m.ncols() {
        op.apply(m.col(j), &mut buf);
        out.col_mut(j).copy_from_slice(&buf);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mat::{random_normal, random_orthonormal};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn constant_one_is_an_equilibrium() {
        let p = AllenCahn2d::new(16, 0.01);
        let ones = Mat::from_fn(16, 16, |_, _| 1.0);
        let f = p.eval_dense(&ones);
        assert!(f.norm_fro() < 1e-12, "periodic row sums vanish and G(1) = 0");
    }

    #[test]
    fn sampled_column_agrees_with_dense() {
        let n = 64;
        let p = AllenCahn2d::new(n, 0.01);
        let mut rng = ChaCha8Rng::seed_from_u64(411);
        let y = FactoredMatrix::new(
            random_orthonormal::<f64, _>(n, 6, &mut rng),
            random_normal::<f64, _>(6, 6, &mut rng),
            random_orthonormal::<f64, _>(n, 6, &mut rng),
        );
        let dense = p.eval_dense(&y.dense());
        let cols = p.eval_cols(&y, &[0, 5, 63]);
        for (q, &k) in [0usize, 5, 63].iter().enumerate() {
            for j in 0..n {
                assert!((cols[(j, q)] - dense[(j, k)]).abs() < 1e-13);
            }
        }
        let rows = p.eval_rows(&y, &[0, 13, 63]);
        for (q, &j) in [0usize, 13, 63].iter().enumerate() {
            for k in 0..n {
                assert!((rows[(q, k)] - dense[(j, k)]).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn factored_and_reaction_evaluations_match_dense() {
        let n = 20;
        let p = AllenCahn2d::new(n, 0.05);
        let mut rng = ChaCha8Rng::seed_from_u64(412);
        let y = FactoredMatrix::new(
            random_orthonormal::<f64, _>(n, 3, &mut rng),
            random_normal::<f64, _>(3, 3, &mut rng),
            random_orthonormal::<f64, _>(n, 3, &mut rng),
        );
        let sum = p.eval_factored(&y, 64).unwrap();
        let dense = p.eval_dense(&y.dense());
        assert!(sum.dense().sub(&dense).norm_fro() < 1e-11 * dense.norm_fro());
        let g = p.reaction();
        let gd = g.eval_dense(&y.dense());
        let gs = g.eval_factored(&y, 64).unwrap();
        assert!(gs.dense().sub(&gd).norm_fro() < 1e-11 * (1.0 + gd.norm_fro()));
        // split consistency: F = L + G
        let mut l = Mat::zeros(n, n);
        let dm = p.operator.dense();
        let yd = y.dense();
        l = l.add(&dm.mul(&yd)).add(&yd.mul(&dm));
        assert!(l.add(&gd).sub(&dense).norm_fro() < 1e-11 * dense.norm_fro());
    }

    #[test]
    fn initial_state_is_finite() {
        for n in [64usize, 65, 256] {
            let p = AllenCahn2d::new(n, 0.01);
            let a0 = p.initial();
            assert!(a0.all_finite());
            assert!(a0.norm_fro() > 0.0);
        }
    }
}
