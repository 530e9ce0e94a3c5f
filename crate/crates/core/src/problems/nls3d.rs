//! Discrete nonlinear Schrödinger equation on an n^3 lattice:
//!   i dA/dt = -1/2 L[A] + alpha * A .* conj(A) .* A,
//! where L sums the six lattice neighbors (zero beyond the boundary; the
//! lattice indexes j +- 1 without wrap).

use num_complex::Complex64;

use super::{FieldStats, TensorField};
use crate::mat::Mat;
use crate::scalar::Scalar;
use crate::tucker::{Tensor3, TuckerSum, TuckerTensor};

type C = Complex64;

pub struct Nls3d {
    pub n: usize,
    pub alpha: f64,
    pub gamma: f64,
    stats: FieldStats,
}

impl Nls3d {
    pub fn new(n: usize, alpha: f64, gamma: f64) -> Self {
        assert!(n >= 8);
        Nls3d {
            n,
            alpha,
            gamma,
            stats: FieldStats::default(),
        }
    }

    /// Two Gaussian bumps centered at (0.75n, 0.25n, 0.01n) and
    /// (0.25n, 0.75n, n) on the 1-based lattice; multilinear rank 2.
    pub fn initial(&self) -> Tensor3<C> {
        let nf = self.n as f64;
        let g2 = self.gamma * self.gamma;
        let c1 = (0.75 * nf, 0.25 * nf, 0.01 * nf);
        let c2 = (0.25 * nf, 0.75 * nf, nf);
        let t = Tensor3::from_fn((self.n, self.n, self.n), |i, j, k| {
            let (x, y, z) = ((i + 1) as f64, (j + 1) as f64, (k + 1) as f64);
            let b1 =
                (-((x - c1.0).powi(2) + (y - c1.1).powi(2) + (z - c1.2).powi(2)) / g2).exp();
            let b2 =
                (-((x - c2.0).powi(2) + (y - c2.1).powi(2) + (z - c2.2).powi(2)) / g2).exp();
            C::new(b1 + b2, 0.0)
        });
        assert!(t.all_finite(), "initial state must be finite");
        t
    }

    pub fn warmup_time(&self) -> f64 {
        0.01
    }

    #[inline]
    fn combine(&self, lin: C, own: C) -> C {
        // F = i (L/2 - alpha |a|^2 a)
        let x = lin.scale(0.5) - own.scale(self.alpha * own.norm_sqr());
        C::new(-x.im, x.re)
    }
}

/// Rows of a factor shifted by -1/0/+1 with zero rows beyond the range.
fn factor_rows_shifted<S: Scalar>(u: &Mat<S>, idx: &[usize], shift: i64, n: usize) -> Mat<S> {
    Mat::from_fn(idx.len(), u.ncols(), |q, c| {
        let i = idx[q] as i64 + shift;
        if i < 0 || i >= n as i64 {
            S::zero()
        } else {
            u[(i as usize, c)]
        }
    })
}

impl TensorField<C> for Nls3d {
    fn dims(&self) -> (usize, usize, usize) {
        (self.n, self.n, self.n)
    }

    fn eval_dense(&self, a: &Tensor3<C>) -> Tensor3<C> {
        let n = self.n;
        FieldStats::bump(&self.stats.dense_evals, (n * n * n) as u64);
        let mut out = Tensor3::zeros((n, n, n));
        for k in 0..n {
            for j in 0..n {
                for i in 0..n {
                    let mut lin = C::new(0.0, 0.0);
                    if i > 0 {
                        lin += a.at(i - 1, j, k);
                    }
                    if i + 1 < n {
                        lin += a.at(i + 1, j, k);
                    }
                    if j > 0 {
                        lin += a.at(i, j - 1, k);
                    }
                    if j + 1 < n {
                        lin += a.at(i, j + 1, k);
                    }
                    if k > 0 {
                        lin += a.at(i, j, k - 1);
                    }
                    if k + 1 < n {
                        lin += a.at(i, j, k + 1);
                    }
                    *out.at_mut(i, j, k) = self.combine(lin, a.at(i, j, k));
                }
            }
        }
        out
    }

    fn eval_fibers(&self, y: &TuckerTensor<C>, mode: usize, fibers: &[(usize, usize)]) -> Mat<C> {
        let n = self.n;
        FieldStats::bump(&self.stats.fiber_queries, (fibers.len() * n) as u64);
        let mut out = Mat::zeros(n, fibers.len());
        for (c, &(a, b)) in fibers.iter().enumerate() {
            let own = y.fiber(mode, a, b);
            // neighbors across the two other modes (zero outside)
            let mut lin = vec![C::new(0.0, 0.0); n];
            for (da, db) in [(-1i64, 0i64), (1, 0), (0, -1), (0, 1)] {
                let aa = a as i64 + da;
                let bb = b as i64 + db;
                if aa < 0 || aa >= n as i64 || bb < 0 || bb >= n as i64 {
                    continue;
                }
                let f = y.fiber(mode, aa as usize, bb as usize);
                for i in 0..n {
                    lin[i] += f[i];
                }
            }
            // neighbors along the fiber itself
            for i in 0..n {
                if i > 0 {
                    lin[i] += own[i - 1];
                }
                if i + 1 < n {
                    lin[i] += own[i + 1];
                }
            }
            for i in 0..n {
                out[(i, c)] = self.combine(lin[i], own[i]);
            }
        }
        out
    }

    fn eval_block(
        &self,
        y: &TuckerTensor<C>,
        i1: &[usize],
        i2: &[usize],
        i3: &[usize],
    ) -> Tensor3<C> {
        let n = self.n;
        FieldStats::bump(
            &self.stats.entry_evals,
            (i1.len() * i2.len() * i3.len()) as u64,
        );
        let sub = |s1: i64, s2: i64, s3: i64| -> Tensor3<C> {
            let u0 = factor_rows_shifted(&y.factors[0], i1, s1, n);
            let u1 = factor_rows_shifted(&y.factors[1], i2, s2, n);
            let u2 = factor_rows_shifted(&y.factors[2], i3, s3, n);
            y.core
                .mode_product(0, &u0)
                .mode_product(1, &u1)
                .mode_product(2, &u2)
        };
        let own = sub(0, 0, 0);
        let mut lin = Tensor3::zeros(own.dims());
        for (s1, s2, s3) in [
            (-1i64, 0i64, 0i64),
            (1, 0, 0),
            (0, -1, 0),
            (0, 1, 0),
            (0, 0, -1),
            (0, 0, 1),
        ] {
            lin = lin.add(&sub(s1, s2, s3));
        }
        let mut out = Tensor3::zeros(own.dims());
        for idx in 0..out.len() {
            out.data_mut()[idx] = self.combine(lin.data()[idx], own.data()[idx]);
        }
        out
    }

    fn eval_tucker(&self, y: &TuckerTensor<C>) -> Option<TuckerSum<C>> {
        let r = y.mode_ranks().0;
        if r > 5 {
            return None; // the r^9 cubic core would be impractical
        }
        let n = self.n;
        FieldStats::bump(
            &self.stats.dense_evals,
            (n * (3 * r + r * r * r)) as u64,
        );
        let ii = C::new(0.0, 1.0);
        let mut sum = TuckerSum::new((n, n, n));
        // i/2 * L: one term per mode with the hopping stencil on the factor
        let hop = |u: &Mat<C>| -> Mat<C> {
            Mat::from_fn(u.nrows(), u.ncols(), |i, c| {
                let mut v = C::new(0.0, 0.0);
                if i > 0 {
                    v += u[(i - 1, c)];
                }
                if i + 1 < u.nrows() {
                    v += u[(i + 1, c)];
                }
                v
            })
        };
        for mode in 0..3 {
            let mut f = [
                y.factors[0].clone(),
                y.factors[1].clone(),
                y.factors[2].clone(),
            ];
            f[mode] = hop(&f[mode]);
            sum.push_scaled(
                &TuckerTensor::new(y.core.clone(), f).with_core_scaled_s(ii.scale(0.5)),
                1.0,
            );
        }
        // -i alpha * cubic with Kronecker-cubed core and row-kron factors
        let f0 = y.factors[0].row_kron(&y.factors[0].conj()).row_kron(&y.factors[0]);
        let f1 = y.factors[1].row_kron(&y.factors[1].conj()).row_kron(&y.factors[1]);
        let f2 = y.factors[2].row_kron(&y.factors[2].conj()).row_kron(&y.factors[2]);
        let r3 = r * r * r;
        let unpack = |x: usize| -> (usize, usize, usize) { (x / (r * r), (x / r) % r, x % r) };
        let cube = Tensor3::from_fn((r3, r3, r3), |x, yy, z| {
            let (a1, b1, c1) = unpack(x);
            let (a2, b2, c2) = unpack(yy);
            let (a3, b3, c3) = unpack(z);
            y.core.at(a1, a2, a3) * y.core.at(b1, b2, b3).conj() * y.core.at(c1, c2, c3)
        });
        sum.push_scaled(
            &TuckerTensor::new(cube, [f0, f1, f2]).with_core_scaled_s(ii.scale(-self.alpha)),
            1.0,
        );
        Some(sum)
    }

    fn stats(&self) -> &FieldStats {
        &self.stats
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mat::{random_normal, random_orthonormal};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_state(n: usize, r: usize, seed: u64) -> TuckerTensor<C> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut core = Tensor3::zeros((r, r, r));
        for x in core.data_mut().iter_mut() {
            *x = C::standard_normal(&mut rng);
        }
        TuckerTensor::new(
            core,
            [
                random_orthonormal::<C, _>(n, r, &mut rng),
                random_orthonormal::<C, _>(n, r, &mut rng),
                random_orthonormal::<C, _>(n, r, &mut rng),
            ],
        )
    }

    #[test]
    fn zero_state_gives_zero_field() {
        let p = Nls3d::new(10, 0.1, 1.0);
        let z = Tensor3::<C>::zeros((10, 10, 10));
        assert!(p.eval_dense(&z).norm_fro() == 0.0);
    }

    #[test]
    fn sampled_fibers_agree_with_dense() {
        let n = 20;
        let p = Nls3d::new(n, 0.1, 2.0);
        let y = random_state(n, 3, 501);
        let dense = p.eval_dense(&y.dense());
        for mode in 0..3 {
            let pairs = [(0usize, 0usize), (5, 7), (19, 3), (2, 19)];
            let f = p.eval_fibers(&y, mode, &pairs);
            for (c, &(a, b)) in pairs.iter().enumerate() {
                for i in 0..n {
                    let want = match mode {
                        0 => dense.at(i, a, b),
                        1 => dense.at(a, i, b),
                        _ => dense.at(a, b, i),
                    };
                    assert!((f[(i, c)] - want).norm() < 1e-12, "mode {mode}");
                }
            }
        }
    }

    #[test]
    fn sampled_block_agrees_with_dense() {
        let n = 14;
        let p = Nls3d::new(n, 0.2, 2.0);
        let y = random_state(n, 3, 502);
        let dense = p.eval_dense(&y.dense());
        let (i1, i2, i3) = (
            vec![0usize, 6, 13],
            vec![2usize, 5, 13],
            vec![0usize, 9, 12],
        );
        let block = p.eval_block(&y, &i1, &i2, &i3);
        for (a, &ia) in i1.iter().enumerate() {
            for (b, &jb) in i2.iter().enumerate() {
                for (c, &kc) in i3.iter().enumerate() {
                    assert!(
                        (block.at(a, b, c) - dense.at(ia, jb, kc)).norm() < 1e-12,
                        "block entry"
                    );
                }
            }
        }
    }

    #[test]
    fn structured_evaluation_matches_dense() {
        let n = 12;
        let p = Nls3d::new(n, 0.3, 2.0);
        let y = random_state(n, 2, 503);
        let sum = p.eval_tucker(&y).unwrap();
        let dense = p.eval_dense(&y.dense());
        assert!(sum.dense().sub(&dense).norm_fro() < 1e-11 * dense.norm_fro());
        let _ = random_normal::<f64, _>(1, 1, &mut ChaCha8Rng::seed_from_u64(0));
    }

    #[test]
    fn initial_two_bumps_have_multilinear_rank_two() {
        let p = Nls3d::new(24, 0.1, 2.4);
        let a0 = p.initial();
        for mode in 0..3 {
            let sig = crate::la::jacobi_svd(&a0.unfold(mode)).sigma;
            assert!(sig[2] < 1e-8 * sig[0], "mode {mode} rank 2");
        }
    }
}
