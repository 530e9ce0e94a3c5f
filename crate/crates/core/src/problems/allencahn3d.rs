//! Allen-Cahn equation on [0, 2pi]^3 with periodic boundary conditions:
//!   df/dt = kappa * Laplace(f) + f - f^3,
//! second-order central differences in every coordinate (wrap-around).

use super::{FieldStats, TensorField};
use crate::mat::Mat;
use crate::tucker::{Tensor3, TuckerSum, TuckerTensor};

pub struct AllenCahn3d {
    pub n: usize,
    pub kappa: f64,
    stats: FieldStats,
}

impl AllenCahn3d {
    pub fn new(n: usize, kappa: f64) -> Self {
        assert!(n >= 8);
        AllenCahn3d {
            n,
            kappa,
            stats: FieldStats::default(),
        }
    }

    fn scale(&self) -> f64 {
        let dx = 2.0 * std::f64::consts::PI / self.n as f64;
        self.kappa / (dx * dx)
    }

    /// Dense integration runs from t = 0 to here before handing off.
    pub fn warmup_time(&self) -> f64 {
        1.0
    }

    pub fn grid(&self) -> Vec<f64> {
        (0..self.n)
            .map(|i| 2.0 * std::f64::consts::PI * i as f64 / self.n as f64)
            .collect()
    }

    pub fn initial(&self) -> Tensor3<f64> {
        let x = self.grid();
        let g = |x1: f64, x2: f64, x3: f64| -> f64 {
            let num = ((-x1.tan().powi(2)).exp()
                + (-x2.tan().powi(2)).exp()
                + (-x3.tan().powi(2)).exp())
                * (x1 + x2 + x3).sin();
            let den = 1.0
                + csc_abs_exp(-x1 / 2.0)
                + csc_abs_exp(-x2 / 2.0)
                + csc_abs_exp(-x3 / 2.0);
            num / den
        };
        let t = Tensor3::from_fn((self.n, self.n, self.n), |i, j, k| {
            let (a, b, c) = (x[i], x[j], x[k]);
            g(a, b, c) - g(2.0 * a, b, c) + g(a, 2.0 * b, c) - g(a, b, 2.0 * c)
        });
        assert!(t.all_finite(), "initial state must be finite");
        t
    }
}

fn csc_abs_exp(x: f64) -> f64 {
    let s = x.sin();
    let csc = if s.abs() < 1e-300 { 1.0 / 1e-300 } else { 1.0 / s };
    csc.abs().exp()
}

impl TensorField<f64> for AllenCahn3d {
    fn dims(&self) -> (usize, usize, usize) {
        (self.n, self.n, self.n)
    }

    fn eval_dense(&self, a: &Tensor3<f64>) -> Tensor3<f64> {
        let n = self.n;
        FieldStats::bump(&self.stats.dense_evals, (n * n * n) as u64);
        let s = self.scale();
        let mut out = Tensor3::zeros((n, n, n));
        let wrap = |i: usize, d: i64| -> usize { ((i as i64 + d).rem_euclid(n as i64)) as usize };
        for k in 0..n {
            for j in 0..n {
                for i in 0..n {
                    let c = a.at(i, j, k);
                    let lap = a.at(wrap(i, -1), j, k)
                        + a.at(wrap(i, 1), j, k)
                        + a.at(i, wrap(j, -1), k)
                        + a.at(i, wrap(j, 1), k)
                        + a.at(i, j, wrap(k, -1))
                        + a.at(i, j, wrap(k, 1))
                        - 6.0 * c;
                    *out.at_mut(i, j, k) = s * lap + c - c * c * c;
                }
            }
        }
        out
    }

    fn eval_fibers(&self, y: &TuckerTensor<f64>, mode: usize, fibers: &[(usize, usize)]) -> Mat<f64> {
        let n = self.n;
        FieldStats::bump(&self.stats.fiber_queries, (fibers.len() * n) as u64);
        let s = self.scale();
        let wrap = |i: i64| -> usize { i.rem_euclid(n as i64) as usize };
        let mut out = Mat::zeros(n, fibers.len());
        for (c, &(a, b)) in fibers.iter().enumerate() {
            let own = y.fiber(mode, a, b);
            let mut lap = vec![0.0; n];
            for (da, db) in [(-1i64, 0i64), (1, 0), (0, -1), (0, 1)] {
                let f = y.fiber(mode, wrap(a as i64 + da), wrap(b as i64 + db));
                for i in 0..n {
                    lap[i] += f[i];
                }
            }
            for i in 0..n {
                lap[i] += own[wrap(i as i64 - 1)] + own[wrap(i as i64 + 1)] - 6.0 * own[i];
            }
            for i in 0..n {
                let v = own[i];
                out[(i, c)] = s * lap[i] + v - v * v * v;
            }
        }
        out
    }

    fn eval_block(
        &self,
        y: &TuckerTensor<f64>,
        i1: &[usize],
        i2: &[usize],
        i3: &[usize],
    ) -> Tensor3<f64> {
        let n = self.n;
        FieldStats::bump(
            &self.stats.entry_evals,
            (i1.len() * i2.len() * i3.len()) as u64,
        );
        let s = self.scale();
        let shifted = |u: &Mat<f64>, idx: &[usize], d: i64| -> Mat<f64> {
            Mat::from_fn(idx.len(), u.ncols(), |q, c| {
                let i = (idx[q] as i64 + d).rem_euclid(n as i64) as usize;
                u[(i, c)]
            })
        };
        let sub = |s1: i64, s2: i64, s3: i64| -> Tensor3<f64> {
            y.core
                .mode_product(0, &shifted(&y.factors[0], i1, s1))
                .mode_product(1, &shifted(&y.factors[1], i2, s2))
                .mode_product(2, &shifted(&y.factors[2], i3, s3))
        };
        let own = sub(0, 0, 0);
        let mut lap = own.scaled(-6.0);
        for (s1, s2, s3) in [
            (-1i64, 0i64, 0i64),
            (1, 0, 0),
            (0, -1, 0),
            (0, 1, 0),
            (0, 0, -1),
            (0, 0, 1),
        ] {
            lap = lap.add(&sub(s1, s2, s3));
        }
        let mut out = Tensor3::zeros(own.dims());
        for idx in 0..out.len() {
            let c = own.data()[idx];
            out.data_mut()[idx] = s * lap.data()[idx] + c - c * c * c;
        }
        out
    }

    fn eval_tucker(&self, y: &TuckerTensor<f64>) -> Option<TuckerSum<f64>> {
        let r = y.mode_ranks().0;
        if r > 5 {
            return None;
        }
        let n = self.n;
        FieldStats::bump(&self.stats.dense_evals, (n * (4 * r + r * r * r)) as u64);
        let s = self.scale();
        let lap1d = |u: &Mat<f64>| -> Mat<f64> {
            Mat::from_fn(u.nrows(), u.ncols(), |i, c| {
                let im = if i == 0 { n - 1 } else { i - 1 };
                let ip = if i + 1 == n { 0 } else { i + 1 };
                s * (u[(im, c)] + u[(ip, c)] - 2.0 * u[(i, c)])
            })
        };
        let mut sum = TuckerSum::new((n, n, n));
        for mode in 0..3 {
            let mut f = [
                y.factors[0].clone(),
                y.factors[1].clone(),
                y.factors[2].clone(),
            ];
            f[mode] = lap1d(&f[mode]);
            sum.push_scaled(&TuckerTensor::new(y.core.clone(), f), 1.0);
        }
        // + f
        sum.push_scaled(y, 1.0);
        // - f^3
        let f0 = y.factors[0].row_kron(&y.factors[0]).row_kron(&y.factors[0]);
        let f1 = y.factors[1].row_kron(&y.factors[1]).row_kron(&y.factors[1]);
        let f2 = y.factors[2].row_kron(&y.factors[2]).row_kron(&y.factors[2]);
        let r3 = r * r * r;
        let unpack = |x: usize| -> (usize, usize, usize) { (x / (r * r), (x / r) % r, x % r) };
        let cube = Tensor3::from_fn((r3, r3, r3), |x, yy, z| {
            let (a1, b1, c1) = unpack(x);
            let (a2, b2, c2) = unpack(yy);
            let (a3, b3, c3) = unpack(z);
            y.core.at(a1, a2, a3) * y.core.at(b1, b2, b3) * y.core.at(c1, c2, c3)
        });
        sum.push_scaled(&TuckerTensor::new(cube, [f0, f1, f2]), -1.0);
        Some(sum)
    }

    fn stats(&self) -> &FieldStats {
        &self.stats
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mat::random_orthonormal;
    use crate::scalar::Scalar;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_state(n: usize, r: usize, seed: u64) -> TuckerTensor<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut core = Tensor3::zeros((r, r, r));
        for x in core.data_mut().iter_mut() {
            *x = f64::standard_normal(&mut rng);
        }
        TuckerTensor::new(
            core,
            [
                random_orthonormal::<f64, _>(n, r, &mut rng),
                random_orthonormal::<f64, _>(n, r, &mut rng),
                random_orthonormal::<f64, _>(n, r, &mut rng),
            ],
        )
    }

    #[test]
    fn constant_one_is_an_equilibrium() {
        let p = AllenCahn3d::new(10, 0.1);
        let ones = Tensor3::from_fn((10, 10, 10), |_, _, _| 1.0);
        assert!(p.eval_dense(&ones).norm_fro() < 1e-12);
    }

    #[test]
    fn fiber_oracle_agrees_with_dense() {
        let n = 16;
        let p = AllenCahn3d::new(n, 0.1);
        let y = random_state(n, 3, 511);
        let dense = p.eval_dense(&y.dense());
        for mode in 0..3 {
            let pairs = [(0usize, 15usize), (3, 8), (15, 0)];
            let f = p.eval_fibers(&y, mode, &pairs);
            for (c, &(a, b)) in pairs.iter().enumerate() {
                for i in 0..n {
                    let want = match mode {
                        0 => dense.at(i, a, b),
                        1 => dense.at(a, i, b),
                        _ => dense.at(a, b, i),
                    };
                    assert!((f[(i, c)] - want).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn block_and_structured_oracles_agree_with_dense() {
        let n = 12;
        let p = AllenCahn3d::new(n, 0.05);
        let y = random_state(n, 3, 512);
        let dense = p.eval_dense(&y.dense());
        let (i1, i2, i3) = (vec![0usize, 11], vec![1usize, 6], vec![3usize, 11]);
        let block = p.eval_block(&y, &i1, &i2, &i3);
        for (a, &ia) in i1.iter().enumerate() {
            for (b, &jb) in i2.iter().enumerate() {
                for (c, &kc) in i3.iter().enumerate() {
                    assert!((block.at(a, b, c) - dense.at(ia, jb, kc)).abs() < 1e-11);
                }
            }
        }
        let sum = p.eval_tucker(&y).unwrap();
        assert!(sum.dense().sub(&dense).norm_fro() < 1e-10 * dense.norm_fro());
    }

    #[test]
    fn initial_state_is_finite() {
        let p = AllenCahn3d::new(24, 0.1);
        let t = p.initial();
        assert!(t.all_finite());
        assert!(t.norm_fro() > 0.0);
    }
}
