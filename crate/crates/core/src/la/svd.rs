//! One-sided Jacobi SVD.
//!
//! Accurate for the small and moderately sized matrices this crate
//! factorizes (widths up to a few hundred), for real and complex scalars.

use crate::mat::Mat;
use crate::scalar::Scalar;

pub struct Svd<S> {
    /// m x p, orthonormal columns (p = min(m, n)).
    pub u: Mat<S>,
    /// Descending.
    pub sigma: Vec<f64>,
    /// n x p, orthonormal columns.
    pub v: Mat<S>,
}

impl<S: Scalar> Svd<S> {
    pub fn reconstruct(&self) -> Mat<S> {
        let p = self.sigma.len();
        let mut us = self.u.clone();
        for j in 0..p {
            for x in us.col_mut(j).iter_mut() {
                *x = x.scale(self.sigma[j]);
            }
        }
        us.mul_h(&self.v)
    }
}

const SWEEP_TOL: f64 = 1e-14;
const MAX_SWEEPS: usize = 42;

pub fn jacobi_svd<S: Scalar>(a: &Mat<S>) -> Svd<S> {
    let (m, n) = a.shape();
    if m < n {
        let s = jacobi_svd(&a.adjoint());
        return Svd {
            u: s.v,
            sigma: s.sigma,
            v: s.u,
        };
    }
    let mut g = a.clone();
    let mut v = Mat::<S>::identity(n);
    for _sweep in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let mut aa = 0.0;
                let mut bb = 0.0;
                let mut c = S::zero();
                {
                    let gp = g.col(p);
                    let gq = g.col(q);
                    for (x, y) in gp.iter().zip(gq.iter()) {
                        aa += x.abs_sq();
                        bb += y.abs_sq();
                        c += x.conj() * *y;
                    }
                }
                let ab = (aa * bb).sqrt();
                if ab == 0.0 || c.abs() <= SWEEP_TOL * ab {
                    continue;
                }
                rotated = true;
                let gmag = c.abs();
                let phase = c.scale(1.0 / gmag);
                let tau = (bb - aa) / (2.0 * gmag);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    1.0 / (tau - (1.0 + tau * tau).sqrt())
                };
                let cs = 1.0 / (1.0 + t * t).sqrt();
                let sn = t * cs;
                // column update [g_p, g_q] <- [g_p, g_q] * J,
                // J = [[cs, sn], [-sn*conj(phase), cs*conj(phase)]]
                let jpq = phase.conj().scale(sn);
                let jqq = phase.conj().scale(cs);
                rotate_cols(&mut g, p, q, cs, sn, jpq, jqq);
                rotate_cols(&mut v, p, q, cs, sn, jpq, jqq);
            }
        }
        if !rotated {
            break;
        }
    }
    // norms, sort descending (stable in the original column order)
    let mut order: Vec<usize> = (0..n).collect();
    let norms: Vec<f64> = (0..n)
        .map(|j| g.col(j).iter().map(|x| x.abs_sq()).sum::<f64>().sqrt())
        .collect();
    order.sort_by(|&i, &j| norms[j].partial_cmp(&norms[i]).unwrap().then(i.cmp(&j)));
    let mut u = Mat::zeros(m, n);
    let mut sigma = vec![0.0; n];
    let mut vv = Mat::zeros(n, n);
    for (jq, &js) in order.iter().enumerate() {
        sigma[jq] = norms[js];
        vv.set_col(jq, v.col(js));
        if norms[js] > 0.0 {
            let src = g.col(js).to_vec();
            let dst = u.col_mut(jq);
            for i in 0..m {
                dst[i] = src[i].scale(1.0 / norms[js]);
            }
        }
    }
    complete_zero_columns(&mut u, &sigma);
    Svd { u, sigma, v: vv }
}

fn rotate_cols<S: Scalar>(m: &mut Mat<S>, p: usize, q: usize, cs: f64, sn: f64, jpq: S, jqq: S) {
    let (cp, cq) = m.two_cols_mut(p, q);
    for (xp, xq) in cp.iter_mut().zip(cq.iter_mut()) {
        let a = *xp;
        let b = *xq;
        *xp = a.scale(cs) - b * jpq;
        *xq = a.scale(sn) + b * jqq;
    }
}

/// Replace columns with zero singular value by a deterministic orthonormal
/// completion (unit vectors, Gram-Schmidt against the rest).
fn complete_zero_columns<S: Scalar>(u: &mut Mat<S>, sigma: &[f64]) {
    let (m, n) = u.shape();
    let mut cand = 0usize;
    for j in 0..n {
        if sigma[j] > 0.0 {
            continue;
        }
        'search: while cand < m {
            let mut v = vec![S::zero(); m];
            v[cand] = S::one();
            cand += 1;
            for _pass in 0..2 {
                for k in 0..n {
                    if k == j || (sigma[k] == 0.0 && k > j) {
                        continue;
                    }
                    let mut dot = S::zero();
                    for i in 0..m {
                        dot += u[(i, k)].conj() * v[i];
                    }
                    for i in 0..m {
                        let t = v[i] - u[(i, k)] * dot;
                        v[i] = t;
                    }
                }
            }
            let norm = v.iter().map(|x| x.abs_sq()).sum::<f64>().sqrt();
            if norm > 0.5 {
                for x in v.iter_mut() {
                    *x = x.scale(1.0 / norm);
                }
                u.set_col(j, &v);
                break 'search;
            }
        }
    }
}

/// Deterministic phase normalization: the largest-magnitude entry of every
/// column of `u` is made real and positive, compensating in `v` so that
/// `U diag(sigma) V^H` is unchanged.
pub fn apply_sign_convention<S: Scalar>(u: &mut Mat<S>, v: &mut Mat<S>) {
    let p = u.ncols().min(v.ncols());
    for j in 0..p {
        let mut best = 0usize;
        let mut bestv = -1.0;
        for i in 0..u.nrows() {
            let a = u[(i, j)].abs();
            if a > bestv {
                bestv = a;
                best = i;
            }
        }
        if bestv <= 0.0 {
            continue;
        }
        let w = u[(best, j)].conj().scale(1.0 / bestv);
        for i in 0..u.nrows() {
            let t = u[(i, j)] * w;
            u[(i, j)] = t;
        }
        for i in 0..v.nrows() {
            let t = v[(i, j)] * w;
            v[(i, j)] = t;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mat::random_normal;
    use num_complex::Complex64;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn check_svd<S: Scalar>(a: &Mat<S>, tol: f64) {
        let s = jacobi_svd(a);
        assert!(s.u.orthonormality_defect() < tol, "U orthonormal");
        assert!(s.v.orthonormality_defect() < tol, "V orthonormal");
        assert!(
            s.reconstruct().sub(a).norm_fro() <= tol * (1.0 + a.norm_fro()),
            "reconstruction"
        );
        for w in s.sigma.windows(2) {
            assert!(w[0] >= w[1], "descending singular values");
        }
    }

    #[test]
    fn svd_random_real_and_complex() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        check_svd(&random_normal::<f64, _>(9, 6, &mut rng), 1e-12);
        check_svd(&random_normal::<f64, _>(5, 8, &mut rng), 1e-12);
        check_svd(&random_normal::<Complex64, _>(10, 7, &mut rng), 1e-12);
    }

    #[test]
    fn svd_known_diagonal() {
        let mut a = Mat::<f64>::zeros(4, 3);
        a[(0, 0)] = 3.0;
        a[(1, 1)] = -5.0;
        a[(2, 2)] = 0.5;
        let s = jacobi_svd(&a);
        assert!((s.sigma[0] - 5.0).abs() < 1e-14);
        assert!((s.sigma[1] - 3.0).abs() < 1e-14);
        assert!((s.sigma[2] - 0.5).abs() < 1e-14);
    }

    #[test]
    fn svd_rank_deficient_keeps_orthonormal_u() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let b = random_normal::<Complex64, _>(8, 2, &mut rng);
        let a = b.hstack(&b); // rank 2, 4 columns
        let s = jacobi_svd(&a);
        assert!(s.u.orthonormality_defect() < 1e-12);
        assert!(s.sigma[2] < 1e-12 * s.sigma[0]);
        check_svd(&a, 1e-11);
    }

    #[test]
    fn sign_convention_is_idempotent_and_value_preserving() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let a = random_normal::<Complex64, _>(7, 4, &mut rng);
        let mut s = jacobi_svd(&a);
        apply_sign_convention(&mut s.u, &mut s.v);
        assert!(s.reconstruct().sub(&a).norm_fro() < 1e-12 * a.norm_fro());
        for j in 0..4 {
            let mut best = (0, -1.0);
            for i in 0..7 {
                if s.u[(i, j)].abs() > best.1 {
                    best = (i, s.u[(i, j)].abs());
                }
            }
            let top = s.u[(best.0, j)];
            assert!(top.im().abs() < 1e-13 && top.re() > 0.0);
        }
    }
}
