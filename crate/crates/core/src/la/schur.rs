//! Complex Schur decomposition A = Q T Q^H (T upper triangular) via
//! Hessenberg reduction and single-shift QR with Givens rotations.
//! Real input is promoted by the caller.

use num_complex::Complex64;

use crate::error::Error;
use crate::mat::Mat;
use crate::scalar::Scalar;

type C = Complex64;

pub fn complex_schur(a: &Mat<C>) -> Result<(Mat<C>, Mat<C>), Error> {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "schur expects a square matrix");
    let (mut h, mut q) = hessenberg(a);
    if n <= 1 {
        return Ok((q, h));
    }
    let scale = h.norm_fro().max(1.0);
    let mut ihi = n; // active block is rows/cols lo..ihi
    let mut total_iter = 0usize;
    let max_iter = 40 * n.max(4);
    while ihi > 1 {
        // zero negligible subdiagonals
        for i in 0..ihi - 1 {
            let tol = f64::EPSILON * (h[(i, i)].abs() + h[(i + 1, i + 1)].abs()).max(scale * 1e-300);
            if h[(i + 1, i)].abs() <= tol {
                h[(i + 1, i)] = C::new(0.0, 0.0);
            }
        }
        if h[(ihi - 1, ihi - 2)].abs() == 0.0 {
            ihi -= 1;
            continue;
        }
        let mut lo = ihi - 1;
        while lo > 0 && h[(lo, lo - 1)].abs() != 0.0 {
            lo -= 1;
        }
        total_iter += 1;
        if total_iter > max_iter {
            return Err(Error::Numerical(
                "complex Schur iteration failed to converge".into(),
            ));
        }
        // Wilkinson shift from the trailing 2x2 of the active block
        let mu = if total_iter % 16 == 0 {
            // exceptional shift
            h[(ihi - 1, ihi - 2)].scale(1.5) + h[(ihi - 1, ihi - 1)]
        } else {
            wilkinson_shift(
                h[(ihi - 2, ihi - 2)],
                h[(ihi - 2, ihi - 1)],
                h[(ihi - 1, ihi - 2)],
                h[(ihi - 1, ihi - 1)],
            )
        };
        // implicit single-shift QR sweep on lo..ihi
        let mut x = h[(lo, lo)] - mu;
        let mut y = h[(lo + 1, lo)];
        for k in lo..ihi - 1 {
            let (c, s) = givens(x, y);
            // rows k, k+1 (columns k.. only; for k>lo the bulge sits at (k+1,k-1))
            let col0 = k.saturating_sub(1);
            for j in col0..n {
                let hk = h[(k, j)];
                let hk1 = h[(k + 1, j)];
                h[(k, j)] = hk.scale(c) + s * hk1;
                h[(k + 1, j)] = -s.conj() * hk + hk1.scale(c);
            }
            let rmax = (k + 2).min(ihi - 1);
            for i in 0..=rmax {
                let hik = h[(i, k)];
                let hik1 = h[(i, k + 1)];
                h[(i, k)] = hik.scale(c) + hik1 * s.conj();
                h[(i, k + 1)] = -s * hik + hik1.scale(c);
            }
            for i in 0..n {
                let qik = q[(i, k)];
                let qik1 = q[(i, k + 1)];
                q[(i, k)] = qik.scale(c) + qik1 * s.conj();
                q[(i, k + 1)] = -s * qik + qik1.scale(c);
            }
            if k + 2 < ihi {
                x = h[(k + 1, k)];
                y = h[(k + 2, k)];
            }
        }
    }
    // clean strictly lower part
    for j in 0..n {
        for i in j + 1..n {
            h[(i, j)] = C::new(0.0, 0.0);
        }
    }
    Ok((q, h))
}

/// Eigenvalue of [[a, b], [c, d]] closest to d.
fn wilkinson_shift(a: C, b: C, c: C, d: C) -> C {
    let tr = a + d;
    let det = a * d - b * c;
    let disc = (tr * tr - det.scale(4.0)).sqrt();
    let l1 = (tr + disc).scale(0.5);
    let l2 = (tr - disc).scale(0.5);
    if (l1 - d).abs() <= (l2 - d).abs() {
        l1
    } else {
        l2
    }
}

/// Rotation with real c and complex s such that
/// [[c, s], [-conj(s), c]]^H would map... here chosen so that
/// c*f + s*g = r and -conj(s)*f + c*g = 0.
fn givens(f: C, g: C) -> (f64, C) {
    if g.abs() == 0.0 {
        return (1.0, C::new(0.0, 0.0));
    }
    if f.abs() == 0.0 {
        return (0.0, g.conj().scale(1.0 / g.abs()));
    }
    let d = (f.abs_sq() + g.abs_sq()).sqrt();
    let c = f.abs() / d;
    let s = f.scale(1.0 / f.abs()) * g.conj().scale(1.0 / d);
    (c, s)
}

/// Hessenberg reduction A = Q H Q^H by Householder reflectors.
fn hessenberg(a: &Mat<C>) -> (Mat<C>, Mat<C>) {
    let n = a.nrows();
    let mut h = a.clone();
    let mut q = Mat::<C>::identity(n);
    for k in 0..n.saturating_sub(2) {
        let mut v: Vec<C> = (k + 1..n).map(|i| h[(i, k)]).collect();
        let normx = v.iter().map(|x| x.abs_sq()).sum::<f64>().sqrt();
        if normx == 0.0 {
            continue;
        }
        let alpha = v[0];
        let phase = if alpha.abs() > 0.0 {
            alpha.scale(1.0 / alpha.abs())
        } else {
            C::new(1.0, 0.0)
        };
        let beta = -phase.scale(normx);
        v[0] -= beta;
        let vsq: f64 = v.iter().map(|x| x.abs_sq()).sum();
        if vsq == 0.0 {
            continue;
        }
        let coef = 2.0 / vsq;
        let m = n - k - 1;
        // H <- P H with P = I - coef v v^H on rows k+1..
        for j in k..n {
            let mut dot = C::new(0.0, 0.0);
            for i in 0..m {
                dot += v[i].conj() * h[(k + 1 + i, j)];
            }
            let dot = dot.scale(coef);
            for i in 0..m {
                let t = h[(k + 1 + i, j)] - v[i] * dot;
                h[(k + 1 + i, j)] = t;
            }
        }
        // H <- H P on cols k+1..
        for i in 0..n {
            let mut dot = C::new(0.0, 0.0);
            for j in 0..m {
                dot += h[(i, k + 1 + j)] * v[j];
            }
            let dot = dot.scale(coef);
            for j in 0..m {
                let t = h[(i, k + 1 + j)] - dot * v[j].conj();
                h[(i, k + 1 + j)] = t;
            }
        }
        // Q <- Q P
        for i in 0..n {
            let mut dot = C::new(0.0, 0.0);
            for j in 0..m {
                dot += q[(i, k + 1 + j)] * v[j];
            }
            let dot = dot.scale(coef);
            for j in 0..m {
                let t = q[(i, k + 1 + j)] - dot * v[j].conj();
                q[(i, k + 1 + j)] = t;
            }
        }
        for i in k + 2..n {
            h[(i, k)] = C::new(0.0, 0.0);
        }
    }
    (h, q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mat::random_normal;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn check(a: &Mat<C>) {
        let (q, t) = complex_schur(a).unwrap();
        assert!(q.orthonormality_defect() < 1e-11, "Q unitary");
        for j in 0..a.ncols() {
            for i in j + 1..a.nrows() {
                assert!(t[(i, j)].abs() == 0.0, "T upper triangular");
            }
        }
        let rec = q.mul(&t).mul_h(&q);
        assert!(
            rec.sub(a).norm_fro() < 1e-10 * (1.0 + a.norm_fro()),
            "A = Q T Q^H, defect {}",
            rec.sub(a).norm_fro()
        );
    }

    #[test]
    fn schur_random_complex() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        check(&random_normal::<C, _>(9, 9, &mut rng));
        check(&random_normal::<C, _>(16, 16, &mut rng));
    }

    #[test]
    fn schur_promoted_real_and_diagonal() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let ar = random_normal::<f64, _>(11, 11, &mut rng);
        check(&ar.cast::<C>());
        let d = Mat::<C>::from_fn(5, 5, |i, j| {
            if i == j {
                C::new(i as f64 - 2.0, 0.5 * i as f64)
            } else {
                C::new(0.0, 0.0)
            }
        });
        check(&d);
    }

    #[test]
    fn schur_eigenvalues_of_known_matrix() {
        // companion-like matrix with spectrum {1, 2, 3}
        let d = Mat::<C>::from_fn(3, 3, |i, j| {
            C::new(if i == j { (i + 1) as f64 } else { 0.0 }, 0.0)
        });
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        let g = random_normal::<C, _>(3, 3, &mut rng);
        let (p, _) = crate::la::qr::thin_qr(&g);
        let a = p.mul(&d).mul_h(&p);
        let (_, t) = complex_schur(&a).unwrap();
        let mut eigs: Vec<f64> = (0..3).map(|i| t[(i, i)].re).collect();
        eigs.sort_by(|x, y| x.partial_cmp(y).unwrap());
        for (e, want) in eigs.iter().zip([1.0, 2.0, 3.0]) {
            assert!((e - want).abs() < 1e-10);
        }
    }
}
