//! Thin Householder QR and Gram-Schmidt utilities.

use crate::mat::Mat;
use crate::scalar::Scalar;

/// Thin QR: returns (Q m x p, R p x k) with p = min(m, k), Q R = A.
///
/// Well-conditioned tall inputs go through CholeskyQR2 (gemm-bound);
/// rank-deficient or ill-conditioned ones fall back to Householder
/// reflections. Q always has exactly orthonormal columns, also for
/// rank-deficient input; the corresponding diagonal entries of R are then
/// (near) zero.
pub fn thin_qr<S: Scalar>(a: &Mat<S>) -> (Mat<S>, Mat<S>) {
    let (m, k) = a.shape();
    if m >= k && k >= 4 {
        if let Some(qr) = chol_qr2(a) {
            return qr;
        }
    }
    householder_qr(a)
}

/// Cholesky of a Hermitian positive definite matrix: G = R^H R with upper
/// triangular R (real positive diagonal). None when a pivot degenerates.
fn chol_upper<S: Scalar>(g: &Mat<S>) -> Option<Mat<S>> {
    let n = g.nrows();
    let mut r = Mat::<S>::zeros(n, n);
    let scale = (0..n).map(|i| g[(i, i)].re()).fold(0.0f64, f64::max);
    for j in 0..n {
        let mut d = g[(j, j)].re();
        for t in 0..j {
            d -= r[(t, j)].abs_sq();
        }
        if !(d > scale * 1e-13) {
            return None;
        }
        let dj = d.sqrt();
        r[(j, j)] = S::from_re(dj);
        for c in j + 1..n {
            let mut s = g[(j, c)];
            for t in 0..j {
                s -= r[(t, j)].conj() * r[(t, c)];
            }
            r[(j, c)] = s.scale(1.0 / dj);
        }
    }
    Some(r)
}

/// Inverse of an upper triangular matrix by back substitution.
fn upper_inverse<S: Scalar>(r: &Mat<S>) -> Mat<S> {
    let n = r.nrows();
    let mut inv = Mat::<S>::zeros(n, n);
    for j in (0..n).rev() {
        inv[(j, j)] = S::one() / r[(j, j)];
        for i in (0..j).rev() {
            let mut s = S::zero();
            for t in i + 1..=j {
                s += r[(i, t)] * inv[(t, j)];
            }
            inv[(i, j)] = -s / r[(i, i)];
        }
    }
    inv
}

fn chol_qr2<S: Scalar>(a: &Mat<S>) -> Option<(Mat<S>, Mat<S>)> {
    let g = a.h_mul(a);
    let n = g.nrows();
    // condition gate on the Gram diagonal
    let mut dmax = 0.0f64;
    let mut dmin = f64::INFINITY;
    for i in 0..n {
        let d = g[(i, i)].re();
        dmax = dmax.max(d);
        dmin = dmin.min(d);
    }
    if !(dmin > dmax * 1e-13) {
        return None;
    }
    let r1 = chol_upper(&g)?;
    let q1 = a.mul(&upper_inverse(&r1));
    let g2 = q1.h_mul(&q1);
    let r2 = chol_upper(&g2)?;
    let q = q1.mul(&upper_inverse(&r2));
    let r = r2.mul(&r1);
    Some((q, r))
}

fn householder_qr<S: Scalar>(a: &Mat<S>) -> (Mat<S>, Mat<S>) {
    let (m, k) = a.shape();
    let p = m.min(k);
    let mut w = a.clone();
    // Reflectors v_j (length m-j) with coefficient 2/v^H v.
    let mut vs: Vec<Vec<S>> = Vec::with_capacity(p);
    for j in 0..p {
        let x: Vec<S> = (j..m).map(|i| w[(i, j)]).collect();
        let normx = x.iter().map(|t| t.abs_sq()).sum::<f64>().sqrt();
        if normx == 0.0 {
            vs.push(vec![S::zero(); m - j]);
            continue;
        }
        let alpha = x[0];
        let phase = if alpha.abs() > 0.0 {
            alpha.scale(1.0 / alpha.abs())
        } else {
            S::one()
        };
        let beta = -phase.scale(normx);
        let mut v = x;
        v[0] = v[0] - beta;
        let vsq: f64 = v.iter().map(|t| t.abs_sq()).sum();
        if vsq == 0.0 {
            // column already of the form beta*e1
            vs.push(vec![S::zero(); m - j]);
            w[(j, j)] = beta;
            continue;
        }
        let coef = 2.0 / vsq;
        // apply H = I - coef v v^H to trailing columns including j
        for c in j..k {
            let col = &mut w.col_mut(c)[j..];
            let mut dot = S::zero();
            for (x, y) in v.iter().zip(col.iter()) {
                dot += x.conj() * *y;
            }
            let dot = dot.scale(coef);
            for (x, y) in v.iter().zip(col.iter_mut()) {
                *y -= *x * dot;
            }
        }
        w[(j, j)] = beta;
        for i in (j + 1)..m {
            w[(i, j)] = S::zero();
        }
        vs.push(v);
    }
    let mut r = Mat::zeros(p, k);
    for j in 0..k {
        for i in 0..=j.min(p - 1) {
            r[(i, j)] = w[(i, j)];
        }
    }
    // form Q by applying reflectors to the first p identity columns
    let mut q = Mat::from_fn(m, p, |i, j| if i == j { S::one() } else { S::zero() });
    for j in (0..p).rev() {
        let v = &vs[j];
        let vsq: f64 = v.iter().map(|t| t.abs_sq()).sum();
        if vsq == 0.0 {
            continue;
        }
        let coef = 2.0 / vsq;
        for c in 0..p {
            let mut dot = S::zero();
            for (iv, i) in (j..m).enumerate() {
                dot += v[iv].conj() * q[(i, c)];
            }
            let dot = dot.scale(coef);
            for (iv, i) in (j..m).enumerate() {
                let t = q[(i, c)] - v[iv] * dot;
                q[(i, c)] = t;
            }
        }
    }
    (q, r)
}

/// Orthonormal basis for the column span, dropping near-dependent columns.
///
/// Two-pass modified Gram-Schmidt; a column is dropped when its residual
/// falls below `drop_tol` times its original norm.
pub fn orthonormalize_cols<S: Scalar>(a: &Mat<S>, drop_tol: f64) -> Mat<S> {
    let (m, k) = a.shape();
    let mut basis: Vec<Vec<S>> = Vec::with_capacity(k);
    for j in 0..k {
        let mut v = a.col(j).to_vec();
        let norm0 = v.iter().map(|t| t.abs_sq()).sum::<f64>().sqrt();
        if norm0 == 0.0 {
            continue;
        }
        for _pass in 0..2 {
            for b in &basis {
                let mut dot = S::zero();
                for (x, y) in b.iter().zip(v.iter()) {
                    dot += x.conj() * *y;
                }
                for (x, y) in b.iter().zip(v.iter_mut()) {
                    *y -= *x * dot;
                }
            }
        }
        let norm = v.iter().map(|t| t.abs_sq()).sum::<f64>().sqrt();
        if norm <= drop_tol * norm0 {
            continue;
        }
        for t in v.iter_mut() {
            *t = t.scale(1.0 / norm);
        }
        basis.push(v);
    }
    let mut q = Mat::zeros(m, basis.len());
    for (j, b) in basis.iter().enumerate() {
        q.col_mut(j).copy_from_slice(b);
    }
    q
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mat::random_normal;
    use num_complex::Complex64;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn qr_reconstructs_real() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let a = random_normal::<f64, _>(12, 5, &mut rng);
        let (q, r) = thin_qr(&a);
        assert!(q.orthonormality_defect() < 1e-13);
        assert!(q.mul(&r).sub(&a).norm_fro() < 1e-12 * a.norm_fro());
    }

    #[test]
    fn qr_reconstructs_complex_and_rank_deficient() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let b = random_normal::<Complex64, _>(10, 3, &mut rng);
        // duplicate a column to force rank deficiency
        let a = b.hstack(&b.cols_range(0, 1));
        let (q, r) = thin_qr(&a);
        assert!(q.orthonormality_defect() < 1e-12);
        assert!(q.mul(&r).sub(&a).norm_fro() < 1e-12 * a.norm_fro());
    }

    #[test]
    fn orthonormalize_drops_dependent_columns() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let b = random_normal::<f64, _>(9, 3, &mut rng);
        let a = b.hstack(&b.cols_range(1, 3));
        let q = orthonormalize_cols(&a, 1e-10);
        assert_eq!(q.ncols(), 3);
        assert!(q.orthonormality_defect() < 1e-12);
    }
}
