//! Real symmetric eigendecomposition: Householder tridiagonalization
//! followed by implicit QL iteration with shifts.

use crate::mat::Mat;

/// Eigendecomposition A = Q diag(d) Q^T of a real symmetric matrix.
/// Eigenvalues are returned in ascending order.
pub fn sym_eig(a: &Mat<f64>) -> (Vec<f64>, Mat<f64>) {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "sym_eig expects a square matrix");
    let (mut d, mut e, mut z) = tridiagonalize(a);
    tqli(&mut d, &mut e, &mut z);
    // sort ascending
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| d[i].partial_cmp(&d[j]).unwrap());
    let vals: Vec<f64> = order.iter().map(|&i| d[i]).collect();
    let mut vecs = Mat::zeros(n, n);
    for (jq, &js) in order.iter().enumerate() {
        vecs.set_col(jq, z.col(js));
    }
    (vals, vecs)
}

/// A = Q T Q^T with T tridiagonal; returns (diag, subdiag, Q).
fn tridiagonalize(a: &Mat<f64>) -> (Vec<f64>, Vec<f64>, Mat<f64>) {
    let n = a.nrows();
    let mut a = a.clone();
    let mut q = Mat::<f64>::identity(n);
    for k in 0..n.saturating_sub(2) {
        let mut v: Vec<f64> = (k + 1..n).map(|i| a[(i, k)]).collect();
        let normx = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if normx == 0.0 {
            continue;
        }
        let alpha = v[0];
        let beta_h = if alpha >= 0.0 { -normx } else { normx };
        v[0] -= beta_h;
        let vsq: f64 = v.iter().map(|x| x * x).sum();
        if vsq == 0.0 {
            continue;
        }
        let coef = 2.0 / vsq;
        let m = n - k - 1;
        // p = coef * A[k+1.., k+1..] v
        let mut p = vec![0.0; m];
        for (jj, pj) in p.iter_mut().enumerate() {
            let mut s = 0.0;
            for ii in 0..m {
                s += a[(k + 1 + ii, k + 1 + jj)] * v[ii];
            }
            *pj = coef * s;
        }
        let vtp: f64 = v.iter().zip(&p).map(|(x, y)| x * y).sum();
        // w = p - (coef/2)(v^T p) v ; A <- A - v w^T - w v^T
        let w: Vec<f64> = p
            .iter()
            .zip(&v)
            .map(|(pj, vj)| pj - 0.5 * coef * vtp * vj)
            .collect();
        for jj in 0..m {
            for ii in 0..m {
                a[(k + 1 + ii, k + 1 + jj)] -= v[ii] * w[jj] + w[ii] * v[jj];
            }
        }
        a[(k + 1, k)] = beta_h;
        a[(k, k + 1)] = beta_h;
        for i in k + 2..n {
            a[(i, k)] = 0.0;
            a[(k, i)] = 0.0;
        }
        // Q[:, k+1..] <- Q[:, k+1..] (I - coef v v^T)
        for row in 0..n {
            let mut dot = 0.0;
            for ii in 0..m {
                dot += q[(row, k + 1 + ii)] * v[ii];
            }
            let dot = coef * dot;
            for ii in 0..m {
                q[(row, k + 1 + ii)] -= dot * v[ii];
            }
        }
    }
    let d: Vec<f64> = (0..n).map(|i| a[(i, i)]).collect();
    let e: Vec<f64> = (0..n.saturating_sub(1)).map(|i| a[(i + 1, i)]).collect();
    (d, e, q)
}

/// Implicit QL with shifts on a tridiagonal matrix, rotating `z`'s columns.
/// `e[i]` is the (i, i+1) entry.
fn tqli(d: &mut [f64], e: &mut Vec<f64>, z: &mut Mat<f64>) {
    let n = d.len();
    if n <= 1 {
        return;
    }
    e.push(0.0); // sentinel
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            assert!(iter <= 60, "tqli: too many iterations");
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            let denom = g + if g >= 0.0 { r } else { -r };
            g = d[m] - d[l] + e[l] / denom;
            let (mut s, mut c) = (1.0, 1.0);
            let mut p = 0.0;
            let mut underflow = false;
            for i in (l..m).rev() {
                let mut f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                for k in 0..z.nrows() {
                    f = z[(k, i + 1)];
                    z[(k, i + 1)] = s * z[(k, i)] + c * f;
                    z[(k, i)] = c * z[(k, i)] - s * f;
                }
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    e.pop();
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::la::svd::jacobi_svd;
    use crate::mat::random_normal;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_symmetric(n: usize, seed: u64) -> Mat<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_normal::<f64, _>(n, n, &mut rng);
        g.add(&g.transpose()).scaled(0.5)
    }

    #[test]
    fn eig_residual_and_orthogonality() {
        let a = random_symmetric(17, 31);
        let (vals, vecs) = sym_eig(&a);
        assert!(vecs.orthonormality_defect() < 1e-12);
        let av = a.mul(&vecs);
        let mut vl = vecs.clone();
        for j in 0..17 {
            for x in vl.col_mut(j).iter_mut() {
                *x *= vals[j];
            }
        }
        assert!(av.sub(&vl).norm_fro() < 1e-11 * (1.0 + a.norm_fro()));
        for w in vals.windows(2) {
            assert!(w[0] <= w[1]);
        }
    }

    #[test]
    fn eig_matches_svd_absolute_values() {
        let a = random_symmetric(12, 32);
        let (vals, _) = sym_eig(&a);
        let mut abs_vals: Vec<f64> = vals.iter().map(|x| x.abs()).collect();
        abs_vals.sort_by(|x, y| y.partial_cmp(x).unwrap());
        let s = jacobi_svd(&a);
        for (a, b) in abs_vals.iter().zip(&s.sigma) {
            assert!((a - b).abs() < 1e-11 * (1.0 + b));
        }
    }

    #[test]
    fn eig_dirichlet_laplacian_analytic() {
        let n = 24;
        let a = Mat::from_fn(n, n, |i, j| {
            if i == j {
                2.0
            } else if i.abs_diff(j) == 1 {
                -1.0
            } else {
                0.0
            }
        });
        let (vals, _) = sym_eig(&a);
        let mut expect: Vec<f64> = (1..=n)
            .map(|j| 2.0 - 2.0 * (j as f64 * std::f64::consts::PI / (n as f64 + 1.0)).cos())
            .collect();
        expect.sort_by(|x, y| x.partial_cmp(y).unwrap());
        for (v, e) in vals.iter().zip(&expect) {
            assert!((v - e).abs() < 1e-12);
        }
    }
}

/// Hermitian eigendecomposition through the real symmetric embedding
/// [[Re G, -Im G], [Im G, Re G]], whose spectrum duplicates every
/// eigenvalue of G. Returns ascending eigenvalues with a complex
/// orthonormal eigenbasis.
pub fn herm_eig(g: &Mat<num_complex::Complex64>) -> (Vec<f64>, Mat<num_complex::Complex64>) {
    use num_complex::Complex64;
    let n = g.nrows();
    assert_eq!(n, g.ncols());
    let mut big = Mat::<f64>::zeros(2 * n, 2 * n);
    for j in 0..n {
        for i in 0..n {
            let z = g[(i, j)];
            big[(i, j)] = z.re;
            big[(n + i, n + j)] = z.re;
            big[(i, n + j)] = -z.im;
            big[(n + i, j)] = z.im;
        }
    }
    let (vals, vecs) = sym_eig(&big);
    // each eigenvalue appears twice; extract one complex vector per pair
    let mut out_vals = Vec::with_capacity(n);
    let mut out_vecs: Vec<Vec<Complex64>> = Vec::with_capacity(n);
    for k in 0..2 * n {
        if out_vals.len() == n {
            break;
        }
        let mut w: Vec<Complex64> = (0..n)
            .map(|i| Complex64::new(vecs[(i, k)], vecs[(n + i, k)]))
            .collect();
        for prev in &out_vecs {
            let mut dot = Complex64::new(0.0, 0.0);
            for i in 0..n {
                dot += prev[i].conj() * w[i];
            }
            for i in 0..n {
                w[i] -= prev[i] * dot;
            }
        }
        let norm = w.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        if norm > 0.5 {
            for x in w.iter_mut() {
                *x = *x / norm;
            }
            out_vals.push(vals[k]);
            out_vecs.push(w);
        }
    }
    assert_eq!(out_vals.len(), n, "hermitian pair extraction failed");
    let mut q = Mat::zeros(n, n);
    for (j, w) in out_vecs.iter().enumerate() {
        q.set_col(j, w);
    }
    (out_vals, q)
}


/// Eigendecomposition of a Hermitian Gram matrix, dispatching on the
/// scalar kind (ascending eigenvalues).
pub fn gram_eig<S: crate::scalar::Scalar>(g: &Mat<S>) -> (Vec<f64>, Mat<S>) {
    if !S::IS_COMPLEX {
        let (v, q) = sym_eig(&g.map(|x| x.re()));
        (v, q.cast::<S>())
    } else {
        let (v, q) = herm_eig(&g.map(|x| x.to_c64()));
        (v, q.map(S::from_c64))
    }
}
