//! Small dense solves: LU with partial pivoting and triangular substitution.

use crate::error::Error;
use crate::mat::Mat;
use crate::scalar::Scalar;

/// Solve A X = B for square A by LU with partial pivoting.
pub fn lu_solve<S: Scalar>(a: &Mat<S>, b: &Mat<S>) -> Result<Mat<S>, Error> {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "lu_solve: square matrix required");
    assert_eq!(n, b.nrows(), "lu_solve: rhs rows");
    let mut lu = a.clone();
    let mut x = b.clone();
    let scale = a.max_abs();
    for k in 0..n {
        // pivot
        let mut piv = k;
        let mut pmax = lu[(k, k)].abs();
        for i in k + 1..n {
            if lu[(i, k)].abs() > pmax {
                pmax = lu[(i, k)].abs();
                piv = i;
            }
        }
        if pmax <= 1e-300 + f64::EPSILON * scale * 1e-2 {
            return Err(Error::SingularMatrix {
                context: "LU pivot underflow".into(),
            });
        }
        if piv != k {
            for j in 0..n {
                let t = lu[(k, j)];
                lu[(k, j)] = lu[(piv, j)];
                lu[(piv, j)] = t;
            }
            for j in 0..x.ncols() {
                let t = x[(k, j)];
                x[(k, j)] = x[(piv, j)];
                x[(piv, j)] = t;
            }
        }
        let d = lu[(k, k)];
        for i in k + 1..n {
            let f = lu[(i, k)] / d;
            lu[(i, k)] = f;
            for j in k + 1..n {
                let t = lu[(i, j)] - f * lu[(k, j)];
                lu[(i, j)] = t;
            }
            for j in 0..x.ncols() {
                let t = x[(i, j)] - f * x[(k, j)];
                x[(i, j)] = t;
            }
        }
    }
    for j in 0..x.ncols() {
        for i in (0..n).rev() {
            let mut s = x[(i, j)];
            for k in i + 1..n {
                s -= lu[(i, k)] * x[(k, j)];
            }
            x[(i, j)] = s / lu[(i, i)];
        }
    }
    Ok(x)
}

pub fn lu_inverse<S: Scalar>(a: &Mat<S>) -> Result<Mat<S>, Error> {
    lu_solve(a, &Mat::identity(a.nrows()))
}

/// Solve (T + shift I) X = B for upper triangular T.
pub fn solve_shifted_upper<S: Scalar>(t: &Mat<S>, shift: S, b: &Mat<S>) -> Result<Mat<S>, Error> {
    let n = t.nrows();
    let mut x = b.clone();
    for j in 0..x.ncols() {
        for i in (0..n).rev() {
            let mut s = x[(i, j)];
            for k in i + 1..n {
                s -= t[(i, k)] * x[(k, j)];
            }
            let d = t[(i, i)] + shift;
            if d.abs() <= 1e-300 {
                return Err(Error::SingularMatrix {
                    context: "shifted triangular solve".into(),
                });
            }
            x[(i, j)] = s / d;
        }
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mat::random_normal;
    use num_complex::Complex64;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn lu_solves_random_systems() {
        let mut rng = ChaCha8Rng::seed_from_u64(51);
        let a = random_normal::<Complex64, _>(8, 8, &mut rng);
        let b = random_normal::<Complex64, _>(8, 3, &mut rng);
        let x = lu_solve(&a, &b).unwrap();
        assert!(a.mul(&x).sub(&b).norm_fro() < 1e-11 * b.norm_fro());
        let inv = lu_inverse(&a).unwrap();
        assert!(
            a.mul(&inv).sub(&Mat::identity(8)).norm_fro() < 1e-10,
            "inverse"
        );
    }

    #[test]
    fn lu_rejects_singular() {
        let a = Mat::<f64>::zeros(3, 3);
        assert!(lu_solve(&a, &Mat::identity(3)).is_err());
    }
}
