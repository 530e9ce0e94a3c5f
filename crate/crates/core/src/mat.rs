//! Dense column-major matrices over [`Scalar`].
//!
//! This is the minimal surface the integrators need (gemm, stacking, row and
//! column selection); factorizations live in [`crate::la`].

use std::ops::{Index, IndexMut};

use rand::Rng;

use crate::scalar::Scalar;

#[derive(Clone, PartialEq)]
pub struct Mat<S> {
    nrows: usize,
    ncols: usize,
    data: Vec<S>,
}

impl<S: Scalar> std::fmt::Debug for Mat<S> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "Mat {}x{} [", self.nrows, self.ncols)?;
        for i in 0..self.nrows.min(8) {
            write!(f, "  ")?;
            for j in 0..self.ncols.min(8) {
                write!(f, "{:>14} ", self[(i, j)])?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

/// How an operand enters a product.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Op {
    /// As is.
    N,
    /// Conjugate transpose.
    H,
}

impl<S: Scalar> Mat<S> {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Mat {
            nrows,
            ncols,
            data: vec![S::zero(); nrows * ncols],
        }
    }

    pub fn from_fn(nrows: usize, ncols: usize, mut f: impl FnMut(usize, usize) -> S) -> Self {
        let mut m = Mat::zeros(nrows, ncols);
        for j in 0..ncols {
            for i in 0..nrows {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    pub fn identity(n: usize) -> Self {
        Mat::from_fn(n, n, |i, j| if i == j { S::one() } else { S::zero() })
    }

    /// Columns of the `n x n` identity with the given indices.
    pub fn identity_cols(n: usize, cols: &[usize]) -> Self {
        let mut m = Mat::zeros(n, cols.len());
        for (j, &i) in cols.iter().enumerate() {
            m[(i, j)] = S::one();
        }
        m
    }

    pub fn from_col_major(nrows: usize, ncols: usize, data: Vec<S>) -> Self {
        assert_eq!(data.len(), nrows * ncols, "column-major buffer size");
        Mat { nrows, ncols, data }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }
    pub fn ncols(&self) -> usize {
        self.ncols
    }
    pub fn shape(&self) -> (usize, usize) {
        (self.nrows, self.ncols)
    }
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[S] {
        &self.data
    }
    pub fn data_mut(&mut self) -> &mut [S] {
        &mut self.data
    }
    pub fn into_data(self) -> Vec<S> {
        self.data
    }

    pub fn col(&self, j: usize) -> &[S] {
        &self.data[j * self.nrows..(j + 1) * self.nrows]
    }
    pub fn col_mut(&mut self, j: usize) -> &mut [S] {
        &mut self.data[j * self.nrows..(j + 1) * self.nrows]
    }

    /// Mutable views of two distinct columns.
    pub fn two_cols_mut(&mut self, p: usize, q: usize) -> (&mut [S], &mut [S]) {
        assert!(p != q);
        let n = self.nrows;
        if p < q {
            let (lo, hi) = self.data.split_at_mut(q * n);
            (&mut lo[p * n..p * n + n], &mut hi[..n])
        } else {
            let (lo, hi) = self.data.split_at_mut(p * n);
            let (qs, ps) = (&mut lo[q * n..q * n + n], &mut hi[..n]);
            (ps, qs)
        }
    }

    pub fn set_col(&mut self, j: usize, v: &[S]) {
        assert_eq!(v.len(), self.nrows);
        self.col_mut(j).copy_from_slice(v);
    }

    pub fn row(&self, i: usize) -> Vec<S> {
        (0..self.ncols).map(|j| self[(i, j)]).collect()
    }

    pub fn adjoint(&self) -> Mat<S> {
        Mat::from_fn(self.ncols, self.nrows, |i, j| self[(j, i)].conj())
    }

    pub fn transpose(&self) -> Mat<S> {
        Mat::from_fn(self.ncols, self.nrows, |i, j| self[(j, i)])
    }

    pub fn conj(&self) -> Mat<S> {
        let mut m = self.clone();
        for x in m.data.iter_mut() {
            *x = x.conj();
        }
        m
    }

    pub fn map<T: Scalar>(&self, f: impl Fn(S) -> T) -> Mat<T> {
        Mat {
            nrows: self.nrows,
            ncols: self.ncols,
            data: self.data.iter().map(|&x| f(x)).collect(),
        }
    }

    pub fn scale_in_place(&mut self, a: f64) {
        for x in self.data.iter_mut() {
            *x = x.scale(a);
        }
    }

    pub fn scaled(&self, a: f64) -> Mat<S> {
        let mut m = self.clone();
        m.scale_in_place(a);
        m
    }

    pub fn scaled_s(&self, a: S) -> Mat<S> {
        let mut m = self.clone();
        for x in m.data.iter_mut() {
            *x = *x * a;
        }
        m
    }

    /// self += a * other
    pub fn axpy(&mut self, a: S, other: &Mat<S>) {
        assert_eq!(self.shape(), other.shape(), "axpy shape");
        for (x, y) in self.data.iter_mut().zip(other.data.iter()) {
            *x += a * *y;
        }
    }

    pub fn add(&self, other: &Mat<S>) -> Mat<S> {
        let mut m = self.clone();
        m.axpy(S::one(), other);
        m
    }

    pub fn sub(&self, other: &Mat<S>) -> Mat<S> {
        let mut m = self.clone();
        m.axpy(-S::one(), other);
        m
    }

    pub fn norm_fro(&self) -> f64 {
        self.data.iter().map(|x| x.abs_sq()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|x| x.abs()).fold(0.0, f64::max)
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    /// Squared Euclidean norm of row `i`.
    pub fn row_norm_sq(&self, i: usize) -> f64 {
        (0..self.ncols).map(|j| self[(i, j)].abs_sq()).sum()
    }

    pub fn select_rows(&self, rows: &[usize]) -> Mat<S> {
        Mat::from_fn(rows.len(), self.ncols, |i, j| self[(rows[i], j)])
    }

    pub fn select_cols(&self, cols: &[usize]) -> Mat<S> {
        let mut m = Mat::zeros(self.nrows, cols.len());
        for (jq, &jc) in cols.iter().enumerate() {
            m.col_mut(jq).copy_from_slice(self.col(jc));
        }
        m
    }

    pub fn cols_range(&self, lo: usize, hi: usize) -> Mat<S> {
        Mat {
            nrows: self.nrows,
            ncols: hi - lo,
            data: self.data[lo * self.nrows..hi * self.nrows].to_vec(),
        }
    }

    /// Horizontal concatenation `[self, other]`.
    pub fn hstack(&self, other: &Mat<S>) -> Mat<S> {
        assert_eq!(self.nrows, other.nrows, "hstack rows");
        let mut data = Vec::with_capacity(self.data.len() + other.data.len());
        data.extend_from_slice(&self.data);
        data.extend_from_slice(&other.data);
        Mat {
            nrows: self.nrows,
            ncols: self.ncols + other.ncols,
            data,
        }
    }

    /// General product: alpha * op(A) * op(B).
    pub fn mul_op(op_a: Op, a: &Mat<S>, op_b: Op, b: &Mat<S>, alpha: S) -> Mat<S> {
        let (m, ka) = match op_a {
            Op::N => (a.nrows, a.ncols),
            Op::H => (a.ncols, a.nrows),
        };
        let (kb, n) = match op_b {
            Op::N => (b.nrows, b.ncols),
            Op::H => (b.ncols, b.nrows),
        };
        assert_eq!(ka, kb, "matmul inner dimension");
        let mut c = Mat::zeros(m, n);
        if m == 0 || n == 0 || ka == 0 {
            return c;
        }
        // matrixmultiply has no conjugation option: conjugate copies instead,
        // and express transposition through the strides.
        let a_conj;
        let a_eff = if op_a == Op::H && S::IS_COMPLEX {
            a_conj = a.conj();
            &a_conj
        } else {
            a
        };
        let b_conj;
        let b_eff = if op_b == Op::H && S::IS_COMPLEX {
            b_conj = b.conj();
            &b_conj
        } else {
            b
        };
        let (rsa, csa) = match op_a {
            Op::N => (1isize, a.nrows as isize),
            Op::H => (a.nrows as isize, 1isize),
        };
        let (rsb, csb) = match op_b {
            Op::N => (1isize, b.nrows as isize),
            Op::H => (b.nrows as isize, 1isize),
        };
        unsafe {
            S::gemm(
                m,
                ka,
                n,
                alpha,
                a_eff.data.as_ptr(),
                rsa,
                csa,
                b_eff.data.as_ptr(),
                rsb,
                csb,
                S::zero(),
                c.data.as_mut_ptr(),
                1,
                m as isize,
            );
        }
        c
    }

    /// A * B
    pub fn mul(&self, b: &Mat<S>) -> Mat<S> {
        Mat::mul_op(Op::N, self, Op::N, b, S::one())
    }

    /// A^H * B
    pub fn h_mul(&self, b: &Mat<S>) -> Mat<S> {
        Mat::mul_op(Op::H, self, Op::N, b, S::one())
    }

    /// A * B^H
    pub fn mul_h(&self, b: &Mat<S>) -> Mat<S> {
        Mat::mul_op(Op::N, self, Op::H, b, S::one())
    }

    /// Kronecker product self ⊗ other, row (ia*rb+ib), col (ja*cb+jb).
    pub fn kron(&self, other: &Mat<S>) -> Mat<S> {
        let (ra, ca) = self.shape();
        let (rb, cb) = other.shape();
        Mat::from_fn(ra * rb, ca * cb, |i, j| {
            self[(i / rb, j / cb)] * other[(i % rb, j % cb)]
        })
    }

    /// Row-wise Kronecker (transposed Khatri-Rao): result column (a*q + b) is
    /// the entrywise product of column a of self and column b of other.
    pub fn row_kron(&self, other: &Mat<S>) -> Mat<S> {
        assert_eq!(self.nrows, other.nrows, "row_kron rows");
        let (p, q) = (self.ncols, other.ncols);
        let mut m = Mat::zeros(self.nrows, p * q);
        for a in 0..p {
            for b in 0..q {
                let dst = m.col_mut(a * q + b);
                let ca = &self.data[a * self.nrows..(a + 1) * self.nrows];
                let cb = &other.data[b * other.nrows..(b + 1) * other.nrows];
                for ((d, &x), &y) in dst.iter_mut().zip(ca).zip(cb) {
                    *d = x * y;
                }
            }
        }
        m
    }

    /// ||self^H self - I||_F, the departure from orthonormal columns.
    pub fn orthonormality_defect(&self) -> f64 {
        let g = self.h_mul(self);
        let mut s = 0.0;
        for j in 0..g.ncols {
            for i in 0..g.nrows {
                let t = if i == j { g[(i, j)] - S::one() } else { g[(i, j)] };
                s += t.abs_sq();
            }
        }
        s.sqrt()
    }
}

impl Mat<f64> {
    pub fn cast<S: Scalar>(&self) -> Mat<S> {
        self.map(S::from_re)
    }
}

impl<S: Scalar> Index<(usize, usize)> for Mat<S> {
    type Output = S;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &S {
        debug_assert!(i < self.nrows && j < self.ncols);
        &self.data[j * self.nrows + i]
    }
}

impl<S: Scalar> IndexMut<(usize, usize)> for Mat<S> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut S {
        debug_assert!(i < self.nrows && j < self.ncols);
        &mut self.data[j * self.nrows + i]
    }
}

/// Matrix with iid standard-normal entries.
pub fn random_normal<S: Scalar, R: Rng + ?Sized>(nrows: usize, ncols: usize, rng: &mut R) -> Mat<S> {
    let mut m = Mat::zeros(nrows, ncols);
    for j in 0..ncols {
        for i in 0..nrows {
            m[(i, j)] = S::standard_normal(rng);
        }
    }
    m
}

/// Haar-ish random matrix with orthonormal columns (QR of a Gaussian).
pub fn random_orthonormal<S: Scalar, R: Rng + ?Sized>(
    nrows: usize,
    ncols: usize,
    rng: &mut R,
) -> Mat<S> {
    assert!(ncols <= nrows);
    let g = random_normal::<S, R>(nrows, ncols, rng);
    let (q, _) = crate::la::qr::thin_qr(&g);
    q
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn matmul_matches_naive_real() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = random_normal::<f64, _>(5, 4, &mut rng);
        let b = random_normal::<f64, _>(4, 3, &mut rng);
        let c = a.mul(&b);
        for i in 0..5 {
            for j in 0..3 {
                let mut s = 0.0;
                for k in 0..4 {
                    s += a[(i, k)] * b[(k, j)];
                }
                assert!((c[(i, j)] - s).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn adjoint_products_complex() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let a = random_normal::<Complex64, _>(6, 3, &mut rng);
        let b = random_normal::<Complex64, _>(6, 2, &mut rng);
        let c = a.h_mul(&b);
        let c_ref = a.adjoint().mul(&b);
        assert!(c.sub(&c_ref).norm_fro() < 1e-12);
        let a2 = random_normal::<Complex64, _>(5, 2, &mut rng);
        let d = b.mul_h(&a2);
        let d_ref = b.mul(&a2.adjoint());
        assert!(d.sub(&d_ref).norm_fro() < 1e-12);
    }

    #[test]
    fn kron_and_row_kron_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = random_normal::<f64, _>(4, 2, &mut rng);
        let b = random_normal::<f64, _>(4, 3, &mut rng);
        let rk = a.row_kron(&b);
        for i in 0..4 {
            for p in 0..2 {
                for q in 0..3 {
                    assert!((rk[(i, p * 3 + q)] - a[(i, p)] * b[(i, q)]).abs() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn random_orthonormal_is_orthonormal() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let q = random_orthonormal::<Complex64, _>(20, 6, &mut rng);
        assert!(q.orthonormality_defect() < 1e-12);
    }
}
