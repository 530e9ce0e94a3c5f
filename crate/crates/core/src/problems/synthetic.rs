//! Synthetic fields for validation: a zero field, a linear field that maps
//! every point's tangent space to itself (so the flow preserves rank
//! exactly), and a tangent-projected cubic.

use super::{FieldStats, MatrixField};
use crate::kernels::{FactoredMatrix, OuterProductSum};
use crate::manifold;
use crate::mat::Mat;
use crate::scalar::Scalar;

pub struct ZeroField<S: Scalar> {
    shape: (usize, usize),
    stats: FieldStats,
    _marker: std::marker::PhantomData<S>,
}

impl<S: Scalar> ZeroField<S> {
    pub fn new(shape: (usize, usize)) -> Self {
        ZeroField {
            shape,
            stats: FieldStats::default(),
            _marker: std::marker::PhantomData,
        }
    }
}

impl<S: Scalar> MatrixField<S> for ZeroField<S> {
    fn shape(&self) -> (usize, usize) {
        self.shape
    }
    fn eval_dense(&self, _a: &Mat<S>) -> Mat<S> {
        Mat::zeros(self.shape.0, self.shape.1)
    }
    fn eval_factored(&self, y: &FactoredMatrix<S>, cap: usize) -> Option<OuterProductSum<S>> {
        let mut s = OuterProductSum::new(self.shape.0, self.shape.1, cap);
        s.push(Mat::zeros(self.shape.0, y.rank()), Mat::zeros(self.shape.1, y.rank()))
            .ok()?;
        Some(s)
    }
    fn eval_rows(&self, _y: &FactoredMatrix<S>, rows: &[usize]) -> Mat<S> {
        FieldStats::bump(&self.stats.row_queries, rows.len() as u64);
        Mat::zeros(rows.len(), self.shape.1)
    }
    fn eval_cols(&self, _y: &FactoredMatrix<S>, cols: &[usize]) -> Mat<S> {
        FieldStats::bump(&self.stats.col_queries, cols.len() as u64);
        Mat::zeros(self.shape.0, cols.len())
    }
    fn stats(&self) -> &FieldStats {
        &self.stats
    }
}

/// F(A) = M1 A + A M2. Tangent at every rank-r point, so the exact flow
/// e^{t M1} A0 e^{t M2} keeps the rank of A0.
pub struct TangentLinearField<S: Scalar> {
    pub m1: Mat<S>,
    pub m2: Mat<S>,
    stats: FieldStats,
}

impl<S: Scalar> TangentLinearField<S> {
    pub fn new(m1: Mat<S>, m2: Mat<S>) -> Self {
        TangentLinearField {
            m1,
            m2,
            stats: FieldStats::default(),
        }
    }
}

impl<S: Scalar> MatrixField<S> for TangentLinearField<S> {
    fn shape(&self) -> (usize, usize) {
        (self.m1.nrows(), self.m2.nrows())
    }
    fn eval_dense(&self, a: &Mat<S>) -> Mat<S> {
        self.m1.mul(a).add(&a.mul(&self.m2))
    }
    fn eval_factored(&self, y: &FactoredMatrix<S>, cap: usize) -> Option<OuterProductSum<S>> {
        let mut s = OuterProductSum::new(self.m1.nrows(), self.m2.nrows(), cap);
        let us = y.u.mul(&y.s);
        s.push(self.m1.mul(&us), y.v.clone()).ok()?;
        s.push(us, self.m2.adjoint().mul(&y.v)).ok()?; // A M2 = U S (M2^H V)^H
        Some(s)
    }
    fn eval_rows(&self, y: &FactoredMatrix<S>, rows: &[usize]) -> Mat<S> {
        FieldStats::bump(&self.stats.row_queries, rows.len() as u64);
        self.eval_dense(&y.dense()).select_rows(rows)
    }
    fn eval_cols(&self, y: &FactoredMatrix<S>, cols: &[usize]) -> Mat<S> {
        FieldStats::bump(&self.stats.col_queries, cols.len() as u64);
        self.eval_dense(&y.dense()).select_cols(cols)
    }
    fn stats(&self) -> &FieldStats {
        &self.stats
    }
}

/// F(A) = P_{T_r(A)}[A .* A .* A]: a nonlinear field that by construction
/// lies in the tangent space of the nearest rank-r point, so rank-r initial
/// values stay rank r under the exact flow.
pub struct ProjectedCubicField {
    pub shape: (usize, usize),
    pub rank: usize,
    stats: FieldStats,
}

impl ProjectedCubicField {
    pub fn new(shape: (usize, usize), rank: usize) -> Self {
        ProjectedCubicField {
            shape,
            rank,
            stats: FieldStats::default(),
        }
    }
}

impl MatrixField<f64> for ProjectedCubicField {
    fn shape(&self) -> (usize, usize) {
        self.shape
    }
    fn eval_dense(&self, a: &Mat<f64>) -> Mat<f64> {
        FieldStats::bump(&self.stats.dense_evals, (self.shape.0 * self.shape.1) as u64);
        let y = FactoredMatrix::from_dense_truncated(a, self.rank);
        let cubic = a.map(|c| c * c * c);
        manifold::project_orthogonal(&y, &cubic).dense()
    }
    fn eval_rows(&self, y: &FactoredMatrix<f64>, rows: &[usize]) -> Mat<f64> {
        FieldStats::bump(&self.stats.row_queries, rows.len() as u64);
        self.eval_dense(&y.dense()).select_rows(rows)
    }
    fn eval_cols(&self, y: &FactoredMatrix<f64>, cols: &[usize]) -> Mat<f64> {
        FieldStats::bump(&self.stats.col_queries, cols.len() as u64);
        self.eval_dense(&y.dense()).select_cols(cols)
    }
    fn stats(&self) -> &FieldStats {
        &self.stats
    }
}

use crate::tucker::{Tensor3, TuckerSum, TuckerTensor};

/// F(A) = A x1 M1 + A x2 M2 + A x3 M3: tangent at every multilinear-rank-r
/// point; the exact flow applies e^{t M_i} per mode and preserves rank.
pub struct TangentLinearTensorField<S: Scalar> {
    pub ms: [Mat<S>; 3],
    stats: FieldStats,
}

impl<S: Scalar> TangentLinearTensorField<S> {
    pub fn new(ms: [Mat<S>; 3]) -> Self {
        TangentLinearTensorField {
            ms,
            stats: FieldStats::default(),
        }
    }
}

impl<S: Scalar> crate::problems::TensorField<S> for TangentLinearTensorField<S> {
    fn dims(&self) -> (usize, usize, usize) {
        (self.ms[0].nrows(), self.ms[1].nrows(), self.ms[2].nrows())
    }

    fn eval_dense(&self, a: &Tensor3<S>) -> Tensor3<S> {
        a.mode_product(0, &self.ms[0])
            .add(&a.mode_product(1, &self.ms[1]))
            .add(&a.mode_product(2, &self.ms[2]))
    }

    fn eval_fibers(&self, y: &TuckerTensor<S>, mode: usize, fibers: &[(usize, usize)]) -> Mat<S> {
        FieldStats::bump(&self.stats.fiber_queries, fibers.len() as u64);
        let full = self.eval_dense(&y.dense());
        let n = [full.dims().0, full.dims().1, full.dims().2][mode];
        let mut out = Mat::zeros(n, fibers.len());
        for (c, &(a, b)) in fibers.iter().enumerate() {
            for i in 0..n {
                out[(i, c)] = match mode {
                    0 => full.at(i, a, b),
                    1 => full.at(a, i, b),
                    _ => full.at(a, b, i),
                };
            }
        }
        out
    }

    fn eval_block(
        &self,
        y: &TuckerTensor<S>,
        i1: &[usize],
        i2: &[usize],
        i3: &[usize],
    ) -> Tensor3<S> {
        FieldStats::bump(&self.stats.entry_evals, (i1.len() * i2.len() * i3.len()) as u64);
        let full = self.eval_dense(&y.dense());
        Tensor3::from_fn((i1.len(), i2.len(), i3.len()), |a, b, c| {
            full.at(i1[a], i2[b], i3[c])
        })
    }

    fn eval_tucker(&self, y: &TuckerTensor<S>) -> Option<TuckerSum<S>> {
        let mut sum = TuckerSum::new(self.dims());
        for mode in 0..3 {
            let mut f = [
                y.factors[0].clone(),
                y.factors[1].clone(),
                y.factors[2].clone(),
            ];
            f[mode] = self.ms[mode].mul(&f[mode]);
            sum.push_scaled(&TuckerTensor::new(y.core.clone(), f), 1.0);
        }
        Some(sum)
    }

    fn stats(&self) -> &FieldStats {
        &self.stats
    }
}

/// Zero tensor field.
pub struct ZeroTensorField<S: Scalar> {
    dims: (usize, usize, usize),
    stats: FieldStats,
    _marker: std::marker::PhantomData<S>,
}

impl<S: Scalar> ZeroTensorField<S> {
    pub fn new(dims: (usize, usize, usize)) -> Self {
        ZeroTensorField {
            dims,
            stats: FieldStats::default(),
            _marker: std::marker::PhantomData,
        }
    }
}

impl<S: Scalar> crate::problems::TensorField<S> for ZeroTensorField<S> {
    fn dims(&self) -> (usize, usize, usize) {
        self.dims
    }
    fn eval_dense(&self, _a: &Tensor3<S>) -> Tensor3<S> {
        Tensor3::zeros(self.dims)
    }
    fn eval_fibers(&self, _y: &TuckerTensor<S>, mode: usize, fibers: &[(usize, usize)]) -> Mat<S> {
        let n = [self.dims.0, self.dims.1, self.dims.2][mode];
        Mat::zeros(n, fibers.len())
    }
    fn eval_block(
        &self,
        _y: &TuckerTensor<S>,
        i1: &[usize],
        i2: &[usize],
        i3: &[usize],
    ) -> Tensor3<S> {
        Tensor3::zeros((i1.len(), i2.len(), i3.len()))
    }
    fn stats(&self) -> &FieldStats {
        &self.stats
    }
}
