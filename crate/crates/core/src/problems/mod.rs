//! Benchmark vector fields with sampling oracles.
//!
//! A field answers full, row, column, entry and (for tensors) mode-fiber
//! evaluations of F at a factored point; every sampled answer agrees with
//! the dense answer wherever both exist. Query counters are atomic so
//! concurrent sampling stays safe.

use std::sync::atomic::{AtomicU64, Ordering};

use crate::kernels::{FactoredMatrix, OuterProductSum};
use crate::mat::Mat;
use crate::scalar::Scalar;

pub mod allencahn2d;
pub mod allencahn3d;
pub mod nls2d;
pub mod nls3d;
pub mod synthetic;

pub use allencahn2d::AllenCahn2d;
pub use allencahn3d::AllenCahn3d;
pub use nls2d::Nls2d;
pub use nls3d::Nls3d;

/// Evaluation counters (scalar entries produced, by oracle kind).
#[derive(Debug, Default)]
pub struct FieldStats {
    pub dense_evals: AtomicU64,
    pub row_queries: AtomicU64,
    pub col_queries: AtomicU64,
    pub fiber_queries: AtomicU64,
    pub entry_evals: AtomicU64,
}

impl FieldStats {
    pub fn snapshot(&self) -> (u64, u64, u64, u64, u64) {
        (
            self.dense_evals.load(Ordering::Relaxed),
            self.row_queries.load(Ordering::Relaxed),
            self.col_queries.load(Ordering::Relaxed),
            self.fiber_queries.load(Ordering::Relaxed),
            self.entry_evals.load(Ordering::Relaxed),
        )
    }

    pub fn reset(&self) {
        self.dense_evals.store(0, Ordering::Relaxed);
        self.row_queries.store(0, Ordering::Relaxed);
        self.col_queries.store(0, Ordering::Relaxed);
        self.fiber_queries.store(0, Ordering::Relaxed);
        self.entry_evals.store(0, Ordering::Relaxed);
    }

    pub fn bump(counter: &AtomicU64, by: u64) {
        counter.fetch_add(by, Ordering::Relaxed);
    }
}

/// A matrix vector field F with sampled evaluation oracles.
pub trait MatrixField<S: Scalar>: Send + Sync {
    fn shape(&self) -> (usize, usize);

    /// Full F(A) at a dense state.
    fn eval_dense(&self, a: &Mat<S>) -> Mat<S>;

    fn eval_dense_into(&self, a: &Mat<S>, out: &mut Mat<S>) {
        *out = self.eval_dense(a);
    }

    /// F(Y) in low-rank factored form at a factored state, when the field
    /// has enough structure (linear terms plus entrywise powers). Used by
    /// the orthogonal-projection integrators; `cap` bounds the width.
    fn eval_factored(&self, _y: &FactoredMatrix<S>, _cap: usize) -> Option<OuterProductSum<S>> {
        None
    }

    /// The given rows of F(Y) at a factored state, as a rows.len() x n block.
    fn eval_rows(&self, y: &FactoredMatrix<S>, rows: &[usize]) -> Mat<S>;

    /// The given columns of F(Y), as an m x cols.len() block.
    fn eval_cols(&self, y: &FactoredMatrix<S>, cols: &[usize]) -> Mat<S>;

    fn stats(&self) -> &FieldStats;
}

/// Test/diagnostic wrapper: a field defined by a dense closure; row and
/// column oracles fall back to dense evaluation (and are counted as such).
pub struct DenseMatrixField<S: Scalar, F: Fn(&Mat<S>) -> Mat<S> + Send + Sync> {
    shape: (usize, usize),
    f: F,
    stats: FieldStats,
    _marker: std::marker::PhantomData<S>,
}

impl<S: Scalar, F: Fn(&Mat<S>) -> Mat<S> + Send + Sync> DenseMatrixField<S, F> {
    pub fn new(shape: (usize, usize), f: F) -> Self {
        DenseMatrixField {
            shape,
            f,
            stats: FieldStats::default(),
            _marker: std::marker::PhantomData,
        }
    }
}

impl<S: Scalar, F: Fn(&Mat<S>) -> Mat<S> + Send + Sync> MatrixField<S> for DenseMatrixField<S, F> {
    fn shape(&self) -> (usize, usize) {
        self.shape
    }

    fn eval_dense(&self, a: &Mat<S>) -> Mat<S> {
        FieldStats::bump(&self.stats.dense_evals, (self.shape.0 * self.shape.1) as u64);
        (self.f)(a)
    }

    fn eval_rows(&self, y: &FactoredMatrix<S>, rows: &[usize]) -> Mat<S> {
        let full = self.eval_dense(&y.dense());
        FieldStats::bump(&self.stats.row_queries, rows.len() as u64);
        full.select_rows(rows)
    }

    fn eval_cols(&self, y: &FactoredMatrix<S>, cols: &[usize]) -> Mat<S> {
        let full = self.eval_dense(&y.dense());
        FieldStats::bump(&self.stats.col_queries, cols.len() as u64);
        full.select_cols(cols)
    }

    fn stats(&self) -> &FieldStats {
        &self.stats
    }
}

use crate::tucker::{Tensor3, TuckerSum, TuckerTensor};

/// A third-order tensor vector field with fiber and entry-block oracles.
pub trait TensorField<S: Scalar>: Send + Sync {
    fn dims(&self) -> (usize, usize, usize);

    fn eval_dense(&self, a: &Tensor3<S>) -> Tensor3<S>;

    /// Mode-`mode` fibers of F(Y) at the given other-mode index pairs
    /// (ascending mode order), as an n x pairs.len() block.
    fn eval_fibers(&self, y: &TuckerTensor<S>, mode: usize, fibers: &[(usize, usize)]) -> Mat<S>;

    /// The entry block F(Y)[i1 x i2 x i3].
    fn eval_block(
        &self,
        y: &TuckerTensor<S>,
        i1: &[usize],
        i2: &[usize],
        i3: &[usize],
    ) -> Tensor3<S>;

    /// Structured full evaluation as a sum of Tucker terms, when available
    /// (used by the orthogonal-projection integrators).
    fn eval_tucker(&self, _y: &TuckerTensor<S>) -> Option<TuckerSum<S>> {
        None
    }

    fn stats(&self) -> &FieldStats;
}

/// Test/diagnostic wrapper around a dense tensor closure; sampling oracles
/// fall back to dense evaluation.
pub struct DenseTensorField<S: Scalar, F: Fn(&Tensor3<S>) -> Tensor3<S> + Send + Sync> {
    dims: (usize, usize, usize),
    f: F,
    stats: FieldStats,
    _marker: std::marker::PhantomData<S>,
}

impl<S: Scalar, F: Fn(&Tensor3<S>) -> Tensor3<S> + Send + Sync> DenseTensorField<S, F> {
    pub fn new(dims: (usize, usize, usize), f: F) -> Self {
        DenseTensorField {
            dims,
            f,
            stats: FieldStats::default(),
            _marker: std::marker::PhantomData,
        }
    }
}

impl<S: Scalar, F: Fn(&Tensor3<S>) -> Tensor3<S> + Send + Sync> TensorField<S>
    for DenseTensorField<S, F>
{
    fn dims(&self) -> (usize, usize, usize) {
        self.dims
    }

    fn eval_dense(&self, a: &Tensor3<S>) -> Tensor3<S> {
        FieldStats::bump(&self.stats.dense_evals, a.len() as u64);
        (self.f)(a)
    }

    fn eval_fibers(&self, y: &TuckerTensor<S>, mode: usize, fibers: &[(usize, usize)]) -> Mat<S> {
        let full = self.eval_dense(&y.dense());
        let n = [self.dims.0, self.dims.1, self.dims.2][mode];
        FieldStats::bump(&self.stats.fiber_queries, (fibers.len() * n) as u64);
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
        let full = self.eval_dense(&y.dense());
        FieldStats::bump(
            &self.stats.entry_evals,
            (i1.len() * i2.len() * i3.len()) as u64,
        );
        Tensor3::from_fn((i1.len(), i2.len(), i3.len()), |a, b, c| {
            full.at(i1[a], i2[b], i3[c])
        })
    }

    fn stats(&self) -> &FieldStats {
        &self.stats
    }
}
