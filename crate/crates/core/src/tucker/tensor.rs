//! Third-order dense tensors, unfoldings, mode products, the Tucker format
//! and (ST-)HOSVD truncation.
//!
//! Index convention: entry (i1, i2, i3) is stored at i1 + n1*(i2 + n2*i3)
//! (first index fastest). Mode-i unfoldings enumerate the trailing modes
//! colexicographically, so that
//!   Y_(1) = U1 C_(1) (U3 (x) U2)^T
//! holds verbatim for Y = C x1 U1 x2 U2 x3 U3, and likewise for modes 2, 3.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::la::{jacobi_svd, thin_qr};
use crate::mat::Mat;
use crate::scalar::Scalar;

#[derive(Clone, Debug)]
pub struct Tensor3<S> {
    dims: (usize, usize, usize),
    data: Vec<S>,
}

impl<S: Scalar> Tensor3<S> {
    pub fn zeros(dims: (usize, usize, usize)) -> Self {
        Tensor3 {
            dims,
            data: vec![S::zero(); dims.0 * dims.1 * dims.2],
        }
    }

    pub fn from_fn(dims: (usize, usize, usize), mut f: impl FnMut(usize, usize, usize) -> S) -> Self {
        let mut t = Tensor3::zeros(dims);
        for k in 0..dims.2 {
            for j in 0..dims.1 {
                for i in 0..dims.0 {
                    t.data[i + dims.0 * (j + dims.1 * k)] = f(i, j, k);
                }
            }
        }
        t
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        self.dims
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize, k: usize) -> S {
        self.data[i + self.dims.0 * (j + self.dims.1 * k)]
    }

    #[inline]
    pub fn at_mut(&mut self, i: usize, j: usize, k: usize) -> &mut S {
        &mut self.data[i + self.dims.0 * (j + self.dims.1 * k)]
    }

    pub fn data(&self) -> &[S] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [S] {
        &mut self.data
    }

    pub fn norm_fro(&self) -> f64 {
        self.data.iter().map(|x| x.abs_sq()).sum::<f64>().sqrt()
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    pub fn scaled(&self, a: f64) -> Self {
        Tensor3 {
            dims: self.dims,
            data: self.data.iter().map(|x| x.scale(a)).collect(),
        }
    }

    pub fn scaled_s(&self, a: S) -> Self {
        Tensor3 {
            dims: self.dims,
            data: self.data.iter().map(|&x| x * a).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.dims, other.dims);
        Tensor3 {
            dims: self.dims,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&x, &y)| x + y)
                .collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!(self.dims, other.dims);
        Tensor3 {
            dims: self.dims,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&x, &y)| x - y)
                .collect(),
        }
    }

    pub fn unfold(&self, mode: usize) -> Mat<S> {
        let (n1, n2, n3) = self.dims;
        match mode {
            0 => Mat::from_col_major(n1, n2 * n3, self.data.clone()),
            1 => {
                let mut m = Mat::zeros(n2, n1 * n3);
                for k in 0..n3 {
                    for j in 0..n2 {
                        for i in 0..n1 {
                            m[(j, i + n1 * k)] = self.at(i, j, k);
                        }
                    }
                }
                m
            }
            2 => {
                let mut m = Mat::zeros(n3, n1 * n2);
                for k in 0..n3 {
                    for j in 0..n2 {
                        for i in 0..n1 {
                            m[(k, i + n1 * j)] = self.at(i, j, k);
                        }
                    }
                }
                m
            }
            _ => panic!("mode out of range"),
        }
    }

    pub fn fold(m: &Mat<S>, mode: usize, dims: (usize, usize, usize)) -> Self {
        let (n1, n2, n3) = dims;
        match mode {
            0 => {
                assert_eq!(m.shape(), (n1, n2 * n3), "fold shape");
                Tensor3 {
                    dims,
                    data: m.data().to_vec(),
                }
            }
            1 => {
                assert_eq!(m.shape(), (n2, n1 * n3), "fold shape");
                Tensor3::from_fn(dims, |i, j, k| m[(j, i + n1 * k)])
            }
            2 => {
                assert_eq!(m.shape(), (n3, n1 * n2), "fold shape");
                Tensor3::from_fn(dims, |i, j, k| m[(k, i + n1 * j)])
            }
            _ => panic!("mode out of range"),
        }
    }

    /// (X x_mode M), i.e. fold(M * X_(mode)).
    pub fn mode_product(&self, mode: usize, m: &Mat<S>) -> Self {
        let unf = self.unfold(mode);
        assert_eq!(m.ncols(), unf.nrows(), "mode product inner dimension");
        let prod = m.mul(&unf);
        let mut dims = self.dims;
        match mode {
            0 => dims.0 = m.nrows(),
            1 => dims.1 = m.nrows(),
            2 => dims.2 = m.nrows(),
            _ => unreachable!(),
        }
        Tensor3::fold(&prod, mode, dims)
    }
}

/// Tucker format: core C (r1 x r2 x r3) with orthonormal factors U_i.
#[derive(Clone, Debug)]
pub struct TuckerTensor<S: Scalar> {
    pub core: Tensor3<S>,
    pub factors: [Mat<S>; 3],
}

impl<S: Scalar> TuckerTensor<S> {
    pub fn new(core: Tensor3<S>, factors: [Mat<S>; 3]) -> Self {
        let r = core.dims();
        assert_eq!(factors[0].ncols(), r.0);
        assert_eq!(factors[1].ncols(), r.1);
        assert_eq!(factors[2].ncols(), r.2);
        TuckerTensor { core, factors }
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        (
            self.factors[0].nrows(),
            self.factors[1].nrows(),
            self.factors[2].nrows(),
        )
    }

    pub fn with_core_scaled_s(mut self, a: S) -> Self {
        self.core = self.core.scaled_s(a);
        self
    }

    pub fn mode_ranks(&self) -> (usize, usize, usize) {
        self.core.dims()
    }

    pub fn dense(&self) -> Tensor3<S> {
        self.core
            .mode_product(0, &self.factors[0])
            .mode_product(1, &self.factors[1])
            .mode_product(2, &self.factors[2])
    }

    /// Frobenius norm; factors are orthonormal so the core carries it.
    pub fn norm_fro(&self) -> f64 {
        self.core.norm_fro()
    }

    pub fn orthonormality_defect(&self) -> f64 {
        self.factors
            .iter()
            .map(|f| f.orthonormality_defect())
            .fold(0.0, f64::max)
    }

    /// Contraction of the core with single rows of the two non-`mode`
    /// factors: the r-vector v with fiber(mode) = U_mode * v. The pair
    /// (a, b) indexes the other modes in ascending order.
    pub fn contract_fiber(&self, mode: usize, a: usize, b: usize) -> Vec<S> {
        let (r1, r2, r3) = self.core.dims();
        match mode {
            0 => {
                let w1 = self.factors[1].row(a);
                let w2 = self.factors[2].row(b);
                let mut v = vec![S::zero(); r1];
                for g in 0..r3 {
                    for be in 0..r2 {
                        let w = w1[be] * w2[g];
                        for (al, vv) in v.iter_mut().enumerate() {
                            *vv += self.core.at(al, be, g) * w;
                        }
                    }
                }
                v
            }
            1 => {
                let w0 = self.factors[0].row(a);
                let w2 = self.factors[2].row(b);
                let mut v = vec![S::zero(); r2];
                for g in 0..r3 {
                    for al in 0..r1 {
                        let w = w0[al] * w2[g];
                        for (be, vv) in v.iter_mut().enumerate() {
                            *vv += self.core.at(al, be, g) * w;
                        }
                    }
                }
                v
            }
            2 => {
                let w0 = self.factors[0].row(a);
                let w1 = self.factors[1].row(b);
                let mut v = vec![S::zero(); r3];
                for be in 0..r2 {
                    for al in 0..r1 {
                        let w = w0[al] * w1[be];
                        for (g, vv) in v.iter_mut().enumerate() {
                            *vv += self.core.at(al, be, g) * w;
                        }
                    }
                }
                v
            }
            _ => panic!("mode out of range"),
        }
    }

    /// Mode-`mode` fiber of the represented tensor at the other-mode index
    /// pair (a, b) (ascending mode order); O(r^3 + n r).
    pub fn fiber(&self, mode: usize, a: usize, b: usize) -> Vec<S> {
        let v = self.contract_fiber(mode, a, b);
        let u = &self.factors[mode];
        let n = u.nrows();
        let mut out = vec![S::zero(); n];
        for (al, &vv) in v.iter().enumerate() {
            let col = u.col(al);
            for i in 0..n {
                out[i] += col[i] * vv;
            }
        }
        out
    }

    pub fn entry(&self, i: usize, j: usize, k: usize) -> S {
        let v = self.contract_fiber(0, j, k);
        let mut s = S::zero();
        for (al, &vv) in v.iter().enumerate() {
            s += self.factors[0][(i, al)] * vv;
        }
        s
    }
}

/// A sum of Tucker terms (stage arithmetic; mode ranks add up).
#[derive(Clone, Debug)]
pub struct TuckerSum<S: Scalar> {
    dims: (usize, usize, usize),
    terms: Vec<TuckerTensor<S>>,
}

impl<S: Scalar> TuckerSum<S> {
    pub fn new(dims: (usize, usize, usize)) -> Self {
        TuckerSum {
            dims,
            terms: Vec::new(),
        }
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        self.dims
    }

    pub fn terms(&self) -> &[TuckerTensor<S>] {
        &self.terms
    }

    pub fn push_scaled(&mut self, t: &TuckerTensor<S>, coeff: f64) {
        assert_eq!(t.dims(), self.dims, "tucker sum dims");
        let mut tt = t.clone();
        tt.core = tt.core.scaled(coeff);
        self.terms.push(tt);
    }

    pub fn total_mode_rank(&self, mode: usize) -> usize {
        self.terms
            .iter()
            .map(|t| match mode {
                0 => t.mode_ranks().0,
                1 => t.mode_ranks().1,
                _ => t.mode_ranks().2,
            })
            .sum()
    }

    pub fn dense(&self) -> Tensor3<S> {
        let mut out = Tensor3::zeros(self.dims);
        for t in &self.terms {
            out = out.add(&t.dense());
        }
        out
    }
}

/// Leading r left singular vectors of a (possibly very wide) matrix.
/// Exact one-sided Jacobi at desk scale, seeded randomized range finder
/// with two power iterations above it.
fn leading_left_vectors<S: Scalar>(a: &Mat<S>, r: usize) -> (Mat<S>, Vec<f64>) {
    let (m, _n) = a.shape();
    assert!(r <= m);
    if m <= 64 {
        let s = jacobi_svd(a);
        return (s.u.cols_range(0, r), s.sigma);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x705ed);
    let p = (r + 8).min(m);
    let omega = crate::mat::random_normal::<S, _>(a.ncols(), p, &mut rng);
    let mut q = thin_qr(&a.mul(&omega)).0;
    for _ in 0..2 {
        let z = Mat::mul_op(crate::mat::Op::H, a, crate::mat::Op::N, &q, S::one());
        q = thin_qr(&a.mul(&thin_qr(&z).0)).0;
    }
    let b = q.h_mul(a);
    let s = jacobi_svd(&b);
    (q.mul(&s.u.cols_range(0, r)), s.sigma)
}

/// Plain HOSVD truncation of a dense tensor to multilinear rank r.
pub fn hosvd_truncate<S: Scalar>(x: &Tensor3<S>, r: usize) -> TuckerTensor<S> {
    assert!(x.all_finite(), "hosvd input must be finite");
    let dims = x.dims();
    assert!(r <= dims.0 && r <= dims.1 && r <= dims.2);
    let mut factors = Vec::with_capacity(3);
    for mode in 0..3 {
        let (w, _) = leading_left_vectors(&x.unfold(mode), r);
        factors.push(w);
    }
    let core = x
        .mode_product(0, &factors[0].adjoint())
        .mode_product(1, &factors[1].adjoint())
        .mode_product(2, &factors[2].adjoint());
    let mut t = TuckerTensor::new(core, [factors[0].clone(), factors[1].clone(), factors[2].clone()]);
    fix_factor_phases(&mut t);
    t
}

/// Sequentially truncated HOSVD of a sum of Tucker terms without ever
/// densifying at the full size: per-mode QR of the stacked factors, then
/// the small combined core is truncated mode by mode through Gram
/// eigendecompositions.
pub fn hosvd_truncate_sum<S: Scalar>(sum: &TuckerSum<S>, r: usize) -> (TuckerTensor<S>, [Vec<f64>; 3]) {
    assert!(!sum.terms().is_empty(), "empty tucker sum");
    // stacked QR per mode
    let mut qs = Vec::with_capacity(3);
    let mut rblocks: Vec<Vec<Mat<S>>> = Vec::with_capacity(3); // per mode, per term
    for mode in 0..3 {
        let mut stack: Option<Mat<S>> = None;
        for t in sum.terms() {
            let f = &t.factors[mode];
            stack = Some(match stack {
                None => f.clone(),
                Some(s) => s.hstack(f),
            });
        }
        let stack = stack.unwrap();
        let (q, rr) = thin_qr(&stack);
        let mut blocks = Vec::new();
        let mut off = 0;
        for t in sum.terms() {
            let w = t.factors[mode].ncols();
            blocks.push(rr.cols_range(off, off + w));
            off += w;
        }
        qs.push(q);
        rblocks.push(blocks);
    }
    // combined core sum_t core_t x_i R_i[:, block_t]
    let k = (qs[0].ncols(), qs[1].ncols(), qs[2].ncols());
    let mut big = Tensor3::<S>::zeros(k);
    for (t_idx, t) in sum.terms().iter().enumerate() {
        let c = t
            .core
            .mode_product(0, &rblocks[0][t_idx])
            .mode_product(1, &rblocks[1][t_idx])
            .mode_product(2, &rblocks[2][t_idx]);
        big = big.add(&c);
    }
    // ST-HOSVD on the small core
    let mut core = big;
    let mut ws: Vec<Mat<S>> = Vec::with_capacity(3);
    let mut sigmas: [Vec<f64>; 3] = [Vec::new(), Vec::new(), Vec::new()];
    for mode in 0..3 {
        let unf = core.unfold(mode);
        let gram = unf.mul_h(&unf);
        let (vals, vecs) = crate::la::eig::gram_eig(&gram);
        // ascending -> take the top r, largest first
        let kk = unf.nrows();
        let take = r.min(kk);
        let mut w = Mat::zeros(kk, take);
        for j in 0..take {
            w.set_col(j, vecs.col(kk - 1 - j));
        }
        sigmas[mode] = (0..take)
            .map(|j| vals[kk - 1 - j].max(0.0).sqrt())
            .collect();
        core = core.mode_product(mode, &w.adjoint());
        ws.push(w);
    }
    let factors = [
        qs[0].mul(&ws[0]),
        qs[1].mul(&ws[1]),
        qs[2].mul(&ws[2]),
    ];
    let mut t = TuckerTensor::new(core, factors);
    fix_factor_phases(&mut t);
    (t, sigmas)
}

/// Deterministic phase normalization of the factors (largest-magnitude
/// entry of every factor column made real positive, compensated in the
/// core).
pub fn fix_factor_phases<S: Scalar>(t: &mut TuckerTensor<S>) {
    for mode in 0..3 {
        let f = &mut t.factors[mode];
        let r = f.ncols();
        let mut phases = Vec::with_capacity(r);
        for j in 0..r {
            let mut best = (0usize, -1.0);
            for i in 0..f.nrows() {
                let a = f[(i, j)].abs();
                if a > best.1 {
                    best = (i, a);
                }
            }
            let w = if best.1 > 0.0 {
                f[(best.0, j)].conj().scale(1.0 / best.1)
            } else {
                S::one()
            };
            phases.push(w);
            for i in 0..f.nrows() {
                let x = f[(i, j)] * w;
                f[(i, j)] = x;
            }
        }
        // core slice compensation: multiply mode slices by conj(w)
        let d = Mat::from_fn(r, r, |i, j| {
            if i == j {
                phases[i].conj()
            } else {
                S::zero()
            }
        });
        t.core = t.core.mode_product(mode, &d);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mat::{random_normal, random_orthonormal};
    use num_complex::Complex64;

    fn random_tensor(dims: (usize, usize, usize), seed: u64) -> Tensor3<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut t = Tensor3::zeros(dims);
        for x in t.data_mut().iter_mut() {
            *x = f64::standard_normal(&mut rng);
        }
        t
    }

    fn random_tucker(n: usize, r: usize, seed: u64) -> TuckerTensor<f64> {
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
    fn unfold_enumerates_trailing_modes_first_index_fastest() {
        // entries 1..8 by storage order (i1 fastest)
        let t = Tensor3::from_fn((2, 2, 2), |i, j, k| (1 + i + 2 * j + 4 * k) as f64);
        let m0 = t.unfold(0);
        // mode-1 unfolding columns enumerate (i2, i3) with i2 fastest
        let want = [[1.0, 3.0, 5.0, 7.0], [2.0, 4.0, 6.0, 8.0]];
        for i in 0..2 {
            for c in 0..4 {
                assert_eq!(m0[(i, c)], want[i][c]);
            }
        }
        // fold inverts every unfolding
        for mode in 0..3 {
            let back = Tensor3::fold(&t.unfold(mode), mode, t.dims());
            assert!(back.sub(&t).norm_fro() == 0.0);
        }
    }

    #[test]
    fn rank_one_unfolding_is_outer_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(71);
        let a = random_normal::<f64, _>(4, 1, &mut rng);
        let b = random_normal::<f64, _>(5, 1, &mut rng);
        let c = random_normal::<f64, _>(6, 1, &mut rng);
        let t = Tensor3::from_fn((4, 5, 6), |i, j, k| a[(i, 0)] * b[(j, 0)] * c[(k, 0)]);
        // unfold(0) = a (c (x) b)^T
        let kron = c.kron(&b); // 30 x 1, row (k*5 + j)
        let want = a.mul(&kron.transpose());
        assert!(t.unfold(0).sub(&want).norm_fro() < 1e-13);
    }

    #[test]
    fn mode_product_identities() {
        let t = random_tensor((5, 6, 7), 72);
        let mut rng = ChaCha8Rng::seed_from_u64(73);
        for mode in 0..3 {
            let n = [5, 6, 7][mode];
            let eye = Mat::<f64>::identity(n);
            assert!(t.mode_product(mode, &eye).sub(&t).norm_fro() < 1e-14);
            let m1 = random_normal::<f64, _>(n, n, &mut rng);
            let m2 = random_normal::<f64, _>(n, n, &mut rng);
            let ab = t.mode_product(mode, &m1).mode_product(mode, &m2);
            let combined = t.mode_product(mode, &m2.mul(&m1));
            assert!(ab.sub(&combined).norm_fro() < 1e-12 * combined.norm_fro());
            // matricized oracle
            let direct = Tensor3::fold(
                &m1.mul(&t.unfold(mode)),
                mode,
                {
                    let mut d = t.dims();
                    match mode {
                        0 => d.0 = n,
                        1 => d.1 = n,
                        _ => d.2 = n,
                    }
                    d
                },
            );
            assert!(t.mode_product(mode, &m1).sub(&direct).norm_fro() < 1e-13);
        }
    }

    #[test]
    fn tucker_fibers_and_entries_match_dense() {
        let t = random_tucker(9, 3, 74);
        let dense = t.dense();
        for (mode, a, b) in [(0usize, 2usize, 5usize), (1, 4, 7), (2, 0, 3)] {
            let fib = t.fiber(mode, a, b);
            for (i, &v) in fib.iter().enumerate() {
                let want = match mode {
                    0 => dense.at(i, a, b),
                    1 => dense.at(a, i, b),
                    _ => dense.at(a, b, i),
                };
                assert!((v - want).abs() < 1e-12);
            }
        }
        assert!((t.entry(1, 2, 3) - dense.at(1, 2, 3)).abs() < 1e-13);
    }

    #[test]
    fn hosvd_recovers_exact_rank() {
        let t = random_tucker(12, 3, 75);
        let dense = t.dense();
        let tr = hosvd_truncate(&dense, 3);
        assert!(tr.orthonormality_defect() < 1e-12);
        assert!(tr.dense().sub(&dense).norm_fro() < 1e-12 * dense.norm_fro());
        // rank-1, r = 1 is exact
        let mut rng = ChaCha8Rng::seed_from_u64(76);
        let a = random_normal::<f64, _>(8, 1, &mut rng);
        let b = random_normal::<f64, _>(8, 1, &mut rng);
        let c = random_normal::<f64, _>(8, 1, &mut rng);
        let t1 = Tensor3::from_fn((8, 8, 8), |i, j, k| a[(i, 0)] * b[(j, 0)] * c[(k, 0)]);
        let tr1 = hosvd_truncate(&t1, 1);
        assert!(tr1.dense().sub(&t1).norm_fro() < 1e-12 * t1.norm_fro());
    }

    #[test]
    fn hosvd_quasi_optimality_sqrt3() {
        let x = random_tensor((20, 20, 20), 77);
        let r = 4;
        let tr = hosvd_truncate(&x, r);
        let err = tr.dense().sub(&x).norm_fro();
        // sqrt of the summed per-mode singular tails
        let mut tails2 = 0.0;
        for mode in 0..3 {
            let sig = jacobi_svd(&x.unfold(mode)).sigma;
            tails2 += sig[r..].iter().map(|s| s * s).sum::<f64>();
        }
        assert!(err <= 3f64.sqrt() * tails2.sqrt() + 1e-12, "{err} vs {}", tails2.sqrt());
    }

    #[test]
    fn structured_truncation_matches_dense_route() {
        let n = 14;
        let t1 = random_tucker(n, 3, 78);
        let t2 = random_tucker(n, 2, 79);
        let mut sum = TuckerSum::new((n, n, n));
        sum.push_scaled(&t1, 1.0);
        sum.push_scaled(&t2, -0.37);
        let dense = sum.dense();
        let r = 3;
        let (tr, sig) = hosvd_truncate_sum(&sum, r);
        assert!(tr.orthonormality_defect() < 1e-11);
        assert_eq!(tr.mode_ranks(), (r, r, r));
        assert!(!sig[0].is_empty());
        // compare against the dense plain-HOSVD error up to the sqrt(3) factor
        let err_structured = tr.dense().sub(&dense).norm_fro();
        let mut tails2 = 0.0;
        for mode in 0..3 {
            let s = jacobi_svd(&dense.unfold(mode)).sigma;
            tails2 += s[r..].iter().map(|x| x * x).sum::<f64>();
        }
        assert!(err_structured <= 3f64.sqrt() * tails2.sqrt() + 1e-12);
        // exact-rank sums are recovered exactly
        let mut sum2 = TuckerSum::new((n, n, n));
        sum2.push_scaled(&t1, 1.0);
        let (tr2, _) = hosvd_truncate_sum(&sum2, 3);
        assert!(tr2.dense().sub(&t1.dense()).norm_fro() < 1e-11 * t1.norm_fro());
    }

    #[test]
    fn structured_truncation_complex() {
        let mut rng = ChaCha8Rng::seed_from_u64(80);
        let n = 10;
        let mut core = Tensor3::<Complex64>::zeros((3, 3, 3));
        for x in core.data_mut().iter_mut() {
            *x = Complex64::standard_normal(&mut rng);
        }
        let t = TuckerTensor::new(
            core,
            [
                random_orthonormal::<Complex64, _>(n, 3, &mut rng),
                random_orthonormal::<Complex64, _>(n, 3, &mut rng),
                random_orthonormal::<Complex64, _>(n, 3, &mut rng),
            ],
        );
        let mut sum = TuckerSum::new((n, n, n));
        sum.push_scaled(&t, 1.0);
        let (tr, _) = hosvd_truncate_sum(&sum, 3);
        assert!(tr.dense().sub(&t.dense()).norm_fro() < 1e-11 * t.norm_fro());
        assert!(tr.orthonormality_defect() < 1e-11);
    }
}
