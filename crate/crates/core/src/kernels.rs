//! Factored linear-algebra kernels shared by all integrators: rank-r state,
//! outer-product sums, rank truncation without densification, exponential
//! and phi-function actions for Sylvester operators, and small Sylvester
//! solves.

use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, OnceLock};

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::Error;
use crate::la::{self, jacobi_svd, sym_eig, thin_qr};
use crate::mat::Mat;
use crate::scalar::Scalar;

/// Rank-r matrix in factored form Y = U S V^H with orthonormal U, V.
#[derive(Clone, Debug)]
pub struct FactoredMatrix<S: Scalar> {
    pub u: Mat<S>,
    pub s: Mat<S>,
    pub v: Mat<S>,
}

impl<S: Scalar> FactoredMatrix<S> {
    pub fn new(u: Mat<S>, s: Mat<S>, v: Mat<S>) -> Self {
        assert_eq!(u.ncols(), s.nrows());
        assert_eq!(s.nrows(), s.ncols());
        assert_eq!(v.ncols(), s.ncols());
        FactoredMatrix { u, s, v }
    }

    pub fn rank(&self) -> usize {
        self.s.nrows()
    }

    pub fn nrows(&self) -> usize {
        self.u.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.v.nrows()
    }

    pub fn dense(&self) -> Mat<S> {
        self.u.mul(&self.s).mul_h(&self.v)
    }

    pub fn norm_fro(&self) -> f64 {
        // orthonormal side factors: the norm is carried by S
        self.s.norm_fro()
    }

    /// Row i of the represented matrix, O((n + r) r).
    pub fn row_dense(&self, i: usize) -> Vec<S> {
        let r = self.rank();
        let mut us = vec![S::zero(); r];
        for (j, t) in us.iter_mut().enumerate() {
            for k in 0..r {
                *t += self.u[(i, k)] * self.s[(k, j)];
            }
        }
        let n = self.ncols();
        let mut out = vec![S::zero(); n];
        for (c, o) in out.iter_mut().enumerate() {
            for j in 0..r {
                *o += us[j] * self.v[(c, j)].conj();
            }
        }
        out
    }

    /// Column j of the represented matrix.
    pub fn col_dense(&self, j: usize) -> Vec<S> {
        let r = self.rank();
        let mut sv = vec![S::zero(); r];
        for (k, t) in sv.iter_mut().enumerate() {
            for l in 0..r {
                *t += self.s[(k, l)] * self.v[(j, l)].conj();
            }
        }
        let m = self.nrows();
        let mut out = vec![S::zero(); m];
        for (i, o) in out.iter_mut().enumerate() {
            for k in 0..r {
                *o += self.u[(i, k)] * sv[k];
            }
        }
        out
    }

    pub fn singular_values(&self) -> Vec<f64> {
        jacobi_svd(&self.s).sigma
    }

    pub fn orthonormality_defect(&self) -> f64 {
        self.u.orthonormality_defect().max(self.v.orthonormality_defect())
    }

    /// Best rank-r truncation of a dense matrix. Exact SVD at desk scale,
    /// seeded randomized range finder (two power iterations) for larger
    /// matrices with fast-decaying spectra.
    pub fn from_dense_truncated(a: &Mat<S>, r: usize) -> Self {
        let (m, n) = a.shape();
        assert!(r >= 1 && r <= m.min(n));
        if m.min(n) <= 192 {
            let mut s = jacobi_svd(a);
            la::apply_sign_convention(&mut s.u, &mut s.v);
            let mut sm = Mat::zeros(r, r);
            for i in 0..r {
                sm[(i, i)] = S::from_re(s.sigma[i]);
            }
            return FactoredMatrix::new(s.u.cols_range(0, r), sm, s.v.cols_range(0, r));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(0x10de1);
        let p = (r + 8).min(n);
        let omega = crate::mat::random_normal::<S, _>(n, p, &mut rng);
        let mut q = orth_cols(&a.mul(&omega));
        for _ in 0..2 {
            q = orth_cols(&Mat::mul_op(crate::mat::Op::H, a, crate::mat::Op::N, &q, S::one()));
            q = orth_cols(&a.mul(&q));
        }
        let b = q.h_mul(a); // p x n
        let mut s = jacobi_svd(&b);
        let mut u = q.mul(&s.u.cols_range(0, r));
        let mut v = s.v.cols_range(0, r);
        la::apply_sign_convention(&mut u, &mut v);
        let mut sm = Mat::zeros(r, r);
        for i in 0..r {
            sm[(i, i)] = S::from_re(s.sigma[i]);
        }
        s.sigma.truncate(r);
        FactoredMatrix::new(u, sm, v)
    }
}

fn orth_cols<S: Scalar>(a: &Mat<S>) -> Mat<S> {
    let (q, _) = thin_qr(a);
    q
}

/// Sum of outer products sum_i L_i R_i^H with a configurable width cap
/// (the rank budget the stage arithmetic is allowed to accumulate).
#[derive(Clone, Debug)]
pub struct OuterProductSum<S: Scalar> {
    nrows: usize,
    ncols: usize,
    cap: usize,
    terms: Vec<(Mat<S>, Mat<S>)>,
}

impl<S: Scalar> OuterProductSum<S> {
    pub fn new(nrows: usize, ncols: usize, cap: usize) -> Self {
        OuterProductSum {
            nrows,
            ncols,
            cap,
            terms: Vec::new(),
        }
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.nrows, self.ncols)
    }

    pub fn cap(&self) -> usize {
        self.cap
    }

    pub fn width(&self) -> usize {
        self.terms.iter().map(|(l, _)| l.ncols()).sum()
    }

    pub fn terms(&self) -> &[(Mat<S>, Mat<S>)] {
        &self.terms
    }

    pub fn push(&mut self, l: Mat<S>, r: Mat<S>) -> Result<(), Error> {
        assert_eq!(l.nrows(), self.nrows, "term row dimension");
        assert_eq!(r.nrows(), self.ncols, "term column dimension");
        assert_eq!(l.ncols(), r.ncols(), "term width");
        if self.width() + l.ncols() > self.cap {
            return Err(Error::WidthCapExceeded {
                width: self.width() + l.ncols(),
                cap: self.cap,
            });
        }
        self.terms.push((l, r));
        Ok(())
    }

    pub fn push_factored(&mut self, y: &FactoredMatrix<S>) -> Result<(), Error> {
        self.push(y.u.mul(&y.s), y.v.clone())
    }

    pub fn dense(&self) -> Mat<S> {
        let mut out = Mat::zeros(self.nrows, self.ncols);
        for (l, r) in &self.terms {
            out = out.add(&l.mul_h(r));
        }
        out
    }

    /// Stacked factors (L, R) with sum = L R^H.
    pub fn stacked(&self) -> (Mat<S>, Mat<S>) {
        assert!(!self.terms.is_empty(), "empty outer-product sum");
        let mut l = self.terms[0].0.clone();
        let mut r = self.terms[0].1.clone();
        for (li, ri) in &self.terms[1..] {
            l = l.hstack(li);
            r = r.hstack(ri);
        }
        (l, r)
    }

    pub fn all_finite(&self) -> bool {
        self.terms.iter().all(|(l, r)| l.all_finite() && r.all_finite())
    }
}

#[derive(Clone, Debug)]
pub struct TruncationInfo {
    /// Leading singular values of the truncated representation.
    pub sigma: Vec<f64>,
    /// Set when sigma_r / sigma_1 < 1e-14 (rank padded with arbitrary
    /// orthonormal directions).
    pub degenerate: bool,
}

/// Best rank-r approximation of an outer-product sum in the Frobenius norm,
/// computed without densifying: QR of the stacked side blocks, SVD of the
/// small middle matrix. Deterministic up to the documented sign convention.
pub fn truncate_rank<S: Scalar>(
    sum: &OuterProductSum<S>,
    r: usize,
) -> Result<(FactoredMatrix<S>, TruncationInfo), Error> {
    let (m, n) = sum.shape();
    assert!(r >= 1 && r <= m.min(n), "target rank out of range");
    if sum.width() == 0 {
        return Err(Error::ShapeMismatch {
            context: "truncate_rank on empty sum".into(),
        });
    }
    if !sum.all_finite() {
        return Err(Error::NonFinite {
            context: "truncate_rank input".into(),
        });
    }
    let (l, rr) = sum.stacked();
    let k = l.ncols();
    let (ql, tl) = thin_qr(&l);
    let (qr_, tr) = thin_qr(&rr);
    let mid = tl.mul_h(&tr); // k x k
    let keep = r.min(k);
    let (mut u, mut v, mut sigma);
    if k <= 48 {
        let mut svd = jacobi_svd(&mid);
        u = ql.mul(&svd.u.cols_range(0, keep));
        v = qr_.mul(&svd.v.cols_range(0, keep));
        sigma = svd.sigma.drain(..keep).collect::<Vec<f64>>();
    } else {
        // wide stage sums: right vectors from the Gram eigendecomposition,
        // left vectors by applying the middle matrix (leading part only)
        let gram = mid.mul_h(&mid); // actually mid^H mid is needed: use H,N
        let gram = {
            let _ = gram;
            Mat::mul_op(crate::mat::Op::H, &mid, crate::mat::Op::N, &mid, S::one())
        };
        let (ev, evecs) = la::eig::gram_eig(&gram);
        let kk = ev.len();
        sigma = (0..keep)
            .map(|j| ev[kk - 1 - j].max(0.0).sqrt())
            .collect::<Vec<f64>>();
        let mut vs = Mat::zeros(kk, keep);
        for j in 0..keep {
            vs.set_col(j, evecs.col(kk - 1 - j));
        }
        let mut us = mid.mul(&vs);
        for (j, s) in sigma.iter().enumerate() {
            if *s > 0.0 {
                for x in us.col_mut(j).iter_mut() {
                    *x = x.scale(1.0 / s);
                }
            }
        }
        let us = extend_orthonormal(&crate::la::orthonormalize_cols(&us, 1e-8), keep);
        u = ql.mul(&us);
        v = qr_.mul(&vs);
    }
    let mut degenerate = false;
    if keep < r {
        degenerate = true;
        u = extend_orthonormal(&u, r);
        v = extend_orthonormal(&v, r);
        sigma.resize(r, 0.0);
    }
    if sigma[0] > 0.0 && sigma[r - 1] / sigma[0] < 1e-14 {
        degenerate = true;
    }
    if sigma[0] == 0.0 {
        degenerate = true;
    }
    la::apply_sign_convention(&mut u, &mut v);
    let mut s = Mat::zeros(r, r);
    for i in 0..r {
        s[(i, i)] = S::from_re(sigma[i]);
    }
    Ok((
        FactoredMatrix::new(u, s, v),
        TruncationInfo { sigma, degenerate },
    ))
}

/// Epsilon-compression of an outer-product sum: QR of the stacked side
/// blocks and an SVD of the small middle matrix, keeping singular values
/// above `rel_tol` times the largest. Exact up to the dropped tail.
pub fn compress_sum<S: Scalar>(
    sum: &OuterProductSum<S>,
    rel_tol: f64,
) -> Result<OuterProductSum<S>, Error> {
    let (m, n) = sum.shape();
    if sum.width() == 0 {
        return Ok(sum.clone());
    }
    let (l, r) = sum.stacked();
    let (ql, tl) = thin_qr(&l);
    let (qr_, tr) = thin_qr(&r);
    let mid = tl.mul_h(&tr);
    let svd = jacobi_svd(&mid);
    let smax = svd.sigma[0];
    let keep = svd
        .sigma
        .iter()
        .take_while(|&&x| x > rel_tol * smax && x > 0.0)
        .count()
        .max(1);
    let mut us = ql.mul(&svd.u.cols_range(0, keep));
    for j in 0..keep {
        for x in us.col_mut(j).iter_mut() {
            *x = x.scale(svd.sigma[j]);
        }
    }
    let vs = qr_.mul(&svd.v.cols_range(0, keep));
    let mut out = OuterProductSum::new(m, n, sum.cap());
    out.push(us, vs)?;
    Ok(out)
}

/// Append deterministic orthonormal columns until `target` columns.
pub fn extend_orthonormal<S: Scalar>(a: &Mat<S>, target: usize) -> Mat<S> {
    let (m, k) = a.shape();
    assert!(target <= m);
    let mut cols: Vec<Vec<S>> = (0..k).map(|j| a.col(j).to_vec()).collect();
    let mut cand = 0usize;
    while cols.len() < target && cand < m {
        let mut v = vec![S::zero(); m];
        v[cand] = S::one();
        cand += 1;
        for _ in 0..2 {
            for b in &cols {
                let mut dot = S::zero();
                for i in 0..m {
                    dot += b[i].conj() * v[i];
                }
                for i in 0..m {
                    let t = v[i] - b[i] * dot;
                    v[i] = t;
                }
            }
        }
        let norm = v.iter().map(|x| x.abs_sq()).sum::<f64>().sqrt();
        if norm > 0.5 {
            for x in v.iter_mut() {
                *x = x.scale(1.0 / norm);
            }
            cols.push(v);
        }
    }
    assert_eq!(cols.len(), target, "orthonormal completion failed");
    let mut out = Mat::zeros(m, target);
    for (j, c) in cols.iter().enumerate() {
        out.set_col(j, c);
    }
    out
}

// ---------------------------------------------------------------------------
// Sparse symmetric operators
// ---------------------------------------------------------------------------

/// Real symmetric operator applied via matvec, with a shifted solve for the
/// extended Krylov space.
pub trait SymOp: Send + Sync {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[f64], y: &mut [f64]);
    /// Solve (D + shift I) y = b.
    fn solve_shifted(&self, shift: f64, b: &[f64], y: &mut [f64]) -> Result<(), Error>;
    fn dense(&self) -> Mat<f64>;
    /// Gershgorin-style upper bound on ||D||_2.
    fn norm_est(&self) -> f64;
}

/// scale * (tridiag(off, diag, off) + periodic corner entries).
#[derive(Clone, Debug)]
pub struct PeriodicTridiag {
    pub n: usize,
    pub diag: f64,
    pub off: f64,
    pub periodic: bool,
    pub scale: f64,
}

impl PeriodicTridiag {
    /// kappa * central second difference with periodic wrap on [0, 2pi).
    pub fn laplacian_periodic(n: usize, kappa: f64) -> Self {
        let dx = 2.0 * std::f64::consts::PI / n as f64;
        PeriodicTridiag {
            n,
            diag: -2.0,
            off: 1.0,
            periodic: true,
            scale: kappa / (dx * dx),
        }
    }

    /// Lattice tridiag(1, 0, 1) without wrap.
    pub fn lattice_hopping(n: usize) -> Self {
        PeriodicTridiag {
            n,
            diag: 0.0,
            off: 1.0,
            periodic: false,
            scale: 1.0,
        }
    }

    pub fn zero(n: usize) -> Self {
        PeriodicTridiag {
            n,
            diag: 0.0,
            off: 0.0,
            periodic: false,
            scale: 0.0,
        }
    }

    fn thomas(&self, shift: f64, extra_first: f64, extra_last: f64, b: &[f64], y: &mut [f64]) -> Result<(), Error> {
        // solve tridiag(off, diag + shift', off) y = b where the first/last
        // diagonal entries carry the Sherman-Morrison corrections
        let n = self.n;
        let d0 = self.scale * self.diag + shift;
        let off = self.scale * self.off;
        let mut cp = vec![0.0; n];
        let mut dp = vec![0.0; n];
        let mut wprev;
        {
            let w = d0 + extra_first;
            if w.abs() < 1e-300 {
                return Err(Error::SingularMatrix {
                    context: "thomas pivot".into(),
                });
            }
            cp[0] = off / w;
            dp[0] = b[0] / w;
            wprev = w;
        }
        let _ = wprev;
        for i in 1..n {
            let di = d0 + if i == n - 1 { extra_last } else { 0.0 };
            let w = di - off * cp[i - 1];
            if w.abs() < 1e-300 {
                return Err(Error::SingularMatrix {
                    context: "thomas pivot".into(),
                });
            }
            cp[i] = off / w;
            dp[i] = (b[i] - off * dp[i - 1]) / w;
            wprev = w;
        }
        let _ = wprev;
        y[n - 1] = dp[n - 1];
        for i in (0..n - 1).rev() {
            y[i] = dp[i] - cp[i] * y[i + 1];
        }
        Ok(())
    }
}

impl SymOp for PeriodicTridiag {
    fn dim(&self) -> usize {
        self.n
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let n = self.n;
        let s = self.scale;
        let (d, o) = (self.diag, self.off);
        for i in 0..n {
            let mut v = d * x[i];
            if i > 0 {
                v += o * x[i - 1];
            }
            if i + 1 < n {
                v += o * x[i + 1];
            }
            if self.periodic {
                if i == 0 {
                    v += o * x[n - 1];
                }
                if i == n - 1 {
                    v += o * x[0];
                }
            }
            y[i] = s * v;
        }
    }

    fn solve_shifted(&self, shift: f64, b: &[f64], y: &mut [f64]) -> Result<(), Error> {
        let n = self.n;
        assert!(n >= 3 || !self.periodic, "periodic solve needs n >= 3");
        if !self.periodic {
            return self.thomas(shift, 0.0, 0.0, b, y);
        }
        // Sherman-Morrison: corners beta = scale*off split off as
        // (1/alpha) w w^T with w = [alpha, 0, .., 0, beta]^T
        let beta = self.scale * self.off;
        if beta == 0.0 {
            return self.thomas(shift, 0.0, 0.0, b, y);
        }
        let b0 = self.scale * self.diag + shift;
        let alpha = -(b0.abs() + beta.abs());
        let extra_first = -alpha;
        let extra_last = -beta * beta / alpha;
        let mut z = vec![0.0; n];
        let mut w = vec![0.0; n];
        w[0] = alpha;
        w[n - 1] = beta;
        self.thomas(shift, extra_first, extra_last, b, y)?;
        self.thomas(shift, extra_first, extra_last, &w, &mut z)?;
        // x = y - z * (w^T y) / (alpha + w^T z)
        let wty = alpha * y[0] + beta * y[n - 1];
        let wtz = alpha * z[0] + beta * z[n - 1];
        let denom = alpha + wtz;
        if denom.abs() < 1e-300 {
            return Err(Error::SingularMatrix {
                context: "sherman-morrison denominator".into(),
            });
        }
        let f = wty / denom;
        for i in 0..n {
            y[i] -= f * z[i];
        }
        Ok(())
    }

    fn dense(&self) -> Mat<f64> {
        let n = self.n;
        Mat::from_fn(n, n, |i, j| {
            let mut v = 0.0;
            if i == j {
                v = self.diag;
            } else if i.abs_diff(j) == 1 {
                v = self.off;
            } else if self.periodic && i.abs_diff(j) == n - 1 {
                v = self.off;
            }
            self.scale * v
        })
    }

    fn norm_est(&self) -> f64 {
        self.scale.abs() * (self.diag.abs() + 2.0 * self.off.abs())
    }
}

// ---------------------------------------------------------------------------
// Exponential and phi-function actions
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PhiKind {
    Phi1,
    Phi2,
}

#[derive(Clone, Debug)]
pub struct KrylovConfig {
    /// Use a dense symmetric eigendecomposition when dim <= this.
    pub dense_threshold: usize,
    /// Forward and backward block powers added beyond the seed block.
    pub blocks: usize,
    /// Shift applied when D is singular in the extended (inverse) direction.
    pub eps_shift: f64,
    /// Warn when the a-posteriori residual estimate exceeds this times ||W||.
    pub residual_warn: f64,
    /// Relative singular-value cutoff when compressing phi outputs.
    pub phi_compress_tol: f64,
}

impl Default for KrylovConfig {
    fn default() -> Self {
        KrylovConfig {
            dense_threshold: 512,
            blocks: 2,
            eps_shift: 1e-10,
            residual_warn: 1e-8,
            phi_compress_tol: 1e-10,
        }
    }
}

/// Exponential/phi actions for the Sylvester operator L[Y] = D Y + Y D.
pub struct ExpEngine {
    op: Arc<dyn SymOp>,
    cfg: KrylovConfig,
    dense_eig: OnceLock<(Vec<f64>, Mat<f64>)>,
    // phi weight tables over lambda_i + lambda_j, cached per (h, kind)
    phi_tables: std::sync::Mutex<std::collections::HashMap<(u64, u8), Arc<Mat<f64>>>>,
    warned_residual: AtomicBool,
    warned_breakdown: AtomicBool,
}

impl ExpEngine {
    pub fn new(op: Arc<dyn SymOp>, cfg: KrylovConfig) -> Self {
        ExpEngine {
            op,
            cfg,
            dense_eig: OnceLock::new(),
            phi_tables: std::sync::Mutex::new(std::collections::HashMap::new()),
            warned_residual: AtomicBool::new(false),
            warned_breakdown: AtomicBool::new(false),
        }
    }

    fn phi_table(&self, h: f64, kind: PhiKind) -> Arc<Mat<f64>> {
        let key = (h.to_bits(), if kind == PhiKind::Phi1 { 1u8 } else { 2 });
        let mut guard = self.phi_tables.lock().unwrap();
        if let Some(t) = guard.get(&key) {
            return t.clone();
        }
        let (vals, _) = self.eig();
        let n = vals.len();
        let mut tab = Mat::<f64>::zeros(n, n);
        for j in 0..n {
            for i in 0..n {
                let z = vals[i] + vals[j];
                tab[(i, j)] = match kind {
                    // h * phi1(h z) and h * phi2(h z)
                    PhiKind::Phi1 => {
                        if (h * z).abs() < 1e-7 {
                            h * (1.0 + h * z / 2.0 + h * z * h * z / 6.0)
                        } else {
                            ((h * z).exp() - 1.0) / z
                        }
                    }
                    PhiKind::Phi2 => {
                        if (h * z).abs() < 1e-5 {
                            h * (0.5 + h * z / 6.0 + h * z * h * z / 24.0)
                        } else {
                            ((h * z).exp() - 1.0 - h * z) / (h * z * z)
                        }
                    }
                };
            }
        }
        let t = Arc::new(tab);
        guard.insert(key, t.clone());
        t
    }

    /// Dense-eigenbasis phi action for dim <= threshold: exact weights on
    /// the spectrum, then a seeded randomized range compression of the
    /// (numerically low-rank) result back to factored form.
    fn phi_dense<S: Scalar>(
        &self,
        h: f64,
        kl: &Mat<S>,
        kr: &Mat<S>,
        kind: PhiKind,
        out_cap: usize,
    ) -> Result<OuterProductSum<S>, Error> {
        let n = self.op.dim();
        let k = kl.ncols();
        let (_, q) = self.eig();
        let tab = self.phi_table(h, kind);
        let qs = q.cast::<S>();
        let klh = qs.h_mul(kl);
        let krh = qs.h_mul(kr);
        let mut x = klh.mul_h(&krh); // n x n in eigen coordinates
        for j in 0..n {
            for (xi, ti) in x.col_mut(j).iter_mut().zip(tab.col(j)) {
                *xi = xi.scale(*ti);
            }
        }
        // randomized range finder with one power pass
        let w = ((2 * self.cfg.blocks + 1) * k + 8).min(n);
        let mut rng = ChaCha8Rng::seed_from_u64(0x9e3779b97f4a7c15);
        let omega = crate::mat::random_normal::<S, _>(n, w, &mut rng);
        let y0 = x.mul(&omega);
        let (qy, _) = thin_qr(&Mat::mul_op(
            crate::mat::Op::H,
            &x,
            crate::mat::Op::N,
            &y0,
            S::one(),
        ));
        let (qhat, _) = thin_qr(&x.mul(&qy));
        let b = qhat.h_mul(&x); // w x n
        // exact residual via the norm defect
        let res2 = (x.norm_fro().powi(2) - b.norm_fro().powi(2)).max(0.0);
        if res2.sqrt() > self.cfg.residual_warn * x.norm_fro().max(1e-300)
            && !self.warned_residual.swap(true, Ordering::Relaxed)
        {
            eprintln!(
                "warning: dense phi compression residual {:.2e} above threshold",
                res2.sqrt()
            );
        }
        // compress the wide factor to its numerical row space
        let gram = b.mul_h(&b);
        let (ev, evecs) = la::eig::gram_eig(&gram);
        let lam_max = ev.last().copied().unwrap_or(0.0).max(0.0);
        let lam_tol = self.cfg.phi_compress_tol * self.cfg.phi_compress_tol;
        let keep: Vec<usize> = (0..ev.len()).filter(|&i| ev[i] > lam_max * lam_tol).collect();
        let keep = if keep.is_empty() { vec![ev.len() - 1] } else { keep };
        let vkeep = evecs.select_cols(&keep);
        let left = qs.mul(&qhat.mul(&vkeep));
        let right = qs.mul(&Mat::mul_op(
            crate::mat::Op::H,
            &b,
            crate::mat::Op::N,
            &vkeep,
            S::one(),
        ));
        let mut out = OuterProductSum::new(n, n, out_cap);
        out.push(left, right)?;
        Ok(out)
    }

    pub fn op(&self) -> &Arc<dyn SymOp> {
        &self.op
    }

    fn eig(&self) -> &(Vec<f64>, Mat<f64>) {
        self.dense_eig.get_or_init(|| sym_eig(&self.op.dense()))
    }

    /// exp(h D) W by dense eigendecomposition (dim <= threshold) or an
    /// extended Krylov space built from W.
    pub fn exp_action<S: Scalar>(&self, h: f64, w: &Mat<S>) -> Mat<S> {
        if h == 0.0 || w.ncols() == 0 {
            return w.clone();
        }
        let n = self.op.dim();
        assert_eq!(w.nrows(), n);
        if n <= self.cfg.dense_threshold {
            let (vals, q) = self.eig();
            return per_plane(w, |plane| {
                let mut c = Mat::mul_op(crate::mat::Op::H, q, crate::mat::Op::N, &plane, 1.0);
                for j in 0..c.ncols() {
                    for i in 0..c.nrows() {
                        c[(i, j)] *= (h * vals[i]).exp();
                    }
                }
                q.mul(&c)
            });
        }
        per_plane(w, |plane| self.krylov_exp(h, &plane))
    }

    fn krylov_exp(&self, h: f64, w: &Mat<f64>) -> Mat<f64> {
        let q = self.krylov_basis(w);
        let g = self.project(&q);
        let (vals, vecs) = sym_eig(&g);
        let mut c = q.h_mul(w); // basis^T w
        c = vecs.h_mul(&c);
        for j in 0..c.ncols() {
            for i in 0..c.nrows() {
                c[(i, j)] *= (h * vals[i]).exp();
            }
        }
        let x = q.mul(&vecs.mul(&c));
        // a-posteriori residual estimate: h * ||(I - QQ^T) D X||
        let mut dx = Mat::zeros(x.nrows(), x.ncols());
        for j in 0..x.ncols() {
            let mut out = vec![0.0; x.nrows()];
            self.op.apply(x.col(j), &mut out);
            dx.col_mut(j).copy_from_slice(&out);
        }
        let proj = q.mul(&q.h_mul(&dx));
        let est = h * dx.sub(&proj).norm_fro();
        if est > self.cfg.residual_warn * w.norm_fro() && !self.warned_residual.swap(true, Ordering::Relaxed)
        {
            eprintln!(
                "warning: krylov exp residual estimate {est:.2e} above {:.1e} * ||W||; \
                 consider raising the block count",
                self.cfg.residual_warn
            );
        }
        x
    }

    /// Orthonormal basis of the extended block Krylov space
    /// span{W, DW, .., D^q W, D^-1 W, .., D^-q W}, q = cfg.blocks.
    fn krylov_basis(&self, w: &Mat<f64>) -> Mat<f64> {
        let n = self.op.dim();
        let k = w.ncols();
        let mut blocks = w.clone();
        let mut fwd = w.clone();
        let mut bwd = w.clone();
        for _ in 0..self.cfg.blocks {
            let mut nf = Mat::zeros(n, k);
            for j in 0..k {
                let mut out = vec![0.0; n];
                self.op.apply(fwd.col(j), &mut out);
                nf.col_mut(j).copy_from_slice(&out);
            }
            fwd = nf;
            blocks = blocks.hstack(&fwd);
            let mut nb = Mat::zeros(n, k);
            for j in 0..k {
                let mut out = vec![0.0; n];
                let res = self.op.solve_shifted(0.0, bwd.col(j), &mut out);
                if res.is_err() {
                    self.op
                        .solve_shifted(self.cfg.eps_shift * self.op.norm_est().max(1.0), bwd.col(j), &mut out)
                        .expect("shifted solve");
                }
                nb.col_mut(j).copy_from_slice(&out);
            }
            bwd = nb;
            blocks = blocks.hstack(&bwd);
        }
        let q = la::orthonormalize_cols(&blocks, 1e-12);
        if q.ncols() < blocks.ncols() && !self.warned_breakdown.swap(true, Ordering::Relaxed) {
            eprintln!(
                "warning: krylov basis breakdown, reduced to {} of {} columns",
                q.ncols(),
                blocks.ncols()
            );
        }
        q
    }

    fn project(&self, q: &Mat<f64>) -> Mat<f64> {
        let n = self.op.dim();
        let mut dq = Mat::zeros(n, q.ncols());
        for j in 0..q.ncols() {
            let mut out = vec![0.0; n];
            self.op.apply(q.col(j), &mut out);
            dq.col_mut(j).copy_from_slice(&out);
        }
        let g = q.h_mul(&dq);
        // symmetrize
        g.add(&g.transpose()).scaled(0.5)
    }

    /// h*phi1(hL)[K] or h*phi2(hL)[K] for L[Y] = D Y + Y D, K factored.
    ///
    /// Builds extended Krylov bases from K's side factors, projects D, and
    /// solves the small Sylvester systems
    ///   G_L Z1 + Z1 G_R^T = e^{h G_L} S e^{h G_R^T} - S,
    ///   G_L Z2 + Z2 G_R^T = h e^{h G_L} S e^{h G_R^T} - Z1,
    /// returning Z1 for phi1 and Z1 - Z2/h for phi2, lifted by the bases.
    /// A spectral collision in the small solve falls back to composite
    /// 8-node Gauss quadrature of the defining integrals.
    pub fn phi_sylvester_action<S: Scalar>(
        &self,
        h: f64,
        k: &OuterProductSum<S>,
        kind: PhiKind,
        out_cap: usize,
    ) -> Result<OuterProductSum<S>, Error> {
        let (m, n) = k.shape();
        assert_eq!(m, self.op.dim());
        assert_eq!(n, self.op.dim());
        if k.width() == 0 || h == 0.0 {
            return Ok(OuterProductSum::new(m, n, out_cap));
        }
        if !k.all_finite() {
            return Err(Error::NonFinite {
                context: "phi action input".into(),
            });
        }
        let compressed;
        let k = if k.terms().len() > 1 {
            compressed = compress_sum(k, 1e-13)?;
            &compressed
        } else {
            k
        };
        let (kl, kr) = k.stacked();
        if m <= self.cfg.dense_threshold {
            return self.phi_dense(h, &kl, &kr, kind, out_cap);
        }
        let ql = self.krylov_basis(&real_span(&kl));
        let qr = self.krylov_basis(&real_span(&kr));
        let gl = self.project(&ql);
        let gr = self.project(&qr);
        // S~ = QL^H K QR = (QL^H KL)(QR^H KR)^H, computed in the scalar type
        let qls = ql.cast::<S>();
        let qrs = qr.cast::<S>();
        let st = qls.h_mul(&kl).mul_h(&qrs.h_mul(&kr));
        let (lv, lq) = sym_eig(&gl);
        let (rv, rq) = sym_eig(&gr);
        let ehl = exp_small(&lv, &lq, h);
        let ehr = exp_small(&rv, &rq, h);
        let ehl_s = ehl.cast::<S>();
        let ehr_s = ehr.cast::<S>();
        // RHS1 = e^{hGL} S e^{hGR^T} - S  (GR symmetric so e^{hGR^T} = e^{hGR})
        let esr = ehl_s.mul(&st).mul(&ehr_s);
        let rhs1 = esr.sub(&st);
        let gap_tol = 1e-12 * (gl.norm_fro() + gr.norm_fro()).max(1e-300);
        let z1 = match sylvester_from_sym_eigs(&lv, &lq, &rv, &rq, &rhs1, gap_tol) {
            Ok(z) => z,
            Err(Error::SpectralCollision { .. }) => {
                if !self.warned_residual.swap(true, Ordering::Relaxed) {
                    eprintln!("warning: phi action fell back to quadrature (spectral collision)");
                }
                quadrature_integral(&lv, &lq, &rv, &rq, &st, h, false)
            }
            Err(e) => return Err(e),
        };
        let zout = match kind {
            PhiKind::Phi1 => z1,
            PhiKind::Phi2 => {
                let rhs2 = esr.scaled(h).sub(&z1);
                let z2 = match sylvester_from_sym_eigs(&lv, &lq, &rv, &rq, &rhs2, gap_tol) {
                    Ok(z) => z,
                    Err(Error::SpectralCollision { .. }) => {
                        quadrature_integral(&lv, &lq, &rv, &rq, &st, h, true)
                    }
                    Err(e) => return Err(e),
                };
                z1.sub(&z2.scaled(1.0 / h))
            }
        };
        // compress the small middle matrix to its numerical row space so
        // the lifted term does not inflate downstream stage widths
        let gram = Mat::mul_op(crate::mat::Op::H, &zout, crate::mat::Op::N, &zout, S::one());
        let (ev, evecs) = la::eig::gram_eig(&gram);
        let lam_max = ev.last().copied().unwrap_or(0.0).max(0.0);
        let lam_tol = self.cfg.phi_compress_tol * self.cfg.phi_compress_tol;
        let keep: Vec<usize> = (0..ev.len())
            .filter(|&i| ev[i] > lam_max * lam_tol)
            .collect();
        let keep = if keep.is_empty() { vec![ev.len() - 1] } else { keep };
        let vkeep = evecs.select_cols(&keep);
        let mut out = OuterProductSum::new(m, n, out_cap);
        out.push(qls.mul(&zout.mul(&vkeep)), qrs.mul(&vkeep))?;
        Ok(out)
    }
}

/// Stack real and imaginary planes of a scalar matrix into an f64 matrix.
fn real_span<S: Scalar>(a: &Mat<S>) -> Mat<f64> {
    if !S::IS_COMPLEX {
        return a.map(|x| x.re());
    }
    let re = a.map(|x| x.re());
    let im = a.map(|x| x.im());
    re.hstack(&im)
}

fn per_plane<S: Scalar>(w: &Mat<S>, f: impl Fn(Mat<f64>) -> Mat<f64>) -> Mat<S> {
    if !S::IS_COMPLEX {
        return f(w.map(|x| x.re())).cast::<S>();
    }
    let re = f(w.map(|x| x.re()));
    let im = f(w.map(|x| x.im()));
    Mat::from_fn(w.nrows(), w.ncols(), |i, j| {
        S::from_parts(re[(i, j)], im[(i, j)])
    })
}

fn exp_small(vals: &[f64], vecs: &Mat<f64>, h: f64) -> Mat<f64> {
    let p = vals.len();
    let mut c = Mat::zeros(p, p);
    for i in 0..p {
        c[(i, i)] = (h * vals[i]).exp();
    }
    vecs.mul(&c).mul_h(vecs)
}

/// Composite 8-node Gauss-Legendre evaluation of
/// int_0^h tau^pow e^{tau GL} S e^{tau GR} dtau (pow in {0, 1}).
fn quadrature_integral<S: Scalar>(
    lv: &[f64],
    lq: &Mat<f64>,
    rv: &[f64],
    rq: &Mat<f64>,
    st: &Mat<S>,
    h: f64,
    weighted_tau: bool,
) -> Mat<S> {
    // 8-point Gauss-Legendre nodes/weights on [-1, 1]
    const X: [f64; 8] = [
        -0.9602898564975363,
        -0.7966664774136267,
        -0.5255324099163290,
        -0.1834346424956498,
        0.1834346424956498,
        0.5255324099163290,
        0.7966664774136267,
        0.9602898564975363,
    ];
    const W: [f64; 8] = [
        0.1012285362903763,
        0.2223810344533745,
        0.3137066458778873,
        0.3626837833783620,
        0.3626837833783620,
        0.3137066458778873,
        0.2223810344533745,
        0.1012285362903763,
    ];
    let lmax = lv.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
    let rmax = rv.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
    let panels = (1.0 + h * (lmax + rmax) / 4.0).ceil() as usize;
    let lqs = lq.cast::<S>();
    let rqs = rq.cast::<S>();
    let core = lqs.h_mul(st).mul(&rqs); // LQ^T S RQ in eigbases
    let mut acc = Mat::<S>::zeros(st.nrows(), st.ncols());
    let dp = h / panels as f64;
    for p in 0..panels {
        let a = p as f64 * dp;
        for q in 0..8 {
            let tau = a + 0.5 * dp * (X[q] + 1.0);
            let wq = 0.5 * dp * W[q] * if weighted_tau { tau } else { 1.0 };
            let mut term = core.clone();
            for j in 0..term.ncols() {
                for i in 0..term.nrows() {
                    term[(i, j)] = term[(i, j)].scale((tau * lv[i]).exp() * (tau * rv[j]).exp() * wq);
                }
            }
            acc = acc.add(&term);
        }
    }
    lqs.mul(&acc).mul_h(&rqs)
}

// ---------------------------------------------------------------------------
// Small Sylvester solves
// ---------------------------------------------------------------------------

/// Eig-route Sylvester solve A X + X B = C with precomputed real symmetric
/// eigendecompositions of A and B.
fn sylvester_from_sym_eigs<S: Scalar>(
    av: &[f64],
    aq: &Mat<f64>,
    bv: &[f64],
    bq: &Mat<f64>,
    c: &Mat<S>,
    gap_tol: f64,
) -> Result<Mat<S>, Error> {
    let mut min_gap = f64::INFINITY;
    for &la in av {
        for &lb in bv {
            min_gap = min_gap.min((la + lb).abs());
        }
    }
    if min_gap <= gap_tol {
        return Err(Error::SpectralCollision { min_gap });
    }
    let aqs = aq.cast::<S>();
    let bqs = bq.cast::<S>();
    let mut ct = aqs.h_mul(c).mul(&bqs);
    for j in 0..ct.ncols() {
        for i in 0..ct.nrows() {
            ct[(i, j)] = ct[(i, j)].scale(1.0 / (av[i] + bv[j]));
        }
    }
    Ok(aqs.mul(&ct).mul_h(&bqs))
}

/// Solve A X + X B = C for small dense A (p x p), B (q x q).
///
/// Symmetric real pairs go through the eigendecomposition; the general case
/// uses a complex Schur form with triangular back-substitution. Errors with
/// the minimal |lambda_A + lambda_B| when the spectra collide.
pub fn solve_small_sylvester<S: Scalar>(
    a: &Mat<S>,
    b: &Mat<S>,
    c: &Mat<S>,
) -> Result<Mat<S>, Error> {
    let p = a.nrows();
    let q = b.nrows();
    assert_eq!(a.ncols(), p);
    assert_eq!(b.ncols(), q);
    assert_eq!(c.shape(), (p, q), "sylvester rhs shape");
    let scale = a.norm_fro() + b.norm_fro();
    let gap_tol = 1e-12 * scale.max(1e-300);

    let sym = |m: &Mat<S>| -> bool { m.sub(&m.adjoint()).norm_fro() <= 1e-13 * (1.0 + m.norm_fro()) };
    if !S::IS_COMPLEX && sym(a) && sym(b) {
        let (av, aq) = sym_eig(&a.map(|x| x.re()));
        let (bv, bq) = sym_eig(&b.map(|x| x.re()));
        return sylvester_from_sym_eigs(&av, &aq, &bv, &bq, c, gap_tol);
    }

    let ac = a.map(|x| x.to_c64());
    let bc = b.map(|x| x.to_c64());
    let cc = c.map(|x| x.to_c64());
    let (qa, ta) = la::complex_schur(&ac)?;
    let (qb, tb) = la::complex_schur(&bc)?;
    let mut min_gap = f64::INFINITY;
    for i in 0..p {
        for j in 0..q {
            min_gap = min_gap.min((ta[(i, i)] + tb[(j, j)]).abs());
        }
    }
    if min_gap <= gap_tol {
        return Err(Error::SpectralCollision { min_gap });
    }
    // TA Y + Y TB = QA^H C QB =: G with both factors upper triangular;
    // column j only couples to columns k < j.
    let g = qa.h_mul(&cc).mul(&qb);
    let mut y = Mat::<Complex64>::zeros(p, q);
    for j in 0..q {
        let mut rhs = Mat::zeros(p, 1);
        for i in 0..p {
            rhs[(i, 0)] = g[(i, j)];
        }
        for k in 0..j {
            let f = tb[(k, j)];
            for i in 0..p {
                let t = rhs[(i, 0)] - y[(i, k)] * f;
                rhs[(i, 0)] = t;
            }
        }
        let col = la::solve::solve_shifted_upper(&ta, tb[(j, j)], &rhs)?;
        for i in 0..p {
            y[(i, j)] = col[(i, 0)];
        }
    }
    let xc = qa.mul(&y).mul_h(&qb);
    Ok(xc.map(S::from_c64))
}
