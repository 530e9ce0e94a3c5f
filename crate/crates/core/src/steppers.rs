//! Time integrators: classical explicit Runge-Kutta on dense state (used
//! for reference trajectories), projected RK on factored state with
//! orthogonal or oblique tangent projections, and projected exponential RK
//! for split fields F = L + G with L[Y] = D Y + Y D.
//!
//! Stage arithmetic never densifies: stage values are outer-product sums of
//! width at most r + 2sr, truncated back to rank r where the scheme says so.

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::deim::SelectorKind;
use crate::error::Error;
use crate::kernels::{truncate_rank, ExpEngine, FactoredMatrix, OuterProductSum, PhiKind};
use crate::manifold::{
    self, build_oblique_pair, project_orthogonal, project_orthogonal_sum, TangentFactored,
    GROWTH_GUARD,
};
use crate::mat::Mat;
use crate::problems::MatrixField;
use crate::scalar::Scalar;

/// Coefficients of an explicit RK method (strictly lower triangular A).
#[derive(Clone, Debug)]
pub struct ButcherTableau {
    pub name: &'static str,
    pub a: Vec<Vec<f64>>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
    pub order: usize,
}

impl ButcherTableau {
    pub fn stages(&self) -> usize {
        self.b.len()
    }

    fn assemble(name: &'static str, a: Vec<Vec<f64>>, b: Vec<f64>, order: usize) -> Self {
        let c = a.iter().map(|row| row.iter().sum()).collect();
        let t = ButcherTableau { name, a, b, c, order };
        debug_assert!((t.b.iter().sum::<f64>() - 1.0).abs() < 1e-14, "consistency");
        t
    }

    /// Projected Euler.
    pub fn prk1() -> Self {
        Self::assemble("prk1", vec![vec![]], vec![1.0], 1)
    }

    pub fn prk2() -> Self {
        Self::assemble("prk2", vec![vec![], vec![1.0]], vec![0.5, 0.5], 2)
    }

    pub fn prk3() -> Self {
        Self::assemble(
            "prk3",
            vec![vec![], vec![1.0 / 3.0], vec![0.0, 2.0 / 3.0]],
            vec![0.25, 0.0, 0.75],
            3,
        )
    }

    pub fn rk4() -> Self {
        Self::assemble(
            "rk4",
            vec![
                vec![],
                vec![0.5],
                vec![0.0, 0.5],
                vec![0.0, 0.0, 1.0],
            ],
            vec![1.0 / 6.0, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 6.0],
            4,
        )
    }
}

/// Selector family without run-specific randomness; per-selection seeds are
/// drawn from the integrator's stream.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SelectorBase {
    Greedy,
    Qdeim,
    Srrqr { eta: f64 },
    Arp,
}

impl SelectorBase {
    fn kind(&self, rng: &mut ChaCha8Rng) -> SelectorKind {
        match self {
            SelectorBase::Greedy => SelectorKind::Greedy,
            SelectorBase::Qdeim => SelectorKind::Qdeim,
            SelectorBase::Srrqr { eta } => SelectorKind::Srrqr { eta: *eta },
            SelectorBase::Arp => SelectorKind::Arp { seed: rng.random() },
        }
    }
}

impl std::fmt::Display for SelectorBase {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SelectorBase::Greedy => write!(f, "greedy"),
            SelectorBase::Qdeim => write!(f, "qdeim"),
            SelectorBase::Srrqr { eta } => write!(f, "srrqr:{eta}"),
            SelectorBase::Arp => write!(f, "arp"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ProjectionMode {
    Orthogonal,
    Oblique(SelectorBase),
}

#[derive(Clone, Debug)]
pub struct StepStats {
    pub growth_max: f64,
    pub sigma_first: f64,
    pub sigma_last: f64,
    pub degenerate: bool,
}

/// Per-step diagnostics gathered by the integration loop.
#[derive(Clone, Debug)]
pub struct StepRecord {
    pub step: usize,
    pub t: f64,
    pub sigma_first: f64,
    pub sigma_last: f64,
    pub growth_max: f64,
    pub wall_ms: f64,
    pub rel_err: Option<f64>,
    /// Cumulative sampled-scalar count of the driving field.
    pub queries: u64,
}

/// One explicit RK step on dense state.
pub fn rk_dense_step<S: Scalar>(
    a: &Mat<S>,
    h: f64,
    tableau: &ButcherTableau,
    field: &dyn MatrixField<S>,
) -> Result<Mat<S>, Error> {
    let s = tableau.stages();
    let mut ks: Vec<Mat<S>> = Vec::with_capacity(s);
    let mut stage = a.clone();
    for j in 0..s {
        if j > 0 {
            stage = a.clone();
            for (l, k) in ks.iter().enumerate() {
                let w = tableau.a[j][l];
                if w != 0.0 {
                    stage.axpy(S::from_re(h * w), k);
                }
            }
        }
        let mut k = Mat::zeros(a.nrows(), a.ncols());
        field.eval_dense_into(&stage, &mut k);
        if !k.all_finite() {
            return Err(Error::NonFiniteState { step: 0 });
        }
        ks.push(k);
    }
    let mut out = a.clone();
    for (j, k) in ks.iter().enumerate() {
        if tableau.b[j] != 0.0 {
            out.axpy(S::from_re(h * tableau.b[j]), k);
        }
    }
    Ok(out)
}

/// Tangent projection of F at a base point, in the requested mode.
fn project_field<S: Scalar>(
    base: &FactoredMatrix<S>,
    field: &dyn MatrixField<S>,
    mode: ProjectionMode,
    rng: &mut ChaCha8Rng,
    stage: usize,
) -> Result<(TangentFactored<S>, f64), Error> {
    match mode {
        ProjectionMode::Orthogonal => {
            let proj = match field.eval_factored(base, usize::MAX / 4) {
                Some(sum) => project_orthogonal_sum(base, &sum),
                None => project_orthogonal(base, &field.eval_dense(&base.dense())),
            };
            Ok((proj, 1.0))
        }
        ProjectionMode::Oblique(sel) => {
            let pair = build_oblique_pair(base, sel.kind(rng), GROWTH_GUARD).map_err(|e| {
                match e {
                    Error::GrowthGuard { growth, guard, .. } => Error::GrowthGuard {
                        growth,
                        guard,
                        stage: Some(stage),
                    },
                    other => other,
                }
            })?;
            let growth = pair.growth_product();
            let proj = manifold::project_oblique(base, field, &pair)?;
            Ok((proj, growth))
        }
    }
}

/// One projected RK step: stage values accumulate as outer-product sums,
/// each stage's projection is taken at the rank-r truncation of the stage,
/// and the final combination is truncated back to rank r.
pub fn prk_step<S: Scalar>(
    y: &FactoredMatrix<S>,
    h: f64,
    tableau: &ButcherTableau,
    field: &dyn MatrixField<S>,
    mode: ProjectionMode,
    rng: &mut ChaCha8Rng,
) -> Result<(FactoredMatrix<S>, StepStats), Error> {
    let s = tableau.stages();
    let r = y.rank();
    let (m, n) = (y.nrows(), y.ncols());
    let cap = r + 2 * s * r;
    let mut projections: Vec<TangentFactored<S>> = Vec::with_capacity(s);
    let mut growth_max = 1.0f64;
    let mut all_zero = true;
    for j in 0..s {
        let base = if j == 0 {
            y.clone()
        } else {
            let mut sum = OuterProductSum::new(m, n, cap);
            sum.push_factored(y)?;
            let mut nontrivial = false;
            for (l, p) in projections.iter().enumerate() {
                let w = tableau.a[j][l];
                if w != 0.0 {
                    p.push_scaled(&mut sum, h * w)?;
                    nontrivial = true;
                }
            }
            if nontrivial && !all_zero {
                truncate_rank(&sum, r)?.0
            } else {
                y.clone()
            }
        };
        let (proj, growth) = project_field(&base, field, mode, rng, j + 1)?;
        growth_max = growth_max.max(growth);
        if proj.a.norm_fro() != 0.0 || proj.b.norm_fro() != 0.0 {
            all_zero = false;
        }
        projections.push(proj);
    }
    if all_zero {
        // exact fixed point
        let sig = y.singular_values();
        return Ok((
            y.clone(),
            StepStats {
                growth_max,
                sigma_first: sig[0],
                sigma_last: sig[r - 1],
                degenerate: false,
            },
        ));
    }
    let mut sum = OuterProductSum::new(m, n, cap);
    sum.push_factored(y)?;
    for (j, p) in projections.iter().enumerate() {
        if tableau.b[j] != 0.0 {
            p.push_scaled(&mut sum, h * tableau.b[j])?;
        }
    }
    let (out, info) = truncate_rank(&sum, r)?;
    Ok((
        out,
        StepStats {
            growth_max,
            sigma_first: info.sigma[0],
            sigma_last: info.sigma[r - 1],
            degenerate: info.degenerate,
        },
    ))
}

/// Split field for the exponential integrators: L[Y] = D Y + Y D handled by
/// the exponential engine, the non-stiff remainder G sampled like any field.
pub struct SplitField<'a, S: Scalar> {
    pub engine: &'a ExpEngine,
    pub g: &'a dyn MatrixField<S>,
}

/// One projected exponential RK step of order 1 or 2:
///   order 1: Y+ = T_r(e^{hL} Y + h phi1(hL) K1),            K1 = P[G(Y)]
///   order 2: Z  = T_r(e^{hL} Y + h phi1(hL) K1)
///            Y+ = T_r(e^{hL} Y + h phi1(hL) K1 + h phi2(hL)(K2 - K1)),
///            K2 = P[G(Z)] at Z.
pub fn perk_step<S: Scalar>(
    y: &FactoredMatrix<S>,
    h: f64,
    split: &SplitField<'_, S>,
    order: usize,
    mode: ProjectionMode,
    rng: &mut ChaCha8Rng,
) -> Result<(FactoredMatrix<S>, StepStats), Error> {
    assert!(order == 1 || order == 2, "perk order must be 1 or 2");
    let r = y.rank();
    let (m, n) = (y.nrows(), y.ncols());
    let cap = usize::MAX / 4;
    let exp_u = split.engine.exp_action(h, &y.u).mul(&y.s);
    let exp_v = split.engine.exp_action(h, &y.v);
    let (k1, g1) = project_field(y, split.g, mode, rng, 1)?;
    let mut growth_max = g1;
    let mut k1sum = OuterProductSum::new(m, n, cap);
    k1.push_scaled(&mut k1sum, 1.0)?;
    let phi1 = split
        .engine
        .phi_sylvester_action(h, &k1sum, PhiKind::Phi1, cap)?;
    let mut zsum = OuterProductSum::new(m, n, cap);
    zsum.push(exp_u.clone(), exp_v.clone())?;
    for (l, rr) in phi1.terms() {
        zsum.push(l.clone(), rr.clone())?;
    }
    let (z, zinfo) = truncate_rank(&zsum, r)?;
    if order == 1 {
        return Ok((
            z,
            StepStats {
                growth_max,
                sigma_first: zinfo.sigma[0],
                sigma_last: zinfo.sigma[r - 1],
                degenerate: zinfo.degenerate,
            },
        ));
    }
    let (k2, g2) = project_field(&z, split.g, mode, rng, 2)?;
    growth_max = growth_max.max(g2);
    let mut dsum = OuterProductSum::new(m, n, cap);
    k2.push_scaled(&mut dsum, 1.0)?;
    k1.push_scaled(&mut dsum, -1.0)?;
    let phi2 = split
        .engine
        .phi_sylvester_action(h, &dsum, PhiKind::Phi2, cap)?;
    let mut fsum = OuterProductSum::new(m, n, cap);
    fsum.push(exp_u, exp_v)?;
    for (l, rr) in phi1.terms().iter().chain(phi2.terms()) {
        fsum.push(l.clone(), rr.clone())?;
    }
    let (out, info) = truncate_rank(&fsum, r)?;
    Ok((
        out,
        StepStats {
            growth_max,
            sigma_first: info.sigma[0],
            sigma_last: info.sigma[r - 1],
            degenerate: info.degenerate,
        },
    ))
}

/// A configured one-step method on factored matrix state.
pub enum MatrixStepper<'a, S: Scalar> {
    Prk {
        tableau: ButcherTableau,
        field: &'a dyn MatrixField<S>,
        mode: ProjectionMode,
    },
    Perk {
        order: usize,
        split: SplitField<'a, S>,
        mode: ProjectionMode,
    },
}

impl<'a, S: Scalar> MatrixStepper<'a, S> {
    pub fn field_stats(&self) -> &crate::problems::FieldStats {
        match self {
            MatrixStepper::Prk { field, .. } => field.stats(),
            MatrixStepper::Perk { split, .. } => split.g.stats(),
        }
    }

    pub fn step(
        &self,
        y: &FactoredMatrix<S>,
        h: f64,
        rng: &mut ChaCha8Rng,
    ) -> Result<(FactoredMatrix<S>, StepStats), Error> {
        match self {
            MatrixStepper::Prk {
                tableau,
                field,
                mode,
            } => prk_step(y, h, tableau, *field, *mode, rng),
            MatrixStepper::Perk { order, split, mode } => {
                perk_step(y, h, split, *order, *mode, rng)
            }
        }
    }
}

pub struct IntegrateOpts<'a, S: Scalar> {
    pub t0: f64,
    pub t_end: f64,
    pub h: f64,
    pub seed: u64,
    /// Reference states (t, dense) for the error column; matched within
    /// half a step.
    pub reference: Option<&'a [(f64, Mat<S>)]>,
}

pub struct IntegrationOutput<S: Scalar> {
    pub final_state: FactoredMatrix<S>,
    pub records: Vec<StepRecord>,
    /// Set when a step failed; records hold the trajectory up to the halt.
    pub error: Option<Error>,
    pub h_eff: f64,
}

/// Fixed-step loop. The step count is rounded so the horizon is hit
/// exactly; `h_eff` reports the step actually used. Deterministic for a
/// given seed.
pub fn integrate_matrix<S: Scalar>(
    stepper: &MatrixStepper<'_, S>,
    y0: FactoredMatrix<S>,
    opts: &IntegrateOpts<'_, S>,
) -> IntegrationOutput<S> {
    let duration = opts.t_end - opts.t0;
    assert!(duration > 0.0 && opts.h > 0.0);
    let n_steps = (duration / opts.h).round().max(1.0) as usize;
    let h_eff = duration / n_steps as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut y = y0;
    let mut records = Vec::with_capacity(n_steps);
    for step in 0..n_steps {
        let t_next = opts.t0 + (step + 1) as f64 * h_eff;
        let started = std::time::Instant::now();
        match stepper.step(&y, h_eff, &mut rng) {
            Ok((ynext, stats)) => {
                y = ynext;
                let wall_ms = started.elapsed().as_secs_f64() * 1e3;
                let rel_err = opts.reference.and_then(|refs| {
                    refs.iter()
                        .find(|(tr, _)| (tr - t_next).abs() < 0.5 * h_eff)
                        .map(|(_, rmat)| {
                            let diff = y.dense().sub(rmat).norm_fro();
                            diff / rmat.norm_fro()
                        })
                });
                let q = stepper.field_stats().snapshot();
                records.push(StepRecord {
                    step,
                    t: t_next,
                    sigma_first: stats.sigma_first,
                    sigma_last: stats.sigma_last,
                    growth_max: stats.growth_max,
                    wall_ms,
                    rel_err,
                    queries: q.0 + q.1 + q.2 + q.3 + q.4,
                });
            }
            Err(e) => {
                let e = match e {
                    Error::NonFiniteState { .. } => Error::NonFiniteState { step },
                    other => other,
                };
                return IntegrationOutput {
                    final_state: y,
                    records,
                    error: Some(e),
                    h_eff,
                };
            }
        }
    }
    IntegrationOutput {
        final_state: y,
        records,
        error: None,
        h_eff,
    }
}

/// Fast finite check: a NaN or infinity poisons the accumulated sum.
fn finite_by_sum<S: Scalar>(a: &Mat<S>) -> bool {
    let mut acc = 0.0f64;
    for x in a.data() {
        acc += x.re().abs() + x.im().abs();
    }
    acc.is_finite()
}

/// Dense fixed-step RK integration, storing states only at the requested
/// observation times (which must lie on the step grid). Stage buffers are
/// reused across steps.
pub fn integrate_dense_rk<S: Scalar>(
    a0: &Mat<S>,
    field: &dyn MatrixField<S>,
    tableau: &ButcherTableau,
    h: f64,
    t0: f64,
    t_end: f64,
    observe: &[f64],
) -> Result<Vec<(f64, Mat<S>)>, Error> {
    let duration = t_end - t0;
    let n_steps = (duration / h).round().max(1.0) as usize;
    let h_eff = duration / n_steps as f64;
    let s = tableau.stages();
    let (m, n) = a0.shape();
    let mut a = a0.clone();
    let mut stage = a0.clone();
    let mut ks: Vec<Mat<S>> = (0..s).map(|_| Mat::zeros(m, n)).collect();
    let mut out = Vec::new();
    let mut want: Vec<f64> = observe.to_vec();
    want.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let mut next_obs = 0usize;
    while next_obs < want.len() && want[next_obs] <= t0 + 0.25 * h_eff {
        out.push((t0, a.clone()));
        next_obs += 1;
    }
    for step in 0..n_steps {
        for j in 0..s {
            if j == 0 {
                field.eval_dense_into(&a, &mut ks[0]);
            } else {
                stage.data_mut().copy_from_slice(a.data());
                for (l, k) in ks[..j].iter().enumerate() {
                    let w = tableau.a[j][l];
                    if w != 0.0 {
                        stage.axpy(S::from_re(h_eff * w), k);
                    }
                }
                let (head, tail) = ks.split_at_mut(j);
                let _ = head;
                field.eval_dense_into(&stage, &mut tail[0]);
            }
        }
        for (j, k) in ks.iter().enumerate() {
            if tableau.b[j] != 0.0 {
                a.axpy(S::from_re(h_eff * tableau.b[j]), k);
            }
        }
        if !finite_by_sum(&a) {
            return Err(Error::NonFiniteState { step });
        }
        let t = t0 + (step + 1) as f64 * h_eff;
        while next_obs < want.len() && (want[next_obs] - t).abs() <= 0.5 * h_eff {
            out.push((t, a.clone()));
            next_obs += 1;
        }
    }
    if next_obs < want.len() {
        return Err(Error::ShapeMismatch {
            context: "observation time beyond the integration horizon".into(),
        });
    }
    Ok(out)
}

/// Dense reference for the stiff split problems: exponential RK2 in the
/// eigenbasis of D (the linear flow is exact; only G is sampled). Second
/// order in h, no stability restriction from L.
pub fn integrate_dense_split_exprk2(
    d_dense: &Mat<f64>,
    g: &dyn MatrixField<f64>,
    a0: &Mat<f64>,
    h: f64,
    t0: f64,
    t_end: f64,
    observe: &[f64],
) -> Result<Vec<(f64, Mat<f64>)>, Error> {
    let n = d_dense.nrows();
    let (vals, q) = crate::la::sym_eig(d_dense);
    let duration = t_end - t0;
    let n_steps = (duration / h).round().max(1.0) as usize;
    let h_eff = duration / n_steps as f64;
    // tables over lambda_i + lambda_j for the fixed step
    let mut e_tab = Mat::<f64>::zeros(n, n);
    let mut p1_tab = Mat::<f64>::zeros(n, n);
    let mut p2_tab = Mat::<f64>::zeros(n, n);
    for j in 0..n {
        for i in 0..n {
            let z = h_eff * (vals[i] + vals[j]);
            e_tab[(i, j)] = z.exp();
            p1_tab[(i, j)] = phi1(z);
            p2_tab[(i, j)] = phi2(z);
        }
    }
    let to_eig = |m: &Mat<f64>| q.h_mul(m).mul(&q);
    let from_eig = |m: &Mat<f64>| q.mul(m).mul_h(&q);
    let mut ahat = to_eig(a0);
    let mut out = Vec::new();
    let mut want: Vec<f64> = observe.to_vec();
    want.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let mut next_obs = 0usize;
    while next_obs < want.len() && want[next_obs] <= t0 + 0.25 * h_eff {
        out.push((t0, a0.clone()));
        next_obs += 1;
    }
    for step in 0..n_steps {
        let a_phys = from_eig(&ahat);
        let g1 = to_eig(&g.eval_dense(&a_phys));
        // stage: Z = e A + h phi1 G1
        let mut zhat = Mat::zeros(n, n);
        for j in 0..n {
            for i in 0..n {
                zhat[(i, j)] = e_tab[(i, j)] * ahat[(i, j)] + h_eff * p1_tab[(i, j)] * g1[(i, j)];
            }
        }
        let g2 = to_eig(&g.eval_dense(&from_eig(&zhat)));
        for j in 0..n {
            for i in 0..n {
                ahat[(i, j)] = zhat[(i, j)] + h_eff * p2_tab[(i, j)] * (g2[(i, j)] - g1[(i, j)]);
            }
        }
        if !ahat.all_finite() {
            return Err(Error::NonFiniteState { step });
        }
        let t = t0 + (step + 1) as f64 * h_eff;
        while next_obs < want.len() && (want[next_obs] - t).abs() <= 0.5 * h_eff {
            out.push((t, from_eig(&ahat)));
            next_obs += 1;
        }
    }
    Ok(out)
}

fn phi1(z: f64) -> f64 {
    if z.abs() < 1e-7 {
        1.0 + z / 2.0 + z * z / 6.0
    } else {
        (z.exp() - 1.0) / z
    }
}

fn phi2(z: f64) -> f64 {
    if z.abs() < 1e-5 {
        0.5 + z / 6.0 + z * z / 24.0
    } else {
        (z.exp() - 1.0 - z) / (z * z)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{KrylovConfig, PeriodicTridiag, SymOp};
    use crate::mat::{random_normal, random_orthonormal};
    use crate::problems::synthetic::{TangentLinearField, ZeroField};
    use crate::problems::DenseMatrixField;
    use std::sync::Arc;

    fn random_point(m: usize, n: usize, r: usize, seed: u64) -> FactoredMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        FactoredMatrix::new(
            random_orthonormal::<f64, _>(m, r, &mut rng),
            random_normal::<f64, _>(r, r, &mut rng),
            random_orthonormal::<f64, _>(n, r, &mut rng),
        )
    }

    fn dense_exp_series(a: &Mat<f64>) -> Mat<f64> {
        let n = a.nrows();
        let norm = a.norm_fro();
        let s = if norm > 0.25 {
            (norm / 0.25).log2().ceil() as i32
        } else {
            0
        };
        let b = a.scaled(0.5f64.powi(s));
        let mut term = Mat::<f64>::identity(n);
        let mut acc = Mat::<f64>::identity(n);
        for k in 1..=24 {
            term = term.mul(&b).scaled(1.0 / k as f64);
            acc = acc.add(&term);
        }
        for _ in 0..s {
            acc = acc.mul(&acc);
        }
        acc
    }

    #[test]
    fn rk_dense_zero_field_and_scalar_exponential() {
        let zero = ZeroField::<f64>::new((5, 4));
        let a = random_normal::<f64, _>(5, 4, &mut ChaCha8Rng::seed_from_u64(1));
        let out = rk_dense_step(&a, 0.3, &ButcherTableau::rk4(), &zero).unwrap();
        assert!(out.sub(&a).norm_fro() == 0.0);
        // scalar dA/dt = A via 1x1 matrices
        let f = DenseMatrixField::new((1, 1), |a: &Mat<f64>| a.clone());
        let mut x = Mat::from_fn(1, 1, |_, _| 1.0);
        x = rk_dense_step(&x, 0.1, &ButcherTableau::rk4(), &f).unwrap();
        assert!((x[(0, 0)] - 0.1f64.exp()).abs() < 1e-7);
    }

    #[test]
    fn rk_dense_linear_matrix_ode_has_order_four() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let d = random_normal::<f64, _>(8, 8, &mut rng);
        let d = d.add(&d.transpose()).scaled(0.25);
        let a0 = random_normal::<f64, _>(8, 8, &mut rng);
        let dc = d.clone();
        let f = DenseMatrixField::new((8, 8), move |a: &Mat<f64>| dc.mul(a));
        let exact = |t: f64| dense_exp_series(&d.scaled(t)).mul(&a0);
        let t_end = 1.0;
        let mut errs = Vec::new();
        for h in [0.1, 0.05] {
            let snaps =
                integrate_dense_rk(&a0, &f, &ButcherTableau::rk4(), h, 0.0, t_end, &[t_end])
                    .unwrap();
            errs.push(snaps[0].1.sub(&exact(t_end)).norm_fro());
        }
        let ratio = errs[0] / errs[1];
        assert!(ratio > 12.0 && ratio < 20.0, "rk4 ratio {ratio}");
    }

    #[test]
    fn prk_zero_field_is_fixed_point_exactly() {
        let y = random_point(12, 10, 3, 3);
        let zero = ZeroField::<f64>::new((12, 10));
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for mode in [
            ProjectionMode::Orthogonal,
            ProjectionMode::Oblique(SelectorBase::Qdeim),
        ] {
            let (out, _) = prk_step(&y, 0.1, &ButcherTableau::prk2(), &zero, mode, &mut rng).unwrap();
            assert!(out.dense().sub(&y.dense()).norm_fro() == 0.0);
        }
    }

    #[test]
    fn prk1_step_is_truncated_projected_euler() {
        let y = random_point(14, 11, 3, 4);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let fixed = random_normal::<f64, _>(14, 11, &mut ChaCha8Rng::seed_from_u64(5));
        let field = DenseMatrixField::new((14, 11), move |_: &Mat<f64>| fixed.clone());
        let h = 0.05;
        let (got, _) = prk_step(
            &y,
            h,
            &ButcherTableau::prk1(),
            &field,
            ProjectionMode::Oblique(SelectorBase::Qdeim),
            &mut rng,
        )
        .unwrap();
        // manual: T_r(Y + h * oblique projection at Y)
        let pair = build_oblique_pair(&y, SelectorKind::Qdeim, GROWTH_GUARD).unwrap();
        let proj = manifold::project_oblique(&y, &field, &pair).unwrap();
        let mut sum = OuterProductSum::new(14, 11, 16);
        sum.push_factored(&y).unwrap();
        proj.push_scaled(&mut sum, h).unwrap();
        let (want, _) = truncate_rank(&sum, 3).unwrap();
        assert!(got.dense().sub(&want.dense()).norm_fro() < 1e-13 * want.norm_fro());
    }

    #[test]
    fn prk_deim_matches_orthogonal_on_identity_like_bases() {
        // field supported on the leading r x r block keeps U, V identity-like,
        // where every selector returns growth 1
        let (m, n, r) = (10, 9, 3);
        let mut s0 = Mat::<f64>::zeros(r, r);
        s0[(0, 0)] = 2.0;
        s0[(1, 1)] = 1.0;
        s0[(2, 2)] = 0.5;
        let y = FactoredMatrix::new(
            Mat::identity_cols(m, &[0, 1, 2]),
            s0,
            Mat::identity_cols(n, &[0, 1, 2]),
        );
        let field = DenseMatrixField::new((m, n), move |a: &Mat<f64>| {
            Mat::from_fn(m, n, |i, j| {
                if i < r && j < r {
                    (a[(i, j)] + 1.0).sin()
                } else {
                    0.0
                }
            })
        });
        let mut rng1 = ChaCha8Rng::seed_from_u64(0);
        let mut rng2 = ChaCha8Rng::seed_from_u64(0);
        let mut y_orth = y.clone();
        let mut y_deim = y.clone();
        for _ in 0..5 {
            y_orth = prk_step(
                &y_orth,
                0.05,
                &ButcherTableau::prk2(),
                &field,
                ProjectionMode::Orthogonal,
                &mut rng1,
            )
            .unwrap()
            .0;
            let (yd, stats) = prk_step(
                &y_deim,
                0.05,
                &ButcherTableau::prk2(),
                &field,
                ProjectionMode::Oblique(SelectorBase::Qdeim),
                &mut rng2,
            )
            .unwrap();
            y_deim = yd;
            assert!((stats.growth_max - 1.0).abs() < 1e-10);
        }
        assert!(
            y_orth.dense().sub(&y_deim.dense()).norm_fro() < 1e-12 * y_orth.norm_fro()
        );
    }

    #[test]
    fn prk_exactness_orders_on_tangent_linear_field() {
        // flow e^{tM1} Y0 e^{tM2} stays rank r; PRK-DEIM keeps the classical order
        let (m, n, r) = (20, 15, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let m1 = random_normal::<f64, _>(m, m, &mut rng).scaled(0.5);
        let m2 = random_normal::<f64, _>(n, n, &mut rng).scaled(0.5);
        let y0 = random_point(m, n, r, 7);
        let field = TangentLinearField::new(m1.clone(), m2.clone());
        let t_end = 0.4;
        let exact = dense_exp_series(&m1.scaled(t_end))
            .mul(&y0.dense())
            .mul(&dense_exp_series(&m2.scaled(t_end)));
        for (tab, want_order) in [
            (ButcherTableau::prk1(), 1.0),
            (ButcherTableau::prk2(), 2.0),
            (ButcherTableau::prk3(), 3.0),
        ] {
            let mut errs = Vec::new();
            let hs = [0.04, 0.02, 0.01];
            for &h in &hs {
                let stepper = MatrixStepper::Prk {
                    tableau: tab.clone(),
                    field: &field,
                    mode: ProjectionMode::Oblique(SelectorBase::Qdeim),
                };
                let out = integrate_matrix(
                    &stepper,
                    y0.clone(),
                    &IntegrateOpts {
                        t0: 0.0,
                        t_end,
                        h,
                        seed: 11,
                        reference: None,
                    },
                );
                assert!(out.error.is_none());
                errs.push(out.final_state.dense().sub(&exact).norm_fro() / exact.norm_fro());
            }
            let slope = (errs[0] / errs[2]).ln() / (hs[0] / hs[2]).ln();
            assert!(
                (slope - want_order).abs() < 0.35,
                "{}: slope {slope}, errs {errs:?}",
                tab.name
            );
        }
    }

    #[test]
    fn perk_pure_linear_flow_is_exact_exp() {
        let n = 40;
        let op = Arc::new(PeriodicTridiag::laplacian_periodic(n, 0.02));
        let engine = ExpEngine::new(op.clone(), KrylovConfig::default());
        let zero = ZeroField::<f64>::new((n, n));
        let split = SplitField {
            engine: &engine,
            g: &zero,
        };
        let y = random_point(n, n, 4, 8);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let h = 0.3;
        let (out, _) = perk_step(&y, h, &split, 1, ProjectionMode::Orthogonal, &mut rng).unwrap();
        let e = dense_exp_series(&op.dense().scaled(h));
        let want = e.mul(&y.dense()).mul(&e);
        assert!(out.dense().sub(&want).norm_fro() < 1e-9 * want.norm_fro());
    }

    #[test]
    fn perk1_with_zero_operator_reduces_to_projected_euler() {
        let n = 18;
        let op = Arc::new(PeriodicTridiag::zero(n));
        let engine = ExpEngine::new(op, KrylovConfig::default());
        let fixed = random_normal::<f64, _>(n, n, &mut ChaCha8Rng::seed_from_u64(9));
        let fx = fixed.clone();
        let g = DenseMatrixField::new((n, n), move |_: &Mat<f64>| fx.clone());
        let split = SplitField { engine: &engine, g: &g };
        let y = random_point(n, n, 3, 10);
        let h = 0.07;
        let mut rng1 = ChaCha8Rng::seed_from_u64(0);
        let (out, _) =
            perk_step(&y, h, &split, 1, ProjectionMode::Oblique(SelectorBase::Qdeim), &mut rng1)
                .unwrap();
        let mut rng2 = ChaCha8Rng::seed_from_u64(0);
        let g2 = DenseMatrixField::new((n, n), move |_: &Mat<f64>| fixed.clone());
        let (want, _) = prk_step(
            &y,
            h,
            &ButcherTableau::prk1(),
            &g2,
            ProjectionMode::Oblique(SelectorBase::Qdeim),
            &mut rng2,
        )
        .unwrap();
        assert!(out.dense().sub(&want.dense()).norm_fro() < 1e-12 * want.norm_fro());
    }

    #[test]
    fn perk2_converges_second_order_on_a_stiff_split_problem() {
        // small Allen-Cahn-like split field; reference by the dense
        // exponential RK2 at a much smaller step
        let n = 32;
        let prob = crate::problems::AllenCahn2d::new(n, 0.05);
        let a0 = prob.initial();
        let y0 = FactoredMatrix::from_dense_truncated(&a0, 8);
        let op = prob.operator.clone();
        let engine = ExpEngine::new(op.clone(), KrylovConfig::default());
        let reaction = prob.reaction();
        let t_end = 0.5;
        let refs = integrate_dense_split_exprk2(
            &op.dense(),
            &reaction,
            &a0,
            1e-3,
            0.0,
            t_end,
            &[t_end],
        )
        .unwrap();
        let exact = &refs[0].1;
        let mut errs = Vec::new();
        // start from the truncated initial value; errors measured against the
        // full reference include the rank floor, so compare before it bites
        let hs = [0.1, 0.05, 0.025];
        for &h in &hs {
            let split = SplitField {
                engine: &engine,
                g: &reaction,
            };
            let stepper = MatrixStepper::Perk {
                order: 2,
                split,
                mode: ProjectionMode::Orthogonal,
            };
            let out = integrate_matrix(
                &stepper,
                y0.clone(),
                &IntegrateOpts {
                    t0: 0.0,
                    t_end,
                    h,
                    seed: 3,
                    reference: None,
                },
            );
            assert!(out.error.is_none(), "{:?}", out.error);
            errs.push(out.final_state.dense().sub(exact).norm_fro() / exact.norm_fro());
        }
        let slope = (errs[0] / errs[2]).ln() / (hs[0] / hs[2]).ln();
        assert!(slope > 1.5, "perk2 slope {slope}, errs {errs:?}");
    }

    #[test]
    fn integrate_is_deterministic_and_zero_field_trivial() {
        let y0 = random_point(10, 10, 2, 12);
        let zero = ZeroField::<f64>::new((10, 10));
        let stepper = MatrixStepper::Prk {
            tableau: ButcherTableau::prk2(),
            field: &zero,
            mode: ProjectionMode::Oblique(SelectorBase::Arp),
        };
        let opts = IntegrateOpts {
            t0: 0.0,
            t_end: 1.0,
            h: 0.1,
            seed: 42,
            reference: None,
        };
        let a = integrate_matrix(&stepper, y0.clone(), &opts);
        let b = integrate_matrix(&stepper, y0.clone(), &opts);
        assert!(a.error.is_none());
        assert!(a.final_state.dense().sub(&y0.dense()).norm_fro() == 0.0);
        for (ra, rb) in a.records.iter().zip(&b.records) {
            assert_eq!(ra.sigma_first.to_bits(), rb.sigma_first.to_bits());
            assert_eq!(ra.growth_max.to_bits(), rb.growth_max.to_bits());
        }
    }
}
