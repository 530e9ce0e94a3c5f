//! Projected Runge-Kutta stepping on the fixed multilinear-rank manifold:
//! the matrix scheme with rank-r truncation replaced by HOSVD truncation
//! and the tangent projection by its Tucker counterpart.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::Error;
use crate::manifold::GROWTH_GUARD;
use crate::problems::TensorField;
use crate::scalar::Scalar;
use crate::steppers::{ButcherTableau, ProjectionMode, SelectorBase, StepRecord};

use super::project::{
    build_mode_grams, build_tucker_selections, project_oblique_tucker,
    project_orthogonal_tucker_dense, project_orthogonal_tucker_sum,
};
use super::tensor::{hosvd_truncate, hosvd_truncate_sum, Tensor3, TuckerSum, TuckerTensor};

#[derive(Clone, Debug)]
pub struct TuckerStepStats {
    pub growth_max: f64,
    pub sigma_first: f64,
    pub sigma_last: f64,
}

fn selector_kind(base: SelectorBase, rng: &mut ChaCha8Rng) -> crate::deim::SelectorKind {
    use rand::RngExt;
    match base {
        SelectorBase::Greedy => crate::deim::SelectorKind::Greedy,
        SelectorBase::Qdeim => crate::deim::SelectorKind::Qdeim,
        SelectorBase::Srrqr { eta } => crate::deim::SelectorKind::Srrqr { eta },
        SelectorBase::Arp => crate::deim::SelectorKind::Arp { seed: rng.random() },
    }
}

fn project_tucker_field<S: Scalar>(
    base: &TuckerTensor<S>,
    field: &dyn TensorField<S>,
    mode: ProjectionMode,
    rng: &mut ChaCha8Rng,
    stage: usize,
) -> Result<(TuckerTensor<S>, f64), Error> {
    let grams = build_mode_grams(base);
    match mode {
        ProjectionMode::Orthogonal => {
            let proj = match field.eval_tucker(base) {
                Some(sum) => project_orthogonal_tucker_sum(base, &sum, &grams),
                None => {
                    // desk-scale fallback through the dense projector
                    let f = field.eval_dense(&base.dense());
                    let dense = project_orthogonal_tucker_dense(base, &f);
                    hosvd_for_tangent(base, &dense)
                }
            };
            Ok((proj, 1.0))
        }
        ProjectionMode::Oblique(sel) => {
            let sels = build_tucker_selections(base, &grams, selector_kind(sel, rng), GROWTH_GUARD)
                .map_err(|e| match e {
                    Error::GrowthGuard { growth, guard, .. } => Error::GrowthGuard {
                        growth,
                        guard,
                        stage: Some(stage),
                    },
                    other => other,
                })?;
            let growth = sels.growth_max();
            let proj = project_oblique_tucker(base, field, &sels, &grams)?;
            Ok((proj, growth))
        }
    }
}

fn hosvd_for_tangent<S: Scalar>(base: &TuckerTensor<S>, dense: &Tensor3<S>) -> TuckerTensor<S> {
    let r = base.mode_ranks().0;
    let dims = base.dims();
    let cap = (2 * r).min(dims.0).min(dims.1).min(dims.2);
    hosvd_truncate(dense, cap)
}

/// One Tucker projected RK step with per-stage HOSVD truncation.
pub fn tucker_prk_step<S: Scalar>(
    y: &TuckerTensor<S>,
    h: f64,
    tableau: &ButcherTableau,
    field: &dyn TensorField<S>,
    mode: ProjectionMode,
    rng: &mut ChaCha8Rng,
) -> Result<(TuckerTensor<S>, TuckerStepStats), Error> {
    let s = tableau.stages();
    let r = y.mode_ranks().0;
    let dims = y.dims();
    let mut projections: Vec<TuckerTensor<S>> = Vec::with_capacity(s);
    let mut growth_max = 1.0f64;
    let mut all_zero = true;
    for j in 0..s {
        let base = if j == 0 {
            y.clone()
        } else {
            let mut sum = TuckerSum::new(dims);
            sum.push_scaled(y, 1.0);
            let mut nontrivial = false;
            for (l, p) in projections.iter().enumerate() {
                let w = tableau.a[j][l];
                if w != 0.0 {
                    sum.push_scaled(p, h * w);
                    nontrivial = true;
                }
            }
            if nontrivial && !all_zero {
                hosvd_truncate_sum(&sum, r).0
            } else {
                y.clone()
            }
        };
        let (proj, growth) = project_tucker_field(&base, field, mode, rng, j + 1)?;
        growth_max = growth_max.max(growth);
        if proj.core.norm_fro() != 0.0 {
            all_zero = false;
        }
        projections.push(proj);
    }
    if all_zero {
        return Ok((
            y.clone(),
            TuckerStepStats {
                growth_max,
                sigma_first: y.norm_fro(),
                sigma_last: y.norm_fro(),
            },
        ));
    }
    let mut sum = TuckerSum::new(dims);
    sum.push_scaled(y, 1.0);
    for (j, p) in projections.iter().enumerate() {
        if tableau.b[j] != 0.0 {
            sum.push_scaled(p, h * tableau.b[j]);
        }
    }
    let (out, sig) = hosvd_truncate_sum(&sum, r);
    let s0 = &sig[0];
    Ok((
        out,
        TuckerStepStats {
            growth_max,
            sigma_first: s0.first().copied().unwrap_or(0.0),
            sigma_last: s0.last().copied().unwrap_or(0.0),
        },
    ))
}

pub struct TuckerIntegrateOpts<'a, S: Scalar> {
    pub t0: f64,
    pub t_end: f64,
    pub h: f64,
    pub seed: u64,
    pub reference: Option<&'a [(f64, Tensor3<S>)]>,
}

pub struct TuckerIntegrationOutput<S: Scalar> {
    pub final_state: TuckerTensor<S>,
    pub records: Vec<StepRecord>,
    pub error: Option<Error>,
    pub h_eff: f64,
}

pub fn integrate_tucker<S: Scalar>(
    y0: TuckerTensor<S>,
    field: &dyn TensorField<S>,
    tableau: &ButcherTableau,
    mode: ProjectionMode,
    opts: &TuckerIntegrateOpts<'_, S>,
) -> TuckerIntegrationOutput<S> {
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
        match tucker_prk_step(&y, h_eff, tableau, field, mode, &mut rng) {
            Ok((ynext, stats)) => {
                y = ynext;
                let wall_ms = started.elapsed().as_secs_f64() * 1e3;
                let rel_err = opts.reference.and_then(|refs| {
                    refs.iter()
                        .find(|(tr, _)| (tr - t_next).abs() < 0.5 * h_eff)
                        .map(|(_, rten)| y.dense().sub(rten).norm_fro() / rten.norm_fro())
                });
                let q = field.stats().snapshot();
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
                return TuckerIntegrationOutput {
                    final_state: y,
                    records,
                    error: Some(e),
                    h_eff,
                }
            }
        }
    }
    TuckerIntegrationOutput {
        final_state: y,
        records,
        error: None,
        h_eff,
    }
}

/// Dense fixed-step RK on tensor state (reference trajectories), storing
/// states only at the requested observation times.
pub fn integrate_dense_rk_tensor<S: Scalar>(
    a0: &Tensor3<S>,
    field: &dyn TensorField<S>,
    tableau: &ButcherTableau,
    h: f64,
    t0: f64,
    t_end: f64,
    observe: &[f64],
) -> Result<Vec<(f64, Tensor3<S>)>, Error> {
    let duration = t_end - t0;
    let n_steps = (duration / h).round().max(1.0) as usize;
    let h_eff = duration / n_steps as f64;
    let s = tableau.stages();
    let mut a = a0.clone();
    let mut out = Vec::new();
    let mut want: Vec<f64> = observe.to_vec();
    want.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let mut next_obs = 0usize;
    while next_obs < want.len() && want[next_obs] <= t0 + 0.25 * h_eff {
        out.push((t0, a.clone()));
        next_obs += 1;
    }
    let mut ks: Vec<Tensor3<S>> = Vec::with_capacity(s);
    let mut stage = a.clone();
    for step in 0..n_steps {
        ks.clear();
        for j in 0..s {
            stage.data_mut().copy_from_slice(a.data());
            for (l, k) in ks.iter().enumerate() {
                let w = tableau.a[j][l];
                if w != 0.0 {
                    let hw = S::from_re(h_eff * w);
                    for (x, y) in stage.data_mut().iter_mut().zip(k.data()) {
                        *x += hw * *y;
                    }
                }
            }
            let k = field.eval_dense(&stage);
            ks.push(k);
        }
        let mut acc = 0.0f64;
        for (j, k) in ks.iter().enumerate() {
            if tableau.b[j] != 0.0 {
                let hb = S::from_re(h_eff * tableau.b[j]);
                for (x, y) in a.data_mut().iter_mut().zip(k.data()) {
                    *x += hb * *y;
                }
            }
        }
        for x in a.data() {
            acc += x.re().abs() + x.im().abs();
        }
        if !acc.is_finite() {
            return Err(Error::NonFiniteState { step });
        }
        let t = t0 + (step + 1) as f64 * h_eff;
        while next_obs < want.len() && (want[next_obs] - t).abs() <= 0.5 * h_eff {
            out.push((t, a.clone()));
            next_obs += 1;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mat::{random_normal, random_orthonormal};
    use crate::problems::synthetic::{TangentLinearTensorField, ZeroTensorField};
    use crate::scalar::Scalar;
    use rand::SeedableRng;

    fn random_state(n: usize, r: usize, seed: u64) -> TuckerTensor<f64> {
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

    fn dense_exp_series(a: &crate::mat::Mat<f64>) -> crate::mat::Mat<f64> {
        let n = a.nrows();
        let norm = a.norm_fro();
        let s = if norm > 0.25 {
            (norm / 0.25).log2().ceil() as i32
        } else {
            0
        };
        let b = a.scaled(0.5f64.powi(s));
        let mut term = crate::mat::Mat::<f64>::identity(n);
        let mut acc = crate::mat::Mat::<f64>::identity(n);
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
    fn zero_field_is_fixed_point() {
        let y = random_state(10, 2, 901);
        let zero = ZeroTensorField::<f64>::new((10, 10, 10));
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for mode in [
            ProjectionMode::Orthogonal,
            ProjectionMode::Oblique(SelectorBase::Qdeim),
        ] {
            let (out, _) =
                tucker_prk_step(&y, 0.1, &ButcherTableau::prk2(), &zero, mode, &mut rng).unwrap();
            assert!(out.dense().sub(&y.dense()).norm_fro() == 0.0);
        }
    }

    #[test]
    fn tucker_prk_orders_on_tangent_linear_field() {
        let (n, r) = (12, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(902);
        let ms = [
            random_normal::<f64, _>(n, n, &mut rng).scaled(0.4),
            random_normal::<f64, _>(n, n, &mut rng).scaled(0.4),
            random_normal::<f64, _>(n, n, &mut rng).scaled(0.4),
        ];
        let field = TangentLinearTensorField::new([ms[0].clone(), ms[1].clone(), ms[2].clone()]);
        let y0 = random_state(n, r, 903);
        let t_end = 0.4;
        let exact = y0
            .dense()
            .mode_product(0, &dense_exp_series(&ms[0].scaled(t_end)))
            .mode_product(1, &dense_exp_series(&ms[1].scaled(t_end)))
            .mode_product(2, &dense_exp_series(&ms[2].scaled(t_end)));
        for (tab, want) in [
            (ButcherTableau::prk1(), 1.0),
            (ButcherTableau::prk2(), 2.0),
            (ButcherTableau::prk3(), 3.0),
        ] {
            let hs = [0.05, 0.025, 0.0125];
            let mut errs = Vec::new();
            for &h in &hs {
                let out = integrate_tucker(
                    y0.clone(),
                    &field,
                    &tab,
                    ProjectionMode::Oblique(SelectorBase::Qdeim),
                    &TuckerIntegrateOpts {
                        t0: 0.0,
                        t_end,
                        h,
                        seed: 5,
                        reference: None,
                    },
                );
                assert!(out.error.is_none(), "{:?}", out.error);
                errs.push(out.final_state.dense().sub(&exact).norm_fro() / exact.norm_fro());
            }
            let slope = (errs[0] / errs[2]).ln() / (hs[0] / hs[2]).ln();
            assert!(
                (slope - want).abs() < 0.35,
                "{}: slope {slope}, errs {errs:?}",
                tab.name
            );
        }
    }

    #[test]
    fn deim_matches_orthogonal_with_structured_field() {
        // linear tangent field: both modes integrate the same dynamics, and
        // since the field is tangent the oblique projection is exact too
        let (n, r) = (10, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(904);
        let ms = [
            random_normal::<f64, _>(n, n, &mut rng).scaled(0.3),
            random_normal::<f64, _>(n, n, &mut rng).scaled(0.3),
            random_normal::<f64, _>(n, n, &mut rng).scaled(0.3),
        ];
        let field = TangentLinearTensorField::new(ms);
        let y0 = random_state(n, r, 905);
        let mut r1 = ChaCha8Rng::seed_from_u64(0);
        let mut r2 = ChaCha8Rng::seed_from_u64(0);
        let mut a = y0.clone();
        let mut b = y0.clone();
        for _ in 0..4 {
            a = tucker_prk_step(
                &a,
                0.05,
                &ButcherTableau::prk2(),
                &field,
                ProjectionMode::Orthogonal,
                &mut r1,
            )
            .unwrap()
            .0;
            b = tucker_prk_step(
                &b,
                0.05,
                &ButcherTableau::prk2(),
                &field,
                ProjectionMode::Oblique(SelectorBase::Qdeim),
                &mut r2,
            )
            .unwrap()
            .0;
        }
        assert!(a.dense().sub(&b.dense()).norm_fro() < 1e-10 * a.norm_fro());
    }

    #[test]
    fn dense_tensor_rk_reference_runs() {
        let n = 8;
        let zero = ZeroTensorField::<f64>::new((n, n, n));
        let a0 = random_state(n, 2, 906).dense();
        let snaps =
            integrate_dense_rk_tensor(&a0, &zero, &ButcherTableau::rk4(), 0.1, 0.0, 1.0, &[0.5, 1.0])
                .unwrap();
        assert_eq!(snaps.len(), 2);
        assert!(snaps[1].1.sub(&a0).norm_fro() == 0.0);
    }
}
