//! Executes one configured run: builds the problem, obtains the reference
//! trajectory (shared through the in-process memo), performs the dense
//! warm-up handoff, integrates the low-rank method, and writes the result
//! files.

use std::sync::Arc;

use num_complex::Complex64;

use lodei_core::kernels::{ExpEngine, FactoredMatrix, KrylovConfig};
use lodei_core::steppers::{
    integrate_dense_rk, integrate_dense_split_exprk2, integrate_matrix, ButcherTableau,
    IntegrateOpts, MatrixStepper, SplitField, StepRecord,
};
use lodei_core::tucker::{
    hosvd_truncate, integrate_dense_rk_tensor, integrate_tucker, Tensor3, TuckerIntegrateOpts,
};
use lodei_core::problems::{AllenCahn2d, AllenCahn3d, MatrixField, Nls2d, Nls3d, TensorField};
use lodei_core::mat::Mat;

use crate::config::{MethodId, ProblemId, RefPolicy, RunConfig};
use crate::error::BenchError;
use crate::reference::{self, RefData};

type C = Complex64;

pub struct RunOutcome {
    pub run_id: String,
    pub cfg: RunConfig,
    pub t_start: f64,
    pub h_eff: f64,
    pub records: Vec<StepRecord>,
    pub final_rel_err: Option<f64>,
    pub total_wall_ms: f64,
    pub growth_max: f64,
    /// (dense, rows, cols, fibers, entries) sampled-scalar counters.
    pub queries: (u64, u64, u64, u64, u64),
    pub halted: Option<String>,
    pub ref_key: Option<String>,
}

pub fn tableau_for(method: MethodId) -> ButcherTableau {
    match method {
        MethodId::Prk1 | MethodId::TuckerPrk1 => ButcherTableau::prk1(),
        MethodId::Prk2 | MethodId::TuckerPrk2 => ButcherTableau::prk2(),
        MethodId::Prk3 | MethodId::TuckerPrk3 => ButcherTableau::prk3(),
        MethodId::Perk1 | MethodId::Perk2 => ButcherTableau::rk4(), // unused
    }
}

/// Times on the reference grid: `count` evenly spaced checkpoints over
/// (t_start, t_end], always including t_end exactly.
fn checkpoint_times(t_start: f64, t_end: f64, h_ref: f64, count: usize) -> (f64, Vec<f64>) {
    let duration = t_end - t_start;
    let ref_steps = (duration / h_ref).round().max(1.0) as usize;
    let h_ref_eff = duration / ref_steps as f64;
    let mut times = Vec::with_capacity(count);
    for i in 1..=count {
        let idx = ((i as f64 / count as f64) * ref_steps as f64).round() as usize;
        let idx = idx.clamp(1, ref_steps);
        let t = if idx == ref_steps {
            t_end
        } else {
            t_start + idx as f64 * h_ref_eff
        };
        if times.last().map(|&l: &f64| (l - t).abs() > 1e-12).unwrap_or(true) {
            times.push(t);
        }
    }
    (h_ref_eff, times)
}

fn obtain_reference(
    policy: &RefPolicy,
    key: &str,
    compute: impl FnOnce() -> Result<RefData, BenchError>,
) -> Result<Option<Arc<RefData>>, BenchError> {
    match policy {
        RefPolicy::Skip => Ok(None),
        RefPolicy::Compute { .. } => Ok(Some(reference::memoized(key, compute)?)),
        RefPolicy::Load { path } => Ok(Some(Arc::new(reference::load(path, key)?))),
        RefPolicy::Cache { path, .. } => {
            if std::path::Path::new(path).exists() {
                Ok(Some(Arc::new(reference::load(path, key)?)))
            } else {
                let data = reference::memoized(key, compute)?;
                reference::save(path, key, &data)?;
                Ok(Some(data))
            }
        }
    }
}

fn requested_h_ref(policy: &RefPolicy, default: f64) -> f64 {
    match policy {
        RefPolicy::Compute { h_ref } | RefPolicy::Cache { h_ref, .. } => h_ref.unwrap_or(default),
        _ => default,
    }
}

fn summarize(
    cfg: &RunConfig,
    t_start: f64,
    out_records: Vec<StepRecord>,
    h_eff: f64,
    halted: Option<String>,
    queries: (u64, u64, u64, u64, u64),
    ref_key: Option<String>,
) -> RunOutcome {
    let total_wall_ms: f64 = out_records.iter().map(|r| r.wall_ms).sum();
    let growth_max = out_records.iter().map(|r| r.growth_max).fold(1.0, f64::max);
    let final_rel_err = out_records.iter().rev().find_map(|r| r.rel_err);
    RunOutcome {
        run_id: cfg.run_id(),
        cfg: cfg.clone(),
        t_start,
        h_eff,
        records: out_records,
        final_rel_err,
        total_wall_ms,
        growth_max,
        queries,
        halted,
        ref_key,
    }
}

pub fn run(cfg: &RunConfig) -> Result<RunOutcome, BenchError> {
    cfg.validate()?;
    let outcome = match cfg.problem.clone() {
        ProblemId::Nls2d { n, alpha } => run_nls2d(cfg, n, alpha)?,
        ProblemId::AllenCahn2d { n, kappa } => run_ac2d(cfg, n, kappa)?,
        ProblemId::Nls3d { n, alpha, gamma } => run_nls3d(cfg, n, alpha, gamma)?,
        ProblemId::AllenCahn3d { n, kappa } => run_ac3d(cfg, n, kappa)?,
    };
    if let Some(dir) = &cfg.out_dir {
        crate::csvio::write_outputs(dir, &outcome)?;
    }
    Ok(outcome)
}

// ---------------------------------------------------------------------------
// 2-D Schrödinger lattice (complex, non-stiff; dense RK4 reference)
// ---------------------------------------------------------------------------

fn run_nls2d(cfg: &RunConfig, n: usize, alpha: f64) -> Result<RunOutcome, BenchError> {
    let problem = Nls2d::new(n, alpha);
    let warm_on = cfg.warmup.unwrap_or(true);
    let t_start = if warm_on { problem.warmup_time() } else { 0.0 };
    let duration = cfg.t_final - t_start;
    if duration <= 0.0 {
        return Err(BenchError::Config("T must exceed the warm-up time".into()));
    }
    let h_ref = requested_h_ref(&cfg.reference, 1e-3f64.min(cfg.h));
    let (h_ref_eff, checks) = checkpoint_times(t_start, cfg.t_final, h_ref, cfg.checkpoints);
    let key = format!(
        "nls2d_n{n}_a{alpha}|warm{t_start:e}|rk4|href{h_ref_eff:e}|T{:e}|ck{}",
        cfg.t_final, cfg.checkpoints
    );
    let refdata = obtain_reference(&cfg.reference, &key, || {
        let a0 = problem.initial();
        let warm = if warm_on {
            let steps = (t_start / h_ref).round().max(1.0);
            integrate_dense_rk(
                &a0,
                &problem,
                &ButcherTableau::rk4(),
                t_start / steps,
                0.0,
                t_start,
                &[t_start],
            )?
            .pop()
            .unwrap()
            .1
        } else {
            a0
        };
        let snaps = integrate_dense_rk(
            &warm,
            &problem,
            &ButcherTableau::rk4(),
            h_ref_eff,
            t_start,
            cfg.t_final,
            &checks,
        )?;
        Ok(RefData::MatComplex { warm, snaps })
    })?;
    let (warm_state, snaps): (Mat<C>, Option<&[(f64, Mat<C>)]>) = match refdata.as_deref() {
        Some(RefData::MatComplex { warm, snaps }) => (warm.clone(), Some(snaps)),
        None => {
            let a0 = problem.initial();
            let warm = if warm_on {
                let h = 1e-3f64.min(cfg.h);
                let steps = (t_start / h).round().max(1.0);
                integrate_dense_rk(
                    &a0,
                    &problem,
                    &ButcherTableau::rk4(),
                    t_start / steps,
                    0.0,
                    t_start,
                    &[t_start],
                )?
                .pop()
                .unwrap()
                .1
            } else {
                a0
            };
            (warm, None)
        }
        Some(_) => return Err(BenchError::Io("reference payload kind mismatch".into())),
    };
    problem.stats().reset();
    let y0 = FactoredMatrix::from_dense_truncated(&warm_state, cfg.rank);
    let stepper = MatrixStepper::Prk {
        tableau: tableau_for(cfg.method),
        field: &problem,
        mode: cfg.projection.mode(),
    };
    let out = integrate_matrix(
        &stepper,
        y0,
        &IntegrateOpts {
            t0: t_start,
            t_end: cfg.t_final,
            h: cfg.h,
            seed: cfg.seed,
            reference: snaps,
        },
    );
    Ok(summarize(
        cfg,
        t_start,
        out.records,
        out.h_eff,
        out.error.map(|e| e.to_string()),
        problem.stats().snapshot(),
        Some(key),
    ))
}

// ---------------------------------------------------------------------------
// 2-D Allen-Cahn (real, stiff; exponential RK2 reference in the eigenbasis)
// ---------------------------------------------------------------------------

fn run_ac2d(cfg: &RunConfig, n: usize, kappa: f64) -> Result<RunOutcome, BenchError> {
    let problem = AllenCahn2d::new(n, kappa);
    let t_start = 0.0;
    let h_ref = requested_h_ref(&cfg.reference, 1e-3);
    let (h_ref_eff, checks) = checkpoint_times(t_start, cfg.t_final, h_ref, cfg.checkpoints);
    let key = format!(
        "ac2d_n{n}_k{kappa}|exprk2|href{h_ref_eff:e}|T{:e}|ck{}",
        cfg.t_final, cfg.checkpoints
    );
    use lodei_core::kernels::SymOp;
    let refdata = obtain_reference(&cfg.reference, &key, || {
        let a0 = problem.initial();
        let reaction = problem.reaction();
        let snaps = integrate_dense_split_exprk2(
            &problem.operator.dense(),
            &reaction,
            &a0,
            h_ref_eff,
            0.0,
            cfg.t_final,
            &checks,
        )?;
        Ok(RefData::MatReal { warm: a0, snaps })
    })?;
    let (warm_state, snaps): (Mat<f64>, Option<&[(f64, Mat<f64>)]>) = match refdata.as_deref() {
        Some(RefData::MatReal { warm, snaps }) => (warm.clone(), Some(snaps)),
        None => (problem.initial(), None),
        Some(_) => return Err(BenchError::Io("reference payload kind mismatch".into())),
    };
    let y0 = FactoredMatrix::from_dense_truncated(&warm_state, cfg.rank);
    let reaction = problem.reaction();
    let opts = IntegrateOpts {
        t0: t_start,
        t_end: cfg.t_final,
        h: cfg.h,
        seed: cfg.seed,
        reference: snaps,
    };
    let (out, queries) = if cfg.method.is_exponential() {
        let engine = ExpEngine::new(problem.operator.clone(), KrylovConfig::default());
        let order = if cfg.method == MethodId::Perk1 { 1 } else { 2 };
        let stepper = MatrixStepper::Perk {
            order,
            split: SplitField {
                engine: &engine,
                g: &reaction,
            },
            mode: cfg.projection.mode(),
        };
        let out = integrate_matrix(&stepper, y0, &opts);
        (out, reaction.stats().snapshot())
    } else {
        problem.stats().reset();
        let stepper = MatrixStepper::Prk {
            tableau: tableau_for(cfg.method),
            field: &problem,
            mode: cfg.projection.mode(),
        };
        let out = integrate_matrix(&stepper, y0, &opts);
        (out, problem.stats().snapshot())
    };
    Ok(summarize(
        cfg,
        t_start,
        out.records,
        out.h_eff,
        out.error.map(|e| e.to_string()),
        queries,
        Some(key),
    ))
}

// ---------------------------------------------------------------------------
// 3-D problems (Tucker state; dense tensor RK4 reference)
// ---------------------------------------------------------------------------

fn run_nls3d(cfg: &RunConfig, n: usize, alpha: f64, gamma: f64) -> Result<RunOutcome, BenchError> {
    let problem = Nls3d::new(n, alpha, gamma);
    let warm_on = cfg.warmup.unwrap_or(true);
    let t_start = if warm_on { problem.warmup_time() } else { 0.0 };
    let duration = cfg.t_final - t_start;
    if duration <= 0.0 {
        return Err(BenchError::Config("T must exceed the warm-up time".into()));
    }
    let h_ref = requested_h_ref(&cfg.reference, 1e-3f64.min(cfg.h));
    let (h_ref_eff, checks) = checkpoint_times(t_start, cfg.t_final, h_ref, cfg.checkpoints);
    let key = format!(
        "nls3d_n{n}_a{alpha}_g{gamma}|warm{t_start:e}|rk4|href{h_ref_eff:e}|T{:e}|ck{}",
        cfg.t_final, cfg.checkpoints
    );
    let refdata = obtain_reference(&cfg.reference, &key, || {
        let a0 = problem.initial();
        let warm = if warm_on {
            let steps = (t_start / h_ref).round().max(1.0);
            integrate_dense_rk_tensor(
                &a0,
                &problem,
                &ButcherTableau::rk4(),
                t_start / steps,
                0.0,
                t_start,
                &[t_start],
            )?
            .pop()
            .unwrap()
            .1
        } else {
            a0
        };
        let snaps = integrate_dense_rk_tensor(
            &warm,
            &problem,
            &ButcherTableau::rk4(),
            h_ref_eff,
            t_start,
            cfg.t_final,
            &checks,
        )?;
        Ok(RefData::TenComplex { warm, snaps })
    })?;
    let (warm_state, snaps): (Tensor3<C>, Option<&[(f64, Tensor3<C>)]>) = match refdata.as_deref()
    {
        Some(RefData::TenComplex { warm, snaps }) => (warm.clone(), Some(snaps)),
        None => {
            let a0 = problem.initial();
            let warm = if warm_on {
                let h = 1e-3f64.min(cfg.h);
                let steps = (t_start / h).round().max(1.0);
                integrate_dense_rk_tensor(
                    &a0,
                    &problem,
                    &ButcherTableau::rk4(),
                    t_start / steps,
                    0.0,
                    t_start,
                    &[t_start],
                )?
                .pop()
                .unwrap()
                .1
            } else {
                a0
            };
            (warm, None)
        }
        Some(_) => return Err(BenchError::Io("reference payload kind mismatch".into())),
    };
    problem.stats().reset();
    let y0 = hosvd_truncate(&warm_state, cfg.rank);
    let out = integrate_tucker(
        y0,
        &problem,
        &tableau_for(cfg.method),
        cfg.projection.mode(),
        &TuckerIntegrateOpts {
            t0: t_start,
            t_end: cfg.t_final,
            h: cfg.h,
            seed: cfg.seed,
            reference: snaps,
        },
    );
    Ok(summarize(
        cfg,
        t_start,
        out.records,
        out.h_eff,
        out.error.map(|e| e.to_string()),
        problem.stats().snapshot(),
        Some(key),
    ))
}

fn run_ac3d(cfg: &RunConfig, n: usize, kappa: f64) -> Result<RunOutcome, BenchError> {
    let problem = AllenCahn3d::new(n, kappa);
    let warm_on = cfg.warmup.unwrap_or(true);
    let t_start = if warm_on { problem.warmup_time() } else { 0.0 };
    let duration = cfg.t_final - t_start;
    if duration <= 0.0 {
        return Err(BenchError::Config("T must exceed the warm-up time".into()));
    }
    let h_ref = requested_h_ref(&cfg.reference, 1e-3f64.min(cfg.h));
    let (h_ref_eff, checks) = checkpoint_times(t_start, cfg.t_final, h_ref, cfg.checkpoints);
    let key = format!(
        "ac3d_n{n}_k{kappa}|warm{t_start:e}|rk4|href{h_ref_eff:e}|T{:e}|ck{}",
        cfg.t_final, cfg.checkpoints
    );
    let refdata = obtain_reference(&cfg.reference, &key, || {
        let a0 = problem.initial();
        let warm = if warm_on {
            let steps = (t_start / h_ref).round().max(1.0);
            integrate_dense_rk_tensor(
                &a0,
                &problem,
                &ButcherTableau::rk4(),
                t_start / steps,
                0.0,
                t_start,
                &[t_start],
            )?
            .pop()
            .unwrap()
            .1
        } else {
            a0
        };
        let snaps = integrate_dense_rk_tensor(
            &warm,
            &problem,
            &ButcherTableau::rk4(),
            h_ref_eff,
            t_start,
            cfg.t_final,
            &checks,
        )?;
        Ok(RefData::TenReal { warm, snaps })
    })?;
    let (warm_state, snaps): (Tensor3<f64>, Option<&[(f64, Tensor3<f64>)]>) =
        match refdata.as_deref() {
            Some(RefData::TenReal { warm, snaps }) => (warm.clone(), Some(snaps)),
            None => {
                let a0 = problem.initial();
                let warm = if warm_on {
                    let h = 1e-3f64.min(cfg.h);
                    let steps = (t_start / h).round().max(1.0);
                    integrate_dense_rk_tensor(
                        &a0,
                        &problem,
                        &ButcherTableau::rk4(),
                        t_start / steps,
                        0.0,
                        t_start,
                        &[t_start],
                    )?
                    .pop()
                    .unwrap()
                    .1
                } else {
                    a0
                };
                (warm, None)
            }
            Some(_) => return Err(BenchError::Io("reference payload kind mismatch".into())),
        };
    problem.stats().reset();
    let y0 = hosvd_truncate(&warm_state, cfg.rank);
    let out = integrate_tucker(
        y0,
        &problem,
        &tableau_for(cfg.method),
        cfg.projection.mode(),
        &TuckerIntegrateOpts {
            t0: t_start,
            t_end: cfg.t_final,
            h: cfg.h,
            seed: cfg.seed,
            reference: snaps,
        },
    );
    Ok(summarize(
        cfg,
        t_start,
        out.records,
        out.h_eff,
        out.error.map(|e| e.to_string()),
        problem.stats().snapshot(),
        Some(key),
    ))
}
