//! Selector studies: growth-factor statistics over random orthonormal
//! bases against the known bounds, and a replay of the motivating
//! Allen-Cahn comparison (one PRK2 run per selector next to the
//! orthogonal-projection run and the best-rank-r baseline).

use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use lodei_core::deim::{self, bounds};
use lodei_core::kernels::FactoredMatrix;
use lodei_core::mat::random_orthonormal;

use crate::config::{MethodId, ProblemId, ProjectionId, RefPolicy, RunConfig};
use crate::csvio::fmt_e;
use crate::error::BenchError;
use crate::reference::RefData;
use crate::runner;

#[derive(Clone, Debug)]
pub struct GrowthStudyConfig {
    pub ms: Vec<usize>,
    pub rs: Vec<usize>,
    pub trials: usize,
    pub seed: u64,
}

#[derive(Clone, Debug)]
pub struct GrowthRow {
    pub m: usize,
    pub r: usize,
    pub selector: String,
    pub trial: usize,
    pub growth: f64,
    pub bound: f64,
}

pub fn growth_study(cfg: &GrowthStudyConfig) -> Result<Vec<GrowthRow>, BenchError> {
    let mut rows = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    for &m in &cfg.ms {
        for &r in &cfg.rs {
            if r >= m {
                continue;
            }
            for trial in 0..cfg.trials {
                let u = random_orthonormal::<f64, _>(m, r, &mut rng);
                let u1_inf = (0..m).map(|i| u[(i, 0)].abs()).fold(0.0, f64::max);
                let cases = [
                    ("greedy", deim::select_greedy_deim(&u)?, bounds::greedy(m, r, u1_inf)),
                    ("qdeim", deim::select_qdeim(&u)?, bounds::qdeim(m, r)),
                    (
                        "srrqr(2)",
                        deim::select_srrqr(&u, 2.0)?,
                        bounds::srrqr(m, r, 2.0),
                    ),
                    (
                        "arp",
                        deim::select_arp(&u, cfg.seed ^ (trial as u64) << 20 ^ (m as u64) << 8 ^ r as u64)?,
                        bounds::arp(m, r),
                    ),
                ];
                for (name, sel, bound) in cases {
                    rows.push(GrowthRow {
                        m,
                        r,
                        selector: name.to_string(),
                        trial,
                        growth: sel.growth,
                        bound,
                    });
                }
            }
        }
    }
    Ok(rows)
}

pub fn write_growth_csv(path: &str, rows: &[GrowthRow]) -> Result<(), BenchError> {
    if let Some(parent) = std::path::Path::new(path).parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    let mut f = std::fs::File::create(path)?;
    writeln!(f, "m,r,selector,trial,growth,bound")?;
    for r in rows {
        writeln!(
            f,
            "{},{},{},{},{},{}",
            r.m,
            r.r,
            r.selector,
            r.trial,
            fmt_e(r.growth),
            fmt_e(r.bound)
        )?;
    }
    Ok(())
}

#[derive(Clone, Debug)]
pub struct ReplayConfig {
    pub n: usize,
    pub kappa: f64,
    pub rank: usize,
    pub h: f64,
    pub t_final: f64,
    pub checkpoints: usize,
    pub seed: u64,
}

#[derive(Clone, Debug)]
pub struct ReplayCurve {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

/// PRK2 on the periodic Allen-Cahn problem, once per projection variant,
/// next to the best-rank-r truncation error of the reference itself.
pub fn replay_study(cfg: &ReplayConfig) -> Result<Vec<ReplayCurve>, BenchError> {
    let variants: Vec<(String, ProjectionId)> = vec![
        ("orthogonal".into(), ProjectionId::Orthogonal),
        ("greedy".into(), ProjectionId::DeimGreedy),
        ("qdeim".into(), ProjectionId::DeimQdeim),
        ("srrqr(2)".into(), ProjectionId::DeimSrrqr { eta: 2.0 }),
        ("arp".into(), ProjectionId::DeimArp),
    ];
    let mut curves = Vec::new();
    let mut ref_key = None;
    for (label, projection) in variants {
        let run_cfg = RunConfig {
            problem: ProblemId::AllenCahn2d {
                n: cfg.n,
                kappa: cfg.kappa,
            },
            method: MethodId::Prk2,
            projection,
            rank: cfg.rank,
            h: cfg.h,
            t_final: cfg.t_final,
            warmup: Some(false),
            reference: RefPolicy::Compute { h_ref: None },
            seed: cfg.seed,
            checkpoints: cfg.checkpoints,
            out_dir: None,
        };
        let out = runner::run(&run_cfg)?;
        ref_key = out.ref_key.clone();
        let points = out
            .records
            .iter()
            .filter_map(|r| r.rel_err.map(|e| (r.t, e)))
            .collect();
        curves.push(ReplayCurve { label, points });
    }
    // best rank-r baseline from the shared reference snapshots
    if let Some(key) = ref_key {
        let data = crate::reference::memoized(&key, || {
            Err(BenchError::Io("reference should already be memoized".into()))
        })?;
        if let RefData::MatReal { snaps, .. } = data.as_ref() {
            let mut points = Vec::new();
            for (t, a) in snaps {
                let best = FactoredMatrix::from_dense_truncated(a, cfg.rank);
                points.push((*t, best.dense().sub(a).norm_fro() / a.norm_fro()));
            }
            curves.push(ReplayCurve {
                label: "best-rank".into(),
                points,
            });
        }
    }
    Ok(curves)
}

pub fn write_replay_csv(path: &str, curves: &[ReplayCurve]) -> Result<(), BenchError> {
    if let Some(parent) = std::path::Path::new(path).parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    let mut f = std::fs::File::create(path)?;
    writeln!(f, "variant,t,rel_err")?;
    for c in curves {
        for (t, e) in &c.points {
            writeln!(f, "{},{},{}", c.label, fmt_e(*t), fmt_e(*e))?;
        }
    }
    Ok(())
}
