//! Order-of-convergence sweeps: run a base configuration over a list of
//! step sizes for several (method, projection) pairs, fit the pre-plateau
//! slope, and emit a plot-ready table. Sweeps fan out over worker threads
//! capped by LODEI_THREADS; each run stays sequential and seeded.

use std::io::Write;

use crate::config::{MethodId, ProjectionId, RunConfig};
use crate::csvio::fmt_e;
use crate::error::BenchError;
use crate::runner;

#[derive(Clone, Debug)]
pub struct ConvergenceSpec {
    pub base: RunConfig,
    pub hs: Vec<f64>,
    pub methods: Vec<(MethodId, ProjectionId)>,
}

#[derive(Clone, Debug)]
pub struct MethodConvergence {
    pub method: MethodId,
    pub projection: ProjectionId,
    /// (h_eff, final relative error) per step size.
    pub points: Vec<(f64, f64)>,
    /// Pre-plateau mask: error > 10 x plateau estimate (the smallest error).
    pub used: Vec<bool>,
    pub plateau_est: f64,
    pub slope: f64,
}

pub fn threads_cap() -> usize {
    std::env::var("LODEI_THREADS")
        .ok()
        .and_then(|v| v.parse().ok())
        .filter(|&v| v >= 1)
        .unwrap_or(1)
}

pub fn convergence(spec: &ConvergenceSpec) -> Result<Vec<MethodConvergence>, BenchError> {
    if spec.hs.len() < 3 {
        return Err(BenchError::Config(
            "convergence needs at least 3 step sizes".into(),
        ));
    }
    let mut jobs: Vec<RunConfig> = Vec::new();
    for &(method, projection) in &spec.methods {
        for &h in &spec.hs {
            let mut cfg = spec.base.clone();
            cfg.method = method;
            cfg.projection = projection;
            cfg.h = h;
            cfg.out_dir = None;
            cfg.checkpoints = 1;
            cfg.validate()?;
            jobs.push(cfg);
        }
    }
    // warm the reference memo once, then fan out
    if let Some(first) = jobs.first() {
        runner::run(first)?;
    }
    let cap = threads_cap().min(jobs.len().max(1));
    let results: Vec<Result<runner::RunOutcome, BenchError>> = if cap <= 1 {
        jobs.iter().map(runner::run).collect()
    } else {
        let mut slots: Vec<Option<Result<runner::RunOutcome, BenchError>>> =
            (0..jobs.len()).map(|_| None).collect();
        let next = std::sync::atomic::AtomicUsize::new(0);
        let slots_mx = std::sync::Mutex::new(&mut slots);
        std::thread::scope(|scope| {
            for _ in 0..cap {
                scope.spawn(|| loop {
                    let i = next.fetch_add(1, std::sync::atomic::Ordering::SeqCst);
                    if i >= jobs.len() {
                        break;
                    }
                    let res = runner::run(&jobs[i]);
                    slots_mx.lock().unwrap()[i] = Some(res);
                });
            }
        });
        slots.into_iter().map(|s| s.unwrap()).collect()
    };
    let mut out = Vec::new();
    let mut it = results.into_iter();
    for &(method, projection) in &spec.methods {
        let mut points = Vec::new();
        for _ in &spec.hs {
            let r = it.next().unwrap()?;
            let err = r.final_rel_err.ok_or_else(|| {
                BenchError::Config("convergence needs a reference (policy must not be skip)".into())
            })?;
            points.push((r.h_eff, err));
        }
        out.push(fit_slope(method, projection, points));
    }
    Ok(out)
}

/// Least-squares slope of ln(err) against ln(h) over the pre-plateau
/// segment: the points whose error exceeds 10 x the plateau estimate
/// (the smallest observed error).
pub fn fit_slope(
    method: MethodId,
    projection: ProjectionId,
    points: Vec<(f64, f64)>,
) -> MethodConvergence {
    let plateau_est = points.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
    let used: Vec<bool> = points.iter().map(|p| p.1 > 10.0 * plateau_est).collect();
    let sel: Vec<(f64, f64)> = points
        .iter()
        .zip(&used)
        .filter(|(_, &u)| u)
        .map(|(p, _)| *p)
        .collect();
    let sel = if sel.len() >= 2 {
        sel
    } else {
        points.clone()
    };
    let n = sel.len() as f64;
    let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
    for (h, e) in &sel {
        let (x, y) = (h.ln(), e.ln());
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    MethodConvergence {
        method,
        projection,
        points,
        used,
        plateau_est,
        slope,
    }
}

pub fn write_convergence_csv(path: &str, rows: &[MethodConvergence]) -> Result<(), BenchError> {
    if let Some(parent) = std::path::Path::new(path).parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    let mut f = std::fs::File::create(path)?;
    writeln!(f, "method,projection,h,rel_err,used,slope,plateau_est")?;
    for row in rows {
        for ((h, e), used) in row.points.iter().zip(&row.used) {
            writeln!(
                f,
                "{},{},{},{},{},{},{}",
                row.method.as_str(),
                row.projection.as_string(),
                fmt_e(*h),
                fmt_e(*e),
                used,
                fmt_e(row.slope),
                fmt_e(row.plateau_est)
            )?;
        }
    }
    Ok(())
}
