//! Deterministic result files. `results.csv` carries only reproducible
//! columns; wall-clock times go to `timings.csv` so that identical
//! (config, seed) pairs produce byte-identical result files.

use std::io::Write;

use serde::Serialize;

use crate::error::BenchError;
use crate::runner::RunOutcome;

pub fn fmt_e(x: f64) -> String {
    format!("{:.17e}", x)
}

#[derive(Serialize)]
struct Summary<'a> {
    schema_version: u32,
    run_id: &'a str,
    config: &'a crate::config::RunConfig,
    t_start: f64,
    h_eff: f64,
    steps: usize,
    final_rel_err: Option<f64>,
    growth_max: f64,
    total_wall_ms: f64,
    queries_dense: u64,
    queries_rows: u64,
    queries_cols: u64,
    queries_fibers: u64,
    queries_entries: u64,
    reference_key: Option<&'a str>,
    halted: Option<&'a str>,
}

pub fn write_outputs(dir: &str, out: &RunOutcome) -> Result<(), BenchError> {
    std::fs::create_dir_all(dir)?;
    let base = std::path::Path::new(dir);
    let mut results = std::fs::File::create(base.join("results.csv"))?;
    writeln!(results, "run_id,step,t,rel_err,sigma_ratio,growth_max,queries")?;
    for r in &out.records {
        let rel = r.rel_err.map(fmt_e).unwrap_or_default();
        let ratio = if r.sigma_first > 0.0 {
            fmt_e(r.sigma_last / r.sigma_first)
        } else {
            fmt_e(0.0)
        };
        writeln!(
            results,
            "{},{},{},{},{},{},{}",
            out.run_id,
            r.step,
            fmt_e(r.t),
            rel,
            ratio,
            fmt_e(r.growth_max),
            r.queries
        )?;
    }
    let mut timings = std::fs::File::create(base.join("timings.csv"))?;
    writeln!(timings, "run_id,step,wall_ms")?;
    for r in &out.records {
        writeln!(timings, "{},{},{:.6}", out.run_id, r.step, r.wall_ms)?;
    }
    let summary = Summary {
        schema_version: 1,
        run_id: &out.run_id,
        config: &out.cfg,
        t_start: out.t_start,
        h_eff: out.h_eff,
        steps: out.records.len(),
        final_rel_err: out.final_rel_err,
        growth_max: out.growth_max,
        total_wall_ms: out.total_wall_ms,
        queries_dense: out.queries.0,
        queries_rows: out.queries.1,
        queries_cols: out.queries.2,
        queries_fibers: out.queries.3,
        queries_entries: out.queries.4,
        reference_key: out.ref_key.as_deref(),
        halted: out.halted.as_deref(),
    };
    let json = serde_json::to_string_pretty(&summary)
        .map_err(|e| BenchError::Io(format!("summary serialization: {e}")))?;
    std::fs::write(base.join("summary.json"), json)?;
    Ok(())
}
