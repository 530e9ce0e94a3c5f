//! lodei run|convergence|selectors|polytope --config <file> [--seed N] [--out DIR]
//!
//! Exit codes: 0 ok, 2 config error, 3 I/O error, 4 numerical failure.

use lodei::config::{parse_config, MethodId, ProjectionId};
use lodei::convergence::{convergence, write_convergence_csv, ConvergenceSpec};
use lodei::error::BenchError;
use lodei::polytope_cmd::{polytope, write_polytope, PolytopeInput};
use lodei::selectors_cmd::{
    growth_study, replay_study, write_growth_csv, write_replay_csv, GrowthStudyConfig,
    ReplayConfig,
};

struct Args {
    command: String,
    config: Option<String>,
    seed: Option<u64>,
    out: Option<String>,
    rest: std::collections::BTreeMap<String, String>,
}

fn parse_args() -> Result<Args, BenchError> {
    let mut argv = std::env::args().skip(1);
    let command = argv
        .next()
        .ok_or_else(|| BenchError::Config(USAGE.trim().into()))?;
    let mut args = Args {
        command,
        config: None,
        seed: None,
        out: None,
        rest: Default::default(),
    };
    while let Some(flag) = argv.next() {
        let mut take = |name: &str| -> Result<String, BenchError> {
            argv.next()
                .ok_or_else(|| BenchError::Config(format!("flag {name} needs a value")))
        };
        match flag.as_str() {
            "--config" => args.config = Some(take("--config")?),
            "--seed" => {
                args.seed = Some(
                    take("--seed")?
                        .parse()
                        .map_err(|_| BenchError::Config("--seed must be an integer".into()))?,
                )
            }
            "--out" => args.out = Some(take("--out")?),
            other if other.starts_with("--") => {
                let key = other.trim_start_matches("--").to_string();
                args.rest.insert(key, take(other)?);
            }
            other => {
                return Err(BenchError::Config(format!("unexpected argument '{other}'")));
            }
        }
    }
    Ok(args)
}

const USAGE: &str = "
usage: lodei <run|convergence|selectors|polytope> --config <file> [--seed N] [--out DIR]

  run          one integration; writes results.csv, timings.csv, summary.json
  convergence  step-size sweep; base config + --hs 1e-2,5e-3,... [--methods prk1:deim:arp,...]
  selectors    growth-factor statistics over random bases (--study random|replay)
  polytope     selection-polytope vertex dump (--input small|tie4x4|random|file:PATH [--rank R])
";

fn load_config(args: &Args) -> Result<lodei::RunConfig, BenchError> {
    let path = args
        .config
        .as_ref()
        .ok_or_else(|| BenchError::Config("--config <file> is required".into()))?;
    let text = std::fs::read_to_string(path)
        .map_err(|_| BenchError::Io(format!("config file not found: {path}")))?;
    let mut cfg = parse_config(&text)?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &args.out {
        cfg.out_dir = Some(out.clone());
    }
    Ok(cfg)
}

fn main() {
    match dispatch() {
        Ok(()) => {}
        Err(e) => {
            eprintln!("lodei: {e}");
            std::process::exit(e.exit_code());
        }
    }
}

fn dispatch() -> Result<(), BenchError> {
    let args = parse_args()?;
    match args.command.as_str() {
        "run" => {
            let cfg = load_config(&args)?;
            let out = lodei::run(&cfg)?;
            if let Some(err) = &out.halted {
                eprintln!("run halted: {err}");
                return Err(BenchError::Numerical(lodei_core::Error::Numerical(
                    err.clone(),
                )));
            }
            match out.final_rel_err {
                Some(e) => println!(
                    "run {} finished: final rel err {:.6e}, wall {:.1} ms",
                    out.run_id, e, out.total_wall_ms
                ),
                None => println!(
                    "run {} finished (no reference), wall {:.1} ms",
                    out.run_id, out.total_wall_ms
                ),
            }
            Ok(())
        }
        "convergence" => {
            let base = load_config(&args)?;
            let hs: Vec<f64> = args
                .rest
                .get("hs")
                .ok_or_else(|| BenchError::Config("--hs h1,h2,... is required".into()))?
                .split(',')
                .map(|t| {
                    t.trim()
                        .parse()
                        .map_err(|_| BenchError::Config(format!("bad step size '{t}'")))
                })
                .collect::<Result<_, _>>()?;
            let methods = match args.rest.get("methods") {
                None => vec![(base.method, base.projection)],
                Some(spec) => spec
                    .split(',')
                    .map(|item| -> Result<(MethodId, ProjectionId), BenchError> {
                        let (m, p) = item
                            .split_once(':')
                            .ok_or_else(|| {
                                BenchError::Config(format!(
                                    "method spec '{item}' must be method:projection"
                                ))
                            })?;
                        let method = MethodId::parse(m).ok_or_else(|| {
                            BenchError::Config(format!("unknown method '{m}'"))
                        })?;
                        let projection = ProjectionId::parse(p).ok_or_else(|| {
                            BenchError::Config(format!("unknown projection '{p}'"))
                        })?;
                        Ok((method, projection))
                    })
                    .collect::<Result<_, _>>()?,
            };
            let spec = ConvergenceSpec { base, hs, methods };
            let rows = convergence(&spec)?;
            let out = args.out.as_deref().unwrap_or(".");
            let path = format!("{out}/convergence.csv");
            write_convergence_csv(&path, &rows)?;
            for row in &rows {
                println!(
                    "{} {}: slope {:.3} (plateau {:.3e})",
                    row.method.as_str(),
                    row.projection.as_string(),
                    row.slope,
                    row.plateau_est
                );
            }
            Ok(())
        }
        "selectors" => {
            let out = args.out.as_deref().unwrap_or(".");
            match args.rest.get("study").map(String::as_str).unwrap_or("random") {
                "random" => {
                    let trials: usize = args
                        .rest
                        .get("trials")
                        .map(|t| t.parse())
                        .transpose()
                        .map_err(|_| BenchError::Config("--trials must be an integer".into()))?
                        .unwrap_or(100);
                    let cfg = GrowthStudyConfig {
                        ms: vec![20, 50, 100],
                        rs: vec![2, 4, 6, 8],
                        trials,
                        seed: args.seed.unwrap_or(0),
                    };
                    let rows = growth_study(&cfg)?;
                    write_growth_csv(&format!("{out}/growth.csv"), &rows)?;
                    println!("wrote {} growth samples to {out}/growth.csv", rows.len());
                    Ok(())
                }
                "replay" => {
                    let cfg = ReplayConfig {
                        n: 64,
                        kappa: 0.01,
                        rank: 6,
                        h: 1e-3,
                        t_final: 10.0,
                        checkpoints: 50,
                        seed: args.seed.unwrap_or(0),
                    };
                    let curves = replay_study(&cfg)?;
                    write_replay_csv(&format!("{out}/replay.csv"), &curves)?;
                    println!("wrote {} curves to {out}/replay.csv", curves.len());
                    Ok(())
                }
                other => Err(BenchError::Config(format!("unknown study '{other}'"))),
            }
        }
        "polytope" => {
            let out = args.out.as_deref().unwrap_or(".");
            let rank: usize = args
                .rest
                .get("rank")
                .map(|t| t.parse())
                .transpose()
                .map_err(|_| BenchError::Config("--rank must be an integer".into()))?
                .unwrap_or(2);
            let input = match args.rest.get("input").map(String::as_str).unwrap_or("small") {
                "small" => PolytopeInput::SmallExample,
                "tie4x4" => PolytopeInput::Tie4x4,
                "random" => PolytopeInput::Random {
                    m: 8,
                    n: 7,
                    rank,
                    seed: args.seed.unwrap_or(0),
                },
                other => {
                    if let Some(path) = other.strip_prefix("file:") {
                        PolytopeInput::MatrixFile {
                            path: path.to_string(),
                            rank,
                        }
                    } else {
                        return Err(BenchError::Config(format!("unknown input '{other}'")));
                    }
                }
            };
            let tau: f64 = args
                .rest
                .get("tau")
                .map(|t| t.parse())
                .transpose()
                .map_err(|_| BenchError::Config("--tau must be a number".into()))?
                .unwrap_or(0.0);
            let rep = polytope(&input, tau, args.seed.unwrap_or(1))?;
            write_polytope(out, &rep)?;
            println!("{} vertices written to {out}", rep.vertices.len());
            Ok(())
        }
        "--help" | "-h" | "help" => {
            println!("{}", USAGE.trim());
            Ok(())
        }
        other => Err(BenchError::Config(format!(
            "unknown command '{other}'\n{}",
            USAGE.trim()
        ))),
    }
}
