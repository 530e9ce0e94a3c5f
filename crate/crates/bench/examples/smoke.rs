use lodei::config::*;
use lodei::runner::run;

fn main() {
    let t0 = std::time::Instant::now();
    let cfg = RunConfig {
        problem: ProblemId::Nls2d { n: 64, alpha: 0.1 },
        method: MethodId::Prk2,
        projection: ProjectionId::DeimArp,
        rank: 6,
        h: 1e-3,
        t_final: 1.0,
        warmup: None,
        reference: RefPolicy::Compute { h_ref: Some(1e-3) },
        seed: 1,
        checkpoints: 4,
        out_dir: Some("/tmp/smoke_run".into()),
    };
    let out = run(&cfg).unwrap();
    println!("nls2d n=64 prk2-arp r=6: err {:?}, wall {:.0} ms, total {:.1}s, growth {:.2}",
        out.final_rel_err, out.total_wall_ms, t0.elapsed().as_secs_f64(), out.growth_max);
    // orthogonal counterpart shares reference via memo
    let t1 = std::time::Instant::now();
    let mut cfg2 = cfg.clone();
    cfg2.projection = ProjectionId::Orthogonal;
    cfg2.out_dir = None;
    let out2 = run(&cfg2).unwrap();
    println!("orthogonal: err {:?}, wall {:.0} ms, elapsed {:.1}s",
        out2.final_rel_err, out2.total_wall_ms, t1.elapsed().as_secs_f64());
    println!("speedup deim vs orth: {:.2}x", out2.total_wall_ms / out.total_wall_ms);

    // stiff AC with PERK2
    let t2 = std::time::Instant::now();
    let cfg3 = RunConfig {
        problem: ProblemId::AllenCahn2d { n: 64, kappa: 0.01 },
        method: MethodId::Perk2,
        projection: ProjectionId::DeimArp,
        rank: 6,
        h: 1e-2,
        t_final: 10.0,
        warmup: None,
        reference: RefPolicy::Compute { h_ref: None },
        seed: 1,
        checkpoints: 4,
        out_dir: None,
    };
    let out3 = run(&cfg3).unwrap();
    println!("ac2d n=64 perk2-arp r=6: err {:?}, wall {:.0} ms, elapsed {:.1}s",
        out3.final_rel_err, out3.total_wall_ms, t2.elapsed().as_secs_f64());

    // tucker nls3d small
    let t3 = std::time::Instant::now();
    let cfg4 = RunConfig {
        problem: ProblemId::Nls3d { n: 20, alpha: 0.1, gamma: 2.0 },
        method: MethodId::TuckerPrk2,
        projection: ProjectionId::DeimQdeim,
        rank: 4,
        h: 1e-2,
        t_final: 0.51,
        warmup: None,
        reference: RefPolicy::Compute { h_ref: None },
        seed: 1,
        checkpoints: 2,
        out_dir: None,
    };
    let out4 = run(&cfg4).unwrap();
    println!("nls3d n=20 tucker-prk2 r=4: err {:?}, elapsed {:.1}s",
        out4.final_rel_err, t3.elapsed().as_secs_f64());
}
