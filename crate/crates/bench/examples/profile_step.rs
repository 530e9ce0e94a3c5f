use lodei_core::kernels::*;
use lodei_core::mat::*;
use lodei_core::problems::*;
use lodei_core::steppers::*;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;
use std::time::Instant;

fn main() {
    let n = 64;
    let r = 6;
    let p = Nls2d::new(n, 0.1);
    let a0 = p.initial();
    let y0 = FactoredMatrix::from_dense_truncated(&a0.map(|x| x + Complex64::new(0.0, 1e-3)), r);
    let mut rng = ChaCha8Rng::seed_from_u64(1);

    let t = Instant::now();
    let mut y = y0.clone();
    for _ in 0..100 {
        y = prk_step(&y, 1e-3, &ButcherTableau::prk2(), &p, ProjectionMode::Oblique(SelectorBase::Arp), &mut rng).unwrap().0;
    }
    println!("prk2-arp 100 steps: {:.1} ms", t.elapsed().as_secs_f64()*1e3);

    // components
    let t = Instant::now();
    for _ in 0..1000 { let _ = lodei_core::deim::select_arp(&y.u, 7).unwrap(); }
    println!("1000 arp selections: {:.1} ms", t.elapsed().as_secs_f64()*1e3);
    let t = Instant::now();
    for _ in 0..1000 { let _ = lodei_core::deim::select_qdeim(&y.u).unwrap(); }
    println!("1000 qdeim selections: {:.1} ms", t.elapsed().as_secs_f64()*1e3);
    let t = Instant::now();
    for _ in 0..1000 { let _ = p.eval_rows(&y, &[0,10,20,30,40,50]); }
    println!("1000 row evals: {:.1} ms", t.elapsed().as_secs_f64()*1e3);
    let t = Instant::now();
    let mut sum = OuterProductSum::new(n, n, 30);
    sum.push_factored(&y).unwrap();
    sum.push(random_normal::<Complex64,_>(n, 12, &mut rng), random_normal::<Complex64,_>(n, 12, &mut rng)).unwrap();
    for _ in 0..1000 { let _ = truncate_rank(&sum, r).unwrap(); }
    println!("1000 truncations (width 18): {:.1} ms", t.elapsed().as_secs_f64()*1e3);

    // PERK components
    let ac = AllenCahn2d::new(64, 0.01);
    let eng = ExpEngine::new(ac.operator.clone(), KrylovConfig::default());
    let g = ac.reaction();
    let yr = FactoredMatrix::from_dense_truncated(&ac.initial(), r);
    let t = Instant::now();
    for _ in 0..100 { let _ = eng.exp_action(1e-2, &yr.u); }
    println!("100 exp actions: {:.1} ms", t.elapsed().as_secs_f64()*1e3);
    let mut k = OuterProductSum::new(64, 64, 1000);
    k.push(random_normal::<f64,_>(64, 12, &mut rng), random_normal::<f64,_>(64, 12, &mut rng)).unwrap();
    let t = Instant::now();
    for _ in 0..100 { let _ = eng.phi_sylvester_action(1e-2, &k, PhiKind::Phi1, 1000).unwrap(); }
    println!("100 phi1 actions (width 12): {:.1} ms", t.elapsed().as_secs_f64()*1e3);
    let mut rng2 = ChaCha8Rng::seed_from_u64(2);
    let t = Instant::now();
    let split = SplitField { engine: &eng, g: &g };
    let mut yy = yr.clone();
    for _ in 0..20 {
        yy = perk_step(&yy, 1e-2, &split, 2, ProjectionMode::Oblique(SelectorBase::Arp), &mut rng2).unwrap().0;
    }
    println!("20 perk2 steps: {:.1} ms", t.elapsed().as_secs_f64()*1e3);
}
