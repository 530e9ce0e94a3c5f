use lodei_core::mat::*;
use lodei_core::problems::*;
use lodei_core::steppers::*;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::time::Instant;

fn main() {
    let n = 1024;
    let p = Nls2d::new(n, 0.1);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let a = random_normal::<Complex64, _>(n, n, &mut rng);
    let mut out = Mat::zeros(n, n);
    let t = Instant::now();
    for _ in 0..10 { p.eval_dense_into(&a, &mut out); }
    let per = t.elapsed().as_secs_f64() / 10.0;
    println!("nls2d eval_dense n=1024: {:.1} ms ({:.2} GF)", per*1e3, 21e6_f64*2.0/per/1e9);
    let t = Instant::now();
    let a2 = rk_dense_step(&a, 1e-4, &ButcherTableau::rk4(), &p).unwrap();
    println!("one RK4 dense step n=1024: {:.1} ms -> 10k steps = {:.1} min", t.elapsed().as_secs_f64()*1e3, t.elapsed().as_secs_f64()*10000.0/60.0);
    drop(a2);
    // PRK2 step at n=1024 r=6
    let y = lodei_core::kernels::FactoredMatrix::from_dense_truncated(&a, 6);
    let mut rng2 = ChaCha8Rng::seed_from_u64(2);
    let t = Instant::now();
    let mut yy = y.clone();
    for _ in 0..10 {
        yy = prk_step(&yy, 1e-3, &ButcherTableau::prk2(), &p, ProjectionMode::Oblique(SelectorBase::Arp), &mut rng2).unwrap().0;
    }
    println!("prk2-arp step n=1024 r=6: {:.1} ms", t.elapsed().as_secs_f64()*100.0);
    let t = Instant::now();
    let mut yo = y.clone();
    for _ in 0..10 {
        yo = prk_step(&yo, 1e-3, &ButcherTableau::prk2(), &p, ProjectionMode::Orthogonal, &mut rng2).unwrap().0;
    }
    println!("prk2-orth step n=1024 r=6: {:.1} ms", t.elapsed().as_secs_f64()*100.0);
}
