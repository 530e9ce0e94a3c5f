use lodei_core::kernels::*;
use lodei_core::la::*;
use lodei_core::mat::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;
use std::time::Instant;

fn main() {
    let n = 256;
    let op = Arc::new(PeriodicTridiag::laplacian_periodic(n, 0.01));
    let eng = ExpEngine::new(op.clone(), KrylovConfig::default());
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for k in [12usize, 24] {
        let mut ks = OuterProductSum::new(n, n, 4096);
        ks.push(random_normal::<f64,_>(n, k, &mut rng), random_normal::<f64,_>(n, k, &mut rng)).unwrap();
        let t = Instant::now();
        for _ in 0..50 { let _ = eng.phi_sylvester_action(1e-2, &ks, PhiKind::Phi1, 4096).unwrap(); }
        println!("phi1 n={n} k={k}: {:.2} ms", t.elapsed().as_secs_f64()*20.0);
    }
    // components at width 60 / 120
    for w in [60usize, 120] {
        let a = random_normal::<f64,_>(n, w, &mut rng);
        let t = Instant::now();
        for _ in 0..50 { let _ = orthonormalize_cols(&a, 1e-12); }
        println!("orthonormalize {n}x{w}: {:.2} ms", t.elapsed().as_secs_f64()*20.0);
        let g = random_normal::<f64,_>(w, w, &mut rng);
        let gs = g.add(&g.transpose());
        let t = Instant::now();
        for _ in 0..50 { let _ = sym_eig(&gs); }
        println!("sym_eig {w}: {:.2} ms", t.elapsed().as_secs_f64()*20.0);
        let t = Instant::now();
        for _ in 0..50 { let _ = thin_qr(&a); }
        println!("thin_qr {n}x{w}: {:.2} ms", t.elapsed().as_secs_f64()*20.0);
    }
    // gemm rate for the ac reference
    let big = random_normal::<f64,_>(256, 256, &mut rng);
    let t = Instant::now();
    for _ in 0..20 { let _ = big.mul(&big); }
    let per = t.elapsed().as_secs_f64()/20.0;
    println!("dgemm 256^3: {:.2} ms ({:.1} GF) -> exprk2 ref 10k steps = {:.0} s", per*1e3, 2.0*256f64.powi(3)/per/1e9, per*6.0*10000.0);
}
