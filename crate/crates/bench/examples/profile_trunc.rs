use lodei_core::kernels::*;
use lodei_core::la::*;
use lodei_core::mat::*;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::time::Instant;

fn main() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let l = random_normal::<Complex64, _>(64, 18, &mut rng);
    let r = random_normal::<Complex64, _>(64, 18, &mut rng);
    let t = Instant::now();
    for _ in 0..1000 { let _ = thin_qr(&l); }
    println!("1000 thin_qr 64x18 complex: {:.1} ms", t.elapsed().as_secs_f64()*1e3);
    let (_, tl) = thin_qr(&l);
    let (_, tr) = thin_qr(&r);
    let mid = tl.mul_h(&tr);
    let t = Instant::now();
    for _ in 0..1000 { let _ = jacobi_svd(&mid); }
    println!("1000 jacobi 18x18 complex: {:.1} ms", t.elapsed().as_secs_f64()*1e3);
    let t = Instant::now();
    for _ in 0..1000 { let _ = tl.mul_h(&tr); }
    println!("1000 mul_h 18x18: {:.1} ms", t.elapsed().as_secs_f64()*1e3);
    let q = random_normal::<Complex64, _>(64, 18, &mut rng);
    let w = random_normal::<Complex64, _>(18, 6, &mut rng);
    let t = Instant::now();
    for _ in 0..1000 { let _ = q.mul(&w); }
    println!("1000 mul 64x18x6: {:.1} ms", t.elapsed().as_secs_f64()*1e3);
    // f64 comparison
    let lf = random_normal::<f64, _>(64, 18, &mut rng);
    let t = Instant::now();
    for _ in 0..1000 { let _ = thin_qr(&lf); }
    println!("1000 thin_qr 64x18 f64: {:.1} ms", t.elapsed().as_secs_f64()*1e3);
    let midf = random_normal::<f64, _>(18, 18, &mut rng);
    let t = Instant::now();
    for _ in 0..1000 { let _ = jacobi_svd(&midf); }
    println!("1000 jacobi 18x18 f64: {:.1} ms", t.elapsed().as_secs_f64()*1e3);
}
