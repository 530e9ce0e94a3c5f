use lodei_core::mat::*;
use lodei_core::problems::*;
use lodei_core::steppers::*;
use num_complex::Complex64;
use std::time::Instant;

fn main() {
    let n = 1024;
    let p = Nls2d::new(n, 0.1);
    let a0 = p.initial().map(|x| x + Complex64::new(0.0, 0.0));
    let t = Instant::now();
    let snaps = integrate_dense_rk(&a0, &p, &ButcherTableau::rk4(), 1e-3, 0.0, 0.05, &[0.05]).unwrap();
    let per = t.elapsed().as_secs_f64() / 50.0;
    println!("buffered RK4 n=1024: {:.1} ms/step -> 990 steps = {:.1} s", per*1e3, per*990.0);
    drop(snaps);
}
