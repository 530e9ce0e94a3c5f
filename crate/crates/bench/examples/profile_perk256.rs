use lodei_core::kernels::*;
use lodei_core::problems::*;
use lodei_core::steppers::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::time::Instant;

fn main() {
    let n = 256;
    let prob = AllenCahn2d::new(n, 0.01);
    let a0 = prob.initial();
    let y0 = FactoredMatrix::from_dense_truncated(&a0, 6);
    let engine = ExpEngine::new(prob.operator.clone(), KrylovConfig::default());
    let reaction = prob.reaction();
    let split = SplitField { engine: &engine, g: &reaction };
    for (label, mode) in [("arp", ProjectionMode::Oblique(SelectorBase::Arp)), ("orth", ProjectionMode::Orthogonal)] {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut y = y0.clone();
        // warm the eig/table caches
        let _ = perk_step(&y, 1e-2, &split, 2, mode, &mut rng).unwrap();
        let t = Instant::now();
        for _ in 0..30 {
            y = perk_step(&y, 1e-2, &split, 2, mode, &mut rng).unwrap().0;
        }
        println!("perk2-{label} n=256 r=6: {:.1} ms/step -> 1000 steps = {:.0} s", t.elapsed().as_secs_f64()*1e3/30.0, t.elapsed().as_secs_f64()*1000.0/30.0);
    }
}
