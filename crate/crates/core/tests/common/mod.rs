#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use weylmean::torus::{torus_distance, PhasePoint};

/// Mean flat distance between independent uniform points of T², from [`monte_carlo_mean_distance`]
/// with `MC_SAMPLES` samples and `MC_SEED`.
pub const M_STAR: f64 = 0.382_492_888_707_608_4;
pub const MC_SAMPLES: usize = 1_000_000;
pub const MC_SEED: u64 = 20_240_601;

/// Plain sampling; shares nothing with the estimators.
pub fn monte_carlo_mean_distance(samples: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut total = 0.0;
    for _ in 0..samples {
        let x = [rng.random::<f64>(), rng.random::<f64>()];
        let y = [rng.random::<f64>(), rng.random::<f64>()];
        total += torus_distance(&x, &y);
    }
    total / samples as f64
}

/// Seeded pairs: even indices independent uniform, odd indices at distance `10^-U(1,6)`.
pub fn seeded_pairs(dim: usize, count: usize, seed: u64) -> Vec<(PhasePoint, PhasePoint)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|k| {
            let x: Vec<f64> = (0..dim).map(|_| rng.random()).collect();
            let y: Vec<f64> = if k % 2 == 0 {
                (0..dim).map(|_| rng.random()).collect()
            } else {
                let r = 10f64.powf(-rng.random_range(1.0..6.0));
                let mut y = x.clone();
                y[rng.random_range(0..dim)] += r;
                y
            };
            (PhasePoint::new(x).unwrap(), PhasePoint::new(y).unwrap())
        })
        .collect()
}

/// Direct summation of `f` over `[lo, lo + n)`.
pub fn window_sum(f: impl Fn(i64) -> f64, lo: i64, n: usize) -> f64 {
    (lo..lo + n as i64).map(f).sum()
}
