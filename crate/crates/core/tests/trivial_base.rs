//! Over a one-point base, Banach mean equicontinuity of the RDS and of the plain
//! action on K = X imply each other. The action side is computed from an orbit
//! table built by iterating the generator map, not from the system oracle.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use weylmean::catalog::{system, SyntheticOracle};
use weylmean::classify::{wme_test, ClassifierConfig};
use weylmean::group::FolnerFamily;
use weylmean::pseudometric::{banach, EstimatorConfig};
use weylmean::rds::RandomDynamicalSystem;
use weylmean::torus::{FiberMap, PhasePoint};

fn cfg() -> ClassifierConfig {
    ClassifierConfig {
        estimator: EstimatorConfig { n_max: 256, m_max: 256, search_radius: 64, ..Default::default() },
        pairs_per_cell: 100,
        ..Default::default()
    }
}

/// `d(T^n x, T^n y)` for `n` in `[lo, hi)`, by repeated application of `T` and `T^{-1}`.
fn orbit_distances(map: &FiberMap, x: &PhasePoint, y: &PhasePoint, lo: i64, hi: i64) -> Vec<f64> {
    let inv = map.inverse().unwrap();
    let mut forward = vec![x.distance(y)];
    let (mut a, mut b) = (x.clone(), y.clone());
    for _ in 1..hi {
        a = map.apply(&a);
        b = map.apply(&b);
        forward.push(a.distance(&b));
    }
    let mut backward = Vec::new();
    let (mut a, mut b) = (x.clone(), y.clone());
    for _ in lo..0 {
        a = inv.apply(&a);
        b = inv.apply(&b);
        backward.push(a.distance(&b));
    }
    backward.reverse();
    backward.extend(forward);
    backward
}

/// Banach modulus of the action on X: for each ε, whether some grid δ has every
/// sampled pair at distance `< δ` estimated below ε.
fn action_modulus(sys: &RandomDynamicalSystem, cfg: &ClassifierConfig) -> bool {
    let map = sys.generator_maps()[0][0].clone();
    let est = &cfg.estimator;
    let r = est.search_radius as i64;
    let (lo, hi) = (-r, r + est.m_max as i64);
    let family = FolnerFamily::boxes(sys.group().clone());
    let mut rng = ChaCha8Rng::seed_from_u64(36);
    cfg.eps_list.iter().all(|&eps| {
        cfg.delta_grid.iter().any(|&delta| {
            (0..cfg.pairs_per_cell / 10).all(|_| {
                let x: Vec<f64> = (0..sys.dim()).map(|_| rng.random()).collect();
                let mut y = x.clone();
                y[rng.random_range(0..sys.dim())] += 0.999 * delta * rng.random::<f64>();
                let (x, y) = (PhasePoint::new(x).unwrap(), PhasePoint::new(y).unwrap());
                let table = orbit_distances(&map, &x, &y, lo, hi);
                let oracle = SyntheticOracle::from_fn(sys.group().clone(), move |g| {
                    table[(g.coords()[0] - lo) as usize]
                });
                banach(&oracle, &family, est).unwrap().value < eps
            })
        })
    })
}

#[test]
fn rds_equicontinuous_implies_action_equicontinuous() {
    let sys = system("rot1-trivial").unwrap();
    assert!(wme_test(&sys, &cfg()).unwrap().passed());
    assert!(action_modulus(&sys, &cfg()));
}

#[test]
fn action_equicontinuous_implies_rds_equicontinuous() {
    // contrapositive on the sensitive system: neither side passes
    let sys = system("cat-trivial").unwrap();
    assert!(!action_modulus(&sys, &cfg()));
    assert!(!wme_test(&sys, &cfg()).unwrap().passed());
}

#[test]
fn fixed_point_subset_is_trivially_equicontinuous() {
    // K = {0} is invariant under the cat map, so "for some K" alone does not
    // force the RDS to be equicontinuous; the equivalence needs K = X.
    let sys = system("cat-trivial").unwrap();
    let map = &sys.generator_maps()[0][0];
    let origin = PhasePoint::new(vec![0.0, 0.0]).unwrap();
    assert_eq!(map.apply(&origin), origin);
    assert!(orbit_distances(map, &origin, &origin, -64, 320).iter().all(|&d| d == 0.0));
}
