mod common;

use common::{monte_carlo_mean_distance, window_sum, M_STAR, MC_SAMPLES, MC_SEED};
use weylmean::catalog::{in_dyadic_block, is_square, system, SyntheticOracle};
use weylmean::group::{AmenableGroup, FolnerFamily};
use weylmean::oracle::SeparationOracle;
use weylmean::pseudometric::*;
use weylmean::rds::{BaseSpace, Fiber, RandomDynamicalSystem};
use weylmean::torus::{FiberMap, PhasePoint};

fn z() -> FolnerFamily {
    FolnerFamily::boxes(AmenableGroup::integers())
}

fn pt(c: &[f64]) -> PhasePoint {
    PhasePoint::new(c.to_vec()).unwrap()
}

#[test]
fn pinned_mean_distance_reproduces() {
    let mc = monte_carlo_mean_distance(MC_SAMPLES, MC_SEED);
    assert_eq!(mc, M_STAR);
    // closed form for the mean norm of a uniform point of [-1/2, 1/2]^2
    let closed = (2f64.sqrt() + (1.0 + 2f64.sqrt()).ln()) / 6.0;
    assert!((mc - closed).abs() < 5e-4, "{mc} vs {closed}");
}

#[test]
fn squares_banach_small() {
    let o = SyntheticOracle::squares();
    let cfg = EstimatorConfig { n_max: 10_000, m_max: 10_000, search_radius: 16, ..Default::default() };
    let est = banach(&o, &z(), &cfg).unwrap();
    assert!(est.value <= 0.02, "{}", est.value);
    let sq = |t: i64| f64::from(u8::from(is_square(t)));
    let brute = (-16..=16).map(|g| window_sum(sq, g, 10_000) / 1e4).fold(0.0, f64::max);
    assert!((est.trace[9_999].1 - brute).abs() < 1e-12);
}

#[test]
fn dyadic_blocks_translate_search() {
    let o = SyntheticOracle::dyadic_blocks();
    let blk = |t: i64| f64::from(u8::from(in_dyadic_block(t)));
    let cfg = EstimatorConfig { n_max: 4096, m_max: 16, search_radius: 0, ..Default::default() };
    let untranslated = besicovitch(&o, &z(), &cfg).unwrap();
    // A_n over the tail 2049..=4096 is 1365/n; largest at n = 2049
    let expected = (2049..=4096).map(|n| window_sum(blk, 0, n) / n as f64).fold(0.0, f64::max);
    assert_eq!(untranslated.value, expected);
    assert!((untranslated.value - 2.0 / 3.0).abs() < 1e-3);

    let mut last = untranslated.value;
    for radius in [64u64, 1024, 4096] {
        let w = fiber_weyl(&o, &z(), &EstimatorConfig { search_radius: radius, ..cfg.clone() }).unwrap();
        assert!(w.value >= last);
        last = w.value;
    }
    // the window [4096, 4096 + n) sits inside a block for every n <= 4096
    assert_eq!(last, 1.0);
}

#[test]
fn cat_fiber_besicovitch_matches_mean_distance() {
    let cat = system("cat-trivial").unwrap();
    let (x, y) = (pt(&[0.1, 0.2]), pt(&[0.1 + 1e-6, 0.2]));
    let o = cat.fiber_separation_oracle(0, &x, &y).unwrap();
    let est = fiber_besicovitch(&o, &z(), &EstimatorConfig::default()).unwrap();
    assert!((est.value - M_STAR).abs() <= 0.05, "{}", est.value);
}

#[test]
fn rotation_estimates_equal_distance() {
    let rot = system("rot2").unwrap();
    let (x, y) = (pt(&[0.3]), pt(&[0.4]));
    let d = x.distance(&y);
    let cfg = EstimatorConfig { n_max: 512, m_max: 128, search_radius: 16, ..Default::default() };
    let o = rot.separation_oracle(&x, &y).unwrap();
    assert_eq!(besicovitch(&o, &z(), &cfg).unwrap().value, d);
    assert_eq!(banach(&o, &z(), &cfg).unwrap().value, d);
    assert_eq!(sup_fiber_weyl(&rot, &x, &y, &z(), &cfg).unwrap().value, d);
    assert_eq!(integral_besicovitch(&rot, &x, &y, &z(), &cfg).unwrap().value, d);
    let same = rot.separation_oracle(&x, &x).unwrap();
    assert_eq!(banach(&same, &z(), &cfg).unwrap().value, 0.0);
}

fn rotation_cat() -> RandomDynamicalSystem {
    let base = BaseSpace::new(vec!["rot".into(), "cat".into()], vec![0.5, 0.5], vec![vec![0, 1]]).unwrap();
    let maps = vec![vec![
        FiberMap::rotation(vec![0.3, 0.5]).unwrap(),
        FiberMap::linear(weylmean::catalog::cat_matrix()).unwrap(),
    ]];
    RandomDynamicalSystem::new(AmenableGroup::integers(), base, 2, vec![Fiber::Full; 2], maps).unwrap()
}

#[test]
fn two_fiber_sup_is_the_cat_fiber() {
    let sys = rotation_cat();
    let (x, y) = (pt(&[0.1, 0.2]), pt(&[0.1 + 1e-6, 0.2]));
    let cfg = EstimatorConfig { n_max: 1024, m_max: 64, search_radius: 16, ..Default::default() };
    let rot = fiber_weyl(&sys.fiber_separation_oracle(0, &x, &y).unwrap(), &z(), &cfg).unwrap();
    let cat = fiber_weyl(&sys.fiber_separation_oracle(1, &x, &y).unwrap(), &z(), &cfg).unwrap();
    assert!(cat.value > rot.value);
    assert_eq!(sup_fiber_weyl(&sys, &x, &y, &z(), &cfg).unwrap(), cat);
}

#[test]
fn integral_combines_fiber_traces() {
    let sys = rotation_cat();
    let (x, y) = (pt(&[0.1, 0.2]), pt(&[0.1 + 1e-6, 0.2]));
    let cfg = EstimatorConfig { n_max: 1024, ..Default::default() };
    let rot = fiber_besicovitch(&sys.fiber_separation_oracle(0, &x, &y).unwrap(), &z(), &cfg).unwrap();
    let cat = fiber_besicovitch(&sys.fiber_separation_oracle(1, &x, &y).unwrap(), &z(), &cfg).unwrap();
    let integral = integral_besicovitch(&sys, &x, &y, &z(), &cfg).unwrap();
    let combined = cfg
        .tail(cfg.n_max)
        .map(|n| 0.5 * rot.trace[n - 1].1 + 0.5 * cat.trace[n - 1].1)
        .fold(f64::NEG_INFINITY, f64::max);
    assert!((integral.value - combined).abs() < 1e-12);
    assert!((integral.value - (0.5 * 1e-6 + 0.5 * cat.value)).abs() < 1e-9);
    let max = besicovitch(&sys.separation_oracle(&x, &y).unwrap(), &z(), &cfg).unwrap();
    for (a, b) in integral.trace.iter().zip(&max.trace) {
        assert!(a.1 <= b.1 + 1e-15);
    }
}

#[test]
fn integral_requires_shared_fibers() {
    use weylmean::rds::SubTorus;
    let base = BaseSpace::new(vec!["a".into(), "b".into()], vec![0.5, 0.5], vec![vec![0, 1]]).unwrap();
    let line = Fiber::Union(vec![SubTorus { fixed: vec![(1, 0.0)] }]);
    let maps = vec![vec![FiberMap::rotation(vec![0.3, 0.0]).unwrap(); 2]];
    let sys = RandomDynamicalSystem::new(AmenableGroup::integers(), base, 2, vec![Fiber::Full, line], maps).unwrap();
    let (x, y) = (pt(&[0.1, 0.2]), pt(&[0.3, 0.2]));
    assert!(integral_besicovitch(&sys, &x, &y, &z(), &EstimatorConfig::default()).is_err());
}

#[test]
fn sandwich_on_catalog() {
    let cfg = EstimatorConfig { n_max: 256, m_max: 256, search_radius: 16, ..Default::default() };
    for name in ["rot2", "cat2", "mixed"] {
        let sys = system(name).unwrap();
        for (x, y) in common::seeded_pairs(sys.dim(), 6, 11) {
            let o = sys.separation_oracle(&x, &y).unwrap();
            let a = besicovitch(&o, &z(), &cfg).unwrap();
            let s = banach(&o, &z(), &cfg).unwrap();
            for m in 1..=cfg.m_max {
                assert!(s.trace[m - 1].1 >= a.trace[m - 1].1, "{name} m = {m}");
            }
            let min_a = a.trace.iter().map(|t| t.1).fold(f64::INFINITY, f64::min);
            assert!(s.value >= min_a);
        }
    }
}

#[test]
fn csv_row_carries_truncation() {
    let o = SyntheticOracle::constant(AmenableGroup::integers(), 0.25);
    let cfg = EstimatorConfig { n_max: 8, m_max: 4, search_radius: 2, ..Default::default() };
    let est = banach(&o, &z(), &cfg).unwrap();
    assert_eq!(est.csv_row(), "banach,0.25,8,4,2,1,\"(-2)\"");
    assert_eq!(PseudometricEstimate::CSV_HEADER.split(',').count(), est.csv_row().split(',').count());
    assert_eq!(o.separation(&AmenableGroup::integers().identity()), 0.25);
}
