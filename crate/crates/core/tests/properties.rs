use proptest::prelude::*;
use weylmean::catalog::{system, SYSTEM_NAMES};
use weylmean::density::*;
use weylmean::group::{AmenableGroup, FolnerFamily, GroupElement};
use weylmean::pseudometric::{banach, besicovitch, EstimatorConfig};
use weylmean::torus::{diameter, FiberMap, IntMatrix, PhasePoint};

fn point(dim: usize) -> impl Strategy<Value = PhasePoint> {
    prop::collection::vec(0.0..1.0f64, dim).prop_map(|c| PhasePoint::new(c).unwrap())
}

/// A point and two perturbations at scales from 1e-6 to 1.
fn triple(dim: usize) -> impl Strategy<Value = (PhasePoint, PhasePoint, PhasePoint)> {
    (point(dim), prop::collection::vec(-1.0..1.0f64, 2 * dim), -6.0..0.0f64).prop_map(move |(x, d, s)| {
        let scale = 10f64.powf(s);
        let shift = |k: usize| {
            let c: Vec<f64> = x.coords().iter().zip(&d[k * dim..(k + 1) * dim]).map(|(a, b)| a + scale * b).collect();
            PhasePoint::new(c).unwrap()
        };
        (x.clone(), shift(0), shift(1))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn pseudometric_axioms(t1 in triple(1), t2 in triple(2)) {
        // the min over window sizes is subadditive only once the ball reaches the separation scale
        let fam = FolnerFamily::boxes(AmenableGroup::integers());
        let cfg = EstimatorConfig::default();
        for name in SYSTEM_NAMES {
            let sys = system(name).unwrap();
            let (x, y, z) = if sys.dim() == 1 { t1.clone() } else { t2.clone() };
            let bes = |a: &PhasePoint, b: &PhasePoint| besicovitch(&sys.separation_oracle(a, b).unwrap(), &fam, &cfg).unwrap().value;
            let ban = |a: &PhasePoint, b: &PhasePoint| banach(&sys.separation_oracle(a, b).unwrap(), &fam, &cfg).unwrap().value;
            for est in [&bes as &dyn Fn(&PhasePoint, &PhasePoint) -> f64, &ban] {
                let (xy, xz, yz) = (est(&x, &y), est(&x, &z), est(&y, &z));
                prop_assert_eq!(est(&x, &x), 0.0);
                prop_assert_eq!(xy, est(&y, &x), "{}", name);
                prop_assert!(xz <= xy + yz + 1e-9, "{}", name);
                prop_assert!(xy <= diameter(sys.dim()));
            }
        }
    }
}

fn periodic_set(pattern: Vec<bool>) -> Indicator<impl Fn(&GroupElement) -> bool + Sync> {
    let len = pattern.len() as i64;
    Indicator::new(AmenableGroup::integers(), move |g: &GroupElement| pattern[g.coords()[0].rem_euclid(len) as usize])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn density_monotone(pattern in prop::collection::vec(any::<bool>(), 1..9), extra in prop::collection::vec(any::<bool>(), 8)) {
        let fam = FolnerFamily::boxes(AmenableGroup::integers());
        let superset: Vec<bool> = pattern.iter().enumerate().map(|(i, &p)| p || extra[i]).collect();
        let (e, f) = (periodic_set(pattern), periodic_set(superset));
        prop_assert!(upper_density(&e, &fam, 200).unwrap().value <= upper_density(&f, &fam, 200).unwrap().value);
        prop_assert!(lower_density(&e, &fam, 200).unwrap().value <= lower_density(&f, &fam, 200).unwrap().value);
        prop_assert!(banach_upper_density(&e, &fam, 64, 8).unwrap().value <= banach_upper_density(&f, &fam, 64, 8).unwrap().value);
        prop_assert!(banach_lower_density(&e, &fam, 64, 8).unwrap().value <= banach_lower_density(&f, &fam, 64, 8).unwrap().value);
    }

    #[test]
    fn density_complement(pattern in prop::collection::vec(any::<bool>(), 1..9), n_max in 4usize..300) {
        let fam = FolnerFamily::boxes(AmenableGroup::integers());
        let flipped: Vec<bool> = pattern.iter().map(|p| !p).collect();
        let (e, c) = (periodic_set(pattern), periodic_set(flipped));
        let sum = upper_density(&e, &fam, n_max).unwrap().value + lower_density(&c, &fam, n_max).unwrap().value;
        prop_assert!((sum - 1.0).abs() <= 1.0 / n_max as f64);
    }

    #[test]
    fn banach_density_translate_invariant(pattern in prop::collection::vec(any::<bool>(), 1..9), shift in -8i64..=8) {
        let fam = FolnerFamily::boxes(AmenableGroup::integers());
        let len = pattern.len() as i64;
        let shifted: Vec<bool> = (0..len).map(|i| pattern[(i - shift).rem_euclid(len) as usize]).collect();
        let a = banach_upper_density(&periodic_set(pattern), &fam, 64, 8).unwrap().value;
        let b = banach_upper_density(&periodic_set(shifted), &fam, 64, 8).unwrap().value;
        prop_assert!((a - b).abs() <= 1.0 / 64.0);
    }

    #[test]
    fn banach_proxies_bracket_the_identity_window(pattern in prop::collection::vec(any::<bool>(), 1..9)) {
        let fam = FolnerFamily::boxes(AmenableGroup::integers());
        let e = periodic_set(pattern);
        let along = upper_density(&e, &fam, 64).unwrap();
        let up = banach_upper_density(&e, &fam, 64, 4).unwrap();
        let lo = banach_lower_density(&e, &fam, 64, 4).unwrap();
        for m in 0..64 {
            prop_assert!(lo.trace[m].1 <= along.trace[m].1 && along.trace[m].1 <= up.trace[m].1);
        }
    }

    #[test]
    fn factor_round_trip(a in -50i64..50, b in -50i64..50, c in 0i64..6) {
        let g: AmenableGroup = "Z^2 x C6".parse().unwrap();
        let e = g.element(&[a, b, c]).unwrap();
        let word = g.factor(&e).unwrap();
        prop_assert_eq!(word.len() as u64, g.word_length(&e));
        prop_assert_eq!(g.evaluate(&word).unwrap(), e.clone());
        let inv = g.inverse(&e).unwrap();
        prop_assert!(g.is_identity(&g.multiply(&e, &inv).unwrap()));
    }

    #[test]
    fn torus_metric(x in point(3), y in point(3), z in point(3)) {
        prop_assert_eq!(x.distance(&y), y.distance(&x));
        prop_assert!(x.distance(&z) <= x.distance(&y) + y.distance(&z) + 1e-15);
        prop_assert!(x.distance(&y) <= diameter(3));
    }

    #[test]
    fn affine_inverse(x in point(2), s in prop::collection::vec(0.0..1.0f64, 2)) {
        let m = FiberMap::new(IntMatrix::from_rows(&[vec![2, 1], vec![1, 1]]).unwrap(), s).unwrap();
        let back = m.inverse().unwrap().apply(&m.apply(&x));
        prop_assert!(back.distance(&x) < 1e-12);
    }
}
