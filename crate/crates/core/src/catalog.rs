//! Exactly solvable systems with declared classifications, and synthetic oracles.
//!
//! | name | group | Ω | fiber maps | declared verdict |
//! |---|---|---|---|---|
//! | `rot2` | ℤ | two points, swapped | rotations of T¹ by `√2−1`, `√3−1` | WME-evidence |
//! | `rot1-trivial` | ℤ | singleton | rotation of T¹ by `(√5−1)/2` | WME-evidence |
//! | `cat-trivial` | ℤ | singleton | `[[2,1],[1,1]]` on T² | sensitive-evidence |
//! | `cat2` | ℤ | two points, swapped | `[[2,1],[1,1]]`, `[[1,1],[1,2]]` on T² | sensitive-evidence |
//! | `mixed` | ℤ | two points, fixed | rotation, `[[2,1],[1,1]]` on T² | sensitive-evidence |
//!
//! Minimality of the skew product is declared metadata, never verified.

use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::classify::Verdict;
use crate::error::{Error, Result};
use crate::group::{AmenableGroup, GroupElement};
use crate::oracle::SeparationOracle;
use crate::rds::{BaseSpace, Fiber, RandomDynamicalSystem};
use crate::torus::{FiberMap, IntMatrix};

pub const SQRT2_M1: f64 = std::f64::consts::SQRT_2 - 1.0;
pub const SQRT3_M1: f64 = 0.732_050_807_568_877_2;
pub const GOLDEN_CONJUGATE: f64 = 0.618_033_988_749_894_9;

/// Names accepted by [`by_name`], besides `synthetic:<spec>`.
pub const SYSTEM_NAMES: [&str; 5] = ["rot2", "rot1-trivial", "cat-trivial", "cat2", "mixed"];

/// Declared properties of a catalog system.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CatalogEntry {
    pub name: String,
    pub parameters: String,
    pub isometric: bool,
    pub expected_verdict: Verdict,
    /// Declared, not verified.
    pub minimal_skew_product: bool,
    pub trivial_base: bool,
}

pub fn cat_matrix() -> IntMatrix {
    IntMatrix::from_rows(&[vec![2, 1], vec![1, 1]]).expect("2x2")
}

fn cat_partner() -> IntMatrix {
    IntMatrix::from_rows(&[vec![1, 1], vec![1, 2]]).expect("2x2")
}

fn checked(system: RandomDynamicalSystem) -> Result<RandomDynamicalSystem> {
    let report = system.validate();
    if !report.passed() {
        let failed: Vec<_> = report.checks.iter().filter(|c| !c.passed).map(|c| c.detail.clone()).collect();
        return Err(Error::Invalid(failed.join("; ")));
    }
    Ok(system)
}

fn infer_dim(rows: &[Vec<usize>]) -> Result<usize> {
    rows.iter()
        .flatten()
        .copied()
        .next()
        .ok_or_else(|| Error::Usage("empty map table".into()))
}

/// Pure rotations `x -> x + angles[s][w]` on full fibers; validated before return.
pub fn random_rotation(
    group: AmenableGroup,
    base: BaseSpace,
    angles: Vec<Vec<Vec<f64>>>,
) -> Result<RandomDynamicalSystem> {
    let dims: Vec<Vec<usize>> = angles.iter().map(|r| r.iter().map(Vec::len).collect()).collect();
    let dim = infer_dim(&dims)?;
    for a in angles.iter().flatten().flatten() {
        if !(0.0..1.0).contains(a) {
            return Err(Error::Usage(format!("rotation angle {a} outside [0, 1)")));
        }
    }
    let maps = angles
        .into_iter()
        .map(|row| row.into_iter().map(FiberMap::rotation).collect::<Result<Vec<_>>>())
        .collect::<Result<Vec<_>>>()?;
    let fibers = vec![Fiber::Full; base.len()];
    checked(RandomDynamicalSystem::new(group, base, dim, fibers, maps)?)
}

/// Linear automorphisms `x -> A[s][w] x` on full fibers; validated before return.
pub fn random_hyperbolic(
    group: AmenableGroup,
    base: BaseSpace,
    matrices: Vec<Vec<IntMatrix>>,
) -> Result<RandomDynamicalSystem> {
    let dims: Vec<Vec<usize>> = matrices.iter().map(|r| r.iter().map(IntMatrix::dim).collect()).collect();
    let dim = infer_dim(&dims)?;
    let maps = matrices
        .into_iter()
        .map(|row| row.into_iter().map(FiberMap::linear).collect::<Result<Vec<_>>>())
        .collect::<Result<Vec<_>>>()?;
    let fibers = vec![Fiber::Full; base.len()];
    checked(RandomDynamicalSystem::new(group, base, dim, fibers, maps)?)
}

/// A topological action viewed as an RDS over a one-point base.
pub fn trivial_action(group: AmenableGroup, maps: Vec<FiberMap>) -> Result<RandomDynamicalSystem> {
    let dim = maps.first().ok_or_else(|| Error::Usage("no generator maps".into()))?.dim();
    let base = BaseSpace::singleton(group.num_generators());
    let maps = maps.into_iter().map(|m| vec![m]).collect();
    checked(RandomDynamicalSystem::new(group, base, dim, vec![Fiber::Full], maps)?)
}

fn two_point_base(perm: Vec<usize>) -> BaseSpace {
    BaseSpace::new(vec!["w0".into(), "w1".into()], vec![0.5, 0.5], vec![perm]).expect("valid base")
}

fn entry(name: &str, parameters: &str, isometric: bool, verdict: Verdict, minimal: bool, trivial: bool) -> CatalogEntry {
    CatalogEntry {
        name: name.into(),
        parameters: parameters.into(),
        isometric,
        expected_verdict: verdict,
        minimal_skew_product: minimal,
        trivial_base: trivial,
    }
}

/// Entries for every named system, in listing order.
pub fn entries() -> Vec<CatalogEntry> {
    use Verdict::*;
    vec![
        entry("rot2", "Z on T^1; swap base; angles (sqrt2-1, sqrt3-1)", true, WmeEvidence, true, false),
        entry("rot1-trivial", "Z on T^1; singleton base; angle (sqrt5-1)/2", true, WmeEvidence, true, true),
        entry("cat-trivial", "Z on T^2; singleton base; [[2,1],[1,1]]", false, SensitiveEvidence, false, true),
        entry("cat2", "Z on T^2; swap base; [[2,1],[1,1]], [[1,1],[1,2]]", false, SensitiveEvidence, false, false),
        entry(
            "mixed",
            "Z on T^2; fixed base, weights 0.5/0.5; rotation (sqrt2-1, sqrt3-1), [[2,1],[1,1]]",
            false,
            SensitiveEvidence,
            false,
            false,
        ),
    ]
}

pub fn entry_by_name(name: &str) -> Option<CatalogEntry> {
    entries().into_iter().find(|e| e.name == name)
}

/// Builds a named catalog system.
pub fn system(name: &str) -> Result<RandomDynamicalSystem> {
    let z = AmenableGroup::integers;
    match name {
        "rot2" => random_rotation(z(), two_point_base(vec![1, 0]), vec![vec![vec![SQRT2_M1], vec![SQRT3_M1]]]),
        "rot1-trivial" => trivial_action(z(), vec![FiberMap::rotation(vec![GOLDEN_CONJUGATE])?]),
        "cat-trivial" => trivial_action(z(), vec![FiberMap::linear(cat_matrix())?]),
        "cat2" => random_hyperbolic(z(), two_point_base(vec![1, 0]), vec![vec![cat_matrix(), cat_partner()]]),
        "mixed" => {
            let maps = vec![vec![FiberMap::rotation(vec![SQRT2_M1, SQRT3_M1])?, FiberMap::linear(cat_matrix())?]];
            checked(RandomDynamicalSystem::new(z(), two_point_base(vec![0, 1]), 2, vec![Fiber::Full; 2], maps)?)
        }
        other => Err(Error::Usage(format!(
            "unknown system {other:?}; expected one of {} or synthetic:<spec>",
            SYSTEM_NAMES.join(", ")
        ))),
    }
}

/// A catalog lookup result.
pub enum CatalogItem {
    System(CatalogEntry, RandomDynamicalSystem),
    Synthetic(SyntheticOracle),
}

/// Resolves `rot2`, ..., or `synthetic:<spec>`.
pub fn by_name(name: &str) -> Result<CatalogItem> {
    if let Some(spec) = name.strip_prefix("synthetic:") {
        return Ok(CatalogItem::Synthetic(synthetic_oracle(spec)?));
    }
    let sys = system(name)?;
    Ok(CatalogItem::System(entry_by_name(name).expect("entry for every system"), sys))
}

type OracleFn = dyn Fn(&GroupElement) -> f64 + Send + Sync;

/// A pure oracle given by a closure on the group.
#[derive(Clone)]
pub struct SyntheticOracle {
    group: AmenableGroup,
    spec: String,
    f: Arc<OracleFn>,
}

impl fmt::Debug for SyntheticOracle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SyntheticOracle").field("group", &self.group).field("spec", &self.spec).finish()
    }
}

impl SyntheticOracle {
    pub fn from_fn(group: AmenableGroup, f: impl Fn(&GroupElement) -> f64 + Send + Sync + 'static) -> Self {
        Self { group, spec: "fn".into(), f: Arc::new(f) }
    }

    pub fn constant(group: AmenableGroup, c: f64) -> Self {
        Self { spec: format!("const:{c}"), ..Self::from_fn(group, move |_| c) }
    }

    /// `pattern[t mod len]` on the first free coordinate.
    pub fn periodic(group: AmenableGroup, pattern: Vec<f64>) -> Self {
        assert!(!pattern.is_empty(), "periodic pattern must be nonempty");
        let spec = format!(
            "periodic:{}",
            pattern.iter().map(f64::to_string).collect::<Vec<_>>().join(",")
        );
        let len = pattern.len() as i64;
        let f = move |g: &GroupElement| pattern[g.coords()[0].rem_euclid(len) as usize];
        Self { spec, ..Self::from_fn(group, f) }
    }

    /// Indicator of the perfect squares `{0, 1, 4, 9, ...}` in ℤ.
    pub fn squares() -> Self {
        let f = |g: &GroupElement| f64::from(u8::from(is_square(g.coords()[0])));
        Self { spec: "squares".into(), ..Self::from_fn(AmenableGroup::integers(), f) }
    }

    /// Indicator of `⋃_k [4^k, 2·4^k)` in ℤ.
    pub fn dyadic_blocks() -> Self {
        let f = |g: &GroupElement| f64::from(u8::from(in_dyadic_block(g.coords()[0])));
        Self { spec: "dyadic".into(), ..Self::from_fn(AmenableGroup::integers(), f) }
    }

    pub fn spec(&self) -> &str {
        &self.spec
    }
}

impl SeparationOracle for SyntheticOracle {
    fn group(&self) -> &AmenableGroup {
        &self.group
    }

    fn separation(&self, g: &GroupElement) -> f64 {
        (self.f)(g)
    }
}

pub fn is_square(n: i64) -> bool {
    if n < 0 {
        return false;
    }
    let r = (n as f64).sqrt() as i64;
    (r.saturating_sub(1)..=r + 1).any(|k| k >= 0 && k.checked_mul(k) == Some(n))
}

pub fn in_dyadic_block(n: i64) -> bool {
    // [4^k, 2*4^k) means the highest set bit sits at an even position
    n >= 1 && (63 - n.leading_zeros()).is_multiple_of(2)
}

/// Parses `const:<c>`, `periodic:<v0>,<v1>,...`, `evens`, `squares`, `dyadic`.
pub fn synthetic_oracle(spec: &str) -> Result<SyntheticOracle> {
    let z = AmenableGroup::integers();
    let bad = |m: String| Error::Parse(format!("synthetic spec {spec:?}: {m}"));
    let value = |s: &str| -> Result<f64> {
        let v: f64 = s.trim().parse().map_err(|e| bad(format!("{e}")))?;
        if v.is_nan() || v < 0.0 {
            return Err(bad("values must be nonnegative".into()));
        }
        Ok(v)
    };
    match spec.split_once(':') {
        Some(("const", c)) => Ok(SyntheticOracle::constant(z, value(c)?)),
        Some(("periodic", p)) => {
            let pattern = p.split(',').map(value).collect::<Result<Vec<_>>>()?;
            Ok(SyntheticOracle::periodic(z, pattern))
        }
        None if spec == "evens" => Ok(SyntheticOracle { spec: "evens".into(), ..SyntheticOracle::periodic(z, vec![1.0, 0.0]) }),
        None if spec == "squares" => Ok(SyntheticOracle::squares()),
        None if spec == "dyadic" => Ok(SyntheticOracle::dyadic_blocks()),
        _ => Err(bad("expected const:<c>, periodic:<values>, evens, squares, or dyadic".into())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rds::AXIOM_TOLERANCE;
    use crate::torus::PhasePoint;

    #[test]
    fn every_named_system_validates() {
        for name in SYSTEM_NAMES {
            let sys = system(name).unwrap();
            let report = sys.validate();
            assert!(report.passed(), "{name}");
            assert!(report.worst_residual() < AXIOM_TOLERANCE, "{name}");
            let e = entry_by_name(name).unwrap();
            assert_eq!(e.isometric, sys.is_isometric(), "{name}");
            assert_eq!(e.trivial_base, sys.base().len() == 1, "{name}");
        }
        assert!(system("nope").is_err());
    }

    #[test]
    fn rotation_examples() {
        let base = two_point_base(vec![1, 0]);
        assert!(random_rotation(AmenableGroup::integers(), base, vec![vec![vec![0.3], vec![0.5]]]).is_ok());
        let z2: AmenableGroup = "Z^2".parse().unwrap();
        let base = BaseSpace::singleton(2);
        let sys = random_rotation(z2, base, vec![vec![vec![0.1, 0.2]], vec![vec![SQRT2_M1, 0.7]]]).unwrap();
        assert!(sys.is_isometric());
        let base = BaseSpace::singleton(1);
        assert!(random_rotation(AmenableGroup::integers(), base, vec![vec![vec![1.5]]]).is_err());
    }

    #[test]
    fn hyperbolic_examples() {
        let cat = system("cat-trivial").unwrap();
        let x = PhasePoint::new(vec![0.5, 0.5]).unwrap();
        let g = AmenableGroup::integers().generator(0);
        assert_eq!(cat.apply(&g, 0, &x).unwrap().coords(), &[0.5, 0.0]);
        let bad = IntMatrix::from_rows(&[vec![2, 0], vec![0, 1]]).unwrap();
        assert!(random_hyperbolic(AmenableGroup::integers(), BaseSpace::singleton(1), vec![vec![bad]]).is_err());
    }

    #[test]
    fn identity_trivial_action_keeps_distance() {
        let sys = trivial_action(AmenableGroup::integers(), vec![FiberMap::identity(2)]).unwrap();
        let x = PhasePoint::new(vec![0.1, 0.2]).unwrap();
        let y = PhasePoint::new(vec![0.4, 0.9]).unwrap();
        let g = AmenableGroup::integers().element(&[17]).unwrap();
        assert_eq!(sys.dtilde(&g, &x, &y).unwrap(), x.distance(&y));
    }

    #[test]
    fn integer_predicates() {
        let squares: Vec<i64> = (-5..50).filter(|&n| is_square(n)).collect();
        assert_eq!(squares, vec![0, 1, 4, 9, 16, 25, 36, 49]);
        assert!(is_square(3_037_000_499 * 3_037_000_499));
        let blocks: Vec<i64> = (0..40).filter(|&n| in_dyadic_block(n)).collect();
        let expected: Vec<i64> = (1..2).chain(4..8).chain(16..32).collect();
        assert_eq!(blocks, expected);
    }

    #[test]
    fn synthetic_specs() {
        let g = |n: i64| AmenableGroup::integers().element(&[n]).unwrap();
        let c = synthetic_oracle("const:0.1").unwrap();
        assert_eq!(c.separation(&g(5)), 0.1);
        let e = synthetic_oracle("evens").unwrap();
        assert_eq!((e.separation(&g(-2)), e.separation(&g(3))), (1.0, 0.0));
        let p = synthetic_oracle("periodic:1,0,0.5").unwrap();
        assert_eq!(p.separation(&g(-1)), 0.5);
        assert!(synthetic_oracle("const:-1").is_err());
        assert!(synthetic_oracle("bogus").is_err());
        assert!(matches!(by_name("synthetic:squares"), Ok(CatalogItem::Synthetic(_))));
    }
}
