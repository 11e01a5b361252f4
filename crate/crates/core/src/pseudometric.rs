//! Finite-truncation estimators for the mean pseudometrics.
//!
//! | estimator | quantity | reduction |
//! |---|---|---|
//! | [`besicovitch`] | `limsup_n (1/|F_n|) Σ_{t∈F_n} d~(tx,ty)` | max of `A_n` over the trailing tail of `n <= n_max` |
//! | [`banach`] | `inf_K sup_g (1/|K|) Σ_{t∈Kg} d~(tx,ty)` | `min_{m <= m_max} max_{g ∈ ball} avg(F_m g)` |
//! | [`weyl`], [`fiber_weyl`] | sup over Følner sequences | max over translates `F_n g` of the tail limsup |
//! | [`sup_fiber_weyl`] | `sup_w` of the fiber Weyl value | max over admissible fibers |
//! | [`integral_besicovitch`] | Besicovitch average of `Σ_w P(w) d(F_{t,w}x, F_{t,w}y)` | as [`besicovitch`] |
//!
//! The Weyl supremum over all Følner sequences is never enumerated. The Banach
//! inf-sup is the computable stand-in for it, and fiberwise suprema use translate
//! search over the search ball. Every estimate is a heuristic two-sided
//! truncation: it carries `n_max`, `m_max`, and the search radius it was computed
//! with, together with the window and translate that realized it.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::{FolnerFamily, GroupElement};
use crate::oracle::{BoxRegion, SeparationOracle};
use crate::rds::RandomDynamicalSystem;
use crate::torus::PhasePoint;
use crate::window::{sum_gt, AverageField, RegionSamples};

/// Label carried by every estimate.
pub const TRUNCATION_LABEL: &str = "heuristic two-sided truncation";

/// Truncation parameters shared by all estimators.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EstimatorConfig {
    /// Largest Besicovitch window index.
    pub n_max: usize,
    /// Largest Banach window index.
    pub m_max: usize,
    /// Word-length radius of the translate search ball.
    pub search_radius: u64,
    /// Fraction of trailing window indices used for the limsup proxy.
    pub tail_fraction: f64,
    /// Reporting tolerance.
    pub tolerance: f64,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        Self { n_max: 4096, m_max: 1024, search_radius: 64, tail_fraction: 0.5, tolerance: 1e-9 }
    }
}

impl EstimatorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_max < 4 {
            return Err(Error::Usage(format!("n_max must be at least 4, got {}", self.n_max)));
        }
        if self.m_max < 1 {
            return Err(Error::Usage("m_max must be at least 1".into()));
        }
        if !(self.tail_fraction > 0.0 && self.tail_fraction <= 1.0) {
            return Err(Error::Usage(format!(
                "tail_fraction must lie in (0, 1], got {}",
                self.tail_fraction
            )));
        }
        if !(self.tolerance >= 0.0) {
            return Err(Error::Usage("tolerance must be nonnegative".into()));
        }
        Ok(())
    }

    /// Window indices forming the limsup/liminf tail of `1..=n`.
    pub fn tail(&self, n: usize) -> std::ops::RangeInclusive<usize> {
        let len = ((self.tail_fraction * n as f64).ceil() as usize).clamp(1, n);
        (n - len + 1)..=n
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EstimateKind {
    Besicovitch,
    Banach,
    /// Translate-searched Besicovitch limsup of `d~`.
    Weyl,
    FiberBesicovitch,
    FiberWeyl,
    Integral,
}

impl EstimateKind {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Besicovitch => "besicovitch",
            Self::Banach => "banach",
            Self::Weyl => "weyl",
            Self::FiberBesicovitch => "fiber-besicovitch",
            Self::FiberWeyl => "fiber-weyl",
            Self::Integral => "integral",
        }
    }
}

/// An estimated pseudometric value with its convergence trace.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PseudometricEstimate {
    pub kind: EstimateKind,
    pub value: f64,
    /// `(window index, reduced value)` for every index computed.
    pub trace: Vec<(usize, f64)>,
    pub attained_window: usize,
    pub attained_translate: GroupElement,
    pub n_max: usize,
    pub m_max: usize,
    pub search_radius: u64,
}

impl PseudometricEstimate {
    pub const CSV_HEADER: &'static str =
        "kind,value,n_max,m_max,radius,attained_window,attained_translate";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},\"{}\"",
            self.kind.as_str(),
            self.value,
            self.n_max,
            self.m_max,
            self.search_radius,
            self.attained_window,
            self.attained_translate
        )
    }
}

/// Distinct free parts of the search ball, lexicographically ordered, with residues zeroed.
pub(crate) fn translate_set(family: &FolnerFamily, radius: u64) -> Result<Vec<GroupElement>> {
    let group = family.group();
    let ball = group.search_ball(radius, family.budget())?;
    let rank = group.rank();
    let mut out: Vec<GroupElement> = Vec::new();
    for g in ball {
        if out.last().is_some_and(|p| p.coords()[..rank] == g.coords()[..rank]) {
            continue;
        }
        let mut c = g.coords()[..rank].to_vec();
        c.resize(g.coords().len(), 0);
        out.push(group.element(&c)?);
    }
    Ok(out)
}

pub(crate) fn free_part(g: &GroupElement, rank: usize) -> &[i64] {
    &g.coords()[..rank]
}

/// Region covering every window `F_n g` with `n <= n`, `g` in `translates`.
pub(crate) fn covering_region(family: &FolnerFamily, n: usize, translates: &[GroupElement]) -> Result<BoxRegion> {
    family.window_size(n)?;
    BoxRegion::covering(family.group(), n, translates, family.budget())
}

pub(crate) fn check_oracle_group<O: SeparationOracle + ?Sized>(oracle: &O, family: &FolnerFamily) -> Result<()> {
    if oracle.group() != family.group() {
        return Err(Error::Usage(format!(
            "oracle over {} used with a Følner family of {}",
            oracle.group(),
            family.group()
        )));
    }
    Ok(())
}

pub(crate) fn besicovitch_from(
    samples: &RegionSamples,
    family: &FolnerFamily,
    cfg: &EstimatorConfig,
    kind: EstimateKind,
) -> PseudometricEstimate {
    let field = AverageField::new(samples);
    let origin = vec![0i64; family.group().rank()];
    let trace: Vec<(usize, f64)> = (1..=cfg.n_max).map(|n| (n, field.average(&origin, n))).collect();
    let mut best = (0usize, f64::NEG_INFINITY);
    for n in cfg.tail(cfg.n_max) {
        let v = trace[n - 1].1;
        if v > best.1 {
            best = (n, v);
        }
    }
    PseudometricEstimate {
        kind,
        value: best.1,
        trace,
        attained_window: best.0,
        attained_translate: family.group().identity(),
        n_max: cfg.n_max,
        m_max: cfg.m_max,
        search_radius: cfg.search_radius,
    }
}

pub(crate) fn banach_from(
    samples: &RegionSamples,
    family: &FolnerFamily,
    translates: &[GroupElement],
    cfg: &EstimatorConfig,
) -> PseudometricEstimate {
    let field = AverageField::new(samples);
    let rank = family.group().rank();
    let mut trace = Vec::with_capacity(cfg.m_max);
    let mut best = (0usize, f64::INFINITY, 0usize);
    for m in 1..=cfg.m_max {
        let mut s_m = (field.sum(free_part(&translates[0], rank), m), 0usize);
        for (i, g) in translates.iter().enumerate().skip(1) {
            let v = field.sum(free_part(g, rank), m);
            if sum_gt(v, s_m.0) {
                s_m = (v, i);
            }
        }
        let avg = field.to_average(s_m.0, m);
        trace.push((m, avg));
        if avg < best.1 || best.0 == 0 {
            best = (m, avg, s_m.1);
        }
    }
    PseudometricEstimate {
        kind: EstimateKind::Banach,
        value: best.1,
        trace,
        attained_window: best.0,
        attained_translate: translates[best.2].clone(),
        n_max: cfg.n_max,
        m_max: cfg.m_max,
        search_radius: cfg.search_radius,
    }
}

pub(crate) fn translated_from(
    samples: &RegionSamples,
    family: &FolnerFamily,
    translates: &[GroupElement],
    cfg: &EstimatorConfig,
    kind: EstimateKind,
    with_trace: bool,
) -> PseudometricEstimate {
    let field = AverageField::new(samples);
    let rank = family.group().rank();
    let tail = cfg.tail(cfg.n_max);
    let mut trace = Vec::with_capacity(cfg.n_max);
    let mut best = (f64::NEG_INFINITY, 0usize, 0usize);
    let first = if with_trace { 1 } else { *tail.start() };
    for n in first..=cfg.n_max {
        let mut top = (field.sum(free_part(&translates[0], rank), n), 0usize);
        for (i, g) in translates.iter().enumerate().skip(1) {
            let v = field.sum(free_part(g, rank), n);
            if sum_gt(v, top.0) {
                top = (v, i);
            }
        }
        let avg = field.to_average(top.0, n);
        trace.push((n, avg));
        // ties: smallest translate, then smallest window
        if tail.contains(&n) && (avg > best.0 || (avg == best.0 && top.1 < best.2)) {
            best = (avg, n, top.1);
        }
    }
    PseudometricEstimate {
        kind,
        value: best.0,
        trace,
        attained_window: best.1,
        attained_translate: translates[best.2].clone(),
        n_max: cfg.n_max,
        m_max: cfg.m_max,
        search_radius: cfg.search_radius,
    }
}

fn besicovitch_kind<O: SeparationOracle + ?Sized>(
    oracle: &O,
    family: &FolnerFamily,
    cfg: &EstimatorConfig,
    kind: EstimateKind,
) -> Result<PseudometricEstimate> {
    cfg.validate()?;
    check_oracle_group(oracle, family)?;
    let region = covering_region(family, cfg.n_max, &[family.group().identity()])?;
    let samples = RegionSamples::evaluate(oracle, region)?;
    Ok(besicovitch_from(&samples, family, cfg, kind))
}

/// Besicovitch limsup along the box family: `A_n` for `n <= n_max`, value = max over the tail.
pub fn besicovitch<O: SeparationOracle + ?Sized>(
    oracle: &O,
    family: &FolnerFamily,
    cfg: &EstimatorConfig,
) -> Result<PseudometricEstimate> {
    besicovitch_kind(oracle, family, cfg, EstimateKind::Besicovitch)
}

/// [`besicovitch`] applied to a single-fiber oracle.
pub fn fiber_besicovitch<O: SeparationOracle + ?Sized>(
    oracle: &O,
    family: &FolnerFamily,
    cfg: &EstimatorConfig,
) -> Result<PseudometricEstimate> {
    besicovitch_kind(oracle, family, cfg, EstimateKind::FiberBesicovitch)
}

/// Banach inf-sup: `min_{m <= m_max} max_{g ∈ ball} avg(F_m g)`.
///
/// Ties go to the smallest `m`, then the lexicographically smallest `g`.
pub fn banach<O: SeparationOracle + ?Sized>(
    oracle: &O,
    family: &FolnerFamily,
    cfg: &EstimatorConfig,
) -> Result<PseudometricEstimate> {
    cfg.validate()?;
    check_oracle_group(oracle, family)?;
    let translates = translate_set(family, cfg.search_radius)?;
    let region = covering_region(family, cfg.m_max, &translates)?;
    let samples = RegionSamples::evaluate(oracle, region)?;
    Ok(banach_from(&samples, family, &translates, cfg))
}

fn translated<O: SeparationOracle + ?Sized>(
    oracle: &O,
    family: &FolnerFamily,
    cfg: &EstimatorConfig,
    kind: EstimateKind,
) -> Result<PseudometricEstimate> {
    cfg.validate()?;
    check_oracle_group(oracle, family)?;
    let translates = translate_set(family, cfg.search_radius)?;
    let region = covering_region(family, cfg.n_max, &translates)?;
    let samples = RegionSamples::evaluate(oracle, region)?;
    Ok(translated_from(&samples, family, &translates, cfg, kind, true))
}

/// Translate-searched Besicovitch limsup of `d~`: max over `g` in the ball of the
/// tail limsup along `{F_n g}`.
pub fn weyl<O: SeparationOracle + ?Sized>(
    oracle: &O,
    family: &FolnerFamily,
    cfg: &EstimatorConfig,
) -> Result<PseudometricEstimate> {
    translated(oracle, family, cfg, EstimateKind::Weyl)
}

/// Fiberwise Weyl estimate: translate search over `{F_n g}` with a fiber oracle.
///
/// A lower estimate of the supremum over all Følner sequences.
pub fn fiber_weyl<O: SeparationOracle + ?Sized>(
    oracle: &O,
    family: &FolnerFamily,
    cfg: &EstimatorConfig,
) -> Result<PseudometricEstimate> {
    translated(oracle, family, cfg, EstimateKind::FiberWeyl)
}

/// Max of [`fiber_weyl`] over support fibers holding both points; `+inf` if none.
pub fn sup_fiber_weyl(
    system: &RandomDynamicalSystem,
    x: &PhasePoint,
    y: &PhasePoint,
    family: &FolnerFamily,
    cfg: &EstimatorConfig,
) -> Result<PseudometricEstimate> {
    let fibers = system.admissible(x, y);
    let mut best: Option<PseudometricEstimate> = None;
    for w in fibers {
        let est = fiber_weyl(&system.fiber_separation_oracle(w, x, y)?, family, cfg)?;
        if best.as_ref().is_none_or(|b| est.value > b.value) {
            best = Some(est);
        }
    }
    match best {
        Some(b) => Ok(b),
        None => {
            cfg.validate()?;
            Ok(PseudometricEstimate {
                kind: EstimateKind::FiberWeyl,
                value: f64::INFINITY,
                trace: Vec::new(),
                attained_window: 0,
                attained_translate: family.group().identity(),
                n_max: cfg.n_max,
                m_max: cfg.m_max,
                search_radius: cfg.search_radius,
            })
        }
    }
}

/// Besicovitch average of the weighted fiber separation `Σ_w P(w) d(F_{t,w}x, F_{t,w}y)`.
pub fn integral_besicovitch(
    system: &RandomDynamicalSystem,
    x: &PhasePoint,
    y: &PhasePoint,
    family: &FolnerFamily,
    cfg: &EstimatorConfig,
) -> Result<PseudometricEstimate> {
    besicovitch_kind(&system.integral_separation_oracle(x, y)?, family, cfg, EstimateKind::Integral)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::SyntheticOracle;
    use crate::group::AmenableGroup;

    fn small() -> EstimatorConfig {
        EstimatorConfig { n_max: 256, m_max: 64, search_radius: 8, ..Default::default() }
    }

    fn z() -> FolnerFamily {
        FolnerFamily::boxes(AmenableGroup::integers())
    }

    #[test]
    fn config_validation() {
        assert!(EstimatorConfig::default().validate().is_ok());
        assert!(EstimatorConfig { n_max: 3, ..Default::default() }.validate().is_err());
        assert!(EstimatorConfig { tail_fraction: 0.0, ..Default::default() }.validate().is_err());
        assert!(EstimatorConfig { tail_fraction: 1.5, ..Default::default() }.validate().is_err());
        assert_eq!(EstimatorConfig::default().tail(4096), 2049..=4096);
        assert_eq!(EstimatorConfig { tail_fraction: 1.0, ..Default::default() }.tail(10), 1..=10);
    }

    #[test]
    fn constant_oracle_is_exact_everywhere() {
        let o = SyntheticOracle::constant(AmenableGroup::integers(), 0.1);
        let cfg = small();
        for est in [
            besicovitch(&o, &z(), &cfg).unwrap(),
            banach(&o, &z(), &cfg).unwrap(),
            weyl(&o, &z(), &cfg).unwrap(),
        ] {
            assert_eq!(est.value, 0.1, "{:?}", est.kind);
            assert!(est.trace.iter().all(|&(_, v)| v == 0.1));
        }
    }

    #[test]
    fn zero_oracle() {
        let o = SyntheticOracle::constant(AmenableGroup::integers(), 0.0);
        assert_eq!(banach(&o, &z(), &small()).unwrap().value, 0.0);
        assert_eq!(besicovitch(&o, &z(), &small()).unwrap().value, 0.0);
    }

    #[test]
    fn even_odd_averages() {
        let o = SyntheticOracle::periodic(AmenableGroup::integers(), vec![1.0, 0.0]);
        let cfg = small();
        let est = besicovitch(&o, &z(), &cfg).unwrap();
        for &(n, a) in &est.trace {
            assert!((a - 0.5).abs() <= 1.0 / n as f64 + 1e-15);
        }
        // odd n in the tail: (n+1)/(2n) at n = 129
        assert_eq!(est.attained_window, 129);
        assert!((est.value - 130.0 / 258.0).abs() < 1e-15);
        // even windows give exactly 1/2, and the min over m picks m = 2
        let b = banach(&o, &z(), &cfg).unwrap();
        assert_eq!(b.value, 0.5);
        assert_eq!(b.attained_window, 2);
    }

    #[test]
    fn infinity_propagates() {
        let o = SyntheticOracle::constant(AmenableGroup::integers(), f64::INFINITY);
        assert!(besicovitch(&o, &z(), &small()).unwrap().value.is_infinite());
        assert!(banach(&o, &z(), &small()).unwrap().value.is_infinite());
        assert!(weyl(&o, &z(), &small()).unwrap().value.is_infinite());
    }

    #[test]
    fn rejects_group_mismatch() {
        let o = SyntheticOracle::constant(AmenableGroup::integers(), 0.1);
        let f = FolnerFamily::boxes("Z^2".parse().unwrap());
        assert!(matches!(banach(&o, &f, &small()), Err(Error::Usage(_))));
    }

    #[test]
    fn banach_matches_naive_translate_sums() {
        // brute force: materialize every translate window and average oracle calls
        use crate::group::translate;
        let g: AmenableGroup = "Z x C2".parse().unwrap();
        let fam = FolnerFamily::boxes(g.clone());
        let o = SyntheticOracle::from_fn(g.clone(), |e| {
            let c = e.coords();
            ((c[0] * 7 + c[1] * 3).rem_euclid(5)) as f64 / 4.0
        });
        let cfg = EstimatorConfig { n_max: 8, m_max: 6, search_radius: 3, ..Default::default() };
        let est = banach(&o, &fam, &cfg).unwrap();
        let ball = g.search_ball(cfg.search_radius, 1000).unwrap();
        let mut naive_min = f64::INFINITY;
        for m in 1..=cfg.m_max {
            let w = fam.window(m).unwrap();
            let mut s_m = f64::NEG_INFINITY;
            for t in &ball {
                let tw = translate(&g, &w, t).unwrap();
                let avg = tw.elements.iter().map(|e| o.separation(e)).sum::<f64>() / tw.len() as f64;
                s_m = s_m.max(avg);
            }
            assert!((est.trace[m - 1].1 - s_m).abs() < 1e-12, "m = {m}");
            naive_min = naive_min.min(s_m);
        }
        assert!((est.value - naive_min).abs() < 1e-12);
    }

    #[test]
    fn z2_besicovitch_matches_naive() {
        let g: AmenableGroup = "Z^2".parse().unwrap();
        let fam = FolnerFamily::boxes(g.clone());
        let o = SyntheticOracle::from_fn(g, |e| if (e.coords()[0] + e.coords()[1]) % 3 == 0 { 1.0 } else { 0.0 });
        let cfg = EstimatorConfig { n_max: 12, m_max: 4, search_radius: 2, ..Default::default() };
        let est = besicovitch(&o, &fam, &cfg).unwrap();
        for n in 1..=12usize {
            let w = fam.window(n).unwrap();
            let naive = w.elements.iter().map(|e| o.separation(e)).sum::<f64>() / w.len() as f64;
            assert!((est.trace[n - 1].1 - naive).abs() < 1e-12);
        }
    }
}
