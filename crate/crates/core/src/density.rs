//! Densities of subsets of the group along box windows.
//!
//! Window ratios `|E ∩ F| / |F|` are exact integer counts over a sampled region.
//! Upper and lower densities take the max and min over the trailing half of the
//! window indices. Banach proxies reduce over window sizes and translates:
//! `BD* ≈ min_m max_g`, `BD_* ≈ max_m min_g`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::group::{AmenableGroup, FolnerFamily, GroupElement};
use crate::oracle::SeparationOracle;
use crate::pseudometric::{covering_region, free_part, translate_set};
use crate::window::{CountField, RegionSamples};

/// Fraction of trailing window indices used by [`upper_density`] and [`lower_density`].
pub const DENSITY_TAIL: f64 = 0.5;

/// Membership predicate of a subset `E` of the group.
pub trait SubsetIndicator: Sync {
    fn group(&self) -> &AmenableGroup;
    fn contains(&self, g: &GroupElement) -> bool;
}

/// A subset given by a closure.
pub struct Indicator<F> {
    group: AmenableGroup,
    f: F,
}

impl<F: Fn(&GroupElement) -> bool + Sync> Indicator<F> {
    pub fn new(group: AmenableGroup, f: F) -> Self {
        Self { group, f }
    }
}

impl<F: Fn(&GroupElement) -> bool + Sync> SubsetIndicator for Indicator<F> {
    fn group(&self) -> &AmenableGroup {
        &self.group
    }

    fn contains(&self, g: &GroupElement) -> bool {
        (self.f)(g)
    }
}

/// `{g : oracle(g) >= eps}`; the `+inf` sentinel is a member.
pub struct SeparationSet<O> {
    oracle: O,
    eps: f64,
}

impl<O: SeparationOracle> SeparationSet<O> {
    pub fn threshold(&self) -> f64 {
        self.eps
    }
}

impl<O: SeparationOracle> SubsetIndicator for SeparationSet<O> {
    fn group(&self) -> &AmenableGroup {
        self.oracle.group()
    }

    fn contains(&self, g: &GroupElement) -> bool {
        self.oracle.separation(g) >= self.eps
    }
}

pub fn separation_set<O: SeparationOracle>(oracle: O, eps: f64) -> Result<SeparationSet<O>> {
    if !(eps > 0.0) {
        return Err(Error::Usage(format!("separation threshold must be positive, got {eps}")));
    }
    Ok(SeparationSet { oracle, eps })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DensityKind {
    Upper,
    Lower,
    BanachUpper,
    BanachLower,
}

impl DensityKind {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Upper => "upper",
            Self::Lower => "lower",
            Self::BanachUpper => "banach-upper",
            Self::BanachLower => "banach-lower",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DensityEstimate {
    pub kind: DensityKind,
    pub value: f64,
    /// `(window index, ratio)`; for Banach kinds the ratio is the reduction over translates.
    pub trace: Vec<(usize, f64)>,
    pub attained_window: usize,
    pub attained_translate: GroupElement,
    /// Largest window index used.
    pub window_max: usize,
    pub search_radius: u64,
}

impl DensityEstimate {
    pub const CSV_HEADER: &'static str = "kind,value,window_max,radius,attained_window,attained_translate";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},\"{}\"",
            self.kind.as_str(),
            self.value,
            self.window_max,
            self.search_radius,
            self.attained_window,
            self.attained_translate
        )
    }
}

fn check(group: &AmenableGroup, family: &FolnerFamily, n: usize) -> Result<()> {
    if group != family.group() {
        return Err(Error::Usage(format!("subset of {group} used with a Følner family of {}", family.group())));
    }
    if n < 4 {
        return Err(Error::Usage(format!("window index bound must be at least 4, got {n}")));
    }
    Ok(())
}

fn indicator_samples<E: SubsetIndicator + ?Sized>(
    set: &E,
    family: &FolnerFamily,
    n: usize,
    translates: &[GroupElement],
) -> Result<RegionSamples> {
    let region = covering_region(family, n, translates)?;
    let r = region.clone();
    Ok(RegionSamples::from_fn(region, move |i| f64::from(u8::from(set.contains(&r.element(i))))))
}

fn is_member(v: f64) -> bool {
    v >= 0.5
}

pub(crate) fn along_from(field: &CountField<'_>, family: &FolnerFamily, n_max: usize, kind: DensityKind) -> DensityEstimate {
    let origin = vec![0i64; family.group().rank()];
    let trace: Vec<(usize, f64)> = (1..=n_max).map(|n| (n, field.ratio(&origin, n))).collect();
    let len = ((DENSITY_TAIL * n_max as f64).ceil() as usize).clamp(1, n_max);
    let upper = kind == DensityKind::Upper;
    let mut best = (0usize, if upper { f64::NEG_INFINITY } else { f64::INFINITY });
    for &(n, v) in &trace[n_max - len..] {
        if (upper && v > best.1) || (!upper && v < best.1) {
            best = (n, v);
        }
    }
    DensityEstimate {
        kind,
        value: best.1,
        trace,
        attained_window: best.0,
        attained_translate: family.group().identity(),
        window_max: n_max,
        search_radius: 0,
    }
}

pub(crate) fn banach_from(
    field: &CountField<'_>,
    family: &FolnerFamily,
    translates: &[GroupElement],
    m_max: usize,
    radius: u64,
    kind: DensityKind,
) -> DensityEstimate {
    let rank = family.group().rank();
    let upper = kind == DensityKind::BanachUpper;
    // inner reduction over translates, outer over window sizes in the opposite sense
    let inner_better = |a: i128, b: i128| if upper { a > b } else { a < b };
    let inner_better_f = |a: f64, b: f64| if upper { a > b } else { a < b };
    let mut trace = Vec::with_capacity(m_max);
    let mut best = (0usize, 0usize, 0.0f64);
    for m in 1..=m_max {
        let mut s = (0usize, field.count(free_part(&translates[0], rank), m));
        for (i, g) in translates.iter().enumerate().skip(1) {
            let c = field.count(free_part(g, rank), m);
            if inner_better(c, s.1) {
                s = (i, c);
            }
        }
        let ratio = field.to_ratio(s.1, m);
        trace.push((m, ratio));
        if best.0 == 0 || inner_better_f(best.2, ratio) {
            best = (m, s.0, ratio);
        }
    }
    DensityEstimate {
        kind,
        value: best.2,
        trace,
        attained_window: best.0,
        attained_translate: translates[best.1].clone(),
        window_max: m_max,
        search_radius: radius,
    }
}

fn along<E: SubsetIndicator + ?Sized>(set: &E, family: &FolnerFamily, n_max: usize, kind: DensityKind) -> Result<DensityEstimate> {
    check(set.group(), family, n_max)?;
    let samples = indicator_samples(set, family, n_max, &[family.group().identity()])?;
    Ok(along_from(&CountField::new(&samples, is_member), family, n_max, kind))
}

/// Limsup proxy of `|E ∩ F_n| / |F_n|`: max over the trailing half of `n <= n_max`.
pub fn upper_density<E: SubsetIndicator + ?Sized>(set: &E, family: &FolnerFamily, n_max: usize) -> Result<DensityEstimate> {
    along(set, family, n_max, DensityKind::Upper)
}

/// Liminf proxy of `|E ∩ F_n| / |F_n|`: min over the trailing half of `n <= n_max`.
pub fn lower_density<E: SubsetIndicator + ?Sized>(set: &E, family: &FolnerFamily, n_max: usize) -> Result<DensityEstimate> {
    along(set, family, n_max, DensityKind::Lower)
}

fn banach<E: SubsetIndicator + ?Sized>(
    set: &E,
    family: &FolnerFamily,
    m_max: usize,
    radius: u64,
    kind: DensityKind,
) -> Result<DensityEstimate> {
    check(set.group(), family, m_max)?;
    let translates = translate_set(family, radius)?;
    let samples = indicator_samples(set, family, m_max, &translates)?;
    Ok(banach_from(&CountField::new(&samples, is_member), family, &translates, m_max, radius, kind))
}

/// `min_{m <= m_max} max_{g ∈ ball} |E ∩ F_m g| / |F_m|`.
pub fn banach_upper_density<E: SubsetIndicator + ?Sized>(
    set: &E,
    family: &FolnerFamily,
    m_max: usize,
    radius: u64,
) -> Result<DensityEstimate> {
    banach(set, family, m_max, radius, DensityKind::BanachUpper)
}

/// `max_{m <= m_max} min_{g ∈ ball} |E ∩ F_m g| / |F_m|`.
pub fn banach_lower_density<E: SubsetIndicator + ?Sized>(
    set: &E,
    family: &FolnerFamily,
    m_max: usize,
    radius: u64,
) -> Result<DensityEstimate> {
    banach(set, family, m_max, radius, DensityKind::BanachLower)
}

/// [`banach_upper_density`] of `{g : sample >= eps}` on precomputed oracle samples.
pub(crate) fn banach_upper_of_samples(
    samples: &RegionSamples,
    family: &FolnerFamily,
    translates: &[GroupElement],
    m_max: usize,
    radius: u64,
    eps: f64,
) -> DensityEstimate {
    let field = CountField::new(samples, |v| v >= eps);
    banach_from(&field, family, translates, m_max, radius, DensityKind::BanachUpper)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{is_square, SyntheticOracle};

    fn z() -> FolnerFamily {
        FolnerFamily::boxes(AmenableGroup::integers())
    }

    fn zset(f: impl Fn(i64) -> bool + Sync) -> Indicator<impl Fn(&GroupElement) -> bool + Sync> {
        Indicator::new(AmenableGroup::integers(), move |g: &GroupElement| f(g.coords()[0]))
    }

    #[test]
    fn whole_and_empty() {
        let all = zset(|_| true);
        let none = zset(|_| false);
        assert_eq!(upper_density(&all, &z(), 64).unwrap().value, 1.0);
        assert_eq!(banach_upper_density(&all, &z(), 16, 4).unwrap().value, 1.0);
        assert_eq!(upper_density(&none, &z(), 64).unwrap().value, 0.0);
        assert_eq!(banach_lower_density(&none, &z(), 16, 4).unwrap().value, 0.0);
    }

    #[test]
    fn evens() {
        let evens = zset(|n| n % 2 == 0);
        let up = upper_density(&evens, &z(), 100).unwrap();
        for &(n, r) in &up.trace {
            assert!((r - 0.5).abs() <= 1.0 / n as f64);
        }
        let bd = banach_upper_density(&evens, &z(), 64, 8).unwrap();
        for &(m, r) in &bd.trace {
            if m % 2 == 0 {
                assert_eq!(r, 0.5);
            }
        }
        assert_eq!(bd.value, 0.5);
    }

    #[test]
    fn squares_have_small_banach_density() {
        let sq = zset(is_square);
        let bd = banach_upper_density(&sq, &z(), 10_000, 4).unwrap();
        assert!(bd.value <= 0.02, "{}", bd.value);
        // sliding-window brute force at m = 10^4 over the ball
        let mut brute = 0usize;
        for g in -4i64..=4 {
            brute = brute.max((g..g + 10_000).filter(|&n| is_square(n)).count());
        }
        assert_eq!(bd.trace[9_999].1, brute as f64 / 1e4);
    }

    #[test]
    fn separation_set_examples() {
        let g = AmenableGroup::integers();
        let e = |n: i64| g.element(&[n]).unwrap();
        let c = SyntheticOracle::constant(g.clone(), 0.1);
        assert!(!separation_set(&c, 0.2).unwrap().contains(&e(3)));
        assert!(separation_set(&c, 0.05).unwrap().contains(&e(3)));
        let eo = SyntheticOracle::periodic(g.clone(), vec![1.0, 0.0]);
        let s = separation_set(&eo, 0.5).unwrap();
        assert!(s.contains(&e(-4)) && !s.contains(&e(7)));
        let inf = SyntheticOracle::constant(g.clone(), f64::INFINITY);
        assert!(separation_set(&inf, 1e9).unwrap().contains(&e(0)));
        assert!(separation_set(&c, 0.0).is_err());
    }

    #[test]
    fn rejects_small_bounds() {
        assert!(upper_density(&zset(|_| true), &z(), 3).is_err());
    }

    #[test]
    fn z2_parity_density() {
        let g: AmenableGroup = "Z^2".parse().unwrap();
        let fam = FolnerFamily::boxes(g.clone());
        let set = Indicator::new(g, |e: &GroupElement| (e.coords()[0] + e.coords()[1]) % 2 == 0);
        let bd = banach_upper_density(&set, &fam, 8, 2).unwrap();
        assert_eq!(bd.trace[1].1, 0.5);
        assert_eq!(bd.value, 0.5);
    }
}
