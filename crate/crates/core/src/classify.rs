//! Evidence for mean equicontinuity or mean sensitivity from finite samples.
//!
//! Nothing here proves a universally quantified property. Every verdict is
//! labeled as evidence and carries the seed and truncation it was computed at.
//!
//! Sampling is reproducible: each task draws from its own ChaCha8 stream keyed by
//! the seed and the task's identity (δ value and pair index, grid point, ...), so
//! results do not depend on evaluation order or worker count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::density::banach_upper_of_samples;
use crate::error::{Error, Result};
use crate::group::{FolnerFamily, GroupElement};
use crate::pseudometric::{
    banach_from, covering_region, translate_set, translated_from, EstimateKind, EstimatorConfig, TRUNCATION_LABEL,
};
use crate::rds::{RandomDynamicalSystem, SubTorus};
use crate::torus::{diameter, PhasePoint};
use crate::window::RegionSamples;

/// Slack allowed in `ε·BD*(E_ε) <= banach`.
pub const CHAIN_TOLERANCE: f64 = 1e-9;

/// Shrink factor keeping sampled radii strictly inside open balls.
const INSIDE: f64 = 0.999;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    #[serde(rename = "WME-evidence")]
    WmeEvidence,
    #[serde(rename = "sensitive-evidence")]
    SensitiveEvidence,
    #[serde(rename = "inconclusive")]
    Inconclusive,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::WmeEvidence => "WME-evidence",
            Self::SensitiveEvidence => "sensitive-evidence",
            Self::Inconclusive => "inconclusive",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ClassifierConfig {
    pub estimator: EstimatorConfig,
    /// Strictly decreasing.
    pub eps_list: Vec<f64>,
    /// Strictly decreasing.
    pub delta_grid: Vec<f64>,
    /// Sampled pairs per δ cell.
    pub pairs_per_cell: usize,
    /// Sensitivity threshold.
    pub delta0: f64,
    /// Ball radii for the sensitivity search; strictly decreasing.
    pub eps_sequence: Vec<f64>,
    /// Points sampled for the sensitivity and point-status search.
    pub sample_points: usize,
    /// Sampled `y` per (ball radius, fiber) in the sensitivity search.
    pub tries: usize,
    /// Random pairs per (grid point, δ) in the equicontinuity region search.
    pub region_pairs: usize,
    pub seed: u64,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        let geometric = vec![1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6];
        Self {
            estimator: EstimatorConfig::default(),
            eps_list: vec![0.2, 0.1, 0.05],
            delta_grid: geometric.clone(),
            pairs_per_cell: 200,
            delta0: 0.1,
            eps_sequence: geometric,
            sample_points: 16,
            tries: 4,
            region_pairs: 16,
            seed: 0,
        }
    }
}

fn strictly_decreasing_positive(name: &str, v: &[f64]) -> Result<()> {
    if v.is_empty() || v.iter().any(|&x| !(x > 0.0) || !x.is_finite()) || v.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::Usage(format!("{name} must be nonempty, positive, and strictly decreasing")));
    }
    Ok(())
}

impl ClassifierConfig {
    pub fn validate(&self) -> Result<()> {
        self.estimator.validate()?;
        strictly_decreasing_positive("eps_list", &self.eps_list)?;
        strictly_decreasing_positive("delta_grid", &self.delta_grid)?;
        strictly_decreasing_positive("eps_sequence", &self.eps_sequence)?;
        if self.pairs_per_cell < 100 {
            return Err(Error::Usage(format!("pairs_per_cell must be at least 100, got {}", self.pairs_per_cell)));
        }
        if !(self.delta0 > 0.0) {
            return Err(Error::Usage(format!("delta0 must be positive, got {}", self.delta0)));
        }
        if self.sample_points == 0 || self.tries == 0 || self.region_pairs == 0 {
            return Err(Error::Usage("sample_points, tries, and region_pairs must be positive".into()));
        }
        Ok(())
    }
}

mod stream {
    pub const PAIR: u64 = 1;
    pub const POINT: u64 = 2;
    pub const SENSITIVITY: u64 = 3;
    pub const REGION: u64 = 4;
}

fn task_rng(seed: u64, purpose: u64, a: u64, b: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // splitmix-style mixing keeps distinct tasks on distinct streams
    let mut k = purpose.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ a.rotate_left(21) ^ b.rotate_left(42);
    k ^= k >> 31;
    rng.set_stream(k.wrapping_mul(0xBF58_476D_1CE4_E5B9));
    rng
}

fn uniform_in(component: &SubTorus, dim: usize, rng: &mut impl Rng) -> PhasePoint {
    let mut c: Vec<f64> = (0..dim).map(|_| rng.random::<f64>()).collect();
    for &(i, v) in &component.fixed {
        c[i] = v;
    }
    PhasePoint::new(c).expect("finite coordinates")
}

/// A point of the same component at distance in `(0, INSIDE·radius]` along a random free direction.
fn near(x: &PhasePoint, component: &SubTorus, radius: f64, rng: &mut impl Rng) -> PhasePoint {
    let free: Vec<usize> = (0..x.dim()).filter(|i| !component.fixed.iter().any(|&(j, _)| j == *i)).collect();
    let r = radius * INSIDE * (1.0 - rng.random::<f64>());
    let mut dir: Vec<f64> = free.iter().map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
    let norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm == 0.0 {
        if let Some(d) = dir.first_mut() {
            *d = 1.0;
        }
    } else {
        dir.iter_mut().for_each(|v| *v /= norm);
    }
    let mut c = x.coords().to_vec();
    for (&i, d) in free.iter().zip(&dir) {
        c[i] += r * d;
    }
    PhasePoint::new(c).expect("finite coordinates")
}

fn component_of(system: &RandomDynamicalSystem, w: usize, x: &PhasePoint) -> Option<SubTorus> {
    system.fibers()[w]
        .components()
        .into_iter()
        .find(|c| crate::rds::Fiber::Union(vec![c.clone()]).contains(x))
}

/// A common-fiber pair with `d(x, y) < delta`, drawn from its own stream.
fn sample_pair(system: &RandomDynamicalSystem, seed: u64, delta: f64, index: usize) -> (usize, PhasePoint, PhasePoint) {
    let mut rng = task_rng(seed, stream::PAIR, delta.to_bits(), index as u64);
    let support = system.base().support();
    let w = support[rng.random_range(0..support.len())];
    let comps = system.fibers()[w].components();
    let comp = &comps[rng.random_range(0..comps.len())];
    let x = uniform_in(comp, system.dim(), &mut rng);
    let y = near(&x, comp, delta, &mut rng);
    (w, x, y)
}

/// Estimates for one pair, all computed from a single oracle sweep.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PairRow {
    pub delta: f64,
    pub fiber: usize,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub distance: f64,
    pub banach: f64,
    pub weyl: f64,
    /// `BD*` proxy of `{g : d~(gx, gy) >= eps}` for each `eps` in the list.
    pub separation_density: Vec<f64>,
}

struct Workspace {
    family: FolnerFamily,
    translates: Vec<GroupElement>,
}

impl Workspace {
    fn new(system: &RandomDynamicalSystem, cfg: &EstimatorConfig) -> Result<Self> {
        let family = FolnerFamily::boxes(system.group().clone());
        let translates = translate_set(&family, cfg.search_radius)?;
        covering_region(&family, cfg.n_max.max(cfg.m_max), &translates)?;
        Ok(Self { family, translates })
    }

    fn samples(&self, system: &RandomDynamicalSystem, x: &PhasePoint, y: &PhasePoint, n: usize) -> Result<RegionSamples> {
        let region = covering_region(&self.family, n, &self.translates)?;
        RegionSamples::evaluate(&system.separation_oracle(x, y)?, region)
    }

    fn banach(&self, system: &RandomDynamicalSystem, x: &PhasePoint, y: &PhasePoint, cfg: &EstimatorConfig) -> Result<f64> {
        let samples = self.samples(system, x, y, cfg.m_max)?;
        Ok(banach_from(&samples, &self.family, &self.translates, cfg).value)
    }

    fn pair_row(
        &self,
        system: &RandomDynamicalSystem,
        delta: f64,
        (w, x, y): (usize, PhasePoint, PhasePoint),
        eps_list: &[f64],
        cfg: &EstimatorConfig,
        with_weyl: bool,
    ) -> Result<PairRow> {
        let n = if with_weyl { cfg.n_max.max(cfg.m_max) } else { cfg.m_max };
        let samples = self.samples(system, &x, &y, n)?;
        let banach = banach_from(&samples, &self.family, &self.translates, cfg).value;
        let weyl = if with_weyl {
            translated_from(&samples, &self.family, &self.translates, cfg, EstimateKind::Weyl, false).value
        } else {
            f64::NAN
        };
        let separation_density = eps_list
            .iter()
            .map(|&e| banach_upper_of_samples(&samples, &self.family, &self.translates, cfg.m_max, cfg.search_radius, e).value)
            .collect();
        Ok(PairRow {
            delta,
            fiber: w,
            distance: x.distance(&y),
            x: x.coords().to_vec(),
            y: y.coords().to_vec(),
            banach,
            weyl,
            separation_density,
        })
    }
}

fn require_valid(system: &RandomDynamicalSystem) -> Result<()> {
    let report = system.validate();
    if !report.passed() {
        return Err(Error::Invalid(format!(
            "system fails validation (worst residual {:e})",
            report.worst_residual()
        )));
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ModulusRow {
    pub eps: f64,
    /// Largest grid δ at which every sampled pair estimated below `eps`.
    pub delta: Option<f64>,
    /// Worst estimate at `delta`, or at the smallest grid δ when none passed.
    pub worst_estimate: f64,
    pub samples: usize,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ModulusTable {
    pub estimator: EstimateKind,
    pub rows: Vec<ModulusRow>,
}

impl ModulusTable {
    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }

    fn from_cells(estimator: EstimateKind, eps_list: &[f64], grid: &[f64], cells: &[Vec<f64>]) -> Self {
        let rows = eps_list
            .iter()
            .map(|&eps| {
                let worst: Vec<f64> = cells.iter().map(|c| c.iter().copied().fold(0.0, f64::max)).collect();
                let hit = worst.iter().position(|&v| v < eps);
                let at = hit.unwrap_or(grid.len() - 1);
                ModulusRow {
                    eps,
                    delta: hit.map(|i| grid[i]),
                    worst_estimate: worst[at],
                    samples: cells[at].len(),
                    pass: hit.is_some(),
                }
            })
            .collect();
        Self { estimator, rows }
    }
}

fn sampled_rows(
    system: &RandomDynamicalSystem,
    cfg: &ClassifierConfig,
    eps_list: &[f64],
    with_weyl: bool,
) -> Result<Vec<Vec<PairRow>>> {
    let ws = Workspace::new(system, &cfg.estimator)?;
    cfg.delta_grid
        .iter()
        .map(|&delta| {
            (0..cfg.pairs_per_cell)
                .into_par_iter()
                .map(|j| {
                    let pair = sample_pair(system, cfg.seed, delta, j);
                    ws.pair_row(system, delta, pair, eps_list, &cfg.estimator, with_weyl)
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect()
}

/// Banach-estimate modulus table: for each ε, the largest grid δ such that every
/// sampled common-fiber pair with `d(x, y) < δ` estimates below ε.
pub fn wme_test(system: &RandomDynamicalSystem, cfg: &ClassifierConfig) -> Result<ModulusTable> {
    cfg.validate()?;
    require_valid(system)?;
    let cells = sampled_rows(system, cfg, &[], false)?;
    let values: Vec<Vec<f64>> = cells.iter().map(|c| c.iter().map(|r| r.banach).collect()).collect();
    Ok(ModulusTable::from_cells(EstimateKind::Banach, &cfg.eps_list, &cfg.delta_grid, &values))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StabilityResult {
    pub eps: f64,
    pub delta: f64,
    pub passed: bool,
    /// Largest `BD*` proxy of an ε-separation set over the sampled pairs.
    pub worst_density: f64,
    pub samples: usize,
}

/// Whether every sampled pair with `d(x, y) < delta` separates by `eps` only on a
/// set of Banach upper density below `eps`.
pub fn mean_l_stable_test(
    system: &RandomDynamicalSystem,
    eps: f64,
    delta: f64,
    cfg: &ClassifierConfig,
) -> Result<StabilityResult> {
    if !(eps > 0.0 && delta > 0.0) {
        return Err(Error::Usage("eps and delta must be positive".into()));
    }
    cfg.validate()?;
    require_valid(system)?;
    let ws = Workspace::new(system, &cfg.estimator)?;
    let rows = (0..cfg.pairs_per_cell)
        .into_par_iter()
        .map(|j| ws.pair_row(system, delta, sample_pair(system, cfg.seed, delta, j), &[eps], &cfg.estimator, false))
        .collect::<Result<Vec<_>>>()?;
    Ok(stability_from(eps, delta, rows.iter().map(|r| r.separation_density[0])))
}

fn stability_from(eps: f64, delta: f64, densities: impl Iterator<Item = f64>) -> StabilityResult {
    let (worst, n) = densities.fold((0.0f64, 0usize), |(w, n), d| (w.max(d), n + 1));
    StabilityResult { eps, delta, passed: worst < eps, worst_density: worst, samples: n }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RegionPoint {
    pub x: Vec<f64>,
    pub member: bool,
    pub witness_delta: Option<f64>,
    /// Largest pair estimate at the witness δ, or at the smallest δ when not a member.
    pub worst_estimate: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RegionReport {
    pub fiber: usize,
    pub eps: f64,
    pub resolution: usize,
    pub points: Vec<RegionPoint>,
}

impl RegionReport {
    pub fn members(&self) -> usize {
        self.points.iter().filter(|p| p.member).count()
    }

    /// Grid points within `δ/2` of a member with witness `δ` that are not members
    /// with witness at least `δ/2`.
    pub fn openness_violations(&self) -> usize {
        let mut bad = 0;
        for p in self.points.iter().filter(|p| p.member) {
            let delta = p.witness_delta.expect("members carry a witness");
            let x = PhasePoint::new(p.x.clone()).expect("grid point");
            for q in &self.points {
                let z = PhasePoint::new(q.x.clone()).expect("grid point");
                if x.distance(&z) <= delta / 2.0 && !q.witness_delta.is_some_and(|d| d >= delta / 2.0) {
                    bad += 1;
                }
            }
        }
        bad
    }
}

/// `(y, z)` pairs in `B(x, delta)`: one diametral pair per free axis, then random pairs.
fn ball_pairs(x: &PhasePoint, comp: &SubTorus, delta: f64, count: usize, rng: &mut impl Rng) -> Vec<(PhasePoint, PhasePoint)> {
    let mut pairs = Vec::with_capacity(count + x.dim());
    for i in (0..x.dim()).filter(|i| !comp.fixed.iter().any(|&(j, _)| j == *i)) {
        let (mut a, mut b) = (x.coords().to_vec(), x.coords().to_vec());
        a[i] -= INSIDE * delta;
        b[i] += INSIDE * delta;
        pairs.push((PhasePoint::new(a).expect("finite"), PhasePoint::new(b).expect("finite")));
    }
    for _ in 0..count {
        let y = near(x, comp, delta, rng);
        let z = near(x, comp, delta, rng);
        pairs.push((y, z));
    }
    pairs
}

/// Worst Banach estimate over sampled pairs in `B(x, δ)` for each grid δ.
fn ball_worst(
    system: &RandomDynamicalSystem,
    ws: &Workspace,
    x: &PhasePoint,
    comp: &SubTorus,
    key: (u64, u64),
    cfg: &ClassifierConfig,
    stop_below: Option<f64>,
) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(cfg.delta_grid.len());
    for &delta in &cfg.delta_grid {
        let mut rng = task_rng(cfg.seed, key.0, key.1, delta.to_bits());
        let mut worst = 0.0f64;
        for (y, z) in ball_pairs(x, comp, delta, cfg.region_pairs, &mut rng) {
            worst = worst.max(ws.banach(system, &y, &z, &cfg.estimator)?);
        }
        out.push(worst);
        if stop_below.is_some_and(|e| worst < e) {
            break;
        }
    }
    Ok(out)
}

/// Grid approximation of the set of points `x ∈ E_w` admitting a grid δ with
/// every sampled `y, z ∈ B(x, δ)` estimated below `eps`.
pub fn equicontinuity_region(
    system: &RandomDynamicalSystem,
    fiber: usize,
    eps: f64,
    resolution: usize,
    cfg: &ClassifierConfig,
) -> Result<RegionReport> {
    cfg.validate()?;
    require_valid(system)?;
    if !system.base().support().contains(&fiber) {
        return Err(Error::Domain(format!("base point {fiber} is outside the support")));
    }
    if resolution < 8 {
        return Err(Error::Usage(format!("grid resolution must be at least 8, got {resolution}")));
    }
    if !(eps > 0.0) {
        return Err(Error::Usage("eps must be positive".into()));
    }
    let ws = Workspace::new(system, &cfg.estimator)?;
    let grid = fiber_grid(system, fiber, resolution)?;
    let points = grid
        .par_iter()
        .enumerate()
        .map(|(i, (x, comp))| {
            let worst = ball_worst(system, &ws, x, comp, (stream::REGION, i as u64), cfg, Some(eps))?;
            let hit = worst.iter().position(|&v| v < eps);
            Ok(RegionPoint {
                x: x.coords().to_vec(),
                member: hit.is_some(),
                witness_delta: hit.map(|k| cfg.delta_grid[k]),
                worst_estimate: worst[hit.unwrap_or(worst.len() - 1)],
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RegionReport { fiber, eps, resolution, points })
}

/// `resolution` points per free axis of every component of `E_w`.
fn fiber_grid(system: &RandomDynamicalSystem, w: usize, resolution: usize) -> Result<Vec<(PhasePoint, SubTorus)>> {
    let dim = system.dim();
    let mut out = Vec::new();
    for comp in system.fibers()[w].components() {
        let free: Vec<usize> = (0..dim).filter(|i| !comp.fixed.iter().any(|&(j, _)| j == *i)).collect();
        let total = resolution
            .checked_pow(free.len() as u32)
            .filter(|&t| t <= 1 << 20)
            .ok_or_else(|| Error::Resource("equicontinuity grid too large".into()))?;
        for k in 0..total {
            let mut c = vec![0.0; dim];
            for &(i, v) in &comp.fixed {
                c[i] = v;
            }
            let mut rem = k;
            for &i in free.iter().rev() {
                c[i] = (rem % resolution) as f64 / resolution as f64;
                rem /= resolution;
            }
            out.push((PhasePoint::new(c)?, comp.clone()));
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Witness {
    pub fiber: usize,
    pub y: Vec<f64>,
    pub estimate: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SensitivityRow {
    pub eps: f64,
    pub witness: Option<Witness>,
    /// Largest fiber estimate seen at this radius.
    pub best_estimate: f64,
    pub tries: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SensitivityReport {
    pub x: Vec<f64>,
    pub delta0: f64,
    pub rows: Vec<SensitivityRow>,
}

impl SensitivityReport {
    /// A witness at every tested radius.
    pub fn robust(&self) -> bool {
        self.rows.iter().all(|r| r.witness.is_some())
    }

    pub fn any_witness(&self) -> bool {
        self.rows.iter().any(|r| r.witness.is_some())
    }
}

/// Searches fibers `w` with `x ∈ E_w` and `y ∈ E_w ∩ B(x, ε)` for a fiber Weyl
/// estimate above `delta0`, at each `ε` of `eps_sequence`.
pub fn sensitivity_test(
    system: &RandomDynamicalSystem,
    x: &PhasePoint,
    delta0: f64,
    eps_sequence: &[f64],
    cfg: &ClassifierConfig,
) -> Result<SensitivityReport> {
    if !(delta0 > 0.0) {
        return Err(Error::Usage(format!("delta0 must be positive, got {delta0}")));
    }
    strictly_decreasing_positive("eps_sequence", eps_sequence)?;
    cfg.estimator.validate()?;
    if x.dim() != system.dim() {
        return Err(Error::Usage("point dimension does not match the system".into()));
    }
    let ws = Workspace::new(system, &cfg.estimator)?;
    let fibers: Vec<(usize, SubTorus)> = system
        .base()
        .support()
        .into_iter()
        .filter_map(|w| component_of(system, w, x).map(|c| (w, c)))
        .collect();
    let key = x.coords().iter().fold(0u64, |h, c| h.rotate_left(17) ^ c.to_bits());
    let rows = eps_sequence
        .par_iter()
        .map(|&eps| {
            let mut rng = task_rng(cfg.seed, stream::SENSITIVITY, key, eps.to_bits());
            let mut best = 0.0f64;
            let mut tries = 0;
            for (w, comp) in &fibers {
                for _ in 0..cfg.tries {
                    let y = near(x, comp, eps, &mut rng);
                    tries += 1;
                    let oracle = system.fiber_separation_oracle(*w, x, &y)?;
                    let region = covering_region(&ws.family, cfg.estimator.n_max, &ws.translates)?;
                    let samples = RegionSamples::evaluate(&oracle, region)?;
                    let est = translated_from(&samples, &ws.family, &ws.translates, &cfg.estimator, EstimateKind::FiberWeyl, false).value;
                    best = best.max(est);
                    if est > delta0 {
                        let witness = Witness { fiber: *w, y: y.coords().to_vec(), estimate: est };
                        return Ok(SensitivityRow { eps, witness: Some(witness), best_estimate: best, tries });
                    }
                }
            }
            Ok(SensitivityRow { eps, witness: None, best_estimate: best, tries })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SensitivityReport { x: x.coords().to_vec(), delta0, rows })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PointClass {
    Equicontinuous,
    Sensitive,
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PointStatus {
    pub x: Vec<f64>,
    pub fiber: usize,
    /// Witness δ per ε of the list, for every fiber holding `x` (worst over fibers).
    pub witness_deltas: Vec<Option<f64>>,
    pub sensitivity: SensitivityReport,
    pub class: PointClass,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Crosschecks {
    /// Banach modulus and mean-L-stability agree.
    pub lemma_agreement: bool,
    /// Weyl-translate modulus, Banach modulus, and mean-L-stability agree.
    pub three_way_agreement: bool,
    /// `ε·BD*(E_ε) <= banach + CHAIN_TOLERANCE` on every sampled pair.
    pub quantitative_chain: bool,
    /// Largest `ε·BD* − banach` seen.
    pub chain_worst_slack: f64,
    /// No sampled point is both equicontinuous and sensitive.
    pub point_dichotomy: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClassificationReport {
    pub verdict: Verdict,
    pub seed: u64,
    pub label: &'static str,
    pub config: ClassifierConfig,
    pub diameter: f64,
    pub banach_modulus: ModulusTable,
    pub weyl_modulus: ModulusTable,
    /// Per ε: the largest grid δ passing mean-L-stability, with its worst density.
    pub stability: Vec<StabilityResult>,
    pub points: Vec<PointStatus>,
    pub crosschecks: Crosschecks,
    pub suggested_escalation: Option<EstimatorConfig>,
    pub pairs: Vec<PairRow>,
}

impl ClassificationReport {
    pub fn mean_l_stable(&self) -> bool {
        self.stability.iter().all(|s| s.passed)
    }
}

/// Low-discrepancy points `frac(c + k·α)` with `α` built from square roots of primes.
fn kronecker_points(count: usize, dim: usize) -> Vec<Vec<f64>> {
    const ALPHA: [f64; 3] = [0.414_213_562_373_095_03, 0.732_050_807_568_877_2, 0.236_067_977_499_789_7];
    (0..count)
        .map(|k| (0..dim).map(|i| (0.1 * (i + 1) as f64 + (k as f64) * ALPHA[i]).fract()).collect())
        .collect()
}

fn sampled_point(system: &RandomDynamicalSystem, k: usize, raw: &[f64]) -> Result<(usize, PhasePoint, SubTorus)> {
    let support = system.base().support();
    let w = support[k % support.len()];
    let comps = system.fibers()[w].components();
    let comp = comps[k % comps.len()].clone();
    let mut c = raw.to_vec();
    for &(i, v) in &comp.fixed {
        c[i] = v;
    }
    Ok((w, PhasePoint::new(c)?, comp))
}

/// Runs the modulus, stability, and sensitivity searches and combines them.
///
/// WME-evidence needs every ε row to pass and no sensitivity witness at all.
/// Sensitive-evidence needs a sampled point with a witness at every tested radius.
pub fn dichotomy_report(system: &RandomDynamicalSystem, cfg: &ClassifierConfig) -> Result<ClassificationReport> {
    cfg.validate()?;
    require_valid(system)?;
    let eps_list = &cfg.eps_list;
    let cells = sampled_rows(system, cfg, eps_list, true)?;
    let values = |f: fn(&PairRow) -> f64| -> Vec<Vec<f64>> { cells.iter().map(|c| c.iter().map(f).collect()).collect() };
    let banach_modulus = ModulusTable::from_cells(EstimateKind::Banach, eps_list, &cfg.delta_grid, &values(|r| r.banach));
    let weyl_modulus = ModulusTable::from_cells(EstimateKind::Weyl, eps_list, &cfg.delta_grid, &values(|r| r.weyl));

    let stability = eps_list
        .iter()
        .enumerate()
        .map(|(k, &eps)| {
            let per_delta: Vec<StabilityResult> = cells
                .iter()
                .zip(&cfg.delta_grid)
                .map(|(c, &d)| stability_from(eps, d, c.iter().map(|r| r.separation_density[k])))
                .collect();
            per_delta.iter().find(|s| s.passed).unwrap_or(per_delta.last().expect("nonempty grid")).clone()
        })
        .collect::<Vec<_>>();

    let mut chain_worst_slack = f64::NEG_INFINITY;
    for row in cells.iter().flatten() {
        for (eps, bd) in eps_list.iter().zip(&row.separation_density) {
            chain_worst_slack = chain_worst_slack.max(eps * bd - row.banach);
        }
    }

    let ws = Workspace::new(system, &cfg.estimator)?;
    let points = kronecker_points(cfg.sample_points, system.dim())
        .iter()
        .enumerate()
        .map(|(k, raw)| point_status(system, &ws, k, raw, cfg))
        .collect::<Result<Vec<_>>>()?;

    let wme = banach_modulus.passed();
    let weyl = weyl_modulus.passed();
    let stable = stability.iter().all(|s| s.passed);
    let any_witness = points.iter().any(|p| p.sensitivity.any_witness());
    let robust = points.iter().any(|p| p.sensitivity.robust());
    let verdict = if robust {
        Verdict::SensitiveEvidence
    } else if wme && !any_witness {
        Verdict::WmeEvidence
    } else {
        Verdict::Inconclusive
    };
    let crosschecks = Crosschecks {
        lemma_agreement: wme == stable,
        three_way_agreement: wme == stable && wme == weyl,
        quantitative_chain: chain_worst_slack <= CHAIN_TOLERANCE,
        chain_worst_slack,
        point_dichotomy: !points.iter().any(both),
    };
    let suggested_escalation = (verdict == Verdict::Inconclusive).then(|| EstimatorConfig {
        n_max: cfg.estimator.n_max * 2,
        search_radius: cfg.estimator.search_radius * 2,
        ..cfg.estimator.clone()
    });
    Ok(ClassificationReport {
        verdict,
        seed: cfg.seed,
        label: TRUNCATION_LABEL,
        config: cfg.clone(),
        diameter: diameter(system.dim()),
        banach_modulus,
        weyl_modulus,
        stability,
        points,
        crosschecks,
        suggested_escalation,
        pairs: cells.into_iter().flatten().collect(),
    })
}

fn is_equicontinuous(p: &PointStatus) -> bool {
    p.witness_deltas.iter().all(Option::is_some)
}

fn both(p: &PointStatus) -> bool {
    is_equicontinuous(p) && p.sensitivity.robust()
}

fn point_status(
    system: &RandomDynamicalSystem,
    ws: &Workspace,
    k: usize,
    raw: &[f64],
    cfg: &ClassifierConfig,
) -> Result<PointStatus> {
    let (w, x, _) = sampled_point(system, k, raw)?;
    let holders: Vec<(usize, SubTorus)> = system
        .base()
        .support()
        .into_iter()
        .filter_map(|v| component_of(system, v, &x).map(|c| (v, c)))
        .collect();
    let smallest_eps = *cfg.eps_list.last().expect("nonempty");
    let mut worst = vec![0.0f64; cfg.delta_grid.len()];
    for (v, comp) in &holders {
        let key = (stream::POINT, ((k as u64) << 8) | *v as u64);
        let per_delta = ball_worst(system, ws, &x, comp, key, cfg, Some(smallest_eps))?;
        for (slot, val) in worst.iter_mut().zip(per_delta.iter()) {
            *slot = slot.max(*val);
        }
        // unevaluated δ below an early stop are at least as good as the last one
        if per_delta.len() < worst.len() {
            let last = *per_delta.last().expect("at least one δ");
            for slot in worst.iter_mut().skip(per_delta.len()) {
                *slot = slot.max(last);
            }
        }
    }
    let witness_deltas = cfg
        .eps_list
        .iter()
        .map(|&eps| worst.iter().position(|&v| v < eps).map(|i| cfg.delta_grid[i]))
        .collect();
    let sensitivity = sensitivity_test(system, &x, cfg.delta0, &cfg.eps_sequence, cfg)?;
    let mut status = PointStatus { x: x.coords().to_vec(), fiber: w, witness_deltas, sensitivity, class: PointClass::Inconclusive };
    status.class = match (is_equicontinuous(&status), status.sensitivity.robust()) {
        (true, false) => PointClass::Equicontinuous,
        (false, true) => PointClass::Sensitive,
        _ => PointClass::Inconclusive,
    };
    Ok(status)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::system;

    fn quick() -> ClassifierConfig {
        ClassifierConfig {
            estimator: EstimatorConfig { n_max: 256, m_max: 64, search_radius: 8, ..Default::default() },
            pairs_per_cell: 100,
            delta_grid: vec![1e-1, 1e-2, 1e-3],
            eps_sequence: vec![1e-1, 1e-3],
            sample_points: 3,
            tries: 2,
            region_pairs: 4,
            seed: 7,
            ..Default::default()
        }
    }

    #[test]
    fn config_validation() {
        assert!(ClassifierConfig::default().validate().is_ok());
        let mut c = ClassifierConfig { eps_list: vec![0.1, 0.2], ..Default::default() };
        assert!(c.validate().is_err());
        c = ClassifierConfig { pairs_per_cell: 99, ..Default::default() };
        assert!(c.validate().is_err());
        c = ClassifierConfig { delta_grid: vec![0.1, 0.0], ..Default::default() };
        assert!(c.validate().is_err());
    }

    #[test]
    fn sampled_pairs_are_close_and_reproducible() {
        let sys = system("cat2").unwrap();
        for j in 0..50 {
            let (w, x, y) = sample_pair(&sys, 3, 1e-3, j);
            assert!(x.distance(&y) < 1e-3 && x.distance(&y) > 0.0);
            assert_eq!((w, x.clone(), y.clone()), sample_pair(&sys, 3, 1e-3, j));
        }
        assert_ne!(sample_pair(&sys, 3, 1e-3, 0).1, sample_pair(&sys, 4, 1e-3, 0).1);
    }

    #[test]
    fn rotation_modulus() {
        let sys = system("rot2").unwrap();
        let t = wme_test(&sys, &quick()).unwrap();
        assert!(t.passed());
        let row = t.rows.iter().find(|r| r.eps == 0.1).unwrap();
        assert_eq!(row.delta, Some(0.1));
        assert!(row.worst_estimate < 0.1);
    }

    #[test]
    fn cat_modulus_fails() {
        let t = wme_test(&system("cat-trivial").unwrap(), &quick()).unwrap();
        assert!(t.rows.iter().all(|r| !r.pass && r.delta.is_none()));
    }

    #[test]
    fn huge_eps_always_passes() {
        let cfg = ClassifierConfig { eps_list: vec![1.0], ..quick() };
        let t = wme_test(&system("cat-trivial").unwrap(), &cfg).unwrap();
        assert_eq!(t.rows[0].delta, Some(0.1));
    }

    #[test]
    fn stability_examples() {
        let rot = system("rot2").unwrap();
        let s = mean_l_stable_test(&rot, 0.2, 0.1, &quick()).unwrap();
        assert!(s.passed);
        assert_eq!(s.worst_density, 0.0);
        // the ball must reach past the ~30 steps a 1e-6 displacement needs to separate
        let cfg = ClassifierConfig {
            estimator: EstimatorConfig { search_radius: 64, ..quick().estimator },
            ..quick()
        };
        let cat = system("cat-trivial").unwrap();
        let s = mean_l_stable_test(&cat, 0.1, 1e-6, &cfg).unwrap();
        assert!(!s.passed && s.worst_density > 0.5);
    }

    #[test]
    fn sensitivity_examples() {
        let cat = system("cat-trivial").unwrap();
        let x = PhasePoint::new(vec![0.1, 0.2]).unwrap();
        let r = sensitivity_test(&cat, &x, 0.1, &[1e-1, 1e-3, 1e-6], &quick()).unwrap();
        assert!(r.robust());
        let rot = system("rot1-trivial").unwrap();
        let x = PhasePoint::new(vec![0.3]).unwrap();
        let r = sensitivity_test(&rot, &x, 0.01, &[1e-3], &quick()).unwrap();
        assert!(!r.any_witness());
        assert!(r.rows[0].best_estimate < 1e-3);
        assert!(sensitivity_test(&rot, &x, 0.0, &[1e-3], &quick()).is_err());
        assert!(sensitivity_test(&rot, &x, 0.1, &[1e-3, 1e-2], &quick()).is_err());
    }

    #[test]
    fn region_examples() {
        let rot = system("rot2").unwrap();
        let r = equicontinuity_region(&rot, 0, 0.1, 16, &quick()).unwrap();
        assert_eq!(r.members(), 16);
        // diametral pairs at δ = 0.1 reach 2·0.0999 > 0.1
        assert!(r.points.iter().all(|p| p.witness_delta == Some(0.01)));
        assert_eq!(r.openness_violations(), 0);
        let cat = system("cat-trivial").unwrap();
        assert_eq!(equicontinuity_region(&cat, 0, 0.05, 8, &quick()).unwrap().members(), 0);
        assert!(equicontinuity_region(&rot, 5, 0.1, 16, &quick()).is_err());
        assert!(equicontinuity_region(&rot, 0, 0.1, 4, &quick()).is_err());
        assert_eq!(equicontinuity_region(&cat, 0, 2.0, 8, &quick()).unwrap().members(), 64);
    }

    #[test]
    fn dichotomy_small_scale() {
        let r = dichotomy_report(&system("rot1-trivial").unwrap(), &quick()).unwrap();
        assert_eq!(r.verdict, Verdict::WmeEvidence);
        assert!(r.crosschecks.lemma_agreement && r.crosschecks.quantitative_chain);
        assert!(r.suggested_escalation.is_none());
        let r = dichotomy_report(&system("cat-trivial").unwrap(), &quick()).unwrap();
        assert_eq!(r.verdict, Verdict::SensitiveEvidence);
        assert!(r.crosschecks.three_way_agreement && r.crosschecks.quantitative_chain);
    }

    #[test]
    fn dichotomy_rejects_invalid_system() {
        use crate::rds::{BaseSpace, Fiber};
        use crate::torus::FiberMap;
        let sys = RandomDynamicalSystem::new(
            crate::group::AmenableGroup::integers(),
            BaseSpace::singleton(1),
            1,
            vec![Fiber::Full],
            vec![vec![FiberMap::rotation(vec![0.2]).unwrap()]],
        )
        .unwrap()
        .with_identity_maps(vec![FiberMap::rotation(vec![0.1]).unwrap()])
        .unwrap();
        assert!(matches!(dichotomy_report(&sys, &quick()), Err(Error::Invalid(_))));
    }
}
