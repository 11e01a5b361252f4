//! Random dynamical systems over a finite base `(Omega, P, G)` with affine torus fibers.
//!
//! The system stores one fiber map `F_{s,w}` per standard generator `s` and base
//! point `w`; every other `F_{g,w}` is obtained through the cocycle law
//! `F_{g2, g1 w} ∘ F_{g1, w} = F_{g2 g1, w}` by walking a geodesic word for `g`.
//! Points are reduced modulo 1 after every step.
//!
//! Separations only need the linear parts: `F x - F y = A (x - y)` on the torus,
//! so oracles propagate the displacement `x - y` instead of two orbits.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::{AmenableGroup, GroupElement, Letter};
use crate::oracle::{BoxRegion, SeparationOracle};
use crate::torus::{torus_distance, torus_norm, FiberMap, IntMatrix, PhasePoint, MAX_DIM};

/// Residual below which an axiom check passes.
pub const AXIOM_TOLERANCE: f64 = 1e-12;

/// Longest relation word checked by [`RandomDynamicalSystem::validate`].
pub const RELATION_WORD_LENGTH: usize = 8;

const MEMBERSHIP_TOLERANCE: f64 = 1e-12;

/// Finite base space with a probability vector and one permutation per generator.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BaseSpace {
    labels: Vec<String>,
    weights: Vec<f64>,
    permutations: Vec<Vec<usize>>,
    #[serde(skip)]
    inverses: Vec<Vec<usize>>,
}

impl BaseSpace {
    pub fn new(labels: Vec<String>, weights: Vec<f64>, permutations: Vec<Vec<usize>>) -> Result<Self> {
        let n = labels.len();
        if n == 0 {
            return Err(Error::Usage("base space needs at least one point".into()));
        }
        if weights.len() != n {
            return Err(Error::Usage(format!("{} weights for {n} base points", weights.len())));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::Usage("weights must be finite and nonnegative".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > AXIOM_TOLERANCE {
            return Err(Error::Usage(format!("weights sum to {total}, expected 1")));
        }
        if weights.iter().all(|&w| w == 0.0) {
            return Err(Error::Usage("base support is empty".into()));
        }
        let mut inverses = Vec::with_capacity(permutations.len());
        for p in &permutations {
            if p.len() != n {
                return Err(Error::Usage(format!("permutation {p:?} has wrong length")));
            }
            let mut inv = vec![usize::MAX; n];
            for (i, &j) in p.iter().enumerate() {
                if j >= n || inv[j] != usize::MAX {
                    return Err(Error::Usage(format!("{p:?} is not a permutation")));
                }
                inv[j] = i;
            }
            inverses.push(inv);
        }
        Ok(Self { labels, weights, permutations, inverses })
    }

    /// One point with weight 1 and trivial action by `generators` generators.
    pub fn singleton(generators: usize) -> Self {
        Self::new(vec!["w0".into()], vec![1.0], vec![vec![0]; generators])
            .expect("singleton base is well formed")
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn permutations(&self) -> &[Vec<usize>] {
        &self.permutations
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    /// Points of positive weight.
    pub fn support(&self) -> Vec<usize> {
        (0..self.len()).filter(|&w| self.weights[w] > 0.0).collect()
    }

    #[inline]
    fn step(&self, letter: Letter, w: usize) -> usize {
        if letter.inverse {
            self.inverses[letter.generator][w]
        } else {
            self.permutations[letter.generator][w]
        }
    }
}

/// A coordinate sub-torus `{x : x_i = c_i for (i, c_i) in fixed}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubTorus {
    pub fixed: Vec<(usize, f64)>,
}

impl SubTorus {
    fn contains(&self, x: &[f64]) -> bool {
        self.fixed
            .iter()
            .all(|&(i, c)| torus_distance(&[x[i]], &[c]) <= MEMBERSHIP_TOLERANCE)
    }

    fn is_fixed(&self, i: usize) -> bool {
        self.fixed.iter().any(|&(j, _)| j == i)
    }
}

/// The fiber `E_w`: the whole torus or a finite union of coordinate sub-tori.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Default)]
pub enum Fiber {
    #[default]
    Full,
    Union(Vec<SubTorus>),
}

impl Fiber {
    pub fn contains(&self, x: &PhasePoint) -> bool {
        match self {
            Fiber::Full => true,
            Fiber::Union(parts) => parts.iter().any(|p| p.contains(x.coords())),
        }
    }

    /// Components as sub-tori; the full torus is the component with nothing fixed.
    pub fn components(&self) -> Vec<SubTorus> {
        match self {
            Fiber::Full => vec![SubTorus { fixed: Vec::new() }],
            Fiber::Union(parts) => parts.clone(),
        }
    }
}

/// Outcome of one axiom check.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AxiomCheck {
    pub name: &'static str,
    pub passed: bool,
    pub worst_residual: f64,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ValidationReport {
    pub checks: Vec<AxiomCheck>,
    pub relation_words_checked: usize,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn worst_residual(&self) -> f64 {
        self.checks.iter().map(|c| c.worst_residual).fold(0.0, f64::max)
    }
}

/// A continuous bundle RDS with finite base, torus fibers, and affine fiber maps.
#[derive(Clone, Debug, PartialEq)]
pub struct RandomDynamicalSystem {
    group: AmenableGroup,
    base: BaseSpace,
    dim: usize,
    fibers: Vec<Fiber>,
    maps: Vec<Vec<FiberMap>>,
    inverse_maps: Vec<Vec<FiberMap>>,
    identity_maps: Vec<FiberMap>,
}

impl RandomDynamicalSystem {
    /// `maps[s][w]` is `F_{s,w}` for generator `s` and base point `w`.
    pub fn new(
        group: AmenableGroup,
        base: BaseSpace,
        dim: usize,
        fibers: Vec<Fiber>,
        maps: Vec<Vec<FiberMap>>,
    ) -> Result<Self> {
        if dim == 0 || dim > MAX_DIM {
            return Err(Error::Usage(format!("torus dimension must be 1..={MAX_DIM}")));
        }
        if base.permutations().len() != group.num_generators() {
            return Err(Error::Usage(format!(
                "{} base permutations for {} generators",
                base.permutations().len(),
                group.num_generators()
            )));
        }
        if fibers.len() != base.len() {
            return Err(Error::Usage("one fiber per base point required".into()));
        }
        for f in &fibers {
            for part in f.components() {
                if part.fixed.iter().any(|&(i, c)| i >= dim || !c.is_finite()) {
                    return Err(Error::Usage("sub-torus fixes an invalid coordinate".into()));
                }
            }
        }
        if maps.len() != group.num_generators() || maps.iter().any(|m| m.len() != base.len()) {
            return Err(Error::Usage("need one fiber map per (generator, base point)".into()));
        }
        if maps.iter().flatten().any(|m| m.dim() != dim) {
            return Err(Error::Usage("fiber map dimension mismatch".into()));
        }
        let inverse_maps = maps
            .iter()
            .map(|row| row.iter().map(FiberMap::inverse).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        let identity_maps = vec![FiberMap::identity(dim); base.len()];
        Ok(Self { group, base, dim, fibers, maps, inverse_maps, identity_maps })
    }

    /// Overrides the stored `F_{e,w}`. Anything but the identity fails validation.
    pub fn with_identity_maps(mut self, maps: Vec<FiberMap>) -> Result<Self> {
        if maps.len() != self.base.len() || maps.iter().any(|m| m.dim() != self.dim) {
            return Err(Error::Usage("need one identity map per base point".into()));
        }
        self.identity_maps = maps;
        Ok(self)
    }

    pub fn group(&self) -> &AmenableGroup {
        &self.group
    }

    pub fn base(&self) -> &BaseSpace {
        &self.base
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn fibers(&self) -> &[Fiber] {
        &self.fibers
    }

    pub fn generator_maps(&self) -> &[Vec<FiberMap>] {
        &self.maps
    }

    /// True when every fiber map is a rotation.
    pub fn is_isometric(&self) -> bool {
        self.maps.iter().flatten().all(FiberMap::is_rotation)
    }

    fn check_omega(&self, w: usize) -> Result<()> {
        if w >= self.base.len() {
            return Err(Error::Usage(format!("base index {w} out of range")));
        }
        Ok(())
    }

    fn check_point(&self, w: usize, x: &PhasePoint) -> Result<()> {
        self.check_omega(w)?;
        if x.dim() != self.dim {
            return Err(Error::Usage(format!("point {x:?} is not in T^{}", self.dim)));
        }
        if !self.fibers[w].contains(x) {
            return Err(Error::Domain(format!(
                "point {:?} is not in the fiber over {}",
                x.coords(),
                self.base.labels()[w]
            )));
        }
        Ok(())
    }

    /// `g w`.
    pub fn act(&self, g: &GroupElement, w: usize) -> Result<usize> {
        self.check_omega(w)?;
        Ok(self.group.factor(g)?.into_iter().fold(w, |w, l| self.base.step(l, w)))
    }

    /// Fiber map for one letter taken at the base point the letter starts from.
    /// Returns the map and the base point reached.
    #[inline]
    fn letter_map(&self, letter: Letter, w: usize) -> (&FiberMap, usize) {
        if letter.inverse {
            let prev = self.base.inverses[letter.generator][w];
            (&self.inverse_maps[letter.generator][prev], prev)
        } else {
            (&self.maps[letter.generator][w], self.base.permutations[letter.generator][w])
        }
    }

    /// `F_{g,w}(x)`.
    pub fn apply(&self, g: &GroupElement, w: usize, x: &PhasePoint) -> Result<PhasePoint> {
        self.check_point(w, x)?;
        let word = self.group.factor(g)?;
        if word.is_empty() {
            return Ok(self.identity_maps[w].apply(x));
        }
        let mut cur = x.coords().to_vec();
        let mut next = vec![0.0; self.dim];
        let mut at = w;
        for letter in word {
            let (map, to) = self.letter_map(letter, at);
            map.apply_coords(&cur, &mut next);
            std::mem::swap(&mut cur, &mut next);
            at = to;
        }
        PhasePoint::new(cur)
    }

    /// Skew product `(w, x) -> (g w, F_{g,w} x)`.
    pub fn skew_apply(&self, g: &GroupElement, w: usize, x: &PhasePoint) -> Result<(usize, PhasePoint)> {
        let y = self.apply(g, w, x)?;
        Ok((self.act(g, w)?, y))
    }

    /// Support points `w` with `x, y` both in `E_w`.
    pub fn admissible(&self, x: &PhasePoint, y: &PhasePoint) -> Vec<usize> {
        self.base
            .support()
            .into_iter()
            .filter(|&w| self.fibers[w].contains(x) && self.fibers[w].contains(y))
            .collect()
    }

    /// `d~(gx, gy)`: max over admissible `w` of `d(F_{g,w} x, F_{g,w} y)`, or
    /// `+inf` when no support fiber holds both points.
    pub fn dtilde(&self, g: &GroupElement, x: &PhasePoint, y: &PhasePoint) -> Result<f64> {
        Ok(self.separation_oracle(x, y)?.separation(g))
    }

    fn check_pair(&self, x: &PhasePoint, y: &PhasePoint) -> Result<()> {
        if x.dim() != self.dim || y.dim() != self.dim {
            return Err(Error::Usage(format!("points must lie in T^{}", self.dim)));
        }
        Ok(())
    }

    /// Oracle for `g -> d~(gx, gy)`.
    pub fn separation_oracle(&self, x: &PhasePoint, y: &PhasePoint) -> Result<SystemOracle<'_>> {
        self.check_pair(x, y)?;
        let fibers = self.admissible(x, y);
        let combine = if fibers.is_empty() { Combine::Infinite } else { Combine::Max };
        Ok(SystemOracle::new(self, x, y, fibers.into_iter().map(|w| (w, 1.0)).collect(), combine))
    }

    /// Oracle for `g -> d(F_{g,w} x, F_{g,w} y)`.
    pub fn fiber_separation_oracle(&self, w: usize, x: &PhasePoint, y: &PhasePoint) -> Result<SystemOracle<'_>> {
        self.check_point(w, x)?;
        self.check_point(w, y)?;
        Ok(SystemOracle::new(self, x, y, vec![(w, 1.0)], Combine::Max))
    }

    /// Oracle for `g -> sum_w P(w) d(F_{g,w} x, F_{g,w} y)` over the support.
    pub fn integral_separation_oracle(&self, x: &PhasePoint, y: &PhasePoint) -> Result<SystemOracle<'_>> {
        self.check_pair(x, y)?;
        let mut terms = Vec::new();
        for w in self.base.support() {
            self.check_point(w, x)?;
            self.check_point(w, y)?;
            terms.push((w, self.base.weights()[w]));
        }
        Ok(SystemOracle::new(self, x, y, terms, Combine::Weighted))
    }

    /// Checks the RDS axioms, the base action, and fiber compatibility.
    pub fn validate(&self) -> ValidationReport {
        let mut checks = Vec::new();

        let worst = self.identity_maps.iter().map(FiberMap::identity_residual).fold(0.0, f64::max);
        checks.push(AxiomCheck {
            name: "identity",
            passed: worst < AXIOM_TOLERANCE,
            worst_residual: worst,
            detail: "F_{e,w} is the identity on every fiber".into(),
        });

        checks.push(AxiomCheck {
            name: "measurability",
            passed: true,
            worst_residual: 0.0,
            detail: "affine torus maps on a finite base are continuous, hence measurable".into(),
        });

        let (worst, words, detail) = self.check_relations();
        checks.push(AxiomCheck {
            name: "cocycle",
            passed: worst < AXIOM_TOLERANCE,
            worst_residual: worst,
            detail,
        });

        let (ok, detail) = self.check_fiber_compatibility();
        checks.push(AxiomCheck {
            name: "fiber-compatibility",
            passed: ok,
            worst_residual: if ok { 0.0 } else { f64::INFINITY },
            detail,
        });

        ValidationReport { checks, relation_words_checked: words }
    }

    /// Composes fiber maps along every word of length <= 8 that evaluates to the
    /// identity; each composition must return to its base point as the identity map.
    fn check_relations(&self) -> (f64, usize, String) {
        struct Frame {
            element: GroupElement,
            states: Vec<(usize, FiberMap)>,
        }
        let letters = self.group.letters();
        let n = self.base.len();
        let start = Frame {
            element: self.group.identity(),
            states: (0..n).map(|w| (w, FiberMap::identity(self.dim))).collect(),
        };
        let mut worst = 0.0f64;
        let mut words = 0usize;
        let mut failure = None;
        let mut stack = vec![(start, 0usize)];
        while let Some((frame, depth)) = stack.pop() {
            if depth > 0 && self.group.is_identity(&frame.element) {
                words += 1;
                for (w0, (w, map)) in frame.states.iter().enumerate() {
                    let r = if *w != w0 { f64::INFINITY } else { map.identity_residual() };
                    if r > worst {
                        worst = r;
                        if r >= AXIOM_TOLERANCE && failure.is_none() {
                            failure = Some(format!(
                                "relation word of length {depth} fails over {} (residual {r:e})",
                                self.base.labels()[w0]
                            ));
                        }
                    }
                }
            }
            if depth == RELATION_WORD_LENGTH {
                continue;
            }
            for &letter in letters.iter().rev() {
                let element = self
                    .group
                    .multiply(&frame.element, &self.group.letter_element(letter))
                    .expect("bounded word lengths cannot overflow");
                let states = frame
                    .states
                    .iter()
                    .map(|(w, m)| {
                        let (f, to) = self.letter_map(letter, *w);
                        // entries stay tiny for words of length <= 8
                        (to, f.compose(m).unwrap_or_else(|_| FiberMap::identity(self.dim)))
                    })
                    .collect();
                stack.push((Frame { element, states }, depth + 1));
            }
        }
        let detail = failure.unwrap_or_else(|| {
            format!("{words} relation words of length <= {RELATION_WORD_LENGTH} compose to the identity")
        });
        (worst, words, detail)
    }

    fn check_fiber_compatibility(&self) -> (bool, String) {
        for (s, row) in self.maps.iter().enumerate() {
            for (w, map) in row.iter().enumerate() {
                let target = self.base.permutations()[s][w];
                if let Err(msg) = maps_onto(map, &self.fibers[w], &self.fibers[target]) {
                    return (
                        false,
                        format!(
                            "generator {s} over {} does not map onto the fiber over {}: {msg}",
                            self.base.labels()[w],
                            self.base.labels()[target]
                        ),
                    );
                }
            }
        }
        (true, "every F_{s,w} maps E_w onto E_{sw}".into())
    }
}

/// Whether the affine map sends the components of `from` bijectively onto those of `to`.
fn maps_onto(map: &FiberMap, from: &Fiber, to: &Fiber) -> std::result::Result<(), String> {
    let d = map.dim();
    let targets = to.components();
    let mut hit = vec![false; targets.len()];
    for part in from.components() {
        let free: Vec<usize> = (0..d).filter(|&i| !part.is_fixed(i)).collect();
        let mut base_point = vec![0.0; d];
        for &(i, c) in &part.fixed {
            base_point[i] = c;
        }
        let mut image = vec![0.0; d];
        map.apply_coords(&base_point, &mut image);
        let found = targets.iter().position(|t| {
            let t_free: Vec<usize> = (0..d).filter(|&i| !t.is_fixed(i)).collect();
            if t_free.len() != free.len() {
                return false;
            }
            // image directions must avoid the fixed coordinates of t ...
            let columns_ok = free
                .iter()
                .all(|&j| t.fixed.iter().all(|&(i, _)| map.matrix().get(i, j) == 0));
            // ... and generate the full coordinate lattice of t
            let rows: Vec<Vec<i64>> = t_free
                .iter()
                .map(|&i| free.iter().map(|&j| map.matrix().get(i, j)).collect())
                .collect();
            let lattice_ok = rows.is_empty()
                || IntMatrix::from_rows(&rows)
                    .and_then(|m| m.determinant())
                    .map(|det| det.abs() == 1)
                    .unwrap_or(false);
            columns_ok && lattice_ok && t.contains(&image)
        });
        match found {
            Some(i) => hit[i] = true,
            None => return Err(format!("component {:?} has no matching image", part.fixed)),
        }
    }
    if hit.iter().all(|&h| h) {
        Ok(())
    } else {
        Err("some target component is not covered".into())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Combine {
    Max,
    Weighted,
    Infinite,
}

/// Separation oracle backed by a [`RandomDynamicalSystem`].
///
/// Holds the displacement `x - y` and propagates it with the linear cocycle of
/// each selected fiber. Pure: equal inputs give bit-identical outputs.
pub struct SystemOracle<'a> {
    system: &'a RandomDynamicalSystem,
    displacement: Vec<f64>,
    terms: Vec<(usize, f64)>,
    combine: Combine,
}

impl<'a> SystemOracle<'a> {
    fn new(
        system: &'a RandomDynamicalSystem,
        x: &PhasePoint,
        y: &PhasePoint,
        terms: Vec<(usize, f64)>,
        combine: Combine,
    ) -> Self {
        Self { system, displacement: x.difference(y), terms, combine }
    }

    /// Base points contributing to this oracle.
    pub fn fibers(&self) -> Vec<usize> {
        self.terms.iter().map(|&(w, _)| w).collect()
    }

    #[inline]
    fn step(&self, letter: Letter, w: usize, v: &[f64], out: &mut [f64]) -> usize {
        let (map, to) = self.system.letter_map(letter, w);
        map.matrix().apply_mod1(v, out);
        to
    }

    fn combine(&self, norms: impl Iterator<Item = f64>) -> f64 {
        match self.combine {
            Combine::Infinite => f64::INFINITY,
            Combine::Max => norms.fold(0.0, f64::max),
            Combine::Weighted => norms.zip(&self.terms).map(|(n, &(_, p))| p * n).sum(),
        }
    }

    fn identity_value(&self) -> f64 {
        let d = self.system.dim;
        let mut out = vec![0.0; d];
        let norms: Vec<f64> = self
            .terms
            .iter()
            .map(|&(w, _)| {
                self.system.identity_maps[w].matrix().apply_mod1(&self.displacement, &mut out);
                torus_norm(&out)
            })
            .collect();
        self.combine(norms.into_iter())
    }
}

impl SeparationOracle for SystemOracle<'_> {
    fn group(&self) -> &AmenableGroup {
        &self.system.group
    }

    fn separation(&self, g: &GroupElement) -> f64 {
        if self.combine == Combine::Infinite {
            return f64::INFINITY;
        }
        let word = self.system.group.factor(g).expect("element belongs to the oracle's group");
        if word.is_empty() {
            return self.identity_value();
        }
        let d = self.system.dim;
        let mut norms = Vec::with_capacity(self.terms.len());
        let mut cur = vec![0.0; d];
        let mut next = vec![0.0; d];
        for &(w0, _) in &self.terms {
            cur.copy_from_slice(&self.displacement);
            let mut w = w0;
            for &letter in &word {
                w = self.step(letter, w, &cur, &mut next);
                std::mem::swap(&mut cur, &mut next);
            }
            norms.push(torus_norm(&cur));
        }
        self.combine(norms.into_iter())
    }

    /// Sweeps the region outward from the element closest to the identity, so each
    /// value costs one matrix step per fiber. The predecessor rule (step the last
    /// off-anchor axis toward the anchor) reproduces the geodesic words of
    /// [`AmenableGroup::factor`], so values match [`Self::separation`] bit for bit
    /// whenever the region contains the identity.
    fn sample_box(&self, region: &BoxRegion) -> Result<Vec<f64>> {
        let len = region.len();
        if self.combine == Combine::Infinite {
            return Ok(vec![f64::INFINITY; len]);
        }
        let group = &self.system.group;
        let rank = group.rank();
        let orders = group.cyclic_orders();
        let residues = region.residues();
        let nres = residues.len();
        let d = self.system.dim;
        let m = self.terms.len();

        // offset coordinates: free axes as-is, cyclic residues as signed offsets
        let anchor_free: Vec<i64> = (0..rank)
            .map(|a| 0i64.clamp(region.lo()[a], region.lo()[a] + region.extent()[a] as i64 - 1))
            .collect();
        let offsets = |idx: usize| -> Vec<i64> {
            let mut o = region.cell_coords(idx / nres);
            for (j, &r) in residues[idx % nres].iter().enumerate() {
                let k = orders[j] as i64;
                o.push(if r <= k - r { r } else { r - k });
            }
            o
        };
        let distance = |o: &[i64]| -> u64 {
            o.iter()
                .enumerate()
                .map(|(a, &c)| (c - if a < rank { anchor_free[a] } else { 0 }).unsigned_abs())
                .sum()
        };
        let mut order: Vec<(u64, usize)> = (0..len).map(|i| (distance(&offsets(i)), i)).collect();
        order.sort_unstable();

        // strides in region index space
        let mut free_stride = vec![nres; rank];
        for a in (0..rank.saturating_sub(1)).rev() {
            free_stride[a] = free_stride[a + 1] * region.extent()[a + 1];
        }
        let mut res_stride = vec![1usize; orders.len()];
        for j in (0..orders.len().saturating_sub(1)).rev() {
            res_stride[j] = res_stride[j + 1] * orders[j + 1] as usize;
        }

        let mut vecs = vec![0.0f64; len * m * d];
        let mut bases = vec![0usize; len * m];
        let mut values = vec![0.0f64; len];
        let mut norms = vec![0.0f64; m];

        for &(_, idx) in &order {
            let o = offsets(idx);
            let axis = (0..o.len())
                .rev()
                .find(|&a| o[a] != if a < rank { anchor_free[a] } else { 0 });
            match axis {
                None => {
                    // the anchor: walk a geodesic from the identity
                    let mut coords = o.clone();
                    for (j, c) in coords[rank..].iter_mut().enumerate() {
                        *c = c.rem_euclid(orders[j] as i64);
                    }
                    let g = group.element(&coords)?;
                    let word = group.factor(&g)?;
                    let mut next = vec![0.0; d];
                    for (t, &(w0, _)) in self.terms.iter().enumerate() {
                        let slot = (idx * m + t) * d;
                        let mut cur = self.displacement.clone();
                        let mut w = w0;
                        for &letter in &word {
                            w = self.step(letter, w, &cur, &mut next);
                            std::mem::swap(&mut cur, &mut next);
                        }
                        vecs[slot..slot + d].copy_from_slice(&cur);
                        bases[idx * m + t] = w;
                    }
                }
                Some(a) => {
                    let target = if a < rank { anchor_free[a] } else { 0 };
                    let forward = o[a] > target;
                    let pred = if a < rank {
                        if forward {
                            idx - free_stride[a]
                        } else {
                            idx + free_stride[a]
                        }
                    } else {
                        let j = a - rank;
                        let k = orders[j] as i64;
                        let r = residues[idx % nres][j];
                        let pr = (r + if forward { -1 } else { 1 }).rem_euclid(k);
                        (idx as i64 + (pr - r) * res_stride[j] as i64) as usize
                    };
                    let letter = Letter { generator: a, inverse: !forward };
                    for t in 0..m {
                        let (src, dst) = ((pred * m + t) * d, (idx * m + t) * d);
                        let mut out = [0.0f64; MAX_DIM];
                        let w = self.step(letter, bases[pred * m + t], &vecs[src..src + d], &mut out[..d]);
                        vecs[dst..dst + d].copy_from_slice(&out[..d]);
                        bases[idx * m + t] = w;
                    }
                }
            }
            let is_identity = o.iter().all(|&c| c == 0);
            values[idx] = if is_identity {
                self.identity_value()
            } else {
                for (t, n) in norms.iter_mut().enumerate() {
                    let s = (idx * m + t) * d;
                    *n = torus_norm(&vecs[s..s + d]);
                }
                self.combine(norms.iter().copied())
            };
        }
        Ok(values)
    }
}
