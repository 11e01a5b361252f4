//! Finitely generated abelian amenable groups `Z^d x C_k1 x ... x C_kr`.
//!
//! Elements are integer coordinate vectors: the first `rank` entries are the
//! free coordinates, the remaining ones are residues modulo the cyclic orders.
//! All arithmetic is checked; overflow is an error, never a wrap.
//!
//! Følner windows are the boxes `[0, n)^d` times the full finite factor, listed
//! in lexicographic order so every reduction over a window is reproducible.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default cap on the number of elements any window or ball may hold.
pub const DEFAULT_ELEMENT_BUDGET: usize = 1 << 24;

/// Largest supported free rank.
pub const MAX_RANK: usize = 3;

/// `Z^rank x C_{orders[0]} x ...`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AmenableGroup {
    rank: usize,
    orders: Vec<u64>,
}

/// An element of an [`AmenableGroup`], ordered lexicographically by coordinates.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GroupElement(Vec<i64>);

/// One letter of a word in the standard generators: generator index and exponent sign.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Letter {
    pub generator: usize,
    pub inverse: bool,
}

impl GroupElement {
    pub fn coords(&self) -> &[i64] {
        &self.0
    }
}

impl fmt::Display for GroupElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

impl AmenableGroup {
    pub fn new(rank: usize, orders: Vec<u64>) -> Result<Self> {
        if rank > MAX_RANK {
            return Err(Error::Usage(format!("free rank {rank} exceeds {MAX_RANK}")));
        }
        if let Some(&k) = orders.iter().find(|&&k| k == 0 || k > i64::MAX as u64) {
            return Err(Error::Usage(format!("invalid cyclic order {k}")));
        }
        Ok(Self { rank, orders })
    }

    /// The integers.
    pub fn integers() -> Self {
        Self { rank: 1, orders: Vec::new() }
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn cyclic_orders(&self) -> &[u64] {
        &self.orders
    }

    /// Number of standard generators (one per free axis and one per cyclic factor).
    pub fn num_generators(&self) -> usize {
        self.rank + self.orders.len()
    }

    /// Order of the finite part `C_k1 x ... x C_kr`.
    pub fn finite_order(&self) -> u64 {
        self.orders.iter().product()
    }

    fn dim(&self) -> usize {
        self.rank + self.orders.len()
    }

    pub fn identity(&self) -> GroupElement {
        GroupElement(vec![0; self.dim()])
    }

    /// Builds an element from raw coordinates, reducing the cyclic residues.
    pub fn element(&self, coords: &[i64]) -> Result<GroupElement> {
        if coords.len() != self.dim() {
            return Err(Error::Usage(format!(
                "element has {} coordinates, group {} expects {}",
                coords.len(),
                self,
                self.dim()
            )));
        }
        let mut c = coords.to_vec();
        for (j, &k) in self.orders.iter().enumerate() {
            c[self.rank + j] = c[self.rank + j].rem_euclid(k as i64);
        }
        Ok(GroupElement(c))
    }

    /// The `i`-th standard generator.
    pub fn generator(&self, i: usize) -> GroupElement {
        let mut c = vec![0; self.dim()];
        c[i] = 1;
        if i >= self.rank && self.orders[i - self.rank] == 1 {
            c[i] = 0;
        }
        GroupElement(c)
    }

    pub fn letter_element(&self, letter: Letter) -> GroupElement {
        let g = self.generator(letter.generator);
        if letter.inverse {
            self.inverse(&g).expect("generator belongs to group")
        } else {
            g
        }
    }

    /// All generator letters `s` and `s^-1`, generators in index order.
    pub fn letters(&self) -> Vec<Letter> {
        (0..self.num_generators())
            .flat_map(|generator| {
                [false, true].map(|inverse| Letter { generator, inverse })
            })
            .collect()
    }

    fn check(&self, a: &GroupElement) -> Result<()> {
        if a.0.len() != self.dim() {
            return Err(Error::Usage(format!("element {a} does not belong to {self}")));
        }
        for (j, &k) in self.orders.iter().enumerate() {
            let r = a.0[self.rank + j];
            if r < 0 || r as u64 >= k {
                return Err(Error::Usage(format!("element {a} does not belong to {self}")));
            }
        }
        Ok(())
    }

    pub fn multiply(&self, a: &GroupElement, b: &GroupElement) -> Result<GroupElement> {
        self.check(a)?;
        self.check(b)?;
        let mut c = Vec::with_capacity(self.dim());
        for i in 0..self.rank {
            c.push(a.0[i].checked_add(b.0[i]).ok_or(Error::Overflow("multiply"))?);
        }
        for (j, &k) in self.orders.iter().enumerate() {
            let i = self.rank + j;
            // residues are < k <= i64::MAX, so the sum fits in i128
            c.push(((a.0[i] as i128 + b.0[i] as i128) % k as i128) as i64);
        }
        Ok(GroupElement(c))
    }

    pub fn inverse(&self, a: &GroupElement) -> Result<GroupElement> {
        self.check(a)?;
        let mut c = Vec::with_capacity(self.dim());
        for i in 0..self.rank {
            c.push(a.0[i].checked_neg().ok_or(Error::Overflow("inverse"))?);
        }
        for (j, &k) in self.orders.iter().enumerate() {
            let r = a.0[self.rank + j];
            c.push(if r == 0 { 0 } else { k as i64 - r });
        }
        Ok(GroupElement(c))
    }

    pub fn is_identity(&self, a: &GroupElement) -> bool {
        a.0.iter().all(|&c| c == 0)
    }

    /// Word length of `a` in the standard generators `{s, s^-1}`.
    pub fn word_length(&self, a: &GroupElement) -> u64 {
        let free: u64 = a.0[..self.rank].iter().map(|c| c.unsigned_abs()).sum();
        let cyc: u64 = self
            .orders
            .iter()
            .zip(&a.0[self.rank..])
            .map(|(&k, &r)| (r as u64).min(k - r as u64))
            .sum();
        free + cyc
    }

    /// A geodesic word for `a`: free axes in order, then the cyclic factors.
    pub fn factor(&self, a: &GroupElement) -> Result<Vec<Letter>> {
        self.check(a)?;
        let mut word = Vec::new();
        for (generator, &c) in a.0[..self.rank].iter().enumerate() {
            let letter = Letter { generator, inverse: c < 0 };
            word.extend(std::iter::repeat_n(letter, c.unsigned_abs() as usize));
        }
        for (j, (&k, &r)) in self.orders.iter().zip(&a.0[self.rank..]).enumerate() {
            let r = r as u64;
            let (steps, inverse) = if r <= k - r { (r, false) } else { (k - r, true) };
            let letter = Letter { generator: self.rank + j, inverse };
            word.extend(std::iter::repeat_n(letter, steps as usize));
        }
        Ok(word)
    }

    /// Evaluates a word to a group element.
    pub fn evaluate(&self, word: &[Letter]) -> Result<GroupElement> {
        word.iter().try_fold(self.identity(), |acc, &l| {
            self.multiply(&acc, &self.letter_element(l))
        })
    }

    /// All elements of word length at most `radius`, lexicographically ordered.
    pub fn search_ball(&self, radius: u64, budget: usize) -> Result<Vec<GroupElement>> {
        let mut out = Vec::new();
        let mut coords = vec![0i64; self.dim()];
        self.ball_rec(0, radius, &mut coords, &mut out, budget)?;
        out.sort();
        Ok(out)
    }

    fn ball_rec(
        &self,
        axis: usize,
        remaining: u64,
        coords: &mut Vec<i64>,
        out: &mut Vec<GroupElement>,
        budget: usize,
    ) -> Result<()> {
        if axis == self.dim() {
            if out.len() >= budget {
                return Err(Error::Resource(format!(
                    "search ball of {self} exceeds element budget {budget}"
                )));
            }
            out.push(GroupElement(coords.clone()));
            return Ok(());
        }
        if axis < self.rank {
            let r = i64::try_from(remaining).map_err(|_| Error::Overflow("search_ball"))?;
            for c in -r..=r {
                coords[axis] = c;
                self.ball_rec(axis + 1, remaining - c.unsigned_abs(), coords, out, budget)?;
            }
        } else {
            let k = self.orders[axis - self.rank];
            for r in 0..k {
                let len = r.min(k - r);
                if len <= remaining {
                    coords[axis] = r as i64;
                    self.ball_rec(axis + 1, remaining - len, coords, out, budget)?;
                }
            }
        }
        coords[axis] = 0;
        Ok(())
    }

    /// Every element of the finite factor, as residue vectors, lexicographically.
    pub fn finite_residues(&self) -> Vec<Vec<i64>> {
        let mut out = vec![Vec::new()];
        for &k in &self.orders {
            out = out
                .into_iter()
                .flat_map(|prefix| {
                    (0..k as i64).map(move |r| {
                        let mut p = prefix.clone();
                        p.push(r);
                        p
                    })
                })
                .collect();
        }
        out
    }
}

impl fmt::Display for AmenableGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        match self.rank {
            0 => {}
            1 => parts.push("Z".to_string()),
            d => parts.push(format!("Z^{d}")),
        }
        parts.extend(self.orders.iter().map(|k| format!("C{k}")));
        if parts.is_empty() {
            parts.push("C1".to_string());
        }
        write!(f, "{}", parts.join(" x "))
    }
}

impl FromStr for AmenableGroup {
    type Err = Error;

    /// Parses strings such as `"Z"`, `"Z^2"`, `"Z x C2"`, `"C3 x C4"`.
    fn from_str(s: &str) -> Result<Self> {
        let mut rank = 0usize;
        let mut orders = Vec::new();
        for factor in s.split(['x', '×']) {
            let factor = factor.trim();
            if factor == "Z" {
                rank += 1;
            } else if let Some(exp) = factor.strip_prefix("Z^") {
                rank += exp
                    .trim()
                    .parse::<usize>()
                    .map_err(|_| Error::Parse(format!("bad exponent in {factor:?}")))?;
            } else if let Some(k) = factor.strip_prefix('C') {
                orders.push(
                    k.trim()
                        .parse::<u64>()
                        .map_err(|_| Error::Parse(format!("bad cyclic order in {factor:?}")))?,
                );
            } else {
                return Err(Error::Parse(format!("unknown group factor {factor:?} in {s:?}")));
            }
        }
        Self::new(rank, orders)
    }
}

/// A finite window `F_n` of a Følner sequence.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FolnerWindow {
    pub index: usize,
    pub elements: Vec<GroupElement>,
}

impl FolnerWindow {
    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }
}

/// Box-shaped Følner sequence `F_n = [0, n)^d x (finite factor)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FolnerFamily {
    group: AmenableGroup,
    budget: usize,
}

impl FolnerFamily {
    pub fn boxes(group: AmenableGroup) -> Self {
        Self { group, budget: DEFAULT_ELEMENT_BUDGET }
    }

    pub fn with_budget(mut self, budget: usize) -> Self {
        self.budget = budget;
        self
    }

    pub fn group(&self) -> &AmenableGroup {
        &self.group
    }

    pub fn budget(&self) -> usize {
        self.budget
    }

    /// `|F_n|` without materializing the window.
    pub fn window_size(&self, n: usize) -> Result<usize> {
        let free = (n as u128).checked_pow(self.group.rank as u32);
        let size = free.and_then(|f| f.checked_mul(self.group.finite_order() as u128));
        match size {
            Some(s) if s <= self.budget as u128 => Ok(s as usize),
            _ => Err(Error::Resource(format!(
                "window {n} of {} exceeds element budget {}",
                self.group, self.budget
            ))),
        }
    }

    pub fn window(&self, n: usize) -> Result<FolnerWindow> {
        if n == 0 {
            return Err(Error::Usage("window index must be at least 1".into()));
        }
        let size = self.window_size(n)?;
        let residues = self.group.finite_residues();
        let mut elements = Vec::with_capacity(size);
        let mut free = vec![0i64; self.group.rank];
        loop {
            for r in &residues {
                let mut c = free.clone();
                c.extend_from_slice(r);
                elements.push(GroupElement(c));
            }
            // odometer over [0, n)^rank, last axis fastest
            let mut axis = self.group.rank;
            loop {
                if axis == 0 {
                    return Ok(FolnerWindow { index: n, elements });
                }
                axis -= 1;
                free[axis] += 1;
                if (free[axis] as usize) < n {
                    break;
                }
                free[axis] = 0;
            }
        }
    }
}

/// Right translate `K g`, re-sorted lexicographically.
pub fn translate(
    group: &AmenableGroup,
    window: &FolnerWindow,
    g: &GroupElement,
) -> Result<FolnerWindow> {
    let mut elements = window
        .elements
        .iter()
        .map(|k| group.multiply(k, g))
        .collect::<Result<Vec<_>>>()?;
    elements.sort();
    Ok(FolnerWindow { index: window.index, elements })
}

/// `|g F △ F| / |F|`.
pub fn folner_defect(group: &AmenableGroup, g: &GroupElement, window: &FolnerWindow) -> Result<f64> {
    let base: HashSet<&GroupElement> = window.elements.iter().collect();
    let moved: HashSet<GroupElement> = window
        .elements
        .iter()
        .map(|k| group.multiply(g, k))
        .collect::<Result<_>>()?;
    let only_moved = moved.iter().filter(|e| !base.contains(e)).count();
    let only_base = base.iter().filter(|e| !moved.contains(**e)).count();
    Ok((only_moved + only_base) as f64 / window.len() as f64)
}
