//! Separation oracles `g -> d~(gx, gy)` and the box regions they are sampled on.
//!
//! Estimators never talk to a dynamical system directly. They ask an oracle for
//! its values over a box region of the group (free coordinates in a product of
//! intervals, every residue of the finite factor), then reduce those samples.

use crate::error::{Error, Result};
use crate::group::{AmenableGroup, GroupElement};

/// A pure function on the group with values in `[0, +inf]`.
///
/// `f64::INFINITY` is the sentinel for "the pair shares no fiber"; it is a value,
/// not an error, and it is absorbing in every average.
pub trait SeparationOracle: Sync {
    fn group(&self) -> &AmenableGroup;

    fn separation(&self, g: &GroupElement) -> f64;

    /// Values over every element of `region`, in [`BoxRegion`] order.
    ///
    /// Implementors with incremental structure (orbits) override this.
    fn sample_box(&self, region: &BoxRegion) -> Result<Vec<f64>> {
        Ok((0..region.len()).map(|i| self.separation(&region.element(i))).collect())
    }
}

impl<T: SeparationOracle + ?Sized> SeparationOracle for &T {
    fn group(&self) -> &AmenableGroup {
        (**self).group()
    }

    fn separation(&self, g: &GroupElement) -> f64 {
        (**self).separation(g)
    }

    fn sample_box(&self, region: &BoxRegion) -> Result<Vec<f64>> {
        (**self).sample_box(region)
    }
}

/// `[lo_0, lo_0 + extent_0) x ... x (finite factor)`.
///
/// Elements are ordered lexicographically: free coordinates with the last axis
/// fastest, then the residues of the finite factor innermost.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BoxRegion {
    group: AmenableGroup,
    lo: Vec<i64>,
    extent: Vec<usize>,
    residues: Vec<Vec<i64>>,
}

impl BoxRegion {
    pub fn new(group: &AmenableGroup, lo: Vec<i64>, extent: Vec<usize>, budget: usize) -> Result<Self> {
        if lo.len() != group.rank() || extent.len() != group.rank() {
            return Err(Error::Usage("region dimensions must match the free rank".into()));
        }
        let residues = group.finite_residues();
        let size = extent
            .iter()
            .try_fold(residues.len() as u128, |acc, &e| acc.checked_mul(e as u128));
        match size {
            Some(s) if s <= budget as u128 => {}
            _ => {
                return Err(Error::Resource(format!(
                    "sampling region {extent:?} x {} exceeds element budget {budget}",
                    residues.len()
                )))
            }
        }
        Ok(Self { group: group.clone(), lo, extent, residues })
    }

    /// Smallest box containing every translate `[0, n)^d + g` for `g` in `translates`.
    pub fn covering(
        group: &AmenableGroup,
        n: usize,
        translates: &[GroupElement],
        budget: usize,
    ) -> Result<Self> {
        let rank = group.rank();
        let mut lo = vec![0i64; rank];
        let mut hi = vec![n as i64; rank];
        for (axis, (l, h)) in lo.iter_mut().zip(hi.iter_mut()).enumerate() {
            for g in translates {
                let c = g.coords()[axis];
                *l = (*l).min(c);
                *h = (*h).max(c.checked_add(n as i64).ok_or(Error::Overflow("region"))?);
            }
        }
        let extent = lo.iter().zip(&hi).map(|(l, h)| (h - l) as usize).collect();
        Self::new(group, lo, extent, budget)
    }

    pub fn group(&self) -> &AmenableGroup {
        &self.group
    }

    pub fn lo(&self) -> &[i64] {
        &self.lo
    }

    pub fn extent(&self) -> &[usize] {
        &self.extent
    }

    pub fn residues(&self) -> &[Vec<i64>] {
        &self.residues
    }

    /// Number of free cells (each carries every residue).
    pub fn cells(&self) -> usize {
        self.extent.iter().product()
    }

    pub fn len(&self) -> usize {
        self.cells() * self.residues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Free coordinates of a cell index.
    pub fn cell_coords(&self, mut cell: usize) -> Vec<i64> {
        let mut c = vec![0i64; self.extent.len()];
        for axis in (0..self.extent.len()).rev() {
            c[axis] = self.lo[axis] + (cell % self.extent[axis]) as i64;
            cell /= self.extent[axis];
        }
        c
    }

    /// Cell index of free coordinates, if inside.
    pub fn cell_index(&self, coords: &[i64]) -> Option<usize> {
        let mut idx = 0usize;
        for axis in 0..self.extent.len() {
            let off = coords[axis].checked_sub(self.lo[axis])?;
            if off < 0 || off as usize >= self.extent[axis] {
                return None;
            }
            idx = idx * self.extent[axis] + off as usize;
        }
        Some(idx)
    }

    pub fn element(&self, index: usize) -> GroupElement {
        let r = self.residues.len();
        let mut c = self.cell_coords(index / r);
        c.extend_from_slice(&self.residues[index % r]);
        self.group.element(&c).expect("region element belongs to group")
    }
}
