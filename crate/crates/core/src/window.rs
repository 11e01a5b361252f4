//! Exact window sums over sampled box regions.
//!
//! Samples are converted to fixed point (`2^-60` resolution) and accumulated in
//! `i128` summed-area tables, so every window sum is exact and independent of the
//! order in which windows are visited. Identical windows therefore always give
//! bit-identical averages, whichever estimator asks.

use crate::error::Result;
use crate::group::MAX_RANK;
use crate::oracle::{BoxRegion, SeparationOracle};

const FIXED_BITS: i32 = 60;

#[inline]
pub(crate) fn to_fixed(v: f64) -> i128 {
    debug_assert!(v.is_finite() && v >= 0.0, "separation values are finite and nonnegative");
    (v * 2f64.powi(FIXED_BITS)).round() as i128
}

/// `sum / count` converted back from fixed point.
#[inline]
pub(crate) fn fixed_average(sum: i128, count: u128) -> f64 {
    let count = count as i128;
    let (q, r) = (sum / count, sum % count);
    (q as f64 + r as f64 / count as f64) / 2f64.powi(FIXED_BITS)
}

/// d-dimensional inclusive prefix sums over the free cells of a region.
#[derive(Clone, Debug)]
pub(crate) struct SummedArea {
    extent: Vec<usize>,
    strides: Vec<usize>,
    table: Vec<i128>,
}

impl SummedArea {
    pub(crate) fn build(extent: &[usize], cell: impl Fn(usize) -> i128) -> Self {
        let rank = extent.len();
        let dims: Vec<usize> = extent.iter().map(|e| e + 1).collect();
        let mut strides = vec![1usize; rank];
        for a in (0..rank.saturating_sub(1)).rev() {
            strides[a] = strides[a + 1] * dims[a + 1];
        }
        let size: usize = dims.iter().product();
        let mut table = vec![0i128; size];
        let cells: usize = extent.iter().product();
        for c in 0..cells {
            // cell c at offsets o lands at table position o + 1 on every axis
            let mut rem = c;
            let mut pos = 0usize;
            for a in (0..rank).rev() {
                pos += (rem % extent[a] + 1) * strides[a];
                rem /= extent[a];
            }
            table[pos] = cell(c);
        }
        for a in 0..rank {
            for pos in 0..size {
                if (pos / strides[a]) % dims[a] > 0 {
                    table[pos] += table[pos - strides[a]];
                }
            }
        }
        Self { extent: extent.to_vec(), strides, table }
    }

    /// Sum over the cube `[off, off + n)^d` in cell offsets.
    pub(crate) fn cube(&self, off: &[usize], n: usize) -> i128 {
        let rank = self.extent.len();
        match rank {
            0 => return self.table[0],
            1 => return self.table[off[0] + n] - self.table[off[0]],
            _ => {}
        }
        let mut total = 0i128;
        for corner in 0..(1usize << rank) {
            let mut pos = 0usize;
            let mut sign = 1i128;
            for a in 0..rank {
                if corner >> a & 1 == 1 {
                    pos += (off[a] + n) * self.strides[a];
                } else {
                    pos += off[a] * self.strides[a];
                    sign = -sign;
                }
            }
            total += sign * self.table[pos];
        }
        total
    }
}

/// Evaluated oracle values over a region.
#[derive(Clone, Debug)]
pub struct RegionSamples {
    region: BoxRegion,
    values: Vec<f64>,
}

impl RegionSamples {
    pub fn evaluate<O: SeparationOracle + ?Sized>(oracle: &O, region: BoxRegion) -> Result<Self> {
        let values = oracle.sample_box(&region)?;
        Ok(Self { region, values })
    }

    pub fn from_fn(region: BoxRegion, f: impl Fn(usize) -> f64) -> Self {
        let values = (0..region.len()).map(f).collect();
        Self { region, values }
    }

    pub fn region(&self) -> &BoxRegion {
        &self.region
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    fn offsets(&self, origin: &[i64]) -> ([usize; MAX_RANK], usize) {
        let mut off = [0usize; MAX_RANK];
        for (a, (o, l)) in origin.iter().zip(self.region.lo()).enumerate() {
            let d = o - l;
            assert!(d >= 0, "window origin below sampled region");
            off[a] = d as usize;
        }
        (off, origin.len())
    }

    fn window_size(&self, rank: usize, n: usize) -> u128 {
        (n as u128).pow(rank as u32) * self.region.residues().len() as u128
    }

    fn cell_total(&self, cell: usize, f: impl Fn(f64) -> i128) -> i128 {
        let r = self.region.residues().len();
        self.values[cell * r..(cell + 1) * r].iter().map(|&v| f(v)).sum()
    }
}

/// Window averages of a sampled oracle, with `+inf` absorbing.
pub(crate) struct AverageField<'a> {
    samples: &'a RegionSamples,
    sums: SummedArea,
    infinite: Option<SummedArea>,
}

impl<'a> AverageField<'a> {
    pub(crate) fn new(samples: &'a RegionSamples) -> Self {
        let ext = samples.region.extent();
        let sums = SummedArea::build(ext, |c| {
            samples.cell_total(c, |v| if v.is_finite() { to_fixed(v) } else { 0 })
        });
        let infinite = samples
            .values
            .iter()
            .any(|v| v.is_infinite())
            .then(|| SummedArea::build(ext, |c| samples.cell_total(c, |v| i128::from(v.is_infinite()))));
        Self { samples, sums, infinite }
    }

    /// Fixed-point sum over `[origin, origin + n)^d x (finite factor)`; `None` if it meets `+inf`.
    ///
    /// Sums of equal-size windows order exactly as their averages.
    pub(crate) fn sum(&self, origin: &[i64], n: usize) -> Option<i128> {
        let (off, rank) = self.samples.offsets(origin);
        if let Some(inf) = &self.infinite {
            if inf.cube(&off[..rank], n) > 0 {
                return None;
            }
        }
        Some(self.sums.cube(&off[..rank], n))
    }

    pub(crate) fn to_average(&self, sum: Option<i128>, n: usize) -> f64 {
        match sum {
            None => f64::INFINITY,
            Some(s) => fixed_average(s, self.samples.window_size(self.samples.region.extent().len(), n)),
        }
    }

    pub(crate) fn average(&self, origin: &[i64], n: usize) -> f64 {
        self.to_average(self.sum(origin, n), n)
    }
}

/// `None` (infinite) is the largest sum.
#[inline]
pub(crate) fn sum_gt(a: Option<i128>, b: Option<i128>) -> bool {
    match (a, b) {
        (None, None) => false,
        (None, Some(_)) => true,
        (Some(_), None) => false,
        (Some(x), Some(y)) => x > y,
    }
}

/// Window counts of a subset `{g : pred(value(g))}`.
pub(crate) struct CountField<'a> {
    samples: &'a RegionSamples,
    counts: SummedArea,
}

impl<'a> CountField<'a> {
    pub(crate) fn new(samples: &'a RegionSamples, member: impl Fn(f64) -> bool) -> Self {
        let counts = SummedArea::build(samples.region.extent(), |c| {
            samples.cell_total(c, |v| i128::from(member(v)))
        });
        Self { samples, counts }
    }

    /// `|E ∩ ([origin, origin + n)^d x finite)| / |window|`.
    pub(crate) fn ratio(&self, origin: &[i64], n: usize) -> f64 {
        let (off, rank) = self.samples.offsets(origin);
        self.counts.cube(&off[..rank], n) as f64 / self.samples.window_size(rank, n) as f64
    }

    pub(crate) fn count(&self, origin: &[i64], n: usize) -> i128 {
        let (off, rank) = self.samples.offsets(origin);
        self.counts.cube(&off[..rank], n)
    }

    pub(crate) fn to_ratio(&self, count: i128, n: usize) -> f64 {
        count as f64 / self.samples.window_size(self.samples.region.extent().len(), n) as f64
    }
}
