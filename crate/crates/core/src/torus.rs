//! The flat torus `T^d = R^d / Z^d` and its affine homeomorphisms `x -> A x + s`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest supported torus dimension.
pub const MAX_DIM: usize = 3;

/// Reduces a coordinate into `[0, 1)`.
#[inline]
pub fn wrap(c: f64) -> f64 {
    let r = c - c.floor();
    // c.floor() can round up for tiny negative inputs
    if r >= 1.0 {
        0.0
    } else {
        r
    }
}

/// Centered representative of a displacement coordinate, in `[-1/2, 1/2]`.
///
/// Odd: `center(-c) == -center(c)` exactly.
#[inline]
pub fn center(c: f64) -> f64 {
    c - c.round()
}

/// Length of the shortest representative of a displacement vector on the torus.
#[inline]
pub fn torus_norm(v: &[f64]) -> f64 {
    v.iter().map(|&c| center(c) * center(c)).sum::<f64>().sqrt()
}

/// `d(x, y) = min_k |x - y + k|` over integer vectors `k`.
pub fn torus_distance(x: &[f64], y: &[f64]) -> f64 {
    let diff: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
    torus_norm(&diff)
}

/// Diameter of `T^d` under the flat metric.
pub fn diameter(dim: usize) -> f64 {
    (dim as f64).sqrt() / 2.0
}

/// A point of `T^d`, coordinates in `[0, 1)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhasePoint(Vec<f64>);

impl PhasePoint {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() || coords.len() > MAX_DIM {
            return Err(Error::Usage(format!(
                "phase points need 1..={MAX_DIM} coordinates, got {}",
                coords.len()
            )));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::Usage("phase point coordinates must be finite".into()));
        }
        Ok(Self(coords.into_iter().map(wrap).collect()))
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn distance(&self, other: &PhasePoint) -> f64 {
        torus_distance(&self.0, &other.0)
    }

    /// `self - other`, reduced into `[0, 1)^d`.
    pub fn difference(&self, other: &PhasePoint) -> Vec<f64> {
        self.0.iter().zip(&other.0).map(|(a, b)| center(a - b)).collect()
    }
}

/// Square integer matrix, row-major.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntMatrix {
    dim: usize,
    entries: Vec<i64>,
}

impl IntMatrix {
    pub fn identity(dim: usize) -> Self {
        let mut entries = vec![0; dim * dim];
        for i in 0..dim {
            entries[i * dim + i] = 1;
        }
        Self { dim, entries }
    }

    pub fn from_rows(rows: &[Vec<i64>]) -> Result<Self> {
        let dim = rows.len();
        if dim == 0 || dim > MAX_DIM || rows.iter().any(|r| r.len() != dim) {
            return Err(Error::Usage(format!("matrix must be square with side 1..={MAX_DIM}")));
        }
        Ok(Self { dim, entries: rows.concat() })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> i64 {
        self.entries[i * self.dim + j]
    }

    pub fn rows(&self) -> Vec<Vec<i64>> {
        self.entries.chunks(self.dim).map(<[i64]>::to_vec).collect()
    }

    pub fn is_identity(&self) -> bool {
        *self == Self::identity(self.dim)
    }

    pub fn determinant(&self) -> Result<i64> {
        let m = |i, j| self.get(i, j) as i128;
        let det = match self.dim {
            1 => m(0, 0),
            2 => m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0),
            3 => {
                m(0, 0) * (m(1, 1) * m(2, 2) - m(1, 2) * m(2, 1))
                    - m(0, 1) * (m(1, 0) * m(2, 2) - m(1, 2) * m(2, 0))
                    + m(0, 2) * (m(1, 0) * m(2, 1) - m(1, 1) * m(2, 0))
            }
            _ => unreachable!("dimension checked at construction"),
        };
        i64::try_from(det).map_err(|_| Error::Overflow("determinant"))
    }

    /// Exact inverse of a unimodular matrix via the adjugate.
    pub fn inverse(&self) -> Result<Self> {
        let det = self.determinant()?;
        if det.abs() != 1 {
            return Err(Error::Usage(format!("matrix has determinant {det}, not unimodular")));
        }
        let d = self.dim;
        let mut entries = vec![0i64; d * d];
        if d == 1 {
            entries[0] = det;
        } else {
            for i in 0..d {
                for j in 0..d {
                    // cofactor C_ji gives adj_ij
                    let minor: Vec<Vec<i64>> = (0..d)
                        .filter(|&r| r != j)
                        .map(|r| (0..d).filter(|&c| c != i).map(|c| self.get(r, c)).collect())
                        .collect();
                    let cof = IntMatrix::from_rows(&minor)?.determinant()?;
                    let sign = if (i + j) % 2 == 0 { 1 } else { -1 };
                    entries[i * d + j] = sign * cof * det;
                }
            }
        }
        Ok(Self { dim: d, entries })
    }

    /// `self * other`, checked.
    pub fn mul(&self, other: &IntMatrix) -> Result<Self> {
        let d = self.dim;
        let mut entries = vec![0i64; d * d];
        for i in 0..d {
            for j in 0..d {
                let mut acc: i64 = 0;
                for k in 0..d {
                    let p = self
                        .get(i, k)
                        .checked_mul(other.get(k, j))
                        .ok_or(Error::Overflow("matrix product"))?;
                    acc = acc.checked_add(p).ok_or(Error::Overflow("matrix product"))?;
                }
                entries[i * d + j] = acc;
            }
        }
        Ok(Self { dim: d, entries })
    }

    /// `A v mod 1` as centered displacements, written into `out`.
    #[inline]
    pub fn apply_mod1(&self, v: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate().take(self.dim) {
            let row = &self.entries[i * self.dim..(i + 1) * self.dim];
            let s: f64 = row.iter().zip(v).map(|(&a, &x)| a as f64 * x).sum();
            *o = center(s);
        }
    }
}

/// Affine torus homeomorphism `x -> A x + s (mod 1)` with `|det A| = 1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FiberMap {
    matrix: IntMatrix,
    shift: Vec<f64>,
}

impl FiberMap {
    pub fn new(matrix: IntMatrix, shift: Vec<f64>) -> Result<Self> {
        if shift.len() != matrix.dim() {
            return Err(Error::Usage("shift length must match matrix size".into()));
        }
        if shift.iter().any(|s| !s.is_finite()) {
            return Err(Error::Usage("shift must be finite".into()));
        }
        let det = matrix.determinant()?;
        if det.abs() != 1 {
            return Err(Error::Usage(format!(
                "fiber matrix has determinant {det}; torus homeomorphisms need |det| = 1"
            )));
        }
        Ok(Self { matrix, shift: shift.into_iter().map(wrap).collect() })
    }

    pub fn identity(dim: usize) -> Self {
        Self { matrix: IntMatrix::identity(dim), shift: vec![0.0; dim] }
    }

    pub fn rotation(shift: Vec<f64>) -> Result<Self> {
        Self::new(IntMatrix::identity(shift.len()), shift)
    }

    pub fn linear(matrix: IntMatrix) -> Result<Self> {
        let d = matrix.dim();
        Self::new(matrix, vec![0.0; d])
    }

    pub fn matrix(&self) -> &IntMatrix {
        &self.matrix
    }

    pub fn shift(&self) -> &[f64] {
        &self.shift
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn is_rotation(&self) -> bool {
        self.matrix.is_identity()
    }

    pub fn apply(&self, x: &PhasePoint) -> PhasePoint {
        let mut out = vec![0.0; self.dim()];
        self.apply_coords(x.coords(), &mut out);
        PhasePoint(out)
    }

    pub(crate) fn apply_coords(&self, x: &[f64], out: &mut [f64]) {
        self.matrix.apply_mod1(x, out);
        for (o, s) in out.iter_mut().zip(&self.shift) {
            *o = wrap(*o + s);
        }
    }

    /// `x -> A^{-1}(x - s)`.
    pub fn inverse(&self) -> Result<Self> {
        let inv = self.matrix.inverse()?;
        let mut shift = vec![0.0; self.dim()];
        inv.apply_mod1(&self.shift, &mut shift);
        Ok(Self { matrix: inv, shift: shift.into_iter().map(|s| wrap(-s)).collect() })
    }

    /// `self ∘ before`.
    pub fn compose(&self, before: &FiberMap) -> Result<Self> {
        let matrix = self.matrix.mul(&before.matrix)?;
        let mut shift = vec![0.0; self.dim()];
        self.apply_coords(&before.shift, &mut shift);
        Ok(Self { matrix, shift })
    }

    /// Distance from the identity map: infinite when the linear part differs,
    /// otherwise the torus length of the shift.
    pub fn identity_residual(&self) -> f64 {
        if self.matrix.is_identity() {
            torus_norm(&self.shift)
        } else {
            f64::INFINITY
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cat() -> IntMatrix {
        IntMatrix::from_rows(&[vec![2, 1], vec![1, 1]]).unwrap()
    }

    #[test]
    fn distance_wraps() {
        assert!((torus_distance(&[0.05], &[0.95]) - 0.1).abs() < 1e-15);
        assert_eq!(torus_distance(&[0.3, 0.3], &[0.3, 0.3]), 0.0);
        let d = torus_distance(&[0.0, 0.0], &[0.5, 0.25]);
        assert!((d - 0.559_016_994_374_947_4).abs() < 1e-15);
        assert_eq!(diameter(2), (2f64).sqrt() / 2.0);
    }

    #[test]
    fn wrap_stays_in_unit_interval() {
        for c in [-1e-18, -0.5, 1.0, 3.25, -7.0, 0.999_999_999_999_999_9] {
            let r = wrap(c);
            assert!((0.0..1.0).contains(&r), "{c} -> {r}");
        }
    }

    #[test]
    fn cat_map_example() {
        let f = FiberMap::linear(cat()).unwrap();
        let x = PhasePoint::new(vec![0.5, 0.5]).unwrap();
        assert_eq!(f.apply(&x).coords(), &[0.5, 0.0]);
    }

    #[test]
    fn rejects_non_unimodular() {
        let m = IntMatrix::from_rows(&[vec![2, 0], vec![0, 1]]).unwrap();
        assert!(FiberMap::linear(m).is_err());
    }

    #[test]
    fn inverse_roundtrip() {
        let m = IntMatrix::from_rows(&[vec![1, 1, 0], vec![0, 1, 1], vec![0, 0, 1]]).unwrap();
        let f = FiberMap::new(m, vec![0.1, 0.2, 0.3]).unwrap();
        let g = f.inverse().unwrap();
        assert!(g.compose(&f).unwrap().identity_residual() < 1e-15);
        assert!(f.compose(&g).unwrap().identity_residual() < 1e-15);
        let c = FiberMap::linear(cat()).unwrap();
        assert_eq!(c.inverse().unwrap().matrix().rows(), vec![vec![1, -1], vec![-1, 2]]);
    }

    #[test]
    fn compose_matches_sequential_apply() {
        let f = FiberMap::new(cat(), vec![0.25, 0.125]).unwrap();
        let g = FiberMap::new(IntMatrix::from_rows(&[vec![1, 1], vec![1, 2]]).unwrap(), vec![0.5, 0.0])
            .unwrap();
        let x = PhasePoint::new(vec![0.375, 0.625]).unwrap();
        let seq = g.apply(&f.apply(&x));
        let comp = g.compose(&f).unwrap().apply(&x);
        assert!(seq.distance(&comp) < 1e-14);
    }

    #[test]
    fn residual_flags_nonidentity() {
        assert_eq!(FiberMap::identity(2).identity_residual(), 0.0);
        assert!((FiberMap::rotation(vec![0.1]).unwrap().identity_residual() - 0.1).abs() < 1e-15);
        assert!(FiberMap::linear(cat()).unwrap().identity_residual().is_infinite());
    }
}
