//! Coordinates on `R^m = K^n` for `K` the complex numbers (`d = 2`) or the
//! quaternions (`d = 4`), and the blockwise action of unit scalars.
//!
//! A point of `R^m` is stored as `n` consecutive blocks of `d` reals. A phase
//! acts on a point by multiplying every block on the left by the same unit
//! scalar. Quaternions follow the Hamilton convention (`ij = k`).

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on `|x| = 1` for directions and phases.
pub const UNIT_TOL: f64 = 1e-12;

/// The scalar division algebra whose unit sphere acts on each block.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AlgebraKind {
    Complex,
    Quaternion,
}

impl AlgebraKind {
    /// Real dimension of one block.
    pub fn block_dim(self) -> usize {
        match self {
            AlgebraKind::Complex => 2,
            AlgebraKind::Quaternion => 4,
        }
    }

    pub fn from_block_dim(d: usize) -> Result<Self> {
        match d {
            2 => Ok(AlgebraKind::Complex),
            4 => Ok(AlgebraKind::Quaternion),
            other => Err(Error::Precondition(format!("block dimension must be 2 or 4, got {other}"))),
        }
    }
}

impl fmt::Display for AlgebraKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AlgebraKind::Complex => f.write_str("complex"),
            AlgebraKind::Quaternion => f.write_str("quaternion"),
        }
    }
}

/// Block structure of the ambient space: `m = d * n`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Layout {
    algebra: AlgebraKind,
    blocks: usize,
}

impl Layout {
    pub fn new(algebra: AlgebraKind, blocks: usize) -> Result<Self> {
        if blocks == 0 {
            return Err(Error::Precondition("block count n must be at least 1".into()));
        }
        Ok(Layout { algebra, blocks })
    }

    pub fn complex(blocks: usize) -> Result<Self> {
        Layout::new(AlgebraKind::Complex, blocks)
    }

    pub fn quaternion(blocks: usize) -> Result<Self> {
        Layout::new(AlgebraKind::Quaternion, blocks)
    }

    pub fn algebra(&self) -> AlgebraKind {
        self.algebra
    }

    /// Number of blocks `n`.
    pub fn blocks(&self) -> usize {
        self.blocks
    }

    /// Block dimension `d`.
    pub fn block_dim(&self) -> usize {
        self.algebra.block_dim()
    }

    /// Real ambient dimension `m = d * n`.
    pub fn dim(&self) -> usize {
        self.block_dim() * self.blocks
    }
}

impl fmt::Display for Layout {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}^{} (R^{})", self.algebra, self.blocks, self.dim())
    }
}

/// A unit vector on `S^{m-1}`.
#[derive(Clone, Debug, PartialEq)]
pub struct Direction {
    coords: Vec<f64>,
    layout: Layout,
}

impl Direction {
    /// Wraps `coords`, which must already have unit norm.
    pub fn new(layout: Layout, coords: Vec<f64>) -> Result<Self> {
        check_len(layout, &coords)?;
        let norm = euclidean_norm(&coords);
        if !norm.is_finite() || (norm - 1.0).abs() > UNIT_TOL {
            return Err(Error::InvalidDirection(format!("norm {norm} is not 1")));
        }
        Ok(Direction { coords, layout })
    }

    /// Scales `coords` onto the unit sphere.
    pub fn normalized(layout: Layout, mut coords: Vec<f64>) -> Result<Self> {
        check_len(layout, &coords)?;
        let norm = euclidean_norm(&coords);
        if !norm.is_finite() || norm == 0.0 {
            return Err(Error::InvalidDirection(format!("cannot normalize vector of norm {norm}")));
        }
        coords.iter_mut().for_each(|c| *c /= norm);
        Ok(Direction { coords, layout })
    }

    /// The `i`-th standard basis vector.
    pub fn axis(layout: Layout, i: usize) -> Result<Self> {
        if i >= layout.dim() {
            return Err(Error::InvalidDirection(format!("axis {i} out of range for {layout}")));
        }
        let mut coords = vec![0.0; layout.dim()];
        coords[i] = 1.0;
        Ok(Direction { coords, layout })
    }

    pub(crate) fn from_unit_unchecked(layout: Layout, coords: Vec<f64>) -> Self {
        debug_assert_eq!(coords.len(), layout.dim());
        Direction { coords, layout }
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn layout(&self) -> Layout {
        self.layout
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.coords
    }

    pub fn negate(&self) -> Direction {
        Direction { coords: self.coords.iter().map(|c| -c).collect(), layout: self.layout }
    }
}

fn check_len(layout: Layout, coords: &[f64]) -> Result<()> {
    if coords.len() != layout.dim() {
        return Err(Error::InvalidDirection(format!(
            "expected {} coordinates for {layout}, got {}",
            layout.dim(),
            coords.len()
        )));
    }
    Ok(())
}

pub fn euclidean_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// A unit complex number or unit quaternion.
///
/// Complex phases use the first two components; the rest are zero.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Phase {
    algebra: AlgebraKind,
    q: [f64; 4],
}

impl Phase {
    pub fn identity(algebra: AlgebraKind) -> Self {
        Phase { algebra, q: [1.0, 0.0, 0.0, 0.0] }
    }

    /// `e^{i angle}`.
    pub fn from_angle(angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Phase { algebra: AlgebraKind::Complex, q: [c, s, 0.0, 0.0] }
    }

    /// Builds a phase from `d` components, which must have unit norm.
    pub fn new(algebra: AlgebraKind, components: &[f64]) -> Result<Self> {
        let d = algebra.block_dim();
        if components.len() != d {
            return Err(Error::InvalidPhase(format!("expected {d} components, got {}", components.len())));
        }
        let norm = euclidean_norm(components);
        if !norm.is_finite() || (norm - 1.0).abs() > UNIT_TOL {
            return Err(Error::InvalidPhase(format!("norm {norm} is not 1")));
        }
        let mut q = [0.0; 4];
        q[..d].copy_from_slice(components);
        Ok(Phase { algebra, q })
    }

    /// Scales `components` to unit norm.
    pub fn normalized(algebra: AlgebraKind, components: &[f64]) -> Result<Self> {
        let norm = euclidean_norm(components);
        if !norm.is_finite() || norm == 0.0 {
            return Err(Error::InvalidPhase(format!("cannot normalize norm {norm}")));
        }
        let unit: Vec<f64> = components.iter().map(|c| c / norm).collect();
        Phase::new(algebra, &unit)
    }

    pub fn algebra(&self) -> AlgebraKind {
        self.algebra
    }

    pub fn components(&self) -> &[f64] {
        &self.q[..self.algebra.block_dim()]
    }

    /// Product `self * other`, so that rotating by the product equals
    /// rotating by `other` and then by `self`.
    pub fn compose(&self, other: &Phase) -> Result<Phase> {
        if self.algebra != other.algebra {
            return Err(Error::InvalidPhase("cannot compose phases of different algebras".into()));
        }
        let mut q = [0.0; 4];
        match self.algebra {
            AlgebraKind::Complex => {
                let out = complex_mul(&self.q[..2], &other.q[..2]);
                q[..2].copy_from_slice(&out);
            }
            AlgebraKind::Quaternion => q = quaternion_mul(&self.q, &other.q),
        }
        Ok(Phase { algebra: self.algebra, q })
    }

    /// Rotates `src` blockwise into `dst`. Both slices must have length `d * n`.
    #[inline]
    pub fn rotate_into(&self, src: &[f64], dst: &mut [f64]) {
        debug_assert_eq!(src.len(), dst.len());
        match self.algebra {
            AlgebraKind::Complex => {
                let (c, s) = (self.q[0], self.q[1]);
                for (out, block) in dst.chunks_exact_mut(2).zip(src.chunks_exact(2)) {
                    out[0] = c * block[0] - s * block[1];
                    out[1] = s * block[0] + c * block[1];
                }
            }
            AlgebraKind::Quaternion => {
                for (out, block) in dst.chunks_exact_mut(4).zip(src.chunks_exact(4)) {
                    let b = [block[0], block[1], block[2], block[3]];
                    out.copy_from_slice(&quaternion_mul(&self.q, &b));
                }
            }
        }
    }
}

#[inline]
fn complex_mul(a: &[f64], b: &[f64]) -> [f64; 2] {
    [a[0] * b[0] - a[1] * b[1], a[0] * b[1] + a[1] * b[0]]
}

/// Hamilton product `a * b`.
#[inline]
pub fn quaternion_mul(a: &[f64; 4], b: &[f64; 4]) -> [f64; 4] {
    let [a1, b1, c1, d1] = *a;
    let [a2, b2, c2, d2] = *b;
    [
        a1 * a2 - b1 * b2 - c1 * c2 - d1 * d2,
        a1 * b2 + b1 * a2 + c1 * d2 - d1 * c2,
        a1 * c2 - b1 * d2 + c1 * a2 + d1 * b2,
        a1 * d2 + b1 * c2 - c1 * b2 + d1 * a2,
    ]
}

/// Multiplies every block of `omega` on the left by `q`.
pub fn phase_rotate(omega: &Direction, q: &Phase) -> Result<Direction> {
    if q.algebra != omega.layout.algebra() {
        return Err(Error::InvalidPhase(format!("{} phase cannot act on {}", q.algebra, omega.layout)));
    }
    let mut out = vec![0.0; omega.coords.len()];
    q.rotate_into(&omega.coords, &mut out);
    Ok(Direction { coords: out, layout: omega.layout })
}

/// The point `s * (q omega)` of the real `d`-plane spanned by the orbit of
/// `omega`.
pub fn plane_point(omega: &Direction, s: f64, q: &Phase) -> Result<Vec<f64>> {
    if s.is_nan() || s < 0.0 {
        return Err(Error::Precondition(format!("plane radius must be >= 0, got {s}")));
    }
    let rotated = phase_rotate(omega, q)?;
    Ok(rotated.coords.into_iter().map(|c| s * c).collect())
}

/// Real `m x m` matrices of the infinitesimal phase action: multiplication by
/// `i` (complex) or by `i`, `j`, `k` (quaternion) in every block. A linear map
/// commutes with all phases iff it commutes with these generators.
pub fn phase_generators(layout: Layout) -> Vec<Vec<f64>> {
    let units: Vec<[f64; 4]> = match layout.algebra() {
        AlgebraKind::Complex => vec![[0.0, 1.0, 0.0, 0.0]],
        AlgebraKind::Quaternion => vec![[0.0, 1.0, 0.0, 0.0], [0.0, 0.0, 1.0, 0.0], [0.0, 0.0, 0.0, 1.0]],
    };
    let m = layout.dim();
    let d = layout.block_dim();
    units
        .into_iter()
        .map(|u| {
            let phase = Phase { algebra: layout.algebra(), q: u };
            // Column j is the image of e_j; stored row-major.
            let mut mat = vec![0.0; m * m];
            let mut src = vec![0.0; m];
            let mut dst = vec![0.0; m];
            for j in 0..m {
                src.iter_mut().for_each(|x| *x = 0.0);
                src[j] = 1.0;
                phase.rotate_into(&src, &mut dst);
                for i in 0..m {
                    mat[i * m + j] = dst[i];
                }
            }
            debug_assert_eq!(m % d, 0);
            mat
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use std::f64::consts::{FRAC_PI_2, PI};

    use super::*;

    fn c2() -> Layout {
        Layout::complex(2).unwrap()
    }

    #[test]
    fn quarter_turn_maps_real_axis_to_imaginary() {
        let omega = Direction::axis(c2(), 0).unwrap();
        let out = phase_rotate(&omega, &Phase::from_angle(FRAC_PI_2)).unwrap();
        let expected = [0.0, 1.0, 0.0, 0.0];
        for (a, b) in out.coords().iter().zip(expected) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn identity_phase_is_identity() {
        let omega = Direction::normalized(c2(), vec![0.3, -0.1, 0.7, 0.2]).unwrap();
        let out = phase_rotate(&omega, &Phase::identity(AlgebraKind::Complex)).unwrap();
        assert_eq!(out, omega);
    }

    #[test]
    fn hamilton_convention() {
        let i = [0.0, 1.0, 0.0, 0.0];
        let j = [0.0, 0.0, 1.0, 0.0];
        let k = [0.0, 0.0, 0.0, 1.0];
        assert_eq!(quaternion_mul(&i, &j), k);
        assert_eq!(quaternion_mul(&j, &k), i);
        assert_eq!(quaternion_mul(&k, &i), j);
        assert_eq!(quaternion_mul(&i, &i), [-1.0, 0.0, 0.0, 0.0]);
        assert_eq!(quaternion_mul(&j, &i), [0.0, 0.0, 0.0, -1.0]);
    }

    #[test]
    fn quaternion_block_norm_preserved() {
        let layout = Layout::quaternion(2).unwrap();
        let omega = Direction::normalized(layout, vec![0.5, -0.5, 0.5, 0.5, 0.0, 0.0, 0.0, 0.0]).unwrap();
        let q = Phase::normalized(AlgebraKind::Quaternion, &[0.1, 0.7, -0.3, 0.2]).unwrap();
        let out = phase_rotate(&omega, &q).unwrap();
        let block_norm = euclidean_norm(&out.coords()[..4]);
        assert!((block_norm - 1.0).abs() < 1e-12);
        assert!(out.coords()[4..].iter().all(|c| *c == 0.0));
        // Hand expansion of q * b for this block.
        let [w, x, y, z] = [0.1, 0.7, -0.3, 0.2].map(|c: f64| c / 0.63f64.sqrt());
        let [a, b, c, d] = [0.5, -0.5, 0.5, 0.5];
        let hand = [
            w * a - x * b - y * c - z * d,
            w * b + x * a + y * d - z * c,
            w * c - x * d + y * a + z * b,
            w * d + x * c - y * b + z * a,
        ];
        for (u, v) in out.coords()[..4].iter().zip(hand) {
            assert!((u - v).abs() < 1e-12);
        }
    }

    #[test]
    fn plane_point_endpoints() {
        let omega = Direction::normalized(c2(), vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let id = Phase::identity(AlgebraKind::Complex);
        assert!(plane_point(&omega, 0.0, &id).unwrap().iter().all(|c| *c == 0.0));
        assert_eq!(plane_point(&omega, 1.0, &id).unwrap(), omega.coords());
        assert!(plane_point(&omega, -1.0, &id).is_err());
    }

    #[test]
    fn rejects_non_unit_inputs() {
        assert!(Direction::new(c2(), vec![1.0, 1.0, 0.0, 0.0]).is_err());
        assert!(Direction::new(c2(), vec![1.0, 0.0]).is_err());
        assert!(Phase::new(AlgebraKind::Complex, &[0.5, 0.5]).is_err());
        assert!(Layout::complex(0).is_err());
        let q = Phase::identity(AlgebraKind::Quaternion);
        assert!(phase_rotate(&Direction::axis(c2(), 0).unwrap(), &q).is_err());
    }

    #[test]
    fn generators_square_to_minus_identity() {
        for layout in [c2(), Layout::quaternion(2).unwrap()] {
            let m = layout.dim();
            for g in phase_generators(layout) {
                for i in 0..m {
                    for j in 0..m {
                        let sq: f64 = (0..m).map(|k| g[i * m + k] * g[k * m + j]).sum();
                        let expect = if i == j { -1.0 } else { 0.0 };
                        assert!((sq - expect).abs() < 1e-15);
                    }
                }
            }
        }
    }

    #[test]
    fn compose_matches_sequential_rotation() {
        let omega = Direction::normalized(c2(), vec![0.2, 0.4, -0.1, 0.9]).unwrap();
        let a = Phase::from_angle(0.4);
        let b = Phase::from_angle(PI / 3.0);
        let seq = phase_rotate(&phase_rotate(&omega, &b).unwrap(), &a).unwrap();
        let direct = phase_rotate(&omega, &a.compose(&b).unwrap()).unwrap();
        for (u, v) in seq.coords().iter().zip(direct.coords()) {
            assert!((u - v).abs() < 1e-12);
        }
    }
}
