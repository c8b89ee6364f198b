//! Star bodies described by their radial functions.
//!
//! A [`StarBody`] is an immutable tree of primitive shapes and combinators.
//! The radial function `rho(w) = max { t >= 0 : t w in D }` is evaluated on
//! unit vectors only; every variant is origin symmetric.

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::algebra::{euclidean_norm, phase_generators, Direction, Layout};
use crate::error::{Error, Result};
use crate::sampling::{labels, sample_sphere_labeled, PhaseRule};

/// Largest radial value accepted by validation.
pub const MAX_RADIAL: f64 = 1e12;

/// Relative tolerance for origin symmetry and phase invariance checks.
pub const BODY_REL_TOL: f64 = 1e-9;

/// Exponent of a real `l_p` ball.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum LpExponent {
    Finite(f64),
    Infinity,
}

impl LpExponent {
    pub fn new(p: f64) -> Result<Self> {
        if p == f64::INFINITY {
            Ok(LpExponent::Infinity)
        } else if p.is_finite() && p >= 1.0 {
            Ok(LpExponent::Finite(p))
        } else {
            Err(Error::Precondition(format!("l_p exponent must lie in [1, inf], got {p}")))
        }
    }

    pub fn value(self) -> f64 {
        match self {
            LpExponent::Finite(p) => p,
            LpExponent::Infinity => f64::INFINITY,
        }
    }

    fn norm(self, w: &[f64]) -> f64 {
        match self {
            LpExponent::Infinity => w.iter().fold(0.0, |acc: f64, x| acc.max(x.abs())),
            LpExponent::Finite(1.0) => w.iter().map(|x| x.abs()).sum(),
            LpExponent::Finite(2.0) => euclidean_norm(w),
            LpExponent::Finite(p) => w.iter().map(|x| x.abs().powf(p)).sum::<f64>().powf(p.recip()),
        }
    }
}

/// Smooth even functions on the sphere with values in `[-1, 1]`, used to
/// perturb a body radially.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Perturbation {
    /// `w_1^2 - w_2^2`: depends on the phase of the first block.
    BlockQuadrupole,
    /// `2 w_1 w_m`: product of the first and last coordinates.
    CoordinateProduct,
    /// `2 sum w_i^4 - 1`: a real quartic with cubic symmetry.
    Quartic,
    /// `|b_1|^2 - |b_n|^2`: difference of block moduli, phase invariant.
    ModulusContrast,
}

impl Perturbation {
    pub const ALL: [Perturbation; 4] = [
        Perturbation::BlockQuadrupole,
        Perturbation::CoordinateProduct,
        Perturbation::Quartic,
        Perturbation::ModulusContrast,
    ];

    pub fn eval(self, w: &[f64], layout: Layout) -> f64 {
        match self {
            Perturbation::BlockQuadrupole => w[0] * w[0] - w[1] * w[1],
            Perturbation::CoordinateProduct => 2.0 * w[0] * w[w.len() - 1],
            Perturbation::Quartic => 2.0 * w.iter().map(|x| x.powi(4)).sum::<f64>() - 1.0,
            Perturbation::ModulusContrast => {
                let d = layout.block_dim();
                let first: f64 = w[..d].iter().map(|x| x * x).sum();
                let last: f64 = w[w.len() - d..].iter().map(|x| x * x).sum();
                first - last
            }
        }
    }

    /// Whether `f(q w) = f(w)` for every phase `q`.
    pub fn is_phase_invariant(self) -> bool {
        matches!(self, Perturbation::ModulusContrast)
    }

    pub fn name(self) -> &'static str {
        match self {
            Perturbation::BlockQuadrupole => "block_quadrupole",
            Perturbation::CoordinateProduct => "coordinate_product",
            Perturbation::Quartic => "quartic",
            Perturbation::ModulusContrast => "modulus_contrast",
        }
    }
}

/// User-supplied radial function on unit vectors.
pub type RadialFn = dyn Fn(&[f64]) -> f64 + Send + Sync;

#[derive(Clone)]
pub struct CustomRadial {
    name: String,
    evaluator: Arc<RadialFn>,
}

impl fmt::Debug for CustomRadial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomRadial").field("name", &self.name).finish()
    }
}

#[derive(Clone, Debug)]
pub enum Shape {
    Ball {
        radius: f64,
    },
    /// `{ x : x^T A x <= 1 }`.
    Ellipsoid {
        matrix: DMatrix<f64>,
    },
    /// Block moduli bounded by the radii.
    Polydisc {
        radii: Vec<f64>,
    },
    LpBall {
        p: LpExponent,
        radius: f64,
    },
    /// `T(inner)`; the inverse is kept for radial evaluation.
    LinearImage {
        map: DMatrix<f64>,
        inverse: DMatrix<f64>,
        inner: StarBody,
    },
    Intersection(StarBody, StarBody),
    Union(StarBody, StarBody),
    /// `rho_inner * (1 + amplitude * f)`.
    RadialPerturbation {
        inner: StarBody,
        amplitude: f64,
        perturbation: Perturbation,
    },
    Custom(CustomRadial),
    /// `rho_c(w) = (mean_q rho(q w)^d)^{1/d}` over a phase rule.
    Circularized {
        inner: StarBody,
        rule: PhaseRule,
    },
}

impl Shape {
    pub fn variant_name(&self) -> &'static str {
        match self {
            Shape::Ball { .. } => "ball",
            Shape::Ellipsoid { .. } => "ellipsoid",
            Shape::Polydisc { .. } => "polydisc",
            Shape::LpBall { .. } => "lp_ball",
            Shape::LinearImage { .. } => "linear_image",
            Shape::Intersection(..) => "intersection",
            Shape::Union(..) => "union",
            Shape::RadialPerturbation { .. } => "radial_perturbation",
            Shape::Custom(_) => "custom",
            Shape::Circularized { .. } => "circularized",
        }
    }
}

/// An origin-symmetric star body in `R^m`, `m = d n`.
#[derive(Clone, Debug)]
pub struct StarBody {
    layout: Layout,
    shape: Arc<Shape>,
    known_circular: bool,
}

fn positive(name: &str, x: f64) -> Result<()> {
    if x.is_finite() && x > 0.0 {
        Ok(())
    } else {
        Err(Error::Precondition(format!("{name} must be a positive finite number, got {x}")))
    }
}

fn square_matrix(layout: Layout, rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let m = layout.dim();
    if rows.len() != m || rows.iter().any(|r| r.len() != m) {
        return Err(Error::Precondition(format!("matrix must be {m} x {m} for {layout}")));
    }
    if rows.iter().flatten().any(|x| !x.is_finite()) {
        return Err(Error::Precondition("matrix entries must be finite".into()));
    }
    Ok(DMatrix::from_fn(m, m, |i, j| rows[i][j]))
}

/// Whether `matrix` commutes with every phase, to `1e-12` relative.
pub fn commutes_with_phases(layout: Layout, matrix: &DMatrix<f64>) -> bool {
    let m = layout.dim();
    let scale = matrix.abs().max().max(f64::MIN_POSITIVE);
    phase_generators(layout).into_iter().all(|g| {
        let g = DMatrix::from_row_slice(m, m, &g);
        let comm = matrix * &g - &g * matrix;
        comm.abs().max() <= 1e-12 * scale
    })
}

impl StarBody {
    fn from_shape(layout: Layout, shape: Shape, known_circular: bool) -> Self {
        StarBody { layout, shape: Arc::new(shape), known_circular }
    }

    pub fn ball(layout: Layout, radius: f64) -> Result<Self> {
        positive("ball radius", radius)?;
        Ok(Self::from_shape(layout, Shape::Ball { radius }, true))
    }

    /// `{ x : x^T A x <= 1 }` for a symmetric positive-definite `A` given by rows.
    pub fn ellipsoid(layout: Layout, rows: &[Vec<f64>]) -> Result<Self> {
        let matrix = square_matrix(layout, rows)?;
        let asym = (&matrix - matrix.transpose()).abs().max();
        if asym > 1e-12 * matrix.abs().max() {
            return Err(Error::Precondition("ellipsoid matrix must be symmetric".into()));
        }
        if matrix.clone().cholesky().is_none() {
            return Err(Error::Precondition("ellipsoid matrix must be positive definite".into()));
        }
        let circular = commutes_with_phases(layout, &matrix);
        Ok(Self::from_shape(layout, Shape::Ellipsoid { matrix }, circular))
    }

    /// Diagonal ellipsoid `sum a_i x_i^2 <= 1`.
    pub fn diagonal_ellipsoid(layout: Layout, diag: &[f64]) -> Result<Self> {
        let m = layout.dim();
        if diag.len() != m {
            return Err(Error::Precondition(format!("diagonal must have {m} entries")));
        }
        let rows: Vec<Vec<f64>> =
            (0..m).map(|i| (0..m).map(|j| if i == j { diag[i] } else { 0.0 }).collect()).collect();
        Self::ellipsoid(layout, &rows)
    }

    pub fn polydisc(layout: Layout, radii: Vec<f64>) -> Result<Self> {
        if radii.len() != layout.blocks() {
            return Err(Error::Precondition(format!("polydisc needs {} radii, got {}", layout.blocks(), radii.len())));
        }
        for r in &radii {
            positive("polydisc radius", *r)?;
        }
        Ok(Self::from_shape(layout, Shape::Polydisc { radii }, true))
    }

    pub fn lp_ball(layout: Layout, p: f64, radius: f64) -> Result<Self> {
        let p = LpExponent::new(p)?;
        positive("l_p ball radius", radius)?;
        let circular = p == LpExponent::Finite(2.0);
        Ok(Self::from_shape(layout, Shape::LpBall { p, radius }, circular))
    }

    /// The cube `[-h, h]^m`.
    pub fn cube(layout: Layout, half_width: f64) -> Result<Self> {
        Self::lp_ball(layout, f64::INFINITY, half_width)
    }

    /// `T(inner)` for an invertible `T` given by rows.
    pub fn linear_image(rows: &[Vec<f64>], inner: StarBody) -> Result<Self> {
        let layout = inner.layout;
        let map = square_matrix(layout, rows)?;
        let inverse = map
            .clone()
            .try_inverse()
            .filter(|inv| inv.iter().all(|x| x.is_finite()))
            .ok_or_else(|| Error::Precondition("linear map must be invertible".into()))?;
        let det = map.determinant();
        if !det.is_finite() || det.abs() < 1e-300 {
            return Err(Error::Precondition("linear map must be invertible".into()));
        }
        let circular = inner.known_circular && commutes_with_phases(layout, &map);
        Ok(Self::from_shape(layout, Shape::LinearImage { map, inverse, inner }, circular))
    }

    /// `c * inner`.
    pub fn scaled(factor: f64, inner: StarBody) -> Result<Self> {
        positive("scale factor", factor)?;
        let m = inner.layout.dim();
        let rows: Vec<Vec<f64>> = (0..m).map(|i| (0..m).map(|j| if i == j { factor } else { 0.0 }).collect()).collect();
        Self::linear_image(&rows, inner)
    }

    pub fn intersection(left: StarBody, right: StarBody) -> Result<Self> {
        same_layout(&left, &right)?;
        let circular = left.known_circular && right.known_circular;
        Ok(Self::from_shape(left.layout, Shape::Intersection(left, right), circular))
    }

    pub fn union(left: StarBody, right: StarBody) -> Result<Self> {
        same_layout(&left, &right)?;
        let circular = left.known_circular && right.known_circular;
        Ok(Self::from_shape(left.layout, Shape::Union(left, right), circular))
    }

    /// `rho_inner (1 + amplitude f)` with `|amplitude| < 1`, so the result stays
    /// positive for `f` in `[-1, 1]`.
    pub fn perturbed(inner: StarBody, amplitude: f64, perturbation: Perturbation) -> Result<Self> {
        if !(amplitude.is_finite() && amplitude.abs() < 1.0) {
            return Err(Error::Precondition(format!("perturbation amplitude must satisfy |eps| < 1, got {amplitude}")));
        }
        let circular = inner.known_circular && perturbation.is_phase_invariant();
        let layout = inner.layout;
        Ok(Self::from_shape(layout, Shape::RadialPerturbation { inner, amplitude, perturbation }, circular))
    }

    /// A body given by an arbitrary radial function on unit vectors. It is never
    /// flagged circular.
    pub fn custom<F>(layout: Layout, name: impl Into<String>, evaluator: F) -> Self
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        let custom = CustomRadial { name: name.into(), evaluator: Arc::new(evaluator) };
        Self::from_shape(layout, Shape::Custom(custom), false)
    }

    /// Phase average of `inner` over `rule`; see [`crate::functionals::circularize`].
    pub fn circularized(inner: StarBody, rule: PhaseRule) -> Result<Self> {
        if rule.algebra() != inner.layout.algebra() {
            return Err(Error::Precondition(format!(
                "{} phase rule cannot average a body in {}",
                rule.algebra(),
                inner.layout
            )));
        }
        let layout = inner.layout;
        Ok(Self::from_shape(layout, Shape::Circularized { inner, rule }, true))
    }

    pub fn layout(&self) -> Layout {
        self.layout
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    /// Set by construction: balls, polydiscs, phase-commuting ellipsoids and
    /// images, combinations of circular bodies, and circularized bodies.
    pub fn known_circular(&self) -> bool {
        self.known_circular
    }

    /// An upper bound on `rho` over the whole sphere, when one follows from
    /// the construction. `None` for custom radial functions.
    pub fn radial_bound(&self) -> Option<f64> {
        let m = self.layout.dim() as f64;
        Some(match &*self.shape {
            Shape::Ball { radius } => *radius,
            Shape::Ellipsoid { matrix } => matrix.symmetric_eigenvalues().min().sqrt().recip(),
            Shape::Polydisc { radii } => radii.iter().map(|r| r * r).sum::<f64>().sqrt(),
            // min of |w|_p on the unit sphere is 1 for p <= 2, m^{1/p - 1/2} above.
            Shape::LpBall { p, radius } => radius * m.powf((0.5 - 1.0 / p.value()).max(0.0)),
            Shape::LinearImage { map, inner, .. } => map.singular_values().max() * inner.radial_bound()?,
            Shape::Intersection(a, b) => match (a.radial_bound(), b.radial_bound()) {
                (Some(x), Some(y)) => x.min(y),
                (x, y) => x.or(y)?,
            },
            Shape::Union(a, b) => a.radial_bound()?.max(b.radial_bound()?),
            // Every catalogued perturbation takes values in [-1, 1].
            Shape::RadialPerturbation { inner, amplitude, .. } => inner.radial_bound()? * (1.0 + amplitude.abs()),
            Shape::Custom(_) => return None,
            Shape::Circularized { inner, .. } => inner.radial_bound()?,
        })
    }

    /// `rho(omega)`.
    pub fn radial(&self, omega: &Direction) -> Result<f64> {
        if omega.layout() != self.layout {
            return Err(Error::InvalidDirection(format!(
                "direction in {} used with body in {}",
                omega.layout(),
                self.layout
            )));
        }
        self.radial_at(omega.coords())
    }

    /// `rho(w)` for a unit vector `w` given as a raw slice.
    pub fn radial_at(&self, w: &[f64]) -> Result<f64> {
        let value = match &*self.shape {
            Shape::Ball { radius } => *radius,
            Shape::Ellipsoid { matrix } => {
                let m = w.len();
                let mut quad = 0.0;
                for i in 0..m {
                    let row: f64 = (0..m).map(|j| matrix[(i, j)] * w[j]).sum();
                    quad += w[i] * row;
                }
                quad.sqrt().recip()
            }
            Shape::Polydisc { radii } => {
                let d = self.layout.block_dim();
                radii.iter().zip(w.chunks_exact(d)).map(|(r, b)| r / euclidean_norm(b)).fold(f64::INFINITY, f64::min)
            }
            Shape::LpBall { p, radius } => radius / p.norm(w),
            Shape::LinearImage { inverse, inner, .. } => {
                let m = w.len();
                let mut u: Vec<f64> = (0..m).map(|i| (0..m).map(|j| inverse[(i, j)] * w[j]).sum()).collect();
                let len = euclidean_norm(&u);
                u.iter_mut().for_each(|x| *x /= len);
                inner.radial_at(&u)? / len
            }
            Shape::Intersection(a, b) => a.radial_at(w)?.min(b.radial_at(w)?),
            Shape::Union(a, b) => a.radial_at(w)?.max(b.radial_at(w)?),
            Shape::RadialPerturbation { inner, amplitude, perturbation } => {
                inner.radial_at(w)? * (1.0 + amplitude * perturbation.eval(w, self.layout))
            }
            Shape::Custom(custom) => (custom.evaluator)(w),
            Shape::Circularized { inner, rule } => {
                let d = self.layout.block_dim();
                let mut buf = vec![0.0; w.len()];
                let mut acc = 0.0;
                for q in rule.phases() {
                    q.rotate_into(w, &mut buf);
                    acc += inner.radial_at(&buf)?.powi(d as i32);
                }
                (acc / rule.len() as f64).powf(1.0 / d as f64)
            }
        };
        if value.is_finite() && value > 0.0 {
            Ok(value)
        } else {
            Err(Error::InvalidBody {
                variant: self.shape.variant_name(),
                detail: format!("radial value {value} is not positive and finite"),
            })
        }
    }
}

fn same_layout(a: &StarBody, b: &StarBody) -> Result<()> {
    if a.layout != b.layout {
        return Err(Error::Precondition(format!("cannot combine bodies in {} and {}", a.layout, b.layout)));
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    Positivity,
    Boundedness,
    Symmetry,
}

/// The first failing probe of [`validate_body`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidationFailure {
    pub kind: ViolationKind,
    pub direction: Vec<f64>,
    /// `rho(w)` (or the evaluation error), then `rho(-w)` for symmetry failures.
    pub values: Vec<f64>,
    pub detail: String,
}

impl fmt::Display for ValidationFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?} violation at {:?}: {}", self.kind, self.direction, self.detail)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub probes: usize,
    /// Largest `|rho(-w) - rho(w)| / rho(w)` seen.
    pub worst_symmetry_gap: f64,
    pub min_radial: f64,
    pub max_radial: f64,
    pub failure: Option<ValidationFailure>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.failure.is_none()
    }

    pub fn into_result(self) -> Result<ValidationReport> {
        match self.failure {
            Some(f) => Err(Error::Validation(f)),
            None => Ok(self),
        }
    }
}

/// Probes `probes` random directions for positivity, boundedness and origin
/// symmetry.
pub fn validate_body(body: &StarBody, probes: usize, seed: u64) -> Result<ValidationReport> {
    if probes == 0 {
        return Err(Error::Precondition("validation needs at least one probe".into()));
    }
    let sample = sample_sphere_labeled(body.layout.dim(), probes, seed, labels::VALIDATE)?;
    let mut report =
        ValidationReport { probes, worst_symmetry_gap: 0.0, min_radial: f64::INFINITY, max_radial: 0.0, failure: None };
    let mut neg = vec![0.0; sample.dim()];
    for w in sample.iter() {
        neg.iter_mut().zip(w).for_each(|(n, x)| *n = -x);
        let fail =
            |kind, values: Vec<f64>, detail: String| ValidationFailure { kind, direction: w.to_vec(), values, detail };
        let (plus, minus) = match (body.radial_at(w), body.radial_at(&neg)) {
            (Ok(a), Ok(b)) => (a, b),
            (Err(e), _) | (_, Err(e)) => {
                report.failure = Some(fail(ViolationKind::Positivity, vec![], e.to_string()));
                return Ok(report);
            }
        };
        if plus > MAX_RADIAL || minus > MAX_RADIAL {
            report.failure = Some(fail(
                ViolationKind::Boundedness,
                vec![plus, minus],
                format!("radial value exceeds {MAX_RADIAL:e}"),
            ));
            return Ok(report);
        }
        let gap = (minus - plus).abs() / plus;
        report.worst_symmetry_gap = report.worst_symmetry_gap.max(gap);
        report.min_radial = report.min_radial.min(plus.min(minus));
        report.max_radial = report.max_radial.max(plus.max(minus));
        if gap > BODY_REL_TOL {
            report.failure = Some(fail(
                ViolationKind::Symmetry,
                vec![plus, minus],
                format!("rho(-w) differs from rho(w) by {gap:e} relative"),
            ));
            return Ok(report);
        }
    }
    Ok(report)
}
