//! Volumes, line cross-sections and the circularity defect.
//!
//! With `m = d n`, polar coordinates give
//!
//! ```text
//! vol(D) = vol(B^m) * E_w[ rho(w)^m ]
//! ```
//!
//! for `w` uniform on `S^{m-1}`. The cross-section of `D` by the real
//! `d`-plane `l(w) = { s q w }` has measure `vol(B^d) * E_q[ rho(q w)^d ]`.
//! Averaging `rho(q w)^m = (rho(q w)^d)^n` over phases and applying Jensen's
//! inequality to `x -> x^n` yields
//!
//! ```text
//! vol(D) >= c_{n,d} * E_l[ slice(l)^n ],   c_{n,2} = 1/n!,  c_{n,4} = 2^n/(2n)!
//! ```
//!
//! with equality exactly for phase-invariant bodies. Volume, functional and
//! defect are all estimated on one shared set of sphere samples, so the
//! defect is a mean of pointwise Jensen gaps and is nonnegative sample by
//! sample.

use serde::{Deserialize, Serialize};

use crate::algebra::{AlgebraKind, Direction, Layout};
use crate::body::{Shape, StarBody};
use crate::error::{Error, Result};
use crate::sampling::{estimate_mean, par_eval, sample_sphere, Estimate, PhaseRule, QuadratureSpec, SphereSample};
use crate::special::{factorial, unit_ball_volume};

/// Relative floating-point floor on the defect standard error. Phase averages
/// of a phase-invariant radial function still differ in the last few bits.
pub const DEFECT_ROUNDING_FLOOR: f64 = 1e-13;

/// Exact volume for primitive shapes and their linear images.
pub fn closed_form_volume(body: &StarBody) -> Option<f64> {
    let layout = body.layout();
    let m = layout.dim();
    match body.shape() {
        Shape::Ball { radius } => Some(unit_ball_volume(m) * radius.powi(m as i32)),
        Shape::Ellipsoid { matrix } => Some(unit_ball_volume(m) / matrix.determinant().sqrt()),
        Shape::Polydisc { radii } => {
            let d = layout.block_dim();
            Some(radii.iter().map(|r| unit_ball_volume(d) * r.powi(d as i32)).product())
        }
        Shape::LpBall { p, radius } => {
            let side = 2.0 * radius;
            match p.value() {
                1.0 => Some(side.powi(m as i32) / factorial(m)),
                2.0 => Some(unit_ball_volume(m) * radius.powi(m as i32)),
                p if p.is_infinite() => Some(side.powi(m as i32)),
                _ => None,
            }
        }
        Shape::LinearImage { map, inner, .. } => closed_form_volume(inner).map(|v| v * map.determinant().abs()),
        _ => None,
    }
}

/// Shared uniform directions for all functionals of `layout` under `spec`.
pub fn sphere_samples(layout: Layout, spec: &QuadratureSpec) -> Result<SphereSample> {
    spec.validate()?;
    sample_sphere(layout.dim(), spec.sphere_samples, spec.seed)
}

/// `vol(B^m) * mean_w rho(w)^m` over the shared sphere samples.
pub fn volume_polar(body: &StarBody, spec: &QuadratureSpec) -> Result<Estimate> {
    let sample = sphere_samples(body.layout(), spec)?;
    volume_on(body, &sample, spec.chunk_size)
}

pub fn volume_on(body: &StarBody, sample: &SphereSample, chunk_size: usize) -> Result<Estimate> {
    let m = body.layout().dim() as i32;
    let values = par_eval(sample, |w| Ok(body.radial_at(w)?.powi(m)))?;
    Ok(estimate_mean(&values, chunk_size)?.scaled(unit_ball_volume(m as usize)))
}

/// Measure of `D` intersected with the line `l(w)`.
#[derive(Clone, Debug, PartialEq)]
pub struct SliceMeasure {
    pub line: Direction,
    pub value: f64,
    /// Phases in the rule used for the inner average.
    pub phases: usize,
}

/// Running phase moments of `rho(q w)` for one direction.
#[derive(Clone, Copy, Debug)]
pub(crate) struct PhaseMoments {
    /// `mean_q rho(q w)^d`.
    pub block_moment: f64,
    /// `mean_q rho(q w)^m`.
    pub full_moment: f64,
}

pub(crate) fn phase_moments(body: &StarBody, w: &[f64], rule: &PhaseRule) -> Result<PhaseMoments> {
    let layout = body.layout();
    let d = layout.block_dim() as i32;
    let n = layout.blocks() as i32;
    let mut buf = vec![0.0; w.len()];
    let (mut block, mut full) = (0.0, 0.0);
    for q in rule.phases() {
        q.rotate_into(w, &mut buf);
        let r = body.radial_at(&buf)?.powi(d);
        block += r;
        full += r.powi(n);
    }
    let k = rule.len() as f64;
    Ok(PhaseMoments { block_moment: block / k, full_moment: full / k })
}

fn check_rule(body: &StarBody, rule: &PhaseRule) -> Result<()> {
    if rule.algebra() != body.layout().algebra() {
        return Err(Error::Precondition(format!(
            "{} phase rule used with a body in {}",
            rule.algebra(),
            body.layout()
        )));
    }
    Ok(())
}

/// `vol(B^d) * mean_q rho(q w)^d` for a raw unit vector `w`.
pub fn slice_measure_with(body: &StarBody, w: &[f64], rule: &PhaseRule) -> Result<f64> {
    check_rule(body, rule)?;
    let d = body.layout().block_dim();
    Ok(unit_ball_volume(d) * phase_moments(body, w, rule)?.block_moment)
}

/// Area (`d = 2`) or 4-volume (`d = 4`) of the slice through `omega`, using
/// the circle rule with `K` nodes or `Q` sampled unit quaternions.
pub fn slice_measure(body: &StarBody, omega: &Direction, spec: &QuadratureSpec) -> Result<SliceMeasure> {
    let rule = PhaseRule::for_spec(body.layout().algebra(), spec)?;
    slice_measure_rule(body, omega, &rule)
}

pub fn slice_measure_rule(body: &StarBody, omega: &Direction, rule: &PhaseRule) -> Result<SliceMeasure> {
    if omega.layout() != body.layout() {
        return Err(Error::InvalidDirection(format!(
            "direction in {} used with body in {}",
            omega.layout(),
            body.layout()
        )));
    }
    let value = slice_measure_with(body, omega.coords(), rule)?;
    Ok(SliceMeasure { line: omega.clone(), value, phases: rule.len() })
}

/// `c_{n,d}`: `1/n!` for complex lines, `2^n / (2n)!` for quaternionic lines.
///
/// Both make the functional exact on the unit ball:
/// `c_{n,d} vol(B^d)^n = vol(B^{dn})`.
pub fn functional_constant(n: usize, algebra: AlgebraKind) -> f64 {
    match algebra {
        AlgebraKind::Complex => 1.0 / factorial(n),
        AlgebraKind::Quaternion => 2f64.powi(n as i32) / factorial(2 * n),
    }
}

/// `c_{n,d} * E_l[ slice(l)^n ]` with lines `l(w)` for uniform `w`.
pub fn theorem1_functional(body: &StarBody, spec: &QuadratureSpec) -> Result<Estimate> {
    let sample = sphere_samples(body.layout(), spec)?;
    let rule = PhaseRule::for_spec(body.layout().algebra(), spec)?;
    functional_on(body, &sample, &rule, spec.chunk_size)
}

pub fn functional_on(body: &StarBody, sample: &SphereSample, rule: &PhaseRule, chunk_size: usize) -> Result<Estimate> {
    check_rule(body, rule)?;
    let layout = body.layout();
    let n = layout.blocks() as i32;
    let values = par_eval(sample, |w| Ok(slice_measure_with(body, w, rule)?.powi(n)))?;
    let constant = functional_constant(layout.blocks(), layout.algebra());
    Ok(estimate_mean(&values, chunk_size)?.scaled(constant))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DefectVerdict {
    /// `|defect| <= 3 std_error`.
    Circular,
    NotCircular,
}

impl DefectVerdict {
    pub fn describe(self) -> &'static str {
        match self {
            DefectVerdict::Circular => "circular (defect ≈ 0)",
            DefectVerdict::NotCircular => "not circular",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DefectReport {
    /// `vol(B^m) * mean_w mean_q rho(q w)^m`.
    pub volume: Estimate,
    /// `vol(B^m) * mean_w (mean_q rho(q w)^d)^n`.
    pub functional: Estimate,
    /// Mean pointwise Jensen gap, scaled by `vol(B^m)`.
    pub defect: Estimate,
    pub significance: f64,
    /// Largest and smallest `gap / mean_q rho^m` over the sampled directions.
    pub max_relative_gap: f64,
    pub min_relative_gap: f64,
}

impl DefectReport {
    pub fn verdict(&self) -> DefectVerdict {
        if self.defect.value.abs() <= 3.0 * self.defect.std_error {
            DefectVerdict::Circular
        } else {
            DefectVerdict::NotCircular
        }
    }
}

pub(crate) fn significance(value: f64, std_error: f64) -> f64 {
    if std_error > 0.0 {
        value / std_error
    } else if value == 0.0 {
        0.0
    } else {
        value.signum() * f64::INFINITY
    }
}

/// `vol(D) - c_{n,d} E_l[slice^n]` estimated from shared draws.
pub fn circularity_defect(body: &StarBody, spec: &QuadratureSpec) -> Result<DefectReport> {
    let sample = sphere_samples(body.layout(), spec)?;
    let rule = PhaseRule::for_spec(body.layout().algebra(), spec)?;
    defect_on(body, &sample, &rule, spec.chunk_size)
}

pub fn defect_on(body: &StarBody, sample: &SphereSample, rule: &PhaseRule, chunk_size: usize) -> Result<DefectReport> {
    check_rule(body, rule)?;
    let layout = body.layout();
    let n = layout.blocks() as i32;
    let moments: Vec<PhaseMoments> = {
        use rayon::prelude::*;
        sample.par_iter().map(|w| phase_moments(body, w, rule)).collect::<Result<_>>()?
    };
    let full: Vec<f64> = moments.iter().map(|p| p.full_moment).collect();
    let powered: Vec<f64> = moments.iter().map(|p| p.block_moment.powi(n)).collect();
    let gaps: Vec<f64> = full.iter().zip(&powered).map(|(a, b)| a - b).collect();
    let (min_rel, max_rel) = gaps
        .iter()
        .zip(&full)
        .map(|(g, a)| g / a)
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| (lo.min(r), hi.max(r)));

    let scale = unit_ball_volume(layout.dim());
    let volume = estimate_mean(&full, chunk_size)?.scaled(scale);
    let functional = estimate_mean(&powered, chunk_size)?.scaled(scale);
    let mut defect = estimate_mean(&gaps, chunk_size)?.scaled(scale);
    defect.std_error = defect.std_error.max(DEFECT_ROUNDING_FLOOR * volume.value.abs());
    Ok(DefectReport {
        volume,
        functional,
        significance: significance(defect.value, defect.std_error),
        defect,
        max_relative_gap: max_rel,
        min_relative_gap: min_rel,
    })
}

/// The phase-invariant body with the same line cross-sections:
/// `rho_c(w) = (mean_q rho(q w)^d)^{1/d}`.
///
/// With the circle rule the node set is a group, so `rho_c` is exactly
/// invariant under the rule's phases and slices are preserved to rounding.
pub fn circularize(body: &StarBody, rule: &PhaseRule) -> Result<StarBody> {
    check_rule(body, rule)?;
    StarBody::circularized(body.clone(), rule.clone())
}

/// [`circularize`] with the phase rule `spec` selects for the body's algebra.
pub fn circularize_spec(body: &StarBody, spec: &QuadratureSpec) -> Result<StarBody> {
    circularize(body, &PhaseRule::for_spec(body.layout().algebra(), spec)?)
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;
    use crate::body::Perturbation;

    fn c2() -> Layout {
        Layout::complex(2).unwrap()
    }

    fn small_spec(seed: u64) -> QuadratureSpec {
        QuadratureSpec { sphere_samples: 20_000, ..QuadratureSpec::with_seed(seed) }
    }

    #[test]
    fn closed_forms() {
        let ball = StarBody::ball(c2(), 1.0).unwrap();
        assert!((closed_form_volume(&ball).unwrap() - PI * PI / 2.0).abs() < 1e-14);
        let ell = StarBody::diagonal_ellipsoid(c2(), &[4.0, 4.0, 1.0, 1.0]).unwrap();
        assert!((closed_form_volume(&ell).unwrap() - PI * PI / 8.0).abs() < 1e-14);
        let scaled = StarBody::scaled(2.0, ball.clone()).unwrap();
        assert!((closed_form_volume(&scaled).unwrap() - 8.0 * PI * PI).abs() < 1e-12);
        let poly = StarBody::polydisc(c2(), vec![1.0, 2.0]).unwrap();
        assert!((closed_form_volume(&poly).unwrap() - 4.0 * PI * PI).abs() < 1e-12);
        let qpoly = StarBody::polydisc(Layout::quaternion(2).unwrap(), vec![1.0, 1.0]).unwrap();
        assert!((closed_form_volume(&qpoly).unwrap() - PI.powi(4) / 4.0).abs() < 1e-12);
        let cross = StarBody::lp_ball(c2(), 1.0, 1.0).unwrap();
        assert!((closed_form_volume(&cross).unwrap() - 16.0 / 24.0).abs() < 1e-15);
        assert_eq!(closed_form_volume(&StarBody::cube(c2(), 1.0).unwrap()), Some(16.0));
        let pert = StarBody::perturbed(ball, 0.1, Perturbation::Quartic).unwrap();
        assert_eq!(closed_form_volume(&pert), None);
    }

    #[test]
    fn slice_examples() {
        let spec = QuadratureSpec::with_seed(1);
        let e1 = Direction::axis(c2(), 0).unwrap();
        let ball = StarBody::ball(c2(), 1.0).unwrap();
        assert!((slice_measure(&ball, &e1, &spec).unwrap().value - PI).abs() < 1e-14);
        let poly = StarBody::polydisc(c2(), vec![1.0, 2.0]).unwrap();
        assert!((slice_measure(&poly, &e1, &spec).unwrap().value - PI).abs() < 1e-13);
        // The e1, e2 plane cuts the cube in [-1, 1]^2. The square's radial
        // function has corners, so the circle rule converges like 1/K^2.
        let cube = StarBody::cube(c2(), 1.0).unwrap();
        let s = slice_measure(&cube, &e1, &spec).unwrap().value;
        assert!((s - 4.0).abs() < 0.02, "{s}");
        let fine = QuadratureSpec { circle_nodes: 1024, ..spec };
        let s_fine = slice_measure(&cube, &e1, &fine).unwrap().value;
        assert!((s_fine - 4.0).abs() < (s - 4.0).abs() / 100.0, "{s_fine}");
    }

    #[test]
    fn functional_constants_match_ball_volumes() {
        for n in 1..6 {
            let c2 = functional_constant(n, AlgebraKind::Complex) * PI.powi(n as i32);
            assert!((c2 - unit_ball_volume(2 * n)).abs() <= 1e-13 * c2);
            let c4 = functional_constant(n, AlgebraKind::Quaternion) * (PI * PI / 2.0).powi(n as i32);
            assert!((c4 - unit_ball_volume(4 * n)).abs() <= 1e-13 * c4);
        }
        assert!((functional_constant(2, AlgebraKind::Quaternion) - 1.0 / 6.0).abs() < 1e-16);
    }

    #[test]
    fn ball_functional_equals_volume() {
        let spec = small_spec(3);
        let ball = StarBody::ball(c2(), 1.0).unwrap();
        let f = theorem1_functional(&ball, &spec).unwrap();
        assert!((f.value - PI * PI / 2.0).abs() < 1e-13);
        let report = circularity_defect(&ball, &spec).unwrap();
        assert_eq!(report.defect.value, 0.0);
        assert_eq!(report.verdict(), DefectVerdict::Circular);
    }

    #[test]
    fn cube_defect_is_positive() {
        let spec = small_spec(4);
        let cube = StarBody::cube(c2(), 1.0).unwrap();
        let report = circularity_defect(&cube, &spec).unwrap();
        assert!(report.defect.value > 0.0);
        assert!(report.significance > 5.0);
        assert!(report.min_relative_gap >= -1e-12);
        assert_eq!(report.verdict(), DefectVerdict::NotCircular);
        let f = theorem1_functional(&cube, &spec).unwrap();
        assert!(f.value < 16.0);
        assert!((f.value - report.functional.value).abs() <= 1e-12 * f.value);
    }

    #[test]
    fn single_block_defect_vanishes() {
        // n = 1: the only line is the whole plane and x -> x^1 is linear.
        let layout = Layout::complex(1).unwrap();
        let cube = StarBody::cube(layout, 1.0).unwrap();
        let report = circularity_defect(&cube, &small_spec(5)).unwrap();
        assert!(report.defect.value.abs() <= 3.0 * report.defect.std_error);
    }

    #[test]
    fn circularize_fixes_ball_and_preserves_slices() {
        let rule = PhaseRule::circle(16).unwrap();
        let ball = StarBody::ball(c2(), 1.0).unwrap();
        let c = circularize(&ball, &rule).unwrap();
        let w = Direction::normalized(c2(), vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        assert!((c.radial(&w).unwrap() - 1.0).abs() < 1e-15);

        let cube = StarBody::cube(c2(), 1.0).unwrap();
        let cc = circularize(&cube, &rule).unwrap();
        assert!(cc.known_circular());
        let a = slice_measure_with(&cube, w.coords(), &rule).unwrap();
        let b = slice_measure_with(&cc, w.coords(), &rule).unwrap();
        assert!((a - b).abs() <= 1e-12 * a);
        assert!(circularize(&cube, &PhaseRule::sampled(AlgebraKind::Quaternion, 4, 1).unwrap()).is_err());
    }
}
