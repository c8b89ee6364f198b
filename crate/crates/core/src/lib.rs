//! Volumes, complex- and quaternionic-line cross-sections, and the
//! circularity defect of origin-symmetric star bodies in `R^{dn}`.
//!
//! Bodies are radial functions ([`body`]); integrals over the sphere are
//! seeded Monte Carlo with error bars and phase averages use an exact circle
//! rule or sampled unit quaternions ([`sampling`]). [`functionals`] computes
//! volume, slice measures and the defect, [`comparator`] compares bodies by
//! their slices, and [`oracle`] holds independent checks of the main path.

pub mod algebra;
pub mod body;
pub mod catalog;
pub mod comparator;
pub mod error;
pub mod functionals;
pub mod oracle;
pub mod report;
pub mod sampling;
pub mod special;

pub use algebra::{phase_rotate, plane_point, AlgebraKind, Direction, Layout, Phase};
pub use body::{validate_body, Perturbation, StarBody, ValidationReport};
pub use error::{Error, Result};
pub use functionals::{
    circularity_defect, circularize, closed_form_volume, slice_measure, theorem1_functional, volume_polar,
    DefectReport, SliceMeasure,
};
pub use sampling::{Estimate, PhaseRule, QuadratureSpec};
