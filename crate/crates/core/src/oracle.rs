//! Independent checks of the polar-coordinate pipeline: volume by rejection
//! sampling, slice area by rasterization, and the normalizing constants.

use std::f64::consts::PI;

use rand_distr::{Distribution, Uniform};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algebra::{AlgebraKind, Direction, Layout, Phase};
use crate::body::StarBody;
use crate::error::{Error, Result};
use crate::functionals::{closed_form_volume, theorem1_functional};
use crate::sampling::{labels, sample_sphere_labeled, substream_rng, Estimate, QuadratureSpec, SAMPLE_BLOCK};
use crate::special::{factorial, sphere_surface, unit_ball_volume};

/// Directions probed to bound a body before rejection sampling.
pub const BOUND_PROBES: usize = 20_000;
/// Factor applied to the radial bound so that the acceptance rate stays
/// strictly below one, even for balls.
pub const BOUND_MARGIN: f64 = 1.05;

/// Volume as `acceptance rate * vol(B_R)` for points uniform in the ball of
/// radius `R`, with binomial standard error. `R` is the body's analytic
/// radial bound; custom bodies fall back to probing the sphere.
pub fn mc_volume_rejection(body: &StarBody, samples: usize, seed: u64) -> Result<Estimate> {
    if samples == 0 {
        return Err(Error::Precondition("rejection sampling needs at least one sample".into()));
    }
    let bound = match body.radial_bound() {
        Some(r) => r,
        None => probed_max_radial(body, seed)?,
    };
    rejection_in_ball(body, samples, seed, BOUND_MARGIN * bound)
}

fn probed_max_radial(body: &StarBody, seed: u64) -> Result<f64> {
    let probes = sample_sphere_labeled(body.layout().dim(), BOUND_PROBES, seed, labels::PROBE)?;
    Ok(probes.par_iter().map(|w| body.radial_at(w)).collect::<Result<Vec<f64>>>()?.into_iter().fold(0.0, f64::max))
}

pub(crate) fn rejection_in_ball(body: &StarBody, samples: usize, seed: u64, bound: f64) -> Result<Estimate> {
    let m = body.layout().dim();
    let directions = sample_sphere_labeled(m, samples, seed, labels::REJECTION)?;
    let unit = Uniform::new(0.0f64, 1.0).expect("unit interval");
    // Radii come from their own ChaCha streams, one per sample block.
    let blocks: Vec<usize> = (0..samples.div_ceil(SAMPLE_BLOCK)).collect();
    let accepted = blocks
        .par_iter()
        .map(|&block| {
            let mut rng = substream_rng(seed, "oracle/rejection-radius", block as u64);
            let start = block * SAMPLE_BLOCK;
            let end = (start + SAMPLE_BLOCK).min(samples);
            let mut hits = 0usize;
            for i in start..end {
                let w = directions.get(i);
                let rho = body.radial_at(w)?;
                if rho > bound {
                    return Err(Error::Oracle(format!(
                        "bounding radius {bound} underestimates the body: rho = {rho} at {w:?}"
                    )));
                }
                let r = bound * unit.sample(&mut rng).powf(1.0 / m as f64);
                if r <= rho {
                    hits += 1;
                }
            }
            Ok(hits)
        })
        .collect::<Result<Vec<usize>>>()?
        .into_iter()
        .sum::<usize>();

    let rate = accepted as f64 / samples as f64;
    let ball = unit_ball_volume(m) * bound.powi(m as i32);
    Ok(Estimate { value: rate * ball, std_error: ball * (rate * (1.0 - rate) / samples as f64).sqrt(), samples })
}

/// Area of the slice through `omega` by counting grid cells of side
/// `2R / grid_n` whose centres lie in the body. Complex lines only.
pub fn slice_grid_oracle(body: &StarBody, omega: &Direction, grid_n: usize) -> Result<f64> {
    let layout = body.layout();
    if layout.algebra() != AlgebraKind::Complex {
        return Err(Error::Precondition("the grid oracle handles complex lines only".into()));
    }
    if grid_n < 256 {
        return Err(Error::Precondition(format!("grid_n must be >= 256, got {grid_n}")));
    }
    if omega.layout() != layout {
        return Err(Error::InvalidDirection("direction and body layouts differ".into()));
    }
    let w = omega.coords();
    // The plane is { s w + t (i w) }; the point (s, t) = r e^{i phi} maps to
    // r e^{i phi} w.
    let mut buf = vec![0.0; w.len()];
    let mut in_plane = |phi: f64| -> Result<f64> {
        Phase::from_angle(phi).rotate_into(w, &mut buf);
        body.radial_at(&buf)
    };
    let mut reach: f64 = 0.0;
    for k in 0..4096 {
        reach = reach.max(in_plane(2.0 * PI * k as f64 / 4096.0)?);
    }
    let half = 1.05 * reach;
    let cell = 2.0 * half / grid_n as f64;
    let count = (0..grid_n)
        .into_par_iter()
        .map(|i| {
            let s = -half + (i as f64 + 0.5) * cell;
            let mut buf = vec![0.0; w.len()];
            let mut hits = 0usize;
            for j in 0..grid_n {
                let t = -half + (j as f64 + 0.5) * cell;
                let r = s.hypot(t);
                if r == 0.0 {
                    hits += 1;
                    continue;
                }
                Phase::from_angle(t.atan2(s)).rotate_into(w, &mut buf);
                if r <= body.radial_at(&buf)? {
                    hits += 1;
                }
            }
            Ok(hits)
        })
        .collect::<Result<Vec<usize>>>()?
        .into_iter()
        .sum::<usize>();
    Ok(count as f64 * cell * cell)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstantReport {
    pub n: usize,
    pub block_dim: usize,
    /// `2 pi^{m/2} / Gamma(m/2)` for `m = 2n`.
    pub surface_gamma: f64,
    /// `2 n pi^n / n!`.
    pub surface_factorial: f64,
    pub surface_relative_error: f64,
    pub ball_functional: Estimate,
    pub ball_volume: f64,
    pub passed: bool,
}

/// Relative tolerance for the two surface-area routes.
pub const SURFACE_TOL: f64 = 1e-12;

/// Checks the sphere-to-Grassmannian constant and that the slice functional
/// of the unit ball equals its volume in `K^n`.
pub fn constant_check(n: usize, algebra: AlgebraKind, spec: &QuadratureSpec) -> Result<ConstantReport> {
    let layout = Layout::new(algebra, n)?;
    let surface_gamma = sphere_surface(2 * n);
    let surface_factorial = 2.0 * n as f64 * PI.powi(n as i32) / factorial(n);
    let surface_relative_error = (surface_gamma - surface_factorial).abs() / surface_factorial;

    let ball = StarBody::ball(layout, 1.0)?;
    let ball_volume = closed_form_volume(&ball).expect("ball has a closed form");
    let ball_functional = theorem1_functional(&ball, spec)?;
    let passed = surface_relative_error <= SURFACE_TOL && ball_functional.agrees_with(ball_volume, 3.0, SURFACE_TOL);
    Ok(ConstantReport {
        n,
        block_dim: algebra.block_dim(),
        surface_gamma,
        surface_factorial,
        surface_relative_error,
        ball_functional,
        ball_volume,
        passed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c2() -> Layout {
        Layout::complex(2).unwrap()
    }

    #[test]
    fn grid_oracle_ball_and_cube() {
        let e1 = Direction::axis(c2(), 0).unwrap();
        let ball = StarBody::ball(c2(), 1.0).unwrap();
        let a = slice_grid_oracle(&ball, &e1, 512).unwrap();
        assert!((a - PI).abs() / PI < 0.02, "{a}");
        let cube = StarBody::cube(c2(), 1.0).unwrap();
        let a = slice_grid_oracle(&cube, &e1, 512).unwrap();
        assert!((a - 4.0).abs() / 4.0 < 0.02, "{a}");
        assert!(slice_grid_oracle(&cube, &e1, 100).is_err());
    }

    #[test]
    fn rejection_ball() {
        let ball = StarBody::ball(c2(), 1.0).unwrap();
        let est = mc_volume_rejection(&ball, 100_000, 2).unwrap();
        assert!(est.agrees_with(PI * PI / 2.0, 3.0, 0.0), "{est:?}");
    }

    #[test]
    fn analytic_bounds_dominate_probes() {
        for layout in [c2(), Layout::quaternion(2).unwrap()] {
            for (name, body) in crate::catalog::standard_bodies(layout).unwrap() {
                let bound = body.radial_bound().unwrap();
                let probed = probed_max_radial(&body, 5).unwrap();
                assert!(probed <= bound * (1.0 + 1e-12), "{name}: {probed} > {bound}");
            }
        }
        let cube = StarBody::cube(c2(), 1.0).unwrap();
        assert!((cube.radial_bound().unwrap() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn rejection_detects_underestimated_bound() {
        let ball = StarBody::ball(c2(), 1.0).unwrap();
        assert!(matches!(rejection_in_ball(&ball, 1000, 3, 0.5), Err(Error::Oracle(_))));
    }

    #[test]
    fn surfaces_by_factorial() {
        let spec = QuadratureSpec { sphere_samples: 100, ..QuadratureSpec::with_seed(0) };
        let r1 = constant_check(1, AlgebraKind::Complex, &spec).unwrap();
        assert!((r1.surface_factorial - 2.0 * PI).abs() < 1e-14);
        let r2 = constant_check(2, AlgebraKind::Complex, &spec).unwrap();
        assert!((r2.surface_factorial - 2.0 * PI * PI).abs() < 1e-13);
        assert!(r1.passed && r2.passed);
        let q = constant_check(2, AlgebraKind::Quaternion, &spec).unwrap();
        assert!((q.ball_volume - PI.powi(4) / 24.0).abs() < 1e-13);
        assert!(q.passed);
    }
}
