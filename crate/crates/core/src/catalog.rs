//! Named test bodies used by the self-check and the test suites.

use crate::algebra::{AlgebraKind, Layout};
use crate::body::{Perturbation, StarBody};
use crate::error::Result;

/// A phase-commuting ellipsoid. For complex blocks the quadratic form is the
/// realification of a Hermitian matrix with a coupling between the first two
/// blocks; for quaternionic blocks it is a scalar per block.
pub fn hermitian_ellipsoid(layout: Layout) -> Result<StarBody> {
    let m = layout.dim();
    let d = layout.block_dim();
    let mut rows = vec![vec![0.0; m]; m];
    for (i, row) in rows.iter_mut().enumerate() {
        row[i] = 1.0 + (i / d) as f64;
    }
    if layout.algebra() == AlgebraKind::Complex && layout.blocks() >= 2 {
        // h_{12} = 0.5 + 0.3 i, realified on (x1, y1, x2, y2).
        let (a, b) = (0.5, 0.3);
        let coupling = [[a, -b], [b, a]];
        for r in 0..2 {
            for c in 0..2 {
                rows[r][2 + c] = coupling[c][r];
                rows[2 + r][c] = coupling[r][c];
            }
        }
    }
    StarBody::ellipsoid(layout, &rows)
}

/// `rho = (1 + eps (w_1^2 - w_2^2))` on the unit ball.
pub fn perturbed_ball(layout: Layout, amplitude: f64) -> Result<StarBody> {
    StarBody::perturbed(StarBody::ball(layout, 1.0)?, amplitude, Perturbation::BlockQuadrupole)
}

/// Bodies with a wide spread of shapes and circularity, all valid in `layout`.
pub fn standard_bodies(layout: Layout) -> Result<Vec<(String, StarBody)>> {
    let n = layout.blocks();
    let m = layout.dim();
    let mut shear = vec![vec![0.0; m]; m];
    for (i, row) in shear.iter_mut().enumerate() {
        row[i] = 1.0;
        if i + 1 < m {
            row[i + 1] = 0.4;
        }
    }
    let uneven: Vec<f64> = (0..n).map(|i| 1.0 + i as f64).collect();
    Ok(vec![
        ("ball".into(), StarBody::ball(layout, 1.0)?),
        ("polydisc".into(), StarBody::polydisc(layout, vec![1.0; n])?),
        ("polydisc_uneven".into(), StarBody::polydisc(layout, uneven)?),
        ("hermitian_ellipsoid".into(), hermitian_ellipsoid(layout)?),
        ("cube".into(), StarBody::cube(layout, 1.0)?),
        ("cross_polytope".into(), StarBody::lp_ball(layout, 1.0, 1.0)?),
        ("l3_ball".into(), StarBody::lp_ball(layout, 3.0, 1.0)?),
        ("perturbed_ball".into(), perturbed_ball(layout, 0.1)?),
        ("quartic_ball".into(), StarBody::perturbed(StarBody::ball(layout, 1.0)?, 0.2, Perturbation::Quartic)?),
        ("rounded_cube".into(), StarBody::intersection(StarBody::cube(layout, 1.0)?, StarBody::ball(layout, 1.3)?)?),
        (
            "ball_or_polydisc".into(),
            StarBody::union(StarBody::ball(layout, 1.1)?, StarBody::polydisc(layout, vec![0.9; n])?)?,
        ),
        ("sheared_ball".into(), StarBody::linear_image(&shear, StarBody::ball(layout, 1.0)?)?),
    ])
}
