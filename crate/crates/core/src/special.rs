//! Gamma values at integer and half-integer points, and the ball and sphere
//! constants built from them.

use std::f64::consts::PI;

/// `Gamma(k / 2)` for `k >= 1`, by the exact recurrence from `Gamma(1) = 1`
/// and `Gamma(1/2) = sqrt(pi)`.
pub fn gamma_half(k: usize) -> f64 {
    assert!(k >= 1, "Gamma(k/2) needs k >= 1");
    let (mut value, mut arg) = if k.is_multiple_of(2) { (1.0, 1.0) } else { (PI.sqrt(), 0.5) };
    let target = k as f64 / 2.0;
    while arg < target {
        value *= arg;
        arg += 1.0;
    }
    value
}

pub fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// Surface area of `S^{m-1}`: `2 pi^{m/2} / Gamma(m/2)`.
pub fn sphere_surface(m: usize) -> f64 {
    2.0 * PI.powf(m as f64 / 2.0) / gamma_half(m)
}

/// Volume of the unit ball in `R^m`: `pi^{m/2} / Gamma(m/2 + 1)`.
pub fn unit_ball_volume(m: usize) -> f64 {
    PI.powf(m as f64 / 2.0) / gamma_half(m + 2)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn half_integer_gamma() {
        assert_eq!(gamma_half(2), 1.0);
        assert_eq!(gamma_half(4), 1.0);
        assert_eq!(gamma_half(10), 24.0);
        assert!((gamma_half(1) - PI.sqrt()).abs() < 1e-15);
        assert!((gamma_half(3) - PI.sqrt() / 2.0).abs() < 1e-15);
        assert!((gamma_half(7) - 15.0 * PI.sqrt() / 8.0).abs() < 1e-14);
    }

    #[test]
    fn low_dimensional_constants() {
        assert!((sphere_surface(2) - 2.0 * PI).abs() < 1e-14);
        assert!((sphere_surface(3) - 4.0 * PI).abs() < 1e-14);
        assert!((sphere_surface(4) - 2.0 * PI * PI).abs() < 1e-13);
        assert!((unit_ball_volume(2) - PI).abs() < 1e-15);
        assert!((unit_ball_volume(3) - 4.0 * PI / 3.0).abs() < 1e-14);
        assert!((unit_ball_volume(4) - PI * PI / 2.0).abs() < 1e-14);
        assert!((unit_ball_volume(8) - PI.powi(4) / 24.0).abs() < 1e-13);
    }

    #[test]
    fn surface_is_dimension_times_volume() {
        for m in 1..20 {
            let lhs = sphere_surface(m);
            let rhs = m as f64 * unit_ball_volume(m);
            assert!((lhs - rhs).abs() <= 1e-13 * rhs);
        }
    }
}
