use std::f64::consts::PI;

use proptest::prelude::*;

use circslice::algebra::euclidean_norm;
use circslice::functionals::{circularity_defect, circularize, slice_measure_with, volume_polar};
use circslice::report::{emit_body_spec, parse_body_spec};
use circslice::sampling::{estimate_mean, sample_sphere};
use circslice::{
    phase_rotate, AlgebraKind, Direction, Layout, Perturbation, Phase, PhaseRule, QuadratureSpec, StarBody,
};

fn layout_strategy() -> impl Strategy<Value = Layout> {
    prop_oneof![
        (1usize..=3).prop_map(|n| Layout::complex(n).unwrap()),
        (1usize..=2).prop_map(|n| Layout::quaternion(n).unwrap()),
    ]
}

fn raw_vector(m: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, m).prop_filter("nonzero", |v| euclidean_norm(v) > 1e-3)
}

fn direction_in(layout: Layout) -> impl Strategy<Value = Direction> {
    raw_vector(layout.dim()).prop_map(move |v| Direction::normalized(layout, v).unwrap())
}

fn phase_in(algebra: AlgebraKind) -> BoxedStrategy<Phase> {
    match algebra {
        AlgebraKind::Complex => (0.0..2.0 * PI).prop_map(Phase::from_angle).boxed(),
        AlgebraKind::Quaternion => {
            raw_vector(4).prop_map(|v| Phase::normalized(AlgebraKind::Quaternion, &v).unwrap()).boxed()
        }
    }
}

fn point() -> impl Strategy<Value = (Layout, Direction, Phase)> {
    layout_strategy().prop_flat_map(|layout| (Just(layout), direction_in(layout), phase_in(layout.algebra())))
}

/// Bodies that are circular by construction.
fn circular_body(layout: Layout) -> impl Strategy<Value = StarBody> {
    let n = layout.blocks();
    let leaf = prop_oneof![
        (0.5f64..2.0).prop_map(move |r| StarBody::ball(layout, r).unwrap()),
        prop::collection::vec(0.5f64..2.0, n).prop_map(move |r| StarBody::polydisc(layout, r).unwrap()),
        (-0.5f64..0.5).prop_map(move |e| {
            StarBody::perturbed(StarBody::ball(layout, 1.0).unwrap(), e, Perturbation::ModulusContrast).unwrap()
        }),
    ];
    (leaf.clone(), leaf, 0u8..3).prop_map(|(a, b, how)| match how {
        0 => a,
        1 => StarBody::intersection(a, b).unwrap(),
        _ => StarBody::union(a, b).unwrap(),
    })
}

/// Arbitrary valid bodies, mostly not circular.
fn any_body(layout: Layout) -> impl Strategy<Value = StarBody> {
    let m = layout.dim();
    let leaf = prop_oneof![
        (0.5f64..2.0).prop_map(move |h| StarBody::cube(layout, h).unwrap()),
        (1.0f64..6.0, 0.5f64..2.0).prop_map(move |(p, r)| StarBody::lp_ball(layout, p, r).unwrap()),
        (-0.6f64..0.6, prop::sample::select(Perturbation::ALL.to_vec()))
            .prop_map(move |(e, f)| { StarBody::perturbed(StarBody::ball(layout, 1.0).unwrap(), e, f).unwrap() }),
        circular_body(layout),
    ];
    let shear = prop::collection::vec(-0.3f64..0.3, m * m);
    (leaf.clone(), leaf, shear, 0u8..4).prop_map(move |(a, b, s, how)| match how {
        0 => a,
        1 => StarBody::intersection(a, b).unwrap(),
        2 => StarBody::union(a, b).unwrap(),
        _ => {
            let rows: Vec<Vec<f64>> =
                (0..m).map(|i| (0..m).map(|j| s[i * m + j] + if i == j { 1.0 } else { 0.0 }).collect()).collect();
            StarBody::linear_image(&rows, a).unwrap()
        }
    })
}

fn small_spec(seed: u64) -> QuadratureSpec {
    QuadratureSpec { sphere_samples: 2_000, phase_samples: 64, ..QuadratureSpec::with_seed(seed) }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

proptest! {
    #[test]
    fn phase_rotation_is_an_isometry((_, w, q) in point()) {
        let r = phase_rotate(&w, &q).unwrap();
        prop_assert!((euclidean_norm(r.coords()) - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn complex_phases_form_a_group(
        w in direction_in(Layout::complex(3).unwrap()),
        a in 0.0..2.0 * PI,
        b in 0.0..2.0 * PI,
    ) {
        let twice = phase_rotate(&phase_rotate(&w, &Phase::from_angle(a)).unwrap(), &Phase::from_angle(b)).unwrap();
        let once = phase_rotate(&w, &Phase::from_angle(a + b)).unwrap();
        for (x, y) in twice.coords().iter().zip(once.coords()) {
            prop_assert!((x - y).abs() <= 1e-12);
        }
    }

    #[test]
    fn quaternion_composition_matches_sequential_rotation(
        w in direction_in(Layout::quaternion(2).unwrap()),
        p in phase_in(AlgebraKind::Quaternion),
        q in phase_in(AlgebraKind::Quaternion),
    ) {
        // Left action: q (p w) = (q p) w.
        let twice = phase_rotate(&phase_rotate(&w, &p).unwrap(), &q).unwrap();
        let once = phase_rotate(&w, &q.compose(&p).unwrap()).unwrap();
        for (x, y) in twice.coords().iter().zip(once.coords()) {
            prop_assert!((x - y).abs() <= 1e-12);
        }
    }

    #[test]
    fn circular_bodies_are_phase_invariant(
        (body, w, q) in layout_strategy().prop_flat_map(|l| (circular_body(l), direction_in(l), phase_in(l.algebra())))
    ) {
        prop_assert!(body.known_circular());
        let a = body.radial(&w).unwrap();
        let b = body.radial(&phase_rotate(&w, &q).unwrap()).unwrap();
        prop_assert!(rel(b, a) <= 1e-9, "{a} vs {b}");
    }

    #[test]
    fn combinators_are_min_and_max(
        (a, b, w) in layout_strategy().prop_flat_map(|l| (any_body(l), any_body(l), direction_in(l)))
    ) {
        let (ra, rb) = (a.radial(&w).unwrap(), b.radial(&w).unwrap());
        let i = StarBody::intersection(a.clone(), b.clone()).unwrap();
        let u = StarBody::union(a, b).unwrap();
        prop_assert_eq!(i.radial(&w).unwrap(), ra.min(rb));
        prop_assert_eq!(u.radial(&w).unwrap(), ra.max(rb));
    }

    #[test]
    fn scalar_images_scale_the_radial(
        (body, w) in layout_strategy().prop_flat_map(|l| (any_body(l), direction_in(l))),
        c in 0.25f64..4.0,
    ) {
        let m = body.layout().dim();
        let rows: Vec<Vec<f64>> = (0..m).map(|i| (0..m).map(|j| if i == j { c } else { 0.0 }).collect()).collect();
        let image = StarBody::linear_image(&rows, body.clone()).unwrap();
        prop_assert!(rel(image.radial(&w).unwrap(), c * body.radial(&w).unwrap()) <= 1e-15);
    }

    #[test]
    fn body_specs_round_trip(
        (body, probes) in layout_strategy().prop_flat_map(|l| (any_body(l), prop::collection::vec(direction_in(l), 16)))
    ) {
        let text = emit_body_spec(&body, Some("roundtrip")).unwrap();
        let parsed = parse_body_spec(&text).unwrap();
        prop_assert_eq!(parsed.label.as_str(), "roundtrip");
        prop_assert_eq!(parsed.body.layout(), body.layout());
        prop_assert_eq!(parsed.body.known_circular(), body.known_circular());
        for w in &probes {
            prop_assert!(rel(parsed.body.radial(w).unwrap(), body.radial(w).unwrap()) <= 1e-15);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn jensen_gaps_are_never_negative(
        body in layout_strategy().prop_flat_map(any_body),
        seed in any::<u64>(),
    ) {
        let r = circularity_defect(&body, &small_spec(seed)).unwrap();
        prop_assert!(r.min_relative_gap >= -1e-12, "{}", r.min_relative_gap);
        prop_assert!(r.defect.value >= -1e-12 * r.volume.value, "{:?}", r.defect);
    }

    #[test]
    fn volume_is_monotone_on_shared_samples(
        (a, b) in layout_strategy().prop_flat_map(|l| (any_body(l), any_body(l))),
        seed in any::<u64>(),
    ) {
        let inner = StarBody::intersection(a.clone(), b).unwrap();
        let spec = small_spec(seed);
        prop_assert!(volume_polar(&inner, &spec).unwrap().value <= volume_polar(&a, &spec).unwrap().value);
    }

    #[test]
    fn circularization_preserves_complex_slices(
        (body, w) in (1usize..=3).prop_flat_map(|n| {
            let l = Layout::complex(n).unwrap();
            (any_body(l), direction_in(l))
        }),
        nodes in (2usize..=40).prop_map(|k| 2 * k),
    ) {
        let rule = PhaseRule::circle(nodes).unwrap();
        let circ = circularize(&body, &rule).unwrap();
        prop_assert!(circ.known_circular());
        let a = slice_measure_with(&body, w.coords(), &rule).unwrap();
        let b = slice_measure_with(&circ, w.coords(), &rule).unwrap();
        prop_assert!(rel(b, a) <= 1e-12, "{a} vs {b}");
    }

    #[test]
    fn circular_slices_are_discs(
        (body, w) in (1usize..=3).prop_flat_map(|n| {
            let l = Layout::complex(n).unwrap();
            (circular_body(l), direction_in(l))
        }),
    ) {
        let rule = PhaseRule::circle(64).unwrap();
        let rho = body.radial(&w).unwrap();
        let slice = slice_measure_with(&body, w.coords(), &rule).unwrap();
        prop_assert!(rel(slice, PI * rho * rho) <= 1e-9);
    }

    #[test]
    fn means_do_not_depend_on_thread_count(
        values in prop::collection::vec(-1e3f64..1e3, 1..5000),
        chunk in 1usize..600,
    ) {
        let serial = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap()
            .install(|| estimate_mean(&values, chunk).unwrap());
        let parallel = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap()
            .install(|| estimate_mean(&values, chunk).unwrap());
        prop_assert_eq!(serial.value.to_bits(), parallel.value.to_bits());
        prop_assert_eq!(serial.std_error.to_bits(), parallel.std_error.to_bits());
        let naive = values.iter().sum::<f64>() / values.len() as f64;
        prop_assert!((serial.value - naive).abs() <= 1e-9 * (1.0 + naive.abs()));
    }

    #[test]
    fn sphere_samples_are_unit_and_reproducible(m in 2usize..12, count in 1usize..3000, seed in any::<u64>()) {
        let a = sample_sphere(m, count, seed).unwrap();
        let b = sample_sphere(m, count, seed).unwrap();
        prop_assert_eq!(a.len(), count);
        for (x, y) in a.iter().zip(b.iter()) {
            prop_assert!((euclidean_norm(x) - 1.0).abs() <= 1e-12);
            prop_assert!(x.iter().zip(y).all(|(p, q)| p.to_bits() == q.to_bits()));
        }
    }
}
