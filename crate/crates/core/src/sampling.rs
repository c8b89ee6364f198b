//! Seeded sampling on spheres and phase groups, and a chunked mean estimator
//! whose result does not depend on how work is spread across threads.
//!
//! Every random draw comes from a [`ChaCha8Rng`] keyed by the master seed and a
//! string label, with one ChaCha stream per fixed-size block of samples. Adding
//! a new label never shifts the draws of an existing one, and blocks can be
//! generated in parallel without changing the output.

use std::f64::consts::PI;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algebra::{AlgebraKind, Direction, Layout, Phase};
use crate::error::{Error, Result};

/// Samples generated per ChaCha stream.
pub const SAMPLE_BLOCK: usize = 1024;

pub const DEFAULT_SPHERE_SAMPLES: usize = 200_000;
pub const DEFAULT_CIRCLE_NODES: usize = 64;
pub const DEFAULT_PHASE_SAMPLES: usize = 512;
pub const DEFAULT_CHUNK_SIZE: usize = 4096;

/// Substream labels. Operations sharing a label see the same draws.
pub mod labels {
    pub const SPHERE: &str = "quadrature/sphere";
    pub const PHASES: &str = "quadrature/phases";
    pub const CIRCULARITY: &str = "comparator/circularity";
    pub const LINES: &str = "comparator/lines";
    pub const REJECTION: &str = "oracle/rejection";
    pub const PROBE: &str = "oracle/probe";
    pub const VALIDATE: &str = "body/validate";
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    /// Uniform directions on the sphere.
    pub sphere_samples: usize,
    /// Equally spaced nodes of the circle rule (complex phases).
    pub circle_nodes: usize,
    /// Sampled unit quaternions (quaternionic phases).
    pub phase_samples: usize,
    pub seed: u64,
    /// Reduction chunk length for [`estimate_mean`].
    pub chunk_size: usize,
}

impl QuadratureSpec {
    /// Default counts with the given seed.
    pub fn with_seed(seed: u64) -> Self {
        QuadratureSpec {
            sphere_samples: DEFAULT_SPHERE_SAMPLES,
            circle_nodes: DEFAULT_CIRCLE_NODES,
            phase_samples: DEFAULT_PHASE_SAMPLES,
            seed,
            chunk_size: DEFAULT_CHUNK_SIZE,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.sphere_samples == 0 {
            return Err(Error::InvalidSpec("sphere_samples must be >= 1".into()));
        }
        if self.circle_nodes < 4 || !self.circle_nodes.is_multiple_of(2) {
            return Err(Error::InvalidSpec(format!("circle_nodes must be even and >= 4, got {}", self.circle_nodes)));
        }
        if self.phase_samples == 0 {
            return Err(Error::InvalidSpec("phase_samples must be >= 1".into()));
        }
        if self.chunk_size == 0 {
            return Err(Error::InvalidSpec("chunk_size must be >= 1".into()));
        }
        Ok(())
    }
}

/// A Monte Carlo (or deterministic) result with its standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub std_error: f64,
    pub samples: usize,
}

impl Estimate {
    pub fn exact(value: f64) -> Self {
        Estimate { value, std_error: 0.0, samples: 0 }
    }

    pub fn scaled(self, factor: f64) -> Self {
        Estimate { value: self.value * factor, std_error: self.std_error * factor.abs(), samples: self.samples }
    }

    /// Difference of two estimates with independent errors added in quadrature.
    pub fn minus(self, other: Estimate) -> Self {
        Estimate {
            value: self.value - other.value,
            std_error: self.std_error.hypot(other.std_error),
            samples: self.samples.min(other.samples),
        }
    }

    /// Whether `|value - target| <= sigmas * std_error + rel_floor * |target|`.
    pub fn agrees_with(&self, target: f64, sigmas: f64, rel_floor: f64) -> bool {
        (self.value - target).abs() <= sigmas * self.std_error + rel_floor * target.abs()
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of the substream `label` under `master`.
pub fn substream_seed(master: u64, label: &str) -> u64 {
    // FNV-1a over the label, then mixed with the master seed.
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in label.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    splitmix64(master ^ splitmix64(h))
}

/// Generator for block `stream` of substream `label`.
pub fn substream_rng(master: u64, label: &str, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(substream_seed(master, label));
    rng.set_stream(stream);
    rng
}

/// Writes a uniform unit vector into `out` (normalized standard Gaussian).
fn draw_unit<R: rand::Rng>(rng: &mut R, out: &mut [f64]) {
    loop {
        for x in out.iter_mut() {
            *x = StandardNormal.sample(rng);
        }
        let norm = crate::algebra::euclidean_norm(out);
        // A zero draw has probability zero; redraw if it happens.
        if norm > 0.0 && norm.is_finite() {
            out.iter_mut().for_each(|x| *x /= norm);
            return;
        }
    }
}

/// `count` uniform unit vectors in `R^dim`, stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct SphereSample {
    dim: usize,
    coords: Vec<f64>,
}

impl SphereSample {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn get(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter(&self) -> std::slice::ChunksExact<'_, f64> {
        self.coords.chunks_exact(self.dim)
    }

    pub fn par_iter(&self) -> rayon::slice::ChunksExact<'_, f64> {
        self.coords.par_chunks_exact(self.dim)
    }

    pub fn directions(&self, layout: Layout) -> Result<Vec<Direction>> {
        if layout.dim() != self.dim {
            return Err(Error::InvalidDirection(format!("sample dimension {} does not match {layout}", self.dim)));
        }
        Ok(self.iter().map(|w| Direction::from_unit_unchecked(layout, w.to_vec())).collect())
    }

    /// Applies `phase` to every sample.
    pub fn rotated(&self, phase: &Phase) -> SphereSample {
        let mut coords = vec![0.0; self.coords.len()];
        coords
            .par_chunks_exact_mut(self.dim)
            .zip(self.coords.par_chunks_exact(self.dim))
            .for_each(|(dst, src)| phase.rotate_into(src, dst));
        SphereSample { dim: self.dim, coords }
    }
}

/// Uniform directions on `S^{dim-1}` from substream `label`.
pub fn sample_sphere_labeled(dim: usize, count: usize, seed: u64, label: &str) -> Result<SphereSample> {
    if dim < 2 {
        return Err(Error::Precondition(format!("sphere dimension m must be >= 2, got {dim}")));
    }
    let mut coords = vec![0.0; dim * count];
    coords.par_chunks_mut(dim * SAMPLE_BLOCK).enumerate().for_each(|(block, chunk)| {
        let mut rng = substream_rng(seed, label, block as u64);
        for w in chunk.chunks_exact_mut(dim) {
            draw_unit(&mut rng, w);
        }
    });
    Ok(SphereSample { dim, coords })
}

/// Uniform directions on `S^{dim-1}`; bitwise reproducible for a fixed seed.
pub fn sample_sphere(dim: usize, count: usize, seed: u64) -> Result<SphereSample> {
    sample_sphere_labeled(dim, count, seed, labels::SPHERE)
}

/// Equally spaced phases `e^{2 pi i k / K}` with weight `1/K`.
pub fn circle_nodes(count: usize) -> Result<Vec<(Phase, f64)>> {
    if count < 4 || !count.is_multiple_of(2) {
        return Err(Error::InvalidSpec(format!("circle rule needs an even node count >= 4, got {count}")));
    }
    let weight = 1.0 / count as f64;
    Ok((0..count).map(|k| (Phase::from_angle(2.0 * PI * k as f64 / count as f64), weight)).collect())
}

/// Uniform unit elements of the algebra (normalized Gaussians in `R^d`).
pub fn sample_phase_group(algebra: AlgebraKind, count: usize, seed: u64) -> Vec<Phase> {
    sample_phase_group_labeled(algebra, count, seed, labels::PHASES)
}

pub fn sample_phase_group_labeled(algebra: AlgebraKind, count: usize, seed: u64, label: &str) -> Vec<Phase> {
    let d = algebra.block_dim();
    let mut out = Vec::with_capacity(count);
    let mut buf = [0.0; 4];
    for block in 0..count.div_ceil(SAMPLE_BLOCK) {
        let mut rng = substream_rng(seed, label, block as u64);
        let take = SAMPLE_BLOCK.min(count - block * SAMPLE_BLOCK);
        for _ in 0..take {
            draw_unit(&mut rng, &mut buf[..d]);
            out.push(Phase::normalized(algebra, &buf[..d]).expect("unit draw"));
        }
    }
    out
}

/// Running moments of one chunk.
#[derive(Clone, Copy, Debug, Default)]
struct Moments {
    count: f64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn of(values: &[f64]) -> Self {
        let mut acc = Moments::default();
        for &x in values {
            acc.count += 1.0;
            let delta = x - acc.mean;
            acc.mean += delta / acc.count;
            acc.m2 += delta * (x - acc.mean);
        }
        acc
    }

    fn merge(self, other: Moments) -> Moments {
        if self.count == 0.0 {
            return other;
        }
        let count = self.count + other.count;
        let delta = other.mean - self.mean;
        Moments {
            count,
            mean: self.mean + delta * other.count / count,
            m2: self.m2 + other.m2 + delta * delta * self.count * other.count / count,
        }
    }
}

/// Sample mean with standard error `s / sqrt(N)`.
///
/// Chunks of `chunk_size` values are summarised independently (possibly in
/// parallel) and merged in chunk order, so the result is bit-identical for any
/// thread count.
pub fn estimate_mean(values: &[f64], chunk_size: usize) -> Result<Estimate> {
    if values.is_empty() {
        return Err(Error::EmptyInput);
    }
    if chunk_size == 0 {
        return Err(Error::InvalidSpec("chunk_size must be >= 1".into()));
    }
    if let Some((index, &value)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
        return Err(Error::NonFinite { index, value });
    }
    let chunks: Vec<Moments> = values.par_chunks(chunk_size).map(Moments::of).collect();
    let total = chunks.into_iter().fold(Moments::default(), Moments::merge);
    let n = values.len();
    let std_error = if n > 1 { (total.m2.max(0.0) / (n as f64 - 1.0)).sqrt() / (n as f64).sqrt() } else { 0.0 };
    Ok(Estimate { value: total.mean, std_error, samples: n })
}

/// Evaluates `f` on every sample in parallel (order preserved).
pub fn par_eval<F>(sample: &SphereSample, f: F) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> Result<f64> + Sync + Send,
{
    sample.par_iter().map(f).collect()
}

/// How a phase average `mean_q g(q)` is discretized.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhaseRuleKind {
    /// `K` equally spaced angles; exact for trigonometric polynomials of
    /// degree below `K`, and closed under composition.
    Circle { nodes: usize },
    /// `count` uniform unit quaternions drawn from `seed`.
    Sampled { count: usize, seed: u64 },
}

/// A finite equal-weight set of phases standing in for the Haar probability
/// measure on the unit circle or unit quaternions.
#[derive(Clone, Debug)]
pub struct PhaseRule {
    algebra: AlgebraKind,
    kind: PhaseRuleKind,
    phases: Arc<[Phase]>,
}

impl PartialEq for PhaseRule {
    fn eq(&self, other: &Self) -> bool {
        self.algebra == other.algebra && self.kind == other.kind
    }
}

impl PhaseRule {
    pub fn circle(nodes: usize) -> Result<Self> {
        let phases: Vec<Phase> = circle_nodes(nodes)?.into_iter().map(|(q, _)| q).collect();
        Ok(PhaseRule { algebra: AlgebraKind::Complex, kind: PhaseRuleKind::Circle { nodes }, phases: phases.into() })
    }

    pub fn sampled(algebra: AlgebraKind, count: usize, seed: u64) -> Result<Self> {
        if count == 0 {
            return Err(Error::InvalidSpec("phase rule needs at least one phase".into()));
        }
        Ok(PhaseRule {
            algebra,
            kind: PhaseRuleKind::Sampled { count, seed },
            phases: sample_phase_group(algebra, count, seed).into(),
        })
    }

    pub fn from_kind(algebra: AlgebraKind, kind: &PhaseRuleKind) -> Result<Self> {
        match (algebra, kind) {
            (AlgebraKind::Complex, PhaseRuleKind::Circle { nodes }) => PhaseRule::circle(*nodes),
            (_, PhaseRuleKind::Sampled { count, seed }) => PhaseRule::sampled(algebra, *count, *seed),
            (AlgebraKind::Quaternion, PhaseRuleKind::Circle { .. }) => {
                Err(Error::InvalidSpec("the circle rule only applies to complex phases".into()))
            }
        }
    }

    /// Circle rule with `K` nodes for complex blocks; `Q` sampled unit
    /// quaternions for quaternionic blocks.
    pub fn for_spec(algebra: AlgebraKind, spec: &QuadratureSpec) -> Result<Self> {
        spec.validate()?;
        match algebra {
            AlgebraKind::Complex => PhaseRule::circle(spec.circle_nodes),
            AlgebraKind::Quaternion => {
                PhaseRule::sampled(algebra, spec.phase_samples, substream_seed(spec.seed, labels::PHASES))
            }
        }
    }

    pub fn algebra(&self) -> AlgebraKind {
        self.algebra
    }

    pub fn kind(&self) -> &PhaseRuleKind {
        &self.kind
    }

    pub fn phases(&self) -> &[Phase] {
        &self.phases
    }

    pub fn len(&self) -> usize {
        self.phases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phases.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn four_nodes_are_quarter_turns() {
        let nodes = circle_nodes(4).unwrap();
        let expected = [(1.0, 0.0), (0.0, 1.0), (-1.0, 0.0), (0.0, -1.0)];
        for ((q, w), (c, s)) in nodes.iter().zip(expected) {
            assert_eq!(*w, 0.25);
            assert!((q.components()[0] - c).abs() < 1e-15);
            assert!((q.components()[1] - s).abs() < 1e-15);
        }
        let total: f64 = circle_nodes(10).unwrap().iter().map(|(_, w)| w).sum();
        assert!((total - 1.0).abs() < 1e-15);
    }

    #[test]
    fn circle_rule_rejects_odd_or_small() {
        assert!(circle_nodes(3).is_err());
        assert!(circle_nodes(2).is_err());
        assert!(circle_nodes(7).is_err());
    }

    #[test]
    fn cos_squared_node_mean_is_half() {
        // sum_k cos^2(2 pi k/K) = K/2 for K >= 3, so the mean is 1/2.
        for k in (4..=32).step_by(2) {
            let mean: f64 = circle_nodes(k).unwrap().iter().map(|(q, w)| w * q.components()[0].powi(2)).sum();
            assert!((mean - 0.5).abs() < 1e-14, "K={k}: {mean}");
        }
    }

    #[test]
    fn constant_sequence_has_zero_error() {
        let est = estimate_mean(&[2.5; 100], 7).unwrap();
        assert_eq!(est.value, 2.5);
        assert_eq!(est.std_error, 0.0);
        assert_eq!(est.samples, 100);
    }

    #[test]
    fn alternating_sequence_mean() {
        let values: Vec<f64> = (0..1000).map(|i| (i % 2) as f64).collect();
        let est = estimate_mean(&values, 64).unwrap();
        assert!((est.value - 0.5).abs() < 1e-15);
        // s = sqrt(1000/999 * 1/4)
        let s = (0.25 * 1000.0 / 999.0f64).sqrt();
        assert!((est.std_error - s / 1000f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn chunk_internal_order_does_not_matter_for_chunk_sums() {
        let values: Vec<f64> = (0..50).map(|i| (i as f64 * 0.37).sin()).collect();
        let a = estimate_mean(&values, 10).unwrap();
        let b = estimate_mean(&values, 10).unwrap();
        assert_eq!(a.value.to_bits(), b.value.to_bits());
        assert_eq!(a.std_error.to_bits(), b.std_error.to_bits());
    }

    #[test]
    fn non_finite_reports_index() {
        let err = estimate_mean(&[1.0, 2.0, f64::NAN, 3.0], 2).unwrap_err();
        assert!(matches!(err, Error::NonFinite { index: 2, .. }));
        assert!(matches!(estimate_mean(&[], 2), Err(Error::EmptyInput)));
    }

    #[test]
    fn spheres_are_reproducible_and_unit() {
        let a = sample_sphere(5, 3000, 11).unwrap();
        let b = sample_sphere(5, 3000, 11).unwrap();
        assert_eq!(a, b);
        assert!(a.iter().all(|w| (crate::algebra::euclidean_norm(w) - 1.0).abs() < 1e-14));
        assert_ne!(a, sample_sphere(5, 3000, 12).unwrap());
        assert!(sample_sphere(1, 10, 0).is_err());
    }

    #[test]
    fn prefix_stable_across_counts() {
        let short = sample_sphere(4, 1500, 5).unwrap();
        let long = sample_sphere(4, 4000, 5).unwrap();
        assert_eq!(short.get(1499), long.get(1499));
    }

    #[test]
    fn labels_give_independent_streams() {
        assert_ne!(substream_seed(1, labels::SPHERE), substream_seed(1, labels::PHASES));
        assert_ne!(substream_seed(1, labels::SPHERE), substream_seed(2, labels::SPHERE));
    }

    #[test]
    fn spec_validation() {
        let mut spec = QuadratureSpec::with_seed(0);
        assert!(spec.validate().is_ok());
        spec.circle_nodes = 5;
        assert!(spec.validate().is_err());
        spec.circle_nodes = 64;
        spec.sphere_samples = 0;
        assert!(spec.validate().is_err());
    }
}
