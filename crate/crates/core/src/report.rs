//! Body-spec files, command dispatch, and report rendering.
//!
//! A body-spec file is a JSON document:
//!
//! ```json
//! { "d": 2, "n": 2, "label": "cube", "body": { "kind": "lp_ball", "p": "inf", "r": 1.0 } }
//! ```
//!
//! See `docs/body-spec.md` for the full schema.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::algebra::{AlgebraKind, Direction, Layout};
use crate::body::{validate_body, LpExponent, Perturbation, Shape, StarBody};
use crate::comparator::{bp_compare, circularity_test, necessity_demo};
use crate::error::{Error, Result};
use crate::functionals::{circularity_defect, closed_form_volume, slice_measure, theorem1_functional, volume_polar};
use crate::oracle::{constant_check, mc_volume_rejection, slice_grid_oracle};
use crate::sampling::{PhaseRule, PhaseRuleKind, QuadratureSpec};

/// Probes used to validate parsed bodies.
pub const VALIDATION_PROBES: usize = 2000;
/// Fixed seed for validating parsed bodies, so parsing is deterministic.
pub const VALIDATION_SEED: u64 = 0x5eed;

/// The `p` field of an `lp_ball`: a number, or the string `"inf"`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PSpec {
    Finite(f64),
    Named(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BodyNode {
    Ball { r: f64 },
    Ellipsoid { matrix: Vec<Vec<f64>> },
    Polydisc { radii: Vec<f64> },
    LpBall { p: PSpec, r: f64 },
    LinearImage { matrix: Vec<Vec<f64>>, of: Box<BodyNode> },
    Intersection { of: Vec<BodyNode> },
    Union { of: Vec<BodyNode> },
    RadialPerturbation { of: Box<BodyNode>, amplitude: f64, perturbation: Perturbation },
    Circularized { of: Box<BodyNode>, rule: PhaseRuleKind },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BodySpec {
    pub d: usize,
    pub n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    pub body: BodyNode,
}

#[derive(Clone, Debug)]
pub struct ParsedBody {
    pub label: String,
    pub body: StarBody,
}

fn at(path: &str, err: Error) -> Error {
    match err {
        Error::InvalidField { .. } => err,
        other => Error::InvalidField { path: path.to_string(), source: Box::new(other) },
    }
}

fn build(node: &BodyNode, layout: Layout, path: &str) -> Result<StarBody> {
    let field = |name: &str| format!("{path}.{name}");
    match node {
        BodyNode::Ball { r } => StarBody::ball(layout, *r).map_err(|e| at(&field("r"), e)),
        BodyNode::Ellipsoid { matrix } => StarBody::ellipsoid(layout, matrix).map_err(|e| at(&field("matrix"), e)),
        BodyNode::Polydisc { radii } => {
            if let Some(i) = radii.iter().position(|r| !(r.is_finite() && *r > 0.0)) {
                return Err(at(
                    &format!("{path}.radii[{i}]"),
                    Error::Precondition(format!("radius must be positive, got {}", radii[i])),
                ));
            }
            StarBody::polydisc(layout, radii.clone()).map_err(|e| at(&field("radii"), e))
        }
        BodyNode::LpBall { p, r } => {
            let p = match p {
                PSpec::Finite(p) => *p,
                PSpec::Named(s) if s == "inf" || s == "infinity" => f64::INFINITY,
                PSpec::Named(s) => return Err(at(&field("p"), Error::Precondition(format!("unknown exponent {s:?}")))),
            };
            LpExponent::new(p).map_err(|e| at(&field("p"), e))?;
            StarBody::lp_ball(layout, p, *r).map_err(|e| at(&field("r"), e))
        }
        BodyNode::LinearImage { matrix, of } => {
            let inner = build(of, layout, &field("of"))?;
            StarBody::linear_image(matrix, inner).map_err(|e| at(&field("matrix"), e))
        }
        BodyNode::Intersection { of } | BodyNode::Union { of } => {
            if of.is_empty() {
                return Err(at(&field("of"), Error::Precondition("needs at least one body".into())));
            }
            let mut parts = of.iter().enumerate().map(|(i, child)| build(child, layout, &format!("{path}.of[{i}]")));
            let first = parts.next().expect("nonempty")?;
            parts.try_fold(first, |acc, next| {
                let next = next?;
                if matches!(node, BodyNode::Intersection { .. }) {
                    StarBody::intersection(acc, next)
                } else {
                    StarBody::union(acc, next)
                }
            })
        }
        BodyNode::RadialPerturbation { of, amplitude, perturbation } => {
            let inner = build(of, layout, &field("of"))?;
            StarBody::perturbed(inner, *amplitude, *perturbation).map_err(|e| at(&field("amplitude"), e))
        }
        BodyNode::Circularized { of, rule } => {
            let inner = build(of, layout, &field("of"))?;
            let rule = PhaseRule::from_kind(layout.algebra(), rule).map_err(|e| at(&field("rule"), e))?;
            StarBody::circularized(inner, rule).map_err(|e| at(&field("rule"), e))
        }
    }
}

/// Parses and validates a body-spec document.
pub fn parse_body_spec(text: &str) -> Result<ParsedBody> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let spec: BodySpec = serde_path_to_error::deserialize(de).map_err(|e| {
        let inner = e.inner();
        Error::Parse { path: e.path().to_string(), message: inner.to_string() }
    })?;
    body_from_spec(&spec)
}

pub fn body_from_spec(spec: &BodySpec) -> Result<ParsedBody> {
    let algebra = AlgebraKind::from_block_dim(spec.d).map_err(|e| at("d", e))?;
    let layout = Layout::new(algebra, spec.n).map_err(|e| at("n", e))?;
    let body = build(&spec.body, layout, "body")?;
    validate_body(&body, VALIDATION_PROBES, VALIDATION_SEED)?.into_result()?;
    Ok(ParsedBody { label: spec.label.clone().unwrap_or_else(|| "body".into()), body })
}

fn matrix_rows(m: &nalgebra::DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect()).collect()
}

fn node_of(body: &StarBody) -> Result<BodyNode> {
    Ok(match body.shape() {
        Shape::Ball { radius } => BodyNode::Ball { r: *radius },
        Shape::Ellipsoid { matrix } => BodyNode::Ellipsoid { matrix: matrix_rows(matrix) },
        Shape::Polydisc { radii } => BodyNode::Polydisc { radii: radii.clone() },
        Shape::LpBall { p, radius } => BodyNode::LpBall {
            p: match p {
                LpExponent::Infinity => PSpec::Named("inf".into()),
                LpExponent::Finite(p) => PSpec::Finite(*p),
            },
            r: *radius,
        },
        Shape::LinearImage { map, inner, .. } => {
            BodyNode::LinearImage { matrix: matrix_rows(map), of: Box::new(node_of(inner)?) }
        }
        Shape::Intersection(a, b) => BodyNode::Intersection { of: vec![node_of(a)?, node_of(b)?] },
        Shape::Union(a, b) => BodyNode::Union { of: vec![node_of(a)?, node_of(b)?] },
        Shape::RadialPerturbation { inner, amplitude, perturbation } => BodyNode::RadialPerturbation {
            of: Box::new(node_of(inner)?),
            amplitude: *amplitude,
            perturbation: *perturbation,
        },
        Shape::Circularized { inner, rule } => {
            BodyNode::Circularized { of: Box::new(node_of(inner)?), rule: rule.kind().clone() }
        }
        Shape::Custom(_) => return Err(Error::Unsupported("custom radial functions cannot be serialized".into())),
    })
}

pub fn spec_of(body: &StarBody, label: Option<&str>) -> Result<BodySpec> {
    let layout = body.layout();
    Ok(BodySpec { d: layout.block_dim(), n: layout.blocks(), label: label.map(str::to_string), body: node_of(body)? })
}

/// Serializes `body` as a pretty-printed body-spec document.
pub fn emit_body_spec(body: &StarBody, label: Option<&str>) -> Result<String> {
    Ok(serde_json::to_string_pretty(&spec_of(body, label)?).expect("body specs serialize"))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Volume,
    Slice,
    Functional,
    Defect,
    Circularity,
    Compare,
    DemoNecessity,
    Selfcheck,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Volume => "volume",
            Command::Slice => "slice",
            Command::Functional => "functional",
            Command::Defect => "defect",
            Command::Circularity => "circularity",
            Command::Compare => "compare",
            Command::DemoNecessity => "demo-necessity",
            Command::Selfcheck => "selfcheck",
        }
    }

    /// Number of body specs the command consumes.
    pub fn arity(self) -> std::ops::RangeInclusive<usize> {
        match self {
            Command::Compare => 2..=2,
            Command::Selfcheck => 0..=0,
            _ => 1..=usize::MAX,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Table,
    Csv,
    Json,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: Command,
    pub quadrature: QuadratureSpec,
    /// Relative tolerance for slice domination and circularity.
    pub tol: f64,
    pub format: Format,
    /// Line direction for `slice`; the first axis when absent.
    pub direction: Option<Vec<f64>>,
}

impl RunConfig {
    pub fn new(command: Command, seed: u64) -> Self {
        RunConfig {
            command,
            quadrature: QuadratureSpec::with_seed(seed),
            tol: crate::body::BODY_REL_TOL,
            format: Format::Table,
            direction: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.quadrature.validate()?;
        if !(self.tol.is_finite() && self.tol >= 0.0) {
            return Err(Error::InvalidSpec(format!("tolerance must be >= 0, got {}", self.tol)));
        }
        Ok(())
    }
}

/// One line of a report. CSV output has exactly these columns.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub label: String,
    pub command: String,
    pub n: usize,
    pub d: usize,
    pub value: f64,
    pub std_error: f64,
    pub samples: usize,
    pub seed: u64,
    pub verdict: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub rows: Vec<ReportRow>,
    /// Full structured results, emitted in JSON only.
    pub details: Vec<Value>,
    /// False when any check inside the command failed.
    pub passed: bool,
}

impl Report {
    fn push(&mut self, row: ReportRow, detail: Value) {
        self.rows.push(row);
        self.details.push(detail);
    }
}

pub const CSV_HEADER: [&str; 9] = ["label", "command", "n", "d", "value", "std_error", "samples", "seed", "verdict"];

/// `%.{digits}g`-style formatting: `digits` significant digits, trailing
/// zeros trimmed, scientific notation outside `[1e-5, 1e{digits})`.
pub fn format_significant(x: f64, digits: usize) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return if x.is_nan() {
            "nan".into()
        } else if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    let sci = format!("{:.*e}", digits - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    let trim = |s: &str| -> String {
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s.to_string()
        }
    };
    if exp < -5 || exp >= digits as i32 {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{}{:02}", trim(mantissa), sign, exp.abs())
    } else {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        trim(&format!("{:.*}", decimals, x))
    }
}

#[allow(clippy::too_many_arguments)]
fn row(
    label: &str,
    command: Command,
    layout: Layout,
    value: f64,
    std_error: f64,
    samples: usize,
    seed: u64,
    verdict: impl Into<String>,
) -> ReportRow {
    ReportRow {
        label: label.to_string(),
        command: command.name().to_string(),
        n: layout.blocks(),
        d: layout.block_dim(),
        value,
        std_error,
        samples,
        seed,
        verdict: verdict.into(),
    }
}

fn to_value<T: Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("report types serialize")
}

/// Runs one command on the given bodies.
pub fn run_command(config: &RunConfig, bodies: &[ParsedBody]) -> Result<Report> {
    config.validate()?;
    let cmd = config.command;
    if !cmd.arity().contains(&bodies.len()) {
        return Err(Error::Precondition(format!(
            "{} expects {:?} body specs, got {}",
            cmd.name(),
            cmd.arity(),
            bodies.len()
        )));
    }
    let spec = &config.quadrature;
    let seed = spec.seed;
    let mut report = Report { passed: true, ..Report::default() };
    match cmd {
        Command::Volume => {
            for pb in bodies {
                let layout = pb.body.layout();
                let est = volume_polar(&pb.body, spec)?;
                let exact = closed_form_volume(&pb.body);
                let verdict = match exact {
                    Some(v) if est.agrees_with(v, 3.0, 1e-12) => "matches closed form".to_string(),
                    Some(_) => "disagrees with closed form".to_string(),
                    None => "no closed form".to_string(),
                };
                report.push(
                    row(&pb.label, cmd, layout, est.value, est.std_error, est.samples, seed, verdict),
                    json!({ "label": pb.label, "volume": to_value(&est), "closed_form": exact }),
                );
            }
        }
        Command::Slice => {
            for pb in bodies {
                let layout = pb.body.layout();
                let omega = match &config.direction {
                    Some(coords) => Direction::normalized(layout, coords.clone())?,
                    None => Direction::axis(layout, 0)?,
                };
                let slice = slice_measure(&pb.body, &omega, spec)?;
                report.push(
                    row(&pb.label, cmd, layout, slice.value, 0.0, slice.phases, seed, "phase rule"),
                    json!({ "label": pb.label, "direction": omega.coords(), "slice": slice.value, "phases": slice.phases }),
                );
            }
        }
        Command::Functional => {
            for pb in bodies {
                let layout = pb.body.layout();
                let est = theorem1_functional(&pb.body, spec)?;
                report.push(
                    row(&pb.label, cmd, layout, est.value, est.std_error, est.samples, seed, "mean slice power"),
                    json!({ "label": pb.label, "functional": to_value(&est) }),
                );
            }
        }
        Command::Defect => {
            for pb in bodies {
                let layout = pb.body.layout();
                let defect = circularity_defect(&pb.body, spec)?;
                let verdict = defect.verdict().describe();
                report.push(
                    row(
                        &pb.label,
                        cmd,
                        layout,
                        defect.defect.value,
                        defect.defect.std_error,
                        defect.defect.samples,
                        seed,
                        verdict,
                    ),
                    json!({ "label": pb.label, "report": to_value(&defect) }),
                );
            }
        }
        Command::Circularity => {
            for pb in bodies {
                let layout = pb.body.layout();
                let test = circularity_test(&pb.body, spec, config.tol)?;
                let verdict = if test.circular { "circular within tol" } else { "witness found" };
                report.push(
                    row(&pb.label, cmd, layout, test.worst_gap, 0.0, test.directions * test.phases, seed, verdict),
                    json!({ "label": pb.label, "report": to_value(&test) }),
                );
            }
        }
        Command::Compare => {
            let (a, b) = (&bodies[0], &bodies[1]);
            let layout = a.body.layout();
            let cmp = bp_compare(&a.body, &b.body, spec, config.tol)?;
            let label = format!("{} vs {}", a.label, b.label);
            report.push(
                row(&label, cmd, layout, cmp.difference.value, cmp.difference.std_error, cmp.lines, seed, cmp.status.describe()),
                json!({ "label": label, "report": to_value(&cmp), "caveat": "domination checked on sampled lines only" }),
            );
        }
        Command::DemoNecessity => {
            for pb in bodies {
                let layout = pb.body.layout();
                let demo = necessity_demo(&pb.body, spec)?;
                let verdict = if demo.significance > 5.0 {
                    "circularized body has equal slices and smaller volume"
                } else {
                    "volume gap not significant"
                };
                report.push(
                    row(&pb.label, cmd, layout, demo.gap.value, demo.gap.std_error, demo.gap.samples, seed, verdict),
                    json!({ "label": pb.label, "report": to_value(&demo) }),
                );
            }
        }
        Command::Selfcheck => selfcheck(spec, &mut report)?,
    }
    Ok(report)
}

/// Constant checks plus oracle agreement on the standard catalog.
fn selfcheck(spec: &QuadratureSpec, report: &mut Report) -> Result<()> {
    let cmd = Command::Selfcheck;
    let cases = [
        (AlgebraKind::Complex, 1),
        (AlgebraKind::Complex, 2),
        (AlgebraKind::Complex, 3),
        (AlgebraKind::Quaternion, 1),
        (AlgebraKind::Quaternion, 2),
    ];
    for (algebra, n) in cases {
        let c = constant_check(n, algebra, spec)?;
        report.passed &= c.passed;
        let layout = Layout::new(algebra, n)?;
        report.push(
            row(
                &format!("constant n={n} d={}", algebra.block_dim()),
                cmd,
                layout,
                c.ball_functional.value,
                c.ball_functional.std_error,
                c.ball_functional.samples,
                spec.seed,
                if c.passed { "pass" } else { "fail" },
            ),
            to_value(&c),
        );
    }
    let layout = Layout::complex(2)?;
    let e1 = Direction::axis(layout, 0)?;
    let rule = PhaseRule::for_spec(layout.algebra(), spec)?;
    for (name, body) in crate::catalog::standard_bodies(layout)? {
        let polar = volume_polar(&body, spec)?;
        let rejection = mc_volume_rejection(&body, spec.sphere_samples, spec.seed)?;
        let diff = polar.minus(rejection);
        let volumes_agree = diff.value.abs() <= 3.0 * diff.std_error;
        let grid = slice_grid_oracle(&body, &e1, 512)?;
        let rule_slice = crate::functionals::slice_measure_with(&body, e1.coords(), &rule)?;
        let slices_agree = (grid - rule_slice).abs() <= 0.02 * rule_slice;
        let ok = volumes_agree && slices_agree;
        report.passed &= ok;
        report.push(
            row(
                &format!("oracle {name}"),
                cmd,
                layout,
                diff.value,
                diff.std_error,
                polar.samples,
                spec.seed,
                if ok { "pass" } else { "fail" },
            ),
            json!({
                "body": name,
                "volume_polar": to_value(&polar),
                "volume_rejection": to_value(&rejection),
                "slice_rule": rule_slice,
                "slice_grid": grid,
            }),
        );
    }
    Ok(())
}

pub fn emit_csv(report: &Report) -> Vec<u8> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer.write_record(CSV_HEADER).expect("in-memory write");
    for r in &report.rows {
        writer
            .write_record([
                r.label.clone(),
                r.command.clone(),
                r.n.to_string(),
                r.d.to_string(),
                format_significant(r.value, 12),
                format_significant(r.std_error, 12),
                r.samples.to_string(),
                r.seed.to_string(),
                r.verdict.clone(),
            ])
            .expect("in-memory write");
    }
    writer.into_inner().expect("in-memory flush")
}

fn emit_table(report: &Report) -> Vec<u8> {
    let cells: Vec<[String; 9]> = report
        .rows
        .iter()
        .map(|r| {
            [
                r.label.clone(),
                r.command.clone(),
                r.n.to_string(),
                r.d.to_string(),
                format_significant(r.value, 12),
                format_significant(r.std_error, 12),
                r.samples.to_string(),
                r.seed.to_string(),
                r.verdict.clone(),
            ]
        })
        .collect();
    let mut widths: Vec<usize> = CSV_HEADER.iter().map(|h| h.len()).collect();
    for line in &cells {
        for (w, c) in widths.iter_mut().zip(line) {
            *w = (*w).max(c.chars().count());
        }
    }
    let mut out = String::new();
    let render = |out: &mut String, line: &[String]| {
        let mut first = true;
        for (c, w) in line.iter().zip(&widths) {
            if !first {
                out.push_str("  ");
            }
            first = false;
            let _ = write!(out, "{c:<w$}");
        }
        let trimmed = out.trim_end().len();
        out.truncate(trimmed);
        out.push('\n');
    };
    render(&mut out, &CSV_HEADER.map(String::from));
    let rule: Vec<String> = widths.iter().map(|w| "-".repeat(*w)).collect();
    render(&mut out, &rule);
    for line in &cells {
        render(&mut out, line);
    }
    out.into_bytes()
}

pub fn emit_json(report: &Report) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(report).expect("report serializes");
    out.push(b'\n');
    out
}

pub fn emit_report(report: &Report, format: Format) -> Vec<u8> {
    match format {
        Format::Table => emit_table(report),
        Format::Csv => emit_csv(report),
        Format::Json => emit_json(report),
    }
}
