//! The problem-spec file: a flat TOML document with sections `[space]`,
//! `[set]`, `[F]`, `[G]`, `[solver]` and `[init]`.
//!
//! ```toml
//! [space]
//! dimension = 1
//!
//! [set]
//! kind = "box"            # whole-space | box | ball | halfspace | simplex
//! lower = [-1.0]
//! upper = [1.0]
//!
//! [F]
//! family = "operator-induced"   # zero | operator-induced | function-difference | from-operator
//! matrix = [[1.0]]
//! offset = [-1.5]
//!
//! [G]
//! family = "function-difference"
//! function = "weighted-l1"      # quadratic | weighted-l1 | affine
//! weights = [1.0]
//!
//! [solver]
//! gamma = 1.0
//! lambda = 1.0                  # or "decaying" / "toward-upper" with lambda_initial, lambda_power
//! tol = 1e-8
//! max_iter = 10000
//! error_preset = "none"         # none | geometric | inverse-square
//! seed = 0
//!
//! [init]
//! x0 = [0.0]
//! ```

use std::fmt;
use std::ops::Range;

use clap::ValueEnum;
use nalgebra::DMatrix;
use serde::Deserialize;
use toml::{Spanned, Table, Value};

use crate::bifunctions::{AffineMap, Bifunction, ConvexFunction, Family};
use crate::hilbert::{ConvexSet, Vector};
use crate::operators::{bifunction_from_operator, MonotoneOperator, OperatorKind};
use crate::problems::ProblemInstance;
use crate::solver::{ErrorSchedule, Relaxation, RelaxationRule, DEFAULT_MAX_ITER, DEFAULT_RESIDUAL_TOL};

/// A spec-file problem, optionally anchored to a line of the source text.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SpecError {
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for SpecError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(line) => write!(f, "line {line}: {}", self.message),
            None => write!(f, "{}", self.message),
        }
    }
}

impl std::error::Error for SpecError {}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ErrorPreset {
    /// No injected errors.
    None,
    /// `a_n = b_n = 0.5^n e_1`.
    Geometric,
    /// `a_n = b_n = e_1 / (n + 1)^2`.
    InverseSquare,
}

impl ErrorPreset {
    pub fn name(&self) -> &'static str {
        match self {
            ErrorPreset::None => "none",
            ErrorPreset::Geometric => "geometric",
            ErrorPreset::InverseSquare => "inverse-square",
        }
    }

    fn parse(name: &str) -> Option<Self> {
        [ErrorPreset::None, ErrorPreset::Geometric, ErrorPreset::InverseSquare]
            .into_iter()
            .find(|p| p.name() == name)
    }

    pub fn schedule(&self) -> ErrorSchedule {
        match self {
            ErrorPreset::None => ErrorSchedule::Zero,
            ErrorPreset::Geometric => ErrorSchedule::geometric(0.5).expect("valid ratio"),
            ErrorPreset::InverseSquare => ErrorSchedule::inverse_square(1.0).expect("valid scale"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct SolverSettings {
    pub gamma: f64,
    pub relaxation: Relaxation,
    pub tol: f64,
    pub max_iter: usize,
    pub error_preset: ErrorPreset,
    pub seed: u64,
    pub trace_every: usize,
}

impl Default for SolverSettings {
    fn default() -> Self {
        SolverSettings {
            gamma: 1.0,
            relaxation: Relaxation::default(),
            tol: DEFAULT_RESIDUAL_TOL,
            max_iter: DEFAULT_MAX_ITER,
            error_preset: ErrorPreset::None,
            seed: 0,
            trace_every: 1,
        }
    }
}

/// A validated spec file.
#[derive(Clone, Debug)]
pub struct ProblemSpec {
    pub set: ConvexSet,
    pub f: Bifunction,
    pub g: Bifunction,
    pub x0: Vector,
    pub solver: SolverSettings,
}

impl ProblemSpec {
    pub fn from_instance(p: &ProblemInstance) -> Self {
        ProblemSpec {
            set: p.set().clone(),
            f: p.f.clone(),
            g: p.g.clone(),
            x0: p.x0.clone(),
            solver: SolverSettings::default(),
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpec {
    space: Spanned<RawSpace>,
    set: Spanned<RawSet>,
    #[serde(rename = "F")]
    f: Spanned<RawFamily>,
    #[serde(rename = "G")]
    g: Spanned<RawFamily>,
    solver: Option<RawSolver>,
    init: Spanned<RawInit>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpace {
    dimension: Spanned<i64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSet {
    kind: Spanned<String>,
    lower: Option<Spanned<Vec<f64>>>,
    upper: Option<Spanned<Vec<f64>>>,
    center: Option<Spanned<Vec<f64>>>,
    radius: Option<Spanned<f64>>,
    normal: Option<Spanned<Vec<f64>>>,
    offset: Option<Spanned<f64>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFamily {
    family: Spanned<String>,
    operator: Option<Spanned<String>>,
    function: Option<Spanned<String>>,
    matrix: Option<Spanned<Vec<Vec<f64>>>>,
    offset: Option<Spanned<Vec<f64>>>,
    linear: Option<Spanned<Vec<f64>>>,
    weights: Option<Spanned<Vec<f64>>>,
    constant: Option<Spanned<f64>>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RawLambda {
    Constant(f64),
    Named(String),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSolver {
    gamma: Option<Spanned<f64>>,
    lambda: Option<Spanned<RawLambda>>,
    lambda_initial: Option<Spanned<f64>>,
    lambda_power: Option<Spanned<f64>>,
    tol: Option<Spanned<f64>>,
    max_iter: Option<Spanned<i64>>,
    error_preset: Option<Spanned<String>>,
    seed: Option<Spanned<i64>>,
    trace_every: Option<Spanned<i64>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawInit {
    x0: Spanned<Vec<f64>>,
}

struct Source<'a> {
    text: &'a str,
}

impl Source<'_> {
    fn line_of(&self, offset: usize) -> usize {
        self.text[..offset.min(self.text.len())].matches('\n').count() + 1
    }

    fn err(&self, span: Range<usize>, message: impl Into<String>) -> SpecError {
        SpecError {
            line: Some(self.line_of(span.start)),
            message: message.into(),
        }
    }
}

/// Parses and validates a spec file.
pub fn parse_spec(text: &str) -> Result<ProblemSpec, SpecError> {
    let src = Source { text };
    let raw: RawSpec = toml::from_str(text).map_err(|e| SpecError {
        line: e.span().map(|s| src.line_of(s.start)),
        message: e.message().trim().to_string(),
    })?;

    let dim_value = *raw.space.get_ref().dimension.get_ref();
    if !(1..=1_000_000).contains(&dim_value) {
        return Err(src.err(
            raw.space.get_ref().dimension.span(),
            "dimension must be a positive integer",
        ));
    }
    let dim = dim_value as usize;

    let set = build_set(&src, &raw.set, dim)?;
    let f = build_bifunction(&src, &raw.f, &set, "F")?;
    let g = build_bifunction(&src, &raw.g, &set, "G")?;
    let x0 = vector_of(&src, &raw.init.get_ref().x0, dim, "x0")?;
    let solver = match &raw.solver {
        Some(s) => build_solver(&src, s)?,
        None => SolverSettings::default(),
    };
    Ok(ProblemSpec { set, f, g, x0, solver })
}

fn vector_of(src: &Source, v: &Spanned<Vec<f64>>, dim: usize, name: &str) -> Result<Vector, SpecError> {
    if v.get_ref().len() != dim {
        return Err(src.err(
            v.span(),
            format!(
                "{name} has length {} but the space has dimension {dim}",
                v.get_ref().len()
            ),
        ));
    }
    if v.get_ref().iter().any(|x| x.is_nan()) {
        return Err(src.err(v.span(), format!("{name} contains NaN")));
    }
    Ok(Vector::from(v.get_ref().clone()))
}

fn finite_vector_of(src: &Source, v: &Spanned<Vec<f64>>, dim: usize, name: &str) -> Result<Vector, SpecError> {
    let out = vector_of(src, v, dim, name)?;
    if !out.is_finite() {
        return Err(src.err(v.span(), format!("{name} must be finite")));
    }
    Ok(out)
}

fn matrix_of(src: &Source, m: &Spanned<Vec<Vec<f64>>>, dim: usize) -> Result<DMatrix<f64>, SpecError> {
    let rows = m.get_ref();
    if rows.len() != dim || rows.iter().any(|r| r.len() != dim) {
        return Err(src.err(m.span(), format!("matrix must be {dim}x{dim}")));
    }
    let flat: Vec<f64> = rows.iter().flatten().copied().collect();
    if flat.iter().any(|v| !v.is_finite()) {
        return Err(src.err(m.span(), "matrix entries must be finite"));
    }
    Ok(DMatrix::from_row_slice(dim, dim, &flat))
}

fn require<'a, T>(
    src: &Source,
    section: &Spanned<impl Sized>,
    field: &'a Option<Spanned<T>>,
    name: &str,
    context: &str,
) -> Result<&'a Spanned<T>, SpecError> {
    field
        .as_ref()
        .ok_or_else(|| src.err(section.span(), format!("{context} requires `{name}`")))
}

fn reject_extra(src: &Source, present: &[(&str, Option<Range<usize>>)], context: &str) -> Result<(), SpecError> {
    for (name, span) in present {
        if let Some(span) = span {
            return Err(src.err(span.clone(), format!("`{name}` does not apply to {context}")));
        }
    }
    Ok(())
}

fn build_set(src: &Source, raw: &Spanned<RawSet>, dim: usize) -> Result<ConvexSet, SpecError> {
    let s = raw.get_ref();
    let kind = s.kind.get_ref().as_str();
    let wrap = |r: crate::Result<ConvexSet>, span: Range<usize>| r.map_err(|e| src.err(span, e.to_string()));
    let span_of = |o: &Option<Spanned<Vec<f64>>>| o.as_ref().map(|v| v.span());
    let span_of_f = |o: &Option<Spanned<f64>>| o.as_ref().map(|v| v.span());
    match kind {
        "whole-space" => {
            reject_extra(
                src,
                &[
                    ("lower", span_of(&s.lower)),
                    ("upper", span_of(&s.upper)),
                    ("center", span_of(&s.center)),
                    ("radius", span_of_f(&s.radius)),
                    ("normal", span_of(&s.normal)),
                    ("offset", span_of_f(&s.offset)),
                ],
                "a whole-space set",
            )?;
            wrap(ConvexSet::whole_space(dim), s.kind.span())
        }
        "box" => {
            reject_extra(
                src,
                &[
                    ("center", span_of(&s.center)),
                    ("radius", span_of_f(&s.radius)),
                    ("normal", span_of(&s.normal)),
                    ("offset", span_of_f(&s.offset)),
                ],
                "a box",
            )?;
            let lo = vector_of(src, require(src, raw, &s.lower, "lower", "a box")?, dim, "lower")?;
            let hi = vector_of(src, require(src, raw, &s.upper, "upper", "a box")?, dim, "upper")?;
            wrap(ConvexSet::boxed(lo.into_inner(), hi.into_inner()), raw.span())
        }
        "ball" => {
            reject_extra(
                src,
                &[
                    ("lower", span_of(&s.lower)),
                    ("upper", span_of(&s.upper)),
                    ("normal", span_of(&s.normal)),
                    ("offset", span_of_f(&s.offset)),
                ],
                "a ball",
            )?;
            let center = finite_vector_of(src, require(src, raw, &s.center, "center", "a ball")?, dim, "center")?;
            let radius = require(src, raw, &s.radius, "radius", "a ball")?;
            wrap(ConvexSet::ball(center, *radius.get_ref()), radius.span())
        }
        "halfspace" => {
            reject_extra(
                src,
                &[
                    ("lower", span_of(&s.lower)),
                    ("upper", span_of(&s.upper)),
                    ("center", span_of(&s.center)),
                    ("radius", span_of_f(&s.radius)),
                ],
                "a halfspace",
            )?;
            let normal = finite_vector_of(
                src,
                require(src, raw, &s.normal, "normal", "a halfspace")?,
                dim,
                "normal",
            )?;
            let offset = require(src, raw, &s.offset, "offset", "a halfspace")?;
            wrap(ConvexSet::halfspace(normal, *offset.get_ref()), offset.span())
        }
        "simplex" => {
            reject_extra(
                src,
                &[
                    ("lower", span_of(&s.lower)),
                    ("upper", span_of(&s.upper)),
                    ("center", span_of(&s.center)),
                    ("radius", span_of_f(&s.radius)),
                    ("normal", span_of(&s.normal)),
                    ("offset", span_of_f(&s.offset)),
                ],
                "a simplex",
            )?;
            wrap(ConvexSet::simplex(dim), s.kind.span())
        }
        other => Err(src.err(
            s.kind.span(),
            format!("unknown set kind `{other}` (expected whole-space, box, ball, halfspace or simplex)"),
        )),
    }
}

fn build_function(
    src: &Source,
    raw: &Spanned<RawFamily>,
    dim: usize,
    context: &str,
) -> Result<ConvexFunction, SpecError> {
    let s = raw.get_ref();
    let name = require(src, raw, &s.function, "function", context)?;
    let wrap = |r: crate::Result<ConvexFunction>, span: Range<usize>| r.map_err(|e| src.err(span, e.to_string()));
    match name.get_ref().as_str() {
        "quadratic" => {
            reject_extra(
                src,
                &[
                    ("weights", s.weights.as_ref().map(|v| v.span())),
                    ("constant", s.constant.as_ref().map(|v| v.span())),
                    ("offset", s.offset.as_ref().map(|v| v.span())),
                ],
                "a quadratic function",
            )?;
            let m = require(src, raw, &s.matrix, "matrix", "a quadratic function")?;
            let matrix = matrix_of(src, m, dim)?;
            let linear = match &s.linear {
                Some(l) => finite_vector_of(src, l, dim, "linear")?,
                None => Vector::zeros(dim),
            };
            wrap(ConvexFunction::quadratic(matrix, linear), m.span())
        }
        "weighted-l1" => {
            reject_extra(
                src,
                &[
                    ("matrix", s.matrix.as_ref().map(|v| v.span())),
                    ("linear", s.linear.as_ref().map(|v| v.span())),
                    ("constant", s.constant.as_ref().map(|v| v.span())),
                    ("offset", s.offset.as_ref().map(|v| v.span())),
                ],
                "a weighted-l1 function",
            )?;
            let w = require(src, raw, &s.weights, "weights", "a weighted-l1 function")?;
            wrap(
                ConvexFunction::weighted_l1(finite_vector_of(src, w, dim, "weights")?),
                w.span(),
            )
        }
        "affine" => {
            reject_extra(
                src,
                &[
                    ("matrix", s.matrix.as_ref().map(|v| v.span())),
                    ("weights", s.weights.as_ref().map(|v| v.span())),
                    ("offset", s.offset.as_ref().map(|v| v.span())),
                ],
                "an affine function",
            )?;
            let l = require(src, raw, &s.linear, "linear", "an affine function")?;
            let constant = s.constant.as_ref().map(|c| *c.get_ref()).unwrap_or(0.0);
            wrap(
                ConvexFunction::affine(finite_vector_of(src, l, dim, "linear")?, constant),
                l.span(),
            )
        }
        other => Err(src.err(
            name.span(),
            format!("unknown function `{other}` (expected quadratic, weighted-l1 or affine)"),
        )),
    }
}

fn build_affine_map(src: &Source, raw: &Spanned<RawFamily>, dim: usize, context: &str) -> Result<AffineMap, SpecError> {
    let s = raw.get_ref();
    reject_extra(
        src,
        &[
            ("function", s.function.as_ref().map(|v| v.span())),
            ("linear", s.linear.as_ref().map(|v| v.span())),
            ("weights", s.weights.as_ref().map(|v| v.span())),
            ("constant", s.constant.as_ref().map(|v| v.span())),
        ],
        context,
    )?;
    let m = require(src, raw, &s.matrix, "matrix", context)?;
    let matrix = matrix_of(src, m, dim)?;
    let offset = match &s.offset {
        Some(o) => finite_vector_of(src, o, dim, "offset")?,
        None => Vector::zeros(dim),
    };
    AffineMap::new(matrix, offset).map_err(|e| src.err(m.span(), e.to_string()))
}

fn build_bifunction(
    src: &Source,
    raw: &Spanned<RawFamily>,
    set: &ConvexSet,
    section: &str,
) -> Result<Bifunction, SpecError> {
    let s = raw.get_ref();
    let dim = set.dim();
    let family = s.family.get_ref().as_str();
    let operator_span = s.operator.as_ref().map(|v| v.span());
    let wrap = |r: crate::Result<Bifunction>, span: Range<usize>| r.map_err(|e| src.err(span, e.to_string()));
    match family {
        "zero" => {
            reject_extra(
                src,
                &[
                    ("operator", operator_span),
                    ("function", s.function.as_ref().map(|v| v.span())),
                    ("matrix", s.matrix.as_ref().map(|v| v.span())),
                    ("offset", s.offset.as_ref().map(|v| v.span())),
                    ("linear", s.linear.as_ref().map(|v| v.span())),
                    ("weights", s.weights.as_ref().map(|v| v.span())),
                    ("constant", s.constant.as_ref().map(|v| v.span())),
                ],
                &format!("[{section}] family zero"),
            )?;
            Ok(Bifunction::zero(set.clone()))
        }
        "operator-induced" => {
            reject_extra(src, &[("operator", operator_span)], "family operator-induced")?;
            let map = build_affine_map(src, raw, dim, "family operator-induced")?;
            wrap(Bifunction::operator_induced(set.clone(), map), s.family.span())
        }
        "function-difference" => {
            reject_extra(src, &[("operator", operator_span)], "family function-difference")?;
            let f = build_function(src, raw, dim, "family function-difference")?;
            wrap(Bifunction::function_difference(set.clone(), f), s.family.span())
        }
        "from-operator" => {
            let op_name = require(src, raw, &s.operator, "operator", "family from-operator")?;
            let op = match op_name.get_ref().as_str() {
                "affine" => MonotoneOperator::affine(build_affine_map(src, raw, dim, "an affine operator")?),
                "subdifferential" => {
                    MonotoneOperator::subdifferential(build_function(src, raw, dim, "a subdifferential operator")?)
                }
                other => {
                    return Err(src.err(
                        op_name.span(),
                        format!("unknown operator `{other}` (expected affine or subdifferential)"),
                    ))
                }
            }
            .map_err(|e| src.err(op_name.span(), e.to_string()))?;
            wrap(bifunction_from_operator(&op, set), op_name.span())
        }
        other => Err(src.err(
            s.family.span(),
            format!(
                "unknown family `{other}` in [{section}] (expected zero, operator-induced, function-difference or from-operator)"
            ),
        )),
    }
}

fn build_solver(src: &Source, s: &RawSolver) -> Result<SolverSettings, SpecError> {
    let mut out = SolverSettings::default();
    if let Some(g) = &s.gamma {
        out.gamma = *g.get_ref();
        if !(out.gamma.is_finite() && out.gamma > 0.0) {
            return Err(src.err(g.span(), format!("gamma = {} must be in (0, inf)", out.gamma)));
        }
    }
    if let Some(l) = &s.lambda {
        let power = s.lambda_power.as_ref().map(|p| *p.get_ref()).unwrap_or(1.0);
        let rule = match l.get_ref() {
            RawLambda::Constant(v) => {
                if !(*v > 0.0 && *v < 2.0) {
                    return Err(src.err(l.span(), relaxation_message(*v)));
                }
                RelaxationRule::Constant(*v)
            }
            RawLambda::Named(name) => match name.as_str() {
                "decaying" => RelaxationRule::Decaying {
                    initial: s.lambda_initial.as_ref().map(|p| *p.get_ref()).unwrap_or(1.0),
                    power,
                },
                "toward-upper" => RelaxationRule::TowardUpper { power },
                other => {
                    return Err(src.err(
                        l.span(),
                        format!("unknown lambda schedule `{other}` (expected a number, decaying or toward-upper)"),
                    ))
                }
            },
        };
        out.relaxation = Relaxation::dr(rule).map_err(|e| src.err(l.span(), e.to_string()))?;
    } else if let Some(p) = s.lambda_power.as_ref().or(s.lambda_initial.as_ref()) {
        return Err(src.err(p.span(), "lambda_initial and lambda_power need a named lambda schedule"));
    }
    if let Some(t) = &s.tol {
        out.tol = *t.get_ref();
        if !(out.tol.is_finite() && out.tol > 0.0) {
            return Err(src.err(t.span(), "tol must be positive"));
        }
    }
    if let Some(m) = &s.max_iter {
        out.max_iter = positive(src, m, "max_iter")?;
    }
    if let Some(t) = &s.trace_every {
        out.trace_every = positive(src, t, "trace_every")?;
    }
    if let Some(seed) = &s.seed {
        out.seed = u64::try_from(*seed.get_ref()).map_err(|_| src.err(seed.span(), "seed must be nonnegative"))?;
    }
    if let Some(p) = &s.error_preset {
        out.error_preset = ErrorPreset::parse(p.get_ref()).ok_or_else(|| {
            src.err(
                p.span(),
                format!(
                    "unknown error_preset `{}` (expected none, geometric or inverse-square)",
                    p.get_ref()
                ),
            )
        })?;
    }
    Ok(out)
}

fn positive(src: &Source, v: &Spanned<i64>, name: &str) -> Result<usize, SpecError> {
    match usize::try_from(*v.get_ref()) {
        Ok(n) if n > 0 => Ok(n),
        _ => Err(src.err(v.span(), format!("{name} must be a positive integer"))),
    }
}

pub(crate) fn relaxation_message(lambda: f64) -> String {
    format!("lambda = {lambda} is outside (0,2); relaxation parameters must satisfy 0 < lambda < 2")
}

/// Renders a problem as a spec file that [`parse_spec`] reads back.
///
/// Fails for sets and bifunctions the format cannot express (intersections,
/// affine subspaces, sums and generic oracles).
pub fn render_spec(spec: &ProblemSpec) -> Result<String, SpecError> {
    let unsupported = |what: String| SpecError {
        line: None,
        message: format!("{what} cannot be written to a spec file"),
    };
    let dim = spec.set.dim();
    let mut doc = Table::new();

    let mut space = Table::new();
    space.insert("dimension".into(), Value::Integer(dim as i64));
    doc.insert("space".into(), Value::Table(space));

    let mut set = Table::new();
    set.insert("kind".into(), spec.set.kind_name().into());
    match spec.set.kind_name() {
        "whole-space" | "simplex" => {}
        "box" => {
            let (lo, hi) = spec.set.box_bounds().expect("box");
            set.insert("lower".into(), floats(&lo));
            set.insert("upper".into(), floats(&hi));
        }
        "ball" => {
            let (c, r) = spec.set.ball_params().expect("ball");
            set.insert("center".into(), floats(c.as_slice()));
            set.insert("radius".into(), Value::Float(r));
        }
        "halfspace" => {
            let (n, b) = spec.set.halfspace_params().expect("halfspace");
            set.insert("normal".into(), floats(n.as_slice()));
            set.insert("offset".into(), Value::Float(b));
        }
        other => return Err(unsupported(format!("a {other} set"))),
    }
    doc.insert("set".into(), Value::Table(set));

    doc.insert(
        "F".into(),
        Value::Table(
            family_table(&spec.f).ok_or_else(|| unsupported(format!("a {} bifunction", spec.f.family_name())))?,
        ),
    );
    doc.insert(
        "G".into(),
        Value::Table(
            family_table(&spec.g).ok_or_else(|| unsupported(format!("a {} bifunction", spec.g.family_name())))?,
        ),
    );

    let s = &spec.solver;
    let mut solver = Table::new();
    solver.insert("gamma".into(), Value::Float(s.gamma));
    match *s.relaxation.rule() {
        RelaxationRule::Constant(v) => {
            solver.insert("lambda".into(), Value::Float(v));
        }
        RelaxationRule::Decaying { initial, power } => {
            solver.insert("lambda".into(), "decaying".into());
            solver.insert("lambda_initial".into(), Value::Float(initial));
            solver.insert("lambda_power".into(), Value::Float(power));
        }
        RelaxationRule::TowardUpper { power } => {
            solver.insert("lambda".into(), "toward-upper".into());
            solver.insert("lambda_power".into(), Value::Float(power));
        }
    }
    solver.insert("tol".into(), Value::Float(s.tol));
    solver.insert("max_iter".into(), Value::Integer(s.max_iter as i64));
    solver.insert("error_preset".into(), s.error_preset.name().into());
    solver.insert("seed".into(), Value::Integer(s.seed as i64));
    solver.insert("trace_every".into(), Value::Integer(s.trace_every as i64));
    doc.insert("solver".into(), Value::Table(solver));

    let mut init = Table::new();
    init.insert("x0".into(), floats(spec.x0.as_slice()));
    doc.insert("init".into(), Value::Table(init));

    toml::to_string(&doc).map_err(|e| SpecError {
        line: None,
        message: e.to_string(),
    })
}

fn floats(v: &[f64]) -> Value {
    Value::Array(v.iter().map(|&x| Value::Float(x)).collect())
}

fn matrix_value(m: &DMatrix<f64>) -> Value {
    Value::Array(
        (0..m.nrows())
            .map(|i| floats(&(0..m.ncols()).map(|j| m[(i, j)]).collect::<Vec<_>>()))
            .collect(),
    )
}

fn function_fields(t: &mut Table, f: &ConvexFunction) {
    t.insert("function".into(), f.kind_name().into());
    match f {
        ConvexFunction::Quadratic { matrix, linear } => {
            t.insert("matrix".into(), matrix_value(matrix));
            t.insert("linear".into(), floats(linear.as_slice()));
        }
        ConvexFunction::WeightedL1 { weights } => {
            t.insert("weights".into(), floats(weights.as_slice()));
        }
        ConvexFunction::Affine { linear, constant } => {
            t.insert("linear".into(), floats(linear.as_slice()));
            t.insert("constant".into(), Value::Float(*constant));
        }
    }
}

fn map_fields(t: &mut Table, map: &AffineMap) {
    t.insert("matrix".into(), matrix_value(map.matrix()));
    t.insert("offset".into(), floats(map.offset().as_slice()));
}

fn family_table(h: &Bifunction) -> Option<Table> {
    let mut t = Table::new();
    t.insert("family".into(), h.family_name().into());
    match h.family() {
        Family::Zero => {}
        Family::OperatorInduced(map) => map_fields(&mut t, map),
        Family::FunctionDifference(f) => function_fields(&mut t, f),
        Family::FromOperator(op) => match op.kind() {
            OperatorKind::Affine(map) => {
                t.insert("operator".into(), "affine".into());
                map_fields(&mut t, map);
            }
            OperatorKind::Subdifferential(f) => {
                t.insert("operator".into(), "subdifferential".into());
                function_fields(&mut t, f);
            }
            _ => return None,
        },
        Family::Sum(..) | Family::Generic(_) => return None,
    }
    Some(t)
}
