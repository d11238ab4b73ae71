//! Curve, constraint and pre-log documents, and the JSON report layer used by
//! the command-line tool.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::curve_model::{validate_curve, CurveError, EdgeKind, ImageCurve, RawCurve, RawEdge, RawEdgeKind, TropicalCurve};
use crate::enumeration_index::{
    direct_index, lattice_multiplicity, match_constraints, required_codimension, tropical_count, AffineConstraint,
    ConstraintSet, EnumerationError, MultiplicityReport,
};
use crate::exact_linalg::{fmt_rat, parse_rat, Int, Rat};
use crate::kuranishi_leading::{
    edge_length_residual, leading_contribution, leading_form_system, matching_constant, pair_with_h, BaseCoefficients,
    LeadingFormSystem, NodeCoefficients, NodeRatios, PathStep, PreLogPathConfig, ScaledRatio,
};
use crate::moduli_space::superabundance_report;
use crate::obstruction_space::{dual_obstruction_basis, ObstructionBasis};
use crate::well_spacedness::{smoothability_verdict, SmoothabilityVerdict, WellSpacedWitness, DEFAULT_SEED};

pub const SCHEMA_VERSION: &str = "1";

#[derive(Debug, Error)]
pub enum DocError {
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
    #[error(transparent)]
    Curve(#[from] CurveError),
}

impl DocError {
    fn at(line: usize, message: impl Into<String>) -> Self {
        DocError::Parse { line, message: message.into() }
    }
}

/// A rational given either as a JSON integer or as a `"p/q"` string.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RatField {
    Int(i64),
    Str(String),
}

impl RatField {
    pub fn value(&self) -> Option<Rat> {
        match self {
            RatField::Int(i) => Some(Rat::from_integer((*i).into())),
            RatField::Str(s) => parse_rat(s),
        }
    }

    pub fn exact(x: &Rat) -> Self {
        RatField::Str(fmt_rat(x))
    }
}

/// Integer entries: JSON integers or decimal strings for large values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum IntField {
    Int(i64),
    Str(String),
}

impl IntField {
    pub fn value(&self) -> Option<Int> {
        match self {
            IntField::Int(i) => Some((*i).into()),
            IntField::Str(s) => {
                let r = parse_rat(s)?;
                r.is_integer().then(|| r.to_integer())
            }
        }
    }

    pub fn exact(x: &Int) -> Self {
        match i64::try_from(x) {
            Ok(v) => IntField::Int(v),
            Err(_) => IntField::Str(x.to_string()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VertexDoc {
    pub id: String,
    pub position: Vec<RatField>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeDoc {
    pub id: String,
    #[serde(default = "one")]
    pub weight: i64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ends: Option<[String; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub end: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub direction: Option<Vec<IntField>>,
}

fn one() -> i64 {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurveDocument {
    pub ambient_rank: usize,
    pub vertices: Vec<VertexDoc>,
    pub edges: Vec<EdgeDoc>,
    #[serde(default)]
    pub markings: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
}

/// Line number (1-based) of the first occurrence of `needle` in `text`.
fn line_of(text: &str, needle: &str) -> usize {
    text.find(needle).map_or(0, |i| text[..i].matches('\n').count() + 1)
}

pub fn parse_json<T: for<'de> Deserialize<'de>>(text: &str) -> Result<T, DocError> {
    serde_json::from_str(text).map_err(|e| DocError::at(e.line(), e.to_string()))
}

impl CurveDocument {
    pub fn to_raw(&self, text: &str) -> Result<RawCurve, DocError> {
        let mut raw = RawCurve::new(self.ambient_rank);
        for v in &self.vertices {
            let mut pos = Vec::new();
            for p in &v.position {
                let x = p.value().ok_or_else(|| {
                    DocError::at(line_of(text, &format!("\"{}\"", v.id)), format!("malformed rational {p:?} in vertex {}", v.id))
                })?;
                pos.push(x);
            }
            raw = raw.vertex_q(&v.id, pos);
        }
        for e in &self.edges {
            let line = line_of(text, &format!("\"{}\"", e.id));
            let kind = match (&e.ends, &e.end, &e.direction) {
                (Some([a, b]), None, None) => RawEdgeKind::Bounded { ends: (a.clone(), b.clone()) },
                (None, Some(v), Some(d)) => {
                    let mut dir = Vec::new();
                    for x in d {
                        dir.push(x.value().ok_or_else(|| DocError::at(line, format!("malformed integer in edge {}", e.id)))?);
                    }
                    RawEdgeKind::Unbounded { end: v.clone(), direction: dir }
                }
                _ => {
                    return Err(DocError::at(
                        line,
                        format!("edge {} needs either `ends` or `end` with `direction`", e.id),
                    ))
                }
            };
            raw.edges.push(RawEdge { id: e.id.clone(), weight: e.weight, kind });
        }
        raw.markings = self.markings.clone();
        Ok(raw)
    }

    pub fn from_curve(curve: &TropicalCurve) -> Self {
        let vertices = curve
            .vertices
            .iter()
            .map(|v| VertexDoc { id: v.id.clone(), position: v.pos.iter().map(RatField::exact).collect() })
            .collect();
        let edges = curve
            .edges
            .iter()
            .map(|e| match e.kind {
                EdgeKind::Bounded { ends: (a, b) } => EdgeDoc {
                    id: e.id.clone(),
                    weight: e.weight as i64,
                    ends: Some([curve.vertices[a].id.clone(), curve.vertices[b].id.clone()]),
                    end: None,
                    direction: None,
                },
                EdgeKind::Unbounded { end } => EdgeDoc {
                    id: e.id.clone(),
                    weight: e.weight as i64,
                    ends: None,
                    end: Some(curve.vertices[end].id.clone()),
                    direction: Some(e.direction.as_ref().unwrap().iter().map(IntField::exact).collect()),
                },
            })
            .collect();
        CurveDocument {
            ambient_rank: curve.n,
            vertices,
            edges,
            markings: curve.markings.iter().map(|&m| curve.edges[m].id.clone()).collect(),
            description: None,
        }
    }
}

pub fn read_text(path: &Path) -> Result<String, DocError> {
    std::fs::read_to_string(path).map_err(|e| DocError::Io { path: path.display().to_string(), message: e.to_string() })
}

pub fn parse_curve(text: &str) -> Result<TropicalCurve, DocError> {
    let doc: CurveDocument = parse_json(text)?;
    Ok(validate_curve(&doc.to_raw(text)?)?)
}

pub fn load_curve(path: &Path) -> Result<TropicalCurve, DocError> {
    parse_curve(&read_text(path)?)
}

pub fn emit_curve(curve: &TropicalCurve) -> String {
    to_pretty(&serde_json::to_value(CurveDocument::from_curve(curve)).expect("serializable"))
}

/// Deterministic pretty JSON with a trailing newline.
pub fn to_pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

pub fn skeleton() -> Value {
    json!({ "schema_version": SCHEMA_VERSION })
}

// ---- constraint, pre-log and manifest documents ----

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstraintEntryDoc {
    pub point: Vec<RatField>,
    #[serde(default)]
    pub span: Vec<Vec<IntField>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstraintDocument {
    pub constraints: Vec<ConstraintEntryDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
}

impl ConstraintDocument {
    pub fn to_set(&self) -> Result<ConstraintSet, DocError> {
        let mut constraints = Vec::new();
        for (i, c) in self.constraints.iter().enumerate() {
            let point = c
                .point
                .iter()
                .map(RatField::value)
                .collect::<Option<Vec<_>>>()
                .ok_or_else(|| DocError::at(0, format!("constraint {i}: malformed rational in point")))?;
            let span = c
                .span
                .iter()
                .map(|v| v.iter().map(IntField::value).collect::<Option<Vec<_>>>())
                .collect::<Option<Vec<_>>>()
                .ok_or_else(|| DocError::at(0, format!("constraint {i}: span entries must be integers")))?;
            constraints.push(AffineConstraint { point, span });
        }
        Ok(ConstraintSet { constraints })
    }
}

pub fn parse_constraints(text: &str) -> Result<ConstraintSet, DocError> {
    parse_json::<ConstraintDocument>(text)?.to_set()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum NodeDoc {
    Trivalent { k: RatField, l: RatField, m: RatField },
    Conic { a: RatField, b: RatField },
}

impl NodeDoc {
    fn value(&self) -> Option<NodeCoefficients> {
        Some(match self {
            NodeDoc::Trivalent { k, l, m } => NodeCoefficients::Trivalent { k: k.value()?, l: l.value()?, m: m.value()? },
            NodeDoc::Conic { a, b } => NodeCoefficients::Conic { a: a.value()?, b: b.value()? },
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepDoc {
    pub weight: u64,
    pub length: RatField,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathDoc {
    pub vertices: Vec<String>,
    pub nodes: Vec<NodeDoc>,
    pub steps: Vec<StepDoc>,
    pub direction: Vec<IntField>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub segment: Option<usize>,
}

impl PathDoc {
    pub fn to_config(&self) -> Result<PreLogPathConfig, DocError> {
        let bad = |what: &str| DocError::at(0, format!("path {:?}: malformed {what}", self.vertices));
        let nodes = self.nodes.iter().map(NodeDoc::value).collect::<Option<Vec<_>>>().ok_or_else(|| bad("node coefficient"))?;
        let steps = self
            .steps
            .iter()
            .map(|s| s.length.value().map(|length| PathStep { weight: s.weight, length }))
            .collect::<Option<Vec<_>>>()
            .ok_or_else(|| bad("step length"))?;
        let direction = self.direction.iter().map(IntField::value).collect::<Option<Vec<_>>>().ok_or_else(|| bad("direction"))?;
        Ok(PreLogPathConfig { path: self.vertices.clone(), nodes, steps, direction, segment: self.segment })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScaledRatioDoc {
    pub coefficient: RatField,
    #[serde(default = "zero_field")]
    pub exponent: RatField,
}

fn zero_field() -> RatField {
    RatField::Int(0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeRatiosDoc {
    pub k_over_m: ScaledRatioDoc,
    pub l_over_m: ScaledRatioDoc,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TropicalizationDoc {
    pub taus: Vec<f64>,
    /// Matching constant; when absent it is derived from the first two paths.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constant: Option<RatField>,
    pub chains: [Vec<NodeRatiosDoc>; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PrelogDocument {
    #[serde(default)]
    pub paths: Vec<PathDoc>,
    /// Base coefficients by vertex id for the leading form system.
    #[serde(default)]
    pub base: std::collections::BTreeMap<String, NodeDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tropicalization: Option<TropicalizationDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
}

impl PrelogDocument {
    pub fn configs(&self) -> Result<Vec<PreLogPathConfig>, DocError> {
        self.paths.iter().map(PathDoc::to_config).collect()
    }

    pub fn base(&self) -> Result<BaseCoefficients, DocError> {
        self.base
            .iter()
            .map(|(id, n)| n.value().map(|v| (id.clone(), v)).ok_or_else(|| DocError::at(0, format!("base {id}: malformed coefficient"))))
            .collect()
    }
}

fn ratio(d: &ScaledRatioDoc) -> Option<ScaledRatio> {
    Some(ScaledRatio { coefficient: d.coefficient.value()?, exponent: d.exponent.value()? })
}

pub fn chain(nodes: &[NodeRatiosDoc]) -> Result<Vec<NodeRatios>, DocError> {
    nodes
        .iter()
        .map(|n| Some(NodeRatios { k_over_m: ratio(&n.k_over_m)?, l_over_m: ratio(&n.l_over_m)? }))
        .collect::<Option<Vec<_>>>()
        .ok_or_else(|| DocError::at(0, "malformed ratio in tropicalization chain"))
}

/// Lists curve documents, relative to the manifest's directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub curves: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
}

// ---- report builders ----

fn rs(x: &Rat) -> Value {
    Value::String(fmt_rat(x))
}

fn is(x: &Int) -> Value {
    Value::String(x.to_string())
}

fn ints(v: &[Int]) -> Value {
    serde_json::to_value(v.iter().map(IntField::exact).collect::<Vec<_>>()).expect("serializable")
}

fn rats(v: &[Rat]) -> Value {
    Value::Array(v.iter().map(rs).collect())
}

fn header(command: &str) -> serde_json::Map<String, Value> {
    let mut m = serde_json::Map::new();
    m.insert("schema_version".into(), json!(SCHEMA_VERSION));
    m.insert("command".into(), json!(command));
    m
}

fn edge_ids(curve: &TropicalCurve, edges: &[usize]) -> Value {
    json!(edges.iter().map(|&e| curve.edges[e].id.clone()).collect::<Vec<_>>())
}

fn vertex_ids(curve: &TropicalCurve, vs: impl IntoIterator<Item = usize>) -> Value {
    json!(vs.into_iter().map(|v| curve.vertices[v].id.clone()).collect::<Vec<_>>())
}

/// Image vertices are named after their first member.
fn image_vertex_id(curve: &TropicalCurve, image: &ImageCurve, v: usize) -> String {
    curve.vertices[image.vertices[v].members[0]].id.clone()
}

pub fn profile_report(curve: &TropicalCurve) -> Value {
    let p = curve.regularity_profile();
    let image = curve.build_image();
    json!({
        "trivalent": p.trivalent,
        "regular": p.regular,
        "violations": p.violations.iter().map(|(c, w)| json!({"clause": c, "witness": w})).collect::<Vec<_>>(),
        "admissible_valence": p.admissible_valence,
        "high_valence": p.high_valence.iter().map(|&(v, val, class)| json!({
            "image_vertex": image_vertex_id(curve, &image, v),
            "valence": val,
            "class": class.label(),
        })).collect::<Vec<_>>(),
    })
}

fn validation_ok(curve: &TropicalCurve) -> Value {
    json!({
        "valid": true,
        "ambient_rank": curve.n,
        "vertices": curve.vertices.len(),
        "edges": curve.edges.len(),
        "markings": edge_ids(curve, &curve.markings),
    })
}

fn validation_error(e: &CurveError) -> Value {
    let mut m = serde_json::Map::new();
    m.insert("valid".into(), json!(false));
    m.insert("error".into(), json!(e.to_string()));
    if let CurveError::Unbalanced { vertex, residual } = e {
        m.insert("vertex".into(), json!(vertex));
        m.insert("residual".into(), json!(residual));
    }
    Value::Object(m)
}

fn degree_report(curve: &TropicalCurve) -> Value {
    Value::Array(curve.degree_map().iter().map(|(d, c)| json!({"direction": ints(d), "count": c})).collect())
}

fn bouquet_report(curve: &TropicalCurve) -> Value {
    let bd = curve.bouquet_decomposition();
    json!({
        "loop_edges": edge_ids(curve, &bd.loop_edges),
        "bouquets": bd.bouquets.iter().map(|b| json!({
            "vertices": vertex_ids(curve, b.vertices.iter().copied()),
            "edges": edge_ids(curve, &b.edges),
            "betti": b.betti,
        })).collect::<Vec<_>>(),
        "complement_components": bd.complement.iter().map(|c| json!({
            "edges": edge_ids(curve, &c.edges),
            "attachments": vertex_ids(curve, c.attachments.iter().copied()),
        })).collect::<Vec<_>>(),
    })
}

pub fn obstruction_report(curve: &TropicalCurve, h: &ObstructionBasis) -> Value {
    let segs = &h.decomposition.segments;
    json!({
        "dimension": h.dimension(),
        "segments": segs.iter().map(|s| json!({
            "bouquet": s.bouquet,
            "closed": s.closed,
            "path": vertex_ids(curve, s.path.iter().copied()),
            "edges": edge_ids(curve, &s.edges),
            "perp": s.perp.iter().map(|p| ints(p)).collect::<Vec<_>>(),
        })).collect::<Vec<_>>(),
        "basis": h.basis.iter().map(|b| b.iter().map(|u| ints(u)).collect::<Vec<_>>()).collect::<Vec<_>>(),
    })
}

fn dimensions_report(curve: &TropicalCurve, h_dim: usize) -> Value {
    let r = superabundance_report(curve, h_dim);
    json!({
        "expected": r.expected_dim,
        "actual": r.actual_dim,
        "obstruction": r.obstruction_dim,
        "contracted_edges": r.contracted_edges,
        "superabundant": r.superabundant,
        "identity_holds": r.identity_holds,
    })
}

fn witness_report(curve: &TropicalCurve, image: &ImageCurve, w: &WellSpacedWitness) -> Value {
    json!({
        "branch": w.branch.label(),
        "minimum": w.minimum.to_string(),
        "constraints": w.constraints.iter().map(|c| rats(c)).collect::<Vec<_>>(),
        "covectors": w.covectors.iter().map(|c| rats(c)).collect::<Vec<_>>(),
        "candidates": w.candidates.iter().map(|c| json!({
            "segment": c.segment,
            "component": c.component,
            "vertex": c.vertex.map(|v| image_vertex_id(curve, image, v)),
            "distance": c.distance.to_string(),
        })).collect::<Vec<_>>(),
    })
}

pub fn verdict_report(curve: &TropicalCurve, v: &SmoothabilityVerdict) -> Value {
    let image = curve.build_image();
    let mut branches: Vec<&str> = v.witnesses.iter().map(|w| w.branch.label()).collect();
    branches.sort_unstable();
    branches.dedup();
    json!({
        "verdict": v.verdict.label(),
        "rule": v.rule.label(),
        "reason": v.reason,
        "branches": branches,
        "witnesses": v.witnesses.iter().map(|w| witness_report(curve, &image, w)).collect::<Vec<_>>(),
    })
}

pub fn multiplicity_report(curve: &TropicalCurve, m: &MultiplicityReport, direct: Option<&Int>) -> Value {
    json!({
        "lattice_index": is(&m.lattice_index),
        "direct_index": direct.map(is),
        "deltas": m.deltas.iter().map(is).collect::<Vec<_>>(),
        "d_tilde": is(&m.d_tilde),
        "total_marked_weight": is(&m.total_marked_weight),
        "contribution": is(&m.contribution),
        "smith": m.smith.iter().map(is).collect::<Vec<_>>(),
        "rows": m.rows,
        "cols": m.cols,
        "markings": edge_ids(curve, &curve.markings),
        "intersections": m.intersections.iter().map(|p| rats(p)).collect::<Vec<_>>(),
        "ties": m.ties.iter().map(|(a, b)| json!([a, b])).collect::<Vec<_>>(),
    })
}

fn weights_report(curve: &TropicalCurve) -> Value {
    let w = curve.weights_summary();
    json!({"total_inner_weight": is(&w.total_inner_weight), "total_marked_weight": is(&w.total_marked_weight)})
}

fn contribution_report(c: &crate::kuranishi_leading::LeadingContribution) -> Value {
    json!({"order": is(&c.order), "coefficient": rs(&c.coefficient), "direction": ints(&c.direction), "segment": c.segment})
}

pub fn form_system_report(curve: &TropicalCurve, s: &LeadingFormSystem) -> Value {
    let image = curve.build_image();
    json!({
        "variables": s.variables.iter().map(|(v, c)| format!("{v}.{c}")).collect::<Vec<_>>(),
        "order_scale": is(&s.order_scale),
        "declared_codimension": s.declared_codimension,
        "rank": s.rank,
        "codimension": s.codimension(),
        "forms": s.forms.iter().map(|f| json!({
            "element": rats(&f.element),
            "order": f.order.as_ref().map(is),
            "paths": f.paths.iter().map(|p| p.iter().map(|&v| image_vertex_id(curve, &image, v)).collect::<Vec<_>>()).collect::<Vec<_>>(),
            "contributions": f.contributions.iter().map(contribution_report).collect::<Vec<_>>(),
            "pairings": rats(&f.pairings),
            "leading_sum": rs(&f.leading_sum),
            "coefficients": rats(&f.coefficients),
        })).collect::<Vec<_>>(),
    })
}

/// Float values are written with full round-trip precision as strings.
fn fs(x: f64) -> Value {
    Value::String(format!("{x:e}"))
}

// ---- command line ----

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
}

#[derive(Debug, Parser)]
#[command(name = "tropic", about = "Superabundance, obstructions, smoothability and multiplicities of tropical curves")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value = "json")]
    pub format: Format,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse and validate a curve; report its regularity profile.
    Validate {
        #[arg(long)]
        curve: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Full analysis of one curve.
    Analyze {
        #[arg(long)]
        curve: PathBuf,
        #[arg(long)]
        constraints: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Basis of the dual obstruction space.
    Obstruction {
        #[arg(long)]
        curve: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Well-spacedness and the smoothability verdict.
    Wellspaced {
        #[arg(long)]
        curve: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Leading obstruction terms of pre-log path data.
    Kuranishi {
        #[arg(long)]
        prelog: PathBuf,
        #[arg(long)]
        curve: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Lattice multiplicity of a marked curve through affine constraints.
    Multiplicity {
        #[arg(long)]
        curve: PathBuf,
        #[arg(long)]
        constraints: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Weighted count over the curves of a manifest.
    Count {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        constraints: PathBuf,
        #[command(flatten)]
        common: Common,
    },
}

impl Command {
    fn common(&self) -> &Common {
        match self {
            Command::Validate { common, .. }
            | Command::Analyze { common, .. }
            | Command::Obstruction { common, .. }
            | Command::Wellspaced { common, .. }
            | Command::Kuranishi { common, .. }
            | Command::Multiplicity { common, .. }
            | Command::Count { common, .. } => common,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

/// A failed command: exit code 1 for domain rejections, 2 for usage and input
/// errors, optionally with a partial report.
struct Failure {
    code: i32,
    message: String,
    report: Option<Value>,
}

impl Failure {
    fn domain(message: impl ToString) -> Self {
        Failure { code: 1, message: message.to_string(), report: None }
    }

    fn usage(message: impl ToString) -> Self {
        Failure { code: 2, message: message.to_string(), report: None }
    }
}

impl From<DocError> for Failure {
    fn from(e: DocError) -> Self {
        match e {
            DocError::Curve(c) => {
                let mut report = header("validate");
                report.insert("validation".into(), validation_error(&c));
                Failure { code: 1, message: c.to_string(), report: Some(Value::Object(report)) }
            }
            other => Failure::usage(other),
        }
    }
}

fn domain<E: std::fmt::Display>(e: E) -> Failure {
    Failure::domain(e)
}

pub fn seed_from(var: Option<&str>) -> Result<u64, String> {
    match var {
        None => Ok(DEFAULT_SEED),
        Some(s) => {
            let s = s.trim();
            let parsed = match s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")) {
                Some(hex) => u64::from_str_radix(&hex.replace('_', ""), 16),
                None => s.parse(),
            };
            parsed.map_err(|_| format!("TROPIC_SEED must be an unsigned integer, got {s:?}"))
        }
    }
}

fn load(path: &Path) -> Result<(TropicalCurve, String), Failure> {
    let text = read_text(path)?;
    Ok((parse_curve(&text)?, text))
}

fn load_constraints(path: &Path) -> Result<ConstraintSet, Failure> {
    Ok(parse_constraints(&read_text(path)?)?)
}

fn multiplicity_section(curve: &TropicalCurve, set: &ConstraintSet, seed: u64) -> Result<Value, EnumerationError> {
    let m = lattice_multiplicity(curve, set, seed)?;
    let direct = direct_index(curve, set)?;
    Ok(multiplicity_report(curve, &m, direct.as_ref()))
}

fn analyze(curve: &TropicalCurve, set: Option<&ConstraintSet>, seed: u64) -> Result<Value, Failure> {
    let mut r = header("analyze");
    r.insert("validation".into(), validation_ok(curve));
    r.insert("genus".into(), json!(curve.genus()));
    r.insert("degree".into(), degree_report(curve));
    r.insert("bouquets".into(), bouquet_report(curve));
    let h = dual_obstruction_basis(curve).map_err(domain)?;
    r.insert("dimensions".into(), dimensions_report(curve, h.dimension()));
    r.insert("profile".into(), profile_report(curve));
    r.insert("obstruction".into(), obstruction_report(curve, &h));
    let verdict = smoothability_verdict(curve, seed).map_err(domain)?;
    r.insert("smoothability".into(), verdict_report(curve, &verdict));
    r.insert("weights".into(), weights_report(curve));
    if let Some(set) = set {
        let section = match multiplicity_section(curve, set, seed) {
            Ok(v) => v,
            Err(e) => json!({"error": e.to_string()}),
        };
        r.insert("multiplicity".into(), section);
    }
    Ok(Value::Object(r))
}

fn kuranishi(doc: &PrelogDocument, curve: Option<&TropicalCurve>, seed: u64) -> Result<Value, Failure> {
    let mut r = header("kuranishi");
    let configs = doc.configs()?;
    let mut contributions = Vec::new();
    for c in &configs {
        contributions.push(leading_contribution(c).map_err(domain)?);
    }
    r.insert("contributions".into(), Value::Array(contributions.iter().map(contribution_report).collect()));
    if let Some(curve) = curve {
        let h = dual_obstruction_basis(curve).map_err(domain)?;
        if !configs.is_empty() {
            let table = pair_with_h(&contributions, &h);
            r.insert(
                "pairing".into(),
                json!({
                    "minimal_order": table.minimal_order.as_ref().map(is),
                    "vanishes": table.vanishes,
                    "by_order": table.by_order.iter().map(|(o, s)| json!({"order": is(o), "sums": rats(s)})).collect::<Vec<_>>(),
                }),
            );
        }
        let system = leading_form_system(curve, &doc.base()?, seed).map_err(domain)?;
        r.insert("form_system".into(), form_system_report(curve, &system));
    }
    if let Some(t) = &doc.tropicalization {
        let c = match (&t.constant, curve) {
            (Some(c), _) => c.value().ok_or_else(|| Failure::usage("malformed tropicalization constant"))?,
            (None, Some(curve)) if contributions.len() >= 2 => {
                let h = dual_obstruction_basis(curve).map_err(domain)?;
                let seg = contributions[0].segment.unwrap_or(0);
                let cov = h.basis.first().and_then(|b| b.get(seg)).ok_or_else(|| Failure::domain("no obstruction covector to pair with"))?;
                matching_constant(cov, &contributions[0].direction, &contributions[1].direction)
                    .ok_or_else(|| Failure::domain("first direction pairs to zero"))?
            }
            _ => return Err(Failure::usage("tropicalization needs `constant`, or a curve and two paths")),
        };
        let (p, q) = (chain(&t.chains[0])?, chain(&t.chains[1])?);
        let mut rows = Vec::new();
        for &tau in &t.taus {
            let (res, dp, dq) = edge_length_residual(&p, &q, &c, tau).map_err(domain)?;
            rows.push(json!({"tau": fs(tau), "d_p": fs(dp), "d_q": fs(dq), "gap": fs(dp - dq), "residual": fs(res)}));
        }
        r.insert("tropicalization".into(), json!({"constant": rs(&c), "samples": rows}));
    }
    Ok(Value::Object(r))
}

fn count(manifest_path: &Path, set: &ConstraintSet, seed: u64) -> Result<Value, Failure> {
    let manifest: Manifest = parse_json(&read_text(manifest_path)?)?;
    let dir = manifest_path.parent().unwrap_or_else(|| Path::new("."));
    let mut curves = Vec::new();
    for c in &manifest.curves {
        curves.push(load(&dir.join(c))?.0);
    }
    let report = tropical_count(&curves, set, seed);
    let mut r = header("count");
    r.insert("total".into(), is(&report.total));
    r.insert(
        "entries".into(),
        Value::Array(
            manifest
                .curves
                .iter()
                .zip(&report.entries)
                .zip(&curves)
                .map(|((name, e), curve)| {
                    json!({
                        "curve": name,
                        "verdict": e.verdict,
                        "contribution": is(&e.contribution),
                        "multiplicity": e.multiplicity.as_ref().map(|m| multiplicity_report(curve, m, None)),
                        "excluded": e.excluded,
                    })
                })
                .collect(),
        ),
    );
    Ok(Value::Object(r))
}

fn execute(command: &Command, seed: u64) -> Result<Value, Failure> {
    match command {
        Command::Validate { curve, .. } => {
            let (c, _) = load(curve)?;
            let mut r = header("validate");
            r.insert("validation".into(), validation_ok(&c));
            r.insert("profile".into(), profile_report(&c));
            Ok(Value::Object(r))
        }
        Command::Analyze { curve, constraints, .. } => {
            let (c, _) = load(curve)?;
            let set = constraints.as_deref().map(load_constraints).transpose()?;
            analyze(&c, set.as_ref(), seed)
        }
        Command::Obstruction { curve, .. } => {
            let (c, _) = load(curve)?;
            let h = dual_obstruction_basis(&c).map_err(domain)?;
            let mut r = header("obstruction");
            r.insert("obstruction".into(), obstruction_report(&c, &h));
            Ok(Value::Object(r))
        }
        Command::Wellspaced { curve, .. } => {
            let (c, _) = load(curve)?;
            let v = smoothability_verdict(&c, seed).map_err(domain)?;
            let mut r = header("wellspaced");
            r.insert("smoothability".into(), verdict_report(&c, &v));
            Ok(Value::Object(r))
        }
        Command::Kuranishi { prelog, curve, .. } => {
            let doc: PrelogDocument = parse_json(&read_text(prelog)?)?;
            let c = curve.as_deref().map(load).transpose()?.map(|(c, _)| c);
            kuranishi(&doc, c.as_ref(), seed)
        }
        Command::Multiplicity { curve, constraints, .. } => {
            let (c, _) = load(curve)?;
            let set = load_constraints(constraints)?;
            let matched = match_constraints(&c, &set).map_err(domain)?;
            let required = required_codimension(&c).map_err(domain)?;
            let mut r = header("multiplicity");
            r.insert("required_codimension".into(), json!(required));
            r.insert("total_codimension".into(), json!(set.total_codimension()));
            r.insert("matched".into(), json!(matched.matched));
            let section = multiplicity_section(&c, &set, seed).map_err(|e| {
                let mut partial = r.clone();
                partial.insert("error".into(), json!(e.to_string()));
                if let EnumerationError::RankMismatch { witness, .. } = &e {
                    partial.insert("kernel_witness".into(), json!(witness));
                }
                Failure { code: 1, message: e.to_string(), report: Some(Value::Object(partial)) }
            })?;
            r.insert("multiplicity".into(), section);
            Ok(Value::Object(r))
        }
        Command::Count { manifest, constraints, .. } => count(manifest, &load_constraints(constraints)?, seed),
    }
}

/// Runs one command. `argv` includes the program name. `seed_var` is the
/// value of `TROPIC_SEED`, if set.
pub fn run_command<I, T>(argv: I, seed_var: Option<&str>) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            return if code == 0 {
                Outcome { code, stdout: text, stderr: String::new() }
            } else {
                Outcome { code, stdout: String::new(), stderr: text }
            };
        }
    };
    let seed = match seed_from(seed_var) {
        Ok(s) => s,
        Err(m) => return Outcome { code: 2, stdout: String::new(), stderr: format!("error: {m}\n") },
    };
    let (code, report, stderr) = match execute(&cli.command, seed) {
        Ok(v) => (0, Some(v), String::new()),
        Err(f) => (f.code, f.report, format!("error: {}\n", f.message)),
    };
    let body = report.map(|v| to_pretty(&v)).unwrap_or_default();
    match &cli.command.common().output {
        Some(path) if !body.is_empty() => match std::fs::write(path, &body) {
            Ok(()) => Outcome { code, stdout: String::new(), stderr },
            Err(e) => Outcome { code: 2, stdout: String::new(), stderr: format!("{stderr}error: cannot write {}: {e}\n", path.display()) },
        },
        _ => Outcome { code, stdout: body, stderr },
    }
}
