//! Scoring of structured benchmark assessments and their aggregation.
//!
//! All scores are exact rationals. The one transcendental step, the log2 in
//! the state-space score, is computed in double precision unless `diff + 1`
//! is a power of two, where it is exact.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value as Json};
use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

pub const SCHEMA_VERSION: u32 = 1;

pub type Q = BigRational;

#[derive(Debug, thiserror::Error)]
pub enum MetricsError {
    #[error("row {row}: field `{field}`: {message}")]
    Field { row: usize, field: String, message: String },
    #[error("row {row}: {message}")]
    Row { row: usize, message: String },
    #[error("{0}")]
    Format(String),
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("score table is empty")]
    EmptyTable,
    #[error("duplicate assessment of {metric} for model {model}, question {question}")]
    Duplicate { model: String, question: String, metric: MetricKind },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricKind {
    StateSpace,
    OutcomePrecision,
    DirectionAccuracy,
    CoverageCompleteness,
    ControlFlow,
    EdgeCase,
    DecisionBoundary,
}

impl MetricKind {
    pub const ALL: [MetricKind; 7] = [
        MetricKind::StateSpace,
        MetricKind::OutcomePrecision,
        MetricKind::DirectionAccuracy,
        MetricKind::CoverageCompleteness,
        MetricKind::ControlFlow,
        MetricKind::EdgeCase,
        MetricKind::DecisionBoundary,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MetricKind::StateSpace => "state_space",
            MetricKind::OutcomePrecision => "outcome_precision",
            MetricKind::DirectionAccuracy => "direction_accuracy",
            MetricKind::CoverageCompleteness => "coverage_completeness",
            MetricKind::ControlFlow => "control_flow",
            MetricKind::EdgeCase => "edge_case",
            MetricKind::DecisionBoundary => "decision_boundary",
        }
    }

    pub fn parse(s: &str) -> Option<MetricKind> {
        MetricKind::ALL.into_iter().find(|k| k.name() == s)
    }
}

impl fmt::Display for MetricKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PrecisionLevel {
    Exact,
    OperatorApprox,
    ValueApprox,
    Qualitative,
    Incorrect,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DirectionLevel {
    Correct,
    CorrectFlawedReasoning,
    Partial,
    IncorrectSomeFactors,
    Incorrect,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Grade {
    Correct,
    Partial,
    Incorrect,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Payload {
    StateSpace { estimate: Option<u64>, truth: u64 },
    OutcomePrecision { levels: Vec<PrecisionLevel> },
    DirectionAccuracy { level: DirectionLevel },
    CoverageCompleteness {
        explicit: Option<u64>,
        enumerated: Option<u64>,
        categories: Option<(u64, u64)>,
        qualitative_ack: bool,
        truth: u64,
    },
    /// Precedence, branching, short-circuit and override grades.
    ControlFlow { aspects: [Grade; 4] },
    EdgeCase { identified: u64, truth: u64 },
    DecisionBoundary { identified: u64, truth: u64 },
    /// A score that was already computed upstream, e.g. an evaluator average.
    Scored { kind: MetricKind, value: Q },
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricAssessment {
    pub payload: Payload,
    pub applicable: bool,
}

impl MetricAssessment {
    pub fn new(payload: Payload) -> Self {
        MetricAssessment { payload, applicable: true }
    }

    pub fn kind(&self) -> MetricKind {
        match &self.payload {
            Payload::StateSpace { .. } => MetricKind::StateSpace,
            Payload::OutcomePrecision { .. } => MetricKind::OutcomePrecision,
            Payload::DirectionAccuracy { .. } => MetricKind::DirectionAccuracy,
            Payload::CoverageCompleteness { .. } => MetricKind::CoverageCompleteness,
            Payload::ControlFlow { .. } => MetricKind::ControlFlow,
            Payload::EdgeCase { .. } => MetricKind::EdgeCase,
            Payload::DecisionBoundary { .. } => MetricKind::DecisionBoundary,
            Payload::Scored { kind, .. } => *kind,
        }
    }

    /// Checks the payload invariants, naming the offending field.
    pub fn validate(&self) -> Result<(), (String, String)> {
        if !self.applicable {
            return Ok(());
        }
        let positive = |f: &str, v: u64| if v == 0 { Err((f.to_string(), "must be positive".to_string())) } else { Ok(()) };
        match &self.payload {
            Payload::StateSpace { truth, .. }
            | Payload::EdgeCase { truth, .. }
            | Payload::DecisionBoundary { truth, .. }
            | Payload::CoverageCompleteness { truth, .. } => positive("truth", *truth)?,
            Payload::OutcomePrecision { levels } if levels.is_empty() => {
                return Err(("levels".into(), "at least one level is required".into()))
            }
            Payload::Scored { value, .. } if value.is_negative() || *value > Q::one() => {
                return Err(("score".into(), "must lie in [0, 1]".into()))
            }
            _ => {}
        }
        if let Payload::CoverageCompleteness { categories: Some((_, total)), .. } = &self.payload {
            positive("categories.total", *total)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MetricScore {
    Value(Q),
    NotApplicable,
}

impl MetricScore {
    pub fn value(&self) -> Option<&Q> {
        match self {
            MetricScore::Value(q) => Some(q),
            MetricScore::NotApplicable => None,
        }
    }

    pub fn to_f64(&self) -> Option<f64> {
        self.value().and_then(|q| q.to_f64())
    }
}

fn q(n: i64, d: i64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

fn ratio_capped(n: u64, d: u64) -> Q {
    if n >= d {
        Q::one()
    } else {
        q(n as i64, d as i64)
    }
}

/// `1 / (1 + log2(diff + 1))`.
pub fn state_space_score(diff: u64) -> Q {
    let n = diff as u128 + 1;
    if n.is_power_of_two() {
        return q(1, 1 + n.trailing_zeros() as i64);
    }
    let s = 1.0 / (1.0 + (n as f64).log2());
    Q::from_float(s).expect("finite score")
}

pub fn score_assessment(a: &MetricAssessment) -> MetricScore {
    if !a.applicable {
        return MetricScore::NotApplicable;
    }
    let v = match &a.payload {
        Payload::StateSpace { estimate: None, .. } => Q::zero(),
        Payload::StateSpace { estimate: Some(e), truth } => state_space_score(e.abs_diff(*truth)),
        Payload::OutcomePrecision { levels } => {
            let sum = levels.iter().fold(Q::zero(), |acc, l| {
                acc + match l {
                    PrecisionLevel::Exact => q(1, 1),
                    PrecisionLevel::OperatorApprox => q(4, 5),
                    PrecisionLevel::ValueApprox => q(1, 2),
                    PrecisionLevel::Qualitative => q(1, 5),
                    PrecisionLevel::Incorrect => q(0, 1),
                }
            });
            sum / BigInt::from(levels.len())
        }
        Payload::DirectionAccuracy { level } => match level {
            DirectionLevel::Correct => q(1, 1),
            DirectionLevel::CorrectFlawedReasoning => q(3, 4),
            DirectionLevel::Partial => q(1, 2),
            DirectionLevel::IncorrectSomeFactors => q(1, 4),
            DirectionLevel::Incorrect => q(0, 1),
        },
        Payload::CoverageCompleteness { explicit, enumerated, categories, qualitative_ack, truth } => {
            let mut best = Q::zero();
            let mut consider = |c: Q| {
                if c > best {
                    best = c;
                }
            };
            if let Some(n) = explicit {
                consider(ratio_capped(*n, *truth));
            }
            if let Some(n) = enumerated {
                consider(ratio_capped(*n, *truth));
            }
            if let Some((i, t)) = categories {
                consider(ratio_capped(*i, *t));
            }
            if *qualitative_ack {
                consider(q(1, 4));
            }
            best
        }
        Payload::ControlFlow { aspects } => {
            let halves: i64 = aspects
                .iter()
                .map(|g| match g {
                    Grade::Correct => 2,
                    Grade::Partial => 1,
                    Grade::Incorrect => 0,
                })
                .sum();
            q(halves, 8)
        }
        Payload::EdgeCase { identified, truth } | Payload::DecisionBoundary { identified, truth } => {
            ratio_capped(*identified, *truth)
        }
        Payload::Scored { value, .. } => value.clone(),
    };
    MetricScore::Value(v)
}

/// Parses a plain decimal literal such as `0.222`, `-3` or `1.5e-2` exactly.
pub fn parse_decimal(s: &str) -> Option<Q> {
    let s = s.trim();
    let (mantissa, exp) = match s.find(['e', 'E']) {
        Some(i) => (&s[..i], s[i + 1..].parse::<i32>().ok()?),
        None => (s, 0),
    };
    let (neg, digits) = match mantissa.strip_prefix('-') {
        Some(r) => (true, r),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int, frac) = digits.split_once('.').unwrap_or((digits, ""));
    if int.is_empty() && frac.is_empty() || !int.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) {
        return None;
    }
    let n: BigInt = format!("{int}{frac}").parse().ok()?;
    let scale = exp - frac.len() as i32;
    let ten = BigInt::from(10);
    let mut r = if scale >= 0 {
        Q::from_integer(n * num_traits::pow(ten, scale as usize))
    } else {
        Q::new(n, num_traits::pow(ten, (-scale) as usize))
    };
    if neg {
        r = -r;
    }
    Some(r)
}

/// Rounds to `places` decimals, ties to even.
pub fn round_half_even(x: &Q, places: u32) -> Q {
    let scale = num_traits::pow(BigInt::from(10), places as usize);
    let y = x * Q::from_integer(scale.clone());
    let fl = y.floor();
    let rem = &y - &fl;
    let half = q(1, 2);
    let mut n = fl.to_integer();
    if rem > half || (rem == half && n.is_odd()) {
        n += 1;
    }
    Q::new(n, scale)
}

/// Exact decimal text of a rational with a terminating expansion of at most
/// `places` digits after rounding.
pub fn decimal_text(x: &Q, places: u32) -> String {
    let r = round_half_even(x, places);
    let scale = num_traits::pow(BigInt::from(10), places as usize);
    let n = (r * Q::from_integer(scale.clone())).to_integer();
    let neg = n.is_negative();
    let (i, f) = n.abs().div_rem(&scale);
    let mut f = format!("{:0>width$}", f.to_string(), width = places as usize);
    while f.len() > 1 && f.ends_with('0') {
        f.pop();
    }
    format!("{}{}.{}", if neg { "-" } else { "" }, i, f)
}

fn decimal_json(x: &Q) -> Json {
    let text = decimal_text(x, 3);
    Json::Number(text.parse::<f64>().ok().and_then(serde_json::Number::from_f64).expect("finite"))
}

#[derive(Debug, Clone, PartialEq)]
pub struct AssessmentRow {
    pub model: String,
    pub question: String,
    pub assessment: MetricAssessment,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoreRow {
    pub model: String,
    pub question: String,
    pub scores: BTreeMap<MetricKind, MetricScore>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ScoreTable {
    pub rows: Vec<ScoreRow>,
}

impl ScoreTable {
    /// Scores every assessment, one row per (model, question). Metrics
    /// without an assessment are recorded as not applicable.
    pub fn from_assessments(rows: &[AssessmentRow]) -> Result<ScoreTable, MetricsError> {
        let mut by_key: BTreeMap<(String, String), BTreeMap<MetricKind, MetricScore>> = BTreeMap::new();
        let mut order = Vec::new();
        for r in rows {
            let key = (r.model.clone(), r.question.clone());
            let entry = by_key.entry(key.clone()).or_insert_with(|| {
                order.push(key.clone());
                MetricKind::ALL.iter().map(|k| (*k, MetricScore::NotApplicable)).collect()
            });
            let kind = r.assessment.kind();
            let slot = entry.get_mut(&kind).expect("all kinds present");
            if *slot != MetricScore::NotApplicable {
                return Err(MetricsError::Duplicate { model: r.model.clone(), question: r.question.clone(), metric: kind });
            }
            *slot = score_assessment(&r.assessment);
        }
        let rows = order
            .into_iter()
            .map(|k| {
                let scores = by_key.remove(&k).expect("key recorded");
                ScoreRow { model: k.0, question: k.1, scores }
            })
            .collect();
        Ok(ScoreTable { rows })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelSummary {
    pub model: String,
    pub overall: Option<Q>,
    pub per_metric: BTreeMap<MetricKind, Q>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricSummary {
    pub kind: MetricKind,
    pub count: usize,
    pub mean: Option<Q>,
    pub median: Option<Q>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub models: Vec<ModelSummary>,
    pub metrics: Vec<MetricSummary>,
}

fn mean(xs: &[Q]) -> Option<Q> {
    if xs.is_empty() {
        return None;
    }
    let sum = xs.iter().fold(Q::zero(), |a, b| a + b);
    Some(sum / BigInt::from(xs.len()))
}

fn median(xs: &[Q]) -> Option<Q> {
    if xs.is_empty() {
        return None;
    }
    let mut v = xs.to_vec();
    v.sort();
    let n = v.len();
    Some(if n % 2 == 1 { v[n / 2].clone() } else { (&v[n / 2 - 1] + &v[n / 2]) / BigInt::from(2) })
}

pub fn aggregate_scores(t: &ScoreTable) -> Result<Report, MetricsError> {
    if t.rows.is_empty() {
        return Err(MetricsError::EmptyTable);
    }
    let mut per_model: BTreeMap<&str, BTreeMap<MetricKind, Vec<Q>>> = BTreeMap::new();
    let mut per_metric: BTreeMap<MetricKind, Vec<Q>> = BTreeMap::new();
    for row in &t.rows {
        let m = per_model.entry(&row.model).or_default();
        for (k, s) in &row.scores {
            if let Some(v) = s.value() {
                m.entry(*k).or_default().push(v.clone());
                per_metric.entry(*k).or_default().push(v.clone());
            }
        }
    }
    let models = per_model
        .into_iter()
        .map(|(model, ms)| {
            let per_metric: BTreeMap<MetricKind, Q> =
                ms.iter().map(|(k, xs)| (*k, mean(xs).expect("non-empty"))).collect();
            let means: Vec<Q> = per_metric.values().cloned().collect();
            ModelSummary { model: model.to_string(), overall: mean(&means), per_metric }
        })
        .collect();
    let metrics = MetricKind::ALL
        .iter()
        .map(|k| {
            let xs = per_metric.get(k).map(Vec::as_slice).unwrap_or(&[]);
            MetricSummary { kind: *k, count: xs.len(), mean: mean(xs), median: median(xs) }
        })
        .collect();
    Ok(Report { models, metrics })
}

impl Report {
    pub fn model(&self, id: &str) -> Option<&ModelSummary> {
        self.models.iter().find(|m| m.model == id)
    }

    pub fn metric(&self, k: MetricKind) -> &MetricSummary {
        self.metrics.iter().find(|m| m.kind == k).expect("all kinds summarized")
    }

    /// The overall mean as emitted: rounded half-even to 3 decimals.
    pub fn overall_rounded(&self, id: &str) -> Option<Q> {
        self.model(id)?.overall.as_ref().map(|x| round_half_even(x, 3))
    }

    pub fn to_json(&self) -> Json {
        let opt = |x: &Option<Q>| x.as_ref().map(decimal_json).unwrap_or(Json::Null);
        let models: Vec<Json> = self
            .models
            .iter()
            .map(|m| {
                let per: Map<String, Json> =
                    m.per_metric.iter().map(|(k, v)| (k.name().to_string(), decimal_json(v))).collect();
                json!({"model": m.model, "overall": opt(&m.overall), "metrics": per})
            })
            .collect();
        let metrics: Vec<Json> = self
            .metrics
            .iter()
            .map(|m| json!({"metric": m.kind.name(), "count": m.count, "mean": opt(&m.mean), "median": opt(&m.median)}))
            .collect();
        json!({"schema_version": SCHEMA_VERSION, "models": models, "metrics": metrics})
    }

    /// One line per model and metric, plus an `overall` line per model.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["model", "metric", "mean", "median"]).expect("in-memory write");
        let txt = |x: &Option<Q>| x.as_ref().map(|v| decimal_text(v, 3)).unwrap_or_default();
        for m in &self.models {
            for (k, v) in &m.per_metric {
                w.write_record([m.model.as_str(), k.name(), &decimal_text(v, 3), ""]).expect("in-memory write");
            }
            w.write_record([m.model.as_str(), "overall", &txt(&m.overall), ""]).expect("in-memory write");
        }
        for m in &self.metrics {
            w.write_record(["*", m.kind.name(), &txt(&m.mean), &txt(&m.median)]).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
    }
}

// ---- assessment file loading ----

struct RowCtx<'a> {
    row: usize,
    obj: &'a Map<String, Json>,
}

impl RowCtx<'_> {
    fn err(&self, field: &str, message: impl Into<String>) -> MetricsError {
        MetricsError::Field { row: self.row, field: field.into(), message: message.into() }
    }

    fn string(&self, field: &str) -> Result<String, MetricsError> {
        match self.obj.get(field) {
            Some(Json::String(s)) => Ok(s.clone()),
            Some(_) => Err(self.err(field, "expected a string")),
            None => Err(self.err(field, "missing")),
        }
    }

    fn count_opt(&self, field: &str) -> Result<Option<u64>, MetricsError> {
        match self.obj.get(field) {
            None | Some(Json::Null) => Ok(None),
            Some(Json::Number(n)) => match (n.as_u64(), n.as_i64()) {
                (Some(v), _) => Ok(Some(v)),
                (None, Some(_)) => Err(self.err(field, "must be non-negative")),
                _ => Err(self.err(field, "expected an integer count")),
            },
            Some(_) => Err(self.err(field, "expected an integer count")),
        }
    }

    fn count(&self, field: &str) -> Result<u64, MetricsError> {
        self.count_opt(field)?.ok_or_else(|| self.err(field, "missing"))
    }

    fn flag(&self, field: &str) -> Result<bool, MetricsError> {
        match self.obj.get(field) {
            None => Ok(false),
            Some(Json::Bool(b)) => Ok(*b),
            Some(_) => Err(self.err(field, "expected a boolean")),
        }
    }

    fn level<T: Copy>(&self, field: &str, s: &Json, table: &[(&str, T)]) -> Result<T, MetricsError> {
        let name = s.as_str().ok_or_else(|| self.err(field, "expected a string level"))?;
        table.iter().find(|(n, _)| *n == name).map(|(_, v)| *v).ok_or_else(|| {
            let allowed: Vec<&str> = table.iter().map(|(n, _)| *n).collect();
            self.err(field, format!("unknown level `{name}`, expected one of {}", allowed.join(", ")))
        })
    }

    fn field(&self, field: &str) -> Result<&Json, MetricsError> {
        self.obj.get(field).ok_or_else(|| self.err(field, "missing"))
    }
}

const PRECISION: &[(&str, PrecisionLevel)] = &[
    ("exact", PrecisionLevel::Exact),
    ("operator_approx", PrecisionLevel::OperatorApprox),
    ("value_approx", PrecisionLevel::ValueApprox),
    ("qualitative", PrecisionLevel::Qualitative),
    ("incorrect", PrecisionLevel::Incorrect),
];

const DIRECTION: &[(&str, DirectionLevel)] = &[
    ("correct", DirectionLevel::Correct),
    ("correct_flawed_reasoning", DirectionLevel::CorrectFlawedReasoning),
    ("partial", DirectionLevel::Partial),
    ("incorrect_some_factors", DirectionLevel::IncorrectSomeFactors),
    ("incorrect", DirectionLevel::Incorrect),
];

const GRADES: &[(&str, Grade)] = &[("correct", Grade::Correct), ("partial", Grade::Partial), ("incorrect", Grade::Incorrect)];

const ASPECTS: [&str; 4] = ["precedence", "branching", "short_circuit", "override"];

fn parse_row(row: usize, j: &Json) -> Result<AssessmentRow, MetricsError> {
    let obj = j.as_object().ok_or(MetricsError::Row { row, message: "expected an object".into() })?;
    let c = RowCtx { row, obj };
    let model = c.string("model")?;
    let question = c.string("question")?;
    let metric = c.string("metric")?;
    let kind = MetricKind::parse(&metric).ok_or_else(|| c.err("metric", format!("unknown metric `{metric}`")))?;
    let applicable = !c.flag("not_applicable")?;
    let payload = if let Some(s) = obj.get("score") {
        let text = match s {
            Json::Number(n) => n.to_string(),
            Json::String(s) => s.clone(),
            _ => return Err(c.err("score", "expected a decimal number")),
        };
        let value = parse_decimal(&text).ok_or_else(|| c.err("score", format!("not a decimal: {text}")))?;
        Payload::Scored { kind, value }
    } else if !applicable {
        // Payload fields of a not-applicable row are not required.
        Payload::Scored { kind, value: Q::zero() }
    } else {
        match kind {
            MetricKind::StateSpace => Payload::StateSpace { estimate: c.count_opt("estimate")?, truth: c.count("truth")? },
            MetricKind::OutcomePrecision => {
                let arr = c.field("levels")?.as_array().ok_or_else(|| c.err("levels", "expected an array"))?;
                let levels = arr.iter().map(|l| c.level("levels", l, PRECISION)).collect::<Result<_, _>>()?;
                Payload::OutcomePrecision { levels }
            }
            MetricKind::DirectionAccuracy => Payload::DirectionAccuracy { level: c.level("level", c.field("level")?, DIRECTION)? },
            MetricKind::CoverageCompleteness => {
                let categories = match obj.get("categories") {
                    None | Some(Json::Null) => None,
                    Some(Json::Object(cat)) => {
                        let cc = RowCtx { row, obj: cat };
                        let id = cc.count("identified").map_err(|_| c.err("categories.identified", "expected a non-negative count"))?;
                        let total = cc.count("total").map_err(|_| c.err("categories.total", "expected a non-negative count"))?;
                        Some((id, total))
                    }
                    Some(_) => return Err(c.err("categories", "expected an object")),
                };
                Payload::CoverageCompleteness {
                    explicit: c.count_opt("explicit")?,
                    enumerated: c.count_opt("enumerated")?,
                    categories,
                    qualitative_ack: c.flag("qualitative_ack")?,
                    truth: c.count("truth")?,
                }
            }
            MetricKind::ControlFlow => {
                let mut aspects = [Grade::Incorrect; 4];
                for (slot, name) in aspects.iter_mut().zip(ASPECTS) {
                    *slot = c.level(name, c.field(name)?, GRADES)?;
                }
                Payload::ControlFlow { aspects }
            }
            MetricKind::EdgeCase => Payload::EdgeCase { identified: c.count("identified")?, truth: c.count("truth")? },
            MetricKind::DecisionBoundary => {
                Payload::DecisionBoundary { identified: c.count("identified")?, truth: c.count("truth")? }
            }
        }
    };
    let assessment = MetricAssessment { payload, applicable };
    assessment.validate().map_err(|(f, m)| c.err(&f, m))?;
    Ok(AssessmentRow { model, question, assessment })
}

/// Parses assessment JSON: either a bare array of rows or an object with
/// `schema_version` and `rows`.
pub fn parse_assessments(text: &str) -> Result<Vec<AssessmentRow>, MetricsError> {
    let j: Json = serde_json::from_str(text)
        .map_err(|e| MetricsError::Format(format!("line {}, column {}: {e}", e.line(), e.column())))?;
    let rows = match &j {
        Json::Array(a) => a,
        Json::Object(o) => {
            match o.get("schema_version").and_then(Json::as_u64) {
                Some(v) if v == SCHEMA_VERSION as u64 => {}
                Some(v) => return Err(MetricsError::Format(format!("unsupported schema_version {v}"))),
                None => return Err(MetricsError::Format("missing schema_version".into())),
            }
            o.get("rows").and_then(Json::as_array).ok_or(MetricsError::Format("missing `rows` array".into()))?
        }
        _ => return Err(MetricsError::Format("expected an array of rows or an object with `rows`".into())),
    };
    rows.iter().enumerate().map(|(i, r)| parse_row(i, r)).collect()
}

pub fn load_assessments(path: &Path) -> Result<Vec<AssessmentRow>, MetricsError> {
    let text = std::fs::read_to_string(path)
        .map_err(|source| MetricsError::Io { path: path.display().to_string(), source })?;
    parse_assessments(&text)
}
