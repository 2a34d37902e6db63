//! Test generation from decomposition regions and template rendering.

use crate::decomp::{DecompResult, Invariant};
use crate::eval::{eval_call, Value};
use crate::lang::ast::{bare, Ty};
use crate::lang::module::{Module, TypeKind};
use num_traits::Signed;
use serde::Serialize;
use serde_json::{json, Map, Value as Json};

pub const SCHEMA_VERSION: u32 = 1;
const REFERENCE_TEMPLATE: &str = include_str!("templates/python.tmpl");

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum TestgenError {
    #[error("stale decomposition: produced from module {found}, current module is {expected}")]
    Stale { expected: String, found: String },
    #[error("evaluation of {name} failed: {message}")]
    Eval { name: String, message: String },
    #[error("{name}: evaluator returned {actual} but the region invariant is {invariant}")]
    Disagreement { name: String, actual: String, invariant: String },
    #[error("missing placeholder: {0}")]
    MissingPlaceholder(String),
    #[error("template error: {0}")]
    Template(String),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TestVector {
    pub name: String,
    pub target: String,
    pub region: String,
    #[serde(serialize_with = "ser_binding")]
    pub inputs: Vec<(String, Value)>,
    #[serde(serialize_with = "ser_opt_value")]
    pub expected: Option<Value>,
    pub result_type: String,
    pub constraints: Vec<String>,
    pub invariant: String,
    pub executable: bool,
    pub skip_reason: Option<String>,
}

fn ser_binding<S: serde::Serializer>(b: &[(String, Value)], s: S) -> Result<S::Ok, S::Error> {
    let mut o = Map::new();
    for (n, v) in b {
        o.insert(n.clone(), v.to_json());
    }
    Json::Object(o).serialize(s)
}

fn ser_opt_value<S: serde::Serializer>(v: &Option<Value>, s: S) -> Result<S::Ok, S::Error> {
    v.as_ref().map(Value::to_json).serialize(s)
}

impl TestVector {
    pub fn is_skipped(&self) -> bool {
        self.skip_reason.is_some()
    }

    pub fn args(&self) -> Vec<Value> {
        self.inputs.iter().map(|(_, v)| v.clone()).collect()
    }

    /// The docstring body: name, invariant and constraints.
    pub fn docstring(&self) -> String {
        let mut s = format!("{}\n\n- invariant: {}\n- constraints:", self.name, self.invariant);
        for c in &self.constraints {
            s.push_str("\n    - ");
            s.push_str(c);
        }
        s
    }
}

pub fn vectors_to_json(vs: &[TestVector]) -> Json {
    json!({"schema_version": SCHEMA_VERSION, "vectors": vs})
}

/// One vector per region, named by region-id order. Expected values come
/// from the evaluator, which must agree with concrete region invariants.
pub fn generate_tests(result: &DecompResult, m: &Module) -> Result<Vec<TestVector>, TestgenError> {
    if result.module_hash != m.hash {
        return Err(TestgenError::Stale { expected: m.hash.clone(), found: result.module_hash.clone() });
    }
    let info = m.function(&result.target).ok_or_else(|| TestgenError::Eval {
        name: result.target.clone(),
        message: "target no longer exists".into(),
    })?;
    let mut out = Vec::new();
    for (i, r) in result.regions.iter().enumerate() {
        let name = format!("test_{}", i + 1);
        let mut v = TestVector {
            name: name.clone(),
            target: result.target.clone(),
            region: r.id.clone(),
            inputs: r.sample.clone().unwrap_or_default(),
            expected: None,
            result_type: info.ret.to_string(),
            constraints: r.constraint_strings(),
            invariant: r.invariant.to_string(),
            executable: r.executable,
            skip_reason: None,
        };
        if !r.executable {
            v.skip_reason = Some("non-executable (opaque)".into());
        } else if r.sample.is_none() {
            v.skip_reason = Some(format!("no sample: {}", r.sample_note.as_deref().unwrap_or("unknown")));
        } else {
            let actual = eval_call(m, &info.qname, &v.args())
                .map_err(|e| TestgenError::Eval { name: name.clone(), message: e.to_string() })?;
            if let Invariant::Value(inv) = &r.invariant {
                if *inv != actual {
                    return Err(TestgenError::Disagreement {
                        name,
                        actual: actual.to_string(),
                        invariant: inv.to_string(),
                    });
                }
            }
            v.expected = Some(actual);
        }
        out.push(v);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ValueStyle {
    /// Constructor-call syntax, e.g. `order(0, Standard())`.
    Python,
    /// MML literal syntax.
    Mml,
}

/// A rendering template: named sections with `{placeholder}` substitution.
#[derive(Debug, Clone, PartialEq)]
pub struct TemplateSpec {
    pub style: ValueStyle,
    pub header: String,
    pub record: String,
    pub variant: String,
    pub ctor: String,
    pub test: String,
    pub skip: String,
}

impl TemplateSpec {
    pub fn reference() -> TemplateSpec {
        TemplateSpec::parse(REFERENCE_TEMPLATE).expect("bundled template is valid")
    }

    /// Parses `--- section ---` delimited text.
    pub fn parse(text: &str) -> Result<TemplateSpec, TestgenError> {
        let mut sections: Vec<(String, String)> = Vec::new();
        for line in text.lines() {
            let t = line.trim();
            if let Some(name) = t.strip_prefix("--- ").and_then(|r| r.strip_suffix(" ---")) {
                sections.push((name.trim().to_string(), String::new()));
            } else if let Some((_, body)) = sections.last_mut() {
                body.push_str(line);
                body.push('\n');
            } else if !t.is_empty() {
                return Err(TestgenError::Template(format!("text before the first section: {t}")));
            }
        }
        let get = |n: &str| sections.iter().find(|(k, _)| k == n).map(|(_, b)| b.clone());
        let style = match get("meta").as_deref().map(str::trim) {
            None | Some("style: python") => ValueStyle::Python,
            Some("style: mml") => ValueStyle::Mml,
            Some(other) => return Err(TestgenError::Template(format!("unknown meta: {other}"))),
        };
        let test = get("test").ok_or_else(|| TestgenError::Template("missing section: test".into()))?;
        for p in ["name", "docstring", "call", "expected"] {
            if !test.contains(&format!("{{{p}}}")) {
                return Err(TestgenError::MissingPlaceholder(p.into()));
            }
        }
        Ok(TemplateSpec {
            style,
            header: get("header").unwrap_or_default(),
            record: get("record").unwrap_or_default(),
            variant: get("variant").unwrap_or_default(),
            ctor: get("ctor").unwrap_or_default(),
            test,
            skip: get("skip").unwrap_or_default(),
        })
    }
}

/// Substitutes placeholders; continuation lines of multi-line values take
/// the indentation of the line holding the placeholder.
fn fill(template: &str, vars: &[(&str, String)]) -> String {
    let mut out = String::new();
    for line in template.split_inclusive('\n') {
        let indent: String = line.chars().take_while(|c| *c == ' ' || *c == '\t').collect();
        let mut l = line.to_string();
        for (k, v) in vars {
            let key = format!("{{{k}}}");
            if l.contains(&key) {
                let v = v.replace('\n', &format!("\n{indent}"));
                let v = v.lines().map(|x| if x.trim().is_empty() { "" } else { x }).collect::<Vec<_>>().join("\n");
                l = l.replace(&key, &v);
            }
        }
        out.push_str(&l);
    }
    out
}

fn py_type(t: &Ty) -> String {
    match t {
        Ty::Int => "int".into(),
        Ty::Rat => "Fraction".into(),
        Ty::Bool => "bool".into(),
        Ty::Named(q) => bare(q).to_string(),
        Ty::List(e) => format!("list[{}]", py_type(e)),
        Ty::Tuple(ts) => format!("tuple[{}]", ts.iter().map(py_type).collect::<Vec<_>>().join(", ")),
    }
}

fn type_text(style: ValueStyle, t: &Ty) -> String {
    match style {
        ValueStyle::Python => py_type(t),
        ValueStyle::Mml => t.to_string(),
    }
}

pub fn render_value(style: ValueStyle, v: &Value) -> String {
    if style == ValueStyle::Mml {
        return v.to_string();
    }
    match v {
        Value::Int(n) => n.to_string(),
        Value::Rat(q) if q.is_integer() => format!("Fraction({})", q.numer()),
        Value::Rat(q) => format!("Fraction({}, {})", q.numer(), q.denom()),
        Value::Bool(b) => if *b { "True" } else { "False" }.into(),
        Value::Tuple(vs) => format!("({})", vs.iter().map(|x| render_value(style, x)).collect::<Vec<_>>().join(", ")),
        Value::List(vs) => format!("[{}]", vs.iter().map(|x| render_value(style, x)).collect::<Vec<_>>().join(", ")),
        Value::Record(n, fs) => {
            format!("{n}({})", fs.iter().map(|(_, x)| render_value(style, x)).collect::<Vec<_>>().join(", "))
        }
        Value::Variant(c, args) => {
            format!("{}({})", bare(c), args.iter().map(|x| render_value(style, x)).collect::<Vec<_>>().join(", "))
        }
    }
}

fn negative_free(v: &Value) -> bool {
    !matches!(v, Value::Int(n) if n.is_negative())
}

fn render_call(style: ValueStyle, v: &TestVector) -> String {
    match style {
        ValueStyle::Python => {
            let args: Vec<String> = v.inputs.iter().map(|(n, x)| format!("{n}={}", render_value(style, x))).collect();
            format!("{}({})", v.target, args.join(", "))
        }
        ValueStyle::Mml => {
            let args: Vec<String> = v
                .inputs
                .iter()
                .map(|(_, x)| {
                    let s = x.to_string();
                    if s.contains(' ') || !negative_free(x) {
                        format!("({s})")
                    } else {
                        s
                    }
                })
                .collect();
            format!("{} {}", v.target, args.join(" "))
        }
    }
}

fn render_types(t: &TemplateSpec, m: &Module) -> String {
    let mut out = String::new();
    for q in &m.own {
        let Some(info) = m.types.get(q) else { continue };
        match &info.kind {
            TypeKind::Record(fs) => {
                let fields: Vec<String> = fs.iter().map(|(n, ty)| format!("{n}: {}", type_text(t.style, ty))).collect();
                out.push_str(&fill(&t.record, &[("name", info.name.clone()), ("fields", fields.join("\n"))]));
            }
            TypeKind::Variant(cs) => {
                let mut ctors = String::new();
                for c in cs {
                    let fields: Vec<String> = if c.fields.is_empty() {
                        vec!["pass".into()]
                    } else {
                        c.fields.iter().enumerate().map(|(i, ty)| format!("arg{i}: {}", type_text(t.style, ty))).collect()
                    };
                    ctors.push_str(&fill(&t.ctor, &[("name", c.name.clone()), ("fields", fields.join("\n"))]));
                }
                let union = cs.iter().map(|c| c.name.clone()).collect::<Vec<_>>().join(" | ");
                let ctors = ctors.trim_end_matches('\n').to_string();
                out.push_str(&fill(&t.variant, &[("name", info.name.clone()), ("ctors", ctors), ("union", union)]));
            }
        }
    }
    out
}

/// Renders vectors to source text. Type definitions of `m` precede the
/// tests; an empty vector list renders the header only.
pub fn render_tests(vectors: &[TestVector], m: &Module, template: &TemplateSpec) -> Result<String, TestgenError> {
    let mut out = template.header.clone();
    if vectors.is_empty() {
        return Ok(out);
    }
    out.push_str(&render_types(template, m));
    for v in vectors {
        let doc = v.docstring();
        match (&v.skip_reason, &v.expected) {
            (None, Some(expected)) => out.push_str(&fill(
                &template.test,
                &[
                    ("name", v.name.clone()),
                    ("docstring", doc),
                    ("call", render_call(template.style, v)),
                    ("expected", render_value(template.style, expected)),
                    ("type", v.result_type_text(template.style, m)),
                ],
            )),
            (reason, _) => out.push_str(&fill(
                &template.skip,
                &[
                    ("name", v.name.clone()),
                    ("docstring", doc),
                    ("reason", reason.clone().unwrap_or_else(|| "no expected value".into())),
                ],
            )),
        }
    }
    Ok(out)
}

impl TestVector {
    fn result_type_text(&self, style: ValueStyle, m: &Module) -> String {
        match m.function(&self.target) {
            Some(f) => type_text(style, &f.ret),
            None => self.result_type.clone(),
        }
    }
}
