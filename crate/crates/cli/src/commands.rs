use crate::{Cli, Command, Model, Search};
use anyhow::Context;
use regionforge_core::decomp::{decompose, DecompError, DecompOptions, DecompResult, RegionStatus};
use regionforge_core::eval::{eval_call, literal_value, replay, EvalError, ReplaySemantics};
use regionforge_core::lang::{admit, parse, parse_expr, DependencyContext, Module};
use regionforge_core::metrics::{aggregate_scores, load_assessments, MetricsError, ScoreTable};
use regionforge_core::testgen::{generate_tests, render_tests, vectors_to_json, TemplateSpec};
use regionforge_core::verify::{find_instance, verify_goal, InstanceResult, Verdict};
use regionforge_project::serve::{serve, ServeOptions};
use regionforge_project::{apply_plan, plan_formalize, ApplyOptions, FormalizationStatus, Metamodel};
use serde_json::{json, Value as Json};
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

pub const SUCCESS: u8 = 0;
pub const FINDING: u8 = 1;
pub const USAGE: u8 = 2;
pub const INTERNAL: u8 = 3;
pub const UNKNOWN: u8 = 4;

enum Failure {
    Usage(String),
    Finding(String),
    Internal(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Internal(e)
    }
}

impl From<DecompError> for Failure {
    fn from(e: DecompError) -> Self {
        Failure::Usage(e.to_string())
    }
}

impl From<EvalError> for Failure {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::UnknownFunction(_) | EvalError::Arity { .. } | EvalError::ArgumentType(_) => {
                Failure::Usage(e.to_string())
            }
            _ => Failure::Finding(format!("evaluation failed: {e}")),
        }
    }
}

struct Outcome {
    code: u8,
    json: Json,
    human: String,
}

impl Outcome {
    fn new(code: u8, json: Json, human: String) -> Self {
        Outcome { code, json, human }
    }
}

pub fn run(cli: &Cli) -> u8 {
    let result = dispatch(cli);
    match result {
        Ok(o) => {
            if cli.json {
                emit(&serde_json::to_string_pretty(&o.json).expect("json output"));
            } else if !o.human.is_empty() {
                emit(&o.human);
            }
            if o.code == FINDING && cli.findings_ok {
                SUCCESS
            } else {
                o.code
            }
        }
        Err(f) => {
            let (code, kind, msg) = match f {
                Failure::Usage(m) => (USAGE, "usage", m),
                Failure::Finding(m) => (FINDING, "finding", m),
                Failure::Internal(e) => (INTERNAL, "internal", format!("{e:#}")),
            };
            eprintln!("error: {msg}");
            if cli.json {
                emit(&json!({"error": msg, "kind": kind}).to_string());
            }
            if code == FINDING && cli.findings_ok {
                SUCCESS
            } else {
                code
            }
        }
    }
}

// A closed pipe (`| head`) is not an error worth reporting.
fn emit(text: &str) {
    let mut out = std::io::stdout().lock();
    let _ = out.write_all(text.as_bytes());
    if !text.ends_with('\n') {
        let _ = out.write_all(b"\n");
    }
    let _ = out.flush();
}

struct Admission {
    status: FormalizationStatus,
    diagnostics: Vec<String>,
    opaque: Vec<String>,
    module: Option<Arc<Module>>,
}

fn status_code(s: FormalizationStatus) -> u8 {
    if s == FormalizationStatus::ErrorDuringValidation {
        FINDING
    } else {
        SUCCESS
    }
}

/// Admits a file on its own, or through its project when it has imports.
fn admission(model: &Model) -> Result<Admission, Failure> {
    let src = std::fs::read_to_string(&model.file)
        .map_err(|e| Failure::Usage(format!("cannot read {}: {e}", model.file.display())))?;
    let name = model.file.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let program = match parse(&name, &src) {
        Ok(p) => p,
        Err(e) => {
            return Ok(Admission {
                status: FormalizationStatus::ErrorDuringValidation,
                diagnostics: vec![e.to_string()],
                opaque: vec![],
                module: None,
            })
        }
    };
    if program.imports().next().is_none() {
        let r = admit(&program, &DependencyContext::default());
        let status = if r.is_admitted() {
            if r.opaque.is_empty() {
                FormalizationStatus::AdmittedTransparent
            } else {
                FormalizationStatus::AdmittedWithOpaqueness
            }
        } else {
            FormalizationStatus::ErrorDuringValidation
        };
        return Ok(Admission {
            status,
            diagnostics: r.diagnostics.iter().map(|d| d.to_string()).collect(),
            opaque: r.opaque,
            module: r.admitted,
        });
    }
    let file = model.file.canonicalize().context("resolving model path")?;
    let root = match &model.root {
        Some(r) => r.canonicalize().with_context(|| format!("resolving root {}", r.display()))?,
        None => file.parent().map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from(".")),
    };
    let rel = file
        .strip_prefix(&root)
        .map_err(|_| Failure::Usage(format!("{} is not under {}", file.display(), root.display())))?
        .components()
        .map(|c| c.as_os_str().to_string_lossy().into_owned())
        .collect::<Vec<_>>()
        .join("/");
    let mut mm = Metamodel::scan(&root).map_err(|e| Failure::Usage(e.to_string()))?;
    let plan = plan_formalize(&mm, Some(&rel)).map_err(|e| Failure::Usage(e.to_string()))?;
    apply_plan(&mut mm, &plan, &ApplyOptions { run_directives: false, ..ApplyOptions::default() })
        .map_err(|e| Failure::Internal(e.into()))?;
    let e = &mm.entries[&rel];
    let opaque = e
        .artifacts
        .as_ref()
        .and_then(|a| a["opaque"].as_array().cloned())
        .unwrap_or_default()
        .iter()
        .filter_map(|o| o.as_str().map(String::from))
        .collect();
    Ok(Admission { status: e.status, diagnostics: e.diagnostics.clone(), opaque, module: e.admitted().cloned() })
}

fn module(model: &Model) -> Result<Arc<Module>, Failure> {
    let a = admission(model)?;
    a.module.ok_or_else(|| Failure::Finding(format!("model does not admit:\n{}", a.diagnostics.join("\n"))))
}

fn options(s: &Search) -> DecompOptions {
    DecompOptions {
        side_condition: s.assuming.clone(),
        basis: s.basis.clone(),
        max_paths: s.max_paths,
        ..DecompOptions::depth(s.depth)
    }
}

fn human_regions(r: &DecompResult) -> String {
    let mut s = format!("{}: {} regions{}\n", r.target, r.regions.len(), if r.exhaustive { "" } else { " (bound exhausted)" });
    for reg in &r.regions {
        let _ = writeln!(s, "\nregion {}{}", reg.id, if reg.status == RegionStatus::BoundExhausted { " [bound exhausted]" } else { "" });
        let _ = writeln!(s, "  constraints:");
        for c in reg.constraint_strings() {
            let _ = writeln!(s, "    {c}");
        }
        let _ = writeln!(s, "  invariant: {}", reg.invariant);
        match &reg.sample {
            Some(b) => {
                let parts: Vec<String> = b.iter().map(|(n, v)| format!("{n} = {v}")).collect();
                let _ = writeln!(s, "  sample: {}", parts.join(", "));
            }
            None => {
                let _ = writeln!(s, "  sample: none ({})", reg.sample_note.as_deref().unwrap_or("unavailable"));
            }
        }
    }
    s
}

fn dispatch(cli: &Cli) -> Result<Outcome, Failure> {
    match &cli.command {
        Command::Admit { model } => {
            let a = admission(model)?;
            let j = json!({
                "schema_version": 1,
                "file": model.file.display().to_string(),
                "status": a.status,
                "opaque": a.opaque,
                "diagnostics": a.diagnostics,
            });
            let mut h = format!("{:?}\n", a.status);
            if !a.opaque.is_empty() {
                let _ = writeln!(h, "opaque: {}", a.opaque.join(", "));
            }
            for d in &a.diagnostics {
                let _ = writeln!(h, "{d}");
            }
            Ok(Outcome::new(status_code(a.status), j, h))
        }
        Command::Eval { model, function, args } => {
            let m = module(model)?;
            let f = m.function(function).ok_or_else(|| Failure::Usage(format!("unknown function {function}")))?;
            if f.params.len() != args.len() {
                return Err(Failure::Usage(format!("{function} takes {} arguments, got {}", f.params.len(), args.len())));
            }
            let mut vals = vec![];
            for ((p, ty), a) in f.params.iter().zip(args) {
                let e = parse_expr(a).map_err(|e| Failure::Usage(format!("argument {p}: {e}")))?;
                vals.push(literal_value(&m, &e, ty).map_err(|e| Failure::Usage(format!("argument {p}: {e}")))?);
            }
            let v = eval_call(&m, function, &vals)?;
            Ok(Outcome::new(SUCCESS, json!({"schema_version": 1, "value": v.to_json(), "text": v.to_string()}), v.to_string()))
        }
        Command::Decompose { model, function, search } => {
            let m = module(model)?;
            let r = decompose(&m, function, &options(search))?;
            let code = if r.exhaustive { SUCCESS } else { UNKNOWN };
            Ok(Outcome::new(code, r.to_json(), human_regions(&r)))
        }
        Command::Verify { model, goal, search } => {
            let m = module(model)?;
            let v = verify_goal(&m, goal, &options(search))?;
            let mut j = v.to_json();
            let mut h = format!("{}: {}", goal, v.kind());
            let code = match &v {
                Verdict::Proved => SUCCESS,
                Verdict::ProvedUpToBound(d) => {
                    let _ = write!(h, " (unroll depth {d})");
                    SUCCESS
                }
                Verdict::Refuted(cx) => {
                    let rep = replay(&m, goal, cx, ReplaySemantics::Verify);
                    let _ = write!(h, "\ncounterexample:\n  {}\njson: {}\nreplay: {}", cx.pretty().replace('\n', "\n  "), cx.to_json(), rep.message);
                    j["replay"] = serde_json::to_value(&rep).expect("replay report serializes");
                    FINDING
                }
                Verdict::Unknown { reason, .. } => {
                    let _ = write!(h, " ({reason})");
                    UNKNOWN
                }
            };
            Ok(Outcome::new(code, j, h))
        }
        Command::Instance { model, function, search } => {
            let m = module(model)?;
            let r = find_instance(&m, function, &options(search))?;
            let mut h = format!("{}: {}", function, r.kind());
            let code = match &r {
                InstanceResult::Witness(cx) => {
                    let _ = write!(h, "\n  {}\njson: {}", cx.pretty().replace('\n', "\n  "), cx.to_json());
                    SUCCESS
                }
                InstanceResult::NoInstanceUpToBound(_) => FINDING,
                InstanceResult::Unknown { reason, .. } => {
                    let _ = write!(h, " ({reason})");
                    UNKNOWN
                }
            };
            Ok(Outcome::new(code, r.to_json(), h))
        }
        Command::Testgen { model, function, search, template, out } => {
            let m = module(model)?;
            let r = decompose(&m, function, &options(search))?;
            let vs = generate_tests(&r, &m).map_err(|e| Failure::Internal(e.into()))?;
            let t = match template {
                None => TemplateSpec::reference(),
                Some(p) => {
                    let text = std::fs::read_to_string(p)
                        .map_err(|e| Failure::Usage(format!("cannot read template {}: {e}", p.display())))?;
                    TemplateSpec::parse(&text).map_err(|e| Failure::Usage(e.to_string()))?
                }
            };
            let text = render_tests(&vs, &m, &t).map_err(|e| Failure::Usage(e.to_string()))?;
            let human = match out {
                Some(p) => {
                    std::fs::write(p, &text).with_context(|| format!("writing {}", p.display()))?;
                    format!("wrote {} tests to {}", vs.len(), p.display())
                }
                None => text,
            };
            Ok(Outcome::new(SUCCESS, vectors_to_json(&vs), human))
        }
        Command::Scan { root } => {
            let mm = Metamodel::scan(root).map_err(|e| Failure::Usage(e.to_string()))?;
            let mut h = String::new();
            for e in mm.entries.values() {
                let deps: Vec<&str> = e.deps.iter().map(String::as_str).collect();
                let _ = writeln!(h, "{}  {:?}  imports [{}]", e.path, e.status, deps.join(", "));
            }
            Ok(Outcome::new(SUCCESS, mm.status_json(), h))
        }
        Command::Plan { root, target } => {
            let mm = Metamodel::scan(root).map_err(|e| Failure::Usage(e.to_string()))?;
            let plan = plan_formalize(&mm, target.as_deref()).map_err(|e| Failure::Usage(e.to_string()))?;
            let mut h = String::new();
            for (i, t) in plan.tasks.iter().enumerate() {
                let _ = writeln!(h, "{}. {} ({})", i + 1, t.path, serde_json::to_value(t.reason).expect("reason").as_str().unwrap_or(""));
            }
            Ok(Outcome::new(SUCCESS, plan.to_json(), h))
        }
        Command::Formalize { root, target, depth } => {
            let mut mm = Metamodel::scan(root).map_err(|e| Failure::Usage(e.to_string()))?;
            let plan = plan_formalize(&mm, target.as_deref()).map_err(|e| Failure::Usage(e.to_string()))?;
            apply_plan(&mut mm, &plan, &ApplyOptions { depth: *depth, ..ApplyOptions::default() })
                .map_err(|e| Failure::Internal(e.into()))?;
            mm.write_status().map_err(|e| Failure::Internal(e.into()))?;
            let mut h = String::new();
            let mut code = SUCCESS;
            for e in mm.entries.values() {
                let _ = writeln!(h, "{}  {:?}", e.path, e.status);
                for d in &e.diagnostics {
                    let _ = writeln!(h, "    {d}");
                }
                if e.status == FormalizationStatus::ErrorDuringValidation {
                    code = FINDING;
                }
            }
            Ok(Outcome::new(code, mm.status_json(), h))
        }
        Command::Serve { root, poll_interval, debounce_ms, socket, depth } => {
            let opts = ServeOptions {
                debounce: Duration::from_millis(*debounce_ms),
                poll_interval: poll_interval.map(Duration::from_millis),
                socket: socket.clone(),
                apply: ApplyOptions { depth: *depth, ..ApplyOptions::default() },
                ..ServeOptions::default()
            };
            serve(root, opts).map_err(|e| Failure::Usage(e.to_string()))?;
            Ok(Outcome::new(SUCCESS, json!({"stopped": true}), String::new()))
        }
        Command::Score { input, report, csv } => {
            let rows = load_assessments(input).map_err(|e| match e {
                MetricsError::Io { .. } => Failure::Usage(e.to_string()),
                other => Failure::Usage(format!("{}: {other}", input.display())),
            })?;
            let table = ScoreTable::from_assessments(&rows).map_err(|e| Failure::Usage(e.to_string()))?;
            let r = aggregate_scores(&table).map_err(|e| Failure::Usage(e.to_string()))?;
            let j = r.to_json();
            if let Some(p) = report {
                std::fs::write(p, serde_json::to_string_pretty(&j).expect("report json"))
                    .with_context(|| format!("writing {}", p.display()))?;
            }
            if let Some(p) = csv {
                std::fs::write(p, r.to_csv()).with_context(|| format!("writing {}", p.display()))?;
            }
            let mut h = String::new();
            for m in &j["models"].as_array().cloned().unwrap_or_default() {
                let _ = writeln!(h, "{}  overall {}", m["model"].as_str().unwrap_or(""), m["overall"]);
            }
            Ok(Outcome::new(SUCCESS, j, h))
        }
    }
}
