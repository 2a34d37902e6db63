//! Acceptance report: one PASS/FAIL line per criterion, non-zero exit when
//! any criterion fails.

mod common;

use num_bigint::BigInt;
use num_rational::BigRational as Q;
use regionforge_core::decomp::{classify_input, decompose, DecompOptions, Invariant};
use regionforge_core::eval::{eval_call, literal_value, replay, ReplaySemantics, Value};
use regionforge_core::lang::parse_expr;
use regionforge_core::metrics::{
    aggregate_scores, decimal_text, load_assessments, score_assessment, state_space_score, Grade, MetricAssessment,
    Payload, ScoreTable,
};
use regionforge_core::testgen::generate_tests;
use regionforge_core::verify::{verify_goal, Verdict};
use regionforge_corpus::{example_project, fixture_path, load_model};
use regionforge_project::{
    apply_plan, plan_formalize, plan_reformalization, ApplyOptions, ChangeEvent, FormalizationStatus, Metamodel,
};
use std::collections::BTreeMap;
use std::path::Path;
use std::time::{Duration, Instant};

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

macro_rules! ensure {
    ($c:expr, $($fmt:tt)+) => {
        if !$c {
            return Err(format!($($fmt)+));
        }
    };
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn within(start: Instant, limit: Duration) -> Check {
    let t = start.elapsed();
    ensure!(t < limit, "took {t:.2?}, limit {limit:?}");
    Ok(format!("{t:.2?}"))
}

fn lit(m: &regionforge_core::lang::Module, f: &str, texts: &[&str]) -> Result<Vec<Value>, String> {
    let params = &m.function(f).ok_or(format!("no function {f}"))?.params;
    params
        .iter()
        .zip(texts)
        .map(|((_, ty), t)| literal_value(m, &parse_expr(t).map_err(err)?, ty))
        .collect()
}

fn discount() -> Check {
    let start = Instant::now();
    let m = load_model("discount").map_err(err)?;
    let r = decompose(&m, "discount", &DecompOptions::default()).map_err(err)?;
    ensure!(r.regions.len() == 4, "{} regions", r.regions.len());
    for (text, want) in [("{ amount = 0; customer = Standard }", 0), ("{ amount = 101; customer = Standard }", 10)] {
        let args = lit(&m, "discount", &[text])?;
        let id = classify_input(&m, &r, &args).map_err(err)?.ok_or(format!("{text} in no region"))?;
        let inv = &r.region(&id).unwrap().invariant;
        ensure!(*inv == Invariant::Value(Value::int(want)), "{text}: invariant {inv}, expected {want}");
    }
    let docs: Vec<String> = generate_tests(&r, &m).map_err(err)?.iter().map(|v| v.docstring()).collect();
    for needle in ["not (o.customer = Premium)", "o.amount >= 101"] {
        ensure!(docs.iter().any(|d| d.contains(needle)), "no docstring mentions {needle}");
    }
    let t = within(start, Duration::from_secs(1))?;
    Ok(format!("4 regions, invariants 0 and 10, docstrings ok, {t}"))
}

fn gtt() -> Check {
    let start = Instant::now();
    let m = load_model("gtt").map_err(err)?;
    let v = verify_goal(&m, "no_conflict", &DecompOptions::depth(2)).map_err(err)?;
    let Verdict::Refuted(cx) = &v else { return Err(format!("verdict {}", v.kind())) };
    let rep = replay(&m, "no_conflict", cx, ReplaySemantics::Verify);
    ensure!(rep.confirmed, "replay: {}", rep.message);

    let state = "{ time = 2699; auction_call_duration = 10; auction_interval = 100; \
                 mode = AuctionCallMode 2700; gtt_order = Some { expires_at = 2700 }; \
                 auction_event = NoAuctionEvent; order_event = NoOrderEvent; \
                 market_order_present_after_uncross = true; market_order_extension_period = 1 }";
    let args = lit(&m, "run", &[state, "[Tick; Tick]"])?;
    let fin = eval_call(&m, "run", &args).map_err(err)?;
    let ctor = |f: &str| match fin.field(f) {
        Some(Value::Variant(c, _)) => c.clone(),
        other => format!("{other:?}"),
    };
    ensure!(
        ctor("auction_event") == "Uncrossed" && ctor("order_event") == "Expired",
        "witness ends with {} and {}",
        ctor("auction_event"),
        ctor("order_event")
    );
    let args = lit(&m, "no_conflict", &["[Tick; Tick]", state])?;
    ensure!(eval_call(&m, "no_conflict", &args).map_err(err)? == Value::Bool(false), "witness does not refute");
    let t = within(start, Duration::from_secs(10))?;
    Ok(format!("refuted at depth 2, replay confirmed, reference witness gives Uncrossed and Expired, {t}"))
}

fn netting() -> Check {
    let start = Instant::now();
    let m = load_model("netting").map_err(err)?;
    let v = verify_goal(&m, "efficiency", &DecompOptions::depth(4)).map_err(err)?;
    let Verdict::Refuted(cx) = &v else { return Err(format!("efficiency: {}", v.kind())) };
    let amount = cx.binding[0].1.field("amount").and_then(Value::as_int).cloned();
    ensure!(amount.as_ref().is_some_and(|a| *a < BigInt::from(0)), "efficiency counterexample amount {amount:?}");
    ensure!(replay(&m, "efficiency", cx, ReplaySemantics::Verify).confirmed, "efficiency replay failed");
    let v = verify_goal(&m, "zero_sum", &DecompOptions::depth(4)).map_err(err)?;
    ensure!(v == Verdict::ProvedUpToBound(4), "zero_sum: {v:?}");
    let t = within(start, Duration::from_secs(60))?;

    // Brute force: every trade list of length <= 3 over 3 parties and amounts in [-4, 4].
    let parties = ["PartyA", "PartyB", "PartyC"];
    let mut trades = vec![];
    for p in parties {
        for r in parties {
            for a in -4..=4 {
                trades.push(lit(&m, "efficiency", &[&format!("{{ payer = {p}; receiver = {r}; amount = {a} }}")])?.remove(0));
            }
        }
    }
    let mut lists: Vec<Vec<Value>> = vec![vec![]];
    let mut frontier = lists.clone();
    for _ in 0..3 {
        frontier = frontier
            .iter()
            .flat_map(|l| trades.iter().map(move |t| l.iter().cloned().chain([t.clone()]).collect::<Vec<_>>()))
            .collect();
        for l in &frontier {
            let ok = eval_call(&m, "zero_sum", &[Value::List(l.clone())]).map_err(err)?;
            ensure!(ok == Value::Bool(true), "zero_sum fails on {l:?}");
        }
        lists.append(&mut frontier.clone());
    }
    Ok(format!("efficiency refuted with amount {}, zero_sum proved up to bound 4 ({t}), {} lists brute-forced", amount.unwrap(), lists.len()))
}

fn q(n: i64, d: i64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

fn scoring() -> Check {
    for (diff, want) in [(0, q(1, 1)), (1, q(1, 2)), (3, q(1, 3))] {
        let got = state_space_score(diff);
        ensure!(got == want, "state space diff {diff}: {got}");
    }
    let a = MetricAssessment::new(Payload::ControlFlow {
        aspects: [Grade::Correct, Grade::Correct, Grade::Partial, Grade::Incorrect],
    });
    let s = score_assessment(&a);
    ensure!(s.value() == Some(&q(5, 8)), "control flow: {s:?}");
    Ok("state space 1, 1/2, 1/3; control flow 0.625".into())
}

fn radar() -> Check {
    let rows = load_assessments(&fixture_path("radar.json")).map_err(err)?;
    let report = aggregate_scores(&ScoreTable::from_assessments(&rows).map_err(err)?).map_err(err)?;
    let bars = [
        ("anthropic/claude-opus-4.5", "0.601"),
        ("openai/gpt-5.2", "0.589"),
        ("anthropic/claude-sonnet-4.5", "0.576"),
        ("x-ai/grok-code-fast-1", "0.534"),
        ("google/gemini-3-pro-preview", "0.532"),
    ];
    let mut shown = vec![];
    for (model, bar) in bars {
        let got = report.overall_rounded(model).ok_or(format!("no model {model}"))?;
        let bar = regionforge_core::metrics::parse_decimal(bar).unwrap();
        let diff = if got > bar { &got - &bar } else { &bar - &got };
        ensure!(diff <= q(1, 1000), "{model}: {} vs bar {}", decimal_text(&got, 3), decimal_text(&bar, 3));
        shown.push(decimal_text(&got, 3));
    }
    Ok(format!("overall means {}", shown.join(", ")))
}

fn copy_tree(from: &Path, to: &Path) -> std::io::Result<()> {
    std::fs::create_dir_all(to)?;
    for e in std::fs::read_dir(from)? {
        let e = e?;
        let dst = to.join(e.file_name());
        if e.file_type()?.is_dir() {
            copy_tree(&e.path(), &dst)?;
        } else {
            std::fs::copy(e.path(), dst)?;
        }
    }
    Ok(())
}

type Snapshot = BTreeMap<String, (FormalizationStatus, Option<String>)>;

fn snapshot(mm: &Metamodel) -> Snapshot {
    mm.entries.iter().map(|(p, e)| (p.clone(), (e.status, e.artifact_hash.clone()))).collect()
}

fn change(root: &Path, mm: &mut Metamodel, path: &str, text: &str) -> Result<regionforge_project::Plan, String> {
    let ev = if root.join(path).exists() { ChangeEvent::Modified(path.into()) } else { ChangeEvent::Created(path.into()) };
    std::fs::write(root.join(path), text).map_err(err)?;
    let evs = vec![ev];
    mm.refresh(&evs);
    Ok(plan_reformalization(mm, &evs))
}

fn formalize(mm: &mut Metamodel, target: Option<&str>) -> Result<(), String> {
    let plan = plan_formalize(mm, target).map_err(err)?;
    apply_plan(mm, &plan, &ApplyOptions::default()).map_err(err)
}

fn project() -> Check {
    let opts = ApplyOptions::default();
    let fresh = || -> Result<(tempfile::TempDir, Metamodel), String> {
        let dir = tempfile::tempdir().map_err(err)?;
        copy_tree(&example_project(), dir.path()).map_err(err)?;
        let mm = Metamodel::scan(dir.path()).map_err(err)?;
        Ok((dir, mm))
    };

    // Leaf change: exactly the changed module and its transitive dependents.
    let (dir, mut mm) = fresh()?;
    let root = dir.path();
    formalize(&mut mm, None)?;
    let before = snapshot(&mm);
    let math = std::fs::read_to_string(root.join("utils/math_ops.mml")).map_err(err)?;
    let plan = change(root, &mut mm, "utils/math_ops.mml", &math.replace("a + b", "b + a"))?;
    let want = ["utils/math_ops.mml", "utils/helpers.mml", "main.mml"];
    ensure!(plan.paths() == want, "leaf change planned {:?}", plan.paths());
    apply_plan(&mut mm, &plan, &opts).map_err(err)?;
    let after = snapshot(&mm);
    for p in ["models/order.mml", "services/pricing.mml"] {
        ensure!(before[p] == after[p], "{p} changed although unaffected");
    }

    // Editing a never-formalized module plans nothing.
    let (dir, mut mm) = fresh()?;
    let root = dir.path();
    formalize(&mut mm, Some("utils/helpers.mml"))?;
    let main = "import services.pricing (discount_for)\n\n\
                let checkout_discount (amount : int) (premium : bool) : int =\n  discount_for amount premium\n";
    let plan = change(root, &mut mm, "main.mml", main)?;
    ensure!(plan.is_empty(), "never-formalized edit planned {:?}", plan.paths());

    // A sequence of incremental steps equals a batch run on the final tree.
    let (dir, mut mm) = fresh()?;
    let root = dir.path();
    formalize(&mut mm, None)?;
    let order = "type priority = Standard | Premium | Gold\ntype order = { amount : int; customer : priority }\n";
    let pricing = std::fs::read_to_string(root.join("services/pricing.mml"))
        .map_err(err)?
        .replace("| Standard ->", "| Gold -> 30\n  | Standard ->");
    for (p, t) in [("models/order.mml", order), ("services/pricing.mml", pricing.as_str()), ("extra.mml", "let one (x : int) : int = 1\n")] {
        let plan = change(root, &mut mm, p, t)?;
        apply_plan(&mut mm, &plan, &opts).map_err(err)?;
    }
    let mut batch = Metamodel::scan(root).map_err(err)?;
    formalize(&mut batch, None)?;
    ensure!(snapshot(&mm) == snapshot(&batch), "incremental and batch artifacts differ");
    Ok("leaf change minimal, never-formalized edit empty, incremental equals batch".into())
}

fn main() {
    let criteria: Vec<Criterion> = vec![
        ("1 discount decomposition", discount),
        ("2 gtt refutation", gtt),
        ("3 netting verdicts", netting),
        ("4 metric scoring", scoring),
        ("5 radar aggregation", radar),
        ("6 incremental project", project),
        ("7a solver fuzz", || common::solver_fuzz(1000)),
        ("7b region classification", || common::classification(1000)),
        ("7c verdict soundness", || common::verdict_soundness(false)),
        ("7d determinism", common::determinism),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        match check() {
            Ok(detail) => println!("PASS  {name}: {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL  {name}: {why}");
            }
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
