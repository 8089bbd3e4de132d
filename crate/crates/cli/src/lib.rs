//! Library side of the `cqtl` command: loading models, running checks,
//! rendering results.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use cqtl_core::eval::{Attribute, EvalError, EvalOptions, Evaluator, VarKind};
use cqtl_core::logic::{check_formula, desugar, parse_formula, DesugarMode, LogicError};
use cqtl_core::model::{CounterpartModel, ModelError, WorldId};
use cqtl_core::oracle::{trajectory, Configuration, Oracle, OracleError, OracleOptions};
use cqtl_core::{parse_model, FormatError};
use serde_json::{json, Map, Value};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{}:{source}", path.display())]
    Model { path: PathBuf, source: FormatError },
    #[error(transparent)]
    Formula(#[from] LogicError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Path(#[from] ModelError),
    #[error("no world named `{0}`")]
    UnknownWorld(String),
    #[error("no transition named `{0}`")]
    UnknownTransition(String),
    #[error("bad start `{0}`: expected `element@world`")]
    BadStart(String),
    #[error("malformed result document: {0}")]
    Document(String),
}

pub fn load_model(path: &Path) -> Result<CounterpartModel, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_model(&text).map_err(|source| CliError::Model {
        path: path.to_path_buf(),
        source,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Engine {
    Fixpoint,
    Oracle,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CheckFlags {
    pub world: Option<String>,
    pub engine: Engine,
    /// Run both engines and report whether they agree.
    pub compare: bool,
    pub expand_eq: bool,
    pub require_sat: bool,
    pub max_so_carrier: usize,
    /// Record wall-clock time; off by default so output is reproducible.
    pub timing: bool,
}

impl Default for CheckFlags {
    fn default() -> Self {
        CheckFlags {
            world: None,
            engine: Engine::Fixpoint,
            compare: false,
            expand_eq: false,
            require_sat: false,
            max_so_carrier: EvalOptions::default().max_so_carrier,
            timing: false,
        }
    }
}

/// A bound value: an element name, or a sorted list of names for a set.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum Binding {
    Element(String),
    Set(Vec<String>),
}

pub type Row = BTreeMap<String, Binding>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WorldResult {
    pub world: String,
    pub assignments: Vec<Row>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Stats {
    pub fixpoint_rounds: usize,
    pub config_count: usize,
    pub elapsed_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResultDocument {
    pub formula: String,
    pub context: String,
    pub per_world: Vec<WorldResult>,
    pub stats: Stats,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CheckOutcome {
    pub document: ResultDocument,
    /// `Some(agree)` when both engines ran.
    pub agreement: Option<bool>,
    pub exit_code: i32,
}

fn rows(m: &CounterpartModel, a: &Attribute, w: WorldId) -> Vec<Row> {
    let world = m.world(w);
    let mut out: Vec<Row> = a
        .assignments(w)
        .into_iter()
        .map(|asg| {
            let mut row = Row::new();
            for slot in a.layout() {
                let b = match slot.kind {
                    VarKind::Element => Binding::Element(world.element_name(slot.sort, asg.fo[&slot.name]).to_string()),
                    VarKind::Set => {
                        let mut names: Vec<String> = asg.so[&slot.name]
                            .iter()
                            .map(|&e| world.element_name(slot.sort, e).to_string())
                            .collect();
                        names.sort();
                        Binding::Set(names)
                    }
                };
                row.insert(slot.name.clone(), b);
            }
            row
        })
        .collect();
    out.sort();
    out
}

pub fn run_check(
    m: &CounterpartModel,
    formula: &str,
    context: &str,
    flags: &CheckFlags,
) -> Result<CheckOutcome, CliError> {
    let start = Instant::now();
    let sig = m.signature();
    let surface = parse_formula(formula, sig).map_err(LogicError::from)?;
    let mut fc = check_formula(context, formula, sig)?;
    if flags.expand_eq {
        fc.body = desugar(&fc.body, DesugarMode::ExpandEq);
    }
    let worlds: Vec<WorldId> = match &flags.world {
        Some(name) => vec![m.world_id(name).ok_or_else(|| CliError::UnknownWorld(name.clone()))?],
        None => m.world_ids().collect(),
    };

    let eval_opts = EvalOptions {
        max_so_carrier: flags.max_so_carrier,
        ..EvalOptions::default()
    };
    let oracle_opts = OracleOptions {
        max_so_carrier: flags.max_so_carrier,
        ..OracleOptions::default()
    };
    let mut stats = Stats::default();
    let fixpoint = |stats: &mut Stats| -> Result<Attribute, CliError> {
        let mut ev = Evaluator::with_options(m, eval_opts);
        let a = ev.eval(&fc)?;
        stats.fixpoint_rounds = ev.stats().fixpoint_rounds;
        Ok(a)
    };
    let oracle = || -> Result<(Attribute, usize), CliError> {
        let mut or = Oracle::with_options(m, oracle_opts);
        let a = or.eval(&fc)?;
        Ok((a, or.config_count()))
    };
    let (primary, agreement) = match (flags.engine, flags.compare) {
        (Engine::Fixpoint, false) => {
            let a = fixpoint(&mut stats)?;
            stats.config_count = a.universe_size();
            (a, None)
        }
        (Engine::Oracle, false) => {
            let (a, configs) = oracle()?;
            stats.config_count = configs;
            (a, None)
        }
        (engine, true) => {
            let f = fixpoint(&mut stats)?;
            let (o, configs) = oracle()?;
            stats.config_count = configs;
            let agree = f == o;
            (if engine == Engine::Oracle { o } else { f }, Some(agree))
        }
    };
    if flags.timing {
        stats.elapsed_ms = start.elapsed().as_millis() as u64;
    }
    let per_world: Vec<WorldResult> = worlds
        .iter()
        .map(|&w| WorldResult {
            world: m.world(w).name().to_string(),
            assignments: rows(m, &primary, w),
        })
        .collect();
    let exit_code = if agreement == Some(false) {
        3
    } else if flags.require_sat && per_world.iter().any(|r| r.assignments.is_empty()) {
        1
    } else {
        0
    };
    Ok(CheckOutcome {
        document: ResultDocument {
            formula: surface.to_string(),
            context: fc.context_string(sig),
            per_world,
            stats,
        },
        agreement,
        exit_code,
    })
}

fn binding_json(b: &Binding) -> Value {
    match b {
        Binding::Element(e) => Value::String(e.clone()),
        Binding::Set(s) => Value::Array(s.iter().cloned().map(Value::String).collect()),
    }
}

pub fn to_json(doc: &ResultDocument) -> Value {
    let per_world: Vec<Value> = doc
        .per_world
        .iter()
        .map(|w| {
            let assignments: Vec<Value> = w
                .assignments
                .iter()
                .map(|row| {
                    Value::Object(
                        row.iter()
                            .map(|(k, v)| (k.clone(), binding_json(v)))
                            .collect::<Map<_, _>>(),
                    )
                })
                .collect();
            json!({ "world": w.world, "assignments": assignments })
        })
        .collect();
    json!({
        "formula": doc.formula,
        "context": doc.context,
        "perWorld": per_world,
        "stats": {
            "fixpointRounds": doc.stats.fixpoint_rounds,
            "configCount": doc.stats.config_count,
            "elapsedMs": doc.stats.elapsed_ms,
        },
    })
}

/// Compact JSON with sorted keys and a trailing newline.
pub fn emit_json(doc: &ResultDocument) -> Vec<u8> {
    let mut out = serde_json::to_vec(&to_json(doc)).expect("json values serialize");
    out.push(b'\n');
    out
}

/// Reads back a document written by [`emit_json`].
pub fn parse_json(bytes: &[u8]) -> Result<ResultDocument, CliError> {
    let bad = |what: &str| CliError::Document(what.to_string());
    let v: Value = serde_json::from_slice(bytes).map_err(|e| CliError::Document(e.to_string()))?;
    let text = |v: &Value, key: &str| {
        v.get(key)
            .and_then(Value::as_str)
            .map(String::from)
            .ok_or_else(|| bad(key))
    };
    let num = |v: &Value, key: &str| v.get(key).and_then(Value::as_u64).ok_or_else(|| bad(key));
    let mut per_world = Vec::new();
    for w in v
        .get("perWorld")
        .and_then(Value::as_array)
        .ok_or_else(|| bad("perWorld"))?
    {
        let mut assignments = Vec::new();
        for row in w
            .get("assignments")
            .and_then(Value::as_array)
            .ok_or_else(|| bad("assignments"))?
        {
            let mut r = Row::new();
            for (k, val) in row.as_object().ok_or_else(|| bad("assignment"))? {
                let b = match val {
                    Value::String(s) => Binding::Element(s.clone()),
                    Value::Array(xs) => Binding::Set(
                        xs.iter()
                            .map(|x| x.as_str().map(String::from).ok_or_else(|| bad("set element")))
                            .collect::<Result<_, _>>()?,
                    ),
                    _ => return Err(bad("binding")),
                };
                r.insert(k.clone(), b);
            }
            assignments.push(r);
        }
        per_world.push(WorldResult {
            world: text(w, "world")?,
            assignments,
        });
    }
    let stats = v.get("stats").ok_or_else(|| bad("stats"))?;
    Ok(ResultDocument {
        formula: text(&v, "formula")?,
        context: text(&v, "context")?,
        per_world,
        stats: Stats {
            fixpoint_rounds: num(stats, "fixpointRounds")? as usize,
            config_count: num(stats, "configCount")? as usize,
            elapsed_ms: num(stats, "elapsedMs")?,
        },
    })
}

fn paint(s: &str, color: bool) -> String {
    if color {
        format!("\x1b[1;36m{s}\x1b[0m")
    } else {
        s.to_string()
    }
}

/// Human-readable rendering, one line per world.
pub fn render_text(doc: &ResultDocument, color: bool) -> String {
    let mut out = String::new();
    let ctx = if doc.context.is_empty() { "-" } else { &doc.context };
    let _ = writeln!(out, "[{ctx}] {}", doc.formula);
    for w in &doc.per_world {
        let cells: Vec<String> = w
            .assignments
            .iter()
            .map(|row| {
                let parts: Vec<String> = row
                    .iter()
                    .map(|(k, v)| match v {
                        Binding::Element(e) => format!("{k}={e}"),
                        Binding::Set(s) => format!("{k}={{{}}}", s.join(",")),
                    })
                    .collect();
                format!("({})", parts.join(", "))
            })
            .collect();
        let body = if cells.is_empty() {
            "none".to_string()
        } else {
            cells.join(" ")
        };
        let _ = writeln!(out, "{}: {body}", paint(&w.world, color));
    }
    out
}

/// Follows one element along a path of transition names, printing each
/// configuration; `start` is `element@world`.
pub fn trace(m: &CounterpartModel, start: &str, path: &[String]) -> Result<Vec<String>, CliError> {
    let (elem, world) = start
        .split_once('@')
        .ok_or_else(|| CliError::BadStart(start.to_string()))?;
    let w = m
        .world_id(world)
        .ok_or_else(|| CliError::UnknownWorld(world.to_string()))?;
    let found: Vec<_> = m
        .signature()
        .sorts()
        .filter_map(|s| m.world(w).element(s, elem).map(|e| (s, e)))
        .collect();
    let [(sort, e)] = found[..] else {
        return Err(CliError::BadStart(start.to_string()));
    };
    let ids = path
        .iter()
        .map(|n| m.transition_id(n).ok_or_else(|| CliError::UnknownTransition(n.clone())))
        .collect::<Result<Vec<_>, _>>()?;
    let layout = vec![cqtl_core::eval::Slot {
        name: "x".into(),
        kind: VarKind::Element,
        sort,
    }];
    let mut assignment = cqtl_core::eval::Assignment::default();
    assignment.fo.insert("x".into(), e);
    let configs = trajectory(m, &layout, &Configuration::Live { world: w, assignment }, &ids)?;
    let mut lines = vec![element_at(m, &configs[0], sort)];
    for (t, c) in path.iter().zip(&configs[1..]) {
        lines.push(format!("  --{t}--> {}", element_at(m, c, sort)));
    }
    Ok(lines)
}

fn element_at(m: &CounterpartModel, c: &Configuration, sort: cqtl_core::SortId) -> String {
    match c {
        Configuration::Live { world, assignment } => {
            let w = m.world(*world);
            format!("{}@{}", w.element_name(sort, assignment.fo["x"]), w.name())
        }
        Configuration::Dead => "dead".to_string(),
    }
}
