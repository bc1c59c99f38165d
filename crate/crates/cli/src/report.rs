//! Rendering of run, sweep and check reports.

use std::collections::{BTreeMap, BTreeSet};

use hybridsim::scenario::{CheckVerdict, Evaluation, Scenario, Table};
use hybridsim::trapscape::SweepRow;
use serde::Serialize;

use crate::output::{cell, csv_header, OutputSet, TOOL, UNITS};

fn num(x: f64) -> String {
    format!("{x:e}")
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

/// Flatten a parsed scenario into dotted keys for the input echo.
pub fn flatten(value: &toml::Value) -> Vec<(String, String)> {
    fn walk(prefix: &str, v: &toml::Value, out: &mut Vec<(String, String)>) {
        match v {
            toml::Value::Table(t) => {
                for (k, v) in t {
                    let key = if prefix.is_empty() {
                        k.clone()
                    } else {
                        format!("{prefix}.{k}")
                    };
                    walk(&key, v, out);
                }
            }
            toml::Value::Array(a) if a.iter().any(|x| x.is_table()) => {
                for (i, v) in a.iter().enumerate() {
                    walk(&format!("{prefix}.{i}"), v, out);
                }
            }
            toml::Value::Array(a) => {
                let items: Vec<String> = a.iter().map(scalar).collect();
                out.push((prefix.to_string(), items.join(" ")));
            }
            other => out.push((prefix.to_string(), scalar(other))),
        }
    }
    fn scalar(v: &toml::Value) -> String {
        match v {
            toml::Value::Float(x) => num(*x),
            toml::Value::Integer(i) => i.to_string(),
            toml::Value::String(s) => s.clone(),
            toml::Value::Boolean(b) => b.to_string(),
            other => other.to_string(),
        }
    }
    let mut out = Vec::new();
    walk("", value, &mut out);
    out
}

pub fn table_csv(hash: &str, table: &Table) -> String {
    format!("{}{}", csv_header(hash), table.csv())
}

pub const CHECK_COLUMNS: &str = "id,preset,quantity,computed,target,tolerance,source,pass";

pub fn check_row(v: &CheckVerdict) -> String {
    format!(
        "{},{},{},{},{},{},{},{}",
        cell(&v.id),
        cell(&v.preset),
        cell(&v.quantity),
        opt(v.computed),
        opt(v.target),
        cell(&v.tolerance),
        v.source,
        if v.pass { "pass" } else { "FAIL" }
    )
}

/// Report of one `run`: `section,name,value,target,tolerance,source,pass`.
pub fn run_csv(
    hash: &str,
    doc: &toml::Value,
    ev: &Evaluation,
    verdicts: &[CheckVerdict],
) -> String {
    let mut out = csv_header(hash);
    out.push_str("section,name,value,target,tolerance,source,pass\n");
    for (k, v) in flatten(doc) {
        out.push_str(&format!("input,{},{},,,,\n", cell(&k), cell(&v)));
    }
    for (k, v) in &ev.quantities {
        out.push_str(&format!("quantity,{},{},,,,\n", cell(k), num(*v)));
    }
    for w in &ev.warnings {
        out.push_str(&format!("warning,,{},,,,\n", cell(w)));
    }
    for v in verdicts {
        out.push_str(&format!(
            "check,{},{},{},{},{},{}\n",
            cell(&v.id),
            opt(v.computed),
            opt(v.target),
            cell(&v.tolerance),
            v.source,
            if v.pass { "pass" } else { "FAIL" }
        ));
    }
    out
}

#[derive(Serialize)]
struct RunJson<'a> {
    tool: &'a str,
    scenario_sha256: &'a str,
    units: &'a str,
    inputs: &'a Scenario,
    quantities: &'a BTreeMap<String, f64>,
    budget: &'a Option<hybridsim::coupling::BudgetRecord>,
    warnings: &'a [String],
    checks: &'a [CheckVerdict],
    tables: &'a BTreeMap<String, Table>,
}

pub fn run_json(hash: &str, s: &Scenario, ev: &Evaluation, verdicts: &[CheckVerdict]) -> String {
    let r = RunJson {
        tool: TOOL,
        scenario_sha256: hash,
        units: UNITS,
        inputs: s,
        quantities: &ev.quantities,
        budget: &ev.budget,
        warnings: &ev.warnings,
        checks: verdicts,
        tables: &ev.tables,
    };
    let mut text = serde_json::to_string_pretty(&r).expect("report serializes");
    text.push('\n');
    text
}

/// All files of one `run`.
pub fn run_outputs(
    stem: &str,
    json: bool,
    hash: &str,
    doc: &toml::Value,
    s: &Scenario,
    ev: &Evaluation,
    verdicts: &[CheckVerdict],
) -> OutputSet {
    let mut set = OutputSet::default();
    if json {
        set.add(format!("{stem}.json"), run_json(hash, s, ev, verdicts));
    } else {
        set.add(format!("{stem}.csv"), run_csv(hash, doc, ev, verdicts));
        for (name, t) in &ev.tables {
            set.add(format!("{stem}_{name}.csv"), table_csv(hash, t));
        }
    }
    set
}

/// Outcome of one sweep point.
#[derive(Debug, Clone, Serialize)]
pub struct SweepPoint {
    pub index: usize,
    pub axes: Vec<f64>,
    pub error: Option<String>,
    pub quantities: BTreeMap<String, f64>,
    #[serde(skip)]
    pub trap_row: Option<SweepRow>,
}

pub fn sweep_csv(hash: &str, axes: &[String], points: &[SweepPoint]) -> String {
    let names: BTreeSet<&String> = points.iter().flat_map(|p| p.quantities.keys()).collect();
    let mut out = csv_header(hash);
    let mut head = vec!["index".to_string()];
    head.extend(axes.iter().map(|a| cell(a)));
    head.push("status".into());
    head.extend(names.iter().map(|n| cell(n)));
    out.push_str(&head.join(","));
    out.push('\n');
    for p in points {
        let mut row = vec![p.index.to_string()];
        row.extend(p.axes.iter().map(|x| num(*x)));
        row.push(match &p.error {
            None => "ok".into(),
            Some(e) => cell(&format!("failed: {e}")),
        });
        row.extend(names.iter().map(|n| opt(p.quantities.get(*n).copied())));
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// Trap table in the same row format as the distance sweep of the trap module.
pub fn trap_csv(hash: &str, points: &[SweepPoint]) -> String {
    let rows: Vec<SweepRow> = points.iter().filter_map(|p| p.trap_row.clone()).collect();
    let mut out = csv_header(hash);
    out.push_str(&hybridsim::trapscape::sweep_csv(&rows));
    for p in points.iter().filter(|p| p.trap_row.is_none()) {
        let msg = p.error.as_deref().unwrap_or("no trap row");
        out.push_str(&format!(
            "# point {} failed: {}\n",
            p.index,
            msg.replace('\n', " ")
        ));
    }
    out
}

#[derive(Serialize)]
struct SweepJson<'a> {
    tool: &'a str,
    scenario_sha256: &'a str,
    units: &'a str,
    axes: &'a [String],
    points: &'a [SweepPoint],
}

pub fn sweep_json(hash: &str, axes: &[String], points: &[SweepPoint]) -> String {
    let mut text = serde_json::to_string_pretty(&SweepJson {
        tool: TOOL,
        scenario_sha256: hash,
        units: UNITS,
        axes,
        points,
    })
    .expect("sweep serializes");
    text.push('\n');
    text
}

/// Checks of one preset, or the error that stopped its evaluation.
#[derive(Debug, Clone, Serialize)]
pub struct PresetOutcome {
    pub preset: String,
    pub error: Option<String>,
    pub verdicts: Vec<CheckVerdict>,
}

pub fn checks_csv(hash: &str, outcomes: &[PresetOutcome]) -> String {
    let mut out = csv_header(hash);
    out.push_str(CHECK_COLUMNS);
    out.push('\n');
    for o in outcomes {
        if let Some(e) = &o.error {
            out.push_str(&format!(
                ",{},,,,,,{}\n",
                cell(&o.preset),
                cell(&format!("ERROR {e}"))
            ));
        }
        for v in &o.verdicts {
            out.push_str(&check_row(v));
            out.push('\n');
        }
    }
    out
}

#[derive(Serialize)]
struct ChecksJson<'a> {
    tool: &'a str,
    presets_sha256: &'a str,
    units: &'a str,
    outcomes: &'a [PresetOutcome],
}

pub fn checks_json(hash: &str, outcomes: &[PresetOutcome]) -> String {
    let mut text = serde_json::to_string_pretty(&ChecksJson {
        tool: TOOL,
        presets_sha256: hash,
        units: UNITS,
        outcomes,
    })
    .expect("checks serialize");
    text.push('\n');
    text
}
