use std::collections::BTreeMap;
use std::path::Path;

use serde_json::{json, Value};

use crate::context::{run_job, Outcome};
use crate::error::CliError;
use crate::output::{Artifact, Check, SCHEMA};
use crate::plot::{line_chart, Series};

pub const CRITERIA: [&str; 10] = [
    "bubble calibration",
    "concentration scaling",
    "scale bounds",
    "integral exponents",
    "energy law",
    "improved inequality",
    "ball/annulus cancellation",
    "retraction suite",
    "T_nu near identity",
    "headline solve",
];

const REPORT: &str = "report.json";

fn load(dir: &Path) -> Result<Vec<(String, Artifact)>, CliError> {
    let entries =
        std::fs::read_dir(dir).map_err(|e| CliError::Config(format!("cannot read {}: {e}", dir.display())))?;
    let mut names: Vec<String> = entries
        .filter_map(|e| e.ok())
        .filter_map(|e| e.file_name().into_string().ok())
        .filter(|n| n.ends_with(".json") && !n.ends_with(".meta.json") && n != REPORT)
        .collect();
    names.sort();
    let mut out = Vec::new();
    for name in names {
        let text = std::fs::read_to_string(dir.join(&name))?;
        match serde_json::from_str::<Artifact>(&text) {
            Ok(a) if a.schema == SCHEMA => out.push((name, a)),
            Ok(a) => log::warn!("{name}: schema {} is not {SCHEMA}; skipped", a.schema),
            Err(_) => log::warn!("{name} is not an artifact; skipped"),
        }
    }
    Ok(out)
}

/// Criterion a failed run of `command` counts against.
fn failed_criterion(command: &str) -> Option<usize> {
    match command {
        "solve" | "minmax" => Some(10),
        _ => None,
    }
}

fn nums(v: &Value) -> Option<Vec<f64>> {
    v.as_array()?.iter().map(Value::as_f64).collect()
}

fn margin_series(a: &Artifact) -> Vec<Series> {
    let mut by: BTreeMap<String, Vec<(f64, f64)>> = BTreeMap::new();
    for r in a.result["reports"].as_array().into_iter().flatten() {
        if let (Some(l), Some(m)) = (r["params"]["lambda"].as_f64(), r["margin"].as_f64()) {
            let key = format!("{} {}", r["check"].as_str().unwrap_or(""), r["probe"].as_str().unwrap_or(""));
            by.entry(key).or_default().push((l.log10(), m));
        }
    }
    by.into_iter().map(|(k, v)| Series::new(k, v)).collect()
}

fn energy_series(a: &Artifact) -> Vec<Series> {
    let mut out = Vec::new();
    for k in 0..2 {
        let pts: Vec<(f64, f64)> = a.result["energy"]["rows"]
            .as_array()
            .into_iter()
            .flatten()
            .filter(|r| r["sweep"].as_u64() == Some(k as u64))
            .filter_map(|r| Some((nums(&r["t"])?[k].ln(), r["energy"].as_f64()?)))
            .collect();
        out.push(Series::new(format!("J along sweep {}", k + 1), pts));
    }
    out
}

fn residual_series(a: &Artifact) -> Vec<Series> {
    let pts = a.result["trace"]
        .as_array()
        .into_iter()
        .flatten()
        .enumerate()
        .filter_map(|(i, t)| Some((i as f64, t["residual"].as_f64()?.max(1e-300).log10())))
        .collect();
    vec![Series::new("residual", pts)]
}

pub fn report(dir: &Path) -> Result<(), CliError> {
    if !dir.is_dir() {
        return Err(CliError::Config(format!("{} is not a directory", dir.display())));
    }
    let arts = load(dir)?;
    if arts.is_empty() {
        return Err(CliError::Config(format!("no artifacts in {}", dir.display())));
    }
    let inputs: Vec<Value> =
        arts.iter().map(|(n, a)| json!({ "file": n, "fingerprint": a.config_fingerprint })).collect();
    let config = json!({ "inputs": inputs });
    run_job("report", &dir.join(REPORT), config, || {
        let failures: Vec<(&str, Check)> = arts
            .iter()
            .filter(|(_, a)| a.status != "ok")
            .filter_map(|(n, a)| {
                let criterion = failed_criterion(&a.command)?;
                let why = a.result["error"].as_str().unwrap_or("failed").to_string();
                Some((n.as_str(), Check::new(criterion, &format!("{} run", a.command), false, why)))
            })
            .collect();
        let mut evidence: BTreeMap<usize, Vec<(&str, &Check)>> = BTreeMap::new();
        for (name, a) in &arts {
            for c in &a.checks {
                evidence.entry(c.criterion).or_default().push((name.as_str(), c));
            }
        }
        for (name, c) in &failures {
            evidence.entry(c.criterion).or_default().push((name, c));
        }
        let table: Vec<Value> = CRITERIA
            .iter()
            .enumerate()
            .map(|(i, title)| {
                let n = i + 1;
                let ev = evidence.get(&n).map(Vec::as_slice).unwrap_or(&[]);
                let status = if ev.is_empty() {
                    "no evidence"
                } else if ev.iter().all(|(_, c)| c.pass) {
                    "pass"
                } else {
                    "fail"
                };
                let details: Vec<Value> = ev
                    .iter()
                    .map(|(f, c)| json!({ "file": f, "check": c.name, "pass": c.pass, "detail": c.detail }))
                    .collect();
                json!({ "criterion": n, "name": title, "status": status, "evidence": details })
            })
            .collect();
        for row in &table {
            println!(
                "criterion {:>2} {:<28} {}",
                row["criterion"],
                row["name"].as_str().unwrap_or(""),
                row["status"].as_str().unwrap_or("")
            );
        }

        let mut plots = Vec::new();
        for (name, a) in &arts {
            let stem = name.trim_end_matches(".json");
            let (title, x, y, series) = match a.command.as_str() {
                "mt-check" => ("margin curves", "log10 λ", "margin", margin_series(a)),
                "testfn-scan" => ("energy along the test family", "log t", "J", energy_series(a)),
                "solve" if a.status == "ok" => ("solver residual", "iteration", "log10 residual", residual_series(a)),
                _ => continue,
            };
            if series.iter().all(|s| s.points.is_empty()) {
                continue;
            }
            let file = format!("report-{stem}.svg");
            line_chart(&dir.join(&file), &format!("{title} ({stem})"), x, y, &series)?;
            plots.push(file);
        }
        let artifacts: Vec<Value> = arts
            .iter()
            .map(|(n, a)| json!({ "file": n, "command": a.command, "status": a.status, "fingerprint": a.config_fingerprint }))
            .collect();
        Ok(Outcome { result: json!({ "artifacts": artifacts, "criteria": table, "plots": plots }), checks: vec![] })
    })
}
