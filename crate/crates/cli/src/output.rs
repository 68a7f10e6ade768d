//! Table, JSON and CSV rendering of estimates, exact marginals and reports.

use std::io::{self, Write};
use std::path::Path;

use belief_core::harness::{render_table, TrialReport};
use belief_core::{Marginals, Network, Run};
use clap::ValueEnum;
use serde_json::{json, Map, Value};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Table,
    Json,
    Csv,
}

impl Format {
    pub fn from_extension(path: &Path) -> Option<Self> {
        match path.extension()?.to_str()? {
            "csv" => Some(Format::Csv),
            "json" => Some(Format::Json),
            "txt" => Some(Format::Table),
            _ => None,
        }
    }
}

fn io_error(e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(format!("write failed: {e}"))
}

/// Rows of `(node, state, probability, standard error)`.
type Rows = Vec<(String, String, f64, Option<f64>)>;

fn marginal_rows(net: &Network, table: &Marginals) -> Rows {
    table
        .iter()
        .flat_map(|(j, probs)| {
            let v = net.variable(j);
            probs
                .iter()
                .enumerate()
                .map(move |(s, &p)| (v.name().to_owned(), v.states()[s].clone(), p, None))
        })
        .collect()
}

fn print_rows(rows: &Rows, format: Format, header: Value) -> Result<(), CliError> {
    let mut out = io::stdout().lock();
    match format {
        Format::Table => {
            let name_w = rows.iter().map(|r| r.0.len()).max().unwrap_or(4).max(4);
            let state_w = rows.iter().map(|r| r.1.len()).max().unwrap_or(5).max(5);
            if let Value::Object(h) = &header {
                for (k, v) in h {
                    writeln!(out, "# {k}: {v}").map_err(io_error)?;
                }
            }
            writeln!(out, "{:<name_w$}  {:<state_w$}  {:>10}  {:>10}", "node", "state", "p", "std_err")
                .map_err(io_error)?;
            for (n, s, p, se) in rows {
                let se = se.map_or_else(|| "-".to_owned(), |x| format!("{x:.6}"));
                writeln!(out, "{n:<name_w$}  {s:<state_w$}  {p:>10.6}  {se:>10}").map_err(io_error)?;
            }
        }
        Format::Csv => {
            let mut w = csv::Writer::from_writer(out);
            w.write_record(["node", "state", "probability", "std_error"])
                .map_err(io_error)?;
            for (n, s, p, se) in rows {
                let se = se.map(|x| x.to_string()).unwrap_or_default();
                w.write_record([n, s, &p.to_string(), &se]).map_err(io_error)?;
            }
            w.flush().map_err(io_error)?;
        }
        Format::Json => {
            let mut nodes = Map::new();
            for (n, s, p, se) in rows {
                let entry = nodes
                    .entry(n.clone())
                    .or_insert_with(|| Value::Object(Map::new()));
                entry
                    .as_object_mut()
                    .expect("object")
                    .insert(s.clone(), json!({ "probability": p, "std_error": se }));
            }
            let mut doc = match header {
                Value::Object(m) => m,
                _ => Map::new(),
            };
            doc.insert("nodes".into(), Value::Object(nodes));
            serde_json::to_writer_pretty(&mut out, &Value::Object(doc)).map_err(io_error)?;
            writeln!(out).map_err(io_error)?;
        }
    }
    Ok(())
}

pub fn print_run(net: &Network, run: &Run<'_, f64>, format: Format, interrupted: bool) -> Result<(), CliError> {
    let est = run.snapshot();
    let mut rows = Rows::new();
    for (j, node) in est.iter() {
        let v = net.variable(j);
        for (s, &p) in node.probabilities.iter().enumerate() {
            let se = node.standard_errors.as_ref().map(|e| e[s]);
            rows.push((v.name().to_owned(), v.states()[s].clone(), p, se));
        }
    }
    let c = run.counters();
    let header = json!({
        "algorithm": run.config().algorithm.tag(),
        "iterations": c.iterations,
        "instantiations": c.instantiations,
        "seed": run.config().seed,
        "interrupted": interrupted,
    });
    print_rows(&rows, format, header)
}

pub fn print_exact(net: &Network, table: &Marginals, format: Format) -> Result<(), CliError> {
    let header = json!({ "evidence_probability": table.evidence_probability() });
    print_rows(&marginal_rows(net, table), format, header)
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// CSV layout: one row per trial, then one `mean` row per block.
pub fn write_report_csv<W: Write>(report: &TrialReport, out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "algorithm",
        "iterations",
        "trial",
        "mean_error",
        "std_dev_error",
        "wall_time_s",
        "error_sq_times_time",
    ])?;
    for t in &report.trials {
        w.write_record([
            t.algorithm.tag(),
            &t.iterations.to_string(),
            &t.trial.to_string(),
            &opt(t.error),
            "",
            &t.wall_time_s.to_string(),
            &opt(t.error.map(|e| e * e * t.wall_time_s)),
        ])?;
    }
    for s in &report.summaries {
        w.write_record([
            s.algorithm.tag(),
            &s.iterations.to_string(),
            "mean",
            &opt(s.mean_error),
            &opt(s.std_dev_error),
            &opt(s.mean_wall_time_s),
            &opt(s.error_sq_times_time),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn print_report<W: Write>(report: &TrialReport, format: Format, out: &mut W) -> Result<(), CliError> {
    match format {
        Format::Table => out.write_all(render_table(report).as_bytes()).map_err(io_error),
        Format::Csv => write_report_csv(report, out).map_err(io_error),
        Format::Json => {
            serde_json::to_writer_pretty(&mut *out, report).map_err(io_error)?;
            writeln!(out).map_err(io_error)
        }
    }
}
