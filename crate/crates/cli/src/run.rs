//! Command execution and result files.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use pdimtune::bounds::{
    pdim_elastic_net, pdim_fol, pdim_fused_lasso, pdim_goldberg_jerrum_legacy, pdim_group_lasso,
    pdim_solution_path, pdim_training, pdim_validation, sample_complexity, BoundReport, FolComplexity,
    SolutionPathInputs, TrainingInputs, ValidationInputs,
};
use pdimtune::gj::gj_pdim_bound;
use pdimtune::shatter::{loss_matrix, max_shattered_with, ShatterOptions, ShatterResult};
use pdimtune::solvers::{
    elastic_net_solve, fused_lasso_solve, group_lasso_solve, ProblemInstance, ProblemKind,
};
use pdimtune::tuning::{erm_tune, gap_curve, gen_instances, ErmResult, GapCurve};
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{BoundsParams, Params, RunConfig, ShatterParams, SolveParams};

/// One CSV cell.
pub enum Cell {
    Real(f64),
    Int(u64),
    Text(String),
}

/// CSV text: a `#` comment line documenting the columns, a header row, then
/// data rows. Reals carry 17 significant digits; lines end in LF.
pub struct Csv {
    text: String,
}

impl Csv {
    pub fn new(comment: &str, header: &[&str]) -> Self {
        let mut text = format!("# {comment}\n");
        text.push_str(&header.join(","));
        text.push('\n');
        Self { text }
    }

    pub fn row(&mut self, cells: impl IntoIterator<Item = Cell>) {
        let cells: Vec<String> = cells
            .into_iter()
            .map(|c| match c {
                Cell::Real(v) => format!("{v:.16e}"),
                Cell::Int(v) => v.to_string(),
                Cell::Text(s) => s,
            })
            .collect();
        self.text.push_str(&cells.join(","));
        self.text.push('\n');
    }

    pub fn finish(self) -> String {
        self.text
    }
}

/// The computed result of a command, ready to be written.
pub struct Report {
    pub result: Value,
    pub csv: String,
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("results serialize to JSON")
}

pub fn bounds_csv(report: &BoundReport) -> String {
    let mut csv = Csv::new(
        "quantity: bound_value, an input (input.<name>) or a base-2 log intermediate (log2.<name>); value: its value",
        &["quantity", "value"],
    );
    csv.row([Cell::Text("bound_value".into()), Cell::Real(report.bound_value)]);
    for (k, v) in &report.inputs {
        csv.row([Cell::Text(format!("input.{k}")), Cell::Real(*v)]);
    }
    for (k, v) in &report.log2_intermediates {
        csv.row([Cell::Text(format!("log2.{k}")), Cell::Real(*v)]);
    }
    csv.finish()
}

fn run_bounds(p: &BoundsParams, c: f64) -> Result<Report> {
    let report = match p {
        BoundsParams::FusedLasso { d } => pdim_fused_lasso(*d, c)?,
        BoundsParams::ElasticNet { d } => pdim_elastic_net(*d, c)?,
        BoundsParams::GroupLasso { p, d } => pdim_group_lasso(*p, *d, c)?,
        &BoundsParams::SolutionPath { p, m_path, t_path, delta_path, m_k, t_k, delta_k } => {
            pdim_solution_path(&SolutionPathInputs { p, m_path, t_path, delta_path, m_k, t_k, delta_k }, c)?
        }
        &BoundsParams::Training { p, d, m_f, t_f, delta_f } => {
            pdim_training(&TrainingInputs { p, d, m_f, t_f, delta_f }, c)?
        }
        &BoundsParams::Validation { p, d, m_f, t_f, m_g, t_g, delta_f, delta_g } => {
            pdim_validation(&ValidationInputs { p, d, m_f, t_f, m_g, t_g, delta_f, delta_g }, c)?
        }
        BoundsParams::Fol { m, delta, p, dims } => pdim_fol(&FolComplexity::new(*m, *delta, *p, dims.clone())?, c)?,
        BoundsParams::GoldbergJerrumLegacy { m, delta, p, dims, q } => {
            pdim_goldberg_jerrum_legacy(&FolComplexity::new(*m, *delta, *p, dims.clone())?, *q, c)?
        }
        BoundsParams::GjProgram { program, p } => gj_pdim_bound(program, *p, c)?,
        &BoundsParams::SampleComplexity { pdim, h, eps, delta, big_c } => {
            let n = sample_complexity(pdim, h, eps, delta, big_c)?;
            let mut csv = Csv::new("quantity: sample_size; value: required number of instances", &["quantity", "value"]);
            csv.row([Cell::Text("sample_size".into()), Cell::Int(n)]);
            return Ok(Report { result: json!({ "sample_size": n }), csv: csv.finish() });
        }
    };
    Ok(Report { result: to_value(&report), csv: bounds_csv(&report) })
}

fn load_instance(p: &SolveParams, base: &Path) -> Result<ProblemInstance> {
    if let Some(x) = &p.instance {
        return Ok(x.clone());
    }
    let rel = p.instance_path.as_ref().expect("validated: one instance source");
    let path = base.join(rel);
    let text = fs::read_to_string(&path).with_context(|| format!("reading instance {}", path.display()))?;
    let de = &mut serde_json::Deserializer::from_str(&text);
    serde_path_to_error::deserialize(de)
        .map_err(|e| anyhow::anyhow!("instance {} at {}: {}", path.display(), e.path(), e.inner()))
}

fn vector_rows(csv: &mut Csv, name: &str, v: &[f64]) {
    for (i, x) in v.iter().enumerate() {
        csv.row([Cell::Text(name.into()), Cell::Int(i as u64), Cell::Real(*x)]);
    }
}

fn run_solve(p: &SolveParams, cfg: &RunConfig) -> Result<Report> {
    let x = load_instance(p, &cfg.base_dir)?;
    let mut csv = Csv::new(
        "component: theta (primal solution) or u (fused-lasso dual); index: coordinate; value: entry",
        &["component", "index", "value"],
    );
    let result = match p.kind() {
        ProblemKind::ElasticNet => {
            let [a1, a2] = p.alpha[..] else {
                anyhow::bail!("elastic net takes alpha = [alpha1, alpha2], got {} values", p.alpha.len());
            };
            let s = elastic_net_solve(&x, a1, a2, &cfg.solver)?;
            vector_rows(&mut csv, "theta", &s.theta);
            to_value(&s)
        }
        ProblemKind::FusedLasso => {
            let s = fused_lasso_solve(&x, &p.alpha, &cfg.solver)?;
            vector_rows(&mut csv, "theta", &s.theta);
            vector_rows(&mut csv, "u", &s.dual.u);
            to_value(&s)
        }
        ProblemKind::GroupLasso { block_dims } => {
            let s = group_lasso_solve(&x, &p.alpha, &block_dims, &cfg.solver)?;
            vector_rows(&mut csv, "theta", &s.theta);
            to_value(&s)
        }
    };
    Ok(Report { result, csv: csv.finish() })
}

pub fn tune_csv(r: &ErmResult, grid_points: &[Vec<f64>]) -> String {
    let p = grid_points.first().map_or(0, Vec::len);
    let alpha_cols: Vec<String> = (1..=p).map(|k| format!("alpha_{k}")).collect();
    let mut header = vec!["grid_index"];
    header.extend(alpha_cols.iter().map(String::as_str));
    header.push("mean_loss");
    let mut csv = Csv::new(
        "grid_index: lexicographic grid position (first axis slowest); alpha_k: hyperparameter k; mean_loss: empirical mean loss",
        &header,
    );
    for (j, (alpha, loss)) in grid_points.iter().zip(&r.grid_losses).enumerate() {
        let mut cells = vec![Cell::Int(j as u64)];
        cells.extend(alpha.iter().map(|&a| Cell::Real(a)));
        cells.push(Cell::Real(*loss));
        csv.row(cells);
    }
    csv.finish()
}

pub fn gapcurve_csv(curve: &GapCurve) -> String {
    let mut csv = Csv::new(
        "n: training instances; mean_gap, std_gap: mean and sample standard deviation of the excess expected loss over successful trials; trials: successful trials; failed: failed trials",
        &["n", "mean_gap", "std_gap", "trials", "failed"],
    );
    for p in &curve.points {
        csv.row([
            Cell::Int(p.n as u64),
            Cell::Real(p.mean_gap),
            Cell::Real(p.std_gap),
            Cell::Int(p.trials as u64),
            Cell::Int(p.failed as u64),
        ]);
    }
    csv.finish()
}

pub fn shatter_csv(r: &ShatterResult) -> String {
    let mut csv = Csv::new(
        "row: instance index in the witness set; threshold: its witness threshold",
        &["row", "threshold"],
    );
    if let Some(w) = &r.witness {
        for (row, t) in w.rows.iter().zip(&w.thresholds) {
            csv.row([Cell::Int(*row as u64), Cell::Real(*t)]);
        }
    }
    csv.finish()
}

fn run_shatter(p: &ShatterParams, cfg: &RunConfig) -> Result<Report> {
    let l = match &p.loss_matrix {
        Some(l) => l.clone(),
        None => {
            let kind = p.kind().expect("validated");
            let dist = p.distribution.as_ref().expect("validated").with_seed(cfg.seed.expect("validated"));
            let instances = gen_instances(&dist, p.n.expect("validated"))?;
            loss_matrix(&kind, &instances, p.grid.as_ref().expect("validated"), &cfg.solver)?
        }
    };
    let r = max_shattered_with(&l, ShatterOptions { max_n: p.max_n, node_budget: p.node_budget })?;
    let result = json!({
        "rows": l.rows(),
        "cols": l.cols(),
        "shatter": to_value(&r),
    });
    Ok(Report { result, csv: shatter_csv(&r) })
}

/// Runs the configured command.
pub fn execute(cfg: &RunConfig) -> Result<Report> {
    match &cfg.params {
        Params::Bounds(p) => run_bounds(p, cfg.c),
        Params::Solve(p) => run_solve(p, cfg),
        Params::Tune(p) => {
            let instances = gen_instances(&p.distribution.with_seed(cfg.seed.expect("validated")), p.n)?;
            let r = erm_tune(&p.kind(), &instances, &p.grid, &cfg.solver)?;
            Ok(Report { csv: tune_csv(&r, &p.grid.all_points()), result: to_value(&r) })
        }
        Params::Gapcurve(p) => {
            let dist = p.distribution.with_seed(cfg.seed.expect("validated"));
            let curve = gap_curve(&p.kind(), &dist, &p.grid, &p.curve_config(), &cfg.solver)?;
            let result = json!({ "log_log_slope": curve.log_log_slope(), "curve": to_value(&curve) });
            Ok(Report { result, csv: gapcurve_csv(&curve) })
        }
        Params::Shatter(p) => run_shatter(p, cfg),
    }
}

/// The JSON document written for a run: library version, the resolved
/// config and the result.
pub fn output_document(cfg: &RunConfig, result: &Value) -> String {
    let doc = json!({
        "pdimtune_version": pdimtune::VERSION,
        "command": cfg.command.name(),
        "config": to_value(cfg),
        "result": result,
    });
    let mut text = serde_json::to_string_pretty(&doc).expect("JSON values serialize");
    text.push('\n');
    text
}

/// Writes `<command>.json` and `<command>.csv` into `dir`, creating it if
/// needed. The CSV's comment line is prefixed with the library version.
pub fn emit_report(cfg: &RunConfig, report: &Report, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).with_context(|| format!("creating output directory {}", dir.display()))?;
    let name = cfg.command.name();
    let json_path = dir.join(format!("{name}.json"));
    let csv_path = dir.join(format!("{name}.csv"));
    fs::write(&json_path, output_document(cfg, &report.result))
        .with_context(|| format!("writing {}", json_path.display()))?;
    let csv = report.csv.replacen("# ", &format!("# pdimtune {} {name}; ", pdimtune::VERSION), 1);
    fs::write(&csv_path, csv).with_context(|| format!("writing {}", csv_path.display()))?;
    Ok(vec![json_path, csv_path])
}
