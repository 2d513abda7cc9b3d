//! Run configuration: one JSON document per run.

use std::path::{Path, PathBuf};

use pdimtune::bounds::Count;
use pdimtune::gj::GjProgram;
use pdimtune::shatter::{LossMatrix, DEFAULT_MAX_N, DEFAULT_NODE_BUDGET};
use pdimtune::solvers::{ProblemInstance, ProblemKind, SolverConfig};
use pdimtune::tuning::{AlphaGrid, DistributionSpec, GapCurveConfig, SignalSpec};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

/// One problem with a config field, reported before anything runs.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Diagnostic {
    pub field: String,
    pub message: String,
}

impl Diagnostic {
    pub fn new(field: impl Into<String>, message: impl Into<String>) -> Self {
        Self { field: field.into(), message: message.into() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Bounds,
    Solve,
    Tune,
    Gapcurve,
    Shatter,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Bounds => "bounds",
            Command::Solve => "solve",
            Command::Tune => "tune",
            Command::Gapcurve => "gapcurve",
            Command::Shatter => "shatter",
        }
    }
}

fn default_c() -> f64 {
    1.0
}

/// Top level of a config file. `params` is parsed separately, once the
/// command is known, so its diagnostics carry full field paths.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    #[serde(default)]
    command: Option<Command>,
    #[serde(default)]
    seed: Option<u64>,
    #[serde(default = "default_c")]
    c: f64,
    #[serde(default)]
    threads: Option<usize>,
    #[serde(default)]
    solver: SolverConfig,
    #[serde(default)]
    out: Option<PathBuf>,
    params: Value,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProblemName {
    ElasticNet,
    FusedLasso,
    GroupLasso,
}

/// Written as `{"formula": "<name>", ...fields}`. Parsing goes through the
/// externally tagged form `{"<name>": {...fields}}`, which keeps field paths
/// in diagnostics (internally tagged enums buffer their content and lose
/// them).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum BoundsParams {
    FusedLasso { d: u64 },
    ElasticNet { d: u64 },
    GroupLasso { p: u64, d: u64 },
    SolutionPath {
        p: u64,
        m_path: Count,
        t_path: Count,
        delta_path: u64,
        m_k: Count,
        t_k: Count,
        delta_k: u64,
    },
    Training { p: u64, d: u64, m_f: u64, t_f: u64, delta_f: u64 },
    Validation {
        p: u64,
        d: u64,
        m_f: u64,
        t_f: u64,
        m_g: u64,
        t_g: u64,
        delta_f: u64,
        delta_g: u64,
    },
    Fol {
        m: usize,
        delta: usize,
        p: usize,
        #[serde(default)]
        dims: Vec<usize>,
    },
    GoldbergJerrumLegacy {
        m: usize,
        delta: usize,
        p: usize,
        #[serde(default)]
        dims: Vec<usize>,
        q: u64,
    },
    GjProgram { program: GjProgram, p: usize },
    SampleComplexity { pdim: f64, h: f64, eps: f64, delta: f64, big_c: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveParams {
    pub problem: ProblemName,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub block_dims: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub instance: Option<ProblemInstance>,
    /// Relative paths resolve against the config file's directory.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub instance_path: Option<PathBuf>,
    pub alpha: Vec<f64>,
}

/// [`DistributionSpec`] without its seed, which comes from the top level.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DistributionParams {
    pub signal: SignalSpec,
    pub m: usize,
    pub m_val: usize,
    pub d: usize,
    pub noise_std: f64,
}

impl DistributionParams {
    pub fn with_seed(&self, seed: u64) -> DistributionSpec {
        DistributionSpec {
            signal: self.signal.clone(),
            m: self.m,
            m_val: self.m_val,
            d: self.d,
            noise_std: self.noise_std,
            seed,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TuneParams {
    pub problem: ProblemName,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub block_dims: Option<Vec<usize>>,
    pub distribution: DistributionParams,
    /// Number of training instances.
    pub n: usize,
    pub grid: AlphaGrid,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GapcurveParams {
    pub problem: ProblemName,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub block_dims: Option<Vec<usize>>,
    pub distribution: DistributionParams,
    pub grid: AlphaGrid,
    pub ns: Vec<usize>,
    pub trials: usize,
    pub n_mc: usize,
    #[serde(default)]
    pub clip: Option<f64>,
}

impl GapcurveParams {
    pub fn curve_config(&self) -> GapCurveConfig {
        GapCurveConfig { ns: self.ns.clone(), trials: self.trials, n_mc: self.n_mc, clip: self.clip }
    }
}

fn default_max_n() -> usize {
    DEFAULT_MAX_N
}

fn default_node_budget() -> u64 {
    DEFAULT_NODE_BUDGET
}

/// Either an explicit loss matrix, or a problem, distribution, instance
/// count and grid from which one is computed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShatterParams {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub loss_matrix: Option<LossMatrix>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub problem: Option<ProblemName>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub block_dims: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub distribution: Option<DistributionParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<AlphaGrid>,
    #[serde(default = "default_max_n")]
    pub max_n: usize,
    #[serde(default = "default_node_budget")]
    pub node_budget: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Params {
    Bounds(BoundsParams),
    Solve(SolveParams),
    Tune(TuneParams),
    Gapcurve(GapcurveParams),
    Shatter(ShatterParams),
}

impl Serialize for Params {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Params::Bounds(b) => bounds_to_tagged(b).serialize(s),
            Params::Solve(p) => p.serialize(s),
            Params::Tune(p) => p.serialize(s),
            Params::Gapcurve(p) => p.serialize(s),
            Params::Shatter(p) => p.serialize(s),
        }
    }
}

fn bounds_to_tagged(b: &BoundsParams) -> Value {
    match serde_json::to_value(b).expect("bounds params serialize") {
        Value::Object(outer) => {
            let (name, fields) = outer.into_iter().next().expect("one variant");
            let mut map = serde_json::Map::new();
            map.insert("formula".into(), Value::String(name));
            if let Value::Object(fields) = fields {
                map.extend(fields);
            }
            Value::Object(map)
        }
        other => other,
    }
}

fn parse_bounds(value: &Value) -> Result<BoundsParams, Vec<Diagnostic>> {
    let Value::Object(map) = value else {
        return Err(vec![Diagnostic::new("params", "expected an object")]);
    };
    let mut fields = map.clone();
    let name = match fields.remove("formula") {
        Some(Value::String(name)) => name,
        Some(_) => return Err(vec![Diagnostic::new("params.formula", "expected a string")]),
        None => return Err(vec![Diagnostic::new("params.formula", "missing field `formula`")]),
    };
    let mut outer = serde_json::Map::new();
    outer.insert(name.clone(), Value::Object(fields));
    serde_path_to_error::deserialize(Value::Object(outer)).map_err(|e| {
        let path = e.path().to_string();
        let field = match path.strip_prefix(&name) {
            Some("") => "params".to_owned(),
            Some(rest) => format!("params{rest}"),
            None => "params.formula".to_owned(),
        };
        vec![Diagnostic::new(field, e.into_inner().to_string())]
    })
}

/// A fully parsed and validated configuration.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunConfig {
    pub command: Command,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub c: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    pub solver: SolverConfig,
    pub params: Params,
    /// Where results go; kept out of the embedded copy so outputs do not
    /// depend on where they were written.
    #[serde(skip)]
    pub out: Option<PathBuf>,
    /// Directory that relative paths in the config resolve against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

fn parse_at<T: DeserializeOwned>(value: &Value, prefix: &str) -> Result<T, Vec<Diagnostic>> {
    serde_path_to_error::deserialize(value).map_err(|e| {
        let path = e.path().to_string();
        let field = if path == "." { prefix.to_owned() } else { format!("{prefix}.{path}") };
        vec![Diagnostic::new(field, e.into_inner().to_string())]
    })
}

fn problem_kind(
    problem: ProblemName,
    block_dims: &Option<Vec<usize>>,
    prefix: &str,
    diags: &mut Vec<Diagnostic>,
) -> Option<ProblemKind> {
    match (problem, block_dims) {
        (ProblemName::GroupLasso, Some(dims)) => {
            if dims.is_empty() || dims.contains(&0) {
                diags.push(Diagnostic::new(format!("{prefix}.block_dims"), "block sizes must be positive"));
                return None;
            }
            Some(ProblemKind::GroupLasso { block_dims: dims.clone() })
        }
        (ProblemName::GroupLasso, None) => {
            diags.push(Diagnostic::new(format!("{prefix}.block_dims"), "required for group_lasso"));
            None
        }
        (_, Some(_)) => {
            diags.push(Diagnostic::new(format!("{prefix}.block_dims"), "only valid for group_lasso"));
            None
        }
        (ProblemName::ElasticNet, None) => Some(ProblemKind::ElasticNet),
        (ProblemName::FusedLasso, None) => Some(ProblemKind::FusedLasso),
    }
}

impl SolveParams {
    pub fn kind(&self) -> ProblemKind {
        problem_kind(self.problem, &self.block_dims, "params", &mut Vec::new()).expect("validated")
    }
}

impl TuneParams {
    pub fn kind(&self) -> ProblemKind {
        problem_kind(self.problem, &self.block_dims, "params", &mut Vec::new()).expect("validated")
    }
}

impl GapcurveParams {
    pub fn kind(&self) -> ProblemKind {
        problem_kind(self.problem, &self.block_dims, "params", &mut Vec::new()).expect("validated")
    }
}

impl ShatterParams {
    pub fn kind(&self) -> Option<ProblemKind> {
        self.problem
            .and_then(|p| problem_kind(p, &self.block_dims, "params", &mut Vec::new()))
    }
}

fn check_lib(diags: &mut Vec<Diagnostic>, field: &str, r: pdimtune::Result<()>) {
    if let Err(e) = r {
        diags.push(Diagnostic::new(field, e.to_string()));
    }
}

fn check_distribution(
    diags: &mut Vec<Diagnostic>,
    field: &str,
    dist: &DistributionParams,
    seed: Option<u64>,
    kind: Option<&ProblemKind>,
) {
    match seed {
        None => diags.push(Diagnostic::new("seed", "required for commands that sample instances")),
        Some(seed) => check_lib(diags, field, dist.with_seed(seed).validate()),
    }
    if let Some(ProblemKind::GroupLasso { block_dims }) = kind {
        if block_dims.iter().sum::<usize>() != dist.d {
            diags.push(Diagnostic::new(
                format!("{field}.d"),
                format!("block_dims sum to {} but d = {}", block_dims.iter().sum::<usize>(), dist.d),
            ));
        }
    }
}

fn check_grid(diags: &mut Vec<Diagnostic>, field: &str, grid: &AlphaGrid, kind: Option<&ProblemKind>, d: usize) {
    check_lib(diags, field, grid.validate());
    if let Some(kind) = kind {
        let p = kind.alpha_dim(d);
        if grid.bounds.len() != p {
            diags.push(Diagnostic::new(
                format!("{field}.bounds"),
                format!("{} needs {p} hyperparameter axes, got {}", kind.name(), grid.bounds.len()),
            ));
        }
    }
}

/// Parses and validates a config document. `invoked` is the subcommand the
/// program was started with; a `command` field in the file must agree.
pub fn parse_config(text: &str, invoked: Command, base_dir: &Path) -> Result<RunConfig, Vec<Diagnostic>> {
    let doc: Value = serde_json::from_str(text).map_err(|e| {
        vec![Diagnostic::new("$", format!("invalid JSON at line {} column {}: {e}", e.line(), e.column()))]
    })?;
    let raw: RawConfig = parse_at(&doc, "$").map_err(|mut d| {
        for x in &mut d {
            x.field = x.field.trim_start_matches("$.").to_owned();
        }
        d
    })?;

    let mut diags = Vec::new();
    if let Some(cmd) = raw.command {
        if cmd != invoked {
            diags.push(Diagnostic::new(
                "command",
                format!("config is for `{}` but `{}` was invoked", cmd.name(), invoked.name()),
            ));
        }
    }
    if !(raw.c > 0.0 && raw.c.is_finite()) {
        diags.push(Diagnostic::new("c", "must be positive and finite"));
    }
    if raw.threads == Some(0) {
        diags.push(Diagnostic::new("threads", "must be at least 1"));
    }
    check_lib(&mut diags, "solver", raw.solver.validate());

    let params = match invoked {
        Command::Bounds => Params::Bounds(parse_bounds(&raw.params)?),
        Command::Solve => {
            let p: SolveParams = parse_at(&raw.params, "params")?;
            problem_kind(p.problem, &p.block_dims, "params", &mut diags);
            if p.instance.is_some() == p.instance_path.is_some() {
                diags.push(Diagnostic::new("params.instance", "give exactly one of instance or instance_path"));
            }
            Params::Solve(p)
        }
        Command::Tune => {
            let p: TuneParams = parse_at(&raw.params, "params")?;
            let kind = problem_kind(p.problem, &p.block_dims, "params", &mut diags);
            check_distribution(&mut diags, "params.distribution", &p.distribution, raw.seed, kind.as_ref());
            check_grid(&mut diags, "params.grid", &p.grid, kind.as_ref(), p.distribution.d);
            if p.n == 0 {
                diags.push(Diagnostic::new("params.n", "must be at least 1"));
            }
            Params::Tune(p)
        }
        Command::Gapcurve => {
            let p: GapcurveParams = parse_at(&raw.params, "params")?;
            let kind = problem_kind(p.problem, &p.block_dims, "params", &mut diags);
            check_distribution(&mut diags, "params.distribution", &p.distribution, raw.seed, kind.as_ref());
            check_grid(&mut diags, "params.grid", &p.grid, kind.as_ref(), p.distribution.d);
            check_lib(&mut diags, "params", p.curve_config().validate());
            Params::Gapcurve(p)
        }
        Command::Shatter => {
            let p: ShatterParams = parse_at(&raw.params, "params")?;
            let generated = p.problem.is_some() || p.distribution.is_some() || p.n.is_some() || p.grid.is_some();
            match (&p.loss_matrix, generated) {
                (Some(_), true) => diags.push(Diagnostic::new(
                    "params.loss_matrix",
                    "give either loss_matrix or problem/distribution/n/grid, not both",
                )),
                (None, false) => diags.push(Diagnostic::new(
                    "params.loss_matrix",
                    "give either loss_matrix or problem/distribution/n/grid",
                )),
                (None, true) => {
                    let kind = match p.problem {
                        Some(name) => problem_kind(name, &p.block_dims, "params", &mut diags),
                        None => {
                            diags.push(Diagnostic::new("params.problem", "required without loss_matrix"));
                            None
                        }
                    };
                    match &p.distribution {
                        Some(dist) => {
                            check_distribution(&mut diags, "params.distribution", dist, raw.seed, kind.as_ref());
                            if let Some(grid) = &p.grid {
                                check_grid(&mut diags, "params.grid", grid, kind.as_ref(), dist.d);
                            }
                        }
                        None => diags.push(Diagnostic::new("params.distribution", "required without loss_matrix")),
                    }
                    if p.grid.is_none() {
                        diags.push(Diagnostic::new("params.grid", "required without loss_matrix"));
                    }
                    if !matches!(p.n, Some(n) if n > 0) {
                        diags.push(Diagnostic::new("params.n", "a positive instance count is required without loss_matrix"));
                    }
                }
                (Some(_), false) => {}
            }
            if p.node_budget == 0 {
                diags.push(Diagnostic::new("params.node_budget", "must be positive"));
            }
            Params::Shatter(p)
        }
    };

    if !diags.is_empty() {
        return Err(diags);
    }
    Ok(RunConfig {
        command: invoked,
        seed: raw.seed,
        c: raw.c,
        threads: raw.threads,
        solver: raw.solver,
        params,
        out: raw.out,
        base_dir: base_dir.to_path_buf(),
    })
}
