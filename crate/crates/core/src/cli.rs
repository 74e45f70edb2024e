//! Command-line front end: scenario files, the four workflows and file output.
//!
//! # Scenario file
//!
//! A scenario is a TOML document. Unknown keys are rejected.
//!
//! ```toml
//! horizon = 10000        # optional, default 10000
//! tolerance = 1e-10      # optional, default 1e-10
//! edges = [[0, 1], [0, 2], [1, 2]]
//!
//! [schedule]             # optional, default synchronous
//! kind = "periodic"      # "synchronous" | "alternating" | "periodic"
//! pattern = [[0], [1, 2]]  # periodic only: agents acting at steps 1, 2, ...
//!
//! [[agents]]
//! kindness = 0.0
//! r = 0.5
//! r_prime = 0.3
//! attitude = "floating"  # "fixed" | "floating"
//!
//! [outputs]              # optional file names, relative to --out
//! trajectory = "trajectory.csv"
//! limit = "limit.csv"
//! matrix = "matrix.csv"  # written with --matrix-dump
//! chart = "chart.svg"    # written with --chart
//! sweep = "sweep.csv"
//! verdicts = "verdicts.txt"
//! summary = "summary.txt"
//! ```

use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;
use thiserror::Error;

use crate::analysis::{self, SweepError, SweepParameter, SweepSpec};
use crate::dynamics::{
    self, estimate_rate, fmt_f64, Classification, RateEstimate, SimulationOptions, Trajectory,
};
use crate::limits::{self, LimitResult};
use crate::model::{
    ActionVector, ActivationSchedule, AgentSpec, InteractionGraph, Scenario, ScheduleKind,
};
use crate::spectral::{self, check_structure};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_PERIOD_TWO: i32 = 2;
pub const EXIT_MAX_STEPS: i32 = 3;
pub const EXIT_UNKNOWN_LIMIT: i32 = 4;
/// A checked property was violated or a sweep could not be evaluated.
pub const EXIT_ANALYSIS: i32 = 5;

pub fn classification_exit_code(c: &Classification) -> i32 {
    match c {
        Classification::Converged { .. } => EXIT_OK,
        Classification::PeriodTwo { .. } => EXIT_PERIOD_TWO,
        Classification::MaxStepsReached => EXIT_MAX_STEPS,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScheduleKindConfig {
    Synchronous,
    Alternating,
    Periodic,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleConfig {
    pub kind: ScheduleKindConfig,
    pub pattern: Option<Vec<Vec<usize>>>,
}

#[derive(Debug, Clone, PartialEq, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputsConfig {
    pub trajectory: Option<String>,
    pub limit: Option<String>,
    pub matrix: Option<String>,
    pub chart: Option<String>,
    pub sweep: Option<String>,
    pub verdicts: Option<String>,
    pub summary: Option<String>,
}

impl OutputsConfig {
    fn name<'a>(field: &'a Option<String>, default: &'a str) -> &'a str {
        field.as_deref().unwrap_or(default)
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub agents: Vec<AgentSpec>,
    pub edges: Vec<[usize; 2]>,
    pub schedule: Option<ScheduleConfig>,
    pub horizon: Option<usize>,
    pub tolerance: Option<f64>,
    #[serde(default)]
    pub outputs: OutputsConfig,
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{0}")]
    Parse(String),
    #[error("{field}: {message}")]
    Field { field: String, message: String },
}

fn field_error(field: impl Into<String>, message: impl ToString) -> ConfigError {
    ConfigError::Field {
        field: field.into(),
        message: message.to_string(),
    }
}

impl ScenarioConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn to_scenario(&self) -> Result<Scenario, ConfigError> {
        for (i, a) in self.agents.iter().enumerate() {
            a.validate()
                .map_err(|e| field_error(format!("agents[{i}]"), e))?;
        }
        let edges: Vec<(usize, usize)> = self.edges.iter().map(|[i, j]| (*i, *j)).collect();
        let graph = InteractionGraph::new(self.agents.len(), &edges)
            .map_err(|e| field_error("edges", e))?;
        let n = self.agents.len();
        let schedule = match &self.schedule {
            None => ActivationSchedule::synchronous(n),
            Some(ScheduleConfig { kind, pattern }) => {
                if *kind != ScheduleKindConfig::Periodic && pattern.is_some() {
                    return Err(field_error(
                        "schedule.pattern",
                        "only allowed with kind = \"periodic\"",
                    ));
                }
                let kind = match kind {
                    ScheduleKindConfig::Synchronous => ScheduleKind::Synchronous,
                    ScheduleKindConfig::Alternating => ScheduleKind::Alternating,
                    ScheduleKindConfig::Periodic => {
                        ScheduleKind::Periodic(pattern.clone().ok_or_else(|| {
                            field_error("schedule.pattern", "required for kind = \"periodic\"")
                        })?)
                    }
                };
                ActivationSchedule::new(kind, n).map_err(|e| field_error("schedule", e))?
            }
        };
        Scenario::new(self.agents.clone(), graph, schedule).map_err(|e| field_error("agents", e))
    }

    pub fn options(&self) -> Result<SimulationOptions, ConfigError> {
        let mut opts = SimulationOptions::default();
        if let Some(h) = self.horizon {
            if h == 0 {
                return Err(field_error("horizon", "must be at least 1"));
            }
            opts.horizon = h;
        }
        if let Some(t) = self.tolerance {
            if !(t > 0.0 && t.is_finite()) {
                return Err(field_error("tolerance", "must be a positive number"));
            }
            opts.tolerance = t;
        }
        Ok(opts)
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "reciprocity",
    version,
    about = "Simulate and analyse networks of reciprocating agents"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, clap::Args)]
pub struct CommonArgs {
    /// Scenario file (TOML).
    #[arg(long)]
    pub config: PathBuf,
    /// Directory for output files.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// Write the dynamics matrix as CSV.
    #[arg(long)]
    pub matrix_dump: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ParamArg {
    Kindness,
    R,
    RPrime,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the dynamics and classify the trajectory.
    Simulate {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        horizon: Option<usize>,
        #[arg(long)]
        tol: Option<f64>,
        /// Write an SVG line chart of every edge.
        #[arg(long)]
        chart: bool,
    },
    /// Report the applicable closed form or linear solve.
    Limit {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Sweep one agent parameter and report regularity verdicts.
    Sweep {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        agent: usize,
        #[arg(long, value_enum)]
        param: ParamArg,
        /// Comma-separated grid.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
        /// Skip re-simulating closed-form grid points.
        #[arg(long)]
        no_cross_check: bool,
        #[arg(long)]
        horizon: Option<usize>,
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Run the applicable property suite and the matrix/step equivalence check.
    Check {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        horizon: Option<usize>,
        #[arg(long)]
        tol: Option<f64>,
        /// Seed for the randomized equivalence samples.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Number of random action vectors to push through both step forms.
        #[arg(long, default_value_t = 100)]
        samples: usize,
    },
}

/// Parses `args` (including the program name) and runs the command.
pub fn run_from_args<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => run(&cli, out, err),
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let _ = if e.use_stderr() {
                write!(err, "{e}")
            } else {
                write!(out, "{e}")
            };
            code
        }
    }
}

pub fn run(cli: &Cli, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let result = match &cli.command {
        Command::Simulate {
            common,
            horizon,
            tol,
            chart,
        } => cmd_simulate(common, *horizon, *tol, *chart, out),
        Command::Limit { common } => cmd_limit(common, out),
        Command::Sweep {
            common,
            agent,
            param,
            values,
            no_cross_check,
            horizon,
            tol,
        } => {
            let parameter = match param {
                ParamArg::Kindness => SweepParameter::Kindness(*agent),
                ParamArg::R => SweepParameter::R(*agent),
                ParamArg::RPrime => SweepParameter::RPrime(*agent),
            };
            cmd_sweep(
                common,
                parameter,
                values,
                !no_cross_check,
                *horizon,
                *tol,
                out,
            )
        }
        Command::Check {
            common,
            horizon,
            tol,
            seed,
            samples,
        } => cmd_check(common, *horizon, *tol, *seed, *samples, out),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("writing {path}: {source}")]
    Output { path: PathBuf, source: io::Error },
    #[error("{0}")]
    Analysis(String),
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Analysis(_) => EXIT_ANALYSIS,
            _ => EXIT_INPUT,
        }
    }
}

struct Loaded {
    config: ScenarioConfig,
    scenario: Scenario,
    options: SimulationOptions,
}

fn load(
    common: &CommonArgs,
    horizon: Option<usize>,
    tol: Option<f64>,
) -> Result<Loaded, ConfigError> {
    let config = ScenarioConfig::load(&common.config)?;
    let scenario = config.to_scenario()?;
    let mut options = config.options()?;
    if let Some(h) = horizon {
        if h == 0 {
            return Err(field_error("--horizon", "must be at least 1"));
        }
        options.horizon = h;
    }
    if let Some(t) = tol {
        if !(t > 0.0 && t.is_finite()) {
            return Err(field_error("--tol", "must be a positive number"));
        }
        options.tolerance = t;
    }
    Ok(Loaded {
        config,
        scenario,
        options,
    })
}

/// Files are collected in memory and only written once the whole workflow
/// has succeeded, each through a temporary file renamed into place.
struct Outputs {
    dir: PathBuf,
    files: Vec<(String, Vec<u8>)>,
}

impl Outputs {
    fn new(dir: &Path) -> Self {
        Outputs {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        }
    }

    fn add(&mut self, name: &str, fill: impl FnOnce(&mut Vec<u8>) -> io::Result<()>) {
        let mut buf = Vec::new();
        fill(&mut buf).expect("writing to memory cannot fail");
        self.files.push((name.to_string(), buf));
    }

    fn commit(self) -> Result<Vec<PathBuf>, CliError> {
        fs::create_dir_all(&self.dir).map_err(|source| CliError::Output {
            path: self.dir.clone(),
            source,
        })?;
        let mut written = Vec::new();
        for (name, bytes) in self.files {
            let path = self.dir.join(&name);
            let io_err = |source| CliError::Output {
                path: path.clone(),
                source,
            };
            let mut tmp = tempfile::NamedTempFile::new_in(&self.dir).map_err(io_err)?;
            tmp.write_all(&bytes).map_err(io_err)?;
            tmp.persist(&path).map_err(|e| io_err(e.error))?;
            written.push(path);
        }
        Ok(written)
    }
}

fn report_written(paths: &[PathBuf], out: &mut dyn Write) {
    for p in paths {
        let _ = writeln!(out, "wrote {}", p.display());
    }
}

fn add_matrix(outputs: &mut Outputs, loaded: &Loaded) {
    let s = &loaded.scenario;
    let m = spectral::build_sync_matrix(&s.agents, &s.graph);
    outputs.add(
        OutputsConfig::name(&loaded.config.outputs.matrix, "matrix.csv"),
        |b| m.write_csv(&s.graph, b),
    );
}

/// Text summary of a finished simulation.
pub fn simulation_summary(s: &Scenario, traj: &Trajectory) -> String {
    let mut text = String::new();
    let _ = writeln!(text, "classification: {}", traj.classification.label());
    let _ = writeln!(text, "steps: {}", traj.horizon_used);
    match &traj.classification {
        Classification::Converged { limit, at_step } => {
            let _ = writeln!(text, "converged_at: {at_step}");
            let (lo, hi) = limit
                .values()
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| {
                    (a.min(*v), b.max(*v))
                });
            if hi - lo <= 1e-9 * hi.abs().max(1.0) {
                let _ = writeln!(text, "common_limit: {}", fmt_f64(limit[0]));
            }
            for (e, v) in s.graph.directed_edges().iter().zip(limit.values()) {
                let _ = writeln!(text, "limit {e}: {}", fmt_f64(*v));
            }
            match estimate_rate(traj) {
                Ok(RateEstimate::Geometric { rate, r_squared }) => {
                    let _ = writeln!(text, "rate: {rate:.6} (R^2 {r_squared:.4})");
                }
                Ok(RateEstimate::NotGeometric { reason }) => {
                    let _ = writeln!(text, "rate: not geometric ({reason})");
                }
                Err(e) => {
                    let _ = writeln!(text, "rate: unavailable ({e})");
                }
            }
        }
        Classification::PeriodTwo { states: (a, b) } => {
            for (k, e) in s.graph.directed_edges().iter().enumerate() {
                let _ = writeln!(text, "cycle {e}: {} <-> {}", fmt_f64(a[k]), fmt_f64(b[k]));
            }
        }
        Classification::MaxStepsReached => {
            let _ = writeln!(text, "no classification within the horizon");
        }
    }
    text
}

pub fn cmd_simulate(
    common: &CommonArgs,
    horizon: Option<usize>,
    tol: Option<f64>,
    chart: bool,
    out: &mut dyn Write,
) -> Result<i32, CliError> {
    let loaded = load(common, horizon, tol)?;
    let s = &loaded.scenario;
    let traj =
        dynamics::simulate(s, &loaded.options).map_err(|e| CliError::Analysis(e.to_string()))?;
    let summary = simulation_summary(s, &traj);
    let names = &loaded.config.outputs;

    let mut outputs = Outputs::new(&common.out);
    outputs.add(
        OutputsConfig::name(&names.trajectory, "trajectory.csv"),
        |b| dynamics::write_trajectory_csv(&traj, &s.graph, b),
    );
    outputs.add(OutputsConfig::name(&names.summary, "summary.txt"), |b| {
        b.write_all(summary.as_bytes())
    });
    if chart {
        outputs.add(OutputsConfig::name(&names.chart, "chart.svg"), |b| {
            b.write_all(svg_chart(&traj, &s.graph).as_bytes())
        });
    }
    if common.matrix_dump {
        add_matrix(&mut outputs, &loaded);
    }
    let written = outputs.commit()?;
    let _ = out.write_all(summary.as_bytes());
    report_written(&written, out);
    Ok(classification_exit_code(&traj.classification))
}

pub fn cmd_limit(common: &CommonArgs, out: &mut dyn Write) -> Result<i32, CliError> {
    let loaded = load(common, None, None)?;
    let s = &loaded.scenario;
    let structure = check_structure(&s.agents, &s.graph);
    let report = limits::scenario_limit(s).map_err(|e| CliError::Analysis(e.to_string()))?;

    let mut text = String::new();
    let _ = writeln!(text, "structure: {:?}", structure.verdict());
    if let Some(why) = structure.failed_hypothesis() {
        let _ = writeln!(text, "network hypothesis not met: {why}");
    }
    let _ = writeln!(text, "theorem: {}", report.theorem);
    let _ = writeln!(text, "source: {}", report.source.as_str());
    let _ = writeln!(text, "result: {}", report.result);
    if s.schedule.is_synchronous() {
        let m = spectral::build_sync_matrix(&s.agents, &s.graph);
        match spectral::spectral_radius(&m, spectral::POWER_TOL) {
            Ok(rho) => {
                let _ = writeln!(text, "spectral_radius: {rho:.12}");
            }
            Err(e) => {
                let _ = writeln!(text, "spectral_radius: unavailable ({e})");
            }
        }
    }

    let mut outputs = Outputs::new(&common.out);
    if let Some(values) = report.result.per_edge(&s.graph) {
        outputs.add(
            OutputsConfig::name(&loaded.config.outputs.limit, "limit.csv"),
            |b| {
                writeln!(b, "edge_from,edge_to,limit,source")?;
                for (e, v) in s.graph.directed_edges().iter().zip(&values) {
                    writeln!(
                        b,
                        "{},{},{},{}",
                        e.from,
                        e.to,
                        fmt_f64(*v),
                        report.source.as_str()
                    )?;
                }
                Ok(())
            },
        );
    }
    if common.matrix_dump {
        add_matrix(&mut outputs, &loaded);
    }
    let written = outputs.commit()?;
    let _ = out.write_all(text.as_bytes());
    report_written(&written, out);
    Ok(match report.result {
        LimitResult::Unknown(_) => EXIT_UNKNOWN_LIMIT,
        _ => EXIT_OK,
    })
}

pub fn cmd_sweep(
    common: &CommonArgs,
    parameter: SweepParameter,
    values: &[f64],
    cross_check: bool,
    horizon: Option<usize>,
    tol: Option<f64>,
    out: &mut dyn Write,
) -> Result<i32, CliError> {
    let loaded = load(common, horizon, tol)?;
    let mut spec = SweepSpec::new(loaded.scenario.clone(), parameter, values.to_vec());
    spec.cross_check = cross_check;
    spec.options = loaded.options;
    let result = analysis::run_sweep(&spec).map_err(|e| match e {
        SweepError::InvalidGridPoint { .. } => CliError::Config(field_error("--values", e)),
        other => CliError::Analysis(other.to_string()),
    })?;

    let names = &loaded.config.outputs;
    let mut outputs = Outputs::new(&common.out);
    outputs.add(OutputsConfig::name(&names.sweep, "sweep.csv"), |b| {
        result.write_csv(b)
    });
    let mut verdicts = Vec::new();
    result
        .write_verdicts(&mut verdicts)
        .expect("in-memory write");
    outputs.add(OutputsConfig::name(&names.verdicts, "verdicts.txt"), |b| {
        b.write_all(&verdicts)
    });
    if common.matrix_dump {
        add_matrix(&mut outputs, &loaded);
    }
    let written = outputs.commit()?;
    let _ = out.write_all(&verdicts);
    let _ = writeln!(out, "monotone: {}", result.all_monotone());
    let _ = writeln!(out, "affine: {}", result.all_affine());
    report_written(&written, out);
    Ok(EXIT_OK)
}

/// Largest gap between the matrix form and the direct step over a trajectory
/// and `samples` random action vectors.
pub fn step_equivalence_gap(s: &Scenario, traj: &Trajectory, seed: u64, samples: usize) -> f64 {
    let mut gap = 0.0f64;
    let mut compare = |state: &ActionVector, active: &[bool]| {
        let m = spectral::build_matrix(&s.agents, &s.graph, active);
        let k = spectral::kindness_vector(&s.agents, &s.graph, active);
        let via_matrix = m.apply(state, &k);
        let direct = dynamics::step(state, &s.agents, &s.graph, active).expect("dimensions match");
        gap = gap.max(via_matrix.sup_distance(&direct));
    };
    for t in 1..traj.states.len() {
        compare(&traj.states[t - 1], &s.schedule.active_mask(t));
    }
    let (lo, hi) = s.kindness_range();
    let (lo, hi) = if lo < hi {
        (lo, hi)
    } else {
        (lo - 1.0, hi + 1.0)
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = s.agent_count();
    for _ in 0..samples {
        let state = ActionVector::new(
            (0..s.graph.directed_edge_count())
                .map(|_| rng.gen_range(lo..=hi))
                .collect(),
        );
        let mut active: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.5)).collect();
        if !active.iter().any(|a| *a) {
            active[rng.gen_range(0..n)] = true;
        }
        compare(&state, &active);
    }
    gap
}

pub const EQUIVALENCE_TOL: f64 = 1e-13;

pub fn cmd_check(
    common: &CommonArgs,
    horizon: Option<usize>,
    tol: Option<f64>,
    seed: u64,
    samples: usize,
    out: &mut dyn Write,
) -> Result<i32, CliError> {
    let loaded = load(common, horizon, tol)?;
    let s = &loaded.scenario;
    let traj =
        dynamics::simulate(s, &loaded.options).map_err(|e| CliError::Analysis(e.to_string()))?;
    let suite = analysis::check_lemma_suite(s, &traj);

    let mut text = String::new();
    let _ = writeln!(text, "classification: {}", traj.classification.label());
    for outcome in &suite {
        let _ = writeln!(text, "{outcome}");
    }
    let scale = s
        .kindness_range()
        .0
        .abs()
        .max(s.kindness_range().1.abs())
        .max(1.0);
    let gap = step_equivalence_gap(s, &traj, seed, samples);
    let equivalent = gap <= EQUIVALENCE_TOL * scale;
    let _ = writeln!(
        text,
        "matrix_step_equivalence: {} (max gap {gap:.3e}, seed {seed}, {samples} samples)",
        if equivalent { "holds" } else { "VIOLATED" }
    );

    let limits = if s.schedule.is_synchronous() {
        limits::scenario_limit(s)
            .ok()
            .and_then(|r| r.result.per_edge(&s.graph))
    } else {
        None
    }
    .or_else(|| traj.limit().map(|l| l.values().to_vec()));
    if let Some(limits) = limits {
        for finding in analysis::fixed_ordering_findings(s, &limits) {
            let _ = writeln!(text, "finding: {finding}");
        }
    }

    let mut outputs = Outputs::new(&common.out);
    if common.matrix_dump {
        add_matrix(&mut outputs, &loaded);
    }
    let written = outputs.commit()?;
    let _ = out.write_all(text.as_bytes());
    report_written(&written, out);
    let ok = equivalent && suite.iter().all(|o| !o.failed());
    Ok(if ok { EXIT_OK } else { EXIT_ANALYSIS })
}

const PALETTE: [&str; 8] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
];

/// Minimal SVG line chart, one polyline per directed edge.
pub fn svg_chart(traj: &Trajectory, graph: &InteractionGraph) -> String {
    let (w, h, pad) = (720.0, 420.0, 40.0);
    let steps = traj.states.len().max(2) - 1;
    let (mut lo, mut hi) = traj
        .states
        .iter()
        .flat_map(|s| s.values().iter().copied())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| {
            (a.min(v), b.max(v))
        });
    if hi - lo < 1e-12 {
        lo -= 0.5;
        hi += 0.5;
    }
    let x = |t: usize| pad + (w - 2.0 * pad) * t as f64 / steps as f64;
    let y = |v: f64| h - pad - (h - 2.0 * pad) * (v - lo) / (hi - lo);

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#
    );
    let _ = writeln!(svg, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<polyline points="{pad},{pad} {pad},{b} {r},{b}" fill="none" stroke="black"/>"#,
        b = h - pad,
        r = w - pad
    );
    let _ = writeln!(
        svg,
        r#"<text x="4" y="{}" font-size="11">{:.4}</text>"#,
        pad, hi
    );
    let _ = writeln!(
        svg,
        r#"<text x="4" y="{}" font-size="11">{:.4}</text>"#,
        h - pad,
        lo
    );
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" font-size="11">t = {steps}</text>"#,
        w - pad - 40.0,
        h - pad + 16.0
    );
    for (k, e) in graph.directed_edges().iter().enumerate() {
        let colour = PALETTE[k % PALETTE.len()];
        let points: Vec<String> = traj
            .states
            .iter()
            .enumerate()
            .map(|(t, s)| format!("{:.2},{:.2}", x(t), y(s[k])))
            .collect();
        let _ = writeln!(
            svg,
            r#"<polyline points="{}" fill="none" stroke="{colour}" stroke-width="1.5"/>"#,
            points.join(" ")
        );
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" font-size="11" fill="{colour}">{e}</text>"#,
            w - pad + 4.0,
            pad + 14.0 * k as f64
        );
    }
    svg.push_str("</svg>\n");
    svg
}
