//! Parameter sweeps, regularity verdicts and property suites over trajectories.

use std::fmt;
use std::io::{self, Write};

use thiserror::Error;

use crate::dynamics::{self, fmt_f64, DynamicsError, LinearFit, SimulationOptions, Trajectory};
use crate::limits::{self, LimitError, LimitSource, TwoAgentCase};
use crate::model::{
    ActionVector, AgentSpec, Attitude, DirectedEdge, InteractionGraph, ModelError, Scenario,
    COEFF_EPS,
};

/// Plateaus smaller than this count as monotone.
pub const MONOTONE_TOL: f64 = 1e-8;
/// Largest residual of an affine fit that still counts as linear.
pub const LINEAR_TOL: f64 = 1e-6;
/// Closed form and simulation must agree this closely.
pub const CROSS_CHECK_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SweepError {
    #[error("grid value {value} is invalid: {reason}")]
    InvalidGridPoint { value: f64, reason: String },
    #[error("invalid attachment: {0}")]
    InvalidAttachment(String),
    #[error("no limit at grid value {value}: {reason}")]
    NoLimit { value: f64, reason: String },
    #[error("closed form {closed} and simulation {simulated} disagree on edge {edge} at grid value {value}")]
    CrossCheckFailed {
        value: f64,
        edge: DirectedEdge,
        closed: f64,
        simulated: f64,
    },
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Limit(#[from] LimitError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParameter {
    Kindness(usize),
    R(usize),
    RPrime(usize),
    /// Number of base agents a newly attached agent connects to.
    Degree,
}

impl fmt::Display for SweepParameter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SweepParameter::Kindness(i) => write!(f, "kindness[{i}]"),
            SweepParameter::R(i) => write!(f, "r[{i}]"),
            SweepParameter::RPrime(i) => write!(f, "r_prime[{i}]"),
            SweepParameter::Degree => write!(f, "degree"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub enum SweepTarget {
    #[default]
    AllEdges,
    Edges(Vec<DirectedEdge>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub base: Scenario,
    pub parameter: SweepParameter,
    pub grid: Vec<f64>,
    pub target: SweepTarget,
    /// Re-simulate every closed-form grid point and compare.
    pub cross_check: bool,
    pub options: SimulationOptions,
}

impl SweepSpec {
    pub fn new(base: Scenario, parameter: SweepParameter, grid: Vec<f64>) -> Self {
        SweepSpec {
            base,
            parameter,
            grid,
            target: SweepTarget::AllEdges,
            cross_check: true,
            options: SimulationOptions::default(),
        }
    }

    pub fn without_cross_check(mut self) -> Self {
        self.cross_check = false;
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub value: f64,
    pub edges: Vec<DirectedEdge>,
    pub limits: Vec<f64>,
    pub source: LimitSource,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Monotonicity {
    Constant,
    Increasing,
    Decreasing,
    NonMonotone,
}

impl fmt::Display for Monotonicity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Monotonicity::Constant => "constant",
            Monotonicity::Increasing => "increasing",
            Monotonicity::Decreasing => "decreasing",
            Monotonicity::NonMonotone => "non-monotone",
        })
    }
}

impl Monotonicity {
    pub fn is_monotone(&self) -> bool {
        *self != Monotonicity::NonMonotone
    }
}

/// Monotonicity of a sequence up to `tol`, plus the size of the smaller of
/// its largest rise and largest drop (zero-ish when monotone).
pub fn monotonicity(values: &[f64], tol: f64) -> (Monotonicity, f64) {
    let (rise, drop) = values.windows(2).fold((0.0f64, 0.0f64), |(rise, drop), w| {
        let d = w[1] - w[0];
        (rise.max(d), drop.max(-d))
    });
    let verdict = match (rise > tol, drop > tol) {
        (false, false) => Monotonicity::Constant,
        (true, false) => Monotonicity::Increasing,
        (false, true) => Monotonicity::Decreasing,
        (true, true) => Monotonicity::NonMonotone,
    };
    (verdict, rise.min(drop))
}

#[derive(Debug, Clone, PartialEq)]
pub struct EdgeVerdict {
    pub edge: DirectedEdge,
    pub monotonicity: Monotonicity,
    pub violation: f64,
    pub fit: LinearFit,
}

impl EdgeVerdict {
    pub fn is_affine(&self) -> bool {
        self.fit.max_residual <= LINEAR_TOL
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub parameter: SweepParameter,
    pub rows: Vec<SweepRow>,
    /// One per edge present in every row.
    pub verdicts: Vec<EdgeVerdict>,
}

impl SweepResult {
    fn assemble(parameter: SweepParameter, rows: Vec<SweepRow>) -> Self {
        let mut verdicts = Vec::new();
        if let Some(first) = rows.first() {
            for edge in &first.edges {
                let series: Option<Vec<(f64, f64)>> = rows
                    .iter()
                    .map(|row| {
                        row.edges
                            .iter()
                            .position(|e| e == edge)
                            .map(|k| (row.value, row.limits[k]))
                    })
                    .collect();
                let Some(series) = series else { continue };
                let ys: Vec<f64> = series.iter().map(|p| p.1).collect();
                let (monotonicity, violation) = monotonicity(&ys, MONOTONE_TOL);
                verdicts.push(EdgeVerdict {
                    edge: *edge,
                    monotonicity,
                    violation,
                    fit: LinearFit::least_squares(&series),
                });
            }
        }
        SweepResult {
            parameter,
            rows,
            verdicts,
        }
    }

    pub fn all_monotone(&self) -> bool {
        self.verdicts.iter().all(|v| v.monotonicity.is_monotone())
    }

    pub fn all_affine(&self) -> bool {
        self.verdicts.iter().all(EdgeVerdict::is_affine)
    }

    /// Largest spread of any edge's limit across the grid.
    pub fn max_drift(&self) -> f64 {
        self.verdicts
            .iter()
            .map(|v| {
                let ys = self.rows.iter().filter_map(|r| {
                    r.edges
                        .iter()
                        .position(|e| *e == v.edge)
                        .map(|k| r.limits[k])
                });
                let (lo, hi) = ys.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), y| {
                    (lo.min(y), hi.max(y))
                });
                hi - lo
            })
            .fold(0.0, f64::max)
    }

    /// `param_value,edge_from,edge_to,limit`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "param_value,edge_from,edge_to,limit")?;
        for row in &self.rows {
            for (e, l) in row.edges.iter().zip(&row.limits) {
                writeln!(
                    out,
                    "{},{},{},{}",
                    fmt_f64(row.value),
                    e.from,
                    e.to,
                    fmt_f64(*l)
                )?;
            }
        }
        Ok(())
    }

    pub fn write_verdicts<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "parameter = {}", self.parameter)?;
        writeln!(out, "grid_points = {}", self.rows.len())?;
        writeln!(out, "monotone_tolerance = {MONOTONE_TOL:e}")?;
        writeln!(out, "linear_residual_threshold = {LINEAR_TOL:e}")?;
        for v in &self.verdicts {
            writeln!(
                out,
                "edge {}: {} (violation {:.3e}); affine fit slope {:.12} intercept {:.12} max_residual {:.3e}",
                v.edge, v.monotonicity, v.violation, v.fit.slope, v.fit.intercept, v.fit.max_residual
            )?;
        }
        Ok(())
    }
}

fn substitute(
    base: &Scenario,
    parameter: SweepParameter,
    value: f64,
) -> Result<Scenario, SweepError> {
    let invalid = |reason: String| SweepError::InvalidGridPoint { value, reason };
    let mut agents = base.agents.clone();
    let slot = match parameter {
        SweepParameter::Kindness(i) | SweepParameter::R(i) | SweepParameter::RPrime(i) => agents
            .get_mut(i)
            .ok_or_else(|| invalid(format!("no agent {i}")))?,
        SweepParameter::Degree => {
            return Err(invalid("degree sweeps go through degree_sweep".into()))
        }
    };
    match parameter {
        SweepParameter::Kindness(_) => slot.kindness = value,
        SweepParameter::R(_) => slot.r = value,
        SweepParameter::RPrime(_) => slot.r_prime = value,
        SweepParameter::Degree => unreachable!(),
    }
    slot.validate()
        .map_err(|e: ModelError| invalid(e.to_string()))?;
    base.with_agents(agents).map_err(|e| invalid(e.to_string()))
}

/// Limit per directed edge: closed form or linear solve when available,
/// simulation otherwise.
pub fn limit_values(
    s: &Scenario,
    options: &SimulationOptions,
) -> Result<(Vec<f64>, LimitSource), String> {
    let report = limits::scenario_limit(s).map_err(|e| e.to_string())?;
    if let Some(values) = report.result.per_edge(&s.graph) {
        return Ok((values, report.source));
    }
    let traj = dynamics::simulate(s, options).map_err(|e| e.to_string())?;
    match traj.limit() {
        Some(limit) => Ok((limit.values().to_vec(), LimitSource::Simulation)),
        None => Err(format!(
            "simulation ended as {}",
            traj.classification.label()
        )),
    }
}

fn evaluate_point(
    s: &Scenario,
    value: f64,
    target: &SweepTarget,
    cross_check: bool,
    options: &SimulationOptions,
) -> Result<SweepRow, SweepError> {
    let (limits, source) =
        limit_values(s, options).map_err(|reason| SweepError::NoLimit { value, reason })?;
    if cross_check && source != LimitSource::Simulation {
        let traj = dynamics::simulate(s, options)?;
        let simulated = traj.limit().ok_or_else(|| SweepError::NoLimit {
            value,
            reason: format!(
                "cross-check simulation ended as {}",
                traj.classification.label()
            ),
        })?;
        for (k, (&closed, &sim)) in limits.iter().zip(simulated.values()).enumerate() {
            if (closed - sim).abs() > CROSS_CHECK_TOL {
                return Err(SweepError::CrossCheckFailed {
                    value,
                    edge: s.graph.edge_of(k),
                    closed,
                    simulated: sim,
                });
            }
        }
    }
    let all = s.graph.directed_edges();
    let (edges, limits) = match target {
        SweepTarget::AllEdges => (all.to_vec(), limits),
        SweepTarget::Edges(wanted) => {
            let mut edges = Vec::new();
            let mut picked = Vec::new();
            for e in wanted {
                if let Some(k) = s.graph.index_of(e.from, e.to) {
                    edges.push(*e);
                    picked.push(limits[k]);
                }
            }
            (edges, picked)
        }
    };
    Ok(SweepRow {
        value,
        edges,
        limits,
        source,
    })
}

pub fn run_sweep(spec: &SweepSpec) -> Result<SweepResult, SweepError> {
    let scenarios = spec
        .grid
        .iter()
        .map(|&v| substitute(&spec.base, spec.parameter, v).map(|s| (v, s)))
        .collect::<Result<Vec<_>, _>>()?;
    let rows = scenarios
        .iter()
        .map(|(v, s)| evaluate_point(s, *v, &spec.target, spec.cross_check, &spec.options))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(SweepResult::assemble(spec.parameter, rows))
}

/// Attaches `newcomer` as agent `n` to base agents `0..d` for each `d` and
/// records the limits. Verdicts are computed on the base edges but nothing is
/// asserted about them.
pub fn degree_sweep(
    base: &Scenario,
    newcomer: AgentSpec,
    degrees: &[usize],
    cross_check: bool,
    options: &SimulationOptions,
) -> Result<SweepResult, SweepError> {
    let n = base.agent_count();
    if !base.schedule.is_synchronous() {
        return Err(SweepError::InvalidAttachment(
            "degree sweeps need a synchronous base scenario".into(),
        ));
    }
    newcomer
        .validate()
        .map_err(|e| SweepError::InvalidAttachment(e.to_string()))?;
    let mut rows = Vec::with_capacity(degrees.len());
    for &d in degrees {
        if d == 0 || d > n {
            return Err(SweepError::InvalidAttachment(format!(
                "degree {d} outside 1..={n}"
            )));
        }
        let mut edges = base.graph.edges().to_vec();
        edges.extend((0..d).map(|i| (i, n)));
        let graph = InteractionGraph::new(n + 1, &edges)
            .map_err(|e| SweepError::InvalidAttachment(e.to_string()))?;
        let mut agents = base.agents.clone();
        agents.push(newcomer);
        let s = Scenario::synchronous(agents, graph)
            .map_err(|e| SweepError::InvalidAttachment(e.to_string()))?;
        rows.push(evaluate_point(
            &s,
            d as f64,
            &SweepTarget::AllEdges,
            cross_check,
            options,
        )?);
    }
    Ok(SweepResult::assemble(SweepParameter::Degree, rows))
}

#[derive(Debug, Clone, PartialEq)]
pub enum PropertyStatus {
    Holds,
    Violated { step: usize, detail: String },
    Skipped(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PropertyOutcome {
    pub name: &'static str,
    pub status: PropertyStatus,
}

impl PropertyOutcome {
    fn new(name: &'static str, status: PropertyStatus) -> Self {
        PropertyOutcome { name, status }
    }

    pub fn holds(&self) -> bool {
        self.status == PropertyStatus::Holds
    }

    pub fn failed(&self) -> bool {
        matches!(self.status, PropertyStatus::Violated { .. })
    }
}

impl fmt::Display for PropertyOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.status {
            PropertyStatus::Holds => write!(f, "{}: holds", self.name),
            PropertyStatus::Violated { step, detail } => {
                write!(f, "{}: VIOLATED at step {step}: {detail}", self.name)
            }
            PropertyStatus::Skipped(why) => write!(f, "{}: skipped ({why})", self.name),
        }
    }
}

/// Two-agent view of a trajectory: `x` is the less kind agent's action, `y` the other's.
struct PairView<'a> {
    case: TwoAgentCase,
    low: usize,
    high: usize,
    x: Vec<f64>,
    y: Vec<f64>,
    scenario: &'a Scenario,
    noise: f64,
}

impl<'a> PairView<'a> {
    fn new(s: &'a Scenario, traj: &Trajectory) -> Option<Self> {
        let case = TwoAgentCase::from_scenario(s)?;
        let (low, high) = if s.agents[0].kindness <= s.agents[1].kindness {
            (0, 1)
        } else {
            (1, 0)
        };
        let lh = s.graph.index_of(low, high)?;
        let hl = s.graph.index_of(high, low)?;
        let (lo, hi) = s.kindness_range();
        Some(PairView {
            case,
            low,
            high,
            x: traj.series(lh),
            y: traj.series(hl),
            scenario: s,
            noise: 64.0 * f64::EPSILON * lo.abs().max(hi.abs()).max(1.0),
        })
    }

    fn spec(&self, agent: usize) -> &AgentSpec {
        &self.case.agents()[agent]
    }

    fn both_act(&self, t: usize) -> bool {
        self.scenario.schedule.is_active(t, 0) && self.scenario.schedule.is_active(t, 1)
    }

    fn coefficient_sum(&self) -> f64 {
        self.spec(0).r + self.spec(1).r
    }

    fn attitudes(&self) -> (Attitude, Attitude) {
        (self.spec(0).attitude, self.spec(1).attitude)
    }
}

fn violated(step: usize, detail: String) -> PropertyStatus {
    PropertyStatus::Violated { step, detail }
}

/// Evaluates every property that applies to the scenario's case. Properties
/// outside their hypotheses are reported as skipped.
pub fn check_lemma_suite(s: &Scenario, traj: &Trajectory) -> Vec<PropertyOutcome> {
    let mut out = vec![
        PropertyOutcome::new("bounding_box", bounding_box(s, traj)),
        PropertyOutcome::new("last_action", last_action(s, traj)),
    ];
    let names = [
        "oscillation",
        "fixed_floating_monotonicity",
        "pair_ordering",
        "order_alternation",
        "subsequence",
        "limit_ordering",
    ];
    let Some(view) = PairView::new(s, traj) else {
        out.extend(names.iter().map(|n| {
            PropertyOutcome::new(
                n,
                PropertyStatus::Skipped("needs exactly two agents".into()),
            )
        }));
        return out;
    };
    out.push(PropertyOutcome::new(names[0], oscillation(&view)));
    out.push(PropertyOutcome::new(
        names[1],
        fixed_floating_monotonicity(&view),
    ));
    out.push(PropertyOutcome::new(names[2], pair_ordering(&view)));
    out.push(PropertyOutcome::new(names[3], order_alternation(&view)));
    out.push(PropertyOutcome::new(names[4], subsequence(&view)));
    out.push(PropertyOutcome::new(names[5], limit_ordering(&view, traj)));
    out
}

fn bounding_box(s: &Scenario, traj: &Trajectory) -> PropertyStatus {
    let (lo, hi) = s.kindness_range();
    let tol = 1e-12 * lo.abs().max(hi.abs()).max(1.0);
    for (t, state) in traj.states.iter().enumerate() {
        if let Some(v) = state
            .values()
            .iter()
            .find(|v| **v < lo - tol || **v > hi + tol)
        {
            return violated(t, format!("value {v} outside [{lo}, {hi}]"));
        }
    }
    PropertyStatus::Holds
}

fn last_action(s: &Scenario, traj: &Trajectory) -> PropertyStatus {
    for t in 1..traj.states.len() {
        for (k, e) in s.graph.directed_edges().iter().enumerate() {
            if !s.schedule.is_active(t, e.from)
                && traj.states[t][k].to_bits() != traj.states[t - 1][k].to_bits()
            {
                return violated(t, format!("inactive agent {} changed edge {e}", e.from));
            }
        }
    }
    PropertyStatus::Holds
}

fn oscillation(v: &PairView) -> PropertyStatus {
    let (a, b) = (v.spec(0), v.spec(1));
    if v.attitudes() != (Attitude::Fixed, Attitude::Fixed) {
        return PropertyStatus::Skipped("needs two Fixed agents".into());
    }
    if !v.scenario.schedule.is_synchronous() {
        return PropertyStatus::Skipped("needs a synchronous schedule".into());
    }
    if !(a.r > 0.0 && a.r < 1.0 && b.r > 0.0 && b.r < 1.0) {
        return PropertyStatus::Skipped("needs 0 < r1, r2 < 1".into());
    }
    if a.kindness == b.kindness {
        return PropertyStatus::Skipped("needs distinct kindness".into());
    }
    let gt = |p: f64, q: f64| p > q || (p - q).abs() <= v.noise;
    let (x, y) = (&v.x, &v.y);
    let last = x.len() - 1;
    for t in 0..=last / 2 {
        // x(2t) < x(2t+2) < x(2t+1), mirrored for y
        if 2 * t + 2 <= last {
            if !(gt(x[2 * t + 2], x[2 * t]) && gt(x[2 * t + 1], x[2 * t + 2])) {
                return violated(
                    2 * t + 2,
                    format!("x({}) < x({}) < x({}) fails", 2 * t, 2 * t + 2, 2 * t + 1),
                );
            }
            if !(gt(y[2 * t], y[2 * t + 2]) && gt(y[2 * t + 2], y[2 * t + 1])) {
                return violated(
                    2 * t + 2,
                    format!("y({}) > y({}) > y({}) fails", 2 * t, 2 * t + 2, 2 * t + 1),
                );
            }
        }
        // x(2t-1) > x(2t+1) > x(2t), mirrored for y
        if t >= 1 && 2 * t < last {
            if !(gt(x[2 * t - 1], x[2 * t + 1]) && gt(x[2 * t + 1], x[2 * t])) {
                return violated(
                    2 * t + 1,
                    format!("x({}) > x({}) > x({}) fails", 2 * t - 1, 2 * t + 1, 2 * t),
                );
            }
            if !(gt(y[2 * t + 1], y[2 * t - 1]) && gt(y[2 * t], y[2 * t + 1])) {
                return violated(
                    2 * t + 1,
                    format!("y({}) < y({}) < y({}) fails", 2 * t - 1, 2 * t + 1, 2 * t),
                );
            }
        }
    }
    PropertyStatus::Holds
}

fn fixed_floating_monotonicity(v: &PairView) -> PropertyStatus {
    let (fixed, float) = match v.attitudes() {
        (Attitude::Fixed, Attitude::Floating) => (0, 1),
        (Attitude::Floating, Attitude::Fixed) => (1, 0),
        _ => return PropertyStatus::Skipped("needs one Fixed and one Floating agent".into()),
    };
    if v.spec(float).r <= 0.0 {
        return PropertyStatus::Skipped("needs r > 0 for the Floating agent".into());
    }
    if v.coefficient_sum() > 1.0 + COEFF_EPS {
        return PropertyStatus::Skipped("needs r1 + r2 <= 1".into());
    }
    // both sequences move towards the Fixed kindness
    let decreasing = v.spec(fixed).kindness <= v.spec(float).kindness;
    let series = |agent: usize| if agent == v.low { &v.x } else { &v.y };
    let first_fixed_act = (1..v.x.len())
        .find(|&t| v.scenario.schedule.is_active(t, fixed))
        .unwrap_or(v.x.len());
    for (agent, from) in [(float, 0), (fixed, first_fixed_act)] {
        let s = series(agent);
        for t in from..s.len().saturating_sub(1) {
            let step = s[t + 1] - s[t];
            let ok = if decreasing {
                step <= v.noise
            } else {
                step >= -v.noise
            };
            if !ok {
                return violated(
                    t + 1,
                    format!("agent {agent} moved by {step:e} away from the Fixed kindness"),
                );
            }
        }
    }
    PropertyStatus::Holds
}

fn pair_ordering(v: &PairView) -> PropertyStatus {
    if v.attitudes() == (Attitude::Fixed, Attitude::Fixed) {
        return PropertyStatus::Skipped("not claimed for two Fixed agents".into());
    }
    if v.coefficient_sum() > 1.0 + COEFF_EPS {
        return PropertyStatus::Skipped("needs r1 + r2 <= 1".into());
    }
    for t in 0..v.x.len() {
        if v.y[t] < v.x[t] - v.noise {
            return violated(
                t,
                format!(
                    "agent {}'s action {} exceeds agent {}'s {}",
                    v.low, v.x[t], v.high, v.y[t]
                ),
            );
        }
    }
    PropertyStatus::Holds
}

fn order_alternation(v: &PairView) -> PropertyStatus {
    if v.attitudes() != (Attitude::Floating, Attitude::Floating) {
        return PropertyStatus::Skipped("needs two Floating agents".into());
    }
    if v.coefficient_sum() < 1.0 - COEFF_EPS {
        return PropertyStatus::Skipped("needs r1 + r2 >= 1".into());
    }
    for t in 1..v.x.len() {
        let before = v.y[t - 1] - v.x[t - 1];
        let after = v.y[t] - v.x[t];
        if before.abs() <= v.noise {
            continue;
        }
        let flip = v.both_act(t);
        let same_sign = if before > 0.0 {
            after >= -v.noise
        } else {
            after <= v.noise
        };
        let opposite_sign = if before > 0.0 {
            after <= v.noise
        } else {
            after >= -v.noise
        };
        if flip && !opposite_sign {
            return violated(
                t,
                format!("both acted but the order was kept ({before:e} -> {after:e})"),
            );
        }
        if !flip && !same_sign {
            return violated(
                t,
                format!("one agent acted but the order flipped ({before:e} -> {after:e})"),
            );
        }
    }
    PropertyStatus::Holds
}

fn subsequence(v: &PairView) -> PropertyStatus {
    if v.attitudes() != (Attitude::Fixed, Attitude::Fixed) {
        return PropertyStatus::Skipped("needs two Fixed agents".into());
    }
    let s = v.scenario;
    let len = v.x.len();
    let mut sync = vec![ActionVector::initial(&s.agents, &s.graph)];
    for t in 1..len {
        match dynamics::step(&sync[t - 1], &s.agents, &s.graph, &[true, true]) {
            Ok(next) => sync.push(next),
            Err(e) => return violated(t, e.to_string()),
        }
    }
    let tol = 1e-12
        * s.kindness_range()
            .0
            .abs()
            .max(s.kindness_range().1.abs())
            .max(1.0);
    for agent in 0..2 {
        let k = s.graph.index_of(agent, 1 - agent).expect("pair edge");
        let series = if agent == v.low { &v.x } else { &v.y };
        let mut acted: Vec<(usize, f64)> = (0..len)
            .filter(|&t| s.schedule.is_active(t, agent))
            .map(|t| (t, series[t]))
            .collect();
        acted.dedup_by(|b, a| a.1.to_bits() == b.1.to_bits());
        let reference: Vec<f64> = sync.iter().map(|st| st[k]).collect();
        let mut cursor = 0;
        for (t, value) in acted {
            match reference[cursor..]
                .iter()
                .position(|r| (r - value).abs() <= tol)
            {
                Some(p) => cursor += p + 1,
                None => {
                    return violated(
                        t,
                        format!(
                        "agent {agent}'s action {value} does not continue the synchronous sequence"
                    ),
                    )
                }
            }
        }
    }
    PropertyStatus::Holds
}

fn limit_ordering(v: &PairView, traj: &Trajectory) -> PropertyStatus {
    let Some(limit) = traj.limit() else {
        return PropertyStatus::Skipped("trajectory did not converge".into());
    };
    let g = &v.scenario.graph;
    let lx = limit[g.index_of(v.low, v.high).expect("pair edge")];
    let ly = limit[g.index_of(v.high, v.low).expect("pair edge")];
    if lx > ly + 1e-9 * lx.abs().max(ly.abs()).max(1.0) {
        return violated(traj.horizon_used, format!("L_x = {lx} > L_y = {ly}"));
    }
    PropertyStatus::Holds
}

/// Three Fixed agents in a clique where the less kind agent 0 ends up giving
/// the shared neighbour 1 more than the kinder agent 2 does.
pub fn counterexample_scenario() -> Scenario {
    let agents = vec![
        AgentSpec {
            kindness: 1.0,
            r: 0.5,
            r_prime: 0.3,
            attitude: Attitude::Fixed,
        },
        AgentSpec {
            kindness: 5.0,
            r: 0.2,
            r_prime: 0.5,
            attitude: Attitude::Fixed,
        },
        AgentSpec {
            kindness: 2.0,
            r: 0.1,
            r_prime: 0.2,
            attitude: Attitude::Fixed,
        },
    ];
    Scenario::synchronous(agents, InteractionGraph::complete(3).unwrap()).unwrap()
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrderingFinding {
    /// Less kind Fixed agent.
    pub lower: usize,
    /// Kinder Fixed agent.
    pub higher: usize,
    /// Common neighbour both act on.
    pub target: usize,
    pub lower_limit: f64,
    pub higher_limit: f64,
}

impl fmt::Display for OrderingFinding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "L_{{{},{}}} = {:.10} > L_{{{},{}}} = {:.10} although k_{} < k_{}",
            self.lower,
            self.target,
            self.lower_limit,
            self.higher,
            self.target,
            self.higher_limit,
            self.lower,
            self.higher
        )
    }
}

/// Pairs of Fixed agents whose limits on a shared neighbour are ordered
/// against their kindness.
pub fn fixed_ordering_findings(s: &Scenario, limits: &[f64]) -> Vec<OrderingFinding> {
    let g = &s.graph;
    let fixed: Vec<usize> = (0..s.agent_count())
        .filter(|&i| s.agents[i].is_effectively_fixed())
        .collect();
    let mut out = Vec::new();
    for &i in &fixed {
        for &j in &fixed {
            if s.agents[i].kindness >= s.agents[j].kindness {
                continue;
            }
            for l in 0..s.agent_count() {
                let (Some(il), Some(jl)) = (g.index_of(i, l), g.index_of(j, l)) else {
                    continue;
                };
                if limits[il] > limits[jl] + 1e-12 {
                    out.push(OrderingFinding {
                        lower: i,
                        higher: j,
                        target: l,
                        lower_limit: limits[il],
                        higher_limit: limits[jl],
                    });
                }
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct CounterexampleReport {
    pub scenario: Scenario,
    pub limits: Vec<f64>,
    /// Agent 0 on agent 1.
    pub l12: f64,
    /// Agent 2 on agent 1.
    pub l32: f64,
    pub ordering_fails: bool,
}

pub fn counterexample_fixed_ordering() -> Result<CounterexampleReport, LimitError> {
    let scenario = counterexample_scenario();
    let limits = limits::solve_sync_fixed_point(&scenario.agents, &scenario.graph)?.into_inner();
    let g = &scenario.graph;
    let l12 = limits[g.index_of(0, 1).unwrap()];
    let l32 = limits[g.index_of(2, 1).unwrap()];
    Ok(CounterexampleReport {
        scenario,
        limits,
        l12,
        l32,
        ordering_fails: l12 > l32,
    })
}
