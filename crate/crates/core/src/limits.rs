//! Closed-form action limits.
//!
//! Covers the pairwise cases (both attitudes, synchronous and alternating,
//! with every degenerate coefficient region), the all-Floating network
//! average, the linear-solve route for networks with Fixed agents, and the
//! endpoint rule for choosing a coefficient that maximises the common limit.

use std::fmt;

use thiserror::Error;

use crate::model::{
    ActionVector, AgentSpec, Attitude, InteractionGraph, Scenario, ScheduleKind, COEFF_EPS,
};
use crate::spectral::{self, check_structure, SpectralError, TheoremBranch};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LimitError {
    #[error("hypotheses not met: {0}")]
    HypothesesNotMet(String),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error("invalid bounds [{0}, {1}]")]
    InvalidBounds(f64, f64),
    #[error("fixed agents share kindness {expected} but the solved limit is {got}")]
    Inconsistent { expected: f64, got: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub enum LimitResult {
    /// Two agents with separate limits `(L_x, L_y)`: agent 0 on 1 and agent 1 on 0.
    PerAgent(f64, f64),
    /// Every action approaches the same value.
    Common(f64),
    /// Per directed edge, graph order.
    PerEdge(ActionVector),
    NonConvergent(String),
    Unknown(String),
}

impl LimitResult {
    pub fn is_determinate(&self) -> bool {
        !matches!(self, LimitResult::Unknown(_))
    }

    /// Limit of each directed edge, when the actions converge.
    pub fn per_edge(&self, graph: &InteractionGraph) -> Option<Vec<f64>> {
        match self {
            LimitResult::PerAgent(lx, ly) => Some(
                graph
                    .directed_edges()
                    .iter()
                    .map(|e| if e.from == 0 { *lx } else { *ly })
                    .collect(),
            ),
            LimitResult::Common(l) => Some(vec![*l; graph.directed_edge_count()]),
            LimitResult::PerEdge(v) => Some(v.values().to_vec()),
            LimitResult::NonConvergent(_) | LimitResult::Unknown(_) => None,
        }
    }
}

impl fmt::Display for LimitResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LimitResult::PerAgent(x, y) => write!(f, "per-agent limits L_x = {x}, L_y = {y}"),
            LimitResult::Common(l) => write!(f, "common limit L = {l}"),
            LimitResult::PerEdge(v) => write!(f, "per-edge limits {:?}", v.values()),
            LimitResult::NonConvergent(why) => write!(f, "no convergence ({why})"),
            LimitResult::Unknown(why) => write!(f, "unknown ({why})"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairSchedule {
    Synchronous,
    /// Agent 0 acts at even steps, agent 1 at odd steps.
    Alternating,
    /// Any other schedule in which both agents keep acting.
    Asynchronous,
}

/// Two agents interacting only with each other, `r_prime = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoAgentCase {
    agents: [AgentSpec; 2],
    schedule: PairSchedule,
}

impl TwoAgentCase {
    pub fn new(a: AgentSpec, b: AgentSpec, schedule: PairSchedule) -> Result<Self, LimitError> {
        if a.r_prime != 0.0 || b.r_prime != 0.0 {
            return Err(LimitError::HypothesesNotMet(
                "pairwise case requires r_prime = 0".into(),
            ));
        }
        Ok(TwoAgentCase {
            agents: [a, b],
            schedule,
        })
    }

    /// With a single neighbour the neighbourhood average is the partner's
    /// action, so `r_prime` folds into `r`.
    pub fn from_scenario(s: &Scenario) -> Option<Self> {
        if s.agent_count() != 2 {
            return None;
        }
        let fold = |a: &AgentSpec| AgentSpec {
            r: (a.r + a.r_prime).min(1.0),
            r_prime: 0.0,
            ..*a
        };
        let schedule = match s.schedule.kind() {
            ScheduleKind::Synchronous => PairSchedule::Synchronous,
            ScheduleKind::Alternating => PairSchedule::Alternating,
            ScheduleKind::Periodic(_) => PairSchedule::Asynchronous,
        };
        Some(TwoAgentCase {
            agents: [fold(&s.agents[0]), fold(&s.agents[1])],
            schedule,
        })
    }

    pub fn agents(&self) -> &[AgentSpec; 2] {
        &self.agents
    }

    pub fn schedule(&self) -> PairSchedule {
        self.schedule
    }
}

const EDGE_EPS: f64 = 1e-12;

fn is_one(v: f64) -> bool {
    (v - 1.0).abs() <= EDGE_EPS
}

fn is_zero(v: f64) -> bool {
    v.abs() <= EDGE_EPS
}

pub fn two_agent_limit(c: &TwoAgentCase) -> LimitResult {
    let [a, b] = c.agents;
    match (a.attitude, b.attitude) {
        (Attitude::Fixed, Attitude::Fixed) => fixed_fixed(a, b, c.schedule),
        (Attitude::Floating, Attitude::Floating) => floating_floating(a, b, c.schedule),
        (Attitude::Fixed, Attitude::Floating) => fixed_floating(a, b, 0, c.schedule),
        (Attitude::Floating, Attitude::Fixed) => fixed_floating(b, a, 1, c.schedule),
    }
}

fn fixed_fixed(a: AgentSpec, b: AgentSpec, schedule: PairSchedule) -> LimitResult {
    let (r1, r2, k1, k2) = (a.r, b.r, a.kindness, b.kindness);
    if is_one(r1) && is_one(r2) {
        if k1 == k2 {
            return LimitResult::Common(k1);
        }
        return match schedule {
            // agent 1 copies k1 at t = 1 and from then on both repeat it
            PairSchedule::Alternating => LimitResult::Common(k1),
            PairSchedule::Synchronous => {
                LimitResult::NonConvergent("period two: each agent repeats the other".into())
            }
            PairSchedule::Asynchronous => {
                LimitResult::Unknown("copying pair under a general schedule".into())
            }
        };
    }
    // every schedule visits a subsequence of the synchronous run
    let denom = 1.0 - r1 * r2;
    LimitResult::PerAgent(
        ((1.0 - r1) * k1 + r1 * (1.0 - r2) * k2) / denom,
        ((1.0 - r2) * k2 + r2 * (1.0 - r1) * k1) / denom,
    )
}

fn floating_floating(a: AgentSpec, b: AgentSpec, schedule: PairSchedule) -> LimitResult {
    let (r1, r2, k1, k2) = (a.r, b.r, a.kindness, b.kindness);
    if is_zero(r1 + r2) {
        return LimitResult::PerAgent(k1, k2);
    }
    if k1 == k2 {
        return LimitResult::Common(k1);
    }
    match schedule {
        PairSchedule::Synchronous if is_one(r1) && is_one(r2) => {
            LimitResult::NonConvergent("period two: the agents swap kindness values".into())
        }
        PairSchedule::Synchronous => LimitResult::Common((r2 * k1 + r1 * k2) / (r1 + r2)),
        PairSchedule::Alternating => {
            let denom = r1 + r2 - r1 * r2;
            LimitResult::Common((r2 * k1 + (r1 - r1 * r2) * k2) / denom)
        }
        PairSchedule::Asynchronous => {
            LimitResult::Unknown("common limit depends on the schedule".into())
        }
    }
}

/// `fixed` is the Fixed agent, `float` the Floating one; `fixed_index` is the
/// fixed agent's position so results come back in agent order.
fn fixed_floating(
    fixed: AgentSpec,
    float: AgentSpec,
    fixed_index: usize,
    schedule: PairSchedule,
) -> LimitResult {
    let (ri, rj, ki, kj) = (fixed.r, float.r, fixed.kindness, float.kindness);
    let ordered = |fixed_value: f64, float_value: f64| {
        if fixed_index == 0 {
            LimitResult::PerAgent(fixed_value, float_value)
        } else {
            LimitResult::PerAgent(float_value, fixed_value)
        }
    };
    if is_zero(rj) {
        return ordered((1.0 - ri) * ki + ri * kj, kj);
    }
    if !is_one(ri) {
        return LimitResult::Common(ki);
    }
    // r_i = 1: the Fixed agent just copies, exactly like a Floating one with r = 1
    let mut as_float = fixed;
    as_float.attitude = Attitude::Floating;
    let (first, second) = if fixed_index == 0 {
        (as_float, float)
    } else {
        (float, as_float)
    };
    floating_floating(first, second, schedule)
}

/// Common limit of an all-Floating synchronous network: degree-over-coefficient
/// weighted average of kindness.
pub fn network_floating_limit(
    agents: &[AgentSpec],
    graph: &InteractionGraph,
) -> Result<LimitResult, LimitError> {
    let report = check_structure(agents, graph);
    if report.any_fixed {
        return Err(LimitError::HypothesesNotMet("some agent is Fixed".into()));
    }
    if let Some(failed) = report.failed_hypothesis() {
        return Err(LimitError::HypothesesNotMet(failed.into()));
    }
    let (num, den) = floating_weights(agents, graph, None);
    Ok(LimitResult::Common(num / den))
}

/// `(sum_j w_j k_j, sum_j w_j)` with `w_j = d(j) / (r_j + r'_j)`, optionally skipping one agent.
fn floating_weights(
    agents: &[AgentSpec],
    graph: &InteractionGraph,
    skip: Option<usize>,
) -> (f64, f64) {
    agents
        .iter()
        .enumerate()
        .filter(|(j, _)| Some(*j) != skip)
        .fold((0.0, 0.0), |(num, den), (j, a)| {
            let w = graph.degree(j) as f64 / (a.r + a.r_prime);
            (num + w * a.kindness, den + w)
        })
}

/// Per-edge limits of a synchronous network with at least one Fixed agent.
pub fn network_mixed_limit(
    agents: &[AgentSpec],
    graph: &InteractionGraph,
) -> Result<LimitResult, LimitError> {
    let report = check_structure(agents, graph);
    if !report.any_fixed {
        return Err(LimitError::HypothesesNotMet(
            "no Fixed agent with r + r_prime < 1".into(),
        ));
    }
    if let Some(failed) = report.failed_hypothesis() {
        return Err(LimitError::HypothesesNotMet(failed.into()));
    }
    let x = solve_sync_fixed_point(agents, graph)?;
    let mut fixed = agents
        .iter()
        .filter(|a| a.is_effectively_fixed())
        .map(|a| a.kindness);
    let k0 = fixed.next().expect("any_fixed checked above");
    if fixed.all(|k| k == k0) {
        let tol = 1e-9 * k0.abs().max(1.0);
        if let Some(&bad) = x.values().iter().find(|v| (*v - k0).abs() > tol) {
            return Err(LimitError::Inconsistent {
                expected: k0,
                got: bad,
            });
        }
    }
    Ok(LimitResult::PerEdge(x))
}

/// Synchronous fixed point without structural checks. Ambivalent Fixed agents
/// (`r + r' = 1`) are treated as Floating, which leaves the system unchanged.
pub fn solve_sync_fixed_point(
    agents: &[AgentSpec],
    graph: &InteractionGraph,
) -> Result<ActionVector, SpectralError> {
    let m = spectral::build_sync_matrix(agents, graph);
    let k = spectral::kindness_vector(agents, graph, &vec![true; agents.len()]);
    spectral::solve_fixed_point(&m, &k)
}

/// Where a reported limit came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LimitSource {
    ClosedForm,
    LinearSolve,
    Simulation,
    None,
}

impl LimitSource {
    pub fn as_str(&self) -> &'static str {
        match self {
            LimitSource::ClosedForm => "closed_form",
            LimitSource::LinearSolve => "linear_solve",
            LimitSource::Simulation => "simulation",
            LimitSource::None => "none",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LimitReport {
    pub result: LimitResult,
    pub branch: TheoremBranch,
    /// Human-readable name of the result used.
    pub theorem: &'static str,
    pub source: LimitSource,
}

/// Picks the applicable result for a scenario and evaluates it.
pub fn scenario_limit(s: &Scenario) -> Result<LimitReport, LimitError> {
    let report = check_structure(&s.agents, &s.graph);
    let branch = report.verdict();
    if let Some(case) = TwoAgentCase::from_scenario(s) {
        let result = two_agent_limit(&case);
        let [a, b] = case.agents();
        let theorem = match (a.attitude, b.attitude, case.schedule()) {
            (Attitude::Fixed, Attitude::Fixed, _) => "pairwise fixed-fixed limits",
            (Attitude::Floating, Attitude::Floating, PairSchedule::Alternating) => {
                "pairwise floating-floating, alternating"
            }
            (Attitude::Floating, Attitude::Floating, _) => {
                "pairwise floating-floating common limit"
            }
            _ => "pairwise fixed-floating: Fixed kindness dominates",
        };
        let source = if result.is_determinate() {
            LimitSource::ClosedForm
        } else {
            LimitSource::None
        };
        return Ok(LimitReport {
            result,
            branch,
            theorem,
            source,
        });
    }

    let fixed: Vec<f64> = s
        .agents
        .iter()
        .filter(|a| a.is_effectively_fixed())
        .map(|a| a.kindness)
        .collect();
    if !s.schedule.is_synchronous() {
        if report.any_fixed && report.all_rprime_positive && fixed.iter().all(|&k| k == fixed[0]) {
            return Ok(LimitReport {
                result: LimitResult::Common(fixed[0]),
                branch,
                theorem: "asynchronous mixed network, common Fixed kindness",
                source: LimitSource::ClosedForm,
            });
        }
        return Ok(LimitReport {
            result: LimitResult::Unknown(
                "no closed form for this asynchronous network; run simulate".into(),
            ),
            branch,
            theorem: "none",
            source: LimitSource::None,
        });
    }
    match branch {
        TheoremBranch::AllFloatingNetwork => Ok(LimitReport {
            result: network_floating_limit(&s.agents, &s.graph)?,
            branch,
            theorem: "all-floating network weighted average",
            source: LimitSource::ClosedForm,
        }),
        TheoremBranch::MixedNetwork => Ok(LimitReport {
            result: network_mixed_limit(&s.agents, &s.graph)?,
            branch,
            theorem: "mixed network fixed point (I - A) x = k'",
            source: LimitSource::LinearSolve,
        }),
        _ => Ok(LimitReport {
            result: LimitResult::Unknown(
                report
                    .failed_hypothesis()
                    .unwrap_or("network hypotheses not met")
                    .to_string()
                    + "; run simulate",
            ),
            branch,
            theorem: "none",
            source: LimitSource::None,
        }),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Coefficient {
    R,
    RPrime,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Endpoint {
    Lower,
    Upper,
    Arbitrary,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoefficientChoice {
    pub choice: Endpoint,
    /// Sign of this expression decides the endpoint.
    pub sign_expr: f64,
    pub value: Option<f64>,
}

const SIGN_EPS: f64 = 1e-12;

/// Endpoint of `[lower, upper]` for agent `i`'s coefficient that maximises the
/// all-Floating common limit. The limit is monotone in either coefficient, so
/// only the endpoints can be optimal.
pub fn optimal_coefficient(
    agents: &[AgentSpec],
    graph: &InteractionGraph,
    i: usize,
    which: Coefficient,
    (lower, upper): (f64, f64),
) -> Result<CoefficientChoice, LimitError> {
    if !(lower > 0.0 && lower <= upper && upper <= 1.0) {
        return Err(LimitError::InvalidBounds(lower, upper));
    }
    let other = match which {
        Coefficient::R => agents[i].r_prime,
        Coefficient::RPrime => agents[i].r,
    };
    if upper + other > 1.0 + COEFF_EPS {
        return Err(LimitError::InvalidBounds(lower, upper));
    }
    network_floating_limit(agents, graph)?;
    let (num, den) = floating_weights(agents, graph, Some(i));
    let sign_expr = num - agents[i].kindness * den;
    let (choice, value) = if sign_expr > SIGN_EPS {
        (Endpoint::Upper, Some(upper))
    } else if sign_expr < -SIGN_EPS {
        (Endpoint::Lower, Some(lower))
    } else {
        (Endpoint::Arbitrary, None)
    };
    Ok(CoefficientChoice {
        choice,
        sign_expr,
        value,
    })
}
