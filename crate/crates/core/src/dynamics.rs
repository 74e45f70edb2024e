//! The reciprocation recurrences and trajectory simulation.
//!
//! A step reads only the pre-step state: every active agent `i` rewrites its
//! outgoing values `x_{i,j}` from `x_{j,i}`, the neighbourhood average of
//! incoming values, and its anchor (kindness when Fixed, its own previous
//! `x_{i,j}` when Floating). Inactive agents keep their last action.

use std::io::{self, Write};

use thiserror::Error;

use crate::model::{ActionVector, AgentSpec, Attitude, InteractionGraph, Scenario};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DynamicsError {
    #[error("dimension mismatch: {what} has length {got}, expected {expected}")]
    DimensionMismatch {
        what: &'static str,
        got: usize,
        expected: usize,
    },
    #[error("invalid simulation options: {0}")]
    InvalidOptions(String),
    #[error("value {value} on edge {edge} at step {step} left the kindness range [{lo}, {hi}]")]
    BoundsViolated {
        step: usize,
        edge: usize,
        value: f64,
        lo: f64,
        hi: f64,
    },
}

/// One synchronous-or-partial application of the recurrences.
pub fn step(
    state: &ActionVector,
    agents: &[AgentSpec],
    graph: &InteractionGraph,
    active: &[bool],
) -> Result<ActionVector, DynamicsError> {
    let m = graph.directed_edge_count();
    let n = graph.agent_count();
    check_len("state", state.len(), m)?;
    check_len("agents", agents.len(), n)?;
    check_len("active set", active.len(), n)?;

    let x = state.values();
    let mut next = x.to_vec();
    for i in 0..n {
        if !active[i] {
            continue;
        }
        let a = &agents[i];
        let incoming = graph.incoming(i);
        let avg = incoming.iter().map(|&k| x[k]).sum::<f64>() / incoming.len() as f64;
        let slack = 1.0 - a.r - a.r_prime;
        for &k in graph.outgoing(i) {
            let anchor = match a.attitude {
                Attitude::Fixed => a.kindness,
                Attitude::Floating => x[k],
            };
            next[k] = slack * anchor + a.r * x[graph.reverse_of(k)] + a.r_prime * avg;
        }
    }
    Ok(ActionVector::new(next))
}

fn check_len(what: &'static str, got: usize, expected: usize) -> Result<(), DynamicsError> {
    if got != expected {
        return Err(DynamicsError::DimensionMismatch {
            what,
            got,
            expected,
        });
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimulationOptions {
    pub horizon: usize,
    pub tolerance: f64,
    /// Consecutive qualifying steps required before classifying.
    pub window: usize,
}

impl Default for SimulationOptions {
    fn default() -> Self {
        SimulationOptions {
            horizon: 10_000,
            tolerance: 1e-10,
            window: 5,
        }
    }
}

impl SimulationOptions {
    pub fn with_tolerance(mut self, tolerance: f64) -> Self {
        self.tolerance = tolerance;
        self
    }

    pub fn with_horizon(mut self, horizon: usize) -> Self {
        self.horizon = horizon;
        self
    }

    fn validate(&self) -> Result<(), DynamicsError> {
        if self.horizon < 1 {
            return Err(DynamicsError::InvalidOptions(
                "horizon must be at least 1".into(),
            ));
        }
        if self.tolerance.is_nan() || self.tolerance <= 0.0 {
            return Err(DynamicsError::InvalidOptions(
                "tolerance must be positive".into(),
            ));
        }
        if self.window < 2 {
            return Err(DynamicsError::InvalidOptions(
                "window must be at least 2".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Classification {
    Converged {
        limit: ActionVector,
        at_step: usize,
    },
    PeriodTwo {
        states: (ActionVector, ActionVector),
    },
    MaxStepsReached,
}

impl Classification {
    pub fn label(&self) -> &'static str {
        match self {
            Classification::Converged { .. } => "converged",
            Classification::PeriodTwo { .. } => "period-two",
            Classification::MaxStepsReached => "max-steps-reached",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    /// `states[t]` is the action vector after step `t`; `states[0]` is the initial state.
    pub states: Vec<ActionVector>,
    pub horizon_used: usize,
    pub classification: Classification,
}

impl Trajectory {
    pub fn final_state(&self) -> &ActionVector {
        self.states
            .last()
            .expect("trajectory always holds the initial state")
    }

    pub fn limit(&self) -> Option<&ActionVector> {
        match &self.classification {
            Classification::Converged { limit, .. } => Some(limit),
            _ => None,
        }
    }

    pub fn is_converged(&self) -> bool {
        matches!(self.classification, Classification::Converged { .. })
    }

    /// Value of directed edge `k` over time.
    pub fn series(&self, k: usize) -> Vec<f64> {
        self.states.iter().map(|s| s[k]).collect()
    }
}

/// A suspected two-cycle whose step size shrank by more than this fraction
/// over the window is treated as a converging oscillation.
const PERIOD_SHRINK: f64 = 1e-3;

/// Runs the recurrences from the standard initial state until the trajectory
/// is classified or the horizon is exhausted.
///
/// The detection window is stretched to twice the schedule's activity bound
/// so that every agent acts inside it.
pub fn simulate(
    scenario: &Scenario,
    opts: &SimulationOptions,
) -> Result<Trajectory, DynamicsError> {
    opts.validate()?;
    let Scenario {
        agents,
        graph,
        schedule,
    } = scenario;
    let window = opts.window.max(2 * schedule.activity_bound());
    let (lo, hi) = scenario.kindness_range();
    let slack = 1e-12 * lo.abs().max(hi.abs()).max(1.0);

    let mut states = vec![ActionVector::initial(agents, graph)];
    let mut converged_run = 0;
    let mut period_run = 0;
    // sup-norm step sizes, used to tell a decaying oscillation from a cycle
    let mut moves = vec![0.0];
    for t in 1..=opts.horizon {
        let next = step(&states[t - 1], agents, graph, &schedule.active_mask(t))?;
        if let Some((edge, &value)) = next
            .values()
            .iter()
            .enumerate()
            .find(|(_, v)| **v < lo - slack || **v > hi + slack)
        {
            return Err(DynamicsError::BoundsViolated {
                step: t,
                edge,
                value,
                lo,
                hi,
            });
        }
        let d1 = next.sup_distance(&states[t - 1]);
        converged_run = if d1 < opts.tolerance {
            converged_run + 1
        } else {
            0
        };
        period_run =
            if t >= 2 && d1 >= opts.tolerance && next.sup_distance(&states[t - 2]) < opts.tolerance
            {
                period_run + 1
            } else {
                0
            };
        states.push(next);
        moves.push(d1);

        if converged_run >= window {
            let limit = states[t].clone();
            return Ok(Trajectory {
                states,
                horizon_used: t,
                classification: Classification::Converged { limit, at_step: t },
            });
        }
        if period_run >= window && moves[t] >= (1.0 - PERIOD_SHRINK) * moves[t - window] {
            let pair = (states[t - 1].clone(), states[t].clone());
            return Ok(Trajectory {
                states,
                horizon_used: t,
                classification: Classification::PeriodTwo { states: pair },
            });
        }
    }
    Ok(Trajectory {
        states,
        horizon_used: opts.horizon,
        classification: Classification::MaxStepsReached,
    })
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RateError {
    #[error("trajectory did not converge")]
    NotConverged,
    #[error("need at least {needed} recorded steps, got {got}")]
    InsufficientData { needed: usize, got: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub enum RateEstimate {
    /// Per-step contraction factor of the residual and the fit quality.
    Geometric {
        rate: f64,
        r_squared: f64,
    },
    NotGeometric {
        reason: String,
    },
}

impl RateEstimate {
    pub fn rate(&self) -> Option<f64> {
        match self {
            RateEstimate::Geometric { rate, .. } => Some(*rate),
            RateEstimate::NotGeometric { .. } => None,
        }
    }
}

pub const MIN_RATE_STEPS: usize = 10;
const MIN_R_SQUARED: f64 = 0.9;

/// Fits `log ||x(t) - x(final)||` against `t` over the second half of a
/// converged trajectory and returns the exponentiated slope.
///
/// The trailing detection window is excluded: there the residual is dominated
/// by the error of the final state itself rather than by the decay.
pub fn estimate_rate(traj: &Trajectory) -> Result<RateEstimate, RateError> {
    let limit = traj.limit().ok_or(RateError::NotConverged)?;
    let residuals: Vec<f64> = traj.states.iter().map(|s| s.sup_distance(limit)).collect();
    let last = residuals.len() - 1;
    if let Some(t) = residuals[..last].iter().position(|&r| r == 0.0) {
        return Ok(RateEstimate::NotGeometric {
            reason: format!("residual is exactly zero at step {t}"),
        });
    }
    if last < MIN_RATE_STEPS {
        return Err(RateError::InsufficientData {
            needed: MIN_RATE_STEPS,
            got: last,
        });
    }

    let floor = residuals[last - 1].max(f64::MIN_POSITIVE);
    let end = residuals[..last]
        .iter()
        .rposition(|&r| r > 100.0 * floor)
        .map_or(last, |p| p + 1);
    let start = end / 2;
    if end - start < 4 {
        return Err(RateError::InsufficientData {
            needed: MIN_RATE_STEPS,
            got: end,
        });
    }
    let points: Vec<(f64, f64)> = (start..end)
        .map(|t| (t as f64, residuals[t].ln()))
        .collect();
    let fit = LinearFit::least_squares(&points);
    if fit.r_squared < MIN_R_SQUARED {
        return Ok(RateEstimate::NotGeometric {
            reason: format!("log-linear fit R^2 = {:.3}", fit.r_squared),
        });
    }
    Ok(RateEstimate::Geometric {
        rate: fit.slope.exp(),
        r_squared: fit.r_squared,
    })
}

/// Ordinary least squares `y = slope * x + intercept`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub max_residual: f64,
}

impl LinearFit {
    pub fn least_squares(points: &[(f64, f64)]) -> LinearFit {
        let n = points.len() as f64;
        let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
        let my = points.iter().map(|p| p.1).sum::<f64>() / n;
        let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
        let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let syy: f64 = points.iter().map(|p| (p.1 - my).powi(2)).sum();
        let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
        let intercept = my - slope * mx;
        let max_residual = points
            .iter()
            .map(|p| (p.1 - slope * p.0 - intercept).abs())
            .fold(0.0, f64::max);
        let r_squared = if syy > 0.0 {
            (sxy * sxy) / (sxx * syy)
        } else {
            1.0
        };
        LinearFit {
            slope,
            intercept,
            r_squared,
            max_residual,
        }
    }
}

/// Formats a float with 17 significant digits so that it parses back bit-identically.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Writes `t,from,to,value`, one row per directed edge per recorded step.
pub fn write_trajectory_csv<W: Write>(
    traj: &Trajectory,
    graph: &InteractionGraph,
    mut out: W,
) -> io::Result<()> {
    writeln!(out, "t,from,to,value")?;
    for (t, state) in traj.states.iter().enumerate() {
        for (k, e) in graph.directed_edges().iter().enumerate() {
            writeln!(out, "{t},{},{},{}", e.from, e.to, fmt_f64(state[k]))?;
        }
    }
    Ok(())
}
