//! Linear-algebra view of one step: `p(t+1) = A p(t) + k'`.
//!
//! Rows and columns are indexed by directed edges in graph order. Also holds
//! the structural hypothesis checks used to decide which limit result applies.

use std::io::{self, Write};

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::dynamics::fmt_f64;
use crate::model::{ActionVector, AgentSpec, Attitude, InteractionGraph, COEFF_EPS};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpectralError {
    #[error(
        "power iteration did not converge after {iterations} iterations (estimate {estimate})"
    )]
    NoConvergence { estimate: f64, iterations: usize },
    #[error("singular system: {0}")]
    SingularSystem(String),
    #[error("dimension mismatch: got {got}, expected {expected}")]
    DimensionMismatch { got: usize, expected: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct DynamicsMatrix {
    entries: DMatrix<f64>,
    active: Vec<bool>,
    has_anchor_rows: bool,
}

impl DynamicsMatrix {
    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn active_set(&self) -> &[bool] {
        &self.active
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.entries[(row, col)]
    }

    pub fn row_sum(&self, row: usize) -> f64 {
        self.entries.row(row).sum()
    }

    pub fn mul_vec(&self, p: &ActionVector) -> ActionVector {
        let v = &self.entries * DVector::from_column_slice(p.values());
        ActionVector::new(v.iter().copied().collect())
    }

    /// `A p + k'`.
    pub fn apply(&self, p: &ActionVector, k: &KindnessVector) -> ActionVector {
        let v = &self.entries * DVector::from_column_slice(p.values());
        ActionVector::new(v.iter().zip(&k.0).map(|(a, b)| a + b).collect())
    }

    /// Row vector `v A` for a row vector `v`.
    pub fn left_mul(&self, v: &[f64]) -> Vec<f64> {
        let row = DVector::from_column_slice(v).transpose() * &self.entries;
        row.iter().copied().collect()
    }

    /// Matrix product `self * other`, keeping this matrix's active set.
    pub fn product(&self, other: &DynamicsMatrix) -> DynamicsMatrix {
        DynamicsMatrix {
            entries: &self.entries * &other.entries,
            active: self.active.clone(),
            has_anchor_rows: self.has_anchor_rows || other.has_anchor_rows,
        }
    }

    pub fn max_entry(&self) -> f64 {
        self.entries.iter().copied().fold(0.0, f64::max)
    }

    pub fn write_csv<W: Write>(&self, graph: &InteractionGraph, mut out: W) -> io::Result<()> {
        let labels: Vec<String> = graph
            .directed_edges()
            .iter()
            .map(|e| e.to_string())
            .collect();
        writeln!(out, "edge,{}", labels.join(","))?;
        for (r, label) in labels.iter().enumerate() {
            let row: Vec<String> = self.entries.row(r).iter().map(|v| fmt_f64(*v)).collect();
            writeln!(out, "{label},{}", row.join(","))?;
        }
        Ok(())
    }
}

/// Affine term `k'` of the step map.
#[derive(Debug, Clone, PartialEq)]
pub struct KindnessVector(pub Vec<f64>);

impl KindnessVector {
    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn sup_norm(&self) -> f64 {
        self.0.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Builds `A` for the given active set. Inactive agents get identity rows;
/// Fixed agents have no diagonal term.
pub fn build_matrix(
    agents: &[AgentSpec],
    graph: &InteractionGraph,
    active: &[bool],
) -> DynamicsMatrix {
    let m = graph.directed_edge_count();
    let mut a = DMatrix::zeros(m, m);
    let mut has_anchor_rows = false;
    for (row, e) in graph.directed_edges().iter().enumerate() {
        let i = e.from;
        if !active[i] {
            a[(row, row)] = 1.0;
            continue;
        }
        let spec = &agents[i];
        let share = spec.r_prime / graph.degree(i) as f64;
        for &col in graph.incoming(i) {
            a[(row, col)] += share;
        }
        a[(row, graph.reverse_of(row))] += spec.r;
        match spec.attitude {
            Attitude::Floating => a[(row, row)] += 1.0 - spec.r - spec.r_prime,
            Attitude::Fixed => has_anchor_rows |= spec.slack() > COEFF_EPS,
        }
    }
    DynamicsMatrix {
        entries: a,
        active: active.to_vec(),
        has_anchor_rows,
    }
}

pub fn build_sync_matrix(agents: &[AgentSpec], graph: &InteractionGraph) -> DynamicsMatrix {
    build_matrix(agents, graph, &vec![true; graph.agent_count()])
}

pub fn kindness_vector(
    agents: &[AgentSpec],
    graph: &InteractionGraph,
    active: &[bool],
) -> KindnessVector {
    KindnessVector(
        graph
            .directed_edges()
            .iter()
            .map(|e| {
                let a = &agents[e.from];
                if active[e.from] && a.attitude == Attitude::Fixed {
                    (1.0 - a.r - a.r_prime) * a.kindness
                } else {
                    0.0
                }
            })
            .collect(),
    )
}

pub const POWER_TOL: f64 = 1e-10;
pub const POWER_MAX_ITER: usize = 100_000;

/// Dominant eigenvalue modulus of a nonnegative matrix.
///
/// Iterates on `A + I` from the all-ones vector: the shift keeps the iterate
/// strictly positive and breaks the period of cyclic matrices, and for a
/// nonnegative matrix the spectral radius of `A + I` is exactly `rho(A) + 1`.
/// Stops once the Collatz-Wielandt bounds `min (Bv)_i/v_i <= rho(B) <= max (Bv)_i/v_i`
/// close to `tol`, or the norm ratio settles for reducible inputs.
pub fn spectral_radius(m: &DynamicsMatrix, tol: f64) -> Result<f64, SpectralError> {
    let n = m.dim();
    if n == 0 {
        return Ok(0.0);
    }
    let shifted = &m.entries + DMatrix::<f64>::identity(n, n);
    let mut v = DVector::from_element(n, 1.0);
    let mut previous = f64::NAN;
    let mut settled = 0;
    let mut estimate = f64::NAN;
    for _ in 0..POWER_MAX_ITER {
        let w = &shifted * &v;
        let (lo, hi) = w
            .iter()
            .zip(v.iter())
            .fold((f64::INFINITY, 0.0f64), |(lo, hi), (a, b)| {
                let ratio = a / b;
                (lo.min(ratio), hi.max(ratio))
            });
        let norm = w.amax();
        estimate = norm / v.amax() - 1.0;
        if hi - lo < tol {
            return Ok(0.5 * (lo + hi) - 1.0);
        }
        settled = if (estimate - previous).abs() < 0.1 * tol {
            settled + 1
        } else {
            0
        };
        if settled >= 10 {
            return Ok(estimate);
        }
        previous = estimate;
        v = w / norm;
        // components that underflow would break the ratio bounds
        v.iter_mut().for_each(|x| *x = x.max(f64::MIN_POSITIVE));
    }
    Err(SpectralError::NoConvergence {
        estimate,
        iterations: POWER_MAX_ITER,
    })
}

/// Solves `(I - A) x = k'` by LU with partial pivoting.
pub fn solve_fixed_point(
    m: &DynamicsMatrix,
    k: &KindnessVector,
) -> Result<ActionVector, SpectralError> {
    let n = m.dim();
    if k.0.len() != n {
        return Err(SpectralError::DimensionMismatch {
            got: k.0.len(),
            expected: n,
        });
    }
    if !m.has_anchor_rows {
        return Err(SpectralError::SingularSystem(
            "no active Fixed agent with a kindness term".into(),
        ));
    }
    let system = DMatrix::<f64>::identity(n, n) - &m.entries;
    let rhs = DVector::from_column_slice(&k.0);
    let x = system
        .clone()
        .lu()
        .solve(&rhs)
        .ok_or_else(|| SpectralError::SingularSystem("zero pivot in elimination".into()))?;
    let residual = (&system * &x - &rhs).amax();
    if !residual.is_finite() || residual >= 1e-9 * k.sup_norm().max(1.0) {
        return Err(SpectralError::SingularSystem(format!(
            "residual {residual:e} too large"
        )));
    }
    Ok(ActionVector::new(x.iter().copied().collect()))
}

/// Which limit result the structure of a network supports.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TheoremBranch {
    /// Two agents: the pairwise closed forms.
    TwoAgent,
    /// Synchronous network, all Floating: common weighted-average limit.
    AllFloatingNetwork,
    /// Synchronous network with a Fixed agent: limit solves `(I - A) x = k'`.
    MixedNetwork,
    NoneApplies,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StructureReport {
    pub connected: bool,
    pub odd_cycle: bool,
    /// Some Floating agent has `r + r' < 1`.
    pub has_floating_slack: bool,
    /// Some agent is Fixed with `r + r' < 1` (Fixed with `r + r' = 1` counts as Floating).
    pub any_fixed: bool,
    pub all_rprime_positive: bool,
    pub agent_count: usize,
}

impl StructureReport {
    /// The network result whose hypotheses hold, ignoring the two-agent special case.
    pub fn network_branch(&self) -> Option<TheoremBranch> {
        if !(self.connected
            && self.all_rprime_positive
            && (self.odd_cycle || self.has_floating_slack))
        {
            return None;
        }
        Some(if self.any_fixed {
            TheoremBranch::MixedNetwork
        } else {
            TheoremBranch::AllFloatingNetwork
        })
    }

    pub fn verdict(&self) -> TheoremBranch {
        if self.agent_count == 2 {
            TheoremBranch::TwoAgent
        } else {
            self.network_branch().unwrap_or(TheoremBranch::NoneApplies)
        }
    }

    /// Name of the first failed network hypothesis, if any.
    pub fn failed_hypothesis(&self) -> Option<&'static str> {
        if !self.connected {
            Some("graph is not connected")
        } else if !self.all_rprime_positive {
            Some("some agent has r_prime = 0")
        } else if !(self.odd_cycle || self.has_floating_slack) {
            Some("no odd cycle and no Floating agent with r + r_prime < 1")
        } else {
            None
        }
    }
}

pub fn check_structure(agents: &[AgentSpec], graph: &InteractionGraph) -> StructureReport {
    StructureReport {
        connected: true,
        odd_cycle: graph.has_odd_cycle(),
        has_floating_slack: agents
            .iter()
            .any(|a| a.effective_attitude() == Attitude::Floating && a.slack() > COEFF_EPS),
        any_fixed: agents.iter().any(AgentSpec::is_effectively_fixed),
        all_rprime_positive: agents.iter().all(|a| a.r_prime > 0.0),
        agent_count: agents.len(),
    }
}
