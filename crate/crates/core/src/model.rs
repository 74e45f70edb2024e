//! Domain types: agents, interaction graphs, activation schedules and the
//! per-directed-edge action vector.
//!
//! Everything here is validated on construction and immutable afterwards.

use std::collections::VecDeque;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Slack used when checking `r + r_prime <= 1` and when deciding whether a
/// Fixed agent still has a kindness term.
pub const COEFF_EPS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("at least two agents are required, got {0}")]
    TooFewAgents(usize),
    #[error("edge ({0}, {1}) references an agent outside 0..{2}")]
    UnknownAgent(usize, usize, usize),
    #[error("self-loop on agent {0}")]
    SelfLoop(usize),
    #[error("duplicate edge ({0}, {1})")]
    DuplicateEdge(usize, usize),
    #[error("graph is disconnected: agent {0} is unreachable from agent 0")]
    DisconnectedGraph(usize),
    #[error("invalid coefficient for agent: {0}")]
    InvalidCoefficient(String),
    #[error("alternating schedule requires exactly two agents, got {0}")]
    AlternatingRequiresTwoAgents(usize),
    #[error("invalid periodic schedule: {0}")]
    InvalidSchedule(String),
    #[error("{agents} agent specs supplied for a graph of {nodes} agents")]
    AgentCountMismatch { agents: usize, nodes: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Attitude {
    /// Anchors every action on the agent's own kindness.
    Fixed,
    /// Anchors every action on the agent's own previous action.
    Floating,
}

impl fmt::Display for Attitude {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Attitude::Fixed => write!(f, "fixed"),
            Attitude::Floating => write!(f, "floating"),
        }
    }
}

/// One agent: kindness, direct coefficient `r`, neighbourhood coefficient
/// `r_prime` and reciprocation attitude.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgentSpec {
    pub kindness: f64,
    pub r: f64,
    pub r_prime: f64,
    pub attitude: Attitude,
}

impl AgentSpec {
    pub fn new(
        kindness: f64,
        r: f64,
        r_prime: f64,
        attitude: Attitude,
    ) -> Result<Self, ModelError> {
        let spec = AgentSpec {
            kindness,
            r,
            r_prime,
            attitude,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn fixed(kindness: f64, r: f64, r_prime: f64) -> Result<Self, ModelError> {
        Self::new(kindness, r, r_prime, Attitude::Fixed)
    }

    pub fn floating(kindness: f64, r: f64, r_prime: f64) -> Result<Self, ModelError> {
        Self::new(kindness, r, r_prime, Attitude::Floating)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if !self.kindness.is_finite() {
            return Err(ModelError::InvalidCoefficient(format!(
                "kindness {} is not finite",
                self.kindness
            )));
        }
        if !(0.0..=1.0).contains(&self.r) {
            return Err(ModelError::InvalidCoefficient(format!(
                "r = {} outside [0, 1]",
                self.r
            )));
        }
        if !(0.0..=1.0).contains(&self.r_prime) {
            return Err(ModelError::InvalidCoefficient(format!(
                "r_prime = {} outside [0, 1]",
                self.r_prime
            )));
        }
        if self.r + self.r_prime > 1.0 + COEFF_EPS {
            return Err(ModelError::InvalidCoefficient(format!(
                "r + r_prime = {} exceeds 1",
                self.r + self.r_prime
            )));
        }
        Ok(())
    }

    /// Weight `1 - r - r_prime` on the agent's anchor (kindness or own last action).
    pub fn slack(&self) -> f64 {
        (1.0 - self.r - self.r_prime).max(0.0)
    }

    /// A Fixed agent with `r + r_prime = 1` behaves exactly like a Floating one.
    pub fn effective_attitude(&self) -> Attitude {
        match self.attitude {
            Attitude::Fixed if self.slack() > COEFF_EPS => Attitude::Fixed,
            _ => Attitude::Floating,
        }
    }

    pub fn is_effectively_fixed(&self) -> bool {
        self.effective_attitude() == Attitude::Fixed
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DirectedEdge {
    pub from: usize,
    pub to: usize,
}

impl fmt::Display for DirectedEdge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}->{}", self.from, self.to)
    }
}

/// Undirected connected graph over agents `0..n`, with each undirected edge
/// split into two directed edges indexed lexicographically by `(from, to)`.
#[derive(Debug, Clone, PartialEq)]
pub struct InteractionGraph {
    n: usize,
    edges: Vec<(usize, usize)>,
    directed: Vec<DirectedEdge>,
    // n*n table, usize::MAX where no edge
    index: Vec<usize>,
    reverse: Vec<usize>,
    incoming: Vec<Vec<usize>>,
    outgoing: Vec<Vec<usize>>,
    neighbors: Vec<Vec<usize>>,
}

impl InteractionGraph {
    pub fn new(n: usize, edges: &[(usize, usize)]) -> Result<Self, ModelError> {
        if n < 2 {
            return Err(ModelError::TooFewAgents(n));
        }
        let mut adjacency = vec![false; n * n];
        let mut undirected = Vec::with_capacity(edges.len());
        for &(a, b) in edges {
            if a >= n || b >= n {
                return Err(ModelError::UnknownAgent(a, b, n));
            }
            if a == b {
                return Err(ModelError::SelfLoop(a));
            }
            if adjacency[a * n + b] {
                return Err(ModelError::DuplicateEdge(a, b));
            }
            adjacency[a * n + b] = true;
            adjacency[b * n + a] = true;
            undirected.push((a.min(b), a.max(b)));
        }
        undirected.sort_unstable();

        let mut neighbors = vec![Vec::new(); n];
        for i in 0..n {
            for j in 0..n {
                if adjacency[i * n + j] {
                    neighbors[i].push(j);
                }
            }
        }
        if let Some(unreached) = first_unreachable(&neighbors) {
            return Err(ModelError::DisconnectedGraph(unreached));
        }

        let mut directed = Vec::with_capacity(2 * undirected.len());
        let mut index = vec![usize::MAX; n * n];
        for (i, nbrs) in neighbors.iter().enumerate() {
            for &j in nbrs {
                index[i * n + j] = directed.len();
                directed.push(DirectedEdge { from: i, to: j });
            }
        }
        let reverse = directed.iter().map(|e| index[e.to * n + e.from]).collect();
        let mut incoming = vec![Vec::new(); n];
        let mut outgoing = vec![Vec::new(); n];
        for (k, e) in directed.iter().enumerate() {
            incoming[e.to].push(k);
            outgoing[e.from].push(k);
        }

        Ok(InteractionGraph {
            n,
            edges: undirected,
            directed,
            index,
            reverse,
            incoming,
            outgoing,
            neighbors,
        })
    }

    pub fn complete(n: usize) -> Result<Self, ModelError> {
        let edges: Vec<_> = (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .collect();
        Self::new(n, &edges)
    }

    pub fn cycle(n: usize) -> Result<Self, ModelError> {
        let edges: Vec<_> = (0..n).map(|i| (i, (i + 1) % n)).collect();
        Self::new(n, &edges)
    }

    pub fn path(n: usize) -> Result<Self, ModelError> {
        let edges: Vec<_> = (1..n).map(|i| (i - 1, i)).collect();
        Self::new(n, &edges)
    }

    pub fn agent_count(&self) -> usize {
        self.n
    }

    /// Undirected edges as `(min, max)` pairs, sorted.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn directed_edge_count(&self) -> usize {
        self.directed.len()
    }

    pub fn directed_edges(&self) -> &[DirectedEdge] {
        &self.directed
    }

    pub fn edge_of(&self, k: usize) -> DirectedEdge {
        self.directed[k]
    }

    pub fn index_of(&self, from: usize, to: usize) -> Option<usize> {
        if from >= self.n || to >= self.n {
            return None;
        }
        match self.index[from * self.n + to] {
            usize::MAX => None,
            k => Some(k),
        }
    }

    /// Index of `(j, i)` for the edge `(i, j)` at `k`.
    pub fn reverse_of(&self, k: usize) -> usize {
        self.reverse[k]
    }

    /// Directed edges `(l, i)` entering agent `i`.
    pub fn incoming(&self, i: usize) -> &[usize] {
        &self.incoming[i]
    }

    /// Directed edges `(i, l)` leaving agent `i`.
    pub fn outgoing(&self, i: usize) -> &[usize] {
        &self.outgoing[i]
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.neighbors[i].len()
    }

    pub fn degrees(&self) -> Vec<usize> {
        self.neighbors.iter().map(Vec::len).collect()
    }

    /// True iff the graph is not bipartite.
    pub fn has_odd_cycle(&self) -> bool {
        let mut color: Vec<Option<bool>> = vec![None; self.n];
        let mut queue = VecDeque::new();
        for start in 0..self.n {
            if color[start].is_some() {
                continue;
            }
            color[start] = Some(false);
            queue.push_back(start);
            while let Some(u) = queue.pop_front() {
                let cu = color[u].unwrap();
                for &v in &self.neighbors[u] {
                    match color[v] {
                        None => {
                            color[v] = Some(!cu);
                            queue.push_back(v);
                        }
                        Some(cv) if cv == cu => return true,
                        Some(_) => {}
                    }
                }
            }
        }
        false
    }
}

fn first_unreachable(neighbors: &[Vec<usize>]) -> Option<usize> {
    let mut seen = vec![false; neighbors.len()];
    let mut stack = vec![0];
    seen[0] = true;
    while let Some(u) = stack.pop() {
        for &v in &neighbors[u] {
            if !seen[v] {
                seen[v] = true;
                stack.push(v);
            }
        }
    }
    seen.iter().position(|s| !s)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ScheduleKind {
    /// Every agent acts at every step.
    Synchronous,
    /// Two agents; agent 0 acts at even steps, agent 1 at odd steps.
    Alternating,
    /// `pattern[(t - 1) % len]` acts at step `t > 0`.
    Periodic(Vec<Vec<usize>>),
}

/// Which agents act at each step. Step 0 always activates everybody.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActivationSchedule {
    kind: ScheduleKind,
    agents: usize,
    activity_bound: usize,
}

impl ActivationSchedule {
    pub fn new(kind: ScheduleKind, agents: usize) -> Result<Self, ModelError> {
        let activity_bound = match &kind {
            ScheduleKind::Synchronous => 1,
            ScheduleKind::Alternating => {
                if agents != 2 {
                    return Err(ModelError::AlternatingRequiresTwoAgents(agents));
                }
                2
            }
            ScheduleKind::Periodic(pattern) => periodic_bound(pattern, agents)?,
        };
        Ok(ActivationSchedule {
            kind,
            agents,
            activity_bound,
        })
    }

    pub fn synchronous(agents: usize) -> Self {
        ActivationSchedule {
            kind: ScheduleKind::Synchronous,
            agents,
            activity_bound: 1,
        }
    }

    pub fn alternating() -> Self {
        ActivationSchedule {
            kind: ScheduleKind::Alternating,
            agents: 2,
            activity_bound: 2,
        }
    }

    pub fn periodic(pattern: Vec<Vec<usize>>, agents: usize) -> Result<Self, ModelError> {
        Self::new(ScheduleKind::Periodic(pattern), agents)
    }

    pub fn kind(&self) -> &ScheduleKind {
        &self.kind
    }

    pub fn agent_count(&self) -> usize {
        self.agents
    }

    pub fn is_synchronous(&self) -> bool {
        matches!(self.kind, ScheduleKind::Synchronous)
    }

    /// Largest gap between consecutive activations of any agent.
    pub fn activity_bound(&self) -> usize {
        self.activity_bound
    }

    pub fn is_active(&self, t: usize, agent: usize) -> bool {
        if t == 0 {
            return agent < self.agents;
        }
        match &self.kind {
            ScheduleKind::Synchronous => agent < self.agents,
            ScheduleKind::Alternating => agent == if t.is_multiple_of(2) { 0 } else { 1 },
            ScheduleKind::Periodic(pattern) => pattern[(t - 1) % pattern.len()].contains(&agent),
        }
    }

    /// Agents acting at step `t`, ascending.
    pub fn activations_at(&self, t: usize) -> Vec<usize> {
        (0..self.agents).filter(|&a| self.is_active(t, a)).collect()
    }

    pub fn active_mask(&self, t: usize) -> Vec<bool> {
        (0..self.agents).map(|a| self.is_active(t, a)).collect()
    }
}

fn periodic_bound(pattern: &[Vec<usize>], agents: usize) -> Result<usize, ModelError> {
    if pattern.is_empty() {
        return Err(ModelError::InvalidSchedule("pattern is empty".into()));
    }
    let len = pattern.len();
    let mut positions = vec![Vec::new(); agents];
    for (p, set) in pattern.iter().enumerate() {
        if set.is_empty() {
            return Err(ModelError::InvalidSchedule(format!(
                "pattern step {p} activates nobody"
            )));
        }
        for &a in set {
            if a >= agents {
                return Err(ModelError::InvalidSchedule(format!(
                    "pattern step {p} names unknown agent {a}"
                )));
            }
            if positions[a].last() != Some(&p) {
                positions[a].push(p);
            }
        }
    }
    let mut bound = 0;
    for (a, pos) in positions.iter().enumerate() {
        if pos.is_empty() {
            return Err(ModelError::InvalidSchedule(format!("agent {a} never acts")));
        }
        let wrap = len - pos[pos.len() - 1] + pos[0];
        let inner = pos.windows(2).map(|w| w[1] - w[0]).max().unwrap_or(0);
        bound = bound.max(wrap).max(inner);
    }
    Ok(bound)
}

/// Last-action value `x_{i,j}` for every directed edge, in graph index order.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionVector(Vec<f64>);

impl ActionVector {
    pub fn new(values: Vec<f64>) -> Self {
        ActionVector(values)
    }

    /// Standard initialisation: every agent's actions start at its kindness.
    pub fn initial(agents: &[AgentSpec], graph: &InteractionGraph) -> Self {
        ActionVector(
            graph
                .directed_edges()
                .iter()
                .map(|e| agents[e.from].kindness)
                .collect(),
        )
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, k: usize) -> f64 {
        self.0[k]
    }

    pub fn sup_distance(&self, other: &ActionVector) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn sup_norm(&self) -> f64 {
        self.0.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

impl std::ops::Index<usize> for ActionVector {
    type Output = f64;
    fn index(&self, k: usize) -> &f64 {
        &self.0[k]
    }
}

/// A complete, validated setting: agents, graph and schedule.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub agents: Vec<AgentSpec>,
    pub graph: InteractionGraph,
    pub schedule: ActivationSchedule,
}

impl Scenario {
    pub fn new(
        agents: Vec<AgentSpec>,
        graph: InteractionGraph,
        schedule: ActivationSchedule,
    ) -> Result<Self, ModelError> {
        if agents.len() != graph.agent_count() {
            return Err(ModelError::AgentCountMismatch {
                agents: agents.len(),
                nodes: graph.agent_count(),
            });
        }
        if schedule.agent_count() != graph.agent_count() {
            return Err(ModelError::AgentCountMismatch {
                agents: schedule.agent_count(),
                nodes: graph.agent_count(),
            });
        }
        for a in &agents {
            a.validate()?;
        }
        Ok(Scenario {
            agents,
            graph,
            schedule,
        })
    }

    pub fn synchronous(
        agents: Vec<AgentSpec>,
        graph: InteractionGraph,
    ) -> Result<Self, ModelError> {
        let n = graph.agent_count();
        Self::new(agents, graph, ActivationSchedule::synchronous(n))
    }

    pub fn agent_count(&self) -> usize {
        self.agents.len()
    }

    pub fn kindness_range(&self) -> (f64, f64) {
        self.agents
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), a| {
                (lo.min(a.kindness), hi.max(a.kindness))
            })
    }

    pub fn with_agents(&self, agents: Vec<AgentSpec>) -> Result<Self, ModelError> {
        Scenario::new(agents, self.graph.clone(), self.schedule.clone())
    }
}

/// Three agents in a clique, all Floating, acting synchronously.
pub fn colleagues_scenario() -> Scenario {
    let agents = vec![
        AgentSpec {
            kindness: 0.0,
            r: 0.5,
            r_prime: 0.3,
            attitude: Attitude::Floating,
        },
        AgentSpec {
            kindness: 0.5,
            r: 0.5,
            r_prime: 0.3,
            attitude: Attitude::Floating,
        },
        AgentSpec {
            kindness: 1.0,
            r: 0.8,
            r_prime: 0.1,
            attitude: Attitude::Floating,
        },
    ];
    Scenario::synchronous(agents, InteractionGraph::complete(3).unwrap()).unwrap()
}

/// Two agents copying each other's last move, one starting with 1 and the other with 0.
pub fn tit_for_tat_scenario() -> Scenario {
    let agents = vec![
        AgentSpec {
            kindness: 1.0,
            r: 1.0,
            r_prime: 0.0,
            attitude: Attitude::Fixed,
        },
        AgentSpec {
            kindness: 0.0,
            r: 1.0,
            r_prime: 0.0,
            attitude: Attitude::Fixed,
        },
    ];
    Scenario::synchronous(agents, InteractionGraph::complete(2).unwrap()).unwrap()
}
