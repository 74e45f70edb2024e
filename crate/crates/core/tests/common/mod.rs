//! Seeded random scenario generators shared by the integration tests.
#![allow(dead_code)]

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use reciprocity::model::{ActivationSchedule, AgentSpec, Attitude, InteractionGraph, Scenario};

pub const GRID: [f64; 9] = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9];

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random spanning tree plus each remaining edge with probability `extra`.
pub fn connected_graph(rng: &mut impl Rng, n: usize, extra: f64) -> InteractionGraph {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut edges = Vec::new();
    for k in 1..n {
        let parent = order[rng.gen_range(0..k)];
        let (a, b) = (order[k].min(parent), order[k].max(parent));
        edges.push((a, b));
    }
    for i in 0..n {
        for j in i + 1..n {
            if !edges.contains(&(i, j)) && rng.gen_bool(extra) {
                edges.push((i, j));
            }
        }
    }
    InteractionGraph::new(n, &edges).unwrap()
}

/// `(r, r_prime)` from the coefficient grid with `r + r_prime <= 1`.
pub fn grid_pair(rng: &mut impl Rng, r_prime_positive: bool) -> (f64, f64) {
    loop {
        let r = *GRID.choose(rng).unwrap();
        let rp = if r_prime_positive {
            *GRID.choose(rng).unwrap()
        } else {
            0.0
        };
        if r + rp <= 1.0 + 1e-12 {
            return (r, rp);
        }
    }
}

pub fn kindness(rng: &mut impl Rng) -> f64 {
    rng.gen_range(-1.0..5.0)
}

pub fn agent(rng: &mut impl Rng, attitude: Attitude, r_prime_positive: bool) -> AgentSpec {
    let (r, rp) = grid_pair(rng, r_prime_positive);
    AgentSpec::new(kindness(rng), r, rp, attitude).unwrap()
}

pub fn attitude(rng: &mut impl Rng) -> Attitude {
    if rng.gen_bool(0.5) {
        Attitude::Fixed
    } else {
        Attitude::Floating
    }
}

/// Periodic schedule over `n` agents in which every agent acts at least once.
pub fn periodic_schedule(rng: &mut impl Rng, n: usize) -> ActivationSchedule {
    let len = rng.gen_range(2..=5);
    let mut pattern: Vec<Vec<usize>> = (0..len)
        .map(|_| {
            let mut set: Vec<usize> = (0..n).filter(|_| rng.gen_bool(0.5)).collect();
            if set.is_empty() {
                set.push(rng.gen_range(0..n));
            }
            set
        })
        .collect();
    for a in 0..n {
        if !pattern.iter().any(|s| s.contains(&a)) {
            let slot = rng.gen_range(0..len);
            pattern[slot].push(a);
            pattern[slot].sort_unstable();
        }
    }
    ActivationSchedule::periodic(pattern, n).unwrap()
}

/// Random scenario on up to `max_n` agents with arbitrary attitudes and a
/// synchronous or periodic schedule.
pub fn any_scenario(rng: &mut impl Rng, max_n: usize) -> Scenario {
    let n = rng.gen_range(2..=max_n);
    let graph = connected_graph(rng, n, 0.4);
    let agents = (0..n)
        .map(|_| {
            let att = attitude(rng);
            let positive = rng.gen_bool(0.8);
            agent(rng, att, positive)
        })
        .collect();
    let schedule = if rng.gen_bool(0.5) {
        ActivationSchedule::synchronous(n)
    } else {
        periodic_schedule(rng, n)
    };
    Scenario::new(agents, graph, schedule).unwrap()
}

/// Random action vector and non-empty activation mask for `s`.
pub fn state_and_mask(rng: &mut impl Rng, s: &Scenario) -> (reciprocity::ActionVector, Vec<bool>) {
    let state = reciprocity::ActionVector::new(
        (0..s.graph.directed_edge_count())
            .map(|_| kindness(rng))
            .collect(),
    );
    let n = s.agent_count();
    let mut mask: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.6)).collect();
    if !mask.iter().any(|m| *m) {
        mask[rng.gen_range(0..n)] = true;
    }
    (state, mask)
}

/// Pair of agents on a single edge.
pub fn pair(a: AgentSpec, b: AgentSpec, schedule: ActivationSchedule) -> Scenario {
    Scenario::new(vec![a, b], InteractionGraph::complete(2).unwrap(), schedule).unwrap()
}
