//! Acceptance criteria. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

mod common;

use std::time::{Duration, Instant};

use rand::Rng;

use reciprocity::analysis::{self, check_lemma_suite, monotonicity, PropertyStatus};
use reciprocity::dynamics::{
    self, estimate_rate, Classification, LinearFit, RateEstimate, SimulationOptions,
};
use reciprocity::limits::{self, LimitResult, PairSchedule, TwoAgentCase};
use reciprocity::model::{
    colleagues_scenario, ActivationSchedule, AgentSpec, Attitude, InteractionGraph, Scenario,
};
use reciprocity::spectral::{self, check_structure, TheoremBranch};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn tight() -> SimulationOptions {
    SimulationOptions::default()
        .with_tolerance(1e-12)
        .with_horizon(200_000)
}

fn worked_example() -> Outcome {
    let start = Instant::now();
    let s = colleagues_scenario();
    let g = &s.graph;
    let initial = reciprocity::ActionVector::initial(&s.agents, g);
    let first = dynamics::step(&initial, &s.agents, g, &[true; 3]).unwrap();
    let expected = [((0, 1), 0.475), ((0, 2), 0.975), ((1, 0), 0.25)];
    let mut ok = true;
    let mut parts = Vec::new();
    for ((i, j), want) in expected {
        let got = first[g.index_of(i, j).unwrap()];
        let hit = (got - want).abs() <= 1e-15;
        ok &= hit;
        parts.push(format!(
            "x_{{{i},{j}}}(1) = {got} (want {want}{})",
            if hit { "" } else { ", MISMATCH" }
        ));
    }
    let closed = match limits::network_floating_limit(&s.agents, g).unwrap() {
        LimitResult::Common(l) => l,
        other => return outcome(false, format!("unexpected closed form {other}")),
    };
    let traj = dynamics::simulate(&s, &tight()).unwrap();
    let simulated = traj.limit().map(|l| {
        l.values()
            .iter()
            .map(|v| (v - 25.0 / 52.0).abs())
            .fold(0.0, f64::max)
    });
    let closed_ok = (closed - 25.0 / 52.0).abs() <= 1e-9;
    let sim_ok = simulated.is_some_and(|d| d <= 1e-9);
    let elapsed = start.elapsed();
    ok &= closed_ok && sim_ok && elapsed < Duration::from_secs(1);
    parts.push(format!(
        "closed form L = {closed:.10}, simulation max error {:?}, {elapsed:.2?}",
        simulated
    ));
    outcome(ok, parts.join("; "))
}

fn golden_pairs() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    let cases = [
        (Attitude::Fixed, [1.0 / 6.0, 1.0 / 3.0]),
        (Attitude::Floating, [0.25, 0.25]),
    ];
    for (att, want) in cases {
        let a = AgentSpec::new(0.0, 0.5, 0.0, att).unwrap();
        let b = AgentSpec::new(0.5, 0.5, 0.0, att).unwrap();
        let closed =
            limits::two_agent_limit(&TwoAgentCase::new(a, b, PairSchedule::Synchronous).unwrap());
        let got = match closed {
            LimitResult::PerAgent(x, y) => [x, y],
            LimitResult::Common(l) => [l, l],
            other => return outcome(false, format!("{att}: {other}")),
        };
        let exact = got.iter().zip(&want).all(|(g, w)| (g - w).abs() <= 1e-15);
        let s = common::pair(a, b, ActivationSchedule::synchronous(2));
        let traj = dynamics::simulate(&s, &tight().with_horizon(1000)).unwrap();
        let sim_err = traj.limit().map(|l| {
            l.values()
                .iter()
                .zip(&want)
                .map(|(g, w)| (g - w).abs())
                .fold(0.0, f64::max)
        });
        let sim_ok = sim_err.is_some_and(|e| e <= 1e-9);
        ok &= exact && sim_ok;
        parts.push(format!(
            "{att}: closed {got:?}, simulation error {sim_err:?} after {} steps",
            traj.horizon_used
        ));
    }
    outcome(ok, parts.join("; "))
}

fn fixed_floating_dominance() -> Outcome {
    let mut rng = common::rng(3);
    let mut worst = 0.0f64;
    let mut beyond = 0;
    for trial in 0..50 {
        let rf = rng.gen_range(0.02..0.98);
        let rg = rng.gen_range(0.02..=1.0);
        beyond += usize::from(rf + rg > 1.0);
        let fixed = AgentSpec::fixed(common::kindness(&mut rng), rf, 0.0).unwrap();
        let float = AgentSpec::floating(common::kindness(&mut rng), rg, 0.0).unwrap();
        let (a, b) = if trial % 2 == 0 {
            (fixed, float)
        } else {
            (float, fixed)
        };
        let schedule = if trial % 4 < 2 {
            ActivationSchedule::synchronous(2)
        } else {
            ActivationSchedule::alternating()
        };
        let traj = dynamics::simulate(&common::pair(a, b, schedule), &tight()).unwrap();
        let Some(limit) = traj.limit() else {
            return outcome(
                false,
                format!("trial {trial}: {}", traj.classification.label()),
            );
        };
        worst = worst.max(
            limit
                .values()
                .iter()
                .map(|v| (v - fixed.kindness).abs())
                .fold(0.0, f64::max),
        );
    }
    outcome(
        worst <= 1e-7,
        format!("50 scenarios ({beyond} with r1 + r2 > 1), max |L - k_fixed| = {worst:.2e}"),
    )
}

fn oracle_equivalence() -> Outcome {
    let mut rng = common::rng(4);
    let mut worst = 0.0f64;
    let trials = 500;
    for _ in 0..trials {
        let s = common::any_scenario(&mut rng, 6);
        let (state, mask) = common::state_and_mask(&mut rng, &s);
        let m = spectral::build_matrix(&s.agents, &s.graph, &mask);
        let k = spectral::kindness_vector(&s.agents, &s.graph, &mask);
        let direct = dynamics::step(&state, &s.agents, &s.graph, &mask).unwrap();
        worst = worst.max(m.apply(&state, &k).sup_distance(&direct));
    }
    outcome(
        worst <= 1e-13,
        format!("{trials} scenarios, max entrywise gap {worst:.2e}"),
    )
}

fn mixed_network_limits() -> Outcome {
    let mut rng = common::rng(5);
    let mut worst = 0.0f64;
    let mut worst_r2 = 1.0f64;
    let mut failures = Vec::new();
    let mut tested = 0;
    while tested < 120 {
        let n = rng.gen_range(3..=6);
        let graph = common::connected_graph(&mut rng, n, 0.4);
        let mut agents: Vec<AgentSpec> = (0..n)
            .map(|_| {
                let att = common::attitude(&mut rng);
                common::agent(&mut rng, att, true)
            })
            .collect();
        let anchor = rng.gen_range(0..n);
        agents[anchor].attitude = Attitude::Fixed;
        let s = Scenario::synchronous(agents, graph).unwrap();
        if check_structure(&s.agents, &s.graph).verdict() != TheoremBranch::MixedNetwork {
            continue;
        }
        tested += 1;
        let solved = limits::solve_sync_fixed_point(&s.agents, &s.graph).unwrap();
        let traj = dynamics::simulate(&s, &tight()).unwrap();
        let Some(limit) = traj.limit() else {
            failures.push(format!(
                "{} after {} steps",
                traj.classification.label(),
                traj.horizon_used
            ));
            continue;
        };
        worst = worst.max(solved.sup_distance(limit));
        match estimate_rate(&traj) {
            Ok(RateEstimate::Geometric { r_squared, .. }) => worst_r2 = worst_r2.min(r_squared),
            other => failures.push(format!("rate: {other:?}")),
        }
    }
    let ok = failures.is_empty() && worst <= 1e-7 && worst_r2 >= 0.9;
    outcome(
        ok,
        format!("{tested} scenarios, max |solve - simulate| = {worst:.2e}, min R^2 = {worst_r2:.4}, failures {failures:?}"),
    )
}

const GRID_K: [f64; 5] = [1.0, 2.0, 3.0, 4.0, 5.0];
const GRID_C: [f64; 5] = [0.1, 0.3, 0.5, 0.7, 0.9];

/// Per-edge limits of a synchronous 3-clique scenario via the closed form or linear solve.
fn clique_limit(agents: &[AgentSpec], graph: &InteractionGraph) -> Option<[f64; 6]> {
    let result = match check_structure(agents, graph).verdict() {
        TheoremBranch::AllFloatingNetwork => limits::network_floating_limit(agents, graph).ok()?,
        TheoremBranch::MixedNetwork => limits::network_mixed_limit(agents, graph).ok()?,
        _ => return None,
    };
    let v = result.per_edge(graph)?;
    Some([v[0], v[1], v[2], v[3], v[4], v[5]])
}

#[derive(Default)]
struct Tally {
    curves: usize,
    violations: usize,
    worst: f64,
    example: String,
}

impl Tally {
    fn record(&mut self, value: f64, bad: bool, describe: impl FnOnce() -> String) {
        self.curves += 1;
        if bad {
            self.violations += 1;
        }
        if value > self.worst {
            self.worst = value;
            if bad {
                self.example = describe();
            }
        }
    }

    fn summary(&self, what: &str) -> String {
        let mut s = format!(
            "{what}: {}/{} curves violate, worst {:.2e}",
            self.violations, self.curves, self.worst
        );
        if !self.example.is_empty() {
            s += &format!(" ({})", self.example);
        }
        s
    }
}

fn regularity_grid() -> Outcome {
    let start = Instant::now();
    let graph = InteractionGraph::complete(3).unwrap();
    let pairs: Vec<(usize, usize)> = (0..5)
        .flat_map(|a| (0..5).map(move |b| (a, b)))
        .filter(|&(a, b)| GRID_C[a] + GRID_C[b] <= 1.0 + 1e-12)
        .collect();
    let pair_index = |a: usize, b: usize| pairs.iter().position(|&p| p == (a, b));
    let np = pairs.len();
    let ncoef = np * np * np;
    let coef_of = |c: usize| [c / (np * np), c / np % np, c % np];
    let kind_of = |k: usize| [k / 25, k / 5 % 5, k % 5];
    let kind_index = |k: [usize; 3]| k[0] * 25 + k[1] * 5 + k[2];
    let coef_index = |c: [usize; 3]| c[0] * np * np + c[1] * np + c[2];

    let mut drift = Tally::default();
    let mut affine = Tally::default();
    let mut mono = Tally::default();
    let mut missing = 0usize;
    let mut limits = vec![[f64::NAN; 6]; ncoef * 125];

    for combo in 0..8usize {
        let attitudes: [Attitude; 3] = std::array::from_fn(|i| {
            if combo >> i & 1 == 1 {
                Attitude::Floating
            } else {
                Attitude::Fixed
            }
        });
        let agents_at = |c: usize, k: usize| -> Vec<AgentSpec> {
            let (c, k) = (coef_of(c), kind_of(k));
            (0..3)
                .map(|i| AgentSpec {
                    kindness: GRID_K[k[i]],
                    r: GRID_C[pairs[c[i]].0],
                    r_prime: GRID_C[pairs[c[i]].1],
                    attitude: attitudes[i],
                })
                .collect()
        };
        for c in 0..ncoef {
            for k in 0..125 {
                match clique_limit(&agents_at(c, k), &graph) {
                    Some(l) => limits[c * 125 + k] = l,
                    None => {
                        missing += 1;
                        limits[c * 125 + k] = [f64::NAN; 6];
                    }
                }
            }
        }
        let describe = |c: usize, k: usize, what: &str| {
            let agents = agents_at(c, k);
            let spec: Vec<String> = agents
                .iter()
                .map(|a| {
                    format!(
                        "{}(k={},r={},r'={})",
                        a.attitude, a.kindness, a.r, a.r_prime
                    )
                })
                .collect();
            format!("{what} at [{}]", spec.join(", "))
        };

        for c in 0..ncoef {
            let base = agents_at(c, 0);
            let has_fixed = base.iter().any(|a| a.is_effectively_fixed());
            for i in 0..3 {
                for k in 0..125 {
                    let mut ks = kind_of(k);
                    if ks[i] != 0 {
                        continue;
                    }
                    let series: Vec<[f64; 6]> = (0..5)
                        .map(|v| {
                            ks[i] = v;
                            limits[c * 125 + kind_index(ks)]
                        })
                        .collect();
                    if attitudes[i] == Attitude::Floating && has_fixed {
                        let spread = (0..6)
                            .map(|e| {
                                let (lo, hi) = series
                                    .iter()
                                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), s| {
                                        (lo.min(s[e]), hi.max(s[e]))
                                    });
                                hi - lo
                            })
                            .fold(0.0, f64::max);
                        drift.record(spread, !(spread <= 1e-8), || {
                            describe(c, k, &format!("k_{i} sweep drift {spread:.2e}"))
                        });
                    }
                    if base[i].is_effectively_fixed() {
                        for e in 0..6 {
                            let pts: Vec<(f64, f64)> =
                                (0..5).map(|v| (GRID_K[v], series[v][e])).collect();
                            let res = LinearFit::least_squares(&pts).max_residual;
                            affine.record(res, !(res <= 1e-6), || {
                                describe(c, k, &format!("k_{i} sweep residual {res:.2e}"))
                            });
                        }
                    }
                }
                // sweep r_i, then r'_i, over every admissible grid value
                for which in 0..2 {
                    let cs = coef_of(c);
                    let (a, b) = pairs[cs[i]];
                    let fixed_part = if which == 0 { b } else { a };
                    let first = (0..5)
                        .find(|&v| {
                            if which == 0 {
                                pair_index(v, b).is_some()
                            } else {
                                pair_index(a, v).is_some()
                            }
                        })
                        .unwrap();
                    if (which == 0 && a != first) || (which == 1 && b != first) {
                        continue;
                    }
                    let coefs: Vec<usize> = (0..5)
                        .filter_map(|v| {
                            let p = if which == 0 {
                                pair_index(v, fixed_part)
                            } else {
                                pair_index(fixed_part, v)
                            }?;
                            let mut cc = cs;
                            cc[i] = p;
                            Some(coef_index(cc))
                        })
                        .collect();
                    if coefs.len() < 2 {
                        continue;
                    }
                    for k in 0..125 {
                        for e in 0..6 {
                            let ys: Vec<f64> =
                                coefs.iter().map(|&cc| limits[cc * 125 + k][e]).collect();
                            let (m, violation) = monotonicity(&ys, 1e-8);
                            let name = if which == 0 { "r" } else { "r'" };
                            mono.record(violation, !m.is_monotone(), || {
                                let edge = graph.edge_of(e);
                                let shown: Vec<String> =
                                    ys.iter().map(|y| format!("{y:.6}")).collect();
                                describe(
                                    c,
                                    k,
                                    &format!(
                                        "{name}_{i} sweep, edge {edge}: [{}]",
                                        shown.join(", ")
                                    ),
                                )
                            });
                        }
                    }
                }
            }
        }
    }
    let elapsed = start.elapsed();
    let ok = missing == 0
        && drift.violations == 0
        && affine.violations == 0
        && mono.violations == 0
        && elapsed < Duration::from_secs(300);
    let detail = format!(
        "{} grid points, {missing} without a limit; {}; {}; {}; {elapsed:.1?}",
        8 * ncoef * 125,
        drift.summary("floating-kindness drift"),
        affine.summary("fixed-kindness affinity"),
        mono.summary("coefficient monotonicity")
    );
    outcome(ok, detail)
}

fn counterexample() -> Outcome {
    let report = analysis::counterexample_fixed_ordering().unwrap();
    let traj = dynamics::simulate(&report.scenario, &tight()).unwrap();
    let agree = traj.limit().map(|l| {
        l.values()
            .iter()
            .zip(&report.limits)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    });
    outcome(
        report.ordering_fails && agree.is_some_and(|d| d <= 1e-7),
        format!(
            "L_{{0,1}} = {:.8} > L_{{2,1}} = {:.8}, simulation gap {agree:?}",
            report.l12, report.l32
        ),
    )
}

fn non_convergence() -> Outcome {
    let mut parts = Vec::new();
    let mut ok = true;
    for att in [Attitude::Fixed, Attitude::Floating] {
        let s = common::pair(
            AgentSpec::new(1.0, 1.0, 0.0, att).unwrap(),
            AgentSpec::new(0.0, 1.0, 0.0, att).unwrap(),
            ActivationSchedule::synchronous(2),
        );
        let traj = dynamics::simulate(&s, &SimulationOptions::default().with_horizon(50)).unwrap();
        let hit = matches!(traj.classification, Classification::PeriodTwo { .. });
        ok &= hit;
        parts.push(format!(
            "{att} r=1 pair: {} at step {}",
            traj.classification.label(),
            traj.horizon_used
        ));
    }
    let s = common::pair(
        AgentSpec::floating(1.0, 0.0, 0.0).unwrap(),
        AgentSpec::floating(3.0, 0.0, 0.0).unwrap(),
        ActivationSchedule::synchronous(2),
    );
    let traj = dynamics::simulate(&s, &SimulationOptions::default()).unwrap();
    let limit_ok = traj.limit().is_some_and(|l| l.values() == [1.0, 3.0]);
    ok &= limit_ok;
    parts.push(format!(
        "inert Floating pair: {} with limits {:?}",
        traj.classification.label(),
        traj.limit().map(|l| l.values().to_vec())
    ));
    outcome(ok, parts.join("; "))
}

fn random_pair_schedule(rng: &mut impl Rng) -> ActivationSchedule {
    match rng.gen_range(0..3) {
        0 => ActivationSchedule::synchronous(2),
        1 => ActivationSchedule::alternating(),
        _ => common::periodic_schedule(rng, 2),
    }
}

fn pair_agent(rng: &mut impl Rng, att: Attitude, r: f64) -> AgentSpec {
    AgentSpec::new(common::kindness(rng), r, 0.0, att).unwrap()
}

fn lemma_suites() -> Outcome {
    let mut rng = common::rng(9);
    type Gen = fn(&mut rand_chacha::ChaCha8Rng) -> Scenario;
    let regions: [(&str, &str, Gen); 7] = [
        ("oscillation", "oscillation", |rng| {
            let a = {
                let r = rng.gen_range(0.01..0.99);
                pair_agent(rng, Attitude::Fixed, r)
            };
            let b = {
                let r = rng.gen_range(0.01..0.99);
                pair_agent(rng, Attitude::Fixed, r)
            };
            common::pair(a, b, ActivationSchedule::synchronous(2))
        }),
        ("monotonicity", "fixed_floating_monotonicity", |rng| {
            let rf = rng.gen_range(0.0..0.98);
            let rg = rng.gen_range(0.01..=1.0 - rf);
            let mut pair = [
                pair_agent(rng, Attitude::Fixed, rf),
                pair_agent(rng, Attitude::Floating, rg),
            ];
            if rng.gen_bool(0.5) {
                pair.swap(0, 1);
            }
            let schedule = random_pair_schedule(rng);
            common::pair(pair[0], pair[1], schedule)
        }),
        ("ordering (floating pair)", "pair_ordering", |rng| {
            let r1 = rng.gen_range(0.0..1.0);
            let r2 = rng.gen_range(0.0..=1.0 - r1);
            let (a, b) = (
                pair_agent(rng, Attitude::Floating, r1),
                pair_agent(rng, Attitude::Floating, r2),
            );
            let schedule = random_pair_schedule(rng);
            common::pair(a, b, schedule)
        }),
        ("ordering (fixed-floating pair)", "pair_ordering", |rng| {
            let r1 = rng.gen_range(0.0..1.0);
            let r2 = rng.gen_range(0.0..=1.0 - r1);
            let (a, b) = (
                pair_agent(rng, Attitude::Fixed, r1),
                pair_agent(rng, Attitude::Floating, r2),
            );
            let schedule = random_pair_schedule(rng);
            common::pair(a, b, schedule)
        }),
        ("order alternation", "order_alternation", |rng| {
            let r1 = rng.gen_range(0.0..=1.0);
            let r2 = rng.gen_range(1.0 - r1..=1.0);
            let (a, b) = (
                pair_agent(rng, Attitude::Floating, r1),
                pair_agent(rng, Attitude::Floating, r2),
            );
            let schedule = random_pair_schedule(rng);
            common::pair(a, b, schedule)
        }),
        ("subsequence", "subsequence", |rng| {
            let a = {
                let r = rng.gen_range(0.0..1.0);
                pair_agent(rng, Attitude::Fixed, r)
            };
            let b = {
                let r = rng.gen_range(0.0..1.0);
                pair_agent(rng, Attitude::Fixed, r)
            };
            let schedule = common::periodic_schedule(rng, 2);
            common::pair(a, b, schedule)
        }),
        ("limit ordering", "limit_ordering", |rng| {
            let (a1, a2) = (common::attitude(rng), common::attitude(rng));
            let a = {
                let r = rng.gen_range(0.05..0.95);
                pair_agent(rng, a1, r)
            };
            let b = {
                let r = rng.gen_range(0.05..0.95);
                pair_agent(rng, a2, r)
            };
            let schedule = random_pair_schedule(rng);
            common::pair(a, b, schedule)
        }),
    ];
    let mut ok = true;
    let mut parts = Vec::new();
    for (region, property, generate) in regions {
        let mut holds = 0;
        let mut first_failure = None;
        for _ in 0..200 {
            let s = generate(&mut rng);
            let traj = dynamics::simulate(&s, &tight()).unwrap();
            let suite = check_lemma_suite(&s, &traj);
            let result = suite.iter().find(|o| o.name == property).unwrap();
            if result.status == PropertyStatus::Holds {
                holds += 1;
            } else if first_failure.is_none() {
                first_failure = Some(format!("{result} for {:?}", s.agents));
            }
        }
        ok &= holds == 200;
        parts.push(format!("{region} {holds}/200"));
        if let Some(f) = first_failure {
            parts.push(f);
        }
    }
    outcome(ok, parts.join("; "))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("worked example", worked_example),
        ("two-agent golden limits", golden_pairs),
        ("fixed-floating dominance", fixed_floating_dominance),
        ("matrix/step oracle equivalence", oracle_equivalence),
        ("mixed-network limits", mixed_network_limits),
        ("regularity grid", regularity_grid),
        ("fixed-ordering counterexample", counterexample),
        ("non-convergence classification", non_convergence),
        ("lemma suites", lemma_suites),
    ];
    let only: Option<usize> = std::env::var("ACCEPTANCE_ONLY")
        .ok()
        .and_then(|v| v.parse().ok());
    let mut failed = 0;
    for (n, (name, run)) in criteria.iter().enumerate() {
        let n = n + 1;
        if only.is_some_and(|o| o != n) {
            continue;
        }
        let start = Instant::now();
        let o = run();
        if !o.pass {
            failed += 1;
        }
        println!(
            "criterion {n} {}: {name}: {} [{:.2?}]",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail,
            start.elapsed()
        );
    }
    println!("acceptance: {failed} criteria failed");
    if failed > 0 {
        std::process::exit(1);
    }
}
