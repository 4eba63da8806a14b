//! Projected push-sum gradient descent-ascent.
//!
//! Each synchronous round reads the full pre-round state and performs, for
//! every agent `i`:
//!
//! ```text
//! y_i' = sum_j P_ij y_j                         (weight mixing)
//! z_i  = (1 / y_i') sum_j P_ij y_j x_j          (de-biased value mixing)
//! x_i' = proj_X( z_i - alpha_t grad_x L_i(z_i, mu_i) / y_i' )
//! mu_i' = proj_Mi( mu_i + alpha_t grad_mu L_i(z_i, mu_i) )
//! ```
//!
//! The weight division corrects the directional bias of column-stochastic
//! mixing, so `z` tracks the true network average; the gradient steps then
//! drive the average toward the saddle point of the sum of local
//! Lagrangians. Diagnostics in this module measure the disturbance the
//! gradient steps inject into the consensus process (`eps` terms), the
//! per-agent distance from the network average, and the Lyapunov-style
//! descent terms `v`, `u`, `c` used to certify convergence against an
//! oracle optimum.

use nalgebra::DVector;
use serde::Serialize;
use thiserror::Error;

use crate::graph::PerronMatrix;
use crate::problem::{GradientBounds, LocalProblem, StepSizeSchedule};
use crate::projections::ConvexSet;

/// Optimal coordinates smaller than this switch the relative-error metric
/// to an absolute difference.
pub const REL_ERR_FLOOR: f64 = 1e-9;

/// Errors from run configuration.
#[derive(Debug, Error, PartialEq)]
pub enum RunError {
    /// The configuration is internally inconsistent.
    #[error("invalid run configuration: {0}")]
    InvalidConfig(String),
}

/// One agent's state: primal estimate, dual multipliers, push-sum weight.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentState {
    /// Primal estimate in the shared set `X`.
    pub x: DVector<f64>,
    /// Dual multipliers in the agent's box `M_i`.
    pub mu: DVector<f64>,
    /// Push-sum weight; positive, and the weights sum to `n` network-wide.
    pub y: f64,
}

/// The mixing half of a round: new weights and de-biased averages, computed
/// from a snapshot of the pre-round state.
#[derive(Debug, Clone, PartialEq)]
pub struct MixedRound {
    /// `y_i'` for each agent.
    pub y_next: Vec<f64>,
    /// `z_i` for each agent.
    pub z: Vec<DVector<f64>>,
}

/// Weight and value mixing: `y_i' = sum_j P_ij y_j` and
/// `z_i = (1/y_i') sum_j P_ij y_j x_j`.
pub fn push_sum_mix(states: &[AgentState], p: &PerronMatrix) -> MixedRound {
    let n = states.len();
    assert_eq!(p.n(), n, "mixing matrix size must match the agent count");
    assert!(n >= 1, "need at least one agent");
    let dim = states[0].x.len();
    let mut y_next = vec![0.0; n];
    let mut z = Vec::with_capacity(n);
    for i in 0..n {
        let mut acc = DVector::zeros(dim);
        for (j, state) in states.iter().enumerate() {
            let weight = p.entries()[(i, j)] * state.y;
            if weight != 0.0 {
                y_next[i] += weight;
                acc += &state.x * weight;
            }
        }
        z.push(acc / y_next[i]);
    }
    MixedRound { y_next, z }
}

/// The gradient half of a round, applied to a completed mix.
fn gradient_updates(
    states: &[AgentState],
    mix: &MixedRound,
    problems: &[LocalProblem],
    x_set: &dyn ConvexSet,
    t: usize,
    schedule: &StepSizeSchedule,
) -> Vec<AgentState> {
    let alpha = schedule.alpha(t);
    states
        .iter()
        .enumerate()
        .map(|(i, state)| {
            let z = &mix.z[i];
            let grad_x = problems[i]
                .grad_x_lagrangian(z, &state.mu)
                .expect("state dimensions are validated at run start");
            let x = x_set.project(&(z - grad_x * (alpha / mix.y_next[i])));
            let grad_mu = problems[i].grad_mu_lagrangian(z);
            let mu = problems[i].dual_box().project(&(&state.mu + grad_mu * alpha));
            AgentState {
                x,
                mu,
                y: mix.y_next[i],
            }
        })
        .collect()
}

/// One full synchronous round at iteration `t`.
pub fn ppsgda_step(
    states: &[AgentState],
    p: &PerronMatrix,
    problems: &[LocalProblem],
    x_set: &dyn ConvexSet,
    t: usize,
    schedule: &StepSizeSchedule,
) -> Vec<AgentState> {
    let mix = push_sum_mix(states, p);
    gradient_updates(states, &mix, problems, x_set, t, schedule)
}

/// Disturbance the gradient-plus-projection step injected into the pure
/// consensus dynamics during one round:
/// `eps_x = x_i[t+1] - z_i[t]` and `eps_mu = mu_i[t+1] - mu_i[t]`.
pub fn disturbance_terms(
    state_before: &AgentState,
    z: &DVector<f64>,
    state_after: &AgentState,
) -> (DVector<f64>, DVector<f64>) {
    (&state_after.x - z, &state_after.mu - &state_before.mu)
}

/// Distance of each agent from the network average: `||x_i - x_bar||`.
pub fn consensus_residuals(states: &[AgentState]) -> Vec<f64> {
    assert!(!states.is_empty(), "need at least one agent");
    let n = states.len() as f64;
    let mut x_bar = DVector::zeros(states[0].x.len());
    for state in states {
        x_bar += &state.x;
    }
    x_bar /= n;
    states.iter().map(|s| (&s.x - &x_bar).norm()).collect()
}

/// The three per-round terms of the descent inequality
/// `v[t+1] <= v[t] - u[t] + c[t]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LyapunovTerms {
    /// Weighted squared distance from the saddle point:
    /// `sum_i (y_i ||x_i - x*||^2 + ||mu_i - mu*_i||^2)`.
    pub v: f64,
    /// Saddle-gap progress term; nonnegative by convexity in `x` and
    /// affinity in `mu`.
    pub u: f64,
    /// Disturbance budget driven by consensus error and squared step size.
    pub c: f64,
}

/// Evaluates the descent terms at the current states against an oracle
/// saddle point `(x*, mu*)`, with `w` the Perron vector of the mixing
/// matrix and `bounds` the gradient bounds over the feasible sets.
#[allow(clippy::too_many_arguments)]
pub fn lyapunov_terms(
    states: &[AgentState],
    x_star: &DVector<f64>,
    mu_star: &[DVector<f64>],
    problems: &[LocalProblem],
    schedule: &StepSizeSchedule,
    t: usize,
    bounds: &GradientBounds,
    w: &DVector<f64>,
) -> LyapunovTerms {
    let n = states.len();
    assert_eq!(problems.len(), n, "one problem per agent");
    assert_eq!(mu_star.len(), n, "one oracle dual per agent");
    assert_eq!(w.len(), n, "Perron vector size must match the agent count");
    let alpha = schedule.alpha(t);
    let mut v = 0.0;
    for (state, opt_mu) in states.iter().zip(mu_star) {
        v += state.y * (&state.x - x_star).norm_squared();
        v += (&state.mu - opt_mu).norm_squared();
    }
    let mut x_bar = DVector::zeros(states[0].x.len());
    for state in states {
        x_bar += &state.x;
    }
    x_bar /= n as f64;
    let mut gap_primal = 0.0; // L(x_bar, mu*) - L(x*, mu*)
    let mut gap_dual = 0.0; // L(x*, mu*) - L(x*, mu[t])
    for (i, problem) in problems.iter().enumerate() {
        let at_bar = problem
            .lagrangian(&x_bar, &mu_star[i])
            .expect("dimensions validated at run start");
        let at_star = problem
            .lagrangian(x_star, &mu_star[i])
            .expect("dimensions validated at run start");
        let at_current_mu = problem
            .lagrangian(x_star, &states[i].mu)
            .expect("dimensions validated at run start");
        gap_primal += at_bar - at_star;
        gap_dual += at_star - at_current_mu;
    }
    let u = 2.0 * alpha * (gap_primal + gap_dual);
    let consensus_sum: f64 = consensus_residuals(states).iter().sum();
    let inverse_weight_sum: f64 = (0..n).map(|i| 1.0 / w[i]).sum();
    let dual_bound_sum: f64 = bounds.l_mu.iter().map(|l| l * l).sum();
    let c = 2.0 * alpha * bounds.l_x * n as f64 * consensus_sum
        + bounds.l_x * bounds.l_x * alpha * alpha * inverse_weight_sum
        + alpha * alpha * dual_bound_sum;
    LyapunovTerms { v, u, c }
}

/// Primal initialization policy.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialX {
    /// Every agent starts at the projection of the origin onto `X`, which
    /// is feasible for any `X`.
    ProjectedZero,
    /// Every agent starts at the projection of the given point.
    Shared(DVector<f64>),
    /// Per-agent starting points, each projected.
    PerAgent(Vec<DVector<f64>>),
}

/// Run parameters. The round loop itself is deterministic; the seed is
/// carried so any sampled sub-procedures configured around a run (gradient
/// bound estimation, graph generation) reproduce with it.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    /// Number of rounds; at least 1.
    pub iterations: usize,
    /// Step-size schedule.
    pub schedule: StepSizeSchedule,
    /// Record a trace row every this many rounds; at least 1.
    pub trace_stride: usize,
    /// Seed for sampled sub-procedures around the run.
    pub seed: u64,
    /// Primal initialization.
    pub initial_x: InitialX,
}

/// Oracle saddle point with gradient bounds, enabling relative-error and
/// Lyapunov columns in the trace.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleOptimum {
    /// Optimal primal point.
    pub x_star: DVector<f64>,
    /// Optimal dual per agent.
    pub mu_star: Vec<DVector<f64>>,
    /// Gradient bounds over the feasible sets.
    pub bounds: GradientBounds,
}

/// Per-agent slice of one trace row.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AgentTraceRecord {
    /// Worst per-coordinate relative error against `x*`; absolute
    /// difference for coordinates below [`REL_ERR_FLOOR`]. `None` without
    /// an oracle.
    pub rel_err_max: Option<f64>,
    /// `||x_i - x_bar||` at this round.
    pub consensus_residual: f64,
    /// `||eps_x||` injected by this round's update; zero on the terminal
    /// row, where no round follows.
    pub eps_x_norm: f64,
    /// `||eps_mu||` injected by this round's update; zero on the terminal
    /// row.
    pub eps_mu_norm: f64,
    /// Push-sum weight at this round.
    pub y: f64,
    /// Weight after this round's mixing.
    pub y_next: f64,
}

/// One traced round.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceRecord {
    /// Round index.
    pub t: usize,
    /// Step size used this round.
    pub alpha: f64,
    /// Per-agent diagnostics.
    pub agents: Vec<AgentTraceRecord>,
    /// Descent terms against the oracle; `None` without an oracle.
    pub lyapunov: Option<LyapunovTerms>,
}

/// Chronological trace records, one per traced round.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunTrace {
    /// Records at rounds `t = 0, stride, 2*stride, ...`, including the
    /// terminal round when the stride divides it.
    pub records: Vec<TraceRecord>,
}

/// A finished run: its trace and the states after the last round.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    /// Traced diagnostics.
    pub trace: RunTrace,
    /// States after round `iterations`.
    pub final_states: Vec<AgentState>,
}

/// Worst per-coordinate relative error of `x` against `x_star`.
pub fn max_relative_error(x: &DVector<f64>, x_star: &DVector<f64>) -> f64 {
    assert_eq!(x.len(), x_star.len(), "points must share a dimension");
    (0..x.len())
        .map(|k| {
            let diff = (x[k] - x_star[k]).abs();
            if x_star[k].abs() < REL_ERR_FLOOR {
                diff
            } else {
                diff / x_star[k].abs()
            }
        })
        .fold(0.0, f64::max)
}

/// Runs the full iteration: projected initialization, `iterations` rounds,
/// trace rows at every multiple of the stride (round 0 and, when the
/// stride divides it, the terminal round included).
pub fn run(
    config: &RunConfig,
    p: &PerronMatrix,
    problems: &[LocalProblem],
    x_set: &dyn ConvexSet,
    oracle: Option<&OracleOptimum>,
) -> Result<RunOutput, RunError> {
    let n = p.n();
    if config.iterations < 1 {
        return Err(RunError::InvalidConfig("iterations must be at least 1".into()));
    }
    if config.trace_stride < 1 {
        return Err(RunError::InvalidConfig(
            "trace_stride must be at least 1".into(),
        ));
    }
    if problems.len() != n {
        return Err(RunError::InvalidConfig(format!(
            "{} problems for {} agents",
            problems.len(),
            n
        )));
    }
    let dim = x_set.dim();
    for (i, problem) in problems.iter().enumerate() {
        if problem.dim() != dim {
            return Err(RunError::InvalidConfig(format!(
                "problem {i} has dimension {}, the shared set has {dim}",
                problem.dim()
            )));
        }
    }
    if let Some(oracle) = oracle {
        if oracle.x_star.len() != dim {
            return Err(RunError::InvalidConfig(format!(
                "oracle optimum has dimension {}, the shared set has {dim}",
                oracle.x_star.len()
            )));
        }
        if oracle.mu_star.len() != n || oracle.bounds.l_mu.len() != n {
            return Err(RunError::InvalidConfig(
                "oracle duals and bounds must cover every agent".into(),
            ));
        }
        for (i, (mu, problem)) in oracle.mu_star.iter().zip(problems).enumerate() {
            if mu.len() != problem.num_constraints() {
                return Err(RunError::InvalidConfig(format!(
                    "oracle dual {i} has dimension {}, problem has {} constraints",
                    mu.len(),
                    problem.num_constraints()
                )));
            }
        }
    }
    let starts: Vec<DVector<f64>> = match &config.initial_x {
        InitialX::ProjectedZero => vec![x_set.project(&DVector::zeros(dim)); n],
        InitialX::Shared(point) => {
            if point.len() != dim {
                return Err(RunError::InvalidConfig(format!(
                    "initial point has dimension {}, the shared set has {dim}",
                    point.len()
                )));
            }
            vec![x_set.project(point); n]
        }
        InitialX::PerAgent(points) => {
            if points.len() != n {
                return Err(RunError::InvalidConfig(format!(
                    "{} initial points for {n} agents",
                    points.len()
                )));
            }
            points
                .iter()
                .map(|point| {
                    if point.len() != dim {
                        return Err(RunError::InvalidConfig(format!(
                            "initial point has dimension {}, the shared set has {dim}",
                            point.len()
                        )));
                    }
                    Ok(x_set.project(point))
                })
                .collect::<Result<_, _>>()?
        }
    };
    let mut states: Vec<AgentState> = starts
        .into_iter()
        .zip(problems)
        .map(|(x, problem)| AgentState {
            x,
            mu: DVector::zeros(problem.num_constraints()),
            y: 1.0,
        })
        .collect();
    let mut records = Vec::new();
    for t in 0..config.iterations {
        let mix = push_sum_mix(&states, p);
        let next = gradient_updates(&states, &mix, problems, x_set, t, &config.schedule);
        if t % config.trace_stride == 0 {
            records.push(make_record(
                t,
                &states,
                Some((&mix, &next)),
                problems,
                &config.schedule,
                oracle,
                p,
            ));
        }
        states = next;
    }
    if config.iterations % config.trace_stride == 0 {
        records.push(make_record(
            config.iterations,
            &states,
            None,
            problems,
            &config.schedule,
            oracle,
            p,
        ));
    }
    Ok(RunOutput {
        trace: RunTrace { records },
        final_states: states,
    })
}

/// Builds one trace row. `step` carries the mixing output and post-round
/// states when a round follows this instant; the terminal row has none.
fn make_record(
    t: usize,
    states: &[AgentState],
    step: Option<(&MixedRound, &Vec<AgentState>)>,
    problems: &[LocalProblem],
    schedule: &StepSizeSchedule,
    oracle: Option<&OracleOptimum>,
    p: &PerronMatrix,
) -> TraceRecord {
    let residuals = consensus_residuals(states);
    let agents = states
        .iter()
        .enumerate()
        .map(|(i, state)| {
            let (eps_x_norm, eps_mu_norm, y_next) = match step {
                Some((mix, next)) => {
                    let (eps_x, eps_mu) = disturbance_terms(state, &mix.z[i], &next[i]);
                    (eps_x.norm(), eps_mu.norm(), mix.y_next[i])
                }
                None => {
                    let y_next = (0..states.len())
                        .map(|j| p.entries()[(i, j)] * states[j].y)
                        .sum();
                    (0.0, 0.0, y_next)
                }
            };
            AgentTraceRecord {
                rel_err_max: oracle.map(|o| max_relative_error(&state.x, &o.x_star)),
                consensus_residual: residuals[i],
                eps_x_norm,
                eps_mu_norm,
                y: state.y,
                y_next,
            }
        })
        .collect();
    TraceRecord {
        t,
        alpha: schedule.alpha(t),
        agents,
        lyapunov: oracle.map(|o| {
            lyapunov_terms(
                states,
                &o.x_star,
                &o.mu_star,
                problems,
                schedule,
                t,
                &o.bounds,
                p.perron_vector(),
            )
        }),
    }
}
