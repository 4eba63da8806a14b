//! Experiment orchestration: build the instance and its oracle, run the
//! distributed loop, derive the summary metrics, and write the artifacts.

use std::path::PathBuf;
use std::time::Instant;

use nalgebra::DVector;
use ppsgda_core::dispatch::{
    kkt_residuals, solve_centralized, DispatchInstance, DispatchOptimum, GeneratorDuals,
    KktResiduals,
};
use ppsgda_core::ppsgda::{run, InitialX, OracleOptimum, RunConfig, RunError, RunOutput};
use serde::Serialize;
use thiserror::Error;

use crate::config::{BuiltExperiment, ConfigError, ExperimentConfig};
use crate::trace_io::{emit_trace_csv, TraceIoError};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Run(#[from] RunError),
    #[error(transparent)]
    TraceIo(#[from] TraceIoError),
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// The centralized solution in plain-vector form, for reports.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleSummary {
    pub p_star: Vec<f64>,
    pub lambda_star: f64,
    pub mu_star: Vec<GeneratorDuals>,
    pub objective: f64,
}

impl From<&DispatchOptimum> for OracleSummary {
    fn from(opt: &DispatchOptimum) -> Self {
        OracleSummary {
            p_star: opt.p_star.iter().copied().collect(),
            lambda_star: opt.lambda_star,
            mu_star: opt.mu_star.clone(),
            objective: opt.objective,
        }
    }
}

/// Headline numbers of one experiment, derived purely from the trace, the
/// final states, and the oracle.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryReport {
    /// Largest per-coordinate relative error of each agent at the final
    /// traced round.
    pub final_rel_err: Vec<f64>,
    /// First traced round at which every agent's relative error was at or
    /// below 4e-2 (resp. 1e-2); `None` if never reached.
    pub rounds_to_four_percent: Option<usize>,
    pub rounds_to_one_percent: Option<usize>,
    /// Largest distance of any agent from the network average at the final
    /// traced round.
    pub final_consensus_residual: f64,
    /// Optimality-condition residuals of the network-average iterate, with
    /// the balance multiplier fitted from the interior marginal costs and
    /// the capacity multipliers taken from each generator's own agent.
    pub final_kkt: KktResiduals,
    pub oracle: OracleSummary,
    /// Time spent in the round loop, seconds.
    pub wall_clock_seconds: f64,
}

/// Everything `run_experiment` produces. The trace is returned as well as
/// written so callers (and tests) can inspect it without re-reading files.
pub struct ExperimentArtifacts {
    pub report: SummaryReport,
    pub output: RunOutput,
    pub oracle: DispatchOptimum,
}

/// Runs one configured experiment end to end and writes any requested
/// artifact files.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentArtifacts, ExperimentError> {
    let BuiltExperiment {
        instance,
        graph,
        schedule,
    } = config.build()?;
    let p = graph
        .perron_matrix()
        .expect("config validation already checked connectivity");
    let problems = instance.local_problems(config.run.mu_box_upper);
    let x_set = instance.global_set();
    let optimum = solve_centralized(&instance);
    let oracle = OracleOptimum {
        x_star: optimum.p_star.clone(),
        mu_star: optimum.agent_duals(),
        bounds: instance.corner_gradient_bounds(config.run.mu_box_upper),
    };
    let run_config = RunConfig {
        iterations: config.run.iterations,
        schedule,
        trace_stride: config.run.trace_stride,
        seed: config.run.seed,
        initial_x: InitialX::ProjectedZero,
    };
    let started = Instant::now();
    let output = run(&run_config, &p, &problems, &x_set, Some(&oracle))?;
    let wall_clock_seconds = started.elapsed().as_secs_f64();

    let report = summarize(&instance, &optimum, &output, wall_clock_seconds);
    if let Some(path) = &config.output.trace_path {
        emit_trace_csv(&output.trace, path)?;
    }
    if let Some(path) = &config.output.summary_path {
        let json = serde_json::to_string_pretty(&report)
            .expect("report serialization cannot fail");
        std::fs::write(path, json).map_err(|source| ExperimentError::Io {
            path: path.clone(),
            source,
        })?;
    }
    Ok(ExperimentArtifacts {
        report,
        output,
        oracle: optimum,
    })
}

fn summarize(
    instance: &DispatchInstance,
    optimum: &DispatchOptimum,
    output: &RunOutput,
    wall_clock_seconds: f64,
) -> SummaryReport {
    let records = &output.trace.records;
    let last = records.last().expect("a run always traces round 0");
    let final_rel_err: Vec<f64> = last
        .agents
        .iter()
        .map(|a| a.rel_err_max.expect("experiments always carry an oracle"))
        .collect();
    let first_round_below = |threshold: f64| -> Option<usize> {
        records
            .iter()
            .find(|r| {
                r.agents
                    .iter()
                    .all(|a| a.rel_err_max.unwrap_or(f64::INFINITY) <= threshold)
            })
            .map(|r| r.t)
    };
    let final_consensus_residual = last
        .agents
        .iter()
        .map(|a| a.consensus_residual)
        .fold(0.0, f64::max);
    SummaryReport {
        final_rel_err,
        rounds_to_four_percent: first_round_below(4e-2),
        rounds_to_one_percent: first_round_below(1e-2),
        final_consensus_residual,
        final_kkt: network_kkt(instance, output),
        oracle: OracleSummary::from(optimum),
        wall_clock_seconds,
    }
}

/// Optimality residuals of the network-average primal iterate. The balance
/// multiplier is not a run variable — it only exists implicitly through the
/// simplex projection — so it is fitted as the mean marginal cost over the
/// coordinates that sit strictly inside their capacity boxes (all of them,
/// if none do). Each generator's capacity multipliers are read from the
/// agent that owns it.
fn network_kkt(instance: &DispatchInstance, output: &RunOutput) -> KktResiduals {
    let n = instance.n();
    let mut x_bar = DVector::zeros(n);
    for state in &output.final_states {
        x_bar += &state.x;
    }
    x_bar /= output.final_states.len() as f64;
    let marginal = |k: usize| 2.0 * instance.a()[k] * x_bar[k] + instance.b()[k];
    let mut interior = Vec::new();
    for k in 0..n {
        let width = instance.p_max()[k] - instance.p_min()[k];
        let margin = 1e-6 * (1.0 + width);
        if x_bar[k] > instance.p_min()[k] + margin && x_bar[k] < instance.p_max()[k] - margin {
            interior.push(k);
        }
    }
    let pool: Vec<usize> = if interior.is_empty() {
        (0..n).collect()
    } else {
        interior
    };
    let lambda = pool.iter().map(|&k| marginal(k)).sum::<f64>() / pool.len() as f64;
    let mu: Vec<GeneratorDuals> = output
        .final_states
        .iter()
        .map(|state| GeneratorDuals {
            lower: state.mu[0],
            upper: state.mu[1],
        })
        .collect();
    kkt_residuals(instance, &x_bar, lambda, &mu)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{OutputSection, ProblemSection, RunSection};

    fn fig1_config(iterations: usize, dir: &std::path::Path) -> ExperimentConfig {
        let mut config = ExperimentConfig::fig1(dir);
        config.run.iterations = iterations;
        config
    }

    #[test]
    fn single_round_run_produces_one_trace_row() {
        let dir = tempfile::tempdir().unwrap();
        let config = fig1_config(1, dir.path());
        let artifacts = run_experiment(&config).unwrap();
        assert_eq!(artifacts.output.trace.records.len(), 1);
        assert_eq!(artifacts.output.trace.records[0].t, 0);
        assert!(dir.path().join("fig1_trace.csv").exists());
        assert!(dir.path().join("fig1_summary.json").exists());
    }

    #[test]
    fn omitted_output_paths_write_nothing() {
        let dir = tempfile::tempdir().unwrap();
        let mut config = fig1_config(5, dir.path());
        config.output = OutputSection::default();
        run_experiment(&config).unwrap();
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 0);
    }

    #[test]
    fn summary_metrics_are_consistent_with_the_trace() {
        let dir = tempfile::tempdir().unwrap();
        let mut config = fig1_config(600, dir.path());
        config.output = OutputSection::default();
        let artifacts = run_experiment(&config).unwrap();
        let report = &artifacts.report;
        assert_eq!(report.final_rel_err.len(), 4);
        // This fixture converges fast: both thresholds are crossed and the
        // crossing rounds are ordered.
        let four = report.rounds_to_four_percent.unwrap();
        let one = report.rounds_to_one_percent.unwrap();
        assert!(four <= one);
        assert!(one <= 600);
        assert!(report.final_consensus_residual < 1e-2);
        assert!(report.wall_clock_seconds > 0.0);
        assert_eq!(report.oracle.p_star.len(), 4);
        assert!(report.final_kkt.primal < 1e-2);
    }

    #[test]
    fn custom_instances_run_too() {
        // A two-generator problem on a ring, no preset involved.
        let config = ExperimentConfig {
            problem: ProblemSection {
                preset: None,
                a: Some(vec![1.0, 1.0]),
                b: Some(vec![0.0, 0.0]),
                c: Some(vec![0.0, 0.0]),
                demand: Some(2.0),
                p_min: Some(vec![0.0, 0.0]),
                p_max: Some(vec![5.0, 5.0]),
            },
            graph: Some(crate::config::GraphSection {
                kind: "ring".to_string(),
                n: 2,
                edges: None,
                extra_edge_prob: None,
                seed: None,
            }),
            schedule: Some(crate::config::ScheduleSection { c: 1.0, gamma: 0.8 }),
            run: RunSection {
                iterations: 400,
                trace_stride: 10,
                mu_box_upper: 50.0,
                seed: 0,
            },
            output: OutputSection::default(),
        };
        let artifacts = run_experiment(&config).unwrap();
        // Symmetric generators split the demand evenly.
        assert!((artifacts.oracle.p_star[0] - 1.0).abs() <= 1e-10);
        for err in &artifacts.report.final_rel_err {
            assert!(*err <= 0.05, "final relative error {err}");
        }
    }
}
