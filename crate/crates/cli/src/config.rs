//! Experiment configuration: a TOML file describing the dispatch problem,
//! the communication graph, the step-size schedule, and run/output
//! parameters. Loading validates everything up front — including graph
//! connectivity — so the orchestration code never has to.

use std::path::{Path, PathBuf};

use ppsgda_core::dispatch::{fig1_fixture, DispatchInstance, DEFAULT_MU_UPPER};
use ppsgda_core::graph::DirectedGraph;
use ppsgda_core::problem::StepSizeSchedule;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Configuration failures, reported with the path of the offending field
/// whenever one can be named.
#[derive(Debug, Error)]
pub enum ConfigError {
    /// The file could not be read at all.
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    /// The file is not valid TOML or does not match the schema (unknown
    /// keys, wrong types, missing required fields).
    #[error("config does not match the schema: {0}")]
    Schema(#[from] toml::de::Error),
    /// The file parsed but a field value is out of range or inconsistent
    /// with the rest of the configuration.
    #[error("{field}: {reason}")]
    Invalid { field: String, reason: String },
}

fn invalid(field: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        field: field.to_string(),
        reason: reason.into(),
    }
}

/// The dispatch problem: either the built-in four-generator preset or an
/// explicit coefficient table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSection {
    /// `"fig1"` selects the built-in fixture (and its graph and schedule,
    /// unless those sections are given explicitly).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub a: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub b: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub demand: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p_min: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p_max: Option<Vec<f64>>,
}

/// The communication graph: an explicit edge list or a named generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphSection {
    /// One of `"edges"`, `"ring"`, `"complete"`, `"random"`.
    pub kind: String,
    /// Vertex count; must match the number of generators.
    pub n: usize,
    /// Directed edges as 1-based `[from, to]` pairs (for `kind = "edges"`).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub edges: Option<Vec<(usize, usize)>>,
    /// Probability of each extra edge beyond the spanning cycle
    /// (for `kind = "random"`; default 0.3).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub extra_edge_prob: Option<f64>,
    /// Generator seed (for `kind = "random"`).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

/// Diminishing step-size parameters for `alpha(t) = c / (t+1)^gamma`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleSection {
    pub c: f64,
    pub gamma: f64,
}

fn default_trace_stride() -> usize {
    10
}

fn default_mu_box_upper() -> f64 {
    DEFAULT_MU_UPPER
}

/// Horizon and bookkeeping parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub iterations: usize,
    /// Record every `trace_stride`-th round (default 10).
    #[serde(default = "default_trace_stride")]
    pub trace_stride: usize,
    /// Upper corner of every agent's dual box (default 100).
    #[serde(default = "default_mu_box_upper")]
    pub mu_box_upper: f64,
    /// Recorded alongside the results so reruns can be labelled; the round
    /// loop itself is deterministic.
    #[serde(default)]
    pub seed: u64,
}

/// Where to write the artifacts; omitted paths suppress the file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trace_path: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub summary_path: Option<PathBuf>,
}

/// A fully parsed experiment description. `build` turns it into live
/// objects; `load` + `build` together perform every validation the input
/// format promises.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub problem: ProblemSection,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub graph: Option<GraphSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub schedule: Option<ScheduleSection>,
    pub run: RunSection,
    #[serde(default, skip_serializing_if = "is_default_output")]
    pub output: OutputSection,
}

fn is_default_output(output: &OutputSection) -> bool {
    *output == OutputSection::default()
}

/// Everything the orchestrator needs, constructed and validated.
pub struct BuiltExperiment {
    pub instance: DispatchInstance,
    pub graph: DirectedGraph,
    pub schedule: StepSizeSchedule,
}

impl ExperimentConfig {
    /// The built-in four-generator experiment with the documented horizon.
    pub fn fig1(out_dir: &Path) -> Self {
        ExperimentConfig {
            problem: ProblemSection {
                preset: Some("fig1".to_string()),
                a: None,
                b: None,
                c: None,
                demand: None,
                p_min: None,
                p_max: None,
            },
            graph: None,
            schedule: None,
            run: RunSection {
                iterations: 4000,
                trace_stride: default_trace_stride(),
                mu_box_upper: default_mu_box_upper(),
                seed: 0,
            },
            output: OutputSection {
                trace_path: Some(out_dir.join("fig1_trace.csv")),
                summary_path: Some(out_dir.join("fig1_summary.json")),
            },
        }
    }

    /// Parses and fully validates a config file.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let config: ExperimentConfig = toml::from_str(&text)?;
        config.build()?;
        Ok(config)
    }

    /// Serializes the config back to TOML text.
    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serialization cannot fail")
    }

    /// Writes the config to a file, so that `load` reproduces it.
    pub fn save(&self, path: &Path) -> Result<(), ConfigError> {
        std::fs::write(path, self.to_toml()).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })
    }

    /// Constructs the problem instance, graph, and schedule, validating
    /// every field along the way.
    pub fn build(&self) -> Result<BuiltExperiment, ConfigError> {
        let preset = self.resolve_preset()?;
        let instance = match &preset {
            Some((inst, _, _)) => inst.clone(),
            None => self.build_instance()?,
        };
        let graph = match (&self.graph, &preset) {
            (Some(section), _) => self.build_graph(section, instance.n())?,
            (None, Some((_, graph, _))) => graph.clone(),
            (None, None) => return Err(invalid("graph", "section is required unless problem.preset supplies one")),
        };
        let schedule = match (&self.schedule, &preset) {
            (Some(section), _) => build_schedule(section)?,
            (None, Some((_, _, schedule))) => *schedule,
            (None, None) => {
                return Err(invalid(
                    "schedule",
                    "section is required unless problem.preset supplies one",
                ))
            }
        };
        if self.run.iterations < 1 {
            return Err(invalid("run.iterations", "must be at least 1"));
        }
        if self.run.trace_stride < 1 {
            return Err(invalid("run.trace_stride", "must be at least 1"));
        }
        if !(self.run.mu_box_upper > 0.0 && self.run.mu_box_upper.is_finite()) {
            return Err(invalid(
                "run.mu_box_upper",
                format!("must be positive and finite, got {}", self.run.mu_box_upper),
            ));
        }
        Ok(BuiltExperiment {
            instance,
            graph,
            schedule,
        })
    }

    #[allow(clippy::type_complexity)]
    fn resolve_preset(
        &self,
    ) -> Result<Option<(DispatchInstance, DirectedGraph, StepSizeSchedule)>, ConfigError> {
        match self.problem.preset.as_deref() {
            None => Ok(None),
            Some("fig1") => {
                let explicit = [
                    ("problem.a", self.problem.a.is_some()),
                    ("problem.b", self.problem.b.is_some()),
                    ("problem.c", self.problem.c.is_some()),
                    ("problem.demand", self.problem.demand.is_some()),
                    ("problem.p_min", self.problem.p_min.is_some()),
                    ("problem.p_max", self.problem.p_max.is_some()),
                ];
                for (field, present) in explicit {
                    if present {
                        return Err(invalid(field, "cannot be combined with problem.preset"));
                    }
                }
                Ok(Some(fig1_fixture()))
            }
            Some(other) => Err(invalid(
                "problem.preset",
                format!("unknown preset {other:?}; the only preset is \"fig1\""),
            )),
        }
    }

    fn build_instance(&self) -> Result<DispatchInstance, ConfigError> {
        let p = &self.problem;
        let (Some(a), Some(b), Some(c), Some(demand), Some(p_min), Some(p_max)) = (
            p.a.clone(),
            p.b.clone(),
            p.c.clone(),
            p.demand,
            p.p_min.clone(),
            p.p_max.clone(),
        ) else {
            return Err(invalid(
                "problem",
                "without a preset, all of a, b, c, demand, p_min, p_max are required",
            ));
        };
        DispatchInstance::new(a, b, c, demand, p_min, p_max)
            .map_err(|e| invalid("problem", e.to_string()))
    }

    fn build_graph(&self, section: &GraphSection, n_problem: usize) -> Result<DirectedGraph, ConfigError> {
        if section.n != n_problem {
            return Err(invalid(
                "graph.n",
                format!("{} vertices for {n_problem} generators", section.n),
            ));
        }
        let needs = |field: &str, ok: bool| -> Result<(), ConfigError> {
            if ok {
                Ok(())
            } else {
                Err(invalid(
                    field,
                    format!("required when graph.kind = {:?}", section.kind),
                ))
            }
        };
        let graph = match section.kind.as_str() {
            "edges" => {
                needs("graph.edges", section.edges.is_some())?;
                let edges = section.edges.as_ref().unwrap();
                DirectedGraph::new(section.n, edges)
                    .map_err(|e| invalid("graph.edges", e.to_string()))?
            }
            "ring" => DirectedGraph::ring(section.n),
            "complete" => DirectedGraph::complete(section.n),
            "random" => {
                needs("graph.seed", section.seed.is_some())?;
                let prob = section.extra_edge_prob.unwrap_or(0.3);
                if !(0.0..=1.0).contains(&prob) {
                    return Err(invalid(
                        "graph.extra_edge_prob",
                        format!("must lie in [0, 1], got {prob}"),
                    ));
                }
                DirectedGraph::random_strongly_connected(section.n, prob, section.seed.unwrap())
            }
            other => {
                return Err(invalid(
                    "graph.kind",
                    format!("unknown kind {other:?}; expected edges, ring, complete, or random"),
                ))
            }
        };
        if !graph.is_strongly_connected() {
            return Err(invalid(
                "graph.edges",
                "graph is not strongly connected; information cannot reach every agent",
            ));
        }
        Ok(graph)
    }
}

/// Parses and fully validates a config file (see [`ExperimentConfig::load`]).
pub fn load_config(path: &Path) -> Result<ExperimentConfig, ConfigError> {
    ExperimentConfig::load(path)
}

fn build_schedule(section: &ScheduleSection) -> Result<StepSizeSchedule, ConfigError> {
    if !(section.c > 0.0 && section.c.is_finite()) {
        return Err(invalid(
            "schedule.c",
            format!("must be positive and finite, got {}", section.c),
        ));
    }
    if !(section.gamma > 0.5 && section.gamma <= 1.0) {
        return Err(invalid(
            "schedule.gamma",
            format!("must lie in (0.5, 1], got {}", section.gamma),
        ));
    }
    StepSizeSchedule::new(section.c, section.gamma)
        .map_err(|e| invalid("schedule", e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn write_temp(contents: &str) -> tempfile::NamedTempFile {
        use std::io::Write;
        let mut file = tempfile::NamedTempFile::new().unwrap();
        file.write_all(contents.as_bytes()).unwrap();
        file
    }

    #[test]
    fn fig1_preset_file_matches_the_builtin_fixture() {
        let file = write_temp(
            "[problem]\npreset = \"fig1\"\n\n[run]\niterations = 4000\n",
        );
        let config = ExperimentConfig::load(file.path()).unwrap();
        let built = config.build().unwrap();
        let (inst, graph, schedule) = fig1_fixture();
        assert_eq!(built.instance, inst);
        assert_eq!(built.graph.edges(), graph.edges());
        assert_abs_diff_eq!(built.schedule.c(), schedule.c());
        assert_abs_diff_eq!(built.schedule.gamma(), schedule.gamma());
        assert_eq!(config.run.trace_stride, 10);
        assert_abs_diff_eq!(config.run.mu_box_upper, DEFAULT_MU_UPPER);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let file = write_temp(
            "[problem]\npreset = \"fig1\"\nturbo = true\n\n[run]\niterations = 10\n",
        );
        match ExperimentConfig::load(file.path()) {
            Err(ConfigError::Schema(e)) => {
                assert!(e.to_string().contains("turbo"), "message: {e}");
            }
            other => panic!("expected a schema error, got {other:?}"),
        }
    }

    #[test]
    fn out_of_range_gamma_names_the_field() {
        let file = write_temp(
            "[problem]\npreset = \"fig1\"\n\n[schedule]\nc = 15.0\ngamma = 1.2\n\n[run]\niterations = 10\n",
        );
        match ExperimentConfig::load(file.path()) {
            Err(ConfigError::Invalid { field, reason }) => {
                assert_eq!(field, "schedule.gamma");
                assert!(reason.contains("1.2"));
            }
            other => panic!("expected an invalid-field error, got {other:?}"),
        }
    }

    #[test]
    fn disconnected_graph_is_rejected() {
        // Two vertices with a single arc: strongly connected fails.
        let file = write_temp(concat!(
            "[problem]\na = [1.0, 1.0]\nb = [0.0, 0.0]\nc = [0.0, 0.0]\n",
            "demand = 2.0\np_min = [0.0, 0.0]\np_max = [5.0, 5.0]\n\n",
            "[graph]\nkind = \"edges\"\nn = 2\nedges = [[1, 2]]\n\n",
            "[schedule]\nc = 1.0\ngamma = 0.8\n\n[run]\niterations = 10\n",
        ));
        match ExperimentConfig::load(file.path()) {
            Err(ConfigError::Invalid { field, reason }) => {
                assert_eq!(field, "graph.edges");
                assert!(reason.contains("strongly connected"));
            }
            other => panic!("expected an invalid-field error, got {other:?}"),
        }
    }

    #[test]
    fn missing_file_reports_an_io_error() {
        let missing = Path::new("/definitely/not/here.toml");
        match ExperimentConfig::load(missing) {
            Err(ConfigError::Io { path, .. }) => assert_eq!(path, missing),
            other => panic!("expected an io error, got {other:?}"),
        }
    }

    #[test]
    fn graph_size_must_match_the_generator_count() {
        let file = write_temp(concat!(
            "[problem]\npreset = \"fig1\"\n\n",
            "[graph]\nkind = \"ring\"\nn = 5\n\n[run]\niterations = 10\n",
        ));
        match ExperimentConfig::load(file.path()) {
            Err(ConfigError::Invalid { field, .. }) => assert_eq!(field, "graph.n"),
            other => panic!("expected an invalid-field error, got {other:?}"),
        }
    }

    #[test]
    fn save_then_load_reproduces_the_config() {
        let dir = tempfile::tempdir().unwrap();
        let mut config = ExperimentConfig::fig1(dir.path());
        config.run.seed = 17;
        let path = dir.path().join("experiment.toml");
        config.save(&path).unwrap();
        let reloaded = ExperimentConfig::load(&path).unwrap();
        assert_eq!(reloaded, config);
    }

    #[test]
    fn explicit_coefficients_round_trip_too() {
        let dir = tempfile::tempdir().unwrap();
        let config = ExperimentConfig {
            problem: ProblemSection {
                preset: None,
                a: Some(vec![0.5, 0.25]),
                b: Some(vec![1.0, -2.0]),
                c: Some(vec![0.0, 3.0]),
                demand: Some(4.0),
                p_min: Some(vec![0.0, 0.0]),
                p_max: Some(vec![10.0, 10.0]),
            },
            graph: Some(GraphSection {
                kind: "ring".to_string(),
                n: 2,
                edges: None,
                extra_edge_prob: None,
                seed: None,
            }),
            schedule: Some(ScheduleSection { c: 2.0, gamma: 0.75 }),
            run: RunSection {
                iterations: 50,
                trace_stride: 5,
                mu_box_upper: 40.0,
                seed: 3,
            },
            output: OutputSection::default(),
        };
        let path = dir.path().join("experiment.toml");
        config.save(&path).unwrap();
        assert_eq!(ExperimentConfig::load(&path).unwrap(), config);
    }
}
