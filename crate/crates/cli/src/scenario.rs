//! Scenario configuration: what to generate, which analyses to run, and how
//! to check the results.

use std::path::PathBuf;

use mclab_core::chain::KernelSequence;
use mclab_core::merging::Metric;
use mclab_core::zoo::SmallExample;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Largest state space that may be written inline in a scenario file.
pub const MAX_INLINE_STATES: usize = 64;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("scenario schema error at line {line}, column {column}: {message}")]
    Schema { line: usize, column: usize, message: String },
    #[error("invalid scenario field `{field}`: {message}")]
    Field { field: String, message: String },
    #[error("unknown built-in scenario {0:?}")]
    UnknownBuiltin(String),
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

fn field(field: &str, message: impl Into<String>) -> ScenarioError {
    ScenarioError::Field { field: field.to_string(), message: message.into() }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Invariant violations and failed checks make the run fail.
    #[default]
    Assert,
    /// Everything is recorded, nothing fails the run.
    Report,
}

/// `base + per_n N + per_n2 N^2` for a state-space parameter `N`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Horizon {
    #[serde(default)]
    pub base: usize,
    #[serde(default)]
    pub per_n: usize,
    #[serde(default)]
    pub per_n2: usize,
}

impl Horizon {
    pub fn at(&self, n: usize) -> usize {
        self.base + self.per_n * n + self.per_n2 * n * n
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PairRule {
    /// `K_1 = Q1, K_2 = Q2, ...` (first kernel of the pair first).
    Alternating,
    Iid { prob_first: f64 },
}

/// Where the kernels come from. `N` below is the grid size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum Generator {
    /// Every step an independent constant-rate birth-death chain on
    /// `{0, ..., N}` with `p/q` uniform in `[a, a_max]`.
    RandomConstantRate { a: f64, a_max: f64 },
    /// Constant-rate chains `(p, q, r)` and `(q, p, r)` on `{0, ..., N}`, alternating.
    MirroredPair { p: f64, q: f64, r: f64 },
    /// Every step an independent random birth-death chain with rates and
    /// reversible measure in the band class.
    BandBirthDeath,
    /// The perturbed stick pair on `{0, ..., N}`, `N` odd.
    StickPair { p: f64, q: f64, r: f64, eta1: f64, eta2: f64, rule: PairRule },
    /// Lazy stick on `{0, ..., N}` with fresh log-uniform weights in `[1, b]`
    /// every step; with `common_measure` the weights are Metropolis-adjusted
    /// so that every kernel has the degree measure as reversible measure.
    WeightedLazyStick { b: f64, common_measure: bool },
    /// A random `degree`-regular graph on `N` vertices (drawn once per grid
    /// point) with fresh weights in `[1, b]` every step.
    WeightedRegular { b: f64, degree: usize },
    /// One of the small fixed examples, in parity order `Q1, Q0, Q1, ...`;
    /// grid sizes are ignored.
    SmallExample { example: SmallExample },
    /// A sequence written in the file; grid sizes are ignored.
    Inline { sequence: KernelSequence },
    /// A sequence JSON file, for state spaces too large to inline.
    File { path: PathBuf },
}

impl Generator {
    pub fn label(&self) -> &'static str {
        match self {
            Generator::RandomConstantRate { .. } => "random_constant_rate",
            Generator::MirroredPair { .. } => "mirrored_pair",
            Generator::BandBirthDeath => "band_birth_death",
            Generator::StickPair { .. } => "stick_pair",
            Generator::WeightedLazyStick { .. } => "weighted_lazy_stick",
            Generator::WeightedRegular { .. } => "weighted_regular",
            Generator::SmallExample { .. } => "small_example",
            Generator::Inline { .. } => "inline",
            Generator::File { .. } => "file",
        }
    }

    /// Whether the family draws from a fixed finite kernel set.
    pub fn has_kernel_set(&self) -> bool {
        matches!(
            self,
            Generator::MirroredPair { .. }
                | Generator::StickPair { .. }
                | Generator::SmallExample { .. }
                | Generator::Inline { .. }
                | Generator::File { .. }
        )
    }

    pub fn is_graph_family(&self) -> bool {
        matches!(self, Generator::WeightedLazyStick { .. } | Generator::WeightedRegular { .. })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialMeasure {
    #[default]
    Uniform,
    /// Degree measure of the underlying graph (graph families only).
    Degree,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "analysis", rename_all = "snake_case", deny_unknown_fields)]
pub enum Analysis {
    /// Exact merging distances and the merging time of `metric` at `epsilon`.
    Merging {
        epsilon: f64,
        metric: Metric,
        horizon: Horizon,
        #[serde(default = "default_true")]
        stop_at_epsilon: bool,
        #[serde(default)]
        keep_trajectory: bool,
    },
    /// Singular-value bounds against exact distances.
    Bounds {
        horizon: Horizon,
        #[serde(default)]
        mu0: InitialMeasure,
    },
    /// Word-tree envelope of the kernel set with `mu0 = pi = uniform`.
    Stability {
        depth: Horizon,
        #[serde(default)]
        criterion_c: Option<f64>,
        #[serde(default)]
        criterion_depth: Option<usize>,
        #[serde(default)]
        search: bool,
    },
    /// Comparison of the first weighted graph with its simple random walk.
    Spectral { b: f64, horizon: Horizon },
    /// `max_n max_x max(mu_n/mu_0, mu_0/mu_n)` along the sequence itself,
    /// started from the degree measure (graph families) or uniform.
    PathBand { horizon: Horizon },
}

fn default_true() -> bool {
    true
}

impl Analysis {
    pub fn kind(&self) -> &'static str {
        match self {
            Analysis::Merging { .. } => "merging",
            Analysis::Bounds { .. } => "bounds",
            Analysis::Stability { .. } => "stability",
            Analysis::Spectral { .. } => "spectral",
            Analysis::PathBand { .. } => "path_band",
        }
    }
}

/// Ratio of per-size medians `stat(2N) / stat(N)` for a row quantity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScalingCheck {
    /// Index into `analyses`.
    pub analysis: usize,
    pub quantity: String,
    #[serde(default)]
    pub min_ratio: Option<f64>,
    #[serde(default)]
    pub max_ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default)]
    pub csv: Option<PathBuf>,
    #[serde(default)]
    pub json: Option<PathBuf>,
    #[serde(default)]
    pub plotdata: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    #[serde(default)]
    pub description: String,
    #[serde(default)]
    pub mode: Mode,
    pub generator: Generator,
    /// Grid of state-space parameters `N`.
    pub sizes: Vec<usize>,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
    pub analyses: Vec<Analysis>,
    #[serde(default)]
    pub scaling_checks: Vec<ScalingCheck>,
    #[serde(default)]
    pub output: OutputSpec,
    #[serde(default)]
    pub budget_nodes: Option<u64>,
}

fn default_trials() -> usize {
    1
}

impl Scenario {
    /// Parses and validates a scenario from the exact bytes of its file.
    pub fn from_bytes(bytes: &[u8]) -> Result<Self, ScenarioError> {
        let scenario: Scenario = serde_json::from_slice(bytes).map_err(|e| ScenarioError::Schema {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        if self.name.trim().is_empty() {
            return Err(field("name", "must not be empty"));
        }
        if self.sizes.is_empty() {
            return Err(field("sizes", "at least one size is required"));
        }
        if self.trials == 0 {
            return Err(field("trials", "must be at least 1"));
        }
        if self.analyses.is_empty() {
            return Err(field("analyses", "at least one analysis is required"));
        }
        self.validate_generator()?;
        for (i, a) in self.analyses.iter().enumerate() {
            let name = format!("analyses[{i}]");
            match a {
                Analysis::Merging { epsilon, metric, .. } => {
                    let ok = match metric {
                        Metric::Tv => *epsilon > 0.0 && *epsilon < 1.0,
                        Metric::Relsup => *epsilon > 0.0,
                    };
                    if !ok {
                        return Err(field(&format!("{name}.epsilon"), format!("{epsilon} is out of range")));
                    }
                }
                Analysis::Stability { criterion_c, .. } => {
                    if !self.generator.has_kernel_set() {
                        return Err(field(&name, "stability needs a family with a finite kernel set"));
                    }
                    if let Some(c) = criterion_c {
                        if !(*c >= 1.0) {
                            return Err(field(&format!("{name}.criterion_c"), "must be at least 1"));
                        }
                    }
                }
                Analysis::Spectral { b, .. } => {
                    if !self.generator.is_graph_family() {
                        return Err(field(&name, "spectral analysis needs a weighted graph family"));
                    }
                    if !(*b >= 1.0) {
                        return Err(field(&format!("{name}.b"), "must be at least 1"));
                    }
                }
                Analysis::Bounds { mu0, .. } => {
                    if *mu0 == InitialMeasure::Degree && !self.generator.is_graph_family() {
                        return Err(field(&format!("{name}.mu0"), "degree measure needs a graph family"));
                    }
                }
                Analysis::PathBand { .. } => {}
            }
        }
        for (i, c) in self.scaling_checks.iter().enumerate() {
            if c.analysis >= self.analyses.len() {
                return Err(field(&format!("scaling_checks[{i}].analysis"), "no such analysis"));
            }
        }
        Ok(())
    }

    fn validate_generator(&self) -> Result<(), ScenarioError> {
        let simplex = |p: f64, q: f64, r: f64| {
            [p, q, r].iter().all(|v| v.is_finite() && *v >= 0.0) && (p + q + r - 1.0).abs() <= 1e-12
        };
        match &self.generator {
            Generator::RandomConstantRate { a, a_max } => {
                if !(*a > 0.0 && a_max >= a) {
                    return Err(field("generator", "need 0 < a <= a_max"));
                }
            }
            Generator::MirroredPair { p, q, r } => {
                if !simplex(*p, *q, *r) {
                    return Err(field("generator", "(p, q, r) must be a probability vector"));
                }
            }
            Generator::StickPair { p, q, r, rule, .. } => {
                if !simplex(*p, *q, *r) {
                    return Err(field("generator", "(p, q, r) must be a probability vector"));
                }
                if let Some(&even) = self.sizes.iter().find(|n| **n % 2 == 0 || **n < 3) {
                    return Err(field("sizes", format!("stick pairs need odd N >= 3, got {even}")));
                }
                if let PairRule::Iid { prob_first } = rule {
                    if !(0.0..=1.0).contains(prob_first) {
                        return Err(field("generator.rule.prob_first", "must lie in [0, 1]"));
                    }
                }
            }
            Generator::WeightedLazyStick { b, .. } | Generator::WeightedRegular { b, .. } => {
                if !(*b >= 1.0) {
                    return Err(field("generator.b", "must be at least 1"));
                }
            }
            Generator::Inline { sequence } => {
                if sequence.size() > MAX_INLINE_STATES {
                    return Err(field(
                        "generator.sequence",
                        format!("{} states; use a file reference above {MAX_INLINE_STATES}", sequence.size()),
                    ));
                }
            }
            Generator::BandBirthDeath | Generator::SmallExample { .. } | Generator::File { .. } => {}
        }
        if matches!(self.generator, Generator::WeightedRegular { .. }) && self.sizes.iter().any(|n| *n < 4) {
            return Err(field("sizes", "regular graphs need at least 4 vertices"));
        }
        Ok(())
    }
}
