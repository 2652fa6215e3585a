//! Executes a scenario over its grid of sizes and trials.
//!
//! Grid point `g` (size index `s`, trial `t`, `g = s * trials + t`) draws all
//! of its randomness from `substream(seed, g)`, so results do not depend on
//! the schedule. Every analysis rebuilds the point's sequence from that
//! stream and therefore sees the same kernels.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use mclab_core::chain::{Kernel, KernelSequence, Measure, StateSpace};
use mclab_core::merging::{MergingAnalysis, Metric};
use mclab_core::random::{substream, Rng64};
use mclab_core::singular::thsing_bounds;
use mclab_core::spectral::{comparison_check, srw_spectrum};
use mclab_core::stability::{
    product_invariant_criterion_with_budget, ratio_envelope_with_budget, search_stable_measure, SearchOptions,
    DEFAULT_NODE_BUDGET,
};
use mclab_core::zoo::{
    constant_rate_bd, graph_kernel, lazy_stick, metropolis_reweight, parity_sequence, perturbed_stick_pair,
    random_band_bd, random_constant_rates, random_regular, random_weights, small_example, WeightedGraph,
};
use rand::Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::results::{sha256_hex, Artifact, Check, ResultSet, Row, Series};
use crate::scenario::{Analysis, Generator, InitialMeasure, Mode, PairRule, Scenario, ScenarioError};

/// Slack used for every domination and inequality check.
pub const CHECK_SLACK: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error("grid point {grid_index} (N = {size}, trial {trial}), {analysis}: {source}")]
    Analysis { grid_index: usize, size: usize, trial: usize, analysis: String, source: mclab_core::Error },
    #[error("cannot load sequence file {path}: {message}")]
    SequenceFile { path: PathBuf, message: String },
    #[error("thread pool: {0}")]
    Threads(String),
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub seed: Option<u64>,
    pub budget_nodes: Option<u64>,
    /// Worker threads; `None` uses the global pool.
    pub threads: Option<usize>,
    /// Runs grid points one after another on the calling thread.
    pub serial: bool,
    /// Directory against which relative sequence-file paths are resolved.
    pub base_dir: Option<PathBuf>,
}

/// Reads, validates and runs the scenario file at `path`.
pub fn run_scenario(path: &Path, options: &RunOptions) -> Result<ResultSet, RunError> {
    let bytes = std::fs::read(path).map_err(|source| ScenarioError::Io { path: path.to_path_buf(), source })?;
    let mut options = options.clone();
    if options.base_dir.is_none() {
        options.base_dir = path.parent().map(Path::to_path_buf);
    }
    run_bytes(&bytes, &options)
}

/// Runs a scenario given as the exact bytes of its configuration.
pub fn run_bytes(bytes: &[u8], options: &RunOptions) -> Result<ResultSet, RunError> {
    let scenario = Scenario::from_bytes(bytes)?;
    run(&scenario, &sha256_hex(bytes), options)
}

/// Canonical configuration bytes of an in-memory scenario.
pub fn canonical_bytes(scenario: &Scenario) -> Vec<u8> {
    let mut text = serde_json::to_string_pretty(scenario).expect("scenarios serialize");
    text.push('\n');
    text.into_bytes()
}

#[derive(Debug, Clone, Copy)]
struct GridPoint {
    index: usize,
    size: usize,
    trial: usize,
}

#[derive(Debug, Default)]
struct PointOutput {
    rows: Vec<Row>,
    series: Vec<Series>,
    artifacts: Vec<Artifact>,
    /// `(analysis label, invariant name, violations)`.
    invariants: Vec<(String, &'static str, usize)>,
}

pub fn run(scenario: &Scenario, scenario_hash: &str, options: &RunOptions) -> Result<ResultSet, RunError> {
    scenario.validate()?;
    let seed = options.seed.unwrap_or(scenario.seed);
    let budget = options.budget_nodes.or(scenario.budget_nodes).unwrap_or(DEFAULT_NODE_BUDGET);
    let file_sequence = match &scenario.generator {
        Generator::File { path } => Some(load_sequence(path, options.base_dir.as_deref())?),
        _ => None,
    };
    let ctx = Context { scenario, seed, budget, file_sequence };

    let grid: Vec<GridPoint> = scenario
        .sizes
        .iter()
        .enumerate()
        .flat_map(|(s, &size)| {
            (0..scenario.trials).map(move |trial| GridPoint { index: s * scenario.trials + trial, size, trial })
        })
        .collect();

    let outputs: Vec<Result<PointOutput, RunError>> = if options.serial {
        grid.iter().map(|p| ctx.run_point(*p)).collect()
    } else if let Some(threads) = options.threads {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| RunError::Threads(e.to_string()))?;
        pool.install(|| grid.par_iter().map(|p| ctx.run_point(*p)).collect())
    } else {
        grid.par_iter().map(|p| ctx.run_point(*p)).collect()
    };

    let mut result = ResultSet::empty(&scenario.name, scenario_hash, seed, scenario.mode);
    if let Some(s) = options.seed {
        result.overrides.insert("seed".into(), s.to_string());
    }
    if let Some(b) = options.budget_nodes {
        result.overrides.insert("budget_nodes".into(), b.to_string());
    }
    let mut invariants: BTreeMap<(String, &'static str), (usize, usize)> = BTreeMap::new();
    for out in outputs {
        let out = out?;
        result.rows.extend(out.rows);
        result.series.extend(out.series);
        result.artifacts.extend(out.artifacts);
        for (analysis, name, violations) in out.invariants {
            let entry = invariants.entry((analysis, name)).or_default();
            entry.0 += violations;
            entry.1 += 1;
        }
    }
    result.summarize();

    let asserted = scenario.mode == Mode::Assert;
    for ((analysis, name), (violations, points)) in invariants {
        result.checks.push(Check {
            name: format!("{analysis} {name}"),
            asserted,
            passed: violations == 0,
            detail: format!("{violations} violations over {points} grid points"),
        });
    }
    for sc in &scenario.scaling_checks {
        let label = analysis_label(sc.analysis, &scenario.analyses[sc.analysis]);
        for &n in &scenario.sizes {
            if !scenario.sizes.contains(&(2 * n)) {
                continue;
            }
            let (Some(lo), Some(hi)) = (result.stat(&label, &sc.quantity, n), result.stat(&label, &sc.quantity, 2 * n))
            else {
                continue;
            };
            let ratio = hi.median / lo.median;
            let passed = ratio.is_finite()
                && sc.min_ratio.is_none_or(|m| ratio >= m)
                && sc.max_ratio.is_none_or(|m| ratio <= m);
            result.checks.push(Check {
                name: format!("{label} {} median ratio N = {} / N = {n}", sc.quantity, 2 * n),
                asserted,
                passed,
                detail: format!(
                    "medians {} and {}, ratio {ratio:.4}, required [{}, {}]",
                    lo.median,
                    hi.median,
                    sc.min_ratio.map_or("-inf".to_string(), |m| m.to_string()),
                    sc.max_ratio.map_or("inf".to_string(), |m| m.to_string()),
                ),
            });
        }
    }
    Ok(result)
}

pub fn analysis_label(index: usize, analysis: &Analysis) -> String {
    format!("{index}:{}", analysis.kind())
}

fn load_sequence(path: &Path, base: Option<&Path>) -> Result<KernelSequence, RunError> {
    let full = match base {
        Some(dir) if path.is_relative() => dir.join(path),
        _ => path.to_path_buf(),
    };
    let err = |message: String| RunError::SequenceFile { path: full.clone(), message };
    let bytes = std::fs::read(&full).map_err(|e| err(e.to_string()))?;
    serde_json::from_slice(&bytes).map_err(|e| err(e.to_string()))
}

struct Context<'a> {
    scenario: &'a Scenario,
    seed: u64,
    budget: u64,
    file_sequence: Option<KernelSequence>,
}

/// The kernels of one grid point, produced in order `K_1, K_2, ...`.
struct Instance {
    space: StateSpace,
    source: Source,
    /// Reference graph of graph families (unit weights).
    base: Option<WeightedGraph>,
}

enum Source {
    Stored(KernelSequence),
    RandomRates { n: usize, a: f64, a_max: f64, rng: Rng64 },
    Band { n: usize, rng: Rng64 },
    Weighted { base: WeightedGraph, b: f64, target: Option<Measure>, rng: Rng64 },
}

impl Instance {
    fn kernel(&mut self, i: usize) -> mclab_core::Result<Kernel> {
        match &mut self.source {
            Source::Stored(seq) => seq.kernel(i as i64).cloned(),
            Source::RandomRates { n, a, a_max, rng } => {
                let (p, q, r) = random_constant_rates(rng, *a, *a_max);
                constant_rate_bd(*n, p, q, r)
            }
            Source::Band { n, rng } => Ok(random_band_bd(rng, *n)?.kernel),
            Source::Weighted { .. } => Ok(graph_kernel(&self.next_graph()?.expect("graph family"))?.0),
        }
    }

    /// Next weighted graph of a graph family.
    fn next_graph(&mut self) -> mclab_core::Result<Option<WeightedGraph>> {
        let Source::Weighted { base, b, target, rng } = &mut self.source else {
            return Ok(None);
        };
        let g = random_weights(base, *b, rng)?;
        Ok(Some(match target {
            Some(pi) => metropolis_reweight(&g, pi)?.graph,
            None => g,
        }))
    }

    fn kernel_set(&self) -> Option<Vec<Kernel>> {
        match &self.source {
            Source::Stored(seq) => Some(seq.alphabet().to_vec()),
            _ => None,
        }
    }

    fn materialize(&mut self, n: usize) -> mclab_core::Result<KernelSequence> {
        let kernels = (1..=n).map(|i| self.kernel(i)).collect::<mclab_core::Result<Vec<_>>>()?;
        KernelSequence::explicit(kernels)
    }

    fn initial_measure(&self, kind: InitialMeasure) -> mclab_core::Result<Measure> {
        match (kind, &self.base) {
            (InitialMeasure::Degree, Some(g)) => g.degree_measure(),
            _ => Ok(Measure::uniform(self.space.clone())),
        }
    }
}

impl Context<'_> {
    fn instance(&self, point: GridPoint) -> mclab_core::Result<Instance> {
        let mut rng = substream(self.seed, point.index as u64);
        let n = point.size;
        let (source, base) = match &self.scenario.generator {
            Generator::RandomConstantRate { a, a_max } => {
                (Source::RandomRates { n, a: *a, a_max: *a_max, rng }, None)
            }
            Generator::BandBirthDeath => (Source::Band { n, rng }, None),
            Generator::MirroredPair { p, q, r } => {
                let seq = KernelSequence::alternating(constant_rate_bd(n, *p, *q, *r)?, constant_rate_bd(n, *q, *p, *r)?)?;
                (Source::Stored(seq), None)
            }
            Generator::StickPair { p, q, r, eta1, eta2, rule } => {
                let (q1, q2) = perturbed_stick_pair(n, *p, *q, *r, *eta1, *eta2)?;
                let seq = match rule {
                    PairRule::Alternating => KernelSequence::alternating(q1, q2)?,
                    PairRule::Iid { prob_first } => {
                        KernelSequence::iid(vec![q1, q2], vec![*prob_first, 1.0 - prob_first], rng.random())?
                    }
                };
                (Source::Stored(seq), None)
            }
            Generator::WeightedLazyStick { b, common_measure } => {
                let base = lazy_stick(n)?;
                let target = if *common_measure { Some(base.degree_measure()?) } else { None };
                (Source::Weighted { base: base.clone(), b: *b, target, rng }, Some(base))
            }
            Generator::WeightedRegular { b, degree } => {
                let base = random_regular(n, *degree, true, &mut rng)?;
                (Source::Weighted { base: base.clone(), b: *b, target: None, rng }, Some(base))
            }
            Generator::SmallExample { example } => (Source::Stored(parity_sequence(&small_example(example)?)?), None),
            Generator::Inline { sequence } => (Source::Stored(sequence.clone()), None),
            Generator::File { .. } => {
                (Source::Stored(self.file_sequence.clone().expect("file sequences are loaded before running")), None)
            }
        };
        let space = match (&source, &base) {
            (Source::Stored(seq), _) => seq.space().clone(),
            (_, Some(g)) => g.space.clone(),
            _ => StateSpace::new(n + 1)?,
        };
        Ok(Instance { space, source, base })
    }

    fn run_point(&self, point: GridPoint) -> Result<PointOutput, RunError> {
        let mut out = PointOutput::default();
        for (i, analysis) in self.scenario.analyses.iter().enumerate() {
            let label = analysis_label(i, analysis);
            self.run_analysis(point, &label, analysis, &mut out).map_err(|source| RunError::Analysis {
                grid_index: point.index,
                size: point.size,
                trial: point.trial,
                analysis: label.clone(),
                source,
            })?;
        }
        Ok(out)
    }

    fn run_analysis(
        &self,
        point: GridPoint,
        label: &str,
        analysis: &Analysis,
        out: &mut PointOutput,
    ) -> mclab_core::Result<()> {
        let family = self.scenario.generator.label();
        let push = |out: &mut PointOutput, quantity: &str, value: f64| {
            out.rows.push(Row {
                grid_index: point.index,
                family: family.to_string(),
                size: point.size,
                trial: point.trial,
                analysis: label.to_string(),
                quantity: quantity.to_string(),
                value,
            });
        };
        let series_label = |what: &str| format!("{label} N={} trial={} {what}", point.size, point.trial);
        let mut inst = self.instance(point)?;
        let n = point.size;

        match analysis {
            Analysis::Merging { epsilon, metric, horizon, stop_at_epsilon, keep_trajectory } => {
                let space = inst.space.clone();
                let report = MergingAnalysis::new(*epsilon, *metric, horizon.at(n))
                    .stop_when_reached(*stop_at_epsilon)
                    .run_generated(&space, |i| inst.kernel(i))?;
                let time = report.time().map_or(f64::INFINITY, |t| t as f64);
                let nf = n as f64;
                push(out, "merging_time", time);
                push(out, "time_over_n", time / nf);
                push(out, "time_over_n2", time / (nf * nf));
                let trajectory = match metric {
                    Metric::Tv => &report.tv_trajectory,
                    Metric::Relsup => &report.relsup_trajectory,
                };
                push(out, "final_distance", *trajectory.last().expect("trajectory starts at n = 0"));
                if let Some(g) = &inst.base {
                    // Merging time in units of the relaxation scale of the unweighted walk.
                    let gap = srw_spectrum(g)?.gap;
                    let scale = ((g.size() as f64).ln() + (1.0 / epsilon).ln().max(0.0)) / gap;
                    push(out, "time_over_relaxation", time / scale);
                }
                if *keep_trajectory {
                    out.series.push(Series {
                        label: series_label(match metric {
                            Metric::Tv => "tv",
                            Metric::Relsup => "relsup",
                        }),
                        x: (0..trajectory.len()).map(|t| t as f64).collect(),
                        y: trajectory.clone(),
                    });
                }
            }
            Analysis::Bounds { horizon, mu0 } => {
                let mu0 = inst.initial_measure(*mu0)?;
                let seq = inst.materialize(horizon.at(n))?;
                let report = thsing_bounds(&seq, &mu0, horizon.at(n))?;
                let violations = report.violations(CHECK_SLACK);
                push(out, "violations", violations as f64);
                push(out, "min_gap", report.min_gap());
                push(out, "sigma_product_final", *report.sigma_product.last().expect("product starts at 1"));
                out.invariants.push((label.to_string(), "bound domination", violations));
            }
            Analysis::Stability { depth, criterion_c, criterion_depth, search } => {
                let q = inst.kernel_set().expect("validated: family has a kernel set");
                let u = Measure::uniform(inst.space.clone());
                let depth = depth.at(n);
                let report = ratio_envelope_with_budget(&q, &u, &u, depth, self.budget)?;
                push(out, "c_estimate", report.c_estimate);
                push(out, "log_c", report.log_c);
                push(out, "nodes", report.nodes as f64);
                out.series.push(Series {
                    label: series_label("envelope"),
                    x: (0..report.per_depth.len()).map(|d| d as f64).collect(),
                    y: report.per_depth.clone(),
                });
                let mut artifact = serde_json::json!({ "envelope": report });
                if let Some(c) = criterion_c {
                    let crit =
                        product_invariant_criterion_with_budget(&q, &u, criterion_depth.unwrap_or(depth), *c, self.budget)?;
                    push(out, "criterion_pass", if crit.pass { 1.0 } else { 0.0 });
                    push(out, "criterion_failures", crit.failures as f64);
                    artifact["criterion"] = serde_json::to_value(&crit)?;
                }
                if *search {
                    let options = SearchOptions {
                        seed: self.seed ^ point.index as u64,
                        budget: self.budget,
                        ..SearchOptions::default()
                    };
                    let s = search_stable_measure(&q, &u, depth, &options)?;
                    push(out, "search_c", s.c);
                    artifact["search"] = serde_json::to_value(&s)?;
                }
                out.artifacts.push(Artifact { grid_index: point.index, analysis: label.to_string(), report: artifact });
            }
            Analysis::Spectral { b, horizon } => {
                let g = inst.next_graph()?.expect("validated: graph family");
                let r = comparison_check(&g, *b, horizon.at(n))?;
                let violations = r.bound_violations(CHECK_SLACK);
                push(out, "weight_ratio", r.weight_ratio);
                push(out, "sigma_srw", r.srw.sigma);
                push(out, "sigma_weighted", r.weighted.sigma);
                push(out, "gap_srw", r.srw.gap);
                push(out, "gap_weighted", r.weighted.gap);
                push(out, "gap_lower_bound", r.gap_lower_bound);
                push(out, "gap_inequality", if r.gap_inequality_holds { 1.0 } else { 0.0 });
                push(out, "bound_violations", violations as f64);
                let times: Vec<f64> = r.times.iter().map(|t| *t as f64).collect();
                out.series.push(Series { label: series_label("bound"), x: times.clone(), y: r.bound.clone() });
                out.series.push(Series { label: series_label("exact_max"), x: times, y: r.exact_max.clone() });
                out.invariants.push((label.to_string(), "gap inequality", usize::from(!r.gap_inequality_holds)));
                out.invariants.push((label.to_string(), "bound domination", violations));
            }
            Analysis::PathBand { horizon } => {
                let mu0 = inst.initial_measure(InitialMeasure::Degree)?;
                let band = |mu: &Measure| {
                    (0..mu.size())
                        .map(|x| {
                            let s = mu.get(x) / mu0.get(x);
                            s.max(1.0 / s)
                        })
                        .fold(1.0, f64::max)
                };
                let mut mu = mu0.clone();
                let mut path = vec![1.0];
                for i in 1..=horizon.at(n) {
                    mu = mu.step(&inst.kernel(i)?)?;
                    path.push(band(&mu));
                }
                push(out, "c_path", path.iter().copied().fold(1.0, f64::max));
                push(out, "c_final", *path.last().expect("path starts at n = 0"));
                out.series.push(Series {
                    label: series_label("band"),
                    x: (0..path.len()).map(|t| t as f64).collect(),
                    y: path,
                });
            }
        }
        Ok(())
    }
}
