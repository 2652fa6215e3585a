use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use mclab::emit::{csv_string, json_string, plotdata_string};
use mclab::runner::canonical_bytes;
use mclab::{builtin, run, run_bytes, RunOptions, BUILTIN_NAMES};
use mclab_core::chain::{Kernel, KernelSequence, Measure};
use mclab_core::merging::{MergingAnalysis, Metric};
use mclab_core::random::substream;
use mclab_core::singular::thsing_bounds;
use mclab_core::spectral::comparison_check;
use mclab_core::stability::{
    product_invariant_criterion_with_budget, ratio_envelope_with_budget, sampled_envelope, search_stable_measure,
    SearchOptions, DEFAULT_NODE_BUDGET,
};
use mclab_core::zoo::{
    constant_rate_bd, lazy_stick, parity_sequence, perturbed_stick_pair, random_band_bd, random_regular, small_example,
    SmallExample, WeightedGraph,
};

#[derive(Parser)]
#[command(name = "mclab", version, about = "Merging, stability and spectral experiments for time-inhomogeneous Markov chains")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Seed for every random choice; overrides a scenario's own seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output file (single reports) or directory (`run`); stdout when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for scenario grids.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Largest word tree the stability analyses may enumerate.
    #[arg(long, global = true)]
    budget_nodes: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Kernels, sequences and graphs from the example families.
    Zoo {
        #[command(subcommand)]
        action: ZooAction,
    },
    /// Exact merging distances and merging time of a sequence.
    Merge {
        /// Sequence JSON (or a single kernel, repeated).
        input: PathBuf,
        #[arg(long, default_value_t = 0.25)]
        epsilon: f64,
        #[arg(long, default_value = "tv")]
        metric: String,
        #[arg(long, default_value_t = 1000)]
        horizon: usize,
        #[arg(long, default_value_t = 1)]
        block: usize,
        /// Keep computing after the merging time is reached.
        #[arg(long)]
        full: bool,
        #[arg(long, value_enum, default_value_t = ReportFormat::Csv)]
        format: ReportFormat,
    },
    /// Singular-value bounds against exact distances.
    Bound {
        input: PathBuf,
        #[arg(long, default_value_t = 100)]
        horizon: usize,
        /// Initial measure JSON; uniform when omitted.
        #[arg(long)]
        mu0: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = ReportFormat::Csv)]
        format: ReportFormat,
    },
    /// Word-tree envelope of the kernels of a sequence against a measure.
    Stability {
        input: PathBuf,
        #[arg(long)]
        depth: usize,
        /// Reference measure JSON; uniform when omitted.
        #[arg(long)]
        pi: Option<PathBuf>,
        /// Starting measure JSON; the reference measure when omitted.
        #[arg(long)]
        mu0: Option<PathBuf>,
        /// Also check the product-invariant criterion with this constant.
        #[arg(long)]
        criterion: Option<f64>,
        /// Also search for a starting measure with a small envelope.
        #[arg(long)]
        search: bool,
        /// Sample this many random words instead of enumerating the tree.
        #[arg(long)]
        sampled: Option<usize>,
    },
    /// Weighted graph against its simple random walk.
    Spectral {
        /// Weighted graph JSON.
        input: PathBuf,
        #[arg(long)]
        b: f64,
        #[arg(long, default_value_t = 1000)]
        horizon: usize,
        #[arg(long, value_enum, default_value_t = ReportFormat::Csv)]
        format: ReportFormat,
    },
    /// Run a scenario file or a built-in scenario.
    Run {
        /// Scenario JSON file.
        scenario: Option<PathBuf>,
        #[arg(long, conflicts_with = "scenario")]
        builtin: Option<String>,
        /// Run grid points sequentially on one thread.
        #[arg(long)]
        serial: bool,
    },
    /// List the built-in scenarios or print one as JSON.
    Scenarios { name: Option<String> },
}

#[derive(Subcommand)]
enum ZooAction {
    /// Print a family member as JSON. Parameters are given as `--param key=value`.
    Emit {
        /// constant_rate_bd, mirrored_pair, stick_pair, band_bd, lazy_stick,
        /// random_regular or small_example.
        name: String,
        #[arg(long = "param", value_parser = parse_param)]
        params: Vec<(String, String)>,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ReportFormat {
    Csv,
    Json,
}

fn parse_param(s: &str) -> std::result::Result<(String, String), String> {
    let (k, v) = s.split_once('=').ok_or_else(|| format!("expected key=value, got {s:?}"))?;
    Ok((k.trim().to_string(), v.trim().to_string()))
}

struct Params(BTreeMap<String, String>);

impl Params {
    fn get<T: std::str::FromStr>(&self, key: &str, default: Option<T>) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        match self.0.get(key) {
            Some(v) => v.parse().map_err(|e| anyhow!("parameter {key}={v}: {e}")),
            None => default.ok_or_else(|| anyhow!("missing parameter {key}")),
        }
    }
}

fn write_output(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => {
            if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
                std::fs::create_dir_all(parent)?;
            }
            std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            match stdout.write_all(text.as_bytes()).and_then(|()| stdout.flush()) {
                Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e.into()),
                _ => Ok(()),
            }
        }
    }
}

fn to_json<T: serde::Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_slice(&bytes).with_context(|| format!("parsing {}", path.display()))
}

/// A sequence file, or a single kernel read as a constant sequence.
fn read_sequence(path: &Path) -> Result<KernelSequence> {
    let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    match serde_json::from_slice::<KernelSequence>(&bytes) {
        Ok(seq) => Ok(seq),
        Err(seq_err) => match serde_json::from_slice::<Kernel>(&bytes) {
            Ok(k) => Ok(KernelSequence::constant(k)),
            Err(_) => Err(anyhow!("{}: not a sequence or kernel: {seq_err}", path.display())),
        },
    }
}

fn zoo_emit(name: &str, params: Params, seed: u64) -> Result<String> {
    let n: usize = params.get("n", Some(8))?;
    match name {
        "constant_rate_bd" => to_json(&constant_rate_bd(
            n,
            params.get("p", Some(0.4))?,
            params.get("q", Some(0.3))?,
            params.get("r", Some(0.3))?,
        )?),
        "mirrored_pair" => {
            let (p, q, r) = (params.get("p", Some(0.6))?, params.get("q", Some(0.4))?, params.get("r", Some(0.0))?);
            to_json(&KernelSequence::alternating(constant_rate_bd(n, p, q, r)?, constant_rate_bd(n, q, p, r)?)?)
        }
        "stick_pair" => {
            let (q1, q2) = perturbed_stick_pair(
                params.get("n", Some(5))?,
                params.get("p", Some(0.6))?,
                params.get("q", Some(0.4))?,
                params.get("r", Some(0.0))?,
                params.get("eta1", Some(0.0))?,
                params.get("eta2", Some(0.0))?,
            )?;
            to_json(&KernelSequence::alternating(q1, q2)?)
        }
        "band_bd" => to_json(&random_band_bd(&mut substream(seed, 0), n)?),
        "lazy_stick" => to_json(&lazy_stick(n)?),
        "random_regular" => {
            let g: WeightedGraph =
                random_regular(params.get("n", Some(16))?, params.get("degree", Some(3))?, params.get("loops", Some(true))?, &mut substream(seed, 0))?;
            to_json(&g)
        }
        "small_example" => {
            let which: String = params.get("example", None)?;
            let mut example: SmallExample = which.parse()?;
            if let SmallExample::TwoPoint { a, b } = &mut example {
                *a = params.get("a", Some(*a))?;
                *b = params.get("b", Some(*b))?;
            }
            to_json(&parity_sequence(&small_example(&example)?)?)
        }
        other => bail!("unknown zoo family {other:?}"),
    }
}

fn run_command(cli: Cli) -> Result<ExitCode> {
    let g = cli.global;
    let seed = g.seed.unwrap_or(0);
    let budget = g.budget_nodes.unwrap_or(DEFAULT_NODE_BUDGET);
    let out = g.out.as_deref();
    match cli.command {
        Command::Zoo { action: ZooAction::Emit { name, params } } => {
            write_output(out, &zoo_emit(&name, Params(params.into_iter().collect()), seed)?)?;
        }
        Command::Merge { input, epsilon, metric, horizon, block, full, format } => {
            let seq = read_sequence(&input)?;
            let metric: Metric = metric.parse()?;
            let report = MergingAnalysis::new(epsilon, metric, horizon).block(block).stop_when_reached(!full).run(&seq)?;
            eprintln!("{}", report.summary_line());
            let text = match format {
                ReportFormat::Csv => report.to_csv(),
                ReportFormat::Json => to_json(&report)?,
            };
            write_output(out, &text)?;
        }
        Command::Bound { input, horizon, mu0, format } => {
            let seq = read_sequence(&input)?;
            let mu0 = match mu0 {
                Some(p) => read_json::<Measure>(&p)?,
                None => Measure::uniform(seq.space().clone()),
            };
            let report = thsing_bounds(&seq, &mu0, horizon)?;
            let violations = report.violations(mclab::runner::CHECK_SLACK);
            eprintln!("violations={violations} min_gap={}", report.min_gap());
            let text = match format {
                ReportFormat::Csv => report.to_csv(),
                ReportFormat::Json => to_json(&report)?,
            };
            write_output(out, &text)?;
            if violations > 0 {
                return Ok(ExitCode::FAILURE);
            }
        }
        Command::Stability { input, depth, pi, mu0, criterion, search, sampled } => {
            let seq = read_sequence(&input)?;
            let q = seq.alphabet().to_vec();
            let pi = match pi {
                Some(p) => read_json::<Measure>(&p)?,
                None => Measure::uniform(seq.space().clone()),
            };
            let mu0 = match mu0 {
                Some(p) => read_json::<Measure>(&p)?,
                None => pi.clone(),
            };
            let envelope = match sampled {
                Some(samples) => sampled_envelope(&q, &mu0, &pi, depth, samples, seed)?,
                None => ratio_envelope_with_budget(&q, &mu0, &pi, depth, budget)?,
            };
            let mut doc = serde_json::json!({ "envelope": envelope, "sampled": sampled.is_some() });
            if let Some(c) = criterion {
                doc["criterion"] = serde_json::to_value(product_invariant_criterion_with_budget(&q, &pi, depth, c, budget)?)?;
            }
            if search {
                let options = SearchOptions { seed, budget, ..SearchOptions::default() };
                doc["search"] = serde_json::to_value(search_stable_measure(&q, &pi, depth, &options)?)?;
            }
            write_output(out, &to_json(&doc)?)?;
        }
        Command::Spectral { input, b, horizon, format } => {
            let graph: WeightedGraph = read_json(&input)?;
            let report = comparison_check(&graph, b, horizon)?;
            let violations = report.bound_violations(mclab::runner::CHECK_SLACK);
            eprintln!(
                "sigma_srw={} sigma_weighted={} gap_inequality={} bound_violations={violations}",
                report.srw.sigma, report.weighted.sigma, report.gap_inequality_holds
            );
            let text = match format {
                ReportFormat::Csv => report.to_csv(),
                ReportFormat::Json => to_json(&report)?,
            };
            write_output(out, &text)?;
            if violations > 0 || !report.gap_inequality_holds {
                return Ok(ExitCode::FAILURE);
            }
        }
        Command::Run { scenario, builtin: name, serial } => {
            let options = RunOptions { seed: g.seed, budget_nodes: g.budget_nodes, threads: g.threads, serial, base_dir: None };
            let (spec, result) = match (scenario, name) {
                (Some(path), None) => {
                    let bytes = std::fs::read(&path).with_context(|| format!("reading {}", path.display()))?;
                    let options = RunOptions { base_dir: path.parent().map(Path::to_path_buf), ..options };
                    let spec = mclab::Scenario::from_bytes(&bytes)?;
                    (spec, run_bytes(&bytes, &options)?)
                }
                (None, Some(name)) => {
                    let spec = builtin(&name)?;
                    let hash = mclab::results::sha256_hex(&canonical_bytes(&spec));
                    let result = run(&spec, &hash, &options)?;
                    (spec, result)
                }
                _ => bail!("give a scenario file or --builtin NAME"),
            };
            let dir = out.map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from("results"));
            let csv = spec.output.csv.clone().unwrap_or_else(|| dir.join(format!("{}.csv", spec.name)));
            let json = spec.output.json.clone().unwrap_or_else(|| dir.join(format!("{}.json", spec.name)));
            let plot = spec.output.plotdata.clone().unwrap_or_else(|| dir.join(format!("{}.plot", spec.name)));
            write_output(Some(&csv), &csv_string(&result))?;
            write_output(Some(&json), &json_string(&result))?;
            write_output(Some(&plot), &plotdata_string(&result))?;
            for s in &result.summary {
                println!(
                    "{} {} N={} median={} max={} non_finite={}/{}",
                    s.analysis, s.quantity, s.size, s.median, s.max, s.non_finite, s.count
                );
            }
            for c in &result.checks {
                let verdict = match (c.passed, c.asserted) {
                    (true, _) => "ok",
                    (false, true) => "FAILED",
                    (false, false) => "failed (report only)",
                };
                println!("check {}: {verdict} ({})", c.name, c.detail);
            }
            println!("wrote {}, {} and {}", csv.display(), json.display(), plot.display());
            if !result.passed() {
                return Ok(ExitCode::FAILURE);
            }
        }
        Command::Scenarios { name: None } => {
            for name in BUILTIN_NAMES {
                println!("{name}: {}", builtin(name)?.description);
            }
        }
        Command::Scenarios { name: Some(name) } => {
            write_output(out, &String::from_utf8(canonical_bytes(&builtin(&name)?))?)?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run_command(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
