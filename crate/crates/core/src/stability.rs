//! c-stability over finite kernel sets.
//!
//! A word `w = (i_1, ..., i_d)` over the alphabet `Q` acts on the right:
//! `mu_w = mu0 Q_{i_1} ... Q_{i_d}`. Words are traversed depth first in
//! lexicographic order, so every prefix is visited before its extensions.

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chain::{classify_structure, compose, stationary_measure, Kernel, KernelSequence, Measure};
use crate::error::{Error, Result};
use crate::linalg::max_row_tv;
use crate::random::substream;
use crate::report::{ext_real, fmt_real};

pub const DEFAULT_NODE_BUDGET: u64 = 1 << 20;

/// Witness lists in criterion reports are truncated to this many words.
pub const MAX_WITNESSES: usize = 256;

/// Lexicographic enumeration of all words of length `0..=depth`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WordEnumeration {
    pub alphabet_size: usize,
    pub depth: usize,
}

impl WordEnumeration {
    pub fn new(alphabet_size: usize, depth: usize) -> Self {
        WordEnumeration { alphabet_size, depth }
    }

    /// Number of tree nodes, the empty word included.
    pub fn node_count(&self) -> u128 {
        let q = self.alphabet_size as u128;
        let mut total: u128 = 0;
        let mut level: u128 = 1;
        for _ in 0..=self.depth {
            total = total.saturating_add(level);
            level = level.saturating_mul(q);
        }
        total
    }

    pub fn check_budget(&self, budget: u64) -> Result<()> {
        let needed = self.node_count();
        if needed > budget as u128 {
            return Err(Error::BudgetExceeded { needed, budget });
        }
        Ok(())
    }

    pub fn iter(&self) -> WordIter {
        WordIter { alphabet_size: self.alphabet_size, depth: self.depth, current: None }
    }
}

/// Depth-first (pre-order) word iterator; yields the empty word first.
#[derive(Debug, Clone)]
pub struct WordIter {
    alphabet_size: usize,
    depth: usize,
    current: Option<Vec<usize>>,
}

impl Iterator for WordIter {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        let next = match self.current.take() {
            None => Some(Vec::new()),
            Some(mut w) => {
                if w.len() < self.depth && self.alphabet_size > 0 {
                    w.push(0);
                    Some(w)
                } else {
                    loop {
                        match w.pop() {
                            None => break None,
                            Some(last) if last + 1 < self.alphabet_size => {
                                w.push(last + 1);
                                break Some(w);
                            }
                            Some(_) => {}
                        }
                    }
                }
            }
        };
        self.current = next.clone();
        next
    }
}

fn validate_alphabet(q_set: &[Kernel]) -> Result<usize> {
    let first = q_set.first().ok_or_else(|| Error::InvalidParameter("kernel set is empty".into()))?;
    let n = first.size();
    for k in q_set {
        if k.space() != first.space() {
            return Err(Error::DimensionMismatch { expected: n, found: k.size() });
        }
    }
    Ok(n)
}

fn validate_measure(m: &Measure, n: usize) -> Result<()> {
    if m.size() != n {
        return Err(Error::DimensionMismatch { expected: n, found: m.size() });
    }
    m.require_positive(0.0)
}

/// Row-major copies of the kernels, for the inner loops.
fn flat_kernels(q_set: &[Kernel]) -> Vec<Vec<f64>> {
    q_set.iter().map(|k| k.rows().into_iter().flatten().collect()).collect()
}

fn step_into(mu: &[f64], k: &[f64], out: &mut [f64]) {
    let n = mu.len();
    out.iter_mut().for_each(|v| *v = 0.0);
    for (x, &m) in mu.iter().enumerate() {
        if m == 0.0 {
            continue;
        }
        let row = &k[x * n..(x + 1) * n];
        for (o, &kxy) in out.iter_mut().zip(row) {
            *o += m * kxy;
        }
    }
}

/// `max_x |ln(mu(x)/pi(x))|` and the state attaining it (first on ties).
fn log_ratio(mu: &[f64], log_pi: &[f64]) -> (f64, usize) {
    let mut best = (f64::NEG_INFINITY, 0);
    for (x, (&m, &lp)) in mu.iter().zip(log_pi).enumerate() {
        let r = if m > 0.0 { (m.ln() - lp).abs() } else { f64::INFINITY };
        if r > best.0 {
            best = (r, x);
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq)]
struct Extreme {
    log_ratio: f64,
    word: Vec<usize>,
    state: usize,
}

impl Extreme {
    fn none() -> Self {
        Extreme { log_ratio: f64::NEG_INFINITY, word: Vec::new(), state: 0 }
    }

    /// Keeps `self` on ties, so the earlier word wins when merging in order.
    fn absorb(&mut self, other: Extreme) {
        if other.log_ratio > self.log_ratio {
            *self = other;
        }
    }
}

/// Depth-first walk below a fixed prefix, recording the extreme of each depth.
struct EnvelopeWalk<'a> {
    kernels: &'a [Vec<f64>],
    log_pi: &'a [f64],
    depth: usize,
    buffers: Vec<Vec<f64>>,
    word: Vec<usize>,
    per_depth: Vec<Extreme>,
}

impl<'a> EnvelopeWalk<'a> {
    fn new(kernels: &'a [Vec<f64>], log_pi: &'a [f64], depth: usize) -> Self {
        let n = log_pi.len();
        EnvelopeWalk {
            kernels,
            log_pi,
            depth,
            buffers: vec![vec![0.0; n]; depth + 1],
            word: Vec::with_capacity(depth),
            per_depth: vec![Extreme::none(); depth + 1],
        }
    }

    /// Visits the node reached by `letter` from the measure at `buffers[level - 1]`.
    fn visit(&mut self, level: usize, letter: usize) {
        let (head, tail) = self.buffers.split_at_mut(level);
        step_into(&head[level - 1], &self.kernels[letter], &mut tail[0]);
        self.word.push(letter);
        let (r, x) = log_ratio(&self.buffers[level], self.log_pi);
        if r > self.per_depth[level].log_ratio {
            self.per_depth[level] = Extreme { log_ratio: r, word: self.word.clone(), state: x };
        }
        if level < self.depth {
            for next in 0..self.kernels.len() {
                self.visit(level + 1, next);
            }
        }
        self.word.pop();
    }
}

/// Exact envelope of `mu0` against `pi` over all words of length `<= depth`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub candidate_pi: Measure,
    pub mu0: Measure,
    pub depth: usize,
    /// `max_{|w| <= depth} max_x max(mu_w(x)/pi(x), pi(x)/mu_w(x))`.
    #[serde(with = "ext_real")]
    pub c_estimate: f64,
    #[serde(with = "ext_real")]
    pub log_c: f64,
    /// Alphabet indices of the word attaining `c_estimate`; the shortest such
    /// word, then the lexicographically first.
    pub witness_word: Vec<usize>,
    pub witness_state: usize,
    /// `c` restricted to words of length `<= d`, for `d = 0..=depth`.
    #[serde(with = "ext_real::vec")]
    pub per_depth: Vec<f64>,
    pub nodes: u64,
    /// Whether `c_estimate <= threshold`, when a threshold was supplied.
    pub threshold: Option<f64>,
    pub criterion_pass: Option<bool>,
}

impl StabilityReport {
    pub const CSV_HEADER: &'static str = "depth,c_estimate";

    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for (d, c) in self.per_depth.iter().enumerate() {
            out.push_str(&format!("{d},{}\n", fmt_real(*c)));
        }
        out
    }

    /// Records whether the envelope stays within `threshold`.
    pub fn with_threshold(mut self, threshold: f64) -> Self {
        self.threshold = Some(threshold);
        self.criterion_pass = Some(self.c_estimate <= threshold);
        self
    }
}

/// Exact word-tree envelope with the default node budget.
pub fn ratio_envelope(q_set: &[Kernel], mu0: &Measure, pi: &Measure, depth: usize) -> Result<StabilityReport> {
    ratio_envelope_with_budget(q_set, mu0, pi, depth, DEFAULT_NODE_BUDGET)
}

pub fn ratio_envelope_with_budget(
    q_set: &[Kernel],
    mu0: &Measure,
    pi: &Measure,
    depth: usize,
    budget: u64,
) -> Result<StabilityReport> {
    let n = validate_alphabet(q_set)?;
    validate_measure(mu0, n)?;
    validate_measure(pi, n)?;
    if depth == 0 {
        return Err(Error::InvalidParameter("depth must be at least 1".into()));
    }
    let enumeration = WordEnumeration::new(q_set.len(), depth);
    enumeration.check_budget(budget)?;

    let kernels = flat_kernels(q_set);
    let log_pi: Vec<f64> = pi.weights().iter().map(|p| p.ln()).collect();

    let branches: Vec<Vec<Extreme>> = (0..q_set.len())
        .into_par_iter()
        .map(|letter| {
            let mut walk = EnvelopeWalk::new(&kernels, &log_pi, depth);
            walk.buffers[0].copy_from_slice(mu0.weights());
            walk.visit(1, letter);
            walk.per_depth
        })
        .collect();

    let (root_ratio, root_state) = log_ratio(mu0.weights(), &log_pi);
    let mut per_depth = vec![Extreme { log_ratio: root_ratio, word: Vec::new(), state: root_state }];
    for d in 1..=depth {
        let mut best = Extreme::none();
        for branch in &branches {
            best.absorb(branch[d].clone());
        }
        per_depth.push(best);
    }

    let mut overall = Extreme::none();
    let mut cumulative = Vec::with_capacity(depth + 1);
    for e in per_depth {
        overall.absorb(e);
        cumulative.push(overall.log_ratio.exp());
    }
    Ok(StabilityReport {
        candidate_pi: pi.clone(),
        mu0: mu0.clone(),
        depth,
        c_estimate: overall.log_ratio.exp(),
        log_c: overall.log_ratio,
        witness_word: overall.word,
        witness_state: overall.state,
        per_depth: cumulative,
        nodes: enumeration.node_count() as u64,
        threshold: None,
        criterion_pass: None,
    })
}

/// Lower bound on the envelope from `samples` uniformly random words of
/// length `depth` (all their prefixes are evaluated). For depths beyond the
/// exact budget.
pub fn sampled_envelope(
    q_set: &[Kernel],
    mu0: &Measure,
    pi: &Measure,
    depth: usize,
    samples: usize,
    seed: u64,
) -> Result<StabilityReport> {
    use rand::Rng;
    let n = validate_alphabet(q_set)?;
    validate_measure(mu0, n)?;
    validate_measure(pi, n)?;
    let kernels = flat_kernels(q_set);
    let log_pi: Vec<f64> = pi.weights().iter().map(|p| p.ln()).collect();

    let (r0, x0) = log_ratio(mu0.weights(), &log_pi);
    let mut per_depth = vec![Extreme { log_ratio: r0, word: Vec::new(), state: x0 }];
    per_depth.resize(depth + 1, Extreme::none());
    let mut rng = substream(seed, 0);
    let mut mu = vec![0.0; n];
    let mut next = vec![0.0; n];
    for _ in 0..samples {
        mu.copy_from_slice(mu0.weights());
        let mut word = Vec::with_capacity(depth);
        for d in 1..=depth {
            let letter = rng.random_range(0..q_set.len());
            word.push(letter);
            step_into(&mu, &kernels[letter], &mut next);
            std::mem::swap(&mut mu, &mut next);
            let (r, x) = log_ratio(&mu, &log_pi);
            if r > per_depth[d].log_ratio {
                per_depth[d] = Extreme { log_ratio: r, word: word.clone(), state: x };
            }
        }
    }
    let mut overall = Extreme::none();
    let mut cumulative = Vec::with_capacity(depth + 1);
    for e in per_depth {
        overall.absorb(e);
        cumulative.push(overall.log_ratio.exp());
    }
    Ok(StabilityReport {
        candidate_pi: pi.clone(),
        mu0: mu0.clone(),
        depth,
        c_estimate: overall.log_ratio.exp(),
        log_c: overall.log_ratio,
        witness_word: overall.word,
        witness_state: overall.state,
        per_depth: cumulative,
        nodes: (samples * depth + 1) as u64,
        threshold: None,
        criterion_pass: None,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "reason", rename_all = "snake_case")]
pub enum CriterionFailure {
    /// The product has several recurrent classes or a periodic one.
    NotSia,
    /// SIA, but transient states leave the invariant measure without full support.
    NotIrreducible,
    /// `max_x |ln(pi_P(x)/pi(x))| > ln c`.
    OutsideBand {
        #[serde(with = "ext_real")]
        log_ratio: f64,
    },
}

impl CriterionFailure {
    fn severity(&self) -> f64 {
        match self {
            CriterionFailure::OutsideBand { log_ratio } => *log_ratio,
            _ => f64::INFINITY,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionWitness {
    pub word: Vec<usize>,
    pub failure: CriterionFailure,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionReport {
    pub pass: bool,
    pub depth: usize,
    pub c: f64,
    pub words_checked: u64,
    pub failures: u64,
    /// The first `MAX_WITNESSES` failing words in traversal order.
    pub witnesses: Vec<CriterionWitness>,
    pub first_witness: Option<CriterionWitness>,
    /// The failing word farthest outside the band (first on ties).
    pub worst_witness: Option<CriterionWitness>,
}

struct CriterionWalk<'a> {
    q_set: &'a [Kernel],
    log_pi: &'a [f64],
    log_c: f64,
    depth: usize,
    word: Vec<usize>,
    checked: u64,
    failures: u64,
    witnesses: Vec<CriterionWitness>,
    worst: Option<CriterionWitness>,
}

impl CriterionWalk<'_> {
    fn visit(&mut self, product: &Kernel) -> Result<()> {
        self.checked += 1;
        if let Some(failure) = self.check(product)? {
            self.failures += 1;
            let witness = CriterionWitness { word: self.word.clone(), failure };
            let worse = self.worst.as_ref().is_none_or(|w| witness.failure.severity() > w.failure.severity());
            if worse {
                self.worst = Some(witness.clone());
            }
            if self.witnesses.len() < MAX_WITNESSES {
                self.witnesses.push(witness);
            }
        }
        if self.word.len() < self.depth {
            for (letter, k) in self.q_set.iter().enumerate() {
                let next = compose(product, k)?;
                self.word.push(letter);
                self.visit(&next)?;
                self.word.pop();
            }
        }
        Ok(())
    }

    fn check(&self, product: &Kernel) -> Result<Option<CriterionFailure>> {
        let structure = classify_structure(product);
        if !structure.sia {
            return Ok(Some(CriterionFailure::NotSia));
        }
        if !structure.transient.is_empty() {
            return Ok(Some(CriterionFailure::NotIrreducible));
        }
        let pi_p = stationary_measure(product)?;
        let (r, _) = log_ratio(pi_p.weights(), self.log_pi);
        Ok((r > self.log_c).then_some(CriterionFailure::OutsideBand { log_ratio: r }))
    }
}

/// Checks, for every word of length `1..=depth`, that the product is SIA and
/// irreducible with invariant measure inside `[pi/c, c pi]`.
pub fn product_invariant_criterion(q_set: &[Kernel], pi: &Measure, depth: usize, c: f64) -> Result<CriterionReport> {
    product_invariant_criterion_with_budget(q_set, pi, depth, c, DEFAULT_NODE_BUDGET)
}

pub fn product_invariant_criterion_with_budget(
    q_set: &[Kernel],
    pi: &Measure,
    depth: usize,
    c: f64,
    budget: u64,
) -> Result<CriterionReport> {
    let n = validate_alphabet(q_set)?;
    validate_measure(pi, n)?;
    if depth == 0 {
        return Err(Error::InvalidParameter("depth must be at least 1".into()));
    }
    if !(c >= 1.0) {
        return Err(Error::InvalidParameter(format!("band constant c = {c} must be at least 1")));
    }
    WordEnumeration::new(q_set.len(), depth).check_budget(budget)?;
    let log_pi: Vec<f64> = pi.weights().iter().map(|p| p.ln()).collect();
    let log_c = c.ln();

    let branches: Vec<CriterionWalk> = (0..q_set.len())
        .into_par_iter()
        .map(|letter| {
            let mut walk = CriterionWalk {
                q_set,
                log_pi: &log_pi,
                log_c,
                depth,
                word: vec![letter],
                checked: 0,
                failures: 0,
                witnesses: Vec::new(),
                worst: None,
            };
            walk.visit(&q_set[letter]).map(|_| walk)
        })
        .collect::<Result<_>>()?;

    let mut report = CriterionReport {
        pass: true,
        depth,
        c,
        words_checked: 0,
        failures: 0,
        witnesses: Vec::new(),
        first_witness: None,
        worst_witness: None,
    };
    for walk in branches {
        report.words_checked += walk.checked;
        report.failures += walk.failures;
        for w in walk.witnesses {
            if report.witnesses.len() < MAX_WITNESSES {
                report.witnesses.push(w);
            }
        }
        if let Some(w) = walk.worst {
            let worse = report.worst_witness.as_ref().is_none_or(|cur| w.failure.severity() > cur.failure.severity());
            if worse {
                report.worst_witness = Some(w);
            }
        }
    }
    report.pass = report.failures == 0;
    report.first_witness = report.witnesses.first().cloned();
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchOptions {
    pub seed: u64,
    pub budget: u64,
    /// Cap on envelope evaluations per start.
    pub max_evaluations: usize,
    pub initial_step: f64,
    pub min_step: f64,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions { seed: 0, budget: DEFAULT_NODE_BUDGET, max_evaluations: 400, initial_step: 0.5, min_step: 1e-4 }
    }
}

/// Result of the heuristic stable-measure search. A large `c` is evidence,
/// not proof, of instability.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StableSearch {
    pub heuristic: bool,
    pub mu0: Measure,
    #[serde(with = "ext_real")]
    pub c: f64,
    /// Labels of the starting points, in the order tried.
    pub starts: Vec<String>,
    /// Index into `starts` of the start that produced `mu0`.
    pub best_start: usize,
    pub evaluations: usize,
}

/// Sequential envelope that stops as soon as the running maximum exceeds `cutoff`.
fn log_envelope(kernels: &[Vec<f64>], mu0: &[f64], log_pi: &[f64], depth: usize, cutoff: f64) -> f64 {
    fn walk(
        kernels: &[Vec<f64>],
        log_pi: &[f64],
        buffers: &mut [Vec<f64>],
        level: usize,
        depth: usize,
        best: &mut f64,
        cutoff: f64,
    ) {
        for k in kernels {
            let (head, tail) = buffers.split_at_mut(level);
            step_into(&head[level - 1], k, &mut tail[0]);
            let (r, _) = log_ratio(&tail[0], log_pi);
            *best = best.max(r);
            if *best > cutoff {
                return;
            }
            if level < depth {
                walk(kernels, log_pi, buffers, level + 1, depth, best, cutoff);
                if *best > cutoff {
                    return;
                }
            }
        }
    }
    let mut best = log_ratio(mu0, log_pi).0;
    if best > cutoff {
        return best;
    }
    let mut buffers = vec![vec![0.0; mu0.len()]; depth + 1];
    buffers[0].copy_from_slice(mu0);
    walk(kernels, log_pi, &mut buffers, 1, depth, &mut best, cutoff);
    best
}

/// Derivative-free minimization of `F(mu0) = max_{|w| <= depth, x} |ln(mu_w(x)/pi(x))|`
/// by multiplicative coordinate moves, started from `pi`, the uniform measure
/// and the average of the kernels' stationary measures.
pub fn search_stable_measure(q_set: &[Kernel], pi: &Measure, depth: usize, options: &SearchOptions) -> Result<StableSearch> {
    let n = validate_alphabet(q_set)?;
    validate_measure(pi, n)?;
    if depth == 0 {
        return Err(Error::InvalidParameter("depth must be at least 1".into()));
    }
    WordEnumeration::new(q_set.len(), depth).check_budget(options.budget)?;
    let kernels = flat_kernels(q_set);
    let log_pi: Vec<f64> = pi.weights().iter().map(|p| p.ln()).collect();

    let mut starts: Vec<(String, Vec<f64>)> = vec![
        ("pi".into(), pi.weights().to_vec()),
        ("uniform".into(), vec![1.0 / n as f64; n]),
    ];
    let stationaries: Vec<Measure> = q_set.iter().filter_map(|k| stationary_measure(k).ok()).collect();
    if !stationaries.is_empty() {
        let mut avg = vec![0.0; n];
        for s in &stationaries {
            for (a, v) in avg.iter_mut().zip(s.weights()) {
                *a += v / stationaries.len() as f64;
            }
        }
        if avg.iter().all(|v| *v > 0.0) {
            starts.push(("stationary_average".into(), avg));
        }
    }

    let results: Vec<(Vec<f64>, f64, usize)> = starts
        .par_iter()
        .enumerate()
        .map(|(i, (_, start))| {
            let mut rng = substream(options.seed, i as u64);
            let mut mu = start.clone();
            let mut f = log_envelope(&kernels, &mu, &log_pi, depth, f64::INFINITY);
            let mut evaluations = 1;
            let mut step = options.initial_step;
            let mut coords: Vec<usize> = (0..n).collect();
            while step >= options.min_step && evaluations < options.max_evaluations && f > 0.0 {
                coords.shuffle(&mut rng);
                let mut improved = false;
                'sweep: for &x in &coords {
                    for sign in [1.0, -1.0] {
                        let mut cand = mu.clone();
                        cand[x] *= (sign * step).exp();
                        let total: f64 = cand.iter().sum();
                        cand.iter_mut().for_each(|v| *v = (*v / total).max(f64::MIN_POSITIVE));
                        let fc = log_envelope(&kernels, &cand, &log_pi, depth, f);
                        evaluations += 1;
                        if fc < f {
                            mu = cand;
                            f = fc;
                            improved = true;
                            break 'sweep;
                        }
                        if evaluations >= options.max_evaluations {
                            break 'sweep;
                        }
                    }
                }
                if !improved {
                    step *= 0.5;
                }
            }
            (mu, f, evaluations)
        })
        .collect();

    let mut best_start = 0;
    for (i, r) in results.iter().enumerate() {
        if r.1 < results[best_start].1 {
            best_start = i;
        }
    }
    let evaluations = results.iter().map(|r| r.2).sum();
    let (mu, f, _) = results.into_iter().nth(best_start).expect("at least one start");
    Ok(StableSearch {
        heuristic: true,
        mu0: Measure::new(pi.space().clone(), mu)?,
        c: f.exp(),
        starts: starts.into_iter().map(|(label, _)| label).collect(),
        best_start,
        evaluations,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TwoPointClass {
    Stable,
    Unstable,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TwoPointReport {
    pub class: TwoPointClass,
    /// `(i, j)` with `Q_i != Q_j`, `Q_i(0,0) = 0` and `Q_j(1,1) = 0`.
    pub witness: Option<(usize, usize)>,
}

/// Classifies a set of 2x2 kernels: unstable exactly when some ordered pair of
/// distinct kernels has `Q_i(0,0) = 0` and `Q_j(1,1) = 0`.
pub fn two_point_classify(q_set: &[Kernel]) -> Result<TwoPointReport> {
    for k in q_set {
        if k.size() != 2 {
            return Err(Error::DimensionMismatch { expected: 2, found: k.size() });
        }
    }
    for (i, qi) in q_set.iter().enumerate() {
        if qi.get(0, 0) != 0.0 {
            continue;
        }
        for (j, qj) in q_set.iter().enumerate() {
            if i != j && qj.get(1, 1) == 0.0 && qi.max_abs_diff(qj) > 0.0 {
                return Ok(TwoPointReport { class: TwoPointClass::Unstable, witness: Some((i, j)) });
            }
        }
    }
    Ok(TwoPointReport { class: TwoPointClass::Stable, witness: None })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitRowReport {
    pub n: i64,
    pub m_min: i64,
    /// Row average of `K_{m_min+1} ... K_n`.
    pub row: Measure,
    /// Largest total variation between two rows of the deepest product.
    pub diag: f64,
    /// `(m, max row TV of K_{m+1} ... K_n)` for `m = n-1` down to `m_min`.
    pub spread: Vec<(i64, f64)>,
    /// Set when an explicit list was reused cyclically below index 1.
    pub explicit_reuse: bool,
}

/// Approximates the limit row of `K_{m+1} ... K_n` as `m` decreases to `m_min`.
pub fn limit_row_estimate(seq: &KernelSequence, n: i64, m_min: i64) -> Result<LimitRowReport> {
    if m_min >= n {
        return Err(Error::InvalidRange { m: m_min, n });
    }
    let mut acc = seq.kernel(n)?.matrix().clone();
    let mut spread = vec![(n - 1, max_row_tv(&acc))];
    for m in (m_min..n - 1).rev() {
        acc = seq.kernel(m + 1)?.matrix() * acc;
        spread.push((m, max_row_tv(&acc)));
    }
    let size = acc.nrows();
    let row: Vec<f64> = (0..size).map(|y| acc.column(y).sum() / size as f64).collect();
    Ok(LimitRowReport {
        n,
        m_min,
        row: Measure::from_unnormalized(seq.space().clone(), row)?,
        diag: spread.last().map(|s| s.1).unwrap_or(0.0),
        spread,
        explicit_reuse: !seq.extends_backward_naturally() && m_min < 0,
    })
}
