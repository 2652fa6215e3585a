//! Exact merging distances and times, with coupling-type upper bounds.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::chain::{compose_with_drift, contraction_coefficient, product, Kernel, KernelSequence, Order, StateSpace};
use crate::error::{Error, Result};
use crate::linalg::{max_row_tv, relsup_spread};
use crate::report::{ext_real, fmt_opt, fmt_real};

/// `sum eps_i` beyond which a Doeblin certificate is marked divergent; the
/// coupling bound is then at most `1e-6`.
pub const DOEBLIN_DIVERGENCE_THRESHOLD: f64 = 13.815510557964274;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Tv,
    Relsup,
}

impl std::str::FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tv" => Ok(Metric::Tv),
            "relsup" => Ok(Metric::Relsup),
            other => Err(Error::InvalidParameter(format!("unknown metric {other:?}"))),
        }
    }
}

/// Worst-case distances between the rows of `K_{0,n}`.
///
/// Both maxima over Dirac pairs equal the suprema over all pairs of initial
/// distributions (positive ones for `relsup`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairwiseDistances {
    pub tv: f64,
    #[serde(with = "ext_real")]
    pub relsup: f64,
}

impl PairwiseDistances {
    pub fn of(product: &DMatrix<f64>) -> Self {
        Self { tv: max_row_tv(product), relsup: relsup_spread(product) }
    }

    pub fn get(&self, metric: Metric) -> f64 {
        match metric {
            Metric::Tv => self.tv,
            Metric::Relsup => self.relsup,
        }
    }
}

impl PairwiseDistances {
    /// Distances of `product`, with `relsup = inf` whenever the exact zero
    /// pattern has a column mixing zero and positive entries, even if the
    /// positive ones underflowed.
    fn with_support(product: &DMatrix<f64>, support: &SupportPattern) -> Self {
        let mut d = Self::of(product);
        if support.has_mixed_column() {
            d.relsup = f64::INFINITY;
        }
        d
    }
}

pub fn pairwise_distances(seq: &KernelSequence, n: usize) -> Result<PairwiseDistances> {
    let k = product(seq, 0, n as i64, Order::Forward)?;
    let mut support = SupportPattern::identity(seq.size());
    for i in 1..=n as i64 {
        support = support.then(&SupportPattern::of(seq.kernel(i)?));
    }
    Ok(PairwiseDistances::with_support(k.matrix(), &support))
}

/// Positivity pattern of a product of kernels as one bitset per row.
#[derive(Debug, Clone, PartialEq)]
struct SupportPattern {
    n: usize,
    words: usize,
    bits: Vec<u64>,
}

impl SupportPattern {
    fn identity(n: usize) -> Self {
        let mut s = Self::empty(n);
        for x in 0..n {
            s.set(x, x);
        }
        s
    }

    fn empty(n: usize) -> Self {
        let words = n.div_ceil(64).max(1);
        Self { n, words, bits: vec![0; n * words] }
    }

    fn of(k: &Kernel) -> Self {
        let mut s = Self::empty(k.size());
        for x in 0..k.size() {
            for y in 0..k.size() {
                if k.get(x, y) > 0.0 {
                    s.set(x, y);
                }
            }
        }
        s
    }

    fn set(&mut self, x: usize, y: usize) {
        self.bits[x * self.words + y / 64] |= 1 << (y % 64);
    }

    fn row(&self, x: usize) -> &[u64] {
        &self.bits[x * self.words..(x + 1) * self.words]
    }

    /// Pattern of `self * k`.
    fn then(&self, k: &SupportPattern) -> Self {
        let mut out = Self::empty(self.n);
        for x in 0..self.n {
            for z in 0..self.n {
                if self.row(x)[z / 64] >> (z % 64) & 1 == 1 {
                    let (dst, src) = (x * self.words, z * self.words);
                    for w in 0..self.words {
                        out.bits[dst + w] |= k.bits[src + w];
                    }
                }
            }
        }
        out
    }

    fn has_mixed_column(&self) -> bool {
        (0..self.words).any(|w| {
            let (mut any, mut all) = (0u64, u64::MAX);
            for x in 0..self.n {
                any |= self.bits[x * self.words + w];
                all &= self.bits[x * self.words + w];
            }
            any & !all != 0
        })
    }
}

/// Distance trajectories, merging times and bound columns for one sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MergingReport {
    pub horizon: usize,
    pub epsilon: f64,
    pub metric: Metric,
    pub tv_trajectory: Vec<f64>,
    #[serde(with = "ext_real::vec")]
    pub relsup_trajectory: Vec<f64>,
    /// First `n` with tv distance `<= epsilon`; `None` when not reached.
    pub tv_time: Option<usize>,
    pub relsup_time: Option<usize>,
    /// `prod_{i <= n} (1 - eps_i)`, indexed by `n`.
    pub doeblin_bound: Vec<f64>,
    pub block: usize,
    /// Product of block contraction coefficients over complete blocks ending
    /// at or before `n`, indexed by `n`.
    pub block_bound: Vec<f64>,
    /// Largest row-sum drift removed while accumulating products.
    pub renormalization_drift: f64,
}

impl MergingReport {
    pub fn time(&self) -> Option<usize> {
        match self.metric {
            Metric::Tv => self.tv_time,
            Metric::Relsup => self.relsup_time,
        }
    }

    pub const CSV_HEADER: &'static str = "n,tv,relsup,doeblin_bound,block_bound";

    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for n in 0..=self.horizon {
            out.push_str(&format!(
                "{n},{},{},{},{}\n",
                fmt_real(self.tv_trajectory[n]),
                fmt_real(self.relsup_trajectory[n]),
                fmt_real(self.doeblin_bound[n]),
                fmt_real(self.block_bound[n]),
            ));
        }
        out
    }

    pub fn summary_line(&self) -> String {
        format!(
            "horizon={} epsilon={} tv_time={} relsup_time={}",
            self.horizon,
            self.epsilon,
            fmt_opt(self.tv_time),
            fmt_opt(self.relsup_time)
        )
    }
}

/// Configurable merging computation.
///
/// ```
/// use mclab_core::chain::{Kernel, KernelSequence};
/// use mclab_core::merging::{MergingAnalysis, Metric};
///
/// let k = Kernel::from_rows(&[vec![0.5, 0.5], vec![0.5, 0.5]]).unwrap();
/// let report = MergingAnalysis::new(0.25, Metric::Tv, 10)
///     .run(&KernelSequence::constant(k))
///     .unwrap();
/// assert_eq!(report.tv_time, Some(1));
/// ```
#[derive(Debug, Clone)]
pub struct MergingAnalysis {
    epsilon: f64,
    metric: Metric,
    n_max: usize,
    block: usize,
    stop_when_reached: bool,
}

impl MergingAnalysis {
    pub fn new(epsilon: f64, metric: Metric, n_max: usize) -> Self {
        Self { epsilon, metric, n_max, block: 1, stop_when_reached: false }
    }

    pub fn block(mut self, block: usize) -> Self {
        self.block = block;
        self
    }

    /// Truncate the trajectories at the first time the chosen metric reaches
    /// `epsilon`.
    pub fn stop_when_reached(mut self, stop: bool) -> Self {
        self.stop_when_reached = stop;
        self
    }

    pub fn run(&self, seq: &KernelSequence) -> Result<MergingReport> {
        self.run_generated(seq.space(), |n| seq.kernel(n as i64).cloned())
    }

    /// Same as [`Self::run`] with `K_n = kernel_at(n)`, called once for each
    /// `n = 1, 2, ...` in order. Suited to long random sequences that are
    /// never stored.
    pub fn run_generated<F>(&self, space: &StateSpace, mut kernel_at: F) -> Result<MergingReport>
    where
        F: FnMut(usize) -> Result<Kernel>,
    {
        match self.metric {
            Metric::Tv if !(self.epsilon > 0.0 && self.epsilon < 1.0) => {
                return Err(Error::InvalidParameter(format!("tv epsilon {} not in (0,1)", self.epsilon)))
            }
            Metric::Relsup if !(self.epsilon > 0.0) => {
                return Err(Error::InvalidParameter(format!("relsup epsilon {} not positive", self.epsilon)))
            }
            _ => {}
        }
        if self.n_max == 0 || self.block == 0 {
            return Err(Error::InvalidParameter("horizon and block must be at least 1".into()));
        }

        let mut acc = Kernel::identity(space.clone());
        let mut support = SupportPattern::identity(space.size());
        let mut block_acc = Kernel::identity(space.clone());
        let start = PairwiseDistances::of(acc.matrix());
        let mut tv = vec![start.tv];
        let mut relsup = vec![start.relsup];
        let mut doeblin = vec![1.0];
        let mut block_bound = vec![1.0];
        let mut drift: f64 = 0.0;
        let mut tv_time = (start.tv <= self.epsilon).then_some(0);
        let mut relsup_time = (start.relsup <= self.epsilon).then_some(0);

        let mut horizon = 0;
        for n in 1..=self.n_max {
            let k = &kernel_at(n)?;
            if k.space() != space {
                return Err(Error::DimensionMismatch { expected: space.size(), found: k.size() });
            }
            let (next, d) = compose_with_drift(&acc, k)?;
            acc = next;
            drift = drift.max(d);
            block_acc = compose_with_drift(&block_acc, k)?.0;
            let last_block = *block_bound.last().unwrap();
            if n % self.block == 0 {
                block_bound.push(last_block * contraction_coefficient(&block_acc));
                block_acc = Kernel::identity(space.clone());
            } else {
                block_bound.push(last_block);
            }
            doeblin.push(doeblin.last().unwrap() * (1.0 - doeblin_epsilon(k)));

            support = support.then(&SupportPattern::of(k));
            let dist = PairwiseDistances::with_support(acc.matrix(), &support);
            tv.push(dist.tv);
            relsup.push(dist.relsup);
            if tv_time.is_none() && dist.tv <= self.epsilon {
                tv_time = Some(n);
            }
            if relsup_time.is_none() && dist.relsup <= self.epsilon {
                relsup_time = Some(n);
            }
            horizon = n;
            let reached = match self.metric {
                Metric::Tv => tv_time.is_some(),
                Metric::Relsup => relsup_time.is_some(),
            };
            if self.stop_when_reached && reached {
                break;
            }
        }
        Ok(MergingReport {
            horizon,
            epsilon: self.epsilon,
            metric: self.metric,
            tv_trajectory: tv,
            relsup_trajectory: relsup,
            tv_time,
            relsup_time,
            doeblin_bound: doeblin,
            block: self.block,
            block_bound,
            renormalization_drift: drift,
        })
    }
}

/// Full-trajectory merging report for the smallest `n <= n_max` with
/// distance at most `epsilon`.
pub fn merging_time(seq: &KernelSequence, epsilon: f64, metric: Metric, n_max: usize) -> Result<MergingReport> {
    MergingAnalysis::new(epsilon, metric, n_max).run(seq)
}

/// `max_y min_x K(x,y)`: the mass every row shares in its best column.
pub fn doeblin_epsilon(k: &Kernel) -> f64 {
    k.matrix().column_iter().map(|c| c.min()).fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DoeblinCertificate {
    /// `eps_i` for `i = 1..=n`.
    pub epsilons: Vec<f64>,
    /// `prod_{j <= i} (1 - eps_j)` for `i = 1..=n`.
    pub cumulative_bound: Vec<f64>,
    /// `sum eps_i >= DOEBLIN_DIVERGENCE_THRESHOLD` over the horizon.
    pub diverges: bool,
}

impl DoeblinCertificate {
    pub fn bound(&self) -> f64 {
        self.cumulative_bound.last().copied().unwrap_or(1.0)
    }
}

pub fn doeblin_bound(seq: &KernelSequence, n: usize) -> Result<DoeblinCertificate> {
    if n == 0 {
        return Err(Error::InvalidParameter("doeblin bound needs n >= 1".into()));
    }
    let mut epsilons = Vec::with_capacity(n);
    let mut cumulative_bound = Vec::with_capacity(n);
    let mut acc = 1.0;
    for i in 1..=n {
        let e = doeblin_epsilon(seq.kernel(i as i64)?);
        acc *= 1.0 - e;
        epsilons.push(e);
        cumulative_bound.push(acc);
    }
    let total: f64 = epsilons.iter().sum();
    Ok(DoeblinCertificate { epsilons, cumulative_bound, diverges: total >= DOEBLIN_DIVERGENCE_THRESHOLD })
}

/// `prod_j delta(K_{(j-1)b, jb})` over the complete blocks `jb <= n`.
pub fn block_contraction_bound(seq: &KernelSequence, n: usize, block: usize) -> Result<f64> {
    if block == 0 {
        return Err(Error::InvalidParameter("block must be at least 1".into()));
    }
    let mut bound = 1.0;
    for j in 0..(n / block) {
        let k = product(seq, (j * block) as i64, ((j + 1) * block) as i64, Order::Forward)?;
        bound *= contraction_coefficient(&k);
    }
    Ok(bound)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UniformConditionsCertificate {
    /// Smallest `l <= ell_max` with every support power `A_i^l` positive.
    pub ell: Option<usize>,
    /// Smallest positive entry over all kernels, so `K_i >= epsilon A_i`.
    pub epsilon: f64,
    /// Smallest diagonal entry over all kernels.
    pub eta: f64,
    pub adjacency_witnesses: Vec<Vec<Vec<u8>>>,
    pub satisfied: bool,
}

pub fn uniform_conditions_certificate(kernels: &[Kernel], ell_max: usize) -> Result<UniformConditionsCertificate> {
    let first = kernels
        .first()
        .ok_or_else(|| Error::InvalidParameter("kernel set must be non-empty".into()))?;
    for k in &kernels[1..] {
        if k.size() != first.size() {
            return Err(Error::DimensionMismatch { expected: first.size(), found: k.size() });
        }
    }
    let supports: Vec<Vec<Vec<bool>>> = kernels.iter().map(|k| k.support()).collect();
    let mut powers = supports.clone();
    let mut ell = None;
    for l in 1..=ell_max {
        if l > 1 {
            powers = powers.iter().zip(&supports).map(|(p, a)| bool_product(p, a)).collect();
        }
        if powers.iter().all(|p| p.iter().flatten().all(|&b| b)) {
            ell = Some(l);
            break;
        }
    }
    let epsilon = kernels.iter().map(Kernel::min_positive_entry).fold(f64::INFINITY, f64::min);
    let eta = kernels.iter().map(Kernel::min_diagonal).fold(f64::INFINITY, f64::min);
    let adjacency_witnesses = supports
        .iter()
        .map(|s| s.iter().map(|row| row.iter().map(|&b| b as u8).collect()).collect())
        .collect();
    Ok(UniformConditionsCertificate { ell, epsilon, eta, adjacency_witnesses, satisfied: ell.is_some() && eta > 0.0 })
}

fn bool_product(a: &[Vec<bool>], b: &[Vec<bool>]) -> Vec<Vec<bool>> {
    let n = a.len();
    (0..n).map(|x| (0..n).map(|y| (0..n).any(|z| a[x][z] && b[z][y])).collect()).collect()
}

/// Column envelopes of the backward products `K_k ... K_1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackwardEnvelopes {
    /// `upper[k][y] = max_x (K_k ... K_1)(x,y)`, `k = 0..=n`.
    pub upper: Vec<Vec<f64>>,
    /// `lower[k][y] = min_x (K_k ... K_1)(x,y)`.
    pub lower: Vec<Vec<f64>>,
    /// Whether `upper` is non-increasing and `lower` non-decreasing in `k`,
    /// up to a relative slack of `1e-12`.
    pub monotone: bool,
}

pub fn backward_envelopes(seq: &KernelSequence, n: usize) -> Result<BackwardEnvelopes> {
    if n == 0 {
        return Err(Error::InvalidParameter("backward envelopes need n >= 1".into()));
    }
    let mut acc = Kernel::identity(seq.space().clone());
    let mut upper = Vec::with_capacity(n + 1);
    let mut lower = Vec::with_capacity(n + 1);
    let envelope = |k: &Kernel| -> (Vec<f64>, Vec<f64>) {
        let m = k.matrix();
        (m.column_iter().map(|c| c.max()).collect(), m.column_iter().map(|c| c.min()).collect())
    };
    let (u, l) = envelope(&acc);
    upper.push(u);
    lower.push(l);
    for i in 1..=n {
        acc = compose_with_drift(seq.kernel(i as i64)?, &acc)?.0;
        let (u, l) = envelope(&acc);
        upper.push(u);
        lower.push(l);
    }
    let slack = 1e-12;
    let monotone = (1..=n).all(|k| {
        (0..seq.size()).all(|y| {
            upper[k][y] <= upper[k - 1][y] * (1.0 + slack) + slack * 1e-3
                && lower[k][y] >= lower[k - 1][y] * (1.0 - slack) - slack * 1e-3
        })
    });
    Ok(BackwardEnvelopes { upper, lower, monotone })
}
