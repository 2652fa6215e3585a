//! Weighted graphs with loops and their adapted random walks.

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::chain::{Kernel, Measure, StateSpace};
use crate::error::{Error, Result};

/// A finite non-oriented graph without multiple edges. An edge `(x, x)` is a
/// loop; every edge, loops included, adds one to the degree of each endpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedGraph {
    pub space: StateSpace,
    /// Edges `(x, y)` with `x <= y`, sorted.
    pub edges: Vec<(usize, usize)>,
    pub weights: Vec<f64>,
}

impl WeightedGraph {
    pub fn new(space: StateSpace, edges: Vec<(usize, usize)>, weights: Vec<f64>) -> Result<Self> {
        if edges.len() != weights.len() {
            return Err(Error::DimensionMismatch { expected: edges.len(), found: weights.len() });
        }
        let n = space.size();
        let mut pairs: Vec<((usize, usize), f64)> =
            edges.into_iter().map(|(x, y)| (x.min(y), x.max(y))).zip(weights).collect();
        pairs.sort_by(|a, b| a.0.cmp(&b.0));
        for w in pairs.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(Error::InvalidParameter(format!("duplicate edge {:?}", w[0].0)));
            }
        }
        for &((x, y), w) in &pairs {
            if y >= n {
                return Err(Error::InvalidParameter(format!("edge ({x}, {y}) leaves the vertex set")));
            }
            if !(w > 0.0 && w.is_finite()) {
                return Err(Error::InvalidParameter(format!("edge ({x}, {y}) has weight {w}")));
            }
        }
        let (edges, weights) = pairs.into_iter().unzip();
        Ok(Self { space, edges, weights })
    }

    /// Unit weights on states `0..n`.
    pub fn unit(n: usize, edges: Vec<(usize, usize)>) -> Result<Self> {
        let m = edges.len();
        Self::new(StateSpace::new(n)?, edges, vec![1.0; m])
    }

    pub fn size(&self) -> usize {
        self.space.size()
    }

    /// Same edges with new weights, listed in edge order.
    pub fn with_weights(&self, weights: Vec<f64>) -> Result<Self> {
        Self::new(self.space.clone(), self.edges.clone(), weights)
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut d = vec![0; self.size()];
        for &(x, y) in &self.edges {
            d[x] += 1;
            if y != x {
                d[y] += 1;
            }
        }
        d
    }

    pub fn max_degree(&self) -> usize {
        self.degrees().into_iter().max().unwrap_or(0)
    }

    pub fn min_degree(&self) -> usize {
        self.degrees().into_iter().min().unwrap_or(0)
    }

    /// `sum_x d(x)`.
    pub fn total_degree(&self) -> usize {
        self.degrees().iter().sum()
    }

    /// `delta(x) = d(x) / sum d`.
    pub fn degree_measure(&self) -> Result<Measure> {
        Measure::from_unnormalized(self.space.clone(), self.degrees().iter().map(|&d| d as f64).collect())
    }

    /// `sum_{e ∋ x} w_e` per vertex.
    pub fn vertex_weights(&self) -> Vec<f64> {
        let mut s = vec![0.0; self.size()];
        for (&(x, y), &w) in self.edges.iter().zip(&self.weights) {
            s[x] += w;
            if y != x {
                s[y] += w;
            }
        }
        s
    }

    /// `c(w) = sum_x sum_{e ∋ x} w_e`.
    pub fn normalization(&self) -> f64 {
        self.vertex_weights().iter().sum()
    }

    /// `R(w) = max w_e / min w_e`.
    pub fn weight_ratio(&self) -> f64 {
        let hi = self.weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lo = self.weights.iter().copied().fold(f64::INFINITY, f64::min);
        hi / lo
    }

    pub fn has_loop_everywhere(&self) -> bool {
        let mut seen = vec![false; self.size()];
        self.edges.iter().filter(|(x, y)| x == y).for_each(|&(x, _)| seen[x] = true);
        seen.into_iter().all(|s| s)
    }

    pub fn weight_of(&self, x: usize, y: usize) -> Option<f64> {
        let key = (x.min(y), x.max(y));
        self.edges.binary_search(&key).ok().map(|i| self.weights[i])
    }

    pub fn is_connected(&self) -> bool {
        let n = self.size();
        let mut adj = vec![Vec::new(); n];
        for &(x, y) in &self.edges {
            adj[x].push(y);
            adj[y].push(x);
        }
        let mut seen = vec![false; n];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(v) = stack.pop() {
            for &w in &adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }
}

/// `K(w)(x,y) = w_{x,y} / sum_{e ∋ x} w_e` and its reversible measure
/// `pi(w)(x) = c(w)^{-1} sum_{e ∋ x} w_e`.
pub fn graph_kernel(g: &WeightedGraph) -> Result<(Kernel, Measure)> {
    if !g.is_connected() {
        return Err(Error::Disconnected);
    }
    let n = g.size();
    let totals = g.vertex_weights();
    let mut m = DMatrix::zeros(n, n);
    for (&(x, y), &w) in g.edges.iter().zip(&g.weights) {
        m[(x, y)] = w / totals[x];
        if y != x {
            m[(y, x)] = w / totals[y];
        }
    }
    let kernel = Kernel::new(g.space.clone(), m)?;
    let pi = Measure::from_unnormalized(g.space.clone(), totals)?;
    Ok((kernel, pi))
}

/// Weights reweighted so the adapted walk has a prescribed reversible measure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reweighting {
    pub graph: WeightedGraph,
    /// Smallest `a >= 1` with `a^{-1} <= pi_target / delta <= a`.
    pub a: f64,
    /// `R(v)` of the input weights.
    pub b: f64,
    /// `a^2 (b^3 + b D)`.
    pub ratio_bound: f64,
    /// `max_x |pi(w)(x) - pi_target(x)|`.
    pub residual: f64,
}

/// Metropolis reweighting: `w_{x,y} = v_{x,y} min(pi(x)/pi(v)(x), pi(y)/pi(v)(y))`
/// off the diagonal and `w_x = c(v) pi(x) - sum_{y != x} w_{x,y}` on loops.
pub fn metropolis_reweight(g: &WeightedGraph, pi_target: &Measure) -> Result<Reweighting> {
    if !g.has_loop_everywhere() {
        return Err(Error::InvalidParameter("reweighting needs a loop at every vertex".into()));
    }
    pi_target.space().check_same(&g.space)?;
    pi_target.require_positive(f64::MIN_POSITIVE)?;
    let (_, pi_v) = graph_kernel(g)?;
    let c_v = g.normalization();
    let ratio: Vec<f64> = (0..g.size()).map(|x| pi_target.get(x) / pi_v.get(x)).collect();
    let mut weights = g.weights.clone();
    let mut off_diagonal = vec![0.0; g.size()];
    for (i, &(x, y)) in g.edges.iter().enumerate() {
        if x != y {
            weights[i] = g.weights[i] * ratio[x].min(ratio[y]);
            off_diagonal[x] += weights[i];
            off_diagonal[y] += weights[i];
        }
    }
    for (i, &(x, y)) in g.edges.iter().enumerate() {
        if x == y {
            weights[i] = c_v * pi_target.get(x) - off_diagonal[x];
        }
    }
    let graph = g.with_weights(weights)?;
    let (_, pi_w) = graph_kernel(&graph)?;
    let delta = g.degree_measure()?;
    let a = (0..g.size())
        .map(|x| {
            let s = pi_target.get(x) / delta.get(x);
            s.max(1.0 / s)
        })
        .fold(1.0, f64::max);
    let b = g.weight_ratio();
    let ratio_bound = a * a * (b.powi(3) + b * g.max_degree() as f64);
    Ok(Reweighting { residual: pi_w.max_abs_diff(pi_target), graph, a, b, ratio_bound })
}

/// I.i.d. log-uniform weights on `[1, b]`.
pub fn random_weights<R: Rng>(g: &WeightedGraph, b: f64, rng: &mut R) -> Result<WeightedGraph> {
    if !(b >= 1.0) {
        return Err(Error::InvalidParameter(format!("weight ratio bound b = {b} must be at least 1")));
    }
    let log_b = b.ln();
    let weights = g.edges.iter().map(|_| if b == 1.0 { 1.0 } else { (rng.random::<f64>() * log_b).exp() }).collect();
    g.with_weights(weights)
}

/// Path `0 - 1 - ... - N` with a loop at every vertex, unit weights.
pub fn lazy_stick(n: usize) -> Result<WeightedGraph> {
    if n == 0 {
        return Err(Error::InvalidParameter("lazy stick needs N >= 1".into()));
    }
    let edges = (0..=n).map(|x| (x, x)).chain((0..n).map(|x| (x, x + 1))).collect();
    WeightedGraph::unit(n + 1, edges)
}

/// Complete graph on `n` vertices with a loop at every vertex.
pub fn complete_with_loops(n: usize) -> Result<WeightedGraph> {
    let edges = (0..n).flat_map(|x| (x..n).map(move |y| (x, y))).collect();
    WeightedGraph::unit(n, edges)
}

/// Uniform simple connected `degree`-regular graph on `n` vertices from the
/// pairing model with rejection, optionally with a loop added at every vertex.
pub fn random_regular<R: Rng>(n: usize, degree: usize, loops: bool, rng: &mut R) -> Result<WeightedGraph> {
    if n * degree % 2 != 0 || degree >= n {
        return Err(Error::InvalidParameter(format!("no simple {degree}-regular graph on {n} vertices")));
    }
    let mut points: Vec<usize> = (0..n).flat_map(|v| std::iter::repeat_n(v, degree)).collect();
    for _attempt in 0..100_000 {
        points.shuffle(rng);
        let mut edges: Vec<(usize, usize)> =
            points.chunks(2).map(|c| (c[0].min(c[1]), c[0].max(c[1]))).collect();
        if edges.iter().any(|(x, y)| x == y) {
            continue;
        }
        edges.sort_unstable();
        if edges.windows(2).any(|w| w[0] == w[1]) {
            continue;
        }
        if loops {
            edges.extend((0..n).map(|x| (x, x)));
        }
        let g = WeightedGraph::unit(n, edges)?;
        if g.is_connected() {
            return Ok(g);
        }
    }
    Err(Error::Numerical("pairing model kept producing non-simple or disconnected graphs".into()))
}
