//! Spectra of adapted walks on weighted graphs, Dirichlet forms, and the
//! comparison between a weighted walk and the simple random walk.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::symmetric_eigen_desc;
use crate::report::fmt_real;
use crate::zoo::{graph_kernel, WeightedGraph};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralReport {
    /// Eigenvalues in decreasing order; the first is 1.
    pub eigenvalues: Vec<f64>,
    /// Second largest eigenvalue.
    pub beta_1: f64,
    /// Smallest eigenvalue.
    pub beta_minus: f64,
    /// `max(beta_1, -beta_minus)`.
    pub sigma: f64,
    pub gap: f64,
    /// `sum_x d(x)`.
    pub total_degree: usize,
    pub min_degree: usize,
}

/// Eigen-decomposition of the adapted walk `K(w)` through the symmetric
/// conjugate `D(pi)^{1/2} K D(pi)^{-1/2}`. Returns the eigenvalues
/// (decreasing), the orthonormal eigenvectors, and `pi(w)`.
fn weighted_eigen(g: &WeightedGraph) -> Result<(Vec<f64>, DMatrix<f64>, Vec<f64>)> {
    let (k, pi) = graph_kernel(g)?;
    let n = k.size();
    let s = DMatrix::from_fn(n, n, |x, y| pi.get(x).sqrt() * k.get(x, y) / pi.get(y).sqrt());
    let (values, vectors) = symmetric_eigen_desc(&s);
    Ok((values, vectors, pi.weights().to_vec()))
}

fn report_from(values: Vec<f64>, g: &WeightedGraph) -> SpectralReport {
    let beta_1 = values.get(1).copied().unwrap_or(0.0);
    let beta_minus = if values.len() > 1 { *values.last().unwrap() } else { 0.0 };
    let sigma = beta_1.max(-beta_minus).clamp(0.0, 1.0);
    SpectralReport {
        eigenvalues: values,
        beta_1,
        beta_minus,
        sigma,
        gap: 1.0 - sigma,
        total_degree: g.total_degree(),
        min_degree: g.min_degree(),
    }
}

/// Spectrum of the walk adapted to the weights carried by `g`.
pub fn weighted_spectrum(g: &WeightedGraph) -> Result<SpectralReport> {
    Ok(report_from(weighted_eigen(g)?.0, g))
}

/// Spectrum of the simple random walk on the edges of `g`, ignoring weights.
pub fn srw_spectrum(g: &WeightedGraph) -> Result<SpectralReport> {
    let unit = g.with_weights(vec![1.0; g.edges.len()])?;
    weighted_spectrum(&unit)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DirichletForms {
    /// `(1/c(w)) sum_{e={x,y}} |f(x) - f(y)|^2 w_e`.
    pub energy: f64,
    /// `(1/2c(w)) sum_{x,y: {x,y} in E} |f(x) + f(y)|^2 w_{x,y}`.
    pub sum_form: f64,
    /// Variance of `f` under `pi(w)`.
    pub variance: f64,
}

pub fn dirichlet_forms(g: &WeightedGraph, f: &[f64]) -> Result<DirichletForms> {
    if f.len() != g.size() {
        return Err(Error::DimensionMismatch { expected: g.size(), found: f.len() });
    }
    let c = g.normalization();
    let mut energy = 0.0;
    let mut sum_form = 0.0;
    for (&(x, y), &w) in g.edges.iter().zip(&g.weights) {
        energy += (f[x] - f[y]).powi(2) * w;
        let ordered_pairs = if x == y { 1.0 } else { 2.0 };
        sum_form += ordered_pairs * (f[x] + f[y]).powi(2) * w;
    }
    let pi: Vec<f64> = g.vertex_weights().iter().map(|v| v / c).collect();
    Ok(DirichletForms { energy: energy / c, sum_form: sum_form / (2.0 * c), variance: variance(&pi, f) })
}

fn variance(pi: &[f64], f: &[f64]) -> f64 {
    let mean: f64 = pi.iter().zip(f).map(|(p, v)| p * v).sum();
    pi.iter().zip(f).map(|(p, v)| p * (v - mean).powi(2)).sum()
}

/// Both sides of the form comparisons between the simple walk and the walk
/// with weights rescaled to `min w = 1`:
/// `E_sr(f) <= (c(w) b / Delta) E_w(f)` and `Var_{pi(w)}(f) <= (Delta b / c(w)) Var_delta(f)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FormComparison {
    pub srw_energy: f64,
    pub scaled_weighted_energy: f64,
    pub weighted_variance: f64,
    pub scaled_degree_variance: f64,
}

impl FormComparison {
    pub fn holds(&self, slack: f64) -> bool {
        self.srw_energy <= self.scaled_weighted_energy + slack && self.weighted_variance <= self.scaled_degree_variance + slack
    }
}

pub fn form_comparison(g: &WeightedGraph, f: &[f64], b: f64) -> Result<FormComparison> {
    let lo = g.weights.iter().copied().fold(f64::INFINITY, f64::min);
    let w = g.with_weights(g.weights.iter().map(|v| v / lo).collect())?;
    let unit = g.with_weights(vec![1.0; g.edges.len()])?;
    let delta_total = g.total_degree() as f64;
    let c = w.normalization();
    let srw = dirichlet_forms(&unit, f)?;
    let weighted = dirichlet_forms(&w, f)?;
    Ok(FormComparison {
        srw_energy: srw.energy,
        scaled_weighted_energy: c * b / delta_total * weighted.energy,
        weighted_variance: weighted.variance,
        scaled_degree_variance: delta_total * b / c * srw.variance,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub b: f64,
    pub weight_ratio: f64,
    pub srw: SpectralReport,
    pub weighted: SpectralReport,
    /// `b^{-2} (1 - sigma_N)`.
    pub gap_lower_bound: f64,
    /// `1 - sigma(w) >= b^{-2} (1 - sigma_N) - 1e-12`.
    pub gap_inequality_holds: bool,
    /// Times at which the trajectories are evaluated.
    pub times: Vec<usize>,
    /// `b d_*^{-1} Delta (1 - b^{-2}(1 - sigma_N))^n`.
    pub bound: Vec<f64>,
    /// `max_{x,y} |K(w)^n(x,y) / pi(w)(y) - 1|`.
    pub exact_max: Vec<f64>,
}

impl ComparisonReport {
    pub fn bound_violations(&self, slack: f64) -> usize {
        self.bound.iter().zip(&self.exact_max).filter(|(b, e)| **e > **b + slack).count()
    }

    pub const CSV_HEADER: &'static str = "n,bound,exact_max";

    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for ((n, b), e) in self.times.iter().zip(&self.bound).zip(&self.exact_max) {
            out.push_str(&format!("{n},{},{}\n", fmt_real(*b), fmt_real(*e)));
        }
        out
    }
}

/// Every `n <= 64`, then about 64 geometrically spaced times up to `horizon`.
pub fn time_grid(horizon: usize) -> Vec<usize> {
    let mut times: Vec<usize> = (0..=horizon.min(64)).collect();
    if horizon > 64 {
        let steps = 64;
        let ratio = (horizon as f64 / 64.0).powf(1.0 / steps as f64);
        let mut t = 64.0;
        for _ in 0..steps {
            t *= ratio;
            times.push((t.round() as usize).min(horizon));
        }
        times.push(horizon);
        times.dedup();
    }
    times
}

/// `max_{x,y} |K^n(x,y)/pi(y) - 1|` for each `n` in `times`, from the
/// spectral expansion `sum_{k >= 2} lambda_k^n U(x,k) U(y,k) / sqrt(pi(x) pi(y))`.
pub fn relative_deviation(g: &WeightedGraph, times: &[usize]) -> Result<Vec<f64>> {
    let (values, vectors, pi) = weighted_eigen(g)?;
    let n = values.len();
    let v = DMatrix::from_fn(n, n.saturating_sub(1), |x, k| vectors[(x, k + 1)] / pi[x].sqrt());
    let mut out = Vec::with_capacity(times.len());
    for &t in times {
        let powers: Vec<f64> = values[1..].iter().map(|l| l.powi(t.min(i32::MAX as usize) as i32)).collect();
        let mut scaled = v.clone();
        for (k, p) in powers.iter().enumerate() {
            scaled.column_mut(k).iter_mut().for_each(|e| *e *= p);
        }
        let dev = &scaled * v.transpose();
        out.push(dev.amax());
    }
    Ok(out)
}

/// Compares the weighted walk on `g` with the simple random walk on the same
/// edges, given a weight ratio bound `b >= R(w)`.
pub fn comparison_check(g: &WeightedGraph, b: f64, horizon: usize) -> Result<ComparisonReport> {
    let ratio = g.weight_ratio();
    if ratio > b * (1.0 + 1e-12) {
        return Err(Error::WeightRatio { ratio, b });
    }
    let srw = srw_spectrum(g)?;
    let weighted = weighted_spectrum(g)?;
    let gap_lower_bound = srw.gap / (b * b);
    let gap_inequality_holds = weighted.gap >= gap_lower_bound - 1e-12;
    let times = time_grid(horizon);
    let prefactor = b * srw.total_degree as f64 / srw.min_degree as f64;
    let rate = 1.0 - gap_lower_bound;
    let bound = times.iter().map(|&t| prefactor * rate.powf(t as f64)).collect();
    let exact_max = relative_deviation(g, &times)?;
    Ok(ComparisonReport { b, weight_ratio: ratio, srw, weighted, gap_lower_bound, gap_inequality_holds, times, bound, exact_max })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::substream;
    use crate::zoo::{complete_with_loops, lazy_stick, random_weights};

    #[test]
    fn two_point_lazy_stick_has_zero_sigma() {
        let r = srw_spectrum(&lazy_stick(1).unwrap()).unwrap();
        assert!(r.sigma.abs() < 1e-15);
        assert_eq!(r.total_degree, 4);
    }

    #[test]
    fn complete_graph_with_loops() {
        // K = J/n has eigenvalues 1 and 0 (n - 1 times).
        let r = srw_spectrum(&complete_with_loops(6).unwrap()).unwrap();
        assert!((r.eigenvalues[0] - 1.0).abs() < 1e-14);
        assert!(r.eigenvalues[1..].iter().all(|v| v.abs() < 1e-14));
    }

    #[test]
    fn constant_function_has_no_energy() {
        let g = lazy_stick(4).unwrap();
        let d = dirichlet_forms(&g, &[2.0; 5]).unwrap();
        assert_eq!(d.energy, 0.0);
        assert!(d.variance.abs() < 1e-15);
        let f = [0.0, 1.0, 3.0, 2.0, 5.0];
        let d = dirichlet_forms(&g, &f).unwrap();
        let direct: f64 = (0..4).map(|x| (f[x + 1] - f[x]).powi(2)).sum::<f64>() / g.total_degree() as f64;
        assert!((d.energy - direct).abs() < 1e-15);
    }

    #[test]
    fn unit_weights_give_equality() {
        let g = lazy_stick(8).unwrap();
        let r = comparison_check(&g, 1.0, 200).unwrap();
        assert!((r.weighted.sigma - r.srw.sigma).abs() < 1e-12);
        assert!(r.gap_inequality_holds);
        assert_eq!(r.bound_violations(1e-12), 0);
    }

    #[test]
    fn weighted_stick_comparison() {
        let mut rng = substream(12, 0);
        let g = random_weights(&lazy_stick(10).unwrap(), 4.0, &mut rng).unwrap();
        let r = comparison_check(&g, 4.0, 1000).unwrap();
        assert!(r.gap_inequality_holds);
        assert_eq!(r.bound_violations(1e-12), 0);
        let f: Vec<f64> = (0..11).map(|x| (x as f64).sin()).collect();
        assert!(form_comparison(&g, &f, 4.0).unwrap().holds(1e-12));
        assert!(matches!(comparison_check(&g, 1.5, 10), Err(Error::WeightRatio { .. })));
    }

    #[test]
    fn deviation_at_time_zero() {
        let g = lazy_stick(3).unwrap();
        let dev = relative_deviation(&g, &[0]).unwrap();
        // K^0 = I: the largest deviation is 1/delta(x) - 1 at the smallest delta.
        let delta_min = 2.0 / 10.0;
        assert!((dev[0] - (1.0 / delta_min - 1.0)).abs() < 1e-12);
    }
}
