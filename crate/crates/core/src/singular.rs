//! Second singular values along a measure trajectory and the merging bounds
//! they control.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::chain::{
    classify_structure, compose, evolve, stationary_measure, Kernel, KernelSequence, Measure,
};
use crate::error::{Error, Result};
use crate::linalg::{singular_values_desc, symmetric_eigen_desc};
use crate::report::fmt_real;

/// Measures below this are treated as zero; the bounds carry `mu^{-1/2}`
/// weights and would otherwise be fabricated.
pub const POSITIVITY_FLOOR: f64 = 1e-300;

/// Allowed `||mu_prev K - mu_next||_inf`.
pub const CONSISTENCY_TOLERANCE: f64 = 1e-10;

/// Allowed deviation of the top singular value from 1.
pub const TOP_SINGULAR_TOLERANCE: f64 = 1e-10;

/// `mu_0, ..., mu_n` with `mu_i = mu_{i-1} K_i`, all strictly positive.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasureTrajectory {
    pub mu: Vec<Measure>,
}

impl MeasureTrajectory {
    pub fn new(seq: &KernelSequence, mu0: &Measure, n: usize) -> Result<Self> {
        let mu = evolve(mu0, seq, n)?;
        for m in &mu {
            m.require_positive(POSITIVITY_FLOOR)?;
        }
        Ok(Self { mu })
    }
}

fn check_pair(k: &Kernel, mu_prev: &Measure, mu_next: &Measure) -> Result<()> {
    if mu_prev.size() != k.size() || mu_next.size() != k.size() {
        return Err(Error::DimensionMismatch { expected: k.size(), found: mu_prev.size().max(mu_next.size()) });
    }
    mu_prev.require_positive(POSITIVITY_FLOOR)?;
    mu_next.require_positive(POSITIVITY_FLOOR)?;
    let residual = mu_prev.step(k)?.max_abs_diff(mu_next);
    if residual > CONSISTENCY_TOLERANCE {
        return Err(Error::InconsistentMeasure { residual });
    }
    Ok(())
}

/// `D(mu_prev)^{1/2} K D(mu_next)^{-1/2}`.
pub fn weighted_operator(k: &Kernel, mu_prev: &Measure, mu_next: &Measure) -> DMatrix<f64> {
    let n = k.size();
    DMatrix::from_fn(n, n, |x, y| mu_prev.get(x).sqrt() * k.get(x, y) / mu_next.get(y).sqrt())
}

/// Second largest singular value of `K` as an operator from `l2(mu_next)` to
/// `l2(mu_prev)`, read off a full SVD of [`weighted_operator`].
pub fn step_sigma(k: &Kernel, mu_prev: &Measure, mu_next: &Measure) -> Result<f64> {
    check_pair(k, mu_prev, mu_next)?;
    let sv = singular_values_desc(&weighted_operator(k, mu_prev, mu_next));
    if (sv[0] - 1.0).abs() > TOP_SINGULAR_TOLERANCE {
        return Err(Error::Numerical(format!("top singular value {} is not 1", sv[0])));
    }
    Ok(sv.get(1).copied().unwrap_or(0.0).clamp(0.0, 1.0))
}

/// `P(x,y) = (1/mu_next(x)) sum_z K(z,x) K(z,y) mu_prev(z)`, i.e. `K* K` for
/// the time reversal `K*` between the two measures.
pub fn pi_kernel(k: &Kernel, mu_prev: &Measure, mu_next: &Measure) -> Result<Kernel> {
    check_pair(k, mu_prev, mu_next)?;
    let n = k.size();
    let m = k.matrix();
    let weighted = DMatrix::from_fn(n, n, |z, y| m[(z, y)] * mu_prev.get(z));
    let mut p = m.transpose() * weighted;
    for x in 0..n {
        let inv = 1.0 / mu_next.get(x);
        p.row_mut(x).iter_mut().for_each(|v| *v *= inv);
    }
    Kernel::new(k.space().clone(), p)
}

/// Second largest eigenvalue of a kernel reversible with respect to `mu`,
/// through the symmetric conjugate `D(mu)^{1/2} P D(mu)^{-1/2}`.
pub fn reversible_second_eigenvalue(p: &Kernel, mu: &Measure) -> f64 {
    let n = p.size();
    let s = DMatrix::from_fn(n, n, |x, y| mu.get(x).sqrt() * p.get(x, y) / mu.get(y).sqrt());
    let (values, _) = symmetric_eigen_desc(&s);
    values.get(1).copied().unwrap_or(0.0)
}

/// `sigma` through the eigenvalues of [`pi_kernel`] instead of an SVD.
pub fn sigma_via_pi_kernel(k: &Kernel, mu_prev: &Measure, mu_next: &Measure) -> Result<f64> {
    let p = pi_kernel(k, mu_prev, mu_next)?;
    Ok(reversible_second_eigenvalue(&p, mu_next).max(0.0).sqrt().min(1.0))
}

/// Singular-value bounds against exact distances for `n' = 0..=n`.
///
/// `tv_bound[n'][x] = mu_0(x)^{-1/2} prod_{i <= n'} sigma_i` bounds
/// `tv_exact[n'][x] = ||K_{0,n'}(x,.) - mu_{n'}||_TV`, and
/// `relsup_bound[n'][x*N + y] = [mu_0(x) mu_{n'}(y)]^{-1/2} prod sigma_i`
/// bounds `relsup_exact[n'][x*N + y] = |K_{0,n'}(x,y)/mu_{n'}(y) - 1|`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingularBoundReport {
    pub size: usize,
    /// `sigma_i` for `i = 1..=n`.
    pub sigmas: Vec<f64>,
    /// `prod_{i <= n'} sigma_i` for `n' = 0..=n`.
    pub sigma_product: Vec<f64>,
    pub tv_bound: Vec<Vec<f64>>,
    pub tv_exact: Vec<Vec<f64>>,
    pub relsup_bound: Vec<Vec<f64>>,
    pub relsup_exact: Vec<Vec<f64>>,
}

impl SingularBoundReport {
    pub fn horizon(&self) -> usize {
        self.sigmas.len()
    }

    /// Entries where exact exceeds bound by more than `slack`.
    pub fn violations(&self, slack: f64) -> usize {
        let count = |b: &[Vec<f64>], e: &[Vec<f64>]| {
            b.iter().zip(e).flat_map(|(b, e)| b.iter().zip(e)).filter(|(b, e)| **e > **b + slack).count()
        };
        count(&self.tv_bound, &self.tv_exact) + count(&self.relsup_bound, &self.relsup_exact)
    }

    /// Smallest `bound - exact` over all entries.
    pub fn min_gap(&self) -> f64 {
        let gap = |b: &[Vec<f64>], e: &[Vec<f64>]| {
            b.iter().zip(e).flat_map(|(b, e)| b.iter().zip(e)).map(|(b, e)| b - e).fold(f64::INFINITY, f64::min)
        };
        gap(&self.tv_bound, &self.tv_exact).min(gap(&self.relsup_bound, &self.relsup_exact))
    }

    pub const CSV_HEADER: &'static str =
        "n,sigma_n,sigma_product,max_tv_bound,max_tv_exact,max_relsup_bound,max_relsup_exact";

    pub fn to_csv(&self) -> String {
        let max = |v: &[f64]| v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for n in 0..=self.horizon() {
            let sigma = if n == 0 { String::new() } else { fmt_real(self.sigmas[n - 1]) };
            out.push_str(&format!(
                "{n},{sigma},{},{},{},{},{}\n",
                fmt_real(self.sigma_product[n]),
                fmt_real(max(&self.tv_bound[n])),
                fmt_real(max(&self.tv_exact[n])),
                fmt_real(max(&self.relsup_bound[n])),
                fmt_real(max(&self.relsup_exact[n])),
            ));
        }
        out
    }
}

pub fn thsing_bounds(seq: &KernelSequence, mu0: &Measure, n: usize) -> Result<SingularBoundReport> {
    let traj = MeasureTrajectory::new(seq, mu0, n)?;
    let size = seq.size();
    let mut sigmas = Vec::with_capacity(n);
    let mut sigma_product = vec![1.0];
    let mut acc = Kernel::identity(seq.space().clone());
    let mut tv_bound = Vec::with_capacity(n + 1);
    let mut tv_exact = Vec::with_capacity(n + 1);
    let mut relsup_bound = Vec::with_capacity(n + 1);
    let mut relsup_exact = Vec::with_capacity(n + 1);

    for step in 0..=n {
        if step > 0 {
            let k = seq.kernel(step as i64)?;
            let s = step_sigma(k, &traj.mu[step - 1], &traj.mu[step])?;
            sigmas.push(s);
            sigma_product.push(sigma_product[step - 1] * s);
            acc = compose(&acc, k)?;
        }
        let prod = sigma_product[step];
        let mu = &traj.mu[step];
        let m = acc.matrix();
        let mut tvb = Vec::with_capacity(size);
        let mut tve = Vec::with_capacity(size);
        let mut rb = Vec::with_capacity(size * size);
        let mut re = Vec::with_capacity(size * size);
        for x in 0..size {
            tvb.push(prod / mu0.get(x).sqrt());
            tve.push(0.5 * (0..size).map(|y| (m[(x, y)] - mu.get(y)).abs()).sum::<f64>());
            for y in 0..size {
                rb.push(prod / (mu0.get(x) * mu.get(y)).sqrt());
                re.push((m[(x, y)] / mu.get(y) - 1.0).abs());
            }
        }
        tv_bound.push(tvb);
        tv_exact.push(tve);
        relsup_bound.push(rb);
        relsup_exact.push(re);
    }
    Ok(SingularBoundReport { size, sigmas, sigma_product, tv_bound, tv_exact, relsup_bound, relsup_exact })
}

/// Bounds for a single kernel iterated from `mu_0`, with `sigma_i` recomputed
/// at each pair `(mu_{i-1}, mu_i)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HomogeneousBoundReport {
    /// Bounds on `|K^n(x,y)/mu_n(y) - 1|`, laid out as in [`SingularBoundReport`].
    pub kernel: SingularBoundReport,
    pub stationary: Measure,
    /// `[mu_0^* mu_n(y)]^{-1/2} prod sigma_i` with `mu_0^* = min_x mu_0(x)`, per `(n, y)`.
    pub stationary_bound: Vec<Vec<f64>>,
    /// `|pi(y)/mu_n(y) - 1|` per `(n, y)`.
    pub stationary_exact: Vec<Vec<f64>>,
}

impl HomogeneousBoundReport {
    pub fn violations(&self, slack: f64) -> usize {
        let stationary = self
            .stationary_bound
            .iter()
            .zip(&self.stationary_exact)
            .flat_map(|(b, e)| b.iter().zip(e))
            .filter(|(b, e)| **e > **b + slack)
            .count();
        self.kernel.violations(slack) + stationary
    }
}

pub fn homogeneous_bounds(k: &Kernel, mu0: &Measure, n: usize) -> Result<HomogeneousBoundReport> {
    let structure = classify_structure(k);
    if !(structure.irreducible && structure.aperiodic) {
        return Err(Error::NotErgodic);
    }
    let pi = stationary_measure(k)?;
    let seq = KernelSequence::constant(k.clone());
    let kernel = thsing_bounds(&seq, mu0, n)?;
    let mus = evolve(mu0, &seq, n)?;
    let mu_star = mu0.min();
    let mut stationary_bound = Vec::with_capacity(n + 1);
    let mut stationary_exact = Vec::with_capacity(n + 1);
    for (step, mu) in mus.iter().enumerate() {
        let prod = kernel.sigma_product[step];
        stationary_bound.push((0..k.size()).map(|y| prod / (mu_star * mu.get(y)).sqrt()).collect());
        stationary_exact.push((0..k.size()).map(|y| (pi.get(y) / mu.get(y) - 1.0).abs()).collect());
    }
    Ok(HomogeneousBoundReport { kernel, stationary: pi, stationary_bound, stationary_exact })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{random_reversible_kernel, substream};

    fn k(rows: &[Vec<f64>]) -> Kernel {
        Kernel::from_rows(rows).unwrap()
    }

    #[test]
    fn row_constant_kernel_has_zero_sigma() {
        let rc = k(&[vec![0.2, 0.3, 0.5], vec![0.2, 0.3, 0.5], vec![0.2, 0.3, 0.5]]);
        let pi = stationary_measure(&rc).unwrap();
        assert!(step_sigma(&rc, &pi, &pi).unwrap() < 1e-12);
        let p = pi_kernel(&rc, &pi, &pi).unwrap();
        assert!(crate::chain::contraction_coefficient(&p) < 1e-12);
    }

    #[test]
    fn reversible_sigma_is_second_absolute_eigenvalue() {
        let mut rng = substream(11, 0);
        for _ in 0..20 {
            let (kern, pi) = random_reversible_kernel(&mut rng, 5).unwrap();
            let (vals, _) = symmetric_eigen_desc(&weighted_operator(&kern, &pi, &pi));
            let expected = vals[1].abs().max(vals[4].abs());
            let sigma = step_sigma(&kern, &pi, &pi).unwrap();
            assert!((sigma - expected).abs() < 1e-10);
            assert!((sigma_via_pi_kernel(&kern, &pi, &pi).unwrap() - sigma).abs() < 1e-9);
        }
    }

    #[test]
    fn rejects_inconsistent_or_vanishing_measures() {
        let a = k(&[vec![0.2, 0.8], vec![0.6, 0.4]]);
        let u = Measure::uniform(a.space().clone());
        assert!(matches!(step_sigma(&a, &u, &u), Err(Error::InconsistentMeasure { .. })));
        let d = Measure::dirac(a.space().clone(), 0).unwrap();
        assert!(matches!(step_sigma(&a, &d, &d.step(&a).unwrap()), Err(Error::NonPositive { .. })));
    }

    #[test]
    fn bounds_at_time_zero() {
        let a = k(&[vec![0.2, 0.8], vec![0.6, 0.4]]);
        let mu0 = Measure::from_unnormalized(a.space().clone(), vec![1.0, 3.0]).unwrap();
        let r = thsing_bounds(&KernelSequence::constant(a), &mu0, 5).unwrap();
        assert_eq!(r.sigma_product[0], 1.0);
        assert!(r.tv_bound[0].iter().all(|&b| b >= 1.0));
        assert_eq!(r.violations(1e-12), 0);
        assert!(r.sigma_product.windows(2).all(|w| w[1] <= w[0]));
        assert_eq!(r.to_csv().lines().count(), 7);
    }

    #[test]
    fn two_state_homogeneous_bound_dominates() {
        let a = k(&[vec![0.7, 0.3], vec![0.3, 0.7]]);
        let mu0 = Measure::from_unnormalized(a.space().clone(), vec![0.9, 0.1]).unwrap();
        let r = homogeneous_bounds(&a, &mu0, 30).unwrap();
        assert_eq!(r.violations(1e-12), 0);
        let swap = k(&[vec![0.0, 1.0], vec![1.0, 0.0]]);
        assert!(matches!(homogeneous_bounds(&swap, &mu0, 3), Err(Error::NotErgodic)));
    }

    #[test]
    fn stationary_start_gives_constant_sigmas() {
        let a = k(&[vec![0.5, 0.3, 0.2], vec![0.1, 0.6, 0.3], vec![0.3, 0.3, 0.4]]);
        let pi = stationary_measure(&a).unwrap();
        let r = homogeneous_bounds(&a, &pi, 10).unwrap();
        for s in &r.kernel.sigmas {
            assert!((s - r.kernel.sigmas[0]).abs() < 1e-12);
        }
    }
}
