//! State spaces, kernels, measures, sequences and the basic operations on them.

mod kernel;
mod measure;
mod sequence;
mod space;
mod structure;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

pub use kernel::{Kernel, KernelDoc, ROW_SUM_TOLERANCE};
pub use measure::{Measure, MeasureDoc};
pub use sequence::{KernelSequence, SequenceDoc, SequenceKind, SequenceRule};
pub use space::StateSpace;
pub use structure::{classify_structure, StructureReport};


use crate::error::{Error, Result};
use crate::linalg::max_row_tv;

/// Residual `||pi K - pi||_inf` accepted without polishing.
pub const STATIONARY_TOLERANCE: f64 = 1e-12;

/// Residual below which a measure counts as invariant for [`adjoint_kernel`].
pub const INVARIANCE_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Order {
    /// `K_{m+1} ... K_n`
    Forward,
    /// `K_n ... K_{m+1}`
    Backward,
}

/// `a b`, rows rescaled to sum to one.
pub fn compose(a: &Kernel, b: &Kernel) -> Result<Kernel> {
    Ok(compose_with_drift(a, b)?.0)
}

/// `a b` together with the largest row-sum drift removed by rescaling.
pub fn compose_with_drift(a: &Kernel, b: &Kernel) -> Result<(Kernel, f64)> {
    a.space().check_same(b.space())?;
    Ok(Kernel::renormalized(a.space().clone(), a.matrix() * b.matrix()))
}

/// `K_{m,n}` in the requested order; the identity when `m == n`.
///
/// Negative `m` is accepted for rules that extend to non-positive indices.
pub fn product(seq: &KernelSequence, m: i64, n: i64, order: Order) -> Result<Kernel> {
    if m > n {
        return Err(Error::InvalidRange { m, n });
    }
    let mut acc = Kernel::identity(seq.space().clone());
    for i in (m + 1)..=n {
        let k = seq.kernel(i)?;
        acc = match order {
            Order::Forward => compose(&acc, k)?,
            Order::Backward => compose(k, &acc)?,
        };
    }
    Ok(acc)
}

/// `mu_0, mu_1, ..., mu_n` with `mu_i = mu_{i-1} K_i`.
pub fn evolve(mu0: &Measure, seq: &KernelSequence, n: usize) -> Result<Vec<Measure>> {
    mu0.space().check_same(seq.space())?;
    let mut out = Vec::with_capacity(n + 1);
    out.push(mu0.clone());
    for i in 1..=n {
        let next = out[i - 1].step(seq.kernel(i as i64)?)?;
        out.push(next);
    }
    Ok(out)
}

/// `||mu K - mu||_inf`.
pub fn invariance_residual(k: &Kernel, mu: &Measure) -> Result<f64> {
    let next = mu.step(k)?;
    Ok(next.max_abs_diff(mu))
}

/// The invariant probability measure of a kernel with a single recurrent class.
///
/// The measure is computed on the recurrent class by GTH elimination, which
/// involves no subtractions and keeps every entry to high relative accuracy
/// even when the profile spans many orders of magnitude. Transient states get
/// zero mass. A lazy power iteration polishes the result if the residual
/// exceeds [`STATIONARY_TOLERANCE`].
pub fn stationary_measure(k: &Kernel) -> Result<Measure> {
    let report = classify_structure(k);
    if report.recurrent_classes.len() != 1 {
        return Err(Error::AmbiguousStationary { classes: report.recurrent_classes });
    }
    let class = &report.recurrent_classes[0];
    let m = class.len();
    let sub = DMatrix::from_fn(m, m, |i, j| k.get(class[i], class[j]));
    let local = gth_stationary(&sub)?;
    let mut weights = vec![0.0; k.size()];
    for (i, &x) in class.iter().enumerate() {
        weights[x] = local[i];
    }
    let mut mu = Measure::from_unnormalized(k.space().clone(), weights)?;
    let mut residual = invariance_residual(k, &mu)?;
    let mut iterations = 0;
    while residual > STATIONARY_TOLERANCE && iterations < 10_000 {
        let next = mu.step(k)?;
        let lazy: Vec<f64> = mu.weights().iter().zip(next.weights()).map(|(a, b)| 0.5 * (a + b)).collect();
        let candidate = Measure::from_unnormalized(k.space().clone(), lazy)?;
        let r = invariance_residual(k, &candidate)?;
        if r >= residual {
            break;
        }
        mu = candidate;
        residual = r;
        iterations += 1;
    }
    if residual > 1e3 * STATIONARY_TOLERANCE {
        return Err(Error::Numerical(format!("stationary residual {residual:e}")));
    }
    Ok(mu)
}

/// Grassmann-Taksar-Heyman elimination on an irreducible stochastic matrix.
fn gth_stationary(p: &DMatrix<f64>) -> Result<Vec<f64>> {
    let n = p.nrows();
    let mut a = p.clone();
    for k in (1..n).rev() {
        let s: f64 = (0..k).map(|j| a[(k, j)]).sum();
        if !(s > 0.0) {
            return Err(Error::Numerical("GTH pivot vanished; class is not irreducible".into()));
        }
        for i in 0..k {
            a[(i, k)] /= s;
        }
        for i in 0..k {
            let aik = a[(i, k)];
            if aik == 0.0 {
                continue;
            }
            for j in 0..k {
                a[(i, j)] += aik * a[(k, j)];
            }
        }
    }
    let mut pi = vec![0.0; n];
    pi[0] = 1.0;
    for k in 1..n {
        pi[k] = (0..k).map(|i| pi[i] * a[(i, k)]).sum();
    }
    let total: f64 = pi.iter().sum();
    Ok(pi.into_iter().map(|v| v / total).collect())
}

/// The time reversal `K*(x,y) = pi(y) K(y,x) / pi(x)`.
///
/// When `pi` is not invariant the matrix is still returned, but its rows need
/// not sum to one and [`Adjoint::into_kernel`] refuses it.
#[derive(Debug, Clone, PartialEq)]
pub struct Adjoint {
    pub space: StateSpace,
    pub matrix: DMatrix<f64>,
    /// `||pi K - pi||_inf` for the supplied measure.
    pub invariance_residual: f64,
}

impl Adjoint {
    pub fn is_stochastic(&self) -> bool {
        self.invariance_residual <= INVARIANCE_TOLERANCE
    }

    pub fn into_kernel(self) -> Result<Kernel> {
        if !self.is_stochastic() {
            return Err(Error::InconsistentMeasure { residual: self.invariance_residual });
        }
        Ok(Kernel::renormalized(self.space, self.matrix).0)
    }
}

pub fn adjoint_kernel(k: &Kernel, pi: &Measure) -> Result<Adjoint> {
    pi.space().check_same(k.space())?;
    pi.require_positive(f64::MIN_POSITIVE)?;
    let n = k.size();
    let matrix = DMatrix::from_fn(n, n, |x, y| pi.get(y) * k.get(y, x) / pi.get(x));
    Ok(Adjoint { space: k.space().clone(), matrix, invariance_residual: invariance_residual(k, pi)? })
}

/// Dobrushin coefficient: the largest total-variation distance between two rows.
pub fn contraction_coefficient(k: &Kernel) -> f64 {
    max_row_tv(k.matrix())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn k(rows: &[Vec<f64>]) -> Kernel {
        Kernel::from_rows(rows).unwrap()
    }

    #[test]
    fn compose_with_identity_and_row_constant() {
        let a = k(&[vec![0.2, 0.8], vec![0.6, 0.4]]);
        let id = Kernel::identity(a.space().clone());
        assert_eq!(compose(&id, &a).unwrap(), a);
        let u = k(&[vec![0.5, 0.5], vec![0.5, 0.5]]);
        assert!(compose(&a, &u).unwrap().max_abs_diff(&u) < 1e-15);
        let ua = compose(&u, &a).unwrap();
        assert_eq!(contraction_coefficient(&ua), 0.0);
    }

    #[test]
    fn product_orders() {
        let a = k(&[vec![0.2, 0.8], vec![0.6, 0.4]]);
        let b = k(&[vec![1.0, 0.0], vec![0.3, 0.7]]);
        let seq = KernelSequence::alternating(a.clone(), b.clone()).unwrap();
        assert_eq!(product(&seq, 3, 3, Order::Forward).unwrap(), Kernel::identity(a.space().clone()));
        assert_eq!(product(&seq, 0, 2, Order::Forward).unwrap(), compose(&compose(&Kernel::identity(a.space().clone()), &a).unwrap(), &b).unwrap());
        let back = product(&seq, 0, 2, Order::Backward).unwrap();
        assert!(back.max_abs_diff(&compose(&b, &a).unwrap()) < 1e-15);
        assert!(matches!(product(&seq, 3, 2, Order::Forward), Err(Error::InvalidRange { .. })));
    }

    #[test]
    fn evolve_two_point_cycle() {
        let q0 = k(&[vec![0.0, 1.0], vec![0.7, 0.3]]);
        let q1 = k(&[vec![0.4, 0.6], vec![1.0, 0.0]]);
        let seq = KernelSequence::alternating(q0, q1).unwrap();
        let mus = evolve(&Measure::dirac(seq.space().clone(), 0).unwrap(), &seq, 2).unwrap();
        assert_eq!(mus.len(), 3);
        assert_eq!(mus[1].weights(), &[0.0, 1.0]);
        assert_eq!(mus[2].weights(), &[1.0, 0.0]);
    }

    #[test]
    fn stationary_of_doubly_stochastic_is_uniform() {
        let d = k(&[vec![0.1, 0.6, 0.3], vec![0.5, 0.2, 0.3], vec![0.4, 0.2, 0.4]]);
        let pi = stationary_measure(&d).unwrap();
        for &w in pi.weights() {
            assert!((w - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn stationary_with_transient_state_and_ambiguity() {
        let t = k(&[vec![0.5, 0.5, 0.0], vec![0.0, 0.5, 0.5], vec![0.0, 1.0, 0.0]]);
        let pi = stationary_measure(&t).unwrap();
        assert_eq!(pi.get(0), 0.0);
        assert!((pi.get(1) - 2.0 / 3.0).abs() < 1e-15);
        let id = Kernel::identity(StateSpace::new(2).unwrap());
        match stationary_measure(&id) {
            Err(Error::AmbiguousStationary { classes }) => assert_eq!(classes, vec![vec![0], vec![1]]),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn stationary_of_periodic_chain() {
        let swap = k(&[vec![0.0, 1.0], vec![1.0, 0.0]]);
        let pi = stationary_measure(&swap).unwrap();
        assert_eq!(pi.weights(), &[0.5, 0.5]);
    }

    #[test]
    fn adjoint_of_rotation_is_reverse_rotation() {
        let rot = k(&[vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0], vec![1.0, 0.0, 0.0]]);
        let u = Measure::uniform(rot.space().clone());
        let adj = adjoint_kernel(&rot, &u).unwrap().into_kernel().unwrap();
        assert_eq!(adj.matrix(), &rot.matrix().transpose());
    }

    #[test]
    fn adjoint_flags_non_invariant_measure() {
        let a = k(&[vec![0.2, 0.8], vec![0.6, 0.4]]);
        let u = Measure::uniform(a.space().clone());
        let adj = adjoint_kernel(&a, &u).unwrap();
        assert!(!adj.is_stochastic());
        assert!(adj.into_kernel().is_err());
        let d = Measure::dirac(a.space().clone(), 0).unwrap();
        assert!(adjoint_kernel(&a, &d).is_err());
    }

    #[test]
    fn contraction_coefficient_two_state() {
        let (a, b) = (0.3, 0.45);
        let m = k(&[vec![1.0 - a, a], vec![b, 1.0 - b]]);
        assert!((contraction_coefficient(&m) - (1.0 - a - b as f64).abs()).abs() < 1e-15);
        assert_eq!(contraction_coefficient(&Kernel::identity(StateSpace::new(3).unwrap())), 1.0);
        assert_eq!(contraction_coefficient(&k(&[vec![0.3, 0.7], vec![0.3, 0.7]])), 0.0);
    }
}
