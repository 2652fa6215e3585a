//! A pair of perturbed stick walks whose product behaves like a walk on a
//! circle, with an explicit invariant measure for the product.

use nalgebra::DMatrix;

use crate::chain::{Kernel, Measure, StateSpace};
use crate::error::{Error, Result};
use crate::linalg::compensated_sum;

/// Parameters of the pair on `{0, ..., N}`, `N = 2n + 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StickPair {
    /// `N`, the largest state.
    pub last_state: usize,
    pub p: f64,
    pub q: f64,
    pub r: f64,
    pub eta1: f64,
    pub eta2: f64,
}

impl StickPair {
    pub fn new(big_n: usize, p: f64, q: f64, r: f64, eta1: f64, eta2: f64) -> Result<Self> {
        if big_n % 2 == 0 || big_n < 3 {
            return Err(Error::InvalidParameter(format!("N = {big_n} must be odd and at least 3")));
        }
        if [p, q, r].iter().any(|v| !v.is_finite() || *v < 0.0) || (p + q + r - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!("({p}, {q}, {r}) is not a probability vector")));
        }
        if !(0.0..1.0).contains(&eta1) || !(0.0..1.0).contains(&eta2) {
            return Err(Error::InvalidParameter("eta1 and eta2 must lie in [0, 1)".into()));
        }
        if p == 0.0 || q == 0.0 {
            return Err(Error::InvalidParameter("p and q must be positive".into()));
        }
        Ok(Self { last_state: big_n, p, q, r, eta1, eta2 })
    }

    /// `(Q1, Q2)`: `Q2` swaps the roles of `p` and `q` and uses `eta2`.
    pub fn kernels(&self) -> Result<(Kernel, Kernel)> {
        Ok((
            stick_kernel(self.last_state, self.p, self.q, self.r, self.eta1)?,
            stick_kernel(self.last_state, self.q, self.p, self.r, self.eta2)?,
        ))
    }

    /// Reversible measures of `Q1` and `Q2`: flat on `0..N-1`, with
    /// `pi_1(N) = p pi_1(0) / (1 - eta1)` and `pi_2(N) = q pi_2(0) / (1 - eta2)`.
    pub fn reversible_measures(&self) -> Result<(Measure, Measure)> {
        let big_n = self.last_state;
        let space = StateSpace::new(big_n + 1)?;
        let flat = |rate: f64, eta: f64| -> Result<Measure> {
            let mut w = vec![1.0; big_n + 1];
            w[big_n] = rate / (1.0 - eta);
            Measure::from_unnormalized(space.clone(), w)
        };
        Ok((flat(self.p, self.eta1)?, flat(self.q, self.eta2)?))
    }
}

fn stick_kernel(big_n: usize, p: f64, q: f64, r: f64, eta: f64) -> Result<Kernel> {
    let n = (big_n - 1) / 2;
    let mut m = DMatrix::zeros(big_n + 1, big_n + 1);
    for x in 0..=n {
        m[(2 * x, 2 * x + 1)] = p;
    }
    for x in 1..=n {
        m[(2 * x, 2 * x - 1)] = q;
        m[(2 * x - 1, 2 * x)] = q;
    }
    for x in 0..n {
        m[(2 * x + 1, 2 * x)] = p;
    }
    for x in 1..=2 * n {
        m[(x, x)] = r;
    }
    m[(0, 0)] = q + r;
    m[(big_n, big_n)] = eta;
    m[(big_n, big_n - 1)] = 1.0 - eta;
    Kernel::new(StateSpace::new(big_n + 1)?, m)
}

/// `(Q1, Q2)` for `N = 2n + 1`.
pub fn perturbed_stick_pair(big_n: usize, p: f64, q: f64, r: f64, eta1: f64, eta2: f64) -> Result<(Kernel, Kernel)> {
    StickPair::new(big_n, p, q, r, eta1, eta2)?.kernels()
}

/// The ordering `x_0 = N, x_1 = N - 2, ..., x_n = 1, x_{n+1} = 0, x_{n+2} = 2,
/// ..., x_N = N - 1` (odd states descending, then even states ascending),
/// along which `Q1 Q2` with `r = 0` is a birth-death chain.
pub fn circle_order(big_n: usize) -> Vec<usize> {
    let n = (big_n - 1) / 2;
    (0..=n).map(|i| big_n - 2 * i).chain((0..=n).map(|j| 2 * j)).collect()
}

/// Real number stored as sign and log-magnitude.
#[derive(Debug, Clone, Copy)]
struct SignedLog {
    sign: f64,
    log: f64,
}

impl SignedLog {
    fn of(v: f64) -> Self {
        Self { sign: v.signum() * (v != 0.0) as i32 as f64, log: v.abs().ln() }
    }

    fn from_log(sign: f64, log: f64) -> Self {
        Self { sign, log }
    }

    fn mul(self, o: Self) -> Self {
        Self { sign: self.sign * o.sign, log: self.log + o.log }
    }

    fn div(self, o: Self) -> Self {
        Self { sign: self.sign * o.sign, log: self.log - o.log }
    }

    fn sum(terms: &[Self]) -> Self {
        let top = terms.iter().filter(|t| t.sign != 0.0).map(|t| t.log).fold(f64::NEG_INFINITY, f64::max);
        if top == f64::NEG_INFINITY {
            return Self { sign: 0.0, log: f64::NEG_INFINITY };
        }
        let total = compensated_sum(terms.iter().filter(|t| t.sign != 0.0).map(|t| t.sign * (t.log - top).exp()));
        Self { sign: total.signum() * (total != 0.0) as i32 as f64, log: top + total.abs().ln() }
    }
}

/// Invariant measure of `Q1 Q2` for `r = 0`, `p + q = 1`, `p != q`, from the
/// closed form `pi(x_i) = alpha + beta (p/q)^{2i}` (`i >= 1`) relative to
/// `pi(x_0)`, with
/// `beta = ((1-eta1) q/p - (1-eta2)) / D`,
/// `alpha = ((1-eta2) eta1 - (1-eta1) eta2 t) / D`,
/// `D = q - p + p eta2 (1 - t)` and `t = (p/q)^{2N}`.
///
/// All quantities are carried as signed logarithms so profiles spanning many
/// orders of magnitude keep full relative precision.
pub fn closed_form_invariant(big_n: usize, p: f64, q: f64, eta1: f64, eta2: f64) -> Result<Measure> {
    StickPair::new(big_n, p, q, 0.0, eta1, eta2)?;
    if p == q {
        return Err(Error::InvalidParameter("p = q makes the closed form degenerate".into()));
    }
    let log_ratio = 2.0 * (p.ln() - q.ln());
    let t = SignedLog::from_log(1.0, big_n as f64 * log_ratio);
    let neg = |v: SignedLog| SignedLog { sign: -v.sign, ..v };

    let pe2 = SignedLog::of(p * eta2);
    let denom = SignedLog::sum(&[SignedLog::of(q - p), pe2, neg(pe2.mul(t))]);
    if denom.sign == 0.0 {
        return Err(Error::Numerical("closed-form denominator vanished".into()));
    }
    let beta = SignedLog::of((1.0 - eta1) * (q / p) - (1.0 - eta2)).div(denom);
    let alpha = SignedLog::sum(&[
        SignedLog::of((1.0 - eta2) * eta1),
        neg(SignedLog::of((1.0 - eta1) * eta2).mul(t)),
    ])
    .div(denom);

    let order = circle_order(big_n);
    let mut logs = vec![0.0; big_n + 1];
    for (i, &x) in order.iter().enumerate().skip(1) {
        let term = beta.mul(SignedLog::from_log(1.0, i as f64 * log_ratio));
        let v = SignedLog::sum(&[alpha, term]);
        if v.sign <= 0.0 {
            return Err(Error::Numerical(format!("closed form gives non-positive mass at state {x}")));
        }
        logs[x] = v.log;
    }
    let top = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = logs.iter().map(|l| (l - top).exp()).collect();
    let total = compensated_sum(weights.iter().copied());
    Measure::new(StateSpace::new(big_n + 1)?, weights.into_iter().map(|w| w / total).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::{compose, stationary_measure};
    use crate::zoo::detailed_balance_residual;

    #[test]
    fn rows_and_reversible_measures() {
        let pair = StickPair::new(7, 0.5, 0.3, 0.2, 0.4, 0.1).unwrap();
        let (q1, q2) = pair.kernels().unwrap();
        let (pi1, pi2) = pair.reversible_measures().unwrap();
        assert!(detailed_balance_residual(&q1, &pi1) < 1e-15);
        assert!(detailed_balance_residual(&q2, &pi2) < 1e-15);
        let expected_flat = (1.0 - 0.4) / 0.5 / (7.0 * (1.0 - 0.4) / 0.5 + 1.0);
        assert!((pi1.get(0) - expected_flat).abs() < 1e-15);
    }

    #[test]
    fn uniform_when_eta_matches_holding() {
        let (p, q, r) = (0.5, 0.3, 0.2);
        let pair = StickPair::new(9, p, q, r, q + r, p + r).unwrap();
        let (pi1, pi2) = pair.reversible_measures().unwrap();
        assert!(pi1.weights().iter().chain(pi2.weights()).all(|w| (w - 0.1).abs() < 1e-15));
    }

    #[test]
    fn circle_order_is_a_permutation() {
        let order = circle_order(7);
        assert_eq!(order, vec![7, 5, 3, 1, 0, 2, 4, 6]);
    }

    #[test]
    fn closed_form_special_cases() {
        let (p, q) = (0.6, 0.4);
        let pi = closed_form_invariant(5, p, q, 0.0, 0.0).unwrap();
        let order = circle_order(5);
        for i in 1..=5 {
            let expected = (p / q).powi(2 * i as i32) / p;
            assert!((pi.get(order[i]) / pi.get(order[0]) / expected - 1.0).abs() < 1e-13);
        }
        let flat = closed_form_invariant(5, p, q, q, p).unwrap();
        assert!(flat.weights().iter().all(|w| (w - 1.0 / 6.0).abs() < 1e-14));
    }

    #[test]
    fn closed_form_matches_direct_solve() {
        let (q1, q2) = perturbed_stick_pair(11, 0.6, 0.4, 0.0, 0.3, 0.7).unwrap();
        let direct = stationary_measure(&compose(&q1, &q2).unwrap()).unwrap();
        let closed = closed_form_invariant(11, 0.6, 0.4, 0.3, 0.7).unwrap();
        for x in 0..12 {
            assert!((closed.get(x) / direct.get(x) - 1.0).abs() < 1e-10);
        }
    }
}
