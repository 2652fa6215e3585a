use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::chain::{Kernel, Measure, StateSpace};
use crate::error::{Error, Result};

/// Rates `(up, down, hold)` at one site.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SiteRates {
    pub up: f64,
    pub down: f64,
    pub hold: f64,
}

impl SiteRates {
    pub fn new(up: f64, down: f64, hold: f64) -> Result<Self> {
        check_simplex(up, down, hold)?;
        Ok(Self { up, down, hold })
    }
}

fn check_simplex(p: f64, q: f64, r: f64) -> Result<()> {
    if [p, q, r].iter().any(|v| !v.is_finite() || *v < 0.0) || (p + q + r - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidParameter(format!("rates ({p}, {q}, {r}) are not a probability vector")));
    }
    Ok(())
}

/// Flags for the class of birth-death chains with every allowed move
/// probability in `[1/4, 3/4]` and reversible measure within
/// `[1/4, 4] / (N + 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BandFlags {
    pub rates_in_band: bool,
    pub measure_in_band: bool,
}

impl BandFlags {
    pub fn in_class(&self) -> bool {
        self.rates_in_band && self.measure_in_band
    }
}

/// A birth-death chain on `{0, ..., N}` with its reversible measure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BirthDeathSpec {
    pub n: usize,
    pub rates: Vec<SiteRates>,
    pub kernel: Kernel,
    pub reversible: Measure,
    pub flags: BandFlags,
}

impl BirthDeathSpec {
    /// `max_{x ~ y} |pi(x) K(x,y) - pi(y) K(y,x)|`.
    pub fn detailed_balance_residual(&self) -> f64 {
        detailed_balance_residual(&self.kernel, &self.reversible)
    }
}

pub fn detailed_balance_residual(k: &Kernel, pi: &Measure) -> f64 {
    let n = k.size();
    let mut worst: f64 = 0.0;
    for x in 0..n {
        for y in (x + 1)..n {
            worst = worst.max((pi.get(x) * k.get(x, y) - pi.get(y) * k.get(y, x)).abs());
        }
    }
    worst
}

/// Birth-death chain with constant rates; the mass of impossible moves at the
/// ends is added to holding, so `K(0,0) = q + r` and `K(N,N) = p + r`.
pub fn constant_rate_bd(n: usize, p: f64, q: f64, r: f64) -> Result<Kernel> {
    let site = SiteRates::new(p, q, r)?;
    Ok(general_bd(n, &vec![site; n + 1])?.kernel)
}

/// Birth-death chain on `{0, ..., N}` with per-site rates (one entry per
/// site), boundary moves reflected into holding, and its reversible measure
/// from the product formula `pi(x+1)/pi(x) = p_x / q_{x+1}`.
pub fn general_bd(n: usize, rates: &[SiteRates]) -> Result<BirthDeathSpec> {
    if n == 0 {
        return Err(Error::InvalidParameter("birth-death chain needs N >= 1".into()));
    }
    if rates.len() != n + 1 {
        return Err(Error::DimensionMismatch { expected: n + 1, found: rates.len() });
    }
    for s in rates {
        check_simplex(s.up, s.down, s.hold)?;
    }
    let size = n + 1;
    let mut m = DMatrix::zeros(size, size);
    for (x, s) in rates.iter().enumerate() {
        let mut hold = s.hold;
        if x == 0 {
            hold += s.down;
        } else {
            m[(x, x - 1)] = s.down;
        }
        if x == n {
            hold += s.up;
        } else {
            m[(x, x + 1)] = s.up;
        }
        m[(x, x)] = hold;
    }
    let space = StateSpace::new(size)?;
    let kernel = Kernel::new(space.clone(), m)?;

    let mut log_pi = vec![0.0; size];
    for x in 0..n {
        let (up, down) = (rates[x].up, rates[x + 1].down);
        if !(up > 0.0 && down > 0.0) {
            return Err(Error::InvalidParameter(format!("site {x} and {} do not communicate", x + 1)));
        }
        log_pi[x + 1] = log_pi[x] + up.ln() - down.ln();
    }
    let top = log_pi.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let reversible = Measure::from_unnormalized(space, log_pi.iter().map(|l| (l - top).exp()).collect())?;

    let band = |v: f64| (0.25..=0.75).contains(&v);
    let rates_in_band = (0..size).all(|x| {
        let k = kernel.matrix();
        band(k[(x, x)]) && (x == 0 || band(k[(x, x - 1)])) && (x == n || band(k[(x, x + 1)]))
    });
    let scale = size as f64;
    let measure_in_band = reversible.weights().iter().all(|&w| (0.25..=4.0).contains(&(scale * w)));
    Ok(BirthDeathSpec {
        n,
        rates: rates.to_vec(),
        kernel,
        reversible,
        flags: BandFlags { rates_in_band, measure_in_band },
    })
}

/// A random member of the band class: a log-profile `h(x) ~ U[-0.2, 0.2]`,
/// `pi ∝ exp(h)`, and conductances `c_x ~ U[max(pi)/4, 3 min(pi)/8]` on the
/// edges `{x, x+1}`, so that `p_x = c_x / pi(x)` and `q_{x+1} = c_x / pi(x+1)`.
pub fn random_band_bd<R: Rng>(rng: &mut R, n: usize) -> Result<BirthDeathSpec> {
    let h: Vec<f64> = (0..=n).map(|_| rng.random_range(-0.2..=0.2)).collect();
    let total: f64 = h.iter().map(|v| v.exp()).sum();
    let pi: Vec<f64> = h.iter().map(|v| v.exp() / total).collect();
    let lo = pi.iter().copied().fold(f64::NEG_INFINITY, f64::max) / 4.0;
    let hi = 3.0 * pi.iter().copied().fold(f64::INFINITY, f64::min) / 8.0;
    let conductance: Vec<f64> = (0..n).map(|_| rng.random_range(lo..=hi)).collect();
    let rates = (0..=n)
        .map(|x| {
            let up = if x < n { conductance[x] / pi[x] } else { 0.0 };
            let down = if x > 0 { conductance[x - 1] / pi[x] } else { 0.0 };
            SiteRates { up, down, hold: 1.0 - up - down }
        })
        .collect::<Vec<_>>();
    general_bd(n, &rates)
}

/// Constant-rate parameters `(p, q, r)` with `p/q ~ U[a, A]` and `r ~ U[0, 1/3]`.
pub fn random_constant_rates<R: Rng>(rng: &mut R, a: f64, big_a: f64) -> (f64, f64, f64) {
    let rho = rng.random_range(a..=big_a);
    let r = rng.random_range(0.0..=1.0 / 3.0);
    let q = (1.0 - r) / (1.0 + rho);
    (rho * q, q, (1.0 - rho * q - q).max(0.0))
}
