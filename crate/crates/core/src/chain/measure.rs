use serde::{Deserialize, Serialize};

use super::kernel::{Kernel, ROW_SUM_TOLERANCE};
use super::space::StateSpace;
use crate::error::{Error, Result};

/// A probability vector over a state space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MeasureDoc", into = "MeasureDoc")]
pub struct Measure {
    space: StateSpace,
    weights: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MeasureDoc {
    pub space: StateSpace,
    pub weights: Vec<f64>,
}

impl TryFrom<MeasureDoc> for Measure {
    type Error = Error;

    fn try_from(doc: MeasureDoc) -> Result<Self> {
        Measure::new(doc.space, doc.weights)
    }
}

impl From<Measure> for MeasureDoc {
    fn from(m: Measure) -> Self {
        MeasureDoc { space: m.space, weights: m.weights }
    }
}

impl Measure {
    pub fn new(space: StateSpace, mut weights: Vec<f64>) -> Result<Self> {
        if weights.len() != space.size() {
            return Err(Error::DimensionMismatch { expected: space.size(), found: weights.len() });
        }
        if let Some((i, w)) = weights.iter().enumerate().find(|(_, w)| !w.is_finite() || **w < 0.0) {
            return Err(Error::InvalidMeasure(format!("weight {w} at state {i}")));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
            return Err(Error::InvalidMeasure(format!("weights sum to {sum}")));
        }
        weights.iter_mut().for_each(|w| *w /= sum);
        Ok(Self { space, weights })
    }

    /// Normalizes arbitrary non-negative weights with a positive total.
    pub fn from_unnormalized(space: StateSpace, mut weights: Vec<f64>) -> Result<Self> {
        let sum: f64 = weights.iter().sum();
        if !(sum > 0.0) || !sum.is_finite() {
            return Err(Error::InvalidMeasure(format!("total mass {sum}")));
        }
        weights.iter_mut().for_each(|w| *w /= sum);
        Self::new(space, weights)
    }

    pub fn uniform(space: StateSpace) -> Self {
        let n = space.size();
        Self { space, weights: vec![1.0 / n as f64; n] }
    }

    pub fn dirac(space: StateSpace, state: usize) -> Result<Self> {
        if state >= space.size() {
            return Err(Error::InvalidParameter(format!("state {state} out of range")));
        }
        let mut weights = vec![0.0; space.size()];
        weights[state] = 1.0;
        Ok(Self { space, weights })
    }

    pub fn space(&self) -> &StateSpace {
        &self.space
    }

    pub fn size(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    #[inline]
    pub fn get(&self, x: usize) -> f64 {
        self.weights[x]
    }

    pub fn min(&self) -> f64 {
        self.weights.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn is_positive(&self) -> bool {
        self.min() > 0.0
    }

    /// `mu K`, rescaled so the result sums to one.
    pub fn step(&self, k: &Kernel) -> Result<Measure> {
        self.space.check_same(k.space())?;
        let n = self.size();
        let mut next = vec![0.0; n];
        for (x, &w) in self.weights.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            for (y, slot) in next.iter_mut().enumerate() {
                *slot += w * k.get(x, y);
            }
        }
        let sum: f64 = next.iter().sum();
        next.iter_mut().for_each(|v| *v /= sum);
        Ok(Measure { space: self.space.clone(), weights: next })
    }

    /// Total-variation distance `(1/2) sum |mu - nu|`.
    pub fn tv(&self, other: &Measure) -> f64 {
        tv_distance(&self.weights, &other.weights)
    }

    pub fn max_abs_diff(&self, other: &Measure) -> f64 {
        self.weights.iter().zip(&other.weights).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }

    /// `max_x max(mu(x)/nu(x), nu(x)/mu(x))`, infinite if supports differ.
    pub fn ratio_spread(&self, other: &Measure) -> f64 {
        let mut worst: f64 = 1.0;
        for (&a, &b) in self.weights.iter().zip(&other.weights) {
            if a == 0.0 && b == 0.0 {
                continue;
            }
            if a == 0.0 || b == 0.0 {
                return f64::INFINITY;
            }
            worst = worst.max(a / b).max(b / a);
        }
        worst
    }

    /// Returns an error unless every weight is at least `floor`.
    pub fn require_positive(&self, floor: f64) -> Result<()> {
        match self.weights.iter().enumerate().find(|(_, w)| **w < floor) {
            Some((state, &value)) => Err(Error::NonPositive { state, value }),
            None => Ok(()),
        }
    }

    pub fn permuted(&self, perm: &[usize]) -> Result<Measure> {
        super::kernel::check_permutation(perm, self.size())?;
        let labels = perm.iter().map(|&p| self.space.label(p).to_string()).collect();
        Ok(Measure {
            space: StateSpace::with_labels(labels)?,
            weights: perm.iter().map(|&p| self.weights[p]).collect(),
        })
    }
}

pub(crate) fn tv_distance(a: &[f64], b: &[f64]) -> f64 {
    0.5 * a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validates_and_flags_positivity() {
        let s = StateSpace::new(3).unwrap();
        assert!(Measure::new(s.clone(), vec![0.5, 0.5]).is_err());
        assert!(Measure::new(s.clone(), vec![0.5, 0.6, 0.0]).is_err());
        assert!(Measure::new(s.clone(), vec![1.5, -0.5, 0.0]).is_err());
        let m = Measure::new(s.clone(), vec![0.5, 0.5, 0.0]).unwrap();
        assert!(!m.is_positive());
        assert!(Measure::uniform(s).is_positive());
    }

    #[test]
    fn ratio_spread_conventions() {
        let s = StateSpace::new(2).unwrap();
        let a = Measure::new(s.clone(), vec![0.25, 0.75]).unwrap();
        let u = Measure::uniform(s.clone());
        assert!((a.ratio_spread(&u) - 2.0).abs() < 1e-15);
        let d = Measure::dirac(s, 0).unwrap();
        assert!(d.ratio_spread(&u).is_infinite());
    }
}
