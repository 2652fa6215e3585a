//! Seeded generators for kernels and measures.
//!
//! Every generator takes an explicit RNG; [`substream`] derives independent,
//! schedule-free streams from a seed and a task index.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::chain::{Kernel, Measure, StateSpace};
use crate::error::Result;

pub type Rng64 = ChaCha8Rng;

/// Stream `index` of the generator seeded with `seed`.
pub fn substream(seed: u64, index: u64) -> Rng64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Kernel with i.i.d. uniform row weights, normalized.
pub fn random_kernel<R: Rng>(rng: &mut R, n: usize) -> Result<Kernel> {
    random_sparse_kernel(rng, n, 0.0)
}

/// Kernel whose entries are zero with probability `zero_prob`; every row keeps
/// at least one positive entry.
pub fn random_sparse_kernel<R: Rng>(rng: &mut R, n: usize, zero_prob: f64) -> Result<Kernel> {
    let mut m = DMatrix::zeros(n, n);
    for x in 0..n {
        for y in 0..n {
            if rng.random::<f64>() >= zero_prob {
                m[(x, y)] = rng.random::<f64>() + 1e-3;
            }
        }
        if (0..n).all(|y| m[(x, y)] == 0.0) {
            m[(x, rng.random_range(0..n))] = 1.0;
        }
        let s: f64 = m.row(x).iter().sum();
        for y in 0..n {
            m[(x, y)] /= s;
        }
    }
    Kernel::new(StateSpace::new(n)?, m)
}

/// Strictly positive measure with i.i.d. uniform weights on `[floor, 1 + floor]`.
pub fn random_measure<R: Rng>(rng: &mut R, n: usize, floor: f64) -> Result<Measure> {
    let w = (0..n).map(|_| rng.random::<f64>() + floor).collect();
    Measure::from_unnormalized(StateSpace::new(n)?, w)
}

/// Random walk on a complete graph with loops and random symmetric
/// conductances, together with its reversible measure.
pub fn random_reversible_kernel<R: Rng>(rng: &mut R, n: usize) -> Result<(Kernel, Measure)> {
    let mut c = DMatrix::zeros(n, n);
    for x in 0..n {
        for y in x..n {
            let v = rng.random::<f64>() + 0.05;
            c[(x, y)] = v;
            c[(y, x)] = v;
        }
    }
    let totals: Vec<f64> = (0..n).map(|x| c.row(x).iter().sum()).collect();
    let k = DMatrix::from_fn(n, n, |x, y| c[(x, y)] / totals[x]);
    let space = StateSpace::new(n)?;
    Ok((Kernel::new(space.clone(), k)?, Measure::from_unnormalized(space, totals)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::invariance_residual;

    #[test]
    fn substreams_are_reproducible_and_distinct() {
        let a: Vec<u64> = (0..4).map(|_| substream(7, 3).random()).collect();
        let b: Vec<u64> = (0..4).map(|_| substream(7, 3).random()).collect();
        assert_eq!(a, b);
        let c: u64 = substream(7, 4).random();
        assert_ne!(a[0], c);
    }

    #[test]
    fn reversible_kernel_is_invariant() {
        let mut rng = substream(1, 0);
        let (k, pi) = random_reversible_kernel(&mut rng, 6).unwrap();
        assert!(invariance_residual(&k, &pi).unwrap() < 1e-15);
    }

    #[test]
    fn sparse_kernel_rows_are_stochastic() {
        let mut rng = substream(2, 0);
        let k = random_sparse_kernel(&mut rng, 5, 0.9).unwrap();
        for x in 0..5 {
            assert!((k.row(x).iter().sum::<f64>() - 1.0).abs() < 1e-15);
        }
    }
}
