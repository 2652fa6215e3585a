//! Small fixed examples on two, four, five and seven states.

use serde::{Deserialize, Serialize};

use super::graph::{graph_kernel, WeightedGraph};
use crate::chain::{adjoint_kernel, stationary_measure, Kernel, KernelSequence, StateSpace};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum SmallExample {
    /// `Q0 = [[0, 1], [1-a, a]]`, `Q1 = [[b, 1-b], [1, 0]]`.
    TwoPoint { a: f64, b: f64 },
    FivePoint,
    SevenPoint,
    /// `(Q0, Q0*)` for the time reversal on `l2(pi_0)`; without a kernel the
    /// built-in non-reversible [`nonreversible_four_state`] is used.
    AdjointPair { kernel: Option<Kernel> },
}

impl std::str::FromStr for SmallExample {
    type Err = Error;

    /// `two_point` (with `a = b = 1/2`), `five_point`, `seven_point` or `adjoint_pair`.
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "two_point" => Ok(Self::TwoPoint { a: 0.5, b: 0.5 }),
            "five_point" => Ok(Self::FivePoint),
            "seven_point" => Ok(Self::SevenPoint),
            "adjoint_pair" => Ok(Self::AdjointPair { kernel: None }),
            other => Err(Error::InvalidParameter(format!("unknown example {other:?}"))),
        }
    }
}

// Five states labelled 1..=5 (stored 0-based). Q0: loop at 1, 1-2, 2-3, 2-4,
// 3-5, 4-5. Q1 is the same drawing with 2 and 3 swapped and 4 and 5 swapped.
const FIVE_Q0: &[(usize, usize)] = &[(1, 1), (1, 2), (2, 3), (2, 4), (3, 5), (4, 5)];
const FIVE_Q1: &[(usize, usize)] = &[(1, 1), (1, 3), (3, 2), (3, 5), (2, 4), (5, 4)];

// Seven states labelled 1..=7. Q0: path 1-2-3-4 with a loop at 3, then a
// square 4-5-7-6-4. Q1 relabels the drawing by 1<->2, 4<->5, 6<->7.
const SEVEN_Q0: &[(usize, usize)] = &[(1, 2), (2, 3), (3, 3), (3, 4), (4, 5), (4, 6), (5, 7), (6, 7)];
const SEVEN_Q1: &[(usize, usize)] = &[(2, 1), (1, 3), (3, 3), (3, 5), (5, 4), (5, 7), (4, 6), (7, 6)];

fn walk_from_one_based(n: usize, edges: &[(usize, usize)]) -> Result<Kernel> {
    let space = StateSpace::numbered_from(1, n)?;
    let zero_based = edges.iter().map(|&(x, y)| (x - 1, y - 1)).collect::<Vec<_>>();
    let m = zero_based.len();
    let g = WeightedGraph::new(space, zero_based, vec![1.0; m])?;
    Ok(graph_kernel(&g)?.0)
}

/// A non-reversible irreducible aperiodic kernel `Q0` on four states for
/// which `Q0 Q0*` has two recurrent classes, `{0, 1}` and `{2, 3}`.
pub fn nonreversible_four_state() -> Kernel {
    Kernel::from_rows(&[
        vec![0.5, 0.0, 0.5, 0.0],
        vec![0.3, 0.0, 0.7, 0.0],
        vec![0.0, 0.6, 0.0, 0.4],
        vec![0.0, 0.2, 0.0, 0.8],
    ])
    .expect("fixture rows are stochastic")
}

/// The kernels `[Q0, Q1]` of an example.
pub fn small_example(example: &SmallExample) -> Result<Vec<Kernel>> {
    match example {
        SmallExample::TwoPoint { a, b } => {
            if !(0.0..=1.0).contains(a) || !(0.0..=1.0).contains(b) {
                return Err(Error::InvalidParameter(format!("a = {a}, b = {b} must lie in [0, 1]")));
            }
            Ok(vec![
                Kernel::from_rows(&[vec![0.0, 1.0], vec![1.0 - a, *a]])?,
                Kernel::from_rows(&[vec![*b, 1.0 - b], vec![1.0, 0.0]])?,
            ])
        }
        SmallExample::FivePoint => Ok(vec![walk_from_one_based(5, FIVE_Q0)?, walk_from_one_based(5, FIVE_Q1)?]),
        SmallExample::SevenPoint => Ok(vec![walk_from_one_based(7, SEVEN_Q0)?, walk_from_one_based(7, SEVEN_Q1)?]),
        SmallExample::AdjointPair { kernel } => {
            let q0 = kernel.clone().unwrap_or_else(nonreversible_four_state);
            let pi = stationary_measure(&q0)?;
            let q1 = adjoint_kernel(&q0, &pi)?.into_kernel()?;
            Ok(vec![q0, q1])
        }
    }
}

/// `K_i = Q_{i mod 2}`: `K_1 = Q1, K_2 = Q0, K_3 = Q1, ...`.
pub fn parity_sequence(pair: &[Kernel]) -> Result<KernelSequence> {
    if pair.len() != 2 {
        return Err(Error::InvalidParameter("a parity sequence needs exactly two kernels".into()));
    }
    KernelSequence::cyclic(pair.to_vec(), vec![1, 0])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::{classify_structure, compose};
    use crate::zoo::detailed_balance_residual;

    #[test]
    fn figure_walks_are_reversible_for_degree_measure() {
        for ex in [SmallExample::FivePoint, SmallExample::SevenPoint] {
            for k in small_example(&ex).unwrap() {
                let s = classify_structure(&k);
                assert!(s.irreducible);
                let pi = stationary_measure(&k).unwrap();
                assert!(detailed_balance_residual(&k, &pi) < 1e-15);
            }
        }
        let five = small_example(&SmallExample::FivePoint).unwrap();
        assert_eq!(five[0].space().label(0), "1");
        assert_eq!(five[0].get(0, 0), 0.5);
        assert!((five[0].get(1, 2) - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn two_point_rows() {
        let k = small_example(&SmallExample::TwoPoint { a: 0.3, b: 0.7 }).unwrap();
        assert_eq!(k[0].row(1), vec![0.7, 0.3]);
        assert_eq!(k[1].row(0), vec![0.7, 0.30000000000000004]);
    }

    #[test]
    fn adjoint_pair_product_is_reducible() {
        let pair = small_example(&SmallExample::AdjointPair { kernel: None }).unwrap();
        let s0 = classify_structure(&pair[0]);
        assert!(s0.irreducible && s0.aperiodic);
        let prod = classify_structure(&compose(&pair[0], &pair[1]).unwrap());
        assert!(!prod.irreducible);
        assert_eq!(prod.recurrent_classes, vec![vec![0, 1], vec![2, 3]]);
    }
}
