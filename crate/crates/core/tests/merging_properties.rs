use mclab_core::chain::KernelSequence;
use mclab_core::merging::{
    backward_envelopes, block_contraction_bound, doeblin_bound, pairwise_distances, uniform_conditions_certificate,
    MergingAnalysis, Metric,
};
use mclab_core::random::{random_kernel, random_measure, random_sparse_kernel, substream};
use mclab_core::zoo::{parity_sequence, small_example, SmallExample};
use mclab_core::{evolve, Kernel};
use proptest::prelude::*;

fn random_sequence(seed: u64, n: usize, len: usize, zero_prob: f64) -> KernelSequence {
    let mut rng = substream(seed, 0);
    let kernels: Vec<Kernel> = (0..len).map(|_| random_sparse_kernel(&mut rng, n, zero_prob).unwrap()).collect();
    KernelSequence::explicit(kernels).unwrap()
}

#[test]
fn extremal_pairs_dominate_arbitrary_pairs() {
    let mut pairs = 0;
    for trial in 0..100u64 {
        let n = 2 + (trial as usize % 6);
        let seq = random_sequence(trial, n, 12, 0.2);
        let d = pairwise_distances(&seq, 12).unwrap();
        let mut rng = substream(trial, 9);
        for _ in 0..10 {
            let a = random_measure(&mut rng, n, 1e-3).unwrap();
            let b = random_measure(&mut rng, n, 1e-3).unwrap();
            let mu = evolve(&a, &seq, 12).unwrap().pop().unwrap();
            let nu = evolve(&b, &seq, 12).unwrap().pop().unwrap();
            assert!(mu.tv(&nu) <= d.tv + 1e-12);
            let rel = (0..n).map(|y| (mu.get(y) / nu.get(y) - 1.0).abs()).fold(0.0, f64::max);
            assert!(rel <= d.relsup + 1e-12);
            pairs += 1;
        }
        // Some Dirac pair attains the tv distance.
        let start = |x| mclab_core::Measure::dirac(seq.space().clone(), x).unwrap();
        let mut best: f64 = 0.0;
        for x in 0..n {
            for x2 in 0..n {
                let mu = evolve(&start(x), &seq, 12).unwrap().pop().unwrap();
                let nu = evolve(&start(x2), &seq, 12).unwrap().pop().unwrap();
                best = best.max(mu.tv(&nu));
            }
        }
        assert!((best - d.tv).abs() < 1e-12);
    }
    assert_eq!(pairs, 1000);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn bounds_dominate_tv_and_tv_is_monotone(seed in any::<u64>(), n in 2usize..8, block in 1usize..5) {
        let seq = random_sequence(seed, n, 40, 0.3);
        let report = MergingAnalysis::new(1e-3, Metric::Tv, 40).block(block).run(&seq).unwrap();
        for (i, tv) in report.tv_trajectory.iter().enumerate() {
            prop_assert!((0.0..=1.0).contains(tv));
            prop_assert!(*tv <= report.doeblin_bound[i] + 1e-12);
            prop_assert!(*tv <= report.block_bound[i] + 1e-12);
        }
        for w in report.tv_trajectory.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-12);
        }
        let cert = doeblin_bound(&seq, 40).unwrap();
        prop_assert!(cert.cumulative_bound.windows(2).all(|w| w[1] <= w[0]));
        prop_assert!(report.tv_trajectory[40] <= block_contraction_bound(&seq, 40, block).unwrap() + 1e-12);
    }

    #[test]
    fn backward_envelopes_are_monotone(seed in any::<u64>(), n in 2usize..10) {
        let seq = random_sequence(seed, n, 60, 0.3);
        let env = backward_envelopes(&seq, 60).unwrap();
        prop_assert!(env.monotone);
    }
}

#[test]
fn uniform_conditions_lead_to_relsup_decrease() {
    let mut rng = substream(3, 0);
    let kernels: Vec<Kernel> = (0..3)
        .map(|_| {
            let k = random_kernel(&mut rng, 4).unwrap();
            // Keep a tridiagonal-with-wrap support so that l > 1.
            let rows: Vec<Vec<f64>> = (0..4)
                .map(|x| (0..4).map(|y| if (x + 4 - y) % 4 == 2 { 0.0 } else { k.get(x, y) }).collect())
                .collect();
            let rows: Vec<Vec<f64>> = rows.iter().map(|r| r.iter().map(|v| v / r.iter().sum::<f64>()).collect()).collect();
            Kernel::from_rows(&rows).unwrap()
        })
        .collect();
    let cert = uniform_conditions_certificate(&kernels, 10).unwrap();
    assert!(cert.satisfied);
    let ell = cert.ell.unwrap();
    let seq = KernelSequence::cyclic(kernels, vec![0, 1, 2, 1]).unwrap();
    let report = MergingAnalysis::new(1e-3, Metric::Relsup, 10 * ell * 4).run(&seq).unwrap();
    assert!(report.relsup_trajectory[10 * ell * 4] < report.relsup_trajectory[ell]);
}

#[test]
fn small_counterexamples() {
    let five = parity_sequence(&small_example(&SmallExample::FivePoint).unwrap()).unwrap();
    let r = MergingAnalysis::new(1e-6, Metric::Tv, 1000).run(&five).unwrap();
    assert!(r.tv_trajectory[500] < 1e-6);
    assert!(r.relsup_trajectory.iter().all(|v| *v >= 1.0));

    let seven = parity_sequence(&small_example(&SmallExample::SevenPoint).unwrap()).unwrap();
    let r = MergingAnalysis::new(1e-6, Metric::Tv, 1000).run(&seven).unwrap();
    assert!(r.tv_trajectory.iter().all(|v| *v >= 0.5));
    assert_eq!(r.tv_time, None);

    for a in [0.3, 0.5, 0.7] {
        for b in [0.3, 0.5, 0.7] {
            let seq = parity_sequence(&small_example(&SmallExample::TwoPoint { a, b }).unwrap()).unwrap();
            let r = MergingAnalysis::new(0.25, Metric::Tv, 200).run(&seq).unwrap();
            assert!(r.tv_time.is_some());
            assert!(r.relsup_trajectory[1..].iter().all(|v| v.is_infinite()));
        }
    }
}
