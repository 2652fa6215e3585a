use mclab_core::chain::KernelSequence;
use mclab_core::linalg::symmetric_eigen_desc;
use mclab_core::random::{random_kernel, random_measure, random_reversible_kernel, substream};
use mclab_core::singular::{homogeneous_bounds, sigma_via_pi_kernel, step_sigma, thsing_bounds, MeasureTrajectory};
use mclab_core::zoo::{constant_rate_bd, random_constant_rates, StickPair};
use mclab_core::{Kernel, Measure};
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::seq::SliceRandom;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn reversible_sigma_is_second_absolute_eigenvalue(seed in any::<u64>(), n in 2usize..9) {
        let (k, pi) = random_reversible_kernel(&mut substream(seed, 0), n).unwrap();
        let s = DMatrix::from_fn(n, n, |x, y| pi.get(x).sqrt() * k.get(x, y) / pi.get(y).sqrt());
        let (values, _) = symmetric_eigen_desc(&s);
        let second = values[1..].iter().map(|v| v.abs()).fold(0.0, f64::max);
        prop_assert!((step_sigma(&k, &pi, &pi).unwrap() - second).abs() <= 1e-10);
    }

    #[test]
    fn svd_and_pi_kernel_routes_agree(seed in any::<u64>(), n in 2usize..9) {
        let mut rng = substream(seed, 1);
        let k = random_kernel(&mut rng, n).unwrap();
        let mu = random_measure(&mut rng, n, 1e-2).unwrap();
        let next = mu.step(&k).unwrap();
        let a = step_sigma(&k, &mu, &next).unwrap();
        let b = sigma_via_pi_kernel(&k, &mu, &next).unwrap();
        prop_assert!((a - b).abs() <= 1e-9);
    }

    #[test]
    fn bounds_are_relabeling_invariant(seed in any::<u64>(), n in 2usize..7) {
        let mut rng = substream(seed, 2);
        let kernels: Vec<Kernel> = (0..8).map(|_| random_kernel(&mut rng, n).unwrap()).collect();
        let mu0 = random_measure(&mut rng, n, 1e-2).unwrap();
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut rng);
        let a = thsing_bounds(&KernelSequence::explicit(kernels.clone()).unwrap(), &mu0, 8).unwrap();
        let permuted: Vec<Kernel> = kernels.iter().map(|k| k.permuted(&perm).unwrap()).collect();
        let b = thsing_bounds(&KernelSequence::explicit(permuted).unwrap(), &mu0.permuted(&perm).unwrap(), 8).unwrap();
        for (s, t) in a.sigmas.iter().zip(&b.sigmas) {
            prop_assert!((s - t).abs() <= 1e-10);
        }
        for step in 0..=8 {
            for (i, &p) in perm.iter().enumerate() {
                prop_assert!((a.tv_bound[step][p] - b.tv_bound[step][i]).abs() <= 1e-10 * a.tv_bound[step][p]);
                prop_assert!((a.tv_exact[step][p] - b.tv_exact[step][i]).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn bounds_dominate_on_random_sequences(seed in any::<u64>(), n in 2usize..8) {
        let mut rng = substream(seed, 3);
        let kernels: Vec<Kernel> = (0..30).map(|_| random_kernel(&mut rng, n).unwrap()).collect();
        let mu0 = random_measure(&mut rng, n, 1e-3).unwrap();
        let r = thsing_bounds(&KernelSequence::explicit(kernels).unwrap(), &mu0, 30).unwrap();
        prop_assert_eq!(r.violations(1e-12), 0);
        prop_assert!(r.sigmas.iter().all(|s| (0.0..=1.0 + 1e-12).contains(s)));
        prop_assert!(r.sigma_product.windows(2).all(|w| w[1] <= w[0] + 1e-15));
    }
}

#[test]
fn trajectories_are_consistent() {
    let (k, _) = random_reversible_kernel(&mut substream(4, 0), 5).unwrap();
    let mu0 = Measure::dirac(k.space().clone(), 0).unwrap().step(&k).unwrap().step(&k).unwrap();
    let t = MeasureTrajectory::new(&KernelSequence::constant(k.clone()), &mu0, 20).unwrap();
    for w in t.mu.windows(2) {
        assert!(w[0].step(&k).unwrap().max_abs_diff(&w[1]) <= 1e-12);
    }
}

#[test]
fn two_state_homogeneous_bound() {
    let k = Kernel::from_rows(&[vec![0.7, 0.3], vec![0.3, 0.7]]).unwrap();
    let mu0 = Measure::new(k.space().clone(), vec![0.8, 0.2]).unwrap();
    let r = homogeneous_bounds(&k, &mu0, 60).unwrap();
    assert_eq!(r.violations(1e-12), 0);
    // Closed form: mu_n(0) = 1/2 + (0.3)(0.4)^n, pi uniform.
    for (n, exact) in r.stationary_exact.iter().enumerate() {
        let mu = 0.5 + 0.3 * 0.4f64.powi(n as i32);
        assert!((exact[0] - (0.5 / mu - 1.0).abs()).abs() < 1e-12);
    }
    let u = Measure::uniform(k.space().clone());
    let r = homogeneous_bounds(&k, &u, 30).unwrap();
    assert_eq!(r.violations(1e-12), 0);
}

#[test]
fn stationary_start_gives_constant_sigmas() {
    let k = constant_rate_bd(6, 0.5, 0.3, 0.2).unwrap();
    let pi = mclab_core::stationary_measure(&k).unwrap();
    let r = thsing_bounds(&KernelSequence::constant(k), &pi, 25).unwrap();
    assert!(r.sigmas.iter().all(|s| (s - r.sigmas[0]).abs() < 1e-12));
}

#[test]
fn families_respect_the_bounds() {
    for trial in 0..20u64 {
        let mut rng = substream(trial, 5);
        let kernels: Vec<Kernel> = (0..100)
            .map(|_| {
                let (p, q, r) = random_constant_rates(&mut rng, 1.2, 2.0);
                constant_rate_bd(10, p, q, r).unwrap()
            })
            .collect();
        let u = Measure::uniform(kernels[0].space().clone());
        let report = thsing_bounds(&KernelSequence::explicit(kernels).unwrap(), &u, 100).unwrap();
        assert_eq!(report.violations(1e-12), 0);

        let pair = StickPair::new(7, 0.6, 0.3, 0.1, 0.2, 0.5).unwrap();
        let (q1, q2) = pair.kernels().unwrap();
        let seq = KernelSequence::iid(vec![q1, q2], vec![0.5, 0.5], trial).unwrap();
        let u = Measure::uniform(seq.space().clone());
        assert_eq!(thsing_bounds(&seq, &u, 100).unwrap().violations(1e-12), 0);
    }
}
