use mclab_core::chain::{invariance_residual, KernelSequence};
use mclab_core::random::{random_kernel, random_measure, random_reversible_kernel, random_sparse_kernel, substream};
use mclab_core::{
    adjoint_kernel, classify_structure, compose, contraction_coefficient, evolve, product, stationary_measure, Kernel,
    Order,
};
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::seq::SliceRandom;

fn kernel_strategy(max_size: usize) -> impl Strategy<Value = Kernel> {
    (1..=max_size, any::<u64>(), 0.0..0.7f64).prop_map(|(n, seed, zero_prob)| {
        let mut rng = substream(seed, 0);
        random_sparse_kernel(&mut rng, n, zero_prob).unwrap()
    })
}

fn row_tv_limit(k: &Kernel, power: u32) -> f64 {
    let m = k.matrix().pow(power);
    mclab_core::linalg::max_row_tv(&m)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn constructed_rows_sum_to_one(k in kernel_strategy(12)) {
        for x in 0..k.size() {
            let s: f64 = k.row(x).iter().sum();
            prop_assert!((s - 1.0).abs() <= 1e-12);
            prop_assert!(k.row(x).iter().all(|v| *v >= 0.0));
        }
    }

    #[test]
    fn contraction_is_submultiplicative(seed in any::<u64>(), n in 2usize..10) {
        let mut rng = substream(seed, 1);
        let a = random_sparse_kernel(&mut rng, n, 0.4).unwrap();
        let b = random_sparse_kernel(&mut rng, n, 0.4).unwrap();
        let ab = compose(&a, &b).unwrap();
        prop_assert!(contraction_coefficient(&ab) <= contraction_coefficient(&a) * contraction_coefficient(&b) + 1e-12);
    }

    #[test]
    fn forward_product_is_a_compose_fold(seed in any::<u64>(), n in 1usize..7, len in 0usize..8) {
        let mut rng = substream(seed, 2);
        let kernels: Vec<Kernel> = (0..len.max(1)).map(|_| random_kernel(&mut rng, n).unwrap()).collect();
        let seq = KernelSequence::explicit(kernels.clone()).unwrap();
        let len = len as i64;
        let forward = product(&seq, 0, len, Order::Forward).unwrap();
        let mut fold = Kernel::identity(seq.space().clone());
        for i in 1..=len {
            fold = compose(&fold, seq.kernel(i).unwrap()).unwrap();
        }
        prop_assert_eq!(forward.matrix(), fold.matrix());
        let backward = product(&seq, 0, len, Order::Backward).unwrap();
        let mut fold = Kernel::identity(seq.space().clone());
        for i in 1..=len {
            fold = compose(seq.kernel(i).unwrap(), &fold).unwrap();
        }
        prop_assert_eq!(backward.matrix(), fold.matrix());
    }

    #[test]
    fn structure_is_invariant_under_relabeling(k in kernel_strategy(8), seed in any::<u64>()) {
        let mut perm: Vec<usize> = (0..k.size()).collect();
        perm.shuffle(&mut substream(seed, 3));
        let a = classify_structure(&k);
        let b = classify_structure(&k.permuted(&perm).unwrap());
        prop_assert_eq!(a.sia, b.sia);
        prop_assert_eq!(a.irreducible, b.irreducible);
        prop_assert_eq!(a.period, b.period);
        prop_assert_eq!(a.recurrent_classes.len(), b.recurrent_classes.len());
    }

    #[test]
    fn adjoint_twice_is_identity(seed in any::<u64>(), n in 2usize..9) {
        let mut rng = substream(seed, 4);
        let k = random_sparse_kernel(&mut rng, n, 0.3).unwrap();
        prop_assume!(classify_structure(&k).irreducible);
        let pi = stationary_measure(&k).unwrap();
        let once = adjoint_kernel(&k, &pi).unwrap().into_kernel().unwrap();
        let twice = adjoint_kernel(&once, &pi).unwrap().into_kernel().unwrap();
        prop_assert!(twice.max_abs_diff(&k) <= 1e-12);
    }

    #[test]
    fn stationary_trajectory_is_constant(seed in any::<u64>(), n in 2usize..8) {
        let mut rng = substream(seed, 5);
        let (k, pi) = random_reversible_kernel(&mut rng, n).unwrap();
        let path = evolve(&pi, &KernelSequence::constant(k), 50).unwrap();
        prop_assert!(path.iter().all(|mu| mu.max_abs_diff(&pi) <= 1e-12));
    }

    #[test]
    fn evolve_matches_product_rows(seed in any::<u64>(), n in 2usize..7) {
        let mut rng = substream(seed, 6);
        let kernels: Vec<Kernel> = (0..10).map(|_| random_kernel(&mut rng, n).unwrap()).collect();
        let seq = KernelSequence::explicit(kernels).unwrap();
        let mu0 = random_measure(&mut rng, n, 0.0).unwrap();
        let path = evolve(&mu0, &seq, 10).unwrap();
        let p = product(&seq, 0, 10, Order::Forward).unwrap();
        let direct = DMatrix::from_row_slice(1, n, mu0.weights()) * p.matrix();
        for y in 0..n {
            prop_assert!((path[10].get(y) - direct[(0, y)]).abs() <= 1e-12);
        }
    }
}

#[test]
fn stationary_residual_on_random_irreducible_kernels() {
    let mut rng = substream(2024, 0);
    let mut checked = 0;
    let mut worst: f64 = 0.0;
    while checked < 1000 {
        let n = 1 + checked % 12;
        let zero_prob = [0.0, 0.3, 0.6][checked % 3];
        let k = random_sparse_kernel(&mut rng, n, zero_prob).unwrap();
        if !classify_structure(&k).irreducible {
            continue;
        }
        let pi = stationary_measure(&k).unwrap();
        worst = worst.max(invariance_residual(&k, &pi).unwrap());
        checked += 1;
    }
    assert!(worst <= 1e-12, "worst residual {worst:e}");
}

#[test]
fn sia_matches_limit_on_two_state_grid() {
    for i in 0..=20 {
        for j in 0..=20 {
            let (a, b) = (i as f64 / 20.0, j as f64 / 20.0);
            let k = Kernel::from_rows(&[vec![1.0 - a, a], vec![b, 1.0 - b]]).unwrap();
            let limit = row_tv_limit(&k, 400) < 1e-8;
            assert_eq!(classify_structure(&k).sia, limit, "a = {a}, b = {b}");
        }
    }
}

/// Random support pattern with positive entries at least 0.1, so that K^400
/// has either merged to 1e-8 or is genuinely not SIA.
fn bounded_sparse_kernel(rng: &mut impl rand::Rng, n: usize, zero_prob: f64) -> Kernel {
    loop {
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| {
                let raw: Vec<f64> =
                    (0..n).map(|_| if rng.random::<f64>() < zero_prob { 0.0 } else { rng.random_range(0.3..1.0) }).collect();
                let s: f64 = raw.iter().sum();
                raw.iter().map(|v| if s > 0.0 { v / s } else { 0.0 }).collect()
            })
            .collect();
        if rows.iter().all(|r| r.iter().sum::<f64>() > 0.0) {
            return Kernel::from_rows(&rows).unwrap();
        }
    }
}

#[test]
fn sia_matches_limit_on_random_three_state_kernels() {
    let mut rng = substream(77, 0);
    for trial in 0..500 {
        let k = bounded_sparse_kernel(&mut rng, 3, [0.3, 0.5, 0.6][trial % 3]);
        let limit = row_tv_limit(&k, 400) < 1e-8;
        assert_eq!(classify_structure(&k).sia, limit, "trial {trial}: {:?}", k.rows());
    }
}

#[test]
fn stationary_measure_is_relabeling_equivariant() {
    let mut rng = substream(5, 0);
    for _ in 0..50 {
        let k = random_kernel(&mut rng, 6).unwrap();
        let mut perm: Vec<usize> = (0..6).collect();
        perm.shuffle(&mut rng);
        let pi = stationary_measure(&k).unwrap();
        let pi_perm = stationary_measure(&k.permuted(&perm).unwrap()).unwrap();
        assert!(pi.permuted(&perm).unwrap().max_abs_diff(&pi_perm) < 1e-13);
    }
}
