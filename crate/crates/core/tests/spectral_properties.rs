use mclab_core::random::substream;
use mclab_core::singular::step_sigma;
use mclab_core::spectral::{comparison_check, form_comparison, relative_deviation, srw_spectrum, weighted_spectrum};
use mclab_core::zoo::{graph_kernel, lazy_stick, random_regular, random_weights};
use mclab_core::{product, KernelSequence, Order};
use proptest::prelude::*;
use rand::Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn weighted_sigma_matches_singular_route(seed in any::<u64>(), n in 2usize..20, b in 1.0..6.0f64) {
        let mut rng = substream(seed, 0);
        let g = random_weights(&lazy_stick(n).unwrap(), b, &mut rng).unwrap();
        let (k, pi) = graph_kernel(&g).unwrap();
        let spec = weighted_spectrum(&g).unwrap();
        prop_assert!((spec.sigma - step_sigma(&k, &pi, &pi).unwrap()).abs() <= 1e-10);
        prop_assert!((0.0..=1.0).contains(&spec.sigma));
    }

    #[test]
    fn gap_and_form_comparisons_hold(seed in any::<u64>(), n in 4usize..24, b in 1.0..4.0f64) {
        let mut rng = substream(seed, 1);
        let base = if seed % 2 == 0 { lazy_stick(n).unwrap() } else { random_regular(2 * (n / 2) + 4, 3, false, &mut rng).unwrap() };
        let g = random_weights(&base, b, &mut rng).unwrap();
        let r = comparison_check(&g, b, 10 * g.size() * g.size()).unwrap();
        prop_assert!(r.gap_inequality_holds);
        prop_assert_eq!(r.bound_violations(1e-12), 0);
        let f: Vec<f64> = (0..g.size()).map(|_| rng.random_range(-1.0..1.0)).collect();
        prop_assert!(form_comparison(&g, &f, b).unwrap().holds(1e-12));
    }
}

#[test]
fn spectral_deviation_matches_matrix_powers() {
    let mut rng = substream(3, 0);
    let g = random_weights(&lazy_stick(6).unwrap(), 3.0, &mut rng).unwrap();
    let (k, pi) = graph_kernel(&g).unwrap();
    let times = [0, 1, 2, 7, 30];
    let spectral = relative_deviation(&g, &times).unwrap();
    let seq = KernelSequence::constant(k);
    for (t, s) in times.iter().zip(&spectral) {
        let p = product(&seq, 0, *t as i64, Order::Forward).unwrap();
        let mut direct: f64 = 0.0;
        for x in 0..7 {
            for y in 0..7 {
                direct = direct.max((p.get(x, y) / pi.get(y) - 1.0).abs());
            }
        }
        assert!((direct - s).abs() < 1e-10 * direct.max(1.0), "t = {t}: {direct} vs {s}");
    }
}

#[test]
fn unit_weights_give_equality() {
    let g = random_regular(20, 3, true, &mut substream(1, 0)).unwrap();
    let r = comparison_check(&g, 1.0, 100).unwrap();
    assert!((r.weighted.sigma - r.srw.sigma).abs() < 1e-12);
    assert!((r.weighted.gap - r.gap_lower_bound).abs() < 1e-12);
}

#[test]
fn srw_sigma_is_extreme_eigenvalue() {
    for n in [3, 9, 17] {
        let s = srw_spectrum(&lazy_stick(n).unwrap()).unwrap();
        assert!((s.sigma - s.beta_1.max(-s.beta_minus)).abs() < 1e-15);
        assert_eq!(s.eigenvalues.len(), n + 1);
        assert!((s.eigenvalues[0] - 1.0).abs() < 1e-12);
    }
}

#[test]
fn expander_bound_decays_geometrically() {
    let mut rng = substream(7, 0);
    let g = random_regular(40, 3, false, &mut rng).unwrap();
    let eps = srw_spectrum(&g).unwrap().gap;
    let weighted = random_weights(&g, 2.0, &mut rng).unwrap();
    let r = comparison_check(&weighted, 2.0, 2000).unwrap();
    for (t, b) in r.times.iter().zip(&r.bound) {
        let expected = 2.0 * g.total_degree() as f64 / 3.0 * (1.0 - eps / 4.0).powf(*t as f64);
        assert!((b - expected).abs() <= 1e-12 * expected.max(1e-300));
    }
    assert_eq!(r.bound_violations(1e-12), 0);
}
