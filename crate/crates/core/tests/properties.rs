//! Property tests over randomly drawn networks and linear programs.

use gbn_core::learn::{self, LearnerConfig, Param};
use gbn_core::linalg::{self, Matrix};
use gbn_core::lp::{self, LpStandardForm};
use gbn_core::regression::EmpiricalCovariance;
use gbn_core::synth::{self, GeneratorConfig};
use gbn_core::{clime, model, Gbn};
use proptest::prelude::*;

fn network(p: usize, q: f64, seed: u64) -> Gbn {
    let mut cfg = GeneratorConfig::new(p, q, seed);
    cfg.max_rejections = 10_000;
    synth::generate_gbn(&cfg).expect("screened network")
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn covariance_and_precision_are_inverse(p in 1usize..16, q in 0.0f64..0.6, seed in any::<u64>()) {
        let m = model::covariance_of(&network(p, q, seed)).unwrap();
        let prod = m.sigma.matmul(&m.omega).unwrap();
        prop_assert!(prod.max_abs_diff(&Matrix::identity(p)) < 1e-10);
    }

    #[test]
    fn exact_covariance_recovers_the_network(p in 2usize..14, q in 0.05f64..0.5, seed in any::<u64>()) {
        let g = network(p, q, seed);
        let m = model::covariance_of(&g).unwrap();
        let cov = EmpiricalCovariance::from_matrix(m.sigma.clone(), 1);
        let cfg = LearnerConfig {
            lambda: Param::Fixed(0.0),
            support_threshold: Param::Fixed(1e-8),
            ..LearnerConfig::default()
        };
        let est = clime::clime(&cov.sigma_n, 0.0, cfg.tol).unwrap();
        let learned = learn::learn_from_estimate(&cov, &est, &cfg).unwrap();
        prop_assert_eq!(&learned.edges, g.dag().edges());
        prop_assert!(learned.b_hat.max_abs_diff(g.weights()) < 1e-7);
        prop_assert!((learned.sigma2_hat - g.common_variance().unwrap()).abs() < 1e-7);
    }

    #[test]
    fn peeling_a_terminal_matches_the_smaller_network(p in 2usize..12, q in 0.1f64..0.6, seed in any::<u64>()) {
        let g = network(p, q, seed);
        let omega = model::precision_of(&g).unwrap();
        let terminal = (0..p).find(|&i| g.dag().is_terminal(i)).unwrap();
        let (smaller, _) = model::remove_terminal(&g, terminal).unwrap();
        let direct = model::precision_of(&smaller).unwrap();
        let updated = model::marginalize_precision(&omega, terminal).unwrap();
        prop_assert!(updated.max_abs_diff(&direct) < 1e-10);
    }

    #[test]
    fn simplex_solutions_are_feasible_and_no_worse(
        m in 1usize..6,
        extra in 0usize..6,
        seed in any::<u64>(),
    ) {
        use rand::Rng;
        let n = m + extra;
        let mut rng = synth::stream(seed, synth::Purpose::Orderings);
        let a = Matrix::from_vec(m, n, (0..m * n).map(|_| rng.random_range(-2.0..2.0)).collect()).unwrap();
        let x0: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
        let c: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
        let b = a.matvec(&x0).unwrap();
        let lp = LpStandardForm::new(c.clone(), a.clone(), b.clone()).unwrap();
        let sol = lp::solve_lp(&lp, lp::DEFAULT_TOL).unwrap();
        prop_assert!(sol.x.iter().all(|&v| v >= 0.0));
        let ax = a.matvec(&sol.x).unwrap();
        let r: Vec<f64> = ax.iter().zip(&b).map(|(u, v)| u - v).collect();
        prop_assert!(linalg::max_abs(&r) < 1e-7 * (1.0 + linalg::max_abs(&b)));
        prop_assert!(sol.objective <= linalg::dot(&c, &x0) + 1e-9);
    }

    #[test]
    fn sampling_is_reproducible(p in 1usize..8, n in 2usize..40, seed in any::<u64>()) {
        let g = network(p, 0.3, seed);
        let a = synth::sample_data(&g, n, synth::derive_seed(seed, &[1]));
        let b = synth::sample_data(&g, n, synth::derive_seed(seed, &[1]));
        prop_assert_eq!(a.x, b.x);
        prop_assert_eq!(network(p, 0.3, seed), g);
    }
}
