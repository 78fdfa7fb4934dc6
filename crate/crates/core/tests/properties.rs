mod common;

use augdecomp_core::analysis::{geometric_decay_bound, q_dqam, q_pcdm, speedup_ratio, t_value};
use augdecomp_core::blockstruct::{BlockNorms, BlockVector};
use augdecomp_core::eso::eso_beta;
use augdecomp_core::separability::{partial_separability_degree, ruszczynski_degree};
use augdecomp_core::TauNiceSampler;
use common::*;
use proptest::prelude::*;

fn n_omega_tau() -> impl Strategy<Value = (usize, usize, usize)> {
    (1usize..40).prop_flat_map(|n| (Just(n), 1..=n, 1..=n))
}

proptest! {
    #[test]
    fn beta_monotone_and_bounded((n, omega, tau) in n_omega_tau()) {
        let b = eso_beta(omega, tau, n).unwrap();
        prop_assert!(b >= 1.0 && b <= omega as f64 + 1e-12);
        if tau < n {
            prop_assert!(eso_beta(omega, tau + 1, n).unwrap() >= b);
        }
        if omega < n {
            prop_assert!(eso_beta(omega + 1, tau, n).unwrap() >= b);
        }
        if tau == n {
            prop_assert!((b - omega as f64).abs() <= 1e-12 * omega as f64);
        }
        if tau == 1 {
            prop_assert_eq!(b, 1.0);
        }
    }

    #[test]
    fn work_per_epoch_nonincreasing((n, omega, tau) in n_omega_tau()) {
        prop_assume!(tau < n);
        let a = n as f64 / tau as f64 * eso_beta(omega, tau, n).unwrap();
        let b = n as f64 / (tau + 1) as f64 * eso_beta(omega, tau + 1, n).unwrap();
        prop_assert!(b <= a * (1.0 + 1e-12));
    }

    #[test]
    fn t_increasing_over_multiples_of_p(n in 2usize..200, p_frac in 0.0f64..1.0, w_frac in 0.0f64..1.0) {
        let p = 1 + ((n - 1) as f64 * p_frac) as usize;
        let omega = 1 + ((n - 1) as f64 * w_frac) as usize;
        let mut k = 1;
        while (k + 1) * p <= n {
            let a = t_value(n, p, omega, k * p).unwrap();
            let b = t_value(n, p, omega, (k + 1) * p).unwrap();
            if omega > 1 {
                prop_assert!(b > a, "T({}) = {b} ≤ T({}) = {a}", (k + 1) * p, k * p);
            } else {
                prop_assert!(b >= a * (1.0 - 1e-12));
            }
            k += 1;
        }
    }

    #[test]
    fn q_values_inside_unit_interval(mu_f in 0.0f64..1.0, extra in 1e-6f64..1.0, omega in 1usize..50, lp in 1e-3f64..1e3) {
        let mu_big_f = mu_f + extra;
        // μ_f(L) ≤ 1 ≤ ω
        let q = q_pcdm(mu_big_f, mu_f, omega as f64).unwrap();
        prop_assert!(q > 0.0 && q < 1.0);
        if omega >= 2 {
            let q = q_dqam(mu_big_f, lp, omega as f64).unwrap();
            prop_assert!(q > 0.0 && q < 1.0);
        }
    }

    #[test]
    fn pcdm_rate_dominates_dqam(omega in 2usize..40, l in 0.1f64..10.0, mu_frac in 1e-6f64..1.0) {
        // equal block constants: μ(L) = μ(e)/L
        let mu_e = mu_frac * l;
        let qp = q_pcdm(mu_e / l, mu_e / l, omega as f64).unwrap();
        let qd = q_dqam(mu_e, l, omega as f64).unwrap();
        prop_assert!(qp <= qd);
    }

    #[test]
    fn speedup_lower_bound(omega in 2usize..40, lp in 0.1f64..10.0, lbar_frac in 0.1f64..1.0, mu in 1e-6f64..1e-1) {
        let lbar = lp * lbar_frac;
        let s = speedup_ratio(omega as f64, lp, lbar, mu, mu).unwrap();
        let w = omega as f64;
        let floor = 16.0 * (w - 1.0).powi(3) / w * lp / lbar;
        prop_assert!(s.ratio >= floor * (1.0 - 1e-12));
        prop_assert!((s.lower_bound - floor).abs() <= 1e-12 * floor);
    }

    #[test]
    fn geometric_bound_is_sufficient(gap0 in 1e-3f64..1e6, eps_frac in 1e-9f64..0.99, gamma in 1e-4f64..1.0) {
        let eps = gap0 * eps_frac;
        let k = geometric_decay_bound(gap0, eps, gamma).unwrap();
        prop_assert!((1.0 - gamma).powf(k as f64) * gap0 <= eps * (1.0 + 1e-12));
    }

    #[test]
    fn strong_convexity_scales_inversely(seed in 0u64..1000, t in 0.1f64..10.0) {
        let p = strongly_convex(seed, 4, 2);
        let w = p.lipschitz().to_vec();
        let base = p.strong_convexity_constants(&w).unwrap();
        let tw: Vec<f64> = w.iter().map(|v| v * t).collect();
        let scaled = p.strong_convexity_constants(&tw).unwrap();
        let expect = base.rescaled(t);
        prop_assert!(rel_diff(scaled.mu_big_f, expect.mu_big_f) <= 1e-9);
        prop_assert!(rel_diff(scaled.mu_f, expect.mu_f) <= 1e-9);
        prop_assert!(rel_diff(scaled.mu_psi, expect.mu_psi) <= 1e-12);
    }

    #[test]
    fn omega_is_neighbors_plus_one(seed in 0u64..u64::MAX, n in 1usize..10, rows in 1usize..12, density in 0.02f64..0.6) {
        let mut r = rng(seed);
        let part = random_partition(&mut r, n, 3);
        let a = random_sparse(&mut r, part, rows, density);
        prop_assert_eq!(partial_separability_degree(&a).unwrap(), ruszczynski_degree(&a).unwrap() + 1);
    }

    #[test]
    fn same_seed_same_draws(n in 1usize..30, tau_frac in 0.0f64..1.0, seed in any::<u64>()) {
        let tau = 1 + ((n - 1) as f64 * tau_frac) as usize;
        let mut a = TauNiceSampler::new(n, tau, seed).unwrap();
        let mut b = TauNiceSampler::new(n, tau, seed).unwrap();
        for _ in 0..20 {
            let d = a.draw();
            prop_assert_eq!(d.len(), tau);
            prop_assert!(d.windows(2).all(|w| w[0] < w[1]));
            prop_assert!(d.iter().all(|&i| i < n));
            prop_assert_eq!(d, b.draw());
        }
    }

    #[test]
    fn weighted_norm_matches_definition(seed in any::<u64>(), n in 1usize..8) {
        let mut r = rng(seed);
        let part = random_partition(&mut r, n, 3);
        let w: Vec<f64> = (0..n).map(|i| 0.5 + i as f64).collect();
        let norms = BlockNorms::unit(part.clone()).with_weights(w.clone()).unwrap();
        let x: BlockVector = random_vector(&mut r, &part, 3.0);
        let direct: f64 = (0..n).map(|i| w[i] * x.block(i).iter().map(|v| v * v).sum::<f64>()).sum();
        prop_assert!(rel_diff(norms.weighted_norm_sq(x.as_slice()), direct) <= 1e-14);
    }

    #[test]
    fn block_views_reassemble(seed in any::<u64>(), n in 1usize..8) {
        let mut r = rng(seed);
        let part = random_partition(&mut r, n, 3);
        let a = random_sparse(&mut r, part.clone(), 6, 0.3);
        let dense = a.to_dense();
        let cols = part.dim();
        let mut rebuilt = vec![0.0; dense.len()];
        for i in 0..n {
            let b = a.block(i).unwrap().to_dense();
            let k = part.size(i);
            let off = part.range(i).start;
            for row in 0..a.rows() {
                for j in 0..k {
                    rebuilt[row * cols + off + j] += b[row * k + j];
                }
            }
        }
        prop_assert_eq!(rebuilt, dense);
    }
}
