mod common;

use augdecomp_core::eso::{eso_params, verify_eso_exhaustive, verify_psi_identity};
use augdecomp_core::linalg::DenseMatrix;
use augdecomp_core::separability::{partial_separability_degree, ruszczynski_degree, separability_report};
use augdecomp_core::solvers::{
    dqam_fd_step, dqam_sqa_step, dqam_step, pcdm_full_step, pcdm_step, run, QuadraticPenalty,
};
use augdecomp_core::{Algorithm, BlockPsi, BlockVector, CompositeProblem, SolverConfig, StopRule, TauNiceSampler};
use common::*;
use rand::Rng;

fn zero_psi_problem(seed: u64, n: usize, omega: usize) -> CompositeProblem {
    let mut r = rng(seed);
    let part = random_partition(&mut r, n, 3);
    let a = random_matrix(&mut r, part, omega, 2 * n);
    CompositeProblem::feasibility(a, 1.0).unwrap()
}

fn assert_blocks_close(a: &BlockVector, b: &BlockVector, tol: f64, ctx: &str) {
    for i in 0..a.partition().num_blocks() {
        let d: f64 = a.block(i).iter().zip(b.block(i)).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
        let s: f64 = b.block(i).iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!(d <= tol * s.max(1e-300) || d == 0.0, "{ctx}: block {i} differs by {d:e} (norm {s:e})");
    }
}

#[test]
fn separability_theorem_on_random_matrices() {
    for seed in 0..50u64 {
        let mut r = rng(seed);
        let n = r.random_range(2..=10);
        let part = random_partition(&mut r, n, 3);
        let rows = r.random_range(3..15);
        let density = r.random_range(0.05..0.5);
        let a = random_sparse(&mut r, part, rows, density);
        let omega = partial_separability_degree(&a).unwrap();
        let omega_r = ruszczynski_degree(&a).unwrap();
        assert_eq!(omega, omega_r + 1, "seed {seed}");
        let rep = separability_report(&a).unwrap();
        assert_eq!(rep.omega, *rep.per_row.iter().max().unwrap());
        assert!(rep.omega >= 1 && rep.omega <= n && rep.omega_r < n);
    }
}

#[test]
fn adding_an_entry_never_lowers_omega() {
    let mut r = rng(77);
    for _ in 0..30 {
        let part = random_partition(&mut r, 6, 2);
        let a = random_sparse(&mut r, part.clone(), 8, 0.15);
        let before = partial_separability_degree(&a).unwrap();
        let mut t: Vec<(usize, usize, f64)> = a.triplets().collect();
        t.push((r.random_range(0..8), r.random_range(0..part.dim()), 1.0 + r.random::<f64>()));
        let b = augdecomp_core::BlockMatrix::from_triplets(8, part, &t, a.rhs().to_vec()).unwrap();
        assert!(partial_separability_degree(&b).unwrap() >= before);
    }
}

#[test]
fn sqa_with_lipschitz_curvature_tracks_full_pcdm() {
    for &omega in &[2usize, 4, 8] {
        for seed in 0..5u64 {
            let p = zero_psi_problem(seed * 31 + omega as u64, omega + 2, omega);
            assert_eq!(partial_separability_degree(p.matrix()).unwrap(), omega);
            let oracle = QuadraticPenalty::from_problem(&p);
            let c: Vec<DenseMatrix> = (0..p.num_blocks())
                .map(|i| DenseMatrix::identity(p.partition().size(i)).scaled(p.lipschitz()[i]))
                .collect();
            let mut xs = BlockVector::zeros(p.partition().clone());
            let mut xp = xs.clone();
            for k in 0..100 {
                xs = dqam_sqa_step(&oracle, p.psi_blocks(), &xs, 1.0 / omega as f64, &c).unwrap();
                xp = pcdm_full_step(&p, &xp, omega).unwrap();
                assert_blocks_close(&xs, &xp, 1e-12, &format!("ω {omega} seed {seed} k {k}"));
            }
        }
    }
}

#[test]
fn fd_and_hessian_sqa_reproduce_dqam() {
    for seed in 0..10u64 {
        let mut r = rng(500 + seed);
        let part = random_partition(&mut r, 5, 3);
        let a = random_matrix(&mut r, part.clone(), 3, 8);
        let psi = quadratic_psi(&mut r, &part, 0.0, 1.0);
        let p = CompositeProblem::new(a, 1.0, psi).unwrap();
        let oracle = QuadraticPenalty::from_problem(&p);
        let c: Vec<DenseMatrix> = (0..part.num_blocks())
            .map(|i| p.matrix().block(i).unwrap().gram().scaled(p.r()))
            .collect();
        let x = random_vector(&mut r, &part, 1.0);
        let theta = 0.25;
        let d = dqam_step(&p, &x, theta).unwrap();
        let fd = dqam_fd_step(&oracle, p.psi_blocks(), &x, theta).unwrap();
        let sqa = dqam_sqa_step(&oracle, p.psi_blocks(), &x, theta, &c).unwrap();
        for j in 0..part.dim() {
            let s = d.norm().max(1.0);
            assert!((d.as_slice()[j] - fd.as_slice()[j]).abs() <= 1e-10 * s);
            assert!((d.as_slice()[j] - sqa.as_slice()[j]).abs() <= 1e-12 * s);
        }
    }
}

#[test]
fn eso_and_psi_identity_by_enumeration() {
    let mut r = rng(1234);
    let mut checked = 0;
    while checked < 200 {
        let n = r.random_range(4..=8);
        let omega = r.random_range(1..=n);
        let part = random_partition(&mut r, n, 2);
        let a = random_matrix(&mut r, part.clone(), omega, n);
        let psi = if r.random_bool(0.5) { quadratic_psi(&mut r, &part, 0.0, 1.0) } else { box_psi(&mut r, &part) };
        let p = CompositeProblem::new(a, r.random_range(0.5..2.0), psi).unwrap();
        let x = random_vector(&mut r, &part, 1.0);
        let h = random_vector(&mut r, &part, 1.0);
        for tau in 1..=n {
            let params = eso_params(omega, tau, n, p.lipschitz()).unwrap();
            let e = verify_eso_exhaustive(&p, &params, &x, &h).unwrap();
            assert!(e.holds, "ESO n {n} ω {omega} τ {tau}: {} > {}", e.lhs, e.rhs);
            let s = verify_psi_identity(&p, tau, &x, &h).unwrap();
            assert!(s.holds, "Ψ identity n {n} τ {tau}: {} vs {}", s.lhs, s.rhs);
        }
        checked += 1;
    }
}

#[test]
fn full_pcdm_step_below_its_overapproximation() {
    let p = strongly_convex(8, 6, 3);
    let omega = partial_separability_degree(p.matrix()).unwrap();
    let norms = p.norms().clone().with_weights(p.lipschitz().to_vec()).unwrap();
    let mut x = BlockVector::zeros(p.partition().clone());
    for _ in 0..50 {
        let next = pcdm_full_step(&p, &x, omega).unwrap();
        let h: Vec<f64> = next.as_slice().iter().zip(x.as_slice()).map(|(a, b)| a - b).collect();
        let g = p.grad_f(&x).unwrap();
        let lin: f64 = g.as_slice().iter().zip(&h).map(|(a, b)| a * b).sum();
        let upper = p.eval_f(&x).unwrap() + lin + 0.5 * omega as f64 * norms.weighted_norm_sq(&h) + p.eval_psi(&next).unwrap();
        let actual = p.eval(&next).unwrap();
        assert!(actual <= upper + 1e-12 * upper.abs().max(1.0));
        x = next;
    }
}

#[test]
fn pcdm_expected_descent_and_untouched_blocks() {
    let p = strongly_convex(21, 8, 4);
    let n = p.num_blocks();
    let omega = partial_separability_degree(p.matrix()).unwrap();
    let mut r = rng(3);
    let x = random_vector(&mut r, p.partition(), 2.0);
    let fx = p.eval(&x).unwrap();
    for tau in [1usize, 3, 5] {
        let params = eso_params(omega, tau, n, p.lipschitz()).unwrap();
        let mut sum = 0.0;
        let reps = 1000;
        for seed in 0..reps {
            let s = TauNiceSampler::new(n, tau, seed).unwrap().draw();
            let next = pcdm_step(&p, &x, &params, &s).unwrap();
            for i in (0..n).filter(|i| !s.contains(i)) {
                let same = next.block(i).iter().zip(x.block(i)).all(|(a, b)| a.to_bits() == b.to_bits());
                assert!(same, "block {i} outside the sample moved");
            }
            sum += p.eval(&next).unwrap();
        }
        let mean = sum / reps as f64;
        assert!(mean <= fx + 1e-9 * fx.abs().max(1.0), "τ {tau}: mean {mean} > {fx}");
    }
}

#[test]
fn sampler_pair_and_singleton_frequencies() {
    let mut s = TauNiceSampler::new(3, 2, 2024).unwrap();
    let draws = 1_000_000;
    let mut pairs = [0usize; 3];
    let mut singles = [0usize; 3];
    for _ in 0..draws {
        let d = s.draw();
        assert_eq!(d.len(), 2);
        assert!(d[0] < d[1]);
        let idx = match (d[0], d[1]) {
            (0, 1) => 0,
            (0, 2) => 1,
            (1, 2) => 2,
            other => panic!("unexpected {other:?}"),
        };
        pairs[idx] += 1;
        for &i in &d {
            singles[i] += 1;
        }
    }
    for c in pairs {
        assert!((c as f64 / draws as f64 - 1.0 / 3.0).abs() <= 0.01);
    }
    for c in singles {
        assert!((c as f64 / draws as f64 - 2.0 / 3.0).abs() <= 0.01);
    }
}

#[test]
fn sampler_inclusion_is_exchangeable() {
    let (n, tau) = (10, 4);
    let mut s = TauNiceSampler::new(n, tau, 5).unwrap();
    let draws = 200_000;
    let mut hits = vec![0usize; n];
    for _ in 0..draws {
        for i in s.draw() {
            hits[i] += 1;
        }
    }
    let p = tau as f64 / n as f64;
    // 5 standard deviations
    let sd = (p * (1.0 - p) / draws as f64).sqrt();
    for h in hits {
        assert!((h as f64 / draws as f64 - p).abs() <= 5.0 * sd);
    }
}

#[test]
fn runs_are_reproducible() {
    let p = strongly_convex(99, 10, 3);
    for alg in Algorithm::ALL {
        let cfg = SolverConfig::new(alg).tau(3).seed(11).max_iters(60).stop(StopRule::IterOnly);
        let a = run(&p, &cfg).unwrap();
        let b = run(&p, &cfg).unwrap();
        assert_eq!(a.x, b.x, "{alg}");
        let fa: Vec<u64> = a.records.iter().map(|r| r.big_f.to_bits()).collect();
        let fb: Vec<u64> = b.records.iter().map(|r| r.big_f.to_bits()).collect();
        assert_eq!(fa, fb, "{alg}");
    }
}

#[test]
fn zero_psi_has_no_effect_on_dqam() {
    let p = zero_psi_problem(4, 5, 2);
    let q = CompositeProblem::new(p.matrix().clone(), 1.0, vec![BlockPsi::Zero; 5]).unwrap();
    let x = BlockVector::zeros(p.partition().clone());
    assert_eq!(dqam_step(&p, &x, 0.5).unwrap(), dqam_step(&q, &x, 0.5).unwrap());
}
