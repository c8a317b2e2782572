//! Structural invariants of the operators and the rank properties of
//! activations and repeated diffusion.

use kgcn_core::graph::{build_graph, connected_components, diffusion, erdos_renyi, DiffusionKind};
use kgcn_core::krylov::{block_krylov_matrix, krylov_grade};
use kgcn_core::linalg::{gemm, numerical_rank, spectrum, SpectrumMethod};
use kgcn_core::rng::{derive_seed, normal_matrix, seeded};
use kgcn_core::selftest::{diffusion_limit_check, pair_rank_check};
use rand::Rng;

#[test]
fn renormalized_spectrum_top_is_one_with_component_multiplicity() {
    let mut rng = seeded(1);
    for t in 0..12u64 {
        let n = rng.random_range(20..=500);
        let p = rng.random_range(0.2..4.0) / n as f64;
        let g = erdos_renyi(n, p, derive_seed(7, t)).unwrap();
        let (k, _) = connected_components(&g);
        let l = diffusion(&g, DiffusionKind::RenormalizedAdjacency).matrix;
        let ev = spectrum(&l, SpectrumMethod::DenseFull).unwrap();
        let max = *ev.last().unwrap();
        assert!((max - 1.0).abs() < 1e-8, "n={n}: top eigenvalue {max}");
        assert!(ev.iter().all(|&v| v > -1.0 && v <= 1.0 + 1e-8), "n={n}");
        let mult = ev.iter().filter(|&&v| (v - 1.0).abs() <= 1e-8).count();
        assert_eq!(mult, k, "n={n}");
    }
}

#[test]
fn renormalized_operator_is_symmetric_and_nonnegative() {
    for seed in 0..10 {
        let g = erdos_renyi(80, 0.05, seed).unwrap();
        let l = diffusion(&g, DiffusionKind::RenormalizedAdjacency).matrix;
        assert!(l.is_symmetric());
        assert_eq!(l, l.transpose());
        assert!(l.values().iter().all(|&v| v > 0.0));
    }
}

#[test]
fn laplacian_is_positive_semidefinite() {
    let g = erdos_renyi(60, 0.08, 3).unwrap();
    for kind in [DiffusionKind::Laplacian, DiffusionKind::NormalizedLaplacian] {
        let ev = spectrum(&diffusion(&g, kind).matrix, SpectrumMethod::DenseFull).unwrap();
        assert!(ev[0] > -1e-12, "{kind:?}: {}", ev[0]);
    }
}

#[test]
fn rank_of_transpose_matches() {
    let mut rng = seeded(5);
    for _ in 0..20 {
        let r = rng.random_range(1..=6);
        let a = normal_matrix(rng.random_range(6..30), r, 1.0, &mut rng);
        let b = normal_matrix(r, rng.random_range(6..30), 1.0, &mut rng);
        let m = gemm(&a, &b).unwrap();
        assert_eq!(numerical_rank(&m, None).unwrap(), r);
        assert_eq!(numerical_rank(&m.transpose(), None).unwrap(), r);
    }
}

#[test]
fn krylov_rank_is_constant_past_the_grade() {
    let mut rng = seeded(9);
    for t in 0..15u64 {
        let n = rng.random_range(10..=100);
        let g = if t % 3 == 0 {
            // Disjoint cliques have few distinct eigenvalues, so the grade
            // is reached well before max_m.
            let size = rng.random_range(3..=6);
            let mut edges = Vec::new();
            for c in 0..n / size {
                for a in 0..size {
                    for b in a + 1..size {
                        edges.push((c * size + a, c * size + b));
                    }
                }
            }
            build_graph(&edges, n).unwrap()
        } else {
            erdos_renyi(n, 0.1, derive_seed(11, t)).unwrap()
        };
        let l = diffusion(&g, DiffusionKind::RenormalizedAdjacency).matrix;
        let x = normal_matrix(n, 2, 1.0, &mut rng);
        let grade = krylov_grade(&l, &x, 12, None).unwrap();
        if !grade.stabilized {
            continue;
        }
        let base = numerical_rank(&block_krylov_matrix(&l, &x, grade.m).unwrap(), None).unwrap();
        for j in grade.m..grade.m + 4 {
            let r = numerical_rank(&block_krylov_matrix(&l, &x, j).unwrap(), None).unwrap();
            assert_eq!(r, base, "n={n} grade={} j={j}", grade.m);
        }
    }
}

#[test]
fn tanh_restores_and_relu_keeps_dependent_pairs() {
    let r = pair_rank_check(1000, 2).unwrap();
    assert!(r.tanh_restored >= 0.99, "tanh {}", r.tanh_restored);
    assert_eq!(r.relu_positive_kept, 1.0);
    // A negative coefficient splits the support, so ReLU separates the pair.
    assert!(r.relu_negative_restored > 0.9, "{}", r.relu_negative_restored);
}

#[test]
fn repeated_diffusion_collapses_to_component_count() {
    let cases = diffusion_limit_check(20, 500, 4).unwrap();
    for (i, c) in cases.iter().enumerate() {
        assert_eq!(c.components, i % 3 + 1);
        assert!(c.n_nodes <= 200);
        assert!(c.power_rank <= c.components, "{c:?}");
        assert_eq!(c.unit_multiplicity, c.components, "{c:?}");
    }
}

#[test]
fn gaussian_block_is_full_rank() {
    let x = normal_matrix(1000, 500, 1.0, &mut seeded(3));
    assert_eq!(numerical_rank(&x, None).unwrap(), 500);
}
