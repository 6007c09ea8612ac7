//! Randomized invariants over small instances.

use hbcodebook::channel::{array_response, build_dictionary, generate_channel, PathConfig};
use hbcodebook::codebook::{
    combiner_codebook, fast_coherence, partition_codebook, pilot_codebook, s_matrix, DesignResult,
};
use hbcodebook::estimator::{omp, OmpConfig};
use hbcodebook::numerics::{dft_matrix, kron, mutual_coherence, numerical_rank, quantize_phases, CMatrix};
use hbcodebook::sensing::{assemble_phi, build_schedule, SnapshotSchedule};
use num_complex::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn entry() -> impl Strategy<Value = Complex64> {
    (-1.0f64..1.0, -1.0f64..1.0).prop_map(|(re, im)| Complex64::new(re, im))
}

fn matrix(max_rows: usize, max_cols: usize) -> impl Strategy<Value = CMatrix> {
    (1..=max_rows, 1..=max_cols).prop_flat_map(|(r, c)| {
        prop::collection::vec(entry(), r * c).prop_map(move |d| CMatrix::from_row_major(r, c, d).unwrap())
    })
}

fn permutation(n: usize) -> impl Strategy<Value = Vec<usize>> {
    Just((0..n).collect::<Vec<_>>()).prop_shuffle()
}

/// (n_t, l_t) with l_t | n_t and n_t ≤ 8.
fn tx_shape() -> impl Strategy<Value = (usize, usize)> {
    prop::sample::select(vec![
        (2, 1),
        (2, 2),
        (4, 1),
        (4, 2),
        (4, 4),
        (6, 2),
        (6, 3),
        (8, 2),
        (8, 4),
    ])
}

/// Pilot subset of `0..l_t` that contains 0, of size `m_x`.
fn pilot_subset(l_t: usize) -> impl Strategy<Value = Vec<usize>> {
    (1..=l_t).prop_flat_map(move |m_x| {
        Just((1..l_t).collect::<Vec<_>>()).prop_shuffle().prop_map(move |rest| {
            let mut s: Vec<usize> = std::iter::once(0).chain(rest.into_iter().take(m_x - 1)).collect();
            s.sort_unstable();
            s
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn dft_rows_are_orthogonal(n in 1usize..40) {
        let u = dft_matrix(n).unwrap();
        let g = u.matmul(&u.adjoint()).unwrap();
        let target = CMatrix::identity(n).scale(Complex64::new(n as f64, 0.0));
        prop_assert!(g.max_abs_diff(&target).unwrap() < 1e-10);
    }

    #[test]
    fn coherence_ignores_column_scaling(
        a in matrix(6, 5).prop_filter("two nonzero columns", |a| a.cols() >= 2 && a.column_norms().iter().all(|&n| n > 1e-3)),
        scales in prop::collection::vec((0.1f64..10.0, 0.0f64..std::f64::consts::TAU), 5),
    ) {
        let scaled = CMatrix::from_fn(a.rows(), a.cols(), |r, c| {
            let (m, p) = scales[c];
            a[(r, c)] * Complex64::from_polar(m, p)
        });
        let mu = mutual_coherence(&a).unwrap().value();
        let mu_s = mutual_coherence(&scaled).unwrap().value();
        prop_assert!((mu - mu_s).abs() < 1e-12, "{} vs {}", mu, mu_s);
    }

    #[test]
    fn kron_is_associative(a in matrix(3, 3), b in matrix(3, 2), c in matrix(2, 3)) {
        let left = kron(&kron(&a, &b).unwrap(), &c).unwrap();
        let right = kron(&a, &kron(&b, &c).unwrap()).unwrap();
        prop_assert!(left.max_abs_diff(&right).unwrap() < 1e-12);
    }

    #[test]
    fn quantization_is_idempotent(a in matrix(5, 5), bits in 1u32..12) {
        let once = quantize_phases(&a, bits).unwrap();
        let twice = quantize_phases(&once, bits).unwrap();
        prop_assert_eq!(once, twice);
    }

    #[test]
    fn steering_vectors_have_unit_norm(n in 1usize..128, angle in 0.0f64..std::f64::consts::PI) {
        let v = array_response(n, angle);
        prop_assert!((v.frobenius_norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn dictionary_rows_are_orthogonal(n in 1usize..24, extra in 0usize..24) {
        let g = n + extra;
        let d = build_dictionary(n, g).unwrap();
        let gram = d.matrix().matmul(&d.matrix().adjoint()).unwrap();
        let diag = gram[(0, 0)].re;
        prop_assert!((diag - g as f64 / n as f64).abs() < 1e-9);
        for p in 0..n {
            for q in 0..n {
                if p != q {
                    prop_assert!(gram[(p, q)].norm() < 1e-9 * diag);
                }
            }
        }
    }

    #[test]
    fn channel_rank_is_at_most_path_count(seed in any::<u64>(), paths in 1usize..5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cfg = PathConfig { paths, gain_variance: 1.0 };
        let ch = generate_channel(12, 8, &cfg, &mut rng).unwrap();
        prop_assert!(numerical_rank(&ch.h, 1e-8) <= paths);
    }

    #[test]
    fn vec_identity(h in matrix(4, 5), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (n_r, n_t) = h.shape();
        let mut draw = || Complex64::new(rand::Rng::random_range(&mut rng, -1.0..1.0), rand::Rng::random_range(&mut rng, -1.0..1.0));
        let s: Vec<Complex64> = (0..n_t).map(|_| draw()).collect();
        let w = CMatrix::from_fn(n_r, 2, |_, _| draw());
        let lhs = kron(&CMatrix::from_fn(1, n_t, |_, c| s[c]), &w.adjoint()).unwrap().matvec(&h.vec()).unwrap();
        let rhs = w.adjoint().matvec(&h.matvec(&s).unwrap()).unwrap();
        for (a, b) in lhs.iter().zip(&rhs) {
            prop_assert!((a - b).norm() < 1e-10);
        }
    }

    #[test]
    fn partition_gram_holds_for_any_ordering((n, l, ord) in tx_shape().prop_flat_map(|(n, l)| (Just(n), Just(l), permutation(n)))) {
        let cb = partition_codebook(n, l, &ord).unwrap();
        let mut acc = CMatrix::zeros(n, n);
        for f in cb.blocks() {
            acc = acc.add(&f.conj().matmul(&f.transpose()).unwrap()).unwrap();
        }
        let target = CMatrix::identity(n).scale(Complex64::new(n as f64, 0.0));
        prop_assert!(acc.max_abs_diff(&target).unwrap() < 1e-10);
        // entries sit on the log2(n)-bit grid whenever n is a power of two
        if n.is_power_of_two() && n > 1 {
            let bits = n.trailing_zeros();
            prop_assert_eq!(&quantize_phases(cb.ordered_matrix(), bits).unwrap(), cb.ordered_matrix());
        }
    }

    #[test]
    fn fast_coherence_matches_dense_phi(
        (n_t, l_t, ord, sel) in tx_shape().prop_flat_map(|(n, l)| (Just(n), Just(l), permutation(n), pilot_subset(l))),
        (n_r, l_r) in prop::sample::select(vec![(1, 1), (2, 1), (2, 2), (4, 1), (4, 2), (4, 4)]),
    ) {
        let pilot = pilot_codebook(l_t, &sel).unwrap();
        let precoder = partition_codebook(n_t, l_t, &ord).unwrap();
        let s = s_matrix(&precoder, &pilot).unwrap();
        let fast = fast_coherence(&s);
        let design = match DesignResult::evaluate(pilot, precoder) {
            Ok(d) => d,
            Err(_) => {
                // degenerate designs are rejected by both routes
                prop_assert!(fast.is_err());
                return Ok(());
            }
        };
        let combiner = combiner_codebook(n_r, l_r).unwrap();
        let phi = assemble_phi(&build_schedule(&design, &combiner), &design, &combiner).unwrap().phi();
        prop_assert_eq!(phi.shape(), ((n_t / l_t) * sel.len() * (n_r / l_r) * l_r, n_t * n_r));
        let dense = mutual_coherence(&phi).unwrap().value();
        prop_assert!((fast.unwrap().value() - dense).abs() < 1e-9);
    }

    #[test]
    fn schedule_marginals(f in 1usize..6, x in 1usize..6, r in 1usize..6) {
        let s = SnapshotSchedule::new(f, x, r);
        prop_assert_eq!(s.len(), f * x * r);
        for b in 0..f {
            prop_assert_eq!(s.entries.iter().filter(|e| e.precoder_block == b).count(), x * r);
        }
        for p in 0..x {
            prop_assert_eq!(s.entries.iter().filter(|e| e.pilot == p).count(), f * r);
        }
        for c in 0..r {
            prop_assert_eq!(s.entries.iter().filter(|e| e.combiner_block == c).count(), f * x);
        }
    }

    #[test]
    fn omp_residuals_shrink_and_atoms_are_distinct(a in matrix(8, 12), y in prop::collection::vec(entry(), 8), k in 1usize..6) {
        prop_assume!(a.rows() == 8 && a.column_norms().iter().all(|&n| n > 1e-6));
        let est = omp(&a, &y, &OmpConfig::with_sparsity(k)).unwrap();
        for w in est.residual_norms.windows(2) {
            prop_assert!(w[1] <= w[0] * (1.0 + 1e-12) + 1e-12);
        }
        let mut seen = est.support.clone();
        seen.sort_unstable();
        seen.dedup();
        prop_assert_eq!(seen.len(), est.support.len());
    }
}
