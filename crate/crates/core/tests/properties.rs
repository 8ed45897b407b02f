mod common;

use proptest::prelude::*;

use common::*;
use rowsolve::harness::aggregate::aggregate;
use rowsolve::harness::io::{parse_vector, vector_csv};
use rowsolve::harness::trace::{parse_trace_csv, trace_csv, RunMeta, RunTrace, TraceRow};
use rowsolve::matrix::market;
use rowsolve::solvers::{ermr_step, BlockCache, SolverState, StopReason, SystemView};
use rowsolve::theory;
use rowsolve::{Axis, ExecMode, Matrix, Method, Partition, RngStream, SolverConfig};

fn meta() -> RunMeta {
    RunMeta {
        method: Method::Ermr,
        config: SolverConfig::new(Method::Ermr),
        trial: 0,
        exec_mode: ExecMode::Cached,
        reabk_alpha: None,
        stop: StopReason::MaxIters,
        iterations: 40,
        skips: 0,
        max_recursion_drift: 0.0,
        rse_absolute: false,
        final_rse: None,
        instance: None,
        rates: None,
    }
}

fn gaussian_matrix(m: usize, n: usize, seed: u64) -> Matrix {
    let mut g = Lcg::new(seed);
    let rows: Vec<Vec<f64>> = (0..m).map(|_| g.gaussian_vec(n)).collect();
    Matrix::from_rows(&rows).unwrap()
}

fn sparse_triplets() -> impl Strategy<Value = (usize, usize, Vec<(usize, usize, f64)>)> {
    (1usize..12, 1usize..12).prop_flat_map(|(m, n)| {
        let t = prop::collection::btree_map((0..m, 0..n), -1e3f64..1e3, 0..40)
            .prop_map(|e| e.into_iter().map(|((i, j), v)| (i, j, v)).collect());
        (Just(m), Just(n), t)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn contiguous_partition_covers_universe((universe, tau) in (1usize..200).prop_flat_map(|u| (Just(u), 1..=u.min(40)))) {
        let p = Partition::contiguous(universe, tau).unwrap();
        let mut seen = vec![false; universe];
        for b in p.blocks() {
            prop_assert!(!b.is_empty() && b.len() <= tau);
            for &i in b {
                prop_assert!(!seen[i]);
                seen[i] = true;
            }
        }
        prop_assert!(seen.iter().all(|&s| s));
        prop_assert_eq!(p.len(), universe.div_ceil(tau));
    }

    #[test]
    fn block_probabilities_sum_to_one(m in 8usize..30, n in 2usize..10, tau in 1usize..8, seed in any::<u64>()) {
        let a = gaussian_matrix(m, n, seed);
        let p = Partition::contiguous(m, tau).unwrap().attach_norms(&a, Axis::Rows).unwrap();
        let total: f64 = (0..p.len()).map(|k| p.probability(k)).sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
        let mut rng = RngStream::new(seed);
        for _ in 0..20 {
            prop_assert!(p.sample_block(&mut rng).unwrap() < p.len());
        }
    }

    #[test]
    fn market_round_trip((m, n, t) in sparse_triplets()) {
        let a = Matrix::from_triplets(m, n, t).unwrap();
        let back = market::parse(&market::to_string(&a)).unwrap();
        prop_assert_eq!((back.rows(), back.cols()), (m, n));
        for i in 0..m {
            for j in 0..n {
                prop_assert_eq!(back.get(i, j), a.get(i, j));
            }
        }
    }

    #[test]
    fn dense_and_sparse_products_agree((m, n, t) in sparse_triplets(), seed in any::<u64>()) {
        let s = Matrix::from_triplets(m, n, t).unwrap();
        let d = s.to_dense();
        let mut g = Lcg::new(seed);
        let x = g.gaussian_vec(n);
        let y = g.gaussian_vec(m);
        let (sx, dx) = (s.matvec(&x, false).unwrap(), d.matvec(&x, false).unwrap());
        let (sy, dy) = (s.matvec(&y, true).unwrap(), d.matvec(&y, true).unwrap());
        prop_assert!(dist_sq(&sx, &dx) <= 1e-20 * (1.0 + norm_sq(&dx)));
        prop_assert!(dist_sq(&sy, &dy) <= 1e-20 * (1.0 + norm_sq(&dy)));
    }

    #[test]
    fn vector_csv_round_trip(v in prop::collection::vec(-1e300f64..1e300, 0..50)) {
        prop_assert_eq!(parse_vector(&vector_csv(&v)).unwrap(), v);
    }

    #[test]
    fn trace_csv_round_trip(raw in prop::collection::vec((0u64..1_000_000, prop::option::of(0.0f64..1e3), 0.0f64..1e6, 0u64..100), 1..30)) {
        let rows: Vec<TraceRow> = raw
            .iter()
            .map(|&(k, rse, residual, skips)| TraceRow { k, elapsed_ns: k * 7, rse, residual, skips })
            .collect();
        prop_assert_eq!(parse_trace_csv(&trace_csv(&rows, true)).unwrap(), rows);
    }

    #[test]
    fn ensemble_rows_are_ordered(vals in prop::collection::vec(prop::collection::vec(0.0f64..10.0, 5), 1..8)) {
        let traces: Vec<RunTrace> = vals
            .iter()
            .map(|v| RunTrace {
                rows: v
                    .iter()
                    .enumerate()
                    .map(|(k, &e)| TraceRow { k: k as u64 * 10, elapsed_ns: 0, rse: Some(e), residual: 0.0, skips: 0 })
                    .collect(),
                meta: meta(),
            })
            .collect();
        let ens = aggregate(traces).unwrap();
        for r in &ens.rows {
            prop_assert!(r.rse_min <= r.rse_median && r.rse_median <= r.rse_max);
        }
    }

    #[test]
    fn range_null_split_is_orthogonal(m in 4usize..14, n in 2usize..8, seed in any::<u64>()) {
        let a = gaussian_matrix(m, n, seed);
        let b = Lcg::new(seed ^ 1).gaussian_vec(m);
        let (br, bn) = theory::range_null_split(&a, &b).unwrap();
        let scale = norm_sq(&b);
        for i in 0..m {
            prop_assert!((br[i] + bn[i] - b[i]).abs() <= 1e-12 * scale.sqrt().max(1.0));
        }
        prop_assert!(dot(&br, &bn).abs() <= 1e-10 * scale);
        let atbn = matvec_t(&rows_of(&a), &bn);
        prop_assert!(norm(&atbn) <= 1e-9 * scale.sqrt().max(1.0));
    }

    #[test]
    fn min_norm_solution_is_shortest(m in 3usize..10, n in 4usize..10, r in 1usize..4, seed in any::<u64>()) {
        let a = low_rank(m, n, r.min(m).min(n), &mut Lcg::new(seed));
        let rows = rows_of(&a);
        let b = Lcg::new(seed ^ 2).gaussian_vec(m);
        let x = theory::min_norm_lsq(&a, &b).unwrap();
        let oracle = pinv_solve(&rows, n, &b);
        prop_assert!(dist_sq(&x, &oracle) <= 1e-14 * norm_sq(&oracle).max(1.0));
        // Perturbing along N(A) keeps the residual and grows the norm.
        let z = Lcg::new(seed ^ 3).gaussian_vec(n);
        let zr = pinv_solve(&rows, n, &matvec(&rows, &z));
        let null = sub(&z, &zr);
        prop_assume!(norm_sq(&null) > 1e-6);
        let xp: Vec<f64> = x.iter().zip(&null).map(|(u, v)| u + v).collect();
        let (r0, r1) = (sub(&b, &matvec(&rows, &x)), sub(&b, &matvec(&rows, &xp)));
        prop_assert!((norm_sq(&r0) - norm_sq(&r1)).abs() <= 1e-8 * norm_sq(&b));
        prop_assert!(norm_sq(&xp) > norm_sq(&x));
    }

    #[test]
    fn iteration_bound_is_smallest_sufficient_k(rho in 0.05f64..0.999, omega in 1.0f64..1e6, eps in 1e-12f64..1e-1, beta in 0.01f64..0.99) {
        let k = theory::iteration_bound(rho, omega, eps, beta).unwrap() as f64;
        let need = (omega / (eps * (1.0 - beta))).ln() / (1.0 - rho);
        prop_assert!(k >= need * (1.0 - 1e-9));
        prop_assert!(k - 1.0 < need);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn lemma_inequalities_hold(m in 3usize..20, n in 2usize..12, seed in any::<u64>()) {
        let a = gaussian_matrix(m, n, seed);
        let rep = theory::lemma_checks(&a, 30, &mut RngStream::new(seed)).unwrap();
        prop_assert!(rep.passed(), "{:?}", rep);
    }

    #[test]
    fn rates_match_oracle_and_lie_in_unit_interval(m in 8usize..30, n in 3usize..8, tr in 1usize..6, tc in 1usize..4, seed in any::<u64>()) {
        let a = gaussian_matrix(m, n, seed);
        let (pr, pc) = partitions(&a, tr, tc);
        let rep = theory::convergence_rates(&a, &pr, &pc).unwrap();
        let o = rates(&a, &pr, &pc);
        prop_assert!((rep.rho1 - o.rho1).abs() <= 1e-8);
        prop_assert!((rep.rho2 - o.rho2).abs() <= 1e-8);
        prop_assert!(rep.rho1 > 0.0 && rep.rho1 < 1.0 && rep.rho2 > 0.0 && rep.rho2 < 1.0);
    }

    #[test]
    fn merging_blocks_never_raises_beta_max(seed in any::<u64>()) {
        let a = gaussian_matrix(60, 20, seed);
        let betas: Vec<f64> = [8usize, 4, 2, 1]
            .iter()
            .map(|&t| {
                let p = Partition::contiguous(60, t).unwrap().attach_norms(&a, Axis::Rows).unwrap();
                theory::beta_max(&a, &p, Axis::Rows).unwrap()
            })
            .collect();
        for w in betas.windows(2) {
            prop_assert!(w[0] <= w[1] + 1e-12, "{:?}", betas);
        }
        prop_assert!((betas[3] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ermr_iterates_stay_in_subspaces(seed in any::<u64>(), tr in 1usize..6, tc in 1usize..4) {
        let a = low_rank(15, 8, 4, &mut Lcg::new(seed));
        let b = Lcg::new(seed ^ 5).gaussian_vec(15);
        let rows = rows_of(&a);
        let (pr, pc) = partitions(&a, tr, tc);
        let cache = BlockCache::for_mode(&a, ExecMode::Cached);
        let view = SystemView::new(&a, &b, &pr, &pc, &cache).unwrap();
        let mut s = SolverState::standard(&view, RngStream::new(seed));
        for _ in 0..60 {
            ermr_step(&mut s, &view);
        }
        // x in R(A^T): unchanged by projection onto the row space.
        let px = pinv_solve(&rows, 8, &matvec(&rows, &s.x));
        prop_assert!(dist_sq(&s.x, &px) <= 1e-16 * norm_sq(&s.x).max(1.0) * 1e4);
        // y - b in R(A).
        let d = sub(&s.y, &b);
        let pd = matvec(&rows, &pinv_solve(&rows, 8, &d));
        prop_assert!(dist_sq(&d, &pd) <= 1e-12 * norm_sq(&d).max(1.0));
        // Recursive residuals track their direct definitions.
        let (dx, dy) = s.recursion_drift(&view);
        prop_assert!(dx <= 1e-9 && dy <= 1e-9, "drift {dx} {dy}");
    }
}
