use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use rmtport::backtest::{aggregate_metrics, run_backtest, Case, RunConfig};
use rmtport::marketdata::{make_windows, standardize, window_count, ReturnPanel};
use rmtport::markowitz::{optimal_weights, GainSpec, Strategy};
use rmtport::nco::{minimum_spanning_tree, nco_allocate, Clustering, DissimilarityMatrix, NcoConfig};
use rmtport::rmt::{estimate, linear_shrink, sample_correlation, tw_clip};
use rmtport::synthetic::{gaussian_matrix, BlockMarket};
use rmtport::{CorrelationEstimate, Estimator};

fn white_window(p: usize, n: usize, seed: u64) -> ReturnPanel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    ReturnPanel::from_matrix(gaussian_matrix(p, n, &mut rng))
}

fn assert_correlation(m: &DMatrix<f64>) {
    for i in 0..m.nrows() {
        assert!((m[(i, i)] - 1.0).abs() < 1e-10, "diagonal {}", m[(i, i)]);
        for j in 0..i {
            assert!((m[(i, j)] - m[(j, i)]).abs() < 1e-12);
            assert!(m[(i, j)].abs() <= 1.0 + 1e-10);
        }
    }
}

fn mst_by_enumeration(d: &DMatrix<f64>) -> f64 {
    let p = d.nrows();
    let edges: Vec<(usize, usize)> = (0..p).flat_map(|a| (a + 1..p).map(move |b| (a, b))).collect();
    let mut best = f64::INFINITY;
    for mask in 0u32..(1 << edges.len()) {
        if mask.count_ones() as usize != p - 1 {
            continue;
        }
        let mut comp: Vec<usize> = (0..p).collect();
        let mut total = 0.0;
        let mut ok = true;
        for (k, &(a, b)) in edges.iter().enumerate() {
            if mask >> k & 1 == 0 {
                continue;
            }
            let (ca, cb) = (comp[a], comp[b]);
            if ca == cb {
                ok = false;
                break;
            }
            comp.iter_mut().filter(|c| **c == cb).for_each(|c| *c = ca);
            total += d[(a, b)];
        }
        if ok {
            best = best.min(total);
        }
    }
    best
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn standardized_rows_are_centred_and_unit(p in 2usize..8, extra in 2usize..30, seed in any::<u64>()) {
        let z = standardize(&white_window(p, p + extra, seed)).unwrap();
        for row in z.returns.row_iter() {
            let n = row.len() as f64;
            let mean = row.sum() / n;
            let var = row.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
            prop_assert!(mean.abs() < 1e-10);
            prop_assert!((var - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn estimators_return_correlations(p in 2usize..10, extra in 2usize..40, seed in any::<u64>()) {
        let window = standardize(&white_window(p, p + extra, seed)).unwrap();
        for est in Estimator::ALL {
            assert_correlation(&estimate(&window, est, 0.01).unwrap().matrix);
        }
        let shrunk = linear_shrink(&sample_correlation(&window).unwrap(), &window).unwrap();
        prop_assert!((0.0..=1.0).contains(&shrunk.alpha_hat));
    }

    #[test]
    fn clipping_flattens_the_noise_band(p in 3usize..12, extra in 4usize..40, seed in any::<u64>()) {
        let window = standardize(&white_window(p, p + extra, seed)).unwrap();
        let e = sample_correlation(&window).unwrap();
        let clip = tw_clip(&e, 0.01).unwrap();
        let values = &clip.clipped_eigenvalues;
        prop_assert!((values.sum() - p as f64).abs() < 1e-9, "trace {}", values.sum());
        if !clip.degenerate {
            let noise: Vec<f64> = values.iter().skip(clip.signals).copied().collect();
            for v in &noise {
                prop_assert!((v - noise[0]).abs() < 1e-10);
            }
            let sample = e.spectrum().unwrap().eigenvalues;
            for i in 0..clip.signals {
                prop_assert!((values[i] - sample[i]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn mst_matches_enumeration(p in 2usize..6, raw in prop::collection::vec(0.01f64..1.0, 15)) {
        let mut d = DMatrix::zeros(p, p);
        let mut k = 0;
        for a in 0..p {
            for b in a + 1..p {
                d[(a, b)] = raw[k];
                d[(b, a)] = raw[k];
                k += 1;
            }
        }
        let tree = minimum_spanning_tree(&DissimilarityMatrix(d.clone())).unwrap();
        prop_assert!(tree.is_spanning_tree());
        prop_assert!((tree.total_weight() - mst_by_enumeration(&d)).abs() < 1e-12);
    }

    #[test]
    fn relabelling_is_idempotent(ids in prop::collection::vec(0usize..5, 1..20)) {
        let mut used: Vec<usize> = ids.clone();
        used.sort();
        used.dedup();
        let dense: Vec<usize> = ids.iter().map(|c| used.binary_search(c).unwrap()).collect();
        let once = Clustering::new(dense).unwrap();
        let twice = Clustering::new(once.assignment.clone()).unwrap();
        prop_assert_eq!(&once, &twice);
        prop_assert_eq!(once.assignment[0], 0);
        prop_assert_eq!(once.sizes().iter().sum::<usize>(), ids.len());
    }

    #[test]
    fn markowitz_meets_the_gain_target(p in 2usize..10, seed in any::<u64>(), target in 0.1f64..3.0) {
        let window = standardize(&white_window(p, 3 * p + 5, seed)).unwrap();
        let xi = estimate(&window, Estimator::Linear, 0.01).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 1);
        let g = gaussian_matrix(p, 1, &mut rng).column(0).map(|x| x.abs() + 0.1);
        let gain = GainSpec::new(DVector::from_iterator(p, g.iter().copied()), target).unwrap();
        let w = optimal_weights(&xi, &gain).unwrap().weights;
        prop_assert!((w.dot(&gain.g) - target).abs() < 1e-9 * target.max(1.0));
    }

    #[test]
    fn nco_weights_sum_to_budget(p in 3usize..14, seed in any::<u64>()) {
        let window = standardize(&white_window(p, 2 * p + 4, seed)).unwrap();
        let xi: CorrelationEstimate = estimate(&window, Estimator::Linear, 0.01).unwrap();
        let res = nco_allocate(&xi, &GainSpec::minimum_variance(p, 1.0), &NcoConfig::new(seed)).unwrap();
        prop_assert!((res.allocation.weights.sum() - 1.0).abs() < 1e-9);
        prop_assert!((res.nested.w_inter.sum() - 1.0).abs() < 1e-9);
        for w in &res.nested.w_intra {
            prop_assert!((w.sum() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn metric_ordering(gaps in prop::collection::vec(-1.0f64..1.0, 1..50)) {
        let sums = vec![1.0; gaps.len()];
        let m = aggregate_metrics(&gaps, &sums).unwrap();
        let max = gaps.iter().fold(0.0f64, |a, g| a.max(g.abs()));
        prop_assert!(m.mae * m.mae <= m.mse + 1e-15);
        prop_assert!(m.mse <= m.mae * max + 1e-15);
        prop_assert!((m.msaw - 1.0).abs() < 1e-15);
    }

    #[test]
    fn window_count_formula(len in 2usize..300, n in 2usize..100, shift in 1usize..20) {
        prop_assume!(n <= len);
        let panel = ReturnPanel::from_matrix(DMatrix::from_fn(2, len, |i, t| ((i + 1) * t) as f64));
        let set = make_windows(&panel, n, shift).unwrap();
        prop_assert_eq!(set.count(), (len - n) / shift + 1);
        prop_assert_eq!(set.count(), window_count(len, n, shift));
        let last = set.windows.last().unwrap();
        prop_assert!(last.len() == n);
    }
}

#[test]
fn cases_do_not_interact() {
    let returns = BlockMarket::four_blocks().returns(64, 5).unwrap();
    let set = make_windows(&returns, 56, 2).unwrap();
    let full = run_backtest(&set, &RunConfig { seed: 4, ..RunConfig::default() }).unwrap();
    for strategy in Strategy::ALL {
        for estimator in Estimator::ALL {
            let single = RunConfig { seed: 4, strategies: vec![strategy], estimators: vec![estimator], ..RunConfig::default() };
            let alone = run_backtest(&set, &single).unwrap();
            let case = Case { strategy, estimator };
            assert_eq!(alone.case(case), full.case(case), "{case}");
        }
    }
}
