use proptest::prelude::*;

use hindex::baselines::{lasso_fit, lasso_objective, LassoOptions};
use hindex::features::FeatureMatrix;
use hindex::graph::{spmm, AdjacencyOperator, CsGraph, OperatorKind};
use hindex::metrics::{core_decomposition, degree, detect_communities, modularity, pagerank, LouvainOptions, PageRankOptions};
use hindex::nn::{mae_loss, Tensor2};
use hindex::pipeline::{evaluate, label_distribution, split, split_sizes, Scaler, SplitConfig};

fn graph() -> impl Strategy<Value = CsGraph> {
    (2usize..30).prop_flat_map(|n| {
        prop::collection::vec((0..n as u32, 0..n as u32, 1u32..5), 0..4 * n).prop_map(move |edges| {
            let edges: Vec<(u32, u32, f64)> = edges.into_iter().map(|(u, v, w)| (u, v, w as f64)).collect();
            CsGraph::from_edges((0..n).map(|i| format!("n{i}")).collect(), &edges).unwrap().0
        })
    })
}

fn matrix(rows: usize, cols: usize) -> impl Strategy<Value = Tensor2> {
    prop::collection::vec(-50.0f64..50.0, rows * cols).prop_map(move |v| Tensor2::from_fn(rows, cols, |i, j| v[i * cols + j]))
}

fn features(x: Tensor2) -> FeatureMatrix {
    let ids = (0..x.rows()).map(|i| format!("a{i}")).collect();
    let cols = (0..x.cols()).map(|j| format!("c{j}")).collect();
    FeatureMatrix::new(ids, cols, x).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn split_partitions_the_labelled_rows(n in 20usize..2000, seed in any::<u64>()) {
        let cfg = SplitConfig::default();
        let ids: Vec<usize> = (0..n).map(|i| i * 3 + 1).collect();
        let s = split(&ids, None, &cfg, seed).unwrap();
        prop_assert_eq!((s.train.len(), s.val.len(), s.test.len()), split_sizes(n, &cfg));
        let mut all: Vec<usize> = s.train.iter().chain(&s.val).chain(&s.test).copied().collect();
        all.sort_unstable();
        prop_assert_eq!(all, ids);
    }

    #[test]
    fn stratified_split_keeps_sizes(n in 20usize..500, seed in any::<u64>()) {
        let cfg = SplitConfig { stratified: true, ..SplitConfig::default() };
        let ids: Vec<usize> = (0..n).collect();
        let strata: Vec<f64> = (0..n).map(|i| (i % 7) as f64).collect();
        let s = split(&ids, Some(&strata), &cfg, seed).unwrap();
        prop_assert_eq!((s.train.len(), s.val.len(), s.test.len()), split_sizes(n, &cfg));
    }

    #[test]
    fn scaler_standardises_training_rows(x in matrix(12, 3), k in 2usize..12) {
        let f = features(x);
        let rows: Vec<usize> = (0..k).collect();
        let s = Scaler::fit(&f, &rows).unwrap();
        let t = s.transform(&f).unwrap();
        for j in 0..3 {
            let col: Vec<f64> = rows.iter().map(|&i| t.values().get(i, j)).collect();
            let mean = col.iter().sum::<f64>() / k as f64;
            let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / k as f64;
            prop_assert!(mean.abs() < 1e-9);
            prop_assert!((var - 1.0).abs() < 1e-9 || var == 0.0);
        }
    }

    #[test]
    fn scaler_ignores_other_rows(x in matrix(10, 2), y in matrix(10, 2)) {
        let rows = [0, 2, 4, 6];
        let mut mixed = y.clone();
        for &i in &rows {
            mixed.row_mut(i).copy_from_slice(x.row(i));
        }
        prop_assert_eq!(Scaler::fit(&features(x), &rows).unwrap(), Scaler::fit(&features(mixed), &rows).unwrap());
    }

    #[test]
    fn evaluate_matches_loss_on_the_mask(
        pred in prop::collection::vec(-10.0f64..10.0, 15),
        labels in prop::collection::vec(0.0f64..10.0, 15),
        mask in prop::collection::btree_set(0usize..15, 1..15),
    ) {
        let mask: Vec<usize> = mask.into_iter().collect();
        let (mae, _) = evaluate(&pred, &labels, &mask).unwrap();
        let p: Vec<f64> = mask.iter().map(|&i| pred[i]).collect();
        let t: Vec<f64> = mask.iter().map(|&i| labels[i]).collect();
        prop_assert!((mae - mae_loss(&p, &t).unwrap().0).abs() < 1e-12);
    }

    #[test]
    fn pagerank_is_a_distribution(g in graph(), scale in 0.5f64..20.0) {
        let opts = PageRankOptions { tol: 1e-13, max_iter: 5000, ..PageRankOptions::default() };
        let pr = pagerank(&g, &opts).unwrap().values.values;
        prop_assert!((pr.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        prop_assert!(pr.iter().all(|&p| p > 0.0));
        let scaled = pagerank(&g.scaled(scale), &opts).unwrap().values.values;
        for (a, b) in pr.iter().zip(&scaled) {
            prop_assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn cores_bounded_by_degree(g in graph()) {
        let d = core_decomposition(&g);
        for v in 0..g.num_vertices() {
            prop_assert!(d.core_number[v] as usize <= g.num_neighbors(v));
            prop_assert!(d.onion_layer[v] >= 1);
        }
        let deg = degree(&g).unwrap().values;
        prop_assert_eq!(deg.len(), g.num_vertices());
    }

    #[test]
    fn louvain_beats_trivial_partitions(g in graph(), seed in any::<u64>()) {
        let ca = detect_communities(&g, seed, &LouvainOptions::default());
        let q = modularity(&g, &ca.community_of, 1.0);
        let singletons: Vec<usize> = (0..g.num_vertices()).collect();
        prop_assert!(q >= modularity(&g, &singletons, 1.0) - 1e-12);
        prop_assert!(q >= modularity(&g, &vec![0; g.num_vertices()], 1.0) - 1e-12);
        prop_assert!(q <= 1.0);
    }

    #[test]
    fn spmm_is_linear(g in graph(), a in -3.0f64..3.0) {
        let n = g.num_vertices();
        let h1 = Tensor2::from_fn(n, 3, |i, j| (i * 3 + j) as f64 * 0.1);
        let h2 = Tensor2::from_fn(n, 3, |i, j| ((i + j) % 5) as f64 - 2.0);
        let combo = Tensor2::from_fn(n, 3, |i, j| h1.get(i, j) + a * h2.get(i, j));
        for kind in [OperatorKind::SelfLoops, OperatorKind::Normalized] {
            let op = AdjacencyOperator::new(&g, kind);
            let (s1, s2, sc) = (spmm(&op, &h1).unwrap(), spmm(&op, &h2).unwrap(), spmm(&op, &combo).unwrap());
            for i in 0..n {
                for j in 0..3 {
                    prop_assert!((sc.get(i, j) - s1.get(i, j) - a * s2.get(i, j)).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn lasso_improves_on_the_null_model(x in matrix(20, 4), noise in prop::collection::vec(-1.0f64..1.0, 20), lambda in 0.0f64..5.0) {
        let y: Vec<f64> = (0..20).map(|i| x.get(i, 0) * 0.3 - x.get(i, 2) + noise[i]).collect();
        let fit = lasso_fit(&x, &y, &LassoOptions { lambda, ..LassoOptions::default() }).unwrap();
        let mean = y.iter().sum::<f64>() / 20.0;
        let null = lasso_objective(&x, &y, &[0.0; 4], mean, lambda);
        prop_assert!(*fit.objective.last().unwrap() <= null + 1e-9);
        prop_assert!(fit.objective.windows(2).all(|w| w[1] <= w[0] + 1e-9));
    }

    #[test]
    fn label_distribution_counts_every_author(labels in prop::collection::vec(0u64..40, 1..200)) {
        let dist = label_distribution(&labels);
        prop_assert_eq!(dist.iter().map(|&(_, c)| c).sum::<usize>(), labels.len());
        prop_assert!(dist.windows(2).all(|w| w[0].0 < w[1].0));
    }
}
