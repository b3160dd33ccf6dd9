mod common;

use common::{adjacency, best_modularity, metric_oracle, modularity_double_sum, random_graph, rng};
use proptest::prelude::*;
use rand::Rng;
use tfmn_core::metrics::{
    betweenness_centrality, detect_communities, modularity, CommunityMethod, MetricOptions, METRIC_COLUMNS,
};
use tfmn_core::{Graph, MetricVector};

fn assert_matches_oracle(g: &Graph, method: CommunityMethod, seed: u64) {
    let opts = MetricOptions { community: method, seed };
    let mv = MetricVector::compute(g, &opts).unwrap();
    let partition = detect_communities(g, method, seed).unwrap();
    let expected = metric_oracle(g, &partition);
    for ((name, got), want) in METRIC_COLUMNS.iter().zip(mv.values()).zip(expected) {
        assert!((got - want).abs() < 1e-9, "{name}: got {got}, oracle {want}, edges {:?}", g.edges().collect::<Vec<_>>());
    }
}

#[test]
fn random_graphs_match_brute_force() {
    let mut r = rng(2024);
    for i in 0..200 {
        let n = r.gen_range(2..=12);
        let p = r.gen_range(0.1..0.9);
        let g = random_graph(&mut r, n, p);
        assert_matches_oracle(&g, CommunityMethod::Greedy, i);
        assert_matches_oracle(&g, CommunityMethod::Louvain, i);
    }
}

#[test]
fn detected_modularity_is_bounded_by_optimum() {
    let mut r = rng(7);
    for i in 0..60 {
        let n = r.gen_range(2..=8);
        let g = random_graph(&mut r, n, 0.4);
        let a = adjacency(&g);
        let best = best_modularity(&a);
        for method in [CommunityMethod::Greedy, CommunityMethod::Louvain] {
            let q = modularity(&g, &detect_communities(&g, method, i).unwrap()).unwrap();
            assert!(q >= -1e-12, "{method:?} gave negative modularity {q}");
            assert!(q <= best + 1e-12);
        }
    }
}

#[test]
fn bridged_triangles() {
    let g = Graph::from_edges(6, &[(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5), (2, 3)]);
    let q = modularity(&g, &[0, 0, 0, 1, 1, 1]).unwrap();
    assert!((q - 5.0 / 14.0).abs() < 1e-12);
    assert_eq!(modularity(&g, &[0; 6]).unwrap(), 0.0);
    assert!((modularity_double_sum(&adjacency(&g), &[0, 0, 0, 1, 1, 1]) - 5.0 / 14.0).abs() < 1e-12);
    for method in [CommunityMethod::Greedy, CommunityMethod::Louvain] {
        let mv = MetricVector::compute(&g, &MetricOptions { community: method, seed: 0 }).unwrap();
        assert!((mv.modularity - 5.0 / 14.0).abs() < 1e-12);
    }
}

#[test]
fn edgeless_graph_is_rejected() {
    assert!(MetricVector::compute(&Graph::new(3), &MetricOptions::default()).is_err());
    assert!(MetricVector::compute(&Graph::new(0), &MetricOptions::default()).is_err());
}

fn arb_graph() -> impl Strategy<Value = (Graph, Vec<usize>)> {
    (2usize..=10).prop_flat_map(|n| {
        let pairs = n * (n - 1) / 2;
        (
            proptest::collection::vec(any::<bool>(), pairs),
            Just((0..n).collect::<Vec<usize>>()).prop_shuffle(),
        )
            .prop_map(move |(bits, perm)| {
                let mut g = Graph::new(n);
                let mut k = 0;
                for u in 0..n {
                    for v in u + 1..n {
                        if bits[k] {
                            g.add_edge(u, v);
                        }
                        k += 1;
                    }
                }
                if g.m() == 0 {
                    g.add_edge(0, 1);
                }
                (g, perm)
            })
    })
}

proptest! {
    // Community detection may break ties differently after relabelling, so
    // modularity is compared on the carried-over partition instead.
    #[test]
    fn metrics_are_label_invariant((g, perm) in arb_graph()) {
        let opts = MetricOptions::default();
        let a = MetricVector::compute(&g, &opts).unwrap().values();
        let h = g.relabeled(&perm);
        let b = MetricVector::compute(&h, &opts).unwrap().values();
        for (j, name) in METRIC_COLUMNS.iter().enumerate() {
            if *name != "modularity" {
                prop_assert!((a[j] - b[j]).abs() < 1e-9, "{} {} {}", name, a[j], b[j]);
            }
        }
        let p = detect_communities(&g, CommunityMethod::Greedy, 0).unwrap();
        let mut q = vec![0; p.len()];
        for (u, &c) in p.iter().enumerate() {
            q[perm[u]] = c;
        }
        prop_assert!((modularity(&g, &p).unwrap() - modularity(&h, &q).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn betweenness_is_non_negative_and_bounded((g, _) in arb_graph()) {
        let n = g.n() as f64;
        for b in betweenness_centrality(&g) {
            prop_assert!(b >= 0.0 && b <= (n - 1.0) * (n - 2.0) / 2.0 + 1e-12);
        }
    }
}
