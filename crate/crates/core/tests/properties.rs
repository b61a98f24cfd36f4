use netsens::graph::{load_matrix_market, write_matrix_market};
use netsens::maxelem::{top_p, MaskedOperator, Mask, TopPConfig, ImplicitMatrix};
use netsens::sensitivity::{all_edge_sensitivities, EdgeMask, Measure, SensitivityOptions};
use netsens::{DenseMatrix, Graph};
use proptest::prelude::*;

fn graph_strategy() -> impl Strategy<Value = Graph> {
    (3usize..14, any::<bool>()).prop_flat_map(|(n, directed)| {
        proptest::collection::vec((0..n, 0..n), 0..3 * n).prop_map(move |raw| {
            let pairs: Vec<_> = raw.into_iter().filter(|(i, j)| i != j).collect();
            if directed {
                Graph::directed_from_pairs(n, &pairs).unwrap()
            } else {
                Graph::undirected_from_pairs(n, &pairs).unwrap()
            }
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn matrix_market_round_trip(g in graph_strategy()) {
        let text = write_matrix_market(&g);
        let back = load_matrix_market::<f64>(text.as_bytes()).unwrap().graph;
        prop_assert_eq!(back, g);
    }

    #[test]
    fn total_sensitivities_are_positive_and_rank_stable(g in graph_strategy()) {
        let opts = SensitivityOptions::with_tol(1e-10);
        let r = all_edge_sensitivities(&g, Measure::Total, &EdgeMask::Virtual, &opts).unwrap();
        for e in &r.entries {
            prop_assert!(e.value >= 1.0 - 1e-9, "{:?}", e);
        }
        for w in r.entries.windows(2) {
            prop_assert!(w[0].value >= w[1].value);
        }
    }

    #[test]
    fn top_p_never_exceeds_exhaustive_maximum(
        n in 4usize..30,
        rank in 1usize..4,
        seed in any::<u64>(),
        virtual_mask in any::<bool>(),
    ) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let b = DenseMatrix::from_fn(n, rank, |_, _| rng.gen_range(-1.0..1.0));
        let c = DenseMatrix::from_fn(n, rank, |_, _| rng.gen_range(-1.0..1.0));
        let pairs: Vec<_> = (0..n).filter_map(|i| {
            let j = rng.gen_range(0..n);
            (i != j).then_some((i, j))
        }).collect();
        let g = Graph::directed_from_pairs(n, &pairs).unwrap();
        let mask = if virtual_mask { Mask::Virtual } else { Mask::Existing };
        let s = MaskedOperator::new(&g, mask, b, c).unwrap();
        let dense = s.to_dense();
        let max = dense.max_abs();
        let res = top_p(&s, &TopPConfig::with_p(3)).unwrap();
        for e in &res.entries {
            prop_assert!(e.value.abs() <= max);
            prop_assert!(s.admissible(e.i, e.j));
            prop_assert_eq!(e.value, dense[(e.i, e.j)]);
        }
    }
}
