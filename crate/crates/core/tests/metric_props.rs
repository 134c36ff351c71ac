use medbench_core::metrics::classification::roc_auc;
use medbench_core::metrics::graph::{graph_f1, Entity, EntityCategory, EntityGraph, Relation};
use medbench_core::metrics::variant::{variant_f1, VariantType};
use proptest::prelude::*;

fn category(i: u8) -> EntityCategory {
    match i % 4 {
        0 => EntityCategory::Anatomy,
        1 => EntityCategory::ObservationPresent,
        2 => EntityCategory::ObservationAbsent,
        _ => EntityCategory::ObservationUncertain,
    }
}

fn relation(i: u8) -> Relation {
    match i % 3 {
        0 => Relation::LocatedAt,
        1 => Relation::SuggestiveOf,
        _ => Relation::Modify,
    }
}

fn graph() -> impl Strategy<Value = EntityGraph> {
    let node = (0u8..4, 0u8..4).prop_map(|(t, c)| Entity::new(format!("e{t}"), category(c)));
    (
        prop::collection::vec(node.clone(), 0..4),
        prop::collection::vec((node.clone(), 0u8..3, node), 0..4),
    )
        .prop_map(|(nodes, edges)| {
            let mut g = EntityGraph::new();
            for n in nodes {
                g.add_node(n);
            }
            for (h, r, t) in edges {
                g.add_edge(h, relation(r), t);
            }
            g
        })
}

proptest! {
    #[test]
    fn graph_f1_is_symmetric_and_bounded(a in graph(), b in graph()) {
        let ab = graph_f1(&a, &b);
        prop_assert_eq!(ab, graph_f1(&b, &a));
        prop_assert!((0.0..=1.0).contains(&ab));
        prop_assert_eq!(graph_f1(&a, &a), 1.0);
        for e in a.edges() {
            prop_assert!(a.nodes().contains(&e.head) && a.nodes().contains(&e.tail));
        }
    }

    #[test]
    fn auc_invariant_under_monotone_transform(
        rows in prop::collection::vec((-50i32..50, any::<bool>()), 2..40),
        scale in 0.1f64..10.0,
        shift in -5.0f64..5.0,
    ) {
        let scores: Vec<f64> = rows.iter().map(|r| r.0 as f64 / 10.0).collect();
        let labels: Vec<bool> = rows.iter().map(|r| r.1).collect();
        let base = roc_auc(&scores, &labels).unwrap();
        let moved: Vec<f64> = scores.iter().map(|s| (s * scale + shift).exp()).collect();
        let after = roc_auc(&moved, &labels).unwrap();
        match (base, after) {
            (Some(x), Some(y)) => prop_assert!((x - y).abs() < 1e-12),
            (x, y) => prop_assert_eq!(x, y),
        }
        // Flipping the order mirrors the curve.
        let flipped: Vec<f64> = scores.iter().map(|s| -s).collect();
        if let (Some(x), Some(y)) = (base, roc_auc(&flipped, &labels).unwrap()) {
            prop_assert!((x + y - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn variant_f1_perfect_calls(truth in prop::collection::vec((0usize..3, any::<bool>()), 1..30)) {
        let genotypes: Vec<usize> = truth.iter().map(|t| t.0).collect();
        let types: Vec<VariantType> =
            truth.iter().map(|t| if t.1 { VariantType::Snp } else { VariantType::Indel }).collect();
        let r = variant_f1(&genotypes, &genotypes, &types).unwrap();
        for (kind, value) in [(VariantType::Snp, r.snp), (VariantType::Indel, r.indel)] {
            let has_call = genotypes.iter().zip(&types).any(|(g, t)| *t == kind && *g != 0);
            prop_assert_eq!(value, has_call.then_some(1.0));
        }
    }
}
