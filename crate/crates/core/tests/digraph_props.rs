//! Randomized structural properties of the digraph core.

use std::collections::BTreeSet;

use groundtree::Digraph;
use proptest::prelude::*;

fn arbitrary_digraph(max_n: usize) -> impl Strategy<Value = Digraph> {
    (1..=max_n).prop_flat_map(|n| {
        let arcs = if n == 1 {
            Just(Vec::new()).boxed()
        } else {
            let arc = (0..n, 1..n).prop_map(move |(tail, off)| (tail, (tail + off) % n));
            proptest::collection::vec(arc, 0..=3 * n).boxed()
        };
        arcs.prop_map(move |arcs| Digraph::build(n, &arcs).expect("generated arcs are in range"))
    })
}

fn arcs_of(g: &Digraph) -> BTreeSet<(usize, usize)> {
    g.arcs().collect()
}

proptest! {
    #![proptest_config(ProptestConfig {
        failure_persistence: None,
        ..ProptestConfig::default()
    })]

    #[test]
    fn reversing_twice_is_the_identity(g in arbitrary_digraph(12)) {
        let back = g.reverse().reverse();
        prop_assert_eq!(back.id_space(), g.id_space());
        let (bv, gv) = (back.vertex_set(), g.vertex_set());
        prop_assert_eq!(bv.as_slice(), gv.as_slice());
        prop_assert_eq!(arcs_of(&back), arcs_of(&g));
    }

    #[test]
    fn reversal_swaps_degree_roles(g in arbitrary_digraph(12)) {
        let r = g.reverse();
        for v in g.vertices() {
            prop_assert_eq!(r.out_degree(v), g.in_degree(v));
            prop_assert_eq!(r.in_degree(v), g.out_degree(v));
        }
    }

    #[test]
    fn degree_sums_count_arcs(g in arbitrary_digraph(12)) {
        let m = arcs_of(&g).len();
        let out_sum: usize = g.vertices().map(|v| g.out_degree(v)).sum();
        let in_sum: usize = g.vertices().map(|v| g.in_degree(v)).sum();
        prop_assert_eq!(out_sum, m);
        prop_assert_eq!(in_sum, m);
    }

    #[test]
    fn vertex_deletion_leaves_an_induced_subdigraph(
        g in arbitrary_digraph(12),
        picks in proptest::collection::vec(0usize..12, 0..6),
    ) {
        let doomed: BTreeSet<usize> =
            picks.into_iter().filter(|v| g.is_alive(*v)).collect();
        let doomed_set: groundtree::VertexSet = doomed.iter().copied().collect();
        let h = g.delete_vertices(&doomed_set);
        prop_assert_eq!(h.id_space(), g.id_space());
        for v in 0..g.id_space() {
            prop_assert_eq!(h.is_alive(v), g.is_alive(v) && !doomed.contains(&v));
        }
        let expected: BTreeSet<(usize, usize)> = arcs_of(&g)
            .into_iter()
            .filter(|(a, b)| !doomed.contains(a) && !doomed.contains(b))
            .collect();
        prop_assert_eq!(arcs_of(&h), expected);
    }

    #[test]
    fn arc_deletion_removes_exactly_the_listed_arcs(g in arbitrary_digraph(12)) {
        let victims: Vec<(usize, usize)> = arcs_of(&g).into_iter().step_by(2).collect();
        let h = g.delete_arcs(&victims);
        let (hv, gv) = (h.vertex_set(), g.vertex_set());
        prop_assert_eq!(hv.as_slice(), gv.as_slice());
        let survivors: BTreeSet<(usize, usize)> = arcs_of(&g)
            .difference(&victims.iter().copied().collect())
            .copied()
            .collect();
        prop_assert_eq!(arcs_of(&h), survivors);
    }

    #[test]
    fn neighbor_views_agree_with_the_arc_list(g in arbitrary_digraph(12)) {
        let arcs = arcs_of(&g);
        for v in g.vertices() {
            for &w in g.out_neighbors(v) {
                prop_assert!(arcs.contains(&(v, w)));
                prop_assert!(g.has_arc(v, w));
            }
            for &u in g.in_neighbors(v) {
                prop_assert!(arcs.contains(&(u, v)));
            }
        }
    }
}
