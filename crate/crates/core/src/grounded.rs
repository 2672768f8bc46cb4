//! Oriented trees, height functions, and grounded-tree recognition.
//!
//! A height function assigns `h(head) = h(tail) + 1` across every arc; on a
//! tree it is unique up to an additive shift and is normalized here so its
//! maximum value is 0. Writing G for the vertices of in-degree at least 2,
//! a tree is grounded when h is constant on G, and max-grounded when G sits
//! at the maximum height.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::digraph::{Digraph, VertexSet};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TreeError {
    #[error("digraph is empty")]
    Empty,
    #[error("vertices {0} and {1} are joined in both directions")]
    TwoCycle(usize, usize),
    #[error("underlying graph is not connected")]
    Disconnected,
    #[error("underlying graph contains a cycle")]
    Cyclic,
}

/// A digraph whose underlying undirected graph is a tree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OrientedTree {
    digraph: Digraph,
}

impl OrientedTree {
    pub fn new(digraph: Digraph) -> Result<Self, TreeError> {
        let n_live = digraph.vertex_count();
        if n_live == 0 {
            return Err(TreeError::Empty);
        }
        for (u, v) in digraph.arcs() {
            if u < v && digraph.has_arc(v, u) {
                return Err(TreeError::TwoCycle(u, v));
            }
        }
        let (acyclic, comps) = is_oriented_forest(&digraph);
        if comps.len() > 1 {
            return Err(TreeError::Disconnected);
        }
        if !acyclic {
            return Err(TreeError::Cyclic);
        }
        Ok(OrientedTree { digraph })
    }

    pub fn digraph(&self) -> &Digraph {
        &self.digraph
    }

    pub fn vertex_count(&self) -> usize {
        self.digraph.vertex_count()
    }

    /// Neighbors in the underlying undirected tree, ascending.
    pub fn undirected_neighbors(&self, v: usize) -> Vec<usize> {
        let mut ns: Vec<usize> = self
            .digraph
            .out_neighbors(v)
            .iter()
            .chain(self.digraph.in_neighbors(v))
            .copied()
            .collect();
        ns.sort_unstable();
        ns.dedup();
        ns
    }

    /// Vertices of undirected degree at most 1, ascending.
    pub fn leaves(&self) -> Vec<usize> {
        self.digraph
            .vertices()
            .filter(|&v| self.undirected_neighbors(v).len() <= 1)
            .collect()
    }

    /// Removes one vertex; fails if the remainder is not a tree.
    pub fn remove_vertex(&self, v: usize) -> Result<OrientedTree, TreeError> {
        OrientedTree::new(self.digraph.delete_vertices(&VertexSet::from([v])))
    }
}

/// Height assignment on the live vertices of a tree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HeightFunction(BTreeMap<usize, i64>);

impl HeightFunction {
    pub fn h(&self, v: usize) -> i64 {
        self.0[&v]
    }

    pub fn get(&self, v: usize) -> Option<i64> {
        self.0.get(&v).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, i64)> + '_ {
        self.0.iter().map(|(&v, &h)| (v, h))
    }

    pub fn max_value(&self) -> i64 {
        self.0.values().copied().max().unwrap()
    }
}

/// Recognition summary for an oriented tree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroundedProfile {
    pub grounded: bool,
    pub max_grounded: bool,
    /// Vertices of in-degree at least 2.
    pub g: VertexSet,
    /// Sources: vertices of in-degree 0.
    pub z: VertexSet,
    pub normalized_height: HeightFunction,
}

/// Tests whether the underlying undirected graph is acyclic, and returns the
/// weakly-connected components either way. A pair joined in both directions
/// counts as a cycle.
pub fn is_oriented_forest(d: &Digraph) -> (bool, Vec<VertexSet>) {
    let n = d.id_space();
    let mut comp = vec![usize::MAX; n];
    let mut comps: Vec<VertexSet> = Vec::new();
    let mut acyclic = true;
    for (u, v) in d.arcs() {
        if u < v && d.has_arc(v, u) {
            acyclic = false;
        }
    }
    for start in d.vertices() {
        if comp[start] != usize::MAX {
            continue;
        }
        let id = comps.len();
        let mut stack = vec![start];
        comp[start] = id;
        let mut members = vec![start];
        let mut edges = 0usize;
        while let Some(u) = stack.pop() {
            for &w in d.out_neighbors(u).iter().chain(d.in_neighbors(u)) {
                edges += 1;
                if comp[w] == usize::MAX {
                    comp[w] = id;
                    members.push(w);
                    stack.push(w);
                }
            }
        }
        // each undirected adjacency was counted from both ends
        if edges / 2 != members.len() - 1 {
            acyclic = false;
        }
        comps.push(members.into_iter().collect());
    }
    (acyclic, comps)
}

/// The unique height function of `t`, normalized to maximum value 0.
pub fn height_function(t: &OrientedTree) -> HeightFunction {
    let d = t.digraph();
    let root = d.vertices().next().unwrap();
    let mut h: BTreeMap<usize, i64> = BTreeMap::from([(root, 0)]);
    let mut stack = vec![root];
    while let Some(u) = stack.pop() {
        let hu = h[&u];
        for &w in d.out_neighbors(u) {
            if !h.contains_key(&w) {
                h.insert(w, hu + 1);
                stack.push(w);
            }
        }
        for &w in d.in_neighbors(u) {
            if !h.contains_key(&w) {
                h.insert(w, hu - 1);
                stack.push(w);
            }
        }
    }
    let max = h.values().copied().max().unwrap();
    for v in h.values_mut() {
        *v -= max;
    }
    HeightFunction(h)
}

/// Full recognition: heights, G, Z, grounded and max-grounded flags.
pub fn grounded_profile(t: &OrientedTree) -> GroundedProfile {
    let d = t.digraph();
    let h = height_function(t);
    let g: VertexSet = d.vertices().filter(|&v| d.in_degree(v) >= 2).collect();
    let z: VertexSet = d.vertices().filter(|&v| d.in_degree(v) == 0).collect();
    let heights: Vec<i64> = g.iter().map(|v| h.h(v)).collect();
    let grounded = heights.windows(2).all(|w| w[0] == w[1]);
    let max_grounded = grounded && heights.iter().all(|&x| x == 0);
    GroundedProfile {
        grounded,
        max_grounded,
        g,
        z,
        normalized_height: h,
    }
}

/// Groundedness by direct definition, built independently of
/// [`grounded_profile`]: anchor the smallest vertex at 0, propagate the height
/// rule over undirected edges, recount in-degrees from the arc list, and test
/// constancy on G without normalizing.
pub fn brute_grounded(t: &OrientedTree) -> bool {
    let d = t.digraph();
    let anchor = d.vertices().next().unwrap();
    let mut h: BTreeMap<usize, i64> = BTreeMap::from([(anchor, 0)]);
    let mut queue = std::collections::VecDeque::from([anchor]);
    while let Some(u) = queue.pop_front() {
        let hu = h[&u];
        for &w in d.out_neighbors(u) {
            if let std::collections::btree_map::Entry::Vacant(e) = h.entry(w) {
                e.insert(hu + 1);
                queue.push_back(w);
            }
        }
        for &w in d.in_neighbors(u) {
            if let std::collections::btree_map::Entry::Vacant(e) = h.entry(w) {
                e.insert(hu - 1);
                queue.push_back(w);
            }
        }
    }
    for (u, v) in d.arcs() {
        assert_eq!(h[&v], h[&u] + 1, "height rule must hold on a tree");
    }
    let mut indeg: BTreeMap<usize, usize> = BTreeMap::new();
    for (_, v) in d.arcs() {
        *indeg.entry(v).or_insert(0) += 1;
    }
    let g_heights: std::collections::BTreeSet<i64> = d
        .vertices()
        .filter(|v| indeg.get(v).copied().unwrap_or(0) >= 2)
        .map(|v| h[&v])
        .collect();
    g_heights.len() <= 1
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tree(n: usize, arcs: &[(usize, usize)]) -> OrientedTree {
        OrientedTree::new(Digraph::build(n, arcs).unwrap()).unwrap()
    }

    #[test]
    fn forest_splits_components() {
        let d = Digraph::build(4, &[(0, 1), (2, 3)]).unwrap();
        let (ok, comps) = is_oriented_forest(&d);
        assert!(ok);
        assert_eq!(comps, vec![VertexSet::from([0, 1]), VertexSet::from([2, 3])]);
    }

    #[test]
    fn two_cycle_is_not_forest() {
        let d = Digraph::build(2, &[(0, 1), (1, 0)]).unwrap();
        let (ok, _) = is_oriented_forest(&d);
        assert!(!ok);
        assert!(matches!(OrientedTree::new(d), Err(TreeError::TwoCycle(0, 1))));
    }

    #[test]
    fn cycle_rejected() {
        let d = Digraph::build(3, &[(0, 1), (1, 2), (2, 0)]).unwrap();
        assert!(matches!(OrientedTree::new(d), Err(TreeError::Cyclic)));
    }

    #[test]
    fn heights_on_path() {
        let t = tree(3, &[(0, 1), (1, 2)]);
        let h = height_function(&t);
        assert_eq!((h.h(0), h.h(1), h.h(2)), (-2, -1, 0));
    }

    #[test]
    fn heights_on_single_vertex() {
        let t = tree(1, &[]);
        let h = height_function(&t);
        assert_eq!(h.h(0), 0);
    }

    #[test]
    fn heights_join_at_sink() {
        let t = tree(3, &[(0, 2), (1, 2)]);
        let h = height_function(&t);
        assert_eq!((h.h(0), h.h(1), h.h(2)), (-1, -1, 0));
    }

    #[test]
    fn path_is_max_grounded_vacuously() {
        let p = grounded_profile(&tree(3, &[(0, 1), (1, 2)]));
        assert!(p.grounded && p.max_grounded);
        assert!(p.g.is_empty());
        assert_eq!(p.z, VertexSet::from([0]));
    }

    #[test]
    fn join_tree_is_max_grounded() {
        let p = grounded_profile(&tree(3, &[(0, 2), (1, 2)]));
        assert!(p.grounded && p.max_grounded);
        assert_eq!(p.g, VertexSet::from([2]));
        assert_eq!(p.z, VertexSet::from([0, 1]));
    }

    #[test]
    fn hanging_sink_breaks_max_groundedness() {
        // 0->2, 1->2, 2->3: G = {2} below the maximum height
        let p = grounded_profile(&tree(4, &[(0, 2), (1, 2), (2, 3)]));
        assert!(p.grounded);
        assert!(!p.max_grounded);
        assert_eq!(p.normalized_height.h(2), -1);
    }

    #[test]
    fn split_g_heights_are_not_grounded() {
        // joins at 2 (height -1) and at 4 (height 0)
        let p = grounded_profile(&tree(5, &[(0, 2), (1, 2), (2, 4), (3, 4)]));
        assert!(!p.grounded);
        assert!(!p.max_grounded);
    }

    #[test]
    fn brute_agrees_on_small_cases() {
        let cases: Vec<(usize, Vec<(usize, usize)>)> = vec![
            (3, vec![(0, 1), (1, 2)]),
            (3, vec![(0, 2), (1, 2)]),
            (4, vec![(0, 2), (1, 2), (2, 3)]),
            (5, vec![(0, 2), (1, 2), (2, 4), (3, 4)]),
            (5, vec![(0, 2), (1, 2), (3, 2), (2, 4)]),
        ];
        for (n, arcs) in cases {
            let t = tree(n, &arcs);
            assert_eq!(grounded_profile(&t).grounded, brute_grounded(&t), "{arcs:?}");
        }
    }
}
