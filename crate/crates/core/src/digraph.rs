//! Finite digraphs on a fixed id space `0..n`.
//!
//! Vertices are never renumbered: deletion marks a vertex dead and drops its
//! incident arcs, so ids remain stable across every derived subdigraph. All
//! adjacency lists are kept sorted ascending, which makes traversal order,
//! tie-breaking and serialization deterministic. Values are immutable after
//! construction; every operation returns a fresh `Digraph`.

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GraphError {
    #[error("arc ({0}, {0}) is a self-loop")]
    SelfLoop(usize),
    #[error("vertex {v} out of range for id space 0..{n}")]
    OutOfRange { v: usize, n: usize },
    #[error("vertex {0} is not alive")]
    DeadVertex(usize),
}

/// Sorted, duplicate-free set of vertex ids.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct VertexSet(Vec<usize>);

impl VertexSet {
    pub fn new() -> Self {
        VertexSet(Vec::new())
    }

    pub fn from_sorted(v: Vec<usize>) -> Self {
        debug_assert!(v.windows(2).all(|w| w[0] < w[1]));
        VertexSet(v)
    }

    pub fn contains(&self, v: usize) -> bool {
        self.0.binary_search(&v).is_ok()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().copied()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn min(&self) -> Option<usize> {
        self.0.first().copied()
    }

    /// Set difference `self \ other`.
    pub fn difference(&self, other: &VertexSet) -> VertexSet {
        self.iter().filter(|&v| !other.contains(v)).collect()
    }

    pub fn intersection(&self, other: &VertexSet) -> VertexSet {
        self.iter().filter(|&v| other.contains(v)).collect()
    }

    pub fn union(&self, other: &VertexSet) -> VertexSet {
        self.iter().chain(other.iter()).collect()
    }
}

impl FromIterator<usize> for VertexSet {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        let set: BTreeSet<usize> = iter.into_iter().collect();
        VertexSet(set.into_iter().collect())
    }
}

impl From<&[usize]> for VertexSet {
    fn from(s: &[usize]) -> Self {
        s.iter().copied().collect()
    }
}

impl<const N: usize> From<[usize; N]> for VertexSet {
    fn from(s: [usize; N]) -> Self {
        s.into_iter().collect()
    }
}

impl fmt::Display for VertexSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, v) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{v}")?;
        }
        write!(f, "}}")
    }
}

/// Vertex sequence `v_0, ..., v_m`; its length is `m`, counted in arcs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Walk(Vec<usize>);

impl Walk {
    pub fn new(verts: Vec<usize>) -> Self {
        assert!(!verts.is_empty(), "a walk has at least one vertex");
        Walk(verts)
    }

    pub fn len_arcs(&self) -> usize {
        self.0.len() - 1
    }

    pub fn first(&self) -> usize {
        self.0[0]
    }

    pub fn last(&self) -> usize {
        *self.0.last().unwrap()
    }

    pub fn verts(&self) -> &[usize] {
        &self.0
    }

    /// True when no vertex repeats.
    pub fn is_path(&self) -> bool {
        let set: BTreeSet<usize> = self.0.iter().copied().collect();
        set.len() == self.0.len()
    }

    /// True when every consecutive pair is an arc of `d`.
    pub fn is_walk_in(&self, d: &Digraph) -> bool {
        self.0.iter().all(|&v| d.is_alive(v))
            && self.0.windows(2).all(|w| d.has_arc(w[0], w[1]))
    }
}

impl fmt::Display for Walk {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, v) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, " -> ")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

/// Immutable digraph with stable vertex ids and a liveness mask.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Digraph {
    n: usize,
    alive: Vec<bool>,
    out_adj: Vec<Vec<usize>>,
    in_adj: Vec<Vec<usize>>,
}

impl Digraph {
    /// Builds a digraph on `0..n` from an arc list; duplicates collapse.
    pub fn build(n: usize, arcs: &[(usize, usize)]) -> Result<Self, GraphError> {
        let mut set = BTreeSet::new();
        for &(u, v) in arcs {
            if u >= n {
                return Err(GraphError::OutOfRange { v: u, n });
            }
            if v >= n {
                return Err(GraphError::OutOfRange { v, n });
            }
            if u == v {
                return Err(GraphError::SelfLoop(u));
            }
            set.insert((u, v));
        }
        Ok(Self::from_arc_set(n, vec![true; n], &set))
    }

    /// Assembles a subdigraph value: only `alive` vertices, only arcs between them.
    pub fn assemble(n: usize, alive: Vec<bool>, arcs: &BTreeSet<(usize, usize)>) -> Self {
        assert_eq!(alive.len(), n);
        let kept: BTreeSet<(usize, usize)> = arcs
            .iter()
            .copied()
            .filter(|&(u, v)| alive[u] && alive[v])
            .collect();
        Self::from_arc_set(n, alive, &kept)
    }

    fn from_arc_set(n: usize, alive: Vec<bool>, arcs: &BTreeSet<(usize, usize)>) -> Self {
        let mut out_adj = vec![Vec::new(); n];
        let mut in_adj = vec![Vec::new(); n];
        for &(u, v) in arcs {
            out_adj[u].push(v);
            in_adj[v].push(u);
        }
        for l in in_adj.iter_mut() {
            l.sort_unstable();
        }
        // out_adj is already sorted: arcs iterate in (u, v) order.
        Digraph { n, alive, out_adj, in_adj }
    }

    /// Size of the id space (dead ids included).
    pub fn id_space(&self) -> usize {
        self.n
    }

    pub fn is_alive(&self, v: usize) -> bool {
        v < self.n && self.alive[v]
    }

    /// Live vertices, ascending.
    pub fn vertices(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.n).filter(|&v| self.alive[v])
    }

    pub fn vertex_set(&self) -> VertexSet {
        self.vertices().collect()
    }

    pub fn vertex_count(&self) -> usize {
        self.alive.iter().filter(|&&a| a).count()
    }

    pub fn arc_count(&self) -> usize {
        self.out_adj.iter().map(|l| l.len()).sum()
    }

    /// All arcs in ascending (tail, head) order.
    pub fn arcs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n).flat_map(move |u| self.out_adj[u].iter().map(move |&v| (u, v)))
    }

    pub fn has_arc(&self, u: usize, v: usize) -> bool {
        u < self.n && self.out_adj[u].binary_search(&v).is_ok()
    }

    pub fn out_neighbors(&self, v: usize) -> &[usize] {
        &self.out_adj[v]
    }

    pub fn in_neighbors(&self, v: usize) -> &[usize] {
        &self.in_adj[v]
    }

    pub fn out_degree(&self, v: usize) -> usize {
        self.out_adj[v].len()
    }

    pub fn in_degree(&self, v: usize) -> usize {
        self.in_adj[v].len()
    }

    /// Minimum out-degree over live vertices; `None` on an empty digraph.
    pub fn min_out_degree(&self) -> Option<usize> {
        self.vertices().map(|v| self.out_degree(v)).min()
    }

    /// Marks the given vertices dead and drops their incident arcs.
    pub fn delete_vertices(&self, xs: &VertexSet) -> Digraph {
        let mut alive = self.alive.clone();
        for v in xs.iter() {
            if v < self.n {
                alive[v] = false;
            }
        }
        let arcs: BTreeSet<(usize, usize)> = self.arcs().collect();
        Self::assemble(self.n, alive, &arcs)
    }

    /// Removes the given arcs; absent arcs are ignored.
    pub fn delete_arcs(&self, drop: &[(usize, usize)]) -> Digraph {
        let dropset: BTreeSet<(usize, usize)> = drop.iter().copied().collect();
        let arcs: BTreeSet<(usize, usize)> =
            self.arcs().filter(|a| !dropset.contains(a)).collect();
        Self::from_arc_set(self.n, self.alive.clone(), &arcs)
    }

    /// Subdigraph induced on `xs`: exactly the arcs with both ends in `xs`.
    pub fn induced(&self, xs: &VertexSet) -> Digraph {
        let alive: Vec<bool> = (0..self.n)
            .map(|v| self.alive[v] && xs.contains(v))
            .collect();
        let arcs: BTreeSet<(usize, usize)> = self.arcs().collect();
        Self::assemble(self.n, alive, &arcs)
    }

    /// All arcs reversed; same vertex set.
    pub fn reverse(&self) -> Digraph {
        let arcs: BTreeSet<(usize, usize)> = self.arcs().map(|(u, v)| (v, u)).collect();
        Self::from_arc_set(self.n, self.alive.clone(), &arcs)
    }

    /// Lexicographically smallest shortest directed path from `v` into `s`.
    ///
    /// BFS expands frontiers in ascending id order, so among all shortest
    /// paths the returned vertex sequence is the lexicographically first.
    pub fn shortest_path_to_set(&self, v: usize, s: &VertexSet) -> Option<Walk> {
        if !self.is_alive(v) {
            return None;
        }
        if s.contains(v) {
            return Some(Walk::new(vec![v]));
        }
        let mut parent: Vec<Option<usize>> = vec![None; self.n];
        let mut seen = vec![false; self.n];
        seen[v] = true;
        let mut frontier = vec![v];
        while !frontier.is_empty() {
            let mut next = Vec::new();
            let mut hit: Option<usize> = None;
            for &u in &frontier {
                for &w in self.out_neighbors(u) {
                    if seen[w] {
                        continue;
                    }
                    seen[w] = true;
                    parent[w] = Some(u);
                    if s.contains(w) && hit.is_none() {
                        hit = Some(w);
                    }
                    next.push(w);
                }
                if hit.is_some() {
                    break;
                }
            }
            if let Some(t) = hit {
                let mut path = vec![t];
                let mut cur = t;
                while let Some(p) = parent[cur] {
                    path.push(p);
                    cur = p;
                }
                path.reverse();
                return Some(Walk::new(path));
            }
            frontier = next;
        }
        None
    }

    /// BFS distance from `v` to the nearest vertex of `s`, in arcs.
    pub fn distance_to_set(&self, v: usize, s: &VertexSet) -> Option<usize> {
        self.shortest_path_to_set(v, s).map(|w| w.len_arcs())
    }

    /// Endpoints of all walks of length exactly `i` starting at `v`.
    pub fn walks_of_length(&self, v: usize, i: usize) -> VertexSet {
        if !self.is_alive(v) {
            return VertexSet::new();
        }
        let mut cur: BTreeSet<usize> = BTreeSet::from([v]);
        for _ in 0..i {
            let mut next = BTreeSet::new();
            for &u in &cur {
                next.extend(self.out_neighbors(u).iter().copied());
            }
            cur = next;
            if cur.is_empty() {
                break;
            }
        }
        cur.into_iter().collect()
    }

    /// DOT rendering, one arc per line; `roots` get `shape=doublecircle`.
    pub fn to_dot(&self, roots: Option<&VertexSet>) -> String {
        let mut out = String::from("digraph {\n");
        if let Some(rs) = roots {
            for r in rs.iter() {
                out.push_str(&format!("  {r} [shape=doublecircle];\n"));
            }
        }
        for v in self.vertices() {
            let is_root = roots.map(|rs| rs.contains(v)).unwrap_or(false);
            if !is_root && self.out_degree(v) == 0 && self.in_degree(v) == 0 {
                out.push_str(&format!("  {v};\n"));
            }
        }
        for (u, v) in self.arcs() {
            out.push_str(&format!("  {u} -> {v};\n"));
        }
        out.push_str("}\n");
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn build_three_cycle() {
        let d = Digraph::build(3, &[(0, 1), (1, 2), (2, 0)]).unwrap();
        assert_eq!(d.vertex_count(), 3);
        assert_eq!(d.arc_count(), 3);
        for v in 0..3 {
            assert_eq!(d.out_degree(v), 1);
            assert_eq!(d.in_degree(v), 1);
        }
    }

    #[test]
    fn build_single_vertex() {
        let d = Digraph::build(1, &[]).unwrap();
        assert_eq!(d.vertex_count(), 1);
        assert_eq!(d.arc_count(), 0);
    }

    #[test]
    fn build_dedups_and_rejects() {
        let d = Digraph::build(2, &[(0, 1), (0, 1), (1, 0)]).unwrap();
        assert_eq!(d.arc_count(), 2);
        assert_eq!(Digraph::build(2, &[(0, 0)]), Err(GraphError::SelfLoop(0)));
        assert_eq!(
            Digraph::build(2, &[(0, 5)]),
            Err(GraphError::OutOfRange { v: 5, n: 2 })
        );
    }

    #[test]
    fn delete_vertex_from_cycle() {
        let d = Digraph::build(3, &[(0, 1), (1, 2), (2, 0)]).unwrap();
        let d2 = d.delete_vertices(&VertexSet::from([1]));
        assert!(!d2.is_alive(1));
        assert_eq!(d2.arcs().collect::<Vec<_>>(), vec![(2, 0)]);
        assert_eq!(d2.vertex_count(), 2);
    }

    #[test]
    fn delete_arc_keeps_vertices() {
        let d = Digraph::build(3, &[(0, 1), (1, 2), (2, 0)]).unwrap();
        let d2 = d.delete_arcs(&[(0, 1)]);
        assert_eq!(d2.vertex_count(), 3);
        assert_eq!(d2.arcs().collect::<Vec<_>>(), vec![(1, 2), (2, 0)]);
    }

    #[test]
    fn delete_nothing_is_identity() {
        let d = Digraph::build(3, &[(0, 1), (1, 2), (2, 0)]).unwrap();
        assert_eq!(d.delete_vertices(&VertexSet::new()), d);
        assert_eq!(d.delete_arcs(&[]), d);
    }

    #[test]
    fn induced_complete_pair() {
        // complete digraph on 3 vertices, induce on {0, 1}
        let arcs = [(0, 1), (1, 0), (0, 2), (2, 0), (1, 2), (2, 1)];
        let d = Digraph::build(3, &arcs).unwrap();
        let sub = d.induced(&VertexSet::from([0, 1]));
        assert_eq!(sub.arcs().collect::<Vec<_>>(), vec![(0, 1), (1, 0)]);
        assert_eq!(sub.vertex_count(), 2);
    }

    #[test]
    fn induced_full_is_identity() {
        let d = Digraph::build(4, &[(0, 1), (2, 3)]).unwrap();
        assert_eq!(d.induced(&d.vertex_set()), d);
    }

    #[test]
    fn induced_skips_bridging_vertex() {
        let d = Digraph::build(3, &[(0, 1), (1, 2), (2, 0)]).unwrap();
        let sub = d.induced(&VertexSet::from([0, 2]));
        assert_eq!(sub.arcs().collect::<Vec<_>>(), vec![(2, 0)]);
    }

    #[test]
    fn shortest_path_around_cycle() {
        let d = Digraph::build(3, &[(0, 1), (1, 2), (2, 0)]).unwrap();
        let w = d.shortest_path_to_set(0, &VertexSet::from([2])).unwrap();
        assert_eq!(w.verts(), &[0, 1, 2]);
        assert!(w.is_path());
    }

    #[test]
    fn shortest_path_trivial_when_inside() {
        let d = Digraph::build(3, &[(0, 1), (1, 2), (2, 0)]).unwrap();
        let w = d.shortest_path_to_set(1, &VertexSet::from([1, 2])).unwrap();
        assert_eq!(w.verts(), &[1]);
        assert_eq!(w.len_arcs(), 0);
    }

    #[test]
    fn shortest_path_prefers_smaller_branch() {
        // two equal-length routes 0->1->3 and 0->2->3
        let d = Digraph::build(4, &[(0, 2), (0, 1), (1, 3), (2, 3)]).unwrap();
        let w = d.shortest_path_to_set(0, &VertexSet::from([3])).unwrap();
        assert_eq!(w.verts(), &[0, 1, 3]);
    }

    #[test]
    fn shortest_path_none_when_unreachable() {
        let d = Digraph::build(3, &[(0, 1)]).unwrap();
        assert!(d.shortest_path_to_set(1, &VertexSet::from([0])).is_none());
    }

    #[test]
    fn walks_wrap_cycle() {
        let d = Digraph::build(3, &[(0, 1), (1, 2), (2, 0)]).unwrap();
        assert_eq!(d.walks_of_length(0, 3), VertexSet::from([0]));
        assert_eq!(d.walks_of_length(0, 0), VertexSet::from([0]));
    }

    #[test]
    fn walks_spread_in_complete_digraph() {
        let arcs = [(0, 1), (1, 0), (0, 2), (2, 0), (1, 2), (2, 1)];
        let d = Digraph::build(3, &arcs).unwrap();
        assert_eq!(d.walks_of_length(0, 2), VertexSet::from([0, 1, 2]));
    }

    #[test]
    fn degrees_match_arc_list_after_delete() {
        let d = Digraph::build(5, &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 0), (1, 3)]).unwrap();
        let d2 = d.delete_vertices(&VertexSet::from([2]));
        for v in d2.vertices() {
            let out = d2.arcs().filter(|&(u, _)| u == v).count();
            let inn = d2.arcs().filter(|&(_, w)| w == v).count();
            assert_eq!(out, d2.out_degree(v));
            assert_eq!(inn, d2.in_degree(v));
        }
    }

    #[test]
    fn dot_marks_roots() {
        let d = Digraph::build(2, &[(0, 1)]).unwrap();
        let dot = d.to_dot(Some(&VertexSet::from([0])));
        assert!(dot.contains("0 [shape=doublecircle];"));
        assert!(dot.contains("0 -> 1;"));
    }
}
