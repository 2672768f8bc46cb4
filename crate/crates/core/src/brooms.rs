//! Brooms and broom digraphs.
//!
//! A (k,d)-broom is an out-arborescence that is either balanced of height
//! ℓ ≤ k with every non-leaf of out-degree exactly d, or built from a
//! balanced height-(k+1) tree of the same degree by subdividing the root's
//! out-arcs. A broom digraph is an arc-exact union of internally disjoint
//! brooms, one per root-set vertex, with every broom leaf back in the root
//! set. Shape class and subdivision vertices are inferred by the validator,
//! never supplied.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::digraph::{Digraph, VertexSet, Walk};
use crate::io::{BroomJson, CertificateJson};

/// Why a candidate fails to be an out-arborescence.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ArbDefect {
    #[error("root {0} is not a live vertex")]
    RootNotLive(usize),
    #[error("root {0} has an incoming arc")]
    RootHasInArc(usize),
    #[error("vertex {vertex} has in-degree {degree}, want 1")]
    BadInDegree { vertex: usize, degree: usize },
    #[error("vertex {0} is not reachable from the root")]
    Unreachable(usize),
}

/// First clause a broom candidate violates.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BroomViolation {
    #[error("not an out-arborescence: {0}")]
    NotArborescence(ArbDefect),
    #[error("a bare root is not a broom")]
    SingleVertex,
    #[error("k must be at least 1")]
    KOutOfRange,
    #[error("leaf {leaf} at depth {depth}, want {expected}")]
    Unbalanced { leaf: usize, depth: usize, expected: usize },
    #[error("vertex {vertex} has out-degree {degree}, want {expected}")]
    WrongDegree { vertex: usize, degree: usize, expected: usize },
    #[error("out-degree-1 chain through {0} below the first branching layer")]
    IllegalSubdivision(usize),
}

/// Oriented tree with all arcs pointing away from a designated root.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OutArborescence {
    digraph: Digraph,
    root: usize,
    parent: Vec<Option<usize>>,
    depth: Vec<Option<usize>>,
}

impl OutArborescence {
    pub fn new(digraph: Digraph, root: usize) -> Result<Self, ArbDefect> {
        if !digraph.is_alive(root) {
            return Err(ArbDefect::RootNotLive(root));
        }
        if digraph.in_degree(root) != 0 {
            return Err(ArbDefect::RootHasInArc(root));
        }
        for v in digraph.vertices() {
            if v != root && digraph.in_degree(v) != 1 {
                return Err(ArbDefect::BadInDegree { vertex: v, degree: digraph.in_degree(v) });
            }
        }
        let n = digraph.id_space();
        let mut parent = vec![None; n];
        let mut depth = vec![None; n];
        depth[root] = Some(0);
        let mut queue = std::collections::VecDeque::from([root]);
        while let Some(u) = queue.pop_front() {
            for &w in digraph.out_neighbors(u) {
                if depth[w].is_none() {
                    depth[w] = Some(depth[u].unwrap() + 1);
                    parent[w] = Some(u);
                    queue.push_back(w);
                }
            }
        }
        if let Some(v) = digraph.vertices().find(|&v| depth[v].is_none()) {
            return Err(ArbDefect::Unreachable(v));
        }
        Ok(OutArborescence { digraph, root, parent, depth })
    }

    pub fn digraph(&self) -> &Digraph {
        &self.digraph
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn vertex_count(&self) -> usize {
        self.digraph.vertex_count()
    }

    /// Children in ascending id order.
    pub fn children(&self, v: usize) -> &[usize] {
        self.digraph.out_neighbors(v)
    }

    pub fn parent(&self, v: usize) -> Option<usize> {
        self.parent[v]
    }

    pub fn depth(&self, v: usize) -> usize {
        self.depth[v].expect("vertex not in arborescence")
    }

    pub fn height(&self) -> usize {
        self.digraph.vertices().map(|v| self.depth(v)).max().unwrap()
    }

    pub fn is_leaf(&self, v: usize) -> bool {
        self.digraph.is_alive(v) && self.digraph.out_degree(v) == 0
    }

    /// Out-degree-0 vertices, ascending.
    pub fn leaves(&self) -> VertexSet {
        self.digraph.vertices().filter(|&v| self.is_leaf(v)).collect()
    }

    /// Vertices that are neither the root nor a leaf, ascending.
    pub fn internal_vertices(&self) -> VertexSet {
        self.digraph
            .vertices()
            .filter(|&v| v != self.root && !self.is_leaf(v))
            .collect()
    }

    /// The root-to-v path.
    pub fn path_from_root(&self, v: usize) -> Walk {
        let mut verts = vec![v];
        let mut cur = v;
        while let Some(p) = self.parent[cur] {
            verts.push(p);
            cur = p;
        }
        verts.reverse();
        Walk::new(verts)
    }

    /// The sub-arborescence rooted at v.
    pub fn subtree(&self, v: usize) -> OutArborescence {
        let mut keep = vec![v];
        let mut stack = vec![v];
        while let Some(u) = stack.pop() {
            for &w in self.children(u) {
                keep.push(w);
                stack.push(w);
            }
        }
        let set: VertexSet = keep.into_iter().collect();
        OutArborescence::new(self.digraph.induced(&set), v)
            .expect("subtree of an arborescence is an arborescence")
    }
}

/// A validated (k,d)-broom.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Broom {
    arbo: OutArborescence,
    k: usize,
    d: usize,
    ell: usize,
    subdivision_vertices: VertexSet,
}

impl Broom {
    pub fn host(&self) -> &OutArborescence {
        &self.arbo
    }

    pub fn digraph(&self) -> &Digraph {
        self.arbo.digraph()
    }

    pub fn root(&self) -> usize {
        self.arbo.root()
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn ell(&self) -> usize {
        self.ell
    }

    pub fn subdivision_vertices(&self) -> &VertexSet {
        &self.subdivision_vertices
    }

    pub fn leaves(&self) -> VertexSet {
        self.arbo.leaves()
    }

    /// Keeps the `target` smallest children at the root and at every branch
    /// and internal vertex; subdivision chains pass through untouched. The
    /// result is a (k, target)-broom with the same shape class.
    pub fn prune_to_degree(&self, target: usize) -> Result<Broom, PruneError> {
        if target == 0 {
            return Err(PruneError::TargetZero);
        }
        if target > self.d {
            return Err(PruneError::TargetExceedsDegree { target, d: self.d });
        }
        let mut arcs = BTreeSet::new();
        let mut alive = vec![false; self.digraph().id_space()];
        alive[self.root()] = true;
        let mut stack = vec![self.root()];
        while let Some(u) = stack.pop() {
            let kids = self.arbo.children(u);
            let keep = if self.subdivision_vertices.contains(u) { kids.len() } else { target };
            for &c in kids.iter().take(keep) {
                arcs.insert((u, c));
                alive[c] = true;
                stack.push(c);
            }
        }
        let host = Digraph::assemble(self.digraph().id_space(), alive, &arcs);
        let pruned = validate_broom(host, self.root(), self.k, target)
            .expect("degree-pruning preserves broom shape");
        Ok(pruned)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PruneError {
    #[error("prune target must be at least 1")]
    TargetZero,
    #[error("prune target {target} exceeds broom degree {d}")]
    TargetExceedsDegree { target: usize, d: usize },
}

/// Checks whether `candidate` is a (k,d)-broom rooted at `r`, inferring the
/// shape class ℓ and the subdivision vertices.
pub fn validate_broom(
    candidate: Digraph,
    r: usize,
    k: usize,
    d: usize,
) -> Result<Broom, BroomViolation> {
    if k == 0 {
        return Err(BroomViolation::KOutOfRange);
    }
    let arbo = OutArborescence::new(candidate, r).map_err(BroomViolation::NotArborescence)?;
    if arbo.vertex_count() == 1 {
        return Err(BroomViolation::SingleVertex);
    }
    let leaves = arbo.leaves();
    let depths: Vec<usize> = leaves.iter().map(|l| arbo.depth(l)).collect();
    let max_depth = *depths.iter().max().unwrap();

    if max_depth <= k {
        // only the balanced branch can apply
        for (l, dep) in leaves.iter().zip(&depths) {
            if *dep != max_depth {
                return Err(BroomViolation::Unbalanced { leaf: l, depth: *dep, expected: max_depth });
            }
        }
        for v in arbo.digraph().vertices() {
            if !arbo.is_leaf(v) && arbo.digraph().out_degree(v) != d {
                return Err(BroomViolation::WrongDegree {
                    vertex: v,
                    degree: arbo.digraph().out_degree(v),
                    expected: d,
                });
            }
        }
        let ell = max_depth;
        return Ok(Broom { arbo, k, d, ell, subdivision_vertices: VertexSet::new() });
    }

    // ℓ = k+1: contracting the out-degree-1 chains on the root's arcs must
    // leave a balanced tree of height k+1 with all non-leaf degrees d
    if arbo.digraph().out_degree(r) != d {
        return Err(BroomViolation::WrongDegree {
            vertex: r,
            degree: arbo.digraph().out_degree(r),
            expected: d,
        });
    }
    let mut subdivision = Vec::new();
    for &c in arbo.children(r) {
        let mut cur = c;
        while arbo.digraph().out_degree(cur) == 1 {
            let next = arbo.children(cur)[0];
            if d == 1 && arbo.depth(cur) + k == arbo.depth(leaf_below(&arbo, cur)) {
                // 1-ary trees: the chain ends k steps above the leaf
                break;
            }
            subdivision.push(cur);
            cur = next;
        }
        let b = cur;
        if arbo.is_leaf(b) {
            return Err(BroomViolation::Unbalanced {
                leaf: b,
                depth: arbo.depth(b),
                expected: k + 1,
            });
        }
        if arbo.digraph().out_degree(b) != d {
            return Err(BroomViolation::WrongDegree {
                vertex: b,
                degree: arbo.digraph().out_degree(b),
                expected: d,
            });
        }
        check_balanced_below(&arbo, b, k, d)?;
    }
    Ok(Broom {
        arbo,
        k,
        d,
        ell: k + 1,
        subdivision_vertices: subdivision.into_iter().collect(),
    })
}

fn leaf_below(arbo: &OutArborescence, mut v: usize) -> usize {
    while !arbo.is_leaf(v) {
        v = arbo.children(v)[0];
    }
    v
}

/// Every leaf under `b` at relative depth exactly `k`, every non-leaf of
/// out-degree exactly `d`.
fn check_balanced_below(
    arbo: &OutArborescence,
    b: usize,
    k: usize,
    d: usize,
) -> Result<(), BroomViolation> {
    let base = arbo.depth(b);
    let mut queue = std::collections::VecDeque::from([b]);
    while let Some(u) = queue.pop_front() {
        let rel = arbo.depth(u) - base;
        if arbo.is_leaf(u) {
            if rel != k {
                return Err(BroomViolation::Unbalanced { leaf: u, depth: rel, expected: k });
            }
            continue;
        }
        if rel >= k {
            let witness = leaf_below(arbo, u);
            return Err(BroomViolation::Unbalanced {
                leaf: witness,
                depth: arbo.depth(witness) - base,
                expected: k,
            });
        }
        let deg = arbo.digraph().out_degree(u);
        if deg != d {
            if deg == 1 && u != b {
                return Err(BroomViolation::IllegalSubdivision(u));
            }
            return Err(BroomViolation::WrongDegree { vertex: u, degree: deg, expected: d });
        }
        queue.extend(arbo.children(u));
    }
    Ok(())
}

/// Why a candidate fails to be a (k,d)-broom digraph.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BroomDigraphViolation {
    #[error("root set is empty")]
    EmptyRootSet,
    #[error("root {0} is not a live vertex")]
    RootNotLive(usize),
    #[error("no broom certified for root {0}")]
    MissingBroom(usize),
    #[error("certificate names {0}, which is not in the root set")]
    ForeignBroom(usize),
    #[error("broom at {root}: {violation}")]
    BadBroom { root: usize, violation: BroomViolation },
    #[error("broom at {root}: leaf {leaf} is outside the root set")]
    LeafOutsideRootSet { root: usize, leaf: usize },
    #[error("broom at {root}: internal vertex {vertex} is in the root set")]
    InternalInRootSet { root: usize, vertex: usize },
    #[error("vertex {vertex} is internal to brooms {} and {}", .roots.0, .roots.1)]
    SharedInternal { vertex: usize, roots: (usize, usize) },
    #[error("broom at {root}: arc {} -> {} is not in the digraph", .arc.0, .arc.1)]
    MissingArc { root: usize, arc: (usize, usize) },
    #[error("arc {} -> {} belongs to no broom", .arc.0, .arc.1)]
    ExtraArc { arc: (usize, usize) },
    #[error("vertex {0} belongs to no broom")]
    StrayVertex(usize),
}

/// A digraph certified as an arc-exact union of internally disjoint brooms.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BroomDigraph {
    digraph: Digraph,
    roots: VertexSet,
    brooms: BTreeMap<usize, Broom>,
    k: usize,
    d: usize,
    owner: BTreeMap<usize, usize>,
}

impl BroomDigraph {
    pub fn digraph(&self) -> &Digraph {
        &self.digraph
    }

    pub fn roots(&self) -> &VertexSet {
        &self.roots
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn broom(&self, r: usize) -> Option<&Broom> {
        self.brooms.get(&r)
    }

    pub fn brooms(&self) -> impl Iterator<Item = (usize, &Broom)> {
        self.brooms.iter().map(|(&r, b)| (r, b))
    }

    pub fn to_certificate(&self) -> CertificateJson {
        CertificateJson {
            roots: self.roots.iter().collect(),
            brooms: self
                .brooms
                .values()
                .map(|b| BroomJson { root: b.root(), arcs: b.digraph().arcs().collect() })
                .collect(),
        }
    }

    /// The unique shortest path from the root set to `u`: the root-to-u path
    /// of the one broom holding `u` as its root or an internal vertex.
    pub fn source_path(&self, u: usize) -> Result<Walk, SourcePathError> {
        if self.roots.contains(u) {
            return Ok(Walk::new(vec![u]));
        }
        let r = self.owner.get(&u).copied().ok_or(SourcePathError::NoOwner(u))?;
        Ok(self.brooms[&r].host().path_from_root(u))
    }

    /// True when `v` has a directed path of length at most k to the root set.
    pub fn within_reach(&self, v: usize) -> bool {
        matches!(self.digraph.distance_to_set(v, &self.roots), Some(dist) if dist <= self.k)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SourcePathError {
    #[error("vertex {0} is neither a root nor internal to any broom")]
    NoOwner(usize),
}

/// Checks all three broom-digraph clauses plus every broom's own shape.
pub fn validate_broom_digraph(
    digraph: Digraph,
    roots: VertexSet,
    certificate: &CertificateJson,
    k: usize,
    d: usize,
) -> Result<BroomDigraph, BroomDigraphViolation> {
    if roots.is_empty() {
        return Err(BroomDigraphViolation::EmptyRootSet);
    }
    for r in roots.iter() {
        if !digraph.is_alive(r) {
            return Err(BroomDigraphViolation::RootNotLive(r));
        }
    }
    let cert_roots: BTreeSet<usize> = certificate.brooms.iter().map(|b| b.root).collect();
    if let Some(r) = roots.iter().find(|r| !cert_roots.contains(r)) {
        return Err(BroomDigraphViolation::MissingBroom(r));
    }
    if let Some(&r) = cert_roots.iter().find(|r| !roots.contains(**r)) {
        return Err(BroomDigraphViolation::ForeignBroom(r));
    }

    let n = digraph.id_space();
    let mut brooms = BTreeMap::new();
    let mut owner: BTreeMap<usize, usize> = BTreeMap::new();
    let mut covered_arcs: BTreeSet<(usize, usize)> = BTreeSet::new();
    let mut covered_verts: BTreeSet<usize> = BTreeSet::new();
    for entry in &certificate.brooms {
        let r = entry.root;
        for &arc in &entry.arcs {
            if !digraph.is_alive(arc.0)
                || !digraph.is_alive(arc.1)
                || !digraph.has_arc(arc.0, arc.1)
            {
                return Err(BroomDigraphViolation::MissingArc { root: r, arc });
            }
        }
        let arc_set: BTreeSet<(usize, usize)> = entry.arcs.iter().copied().collect();
        let mut alive = vec![false; n];
        alive[r] = true;
        for &(u, v) in &arc_set {
            alive[u] = true;
            alive[v] = true;
        }
        let host = Digraph::assemble(n, alive, &arc_set);
        let broom = validate_broom(host, r, k, d)
            .map_err(|violation| BroomDigraphViolation::BadBroom { root: r, violation })?;
        for l in broom.leaves().iter() {
            if !roots.contains(l) {
                return Err(BroomDigraphViolation::LeafOutsideRootSet { root: r, leaf: l });
            }
        }
        for v in broom.host().internal_vertices().iter() {
            if roots.contains(v) {
                return Err(BroomDigraphViolation::InternalInRootSet { root: r, vertex: v });
            }
            if let Some(&other) = owner.get(&v) {
                return Err(BroomDigraphViolation::SharedInternal { vertex: v, roots: (other, r) });
            }
            owner.insert(v, r);
        }
        covered_arcs.extend(broom.digraph().arcs());
        covered_verts.extend(broom.digraph().vertices());
        brooms.insert(r, broom);
    }
    if let Some(arc) = digraph.arcs().find(|a| !covered_arcs.contains(a)) {
        return Err(BroomDigraphViolation::ExtraArc { arc });
    }
    if let Some(v) = digraph.vertices().find(|v| !covered_verts.contains(v)) {
        return Err(BroomDigraphViolation::StrayVertex(v));
    }
    // internal disjointness makes broom membership unambiguous, so the unions
    // above cannot overcount; the two containment checks give arc-exactness
    Ok(BroomDigraph { digraph, roots, brooms, k, d, owner })
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OutRegularError {
    #[error("vertex {vertex} has out-degree {degree}, want {expected}")]
    NotOutRegular { vertex: usize, degree: usize, expected: usize },
    #[error("vertex {vertex} has out-degree {degree}, below {d}")]
    DegreeTooSmall { vertex: usize, degree: usize, d: usize },
    #[error("out-degree 0 admits no brooms")]
    ZeroDegree,
    #[error("digraph has no vertices")]
    Empty,
}

/// Reads a d-out-regular digraph as a (k,d)-broom digraph: every vertex is a
/// root and its broom is the height-1 star of its out-arcs.
pub fn from_out_regular(digraph: Digraph, k: usize) -> Result<BroomDigraph, OutRegularError> {
    let first = digraph.vertices().next().ok_or(OutRegularError::Empty)?;
    let d = digraph.out_degree(first);
    if d == 0 {
        return Err(OutRegularError::ZeroDegree);
    }
    for v in digraph.vertices() {
        if digraph.out_degree(v) != d {
            return Err(OutRegularError::NotOutRegular {
                vertex: v,
                degree: digraph.out_degree(v),
                expected: d,
            });
        }
    }
    let certificate = CertificateJson {
        roots: digraph.vertices().collect(),
        brooms: digraph
            .vertices()
            .map(|r| BroomJson {
                root: r,
                arcs: digraph.out_neighbors(r).iter().map(|&w| (r, w)).collect(),
            })
            .collect(),
    };
    let roots = digraph.vertex_set();
    validate_broom_digraph(digraph, roots, &certificate, k, d)
        .map_err(|e| unreachable!("out-regular star certificate must validate: {e}"))
}

/// Keeps exactly the `d` smallest-id out-neighbors at every vertex.
pub fn trim_out_regular(digraph: &Digraph, d: usize) -> Result<Digraph, OutRegularError> {
    for v in digraph.vertices() {
        if digraph.out_degree(v) < d {
            return Err(OutRegularError::DegreeTooSmall {
                vertex: v,
                degree: digraph.out_degree(v),
                d,
            });
        }
    }
    let mut arcs = BTreeSet::new();
    let mut alive = vec![false; digraph.id_space()];
    for v in digraph.vertices() {
        alive[v] = true;
        for &w in digraph.out_neighbors(v).iter().take(d) {
            arcs.insert((v, w));
        }
    }
    Ok(Digraph::assemble(digraph.id_space(), alive, &arcs))
}

/// Runtime check of the forced-degree property: every vertex with a directed
/// path of length at most k to the root set has out-degree exactly d. Returns
/// the first violating vertex with its distance and degree.
pub fn check_high_degree_property(b: &BroomDigraph) -> Result<(), (usize, usize, usize)> {
    let reversed = b.digraph().reverse();
    let n = reversed.id_space();
    let mut dist = vec![usize::MAX; n];
    let mut frontier: Vec<usize> = b.roots().iter().collect();
    for &r in &frontier {
        dist[r] = 0;
    }
    let mut level = 0;
    while !frontier.is_empty() && level < b.k() {
        let mut next = Vec::new();
        for &u in &frontier {
            for &w in reversed.out_neighbors(u) {
                if dist[w] == usize::MAX {
                    dist[w] = level + 1;
                    next.push(w);
                }
            }
        }
        level += 1;
        frontier = next;
    }
    for v in b.digraph().vertices() {
        if dist[v] <= b.k() && b.digraph().out_degree(v) != b.d() {
            return Err((v, dist[v], b.digraph().out_degree(v)));
        }
    }
    Ok(())
}
