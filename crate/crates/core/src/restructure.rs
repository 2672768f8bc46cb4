//! Deterministic restructuring passes: extracting a broom out of a
//! degree-rich arborescence, pruning a colored arborescence to a
//! monochromatic leaf set, refining a broom digraph until every vertex's
//! walk profile is typed, and the composite clean-up pipeline.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::brooms::{
    validate_broom, validate_broom_digraph, Broom, BroomDigraph, BroomViolation, OutArborescence,
    PruneError,
};
use crate::digraph::{Digraph, VertexSet, Walk};
use crate::io::{BroomJson, CertificateJson};
use crate::subsample::{lovasz_trick, LovaszFailure, SubsampleParams};

/// Per-vertex grades steering broom extraction. `phi` measures how much
/// extractable depth survives below a vertex (leaves are 0, values clamp at
/// k-1); `selector` records, for each internal vertex, the child grade that
/// at least ceil(out-degree / k) of its children share.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LevelLabels {
    phi: BTreeMap<usize, usize>,
    selector: BTreeMap<usize, usize>,
}

impl LevelLabels {
    /// Computes grades bottom-up, children before parents.
    pub fn compute(tree: &OutArborescence, k: usize) -> LevelLabels {
        assert!(k >= 2, "grades need k >= 2");
        let mut order: Vec<usize> = tree.digraph().vertices().collect();
        order.sort_by_key(|&v| Reverse(tree.depth(v)));
        let mut phi = BTreeMap::new();
        let mut selector = BTreeMap::new();
        for v in order {
            if tree.is_leaf(v) {
                phi.insert(v, 0);
                continue;
            }
            let kids = tree.children(v);
            let quota = kids.len().div_ceil(k);
            let mut count = vec![0usize; k];
            for &c in kids {
                count[phi[&c]] += 1;
            }
            let sel = count
                .iter()
                .position(|&n| n >= quota)
                .expect("some grade meets the child quota");
            selector.insert(v, sel);
            phi.insert(v, (sel + 1).min(k - 1));
        }
        LevelLabels { phi, selector }
    }

    pub fn phi(&self, v: usize) -> usize {
        self.phi[&v]
    }

    /// The selected child grade; `None` on leaves.
    pub fn selector(&self, v: usize) -> Option<usize> {
        self.selector.get(&v).copied()
    }

    /// Children of `v` whose grade equals the selector of `v`, ascending.
    pub fn matching_children(&self, tree: &OutArborescence, v: usize) -> Vec<usize> {
        match self.selector.get(&v) {
            None => Vec::new(),
            Some(&sel) => tree
                .children(v)
                .iter()
                .copied()
                .filter(|&c| self.phi[&c] == sel)
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExtractError {
    #[error("extraction needs k >= 2, got {0}")]
    KTooSmall(usize),
    #[error("vertex {vertex} has out-degree {degree}, needs {required} (witness path {witness})")]
    ThinVertex {
        vertex: usize,
        degree: usize,
        required: usize,
        witness: Walk,
    },
    #[error("extracted candidate fails broom validation: {0}")]
    ShapeMismatch(BroomViolation),
}

/// Extracts a (k-1, ceil(d/k))-broom rooted at the root of `tree`, using
/// only arcs of `tree` and only leaves of `tree`.
///
/// Requires out-degree >= d at the root and at every internal vertex that
/// sits at most k-1 steps above some leaf.
pub fn extract_broom(tree: &OutArborescence, k: usize, d: usize) -> Result<Broom, ExtractError> {
    if k < 2 {
        return Err(ExtractError::KTooSmall(k));
    }
    assert!(d >= 1, "degree bound must be positive");
    check_extract_preconditions(tree, k, d)?;
    let labels = LevelLabels::compute(tree, k);
    let root = tree.root();
    let quota = d.div_ceil(k);
    let sel_root = labels.selector(root).expect("root keeps out-degree at least d >= 1");
    let mut arcs: BTreeSet<(usize, usize)> = BTreeSet::new();
    if sel_root <= k - 2 {
        prune_balanced(tree, &labels, root, quota, &mut arcs);
    } else {
        // One descending chain per kept root child. Each chain is cut at the
        // last vertex of top grade; a balanced tree hangs below the cut.
        let starts = labels.matching_children(tree, root);
        assert!(starts.len() >= quota, "root keeps enough graded children");
        for &c in starts.iter().take(quota) {
            let mut chain = vec![root, c];
            let mut cur = c;
            while !tree.is_leaf(cur) {
                let next = labels.matching_children(tree, cur)[0];
                chain.push(next);
                cur = next;
            }
            let cut = chain
                .iter()
                .rposition(|&v| labels.phi(v) == k - 1)
                .expect("top grade appears on the chain");
            assert!(cut >= 1 && cut + 1 < chain.len(), "cut lands strictly inside the chain");
            let branch = chain[cut];
            assert_eq!(labels.selector(branch), Some(k - 2), "cut vertex selects the grade below");
            for w in chain[..=cut].windows(2) {
                arcs.insert((w[0], w[1]));
            }
            prune_balanced(tree, &labels, branch, quota, &mut arcs);
        }
    }
    let host = collect_subtree(tree.digraph().id_space(), root, &arcs);
    validate_broom(host, root, k - 1, quota).map_err(ExtractError::ShapeMismatch)
}

fn check_extract_preconditions(
    tree: &OutArborescence,
    k: usize,
    d: usize,
) -> Result<(), ExtractError> {
    // nearest leaf strictly below each vertex, filled deepest-first
    let mut near: BTreeMap<usize, usize> = BTreeMap::new();
    let mut order: Vec<usize> = tree.digraph().vertices().collect();
    order.sort_by_key(|&v| Reverse(tree.depth(v)));
    for v in order {
        let dist = if tree.is_leaf(v) {
            0
        } else {
            1 + tree.children(v).iter().map(|c| near[c]).min().unwrap()
        };
        near.insert(v, dist);
    }
    let root = tree.root();
    for v in tree.digraph().vertices() {
        if tree.is_leaf(v) {
            continue;
        }
        if v != root && near[&v] > k - 1 {
            continue;
        }
        let degree = tree.digraph().out_degree(v);
        if degree < d {
            let mut verts = tree.path_from_root(v).verts().to_vec();
            let mut cur = v;
            while !tree.is_leaf(cur) {
                cur = *tree
                    .children(cur)
                    .iter()
                    .min_by_key(|&&c| (near[&c], c))
                    .unwrap();
                verts.push(cur);
            }
            return Err(ExtractError::ThinVertex {
                vertex: v,
                degree,
                required: d,
                witness: Walk::new(verts),
            });
        }
    }
    Ok(())
}

/// Keeps `quota` smallest graded children per vertex from `top` down.
fn prune_balanced(
    tree: &OutArborescence,
    labels: &LevelLabels,
    top: usize,
    quota: usize,
    arcs: &mut BTreeSet<(usize, usize)>,
) {
    let mut stack = vec![top];
    while let Some(u) = stack.pop() {
        if tree.is_leaf(u) {
            continue;
        }
        let kept = labels.matching_children(tree, u);
        assert!(kept.len() >= quota, "graded children cover the quota");
        for &c in kept.iter().take(quota) {
            arcs.insert((u, c));
            stack.push(c);
        }
    }
}

fn collect_subtree(n: usize, root: usize, arcs: &BTreeSet<(usize, usize)>) -> Digraph {
    let mut alive = vec![false; n];
    alive[root] = true;
    for &(u, v) in arcs {
        alive[u] = true;
        alive[v] = true;
    }
    Digraph::assemble(n, alive, arcs)
}

/// Assignment of a color id to every leaf of an arborescence.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct LeafColoring(BTreeMap<usize, usize>);

impl LeafColoring {
    pub fn new(map: BTreeMap<usize, usize>) -> LeafColoring {
        LeafColoring(map)
    }

    pub fn color(&self, v: usize) -> Option<usize> {
        self.0.get(&v).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.0.iter().map(|(&v, &c)| (v, c))
    }
}

impl FromIterator<(usize, usize)> for LeafColoring {
    fn from_iter<I: IntoIterator<Item = (usize, usize)>>(iter: I) -> Self {
        LeafColoring(iter.into_iter().collect())
    }
}

/// Prunes `tree` to a sub-arborescence with the same root whose leaves all
/// share one color, keeping at least a 1/colors fraction of every kept
/// vertex's children. Returns the tree and the winning color.
pub fn monochromatic_prune(
    tree: &OutArborescence,
    coloring: &LeafColoring,
    colors: usize,
) -> (OutArborescence, usize) {
    assert!(colors >= 1, "need at least one color");
    let leaves = tree.leaves();
    assert_eq!(
        leaves.iter().collect::<Vec<_>>(),
        coloring.0.keys().copied().collect::<Vec<_>>(),
        "coloring must cover exactly the leaves",
    );
    assert!(coloring.0.values().all(|&c| c < colors), "color ids stay below the bound");
    let (arcs, winner) = mono_layer(tree, &coloring.0, colors);
    let pruned = sub_arborescence(tree, &arcs);
    for u in pruned.digraph().vertices() {
        let kept = pruned.digraph().out_degree(u);
        let orig = tree.digraph().out_degree(u);
        assert!(kept * colors >= orig, "kept degree at {u} fell below the color quota");
    }
    for l in pruned.leaves().iter() {
        assert_eq!(coloring.color(l), Some(winner), "surviving leaf off-color");
    }
    (pruned, winner)
}

/// One induction layer: vertices one step above the deepest leaves adopt a
/// majority color, the deepest leaves are dropped, the shorter tree is
/// pruned recursively, and the majority children are re-attached.
fn mono_layer(
    tree: &OutArborescence,
    coloring: &BTreeMap<usize, usize>,
    colors: usize,
) -> (BTreeSet<(usize, usize)>, usize) {
    let ell = tree.height();
    if ell == 0 {
        return (BTreeSet::new(), coloring[&tree.root()]);
    }
    let mut promoted: BTreeMap<usize, usize> = BTreeMap::new();
    let mut deep: Vec<usize> = Vec::new();
    for v in tree.digraph().vertices() {
        let depth = tree.depth(v);
        if depth == ell - 1 && !tree.is_leaf(v) {
            deep.push(v);
            promoted.insert(v, majority_color(tree.children(v), coloring));
        } else if depth < ell && tree.is_leaf(v) {
            promoted.insert(v, coloring[&v]);
        }
    }
    let shed: BTreeSet<(usize, usize)> = tree
        .digraph()
        .arcs()
        .filter(|&(_, v)| tree.depth(v) < ell)
        .collect();
    let shorter = sub_arborescence(tree, &shed);
    let (mut arcs, winner) = mono_layer(&shorter, &promoted, colors);
    let mut kept: BTreeSet<usize> = arcs.iter().flat_map(|&(u, v)| [u, v]).collect();
    kept.insert(tree.root());
    for u in deep {
        if !kept.contains(&u) {
            continue;
        }
        for &c in tree.children(u) {
            if coloring[&c] == winner {
                arcs.insert((u, c));
            }
        }
    }
    (arcs, winner)
}

fn majority_color(children: &[usize], coloring: &BTreeMap<usize, usize>) -> usize {
    let mut count: BTreeMap<usize, usize> = BTreeMap::new();
    for c in children {
        *count.entry(coloring[c]).or_insert(0) += 1;
    }
    let (mut best, mut votes) = (0, 0);
    for (&color, &n) in &count {
        if n > votes {
            best = color;
            votes = n;
        }
    }
    best
}

fn sub_arborescence(tree: &OutArborescence, arcs: &BTreeSet<(usize, usize)>) -> OutArborescence {
    let host = collect_subtree(tree.digraph().id_space(), tree.root(), arcs);
    OutArborescence::new(host, tree.root()).expect("pruned tree stays an arborescence")
}

/// Monochromatic pruning specialized to brooms: after the leaf colors are
/// unified, out-degrees are trimmed to exactly ceil(d/colors), yielding a
/// broom with the same k.
pub fn monochromatic_broom(broom: &Broom, coloring: &LeafColoring, colors: usize) -> Broom {
    let (mono, _) = monochromatic_prune(broom.host(), coloring, colors);
    let target = broom.d().div_ceil(colors);
    let mut arcs: BTreeSet<(usize, usize)> = BTreeSet::new();
    let mut stack = vec![broom.root()];
    while let Some(u) = stack.pop() {
        if mono.is_leaf(u) {
            continue;
        }
        let kids = mono.children(u);
        let keep = if broom.subdivision_vertices().contains(u) {
            assert_eq!(kids.len(), 1, "subdivision vertex keeps its single child");
            1
        } else {
            assert!(kids.len() >= target, "unified tree covers the degree target");
            target
        };
        for &c in &kids[..keep] {
            arcs.insert((u, c));
            stack.push(c);
        }
    }
    let host = collect_subtree(broom.digraph().id_space(), broom.root(), &arcs);
    validate_broom(host, broom.root(), broom.k(), target)
        .expect("monochromatic pruning preserves the broom shape")
}

/// A walk profile: bit i says whether every endpoint of every length-i walk
/// from the vertex lands in the root set (1) or none do (0).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct TypeWord(Vec<bool>);

impl TypeWord {
    pub fn empty() -> TypeWord {
        TypeWord(Vec::new())
    }

    pub fn new(bits: Vec<bool>) -> TypeWord {
        TypeWord(bits)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn bits(&self) -> &[bool] {
        &self.0
    }

    /// The bits read as a binary number, first bit most significant.
    pub fn value(&self) -> usize {
        self.0.iter().fold(0, |acc, &b| (acc << 1) | usize::from(b))
    }
}

impl fmt::Display for TypeWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "-");
        }
        for &b in &self.0 {
            write!(f, "{}", u8::from(b))?;
        }
        Ok(())
    }
}

/// The length-t walk profile of `v`, or `None` if some length mixes root
/// and non-root endpoints. An empty reach contributes a 0 bit.
pub fn compute_type(b: &BroomDigraph, v: usize, t: usize) -> Option<TypeWord> {
    let mut bits = Vec::with_capacity(t);
    for i in 1..=t {
        let reach = b.digraph().walks_of_length(v, i);
        let total = reach.len();
        let rooted = reach.intersection(b.roots()).len();
        if rooted != 0 && rooted != total {
            return None;
        }
        bits.push(total != 0 && rooted == total);
    }
    Some(TypeWord(bits))
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TypedError {
    #[error("type length {t} exceeds the digraph parameter k = {k}")]
    LengthBeyondK { t: usize, k: usize },
}

/// Refines a broom digraph, stage by stage, until every vertex carries a
/// length-t walk profile. The root set is preserved; the degree drops to
/// ceil(d / 2^(t(t-1)/2)).
pub fn make_typed(b: &BroomDigraph, t: usize) -> Result<BroomDigraph, TypedError> {
    if t > b.k() {
        return Err(TypedError::LengthBeyondK { t, k: b.k() });
    }
    let mut cur = b.clone();
    for s in 1..=t {
        let colors = 1usize << (s - 1);
        let mut pruned: Vec<Broom> = Vec::new();
        for (_, broom) in cur.brooms() {
            let coloring: LeafColoring = broom
                .leaves()
                .iter()
                .map(|l| {
                    let w = compute_type(&cur, l, s - 1)
                        .expect("every leaf carries a full profile at every stage");
                    (l, w.value())
                })
                .collect();
            pruned.push(monochromatic_broom(broom, &coloring, colors));
        }
        let d_next = cur.d().div_ceil(colors);
        cur = reunite(cur.digraph().id_space(), cur.roots().clone(), pruned, cur.k(), d_next);
    }
    if let Some(div) = 1usize.checked_shl((t * t.saturating_sub(1) / 2) as u32) {
        assert_eq!(cur.d(), b.d().div_ceil(div), "stage degrees telescope");
    }
    assert_eq!(cur.roots(), b.roots(), "root set survives refinement");
    for v in cur.digraph().vertices() {
        assert!(
            compute_type(&cur, v, t).is_some(),
            "refined digraph must give vertex {v} a full profile",
        );
    }
    Ok(cur)
}

/// Reassembles per-root brooms into a validated broom digraph.
pub(crate) fn reunite(
    n: usize,
    roots: VertexSet,
    brooms: Vec<Broom>,
    k: usize,
    d: usize,
) -> BroomDigraph {
    let mut arcs: BTreeSet<(usize, usize)> = BTreeSet::new();
    let mut alive = vec![false; n];
    for b in &brooms {
        for (u, v) in b.digraph().arcs() {
            arcs.insert((u, v));
            alive[u] = true;
            alive[v] = true;
        }
    }
    let digraph = Digraph::assemble(n, alive, &arcs);
    let cert = CertificateJson {
        roots: roots.iter().collect(),
        brooms: brooms
            .iter()
            .map(|b| BroomJson { root: b.root(), arcs: b.digraph().arcs().collect() })
            .collect(),
    };
    validate_broom_digraph(digraph, roots, &cert, k, d)
        .expect("per-root pruning reassembles into a broom digraph")
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CleanUpMode {
    /// Enforces the closed-form degree bound and derives all thresholds
    /// from d. Rejects any d below 10^(13 k^3).
    Strict,
    /// Takes the caller's thresholds as given and prunes to this degree.
    Parametric { target_degree: usize },
}

#[derive(Debug, Clone)]
pub struct CleanUpOutput {
    pub brooms: BroomDigraph,
    /// In-degrees of the surviving roots, counted in the input digraph.
    pub root_in_degrees: BTreeMap<usize, usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CleanUpError {
    #[error("strict mode needs d >= 10^{exponent}, got {d}")]
    DegreeBelowStrictBound { d: usize, exponent: u64 },
    #[error(transparent)]
    Prune(#[from] PruneError),
    #[error(transparent)]
    Subsample(#[from] LovaszFailure),
}

/// Subsamples to high-in-degree roots, types the survivor up to length k,
/// and prunes to the target degree. Reports each surviving root's
/// in-degree in the original digraph.
pub fn clean_up(
    b: &BroomDigraph,
    mode: &CleanUpMode,
    params: &SubsampleParams,
) -> Result<CleanUpOutput, CleanUpError> {
    let k = b.k();
    let d = b.d();
    let (effective, target) = match mode {
        CleanUpMode::Strict => {
            let exponent = 13 * (k as u64).pow(3);
            if !meets_power_of_ten(d, exponent) {
                return Err(CleanUpError::DegreeBelowStrictBound { d, exponent });
            }
            let mut p = params.clone();
            p.p_keep = (d as f64).powf(-2.0 / 3.0);
            p.outdeg_floor = (floor_root(d as u64, 3) / 2) as usize;
            p.indeg_root_threshold = (d as f64).powf(0.1);
            p.broom_target = floor_root(d as u64, 7 * k as u32) as usize;
            (p, ceil_root(d as u64, 8 * k as u32) as usize)
        }
        CleanUpMode::Parametric { target_degree } => (params.clone(), *target_degree),
    };
    let sub = lovasz_trick(b, &effective)?;
    let typed = make_typed(&sub.brooms, k).expect("profile length k never exceeds k");
    let pruned: Vec<Broom> = typed
        .brooms()
        .map(|(_, br)| br.prune_to_degree(target))
        .collect::<Result<_, _>>()?;
    let out = reunite(typed.digraph().id_space(), typed.roots().clone(), pruned, k, target);
    assert_eq!(out.roots(), sub.brooms.roots(), "root set survives clean-up");
    Ok(CleanUpOutput { brooms: out, root_in_degrees: sub.root_in_degrees })
}

fn meets_power_of_ten(d: usize, exponent: u64) -> bool {
    if exponent > 38 {
        return false;
    }
    d as u128 >= 10u128.pow(exponent as u32)
}

fn pow_at_most(x: u64, e: u32, bound: u64) -> bool {
    let mut acc: u128 = 1;
    for _ in 0..e {
        acc *= u128::from(x);
        if acc > u128::from(bound) {
            return false;
        }
    }
    true
}

/// Largest x with x^e <= d.
pub(crate) fn floor_root(d: u64, e: u32) -> u64 {
    assert!(d >= 1 && e >= 1);
    let mut g = (d as f64).powf(1.0 / f64::from(e)).round() as u64;
    g = g.max(1);
    while !pow_at_most(g, e, d) {
        g -= 1;
    }
    while pow_at_most(g + 1, e, d) {
        g += 1;
    }
    g
}

/// Smallest x with x^e >= d.
fn ceil_root(d: u64, e: u32) -> u64 {
    let f = floor_root(d, e);
    let mut acc: u128 = 1;
    for _ in 0..e {
        acc = acc.saturating_mul(u128::from(f));
    }
    if acc == u128::from(d) {
        f
    } else {
        f + 1
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::brooms::from_out_regular;
    use crate::fixtures::mixed_height_digraph;

    fn arborescence(n: usize, arcs: &[(usize, usize)], root: usize) -> OutArborescence {
        let d = Digraph::build(n, arcs).unwrap();
        OutArborescence::new(d, root).unwrap()
    }

    fn balanced_binary() -> OutArborescence {
        arborescence(7, &[(0, 1), (0, 2), (1, 3), (1, 4), (2, 5), (2, 6)], 0)
    }

    fn arc_set(b: &Broom) -> BTreeSet<(usize, usize)> {
        b.digraph().arcs().collect()
    }

    #[test]
    fn grades_on_balanced_binary() {
        let t = balanced_binary();
        let labels = LevelLabels::compute(&t, 2);
        for leaf in [3, 4, 5, 6] {
            assert_eq!(labels.phi(leaf), 0);
        }
        assert_eq!(labels.phi(1), 1);
        assert_eq!(labels.phi(2), 1);
        assert_eq!(labels.selector(1), Some(0));
        assert_eq!(labels.phi(0), 1);
        assert_eq!(labels.selector(0), Some(1));
        // every matching arc joins a selector to an equal grade
        for v in [0, 1, 2] {
            for c in labels.matching_children(&t, v) {
                assert_eq!(labels.phi(c), labels.selector(v).unwrap());
            }
        }
    }

    #[test]
    fn extract_from_balanced_binary_gives_path() {
        let t = balanced_binary();
        let b = extract_broom(&t, 2, 2).unwrap();
        assert_eq!(b.k(), 1);
        assert_eq!(b.d(), 1);
        assert_eq!(arc_set(&b), BTreeSet::from([(0, 1), (1, 3)]));
    }

    #[test]
    fn extract_from_star_prunes_to_quota() {
        let t = arborescence(4, &[(0, 1), (0, 2), (0, 3)], 0);
        let b = extract_broom(&t, 2, 3).unwrap();
        assert_eq!(b.k(), 1);
        assert_eq!(b.d(), 2);
        assert_eq!(arc_set(&b), BTreeSet::from([(0, 1), (0, 2)]));
    }

    #[test]
    fn extract_rejects_k_below_two() {
        let t = arborescence(4, &[(0, 1), (0, 2), (0, 3)], 0);
        assert_eq!(extract_broom(&t, 1, 3).unwrap_err(), ExtractError::KTooSmall(1));
    }

    #[test]
    fn extract_rejects_thin_root_with_witness() {
        let t = arborescence(3, &[(0, 1), (0, 2)], 0);
        match extract_broom(&t, 2, 3).unwrap_err() {
            ExtractError::ThinVertex { vertex, degree, required, witness } => {
                assert_eq!((vertex, degree, required), (0, 2, 3));
                assert_eq!(witness.verts(), &[0, 1]);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn extract_rejects_thin_interior_vertex() {
        // vertex 4 sits one step above a leaf and must carry full degree;
        // vertex 1 sits two steps up and is exempt at k = 2
        let t = arborescence(6, &[(0, 1), (0, 2), (0, 3), (1, 4), (4, 5)], 0);
        match extract_broom(&t, 2, 3).unwrap_err() {
            ExtractError::ThinVertex { vertex, witness, .. } => {
                assert_eq!(vertex, 4);
                assert_eq!(witness.verts(), &[0, 1, 4, 5]);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn extract_from_broom_is_sub_broom() {
        let t = arborescence(3, &[(0, 1), (0, 2)], 0);
        let b = extract_broom(&t, 2, 2).unwrap();
        assert_eq!(b.k(), 1);
        assert_eq!(b.d(), 1);
        assert!(arc_set(&b).is_subset(&t.digraph().arcs().collect()));
    }

    #[test]
    fn mono_prune_star_keeps_majority() {
        let t = arborescence(5, &[(0, 1), (0, 2), (0, 3), (0, 4)], 0);
        let coloring: LeafColoring = [(1, 0), (2, 0), (3, 1), (4, 1)].into_iter().collect();
        let (pruned, winner) = monochromatic_prune(&t, &coloring, 2);
        assert_eq!(winner, 0);
        assert_eq!(pruned.leaves().iter().collect::<Vec<_>>(), vec![1, 2]);
    }

    #[test]
    fn mono_prune_single_color_is_identity() {
        let t = balanced_binary();
        let coloring: LeafColoring = [(3, 0), (4, 0), (5, 0), (6, 0)].into_iter().collect();
        let (pruned, _) = monochromatic_prune(&t, &coloring, 2);
        for v in t.digraph().vertices() {
            assert_eq!(pruned.digraph().out_degree(v), t.digraph().out_degree(v));
        }
    }

    #[test]
    fn mono_prune_two_level_majority() {
        let t = arborescence(
            9,
            &[(0, 1), (0, 2), (1, 3), (1, 4), (1, 5), (2, 6), (2, 7), (2, 8)],
            0,
        );
        let coloring: LeafColoring =
            [(3, 0), (4, 0), (5, 1), (6, 1), (7, 1), (8, 0)].into_iter().collect();
        let (pruned, winner) = monochromatic_prune(&t, &coloring, 2);
        assert_eq!(winner, 0);
        let arcs: BTreeSet<(usize, usize)> = pruned.digraph().arcs().collect();
        assert_eq!(arcs, BTreeSet::from([(0, 1), (1, 3), (1, 4)]));
    }

    #[test]
    fn mono_broom_star_split() {
        let t = arborescence(5, &[(0, 1), (0, 2), (0, 3), (0, 4)], 0);
        let b = validate_broom(t.digraph().clone(), 0, 1, 4).unwrap();
        let coloring: LeafColoring = [(1, 0), (2, 0), (3, 1), (4, 1)].into_iter().collect();
        let out = monochromatic_broom(&b, &coloring, 2);
        assert_eq!((out.k(), out.d()), (1, 2));
        assert_eq!(out.leaves().iter().collect::<Vec<_>>(), vec![1, 2]);
    }

    #[test]
    fn mono_broom_one_color_keeps_degree() {
        let t = arborescence(5, &[(0, 1), (0, 2), (0, 3), (0, 4)], 0);
        let b = validate_broom(t.digraph().clone(), 0, 1, 4).unwrap();
        let coloring: LeafColoring = [(1, 0), (2, 0), (3, 0), (4, 0)].into_iter().collect();
        let out = monochromatic_broom(&b, &coloring, 1);
        assert_eq!((out.k(), out.d()), (1, 4));
        assert_eq!(arc_set(&out), arc_set(&b));
    }

    #[test]
    fn mono_broom_adversarial_four_colors() {
        let mut arcs = vec![(0, 1), (0, 2), (0, 3), (0, 4)];
        let mut coloring = BTreeMap::new();
        for (i, child) in (1..=4).enumerate() {
            for j in 0..4 {
                let leaf = 4 + 4 * i + j + 1;
                arcs.push((child, leaf));
                coloring.insert(leaf, (i + j) % 4);
            }
        }
        let t = arborescence(21, &arcs, 0);
        let b = validate_broom(t.digraph().clone(), 0, 2, 4).unwrap();
        let out = monochromatic_broom(&b, &LeafColoring::new(coloring.clone()), 4);
        assert_eq!((out.k(), out.d()), (2, 1));
        let winner: Vec<usize> =
            out.leaves().iter().map(|l| coloring[&l]).collect();
        assert_eq!(winner.len(), 1);
        assert!(arc_set(&out).is_subset(&t.digraph().arcs().collect()));
    }

    #[test]
    fn types_on_complete_digraph() {
        let d = Digraph::build(3, &[(0, 1), (0, 2), (1, 0), (1, 2), (2, 0), (2, 1)]).unwrap();
        let b = from_out_regular(d, 3).unwrap();
        for v in 0..3 {
            let w = compute_type(&b, v, 2).unwrap();
            assert_eq!(w.bits(), &[true, true]);
            assert_eq!(w.value(), 3);
        }
    }

    #[test]
    fn zero_length_type_is_empty() {
        let b = mixed_height_digraph();
        for v in b.digraph().vertices() {
            assert_eq!(compute_type(&b, v, 0), Some(TypeWord::empty()));
        }
    }

    #[test]
    fn mixed_reach_has_no_type() {
        let b = mixed_height_digraph();
        // tall root sees only internals one step out
        assert_eq!(compute_type(&b, 0, 1), Some(TypeWord::new(vec![false])));
        // flat root sees roots one step out but mixes at two steps
        assert_eq!(compute_type(&b, 1, 1), Some(TypeWord::new(vec![true])));
        assert_eq!(compute_type(&b, 1, 2), None);
    }

    #[test]
    fn make_typed_zero_is_identity() {
        let b = mixed_height_digraph();
        let out = make_typed(&b, 0).unwrap();
        let before: BTreeSet<(usize, usize)> = b.digraph().arcs().collect();
        let after: BTreeSet<(usize, usize)> = out.digraph().arcs().collect();
        assert_eq!(before, after);
    }

    #[test]
    fn make_typed_rejects_long_profile() {
        let b = mixed_height_digraph();
        assert_eq!(make_typed(&b, 3).unwrap_err(), TypedError::LengthBeyondK { t: 3, k: 2 });
    }

    #[test]
    fn make_typed_on_out_regular_is_stable() {
        let d = Digraph::build(3, &[(0, 1), (0, 2), (1, 0), (1, 2), (2, 0), (2, 1)]).unwrap();
        let b = from_out_regular(d, 1).unwrap();
        let out = make_typed(&b, 1).unwrap();
        assert_eq!(out.d(), 2);
        let before: BTreeSet<(usize, usize)> = b.digraph().arcs().collect();
        let after: BTreeSet<(usize, usize)> = out.digraph().arcs().collect();
        assert_eq!(before, after);
    }

    #[test]
    fn make_typed_resolves_mixed_heights() {
        let b = mixed_height_digraph();
        let out = make_typed(&b, 2).unwrap();
        assert_eq!(out.d(), 1);
        assert_eq!(out.roots(), b.roots());
        let arcs: BTreeSet<(usize, usize)> = out.digraph().arcs().collect();
        assert_eq!(
            arcs,
            BTreeSet::from([(0, 3), (3, 1), (1, 0), (2, 5), (5, 0), (6, 2)]),
        );
        assert_eq!(compute_type(&out, 0, 2), Some(TypeWord::new(vec![false, true])));
    }

    #[test]
    fn clean_up_strict_rejects_small_degree() {
        let b = mixed_height_digraph();
        let params = SubsampleParams::paper_defaults(2, 2, 7);
        let err = clean_up(&b, &CleanUpMode::Strict, &params).unwrap_err();
        assert_eq!(err, CleanUpError::DegreeBelowStrictBound { d: 2, exponent: 104 });
    }

    #[test]
    fn clean_up_parametric_runs_the_whole_pipeline() {
        let b = mixed_height_digraph();
        let params = SubsampleParams {
            p_keep: 1.0,
            outdeg_floor: 1,
            indeg_root_threshold: 1.5,
            broom_target: 1,
            resample_cap: 10,
            rng_seed: 0,
        };
        let out = clean_up(&b, &CleanUpMode::Parametric { target_degree: 1 }, &params).unwrap();
        assert_eq!((out.brooms.k(), out.brooms.d()), (2, 1));
        let arcs: BTreeSet<(usize, usize)> = out.brooms.digraph().arcs().collect();
        assert_eq!(
            arcs,
            BTreeSet::from([(0, 3), (3, 1), (1, 0), (2, 5), (5, 0), (6, 2)]),
        );
        let expected: BTreeMap<usize, usize> =
            [(0, 2), (1, 2), (2, 3), (5, 3), (6, 2)].into_iter().collect();
        assert_eq!(out.root_in_degrees, expected);
        for v in out.brooms.digraph().vertices() {
            assert!(compute_type(&out.brooms, v, 2).is_some());
        }
    }

    #[test]
    fn integer_roots_match_definitions() {
        assert_eq!(floor_root(64, 3), 4);
        assert_eq!(floor_root(63, 3), 3);
        assert_eq!(ceil_root(64, 3), 4);
        assert_eq!(ceil_root(65, 3), 5);
        assert_eq!(floor_root(10_u64.pow(13), 7), 71);
        assert_eq!(ceil_root(10_u64.pow(13), 8), 43);
    }
}
