//! Deterministic generators for digraphs, brooms, and oriented trees,
//! plus exhaustive enumeration of small oriented trees up to isomorphism
//! and the curated instances the recursive embedder is tuned for.

use std::collections::VecDeque;

use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::brooms::{
    from_out_regular, validate_broom, validate_broom_digraph, Broom, BroomDigraph,
    OutArborescence,
};
use crate::digraph::{Digraph, VertexSet};
use crate::embed::{EmbedCase, LevelParams};
use crate::grounded::{grounded_profile, OrientedTree};
use crate::io::{BroomJson, CertificateJson};
use crate::subsample::SubsampleParams;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GenError {
    #[error("cannot generate on zero vertices")]
    OrderZero,
    #[error("degree {d} does not fit {n} vertices without self-loops")]
    DegreeTooLarge { d: usize, n: usize },
    #[error("no (k,ell) = ({k},{ell}) broom shape exists")]
    ShapeOutOfRange { k: usize, ell: usize },
    #[error("brooms need {need} distinct leaf roots, only {have} available")]
    LeafSupplyShort { need: usize, have: usize },
    #[error("rejection sampling gave up after {attempts} attempts")]
    SearchExhausted { attempts: usize },
    #[error("no curated favorable design for this tree shape")]
    UnsupportedTree,
}

/// All arcs between distinct vertices, both directions.
pub fn complete_digraph(n: usize) -> Digraph {
    let mut arcs = Vec::with_capacity(n.saturating_mul(n.saturating_sub(1)));
    for u in 0..n {
        for v in 0..n {
            if u != v {
                arcs.push((u, v));
            }
        }
    }
    Digraph::build(n, &arcs).expect("complete digraphs are well formed")
}

/// Every vertex gets `d` distinct out-neighbors drawn without replacement.
pub fn gen_out_regular(n: usize, d: usize, seed: u64) -> Result<Digraph, GenError> {
    if n == 0 {
        return Err(GenError::OrderZero);
    }
    if d + 1 > n {
        return Err(GenError::DegreeTooLarge { d, n });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut arcs = Vec::with_capacity(n * d);
    for v in 0..n {
        for i in index::sample(&mut rng, n - 1, d) {
            let target = if i >= v { i + 1 } else { i };
            arcs.push((v, target));
        }
    }
    Ok(Digraph::build(n, &arcs).expect("sampled arcs avoid self-loops"))
}

const ARB_VERTEX_CAP: usize = 20_000;

/// Random out-arborescence: every internal vertex gets between
/// `min_branch` and `max_branch` children, leaves get likelier with depth,
/// and nothing grows past `height`. Ids are shuffled afterwards.
pub fn gen_arborescence(
    min_branch: usize,
    max_branch: usize,
    height: usize,
    seed: u64,
) -> OutArborescence {
    assert!(min_branch >= 1 && max_branch >= min_branch && height >= 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut arcs: Vec<(usize, usize)> = Vec::new();
    let mut queue = VecDeque::from([(0usize, 0usize)]);
    let mut next = 1usize;
    while let Some((v, depth)) = queue.pop_front() {
        if depth >= height || next >= ARB_VERTEX_CAP {
            continue;
        }
        if v != 0 && rng.gen_bool(depth as f64 / height as f64) {
            continue;
        }
        let fanout = rng.gen_range(min_branch..=max_branch);
        for _ in 0..fanout {
            arcs.push((v, next));
            queue.push_back((next, depth + 1));
            next += 1;
        }
    }
    permuted_arborescence(next, arcs, &mut rng)
}

fn permuted_arborescence(
    n: usize,
    arcs: Vec<(usize, usize)>,
    rng: &mut ChaCha8Rng,
) -> OutArborescence {
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(rng);
    let mapped: Vec<(usize, usize)> = arcs.iter().map(|&(u, v)| (perm[u], perm[v])).collect();
    let digraph = Digraph::build(n, &mapped).expect("a relabeled tree stays a tree");
    OutArborescence::new(digraph, perm[0]).expect("generated arcs form an arborescence")
}

/// Random (k,d)-broom of shape class `ell` (1..=k balanced, k+1 with
/// subdivision chains), with shuffled ids.
pub fn gen_broom(k: usize, d: usize, ell: usize, seed: u64) -> Result<Broom, GenError> {
    if k == 0 || d == 0 {
        return Err(GenError::ShapeOutOfRange { k, ell });
    }
    if ell == 0 || ell > k + 1 {
        return Err(GenError::ShapeOutOfRange { k, ell });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut arcs: Vec<(usize, usize)> = Vec::new();
    let mut next = 1usize;
    if ell <= k {
        let mut frontier = vec![0usize];
        for _ in 0..ell {
            let mut grown = Vec::new();
            for &v in &frontier {
                for _ in 0..d {
                    arcs.push((v, next));
                    grown.push(next);
                    next += 1;
                }
            }
            frontier = grown;
        }
    } else if d == 1 {
        let extra = rng.gen_range(0..=2);
        let mut v = 0usize;
        for _ in 0..(extra + k + 1) {
            arcs.push((v, next));
            v = next;
            next += 1;
        }
    } else {
        for _ in 0..d {
            let mut v = 0usize;
            for _ in 0..=rng.gen_range(0..=2usize) {
                arcs.push((v, next));
                v = next;
                next += 1;
            }
            let mut frontier = vec![v];
            for _ in 0..k {
                let mut grown = Vec::new();
                for &u in &frontier {
                    for _ in 0..d {
                        arcs.push((u, next));
                        grown.push(next);
                        next += 1;
                    }
                }
                frontier = grown;
            }
        }
    }
    let mut perm: Vec<usize> = (0..next).collect();
    perm.shuffle(&mut rng);
    let mapped: Vec<(usize, usize)> = arcs.iter().map(|&(u, v)| (perm[u], perm[v])).collect();
    let digraph = Digraph::build(next, &mapped).expect("a relabeled tree stays a tree");
    Ok(validate_broom(digraph, perm[0], k, d).expect("generated shape is a broom"))
}

/// Random (k,d)-broom digraph: every vertex of a shared root set gets its
/// own broom with fresh internal vertices and leaves drawn from the other
/// roots. Shape classes are mixed when the root supply allows it.
pub fn gen_broom_digraph(
    k: usize,
    d: usize,
    n_roots: usize,
    seed: u64,
) -> Result<BroomDigraph, GenError> {
    if k == 0 || d == 0 || n_roots == 0 {
        return Err(GenError::OrderZero);
    }
    let base_need = checked_power(d, k).ok_or(GenError::LeafSupplyShort {
        need: usize::MAX,
        have: n_roots - 1,
    })?;
    if base_need > n_roots - 1 {
        return Err(GenError::LeafSupplyShort { need: base_need, have: n_roots - 1 });
    }
    let deep_need = checked_power(d, k + 1).filter(|&need| need <= n_roots - 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counter = n_roots;
    let mut all_arcs: Vec<(usize, usize)> = Vec::new();
    let mut brooms = Vec::with_capacity(n_roots);
    for r in 0..n_roots {
        let ell = if deep_need.is_some() && rng.gen_bool(0.25) {
            k + 1
        } else if k > 1 && rng.gen_bool(0.3) {
            rng.gen_range(1..=k)
        } else {
            k
        };
        let need = if ell == k + 1 { deep_need.unwrap() } else { d.pow(ell as u32) };
        let mut leaves: VecDeque<usize> = index::sample(&mut rng, n_roots - 1, need)
            .iter()
            .map(|i| if i >= r { i + 1 } else { i })
            .collect();
        let arcs = broom_digraph_arcs(r, k, d, ell, &mut leaves, &mut counter, &mut rng);
        all_arcs.extend_from_slice(&arcs);
        brooms.push(BroomJson { root: r, arcs });
    }
    let digraph = Digraph::build(counter, &all_arcs).expect("fresh internals avoid collisions");
    let cert = CertificateJson { roots: (0..n_roots).collect(), brooms };
    let roots: VertexSet = (0..n_roots).collect();
    Ok(validate_broom_digraph(digraph, roots, &cert, k, d)
        .expect("generated brooms compose into a broom digraph"))
}

fn checked_power(d: usize, e: usize) -> Option<usize> {
    u32::try_from(e).ok().and_then(|e| d.checked_pow(e))
}

fn broom_digraph_arcs(
    root: usize,
    k: usize,
    d: usize,
    ell: usize,
    leaves: &mut VecDeque<usize>,
    counter: &mut usize,
    rng: &mut ChaCha8Rng,
) -> Vec<(usize, usize)> {
    let mut arcs = Vec::new();
    let fresh = |counter: &mut usize| {
        let id = *counter;
        *counter += 1;
        id
    };
    if ell <= k {
        let mut frontier = vec![root];
        for level in 1..=ell {
            let mut grown = Vec::new();
            for &v in &frontier {
                for _ in 0..d {
                    let child =
                        if level == ell { leaves.pop_front().unwrap() } else { fresh(counter) };
                    arcs.push((v, child));
                    grown.push(child);
                }
            }
            frontier = grown;
        }
    } else if d == 1 {
        let mut v = root;
        for _ in 0..rng.gen_range(0..=1usize) + k {
            let child = fresh(counter);
            arcs.push((v, child));
            v = child;
        }
        arcs.push((v, leaves.pop_front().unwrap()));
    } else {
        for _ in 0..d {
            let mut v = root;
            for _ in 0..=rng.gen_range(0..=1usize) {
                let child = fresh(counter);
                arcs.push((v, child));
                v = child;
            }
            let mut frontier = vec![v];
            for level in 1..=k {
                let mut grown = Vec::new();
                for &u in &frontier {
                    for _ in 0..d {
                        let child =
                            if level == k { leaves.pop_front().unwrap() } else { fresh(counter) };
                        arcs.push((u, child));
                        grown.push(child);
                    }
                }
                frontier = grown;
            }
        }
    }
    arcs
}

/// Random oriented tree: a uniform labeled tree with each edge oriented by
/// a fair coin.
pub fn gen_oriented_tree(order: usize, seed: u64) -> Result<OrientedTree, GenError> {
    if order == 0 {
        return Err(GenError::OrderZero);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(oriented_tree_from_rng(order, &mut rng))
}

fn oriented_tree_from_rng(order: usize, rng: &mut ChaCha8Rng) -> OrientedTree {
    if order == 1 {
        let d = Digraph::build(1, &[]).expect("a single vertex is fine");
        return OrientedTree::new(d).expect("a single vertex is a tree");
    }
    let seq: Vec<usize> = (0..order.saturating_sub(2)).map(|_| rng.gen_range(0..order)).collect();
    let edges = prufer_to_edges(order, &seq);
    let arcs: Vec<(usize, usize)> =
        edges.iter().map(|&(a, b)| if rng.gen_bool(0.5) { (b, a) } else { (a, b) }).collect();
    let d = Digraph::build(order, &arcs).expect("tree edges are well formed");
    OrientedTree::new(d).expect("an oriented tree by construction")
}

const GROUNDED_ATTEMPT_CAP: usize = 200_000;

/// Rejection-samples oriented trees until one is grounded (or
/// max-grounded when `require_max` is set).
pub fn gen_grounded_tree(
    order: usize,
    seed: u64,
    require_max: bool,
) -> Result<OrientedTree, GenError> {
    if order == 0 {
        return Err(GenError::OrderZero);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..GROUNDED_ATTEMPT_CAP {
        let t = oriented_tree_from_rng(order, &mut rng);
        let profile = grounded_profile(&t);
        if profile.max_grounded || (!require_max && profile.grounded) {
            return Ok(t);
        }
    }
    Err(GenError::SearchExhausted { attempts: GROUNDED_ATTEMPT_CAP })
}

fn prufer_to_edges(n: usize, seq: &[usize]) -> Vec<(usize, usize)> {
    debug_assert_eq!(seq.len(), n - 2);
    let mut degree = vec![1usize; n];
    for &s in seq {
        degree[s] += 1;
    }
    let mut leaves: std::collections::BTreeSet<usize> =
        (0..n).filter(|&v| degree[v] == 1).collect();
    let mut edges = Vec::with_capacity(n - 1);
    for &s in seq {
        let leaf = *leaves.iter().next().expect("a tree always has a leaf left");
        leaves.remove(&leaf);
        edges.push((leaf, s));
        degree[s] -= 1;
        if degree[s] == 1 {
            leaves.insert(s);
        }
    }
    let last: Vec<usize> = leaves.into_iter().collect();
    edges.push((last[0], last[1]));
    edges
}

/// Canonical form of an oriented tree under isomorphism: the minimum over
/// all roots of a direction-tagged sorted subtree encoding.
pub fn canonical_tree_key(t: &OrientedTree) -> String {
    t.digraph()
        .vertices()
        .map(|r| encode_from(t, r, usize::MAX))
        .min()
        .expect("a tree has a vertex")
}

fn encode_from(t: &OrientedTree, v: usize, parent: usize) -> String {
    let mut parts: Vec<String> = t
        .undirected_neighbors(v)
        .into_iter()
        .filter(|&c| c != parent)
        .map(|c| {
            let tag = if t.digraph().has_arc(v, c) { '>' } else { '<' };
            format!("{tag}{}", encode_from(t, c, v))
        })
        .collect();
    parts.sort();
    format!("({})", parts.concat())
}

/// Every oriented tree on `order` vertices, one representative per
/// isomorphism class. Exhaustive over labeled trees times orientations,
/// so keep `order` at 8 or below.
pub fn enumerate_oriented_trees(order: usize) -> Vec<OrientedTree> {
    assert!((1..=8).contains(&order), "enumeration is exhaustive, keep the order small");
    if order == 1 {
        let d = Digraph::build(1, &[]).expect("a single vertex is fine");
        return vec![OrientedTree::new(d).expect("a single vertex is a tree")];
    }
    let mut seen = std::collections::BTreeSet::new();
    let mut out = Vec::new();
    let mut prufer = vec![0usize; order - 2];
    loop {
        let edges = prufer_to_edges(order, &prufer);
        for mask in 0u32..(1 << (order - 1)) {
            let arcs: Vec<(usize, usize)> = edges
                .iter()
                .enumerate()
                .map(|(i, &(a, b))| if mask >> i & 1 == 1 { (b, a) } else { (a, b) })
                .collect();
            let d = Digraph::build(order, &arcs).expect("tree edges are well formed");
            let t = OrientedTree::new(d).expect("an oriented tree by construction");
            if seen.insert(canonical_tree_key(&t)) {
                out.push(t);
            }
        }
        let mut i = 0;
        loop {
            if i == prufer.len() {
                return out;
            }
            prufer[i] += 1;
            if prufer[i] < order {
                break;
            }
            prufer[i] = 0;
            i += 1;
        }
    }
}

/// The grounded members of `enumerate_oriented_trees`.
pub fn enumerate_grounded_trees(order: usize) -> Vec<OrientedTree> {
    enumerate_oriented_trees(order)
        .into_iter()
        .filter(|t| grounded_profile(t).grounded)
        .collect()
}

/// Two-level uniform broom digraph: d0^2 + 1 roots, each with d0 fresh
/// internals, internal j of root r covering chunk j of the other roots in
/// ascending order. The chunked assignment concentrates in-degrees on the
/// small root ids, which keeps the cleaned root sets non-trivial level
/// after level.
pub fn tall_host(d0: usize) -> BroomDigraph {
    assert!(d0 >= 2, "a single chunk cannot spread in-degrees");
    let m = d0 * d0 + 1;
    let mut all_arcs = Vec::new();
    let mut brooms = Vec::with_capacity(m);
    for r in 0..m {
        let others: Vec<usize> = (0..m).filter(|&v| v != r).collect();
        let mut arcs = Vec::with_capacity(d0 + d0 * d0);
        for j in 0..d0 {
            let internal = m + r * d0 + j;
            arcs.push((r, internal));
            for &leaf in &others[j * d0..(j + 1) * d0] {
                arcs.push((internal, leaf));
            }
        }
        all_arcs.extend_from_slice(&arcs);
        brooms.push(BroomJson { root: r, arcs });
    }
    let digraph = Digraph::build(m + m * d0, &all_arcs).expect("fresh internals avoid collisions");
    let cert = CertificateJson { roots: (0..m).collect(), brooms };
    let roots: VertexSet = (0..m).collect();
    validate_broom_digraph(digraph, roots, &cert, 2, d0)
        .expect("the two-level construction is a broom digraph")
}

/// A host, a tree, a cleaning schedule known to succeed on it, and the
/// reattachment moves the run is expected to take, outermost level first.
/// The manifest records which runtime preconditions the host was built to
/// satisfy.
#[derive(Debug, Clone)]
pub struct FavorableInstance {
    pub name: &'static str,
    pub host: BroomDigraph,
    pub tree: OrientedTree,
    pub schedule: Vec<LevelParams>,
    pub expect_cases: Vec<EmbedCase>,
    pub manifest: &'static str,
}

fn pass_through_level(broom_target: usize, target_degree: usize) -> LevelParams {
    LevelParams {
        subsample: SubsampleParams {
            p_keep: 1.0,
            outdeg_floor: 0,
            indeg_root_threshold: 2.0,
            broom_target,
            resample_cap: 1,
            rng_seed: 0,
        },
        target_degree,
    }
}

fn small_tree(order: usize, arcs: &[(usize, usize)]) -> OrientedTree {
    OrientedTree::new(Digraph::build(order, arcs).expect("well formed"))
        .expect("a tree by construction")
}

/// Instances covering all three reattachment moves, including the
/// equal-split-lengths branch of the forward-arc move.
pub fn gen_favorable() -> Vec<FavorableInstance> {
    let flat = || from_out_regular(complete_digraph(6), 1).expect("complete digraphs are regular");
    vec![
        FavorableInstance {
            name: "lone-vertex-flat",
            host: flat(),
            tree: small_tree(1, &[]),
            schedule: vec![],
            expect_cases: vec![],
            manifest: "any broom digraph hosts a single vertex on its smallest root",
        },
        FavorableInstance {
            name: "sink-pair-flat",
            host: flat(),
            tree: small_tree(3, &[(0, 2), (1, 2)]),
            schedule: vec![pass_through_level(2, 2), pass_through_level(1, 1)],
            expect_cases: vec![EmbedCase::RootInNeighbor, EmbedCase::RootInNeighbor],
            manifest: "every vertex a root with full in-degree, so each level keeps \
                       two or more roots and the root-in-neighbor move always has a \
                       candidate whose source path is just itself",
        },
        FavorableInstance {
            name: "out-fork-flat",
            host: flat(),
            tree: small_tree(3, &[(0, 1), (0, 2)]),
            schedule: vec![pass_through_level(2, 2), pass_through_level(1, 1)],
            expect_cases: vec![EmbedCase::ForwardArc, EmbedCase::RootInNeighbor],
            manifest: "height-1 brooms make every length-1 walk end on a root, which \
                       is exactly what the forward-arc move's equal-split branch checks",
        },
        FavorableInstance {
            name: "tail-tall",
            host: tall_host(5),
            tree: small_tree(3, &[(0, 1), (1, 2)]),
            schedule: vec![pass_through_level(3, 2), pass_through_level(1, 1)],
            expect_cases: vec![EmbedCase::PathPredecessor, EmbedCase::RootInNeighbor],
            manifest: "height-2 brooms put the deeper image on a broom internal, so \
                       the next level up reattaches through the path-predecessor move; \
                       chunked leaf assignment keeps several high-in-degree roots alive \
                       after each cleaning",
        },
    ]
}

/// Looks the tree up in the curated catalog by isomorphism class.
pub fn gen_favorable_for(tree: &OrientedTree) -> Result<FavorableInstance, GenError> {
    let key = canonical_tree_key(tree);
    gen_favorable()
        .into_iter()
        .find(|inst| canonical_tree_key(&inst.tree) == key)
        .ok_or(GenError::UnsupportedTree)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::brooms::check_high_degree_property;
    use crate::embed::{check_proper, constructive_embed, EmbedStrictness};

    #[test]
    fn out_regular_hits_the_requested_degree() {
        let d = gen_out_regular(50, 7, 1).unwrap();
        for v in d.vertices() {
            assert_eq!(d.out_degree(v), 7);
            assert!(!d.has_arc(v, v));
        }
        assert_eq!(d, gen_out_regular(50, 7, 1).unwrap());
        assert_ne!(d, gen_out_regular(50, 7, 2).unwrap());
        assert_eq!(
            gen_out_regular(4, 4, 0),
            Err(GenError::DegreeTooLarge { d: 4, n: 4 })
        );
    }

    #[test]
    fn arborescence_respects_branch_and_height() {
        for seed in 0..10 {
            let arb = gen_arborescence(2, 3, 4, seed);
            assert!(arb.height() <= 4);
            for v in arb.digraph().vertices() {
                let deg = arb.digraph().out_degree(v);
                assert!(deg == 0 || (2..=3).contains(&deg), "degree {deg}");
            }
        }
    }

    #[test]
    fn broom_shapes_come_out_as_ordered() {
        for k in 1..=3 {
            for d in 1..=3 {
                for ell in 1..=k + 1 {
                    let b = gen_broom(k, d, ell, (k * 100 + d * 10 + ell) as u64).unwrap();
                    assert_eq!((b.k(), b.d(), b.ell()), (k, d, ell));
                }
            }
        }
        assert_eq!(gen_broom(2, 2, 4, 0), Err(GenError::ShapeOutOfRange { k: 2, ell: 4 }));
    }

    #[test]
    fn broom_digraph_generator_validates() {
        let b = gen_broom_digraph(2, 2, 9, 5).unwrap();
        assert_eq!((b.k(), b.d()), (2, 2));
        assert_eq!(b.roots().len(), 9);
        assert!(check_high_degree_property(&b).is_ok());
        assert_eq!(
            gen_broom_digraph(2, 3, 9, 0),
            Err(GenError::LeafSupplyShort { need: 9, have: 8 })
        );
    }

    #[test]
    fn grounded_tree_generator_filters() {
        for seed in 0..20 {
            let t = gen_grounded_tree(5, seed, false).unwrap();
            assert_eq!(t.vertex_count(), 5);
            assert!(grounded_profile(&t).grounded);
            let t = gen_grounded_tree(5, seed, true).unwrap();
            assert!(grounded_profile(&t).max_grounded);
        }
    }

    #[test]
    fn enumeration_matches_hand_counts_on_tiny_orders() {
        assert_eq!(enumerate_oriented_trees(1).len(), 1);
        assert_eq!(enumerate_oriented_trees(2).len(), 1);
        assert_eq!(enumerate_oriented_trees(3).len(), 3);
        let four = enumerate_oriented_trees(4);
        let five = enumerate_oriented_trees(5);
        assert!(four.len() > 3 && five.len() > four.len());
    }

    #[test]
    fn random_trees_land_in_the_enumeration() {
        let keys: std::collections::BTreeSet<String> =
            enumerate_oriented_trees(5).iter().map(canonical_tree_key).collect();
        for seed in 0..50 {
            let t = gen_oriented_tree(5, seed).unwrap();
            assert!(keys.contains(&canonical_tree_key(&t)));
        }
    }

    #[test]
    fn tall_host_is_a_uniform_two_level_digraph() {
        let b = tall_host(2);
        assert_eq!((b.k(), b.d()), (2, 2));
        assert_eq!(b.roots().len(), 5);
        assert_eq!(b.digraph().vertex_count(), 15);
        assert!(check_high_degree_property(&b).is_ok());
        for (_, broom) in b.brooms() {
            assert_eq!(broom.ell(), 2);
        }
    }

    #[test]
    fn favorable_lookup_matches_by_shape() {
        let relabeled = small_tree(3, &[(2, 0), (1, 0)]);
        let inst = gen_favorable_for(&relabeled).unwrap();
        assert_eq!(inst.name, "sink-pair-flat");
        let path4 = small_tree(4, &[(0, 1), (1, 2), (2, 3)]);
        assert!(matches!(gen_favorable_for(&path4), Err(GenError::UnsupportedTree)));
    }

    #[test]
    fn favorable_instances_run_their_advertised_cases() {
        let mut saw_equal_split_forward = false;
        for inst in gen_favorable() {
            let mode = EmbedStrictness::Parametric { schedule: inst.schedule.clone() };
            let out = constructive_embed(&inst.host, &inst.tree, &mode)
                .unwrap_or_else(|e| panic!("{} failed: {e}", inst.name));
            let cases: Vec<EmbedCase> = out.trace.iter().map(|t| t.case).collect();
            assert_eq!(cases, inst.expect_cases, "{}", inst.name);
            assert!(check_proper(&out.witness).ok, "{}", inst.name);
            saw_equal_split_forward |= out
                .trace
                .iter()
                .any(|t| t.case == EmbedCase::ForwardArc && t.arcs_to_top == t.arcs_to_leaf);
        }
        assert!(saw_equal_split_forward);
    }
}
