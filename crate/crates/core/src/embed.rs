//! Embedding grounded trees into broom digraphs.
//!
//! Three search modes with different guarantees. `brute_embed` enumerates
//! every injective arc-preserving map on small hosts. `heuristic_embed`
//! peels the tree to its max-grounded core, backtracks over core
//! placements anchored on high-in-degree vertices, and replays the peels.
//! `constructive_embed` runs the degradation chain: clean the digraph once
//! per removed leaf, embed the shrunken tree in the cleaned digraph, then
//! re-attach the leaf by one of three moves keyed to where its neighbor's
//! image sits. Witnesses carry the source paths needed to audit the
//! disjointness conditions, and `check_proper` re-derives everything.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::brooms::BroomDigraph;
use crate::digraph::{Digraph, Walk};
use crate::grounded::{grounded_profile, height_function, HeightFunction, OrientedTree};
use crate::restructure::{clean_up, CleanUpError, CleanUpMode};
use crate::subsample::SubsampleParams;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EmbeddingDefect {
    #[error("tree vertex {0} has no image")]
    VertexUnmapped(usize),
    #[error("map key {0} is not a live tree vertex")]
    StrayKey(usize),
    #[error("image {image} of tree vertex {tree_vertex} is not a live host vertex")]
    ImageDead { tree_vertex: usize, image: usize },
    #[error("tree vertices {a} and {b} share the image {image}")]
    ImagesCollide { a: usize, b: usize, image: usize },
    #[error("tree arc {tail} -> {head} has no host arc {image_tail} -> {image_head}")]
    ArcDropped { tail: usize, head: usize, image_tail: usize, image_head: usize },
}

/// An injective arc-preserving map from a tree into a host digraph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Embedding {
    pub tree: OrientedTree,
    pub host: Digraph,
    pub map: BTreeMap<usize, usize>,
}

impl Embedding {
    pub fn new(
        tree: OrientedTree,
        host: Digraph,
        map: BTreeMap<usize, usize>,
    ) -> Result<Self, EmbeddingDefect> {
        match map_defects(&tree, &host, &map).into_iter().next() {
            Some(defect) => Err(defect),
            None => Ok(Embedding { tree, host, map }),
        }
    }

    pub fn image_of(&self, v: usize) -> Option<usize> {
        self.map.get(&v).copied()
    }

    /// Host vertices covered by the map, ascending.
    pub fn image(&self) -> Vec<usize> {
        let set: BTreeSet<usize> = self.map.values().copied().collect();
        set.into_iter().collect()
    }
}

fn map_defects(
    tree: &OrientedTree,
    host: &Digraph,
    map: &BTreeMap<usize, usize>,
) -> Vec<EmbeddingDefect> {
    let td = tree.digraph();
    let mut defects = Vec::new();
    for v in td.vertices() {
        if !map.contains_key(&v) {
            defects.push(EmbeddingDefect::VertexUnmapped(v));
        }
    }
    let mut owner: BTreeMap<usize, usize> = BTreeMap::new();
    for (&v, &img) in map {
        if !td.is_alive(v) {
            defects.push(EmbeddingDefect::StrayKey(v));
            continue;
        }
        if !host.is_alive(img) {
            defects.push(EmbeddingDefect::ImageDead { tree_vertex: v, image: img });
        }
        if let Some(&first) = owner.get(&img) {
            defects.push(EmbeddingDefect::ImagesCollide { a: first, b: v, image: img });
        } else {
            owner.insert(img, v);
        }
    }
    for (u, v) in td.arcs() {
        let (Some(&iu), Some(&iv)) = (map.get(&u), map.get(&v)) else { continue };
        if !host.has_arc(iu, iv) {
            defects.push(EmbeddingDefect::ArcDropped {
                tail: u,
                head: v,
                image_tail: iu,
                image_head: iv,
            });
        }
    }
    defects
}

/// An embedding together with the host's broom structure and the source
/// paths of the copy, keyed by the images of the tree's in-degree-0
/// vertices.
#[derive(Debug, Clone, PartialEq)]
pub struct ProperCopyWitness {
    pub embedding: Embedding,
    pub broom_host: BroomDigraph,
    pub source_paths: BTreeMap<usize, Walk>,
}

impl ProperCopyWitness {
    /// Builds the witness by looking up each source image's path in the
    /// broom structure.
    pub fn derive(
        embedding: Embedding,
        broom_host: BroomDigraph,
    ) -> Result<Self, crate::brooms::SourcePathError> {
        let td = embedding.tree.digraph();
        let mut source_paths = BTreeMap::new();
        for x in td.vertices().filter(|&x| td.in_degree(x) == 0) {
            if let Some(&img) = embedding.map.get(&x) {
                source_paths.insert(img, broom_host.source_path(img)?);
            }
        }
        Ok(ProperCopyWitness { embedding, broom_host, source_paths })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ProperViolation {
    BrokenMap(EmbeddingDefect),
    /// The embedding's host digraph differs from the broom structure's.
    HostMismatch,
    /// A vertex at normalized height zero maps outside the root set.
    HeightZeroOffRoot { tree_vertex: usize, image: usize },
    /// A source image has no stored path, or no path exists for it.
    SourcePathMissing { image: usize },
    /// The stored path differs from the one the brooms define.
    SourcePathWrong { image: usize },
    /// A stored path key that is not the image of any tree source.
    StraySourcePath { image: usize },
    PathsShareVertex { image_a: usize, image_b: usize, shared: usize },
    /// A source path passes through the image of a non-source vertex.
    PathHitsCopy { source_image: usize, vertex: usize },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProperReport {
    pub ok: bool,
    pub violations: Vec<ProperViolation>,
}

/// Re-derives heights, sources, and source paths from scratch and checks
/// every clause of properness, reporting each failure separately.
pub fn check_proper(w: &ProperCopyWitness) -> ProperReport {
    let mut violations = Vec::new();
    let tree = &w.embedding.tree;
    let td = tree.digraph();
    let map = &w.embedding.map;
    for defect in map_defects(tree, &w.embedding.host, map) {
        violations.push(ProperViolation::BrokenMap(defect));
    }
    if w.embedding.host != *w.broom_host.digraph() {
        violations.push(ProperViolation::HostMismatch);
    }
    let h = height_function(tree);
    for (v, hv) in h.iter() {
        if hv == 0 {
            if let Some(&img) = map.get(&v) {
                if !w.broom_host.roots().contains(img) {
                    violations.push(ProperViolation::HeightZeroOffRoot { tree_vertex: v, image: img });
                }
            }
        }
    }
    let sources: Vec<usize> = td.vertices().filter(|&x| td.in_degree(x) == 0).collect();
    let source_images: BTreeSet<usize> =
        sources.iter().filter_map(|x| map.get(x).copied()).collect();
    let non_source_images: BTreeSet<usize> = td
        .vertices()
        .filter(|&x| td.in_degree(x) > 0)
        .filter_map(|x| map.get(&x).copied())
        .collect();
    for &img in w.source_paths.keys() {
        if !source_images.contains(&img) {
            violations.push(ProperViolation::StraySourcePath { image: img });
        }
    }
    let mut paths: Vec<(usize, BTreeSet<usize>)> = Vec::new();
    for &img in &source_images {
        let Ok(walk) = w.broom_host.source_path(img) else {
            violations.push(ProperViolation::SourcePathMissing { image: img });
            continue;
        };
        match w.source_paths.get(&img) {
            None => violations.push(ProperViolation::SourcePathMissing { image: img }),
            Some(stored) if *stored != walk => {
                violations.push(ProperViolation::SourcePathWrong { image: img })
            }
            Some(_) => {}
        }
        paths.push((img, walk.verts().iter().copied().collect()));
    }
    for (i, (a, pa)) in paths.iter().enumerate() {
        for (b, pb) in paths.iter().skip(i + 1) {
            if let Some(&shared) = pa.intersection(pb).next() {
                violations.push(ProperViolation::PathsShareVertex {
                    image_a: *a,
                    image_b: *b,
                    shared,
                });
            }
        }
        for &v in pa {
            if non_source_images.contains(&v) {
                violations.push(ProperViolation::PathHitsCopy { source_image: *a, vertex: v });
            }
        }
    }
    ProperReport { ok: violations.is_empty(), violations }
}

/// One removed leaf: the leaf, its unique neighbor, and whether the
/// removed arc ran neighbor -> leaf.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PeelStep {
    pub leaf: usize,
    pub neighbor: usize,
    pub arc_from_neighbor: bool,
}

/// A tree reduced to its max-grounded core, with the removals needed to
/// rebuild it in reverse order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PeelSequence {
    pub steps: Vec<PeelStep>,
    pub core: OrientedTree,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CoreError {
    #[error("the tree is not grounded")]
    NotGrounded,
}

/// Peels zero-height leaves (smallest id first) until the remainder is
/// max-grounded. Every peeled vertex has out-degree 0 and in-degree 1, so
/// each step records an `arc_from_neighbor` peel.
pub fn max_grounded_core(t: &OrientedTree) -> Result<PeelSequence, CoreError> {
    if !grounded_profile(t).grounded {
        return Err(CoreError::NotGrounded);
    }
    let mut cur = t.clone();
    let mut steps = Vec::new();
    loop {
        let prof = grounded_profile(&cur);
        if prof.max_grounded {
            return Ok(PeelSequence { steps, core: cur });
        }
        let h = &prof.normalized_height;
        let leaf = cur
            .digraph()
            .vertices()
            .find(|&v| h.h(v) == 0)
            .expect("normalization puts some vertex at height zero");
        let ins = cur.digraph().in_neighbors(leaf);
        assert_eq!(cur.digraph().out_degree(leaf), 0, "a top vertex has no out-arcs");
        assert_eq!(ins.len(), 1, "off the grounded layer, a top vertex has one in-arc");
        steps.push(PeelStep { leaf, neighbor: ins[0], arc_from_neighbor: true });
        cur = cur.remove_vertex(leaf).expect("removing a leaf keeps a tree");
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExtendError {
    #[error("the given embedding is not an embedding of the peel core")]
    CoreMismatch,
    #[error("no unused out-neighbor of {anchor_image} remains for leaf {leaf}")]
    Starved { leaf: usize, anchor_image: usize },
    #[error("replay produced an invalid embedding: {0}")]
    Inconsistent(EmbeddingDefect),
}

/// Replays a peel sequence in reverse on top of a core embedding, giving
/// each restored leaf the smallest unused out-neighbor of its neighbor's
/// image. Starvation is impossible when the host's minimum out-degree is
/// at least the tree order; on smaller hosts it is a real outcome.
pub fn extend_by_peels(
    tree: &OrientedTree,
    seq: &PeelSequence,
    core_embedding: &Embedding,
) -> Result<Embedding, ExtendError> {
    if core_embedding.tree.digraph() != seq.core.digraph() {
        return Err(ExtendError::CoreMismatch);
    }
    let host = &core_embedding.host;
    let mut map = core_embedding.map.clone();
    let mut used: BTreeSet<usize> = map.values().copied().collect();
    for step in seq.steps.iter().rev() {
        let anchor_image = map[&step.neighbor];
        let candidates = if step.arc_from_neighbor {
            host.out_neighbors(anchor_image)
        } else {
            host.in_neighbors(anchor_image)
        };
        let z = candidates
            .iter()
            .copied()
            .find(|z| !used.contains(z))
            .ok_or(ExtendError::Starved { leaf: step.leaf, anchor_image })?;
        used.insert(z);
        map.insert(step.leaf, z);
    }
    Embedding::new(tree.clone(), host.clone(), map).map_err(ExtendError::Inconsistent)
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BruteError {
    #[error("host has {vertices} live vertices, above the exhaustive-search cap of {limit}")]
    HostTooLarge { vertices: usize, limit: usize },
}

const BRUTE_VERTEX_CAP: usize = 14;

/// Exhaustive search for an embedding, trying tree vertices in descending
/// undirected degree and host vertices ascending, so the first solution is
/// the lexicographically smallest in that order. With `proper_in` set,
/// solutions failing `check_proper` against that broom structure are
/// skipped. Refuses hosts above 14 live vertices.
pub fn brute_embed(
    host: &Digraph,
    tree: &OrientedTree,
    proper_in: Option<&BroomDigraph>,
) -> Result<Option<Embedding>, BruteError> {
    let n = host.vertex_count();
    if n > BRUTE_VERTEX_CAP {
        return Err(BruteError::HostTooLarge { vertices: n, limit: BRUTE_VERTEX_CAP });
    }
    Ok(brute_embed_unbounded(host, tree, proper_in))
}

/// `brute_embed` without the host size cap.
pub fn brute_embed_unbounded(
    host: &Digraph,
    tree: &OrientedTree,
    proper_in: Option<&BroomDigraph>,
) -> Option<Embedding> {
    let td = tree.digraph();
    let mut order: Vec<usize> = td.vertices().collect();
    order.sort_by_key(|&v| (usize::MAX - tree.undirected_neighbors(v).len(), v));
    let hosts: Vec<usize> = host.vertices().collect();
    let mut map: BTreeMap<usize, usize> = BTreeMap::new();
    let mut used: BTreeSet<usize> = BTreeSet::new();
    let found = brute_step(host, tree, proper_in, &order, &hosts, &mut map, &mut used, 0)?;
    Some(
        Embedding::new(tree.clone(), host.clone(), found)
            .expect("the search only completes consistent maps"),
    )
}

#[allow(clippy::too_many_arguments)]
fn brute_step(
    host: &Digraph,
    tree: &OrientedTree,
    proper_in: Option<&BroomDigraph>,
    order: &[usize],
    hosts: &[usize],
    map: &mut BTreeMap<usize, usize>,
    used: &mut BTreeSet<usize>,
    depth: usize,
) -> Option<BTreeMap<usize, usize>> {
    if depth == order.len() {
        if let Some(bh) = proper_in {
            let embedding =
                Embedding::new(tree.clone(), host.clone(), map.clone()).expect("consistent map");
            let witness = match ProperCopyWitness::derive(embedding, bh.clone()) {
                Ok(w) => w,
                Err(_) => return None,
            };
            if !check_proper(&witness).ok {
                return None;
            }
        }
        return Some(map.clone());
    }
    let x = order[depth];
    let td = tree.digraph();
    'candidates: for &v in hosts {
        if used.contains(&v) {
            continue;
        }
        for (&y, &w) in map.iter() {
            if td.has_arc(x, y) && !host.has_arc(v, w) {
                continue 'candidates;
            }
            if td.has_arc(y, x) && !host.has_arc(w, v) {
                continue 'candidates;
            }
        }
        map.insert(x, v);
        used.insert(v);
        if let Some(done) = brute_step(host, tree, proper_in, order, hosts, map, used, depth + 1) {
            return Some(done);
        }
        map.remove(&x);
        used.remove(&v);
    }
    None
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SearchBudget {
    pub restarts: usize,
    pub nodes_per_restart: u64,
    pub seed: u64,
}

impl Default for SearchBudget {
    fn default() -> Self {
        SearchBudget { restarts: 24, nodes_per_restart: 250_000, seed: 0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SearchStats {
    pub restarts_used: usize,
    pub nodes_expanded: u64,
}

/// Outcome of a heuristic search. `definitive` is true when an embedding
/// was found, or when the first (deterministic, exhaustive) restart ran
/// out of candidates without hitting its node budget, which proves
/// absence. Otherwise absence is only "not found within budget".
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SearchOutcome {
    pub embedding: Option<Embedding>,
    pub definitive: bool,
    pub stats: SearchStats,
}

#[derive(Debug, Clone, Copy)]
struct Slot {
    vertex: usize,
    /// Earlier-placed neighbor and whether the tree arc runs anchor -> vertex.
    anchor: Option<(usize, bool)>,
}

/// Backtracking search for an embedding of a grounded tree. The
/// max-grounded core is placed first, starting from its highest-in-degree
/// host candidates, each later vertex anchored to its already-placed tree
/// neighbor; the peeled leaves are restored as ordinary search variables
/// in reverse peel order. Restart 0 is deterministic and exhaustive up to
/// the node budget; later restarts shuffle candidate orders.
pub fn heuristic_embed(
    host: &Digraph,
    tree: &OrientedTree,
    budget: &SearchBudget,
) -> Result<SearchOutcome, CoreError> {
    let seq = max_grounded_core(tree)?;
    let core = &seq.core;
    let cd = core.digraph();
    let start = cd
        .vertices()
        .find(|&v| cd.in_degree(v) >= 2)
        .or_else(|| cd.vertices().next())
        .expect("a tree has a vertex");
    let mut order = vec![Slot { vertex: start, anchor: None }];
    let mut seen = BTreeSet::from([start]);
    let mut queue = VecDeque::from([start]);
    while let Some(u) = queue.pop_front() {
        for w in core.undirected_neighbors(u) {
            if seen.insert(w) {
                order.push(Slot { vertex: w, anchor: Some((u, cd.has_arc(u, w))) });
                queue.push_back(w);
            }
        }
    }
    for step in seq.steps.iter().rev() {
        order.push(Slot {
            vertex: step.leaf,
            anchor: Some((step.neighbor, step.arc_from_neighbor)),
        });
    }

    let mut start_candidates: Vec<usize> = host.vertices().collect();
    start_candidates.sort_by_key(|&v| (usize::MAX - host.in_degree(v), v));

    let mut stats = SearchStats::default();
    for restart in 0..budget.restarts.max(1) {
        let mut search = Anchored {
            host,
            order: &order,
            start_candidates: &start_candidates,
            map: BTreeMap::new(),
            used: BTreeSet::new(),
            nodes: 0,
            cap: budget.nodes_per_restart,
            cut: false,
            rng: (restart > 0).then(|| {
                ChaCha8Rng::seed_from_u64(
                    budget.seed ^ (restart as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15),
                )
            }),
        };
        let found = search.run(0);
        stats.restarts_used = restart + 1;
        stats.nodes_expanded += search.nodes;
        if found {
            let embedding = Embedding::new(tree.clone(), host.clone(), search.map)
                .expect("the search only completes consistent maps");
            return Ok(SearchOutcome { embedding: Some(embedding), definitive: true, stats });
        }
        if restart == 0 && !search.cut {
            return Ok(SearchOutcome { embedding: None, definitive: true, stats });
        }
    }
    Ok(SearchOutcome { embedding: None, definitive: false, stats })
}

struct Anchored<'a> {
    host: &'a Digraph,
    order: &'a [Slot],
    start_candidates: &'a [usize],
    map: BTreeMap<usize, usize>,
    used: BTreeSet<usize>,
    nodes: u64,
    cap: u64,
    cut: bool,
    rng: Option<ChaCha8Rng>,
}

impl Anchored<'_> {
    fn run(&mut self, depth: usize) -> bool {
        if depth == self.order.len() {
            return true;
        }
        let slot = self.order[depth];
        let mut candidates: Vec<usize> = match slot.anchor {
            None => self.start_candidates.to_vec(),
            Some((anchor, from_anchor)) => {
                let img = self.map[&anchor];
                if from_anchor {
                    self.host.out_neighbors(img).to_vec()
                } else {
                    self.host.in_neighbors(img).to_vec()
                }
            }
        };
        if let Some(rng) = &mut self.rng {
            candidates.shuffle(rng);
        }
        for v in candidates {
            if self.cut {
                return false;
            }
            self.nodes += 1;
            if self.nodes > self.cap {
                self.cut = true;
                return false;
            }
            if !self.used.insert(v) {
                continue;
            }
            self.map.insert(slot.vertex, v);
            if self.run(depth + 1) {
                return true;
            }
            self.map.remove(&slot.vertex);
            self.used.remove(&v);
        }
        false
    }
}

/// Per-level thresholds for the parametric degradation chain.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelParams {
    pub subsample: SubsampleParams,
    pub target_degree: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum EmbedStrictness {
    /// Enforces the closed-form bounds: the host's k at least the tree
    /// order, and d at least the tower the chain consumes.
    Strict,
    /// Runs the chain with caller-supplied thresholds, one entry per
    /// removed leaf.
    Parametric { schedule: Vec<LevelParams> },
}

/// Which move re-attached the leaf at a level.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EmbedCase {
    /// Leaf fed its neighbor, neighbor's image off the new roots: the leaf
    /// takes the predecessor on the image's source path.
    PathPredecessor,
    /// Leaf fed its neighbor, neighbor's image a new root: the leaf takes
    /// an in-neighbor whose source path avoids the copy's paths.
    RootInNeighbor,
    /// Neighbor fed the leaf: the leaf takes an out-neighbor of the
    /// image, off every source path of the copy.
    ForwardArc,
}

impl std::fmt::Display for EmbedCase {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let token = match self {
            EmbedCase::PathPredecessor => "path-predecessor",
            EmbedCase::RootInNeighbor => "root-in-neighbor",
            EmbedCase::ForwardArc => "forward-arc",
        };
        write!(f, "{token}")
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LevelTrace {
    pub level: usize,
    pub tree_order: usize,
    pub leaf: usize,
    pub neighbor: usize,
    pub case: EmbedCase,
    /// Arcs from the split vertex to the nearest other top vertex.
    pub arcs_to_top: usize,
    /// Arcs from the split vertex to the removed leaf.
    pub arcs_to_leaf: usize,
    /// Host vertex the leaf landed on.
    pub image: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConstructiveOutcome {
    pub witness: ProperCopyWitness,
    pub trace: Vec<LevelTrace>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConstructiveError {
    #[error("the tree is not max-grounded")]
    NotMaxGrounded,
    #[error("strict mode needs the host k >= tree order; k = {k}, order = {order}")]
    TreeTooTall { order: usize, k: usize },
    #[error("strict mode needs d >= 10^{exponent} for a tree on {order} vertices, got {d}")]
    DegreeBelowTheoremBound { d: usize, order: usize, exponent: u128 },
    #[error("the schedule covers {got} levels but the chain needs {needed}")]
    ScheduleTooShort { needed: usize, got: usize },
    #[error("cleaning failed at level {level}: {source}")]
    CleanUpFailed { level: usize, source: CleanUpError },
    #[error("no root available at level {level}")]
    BaseNeedsRoot { level: usize },
    #[error("level {level} (tree order {tree_order}, {case} move): {claim}")]
    ClaimFailed { level: usize, tree_order: usize, case: EmbedCase, claim: String },
}

/// Embeds a max-grounded tree as a proper copy by shrinking the tree one
/// leaf at a time while cleaning the digraph once per level, then
/// re-attaching leaves on the way back up. Every level's witness is
/// checked before it is returned; the trace records which move fired at
/// each level, sorted outermost first.
pub fn constructive_embed(
    b: &BroomDigraph,
    tree: &OrientedTree,
    mode: &EmbedStrictness,
) -> Result<ConstructiveOutcome, ConstructiveError> {
    if !grounded_profile(tree).max_grounded {
        return Err(ConstructiveError::NotMaxGrounded);
    }
    let order = tree.vertex_count();
    let schedule = match mode {
        EmbedStrictness::Strict => {
            let k = b.k();
            if k < order {
                return Err(ConstructiveError::TreeTooTall { order, k });
            }
            let exponent = chain_exponent(k, order);
            if !meets_power_of_ten(b.d(), exponent) {
                return Err(ConstructiveError::DegreeBelowTheoremBound {
                    d: b.d(),
                    order,
                    exponent,
                });
            }
            None
        }
        EmbedStrictness::Parametric { schedule } => {
            if schedule.len() + 1 < order {
                return Err(ConstructiveError::ScheduleTooShort {
                    needed: order - 1,
                    got: schedule.len(),
                });
            }
            Some(schedule.as_slice())
        }
    };
    let mut trace = Vec::new();
    let outcome = embed_level(b, tree, 0, schedule, &mut trace)?;
    trace.sort_by_key(|t| t.level);
    Ok(ConstructiveOutcome { witness: outcome.witness, trace })
}

fn chain_exponent(k: usize, order: usize) -> u128 {
    let k = k as u128;
    let cube = k.saturating_mul(k).saturating_mul(k);
    let step = k.saturating_mul(8).saturating_pow(order.min(u32::MAX as usize) as u32);
    13u128.saturating_mul(cube).saturating_mul(step)
}

fn meets_power_of_ten(d: usize, exponent: u128) -> bool {
    if exponent > 38 {
        return false;
    }
    d as u128 >= 10u128.pow(exponent as u32)
}

struct LevelOutcome {
    map: BTreeMap<usize, usize>,
    witness: ProperCopyWitness,
}

fn embed_level(
    b: &BroomDigraph,
    t: &OrientedTree,
    level: usize,
    schedule: Option<&[LevelParams]>,
    trace: &mut Vec<LevelTrace>,
) -> Result<LevelOutcome, ConstructiveError> {
    if t.vertex_count() == 1 {
        let v = t.digraph().vertices().next().unwrap();
        let root = b.roots().min().ok_or(ConstructiveError::BaseNeedsRoot { level })?;
        let map = BTreeMap::from([(v, root)]);
        let witness = finish_level(b, t, map.clone());
        return Ok(LevelOutcome { map, witness });
    }

    let prof = grounded_profile(t);
    assert!(prof.max_grounded, "shrinking by a lowest leaf keeps the tree max-grounded");
    let choice = choose_peel(t, &prof.normalized_height);
    let t_next = t.remove_vertex(choice.leaf).expect("removing a leaf keeps a tree");

    let (mode, params) = match schedule {
        None => (
            CleanUpMode::Strict,
            SubsampleParams::paper_defaults(b.d(), b.k(), level as u64),
        ),
        Some(sched) => {
            let lp = &sched[level];
            (
                CleanUpMode::Parametric { target_degree: lp.target_degree },
                lp.subsample.clone(),
            )
        }
    };
    let cleaned = clean_up(b, &mode, &params)
        .map_err(|source| ConstructiveError::CleanUpFailed { level, source })?;
    let inner = cleaned.brooms;
    assert!(
        inner.roots().iter().all(|r| b.roots().contains(r)),
        "cleaning only keeps old roots"
    );
    assert!(
        inner.digraph().arcs().all(|(u, v)| b.digraph().has_arc(u, v)),
        "cleaning only keeps old arcs"
    );

    let sub = embed_level(&inner, &t_next, level + 1, schedule, trace)?;
    for &img in sub.map.values() {
        let outer = b.source_path(img).expect("copy vertices live in the host's brooms");
        let deeper = inner.source_path(img).expect("copy vertices live in the cleaned brooms");
        let deeper_set: BTreeSet<usize> = deeper.verts().iter().copied().collect();
        assert!(
            outer.verts().iter().all(|v| deeper_set.contains(v)),
            "with fewer roots, paths only grow: the outer path sits inside the deeper one"
        );
    }

    let iu = sub.map[&choice.neighbor];
    let images: Vec<usize> = sub.map.values().copied().collect();
    let (case, z) = if choice.leaf_feeds_neighbor {
        if inner.roots().contains(iu) {
            let z = pick_fresh_in_neighbor(b, iu, &images).ok_or_else(|| {
                ConstructiveError::ClaimFailed {
                    level,
                    tree_order: t.vertex_count(),
                    case: EmbedCase::RootInNeighbor,
                    claim: format!(
                        "every in-neighbor of the root image {iu} has a source path meeting the copy's paths"
                    ),
                }
            })?;
            (EmbedCase::RootInNeighbor, z)
        } else {
            let path = inner.source_path(iu).expect("a non-root image is internal to a broom");
            assert!(path.len_arcs() >= 1, "a non-root image has a real source path");
            let z = path.verts()[path.verts().len() - 2];
            assert!(
                !images.contains(&z),
                "properness below keeps the path predecessor off the copy"
            );
            (EmbedCase::PathPredecessor, z)
        }
    } else {
        let is = sub.map[&choice.split];
        let reach = inner.digraph().walks_of_length(is, choice.arcs_to_top);
        assert!(!reach.is_empty(), "positive out-degrees leave no dead ends");
        if let Some(escape) = reach.iter().find(|&v| !inner.roots().contains(v)) {
            return Err(ConstructiveError::ClaimFailed {
                level,
                tree_order: t.vertex_count(),
                case: EmbedCase::ForwardArc,
                claim: format!(
                    "a length-{} walk from {is} escapes the cleaned roots (reaches {escape})",
                    choice.arcs_to_top
                ),
            });
        }
        match inner.digraph().distance_to_set(iu, inner.roots()) {
            Some(dist) if dist <= inner.k() => {}
            _ => {
                return Err(ConstructiveError::ClaimFailed {
                    level,
                    tree_order: t.vertex_count(),
                    case: EmbedCase::ForwardArc,
                    claim: format!(
                        "no directed path of length at most {} from {iu} back to the cleaned roots",
                        inner.k()
                    ),
                });
            }
        }
        let z = pick_off_path_out_neighbor(&inner, iu, &images).ok_or_else(|| {
            ConstructiveError::ClaimFailed {
                level,
                tree_order: t.vertex_count(),
                case: EmbedCase::ForwardArc,
                claim: format!(
                    "every out-neighbor of {iu} lies on a source path of the copy"
                ),
            }
        })?;
        if choice.arcs_to_top == choice.arcs_to_leaf {
            assert!(
                inner.roots().contains(z),
                "equal split lengths force the new image onto the cleaned roots"
            );
        }
        (EmbedCase::ForwardArc, z)
    };

    let mut map = sub.map;
    map.insert(choice.leaf, z);
    let witness = finish_level(b, t, map.clone());
    trace.push(LevelTrace {
        level,
        tree_order: t.vertex_count(),
        leaf: choice.leaf,
        neighbor: choice.neighbor,
        case,
        arcs_to_top: choice.arcs_to_top,
        arcs_to_leaf: choice.arcs_to_leaf,
        image: z,
    });
    Ok(LevelOutcome { map, witness })
}

fn finish_level(b: &BroomDigraph, t: &OrientedTree, map: BTreeMap<usize, usize>) -> ProperCopyWitness {
    let embedding = Embedding::new(t.clone(), b.digraph().clone(), map)
        .expect("each move adds a host arc, so the map stays an embedding");
    let witness = ProperCopyWitness::derive(embedding, b.clone())
        .expect("every live host vertex has a source path");
    let report = check_proper(&witness);
    assert!(report.ok, "every level must hand back a proper copy: {:?}", report.violations);
    witness
}

/// Smallest in-neighbor of `target` in the host whose source path misses
/// the source paths of every copy vertex.
fn pick_fresh_in_neighbor(b: &BroomDigraph, target: usize, images: &[usize]) -> Option<usize> {
    let blocked: Vec<BTreeSet<usize>> = images
        .iter()
        .map(|&x| {
            b.source_path(x)
                .expect("copy vertices live in the host's brooms")
                .verts()
                .iter()
                .copied()
                .collect()
        })
        .collect();
    b.digraph().in_neighbors(target).iter().copied().find(|&c| {
        let pc = b.source_path(c).expect("an in-neighbor of a leaf is internal or a root");
        pc.verts().iter().all(|v| blocked.iter().all(|set| !set.contains(v)))
    })
}

/// Smallest out-neighbor of `from` in the cleaned digraph that sits on no
/// copy vertex's source path.
fn pick_off_path_out_neighbor(
    inner: &BroomDigraph,
    from: usize,
    images: &[usize],
) -> Option<usize> {
    let blocked: BTreeSet<usize> = images
        .iter()
        .flat_map(|&x| {
            inner
                .source_path(x)
                .expect("copy vertices live in the cleaned brooms")
                .verts()
                .to_vec()
        })
        .collect();
    inner.digraph().out_neighbors(from).iter().copied().find(|z| !blocked.contains(z))
}

struct PeelChoice {
    leaf: usize,
    neighbor: usize,
    leaf_feeds_neighbor: bool,
    split: usize,
    arcs_to_top: usize,
    arcs_to_leaf: usize,
}

/// Picks the leaf with the lowest height (smallest id on ties) and walks
/// the shortest undirected route to another top vertex. The route splits
/// at the unique vertex both of whose segments point away from it.
fn choose_peel(t: &OrientedTree, h: &HeightFunction) -> PeelChoice {
    let td = t.digraph();
    let leaf = t
        .leaves()
        .into_iter()
        .min_by_key(|&v| (h.h(v), v))
        .expect("a tree has a leaf");
    let neighbor = t.undirected_neighbors(leaf)[0];

    let mut parent: BTreeMap<usize, usize> = BTreeMap::from([(leaf, leaf)]);
    let mut queue = VecDeque::from([leaf]);
    let mut target = None;
    'bfs: while !queue.is_empty() {
        let mut hits: Vec<usize> = Vec::new();
        for _ in 0..queue.len() {
            let u = queue.pop_front().unwrap();
            for w in t.undirected_neighbors(u) {
                if parent.contains_key(&w) {
                    continue;
                }
                parent.insert(w, u);
                if h.h(w) == 0 {
                    hits.push(w);
                } else {
                    queue.push_back(w);
                }
            }
        }
        if let Some(&v) = hits.iter().min() {
            target = Some(v);
            break 'bfs;
        }
    }
    let target = target.expect("a max-grounded tree on two or more vertices has another top vertex");

    let mut route = vec![target];
    while *route.last().unwrap() != leaf {
        route.push(parent[route.last().unwrap()]);
    }
    route.reverse();

    let mut split_idx = 0;
    while split_idx + 1 < route.len() && td.has_arc(route[split_idx + 1], route[split_idx]) {
        split_idx += 1;
    }
    for pair in route[split_idx..].windows(2) {
        assert!(
            td.has_arc(pair[0], pair[1]),
            "past the split, every arc points at the top vertex"
        );
    }
    let arcs_to_leaf = split_idx;
    let arcs_to_top = route.len() - 1 - split_idx;
    assert!(arcs_to_top >= arcs_to_leaf, "the top segment is never the shorter one");
    PeelChoice {
        leaf,
        neighbor,
        leaf_feeds_neighbor: td.has_arc(leaf, neighbor),
        split: route[split_idx],
        arcs_to_top,
        arcs_to_leaf,
    }
}
