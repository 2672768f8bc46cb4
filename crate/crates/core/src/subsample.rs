//! Randomized arc subsampling with local resampling, and the extraction
//! pass that turns a good sample into a broom digraph whose roots all had
//! high in-degree in the original digraph.
//!
//! The resampler validates the good event directly instead of relying on
//! closed-form probability bounds, so it stays meaningful at parameter
//! scales far below the ones the bounds assume.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::brooms::{validate_broom, Broom, BroomDigraph, OutArborescence};
use crate::digraph::{Digraph, VertexSet};
use crate::restructure::{extract_broom, floor_root, reunite, ExtractError};

const RESAMPLE_LOG_CAP: usize = 100_000;

#[derive(Debug, Clone, PartialEq)]
pub struct SubsampleParams {
    /// Keep probability for arcs leaving a full-degree vertex.
    pub p_keep: f64,
    /// Sampled out-degrees must stay strictly above this floor.
    pub outdeg_floor: usize,
    /// Roots with original in-degree below this are kept at in-degree <= 1.
    pub indeg_root_threshold: f64,
    /// Out-degree of the brooms built by the extraction pass.
    pub broom_target: usize,
    pub resample_cap: usize,
    pub rng_seed: u64,
}

impl SubsampleParams {
    /// Thresholds as functions of d alone: keep probability d^(-2/3),
    /// floor d^(1/3)/2, root threshold d^(1/10), target floor(d^(1/(7k))).
    pub fn paper_defaults(d: usize, k: usize, seed: u64) -> SubsampleParams {
        let df = d as f64;
        SubsampleParams {
            p_keep: df.powf(-2.0 / 3.0),
            // floor(x/2) = floor(floor(x)/2) keeps the cube root exact
            outdeg_floor: (floor_root(d as u64, 3) / 2) as usize,
            indeg_root_threshold: df.powf(0.1),
            broom_target: floor_root(d as u64, 7 * k as u32) as usize,
            resample_cap: 1_000_000,
            rng_seed: seed,
        }
    }

    fn check(&self) -> Result<(), SampleFailure> {
        if !(self.p_keep > 0.0 && self.p_keep <= 1.0) {
            return Err(SampleFailure::BadParams(format!(
                "p_keep must lie in (0, 1], got {}",
                self.p_keep
            )));
        }
        if self.indeg_root_threshold <= 0.0 {
            return Err(SampleFailure::BadParams(
                "indeg_root_threshold must be positive".into(),
            ));
        }
        if self.broom_target == 0 {
            return Err(SampleFailure::BadParams("broom_target must be positive".into()));
        }
        if self.resample_cap == 0 {
            return Err(SampleFailure::BadParams("resample_cap must be positive".into()));
        }
        Ok(())
    }
}

/// Status of the sufficient condition e * p * d <= 1 backing the existence
/// argument, evaluated with the closed-form event bounds. Documentation
/// only; the sampler never rejects on it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpdStatus {
    pub epd: f64,
    pub satisfied: bool,
}

/// One resampling round: which violated vertex was redrawn, and through
/// which of the two event kinds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResampledEvent {
    /// A full-degree vertex whose sampled out-degree fell to the floor;
    /// its out-arcs were redrawn.
    OutDegreeLow(usize),
    /// A thin root that regained in-degree 2; its in-arcs were redrawn.
    InDegreeHigh(usize),
}

#[derive(Debug, Clone)]
pub struct SubsampleState {
    /// The sampled subdigraph.
    pub h: Digraph,
    /// Vertices with full out-degree d in the input.
    pub full_degree: VertexSet,
    /// Roots whose input in-degree is below the threshold.
    pub thin_roots: VertexSet,
    pub violated_out: VertexSet,
    pub violated_in: VertexSet,
    pub rounds_used: usize,
    pub resample_log: Vec<ResampledEvent>,
    pub log_truncated: bool,
    pub epd: EpdStatus,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SampleFailure {
    #[error("bad params: {0}")]
    BadParams(String),
    #[error("resample cap hit after {rounds_used} rounds ({violated_out} out-degree and {violated_in} in-degree events open)")]
    CapExceeded {
        rounds_used: usize,
        violated_out: usize,
        violated_in: usize,
    },
}

/// Samples arcs leaving full-degree vertices independently and locally
/// resamples around violated vertices (smallest id first, out-degree
/// events before in-degree events on the same vertex) until the good
/// event holds: every full-degree vertex keeps more than `outdeg_floor`
/// arcs and every thin root keeps in-degree at most 1.
pub fn sample_good_subdigraph(
    b: &BroomDigraph,
    params: &SubsampleParams,
) -> Result<SubsampleState, SampleFailure> {
    params.check()?;
    let d = b.digraph();
    let n = d.id_space();
    let full = b.d();

    let mut is_full = vec![false; n];
    let mut is_thin_root = vec![false; n];
    for v in d.vertices() {
        is_full[v] = d.out_degree(v) == full;
    }
    for r in b.roots().iter() {
        assert!(is_full[r], "roots carry full out-degree");
        is_thin_root[r] = (d.in_degree(r) as f64) < params.indeg_root_threshold;
    }
    for (u, v) in d.arcs() {
        if b.roots().contains(v) {
            assert!(is_full[u], "arcs into the root set leave full-degree vertices");
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(params.rng_seed);
    let mut kept: BTreeSet<(usize, usize)> = BTreeSet::new();
    let mut out_h = vec![0usize; n];
    let mut in_h = vec![0usize; n];
    for (u, v) in d.arcs() {
        let keep = !is_full[u] || rng.gen_bool(params.p_keep);
        if keep {
            kept.insert((u, v));
            out_h[u] += 1;
            in_h[v] += 1;
        }
    }

    let mut violated_out: BTreeSet<usize> = d
        .vertices()
        .filter(|&u| is_full[u] && out_h[u] <= params.outdeg_floor)
        .collect();
    let mut violated_in: BTreeSet<usize> = d
        .vertices()
        .filter(|&w| is_thin_root[w] && in_h[w] >= 2)
        .collect();

    let mut rounds_used = 0;
    let mut resample_log = Vec::new();
    let mut log_truncated = false;
    while !(violated_out.is_empty() && violated_in.is_empty()) {
        if rounds_used == params.resample_cap {
            return Err(SampleFailure::CapExceeded {
                rounds_used,
                violated_out: violated_out.len(),
                violated_in: violated_in.len(),
            });
        }
        let next_out = violated_out.first().copied();
        let next_in = violated_in.first().copied();
        let event = match (next_out, next_in) {
            (Some(u), Some(w)) if w < u => ResampledEvent::InDegreeHigh(w),
            (Some(u), _) => ResampledEvent::OutDegreeLow(u),
            (None, Some(w)) => ResampledEvent::InDegreeHigh(w),
            (None, None) => unreachable!(),
        };
        let redraw: Vec<(usize, usize)> = match event {
            ResampledEvent::OutDegreeLow(u) => {
                d.out_neighbors(u).iter().map(|&v| (u, v)).collect()
            }
            ResampledEvent::InDegreeHigh(w) => {
                d.in_neighbors(w).iter().map(|&u| (u, w)).collect()
            }
        };
        for (u, v) in redraw {
            debug_assert!(is_full[u], "only sampled arcs are redrawn");
            let keep = rng.gen_bool(params.p_keep);
            let had = kept.contains(&(u, v));
            if keep == had {
                continue;
            }
            if keep {
                kept.insert((u, v));
                out_h[u] += 1;
                in_h[v] += 1;
            } else {
                kept.remove(&(u, v));
                out_h[u] -= 1;
                in_h[v] -= 1;
            }
            if out_h[u] <= params.outdeg_floor {
                violated_out.insert(u);
            } else {
                violated_out.remove(&u);
            }
            if is_thin_root[v] {
                if in_h[v] >= 2 {
                    violated_in.insert(v);
                } else {
                    violated_in.remove(&v);
                }
            }
        }
        if resample_log.len() < RESAMPLE_LOG_CAP {
            resample_log.push(event);
        } else {
            log_truncated = true;
        }
        rounds_used += 1;
    }

    let alive: Vec<bool> = (0..n).map(|v| d.is_alive(v)).collect();
    let h = Digraph::assemble(n, alive, &kept);
    for v in d.vertices() {
        if is_full[v] {
            assert!(h.out_degree(v) > params.outdeg_floor, "full-degree vertex fell to the floor");
        } else {
            assert_eq!(h.out_degree(v), d.out_degree(v), "partial-degree vertex lost arcs");
        }
        if is_thin_root[v] {
            assert!(h.in_degree(v) <= 1, "thin root kept in-degree 2");
        }
    }
    assert!(
        h.min_out_degree().unwrap_or(0) >= 1,
        "good sample keeps positive out-degree everywhere",
    );

    let df = full as f64;
    let p_bound = (-df.powf(1.0 / 3.0) / 8.0).exp().max(df.powf(-17.0 / 15.0));
    let epd = std::f64::consts::E * p_bound * df;
    Ok(SubsampleState {
        h,
        full_degree: d.vertices().filter(|&v| is_full[v]).collect(),
        thin_roots: d.vertices().filter(|&v| is_thin_root[v]).collect(),
        violated_out: VertexSet::new(),
        violated_in: VertexSet::new(),
        rounds_used,
        resample_log,
        log_truncated,
        epd: EpdStatus { epd, satisfied: epd <= 1.0 },
    })
}

#[derive(Debug, Clone)]
pub struct LovaszOutput {
    pub brooms: BroomDigraph,
    /// In-degree of each surviving root, counted in the input digraph.
    pub root_in_degrees: BTreeMap<usize, usize>,
    pub state: SubsampleState,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LovaszFailure {
    #[error(transparent)]
    Sample(#[from] SampleFailure),
    #[error("no vertex has in-degree 2 in the sample")]
    NoHighInDegreeRoots,
    #[error("broom extraction below root {root} failed: {source}")]
    Extract { root: usize, source: ExtractError },
    #[error("extension starved below root {root} at leaf {leaf}: {have} of {need} candidates")]
    Starved {
        root: usize,
        leaf: usize,
        have: usize,
        need: usize,
    },
}

/// Runs the sampler, then deterministically extracts a broom digraph whose
/// root set is the vertices that kept in-degree at least 2. Every such
/// root's in-degree in the input digraph meets the threshold.
pub fn lovasz_trick(
    b: &BroomDigraph,
    params: &SubsampleParams,
) -> Result<LovaszOutput, LovaszFailure> {
    let state = sample_good_subdigraph(b, params)?;
    let h = &state.h;
    let n = h.id_space();
    let new_roots: VertexSet = h.vertices().filter(|&v| h.in_degree(v) >= 2).collect();
    if new_roots.is_empty() {
        return Err(LovaszFailure::NoHighInDegreeRoots);
    }
    for r in new_roots.iter() {
        assert!(b.roots().contains(r), "only roots can keep in-degree 2");
        assert!(!state.thin_roots.contains(r), "thin roots never regain in-degree 2");
    }

    let bt = params.broom_target;
    let k = b.k();
    let extraction_degree = k * (bt - 1) + 1;
    let mut claimed = vec![false; n];
    let mut brooms: Vec<Broom> = Vec::new();
    let mut root_in_degrees = BTreeMap::new();
    for r in new_roots.iter() {
        // territory of r: reachable in h while avoiding the other new roots
        let mut queue = VecDeque::from([r]);
        let mut seen = vec![false; n];
        seen[r] = true;
        let mut reached = vec![r];
        while let Some(v) = queue.pop_front() {
            for &w in h.out_neighbors(v) {
                if seen[w] || (new_roots.contains(w) && w != r) {
                    continue;
                }
                seen[w] = true;
                reached.push(w);
                queue.push_back(w);
            }
        }
        let territory: VertexSet = reached.into_iter().collect();
        for v in territory.iter() {
            assert!(!claimed[v], "territories of distinct roots stay disjoint");
            claimed[v] = true;
        }

        // in-degree 1 everywhere off the new root set makes this a tree
        let tree_arcs: BTreeSet<(usize, usize)> = h
            .arcs()
            .filter(|&(u, v)| territory.contains(u) && territory.contains(v) && v != r)
            .collect();
        let mut alive = vec![false; n];
        for v in territory.iter() {
            alive[v] = true;
        }
        let d_r = OutArborescence::new(Digraph::assemble(n, alive, &tree_arcs), r)
            .expect("territory minus the root's in-arcs is an out-arborescence");

        // halt the walk wherever half the sampled out-degree left the territory
        let halting: BTreeSet<usize> = territory
            .iter()
            .filter(|&u| 2 * d_r.digraph().out_degree(u) <= h.out_degree(u))
            .collect();
        let mut kept_arcs: BTreeSet<(usize, usize)> = BTreeSet::new();
        let mut stack = vec![r];
        let mut trunk = vec![r];
        while let Some(u) = stack.pop() {
            if halting.contains(&u) {
                continue;
            }
            for &c in d_r.children(u) {
                kept_arcs.insert((u, c));
                trunk.push(c);
                stack.push(c);
            }
        }
        let trunk: VertexSet = trunk.into_iter().collect();

        let leaves_to_extend: Vec<usize> = if kept_arcs.is_empty() {
            vec![r]
        } else {
            let mut alive = vec![false; n];
            for v in trunk.iter() {
                alive[v] = true;
            }
            let s_r = OutArborescence::new(Digraph::assemble(n, alive, &kept_arcs), r)
                .expect("halted walk keeps an arborescence");
            let s_leaves = s_r.leaves();
            for v in trunk.iter() {
                assert_eq!(
                    halting.contains(&v),
                    s_leaves.contains(v),
                    "halting vertices are exactly the walk's leaves",
                );
            }
            let core = extract_broom(&s_r, k, extraction_degree)
                .map_err(|source| LovaszFailure::Extract { root: r, source })?;
            assert_eq!(core.d(), bt, "extraction quota matches the broom target");
            kept_arcs = core.digraph().arcs().collect();
            core.leaves().iter().collect()
        };

        let mut chosen: BTreeSet<usize> = BTreeSet::new();
        for &leaf in &leaves_to_extend {
            let mut picked = 0;
            for &cand in h.out_neighbors(leaf) {
                if picked == bt {
                    break;
                }
                if cand != r && new_roots.contains(cand) && !chosen.contains(&cand) {
                    chosen.insert(cand);
                    kept_arcs.insert((leaf, cand));
                    picked += 1;
                }
            }
            if picked < bt {
                return Err(LovaszFailure::Starved { root: r, leaf, have: picked, need: bt });
            }
        }

        let mut alive = vec![false; n];
        alive[r] = true;
        for &(u, v) in &kept_arcs {
            alive[u] = true;
            alive[v] = true;
        }
        let host = Digraph::assemble(n, alive, &kept_arcs);
        brooms.push(
            validate_broom(host, r, k, bt).expect("extended broom keeps the target shape"),
        );
        let original = b.digraph().in_degree(r);
        assert!(
            original as f64 >= params.indeg_root_threshold,
            "surviving root misses the in-degree threshold",
        );
        root_in_degrees.insert(r, original);
    }

    let out = reunite(n, new_roots, brooms, k, bt);
    Ok(LovaszOutput { brooms: out, root_in_degrees, state })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::brooms::from_out_regular;
    use crate::fixtures::mixed_height_digraph;

    fn complete(n: usize) -> Digraph {
        let mut arcs = Vec::new();
        for u in 0..n {
            for v in 0..n {
                if u != v {
                    arcs.push((u, v));
                }
            }
        }
        Digraph::build(n, &arcs).unwrap()
    }

    fn params(p_keep: f64, outdeg_floor: usize, seed: u64) -> SubsampleParams {
        SubsampleParams {
            p_keep,
            outdeg_floor,
            indeg_root_threshold: 0.5,
            broom_target: 1,
            resample_cap: 1000,
            rng_seed: seed,
        }
    }

    #[test]
    fn p_one_keeps_everything() {
        let b = from_out_regular(complete(3), 2).unwrap();
        let state = sample_good_subdigraph(&b, &params(1.0, 1, 0)).unwrap();
        let before: BTreeSet<(usize, usize)> = b.digraph().arcs().collect();
        let after: BTreeSet<(usize, usize)> = state.h.arcs().collect();
        assert_eq!(before, after);
        assert_eq!(state.rounds_used, 0);
        assert_eq!(state.full_degree, VertexSet::from([0, 1, 2]));
        assert!(state.thin_roots.is_empty());
        assert!(!state.epd.satisfied);
    }

    #[test]
    fn impossible_floor_hits_the_cap() {
        let b = from_out_regular(complete(3), 2).unwrap();
        let mut p = params(0.5, 2, 1);
        p.resample_cap = 3;
        let err = sample_good_subdigraph(&b, &p).unwrap_err();
        assert_eq!(
            err,
            SampleFailure::CapExceeded { rounds_used: 3, violated_out: 3, violated_in: 0 },
        );
    }

    #[test]
    fn bad_params_are_rejected() {
        let b = from_out_regular(complete(3), 2).unwrap();
        for bad in [
            params(0.0, 1, 0),
            params(1.5, 1, 0),
            SubsampleParams { indeg_root_threshold: 0.0, ..params(0.5, 1, 0) },
            SubsampleParams { broom_target: 0, ..params(0.5, 1, 0) },
            SubsampleParams { resample_cap: 0, ..params(0.5, 1, 0) },
        ] {
            assert!(matches!(
                sample_good_subdigraph(&b, &bad),
                Err(SampleFailure::BadParams(_)),
            ));
        }
    }

    #[test]
    fn same_seed_same_sample() {
        let b = from_out_regular(complete(4), 1).unwrap();
        let one = sample_good_subdigraph(&b, &params(0.5, 0, 9)).unwrap();
        let two = sample_good_subdigraph(&b, &params(0.5, 0, 9)).unwrap();
        let arcs_one: BTreeSet<(usize, usize)> = one.h.arcs().collect();
        let arcs_two: BTreeSet<(usize, usize)> = two.h.arcs().collect();
        assert_eq!(arcs_one, arcs_two);
        assert_eq!(one.rounds_used, two.rounds_used);
        assert_eq!(one.resample_log, two.resample_log);
    }

    #[test]
    fn resample_log_names_the_redrawn_vertex() {
        let b = from_out_regular(complete(4), 1).unwrap();
        let state = sample_good_subdigraph(&b, &params(0.3, 1, 5)).unwrap();
        assert_eq!(state.rounds_used, state.resample_log.len());
        for ev in &state.resample_log {
            match ev {
                ResampledEvent::OutDegreeLow(v) => assert!(*v < 4),
                ResampledEvent::InDegreeHigh(_) => panic!("no thin roots in this instance"),
            }
        }
    }

    #[test]
    fn lovasz_on_complete_four_gives_stars() {
        let b = from_out_regular(complete(4), 1).unwrap();
        let mut p = params(1.0, 1, 0);
        p.indeg_root_threshold = 2.0;
        let out = lovasz_trick(&b, &p).unwrap();
        let arcs: BTreeSet<(usize, usize)> = out.brooms.digraph().arcs().collect();
        assert_eq!(arcs, BTreeSet::from([(0, 1), (1, 0), (2, 0), (3, 0)]));
        assert_eq!(out.brooms.roots(), &VertexSet::from([0, 1, 2, 3]));
        assert_eq!((out.brooms.k(), out.brooms.d()), (1, 1));
        let expected: BTreeMap<usize, usize> = (0..4).map(|v| (v, 3)).collect();
        assert_eq!(out.root_in_degrees, expected);
    }

    #[test]
    fn cycle_has_no_high_in_degree_roots() {
        let cycle = Digraph::build(3, &[(0, 1), (1, 2), (2, 0)]).unwrap();
        let b = from_out_regular(cycle, 1).unwrap();
        let err = lovasz_trick(&b, &params(1.0, 0, 0)).unwrap_err();
        assert_eq!(err, LovaszFailure::NoHighInDegreeRoots);
    }

    #[test]
    fn lovasz_on_mixed_heights_matches_hand_trace() {
        let b = mixed_height_digraph();
        let mut p = params(1.0, 1, 0);
        p.indeg_root_threshold = 1.5;
        let out = lovasz_trick(&b, &p).unwrap();
        assert_eq!(out.state.rounds_used, 0);
        let arcs: BTreeSet<(usize, usize)> = out.brooms.digraph().arcs().collect();
        assert_eq!(
            arcs,
            BTreeSet::from([(0, 3), (3, 1), (1, 0), (2, 5), (5, 0), (6, 2)]),
        );
        assert_eq!(out.brooms.roots(), &VertexSet::from([0, 1, 2, 5, 6]));
        assert_eq!((out.brooms.k(), out.brooms.d()), (2, 1));
        let expected: BTreeMap<usize, usize> =
            [(0, 2), (1, 2), (2, 3), (5, 3), (6, 2)].into_iter().collect();
        assert_eq!(out.root_in_degrees, expected);
    }

    #[test]
    fn paper_defaults_match_closed_forms() {
        let p = SubsampleParams::paper_defaults(64, 2, 7);
        assert!((p.p_keep - 1.0 / 16.0).abs() < 1e-12);
        assert_eq!(p.outdeg_floor, 2);
        assert!((p.indeg_root_threshold - 64f64.powf(0.1)).abs() < 1e-12);
        // 64^(1/14) rounds down to 1: brooms degrade to paths at this scale
        assert_eq!(p.broom_target, 1);
        assert_eq!(p.rng_seed, 7);
    }
}
