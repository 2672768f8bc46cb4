//! Brute-force oracles shared by the integration suites. Everything here
//! re-derives shapes and properties from raw arc lists with its own
//! mechanics, so agreement with the library's validators is evidence, not
//! circularity.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use groundtree::io::CertificateJson;
use groundtree::{Digraph, ProperCopyWitness};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Arborescence test by in-degree recount and reachability, nothing shared
/// with `OutArborescence::new`.
pub fn slow_arborescence(g: &Digraph, root: usize) -> bool {
    if !g.is_alive(root) {
        return false;
    }
    let mut indeg: BTreeMap<usize, usize> = g.vertices().map(|v| (v, 0)).collect();
    for (_, v) in g.arcs() {
        *indeg.get_mut(&v).expect("arc heads are live") += 1;
    }
    if indeg[&root] != 0 || indeg.iter().any(|(&v, &deg)| v != root && deg != 1) {
        return false;
    }
    let mut seen = BTreeSet::from([root]);
    let mut queue = VecDeque::from([root]);
    while let Some(u) = queue.pop_front() {
        for &w in g.out_neighbors(u) {
            if seen.insert(w) {
                queue.push_back(w);
            }
        }
    }
    seen.len() == g.vertex_count()
}

fn root_to_leaf_paths(g: &Digraph, root: usize) -> Vec<Vec<usize>> {
    let mut paths = Vec::new();
    let mut stack = vec![vec![root]];
    while let Some(path) = stack.pop() {
        let last = *path.last().unwrap();
        if g.out_degree(last) == 0 {
            paths.push(path);
            continue;
        }
        for &c in g.out_neighbors(last) {
            let mut next = path.clone();
            next.push(c);
            stack.push(next);
        }
    }
    paths
}

/// Shape-class membership by enumerating every root-to-leaf path.
pub fn slow_broom_shape(g: &Digraph, root: usize, k: usize, d: usize) -> bool {
    if k == 0 || !slow_arborescence(g, root) || g.vertex_count() == 1 {
        return false;
    }
    let paths = root_to_leaf_paths(g, root);
    let depths: Vec<usize> = paths.iter().map(|p| p.len() - 1).collect();
    let max_depth = *depths.iter().max().unwrap();

    if max_depth <= k {
        return depths.iter().all(|&x| x == max_depth)
            && g.vertices().filter(|&v| g.out_degree(v) > 0).all(|v| g.out_degree(v) == d);
    }
    if d == 1 {
        // a bare path with its handle absorbing the extra length
        return g.vertices().all(|v| g.out_degree(v) <= 1) && paths.len() == 1;
    }
    if g.out_degree(root) != d {
        return false;
    }
    for p in &paths {
        let Some(branch) = (1..p.len()).find(|&i| g.out_degree(p[i]) != 1) else {
            return false;
        };
        if g.out_degree(p[branch]) != d || p.len() - 1 - branch != k {
            return false;
        }
        if ((branch + 1)..p.len() - 1).any(|j| g.out_degree(p[j]) != d) {
            return false;
        }
    }
    true
}

/// Broom-digraph membership from the certificate alone: a bijection of
/// roots to brooms, each passing the slow shape test, leaves landing on
/// roots, internals exclusive, and the arc union exact.
pub fn slow_broom_digraph_shape(g: &Digraph, cert: &CertificateJson, k: usize, d: usize) -> bool {
    let roots: BTreeSet<usize> = cert.roots.iter().copied().collect();
    if roots.is_empty() || !roots.iter().all(|&r| g.is_alive(r)) {
        return false;
    }
    let mut by_root = BTreeMap::new();
    for b in &cert.brooms {
        if by_root.insert(b.root, &b.arcs).is_some() {
            return false;
        }
    }
    if by_root.keys().copied().collect::<BTreeSet<usize>>() != roots {
        return false;
    }
    let g_arcs: BTreeSet<(usize, usize)> = g.arcs().collect();
    let mut union_arcs: BTreeSet<(usize, usize)> = BTreeSet::new();
    let mut internal_owner: BTreeMap<usize, usize> = BTreeMap::new();
    let mut covered: BTreeSet<usize> = BTreeSet::new();
    for (&r, arcs) in &by_root {
        let mut alive = vec![false; g.id_space()];
        let arc_set: BTreeSet<(usize, usize)> = arcs.iter().copied().collect();
        for &(u, v) in arcs.iter() {
            if u >= g.id_space() || v >= g.id_space() || u == v {
                return false;
            }
            alive[u] = true;
            alive[v] = true;
        }
        let bd = Digraph::assemble(g.id_space(), alive, &arc_set);
        if !slow_broom_shape(&bd, r, k, d) {
            return false;
        }
        for &(u, v) in arcs.iter() {
            if !g_arcs.contains(&(u, v)) {
                return false;
            }
            union_arcs.insert((u, v));
        }
        for v in bd.vertices() {
            covered.insert(v);
            if bd.out_degree(v) == 0 {
                if !roots.contains(&v) {
                    return false;
                }
            } else if v != r {
                if roots.contains(&v) || internal_owner.insert(v, r).is_some() {
                    return false;
                }
            }
        }
    }
    union_arcs == g_arcs && g.vertices().all(|v| covered.contains(&v))
}

fn digraphs_equal(a: &Digraph, b: &Digraph) -> bool {
    a.id_space() == b.id_space()
        && a.vertex_set().as_slice() == b.vertex_set().as_slice()
        && a.arcs().collect::<BTreeSet<_>>() == b.arcs().collect::<BTreeSet<_>>()
}

/// Heights from scratch: anchor the smallest vertex, propagate the +1 rule
/// over undirected edges, shift the maximum to zero.
fn slow_heights(t: &Digraph) -> BTreeMap<usize, i64> {
    let root = t.vertices().next().expect("trees are nonempty");
    let mut h = BTreeMap::from([(root, 0i64)]);
    let mut queue = VecDeque::from([root]);
    while let Some(u) = queue.pop_front() {
        let hu = h[&u];
        for &w in t.out_neighbors(u) {
            if !h.contains_key(&w) {
                h.insert(w, hu + 1);
                queue.push_back(w);
            }
        }
        for &w in t.in_neighbors(u) {
            if !h.contains_key(&w) {
                h.insert(w, hu - 1);
                queue.push_back(w);
            }
        }
    }
    let max = *h.values().max().unwrap();
    for v in h.values_mut() {
        *v -= max;
    }
    h
}

/// Walks up certificate parent pointers to find the path from the owning
/// broom's root down to `v`. Roots own themselves with a trivial path.
fn slow_source_path(cert: &CertificateJson, v: usize) -> Option<Vec<usize>> {
    let roots: BTreeSet<usize> = cert.roots.iter().copied().collect();
    if roots.contains(&v) {
        return Some(vec![v]);
    }
    for b in &cert.brooms {
        let parent: BTreeMap<usize, usize> = b.arcs.iter().map(|&(u, w)| (w, u)).collect();
        let in_broom = parent.contains_key(&v) || b.arcs.iter().any(|&(u, _)| u == v);
        let is_leaf_here = parent.contains_key(&v) && !b.arcs.iter().any(|&(u, _)| u == v);
        if !in_broom || is_leaf_here {
            continue;
        }
        let mut path = vec![v];
        let mut cur = v;
        while cur != b.root {
            cur = *parent.get(&cur)?;
            path.push(cur);
        }
        path.reverse();
        return Some(path);
    }
    None
}

/// Properness from first principles: map validity, host identity, heights,
/// certificate-derived source paths, disjointness, and copy avoidance.
pub fn slow_proper(w: &ProperCopyWitness) -> bool {
    let td = w.embedding.tree.digraph();
    let map = &w.embedding.map;
    let host = w.broom_host.digraph();
    if !digraphs_equal(&w.embedding.host, host) {
        return false;
    }
    let tree_verts: BTreeSet<usize> = td.vertices().collect();
    if map.keys().copied().collect::<BTreeSet<usize>>() != tree_verts {
        return false;
    }
    let images: BTreeSet<usize> = map.values().copied().collect();
    if images.len() != map.len() || !images.iter().all(|&i| host.is_alive(i)) {
        return false;
    }
    if td.arcs().any(|(u, v)| !host.has_arc(map[&u], map[&v])) {
        return false;
    }
    let roots: BTreeSet<usize> = w.broom_host.roots().iter().collect();
    let heights = slow_heights(td);
    if heights.iter().any(|(v, &hv)| hv == 0 && !roots.contains(&map[v])) {
        return false;
    }
    let cert = w.broom_host.to_certificate();
    let mut indeg: BTreeMap<usize, usize> = td.vertices().map(|v| (v, 0)).collect();
    for (_, v) in td.arcs() {
        *indeg.get_mut(&v).unwrap() += 1;
    }
    let source_images: BTreeSet<usize> =
        indeg.iter().filter(|&(_, &deg)| deg == 0).map(|(&v, _)| map[&v]).collect();
    let non_source_images: BTreeSet<usize> =
        indeg.iter().filter(|&(_, &deg)| deg > 0).map(|(&v, _)| map[&v]).collect();
    if w.source_paths.keys().any(|img| !source_images.contains(img)) {
        return false;
    }
    let mut derived: Vec<(usize, Vec<usize>)> = Vec::new();
    for &img in &source_images {
        let Some(path) = slow_source_path(&cert, img) else {
            return false;
        };
        match w.source_paths.get(&img) {
            Some(stored) if stored.verts() == path.as_slice() => {}
            _ => return false,
        }
        derived.push((img, path));
    }
    for (i, (_, pa)) in derived.iter().enumerate() {
        let set_a: BTreeSet<usize> = pa.iter().copied().collect();
        for (_, pb) in derived.iter().skip(i + 1) {
            if pb.iter().any(|v| set_a.contains(v)) {
                return false;
            }
        }
        if pa.iter().any(|v| non_source_images.contains(v)) {
            return false;
        }
    }
    true
}

/// One random single-arc edit: add a missing arc, drop one, or move one
/// arc's head. Never introduces loops or duplicates, so the result always
/// builds.
pub fn mutate_one_arc(
    id_space: usize,
    arcs: &[(usize, usize)],
    rng: &mut ChaCha8Rng,
) -> Vec<(usize, usize)> {
    let present: BTreeSet<(usize, usize)> = arcs.iter().copied().collect();
    let mut out: Vec<(usize, usize)> = arcs.to_vec();
    for _ in 0..200 {
        match rng.gen_range(0..3u8) {
            0 => {
                let u = rng.gen_range(0..id_space);
                let v = rng.gen_range(0..id_space);
                if u != v && !present.contains(&(u, v)) {
                    out.push((u, v));
                    return out;
                }
            }
            1 if !out.is_empty() => {
                let i = rng.gen_range(0..out.len());
                out.swap_remove(i);
                return out;
            }
            2 if !out.is_empty() => {
                let i = rng.gen_range(0..out.len());
                let (u, _) = out[i];
                let w = rng.gen_range(0..id_space);
                if w != u && !present.contains(&(u, w)) {
                    out[i] = (u, w);
                    return out;
                }
            }
            _ => {}
        }
    }
    out
}
