//! Python bindings for the groundtree workbench.
//!
//! Trees and hosts travel as [`Digraph`] values; broom certificates and
//! subsample schedules travel as JSON strings in the same schema the CLI
//! reads and writes, so files produced by one side load on the other.

use std::collections::BTreeMap;

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use groundtree::io::{CertificateJson, DigraphJson, ScheduleJson};
use groundtree::{
    brute_embed, check_proper, constructive_embed, extract_broom, from_out_regular, gen_broom,
    gen_broom_digraph, gen_favorable, gen_favorable_for, gen_grounded_tree, gen_out_regular,
    grounded_profile, heuristic_embed, lovasz_trick, make_typed, trim_out_regular, validate_broom,
    validate_broom_digraph, Broom, BroomDigraph, Digraph, EmbedStrictness, Embedding,
    OrientedTree, OutArborescence, SearchBudget, SubsampleParams, VertexSet,
};

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn as_tree(g: &PyDigraph) -> PyResult<OrientedTree> {
    OrientedTree::new(g.inner.clone()).map_err(value_err)
}

fn as_arborescence(g: &PyDigraph) -> PyResult<OutArborescence> {
    let root = g
        .inner
        .vertices()
        .find(|&v| g.inner.in_degree(v) == 0)
        .ok_or_else(|| value_err("digraph has no in-degree-0 root"))?;
    OutArborescence::new(g.inner.clone(), root).map_err(value_err)
}

/// Digraph on a fixed id space with a liveness mask. Self-loops are
/// rejected; parallel arcs collapse.
#[pyclass(name = "Digraph", frozen)]
#[derive(Clone)]
struct PyDigraph {
    inner: Digraph,
}

impl PyDigraph {
    fn wrap(inner: Digraph) -> Self {
        PyDigraph { inner }
    }

    fn check_alive(&self, v: usize) -> PyResult<()> {
        if v < self.inner.id_space() && self.inner.is_alive(v) {
            Ok(())
        } else {
            Err(value_err(format!("vertex {v} is not alive")))
        }
    }
}

#[pymethods]
impl PyDigraph {
    #[new]
    fn new(n: usize, arcs: Vec<(usize, usize)>) -> PyResult<Self> {
        Digraph::build(n, &arcs).map(Self::wrap).map_err(value_err)
    }

    /// Size of the id space, including deleted vertices.
    #[getter]
    fn n(&self) -> usize {
        self.inner.id_space()
    }

    fn vertices(&self) -> Vec<usize> {
        self.inner.vertices().collect()
    }

    fn arcs(&self) -> Vec<(usize, usize)> {
        self.inner.arcs().collect()
    }

    fn is_alive(&self, v: usize) -> bool {
        v < self.inner.id_space() && self.inner.is_alive(v)
    }

    fn has_arc(&self, a: usize, b: usize) -> bool {
        a < self.inner.id_space() && b < self.inner.id_space() && self.inner.has_arc(a, b)
    }

    fn out_degree(&self, v: usize) -> PyResult<usize> {
        self.check_alive(v)?;
        Ok(self.inner.out_degree(v))
    }

    fn in_degree(&self, v: usize) -> PyResult<usize> {
        self.check_alive(v)?;
        Ok(self.inner.in_degree(v))
    }

    fn out_neighbors(&self, v: usize) -> PyResult<Vec<usize>> {
        self.check_alive(v)?;
        Ok(self.inner.out_neighbors(v).to_vec())
    }

    fn in_neighbors(&self, v: usize) -> PyResult<Vec<usize>> {
        self.check_alive(v)?;
        Ok(self.inner.in_neighbors(v).to_vec())
    }

    fn reverse(&self) -> Self {
        Self::wrap(self.inner.reverse())
    }

    fn delete_vertices(&self, xs: Vec<usize>) -> Self {
        let set: VertexSet = xs.into_iter().filter(|&v| self.is_alive(v)).collect();
        Self::wrap(self.inner.delete_vertices(&set))
    }

    fn delete_arcs(&self, arcs: Vec<(usize, usize)>) -> Self {
        Self::wrap(self.inner.delete_arcs(&arcs))
    }

    fn to_json(&self) -> String {
        serde_json::to_string(&DigraphJson::capture(&self.inner, None))
            .expect("digraph serialization is infallible")
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let json: DigraphJson = serde_json::from_str(text).map_err(value_err)?;
        json.digraph().map(Self::wrap).map_err(value_err)
    }

    fn __len__(&self) -> usize {
        self.inner.vertex_count()
    }

    fn __repr__(&self) -> String {
        format!(
            "Digraph(n={}, vertices={}, arcs={})",
            self.inner.id_space(),
            self.inner.vertex_count(),
            self.inner.arcs().count()
        )
    }
}

/// Validated broom: a rooted out-arborescence whose shape and degrees were
/// checked on construction.
#[pyclass(name = "Broom", frozen)]
struct PyBroom {
    inner: Broom,
}

#[pymethods]
impl PyBroom {
    #[getter]
    fn root(&self) -> usize {
        self.inner.root()
    }

    #[getter]
    fn k(&self) -> usize {
        self.inner.k()
    }

    #[getter]
    fn d(&self) -> usize {
        self.inner.d()
    }

    #[getter]
    fn ell(&self) -> usize {
        self.inner.ell()
    }

    fn digraph(&self) -> PyDigraph {
        PyDigraph::wrap(self.inner.digraph().clone())
    }

    fn leaves(&self) -> Vec<usize> {
        self.inner.leaves().iter().collect()
    }

    fn subdivision_vertices(&self) -> Vec<usize> {
        self.inner.subdivision_vertices().iter().collect()
    }

    fn __repr__(&self) -> String {
        format!(
            "Broom(root={}, k={}, d={}, ell={})",
            self.inner.root(),
            self.inner.k(),
            self.inner.d(),
            self.inner.ell()
        )
    }
}

/// Validated broom digraph: arc-disjoint brooms covering the host, one per
/// root, with certified shapes.
#[pyclass(name = "BroomHost", frozen)]
#[derive(Clone)]
struct PyBroomHost {
    inner: BroomDigraph,
}

#[pymethods]
impl PyBroomHost {
    #[getter]
    fn k(&self) -> usize {
        self.inner.k()
    }

    #[getter]
    fn d(&self) -> usize {
        self.inner.d()
    }

    fn roots(&self) -> Vec<usize> {
        self.inner.roots().iter().collect()
    }

    fn digraph(&self) -> PyDigraph {
        PyDigraph::wrap(self.inner.digraph().clone())
    }

    fn certificate_json(&self) -> String {
        serde_json::to_string(&self.inner.to_certificate())
            .expect("certificate serialization is infallible")
    }

    /// Walk from a source vertex down to its broom root.
    fn source_path(&self, v: usize) -> PyResult<Vec<usize>> {
        self.inner
            .source_path(v)
            .map(|w| w.verts().to_vec())
            .map_err(value_err)
    }

    fn __repr__(&self) -> String {
        format!(
            "BroomHost(k={}, d={}, roots={})",
            self.inner.k(),
            self.inner.d(),
            self.inner.roots().len()
        )
    }
}

/// Classify a digraph: oriented tree or not, and if so its grounded
/// profile with normalized heights.
#[pyfunction]
fn recognize<'py>(py: Python<'py>, g: &PyDigraph) -> PyResult<Bound<'py, PyDict>> {
    let out = PyDict::new_bound(py);
    match OrientedTree::new(g.inner.clone()) {
        Err(e) => {
            out.set_item("oriented_tree", false)?;
            out.set_item("reason", e.to_string())?;
        }
        Ok(t) => {
            let p = grounded_profile(&t);
            out.set_item("oriented_tree", true)?;
            out.set_item("grounded", p.grounded)?;
            out.set_item("max_grounded", p.max_grounded)?;
            out.set_item("g", p.g.iter().collect::<Vec<_>>())?;
            out.set_item("z", p.z.iter().collect::<Vec<_>>())?;
            out.set_item(
                "heights",
                p.normalized_height.iter().collect::<BTreeMap<_, _>>(),
            )?;
        }
    }
    Ok(out)
}

#[pyfunction]
#[pyo3(name = "gen_out_regular", signature = (n, d, seed = 0))]
fn py_gen_out_regular(n: usize, d: usize, seed: u64) -> PyResult<PyDigraph> {
    gen_out_regular(n, d, seed).map(PyDigraph::wrap).map_err(value_err)
}

#[pyfunction]
#[pyo3(name = "gen_grounded_tree", signature = (order, seed = 0, require_max = false))]
fn py_gen_grounded_tree(order: usize, seed: u64, require_max: bool) -> PyResult<PyDigraph> {
    gen_grounded_tree(order, seed, require_max)
        .map(|t| PyDigraph::wrap(t.digraph().clone()))
        .map_err(value_err)
}

#[pyfunction]
#[pyo3(name = "gen_broom", signature = (k, d, ell, seed = 0))]
fn py_gen_broom(k: usize, d: usize, ell: usize, seed: u64) -> PyResult<PyBroom> {
    gen_broom(k, d, ell, seed).map(|inner| PyBroom { inner }).map_err(value_err)
}

#[pyfunction]
#[pyo3(name = "gen_broom_digraph", signature = (k, d, n_roots, seed = 0))]
fn py_gen_broom_digraph(k: usize, d: usize, n_roots: usize, seed: u64) -> PyResult<PyBroomHost> {
    gen_broom_digraph(k, d, n_roots, seed)
        .map(|inner| PyBroomHost { inner })
        .map_err(value_err)
}

/// Split an out-regular digraph into height-k brooms, one per vertex.
#[pyfunction]
#[pyo3(name = "from_out_regular")]
fn py_from_out_regular(g: &PyDigraph, k: usize) -> PyResult<PyBroomHost> {
    from_out_regular(g.inner.clone(), k)
        .map(|inner| PyBroomHost { inner })
        .map_err(value_err)
}

/// Delete arcs until every vertex has out-degree exactly d or 0.
#[pyfunction]
#[pyo3(name = "trim_out_regular")]
fn py_trim_out_regular(g: &PyDigraph, d: usize) -> PyResult<PyDigraph> {
    trim_out_regular(&g.inner, d).map(PyDigraph::wrap).map_err(value_err)
}

/// Check a claimed (k, d)-broom rooted at `root`; raises with the violation
/// when the shape fails.
#[pyfunction]
#[pyo3(name = "validate_broom")]
fn py_validate_broom(g: &PyDigraph, root: usize, k: usize, d: usize) -> PyResult<PyBroom> {
    validate_broom(g.inner.clone(), root, k, d)
        .map(|inner| PyBroom { inner })
        .map_err(value_err)
}

/// Check a claimed broom digraph against its certificate (JSON, same schema
/// as the CLI); raises with the violation when the cover fails.
#[pyfunction]
#[pyo3(name = "validate_broom_host")]
fn py_validate_broom_host(
    g: &PyDigraph,
    certificate_json: &str,
    k: usize,
    d: usize,
) -> PyResult<PyBroomHost> {
    let cert: CertificateJson = serde_json::from_str(certificate_json).map_err(value_err)?;
    let roots: VertexSet = cert.roots.iter().copied().collect();
    validate_broom_digraph(g.inner.clone(), roots, &cert, k, d)
        .map(|inner| PyBroomHost { inner })
        .map_err(value_err)
}

/// Pull a (k-1, ceil(d/k))-broom out of a d-ary tree of out-degree-d
/// branchings.
#[pyfunction]
#[pyo3(name = "extract_broom")]
fn py_extract_broom(tree: &PyDigraph, k: usize, d: usize) -> PyResult<PyBroom> {
    let arbo = as_arborescence(tree)?;
    extract_broom(&arbo, k, d).map(|inner| PyBroom { inner }).map_err(value_err)
}

/// Rebuild a broom digraph so every root's walk bundle is t-typed.
#[pyfunction]
#[pyo3(name = "make_typed")]
fn py_make_typed(host: &PyBroomHost, t: usize) -> PyResult<PyBroomHost> {
    make_typed(&host.inner, t).map(|inner| PyBroomHost { inner }).map_err(value_err)
}

fn subsample_overrides(
    base: SubsampleParams,
    p_keep: Option<f64>,
    outdeg_floor: Option<usize>,
    indeg_root_threshold: Option<f64>,
    broom_target: Option<usize>,
    resample_cap: Option<usize>,
) -> SubsampleParams {
    SubsampleParams {
        p_keep: p_keep.unwrap_or(base.p_keep),
        outdeg_floor: outdeg_floor.unwrap_or(base.outdeg_floor),
        indeg_root_threshold: indeg_root_threshold.unwrap_or(base.indeg_root_threshold),
        broom_target: broom_target.unwrap_or(base.broom_target),
        resample_cap: resample_cap.unwrap_or(base.resample_cap),
        ..base
    }
}

/// Resample a sparse subdigraph of the host and regrow brooms from the
/// surviving high-in-degree roots. Parameters default to the host's (d, k)
/// defaults; pass fields to override.
#[pyfunction]
#[pyo3(name = "lovasz_trick", signature = (
    host,
    seed = 0,
    p_keep = None,
    outdeg_floor = None,
    indeg_root_threshold = None,
    broom_target = None,
    resample_cap = None,
))]
fn py_lovasz_trick<'py>(
    py: Python<'py>,
    host: &PyBroomHost,
    seed: u64,
    p_keep: Option<f64>,
    outdeg_floor: Option<usize>,
    indeg_root_threshold: Option<f64>,
    broom_target: Option<usize>,
    resample_cap: Option<usize>,
) -> PyResult<Bound<'py, PyDict>> {
    let base = SubsampleParams::paper_defaults(host.inner.d(), host.inner.k(), seed);
    let params = subsample_overrides(
        base,
        p_keep,
        outdeg_floor,
        indeg_root_threshold,
        broom_target,
        resample_cap,
    );
    let out = lovasz_trick(&host.inner, &params).map_err(value_err)?;
    let dict = PyDict::new_bound(py);
    dict.set_item("host", PyBroomHost { inner: out.brooms }.into_py(py))?;
    dict.set_item("root_in_degrees", out.root_in_degrees)?;
    dict.set_item("subdigraph", PyDigraph::wrap(out.state.h).into_py(py))?;
    Ok(dict)
}

fn embedding_map(e: &Embedding) -> BTreeMap<usize, usize> {
    e.map.clone()
}

/// Exhaustive embedding search; hosts above 14 vertices are rejected.
/// Returns the vertex map, or None when no copy exists.
#[pyfunction]
#[pyo3(name = "brute_embed")]
fn py_brute_embed(
    host: &PyDigraph,
    tree: &PyDigraph,
) -> PyResult<Option<BTreeMap<usize, usize>>> {
    let t = as_tree(tree)?;
    brute_embed(&host.inner, &t, None)
        .map(|found| found.as_ref().map(embedding_map))
        .map_err(value_err)
}

/// Randomized anchored search. `definitive` reports whether an absent
/// verdict is exhaustive.
#[pyfunction]
#[pyo3(name = "heuristic_embed", signature = (host, tree, restarts = 24, nodes_per_restart = 250_000, seed = 0))]
fn py_heuristic_embed<'py>(
    py: Python<'py>,
    host: &PyDigraph,
    tree: &PyDigraph,
    restarts: usize,
    nodes_per_restart: u64,
    seed: u64,
) -> PyResult<Bound<'py, PyDict>> {
    let t = as_tree(tree)?;
    let budget = SearchBudget { restarts, nodes_per_restart, seed };
    let out = heuristic_embed(&host.inner, &t, &budget).map_err(value_err)?;
    let dict = PyDict::new_bound(py);
    dict.set_item("found", out.embedding.is_some())?;
    dict.set_item("map", out.embedding.as_ref().map(embedding_map))?;
    dict.set_item("definitive", out.definitive)?;
    dict.set_item("restarts_used", out.stats.restarts_used)?;
    dict.set_item("nodes_expanded", out.stats.nodes_expanded)?;
    Ok(dict)
}

/// Level-by-level embedding into a broom digraph. Pass a schedule (JSON,
/// same schema as the CLI) for the parametric mode, or none for the strict
/// theorem-scale preconditions. Returns the map, the per-level trace, and
/// an independent properness verdict.
#[pyfunction]
#[pyo3(name = "constructive_embed", signature = (host, tree, schedule_json = None))]
fn py_constructive_embed<'py>(
    py: Python<'py>,
    host: &PyBroomHost,
    tree: &PyDigraph,
    schedule_json: Option<&str>,
) -> PyResult<Bound<'py, PyDict>> {
    let t = as_tree(tree)?;
    let strictness = match schedule_json {
        None => EmbedStrictness::Strict,
        Some(text) => {
            let json: ScheduleJson = serde_json::from_str(text).map_err(value_err)?;
            EmbedStrictness::Parametric { schedule: json.schedule() }
        }
    };
    let out = constructive_embed(&host.inner, &t, &strictness).map_err(value_err)?;
    let report = check_proper(&out.witness);
    let dict = PyDict::new_bound(py);
    dict.set_item("map", embedding_map(&out.witness.embedding))?;
    dict.set_item(
        "cases",
        out.trace.iter().map(|l| l.case.to_string()).collect::<Vec<_>>(),
    )?;
    dict.set_item("proper", report.ok)?;
    Ok(dict)
}

/// Curated favorable instances: named (tree, host, schedule) bundles whose
/// parametric runs exercise each extension case.
#[pyfunction]
fn favorable_catalog(py: Python<'_>) -> PyResult<Vec<Bound<'_, PyDict>>> {
    gen_favorable().iter().map(|inst| favorable_dict(py, inst)).collect()
}

/// Favorable bundle for one max-grounded tree, looked up from the catalog.
#[pyfunction]
fn favorable_for<'py>(py: Python<'py>, tree: &PyDigraph) -> PyResult<Bound<'py, PyDict>> {
    let t = as_tree(tree)?;
    let inst = gen_favorable_for(&t).map_err(value_err)?;
    favorable_dict(py, &inst)
}

fn favorable_dict<'py>(
    py: Python<'py>,
    inst: &groundtree::FavorableInstance,
) -> PyResult<Bound<'py, PyDict>> {
    let dict = PyDict::new_bound(py);
    dict.set_item("name", inst.name)?;
    dict.set_item("tree", PyDigraph::wrap(inst.tree.digraph().clone()).into_py(py))?;
    dict.set_item("host", PyBroomHost { inner: inst.host.clone() }.into_py(py))?;
    dict.set_item(
        "schedule_json",
        serde_json::to_string(&ScheduleJson::capture(&inst.schedule))
            .expect("schedule serialization is infallible"),
    )?;
    dict.set_item(
        "expect_cases",
        inst.expect_cases.iter().map(|c| c.to_string()).collect::<Vec<_>>(),
    )?;
    Ok(dict)
}


#[pymodule]
fn groundtree_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyDigraph>()?;
    m.add_class::<PyBroom>()?;
    m.add_class::<PyBroomHost>()?;
    m.add_function(wrap_pyfunction!(recognize, m)?)?;
    m.add_function(wrap_pyfunction!(py_gen_out_regular, m)?)?;
    m.add_function(wrap_pyfunction!(py_gen_grounded_tree, m)?)?;
    m.add_function(wrap_pyfunction!(py_gen_broom, m)?)?;
    m.add_function(wrap_pyfunction!(py_gen_broom_digraph, m)?)?;
    m.add_function(wrap_pyfunction!(py_from_out_regular, m)?)?;
    m.add_function(wrap_pyfunction!(py_trim_out_regular, m)?)?;
    m.add_function(wrap_pyfunction!(py_validate_broom, m)?)?;
    m.add_function(wrap_pyfunction!(py_validate_broom_host, m)?)?;
    m.add_function(wrap_pyfunction!(py_extract_broom, m)?)?;
    m.add_function(wrap_pyfunction!(py_make_typed, m)?)?;
    m.add_function(wrap_pyfunction!(py_lovasz_trick, m)?)?;
    m.add_function(wrap_pyfunction!(py_brute_embed, m)?)?;
    m.add_function(wrap_pyfunction!(py_heuristic_embed, m)?)?;
    m.add_function(wrap_pyfunction!(py_constructive_embed, m)?)?;
    m.add_function(wrap_pyfunction!(favorable_catalog, m)?)?;
    m.add_function(wrap_pyfunction!(favorable_for, m)?)?;
    Ok(())
}
