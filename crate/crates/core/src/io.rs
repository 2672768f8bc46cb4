//! JSON exchange formats.
//!
//! Digraphs travel as `{"n": .., "arcs": [[u, v], ..]}` with an optional
//! `"roots"` list. Broom certificates, embeddings, and subsampling schedules
//! each have their own small record type. All lists are emitted in ascending
//! order so equal objects serialize identically.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::digraph::{Digraph, GraphError, VertexSet};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("graph: {0}")]
    Graph(#[from] GraphError),
    #[error("io: {0}")]
    File(#[from] std::io::Error),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DigraphJson {
    pub n: usize,
    pub arcs: Vec<(usize, usize)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub roots: Option<Vec<usize>>,
}

impl DigraphJson {
    pub fn capture(d: &Digraph, roots: Option<&VertexSet>) -> Self {
        DigraphJson {
            n: d.id_space(),
            arcs: d.arcs().collect(),
            roots: roots.map(|r| r.iter().collect()),
        }
    }

    pub fn digraph(&self) -> Result<Digraph, GraphError> {
        Digraph::build(self.n, &self.arcs)
    }

    pub fn root_set(&self) -> Option<VertexSet> {
        self.roots.as_ref().map(|r| r.iter().copied().collect())
    }
}

/// One broom of a certificate: its root and its arcs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BroomJson {
    pub root: usize,
    pub arcs: Vec<(usize, usize)>,
}

/// Broom-digraph certificate: the root set and one entry per broom.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CertificateJson {
    pub roots: Vec<usize>,
    pub brooms: Vec<BroomJson>,
}

/// Result of an embedding run. `map` is keyed by tree vertex;
/// `source_paths` by the host image of each tree source.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EmbeddingJson {
    pub map: std::collections::BTreeMap<usize, usize>,
    pub proper: bool,
    #[serde(default, skip_serializing_if = "std::collections::BTreeMap::is_empty")]
    pub source_paths: std::collections::BTreeMap<usize, Vec<usize>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScheduleLevelJson {
    pub p_keep: f64,
    pub outdeg_floor: usize,
    pub indeg_root_threshold: f64,
    pub broom_target: usize,
    pub resample_cap: usize,
    #[serde(default)]
    pub rng_seed: u64,
    pub target_degree: usize,
}

impl ScheduleLevelJson {
    pub fn capture(p: &crate::embed::LevelParams) -> Self {
        ScheduleLevelJson {
            p_keep: p.subsample.p_keep,
            outdeg_floor: p.subsample.outdeg_floor,
            indeg_root_threshold: p.subsample.indeg_root_threshold,
            broom_target: p.subsample.broom_target,
            resample_cap: p.subsample.resample_cap,
            rng_seed: p.subsample.rng_seed,
            target_degree: p.target_degree,
        }
    }

    pub fn level_params(&self) -> crate::embed::LevelParams {
        crate::embed::LevelParams {
            subsample: crate::subsample::SubsampleParams {
                p_keep: self.p_keep,
                outdeg_floor: self.outdeg_floor,
                indeg_root_threshold: self.indeg_root_threshold,
                broom_target: self.broom_target,
                resample_cap: self.resample_cap,
                rng_seed: self.rng_seed,
            },
            target_degree: self.target_degree,
        }
    }
}

/// Per-level parameters for the recursive embedder.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScheduleJson {
    pub levels: Vec<ScheduleLevelJson>,
}

impl ScheduleJson {
    pub fn capture(levels: &[crate::embed::LevelParams]) -> Self {
        ScheduleJson { levels: levels.iter().map(ScheduleLevelJson::capture).collect() }
    }

    pub fn schedule(&self) -> Vec<crate::embed::LevelParams> {
        self.levels.iter().map(ScheduleLevelJson::level_params).collect()
    }
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &std::path::Path) -> Result<T, IoError> {
    let text = std::fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

pub fn write_json<T: Serialize>(path: &std::path::Path, value: &T) -> Result<(), IoError> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    Ok(std::fs::write(path, text)?)
}
