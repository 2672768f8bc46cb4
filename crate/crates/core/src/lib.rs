//! Grounded-tree recognition, broom digraphs, and degree-forced tree
//! embedding.
//!
//! The crate is organized bottom-up: [`digraph`] holds the arc-set digraph
//! core, [`grounded`] recognizes grounded oriented trees, [`brooms`] validates
//! brooms and broom digraphs, [`restructure`] hosts the deterministic
//! rebuilding passes, [`subsample`] the randomized degree-taming passes,
//! [`embed`] the embedding strategies, and [`gen`]/[`experiment`] the
//! instance workbench.

pub mod brooms;
pub mod cli;
pub mod digraph;
pub mod embed;
pub mod experiment;
pub mod gen;
pub mod grounded;
pub mod io;
pub mod restructure;
pub mod subsample;

pub use brooms::{
    check_high_degree_property, from_out_regular, trim_out_regular, validate_broom,
    validate_broom_digraph, Broom, BroomDigraph, BroomDigraphViolation, BroomViolation,
    OutArborescence,
};
pub use digraph::{Digraph, GraphError, VertexSet, Walk};
pub use embed::{
    brute_embed, brute_embed_unbounded, check_proper, constructive_embed, extend_by_peels,
    heuristic_embed, max_grounded_core, BruteError, ConstructiveError, ConstructiveOutcome,
    CoreError, EmbedCase, EmbedStrictness, Embedding, EmbeddingDefect, ExtendError, LevelParams,
    LevelTrace, PeelSequence, PeelStep, ProperCopyWitness, ProperReport, ProperViolation,
    SearchBudget, SearchOutcome, SearchStats,
};
pub use experiment::{
    derive_seed, estimate_dk, CellVerdict, DkCell, DkEstimate, DkTreeRecord, ExperimentError,
};
pub use gen::{
    canonical_tree_key, complete_digraph, enumerate_grounded_trees, enumerate_oriented_trees,
    gen_arborescence, gen_broom, gen_broom_digraph, gen_favorable, gen_favorable_for,
    gen_grounded_tree, gen_oriented_tree, gen_out_regular, tall_host, FavorableInstance, GenError,
};
pub use grounded::{
    brute_grounded, grounded_profile, height_function, is_oriented_forest, GroundedProfile,
    HeightFunction, OrientedTree, TreeError,
};
pub use restructure::{
    clean_up, compute_type, extract_broom, make_typed, monochromatic_broom, monochromatic_prune,
    CleanUpError, CleanUpMode, CleanUpOutput, ExtractError, LeafColoring, LevelLabels, TypeWord,
    TypedError,
};
pub use subsample::{
    lovasz_trick, sample_good_subdigraph, LovaszFailure, LovaszOutput, SampleFailure,
    SubsampleParams, SubsampleState,
};

#[cfg(test)]
pub(crate) mod fixtures {
    use crate::brooms::{validate_broom_digraph, BroomDigraph};
    use crate::digraph::{Digraph, VertexSet};
    use crate::io::{BroomJson, CertificateJson};

    /// Five-root (2,2)-broom digraph on seven vertices mixing one height-2
    /// broom with four height-1 stars; shared across module tests.
    pub(crate) fn mixed_height_digraph() -> BroomDigraph {
        let arcs = [
            (0, 3), (0, 4), (3, 1), (3, 2), (4, 5), (4, 6),
            (1, 0), (1, 2), (2, 5), (2, 6), (5, 0), (5, 1), (6, 2), (6, 5),
        ];
        let d = Digraph::build(7, &arcs).unwrap();
        let cert = CertificateJson {
            roots: vec![0, 1, 2, 5, 6],
            brooms: vec![
                BroomJson {
                    root: 0,
                    arcs: vec![(0, 3), (0, 4), (3, 1), (3, 2), (4, 5), (4, 6)],
                },
                BroomJson { root: 1, arcs: vec![(1, 0), (1, 2)] },
                BroomJson { root: 2, arcs: vec![(2, 5), (2, 6)] },
                BroomJson { root: 5, arcs: vec![(5, 0), (5, 1)] },
                BroomJson { root: 6, arcs: vec![(6, 2), (6, 5)] },
            ],
        };
        validate_broom_digraph(d, VertexSet::from([0, 1, 2, 5, 6]), &cert, 2, 2).unwrap()
    }
}
