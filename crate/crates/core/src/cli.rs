//! Command-line workbench: recognition, shape validation, the pipeline
//! stages, the three embedding drivers, generators, and the d_k probe.
//!
//! Every subcommand reads and writes the JSON formats from [`crate::io`].
//! Stage commands print a summary object to stdout and inline the output
//! digraph and certificate unless `--out-digraph` / `--out-certificate`
//! redirect them to files for chaining. The process exits 0 only when the
//! invoked pipeline ran to completion with every validation passing.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::brooms::{
    from_out_regular, trim_out_regular, validate_broom, validate_broom_digraph, ArbDefect,
    BroomDigraph, OutArborescence, OutRegularError, PruneError,
};
use crate::digraph::{Digraph, GraphError, VertexSet};
use crate::embed::{
    brute_embed, check_proper, constructive_embed, heuristic_embed, BruteError, ConstructiveError,
    CoreError, EmbedStrictness, Embedding, LevelTrace, ProperCopyWitness, SearchBudget,
};
use crate::experiment::{estimate_dk, DkEstimate, ExperimentError};
use crate::gen::{
    gen_broom, gen_broom_digraph, gen_favorable, gen_favorable_for, gen_grounded_tree,
    gen_out_regular, FavorableInstance, GenError,
};
use crate::grounded::{grounded_profile, OrientedTree, TreeError};
use crate::io::{
    read_json, write_json, BroomJson, CertificateJson, DigraphJson, EmbeddingJson, IoError,
    ScheduleJson,
};
use crate::restructure::{
    clean_up, extract_broom, make_typed, CleanUpError, CleanUpMode, ExtractError, TypedError,
};
use crate::subsample::{lovasz_trick, LovaszFailure, ResampledEvent, SubsampleParams};

const SEED_ENV: &str = "GROUNDTREE_SEED";

#[derive(Debug, Error)]
enum CliError {
    #[error("{}: {source}", path.display())]
    File { path: PathBuf, source: IoError },
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("not an oriented tree: {0}")]
    Tree(#[from] TreeError),
    #[error(transparent)]
    Arborescence(#[from] ArbDefect),
    #[error(transparent)]
    OutRegular(#[from] OutRegularError),
    #[error(transparent)]
    Extract(#[from] ExtractError),
    #[error(transparent)]
    Prune(#[from] PruneError),
    #[error(transparent)]
    Typed(#[from] TypedError),
    #[error(transparent)]
    CleanUp(#[from] CleanUpError),
    #[error(transparent)]
    Subsample(#[from] LovaszFailure),
    #[error(transparent)]
    Brute(#[from] BruteError),
    #[error(transparent)]
    Search(#[from] CoreError),
    #[error(transparent)]
    Constructive(#[from] ConstructiveError),
    #[error(transparent)]
    Gen(#[from] GenError),
    #[error(transparent)]
    Experiment(#[from] ExperimentError),
    #[error("{SEED_ENV} is set to {0:?}, which is not a u64")]
    BadSeedEnv(String),
    #[error("--{0} is required here")]
    Missing(&'static str),
    #[error("the digraph file lists roots {digraph:?} but the certificate lists {certificate:?}")]
    RootsDisagree { digraph: Vec<usize>, certificate: Vec<usize> },
    #[error("input fails broom-digraph validation: {0}")]
    InvalidHost(String),
    #[error("the digraph has {0} sources; pass --root to pick one")]
    AmbiguousRoot(usize),
    #[error("estimate-dk needs --config or all of --k, --d-lo, --d-hi, --n, --trials")]
    IncompleteGrid,
    #[error("--config replaces the parameter flags; drop one or the other")]
    ConfigClash,
}

pub fn run() {
    let cli = Cli::parse();
    let code = match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    };
    std::process::exit(code);
}

#[derive(Debug, Parser)]
#[command(name = "groundtree", version, about = "Workbench for grounded trees in sparse digraphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Recognize an oriented tree and report its groundedness profile.
    Recognize(RecognizeArgs),
    /// Export a digraph to DOT, drawing root-set vertices as double circles.
    Dot(DotArgs),
    /// Check a digraph against the (k, d)-broom shape.
    ValidateBroom(ValidateBroomArgs),
    /// Check a digraph and certificate against the (k, d)-broom-digraph shape.
    ValidateBroomDigraph(HostArgs),
    /// Read a d-out-regular digraph as a broom digraph of height bound k.
    FromOutRegular(FromOutRegularArgs),
    /// Cut every out-degree down to exactly d by dropping highest-id arcs.
    Trim(TrimArgs),
    /// Prune an out-arborescence with plentiful degrees down to a broom.
    PruneBroom(PruneBroomArgs),
    /// Refine a broom digraph until every vertex carries a length-t walk profile.
    MakeTyped(MakeTypedArgs),
    /// Subsample, retype, and prune a broom digraph in one cleaning pass.
    CleanUp(CleanUpArgs),
    /// Subsample a broom digraph to its high-in-degree roots.
    Subsample(SubsampleArgs),
    /// Embed an oriented tree into a digraph.
    Embed(EmbedArgs),
    /// Sample a digraph, broom, broom digraph, grounded tree, or favorable instance.
    Gen(GenSpec),
    /// Probe the least degree at which each small grounded tree shows up.
    EstimateDk(EstimateDkArgs),
}

#[derive(Debug, clap::Args)]
struct RecognizeArgs {
    /// Digraph JSON to recognize.
    #[arg(long, value_name = "FILE")]
    digraph: PathBuf,
    /// Write the report here instead of stdout.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Debug, clap::Args)]
struct DotArgs {
    #[arg(long, value_name = "FILE")]
    digraph: PathBuf,
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Debug, clap::Args)]
struct ValidateBroomArgs {
    #[arg(long, value_name = "FILE")]
    digraph: PathBuf,
    /// Root of the candidate broom.
    #[arg(long)]
    root: usize,
    #[arg(long)]
    k: usize,
    #[arg(long)]
    d: usize,
}

/// A broom digraph on disk: digraph JSON plus certificate JSON plus its
/// declared parameters.
#[derive(Debug, clap::Args)]
struct HostArgs {
    #[arg(long, value_name = "FILE")]
    digraph: PathBuf,
    #[arg(long, value_name = "FILE")]
    certificate: PathBuf,
    #[arg(long)]
    k: usize,
    #[arg(long)]
    d: usize,
}

#[derive(Debug, clap::Args)]
struct FromOutRegularArgs {
    #[arg(long, value_name = "FILE")]
    digraph: PathBuf,
    /// Broom height bound; the digraph must have at least d^k + ... + d + 1 vertices.
    #[arg(long)]
    k: usize,
    #[arg(long, value_name = "FILE")]
    out_digraph: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    out_certificate: Option<PathBuf>,
}

#[derive(Debug, clap::Args)]
struct TrimArgs {
    #[arg(long, value_name = "FILE")]
    digraph: PathBuf,
    /// Target out-degree; every vertex must have at least this many out-arcs.
    #[arg(long)]
    d: usize,
    #[arg(long, value_name = "FILE")]
    out_digraph: Option<PathBuf>,
}

#[derive(Debug, clap::Args)]
struct PruneBroomArgs {
    /// Out-arborescence as digraph JSON.
    #[arg(long, value_name = "FILE")]
    digraph: PathBuf,
    /// Root; defaults to the unique source.
    #[arg(long)]
    root: Option<usize>,
    #[arg(long)]
    k: usize,
    #[arg(long)]
    d: usize,
    /// Additionally prune the extracted broom down to this degree.
    #[arg(long)]
    target: Option<usize>,
    #[arg(long, value_name = "FILE")]
    out_digraph: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    out_certificate: Option<PathBuf>,
}

#[derive(Debug, clap::Args)]
struct MakeTypedArgs {
    #[command(flatten)]
    host: HostArgs,
    /// Profile length to refine to; at most k.
    #[arg(long)]
    t: usize,
    #[arg(long, value_name = "FILE")]
    out_digraph: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    out_certificate: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum CleanUpModeArg {
    /// Derive every threshold from d; rejects d below the closed-form bound.
    Strict,
    /// Take the thresholds from the flags below.
    Parametric,
}

#[derive(Debug, clap::Args)]
struct CleanUpArgs {
    #[command(flatten)]
    host: HostArgs,
    #[arg(long, value_enum)]
    mode: CleanUpModeArg,
    /// Out-degree to prune the cleaned brooms to (parametric mode).
    #[arg(long)]
    target_degree: Option<usize>,
    #[command(flatten)]
    thresholds: ThresholdArgs,
    #[arg(long, value_name = "FILE")]
    out_digraph: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    out_certificate: Option<PathBuf>,
}

#[derive(Debug, clap::Args)]
struct SubsampleArgs {
    #[command(flatten)]
    host: HostArgs,
    #[command(flatten)]
    thresholds: ThresholdArgs,
    #[arg(long, value_name = "FILE")]
    out_digraph: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    out_certificate: Option<PathBuf>,
}

/// Subsampling thresholds. Each omitted flag falls back to the closed-form
/// value derived from the host's d and k.
#[derive(Debug, clap::Args)]
struct ThresholdArgs {
    /// Keep probability for arcs leaving full-degree vertices.
    #[arg(long)]
    p_keep: Option<f64>,
    /// Sampled out-degrees at or below this floor get redrawn.
    #[arg(long)]
    outdeg_floor: Option<usize>,
    /// In-degree at or above which a root survives.
    #[arg(long)]
    indeg_threshold: Option<f64>,
    /// Height of the brooms grown below each surviving root.
    #[arg(long)]
    broom_target: Option<usize>,
    /// Resampling round cap.
    #[arg(long)]
    cap: Option<usize>,
    /// RNG seed; falls back to GROUNDTREE_SEED, then 0.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum EmbedMode {
    /// Exhaustive search, hosts up to 14 vertices.
    Brute,
    /// Anchored backtracking with restarts; absence verdicts may be one-sided.
    Heuristic,
    /// The recursive peel-clean-reattach chain; needs a broom-digraph host.
    Constructive,
}

#[derive(Debug, clap::Args)]
struct EmbedArgs {
    #[arg(long, value_enum)]
    mode: EmbedMode,
    /// Oriented tree as digraph JSON.
    #[arg(long, value_name = "FILE")]
    tree: PathBuf,
    #[arg(long, value_name = "FILE")]
    digraph: PathBuf,
    /// Broom certificate; with it the host is validated and copies are
    /// checked for properness.
    #[arg(long, value_name = "FILE")]
    certificate: Option<PathBuf>,
    /// Host parameters, required alongside --certificate.
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    d: Option<usize>,
    /// Cleaning schedule for the constructive chain; without it the chain
    /// runs in strict mode.
    #[arg(long, value_name = "FILE")]
    schedule: Option<PathBuf>,
    /// RNG seed; falls back to GROUNDTREE_SEED, then 0.
    #[arg(long)]
    seed: Option<u64>,
    /// Heuristic restarts.
    #[arg(long)]
    restarts: Option<usize>,
    /// Node budget per heuristic restart.
    #[arg(long)]
    nodes_per_restart: Option<u64>,
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum GenModel {
    OutRegular,
    Broom,
    BroomDigraph,
    GroundedTree,
    Favorable,
}

/// What to generate and at which sizes. Only the parameters the chosen
/// model reads are required.
#[derive(Debug, clap::Args)]
struct GenSpec {
    #[arg(long, value_enum)]
    model: GenModel,
    /// Vertex count (out-regular).
    #[arg(long)]
    n: Option<usize>,
    /// Broom height bound (broom, broom-digraph).
    #[arg(long)]
    k: Option<usize>,
    /// Out-degree (out-regular, broom, broom-digraph).
    #[arg(long)]
    d: Option<usize>,
    /// Broom handle length, up to k+1 (broom).
    #[arg(long)]
    ell: Option<usize>,
    /// Root pool size (broom-digraph).
    #[arg(long)]
    n_roots: Option<usize>,
    /// Tree order (grounded-tree).
    #[arg(long)]
    order: Option<usize>,
    /// Only emit max-grounded trees (grounded-tree).
    #[arg(long)]
    max_grounded: bool,
    /// Max-grounded tree to build a favorable host for; omit to list the
    /// whole catalog (favorable).
    #[arg(long, value_name = "FILE")]
    tree: Option<PathBuf>,
    /// RNG seed; falls back to GROUNDTREE_SEED, then 0.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_name = "FILE")]
    out_digraph: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    out_certificate: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    out_tree: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    out_schedule: Option<PathBuf>,
}

#[derive(Debug, clap::Args)]
struct EstimateDkArgs {
    /// JSON run config, either one run object or {"runs": [..]}. Replaces
    /// the parameter flags.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Tree order to probe, at most 5.
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    d_lo: Option<usize>,
    #[arg(long)]
    d_hi: Option<usize>,
    /// Host vertex count.
    #[arg(long)]
    n: Option<usize>,
    /// Hosts sampled per (tree, d) cell.
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    restarts: Option<usize>,
    #[arg(long)]
    nodes_per_restart: Option<u64>,
    /// Root seed; falls back to GROUNDTREE_SEED, then 0.
    #[arg(long)]
    seed: Option<u64>,
    /// Write the flat per-cell table here.
    #[arg(long, value_name = "FILE")]
    csv: Option<PathBuf>,
    /// Write the JSON report here instead of stdout.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

fn dispatch(command: Command) -> Result<i32, CliError> {
    match command {
        Command::Recognize(args) => cmd_recognize(args),
        Command::Dot(args) => cmd_dot(args),
        Command::ValidateBroom(args) => cmd_validate_broom(args),
        Command::ValidateBroomDigraph(args) => cmd_validate_broom_digraph(args),
        Command::FromOutRegular(args) => cmd_from_out_regular(args),
        Command::Trim(args) => cmd_trim(args),
        Command::PruneBroom(args) => cmd_prune_broom(args),
        Command::MakeTyped(args) => cmd_make_typed(args),
        Command::CleanUp(args) => cmd_clean_up(args),
        Command::Subsample(args) => cmd_subsample(args),
        Command::Embed(args) => cmd_embed(args),
        Command::Gen(args) => cmd_gen(args),
        Command::EstimateDk(args) => cmd_estimate_dk(args),
    }
}

fn load_json<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    read_json(path).map_err(|source| CliError::File { path: path.to_path_buf(), source })
}

fn save_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    write_json(path, value).map_err(|source| CliError::File { path: path.to_path_buf(), source })
}

/// Writes to stdout, treating a closed pipe as a normal exit.
fn print_stdout(text: &str) {
    use std::io::Write;
    let mut out = std::io::stdout();
    if let Err(e) = out.write_all(text.as_bytes()).and_then(|_| out.flush()) {
        if e.kind() == std::io::ErrorKind::BrokenPipe {
            std::process::exit(0);
        }
        eprintln!("error: stdout: {e}");
        std::process::exit(1);
    }
}

fn emit<T: Serialize>(value: &T, out: Option<&PathBuf>) -> Result<(), CliError> {
    match out {
        Some(path) => save_json(path, value),
        None => {
            let mut text = serde_json::to_string_pretty(value).expect("output serializes");
            text.push('\n');
            print_stdout(&text);
            Ok(())
        }
    }
}

fn emit_text(text: &str, out: Option<&PathBuf>) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| CliError::File { path: path.clone(), source: IoError::from(e) }),
        None => {
            print_stdout(text);
            Ok(())
        }
    }
}

fn resolve_seed(flag: Option<u64>) -> Result<u64, CliError> {
    if let Some(seed) = flag {
        return Ok(seed);
    }
    match std::env::var(SEED_ENV) {
        Ok(text) => text.trim().parse().map_err(|_| CliError::BadSeedEnv(text)),
        Err(_) => Ok(0),
    }
}

fn load_digraph(path: &Path) -> Result<(Digraph, Option<VertexSet>), CliError> {
    let dj: DigraphJson = load_json(path)?;
    let d = dj.digraph()?;
    Ok((d, dj.root_set()))
}

fn load_tree(path: &Path) -> Result<OrientedTree, CliError> {
    let (d, _) = load_digraph(path)?;
    Ok(OrientedTree::new(d)?)
}

/// Loads and validates a broom digraph, treating the certificate's root
/// list as authoritative and cross-checking any roots in the digraph file.
fn load_host(args: &HostArgs) -> Result<BroomDigraph, CliError> {
    let (digraph, file_roots) = load_digraph(&args.digraph)?;
    let cert: CertificateJson = load_json(&args.certificate)?;
    let roots: VertexSet = cert.roots.iter().copied().collect();
    if let Some(fr) = file_roots {
        if fr != roots {
            return Err(CliError::RootsDisagree {
                digraph: fr.iter().collect(),
                certificate: roots.iter().collect(),
            });
        }
    }
    validate_broom_digraph(digraph, roots, &cert, args.k, args.d)
        .map_err(|v| CliError::InvalidHost(v.to_string()))
}

fn subsample_params(k: usize, d: usize, t: &ThresholdArgs) -> Result<SubsampleParams, CliError> {
    let seed = resolve_seed(t.seed)?;
    let mut p = SubsampleParams::paper_defaults(d, k, seed);
    if let Some(x) = t.p_keep {
        p.p_keep = x;
    }
    if let Some(x) = t.outdeg_floor {
        p.outdeg_floor = x;
    }
    if let Some(x) = t.indeg_threshold {
        p.indeg_root_threshold = x;
    }
    if let Some(x) = t.broom_target {
        p.broom_target = x;
    }
    if let Some(x) = t.cap {
        p.resample_cap = x;
    }
    Ok(p)
}

#[derive(Debug, Serialize)]
struct RecognizeOut {
    oriented_tree: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    grounded: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    max_grounded: Option<bool>,
    #[serde(rename = "G", skip_serializing_if = "Option::is_none")]
    g: Option<Vec<usize>>,
    #[serde(rename = "Z", skip_serializing_if = "Option::is_none")]
    z: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    h: Option<BTreeMap<usize, i64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    reason: Option<String>,
}

fn cmd_recognize(args: RecognizeArgs) -> Result<i32, CliError> {
    let (d, _) = load_digraph(&args.digraph)?;
    match OrientedTree::new(d) {
        Ok(t) => {
            let p = grounded_profile(&t);
            let report = RecognizeOut {
                oriented_tree: true,
                grounded: Some(p.grounded),
                max_grounded: Some(p.max_grounded),
                g: Some(p.g.iter().collect()),
                z: Some(p.z.iter().collect()),
                h: Some(p.normalized_height.iter().collect()),
                reason: None,
            };
            emit(&report, args.out.as_ref())?;
            Ok(0)
        }
        Err(e) => {
            let report = RecognizeOut {
                oriented_tree: false,
                grounded: None,
                max_grounded: None,
                g: None,
                z: None,
                h: None,
                reason: Some(e.to_string()),
            };
            emit(&report, args.out.as_ref())?;
            Ok(1)
        }
    }
}

fn cmd_dot(args: DotArgs) -> Result<i32, CliError> {
    let (d, roots) = load_digraph(&args.digraph)?;
    emit_text(&d.to_dot(roots.as_ref()), args.out.as_ref())?;
    Ok(0)
}

#[derive(Debug, Serialize)]
struct ValidateOut {
    valid: bool,
    k: usize,
    d: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    ell: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    roots: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    violation: Option<String>,
}

fn cmd_validate_broom(args: ValidateBroomArgs) -> Result<i32, CliError> {
    let (d, _) = load_digraph(&args.digraph)?;
    let report = match validate_broom(d, args.root, args.k, args.d) {
        Ok(b) => ValidateOut {
            valid: true,
            k: args.k,
            d: args.d,
            ell: Some(b.ell()),
            roots: None,
            violation: None,
        },
        Err(v) => ValidateOut {
            valid: false,
            k: args.k,
            d: args.d,
            ell: None,
            roots: None,
            violation: Some(v.to_string()),
        },
    };
    let code = if report.valid { 0 } else { 1 };
    emit(&report, None)?;
    Ok(code)
}

fn cmd_validate_broom_digraph(args: HostArgs) -> Result<i32, CliError> {
    let report = match load_host(&args) {
        Ok(b) => ValidateOut {
            valid: true,
            k: args.k,
            d: args.d,
            ell: None,
            roots: Some(b.roots().iter().collect()),
            violation: None,
        },
        Err(CliError::InvalidHost(v)) => ValidateOut {
            valid: false,
            k: args.k,
            d: args.d,
            ell: None,
            roots: None,
            violation: Some(v),
        },
        Err(other) => return Err(other),
    };
    let code = if report.valid { 0 } else { 1 };
    emit(&report, None)?;
    Ok(code)
}

#[derive(Debug, Serialize)]
struct StageOut {
    k: usize,
    d: usize,
    vertex_count: usize,
    arc_count: usize,
    roots: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    digraph: Option<DigraphJson>,
    #[serde(skip_serializing_if = "Option::is_none")]
    digraph_path: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    certificate: Option<CertificateJson>,
    #[serde(skip_serializing_if = "Option::is_none")]
    certificate_path: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    root_in_degrees: Option<BTreeMap<usize, usize>>,
}

/// Packs a broom digraph for output, writing the redirected parts to disk.
fn stage_out(
    b: &BroomDigraph,
    root_in_degrees: Option<BTreeMap<usize, usize>>,
    out_digraph: Option<&PathBuf>,
    out_certificate: Option<&PathBuf>,
) -> Result<StageOut, CliError> {
    let digraph_json = DigraphJson::capture(b.digraph(), Some(b.roots()));
    let certificate = b.to_certificate();
    let mut out = StageOut {
        k: b.k(),
        d: b.d(),
        vertex_count: b.digraph().vertex_count(),
        arc_count: b.digraph().arc_count(),
        roots: b.roots().iter().collect(),
        digraph: None,
        digraph_path: None,
        certificate: None,
        certificate_path: None,
        root_in_degrees,
    };
    match out_digraph {
        Some(path) => {
            save_json(path, &digraph_json)?;
            out.digraph_path = Some(path.display().to_string());
        }
        None => out.digraph = Some(digraph_json),
    }
    match out_certificate {
        Some(path) => {
            save_json(path, &certificate)?;
            out.certificate_path = Some(path.display().to_string());
        }
        None => out.certificate = Some(certificate),
    }
    Ok(out)
}

fn cmd_from_out_regular(args: FromOutRegularArgs) -> Result<i32, CliError> {
    let (d, _) = load_digraph(&args.digraph)?;
    let b = from_out_regular(d, args.k)?;
    let out = stage_out(&b, None, args.out_digraph.as_ref(), args.out_certificate.as_ref())?;
    emit(&out, None)?;
    Ok(0)
}

#[derive(Debug, Serialize)]
struct DigraphOut {
    vertex_count: usize,
    arc_count: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    grounded: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    max_grounded: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    digraph: Option<DigraphJson>,
    #[serde(skip_serializing_if = "Option::is_none")]
    digraph_path: Option<String>,
}

fn digraph_out(
    d: &Digraph,
    roots: Option<&VertexSet>,
    out_digraph: Option<&PathBuf>,
) -> Result<DigraphOut, CliError> {
    let dj = DigraphJson::capture(d, roots);
    let mut out = DigraphOut {
        vertex_count: d.vertex_count(),
        arc_count: d.arc_count(),
        grounded: None,
        max_grounded: None,
        digraph: None,
        digraph_path: None,
    };
    match out_digraph {
        Some(path) => {
            save_json(path, &dj)?;
            out.digraph_path = Some(path.display().to_string());
        }
        None => out.digraph = Some(dj),
    }
    Ok(out)
}

fn cmd_trim(args: TrimArgs) -> Result<i32, CliError> {
    let (d, _) = load_digraph(&args.digraph)?;
    let trimmed = trim_out_regular(&d, args.d)?;
    let out = digraph_out(&trimmed, None, args.out_digraph.as_ref())?;
    emit(&out, None)?;
    Ok(0)
}

#[derive(Debug, Serialize)]
struct BroomOut {
    k: usize,
    d: usize,
    ell: usize,
    root: usize,
    vertex_count: usize,
    leaves: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    digraph: Option<DigraphJson>,
    #[serde(skip_serializing_if = "Option::is_none")]
    digraph_path: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    certificate: Option<CertificateJson>,
    #[serde(skip_serializing_if = "Option::is_none")]
    certificate_path: Option<String>,
}

fn broom_out(
    b: &crate::brooms::Broom,
    out_digraph: Option<&PathBuf>,
    out_certificate: Option<&PathBuf>,
) -> Result<BroomOut, CliError> {
    let digraph_json = DigraphJson::capture(b.digraph(), None);
    let certificate = CertificateJson {
        roots: vec![b.root()],
        brooms: vec![BroomJson { root: b.root(), arcs: b.digraph().arcs().collect() }],
    };
    let mut out = BroomOut {
        k: b.k(),
        d: b.d(),
        ell: b.ell(),
        root: b.root(),
        vertex_count: b.digraph().vertex_count(),
        leaves: b.leaves().iter().collect(),
        digraph: None,
        digraph_path: None,
        certificate: None,
        certificate_path: None,
    };
    match out_digraph {
        Some(path) => {
            save_json(path, &digraph_json)?;
            out.digraph_path = Some(path.display().to_string());
        }
        None => out.digraph = Some(digraph_json),
    }
    match out_certificate {
        Some(path) => {
            save_json(path, &certificate)?;
            out.certificate_path = Some(path.display().to_string());
        }
        None => out.certificate = Some(certificate),
    }
    Ok(out)
}

fn cmd_prune_broom(args: PruneBroomArgs) -> Result<i32, CliError> {
    let (d, _) = load_digraph(&args.digraph)?;
    let root = match args.root {
        Some(r) => r,
        None => {
            let sources: Vec<usize> = d.vertices().filter(|&v| d.in_degree(v) == 0).collect();
            match sources.as_slice() {
                [r] => *r,
                _ => return Err(CliError::AmbiguousRoot(sources.len())),
            }
        }
    };
    let arbo = OutArborescence::new(d, root)?;
    let mut broom = extract_broom(&arbo, args.k, args.d)?;
    if let Some(target) = args.target {
        broom = broom.prune_to_degree(target)?;
    }
    let out = broom_out(&broom, args.out_digraph.as_ref(), args.out_certificate.as_ref())?;
    emit(&out, None)?;
    Ok(0)
}

fn cmd_make_typed(args: MakeTypedArgs) -> Result<i32, CliError> {
    let host = load_host(&args.host)?;
    let typed = make_typed(&host, args.t)?;
    let out = stage_out(&typed, None, args.out_digraph.as_ref(), args.out_certificate.as_ref())?;
    emit(&out, None)?;
    Ok(0)
}

fn cmd_clean_up(args: CleanUpArgs) -> Result<i32, CliError> {
    let host = load_host(&args.host)?;
    let mode = match args.mode {
        CleanUpModeArg::Strict => CleanUpMode::Strict,
        CleanUpModeArg::Parametric => CleanUpMode::Parametric {
            target_degree: args.target_degree.ok_or(CliError::Missing("target-degree"))?,
        },
    };
    let params = subsample_params(args.host.k, args.host.d, &args.thresholds)?;
    let cleaned = clean_up(&host, &mode, &params)?;
    let out = stage_out(
        &cleaned.brooms,
        Some(cleaned.root_in_degrees),
        args.out_digraph.as_ref(),
        args.out_certificate.as_ref(),
    )?;
    emit(&out, None)?;
    Ok(0)
}

#[derive(Debug, Serialize)]
struct SubsampleOut {
    rounds_used: usize,
    out_degree_resamples: usize,
    in_degree_resamples: usize,
    log_truncated: bool,
    epd: f64,
    epd_satisfied: bool,
    #[serde(flatten)]
    stage: StageOut,
}

fn cmd_subsample(args: SubsampleArgs) -> Result<i32, CliError> {
    let host = load_host(&args.host)?;
    let params = subsample_params(args.host.k, args.host.d, &args.thresholds)?;
    let result = lovasz_trick(&host, &params)?;
    let state = &result.state;
    let stage = stage_out(
        &result.brooms,
        Some(result.root_in_degrees.clone()),
        args.out_digraph.as_ref(),
        args.out_certificate.as_ref(),
    )?;
    let out = SubsampleOut {
        rounds_used: state.rounds_used,
        out_degree_resamples: state
            .resample_log
            .iter()
            .filter(|e| matches!(e, ResampledEvent::OutDegreeLow(_)))
            .count(),
        in_degree_resamples: state
            .resample_log
            .iter()
            .filter(|e| matches!(e, ResampledEvent::InDegreeHigh(_)))
            .count(),
        log_truncated: state.log_truncated,
        epd: state.epd.epd,
        epd_satisfied: state.epd.satisfied,
        stage,
    };
    emit(&out, None)?;
    Ok(0)
}

#[derive(Debug, Serialize)]
struct TraceOut {
    level: usize,
    tree_order: usize,
    leaf: usize,
    neighbor: usize,
    case: String,
    arcs_to_top: usize,
    arcs_to_leaf: usize,
    image: usize,
}

fn trace_out(t: &LevelTrace) -> TraceOut {
    TraceOut {
        level: t.level,
        tree_order: t.tree_order,
        leaf: t.leaf,
        neighbor: t.neighbor,
        case: t.case.to_string(),
        arcs_to_top: t.arcs_to_top,
        arcs_to_leaf: t.arcs_to_leaf,
        image: t.image,
    }
}

#[derive(Debug, Serialize)]
struct EmbedOut {
    found: bool,
    #[serde(flatten)]
    embedding: Option<EmbeddingJson>,
    #[serde(skip_serializing_if = "Option::is_none")]
    definitive: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    restarts_used: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    nodes_expanded: Option<u64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    trace: Vec<TraceOut>,
}

fn plain_json(e: &Embedding) -> EmbeddingJson {
    EmbeddingJson { map: e.map.clone(), proper: false, source_paths: BTreeMap::new() }
}

fn witness_json(w: &ProperCopyWitness) -> EmbeddingJson {
    EmbeddingJson {
        map: w.embedding.map.clone(),
        proper: true,
        source_paths: w
            .source_paths
            .iter()
            .map(|(img, walk)| (*img, walk.verts().to_vec()))
            .collect(),
    }
}

fn cmd_embed(args: EmbedArgs) -> Result<i32, CliError> {
    let tree = load_tree(&args.tree)?;
    let host_bd = match &args.certificate {
        Some(cert) => Some(load_host(&HostArgs {
            digraph: args.digraph.clone(),
            certificate: cert.clone(),
            k: args.k.ok_or(CliError::Missing("k"))?,
            d: args.d.ok_or(CliError::Missing("d"))?,
        })?),
        None => None,
    };
    let host = match &host_bd {
        Some(b) => b.digraph().clone(),
        None => load_digraph(&args.digraph)?.0,
    };
    let report = match args.mode {
        EmbedMode::Brute => match brute_embed(&host, &tree, host_bd.as_ref())? {
            Some(e) => {
                let embedding = match &host_bd {
                    Some(b) => {
                        let w = ProperCopyWitness::derive(e, b.clone())
                            .expect("the proper filter only accepts derivable witnesses");
                        witness_json(&w)
                    }
                    None => plain_json(&e),
                };
                EmbedOut {
                    found: true,
                    embedding: Some(embedding),
                    definitive: Some(true),
                    restarts_used: None,
                    nodes_expanded: None,
                    trace: Vec::new(),
                }
            }
            None => EmbedOut {
                found: false,
                embedding: None,
                definitive: Some(true),
                restarts_used: None,
                nodes_expanded: None,
                trace: Vec::new(),
            },
        },
        EmbedMode::Heuristic => {
            let mut budget = SearchBudget::default();
            budget.seed = resolve_seed(args.seed)?;
            if let Some(r) = args.restarts {
                budget.restarts = r;
            }
            if let Some(nodes) = args.nodes_per_restart {
                budget.nodes_per_restart = nodes;
            }
            let outcome = heuristic_embed(&host, &tree, &budget)?;
            let embedding = outcome.embedding.map(|e| match &host_bd {
                Some(b) => match ProperCopyWitness::derive(e.clone(), b.clone()) {
                    Ok(w) if check_proper(&w).ok => witness_json(&w),
                    _ => plain_json(&e),
                },
                None => plain_json(&e),
            });
            EmbedOut {
                found: embedding.is_some(),
                embedding,
                definitive: Some(outcome.definitive),
                restarts_used: Some(outcome.stats.restarts_used),
                nodes_expanded: Some(outcome.stats.nodes_expanded),
                trace: Vec::new(),
            }
        }
        EmbedMode::Constructive => {
            let host_bd = host_bd.ok_or(CliError::Missing("certificate"))?;
            let mode = match &args.schedule {
                Some(path) => {
                    let sj: ScheduleJson = load_json(path)?;
                    EmbedStrictness::Parametric { schedule: sj.schedule() }
                }
                None => EmbedStrictness::Strict,
            };
            let outcome = constructive_embed(&host_bd, &tree, &mode)?;
            EmbedOut {
                found: true,
                embedding: Some(witness_json(&outcome.witness)),
                definitive: Some(true),
                restarts_used: None,
                nodes_expanded: None,
                trace: outcome.trace.iter().map(trace_out).collect(),
            }
        }
    };
    let code = if report.found { 0 } else { 1 };
    emit(&report, args.out.as_ref())?;
    Ok(code)
}

#[derive(Debug, Serialize)]
struct FavorableOut {
    name: String,
    manifest: String,
    k: usize,
    d: usize,
    expect_cases: Vec<String>,
    tree: DigraphJson,
    #[serde(skip_serializing_if = "Option::is_none")]
    tree_path: Option<String>,
    schedule: ScheduleJson,
    #[serde(skip_serializing_if = "Option::is_none")]
    schedule_path: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    digraph: Option<DigraphJson>,
    #[serde(skip_serializing_if = "Option::is_none")]
    digraph_path: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    certificate: Option<CertificateJson>,
    #[serde(skip_serializing_if = "Option::is_none")]
    certificate_path: Option<String>,
}

fn favorable_out(inst: &FavorableInstance, spec: &GenSpec) -> Result<FavorableOut, CliError> {
    let tree_json = DigraphJson::capture(inst.tree.digraph(), None);
    let digraph_json = DigraphJson::capture(inst.host.digraph(), Some(inst.host.roots()));
    let certificate = inst.host.to_certificate();
    let schedule = ScheduleJson::capture(&inst.schedule);
    let mut out = FavorableOut {
        name: inst.name.to_string(),
        manifest: inst.manifest.to_string(),
        k: inst.host.k(),
        d: inst.host.d(),
        expect_cases: inst.expect_cases.iter().map(|c| c.to_string()).collect(),
        tree: tree_json.clone(),
        tree_path: None,
        schedule: schedule.clone(),
        schedule_path: None,
        digraph: None,
        digraph_path: None,
        certificate: None,
        certificate_path: None,
    };
    if let Some(path) = &spec.out_tree {
        save_json(path, &tree_json)?;
        out.tree_path = Some(path.display().to_string());
    }
    if let Some(path) = &spec.out_schedule {
        save_json(path, &schedule)?;
        out.schedule_path = Some(path.display().to_string());
    }
    match &spec.out_digraph {
        Some(path) => {
            save_json(path, &digraph_json)?;
            out.digraph_path = Some(path.display().to_string());
        }
        None => out.digraph = Some(digraph_json),
    }
    match &spec.out_certificate {
        Some(path) => {
            save_json(path, &certificate)?;
            out.certificate_path = Some(path.display().to_string());
        }
        None => out.certificate = Some(certificate),
    }
    Ok(out)
}

fn cmd_gen(spec: GenSpec) -> Result<i32, CliError> {
    let seed = resolve_seed(spec.seed)?;
    match spec.model {
        GenModel::OutRegular => {
            let n = spec.n.ok_or(CliError::Missing("n"))?;
            let d = spec.d.ok_or(CliError::Missing("d"))?;
            let g = gen_out_regular(n, d, seed)?;
            let out = digraph_out(&g, None, spec.out_digraph.as_ref())?;
            emit(&out, None)?;
        }
        GenModel::Broom => {
            let k = spec.k.ok_or(CliError::Missing("k"))?;
            let d = spec.d.ok_or(CliError::Missing("d"))?;
            let ell = spec.ell.ok_or(CliError::Missing("ell"))?;
            let b = gen_broom(k, d, ell, seed)?;
            let out = broom_out(&b, spec.out_digraph.as_ref(), spec.out_certificate.as_ref())?;
            emit(&out, None)?;
        }
        GenModel::BroomDigraph => {
            let k = spec.k.ok_or(CliError::Missing("k"))?;
            let d = spec.d.ok_or(CliError::Missing("d"))?;
            let n_roots = spec.n_roots.ok_or(CliError::Missing("n-roots"))?;
            let b = gen_broom_digraph(k, d, n_roots, seed)?;
            let out =
                stage_out(&b, None, spec.out_digraph.as_ref(), spec.out_certificate.as_ref())?;
            emit(&out, None)?;
        }
        GenModel::GroundedTree => {
            let order = spec.order.ok_or(CliError::Missing("order"))?;
            let t = gen_grounded_tree(order, seed, spec.max_grounded)?;
            let p = grounded_profile(&t);
            let target = spec.out_digraph.as_ref().or(spec.out_tree.as_ref());
            let mut out = digraph_out(t.digraph(), None, target)?;
            out.grounded = Some(p.grounded);
            out.max_grounded = Some(p.max_grounded);
            emit(&out, None)?;
        }
        GenModel::Favorable => match &spec.tree {
            Some(path) => {
                let tree = load_tree(path)?;
                let inst = gen_favorable_for(&tree)?;
                let out = favorable_out(&inst, &spec)?;
                emit(&out, None)?;
            }
            None => {
                let catalog: Vec<FavorableOut> = gen_favorable()
                    .iter()
                    .map(|inst| favorable_out(inst, &spec))
                    .collect::<Result<_, _>>()?;
                emit(&catalog, None)?;
            }
        },
    }
    Ok(0)
}

#[derive(Debug, Clone, Deserialize)]
struct DkRunConfig {
    k: usize,
    d_lo: usize,
    d_hi: usize,
    n: usize,
    trials: usize,
    #[serde(default)]
    restarts: Option<usize>,
    #[serde(default)]
    nodes_per_restart: Option<u64>,
    #[serde(default)]
    seed: Option<u64>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum DkConfigFile {
    Grid { runs: Vec<DkRunConfig> },
    Single(DkRunConfig),
}

#[derive(Debug, Serialize)]
struct DkGridOut {
    runs: Vec<DkEstimate>,
}

fn dk_run(run: &DkRunConfig) -> Result<DkEstimate, CliError> {
    let mut budget = SearchBudget::default();
    if let Some(r) = run.restarts {
        budget.restarts = r;
    }
    if let Some(nodes) = run.nodes_per_restart {
        budget.nodes_per_restart = nodes;
    }
    let seed = resolve_seed(run.seed)?;
    budget.seed = seed;
    Ok(estimate_dk(run.k, run.d_lo, run.d_hi, run.n, run.trials, &budget, seed)?)
}

fn cmd_estimate_dk(args: EstimateDkArgs) -> Result<i32, CliError> {
    let runs: Vec<DkRunConfig> = match &args.config {
        Some(path) => {
            if args.k.is_some()
                || args.d_lo.is_some()
                || args.d_hi.is_some()
                || args.n.is_some()
                || args.trials.is_some()
            {
                return Err(CliError::ConfigClash);
            }
            match load_json(path)? {
                DkConfigFile::Grid { runs } => runs,
                DkConfigFile::Single(run) => vec![run],
            }
        }
        None => {
            let (Some(k), Some(d_lo), Some(d_hi), Some(n), Some(trials)) =
                (args.k, args.d_lo, args.d_hi, args.n, args.trials)
            else {
                return Err(CliError::IncompleteGrid);
            };
            vec![DkRunConfig {
                k,
                d_lo,
                d_hi,
                n,
                trials,
                restarts: args.restarts,
                nodes_per_restart: args.nodes_per_restart,
                seed: args.seed,
            }]
        }
    };
    let estimates: Vec<DkEstimate> = runs.iter().map(dk_run).collect::<Result<_, _>>()?;
    if let Some(path) = &args.csv {
        let mut csv = String::new();
        for (i, e) in estimates.iter().enumerate() {
            let table = e.to_csv();
            if i == 0 {
                csv.push_str(&table);
            } else {
                let (_, rows) = table.split_once('\n').expect("csv always has a header");
                csv.push_str(rows);
            }
        }
        std::fs::write(path, csv)
            .map_err(|e| CliError::File { path: path.clone(), source: IoError::from(e) })?;
    }
    match estimates.as_slice() {
        [single] => emit(single, args.out.as_ref())?,
        _ => emit(&DkGridOut { runs: estimates }, args.out.as_ref())?,
    }
    Ok(0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn threshold_flags_override_closed_forms() {
        let t = ThresholdArgs {
            p_keep: Some(0.5),
            outdeg_floor: None,
            indeg_threshold: None,
            broom_target: Some(1),
            cap: Some(99),
            seed: Some(7),
        };
        let p = subsample_params(2, 64, &t).unwrap();
        assert_eq!(p.p_keep, 0.5);
        assert_eq!(p.broom_target, 1);
        assert_eq!(p.resample_cap, 99);
        assert_eq!(p.rng_seed, 7);
        let defaults = SubsampleParams::paper_defaults(64, 2, 7);
        assert_eq!(p.outdeg_floor, defaults.outdeg_floor);
        assert_eq!(p.indeg_root_threshold, defaults.indeg_root_threshold);
    }

    #[test]
    fn cli_parses_every_subcommand_shape() {
        Cli::try_parse_from([
            "groundtree",
            "embed",
            "--mode",
            "constructive",
            "--tree",
            "t.json",
            "--digraph",
            "d.json",
            "--certificate",
            "c.json",
            "--k",
            "2",
            "--d",
            "5",
            "--schedule",
            "s.json",
        ])
        .unwrap();
        Cli::try_parse_from([
            "groundtree",
            "gen",
            "--model",
            "broom-digraph",
            "--k",
            "2",
            "--d",
            "3",
            "--n-roots",
            "20",
            "--seed",
            "4",
        ])
        .unwrap();
        Cli::try_parse_from([
            "groundtree",
            "clean-up",
            "--digraph",
            "d.json",
            "--certificate",
            "c.json",
            "--k",
            "2",
            "--d",
            "8",
            "--mode",
            "parametric",
            "--target-degree",
            "2",
            "--broom-target",
            "2",
        ])
        .unwrap();
        assert!(Cli::try_parse_from(["groundtree", "embed", "--mode", "nonsense"]).is_err());
    }

    #[test]
    fn config_file_shapes_deserialize() {
        let single: DkConfigFile =
            serde_json::from_str(r#"{"k":2,"d_lo":1,"d_hi":3,"n":50,"trials":4}"#).unwrap();
        assert!(matches!(single, DkConfigFile::Single(_)));
        let grid: DkConfigFile = serde_json::from_str(
            r#"{"runs":[{"k":1,"d_lo":1,"d_hi":1,"n":10,"trials":2,"seed":9}]}"#,
        )
        .unwrap();
        match grid {
            DkConfigFile::Grid { runs } => {
                assert_eq!(runs.len(), 1);
                assert_eq!(runs[0].seed, Some(9));
            }
            DkConfigFile::Single(_) => panic!("grid shape parsed as a single run"),
        }
    }
}
