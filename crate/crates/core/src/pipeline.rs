//! The staged run: rewriting → ball → tree → metrics → graphs → automata.
//!
//! Ball and tree stages are cached under content hashes of everything they
//! depend on, so changing λ or β reuses the expensive stages.

use std::fmt;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::atoms::{build_tree, AtomTree, TreeParams};
use crate::automata::{self, GluingAutomaton, Mapper, RigidStructure, TypeAutomaton, TypeTable};
use crate::ball::cones::{cone_types, lambda_infinity};
use crate::ball::delta::{estimate_delta, DeltaEstimate};
use crate::ball::{CayleyBall, GraphFile, Source, TilingSpec};
use crate::config::{RunConfig, SourceSpec};
use crate::graphs::{self, AugmentedGraph, GraphConstants, QuasiDensity, Threshold};
use crate::metrics::{Metrics, TipTable};
use crate::rewriting::{complete, Presentation, DEFAULT_MAX_RULES, DEFAULT_MAX_WORD_LEN};

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("stage `{stage}` failed: {message}\nhint: {hint}")]
    Stage { stage: &'static str, message: String, hint: &'static str },
    #[error("stage `{0}` is not cached; run `atomforge run` with the same configuration first")]
    StageMissing(&'static str),
    #[error("cannot write {path}: {message}")]
    Io { path: PathBuf, message: String },
}

fn stage<E: fmt::Display>(stage: &'static str, hint: &'static str) -> impl FnOnce(E) -> PipelineError {
    move |e| PipelineError::Stage { stage, message: e.to_string(), hint }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Provenance {
    Computed,
    Default,
    Override,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Constant<T> {
    pub value: T,
    pub provenance: Provenance,
}

impl<T> Constant<T> {
    pub fn new(value: T, provenance: Provenance) -> Self {
        Constant { value, provenance }
    }
}

/// Which numeric settings came from the command line.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Overrides {
    pub radius: Option<u32>,
    pub levels: Option<u32>,
    pub lambda: Option<u32>,
    pub lambda_e: Option<u32>,
    pub seed: Option<u64>,
}

impl Overrides {
    pub fn apply(&self, cfg: &mut RunConfig) {
        if let Some(v) = self.radius {
            cfg.radius = v;
        }
        if let Some(v) = self.levels {
            cfg.levels = v;
        }
        if let Some(v) = self.lambda {
            cfg.lambda = v;
        }
        if let Some(v) = self.lambda_e {
            cfg.lambda_e = Some(v);
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Constants {
    pub radius: Constant<u32>,
    pub levels: Constant<u32>,
    pub lambda: Constant<u32>,
    pub lambda_e: Constant<u32>,
    pub tip_threshold: Constant<u32>,
    pub beta: Constant<f64>,
    pub delta_est: Constant<u32>,
    pub delta_tilde: Option<Constant<f64>>,
    pub lambda_a: Constant<u32>,
    pub lambda_inf: Constant<u32>,
    pub cone_truncation: Constant<u32>,
    pub seed: Constant<u64>,
}

/// Everything computed after the tree.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Analysis {
    pub constants: Constants,
    pub delta: DeltaEstimate,
    pub cone_type_count: usize,
    /// Δ_k per level.
    pub deltas: Vec<Vec<(u32, u32)>>,
    pub tips: Vec<TipTable>,
    pub atom_graph: AugmentedGraph,
    pub tip_graph: AugmentedGraph,
    pub density: QuasiDensity,
    pub automata: Option<AutomataStage>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AutomataStage {
    pub types: TypeTable,
    pub rigid: RigidStructure,
    pub type_automaton: TypeAutomaton,
    pub gluing: GluingAutomaton,
}

pub struct Stages {
    pub config: RunConfig,
    pub ball: CayleyBall,
    pub tree: AtomTree,
    pub analysis: Analysis,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelSummary {
    pub level: u32,
    pub atoms: usize,
    pub finite_classes: usize,
    pub gluing_pairs: usize,
    pub horizontal_edges: usize,
    pub new_types: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub source: String,
    pub ball_vertices: usize,
    pub ball_complete: bool,
    pub constants: Constants,
    pub cone_types: usize,
    pub levels: Vec<LevelSummary>,
    pub types: Option<Vec<String>>,
    pub gluing_states: Option<usize>,
    pub gluing_closure: Option<automata::Closure>,
    pub quasi_density: QuasiDensity,
    pub structure_violations: Vec<String>,
    pub artifacts: Vec<String>,
}

fn hash_parts(parts: &[&[u8]]) -> String {
    let mut h = Sha256::new();
    for p in parts {
        h.update((p.len() as u64).to_le_bytes());
        h.update(p);
    }
    hex::encode(&h.finalize()[..12])
}

fn read_file(path: &Path) -> Result<String, PipelineError> {
    std::fs::read_to_string(path).map_err(stage("source", "check the path in `source`; it is relative to the config file"))
}

/// The source and a canonical text describing it (for cache keys).
pub fn load_source(cfg: &RunConfig) -> Result<(Source, String), PipelineError> {
    match &cfg.source {
        SourceSpec::Tiling { p, q } => Ok((Source::tiling(TilingSpec { p: *p, q: *q }), format!("tiling p={p} q={q}"))),
        SourceSpec::Presentation(path) => {
            let text = read_file(path)?;
            let hint = "check the presentation syntax, or reorder generators if completion blows up";
            let pres = Presentation::parse(&text).map_err(stage("rewriting", hint))?;
            let rs = complete(&pres, DEFAULT_MAX_RULES, DEFAULT_MAX_WORD_LEN).map_err(stage("rewriting", hint))?;
            Ok((Source::Group(rs), format!("presentation\n{text}")))
        }
        SourceSpec::Graph(path) => {
            let text = read_file(path)?;
            let g = GraphFile::parse(&text).map_err(stage("source", "fix the graph file"))?;
            Ok((Source::Graph(g), format!("graph\n{text}")))
        }
    }
}

fn cached<T: Serialize + DeserializeOwned>(
    dir: &Path,
    name: &str,
    key: &str,
    compute: impl FnOnce() -> Result<T, PipelineError>,
) -> Result<T, PipelineError> {
    let path = dir.join(format!("{name}-{key}.bin"));
    if let Some(v) = std::fs::read(&path).ok().and_then(|bytes| bincode::deserialize(&bytes).ok()) {
        return Ok(v);
    }
    let value = compute()?;
    std::fs::create_dir_all(dir).map_err(|e| PipelineError::Io { path: dir.into(), message: e.to_string() })?;
    let bytes = bincode::serialize(&value).map_err(|e| PipelineError::Io { path: path.clone(), message: e.to_string() })?;
    std::fs::write(&path, bytes).map_err(|e| PipelineError::Io { path, message: e.to_string() })?;
    Ok(value)
}

fn load_cached<T: DeserializeOwned>(dir: &Path, name: &'static str, key: &str) -> Result<T, PipelineError> {
    let bytes = std::fs::read(dir.join(format!("{name}-{key}.bin"))).map_err(|_| PipelineError::StageMissing(name))?;
    bincode::deserialize(&bytes).map_err(|_| PipelineError::StageMissing(name))
}

struct Keys {
    ball: String,
    tree: String,
    analysis: String,
}

fn keys(cfg: &RunConfig, overrides: &Overrides, source_text: &str) -> Keys {
    let version = env!("CARGO_PKG_VERSION").as_bytes();
    let ball = hash_parts(&[version, source_text.as_bytes(), &cfg.radius.to_le_bytes(), &cfg.max_vertices.to_le_bytes()]);
    let delta = format!("{}:{:?}:{}", cfg.delta_samples, cfg.delta_depth, cfg.seed);
    let tree = hash_parts(&[ball.as_bytes(), &cfg.levels.to_le_bytes(), delta.as_bytes()]);
    let rest = format!("{}:{:?}:{}:{}:{:?}:{:?}", cfg.lambda, cfg.lambda_e, cfg.beta, cfg.truncation, cfg.delta_tilde, overrides);
    let analysis = hash_parts(&[tree.as_bytes(), rest.as_bytes()]);
    Keys { ball, tree, analysis }
}

fn log(msg: impl fmt::Display, start: Instant) {
    eprintln!("[{:>7.1}s] {msg}", start.elapsed().as_secs_f64());
}

pub fn run_pipeline(cfg: &RunConfig, overrides: &Overrides) -> Result<Stages, PipelineError> {
    cfg.validate().map_err(stage("config", "edit the config file"))?;
    let start = Instant::now();
    let (source, source_text) = load_source(cfg)?;
    let keys = keys(cfg, overrides, &source_text);
    let dir = cfg.cache_dir();
    let ball: CayleyBall = cached(&dir, "ball", &keys.ball, || {
        CayleyBall::build_with_limit(&source, cfg.radius, cfg.max_vertices)
            .map_err(stage("ball", "lower `radius` or raise `max_vertices`"))
    })?;
    log(format_args!("ball: {} vertices", ball.len()), start);
    let delta = estimate_delta(&ball, cfg.delta_samples, cfg.seed, cfg.delta_depth);
    let tree: AtomTree = cached(&dir, "tree", &keys.tree, || {
        build_tree(&ball, TreeParams { levels: cfg.levels, delta: delta.delta }).map_err(stage("tree", "raise `radius` or lower `levels`"))
    })?;
    log(format_args!("tree: {} levels, λ_a = {}", tree.levels.len(), tree.lambda_a), start);
    let analysis: Analysis =
        cached(&dir, "analysis", &keys.analysis, || analyse(cfg, overrides, &ball, &tree, delta, start))?;
    Ok(Stages { config: cfg.clone(), ball, tree, analysis })
}

/// Loads all stages from the cache without computing anything.
pub fn load_stages(cfg: &RunConfig, overrides: &Overrides) -> Result<Stages, PipelineError> {
    let (_, source_text) = load_source(cfg)?;
    let keys = keys(cfg, overrides, &source_text);
    let dir = cfg.cache_dir();
    Ok(Stages {
        config: cfg.clone(),
        ball: load_cached(&dir, "ball", &keys.ball)?,
        tree: load_cached(&dir, "tree", &keys.tree)?,
        analysis: load_cached(&dir, "analysis", &keys.analysis)?,
    })
}

fn analyse(
    cfg: &RunConfig,
    ov: &Overrides,
    ball: &CayleyBall,
    tree: &AtomTree,
    delta: DeltaEstimate,
    start: Instant,
) -> Result<Analysis, PipelineError> {
    // Anything the user set, in the config file or on the command line, is
    // an override; values left at their built-in default are defaults.
    let defaults = RunConfig::parse("source = tiling p=4 q=5\nradius = 0\nlevels = 0", Path::new(".")).expect("default config");
    let prov = |set: bool| if set { Provenance::Override } else { Provenance::Default };
    let ct = cone_types(ball, cfg.truncation).map_err(stage("cones", "lower `truncation` or raise `radius`"))?;
    let lambda_inf = lambda_infinity(ball, &ct).map_err(stage("cones", "raise `radius`"))?;
    let gc = GraphConstants { lambda_inf, delta: delta.delta as f64, lambda_a: tree.lambda_a };
    let lambda_e = cfg.lambda_e.map_or(Threshold::Formula(gc.atom_threshold()), Threshold::Override);
    let tip_threshold = gc.tip_threshold(lambda_e.value());
    let constants = Constants {
        radius: Constant::new(cfg.radius, Provenance::Override),
        levels: Constant::new(cfg.levels, Provenance::Override),
        lambda: Constant::new(cfg.lambda, prov(ov.lambda.is_some() || cfg.lambda != defaults.lambda)),
        lambda_e: Constant::new(
            lambda_e.value(),
            match lambda_e {
                Threshold::Formula(_) => Provenance::Computed,
                Threshold::Override(v) => prov(ov.lambda_e.is_some() || Some(v) != defaults.lambda_e),
            },
        ),
        tip_threshold: Constant::new(tip_threshold, Provenance::Computed),
        beta: Constant::new(cfg.beta, prov(cfg.beta != defaults.beta)),
        delta_est: Constant::new(delta.delta, Provenance::Computed),
        delta_tilde: cfg.delta_tilde.map(|v| Constant::new(v, Provenance::Override)),
        lambda_a: Constant::new(tree.lambda_a, Provenance::Computed),
        lambda_inf: Constant::new(lambda_inf, Provenance::Computed),
        cone_truncation: Constant::new(cfg.truncation, prov(cfg.truncation != defaults.truncation)),
        seed: Constant::new(cfg.seed, prov(ov.seed.is_some() || cfg.seed != defaults.seed)),
    };
    let mut metrics = Metrics::new(ball, tree);
    let deltas: Vec<_> = (0..tree.levels.len() as u32).map(|k| metrics.gluing_pairs(k, cfg.lambda)).collect();
    let tips = (0..tree.levels.len() as u32)
        .map(|k| metrics.tip_table(k))
        .collect::<Result<Vec<_>, _>>()
        .map_err(stage("metrics", "raise `radius` so tip distances are certified"))?;
    log("metrics", start);
    let atom_graph = graphs::graph_of_atoms(&mut metrics, lambda_e.clone());
    let tip_graph = graphs::graph_of_tips(tree, &tips, Threshold::Formula(tip_threshold));
    let density = graphs::quasi_density(ball, tree);
    log("graphs", start);
    let automata = match Mapper::new(ball) {
        Ok(mapper) => {
            let hint = "raise `levels` and `radius` so types can be told apart";
            let types = automata::classify_types(&mapper, tree).map_err(stage("types", hint))?;
            let rigid = automata::build_rigid_structure(&mapper, tree, &types).map_err(stage("types", hint))?;
            let ta = automata::type_automaton(tree, &types, &rigid).map_err(stage("types", hint))?;
            let (gluing, _) = automata::gluing_automaton(&mapper, tree, &types, &rigid, &ta, &deltas, cfg.lambda)
                .map_err(stage("gluing", hint))?;
            if let automata::Closure::NonClosed { levels } = gluing.closure {
                eprintln!("warning: gluing states still growing after {levels} levels; the automaton is partial");
            }
            log("automata", start);
            Some(AutomataStage { types, rigid, type_automaton: ta, gluing })
        }
        Err(e) => {
            eprintln!("note: {e}");
            None
        }
    };
    Ok(Analysis { constants, delta, cone_type_count: ct.len(), deltas, tips, atom_graph, tip_graph, density, automata })
}

impl Stages {
    pub fn manifest(&self, artifacts: Vec<String>) -> Manifest {
        let a = &self.analysis;
        let levels = self
            .tree
            .levels
            .iter()
            .map(|l| LevelSummary {
                level: l.k,
                atoms: l.atoms.len(),
                finite_classes: l.finite.len(),
                gluing_pairs: a.deltas[l.k as usize].len(),
                horizontal_edges: a.atom_graph.horizontal[l.k as usize].len(),
                new_types: a.automata.as_ref().map(|s| s.types.new_per_level[l.k as usize]),
            })
            .collect();
        let mut violations = a.atom_graph.check_structure();
        violations.extend(a.tip_graph.check_structure());
        Manifest {
            source: source_label(&self.config.source),
            ball_vertices: self.ball.len(),
            ball_complete: self.ball.is_complete(),
            constants: a.constants.clone(),
            cone_types: a.cone_type_count,
            levels,
            types: a.automata.as_ref().map(|s| s.types.names.clone()),
            gluing_states: a.automata.as_ref().map(|s| s.gluing.states.len()),
            gluing_closure: a.automata.as_ref().map(|s| s.gluing.closure),
            quasi_density: a.density.clone(),
            structure_violations: violations,
            artifacts,
        }
    }
}

pub fn source_label(s: &SourceSpec) -> String {
    match s {
        SourceSpec::Tiling { p, q } => format!("tiling p={p} q={q}"),
        SourceSpec::Presentation(p) => format!("presentation {}", p.file_name().map_or_else(String::new, |n| n.to_string_lossy().into_owned())),
        SourceSpec::Graph(p) => format!("graph {}", p.file_name().map_or_else(String::new, |n| n.to_string_lossy().into_owned())),
    }
}
