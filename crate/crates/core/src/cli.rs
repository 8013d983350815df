//! Batch front end behind the `scaffold` binary.
//!
//! Every command takes scenes or graphs from files, works one scene per
//! worker, merges results in input order and writes a single output whose
//! metadata records the tool version, the effective configuration and the
//! SHA-256 of every input file. Outputs never depend on `--jobs`.
//!
//! Exit codes: 0 success, 1 validation failure, 2 usage, config or parse
//! error, 3 I/O error. Human-readable summaries go to stderr; data goes to
//! `--out` or stdout.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write as _};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::align::procrustes_align;
use crate::error::Error;
use crate::geometry::{normalize_scene, NormalizeError, NormalizedScene};
use crate::graph::{
    build_incremental, reconstruct, sample_random_triplets, scene_layout, validate, SceneGraph,
    ValidationReport, DEFAULT_DELTA,
};
use crate::localcogmap::{DecodeMode, Point2};
use crate::metrics::{evaluate, parse_predictions, write_histogram_csv, BinWidths, EvalReport, EvalSummary};
use crate::qa::{emit_grounding_qa, emit_scenegraph_qa, parse_jsonl, serialize_jsonl, QARecord};
use crate::referral::ReferralKind;
use crate::scene::{parse_scene, Scene};

pub const TOOL: &str = "scaffold";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
pub const LOG_ENV: &str = "SCAFFOLD_LOG";

#[derive(Debug, Parser)]
#[command(name = "scaffold", version, about = "Scene graph and QA dataset tooling")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build incremental scene graphs and validate them.
    BuildGraph(BuildGraphArgs),
    /// Emit scene-graph and/or grounding QA records as JSONL.
    EmitQa(EmitQaArgs),
    /// Express every box as a 7-DoF box in the unified frame.
    Normalize(NormalizeArgs),
    /// Recover BEV layouts from graphs, optionally scoring them against a reference.
    Reconstruct(ReconstructArgs),
    /// Check graphs for connectivity and rigidity.
    Validate(ValidateArgs),
    /// Score model answers against ground-truth QA records.
    Evaluate(EvaluateArgs),
    /// Draw random triplets to show how unstructured graphs fail.
    SampleTriplets(SampleArgs),
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Output file (or directory for `evaluate`); stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads; one scene per task.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
}

#[derive(Debug, Clone, Args)]
pub struct BuildGraphArgs {
    /// Scene file; repeat for several scenes.
    #[arg(long, required = true)]
    pub scene: Vec<PathBuf>,
    /// Maximum diameter of the seed triplet, meters.
    #[arg(long, default_value_t = DEFAULT_DELTA)]
    pub delta: f64,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskSel {
    Scenegraph,
    Grounding,
    All,
}

#[derive(Debug, Clone, Args)]
pub struct EmitQaArgs {
    #[arg(long, required = true)]
    pub scene: Vec<PathBuf>,
    /// Graph file from `build-graph`; graphs are built on the fly when omitted.
    #[arg(long)]
    pub graph: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = TaskSel::All)]
    pub task: TaskSel,
    #[arg(long, default_value_t = DEFAULT_DELTA)]
    pub delta: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Referral strategies in preference order, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "proximity,direction,temporal")]
    pub policy: Vec<String>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args)]
pub struct NormalizeArgs {
    #[arg(long, required = true)]
    pub scene: Vec<PathBuf>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeSel {
    Quantized,
    Continuous,
}

impl From<ModeSel> for DecodeMode {
    fn from(m: ModeSel) -> Self {
        match m {
            ModeSel::Quantized => DecodeMode::Quantized,
            ModeSel::Continuous => DecodeMode::Continuous,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct ReconstructArgs {
    #[arg(long)]
    pub graph: PathBuf,
    #[arg(long, value_enum, default_value_t = ModeSel::Quantized)]
    pub mode: ModeSel,
    /// Reference layout: a scene file (matched by scene id) or a JSON map
    /// from object id to [x, y] (only with a single graph). Repeatable.
    #[arg(long)]
    pub reference: Vec<PathBuf>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args)]
pub struct ValidateArgs {
    #[arg(long)]
    pub graph: PathBuf,
    /// Scene files supplying the full object set (matched by scene id).
    #[arg(long)]
    pub scene: Vec<PathBuf>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args)]
pub struct EvaluateArgs {
    /// Predictions JSONL: {"id": ..., "answer_text": ...} per line.
    #[arg(long)]
    pub pred: PathBuf,
    /// Ground-truth JSONL from `emit-qa`.
    #[arg(long)]
    pub gt: PathBuf,
    /// Histogram bin width for every metric; per-metric defaults otherwise.
    #[arg(long)]
    pub bin_width: Option<f64>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args)]
pub struct SampleArgs {
    #[arg(long, required = true)]
    pub scene: Vec<PathBuf>,
    /// Triplets per scene.
    #[arg(long)]
    pub k: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub common: Common,
}

/// Effective configuration of one run. Everything except the worker count
/// and the output path is recorded in output metadata.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub command: &'static str,
    pub inputs: Vec<PathBuf>,
    #[serde(skip)]
    pub output: Option<PathBuf>,
    pub delta: f64,
    pub seed: u64,
    pub policy: Vec<ReferralKind>,
    #[serde(skip)]
    pub jobs: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub task: Option<TaskSel>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mode: Option<ModeSel>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bin_widths: Option<BinWidths>,
}

impl RunConfig {
    fn new(command: &'static str, inputs: Vec<PathBuf>, common: &Common) -> Self {
        Self {
            command,
            inputs,
            output: common.out.clone(),
            delta: DEFAULT_DELTA,
            seed: 0,
            policy: ReferralKind::DEFAULT_POLICY.to_vec(),
            jobs: common.jobs,
            task: None,
            mode: None,
            k: None,
            bin_widths: None,
        }
    }

    pub fn check(&self) -> anyhow::Result<()> {
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return Err(Error::InvalidDelta(self.delta).into());
        }
        if self.jobs == 0 {
            return Err(usage("--jobs must be at least 1"));
        }
        if self.policy.is_empty() {
            return Err(usage("--policy needs at least one strategy"));
        }
        if let Some(b) = self.bin_widths {
            for w in [b.cogmap, b.grounding.center, b.grounding.size, b.grounding.yaw] {
                if !(w > 0.0 && w.is_finite()) {
                    return Err(usage("--bin-width must be positive"));
                }
            }
        }
        Ok(())
    }
}

/// Marks a run whose inputs parsed but failed a structural check.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct ValidationFailure(pub String);

#[derive(Debug, thiserror::Error)]
#[error("{0}")]
struct UsageError(String);

fn usage(msg: &str) -> anyhow::Error {
    UsageError(msg.to_owned()).into()
}

/// Maps an error to the process exit code.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    if err.downcast_ref::<io::Error>().is_some() {
        return 3;
    }
    if err.downcast_ref::<ValidationFailure>().is_some() {
        return 1;
    }
    match err.downcast_ref::<Error>() {
        Some(
            Error::TooFewObjects(_)
            | Error::NonRigid { .. }
            | Error::MissingAnchor { .. }
            | Error::DegenerateProjection
            | Error::GimbalDegenerate { .. }
            | Error::DegenerateLayout
            | Error::DegenerateAlignment,
        ) => 1,
        _ => 2,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputHash {
    pub path: PathBuf,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Meta<'a> {
    pub tool: &'static str,
    pub version: &'static str,
    pub config: &'a RunConfig,
    pub inputs: Vec<InputHash>,
}

/// Input files read once, with their hashes for the metadata header.
struct Inputs {
    hashes: Vec<InputHash>,
}

impl Inputs {
    fn new() -> Self {
        Self { hashes: Vec::new() }
    }

    fn read(&mut self, path: &Path) -> anyhow::Result<String> {
        let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
        self.hashes.push(InputHash {
            path: path.to_owned(),
            sha256: hex::encode(Sha256::digest(&bytes)),
        });
        String::from_utf8(bytes).map_err(|e| anyhow!(Error::Malformed(format!("{}: {e}", path.display()))))
    }

    fn meta<'a>(&self, config: &'a RunConfig) -> Meta<'a> {
        Meta {
            tool: TOOL,
            version: VERSION,
            config,
            inputs: self.hashes.clone(),
        }
    }

    fn scenes(&mut self, paths: &[PathBuf]) -> anyhow::Result<Vec<Scene>> {
        paths
            .iter()
            .map(|p| {
                let text = self.read(p)?;
                parse_scene(&text).with_context(|| format!("parsing {}", p.display()))
            })
            .collect()
    }

    fn graphs(&mut self, path: &Path) -> anyhow::Result<Vec<SceneGraph>> {
        let text = self.read(path)?;
        parse_graphs(&text).with_context(|| format!("parsing {}", path.display()))
    }
}

/// One graph in a graph file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphEntry {
    pub graph: SceneGraph,
    pub validation: ValidationReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
enum GraphDoc {
    File { graphs: Vec<GraphEntry> },
    Many(Vec<SceneGraph>),
    One(SceneGraph),
}

/// Reads graphs from a `build-graph` / `sample-triplets` output, a bare
/// graph, or an array of bare graphs.
pub fn parse_graphs(text: &str) -> crate::Result<Vec<SceneGraph>> {
    let doc: GraphDoc = serde_json::from_str(text).map_err(|e| Error::Malformed(e.to_string()))?;
    Ok(match doc {
        GraphDoc::File { graphs } => graphs.into_iter().map(|e| e.graph).collect(),
        GraphDoc::Many(g) => g,
        GraphDoc::One(g) => vec![g],
    })
}

fn pool(jobs: usize) -> anyhow::Result<rayon::ThreadPool> {
    Ok(rayon::ThreadPoolBuilder::new().num_threads(jobs).build()?)
}

/// Applies `f` to every item on `jobs` workers, keeping input order.
fn par_map<T: Sync, R: Send>(
    jobs: usize,
    items: &[T],
    f: impl Fn(&T) -> crate::Result<R> + Sync + Send,
) -> anyhow::Result<Vec<R>> {
    let results: Vec<crate::Result<R>> = pool(jobs)?.install(|| items.par_iter().map(&f).collect());
    Ok(results.into_iter().collect::<crate::Result<_>>()?)
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("output serialization is infallible");
    s.push('\n');
    s
}

fn emit(out: Option<&Path>, text: &str) -> anyhow::Result<()> {
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display()))?,
        None => io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

#[derive(Serialize)]
struct GraphOutput<'a> {
    meta: Meta<'a>,
    graphs: Vec<GraphEntry>,
}

fn report_line(entry: &GraphEntry) -> String {
    let v = &entry.validation;
    let mut line = format!(
        "{}: {} lcms, connected={}, rigid={}",
        entry.graph.scene_id,
        entry.graph.lcms.len(),
        v.connected,
        v.rigid
    );
    if let Some(s) = v.stalled_at {
        let _ = write!(line, ", stalled_at={s}");
    }
    if v.components.len() > 1 {
        let _ = write!(line, ", components={}", v.components.len());
    }
    line
}

fn failed_graphs(entries: &[GraphEntry]) -> Vec<&str> {
    entries
        .iter()
        .filter(|e| !(e.validation.connected && e.validation.rigid))
        .map(|e| e.graph.scene_id.as_str())
        .collect()
}

fn scene_ids(scene: &Scene) -> Vec<String> {
    let mut ids: Vec<String> = scene.objects.iter().map(|o| o.id.clone()).collect();
    ids.sort();
    ids
}

fn cmd_build_graph(args: &BuildGraphArgs) -> anyhow::Result<()> {
    let mut config = RunConfig::new("build-graph", args.scene.clone(), &args.common);
    config.delta = args.delta;
    config.check()?;
    let mut inputs = Inputs::new();
    let scenes = inputs.scenes(&args.scene)?;
    let graphs = par_map(config.jobs, &scenes, |scene| {
        let graph = build_incremental(scene, config.delta)?;
        let validation = validate(&graph.lcms, &scene_ids(scene))?;
        Ok(GraphEntry { graph, validation })
    })?;
    for g in &graphs {
        eprintln!("{}", report_line(g));
    }
    let failed: Vec<String> = failed_graphs(&graphs).into_iter().map(str::to_owned).collect();
    emit(
        config.output.as_deref(),
        &to_json(&GraphOutput {
            meta: inputs.meta(&config),
            graphs,
        }),
    )?;
    if !failed.is_empty() {
        return Err(ValidationFailure(format!("invalid graphs: {}", failed.join(", "))).into());
    }
    Ok(())
}

fn cmd_sample_triplets(args: &SampleArgs) -> anyhow::Result<()> {
    let mut config = RunConfig::new("sample-triplets", args.scene.clone(), &args.common);
    config.seed = args.seed;
    config.k = Some(args.k);
    config.check()?;
    let mut inputs = Inputs::new();
    let scenes = inputs.scenes(&args.scene)?;
    let graphs = par_map(config.jobs, &scenes, |scene| {
        let lcms = sample_random_triplets(scene, args.k, args.seed)?;
        let ids = scene_ids(scene);
        let validation = validate(&lcms, &ids)?;
        Ok(GraphEntry {
            graph: SceneGraph {
                scene_id: scene.scene_id.clone(),
                delta: None,
                placement_order: ids,
                lcms,
            },
            validation,
        })
    })?;
    // Failures are the point of this command, so they do not set the exit code.
    for g in &graphs {
        eprintln!("{}", report_line(g));
    }
    emit(
        config.output.as_deref(),
        &to_json(&GraphOutput {
            meta: inputs.meta(&config),
            graphs,
        }),
    )
}

fn cmd_validate(args: &ValidateArgs) -> anyhow::Result<()> {
    let mut all = vec![args.graph.clone()];
    all.extend(args.scene.iter().cloned());
    let config = RunConfig::new("validate", all, &args.common);
    config.check()?;
    let mut inputs = Inputs::new();
    let graphs = inputs.graphs(&args.graph)?;
    let scenes: BTreeMap<String, Scene> = inputs
        .scenes(&args.scene)?
        .into_iter()
        .map(|s| (s.scene_id.clone(), s))
        .collect();
    let entries = par_map(config.jobs, &graphs, |graph| {
        let ids = match scenes.get(&graph.scene_id) {
            Some(scene) => scene_ids(scene),
            None => {
                let mut ids = graph.placement_order.clone();
                for lcm in &graph.lcms {
                    ids.extend(lcm.ids().map(str::to_owned));
                }
                ids.sort();
                ids.dedup();
                ids
            }
        };
        Ok(GraphEntry {
            validation: validate(&graph.lcms, &ids)?,
            graph: graph.clone(),
        })
    })?;
    for e in &entries {
        eprintln!("{}", report_line(e));
    }
    #[derive(Serialize)]
    struct Row<'a> {
        scene_id: &'a str,
        #[serde(flatten)]
        report: &'a ValidationReport,
    }
    #[derive(Serialize)]
    struct Output<'a> {
        meta: Meta<'a>,
        reports: Vec<Row<'a>>,
    }
    let out = Output {
        meta: inputs.meta(&config),
        reports: entries
            .iter()
            .map(|e| Row {
                scene_id: &e.graph.scene_id,
                report: &e.validation,
            })
            .collect(),
    };
    emit(config.output.as_deref(), &to_json(&out))?;
    let failed = failed_graphs(&entries);
    if !failed.is_empty() {
        return Err(ValidationFailure(format!("invalid graphs: {}", failed.join(", "))).into());
    }
    Ok(())
}

fn cmd_emit_qa(args: &EmitQaArgs) -> anyhow::Result<()> {
    let mut all = args.scene.clone();
    all.extend(args.graph.iter().cloned());
    let mut config = RunConfig::new("emit-qa", all, &args.common);
    config.delta = args.delta;
    config.seed = args.seed;
    config.task = Some(args.task);
    config.policy = args
        .policy
        .iter()
        .map(|s| s.parse::<ReferralKind>())
        .collect::<crate::Result<_>>()?;
    config.check()?;

    let mut inputs = Inputs::new();
    let scenes = inputs.scenes(&args.scene)?;
    let graphs: Option<BTreeMap<String, SceneGraph>> = match &args.graph {
        Some(p) => Some(
            inputs
                .graphs(p)?
                .into_iter()
                .map(|g| (g.scene_id.clone(), g))
                .collect(),
        ),
        None => None,
    };
    let want_graph = matches!(args.task, TaskSel::Scenegraph | TaskSel::All);
    let want_grounding = matches!(args.task, TaskSel::Grounding | TaskSel::All);

    let per_scene = par_map(config.jobs, &scenes, |scene| {
        let mut records: Vec<QARecord> = Vec::new();
        if want_graph {
            let built;
            let graph = match &graphs {
                Some(g) => g.get(&scene.scene_id).ok_or_else(|| {
                    Error::SchemaMismatch(format!("graph file has no graph for scene `{}`", scene.scene_id))
                })?,
                None => {
                    built = build_incremental(scene, config.delta)?;
                    &built
                }
            };
            records.extend(emit_scenegraph_qa(graph, scene)?);
        }
        if want_grounding {
            let batch = emit_grounding_qa(scene, &config.policy, config.seed)?;
            for (id, why) in &batch.skipped {
                info!("{}: no referral for {id}: {why}", scene.scene_id);
            }
            records.extend(batch.records);
        }
        Ok(records)
    })?;
    let records: Vec<QARecord> = per_scene.into_iter().flatten().collect();
    eprintln!("{} records from {} scene(s)", records.len(), scenes.len());

    #[derive(Serialize)]
    struct Header<'a> {
        meta: Meta<'a>,
    }
    let mut text = serde_json::to_string(&Header {
        meta: inputs.meta(&config),
    })?;
    text.push('\n');
    text.push_str(&serialize_jsonl(&records));
    emit(config.output.as_deref(), &text)
}

fn cmd_normalize(args: &NormalizeArgs) -> anyhow::Result<()> {
    let config = RunConfig::new("normalize", args.scene.clone(), &args.common);
    config.check()?;
    let mut inputs = Inputs::new();
    let scenes = inputs.scenes(&args.scene)?;
    let results: Vec<Result<NormalizedScene, NormalizeError>> =
        pool(config.jobs)?.install(|| scenes.par_iter().map(normalize_scene).collect());
    let mut normalized = Vec::with_capacity(results.len());
    for (scene, r) in scenes.iter().zip(results) {
        match r {
            Ok(n) => normalized.push(n),
            Err(NormalizeError::Frame(e)) => {
                return Err(anyhow::Error::from(e).context(format!("scene {}", scene.scene_id)))
            }
            Err(NormalizeError::Degenerate(ids)) => {
                return Err(ValidationFailure(format!(
                    "scene {}: gimbal-degenerate boxes (yaw undefined): {}",
                    scene.scene_id,
                    ids.join(", ")
                ))
                .into())
            }
        }
    }
    #[derive(Serialize)]
    struct Output<'a> {
        meta: Meta<'a>,
        scenes: Vec<NormalizedScene>,
    }
    emit(
        config.output.as_deref(),
        &to_json(&Output {
            meta: inputs.meta(&config),
            scenes: normalized,
        }),
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReconstructedLayout {
    pub scene_id: String,
    pub positions: BTreeMap<String, Point2>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub residual: Option<f64>,
}

enum Reference {
    Scene(BTreeMap<String, BTreeMap<String, Point2>>),
    Bare(BTreeMap<String, Point2>),
}

fn cmd_reconstruct(args: &ReconstructArgs) -> anyhow::Result<()> {
    let mut all = vec![args.graph.clone()];
    all.extend(args.reference.iter().cloned());
    let mut config = RunConfig::new("reconstruct", all, &args.common);
    config.mode = Some(args.mode);
    config.check()?;
    let mut inputs = Inputs::new();
    let graphs = inputs.graphs(&args.graph)?;

    let mut by_scene = BTreeMap::new();
    let mut bare = None;
    for p in &args.reference {
        let text = inputs.read(p)?;
        let reference = match parse_scene(&text) {
            Ok(scene) => Reference::Scene(BTreeMap::from([(scene.scene_id.clone(), scene_layout(&scene))])),
            Err(_) => Reference::Bare(
                serde_json::from_str(&text)
                    .map_err(|e| Error::Malformed(format!("{}: not a scene or layout: {e}", p.display())))?,
            ),
        };
        match reference {
            Reference::Scene(m) => by_scene.extend(m),
            Reference::Bare(m) => {
                if graphs.len() != 1 || bare.is_some() {
                    return Err(usage("a bare reference layout needs exactly one graph"));
                }
                bare = Some(m);
            }
        }
    }

    let mode: DecodeMode = args.mode.into();
    let layouts = par_map(config.jobs, &graphs, |graph| {
        let positions = reconstruct(graph, mode)?;
        let reference = by_scene.get(&graph.scene_id).or(bare.as_ref());
        let residual = match reference {
            Some(r) => Some(procrustes_align(&positions, r)?.rms),
            None => None,
        };
        Ok(ReconstructedLayout {
            scene_id: graph.scene_id.clone(),
            positions,
            residual,
        })
    })?;
    for l in &layouts {
        match l.residual {
            Some(r) => eprintln!("{}: rms residual {r:e}", l.scene_id),
            None => eprintln!("{}: {} positions", l.scene_id, l.positions.len()),
        }
    }
    #[derive(Serialize)]
    struct Output<'a> {
        meta: Meta<'a>,
        layouts: Vec<ReconstructedLayout>,
    }
    emit(
        config.output.as_deref(),
        &to_json(&Output {
            meta: inputs.meta(&config),
            layouts,
        }),
    )
}

fn csv_with_header(meta: &Meta<'_>, summary: &EvalSummary) -> String {
    let mut out = format!("# {} {}\n", meta.tool, meta.version);
    let _ = writeln!(out, "# config {}", serde_json::to_string(meta.config).expect("config serializes"));
    for h in &meta.inputs {
        let _ = writeln!(out, "# input {} sha256 {}", h.path.display(), h.sha256);
    }
    out.push_str(&write_histogram_csv(summary));
    out
}

fn cmd_evaluate(args: &EvaluateArgs) -> anyhow::Result<()> {
    let mut config = RunConfig::new("evaluate", vec![args.pred.clone(), args.gt.clone()], &args.common);
    config.bin_widths = Some(args.bin_width.map(BinWidths::uniform).unwrap_or_default());
    config.check()?;
    let dir = config
        .output
        .clone()
        .ok_or_else(|| usage("evaluate needs --out <directory>"))?;
    let mut inputs = Inputs::new();
    let preds = parse_predictions(&inputs.read(&args.pred)?)?;
    let gts = parse_jsonl(&inputs.read(&args.gt)?)?;
    let report: EvalReport = pool(config.jobs)?.install(|| evaluate(&preds, &gts, config.bin_widths.unwrap()))?;

    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    let meta = inputs.meta(&config);
    let write = |name: &str, text: String| -> anyhow::Result<()> {
        let p = dir.join(name);
        fs::write(&p, text).with_context(|| format!("writing {}", p.display()))?;
        Ok(())
    };
    if let Some(s) = &report.cogmap {
        write("cogmap_error.csv", csv_with_header(&meta, s))?;
    }
    if let Some(g) = &report.grounding {
        write("grounding_center.csv", csv_with_header(&meta, &g.center))?;
        write("grounding_size.csv", csv_with_header(&meta, &g.size))?;
        write("grounding_yaw.csv", csv_with_header(&meta, &g.yaw))?;
    }
    #[derive(Serialize)]
    struct Output<'a> {
        meta: &'a Meta<'a>,
        no_parse_rate: f64,
        report: &'a EvalReport,
    }
    write(
        "evaluation.json",
        to_json(&Output {
            meta: &meta,
            no_parse_rate: report.no_parse_rate(),
            report: &report,
        }),
    )?;
    eprintln!("no-parse rate: {:.4}", report.no_parse_rate());
    if let Some(s) = &report.cogmap {
        eprintln!("cogmap mean error: {}", s.mean_error);
    }
    if let Some(g) = &report.grounding {
        eprintln!(
            "grounding mean errors: center {} size {} yaw {}",
            g.center.mean_error, g.size.mean_error, g.yaw.mean_error
        );
    }
    Ok(())
}

/// Runs one parsed command line.
pub fn run(cli: &Cli) -> anyhow::Result<()> {
    match &cli.command {
        Command::BuildGraph(a) => cmd_build_graph(a),
        Command::EmitQa(a) => cmd_emit_qa(a),
        Command::Normalize(a) => cmd_normalize(a),
        Command::Reconstruct(a) => cmd_reconstruct(a),
        Command::Validate(a) => cmd_validate(a),
        Command::Evaluate(a) => cmd_evaluate(a),
        Command::SampleTriplets(a) => cmd_sample_triplets(a),
    }
}

/// Entry point for the binary; returns the exit code.
pub fn main() -> i32 {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or(LOG_ENV, "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => 2,
            };
        }
    };
    match run(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e:#}");
            exit_code(&e)
        }
    }
}
