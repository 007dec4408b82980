//! Command-line front end. Configuration is layered: built-in defaults,
//! then an optional `--config` JSON file, then flags.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::datagen::{
    gen_image_dataset, gen_response_data, gen_vector_dataset, GeneratorConfig, PlantedTruth,
    Preset,
};
use crate::io;
use crate::nn::{Checkpoint, NetworkConfig, SoftDirection};
use crate::pipeline::{score_regions, fuse_regions, CropConfig, NetworkScorer, PipelineConfig, RegionScore};
use crate::report;
use crate::select::{greedy_select, SelectionProblem, DEFAULT_K_OBJECTS, DEFAULT_LAMBDA};
use crate::stats::{bayes_posterior, estimate_conditional, ConceptKind, EventLabels};
use crate::train::{train_with_observer, AuxTask, Split, TransferConfig, TransferMode};

pub const RESOLVED_CONFIG: &str = "resolved_config.json";

#[derive(Debug, Parser)]
#[command(name = "os2e", version, about = "Object/scene to event transfer toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Estimate p(concept|event), the posterior and its entropies.
    Stats(StatsArgs),
    /// Pick a discriminative, diverse subset of concept classes.
    Select(SelectArgs),
    /// Fine-tune a network on an event dataset.
    Train(TrainArgs),
    /// Score images with the multi-region pipeline.
    Infer(InferArgs),
    /// Write a synthetic dataset.
    Gen(GenArgs),
    /// Summarize the outputs of earlier runs.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
struct Common {
    /// JSON file with any subset of the resolved configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, alias = "out-dir")]
    out: Option<PathBuf>,
    #[arg(short, long, action = clap::ArgAction::Count)]
    verbose: u8,
}

#[derive(Debug, Args)]
struct StatsArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    responses: Option<PathBuf>,
    #[arg(long)]
    labels: Option<PathBuf>,
    #[arg(long)]
    kind: Option<ConceptKind>,
}

#[derive(Debug, Args)]
struct SelectArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    table: Option<PathBuf>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    k: Option<usize>,
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    mode: Option<TransferMode>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    /// Iterations between learning-rate decays; training runs 2.5x this.
    #[arg(long = "schedule")]
    schedule_k: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    dropout: Option<f64>,
    #[arg(long)]
    eval_every: Option<usize>,
    #[arg(long)]
    soft_direction: Option<SoftDirection>,
    /// Hidden widths of a fresh trunk, comma separated; ignored with --source.
    #[arg(long, value_delimiter = ',')]
    hidden: Option<Vec<usize>>,
    #[arg(long)]
    train: Option<PathBuf>,
    #[arg(long)]
    test: Option<PathBuf>,
    /// Source checkpoint whose trunk initializes the network.
    #[arg(long)]
    source: Option<PathBuf>,
    #[arg(long)]
    soft_targets: Option<PathBuf>,
    #[arg(long)]
    aux: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct InferArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    checkpoint_o: Option<PathBuf>,
    #[arg(long)]
    checkpoint_s: Option<PathBuf>,
    #[arg(long)]
    image_dir: Option<PathBuf>,
    /// JSON file holding a crop configuration.
    #[arg(long)]
    crop_config: Option<PathBuf>,
    #[arg(long)]
    alpha_o: Option<f64>,
    #[arg(long)]
    alpha_s: Option<f64>,
}

#[derive(Debug, Args)]
struct GenArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    preset: Option<Preset>,
}

#[derive(Debug, Args)]
struct ReportArgs {
    #[command(flatten)]
    common: Common,
    /// Run directories to summarize.
    artifacts: Vec<PathBuf>,
    #[arg(long)]
    top_k: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StatsSection {
    pub responses: Option<PathBuf>,
    pub labels: Option<PathBuf>,
    pub kind: ConceptKind,
}

impl Default for StatsSection {
    fn default() -> Self {
        Self {
            responses: None,
            labels: None,
            kind: ConceptKind::Object,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SelectSection {
    pub table: Option<PathBuf>,
    pub lambda: f64,
    pub k: usize,
}

impl Default for SelectSection {
    fn default() -> Self {
        Self {
            table: None,
            lambda: DEFAULT_LAMBDA,
            k: DEFAULT_K_OBJECTS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainSection {
    pub transfer: TransferConfig,
    pub hidden: Vec<usize>,
    pub train: Option<PathBuf>,
    pub test: Option<PathBuf>,
    pub source: Option<PathBuf>,
    pub soft_targets: Option<PathBuf>,
    pub aux: Option<PathBuf>,
}

impl Default for TrainSection {
    fn default() -> Self {
        Self {
            transfer: TransferConfig::default(),
            hidden: vec![128],
            train: None,
            test: None,
            source: None,
            soft_targets: None,
            aux: None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct InferSection {
    pub pipeline: PipelineConfig,
    pub checkpoint_o: Option<PathBuf>,
    pub checkpoint_s: Option<PathBuf>,
    pub image_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GenSection {
    pub preset: Preset,
    /// Filled from the preset when absent.
    pub generator: Option<GeneratorConfig>,
}

impl Default for GenSection {
    fn default() -> Self {
        Self {
            preset: Preset::Responses,
            generator: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ReportSection {
    pub artifacts: Vec<PathBuf>,
    pub top_k: usize,
}

impl Default for ReportSection {
    fn default() -> Self {
        Self {
            artifacts: Vec::new(),
            top_k: 5,
        }
    }
}

/// Everything a run depends on. The global seed overrides the seeds of the
/// module sections.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub command: String,
    pub seed: u64,
    pub verbosity: u8,
    pub out: PathBuf,
    pub stats: StatsSection,
    pub select: SelectSection,
    pub train: TrainSection,
    pub infer: InferSection,
    pub gen: GenSection,
    pub report: ReportSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            command: String::new(),
            seed: 0,
            verbosity: 0,
            out: PathBuf::from("out"),
            stats: StatsSection::default(),
            select: SelectSection::default(),
            train: TrainSection::default(),
            infer: InferSection::default(),
            gen: GenSection::default(),
            report: ReportSection::default(),
        }
    }
}

macro_rules! set {
    ($target:expr, $flag:expr) => {
        if let Some(v) = $flag {
            $target = v;
        }
    };
    (opt $target:expr, $flag:expr) => {
        if let Some(v) = $flag {
            $target = Some(v);
        }
    };
}

fn base_config(command: &str, common: &Common) -> anyhow::Result<RunConfig> {
    let mut config: RunConfig = match &common.config {
        Some(path) => io::read_json(path)?,
        None => RunConfig::default(),
    };
    config.command = command.to_owned();
    set!(config.seed, common.seed);
    set!(config.out, common.out.clone());
    config.verbosity = config.verbosity.max(common.verbose);
    Ok(config)
}

fn resolve(cli: Cli) -> anyhow::Result<RunConfig> {
    let mut c = match &cli.command {
        Command::Stats(a) => {
            let mut c = base_config("stats", &a.common)?;
            set!(opt c.stats.responses, a.responses.clone());
            set!(opt c.stats.labels, a.labels.clone());
            set!(c.stats.kind, a.kind);
            c
        }
        Command::Select(a) => {
            let mut c = base_config("select", &a.common)?;
            set!(opt c.select.table, a.table.clone());
            set!(c.select.lambda, a.lambda);
            set!(c.select.k, a.k);
            c
        }
        Command::Train(a) => {
            let mut c = base_config("train", &a.common)?;
            let t = &mut c.train;
            set!(t.transfer.mode, a.mode);
            set!(t.transfer.alpha, a.alpha);
            set!(t.transfer.beta, a.beta);
            set!(t.transfer.schedule.period, a.schedule_k);
            set!(t.transfer.schedule.initial_lr, a.lr);
            set!(t.transfer.batch_size, a.batch_size);
            set!(t.transfer.dropout_rate, a.dropout);
            set!(t.transfer.eval_every, a.eval_every);
            set!(t.transfer.soft_direction, a.soft_direction);
            set!(t.hidden, a.hidden.clone());
            set!(opt t.train, a.train.clone());
            set!(opt t.test, a.test.clone());
            set!(opt t.source, a.source.clone());
            set!(opt t.soft_targets, a.soft_targets.clone());
            set!(opt t.aux, a.aux.clone());
            c
        }
        Command::Infer(a) => {
            let mut c = base_config("infer", &a.common)?;
            if let Some(path) = &a.crop_config {
                c.infer.pipeline.crop = io::read_json::<CropConfig>(path)?;
            }
            set!(opt c.infer.checkpoint_o, a.checkpoint_o.clone());
            set!(opt c.infer.checkpoint_s, a.checkpoint_s.clone());
            set!(opt c.infer.image_dir, a.image_dir.clone());
            set!(c.infer.pipeline.alpha_o, a.alpha_o);
            set!(c.infer.pipeline.alpha_s, a.alpha_s);
            c
        }
        Command::Gen(a) => {
            let mut c = base_config("gen", &a.common)?;
            if let Some(p) = a.preset {
                if p != c.gen.preset {
                    c.gen.generator = None;
                }
                c.gen.preset = p;
            }
            c
        }
        Command::Report(a) => {
            let mut c = base_config("report", &a.common)?;
            if !a.artifacts.is_empty() {
                c.report.artifacts = a.artifacts.clone();
            }
            set!(c.report.top_k, a.top_k);
            c
        }
    };
    c.train.transfer.seed = c.seed;
    let mut generator = c
        .gen
        .generator
        .take()
        .unwrap_or_else(|| GeneratorConfig::preset(c.gen.preset));
    generator.seed = c.seed;
    c.gen.generator = Some(generator);
    Ok(c)
}

/// Runs one command line and returns the process exit code: 0 on success,
/// 1 on a failed run, 2 on a usage error.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let config = match resolve(cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {}", one_line(&e));
            return 1;
        }
    };
    init_logging(config.verbosity);
    init_threads();
    match execute(&config) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {}", one_line(&e));
            1
        }
    }
}

fn one_line(e: &anyhow::Error) -> String {
    let mut line = String::new();
    for cause in e.chain() {
        let text = cause.to_string();
        // io errors already embed their source in the message
        if line.contains(&text) {
            continue;
        }
        if !line.is_empty() {
            line.push_str(": ");
        }
        line.push_str(&text);
    }
    line.replace('\n', " ")
}

fn init_logging(verbosity: u8) {
    let level = match verbosity {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    let _ = env_logger::Builder::new()
        .filter_level(level)
        .parse_env("OS2E_LOG")
        .try_init();
}

fn init_threads() {
    if let Some(n) = std::env::var("OS2E_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&n| n > 0)
    {
        // fails harmlessly when the pool was already set up in this process
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}

pub fn execute(config: &RunConfig) -> anyhow::Result<()> {
    if config.command == "report" {
        return report::run_report(config);
    }
    fs::create_dir_all(&config.out)
        .with_context(|| format!("creating {}", config.out.display()))?;
    match config.command.as_str() {
        "stats" => run_stats(config)?,
        "select" => run_select(config)?,
        "train" => run_train(config)?,
        "infer" => run_infer(config)?,
        "gen" => run_gen(config)?,
        other => bail!("unknown command {other:?}"),
    }
    io::write_json(&config.out.join(RESOLVED_CONFIG), config)?;
    Ok(())
}

fn required<'a>(value: &'a Option<PathBuf>, flag: &str) -> anyhow::Result<&'a Path> {
    value
        .as_deref()
        .with_context(|| format!("missing --{flag}"))
}

fn run_stats(config: &RunConfig) -> anyhow::Result<()> {
    let s = &config.stats;
    let (ids, responses) = io::read_responses_csv(required(&s.responses, "responses")?, s.kind)?;
    let (label_ids, labels) = io::read_labels_csv(required(&s.labels, "labels")?, None)?;
    let labels = io::align_labels(&ids, &label_ids, &labels)?;
    let table = estimate_conditional(&responses, &labels)?;
    let post = bayes_posterior(&table);
    let out = &config.out;
    io::write_conditional_table(&out.join("conditional_table.json"), &table, responses.class_ids())?;
    io::write_json(&out.join("posterior_table.json"), &post)?;

    let mut w = csv::Writer::from_path(out.join("entropy.csv"))?;
    w.write_record(["class_id", "entropy_bits", "marginal", "undefined"])?;
    let entropies = post.entropies();
    for (c, id) in responses.class_ids().iter().enumerate() {
        w.write_record([
            id.clone(),
            entropies[c].to_string(),
            post.marginal()[c].to_string(),
            post.undefined_mask()[c].to_string(),
        ])?;
    }
    w.flush()?;
    log::info!(
        "{} images, {} classes, {} events",
        responses.n_images(),
        responses.n_classes(),
        labels.n_events()
    );
    Ok(())
}

fn run_select(config: &RunConfig) -> anyhow::Result<()> {
    let s = &config.select;
    let (table, class_ids) = io::read_conditional_table(required(&s.table, "table")?)?;
    let problem = SelectionProblem::new(bayes_posterior(&table), s.lambda, s.k)?;
    let result = greedy_select(&problem)?;
    io::write_json(&config.out.join("selection.json"), &result)?;
    io::write_selection_csv(
        &config.out.join("selection.csv"),
        &result,
        &class_ids,
        problem.phi(),
    )?;
    log::info!("selected {:?} with energy {}", result.selected, result.energy);
    Ok(())
}

fn run_train(config: &RunConfig) -> anyhow::Result<()> {
    let t = &config.train;
    let tc = &t.transfer;
    let train_path = required(&t.train, "train")?;
    let test_path = required(&t.test, "test")?;
    let train0 = io::read_dataset_csv(train_path, "train", Split::Train, None)?;
    let test0 = io::read_dataset_csv(test_path, "test", Split::Test, None)?;
    let m = train0.n_classes().max(test0.n_classes());
    let train = io::read_dataset_csv(train_path, "train", Split::Train, Some(m))?;
    let test = io::read_dataset_csv(test_path, "test", Split::Test, Some(m))?;

    let source = match &t.source {
        Some(p) => io::read_checkpoint(p)?,
        None => Checkpoint::init(NetworkConfig::new(train.dim(), t.hidden.clone(), vec![m]), tc.seed)?,
    };
    let soft;
    let aux_data;
    let aux = match tc.mode {
        TransferMode::Init => AuxTask::None,
        TransferMode::Knowledge => {
            soft = io::read_soft_targets_csv(required(&t.soft_targets, "soft-targets")?)?;
            AuxTask::Soft(&soft)
        }
        TransferMode::Data => {
            aux_data = io::read_dataset_csv(required(&t.aux, "aux")?, "aux", Split::Train, None)?;
            AuxTask::Data(&aux_data)
        }
    };
    let mut outcome = train_with_observer(&source, &train, &test, aux, tc, &mut |_, _| {})?;
    let ckpt_path = config.out.join("checkpoint.json");
    io::write_json(&ckpt_path, &outcome.checkpoint)?;
    outcome.report.checkpoint = Some("checkpoint.json".into());
    io::write_json(&config.out.join("report.json"), &outcome.report)?;
    io::write_curve_csv(&config.out.join("curve.csv"), &outcome.report)?;
    let last = outcome.report.final_point();
    log::info!(
        "{} mode: test acc {:.4}, mAP {:.4}",
        tc.mode,
        last.test_acc,
        last.test_map
    );
    Ok(())
}

#[derive(Serialize)]
struct ImageRegions<'a> {
    image_id: &'a str,
    regions: &'a [RegionScore],
}

fn run_infer(config: &RunConfig) -> anyhow::Result<()> {
    let i = &config.infer;
    let object = NetworkScorer::new(io::read_checkpoint(required(&i.checkpoint_o, "checkpoint-o")?)?)?;
    let scene = NetworkScorer::new(io::read_checkpoint(required(&i.checkpoint_s, "checkpoint-s")?)?)?;
    let images = io::read_image_dir(required(&i.image_dir, "image-dir")?)?;
    if images.is_empty() {
        bail!("no .img files in the image directory");
    }
    let mut ids = Vec::with_capacity(images.len());
    let mut all_regions = Vec::with_capacity(images.len());
    let mut rows = Vec::with_capacity(images.len());
    for (id, image) in &images {
        let regions = score_regions(image, &i.pipeline, &object, &scene)
            .with_context(|| format!("image {id}"))?;
        rows.push(fuse_regions(&regions)?);
        all_regions.push(regions);
        ids.push(id.clone());
    }
    let m = rows[0].len();
    let scores = Array2::from_shape_vec((rows.len(), m), rows.concat())?;
    io::write_scores_csv(&config.out.join("scores.csv"), &ids, &scores)?;
    let dump: Vec<ImageRegions> = ids
        .iter()
        .zip(&all_regions)
        .map(|(id, r)| ImageRegions {
            image_id: id,
            regions: r,
        })
        .collect();
    io::write_json(&config.out.join("regions.json"), &dump)?;
    Ok(())
}

#[derive(Serialize)]
struct Manifest<'a> {
    preset: Preset,
    files: Vec<String>,
    n_train: usize,
    truth: &'a PlantedTruth,
}

fn run_gen(config: &RunConfig) -> anyhow::Result<()> {
    let g = config
        .gen
        .generator
        .as_ref()
        .context("generator config was not resolved")?;
    let out = &config.out;
    let truth;
    let mut files: Vec<String> = Vec::new();
    match config.gen.preset {
        Preset::Responses => {
            let data = gen_response_data(g)?;
            io::write_responses_csv(&out.join("object_responses.csv"), &data.image_ids, &data.object)?;
            io::write_responses_csv(&out.join("scene_responses.csv"), &data.image_ids, &data.scene)?;
            io::write_labels_csv(&out.join("labels.csv"), &data.image_ids, &data.labels)?;
            files.extend(["object_responses.csv", "scene_responses.csv", "labels.csv"].map(String::from));
            truth = data.truth;
        }
        Preset::Vectors => {
            truth = PlantedTruth::plant(g)?;
            let data = gen_vector_dataset(g, &truth)?;
            io::write_dataset_csv(&out.join("train.csv"), &data.train)?;
            io::write_dataset_csv(&out.join("test.csv"), &data.test)?;
            io::write_dataset_csv(&out.join("aux.csv"), &data.aux)?;
            io::write_soft_targets_csv(&out.join("soft_targets.csv"), &data.soft_targets)?;
            files.extend(["train.csv", "test.csv", "aux.csv", "soft_targets.csv"].map(String::from));
        }
        Preset::Images => {
            truth = PlantedTruth::plant(g)?;
            let set = gen_image_dataset(g, &truth)?;
            let dir = out.join("images");
            fs::create_dir_all(&dir)?;
            let ids: Vec<String> = (0..set.images.len()).map(|i| format!("img_{i:05}")).collect();
            for (id, image) in ids.iter().zip(&set.images) {
                io::write_image(&dir.join(format!("{id}.img")), image)?;
                files.push(format!("images/{id}.img"));
            }
            let labels = EventLabels::new(set.labels.clone(), set.n_classes)?;
            io::write_labels_csv(&out.join("image_labels.csv"), &ids, &labels)?;
            files.push("image_labels.csv".into());
        }
    }
    io::write_json(
        &out.join("manifest.json"),
        &Manifest {
            preset: config.gen.preset,
            files,
            n_train: g.n_train,
            truth: &truth,
        },
    )?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> RunConfig {
        resolve(Cli::try_parse_from(args).unwrap()).unwrap()
    }

    #[test]
    fn flags_override_file_which_overrides_defaults() {
        let dir = tempfile::tempdir().unwrap();
        let file = dir.path().join("c.json");
        fs::write(
            &file,
            r#"{"seed": 3, "train": {"transfer": {"alpha": 0.5, "beta": 0.9}}}"#,
        )
        .unwrap();
        let c = parse(&["os2e", "train", "--config", file.to_str().unwrap(), "--beta", "0.1"]);
        assert_eq!(c.seed, 3);
        assert_eq!(c.train.transfer.seed, 3);
        assert_eq!(c.train.transfer.alpha, 0.5);
        assert_eq!(c.train.transfer.beta, 0.1);
        assert_eq!(c.train.transfer.momentum, 0.9);
        assert_eq!(c.train.hidden, vec![128]);
    }

    #[test]
    fn resolved_config_round_trips() {
        let c = parse(&["os2e", "gen", "--preset", "vectors", "--seed", "9"]);
        let g = c.gen.generator.as_ref().unwrap();
        assert_eq!(g.n_train, 64);
        assert_eq!(g.seed, 9);
        let text = serde_json::to_string(&c).unwrap();
        let back: RunConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn usage_errors_exit_2() {
        assert_eq!(run(["os2e", "select", "--bogus"]), 2);
        assert_eq!(run(["os2e", "frobnicate"]), 2);
    }
}
