//! Command-line pipeline: `import`, `synth`, `transform`, `train`, `eval`
//! and `sweep`.
//!
//! Every command resolves its config (file, then flags), derives a run id
//! from the config and the digests of its inputs, stages its outputs in a
//! hidden directory and moves them into the output directory only when the
//! command succeeds. A failed command leaves a `FAILED-<command>.txt` marker
//! with the diagnostic instead.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use ramanscope_core::cwt::{scalogram_image, TransformConfig};
use ramanscope_core::dataset::{build_dataset, Multiplicity};
use ramanscope_core::dcnn::{self, LabeledImages, TrainError};
use ramanscope_core::eval::{self, confusion, metrics, Predictor, SweepCurve};
use ramanscope_core::manifest::Source;
use ramanscope_core::materials::{self, BUNDLED};
use ramanscope_core::ml::{self, FeatureSet, MlKind, MlModel};
use ramanscope_core::noise::Scenario;
use ramanscope_core::seed;
use ramanscope_core::{DatasetManifest, ManifestEntry, ScalogramImage, Spectrum, Split};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{run_id, sha256_hex, ConfigError, Overrides, RunConfig, SnrTarget};
use crate::model_io::{self, AnyModel, ModelFile};
use crate::report;
use crate::rruff;
use crate::store::{self, ImageRow, ImageStore, ImageStoreMeta};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ScenarioArg {
    Clean,
    Gn,
    Bb,
    Gb,
}

impl From<ScenarioArg> for Scenario {
    fn from(s: ScenarioArg) -> Self {
        match s {
            ScenarioArg::Clean => Scenario::Clean,
            ScenarioArg::Gn => Scenario::Gn,
            ScenarioArg::Bb => Scenario::Bb,
            ScenarioArg::Gb => Scenario::Gb,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ClassifierArg {
    Nb,
    Knn,
    Rf,
    Svm,
    Dcnn,
}

impl ClassifierArg {
    fn ml_kind(self) -> Option<MlKind> {
        match self {
            ClassifierArg::Nb => Some(MlKind::Nb),
            ClassifierArg::Knn => Some(MlKind::Knn),
            ClassifierArg::Rf => Some(MlKind::Rf),
            ClassifierArg::Svm => Some(MlKind::Svm),
            ClassifierArg::Dcnn => None,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "ramanscope", version, about = "Raman spectrum classification from wavelet scalograms")]
pub struct Cli {
    /// TOML run configuration; every field is optional.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Master seed; also replaces the forest and network seeds.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub scenario: Option<ScenarioArg>,
    /// Lower SNR bound: the test set for `synth`, the sweep range for `sweep`.
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub snr_min: Option<f64>,
    /// Upper SNR bound: the test set for `synth`, the sweep range for `sweep`.
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub snr_max: Option<f64>,
    #[arg(long, global = true, value_enum)]
    pub classifier: Option<ClassifierArg>,
    /// Scalogram image side in pixels.
    #[arg(long, global = true)]
    pub image_side: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse RRUFF text files into a manifest of clean originals.
    Import {
        #[arg(required = true)]
        files: Vec<PathBuf>,
    },
    /// Build noisy train/test spectra from the originals.
    Synth,
    /// Render a dataset directory into scalogram images.
    Transform {
        #[arg(long)]
        dataset: PathBuf,
    },
    /// Train one classifier on the training split of an image store.
    Train {
        #[arg(long)]
        images: PathBuf,
    },
    /// Evaluate a model on the test split of an image store.
    Eval {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        images: PathBuf,
    },
    /// Accuracy against SNR for one or more models on freshly generated
    /// test sets.
    Sweep {
        #[arg(long = "model", required = true)]
        models: Vec<PathBuf>,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Import { .. } => "import",
            Command::Synth => "synth",
            Command::Transform { .. } => "transform",
            Command::Train { .. } => "train",
            Command::Eval { .. } => "eval",
            Command::Sweep { .. } => "sweep",
        }
    }
}

/// Exit codes.
pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_DIVERGED: i32 = 3;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(String),
    Diverged(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Data(_) => EXIT_DATA,
            CliError::Diverged(_) => EXIT_DIVERGED,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Data(m) | CliError::Diverged(m) => m,
        }
    }
}

fn data(e: impl std::fmt::Display) -> CliError {
    CliError::Data(e.to_string())
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        match e {
            ConfigError::Io { .. } => CliError::Data(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

/// What a successful command produced.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub run_id: String,
    /// Final paths of every output, in creation order.
    pub outputs: Vec<PathBuf>,
}

#[derive(Serialize)]
struct RunRecord<'a> {
    command: &'a str,
    run_id: &'a str,
    inputs: Vec<InputRecord>,
    config: &'a RunConfig,
}

#[derive(Serialize)]
struct InputRecord {
    path: String,
    sha256: String,
}

/// Outputs are written into a staging directory and renamed into place.
struct Staging {
    out_dir: PathBuf,
    dir: PathBuf,
    names: Vec<String>,
}

impl Staging {
    fn new(out_dir: &Path, command: &str, run_id: &str) -> Result<Self, CliError> {
        let dir = out_dir.join(format!(".staging-{command}-{run_id}"));
        if dir.exists() {
            fs::remove_dir_all(&dir).map_err(|e| data(format!("{}: {e}", dir.display())))?;
        }
        fs::create_dir_all(&dir).map_err(|e| data(format!("{}: {e}", dir.display())))?;
        Ok(Self { out_dir: out_dir.to_path_buf(), dir, names: Vec::new() })
    }

    /// Path inside the staging area for an output called `name`.
    fn path(&mut self, name: String) -> PathBuf {
        let p = self.dir.join(&name);
        self.names.push(name);
        p
    }

    fn text(&mut self, name: String, text: &str) -> Result<(), CliError> {
        let p = self.path(name);
        report::write(&p, text).map_err(data)
    }

    fn commit(self) -> Result<Vec<PathBuf>, CliError> {
        let mut out = Vec::new();
        for name in &self.names {
            let target = self.out_dir.join(name);
            if target.is_dir() {
                fs::remove_dir_all(&target).map_err(|e| data(format!("{}: {e}", target.display())))?;
            }
            fs::rename(self.dir.join(name), &target).map_err(|e| data(format!("{}: {e}", target.display())))?;
            out.push(target);
        }
        fs::remove_dir_all(&self.dir).map_err(|e| data(format!("{}: {e}", self.dir.display())))?;
        Ok(out)
    }
}

impl Drop for Staging {
    fn drop(&mut self) {
        let _ = fs::remove_dir_all(&self.dir);
    }
}

fn file_digest(path: &Path) -> Result<String, CliError> {
    let bytes = fs::read(path).map_err(|e| data(format!("{}: {e}", path.display())))?;
    Ok(sha256_hex(&bytes))
}

/// Digest over every file below `dir`, keyed by relative path.
fn dir_digest(dir: &Path) -> Result<String, CliError> {
    let mut acc = Vec::new();
    for f in store::files_sorted(dir).map_err(data)? {
        let rel = f.strip_prefix(dir).unwrap_or(&f);
        acc.extend_from_slice(rel.to_string_lossy().as_bytes());
        acc.push(0);
        acc.extend_from_slice(file_digest(&f)?.as_bytes());
        acc.push(b'\n');
    }
    Ok(sha256_hex(&acc))
}

fn digest_of<T: Serialize>(value: &T) -> String {
    sha256_hex(&serde_json::to_vec(value).expect("serializable"))
}

fn resolve_config(cli: &Cli, snr: SnrTarget) -> Result<RunConfig, CliError> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let o = Overrides {
        seed: cli.seed,
        out_dir: cli.out.clone(),
        scenario: cli.scenario.map(Into::into),
        snr_min: cli.snr_min,
        snr_max: cli.snr_max,
        image_side: cli.image_side,
    };
    cfg.apply(&o, snr);
    cfg.validate()?;
    Ok(cfg)
}

/// Clean originals named by `paths.originals`, or the bundled profiles with
/// `spectra.originals_per_class` variants each.
pub fn originals(cfg: &RunConfig) -> Result<(Vec<String>, Vec<Spectrum>), CliError> {
    match &cfg.paths.originals {
        Some(path) => {
            let m = store::load_manifest(path).map_err(data)?;
            let base = path.parent().unwrap_or(Path::new("."));
            let spectra = store::load_originals(&m, base, cfg.spectra.grid_len).map_err(data)?;
            Ok((m.class_names, spectra))
        }
        None => Ok((materials::bundled_class_names(), bundled_originals(cfg.spectra.originals_per_class, cfg.seed, cfg.spectra.grid_len)?)),
    }
}

pub fn bundled_originals(per_class: u32, seed: u64, grid_len: usize) -> Result<Vec<Spectrum>, CliError> {
    let mut out = Vec::new();
    for m in &BUNDLED {
        for v in 0..per_class {
            let mut s = m.original(v, seed, grid_len).map_err(data)?;
            s.source_id = format!("{}-{v}", m.name.to_lowercase());
            out.push(s);
        }
    }
    Ok(out)
}

/// Renders spectra to images in parallel; output order matches input order.
pub fn render_all(spectra: &[&Spectrum], transform: &TransformConfig) -> Result<Vec<(ScalogramImage, bool)>, CliError> {
    spectra
        .par_iter()
        .map(|s| scalogram_image(s.intensities(), transform).map(|r| (r.image, r.degenerate)))
        .collect::<Result<Vec<_>, _>>()
        .map_err(data)
}

pub fn feature_set(images: &[ScalogramImage], labels: &[usize], n_classes: usize) -> Result<FeatureSet, CliError> {
    let rows: Vec<Vec<f64>> = images.par_iter().map(ml::features).collect();
    FeatureSet::from_rows(&rows, labels, n_classes).map_err(data)
}

pub fn run(cli: &Cli) -> Result<Outcome, CliError> {
    match &cli.command {
        Command::Import { files } => cmd_import(cli, files),
        Command::Synth => cmd_synth(cli),
        Command::Transform { dataset } => cmd_transform(cli, dataset),
        Command::Train { images } => cmd_train(cli, images),
        Command::Eval { model, images } => cmd_eval(cli, model, images),
        Command::Sweep { models } => cmd_sweep(cli, models),
    }
}

fn finish(
    mut staging: Staging,
    command: &str,
    id: &str,
    inputs: Vec<InputRecord>,
    cfg: &RunConfig,
) -> Result<Outcome, CliError> {
    let record = RunRecord { command, run_id: id, inputs, config: cfg };
    let text = toml::to_string(&record).map_err(data)?;
    staging.text(format!("run-{command}-{id}.toml"), &text)?;
    Ok(Outcome { run_id: id.to_string(), outputs: staging.commit()? })
}

fn sanitize(s: &str) -> String {
    s.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' }).collect()
}

fn cmd_import(cli: &Cli, files: &[PathBuf]) -> Result<Outcome, CliError> {
    let cfg = resolve_config(cli, SnrTarget::TestSet)?;
    let mut parsed = Vec::new();
    let mut inputs = Vec::new();
    for f in files {
        let r = rruff::read_rruff(f).map_err(data)?;
        if r.spectrum.label.is_none() {
            return Err(data(format!("{}: no ##NAMES label", f.display())));
        }
        inputs.push(InputRecord { path: f.display().to_string(), sha256: file_digest(f)? });
        parsed.push((f, r));
    }
    let mut class_names: Vec<String> = parsed.iter().filter_map(|(_, r)| r.spectrum.label.clone()).collect();
    class_names.sort();
    class_names.dedup();

    let digests: Vec<String> = inputs.iter().map(|i| i.sha256.clone()).collect();
    let id = run_id("import", &cfg, &digests);
    let mut staging = Staging::new(&cfg.paths.out_dir, "import", &id)?;
    let root = staging.path(format!("originals-{id}"));
    let mut manifest = DatasetManifest { class_names, entries: Vec::new() };
    for (i, (f, r)) in parsed.iter().enumerate() {
        let stem = f.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        let entry_id = format!("{i:04}-{}", sanitize(&stem));
        let rel = format!("spectra/{entry_id}.txt");
        store::write_bytes(&root.join(&rel), rruff::write_rruff(&r.spectrum, &r.metadata).as_bytes()).map_err(data)?;
        manifest.entries.push(ManifestEntry {
            id: entry_id,
            source: Source::File { path: rel },
            label: r.spectrum.label.clone().unwrap_or_default(),
            split: Split::Train,
            scenario: Scenario::Clean,
            snr_db: None,
            seed: 0,
        });
    }
    store::save_manifest(&manifest, &root.join("manifest.toml")).map_err(data)?;
    finish(staging, "import", &id, inputs, &cfg)
}

fn cmd_synth(cli: &Cli) -> Result<Outcome, CliError> {
    let cfg = resolve_config(cli, SnrTarget::TestSet)?;
    let (class_names, originals) = originals(&cfg)?;
    let mut inputs = Vec::new();
    if let Some(p) = &cfg.paths.originals {
        inputs.push(InputRecord { path: p.display().to_string(), sha256: digest_of(&originals) });
    }
    let digests = vec![digest_of(&originals)];
    let id = run_id("synth", &cfg, &digests);
    let ds = build_dataset(&class_names, &originals, &cfg.dataset_plan(class_names.len())).map_err(data)?;
    let mut staging = Staging::new(&cfg.paths.out_dir, "synth", &id)?;
    let dir = staging.path(format!("dataset-{}-{id}", cfg.noise.scenario.as_str()));
    store::write_dataset(&ds, &dir).map_err(data)?;
    finish(staging, "synth", &id, inputs, &cfg)
}

fn cmd_transform(cli: &Cli, dataset: &Path) -> Result<Outcome, CliError> {
    let cfg = resolve_config(cli, SnrTarget::TestSet)?;
    let digest = dir_digest(dataset)?;
    let id = run_id("transform", &cfg, std::slice::from_ref(&digest));
    let ds = store::read_dataset(dataset).map_err(data)?;
    let scenario = ds.rows.first().map(|r| r.scenario).ok_or_else(|| data("dataset is empty"))?;
    let refs: Vec<&Spectrum> = ds.spectra.iter().collect();
    let rendered = render_all(&refs, &cfg.transform)?;
    let degenerate = rendered.iter().filter(|r| r.1).count();
    if degenerate > 0 {
        log::warn!("{degenerate} spectra gave constant scalograms");
    }
    let rows = ds
        .rows
        .iter()
        .zip(&rendered)
        .map(|(r, (_, d))| ImageRow {
            id: r.id.clone(),
            label: r.label.clone(),
            split: r.split,
            snr_db: r.target_snr_db,
            degenerate: *d,
        })
        .collect();
    let images = ImageStore {
        meta: ImageStoreMeta { class_names: ds.class_names, scenario, transform: cfg.transform },
        rows,
        images: rendered.into_iter().map(|r| r.0).collect(),
    };
    let mut staging = Staging::new(&cfg.paths.out_dir, "transform", &id)?;
    let dir = staging.path(format!("images-{}-{id}", scenario.as_str()));
    store::write_images(&images, &dir).map_err(data)?;
    let inputs = vec![InputRecord { path: dataset.display().to_string(), sha256: digest }];
    finish(staging, "transform", &id, inputs, &cfg)
}

fn cmd_train(cli: &Cli, images_dir: &Path) -> Result<Outcome, CliError> {
    let kind = cli.classifier.ok_or_else(|| CliError::Usage("train needs --classifier".into()))?;
    let mut cfg = resolve_config(cli, SnrTarget::TestSet)?;
    let digest = dir_digest(images_dir)?;
    let store = store::read_images(images_dir).map_err(data)?;
    // The images fix the transform; record it as part of the resolved config.
    cfg.transform = store.meta.transform;
    cfg.dcnn.input_side = store.meta.transform.side;
    let command = format!("train-{}", kind_name(kind));
    let id = run_id(&command, &cfg, std::slice::from_ref(&digest));
    let scenario = store.meta.scenario;
    let n_classes = store.meta.class_names.len();
    let (images, labels) = store.split(Split::Train);
    if images.is_empty() {
        return Err(data("image store has no training samples"));
    }
    let mut staging = Staging::new(&cfg.paths.out_dir, "train", &id)?;
    let stem = format!("{}-{}-{id}", kind_name(kind), scenario.as_str());
    let model = match kind.ml_kind() {
        Some(k) => {
            let fs = feature_set(&images, &labels, n_classes)?;
            let m = MlModel::fit(k, &cfg.ml, &fs).map_err(data)?;
            if let MlModel::Svm(svm) = &m {
                if !svm.converged() {
                    log::warn!("SVM stopped at the iteration cap before converging");
                }
            }
            AnyModel::from(m)
        }
        None => {
            let data_set = LabeledImages::new(&images, &labels);
            match dcnn::train::<f32>(data_set, None, n_classes, &cfg.dcnn, |_| {}) {
                Ok(out) => {
                    staging.text(format!("history-{stem}.csv"), &report::history_csv(&out.history).map_err(data)?)?;
                    let title = format!("dcnn training, {}", scenario.as_str());
                    staging.text(format!("history-{stem}.svg"), &report::history_svg(&out.history, &title).map_err(data)?)?;
                    AnyModel::Dcnn(Box::new(out.model))
                }
                Err(TrainError::Diverged { epoch, batch, reason, last_good, history }) => {
                    // Keep the last good parameters next to the failure marker.
                    let checkpoint = ModelFile::new(
                        store.meta.class_names.clone(),
                        store.meta.transform,
                        scenario,
                        AnyModel::Dcnn(last_good),
                    );
                    let path = cfg.paths.out_dir.join(format!("checkpoint-{stem}.json"));
                    model_io::save_model(&checkpoint, &path).map_err(data)?;
                    if let Ok(text) = report::history_csv(&history) {
                        let _ = report::write(&cfg.paths.out_dir.join(format!("history-{stem}.csv")), &text);
                    }
                    return Err(CliError::Diverged(format!(
                        "training diverged at epoch {epoch}, batch {batch}: {reason}; last good parameters in {}",
                        path.display()
                    )));
                }
                Err(e) => return Err(data(e)),
            }
        }
    };
    let file = ModelFile::new(store.meta.class_names.clone(), store.meta.transform, scenario, model);
    let path = staging.path(format!("model-{stem}.json"));
    model_io::save_model(&file, &path).map_err(data)?;
    let inputs = vec![InputRecord { path: images_dir.display().to_string(), sha256: digest }];
    finish(staging, "train", &id, inputs, &cfg)
}

fn kind_name(k: ClassifierArg) -> &'static str {
    match k {
        ClassifierArg::Nb => "nb",
        ClassifierArg::Knn => "knn",
        ClassifierArg::Rf => "rf",
        ClassifierArg::Svm => "svm",
        ClassifierArg::Dcnn => "dcnn",
    }
}

fn cmd_eval(cli: &Cli, model_path: &Path, images_dir: &Path) -> Result<Outcome, CliError> {
    let cfg = resolve_config(cli, SnrTarget::TestSet)?;
    let model_digest = file_digest(model_path)?;
    let images_digest = dir_digest(images_dir)?;
    let id = run_id("eval", &cfg, &[model_digest.clone(), images_digest.clone()]);
    let model = model_io::load_model(model_path).map_err(data)?;
    let store = store::read_images(images_dir).map_err(data)?;
    if model.class_names != store.meta.class_names {
        return Err(data("model and images have different class names"));
    }
    if model.transform != store.meta.transform {
        return Err(data("model and images were made with different transforms"));
    }
    let test: Vec<usize> = (0..store.rows.len()).filter(|&i| store.rows[i].split == Split::Test).collect();
    if test.is_empty() {
        return Err(data("image store has no test samples"));
    }
    let refs: Vec<&ScalogramImage> = test.iter().map(|&i| &store.images[i]).collect();
    let actual: Vec<usize> = test.iter().map(|&i| store.label_index(&store.rows[i]).expect("validated")).collect();
    let ids: Vec<String> = test.iter().map(|&i| store.rows[i].id.clone()).collect();
    let probs = model.model.predict_proba(&refs).map_err(data)?;
    let predicted = model.model.predict(&refs).map_err(data)?;
    let names = &model.class_names;
    let r = metrics(&confusion(&actual, &predicted, names.len()).map_err(data)?);

    let kind = model.model.kind();
    let scenario = store.meta.scenario;
    let stem = format!("{kind}-{}-{id}", scenario.as_str());
    let mut staging = Staging::new(&cfg.paths.out_dir, "eval", &id)?;
    staging.text(format!("confusion-{stem}.csv"), &report::confusion_csv(&r, names).map_err(data)?)?;
    staging.text(format!("metrics-{stem}.csv"), &report::metrics_csv(&r, names).map_err(data)?)?;
    staging.text(format!("summary-{stem}.csv"), &report::summary_csv(kind, scenario, &r).map_err(data)?)?;
    staging.text(
        format!("predictions-{stem}.csv"),
        &report::predictions_csv(&ids, &actual, &predicted, &probs, names).map_err(data)?,
    )?;
    let title = format!("{kind} confusion, {} (accuracy {:.4})", scenario.as_str(), r.accuracy);
    staging.text(format!("confusion-{stem}.svg"), &report::confusion_svg(&r, names, &title).map_err(data)?)?;
    let inputs = vec![
        InputRecord { path: model_path.display().to_string(), sha256: model_digest },
        InputRecord { path: images_dir.display().to_string(), sha256: images_digest },
    ];
    finish(staging, "eval", &id, inputs, &cfg)
}

struct NamedModel<'a> {
    name: String,
    model: &'a AnyModel,
}

impl Predictor<ScalogramImage> for NamedModel<'_> {
    fn name(&self) -> String {
        self.name.clone()
    }

    fn predict(&self, input: &ScalogramImage) -> usize {
        self.model.predict(&[input]).map(|p| p[0]).unwrap_or(usize::MAX)
    }
}

fn cmd_sweep(cli: &Cli, model_paths: &[PathBuf]) -> Result<Outcome, CliError> {
    let cfg = resolve_config(cli, SnrTarget::Sweep)?;
    let mut digests = Vec::new();
    let mut models = Vec::new();
    for p in model_paths {
        digests.push(file_digest(p)?);
        models.push(model_io::load_model(p).map_err(data)?);
    }
    let (class_names, originals) = originals(&cfg)?;
    digests.push(digest_of(&originals));
    let id = run_id("sweep", &cfg, &digests);
    let first = &models[0];
    for m in &models {
        if m.class_names != class_names {
            return Err(data("every model must be trained on the configured originals' classes"));
        }
        if m.transform != first.transform {
            return Err(data("every model must use the same transform"));
        }
    }
    let transform = first.transform;
    let scenario = cfg.noise.scenario;

    let mut named = Vec::new();
    for (i, m) in models.iter().enumerate() {
        let kind = m.model.kind();
        let clash = models.iter().filter(|o| o.model.kind() == kind).count() > 1;
        let name = if clash { format!("{kind}-{i}") } else { kind.to_string() };
        named.push(NamedModel { name, model: &m.model });
    }
    let predictors: Vec<&dyn Predictor<ScalogramImage>> = named.iter().map(|n| n as _).collect();

    let points = cfg.sweep.points();
    let mut failure = None;
    let generate = |snr: f64| -> Vec<(ScalogramImage, usize)> {
        let idx = points.iter().position(|&p| p == snr).unwrap_or(0) as u64;
        let mut plan = cfg.dataset_plan(class_names.len());
        plan.train_snr = (snr, snr);
        plan.test_snr = (snr, snr);
        plan.multiplicity =
            Multiplicity::PerClass { train: vec![0; class_names.len()], test: vec![cfg.sweep.per_class; class_names.len()] };
        plan.seed = seed::derive(cfg.seed, idx);
        let set = build_dataset(&class_names, &originals, &plan)
            .map_err(data)
            .and_then(|ds| {
                let refs: Vec<&Spectrum> = ds.samples.iter().map(|s| &s.data.noisy).collect();
                let labels: Vec<usize> = ds.samples.iter().map(|s| s.label).collect();
                Ok(render_all(&refs, &transform)?.into_iter().map(|r| r.0).zip(labels).collect())
            });
        set.unwrap_or_else(|e| {
            failure.get_or_insert(e);
            Vec::new()
        })
    };
    let curves: Result<Vec<SweepCurve>, _> = eval::snr_sweep(&predictors, generate, &points, scenario);
    if let Some(e) = failure {
        return Err(e);
    }
    let curves = curves.map_err(data)?;

    let stem = format!("{}-{id}", scenario.as_str());
    let mut staging = Staging::new(&cfg.paths.out_dir, "sweep", &id)?;
    staging.text(format!("sweep-{stem}.csv"), &report::sweep_csv(&curves).map_err(data)?)?;
    staging.text(format!("thresholds-{stem}.csv"), &report::thresholds_csv(&curves, &cfg.sweep.levels).map_err(data)?)?;
    let title = format!("accuracy against SNR, {}", scenario.as_str());
    staging.text(format!("sweep-{stem}.svg"), &report::sweep_svg(&curves, &title).map_err(data)?)?;
    let inputs = model_paths
        .iter()
        .zip(&digests)
        .map(|(p, d)| InputRecord { path: p.display().to_string(), sha256: d.clone() })
        .collect();
    finish(staging, "sweep", &id, inputs, &cfg)
}

/// Parses arguments and runs one command. Prints output paths on stdout and
/// a one-line diagnostic on stderr; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let out_dir = cli
        .out
        .clone()
        .or_else(|| cli.config.as_deref().and_then(|p| RunConfig::load(p).ok()).map(|c| c.paths.out_dir))
        .unwrap_or_else(|| RunConfig::default().paths.out_dir);
    let marker = out_dir.join(format!("FAILED-{}.txt", cli.command.name()));
    match run(&cli) {
        Ok(outcome) => {
            let _ = fs::remove_file(&marker);
            for p in &outcome.outputs {
                println!("{}", p.display());
            }
            EXIT_OK
        }
        Err(e) => {
            eprintln!("ramanscope {}: {}", cli.command.name(), e.message());
            if fs::create_dir_all(&out_dir).is_ok() {
                let _ = fs::write(&marker, format!("{}\n", e.message()));
            }
            e.exit_code()
        }
    }
}
