//! Command-line pipeline: `synth`, `train`, `infer`, `fit-uq`, `eval`.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::config::{ConfigValues, RunConfig};
use crate::datagen::{generate_all, make_splits, Manifest, ManifestEntry, Split};
use crate::error::{Error, Result};
use crate::grid::{DisparityMap, Image, Mask};
use crate::kernel_uq::{fit, total_uncertainty, uq_map, EmbeddingBank};
use crate::matcher::{interior_mask, train, Matcher, StereoPair};
use crate::metrics::{summarize, EvalScene};
use crate::storage::{self, TensorContainer};

pub const MANIFEST_FILE: &str = "manifest.txt";
pub const MODEL_FILE: &str = "model.uqt";
pub const TRAIN_LOG_FILE: &str = "train_log.csv";
pub const ESTIMATOR_FILE: &str = "estimator.uqt";
pub const REPORT_FILE: &str = "report.csv";

#[derive(Debug, Parser)]
#[command(
    name = "stereo-uq",
    version,
    about = "Uncertainty-aware toy stereo matching"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate synthetic train/test/ood scenes and a manifest.
    Synth(SynthArgs),
    /// Train the matcher head on the train split.
    Train(TrainArgs),
    /// Run the matcher on a pair or on manifest scenes.
    Infer(InferArgs),
    /// Build the embedding bank and kernel estimator.
    FitUq(FitUqArgs),
    /// Score predictions and uncertainties against ground truth.
    Eval(EvalArgs),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub train: u64,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub test: u64,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub ood: u64,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

/// `--config PATH` plus one override flag per configuration key.
#[derive(Debug, Args, Default)]
pub struct ConfigArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long = "bins.alpha", value_name = "PX")]
    pub bins_alpha: Option<String>,
    #[arg(long = "bins.beta", value_name = "PX")]
    pub bins_beta: Option<String>,
    #[arg(long = "bins.count", value_name = "K")]
    pub bins_count: Option<String>,
    #[arg(long = "bins.scheme", value_name = "SCHEME")]
    pub bins_scheme: Option<String>,
    #[arg(long = "train.epochs", value_name = "N")]
    pub train_epochs: Option<String>,
    #[arg(long = "train.lr", value_name = "LR")]
    pub train_lr: Option<String>,
    #[arg(long = "train.seed", value_name = "SEED")]
    pub train_seed: Option<String>,
    #[arg(long = "tsud.enabled", value_name = "BOOL")]
    pub tsud_enabled: Option<String>,
    #[arg(long = "tsud.keep", value_name = "FRACTION")]
    pub tsud_keep: Option<String>,
    #[arg(long = "tsud.start", value_name = "EPOCH")]
    pub tsud_start: Option<String>,
    #[arg(long = "kernel.family", value_name = "FAMILY")]
    pub kernel_family: Option<String>,
    #[arg(long = "kernel.bandwidth", value_name = "H")]
    pub kernel_bandwidth: Option<String>,
    #[arg(long = "kernel.knn", value_name = "N")]
    pub kernel_knn: Option<String>,
    #[arg(long = "kernel.c", value_name = "C")]
    pub kernel_c: Option<String>,
    #[arg(long = "kernel.cap", value_name = "CAP")]
    pub kernel_cap: Option<String>,
    #[arg(long = "bank.cap", value_name = "M")]
    pub bank_cap: Option<String>,
    #[arg(long = "matcher.window", value_name = "W")]
    pub matcher_window: Option<String>,
    #[arg(long = "matcher.hidden", value_name = "H")]
    pub matcher_hidden: Option<String>,
}

impl ConfigArgs {
    pub fn values(&self) -> Result<ConfigValues> {
        let mut v = ConfigValues::default();
        if let Some(path) = &self.config {
            v.apply_file(path)?;
        }
        let overrides = [
            ("bins.alpha", &self.bins_alpha),
            ("bins.beta", &self.bins_beta),
            ("bins.count", &self.bins_count),
            ("bins.scheme", &self.bins_scheme),
            ("train.epochs", &self.train_epochs),
            ("train.lr", &self.train_lr),
            ("train.seed", &self.train_seed),
            ("tsud.enabled", &self.tsud_enabled),
            ("tsud.keep", &self.tsud_keep),
            ("tsud.start", &self.tsud_start),
            ("kernel.family", &self.kernel_family),
            ("kernel.bandwidth", &self.kernel_bandwidth),
            ("kernel.knn", &self.kernel_knn),
            ("kernel.c", &self.kernel_c),
            ("kernel.cap", &self.kernel_cap),
            ("bank.cap", &self.bank_cap),
            ("matcher.window", &self.matcher_window),
            ("matcher.hidden", &self.matcher_hidden),
        ];
        for (key, value) in overrides {
            if let Some(value) = value {
                v.set(key, value)?;
            }
        }
        Ok(v)
    }

    pub fn build(&self) -> Result<RunConfig> {
        self.values()?.build()
    }
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub config: ConfigArgs,
}

#[derive(Debug, Args)]
pub struct InferArgs {
    /// Model container written by `train`.
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long, requires = "right", conflicts_with = "manifest")]
    pub left: Option<PathBuf>,
    #[arg(long, requires = "left")]
    pub right: Option<PathBuf>,
    /// Output name for a single pair.
    #[arg(long, default_value = "pair")]
    pub id: String,
    #[arg(long, required_unless_present = "left")]
    pub manifest: Option<PathBuf>,
    /// Splits to run in manifest mode; all when omitted.
    #[arg(long)]
    pub split: Vec<Split>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct FitUqArgs {
    /// Inference containers; paired in order with `--labels`.
    #[arg(long, conflicts_with = "manifest")]
    pub inference: Vec<PathBuf>,
    #[arg(long)]
    pub labels: Vec<PathBuf>,
    #[arg(long, requires = "predictions")]
    pub manifest: Option<PathBuf>,
    /// Directory holding `infer` outputs for the manifest scenes.
    #[arg(long)]
    pub predictions: Option<PathBuf>,
    #[arg(long, default_value = "train")]
    pub split: Split,
    /// Seed for bank subsampling.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub config: ConfigArgs,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub predictions: PathBuf,
    /// Estimator written by `fit-uq`; adds model uncertainty.
    #[arg(long)]
    pub estimator: Option<PathBuf>,
    /// Splits to report, one row each; test and ood when omitted.
    #[arg(long)]
    pub split: Vec<Split>,
    #[arg(long, default_value = "synthetic")]
    pub dataset: String,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub config: ConfigArgs,
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Synth(a) => cmd_synth(&a),
        Command::Train(a) => cmd_train(&a),
        Command::Infer(a) => cmd_infer(&a),
        Command::FitUq(a) => cmd_fit_uq(&a),
        Command::Eval(a) => cmd_eval(&a),
    }
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn require(path: PathBuf) -> Result<PathBuf> {
    if path.is_file() {
        Ok(path)
    } else {
        Err(Error::MissingArtifact(path.display().to_string()))
    }
}

/// Manifest and the directory its paths are relative to.
fn load_manifest(path: &Path) -> Result<(Manifest, PathBuf)> {
    let path = require(path.to_path_buf())?;
    let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let manifest = Manifest::parse(&text)?;
    if manifest.entries.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok((manifest, dir))
}

fn load_pair(dir: &Path, e: &ManifestEntry) -> Result<StereoPair> {
    let left = storage::read_pgm(require(dir.join(e.left_path()))?)?;
    let right = storage::read_pgm(require(dir.join(e.right_path()))?)?;
    StereoPair::new(e.id.clone(), left, right)
}

fn load_map(path: PathBuf) -> Result<DisparityMap> {
    Ok(storage::read_pfm(require(path)?)?.map)
}

fn inference_path(dir: &Path, id: &str) -> PathBuf {
    dir.join(format!("{id}_inference.uqt"))
}

/// Interior pixels with a finite label.
fn scoring_mask(labels: &DisparityMap, window: usize) -> Mask {
    let interior = interior_mask(labels.height(), labels.width(), window);
    Mask::from_fn(labels.height(), labels.width(), |r, c| {
        *interior.get(r, c) && labels.get(r, c).is_finite()
    })
}

fn save_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn cmd_synth(a: &SynthArgs) -> Result<()> {
    let manifest = make_splits(a.train as usize, a.test as usize, a.ood as usize, a.seed)?;
    let scenes = generate_all(&manifest)?;
    create_dir(&a.out)?;
    for (e, s) in manifest.entries.iter().zip(&scenes) {
        storage::write_pgm(&s.pair.left, a.out.join(e.left_path()))?;
        storage::write_pgm(&s.pair.right, a.out.join(e.right_path()))?;
        storage::write_pfm(&s.gt, a.out.join(e.gt_path()))?;
        storage::write_pfm(&s.labels, a.out.join(e.labels_path()))?;
        let noise = Image::from_fn(s.noise_mask.height(), s.noise_mask.width(), |r, c| {
            if *s.noise_mask.get(r, c) {
                255.0
            } else {
                0.0
            }
        });
        storage::write_pgm(&noise, a.out.join(e.noise_mask_path()))?;
    }
    save_text(&a.out.join(MANIFEST_FILE), &manifest.to_text())?;
    println!("wrote {} scenes to {}", scenes.len(), a.out.display());
    Ok(())
}

pub fn cmd_train(a: &TrainArgs) -> Result<()> {
    let values = a.config.values()?;
    let cfg = values.build()?;
    let (manifest, dir) = load_manifest(&a.manifest)?;
    let (mut pairs, mut labels) = (Vec::new(), Vec::new());
    for e in manifest.split(Split::Train) {
        pairs.push(load_pair(&dir, e)?);
        labels.push(load_map(dir.join(e.labels_path()))?);
    }
    if pairs.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let (head, log) = train(&pairs, &labels, &cfg.layout, &cfg.train)?;
    let matcher = Matcher::new(cfg.layout.clone(), cfg.train.window, head)?;
    create_dir(&a.out)?;
    storage::matcher_to_container(&matcher)?.save(a.out.join(MODEL_FILE))?;
    let log_path = a.out.join(TRAIN_LOG_FILE);
    let file = std::fs::File::create(&log_path).map_err(|e| Error::io(&log_path, e))?;
    log.write_csv(file)?;
    save_text(&a.out.join("config.txt"), &values.to_text())?;
    if let (Some(first), Some(last)) = (log.first(), log.last()) {
        println!(
            "trained on {} pairs: loss {:.4} -> {:.4}, epe {:.3} -> {:.3}",
            pairs.len(),
            first.loss,
            last.loss,
            first.epe,
            last.epe
        );
    }
    Ok(())
}

pub fn cmd_infer(a: &InferArgs) -> Result<()> {
    let model = TensorContainer::load(require(a.model.clone())?)?;
    let matcher = storage::matcher_from_container(&model)?;
    let jobs: Vec<StereoPair> = match (&a.left, &a.right, &a.manifest) {
        (Some(l), Some(r), _) => vec![StereoPair::new(
            a.id.clone(),
            storage::read_pgm(require(l.clone())?)?,
            storage::read_pgm(require(r.clone())?)?,
        )?],
        (_, _, Some(m)) => {
            let (manifest, dir) = load_manifest(m)?;
            manifest
                .entries
                .iter()
                .filter(|e| a.split.is_empty() || a.split.contains(&e.split))
                .map(|e| load_pair(&dir, e))
                .collect::<Result<_>>()?
        }
        _ => {
            return Err(Error::InvalidConfig(
                "give --left and --right, or --manifest".into(),
            ))
        }
    };
    create_dir(&a.out)?;
    for pair in &jobs {
        let inf = matcher.infer(pair)?;
        storage::write_pfm(
            &inf.disparity,
            a.out.join(format!("{}_disparity.pfm", pair.id)),
        )?;
        storage::inference_to_container(&inf)?.save(inference_path(&a.out, &pair.id))?;
    }
    println!("inferred {} pairs into {}", jobs.len(), a.out.display());
    Ok(())
}

pub fn cmd_fit_uq(a: &FitUqArgs) -> Result<()> {
    let cfg = a.config.build()?;
    let files: Vec<(PathBuf, PathBuf)> = match (&a.manifest, &a.predictions) {
        (Some(m), Some(p)) => {
            let (manifest, dir) = load_manifest(m)?;
            manifest
                .split(a.split)
                .map(|e| (inference_path(p, &e.id), dir.join(e.labels_path())))
                .collect()
        }
        _ => {
            if a.inference.len() != a.labels.len() {
                return Err(Error::InvalidConfig(format!(
                    "{} inference files but {} label files",
                    a.inference.len(),
                    a.labels.len()
                )));
            }
            a.inference
                .iter()
                .cloned()
                .zip(a.labels.iter().cloned())
                .collect()
        }
    };
    if files.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let (mut embeddings, mut labels, mut masks) = (Vec::new(), Vec::new(), Vec::new());
    for (inf_path, label_path) in files {
        let inf = storage::inference_from_container(&TensorContainer::load(require(inf_path)?)?)?;
        let y = load_map(label_path)?;
        masks.push(scoring_mask(&y, cfg.train.window));
        embeddings.push(inf.embeddings);
        labels.push(y);
    }
    let bank =
        EmbeddingBank::from_volumes(&embeddings, &labels, Some(&masks), cfg.bank_cap, a.seed)?;
    let (m, n) = (bank.len(), bank.source_count());
    let est = fit(bank, cfg.kernel)?;
    create_dir(&a.out)?;
    storage::estimator_to_container(&est)?.save(a.out.join(ESTIMATOR_FILE))?;
    println!(
        "bank M = {m} from N = {n} pixels, kernel {}",
        cfg.kernel.kernel
    );
    Ok(())
}

pub fn cmd_eval(a: &EvalArgs) -> Result<()> {
    let cfg = a.config.build()?;
    let (manifest, dir) = load_manifest(&a.manifest)?;
    let estimator = match &a.estimator {
        Some(p) => Some(storage::estimator_from_container(&TensorContainer::load(
            require(p.clone())?,
        )?)?),
        None => None,
    };
    let splits = if a.split.is_empty() {
        vec![Split::Test, Split::Ood]
    } else {
        a.split.clone()
    };
    create_dir(&a.out)?;
    let mut rows = Vec::new();
    for split in splits {
        let mut loaded = Vec::new();
        for e in manifest.split(split) {
            let gt = load_map(dir.join(e.gt_path()))?;
            let inf = storage::inference_from_container(&TensorContainer::load(require(
                inference_path(&a.predictions, &e.id),
            )?)?)?;
            let um = match &estimator {
                Some(est) => {
                    let map = uq_map(est, &inf.embeddings)?;
                    storage::uq_map_to_container(&map)?
                        .save(a.out.join(format!("{}_uq.uqt", e.id)))?;
                    let total = total_uncertainty(&inf.data_uncertainty, &map.model_uncertainty)?;
                    storage::write_pfm(
                        &total,
                        a.out.join(format!("{}_total_uncertainty.pfm", e.id)),
                    )?;
                    Some(map.model_uncertainty)
                }
                None => None,
            };
            let mask = scoring_mask(&gt, cfg.train.window);
            loaded.push((gt, inf, um, mask));
        }
        if loaded.is_empty() {
            continue;
        }
        let scenes: Vec<EvalScene<'_>> = loaded
            .iter()
            .map(|(gt, inf, um, mask)| EvalScene {
                disparity: &inf.disparity,
                gt,
                mask,
                volume: Some(&inf.volume),
                data_uncertainty: &inf.data_uncertainty,
                model_uncertainty: um.as_ref(),
            })
            .collect();
        let (report, est_curve, oracle_curve) = summarize(&a.dataset, split.name(), &scenes)?;
        storage::write_curve(
            &est_curve,
            a.out
                .join(format!("sparsification_{}_est.csv", split.name())),
        )?;
        storage::write_curve(
            &oracle_curve,
            a.out
                .join(format!("sparsification_{}_oracle.csv", split.name())),
        )?;
        println!(
            "{} {}: epe {:.4} ause {:.4} ci95 {:.4} mean_ud {:.4} mean_um {:.4} ({} px)",
            report.dataset,
            report.split,
            report.epe,
            report.ause,
            report.ci95,
            report.mean_ud,
            report.mean_um,
            report.n_pixels
        );
        rows.push(report);
    }
    if rows.is_empty() {
        return Err(Error::EmptyDataset);
    }
    storage::write_reports(&rows, a.out.join(REPORT_FILE))
}

/// Caps rayon's worker count when `UQ_THREADS` is set.
pub fn init_threads() -> Result<()> {
    if let Ok(v) = std::env::var("UQ_THREADS") {
        let n: usize = v.parse().ok().filter(|&n| n > 0).ok_or_else(|| {
            Error::InvalidConfig(format!("UQ_THREADS must be a positive integer, got {v:?}"))
        })?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
    }
    Ok(())
}
