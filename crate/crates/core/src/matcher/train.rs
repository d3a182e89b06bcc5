//! Full-batch gradient descent on the OR loss, with optional training on
//! small-uncertainty data (TSUD): from a start epoch on, each epoch drops the
//! pixels whose current predicted variance is largest.

use rayon::prelude::*;

use super::cost::{build_cost_volume, CostVolume};
use super::head::{normalize_cost, param_count, HeadParameters, DEFAULT_HIDDEN};
use super::{interior_mask, StereoPair, DEFAULT_WINDOW};
use crate::distribution::{moments, softmax_into, BinLayout};
use crate::error::{Error, Result};
use crate::grid::{DisparityMap, Mask};
use crate::ordinal::{encode_clamped, Scratch};

/// Pixels per gradient partial; partials are summed in chunk order so results
/// do not depend on the thread count.
const CHUNK: usize = 256;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub seed: u64,
    pub hidden: usize,
    pub window: usize,
    pub tsud_enabled: bool,
    pub tsud_keep: f64,
    /// First epoch (0-based) with TSUD masking; `None` means `epochs / 2`.
    pub tsud_start: Option<usize>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 400,
            learning_rate: 1.0,
            seed: 42,
            hidden: DEFAULT_HIDDEN,
            window: DEFAULT_WINDOW,
            tsud_enabled: false,
            tsud_keep: 0.95,
            tsud_start: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.epochs == 0 {
            return bad("train.epochs must be >= 1".into());
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return bad(format!(
                "train.lr must be positive, got {}",
                self.learning_rate
            ));
        }
        if self.hidden == 0 {
            return bad("hidden width must be >= 1".into());
        }
        if !(self.tsud_keep > 0.0 && self.tsud_keep <= 1.0) {
            return bad(format!(
                "tsud.keep must be in (0, 1], got {}",
                self.tsud_keep
            ));
        }
        if let Some(start) = self.tsud_start {
            if start > self.epochs {
                return bad(format!(
                    "tsud.start ({start}) exceeds train.epochs ({})",
                    self.epochs
                ));
            }
        }
        super::census::check_window(self.window)
    }

    pub fn tsud_start_epoch(&self) -> usize {
        self.tsud_start.unwrap_or(self.epochs / 2)
    }
}

/// One cost volume with its labels and the pixels that may supervise.
#[derive(Debug, Clone)]
pub struct TrainingSample {
    pub cost: CostVolume,
    pub labels: DisparityMap,
    pub mask: Mask,
}

impl TrainingSample {
    /// Supervised pixels: finite label, inside `mask` and inside the census interior.
    pub fn new(cost: CostVolume, labels: DisparityMap, mask: &Mask, window: usize) -> Result<Self> {
        if cost.height() != labels.height() || cost.width() != labels.width() {
            return Err(Error::DimensionMismatch {
                expected: cost.height() * cost.width(),
                actual: labels.len(),
            });
        }
        labels.check_shape(mask)?;
        let interior = interior_mask(labels.height(), labels.width(), window);
        let mask = Mask::from_fn(labels.height(), labels.width(), |r, c| {
            *mask.get(r, c) && *interior.get(r, c) && labels.get(r, c).is_finite()
        });
        Ok(Self { cost, labels, mask })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Mean OR loss over the pixels that received gradient.
    pub loss: f64,
    /// Mean |prediction - label| over all supervised pixels.
    pub epe: f64,
    pub mean_ud: f64,
    pub masked_fraction: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainingLog {
    pub records: Vec<EpochRecord>,
}

impl TrainingLog {
    pub fn first(&self) -> Option<&EpochRecord> {
        self.records.first()
    }

    pub fn last(&self) -> Option<&EpochRecord> {
        self.records.last()
    }

    /// CSV with header `epoch,loss,epe,mean_ud,masked_fraction`.
    pub fn write_csv<W: std::io::Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["epoch", "loss", "epe", "mean_ud", "masked_fraction"])?;
        for r in &self.records {
            w.write_record([
                r.epoch.to_string(),
                r.loss.to_string(),
                r.epe.to_string(),
                r.mean_ud.to_string(),
                r.masked_fraction.to_string(),
            ])?;
        }
        w.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }
}

/// Loss, gradient and per-pixel `(mean, variance)`.
type Partial = (f64, Vec<f64>, Vec<(f64, f64)>);

/// Supervised pixels of all samples, pooled.
struct Pooled {
    bins: usize,
    features: Vec<f64>,
    steps: Vec<usize>,
    labels: Vec<f64>,
    midpoints: Vec<f64>,
}

impl Pooled {
    fn new(samples: &[TrainingSample], layout: &BinLayout) -> Self {
        let k = layout.count();
        let (mut features, mut steps, mut labels) = (Vec::new(), Vec::new(), Vec::new());
        let mut x = vec![0.0; k];
        for s in samples {
            for ((c, &y), &m) in s
                .cost
                .pixels()
                .zip(s.labels.as_slice())
                .zip(s.mask.as_slice())
            {
                if !m {
                    continue;
                }
                normalize_cost(c, &mut x);
                features.extend_from_slice(&x);
                let y = layout.clamp(y);
                steps.push(encode_clamped(y, layout.edges()).step());
                labels.push(y);
            }
        }
        Self {
            bins: k,
            features,
            steps,
            labels,
            midpoints: layout.midpoints().to_vec(),
        }
    }

    fn len(&self) -> usize {
        self.labels.len()
    }

    fn x(&self, i: usize) -> &[f64] {
        &self.features[i * self.bins..(i + 1) * self.bins]
    }

    /// `(mean, variance)` of every pixel's current PMF.
    fn stats(&self, head: &HeadParameters) -> Vec<(f64, f64)> {
        let k = self.bins;
        (0..self.len())
            .into_par_iter()
            .map_init(
                || (vec![0.0; head.hidden()], vec![0.0; k], vec![0.0; k]),
                |(act, z, p), i| {
                    head.forward_into(self.x(i), act, z);
                    softmax_into(z, p);
                    moments(p, &self.midpoints)
                },
            )
            .collect()
    }

    /// Mean loss and its gradient over `indices`, plus per-pixel moments.
    fn loss_and_grad(&self, head: &HeadParameters, indices: &[usize]) -> Partial {
        let k = self.bins;
        let n_params = param_count(k, head.hidden());
        let partials: Vec<Partial> = indices
            .par_chunks(CHUNK)
            .map(|chunk| {
                let mut scratch = Scratch::new(k);
                let mut act = vec![0.0; head.hidden()];
                let mut dact = vec![0.0; head.hidden()];
                let mut z = vec![0.0; k];
                let mut grad = vec![0.0; n_params];
                let mut loss = 0.0;
                let mut stats = Vec::with_capacity(chunk.len());
                for &i in chunk {
                    let x = self.x(i);
                    head.forward_into(x, &mut act, &mut z);
                    loss += scratch.loss(&z, self.steps[i], true);
                    stats.push(moments(&scratch.probs, &self.midpoints));
                    head.backward_into(x, &act, &scratch.grad, &mut dact, &mut grad);
                }
                (loss, grad, stats)
            })
            .collect();
        let mut total = 0.0;
        let mut grad = vec![0.0; n_params];
        let mut stats = Vec::with_capacity(indices.len());
        for (l, g, s) in partials {
            total += l;
            for (a, b) in grad.iter_mut().zip(&g) {
                *a += b;
            }
            stats.extend(s);
        }
        let scale = 1.0 / indices.len().max(1) as f64;
        for g in &mut grad {
            *g *= scale;
        }
        (total * scale, grad, stats)
    }
}

/// Builds cost volumes for `pairs` and trains on every finite interior label.
pub fn train(
    pairs: &[StereoPair],
    labels: &[DisparityMap],
    layout: &BinLayout,
    config: &TrainConfig,
) -> Result<(HeadParameters, TrainingLog)> {
    if pairs.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if pairs.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: pairs.len(),
            actual: labels.len(),
        });
    }
    config.validate()?;
    let samples = pairs
        .iter()
        .zip(labels)
        .map(|(pair, y)| {
            let cost = build_cost_volume(pair, layout, config.window)?;
            TrainingSample::new(cost, y.clone(), &y.finite_mask(), config.window)
        })
        .collect::<Result<Vec<_>>>()?;
    train_on_samples(&samples, config)
}

pub fn train_on_samples(
    samples: &[TrainingSample],
    config: &TrainConfig,
) -> Result<(HeadParameters, TrainingLog)> {
    config.validate()?;
    let layout = match samples.first() {
        Some(s) => s.cost.layout().clone(),
        None => return Err(Error::EmptyDataset),
    };
    if samples.iter().any(|s| s.cost.layout() != &layout) {
        return Err(Error::InvalidConfig(
            "samples use different bin layouts".into(),
        ));
    }
    let data = Pooled::new(samples, &layout);
    let n = data.len();
    if n == 0 {
        return Err(Error::EmptyDataset);
    }
    let mut head = HeadParameters::init(layout.count(), config.hidden, config.seed);
    let all: Vec<usize> = (0..n).collect();
    let tsud_start = config.tsud_start_epoch();
    let n_remove = ((1.0 - config.tsud_keep) * n as f64 + 1e-9).floor() as usize;
    let mut log = TrainingLog::default();

    for epoch in 0..config.epochs {
        let tsud_active = config.tsud_enabled && epoch >= tsud_start;
        let (indices, pre_stats) = if tsud_active {
            let stats = data.stats(&head);
            let mut order = all.clone();
            order.sort_by(|&a, &b| stats[a].1.total_cmp(&stats[b].1).then(a.cmp(&b)));
            let mut kept = order[..n - n_remove].to_vec();
            kept.sort_unstable();
            (kept, Some(stats))
        } else {
            (all.clone(), None)
        };
        let (loss, grad, pass_stats) = data.loss_and_grad(&head, &indices);
        let stats = pre_stats.unwrap_or(pass_stats);
        if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::DivergentLoss { epoch, loss });
        }
        let (mut epe, mut ud) = (0.0, 0.0);
        for (&(mean, var), &y) in stats.iter().zip(&data.labels) {
            epe += (mean - y).abs();
            ud += var;
        }
        log.records.push(EpochRecord {
            epoch,
            loss,
            epe: epe / n as f64,
            mean_ud: ud / n as f64,
            masked_fraction: (n - indices.len()) as f64 / n as f64,
        });
        for (p, g) in head.as_flat_mut().iter_mut().zip(&grad) {
            *p -= config.learning_rate * g;
        }
    }
    Ok((head, log))
}

/// Mean OR loss over the supervised pixels of `samples` and its gradient with
/// respect to the flat head parameters.
pub fn head_loss_and_grad(
    head: &HeadParameters,
    samples: &[TrainingSample],
) -> Result<(f64, Vec<f64>)> {
    let layout = samples
        .first()
        .ok_or(Error::EmptyDataset)?
        .cost
        .layout()
        .clone();
    let data = Pooled::new(samples, &layout);
    if data.len() == 0 {
        return Err(Error::EmptyMask);
    }
    let all: Vec<usize> = (0..data.len()).collect();
    let (loss, grad, _) = data.loss_and_grad(head, &all);
    Ok((loss, grad))
}
