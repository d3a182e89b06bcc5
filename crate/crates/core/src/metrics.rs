//! Endpoint error, sparsification curves, AUSE, interval coverage and the
//! per-dataset summary row.

use crate::distribution::{central_interval_of, ProbabilityVolume};
use crate::error::{Error, Result};
use crate::grid::{DisparityMap, Grid, Mask, UncertaintyMap};

/// Points on a sparsification curve: 0%, 1%, ..., 99% removed.
pub const SPARSIFICATION_STEPS: usize = 100;

/// Pixels that count: inside the mask with a finite ground truth.
fn scored<'a>(gt: &'a DisparityMap, mask: &'a Mask) -> impl Iterator<Item = usize> + 'a {
    gt.as_slice()
        .iter()
        .zip(mask.as_slice())
        .enumerate()
        .filter(|(_, (g, &m))| m && g.is_finite())
        .map(|(i, _)| i)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Epe {
    /// `|pred - gt|` everywhere; NaN where the pixel is not scored.
    pub per_pixel: Grid<f64>,
    pub mean: f64,
    pub count: usize,
}

pub fn epe(pred: &DisparityMap, gt: &DisparityMap, mask: &Mask) -> Result<Epe> {
    pred.check_shape(gt)?;
    pred.check_shape(mask)?;
    let mut per_pixel = Grid::filled(pred.height(), pred.width(), f64::NAN);
    let (mut sum, mut count) = (0.0, 0);
    for i in scored(gt, mask) {
        let e = (pred.as_slice()[i] - gt.as_slice()[i]).abs();
        per_pixel.as_mut_slice()[i] = e;
        sum += e;
        count += 1;
    }
    if count == 0 {
        return Err(Error::EmptyMask);
    }
    Ok(Epe {
        per_pixel,
        mean: sum / count as f64,
        count,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SparsificationCurve {
    pub fractions_removed: Vec<f64>,
    pub mean_epe: Vec<f64>,
}

impl SparsificationCurve {
    pub fn len(&self) -> usize {
        self.mean_epe.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mean_epe.is_empty()
    }

    /// Trapezoidal area over the removed fraction.
    pub fn auc(&self) -> f64 {
        self.fractions_removed
            .windows(2)
            .zip(self.mean_epe.windows(2))
            .map(|(x, y)| 0.5 * (x[1] - x[0]) * (y[0] + y[1]))
            .sum()
    }
}

/// Curve obtained by removing pixels in descending `key` order, ties broken by
/// lower index first. Each step removes `floor(n/100)` more pixels (at least
/// one, never all).
fn curve(errors: &[f64], key: &[f64]) -> SparsificationCurve {
    let n = errors.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| key[b].total_cmp(&key[a]));
    let step = (n / SPARSIFICATION_STEPS).max(1);
    let mut fractions_removed = Vec::with_capacity(SPARSIFICATION_STEPS);
    let mut mean_epe = Vec::with_capacity(SPARSIFICATION_STEPS);
    for i in 0..SPARSIFICATION_STEPS {
        let removed = (i * step).min(n - 1);
        let kept = &order[removed..];
        fractions_removed.push(i as f64 / SPARSIFICATION_STEPS as f64);
        mean_epe.push(kept.iter().map(|&j| errors[j]).sum::<f64>() / kept.len() as f64);
    }
    SparsificationCurve {
        fractions_removed,
        mean_epe,
    }
}

/// Estimated curve (removal by descending score) and oracle curve (removal by
/// descending error).
pub fn sparsification(
    errors: &[f64],
    scores: &[f64],
) -> Result<(SparsificationCurve, SparsificationCurve)> {
    if errors.is_empty() {
        return Err(Error::EmptyInput);
    }
    if errors.len() != scores.len() {
        return Err(Error::DimensionMismatch {
            expected: errors.len(),
            actual: scores.len(),
        });
    }
    Ok((curve(errors, scores), curve(errors, errors)))
}

/// `(AUC_est - AUC_oracle) / normalizer`.
pub fn ause(
    est: &SparsificationCurve,
    oracle: &SparsificationCurve,
    normalizer: f64,
) -> Result<f64> {
    if est.len() != oracle.len() || est.fractions_removed != oracle.fractions_removed {
        return Err(Error::DimensionMismatch {
            expected: oracle.len(),
            actual: est.len(),
        });
    }
    if !(normalizer > 0.0 && normalizer.is_finite()) {
        return Err(Error::ZeroNormalizer);
    }
    Ok((est.auc() - oracle.auc()) / normalizer)
}

/// AUSE of `scores` against `errors`, normalized by the mean error.
pub fn ause_of(errors: &[f64], scores: &[f64]) -> Result<f64> {
    let (est, oracle) = sparsification(errors, scores)?;
    ause(
        &est,
        &oracle,
        errors.iter().sum::<f64>() / errors.len() as f64,
    )
}

/// Fraction of scored pixels whose ground truth lies in the central interval
/// holding `level` of the predicted mass.
pub fn coverage(
    volume: &ProbabilityVolume,
    gt: &DisparityMap,
    mask: &Mask,
    level: f64,
) -> Result<f64> {
    let (hits, n) = coverage_counts(volume, gt, mask, level)?;
    if n == 0 {
        return Err(Error::EmptyMask);
    }
    Ok(hits as f64 / n as f64)
}

pub fn coverage_95ci(volume: &ProbabilityVolume, gt: &DisparityMap, mask: &Mask) -> Result<f64> {
    coverage(volume, gt, mask, 0.95)
}

fn coverage_counts(
    volume: &ProbabilityVolume,
    gt: &DisparityMap,
    mask: &Mask,
    level: f64,
) -> Result<(usize, usize)> {
    gt.check_shape(mask)?;
    if volume.height() != gt.height() || volume.width() != gt.width() {
        return Err(Error::DimensionMismatch {
            expected: volume.height() * volume.width(),
            actual: gt.len(),
        });
    }
    let edges = volume.layout().edges();
    let k = volume.layout().count();
    let (mut hits, mut n) = (0, 0);
    for i in scored(gt, mask) {
        let (lo, hi) = central_interval_of(&volume.as_slice()[i * k..(i + 1) * k], edges, level)?;
        let y = gt.as_slice()[i];
        hits += usize::from(lo <= y && y <= hi);
        n += 1;
    }
    Ok((hits, n))
}

/// One scene's artifacts for [`summarize`].
#[derive(Debug, Clone, Copy)]
pub struct EvalScene<'a> {
    pub disparity: &'a DisparityMap,
    pub gt: &'a DisparityMap,
    pub mask: &'a Mask,
    pub volume: Option<&'a ProbabilityVolume>,
    pub data_uncertainty: &'a UncertaintyMap,
    pub model_uncertainty: Option<&'a UncertaintyMap>,
}

/// One report row.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub dataset: String,
    pub split: String,
    pub epe: f64,
    pub ause: f64,
    pub ci95: f64,
    pub mean_ud: f64,
    pub mean_um: f64,
    pub n_pixels: usize,
}

pub const REPORT_COLUMNS: [&str; 8] = [
    "dataset", "split", "epe", "ause", "ci95", "mean_ud", "mean_um", "n_pixels",
];

/// Pools every scored pixel of every scene. Pixels are ranked for AUSE by
/// `U_d + U_m` when model maps are present and by `U_d` otherwise. Either all
/// scenes carry a model map or none; the same holds for volumes. Without
/// volumes `ci95` is NaN; without model maps `mean_um` is 0.
pub fn summarize(
    dataset: &str,
    split: &str,
    scenes: &[EvalScene<'_>],
) -> Result<(Report, SparsificationCurve, SparsificationCurve)> {
    if scenes.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let with_um = scenes[0].model_uncertainty.is_some();
    let with_volume = scenes[0].volume.is_some();
    let (mut errors, mut scores) = (Vec::new(), Vec::new());
    let (mut sum_ud, mut sum_um) = (0.0, 0.0);
    let (mut hits, mut covered) = (0, 0);
    for (s, scene) in scenes.iter().enumerate() {
        if scene.model_uncertainty.is_some() != with_um {
            return Err(Error::MissingArtifact(format!(
                "model uncertainty map for scene {s}"
            )));
        }
        if scene.volume.is_some() != with_volume {
            return Err(Error::MissingArtifact(format!(
                "probability volume for scene {s}"
            )));
        }
        scene.disparity.check_shape(scene.data_uncertainty)?;
        if let Some(um) = scene.model_uncertainty {
            scene.disparity.check_shape(um)?;
        }
        let e = epe(scene.disparity, scene.gt, scene.mask)?;
        for i in scored(scene.gt, scene.mask) {
            let ud = scene.data_uncertainty.as_slice()[i];
            let um = scene.model_uncertainty.map_or(0.0, |m| m.as_slice()[i]);
            errors.push(e.per_pixel.as_slice()[i]);
            scores.push(ud + um);
            sum_ud += ud;
            sum_um += um;
        }
        if let Some(v) = scene.volume {
            let (h, n) = coverage_counts(v, scene.gt, scene.mask, 0.95)?;
            hits += h;
            covered += n;
        }
    }
    let n = errors.len();
    let mean_epe = errors.iter().sum::<f64>() / n as f64;
    let (est, oracle) = sparsification(&errors, &scores)?;
    let report = Report {
        dataset: dataset.to_string(),
        split: split.to_string(),
        epe: mean_epe,
        ause: ause(&est, &oracle, mean_epe)?,
        ci95: if with_volume {
            hits as f64 / covered as f64
        } else {
            f64::NAN
        },
        mean_ud: sum_ud / n as f64,
        mean_um: sum_um / n as f64,
        n_pixels: n,
    };
    Ok((report, est, oracle))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distribution::BinLayout;

    #[test]
    fn epe_basics() {
        let gt = DisparityMap::from_fn(3, 4, |r, c| (r + c) as f64);
        let mask = Mask::filled(3, 4, true);
        assert_eq!(epe(&gt, &gt, &mask).unwrap().mean, 0.0);
        let shifted = gt.map(|v| v + 2.0);
        let e = epe(&shifted, &gt, &mask).unwrap();
        assert_eq!(e.mean, 2.0);
        assert_eq!(e.count, 12);
        assert!(matches!(
            epe(&gt, &gt, &Mask::filled(3, 4, false)),
            Err(Error::EmptyMask)
        ));
        let mut partial = gt.clone();
        partial.set(0, 0, f64::INFINITY);
        let e = epe(&shifted, &partial, &mask).unwrap();
        assert_eq!(e.count, 11);
        assert!(e.per_pixel.get(0, 0).is_nan());
    }

    #[test]
    fn curves_have_one_hundred_points() {
        let errors: Vec<f64> = (0..250).map(|i| (i % 17) as f64).collect();
        let (est, oracle) = sparsification(&errors, &errors).unwrap();
        assert_eq!(est.len(), 100);
        assert_eq!(est, oracle);
        assert!(oracle.mean_epe.windows(2).all(|w| w[1] <= w[0]));
        assert_eq!(oracle.fractions_removed[99], 0.99);
    }

    #[test]
    fn worst_ordering_dominates_oracle() {
        let errors: Vec<f64> = (0..500).map(|i| ((i * 37) % 101) as f64).collect();
        let neg: Vec<f64> = errors.iter().map(|e| -e).collect();
        let (est, oracle) = sparsification(&errors, &neg).unwrap();
        assert!(est
            .mean_epe
            .iter()
            .zip(&oracle.mean_epe)
            .all(|(a, b)| a >= b));
        assert!(ause(&est, &oracle, 50.0).unwrap() > 0.0);
    }

    #[test]
    fn tiny_inputs_keep_at_least_one_pixel() {
        let (est, _) = sparsification(&[1.0, 3.0], &[0.0, 1.0]).unwrap();
        assert_eq!(est.mean_epe[0], 2.0);
        assert_eq!(est.mean_epe[1], 1.0);
        assert_eq!(est.mean_epe[99], 1.0);
    }

    #[test]
    fn sparsification_errors() {
        assert!(matches!(sparsification(&[], &[]), Err(Error::EmptyInput)));
        assert!(sparsification(&[1.0], &[1.0, 2.0]).is_err());
        let (a, b) = sparsification(&[0.0; 10], &[0.0; 10]).unwrap();
        assert!(matches!(ause(&a, &b, 0.0), Err(Error::ZeroNormalizer)));
    }

    #[test]
    fn coverage_of_one_hot_volume() {
        let layout = BinLayout::uniform(0.0, 4.0, 4).unwrap();
        let mut data = Vec::new();
        for _ in 0..6 {
            data.extend([0.0, 0.0, 1.0, 0.0]);
        }
        let vol = ProbabilityVolume::new(2, 3, layout, data).unwrap();
        let mask = Mask::filled(2, 3, true);
        assert_eq!(
            coverage_95ci(&vol, &DisparityMap::filled(2, 3, 2.5), &mask).unwrap(),
            1.0
        );
        assert_eq!(
            coverage_95ci(&vol, &DisparityMap::filled(2, 3, 9.0), &mask).unwrap(),
            0.0
        );
        assert!(coverage_95ci(
            &vol,
            &DisparityMap::filled(2, 3, 2.5),
            &Mask::filled(2, 3, false)
        )
        .is_err());
    }

    #[test]
    fn summary_of_zero_uncertainty() {
        let gt = DisparityMap::from_fn(10, 12, |r, c| (r * c % 5) as f64);
        let pred = gt.map(|v| v + 1.0);
        let zero = UncertaintyMap::filled(10, 12, 0.0);
        let mask = Mask::filled(10, 12, true);
        let scene = EvalScene {
            disparity: &pred,
            gt: &gt,
            mask: &mask,
            volume: None,
            data_uncertainty: &zero,
            model_uncertainty: Some(&zero),
        };
        let (r, _, _) = summarize("synthetic", "test", &[scene]).unwrap();
        assert_eq!(
            (r.epe, r.ause, r.mean_ud, r.mean_um, r.n_pixels),
            (1.0, 0.0, 0.0, 0.0, 120)
        );
        assert!(r.ci95.is_nan());
        let bare = EvalScene {
            model_uncertainty: None,
            ..scene
        };
        assert!(matches!(
            summarize("s", "t", &[scene, bare]),
            Err(Error::MissingArtifact(_))
        ));
        assert!(matches!(summarize("s", "t", &[]), Err(Error::EmptyDataset)));
    }
}
