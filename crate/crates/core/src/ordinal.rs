//! Ordinal-regression supervision on the per-pixel CDF.
//!
//! Each threshold `t_{k+1}` is a binary question "is the disparity <= t_{k+1}?",
//! answered by the CDF `F_k` of the softmax over logits. The loss is the sum of
//! binary cross-entropies over all thresholds.

use rayon::prelude::*;

use crate::distribution::{softmax_into, BinLayout};
use crate::error::{Error, Result};
use crate::grid::{DisparityMap, FeatureVolume, Mask};

/// Lower bound applied to the argument of every log in the loss.
pub const LOG_FLOOR: f64 = 1e-7;

/// Threshold indicators `[y <= t_{k+1}]` for `k = 0..K`, stored as the index
/// of the first 1 (indicators are monotone).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OrdinalTarget {
    count: usize,
    step: usize,
}

impl OrdinalTarget {
    /// Builds a target from explicit indicators; they must be monotone.
    pub fn from_indicators(indicators: &[bool]) -> Result<Self> {
        let step = indicators
            .iter()
            .position(|&b| b)
            .unwrap_or(indicators.len());
        if indicators[step..].iter().any(|&b| !b) {
            return Err(Error::InvalidConfig(
                "ordinal indicators must be monotone non-decreasing".into(),
            ));
        }
        Ok(Self {
            count: indicators.len(),
            step,
        })
    }

    pub fn len(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    /// Index of the first threshold the label does not exceed.
    pub fn step(&self) -> usize {
        self.step
    }

    pub fn indicator(&self, k: usize) -> bool {
        k >= self.step
    }

    pub fn indicators(&self) -> Vec<bool> {
        (0..self.count).map(|k| self.indicator(k)).collect()
    }
}

/// Finite pre-softmax scores, one per bin.
#[derive(Debug, Clone, PartialEq)]
pub struct LogitVector(Vec<f64>);

impl LogitVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidPmf("non-finite logit".into()));
        }
        Ok(Self(values))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Encodes a label; labels outside `[alpha, beta]` are clamped first.
pub fn encode_target(y: f64, layout: &BinLayout) -> Result<OrdinalTarget> {
    if !y.is_finite() {
        return Err(Error::NonFiniteLabel(y));
    }
    Ok(encode_clamped(layout.clamp(y), layout.edges()))
}

#[inline]
pub(crate) fn encode_clamped(y: f64, edges: &[f64]) -> OrdinalTarget {
    let count = edges.len() - 1;
    // first k with y <= t_{k+1}
    let step = edges[1..].partition_point(|&t| t < y);
    OrdinalTarget { count, step }
}

fn check(logits: &LogitVector, target: &OrdinalTarget) -> Result<()> {
    if logits.len() != target.len() {
        return Err(Error::DimensionMismatch {
            expected: target.len(),
            actual: logits.len(),
        });
    }
    Ok(())
}

pub fn or_loss(logits: &LogitVector, target: &OrdinalTarget) -> Result<f64> {
    check(logits, target)?;
    let k = logits.len();
    let mut scratch = Scratch::new(k);
    Ok(scratch.loss(logits.as_slice(), target.step, false))
}

/// Gradient of [`or_loss`] with respect to the logits.
pub fn or_loss_grad(logits: &LogitVector, target: &OrdinalTarget) -> Result<Vec<f64>> {
    check(logits, target)?;
    let k = logits.len();
    let mut scratch = Scratch::new(k);
    scratch.loss(logits.as_slice(), target.step, true);
    Ok(scratch.grad)
}

/// Reusable buffers for the fused loss/gradient evaluation.
#[derive(Debug, Clone)]
pub(crate) struct Scratch {
    pub probs: Vec<f64>,
    cdf: Vec<f64>,
    tail: Vec<f64>,
    dprob: Vec<f64>,
    pub grad: Vec<f64>,
}

impl Scratch {
    pub fn new(k: usize) -> Self {
        Self {
            probs: vec![0.0; k],
            cdf: vec![0.0; k],
            tail: vec![0.0; k],
            dprob: vec![0.0; k],
            grad: vec![0.0; k],
        }
    }

    /// Loss for a target whose indicators switch on at `step`. Leaves the
    /// softmax in `probs` and, when `with_grad`, d loss / d logits in `grad`.
    pub fn loss(&mut self, logits: &[f64], step: usize, with_grad: bool) -> f64 {
        let k = logits.len();
        softmax_into(logits, &mut self.probs);

        // F_k and the complement 1 - F_k as an explicit tail sum.
        let mut acc = 0.0;
        for j in 0..k {
            acc += self.probs[j];
            self.cdf[j] = acc;
        }
        acc = 0.0;
        for j in (0..k).rev() {
            self.tail[j] = acc;
            acc += self.probs[j];
        }

        let mut loss = 0.0;
        // dprob[j] holds dL/dF_j for positives (j >= step), dL/dT_j otherwise.
        for j in 0..k {
            let value = if j >= step { self.cdf[j] } else { self.tail[j] };
            loss -= value.max(LOG_FLOOR).ln();
            if with_grad {
                self.dprob[j] = if value > LOG_FLOOR { -1.0 / value } else { 0.0 };
            }
        }
        if !with_grad {
            return loss;
        }

        // dL/dp_i = sum_{j >= i, j >= step} dF_j + sum_{j < i, j < step} dT_j.
        let mut suffix = 0.0;
        for i in (0..k).rev() {
            if i >= step {
                suffix += self.dprob[i];
            }
            self.grad[i] = suffix;
        }
        let mut prefix = 0.0;
        for i in 0..k {
            self.grad[i] += prefix;
            if i < step {
                prefix += self.dprob[i];
            }
        }
        // grad now holds dL/dp; chain through softmax.
        let dot: f64 = self.grad.iter().zip(&self.probs).map(|(g, p)| g * p).sum();
        for i in 0..k {
            self.grad[i] = self.probs[i] * (self.grad[i] - dot);
        }
        loss
    }
}

/// Mean OR loss over pixels that are selected by `mask` and carry a finite label.
pub fn image_loss(
    logits: &FeatureVolume,
    labels: &DisparityMap,
    mask: &Mask,
    layout: &BinLayout,
) -> Result<f64> {
    if logits.dim() != layout.count() {
        return Err(Error::DimensionMismatch {
            expected: layout.count(),
            actual: logits.dim(),
        });
    }
    if logits.height() != labels.height()
        || logits.width() != labels.width()
        || !labels.same_shape(mask)
    {
        return Err(Error::DimensionMismatch {
            expected: labels.len(),
            actual: logits.height() * logits.width(),
        });
    }
    let edges = layout.edges();
    let k = layout.count();
    let per_pixel: Vec<Option<f64>> = logits
        .as_slice()
        .par_chunks(k)
        .zip(labels.as_slice().par_iter())
        .zip(mask.as_slice().par_iter())
        .map_init(
            || Scratch::new(k),
            |scratch, ((z, &y), &m)| {
                (m && y.is_finite()).then(|| {
                    let target = encode_clamped(layout.clamp(y), edges);
                    scratch.loss(z, target.step, false)
                })
            },
        )
        .collect();
    let (sum, n) = per_pixel
        .iter()
        .flatten()
        .fold((0.0, 0usize), |(s, n), l| (s + l, n + 1));
    if n == 0 {
        return Err(Error::EmptyMask);
    }
    Ok(sum / n as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn uni64() -> BinLayout {
        BinLayout::uniform(0.0, 64.0, 64).unwrap()
    }

    #[test]
    fn encode_examples() {
        let layout = uni64();
        let t = encode_target(10.5, &layout).unwrap();
        let ind = t.indicators();
        assert!(ind[..10].iter().all(|&b| !b));
        assert!(ind[10..].iter().all(|&b| b));
        assert_eq!(ind.len(), 64);

        assert!(encode_target(0.0, &layout)
            .unwrap()
            .indicators()
            .iter()
            .all(|&b| b));

        let top = encode_target(64.0, &layout).unwrap().indicators();
        assert!(top[..63].iter().all(|&b| !b) && top[63]);
    }

    #[test]
    fn encode_ties_use_less_equal() {
        let layout = uni64();
        // y = t_11 = 11 satisfies y <= t_11, the upper edge of bin 10.
        assert_eq!(encode_target(11.0, &layout).unwrap().step(), 10);
    }

    #[test]
    fn encode_clamps_out_of_range_labels() {
        let layout = uni64();
        assert_eq!(encode_target(-3.0, &layout).unwrap().step(), 0);
        assert_eq!(encode_target(90.0, &layout).unwrap().step(), 63);
        assert!(matches!(
            encode_target(f64::NAN, &layout),
            Err(Error::NonFiniteLabel(_))
        ));
    }

    #[test]
    fn from_indicators_rejects_non_monotone() {
        assert!(OrdinalTarget::from_indicators(&[false, true, false]).is_err());
        let t = OrdinalTarget::from_indicators(&[false, false, true]).unwrap();
        assert_eq!(t.step(), 2);
    }

    #[test]
    fn two_bin_hand_values() {
        let logits = LogitVector::new(vec![0.0, 0.0]).unwrap();
        let target = OrdinalTarget::from_indicators(&[true, true]).unwrap();
        assert_abs_diff_eq!(
            or_loss(&logits, &target).unwrap(),
            std::f64::consts::LN_2,
            epsilon = 1e-12
        );
        // F_0 = p_0, loss = -log p_0 => d/dz_0 = p_0 - 1 = -1/2, d/dz_1 = +1/2.
        let g = or_loss_grad(&logits, &target).unwrap();
        assert_abs_diff_eq!(g[0], -0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(g[1], 0.5, epsilon = 1e-12);
    }

    #[test]
    fn saturated_prediction_has_no_loss() {
        for k in [2usize, 8, 64] {
            for bin in [0, k / 2, k - 1] {
                let mut z = vec![0.0; k];
                z[bin] = 30.0;
                let logits = LogitVector::new(z).unwrap();
                let target =
                    OrdinalTarget::from_indicators(&(0..k).map(|j| j >= bin).collect::<Vec<_>>())
                        .unwrap();
                assert!(or_loss(&logits, &target).unwrap() <= 1e-6);
                let g = or_loss_grad(&logits, &target).unwrap();
                let norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
                assert!(norm <= 1e-6, "k={k} bin={bin} norm={norm}");
            }
        }
    }

    #[test]
    fn loss_is_shift_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let layout = uni64();
        for _ in 0..20 {
            let z: Vec<f64> = (0..64).map(|_| rng.gen_range(-4.0..4.0)).collect();
            let c = rng.gen_range(-100.0..100.0);
            let shifted: Vec<f64> = z.iter().map(|v| v + c).collect();
            let t = encode_target(rng.gen_range(0.0..64.0), &layout).unwrap();
            let a = or_loss(&LogitVector::new(z).unwrap(), &t).unwrap();
            let b = or_loss(&LogitVector::new(shifted).unwrap(), &t).unwrap();
            assert!((a - b).abs() <= 1e-9);
        }
    }

    #[test]
    fn mismatched_lengths_error() {
        let logits = LogitVector::new(vec![0.0; 3]).unwrap();
        let t = OrdinalTarget::from_indicators(&[true, true]).unwrap();
        assert!(or_loss(&logits, &t).is_err());
        assert!(or_loss_grad(&logits, &t).is_err());
        assert!(LogitVector::new(vec![f64::INFINITY]).is_err());
    }

    #[test]
    fn image_loss_means_over_valid_pixels() {
        let layout = BinLayout::uniform(0.0, 8.0, 8).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let z: Vec<f64> = (0..8).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let data: Vec<f64> = (0..6).flat_map(|_| z.clone()).collect();
        let vol = FeatureVolume::new(2, 3, 8, data).unwrap();
        let labels = DisparityMap::filled(2, 3, 3.3);
        let single = or_loss(
            &LogitVector::new(z.clone()).unwrap(),
            &encode_target(3.3, &layout).unwrap(),
        )
        .unwrap();
        let all = Mask::filled(2, 3, true);
        assert_abs_diff_eq!(
            image_loss(&vol, &labels, &all, &layout).unwrap(),
            single,
            epsilon = 1e-12
        );

        // Invalid labels are excluded like masked pixels.
        let mut labels2 = labels.clone();
        labels2.set(0, 0, f64::NAN);
        assert!(image_loss(&vol, &labels2, &all, &layout).is_ok());

        let none = Mask::filled(2, 3, false);
        assert!(matches!(
            image_loss(&vol, &labels, &none, &layout),
            Err(Error::EmptyMask)
        ));
    }
}
