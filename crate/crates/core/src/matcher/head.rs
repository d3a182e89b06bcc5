//! Per-pixel head mapping a normalized cost vector to `K` logits:
//!
//! `logits = skip * x + W2 tanh(W1 x + b1) + b2`
//!
//! `x` is the negated cost vector standardized to zero mean and unit variance.
//! Parameters live in one flat vector, `[skip | W1 | b1 | W2 | b2]`, so that
//! gradient descent and finite-difference checks operate on a single slice.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};

pub const DEFAULT_HIDDEN: usize = 32;
/// Initial value of the diagonal skip gain.
pub const DEFAULT_SKIP_GAIN: f64 = 3.0;

#[derive(Debug, Clone, PartialEq)]
pub struct HeadParameters {
    bins: usize,
    hidden: usize,
    params: Vec<f64>,
}

/// Offsets into the flat parameter vector.
#[derive(Debug, Clone, Copy)]
struct Offsets {
    w1: usize,
    b1: usize,
    w2: usize,
    b2: usize,
    end: usize,
}

impl Offsets {
    fn new(bins: usize, hidden: usize) -> Self {
        let w1 = bins;
        let b1 = w1 + hidden * bins;
        let w2 = b1 + hidden;
        let b2 = w2 + bins * hidden;
        Self {
            w1,
            b1,
            w2,
            b2,
            end: b2 + bins,
        }
    }
}

pub fn param_count(bins: usize, hidden: usize) -> usize {
    Offsets::new(bins, hidden).end
}

impl HeadParameters {
    /// Seeded random initialization: skip gain [`DEFAULT_SKIP_GAIN`], small
    /// Gaussian weights, zero biases.
    pub fn init(bins: usize, hidden: usize, seed: u64) -> Self {
        let off = Offsets::new(bins, hidden);
        let mut params = vec![0.0; off.end];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        params[..off.w1].fill(DEFAULT_SKIP_GAIN);
        let w1_std = 1.0 / (bins as f64).sqrt();
        let w2_std = 0.1 / (hidden as f64).sqrt();
        let n1 = Normal::new(0.0, w1_std).expect("std > 0");
        let n2 = Normal::new(0.0, w2_std).expect("std > 0");
        for p in &mut params[off.w1..off.b1] {
            *p = n1.sample(&mut rng);
        }
        for p in &mut params[off.w2..off.b2] {
            *p = n2.sample(&mut rng);
        }
        Self {
            bins,
            hidden,
            params,
        }
    }

    /// Unit skip gain and all other parameters zero: logits equal the input.
    pub fn identity(bins: usize, hidden: usize) -> Self {
        let off = Offsets::new(bins, hidden);
        let mut params = vec![0.0; off.end];
        params[..off.w1].fill(1.0);
        Self {
            bins,
            hidden,
            params,
        }
    }

    pub fn from_flat(bins: usize, hidden: usize, params: Vec<f64>) -> Result<Self> {
        let expected = param_count(bins, hidden);
        if params.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                actual: params.len(),
            });
        }
        if params.iter().any(|p| !p.is_finite()) {
            return Err(Error::InvalidConfig("non-finite head parameter".into()));
        }
        Ok(Self {
            bins,
            hidden,
            params,
        })
    }

    pub fn bins(&self) -> usize {
        self.bins
    }

    pub fn hidden(&self) -> usize {
        self.hidden
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.params
    }

    pub(crate) fn as_flat_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    /// Logits for one normalized input; `act` receives the hidden activations.
    #[inline]
    pub(crate) fn forward_into(&self, x: &[f64], act: &mut [f64], out: &mut [f64]) {
        let (k, h) = (self.bins, self.hidden);
        let off = Offsets::new(k, h);
        let p = &self.params;
        for j in 0..h {
            let row = &p[off.w1 + j * k..off.w1 + (j + 1) * k];
            let z: f64 = row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + p[off.b1 + j];
            act[j] = z.tanh();
        }
        for i in 0..k {
            let row = &p[off.w2 + i * h..off.w2 + (i + 1) * h];
            let z: f64 = row.iter().zip(act.iter()).map(|(w, a)| w * a).sum();
            out[i] = p[i] * x[i] + z + p[off.b2 + i];
        }
    }

    /// Accumulates d loss / d params into `grad` given d loss / d logits.
    #[inline]
    pub(crate) fn backward_into(
        &self,
        x: &[f64],
        act: &[f64],
        dlogits: &[f64],
        dact: &mut [f64],
        grad: &mut [f64],
    ) {
        let (k, h) = (self.bins, self.hidden);
        let off = Offsets::new(k, h);
        let p = &self.params;
        dact.fill(0.0);
        for i in 0..k {
            let d = dlogits[i];
            grad[i] += d * x[i];
            grad[off.b2 + i] += d;
            let w_row = &p[off.w2 + i * h..off.w2 + (i + 1) * h];
            let g_row = &mut grad[off.w2 + i * h..off.w2 + (i + 1) * h];
            for j in 0..h {
                g_row[j] += d * act[j];
                dact[j] += d * w_row[j];
            }
        }
        for j in 0..h {
            let dz = dact[j] * (1.0 - act[j] * act[j]);
            grad[off.b1 + j] += dz;
            let g_row = &mut grad[off.w1 + j * k..off.w1 + (j + 1) * k];
            for (g, v) in g_row.iter_mut().zip(x) {
                *g += dz * v;
            }
        }
    }

    /// Logits for a single normalized input.
    pub fn logits(&self, x: &[f64]) -> Vec<f64> {
        let mut act = vec![0.0; self.hidden];
        let mut out = vec![0.0; self.bins];
        self.forward_into(x, &mut act, &mut out);
        out
    }
}

/// Negated costs standardized to zero mean and unit variance; all zeros when
/// the cost vector is constant.
pub fn normalize_cost(cost: &[u16], out: &mut [f64]) {
    let n = cost.len() as f64;
    let mean = cost.iter().map(|&c| -(c as f64)).sum::<f64>() / n;
    let var = cost
        .iter()
        .map(|&c| {
            let d = -(c as f64) - mean;
            d * d
        })
        .sum::<f64>()
        / n;
    if var <= 1e-24 {
        out.fill(0.0);
        return;
    }
    let inv = 1.0 / var.sqrt();
    for (o, &c) in out.iter_mut().zip(cost) {
        *o = (-(c as f64) - mean) * inv;
    }
}
