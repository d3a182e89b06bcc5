//! Post-hoc model uncertainty from a bank of (embedding, label) pairs.
//!
//! A query's `knn` nearest bank points give a Nadaraya-Watson prediction
//! `g(x)`, the kernel-weighted label variance `sigma2(x)` and a kernel density
//! `p(x)`; the excess-risk approximation is
//!
//! `U_m = 2 * sqrt((2/pi) * (C/N) * sigma2(x) / max(p(x), eps))`.
//!
//! `p(x)` is the mean kernel weight over the bank, `(1/M) sum K(x - s_i)`.
//! The `h^d Z_K` normalization of a proper density is a constant for a fixed
//! kernel and is left inside `C`.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{DisparityMap, EmbeddingVolume, Mask, UncertaintyMap};

/// Density floor.
pub const DENSITY_EPS: f64 = 1e-12;
pub const DEFAULT_BANDWIDTH: f64 = 4.0;
pub const DEFAULT_KNN: usize = 50;
pub const DEFAULT_RISK_CONSTANT: f64 = 1.0;
/// Values of `U_m` above this are clamped and flagged.
pub const DEFAULT_CAP: f64 = 1e3;
pub const DEFAULT_BANK_CAP: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Kernel {
    /// `exp(-|a-b|^2 / (2 h^2))`
    Rbf { h: f64 },
    /// `max(0, 1 - |a-b|^2 / h^2)`
    Epanechnikov { h: f64 },
    /// `max(0, a.b + offset)^degree`
    Polynomial { degree: u32, offset: f64 },
}

impl Kernel {
    pub fn family(&self) -> &'static str {
        match self {
            Kernel::Rbf { .. } => "rbf",
            Kernel::Epanechnikov { .. } => "epanechnikov",
            Kernel::Polynomial { .. } => "polynomial",
        }
    }

    /// Builds a kernel from a family name and its bandwidth text: `h` for
    /// rbf/epanechnikov, `degree,offset` for polynomial.
    pub fn parse(family: &str, bandwidth: &str) -> Result<Self> {
        let bad =
            || Error::InvalidConfig(format!("bad bandwidth {bandwidth:?} for kernel {family}"));
        let kernel = match family {
            "rbf" | "epanechnikov" => {
                let h: f64 = bandwidth.trim().parse().map_err(|_| bad())?;
                if family == "rbf" {
                    Kernel::Rbf { h }
                } else {
                    Kernel::Epanechnikov { h }
                }
            }
            "polynomial" => {
                let (d, o) = bandwidth.split_once(',').ok_or_else(bad)?;
                Kernel::Polynomial {
                    degree: d.trim().parse().map_err(|_| bad())?,
                    offset: o.trim().parse().map_err(|_| bad())?,
                }
            }
            _ => {
                return Err(Error::InvalidConfig(format!(
                    "unknown kernel family {family:?}"
                )))
            }
        };
        kernel.validate()?;
        Ok(kernel)
    }

    /// Bandwidth text accepted by [`Kernel::parse`].
    pub fn bandwidth_text(&self) -> String {
        match *self {
            Kernel::Rbf { h } | Kernel::Epanechnikov { h } => h.to_string(),
            Kernel::Polynomial { degree, offset } => format!("{degree},{offset}"),
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            Kernel::Rbf { h } | Kernel::Epanechnikov { h } if !(h.is_finite() && h > 0.0) => Err(
                Error::InvalidConfig(format!("bandwidth must be positive, got {h}")),
            ),
            Kernel::Polynomial { degree: 0, .. } => Err(Error::InvalidConfig(
                "polynomial degree must be >= 1".into(),
            )),
            Kernel::Polynomial { offset, .. } if !offset.is_finite() => Err(Error::InvalidConfig(
                "polynomial offset must be finite".into(),
            )),
            _ => Ok(()),
        }
    }

    /// Weight from the squared distance and the dot product of the two points.
    #[inline]
    fn weight(&self, dist2: f64, dot: f64) -> f64 {
        match *self {
            Kernel::Rbf { h } => (-dist2 / (2.0 * h * h)).exp(),
            Kernel::Epanechnikov { h } => (1.0 - dist2 / (h * h)).max(0.0),
            Kernel::Polynomial { degree, offset } => (dot + offset).max(0.0).powi(degree as i32),
        }
    }
}

impl fmt::Display for Kernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({})", self.family(), self.bandwidth_text())
    }
}

impl FromStr for Kernel {
    type Err = Error;

    /// `rbf:2`, `epanechnikov:4`, `polynomial:2,1`.
    fn from_str(s: &str) -> Result<Self> {
        let (family, bw) = s
            .split_once(':')
            .ok_or_else(|| Error::InvalidConfig(format!("expected family:bandwidth, got {s:?}")))?;
        Kernel::parse(family, bw)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelSpec {
    pub kernel: Kernel,
    pub knn: usize,
    /// Risk constant `C`.
    pub c: f64,
    pub cap: f64,
}

impl Default for KernelSpec {
    fn default() -> Self {
        Self {
            kernel: Kernel::Rbf {
                h: DEFAULT_BANDWIDTH,
            },
            knn: DEFAULT_KNN,
            c: DEFAULT_RISK_CONSTANT,
            cap: DEFAULT_CAP,
        }
    }
}

impl KernelSpec {
    pub fn validate(&self) -> Result<()> {
        self.kernel.validate()?;
        if self.knn == 0 {
            return Err(Error::InvalidConfig("kernel.knn must be >= 1".into()));
        }
        if !(self.c.is_finite() && self.c > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "kernel.c must be positive, got {}",
                self.c
            )));
        }
        if !(self.cap > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "uncertainty cap must be positive, got {}",
                self.cap
            )));
        }
        Ok(())
    }
}

fn dist2_dot(a: &[f64], b: &[f64]) -> (f64, f64) {
    let (mut d2, mut dot) = (0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let d = x - y;
        d2 += d * d;
        dot += x * y;
    }
    (d2, dot)
}

pub fn kernel_eval(kernel: &Kernel, a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            actual: b.len(),
        });
    }
    let (d2, dot) = dist2_dot(a, b);
    Ok(kernel.weight(d2, dot))
}

/// Kernel-regression training set: `M` points of dimension `d` with labels,
/// plus the number of pixels `N` they were drawn from.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingBank {
    dim: usize,
    points: Vec<f64>,
    labels: Vec<f64>,
    source_count: u64,
}

impl EmbeddingBank {
    pub fn new(dim: usize, points: Vec<f64>, labels: Vec<f64>, source_count: u64) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::EmptyBank);
        }
        if dim == 0 || points.len() != dim * labels.len() {
            return Err(Error::DimensionMismatch {
                expected: dim * labels.len(),
                actual: points.len(),
            });
        }
        if points.iter().chain(&labels).any(|v| !v.is_finite()) {
            return Err(Error::InvalidConfig(
                "embedding bank entries must be finite".into(),
            ));
        }
        if source_count < labels.len() as u64 {
            return Err(Error::InvalidConfig(format!(
                "source count {source_count} is below the bank size {}",
                labels.len()
            )));
        }
        Ok(Self {
            dim,
            points,
            labels,
            source_count,
        })
    }

    /// Collects the embeddings of every pixel with a finite label (and inside
    /// `masks`, when given), reservoir-subsampled to at most `cap` points.
    /// `N` records the number of eligible pixels before subsampling.
    pub fn from_volumes(
        embeddings: &[EmbeddingVolume],
        labels: &[DisparityMap],
        masks: Option<&[Mask]>,
        cap: usize,
        seed: u64,
    ) -> Result<Self> {
        if embeddings.len() != labels.len() || masks.is_some_and(|m| m.len() != labels.len()) {
            return Err(Error::DimensionMismatch {
                expected: embeddings.len(),
                actual: labels.len(),
            });
        }
        let dim = embeddings.first().ok_or(Error::EmptyBank)?.dim();
        if cap == 0 {
            return Err(Error::InvalidConfig("bank.cap must be >= 1".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut points: Vec<f64> = Vec::new();
        let mut kept: Vec<f64> = Vec::new();
        let mut seen: u64 = 0;
        for (i, (emb, y)) in embeddings.iter().zip(labels).enumerate() {
            if emb.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    actual: emb.dim(),
                });
            }
            if emb.height() != y.height() || emb.width() != y.width() {
                return Err(Error::DimensionMismatch {
                    expected: emb.height() * emb.width(),
                    actual: y.len(),
                });
            }
            let mask = masks.map(|m| &m[i]);
            if let Some(m) = mask {
                y.check_shape(m)?;
            }
            for (j, (s, &t)) in emb.pixels().zip(y.as_slice()).enumerate() {
                if !t.is_finite() || mask.is_some_and(|m| !m.as_slice()[j]) {
                    continue;
                }
                seen += 1;
                if kept.len() < cap {
                    points.extend_from_slice(s);
                    kept.push(t);
                } else {
                    let slot = rng.gen_range(0..seen);
                    if (slot as usize) < cap {
                        let slot = slot as usize;
                        points[slot * dim..(slot + 1) * dim].copy_from_slice(s);
                        kept[slot] = t;
                    }
                }
            }
        }
        Self::new(dim, points, kept, seen)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Bank size `M`.
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn source_count(&self) -> u64 {
        self.source_count
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn labels(&self) -> &[f64] {
        &self.labels
    }

    /// Same points with a different recorded `N`.
    pub fn with_source_count(mut self, n: u64) -> Result<Self> {
        if n < self.len() as u64 {
            return Err(Error::InvalidConfig(format!(
                "source count {n} is below the bank size {}",
                self.len()
            )));
        }
        self.source_count = n;
        Ok(self)
    }
}

/// Excess-risk approximation `2 sqrt((2/pi) (C/N) sigma2 / max(p, eps))`.
pub fn excess_risk(sigma2: f64, density: f64, n: u64, c: f64) -> f64 {
    let ratio =
        (2.0 / std::f64::consts::PI) * (c / n as f64) * sigma2.max(0.0) / density.max(DENSITY_EPS);
    2.0 * ratio.sqrt()
}

/// Everything computed for one query.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QueryResult {
    pub prediction: f64,
    pub sigma2: f64,
    pub density: f64,
    pub model_uncertainty: f64,
    /// `model_uncertainty` hit the cap.
    pub clamped: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct UqEstimator {
    bank: EmbeddingBank,
    spec: KernelSpec,
}

pub fn fit(bank: EmbeddingBank, spec: KernelSpec) -> Result<UqEstimator> {
    spec.validate()?;
    if bank.is_empty() {
        return Err(Error::EmptyBank);
    }
    if spec.knn > bank.len() {
        return Err(Error::InvalidConfig(format!(
            "kernel.knn ({}) exceeds the bank size ({})",
            spec.knn,
            bank.len()
        )));
    }
    Ok(UqEstimator { bank, spec })
}

impl UqEstimator {
    pub fn bank(&self) -> &EmbeddingBank {
        &self.bank
    }

    pub fn spec(&self) -> &KernelSpec {
        &self.spec
    }

    fn check_dim(&self, query: &[f64]) -> Result<()> {
        if query.len() != self.bank.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.bank.dim(),
                actual: query.len(),
            });
        }
        Ok(())
    }

    /// Indices of the `knn` nearest bank points, ordered by (distance, index),
    /// with their squared distances and dot products.
    fn neighbors(&self, query: &[f64], buf: &mut Vec<(f64, f64, usize)>) {
        buf.clear();
        for i in 0..self.bank.len() {
            let (d2, dot) = dist2_dot(query, self.bank.point(i));
            buf.push((d2, dot, i));
        }
        let order =
            |a: &(f64, f64, usize), b: &(f64, f64, usize)| a.0.total_cmp(&b.0).then(a.2.cmp(&b.2));
        let k = self.spec.knn;
        if k < buf.len() {
            buf.select_nth_unstable_by(k - 1, order);
            buf.truncate(k);
        }
        buf.sort_unstable_by(order);
    }

    fn query_with(&self, query: &[f64], buf: &mut Vec<(f64, f64, usize)>) -> QueryResult {
        self.neighbors(query, buf);
        let labels = self.bank.labels();
        let kernel = self.spec.kernel;
        // RBF weights are computed relative to the nearest neighbor so that
        // they cannot all underflow; the common factor is restored for p(x).
        let (shift, scale_log) = match kernel {
            Kernel::Rbf { h } => (buf[0].0, -buf[0].0 / (2.0 * h * h)),
            _ => (0.0, 0.0),
        };
        let mut wsum = 0.0;
        let mut wy = 0.0;
        for &(d2, dot, i) in buf.iter() {
            let w = kernel.weight(d2 - shift, dot);
            wsum += w;
            wy += w * labels[i];
        }
        let (prediction, sigma2) = if wsum > 0.0 && wsum.is_finite() {
            let g = wy / wsum;
            let var = buf
                .iter()
                .map(|&(d2, dot, i)| kernel.weight(d2 - shift, dot) * (labels[i] - g).powi(2))
                .sum::<f64>()
                / wsum;
            (g, var)
        } else {
            // Degenerate weights: nearest label, unweighted spread.
            let g = labels[buf[0].2];
            let var = buf
                .iter()
                .map(|&(_, _, i)| (labels[i] - g).powi(2))
                .sum::<f64>()
                / buf.len() as f64;
            (g, var)
        };
        let density = if wsum > 0.0 && wsum.is_finite() {
            (wsum.ln() + scale_log - (self.bank.len() as f64).ln()).exp()
        } else {
            0.0
        };
        let raw = excess_risk(sigma2, density, self.bank.source_count(), self.spec.c);
        let clamped = !(raw <= self.spec.cap);
        QueryResult {
            prediction,
            sigma2,
            density,
            model_uncertainty: if clamped { self.spec.cap } else { raw },
            clamped,
        }
    }

    pub fn query(&self, query: &[f64]) -> Result<QueryResult> {
        self.check_dim(query)?;
        Ok(self.query_with(query, &mut Vec::with_capacity(self.bank.len())))
    }

    /// Nadaraya-Watson prediction over the neighborhood.
    pub fn predict(&self, query: &[f64]) -> Result<f64> {
        Ok(self.query(query)?.prediction)
    }

    pub fn model_uncertainty(&self, query: &[f64]) -> Result<f64> {
        Ok(self.query(query)?.model_uncertainty)
    }
}

/// Per-pixel model uncertainty and the pixels whose value hit the cap.
#[derive(Debug, Clone, PartialEq)]
pub struct UqMap {
    pub model_uncertainty: UncertaintyMap,
    pub clamped: Mask,
}

pub fn uq_map(est: &UqEstimator, embeddings: &EmbeddingVolume) -> Result<UqMap> {
    if embeddings.dim() != est.bank.dim() {
        return Err(Error::DimensionMismatch {
            expected: est.bank.dim(),
            actual: embeddings.dim(),
        });
    }
    let results: Vec<QueryResult> = embeddings
        .as_slice()
        .par_chunks(embeddings.dim())
        .map_init(
            || Vec::with_capacity(est.bank.len()),
            |buf, q| est.query_with(q, buf),
        )
        .collect();
    let (h, w) = (embeddings.height(), embeddings.width());
    Ok(UqMap {
        model_uncertainty: UncertaintyMap::from_vec(
            h,
            w,
            results.iter().map(|r| r.model_uncertainty).collect(),
        )?,
        clamped: Mask::from_vec(h, w, results.iter().map(|r| r.clamped).collect())?,
    })
}

/// `U_t = U_d + U_m`, pixelwise.
pub fn total_uncertainty(data: &UncertaintyMap, model: &UncertaintyMap) -> Result<UncertaintyMap> {
    data.check_shape(model)?;
    let sum = data
        .as_slice()
        .iter()
        .zip(model.as_slice())
        .map(|(a, b)| a + b)
        .collect();
    UncertaintyMap::from_vec(data.height(), data.width(), sum)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn bank1d(points: &[f64], labels: &[f64]) -> EmbeddingBank {
        EmbeddingBank::new(1, points.to_vec(), labels.to_vec(), labels.len() as u64).unwrap()
    }

    fn spec(kernel: Kernel, knn: usize) -> KernelSpec {
        KernelSpec {
            kernel,
            knn,
            ..KernelSpec::default()
        }
    }

    #[test]
    fn kernel_values() {
        let rbf = Kernel::Rbf { h: 1.0 };
        assert_eq!(kernel_eval(&rbf, &[1.0, 2.0], &[1.0, 2.0]).unwrap(), 1.0);
        assert_relative_eq!(
            kernel_eval(&rbf, &[0.0, 0.0], &[1.0, 1.0]).unwrap(),
            (-1.0f64).exp(),
            epsilon = 1e-15
        );
        let ep = Kernel::Epanechnikov { h: 1.0 };
        assert_eq!(kernel_eval(&ep, &[0.0], &[1.0]).unwrap(), 0.0);
        assert_eq!(kernel_eval(&ep, &[0.0], &[3.0]).unwrap(), 0.0);
        assert_relative_eq!(kernel_eval(&ep, &[0.0], &[0.5]).unwrap(), 0.75);
        let poly = Kernel::Polynomial {
            degree: 2,
            offset: 1.0,
        };
        assert_eq!(kernel_eval(&poly, &[1.0, 2.0], &[3.0, 0.5]).unwrap(), 25.0);
        assert_eq!(kernel_eval(&poly, &[1.0], &[-5.0]).unwrap(), 0.0);
        assert!(kernel_eval(&rbf, &[0.0], &[0.0, 1.0]).is_err());
    }

    #[test]
    fn kernel_parsing() {
        assert_eq!("rbf:2".parse::<Kernel>().unwrap(), Kernel::Rbf { h: 2.0 });
        assert_eq!(
            "polynomial:3,0.5".parse::<Kernel>().unwrap(),
            Kernel::Polynomial {
                degree: 3,
                offset: 0.5
            }
        );
        assert!("rbf:-1".parse::<Kernel>().is_err());
        assert!("gauss:1".parse::<Kernel>().is_err());
        let k = Kernel::Epanechnikov { h: 4.0 };
        assert_eq!(Kernel::parse(k.family(), &k.bandwidth_text()).unwrap(), k);
    }

    #[test]
    fn single_point_bank_predicts_its_label() {
        let est = fit(bank1d(&[0.0], &[7.5]), spec(Kernel::Rbf { h: 1.0 }, 1)).unwrap();
        for q in [-100.0, 0.0, 3.0] {
            assert_eq!(est.predict(&[q]).unwrap(), 7.5);
        }
    }

    #[test]
    fn two_point_regression() {
        let est = fit(
            bank1d(&[0.0, 2.0], &[1.0, 3.0]),
            spec(Kernel::Rbf { h: 1.0 }, 2),
        )
        .unwrap();
        let e2 = (-2.0f64).exp();
        assert_relative_eq!(
            est.predict(&[0.0]).unwrap(),
            (1.0 + 3.0 * e2) / (1.0 + e2),
            epsilon = 1e-12
        );
        assert_relative_eq!(est.predict(&[0.0]).unwrap(), 1.23841, epsilon = 1e-5);
        let sym = fit(
            bank1d(&[-1.0, 1.0], &[0.0, 2.0]),
            spec(Kernel::Rbf { h: 1.0 }, 2),
        )
        .unwrap();
        assert_relative_eq!(sym.predict(&[0.0]).unwrap(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn compact_kernel_isolates_exact_match() {
        let est = fit(
            bank1d(&[0.0, 10.0, 20.0], &[1.0, 2.0, 3.0]),
            spec(Kernel::Epanechnikov { h: 1.0 }, 3),
        )
        .unwrap();
        assert_eq!(est.predict(&[10.0]).unwrap(), 2.0);
        // Nothing within the support: nearest label, capped uncertainty.
        let far = est.query(&[5.2]).unwrap();
        assert_eq!(far.prediction, 2.0);
        assert_eq!(far.density, 0.0);
        assert!(far.clamped);
    }

    #[test]
    fn identical_labels_have_zero_uncertainty() {
        let est = fit(
            bank1d(&[0.0, 1.0, 2.0], &[4.0, 4.0, 4.0]),
            spec(Kernel::Rbf { h: 1.0 }, 3),
        )
        .unwrap();
        let r = est.query(&[0.5]).unwrap();
        assert_eq!(r.sigma2, 0.0);
        assert_eq!(r.model_uncertainty, 0.0);
    }

    #[test]
    fn excess_risk_scales_with_n() {
        let a = excess_risk(2.0, 0.1, 1000, 1.0);
        let b = excess_risk(2.0, 0.1, 2000, 1.0);
        assert_relative_eq!(b / a, 1.0 / 2f64.sqrt(), epsilon = 1e-15);
        assert_eq!(excess_risk(0.0, 0.0, 10, 1.0), 0.0);
    }

    #[test]
    fn fit_errors() {
        let b = bank1d(&[0.0, 1.0], &[0.0, 1.0]);
        assert!(fit(b.clone(), spec(Kernel::Rbf { h: 1.0 }, 3)).is_err());
        assert!(fit(b, spec(Kernel::Rbf { h: 1.0 }, 0)).is_err());
        assert!(matches!(
            EmbeddingBank::new(2, vec![], vec![], 0),
            Err(Error::EmptyBank)
        ));
        assert!(EmbeddingBank::new(2, vec![0.0; 3], vec![1.0], 1).is_err());
    }

    #[test]
    fn reservoir_bank_records_source_count() {
        let emb = EmbeddingVolume::new(4, 5, 2, (0..40).map(|v| v as f64).collect()).unwrap();
        let mut y = DisparityMap::filled(4, 5, 1.0);
        y.set(0, 0, f64::INFINITY);
        let bank = EmbeddingBank::from_volumes(
            &[emb.clone(), emb.clone()],
            &[y.clone(), y.clone()],
            None,
            7,
            3,
        )
        .unwrap();
        assert_eq!(bank.len(), 7);
        assert_eq!(bank.source_count(), 38);
        let again = EmbeddingBank::from_volumes(
            &[emb.clone(), emb.clone()],
            &[y.clone(), y.clone()],
            None,
            7,
            3,
        )
        .unwrap();
        assert_eq!(bank, again);
        let all = EmbeddingBank::from_volumes(&[emb], &[y], None, 100, 3).unwrap();
        assert_eq!(all.len(), 19);
        assert_eq!(all.point(0), &[2.0, 3.0]);
    }

    #[test]
    fn uq_map_of_constant_embeddings_is_constant() {
        let bank = EmbeddingBank::new(
            2,
            vec![0.0, 0.0, 1.0, 0.0, 0.0, 1.0],
            vec![1.0, 2.0, 4.0],
            3,
        )
        .unwrap();
        let est = fit(bank, spec(Kernel::Rbf { h: 1.0 }, 3)).unwrap();
        let emb = EmbeddingVolume::new(3, 3, 2, [0.3, 0.2].repeat(9)).unwrap();
        let map = uq_map(&est, &emb).unwrap();
        let v = map.model_uncertainty.as_slice()[0];
        assert!(v > 0.0);
        assert!(map.model_uncertainty.as_slice().iter().all(|&u| u == v));
        assert_eq!(map, uq_map(&est, &emb).unwrap());
        let wrong = EmbeddingVolume::new(1, 1, 3, vec![0.0; 3]).unwrap();
        assert!(uq_map(&est, &wrong).is_err());
    }
}
