//! Disparity bins and the per-pixel distribution over them.
//!
//! A [`BinLayout`] partitions `[alpha, beta]` into `K` half-open bins
//! `(t_k, t_{k+1}]`. A [`Pmf`] assigns probability mass to each bin; its mean
//! over bin midpoints is the disparity estimate and its variance is the data
//! uncertainty. Quantiles treat the density as uniform inside each bin.

use crate::error::{Error, Result};

/// Tolerance on `sum(mass) == 1`.
pub const MASS_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinScheme {
    /// `t_k = alpha + k (beta - alpha) / K`.
    Uniform,
    /// `t_k = exp(log alpha + k log(beta / alpha) / K)`; geometric spacing.
    IndexRange,
}

impl BinScheme {
    pub fn name(self) -> &'static str {
        match self {
            BinScheme::Uniform => "uniform",
            BinScheme::IndexRange => "index-range",
        }
    }

    pub fn code(self) -> u8 {
        match self {
            BinScheme::Uniform => 0,
            BinScheme::IndexRange => 1,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(BinScheme::Uniform),
            1 => Some(BinScheme::IndexRange),
            _ => None,
        }
    }
}

impl std::str::FromStr for BinScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" | "uni" => Ok(BinScheme::Uniform),
            "index-range" | "ir" => Ok(BinScheme::IndexRange),
            other => Err(Error::InvalidConfig(format!(
                "unknown bin scheme '{other}'"
            ))),
        }
    }
}

/// Partition of the disparity range into `count` ordered bins.
#[derive(Debug, Clone, PartialEq)]
pub struct BinLayout {
    alpha: f64,
    beta: f64,
    scheme: BinScheme,
    edges: Vec<f64>,
    midpoints: Vec<f64>,
}

impl BinLayout {
    pub fn new(alpha: f64, beta: f64, count: usize, scheme: BinScheme) -> Result<Self> {
        if count < 2 {
            return Err(Error::TooFewBins(count));
        }
        if !(alpha.is_finite() && beta.is_finite()) || beta <= alpha {
            return Err(Error::InvalidRange { alpha, beta });
        }
        let k_total = count as f64;
        let mut edges: Vec<f64> = match scheme {
            BinScheme::Uniform => (0..=count)
                .map(|k| alpha + k as f64 * (beta - alpha) / k_total)
                .collect(),
            BinScheme::IndexRange => {
                if alpha <= 0.0 {
                    return Err(Error::InvalidLogRange { alpha });
                }
                let (log_alpha, log_ratio) = (alpha.ln(), (beta / alpha).ln());
                (0..=count)
                    .map(|k| (log_alpha + k as f64 * log_ratio / k_total).exp())
                    .collect()
            }
        };
        edges[0] = alpha;
        edges[count] = beta;
        if edges.windows(2).any(|w| w[1] <= w[0]) {
            // Only reachable when the range is below floating-point resolution.
            return Err(Error::InvalidRange { alpha, beta });
        }
        let midpoints = edges.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
        Ok(Self {
            alpha,
            beta,
            scheme,
            edges,
            midpoints,
        })
    }

    pub fn uniform(alpha: f64, beta: f64, count: usize) -> Result<Self> {
        Self::new(alpha, beta, count, BinScheme::Uniform)
    }

    pub fn index_range(alpha: f64, beta: f64, count: usize) -> Result<Self> {
        Self::new(alpha, beta, count, BinScheme::IndexRange)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn count(&self) -> usize {
        self.midpoints.len()
    }

    pub fn scheme(&self) -> BinScheme {
        self.scheme
    }

    /// `t_0 ..= t_K`.
    pub fn edges(&self) -> &[f64] {
        &self.edges
    }

    pub fn midpoints(&self) -> &[f64] {
        &self.midpoints
    }

    pub fn midpoint(&self, k: usize) -> f64 {
        self.midpoints[k]
    }

    pub fn bin_width(&self, k: usize) -> f64 {
        self.edges[k + 1] - self.edges[k]
    }

    /// Clamp a disparity into `[alpha, beta]`.
    pub fn clamp(&self, y: f64) -> f64 {
        y.clamp(self.alpha, self.beta)
    }

    /// Index of the bin `(t_k, t_{k+1}]` holding `y`, with `alpha` mapped to bin 0.
    pub fn bin_of(&self, y: f64) -> Option<usize> {
        if !(self.alpha..=self.beta).contains(&y) {
            return None;
        }
        // First k with y <= t_{k+1}.
        Some(
            self.edges[1..]
                .partition_point(|&t| t < y)
                .min(self.count() - 1),
        )
    }

    /// Same layout with every edge shifted by `offset` (uniform scheme only keeps
    /// its formula; the edges themselves are shifted exactly).
    pub fn shifted(&self, offset: f64) -> Self {
        self.transformed(|t| t + offset)
    }

    /// Same layout with every edge multiplied by `factor > 0`.
    pub fn scaled(&self, factor: f64) -> Self {
        assert!(factor > 0.0);
        self.transformed(|t| t * factor)
    }

    fn transformed(&self, f: impl Fn(f64) -> f64) -> Self {
        let edges: Vec<f64> = self.edges.iter().map(|&t| f(t)).collect();
        let midpoints = edges.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
        Self {
            alpha: edges[0],
            beta: edges[edges.len() - 1],
            scheme: self.scheme,
            edges,
            midpoints,
        }
    }
}

/// Probability mass over the bins of a layout.
#[derive(Debug, Clone, PartialEq)]
pub struct Pmf {
    mass: Vec<f64>,
}

impl Pmf {
    /// Validates that every entry is in `[0, 1]` and the total is 1 within
    /// [`MASS_TOLERANCE`].
    pub fn new(mass: Vec<f64>) -> Result<Self> {
        validate_mass(&mass)?;
        Ok(Self { mass })
    }

    pub fn from_logits(logits: &[f64]) -> Result<Self> {
        if logits.is_empty() {
            return Err(Error::InvalidPmf("no bins".into()));
        }
        if logits.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidPmf("non-finite logit".into()));
        }
        let mut mass = vec![0.0; logits.len()];
        softmax_into(logits, &mut mass);
        Ok(Self { mass })
    }

    pub fn one_hot(count: usize, k: usize) -> Self {
        assert!(k < count);
        let mut mass = vec![0.0; count];
        mass[k] = 1.0;
        Self { mass }
    }

    pub fn uniform(count: usize) -> Self {
        assert!(count > 0);
        Self {
            mass: vec![1.0 / count as f64; count],
        }
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    pub fn len(&self) -> usize {
        self.mass.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mass.is_empty()
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.mass
    }
}

pub(crate) fn validate_mass(mass: &[f64]) -> Result<()> {
    if mass.is_empty() {
        return Err(Error::InvalidPmf("no bins".into()));
    }
    if let Some(v) = mass.iter().find(|v| !(0.0..=1.0).contains(*v)) {
        return Err(Error::InvalidPmf(format!("entry {v} outside [0, 1]")));
    }
    let total: f64 = mass.iter().sum();
    if (total - 1.0).abs() > MASS_TOLERANCE {
        return Err(Error::InvalidPmf(format!("mass sums to {total}")));
    }
    Ok(())
}

/// Numerically stable softmax written into `out`.
pub fn softmax_into(logits: &[f64], out: &mut [f64]) {
    debug_assert_eq!(logits.len(), out.len());
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for (o, &z) in out.iter_mut().zip(logits) {
        *o = (z - max).exp();
        sum += *o;
    }
    for o in out.iter_mut() {
        *o /= sum;
    }
}

/// Running sum `F_k = sum_{j <= k} mass_j`.
pub fn cdf(p: &Pmf) -> Vec<f64> {
    p.mass
        .iter()
        .scan(0.0, |acc, &m| {
            *acc += m;
            Some(*acc)
        })
        .collect()
}

fn check_len(p: &Pmf, layout: &BinLayout) -> Result<()> {
    if p.len() != layout.count() {
        return Err(Error::DimensionMismatch {
            expected: layout.count(),
            actual: p.len(),
        });
    }
    Ok(())
}

/// Mean of the distribution over bin midpoints.
pub fn expectation(p: &Pmf, layout: &BinLayout) -> Result<f64> {
    check_len(p, layout)?;
    Ok(mean_of(&p.mass, layout.midpoints()))
}

/// Variance over bin midpoints, the data uncertainty in px^2.
pub fn variance(p: &Pmf, layout: &BinLayout) -> Result<f64> {
    check_len(p, layout)?;
    Ok(moments(&p.mass, layout.midpoints()).1)
}

#[inline]
pub(crate) fn mean_of(mass: &[f64], midpoints: &[f64]) -> f64 {
    mass.iter().zip(midpoints).map(|(p, m)| p * m).sum()
}

/// `(mean, variance)` over midpoints, two-pass.
#[inline]
pub(crate) fn moments(mass: &[f64], midpoints: &[f64]) -> (f64, f64) {
    let mean = mean_of(mass, midpoints);
    let var = mass
        .iter()
        .zip(midpoints)
        .map(|(p, m)| {
            let d = m - mean;
            d * d * p
        })
        .sum();
    (mean, var)
}

/// Disparity at cumulative probability `q`, linear inside the bin where the
/// CDF crosses `q`. Values beyond the accumulated mass clamp to the support.
pub(crate) fn quantile_of(mass: &[f64], edges: &[f64], q: f64) -> f64 {
    let mut acc = 0.0;
    let mut last_upper = None;
    let mut first_lower = None;
    for (k, &m) in mass.iter().enumerate() {
        if m <= 0.0 {
            continue;
        }
        first_lower.get_or_insert(edges[k]);
        if acc + m >= q {
            let frac = ((q - acc) / m).clamp(0.0, 1.0);
            return edges[k] + frac * (edges[k + 1] - edges[k]);
        }
        acc += m;
        last_upper = Some(edges[k + 1]);
    }
    last_upper.or(first_lower).unwrap_or(edges[0])
}

/// Central interval holding `coverage` of the mass.
pub fn central_interval(p: &Pmf, layout: &BinLayout, coverage: f64) -> Result<(f64, f64)> {
    check_len(p, layout)?;
    central_interval_of(&p.mass, layout.edges(), coverage)
}

pub(crate) fn central_interval_of(
    mass: &[f64],
    edges: &[f64],
    coverage: f64,
) -> Result<(f64, f64)> {
    if !(coverage > 0.0 && coverage < 1.0) {
        return Err(Error::InvalidCoverage(coverage));
    }
    let tail = 0.5 * (1.0 - coverage);
    let lo = quantile_of(mass, edges, tail);
    let hi = quantile_of(mass, edges, 1.0 - tail);
    Ok((lo, hi.max(lo)))
}

/// Per-pixel distributions for an `H x W` image, row-major, `K` masses per pixel.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityVolume {
    height: usize,
    width: usize,
    layout: BinLayout,
    data: Vec<f64>,
}

impl ProbabilityVolume {
    /// Validates shape and every pixel's mass.
    pub fn new(height: usize, width: usize, layout: BinLayout, data: Vec<f64>) -> Result<Self> {
        let k = layout.count();
        if data.len() != height * width * k {
            return Err(Error::DimensionMismatch {
                expected: height * width * k,
                actual: data.len(),
            });
        }
        for pixel in data.chunks_exact(k) {
            validate_mass(pixel)?;
        }
        Ok(Self {
            height,
            width,
            layout,
            data,
        })
    }

    /// Caller guarantees each chunk is a softmax output.
    pub(crate) fn from_softmax(
        height: usize,
        width: usize,
        layout: BinLayout,
        data: Vec<f64>,
    ) -> Self {
        debug_assert_eq!(data.len(), height * width * layout.count());
        Self {
            height,
            width,
            layout,
            data,
        }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn layout(&self) -> &BinLayout {
        &self.layout
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn mass_at(&self, row: usize, col: usize) -> &[f64] {
        let k = self.layout.count();
        let start = (row * self.width + col) * k;
        &self.data[start..start + k]
    }

    pub fn pixels(&self) -> std::slice::ChunksExact<'_, f64> {
        self.data.chunks_exact(self.layout.count())
    }

    pub fn pmf_at(&self, row: usize, col: usize) -> Pmf {
        Pmf {
            mass: self.mass_at(row, col).to_vec(),
        }
    }

    pub fn expectation_map(&self) -> crate::grid::DisparityMap {
        let mids = self.layout.midpoints();
        let values = self.pixels().map(|m| mean_of(m, mids)).collect();
        crate::grid::Grid::from_vec(self.height, self.width, values).expect("shape")
    }

    pub fn variance_map(&self) -> crate::grid::UncertaintyMap {
        let mids = self.layout.midpoints();
        let values = self.pixels().map(|m| moments(m, mids).1).collect();
        crate::grid::Grid::from_vec(self.height, self.width, values).expect("shape")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn uni64() -> BinLayout {
        BinLayout::uniform(0.0, 64.0, 64).unwrap()
    }

    #[test]
    fn uniform_layout_edges_are_integers() {
        let layout = uni64();
        let expected: Vec<f64> = (0..=64).map(f64::from).collect();
        assert_eq!(layout.edges(), expected.as_slice());
        assert_eq!(layout.midpoint(10), 10.5);
    }

    #[test]
    fn index_range_layout_is_geometric() {
        let layout = BinLayout::index_range(1.0, 64.0, 6).unwrap();
        for (k, &t) in layout.edges().iter().enumerate() {
            assert_abs_diff_eq!(t, 2f64.powi(k as i32), epsilon = 1e-12);
        }
        assert_eq!(layout.edges()[0], 1.0);
        assert_eq!(layout.edges()[6], 64.0);
    }

    #[test]
    fn layout_errors() {
        assert!(matches!(
            BinLayout::uniform(5.0, 5.0, 4),
            Err(Error::InvalidRange { .. })
        ));
        assert!(matches!(
            BinLayout::index_range(0.0, 64.0, 8),
            Err(Error::InvalidLogRange { .. })
        ));
        assert!(matches!(
            BinLayout::uniform(0.0, 1.0, 1),
            Err(Error::TooFewBins(1))
        ));
    }

    #[test]
    fn bin_of_uses_half_open_bins() {
        let layout = uni64();
        assert_eq!(layout.bin_of(10.5), Some(10));
        assert_eq!(layout.bin_of(11.0), Some(10));
        assert_eq!(layout.bin_of(0.0), Some(0));
        assert_eq!(layout.bin_of(64.0), Some(63));
        assert_eq!(layout.bin_of(64.5), None);
    }

    #[test]
    fn cdf_examples() {
        assert_eq!(cdf(&Pmf::uniform(4)), vec![0.25, 0.5, 0.75, 1.0]);
        assert_eq!(cdf(&Pmf::one_hot(4, 2)), vec![0.0, 0.0, 1.0, 1.0]);
        let c = cdf(&Pmf::new(vec![0.1, 0.2, 0.3, 0.4]).unwrap());
        for (a, b) in c.iter().zip([0.1, 0.3, 0.6, 1.0]) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-15);
        }
    }

    #[test]
    fn pmf_validation() {
        assert!(Pmf::new(vec![0.5, 0.6]).is_err());
        assert!(Pmf::new(vec![-0.1, 1.1]).is_err());
        assert!(Pmf::new(vec![]).is_err());
        assert!(Pmf::new(vec![0.5, 0.5 + 5e-7]).is_ok());
    }

    #[test]
    fn expectation_and_variance_examples() {
        let layout = uni64();
        let hot = Pmf::one_hot(64, 10);
        assert_eq!(expectation(&hot, &layout).unwrap(), 10.5);
        assert_eq!(variance(&hot, &layout).unwrap(), 0.0);

        let mut mass = vec![0.0; 64];
        mass[10] = 0.5;
        mass[12] = 0.5;
        let p = Pmf::new(mass).unwrap();
        assert_eq!(expectation(&p, &layout).unwrap(), 11.5);
        assert_abs_diff_eq!(variance(&p, &layout).unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let layout = uni64();
        assert!(matches!(
            expectation(&Pmf::uniform(8), &layout),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(variance(&Pmf::uniform(8), &layout).is_err());
    }

    #[test]
    fn central_interval_examples() {
        let layout = uni64();
        let (lo, hi) = central_interval(&Pmf::one_hot(64, 10), &layout, 0.95).unwrap();
        assert!((10.0..=11.0).contains(&lo) && (10.0..=11.0).contains(&hi) && lo <= hi);

        let (lo, hi) = central_interval(&Pmf::uniform(64), &layout, 0.5).unwrap();
        assert_abs_diff_eq!(lo, 16.0, epsilon = 1e-9);
        assert_abs_diff_eq!(hi, 48.0, epsilon = 1e-9);

        assert!(matches!(
            central_interval(&Pmf::uniform(64), &layout, 1.0),
            Err(Error::InvalidCoverage(_))
        ));
        assert!(central_interval(&Pmf::uniform(64), &layout, 0.0).is_err());
    }

    #[test]
    fn quantile_clamps_to_nonzero_support() {
        let layout = uni64();
        let mut mass = vec![0.0; 64];
        mass[20] = 0.5;
        mass[21] = 0.5;
        let (lo, hi) = central_interval(&Pmf::new(mass).unwrap(), &layout, 0.999_999).unwrap();
        assert!(lo >= 20.0 && hi <= 22.0);
    }

    /// Binned Gaussian: the central 95% interval should sit at mu +- 1.96 sigma,
    /// up to one bin, and agree with quantiles read off a fine numeric CDF.
    #[test]
    fn binned_gaussian_interval() {
        let layout = uni64();
        let (mu, sigma) = (30.3_f64, 4.0_f64);
        // Gaussian CDF via fine midpoint quadrature, independent of the bin code.
        let steps = 64_000;
        let dx = 64.0 / steps as f64;
        let density: Vec<f64> = (0..steps)
            .map(|i| {
                let x = (i as f64 + 0.5) * dx;
                (-(x - mu).powi(2) / (2.0 * sigma * sigma)).exp()
            })
            .collect();
        let total: f64 = density.iter().sum();
        let mut mass = vec![0.0; 64];
        for (i, d) in density.iter().enumerate() {
            mass[i / 1000] += d / total;
        }
        // Quantiles of the binned (piecewise-uniform) distribution read off a
        // fine grid of 1000 cells per bin.
        let numeric_quantile = |mass: &[f64], q: f64| {
            let mut acc = 0.0;
            for i in 0..steps {
                acc += mass[i / 1000] / 1000.0;
                if acc >= q {
                    return (i as f64 + 0.5) * dx;
                }
            }
            64.0
        };
        let p = Pmf::new(mass).unwrap();
        let (lo, hi) = central_interval(&p, &layout, 0.95).unwrap();
        assert!((lo - (mu - 1.96 * sigma)).abs() <= 1.0, "lo = {lo}");
        assert!((hi - (mu + 1.96 * sigma)).abs() <= 1.0, "hi = {hi}");
        assert!((lo - numeric_quantile(p.mass(), 0.025)).abs() <= 2e-3);
        assert!((hi - numeric_quantile(p.mass(), 0.975)).abs() <= 2e-3);
    }

    #[test]
    fn volume_validates_every_pixel() {
        let layout = BinLayout::uniform(0.0, 4.0, 4).unwrap();
        let mut data = vec![0.25; 2 * 4];
        assert!(ProbabilityVolume::new(1, 2, layout.clone(), data.clone()).is_ok());
        data[0] = 0.9;
        assert!(ProbabilityVolume::new(1, 2, layout.clone(), data).is_err());
        assert!(ProbabilityVolume::new(1, 3, layout, vec![0.25; 8]).is_err());
    }

    fn arb_pmf(k: usize) -> impl Strategy<Value = Pmf> {
        prop::collection::vec(-6.0f64..6.0, k).prop_map(|z| Pmf::from_logits(&z).unwrap())
    }

    proptest! {
        #[test]
        fn softmax_mass_is_normalized(z in prop::collection::vec(-50.0f64..50.0, 2..80)) {
            let p = Pmf::from_logits(&z).unwrap();
            let total: f64 = p.mass().iter().sum();
            prop_assert!((total - 1.0).abs() <= MASS_TOLERANCE);
            let c = cdf(&p);
            prop_assert!(c.windows(2).all(|w| w[1] >= w[0]));
            prop_assert!((c[c.len() - 1] - 1.0).abs() <= MASS_TOLERANCE);
        }

        #[test]
        fn moments_translate_and_scale(p in arb_pmf(32), shift in -20.0f64..20.0, scale in 0.1f64..5.0) {
            let layout = BinLayout::uniform(0.0, 32.0, 32).unwrap();
            let mean = expectation(&p, &layout).unwrap();
            let var = variance(&p, &layout).unwrap();

            let shifted = layout.shifted(shift);
            prop_assert!((expectation(&p, &shifted).unwrap() - (mean + shift)).abs() <= 1e-9);
            prop_assert!((variance(&p, &shifted).unwrap() - var).abs() <= 1e-9);

            let scaled = layout.scaled(scale);
            prop_assert!((expectation(&p, &scaled).unwrap() - mean * scale).abs() <= 1e-9);
            prop_assert!((variance(&p, &scaled).unwrap() - var * scale * scale).abs() <= 1e-9);
        }

        #[test]
        fn variance_is_bounded(p in arb_pmf(16)) {
            let layout = BinLayout::uniform(2.0, 18.0, 16).unwrap();
            let var = variance(&p, &layout).unwrap();
            let mean = expectation(&p, &layout).unwrap();
            prop_assert!(var >= 0.0);
            prop_assert!(var <= (8.0f64).powi(2));
            prop_assert!(mean >= layout.midpoint(0) - 1e-12 && mean <= layout.midpoint(15) + 1e-12);
        }

        #[test]
        fn interval_is_ordered_and_monotone(p in arb_pmf(24), c1 in 0.05f64..0.9, dc in 0.0f64..0.09) {
            let layout = BinLayout::uniform(0.0, 24.0, 24).unwrap();
            let (lo1, hi1) = central_interval(&p, &layout, c1).unwrap();
            let (lo2, hi2) = central_interval(&p, &layout, c1 + dc).unwrap();
            prop_assert!(lo1 <= hi1);
            prop_assert!(lo2 <= lo1 + 1e-12 && hi2 >= hi1 - 1e-12);
        }
    }
}
