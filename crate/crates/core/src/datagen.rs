//! Synthetic rectified stereo scenes with known disparity.
//!
//! The right image is rendered from a procedural texture and the left image is
//! sampled from it, `left(r, c) = right(r, c - d(r, c))`, with linear
//! interpolation. Pixels whose source column falls outside the frame are
//! invalid. Label-noise regions perturb the training labels, and the same
//! rectangles get extra photometric noise in both images.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{DisparityMap, Image, Mask};
use crate::matcher::StereoPair;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FieldKind {
    Constant(f64),
    /// Background plane plus a few fronto-parallel rectangles.
    FrontoParallel,
    Slanted,
    /// Smooth Gaussian bumps on a base level.
    Bumps,
}

impl fmt::Display for FieldKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FieldKind::Constant(d) => write!(f, "constant:{d}"),
            FieldKind::FrontoParallel => f.write_str("fronto"),
            FieldKind::Slanted => f.write_str("slanted"),
            FieldKind::Bumps => f.write_str("bumps"),
        }
    }
}

impl FromStr for FieldKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fronto" => Ok(FieldKind::FrontoParallel),
            "slanted" => Ok(FieldKind::Slanted),
            "bumps" => Ok(FieldKind::Bumps),
            _ => s
                .strip_prefix("constant:")
                .and_then(|v| v.parse().ok())
                .map(FieldKind::Constant)
                .ok_or_else(|| Error::InvalidConfig(format!("unknown disparity field {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Texture {
    /// Cells of random size and random intensity.
    Checker,
    /// Multi-octave value noise.
    ValueNoise,
    /// Oriented sinusoidal stripes; held out of training.
    Stripes,
}

impl Texture {
    pub fn name(self) -> &'static str {
        match self {
            Texture::Checker => "checker",
            Texture::ValueNoise => "value-noise",
            Texture::Stripes => "stripes",
        }
    }
}

impl fmt::Display for Texture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Texture {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "checker" => Ok(Texture::Checker),
            "value-noise" | "noise" => Ok(Texture::ValueNoise),
            "stripes" => Ok(Texture::Stripes),
            _ => Err(Error::InvalidConfig(format!("unknown texture {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseRegion {
    pub row: usize,
    pub col: usize,
    pub height: usize,
    pub width: usize,
    /// Std of the Gaussian label noise, pixels.
    pub label_std: f64,
    /// Std of the extra intensity noise inside the region.
    pub photometric_std: f64,
}

impl NoiseRegion {
    pub fn contains(&self, row: usize, col: usize) -> bool {
        (self.row..self.row + self.height).contains(&row)
            && (self.col..self.col + self.width).contains(&col)
    }

    pub fn area(&self) -> usize {
        self.height * self.width
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SceneSpec {
    pub seed: u64,
    pub height: usize,
    pub width: usize,
    pub field: FieldKind,
    pub texture: Texture,
    /// Range of the generated disparity field, pixels.
    pub min_disparity: f64,
    pub max_disparity: f64,
    pub noise_regions: Vec<NoiseRegion>,
    pub photometric_std: f64,
}

impl SceneSpec {
    pub fn new(seed: u64, height: usize, width: usize, field: FieldKind, texture: Texture) -> Self {
        Self {
            seed,
            height,
            width,
            field,
            texture,
            min_disparity: 2.0,
            max_disparity: 18.0,
            noise_regions: Vec::new(),
            photometric_std: 0.0,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.height < 3 || self.width < 3 {
            return Err(Error::InvalidConfig(format!(
                "scene must be at least 3x3, got {}x{}",
                self.height, self.width
            )));
        }
        let (lo, hi) = (self.min_disparity, self.max_disparity);
        if !(lo.is_finite() && hi.is_finite() && lo >= 0.0 && lo <= hi && hi < self.width as f64) {
            return Err(Error::InvalidConfig(format!(
                "bad disparity range [{lo}, {hi}]"
            )));
        }
        if !(self.photometric_std >= 0.0) {
            return Err(Error::InvalidConfig(
                "photometric noise std must be >= 0".into(),
            ));
        }
        for r in &self.noise_regions {
            if r.row + r.height > self.height || r.col + r.width > self.width {
                return Err(Error::InvalidConfig(format!(
                    "noise region {r:?} outside the image"
                )));
            }
            if !(r.label_std >= 0.0 && r.photometric_std >= 0.0) {
                return Err(Error::InvalidConfig("noise std must be >= 0".into()));
            }
        }
        Ok(())
    }
}

/// A generated scene. Invalid pixels carry `+inf` in `gt` and `labels`.
#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub pair: StereoPair,
    /// Clean disparity.
    pub gt: DisparityMap,
    /// Disparity with label noise inside the noise regions.
    pub labels: DisparityMap,
    pub noise_mask: Mask,
    pub valid: Mask,
}

/// Renders `spec`. Deterministic per seed.
pub fn generate(spec: &SceneSpec) -> Result<Scene> {
    spec.validate()?;
    let (h, w) = (spec.height, spec.width);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let disparity = disparity_field(spec, &mut rng);
    let (lo, hi) = (spec.min_disparity, spec.max_disparity);
    if let Some(&d) = disparity
        .as_slice()
        .iter()
        .find(|&&d| !(d >= lo - 1e-9 && d <= hi + 1e-9))
    {
        return Err(Error::OutOfRangeDisparity { value: d, lo, hi });
    }
    let right = render_texture(spec.texture, h, w, &mut rng);
    let mut left = Image::filled(h, w, 0.0);
    let mut valid = Mask::filled(h, w, false);
    for r in 0..h {
        for c in 0..w {
            let src = c as f64 - *disparity.get(r, c);
            if src < 0.0 {
                continue;
            }
            let c0 = src.floor() as usize;
            let t = src - c0 as f64;
            let a = *right.get(r, c0);
            let v = if t == 0.0 {
                a
            } else {
                a + t * (*right.get(r, c0 + 1) - a)
            };
            left.set(r, c, v);
            valid.set(r, c, true);
        }
    }

    let pixel_noise = Normal::new(0.0, 1.0).expect("unit normal");
    let mut right = right;
    let regions = &spec.noise_regions;
    for img in [&mut left, &mut right] {
        for r in 0..h {
            for c in 0..w {
                let mut std2 = spec.photometric_std * spec.photometric_std;
                for reg in regions.iter().filter(|g| g.contains(r, c)) {
                    std2 += reg.photometric_std * reg.photometric_std;
                }
                if std2 > 0.0 {
                    let v = *img.get(r, c) + std2.sqrt() * pixel_noise.sample(&mut rng);
                    img.set(r, c, v.clamp(0.0, 255.0));
                }
            }
        }
    }

    let gt = DisparityMap::from_fn(h, w, |r, c| {
        if *valid.get(r, c) {
            *disparity.get(r, c)
        } else {
            f64::INFINITY
        }
    });
    let mut labels = gt.clone();
    let mut noise_mask = Mask::filled(h, w, false);
    for reg in regions {
        for r in reg.row..reg.row + reg.height {
            for c in reg.col..reg.col + reg.width {
                let e = reg.label_std * pixel_noise.sample(&mut rng);
                if *valid.get(r, c) && reg.label_std > 0.0 {
                    labels.set(r, c, *labels.get(r, c) + e);
                    noise_mask.set(r, c, true);
                }
            }
        }
    }
    let id = format!("scene-{}", spec.seed);
    Ok(Scene {
        pair: StereoPair::new(id, left, right)?,
        gt,
        labels,
        noise_mask,
        valid,
    })
}

fn disparity_field(spec: &SceneSpec, rng: &mut ChaCha8Rng) -> DisparityMap {
    let (h, w) = (spec.height, spec.width);
    let (lo, hi) = (spec.min_disparity, spec.max_disparity);
    let span = hi - lo;
    match spec.field {
        FieldKind::Constant(d) => DisparityMap::filled(h, w, d),
        FieldKind::FrontoParallel => {
            // Plane levels stratified over the range, in random order.
            let n = rng.gen_range(3..=4);
            let mut levels: Vec<f64> = (0..n)
                .map(|i| lo + span * (i as f64 + rng.gen::<f64>()) / n as f64)
                .collect();
            for i in (1..n).rev() {
                levels.swap(i, rng.gen_range(0..=i));
            }
            let mut map = DisparityMap::filled(h, w, levels[0]);
            for &d in &levels[1..] {
                let ph = rng.gen_range(h / 4..=h / 2).max(1);
                let pw = rng.gen_range(w / 6..=w / 3).max(1);
                let r0 = rng.gen_range(0..=h - ph);
                let c0 = rng.gen_range(0..=w - pw);
                for r in r0..r0 + ph {
                    for c in c0..c0 + pw {
                        map.set(r, c, d);
                    }
                }
            }
            map
        }
        FieldKind::Slanted => {
            // Horizontal ramp across nearly the whole range plus a small
            // vertical tilt; clamped to the range.
            let a = lo + rng.gen::<f64>() * span * 0.1;
            let b = hi - rng.gen::<f64>() * span * 0.1;
            let (start, end) = if rng.gen::<bool>() { (a, b) } else { (b, a) };
            let tilt = rng.gen_range(-0.1..0.1) * span;
            let (sx, sy) = ((w - 1).max(1) as f64, (h - 1).max(1) as f64);
            DisparityMap::from_fn(h, w, |r, c| {
                let (u, v) = (c as f64 / sx, r as f64 / sy - 0.5);
                (start + u * (end - start) + v * tilt).clamp(lo, hi)
            })
        }
        FieldKind::Bumps => {
            let base = lo + rng.gen::<f64>() * span * 0.1;
            let top = hi - rng.gen::<f64>() * span * 0.05;
            let bumps: Vec<(f64, f64, f64, f64)> = (0..rng.gen_range(2..=4))
                .map(|_| {
                    (
                        rng.gen::<f64>() * h as f64,
                        rng.gen::<f64>() * w as f64,
                        rng.gen_range(0.2..0.4) * w as f64,
                        rng.gen_range(0.4..0.8) * span,
                    )
                })
                .collect();
            let field = |r: usize, c: usize| -> f64 {
                bumps
                    .iter()
                    .map(|&(br, bc, rad, amp)| {
                        let d2 = (r as f64 - br).powi(2) + (c as f64 - bc).powi(2);
                        amp * (-d2 / (2.0 * rad * rad)).exp()
                    })
                    .sum()
            };
            let raw = DisparityMap::from_fn(h, w, field);
            // Rescale so the highest bump reaches `top`.
            let peak = raw.as_slice().iter().fold(0.0f64, |m, &v| m.max(v));
            let scale = if peak > 0.0 { (top - base) / peak } else { 0.0 };
            raw.map(|&v| (base + v * scale).clamp(lo, hi))
        }
    }
}

fn render_texture(texture: Texture, h: usize, w: usize, rng: &mut ChaCha8Rng) -> Image {
    match texture {
        Texture::Checker => {
            // Column cell boundaries and row cell boundaries of random size.
            let cuts = |n: usize, rng: &mut ChaCha8Rng| {
                let mut idx = Vec::with_capacity(n);
                let mut cell = 0;
                while idx.len() < n {
                    let size = rng.gen_range(2..=4);
                    idx.extend(std::iter::repeat_n(cell, size));
                    cell += 1;
                }
                idx.truncate(n);
                (idx, cell)
            };
            let (rows, n_rows) = cuts(h, rng);
            let (cols, n_cols) = cuts(w, rng);
            let levels: Vec<f64> = (0..n_rows * n_cols)
                .map(|_| rng.gen_range(0.0..255.0))
                .collect();
            let detail = value_noise(h, w, rng);
            Image::from_fn(h, w, |r, c| {
                0.6 * levels[rows[r] * n_cols + cols[c]] + 0.4 * *detail.get(r, c)
            })
        }
        Texture::ValueNoise => value_noise(h, w, rng),
        Texture::Stripes => {
            let period = rng.gen_range(4.0..8.0);
            let angle: f64 = rng.gen_range(-0.6..0.6);
            let phase = rng.gen_range(0.0..std::f64::consts::TAU);
            let (ca, sa) = (angle.cos(), angle.sin());
            Image::from_fn(h, w, |r, c| {
                let u = c as f64 * ca + r as f64 * sa;
                let s = (std::f64::consts::TAU * u / period + phase).sin();
                127.5 + 100.0 * s + 20.0 * (2.0 * std::f64::consts::TAU * u / period).sin()
            })
        }
    }
}

/// Value noise at lattice spacings 2, 4 and 8 px with smoothstep interpolation.
fn value_noise(h: usize, w: usize, rng: &mut ChaCha8Rng) -> Image {
    let octaves = [(2.0, 0.5), (4.0, 0.3), (8.0, 0.2)];
    let lattices: Vec<(f64, f64, usize, Vec<f64>)> = octaves
        .iter()
        .map(|&(spacing, weight)| {
            let lw = (w as f64 / spacing).ceil() as usize + 2;
            let lh = (h as f64 / spacing).ceil() as usize + 2;
            let values = (0..lw * lh).map(|_| rng.gen::<f64>()).collect();
            (spacing, weight, lw, values)
        })
        .collect();
    Image::from_fn(h, w, |r, c| {
        let mut v = 0.0;
        for (spacing, weight, lw, values) in &lattices {
            let (x, y) = (c as f64 / spacing, r as f64 / spacing);
            let (x0, y0) = (x.floor() as usize, y.floor() as usize);
            let smooth = |t: f64| t * t * (3.0 - 2.0 * t);
            let (tx, ty) = (smooth(x - x0 as f64), smooth(y - y0 as f64));
            let at = |yy: usize, xx: usize| values[yy * lw + xx];
            let top = at(y0, x0) + tx * (at(y0, x0 + 1) - at(y0, x0));
            let bottom = at(y0 + 1, x0) + tx * (at(y0 + 1, x0 + 1) - at(y0 + 1, x0));
            v += weight * (top + ty * (bottom - top));
        }
        255.0 * v
    })
}

/// Dataset split of a manifest entry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Split {
    Train,
    Test,
    Ood,
}

impl Split {
    pub fn name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Test => "test",
            Split::Ood => "ood",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "test" => Ok(Split::Test),
            "ood" => Ok(Split::Ood),
            _ => Err(Error::InvalidConfig(format!("unknown split {s:?}"))),
        }
    }
}

pub const TRAIN_TEXTURES: [Texture; 1] = [Texture::ValueNoise];
pub const OOD_TEXTURES: [Texture; 1] = [Texture::Stripes];

/// Shape and noise settings shared by every scene of a split run.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitOptions {
    pub height: usize,
    pub width: usize,
    pub min_disparity: f64,
    pub max_disparity: f64,
    pub photometric_std: f64,
    /// Target fraction of each image covered by label-noise regions.
    pub noise_fraction: f64,
    pub noise_regions: usize,
    pub label_noise_std: f64,
    pub region_photometric_std: f64,
}

impl Default for SplitOptions {
    fn default() -> Self {
        Self {
            height: 48,
            width: 128,
            min_disparity: 2.0,
            max_disparity: 18.0,
            photometric_std: 2.0,
            noise_fraction: 0.1,
            noise_regions: 2,
            label_noise_std: 6.0,
            region_photometric_std: 24.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ManifestEntry {
    pub id: String,
    pub split: Split,
    pub spec: SceneSpec,
}

impl ManifestEntry {
    pub fn left_path(&self) -> String {
        format!("{}_left.pgm", self.id)
    }

    pub fn right_path(&self) -> String {
        format!("{}_right.pgm", self.id)
    }

    pub fn gt_path(&self) -> String {
        format!("{}_gt.pfm", self.id)
    }

    pub fn labels_path(&self) -> String {
        format!("{}_labels.pfm", self.id)
    }

    pub fn noise_mask_path(&self) -> String {
        format!("{}_noise.pgm", self.id)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Manifest {
    pub entries: Vec<ManifestEntry>,
}

impl Manifest {
    pub fn split(&self, split: Split) -> impl Iterator<Item = &ManifestEntry> {
        self.entries.iter().filter(move |e| e.split == split)
    }

    /// One record per line:
    /// `id=.. split=.. seed=.. height=.. width=.. field=.. texture=.. dmin=.. dmax=.. photometric=.. regions=.. left=.. right=.. gt=.. labels=.. noise=..`
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for e in &self.entries {
            let s = &e.spec;
            let regions = if s.noise_regions.is_empty() {
                "-".to_string()
            } else {
                s.noise_regions
                    .iter()
                    .map(|r| {
                        format!(
                            "{},{},{},{},{},{}",
                            r.row, r.col, r.height, r.width, r.label_std, r.photometric_std
                        )
                    })
                    .collect::<Vec<_>>()
                    .join(";")
            };
            out.push_str(&format!(
                "id={} split={} seed={} height={} width={} field={} texture={} dmin={} dmax={} photometric={} regions={} left={} right={} gt={} labels={} noise={}\n",
                e.id,
                e.split,
                s.seed,
                s.height,
                s.width,
                s.field,
                s.texture,
                s.min_disparity,
                s.max_disparity,
                s.photometric_std,
                regions,
                e.left_path(),
                e.right_path(),
                e.gt_path(),
                e.labels_path(),
                e.noise_mask_path(),
            ));
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = Vec::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let bad = |msg: &str| Error::InvalidConfig(format!("manifest line {}: {msg}", n + 1));
            let mut fields = std::collections::HashMap::new();
            for tok in line.split_whitespace() {
                let (k, v) = tok
                    .split_once('=')
                    .ok_or_else(|| bad("expected key=value"))?;
                fields.insert(k, v);
            }
            let get = |k: &str| {
                fields
                    .get(k)
                    .copied()
                    .ok_or_else(|| bad(&format!("missing {k}")))
            };
            let num =
                |k: &str| -> Result<f64> { get(k)?.parse().map_err(|_| bad(&format!("bad {k}"))) };
            let int =
                |k: &str| -> Result<u64> { get(k)?.parse().map_err(|_| bad(&format!("bad {k}"))) };
            let regions = match get("regions")? {
                "-" => Vec::new(),
                list => list
                    .split(';')
                    .map(|r| {
                        let v: Vec<&str> = r.split(',').collect();
                        if v.len() != 6 {
                            return Err(bad("region needs 6 fields"));
                        }
                        let u = |i: usize| v[i].parse::<usize>().map_err(|_| bad("bad region"));
                        let f = |i: usize| v[i].parse::<f64>().map_err(|_| bad("bad region"));
                        Ok(NoiseRegion {
                            row: u(0)?,
                            col: u(1)?,
                            height: u(2)?,
                            width: u(3)?,
                            label_std: f(4)?,
                            photometric_std: f(5)?,
                        })
                    })
                    .collect::<Result<_>>()?,
            };
            let spec = SceneSpec {
                seed: int("seed")?,
                height: int("height")? as usize,
                width: int("width")? as usize,
                field: get("field")?.parse()?,
                texture: get("texture")?.parse()?,
                min_disparity: num("dmin")?,
                max_disparity: num("dmax")?,
                noise_regions: regions,
                photometric_std: num("photometric")?,
            };
            entries.push(ManifestEntry {
                id: get("id")?.to_string(),
                split: get("split")?.parse()?,
                spec,
            });
        }
        Ok(Self { entries })
    }
}

/// `n_train + n_test + n_ood` scene specs. Train and test draw from
/// [`TRAIN_TEXTURES`]; the ood split uses [`OOD_TEXTURES`] only.
pub fn make_splits(n_train: usize, n_test: usize, n_ood: usize, seed: u64) -> Result<Manifest> {
    make_splits_with(n_train, n_test, n_ood, seed, &SplitOptions::default())
}

pub fn make_splits_with(
    n_train: usize,
    n_test: usize,
    n_ood: usize,
    seed: u64,
    opts: &SplitOptions,
) -> Result<Manifest> {
    if n_train == 0 || n_test == 0 || n_ood == 0 {
        return Err(Error::InvalidConfig(
            "every split needs at least one scene".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let fields = [
        FieldKind::FrontoParallel,
        FieldKind::Slanted,
        FieldKind::Bumps,
    ];
    let mut entries = Vec::new();
    for (split, count) in [
        (Split::Train, n_train),
        (Split::Test, n_test),
        (Split::Ood, n_ood),
    ] {
        for i in 0..count {
            let texture = match split {
                Split::Ood => OOD_TEXTURES[i % OOD_TEXTURES.len()],
                _ => TRAIN_TEXTURES[i % TRAIN_TEXTURES.len()],
            };
            let mut spec = SceneSpec::new(
                rng.gen(),
                opts.height,
                opts.width,
                fields[i % fields.len()],
                texture,
            );
            spec.min_disparity = opts.min_disparity;
            spec.max_disparity = opts.max_disparity;
            spec.photometric_std = opts.photometric_std;
            spec.noise_regions = noise_regions(opts, &mut rng);
            entries.push(ManifestEntry {
                id: format!("{}_{i:03}", split.name()),
                split,
                spec,
            });
        }
    }
    Ok(Manifest { entries })
}

fn noise_regions(opts: &SplitOptions, rng: &mut ChaCha8Rng) -> Vec<NoiseRegion> {
    if opts.noise_fraction <= 0.0 || opts.noise_regions == 0 {
        return Vec::new();
    }
    let (h, w) = (opts.height, opts.width);
    let area = opts.noise_fraction * (h * w) as f64 / opts.noise_regions as f64;
    // Regions with aspect ~1:2 (rows:cols), kept away from the left border
    // where pixels are often invalid.
    let rh = ((area / 2.0).sqrt().round() as usize).clamp(1, h);
    let rw = ((area / rh as f64).round() as usize).clamp(1, w);
    let c_min = ((opts.max_disparity.ceil() as usize) + 1).min(w - rw);
    (0..opts.noise_regions)
        .map(|_| NoiseRegion {
            row: rng.gen_range(0..=h - rh),
            col: rng.gen_range(c_min..=w - rw),
            height: rh,
            width: rw,
            label_std: opts.label_noise_std,
            photometric_std: opts.region_photometric_std,
        })
        .collect()
}

/// Generates every scene of a manifest, in order.
pub fn generate_all(manifest: &Manifest) -> Result<Vec<Scene>> {
    manifest
        .entries
        .par_iter()
        .map(|e| {
            let mut scene = generate(&e.spec)?;
            scene.pair.id = e.id.clone();
            Ok(scene)
        })
        .collect()
}
