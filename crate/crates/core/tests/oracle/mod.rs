//! Independent scalar reference implementations for the integration tests.
#![allow(dead_code)]

/// Mean and variance of a binned distribution, at bin midpoints.
pub fn moments(mass: &[f64], edges: &[f64]) -> (f64, f64) {
    let mut mean = 0.0;
    for k in 0..mass.len() {
        mean += 0.5 * (edges[k] + edges[k + 1]) * mass[k];
    }
    let mut var = 0.0;
    for k in 0..mass.len() {
        let m = 0.5 * (edges[k] + edges[k + 1]);
        var += (m - mean) * (m - mean) * mass[k];
    }
    (mean, var)
}

pub fn softmax(z: &[f64]) -> Vec<f64> {
    let mut top = f64::NEG_INFINITY;
    for &v in z {
        if v > top {
            top = v;
        }
    }
    let e: Vec<f64> = z.iter().map(|v| (v - top).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

/// Binary cross-entropy on the CDF of `softmax(z)`, each log argument
/// clamped below at 1e-7.
pub fn or_loss(z: &[f64], target: &[bool]) -> f64 {
    let p = softmax(z);
    let mut cdf = 0.0;
    let mut loss = 0.0;
    for k in 0..p.len() {
        cdf += p[k];
        if target[k] {
            loss -= cdf.max(1e-7).ln();
        } else {
            loss -= (1.0 - cdf).max(1e-7).ln();
        }
    }
    loss
}

/// Central differences of `f` at `x`.
pub fn fd_gradient(f: impl Fn(&[f64]) -> f64, x: &[f64], step: f64) -> Vec<f64> {
    let mut g = vec![0.0; x.len()];
    let mut y = x.to_vec();
    for i in 0..x.len() {
        y[i] = x[i] + step;
        let up = f(&y);
        y[i] = x[i] - step;
        let down = f(&y);
        y[i] = x[i];
        g[i] = (up - down) / (2.0 * step);
    }
    g
}

/// `max |a - b| / max(|b|, floor)` over components.
pub fn max_rel_error(a: &[f64], b: &[f64], floor: f64) -> f64 {
    let mut worst: f64 = 0.0;
    for (x, y) in a.iter().zip(b) {
        worst = worst.max((x - y).abs() / y.abs().max(floor));
    }
    worst
}

/// Full-sum Nadaraya-Watson over every bank point with an RBF kernel:
/// prediction, weighted label variance and mean kernel weight.
pub fn nadaraya_watson_rbf(
    points: &[f64],
    labels: &[f64],
    dim: usize,
    h: f64,
    q: &[f64],
) -> (f64, f64, f64) {
    let m = labels.len();
    let mut w = vec![0.0; m];
    for i in 0..m {
        let mut d2 = 0.0;
        for j in 0..dim {
            let d = q[j] - points[i * dim + j];
            d2 += d * d;
        }
        w[i] = (-d2 / (2.0 * h * h)).exp();
    }
    let sw: f64 = w.iter().sum();
    let mut g = 0.0;
    for i in 0..m {
        g += w[i] * labels[i];
    }
    g /= sw;
    let mut s2 = 0.0;
    for i in 0..m {
        s2 += w[i] * (labels[i] - g) * (labels[i] - g);
    }
    (g, s2 / sw, sw / m as f64)
}

/// Sort-and-slice sparsification: order by descending key, lower index first
/// on ties, drop `i * max(1, floor(n/100))` pixels (keeping at least one) and
/// average the rest.
pub fn sparsify(errors: &[f64], key: &[f64]) -> Vec<f64> {
    let n = errors.len();
    let mut idx: Vec<(f64, usize)> = key.iter().copied().zip(0..n).collect();
    idx.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)));
    let step = std::cmp::max(1, n / 100);
    let mut out = Vec::new();
    for i in 0..100 {
        let start = std::cmp::min(i * step, n - 1);
        let rest = &idx[start..];
        let mut s = 0.0;
        for &(_, j) in rest {
            s += errors[j];
        }
        out.push(s / rest.len() as f64);
    }
    out
}

/// Trapezoid over fractions 0.00..0.99.
pub fn auc(curve: &[f64]) -> f64 {
    let mut a = 0.0;
    for i in 1..curve.len() {
        let dx = i as f64 / 100.0 - (i - 1) as f64 / 100.0;
        a += 0.5 * dx * (curve[i - 1] + curve[i]);
    }
    a
}

/// Masses of N(mu, sigma^2) over the bins, renormalized to the range,
/// by Simpson integration of the density.
pub fn binned_gaussian(edges: &[f64], mu: f64, sigma: f64) -> Vec<f64> {
    let pdf = |x: f64| (-(x - mu) * (x - mu) / (2.0 * sigma * sigma)).exp();
    let mut mass: Vec<f64> = edges
        .windows(2)
        .map(|e| {
            let n = 64;
            let hstep = (e[1] - e[0]) / n as f64;
            let mut s = pdf(e[0]) + pdf(e[1]);
            for i in 1..n {
                s += pdf(e[0] + i as f64 * hstep) * if i % 2 == 1 { 4.0 } else { 2.0 };
            }
            s * hstep / 3.0
        })
        .collect();
    let total: f64 = mass.iter().sum();
    mass.iter_mut().for_each(|m| *m /= total);
    mass
}

/// Quantile `q` of the piecewise-uniform density with masses on `edges`.
pub fn quantile(mass: &[f64], edges: &[f64], q: f64) -> f64 {
    let mut acc = 0.0;
    for k in 0..mass.len() {
        if mass[k] > 0.0 && acc + mass[k] >= q {
            return edges[k] + (q - acc) / mass[k] * (edges[k + 1] - edges[k]);
        }
        acc += mass[k];
    }
    edges[edges.len() - 1]
}

/// Draw from the piecewise-uniform density: a bin by inverse CDF at `u`, then
/// a uniform position `v` inside it.
pub fn sample(mass: &[f64], edges: &[f64], u: f64, v: f64) -> f64 {
    let mut acc = 0.0;
    for k in 0..mass.len() {
        acc += mass[k];
        if u < acc {
            return edges[k] + v * (edges[k + 1] - edges[k]);
        }
    }
    let k = mass.iter().rposition(|&m| m > 0.0).unwrap();
    edges[k] + v * (edges[k + 1] - edges[k])
}

/// Census descriptor by direct comparison, window positions row-major.
pub fn census(img: &[f64], w: usize, row: usize, col: usize, window: usize) -> Vec<bool> {
    let r = window / 2;
    let center = img[row * w + col];
    let mut bits = Vec::new();
    for dr in 0..window {
        for dc in 0..window {
            if dr == r && dc == r {
                continue;
            }
            bits.push(img[(row + dr - r) * w + (col + dc - r)] > center);
        }
    }
    bits
}
