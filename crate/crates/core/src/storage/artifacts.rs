//! Pipeline artifacts as `UQT1` containers. Every file that holds values over
//! bins carries its layout, so files are self-describing.
//!
//! Sections: `layout` = [alpha, beta, K, scheme code] and `edges`; `pmf` (f32,
//! H x W x K); `disparity`, `data_uncertainty` (H x W); `embeddings`
//! (H x W x d); `head` with `head_shape` = [K, hidden] and `window`;
//! `bank_points` (M x d), `bank_labels`, `bank_source_count`, `kernel`;
//! `model_uncertainty` and `clamped` (H x W).

use crate::distribution::{BinLayout, BinScheme, ProbabilityVolume};
use crate::error::{Error, Result};
use crate::grid::{DisparityMap, FeatureVolume, Mask, UncertaintyMap};
use crate::kernel_uq::{fit, EmbeddingBank, Kernel, KernelSpec, UqEstimator, UqMap};
use crate::matcher::{HeadParameters, Inference, Matcher};

use super::container::{TensorContainer, TensorData};

fn f64s(c: &TensorContainer, name: &str) -> Result<(Vec<usize>, Vec<f64>)> {
    let t = c.get(name)?;
    match &t.data {
        TensorData::F64(v) => Ok((t.dims.clone(), v.clone())),
        TensorData::F32(_) => Err(Error::BadHeader(format!("section '{name}' must be f64"))),
    }
}

fn scalars<const N: usize>(c: &TensorContainer, name: &str) -> Result<[f64; N]> {
    let (_, v) = f64s(c, name)?;
    v.try_into()
        .map_err(|_| Error::BadHeader(format!("section '{name}' must hold {N} values")))
}

fn whole(v: f64, what: &str) -> Result<usize> {
    if v >= 0.0 && v.fract() == 0.0 && v < 2f64.powi(53) {
        Ok(v as usize)
    } else {
        Err(Error::BadHeader(format!(
            "{what} must be a non-negative integer, got {v}"
        )))
    }
}

fn grid_dims(dims: &[usize], name: &str) -> Result<(usize, usize)> {
    match dims {
        [h, w] => Ok((*h, *w)),
        _ => Err(Error::BadHeader(format!("section '{name}' must be H x W"))),
    }
}

fn put_layout(c: &mut TensorContainer, layout: &BinLayout) -> Result<()> {
    c.push_f64(
        "layout",
        vec![4],
        vec![
            layout.alpha(),
            layout.beta(),
            layout.count() as f64,
            f64::from(layout.scheme().code()),
        ],
    )?;
    c.push_f64("edges", vec![layout.count() + 1], layout.edges().to_vec())
}

fn get_layout(c: &TensorContainer) -> Result<BinLayout> {
    let [alpha, beta, count, code] = scalars::<4>(c, "layout")?;
    let scheme = BinScheme::from_code(whole(code, "scheme code")? as u8)
        .ok_or_else(|| Error::BadHeader(format!("unknown bin scheme code {code}")))?;
    let layout = BinLayout::new(alpha, beta, whole(count, "bin count")?, scheme)?;
    let (_, edges) = f64s(c, "edges")?;
    if edges != layout.edges() {
        return Err(Error::BadHeader(
            "stored edges disagree with the layout".into(),
        ));
    }
    Ok(layout)
}

fn put_grid(c: &mut TensorContainer, name: &str, g: &DisparityMap) -> Result<()> {
    c.push_f64(name, vec![g.height(), g.width()], g.as_slice().to_vec())
}

fn get_grid(c: &TensorContainer, name: &str) -> Result<DisparityMap> {
    let (dims, v) = f64s(c, name)?;
    let (h, w) = grid_dims(&dims, name)?;
    DisparityMap::from_vec(h, w, v)
}

pub fn matcher_to_container(m: &Matcher) -> Result<TensorContainer> {
    let mut c = TensorContainer::new();
    put_layout(&mut c, &m.layout)?;
    c.push_f64(
        "head_shape",
        vec![2],
        vec![m.head.bins() as f64, m.head.hidden() as f64],
    )?;
    c.push_f64(
        "head",
        vec![m.head.as_flat().len()],
        m.head.as_flat().to_vec(),
    )?;
    c.push_f64("window", vec![1], vec![m.window as f64])?;
    Ok(c)
}

pub fn matcher_from_container(c: &TensorContainer) -> Result<Matcher> {
    let layout = get_layout(c)?;
    let [bins, hidden] = scalars::<2>(c, "head_shape")?;
    let (_, flat) = f64s(c, "head")?;
    let head =
        HeadParameters::from_flat(whole(bins, "bins")?, whole(hidden, "hidden width")?, flat)?;
    let [window] = scalars::<1>(c, "window")?;
    Matcher::new(layout, whole(window, "window")?, head)
}

/// The PMF volume is stored as f32.
pub fn inference_to_container(inf: &Inference) -> Result<TensorContainer> {
    let v = &inf.volume;
    let mut c = TensorContainer::new();
    put_layout(&mut c, v.layout())?;
    c.push_f32(
        "pmf",
        vec![v.height(), v.width(), v.layout().count()],
        v.as_slice().iter().map(|&p| p as f32).collect(),
    )?;
    put_grid(&mut c, "disparity", &inf.disparity)?;
    put_grid(&mut c, "data_uncertainty", &inf.data_uncertainty)?;
    let e = &inf.embeddings;
    c.push_f64(
        "embeddings",
        vec![e.height(), e.width(), e.dim()],
        e.as_slice().to_vec(),
    )?;
    Ok(c)
}

pub fn inference_from_container(c: &TensorContainer) -> Result<Inference> {
    let layout = get_layout(c)?;
    let pmf = c.get("pmf")?;
    let [h, w, k] = pmf.dims[..] else {
        return Err(Error::BadHeader("section 'pmf' must be H x W x K".into()));
    };
    if k != layout.count() {
        return Err(Error::DimensionMismatch {
            expected: layout.count(),
            actual: k,
        });
    }
    let volume = ProbabilityVolume::new(h, w, layout, pmf.data.to_f64())?;
    let disparity = get_grid(c, "disparity")?;
    let data_uncertainty = get_grid(c, "data_uncertainty")?;
    let (dims, emb) = f64s(c, "embeddings")?;
    let [eh, ew, d] = dims[..] else {
        return Err(Error::BadHeader(
            "section 'embeddings' must be H x W x d".into(),
        ));
    };
    for (name, g) in [
        ("disparity", &disparity),
        ("data_uncertainty", &data_uncertainty),
    ] {
        if (g.height(), g.width()) != (h, w) {
            return Err(Error::BadHeader(format!(
                "section '{name}' does not match the volume shape"
            )));
        }
    }
    if (eh, ew) != (h, w) {
        return Err(Error::BadHeader(
            "section 'embeddings' does not match the volume shape".into(),
        ));
    }
    Ok(Inference {
        disparity,
        data_uncertainty,
        embeddings: FeatureVolume::new(h, w, d, emb)?,
        volume,
    })
}

fn kernel_code(k: &Kernel) -> [f64; 3] {
    match *k {
        Kernel::Rbf { h } => [0.0, h, 0.0],
        Kernel::Epanechnikov { h } => [1.0, h, 0.0],
        Kernel::Polynomial { degree, offset } => [2.0, f64::from(degree), offset],
    }
}

fn kernel_from_code(code: f64, a: f64, b: f64) -> Result<Kernel> {
    let kernel = match code as i64 {
        0 => Kernel::Rbf { h: a },
        1 => Kernel::Epanechnikov { h: a },
        2 => Kernel::Polynomial {
            degree: u32::try_from(whole(a, "polynomial degree")?)
                .map_err(|_| Error::BadHeader(format!("polynomial degree {a} is too large")))?,
            offset: b,
        },
        _ => {
            return Err(Error::BadHeader(format!(
                "unknown kernel family code {code}"
            )))
        }
    };
    Ok(kernel)
}

pub fn estimator_to_container(est: &UqEstimator) -> Result<TensorContainer> {
    let bank = est.bank();
    let spec = est.spec();
    let mut c = TensorContainer::new();
    c.push_f64(
        "bank_points",
        vec![bank.len(), bank.dim()],
        bank.points().to_vec(),
    )?;
    c.push_f64("bank_labels", vec![bank.len()], bank.labels().to_vec())?;
    c.push_f64(
        "bank_source_count",
        vec![1],
        vec![bank.source_count() as f64],
    )?;
    let [family, a, b] = kernel_code(&spec.kernel);
    c.push_f64(
        "kernel",
        vec![6],
        vec![family, a, b, spec.knn as f64, spec.c, spec.cap],
    )?;
    Ok(c)
}

pub fn estimator_from_container(c: &TensorContainer) -> Result<UqEstimator> {
    let (dims, points) = f64s(c, "bank_points")?;
    let [_, d] = dims[..] else {
        return Err(Error::BadHeader(
            "section 'bank_points' must be M x d".into(),
        ));
    };
    let (_, labels) = f64s(c, "bank_labels")?;
    let [n] = scalars::<1>(c, "bank_source_count")?;
    let bank = EmbeddingBank::new(d, points, labels, whole(n, "source count")? as u64)?;
    let [family, a, b, knn, cst, cap] = scalars::<6>(c, "kernel")?;
    let spec = KernelSpec {
        kernel: kernel_from_code(family, a, b)?,
        knn: whole(knn, "knn")?,
        c: cst,
        cap,
    };
    fit(bank, spec)
}

pub fn uq_map_to_container(map: &UqMap) -> Result<TensorContainer> {
    let um = &map.model_uncertainty;
    let mut c = TensorContainer::new();
    put_grid(&mut c, "model_uncertainty", um)?;
    c.push_f32(
        "clamped",
        vec![um.height(), um.width()],
        map.clamped
            .as_slice()
            .iter()
            .map(|&b| f32::from(u8::from(b)))
            .collect(),
    )?;
    Ok(c)
}

pub fn uq_map_from_container(c: &TensorContainer) -> Result<UqMap> {
    let um: UncertaintyMap = get_grid(c, "model_uncertainty")?;
    let t = c.get("clamped")?;
    let (h, w) = grid_dims(&t.dims, "clamped")?;
    let clamped = Mask::from_vec(h, w, t.data.to_f64().iter().map(|&v| v != 0.0).collect())?;
    um.check_shape(&clamped)?;
    Ok(UqMap {
        model_uncertainty: um,
        clamped,
    })
}
