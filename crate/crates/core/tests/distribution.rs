mod oracle;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use stereo_uq::distribution::{cdf, central_interval, expectation, variance};
use stereo_uq::{BinLayout, Pmf};

fn random_pmf(rng: &mut ChaCha8Rng, k: usize) -> Pmf {
    let z: Vec<f64> = (0..k).map(|_| rng.gen_range(-6.0..6.0)).collect();
    Pmf::from_logits(&z).unwrap()
}

#[test]
fn moments_match_scalar_oracle_on_uniform_bins() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let layout = BinLayout::uniform(-0.5, 63.5, 64).unwrap();
    for _ in 0..200 {
        let p = random_pmf(&mut rng, 64);
        let (m, v) = oracle::moments(p.mass(), layout.edges());
        assert!((expectation(&p, &layout).unwrap() - m).abs() <= 1e-9);
        assert!((variance(&p, &layout).unwrap() - v).abs() <= 1e-9);
    }
}

#[test]
fn moments_match_scalar_oracle_on_geometric_bins() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let layout = BinLayout::index_range(1.0, 64.0, 64).unwrap();
    for _ in 0..200 {
        let p = random_pmf(&mut rng, 64);
        let (m, v) = oracle::moments(p.mass(), layout.edges());
        assert!((expectation(&p, &layout).unwrap() - m).abs() <= 1e-9);
        assert!((variance(&p, &layout).unwrap() - v).abs() <= 1e-9 * v.max(1.0));
    }
}

#[test]
fn cdf_is_running_sum() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let p = random_pmf(&mut rng, 64);
    let c = cdf(&p);
    let mut acc = 0.0;
    for (k, &m) in p.mass().iter().enumerate() {
        acc += m;
        assert!((c[k] - acc).abs() < 1e-12);
    }
    assert!((c[63] - 1.0).abs() < 1e-12);
}

#[test]
fn central_interval_matches_quantile_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let layout = BinLayout::uniform(-0.5, 23.5, 24).unwrap();
    for _ in 0..100 {
        let p = random_pmf(&mut rng, 24);
        let (lo, hi) = central_interval(&p, &layout, 0.9).unwrap();
        let olo = oracle::quantile(p.mass(), layout.edges(), 0.05);
        let ohi = oracle::quantile(p.mass(), layout.edges(), 0.95);
        assert!((lo - olo).abs() < 1e-9, "{lo} vs {olo}");
        assert!((hi - ohi).abs() < 1e-9, "{hi} vs {ohi}");
    }
}

#[test]
fn pmf_rejects_bad_mass() {
    assert!(Pmf::new(vec![0.5, 0.4]).is_err());
    assert!(Pmf::new(vec![1.2, -0.2]).is_err());
    assert!(Pmf::new(vec![f64::NAN, 1.0]).is_err());
    assert!(Pmf::new(vec![]).is_err());
}
