mod oracle;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use stereo_uq::kernel_uq::{fit, uq_map, EmbeddingBank, Kernel, KernelSpec};
use stereo_uq::FeatureVolume;

fn gaussian_bank(rng: &mut ChaCha8Rng, m: usize, dim: usize) -> EmbeddingBank {
    let points: Vec<f64> = (0..m * dim).map(|_| rng.sample(StandardNormal)).collect();
    let labels: Vec<f64> = (0..m)
        .map(|i| points[i * dim] * 3.0 + rng.gen_range(-1.0..1.0))
        .collect();
    EmbeddingBank::new(dim, points, labels, m as u64).unwrap()
}

fn spec(h: f64, knn: usize) -> KernelSpec {
    KernelSpec {
        kernel: Kernel::Rbf { h },
        knn,
        c: 1.0,
        cap: 1e9,
    }
}

fn oracle_risk(sigma2: f64, p: f64, n: f64, c: f64) -> f64 {
    2.0 * ((2.0 / std::f64::consts::PI) * (c / n) * sigma2 / p).sqrt()
}

#[test]
fn full_neighborhood_matches_brute_force_sum() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let (m, dim) = (500, 4);
    let bank = gaussian_bank(&mut rng, m, dim);
    let points = bank.points().to_vec();
    let labels = bank.labels().to_vec();
    let est = fit(bank, spec(1.5, m)).unwrap();
    for _ in 0..50 {
        let q: Vec<f64> = (0..dim).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let r = est.query(&q).unwrap();
        let (g, s2, p) = oracle::nadaraya_watson_rbf(&points, &labels, dim, 1.5, &q);
        assert!(
            (r.prediction - g).abs() <= 1e-12 * g.abs().max(1.0),
            "{} vs {g}",
            r.prediction
        );
        assert!(
            (r.sigma2 - s2).abs() <= 1e-12 * s2.max(1.0),
            "{} vs {s2}",
            r.sigma2
        );
        assert!((r.density - p).abs() <= 1e-12 * p, "{} vs {p}", r.density);
        let u = oracle_risk(s2, p, m as f64, 1.0);
        assert!((r.model_uncertainty - u).abs() <= 1e-10 * u);
    }
}

#[test]
fn duplicated_points_do_not_change_the_prediction() {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    let bank = gaussian_bank(&mut rng, 40, 3);
    let mut points = bank.points().to_vec();
    let mut labels = bank.labels().to_vec();
    points.extend_from_slice(bank.points());
    labels.extend_from_slice(bank.labels());
    let doubled = EmbeddingBank::new(3, points, labels, 80).unwrap();
    let a = fit(bank, spec(1.0, 40)).unwrap();
    let b = fit(doubled, spec(1.0, 80)).unwrap();
    let q = [0.3, -0.2, 0.5];
    let (ra, rb) = (a.query(&q).unwrap(), b.query(&q).unwrap());
    assert!((ra.prediction - rb.prediction).abs() < 1e-12);
    assert!((ra.sigma2 - rb.sigma2).abs() < 1e-12);
    assert!((ra.density - rb.density).abs() < 1e-15);
}

#[test]
fn far_query_is_less_certain_than_centroid() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let bank = gaussian_bank(&mut rng, 300, 2);
    let est = fit(bank, spec(0.5, 50)).unwrap();
    let near = est.query(&[0.0, 0.0]).unwrap();
    let far = est.query(&[4.0, 4.0]).unwrap();
    assert!(far.density < near.density);
    assert!(far.model_uncertainty > near.model_uncertainty);
}

#[test]
fn doubling_source_count_divides_by_sqrt_two() {
    let mut rng = ChaCha8Rng::seed_from_u64(24);
    let bank = gaussian_bank(&mut rng, 200, 3);
    let twice = bank.clone().with_source_count(400).unwrap();
    let a = fit(bank, spec(1.0, 50)).unwrap();
    let b = fit(twice, spec(1.0, 50)).unwrap();
    for q in [[0.0, 0.0, 0.0], [1.0, -1.0, 0.5], [2.0, 2.0, 2.0]] {
        let (ra, rb) = (a.query(&q).unwrap(), b.query(&q).unwrap());
        assert_eq!(ra.sigma2, rb.sigma2);
        assert_eq!(ra.density, rb.density);
        let ratio = rb.model_uncertainty / ra.model_uncertainty;
        assert!(
            (ratio - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-14,
            "{ratio}"
        );
    }
}

#[test]
fn prediction_is_a_convex_combination_of_labels() {
    let mut rng = ChaCha8Rng::seed_from_u64(25);
    for kernel in [
        Kernel::Rbf { h: 0.7 },
        Kernel::Epanechnikov { h: 3.0 },
        Kernel::Polynomial {
            degree: 2,
            offset: 1.0,
        },
    ] {
        let bank = gaussian_bank(&mut rng, 100, 3);
        let (lo, hi) = bank
            .labels()
            .iter()
            .fold((f64::MAX, f64::MIN), |(a, b), &y| (a.min(y), b.max(y)));
        let est = fit(
            bank,
            KernelSpec {
                kernel,
                knn: 20,
                c: 1.0,
                cap: 1e3,
            },
        )
        .unwrap();
        for _ in 0..50 {
            let q: Vec<f64> = (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let r = est.query(&q).unwrap();
            assert!(
                r.prediction >= lo - 1e-12 && r.prediction <= hi + 1e-12,
                "{kernel}: {}",
                r.prediction
            );
            assert!(r.sigma2 >= 0.0);
            assert!(r.model_uncertainty <= 1e3);
        }
    }
}

#[test]
fn uq_map_agrees_with_single_queries() {
    let mut rng = ChaCha8Rng::seed_from_u64(26);
    let bank = gaussian_bank(&mut rng, 120, 2);
    let est = fit(bank, spec(0.3, 30)).unwrap();
    let data: Vec<f64> = (0..3 * 5 * 2).map(|_| rng.gen_range(-6.0..6.0)).collect();
    let vol = FeatureVolume::new(3, 5, 2, data).unwrap();
    let map = uq_map(&est, &vol).unwrap();
    for (i, x) in vol.pixels().enumerate() {
        let r = est.query(x).unwrap();
        assert_eq!(map.model_uncertainty.as_slice()[i], r.model_uncertainty);
        assert_eq!(map.clamped.as_slice()[i], r.clamped);
    }
    assert!(est.query(&[0.0; 3]).is_err());
}
