mod common;

use rand::Rng;
use semicircle_lab::ensemble::EntryDistribution;
use semicircle_lab::experiments::*;
use semicircle_lab::semicircle::{classical_locations, SpectralPoint};
use semicircle_lab::spectral::SpectralDecomposition;
use semicircle_lab::Error;

fn scan_config(n_list: Vec<usize>, eta_list: Vec<f64>, samples: usize) -> ScanConfig {
    ScanConfig {
        n_list,
        eta_list,
        e_list: vec![0.0, -0.7],
        samples,
        base_seed: 12345,
        distribution: EntryDistribution::Gaussian,
    }
}

#[test]
fn zero_samples_give_no_records() {
    assert!(fluctuation_scan(&scan_config(vec![100], vec![0.1], 0), 1).unwrap().is_empty());
}

#[test]
fn scan_is_independent_of_thread_count() {
    let config = scan_config(vec![40, 60], vec![0.2, 0.5], 6);
    let one = fluctuation_scan(&config, 1).unwrap();
    let eight = fluctuation_scan(&config, 8).unwrap();
    assert_eq!(one.len(), 2 * 6 * 2 * 2);
    assert_eq!(one, eight);
    assert!(one.iter().all(|r| r.abs_lambda >= r.im_lambda.abs()));
    let order: Vec<(usize, usize)> = one.iter().map(|r| (r.n, r.sample)).collect();
    let mut ascending = order.clone();
    ascending.sort();
    assert_eq!(order, ascending);
}

#[test]
fn scan_enforces_the_n_eta_floor() {
    let err = fluctuation_scan(&scan_config(vec![100], vec![0.04], 1), 1).unwrap_err();
    assert!(matches!(err, Error::InvalidInput(_)));
    assert!(fluctuation_scan(&scan_config(vec![100], vec![0.05], 1), 1).is_ok());
}

#[test]
fn fluctuation_constant_at_moderate_scale() {
    let config = ScanConfig {
        n_list: vec![500],
        eta_list: vec![0.1],
        e_list: vec![0.0],
        samples: 100,
        base_seed: 2718,
        distribution: EntryDistribution::Gaussian,
    };
    let records = fluctuation_scan(&config, 1).unwrap();
    let scaled: Vec<f64> = records.iter().map(|r| r.abs_lambda * r.n as f64 * r.eta).collect();
    let m = median(&scaled);
    assert!((0.05..=5.0).contains(&m), "{m}");
    let cells = summarize_cells(&records);
    assert_eq!(cells.len(), 1);
    assert_eq!(cells[0].samples, 100);
}

#[test]
fn scan_and_spectrum_study_share_matrices() {
    let scan = fluctuation_scan(&scan_config(vec![50], vec![0.3], 4), 1).unwrap();
    let study = spectrum_study(
        &SpectrumConfig { n_list: vec![50], samples: 4, base_seed: 12345, distribution: EntryDistribution::Gaussian },
        1,
    )
    .unwrap();
    for s in &study {
        let r = scan.iter().find(|r| r.sample == s.sample).unwrap();
        assert_eq!(r.lambda_max, s.lambda_max);
        assert_eq!(r.counting_stat, s.counting_stat);
        assert_eq!(r.rigidity_stat, s.rigidity_stat);
    }
}

#[test]
fn noisy_power_law_fit() {
    let mut rng = common::rng(4);
    let x: Vec<f64> = (0..11).map(|k| 2f64.powi(k)).collect();
    let y: Vec<f64> = x.iter().map(|v| (1.0 + rng.random_range(-0.05..0.05)) / v).collect();
    let fit = loglog_fit(&x, &y).unwrap();
    assert!((-1.1..=-0.9).contains(&fit.slope), "{fit:?}");
    assert!((0.0..=1.0).contains(&fit.r_squared));
    assert_eq!(fit.n_points, 11);
}

#[test]
fn counting_statistic_matches_grid_supremum() {
    let mut rng = common::rng(10);
    for trial in 0..20 {
        let n = rng.random_range(5..200);
        let spread = rng.random_range(1.5..2.6);
        let eigenvalues: Vec<f64> = (0..n).map(|_| rng.random_range(-spread..spread)).collect();
        let spectrum = SpectralDecomposition::from_eigenvalues(eigenvalues.clone());
        let exact = counting_statistic(&spectrum);
        let (lo, hi, points) = (-3.0, 3.0, 1_000_000);
        let grid = common::counting_on_grid(&eigenvalues, lo, hi, points);
        let resolution = (hi - lo) / (points - 1) as f64;
        assert!(grid <= exact + 1e-7, "trial {trial}: grid {grid} > exact {exact}");
        assert!(exact - grid <= resolution / std::f64::consts::PI + 1e-7, "trial {trial}: {exact} vs {grid}");
    }
}

#[test]
fn counting_statistic_examples() {
    assert_eq!(counting_statistic(&SpectralDecomposition::from_eigenvalues(vec![0.0])), 0.5);
    for n in [3, 10, 100] {
        let at_gamma = counting_statistic(&SpectralDecomposition::from_eigenvalues(classical_locations(n)));
        assert!(at_gamma <= 1.0 / n as f64 + 1e-12, "N = {n}: {at_gamma}");
        let shifted: Vec<f64> = classical_locations(n).iter().map(|g| g + 10.0).collect();
        assert_eq!(counting_statistic(&SpectralDecomposition::from_eigenvalues(shifted)), 1.0);
    }
}

#[test]
fn rigidity_vanishes_at_classical_locations() {
    for n in 2..=1000 {
        let spectrum = SpectralDecomposition::from_eigenvalues(classical_locations(n));
        assert_eq!(rigidity_statistic(&spectrum).unwrap(), 0.0, "N = {n}");
    }
}

#[test]
fn rigidity_is_monotone_in_each_deviation() {
    let n = 30;
    let gammas = classical_locations(n);
    let mut lambda = gammas.clone();
    let mut previous = 0.0;
    for step in 1..=5 {
        lambda[n / 2] = gammas[n / 2] + 0.001 * step as f64;
        let value = rigidity_statistic(&SpectralDecomposition::from_eigenvalues(lambda.clone())).unwrap();
        assert!(value >= previous);
        previous = value;
    }
    assert!(rigidity_statistic(&SpectralDecomposition::from_eigenvalues(vec![0.0])).is_err());
    let sqrt_log = rigidity_statistic_sqrt_log(&SpectralDecomposition::from_eigenvalues(lambda)).unwrap();
    assert!((sqrt_log - previous * (n as f64).ln().sqrt()).abs() < 1e-12);
}

#[test]
fn edge_fit_of_exact_power_law() {
    let mut pairs = Vec::new();
    for n in [100usize, 200, 400, 800] {
        for _ in 0..50 {
            pairs.push((n, 2.0 - 1.77 * (n as f64).powf(-2.0 / 3.0)));
        }
    }
    let study = edge_statistic(&pairs, SpreadProxy::MedianEdgeDistance).unwrap();
    assert!((study.fit.slope + 2.0 / 3.0).abs() < 1e-12, "{:?}", study.fit);
    assert!(study.groups.iter().all(|g| g.samples == 50));
}

#[test]
fn edge_fit_needs_enough_data() {
    let one_n: Vec<(usize, f64)> = (0..200).map(|i| (100, 2.0 + i as f64 * 1e-3)).collect();
    assert!(matches!(edge_statistic(&one_n, SpreadProxy::Iqr), Err(Error::InsufficientData(_))));
    let thin: Vec<(usize, f64)> = [100, 200, 400].iter().flat_map(|&n| (0..10).map(move |i| (n, i as f64))).collect();
    assert!(matches!(edge_statistic(&thin, SpreadProxy::Iqr), Err(Error::InsufficientData(_))));
}

#[test]
fn hanson_wright_identity_shape() {
    let config = HansonWrightConfig {
        n: 200,
        kind: QuadraticFormKind::Identity,
        deltas: vec![1.0, 2.0, 4.0],
        samples: 10_000,
        seed: 99,
        distribution: EntryDistribution::Gaussian,
    };
    let estimate = hanson_wright_tail(&config).unwrap();
    let tails = estimate.tails();
    assert_eq!(estimate.trace_a_star_a, 200.0);
    assert!(tails[0] > tails[1] && tails[1] > tails[2], "{tails:?}");
    assert!(tails[2] < tails[0] / 5.0);
}

#[test]
fn hanson_wright_resolvent_kind_runs() {
    let config = HansonWrightConfig {
        n: 40,
        kind: QuadraticFormKind::RandomResolvent(SpectralPoint::new(0.0, 0.5).unwrap()),
        deltas: vec![0.5, 1.0, 3.0],
        samples: 2000,
        seed: 5,
        distribution: EntryDistribution::Uniform,
    };
    let tails = hanson_wright_tail(&config).unwrap().tails();
    assert!(tails.windows(2).all(|w| w[0] >= w[1]), "{tails:?}");
}

#[test]
fn hanson_wright_rejects_unsorted_deltas() {
    let config = HansonWrightConfig {
        n: 4,
        kind: QuadraticFormKind::Identity,
        deltas: vec![2.0, 1.0],
        samples: 1,
        seed: 0,
        distribution: EntryDistribution::Gaussian,
    };
    assert!(hanson_wright_tail(&config).is_err());
}

#[test]
fn control_parameter_properties() {
    let mut rng = common::rng(6);
    for _ in 0..200 {
        let n = rng.random_range(10..5000);
        let eta = rng.random_range(5.0 / n as f64..1.0);
        let z = SpectralPoint::new(rng.random_range(-2.5..2.5), eta).unwrap();
        let q = rng.random_range(1..=4);
        let moment = rng.random_range(0.0..1.0);
        let value = control_parameter(n, z, q, moment).unwrap();
        assert!(value >= (n as f64 * eta).powi(-2 * q as i32));
    }
}

#[test]
fn control_parameter_degenerate_maximum() {
    // far from the spectrum Im m_sc is negligible next to (N eta)^{-q}
    let n = 100;
    let z = SpectralPoint::new(1e8, 1e-3).unwrap();
    let q = 1;
    let n_eta = n as f64 * 1e-3;
    let value = control_parameter(n, z, q, 0.0).unwrap();
    let expected = n_eta.powi(-2) + 1.0 / n as f64;
    assert!((value - expected).abs() < 1e-12 * expected);
}

#[test]
fn control_parameter_doubling_spot_check() {
    let config = ScanConfig {
        n_list: vec![200],
        eta_list: vec![0.05, 0.2],
        e_list: vec![0.0, 1.0],
        samples: 20,
        base_seed: 8,
        distribution: EntryDistribution::Gaussian,
    };
    let records = fluctuation_scan(&config, 1).unwrap();
    for cell in summarize_cells(&records) {
        let values: Vec<f64> = records
            .iter()
            .filter(|r| r.energy == cell.energy && r.eta == cell.eta)
            .map(|r| r.im_lambda.abs())
            .collect();
        let z = SpectralPoint::new(cell.energy, cell.eta).unwrap();
        for q in 1..=2u32 {
            let moment = |p: u32| values.iter().map(|v| v.powi(p as i32)).sum::<f64>() / values.len() as f64;
            let e_q = control_parameter(cell.n, z, q, moment(q)).unwrap();
            let e_2q = control_parameter(cell.n, z, 2 * q, moment(2 * q)).unwrap();
            assert!(e_2q <= 10.0 * e_q * e_q, "q = {q}: {e_2q} vs {e_q}");
        }
    }
}
