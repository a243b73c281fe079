use fekete_gibbs::curieweiss::*;

fn params(beta: f64, h: f64, n: usize) -> CwParams {
    CwParams { beta, h, n, coupling: Coupling::Ferro }
}

#[test]
fn free_energy_is_even_without_field() {
    for beta in [0.3, 1.0, 2.5] {
        for i in 0..=20 {
            let m = -1.0 + 0.1 * i as f64;
            assert_eq!(cw_free_energy_ferro(m, beta, 0.0), cw_free_energy_ferro(-m, beta, 0.0));
        }
    }
}

#[test]
fn nonzero_fixed_points_are_mirror_images() {
    for beta in [1.2, 2.0, 4.0] {
        let fp = cw_magnetization(beta, 0.0, Coupling::Ferro);
        assert_eq!(fp.len(), 3);
        assert_eq!(fp[0].m, -fp[2].m);
        assert_eq!(fp[0].stability, Stability::Minimum);
        assert_eq!(fp[2].stability, Stability::Minimum);
    }
}

#[test]
fn small_field_selects_the_positive_branch() {
    let m_plus = 0.957504;
    let mut last = f64::INFINITY;
    for h in [1e-2, 1e-3, 1e-4, 1e-6] {
        let best = cw_magnetization(2.0, h, Coupling::Ferro)
            .into_iter()
            .filter(|f| f.stability == Stability::Minimum)
            .min_by(|a, b| a.free_energy.total_cmp(&b.free_energy))
            .unwrap();
        assert!(best.m > 0.0);
        let err = (best.m - m_plus).abs();
        assert!(err <= last + 1e-12);
        last = err;
    }
    assert!(last < 1e-5);
}

#[test]
fn antiferro_minimizer_is_zero() {
    for i in 1..=30 {
        let beta = 0.1 * i as f64;
        let fp = cw_magnetization(beta, 0.0, Coupling::Antiferro);
        let minima: Vec<_> = fp.iter().filter(|f| f.stability == Stability::Minimum).collect();
        assert_eq!(minima.len(), 1, "beta {beta}");
        assert_eq!(minima[0].m, 0.0);
    }
}

#[test]
fn probabilities_sum_to_one() {
    for (beta, h, n) in [(0.5, 0.0, 2000), (2.0, 0.1, 999), (3.0, -0.2, 50_000), (1.0, 0.0, 1)] {
        let r = cw_finite_n(params(beta, h, n), (-1.0, 1.0)).unwrap();
        let total: f64 = r.prob.iter().sum();
        assert!((total - 1.0).abs() < 1e-12, "{n}: {}", total - 1.0);
        assert!(r.rate.abs() < 1e-12);
    }
}

#[test]
fn log_partition_derivative_is_minus_mean_energy() {
    let n = 200;
    for (beta, h) in [(0.5, 0.0), (1.5, 0.05), (2.0, 0.0)] {
        let d = 1e-5;
        let lz = |b: f64| cw_finite_n(params(b, h, n), (-1.0, 1.0)).unwrap().log_partition;
        let fd = (lz(beta + d) - lz(beta - d)) / (2.0 * d);
        let r = cw_finite_n(params(beta, h, n), (-1.0, 1.0)).unwrap();
        assert!((fd + r.mean_energy).abs() < 1e-6, "{fd} vs {}", r.mean_energy);
    }
}

#[test]
fn rate_matches_free_energy_gap() {
    let r = cw_finite_n(params(0.5, 0.0, 2000), (-0.05, 0.05)).unwrap();
    assert!(r.rate.abs() < 0.005);
    let r = cw_finite_n(params(2.0, 0.0, 2000), (-0.05, 0.05)).unwrap();
    assert!(r.gap > 0.0);
    assert!((r.rate - r.gap).abs() < 0.1 * r.gap, "{} vs {}", r.rate, r.gap);
}

#[test]
fn one_spin_law() {
    for (beta, h) in [(0.7, 0.3), (2.0, -1.0)] {
        let r = cw_finite_n(params(beta, h, 1), (-1.0, 1.0)).unwrap();
        let z = (beta * h).exp() + (-beta * h).exp();
        assert!((r.prob[1] - (beta * h).exp() / z).abs() < 1e-15);
        assert!((r.prob[0] - (-beta * h).exp() / z).abs() < 1e-15);
    }
}

#[test]
fn window_outside_range_is_rejected() {
    assert!(cw_finite_n(params(1.0, 0.0, 10), (1.5, 2.0)).is_err());
    assert!(cw_finite_n(params(1.0, 0.0, 10), (0.5, 0.2)).is_err());
}

#[test]
fn phase_table_layout() {
    let rows = phase_table(&[0.5, 2.0], &[0.0], Coupling::Ferro);
    let csv = phase_table_csv(&rows);
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "beta,h,m,F,stability");
    assert_eq!(lines.len(), 1 + 1 + 3);
    assert_eq!(lines[1], "0.5,0,0,-1.3862943611198906,min");
}
