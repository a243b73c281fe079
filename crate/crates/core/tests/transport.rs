use fekete_gibbs::rng::substream;
use fekete_gibbs::transport::*;
use fekete_gibbs::tropical::{ma_grid, solve_real_ma_1d};
use rand::Rng;
use statrs::distribution::{ContinuousCDF, Normal};

fn random_points(rng: &mut impl Rng, count: usize, dim: usize) -> Vec<Vec<f64>> {
    (0..count).map(|_| (0..dim).map(|_| rng.random_range(-2.0..2.0)).collect()).collect()
}

fn random_weights(rng: &mut impl Rng, count: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..count).map(|_| rng.random_range(0.1..1.0)).collect();
    let total: f64 = raw.iter().sum();
    let mut w: Vec<f64> = raw.iter().map(|r| r / total).collect();
    let head: f64 = w[..count - 1].iter().sum();
    w[count - 1] = 1.0 - head;
    w
}

fn random_measure(rng: &mut impl Rng, count: usize, dim: usize) -> DiscreteMeasure {
    let pts = random_points(rng, count, dim);
    let w = random_weights(rng, count);
    DiscreteMeasure::new(pts, w).unwrap()
}

fn check_marginals(plan: &Plan, mu0: &DiscreteMeasure, mu1: &DiscreteMeasure) {
    for (a, b) in plan.row_marginal().iter().zip(mu0.weights()) {
        assert!((a - b).abs() < 1e-10);
    }
    for (a, b) in plan.col_marginal().iter().zip(mu1.weights()) {
        assert!((a - b).abs() < 1e-10);
    }
}

fn plan_cost(plan: &Plan, mu0: &DiscreteMeasure, mu1: &DiscreteMeasure) -> f64 {
    plan.entries
        .iter()
        .map(|&(i, j, m)| -m * mu0.points()[i].iter().zip(&mu1.points()[j]).map(|(a, b)| a * b).sum::<f64>())
        .sum()
}

#[test]
fn dirac_cost_is_minus_squared_norm() {
    for x in [vec![0.0], vec![3.0], vec![1.0, -2.0], vec![0.5, 0.5, 0.5]] {
        let d = DiscreteMeasure::uniform(vec![x.clone()]).unwrap();
        let (c, plan) = ot_cost(&d, &d).unwrap();
        assert_eq!(c, -x.iter().map(|v| v * v).sum::<f64>());
        assert_eq!(plan.entries, vec![(0, 0, 1.0)]);
    }
}

#[test]
fn cost_is_symmetric_and_plans_transpose() {
    let mut rng = substream(11, 0);
    for t in 0..20 {
        let dim = 1 + t % 2;
        let mu0 = random_measure(&mut rng, 3 + t % 5, dim);
        let mu1 = random_measure(&mut rng, 2 + t % 7, dim);
        let (c01, p01) = ot_cost(&mu0, &mu1).unwrap();
        let (c10, p10) = ot_cost(&mu1, &mu0).unwrap();
        assert!((c01 - c10).abs() < 1e-12);
        check_marginals(&p01, &mu0, &mu1);
        let tr = p01.transpose();
        assert_eq!(tr.entries.len(), p10.entries.len());
        for (a, b) in tr.entries.iter().zip(&p10.entries) {
            assert_eq!((a.0, a.1), (b.0, b.1));
            assert!((a.2 - b.2).abs() < 1e-12);
        }
    }
}

#[test]
fn solvers_agree() {
    let mut rng = substream(12, 0);
    for t in 0..50 {
        let n = rng.random_range(1..=30);
        let dim = 1 + t % 2;
        let mu0 = DiscreteMeasure::uniform(random_points(&mut rng, n, dim)).unwrap();
        let mu1 = DiscreteMeasure::uniform(random_points(&mut rng, n, dim)).unwrap();
        let (ca, pa) = ot_cost_with(&mu0, &mu1, OtSolver::Assignment).unwrap();
        let (cn, pn) = ot_cost_with(&mu0, &mu1, OtSolver::Network).unwrap();
        assert!((ca - cn).abs() < 1e-9, "{ca} vs {cn}");
        check_marginals(&pa, &mu0, &mu1);
        check_marginals(&pn, &mu0, &mu1);
        assert!((plan_cost(&pn, &mu0, &mu1) - cn).abs() < 1e-9);
    }
}

#[test]
fn line_plans_do_not_cross() {
    let mut rng = substream(13, 0);
    for _ in 0..30 {
        let (n0, n1) = (rng.random_range(2..12), rng.random_range(2..12));
        let mu0 = random_measure(&mut rng, n0, 1);
        let mu1 = random_measure(&mut rng, n1, 1);
        let (_, plan) = ot_cost(&mu0, &mu1).unwrap();
        let x = |i: usize| mu0.points()[i][0];
        let y = |j: usize| mu1.points()[j][0];
        for &(i, j, _) in &plan.entries {
            for &(k, l, _) in &plan.entries {
                if x(i) < x(k) {
                    assert!(y(j) <= y(l), "crossing ({i},{j}) ({k},{l})");
                }
            }
        }
    }
}

#[test]
fn line_cost_is_sorted_matching() {
    let mut rng = substream(14, 0);
    for _ in 0..30 {
        let n = rng.random_range(1..20);
        let mut x: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
        let mut y: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
        let (c, _) = ot_cost_with(
            &DiscreteMeasure::uniform_line(&x).unwrap(),
            &DiscreteMeasure::uniform_line(&y).unwrap(),
            OtSolver::Network,
        )
        .unwrap();
        x.sort_by(f64::total_cmp);
        y.sort_by(f64::total_cmp);
        let sorted = -x.iter().zip(&y).map(|(a, b)| a * b).sum::<f64>() / n as f64;
        assert!((c - sorted).abs() < 1e-12);
    }
}

#[test]
fn plan_csv_header() {
    let mu = DiscreteMeasure::uniform_line(&[0.0, 1.0]).unwrap();
    let (_, plan) = ot_cost(&mu, &mu).unwrap();
    assert_eq!(plan.to_csv(), "i,j,mass\n0,0,0.5\n1,1,0.5\n");
}

#[test]
fn rejects_bad_measures() {
    assert!(DiscreteMeasure::new(vec![vec![0.0], vec![1.0]], vec![0.5, 0.6]).is_err());
    assert!(DiscreteMeasure::new(vec![vec![0.0], vec![1.0]], vec![1.5, -0.5]).is_err());
    assert!(DiscreteMeasure::new(vec![vec![0.0], vec![1.0, 2.0]], vec![0.5, 0.5]).is_err());
    let a = DiscreteMeasure::uniform_line(&[0.0]).unwrap();
    let b = DiscreteMeasure::uniform(vec![vec![0.0, 0.0]]).unwrap();
    assert!(ot_cost(&a, &b).is_err());
}

fn pushforward_check(map: &MonotoneMap) {
    for i in 1..=20 {
        let q = i as f64 / 21.0;
        let xq = map.law.quantile(q);
        let t = map.eval(xq);
        let f_nu = (t - map.a) / (map.b - map.a);
        assert!((f_nu - q).abs() < 1e-8, "q {q}: {f_nu}");
    }
}

#[test]
fn uniform_maps_to_itself() {
    let map = monotone_map_1d(Law1d::Uniform { lo: -1.0, hi: 3.0 }, -1.0, 3.0).unwrap();
    for i in 0..=40 {
        let x = -1.0 + 0.1 * i as f64;
        assert!((map.eval(x) - x).abs() < 1e-14);
    }
    pushforward_check(&map);
}

#[test]
fn laplace_map_matches_real_ma_slope() {
    let map = monotone_map_1d(Law1d::Laplace { scale: 1.0 }, -1.0, 1.0).unwrap();
    pushforward_check(&map);
    let grid = ma_grid(30.0, 3000);
    let sol = solve_real_ma_1d(-1.0, 1.0, 0.0, 0.0, &grid).unwrap();
    for (x, du) in sol.x.iter().zip(&sol.du) {
        let closed = x.signum() * (1.0 - (-x.abs()).exp());
        assert!((map.eval(*x) - closed).abs() < 1e-14);
        assert!((map.eval(*x) - du).abs() < 1e-10);
    }
}

#[test]
fn gaussian_map_is_the_normal_cdf() {
    let map = monotone_map_1d(Law1d::Gaussian { mean: 0.0, sigma: 1.0 }, 0.0, 1.0).unwrap();
    pushforward_check(&map);
    let nd = Normal::new(0.0, 1.0).unwrap();
    for i in 0..=60 {
        let x = -3.0 + 0.1 * i as f64;
        assert_eq!(map.eval(x), nd.cdf(x));
    }
}

#[test]
fn transport_potentials_are_convex() {
    let laws = [
        Law1d::Laplace { scale: 0.7 },
        Law1d::Gaussian { mean: 1.0, sigma: 2.0 },
        Law1d::Uniform { lo: -2.0, hi: 1.0 },
        Law1d::Empirical { measure: DiscreteMeasure::uniform_line(&[-1.0, 0.2, 0.3, 2.0]).unwrap() },
    ];
    let grid: Vec<f64> = (0..=400).map(|i| -5.0 + 0.025 * i as f64).collect();
    for law in laws {
        let map = monotone_map_1d(law, -1.0, 2.0).unwrap();
        let u = map.potential(&grid);
        for w in u.windows(3) {
            assert!(w[2] - 2.0 * w[1] + w[0] >= -1e-12);
        }
    }
}

#[test]
fn degenerate_interval_is_rejected() {
    assert!(monotone_map_1d(Law1d::Laplace { scale: 1.0 }, 1.0, 1.0).is_err());
    assert!(monotone_map_1d(Law1d::Laplace { scale: 1.0 }, 2.0, 1.0).is_err());
}
