use fekete_gibbs::diagnostics::{wasserstein1, EmpiricalMeasure, Reference};
use fekete_gibbs::polybasis::{log_abs_det2, Configuration, MultiIndexBasis};
use fekete_gibbs::rng::substream;
use fekete_gibbs::tropical::*;
use rand::seq::SliceRandom;
use rand::Rng;

fn cloud(body: &ConvexBody, k: usize) -> LatticeCloud {
    support_and_lattice(body, k).unwrap().1
}

#[test]
fn lattice_examples() {
    let c = cloud(&ConvexBody::interval(0.0, 1.0).unwrap(), 3);
    assert_eq!(c.points, vec![vec![0.0], vec![1.0 / 3.0], vec![2.0 / 3.0], vec![1.0]]);
    assert_eq!(c.len(), fekete_gibbs::polybasis::basis_size(1, 3).unwrap());
    let square = ConvexBody::cube(2);
    assert_eq!(cloud(&square, 1).len(), 9);
    let body = ConvexBody::interval(-1.0, 2.0).unwrap();
    let (phi, _) = support_and_lattice(&body, 1).unwrap();
    assert_eq!(phi(&[1.0]), 2.0);
    assert_eq!(phi(&[-1.0]), 1.0);
}

#[test]
fn body_from_json() {
    let body = ConvexBody::from_json(r#"{"n":2,"vertices":[[-1,-1],[2,-1],[-1,2]]}"#).unwrap();
    assert_eq!(body.dimension(), 2);
    assert!((body.volume() - 4.5).abs() < 1e-12);
    assert!(body.barycenter().iter().all(|b| b.abs() < 1e-12));
    assert!(ConvexBody::from_json(r#"{"n":2,"vertices":[[0,0],[1]]}"#).is_err());
    assert!(ConvexBody::from_json("not json").is_err());
}

#[test]
fn r_invariant_examples() {
    for n in 1..=3 {
        assert_eq!(r_invariant(&ConvexBody::cube(n)).unwrap(), 1.0);
    }
    let body = ConvexBody::interval(-1.0, 2.0).unwrap();
    let r = r_invariant(&body).unwrap();
    assert!((r - 2.0 / 3.0).abs() < 1e-12);
    for lambda in [0.5, 3.0] {
        assert!((r_invariant(&body.scaled(lambda).unwrap()).unwrap() - r).abs() < 1e-12);
        assert_eq!(r_invariant(&ConvexBody::cube(2).scaled(lambda).unwrap()).unwrap(), 1.0);
    }
    let shifted = ConvexBody::interval(0.5, 2.0).unwrap();
    assert!(r_invariant(&shifted).is_err());
}

#[test]
fn e_trop_examples() {
    let c = cloud(&ConvexBody::interval(0.0, 1.0).unwrap(), 1);
    let (e, perm) = e_trop(&[vec![0.0], vec![1.0]], &c).unwrap();
    assert_eq!(e, 0.5);
    assert_eq!(perm, vec![0, 1]);
    let c = cloud(&ConvexBody::interval(-1.0, 1.0).unwrap(), 2);
    let x: Vec<Vec<f64>> = [-2.0, -0.3, 0.1, 0.7, 5.0].iter().map(|&v| vec![v]).collect();
    let (_, perm) = e_trop(&x, &c).unwrap();
    assert_eq!(perm, vec![0, 1, 2, 3, 4]);
    assert!(e_trop(&x[..3], &c).is_err());
}

#[test]
fn e_trop_is_homogeneous_and_shift_covariant() {
    let mut rng = substream(21, 0);
    let body = ConvexBody::from_json(r#"{"n":2,"vertices":[[-1,-1],[2,-1],[-1,2]]}"#).unwrap();
    let c = cloud(&body, 2);
    let mean = c.mean();
    for _ in 0..20 {
        let x: Vec<Vec<f64>> = (0..c.len()).map(|_| vec![rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0)]).collect();
        let (e, perm) = e_trop(&x, &c).unwrap();
        for lambda in [0.5, 2.0, 7.0] {
            let scaled: Vec<Vec<f64>> = x.iter().map(|p| p.iter().map(|v| v * lambda).collect()).collect();
            let (es, ps) = e_trop(&scaled, &c).unwrap();
            assert!((es - lambda * e).abs() < 1e-12 * (1.0 + es.abs()));
            assert_eq!(ps, perm);
        }
        let shift = rng.random_range(-2.0..2.0);
        let moved: Vec<Vec<f64>> = x.iter().map(|p| p.iter().map(|v| v + shift).collect()).collect();
        let (em, _) = e_trop(&moved, &c).unwrap();
        let want = e + shift * (mean[0] + mean[1]);
        assert!((em - want).abs() < 1e-12 * (1.0 + want.abs()));
    }
}

#[test]
fn e_trop_is_the_scaling_limit_of_the_determinant() {
    let c_scale = 40.0;
    let mut rng = substream(22, 0);
    let simplex = ConvexBody::interval(0.0, 1.0).unwrap();
    for k in 1..=5 {
        let cl = cloud(&simplex, k);
        let n_pts = cl.len();
        let basis = MultiIndexBasis::new(1, k).unwrap();
        for _ in 0..5 {
            // distinct points at least 0.15 apart, in random order
            let mut x: Vec<f64> = (0..n_pts).map(|i| 0.5 + 0.25 * i as f64 + rng.random_range(0.0..0.1)).collect();
            x.shuffle(&mut rng);
            let z: Vec<f64> = x.iter().map(|v| (c_scale * v / 2.0).exp()).collect();
            let config = Configuration::from_real(&z).unwrap();
            let scaled = log_abs_det2(&basis, &config).unwrap() / (c_scale * (n_pts * k) as f64);
            let xs: Vec<Vec<f64>> = x.iter().map(|&v| vec![v]).collect();
            let (e, _) = e_trop(&xs, &cl).unwrap();
            assert!((scaled - e).abs() < 0.02 * e.abs(), "k {k}: {scaled} vs {e}");
        }
    }
}

fn check_solution(sol: &RealMaSolution, a: f64, b: f64) {
    assert!(sol.du[0] - a < 1e-6 && sol.du[0] >= a - 1e-12);
    let last = sol.du[sol.du.len() - 1];
    assert!(b - last < 1e-6 && last <= b + 1e-12);
    assert!(sol.second_derivative().iter().all(|&d| d >= -1e-10));
    assert!(sol.du.windows(2).all(|w| w[1] >= w[0] - 1e-12));
}

#[test]
fn real_ma_solutions_are_convex() {
    let grid = ma_grid(60.0, 6000);
    for (a, b, beta) in [(-1.0, 1.0, 0.0), (-1.0, 2.0, 0.0), (-1.0, 1.0, 2.0), (-1.0, 2.0, -0.5), (-0.5, 1.5, 1.0)] {
        let sol = solve_real_ma_1d(a, b, beta, 0.0, &grid).unwrap();
        check_solution(&sol, a, b);
    }
}

#[test]
fn beta_zero_closed_form() {
    let grid = ma_grid(30.0, 3000);
    let sol = solve_real_ma_1d(-1.0, 1.0, 0.0, 0.0, &grid).unwrap();
    assert!((sol.constant - 1.0).abs() < 1e-12);
    for (x, du) in sol.x.iter().zip(&sol.du) {
        assert!((du - x.signum() * (1.0 - (-x.abs()).exp())).abs() < 1e-12);
    }
}

#[test]
fn beta_five_is_even() {
    let grid = ma_grid(30.0, 3000);
    let sol = solve_real_ma_1d(-1.0, 1.0, 5.0, 0.0, &grid).unwrap();
    check_solution(&sol, -1.0, 1.0);
    assert!(sol.residual < 1e-8);
    let m = sol.u.len();
    for i in 0..m {
        assert!((sol.u[i] - sol.u[m - 1 - i]).abs() < 1e-8);
        assert!((sol.du[i] + sol.du[m - 1 - i]).abs() < 1e-8);
    }
}

#[test]
fn real_ma_rejects_bad_input() {
    let grid = ma_grid(30.0, 300);
    assert!(solve_real_ma_1d(0.5, 1.0, 0.0, 0.0, &grid).is_err());
    assert!(solve_real_ma_1d(-1.0, 2.0, -0.7, 0.0, &grid).is_err());
    assert!(solve_real_ma_1d(-1.0, 1.0, 0.0, 0.0, &ma_grid(5.0, 300)).is_err());
}

#[test]
fn real_ma_csv_header() {
    let sol = solve_real_ma_1d(-1.0, 1.0, 0.0, 0.0, &ma_grid(30.0, 10)).unwrap();
    assert!(sol.to_csv().starts_with("x,u,u'\n"));
    assert_eq!(sol.to_csv().lines().count(), 12);
}

#[test]
fn beta_zero_gibbs_matches_product_law() {
    let body = ConvexBody::cube(1);
    let set = tropical_gibbs(&body, 4, 0.0, 20_000, 4, 23).unwrap();
    let atoms: Vec<f64> = set.pooled_points().iter().map(|p| p[0].re).collect();
    let mut rng = substream(24, 0);
    // inverse-cdf draws from e^{-|x|}/2
    let reference: Vec<f64> = (0..200_000)
        .map(|_| {
            let u: f64 = rng.random();
            if u < 0.5 {
                (2.0 * u).ln()
            } else {
                -(2.0 * (1.0 - u)).ln()
            }
        })
        .collect();
    let refm = EmpiricalMeasure::line(reference);
    let w = wasserstein1(&EmpiricalMeasure::line(atoms), Reference::Empirical(&refm)).unwrap();
    assert!(w < 0.05, "W1 {w}");
}

#[test]
fn gibbs_refuses_below_threshold() {
    let body = ConvexBody::interval(-1.0, 2.0).unwrap();
    assert!(tropical_gibbs(&body, 1, -0.7, 100, 1, 0).is_err());
    assert!(tropical_gibbs(&body, 1, -0.6, 100, 1, 0).is_ok());
}

#[test]
fn beta0_cdf_is_consistent() {
    for (a, b) in [(-1.0, 1.0), (-1.0, 2.0)] {
        assert!(beta0_cdf(a, b, -60.0) < 1e-20);
        assert!((beta0_cdf(a, b, 60.0) - 1.0).abs() < 1e-15);
        let h = 1e-5;
        for x in [-2.0, -0.5, 0.3, 1.7] {
            let fd = (beta0_cdf(a, b, x + h) - beta0_cdf(a, b, x - h)) / (2.0 * h);
            assert!((fd - beta0_density(a, b, x)).abs() < 1e-8);
        }
    }
}
