use fekete_gibbs::polybasis::*;
use fekete_gibbs::rng::substream;
use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::Rng;

fn random_config(rng: &mut impl Rng, n: usize, count: usize) -> Configuration {
    let coords = (0..n * count).map(|_| C64::new(rng.random_range(-1.5..1.5), rng.random_range(-1.5..1.5))).collect();
    Configuration::new(n, Mode::Complex, coords).unwrap()
}

fn permuted(config: &Configuration, perm: &[usize]) -> Configuration {
    let coords = perm.iter().flat_map(|&i| config.point(i).to_vec()).collect();
    Configuration::new(config.dimension(), config.mode(), coords).unwrap()
}

#[test]
fn basis_sizes() {
    assert_eq!(basis_size(1, 7).unwrap(), 8);
    assert_eq!(basis_size(2, 1).unwrap(), 3);
    assert_eq!(basis_size(2, 3).unwrap(), 10);
    assert_eq!(basis_size(3, 0).unwrap(), 1);
    assert!(basis_size(0, 3).is_err());
    assert!(basis_size(60, 200).is_err());
}

#[test]
fn exponents_are_distinct_and_graded() {
    for (n, k) in [(1, 5), (2, 4), (3, 3)] {
        let b = MultiIndexBasis::new(n, k).unwrap();
        let e = b.exponents();
        assert_eq!(e.len(), basis_size(n, k).unwrap());
        let deg = |a: &Vec<u32>| a.iter().sum::<u32>();
        assert!(e.iter().all(|a| deg(a) <= k as u32 && a.len() == n));
        assert!(e.windows(2).all(|w| deg(&w[0]) <= deg(&w[1])));
        let mut sorted = e.to_vec();
        sorted.sort();
        sorted.dedup();
        assert_eq!(sorted.len(), e.len());
    }
}

#[test]
fn determinant_examples() {
    let b = MultiIndexBasis::new(1, 2).unwrap();
    let c = Configuration::from_real(&[0.0, 1.0, 2.0]).unwrap();
    assert!((log_abs_det2(&b, &c).unwrap() - 2.0 * 2f64.ln()).abs() < 1e-15);
    let c = Configuration::from_real(&[0.0, 1.0, 1.0]).unwrap();
    assert_eq!(log_abs_det2(&b, &c).unwrap(), f64::NEG_INFINITY);
    let b1 = MultiIndexBasis::new(1, 1).unwrap();
    assert_eq!(log_abs_det2(&b1, &Configuration::from_real(&[0.0, 1.0]).unwrap()).unwrap(), 0.0);
    assert!(log_abs_det2(&b1, &c).is_err());
}

#[test]
fn coincident_points_in_two_variables() {
    let b = MultiIndexBasis::new(2, 1).unwrap();
    let p = [C64::new(0.3, 0.1), C64::new(-0.2, 0.5)];
    let coords = [p[0], p[1], p[0], p[1], C64::new(1.0, 0.0), C64::new(0.0, 1.0)].to_vec();
    let c = Configuration::new(2, Mode::Complex, coords).unwrap();
    assert_eq!(log_abs_det2(&b, &c).unwrap(), f64::NEG_INFINITY);
    assert!(grad_log_abs_det2(&b, &c).is_err());
}

#[test]
fn gradient_examples() {
    let b = MultiIndexBasis::new(1, 1).unwrap();
    let g = grad_log_abs_det2(&b, &Configuration::from_real(&[0.0, 1.0]).unwrap()).unwrap();
    assert_eq!(&g[..2], &[-2.0, 0.0]);
    let g = grad_log_abs_det2(&b, &Configuration::from_real(&[-1.0, 1.0]).unwrap()).unwrap();
    assert_eq!(g, vec![-1.0, 0.0, 1.0, -0.0]);
}

#[test]
fn two_variable_gradient_matches_differences() {
    let mut rng = substream(31, 0);
    let b = MultiIndexBasis::new(2, 1).unwrap();
    for _ in 0..10 {
        let c = random_config(&mut rng, 2, 3);
        let g = grad_log_abs_det2(&b, &c).unwrap();
        let h = 1e-6;
        for i in 0..3 {
            for l in 0..2 {
                for imag in [false, true] {
                    let shift = |s: f64| {
                        let mut coords = c.coords().to_vec();
                        let d = if imag { C64::new(0.0, s) } else { C64::new(s, 0.0) };
                        coords[i * 2 + l] += d;
                        log_abs_det2(&b, &Configuration::new(2, Mode::Complex, coords).unwrap()).unwrap()
                    };
                    let fd = (shift(h) - shift(-h)) / (2.0 * h);
                    let an = g[i * 4 + l + if imag { 2 } else { 0 }];
                    assert!((fd - an).abs() <= 1e-5 * an.abs().max(1.0), "{fd} vs {an}");
                }
            }
        }
    }
}

#[test]
fn pairwise_formula_on_random_configs() {
    let mut rng = substream(32, 0);
    for count in [2, 5, 20, 50] {
        let c = random_config(&mut rng, 1, count);
        let b = MultiIndexBasis::new(1, count - 1).unwrap();
        let mut direct = 0.0;
        for i in 0..count {
            for j in i + 1..count {
                direct += (c.point(i)[0] - c.point(j)[0]).norm_sqr().ln();
            }
        }
        let m = log_abs_det2_matrix(&b, &c).unwrap();
        assert!((m - direct).abs() <= 1e-9 * direct.abs().max(1.0));
    }
}

fn recombined_log_det2(basis: &MultiIndexBasis, config: &Configuration, r: &DMatrix<C64>) -> f64 {
    let n = basis.size();
    let e = DMatrix::from_fn(n, n, |i, j| basis.evaluate(config.point(j))[i]);
    let det = (r * e).determinant();
    det.norm_sqr().ln()
}

#[test]
fn differences_survive_recombination() {
    let mut rng = substream(33, 0);
    for (n, k) in [(1, 4), (2, 2), (3, 1)] {
        let b = MultiIndexBasis::new(n, k).unwrap();
        let size = b.size();
        let r = DMatrix::from_fn(size, size, |i, j| {
            let d = if i == j { 2.0 } else { 0.0 };
            C64::new(d + rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5))
        });
        for _ in 0..5 {
            let x = random_config(&mut rng, n, size);
            let y = random_config(&mut rng, n, size);
            let ours = log_abs_det2(&b, &x).unwrap() - log_abs_det2(&b, &y).unwrap();
            let theirs = recombined_log_det2(&b, &x, &r) - recombined_log_det2(&b, &y, &r);
            assert!((ours - theirs).abs() < 1e-8, "{ours} vs {theirs}");
        }
    }
}

#[test]
fn config_validation() {
    assert!(Configuration::new(2, Mode::Complex, vec![C64::new(0.0, 0.0); 3]).is_err());
    assert!(Configuration::new(1, Mode::Complex, vec![C64::new(f64::NAN, 0.0)]).is_err());
    assert!(Configuration::new(1, Mode::RealLine, vec![C64::new(0.0, 1.0)]).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn permutation_invariance_is_bitwise(seed in any::<u64>(), which in 0usize..3) {
        let (n, k) = [(1, 6), (2, 2), (2, 3)][which];
        let b = MultiIndexBasis::new(n, k).unwrap();
        let mut rng = substream(seed, 0);
        let c = random_config(&mut rng, n, b.size());
        let mut perm: Vec<usize> = (0..b.size()).collect();
        perm.shuffle(&mut rng);
        let p = permuted(&c, &perm);
        prop_assert_eq!(log_abs_det2(&b, &c).unwrap().to_bits(), log_abs_det2(&b, &p).unwrap().to_bits());
    }
}
