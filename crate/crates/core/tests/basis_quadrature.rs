use fcm_cfl::basis::{NodalBasis1D, TensorBasis};
use fcm_cfl::geometry::{Aabb, Ball, CornerCutDomain};
use fcm_cfl::quadrature::{cut_cell_rule, gauss_legendre_1d, gll_rule_1d, tensorize, CutClass};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn kronecker_property_up_to_degree_ten() {
    for p in 1..=10 {
        let b = NodalBasis1D::new(p).unwrap();
        for (j, &x) in b.nodes().iter().enumerate() {
            let (v, _) = b.lagrange_all(x);
            for (i, vi) in v.iter().enumerate() {
                let expected = if i == j { 1.0 } else { 0.0 };
                assert!((vi - expected).abs() < 1e-12, "p {p} i {i} j {j}");
            }
        }
    }
}

#[test]
fn partition_of_unity_and_derivative_sums() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for p in 1..=10 {
        let b = NodalBasis1D::new(p).unwrap();
        for _ in 0..100 {
            let x = rng.gen_range(-1.0..=1.0);
            let (v, dv) = b.lagrange_all(x);
            assert!((v.iter().sum::<f64>() - 1.0).abs() < 1e-11);
            assert!(dv.iter().sum::<f64>().abs() < 1e-11);
        }
    }
}

#[test]
fn tensor_gradients_match_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let step = 1e-6;
    for d in 1..=3 {
        for p in [1, 2, 4, 7] {
            let tb = TensorBasis::new(p, d).unwrap();
            for _ in 0..20 {
                let x: Vec<f64> = (0..d).map(|_| rng.gen_range(-0.95..0.95)).collect();
                let (_, g) = tb.eval(&x);
                for k in 0..d {
                    let mut xp = x.clone();
                    let mut xm = x.clone();
                    xp[k] += step;
                    xm[k] -= step;
                    let (vp, _) = tb.eval(&xp);
                    let (vm, _) = tb.eval(&xm);
                    for i in 0..tb.len() {
                        let fd = (vp[i] - vm[i]) / (2.0 * step);
                        let exact = g[i * d + k];
                        let scale = exact.abs().max(1.0);
                        assert!(
                            (fd - exact).abs() <= 1e-6 * scale,
                            "d {d} p {p} i {i} k {k}: {fd} vs {exact}"
                        );
                    }
                }
            }
        }
    }
}

#[test]
fn tensor_partition_of_unity() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for d in 1..=3 {
        for p in 1..=6 {
            let tb = TensorBasis::new(p, d).unwrap();
            let x: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..=1.0)).collect();
            let (v, g) = tb.eval(&x);
            assert!((v.iter().sum::<f64>() - 1.0).abs() < 1e-11);
            for k in 0..d {
                let s: f64 = (0..tb.len()).map(|i| g[i * d + k]).sum();
                assert!(s.abs() < 1e-10);
            }
        }
    }
}

/// `int_{-1}^{1} x^m dx`
fn monomial_integral(m: usize) -> f64 {
    if m % 2 == 1 {
        0.0
    } else {
        2.0 / (m as f64 + 1.0)
    }
}

#[test]
fn gauss_legendre_is_exact_to_degree_2n_minus_1() {
    for n in 1..=12 {
        let rule = gauss_legendre_1d(n).unwrap();
        assert_eq!(rule.exactness(), 2 * n - 1);
        for m in 0..=2 * n - 1 {
            let q = rule.integrate(|x| x[0].powi(m as i32));
            assert!((q - monomial_integral(m)).abs() < 1e-13, "n {n} m {m}");
        }
        if n <= 6 {
            let m = 2 * n;
            let q = rule.integrate(|x| x[0].powi(m as i32));
            assert!(
                (q - monomial_integral(m)).abs() > 1e-6,
                "n {n} should miss degree {m}"
            );
        }
    }
}

#[test]
fn gll_is_exact_to_degree_2p_minus_1() {
    for p in 1..=10 {
        let rule = gll_rule_1d(p).unwrap();
        for m in 0..=2 * p - 1 {
            let q = rule.integrate(|x| x[0].powi(m as i32));
            assert!((q - monomial_integral(m)).abs() < 1e-13, "p {p} m {m}");
        }
    }
}

#[test]
fn tensor_rules_integrate_products() {
    for d in 1..=3 {
        let rule = tensorize(&gauss_legendre_1d(4).unwrap(), d).unwrap();
        let exps = [7usize, 2, 6];
        let q = rule.integrate(|x| (0..d).map(|k| x[k].powi(exps[k] as i32)).product());
        let exact: f64 = (0..d).map(|k| monomial_integral(exps[k])).product();
        assert!((q - exact).abs() < 1e-13);
    }
}

#[test]
fn corner_cut_measure_converges_with_depth() {
    for d in 1..=3 {
        for chi in [0.3, 0.61, 0.123, 0.9] {
            let domain = CornerCutDomain::new(chi, d).unwrap();
            let element = Aabb::unit(d).unwrap();
            let exact = f64::powi(chi, d as i32);
            let mut errors = Vec::new();
            for k in 0..=8 {
                let rule = cut_cell_rule(&element, &domain, 0.0, k, 2).unwrap();
                let measure = rule.integrate(|_| 1.0) / f64::powi(2.0, d as i32);
                let err = (measure - exact).abs();
                assert!(
                    err <= d as f64 * 0.5f64.powi(k as i32),
                    "d {d} chi {chi} k {k}: {err}"
                );
                errors.push(err);
            }
            assert!(
                errors[8] < 0.05 * errors[0].max(1e-3),
                "d {d} chi {chi}: {errors:?}"
            );
        }
    }
}

#[test]
fn interior_elements_ignore_depth() {
    let ball = Ball::new(&[0.0, 0.0], 10.0).unwrap();
    let element = Aabb::new(&[1.0, 2.0], &[1.5, 2.5]).unwrap();
    let poly = |x: &[f64]| 1.0 + x[0].powi(3) - 2.0 * x[0] * x[1].powi(2);
    let base = cut_cell_rule(&element, &ball, 1e-3, 0, 3).unwrap();
    for k in 1..=6 {
        let rule = cut_cell_rule(&element, &ball, 1e-3, k, 3).unwrap();
        assert_eq!(rule.leaves().len(), 1);
        assert_eq!(rule.classification(), CutClass::Inside);
        assert_eq!(rule.integrate(poly), base.integrate(poly));
    }
}

#[test]
fn weights_positive_and_scales_binary() {
    let alpha = 1e-6;
    for d in 1..=3 {
        let domain = Ball::new(&vec![0.3; d], 0.45).unwrap();
        let element = Aabb::unit(d).unwrap();
        for k in 0..=4 {
            let rule = cut_cell_rule(&element, &domain, alpha, k, 3).unwrap();
            for leaf in rule.leaves() {
                assert!(leaf.weights.iter().all(|&w| w > 0.0));
                assert!(leaf.scales.iter().all(|&s| s == 1.0 || s == alpha));
            }
        }
    }
}
