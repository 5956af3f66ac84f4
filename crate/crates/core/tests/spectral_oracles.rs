use std::f64::consts::PI;

use num_complex::Complex64;
use proptest::prelude::*;

use snsk::spectral::{Field, Grid};

fn real_modes(m: usize, coeffs: &[(f64, f64)]) -> Vec<Complex64> {
    // coeffs[k-1] = (re, im) for k = 1..=m; the mean is coeffs-independent
    let mut modes = vec![Complex64::new(0.0, 0.0); 2 * m + 1];
    modes[m] = Complex64::new(0.3, 0.0);
    for (i, &(re, im)) in coeffs.iter().enumerate().take(m) {
        let k = i + 1;
        modes[m + k] = Complex64::new(re, im);
        modes[m - k] = Complex64::new(re, -im);
    }
    modes
}

fn convolve(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    let (na, nb) = (a.len() as i64 / 2, b.len() as i64 / 2);
    let n = na + nb;
    let mut out = vec![Complex64::new(0.0, 0.0); (2 * n + 1) as usize];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            let k = (i as i64 - na) + (j as i64 - nb);
            out[(k + n) as usize] += x * y;
        }
    }
    out
}

fn coeff_strategy(m: usize) -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), m)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn dealiased_product_matches_direct_convolution(a in coeff_strategy(10), b in coeff_strategy(10)) {
        let grid = Grid::new(32).unwrap();
        let (ma, mb) = (real_modes(10, &a), real_modes(10, &b));
        let fa = Field::from_modes(&grid, &ma);
        let fb = Field::from_modes(&grid, &mb);
        let prod = fa.dealias_product(&fb).unwrap();
        let exact = convolve(&ma, &mb);
        let got = prod.modes(15);
        // exact has degree 20; every |k| <= 15 must be free of aliasing
        for k in -15i64..=15 {
            let e = exact[(k + 20) as usize];
            let g = got[(k + 15) as usize];
            prop_assert!((e - g).norm() < 1e-12, "k = {k}: {e} vs {g}");
        }
    }

    #[test]
    fn parseval_matches_pointwise_quadrature(a in coeff_strategy(12)) {
        let grid = Grid::new(64).unwrap();
        let f = Field::from_modes(&grid, &real_modes(12, &a));
        let quad: f64 = f.physical().iter().map(|v| v * v).sum::<f64>() / 64.0;
        let l2 = f.norm_l2();
        prop_assert!((quad - l2 * l2).abs() <= 1e-12 * (1.0 + quad));
    }

    #[test]
    fn projection_is_idempotent_and_orthogonal(a in coeff_strategy(12), m in 0usize..12) {
        let grid = Grid::new(64).unwrap();
        let f = Field::from_modes(&grid, &real_modes(12, &a));
        let p = f.project(m);
        let pp = p.project(m);
        let rest = f.axpby(1.0, &p, -1.0).unwrap();
        let inner = p.dealias_product(&rest).unwrap().integrate();
        prop_assert!(pp.axpby(1.0, &p, -1.0).unwrap().norm_linf() < 1e-13);
        prop_assert!(inner.abs() < 1e-12);
    }
}

#[test]
fn integral_of_closed_form_functions() {
    let grid = Grid::new(128).unwrap();
    let s2 = Field::from_fn(&grid, |x| (2.0 * PI * 3.0 * x).sin().powi(2));
    assert!((s2.integrate() - 0.5).abs() < 1e-14);
    // int_0^1 exp(a cos 2 pi x) dx = I_0(a); I_0(1) to 15 digits
    let e = Field::from_fn(&grid, |x| (2.0 * PI * x).cos().exp());
    assert!((e.integrate() - 1.266_065_877_752_008_4).abs() < 1e-14);
}

#[test]
fn derivatives_of_analytic_function() {
    // f = exp(sin 2 pi x), f' = 2 pi cos f, f'' = (2 pi)^2 (cos^2 - sin) f
    let grid = Grid::new(128).unwrap();
    let w = 2.0 * PI;
    let f = Field::from_fn(&grid, |x| (w * x).sin().exp());
    let d1 = f.derivative(1);
    let d2 = f.derivative(2);
    for (j, x) in grid.points().enumerate() {
        let (s, c, e) = ((w * x).sin(), (w * x).cos(), (w * x).sin().exp());
        assert!((d1.physical()[j] - w * c * e).abs() < 1e-10);
        assert!((d2.physical()[j] - w * w * (c * c - s) * e).abs() < 1e-8);
    }
}

#[test]
fn resample_preserves_band_limited_fields() {
    let coarse = Grid::new(32).unwrap();
    let fine = Grid::new(128).unwrap();
    let f = |x: f64| 0.5 + (2.0 * PI * x).cos() - 0.25 * (2.0 * PI * 7.0 * x).sin();
    let up = Field::from_fn(&coarse, f).resample(&fine);
    for (j, x) in fine.points().enumerate() {
        assert!((up.physical()[j] - f(x)).abs() < 1e-13);
    }
}
