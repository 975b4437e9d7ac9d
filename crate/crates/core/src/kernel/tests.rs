use num_rational::Rational64;

use super::*;
use crate::symbol::{ExprSymbol, FnSymbol, SumSymbol};
use crate::symexpr::Context;

const GAUSS_PIN: f64 = 0.282_094_791_773_878_14;

fn theta_pow(k: i64) -> HomogeneousSymbol {
    let ctx = Context::euclidean(1, 2).unwrap();
    HomogeneousSymbol::infer(ctx.theta_pow(Rational64::from_integer(-k)), 2).unwrap()
}

fn heat_symbol() -> ExprSymbol {
    ExprSymbol::new(theta_pow(1).expr().clone())
}

fn gaussian(y: f64, t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else {
        (-y * y / (4.0 * t)).exp() / (4.0 * std::f64::consts::PI * t).sqrt()
    }
}

#[test]
fn time_power_law() {
    assert_eq!(kernel_time_power(-2, 1, 2), -0.5);
    assert_eq!(kernel_time_power(-4, 1, 2), 0.5);
    assert_eq!(kernel_time_power(-3, 1, 2), 0.0);
}

#[test]
fn gaussian_kernel_slice() {
    let grid = KernelGrid::new(0.3, vec![0.0, 0.7], vec![-1.0, -0.25, 0.5, 1.0, 2.0]).unwrap();
    let k = inverse_fourier_kernel(&heat_symbol(), 2, &grid, 1.0, &Quadrature::default()).unwrap();
    for s in &k.samples {
        let exact = gaussian(s.y, s.t);
        assert!((s.value() - exact).norm() < 1e-6, "{s:?} vs {exact}");
        assert!(s.error < 1e-5, "{s:?}");
    }
    assert!((k.value_at(0.0, 1.0).unwrap().re - GAUSS_PIN).abs() < 1e-6);
    assert!(k.value_at(0.0, -1.0).unwrap().norm() < 1e-6);
    let report = volterra_check(&k, (-1.0, -0.25), 1e-5).unwrap();
    assert!(report.pass, "{report:?}");
}

#[test]
fn contour_invariance() {
    let grid = KernelGrid::new(0.0, vec![0.0], KernelGrid::linspace(0.5, 2.0, 4)).unwrap();
    let q = heat_symbol();
    let slices: Vec<_> = [1.0, 2.0, 4.0]
        .iter()
        .map(|&s| inverse_fourier_kernel(&q, 2, &grid, s, &Quadrature::default()).unwrap())
        .collect();
    for pair in slices.windows(2) {
        for (a, b) in pair[0].samples.iter().zip(&pair[1].samples) {
            assert!((a.value() - b.value()).norm() < 1e-5, "{a:?} {b:?}");
        }
    }
}

#[test]
fn negative_time_decays_with_sigma() {
    // A truncated window keeps the quadrature error visible; the bound
    // tested is the exponential factor itself.
    let grid = KernelGrid::new(0.0, vec![0.0], vec![-2.0, -1.0, -0.5]).unwrap();
    let coarse = Quadrature { nodes: 6, reach: 8.0, tail_terms: 1, ..Quadrature::default() };
    let q = heat_symbol();
    let m = |s: f64| {
        let k = inverse_fourier_kernel(&q, 2, &grid, s, &coarse).unwrap();
        k.samples.iter().map(|s| s.value().norm()).fold(0.0, f64::max)
    };
    let (m1, m2) = (m(1.0), m(2.0));
    assert!(m2 <= m1 * (-0.25f64).exp() || m2 < 1e-12, "{m1} {m2}");
}

#[test]
fn zero_symbol_passes_trivially() {
    let zero = FnSymbol::new(1, |_: &EvalPoint| Ok(Complex64::new(0.0, 0.0)));
    let grid = KernelGrid::new(0.0, vec![0.0], vec![-1.0, 1.0]).unwrap();
    let k = inverse_fourier_kernel(&zero, 2, &grid, 1.0, &Quadrature::default()).unwrap();
    assert!(volterra_check(&k, (-1.0, -0.5), 1e-5).unwrap().pass);
}

#[test]
fn linearity() {
    let a = ExprSymbol::shared(theta_pow(1).expr().clone());
    let b = ExprSymbol::shared(theta_pow(2).expr().clone());
    let sum = SumSymbol::new(1, vec![a.clone(), b.clone()]);
    let grid = KernelGrid::new(0.0, vec![0.0, 0.5], vec![0.5, 1.0]).unwrap();
    let quad = Quadrature::default();
    let ka = inverse_fourier_kernel(a.as_ref(), 2, &grid, 1.0, &quad).unwrap();
    let kb = inverse_fourier_kernel(b.as_ref(), 2, &grid, 1.0, &quad).unwrap();
    let ks = inverse_fourier_kernel(&sum, 2, &grid, 1.0, &quad).unwrap();
    for ((x, y), z) in ka.samples.iter().zip(&kb.samples).zip(&ks.samples) {
        assert!((x.value() + y.value() - z.value()).norm() < 1e-10);
    }
}

#[test]
fn refinement_stays_within_error_estimate() {
    let grid = KernelGrid::new(0.0, vec![0.0], vec![0.5, 1.0, 2.0]).unwrap();
    let q = heat_symbol();
    let base = inverse_fourier_kernel(&q, 2, &grid, 1.0, &Quadrature::default()).unwrap();
    let fine = Quadrature { nodes: 32, reach: 128.0, growth: 0.125, ..Quadrature::default() };
    let refined = inverse_fourier_kernel(&q, 2, &grid, 1.0, &fine).unwrap();
    for (a, b) in base.samples.iter().zip(&refined.samples) {
        assert!((a.value() - b.value()).norm() <= a.error.max(1e-12), "{a:?} {b:?}");
    }
}

#[test]
fn homogeneous_theta_minus_two() {
    // Θ^{-2} = i ∂_τ Θ^{-1}, so its kernel is t times the Gaussian.
    let q = theta_pow(2);
    let quad = Quadrature::default();
    let v1 = homogeneous_kernel_at(&q, 0.0, 1.0, &quad).unwrap();
    assert!((v1.value() - GAUSS_PIN).norm() < 1e-4, "{v1:?}");
    let v4 = homogeneous_kernel_at(&q, 0.0, 4.0, &quad).unwrap();
    let p = kernel_time_power(-4, 1, 2);
    assert!((v4.re / v1.re - 4f64.powf(p)).abs() < 1e-4 * 4f64.powf(p));
    for t in [0.5, 2.0] {
        let v = homogeneous_kernel_at(&q, 0.0, t, &quad).unwrap();
        assert!((v.re - t.powf(p) * v1.re).abs() < 1e-6);
    }
}

#[test]
fn homogeneous_linearity_exact() {
    let q = theta_pow(2);
    let ctx = Context::euclidean(1, 2).unwrap();
    let q3 = HomogeneousSymbol::new(q.expr().scale(&crate::Coeff::int(3)), -4, 2).unwrap();
    let quad = Quadrature::default();
    let a = homogeneous_kernel_at(&q, 0.0, 1.0, &quad).unwrap();
    let b = homogeneous_kernel_at(&q3, 0.0, 1.0, &quad).unwrap();
    assert!((b.value() - 3.0 * a.value()).norm() < 1e-13);
    let _ = ctx;
}

#[test]
fn degree_guard_and_regularization() {
    let q = theta_pow(1);
    let quad = Quadrature::default();
    assert!(matches!(
        homogeneous_kernel_at(&q, 0.0, 1.0, &quad),
        Err(Error::InsufficientDecay(_))
    ));
    let v = regularized_kernel_at(&q, 0.0, 1.0, &quad).unwrap();
    assert!((v.value() - GAUSS_PIN).norm() < 1e-6, "{v:?}");
}

#[test]
fn argument_errors() {
    let q = heat_symbol();
    let grid = KernelGrid::new(0.0, vec![0.0], vec![1.0]).unwrap();
    assert!(matches!(
        inverse_fourier_kernel(&q, 2, &grid, -1.0, &Quadrature::default()),
        Err(Error::Domain(_))
    ));
    assert!(KernelGrid::new(0.0, vec![0.0], vec![0.0]).is_err());
    let tight = Quadrature { nodes: 4, reach: 4.0, tol: Some(1e-14), ..Quadrature::default() };
    assert!(matches!(
        inverse_fourier_kernel(&q, 2, &grid, 1.0, &tight),
        Err(Error::Resolution(_))
    ));
    let constant = FnSymbol::new(1, |_: &EvalPoint| Ok(Complex64::new(1.0, 0.0)));
    assert!(matches!(
        inverse_fourier_kernel(&constant, 2, &grid, 1.0, &Quadrature::default()),
        Err(Error::InsufficientDecay(_))
    ));
    let k = inverse_fourier_kernel(&q, 2, &grid, 1.0, &Quadrature::default()).unwrap();
    assert!(volterra_check(&k, (-2.0, -1.0), 1e-5).is_err());
    assert!(k.to_csv().starts_with("y,t,re,im,sigma,error\n"));
    let back: KernelSlice = serde_json::from_str(&k.to_json()).unwrap();
    assert_eq!(back, k);
}
