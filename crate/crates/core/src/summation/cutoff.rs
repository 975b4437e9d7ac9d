use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::jet::{Jet, JetLayout};
use crate::symbol::{Symbol, SymbolRef};
use crate::symexpr::{CompiledExpr, DerivIndex, EvalPoint, SymExpr};

type TaylorFn = dyn Fn(f64, u32) -> Vec<f64> + Send + Sync;

/// Smooth `φ: [0, ∞) → [0, 1]` with `φ = 1` on `[0, 1/2]` and `φ = 0` on
/// `[1, ∞)`, evaluated through its Taylor coefficients.
#[derive(Clone)]
pub struct CutoffProfile {
    taylor: Arc<TaylorFn>,
}

impl fmt::Debug for CutoffProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("CutoffProfile")
    }
}

impl Default for CutoffProfile {
    fn default() -> Self {
        CutoffProfile::standard()
    }
}

impl CutoffProfile {
    /// `φ(u) = ψ(1−u) / (ψ(1−u) + ψ(u−1/2))` with `ψ(s) = e^{−1/s}` for
    /// `s > 0` and `0` otherwise.
    pub fn standard() -> Self {
        CutoffProfile {
            taylor: Arc::new(standard_taylor),
        }
    }

    /// Profile given by `(u, order) ↦ [φ^{(i)}(u)/i!]_{i ≤ order}`. The
    /// support contract is checked on a sample of points.
    pub fn from_taylor<F>(f: F) -> Result<Self>
    where
        F: Fn(f64, u32) -> Vec<f64> + Send + Sync + 'static,
    {
        for i in 0..=40 {
            let u = i as f64 / 20.0;
            let v = f(u, 0)[0];
            let want = if u <= 0.5 {
                Some(1.0)
            } else if u >= 1.0 {
                Some(0.0)
            } else {
                None
            };
            if let Some(t) = want {
                if (v - t).abs() > 1e-14 {
                    return Err(Error::invalid(format!("profile is {v} at u = {u}")));
                }
            } else if !(0.0..=1.0).contains(&v) {
                return Err(Error::invalid(format!("profile leaves [0, 1] at u = {u}")));
            }
        }
        Ok(CutoffProfile { taylor: Arc::new(f) })
    }

    pub fn value(&self, u: f64) -> f64 {
        (self.taylor)(u, 0)[0]
    }

    pub fn taylor(&self, u: f64, order: u32) -> Vec<f64> {
        (self.taylor)(u, order)
    }
}

fn psi_jet(s: &Jet) -> Jet {
    if s.value() <= 0.0 {
        Jet::constant_like(s, 0.0)
    } else {
        s.recip().scale(-1.0).exp()
    }
}

fn standard_taylor(u: f64, order: u32) -> Vec<f64> {
    if u <= 0.5 || u >= 1.0 {
        let mut v = vec![0.0; order as usize + 1];
        v[0] = if u <= 0.5 { 1.0 } else { 0.0 };
        return v;
    }
    let layout = JetLayout::new(1, order);
    let x = Jet::variable(&layout, 0, u);
    let a = psi_jet(&x.scale(-1.0).add_const(1.0));
    let b = psi_jet(&x.add_const(-0.5));
    let phi = a.mul(&a.add(&b).recip());
    (0..=order).map(|i| phi.coeff(&[i])).collect()
}

/// `∂_x^α ∂_{ξ,τ}^γ [c_ε q]` with `c_ε = 1 − φ(N(ξ,τ)/ε)` and the smooth
/// pseudo-norm `N = (|ξ|^{2w} + |τ|²)^{1/(2w)}`. Off the real axis `|τ|²`
/// makes this a non-analytic extension, kept only for diagnostics.
#[derive(Clone)]
pub struct CutoffTerm {
    eps: f64,
    w: u32,
    profile: CutoffProfile,
    factor: SymExpr,
    alpha: Vec<u32>,
    gamma: Vec<u32>,
    layout: Arc<JetLayout>,
    parts: Vec<(Vec<u32>, f64, CompiledExpr)>,
}

impl fmt::Debug for CutoffTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "c_{}·({}) d{:?}{:?}", self.eps, self.factor, self.alpha, self.gamma)
    }
}

impl CutoffTerm {
    pub fn new(eps: f64, w: u32, profile: CutoffProfile, factor: SymExpr) -> Self {
        let n = factor.dim();
        Self::with_derivative(eps, w, profile, factor, vec![0; n], vec![0; n + 1])
    }

    fn with_derivative(
        eps: f64,
        w: u32,
        profile: CutoffProfile,
        factor: SymExpr,
        alpha: Vec<u32>,
        gamma: Vec<u32>,
    ) -> Self {
        let n = factor.dim();
        let order: u32 = gamma.iter().sum();
        let layout = JetLayout::new(n + 1, order);
        let mut parts = Vec::new();
        for g1 in layout.indices() {
            if g1.iter().zip(&gamma).any(|(a, b)| a > b) {
                continue;
            }
            let coef: f64 = g1.iter().zip(&gamma).map(|(&a, &b)| binom(b, a)).product();
            let d = DerivIndex {
                alpha: alpha.clone(),
                beta: (0..n).map(|i| gamma[i] - g1[i]).collect(),
                k: gamma[n] - g1[n],
            };
            parts.push((g1.clone(), coef, factor.derivative(&d).compile()));
        }
        CutoffTerm {
            eps,
            w,
            profile,
            factor,
            alpha,
            gamma,
            layout,
            parts,
        }
    }

    /// Jet of `c_ε` at `(ξ, τ)`; `Err(c)` where `c_ε` is locally the constant `c`.
    fn cutoff_jet(&self, xi: &[f64], tau: Complex64) -> std::result::Result<Jet, f64> {
        let n = xi.len();
        let w = self.w as i32;
        let r2: f64 = xi.iter().map(|v| v * v).sum();
        let s0 = r2.powi(w) + tau.norm_sqr();
        let u0 = s0.powf(1.0 / (2.0 * w as f64)) / self.eps;
        if u0 <= 0.5 {
            return Err(0.0);
        }
        if u0 >= 1.0 {
            return Err(1.0);
        }
        let l = &self.layout;
        let mut r2j = Jet::constant(l, 0.0);
        for (i, &v) in xi.iter().enumerate() {
            let x = Jet::variable(l, i, v);
            r2j = r2j.add(&x.mul(&x));
        }
        let mut pw = Jet::constant(l, 1.0);
        for _ in 0..w {
            pw = pw.mul(&r2j);
        }
        let t = Jet::variable(l, n, tau.re);
        let s = pw.add(&t.mul(&t)).add_const(tau.im * tau.im);
        let u = s.powf(1.0 / (2.0 * w as f64)).scale(1.0 / self.eps);
        let phi = u.compose(&self.profile.taylor(u.value(), l.order()));
        Ok(phi.scale(-1.0).add_const(1.0))
    }
}

fn binom(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

impl Symbol for CutoffTerm {
    fn dim(&self) -> usize {
        self.factor.dim()
    }

    fn tau_analytic(&self) -> bool {
        false
    }

    fn eval(&self, pt: &EvalPoint) -> Result<Complex64> {
        let mut acc = Complex64::new(0.0, 0.0);
        match self.cutoff_jet(&pt.xi, pt.tau) {
            Err(c) => {
                if c == 0.0 {
                    return Ok(acc);
                }
                for (g1, coef, f) in &self.parts {
                    if g1.iter().all(|&a| a == 0) {
                        acc += f.eval(pt)? * (coef * c);
                    }
                }
            }
            Ok(jet) => {
                for (g1, coef, f) in &self.parts {
                    let dc = jet.derivative(g1);
                    if dc != 0.0 {
                        acc += f.eval(pt)? * (coef * dc);
                    }
                }
            }
        }
        Ok(acc)
    }

    fn derivative(&self, d: &DerivIndex) -> Result<SymbolRef> {
        let n = self.factor.dim();
        let alpha = self.alpha.iter().zip(&d.alpha).map(|(a, b)| a + b).collect();
        let mut gamma = self.gamma.clone();
        for i in 0..n {
            gamma[i] += d.beta[i];
        }
        gamma[n] += d.k;
        Ok(Arc::new(CutoffTerm::with_derivative(
            self.eps,
            self.w,
            self.profile.clone(),
            self.factor.clone(),
            alpha,
            gamma,
        )))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symexpr::Context;

    #[test]
    fn standard_profile_support_and_smoothness() {
        let p = CutoffProfile::standard();
        assert_eq!(p.value(0.0), 1.0);
        assert_eq!(p.value(0.5), 1.0);
        assert_eq!(p.value(1.0), 0.0);
        assert_eq!(p.value(3.0), 0.0);
        let mid = p.value(0.75);
        assert!((mid - 0.5).abs() < 1e-15);
        // Derivative against a difference quotient.
        let h = 1e-6;
        for u in [0.55, 0.7, 0.9] {
            let fd = (p.value(u + h) - p.value(u - h)) / (2.0 * h);
            assert!((fd - p.taylor(u, 1)[1]).abs() < 1e-6);
        }
        assert!(CutoffProfile::from_taylor(|u, _| vec![1.0 - u]).is_err());
    }

    #[test]
    fn cutoff_term_derivatives_match_differences() {
        let ctx = Context::euclidean(1, 2).unwrap();
        let f = ctx.parse("x1*THETA^(-1)").unwrap();
        let t = CutoffTerm::new(2.0, 2, CutoffProfile::standard(), f);
        let h = 1e-5;
        let (x, xi, tau) = (0.3, 0.9, 1.4);
        let at = |sym: &dyn Symbol, x: f64, xi: f64, tau: f64| {
            sym.eval(&EvalPoint::d1(x, xi, Complex64::new(tau, 0.0)).unwrap()).unwrap()
        };
        let dxi = t
            .derivative(&DerivIndex { alpha: vec![0], beta: vec![1], k: 0 })
            .unwrap();
        let fd = (at(&t, x, xi + h, tau) - at(&t, x, xi - h, tau)) / (2.0 * h);
        assert!((fd - at(dxi.as_ref(), x, xi, tau)).norm() < 1e-6);
        let dtx = t
            .derivative(&DerivIndex { alpha: vec![1], beta: vec![0], k: 1 })
            .unwrap();
        let g = |x: f64, tau: f64| (at(&t, x + h, xi, tau) - at(&t, x - h, xi, tau)) / (2.0 * h);
        let fd2 = (g(x, tau + h) - g(x, tau - h)) / (2.0 * h);
        assert!((fd2 - at(dtx.as_ref(), x, xi, tau)).norm() < 1e-4, "{fd2}");
    }
}
