//! Anisotropic pseudo-norm, homogeneous Volterra symbols, the special
//! symbols `ρ` and `a_ε`, and grid certification of symbol estimates.

mod checks;
mod expansion;
mod grid;
mod report;

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use num_rational::Rational64;

use crate::coeff::Coeff;
use crate::error::{Error, Result};
use crate::symexpr::{infer_degree, CompiledExpr, Context, DerivIndex, EvalPoint, SymExpr, Var};

pub(crate) use checks::random_covariable;
pub(crate) use grid::random_direction;
pub use checks::{
    check_analyticity, check_expansion_estimates, check_homogeneity, check_pseudo_norm_sandwich,
    check_rho_bounds, rho_constant, AnalyticityGrid, EstimateMode,
};
pub use expansion::{EntryFile, ExpansionEntry, ExpansionFile, ExpansionMode, SymbolExpansion};
pub use grid::{GridPolicy, SpherePoint};
pub use report::{trend_growth, EstimateReport, ReportRow};

/// `‖ξ, τ‖ = (|ξ|^w + |τ|)^{1/w}`.
pub fn pseudo_norm(xi: &[f64], tau: Complex64, w: u32) -> Result<f64> {
    if tau.im > 0.0 {
        return Err(Error::Domain(format!("Im tau = {} > 0", tau.im)));
    }
    Ok(pseudo_norm_raw(xi, tau, w))
}

pub(crate) fn pseudo_norm_raw(xi: &[f64], tau: Complex64, w: u32) -> f64 {
    let r2: f64 = xi.iter().map(|v| v * v).sum();
    (r2.powi(w as i32 / 2) + tau.norm()).powf(1.0 / w as f64)
}

/// `ρ(ξ, τ) = (|ξ|^w + iτ)^{-1/w}` on the principal branch.
pub fn rho(xi: &[f64], tau: Complex64, w: u32) -> Result<Complex64> {
    if tau.im > 0.0 {
        return Err(Error::Domain(format!("Im tau = {} > 0", tau.im)));
    }
    let r2: f64 = xi.iter().map(|v| v * v).sum();
    let base = Complex64::new(r2.powi(w as i32 / 2) - tau.im, tau.re);
    if base.norm_sqr() == 0.0 {
        return Err(Error::Pole);
    }
    Ok(base.powf(-1.0 / w as f64))
}

/// `a_ε(ξ, τ) = exp(−ε ρ(ξ, τ))`, extended by `0` at the origin.
pub fn a_epsilon(eps: f64, xi: &[f64], tau: Complex64, w: u32) -> Complex64 {
    match rho(xi, tau, w) {
        Ok(r) => (-eps * r).exp(),
        Err(_) => Complex64::new(0.0, 0.0),
    }
}

/// `ρ` as an element of the expression algebra: `Θ_{|ξ|^w}^{-1/w}`.
pub fn rho_expr(n: usize, w: u32) -> SymExpr {
    let ctx = Context::euclidean(n, w).expect("valid euclidean context");
    ctx.theta_pow(Rational64::new(-1, w as i64))
}

/// Anything that can be evaluated on `ℝ^n × ℝ^n × C̄₋` and differentiated.
pub trait Symbol: Send + Sync + fmt::Debug {
    fn dim(&self) -> usize;

    fn eval(&self, pt: &EvalPoint) -> Result<Complex64>;

    /// `∂_x^α ∂_ξ^β ∂_τ^k` of this symbol.
    fn derivative(&self, d: &DerivIndex) -> Result<SymbolRef>;

    /// The exact expression, when the symbol lives in the algebra.
    fn as_expr(&self) -> Option<&SymExpr> {
        None
    }

    /// Whether the symbol extends holomorphically to `Im τ < 0`, so that
    /// evaluation off the real `τ` axis is meaningful.
    fn tau_analytic(&self) -> bool {
        true
    }
}

pub type SymbolRef = Arc<dyn Symbol>;

/// A [`SymExpr`] with its compiled evaluator.
#[derive(Clone)]
pub struct ExprSymbol {
    expr: SymExpr,
    compiled: CompiledExpr,
}

impl ExprSymbol {
    pub fn new(expr: SymExpr) -> Self {
        let compiled = expr.compile();
        ExprSymbol { expr, compiled }
    }

    pub fn shared(expr: SymExpr) -> SymbolRef {
        Arc::new(ExprSymbol::new(expr))
    }

    pub fn expr(&self) -> &SymExpr {
        &self.expr
    }
}

impl fmt::Debug for ExprSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ExprSymbol({})", self.expr)
    }
}

impl Symbol for ExprSymbol {
    fn dim(&self) -> usize {
        self.expr.dim()
    }

    fn eval(&self, pt: &EvalPoint) -> Result<Complex64> {
        self.compiled.eval(pt)
    }

    fn derivative(&self, d: &DerivIndex) -> Result<SymbolRef> {
        Ok(ExprSymbol::shared(self.expr.derivative(d)))
    }

    fn as_expr(&self) -> Option<&SymExpr> {
        Some(&self.expr)
    }
}

/// `a_ε · f` for an expression `f`; closed under differentiation since
/// `∂(a_ε f) = a_ε (∂f − ε (∂ρ) f)`.
#[derive(Clone)]
pub struct AepsSymbol {
    eps: f64,
    w: u32,
    rho: SymExpr,
    factor: ExprSymbol,
}

impl AepsSymbol {
    pub fn new(eps: f64, w: u32, factor: SymExpr) -> Self {
        let rho = rho_expr(factor.dim(), w);
        AepsSymbol {
            eps,
            w,
            rho,
            factor: ExprSymbol::new(factor),
        }
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn factor(&self) -> &SymExpr {
        self.factor.expr()
    }

    fn differentiate(&self, v: Var) -> AepsSymbol {
        let f = self.factor.expr();
        let eps = Coeff::from_f64(self.eps).expect("finite epsilon");
        let df = f.differentiate(v);
        let drho = self.rho.differentiate(v);
        let next = df.sub(&drho.mul(f).scale(&eps));
        AepsSymbol {
            eps: self.eps,
            w: self.w,
            rho: self.rho.clone(),
            factor: ExprSymbol::new(next),
        }
    }
}

impl fmt::Debug for AepsSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "a_{}·({})", self.eps, self.factor.expr())
    }
}

impl Symbol for AepsSymbol {
    fn dim(&self) -> usize {
        self.factor.dim()
    }

    fn eval(&self, pt: &EvalPoint) -> Result<Complex64> {
        let Ok(r) = rho(&pt.xi, pt.tau, self.w) else {
            return Ok(Complex64::new(0.0, 0.0));
        };
        let weight = (-self.eps * r).exp();
        if weight.norm() == 0.0 {
            return Ok(weight);
        }
        Ok(weight * self.factor.eval(pt)?)
    }

    fn derivative(&self, d: &DerivIndex) -> Result<SymbolRef> {
        let mut cur = self.clone();
        for (i, &a) in d.alpha.iter().enumerate() {
            for _ in 0..a {
                cur = cur.differentiate(Var::X(i));
            }
        }
        for (i, &b) in d.beta.iter().enumerate() {
            for _ in 0..b {
                cur = cur.differentiate(Var::Xi(i));
            }
        }
        for _ in 0..d.k {
            cur = cur.differentiate(Var::Tau);
        }
        Ok(Arc::new(cur))
    }
}

/// Finite sum of symbols.
#[derive(Clone, Debug)]
pub struct SumSymbol {
    n: usize,
    parts: Vec<SymbolRef>,
}

impl SumSymbol {
    pub fn new(n: usize, parts: Vec<SymbolRef>) -> Self {
        SumSymbol { n, parts }
    }
}

impl Symbol for SumSymbol {
    fn dim(&self) -> usize {
        self.n
    }

    fn eval(&self, pt: &EvalPoint) -> Result<Complex64> {
        let mut acc = Complex64::new(0.0, 0.0);
        for p in &self.parts {
            acc += p.eval(pt)?;
        }
        Ok(acc)
    }

    fn derivative(&self, d: &DerivIndex) -> Result<SymbolRef> {
        let parts = self
            .parts
            .iter()
            .map(|p| p.derivative(d))
            .collect::<Result<Vec<_>>>()?;
        Ok(Arc::new(SumSymbol::new(self.n, parts)))
    }

    fn tau_analytic(&self) -> bool {
        self.parts.iter().all(|p| p.tau_analytic())
    }
}

/// Closure-backed symbol without derivatives, for synthetic test inputs.
pub struct FnSymbol<F> {
    n: usize,
    f: F,
}

impl<F> FnSymbol<F>
where
    F: Fn(&EvalPoint) -> Result<Complex64> + Send + Sync,
{
    pub fn new(n: usize, f: F) -> Self {
        FnSymbol { n, f }
    }
}

impl<F> fmt::Debug for FnSymbol<F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("FnSymbol")
    }
}

impl<F> Symbol for FnSymbol<F>
where
    F: Fn(&EvalPoint) -> Result<Complex64> + Send + Sync,
{
    fn dim(&self) -> usize {
        self.n
    }

    fn eval(&self, pt: &EvalPoint) -> Result<Complex64> {
        (self.f)(pt)
    }

    fn derivative(&self, _d: &DerivIndex) -> Result<SymbolRef> {
        Err(Error::invalid("closure symbols carry no derivatives"))
    }
}

/// `q_m`: an expression homogeneous of integer degree `m` under
/// `(ξ, τ) ↦ (λξ, λ^w τ)`.
#[derive(Clone, Debug, PartialEq)]
pub struct HomogeneousSymbol {
    expr: SymExpr,
    degree: i64,
    w: u32,
}

impl HomogeneousSymbol {
    pub fn new(expr: SymExpr, degree: i64, w: u32) -> Result<Self> {
        match infer_degree(&expr, w)? {
            Some(d) if d != degree => Err(Error::NotHomogeneous(format!(
                "expected degree {degree}, found {d}"
            ))),
            _ => Ok(HomogeneousSymbol { expr, degree, w }),
        }
    }

    /// Infer the degree; the zero expression is rejected because its
    /// degree is undetermined.
    pub fn infer(expr: SymExpr, w: u32) -> Result<Self> {
        let degree = infer_degree(&expr, w)?
            .ok_or_else(|| Error::NotHomogeneous("zero has no definite degree".into()))?;
        Ok(HomogeneousSymbol { expr, degree, w })
    }

    pub fn expr(&self) -> &SymExpr {
        &self.expr
    }

    pub fn degree(&self) -> i64 {
        self.degree
    }

    pub fn w(&self) -> u32 {
        self.w
    }

    pub fn dim(&self) -> usize {
        self.expr.dim()
    }
}

#[cfg(test)]
mod tests;
