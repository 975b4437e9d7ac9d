use num_bigint::BigInt;
use num_rational::BigRational;

use super::Method;
use crate::coeff::Coeff;
use crate::error::{Error, Result};
use crate::symbol::{rho_expr, ExpansionEntry, ExpansionMode, SymbolExpansion};
use crate::symexpr::{SymExpr, Var};

const ORDER_TOL: f64 = 1e-9;

/// Insert zero entries so that consecutive orders satisfy
/// `m_j - step <= m_{j+1}`. Inserted orders are `m_j - step, m_j - 2 step, …`.
pub fn pad_orders(exp: &SymbolExpansion, step: f64) -> Result<SymbolExpansion> {
    if !(step > 0.0) {
        return Err(Error::invalid("padding step must be positive"));
    }
    let n = exp.n();
    let mut out: Vec<ExpansionEntry> = Vec::new();
    for (j, e) in exp.entries().iter().enumerate() {
        out.push(e.clone());
        if let Some(next) = exp.entries().get(j + 1) {
            let mut k = 1.0;
            while e.order - k * step > next.order + ORDER_TOL {
                out.push(ExpansionEntry {
                    order: e.order - k * step,
                    expr: SymExpr::zero(n),
                });
                k += 1.0;
            }
        }
    }
    match exp.mode() {
        ExpansionMode::Graded => SymbolExpansion::graded(exp.ctx().clone(), out),
        ExpansionMode::Polyhomogeneous if out.len() == exp.len() => Ok(exp.clone()),
        ExpansionMode::Polyhomogeneous => SymbolExpansion::graded(exp.ctx().clone(), out),
    }
}

pub(crate) fn is_padded(orders: &[f64], step: f64) -> bool {
    orders.windows(2).all(|p| p[0] - p[1] <= step + ORDER_TOL)
}

/// Slot `(m_{j+1}, m_j]`; the last entry gets `(m_j - step, m_j]`.
fn slot(orders: &[f64], j: usize, step: f64) -> (f64, f64) {
    let lower = orders.get(j + 1).copied().unwrap_or(orders[j] - step);
    (lower, orders[j])
}

fn in_slot(v: f64, (lo, hi): (f64, f64)) -> bool {
    v > lo + ORDER_TOL && v <= hi + ORDER_TOL
}

fn factorial(l: u32) -> BigRational {
    BigRational::from_integer((1..=l).fold(BigInt::from(1), |a, b| a * b))
}

/// Weighted correction `c_l · D^l r` attached to `(j', l)`:
/// `(-ε)^l/l! ρ^l r` for a_ε weights, `(-iT)^l/l! ∂_τ^l r` for translations.
fn correction(method: Method, r: &SymExpr, weight: f64, l: u32, w: u32) -> Result<SymExpr> {
    let wt = Coeff::from_f64(weight).ok_or_else(|| Error::invalid("weight must be finite"))?;
    let inv_fact = factorial(l).recip();
    match method {
        Method::AnalyticAeps | Method::Cutoff => {
            let c = (-&wt).pow(l).scale(&inv_fact);
            let rho_l = rho_expr(r.dim(), w).pow(l);
            Ok(rho_l.mul(r).scale(&c))
        }
        Method::Translation => {
            let c = Coeff::new(BigRational::from_integer(0.into()), (-&wt).re)
                .pow(l)
                .scale(&inv_fact);
            let mut d = r.clone();
            for _ in 0..l {
                d = d.differentiate(Var::Tau);
            }
            Ok(d.scale(&c))
        }
    }
}

fn order_drop(method: Method, w: u32) -> f64 {
    match method {
        Method::Translation => w as f64,
        _ => 1.0,
    }
}

fn correction_sum(
    method: Method,
    orders: &[f64],
    r: &[SymExpr],
    weights: &[f64],
    j: usize,
    step: f64,
    w: u32,
) -> Result<SymExpr> {
    let bounds = slot(orders, j, step);
    let drop = order_drop(method, w);
    let n = r.first().map(|e| e.dim()).unwrap_or(1);
    let mut acc = SymExpr::zero(n);
    for jp in 0..j {
        let mut l = 1u32;
        loop {
            let v = orders[jp] - l as f64 * drop;
            if v <= bounds.0 + ORDER_TOL {
                break;
            }
            if in_slot(v, bounds) && !r[jp].is_zero() {
                acc = acc.add(&correction(method, &r[jp], weights[jp], l, w)?);
            }
            l += 1;
        }
    }
    Ok(acc)
}

fn check_weights(weights: &[f64], needed: usize) -> Result<()> {
    if weights.len() < needed {
        return Err(Error::invalid(format!(
            "{} weights supplied, {needed} needed",
            weights.len()
        )));
    }
    if weights.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
        return Err(Error::invalid("weights must be finite and positive"));
    }
    Ok(())
}

/// Polyhomogeneous triangular solve:
/// `r_{m-j} = q_{m-j} − Σ_{l=1}^{j} ((−ε_{j−l})^l / l!) ρ^l r_{m−j+l}`.
pub fn solve_r_polyhom(exp: &SymbolExpansion, eps: &[f64]) -> Result<Vec<SymExpr>> {
    if exp.mode() != ExpansionMode::Polyhomogeneous {
        return Err(Error::invalid("polyhomogeneous expansion required"));
    }
    solve(exp, eps, Method::AnalyticAeps, 1.0)
}

/// Graded triangular solve for a padded expansion; `method` selects a_ε
/// weights (padding step 1) or translations (padding step `w`).
pub fn solve_r_graded(exp: &SymbolExpansion, weights: &[f64], method: Method) -> Result<Vec<SymExpr>> {
    let step = padding_step(method, exp.w())?;
    if !is_padded(&exp.orders(), step) {
        return Err(Error::invalid(format!(
            "expansion is not padded with step {step}; call pad_orders first"
        )));
    }
    solve(exp, weights, method, step)
}

pub(crate) fn padding_step(method: Method, w: u32) -> Result<f64> {
    match method {
        Method::AnalyticAeps => Ok(1.0),
        Method::Translation => Ok(w as f64),
        Method::Cutoff => Err(Error::invalid("cut-off summation needs no triangular solve")),
    }
}

fn solve(exp: &SymbolExpansion, weights: &[f64], method: Method, step: f64) -> Result<Vec<SymExpr>> {
    let len = exp.len();
    check_weights(weights, len.saturating_sub(1))?;
    let orders = exp.orders();
    let mut r: Vec<SymExpr> = Vec::with_capacity(len);
    for (j, e) in exp.entries().iter().enumerate() {
        let corr = correction_sum(method, &orders, &r, weights, j, step, exp.w())?;
        r.push(e.expr.sub(&corr));
    }
    Ok(r)
}

/// Inverse of the triangular solve: `q_j = r_j + Σ corrections`.
pub fn recompose(
    orders: &[f64],
    r: &[SymExpr],
    weights: &[f64],
    method: Method,
    w: u32,
) -> Result<Vec<SymExpr>> {
    let step = padding_step(method, w)?;
    check_weights(weights, r.len().saturating_sub(1))?;
    (0..r.len())
        .map(|j| Ok(r[j].add(&correction_sum(method, orders, r, weights, j, step, w)?)))
        .collect()
}

/// Leading terms `(−ε ρ)^l / l!` of the expansion of `a_ε`.
pub fn aeps_expansion(n: usize, w: u32, eps: f64, terms: usize) -> Result<Vec<SymExpr>> {
    let e = Coeff::from_f64(eps).ok_or_else(|| Error::invalid("epsilon must be finite"))?;
    let rho = rho_expr(n, w);
    Ok((0..terms as u32)
        .map(|l| rho.pow(l).scale(&(-&e).pow(l).scale(&factorial(l).recip())))
        .collect())
}
