//! Parametrices of parabolic operators `P + ∂_t`.
//!
//! `P = Σ_α a_α(x) D_x^α` with `D_x = −i∂_x` and polynomial coefficients has
//! the symbol `p(x, ξ) = Σ_α a_α(x) ξ^α`, split into graded parts
//! `p_{w−k}`. The symbol of `(P + ∂_t)^{-1}` is built in graded parts
//! `q_{−w−j}` so that the composition symbol is `1` up to any order.

use std::collections::BTreeMap;
use std::sync::Arc;

use num_rational::Rational64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::coeff::Coeff;
use crate::error::{Error, Result};
use crate::jet::factorial;
use crate::symbol::{random_direction, GridPolicy, HomogeneousSymbol};
use crate::symexpr::{Context, DerivIndex, SymExpr, Var};


#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OperatorTermJson {
    pub alpha: Vec<u32>,
    pub coeff: String,
}

/// File format of an operator.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OperatorSpecJson {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub n: usize,
    pub w: u32,
    pub terms: Vec<OperatorTermJson>,
}

/// Where positivity of `p_w` is certified.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PositivityGrid {
    pub x_half_width: f64,
    pub x_points: usize,
    pub directions: usize,
    pub seed: u64,
}

impl Default for PositivityGrid {
    fn default() -> Self {
        PositivityGrid {
            x_half_width: 2.0,
            x_points: 9,
            directions: 64,
            seed: 0x5eed,
        }
    }
}

/// A differential operator `P = Σ_α a_α(x) D_x^α` of even order `w`.
#[derive(Clone, Debug, PartialEq)]
pub struct OperatorSpec {
    pub name: String,
    pub n: usize,
    pub w: u32,
    pub coefficients: BTreeMap<Vec<u32>, SymExpr>,
    ctx: Context,
}

fn x_only(e: &SymExpr) -> bool {
    e.terms()
        .all(|(m, _)| m.tau == 0 && m.theta.is_empty() && m.xi.iter().all(|&b| b == 0))
}

fn xi_power(n: usize, alpha: &[u32]) -> SymExpr {
    let mut out = SymExpr::one(n);
    for (i, &a) in alpha.iter().enumerate() {
        out = out.mul(&SymExpr::var(n, Var::Xi(i)).pow(a));
    }
    out
}

fn multi_indices(n: usize, total: u32) -> Vec<Vec<u32>> {
    if n == 1 {
        return vec![vec![total]];
    }
    let mut out = Vec::new();
    for first in (0..=total).rev() {
        for mut rest in multi_indices(n - 1, total - first) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

fn alpha_factorial(alpha: &[u32]) -> Coeff {
    let f: u64 = alpha.iter().map(|&a| factorial(a) as u64).product();
    Coeff::ratio(1, f as i64)
}

/// `D_x^α = (−i)^{|α|} ∂_x^α`.
fn d_x(e: &SymExpr, alpha: &[u32]) -> SymExpr {
    let n = e.dim();
    let d = DerivIndex { alpha: alpha.to_vec(), beta: vec![0; n], k: 0 };
    let order: u32 = alpha.iter().sum();
    e.derivative(&d).scale(&(-&Coeff::i()).pow(order))
}

fn d_xi(e: &SymExpr, alpha: &[u32]) -> SymExpr {
    let n = e.dim();
    e.derivative(&DerivIndex { alpha: vec![0; n], beta: alpha.to_vec(), k: 0 })
}

impl OperatorSpec {
    pub fn new(name: impl Into<String>, n: usize, w: u32, terms: Vec<(Vec<u32>, SymExpr)>) -> Result<Self> {
        let euclid = Context::euclidean(n, w)?;
        let mut coefficients: BTreeMap<Vec<u32>, SymExpr> = BTreeMap::new();
        for (alpha, c) in terms {
            if alpha.len() != n {
                return Err(Error::invalid(format!("multi-index {alpha:?} has wrong length for n = {n}")));
            }
            if alpha.iter().sum::<u32>() > w {
                return Err(Error::invalid(format!("|{alpha:?}| exceeds the order w = {w}")));
            }
            if c.dim() != n || !x_only(&c) {
                return Err(Error::invalid(format!(
                    "coefficient of {alpha:?} must be a polynomial in x only"
                )));
            }
            let slot = coefficients.entry(alpha).or_insert_with(|| SymExpr::zero(n));
            *slot = slot.add(&c);
        }
        coefficients.retain(|_, c| !c.is_zero());
        let mut spec = OperatorSpec { name: name.into(), n, w, coefficients, ctx: euclid };
        let pw = spec.graded_part(0);
        if pw.is_zero() {
            return Err(Error::NotPositive("principal part p_w vanishes".into()));
        }
        spec.ctx = Context::new(n, w, pw)?;
        Ok(spec)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: OperatorSpecJson = serde_json::from_str(text)?;
        let euclid = Context::euclidean(raw.n, raw.w)?;
        let terms = raw
            .terms
            .iter()
            .map(|t| Ok((t.alpha.clone(), euclid.parse(&t.coeff)?)))
            .collect::<Result<Vec<_>>>()?;
        OperatorSpec::new(raw.name.unwrap_or_default(), raw.n, raw.w, terms)
    }

    pub fn to_json(&self) -> OperatorSpecJson {
        OperatorSpecJson {
            name: (!self.name.is_empty()).then(|| self.name.clone()),
            n: self.n,
            w: self.w,
            terms: self
                .coefficients
                .iter()
                .map(|(alpha, c)| OperatorTermJson { alpha: alpha.clone(), coeff: c.to_string() })
                .collect(),
        }
    }

    /// Context whose `THETA` is `p_w(x, ξ) + iτ`.
    pub fn ctx(&self) -> &Context {
        &self.ctx
    }

    /// `p_{w−k}(x, ξ) = Σ_{|α| = w−k} a_α(x) ξ^α`.
    pub fn graded_part(&self, k: u32) -> SymExpr {
        let mut out = SymExpr::zero(self.n);
        if k > self.w {
            return out;
        }
        for (alpha, c) in &self.coefficients {
            if alpha.iter().sum::<u32>() == self.w - k {
                out = out.add(&c.mul(&xi_power(self.n, alpha)));
            }
        }
        out
    }

    /// `σ(P + ∂_t) = p(x, ξ) + iτ`.
    pub fn full_symbol(&self) -> SymExpr {
        let mut out = SymExpr::var(self.n, Var::Tau).scale(&Coeff::i());
        for k in 0..=self.w {
            out = out.add(&self.graded_part(k));
        }
        out
    }

    /// Minimum of `p_w(x, ω)` over the grid; an error unless positive.
    pub fn check_positive(&self, grid: &PositivityGrid) -> Result<f64> {
        let pw = self.graded_part(0).compile();
        let mut dirs: Vec<Vec<f64>> = Vec::new();
        for i in 0..self.n {
            for s in [1.0, -1.0] {
                let mut e = vec![0.0; self.n];
                e[i] = s;
                dirs.push(e);
            }
        }
        if self.n > 1 {
            let mut rng = ChaCha8Rng::seed_from_u64(grid.seed);
            dirs.extend((0..grid.directions).map(|_| random_direction(&mut rng, self.n)));
        }
        let xs = GridPolicy {
            x_half_width: grid.x_half_width,
            x_points: grid.x_points,
            ..GridPolicy::default()
        }
        .x_box(self.n);
        let mut min = f64::INFINITY;
        for x in &xs {
            for d in &dirs {
                let v = pw.eval_raw(x, d, num_complex::Complex64::new(0.0, 0.0))?;
                if v.im.abs() > 1e-12 * v.re.abs().max(1.0) || !(v.re > 0.0) {
                    return Err(Error::NotPositive(format!(
                        "p_w(x = {x:?}, ξ = {d:?}) = {v}"
                    )));
                }
                min = min.min(v.re);
            }
        }
        Ok(min)
    }
}

/// `q_{−w} = (p_w + iτ)^{-1}`.
pub fn principal_inverse(spec: &OperatorSpec) -> Result<HomogeneousSymbol> {
    spec.check_positive(&PositivityGrid::default())?;
    HomogeneousSymbol::new(spec.ctx.theta_pow(Rational64::from_integer(-1)), -(spec.w as i64), spec.w)
}

/// `q_{−w−j}` for `j = 0..=J`.
#[derive(Clone, Debug, PartialEq)]
pub struct ParametrixComponents {
    pub spec: Arc<OperatorSpec>,
    pub components: Vec<HomogeneousSymbol>,
}

#[derive(Serialize)]
struct ComponentJson {
    j: usize,
    degree: i64,
    expr: String,
}

impl ParametrixComponents {
    pub fn to_json_value(&self) -> serde_json::Value {
        let ctx = self.spec.ctx();
        let comps: Vec<ComponentJson> = self
            .components
            .iter()
            .enumerate()
            .map(|(j, c)| ComponentJson {
                j,
                degree: c.degree(),
                expr: ctx.display(c.expr()).to_string(),
            })
            .collect();
        serde_json::json!({
            "operator": self.spec.to_json(),
            "theta": format!("{} + i*tau", self.spec.ctx().principal.poly()),
            "components": comps,
        })
    }
}

/// The recursion
/// `q_{−w−j} = −q_{−w} Σ_{k+l+|α|=j, l<j} (1/α!) ∂_ξ^α p_{w−k} · D_x^α q_{−w−l}`.
pub fn parametrix_components(spec: &OperatorSpec, big_j: usize) -> Result<ParametrixComponents> {
    let q0 = principal_inverse(spec)?;
    let n = spec.n;
    let w = spec.w;
    let inv = q0.expr().clone();
    let parts: Vec<SymExpr> = (0..=w).map(|k| spec.graded_part(k)).collect();
    let mut qs: Vec<SymExpr> = vec![inv.clone()];
    for j in 1..=big_j {
        let mut acc = SymExpr::zero(n);
        for (k, pk) in parts.iter().enumerate() {
            if pk.is_zero() || k > j {
                continue;
            }
            for (l, ql) in qs.iter().enumerate().take(j) {
                if k + l > j || ql.is_zero() {
                    continue;
                }
                let order = (j - k - l) as u32;
                for alpha in multi_indices(n, order) {
                    let dp = d_xi(pk, &alpha);
                    if dp.is_zero() {
                        continue;
                    }
                    let dq = d_x(ql, &alpha);
                    if dq.is_zero() {
                        continue;
                    }
                    acc = acc.add(&dp.mul(&dq).scale(&alpha_factorial(&alpha)));
                }
            }
        }
        qs.push(inv.mul(&acc).neg());
    }
    let components = qs
        .into_iter()
        .enumerate()
        .map(|(j, q)| HomogeneousSymbol::new(q, -(w as i64) - j as i64, w))
        .collect::<Result<Vec<_>>>()?;
    Ok(ParametrixComponents { spec: Arc::new(spec.clone()), components })
}

/// Graded part of `σ((P + ∂_t) ∘ Q)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ResidualPart {
    pub degree: i64,
    pub expr: SymExpr,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ComposeResidual {
    pub parts: Vec<ResidualPart>,
}

#[derive(Serialize)]
struct ResidualJson {
    degree: i64,
    expr: String,
    vanishes: bool,
}

impl ComposeResidual {
    /// Degree 0 is exactly `1` and every lower part is exactly zero.
    pub fn is_exact(&self) -> bool {
        self.parts.iter().all(|p| {
            if p.degree == 0 {
                p.expr == SymExpr::one(p.expr.dim())
            } else {
                p.expr.is_zero()
            }
        })
    }

    /// Degrees whose part differs from the identity.
    pub fn defects(&self) -> Vec<i64> {
        self.parts
            .iter()
            .filter(|p| {
                if p.degree == 0 {
                    p.expr != SymExpr::one(p.expr.dim())
                } else {
                    !p.expr.is_zero()
                }
            })
            .map(|p| p.degree)
            .collect()
    }

    pub fn to_json_value(&self, ctx: &Context) -> serde_json::Value {
        let parts: Vec<ResidualJson> = self
            .parts
            .iter()
            .map(|p| ResidualJson {
                degree: p.degree,
                expr: ctx.display(&p.expr).to_string(),
                vanishes: if p.degree == 0 {
                    p.expr == SymExpr::one(p.expr.dim())
                } else {
                    p.expr.is_zero()
                },
            })
            .collect();
        serde_json::json!({ "exact": self.is_exact(), "parts": parts })
    }
}

/// Graded parts of degrees `0, −1, …, −N` of
/// `Σ_α (1/α!) ∂_ξ^α σ(P + ∂_t) · D_x^α σ(Q)`.
pub fn compose_check(spec: &OperatorSpec, comps: &ParametrixComponents, big_n: usize) -> Result<ComposeResidual> {
    if big_n + 1 > comps.components.len() {
        return Err(Error::invalid(format!(
            "order {big_n} exceeds the {} computed components",
            comps.components.len().saturating_sub(1)
        )));
    }
    let n = spec.n;
    let sigma_p = spec.full_symbol();
    let mut sigma_q = SymExpr::zero(n);
    for c in &comps.components {
        sigma_q = sigma_q.add(c.expr());
    }
    let mut total = SymExpr::zero(n);
    for order in 0..=spec.w {
        for alpha in multi_indices(n, order) {
            let dp = d_xi(&sigma_p, &alpha);
            if dp.is_zero() {
                continue;
            }
            total = total.add(&dp.mul(&d_x(&sigma_q, &alpha)).scale(&alpha_factorial(&alpha)));
        }
    }
    let graded: BTreeMap<Rational64, SymExpr> = total.graded_parts(spec.w)?.into_iter().collect();
    let parts = (0..=big_n as i64)
        .map(|j| ResidualPart {
            degree: -j,
            expr: graded
                .get(&Rational64::from_integer(-j))
                .cloned()
                .unwrap_or_else(|| SymExpr::zero(n)),
        })
        .collect();
    Ok(ComposeResidual { parts })
}
