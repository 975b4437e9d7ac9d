//! Asymptotic summation: realize `q ~ Σ_j q_j` by cut-off weights,
//! `a_ε` weights or `τ`-translations, with weights chosen by doubling until
//! a grid certification of the geometric tail bound succeeds.

mod certify;
mod cutoff;
mod solve;
mod translation;

use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::symbol::{
    check_expansion_estimates, AepsSymbol, EstimateMode, EstimateReport, ExpansionFile, ExpansionMode, ExprSymbol,
    GridPolicy, SumSymbol, Symbol, SymbolExpansion, SymbolRef,
};
use crate::symexpr::{DerivIndex, EvalPoint, SymExpr};

pub use certify::{certify_term, BoundKind};
pub use cutoff::{CutoffProfile, CutoffTerm};
pub use solve::{aeps_expansion, pad_orders, recompose, solve_r_graded, solve_r_polyhom};
pub use translation::{
    check_shift_sandwich, shift_gain_report, shift_symbol, taylor_shift_report, translation_sum,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Cutoff,
    AnalyticAeps,
    Translation,
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cutoff" => Ok(Method::Cutoff),
            "analytic" | "analytic_aeps" | "aeps" => Ok(Method::AnalyticAeps),
            "translation" => Ok(Method::Translation),
            other => Err(Error::invalid(format!("unknown summation method `{other}`"))),
        }
    }
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Cutoff => "cutoff",
            Method::AnalyticAeps => "analytic_aeps",
            Method::Translation => "translation",
        }
    }
}

/// Knobs shared by the three constructions.
#[derive(Clone, Debug, PartialEq)]
pub struct SummationConfig {
    /// Index of the last summed term; defaults to the last entry.
    pub n_max: Option<usize>,
    /// Derivative budget `D`: certify `|α|+|β|+k ≤ D`.
    pub budget: u32,
    pub policy: GridPolicy,
    pub max_doublings: u32,
    /// Skip selection and use these weights.
    pub fixed_weights: Option<Vec<f64>>,
    /// Expansion-remainder reports for `N = 1..=report_depth`.
    pub report_depth: usize,
    pub report_budget: u32,
}

impl Default for SummationConfig {
    fn default() -> Self {
        SummationConfig {
            n_max: None,
            budget: 3,
            policy: GridPolicy {
                sphere_samples: 24,
                ..GridPolicy::default()
            },
            max_doublings: 60,
            fixed_weights: None,
            report_depth: 2,
            report_budget: 1,
        }
    }
}

impl SummationConfig {
    fn n_terms(&self, exp: &SymbolExpansion) -> Result<usize> {
        if exp.is_empty() {
            return Err(Error::invalid("empty expansion"));
        }
        match self.n_max {
            None => Ok(exp.len()),
            Some(k) if k < exp.len() => Ok(k + 1),
            Some(k) => Err(Error::invalid(format!(
                "N_max = {k} exceeds the {} available components",
                exp.len()
            ))),
        }
    }
}

/// A concrete symbol `q = Σ_{j ≤ N_max} weight_j · r_j`.
#[derive(Clone, Debug)]
pub struct RealizedSymbol {
    pub method: Method,
    pub source: SymbolExpansion,
    pub n_max: usize,
    pub weights: Vec<f64>,
    pub orders: Vec<f64>,
    pub components: Vec<SymExpr>,
    pub certification: Vec<EstimateReport>,
    terms: Vec<SymbolRef>,
}

#[derive(Serialize)]
struct RealizedJson<'a> {
    method: &'a str,
    n: usize,
    w: u32,
    n_max: usize,
    weights: &'a [f64],
    orders: &'a [f64],
    components: Vec<String>,
    source: ExpansionFile,
    certification: &'a [EstimateReport],
}

/// The fields needed to rebuild a realized symbol from its JSON.
#[derive(Deserialize)]
struct RealizedFile {
    method: Method,
    n_max: usize,
    weights: Vec<f64>,
    source: ExpansionFile,
}

impl RealizedSymbol {
    pub fn terms(&self) -> &[SymbolRef] {
        &self.terms
    }

    /// Every certification report passed.
    pub fn certified(&self) -> bool {
        self.certification.iter().all(|r| r.pass)
    }

    pub fn to_json(&self) -> String {
        let ctx = self.source.ctx();
        let j = RealizedJson {
            method: self.method.name(),
            n: ctx.n,
            w: ctx.w,
            n_max: self.n_max,
            weights: &self.weights,
            orders: &self.orders,
            components: self
                .components
                .iter()
                .map(|c| ctx.display(c).to_string())
                .collect(),
            source: self.source.to_file(),
            certification: &self.certification,
        };
        serde_json::to_string_pretty(&j).expect("realized symbol serializes")
    }

    /// Rebuild from [`RealizedSymbol::to_json`] output with the recorded
    /// weights; the expansion reports are recomputed under `cfg`.
    pub fn from_json(text: &str, cfg: &SummationConfig) -> Result<RealizedSymbol> {
        let file: RealizedFile = serde_json::from_str(text)?;
        let source = SymbolExpansion::from_file(&file.source)?;
        let cfg = SummationConfig {
            n_max: Some(file.n_max),
            fixed_weights: Some(file.weights),
            ..cfg.clone()
        };
        summation_for(file.method, &source, &cfg)
    }

    fn weighted(method: Method, weight: f64, w: u32, r: &SymExpr, profile: &CutoffProfile) -> SymbolRef {
        match method {
            Method::Cutoff => Arc::new(CutoffTerm::new(weight, w, profile.clone(), r.clone())),
            Method::AnalyticAeps => Arc::new(AepsSymbol::new(weight, w, r.clone())),
            Method::Translation => ExprSymbol::shared(shift_expr(r, weight)),
        }
    }
}

pub(crate) fn shift_expr(r: &SymExpr, t: f64) -> SymExpr {
    let c = crate::coeff::Coeff::from_f64(t).expect("finite shift");
    r.shift_tau(&c)
}

impl Symbol for RealizedSymbol {
    fn dim(&self) -> usize {
        self.source.n()
    }

    fn eval(&self, pt: &EvalPoint) -> Result<Complex64> {
        let mut acc = Complex64::new(0.0, 0.0);
        for t in &self.terms {
            acc += t.eval(pt)?;
        }
        Ok(acc)
    }

    fn derivative(&self, d: &DerivIndex) -> Result<SymbolRef> {
        let parts = self
            .terms
            .iter()
            .map(|t| t.derivative(d))
            .collect::<Result<Vec<_>>>()?;
        Ok(Arc::new(SumSymbol::new(self.dim(), parts)))
    }

    fn tau_analytic(&self) -> bool {
        self.terms.iter().all(|t| t.tau_analytic())
    }
}

/// Shared driver: select weights term by term, then assemble and attach
/// expansion-remainder reports.
fn realize(
    method: Method,
    source: &SymbolExpansion,
    work: &SymbolExpansion,
    components_for: &dyn Fn(&[f64]) -> Result<Vec<SymExpr>>,
    cfg: &SummationConfig,
    profile: &CutoffProfile,
) -> Result<RealizedSymbol> {
    let n_terms = cfg.n_terms(work)?;
    let w = work.w();
    let orders: Vec<f64> = work.orders()[..n_terms].to_vec();
    let mut weights: Vec<f64> = Vec::with_capacity(n_terms);
    let mut certification = Vec::new();
    let kind = BoundKind::for_method(method);
    for j in 0..n_terms {
        // r_j depends on weights 0..j only.
        let mut trial = weights.clone();
        trial.push(1.0);
        let r_j = components_for(&trial)?[j].clone();
        if let Some(fixed) = &cfg.fixed_weights {
            let wt = *fixed
                .get(j)
                .ok_or_else(|| Error::invalid("not enough fixed weights"))?;
            weights.push(wt);
            continue;
        }
        let fixed_one = method == Method::Translation && orders[j] > -1.0;
        let mut wt = 1.0;
        let mut doublings = 0;
        loop {
            let term = RealizedSymbol::weighted(method, wt, w, &r_j, profile);
            let scale = match method {
                Method::Translation => wt.powf(1.0 / w as f64),
                _ => wt,
            };
            let (mut report, blocker) =
                certify_term(term.as_ref(), j, orders[j], kind, cfg.budget, scale, &cfg.policy, w)?;
            if fixed_one {
                report.estimate_id.push_str(" (weight fixed to 1)");
                certification.push(report);
                break;
            }
            if report.pass {
                certification.push(report);
                break;
            }
            doublings += 1;
            if doublings > cfg.max_doublings {
                return Err(Error::Certification(format!(
                    "term {j}: no admissible weight within {} doublings; blocked by {}",
                    cfg.max_doublings,
                    blocker.unwrap_or_default()
                )));
            }
            wt *= 2.0;
        }
        weights.push(wt);
    }
    let components = components_for(&weights)?[..n_terms].to_vec();
    let terms = components
        .iter()
        .zip(&weights)
        .map(|(r, &wt)| RealizedSymbol::weighted(method, wt, w, r, profile))
        .collect();
    let mut realized = RealizedSymbol {
        method,
        source: source.clone(),
        n_max: n_terms - 1,
        weights,
        orders,
        components,
        certification,
        terms,
    };
    let mode = match method {
        Method::Cutoff => EstimateMode::RealTau,
        _ => EstimateMode::HalfPlane,
    };
    // Graded expansions have no known order past their last entry.
    let available = match source.mode() {
        ExpansionMode::Graded => source.len() - 1,
        ExpansionMode::Polyhomogeneous => source.len(),
    };
    let depth = cfg.report_depth.min(n_terms).min(available);
    let report_policy = extend_shells(&cfg.policy, method, &realized.weights, w);
    for big_n in 1..=depth {
        let r = check_expansion_estimates(
            &realized,
            source,
            big_n,
            cfg.report_budget,
            mode,
            &report_policy,
        )?;
        realized.certification.push(r);
    }
    Ok(realized)
}

/// The weights act up to `‖ξ,τ‖` of the order of their scale, so remainder
/// reports append decades to the shells until they pass 100 times the
/// largest scale.
fn extend_shells(policy: &GridPolicy, method: Method, weights: &[f64], w: u32) -> GridPolicy {
    let scale = weights
        .iter()
        .map(|&v| match method {
            Method::Translation => v.powf(1.0 / w as f64),
            Method::Cutoff => v * 2f64.powf(1.0 / (2.0 * w as f64)),
            Method::AnalyticAeps => v,
        })
        .fold(1.0f64, f64::max);
    let mut out = policy.clone();
    while let Some(&last) = out.shells.last() {
        if last >= 100.0 * scale {
            break;
        }
        out.shells.push(last * 10.0);
    }
    out
}

/// Run the construction `method` with the standard cut-off profile.
pub fn summation_for(method: Method, exp: &SymbolExpansion, cfg: &SummationConfig) -> Result<RealizedSymbol> {
    match method {
        Method::Cutoff => cutoff_sum(exp, &CutoffProfile::standard(), cfg),
        Method::AnalyticAeps => analytic_sum(exp, cfg),
        Method::Translation => translation_sum(exp, cfg),
    }
}

/// Cut-off summation `q = Σ c_{ε_j} q_{m−j}` with
/// `c_ε = 1 − φ(N(ξ,τ)/ε)`.
pub fn cutoff_sum(
    exp: &SymbolExpansion,
    profile: &CutoffProfile,
    cfg: &SummationConfig,
) -> Result<RealizedSymbol> {
    if exp.mode() != ExpansionMode::Polyhomogeneous {
        return Err(Error::invalid("cut-off summation needs a polyhomogeneous expansion"));
    }
    let comps = exp.exprs();
    realize(Method::Cutoff, exp, exp, &|_| Ok(comps.clone()), cfg, profile)
}

/// Analytic summation `q = Σ a_{ε_j} r_j` with `r_j` from the triangular
/// solve. Graded expansions are padded with step 1 first.
pub fn analytic_sum(exp: &SymbolExpansion, cfg: &SummationConfig) -> Result<RealizedSymbol> {
    let work = match exp.mode() {
        ExpansionMode::Polyhomogeneous => exp.clone(),
        ExpansionMode::Graded => pad_orders(exp, 1.0)?,
    };
    let solver = |eps: &[f64]| -> Result<Vec<SymExpr>> {
        let mut padded = eps.to_vec();
        padded.resize(work.len(), 1.0);
        match work.mode() {
            ExpansionMode::Polyhomogeneous => solve_r_polyhom(&work, &padded),
            ExpansionMode::Graded => solve_r_graded(&work, &padded, Method::AnalyticAeps),
        }
    };
    realize(
        Method::AnalyticAeps,
        exp,
        &work,
        &solver,
        cfg,
        &CutoffProfile::standard(),
    )
}
