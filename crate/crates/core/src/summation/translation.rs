use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{pad_orders, realize, shift_expr, solve_r_graded, CutoffProfile, Method, RealizedSymbol, SummationConfig};
use crate::coeff::Coeff;
use crate::error::{Error, Result};
use crate::symbol::{
    pseudo_norm, pseudo_norm_raw, random_covariable, trend_growth, EstimateReport, ExpansionMode, GridPolicy,
    ReportRow, SymbolExpansion,
};
use crate::symexpr::{DerivIndex, EvalPoint, SymExpr, Var};

const ULP4: f64 = 4.0 * f64::EPSILON;

/// `q^{(T)}(x, ξ, τ) = q(x, ξ, τ − iT)`.
pub fn shift_symbol(q: &SymExpr, t: f64) -> Result<SymExpr> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::invalid(format!("shift T = {t} must be positive")));
    }
    Ok(shift_expr(q, t))
}

/// Translation summation `q = Σ r_j^{(T_j)}`; graded expansions are padded
/// with step `w`, and `T_j = 1` whenever `m_j > −1`.
pub fn translation_sum(exp: &SymbolExpansion, cfg: &SummationConfig) -> Result<RealizedSymbol> {
    let work = match exp.mode() {
        ExpansionMode::Polyhomogeneous => exp.clone(),
        ExpansionMode::Graded => pad_orders(exp, exp.w() as f64)?,
    };
    let solver = |ts: &[f64]| -> Result<Vec<SymExpr>> {
        let mut padded = ts.to_vec();
        padded.resize(work.len(), 1.0);
        solve_r_graded(&work, &padded, Method::Translation)
    };
    realize(
        Method::Translation,
        exp,
        &work,
        &solver,
        cfg,
        &CutoffProfile::standard(),
    )
}

fn shells_between(lo: f64, hi: f64) -> Vec<f64> {
    let mut out = Vec::new();
    let mut r = lo;
    while r <= hi * (1.0 + 1e-12) {
        out.push(r);
        r *= std::f64::consts::SQRT_2;
    }
    out
}

fn sup_on_shell(
    f: &(dyn Fn(&EvalPoint) -> Result<Complex64> + Sync),
    policy: &GridPolicy,
    n: usize,
    w: u32,
    shell: f64,
) -> Result<f64> {
    let sphere = policy.sphere(n, w, true);
    let xs = policy.x_box(n);
    let vals = sphere
        .par_iter()
        .map(|p| -> Result<f64> {
            let (xi, tau) = p.dilate(shell, w);
            let tau = Complex64::new(tau.re, tau.im.min(0.0));
            let mut m = 0.0f64;
            for x in &xs {
                m = m.max(f(&EvalPoint::new(x.clone(), xi.clone(), tau)?)?.norm());
            }
            Ok(m)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(vals.into_iter().fold(0.0, f64::max))
}

/// Taylor comparison `|∂(q^{(T)} − Σ_{l≤N} (−iT)^l/l! ∂_τ^l q)|` against
/// `(1+‖ξ,τ‖)^{m−|β|−wk−N−1}` on the policy shells.
pub fn taylor_shift_report(
    q: &SymExpr,
    m: f64,
    t: f64,
    big_n: u32,
    budget: u32,
    policy: &GridPolicy,
    w: u32,
) -> Result<EstimateReport> {
    let n = q.dim();
    let mut diff = shift_symbol(q, t)?;
    let step = Coeff::from_f64(-t).expect("finite shift");
    let shift = Coeff::new(num_rational::BigRational::from_integer(0.into()), step.re);
    let mut dq = q.clone();
    let mut coef = Coeff::one();
    for l in 0..=big_n {
        if l > 0 {
            dq = dq.differentiate(Var::Tau);
            coef = (&coef * &shift).scale(&num_rational::BigRational::new(1.into(), l.into()));
        }
        diff = diff.sub(&dq.scale(&coef));
    }
    let mut table = Vec::new();
    let mut margin = f64::INFINITY;
    for d in DerivIndex::all_up_to(n, budget) {
        let f = diff.derivative(&d).compile();
        let expo = m - d.beta_len() as f64 - (w * d.k) as f64 - big_n as f64 - 1.0;
        let mut cs = Vec::new();
        for &s in &policy.shells {
            let sup = sup_on_shell(&|p| f.eval(p), policy, n, w, s)?;
            let c = sup * (1.0 + s).powf(-expo);
            cs.push(c);
            table.push(ReportRow {
                alpha: d.alpha.clone(),
                beta: d.beta.clone(),
                k: d.k,
                shell: Some(s),
                c,
                label: None,
            });
        }
        margin = margin.min(2.0 - trend_growth(&policy.shells, &cs));
    }
    Ok(EstimateReport {
        estimate_id: format!("shift-taylor/T={t}/N={big_n}"),
        grid: policy.describe(n, true),
        table,
        pass: margin >= 0.0,
        margin,
    })
}

/// `1+‖ξ,τ‖ ≤ 1+‖ξ,τ−iT‖ ≤ (1+T)^{1/w}(1+‖ξ,τ‖)` on random samples.
///
/// The upper bound fails near the origin (`ξ = τ = 0` gives `1 + T^{1/w}`),
/// so the table also carries the valid bound with `1 + T^{1/w}` in place of
/// `(1+T)^{1/w}`; `pass` refers to the first two rows only.
pub fn check_shift_sandwich(samples: usize, seed: u64, t: f64, n: usize, w: u32) -> EstimateReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut lower, mut upper, mut corrected) = (0.0f64, 0.0f64, 0.0f64);
    let grow = (1.0 + t).powf(1.0 / w as f64);
    let grow_corrected = 1.0 + t.powf(1.0 / w as f64);
    for _ in 0..samples {
        let (xi, tau) = random_covariable(&mut rng, n);
        let base = 1.0 + pseudo_norm_raw(&xi, tau, w);
        let shifted = 1.0 + pseudo_norm_raw(&xi, tau - Complex64::new(0.0, t), w);
        lower = lower.max(base / shifted);
        upper = upper.max(shifted / (grow * base));
        corrected = corrected.max(shifted / (grow_corrected * base));
    }
    let worst = lower.max(upper);
    EstimateReport {
        estimate_id: format!("shift-sandwich/T={t}"),
        grid: format!("{samples} random points, n={n}, w={w}, seed {seed}"),
        table: vec![
            ReportRow::scalar(n, lower, "(1+N)/(1+N_T)"),
            ReportRow::scalar(n, upper, "(1+N_T)/((1+T)^(1/w)(1+N))"),
            ReportRow::scalar(n, corrected, "corrected: (1+N_T)/((1+T^(1/w))(1+N))"),
        ],
        pass: worst <= 1.0 + ULP4,
        margin: 1.0 + ULP4 - worst,
    }
}

/// `sup |∂ q^{(T)}| (1+‖ξ,τ‖)^{−(m+1−|β|−wk)} (1+T)^{1/w}` for each `T`;
/// passes when the sup grows by at most a factor 2 per decade of `T` at the
/// largest shifts.
pub fn shift_gain_report(
    q: &SymExpr,
    m: f64,
    ts: &[f64],
    budget: u32,
    policy: &GridPolicy,
    w: u32,
) -> Result<EstimateReport> {
    let n = q.dim();
    let top = ts.iter().fold(1.0f64, |a, &b| a.max(b)).powf(1.0 / w as f64);
    let shells = shells_between(2f64.powi(-6), 2f64.powi(6) * top);
    let mut table = Vec::new();
    let mut margin = f64::INFINITY;
    for d in DerivIndex::all_up_to(n, budget) {
        let expo = m + 1.0 - d.beta_len() as f64 - (w * d.k) as f64;
        let mut cs = Vec::new();
        for &t in ts {
            let f = shift_symbol(q, t)?.derivative(&d).compile();
            let gain = (1.0 + t).powf(1.0 / w as f64);
            let mut c = 0.0f64;
            for &s in &shells {
                let sup = sup_on_shell(
                    &|p| {
                        let nrm = pseudo_norm(&p.xi, p.tau, w)?;
                        Ok(f.eval(p)? * (1.0 + nrm).powf(-expo))
                    },
                    policy,
                    n,
                    w,
                    s,
                )?;
                c = c.max(sup * gain);
            }
            cs.push(c);
            table.push(ReportRow {
                alpha: d.alpha.clone(),
                beta: d.beta.clone(),
                k: d.k,
                shell: None,
                c,
                label: Some(format!("T={t}")),
            });
        }
        margin = margin.min(2.0 - trend_growth(ts, &cs));
    }
    Ok(EstimateReport {
        estimate_id: "shift-gain".into(),
        grid: format!(
            "{} shells in [2^-6, {:.3e}] x {}",
            shells.len(),
            shells.last().copied().unwrap_or(0.0),
            policy.describe(n, true)
        ),
        table,
        pass: margin >= 0.0,
        margin,
    })
}
