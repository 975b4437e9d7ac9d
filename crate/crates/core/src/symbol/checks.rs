use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::f64::consts::PI;

use super::grid::random_direction;
use super::{
    pseudo_norm_raw, rho, trend_growth, EstimateReport, ExprSymbol, GridPolicy, HomogeneousSymbol, ReportRow,
    Symbol, SymbolExpansion, SymbolRef,
};
use crate::error::{Error, Result};
use crate::symexpr::{CompiledExpr, DerivIndex, EvalPoint};

const HOMOGENEITY_TOL: f64 = 1e-10;
const ANALYTICITY_TOL: f64 = 1e-6;
const TREND_FACTOR: f64 = 2.0;
const ULP4: f64 = 4.0 * f64::EPSILON;

/// Real-τ estimates or estimates on the closed lower half-plane.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EstimateMode {
    RealTau,
    HalfPlane,
}

/// Relative homogeneity defect over random `(pt, λ)` with `λ ∈ [1/2, 2]`.
pub fn check_homogeneity(q: &HomogeneousSymbol, samples: usize, seed: u64) -> Result<EstimateReport> {
    let n = q.dim();
    let m = q.degree() as i32;
    let w = q.w();
    let f = CompiledExpr::new(q.expr());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    let (mut done, mut rejected) = (0usize, 0usize);
    while done < samples {
        if rejected > samples.max(1) {
            return Err(Error::Pole);
        }
        let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..=1.0)).collect();
        let xi: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..=2.0)).collect();
        let tau = Complex64::new(rng.gen_range(-2.0..=2.0), -rng.gen_range(0.0..=2.0));
        let lam: f64 = rng.gen_range(0.5..=2.0);
        let xl: Vec<f64> = xi.iter().map(|v| v * lam).collect();
        let tl = tau * lam.powi(w as i32);
        let (a, b) = match (f.eval_raw(&x, &xi, tau), f.eval_raw(&x, &xl, tl)) {
            (Ok(a), Ok(b)) => (a, b),
            (Err(Error::Pole), _) | (_, Err(Error::Pole)) => {
                rejected += 1;
                continue;
            }
            (Err(e), _) | (_, Err(e)) => return Err(e),
        };
        let scaled = a * lam.powi(m);
        if q.expr().is_zero() {
            done += 1;
            continue;
        }
        if scaled.norm() == 0.0 {
            if b.norm() == 0.0 {
                done += 1;
            } else {
                rejected += 1;
            }
            continue;
        }
        worst = worst.max((b - scaled).norm() / scaled.norm());
        done += 1;
    }
    Ok(EstimateReport {
        estimate_id: "homogeneity".into(),
        grid: format!("{samples} random points, lambda in [1/2, 2], seed {seed}"),
        table: vec![ReportRow::scalar(n, worst, "relative defect")],
        pass: worst <= HOMOGENEITY_TOL,
        margin: HOMOGENEITY_TOL - worst,
    })
}

/// Points `(x, ξ, τ)` strictly inside `Im τ < 0` for Cauchy–Riemann checks.
#[derive(Clone, Debug, PartialEq)]
pub struct AnalyticityGrid {
    pub x: Vec<Vec<f64>>,
    pub xi: Vec<Vec<f64>>,
    pub re_tau: Vec<f64>,
    pub im_tau: Vec<f64>,
    pub step: f64,
}

impl AnalyticityGrid {
    pub fn standard(n: usize) -> Self {
        let levels = [-2.0, -1.0, -0.6, -0.3, 0.0, 0.3, 0.6, 1.0, 2.0];
        let mut xi = Vec::new();
        for &v in &levels {
            for axis in 0..n {
                let mut p = vec![0.0; n];
                p[axis] = v;
                xi.push(p);
                if v == 0.0 {
                    break;
                }
            }
            if n > 1 && v != 0.0 {
                xi.push(vec![v / (n as f64).sqrt(); n]);
            }
        }
        let mut x = vec![vec![0.0; n]];
        for axis in 0..n {
            for v in [-0.5, 0.5] {
                let mut p = vec![0.0; n];
                p[axis] = v;
                x.push(p);
            }
        }
        AnalyticityGrid {
            x,
            xi,
            re_tau: vec![-3.0, -1.0, -0.5, -0.2, 0.0, 0.2, 0.5, 1.0, 3.0],
            im_tau: vec![-0.05, -0.2, -0.5, -1.0, -3.0],
            step: 1e-5,
        }
    }

    fn points(&self) -> Vec<(Vec<f64>, Vec<f64>, Complex64)> {
        let mut out = Vec::new();
        for x in &self.x {
            for xi in &self.xi {
                for &re in &self.re_tau {
                    for &im in &self.im_tau {
                        out.push((x.clone(), xi.clone(), Complex64::new(re, im)));
                    }
                }
            }
        }
        out
    }

    pub fn describe(&self) -> String {
        format!(
            "{} x-points x {} xi-points x Re tau {:?} x Im tau {:?}, step {}",
            self.x.len(),
            self.xi.len(),
            self.re_tau,
            self.im_tau,
            self.step
        )
    }
}

/// Worst normalized Cauchy–Riemann residual
/// `|∂_{Re τ} q + i ∂_{Im τ} q| / (|∂_τ q| + 1)` by fourth-order central differences.
pub fn check_analyticity(q: &dyn Symbol, grid: &AnalyticityGrid) -> Result<EstimateReport> {
    if let Some(im) = grid.im_tau.iter().find(|v| **v >= 0.0) {
        return Err(Error::Domain(format!("analyticity grid touches Im tau = {im}")));
    }
    let h = grid.step;
    if grid.im_tau.iter().any(|v| v.abs() <= 3.0 * h) {
        return Err(Error::Domain("difference step reaches Im tau >= 0".into()));
    }
    let pts = grid.points();
    let worst = pts
        .par_iter()
        .map(|(x, xi, tau)| -> Result<f64> {
            let at = |t: Complex64| EvalPoint::new(x.clone(), xi.clone(), t).and_then(|p| q.eval(&p));
            // Fourth-order central stencil in each real direction.
            let mut diff = [Complex64::new(0.0, 0.0); 2];
            for (slot, dir) in diff.iter_mut().zip([Complex64::new(h, 0.0), Complex64::new(0.0, h)]) {
                let mut v = [Complex64::new(0.0, 0.0); 4];
                for (val, s) in v.iter_mut().zip([1.0, -1.0, 2.0, -2.0]) {
                    match at(tau + dir * s) {
                        Ok(z) => *val = z,
                        Err(Error::Pole) => return Ok(0.0),
                        Err(e) => return Err(e),
                    }
                }
                *slot = (8.0 * (v[0] - v[1]) - (v[2] - v[3])) / (12.0 * h);
            }
            let [d_re, d_im] = diff;
            let resid = (d_re + Complex64::i() * d_im).norm();
            Ok(resid / (d_re.norm() + 1.0))
        })
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    Ok(EstimateReport {
        estimate_id: "cauchy-riemann".into(),
        grid: grid.describe(),
        table: vec![ReportRow::scalar(q.dim(), worst, "normalized residual")],
        pass: worst <= ANALYTICITY_TOL,
        margin: ANALYTICITY_TOL - worst,
    })
}

/// Empirical constants of the remainder estimate
/// `|∂_x^α ∂_ξ^β ∂_τ^k (q − Σ_{j<N} q_j)| ≤ C ‖ξ,τ‖^{m_N − |β| − wk}`
/// per derivative tuple and shell. Passes when every constant is finite and
/// the outermost shells grow by at most a factor of two per decade.
pub fn check_expansion_estimates(
    q: &dyn Symbol,
    exp: &SymbolExpansion,
    n_terms: usize,
    budget: u32,
    mode: EstimateMode,
    policy: &GridPolicy,
) -> Result<EstimateReport> {
    let n = exp.n();
    let w = exp.w();
    if q.dim() != n {
        return Err(Error::invalid("symbol and expansion dimensions differ"));
    }
    let order = exp.remainder_order(n_terms)?;
    let partial = exp.partial_sum(n_terms)?;
    // Symbolic subtraction when possible; otherwise both sides are kept so
    // that rounding-level differences can be recognized as zero.
    let (lhs, rhs): (SymbolRef, Option<SymbolRef>) = match q.as_expr() {
        Some(e) => (ExprSymbol::shared(e.sub(&partial)), None),
        None => (
            q.derivative(&DerivIndex::zero(n))?,
            Some(ExprSymbol::shared(partial)),
        ),
    };
    let half = mode == EstimateMode::HalfPlane;
    let sphere = policy.sphere(n, w, half);
    let xs = policy.x_box(n);
    let mut table = Vec::new();
    let mut worst_growth = 0.0f64;
    for d in DerivIndex::all_up_to(n, budget) {
        let dl = lhs.derivative(&d)?;
        let dr = rhs.as_ref().map(|r| r.derivative(&d)).transpose()?;
        let expo = order - d.beta_len() as f64 - (w * d.k) as f64;
        let mut cs = Vec::with_capacity(policy.shells.len());
        for &shell in &policy.shells {
            let c = shell_max(dl.as_ref(), dr.as_deref(), &sphere, &xs, shell, w)? * shell.powf(-expo);
            cs.push(c);
            table.push(ReportRow {
                alpha: d.alpha.clone(),
                beta: d.beta.clone(),
                k: d.k,
                shell: Some(shell),
                c,
                label: None,
            });
        }
        worst_growth = worst_growth.max(trend_growth(&policy.shells, &cs));
    }
    let pass = worst_growth <= TREND_FACTOR;
    Ok(EstimateReport {
        estimate_id: match mode {
            EstimateMode::RealTau => "expansion-remainder/real-tau".into(),
            EstimateMode::HalfPlane => "expansion-remainder/half-plane".into(),
        },
        grid: policy.describe(n, half),
        table,
        pass,
        margin: TREND_FACTOR - worst_growth,
    })
}

/// Relative size below which `a − b` is indistinguishable from rounding.
const CANCELLATION_FLOOR: f64 = 1e-12;

fn shell_max(
    a: &dyn Symbol,
    b: Option<&dyn Symbol>,
    sphere: &[super::SpherePoint],
    xs: &[Vec<f64>],
    shell: f64,
    w: u32,
) -> Result<f64> {
    let vals = sphere
        .par_iter()
        .map(|p| -> Result<f64> {
            let (xi, tau) = p.dilate(shell, w);
            let tau = Complex64::new(tau.re, tau.im.min(0.0));
            let mut best = 0.0f64;
            for x in xs {
                let pt = EvalPoint::new(x.clone(), xi.clone(), tau)?;
                let va = a.eval(&pt)?;
                let v = match b {
                    None => va.norm(),
                    Some(b) => {
                        let vb = b.eval(&pt)?;
                        let d = (va - vb).norm();
                        if d <= CANCELLATION_FLOOR * (va.norm() + vb.norm()) {
                            0.0
                        } else {
                            d
                        }
                    }
                };
                best = if v.is_nan() { f64::NAN } else { best.max(v) };
            }
            Ok(best)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(vals.into_iter().fold(0.0, |a, b| if b.is_nan() || a.is_nan() { f64::NAN } else { a.max(b) }))
}

/// Random `(ξ, τ)` with log-uniform magnitudes over six decades, a share of
/// exact zeros in `ξ` and of real `τ`.
pub(crate) fn random_covariable(rng: &mut ChaCha8Rng, n: usize) -> (Vec<f64>, Complex64) {
    let mag = |rng: &mut ChaCha8Rng| 10f64.powf(rng.gen_range(-3.0..=3.0));
    let xi = if rng.gen_bool(0.1) {
        vec![0.0; n]
    } else {
        let r = mag(rng);
        random_direction(rng, n).into_iter().map(|v| v * r).collect()
    };
    let t = mag(rng);
    let tau = match rng.gen_range(0..10) {
        0 => Complex64::new(t, 0.0),
        1 => Complex64::new(-t, 0.0),
        _ => Complex64::from_polar(t, -rng.gen::<f64>() * PI),
    };
    (xi, tau)
}

/// `2^{-1/w}(1+|ξ|+|τ|)^{1/w} ≤ 1+‖ξ,τ‖ ≤ 1+|ξ|+|τ|` on random samples.
///
/// The upper bound fails for small `|τ|` (`ξ = 0` gives `1 + |τ|^{1/w}`); the
/// table also carries the valid bound `1+‖ξ,τ‖ ≤ 2(1+|ξ|+|τ|)`, which does
/// not enter `pass`.
pub fn check_pseudo_norm_sandwich(samples: usize, seed: u64, n: usize, w: u32) -> EstimateReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut lower, mut upper, mut corrected) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..samples {
        let (xi, tau) = random_covariable(&mut rng, n);
        let mid = 1.0 + pseudo_norm_raw(&xi, tau, w);
        let lin = 1.0 + xi.iter().map(|v| v * v).sum::<f64>().sqrt() + tau.norm();
        let lo = 2f64.powf(-1.0 / w as f64) * lin.powf(1.0 / w as f64);
        lower = lower.max(lo / mid);
        upper = upper.max(mid / lin);
        corrected = corrected.max(mid / (2.0 * lin));
    }
    let worst = lower.max(upper);
    EstimateReport {
        estimate_id: "pseudo-norm-sandwich".into(),
        grid: format!("{samples} random points, |xi|,|tau| log-uniform in [1e-3, 1e3], n={n}, w={w}, seed {seed}"),
        table: vec![
            ReportRow::scalar(n, lower, "lower/middle"),
            ReportRow::scalar(n, upper, "middle/upper"),
            ReportRow::scalar(n, corrected, "corrected: middle/(2 upper)"),
        ],
        pass: worst <= 1.0 + ULP4,
        margin: 1.0 + ULP4 - worst,
    }
}

/// `C_ρ = max(sup |ρ|, sup 1/|ρ|)` over the unit pseudo-sphere. Only `|ξ|`
/// enters `ρ`, so a fine grid in `(|ξ|^w, arg τ)` covers the sphere.
pub fn rho_constant(w: u32) -> f64 {
    let mut best = 1.0f64;
    let (ns, nphi) = (2000, 720);
    for i in 0..=ns {
        let s = i as f64 / ns as f64;
        let xi = [(1.0 - s).powf(1.0 / w as f64)];
        for j in 0..=nphi {
            let tau = Complex64::from_polar(s, -PI * j as f64 / nphi as f64);
            if let Ok(r) = rho(&xi, tau, w) {
                best = best.max(r.norm()).max(1.0 / r.norm());
            }
        }
    }
    best
}

/// Sector membership `|arg ρ| ≤ π/(2w)` and `C_ρ^{-1} ≤ |ρ|‖ξ,τ‖ ≤ C_ρ`.
pub fn check_rho_bounds(samples: usize, seed: u64, n: usize, w: u32) -> EstimateReport {
    let c_rho = rho_constant(w);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut sector, mut bound) = (0.0f64, 0.0f64);
    let half_angle = PI / (2.0 * w as f64);
    for _ in 0..samples {
        let (xi, tau) = random_covariable(&mut rng, n);
        let Ok(r) = rho(&xi, tau, w) else { continue };
        sector = sector.max(r.arg().abs() / half_angle);
        let s = r.norm() * pseudo_norm_raw(&xi, tau, w);
        bound = bound.max(s.max(1.0 / s) / c_rho);
    }
    let tol = 1.0 + 1e-12;
    let worst = sector.max(bound);
    EstimateReport {
        estimate_id: "rho-sector-bound".into(),
        grid: format!("{samples} random points, n={n}, w={w}, seed {seed}; C_rho={c_rho}"),
        table: vec![
            ReportRow::scalar(n, sector, "|arg rho| / (pi/2w)"),
            ReportRow::scalar(n, bound, "max(|rho| N, 1/(|rho| N)) / C_rho"),
        ],
        pass: worst <= tol,
        margin: tol - worst,
    }
}
