use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::Result;
use crate::symbol::{pseudo_norm, EstimateReport, GridPolicy, ReportRow, Symbol};
use crate::symexpr::{DerivIndex, EvalPoint};

use super::Method;

/// Which derivative tuples a term of index `j` must control.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BoundKind {
    /// `l + |α| + |β| + k < j`, real `τ`.
    Cutoff,
    /// `l + |β| + k ≤ j`, closed lower half-plane.
    HalfPlane,
}

impl BoundKind {
    pub fn for_method(m: Method) -> Self {
        match m {
            Method::Cutoff => BoundKind::Cutoff,
            _ => BoundKind::HalfPlane,
        }
    }

    /// Largest box index `l` admissible for `d`, if any.
    fn max_box(self, j: usize, d: &DerivIndex) -> Option<usize> {
        let j = j as i64;
        let l = match self {
            BoundKind::Cutoff => j - 1 - d.order() as i64,
            BoundKind::HalfPlane => j - d.beta_len() as i64 - d.k as i64,
        };
        (l >= 0).then_some(l as usize)
    }
}

/// Radial shells `2^{-4} … 2^{10}·max(1, scale)` with ratio `√2`.
fn cert_shells(scale: f64) -> Vec<f64> {
    let top = 2f64.powi(10) * scale.max(1.0);
    let mut out = Vec::new();
    let mut r = 2f64.powi(-4);
    while r <= top * (1.0 + 1e-12) {
        out.push(r);
        r *= std::f64::consts::SQRT_2;
    }
    out
}

/// Box `K_l = [-(l+1)h, (l+1)h]^n` on the uniform lattice refining `x_box`.
fn box_l(policy: &GridPolicy, n: usize, l: usize) -> Vec<Vec<f64>> {
    let per = policy.x_points.max(2) - 1;
    let nodes = per * (l + 1) + 1;
    GridPolicy {
        x_half_width: policy.x_half_width * (l + 1) as f64,
        x_points: nodes,
        ..policy.clone()
    }
    .x_box(n)
}

/// Worst ratio `|∂^d term| / (2^{-j} (1+‖ξ,τ‖)^{m_j+1−|β|−wk})` per tuple.
/// Returns the report and, on failure, a description of the blocking point.
#[allow(clippy::too_many_arguments)]
pub fn certify_term(
    term: &dyn Symbol,
    j: usize,
    order: f64,
    kind: BoundKind,
    budget: u32,
    scale: f64,
    policy: &GridPolicy,
    w: u32,
) -> Result<(EstimateReport, Option<String>)> {
    let n = term.dim();
    let half = kind == BoundKind::HalfPlane;
    let sphere = policy.sphere(n, w, half);
    let shells = cert_shells(scale);
    let cov: Vec<(f64, Vec<f64>, Complex64)> = shells
        .iter()
        .flat_map(|&s| {
            sphere.iter().map(move |p| {
                let (xi, tau) = p.dilate(s, w);
                (s, xi, Complex64::new(tau.re, tau.im.min(0.0)))
            })
        })
        .collect();
    let mut table = Vec::new();
    let mut worst = (0.0f64, String::new());
    let two_j = 2f64.powi(-(j as i32));
    for d in DerivIndex::all_up_to(n, budget) {
        let Some(l) = kind.max_box(j, &d) else { continue };
        let xs = box_l(policy, n, l);
        let dt = term.derivative(&d)?;
        let expo = order + 1.0 - d.beta_len() as f64 - (w * d.k) as f64;
        let best = cov
            .par_iter()
            .map(|(s, xi, tau)| -> Result<(f64, f64)> {
                let rhs = two_j * (1.0 + pseudo_norm(xi, *tau, w)?).powf(expo);
                let mut m = 0.0f64;
                for x in &xs {
                    let v = dt.eval(&EvalPoint::new(x.clone(), xi.clone(), *tau)?)?;
                    m = m.max(v.norm() / rhs);
                    if m.is_nan() {
                        m = f64::INFINITY;
                    }
                }
                Ok((m, *s))
            })
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .fold((0.0f64, 0.0f64), |a, b| if b.0 > a.0 { b } else { a });
        if best.0 > worst.0 {
            worst = (
                best.0,
                format!(
                    "derivative (alpha={:?}, beta={:?}, k={}) on K_{l} at shell {:.4e} (ratio {:.3e})",
                    d.alpha, d.beta, d.k, best.1, best.0
                ),
            );
        }
        table.push(ReportRow {
            alpha: d.alpha.clone(),
            beta: d.beta.clone(),
            k: d.k,
            shell: None,
            c: best.0,
            label: Some(format!("K_{l}")),
        });
    }
    let pass = worst.0 <= 1.0;
    let report = EstimateReport {
        estimate_id: format!("weight-bound/j={j}"),
        grid: format!(
            "{} shells in [2^-4, {:.3e}] x {}; x-box K_l nodes refine {} per axis",
            shells.len(),
            shells.last().copied().unwrap_or(0.0),
            policy.describe(n, half),
            policy.x_points
        ),
        table,
        pass,
        margin: 1.0 - worst.0,
    };
    Ok((report, (!pass).then_some(worst.1)))
}
