//! Space-time kernels of symbols in one space dimension:
//!
//! ```text
//!     k(y, t) = (2π)^{-2} ∬ e^{i(yξ + tτ)} q(x, ξ, τ) dξ dτ,
//! ```
//!
//! with the `τ` integral taken along `Im τ = −σ`. Panels of Gauss–Legendre
//! nodes cover `|Re τ| ≤ S(t)`, the oscillatory tails beyond `S(t)` are
//! summed by repeated integration by parts, and the quadrature error is
//! estimated by repeating the computation with a coarser rule.
//!
//! A symbol homogeneous of degree `m` has a kernel with
//! `k(x, 0, t) = t^{-(m+n+w)/w} k(x, 0, 1)` for `t > 0`: substituting
//! `ξ = t^{-1/w} η`, `τ = t^{-1} s` in the integral gives the Jacobian
//! `t^{-(n+w)/w}` and pulls `t^{-m/w}` out of `q`.

use std::num::NonZeroUsize;

use gauss_quad::GaussLegendre;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::symbol::{HomogeneousSymbol, Symbol, SymbolRef};
use crate::symexpr::{DerivIndex, EvalPoint};

#[cfg(test)]
mod tests;

/// Exponent of `t` in `k(x, 0, t) = t^p k(x, 0, 1)` for degree `m`.
pub fn kernel_time_power(m: i64, n: usize, w: u32) -> f64 {
    -((m + n as i64 + w as i64) as f64) / w as f64
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Quadrature {
    /// Gauss–Legendre nodes per panel.
    pub nodes: usize,
    /// Truncation of `Re τ` at `S(t) = reach / |t|`.
    pub reach: f64,
    /// Integration-by-parts terms for the `τ` tails.
    pub tail_terms: usize,
    /// The `ξ` range is `|ξ|^w ≤ xi_decay / t_min` unless `xi_extent` is set.
    pub xi_decay: f64,
    pub xi_extent: Option<f64>,
    /// Panel width relative to the distance from the origin.
    pub growth: f64,
    /// Fail when the estimated error exceeds this.
    pub tol: Option<f64>,
}

impl Default for Quadrature {
    fn default() -> Self {
        Quadrature {
            nodes: 16,
            reach: 64.0,
            tail_terms: 8,
            xi_decay: 40.0,
            xi_extent: None,
            growth: 0.25,
            tol: None,
        }
    }
}

impl Quadrature {
    /// The reference rule for the error estimate.
    fn coarse(&self) -> Quadrature {
        Quadrature {
            nodes: (self.nodes * 3).div_ceil(4).max(2),
            reach: self.reach * 0.75,
            xi_decay: self.xi_decay * 0.75,
            xi_extent: self.xi_extent.map(|l| l * 0.9),
            growth: self.growth * 4.0 / 3.0,
            ..self.clone()
        }
    }

    fn validate(&self) -> Result<()> {
        if self.nodes < 2 || !(self.reach > 0.0) || !(self.xi_decay > 0.0) || !(self.growth > 0.0) {
            return Err(Error::invalid("quadrature parameters must be positive"));
        }
        if let Some(l) = self.xi_extent {
            if !(l > 0.0) {
                return Err(Error::invalid("xi_extent must be positive"));
            }
        }
        Ok(())
    }
}

/// Sample locations of a kernel slice.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelGrid {
    pub x: f64,
    pub ys: Vec<f64>,
    pub ts: Vec<f64>,
}

impl KernelGrid {
    pub fn new(x: f64, ys: Vec<f64>, ts: Vec<f64>) -> Result<Self> {
        if ys.is_empty() || ts.is_empty() {
            return Err(Error::invalid("kernel grid needs at least one y and one t"));
        }
        if ys.iter().chain(&ts).any(|v| !v.is_finite()) {
            return Err(Error::invalid("kernel grid values must be finite"));
        }
        if ts.contains(&0.0) {
            return Err(Error::Domain("t = 0 is not resolved by the contour quadrature".into()));
        }
        Ok(KernelGrid { x, ys, ts })
    }

    /// `count` evenly spaced times in `[a, b]`, skipping `t = 0`.
    pub fn linspace(a: f64, b: f64, count: usize) -> Vec<f64> {
        if count < 2 {
            return vec![a];
        }
        (0..count)
            .map(|i| a + (b - a) * i as f64 / (count - 1) as f64)
            .filter(|&t| t != 0.0)
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelSample {
    pub y: f64,
    pub t: f64,
    pub re: f64,
    pub im: f64,
    pub error: f64,
}

impl KernelSample {
    pub fn value(&self) -> Complex64 {
        Complex64::new(self.re, self.im)
    }
}

/// `k(x, y, t)` on a grid plus what is needed to reproduce it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelSlice {
    pub x: f64,
    pub w: u32,
    pub sigma: f64,
    pub xi_extent: f64,
    pub quadrature: Quadrature,
    pub max_error: f64,
    pub samples: Vec<KernelSample>,
}

impl KernelSlice {
    pub fn value_at(&self, y: f64, t: f64) -> Option<Complex64> {
        self.samples
            .iter()
            .find(|s| s.y == y && s.t == t)
            .map(KernelSample::value)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("kernel slice serializes")
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("y,t,re,im,sigma,error\n");
        for s in &self.samples {
            out.push_str(&format!(
                "{:e},{:e},{:e},{:e},{:e},{:e}\n",
                s.y, s.t, s.re, s.im, self.sigma, s.error
            ));
        }
        out
    }
}

/// Panel boundaries `0 = b_0 < b_1 < …` reaching `extent`, with widths
/// `growth · (b + s0)` capped at `cap`.
fn graded_panels(extent: f64, s0: f64, growth: f64, cap: f64) -> Vec<f64> {
    let mut b = vec![0.0];
    let mut a = 0.0f64;
    while a < extent {
        a += (growth * (a + s0)).min(cap);
        b.push(a);
    }
    b
}

/// Nodes and weights on `[0, b_last]`, with the running node count at the
/// end of every panel.
fn panel_nodes(bounds: &[f64], rule: &GaussLegendre) -> (Vec<f64>, Vec<f64>, Vec<usize>) {
    let mut nodes = Vec::new();
    let mut weights = Vec::new();
    let mut ends = Vec::with_capacity(bounds.len());
    ends.push(0);
    for p in bounds.windows(2) {
        let (a, b) = (p[0], p[1]);
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        for &(z, wz) in rule.as_node_weight_pairs() {
            nodes.push(mid + half * z);
            weights.push(half * wz);
        }
        ends.push(nodes.len());
    }
    (nodes, weights, ends)
}

fn eval_at(q: &dyn Symbol, x: f64, xi: f64, tau: Complex64) -> Result<Complex64> {
    q.eval(&EvalPoint::d1(x, xi, tau)?)
}

/// `|q|` must fall off along `Re τ` for the oscillatory `τ` integral.
fn check_decay(q: &dyn Symbol, x: f64, sigma: f64, s: f64) -> Result<()> {
    for sign in [1.0, -1.0] {
        let a = eval_at(q, x, 0.0, Complex64::new(sign * s, -sigma))?.norm();
        let b = eval_at(q, x, 0.0, Complex64::new(sign * 2.0 * s, -sigma))?.norm();
        if a > 1e-300 && b > 0.75 * a {
            return Err(Error::InsufficientDecay(format!(
                "|q| decays by only {:.3} between |Re τ| = {s:e} and {:e}",
                b / a,
                2.0 * s
            )));
        }
    }
    Ok(())
}

fn kernel_once(
    q: &dyn Symbol,
    taus: &[SymbolRef],
    w: u32,
    grid: &KernelGrid,
    sigma: f64,
    quad: &Quadrature,
) -> Result<(f64, Vec<Complex64>)> {
    let x = grid.x;
    let abs_t: Vec<f64> = grid.ts.iter().map(|t| t.abs()).collect();
    let t_min = abs_t.iter().cloned().fold(f64::INFINITY, f64::min);
    let t_max = abs_t.iter().cloned().fold(0.0, f64::max);
    let t_pos_min = grid
        .ts
        .iter()
        .cloned()
        .filter(|&t| t > 0.0)
        .fold(f64::INFINITY, f64::min);
    let t_ref = if t_pos_min.is_finite() { t_pos_min } else { t_min };
    let xi_extent = quad
        .xi_extent
        .unwrap_or_else(|| (quad.xi_decay / t_ref).powf(1.0 / w as f64));
    let y_max = grid.ys.iter().fold(0.0f64, |a, y| a.max(y.abs()));

    let rule = GaussLegendre::new(NonZeroUsize::new(quad.nodes).expect("nodes >= 2"));
    let s_max = quad.reach / t_min;
    let tau_bounds = graded_panels(s_max, sigma.max(0.5), quad.growth, std::f64::consts::PI / t_max);
    let (s_nodes, s_weights, s_ends) = panel_nodes(&tau_bounds, &rule);
    // Per time: the panel at which the τ range is truncated.
    let cut: Vec<usize> = abs_t
        .iter()
        .map(|&at| {
            let target = quad.reach / at;
            tau_bounds.iter().position(|&b| b >= target).unwrap_or(tau_bounds.len() - 1)
        })
        .collect();

    let xi_cap = if y_max > 0.0 { std::f64::consts::PI / y_max } else { f64::INFINITY };
    let xi_bounds = graded_panels(xi_extent, 1.0, quad.growth, xi_cap);
    let (xi_half, xi_w_half, _) = panel_nodes(&xi_bounds, &rule);
    let xis: Vec<(f64, f64)> = xi_half
        .iter()
        .zip(&xi_w_half)
        .flat_map(|(&v, &wv)| [(v, wv), (-v, wv)])
        .collect();

    let nt = grid.ts.len();
    let rows: Vec<Vec<Complex64>> = xis
        .par_iter()
        .map(|&(xi, _)| -> Result<Vec<Complex64>> {
            let last = *s_ends.last().unwrap_or(&0);
            let mut gp = Vec::with_capacity(last);
            let mut gm = Vec::with_capacity(last);
            for &s in &s_nodes {
                gp.push(eval_at(q, x, xi, Complex64::new(s, -sigma))?);
                gm.push(eval_at(q, x, xi, Complex64::new(-s, -sigma))?);
            }
            let mut row = Vec::with_capacity(nt);
            for (it, &t) in grid.ts.iter().enumerate() {
                let p = cut[it];
                let big_s = tau_bounds[p];
                let mut acc = Complex64::new(0.0, 0.0);
                for k in 0..s_ends[p] {
                    let (sn, cs) = (t * s_nodes[k]).sin_cos();
                    let e = Complex64::new(cs, sn);
                    acc += s_weights[k] * (e * gp[k] + e.conj() * gm[k]);
                }
                let it_c = Complex64::new(0.0, t);
                let (sn, cs) = (t * big_s).sin_cos();
                let e = Complex64::new(cs, sn);
                let mut denom = it_c;
                for (j, dq) in taus.iter().enumerate() {
                    let up = eval_at(dq.as_ref(), x, xi, Complex64::new(big_s, -sigma))?;
                    let lo = eval_at(dq.as_ref(), x, xi, Complex64::new(-big_s, -sigma))?;
                    let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
                    acc += (-sign * e * up + sign * e.conj() * lo) / denom;
                    denom *= it_c;
                }
                row.push(acc * (t * sigma).exp());
            }
            Ok(row)
        })
        .collect::<Result<_>>()?;

    let norm = 1.0 / (4.0 * std::f64::consts::PI * std::f64::consts::PI);
    let mut out = Vec::with_capacity(grid.ys.len() * nt);
    for &y in &grid.ys {
        for it in 0..nt {
            let mut acc = Complex64::new(0.0, 0.0);
            for (row, &(xi, wxi)) in rows.iter().zip(&xis) {
                let (sn, cs) = (y * xi).sin_cos();
                acc += wxi * Complex64::new(cs, sn) * row[it];
            }
            out.push(acc * norm);
        }
    }
    Ok((xi_extent, out))
}

/// Kernel of `q` (dimension one) on `grid` along the contour `Im τ = −σ`.
///
/// `σ > 0` needs a symbol holomorphic in the lower half-plane.
pub fn inverse_fourier_kernel(
    q: &dyn Symbol,
    w: u32,
    grid: &KernelGrid,
    sigma: f64,
    quad: &Quadrature,
) -> Result<KernelSlice> {
    if q.dim() != 1 {
        return Err(Error::invalid("kernel transforms are implemented for n = 1 only"));
    }
    if !(sigma >= 0.0) || !sigma.is_finite() {
        return Err(Error::Domain(format!("contour shift σ = {sigma} must be >= 0")));
    }
    if sigma > 0.0 && !q.tau_analytic() {
        return Err(Error::Domain(
            "symbol is not holomorphic in τ; use the real contour σ = 0".into(),
        ));
    }
    quad.validate()?;
    let t_min = grid.ts.iter().fold(f64::INFINITY, |a, t| a.min(t.abs()));
    check_decay(q, grid.x, sigma, quad.reach / t_min)?;

    let mut taus = Vec::new();
    let mut current: Option<SymbolRef> = None;
    for j in 0..quad.tail_terms {
        let next = match (&current, j) {
            (_, 0) => q.derivative(&DerivIndex::zero(1)),
            (Some(prev), _) => prev.derivative(&DerivIndex { alpha: vec![0], beta: vec![0], k: 1 }),
            (None, _) => break,
        };
        match next {
            Ok(s) => {
                taus.push(s.clone());
                current = Some(s);
            }
            Err(_) => break,
        }
    }

    let (xi_extent, fine) = kernel_once(q, &taus, w, grid, sigma, quad)?;
    let (_, coarse) = kernel_once(q, &taus, w, grid, sigma, &quad.coarse())?;
    let mut samples = Vec::with_capacity(fine.len());
    let mut max_error = 0.0f64;
    let mut idx = 0;
    for &y in &grid.ys {
        for &t in &grid.ts {
            let err = (fine[idx] - coarse[idx]).norm();
            max_error = max_error.max(err);
            samples.push(KernelSample { y, t, re: fine[idx].re, im: fine[idx].im, error: err });
            idx += 1;
        }
    }
    if let Some(tol) = quad.tol {
        if max_error > tol {
            return Err(Error::Resolution(format!(
                "estimated quadrature error {max_error:e} exceeds tolerance {tol:e}"
            )));
        }
    }
    Ok(KernelSlice {
        x: grid.x,
        w,
        sigma,
        xi_extent,
        quadrature: quad.clone(),
        max_error,
        samples,
    })
}

/// Outcome of the negative-time vanishing test.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VolterraReport {
    pub window: (f64, f64),
    pub tol: f64,
    pub max_negative: f64,
    pub max_positive: f64,
    /// `tol · max_positive`.
    pub threshold: f64,
    /// `max_negative / threshold`.
    pub excess: f64,
    pub quadrature_error: f64,
    pub pass: bool,
}

/// Pass iff `max_{t ∈ window} |k| ≤ tol · max_{t > 0} |k|`.
pub fn volterra_check(k: &KernelSlice, window: (f64, f64), tol: f64) -> Result<VolterraReport> {
    let (a, b) = window;
    if !(a <= b) || b >= 0.0 {
        return Err(Error::invalid(format!("window [{a}, {b}] must be a negative-time interval")));
    }
    let inside: Vec<f64> = k
        .samples
        .iter()
        .filter(|s| s.t >= a && s.t <= b)
        .map(|s| s.value().norm())
        .collect();
    if inside.is_empty() {
        return Err(Error::invalid(format!("no kernel samples in the window [{a}, {b}]")));
    }
    let max_negative = inside.into_iter().fold(0.0, f64::max);
    let max_positive = k
        .samples
        .iter()
        .filter(|s| s.t > 0.0)
        .map(|s| s.value().norm())
        .fold(0.0, f64::max);
    let threshold = tol * max_positive;
    let excess = if max_negative == 0.0 { 0.0 } else { max_negative / threshold };
    Ok(VolterraReport {
        window,
        tol,
        max_negative,
        max_positive,
        threshold,
        excess,
        quadrature_error: k.max_error,
        pass: max_negative <= threshold,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelValue {
    pub re: f64,
    pub im: f64,
    pub error: f64,
}

impl KernelValue {
    pub fn value(&self) -> Complex64 {
        Complex64::new(self.re, self.im)
    }
}

/// Contour shift used for homogeneous symbols.
pub const HOMOGENEOUS_SIGMA: f64 = 1.0;

/// `k_m(x, 0, t)` for `m ≤ −w−1`, where the integral converges absolutely
/// on the shifted contour.
pub fn homogeneous_kernel_at(
    q: &HomogeneousSymbol,
    x: f64,
    t: f64,
    quad: &Quadrature,
) -> Result<KernelValue> {
    let w = q.w() as i64;
    if q.degree() > -w - 1 {
        return Err(Error::InsufficientDecay(format!(
            "degree {} > -w-1 = {}; use regularized_kernel_at",
            q.degree(),
            -w - 1
        )));
    }
    point_kernel(q, x, t, 0, quad)
}

/// `k_m(x, 0, t)` for any degree: `∂_τ^k q` has kernel `(−it)^k k`, so the
/// kernel of `q` is recovered from that of `∂_τ^k q` with `m − kw ≤ −w−1`.
pub fn regularized_kernel_at(
    q: &HomogeneousSymbol,
    x: f64,
    t: f64,
    quad: &Quadrature,
) -> Result<KernelValue> {
    let w = q.w() as i64;
    let excess = q.degree() + w + 1;
    let k = if excess > 0 { (excess + w - 1) / w } else { 0 };
    point_kernel(q, x, t, k as u32, quad)
}

fn point_kernel(q: &HomogeneousSymbol, x: f64, t: f64, k: u32, quad: &Quadrature) -> Result<KernelValue> {
    if q.dim() != 1 {
        return Err(Error::invalid("kernel transforms are implemented for n = 1 only"));
    }
    if !(t > 0.0) {
        return Err(Error::Domain(format!("homogeneous kernels are evaluated at t > 0, got {t}")));
    }
    let expr = q.expr().derivative(&DerivIndex { alpha: vec![0], beta: vec![0], k });
    if expr.is_zero() {
        return Ok(KernelValue { re: 0.0, im: 0.0, error: 0.0 });
    }
    let sym = crate::symbol::ExprSymbol::new(expr);
    let grid = KernelGrid::new(x, vec![0.0], vec![t])?;
    let slice = inverse_fourier_kernel(&sym, q.w(), &grid, HOMOGENEOUS_SIGMA, quad)?;
    let scale = Complex64::new(0.0, -t).powi(k as i32);
    let v = slice.samples[0].value() / scale;
    Ok(KernelValue { re: v.re, im: v.im, error: slice.max_error / scale.norm() })
}
