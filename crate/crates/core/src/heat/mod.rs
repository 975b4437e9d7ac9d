//! Small-time diagonal heat kernel coefficients.
//!
//! With `q_{−w−j}` the graded parametrix components of `P + ∂_t`,
//!
//! ```text
//!     k_t(x, x) ~ Σ_j t^{(j−n)/w} c_j(x),    c_j(x) = q̌_{−w−j}(x, 0, 1),
//! ```
//!
//! the power following from the kernel homogeneity law for degree `−w−j`.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{kernel_time_power, regularized_kernel_at, Quadrature};
use crate::parametrix::{parametrix_components, OperatorSpec};


/// Power of `t` multiplying `c_j` in dimension `n`.
pub fn heat_power(j: usize, n: usize, w: u32) -> f64 {
    kernel_time_power(-(w as i64) - j as i64, n, w)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeatRow {
    pub x: f64,
    pub j: usize,
    pub re: f64,
    pub im: f64,
    pub error_estimate: f64,
    pub power_of_t: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeatCoefficients {
    pub operator: String,
    pub n: usize,
    pub w: u32,
    pub xs: Vec<f64>,
    pub table: Vec<HeatRow>,
}

impl HeatCoefficients {
    pub fn get(&self, j: usize, x: f64) -> Option<&HeatRow> {
        self.table.iter().find(|r| r.j == j && r.x == x)
    }

    /// Largest `|Im c_j|`.
    pub fn max_imag(&self) -> f64 {
        self.table.iter().fold(0.0, |a, r| a.max(r.im.abs()))
    }

    /// `Σ_j t^{power(j)} Re c_j(x)`.
    pub fn truncated(&self, t: f64, x: f64) -> f64 {
        self.table
            .iter()
            .filter(|r| r.x == x)
            .map(|r| t.powf(r.power_of_t) * r.re)
            .sum()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("heat table serializes")
    }
}

/// `c_j(x)` for `j = 0..=J` at the sample points. The components of degree
/// above `−w−1` go through the `τ`-derivative regularization.
pub fn heat_coefficients(spec: &OperatorSpec, big_j: usize, xs: &[f64], quad: &Quadrature) -> Result<HeatCoefficients> {
    if spec.n != 1 {
        return Err(Error::invalid("heat coefficients are implemented for n = 1 only"));
    }
    if xs.is_empty() {
        return Err(Error::invalid("no x samples"));
    }
    let comps = parametrix_components(spec, big_j)?;
    let jobs: Vec<(usize, f64)> = (0..=big_j).flat_map(|j| xs.iter().map(move |&x| (j, x))).collect();
    let table = jobs
        .par_iter()
        .map(|&(j, x)| -> Result<HeatRow> {
            let v = regularized_kernel_at(&comps.components[j], x, 1.0, quad)?;
            Ok(HeatRow {
                x,
                j,
                re: v.re,
                im: v.im,
                error_estimate: v.error,
                power_of_t: heat_power(j, spec.n, spec.w),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(HeatCoefficients {
        operator: spec.name.clone(),
        n: spec.n,
        w: spec.w,
        xs: xs.to_vec(),
        table,
    })
}

/// Diagonal heat kernel of `−∂_x² + x²`:
/// `(4πt)^{-1/2} (2t / sinh 2t)^{1/2} exp(−x² tanh t)`.
pub fn mehler_oracle(t: f64, x: f64) -> Result<f64> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::Domain(format!("t = {t} must be positive")));
    }
    Ok(mehler_normalized(t, x) / (4.0 * std::f64::consts::PI * t).sqrt())
}

/// `(4πt)^{1/2}` times the oracle, continued to `t = 0`.
fn mehler_normalized(t: f64, x: f64) -> f64 {
    let ratio = if t.abs() < 1e-4 {
        // 2t / sinh 2t = 1 − (2t)²/6 + 7(2t)⁴/360
        let u = 4.0 * t * t;
        1.0 - u / 6.0 + 7.0 * u * u / 360.0
    } else {
        2.0 * t / (2.0 * t).sinh()
    };
    ratio.sqrt() * (-x * x * t.tanh()).exp()
}

/// Taylor coefficients `a_0..a_order` of `(4πt)^{1/2} · mehler_oracle(t, x)`,
/// from interpolation at Chebyshev nodes on `[−h, h]`.
pub fn mehler_taylor(x: f64, order: usize) -> Vec<f64> {
    let h = 0.25;
    let deg = order + 10;
    let nodes: Vec<f64> = (0..=deg)
        .map(|k| h * ((2 * k + 1) as f64 * std::f64::consts::PI / (2 * (deg + 1)) as f64).cos())
        .collect();
    let a = DMatrix::from_fn(deg + 1, deg + 1, |r, c| (nodes[r] / h).powi(c as i32));
    let b = DVector::from_iterator(deg + 1, nodes.iter().map(|&t| mehler_normalized(t, x)));
    let sol = a.lu().solve(&b).expect("Chebyshev Vandermonde system is regular");
    (0..=order).map(|i| sol[i] / h.powi(i as i32)).collect()
}
