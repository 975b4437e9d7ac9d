//! Truncated multivariate Taylor jets in `f64`, used to differentiate
//! smooth real functions (cut-off profiles, norms) exactly up to a fixed
//! total order.

use std::collections::HashMap;
use std::sync::Arc;

#[derive(Debug)]
pub struct JetLayout {
    nvars: usize,
    order: u32,
    indices: Vec<Vec<u32>>,
    lookup: HashMap<Vec<u32>, usize>,
    mul: Vec<(usize, usize, usize)>,
}

impl JetLayout {
    pub fn new(nvars: usize, order: u32) -> Arc<Self> {
        let mut indices = vec![Vec::new()];
        for _ in 0..nvars {
            indices = indices
                .into_iter()
                .flat_map(|p: Vec<u32>| {
                    let used: u32 = p.iter().sum();
                    (0..=order - used).map(move |a| {
                        let mut q = p.clone();
                        q.push(a);
                        q
                    })
                })
                .collect();
        }
        indices.sort_by_key(|m| (m.iter().sum::<u32>(), std::cmp::Reverse(m.clone())));
        let lookup: HashMap<Vec<u32>, usize> =
            indices.iter().enumerate().map(|(i, m)| (m.clone(), i)).collect();
        let mut mul = Vec::new();
        for (i, a) in indices.iter().enumerate() {
            for (j, b) in indices.iter().enumerate() {
                let s: Vec<u32> = a.iter().zip(b).map(|(x, y)| x + y).collect();
                if let Some(&k) = lookup.get(&s) {
                    mul.push((i, j, k));
                }
            }
        }
        Arc::new(JetLayout {
            nvars,
            order,
            indices,
            lookup,
            mul,
        })
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn index_of(&self, multi: &[u32]) -> Option<usize> {
        self.lookup.get(multi).copied()
    }

    pub fn indices(&self) -> &[Vec<u32>] {
        &self.indices
    }
}

/// `Σ_γ c_γ δ^γ` around a base point; `c_γ = ∂^γ f / γ!`.
#[derive(Clone, Debug)]
pub struct Jet {
    layout: Arc<JetLayout>,
    c: Vec<f64>,
}

impl Jet {
    pub fn constant(layout: &Arc<JetLayout>, v: f64) -> Self {
        let mut c = vec![0.0; layout.len()];
        c[0] = v;
        Jet {
            layout: layout.clone(),
            c,
        }
    }

    /// The coordinate function `v_i` at value `v`.
    pub fn variable(layout: &Arc<JetLayout>, i: usize, v: f64) -> Self {
        let mut j = Jet::constant(layout, v);
        if layout.order > 0 {
            let mut e = vec![0; layout.nvars];
            e[i] = 1;
            j.c[layout.index_of(&e).expect("unit index")] = 1.0;
        }
        j
    }

    pub fn constant_like(other: &Jet, v: f64) -> Self {
        Jet::constant(&other.layout, v)
    }

    /// Raw Taylor coefficient `∂^γ f / γ!`.
    pub fn coeff(&self, multi: &[u32]) -> f64 {
        self.layout.index_of(multi).map_or(0.0, |i| self.c[i])
    }

    pub fn value(&self) -> f64 {
        self.c[0]
    }

    /// `∂^γ f` at the base point.
    pub fn derivative(&self, multi: &[u32]) -> f64 {
        match self.layout.index_of(multi) {
            Some(i) => self.c[i] * multi.iter().map(|&a| factorial(a)).product::<f64>(),
            None => 0.0,
        }
    }

    pub fn add(&self, o: &Jet) -> Jet {
        Jet {
            layout: self.layout.clone(),
            c: self.c.iter().zip(&o.c).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn sub(&self, o: &Jet) -> Jet {
        Jet {
            layout: self.layout.clone(),
            c: self.c.iter().zip(&o.c).map(|(a, b)| a - b).collect(),
        }
    }

    pub fn scale(&self, s: f64) -> Jet {
        Jet {
            layout: self.layout.clone(),
            c: self.c.iter().map(|a| a * s).collect(),
        }
    }

    pub fn add_const(&self, s: f64) -> Jet {
        let mut j = self.clone();
        j.c[0] += s;
        j
    }

    pub fn mul(&self, o: &Jet) -> Jet {
        let mut c = vec![0.0; self.c.len()];
        for &(i, j, k) in &self.layout.mul {
            c[k] += self.c[i] * o.c[j];
        }
        Jet {
            layout: self.layout.clone(),
            c,
        }
    }

    /// `f(self)` given the Taylor coefficients `f^{(i)}(a)/i!` at the value `a`.
    pub fn compose(&self, taylor: &[f64]) -> Jet {
        let mut delta = self.clone();
        delta.c[0] = 0.0;
        let mut out = Jet::constant(&self.layout, taylor.first().copied().unwrap_or(0.0));
        let mut power = Jet::constant(&self.layout, 1.0);
        for t in taylor.iter().skip(1).take(self.layout.order as usize) {
            power = power.mul(&delta);
            out = out.add(&power.scale(*t));
        }
        out
    }

    pub fn recip(&self) -> Jet {
        let a = self.value();
        let taylor: Vec<f64> = (0..=self.layout.order as i32)
            .map(|i| (-1f64).powi(i) / a.powi(i + 1))
            .collect();
        self.compose(&taylor)
    }

    pub fn exp(&self) -> Jet {
        let e = self.value().exp();
        let taylor: Vec<f64> = (0..=self.layout.order).map(|i| e / factorial(i)).collect();
        self.compose(&taylor)
    }

    /// `self^p` for a positive base value.
    pub fn powf(&self, p: f64) -> Jet {
        let a = self.value();
        let mut taylor = Vec::with_capacity(self.layout.order as usize + 1);
        let mut binom = 1.0;
        for i in 0..=self.layout.order {
            taylor.push(binom * a.powf(p - i as f64));
            binom *= (p - i as f64) / (i as f64 + 1.0);
        }
        self.compose(&taylor)
    }

    pub fn is_zero(&self) -> bool {
        self.c.iter().all(|v| *v == 0.0)
    }
}

pub(crate) fn factorial(k: u32) -> f64 {
    (1..=k).map(f64::from).product()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layout_size() {
        assert_eq!(JetLayout::new(2, 3).len(), 10);
        assert_eq!(JetLayout::new(3, 2).len(), 10);
    }

    #[test]
    fn derivatives_of_exp_product() {
        // f(x, y) = exp(x y) at (0.5, 2): ∂_x f = y e^{xy}, ∂_x∂_y f = (1 + xy) e^{xy}.
        let l = JetLayout::new(2, 3);
        let x = Jet::variable(&l, 0, 0.5);
        let y = Jet::variable(&l, 1, 2.0);
        let f = x.mul(&y).exp();
        let e = 1f64.exp();
        assert!((f.derivative(&[1, 0]) - 2.0 * e).abs() < 1e-12);
        assert!((f.derivative(&[1, 1]) - 2.0 * e).abs() < 1e-12);
        assert!((f.derivative(&[0, 2]) - 0.25 * e).abs() < 1e-12);
    }

    #[test]
    fn powf_and_recip() {
        let l = JetLayout::new(1, 4);
        let x = Jet::variable(&l, 0, 2.0);
        let f = x.powf(1.5);
        assert!((f.derivative(&[1]) - 1.5 * 2f64.sqrt()).abs() < 1e-12);
        assert!((f.derivative(&[3]) - 1.5 * 0.5 * -0.5 * 2f64.powf(-1.5)).abs() < 1e-12);
        let g = x.recip();
        assert!((g.derivative(&[4]) - 24.0 / 32.0).abs() < 1e-12);
    }
}
