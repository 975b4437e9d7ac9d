use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{SymExpr, Var};
use crate::error::{Error, Result};

/// A point `(x, ξ, τ)` with `τ` in the closed lower half-plane.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalPoint {
    pub x: Vec<f64>,
    pub xi: Vec<f64>,
    pub tau: Complex64,
}

impl EvalPoint {
    pub fn new(x: Vec<f64>, xi: Vec<f64>, tau: Complex64) -> Result<Self> {
        if x.len() != xi.len() {
            return Err(Error::invalid("x and xi must have the same length"));
        }
        if tau.im > 0.0 {
            return Err(Error::Domain(format!("Im tau = {} > 0", tau.im)));
        }
        Ok(EvalPoint { x, xi, tau })
    }

    /// One-dimensional shorthand.
    pub fn d1(x: f64, xi: f64, tau: Complex64) -> Result<Self> {
        EvalPoint::new(vec![x], vec![xi], tau)
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }

    pub fn get(&self, v: Var) -> Complex64 {
        match v {
            Var::X(i) => Complex64::new(self.x[i], 0.0),
            Var::Xi(i) => Complex64::new(self.xi[i], 0.0),
            Var::Tau => self.tau,
        }
    }

    /// Same point with one real coordinate (or `Re τ` / `Im τ`) moved by `h`.
    #[cfg(test)]
    pub(crate) fn nudged(&self, v: Var, h: Complex64) -> EvalPoint {
        let mut p = self.clone();
        match v {
            Var::X(i) => p.x[i] += h.re,
            Var::Xi(i) => p.xi[i] += h.re,
            Var::Tau => p.tau += h,
        }
        p
    }
}

#[derive(Clone, Debug)]
enum ThetaPow {
    Int(i32),
    Frac(f64),
}

#[derive(Clone, Debug)]
struct Term {
    c: Complex64,
    x: Vec<(usize, i32)>,
    xi: Vec<(usize, i32)>,
    tau: i32,
    theta: Vec<(usize, ThetaPow)>,
}

/// Flattened floating-point form of a [`SymExpr`] for fast repeated evaluation.
#[derive(Clone, Debug)]
pub struct CompiledExpr {
    n: usize,
    terms: Vec<Term>,
    bases: Vec<CompiledExpr>,
}

impl CompiledExpr {
    pub fn new(e: &SymExpr) -> Self {
        let bases_sym = e.bases();
        let bases = bases_sym.iter().map(|b| CompiledExpr::new(b.poly())).collect();
        let terms = e
            .terms
            .iter()
            .map(|(m, c)| {
                let pick = |v: &Vec<u32>| {
                    v.iter()
                        .enumerate()
                        .filter(|(_, &p)| p > 0)
                        .map(|(i, &p)| (i, p as i32))
                        .collect::<Vec<_>>()
                };
                Term {
                    c: c.to_c64(),
                    x: pick(&m.x),
                    xi: pick(&m.xi),
                    tau: m.tau as i32,
                    theta: m
                        .theta
                        .iter()
                        .map(|(b, r)| {
                            let idx = bases_sym.iter().position(|s| s == b).unwrap();
                            let p = if r.is_integer() {
                                ThetaPow::Int(r.to_integer() as i32)
                            } else {
                                ThetaPow::Frac(*r.numer() as f64 / *r.denom() as f64)
                            };
                            (idx, p)
                        })
                        .collect(),
                }
            })
            .collect();
        CompiledExpr { n: e.dim(), terms, bases }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn eval(&self, pt: &EvalPoint) -> Result<Complex64> {
        self.eval_raw(&pt.x, &pt.xi, pt.tau)
    }

    /// Evaluation without the half-plane check (the algebra itself is defined
    /// wherever no negative `Θ` power hits zero).
    pub fn eval_raw(&self, x: &[f64], xi: &[f64], tau: Complex64) -> Result<Complex64> {
        let itau = Complex64::new(-tau.im, tau.re);
        let mut thetas = [Complex64::new(0.0, 0.0); 4];
        let mut heap = Vec::new();
        let thetas: &[Complex64] = if self.bases.len() <= 4 {
            for (slot, b) in thetas.iter_mut().zip(&self.bases) {
                *slot = b.eval_raw(x, xi, tau)? + itau;
            }
            &thetas[..self.bases.len()]
        } else {
            for b in &self.bases {
                heap.push(b.eval_raw(x, xi, tau)? + itau);
            }
            &heap
        };
        let mut acc = Complex64::new(0.0, 0.0);
        for t in &self.terms {
            let mut v = t.c;
            let mut real = 1.0;
            for &(i, p) in &t.x {
                real *= x[i].powi(p);
            }
            for &(i, p) in &t.xi {
                real *= xi[i].powi(p);
            }
            v *= real;
            if t.tau > 0 {
                v *= tau.powi(t.tau);
            }
            for (i, p) in &t.theta {
                let th = thetas[*i];
                v *= match p {
                    ThetaPow::Int(k) => {
                        if th.norm_sqr() == 0.0 {
                            return Err(Error::Pole);
                        }
                        th.powi(*k)
                    }
                    ThetaPow::Frac(e) => {
                        if th.norm_sqr() == 0.0 {
                            if *e < 0.0 {
                                return Err(Error::Pole);
                            }
                            Complex64::new(0.0, 0.0)
                        } else {
                            th.powf(*e)
                        }
                    }
                };
            }
            acc += v;
        }
        Ok(acc)
    }
}
