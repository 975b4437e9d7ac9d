//! Exact expression algebra for Volterra symbols.
//!
//! A [`SymExpr`] is a finite sum of monomials
//!
//! ```text
//!     c · x^a · ξ^b · τ^k · Π_b Θ_b^{e_b}
//! ```
//!
//! where `c` is an exact complex rational, `Θ_b = b(x, ξ) + iτ` for a
//! polynomial base `b`, and each exponent `e_b` is rational. The canonical
//! form keeps every exponent `e_b` outside the positive integers (those are
//! expanded into polynomials) and never mixes `τ` with a `Θ` power in the same
//! monomial (`iτ = Θ_b − b` is substituted). With a single base this makes
//! the representation unique, so structural equality decides equality of
//! symbols.

mod eval;
mod parse;
mod print;

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::{BigRational, Rational64};
use num_traits::{One, Signed, Zero};

use crate::coeff::Coeff;
use crate::error::{Error, Result};

pub use eval::{CompiledExpr, EvalPoint};
pub use parse::parse_expr;

/// A differentiation / evaluation variable. Indices are zero based.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Var {
    X(usize),
    Xi(usize),
    Tau,
}

/// Polynomial base `b(x, ξ)` of a `Θ_b = b + iτ` power.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Base(Arc<SymExpr>);

impl Base {
    pub fn new(poly: SymExpr) -> Result<Self> {
        if !poly.is_polynomial() || poly.contains_tau() {
            return Err(Error::invalid(
                "THETA base must be a polynomial in x and xi only",
            ));
        }
        Ok(Base(Arc::new(poly)))
    }

    pub fn poly(&self) -> &SymExpr {
        &self.0
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Monomial {
    pub x: Vec<u32>,
    pub xi: Vec<u32>,
    pub tau: u32,
    /// Sorted by base, exponents nonzero.
    pub theta: Vec<(Base, Rational64)>,
}

impl Monomial {
    fn unit(n: usize) -> Self {
        Monomial {
            x: vec![0; n],
            xi: vec![0; n],
            tau: 0,
            theta: Vec::new(),
        }
    }

    fn times(&self, other: &Monomial) -> Monomial {
        let mut out = self.clone();
        for (a, b) in out.x.iter_mut().zip(&other.x) {
            *a += b;
        }
        for (a, b) in out.xi.iter_mut().zip(&other.xi) {
            *a += b;
        }
        out.tau += other.tau;
        for (base, e) in &other.theta {
            out.add_theta(base, *e);
        }
        out
    }

    fn add_theta(&mut self, base: &Base, e: Rational64) {
        match self.theta.binary_search_by(|(b, _)| b.cmp(base)) {
            Ok(i) => {
                let sum = self.theta[i].1 + e;
                if sum.is_zero() {
                    self.theta.remove(i);
                } else {
                    self.theta[i].1 = sum;
                }
            }
            Err(i) => {
                if !e.is_zero() {
                    self.theta.insert(i, (base.clone(), e));
                }
            }
        }
    }

    fn is_canonical(&self) -> bool {
        let positive_int = self
            .theta
            .iter()
            .any(|(_, e)| e.is_integer() && e.is_positive());
        !positive_int && !(self.tau > 0 && !self.theta.is_empty())
    }

    fn power_of(&self, v: Var) -> u32 {
        match v {
            Var::X(i) => self.x[i],
            Var::Xi(i) => self.xi[i],
            Var::Tau => self.tau,
        }
    }

    fn power_of_mut(&mut self, v: Var) -> &mut u32 {
        match v {
            Var::X(i) => &mut self.x[i],
            Var::Xi(i) => &mut self.xi[i],
            Var::Tau => &mut self.tau,
        }
    }
}

/// Canonical symbolic expression over `(x_1..x_n, ξ_1..ξ_n, τ)`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SymExpr {
    n: usize,
    terms: BTreeMap<Monomial, Coeff>,
}

fn rat_coeff(r: Rational64) -> Coeff {
    Coeff::real(BigRational::new(
        BigInt::from(*r.numer()),
        BigInt::from(*r.denom()),
    ))
}

impl SymExpr {
    pub fn zero(n: usize) -> Self {
        SymExpr {
            n,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(n: usize, c: Coeff) -> Self {
        let mut e = SymExpr::zero(n);
        e.insert(Monomial::unit(n), c);
        e
    }

    pub fn one(n: usize) -> Self {
        SymExpr::constant(n, Coeff::one())
    }

    pub fn var(n: usize, v: Var) -> Self {
        let mut m = Monomial::unit(n);
        *m.power_of_mut(v) = 1;
        let mut e = SymExpr::zero(n);
        e.insert(m, Coeff::one());
        e
    }

    /// `Θ_base^exponent` in canonical form.
    pub fn theta(n: usize, base: &Base, exponent: Rational64) -> Self {
        let mut m = Monomial::unit(n);
        m.add_theta(base, exponent);
        reduce(n, m, Coeff::one())
    }

    /// `|ξ|^w = (Σ ξ_i²)^{w/2}` for even `w`.
    pub fn euclidean_power(n: usize, w: u32) -> Self {
        let mut sq = SymExpr::zero(n);
        for i in 0..n {
            sq = sq.add(&SymExpr::var(n, Var::Xi(i)).pow(2));
        }
        sq.pow(w / 2)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Coeff)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn is_polynomial(&self) -> bool {
        self.terms.keys().all(|m| m.theta.is_empty())
    }

    pub fn contains_tau(&self) -> bool {
        self.terms.keys().any(|m| m.tau > 0)
    }

    /// Constant value if the expression has no variable dependence.
    pub fn as_constant(&self) -> Option<Coeff> {
        match self.terms.len() {
            0 => Some(Coeff::zero()),
            1 => {
                let (m, c) = self.terms.iter().next().unwrap();
                (*m == Monomial::unit(self.n)).then(|| c.clone())
            }
            _ => None,
        }
    }

    /// All distinct `Θ` bases occurring in the expression.
    pub fn bases(&self) -> Vec<Base> {
        let mut out: Vec<Base> = Vec::new();
        for m in self.terms.keys() {
            for (b, _) in &m.theta {
                if !out.contains(b) {
                    out.push(b.clone());
                }
            }
        }
        out.sort();
        out
    }

    fn insert(&mut self, m: Monomial, c: Coeff) {
        if c.is_zero() {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.terms.entry(m) {
            Entry::Vacant(v) => {
                v.insert(c);
            }
            Entry::Occupied(mut o) => {
                *o.get_mut() += &c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    fn absorb(&mut self, other: SymExpr) {
        for (m, c) in other.terms {
            self.insert(m, c);
        }
    }

    fn check_dim(&self, other: &SymExpr) {
        assert_eq!(self.n, other.n, "dimension mismatch in symbol algebra");
    }

    pub fn add(&self, other: &SymExpr) -> SymExpr {
        self.check_dim(other);
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.insert(m.clone(), c.clone());
        }
        out
    }

    pub fn sub(&self, other: &SymExpr) -> SymExpr {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> SymExpr {
        self.scale(&Coeff::int(-1))
    }

    pub fn scale(&self, c: &Coeff) -> SymExpr {
        let mut out = SymExpr::zero(self.n);
        for (m, v) in &self.terms {
            out.insert(m.clone(), v * c);
        }
        out
    }

    pub fn mul(&self, other: &SymExpr) -> SymExpr {
        self.check_dim(other);
        let mut out = SymExpr::zero(self.n);
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                let m = ma.times(mb);
                let c = ca * cb;
                if m.is_canonical() {
                    out.insert(m, c);
                } else {
                    out.absorb(reduce(self.n, m, c));
                }
            }
        }
        out
    }

    pub fn pow(&self, k: u32) -> SymExpr {
        let mut acc = SymExpr::one(self.n);
        for _ in 0..k {
            acc = acc.mul(self);
        }
        acc
    }

    /// Exact partial derivative.
    pub fn differentiate(&self, v: Var) -> SymExpr {
        let n = self.n;
        let mut out = SymExpr::zero(n);
        for (m, c) in &self.terms {
            let p = m.power_of(v);
            if p > 0 {
                let mut dm = m.clone();
                *dm.power_of_mut(v) -= 1;
                out.absorb(reduce(n, dm, c * &Coeff::int(p as i64)));
            }
            for (base, e) in &m.theta {
                let d_theta = match v {
                    Var::Tau => SymExpr::constant(n, Coeff::i()),
                    _ => base.poly().differentiate(v),
                };
                if d_theta.is_zero() {
                    continue;
                }
                let mut dm = m.clone();
                dm.add_theta(base, -Rational64::one());
                let head = reduce(n, dm, c * &rat_coeff(*e));
                out.absorb(head.mul(&d_theta));
            }
        }
        out
    }

    /// Repeated differentiation `∂_x^α ∂_ξ^β ∂_τ^k`.
    pub fn derivative(&self, d: &DerivIndex) -> SymExpr {
        let mut e = self.clone();
        for (i, &a) in d.alpha.iter().enumerate() {
            for _ in 0..a {
                e = e.differentiate(Var::X(i));
            }
        }
        for (i, &b) in d.beta.iter().enumerate() {
            for _ in 0..b {
                e = e.differentiate(Var::Xi(i));
            }
        }
        for _ in 0..d.k {
            e = e.differentiate(Var::Tau);
        }
        e
    }

    /// `q^{(T)}(x, ξ, τ) = q(x, ξ, τ − iT)`: every base `b` becomes `b + T`
    /// and free powers of `τ` are expanded around `τ − iT`.
    pub fn shift_tau(&self, t: &Coeff) -> SymExpr {
        let n = self.n;
        let tau_shifted = SymExpr::var(n, Var::Tau).sub(&SymExpr::constant(n, &Coeff::i() * t));
        let mut out = SymExpr::zero(n);
        for (m, c) in &self.terms {
            let mut rest = Monomial::unit(n);
            rest.x = m.x.clone();
            rest.xi = m.xi.clone();
            let mut term = SymExpr::zero(n);
            term.insert(rest, c.clone());
            term = term.mul(&tau_shifted.pow(m.tau));
            for (base, e) in &m.theta {
                let moved = Base(Arc::new(base.poly().add(&SymExpr::constant(n, t.clone()))));
                term = term.mul(&SymExpr::theta(n, &moved, *e));
            }
            out.absorb(term);
        }
        out
    }

    /// Replace every base equal to `from` by `to`.
    pub fn rebase(&self, from: &Base, to: &Base) -> SymExpr {
        let n = self.n;
        let mut out = SymExpr::zero(n);
        for (m, c) in &self.terms {
            let mut rest = m.clone();
            rest.theta.clear();
            let mut term = reduce(n, rest, c.clone());
            for (base, e) in &m.theta {
                let b = if base == from { to } else { base };
                term = term.mul(&SymExpr::theta(n, b, *e));
            }
            out.absorb(term);
        }
        out
    }

    /// Anisotropic degree of a single monomial, if its bases are homogeneous
    /// of degree `w` in ξ.
    fn monomial_degree(m: &Monomial, w: u32) -> Option<Rational64> {
        let wr = Rational64::from_integer(w as i64);
        let mut d = Rational64::from_integer(m.xi.iter().map(|&b| b as i64).sum::<i64>())
            + wr * Rational64::from_integer(m.tau as i64);
        for (base, e) in &m.theta {
            if base.poly().xi_degree()? != w as i64 {
                return None;
            }
            d += wr * e;
        }
        Some(d)
    }

    /// Common ξ-degree of a polynomial, if homogeneous in ξ.
    fn xi_degree(&self) -> Option<i64> {
        let mut deg = None;
        for m in self.terms.keys() {
            if m.tau > 0 || !m.theta.is_empty() {
                return None;
            }
            let d: i64 = m.xi.iter().map(|&b| b as i64).sum();
            match deg {
                None => deg = Some(d),
                Some(prev) if prev != d => return None,
                _ => {}
            }
        }
        deg
    }

    /// Structural anisotropic degree under `(ξ, τ) ↦ (λξ, λ^w τ)`.
    ///
    /// Returns `Ok(None)` for the zero expression (homogeneous of every degree).
    pub fn structural_degree(&self, w: u32) -> Result<Option<Rational64>> {
        let mut deg: Option<Rational64> = None;
        for m in self.terms.keys() {
            let d = SymExpr::monomial_degree(m, w).ok_or_else(|| {
                Error::NotHomogeneous("THETA base is not homogeneous of degree w in xi".into())
            })?;
            match deg {
                None => deg = Some(d),
                Some(prev) if prev != d => {
                    return Err(Error::NotHomogeneous(format!(
                        "mixed degrees {prev} and {d}"
                    )))
                }
                _ => {}
            }
        }
        Ok(deg)
    }

    /// Split into parts of equal anisotropic degree, highest degree first.
    pub fn graded_parts(&self, w: u32) -> Result<Vec<(Rational64, SymExpr)>> {
        let mut parts: BTreeMap<Rational64, SymExpr> = BTreeMap::new();
        for (m, c) in &self.terms {
            let d = SymExpr::monomial_degree(m, w).ok_or_else(|| {
                Error::NotHomogeneous("THETA base is not homogeneous of degree w in xi".into())
            })?;
            parts
                .entry(d)
                .or_insert_with(|| SymExpr::zero(self.n))
                .insert(m.clone(), c.clone());
        }
        Ok(parts.into_iter().rev().collect())
    }

    pub fn compile(&self) -> CompiledExpr {
        CompiledExpr::new(self)
    }

    pub fn evaluate(&self, pt: &EvalPoint) -> Result<num_complex::Complex64> {
        if pt.dim() != self.n {
            return Err(Error::invalid("evaluation point has wrong dimension"));
        }
        self.compile().eval(pt)
    }
}

/// Bring a single (possibly non-canonical) monomial into canonical form.
fn reduce(n: usize, mut m: Monomial, c: Coeff) -> SymExpr {
    if c.is_zero() {
        return SymExpr::zero(n);
    }
    if let Some(idx) = m
        .theta
        .iter()
        .position(|(_, e)| e.is_integer() && e.is_positive())
    {
        let (base, e) = m.theta.remove(idx);
        let theta_poly = base
            .poly()
            .add(&SymExpr::var(n, Var::Tau).scale(&Coeff::i()));
        let rest = reduce(n, m, c);
        return rest.mul(&theta_poly.pow(*e.numer() as u32));
    }
    if m.tau > 0 && !m.theta.is_empty() {
        // iτ = Θ_b − b, i.e. τ = −iΘ_b + i·b
        let base = m.theta[0].0.clone();
        m.tau -= 1;
        let mut with_theta = m.clone();
        with_theta.add_theta(&base, Rational64::one());
        let mut out = reduce(n, with_theta, &c * &(-&Coeff::i()));
        let lowered = reduce(n, m, &c * &Coeff::i());
        out.absorb(lowered.mul(base.poly()));
        return out;
    }
    let mut e = SymExpr::zero(n);
    e.insert(m, c);
    e
}

/// A mixed partial derivative `∂_x^α ∂_ξ^β ∂_τ^k`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, serde::Serialize, serde::Deserialize)]
pub struct DerivIndex {
    pub alpha: Vec<u32>,
    pub beta: Vec<u32>,
    pub k: u32,
}

impl DerivIndex {
    pub fn zero(n: usize) -> Self {
        DerivIndex {
            alpha: vec![0; n],
            beta: vec![0; n],
            k: 0,
        }
    }

    pub fn order(&self) -> u32 {
        self.alpha.iter().sum::<u32>() + self.beta.iter().sum::<u32>() + self.k
    }

    pub fn beta_len(&self) -> u32 {
        self.beta.iter().sum()
    }

    pub fn alpha_len(&self) -> u32 {
        self.alpha.iter().sum()
    }

    /// Every index with total order at most `budget`, in a fixed order.
    pub fn all_up_to(n: usize, budget: u32) -> Vec<DerivIndex> {
        let mut out = Vec::new();
        let vars = 2 * n + 1;
        let mut cur = vec![0u32; vars];
        fn rec(pos: usize, left: u32, cur: &mut Vec<u32>, n: usize, out: &mut Vec<DerivIndex>) {
            if pos == cur.len() {
                out.push(DerivIndex {
                    alpha: cur[..n].to_vec(),
                    beta: cur[n..2 * n].to_vec(),
                    k: cur[2 * n],
                });
                return;
            }
            for v in 0..=left {
                cur[pos] = v;
                rec(pos + 1, left - v, cur, n, out);
            }
            cur[pos] = 0;
        }
        rec(0, budget, &mut cur, n, &mut out);
        out.sort_by_key(|d| (d.order(), d.clone()));
        out
    }
}

/// Parsing/printing context: dimension, anisotropy weight and the principal
/// polynomial `p_w` that a bare `THETA` refers to.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Context {
    pub n: usize,
    pub w: u32,
    pub principal: Base,
}

impl Context {
    pub fn new(n: usize, w: u32, principal: SymExpr) -> Result<Self> {
        if w < 2 || !w.is_multiple_of(2) {
            return Err(Error::invalid(format!("weight w={w} must be even and >= 2")));
        }
        if n == 0 {
            return Err(Error::invalid("dimension n must be >= 1"));
        }
        if principal.dim() != n {
            return Err(Error::invalid("principal polynomial has wrong dimension"));
        }
        Ok(Context {
            n,
            w,
            principal: Base::new(principal)?,
        })
    }

    /// Context whose principal polynomial is `|ξ|^w`.
    pub fn euclidean(n: usize, w: u32) -> Result<Self> {
        Context::new(n, w, SymExpr::euclidean_power(n, w))
    }

    /// `Θ^{-k/w}` on the principal base.
    pub fn theta_pow(&self, exponent: Rational64) -> SymExpr {
        SymExpr::theta(self.n, &self.principal, exponent)
    }

    pub fn parse(&self, text: &str) -> Result<SymExpr> {
        parse_expr(text, self)
    }

    pub fn display<'a>(&'a self, e: &'a SymExpr) -> print::WithContext<'a> {
        print::WithContext { expr: e, ctx: Some(self) }
    }

    /// Degree inference with the numeric cross-check on random points.
    pub fn infer_degree(&self, e: &SymExpr) -> Result<Option<i64>> {
        infer_degree(e, self.w)
    }
}

/// Anisotropic degree `m` with `e(x, λξ, λ^w τ) = λ^m e(x, ξ, τ)`.
///
/// Determined structurally, then cross-checked on ten pseudo-random points.
/// Returns `Ok(None)` for the zero expression.
pub fn infer_degree(e: &SymExpr, w: u32) -> Result<Option<i64>> {
    let Some(d) = e.structural_degree(w)? else {
        return Ok(None);
    };
    if !d.is_integer() {
        return Err(Error::NotHomogeneous(format!("non-integer degree {d}")));
    }
    let m = d.to_integer();
    numeric_degree_check(e, w, m)?;
    Ok(Some(m))
}

fn numeric_degree_check(e: &SymExpr, w: u32, m: i64) -> Result<()> {
    use rand::{Rng, SeedableRng};
    let compiled = e.compile();
    let n = e.dim();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x05ee_dde9);
    let mut checked = 0;
    let mut attempts = 0;
    while checked < 10 && attempts < 100 {
        attempts += 1;
        let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let xi: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let tau = num_complex::Complex64::new(rng.gen_range(-1.0..1.0), -rng.gen_range(0.0..1.0));
        let lambda: f64 = rng.gen_range(0.5..2.0);
        let p = EvalPoint::new(x.clone(), xi.clone(), tau)?;
        let scaled_xi: Vec<f64> = xi.iter().map(|v| v * lambda).collect();
        let q = EvalPoint::new(x, scaled_xi, tau * lambda.powi(w as i32))?;
        let (Ok(a), Ok(b)) = (compiled.eval(&p), compiled.eval(&q)) else {
            continue;
        };
        let expected = a * lambda.powi(m as i32);
        let scale = expected.norm().max(1e-300);
        if (b - expected).norm() > 1e-8 * scale && (b - expected).norm() > 1e-12 {
            return Err(Error::NotHomogeneous(format!(
                "numeric scaling check failed at lambda={lambda}"
            )));
        }
        checked += 1;
    }
    Ok(())
}

impl fmt::Display for SymExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        print::WithContext { expr: self, ctx: None }.fmt(f)
    }
}
