use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::symexpr::{infer_degree, Context, SymExpr};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExpansionMode {
    /// Orders `m, m-1, m-2, …`, each entry homogeneous.
    Polyhomogeneous,
    /// Strictly decreasing real orders `m_0 > m_1 > …`.
    Graded,
}

/// File format of an expansion. `principal` defaults to `|ξ|^w`;
/// polyhomogeneous files give `order` and `components`, graded files give
/// `entries`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExpansionFile {
    pub n: usize,
    pub w: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub principal: Option<String>,
    pub mode: ExpansionMode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub order: Option<i64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub components: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub entries: Vec<EntryFile>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntryFile {
    pub order: f64,
    pub expr: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExpansionEntry {
    pub order: f64,
    pub expr: SymExpr,
}

/// Formal sum `q ~ Σ_j q_j` of symbols of decreasing order.
#[derive(Clone, Debug, PartialEq)]
pub struct SymbolExpansion {
    ctx: Context,
    mode: ExpansionMode,
    entries: Vec<ExpansionEntry>,
}

impl SymbolExpansion {
    /// Polyhomogeneous expansion with leading degree `m`; entry `j` must be
    /// homogeneous of degree `m - j` (zero entries are allowed).
    pub fn polyhomogeneous(ctx: Context, m: i64, exprs: Vec<SymExpr>) -> Result<Self> {
        let mut entries = Vec::with_capacity(exprs.len());
        for (j, e) in exprs.into_iter().enumerate() {
            let want = m - j as i64;
            if let Some(d) = infer_degree(&e, ctx.w)? {
                if d != want {
                    return Err(Error::NotHomogeneous(format!(
                        "entry {j} has degree {d}, expected {want}"
                    )));
                }
            }
            entries.push(ExpansionEntry {
                order: want as f64,
                expr: e,
            });
        }
        Ok(SymbolExpansion {
            ctx,
            mode: ExpansionMode::Polyhomogeneous,
            entries,
        })
    }

    pub fn graded(ctx: Context, entries: Vec<ExpansionEntry>) -> Result<Self> {
        for pair in entries.windows(2) {
            if !(pair[1].order < pair[0].order) {
                return Err(Error::invalid(format!(
                    "orders must decrease strictly: {} then {}",
                    pair[0].order, pair[1].order
                )));
            }
        }
        if entries.iter().any(|e| !e.order.is_finite()) {
            return Err(Error::invalid("orders must be finite"));
        }
        Ok(SymbolExpansion {
            ctx,
            mode: ExpansionMode::Graded,
            entries,
        })
    }

    pub fn ctx(&self) -> &Context {
        &self.ctx
    }

    pub fn n(&self) -> usize {
        self.ctx.n
    }

    pub fn w(&self) -> u32 {
        self.ctx.w
    }

    pub fn mode(&self) -> ExpansionMode {
        self.mode
    }

    pub fn entries(&self) -> &[ExpansionEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn orders(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.order).collect()
    }

    pub fn exprs(&self) -> Vec<SymExpr> {
        self.entries.iter().map(|e| e.expr.clone()).collect()
    }

    /// Order of the remainder after `n_terms` entries.
    pub fn remainder_order(&self, n_terms: usize) -> Result<f64> {
        if let Some(e) = self.entries.get(n_terms) {
            return Ok(e.order);
        }
        match (self.mode, self.entries.first()) {
            (ExpansionMode::Polyhomogeneous, Some(first)) if n_terms == self.entries.len() => {
                Ok(first.order - n_terms as f64)
            }
            _ => Err(Error::invalid(format!(
                "truncation {n_terms} exceeds the {} available components",
                self.entries.len()
            ))),
        }
    }

    /// `Σ_{j<n_terms} q_j`.
    pub fn partial_sum(&self, n_terms: usize) -> Result<SymExpr> {
        if n_terms > self.entries.len() {
            return Err(Error::invalid(format!(
                "truncation {n_terms} exceeds the {} available components",
                self.entries.len()
            )));
        }
        Ok(self.entries[..n_terms]
            .iter()
            .fold(SymExpr::zero(self.ctx.n), |acc, e| acc.add(&e.expr)))
    }
}

impl SymbolExpansion {
    pub fn from_file(file: &ExpansionFile) -> Result<Self> {
        let euclid = Context::euclidean(file.n, file.w)?;
        let ctx = match &file.principal {
            None => euclid,
            Some(p) => Context::new(file.n, file.w, euclid.parse(p)?)?,
        };
        match file.mode {
            ExpansionMode::Polyhomogeneous => {
                let m = file
                    .order
                    .ok_or_else(|| Error::invalid("polyhomogeneous expansion needs `order`"))?;
                if !file.entries.is_empty() {
                    return Err(Error::invalid("polyhomogeneous expansion takes `components`, not `entries`"));
                }
                let exprs = file
                    .components
                    .iter()
                    .map(|c| ctx.parse(c))
                    .collect::<Result<Vec<_>>>()?;
                SymbolExpansion::polyhomogeneous(ctx, m, exprs)
            }
            ExpansionMode::Graded => {
                if !file.components.is_empty() {
                    return Err(Error::invalid("graded expansion takes `entries`, not `components`"));
                }
                let entries = file
                    .entries
                    .iter()
                    .map(|e| Ok(ExpansionEntry { order: e.order, expr: ctx.parse(&e.expr)? }))
                    .collect::<Result<Vec<_>>>()?;
                SymbolExpansion::graded(ctx, entries)
            }
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        SymbolExpansion::from_file(&serde_json::from_str(text)?)
    }

    pub fn to_file(&self) -> ExpansionFile {
        let ctx = &self.ctx;
        let euclid = SymExpr::euclidean_power(ctx.n, ctx.w);
        let principal = (ctx.principal.poly() != &euclid).then(|| ctx.principal.poly().to_string());
        let show = |e: &SymExpr| ctx.display(e).to_string();
        match self.mode {
            ExpansionMode::Polyhomogeneous => ExpansionFile {
                n: ctx.n,
                w: ctx.w,
                principal,
                mode: self.mode,
                order: self.entries.first().map(|e| e.order as i64),
                components: self.entries.iter().map(|e| show(&e.expr)).collect(),
                entries: Vec::new(),
            },
            ExpansionMode::Graded => ExpansionFile {
                n: ctx.n,
                w: ctx.w,
                principal,
                mode: self.mode,
                order: None,
                components: Vec::new(),
                entries: self
                    .entries
                    .iter()
                    .map(|e| EntryFile { order: e.order, expr: show(&e.expr) })
                    .collect(),
            },
        }
    }
}
