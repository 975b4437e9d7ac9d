use std::fmt;

use super::{Context, Monomial, SymExpr};
use crate::coeff::Coeff;

/// Grammar-compatible printer. With a context, bases equal to the principal
/// polynomial print as bare `THETA`; all others as `THETA[base]`.
pub struct WithContext<'a> {
    pub(super) expr: &'a SymExpr,
    pub(super) ctx: Option<&'a Context>,
}

fn write_monomial(
    f: &mut fmt::Formatter<'_>,
    m: &Monomial,
    ctx: Option<&Context>,
) -> Result<bool, fmt::Error> {
    let mut first = true;
    let mut sep = |f: &mut fmt::Formatter<'_>| -> fmt::Result {
        if !first {
            f.write_str("*")?;
        }
        first = false;
        Ok(())
    };
    for (i, &p) in m.x.iter().enumerate() {
        if p > 0 {
            sep(f)?;
            write!(f, "x{}", i + 1)?;
            if p > 1 {
                write!(f, "^{p}")?;
            }
        }
    }
    for (i, &p) in m.xi.iter().enumerate() {
        if p > 0 {
            sep(f)?;
            write!(f, "xi{}", i + 1)?;
            if p > 1 {
                write!(f, "^{p}")?;
            }
        }
    }
    if m.tau > 0 {
        sep(f)?;
        f.write_str("tau")?;
        if m.tau > 1 {
            write!(f, "^{}", m.tau)?;
        }
    }
    for (b, e) in &m.theta {
        sep(f)?;
        match ctx {
            Some(c) if &c.principal == b => f.write_str("THETA")?,
            _ => write!(f, "THETA[{}]", WithContext { expr: b.poly(), ctx })?,
        }
        if e.is_integer() {
            write!(f, "^({})", e.numer())?;
        } else {
            write!(f, "^({}/{})", e.numer(), e.denom())?;
        }
    }
    Ok(!first)
}

impl fmt::Display for WithContext<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.expr.is_zero() {
            return f.write_str("0");
        }
        for (idx, (m, c)) in self.expr.terms.iter().enumerate() {
            if idx > 0 {
                f.write_str(" + ")?;
            }
            let unit = *m == Monomial::unit(self.expr.n);
            if unit {
                write!(f, "{c}")?;
                continue;
            }
            if c.is_one() {
            } else if *c == Coeff::int(-1) {
                f.write_str("-")?;
            } else {
                write!(f, "{c}*")?;
            }
            write_monomial(f, m, self.ctx)?;
        }
        Ok(())
    }
}
