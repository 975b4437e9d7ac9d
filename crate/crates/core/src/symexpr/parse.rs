//! Recursive-descent parser for the symbol grammar:
//!
//! ```text
//! expr     := term (('+' | '-') term)*
//! term     := unary (('*' | '/') unary)*
//! unary    := ('-' | '+') unary | power
//! power    := atom ('^' exponent)?
//! exponent := INT | '-' INT | '(' ('-' | '+')? INT ('/' INT)? ')'
//! atom     := NUMBER | NUMBER 'i' | 'i' | 'x'k | 'xi'k | 'tau'
//!           | 'THETA' ('[' expr ']')? | '(' expr ')'
//! ```
//!
//! Bare `THETA` is `p_w + iτ` for the context's principal polynomial; its
//! exponent must lie in `(1/w)ℤ`. Other powers take non-negative integers and
//! division is only by nonzero constants.

use num_bigint::BigInt;
use num_rational::{BigRational, Rational64};
use num_traits::{ToPrimitive, Zero};

use super::{Base, Context, SymExpr, Var};
use crate::coeff::Coeff;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(BigRational, bool),
    Imag(BigRational),
    Ident(String, Option<usize>),
    Op(char),
}

fn syntax(pos: usize, msg: impl Into<String>) -> Error {
    Error::Syntax {
        pos,
        msg: msg.into(),
    }
}

fn lex(text: &str) -> Result<Vec<(usize, Tok)>> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        if c.is_ascii_digit() || c == '.' {
            let mut int_part = String::new();
            let mut frac_part = String::new();
            while i < chars.len() && chars[i].is_ascii_digit() {
                int_part.push(chars[i]);
                i += 1;
            }
            let mut is_int = true;
            if i < chars.len() && chars[i] == '.' {
                is_int = false;
                i += 1;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    frac_part.push(chars[i]);
                    i += 1;
                }
            }
            if int_part.is_empty() && frac_part.is_empty() {
                return Err(syntax(start, "malformed number"));
            }
            let digits = format!("{int_part}{frac_part}");
            let numer: BigInt = digits.parse().map_err(|_| syntax(start, "malformed number"))?;
            let denom = num_traits::pow(BigInt::from(10), frac_part.len());
            let value = BigRational::new(numer, denom);
            let imag_follows = i < chars.len()
                && chars[i] == 'i'
                && !(i + 1 < chars.len() && chars[i + 1].is_ascii_alphanumeric());
            if imag_follows {
                i += 1;
                out.push((start, Tok::Imag(value)));
            } else {
                out.push((start, Tok::Num(value, is_int)));
            }
            continue;
        }
        if c.is_ascii_alphabetic() {
            let mut name = String::new();
            while i < chars.len() && chars[i].is_ascii_alphabetic() {
                name.push(chars[i]);
                i += 1;
            }
            let mut digits = String::new();
            while i < chars.len() && chars[i].is_ascii_digit() {
                digits.push(chars[i]);
                i += 1;
            }
            let index = if digits.is_empty() {
                None
            } else {
                Some(digits.parse().map_err(|_| syntax(start, "bad index"))?)
            };
            out.push((start, Tok::Ident(name, index)));
            continue;
        }
        if "+-*/^()[]".contains(c) {
            out.push((start, Tok::Op(c)));
            i += 1;
            continue;
        }
        return Err(syntax(start, format!("unexpected character `{c}`")));
    }
    Ok(out)
}

enum Atom {
    Expr(SymExpr),
    Theta(Base),
}

struct Parser<'a> {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    end: usize,
    ctx: &'a Context,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(_, t)| t)
    }

    fn here(&self) -> usize {
        self.toks.get(self.pos).map(|(p, _)| *p).unwrap_or(self.end)
    }

    fn eat_op(&mut self, c: char) -> bool {
        if self.peek() == Some(&Tok::Op(c)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect_op(&mut self, c: char) -> Result<()> {
        if self.eat_op(c) {
            Ok(())
        } else {
            Err(syntax(self.here(), format!("expected `{c}`")))
        }
    }

    fn expr(&mut self) -> Result<SymExpr> {
        let mut acc = self.term()?;
        loop {
            if self.eat_op('+') {
                acc = acc.add(&self.term()?);
            } else if self.eat_op('-') {
                acc = acc.sub(&self.term()?);
            } else {
                return Ok(acc);
            }
        }
    }

    fn term(&mut self) -> Result<SymExpr> {
        let mut acc = self.unary()?;
        loop {
            if self.eat_op('*') {
                acc = acc.mul(&self.unary()?);
            } else if self.eat_op('/') {
                let at = self.here();
                let d = self.unary()?;
                let c = d
                    .as_constant()
                    .and_then(|c| c.recip())
                    .ok_or_else(|| syntax(at, "division only by nonzero constants"))?;
                acc = acc.scale(&c);
            } else {
                return Ok(acc);
            }
        }
    }

    fn unary(&mut self) -> Result<SymExpr> {
        if self.eat_op('-') {
            return Ok(self.unary()?.neg());
        }
        if self.eat_op('+') {
            return self.unary();
        }
        self.power()
    }

    fn int_token(&mut self) -> Result<i64> {
        let at = self.here();
        match self.peek().cloned() {
            Some(Tok::Num(v, true)) => {
                self.pos += 1;
                v.to_integer()
                    .to_i64()
                    .ok_or_else(|| syntax(at, "integer out of range"))
            }
            _ => Err(syntax(at, "expected integer")),
        }
    }

    fn exponent(&mut self) -> Result<Rational64> {
        if self.eat_op('(') {
            let sign = if self.eat_op('-') {
                -1
            } else {
                self.eat_op('+');
                1
            };
            let p = self.int_token()?;
            let q = if self.eat_op('/') { self.int_token()? } else { 1 };
            if q == 0 {
                return Err(syntax(self.here(), "zero denominator in exponent"));
            }
            self.expect_op(')')?;
            Ok(Rational64::new(sign * p, q))
        } else {
            let sign = if self.eat_op('-') { -1 } else { 1 };
            Ok(Rational64::from_integer(sign * self.int_token()?))
        }
    }

    fn power(&mut self) -> Result<SymExpr> {
        let atom = self.atom()?;
        let at = self.here();
        let exp = if self.eat_op('^') {
            Some(self.exponent()?)
        } else {
            None
        };
        match atom {
            Atom::Theta(base) => {
                let e = exp.unwrap_or_else(|| Rational64::from_integer(1));
                let scaled = e * Rational64::from_integer(self.ctx.w as i64);
                if !scaled.is_integer() {
                    return Err(Error::BadExponent {
                        exponent: e.to_string(),
                        w: self.ctx.w,
                    });
                }
                Ok(SymExpr::theta(self.ctx.n, &base, e))
            }
            Atom::Expr(e) => match exp {
                None => Ok(e),
                Some(r) if r.is_integer() && *r.numer() >= 0 => Ok(e.pow(*r.numer() as u32)),
                Some(_) => Err(syntax(
                    at,
                    "only THETA admits negative or fractional exponents",
                )),
            },
        }
    }

    fn atom(&mut self) -> Result<Atom> {
        let at = self.here();
        let n = self.ctx.n;
        let tok = self
            .peek()
            .cloned()
            .ok_or_else(|| syntax(at, "unexpected end of input"))?;
        self.pos += 1;
        match tok {
            Tok::Num(v, _) => Ok(Atom::Expr(SymExpr::constant(n, Coeff::real(v)))),
            Tok::Imag(v) => Ok(Atom::Expr(SymExpr::constant(
                n,
                Coeff::new(BigRational::zero(), v),
            ))),
            Tok::Op('(') => {
                let e = self.expr()?;
                self.expect_op(')')?;
                Ok(Atom::Expr(e))
            }
            Tok::Ident(name, idx) => match (name.as_str(), idx) {
                ("i", None) => Ok(Atom::Expr(SymExpr::constant(n, Coeff::i()))),
                ("tau", None) => Ok(Atom::Expr(SymExpr::var(n, Var::Tau))),
                ("x", Some(k)) if (1..=n).contains(&k) => {
                    Ok(Atom::Expr(SymExpr::var(n, Var::X(k - 1))))
                }
                ("xi", Some(k)) if (1..=n).contains(&k) => {
                    Ok(Atom::Expr(SymExpr::var(n, Var::Xi(k - 1))))
                }
                ("THETA", None) => {
                    if self.eat_op('[') {
                        let b = self.expr()?;
                        self.expect_op(']')?;
                        Ok(Atom::Theta(Base::new(b)?))
                    } else {
                        Ok(Atom::Theta(self.ctx.principal.clone()))
                    }
                }
                _ => Err(Error::UnknownVariable(format!(
                    "{name}{}",
                    idx.map(|k| k.to_string()).unwrap_or_default()
                ))),
            },
            Tok::Op(c) => Err(syntax(at, format!("unexpected `{c}`"))),
        }
    }
}

/// Parse an expression in the given context into canonical form.
pub fn parse_expr(text: &str, ctx: &Context) -> Result<SymExpr> {
    let toks = lex(text)?;
    let mut p = Parser {
        toks,
        pos: 0,
        end: text.chars().count(),
        ctx,
    };
    let e = p.expr()?;
    if p.pos != p.toks.len() {
        return Err(syntax(p.here(), "trailing input"));
    }
    Ok(e)
}
