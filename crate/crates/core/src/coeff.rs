//! Exact complex-rational coefficients.

use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// A complex number with arbitrary-precision rational real and imaginary parts.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Coeff {
    pub re: BigRational,
    pub im: BigRational,
}

impl Coeff {
    pub fn new(re: BigRational, im: BigRational) -> Self {
        Coeff { re, im }
    }

    pub fn zero() -> Self {
        Coeff::new(BigRational::zero(), BigRational::zero())
    }

    pub fn one() -> Self {
        Coeff::new(BigRational::one(), BigRational::zero())
    }

    pub fn i() -> Self {
        Coeff::new(BigRational::zero(), BigRational::one())
    }

    pub fn int(v: i64) -> Self {
        Coeff::real(BigRational::from_integer(BigInt::from(v)))
    }

    pub fn ratio(num: i64, den: i64) -> Self {
        Coeff::real(BigRational::new(BigInt::from(num), BigInt::from(den)))
    }

    pub fn real(re: BigRational) -> Self {
        Coeff::new(re, BigRational::zero())
    }

    /// Exact conversion of a finite double.
    pub fn from_f64(v: f64) -> Option<Self> {
        BigRational::from_float(v).map(Coeff::real)
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.re.is_one() && self.im.is_zero()
    }

    pub fn is_real(&self) -> bool {
        self.im.is_zero()
    }

    pub fn to_c64(&self) -> Complex64 {
        Complex64::new(
            self.re.to_f64().unwrap_or(f64::NAN),
            self.im.to_f64().unwrap_or(f64::NAN),
        )
    }

    pub fn recip(&self) -> Option<Self> {
        if self.is_zero() {
            return None;
        }
        let d = &self.re * &self.re + &self.im * &self.im;
        Some(Coeff::new(&self.re / &d, -&self.im / &d))
    }

    pub fn pow(&self, k: u32) -> Self {
        let mut acc = Coeff::one();
        for _ in 0..k {
            acc = &acc * self;
        }
        acc
    }

    pub fn scale(&self, r: &BigRational) -> Self {
        Coeff::new(&self.re * r, &self.im * r)
    }
}

impl Add for &Coeff {
    type Output = Coeff;
    fn add(self, o: &Coeff) -> Coeff {
        Coeff::new(&self.re + &o.re, &self.im + &o.im)
    }
}

impl Sub for &Coeff {
    type Output = Coeff;
    fn sub(self, o: &Coeff) -> Coeff {
        Coeff::new(&self.re - &o.re, &self.im - &o.im)
    }
}

impl Mul for &Coeff {
    type Output = Coeff;
    fn mul(self, o: &Coeff) -> Coeff {
        Coeff::new(
            &self.re * &o.re - &self.im * &o.im,
            &self.re * &o.im + &self.im * &o.re,
        )
    }
}

impl Neg for &Coeff {
    type Output = Coeff;
    fn neg(self) -> Coeff {
        Coeff::new(-&self.re, -&self.im)
    }
}

impl AddAssign<&Coeff> for Coeff {
    fn add_assign(&mut self, o: &Coeff) {
        self.re += &o.re;
        self.im += &o.im;
    }
}

fn fmt_rational(r: &BigRational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

impl fmt::Display for Coeff {
    /// Grammar-compatible rendering: `3`, `(1/2)`, `(2i)`, `(1/2-3i)`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.im.is_zero() {
            if self.re.is_integer() {
                write!(f, "{}", fmt_rational(&self.re))
            } else {
                write!(f, "({})", fmt_rational(&self.re))
            }
        } else if self.re.is_zero() {
            write!(f, "({}i)", fmt_rational(&self.im))
        } else {
            let sign = if self.im.is_negative() { "-" } else { "+" };
            write!(
                f,
                "({}{}{}i)",
                fmt_rational(&self.re),
                sign,
                fmt_rational(&self.im.abs())
            )
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arithmetic_is_exact() {
        let a = Coeff::ratio(1, 3);
        let b = Coeff::ratio(2, 3);
        assert!((&a + &b).is_one());
        let i = Coeff::i();
        assert_eq!(&i * &i, Coeff::int(-1));
        let z = Coeff::new(BigRational::from_integer(3.into()), BigRational::from_integer(4.into()));
        assert!((&z * &z.recip().unwrap()).is_one());
    }

    #[test]
    fn from_f64_is_exact_for_dyadics() {
        assert_eq!(Coeff::from_f64(0.375).unwrap(), Coeff::ratio(3, 8));
        assert!(Coeff::from_f64(f64::NAN).is_none());
    }

    #[test]
    fn display_forms() {
        assert_eq!(Coeff::int(-3).to_string(), "-3");
        assert_eq!(Coeff::ratio(1, 2).to_string(), "(1/2)");
        assert_eq!(Coeff::i().to_string(), "(1i)");
        let z = &Coeff::ratio(1, 2) + &(&Coeff::i() * &Coeff::int(-3));
        assert_eq!(z.to_string(), "(1/2-3i)");
    }
}
