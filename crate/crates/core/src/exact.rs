//! Exact arithmetic: big rationals and elements of a real quadratic field
//! `Q(√d)`.
//!
//! Modular ratios and tilted sums are rational. Square-root conductances
//! `√(m(x) m(y))` live in `Q(√q)` where `q` is the modular base, so the
//! walk-kernel identities are checked in [`Surd`] arithmetic.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub type Rational = BigRational;

pub fn rat(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// `base^exp` for a signed exponent. `base` must be nonzero when `exp < 0`.
pub fn pow_i(base: &Rational, exp: i64) -> Rational {
    let mut acc = Rational::one();
    let mut sq = if exp < 0 { base.recip() } else { base.clone() };
    let mut e = exp.unsigned_abs();
    while e > 0 {
        if e & 1 == 1 {
            acc *= &sq;
        }
        sq = &sq * &sq;
        e >>= 1;
    }
    acc
}

pub fn to_f64(r: &Rational) -> f64 {
    match (r.numer().to_f64(), r.denom().to_f64()) {
        (Some(n), Some(d)) if n.is_finite() && d.is_finite() => n / d,
        // Huge operands: scale both down by the same power of two.
        _ => {
            let shift = r.numer().bits().max(r.denom().bits()).saturating_sub(1000);
            let n = (r.numer() >> shift).to_f64().unwrap_or(0.0);
            let d = (r.denom() >> shift).to_f64().unwrap_or(1.0);
            n / d
        }
    }
}

/// `"num/den"` (or `"num"` for integers).
pub fn format_rational(r: &Rational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

pub fn parse_rational(s: &str) -> Option<Rational> {
    let s = s.trim();
    match s.split_once('/') {
        Some((n, d)) => {
            let n: BigInt = n.trim().parse().ok()?;
            let d: BigInt = d.trim().parse().ok()?;
            if d.is_zero() {
                return None;
            }
            Some(Rational::new(n, d))
        }
        None => Some(Rational::from_integer(s.parse().ok()?)),
    }
}

/// Exact square root of a nonnegative rational, if it is a rational square.
pub fn sqrt_exact(r: &Rational) -> Option<Rational> {
    if r.is_negative() {
        return None;
    }
    let n = r.numer().sqrt();
    let d = r.denom().sqrt();
    if &(&n * &n) == r.numer() && &(&d * &d) == r.denom() {
        Some(Rational::new(n, d))
    } else {
        None
    }
}

/// The field `Q(√d)` for a positive rational `d`. When `d` is a rational
/// square every element is stored with a zero radical part.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QuadField {
    d: Rational,
    root: Option<Rational>,
}

impl QuadField {
    pub fn new(d: Rational) -> Self {
        assert!(d.is_positive(), "quadratic field needs a positive radicand");
        let root = sqrt_exact(&d);
        QuadField { d, root }
    }

    pub fn radicand(&self) -> &Rational {
        &self.d
    }

    pub fn from_rational(&self, r: Rational) -> Surd {
        Surd {
            a: r,
            b: Rational::zero(),
            d: self.d.clone(),
        }
    }

    pub fn zero(&self) -> Surd {
        self.from_rational(Rational::zero())
    }

    pub fn one(&self) -> Surd {
        self.from_rational(Rational::one())
    }

    /// `√d`.
    pub fn sqrt_d(&self) -> Surd {
        match &self.root {
            Some(r) => self.from_rational(r.clone()),
            None => Surd {
                a: Rational::zero(),
                b: Rational::one(),
                d: self.d.clone(),
            },
        }
    }

    /// `d^(e/2)` for any integer `e`.
    pub fn half_power(&self, e: i64) -> Surd {
        let whole = pow_i(&self.d, e.div_euclid(2));
        if e.rem_euclid(2) == 0 {
            self.from_rational(whole)
        } else {
            self.sqrt_d().scale(&whole)
        }
    }
}

/// `a + b·√d`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Surd {
    a: Rational,
    b: Rational,
    d: Rational,
}

impl Surd {
    pub fn rational_part(&self) -> &Rational {
        &self.a
    }

    pub fn radical_part(&self) -> &Rational {
        &self.b
    }

    pub fn is_zero(&self) -> bool {
        self.a.is_zero() && self.b.is_zero()
    }

    pub fn scale(&self, k: &Rational) -> Surd {
        Surd {
            a: &self.a * k,
            b: &self.b * k,
            d: self.d.clone(),
        }
    }

    pub fn to_f64(&self) -> f64 {
        to_f64(&self.a) + to_f64(&self.b) * to_f64(&self.d).sqrt()
    }

    /// Sign of the real number `a + b√d`, computed exactly.
    pub fn signum(&self) -> Ordering {
        let sa = self.a.cmp(&Rational::zero());
        let sb = self.b.cmp(&Rational::zero());
        if sb == Ordering::Equal {
            return sa;
        }
        if sa == Ordering::Equal || sa == sb {
            return sb;
        }
        // Opposite signs: compare a² with b²d.
        let a2 = &self.a * &self.a;
        let b2d = &self.b * &self.b * &self.d;
        match a2.cmp(&b2d) {
            Ordering::Greater => sa,
            Ordering::Less => sb,
            Ordering::Equal => Ordering::Equal,
        }
    }

    pub fn abs(&self) -> Surd {
        if self.signum() == Ordering::Less {
            -self.clone()
        } else {
            self.clone()
        }
    }

    pub fn recip(&self) -> Surd {
        // (a - b√d) / (a² - b² d); the norm is nonzero for nonzero elements
        // because d is not a rational square whenever b != 0.
        assert!(!self.is_zero(), "division by zero in Q(√d)");
        let norm = &self.a * &self.a - &self.b * &self.b * &self.d;
        Surd {
            a: &self.a / &norm,
            b: -(&self.b / &norm),
            d: self.d.clone(),
        }
    }

    fn check(&self, other: &Surd) {
        debug_assert!(
            self.d == other.d || self.b.is_zero() || other.b.is_zero(),
            "mixing quadratic fields"
        );
    }

    fn field_d<'a>(&'a self, other: &'a Surd) -> &'a Rational {
        if self.b.is_zero() {
            &other.d
        } else {
            &self.d
        }
    }
}

impl PartialOrd for Surd {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some((self - other).signum())
    }
}

impl Add for &Surd {
    type Output = Surd;
    fn add(self, rhs: &Surd) -> Surd {
        self.check(rhs);
        Surd {
            a: &self.a + &rhs.a,
            b: &self.b + &rhs.b,
            d: self.field_d(rhs).clone(),
        }
    }
}

impl Sub for &Surd {
    type Output = Surd;
    fn sub(self, rhs: &Surd) -> Surd {
        self.check(rhs);
        Surd {
            a: &self.a - &rhs.a,
            b: &self.b - &rhs.b,
            d: self.field_d(rhs).clone(),
        }
    }
}

impl Mul for &Surd {
    type Output = Surd;
    fn mul(self, rhs: &Surd) -> Surd {
        self.check(rhs);
        let d = self.field_d(rhs).clone();
        Surd {
            a: &self.a * &rhs.a + &self.b * &rhs.b * &d,
            b: &self.a * &rhs.b + &self.b * &rhs.a,
            d,
        }
    }
}

impl Div for &Surd {
    type Output = Surd;
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn div(self, rhs: &Surd) -> Surd {
        self * &rhs.recip()
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr for Surd {
            type Output = Surd;
            fn $m(self, rhs: Surd) -> Surd {
                (&self).$m(&rhs)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);
forward_owned!(Div, div);

impl Neg for Surd {
    type Output = Surd;
    fn neg(self) -> Surd {
        Surd {
            a: -self.a,
            b: -self.b,
            d: self.d,
        }
    }
}

impl fmt::Display for Surd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.b.is_zero() {
            write!(f, "{}", format_rational(&self.a))
        } else if self.a.is_zero() {
            write!(
                f,
                "{}*sqrt({})",
                format_rational(&self.b),
                format_rational(&self.d)
            )
        } else {
            write!(
                f,
                "{} + {}*sqrt({})",
                format_rational(&self.a),
                format_rational(&self.b),
                format_rational(&self.d)
            )
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pow_handles_negative_exponents() {
        assert_eq!(pow_i(&rat(2, 3), -2), rat(9, 4));
        assert_eq!(pow_i(&rat(5, 1), 0), rat(1, 1));
    }

    #[test]
    fn half_powers_of_two() {
        let f = QuadField::new(int(2));
        assert_eq!(f.half_power(2), f.from_rational(int(2)));
        let s = f.half_power(1);
        assert_eq!(&s * &s, f.from_rational(int(2)));
        let t = f.half_power(-3);
        assert_eq!(&t * &f.half_power(3), f.one());
    }

    #[test]
    fn perfect_square_radicand_stays_rational() {
        let f = QuadField::new(int(4));
        assert_eq!(f.half_power(1), f.from_rational(int(2)));
        assert!(f.half_power(3).radical_part().is_zero());
    }

    #[test]
    fn division_and_sign() {
        let f = QuadField::new(int(2));
        // 1 / (1 + 2√2) = (2√2 - 1) / 7
        let x = &f.one() + &f.sqrt_d().scale(&int(2));
        let inv = x.recip();
        assert_eq!(inv.rational_part(), &rat(-1, 7));
        assert_eq!(inv.radical_part(), &rat(2, 7));
        assert!((inv.to_f64() - 1.0 / (1.0 + 2.0 * 2f64.sqrt())).abs() < 1e-15);
        // 3 - 2√2 > 0, 1 - √2 < 0
        let y = &f.from_rational(int(3)) - &f.sqrt_d().scale(&int(2));
        assert_eq!(y.signum(), Ordering::Greater);
        let z = &f.one() - &f.sqrt_d();
        assert_eq!(z.signum(), Ordering::Less);
    }

    #[test]
    fn rational_round_trip() {
        let r = rat(-7, 12);
        assert_eq!(parse_rational(&format_rational(&r)), Some(r));
        assert_eq!(parse_rational("3"), Some(int(3)));
        assert_eq!(parse_rational("1/0"), None);
    }
}
