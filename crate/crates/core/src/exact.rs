//! Exact numbers used throughout: angles as rational multiples of π, and
//! real numbers of the form ±√r with r a nonnegative rational.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use num_rational::Rational64;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::ForgeError;

pub type Rational = Rational64;

pub fn rat(n: i64, d: i64) -> Rational {
    Rational::new(n, d)
}

/// An angle `k/m · π`, stored as the rational coefficient of π.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Angle(Rational);

impl Angle {
    pub const ZERO: Angle = Angle(Rational::new_raw(0, 1));
    pub const PI: Angle = Angle(Rational::new_raw(1, 1));

    /// `num/den · π`.
    pub fn pi_frac(num: i64, den: i64) -> Angle {
        Angle(Rational::new(num, den))
    }

    pub fn from_coefficient(c: Rational) -> Angle {
        Angle(c)
    }

    /// The rational coefficient of π.
    pub fn coefficient(&self) -> Rational {
        self.0
    }

    pub fn radians(&self) -> f64 {
        (*self.0.numer() as f64 / *self.0.denom() as f64) * std::f64::consts::PI
    }

    pub fn min(self, other: Angle) -> Angle {
        if self <= other {
            self
        } else {
            other
        }
    }

    pub fn abs_diff(self, other: Angle) -> Angle {
        Angle((self.0 - other.0).abs())
    }

    /// Exact cosine for angles whose cosine has a rational square
    /// (denominators dividing 4 or 6). `None` otherwise.
    pub fn cos(&self) -> Option<Root> {
        let c = self.0;
        let den = *c.denom();
        if 12 % den != 0 || den == 12 {
            return None;
        }
        // k · π/12 with k reduced mod 24
        let k = ((c * Rational::from_integer(12)).to_integer()).rem_euclid(24);
        let (sign, sq) = match k {
            0 => (1, rat(1, 1)),
            12 => (-1, rat(1, 1)),
            6 | 18 => (0, rat(0, 1)),
            4 | 20 => (1, rat(1, 4)),
            8 | 16 => (-1, rat(1, 4)),
            3 | 21 => (1, rat(1, 2)),
            9 | 15 => (-1, rat(1, 2)),
            2 | 22 => (1, rat(3, 4)),
            10 | 14 => (-1, rat(3, 4)),
            _ => return None,
        };
        Some(Root::signed(sign, sq))
    }
}

impl fmt::Display for Angle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{} pi", self.0.numer(), self.0.denom())
    }
}

impl FromStr for Angle {
    type Err = ForgeError;

    /// Accepts `"k/m pi"`, `"k pi"`, `"pi"` and `"0"`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || ForgeError::Parse(format!("bad angle {s:?}; expected \"k/m pi\""));
        let t = s.trim();
        if t == "0" {
            return Ok(Angle::ZERO);
        }
        let body = t.strip_suffix("pi").ok_or_else(bad)?.trim();
        if body.is_empty() {
            return Ok(Angle::PI);
        }
        let (n, d) = match body.split_once('/') {
            Some((n, d)) => (n.trim(), d.trim()),
            None => (body, "1"),
        };
        let n: i64 = n.parse().map_err(|_| bad())?;
        let d: i64 = d.parse().map_err(|_| bad())?;
        if d == 0 {
            return Err(bad());
        }
        Ok(Angle::pi_frac(n, d))
    }
}

impl Serialize for Angle {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Angle {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A real number `sign · √square` with `square ≥ 0` rational.
///
/// Closed under multiplication and exact comparison; sums are only formed
/// through the dedicated helpers below.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Root {
    sign: i8,
    square: Rational,
}

impl Root {
    pub fn zero() -> Root {
        Root {
            sign: 0,
            square: Rational::zero(),
        }
    }

    pub fn signed(sign: i8, square: Rational) -> Root {
        assert!(!square.is_negative(), "negative radicand");
        if square.is_zero() || sign == 0 {
            Root::zero()
        } else {
            Root {
                sign: sign.signum(),
                square,
            }
        }
    }

    /// `√square`.
    pub fn sqrt(square: Rational) -> Root {
        Root::signed(1, square)
    }

    pub fn from_rational(r: Rational) -> Root {
        Root::signed(if r.is_negative() { -1 } else { 1 }, r * r)
    }

    pub fn sign(&self) -> i8 {
        self.sign
    }

    pub fn square(&self) -> Rational {
        self.square
    }

    pub fn is_zero(&self) -> bool {
        self.sign == 0
    }

    pub fn neg(&self) -> Root {
        Root {
            sign: -self.sign,
            square: self.square,
        }
    }

    pub fn mul(&self, other: &Root) -> Root {
        Root::signed(self.sign * other.sign, self.square * other.square)
    }

    pub fn scale(&self, r: Rational) -> Root {
        self.mul(&Root::from_rational(r))
    }

    /// The value as a rational, when it is one.
    pub fn to_rational(&self) -> Option<Rational> {
        let n = isqrt_exact(*self.square.numer())?;
        let d = isqrt_exact(*self.square.denom())?;
        Some(Rational::new(n, d) * Rational::from_integer(self.sign as i64))
    }

    pub fn to_f64(&self) -> f64 {
        self.sign as f64 * (*self.square.numer() as f64 / *self.square.denom() as f64).sqrt()
    }

    /// Exact test of `self ≤ a + b` for nonnegative `a`, `b`.
    pub fn le_sum(&self, a: &Root, b: &Root) -> bool {
        debug_assert!(a.sign >= 0 && b.sign >= 0);
        if self.sign <= 0 {
            return true;
        }
        // √s ≤ √x + √y  ⇔  s − x − y ≤ 2√(xy)
        let lhs = self.square - a.square - b.square;
        if lhs <= Rational::zero() {
            return true;
        }
        lhs * lhs <= Rational::from_integer(4) * a.square * b.square
    }

    /// Exact test of `self = a + b` for nonnegative `a`, `b`.
    pub fn eq_sum(&self, a: &Root, b: &Root) -> bool {
        debug_assert!(a.sign >= 0 && b.sign >= 0);
        if self.sign < 0 {
            return false;
        }
        let lhs = self.square - a.square - b.square;
        !lhs.is_negative() && lhs * lhs == Rational::from_integer(4) * a.square * b.square
    }
}

impl PartialOrd for Root {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Root {
    fn cmp(&self, other: &Self) -> Ordering {
        match self.sign.cmp(&other.sign) {
            Ordering::Equal => match self.sign {
                0 => Ordering::Equal,
                1 => self.square.cmp(&other.square),
                _ => other.square.cmp(&self.square),
            },
            o => o,
        }
    }
}

impl fmt::Display for Root {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(r) = self.to_rational() {
            if r.is_integer() {
                return write!(f, "{}", r.numer());
            }
            return write!(f, "{}/{}", r.numer(), r.denom());
        }
        let s = if self.sign < 0 { "-" } else { "" };
        if self.square.denom().is_one() {
            write!(f, "{s}sqrt({})", self.square.numer())
        } else {
            write!(f, "{s}sqrt({}/{})", self.square.numer(), self.square.denom())
        }
    }
}

impl FromStr for Root {
    type Err = ForgeError;

    /// Accepts the forms produced by `Display`: `"3/2"`, `"-sqrt(3)"`, `"sqrt(3/4)"`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || ForgeError::Parse(format!("bad exact real {s:?}"));
        let t = s.trim();
        let (neg, t) = match t.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, t),
        };
        let parse_rat = |x: &str| -> Result<Rational, ForgeError> {
            match x.split_once('/') {
                Some((n, d)) => {
                    let n: i64 = n.trim().parse().map_err(|_| bad())?;
                    let d: i64 = d.trim().parse().map_err(|_| bad())?;
                    if d == 0 {
                        return Err(bad());
                    }
                    Ok(Rational::new(n, d))
                }
                None => Ok(Rational::from_integer(x.trim().parse().map_err(|_| bad())?)),
            }
        };
        let v = if let Some(inner) = t.strip_prefix("sqrt(").and_then(|x| x.strip_suffix(')')) {
            Root::sqrt(parse_rat(inner)?)
        } else {
            Root::from_rational(parse_rat(t)?)
        };
        Ok(if neg { v.neg() } else { v })
    }
}

impl Serialize for Root {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Root {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

fn isqrt_exact(n: i64) -> Option<i64> {
    if n < 0 {
        return None;
    }
    let r = (n as f64).sqrt().round() as i64;
    (r.saturating_sub(1)..=r + 1).find(|&c| c >= 0 && c * c == n)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn angle_round_trips_through_text() {
        for a in [Angle::pi_frac(7, 8), Angle::ZERO, Angle::PI, Angle::pi_frac(2, 3)] {
            let s = a.to_string();
            assert_eq!(s.parse::<Angle>().unwrap(), a);
        }
        assert_eq!("pi".parse::<Angle>().unwrap(), Angle::PI);
        assert!("3/0 pi".parse::<Angle>().is_err());
    }

    #[test]
    fn cosines_match_floating_point() {
        for den in [1i64, 2, 3, 4, 6] {
            for num in -2 * den..=2 * den {
                let a = Angle::pi_frac(num, den);
                let c = a.cos().expect("tabulated");
                assert!((c.to_f64() - a.radians().cos()).abs() < 1e-12, "{a}");
            }
        }
        assert!(Angle::pi_frac(1, 8).cos().is_none());
        assert!(Angle::pi_frac(1, 12).cos().is_none());
    }

    #[test]
    fn root_ordering_and_sums() {
        let three = Root::sqrt(rat(3, 1));
        let half = Root::from_rational(rat(3, 2));
        assert!(half < three.clone().scale(rat(1, 1)));
        assert!(three.le_sum(&Root::sqrt(rat(1, 1)), &Root::sqrt(rat(1, 1))));
        assert!(!Root::sqrt(rat(5, 1)).le_sum(&Root::sqrt(rat(1, 1)), &Root::sqrt(rat(1, 1))));
        assert!(Root::from_rational(rat(-2, 1)) < Root::zero());
        assert_eq!(Root::from_str("sqrt(3)").unwrap(), three);
        assert_eq!(Root::from_str("-3/2").unwrap(), half.neg());
    }
}
