//! Scalars shared by the exact and floating-point pipelines.
//!
//! Every geometric and weight computation is generic over [`Scalar`], with two
//! implementations: `f64` and the exact rational [`Q`].

use std::cmp::Ordering;
use std::fmt;
use std::iter::Sum;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

pub trait Scalar:
    Clone
    + PartialOrd
    + PartialEq
    + fmt::Debug
    + fmt::Display
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Send
    + Sync
    + 'static
{
    const EXACT: bool;
    const MODE: &'static str;

    fn from_u64(n: u64) -> Self;
    fn from_biguint(n: &BigUint) -> Self;
    fn to_f64(&self) -> f64;
    fn to_json(&self) -> serde_json::Value;
    fn from_json(v: &serde_json::Value) -> Result<Self, String>;

    fn abs(&self) -> Self {
        if *self < Self::zero() {
            -self.clone()
        } else {
            self.clone()
        }
    }

    fn max_of(a: Self, b: Self) -> Self {
        if b > a {
            b
        } else {
            a
        }
    }

    fn min_of(a: Self, b: Self) -> Self {
        if b < a {
            b
        } else {
            a
        }
    }

    fn sum_of(xs: &[Self]) -> Self {
        xs.iter().cloned().fold(Self::zero(), |a, b| a + b)
    }

    /// Natural logarithm of a positive value, evaluated in `f64`.
    fn ln(&self) -> f64 {
        self.to_f64().ln()
    }

    fn dot(xs: &[Self], ys: &[Self]) -> Self {
        xs.iter()
            .zip(ys)
            .fold(Self::zero(), |a, (x, y)| a + x.clone() * y.clone())
    }
}

impl Scalar for f64 {
    const EXACT: bool = false;
    const MODE: &'static str = "float";

    fn from_u64(n: u64) -> Self {
        n as f64
    }
    fn from_biguint(n: &BigUint) -> Self {
        n.to_f64().unwrap_or(f64::INFINITY)
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn to_json(&self) -> serde_json::Value {
        serde_json::json!(*self)
    }
    fn from_json(v: &serde_json::Value) -> Result<Self, String> {
        match v {
            serde_json::Value::Number(n) => n.as_f64().ok_or_else(|| format!("bad number {n}")),
            serde_json::Value::String(s) => Q::from_str(s).map(|q| q.to_f64()),
            other => Err(format!("expected a number, found {other}")),
        }
    }
}

/// Exact rational, printed and parsed as `"p/q"`.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Q(pub BigRational);

impl Q {
    pub fn new(n: i64, d: i64) -> Q {
        Q(BigRational::new(BigInt::from(n), BigInt::from(d)))
    }

    pub fn from_int(n: i64) -> Q {
        Q(BigRational::from_integer(BigInt::from(n)))
    }

    pub fn from_bigs(n: BigInt, d: BigInt) -> Q {
        Q(BigRational::new(n, d))
    }

    pub fn numer(&self) -> &BigInt {
        self.0.numer()
    }

    pub fn denom(&self) -> &BigInt {
        self.0.denom()
    }

    pub fn recip(&self) -> Q {
        Q(self.0.recip())
    }

    pub fn is_negative(&self) -> bool {
        self.0.is_negative()
    }

    pub fn pow(&self, e: i32) -> Q {
        Q(num_traits::Pow::pow(&self.0, e))
    }
}

impl fmt::Display for Q {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.0.numer(), self.0.denom())
    }
}

impl fmt::Debug for Q {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl FromStr for Q {
    type Err = String;
    fn from_str(s: &str) -> Result<Q, String> {
        let s = s.trim();
        let parse = |t: &str| BigInt::from_str(t.trim()).map_err(|e| format!("bad rational {s:?}: {e}"));
        match s.split_once('/') {
            Some((n, d)) => {
                let d = parse(d)?;
                if d.is_zero() {
                    return Err(format!("zero denominator in {s:?}"));
                }
                Ok(Q(BigRational::new(parse(n)?, d)))
            }
            None => Ok(Q(BigRational::from_integer(parse(s)?))),
        }
    }
}

impl Serialize for Q {
    fn serialize<Se: Serializer>(&self, s: Se) -> Result<Se::Ok, Se::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Q {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Q, D::Error> {
        let v = serde_json::Value::deserialize(d)?;
        Q::from_json(&v).map_err(serde::de::Error::custom)
    }
}

macro_rules! q_binop {
    ($tr:ident, $m:ident) => {
        impl $tr for Q {
            type Output = Q;
            fn $m(self, rhs: Q) -> Q {
                Q(self.0.$m(rhs.0))
            }
        }
        impl<'a> $tr<&'a Q> for &'a Q {
            type Output = Q;
            fn $m(self, rhs: &'a Q) -> Q {
                Q((&self.0).$m(&rhs.0))
            }
        }
    };
}

q_binop!(Add, add);
q_binop!(Sub, sub);
q_binop!(Mul, mul);
q_binop!(Div, div);

impl Neg for Q {
    type Output = Q;
    fn neg(self) -> Q {
        Q(-self.0)
    }
}

impl Zero for Q {
    fn zero() -> Q {
        Q(BigRational::zero())
    }
    fn is_zero(&self) -> bool {
        self.0.is_zero()
    }
}

impl One for Q {
    fn one() -> Q {
        Q(BigRational::one())
    }
}

impl Sum for Q {
    fn sum<I: Iterator<Item = Q>>(iter: I) -> Q {
        iter.fold(Q::zero(), |a, b| a + b)
    }
}

impl Scalar for Q {
    const EXACT: bool = true;
    const MODE: &'static str = "exact";

    fn from_u64(n: u64) -> Self {
        Q(BigRational::from_integer(BigInt::from(n)))
    }
    fn from_biguint(n: &BigUint) -> Self {
        Q(BigRational::from_integer(BigInt::from(n.clone())))
    }
    fn to_f64(&self) -> f64 {
        self.0.to_f64().unwrap_or(f64::NAN)
    }
    fn to_json(&self) -> serde_json::Value {
        serde_json::Value::String(self.to_string())
    }
    fn ln(&self) -> f64 {
        match (self.numer().to_biguint(), self.denom().to_biguint()) {
            (Some(n), Some(d)) if !n.is_zero() => ln_ratio(&n, &d),
            _ => f64::NAN,
        }
    }
    fn from_json(v: &serde_json::Value) -> Result<Self, String> {
        match v {
            serde_json::Value::String(s) => Q::from_str(s),
            serde_json::Value::Number(n) => match n.as_i64() {
                Some(i) => Ok(Q::from_int(i)),
                None => Err(format!("non-integer number {n} where an exact rational was expected")),
            },
            other => Err(format!("expected a rational string, found {other}")),
        }
    }
}

/// Natural log of `num/den` for nonnegative big integers, accurate near 1.
pub fn ln_ratio(num: &BigUint, den: &BigUint) -> f64 {
    if den.is_zero() {
        return f64::INFINITY;
    }
    if num.is_zero() {
        return f64::NEG_INFINITY;
    }
    match num.cmp(den) {
        Ordering::Equal => 0.0,
        Ordering::Greater => {
            let q = BigRational::new(BigInt::from(num - den), BigInt::from(den.clone()));
            match q.to_f64() {
                Some(x) if x.is_finite() && x < 1e300 => x.ln_1p(),
                _ => ln_big(num) - ln_big(den),
            }
        }
        Ordering::Less => -ln_ratio(den, num),
    }
}

fn ln_big(n: &BigUint) -> f64 {
    let bits = n.bits();
    if bits < 1000 {
        return n.to_f64().unwrap_or(f64::INFINITY).ln();
    }
    let shift = bits - 64;
    let top = (n >> shift).to_f64().unwrap_or(1.0);
    top.ln() + shift as f64 * std::f64::consts::LN_2
}

/// Serde helpers writing big integers as decimal strings.
pub mod biguint_string {
    use num_bigint::BigUint;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(n: &BigUint, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&n.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BigUint, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rational_round_trip() {
        let q = Q::new(-6, 4);
        assert_eq!(q.to_string(), "-3/2");
        assert_eq!(Q::from_str("-3/2").unwrap(), q);
        assert_eq!(Q::from_str("5").unwrap(), Q::from_int(5));
        let v = serde_json::to_value(&q).unwrap();
        assert_eq!(v, serde_json::json!("-3/2"));
        assert_eq!(serde_json::from_value::<Q>(v).unwrap(), q);
        assert!(Q::from_str("1/0").is_err());
    }

    #[test]
    fn ln_ratio_is_accurate_near_one() {
        let big = BigUint::from(10u64).pow(30);
        let x = ln_ratio(&(&big + 1u32), &big);
        assert!((x - 1e-30).abs() < 1e-44);
        assert_eq!(ln_ratio(&BigUint::from(3u32), &BigUint::from(3u32)), 0.0);
        assert!((ln_ratio(&BigUint::from(1u32), &BigUint::from(2u32)) + 2f64.ln()).abs() < 1e-15);
        let huge = BigUint::from(2u32).pow(5000);
        assert!((ln_ratio(&huge, &BigUint::from(1u32)) - 5000.0 * 2f64.ln()).abs() < 1e-9);
    }
}
