//! Exact univariate Laurent polynomials over `BigRational`.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde_json::{json, Value};
use thiserror::Error;

/// Reduced fraction with positive denominator.
pub type Rational = BigRational;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PolyError {
    #[error("division is not exact, remainder {remainder}")]
    NotDivisible { remainder: LaurentPoly },
    #[error("division by the zero polynomial")]
    DivisionByZero,
    #[error("negative exponent evaluated at zero")]
    EvalAtZero,
    #[error("substitution scale must be nonzero")]
    ZeroScale,
    #[error("malformed polynomial json: {0}")]
    Json(String),
}

pub fn rat(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// `base^e` for any integer `e`; `base` must be nonzero when `e < 0`.
pub fn rpow(base: &Rational, e: i64) -> Rational {
    let mut acc = Rational::one();
    let b = if e < 0 { base.recip() } else { base.clone() };
    for _ in 0..e.unsigned_abs() {
        acc *= &b;
    }
    acc
}

/// Formats as `num/den`, or plain `num` when the denominator is 1.
pub fn rat_to_string(r: &Rational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Always `num/den`, the report format.
pub fn rat_to_report(r: &Rational) -> String {
    format!("{}/{}", r.numer(), r.denom())
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
        None => s.parse::<BigInt>().ok().map(Rational::from_integer),
    }
}

#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct LaurentPoly {
    terms: BTreeMap<i64, Rational>,
}

impl LaurentPoly {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn one() -> Self {
        Self::constant(Rational::one())
    }

    /// The indeterminate `X`.
    pub fn x() -> Self {
        Self::monomial(Rational::one(), 1)
    }

    pub fn constant(c: Rational) -> Self {
        Self::monomial(c, 0)
    }

    pub fn monomial(c: Rational, exp: i64) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(exp, c);
        }
        Self { terms }
    }

    /// Builds `Σ c_i X^(min_exp + i)` from integer coefficients.
    pub fn from_ints(min_exp: i64, coeffs: &[i64]) -> Self {
        let mut p = Self::zero();
        for (i, &c) in coeffs.iter().enumerate() {
            p.add_term(min_exp + i as i64, int(c));
        }
        p
    }

    pub fn from_terms<I: IntoIterator<Item = (i64, Rational)>>(it: I) -> Self {
        let mut p = Self::zero();
        for (e, c) in it {
            p.add_term(e, c);
        }
        p
    }

    pub fn add_term(&mut self, exp: i64, c: Rational) {
        if c.is_zero() {
            return;
        }
        let entry = self.terms.entry(exp).or_insert_with(Rational::zero);
        *entry += c;
        if entry.is_zero() {
            self.terms.remove(&exp);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, exp: i64) -> Rational {
        self.terms.get(&exp).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn terms(&self) -> impl Iterator<Item = (i64, &Rational)> {
        self.terms.iter().map(|(e, c)| (*e, c))
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn min_exp(&self) -> Option<i64> {
        self.terms.keys().next().copied()
    }

    pub fn max_exp(&self) -> Option<i64> {
        self.terms.keys().next_back().copied()
    }

    pub fn has_integer_coefficients(&self) -> bool {
        self.terms.values().all(|c| c.is_integer())
    }

    pub fn scale(&self, c: &Rational) -> Self {
        Self::from_terms(self.terms.iter().map(|(e, v)| (*e, v * c)))
    }

    /// Multiplies by `X^k`.
    pub fn shift(&self, k: i64) -> Self {
        Self {
            terms: self.terms.iter().map(|(e, c)| (e + k, c.clone())).collect(),
        }
    }

    pub fn pow(&self, n: u32) -> Self {
        let mut acc = Self::one();
        for _ in 0..n {
            acc = &acc * self;
        }
        acc
    }

    /// `f(scale·X)` or, with `invert`, `f(scale·X⁻¹)`.
    pub fn substitute(&self, scale: &Rational, invert: bool) -> Result<Self, PolyError> {
        if scale.is_zero() {
            return Err(PolyError::ZeroScale);
        }
        Ok(Self::from_terms(self.terms.iter().map(|(e, c)| {
            let exp = if invert { -e } else { *e };
            (exp, c * rpow(scale, *e))
        })))
    }

    pub fn eval(&self, x: &Rational) -> Result<Rational, PolyError> {
        if x.is_zero() {
            if self.min_exp().is_some_and(|m| m < 0) {
                return Err(PolyError::EvalAtZero);
            }
            return Ok(self.coeff(0));
        }
        let mut acc = Rational::zero();
        for (e, c) in &self.terms {
            acc += c * rpow(x, *e);
        }
        Ok(acc)
    }

    pub fn derivative(&self) -> Self {
        Self::from_terms(
            self.terms
                .iter()
                .map(|(e, c)| (e - 1, c * Rational::from_integer(BigInt::from(*e)))),
        )
    }

    /// Exact quotient `self / den`; both may carry negative exponents.
    pub fn exact_div(&self, den: &Self) -> Result<Self, PolyError> {
        if den.is_zero() {
            return Err(PolyError::DivisionByZero);
        }
        if self.is_zero() {
            return Ok(Self::zero());
        }
        // Strip the X-power units, then do ordinary long division. Since
        // den(0) != 0 afterwards, X is coprime to den.
        let nmin = self.min_exp().unwrap();
        let dmin = den.min_exp().unwrap();
        let mut rem = self.shift(-nmin);
        let d = den.shift(-dmin);
        let ddeg = d.max_exp().unwrap();
        let lead = d.coeff(ddeg);
        let mut quot = Self::zero();
        while let Some(rdeg) = rem.max_exp() {
            if rdeg < ddeg {
                break;
            }
            let c = rem.coeff(rdeg) / &lead;
            let k = rdeg - ddeg;
            rem = &rem - &d.shift(k).scale(&c);
            quot.add_term(k, c);
        }
        if !rem.is_zero() {
            return Err(PolyError::NotDivisible {
                remainder: rem.shift(nmin),
            });
        }
        Ok(quot.shift(nmin - dmin))
    }

    pub fn to_json(&self) -> Value {
        let terms: Vec<Value> = self
            .terms
            .iter()
            .map(|(e, c)| {
                json!({"exp": e, "num": c.numer().to_string(), "den": c.denom().to_string()})
            })
            .collect();
        json!({ "terms": terms })
    }

    pub fn from_json(v: &Value) -> Result<Self, PolyError> {
        let bad = |m: &str| PolyError::Json(m.to_string());
        let terms = v
            .get("terms")
            .and_then(Value::as_array)
            .ok_or_else(|| bad("missing terms array"))?;
        let mut out = Self::zero();
        let mut last: Option<i64> = None;
        for t in terms {
            let e = t.get("exp").and_then(Value::as_i64).ok_or_else(|| bad("exp"))?;
            if last.is_some_and(|l| l >= e) {
                return Err(bad("exponents must be strictly increasing"));
            }
            last = Some(e);
            let field = |k: &str| -> Result<BigInt, PolyError> {
                t.get(k)
                    .and_then(Value::as_str)
                    .and_then(|s| s.parse().ok())
                    .ok_or_else(|| bad(k))
            };
            let (n, d) = (field("num")?, field("den")?);
            if d.is_zero() {
                return Err(bad("zero denominator"));
            }
            out.add_term(e, Rational::new(n, d));
        }
        Ok(out)
    }
}

impl fmt::Display for LaurentPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        for (i, (e, c)) in self.terms.iter().enumerate() {
            let (sign, mag) = if c.is_negative() { ("-", -c) } else { ("+", c.clone()) };
            if i == 0 {
                if sign == "-" {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {sign} ")?;
            }
            match (*e, mag.is_one()) {
                (0, _) => write!(f, "{}", rat_to_string(&mag))?,
                (1, true) => write!(f, "X")?,
                (1, false) => write!(f, "{}X", rat_to_string(&mag))?,
                (e, true) => write!(f, "X^{e}")?,
                (e, false) => write!(f, "{}X^{e}", rat_to_string(&mag))?,
            }
        }
        Ok(())
    }
}

impl fmt::Debug for LaurentPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "LaurentPoly({self})")
    }
}

impl Add for &LaurentPoly {
    type Output = LaurentPoly;
    fn add(self, rhs: &LaurentPoly) -> LaurentPoly {
        let mut out = self.clone();
        for (e, c) in &rhs.terms {
            out.add_term(*e, c.clone());
        }
        out
    }
}

impl Sub for &LaurentPoly {
    type Output = LaurentPoly;
    fn sub(self, rhs: &LaurentPoly) -> LaurentPoly {
        let mut out = self.clone();
        for (e, c) in &rhs.terms {
            out.add_term(*e, -c.clone());
        }
        out
    }
}

impl Mul for &LaurentPoly {
    type Output = LaurentPoly;
    fn mul(self, rhs: &LaurentPoly) -> LaurentPoly {
        let mut out = LaurentPoly::zero();
        for (e1, c1) in &self.terms {
            for (e2, c2) in &rhs.terms {
                out.add_term(e1 + e2, c1 * c2);
            }
        }
        out
    }
}

impl Neg for &LaurentPoly {
    type Output = LaurentPoly;
    fn neg(self) -> LaurentPoly {
        LaurentPoly {
            terms: self.terms.iter().map(|(e, c)| (*e, -c.clone())).collect(),
        }
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr for LaurentPoly {
            type Output = LaurentPoly;
            fn $m(self, rhs: LaurentPoly) -> LaurentPoly {
                (&self).$m(&rhs)
            }
        }
        impl $tr<&LaurentPoly> for LaurentPoly {
            type Output = LaurentPoly;
            fn $m(self, rhs: &LaurentPoly) -> LaurentPoly {
                (&self).$m(rhs)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

impl Neg for LaurentPoly {
    type Output = LaurentPoly;
    fn neg(self) -> LaurentPoly {
        -&self
    }
}
