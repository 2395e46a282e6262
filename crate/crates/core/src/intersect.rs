//! Intersection numbers of three special cycles and the difference-divisor
//! triples built from them.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use rayon::prelude::*;
use thiserror::Error;

use crate::density::{alpha_prime, alpha_self, DensityError};
use crate::exactpoly::{rpow, Rational};
use crate::padic::{is_odd_prime, ExponentVector};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IntersectError {
    #[error("p = {0} is not an odd prime")]
    InvalidPrime(u64),
    #[error("valuation sum of {0} is even; only odd sums occur")]
    OddSumRequired(ValuationTriple),
    #[error("valuations must satisfy a1 <= a2 <= a3, got {0:?}")]
    Unsorted([u32; 3]),
    #[error("the halved double sum is not integral at {0}")]
    HalfNotIntegral(ValuationTriple),
    #[error("{case} does not apply to {triple}")]
    CaseMismatch { case: CaseFormula, triple: ValuationTriple },
    #[error(transparent)]
    Density(#[from] DensityError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ValuationTriple {
    a: [u32; 3],
}

impl ValuationTriple {
    pub fn new(a1: u32, a2: u32, a3: u32) -> Result<Self, IntersectError> {
        if a1 <= a2 && a2 <= a3 {
            Ok(Self { a: [a1, a2, a3] })
        } else {
            Err(IntersectError::Unsorted([a1, a2, a3]))
        }
    }

    pub fn sorted(mut a: [u32; 3]) -> Self {
        a.sort_unstable();
        Self { a }
    }

    pub fn as_array(&self) -> [u32; 3] {
        self.a
    }

    pub fn a1(&self) -> u32 {
        self.a[0]
    }

    pub fn a2(&self) -> u32 {
        self.a[1]
    }

    pub fn a3(&self) -> u32 {
        self.a[2]
    }

    pub fn sum(&self) -> u32 {
        self.a.iter().sum()
    }

    pub fn odd_sum(&self) -> bool {
        self.sum() % 2 == 1
    }

    /// Number of odd entries.
    pub fn odd_count(&self) -> usize {
        self.a.iter().filter(|&&x| x % 2 == 1).count()
    }

    pub fn to_exponents(&self) -> ExponentVector {
        ExponentVector::new(self.a.to_vec())
    }

    /// All odd-sum triples with `a3 <= max_a3` and `a1 >= min_a1`, in
    /// lexicographic order.
    pub fn enumerate_odd(min_a1: u32, max_a3: u32) -> Vec<Self> {
        let mut out = Vec::new();
        for a1 in min_a1..=max_a3 {
            for a2 in a1..=max_a3 {
                for a3 in a2..=max_a3 {
                    if (a1 + a2 + a3) % 2 == 1 {
                        out.push(Self { a: [a1, a2, a3] });
                    }
                }
            }
        }
        out
    }
}

impl fmt::Display for ValuationTriple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{},{})", self.a[0], self.a[1], self.a[2])
    }
}

fn check_prime(p: u64) -> Result<(), IntersectError> {
    if is_odd_prime(p) {
        Ok(())
    } else {
        Err(IntersectError::InvalidPrime(p))
    }
}

fn pow(p: u64, e: i64) -> BigInt {
    assert!(e >= 0, "negative exponent {e}");
    BigInt::from(p).pow(e as u32)
}

/// `−½ Σ_{k=0}^{a1} Σ_{l=0}^{a1+a2−2k} (−1)^k ((k+l) p^{2k+l} − (k+l+a3+1) p^{a1+a2−l})`.
pub fn intersection_number(p: u64, t: &ValuationTriple) -> Result<BigInt, IntersectError> {
    check_prime(p)?;
    if !t.odd_sum() {
        return Err(IntersectError::OddSumRequired(*t));
    }
    let [a1, a2, a3] = t.a.map(|x| x as i64);
    let mut s = BigInt::zero();
    for k in 0..=a1 {
        for l in 0..=(a1 + a2 - 2 * k) {
            let term = BigInt::from(k + l) * pow(p, 2 * k + l)
                - BigInt::from(k + l + a3 + 1) * pow(p, a1 + a2 - l);
            if k % 2 == 0 {
                s += term;
            } else {
                s -= term;
            }
        }
    }
    let (q, r) = s.div_rem(&BigInt::from(2));
    if !r.is_zero() {
        return Err(IntersectError::HalfNotIntegral(*t));
    }
    Ok(-q)
}

/// Intersection number of cycles with arbitrary integer valuations. A cycle
/// of negative valuation is empty.
pub fn ztriple(p: u64, a: [i64; 3]) -> Result<BigInt, IntersectError> {
    check_prime(p)?;
    if a.iter().any(|&x| x < 0) {
        return Ok(BigInt::zero());
    }
    intersection_number(p, &ValuationTriple::sorted(a.map(|x| x as u32)))
}

/// Which of the three factors are difference divisors `D(j) = Z(j) − Z(j/p)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct DivisorPattern(pub [bool; 3]);

impl DivisorPattern {
    pub const FULL: Self = Self([true, true, true]);
    pub const FIRST: Self = Self([true, false, false]);
    pub const LAST_TWO: Self = Self([false, true, true]);
}

/// `Σ_ε (−1)^{|ε|} Z(a − 2ε)` over `ε` supported on the pattern. Entries stay
/// in the given positions, so unsorted input is allowed.
pub fn dtriple_raw(p: u64, a: [i64; 3], pattern: DivisorPattern) -> Result<BigInt, IntersectError> {
    let mut total = BigInt::zero();
    for mask in 0u8..8 {
        if (0..3).any(|i| mask >> i & 1 == 1 && !pattern.0[i]) {
            continue;
        }
        let mut b = a;
        for (i, x) in b.iter_mut().enumerate() {
            if mask >> i & 1 == 1 {
                *x -= 2;
            }
        }
        let z = ztriple(p, b)?;
        if mask.count_ones() % 2 == 0 {
            total += z;
        } else {
            total -= z;
        }
    }
    Ok(total)
}

pub fn dtriple_inclusion_exclusion(
    p: u64,
    t: &ValuationTriple,
    pattern: DivisorPattern,
) -> Result<BigInt, IntersectError> {
    if !t.odd_sum() {
        return Err(IntersectError::OddSumRequired(*t));
    }
    dtriple_raw(p, t.a.map(|x| x as i64), pattern)
}

/// A closed-form evaluation for perpendicular `j1, j2, j3` with `a1 >= 1`.
/// `AllOdd(i)` covers triples of odd valuations, `OneOdd(i)` triples with
/// exactly one odd valuation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CaseFormula {
    AllOdd(u8),
    OneOdd(u8),
}

impl CaseFormula {
    pub const ALL: [CaseFormula; 9] = [
        CaseFormula::AllOdd(1),
        CaseFormula::AllOdd(2),
        CaseFormula::AllOdd(3),
        CaseFormula::AllOdd(4),
        CaseFormula::OneOdd(1),
        CaseFormula::OneOdd(2),
        CaseFormula::OneOdd(3),
        CaseFormula::OneOdd(4),
        CaseFormula::OneOdd(5),
    ];

    pub fn parse(s: &str) -> Option<Self> {
        let (family, idx) = s.split_once('/')?;
        let idx: u8 = idx.parse().ok()?;
        let c = match family {
            "all-odd" => CaseFormula::AllOdd(idx),
            "one-odd" => CaseFormula::OneOdd(idx),
            _ => return None,
        };
        Self::ALL.contains(&c).then_some(c)
    }

    pub fn applies(&self, t: &ValuationTriple) -> bool {
        let [a1, a2, a3] = t.a;
        if a1 == 0 {
            return false;
        }
        let odd = |x: u32| x % 2 == 1;
        match *self {
            CaseFormula::AllOdd(i) => {
                t.odd_count() == 3
                    && match i {
                        1 => a1 < a2 && a2 < a3,
                        2 => a1 < a2 && a2 == a3,
                        3 => a1 == a2 && a2 < a3,
                        4 => a1 == a2 && a2 == a3,
                        _ => false,
                    }
            }
            CaseFormula::OneOdd(i) => {
                t.odd_count() == 1
                    && match i {
                        1 => odd(a2),
                        2 => a1 == a2,
                        3 => a1 < a2 && odd(a3),
                        4 => odd(a1) && a2 < a3,
                        5 => a2 == a3,
                        _ => false,
                    }
            }
        }
    }

    /// The printed closed form.
    pub fn formula(&self, p: u64, t: &ValuationTriple) -> Rational {
        let [a1, a2, _] = t.a.map(|x| x as i64);
        let pr = Rational::from_integer(BigInt::from(p));
        let pp = |e: i64| rpow(&pr, e);
        let half = |n: i64| Rational::new(BigInt::from(n), BigInt::from(2));
        let one = Rational::one();
        let p1 = &pr + &one;
        let p2m1 = &pr * &pr - &one;
        let equal_top = -(half(a1 + 1) * &pr * &pr - half(a1 - 1)) * &p1 * pp(a1 + a2 - 3);
        match *self {
            CaseFormula::AllOdd(1) | CaseFormula::OneOdd(4) => Rational::zero(),
            CaseFormula::AllOdd(2) | CaseFormula::OneOdd(5) => equal_top,
            CaseFormula::AllOdd(3) => &p1 * pp(2 * a1 - 2),
            CaseFormula::AllOdd(4) => {
                -(half(a1 + 1) * &pr - half(a1 + 3)) * &p1 * pp(2 * a1 - 2)
            }
            CaseFormula::OneOdd(1) | CaseFormula::OneOdd(3) => p2m1 * &p1 * pp(a1 + a2 - 3),
            CaseFormula::OneOdd(2) => pp(2 * a1 - 2) * p2m1,
            _ => unreachable!("unknown case {self:?}"),
        }
    }

    /// The pairing the formula evaluates, assembled from `ztriple`.
    pub fn pairing(&self, p: u64, t: &ValuationTriple) -> Result<BigInt, IntersectError> {
        let a = t.a.map(|x| x as i64);
        match *self {
            CaseFormula::AllOdd(4) => {
                // (D(j1), Z(j2), Z(j3)) − (D(j1), Z(j2/p), Z(j3/p))
                let b = [a[0], a[1] - 2, a[2] - 2];
                Ok(dtriple_raw(p, a, DivisorPattern::FIRST)? - dtriple_raw(p, b, DivisorPattern::FIRST)?)
            }
            CaseFormula::OneOdd(2) => dtriple_raw(p, a, DivisorPattern::LAST_TWO),
            _ => dtriple_raw(p, a, DivisorPattern::FULL),
        }
    }

    pub fn name(&self) -> String {
        match self {
            CaseFormula::AllOdd(i) => format!("all-odd/{i}"),
            CaseFormula::OneOdd(i) => format!("one-odd/{i}"),
        }
    }
}

impl fmt::Display for CaseFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

pub fn applicable_cases(t: &ValuationTriple) -> Vec<CaseFormula> {
    CaseFormula::ALL.into_iter().filter(|c| c.applies(t)).collect()
}

fn to_integer(r: Rational, t: &ValuationTriple) -> Result<BigInt, IntersectError> {
    if r.is_integer() {
        Ok(r.to_integer())
    } else {
        Err(IntersectError::HalfNotIntegral(*t))
    }
}

/// Value of the printed closed form for `case` at `t`.
pub fn dtriple_closed(p: u64, t: &ValuationTriple, case: CaseFormula) -> Result<BigInt, IntersectError> {
    check_prime(p)?;
    if !case.applies(t) {
        return Err(IntersectError::CaseMismatch { case, triple: *t });
    }
    to_integer(case.formula(p, t), t)
}

/// Both sides of `(Z1, Z2, Z3) = α′(S,T)/α(S,S)`.
pub fn kr_sides(p: u64, t: &ValuationTriple) -> Result<(Rational, Rational), IntersectError> {
    let lhs = Rational::from_integer(intersection_number(p, t)?);
    let rhs = alpha_prime(p, &t.to_exponents())? / alpha_self(p);
    Ok((lhs, rhs))
}

pub fn check_kr_identity(p: u64, t: &ValuationTriple) -> Result<bool, IntersectError> {
    let (l, r) = kr_sides(p, t)?;
    Ok(l == r)
}

#[derive(Clone, Debug, PartialEq)]
pub struct CaseCheck {
    pub case: CaseFormula,
    pub p: u64,
    pub triple: ValuationTriple,
    pub lhs: BigInt,
    pub rhs: BigInt,
    pub pass: bool,
}

/// Every applicable case formula for every odd-sum triple with `a3 <= max_a3`,
/// compared with the inclusion–exclusion pairing. Sorted by (triple, case).
pub fn check_case_consistency(p: u64, max_a3: u32) -> Result<Vec<CaseCheck>, IntersectError> {
    check_prime(p)?;
    let triples = ValuationTriple::enumerate_odd(1, max_a3);
    let nested: Vec<Vec<CaseCheck>> = triples
        .par_iter()
        .map(|t| {
            applicable_cases(t)
                .into_iter()
                .map(|case| {
                    let lhs = case.pairing(p, t)?;
                    let rhs = dtriple_closed(p, t, case)?;
                    Ok(CaseCheck {
                        case,
                        p,
                        triple: *t,
                        pass: lhs == rhs,
                        lhs,
                        rhs,
                    })
                })
                .collect::<Result<Vec<_>, IntersectError>>()
        })
        .collect::<Result<_, _>>()?;
    Ok(nested.into_iter().flatten().collect())
}

/// Sign of an integer as −1, 0, 1; used by reports.
pub fn signum(x: &BigInt) -> i32 {
    if x.is_positive() {
        1
    } else if x.is_negative() {
        -1
    } else {
        0
    }
}
