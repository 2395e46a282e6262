//! The density polynomial `F_p(X;T)` for `T = diag(p^{a_1}, …, p^{a_n})`,
//! its shift by `S = 1_3`, the closed form for odd `Σa_i`, and the two
//! identities used to validate the recursion.

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

use num_bigint::BigInt;
use num_traits::{One, Zero};
use thiserror::Error;

use crate::exactpoly::{int, rpow, LaurentPoly, PolyError, Rational};
use crate::padic::{is_odd_prime, ExponentVector};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DensityError {
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error("p = {0} is not an odd prime")]
    InvalidPrime(u64),
    #[error("exponent sum {0} must be odd")]
    OddSumRequired(u32),
    #[error("expected three exponents, got {0}")]
    NotRankThree(usize),
    #[error("s must be at least 1")]
    InvalidS,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DensityPoly {
    pub p: u64,
    pub exps: ExponentVector,
    pub poly: LaurentPoly,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ShiftedDensityPoly {
    pub p: u64,
    pub exps: ExponentVector,
    pub poly: LaurentPoly,
}

fn pr(p: u64) -> Rational {
    Rational::from_integer(BigInt::from(p))
}

fn neg_p_pow(p: u64, e: i64) -> Rational {
    rpow(&(-pr(p)), e)
}

fn check_prime(p: u64) -> Result<(), DensityError> {
    if is_odd_prime(p) {
        Ok(())
    } else {
        Err(DensityError::InvalidPrime(p))
    }
}

/// `1 + c·X^e`.
fn one_plus(c: Rational, e: i64) -> LaurentPoly {
    let mut f = LaurentPoly::one();
    f.add_term(e, c);
    f
}

/// `H_p(X) = (1 − X)(1 + pX)`.
pub fn h_poly(p: u64) -> LaurentPoly {
    one_plus(int(-1), 1) * one_plus(pr(p), 1)
}

/// `A_p(X;T)` with `n = |T|`, sign exponent `(n+1)a_n` taken as printed.
pub fn a_poly(p: u64, exps: &ExponentVector) -> LaurentPoly {
    let n = exps.len() as i64;
    let an = exps.last().unwrap_or(0) as i64;
    let lower: i64 = exps.as_slice()[..exps.len() - 1].iter().map(|&a| a as i64).sum();
    let f1 = one_plus(-neg_p_pow(p, n - 1), 1);
    let f2 = one_plus(-neg_p_pow(p, -n), -1);
    let sign = if ((n + 1) * an) % 2 == 0 { int(1) } else { int(-1) };
    let c = neg_p_pow(p, lower) * sign * rpow(&pr(p), n * (an + 2));
    (f1 * f2) * LaurentPoly::monomial(c, an + 2)
}

fn cache() -> &'static Mutex<HashMap<(u64, Vec<u32>), LaurentPoly>> {
    static CACHE: OnceLock<Mutex<HashMap<(u64, Vec<u32>), LaurentPoly>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// `(1 − X) Σ_{l=0}^{a} (pX)^l`.
pub fn f_poly_rank1(p: u64, a: u32) -> Result<DensityPoly, DensityError> {
    check_prime(p)?;
    Ok(DensityPoly {
        p,
        exps: ExponentVector::new(vec![a]),
        poly: rank1_poly(p, a),
    })
}

fn rank1_poly(p: u64, a: u32) -> LaurentPoly {
    let sum = LaurentPoly::from_terms((0..=a as i64).map(|l| (l, rpow(&pr(p), l))));
    one_plus(int(-1), 1) * sum
}

fn f_raw(p: u64, exps: &ExponentVector) -> Result<LaurentPoly, DensityError> {
    let key = (p, exps.as_slice().to_vec());
    if let Some(f) = cache().lock().expect("density cache").get(&key) {
        return Ok(f.clone());
    }
    let f = match exps.len() {
        0 => LaurentPoly::one(),
        1 => rank1_poly(p, exps.as_slice()[0]),
        n => {
            let fm = f_raw(p, &exps.minus())?;
            let p2 = rpow(&pr(p), 2);
            let num = h_poly(p) * fm.substitute(&p2, false)? - a_poly(p, exps) * &fm;
            let den = one_plus(-rpow(&pr(p), 2 * n as i64), 2);
            num.exact_div(&den)?
        }
    };
    if !f.has_integer_coefficients() {
        log::warn!("F_{p}(X; {exps}) has non-integral coefficients");
    }
    cache()
        .lock()
        .expect("density cache")
        .entry(key)
        .or_insert_with(|| f.clone());
    Ok(f)
}

/// `F_p(X;T)` by the recursion on `n`, dropping the largest exponent.
pub fn f_poly(p: u64, exps: &ExponentVector) -> Result<DensityPoly, DensityError> {
    check_prime(p)?;
    Ok(DensityPoly {
        p,
        exps: exps.clone(),
        poly: f_raw(p, exps)?,
    })
}

/// `G(X) = F(−X/p³)`.
pub fn shifted_poly(dp: &DensityPoly) -> Result<ShiftedDensityPoly, DensityError> {
    if dp.exps.len() != 3 {
        return Err(DensityError::NotRankThree(dp.exps.len()));
    }
    let scale = -rpow(&pr(dp.p), -3);
    Ok(ShiftedDensityPoly {
        p: dp.p,
        exps: dp.exps.clone(),
        poly: dp.poly.substitute(&scale, false)?,
    })
}

fn odd_triple(exps: &ExponentVector) -> Result<(i64, i64, i64), DensityError> {
    if exps.len() != 3 {
        return Err(DensityError::NotRankThree(exps.len()));
    }
    if exps.sum() % 2 == 0 {
        return Err(DensityError::OddSumRequired(exps.sum()));
    }
    let a = exps.as_slice();
    Ok((a[0] as i64, a[1] as i64, a[2] as i64))
}

/// The closed form of `G` for odd `a_1 + a_2 + a_3`.
pub fn closed_form_gu3(p: u64, exps: &ExponentVector) -> Result<ShiftedDensityPoly, DensityError> {
    check_prime(p)?;
    let (a1, a2, a3) = odd_triple(exps)?;
    let pp = pr(p);
    let mut inner = LaurentPoly::zero();
    for k in 0..=a1 {
        let sign = if k % 2 == 0 { int(1) } else { int(-1) };
        for l in 0..=(a1 + a2 - 2 * k) {
            inner.add_term(k + l, &sign * rpow(&pp, 2 * k + l));
            inner.add_term(k + l + a3 + 1, -&sign * rpow(&pp, a1 + a2 - l));
        }
    }
    let prefactor = one_plus(rpow(&pp, -3), 1) * one_plus(-rpow(&pp, -2), 1) * one_plus(rpow(&pp, -1), 1);
    let poly = (prefactor * inner).exact_div(&one_plus(int(1), 1))?;
    Ok(ShiftedDensityPoly {
        p,
        exps: exps.clone(),
        poly,
    })
}

/// `α_p(1_s, T) = F((−p)^{−s})`.
pub fn alpha(p: u64, s: u32, exps: &ExponentVector) -> Result<Rational, DensityError> {
    if s == 0 {
        return Err(DensityError::InvalidS);
    }
    let f = f_poly(p, exps)?;
    Ok(f.poly.eval(&neg_p_pow(p, -(s as i64)))?)
}

/// `α_p(1_3, 1_3) = (1 + 1/p)(1 − 1/p²)(1 + 1/p³)`.
pub fn alpha_self(p: u64) -> Rational {
    let pp = pr(p);
    (Rational::one() + rpow(&pp, -1))
        * (Rational::one() - rpow(&pp, -2))
        * (Rational::one() + rpow(&pp, -3))
}

/// `−G′(1)`.
pub fn alpha_prime(p: u64, exps: &ExponentVector) -> Result<Rational, DensityError> {
    odd_triple(exps)?;
    let g = shifted_poly(&f_poly(p, exps)?)?;
    Ok(-g.poly.derivative().eval(&Rational::one())?)
}

/// `(1 − p^{−s})(1 + p^{1−s})`, as printed.
pub fn beta_rank1(p: u64, s: u32) -> Rational {
    let pp = pr(p);
    let s = s as i64;
    (Rational::one() - rpow(&pp, -s)) * (Rational::one() + rpow(&pp, 1 - s))
}

/// `Π_{i<n} (1 − (−p)^i c X^{±1})`.
fn t_denominator(p: u64, n: usize, c: &Rational, exp: i64) -> LaurentPoly {
    let mut acc = LaurentPoly::one();
    for i in 0..n as i64 {
        acc = acc * one_plus(-(neg_p_pow(p, i) * c), exp);
    }
    acc
}

/// The functional equation, cross-multiplied by both `t_n` denominators.
pub fn check_functional_equation(p: u64, exps: &ExponentVector) -> Result<bool, DensityError> {
    let n = exps.len();
    let f = f_poly(p, exps)?.poly;
    let c = rpow(&pr(p), -2 * n as i64);
    let f_dual = f.substitute(&c, true)?;
    let lhs = &f * &t_denominator(p, n, &c, -1);
    let sign = if (n + 1) % 2 == 0 { int(1) } else { int(-1) };
    let factor = LaurentPoly::monomial(sign * rpow(&pr(p), n as i64), 1).pow(exps.sum());
    let rhs = factor * f_dual * t_denominator(p, n, &int(1), 1);
    Ok(lhs == rhs)
}

/// `F(T₊) = p^{2n} X² F(T) + H_p(X) F(p²X; T⁻)`.
pub fn check_recursion_star(p: u64, exps: &ExponentVector) -> Result<bool, DensityError> {
    let n = exps.len() as i64;
    if n == 0 {
        return Ok(true);
    }
    let lhs = f_poly(p, &exps.plus())?.poly;
    let f = f_poly(p, exps)?.poly;
    let fm = f_poly(p, &exps.minus())?.poly;
    let rhs = LaurentPoly::monomial(rpow(&pr(p), 2 * n), 2) * f
        + h_poly(p) * fm.substitute(&rpow(&pr(p), 2), false)?;
    Ok(lhs == rhs)
}

impl DensityPoly {
    pub fn value_at(&self, x: &Rational) -> Rational {
        self.poly.eval(x).expect("density polynomials have no negative exponents")
    }

    pub fn degree(&self) -> i64 {
        self.poly.max_exp().unwrap_or(0)
    }

    pub fn constant_term(&self) -> Rational {
        self.poly.coeff(0)
    }
}

impl ShiftedDensityPoly {
    pub fn value_at_one(&self) -> Rational {
        self.poly.eval(&Rational::one()).expect("polynomial")
    }

    pub fn is_zero_at_one(&self) -> bool {
        self.value_at_one().is_zero()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactpoly::rat;

    fn ev(v: &[u32]) -> ExponentVector {
        ExponentVector::new(v.to_vec())
    }

    #[test]
    fn rank1_examples() {
        assert_eq!(f_poly_rank1(3, 0).unwrap().poly, LaurentPoly::from_ints(0, &[1, -1]));
        assert_eq!(f_poly_rank1(3, 1).unwrap().poly, LaurentPoly::from_ints(0, &[1, 2, -3]));
        assert_eq!(
            f_poly_rank1(3, 2).unwrap().poly,
            LaurentPoly::from_ints(0, &[1, 2, 6, -9])
        );
        for a in 0..=10 {
            assert_eq!(f_poly(5, &ev(&[a])).unwrap().poly, f_poly_rank1(5, a).unwrap().poly);
        }
        assert_eq!(f_poly_rank1(4, 0), Err(DensityError::InvalidPrime(4)));
    }

    #[test]
    fn golden_rank2() {
        // Expanded once by computer algebra from the printed recursion.
        assert_eq!(
            f_poly(3, &ev(&[0, 1])).unwrap().poly,
            LaurentPoly::from_ints(0, &[1, -7, -21, 27])
        );
    }

    #[test]
    fn a_poly_rank2_matches_hand_expansion() {
        // A_3(X;(0,1)) = (1+3X)(1 − X⁻¹/9)·(−1)·(9X)³
        let expected = one_plus(int(3), 1) * one_plus(rat(-1, 9), -1) * LaurentPoly::monomial(int(-729), 3);
        assert_eq!(a_poly(3, &ev(&[0, 1])), expected);
    }

    #[test]
    fn invariants_small() {
        for p in [3u64, 5, 7] {
            for a1 in 0..=3 {
                for a2 in a1..=3 {
                    for a3 in a2..=3 {
                        let e = ev(&[a1, a2, a3]);
                        let f = f_poly(p, &e).unwrap();
                        assert_eq!(f.constant_term(), int(1));
                        assert_eq!(f.degree(), 3 + e.sum() as i64);
                        assert!(f.poly.has_integer_coefficients());
                        assert!(f.poly.min_exp().unwrap() >= 0);
                    }
                }
            }
        }
    }

    #[test]
    fn shift_examples() {
        let dp = DensityPoly {
            p: 3,
            exps: ev(&[0, 0, 0]),
            poly: LaurentPoly::from_ints(0, &[1, -1]),
        };
        assert_eq!(
            shifted_poly(&dp).unwrap().poly,
            LaurentPoly::from_terms([(0, int(1)), (1, rat(1, 27))])
        );
        let g = shifted_poly(&f_poly(3, &ev(&[0, 0, 1])).unwrap()).unwrap();
        assert!(g.is_zero_at_one());
        assert_eq!(
            shifted_poly(&f_poly(3, &ev(&[0, 1])).unwrap()),
            Err(DensityError::NotRankThree(2))
        );
        // G(1) = α_p(1_3, T)
        let e = ev(&[0, 1, 1]);
        let g = shifted_poly(&f_poly(5, &e).unwrap()).unwrap();
        assert_eq!(g.value_at_one(), alpha(5, 3, &e).unwrap());
    }

    #[test]
    fn closed_form_examples() {
        let e = ev(&[0, 0, 1]);
        let cf = closed_form_gu3(3, &e).unwrap();
        assert_eq!(cf.poly, shifted_poly(&f_poly(3, &e).unwrap()).unwrap().poly);
        assert!(cf.is_zero_at_one());
        for p in [3u64, 5, 7] {
            let ap = alpha_prime(p, &e).unwrap();
            assert_eq!(ap / alpha_self(p), int(1));
        }
        assert_eq!(
            closed_form_gu3(3, &ev(&[0, 1, 1])),
            Err(DensityError::OddSumRequired(2))
        );
    }

    #[test]
    fn alpha_examples() {
        assert_eq!(alpha(3, 1, &ev(&[0])).unwrap(), rat(4, 3));
        assert_eq!(alpha(3, 3, &ev(&[0, 0, 0])).unwrap(), rat(896, 729));
        assert_eq!(alpha_self(3), rat(896, 729));
        assert_eq!(alpha_self(5), rat(18144, 15625));
        // The 3x3 unitary group over F_3 has order 24192.
        assert_eq!(alpha_self(3), rat(24192, 19683));
        let big = alpha(3, 40, &ev(&[1, 2])).unwrap();
        assert!((big - int(1)) < rat(1, 1_000_000));
        assert_eq!(alpha(3, 0, &ev(&[0])), Err(DensityError::InvalidS));
    }

    #[test]
    fn alpha_prime_examples() {
        assert_eq!(alpha_prime(3, &ev(&[0, 0, 1])).unwrap(), rat(896, 729));
        for p in [3u64, 5] {
            for a in [1u32, 3, 5] {
                assert_eq!(
                    alpha_prime(p, &ev(&[0, 0, a])).unwrap(),
                    alpha_self(p) * rat(a as i64 + 1, 2)
                );
            }
        }
        assert_eq!(alpha_prime(3, &ev(&[1, 1, 1])).unwrap(), rat(896, 729) * int(-4));
    }

    #[test]
    fn beta_examples() {
        assert_eq!(beta_rank1(3, 1), rat(4, 3));
        assert_eq!(beta_rank1(3, 2), rat(32, 27));
    }

    #[test]
    fn identity_examples() {
        assert!(check_functional_equation(3, &ev(&[1])).unwrap());
        assert!(check_functional_equation(3, &ev(&[0, 1])).unwrap());
        assert!(check_functional_equation(5, &ev(&[1, 2, 2])).unwrap());
        assert!(check_recursion_star(3, &ev(&[0])).unwrap());
        assert!(check_recursion_star(3, &ev(&[0, 1])).unwrap());
        assert!(check_recursion_star(5, &ev(&[1, 1, 3])).unwrap());
    }

    #[test]
    fn sign_flip_breaks_functional_equation() {
        // Guard that the check is not vacuous: a wrong sign in A_p must fail.
        let e = ev(&[0, 1]);
        let fm = f_poly(3, &e.minus()).unwrap().poly;
        let num = h_poly(3) * fm.substitute(&int(9), false).unwrap() + a_poly(3, &e) * &fm;
        let den = one_plus(int(-81), 2);
        assert!(matches!(num.exact_div(&den), Err(PolyError::NotDivisible { .. })));
    }
}
