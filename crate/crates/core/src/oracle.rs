//! Brute-force counting oracles for representation densities.
//!
//! Counts are exact. The rank-one path convolves the norm distribution of
//! `O/p^k`; the general path enumerates `x ∈ M_{m,n}(O/p^k)` column by column.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_bigint::{BigInt, BigUint};
use num_traits::{One, ToPrimitive, Zero};
use rayon::prelude::*;
use thiserror::Error;

use crate::exactpoly::{rpow, Rational};
use crate::padic::{valuation_u64, ExtRingElem, HermMatrix, PadicError, RingParams};

/// Enumeration guard for the general path, as a power of two.
pub const FULL_COUNT_LOG2_LIMIT: u32 = 38;
/// Enumeration guard for norm tables, as a power of two.
pub const NORM_TABLE_LOG2_LIMIT: u32 = 40;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("search space {what} exceeds 2^{limit_log2}")]
    TooLarge { what: String, limit_log2: u32 },
    #[error(transparent)]
    Padic(#[from] PadicError),
    #[error("need k >= a + 1 for a stable count (k = {k}, a = {a})")]
    PrecisionMargin { k: u32, a: u32 },
    #[error("s must be at least 1")]
    InvalidS,
    #[error("S and T must share p and k")]
    MixedParams,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CountResult {
    pub raw_count: BigUint,
    pub k: u32,
    pub normalized: Rational,
}

impl CountResult {
    /// Normalizes by `p^{−k n (2m − n)}`.
    pub fn new(raw_count: BigUint, p: u64, k: u32, m: usize, n: usize) -> Self {
        let e = k as i64 * n as i64 * (2 * m as i64 - n as i64);
        let scale = rpow(&Rational::from_integer(BigInt::from(p)), -e);
        let normalized = Rational::from_integer(BigInt::from(raw_count.clone())) * scale;
        Self {
            raw_count,
            k,
            normalized,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NormTable {
    pub p: u64,
    pub k: u32,
    /// `table[c] = #{x ∈ O/p^k : N(x) = c}`.
    pub table: Vec<u64>,
}

fn log2_exceeds(p: u64, e: u64, limit_log2: u32) -> bool {
    // p^e > 2^limit  <=>  e·log2(p) > limit, checked exactly with integers.
    let mut acc: u128 = 1;
    for _ in 0..e {
        acc = acc.saturating_mul(p as u128);
        if acc > (1u128 << limit_log2) {
            return true;
        }
    }
    false
}

fn tabulate(r: &RingParams, step: u64) -> Vec<u64> {
    let q = r.modulus();
    let sq: Vec<u64> = (0..q).step_by(step as usize).map(|a| r.mul(a, a)).collect();
    let dsq: Vec<u64> = sq.iter().map(|&s| r.mul(s, r.delta())).collect();
    sq.par_iter()
        .fold(
            || vec![0u64; q as usize],
            |mut t, &s| {
                for &d in &dsq {
                    t[r.sub(s, d) as usize] += 1;
                }
                t
            },
        )
        .reduce(
            || vec![0u64; q as usize],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                a
            },
        )
}

/// Norm distribution of `O/p^k` by direct enumeration of `(a, b)`.
pub fn norm_distribution(p: u64, k: u32) -> Result<NormTable, OracleError> {
    let r = RingParams::new(p, k)?;
    if log2_exceeds(p, 2 * k as u64, NORM_TABLE_LOG2_LIMIT) {
        return Err(OracleError::TooLarge {
            what: format!("p^(2k) = {p}^{}", 2 * k),
            limit_log2: NORM_TABLE_LOG2_LIMIT,
        });
    }
    Ok(NormTable {
        p,
        k,
        table: tabulate(&r, 1),
    })
}

type TableCache = Mutex<HashMap<(u64, u32, bool), Arc<Vec<u64>>>>;

fn table_cache() -> &'static TableCache {
    static CACHE: OnceLock<TableCache> = OnceLock::new();
    CACHE.get_or_init(Default::default)
}

/// Norm table, full or restricted to `pO`, memoized per `(p, k)`.
fn cached_table(p: u64, k: u32, non_primitive: bool) -> Result<Arc<Vec<u64>>, OracleError> {
    let key = (p, k, non_primitive);
    if let Some(t) = table_cache().lock().expect("cache poisoned").get(&key) {
        return Ok(t.clone());
    }
    let t = Arc::new(if non_primitive {
        norm_distribution_non_primitive(p, k)?
    } else {
        norm_distribution(p, k)?.table
    });
    table_cache().lock().expect("cache poisoned").insert(key, t.clone());
    Ok(t)
}

/// Norm distribution restricted to `x ∈ pO/p^k`.
fn norm_distribution_non_primitive(p: u64, k: u32) -> Result<Vec<u64>, OracleError> {
    let r = RingParams::new(p, k)?;
    if log2_exceeds(p, 2 * k as u64, NORM_TABLE_LOG2_LIMIT) {
        return Err(OracleError::TooLarge {
            what: format!("p^(2k) = {p}^{}", 2 * k),
            limit_log2: NORM_TABLE_LOG2_LIMIT,
        });
    }
    Ok(tabulate(&r, p))
}

/// Convolution over `Z/p^k` of two functions invariant under scaling by
/// units. Such functions depend only on the valuation of the argument, so
/// only the `k + 1` representatives `p^v` are summed.
fn convolve_invariant(f: &[BigUint], g: &[BigUint], p: u64, k: u32) -> Vec<BigUint> {
    let q = f.len();
    let reps: Vec<BigUint> = (0..=k)
        .into_par_iter()
        .map(|v| {
            let c = if v == k { 0 } else { p.pow(v) as usize };
            let mut acc = BigUint::zero();
            for x in 0..q {
                if f[x].is_zero() {
                    continue;
                }
                let y = (c + q - x) % q;
                if !g[y].is_zero() {
                    acc += &f[x] * &g[y];
                }
            }
            acc
        })
        .collect();
    (0..q)
        .map(|c| reps[valuation_u64(c as u64, p, k) as usize].clone())
        .collect()
}

/// Distribution of `N(x_1) + … + N(x_s)`.
fn fold_distribution(base: &[u64], p: u64, k: u32, s: u32) -> Vec<BigUint> {
    let b: Vec<BigUint> = base.iter().map(|&c| BigUint::from(c)).collect();
    let mut acc = b.clone();
    for _ in 1..s {
        acc = convolve_invariant(&acc, &b, p, k);
    }
    acc
}

fn target_index(p: u64, k: u32, a: u32) -> usize {
    if a >= k {
        0
    } else {
        p.pow(a) as usize
    }
}

fn check_rank1_args(k: u32, s: u32, a: u32) -> Result<(), OracleError> {
    if s == 0 {
        return Err(OracleError::InvalidS);
    }
    if k < a + 1 {
        return Err(OracleError::PrecisionMargin { k, a });
    }
    Ok(())
}

/// Raw rank-one count `#{x ∈ (O/p^k)^s : Σ N(x_i) ≡ c}`, no precision check.
fn rank1_raw(p: u64, k: u32, s: u32, c: u64) -> Result<BigUint, OracleError> {
    let d = fold_distribution(&cached_table(p, k, false)?, p, k, s);
    Ok(d[c as usize].clone())
}

/// `α̂_p(1_s, (p^a))` at precision `k` via the norm distribution.
pub fn alpha_hat_rank1(p: u64, k: u32, s: u32, a: u32) -> Result<CountResult, OracleError> {
    check_rank1_args(k, s, a)?;
    let raw = rank1_raw(p, k, s, target_index(p, k, a) as u64)?;
    Ok(CountResult::new(raw, p, k, s as usize, 1))
}

/// `β̂_p(1_s, (p^a))`: only `x ≢ 0 mod p` is counted.
pub fn beta_hat_rank1(p: u64, k: u32, s: u32, a: u32) -> Result<CountResult, OracleError> {
    check_rank1_args(k, s, a)?;
    let c = target_index(p, k, a);
    let full = fold_distribution(&cached_table(p, k, false)?, p, k, s);
    let deep = fold_distribution(&cached_table(p, k, true)?, p, k, s);
    Ok(CountResult::new(&full[c] - &deep[c], p, k, s as usize, 1))
}

/// The three terms of `α(p^a) = β(p^a) + p^e·α(p^{a−2})`.
#[derive(Clone, Debug, PartialEq)]
pub struct AlphaBetaTerms {
    pub p: u64,
    pub s: u32,
    pub a: u32,
    pub alpha: Rational,
    pub beta: Rational,
    pub alpha_lower: Rational,
}

impl AlphaBetaTerms {
    pub fn holds_with_exponent(&self, e: i64) -> bool {
        let pe = rpow(&Rational::from_integer(BigInt::from(self.p)), e);
        self.alpha == &self.beta + pe * &self.alpha_lower
    }

    /// The exponent `3 − 2m` as printed, with `m = s`.
    pub fn printed_exponent(&self) -> i64 {
        3 - 2 * self.s as i64
    }
}

/// Oracle values for the α/β recurrence at `a ≥ 2`.
pub fn alpha_beta_terms(p: u64, k: u32, s: u32, a: u32) -> Result<AlphaBetaTerms, OracleError> {
    assert!(a >= 2, "the recurrence needs a >= 2");
    Ok(AlphaBetaTerms {
        p,
        s,
        a,
        alpha: alpha_hat_rank1(p, k, s, a)?.normalized,
        beta: beta_hat_rank1(p, k, s, a)?.normalized,
        alpha_lower: alpha_hat_rank1(p, k, s, a - 2)?.normalized,
    })
}

type Vector = Vec<ExtRingElem>;

fn all_vectors(params: RingParams, m: usize) -> impl Iterator<Item = Vector> {
    let q = params.modulus();
    let q2 = q * q;
    let total = q2.pow(m as u32);
    (0..total).map(move |mut idx| {
        let mut v = Vec::with_capacity(m);
        for _ in 0..m {
            let e = idx % q2;
            idx /= q2;
            v.push(ExtRingElem::from_raw(params, e % q, e / q));
        }
        v
    })
}

/// `h(u, v) = Σ_k u_k (S σ(v))_k` given `w = S σ(v)`.
fn pair(u: &[ExtRingElem], w: &[ExtRingElem]) -> ExtRingElem {
    let mut acc = ExtRingElem::zero(*u[0].params());
    for (x, y) in u.iter().zip(w) {
        acc = acc.add_unchecked(&x.mul_unchecked(y));
    }
    acc
}

fn s_sigma(s: &HermMatrix, v: &[ExtRingElem]) -> Vector {
    let m = s.n();
    (0..m)
        .map(|i| {
            let mut acc = ExtRingElem::zero(*s.params());
            for (l, x) in v.iter().enumerate() {
                acc = acc.add_unchecked(&s.get(i, l).mul_unchecked(&x.conj()));
            }
            acc
        })
        .collect()
}

struct Column {
    v: Vector,
    w: Vector,
}

fn extend(chosen: &mut Vec<usize>, cands: &[Vec<Column>], t: &HermMatrix) -> u64 {
    let j = chosen.len();
    if j == cands.len() {
        return 1;
    }
    let mut total = 0;
    'cand: for (idx, c) in cands[j].iter().enumerate() {
        for (i, &ci) in chosen.iter().enumerate() {
            if pair(&cands[i][ci].v, &c.w) != t.get(i, j) {
                continue 'cand;
            }
        }
        chosen.push(idx);
        total += extend(chosen, cands, t);
        chosen.pop();
    }
    total
}

/// Exact count of `x ∈ M_{m,n}(O/p^k)` with `ᵗx S σ(x) ≡ T`, normalized by
/// `p^{−k n (2m − n)}`.
pub fn count_representations(s: &HermMatrix, t: &HermMatrix) -> Result<CountResult, OracleError> {
    if s.params() != t.params() {
        return Err(OracleError::MixedParams);
    }
    let params = *s.params();
    let (p, k) = (params.p(), params.k());
    let (m, n) = (s.n(), t.n());
    if log2_exceeds(p, 2 * k as u64 * m as u64 * n as u64, FULL_COUNT_LOG2_LIMIT) {
        return Err(OracleError::TooLarge {
            what: format!("p^(2kmn) = {p}^{}", 2 * k as usize * m * n),
            limit_log2: FULL_COUNT_LOG2_LIMIT,
        });
    }
    if n == 0 {
        return Ok(CountResult::new(BigUint::one(), p, k, m, 0));
    }
    let raw: u64 = if n == 1 {
        let target = t.get(0, 0);
        let q2 = params.modulus().pow(2);
        let total = q2.pow(m as u32);
        (0..total)
            .into_par_iter()
            .filter(|&idx| {
                let v = all_vectors_at(params, m, idx);
                pair(&v, &s_sigma(s, &v)) == target
            })
            .count() as u64
    } else {
        let cands: Vec<Vec<Column>> = (0..n)
            .map(|j| {
                let diag = t.get(j, j);
                all_vectors(params, m)
                    .filter_map(|v| {
                        let w = s_sigma(s, &v);
                        (pair(&v, &w) == diag).then_some(Column { v, w })
                    })
                    .collect()
            })
            .collect();
        (0..cands[0].len())
            .into_par_iter()
            .map(|first| extend(&mut vec![first], &cands, t))
            .sum()
    };
    Ok(CountResult::new(BigUint::from(raw), p, k, m, n))
}

fn all_vectors_at(params: RingParams, m: usize, mut idx: u64) -> Vector {
    let q = params.modulus();
    let q2 = q * q;
    (0..m)
        .map(|_| {
            let e = idx % q2;
            idx /= q2;
            ExtRingElem::from_raw(params, e % q, e / q)
        })
        .collect()
}

fn rank1_shape(s: &HermMatrix, t: &HermMatrix) -> Option<u64> {
    (t.n() == 1 && s.is_identity()).then(|| t.get(0, 0).a())
}

/// True iff the normalized counts agree for every `k` in `[k_lo, k_hi]`.
/// `S` and `T` must be given at precision at least `k_hi`.
pub fn stabilization_check(
    s: &HermMatrix,
    t: &HermMatrix,
    k_lo: u32,
    k_hi: u32,
) -> Result<bool, OracleError> {
    if s.params() != t.params() {
        return Err(OracleError::MixedParams);
    }
    let p = s.params().p();
    let mut first: Option<Rational> = None;
    for k in k_lo..=k_hi {
        let (sk, tk) = (s.reduce_to(k)?, t.reduce_to(k)?);
        let value = match rank1_shape(&sk, &tk) {
            Some(c) => {
                let raw = rank1_raw(p, k, sk.n() as u32, c)?;
                CountResult::new(raw, p, k, sk.n(), 1).normalized
            }
            None => count_representations(&sk, &tk)?.normalized,
        };
        match &first {
            None => first = Some(value),
            Some(f) if *f != value => return Ok(false),
            _ => {}
        }
    }
    Ok(true)
}

/// `|U_n(F_q)| = q^{n(n−1)/2} Π_{i=1}^{n} (q^i − (−1)^i)`.
pub fn unitary_group_order(q: u64, n: u32) -> BigUint {
    let qb = BigInt::from(q);
    let mut acc = qb.pow(n * (n - 1) / 2);
    for i in 1..=n {
        let sign = if i % 2 == 0 { 1 } else { -1 };
        acc *= qb.pow(i) - BigInt::from(sign);
    }
    acc.to_biguint().expect("positive")
}

/// Observed smallest `k` in `[1, k_max]` from which the rank-one counts stay
/// constant up to `k_max`.
pub fn observed_min_stable_k(p: u64, s: u32, a: u32, k_max: u32) -> Result<u32, OracleError> {
    let values: Vec<Rational> = (1..=k_max)
        .map(|k| {
            let raw = rank1_raw(p, k, s, target_index(p, k, a) as u64)?;
            Ok(CountResult::new(raw, p, k, s as usize, 1).normalized)
        })
        .collect::<Result<_, OracleError>>()?;
    let last = values.last().expect("k_max >= 1").clone();
    let mut k = k_max;
    while k > 1 && values[k as usize - 2] == last {
        k -= 1;
    }
    Ok(k)
}

pub fn raw_count_u64(c: &CountResult) -> Option<u64> {
    c.raw_count.to_u64()
}
