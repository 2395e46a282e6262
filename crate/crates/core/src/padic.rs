//! Truncated arithmetic in `O/p^k = (Z/p^k)[ω]/(ω² − δ)`, hermitian
//! matrices over it, and exponent extraction by hermitian Gram reduction.

use std::fmt;

use num_integer::Integer;
use serde_json::{json, Value};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PadicError {
    #[error("p = {0} is not an odd prime")]
    InvalidPrime(u64),
    #[error("precision k must be at least 1")]
    InvalidPrecision,
    #[error("p^k is too large for 64-bit residues (p = {p}, k = {k})")]
    ModulusOverflow { p: u64, k: u32 },
    #[error("delta = {delta} is not a quadratic nonresidue mod {p}")]
    NotNonresidue { p: u64, delta: u64 },
    #[error("operands carry different ring parameters")]
    MixedParams,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("matrix is not hermitian at ({i}, {j})")]
    NotHermitian { i: usize, j: usize },
    #[error("matrix is singular at precision p^{k}")]
    SingularMatrix { k: u32 },
    #[error("determinant valuation {valuation} cannot be certified below k = {k}")]
    InsufficientPrecision { valuation: u32, k: u32 },
    #[error("element is not a unit")]
    NotUnit,
    #[error("malformed matrix json: {0}")]
    Json(String),
}

pub fn is_odd_prime(p: u64) -> bool {
    if p < 3 || p % 2 == 0 {
        return false;
    }
    let mut d = 3;
    while d * d <= p {
        if p % d == 0 {
            return false;
        }
        d += 2;
    }
    true
}

fn pow_mod(b: u64, mut e: u64, m: u64) -> u64 {
    let m = m as u128;
    let mut acc = 1u128;
    let mut b = b as u128 % m;
    while e > 0 {
        if e & 1 == 1 {
            acc = acc * b % m;
        }
        b = b * b % m;
        e >>= 1;
    }
    acc as u64
}

fn is_nonresidue(p: u64, d: u64) -> bool {
    d % p != 0 && pow_mod(d, (p - 1) / 2, p) == p - 1
}

/// Least positive quadratic nonresidue mod an odd prime.
pub fn least_nonresidue(p: u64) -> u64 {
    (2..p).find(|&d| is_nonresidue(p, d)).expect("odd prime has a nonresidue")
}

/// p-adic valuation of an integer residue, capped at `cap` (used for zero).
pub fn valuation_u64(mut x: u64, p: u64, cap: u32) -> u32 {
    if x == 0 {
        return cap;
    }
    let mut v = 0;
    while x % p == 0 && v < cap {
        x /= p;
        v += 1;
    }
    v
}

fn modinv(x: u64, m: u64) -> Option<u64> {
    let g = (x as i128).extended_gcd(&(m as i128));
    if g.gcd != 1 {
        return None;
    }
    Some(g.x.rem_euclid(m as i128) as u64)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct RingParams {
    p: u64,
    k: u32,
    delta: u64,
    modulus: u64,
}

impl RingParams {
    pub fn new(p: u64, k: u32) -> Result<Self, PadicError> {
        if !is_odd_prime(p) {
            return Err(PadicError::InvalidPrime(p));
        }
        Self::with_delta(p, k, least_nonresidue(p))
    }

    /// Same ring with an explicit nonresidue; all choices give isomorphic rings.
    pub fn with_delta(p: u64, k: u32, delta: u64) -> Result<Self, PadicError> {
        if !is_odd_prime(p) {
            return Err(PadicError::InvalidPrime(p));
        }
        if k == 0 {
            return Err(PadicError::InvalidPrecision);
        }
        if !is_nonresidue(p, delta) {
            return Err(PadicError::NotNonresidue { p, delta });
        }
        let modulus = p
            .checked_pow(k)
            .filter(|&m| m < (1u64 << 62))
            .ok_or(PadicError::ModulusOverflow { p, k })?;
        Ok(Self {
            p,
            k,
            delta: delta % modulus,
            modulus,
        })
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn delta(&self) -> u64 {
        self.delta
    }

    /// `p^k`.
    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    pub fn at_precision(&self, k: u32) -> Result<Self, PadicError> {
        Self::with_delta(self.p, k, self.delta)
    }

    pub fn reduce(&self, x: i128) -> u64 {
        x.rem_euclid(self.modulus as i128) as u64
    }

    #[inline]
    pub fn add(&self, x: u64, y: u64) -> u64 {
        let s = x + y;
        if s >= self.modulus {
            s - self.modulus
        } else {
            s
        }
    }

    #[inline]
    pub fn sub(&self, x: u64, y: u64) -> u64 {
        if x >= y {
            x - y
        } else {
            x + self.modulus - y
        }
    }

    #[inline]
    pub fn mul(&self, x: u64, y: u64) -> u64 {
        ((x as u128 * y as u128) % self.modulus as u128) as u64
    }

    /// Norm `a² − δb²` of `a + bω`.
    #[inline]
    pub fn norm_raw(&self, a: u64, b: u64) -> u64 {
        let aa = self.mul(a, a);
        let bb = self.mul(self.mul(b, b), self.delta);
        self.sub(aa, bb)
    }

    /// `(a + bω)(c + dω)`.
    #[inline]
    pub fn mul_raw(&self, (a, b): (u64, u64), (c, d): (u64, u64)) -> (u64, u64) {
        let re = self.add(self.mul(a, c), self.mul(self.mul(b, d), self.delta));
        let im = self.add(self.mul(a, d), self.mul(b, c));
        (re, im)
    }

    pub fn residue_valuation(&self, x: u64) -> u32 {
        valuation_u64(x, self.p, self.k)
    }
}

/// `a + bω` modulo `p^k`.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct ExtRingElem {
    a: u64,
    b: u64,
    params: RingParams,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RingOp {
    Add,
    Mul,
    Conj,
    Norm,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RingValue {
    Elem(ExtRingElem),
    Residue(u64),
}

impl ExtRingElem {
    pub fn new(params: RingParams, a: i128, b: i128) -> Self {
        Self {
            a: params.reduce(a),
            b: params.reduce(b),
            params,
        }
    }

    pub fn from_raw(params: RingParams, a: u64, b: u64) -> Self {
        debug_assert!(a < params.modulus && b < params.modulus);
        Self { a, b, params }
    }

    pub fn zero(params: RingParams) -> Self {
        Self::from_raw(params, 0, 0)
    }

    pub fn one(params: RingParams) -> Self {
        Self::from_raw(params, 1 % params.modulus, 0)
    }

    pub fn omega(params: RingParams) -> Self {
        Self::from_raw(params, 0, 1 % params.modulus)
    }

    pub fn a(&self) -> u64 {
        self.a
    }

    pub fn b(&self) -> u64 {
        self.b
    }

    pub fn params(&self) -> &RingParams {
        &self.params
    }

    fn check(&self, other: &Self) -> Result<(), PadicError> {
        if self.params == other.params {
            Ok(())
        } else {
            Err(PadicError::MixedParams)
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self, PadicError> {
        self.check(other)?;
        Ok(self.add_unchecked(other))
    }

    pub fn sub(&self, other: &Self) -> Result<Self, PadicError> {
        self.check(other)?;
        Ok(self.sub_unchecked(other))
    }

    pub fn mul(&self, other: &Self) -> Result<Self, PadicError> {
        self.check(other)?;
        Ok(self.mul_unchecked(other))
    }

    pub(crate) fn add_unchecked(&self, o: &Self) -> Self {
        let r = &self.params;
        Self::from_raw(*r, r.add(self.a, o.a), r.add(self.b, o.b))
    }

    pub(crate) fn sub_unchecked(&self, o: &Self) -> Self {
        let r = &self.params;
        Self::from_raw(*r, r.sub(self.a, o.a), r.sub(self.b, o.b))
    }

    pub(crate) fn mul_unchecked(&self, o: &Self) -> Self {
        let (a, b) = self.params.mul_raw((self.a, self.b), (o.a, o.b));
        Self::from_raw(self.params, a, b)
    }

    pub fn neg(&self) -> Self {
        let r = &self.params;
        Self::from_raw(*r, r.sub(0, self.a), r.sub(0, self.b))
    }

    /// The Galois involution `a + bω ↦ a − bω`.
    pub fn conj(&self) -> Self {
        Self::from_raw(self.params, self.a, self.params.sub(0, self.b))
    }

    pub fn norm(&self) -> u64 {
        self.params.norm_raw(self.a, self.b)
    }

    pub fn is_zero(&self) -> bool {
        self.a == 0 && self.b == 0
    }

    /// `min(v(a), v(b))`, which is `k` for the zero residue.
    pub fn valuation(&self) -> u32 {
        self.params
            .residue_valuation(self.a)
            .min(self.params.residue_valuation(self.b))
    }

    pub fn is_unit(&self) -> bool {
        self.a % self.params.p != 0 || self.b % self.params.p != 0
    }

    pub fn inverse(&self) -> Result<Self, PadicError> {
        let n = self.norm();
        let ninv = modinv(n, self.params.modulus).ok_or(PadicError::NotUnit)?;
        let c = self.conj();
        let r = &self.params;
        Ok(Self::from_raw(*r, r.mul(c.a, ninv), r.mul(c.b, ninv)))
    }

    pub fn scale_int(&self, c: u64) -> Self {
        let r = &self.params;
        Self::from_raw(*r, r.mul(self.a, c), r.mul(self.b, c))
    }
}

impl fmt::Debug for ExtRingElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}+{}w (mod {})", self.a, self.b, self.params.modulus)
    }
}

pub fn ring_op(x: &ExtRingElem, y: &ExtRingElem, kind: RingOp) -> Result<RingValue, PadicError> {
    x.check(y)?;
    Ok(match kind {
        RingOp::Add => RingValue::Elem(x.add_unchecked(y)),
        RingOp::Mul => RingValue::Elem(x.mul_unchecked(y)),
        RingOp::Conj => RingValue::Elem(x.conj()),
        RingOp::Norm => RingValue::Residue(x.norm()),
    })
}

/// Dense matrix over `O/p^k`, row-major.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct ExtMatrix {
    params: RingParams,
    rows: usize,
    cols: usize,
    entries: Vec<ExtRingElem>,
}

impl ExtMatrix {
    pub fn zeros(params: RingParams, rows: usize, cols: usize) -> Self {
        Self {
            params,
            rows,
            cols,
            entries: vec![ExtRingElem::zero(params); rows * cols],
        }
    }

    pub fn identity(params: RingParams, n: usize) -> Self {
        let mut m = Self::zeros(params, n, n);
        for i in 0..n {
            m.set(i, i, ExtRingElem::one(params));
        }
        m
    }

    pub fn from_entries(
        params: RingParams,
        rows: usize,
        cols: usize,
        entries: Vec<ExtRingElem>,
    ) -> Result<Self, PadicError> {
        if entries.len() != rows * cols {
            return Err(PadicError::DimensionMismatch(format!(
                "{} entries for a {rows}x{cols} matrix",
                entries.len()
            )));
        }
        if entries.iter().any(|e| e.params != params) {
            return Err(PadicError::MixedParams);
        }
        Ok(Self {
            params,
            rows,
            cols,
            entries,
        })
    }

    pub fn params(&self) -> &RingParams {
        &self.params
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> ExtRingElem {
        self.entries[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: ExtRingElem) {
        self.entries[i * self.cols + j] = v;
    }

    pub fn matmul(&self, other: &Self) -> Result<Self, PadicError> {
        if self.params != other.params {
            return Err(PadicError::MixedParams);
        }
        if self.cols != other.rows {
            return Err(PadicError::DimensionMismatch(format!(
                "{}x{} times {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Self::zeros(self.params, self.rows, other.cols);
        for i in 0..self.rows {
            for j in 0..other.cols {
                let mut acc = ExtRingElem::zero(self.params);
                for l in 0..self.cols {
                    acc = acc.add_unchecked(&self.get(i, l).mul_unchecked(&other.get(l, j)));
                }
                out.set(i, j, acc);
            }
        }
        Ok(out)
    }

    pub fn transpose(&self) -> Self {
        let mut out = Self::zeros(self.params, self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.set(j, i, self.get(i, j));
            }
        }
        out
    }

    pub fn conj(&self) -> Self {
        Self {
            entries: self.entries.iter().map(ExtRingElem::conj).collect(),
            ..self.clone()
        }
    }

    /// Invertible over `O/p^k` iff invertible modulo `p`; checked by
    /// Gaussian elimination over the residue field.
    pub fn is_unimodular(&self) -> bool {
        if self.rows != self.cols {
            return false;
        }
        let f = RingParams::with_delta(self.params.p, 1, self.params.delta % self.params.p)
            .expect("residue field parameters");
        let n = self.rows;
        let mut m: Vec<ExtRingElem> = self
            .entries
            .iter()
            .map(|e| ExtRingElem::new(f, e.a as i128, e.b as i128))
            .collect();
        for c in 0..n {
            let Some(piv) = (c..n).find(|&r| !m[r * n + c].is_zero()) else {
                return false;
            };
            for j in 0..n {
                m.swap(c * n + j, piv * n + j);
            }
            let inv = m[c * n + c].inverse().expect("nonzero in a field");
            for r in (c + 1)..n {
                let factor = m[r * n + c].mul_unchecked(&inv);
                for j in c..n {
                    let t = factor.mul_unchecked(&m[c * n + j]);
                    m[r * n + j] = m[r * n + j].sub_unchecked(&t);
                }
            }
        }
        true
    }
}

/// Hermitian matrix over `O/p^k`, both triangles stored.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct HermMatrix {
    inner: ExtMatrix,
}

impl HermMatrix {
    pub fn new(m: ExtMatrix) -> Result<Self, PadicError> {
        if m.rows != m.cols {
            return Err(PadicError::DimensionMismatch("hermitian matrix must be square".into()));
        }
        for i in 0..m.rows {
            for j in i..m.rows {
                if m.get(j, i) != m.get(i, j).conj() {
                    return Err(PadicError::NotHermitian { i, j });
                }
            }
        }
        Ok(Self { inner: m })
    }

    pub fn identity(params: RingParams, n: usize) -> Self {
        Self {
            inner: ExtMatrix::identity(params, n),
        }
    }

    /// `diag(d_1, …, d_n)` with integer entries.
    pub fn diag(params: RingParams, d: &[i128]) -> Self {
        let mut m = ExtMatrix::zeros(params, d.len(), d.len());
        for (i, &x) in d.iter().enumerate() {
            m.set(i, i, ExtRingElem::new(params, x, 0));
        }
        Self { inner: m }
    }

    /// `diag(p^{a_1}, …, p^{a_n})`.
    pub fn diag_powers(params: RingParams, exps: &[u32]) -> Self {
        let p = params.p as i128;
        let d: Vec<i128> = exps
            .iter()
            .map(|&a| if a >= params.k { 0 } else { p.pow(a) })
            .collect();
        Self::diag(params, &d)
    }

    pub fn params(&self) -> &RingParams {
        &self.inner.params
    }

    pub fn n(&self) -> usize {
        self.inner.rows
    }

    pub fn get(&self, i: usize, j: usize) -> ExtRingElem {
        self.inner.get(i, j)
    }

    pub fn as_matrix(&self) -> &ExtMatrix {
        &self.inner
    }

    pub fn is_identity(&self) -> bool {
        self.inner == ExtMatrix::identity(self.inner.params, self.n())
    }

    /// Reduction of every entry modulo `p^k` for a smaller `k`.
    pub fn reduce_to(&self, k: u32) -> Result<Self, PadicError> {
        let params = self.inner.params.at_precision(k)?;
        let entries = self
            .inner
            .entries
            .iter()
            .map(|e| ExtRingElem::new(params, e.a as i128, e.b as i128))
            .collect();
        Ok(Self {
            inner: ExtMatrix::from_entries(params, self.n(), self.n(), entries)?,
        })
    }

    /// `ᵗg · self · σ(g)`.
    pub fn congruence(&self, g: &ExtMatrix) -> Result<Self, PadicError> {
        herm_apply(self, g)
    }

    pub fn to_json(&self) -> Value {
        let r = &self.inner.params;
        let rows: Vec<Value> = (0..self.n())
            .map(|i| {
                Value::Array(
                    (0..self.n())
                        .map(|j| {
                            let e = self.get(i, j);
                            json!({"a": e.a, "b": e.b})
                        })
                        .collect(),
                )
            })
            .collect();
        json!({"p": r.p, "k": r.k, "delta": r.delta, "entries": rows})
    }

    pub fn from_json(v: &Value) -> Result<Self, PadicError> {
        let bad = |m: &str| PadicError::Json(m.to_string());
        let num = |k: &str| v.get(k).and_then(Value::as_u64).ok_or_else(|| bad(k));
        let p = num("p")?;
        let k = u32::try_from(num("k")?).map_err(|_| bad("k"))?;
        let params = match v.get("delta") {
            Some(d) => RingParams::with_delta(p, k, d.as_u64().ok_or_else(|| bad("delta"))?)?,
            None => RingParams::new(p, k)?,
        };
        let rows = v
            .get("entries")
            .and_then(Value::as_array)
            .ok_or_else(|| bad("entries"))?;
        let n = rows.len();
        let mut entries = Vec::with_capacity(n * n);
        for row in rows {
            let row = row.as_array().ok_or_else(|| bad("row"))?;
            if row.len() != n {
                return Err(PadicError::DimensionMismatch("ragged entries".into()));
            }
            for e in row {
                let a = e.get("a").and_then(Value::as_i64).ok_or_else(|| bad("a"))?;
                let b = e.get("b").and_then(Value::as_i64).unwrap_or(0);
                entries.push(ExtRingElem::new(params, a as i128, b as i128));
            }
        }
        Self::new(ExtMatrix::from_entries(params, n, n, entries)?)
    }
}

/// Sorted exponents `(a_1 ≤ … ≤ a_n)` of `diag(p^{a_1}, …, p^{a_n})`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug, Default)]
pub struct ExponentVector(Vec<u32>);

impl ExponentVector {
    pub fn new(mut exps: Vec<u32>) -> Self {
        exps.sort_unstable();
        Self(exps)
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn sum(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn last(&self) -> Option<u32> {
        self.0.last().copied()
    }

    /// `T⁻`: drops the largest exponent.
    pub fn minus(&self) -> Self {
        let mut v = self.0.clone();
        v.pop();
        Self(v)
    }

    /// `T₊`: raises the largest exponent by 2.
    pub fn plus(&self) -> Self {
        let mut v = self.0.clone();
        if let Some(l) = v.last_mut() {
            *l += 2;
        }
        Self(v)
    }
}

impl From<&[u32]> for ExponentVector {
    fn from(v: &[u32]) -> Self {
        Self::new(v.to_vec())
    }
}

impl fmt::Display for ExponentVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(u32::to_string).collect();
        write!(f, "{}", parts.join(","))
    }
}

/// `ᵗx · S · σ(x)`.
pub fn herm_apply(s: &HermMatrix, x: &ExtMatrix) -> Result<HermMatrix, PadicError> {
    if s.params() != x.params() {
        return Err(PadicError::MixedParams);
    }
    if s.n() != x.rows {
        return Err(PadicError::DimensionMismatch(format!(
            "S is {0}x{0} but x has {1} rows",
            s.n(),
            x.rows
        )));
    }
    let prod = x.transpose().matmul(&s.inner)?.matmul(&x.conj())?;
    let out = HermMatrix::new(prod);
    debug_assert!(out.is_ok(), "S[x] must be hermitian");
    out
}

/// Row/column operation `e_target += c·e_source` applied as a congruence.
fn add_multiple(m: &mut [ExtRingElem], n: usize, target: usize, source: usize, c: ExtRingElem) {
    for l in 0..n {
        let t = c.mul_unchecked(&m[source * n + l]);
        m[target * n + l] = m[target * n + l].add_unchecked(&t);
    }
    let cs = c.conj();
    for l in 0..n {
        let t = m[l * n + source].mul_unchecked(&cs);
        m[l * n + target] = m[l * n + target].add_unchecked(&t);
    }
}

/// Exponent vector of the diagonal form of `T`.
pub fn herm_diagonalize(t: &HermMatrix) -> Result<ExponentVector, PadicError> {
    let params = *t.params();
    let (p, k, q) = (params.p, params.k, params.modulus);
    let n = t.n();
    let mut m = t.inner.entries.clone();
    let mut alive: Vec<usize> = (0..n).collect();
    let mut exps = Vec::with_capacity(n);

    while !alive.is_empty() {
        let mut best: Option<(u32, usize, usize)> = None;
        for (ii, &i) in alive.iter().enumerate() {
            for &j in &alive[ii..] {
                let v = m[i * n + j].valuation();
                // Diagonal entries win ties so the off-diagonal trick is
                // only used when it is needed.
                let better = match best {
                    None => true,
                    Some((bv, bi, bj)) => v < bv || (v == bv && i == j && bi != bj),
                };
                if better {
                    best = Some((v, i, j));
                }
            }
        }
        let (v, i, j) = best.expect("nonempty block");
        if v >= k {
            return Err(PadicError::SingularMatrix { k });
        }
        if i != j {
            // h(e_i + c e_j) = h_ii + Tr(c h_ji) + N(c) h_jj; choose c ∈ {1, ω}
            // so that the trace term keeps valuation v.
            let tji = m[j * n + i];
            let c = if params.residue_valuation(tji.a()) == v {
                ExtRingElem::one(params)
            } else {
                ExtRingElem::omega(params)
            };
            add_multiple(&mut m, n, i, j, c);
            debug_assert_eq!(m[i * n + i].valuation(), v);
        }
        let pv = p.pow(v);
        let unit = m[i * n + i].a() / pv;
        let uinv = modinv(unit, q).expect("pivot is p^v times a unit");
        for &jj in &alive {
            if jj == i {
                continue;
            }
            let e = m[jj * n + i];
            if e.is_zero() {
                continue;
            }
            let w = ExtRingElem::from_raw(params, e.a() / pv, e.b() / pv);
            let lambda = w.scale_int(uinv).neg();
            add_multiple(&mut m, n, jj, i, lambda);
            debug_assert!(m[jj * n + i].is_zero());
        }
        exps.push(v);
        alive.retain(|&x| x != i);
    }
    let out = ExponentVector::new(exps);
    if out.sum() >= k {
        return Err(PadicError::InsufficientPrecision {
            valuation: out.sum(),
            k,
        });
    }
    Ok(out)
}

pub fn det_valuation(t: &HermMatrix) -> Result<u32, PadicError> {
    herm_diagonalize(t).map(|e| e.sum())
}
