//! Points of the circle group `T = R/Z` in canonical mixed-radix form
//! `x = sum_{n>=1} c_n / a_n` with `0 <= c_n <= b_n - 1`, and certified
//! enclosures of `{m x}` and `||m x||`.
//!
//! For `m = r a_k`, the part `sum_{n<=k} c_n a_k / a_n` is an integer, so
//! `{m x} = {r y_k}` with
//!
//! ```text
//! y_k = sum_{n>k} c_n / (b_{k+1} b_{k+2} ... b_n)  in [0, 1].
//! ```
//!
//! A window of `depth` terms gives `y_k` in `[S, S + 1/P]` with
//! `P = b_{k+1} ... b_{k+depth}` and `S` an exact fraction over `P`; the tail
//! bound is the mixed-radix inequality `sum_{i>=j} c_i / a_i <= 1 / a_{j-1}`
//! rescaled by `a_{k+depth}`.

use std::fmt;

use num_bigint::BigUint;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::density::IndexSet;
use crate::error::{Error, Result};
use crate::sequence::ArithSeq;

/// Default enclosure width, `2^-40`.
pub fn default_tol() -> BigRational {
    BigRational::new(1.into(), BigUint::from(1u64 << 40).into())
}

/// Truncation depth beyond which refinement gives up and reports
/// [`EnclosureStatus::Inconclusive`].
pub const DEPTH_CAP: u32 = 1000;

/// Digit assigned to every member of a rule-based support.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DigitRule {
    Constant(u64),
    /// `c_n = b_n - 1`.
    Max,
}

/// How `c_n` is produced.
#[derive(Clone, Debug)]
pub enum DigitSource {
    /// Nonzero digits `(n, c_n)`, sorted by `n`.
    Finite(Vec<(u64, u64)>),
    Rule { support: IndexSet, digit: DigitRule },
    /// Canonical digits of `p / q`, produced greedily.
    Rational { p: BigUint, q: BigUint },
}

/// What a construction knows about `b_n` along the support, used by the
/// structural membership oracles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SupportGrowth {
    /// `b_n -> infinity` along the support.
    Divergent,
    /// `b_n <= M` along the support.
    Bounded(u64),
}

/// A materialized digit prefix.
#[derive(Debug, Clone)]
pub struct DigitPrefix {
    /// `digits[n - 1] = c_n`.
    pub digits: Vec<u64>,
    /// `Some(M)` when `c_n = 0` is certified for every `n > M`.
    pub zero_beyond: Option<u64>,
}

/// Canonicity of a digit sequence (`c_n < b_n - 1` infinitely often).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Canonicity {
    /// Digits are eventually zero.
    Exact,
    /// A non-maximal digit was found in the second half of `[1, N]`.
    UpTo(u64),
}

#[derive(Clone)]
pub struct DigitExpansion {
    base: ArithSeq,
    source: DigitSource,
    growth: Option<SupportGrowth>,
    label: String,
}

impl fmt::Debug for DigitExpansion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DigitExpansion")
            .field("label", &self.label)
            .field("source", &self.source)
            .field("growth", &self.growth)
            .finish()
    }
}

impl DigitExpansion {
    pub fn finite(base: ArithSeq, digits: Vec<(u64, u64)>) -> Result<Self> {
        let mut digits: Vec<_> = digits.into_iter().filter(|&(_, c)| c != 0).collect();
        digits.sort_unstable();
        for w in digits.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(Error::InvalidArgument(format!("digit c_{} given twice", w[0].0)));
            }
        }
        for &(n, c) in &digits {
            if n == 0 {
                return Err(Error::InvalidArgument("digits are indexed from 1".into()));
            }
            base.validate_upto(n)?;
            let max = base.ratio(n) - 1;
            if c > max {
                return Err(Error::DigitOutOfRange { index: n, digit: c, max });
            }
        }
        let label = format!("finite:{}", digits.len());
        Ok(DigitExpansion {
            base,
            source: DigitSource::Finite(digits),
            growth: None,
            label,
        })
    }

    /// Digits `digit` on `support`, zero elsewhere. Digit bounds are checked by
    /// [`DigitExpansion::validate_upto`].
    pub fn rule(base: ArithSeq, support: IndexSet, digit: DigitRule) -> Self {
        DigitExpansion {
            base,
            source: DigitSource::Rule { support, digit },
            growth: None,
            label: "rule".into(),
        }
    }

    pub fn rational(base: ArithSeq, p: BigUint, q: BigUint) -> Result<Self> {
        let x = Rational01::new(p, q)?;
        Ok(DigitExpansion {
            label: format!("rational:{x}"),
            base,
            source: DigitSource::Rational { p: x.p, q: x.q },
            growth: None,
        })
    }

    pub fn with_growth(mut self, growth: SupportGrowth) -> Self {
        self.growth = Some(growth);
        self
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn base(&self) -> &ArithSeq {
        &self.base
    }

    pub fn source(&self) -> &DigitSource {
        &self.source
    }

    pub fn growth(&self) -> Option<SupportGrowth> {
        self.growth
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// `c_n`. Linear in `n` for rational-backed digits; prefer
    /// [`DigitExpansion::digits`] for ranges.
    pub fn digit(&self, n: u64) -> u64 {
        assert!(n >= 1, "digits are indexed from 1");
        match &self.source {
            DigitSource::Finite(d) => d
                .binary_search_by_key(&n, |&(i, _)| i)
                .map_or(0, |pos| d[pos].1),
            DigitSource::Rule { support, digit } => {
                if !support.contains(n) {
                    0
                } else {
                    match digit {
                        DigitRule::Constant(c) => *c,
                        DigitRule::Max => self.base.ratio(n) - 1,
                    }
                }
            }
            DigitSource::Rational { .. } => self.digits(n).digits[(n - 1) as usize],
        }
    }

    /// `c_1, ..., c_h`.
    pub fn digits(&self, h: u64) -> DigitPrefix {
        match &self.source {
            DigitSource::Finite(d) => {
                let mut digits = vec![0; h as usize];
                for &(n, c) in d.iter().take_while(|&&(n, _)| n <= h) {
                    digits[(n - 1) as usize] = c;
                }
                DigitPrefix {
                    digits,
                    zero_beyond: Some(d.last().map_or(0, |&(n, _)| n)),
                }
            }
            DigitSource::Rule { support, digit } => {
                let ratios = match digit {
                    DigitRule::Max => self.base.ratios(h),
                    DigitRule::Constant(_) => Vec::new(),
                };
                let digits = support
                    .indicator(h)
                    .iter()
                    .enumerate()
                    .map(|(idx, &member)| match (member, digit) {
                        (false, _) => 0,
                        (true, DigitRule::Constant(c)) => *c,
                        (true, DigitRule::Max) => ratios[idx] - 1,
                    })
                    .collect();
                let zero_beyond = match digit {
                    DigitRule::Constant(0) => Some(0),
                    _ => support.finite_max(),
                };
                DigitPrefix {
                    digits,
                    zero_beyond,
                }
            }
            DigitSource::Rational { p, q } => {
                let greedy = greedy_digits(&self.base, p, q, h);
                DigitPrefix {
                    digits: greedy.digits,
                    zero_beyond: greedy.exact_at,
                }
            }
        }
    }

    /// `supp(x) ∩ [1, h]`.
    pub fn support_upto(&self, h: u64) -> Vec<u64> {
        positions(&self.digits(h).digits, |_, c| c != 0)
    }

    /// `supp^b(x) ∩ [1, h]`: indices with `c_n = b_n - 1`.
    pub fn support_b_upto(&self, h: u64) -> Vec<u64> {
        let ratios = self.base.ratios(h);
        positions(&self.digits(h).digits, |n, c| c == ratios[(n - 1) as usize] - 1)
    }

    /// Checks `c_n <= b_n - 1` on `[1, h]` and canonicity up to `h`.
    pub fn validate_upto(&self, h: u64) -> Result<Canonicity> {
        self.base.validate_upto(h)?;
        let prefix = self.digits(h);
        let ratios = self.base.ratios(h);
        for (idx, (&c, &b)) in prefix.digits.iter().zip(&ratios).enumerate() {
            if c > b - 1 {
                return Err(Error::DigitOutOfRange {
                    index: idx as u64 + 1,
                    digit: c,
                    max: b - 1,
                });
            }
        }
        if prefix.zero_beyond.is_some() {
            return Ok(Canonicity::Exact);
        }
        let half = (h / 2) as usize;
        let found = prefix.digits[half..]
            .iter()
            .zip(&ratios[half..])
            .any(|(&c, &b)| c < b - 1);
        if found {
            Ok(Canonicity::UpTo(h))
        } else {
            Err(Error::InvalidArgument(format!(
                "digits are maximal throughout ({}, {h}]; not canonical up to {h}",
                h / 2
            )))
        }
    }
}

fn positions(digits: &[u64], keep: impl Fn(u64, u64) -> bool) -> Vec<u64> {
    digits
        .iter()
        .enumerate()
        .filter(|&(idx, &c)| keep(idx as u64 + 1, c))
        .map(|(idx, _)| idx as u64 + 1)
        .collect()
}

/// A reduced fraction `p / q` in `[0, 1)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Rational01 {
    p: BigUint,
    q: BigUint,
}

impl Rational01 {
    pub fn new(p: BigUint, q: BigUint) -> Result<Self> {
        if q.is_zero() || p >= q {
            return Err(Error::PointOutOfRange(format!("{p}/{q}")));
        }
        let g = p.gcd(&q);
        let (p, q) = if p.is_zero() {
            (p, BigUint::one())
        } else {
            (p / &g, q / &g)
        };
        Ok(Rational01 { p, q })
    }

    pub fn numer(&self) -> &BigUint {
        &self.p
    }

    pub fn denom(&self) -> &BigUint {
        &self.q
    }

    pub fn to_big_rational(&self) -> BigRational {
        BigRational::new(self.p.clone().into(), self.q.clone().into())
    }

    /// `self + other mod 1`.
    pub fn add_mod1(&self, other: &Rational01) -> Rational01 {
        let q = &self.q * &other.q;
        let p = (&self.p * &other.q + &other.p * &self.q) % &q;
        Rational01::new(p, q).expect("sum reduced mod 1")
    }
}

impl fmt::Display for Rational01 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.p, self.q)
    }
}

impl std::str::FromStr for Rational01 {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Spec(format!("expected a fraction p/q, got {s:?}"));
        let (p, q) = s.trim().split_once('/').unwrap_or((s.trim(), "1"));
        let p: BigUint = p.trim().parse().map_err(|_| bad())?;
        let q: BigUint = q.trim().parse().map_err(|_| bad())?;
        Rational01::new(p, q)
    }
}

#[derive(Clone, Debug)]
pub enum TorusPoint {
    Rational(Rational01),
    Expansion(DigitExpansion),
}

impl TorusPoint {
    pub fn rational(p: u64, q: u64) -> Result<Self> {
        Ok(TorusPoint::Rational(Rational01::new(p.into(), q.into())?))
    }

    pub fn describe(&self) -> String {
        match self {
            TorusPoint::Rational(r) => format!("rational:{r}"),
            TorusPoint::Expansion(e) => e.label().to_string(),
        }
    }
}

/// JSON description of a point: `{"rational": "p/q"}` or
/// `{"expansion": {"support": "<rule-id>" | [n, ...], "digit": c | "max"}}`.
/// Support rule ids are resolved against a base sequence by
/// [`crate::constructions::resolve_point`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PointSpec {
    Rational(String),
    Expansion(ExpansionSpec),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExpansionSpec {
    pub support: SupportSpec,
    pub digit: DigitSpec,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SupportSpec {
    List(Vec<u64>),
    Rule(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DigitSpec {
    Constant(u64),
    Rule(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnclosureStatus {
    /// `lo == hi` is the exact value.
    Exact,
    /// The value lies in `[lo, hi]` and the width meets the tolerance.
    Certified,
    /// The depth cap was reached before the tolerance (or, for fractional
    /// parts, before the enclosure cleared an integer).
    Inconclusive,
}

/// An interval of exact rationals containing the true value.
#[derive(Debug, Clone, PartialEq)]
pub struct NormEnclosure {
    pub lo: BigRational,
    pub hi: BigRational,
    pub status: EnclosureStatus,
}

impl NormEnclosure {
    pub fn exact(v: BigRational) -> Self {
        NormEnclosure {
            lo: v.clone(),
            hi: v,
            status: EnclosureStatus::Exact,
        }
    }

    pub fn width(&self) -> BigRational {
        &self.hi - &self.lo
    }

    pub fn contains(&self, v: &BigRational) -> bool {
        &self.lo <= v && v <= &self.hi
    }

    pub fn is_conclusive(&self) -> bool {
        self.status != EnclosureStatus::Inconclusive
    }

    pub fn lo_f64(&self) -> f64 {
        self.lo.to_f64().unwrap_or(f64::NAN)
    }

    pub fn hi_f64(&self) -> f64 {
        self.hi.to_f64().unwrap_or(f64::NAN)
    }
}

/// Greedy digits with the remainder bookkeeping.
#[derive(Debug, Clone)]
pub struct GreedyExpansion {
    /// `digits[n - 1] = c_n`, for `n` up to the horizon.
    pub digits: Vec<u64>,
    /// First `k` with `x = x_k` exactly, when reached within the horizon.
    pub exact_at: Option<u64>,
}

impl GreedyExpansion {
    pub fn is_exact_finite(&self) -> bool {
        self.exact_at.is_some()
    }
}

/// Greedy digits of `p/q`: with `t_0 = p` and `x - x_k = t_k / (q a_k)`,
/// `c_{k+1} = floor(b_{k+1} t_k / q)` and `t_{k+1} = b_{k+1} t_k mod q`.
fn greedy_digits(seq: &ArithSeq, p: &BigUint, q: &BigUint, horizon: u64) -> GreedyExpansion {
    let ratios = seq.ratios(horizon);
    let mut digits = Vec::with_capacity(horizon as usize);
    let mut exact_at = p.is_zero().then_some(0);
    if let (Some(p), Some(q)) = (p.to_u64(), q.to_u64()) {
        let (mut t, q) = (p as u128, q as u128);
        for (idx, &b) in ratios.iter().enumerate() {
            let scaled = t * b as u128;
            digits.push((scaled / q) as u64);
            t = scaled % q;
            if t == 0 && exact_at.is_none() {
                exact_at = Some(idx as u64 + 1);
            }
        }
    } else {
        let mut t = p.clone();
        for (idx, &b) in ratios.iter().enumerate() {
            let (c, rem) = (t * b).div_rem(q);
            digits.push(c.to_u64().expect("digit below b_n"));
            t = rem;
            if t.is_zero() && exact_at.is_none() {
                exact_at = Some(idx as u64 + 1);
            }
        }
    }
    GreedyExpansion { digits, exact_at }
}

/// Canonical digits `c_1, ..., c_horizon` of a rational `x` in `[0, 1)`.
pub fn canonical_expansion(x: &BigRational, seq: &ArithSeq, horizon: u64) -> Result<GreedyExpansion> {
    if horizon == 0 {
        return Err(Error::InvalidArgument("horizon must be at least 1".into()));
    }
    if x < &BigRational::zero() || x >= &BigRational::one() {
        return Err(Error::PointOutOfRange(x.to_string()));
    }
    let p = x.numer().to_biguint().expect("nonnegative");
    let q = x.denom().to_biguint().expect("positive");
    seq.validate_upto(horizon)?;
    Ok(greedy_digits(seq, &p, &q, horizon))
}

/// Encloses `x` by its first `j` terms: `[S_j, S_j + 1/a_j]`, collapsed to the
/// exact value when the digits are known to vanish after `j`.
pub fn evaluate(exp: &DigitExpansion, j: u64) -> Result<NormEnclosure> {
    if j == 0 {
        return Err(Error::InvalidArgument("truncation must be at least 1".into()));
    }
    let prefix = exp.digits(j);
    let ratios = exp.base().ratios(j);
    let mut num = BigUint::zero();
    let mut den = BigUint::one();
    for (&c, &b) in prefix.digits.iter().zip(&ratios) {
        num = num * b + c;
        den *= b;
    }
    let lo = BigRational::new(num.clone().into(), den.clone().into());
    if prefix.zero_beyond.is_some_and(|m| m <= j) {
        return Ok(NormEnclosure::exact(lo));
    }
    Ok(NormEnclosure {
        lo,
        hi: BigRational::new((num + 1u32).into(), den.into()),
        status: EnclosureStatus::Certified,
    })
}

/// Largest `k` with `a_k | m`, and `m / a_k`.
fn split_multiplier(seq: &ArithSeq, m: &BigUint) -> (u64, BigUint) {
    let mut k = 0;
    let mut r = m.clone();
    loop {
        let b = seq.ratio(k + 1);
        let (quot, rem) = r.div_rem(&BigUint::from(b));
        if !rem.is_zero() {
            return (k, r);
        }
        r = quot;
        k += 1;
    }
}

/// `y_k` windows of growing depth for one expansion.
struct LevelWindows<'a> {
    exp: &'a DigitExpansion,
    k: u64,
    prefix: DigitPrefix,
    ratios: Vec<u64>,
}

impl<'a> LevelWindows<'a> {
    fn new(exp: &'a DigitExpansion, k: u64) -> Self {
        LevelWindows {
            exp,
            k,
            prefix: DigitPrefix {
                digits: Vec::new(),
                zero_beyond: None,
            },
            ratios: Vec::new(),
        }
    }

    /// `(num, den, exact)` with `y_k` in `[num/den, (num+1)/den]`, or equal to
    /// `num/den` when exact.
    fn window(&mut self, depth: u32) -> (BigUint, BigUint, bool) {
        let end = self.k + depth as u64;
        if (self.prefix.digits.len() as u64) < end {
            let h = end.max(self.k + 64);
            self.prefix = self.exp.digits(h);
            self.ratios = self.exp.base().ratios(h);
        }
        let mut num = BigUint::zero();
        let mut den = BigUint::one();
        for n in self.k + 1..=end {
            if self.prefix.zero_beyond.is_some_and(|m| n > m) {
                return (num, den, true);
            }
            let idx = (n - 1) as usize;
            num = num * self.ratios[idx] + self.prefix.digits[idx];
            den *= self.ratios[idx];
        }
        let exact = self.prefix.zero_beyond.is_some_and(|m| end >= m);
        (num, den, exact)
    }
}

fn check_args(m: &BigUint, tol: &BigRational) -> Result<()> {
    if m.is_zero() {
        return Err(Error::InvalidArgument("multiplier must be at least 1".into()));
    }
    if tol <= &BigRational::zero() {
        return Err(Error::InvalidArgument("tolerance must be positive".into()));
    }
    Ok(())
}

fn ratio_of(num: BigUint, den: &BigUint) -> BigRational {
    BigRational::new(num.into(), den.clone().into())
}

/// Encloses `r * y` given `y` in `[num/den, (num + tail)/den]`, shifted down
/// by the integer part of the lower end: the result lies in `[lo, hi]` with
/// `0 <= lo < 1` and possibly `hi >= 1`.
fn scaled_window(num: &BigUint, den: &BigUint, r: &BigUint, exact: bool) -> (BigUint, BigUint) {
    let lo = (num * r) % den;
    let hi = if exact { lo.clone() } else { &lo + r };
    (lo, hi)
}

/// Certified enclosure of `{m x}`.
///
/// Rational points are exact. For expansions, `m` is split as `r a_k` with
/// `k` maximal and the window over `y_k` is deepened until its width is
/// within `tol` and the enclosure does not reach an integer; past
/// [`DEPTH_CAP`] the last (possibly straddling) enclosure is returned flagged
/// [`EnclosureStatus::Inconclusive`].
pub fn frac_mul(x: &TorusPoint, m: &BigUint, tol: &BigRational) -> Result<NormEnclosure> {
    check_args(m, tol)?;
    let exp = match x {
        TorusPoint::Rational(r) => {
            let v = (m * r.numer()) % r.denom();
            return Ok(NormEnclosure::exact(ratio_of(v, r.denom())));
        }
        TorusPoint::Expansion(e) => e,
    };
    let (k, r) = split_multiplier(exp.base(), m);
    let mut windows = LevelWindows::new(exp, k);
    let mut depth = 8u32;
    loop {
        let (num, den, exact) = windows.window(depth);
        let (lo, hi) = scaled_window(&num, &den, &r, exact);
        if exact {
            return Ok(NormEnclosure::exact(ratio_of(lo, &den)));
        }
        let width = BigRational::new(r.clone().into(), den.clone().into());
        // hi < den keeps the whole enclosure inside [0, 1) apart from lo.
        if &width <= tol && hi < den {
            return Ok(NormEnclosure {
                lo: ratio_of(lo, &den),
                hi: ratio_of(hi, &den),
                status: EnclosureStatus::Certified,
            });
        }
        if depth >= DEPTH_CAP {
            return Ok(NormEnclosure {
                lo: ratio_of(lo, &den),
                hi: ratio_of(hi, &den),
                status: EnclosureStatus::Inconclusive,
            });
        }
        depth = (depth * 2).min(DEPTH_CAP);
    }
}

/// `||t||` bounds over a real interval `[lo, hi]` with `0 <= lo < 1`,
/// `lo <= hi`.
pub(crate) fn fold_norm(lo: &BigRational, hi: &BigRational) -> (BigRational, BigRational) {
    let one = BigRational::one();
    let half = BigRational::new(1.into(), 2.into());
    if hi - lo >= one {
        return (BigRational::zero(), half);
    }
    let dist = |t: &BigRational| {
        let f = t - t.floor();
        let g = &one - &f;
        if f < g {
            f
        } else {
            g
        }
    };
    let (dl, dh) = (dist(lo), dist(hi));
    let has_int = lo.is_zero() || hi.floor() > lo.floor();
    let shifted = lo - &half;
    let has_half = (hi - &half).floor() > shifted.floor() || (&shifted - shifted.floor()).is_zero();
    let min = if has_int {
        BigRational::zero()
    } else if dl < dh {
        dl.clone()
    } else {
        dh.clone()
    };
    let max = if has_half {
        half
    } else if dl > dh {
        dl
    } else {
        dh
    };
    (min, max)
}

/// Certified enclosure of `||m x||`.
///
/// The norm is continuous across integers, so only the width matters here;
/// the enclosure is inconclusive only when [`DEPTH_CAP`] is reached first.
pub fn norm(x: &TorusPoint, m: &BigUint, tol: &BigRational) -> Result<NormEnclosure> {
    check_args(m, tol)?;
    let exp = match x {
        TorusPoint::Rational(r) => {
            let v = (m * r.numer()) % r.denom();
            let w = r.denom() - &v;
            return Ok(NormEnclosure::exact(ratio_of(v.min(w), r.denom())));
        }
        TorusPoint::Expansion(e) => e,
    };
    let (k, r) = split_multiplier(exp.base(), m);
    let mut windows = LevelWindows::new(exp, k);
    let mut depth = 8u32;
    loop {
        let (num, den, exact) = windows.window(depth);
        let (lo, hi) = scaled_window(&num, &den, &r, exact);
        let (lo, hi) = (ratio_of(lo, &den), ratio_of(hi, &den));
        let (nlo, nhi) = fold_norm(&lo, &hi);
        if exact {
            return Ok(NormEnclosure::exact(nlo));
        }
        let width = BigRational::new(r.clone().into(), den.clone().into());
        if &width <= tol || depth >= DEPTH_CAP {
            let status = if &width <= tol {
                EnclosureStatus::Certified
            } else {
                EnclosureStatus::Inconclusive
            };
            return Ok(NormEnclosure {
                lo: nlo,
                hi: nhi,
                status,
            });
        }
        depth = (depth * 2).min(DEPTH_CAP);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sequence::{DerivedSeq, RatioSpec};
    use proptest::prelude::*;

    fn zeta() -> ArithSeq {
        ArithSeq::new(RatioSpec::affine(1, 1)).unwrap()
    }

    fn q(p: i64, d: i64) -> BigRational {
        BigRational::new(p.into(), d.into())
    }

    fn big(v: u64) -> BigUint {
        BigUint::from(v)
    }

    #[test]
    fn greedy_examples() {
        let half = canonical_expansion(&q(1, 2), &zeta(), 6).unwrap();
        assert_eq!(half.digits, vec![1, 0, 0, 0, 0, 0]);
        assert_eq!(half.exact_at, Some(1));
        let zero = canonical_expansion(&q(0, 1), &zeta(), 4).unwrap();
        assert_eq!(zero.digits, vec![0; 4]);
        assert!(zero.is_exact_finite());
        let third = canonical_expansion(&q(1, 3), &zeta(), 5).unwrap();
        assert_eq!(third.digits, vec![0, 2, 0, 0, 0]);
        assert_eq!(third.exact_at, Some(2));
        assert!(canonical_expansion(&q(1, 1), &zeta(), 4).is_err());
        assert!(canonical_expansion(&q(-1, 3), &zeta(), 4).is_err());
    }

    #[test]
    fn evaluate_examples() {
        let seq = zeta();
        let half = DigitExpansion::finite(seq.clone(), vec![(1, 1)]).unwrap();
        assert_eq!(evaluate(&half, 1).unwrap(), NormEnclosure::exact(q(1, 2)));

        let third = DigitExpansion::finite(seq.clone(), vec![(2, 2)]).unwrap();
        assert_eq!(evaluate(&third, 2).unwrap(), NormEnclosure::exact(q(1, 3)));
        let third_rule = DigitExpansion::rule(
            seq.clone(),
            IndexSet::predicate(|n| n == 2),
            DigitRule::Constant(2),
        );
        let e = evaluate(&third_rule, 2).unwrap();
        assert_eq!((e.lo, e.hi), (q(1, 3), q(1, 3) + q(1, 6)));

        let all_max = DigitExpansion::rule(seq, IndexSet::predicate(|_| true), DigitRule::Max);
        for j in 1..12 {
            let e = evaluate(&all_max, j).unwrap();
            assert_eq!(e.hi, q(1, 1));
            assert!(e.lo < q(1, 1));
        }
    }

    #[test]
    fn rational_frac_and_norm() {
        let third = TorusPoint::rational(1, 3).unwrap();
        let tol = default_tol();
        assert_eq!(frac_mul(&third, &big(2), &tol).unwrap(), NormEnclosure::exact(q(2, 3)));
        let seventh = TorusPoint::rational(1, 7).unwrap();
        assert_eq!(frac_mul(&seventh, &big(10), &tol).unwrap(), NormEnclosure::exact(q(3, 7)));
        let p = TorusPoint::rational(3, 7).unwrap();
        assert_eq!(norm(&p, &big(1), &tol).unwrap(), NormEnclosure::exact(q(3, 7)));
        let p = TorusPoint::rational(9, 10).unwrap();
        assert_eq!(norm(&p, &big(1), &tol).unwrap(), NormEnclosure::exact(q(1, 10)));
        let seq = zeta();
        let p = TorusPoint::Rational(Rational01::new(big(1), seq.value(4)).unwrap());
        for n in 4..10 {
            assert_eq!(norm(&p, &seq.value(n), &tol).unwrap(), NormEnclosure::exact(q(0, 1)));
        }
        assert!(frac_mul(&third, &big(0), &tol).is_err());
        assert!(norm(&third, &big(1), &q(0, 1)).is_err());
    }

    #[test]
    fn expansion_frac_matches_rational() {
        let seq = zeta();
        let d = DerivedSeq::new(seq.clone());
        let tol = default_tol();
        for (p, qq) in [(1u64, 7u64), (5, 11), (123, 1000), (1, 2), (99_999, 100_003)] {
            let rational = TorusPoint::rational(p, qq).unwrap();
            let exp = TorusPoint::Expansion(DigitExpansion::rational(seq.clone(), big(p), big(qq)).unwrap());
            for i in 1..=300 {
                let m = d.term(i);
                let exact = frac_mul(&rational, &m, &tol).unwrap();
                let encl = norm(&exp, &m, &tol).unwrap();
                let nexact = norm(&rational, &m, &tol).unwrap();
                assert!(encl.contains(&nexact.lo), "x={p}/{qq} i={i}");
                assert!(encl.width() <= tol);
                let f = frac_mul(&exp, &m, &tol).unwrap();
                if f.is_conclusive() {
                    assert!(f.contains(&exact.lo), "x={p}/{qq} i={i}");
                }
            }
        }
    }

    #[test]
    fn frac_near_integer_is_flagged_not_guessed() {
        // 1 - 1/a_k with digits b_n - 1 on [1, 40] and nothing after: {a_0 x}
        // is exact, but an infinite all-max tail straddles 1 forever.
        let seq = zeta();
        let all_max = TorusPoint::Expansion(DigitExpansion::rule(
            seq.clone(),
            IndexSet::predicate(|_| true),
            DigitRule::Max,
        ));
        let f = frac_mul(&all_max, &big(1), &default_tol()).unwrap();
        assert_eq!(f.status, EnclosureStatus::Inconclusive);
        assert!(f.hi >= q(1, 1));
        let n = norm(&all_max, &big(1), &default_tol()).unwrap();
        assert_eq!(n.status, EnclosureStatus::Certified);
        assert_eq!(n.lo, q(0, 1));
    }

    #[test]
    fn fold_handles_halves_and_integers() {
        assert_eq!(fold_norm(&q(1, 4), &q(3, 4)), (q(1, 4), q(1, 2)));
        assert_eq!(fold_norm(&q(9, 10), &q(11, 10)), (q(0, 1), q(1, 10)));
        assert_eq!(fold_norm(&q(1, 10), &q(1, 5)), (q(1, 10), q(1, 5)));
        assert_eq!(fold_norm(&q(0, 1), &q(1, 100)), (q(0, 1), q(1, 100)));
        assert_eq!(fold_norm(&q(1, 2), &q(1, 2)), (q(1, 2), q(1, 2)));
    }

    #[test]
    fn supports_and_validation() {
        let seq = zeta();
        let x = DigitExpansion::rule(
            seq.clone(),
            IndexSet::predicate(|n| n % 3 == 0),
            DigitRule::Max,
        );
        assert_eq!(x.support_upto(10), vec![3, 6, 9]);
        assert_eq!(x.support_b_upto(10), vec![3, 6, 9]);
        assert_eq!(x.validate_upto(100).unwrap(), Canonicity::UpTo(100));
        let bad = DigitExpansion::rule(seq.clone(), IndexSet::predicate(|n| n == 1), DigitRule::Constant(5));
        assert!(bad.validate_upto(10).is_err());
        let full = DigitExpansion::rule(seq.clone(), IndexSet::predicate(|_| true), DigitRule::Max);
        assert!(full.validate_upto(50).is_err());
        assert!(DigitExpansion::finite(seq, vec![(1, 2)]).is_err());
    }

    #[test]
    fn parses_fractions() {
        let r: Rational01 = "6/8".parse().unwrap();
        assert_eq!(r.to_string(), "3/4");
        assert!("8/6".parse::<Rational01>().is_err());
        assert!("x/6".parse::<Rational01>().is_err());
        let s: PointSpec = serde_json::from_str(r#"{"rational": "1/120"}"#).unwrap();
        assert_eq!(s, PointSpec::Rational("1/120".into()));
        let s: PointSpec =
            serde_json::from_str(r#"{"expansion": {"support": [3, 5], "digit": "max"}}"#).unwrap();
        assert_eq!(
            s,
            PointSpec::Expansion(ExpansionSpec {
                support: SupportSpec::List(vec![3, 5]),
                digit: DigitSpec::Rule("max".into()),
            })
        );
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn greedy_digits_round_trip(qq in 1u64..=1_000_000, p_frac in 0.0f64..1.0) {
            let p = ((qq as f64 * p_frac) as u64).min(qq - 1);
            let x = q(p as i64, qq as i64);
            let seq = zeta();
            let horizon = 30;
            let g = canonical_expansion(&x, &seq, horizon).unwrap();
            let mut partial = BigRational::zero();
            for (idx, &c) in g.digits.iter().enumerate() {
                let n = idx as u64 + 1;
                prop_assert!(c < seq.ratio(n));
                let a = BigRational::from_integer(seq.value(n).into());
                partial += BigRational::from_integer(c.into()) / &a;
                let rem = &x - &partial;
                prop_assert!(rem >= BigRational::zero() && rem < BigRational::one() / a);
            }
            let exp = DigitExpansion::rational(seq.clone(), big(p), big(qq)).unwrap();
            let e = evaluate(&exp, horizon).unwrap();
            prop_assert!(e.contains(&x));
            if g.is_exact_finite() {
                prop_assert_eq!(e.lo, x);
            }
        }

        #[test]
        fn tail_sums_obey_mixed_radix_bound(
            ratios in proptest::collection::vec(2u64..=9, 52),
            seeds in proptest::collection::vec(0u64..1000, 52),
        ) {
            let seq = ArithSeq::new(RatioSpec::Table { prefix: ratios.clone(), tail: Box::new(RatioSpec::constant(2)) }).unwrap();
            let digits: Vec<u64> = seeds.iter().zip(&ratios).map(|(s, b)| s % b).collect();
            for j in 1..=50u64 {
                let bound = BigRational::new(1.into(), seq.value(j - 1).into());
                let mut tail = BigRational::zero();
                for i in j..=51 {
                    tail += BigRational::new(digits[(i - 1) as usize].into(), seq.value(i).into());
                    prop_assert!(tail <= bound);
                }
            }
        }
    }
}
