//! Arithmetic sequences `1 = a_0 < a_1 < ...` with `a_{n-1} | a_n`, described
//! by their ratio rule `b_n = a_n / a_{n-1}`, and the derived sequence `(d_i)`
//! enumerating `{r * a_k : 1 <= r < b_{k+1}}` in ascending order.
//!
//! Indexing: `a` starts at 0 (`a_0 = 1`), `b` and `d` start at 1. The derived
//! sequence is split into levels: level `k` occupies the indices
//! `n_k .. n_k + b_{k+1} - 2` and holds `a_k, 2 a_k, ..., (b_{k+1} - 1) a_k`,
//! where `n_k = 1 + sum_{j=1}^{k} (b_j - 1)`.

use std::sync::Arc;

use num_bigint::BigUint;
use num_traits::One;
use parking_lot::RwLock;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Closed-form ratio rules.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "lowercase")]
pub enum Formula {
    /// `b_n = slope * n + offset`.
    Affine { slope: u64, offset: i64 },
    /// `b_n = base^n`.
    Exponential { base: u64 },
}

impl Formula {
    fn eval(&self, n: u64) -> Result<u64> {
        match *self {
            Formula::Affine { slope, offset } => {
                let v = slope as i128 * n as i128 + offset as i128;
                if v < 2 {
                    return Err(Error::RatioTooSmall { index: n, value: v });
                }
                u64::try_from(v).map_err(|_| Error::RatioOverflow { index: n })
            }
            Formula::Exponential { base } => {
                let exp = u32::try_from(n).map_err(|_| Error::RatioOverflow { index: n })?;
                let v = base
                    .checked_pow(exp)
                    .ok_or(Error::RatioOverflow { index: n })?;
                if v < 2 {
                    return Err(Error::RatioTooSmall { index: n, value: v as i128 });
                }
                Ok(v)
            }
        }
    }
}

/// Registered ratio rules of the named constructions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NamedRule {
    /// `b_n = n + 1`, so `a_n = n!`.
    Zeta,
    /// Block lengths `n^2`, gaps `n`.
    Equal,
    /// Block lengths and gaps both `n`.
    Strict,
    /// Lacunary `s_n = 3 n (n + 1) / 2` with the large ratios at `s_j + 1`.
    Reverse,
}

impl NamedRule {
    pub fn id(self) -> &'static str {
        match self {
            NamedRule::Zeta => "zeta",
            NamedRule::Equal => "equal",
            NamedRule::Strict => "strict",
            NamedRule::Reverse => "reverse",
        }
    }

    pub fn from_id(id: &str) -> Option<Self> {
        match id {
            "zeta" => Some(NamedRule::Zeta),
            "equal" => Some(NamedRule::Equal),
            "strict" => Some(NamedRule::Strict),
            "reverse" => Some(NamedRule::Reverse),
            _ => None,
        }
    }
}

/// A rule producing the ratio `b_n >= 2` for every `n >= 1`.
///
/// JSON form: `{"kind": "constant", "b": 2}`,
/// `{"kind": "formula", "formula": {"rule": "affine", "slope": 1, "offset": 1}}`,
/// `{"kind": "table", "prefix": [3, 5], "tail": {...}}` (the tail is evaluated at
/// the absolute index) and `{"kind": "named", "id": "zeta"}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum RatioSpec {
    Constant { b: u64 },
    Formula { formula: Formula },
    Table { prefix: Vec<u64>, tail: Box<RatioSpec> },
    Named { id: NamedRule },
}

impl RatioSpec {
    pub fn constant(b: u64) -> Self {
        RatioSpec::Constant { b }
    }

    pub fn affine(slope: u64, offset: i64) -> Self {
        RatioSpec::Formula {
            formula: Formula::Affine { slope, offset },
        }
    }

    pub fn named(id: NamedRule) -> Self {
        RatioSpec::Named { id }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Evaluates `b_n` for `n >= 1`.
    pub fn ratio(&self, n: u64) -> Result<u64> {
        if n == 0 {
            return Err(Error::InvalidArgument("ratios are indexed from 1".into()));
        }
        match self {
            RatioSpec::Constant { b } => {
                if *b < 2 {
                    Err(Error::RatioTooSmall { index: n, value: *b as i128 })
                } else {
                    Ok(*b)
                }
            }
            RatioSpec::Formula { formula } => formula.eval(n),
            RatioSpec::Table { prefix, tail } => match prefix.get((n - 1) as usize) {
                Some(&b) if b < 2 => Err(Error::RatioTooSmall { index: n, value: b as i128 }),
                Some(&b) => Ok(b),
                None => tail.ratio(n),
            },
            RatioSpec::Named { id } => Ok(crate::constructions::named_ratio(*id, n)),
        }
    }

    /// `Some(M)` when the rule is provably bounded by `M`; `None` otherwise,
    /// including rules whose boundedness is not known.
    pub fn known_bound(&self) -> Option<u64> {
        match self {
            RatioSpec::Constant { b } => Some(*b),
            RatioSpec::Table { prefix, tail } => tail
                .known_bound()
                .map(|m| prefix.iter().copied().fold(m, u64::max)),
            _ => None,
        }
    }

    /// True when `b_n -> infinity` follows from the rule's closed form.
    pub fn is_divergent(&self) -> bool {
        match self {
            RatioSpec::Formula {
                formula: Formula::Affine { slope, .. },
            } => *slope > 0,
            RatioSpec::Formula {
                formula: Formula::Exponential { .. },
            } => true,
            RatioSpec::Table { tail, .. } => tail.is_divergent(),
            RatioSpec::Named { id: NamedRule::Zeta } => true,
            _ => false,
        }
    }

    /// Short human-readable identifier used in reports.
    pub fn describe(&self) -> String {
        match self {
            RatioSpec::Constant { b } => format!("constant:{b}"),
            RatioSpec::Formula {
                formula: Formula::Affine { slope, offset },
            } => format!("affine:{slope}n{offset:+}"),
            RatioSpec::Formula {
                formula: Formula::Exponential { base },
            } => format!("exponential:{base}^n"),
            RatioSpec::Table { prefix, tail } => {
                format!("table:{prefix:?}+{}", tail.describe())
            }
            RatioSpec::Named { id } => id.id().to_string(),
        }
    }
}

/// Values `a_n` are memoized up to this index; later values are rebuilt from
/// the last cached one on demand.
const VALUE_CACHE_LEN: usize = 1024;

#[derive(Default)]
struct Prefix {
    /// `ratios[n - 1] = b_n`.
    ratios: Vec<u64>,
    /// `levels[k] = n_k`; always one longer than `ratios`.
    levels: Vec<u64>,
    /// `values[n] = a_n`.
    values: Vec<BigUint>,
}

struct Inner {
    spec: RatioSpec,
    prefix: RwLock<Prefix>,
}

/// An arithmetic sequence behind a pure ratio rule, with an on-demand prefix
/// cache shared between clones.
///
/// Accessors panic if the rule produces an invalid ratio inside the requested
/// range; call [`ArithSeq::validate_upto`] first for untrusted rules.
#[derive(Clone)]
pub struct ArithSeq {
    inner: Arc<Inner>,
}

impl std::fmt::Debug for ArithSeq {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ArithSeq")
            .field("spec", &self.inner.spec)
            .finish()
    }
}

impl ArithSeq {
    /// Builds the sequence and validates the first 32 ratios.
    pub fn new(spec: RatioSpec) -> Result<Self> {
        let seq = ArithSeq {
            inner: Arc::new(Inner {
                spec,
                prefix: RwLock::new(Prefix {
                    ratios: Vec::new(),
                    levels: vec![1],
                    values: vec![BigUint::one()],
                }),
            }),
        };
        seq.validate_upto(32)?;
        Ok(seq)
    }

    pub fn spec(&self) -> &RatioSpec {
        &self.inner.spec
    }

    /// Extends the cache through `b_n`, surfacing rule errors.
    pub fn validate_upto(&self, n: u64) -> Result<()> {
        if self.inner.prefix.read().ratios.len() as u64 >= n {
            return Ok(());
        }
        let mut prefix = self.inner.prefix.write();
        while (prefix.ratios.len() as u64) < n {
            let idx = prefix.ratios.len() as u64 + 1;
            let b = self.inner.spec.ratio(idx)?;
            let last = *prefix.levels.last().unwrap();
            let next = last
                .checked_add(b - 1)
                .ok_or(Error::RatioOverflow { index: idx })?;
            prefix.ratios.push(b);
            prefix.levels.push(next);
        }
        Ok(())
    }

    fn ensure(&self, n: u64) {
        if let Err(e) = self.validate_upto(n) {
            panic!("ratio rule {} failed: {e}", self.inner.spec.describe());
        }
    }

    /// `b_n` for `n >= 1`.
    pub fn ratio(&self, n: u64) -> u64 {
        assert!(n >= 1, "ratios are indexed from 1");
        self.ensure(n);
        self.inner.prefix.read().ratios[(n - 1) as usize]
    }

    /// `[b_1, ..., b_n]`.
    pub fn ratios(&self, n: u64) -> Vec<u64> {
        self.ensure(n);
        self.inner.prefix.read().ratios[..n as usize].to_vec()
    }

    /// `a_n`, exact.
    pub fn value(&self, n: u64) -> BigUint {
        self.ensure(n);
        {
            let prefix = self.inner.prefix.read();
            if let Some(v) = prefix.values.get(n as usize) {
                return v.clone();
            }
        }
        let mut prefix = self.inner.prefix.write();
        while prefix.values.len() <= (n as usize).min(VALUE_CACHE_LEN) {
            let idx = prefix.values.len();
            let next = prefix.values[idx - 1].clone() * prefix.ratios[idx - 1];
            prefix.values.push(next);
        }
        if let Some(v) = prefix.values.get(n as usize) {
            return v.clone();
        }
        let start = prefix.values.len() - 1;
        let mut acc = prefix.values[start].clone();
        for &b in &prefix.ratios[start..n as usize] {
            acc *= b;
        }
        acc
    }

    /// `a_n mod q`, folded as `((a_{n-1} mod q) * b_n) mod q`.
    pub fn value_mod(&self, n: u64, q: u64) -> u64 {
        assert!(q >= 1, "modulus must be positive");
        self.ensure(n);
        let prefix = self.inner.prefix.read();
        let q = q as u128;
        let mut acc = 1 % q;
        for &b in &prefix.ratios[..n as usize] {
            acc = acc * (b as u128 % q) % q;
        }
        acc as u64
    }

    /// `a_n mod q` for an arbitrary-precision modulus.
    pub fn value_mod_big(&self, n: u64, q: &BigUint) -> BigUint {
        self.ensure(n);
        let prefix = self.inner.prefix.read();
        let mut acc = BigUint::one() % q;
        for &b in &prefix.ratios[..n as usize] {
            acc = acc * b % q;
        }
        acc
    }

    /// `log2(a_n)` as a float, without materializing `a_n`.
    pub fn log2_magnitude(&self, n: u64) -> f64 {
        self.ensure(n);
        let prefix = self.inner.prefix.read();
        prefix.ratios[..n as usize]
            .iter()
            .map(|&b| (b as f64).log2())
            .sum()
    }

    /// `n_k`, the position of `a_k` inside the derived sequence.
    pub fn level_index(&self, k: u64) -> u64 {
        self.ensure(k);
        self.inner.prefix.read().levels[k as usize]
    }

    /// `[n_0, ..., n_k]`.
    pub fn level_indices(&self, k: u64) -> Vec<u64> {
        self.ensure(k);
        self.inner.prefix.read().levels[..=k as usize].to_vec()
    }

    /// Smallest `k` with `n_{k+1} > i`, i.e. the level holding derived index `i`.
    pub fn level_of(&self, i: u64) -> u64 {
        assert!(i >= 1, "derived indices start at 1");
        loop {
            {
                let prefix = self.inner.prefix.read();
                if *prefix.levels.last().unwrap() > i {
                    // levels is strictly increasing and levels[0] = 1 <= i.
                    return (prefix.levels.partition_point(|&n| n <= i) - 1) as u64;
                }
            }
            let len = self.inner.prefix.read().ratios.len() as u64;
            self.ensure((len * 2).max(64));
        }
    }

    /// Number of levels `k` with `n_k <= i`.
    pub fn levels_through(&self, i: u64) -> u64 {
        self.level_of(i) + 1
    }
}

/// The derived sequence `(d_i)` of an arithmetic sequence.
#[derive(Clone, Debug)]
pub struct DerivedSeq {
    base: ArithSeq,
}

impl DerivedSeq {
    pub fn new(base: ArithSeq) -> Self {
        DerivedSeq { base }
    }

    pub fn base(&self) -> &ArithSeq {
        &self.base
    }

    /// `d_i = r * a_k` with `(k, r) = decompose(i)`.
    pub fn term(&self, i: u64) -> BigUint {
        let (k, r) = self.decompose(i);
        self.base.value(k) * r
    }

    /// `(k, r)` with `i = n_k + r - 1` and `1 <= r <= b_{k+1} - 1`.
    pub fn decompose(&self, i: u64) -> (u64, u64) {
        let k = self.base.level_of(i);
        (k, i - self.base.level_index(k) + 1)
    }

    /// Inverse of [`DerivedSeq::decompose`].
    pub fn compose(&self, k: u64, r: u64) -> u64 {
        debug_assert!(r >= 1 && r < self.base.ratio(k + 1));
        self.base.level_index(k) + r - 1
    }

    pub fn level_index(&self, k: u64) -> u64 {
        self.base.level_index(k)
    }

    pub fn terms(&self, from: u64, to: u64) -> Vec<BigUint> {
        (from..=to).map(|i| self.term(i)).collect()
    }
}
