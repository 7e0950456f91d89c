//! Generators for the named constructions: ratio rules, witness points and
//! the index sets their separation arguments scan.
//!
//! Ids: `zeta`, `equal`, `strict`, `divergent`, `reverse`, `cardinality`.

use std::sync::Arc;

use num_bigint::BigUint;
use parking_lot::RwLock;
use serde::Serialize;

use crate::density::{checkpoint_grid, BlockUnion, IndexSet};
use crate::error::{Error, Result};
use crate::sequence::{ArithSeq, DerivedSeq, NamedRule, RatioSpec};
use crate::torus::{
    DigitExpansion, DigitRule, DigitSpec, PointSpec, Rational01, SupportGrowth, SupportSpec,
    TorusPoint,
};

pub const CONSTRUCTION_IDS: [&str; 6] = ["zeta", "equal", "strict", "divergent", "reverse", "cardinality"];

/// Smallest `j >= 1` with `f(j) >= target`, for increasing `f`.
fn first_at_least(f: impl Fn(u64) -> u128, target: u128) -> u64 {
    let mut hi = 1u64;
    while f(hi) < target {
        hi *= 2;
    }
    let mut lo = hi / 2;
    // f(lo) < target <= f(hi), with lo = 0 meaning "before the start".
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if f(mid) >= target {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// `j` with `boundary(j) == v`, if any.
fn boundary_index(boundary: impl Fn(u64) -> u128, v: u64) -> Option<u64> {
    let j = first_at_least(&boundary, v as u128);
    (boundary(j) == v as u128).then_some(j)
}

/// Equality case: `s_j = sum_{m<=j} (m^2 + 1) - 1`, the position of `h_j` in `A`.
fn equal_s(j: u64) -> u128 {
    let j = j as u128;
    j * (j + 1) * (2 * j + 1) / 6 + j - 1
}

/// Strict case: `s_j = sum_{m<=j} (m + 1) - 1`.
fn strict_s(j: u64) -> u128 {
    let j = j as u128;
    j * (j + 3) / 2 - 1
}

/// Reverse case: `s_j = 3 j (j + 1) / 2`.
fn reverse_s(j: u64) -> u128 {
    let j = j as u128;
    3 * j * (j + 1) / 2
}

fn reverse_ratio_at_boundary(j: u64) -> u64 {
    (j.saturating_sub(2)).max(2) * 3 * (j + 1)
}

/// `b_n` of a named rule.
pub(crate) fn named_ratio(id: NamedRule, n: u64) -> u64 {
    match id {
        NamedRule::Zeta => n + 1,
        NamedRule::Equal => boundary_index(equal_s, n - 1).map_or(2, |j| j + 1),
        NamedRule::Strict => boundary_index(strict_s, n - 1).map_or(2, |j| j + 1),
        NamedRule::Reverse => boundary_index(reverse_s, n - 1).map_or(3, reverse_ratio_at_boundary),
    }
}

fn named_seq(id: NamedRule) -> ArithSeq {
    ArithSeq::new(RatioSpec::named(id)).expect("named rules produce ratios >= 2")
}

/// `b_n = n + 1`, `a_n = n!`.
pub fn zeta() -> (ArithSeq, DerivedSeq) {
    let seq = named_seq(NamedRule::Zeta);
    (seq.clone(), DerivedSeq::new(seq))
}

/// Blocks `[g_n, h_n]` with `g_1 = 1` and the given length and gap rules.
fn blocks(length: fn(u64) -> u64, gap: fn(u64) -> u64) -> IndexSet {
    let cache: Arc<RwLock<Vec<(u64, u64)>>> = Arc::default();
    IndexSet::IntervalUnion(BlockUnion::from_rule(move |n| {
        let mut c = cache.write();
        while (c.len() as u64) < n {
            let m = c.len() as u64 + 1;
            let start = c.last().map_or(1, |&(_, h)| h + gap(m - 1));
            c.push((start, start + length(m)));
        }
        Some(c[(n - 1) as usize])
    }))
}

/// `{s_j + 1 : j >= 1}` for an increasing boundary sequence.
fn boundary_support(boundary: fn(u64) -> u128) -> IndexSet {
    IndexSet::predicate(move |n| n >= 2 && boundary_index(boundary, n - 1).is_some())
}

#[derive(Clone, Debug)]
pub struct EqualityCase {
    pub seq: ArithSeq,
    /// `A = U [g_n, h_n]` with `h_n - g_n = n^2` and `g_{n+1} - h_n = n`.
    pub blocks: IndexSet,
}

pub fn equality_case() -> EqualityCase {
    EqualityCase {
        seq: named_seq(NamedRule::Equal),
        blocks: blocks(|n| n * n, |n| n),
    }
}

impl EqualityCase {
    pub fn s(&self, j: u64) -> u64 {
        equal_s(j) as u64
    }
}

#[derive(Clone, Debug)]
pub struct StrictCase {
    pub seq: ArithSeq,
    /// `A = U [g_n, h_n]` with `h_n - g_n = g_{n+1} - h_n = n`.
    pub blocks: IndexSet,
    /// Digits `1` on `{s_j + 1}`.
    pub x: DigitExpansion,
}

pub fn strict_inclusion_case() -> StrictCase {
    let seq = named_seq(NamedRule::Strict);
    let x = DigitExpansion::rule(seq.clone(), boundary_support(strict_s), DigitRule::Constant(1))
        .with_growth(SupportGrowth::Divergent)
        .with_label("strict");
    StrictCase {
        seq,
        blocks: blocks(|n| n, |n| n),
        x,
    }
}

impl StrictCase {
    pub fn s(&self, j: u64) -> u64 {
        strict_s(j) as u64
    }
}

/// `s_n = 2n` or `s_n = 2n + 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SRule {
    Even,
    Odd,
}

impl SRule {
    pub fn s(self, j: u64) -> u64 {
        match self {
            SRule::Even => 2 * j,
            SRule::Odd => 2 * j + 1,
        }
    }
}

#[derive(Clone, Debug)]
pub struct DivergentWitness {
    pub seq: ArithSeq,
    pub derived: DerivedSeq,
    pub s_rule: SRule,
    /// Digits `1` on `{s_j + 1}`.
    pub x: DigitExpansion,
    /// `B = U [n_{s_j} + floor(b/6), n_{s_j} + floor(b/3)]`, `b = b_{s_j+1}`.
    pub bracket_set: IndexSet,
    /// `U [n_{s_j}, n_{s_j} + b_{s_j+1} - 2]`.
    pub parent_set: IndexSet,
}

/// Smallest ratio for which the bracket `[1/12, 2/3]` is claimed.
pub const BRACKET_MIN_RATIO: u64 = 12;

pub fn divergent_witness(spec: RatioSpec, s_rule: SRule) -> Result<DivergentWitness> {
    let seq = ArithSeq::new(spec)?;
    if seq.spec().known_bound().is_some() {
        return Err(Error::Hypothesis(format!(
            "ratio rule {} is bounded",
            seq.spec().describe()
        )));
    }
    if !seq.spec().is_divergent() {
        // Running maxima of b_{s_j + 1} must keep growing across quarters.
        let along: Vec<u64> = (1..=256).map(|j| seq.ratio(s_rule.s(j) + 1)).collect();
        let maxima: Vec<u64> = along.chunks(64).map(|c| *c.iter().max().unwrap()).collect();
        if maxima.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Hypothesis(format!(
                "b along the support does not grow for {}",
                seq.spec().describe()
            )));
        }
    }
    let first = s_rule.s(1) + 1;
    let x = DigitExpansion::rule(
        seq.clone(),
        IndexSet::predicate(move |n| n >= first && (n - first).is_multiple_of(2)),
        DigitRule::Constant(1),
    )
    .with_growth(SupportGrowth::Divergent)
    .with_label("divergent");
    let level_block = |seq: ArithSeq, lo: fn(u64) -> u64, hi: fn(u64) -> u64| {
        IndexSet::IntervalUnion(BlockUnion::from_rule(move |j| {
            let k = s_rule.s(j);
            let (n, b) = (seq.level_index(k), seq.ratio(k + 1));
            Some((n + lo(b), n + hi(b)))
        }))
    };
    Ok(DivergentWitness {
        bracket_set: level_block(seq.clone(), |b| b / 6, |b| b / 3),
        parent_set: level_block(seq.clone(), |_| 0, |b| b - 2),
        derived: DerivedSeq::new(seq.clone()),
        seq,
        s_rule,
        x,
    })
}

#[derive(Clone, Debug)]
pub struct ReverseCase {
    pub seq: ArithSeq,
    /// `{s_n}`, `s_n = 3 n (n + 1) / 2`.
    pub lacunary: IndexSet,
    /// `B = U [s_n + (s_{n+1} - s_n)/3, s_n + 2 (s_{n+1} - s_n)/3]`.
    pub blocks: IndexSet,
    /// Digits `1` on `B`.
    pub x: DigitExpansion,
}

pub fn reverse_case() -> ReverseCase {
    let seq = named_seq(NamedRule::Reverse);
    let blocks = IndexSet::IntervalUnion(BlockUnion::from_rule(|n| {
        let (s, next) = (reverse_s(n) as u64, reverse_s(n + 1) as u64);
        let gap = next - s;
        Some((s + gap / 3, s + 2 * gap / 3))
    }));
    let x = DigitExpansion::rule(seq.clone(), blocks.clone(), DigitRule::Constant(1))
        .with_growth(SupportGrowth::Bounded(3))
        .with_label("reverse");
    ReverseCase {
        seq,
        lacunary: IndexSet::predicate(|n| boundary_index(reverse_s, n).is_some()),
        blocks,
        x,
    }
}

impl ReverseCase {
    pub fn s(&self, j: u64) -> u64 {
        reverse_s(j) as u64
    }
}

/// The recursion `s_1 = 1`,
/// `s_{j+1} = min { r > s_j + j + 1 : n_r >= j T_j }` with
/// `T_j = sum_{i<=j} sum_{t<i} (b_{s_i + 1 - t} - 1)`, memoized.
#[derive(Clone)]
pub struct CardinalitySeq {
    base: ArithSeq,
    /// `(s_j, T_j)` for `j = 1, 2, ...`.
    terms: Arc<RwLock<Vec<(u64, u128)>>>,
}

impl std::fmt::Debug for CardinalitySeq {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CardinalitySeq").field("computed", &self.terms.read().len()).finish()
    }
}

impl CardinalitySeq {
    pub fn new(base: ArithSeq) -> Self {
        CardinalitySeq {
            base,
            terms: Arc::default(),
        }
    }

    fn inner_sum(&self, s: u64, i: u64) -> u128 {
        (0..i).map(|t| (self.base.ratio(s + 1 - t) - 1) as u128).sum()
    }

    /// `s_j`, `j >= 1`.
    pub fn s(&self, j: u64) -> u64 {
        assert!(j >= 1, "s is indexed from 1");
        if let Some(&(s, _)) = self.terms.read().get((j - 1) as usize) {
            return s;
        }
        let mut terms = self.terms.write();
        if terms.is_empty() {
            terms.push((1, self.inner_sum(1, 1)));
        }
        while (terms.len() as u64) < j {
            let jj = terms.len() as u64;
            let (s, total) = terms[(jj - 1) as usize];
            let target = jj as u128 * total;
            let mut r = s + jj + 2;
            while (self.base.level_index(r) as u128) < target {
                r += 1;
            }
            terms.push((r, total + self.inner_sum(r, jj + 1)));
        }
        terms[(j - 1) as usize].0
    }

    /// `T_j`.
    pub fn weight(&self, j: u64) -> u128 {
        self.s(j);
        self.terms.read()[(j - 1) as usize].1
    }

    /// `s_1, ..., s_J` with `s_J` the first term `> level`.
    pub fn upto_level(&self, level: u64) -> Vec<u64> {
        let mut out = Vec::new();
        for j in 1.. {
            let s = self.s(j);
            out.push(s);
            if s > level {
                break;
            }
        }
        out
    }

    /// The exceptional set `[1, n_{s_m + 1 - m} - 1] ∪ U_{j>=m} [n_{s_j + 1 - m}, n_{s_j + 1} - 1]`.
    pub fn exceptional_set(&self, m: u64) -> Result<IndexSet> {
        if m < 3 {
            return Err(Error::InvalidArgument("the exceptional set needs m >= 3".into()));
        }
        let this = self.clone();
        let first_end = self.base.level_index(self.s(m) + 1 - m) - 1;
        Ok(IndexSet::IntervalUnion(BlockUnion::from_rule(move |n| {
            if n == 1 {
                return Some((1, first_end));
            }
            let j = m + n - 2;
            let s = this.s(j);
            Some((this.base.level_index(s + 1 - m), this.base.level_index(s + 1) - 1))
        })))
    }
}

/// `x^xi` with digits `1` on `{s_{2k + z_k} : k >= 1}`, where `z_k` is the
/// `k`-th bit of `xi` and `0` past its end.
#[derive(Clone, Debug)]
pub struct CardinalityWitness {
    pub xi: Vec<bool>,
    pub s: CardinalitySeq,
    pub x: DigitExpansion,
}

impl CardinalityWitness {
    /// `s_{2k + z_k}` for `k = 1..=K`.
    pub fn prefix_support(&self) -> Vec<u64> {
        (1..=self.xi.len() as u64)
            .map(|k| self.s.s(2 * k + self.xi[(k - 1) as usize] as u64))
            .collect()
    }
}

pub const MAX_XI_BITS: usize = 16;

pub fn parse_xi(bits: &str) -> Result<Vec<bool>> {
    bits.chars()
        .map(|c| match c {
            '0' => Ok(false),
            '1' => Ok(true),
            _ => Err(Error::Spec(format!("xi prefix {bits:?} must be a string of 0 and 1"))),
        })
        .collect()
}

pub fn cardinality_family(base: ArithSeq, xi: &[bool]) -> Result<CardinalityWitness> {
    if xi.len() > MAX_XI_BITS {
        return Err(Error::InvalidArgument(format!(
            "xi prefix has {} bits, at most {MAX_XI_BITS} are supported",
            xi.len()
        )));
    }
    let report = hypothesis_check(&base, &[1, 2, 3], 10_000)?;
    if !report.holds {
        return Err(Error::Hypothesis(format!(
            "window sums of b_n - 1 do not vanish relative to n_k for {}",
            base.spec().describe()
        )));
    }
    let s = CardinalitySeq::new(base.clone());
    let bits: Vec<bool> = xi.to_vec();
    let support = {
        let s = s.clone();
        IndexSet::IntervalUnion(BlockUnion::from_rule(move |k| {
            let z = bits.get((k - 1) as usize).copied().unwrap_or(false);
            let v = s.s(2 * k + z as u64);
            Some((v, v))
        }))
    };
    let label: String = xi.iter().map(|&b| if b { '1' } else { '0' }).collect();
    let x = DigitExpansion::rule(base, support, DigitRule::Constant(1)).with_label(format!("cardinality:{label}"));
    Ok(CardinalityWitness {
        xi: xi.to_vec(),
        s,
        x,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct HypothesisRow {
    pub m: u64,
    /// `(n, R_m(n))` with `R_m(n) = sum_{i<m} (b_{n-i} - 1) / sum_{i<=n} (b_i - 1)`.
    pub checkpoints: Vec<(u64, f64)>,
    pub non_increasing: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct HypothesisReport {
    pub horizon: u64,
    pub rows: Vec<HypothesisRow>,
    /// Every row is non-increasing over its last four checkpoints and ends
    /// below [`HYPOTHESIS_CUTOFF`].
    pub holds: bool,
}

pub const HYPOTHESIS_CUTOFF: f64 = 0.1;

pub fn hypothesis_check(base: &ArithSeq, ms: &[u64], horizon: u64) -> Result<HypothesisReport> {
    if horizon == 0 || ms.is_empty() || ms.contains(&0) {
        return Err(Error::InvalidArgument("need horizon >= 1 and window sizes m >= 1".into()));
    }
    base.validate_upto(horizon)?;
    let ratios = base.ratios(horizon);
    let mut prefix = vec![0u128];
    for &b in &ratios {
        prefix.push(prefix.last().unwrap() + (b - 1) as u128);
    }
    let rows: Vec<HypothesisRow> = ms
        .iter()
        .map(|&m| {
            let checkpoints: Vec<(u64, f64)> = checkpoint_grid(horizon, 12)
                .into_iter()
                .filter(|&n| n >= m)
                .map(|n| {
                    let window = prefix[n as usize] - prefix[(n - m) as usize];
                    (n, window as f64 / prefix[n as usize] as f64)
                })
                .collect();
            let tail = &checkpoints[checkpoints.len().saturating_sub(4)..];
            HypothesisRow {
                m,
                non_increasing: tail.windows(2).all(|w| w[1].1 <= w[0].1),
                checkpoints,
            }
        })
        .collect();
    let holds = rows.iter().all(|r| {
        r.non_increasing && r.checkpoints.last().is_some_and(|&(_, v)| v < HYPOTHESIS_CUTOFF)
    });
    Ok(HypothesisReport { horizon, rows, holds })
}

/// Named supports usable in point specs: `all`, `odd`, `even`, `divergent`
/// (`{2j + 1}`), `strict` (`{s_j + 1}` of the strict case) and `reverse`
/// (the blocks `B` of the reverse case).
pub fn support_rule(id: &str) -> Result<IndexSet> {
    Ok(match id {
        "all" => IndexSet::predicate(|_| true),
        "odd" => IndexSet::predicate(|n| n % 2 == 1),
        "even" => IndexSet::predicate(|n| n % 2 == 0),
        "divergent" => IndexSet::predicate(|n| n >= 3 && n % 2 == 1),
        "strict" => boundary_support(strict_s),
        "reverse" => reverse_case().blocks,
        _ => return Err(Error::Spec(format!("unknown support rule {id:?}"))),
    })
}

pub fn resolve_point(base: &ArithSeq, spec: &PointSpec) -> Result<TorusPoint> {
    match spec {
        PointSpec::Rational(s) => Ok(TorusPoint::Rational(s.parse::<Rational01>()?)),
        PointSpec::Expansion(e) => {
            let digit = match &e.digit {
                DigitSpec::Constant(c) => DigitRule::Constant(*c),
                DigitSpec::Rule(r) if r == "max" => DigitRule::Max,
                DigitSpec::Rule(r) => return Err(Error::Spec(format!("unknown digit rule {r:?}"))),
            };
            let (support, label) = match &e.support {
                SupportSpec::List(v) => (IndexSet::explicit(v.clone()), format!("expansion:{v:?}")),
                SupportSpec::Rule(id) => (support_rule(id)?, format!("expansion:{id}")),
            };
            Ok(TorusPoint::Expansion(
                DigitExpansion::rule(base.clone(), support, digit).with_label(label),
            ))
        }
    }
}

/// Named witness points: `divergent` (over `zeta`), `strict`, `reverse`, and
/// `cardinality:<bits>` (over `zeta`), with their base sequences.
pub fn named_witness(id: &str) -> Result<(ArithSeq, DigitExpansion)> {
    if let Some(bits) = id.strip_prefix("cardinality:") {
        let (seq, _) = zeta();
        let w = cardinality_family(seq.clone(), &parse_xi(bits)?)?;
        return Ok((seq, w.x));
    }
    match id {
        "divergent" => {
            let w = divergent_witness(RatioSpec::named(NamedRule::Zeta), SRule::Even)?;
            Ok((w.seq, w.x))
        }
        "strict" => {
            let c = strict_inclusion_case();
            Ok((c.seq, c.x))
        }
        "reverse" => {
            let c = reverse_case();
            Ok((c.seq, c.x))
        }
        _ => Err(Error::Spec(format!("unknown witness {id:?}"))),
    }
}

/// `r a_k` as a big integer.
pub fn level_multiple(seq: &ArithSeq, k: u64, r: u64) -> BigUint {
    seq.value(k) * r
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::density_upto;

    #[test]
    fn zeta_prefix() {
        let (seq, d) = zeta();
        let terms: Vec<u64> = (1..=7).map(|i| d.term(i).try_into().unwrap()).collect();
        assert_eq!(terms, vec![1, 2, 4, 6, 12, 18, 24]);
        assert_eq!(d.term(seq.level_index(3)), BigUint::from(24u32));
        assert_eq!(seq.ratio(5), 6);
    }

    #[test]
    fn equality_sequence_enumerates_its_blocks() {
        let case = equality_case();
        let members = case.blocks.members_upto(200_000);
        for (k, &n) in members.iter().enumerate().take(1001) {
            assert_eq!(case.seq.level_index(k as u64), n, "k = {k}");
        }
        assert_eq!(case.seq.ratio(2), 2);
        assert_eq!(case.seq.ratio(case.s(3) + 1), 4);
        assert_eq!(case.seq.ratio(case.s(3) + 2), 2);
    }

    #[test]
    fn strict_sequence_enumerates_its_blocks() {
        let case = strict_inclusion_case();
        let members = case.blocks.members_upto(100_000);
        for (k, &n) in members.iter().enumerate().take(1001) {
            assert_eq!(case.seq.level_index(k as u64), n, "k = {k}");
        }
        let support = case.x.support_upto(60);
        let expected: Vec<u64> = (1..).map(|j| case.s(j) + 1).take_while(|&v| v <= 60).collect();
        assert_eq!(support, expected);
    }

    #[test]
    fn reverse_shape() {
        let case = reverse_case();
        for j in 1..=100 {
            assert_eq!(case.s(j) % 3, 0);
            assert!(case.s(j + 1) - case.s(j) >= j);
            assert!(case.seq.ratio(case.s(j) + 1) >= 2);
        }
        for n in case.blocks.members_upto(20_000) {
            assert_eq!(case.seq.ratio(n), 3, "n = {n}");
        }
        assert_eq!(case.seq.ratio(case.s(5) + 1), 3 * 3 * 6);
        assert_eq!(case.seq.ratio(case.s(1) + 1), 2 * 3 * 2);
    }

    #[test]
    fn divergent_sets_nest() {
        let w = divergent_witness(RatioSpec::named(NamedRule::Zeta), SRule::Even).unwrap();
        let bracket = w.bracket_set.members_upto(50_000);
        assert!(!bracket.is_empty());
        assert!(bracket.iter().all(|&i| w.parent_set.contains(i)));
        assert_eq!(w.x.support_upto(12), vec![3, 5, 7, 9, 11]);
        assert!(divergent_witness(RatioSpec::constant(3), SRule::Even).is_err());
        let odd = divergent_witness(RatioSpec::affine(2, 0), SRule::Odd).unwrap();
        assert_eq!(odd.x.support_upto(12), vec![4, 6, 8, 10, 12]);
    }

    #[test]
    fn cardinality_recursion_constraints() {
        let (seq, _) = zeta();
        let s = CardinalitySeq::new(seq.clone());
        assert_eq!((1..=8).map(|j| s.s(j)).collect::<Vec<_>>(), vec![1, 4, 8, 14, 27, 47, 77, 119]);
        for j in 1..20u64 {
            assert!(s.s(j + 1) > s.s(j) + j + 1);
            assert!(seq.level_index(s.s(j + 1)) as u128 >= j as u128 * s.weight(j));
            assert!((seq.level_index(s.s(j + 1) - 1) as u128) < j as u128 * s.weight(j) || s.s(j + 1) - 1 == s.s(j) + j + 1);
        }
        let a = s.exceptional_set(6).unwrap();
        let est = density_upto(&a, 1_000_000, 12).unwrap();
        assert!(est.upper_proxy < 0.05);
    }

    #[test]
    fn hypothesis_examples() {
        let (seq, _) = zeta();
        let r = hypothesis_check(&seq, &[3], 10_000).unwrap();
        assert!(r.holds);
        assert!(r.rows[0].checkpoints.last().unwrap().1 < 1e-3);
        let two = ArithSeq::new(RatioSpec::constant(2)).unwrap();
        let r = hypothesis_check(&two, &[1], 1000).unwrap();
        for &(n, v) in &r.rows[0].checkpoints {
            assert_eq!(v, 1.0 / n as f64);
        }
        let doubling = ArithSeq::new(RatioSpec::Formula {
            formula: crate::sequence::Formula::Exponential { base: 2 },
        })
        .unwrap();
        let r = hypothesis_check(&doubling, &[1], 60).unwrap();
        assert!(!r.holds);
        assert!((r.rows[0].checkpoints.last().unwrap().1 - 0.5).abs() < 0.01);
        assert!(cardinality_family(ArithSeq::new(RatioSpec::constant(5)).unwrap(), &[true]).is_ok());
    }

    #[test]
    fn resolves_point_specs() {
        let (seq, _) = zeta();
        let p: PointSpec = serde_json::from_str(r#"{"rational": "1/120"}"#).unwrap();
        assert!(matches!(resolve_point(&seq, &p).unwrap(), TorusPoint::Rational(_)));
        let p: PointSpec = serde_json::from_str(r#"{"expansion": {"support": "odd", "digit": 1}}"#).unwrap();
        let TorusPoint::Expansion(e) = resolve_point(&seq, &p).unwrap() else {
            panic!("expected an expansion")
        };
        assert_eq!(e.support_upto(6), vec![1, 3, 5]);
        let p: PointSpec = serde_json::from_str(r#"{"expansion": {"support": "nope", "digit": 1}}"#).unwrap();
        assert!(resolve_point(&seq, &p).is_err());
        assert!(named_witness("cardinality:0101").is_ok());
        assert!(named_witness("cardinality:01x").is_err());
    }
}
