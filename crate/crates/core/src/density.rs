//! Finite-horizon natural density.
//!
//! Counting runs over `[1, N]`; the textbook definition counts `[0, n - 1]`,
//! which differs by at most one element and so moves every ratio by `O(1/N)`.
//! Every figure reported here is a finite-horizon proxy, never a limit:
//! `lower_proxy` / `upper_proxy` are the exact minimum and maximum of
//! `|A ∩ [1, n]| / n` over every `n` in the window `[ceil(N/2), N]`, and the
//! checkpoint trace samples the ratio on a doubling grid ending at `N`.

use std::cmp::Ordering;
use std::fmt;
use std::sync::Arc;

use parking_lot::RwLock;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_CHECKPOINTS: usize = 12;

type BlockRule = Arc<dyn Fn(u64) -> Option<(u64, u64)> + Send + Sync>;

enum BlockSource {
    List,
    Rule(BlockRule),
}

/// A union of disjoint integer intervals `[g_n, h_n]` with
/// `g_n <= h_n < g_{n+1}`, given either as a list or as a rule `n -> block`
/// for `n >= 1` (`None` ends the union).
#[derive(Clone)]
pub struct BlockUnion {
    source: Arc<BlockSource>,
    generated: Arc<RwLock<Generated>>,
}

struct Generated {
    blocks: Vec<(u64, u64)>,
    exhausted: bool,
}

impl fmt::Debug for BlockUnion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let g = self.generated.read();
        f.debug_struct("BlockUnion")
            .field("generated", &g.blocks.len())
            .field("exhausted", &g.exhausted)
            .finish()
    }
}

impl BlockUnion {
    pub fn from_list(blocks: Vec<(u64, u64)>) -> Result<Self> {
        check_blocks(&blocks)?;
        Ok(BlockUnion {
            source: Arc::new(BlockSource::List),
            generated: Arc::new(RwLock::new(Generated {
                blocks,
                exhausted: true,
            })),
        })
    }

    pub fn from_rule(rule: impl Fn(u64) -> Option<(u64, u64)> + Send + Sync + 'static) -> Self {
        BlockUnion {
            source: Arc::new(BlockSource::Rule(Arc::new(rule))),
            generated: Arc::new(RwLock::new(Generated {
                blocks: Vec::new(),
                exhausted: false,
            })),
        }
    }

    /// Generates blocks until one starts beyond `bound` (or the rule ends).
    fn extend_past(&self, bound: u64) {
        {
            let g = self.generated.read();
            if g.exhausted || g.blocks.last().is_some_and(|&(start, _)| start > bound) {
                return;
            }
        }
        let BlockSource::Rule(rule) = &*self.source else {
            return;
        };
        let mut g = self.generated.write();
        while !g.exhausted && !g.blocks.last().is_some_and(|&(start, _)| start > bound) {
            let n = g.blocks.len() as u64 + 1;
            match rule(n) {
                Some((start, end)) => {
                    assert!(start <= end, "block {n} is reversed: [{start}, {end}]");
                    if let Some(&(_, prev_end)) = g.blocks.last() {
                        assert!(prev_end < start, "block {n} overlaps its predecessor");
                    }
                    g.blocks.push((start, end));
                }
                None => g.exhausted = true,
            }
        }
    }

    /// Blocks with `g_n <= bound`, in order.
    pub fn blocks_upto(&self, bound: u64) -> Vec<(u64, u64)> {
        self.extend_past(bound);
        let g = self.generated.read();
        let end = g.blocks.partition_point(|&(start, _)| start <= bound);
        g.blocks[..end].to_vec()
    }

    pub fn contains(&self, i: u64) -> bool {
        self.extend_past(i);
        let g = self.generated.read();
        let pos = g.blocks.partition_point(|&(start, _)| start <= i);
        pos > 0 && g.blocks[pos - 1].1 >= i
    }

    /// Exact `|A ∩ [1, n]|` from the block structure.
    pub fn count_upto(&self, n: u64) -> u64 {
        self.blocks_upto(n)
            .iter()
            .map(|&(start, end)| end.min(n) - start + 1)
            .sum()
    }

    fn finite_max(&self) -> Option<u64> {
        let g = self.generated.read();
        match (&*self.source, g.exhausted) {
            (BlockSource::List, _) | (_, true) => Some(g.blocks.last().map_or(0, |b| b.1)),
            _ => None,
        }
    }
}

fn check_blocks(blocks: &[(u64, u64)]) -> Result<()> {
    for (idx, &(start, end)) in blocks.iter().enumerate() {
        if start == 0 || start > end {
            return Err(Error::InvalidArgument(format!(
                "block {} = [{start}, {end}] is not a nonempty interval of positive integers",
                idx + 1
            )));
        }
        if idx > 0 && blocks[idx - 1].1 >= start {
            return Err(Error::InvalidArgument(format!(
                "block {} overlaps its predecessor",
                idx + 1
            )));
        }
    }
    Ok(())
}

/// A set of positive integers with pure membership.
#[derive(Clone)]
pub enum IndexSet {
    Predicate(Arc<dyn Fn(u64) -> bool + Send + Sync>),
    IntervalUnion(BlockUnion),
    /// Sorted, without duplicates.
    Explicit(Vec<u64>),
}

impl fmt::Debug for IndexSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IndexSet::Predicate(_) => f.write_str("Predicate(..)"),
            IndexSet::IntervalUnion(u) => u.fmt(f),
            IndexSet::Explicit(v) => f.debug_tuple("Explicit").field(&v.len()).finish(),
        }
    }
}

impl IndexSet {
    pub fn predicate(p: impl Fn(u64) -> bool + Send + Sync + 'static) -> Self {
        IndexSet::Predicate(Arc::new(p))
    }

    pub fn explicit(mut members: Vec<u64>) -> Self {
        members.sort_unstable();
        members.dedup();
        members.retain(|&i| i > 0);
        IndexSet::Explicit(members)
    }

    pub fn empty() -> Self {
        IndexSet::Explicit(Vec::new())
    }

    pub fn contains(&self, i: u64) -> bool {
        match self {
            IndexSet::Predicate(p) => i > 0 && p(i),
            IndexSet::IntervalUnion(u) => u.contains(i),
            IndexSet::Explicit(v) => v.binary_search(&i).is_ok(),
        }
    }

    /// `bits[i - 1]` tells whether `i` is a member, for `i` in `[1, n]`.
    pub fn indicator(&self, n: u64) -> Vec<bool> {
        match self {
            IndexSet::Predicate(p) => (1..=n).into_par_iter().map(|i| p(i)).collect(),
            IndexSet::IntervalUnion(u) => {
                let mut bits = vec![false; n as usize];
                for (start, end) in u.blocks_upto(n) {
                    bits[(start - 1) as usize..end.min(n) as usize].fill(true);
                }
                bits
            }
            IndexSet::Explicit(v) => {
                let mut bits = vec![false; n as usize];
                for &i in v.iter().take_while(|&&i| i <= n) {
                    bits[(i - 1) as usize] = true;
                }
                bits
            }
        }
    }

    pub fn members_upto(&self, n: u64) -> Vec<u64> {
        match self {
            IndexSet::Explicit(v) => v.iter().copied().take_while(|&i| i <= n).collect(),
            IndexSet::IntervalUnion(u) => u
                .blocks_upto(n)
                .into_iter()
                .flat_map(|(start, end)| start..=end.min(n))
                .collect(),
            IndexSet::Predicate(_) => self
                .indicator(n)
                .iter()
                .enumerate()
                .filter(|(_, &b)| b)
                .map(|(i, _)| i as u64 + 1)
                .collect(),
        }
    }

    /// `Some(M)` when every member is known to be `<= M` (`Some(0)` for the
    /// empty set); `None` when the set may be infinite.
    pub fn finite_max(&self) -> Option<u64> {
        match self {
            IndexSet::Predicate(_) => None,
            IndexSet::IntervalUnion(u) => u.finite_max(),
            IndexSet::Explicit(v) => Some(v.last().copied().unwrap_or(0)),
        }
    }

    /// `A + t`.
    pub fn shifted(&self, t: u64) -> IndexSet {
        let inner = self.clone();
        IndexSet::predicate(move |i| i > t && inner.contains(i - t))
    }

    pub fn union(sets: Vec<IndexSet>) -> IndexSet {
        IndexSet::predicate(move |i| sets.iter().any(|s| s.contains(i)))
    }

    pub fn difference(&self, other: &IndexSet) -> IndexSet {
        let (a, b) = (self.clone(), other.clone());
        IndexSet::predicate(move |i| a.contains(i) && !b.contains(i))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub n: u64,
    pub count: u64,
    pub ratio: f64,
}

/// Counts and density proxies of an index set over `[1, N]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityEstimate {
    pub horizon: u64,
    pub count: u64,
    pub ratio: f64,
    pub lower_proxy: f64,
    pub upper_proxy: f64,
    pub checkpoints: Vec<Checkpoint>,
}

impl DensityEstimate {
    /// True when the least-squares slope of the ratio against `log2 n`, over
    /// the last `points` checkpoints, is not positive.
    pub fn trends_down(&self, points: usize) -> bool {
        slope(self.tail(points)) <= 0.0
    }

    /// True when the ratio strictly increases across the last `points`
    /// checkpoints.
    pub fn strictly_increasing(&self, points: usize) -> bool {
        self.tail(points)
            .windows(2)
            .all(|w| w[1].ratio > w[0].ratio)
    }

    fn tail(&self, points: usize) -> &[Checkpoint] {
        let len = self.checkpoints.len();
        &self.checkpoints[len.saturating_sub(points)..]
    }
}

fn slope(points: &[Checkpoint]) -> f64 {
    if points.len() < 2 {
        return 0.0;
    }
    let xs: Vec<f64> = points.iter().map(|c| (c.n as f64).log2()).collect();
    let mx = xs.iter().sum::<f64>() / xs.len() as f64;
    let my = points.iter().map(|c| c.ratio).sum::<f64>() / xs.len() as f64;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (x, c) in xs.iter().zip(points) {
        sxy += (x - mx) * (c.ratio - my);
        sxx += (x - mx) * (x - mx);
    }
    if sxx == 0.0 {
        0.0
    } else {
        sxy / sxx
    }
}

/// Doubling checkpoint grid `ceil(N / 2^j)` for `j = count-1, ..., 0`,
/// deduplicated; always ends at `N`.
pub fn checkpoint_grid(horizon: u64, count: usize) -> Vec<u64> {
    let mut grid: Vec<u64> = (0..count as u32)
        .rev()
        .map(|j| {
            if j >= 64 {
                1
            } else {
                horizon.div_ceil(1u64 << j).max(1)
            }
        })
        .collect();
    grid.dedup();
    grid
}

/// `a/b` versus `c/d`.
fn cmp_frac(a: u64, b: u64, c: u64, d: u64) -> Ordering {
    (a as u128 * d as u128).cmp(&(c as u128 * b as u128))
}

fn ratio(count: u64, n: u64) -> f64 {
    count as f64 / n as f64
}

/// Window extremes as exact `(count, n)` fractions.
#[derive(Clone, Copy)]
struct Extremes {
    min: (u64, u64),
    max: (u64, u64),
}

impl Extremes {
    fn new(count: u64, n: u64) -> Self {
        Extremes {
            min: (count, n),
            max: (count, n),
        }
    }

    fn observe(&mut self, count: u64, n: u64) {
        if cmp_frac(count, n, self.min.0, self.min.1) == Ordering::Less {
            self.min = (count, n);
        }
        if cmp_frac(count, n, self.max.0, self.max.1) == Ordering::Greater {
            self.max = (count, n);
        }
    }
}

/// Streaming counter fed with the membership of `1, 2, ..., N` in order.
pub struct DensityScan {
    horizon: u64,
    window_start: u64,
    grid: Vec<u64>,
    next_checkpoint: usize,
    n: u64,
    count: u64,
    extremes: Option<Extremes>,
    checkpoints: Vec<Checkpoint>,
}

impl DensityScan {
    pub fn new(horizon: u64, checkpoints: usize) -> Self {
        assert!(horizon >= 1, "horizon must be positive");
        DensityScan {
            horizon,
            window_start: horizon.div_ceil(2),
            grid: checkpoint_grid(horizon, checkpoints),
            next_checkpoint: 0,
            n: 0,
            count: 0,
            extremes: None,
            checkpoints: Vec::new(),
        }
    }

    #[inline]
    pub fn push(&mut self, member: bool) {
        self.n += 1;
        self.count += member as u64;
        if self.n >= self.window_start {
            match &mut self.extremes {
                Some(e) => e.observe(self.count, self.n),
                None => self.extremes = Some(Extremes::new(self.count, self.n)),
            }
        }
        if self.grid.get(self.next_checkpoint) == Some(&self.n) {
            self.checkpoints.push(Checkpoint {
                n: self.n,
                count: self.count,
                ratio: ratio(self.count, self.n),
            });
            self.next_checkpoint += 1;
        }
    }

    pub fn finish(self) -> DensityEstimate {
        assert_eq!(self.n, self.horizon, "scan fed {} of {} indices", self.n, self.horizon);
        let e = self.extremes.expect("window is nonempty");
        DensityEstimate {
            horizon: self.horizon,
            count: self.count,
            ratio: ratio(self.count, self.horizon),
            lower_proxy: ratio(e.min.0, e.min.1),
            upper_proxy: ratio(e.max.0, e.max.1),
            checkpoints: self.checkpoints,
        }
    }
}

/// Density of a membership stream over `[1, bits.len()]`.
pub fn density_of_bits(bits: &[bool], checkpoints: usize) -> DensityEstimate {
    let mut scan = DensityScan::new(bits.len() as u64, checkpoints);
    for &b in bits {
        scan.push(b);
    }
    scan.finish()
}

/// Exact membership count and density proxies of `set` over `[1, horizon]`,
/// by scanning every index.
pub fn density_upto(set: &IndexSet, horizon: u64, checkpoints: usize) -> Result<DensityEstimate> {
    if horizon == 0 {
        return Err(Error::InvalidArgument("horizon must be at least 1".into()));
    }
    if checkpoints < 2 {
        return Err(Error::InvalidArgument("at least 2 checkpoints are required".into()));
    }
    Ok(density_of_bits(&set.indicator(horizon), checkpoints))
}

/// Same figures as [`density_upto`] for an interval union, computed from block
/// overlaps: the ratio rises inside a block and falls inside a gap, so window
/// extremes sit at block ends, just before block starts, or at the window
/// edges.
pub fn scaled_union_density(
    set: &IndexSet,
    horizon: u64,
    checkpoints: usize,
) -> Result<DensityEstimate> {
    let IndexSet::IntervalUnion(union) = set else {
        return Err(Error::InvalidArgument(
            "scaled_union_density needs an interval union".into(),
        ));
    };
    if horizon == 0 {
        return Err(Error::InvalidArgument("horizon must be at least 1".into()));
    }
    if checkpoints < 2 {
        return Err(Error::InvalidArgument("at least 2 checkpoints are required".into()));
    }
    let blocks = union.blocks_upto(horizon);
    // prefix[j] = members in blocks[..j], all clipped to the horizon.
    let mut prefix = Vec::with_capacity(blocks.len() + 1);
    prefix.push(0u64);
    for &(start, end) in &blocks {
        prefix.push(prefix.last().unwrap() + end.min(horizon) - start + 1);
    }
    let count_at = |n: u64| -> u64 {
        let j = blocks.partition_point(|&(start, _)| start <= n);
        if j == 0 {
            return 0;
        }
        let (start, end) = blocks[j - 1];
        prefix[j - 1] + end.min(n) - start + 1
    };

    let window_start = horizon.div_ceil(2);
    let mut extremes = Extremes::new(count_at(window_start), window_start);
    extremes.observe(count_at(horizon), horizon);
    let first = blocks.partition_point(|&(_, end)| end < window_start);
    for &(start, end) in &blocks[first.saturating_sub(1)..] {
        for n in [start.saturating_sub(1), end] {
            if (window_start..=horizon).contains(&n) {
                extremes.observe(count_at(n), n);
            }
        }
    }

    let checkpoints = checkpoint_grid(horizon, checkpoints)
        .into_iter()
        .map(|n| {
            let count = count_at(n);
            Checkpoint {
                n,
                count,
                ratio: ratio(count, n),
            }
        })
        .collect();
    let count = count_at(horizon);
    Ok(DensityEstimate {
        horizon,
        count,
        ratio: ratio(count, horizon),
        lower_proxy: ratio(extremes.min.0, extremes.min.1),
        upper_proxy: ratio(extremes.max.0, extremes.max.1),
        checkpoints,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn even_numbers_have_half_density() {
        let evens = IndexSet::predicate(|i| i % 2 == 0);
        let est = density_upto(&evens, 10_000, DEFAULT_CHECKPOINTS).unwrap();
        assert_eq!(est.count, 5000);
        assert_eq!(est.ratio, 0.5);
        assert_eq!(est.upper_proxy, 0.5);
        assert!(est.lower_proxy < 0.5 && est.lower_proxy > 0.4999);
    }

    #[test]
    fn lacunary_sets_thin_out() {
        // s_n = n (n + 1) / 2 has gaps growing like n.
        let tri = IndexSet::explicit((1..2000u64).map(|n| n * (n + 1) / 2).collect());
        let est = density_upto(&tri, 1_000_000, DEFAULT_CHECKPOINTS).unwrap();
        assert!(est.ratio < 0.002);
        assert!(est.upper_proxy < 0.003);
        assert!(est.trends_down(4));
    }

    #[test]
    fn single_and_empty_unions() {
        let whole = IndexSet::IntervalUnion(BlockUnion::from_list(vec![(1, 5000)]).unwrap());
        let est = scaled_union_density(&whole, 5000, DEFAULT_CHECKPOINTS).unwrap();
        assert_eq!(est.ratio, 1.0);
        assert_eq!(est.lower_proxy, 1.0);
        let none = IndexSet::IntervalUnion(BlockUnion::from_list(vec![]).unwrap());
        let est = scaled_union_density(&none, 5000, DEFAULT_CHECKPOINTS).unwrap();
        assert_eq!(est.count, 0);
        assert_eq!(est.ratio, 0.0);
    }

    #[test]
    fn rejects_bad_arguments() {
        let evens = IndexSet::predicate(|i| i % 2 == 0);
        assert!(density_upto(&evens, 0, 12).is_err());
        assert!(density_upto(&evens, 10, 1).is_err());
        assert!(scaled_union_density(&evens, 10, 12).is_err());
        assert!(BlockUnion::from_list(vec![(3, 2)]).is_err());
        assert!(BlockUnion::from_list(vec![(1, 4), (4, 6)]).is_err());
    }

    #[test]
    fn grid_is_doubling_and_ends_at_horizon() {
        let grid = checkpoint_grid(100_000, 12);
        assert_eq!(grid.len(), 12);
        assert_eq!(*grid.last().unwrap(), 100_000);
        assert_eq!(grid[10], 50_000);
        assert_eq!(checkpoint_grid(3, 12), vec![1, 2, 3]);
    }

    #[test]
    fn rule_blocks_are_generated_lazily() {
        let squares = BlockUnion::from_rule(|n| Some((n * n * 10, n * n * 10 + n)));
        assert!(squares.contains(10));
        assert!(squares.contains(11));
        assert!(!squares.contains(12));
        assert!(squares.contains(42));
        assert_eq!(squares.count_upto(45), 2 + 3);
        assert_eq!(IndexSet::IntervalUnion(squares).finite_max(), None);
        let finite = BlockUnion::from_rule(|n| (n <= 2).then_some((n * 10, n * 10 + 1)));
        let set = IndexSet::IntervalUnion(finite);
        assert_eq!(set.members_upto(100), vec![10, 11, 20, 21]);
        assert_eq!(set.finite_max(), Some(21));
    }

    fn random_blocks() -> impl Strategy<Value = Vec<(u64, u64)>> {
        proptest::collection::vec((0u64..500, 0u64..800), 0..60).prop_map(|steps| {
            let mut out = Vec::new();
            let mut cursor = 0u64;
            for (gap, len) in steps {
                let start = cursor + gap + 1;
                out.push((start, start + len));
                cursor = start + len;
            }
            out
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn fast_path_matches_scan(blocks in random_blocks(), horizon in 1u64..40_000) {
            let union = IndexSet::IntervalUnion(BlockUnion::from_list(blocks.clone()).unwrap());
            let fast = scaled_union_density(&union, horizon, DEFAULT_CHECKPOINTS).unwrap();
            let pred = IndexSet::predicate(move |i| blocks.iter().any(|&(g, h)| g <= i && i <= h));
            let scan = density_upto(&pred, horizon, DEFAULT_CHECKPOINTS).unwrap();
            prop_assert_eq!(fast, scan);
        }

        #[test]
        fn inclusion_is_monotone(members in proptest::collection::vec(1u64..5000, 0..400), keep in 1u64..5) {
            let big = IndexSet::explicit(members.clone());
            let small = IndexSet::explicit(members.into_iter().filter(|i| i % keep == 0).collect());
            let eb = density_upto(&big, 5000, DEFAULT_CHECKPOINTS).unwrap();
            let es = density_upto(&small, 5000, DEFAULT_CHECKPOINTS).unwrap();
            for (b, s) in eb.checkpoints.iter().zip(&es.checkpoints) {
                prop_assert!(s.count <= b.count);
            }
        }

        #[test]
        fn translates_are_subadditive(members in proptest::collection::vec(1u64..3000, 0..300), shifts in 0u64..=10) {
            let set = IndexSet::explicit(members);
            let horizon = 4000;
            let translates: Vec<_> = (0..=shifts).map(|t| set.shifted(t)).collect();
            let sum: u64 = translates
                .iter()
                .map(|s| density_upto(s, horizon, 4).unwrap().count)
                .sum();
            let union = density_upto(&IndexSet::union(translates), horizon, 4).unwrap();
            prop_assert!(union.count <= sum);
        }
    }
}
