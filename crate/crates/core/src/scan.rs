//! Bulk certified norm scans `||u_i x||` for `i = 1..=N` along `(a_n)` or
//! `(d_n)`.
//!
//! Every index `i` maps to a level `k` and multiplier `r` with `u_i = r a_k`,
//! so `{u_i x} = {r y_k}` (see [`crate::torus`]). Work is done once per level:
//! a residue `a_k p mod q` for rational points, an exact `y_k` window for
//! expansions. Per-index results are reduced to two small counts against the
//! ascending epsilon grid:
//!
//! * `certain[i-1]`: how many `eps` satisfy `eps <= lo(||u_i x||)`,
//! * `possible[i-1]`: how many `eps` satisfy `eps <= hi(||u_i x||)`.
//!
//! Chunks are independent and merged in index order, so parallel and
//! sequential scans produce identical results.

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::density::{checkpoint_grid, DensityEstimate, DensityScan, DEFAULT_CHECKPOINTS};
use crate::error::{Error, Result};
use crate::sequence::ArithSeq;
use crate::torus::{default_tol, DigitExpansion, TorusPoint, DEPTH_CAP};

const CHUNK: u64 = 1 << 16;

/// Which sequence `u` the scan runs along.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Along {
    /// `u_n = a_n`, `n >= 1`.
    #[serde(rename = "a")]
    Arith,
    /// `u_i = d_i`, `i >= 1`.
    #[serde(rename = "d")]
    Derived,
}

impl Along {
    pub fn id(self) -> &'static str {
        match self {
            Along::Arith => "a",
            Along::Derived => "d",
        }
    }
}

/// The default grid `2^-3, ..., 2^-10`.
pub fn default_eps() -> Vec<BigRational> {
    (3..=10)
        .map(|e| BigRational::new(1.into(), (1u64 << e).into()))
        .collect()
}

#[derive(Debug, Clone)]
pub struct ScanConfig {
    pub horizon: u64,
    /// Ascending, without duplicates, each in `(0, 1/2]`.
    pub eps: Vec<BigRational>,
    pub tol: BigRational,
    /// Right ends of the windows over which `window_sup` is reported.
    pub windows: Vec<u64>,
    pub parallel: bool,
    pub trace: bool,
}

impl ScanConfig {
    pub fn new(horizon: u64, mut eps: Vec<BigRational>) -> Result<Self> {
        if horizon == 0 {
            return Err(Error::InvalidArgument("horizon must be at least 1".into()));
        }
        if eps.is_empty() || eps.len() > u8::MAX as usize {
            return Err(Error::InvalidArgument("epsilon grid must have 1 to 255 entries".into()));
        }
        let half = BigRational::new(1.into(), 2.into());
        for e in &eps {
            if e <= &BigRational::zero() || e > &half {
                return Err(Error::InvalidArgument(format!("epsilon {e} is outside (0, 1/2]")));
            }
        }
        eps.sort();
        eps.dedup();
        Ok(ScanConfig {
            horizon,
            eps,
            tol: default_tol(),
            windows: checkpoint_grid(horizon, DEFAULT_CHECKPOINTS),
            parallel: true,
            trace: false,
        })
    }

    pub fn with_tol(mut self, tol: BigRational) -> Self {
        self.tol = tol;
        self
    }

    pub fn sequential(mut self) -> Self {
        self.parallel = false;
        self
    }

    pub fn with_trace(mut self, trace: bool) -> Self {
        self.trace = trace;
        self
    }
}

/// Result of a scan over `[1, N]`.
#[derive(Debug, Clone, PartialEq)]
pub struct NormScan {
    pub along: Along,
    pub horizon: u64,
    pub eps: Vec<BigRational>,
    pub certain: Vec<u8>,
    pub possible: Vec<u8>,
    pub windows: Vec<u64>,
    /// Upper bound on `||u_i x||` over each window `(windows[w-1], windows[w]]`.
    pub window_sup: Vec<f64>,
    /// Largest lower bound on `||u_i x||` over each window.
    pub window_lo_sup: Vec<f64>,
    /// Largest `certain` count over each window.
    pub window_certain: Vec<u8>,
    /// Largest `possible` count over the tail window `[ceil(N/2), N]`.
    pub tail_possible: u8,
    /// Largest `certain` count over the tail window.
    pub tail_certain: u8,
    pub max_width: f64,
    /// Enclosures that hit the depth cap before reaching the tolerance.
    pub wide: u64,
    /// `||u_i x|| = 0` exactly for every `i >= zero_from`.
    pub zero_from: Option<u64>,
    /// `(lo, hi)` per index when requested.
    pub trace: Option<Vec<(f64, f64)>>,
}

impl NormScan {
    /// Membership in `{i : eps[e] <= lo}` (certified exceedance).
    pub fn certain_bits(&self, e: usize) -> impl Iterator<Item = bool> + '_ {
        self.certain.iter().map(move |&c| c as usize > e)
    }

    /// Membership in `{i : eps[e] <= hi}` (possible exceedance).
    pub fn possible_bits(&self, e: usize) -> impl Iterator<Item = bool> + '_ {
        self.possible.iter().map(move |&c| c as usize > e)
    }

    /// `(certain, possible)` exceedance counts per epsilon.
    pub fn exceedance_counts(&self) -> Vec<(u64, u64)> {
        (0..self.eps.len())
            .map(|e| {
                (
                    self.certain_bits(e).filter(|&b| b).count() as u64,
                    self.possible_bits(e).filter(|&b| b).count() as u64,
                )
            })
            .collect()
    }

    /// Density figures of the certain and possible exceedance sets of `eps[e]`.
    pub fn densities(&self, e: usize, checkpoints: usize) -> (DensityEstimate, DensityEstimate) {
        let mut certain = DensityScan::new(self.horizon, checkpoints);
        let mut possible = DensityScan::new(self.horizon, checkpoints);
        for (&c, &p) in self.certain.iter().zip(&self.possible) {
            certain.push(c as usize > e);
            possible.push(p as usize > e);
        }
        (certain.finish(), possible.finish())
    }

    pub fn certain_members(&self, e: usize, limit: usize) -> Vec<u64> {
        self.certain_bits(e)
            .enumerate()
            .filter(|&(_, b)| b)
            .map(|(i, _)| i as u64 + 1)
            .take(limit)
            .collect()
    }
}

/// Arithmetic used by the per-level kernels: `u128` with overflow checks, and
/// `BigUint` as the fallback.
trait Nat: Clone + Ord {
    fn from_u128(v: u128) -> Self;
    fn mul_u64(&self, v: u64) -> Option<Self>;
    fn add_u64(&self, v: u64) -> Option<Self>;
    fn sub(&self, o: &Self) -> Self;
    fn rem(&self, o: &Self) -> Self;
    /// `ceil(self * num / den)`.
    fn ceil_scaled(&self, num: u64, den: u64) -> Option<Self>;
    fn to_float(&self) -> f64;
}

impl Nat for u128 {
    fn from_u128(v: u128) -> Self {
        v
    }
    fn mul_u64(&self, v: u64) -> Option<Self> {
        self.checked_mul(v as u128)
    }
    fn add_u64(&self, v: u64) -> Option<Self> {
        self.checked_add(v as u128)
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn rem(&self, o: &Self) -> Self {
        self % o
    }
    fn ceil_scaled(&self, num: u64, den: u64) -> Option<Self> {
        Some(self.checked_mul(num as u128)?.div_ceil(den as u128))
    }
    fn to_float(&self) -> f64 {
        *self as f64
    }
}

impl Nat for BigUint {
    fn from_u128(v: u128) -> Self {
        BigUint::from(v)
    }
    fn mul_u64(&self, v: u64) -> Option<Self> {
        Some(self * v)
    }
    fn add_u64(&self, v: u64) -> Option<Self> {
        Some(self + v)
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn rem(&self, o: &Self) -> Self {
        self % o
    }
    fn ceil_scaled(&self, num: u64, den: u64) -> Option<Self> {
        Some((self * num + (den - 1)) / den)
    }
    fn to_float(&self) -> f64 {
        self.to_f64().unwrap_or(f64::INFINITY)
    }
}

#[derive(Clone, Copy, Default)]
struct Entry {
    certain: u8,
    possible: u8,
    lo: f64,
    hi: f64,
    wide: bool,
}

enum Kernel {
    /// `p a_k mod q` per level.
    Small { q: u64, base: Vec<u64> },
    Big { q: BigUint, base: Vec<BigUint> },
    Expansion { digits: Vec<u64>, zero_beyond: Option<u64> },
}

struct Plan {
    along: Along,
    /// `levels[k] = n_k` (derived scans only).
    levels: Vec<u64>,
    ratios: Vec<u64>,
    kernel: Kernel,
    eps: Vec<(u64, u64)>,
    tol: (u64, u64),
    windows: Vec<u64>,
    tail_start: u64,
    trace: bool,
}

fn small_fraction(v: &BigRational, what: &str) -> Result<(u64, u64)> {
    match (v.numer().to_u64(), v.denom().to_u64()) {
        (Some(n), Some(d)) => Ok((n, d)),
        _ => Err(Error::InvalidArgument(format!(
            "{what} {v} needs a numerator and denominator below 2^64"
        ))),
    }
}

fn same_base(seq: &ArithSeq, exp: &DigitExpansion) -> Result<()> {
    if seq.spec() != exp.base().spec() {
        return Err(Error::InvalidArgument(format!(
            "point is expanded over {} but the scan runs over {}",
            exp.base().spec().describe(),
            seq.spec().describe()
        )));
    }
    Ok(())
}

impl Plan {
    fn new(seq: &ArithSeq, along: Along, x: &TorusPoint, cfg: &ScanConfig) -> Result<Self> {
        if cfg.tol <= BigRational::zero() {
            return Err(Error::InvalidArgument("tolerance must be positive".into()));
        }
        let top = match along {
            Along::Arith => cfg.horizon,
            Along::Derived => seq.level_of(cfg.horizon),
        };
        let levels = match along {
            Along::Arith => Vec::new(),
            Along::Derived => seq.level_indices(top + 1),
        };
        let kernel = match x {
            TorusPoint::Rational(r) => {
                seq.validate_upto(top + 1)?;
                match (r.numer().to_u64(), r.denom().to_u64()) {
                    (Some(p), Some(q)) => {
                        let ratios = seq.ratios(top);
                        let mut acc = 1 % q as u128;
                        let mut base = Vec::with_capacity(top as usize + 1);
                        base.push((p as u128 % q as u128) as u64);
                        for &b in &ratios {
                            acc = acc * (b as u128 % q as u128) % q as u128;
                            base.push((acc * p as u128 % q as u128) as u64);
                        }
                        Kernel::Small { q, base }
                    }
                    _ => {
                        let q = r.denom().clone();
                        let mut acc = BigUint::from(1u32) % &q;
                        let mut base = vec![r.numer() % &q];
                        for b in seq.ratios(top) {
                            acc = acc * b % &q;
                            base.push(&acc * r.numer() % &q);
                        }
                        Kernel::Big { q, base }
                    }
                }
            }
            TorusPoint::Expansion(exp) => {
                same_base(seq, exp)?;
                let h = top + DEPTH_CAP as u64 + 1;
                exp.validate_upto(h)?;
                let prefix = exp.digits(h);
                Kernel::Expansion {
                    digits: prefix.digits,
                    zero_beyond: prefix.zero_beyond,
                }
            }
        };
        let ratio_len = match kernel {
            Kernel::Expansion { .. } => top + DEPTH_CAP as u64 + 1,
            _ => top + 1,
        };
        Ok(Plan {
            along,
            levels,
            ratios: seq.ratios(ratio_len),
            kernel,
            eps: cfg
                .eps
                .iter()
                .map(|e| small_fraction(e, "epsilon"))
                .collect::<Result<_>>()?,
            tol: small_fraction(&cfg.tol, "tolerance")?,
            windows: cfg.windows.clone(),
            tail_start: cfg.horizon.div_ceil(2),
            trace: cfg.trace,
        })
    }

    /// `b_n`.
    fn ratio(&self, n: u64) -> u64 {
        self.ratios[(n - 1) as usize]
    }

    /// First index from which every norm is certified to be 0.
    fn zero_from(&self) -> Option<u64> {
        let level = match &self.kernel {
            Kernel::Small { base, .. } => base.iter().position(|&v| v == 0)? as u64,
            Kernel::Big { base, .. } => base.iter().position(|v| v.is_zero())? as u64,
            Kernel::Expansion { zero_beyond, .. } => (*zero_beyond)?,
        };
        match self.along {
            Along::Arith => Some(level.max(1)),
            Along::Derived => Some(*self.levels.get(level as usize).unwrap_or(&u64::MAX)),
        }
    }

    /// Calls `f(k, r_from, r_to, rmax)` for the level pieces covering `[s, e]`.
    fn for_levels(&self, s: u64, e: u64, mut f: impl FnMut(u64, u64, u64, u64)) {
        match self.along {
            Along::Arith => (s..=e).for_each(|n| f(n, 1, 1, 1)),
            Along::Derived => {
                let mut k = self.levels.partition_point(|&n| n <= s) - 1;
                loop {
                    let (start, next) = (self.levels[k], self.levels[k + 1]);
                    let from = s.max(start) - start + 1;
                    let to = e.min(next - 1) - start + 1;
                    f(k as u64, from, to, self.ratio(k as u64 + 1) - 1);
                    if next > e {
                        break;
                    }
                    k += 1;
                }
            }
        }
    }

    fn level(&self, k: u64, from: u64, to: u64, rmax: u64, out: &mut Vec<Entry>) {
        match &self.kernel {
            Kernel::Small { q, base } => small_level(*q, base[k as usize], from, to, &self.eps, out),
            Kernel::Big { q, base } => big_level(q, &base[k as usize], from, to, &self.eps, out),
            Kernel::Expansion { digits, zero_beyond } => {
                let mark = out.len();
                let args = (digits.as_slice(), *zero_beyond, k, from, to, rmax);
                if self.expansion_level::<u128>(args, out).is_none() {
                    out.truncate(mark);
                    self.expansion_level::<BigUint>(args, out)
                        .expect("arbitrary precision does not overflow");
                }
            }
        }
    }

    #[allow(clippy::type_complexity)]
    fn expansion_level<T: Nat>(
        &self,
        (digits, zero_beyond, k, from, to, rmax): (&[u64], Option<u64>, u64, u64, u64, u64),
        out: &mut Vec<Entry>,
    ) -> Option<()> {
        let need = T::from_u128((rmax as u128 * self.tol.1 as u128).div_ceil(self.tol.0 as u128));
        let (mut num, mut den) = (T::from_u128(0), T::from_u128(1));
        let (mut exact, mut wide) = (false, false);
        let mut depth = 0u64;
        loop {
            if zero_beyond.is_some_and(|m| k + depth >= m) {
                exact = true;
                break;
            }
            if den >= need {
                break;
            }
            if depth == DEPTH_CAP as u64 {
                wide = true;
                break;
            }
            let idx = (k + depth) as usize;
            num = num.mul_u64(self.ratios[idx])?.add_u64(digits[idx])?;
            den = den.mul_u64(self.ratios[idx])?;
            depth += 1;
        }
        let two_den = den.mul_u64(2)?;
        let thresholds: Vec<T> = self
            .eps
            .iter()
            .map(|&(en, ed)| two_den.ceil_scaled(en, ed))
            .collect::<Option<_>>()?;
        let dist = |x2: &T| -> T {
            let m = x2.rem(&two_den);
            let other = two_den.sub(&m);
            m.min(other)
        };
        let zero = T::from_u128(0);
        let scale = two_den.to_float();
        for r in from..=to {
            let lo = num.mul_u64(r)?.rem(&den);
            let (nlo, nhi) = if exact {
                let v = dist(&lo.mul_u64(2)?);
                (v.clone(), v)
            } else if T::from_u128(r as u128) >= den {
                (zero.clone(), den.clone())
            } else {
                // Enclosure [lo, lo + r] / den, doubled so half-integers are whole.
                let l2 = lo.mul_u64(2)?;
                let h2 = lo.add_u64(r)?.mul_u64(2)?;
                let has_int = lo == zero || h2 >= two_den;
                let has_half = (l2 <= den && den <= h2) || h2 >= den.mul_u64(3)?;
                let (dl, dh) = (dist(&l2), dist(&h2));
                let nlo = if has_int { zero.clone() } else { dl.clone().min(dh.clone()) };
                let nhi = if has_half { den.clone() } else { dl.max(dh) };
                (nlo, nhi)
            };
            out.push(Entry {
                certain: thresholds.partition_point(|t| t <= &nlo) as u8,
                possible: thresholds.partition_point(|t| t <= &nhi) as u8,
                lo: nlo.to_float() / scale,
                hi: nhi.to_float() / scale,
                wide,
            });
        }
        Some(())
    }

    fn chunk(&self, s: u64, e: u64) -> ChunkOut {
        let mut entries = Vec::with_capacity((e - s + 1) as usize);
        self.for_levels(s, e, |k, from, to, rmax| self.level(k, from, to, rmax, &mut entries));
        let mut out = ChunkOut {
            certain: Vec::with_capacity(entries.len()),
            possible: Vec::with_capacity(entries.len()),
            window_sup: vec![0.0; self.windows.len()],
            window_lo_sup: vec![0.0; self.windows.len()],
            window_certain: vec![0; self.windows.len()],
            tail_possible: 0,
            tail_certain: 0,
            max_width: 0.0,
            wide: 0,
            trace: self.trace.then(|| Vec::with_capacity(entries.len())),
        };
        let mut w = self.windows.partition_point(|&c| c < s);
        for (i, entry) in (s..=e).zip(&entries) {
            while self.windows[w] < i {
                w += 1;
            }
            out.certain.push(entry.certain);
            out.possible.push(entry.possible);
            out.window_sup[w] = out.window_sup[w].max(entry.hi);
            out.window_lo_sup[w] = out.window_lo_sup[w].max(entry.lo);
            out.window_certain[w] = out.window_certain[w].max(entry.certain);
            if i >= self.tail_start {
                out.tail_possible = out.tail_possible.max(entry.possible);
                out.tail_certain = out.tail_certain.max(entry.certain);
            }
            out.max_width = out.max_width.max(entry.hi - entry.lo);
            out.wide += entry.wide as u64;
            if let Some(t) = &mut out.trace {
                t.push((entry.lo, entry.hi));
            }
        }
        out
    }
}

fn small_level(q: u64, base: u64, from: u64, to: u64, eps: &[(u64, u64)], out: &mut Vec<Entry>) {
    let thresholds: Vec<u64> = eps
        .iter()
        .map(|&(en, ed)| (en as u128 * q as u128).div_ceil(ed as u128) as u64)
        .collect();
    let mut v = (from as u128 * base as u128 % q as u128) as u64;
    for _ in from..=to {
        let n = v.min(q - v);
        let count = thresholds.partition_point(|&t| t <= n) as u8;
        let norm = n as f64 / q as f64;
        out.push(Entry {
            certain: count,
            possible: count,
            lo: norm,
            hi: norm,
            wide: false,
        });
        v += base;
        if v >= q {
            v -= q;
        }
    }
}

fn big_level(q: &BigUint, base: &BigUint, from: u64, to: u64, eps: &[(u64, u64)], out: &mut Vec<Entry>) {
    let thresholds: Vec<BigUint> = eps
        .iter()
        .map(|&(en, ed)| q.ceil_scaled(en, ed).expect("exact"))
        .collect();
    for r in from..=to {
        let v = base * r % q;
        let n = (q - &v).min(v);
        let count = thresholds.partition_point(|t| t <= &n) as u8;
        let norm = BigRational::new(n.into(), q.clone().into()).to_f64().unwrap_or(0.0);
        out.push(Entry {
            certain: count,
            possible: count,
            lo: norm,
            hi: norm,
            wide: false,
        });
    }
}

struct ChunkOut {
    certain: Vec<u8>,
    possible: Vec<u8>,
    window_sup: Vec<f64>,
    window_lo_sup: Vec<f64>,
    window_certain: Vec<u8>,
    tail_possible: u8,
    tail_certain: u8,
    max_width: f64,
    wide: u64,
    trace: Option<Vec<(f64, f64)>>,
}

/// Scans `||u_i x||` for `i` in `[1, cfg.horizon]`.
pub fn scan_norms(seq: &ArithSeq, along: Along, x: &TorusPoint, cfg: &ScanConfig) -> Result<NormScan> {
    let plan = Plan::new(seq, along, x, cfg)?;
    let starts: Vec<u64> = (0..cfg.horizon.div_ceil(CHUNK)).map(|c| c * CHUNK + 1).collect();
    let run = |&s: &u64| plan.chunk(s, (s + CHUNK - 1).min(cfg.horizon));
    let chunks: Vec<ChunkOut> = if cfg.parallel {
        starts.par_iter().map(run).collect()
    } else {
        starts.iter().map(run).collect()
    };
    let n = cfg.horizon as usize;
    let mut scan = NormScan {
        along,
        horizon: cfg.horizon,
        eps: cfg.eps.clone(),
        certain: Vec::with_capacity(n),
        possible: Vec::with_capacity(n),
        windows: plan.windows.clone(),
        window_sup: vec![0.0; plan.windows.len()],
        window_lo_sup: vec![0.0; plan.windows.len()],
        window_certain: vec![0; plan.windows.len()],
        tail_possible: 0,
        tail_certain: 0,
        max_width: 0.0,
        wide: 0,
        zero_from: plan.zero_from(),
        trace: cfg.trace.then(|| Vec::with_capacity(n)),
    };
    for chunk in chunks {
        scan.certain.extend(chunk.certain);
        scan.possible.extend(chunk.possible);
        for (acc, v) in scan.window_sup.iter_mut().zip(chunk.window_sup) {
            *acc = acc.max(v);
        }
        for (acc, v) in scan.window_lo_sup.iter_mut().zip(chunk.window_lo_sup) {
            *acc = acc.max(v);
        }
        for (acc, v) in scan.window_certain.iter_mut().zip(chunk.window_certain) {
            *acc = (*acc).max(v);
        }
        scan.tail_possible = scan.tail_possible.max(chunk.tail_possible);
        scan.tail_certain = scan.tail_certain.max(chunk.tail_certain);
        scan.max_width = scan.max_width.max(chunk.max_width);
        scan.wide += chunk.wide;
        if let (Some(acc), Some(t)) = (&mut scan.trace, chunk.trace) {
            acc.extend(t);
        }
    }
    Ok(scan)
}
