//! Finite-horizon convergence verdicts for `||u_n x|| -> 0` along `(a_n)` or
//! `(d_n)`, and the structural membership oracles.
//!
//! Verdicts are four-valued and never claim a limit, with one exception: a
//! point whose norms are certified to vanish from some index on (a rational
//! `p/q` with `q | a_k`, or an expansion with finite support) is reported as
//! exact.

use std::fmt;

use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use crate::density::{density_of_bits, DensityEstimate, DEFAULT_CHECKPOINTS};
use crate::error::{Error, Result};
use crate::scan::{default_eps, scan_norms, Along, NormScan, ScanConfig};
use crate::sequence::ArithSeq;
use crate::torus::{default_tol, DigitExpansion, DigitRule, DigitSource, SupportGrowth, TorusPoint};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Converges,
    SConvergesEmpirical,
    DivergesWitnessed,
    Inconclusive,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Converges => "converges",
            Verdict::SConvergesEmpirical => "s-converges-empirical",
            Verdict::DivergesWitnessed => "diverges-witnessed",
            Verdict::Inconclusive => "inconclusive",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VerdictKind {
    Classical,
    Statistical,
}

pub const DEFAULT_DELTA: f64 = 0.05;
pub const DEFAULT_WITNESS_THRESHOLD: f64 = 0.10;
/// Checkpoints (or checkpoint windows) used for trend decisions.
pub const TREND_POINTS: usize = 4;

#[derive(Debug, Clone)]
pub struct VerdictConfig {
    pub horizon: u64,
    pub eps: Vec<BigRational>,
    pub delta: f64,
    pub witness_threshold: f64,
    pub tol: BigRational,
    pub checkpoints: usize,
    pub parallel: bool,
    pub trace: bool,
}

impl VerdictConfig {
    pub fn new(horizon: u64) -> Self {
        VerdictConfig {
            horizon,
            eps: default_eps(),
            delta: DEFAULT_DELTA,
            witness_threshold: DEFAULT_WITNESS_THRESHOLD,
            tol: default_tol(),
            checkpoints: DEFAULT_CHECKPOINTS,
            parallel: true,
            trace: false,
        }
    }

    pub fn with_eps(mut self, eps: Vec<BigRational>) -> Self {
        self.eps = eps;
        self
    }

    pub fn with_delta(mut self, delta: f64) -> Self {
        self.delta = delta;
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::InvalidArgument(format!("delta {} is outside (0, 1)", self.delta)));
        }
        if !(self.witness_threshold > 0.0 && self.witness_threshold <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "witness threshold {} is outside (0, 1]",
                self.witness_threshold
            )));
        }
        if self.checkpoints < 2 {
            return Err(Error::InvalidArgument("at least 2 checkpoints are required".into()));
        }
        Ok(())
    }

    fn scan_config(&self) -> Result<ScanConfig> {
        let mut cfg = ScanConfig::new(self.horizon, self.eps.clone())?
            .with_tol(self.tol.clone())
            .with_trace(self.trace);
        cfg.windows = crate::density::checkpoint_grid(self.horizon, self.checkpoints);
        cfg.parallel = self.parallel;
        Ok(cfg)
    }
}

/// Exceedance figures for one epsilon: `certain` counts indices whose whole
/// enclosure is `>= eps`, `possible` those whose enclosure reaches `eps`.
#[derive(Debug, Clone, Serialize)]
pub struct EpsilonReport {
    pub eps: String,
    pub certain: DensityEstimate,
    pub possible: DensityEstimate,
    pub trends_down: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct Witness {
    pub eps: String,
    /// Density figures of the certified exceedance set.
    pub density: DensityEstimate,
    /// First members of the certified exceedance set.
    pub sample: Vec<u64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerdictReport {
    pub kind: VerdictKind,
    pub sequence: String,
    pub along: Along,
    pub point: String,
    pub horizon: u64,
    pub delta: f64,
    pub witness_threshold: f64,
    pub per_eps: Vec<EpsilonReport>,
    /// `(window end, upper bound of the norm over the window)`.
    pub window_sup: Vec<(u64, f64)>,
    pub max_width: f64,
    pub wide_enclosures: u64,
    pub zero_from: Option<u64>,
    pub certified_exact: bool,
    pub verdict: Verdict,
    pub witness: Option<Witness>,
    #[serde(skip)]
    pub trace: Option<Vec<(f64, f64)>>,
}

impl VerdictReport {
    /// Largest `possible` exceedance upper proxy over the grid.
    pub fn max_exceedance(&self) -> f64 {
        self.per_eps
            .iter()
            .map(|e| e.possible.upper_proxy)
            .fold(0.0, f64::max)
    }

    pub fn eps_report(&self, eps: &str) -> Option<&EpsilonReport> {
        self.per_eps.iter().find(|e| e.eps == eps)
    }
}

fn describe_point(x: &TorusPoint) -> String {
    x.describe()
}

fn eps_reports(scan: &NormScan, cfg: &VerdictConfig) -> Vec<EpsilonReport> {
    (0..scan.eps.len())
        .map(|e| {
            let (certain, possible) = scan.densities(e, cfg.checkpoints);
            EpsilonReport {
                eps: scan.eps[e].to_string(),
                trends_down: possible.trends_down(TREND_POINTS),
                certain,
                possible,
            }
        })
        .collect()
}

fn witness(scan: &NormScan, per_eps: &[EpsilonReport], e: usize) -> Witness {
    Witness {
        eps: per_eps[e].eps.clone(),
        density: per_eps[e].certain.clone(),
        sample: scan.certain_members(e, 32),
    }
}

fn assemble(
    kind: VerdictKind,
    seq: &ArithSeq,
    x: &TorusPoint,
    scan: &NormScan,
    cfg: &VerdictConfig,
) -> VerdictReport {
    let per_eps = eps_reports(scan, cfg);
    let exact = scan.zero_from.is_some_and(|z| z <= scan.horizon);
    let (verdict, witness) = match kind {
        VerdictKind::Classical => classical_decision(scan, &per_eps, exact),
        VerdictKind::Statistical => statistical_decision(scan, &per_eps, cfg, exact),
    };
    VerdictReport {
        kind,
        sequence: seq.spec().describe(),
        along: scan.along,
        point: describe_point(x),
        horizon: scan.horizon,
        delta: cfg.delta,
        witness_threshold: cfg.witness_threshold,
        window_sup: scan.windows.iter().copied().zip(scan.window_sup.iter().copied()).collect(),
        max_width: scan.max_width,
        wide_enclosures: scan.wide,
        zero_from: scan.zero_from,
        certified_exact: exact,
        verdict,
        witness,
        trace: scan.trace.clone(),
        per_eps,
    }
}

fn last<T>(v: &[T], n: usize) -> &[T] {
    &v[v.len().saturating_sub(n)..]
}

/// Converges: no tail index can reach the smallest epsilon and the window
/// suprema do not increase. Diverges-witnessed: some epsilon is certainly
/// exceeded in each of the last windows while the largest certified lower
/// bound does not decay.
fn classical_decision(scan: &NormScan, per_eps: &[EpsilonReport], exact: bool) -> (Verdict, Option<Witness>) {
    if exact {
        return (Verdict::Converges, None);
    }
    let sups = last(&scan.window_sup, TREND_POINTS);
    if scan.tail_possible == 0 && sups.windows(2).all(|w| w[1] <= w[0]) {
        return (Verdict::Converges, None);
    }
    let counts = last(&scan.window_certain, TREND_POINTS);
    let los = last(&scan.window_lo_sup, TREND_POINTS);
    let persistent = counts.iter().copied().min().unwrap_or(0) as usize;
    if persistent > 0 && los.last() >= los.first() {
        return (Verdict::DivergesWitnessed, Some(witness(scan, per_eps, persistent - 1)));
    }
    (Verdict::Inconclusive, None)
}

/// Density over the last checkpoint window `(N/2, N]`.
fn tail_density(est: &DensityEstimate) -> f64 {
    match last(&est.checkpoints, 2) {
        [a, b] if b.n > a.n => (b.count - a.count) as f64 / (b.n - a.n) as f64,
        _ => est.ratio,
    }
}

/// Diverges-witnessed: the certified exceedance set of some epsilon has upper
/// proxy at least the witness threshold and keeps half that density inside
/// the last checkpoint window. S-converges-empirical: every possible
/// exceedance set stays below `delta` and trends down.
fn statistical_decision(
    scan: &NormScan,
    per_eps: &[EpsilonReport],
    cfg: &VerdictConfig,
    exact: bool,
) -> (Verdict, Option<Witness>) {
    if exact {
        return (Verdict::SConvergesEmpirical, None);
    }
    if let Some(e) = per_eps.iter().rposition(|r| {
        r.certain.upper_proxy >= cfg.witness_threshold
            && tail_density(&r.certain) >= cfg.witness_threshold / 2.0
    }) {
        return (Verdict::DivergesWitnessed, Some(witness(scan, per_eps, e)));
    }
    if per_eps
        .iter()
        .all(|r| r.possible.upper_proxy < cfg.delta && r.trends_down)
    {
        return (Verdict::SConvergesEmpirical, None);
    }
    (Verdict::Inconclusive, None)
}

/// Scans once and returns the classical and statistical verdicts.
pub fn verdicts(
    seq: &ArithSeq,
    along: Along,
    x: &TorusPoint,
    cfg: &VerdictConfig,
) -> Result<(VerdictReport, VerdictReport)> {
    cfg.validate()?;
    let scan = scan_norms(seq, along, x, &cfg.scan_config()?)?;
    Ok((
        assemble(VerdictKind::Classical, seq, x, &scan, cfg),
        assemble(VerdictKind::Statistical, seq, x, &scan, cfg),
    ))
}

pub fn classical_verdict(seq: &ArithSeq, along: Along, x: &TorusPoint, cfg: &VerdictConfig) -> Result<VerdictReport> {
    cfg.validate()?;
    let scan = scan_norms(seq, along, x, &cfg.scan_config()?)?;
    Ok(assemble(VerdictKind::Classical, seq, x, &scan, cfg))
}

pub fn statistical_verdict(seq: &ArithSeq, along: Along, x: &TorusPoint, cfg: &VerdictConfig) -> Result<VerdictReport> {
    cfg.validate()?;
    let scan = scan_norms(seq, along, x, &cfg.scan_config()?)?;
    Ok(assemble(VerdictKind::Statistical, seq, x, &scan, cfg))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Basis {
    /// Decided from the digit rule itself.
    Certified,
    /// Decided from finite-horizon trends.
    Heuristic,
}

#[derive(Debug, Clone, Serialize)]
pub struct StructuralReport {
    pub holds: bool,
    pub basis: Basis,
    pub detail: String,
}

impl StructuralReport {
    fn new(holds: bool, basis: Basis, detail: impl Into<String>) -> Self {
        StructuralReport {
            holds,
            basis,
            detail: detail.into(),
        }
    }
}

/// Sufficient condition `c_n / b_n -> 0` for classical convergence along
/// `(a_n)`.
pub fn structural_classical_member(x: &DigitExpansion, horizon: u64) -> Result<StructuralReport> {
    let prefix = x.digits(horizon);
    if let Some(m) = prefix.zero_beyond {
        return Ok(StructuralReport::new(true, Basis::Certified, format!("digits vanish beyond {m}")));
    }
    if let DigitSource::Rule { digit, .. } = x.source() {
        match (digit, x.growth()) {
            (DigitRule::Constant(c), Some(SupportGrowth::Divergent)) => {
                return Ok(StructuralReport::new(
                    true,
                    Basis::Certified,
                    format!("constant digit {c} while b_n diverges along the support"),
                ));
            }
            (DigitRule::Max, _) => {
                return Ok(StructuralReport::new(
                    false,
                    Basis::Certified,
                    "maximal digits on an infinite support give c_n / b_n = 1 - 1/b_n",
                ));
            }
            _ => {}
        }
    }
    let ratios = x.base().ratios(horizon);
    let window_max = |from: u64, to: u64| -> f64 {
        (from..=to)
            .map(|n| prefix.digits[(n - 1) as usize] as f64 / ratios[(n - 1) as usize] as f64)
            .fold(0.0, f64::max)
    };
    let (head, tail) = (window_max(horizon / 4 + 1, horizon / 2), window_max(horizon / 2 + 1, horizon));
    let holds = tail < 0.125 && tail <= head;
    Ok(StructuralReport::new(
        holds,
        Basis::Heuristic,
        format!("max c_n / b_n is {head:.3e} on (N/4, N/2] and {tail:.3e} on (N/2, N]"),
    ))
}

/// Hypotheses of the statistical non-membership criterion along `(a_n)`:
/// `supp(x)` is b-bounded and `supp(x) \ supp^b(x)` has positive upper
/// density, with a stable trend.
pub fn structural_s_nonmember(x: &DigitExpansion, horizon: u64) -> Result<StructuralReport> {
    if horizon < 16 {
        return Err(Error::InvalidArgument("horizon must be at least 16".into()));
    }
    let prefix = x.digits(horizon);
    if let Some(m) = prefix.zero_beyond {
        return Ok(StructuralReport::new(false, Basis::Certified, format!("support is finite, inside [1, {m}]")));
    }
    let ratios = x.base().ratios(horizon);
    let (bound, basis) = match x.growth() {
        Some(SupportGrowth::Divergent) => {
            return Ok(StructuralReport::new(false, Basis::Certified, "b_n diverges along the support"));
        }
        Some(SupportGrowth::Bounded(m)) => (m, Basis::Certified),
        None => {
            let on_support = |from: u64, to: u64| {
                (from..=to)
                    .filter(|&n| prefix.digits[(n - 1) as usize] != 0)
                    .map(|n| ratios[(n - 1) as usize])
                    .max()
                    .unwrap_or(0)
            };
            let (head, tail) = (on_support(1, horizon / 2), on_support(horizon / 2 + 1, horizon));
            if tail > head {
                return Ok(StructuralReport::new(
                    false,
                    Basis::Heuristic,
                    format!("max b_n on the support grows from {head} to {tail}"),
                ));
            }
            (head, Basis::Heuristic)
        }
    };
    let bits: Vec<bool> = prefix
        .digits
        .iter()
        .zip(&ratios)
        .map(|(&c, &b)| c != 0 && c != b - 1)
        .collect();
    if let Some(n) = bits
        .iter()
        .zip(&ratios)
        .position(|(&member, &b)| member && b > bound)
    {
        return Ok(StructuralReport::new(
            false,
            Basis::Certified,
            format!("b_{} = {} exceeds the bound {bound}", n + 1, ratios[n]),
        ));
    }
    let est = density_of_bits(&bits, DEFAULT_CHECKPOINTS);
    let recent = last(&est.checkpoints, TREND_POINTS);
    let stable = recent.iter().all(|c| c.ratio >= est.upper_proxy / 4.0);
    let holds = est.upper_proxy > 0.0 && stable;
    Ok(StructuralReport::new(
        holds,
        basis,
        format!(
            "support bounded by {bound}; supp \\ supp^b has upper proxy {:.4} at N = {horizon}{}",
            est.upper_proxy,
            if stable { "" } else { " without a stable trend" }
        ),
    ))
}
