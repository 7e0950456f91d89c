//! One bundled report per named construction: sequence facts, density
//! figures, verdicts and pass/fail checks.

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::Zero;
use serde::Serialize;
use serde_json::{json, Value};

use crate::constructions::{
    cardinality_family, divergent_witness, equality_case, reverse_case, strict_inclusion_case, zeta,
    CardinalitySeq, SRule, BRACKET_MIN_RATIO,
};
use crate::density::{density_upto, scaled_union_density, DensityEstimate, IndexSet, DEFAULT_CHECKPOINTS};
use crate::error::{Error, Result};
use crate::membership::{structural_classical_member, structural_s_nonmember, verdicts, Verdict, VerdictConfig, VerdictReport};
use crate::scan::Along;
use crate::sequence::{ArithSeq, NamedRule, RatioSpec};
use crate::torus::{default_tol, frac_mul, EnclosureStatus, TorusPoint};

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct ReproReport {
    pub id: String,
    pub horizon: u64,
    pub facts: Value,
    pub densities: Vec<(String, DensityEstimate)>,
    pub verdicts: Vec<VerdictReport>,
    pub checks: Vec<Check>,
}

impl ReproReport {
    fn new(id: &str, horizon: u64) -> Self {
        ReproReport {
            id: id.to_string(),
            horizon,
            facts: Value::Null,
            densities: Vec::new(),
            verdicts: Vec::new(),
            checks: Vec::new(),
        }
    }

    fn check(&mut self, name: &str, passed: bool, detail: impl Into<String>) {
        self.checks.push(Check {
            name: name.to_string(),
            passed,
            detail: detail.into(),
        });
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| !c.passed).collect()
    }

    pub fn find(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    /// Runs both verdicts and records that classical convergence implies
    /// statistical convergence for this pair.
    fn verdict_pair(&mut self, label: &str, seq: &ArithSeq, along: Along, x: &TorusPoint, cfg: &VerdictConfig) -> Result<(Verdict, Verdict)> {
        let (c, s) = verdicts(seq, along, x, cfg)?;
        let pair = (c.verdict, s.verdict);
        self.check(
            &format!("classical-implies-statistical/{label}"),
            c.verdict != Verdict::Converges || s.verdict == Verdict::SConvergesEmpirical,
            format!("classical {}, statistical {}", c.verdict, s.verdict),
        );
        self.verdicts.push(c);
        self.verdicts.push(s);
        Ok(pair)
    }

    /// Inconclusive verdicts among the recorded reports.
    pub fn inconclusive(&self) -> usize {
        self.verdicts.iter().filter(|v| v.verdict == Verdict::Inconclusive).count()
    }
}

pub fn default_horizon(id: &str) -> u64 {
    match id {
        "zeta" => 1000,
        "equal" | "divergent" => 100_000,
        _ => 1_000_000,
    }
}

pub fn reproduce(id: &str, horizon: Option<u64>) -> Result<ReproReport> {
    let n = horizon.unwrap_or_else(|| default_horizon(id));
    if n < 16 {
        return Err(Error::InvalidArgument("horizon must be at least 16".into()));
    }
    match id {
        "zeta" => reproduce_zeta(n),
        "equal" => reproduce_equal(n),
        "strict" => reproduce_strict(n),
        "divergent" => reproduce_divergent(n),
        "reverse" => reproduce_reverse(n),
        "cardinality" => reproduce_cardinality(n),
        _ => Err(Error::Spec(format!("unknown construction {id:?}"))),
    }
}

fn reproduce_zeta(levels: u64) -> Result<ReproReport> {
    let mut rep = ReproReport::new("zeta", levels);
    let (seq, d) = zeta();
    let prefix: Vec<BigUint> = d.terms(1, 7);
    let expected: Vec<BigUint> = [1u32, 2, 4, 6, 12, 18, 24].iter().map(|&v| v.into()).collect();
    rep.check("prefix", prefix == expected, format!("{prefix:?}"));
    let mut bad = Vec::new();
    for k in 0..levels {
        let (nk, next, b) = (seq.level_index(k), seq.level_index(k + 1), seq.ratio(k + 1));
        if next - nk != b - 1 {
            bad.push(format!("gap at k = {k}"));
        }
        let ak = seq.value(k);
        for r in [1, (b - 1).div_ceil(2), b - 1] {
            if d.term(nk + r - 1) != &ak * r {
                bad.push(format!("d at k = {k}, r = {r}"));
            }
        }
    }
    rep.check("level-identities", bad.is_empty(), format!("k < {levels}: {} mismatches", bad.len()));
    rep.check("ratio-b5", seq.ratio(5) == 6, format!("b_5 = {}", seq.ratio(5)));
    rep.facts = json!({
        "prefix": prefix.iter().map(|v| v.to_string()).collect::<Vec<_>>(),
        "n_3": seq.level_index(3),
    });
    Ok(rep)
}

fn reproduce_equal(n: u64) -> Result<ReproReport> {
    let mut rep = ReproReport::new("equal", n);
    let case = equality_case();
    let est = scaled_union_density(&case.blocks, n, DEFAULT_CHECKPOINTS)?;
    rep.check("density-ratio", est.ratio >= 0.95, format!("|A ∩ [1, {n}]| / {n} = {:.5}", est.ratio));
    rep.check(
        "density-increasing",
        est.strictly_increasing(4),
        format!("last checkpoints {:?}", last_ratios(&est, 4)),
    );
    let members = case.blocks.members_upto(case.seq.level_index(1000));
    let consistent = (0..=1000u64).all(|k| members.get(k as usize) == Some(&case.seq.level_index(k)));
    rep.check("a_k = d_{n_k}", consistent, "n_k equals the k-th element of A for k <= 1000");
    let off_boundary = (1..=2000u64)
        .filter(|&i| (1..=20).all(|j| case.s(j) + 1 != i))
        .all(|i| case.seq.ratio(i) == 2);
    rep.check("ratio-off-boundary", off_boundary, "b_i = 2 away from s_j + 1, i <= 2000");
    rep.densities.push(("A".into(), est));
    Ok(rep)
}

fn reproduce_strict(n: u64) -> Result<ReproReport> {
    let mut rep = ReproReport::new("strict", n);
    let case = strict_inclusion_case();
    let x = TorusPoint::Expansion(case.x.clone());
    let cfg = VerdictConfig::new(n).with_eps(vec![BigRational::new(1.into(), 16.into())]);
    let (_, a) = rep.verdict_pair("a", &case.seq, Along::Arith, &x, &cfg)?;
    let (_, d) = rep.verdict_pair("d", &case.seq, Along::Derived, &x, &cfg)?;
    rep.check("a-side", a == Verdict::SConvergesEmpirical, format!("along a: {a}"));
    rep.check("d-side", d == Verdict::DivergesWitnessed, format!("along d: {d}"));
    let est = scaled_union_density(&case.blocks, n, DEFAULT_CHECKPOINTS)?;
    rep.check(
        "block-density",
        est.upper_proxy > 0.0 && est.lower_proxy < 1.0,
        format!("A has proxies [{:.4}, {:.4}]", est.lower_proxy, est.upper_proxy),
    );
    rep.densities.push(("A".into(), est));
    let digits_ok = case.x.support_upto(2000) == (1..).map(|j| case.s(j) + 1).take_while(|&v| v <= 2000).collect::<Vec<_>>();
    rep.check("witness-digits", digits_ok, "c = 1 exactly on {s_j + 1}");
    Ok(rep)
}

/// Certified brackets of `{d_i x}` over `B` for `j <= jmax` with large ratios,
/// and the sandwich `r/b <= r {a_{s_j} x} <= 2r/b`.
pub struct BracketOutcome {
    pub enclosures: usize,
    pub outside: Vec<u64>,
    pub max_width: BigRational,
    pub inconclusive: usize,
    pub sandwich_checked: usize,
    pub sandwich_failures: Vec<(u64, u64)>,
}

pub fn bracket_check(jmax: u64) -> Result<BracketOutcome> {
    let w = divergent_witness(RatioSpec::named(NamedRule::Zeta), SRule::Even)?;
    let x = TorusPoint::Expansion(w.x.clone());
    let tol = default_tol();
    let (lo_bound, hi_bound) = (BigRational::new(1.into(), 12.into()), BigRational::new(2.into(), 3.into()));
    let mut out = BracketOutcome {
        enclosures: 0,
        outside: Vec::new(),
        max_width: BigRational::zero(),
        inconclusive: 0,
        sandwich_checked: 0,
        sandwich_failures: Vec::new(),
    };
    for j in 1..=jmax {
        let k = w.s_rule.s(j);
        let b = w.seq.ratio(k + 1);
        if b < BRACKET_MIN_RATIO {
            continue;
        }
        let nk = w.seq.level_index(k);
        let ak = w.seq.value(k);
        for i in nk + b / 6..=nk + b / 3 {
            let r = i - nk + 1;
            let e = frac_mul(&x, &(&ak * r), &tol)?;
            out.enclosures += 1;
            if e.status == EnclosureStatus::Inconclusive {
                out.inconclusive += 1;
            }
            if e.width() > out.max_width {
                out.max_width = e.width();
            }
            if e.lo < lo_bound || e.hi > hi_bound {
                out.outside.push(i);
            }
        }
        let y = frac_mul(&x, &ak, &tol)?;
        let b_q = BigRational::from_integer(b.into());
        for r in 1..b {
            let r_q = BigRational::from_integer(r.into());
            out.sandwich_checked += 1;
            if &r_q * &y.lo < &r_q / &b_q || &r_q * &y.hi > BigRational::from_integer(2.into()) * &r_q / &b_q {
                out.sandwich_failures.push((j, r));
            }
        }
    }
    Ok(out)
}

fn reproduce_divergent(n: u64) -> Result<ReproReport> {
    let mut rep = ReproReport::new("divergent", n);
    let bracket = bracket_check(50)?;
    rep.check(
        "bracket",
        bracket.outside.is_empty() && bracket.inconclusive == 0 && bracket.max_width <= default_tol(),
        format!(
            "{} enclosures, {} outside [1/12, 2/3], max width {}",
            bracket.enclosures,
            bracket.outside.len(),
            bracket.max_width
        ),
    );
    rep.check(
        "sandwich",
        bracket.sandwich_failures.is_empty(),
        format!("{} pairs (j, r), {} failures", bracket.sandwich_checked, bracket.sandwich_failures.len()),
    );
    let w = divergent_witness(RatioSpec::named(NamedRule::Zeta), SRule::Even)?;
    let b_est = scaled_union_density(&w.bracket_set, n, DEFAULT_CHECKPOINTS)?;
    let parent = scaled_union_density(&w.parent_set, n, DEFAULT_CHECKPOINTS)?;
    rep.check("B-density", b_est.upper_proxy > 0.05, format!("upper proxy {:.4}", b_est.upper_proxy));
    rep.check(
        "B-vs-parent",
        b_est.upper_proxy >= parent.upper_proxy / 6.0 - 0.01,
        format!("{:.4} against parent {:.4}", b_est.upper_proxy, parent.upper_proxy),
    );
    let nested = w.bracket_set.members_upto(n).iter().all(|&i| w.parent_set.contains(i));
    rep.check("B-inside-parent", nested, "every member of B lies in a parent block");
    rep.densities.push(("B".into(), b_est));
    rep.densities.push(("parent".into(), parent));
    let structural = structural_classical_member(&w.x, n)?;
    rep.check("structural-classical", structural.holds, structural.detail);
    let x = TorusPoint::Expansion(w.x.clone());
    let cfg = VerdictConfig::new(n);
    let (a_classical, _) = rep.verdict_pair("a", &w.seq, Along::Arith, &x, &cfg)?;
    let (_, d_stat) = rep.verdict_pair("d", &w.seq, Along::Derived, &x, &cfg)?;
    rep.check("a-classical", a_classical == Verdict::Converges, format!("along a: {a_classical}"));
    rep.check("d-statistical", d_stat == Verdict::DivergesWitnessed, format!("along d: {d_stat}"));
    Ok(rep)
}

fn reproduce_reverse(n: u64) -> Result<ReproReport> {
    let mut rep = ReproReport::new("reverse", n);
    let case = reverse_case();
    rep.check(
        "s-divisible-by-3",
        (1..=100).all(|j| case.s(j).is_multiple_of(3) && case.s(j + 1) - case.s(j) >= j),
        "3 | s_n and s_{n+1} - s_n >= n for n <= 100",
    );
    let bounded = case.blocks.members_upto(n.min(1_000_000)).iter().all(|&i| case.seq.ratio(i) == 3);
    rep.check("b-equals-3-on-B", bounded, "b_i = 3 for every i in B");
    let support_b = case.x.support_b_upto(n);
    let plain: Vec<u64> = case.x.support_upto(n).into_iter().filter(|i| support_b.binary_search(i).is_err()).collect();
    let plain_est = density_upto(&IndexSet::explicit(plain), n, DEFAULT_CHECKPOINTS)?;
    rep.check(
        "supp-minus-supp-b",
        plain_est.lower_proxy > 0.0,
        format!("supp \\ supp^b has proxies [{:.4}, {:.4}]", plain_est.lower_proxy, plain_est.upper_proxy),
    );
    rep.densities.push(("supp-minus-supp-b".into(), plain_est));
    let structural = structural_s_nonmember(&case.x, n.min(1_000_000))?;
    rep.check("structural-s-nonmember", structural.holds, structural.detail);
    let x = TorusPoint::Expansion(case.x.clone());
    let tol = default_tol();
    let mut decay_failures = Vec::new();
    for j in 1..=30u64 {
        let k = case.s(j);
        let b = case.seq.ratio(k + 1);
        let ak = case.seq.value(k);
        let gap = case.s(j + 1) - k;
        let scale = BigRational::from_integer(BigUint::from(2u32).pow((gap / 3) as u32).into());
        for r in [1, b / 2, b - 1] {
            let e = frac_mul(&x, &(&ak * r), &tol)?;
            let bound = BigRational::from_integer((2 * r).into()) / &scale;
            if e.hi > bound {
                decay_failures.push((j, r));
            }
        }
    }
    rep.check(
        "level-decay",
        decay_failures.is_empty(),
        format!("{{r a_(s_j) x}} <= 2r / 2^((s_(j+1) - s_j)/3) for j <= 30: {} failures", decay_failures.len()),
    );
    let cfg = VerdictConfig::new(n);
    let (_, d) = rep.verdict_pair("d", &case.seq, Along::Derived, &x, &cfg)?;
    let max_exceedance = rep.verdicts.last().map_or(1.0, |v| v.max_exceedance());
    rep.check("d-statistical", d == Verdict::SConvergesEmpirical, format!("along d: {d}"));
    rep.check("d-exceedance", max_exceedance < 0.05, format!("max exceedance upper proxy {max_exceedance:.5}"));
    let b_est = scaled_union_density(&case.blocks, n, DEFAULT_CHECKPOINTS)?;
    rep.densities.push(("B".into(), b_est));
    Ok(rep)
}

/// `ξ` bit strings of the given length, in counting order.
pub fn xi_prefixes(len: usize) -> Vec<Vec<bool>> {
    (0..1u32 << len)
        .map(|v| (0..len).map(|bit| v >> (len - 1 - bit) & 1 == 1).collect())
        .collect()
}

pub const CARDINALITY_M: u64 = 6;

fn reproduce_cardinality(n: u64) -> Result<ReproReport> {
    let mut rep = ReproReport::new("cardinality", n);
    let (seq, _) = zeta();
    let s = CardinalitySeq::new(seq.clone());
    let mut recursion_ok = true;
    for j in 1..=20u64 {
        let (cur, next) = (s.s(j), s.s(j + 1));
        let target = j as u128 * s.weight(j);
        let minimal = next - 1 <= cur + j + 1 || (seq.level_index(next - 1) as u128) < target;
        recursion_ok &= next > cur + j + 1 && seq.level_index(next) as u128 >= target && minimal;
    }
    rep.check("recursion", recursion_ok, "s_{j+1} is the least r > s_j + j + 1 with n_r >= j T_j, j <= 20");
    let a = s.exceptional_set(CARDINALITY_M)?;
    let a_est = density_upto(&a, n, DEFAULT_CHECKPOINTS)?;
    rep.check(
        "exceptional-density",
        a_est.upper_proxy < 0.05,
        format!("m = {CARDINALITY_M}: upper proxy {:.5}", a_est.upper_proxy),
    );
    rep.densities.push((format!("A(m={CARDINALITY_M})"), a_est));
    let mut supports = Vec::new();
    let cfg = VerdictConfig::new(n);
    let mut all_converge = true;
    for xi in xi_prefixes(4) {
        let w = cardinality_family(seq.clone(), &xi)?;
        supports.push(w.prefix_support());
        let label: String = xi.iter().map(|&b| if b { '1' } else { '0' }).collect();
        let (_, stat) = rep.verdict_pair(&format!("d/{label}"), &seq, Along::Derived, &TorusPoint::Expansion(w.x), &cfg)?;
        all_converge &= stat == Verdict::SConvergesEmpirical;
    }
    let mut sorted = supports.clone();
    sorted.sort();
    sorted.dedup();
    rep.check("distinct-supports", sorted.len() == supports.len(), format!("{} distinct of {}", sorted.len(), supports.len()));
    rep.check("d-statistical", all_converge, "every x^xi s-converges along d");
    rep.facts = json!({ "s": (1..=12).map(|j| s.s(j)).collect::<Vec<_>>(), "supports": supports });
    Ok(rep)
}

fn last_ratios(est: &DensityEstimate, k: usize) -> Vec<f64> {
    let c = &est.checkpoints;
    c[c.len().saturating_sub(k)..].iter().map(|c| c.ratio).collect()
}
