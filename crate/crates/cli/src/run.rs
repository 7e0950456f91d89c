use std::fs;
use std::ops::RangeInclusive;

use anyhow::{anyhow, bail, Context, Result};
use num_bigint::BigUint;
use num_rational::BigRational;
use serde_json::{json, Value};

use statchar::constructions::{
    divergent_witness, equality_case, hypothesis_check, named_witness, resolve_point, reverse_case,
    strict_inclusion_case, CardinalitySeq, SRule,
};
use statchar::density::{density_upto, scaled_union_density, DensityEstimate, IndexSet};
use statchar::scan::default_eps;
use statchar::torus::{default_tol, DigitExpansion, NormEnclosure, PointSpec, Rational01, TorusPoint};
use statchar::{
    evaluate, frac_mul, norm, reproduce, scan_norms, verdicts, Along, ArithSeq, DerivedSeq,
    NamedRule, RatioSpec, ScanConfig, Verdict, VerdictConfig, VerdictReport,
};

use crate::args::*;
use crate::report::{Output, RunConfig, Status, Table};

const EXACT_BITS: u64 = 256;

fn read_inline_or_file(text: &str) -> Result<String> {
    let trimmed = text.trim_start();
    if trimmed.starts_with('{') || trimmed.starts_with('[') {
        Ok(text.to_string())
    } else {
        fs::read_to_string(text).with_context(|| format!("reading {text}"))
    }
}

fn sequence(src: &SeqSource) -> Result<(ArithSeq, RatioSpec)> {
    let spec = if let Some(text) = &src.spec {
        RatioSpec::from_json(&read_inline_or_file(text)?)?
    } else if let Some(id) = &src.named {
        RatioSpec::named(NamedRule::from_id(id).ok_or_else(|| anyhow!("unknown named rule {id:?}"))?)
    } else if let Some(b) = src.constant {
        RatioSpec::constant(b)
    } else {
        RatioSpec::named(NamedRule::Zeta)
    };
    Ok((ArithSeq::new(spec.clone())?, spec))
}

fn point(seq_src: &SeqSource, src: &PointSource, cfg: &mut RunConfig) -> Result<(ArithSeq, TorusPoint)> {
    if let Some(id) = &src.witness {
        let (seq, x) = named_witness(id)?;
        cfg.sequence = Some(serde_json::to_value(seq.spec())?);
        cfg.point = Some(format!("witness:{id}"));
        return Ok((seq, TorusPoint::Expansion(x)));
    }
    let (seq, spec) = sequence(seq_src)?;
    cfg.sequence = Some(serde_json::to_value(&spec)?);
    let text = src.point.as_deref().ok_or_else(|| anyhow!("a point is required: --point or --witness"))?;
    cfg.point = Some(text.to_string());
    let spec: PointSpec = if text.contains('/') && !text.trim_start().starts_with('{') && text.parse::<Rational01>().is_ok() {
        PointSpec::Rational(text.to_string())
    } else {
        serde_json::from_str(&read_inline_or_file(text)?).context("parsing point spec")?
    };
    let x = resolve_point(&seq, &spec)?;
    Ok((seq, x))
}

/// `p/q` or `2^-k`.
fn fraction(text: &str) -> Result<BigRational> {
    if let Some(k) = text.strip_prefix("2^-") {
        let k: u32 = k.parse().context("exponent")?;
        return Ok(BigRational::new(1.into(), (BigUint::from(1u32) << k).into()));
    }
    Ok(text.parse::<Rational01>()?.to_big_rational())
}

fn eps_grid(args: &ScanArgs, cfg: &mut RunConfig) -> Result<Vec<BigRational>> {
    let eps = if args.eps.is_empty() {
        default_eps()
    } else {
        args.eps.iter().map(|e| fraction(e)).collect::<Result<Vec<_>>>()?
    };
    cfg.eps = eps.iter().map(|e| e.to_string()).collect();
    Ok(eps)
}

fn tol(text: &Option<String>, cfg: &mut RunConfig) -> Result<BigRational> {
    let t = match text {
        Some(t) => fraction(t)?,
        None => default_tol(),
    };
    cfg.tol = Some(t.to_string());
    Ok(t)
}

fn range(text: &str) -> Result<RangeInclusive<u64>> {
    let (lo, hi) = text
        .split_once("..=")
        .or_else(|| text.split_once(".."))
        .ok_or_else(|| anyhow!("range {text:?} is not of the form lo..hi"))?;
    let (lo, hi): (u64, u64) = (lo.trim().parse()?, hi.trim().parse()?);
    if lo > hi {
        bail!("empty range {text:?}");
    }
    Ok(lo..=hi)
}

fn alongs(a: AlongArg) -> Vec<Along> {
    match a {
        AlongArg::A => vec![Along::Arith],
        AlongArg::D => vec![Along::Derived],
        AlongArg::Both => vec![Along::Arith, Along::Derived],
    }
}

/// Exact digits while short, `log2` always.
fn magnitude(v: &BigUint) -> (Option<String>, f64) {
    let shift = v.bits().saturating_sub(64);
    let top = (v >> shift).to_u64_digits().first().copied().unwrap_or(0);
    let log2 = (top as f64).log2() + shift as f64;
    ((v.bits() <= EXACT_BITS).then(|| v.to_string()), log2)
}

fn magnitude_json(v: &BigUint) -> Value {
    match magnitude(v) {
        (Some(exact), _) => json!(exact),
        (None, log2) => json!(format!("2^{log2:.3}")),
    }
}

pub fn seq(args: &SeqArgs, cfg: &mut RunConfig) -> Result<Output> {
    let (seq, spec) = sequence(&args.source)?;
    cfg.sequence = Some(serde_json::to_value(&spec)?);
    let d = DerivedSeq::new(seq.clone());
    let mut table = Table::new(&["table", "index", "k", "r", "b", "value", "log2"]);
    let mut text = Vec::new();
    let mut result = serde_json::Map::new();
    let default_a = args.a_range.is_none() && args.d_range.is_none() && args.decompose.is_none();
    if let Some(r) = args.a_range.as_deref().or(default_a.then_some("0..10")) {
        let r = range(r)?;
        seq.validate_upto(*r.end())?;
        let mut a = seq.value(*r.start());
        let mut rows = Vec::new();
        let mut values = Vec::new();
        for n in r.clone() {
            if n > *r.start() {
                a *= seq.ratio(n);
            }
            let b = (n >= 1).then(|| seq.ratio(n));
            let (exact, log2) = magnitude(&a);
            table.push(vec![
                "a".into(),
                n.to_string(),
                String::new(),
                String::new(),
                b.map(|b| b.to_string()).unwrap_or_default(),
                exact.clone().unwrap_or_default(),
                format!("{log2:.6}"),
            ]);
            values.push(exact.clone().unwrap_or_else(|| format!("2^{log2:.3}")));
            rows.push(json!({ "n": n, "b": b, "a": magnitude_json(&a) }));
        }
        text.push(values.join(" "));
        result.insert("a".into(), rows.into());
    }
    if let Some(r) = &args.d_range {
        let r = range(r)?;
        if *r.start() == 0 {
            bail!("derived indices start at 1");
        }
        let mut level = None;
        let mut rows = Vec::new();
        let mut values = Vec::new();
        for i in r {
            let (k, rr) = d.decompose(i);
            if level.as_ref().map(|(lk, _)| *lk) != Some(k) {
                level = Some((k, seq.value(k)));
            }
            let v = &level.as_ref().unwrap().1 * rr;
            let (exact, log2) = magnitude(&v);
            table.push(vec![
                "d".into(),
                i.to_string(),
                k.to_string(),
                rr.to_string(),
                seq.ratio(k + 1).to_string(),
                exact.clone().unwrap_or_default(),
                format!("{log2:.6}"),
            ]);
            values.push(exact.unwrap_or_else(|| format!("2^{log2:.3}")));
            rows.push(json!({ "i": i, "k": k, "r": rr, "d": magnitude_json(&v) }));
        }
        text.push(values.join(" "));
        result.insert("d".into(), rows.into());
    }
    if let Some(i) = args.decompose {
        if i == 0 {
            bail!("derived indices start at 1");
        }
        let (k, r) = d.decompose(i);
        text.push(format!("k={k} r={r}"));
        table.push(vec!["decompose".into(), i.to_string(), k.to_string(), r.to_string(), String::new(), String::new(), String::new()]);
        result.insert("decompose".into(), json!({ "i": i, "k": k, "r": r }));
    }
    Ok(Output::new(Value::Object(result), table)?.with_text(text.join("\n") + "\n"))
}

fn expansion_of(seq: &ArithSeq, x: &TorusPoint) -> Result<DigitExpansion> {
    Ok(match x {
        TorusPoint::Rational(r) => DigitExpansion::rational(seq.clone(), r.numer().clone(), r.denom().clone())?,
        TorusPoint::Expansion(e) => e.clone(),
    })
}

fn enclosure_json(e: &NormEnclosure) -> Value {
    json!({
        "lo": e.lo.to_string(),
        "hi": e.hi.to_string(),
        "lo_f64": e.lo_f64(),
        "hi_f64": e.hi_f64(),
        "status": e.status,
    })
}

pub fn expand(args: &ExpandArgs, cfg: &mut RunConfig) -> Result<Output> {
    if args.depth == 0 {
        bail!("--depth must be at least 1");
    }
    let (seq, x) = point(&args.source, &args.point, cfg)?;
    let exp = expansion_of(&seq, &x)?;
    let canonicity = exp.validate_upto(args.depth)?;
    let prefix = exp.digits(args.depth);
    let ratios = seq.ratios(args.depth);
    let enclosure = evaluate(&exp, args.depth)?;
    let mut table = Table::new(&["n", "b", "c"]);
    for (idx, (&c, &b)) in prefix.digits.iter().zip(&ratios).enumerate() {
        table.push(vec![(idx + 1).to_string(), b.to_string(), c.to_string()]);
    }
    let result = json!({
        "point": x.describe(),
        "depth": args.depth,
        "digits": prefix.digits,
        "zero_beyond": prefix.zero_beyond,
        "canonicity": canonicity,
        "enclosure": enclosure_json(&enclosure),
    });
    Output::new(result, table)
}

pub fn norm_cmd(args: &NormArgs, cfg: &mut RunConfig) -> Result<Output> {
    let (seq, x) = point(&args.source, &args.point, cfg)?;
    let tol = tol(&args.tol, cfg)?;
    let (m, label) = match (&args.multiplier, args.index) {
        (Some(m), _) => (m.parse::<BigUint>().context("multiplier")?, json!({ "multiplier": m })),
        (None, Some(i)) => {
            let (m, along) = match args.along {
                AlongArg::A => (seq.value(i), "a"),
                AlongArg::D => {
                    if i == 0 {
                        bail!("derived indices start at 1");
                    }
                    (DerivedSeq::new(seq.clone()).term(i), "d")
                }
                AlongArg::Both => bail!("--along must be a or d for norm"),
            };
            (m, json!({ "index": i, "along": along }))
        }
        (None, None) => bail!("--index or --multiplier is required"),
    };
    let frac = frac_mul(&x, &m, &tol)?;
    let nrm = norm(&x, &m, &tol)?;
    let mut table = Table::new(&["quantity", "lo", "hi", "lo_f64", "hi_f64"]);
    for (name, e) in [("frac", &frac), ("norm", &nrm)] {
        table.push(vec![name.into(), e.lo.to_string(), e.hi.to_string(), e.lo_f64().to_string(), e.hi_f64().to_string()]);
    }
    let result = json!({
        "point": x.describe(),
        "u": label,
        "m": magnitude_json(&m),
        "frac": enclosure_json(&frac),
        "norm": enclosure_json(&nrm),
    });
    let status = if nrm.is_conclusive() { Status::Ok } else { Status::Inconclusive };
    Ok(Output::new(result, table)?.with_status(status))
}

fn verdict_rows(table: &mut Table, r: &VerdictReport) {
    for e in &r.per_eps {
        table.push(vec![
            serde_json::to_value(r.kind).unwrap().as_str().unwrap_or_default().to_string(),
            r.along.id().to_string(),
            r.verdict.to_string(),
            e.eps.clone(),
            e.certain.count.to_string(),
            e.certain.upper_proxy.to_string(),
            e.possible.count.to_string(),
            e.possible.upper_proxy.to_string(),
            e.trends_down.to_string(),
        ]);
    }
}

pub fn verdict(args: &VerdictArgs, cfg: &mut RunConfig) -> Result<Output> {
    let (seq, x) = point(&args.source, &args.point, cfg)?;
    let mut vc = VerdictConfig::new(args.scan.horizon).with_eps(eps_grid(&args.scan, cfg)?);
    if let Some(delta) = args.delta {
        vc = vc.with_delta(delta);
    }
    vc.tol = tol(&args.scan.tol, cfg)?;
    vc.trace = args.trace;
    cfg.horizon = Some(args.scan.horizon);
    cfg.delta = Some(vc.delta);
    let mut reports = Vec::new();
    for along in alongs(args.along) {
        let (c, s) = verdicts(&seq, along, &x, &vc)?;
        match args.kind {
            KindArg::Classical => reports.push(c),
            KindArg::Statistical => reports.push(s),
            KindArg::Both => reports.extend([c, s]),
        }
    }
    let status = if reports.iter().any(|r| r.verdict == Verdict::Inconclusive) {
        Status::Inconclusive
    } else {
        Status::Ok
    };
    let table = if args.trace {
        let mut t = Table::new(&["along", "i", "lo", "hi"]);
        let mut seen = Vec::new();
        for r in &reports {
            if seen.contains(&r.along) {
                continue;
            }
            seen.push(r.along);
            for (idx, (lo, hi)) in r.trace.iter().flatten().enumerate() {
                t.push(vec![r.along.id().into(), (idx + 1).to_string(), lo.to_string(), hi.to_string()]);
            }
        }
        t
    } else {
        let mut t = Table::new(&[
            "kind",
            "along",
            "verdict",
            "eps",
            "certain_count",
            "certain_upper_proxy",
            "possible_count",
            "possible_upper_proxy",
            "trends_down",
        ]);
        for r in &reports {
            verdict_rows(&mut t, r);
        }
        t
    };
    let text: String = reports
        .iter()
        .map(|r| format!("{} along {}: {}\n", serde_json::to_value(r.kind).unwrap().as_str().unwrap_or_default(), r.along.id(), r.verdict))
        .collect();
    Ok(Output::new(json!({ "reports": reports }), table)?.with_text(text).with_status(status))
}

fn named_set(name: &str, seq: &ArithSeq, horizon: u64) -> Result<IndexSet> {
    let (name, param) = match name.split_once(':') {
        Some((n, p)) => (n, Some(p)),
        None => (name, None),
    };
    Ok(match name {
        "levels" => IndexSet::explicit(seq.level_indices(seq.level_of(horizon.max(1)))),
        "equal-A" => equality_case().blocks,
        "strict-A" => strict_inclusion_case().blocks,
        "divergent-B" => divergent_witness(RatioSpec::named(NamedRule::Zeta), SRule::Even)?.bracket_set,
        "divergent-parent" => divergent_witness(RatioSpec::named(NamedRule::Zeta), SRule::Even)?.parent_set,
        "reverse-B" => reverse_case().blocks,
        "reverse-lacunary" => reverse_case().lacunary,
        "cardinality-A" => {
            let m = param.map(str::parse).transpose().context("m")?.unwrap_or(6);
            CardinalitySeq::new(seq.clone()).exceptional_set(m)?
        }
        _ => bail!("unknown set {name:?}"),
    })
}

fn trace_rows(table: &mut Table, label: &str, est: &DensityEstimate) {
    for c in &est.checkpoints {
        table.push(vec![label.to_string(), c.n.to_string(), c.count.to_string(), c.ratio.to_string()]);
    }
}

pub fn density(args: &DensityArgs, cfg: &mut RunConfig) -> Result<Output> {
    let horizon = args.scan.horizon;
    cfg.horizon = Some(horizon);
    let mut table = Table::new(&["set", "n", "count", "ratio"]);
    if let Some(name) = &args.set {
        let (seq, spec) = sequence(&args.source)?;
        cfg.sequence = Some(serde_json::to_value(&spec)?);
        let set = named_set(name, &seq, horizon)?;
        let est = match set {
            IndexSet::IntervalUnion(_) => scaled_union_density(&set, horizon, args.checkpoints)?,
            _ => density_upto(&set, horizon, args.checkpoints)?,
        };
        trace_rows(&mut table, name, &est);
        return Output::new(json!({ "set": name, "estimate": est }), table);
    }
    let (seq, x) = point(&args.source, &args.point, cfg)?;
    let mut scfg = ScanConfig::new(horizon, eps_grid(&args.scan, cfg)?)?;
    scfg = scfg.with_tol(tol(&args.scan.tol, cfg)?);
    let mut sets = Vec::new();
    for along in alongs(args.along) {
        let scan = scan_norms(&seq, along, &x, &scfg)?;
        for (e, eps) in scfg.eps.iter().enumerate() {
            let (certain, possible) = scan.densities(e, args.checkpoints);
            trace_rows(&mut table, &format!("{}:{eps}:certain", along.id()), &certain);
            trace_rows(&mut table, &format!("{}:{eps}:possible", along.id()), &possible);
            sets.push(json!({ "along": along, "eps": eps.to_string(), "certain": certain, "possible": possible }));
        }
    }
    Output::new(json!({ "point": x.describe(), "exceedance": sets }), table)
}

pub fn hypothesis(args: &HypothesisArgs, cfg: &mut RunConfig) -> Result<Output> {
    let (seq, spec) = sequence(&args.source)?;
    cfg.sequence = Some(serde_json::to_value(&spec)?);
    cfg.horizon = Some(args.horizon);
    let rep = hypothesis_check(&seq, &args.m, args.horizon)?;
    let mut table = Table::new(&["m", "n", "ratio"]);
    for row in &rep.rows {
        for (n, v) in &row.checkpoints {
            table.push(vec![row.m.to_string(), n.to_string(), v.to_string()]);
        }
    }
    let status = if rep.holds { Status::Ok } else { Status::CheckFailure };
    Ok(Output::new(&rep, table)?.with_status(status))
}

pub fn reproduce_cmd(args: &ReproduceArgs, cfg: &mut RunConfig) -> Result<Output> {
    let rep = reproduce(&args.id, args.horizon)?;
    cfg.horizon = Some(rep.horizon);
    let mut table = Table::new(&["check", "passed", "detail"]);
    let mut text = String::new();
    for c in &rep.checks {
        table.push(vec![c.name.clone(), c.passed.to_string(), c.detail.clone()]);
        text.push_str(&format!("{} {}: {}\n", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail));
    }
    let status = if rep.passed() { Status::Ok } else { Status::CheckFailure };
    Ok(Output::new(&rep, table)?.with_text(text).with_status(status))
}
