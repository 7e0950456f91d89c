//! Acceptance criteria, one line each. Run with `cargo test --test acceptance`.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use statchar::constructions::{cardinality_family, zeta, CardinalitySeq};
use statchar::reproduce::{bracket_check, xi_prefixes, CARDINALITY_M};
use statchar::scan::default_eps;
use statchar::torus::default_tol;
use statchar::{
    canonical_expansion, evaluate, reproduce, scan_norms, verdicts, Along, ArithSeq, DerivedSeq,
    DigitExpansion, RatioSpec, ReproReport, ScanConfig, TorusPoint, Verdict, VerdictConfig,
    VerdictReport,
};

struct Outcome {
    passed: bool,
    detail: String,
}

impl Outcome {
    fn new(passed: bool, detail: impl Into<String>) -> Self {
        Outcome {
            passed,
            detail: detail.into(),
        }
    }

    fn from_report(rep: &ReproReport, names: &[&str], extra: String) -> Self {
        let mut passed = true;
        let mut parts = Vec::new();
        for name in names {
            match rep.find(name) {
                Some(c) => {
                    passed &= c.passed;
                    parts.push(format!("{name}: {}", c.detail));
                }
                None => {
                    passed = false;
                    parts.push(format!("{name}: missing"));
                }
            }
        }
        if !extra.is_empty() {
            parts.push(extra);
        }
        Outcome::new(passed, parts.join("; "))
    }
}

fn secs(d: Duration) -> String {
    format!("{:.2}s", d.as_secs_f64())
}

fn factorials(n: usize) -> Vec<BigUint> {
    let mut out = vec![BigUint::one()];
    for i in 1..=n {
        let next = &out[i - 1] * (i as u64 + 1);
        out.push(next);
    }
    out
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let rep = reproduce("zeta", Some(1000)).expect("zeta report");
    let elapsed = start.elapsed();
    let (seq, _) = zeta();
    let fact = factorials(30);
    let values_ok = (0..=30u64).all(|k| seq.value(k) == fact[k as usize]);
    let mut out = Outcome::from_report(&rep, &["prefix", "level-identities"], format!("a_k = (k+1)! for k <= 30: {values_ok}; {}", secs(elapsed)));
    out.passed &= values_ok && elapsed < Duration::from_secs(1);
    out
}

/// Every `r a_k` for levels `k <= levels`, sorted.
fn brute_force_terms(ratios: &[u64], levels: usize) -> Vec<(BigUint, u64, u64)> {
    let mut all = Vec::new();
    let mut a = BigUint::one();
    for (k, &b) in ratios.iter().enumerate().take(levels + 1) {
        for r in 1..b {
            all.push((&a * r, k as u64, r));
        }
        a *= b;
    }
    all.sort();
    all
}

fn criterion_2() -> Outcome {
    const TERMS: usize = 10_000;
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut mismatches = 0usize;
    for _ in 0..50 {
        let prefix: Vec<u64> = (0..TERMS).map(|_| rng.gen_range(2..=10)).collect();
        let spec = RatioSpec::Table {
            prefix: prefix.clone(),
            tail: Box::new(RatioSpec::constant(rng.gen_range(2..=10))),
        };
        let seq = ArithSeq::new(spec).expect("valid spec");
        let d = DerivedSeq::new(seq.clone());
        // ratios[k] = b_{k+1}; enough levels for TERMS terms plus two more.
        let mut levels = 0;
        let mut count = 0;
        while count < TERMS {
            count += prefix[levels] as usize - 1;
            levels += 1;
        }
        let oracle = brute_force_terms(&prefix, levels + 1);
        for (idx, (_, k, r)) in oracle.iter().take(TERMS).enumerate() {
            if d.decompose(idx as u64 + 1) != (*k, *r) {
                mismatches += 1;
            }
        }
        for _ in 0..20 {
            let idx = rng.gen_range(0..TERMS);
            if d.term(idx as u64 + 1) != oracle[idx].0 {
                mismatches += 1;
            }
        }
    }
    let elapsed = start.elapsed();
    Outcome::new(
        mismatches == 0 && elapsed < Duration::from_secs(30),
        format!("50 specs x {TERMS} terms, {mismatches} mismatches, {}", secs(elapsed)),
    )
}

fn smooth_denominator(rng: &mut ChaCha8Rng) -> u64 {
    const PRIMES: [u64; 10] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29];
    let mut q = 1u64;
    loop {
        let p = PRIMES[rng.gen_range(0..PRIMES.len())];
        if q * p > 1_000_000 {
            return q.max(2);
        }
        q *= p;
        if rng.gen_bool(0.2) {
            return q.max(2);
        }
    }
}

fn criterion_3() -> Outcome {
    const HORIZON: u64 = 60;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (seq, _) = zeta();
    let fact = factorials(HORIZON as usize);
    let mut failures = Vec::new();
    let mut exact = 0;
    for sample in 0..1000 {
        let q = if sample % 4 == 0 { smooth_denominator(&mut rng) } else { rng.gen_range(1..=1_000_000u64) };
        let p = rng.gen_range(0..q);
        let x = BigRational::new(p.into(), q.into());
        let g = canonical_expansion(&x, &seq, HORIZON).expect("expansion");
        // x_k = num / a_k, compared through integers scaled by q a_k.
        let mut num = BigUint::zero();
        for (idx, &c) in g.digits.iter().enumerate() {
            let b = idx as u64 + 2;
            if c > b - 1 {
                failures.push(format!("{p}/{q}: c_{} = {c}", idx + 1));
            }
            num = num * b + c;
            let a_k = &fact[idx + 1];
            let x_scaled = BigUint::from(p) * a_k;
            let xk_scaled = &num * q;
            if xk_scaled > x_scaled || x_scaled - xk_scaled >= BigUint::from(q) {
                failures.push(format!("{p}/{q}: remainder at k = {}", idx + 1));
            }
        }
        let exp = DigitExpansion::rational(seq.clone(), p.into(), q.into()).expect("point");
        for j in [1, 7, 20, HORIZON] {
            if !evaluate(&exp, j).expect("evaluate").contains(&x) {
                failures.push(format!("{p}/{q}: evaluate({j})"));
            }
        }
        if let Some(m) = g.exact_at {
            exact += 1;
            let sum = g.digits[..m as usize]
                .iter()
                .enumerate()
                .fold(BigRational::zero(), |acc, (idx, &c)| acc + BigRational::new(c.into(), fact[idx + 1].clone().into()));
            if sum != x {
                failures.push(format!("{p}/{q}: finite sum"));
            }
        }
    }
    Outcome::new(
        failures.is_empty(),
        format!("1000 rationals, {exact} exact-finite, {} violations {:?}", failures.len(), failures.iter().take(3).collect::<Vec<_>>()),
    )
}

fn criterion_4() -> Outcome {
    const DEPTH: usize = 60;
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (seq, _) = zeta();
    let fact = factorials(DEPTH);
    let mut violations = 0usize;
    let mut checked = 0usize;
    for stream in 0..1000 {
        // c_i in [0, b_i - 1] with b_i = i + 1; every tenth stream is all maximal digits.
        let digits: Vec<u64> = (1..=DEPTH as u64)
            .map(|i| if stream % 10 == 0 { i } else { rng.gen_range(0..=i) })
            .collect();
        let a_max = &fact[DEPTH];
        for j in 1..=50usize {
            let bound = a_max / &fact[j - 1];
            let mut acc = BigUint::zero();
            for i in j..=DEPTH {
                acc += a_max / &fact[i] * digits[i - 1];
                checked += 1;
                if acc > bound {
                    violations += 1;
                }
            }
        }
        let exp = DigitExpansion::finite(seq.clone(), digits.iter().enumerate().map(|(i, &c)| (i as u64 + 1, c)).collect()).expect("digits");
        let value = evaluate(&exp, DEPTH as u64).expect("evaluate").lo;
        for j in [1u64, 10, 30, 50] {
            if !evaluate(&exp, j).expect("evaluate").contains(&value) {
                violations += 1;
            }
        }
    }
    Outcome::new(violations == 0, format!("{checked} partial sums, {violations} violations"))
}

fn criterion_5() -> Outcome {
    let start = Instant::now();
    let bracket = bracket_check(50).expect("bracket");
    let rep = reproduce("divergent", Some(100_000)).expect("divergent report");
    let elapsed = start.elapsed();
    let width_ok = bracket.max_width <= default_tol();
    let mut out = Outcome::from_report(
        &rep,
        &["bracket", "sandwich", "B-density"],
        format!("width <= 2^-40: {width_ok}; {}", secs(elapsed)),
    );
    out.passed &= width_ok && elapsed < Duration::from_secs(60);
    out
}

/// `{n_k}` for the equality rule, from its definition.
fn equality_level_indices(limit: u64) -> Vec<u64> {
    let mut boundaries = std::collections::HashMap::new();
    let mut s = 0u64;
    let mut j = 1u64;
    while s <= limit {
        s += j * j + 1;
        boundaries.insert(s, j + 1);
        j += 1;
    }
    let mut out = vec![1u64];
    let mut k = 0u64;
    while *out.last().unwrap() <= limit {
        let b = boundaries.get(&k).copied().unwrap_or(2);
        out.push(out.last().unwrap() + b - 1);
        k += 1;
    }
    out
}

fn criterion_6() -> Outcome {
    const N: u64 = 100_000;
    let rep = reproduce("equal", Some(N)).expect("equal report");
    let est = &rep.densities[0].1;
    let oracle = equality_level_indices(N);
    let count = |n: u64| oracle.iter().filter(|&&v| v <= n).count() as u64;
    let counts_ok = est.count == count(N) && est.checkpoints.iter().all(|c| c.count == count(c.n));
    let tail: Vec<f64> = est.checkpoints[est.checkpoints.len() - 4..].iter().map(|c| count(c.n) as f64 / c.n as f64).collect();
    let rising = tail.windows(2).all(|w| w[1] > w[0]);
    let mut out = Outcome::from_report(
        &rep,
        &["density-ratio", "density-increasing"],
        format!("oracle counts agree: {counts_ok}; oracle tail {tail:.5?}"),
    );
    out.passed &= counts_ok && rising && count(N) as f64 / N as f64 >= 0.95;
    out
}

fn criterion_7(rep: &ReproReport) -> Outcome {
    Outcome::from_report(rep, &["a-side", "d-side"], String::new())
}

fn criterion_8(rep: &ReproReport) -> Outcome {
    Outcome::from_report(
        rep,
        &["structural-s-nonmember", "b-equals-3-on-B", "supp-minus-supp-b", "d-statistical", "d-exceedance"],
        String::new(),
    )
}

/// `s_j` over zeta straight from the recursion, with `n_r = 1 + r (r + 1) / 2`.
fn cardinality_oracle(count: usize) -> Vec<u64> {
    let n = |r: u64| 1 + r * (r + 1) / 2;
    let mut s = vec![1u64];
    let mut t = 0u64;
    for j in 1..count as u64 {
        let sj = s[j as usize - 1];
        // b_{s_j + 1 - t} - 1 = s_j + 1 - t over zeta.
        t += (0..j).map(|i| sj + 1 - i).sum::<u64>();
        let mut r = sj + j + 2;
        while n(r) < j * t {
            r += 1;
        }
        s.push(r);
    }
    s
}

fn criterion_9(rep: &ReproReport) -> Outcome {
    let (seq, _) = zeta();
    let lib = CardinalitySeq::new(seq.clone());
    let oracle = cardinality_oracle(12);
    let lib_s: Vec<u64> = (1..=12).map(|j| lib.s(j)).collect();
    let listed = [1u64, 4, 8, 14, 27, 47, 77, 119, 177, 252, 346, 463];
    let recursion_ok = lib_s == oracle && oracle == listed;
    let mut supports: Vec<Vec<u64>> = xi_prefixes(4)
        .iter()
        .map(|xi| cardinality_family(seq.clone(), xi).expect("family").x.support_upto(2000))
        .collect();
    supports.sort();
    supports.dedup();
    let mut out = Outcome::from_report(
        rep,
        &["recursion", "distinct-supports", "exceptional-density", "d-statistical"],
        format!("m = {CARDINALITY_M}; oracle s_1..s_12 agree: {recursion_ok}; distinct prefixes: {}", supports.len()),
    );
    out.passed &= recursion_ok && supports.len() == 16;
    out
}

fn criterion_10(reports: &[&ReproReport]) -> Outcome {
    let mut pairs: Vec<(VerdictReport, VerdictReport)> = Vec::new();
    for rep in reports {
        for chunk in rep.verdicts.chunks(2) {
            pairs.push((chunk[0].clone(), chunk[1].clone()));
        }
    }
    let (z, _) = zeta();
    let two = ArithSeq::new(RatioSpec::constant(2)).unwrap();
    let extra: [(&ArithSeq, Along, u64, u64); 4] = [
        (&z, Along::Derived, 1, 7),
        (&z, Along::Arith, 5, 11),
        (&two, Along::Arith, 1, 3),
        (&two, Along::Derived, 3, 8),
    ];
    for (seq, along, p, q) in extra {
        let x = TorusPoint::rational(p, q).unwrap();
        pairs.push(verdicts(seq, along, &x, &VerdictConfig::new(100_000)).unwrap());
    }
    let certified: Vec<_> = pairs.iter().filter(|(c, _)| c.verdict == Verdict::Converges).collect();
    let broken = certified.iter().filter(|(_, s)| s.verdict != Verdict::SConvergesEmpirical).count();
    Outcome::new(
        broken == 0 && !certified.is_empty(),
        format!("{} pairs, {} classically convergent, {broken} without s-convergence", pairs.len(), certified.len()),
    )
}

fn criterion_11() -> Outcome {
    const N: u64 = 10_000_000;
    let (seq, _) = zeta();
    let x = TorusPoint::rational(123_456, 1_000_003).unwrap();
    let cfg = ScanConfig::new(N, default_eps()).unwrap();
    let start = Instant::now();
    let parallel = scan_norms(&seq, Along::Derived, &x, &cfg).expect("scan");
    let elapsed = start.elapsed();
    let sequential = scan_norms(&seq, Along::Derived, &x, &cfg.clone().sequential()).expect("scan");
    let identical = parallel == sequential;
    let threads = rayon::current_num_threads();
    // Exact counts at sampled indices from d_i mod q.
    let d = DerivedSeq::new(seq.clone());
    let eps = default_eps();
    let q = BigUint::from(1_000_003u64);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut wrong = 0;
    for _ in 0..200 {
        let i = rng.gen_range(1..=N);
        let v = d.term(i) * 123_456u64 % &q;
        let dist = BigRational::new(v.clone().min(&q - &v).into(), q.clone().into());
        let count = eps.iter().filter(|e| **e <= dist).count() as u8;
        let idx = (i - 1) as usize;
        if parallel.certain[idx] != count || parallel.possible[idx] != count {
            wrong += 1;
        }
    }
    Outcome::new(
        identical && wrong == 0 && elapsed <= Duration::from_secs(10),
        format!(
            "{N} indices in {} on {threads} threads, parallel == sequential: {identical}, {wrong} of 200 sampled counts off the exact value",
            secs(elapsed)
        ),
    )
}

fn main() -> ExitCode {
    let mut results: Vec<(u32, &str, Outcome)> = Vec::new();
    let mut run = |id: u32, name: &'static str, f: &dyn Fn() -> Outcome| {
        let out = f();
        println!("criterion {id:>2} [{}] {name}: {}", if out.passed { "PASS" } else { "FAIL" }, out.detail);
        results.push((id, name, out));
    };
    run(1, "zeta reproduction", &criterion_1);
    run(2, "derived-sequence oracle", &criterion_2);
    run(3, "expansion correctness", &criterion_3);
    run(4, "tail bound", &criterion_4);
    run(5, "bracket", &criterion_5);
    run(6, "equality-case density", &criterion_6);
    let strict = reproduce("strict", Some(1_000_000)).expect("strict report");
    run(7, "strict-inclusion separation", &|| criterion_7(&strict));
    let reverse = reproduce("reverse", Some(1_000_000)).expect("reverse report");
    run(8, "reverse-case separation", &|| criterion_8(&reverse));
    let cardinality = reproduce("cardinality", Some(1_000_000)).expect("cardinality report");
    run(9, "cardinality family", &|| criterion_9(&cardinality));
    let divergent = reproduce("divergent", Some(100_000)).expect("divergent report");
    run(10, "classical inside statistical", &|| criterion_10(&[&strict, &reverse, &cardinality, &divergent]));
    run(11, "performance", &criterion_11);
    let failed: Vec<u32> = results.iter().filter(|r| !r.2.passed).map(|r| r.0).collect();
    println!("{} of {} criteria passed", results.len() - failed.len(), results.len());
    if failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        println!("failed: {failed:?}");
        ExitCode::FAILURE
    }
}
