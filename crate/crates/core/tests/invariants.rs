use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, Zero};
use proptest::prelude::*;

use statchar::constructions::{named_witness, zeta};
use statchar::density::{density_upto, IndexSet};
use statchar::scan::default_eps;
use statchar::torus::default_tol;
use statchar::{
    norm, reproduce, scan_norms, verdicts, Along, ArithSeq, DerivedSeq, RatioSpec, ScanConfig,
    TorusPoint, Verdict, VerdictConfig,
};

fn table_spec(prefix: Vec<u64>) -> RatioSpec {
    RatioSpec::Table {
        prefix,
        tail: Box::new(RatioSpec::constant(2)),
    }
}

/// `||m p / q||` straight from integers.
fn exact_norm(m: &BigUint, p: u64, q: u64) -> BigRational {
    let v = m * p % q;
    let v = v.clone().min(BigUint::from(q) - v);
    BigRational::new(v.into(), q.into())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn derived_terms_ascend_and_divide(prefix in prop::collection::vec(2u64..9, 1..40)) {
        let seq = ArithSeq::new(table_spec(prefix)).unwrap();
        let d = DerivedSeq::new(seq.clone());
        let terms = d.terms(1, 200);
        prop_assert!(terms.windows(2).all(|w| w[0] < w[1]));
        for (idx, t) in terms.iter().enumerate() {
            let (k, r) = d.decompose(idx as u64 + 1);
            prop_assert_eq!(d.compose(k, r), idx as u64 + 1);
            prop_assert!(r >= 1 && r < seq.ratio(k + 1));
            prop_assert!((t % seq.value(k)).is_zero());
        }
    }

    #[test]
    fn norm_is_symmetric_under_negation(p in 1u64..1000, q in 2u64..1000, k in 0u64..30, r in 1u64..5) {
        prop_assume!(p < q);
        let (seq, _) = zeta();
        let m = seq.value(k) * r;
        let x = TorusPoint::rational(p, q).unwrap();
        let y = TorusPoint::rational(q - p, q).unwrap();
        let (nx, ny) = (norm(&x, &m, &default_tol()).unwrap(), norm(&y, &m, &default_tol()).unwrap());
        prop_assert_eq!(&nx.lo, &ny.lo);
        prop_assert_eq!(&nx.lo, &exact_norm(&m, p, q));
    }

    #[test]
    fn scan_counts_match_exact_norms(p in 0u64..500, q in 1u64..500, b in 2u64..6) {
        prop_assume!(p < q);
        let seq = ArithSeq::new(RatioSpec::constant(b)).unwrap();
        let d = DerivedSeq::new(seq.clone());
        let x = TorusPoint::rational(p, q).unwrap();
        let cfg = ScanConfig::new(400, default_eps()).unwrap();
        let scan = scan_norms(&seq, Along::Derived, &x, &cfg).unwrap();
        for i in 1..=400u64 {
            let dist = exact_norm(&d.term(i), p, q);
            let count = cfg.eps.iter().filter(|e| **e <= dist).count() as u8;
            prop_assert_eq!(scan.certain[i as usize - 1], count);
            prop_assert_eq!(scan.possible[i as usize - 1], count);
        }
    }

    #[test]
    fn explicit_density_matches_naive_count(members in prop::collection::btree_set(1u64..5000, 0..400)) {
        let members: Vec<u64> = members.into_iter().collect();
        let est = density_upto(&IndexSet::explicit(members.clone()), 5000, 8).unwrap();
        prop_assert_eq!(est.count, members.len() as u64);
        for c in &est.checkpoints {
            prop_assert_eq!(c.count, members.iter().filter(|&&m| m <= c.n).count() as u64);
        }
        prop_assert!(est.lower_proxy <= est.ratio + 1e-12 && est.ratio <= est.upper_proxy + 1e-12);
    }
}

#[test]
fn rationals_are_torsion_over_zeta() {
    let (seq, _) = zeta();
    for (p, q) in [(1, 7), (3, 10), (22, 97), (5, 720)] {
        let x = TorusPoint::rational(p, q).unwrap();
        let scan = scan_norms(&seq, Along::Derived, &x, &ScanConfig::new(5000, default_eps()).unwrap()).unwrap();
        let from = scan.zero_from.expect("eventually zero");
        assert!(scan.certain[from as usize - 1..].iter().all(|&c| c == 0));
        let cfg = VerdictConfig::new(5000);
        let (classical, statistical) = verdicts(&seq, Along::Derived, &x, &cfg).unwrap();
        assert_eq!(classical.verdict, Verdict::Converges, "{p}/{q}");
        assert_eq!(statistical.verdict, Verdict::SConvergesEmpirical, "{p}/{q}");
    }
}

#[test]
fn sum_of_torsion_points_stays_in_subgroup() {
    let (seq, _) = zeta();
    let x = statchar::Rational01::new(3u32.into(), 11u32.into()).unwrap();
    let y = statchar::Rational01::new(4u32.into(), 13u32.into()).unwrap();
    let sum = TorusPoint::Rational(x.add_mod1(&y));
    let cfg = VerdictConfig::new(20_000);
    let (classical, _) = verdicts(&seq, Along::Arith, &sum, &cfg).unwrap();
    assert_eq!(classical.verdict, Verdict::Converges);
}

#[test]
fn non_torsion_rational_diverges_over_doubling() {
    let seq = ArithSeq::new(RatioSpec::constant(2)).unwrap();
    let x = TorusPoint::rational(1, 3).unwrap();
    let (classical, statistical) = verdicts(&seq, Along::Arith, &x, &VerdictConfig::new(20_000)).unwrap();
    assert_eq!(classical.verdict, Verdict::DivergesWitnessed);
    assert_eq!(statistical.verdict, Verdict::DivergesWitnessed);
}

#[test]
fn named_witnesses_resolve() {
    for id in ["divergent", "strict", "reverse", "cardinality:1011"] {
        let (seq, x) = named_witness(id).unwrap();
        assert!(!x.support_upto(500).is_empty(), "{id}");
        assert!(x.support_upto(500).iter().all(|&n| x.digit(n) < seq.ratio(n)));
    }
    assert!(named_witness("nope").is_err());
}

#[test]
fn reports_serialize() {
    let rep = reproduce("zeta", Some(100)).unwrap();
    assert!(rep.passed());
    let json = serde_json::to_value(&rep).unwrap();
    assert_eq!(json["id"], "zeta");
    assert!(json["checks"].as_array().unwrap().len() >= 2);
}

#[test]
fn unit_multiplier_is_identity() {
    let x = TorusPoint::rational(2, 5).unwrap();
    let e = statchar::frac_mul(&x, &BigUint::one(), &default_tol()).unwrap();
    assert_eq!(e.lo, BigRational::new(2.into(), 5.into()));
}
