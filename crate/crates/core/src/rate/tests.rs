use super::*;

fn table(f: impl Fn(u32) -> u64, n: u32) -> GrowthTable {
    GrowthTable::from_counts((0..=n).map(f).collect())
}

fn beta_f2(n: u32) -> u64 {
    2 * 3u64.pow(n) - 1
}

fn hyp(e: &str, l: &str) -> RateHypothesis {
    RateHypothesis::new(e.parse().unwrap(), l.parse().unwrap())
}

#[test]
fn function_spec_round_trip() {
    for s in ["const:4", "affine:1,1", "affine:0.5,-2", "table:1,2,3.5"] {
        let f: FunctionSpec = s.parse().unwrap();
        assert_eq!(f.to_string(), s);
    }
    assert_eq!(
        "affine:2,1".parse::<FunctionSpec>().unwrap().eval(3),
        Some(7.0)
    );
    assert_eq!("table:1,2".parse::<FunctionSpec>().unwrap().eval(2), None);
    match "affine:1,x".parse::<FunctionSpec>().unwrap_err() {
        Error::Parse { column, .. } => assert_eq!(column, 10),
        e => panic!("{e:?}"),
    }
    assert!("const:1,2".parse::<FunctionSpec>().is_err());
    assert!("poly:1".parse::<FunctionSpec>().is_err());
    assert!("const".parse::<FunctionSpec>().is_err());
}

#[test]
fn roots_of_simple_tables() {
    let pow2 = root_sequence(&table(|n| 1 << n, 20)).unwrap();
    assert!(pow2.iter().all(|&(_, a)| a == 2.0));
    let lin = root_sequence(&table(|n| n as u64 + 1, 10)).unwrap();
    assert!((lin[9].1 - 11f64.powf(0.1)).abs() < 1e-12);
    assert!(lin.windows(2).all(|w| w[1].1 < w[0].1));
    let f2 = root_sequence(&table(beta_f2, 14)).unwrap();
    let a14 = f2[13].1;
    assert!((3.0..=3.2).contains(&a14));
    assert!(f2[4..].windows(2).all(|w| w[1].1 < w[0].1));
    assert!(matches!(
        root_sequence(&GrowthTable::from_counts(vec![1, 0])),
        Err(Error::ZeroEntry(1))
    ));
}

#[test]
fn hypothesis_examples() {
    let pow2 = table(|n| 1 << n, 16);
    assert!(
        check_hypothesis(&pow2, &hyp("const:1", "const:0"))
            .unwrap()
            .holds
    );
    let f2 = table(beta_f2, 18);
    let bad = check_hypothesis(&f2, &hyp("const:1", "const:0")).unwrap();
    assert!(!bad.holds);
    assert_eq!(bad.violations[0], (1, 1));
    assert!(
        check_hypothesis(&f2, &hyp("affine:1,1", "const:2"))
            .unwrap()
            .holds
    );
    assert!(matches!(
        check_hypothesis(&table(|_| 1, 2), &hyp("const:1", "const:5")),
        Err(Error::RangeShortfall { .. })
    ));
    assert!(check_hypothesis(&f2, &hyp("const:1", "const:0.5")).is_err());
    let mut h = hyp("affine:1,1", "const:2");
    h.growth_bound = Some(5.0);
    assert!(check_hypothesis(&f2, &h).unwrap().holds);
    h.growth_bound = Some(2.5);
    assert!(!check_hypothesis(&f2, &h)
        .unwrap()
        .bound_violations
        .is_empty());
}

#[test]
fn geometric_tables_collapse() {
    for k in [1u64, 2, 3, 5] {
        let f = table(|n| k.pow(n), 12);
        let r = fekete_lower_bound(&f, &hyp("const:1", "const:0")).unwrap();
        assert_eq!(r.lower, k as f64);
        assert_eq!(r.upper, k as f64);
        assert!(r.hypothesis_ok);
        assert_eq!(r.witness_s, (1..=12).collect::<Vec<_>>());
    }
}

#[test]
fn free_group_bracket() {
    let f = table(beta_f2, 14);
    let r = fekete_lower_bound(&f, &hyp("const:4", "const:0")).unwrap();
    // Independent evaluation of max_s (β(s)/4)^{1/s}.
    let expect = (1..=14u32)
        .map(|s| (beta_f2(s) as f64 / 4.0).powf(1.0 / s as f64))
        .fold(0.0, f64::max);
    assert!((r.lower - expect).abs() < 1e-12);
    assert_eq!(r.witness_s, vec![14]);
    assert!((2.8..2.9).contains(&r.lower));
    assert!((r.upper - (beta_f2(14) as f64).powf(1.0 / 14.0)).abs() < 1e-12);
    assert!(r.lower <= 3.0 && 3.0 <= r.upper);
    // (β(10)/4)^{1/10} ≈ 2.80
    assert!(((beta_f2(10) as f64 / 4.0).powf(0.1) - 2.80).abs() < 0.005);
    assert_eq!(r.walk.len(), 14);
    assert_eq!(r.walk[13].q, 1);
}

#[test]
fn lower_bound_grows_with_range() {
    let h = hyp("affine:1,1", "const:2");
    let mut prev = 0.0;
    for n in 3..=16 {
        let r = fekete_lower_bound(&table(beta_f2, n), &h).unwrap();
        assert!(r.lower >= prev);
        assert!(r.lower <= r.upper);
        prev = r.lower;
    }
}

#[test]
fn polynomial_tables_approach_one() {
    let f = table(|n| n as u64 + 1, 50);
    let roots = root_sequence(&f).unwrap();
    assert!(roots.windows(2).all(|w| w[1].1 <= w[0].1));
    assert!(roots[49].1 < 1.1);
}

#[test]
fn empty_admissible_range() {
    let f = GrowthTable::from_counts(vec![1]);
    assert!(fekete_lower_bound(&f, &hyp("const:1", "const:0")).is_err());
}

#[test]
fn failed_hypothesis_is_reported() {
    let f = table(beta_f2, 10);
    let r = fekete_lower_bound(&f, &hyp("const:1", "const:0")).unwrap();
    assert!(!r.hypothesis_ok);
    assert!(r.violations.contains(&(1, 1)));
}
