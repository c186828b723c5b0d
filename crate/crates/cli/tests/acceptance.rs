//! Acceptance criteria. Each test prints one `criterion N: PASS|FAIL` line to
//! the real stdout (bypassing capture) and then asserts.

use std::collections::{BTreeSet, HashSet};
use std::io::Write;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use growthlab::cayley::{distortion_table, enumerate_ball, growth_by_counting, growth_sequence};
use growthlab::concat::{fiber, measure_ambiguity, verify_supermultiplicativity_within};
use growthlab::hyperbolic::{
    acylindricity_witnesses, check_equivariance, estimate_delta, DeltaMode,
};
use growthlab::rate::fekete_lower_bound;
use growthlab::{
    AmbiguityReport, Budget, Concatenation, ConnectorKit, Element, FiniteMetric, FunctionSpec,
    GroupDescriptor, GrowthTable, HalfInt, RateHypothesis, SubgroupOracle,
};
use growthlab_cli::{parse_growth_csv, parse_spec, run, Artifact};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn report(n: u32, ok: bool, detail: impl AsRef<str>) {
    let line = format!(
        "criterion {n}: {} ({})\n",
        if ok { "PASS" } else { "FAIL" },
        detail.as_ref()
    );
    let mut out = std::io::stdout().lock();
    let _ = out.write_all(line.as_bytes());
    let _ = out.flush();
    assert!(ok, "criterion {n} failed: {}", detail.as_ref());
}

fn free(k: usize) -> GroupDescriptor {
    GroupDescriptor::free(k).unwrap()
}

fn group(s: &str) -> GroupDescriptor {
    s.parse().unwrap()
}

fn artifacts(spec: &str, workers: u16) -> Vec<Artifact> {
    let mut spec = parse_spec(spec).unwrap();
    spec.run_args_mut().workers = workers;
    let out = run(&spec).unwrap();
    assert_eq!(out.exit_code, 0, "{spec:?}");
    out.artifacts
}

const GROWTH_F2: &str = "growth --group free:2 --max-radius 12";
const AMBIGUITY_F2: &str =
    "ambiguity --group free:2 --g a --h b -n 2 --smax 6 --tmax 6 --fit-tmax 3 --format json";
const RELGROWTH_SQUARES: &str = "relgrowth --group free:2 --subgroup aa,bb --max-radius 10";
const RELGROWTH_DIAG: &str =
    "relgrowth --group 'product(free:2,free:2)' --subgroup diag --max-radius 10";

fn beta_f2(n: u32) -> u64 {
    2 * 3u64.pow(n) - 1
}

/// The criterion-4 report, computed once.
fn kit_report() -> &'static (AmbiguityReport, Duration) {
    static CELL: OnceLock<(AmbiguityReport, Duration)> = OnceLock::new();
    CELL.get_or_init(|| {
        let start = Instant::now();
        let arts = artifacts(AMBIGUITY_F2, 4);
        let elapsed = start.elapsed();
        let doc: serde_json::Value = serde_json::from_str(&arts[0].contents).unwrap();
        // Rebuild the typed report from the library for exact comparisons and
        // check the artifact agrees with it.
        let d = free(2);
        let kit = ConnectorKit::new(
            &d,
            d.parse_element("a").unwrap(),
            d.parse_element("b").unwrap(),
            2,
        )
        .unwrap();
        let r = measure_ambiguity(
            &Concatenation::Kit(kit),
            &d,
            None,
            6,
            6,
            3,
            Budget::default(),
        )
        .unwrap();
        assert_eq!(doc["result"], serde_json::to_value(&r).unwrap());
        (r, elapsed)
    })
}

#[test]
fn criterion_01_ball_counts() {
    let start = Instant::now();
    let arts = artifacts(GROWTH_F2, 4);
    let elapsed = start.elapsed();
    let table = parse_growth_csv(&arts[0].contents).unwrap();
    let mut bad = Vec::new();
    for n in 0..=12u32 {
        if table.counts[n as usize] != beta_f2(n) {
            bad.push(format!("β({n})={}", table.counts[n as usize]));
        }
    }
    let spheres = table.spheres();
    for n in 1..=12u32 {
        if spheres[n as usize] != 4 * 3u64.pow(n - 1) {
            bad.push(format!("sphere({n})={}", spheres[n as usize]));
        }
    }
    let ok = bad.is_empty() && elapsed < Duration::from_secs(60);
    report(
        1,
        ok,
        format!(
            "β_F2(n)=2·3^n-1 and spheres 4·3^(n-1) for n<=12 by BFS; β(12)={}; {:.2}s; mismatches {:?}",
            table.counts[12],
            elapsed.as_secs_f64(),
            bad
        ),
    );
}

#[test]
fn criterion_02_milnor() {
    let mut total = 0;
    let mut details = Vec::new();
    for g in ["free:1", "free:2", "product(free:2,free:1)"] {
        let d = group(g);
        let t = growth_sequence(&d, None, 10, Budget::default()).unwrap();
        let v = t.milnor_violations.clone().unwrap();
        // Independent recheck of β(m+n) <= β(m)β(n) on the same table.
        let mut recheck = 0;
        for m in 0..=10 {
            for n in 0..=10 - m {
                if t.counts[m + n] as u128 > t.counts[m] as u128 * t.counts[n] as u128 {
                    recheck += 1;
                }
            }
        }
        total += v.len() + recheck;
        details.push(format!(
            "{g}: β(10)={}, violations {}",
            t.counts[10],
            v.len()
        ));
    }
    report(2, total == 0, details.join("; "));
}

#[test]
fn criterion_03_naive_fiber() {
    let d = free(2);
    let one = d.identity();
    let mut bad = Vec::new();
    let mut sizes = Vec::new();
    for t in 0..=5 {
        let ball_t = enumerate_ball(&d, t, Budget::default()).unwrap();
        let f = fiber(&Concatenation::Naive, &one, 2 * t, &ball_t.elements, None);
        sizes.push(f.len());
        if f.len() as u64 != beta_f2(t as u32) {
            bad.push(t);
        }
        if t <= 3 {
            // Direct count over B(2t) × B(t).
            let ball_s = enumerate_ball(&d, 2 * t, Budget::default()).unwrap();
            let mut direct = 0u64;
            for u in &ball_s.elements {
                for v in &ball_t.elements {
                    if (u * v).is_identity() {
                        direct += 1;
                    }
                }
            }
            if direct != f.len() as u64 {
                bad.push(100 + t);
            }
        }
    }
    report(
        3,
        bad.is_empty(),
        format!("|Φ_(2t,t)^-1(1)| for t=0..5: {sizes:?}; expected β_F2(t)"),
    );
}

#[test]
fn criterion_04_connector_effectiveness() {
    let (r, elapsed) = kit_report();
    let d = free(2);
    let ball6 = enumerate_ball(&d, 6, Budget::default()).unwrap();
    let cols = r.column_maxima();
    let env = r.envelope;
    let late_ok =
        (4..=6).all(|t| (0..=6).all(|s| r.cell(s, t).unwrap().max_fiber as f64 <= env.eval(t)));
    let top = r.cell(6, 6).unwrap();
    let margin_ok = top.max_fiber * 50 <= 1457;
    // Recount the fiber of every argmax by solving for u.
    let concat = Concatenation::Kit(
        ConnectorKit::new(
            &d,
            d.parse_element("a").unwrap(),
            d.parse_element("b").unwrap(),
            2,
        )
        .unwrap(),
    );
    let recount_ok = r.cells.iter().all(|c| {
        fiber(&concat, &c.argmax, c.s, ball6.within(c.t), None).len() as u64 == c.max_fiber
    });
    let ok = late_ok
        && margin_ok
        && recount_ok
        && r.violations.is_empty()
        && r.containment_failures == 0
        && *elapsed < Duration::from_secs(600);
    report(
        4,
        ok,
        format!(
            "column maxima {cols:?}; envelope {}·t+{} fitted on t<=3; 50 x max fiber at (6,6) = {} <= 1457; {:.2}s",
            env.slope,
            env.intercept,
            50 * top.max_fiber,
            elapsed.as_secs_f64()
        ),
    );
}

/// Subgroup elements with `|h|_X ≤ n`, from products of at most `depth`
/// generators and inverses.
fn subgroup_products(d: &GroupDescriptor, gens: &[Element], depth: usize, n: usize) -> Vec<u64> {
    let mut letters = Vec::new();
    for g in gens {
        letters.push(g.clone());
        letters.push(g.inverse());
    }
    let mut seen: HashSet<Element> = HashSet::new();
    let mut frontier = vec![d.identity()];
    seen.insert(d.identity());
    for _ in 0..depth {
        let mut next = Vec::new();
        for x in &frontier {
            for y in &letters {
                let z = x * y;
                if seen.insert(z.clone()) {
                    next.push(z);
                }
            }
        }
        frontier = next;
    }
    let mut counts = vec![0u64; n + 1];
    for h in &seen {
        if h.word_length() <= n {
            counts[h.word_length()] += 1;
        }
    }
    GrowthTable::from_spheres(&counts).counts
}

#[test]
fn criterion_05_weak_supermultiplicativity() {
    let (r, _) = kit_report();
    let l = r.envelope.as_function();
    let c = 2;
    let mut lines = Vec::new();
    let mut ok = true;

    let f2 = free(2);
    let whole = growth_by_counting(&f2, None, 18).unwrap();
    ok &= (0..=18u32).all(|n| whole.counts[n as usize] == beta_f2(n));

    let squares = SubgroupOracle::parse("aa,bb", &f2).unwrap();
    let sq = growth_by_counting(&f2, Some(&squares), 18).unwrap();
    let sq_enum = growth_sequence(&f2, Some(&squares), 10, Budget::default()).unwrap();
    ok &= sq.truncated(10).counts == sq_enum.counts;

    let p = group("product(free:2,free:2)");
    let diag = SubgroupOracle::diagonal(&p).unwrap();
    let dg = growth_by_counting(&p, Some(&diag), 18).unwrap();
    ok &= (0..=18u32).all(|n| dg.counts[n as usize] == beta_f2(n / 2));

    for (name, table) in [("F_2", &whole), ("<aa,bb>", &sq), ("diag(F_2xF_2)", &dg)] {
        let check = verify_supermultiplicativity_within(table, c, &l, 8, 8).unwrap();
        ok &= check.holds && check.pairs_checked == 81;
        lines.push(format!("{name}: {} violations", check.violations.len()));
    }

    // The diagonal with connector pieces inside it: (a,a), (b,b).
    let kit = ConnectorKit::new(
        &p,
        p.parse_element("(a,a)").unwrap(),
        p.parse_element("(b,b)").unwrap(),
        2,
    )
    .unwrap();
    let in_h = measure_ambiguity(
        &Concatenation::Kit(kit),
        &p,
        Some(&diag),
        8,
        8,
        3,
        Budget::default(),
    )
    .unwrap();
    let dg20 = growth_by_counting(&p, Some(&diag), 8 + 8 + in_h.c).unwrap();
    ok &= dg20.truncated(18).counts == dg.counts;
    let in_h_check =
        verify_supermultiplicativity_within(&dg20, in_h.c, &in_h.envelope.as_function(), 8, 8)
            .unwrap();
    ok &= in_h.violations.is_empty() && in_h.containment_failures == 0 && in_h_check.holds;
    ok &= in_h
        .cells
        .iter()
        .all(|cell| diag.contains(&cell.argmax).unwrap().is_member());
    lines.push(format!(
        "in-H kit on the diagonal: c={}, envelope {}·t+{}, {} violations",
        in_h.c,
        in_h.envelope.slope,
        in_h.envelope.intercept,
        in_h_check.violations.len()
    ));

    report(
        5,
        ok,
        format!("c=2, l(t)={}; s,t<=8; {}", l, lines.join("; ")),
    );
}

#[test]
fn criterion_06_hyperbolicity() {
    let d = free(2);
    let ball4 = enumerate_ball(&d, 4, Budget::default()).unwrap();
    let metric = FiniteMetric::from_elements(&d, &ball4.elements).unwrap();
    let est = estimate_delta(&metric, DeltaMode::Exhaustive).unwrap();

    // Literal Gromov condition over every ordered quadruple of B(3).
    let ball3 = enumerate_ball(&d, 3, Budget::default()).unwrap();
    let m3 = FiniteMetric::from_elements(&d, &ball3.elements).unwrap();
    let n = m3.len();
    let mut literal = 0i64;
    for x in 0..n {
        for y in 0..n {
            for z in 0..n {
                for o in 0..n {
                    let lhs = m3.gromov_product(x, y, o).halves();
                    let rhs = m3
                        .gromov_product(x, z, o)
                        .halves()
                        .min(m3.gromov_product(z, y, o).halves());
                    literal = literal.max(rhs - lhs);
                }
            }
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let sample = enumerate_ball(&d, 6, Budget::default()).unwrap().elements;
    let mut failures = 0;
    for _ in 0..10_000 {
        let mut pick = || sample[rng.gen_range(0..sample.len())].clone();
        let (g, x, y, z) = (pick(), pick(), pick(), pick());
        if !check_equivariance(&g, &x, &y, &z).unwrap() {
            failures += 1;
        }
    }
    let ok = est.delta == HalfInt::ZERO && literal == 0 && failures == 0;
    report(
        6,
        ok,
        format!(
            "δ(B_F2(4)) = {} over {} quadruples; literal δ(B_F2(3)) = {}; equivariance failures {failures}/10000",
            est.delta,
            est.quadruples,
            HalfInt::from_halves(literal)
        ),
    );
}

/// Witnesses by brute force over a ball large enough to hold `x w x⁻¹`.
fn brute_witnesses(d: &GroupDescriptor, x: &Element, y: &Element, eps: usize) -> BTreeSet<Element> {
    let ball = enumerate_ball(d, 2 * x.word_length() + eps, Budget::default()).unwrap();
    ball.elements
        .into_iter()
        .filter(|g| x.distance(&(g * x)) <= eps && y.distance(&(g * y)) <= eps)
        .collect()
}

#[test]
fn criterion_07_acylindricity() {
    let d = free(2);
    let one = d.identity();
    let a = d.parse_element("a").unwrap();
    let w = acylindricity_witnesses(&d, &one, &a.pow(5), 1).unwrap();
    let shown: Vec<String> = w.iter().map(|e| e.to_string()).collect();
    let mut ok = w.len() == 3
        && w.iter().cloned().collect::<BTreeSet<_>>() == brute_witnesses(&d, &one, &a.pow(5), 1);
    let mut series = Vec::new();
    for eps in 0..=3 {
        let counts: Vec<usize> = (0..=10)
            .map(|k| {
                acylindricity_witnesses(&d, &one, &a.pow(k), eps)
                    .unwrap()
                    .len()
            })
            .collect();
        ok &= counts.windows(2).all(|p| p[1] <= p[0]);
        for k in [0, 3, 10] {
            ok &= counts[k as usize] == brute_witnesses(&d, &one, &a.pow(k), eps).len();
        }
        series.push(format!("ε={eps}: {counts:?}"));
    }
    let b = d.parse_element("b").unwrap();
    ok &= acylindricity_witnesses(&d, &b, &(&b * &a.pow(4)), 2)
        .unwrap()
        .into_iter()
        .collect::<BTreeSet<_>>()
        == brute_witnesses(&d, &b, &(&b * &a.pow(4)), 2);
    report(
        7,
        ok,
        format!(
            "x=1, y=a^5, ε=1 gives {shown:?}; counts along y=a^k, k=0..10: {}",
            series.join("; ")
        ),
    );
}

#[test]
fn criterion_08_distortion() {
    let d = free(2);
    let a = d.parse_element("a").unwrap();
    let t1 = distortion_table(&d, std::slice::from_ref(&a), None, 12, Budget::default()).unwrap();
    let t2 = distortion_table(&d, &[a.pow(2)], None, 12, Budget::default()).unwrap();
    let ok =
        t1 == (0..=12).collect::<Vec<_>>() && t2 == (0..=12).map(|n| n / 2).collect::<Vec<_>>();
    report(
        8,
        ok,
        format!("Δ_<a>(0..12) = {t1:?}; Δ_<a^2>(0..12) = {t2:?}"),
    );
}

#[test]
fn criterion_09_rate_bracketing() {
    let start = Instant::now();
    let (r, _) = kit_report();
    let f2 = free(2);
    let table = growth_by_counting(&f2, None, 14).unwrap();
    let hyp = RateHypothesis::new(r.envelope.as_function(), FunctionSpec::Const(2.0));
    let est = fekete_lower_bound(&table, &hyp).unwrap();
    // Independent evaluation of max_s (β(s)/ε(s))^(1/(s+2)) and a_14.
    let expect_lower = (1..=14u32)
        .map(|s| (beta_f2(s) as f64 / r.envelope.eval(s as usize)).powf(1.0 / (s + 2) as f64))
        .fold(0.0, f64::max);
    let expect_upper = (beta_f2(14) as f64).powf(1.0 / 14.0);
    let agree = (est.lower - expect_lower).abs() < 1e-9 && (est.upper - expect_upper).abs() < 1e-9;
    let contains = est.lower <= 3.0 && 3.0 <= est.upper;
    let width = est.upper - est.lower;

    let pow2 = GrowthTable::from_counts((0..=14).map(|n| 1u64 << n).collect());
    let geo = fekete_lower_bound(
        &pow2,
        &RateHypothesis::new(FunctionSpec::Const(1.0), FunctionSpec::Const(0.0)),
    )
    .unwrap();
    let collapse = geo.lower == 2.0 && geo.upper == 2.0;
    let elapsed = start.elapsed();

    let ok = agree
        && est.hypothesis_ok
        && contains
        && width <= 0.5
        && collapse
        && elapsed < Duration::from_secs(10);
    report(
        9,
        ok,
        format!(
            "β_F2, ε(t)={}, l=2: [{:.4}, {:.4}] width {:.4} (needs <=0.5), hypothesis_ok={}, witness s={:?}; 2^n: [{}, {}]; {:.2}s",
            hyp.epsilon,
            est.lower,
            est.upper,
            width,
            est.hypothesis_ok,
            est.witness_s,
            geo.lower,
            geo.upper,
            elapsed.as_secs_f64()
        ),
    );
}

#[test]
fn criterion_10_relative_growth_two_ways() {
    let f2 = free(2);
    let stallings = parse_growth_csv(&artifacts(RELGROWTH_SQUARES, 4)[0].contents).unwrap();
    let gens = vec![
        f2.parse_element("aa").unwrap(),
        f2.parse_element("bb").unwrap(),
    ];
    let products = subgroup_products(&f2, &gens, 10, 10);

    let diag = parse_growth_csv(&artifacts(RELGROWTH_DIAG, 4)[0].contents).unwrap();
    let expect_diag: Vec<u64> = (0..=10u32).map(|n| beta_f2(n / 2)).collect();

    let ok = stallings.counts == products && diag.counts == expect_diag;
    report(
        10,
        ok,
        format!(
            "<aa,bb>: Stallings {:?}, products {:?}; diagonal {:?}",
            stallings.counts, products, diag.counts
        ),
    );
}

#[test]
fn criterion_11_determinism() {
    let mut ok = true;
    let mut sizes = Vec::new();
    for spec in [GROWTH_F2, AMBIGUITY_F2, RELGROWTH_SQUARES, RELGROWTH_DIAG] {
        let reference = artifacts(spec, 1);
        for workers in [4, 8] {
            ok &= artifacts(spec, workers) == reference;
        }
        sizes.push(reference.iter().map(|a| a.contents.len()).sum::<usize>());
    }
    report(
        11,
        ok,
        format!("criteria 1, 4, 10 artifacts identical at 1, 4, 8 workers (bytes {sizes:?})"),
    );
}
