//! Cross-module properties over the public API.

use std::collections::HashSet;
use std::sync::OnceLock;

use growthlab::cayley::{enumerate_ball, growth_sequence, relative_ball};
use growthlab::concat::{fiber, measure_ambiguity, select_connector};
use growthlab::rate::{check_hypothesis, fekete_lower_bound};
use growthlab::{
    Budget, Concatenation, ConnectorKit, Element, FunctionSpec, GroupDescriptor, GrowthTable,
    RateHypothesis, SubgroupOracle,
};
use proptest::prelude::*;

fn f2() -> GroupDescriptor {
    GroupDescriptor::free(2).unwrap()
}

fn ball_f2(r: usize) -> &'static [Element] {
    static BALL: OnceLock<Vec<Element>> = OnceLock::new();
    let all = BALL.get_or_init(|| {
        enumerate_ball(&f2(), 6, Budget::default())
            .unwrap()
            .elements
    });
    let end = all.partition_point(|e| e.word_length() <= r);
    &all[..end]
}

fn arb_f2(r: usize) -> impl Strategy<Value = Element> {
    let n = ball_f2(r).len();
    (0..n).prop_map(move |i| ball_f2(r)[i].clone())
}

fn arb_subgroup() -> impl Strategy<Value = String> {
    let word = "[aAbB]{1,4}";
    (proptest::collection::vec(word, 1..=3), any::<bool>()).prop_map(|(ws, cyclic)| {
        if cyclic {
            format!("cyclic:{}", ws[0])
        } else {
            ws.join(",")
        }
    })
}

fn in_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .unwrap()
        .install(f)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn relative_growth_is_dominated(spec in arb_subgroup()) {
        let d = f2();
        let Ok(h) = SubgroupOracle::parse(&spec, &d) else {
            return Ok(());
        };
        let whole = growth_sequence(&d, None, 6, Budget::default()).unwrap();
        let rel = growth_sequence(&d, Some(&h), 6, Budget::default()).unwrap();
        for n in 0..=6 {
            prop_assert!(rel.counts[n] <= whole.counts[n]);
        }
        prop_assert_eq!(rel.counts[0], 1);
        prop_assert!(rel.counts.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn relative_balls_are_symmetric(spec in arb_subgroup()) {
        let d = f2();
        let Ok(h) = SubgroupOracle::parse(&spec, &d) else {
            return Ok(());
        };
        let ball = relative_ball(&d, &h, 6, Budget::default()).unwrap();
        let set: HashSet<&Element> = ball.elements.iter().collect();
        for e in &ball.elements {
            prop_assert!(set.contains(&e.inverse()));
        }
    }

    #[test]
    fn images_are_contained_and_determined_by_the_connector(
        u in arb_f2(5),
        v in arb_f2(5),
        n in 1u32..4,
    ) {
        let d = f2();
        let kit = ConnectorKit::new(&d, d.parse_element("a").unwrap(), d.parse_element("b").unwrap(), n).unwrap();
        let concat = Concatenation::Kit(kit.clone());
        let (w, _) = concat.apply(&u, &v);
        prop_assert!(w.word_length() <= u.word_length() + v.word_length() + concat.c());
        // Given w, u and a piece x, v = x⁻¹u⁻¹w is forced.
        for x in kit.pieces() {
            let candidates: Vec<&Element> = ball_f2(5)
                .iter()
                .filter(|v2| &(&u * x) * *v2 == w)
                .collect();
            prop_assert!(candidates.len() <= 1);
        }
        let (x, score) = select_connector(&kit, &u, &v).unwrap();
        prop_assert_eq!(&(&(&u * x) * &v), &w);
        // The score never exceeds the length of the chosen piece.
        prop_assert!(score.halves() <= 2 * x.word_length() as i64);
    }

    #[test]
    fn fibers_partition_the_pairs(u in arb_f2(3), v in arb_f2(3)) {
        let d = f2();
        let kit = ConnectorKit::new(&d, d.parse_element("a").unwrap(), d.parse_element("b").unwrap(), 2).unwrap();
        let concat = Concatenation::Kit(kit);
        let (w, _) = concat.apply(&u, &v);
        let pairs = fiber(&concat, &w, 3, ball_f2(3), None);
        prop_assert!(pairs.contains(&(u.clone(), v.clone())));
        for (u2, v2) in &pairs {
            prop_assert_eq!(&concat.apply(u2, v2).0, &w);
        }
    }

    #[test]
    fn bracket_is_ordered_when_the_hypothesis_holds(
        ratio in 2u64..6,
        noise in proptest::collection::vec(0u64..3, 12),
        eps in 1u32..4,
        shift in 0u32..3,
    ) {
        // ratio^n times a bounded wobble, nondecreasing.
        let mut counts = Vec::new();
        let mut last = 0u64;
        for (n, k) in noise.iter().enumerate() {
            let c = (ratio.pow(n as u32) * (k + 1)).max(last);
            counts.push(c);
            last = c;
        }
        let table = GrowthTable::from_counts(counts);
        let hyp = RateHypothesis::new(FunctionSpec::Const(eps as f64), FunctionSpec::Const(shift as f64));
        let est = fekete_lower_bound(&table, &hyp).unwrap();
        let check = check_hypothesis(&table, &hyp).unwrap();
        prop_assert_eq!(est.hypothesis_ok, check.holds);
        if est.hypothesis_ok {
            prop_assert!(est.lower <= est.upper + 1e-12, "[{}, {}]", est.lower, est.upper);
        }
        // The lower bound only improves with more data.
        let shorter = fekete_lower_bound(&table.truncated(8), &hyp).unwrap();
        prop_assert!(shorter.lower <= est.lower);
    }
}

#[test]
fn balls_are_closed_under_inversion() {
    for factors in [vec![2], vec![3], vec![2, 1], vec![1, 1, 1]] {
        let d = GroupDescriptor::new(factors).unwrap();
        let ball = enumerate_ball(&d, 4, Budget::default()).unwrap();
        let set: HashSet<&Element> = ball.elements.iter().collect();
        assert!(ball.elements.iter().all(|e| set.contains(&e.inverse())));
    }
}

#[test]
fn results_do_not_depend_on_worker_count() {
    let d = GroupDescriptor::new(vec![2, 1]).unwrap();
    let run = || {
        let ball = enumerate_ball(&d, 6, Budget::default()).unwrap();
        let kit = ConnectorKit::new(
            &f2(),
            f2().parse_element("a").unwrap(),
            f2().parse_element("b").unwrap(),
            2,
        )
        .unwrap();
        let report = measure_ambiguity(
            &Concatenation::Kit(kit),
            &f2(),
            None,
            4,
            4,
            2,
            Budget::default(),
        )
        .unwrap();
        (ball.elements, report)
    };
    let one = in_pool(1, run);
    for threads in [2, 4, 8] {
        assert_eq!(in_pool(threads, run), one);
    }
}
