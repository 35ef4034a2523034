mod common;

use common::*;
use proptest::prelude::*;
use rulejoin::datalog::{Background, Examples, FactStore, Tester};
use rulejoin::logic::{Atom, Program, Rule, Sym};
use std::collections::BTreeSet;

const CONSTS: [&str; 4] = ["a", "b", "c", "d"];

fn facts_strategy() -> impl Strategy<Value = FactStore> {
    (prop::collection::vec(any::<bool>(), 16), prop::collection::vec(any::<bool>(), 4)).prop_map(|(edges, marks)| {
        let mut fs = FactStore::new();
        for (i, on) in edges.iter().enumerate() {
            if *on {
                fs.insert(&Atom::fact("e", &[CONSTS[i / 4], CONSTS[i % 4]])).unwrap();
            }
        }
        for (i, on) in marks.iter().enumerate() {
            if *on {
                fs.insert(&Atom::fact("p", &[CONSTS[i]])).unwrap();
            }
        }
        fs
    })
}

/// Safe rules over e/2, p/1 and the derived t/2 (possibly recursive).
fn rules_strategy() -> impl Strategy<Value = Vec<Rule>> {
    let atom = (0..3usize, 0..3u8, 0..3u8).prop_map(|(p, x, y)| match p {
        0 => vatom("e", &[x, y]),
        1 => vatom("p", &[x]),
        _ => vatom("t", &[x, y]),
    });
    let rule = prop::collection::vec(atom, 1..=3).prop_map(|body| Rule::new(vatom("t", &[0, 1]), body)).prop_filter("safe", |r| r.is_safe());
    prop::collection::vec(rule, 1..=3)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn semi_naive_equals_naive(facts in facts_strategy(), rules in rules_strategy()) {
        let domain: Vec<Sym> = CONSTS.iter().map(|c| Sym::new(c)).collect();
        let bg = Background::new(facts.clone(), &[]).unwrap().with_constants(domain.clone());
        let model: BTreeSet<Atom> = bg.least_model(&Program::new(rules.clone())).unwrap().into_fact_store().atoms().into_iter().collect();
        let oracle = naive_model(&facts.atoms().into_iter().collect(), &rules, &domain);
        prop_assert_eq!(model, oracle);
    }

    #[test]
    fn background_rules_saturate_like_naive(facts in facts_strategy(), rules in rules_strategy()) {
        let bg = Background::new(facts.clone(), &rules).unwrap();
        let got: BTreeSet<Atom> = bg.facts().atoms().into_iter().collect();
        let domain: Vec<Sym> = bg.domain().to_vec();
        prop_assert_eq!(got, naive_model(&facts.atoms().into_iter().collect(), &rules, &domain));
    }

    #[test]
    fn coverage_matches_backtracking_oracle(facts in facts_strategy(), body in prop::collection::vec((0..2usize, 0..3u8, 0..3u8), 1..=4), extra in (0..2usize, 0..3u8, 0..3u8)) {
        let mk = |(p, x, y): (usize, u8, u8)| if p == 0 { vatom("e", &[x, y]) } else { vatom("p", &[x]) };
        let rule = Rule::new(vatom("f", &[0]), body.into_iter().map(mk).collect());
        let ex = Examples::new(
            vec![Atom::fact("f", &["a"]), Atom::fact("f", &["b"])],
            vec![Atom::fact("f", &["c"]), Atom::fact("f", &["d"])],
        );
        let tester = Tester::new(Background::new(facts.clone(), &[]).unwrap(), ex.clone()).unwrap();
        let atoms = facts.atoms();
        let cov = tester.coverage(&Program::new(vec![rule.clone()])).unwrap();
        prop_assert_eq!(bits(&cov), rule_coverage(&atoms, &rule, &ex));

        // A specialisation never covers more.
        let mut longer = rule.body.clone();
        longer.push(mk(extra));
        let narrower = tester.coverage(&Program::new(vec![Rule::new(rule.head.clone(), longer)])).unwrap();
        prop_assert!(narrower.pos.is_subset(&cov.pos));
        prop_assert!(narrower.neg.is_subset(&cov.neg));
    }
}

#[test]
fn parallel_and_sequential_batches_agree() {
    let mut fs = FactStore::new();
    for (x, y) in [("a", "b"), ("b", "c"), ("c", "d"), ("d", "a")] {
        fs.insert(&Atom::fact("e", &[x, y])).unwrap();
    }
    let ex = Examples::new(vec![Atom::fact("f", &["a"])], vec![Atom::fact("f", &["b"])]);
    let tester = Tester::new(Background::new(fs, &[]).unwrap(), ex).unwrap();
    let progs: Vec<Program> = (0..3u8)
        .flat_map(|x| (0..3u8).map(move |y| Program::new(vec![Rule::new(vatom("f", &[0]), vec![vatom("e", &[x, y]), vatom("e", &[y, 0])])])))
        .filter(|p| p.rules[0].is_safe())
        .collect();
    assert_eq!(tester.coverage_batch(&progs), tester.coverage_batch_sequential(&progs));
}
