mod common;

use common::*;
use proptest::prelude::*;
use rand::Rng;
use rulejoin::combine::{combine, reify_conjunction, union_program, Unit};
use rulejoin::datalog::{Background, CoverageRecord, Examples, FactStore, Tester};
use rulejoin::join::{build_encoding, filter_subsumed, incomplete_join, CompleteJoin, Conjunction};
use rulejoin::learner::{classify, tester_for, Class};
use rulejoin::logic::{Atom, Program, Rule};
use rulejoin::sat::Budget;
use rulejoin::tasks::join_fixture;
use std::collections::BTreeSet;

fn fixture_pool() -> (Vec<(usize, CoverageRecord)>, usize, usize) {
    let fx = join_fixture().unwrap();
    let tester = tester_for(&fx.task, 1_000_000).unwrap();
    let pool = fx.programs.iter().map(|p| (p.cost(), tester.coverage(p).unwrap())).collect();
    (pool, tester.npos(), tester.nneg())
}

#[test]
fn fixture_encoding_shape() {
    let (pool, npos, nneg) = fixture_pool();
    let (_, vars) = build_encoding(&pool, npos, nneg, &[]);
    assert_eq!((vars.select.len(), vars.claim.len(), vars.plus_groups, vars.minus_clauses), (5, 2, 2, 3));
    assert!(pool.iter().all(|(_, c)| classify(c) == Class::Joinable));
    assert_eq!((pool[2].1.tp(), pool[2].1.fp()), (2, 2));
}

#[test]
fn fixture_incomplete_then_complete() {
    let (pool, npos, nneg) = fixture_pool();
    let inc = incomplete_join(&pool, npos, nneg, Budget::unlimited());
    let members: Vec<Vec<usize>> = inc.conjunctions.iter().map(|c| c.members.clone()).collect();
    assert_eq!(members, vec![vec![2, 3, 4]]);
    assert_eq!(inc.conjunctions[0].cost, 13);

    let mut cj = CompleteJoin::new();
    let out = cj.run(&pool, npos, nneg, 6, Budget::unlimited());
    let got: BTreeSet<Vec<usize>> = out.conjunctions.iter().map(|c| c.members.clone()).collect();
    assert_eq!(got, BTreeSet::from([vec![0, 2], vec![1, 2]]));
    assert!(join_fixture().is_ok());
}

#[test]
fn empty_pool_gives_nothing() {
    let pool: Vec<(usize, CoverageRecord)> = Vec::new();
    assert!(incomplete_join(&pool, 2, 2, Budget::unlimited()).conjunctions.is_empty());
    assert!(CompleteJoin::new().run(&pool, 2, 2, 10, Budget::unlimited()).conjunctions.is_empty());
}

fn random_pool(seed: u64) -> (Vec<(usize, CoverageRecord)>, usize, usize) {
    let mut r = rng(seed);
    let npos = r.gen_range(1..=5);
    let nneg = r.gen_range(1..=5);
    let n = r.gen_range(1..=6);
    let pool = (0..n)
        .map(|_| {
            let mut rec = random_record(&mut r, npos, nneg, 0.6);
            rec.pos.insert(r.gen_range(0..npos));
            rec.neg.insert(r.gen_range(0..nneg));
            (r.gen_range(2..=5), rec)
        })
        .collect();
    (pool, npos, nneg)
}

#[test]
fn complete_join_matches_oracle() {
    for seed in 0..150 {
        let (pool, npos, nneg) = random_pool(seed);
        let k = 4 + (seed as usize % 12);
        let out = CompleteJoin::new().run(&pool, npos, nneg, k, Budget::unlimited());
        let mut got: Vec<(BTreeSet<usize>, usize)> = out.conjunctions.iter().map(|c| (pos_set(&c.coverage), c.cost)).collect();
        got.sort();
        assert_eq!(got, complete_join_oracle(&pool, npos, nneg, k), "seed {seed}");
        assert!(out.conjunctions.iter().all(Conjunction::is_valid));
    }
}

#[test]
fn complete_join_resumes_across_calls() {
    for seed in 200..260 {
        let (pool, npos, nneg) = random_pool(seed);
        let mut once = CompleteJoin::new();
        let all = once.run(&pool, npos, nneg, 14, Budget::unlimited()).conjunctions;
        let mut steps = CompleteJoin::new();
        let mut parts = Vec::new();
        for k in [3, 7, 7, 14] {
            parts.extend(steps.run(&pool, npos, nneg, k, Budget::unlimited()).conjunctions);
        }
        let key = |cs: &[Conjunction]| cs.iter().map(|c| (pos_set(&c.coverage), c.cost)).collect::<BTreeSet<_>>();
        assert_eq!(key(&all), key(&parts), "seed {seed}");
        assert_eq!(steps.done_bound(), 14);
    }
}

#[test]
fn incomplete_join_rounds_are_greedy_optimal() {
    for seed in 300..450 {
        let (pool, npos, nneg) = random_pool(seed);
        let out = incomplete_join(&pool, npos, nneg, Budget::unlimited());
        let mut uncovered: BTreeSet<usize> = (0..npos).collect();
        for c in &out.conjunctions {
            assert!(c.is_valid(), "seed {seed}");
            let gain = pos_set(&c.coverage).intersection(&uncovered).count();
            assert!(gain > 0);
            assert_eq!(gain, best_gain(&pool, npos, nneg, &uncovered), "seed {seed}");
            uncovered = uncovered.difference(&pos_set(&c.coverage)).copied().collect();
        }
        assert_eq!(best_gain(&pool, npos, nneg, &uncovered), 0, "seed {seed}: stopped early");
    }
}

proptest! {
    #[test]
    fn filter_matches_pairwise_oracle(items in prop::collection::vec((1usize..8, prop::collection::vec(any::<bool>(), 4)), 0..8)) {
        let conjs: Vec<Conjunction> = items.iter().enumerate().map(|(i, (cost, pos))| {
            let mut rec = CoverageRecord::empty(4, 1);
            pos.iter().enumerate().filter(|(_, b)| **b).for_each(|(e, _)| rec.pos.insert(e));
            Conjunction { members: vec![i], cost: *cost, coverage: rec }
        }).collect();
        let kept = filter_subsumed(conjs.clone());
        let oracle: Vec<Conjunction> = conjs.iter().filter(|c2| !conjs.iter().any(|c1| c1.cost < c2.cost && pos_set(&c2.coverage).is_subset(&pos_set(&c1.coverage)))).cloned().collect();
        prop_assert_eq!(kept, oracle);
    }
}

#[test]
fn filter_examples() {
    let rec = |pos: &[usize]| {
        let mut r = CoverageRecord::empty(2, 0);
        pos.iter().for_each(|&e| r.pos.insert(e));
        r
    };
    let dominated = Conjunction { members: vec![0], cost: 6, coverage: rec(&[0]) };
    let better = Conjunction { members: vec![1], cost: 4, coverage: rec(&[0, 1]) };
    assert_eq!(filter_subsumed(vec![dominated, better.clone()]), vec![better]);
    let a = Conjunction { members: vec![0], cost: 4, coverage: rec(&[0]) };
    let b = Conjunction { members: vec![1], cost: 4, coverage: rec(&[1]) };
    assert_eq!(filter_subsumed(vec![a.clone(), b.clone()]).len(), 2);
}

#[test]
fn reified_conjunctions_intersect_coverage() {
    let mut r = rng(11);
    for _ in 0..100 {
        let consts = ["a", "b", "c", "d", "e"];
        let mut fs = FactStore::new();
        for x in consts {
            for p in ["p", "q"] {
                if r.gen_bool(0.5) {
                    fs.insert(&Atom::fact(p, &[x])).unwrap();
                }
            }
            for y in consts {
                if r.gen_bool(0.25) {
                    fs.insert(&Atom::fact("e", &[x, y])).unwrap();
                }
            }
        }
        let ex = Examples::new(consts[..3].iter().map(|c| Atom::fact("f", &[c])).collect(), consts[3..].iter().map(|c| Atom::fact("f", &[c])).collect());
        let tester = Tester::new(Background::new(fs, &[]).unwrap(), ex).unwrap();
        let n = r.gen_range(1..=3);
        let members: Vec<Program> = (0..n)
            .map(|_| {
                let body = match r.gen_range(0..3) {
                    0 => vec![vatom("p", &[0])],
                    1 => vec![vatom("e", &[0, 1]), vatom("q", &[1])],
                    _ => vec![vatom("e", &[1, 0]), vatom("p", &[1])],
                };
                let base = Rule::new(vatom("f", &[0]), body);
                if r.gen_bool(0.3) {
                    // Recursive member: reachability through e.
                    Program::new(vec![base, Rule::new(vatom("f", &[0]), vec![vatom("e", &[0, 1]), vatom("f", &[1])])])
                } else {
                    Program::new(vec![base])
                }
            })
            .collect();
        let expected = members.iter().map(|m| tester.coverage(m).unwrap()).reduce(|a, b| a.intersect(&b)).unwrap();
        let reified = reify_conjunction(&members, members[0].target);
        assert_eq!(tester.coverage(&reified).unwrap(), expected);
        assert_eq!(reified.cost(), members.iter().map(Program::cost).sum::<usize>() + if n > 1 { n + 1 } else { 0 });
        let units = [Unit::Conjunction(members.clone()), Unit::Single(members[0].clone())];
        let refs: Vec<&Unit> = units.iter().collect();
        let union = tester.coverage(&union_program(&refs, members[0].target)).unwrap();
        let mut or = expected.clone();
        or.pos.union_with(&tester.coverage(&members[0]).unwrap().pos);
        or.neg.union_with(&tester.coverage(&members[0]).unwrap().neg);
        assert_eq!(union, or);
    }
}

#[test]
fn combine_matches_exhaustive_search() {
    for seed in 0..120 {
        let mut r = rng(1000 + seed);
        let npos = r.gen_range(1..=5);
        let n = r.gen_range(1..=12);
        let units: Vec<(usize, CoverageRecord)> = (0..n).map(|_| (r.gen_range(1..=9), random_record(&mut r, npos, 0, 0.4))).collect();
        let max_size = r.gen_range(3..=30);
        // A random set is "semantically" rejected, along with its supersets.
        let banned: Vec<usize> = (0..n).filter(|_| r.gen_bool(0.2)).collect();
        let ok = |s: &[usize]| banned.is_empty() || !banned.iter().all(|b| s.contains(b));
        let out = combine(&units, npos, max_size, Budget::unlimited(), ok);
        let mut oracle: Option<usize> = None;
        for mask in 1u32..(1 << n) {
            let sel: Vec<usize> = (0..n).filter(|i| mask >> i & 1 == 1).collect();
            let cost: usize = sel.iter().map(|&i| units[i].0).sum();
            let covered = (0..npos).all(|e| sel.iter().any(|&i| units[i].1.pos.contains(e)));
            if covered && cost <= max_size && ok(&sel) {
                oracle = Some(oracle.map_or(cost, |c: usize| c.min(cost)));
            }
        }
        assert_eq!(out.best.as_ref().map(|s| s.cost), oracle, "seed {seed}");
        assert!(out.optimal);
    }
    let rec = |pos: &[usize]| {
        let mut c = CoverageRecord::empty(2, 0);
        pos.iter().for_each(|&e| c.pos.insert(e));
        c
    };
    let units = vec![(3, rec(&[0])), (3, rec(&[1])), (7, rec(&[0, 1]))];
    let out = combine(&units, 2, 20, Budget::unlimited(), |_| true);
    assert_eq!(out.best.unwrap().units, vec![0, 1]);
}
