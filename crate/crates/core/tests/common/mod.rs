//! Brute-force oracles shared by the integration and acceptance tests.
//! None of them call into the code paths they check.
#![allow(dead_code)]

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rulejoin::datalog::{CoverageRecord, Examples, FactStore};
use rulejoin::generator::Bias;
use rulejoin::io::Task;
use rulejoin::logic::{Atom, Pred, Rule, Sym, Term};
use std::collections::{BTreeSet, HashMap, HashSet};

pub fn vatom(p: &str, args: &[u8]) -> Atom {
    Atom::new(Pred::new(p, args.len() as u8), args.iter().map(|&v| Term::Var(v)).collect())
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn rename_atom(a: &Atom, perm: &[u8]) -> Atom {
    Atom::new(a.pred, a.args.iter().map(|t| match t {
        Term::Var(v) => Term::Var(perm[*v as usize]),
        c => *c,
    }).collect())
}

pub fn rename(r: &Rule, perm: &[u8]) -> Rule {
    Rule::new(rename_atom(&r.head, perm), r.body.iter().map(|a| rename_atom(a, perm)).collect())
}

pub fn permutations(n: usize) -> Vec<Vec<u8>> {
    if n == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for i in 0..=p.len() {
            let mut q = p.clone();
            q.insert(i, (n - 1) as u8);
            out.push(q);
        }
    }
    out
}

pub fn max_var(r: &Rule) -> usize {
    std::iter::once(&r.head).chain(&r.body).flat_map(|a| a.vars()).map(|v| v as usize + 1).max().unwrap_or(0)
}

/// Minimum (head, sorted body set) over all variable bijections.
pub fn brute_key(r: &Rule) -> (Atom, Vec<Atom>) {
    let n = max_var(r);
    permutations(n)
        .iter()
        .map(|p| {
            let q = rename(r, p);
            let body: BTreeSet<Atom> = q.body.into_iter().collect();
            (q.head, body.into_iter().collect::<Vec<_>>())
        })
        .min()
        .unwrap()
}

/// Exists a substitution mapping the head onto the head and the body into the body.
pub fn brute_subsumes(g: &Rule, s: &Rule) -> bool {
    let n = max_var(g);
    let mut targets: Vec<Term> = (0..max_var(s) as u8).map(Term::Var).collect();
    let consts: BTreeSet<Term> = std::iter::once(&s.head).chain(&s.body).flat_map(|a| a.args.iter().copied()).filter(|t| matches!(t, Term::Const(_))).collect();
    targets.extend(consts);
    if targets.is_empty() {
        targets.push(Term::Var(0));
    }
    let sbody: HashSet<&Atom> = s.body.iter().collect();
    let mut theta = vec![0usize; n];
    loop {
        let apply = |a: &Atom| Atom::new(a.pred, a.args.iter().map(|t| match t {
            Term::Var(v) => targets[theta[*v as usize]],
            c => *c,
        }).collect());
        if apply(&g.head) == s.head && g.body.iter().all(|a| sbody.contains(&apply(a))) {
            return true;
        }
        let mut i = 0;
        loop {
            if i == n {
                return false;
            }
            theta[i] += 1;
            if theta[i] < targets.len() {
                break;
            }
            theta[i] = 0;
            i += 1;
        }
    }
}

/// Some bipartition of the body into two non-empty groups shares no body-only variable.
pub fn brute_splittable(r: &Rule) -> bool {
    let head: BTreeSet<u8> = r.head.vars().collect();
    let n = r.body.len();
    if n < 2 {
        return false;
    }
    let only = |a: &Atom| -> BTreeSet<u8> { a.vars().filter(|v| !head.contains(v)).collect() };
    (1..(1u32 << (n - 1))).any(|mask| {
        let (mut a, mut b) = (BTreeSet::new(), BTreeSet::new());
        for (i, atom) in r.body.iter().enumerate() {
            if mask >> i & 1 == 1 { a.extend(only(atom)) } else { b.extend(only(atom)) }
        }
        a.is_disjoint(&b)
    })
}

pub fn ground_set(facts: &FactStore) -> HashSet<Atom> {
    facts.atoms().into_iter().collect()
}

/// Does a non-recursive rule entail the ground atom `ex`? Backtracking over facts.
pub fn rule_covers(facts: &[Atom], rule: &Rule, ex: &Atom) -> bool {
    let mut bind: Vec<Option<Sym>> = vec![None; 32];
    if rule.head.pred != ex.pred {
        return false;
    }
    for (t, e) in rule.head.args.iter().zip(&ex.args) {
        let Term::Const(c) = e else { return false };
        match t {
            Term::Const(k) if k != c => return false,
            Term::Const(_) => {}
            Term::Var(v) => match bind[*v as usize] {
                Some(b) if b != *c => return false,
                _ => bind[*v as usize] = Some(*c),
            },
        }
    }
    fn go(facts: &[Atom], body: &[Atom], bind: &mut Vec<Option<Sym>>) -> bool {
        let Some((a, rest)) = body.split_first() else { return true };
        'facts: for f in facts.iter().filter(|f| f.pred == a.pred) {
            let saved = bind.clone();
            for (t, c) in a.args.iter().zip(&f.args) {
                let Term::Const(c) = c else { continue 'facts };
                match t {
                    Term::Const(k) if k != c => {
                        *bind = saved;
                        continue 'facts;
                    }
                    Term::Const(_) => {}
                    Term::Var(v) => match bind[*v as usize] {
                        Some(b) if b != *c => {
                            *bind = saved;
                            continue 'facts;
                        }
                        _ => bind[*v as usize] = Some(*c),
                    },
                }
            }
            if go(facts, rest, bind) {
                return true;
            }
            *bind = saved;
        }
        false
    }
    go(facts, &rule.body, &mut bind)
}

pub fn rule_coverage(facts: &[Atom], rule: &Rule, ex: &Examples) -> (Vec<bool>, Vec<bool>) {
    (ex.pos.iter().map(|e| rule_covers(facts, rule, e)).collect(), ex.neg.iter().map(|e| rule_covers(facts, rule, e)).collect())
}

pub fn bits(r: &CoverageRecord) -> (Vec<bool>, Vec<bool>) {
    (r.pos.ones().fold(vec![false; r.pos.len()], |mut v, i| { v[i] = true; v }),
     r.neg.ones().fold(vec![false; r.neg.len()], |mut v, i| { v[i] = true; v }))
}

/// Naive fixpoint: every rule under every assignment of its variables over `domain`.
pub fn naive_model(facts: &BTreeSet<Atom>, rules: &[Rule], domain: &[Sym]) -> BTreeSet<Atom> {
    let mut model = facts.clone();
    loop {
        let mut added = Vec::new();
        for r in rules {
            let n = max_var(r);
            let mut idx = vec![0usize; n];
            loop {
                let ground = |a: &Atom| Atom::new(a.pred, a.args.iter().map(|t| match t {
                    Term::Var(v) => Term::Const(domain[idx[*v as usize]]),
                    c => *c,
                }).collect());
                if r.body.iter().all(|a| model.contains(&ground(a))) {
                    let h = ground(&r.head);
                    if !model.contains(&h) {
                        added.push(h);
                    }
                }
                let mut i = 0;
                while i < n {
                    idx[i] += 1;
                    if idx[i] < domain.len() {
                        break;
                    }
                    idx[i] = 0;
                    i += 1;
                }
                if i == n {
                    break;
                }
            }
        }
        if added.is_empty() {
            return model;
        }
        model.extend(added);
    }
}

/// One representative per renaming class of single-rule bodies for a bias:
/// sets of variable-only atoms, variables below `max_vars`, head fixed.
pub fn brute_rules(bias: &Bias) -> Vec<Rule> {
    let head = bias.head_atom();
    let mut atoms = Vec::new();
    for p in &bias.body {
        let n = p.arity as usize;
        let mut idx = vec![0u8; n];
        loop {
            atoms.push(Atom::new(*p, idx.iter().map(|&v| Term::Var(v)).collect()));
            let mut i = 0;
            while i < n {
                idx[i] += 1;
                if (idx[i] as usize) < bias.max_vars {
                    break;
                }
                idx[i] = 0;
                i += 1;
            }
            if i == n {
                break;
            }
        }
    }
    let ha = head.args.len();
    let tail_perms: Vec<Vec<u8>> = permutations(bias.max_vars - ha)
        .into_iter()
        .map(|p| (0..ha as u8).chain(p.into_iter().map(|x| x + ha as u8)).collect())
        .collect();
    let mut seen: HashSet<Vec<Atom>> = HashSet::new();
    let mut out = Vec::new();
    let mut chosen: Vec<usize> = Vec::new();
    fn rec(atoms: &[Atom], from: usize, left: usize, chosen: &mut Vec<usize>, visit: &mut dyn FnMut(&[usize])) {
        if !chosen.is_empty() {
            visit(chosen);
        }
        if left == 0 {
            return;
        }
        for i in from..atoms.len() {
            chosen.push(i);
            rec(atoms, i + 1, left - 1, chosen, visit);
            chosen.pop();
        }
    }
    rec(&atoms, 0, bias.max_body, &mut chosen, &mut |set: &[usize]| {
        let body: Vec<Atom> = set.iter().map(|&i| atoms[i].clone()).collect();
        let rule = Rule::new(head.clone(), body);
        let key = tail_perms
            .iter()
            .map(|p| {
                let mut b: Vec<Atom> = rename(&rule, p).body;
                b.sort();
                b
            })
            .min()
            .unwrap();
        if seen.insert(key.clone()) {
            out.push(Rule::new(head.clone(), key));
        }
    });
    out
}

pub fn pos_set(r: &CoverageRecord) -> BTreeSet<usize> {
    r.pos.ones().collect()
}

/// Complete-join oracle: bound swept upward; at each bound, the maximal
/// coverages among valid subsets not inside an earlier coverage.
pub fn complete_join_oracle(pool: &[(usize, CoverageRecord)], npos: usize, nneg: usize, k: usize) -> Vec<(BTreeSet<usize>, usize)> {
    let n = pool.len();
    let mut subsets: Vec<(BTreeSet<usize>, usize)> = Vec::new();
    for mask in 1u32..(1 << n) {
        let members: Vec<usize> = (0..n).filter(|i| mask >> i & 1 == 1).collect();
        let cost: usize = members.iter().map(|&i| pool[i].0).sum();
        let pos: BTreeSet<usize> = (0..npos).filter(|&e| members.iter().all(|&i| pool[i].1.pos.contains(e))).collect();
        let neg_ok = (0..nneg).all(|e| members.iter().any(|&i| !pool[i].1.neg.contains(e)));
        if !pos.is_empty() && neg_ok {
            subsets.push((pos, cost));
        }
    }
    let mut found: Vec<(BTreeSet<usize>, usize)> = Vec::new();
    for b in 1..=k {
        let fam: BTreeSet<BTreeSet<usize>> = subsets
            .iter()
            .filter(|(p, c)| *c <= b && !found.iter().any(|(f, _)| p.is_subset(f)))
            .map(|(p, _)| p.clone())
            .collect();
        let new: Vec<BTreeSet<usize>> = fam.iter().filter(|p| !fam.iter().any(|q| p.is_subset(q) && p != &q)).cloned().collect();
        found.extend(new.into_iter().map(|p| (p, b)));
    }
    found.sort();
    found
}

/// Greedy round oracle: the largest number of `uncovered` positives any valid subset reaches.
pub fn best_gain(pool: &[(usize, CoverageRecord)], npos: usize, nneg: usize, uncovered: &BTreeSet<usize>) -> usize {
    let n = pool.len();
    (1u32..(1 << n))
        .filter_map(|mask| {
            let members: Vec<usize> = (0..n).filter(|i| mask >> i & 1 == 1).collect();
            let neg_ok = (0..nneg).all(|e| members.iter().any(|&i| !pool[i].1.neg.contains(e)));
            neg_ok.then(|| (0..npos).filter(|e| uncovered.contains(e) && members.iter().all(|&i| pool[i].1.pos.contains(*e))).count())
        })
        .max()
        .unwrap_or(0)
}

/// Cheapest union of conjunctions of `rules` (given as coverage masks)
/// entailing every positive and no negative.
pub fn optimal_cost(costs: &[usize], masks: &[(u32, u32)], npos: usize) -> Option<usize> {
    // Cheapest conjunction per (pos, neg) mask.
    let mut best: HashMap<(u32, u32), usize> = HashMap::new();
    let mut frontier: Vec<(u32, u32)> = Vec::new();
    for (&c, &m) in costs.iter().zip(masks) {
        if m.0 != 0 && best.get(&m).map_or(true, |&b| c < b) {
            best.insert(m, c);
            frontier.push(m);
        }
    }
    while let Some(state) = frontier.pop() {
        let base = best[&state];
        for (&c, &m) in costs.iter().zip(masks) {
            let next = (state.0 & m.0, state.1 & m.1);
            if next.0 == 0 {
                continue;
            }
            let cost = base + c;
            if best.get(&next).map_or(true, |&b| cost < b) {
                best.insert(next, cost);
                frontier.push(next);
            }
        }
    }
    let units: Vec<(u32, usize)> = best.iter().filter(|((_, n), _)| *n == 0).map(|((p, _), &c)| (*p, c)).collect();
    let full = (1u32 << npos) - 1;
    let mut cover: Vec<Option<usize>> = vec![None; 1 << npos];
    cover[0] = Some(0);
    for mask in 0..=full {
        let Some(c0) = cover[mask as usize] else { continue };
        for &(p, c) in &units {
            let m = (mask | p) as usize;
            if cover[m].map_or(true, |b| c0 + c < b) {
                cover[m] = Some(c0 + c);
            }
        }
    }
    cover[full as usize]
}

/// Optimal cost for a non-recursive tiny task by exhaustive search over its
/// non-splittable safe rules.
pub fn task_optimum(task: &Task) -> (Option<usize>, usize) {
    let facts: Vec<Atom> = task.facts.atoms();
    let rules: Vec<Rule> = brute_rules(&task.bias).into_iter().filter(|r| r.is_safe() && !brute_splittable(r)).collect();
    let mut costs = Vec::new();
    let mut masks = Vec::new();
    for r in &rules {
        let (p, n) = rule_coverage(&facts, r, &task.examples);
        let pm = p.iter().enumerate().fold(0u32, |m, (i, &b)| m | (b as u32) << i);
        let nm = n.iter().enumerate().fold(0u32, |m, (i, &b)| m | (b as u32) << i);
        costs.push(r.cost());
        masks.push((pm, nm));
    }
    (optimal_cost(&costs, &masks, task.examples.pos.len()), rules.len())
}

/// Random tiny task over f/1 with unary p, q and binary e.
pub fn tiny_task(seed: u64) -> Task {
    let mut r = rng(seed);
    let consts: Vec<String> = (0..6).map(|i| format!("c{i}")).collect();
    let mut facts = FactStore::new();
    for c in &consts {
        for p in ["p", "q"] {
            if r.gen_bool(0.4) {
                facts.insert(&Atom::fact(p, &[c])).unwrap();
            }
        }
        for d in &consts {
            if r.gen_bool(0.2) {
                facts.insert(&Atom::fact("e", &[c, d])).unwrap();
            }
        }
    }
    let mut shuffled = consts.clone();
    shuffled.shuffle(&mut r);
    let npos = r.gen_range(1..=3);
    let nneg = r.gen_range(1..=3);
    let f = |c: &String| Atom::fact("f", &[c]);
    let examples = Examples::new(shuffled[..npos].iter().map(f).collect(), shuffled[npos..npos + nneg].iter().map(f).collect());
    let mut bias = Bias::new(Pred::new("f", 1), vec![Pred::new("p", 1), Pred::new("q", 1), Pred::new("e", 2)]);
    bias.max_vars = 3;
    bias.max_body = 3;
    Task { facts, bk_rules: Vec::new(), examples, bias }
}

/// Random coverage record.
pub fn random_record(r: &mut ChaCha8Rng, npos: usize, nneg: usize, density: f64) -> CoverageRecord {
    let mut rec = CoverageRecord::empty(npos, nneg);
    for i in 0..npos {
        rec.pos.set(i, r.gen_bool(density));
    }
    for i in 0..nneg {
        rec.neg.set(i, r.gen_bool(density));
    }
    rec
}
