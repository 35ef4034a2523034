//! Bottom-up Datalog evaluation and example coverage.
//!
//! Background knowledge is saturated once. Each hypothesis is then evaluated
//! semi-naively into its own overlay store on top of the shared background.
//! Head variables not bound by the body range over the constant domain.

use crate::logic::{Atom, Pred, Program, Rule, Sym, Term};
use fixedbitset::FixedBitSet;
use std::collections::{BTreeSet, HashMap, HashSet};

pub const DEFAULT_MAX_DERIVED: usize = 10_000_000;

#[derive(Debug, thiserror::Error, Clone, PartialEq, Eq)]
pub enum EvalError {
    #[error("bias violation: {0}")]
    BiasViolation(String),
    #[error("derived more than {0} atoms")]
    ResourceLimit(usize),
    #[error("expected a ground atom: {0}")]
    NonGround(String),
}

pub type Tuple = Box<[Sym]>;

/// Tuples of one predicate with a hash index per argument position.
#[derive(Clone, Debug, Default)]
pub struct Relation {
    tuples: Vec<Tuple>,
    set: HashSet<Tuple>,
    index: Vec<HashMap<Sym, Vec<u32>>>,
}

impl Relation {
    fn with_arity(arity: usize) -> Relation {
        Relation { tuples: Vec::new(), set: HashSet::new(), index: vec![HashMap::new(); arity] }
    }

    pub fn insert(&mut self, t: Tuple) -> bool {
        if self.set.contains(&t) {
            return false;
        }
        let id = self.tuples.len() as u32;
        for (pos, s) in t.iter().enumerate() {
            self.index[pos].entry(*s).or_default().push(id);
        }
        self.set.insert(t.clone());
        self.tuples.push(t);
        true
    }

    pub fn contains(&self, t: &[Sym]) -> bool {
        self.set.contains(t)
    }

    pub fn len(&self) -> usize {
        self.tuples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tuples.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Tuple> {
        self.tuples.iter()
    }

    fn lookup(&self, pos: usize, s: Sym) -> &[u32] {
        self.index[pos].get(&s).map_or(&[], |v| v.as_slice())
    }
}

/// Ground atoms grouped by predicate.
#[derive(Clone, Debug, Default)]
pub struct FactStore {
    rels: HashMap<Pred, Relation>,
}

pub(crate) fn ground_tuple(atom: &Atom) -> Result<Tuple, EvalError> {
    atom.args
        .iter()
        .map(|t| match t {
            Term::Const(c) => Ok(*c),
            Term::Var(_) => Err(EvalError::NonGround(atom.to_string())),
        })
        .collect()
}

impl FactStore {
    pub fn new() -> FactStore {
        FactStore::default()
    }

    pub fn insert(&mut self, atom: &Atom) -> Result<bool, EvalError> {
        let t = ground_tuple(atom)?;
        Ok(self.insert_tuple(atom.pred, t))
    }

    pub fn insert_tuple(&mut self, pred: Pred, t: Tuple) -> bool {
        self.rels
            .entry(pred)
            .or_insert_with(|| Relation::with_arity(pred.arity as usize))
            .insert(t)
    }

    pub fn contains(&self, pred: Pred, t: &[Sym]) -> bool {
        self.rels.get(&pred).is_some_and(|r| r.contains(t))
    }

    pub fn contains_atom(&self, atom: &Atom) -> bool {
        ground_tuple(atom).is_ok_and(|t| self.contains(atom.pred, &t))
    }

    pub fn relation(&self, pred: Pred) -> Option<&Relation> {
        self.rels.get(&pred)
    }

    pub fn preds(&self) -> BTreeSet<Pred> {
        self.rels.keys().copied().collect()
    }

    pub fn len(&self) -> usize {
        self.rels.values().map(Relation::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn constants(&self) -> BTreeSet<Sym> {
        self.rels.values().flat_map(|r| r.iter().flat_map(|t| t.iter().copied())).collect()
    }

    /// All atoms, sorted.
    pub fn atoms(&self) -> Vec<Atom> {
        let mut out: Vec<Atom> = self
            .rels
            .iter()
            .flat_map(|(p, r)| r.iter().map(move |t| Atom::new(*p, t.iter().map(|s| Term::Const(*s)).collect())))
            .collect();
        out.sort();
        out
    }

    /// Sorted atoms of one predicate.
    pub fn restricted(&self, pred: Pred) -> Vec<Atom> {
        let mut out: Vec<Atom> = self
            .relation(pred)
            .into_iter()
            .flat_map(|r| r.iter().map(|t| Atom::new(pred, t.iter().map(|s| Term::Const(*s)).collect())))
            .collect();
        out.sort();
        out
    }

    fn merge(&mut self, other: FactStore) {
        for (p, r) in other.rels {
            for t in r.tuples {
                self.insert_tuple(p, t);
            }
        }
    }
}

/// Saturated background knowledge plus the constant domain.
#[derive(Clone, Debug)]
pub struct Background {
    facts: FactStore,
    rule_body_preds: BTreeSet<Pred>,
    domain: Vec<Sym>,
    max_derived: usize,
}

impl Background {
    /// Saturates `rules` over `facts`. The domain starts as the constants of
    /// the resulting model and of the rules.
    pub fn new(facts: FactStore, rules: &[Rule]) -> Result<Background, EvalError> {
        let mut domain: BTreeSet<Sym> = facts.constants();
        for r in rules {
            for a in std::iter::once(&r.head).chain(&r.body) {
                domain.extend(a.args.iter().filter_map(|t| match t {
                    Term::Const(c) => Some(*c),
                    _ => None,
                }));
            }
        }
        let mut bg = Background {
            facts: FactStore::new(),
            rule_body_preds: rules.iter().flat_map(|r| r.body.iter().map(|a| a.pred)).collect(),
            domain: domain.into_iter().collect(),
            max_derived: DEFAULT_MAX_DERIVED,
        };
        let derived = saturate(rules, &facts, &bg.domain, bg.max_derived)?;
        bg.facts = facts;
        bg.facts.merge(derived);
        Ok(bg)
    }

    pub fn with_constants(mut self, extra: impl IntoIterator<Item = Sym>) -> Background {
        let mut d: BTreeSet<Sym> = self.domain.into_iter().collect();
        d.extend(extra);
        self.domain = d.into_iter().collect();
        self
    }

    pub fn with_max_derived(mut self, limit: usize) -> Background {
        self.max_derived = limit;
        self
    }

    pub fn facts(&self) -> &FactStore {
        &self.facts
    }

    pub fn domain(&self) -> &[Sym] {
        &self.domain
    }

    /// Head predicates of `program` must not feed background rules.
    pub fn check(&self, program: &Program) -> Result<(), EvalError> {
        for p in program.head_preds() {
            if self.rule_body_preds.contains(&p) {
                return Err(EvalError::BiasViolation(format!("{p} is defined by the hypothesis and used by a background rule")));
            }
        }
        Ok(())
    }

    /// Least model of `program` over the background, as an overlay.
    pub fn least_model(&self, program: &Program) -> Result<Model<'_>, EvalError> {
        self.check(program)?;
        let derived = saturate(&program.rules, &self.facts, &self.domain, self.max_derived)?;
        Ok(Model { base: &self.facts, derived })
    }
}

/// Background facts plus facts derived by one hypothesis.
#[derive(Debug)]
pub struct Model<'a> {
    base: &'a FactStore,
    derived: FactStore,
}

impl Model<'_> {
    pub fn contains(&self, pred: Pred, t: &[Sym]) -> bool {
        self.derived.contains(pred, t) || self.base.contains(pred, t)
    }

    pub fn contains_atom(&self, atom: &Atom) -> bool {
        self.derived.contains_atom(atom) || self.base.contains_atom(atom)
    }

    pub fn derived(&self) -> &FactStore {
        &self.derived
    }

    /// Atoms of `pred` in the full model, sorted.
    pub fn restricted(&self, pred: Pred) -> Vec<Atom> {
        let mut out = self.derived.restricted(pred);
        out.extend(self.base.restricted(pred));
        out.sort();
        out.dedup();
        out
    }

    pub fn into_fact_store(self) -> FactStore {
        let mut all = self.base.clone();
        all.merge(self.derived);
        all
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Src {
    Base,
    Full,
    Delta,
}

/// Semi-naive fixpoint of `rules` over `base`. Returns facts of the rule
/// head predicates (including any already present in `base`).
fn saturate(rules: &[Rule], base: &FactStore, domain: &[Sym], limit: usize) -> Result<FactStore, EvalError> {
    let idb: BTreeSet<Pred> = rules.iter().map(|r| r.head.pred).collect();
    let mut full = FactStore::new();
    for p in &idb {
        if let Some(rel) = base.relation(*p) {
            for t in rel.iter() {
                full.insert_tuple(*p, t.clone());
            }
        }
    }
    let mut new = FactStore::new();
    let empty = FactStore::new();
    for rule in rules {
        let srcs: Vec<Src> = rule.body.iter().map(|a| if idb.contains(&a.pred) { Src::Full } else { Src::Base }).collect();
        fire(rule, &srcs, base, &full, &empty, domain, &mut |p, t| {
            if !full.contains(p, &t) {
                new.insert_tuple(p, t);
            }
        });
        if full.len() + new.len() > limit {
            return Err(EvalError::ResourceLimit(limit));
        }
    }
    while !new.is_empty() {
        let delta = std::mem::take(&mut new);
        for (p, r) in &delta.rels {
            for t in r.iter() {
                full.insert_tuple(*p, t.clone());
            }
        }
        if full.len() > limit {
            return Err(EvalError::ResourceLimit(limit));
        }
        for rule in rules {
            for (i, atom) in rule.body.iter().enumerate() {
                if !idb.contains(&atom.pred) || delta.relation(atom.pred).is_none() {
                    continue;
                }
                let srcs: Vec<Src> = rule
                    .body
                    .iter()
                    .enumerate()
                    .map(|(j, a)| {
                        if j == i {
                            Src::Delta
                        } else if idb.contains(&a.pred) {
                            Src::Full
                        } else {
                            Src::Base
                        }
                    })
                    .collect();
                fire(rule, &srcs, base, &full, &delta, domain, &mut |p, t| {
                    if !full.contains(p, &t) {
                        new.insert_tuple(p, t);
                    }
                });
                if full.len() + new.len() > limit {
                    return Err(EvalError::ResourceLimit(limit));
                }
            }
        }
    }
    Ok(full)
}

/// Enumerate all head instances derivable by `rule` with each body atom
/// drawn from its source store.
fn fire(
    rule: &Rule,
    srcs: &[Src],
    base: &FactStore,
    full: &FactStore,
    delta: &FactStore,
    domain: &[Sym],
    emit: &mut dyn FnMut(Pred, Tuple),
) {
    let rels: Vec<Option<&Relation>> = rule
        .body
        .iter()
        .zip(srcs)
        .map(|(a, s)| match s {
            Src::Base => base.relation(a.pred),
            Src::Full => full.relation(a.pred),
            Src::Delta => delta.relation(a.pred),
        })
        .collect();
    if rels.iter().any(|r| r.is_none_or(|r| r.is_empty())) {
        return;
    }
    let rels: Vec<&Relation> = rels.into_iter().map(Option::unwrap).collect();
    let width = rule
        .head
        .vars()
        .chain(rule.body.iter().flat_map(|a| a.vars()))
        .max()
        .map_or(0, |v| v as usize + 1);

    // Greedy join order: delta atom first, then most-bound atoms.
    let n = rule.body.len();
    let mut order = Vec::with_capacity(n);
    let mut bound = vec![false; width];
    let mut placed = vec![false; n];
    if let Some(d) = srcs.iter().position(|s| *s == Src::Delta) {
        order.push(d);
        placed[d] = true;
        rule.body[d].vars().for_each(|v| bound[v as usize] = true);
    }
    while order.len() < n {
        let pick = (0..n)
            .filter(|&j| !placed[j])
            .max_by_key(|&j| {
                let b = rule.body[j]
                    .args
                    .iter()
                    .filter(|t| match t {
                        Term::Const(_) => true,
                        Term::Var(v) => bound[*v as usize],
                    })
                    .count();
                (b, std::cmp::Reverse(rels[j].len()), std::cmp::Reverse(j))
            })
            .unwrap();
        order.push(pick);
        placed[pick] = true;
        rule.body[pick].vars().for_each(|v| bound[v as usize] = true);
    }

    let mut binding: Vec<Option<Sym>> = vec![None; width];
    join(rule, &order, &rels, 0, &mut binding, domain, emit);
}

fn join(
    rule: &Rule,
    order: &[usize],
    rels: &[&Relation],
    step: usize,
    binding: &mut Vec<Option<Sym>>,
    domain: &[Sym],
    emit: &mut dyn FnMut(Pred, Tuple),
) {
    if step == order.len() {
        emit_head(rule, binding, domain, emit);
        return;
    }
    let j = order[step];
    let atom = &rule.body[j];
    let rel = rels[j];
    // Pick the bound position with the smallest bucket.
    let mut probe: Option<&[u32]> = None;
    for (pos, t) in atom.args.iter().enumerate() {
        let s = match t {
            Term::Const(c) => Some(*c),
            Term::Var(v) => binding[*v as usize],
        };
        if let Some(s) = s {
            let ids = rel.lookup(pos, s);
            if probe.is_none_or(|p| ids.len() < p.len()) {
                probe = Some(ids);
            }
        }
    }
    let mut try_tuple = |tuple: &Tuple, binding: &mut Vec<Option<Sym>>| {
        let mut fresh: [u8; 16] = [0; 16];
        let mut nfresh = 0;
        let mut ok = true;
        for (t, s) in atom.args.iter().zip(tuple.iter()) {
            match t {
                Term::Const(c) => {
                    if c != s {
                        ok = false;
                        break;
                    }
                }
                Term::Var(v) => match binding[*v as usize] {
                    Some(b) => {
                        if b != *s {
                            ok = false;
                            break;
                        }
                    }
                    None => {
                        binding[*v as usize] = Some(*s);
                        fresh[nfresh] = *v;
                        nfresh += 1;
                    }
                },
            }
        }
        if ok {
            join(rule, order, rels, step + 1, binding, domain, emit);
        }
        for &v in &fresh[..nfresh] {
            binding[v as usize] = None;
        }
    };
    match probe {
        Some(ids) => {
            for &id in ids {
                try_tuple(&rel.tuples[id as usize], binding);
            }
        }
        None => {
            for tuple in &rel.tuples {
                try_tuple(tuple, binding);
            }
        }
    }
}

fn emit_head(rule: &Rule, binding: &mut Vec<Option<Sym>>, domain: &[Sym], emit: &mut dyn FnMut(Pred, Tuple)) {
    let unbound: Vec<u8> = {
        let mut u: Vec<u8> = rule.head.vars().filter(|v| binding[*v as usize].is_none()).collect();
        u.sort_unstable();
        u.dedup();
        u
    };
    if unbound.is_empty() {
        let t: Tuple = rule
            .head
            .args
            .iter()
            .map(|t| match t {
                Term::Const(c) => *c,
                Term::Var(v) => binding[*v as usize].unwrap(),
            })
            .collect();
        emit(rule.head.pred, t);
        return;
    }
    // Unsafe head variable: range over the domain.
    let v = unbound[0];
    for &c in domain {
        binding[v as usize] = Some(c);
        emit_head(rule, binding, domain, emit);
    }
    binding[v as usize] = None;
}

/// Positive and negative examples of one target predicate.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Examples {
    pub pos: Vec<Atom>,
    pub neg: Vec<Atom>,
}

impl Examples {
    pub fn new(pos: Vec<Atom>, neg: Vec<Atom>) -> Examples {
        Examples { pos, neg }
    }

    pub fn target(&self) -> Option<Pred> {
        self.pos.first().or(self.neg.first()).map(|a| a.pred)
    }

    pub fn constants(&self) -> BTreeSet<Sym> {
        self.pos
            .iter()
            .chain(&self.neg)
            .flat_map(|a| a.args.iter())
            .filter_map(|t| match t {
                Term::Const(c) => Some(*c),
                _ => None,
            })
            .collect()
    }
}

/// Which examples a program entails.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct CoverageRecord {
    pub pos: FixedBitSet,
    pub neg: FixedBitSet,
}

impl CoverageRecord {
    pub fn tp(&self) -> usize {
        self.pos.count_ones(..)
    }
    pub fn fp(&self) -> usize {
        self.neg.count_ones(..)
    }
    pub fn fn_(&self) -> usize {
        self.pos.len() - self.tp()
    }
    pub fn tn(&self) -> usize {
        self.neg.len() - self.fp()
    }

    /// Coverage of a conjunction: entailed by every member.
    pub fn intersect(&self, other: &CoverageRecord) -> CoverageRecord {
        let mut pos = self.pos.clone();
        pos.intersect_with(&other.pos);
        let mut neg = self.neg.clone();
        neg.intersect_with(&other.neg);
        CoverageRecord { pos, neg }
    }

    pub fn empty(npos: usize, nneg: usize) -> CoverageRecord {
        CoverageRecord { pos: FixedBitSet::with_capacity(npos), neg: FixedBitSet::with_capacity(nneg) }
    }
}

/// Examples plus background: tests hypotheses.
#[derive(Clone, Debug)]
pub struct Tester {
    pub background: Background,
    pub examples: Examples,
    pos_tuples: Vec<Tuple>,
    neg_tuples: Vec<Tuple>,
}

impl Tester {
    pub fn new(background: Background, examples: Examples) -> Result<Tester, EvalError> {
        let background = background.with_constants(examples.constants());
        let pos_tuples = examples.pos.iter().map(ground_tuple).collect::<Result<_, _>>()?;
        let neg_tuples = examples.neg.iter().map(ground_tuple).collect::<Result<_, _>>()?;
        Ok(Tester { background, examples, pos_tuples, neg_tuples })
    }

    pub fn coverage(&self, program: &Program) -> Result<CoverageRecord, EvalError> {
        let model = self.background.least_model(program)?;
        let target = self.examples.target().unwrap_or(program.target);
        let mut rec = CoverageRecord::empty(self.pos_tuples.len(), self.neg_tuples.len());
        for (i, t) in self.pos_tuples.iter().enumerate() {
            rec.pos.set(i, model.contains(target, t));
        }
        for (i, t) in self.neg_tuples.iter().enumerate() {
            rec.neg.set(i, model.contains(target, t));
        }
        Ok(rec)
    }

    /// Coverage of many programs; parallel with the `parallel` feature.
    pub fn coverage_batch(&self, programs: &[Program]) -> Vec<Result<CoverageRecord, EvalError>> {
        crate::par::map_ordered(programs, |p| self.coverage(p))
    }

    pub fn coverage_batch_sequential(&self, programs: &[Program]) -> Vec<Result<CoverageRecord, EvalError>> {
        crate::par::map_sequential(programs, |p| self.coverage(p))
    }

    pub fn npos(&self) -> usize {
        self.pos_tuples.len()
    }

    pub fn nneg(&self) -> usize {
        self.neg_tuples.len()
    }
}
