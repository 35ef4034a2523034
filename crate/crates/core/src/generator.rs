//! Enumeration of candidate programs by cost, and the constraint store.
//!
//! Rules are built level by level: every canonical body of `b + 1` atoms is
//! the canonical form of some canonical body of `b` atoms plus one atom
//! whose new variables are numbered next. Levels keep unsafe bodies too,
//! since removing an atom from a safe body can make it unsafe.

use crate::logic::{canonical_form, is_splittable_rule, program_subsumes, Atom, Pred, Program, Rule, Sym, Term};
use std::collections::{BTreeMap, BTreeSet, HashSet};

#[derive(Debug, thiserror::Error, Clone, PartialEq, Eq)]
pub enum BiasError {
    #[error("head arity {0} exceeds max_vars {1}")]
    HeadTooWide(u8, usize),
    #[error("{0} must be at least 1")]
    NonPositive(&'static str),
    #[error("max_vars above 32 is not supported")]
    TooManyVars,
    #[error("the head predicate {0} cannot also be a body predicate")]
    HeadInBody(Pred),
    #[error("constant declared for undeclared body predicate {0}")]
    UnknownConstantPred(Pred),
    #[error("constant position {1} out of range for {0}")]
    ConstantPosition(Pred, usize),
}

/// Language bias.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Bias {
    pub head: Pred,
    pub body: Vec<Pred>,
    pub max_vars: usize,
    pub max_body: usize,
    pub max_rules: usize,
    pub enable_recursion: bool,
    /// Constants allowed at `(predicate, argument position)`, 0-based.
    pub constant_pool: BTreeMap<(Pred, usize), BTreeSet<Sym>>,
    pub allow_splittable: bool,
}

impl Bias {
    pub fn new(head: Pred, body: Vec<Pred>) -> Bias {
        Bias {
            head,
            body,
            max_vars: 4,
            max_body: 3,
            max_rules: 1,
            enable_recursion: false,
            constant_pool: BTreeMap::new(),
            allow_splittable: false,
        }
    }

    pub fn validate(&self) -> Result<(), BiasError> {
        if self.max_vars == 0 {
            return Err(BiasError::NonPositive("max_vars"));
        }
        if self.max_body == 0 {
            return Err(BiasError::NonPositive("max_body"));
        }
        if self.max_rules == 0 {
            return Err(BiasError::NonPositive("max_rules"));
        }
        if self.max_vars > 32 {
            return Err(BiasError::TooManyVars);
        }
        if self.head.arity as usize > self.max_vars {
            return Err(BiasError::HeadTooWide(self.head.arity, self.max_vars));
        }
        if self.body.contains(&self.head) {
            return Err(BiasError::HeadInBody(self.head));
        }
        for &(p, pos) in self.constant_pool.keys() {
            if !self.body.contains(&p) {
                return Err(BiasError::UnknownConstantPred(p));
            }
            if pos >= p.arity as usize {
                return Err(BiasError::ConstantPosition(p, pos));
            }
        }
        Ok(())
    }

    /// Predicates that may appear in bodies.
    pub fn body_preds(&self) -> Vec<Pred> {
        let mut preds = self.body.clone();
        if self.enable_recursion {
            preds.push(self.head);
        }
        preds.sort();
        preds.dedup();
        preds
    }

    pub fn head_atom(&self) -> Atom {
        Atom::new(self.head, (0..self.head.arity).map(Term::Var).collect())
    }

    /// Constants all candidate programs may mention.
    pub fn constants(&self) -> BTreeSet<Sym> {
        self.constant_pool.values().flatten().copied().collect()
    }
}

/// Why a program entered the store. Both verdicts prune specialisations.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Verdict {
    NoPositives,
    NoNegatives,
}

/// Programs whose specialisations are pruned.
#[derive(Clone, Debug, Default)]
pub struct ConstraintStore {
    entries: Vec<(Program, Vec<u64>, Verdict)>,
}

fn pred_mask(rule: &Rule) -> u64 {
    use std::hash::{Hash, Hasher};
    let mut m = 0u64;
    for a in &rule.body {
        let mut h = std::collections::hash_map::DefaultHasher::new();
        a.pred.name.as_str().hash(&mut h);
        a.pred.arity.hash(&mut h);
        m |= 1 << (h.finish() % 64);
    }
    m
}

impl ConstraintStore {
    pub fn new() -> ConstraintStore {
        ConstraintStore::default()
    }

    pub fn add(&mut self, program: Program, verdict: Verdict) {
        let masks = program.rules.iter().map(pred_mask).collect();
        self.entries.push((program, masks, verdict));
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// True iff some stored program subsumes `h`.
    pub fn prunes(&self, h: &Program) -> bool {
        let masks: Vec<u64> = h.rules.iter().map(pred_mask).collect();
        self.entries.iter().any(|(g, gm, _)| {
            // A rule's body predicates must be a subset of the rule it subsumes.
            masks.iter().all(|&hm| gm.iter().any(|&m| m & !hm == 0)) && program_subsumes(g, h)
        })
    }
}

/// Streams candidate programs of each cost.
#[derive(Clone, Debug)]
pub struct Generator {
    bias: Bias,
    head: Atom,
    /// Canonical bodies by atom count, unsafe ones included.
    levels: Vec<Vec<Rule>>,
}

impl Generator {
    pub fn new(bias: Bias) -> Result<Generator, BiasError> {
        bias.validate()?;
        let head = bias.head_atom();
        let levels = vec![vec![Rule::new(head.clone(), Vec::new())]];
        Ok(Generator { bias, head, levels })
    }

    pub fn bias(&self) -> &Bias {
        &self.bias
    }

    /// No candidate costs more than this.
    pub fn max_cost(&self) -> usize {
        let per_rule = 1 + self.bias.max_body;
        if self.bias.enable_recursion && self.bias.max_rules >= 2 {
            per_rule * self.bias.max_rules
        } else {
            per_rule
        }
    }

    /// Canonical rules with `b` body atoms (unsafe ones included).
    pub fn level(&mut self, b: usize) -> &[Rule] {
        while self.levels.len() <= b.min(self.bias.max_body) {
            let next = self.extend(self.levels.last().unwrap());
            self.levels.push(next);
        }
        if b > self.bias.max_body {
            return &[];
        }
        &self.levels[b]
    }

    fn extend(&self, level: &[Rule]) -> Vec<Rule> {
        let preds = self.bias.body_preds();
        let chunks: Vec<&[Rule]> = level.chunks(512).collect();
        let parts = crate::par::map_ordered(&chunks, |chunk| {
            let mut seen: HashSet<Rule> = HashSet::new();
            for r in chunk.iter() {
                let nv = r.num_vars();
                for &p in &preds {
                    for args in self.arg_tuples(p, nv) {
                        let atom = Atom::new(p, args);
                        if atom == r.head || r.body.contains(&atom) {
                            continue;
                        }
                        let mut body = r.body.clone();
                        body.push(atom);
                        seen.insert(canonical_form(&Rule::new(r.head.clone(), body)));
                    }
                }
            }
            seen
        });
        let mut all: HashSet<Rule> = HashSet::new();
        for part in parts {
            all.extend(part);
        }
        let mut out: Vec<Rule> = all.into_iter().collect();
        out.sort();
        out
    }

    /// Argument tuples for `p` given `nv` variables in use; new variables
    /// are introduced in increasing order.
    fn arg_tuples(&self, p: Pred, nv: usize) -> Vec<Vec<Term>> {
        let mut out = Vec::new();
        let mut cur = Vec::with_capacity(p.arity as usize);
        self.fill_args(p, nv, &mut cur, &mut out);
        out
    }

    fn fill_args(&self, p: Pred, nv: usize, cur: &mut Vec<Term>, out: &mut Vec<Vec<Term>>) {
        let pos = cur.len();
        if pos == p.arity as usize {
            out.push(cur.clone());
            return;
        }
        let limit = (nv + 1).min(self.bias.max_vars);
        for v in 0..limit {
            cur.push(Term::Var(v as u8));
            self.fill_args(p, if v == nv { nv + 1 } else { nv }, cur, out);
            cur.pop();
        }
        if let Some(consts) = self.bias.constant_pool.get(&(p, pos)) {
            for &c in consts {
                cur.push(Term::Const(c));
                self.fill_args(p, nv, cur, out);
                cur.pop();
            }
        }
    }

    fn keep_single(&self, r: &Rule) -> bool {
        r.is_safe() && !r.is_recursive() && (self.bias.allow_splittable || !is_splittable_rule(r))
    }

    /// Safe rules with `b` body atoms split into (base, recursive).
    fn safe_rules(&mut self, b: usize) -> (Vec<Rule>, Vec<Rule>) {
        let head = self.head.clone();
        let level = self.level(b);
        let mut base = Vec::new();
        let mut rec = Vec::new();
        for r in level.iter().filter(|r| r.is_safe() && r.head == head) {
            if r.is_recursive() {
                rec.push(r.clone());
            } else {
                base.push(r.clone());
            }
        }
        (base, rec)
    }

    /// All candidates of cost `k` satisfying the syntactic filters, ordered
    /// by rule count then canonical order. The store is not consulted.
    pub fn candidates(&mut self, k: usize) -> Vec<Program> {
        let mut out: Vec<Program> = Vec::new();
        if k >= 2 && k - 1 <= self.bias.max_body {
            let level: Vec<Rule> = self.level(k - 1).to_vec();
            out.extend(level.into_iter().filter(|r| self.keep_single(r)).map(|r| Program::new(vec![r])));
        }
        if self.bias.enable_recursion && self.bias.max_rules >= 2 && k >= 4 {
            // (rule, is_recursive) for every safe rule cheap enough to fit.
            let mut pool: Vec<(Rule, bool)> = Vec::new();
            for b in 1..=self.bias.max_body.min(k - 3) {
                let (base, rec) = self.safe_rules(b);
                pool.extend(base.into_iter().map(|r| (r, false)));
                pool.extend(rec.into_iter().map(|r| (r, true)));
            }
            pool.sort();
            let mut multi = Vec::new();
            let mut chosen = Vec::new();
            combos(&pool, 0, k, self.bias.max_rules, &mut chosen, &mut multi);
            out.extend(multi);
        }
        out.sort_by(|a, b| (a.rules.len(), a).cmp(&(b.rules.len(), b)));
        out
    }

    /// Candidates of cost `k` not pruned by `store`.
    pub fn programs_of_size(&mut self, k: usize, store: &ConstraintStore) -> Vec<Program> {
        let cands = self.candidates(k);
        let keep = crate::par::map_ordered(&cands, |p| !store.prunes(p));
        cands.into_iter().zip(keep).filter_map(|(p, k)| k.then_some(p)).collect()
    }
}

/// Sets of at least two rules, at most `max_rules`, with total cost `left`,
/// containing both a recursive and a non-recursive rule.
fn combos(pool: &[(Rule, bool)], from: usize, left: usize, max_rules: usize, chosen: &mut Vec<usize>, out: &mut Vec<Program>) {
    if left == 0 {
        if chosen.len() >= 2 && chosen.iter().any(|&i| pool[i].1) && chosen.iter().any(|&i| !pool[i].1) {
            let mut rules: Vec<Rule> = chosen.iter().map(|&i| pool[i].0.clone()).collect();
            rules.sort();
            out.push(Program::new(rules));
        }
        return;
    }
    if chosen.len() == max_rules {
        return;
    }
    for i in from..pool.len() {
        let c = pool[i].0.cost();
        if c <= left {
            chosen.push(i);
            combos(pool, i + 1, left - c, max_rules, chosen, out);
            chosen.pop();
        }
    }
}
