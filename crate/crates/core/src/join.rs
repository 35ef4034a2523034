//! Join stage: conjunctions of programs that each entail some negatives.
//!
//! One selection variable per pooled program and one claim variable per
//! positive example. A claim on `e` forbids selecting any program that
//! misses `e`; every negative must be missed by some selected program.
//! A found conjunction blocks all later ones whose claims stay inside its
//! coverage.

use crate::datalog::CoverageRecord;
use crate::sat::{maxsat, weighted_counter, Budget, ClauseSink, Cnf, Lit, SatError, Solver};
use fixedbitset::FixedBitSet;

/// Anything with a cost and example coverage.
pub trait Scored {
    fn cost(&self) -> usize;
    fn coverage(&self) -> &CoverageRecord;
}

impl Scored for (usize, CoverageRecord) {
    fn cost(&self) -> usize {
        self.0
    }
    fn coverage(&self) -> &CoverageRecord {
        &self.1
    }
}

/// Members are indices into the pool the conjunction was built from.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Conjunction {
    pub members: Vec<usize>,
    pub cost: usize,
    pub coverage: CoverageRecord,
}

impl Conjunction {
    pub fn from_members<S: Scored>(pool: &[S], mut members: Vec<usize>) -> Conjunction {
        members.sort_unstable();
        members.dedup();
        let mut cov = pool[members[0]].coverage().clone();
        for &m in &members[1..] {
            cov = cov.intersect(pool[m].coverage());
        }
        let cost = members.iter().map(|&m| pool[m].cost()).sum();
        Conjunction { members, cost, coverage: cov }
    }

    /// Entails at least one positive and no negative.
    pub fn is_valid(&self) -> bool {
        self.coverage.tp() > 0 && self.coverage.fp() == 0
    }
}

/// Variables of a join encoding.
#[derive(Clone, Debug)]
pub struct JoinVars {
    pub select: Vec<Lit>,
    pub claim: Vec<Lit>,
    /// Some negative is entailed by every pooled program.
    pub trivially_unsat: bool,
    pub plus_groups: usize,
    pub minus_clauses: usize,
}

/// Base encoding plus one blocking clause per coverage in `found`.
pub fn encode_join<S: Scored>(sink: &mut impl ClauseSink, pool: &[S], npos: usize, nneg: usize, found: &[FixedBitSet]) -> JoinVars {
    let select: Vec<Lit> = pool.iter().map(|_| sink.new_var()).collect();
    let claim: Vec<Lit> = (0..npos).map(|_| sink.new_var()).collect();
    let mut plus_groups = 0;
    for (e, &c) in claim.iter().enumerate() {
        plus_groups += 1;
        for (h, item) in pool.iter().enumerate() {
            if !item.coverage().pos.contains(e) {
                sink.add_clause(&[!c, !select[h]]);
            }
        }
    }
    let mut trivially_unsat = false;
    for e in 0..nneg {
        let clause: Vec<Lit> = pool
            .iter()
            .enumerate()
            .filter(|(_, item)| !item.coverage().neg.contains(e))
            .map(|(h, _)| select[h])
            .collect();
        trivially_unsat |= clause.is_empty();
        sink.add_clause(&clause);
    }
    for cov in found {
        block(sink, &claim, cov);
    }
    JoinVars { select, claim, trivially_unsat, plus_groups, minus_clauses: nneg }
}

/// Later claims must reach outside `cov`.
fn block(sink: &mut impl ClauseSink, claim: &[Lit], cov: &FixedBitSet) {
    let clause: Vec<Lit> = (0..claim.len()).filter(|e| !cov.contains(*e)).map(|e| claim[e]).collect();
    sink.add_clause(&clause);
}

/// Stand-alone CNF of the join encoding, for inspection and dumping.
pub fn build_encoding<S: Scored>(pool: &[S], npos: usize, nneg: usize, found: &[FixedBitSet]) -> (Cnf, JoinVars) {
    let mut cnf = Cnf::default();
    let vars = encode_join(&mut cnf, pool, npos, nneg, found);
    (cnf, vars)
}

/// Drop `c2` when some strictly cheaper `c1` covers a superset of its positives.
pub fn filter_subsumed(conjs: Vec<Conjunction>) -> Vec<Conjunction> {
    let keep: Vec<bool> = conjs
        .iter()
        .map(|c2| !conjs.iter().any(|c1| c1.cost < c2.cost && c2.coverage.pos.is_subset(&c1.coverage.pos)))
        .collect();
    conjs.into_iter().zip(keep).filter_map(|(c, k)| k.then_some(c)).collect()
}

/// Outcome of a join call.
#[derive(Clone, Debug, Default)]
pub struct JoinOutput {
    pub conjunctions: Vec<Conjunction>,
    /// False when the budget cut the enumeration short.
    pub complete: bool,
}

/// Greedy cover: repeatedly take the conjunction that covers the most
/// still-uncovered positives, until none adds coverage.
pub fn incomplete_join<S: Scored>(pool: &[S], npos: usize, nneg: usize, budget: Budget) -> JoinOutput {
    let mut out = JoinOutput { conjunctions: Vec::new(), complete: true };
    if pool.is_empty() {
        return out;
    }
    let mut uncovered = FixedBitSet::with_capacity(npos);
    uncovered.insert_range(..);
    while !uncovered.is_clear() {
        let found: Vec<FixedBitSet> = out.conjunctions.iter().map(|c| c.coverage.pos.clone()).collect();
        let (mut cnf, vars) = build_encoding(pool, npos, nneg, &found);
        if vars.trivially_unsat {
            break;
        }
        cnf.add_clause(&vars.select);
        let soft: Vec<Lit> = uncovered.ones().map(|e| vars.claim[e]).collect();
        let res = match maxsat(&cnf, &soft, budget) {
            Ok(Some(r)) => r,
            Ok(None) => break,
            Err(SatError::Budget) => {
                out.complete = false;
                break;
            }
        };
        if !res.optimal {
            out.complete = false;
        }
        if res.falsified == soft.len() {
            break;
        }
        let members: Vec<usize> = (0..pool.len()).filter(|&h| res.model[vars.select[h].var() as usize]).collect();
        let conj = shrink(pool, Conjunction::from_members(pool, members), &uncovered);
        uncovered.difference_with(&conj.coverage.pos);
        out.conjunctions.push(conj);
        if !res.optimal {
            break;
        }
    }
    out
}

/// Drop members, most expensive first, while the conjunction stays valid
/// and keeps its share of `uncovered`.
fn shrink<S: Scored>(pool: &[S], conj: Conjunction, uncovered: &FixedBitSet) -> Conjunction {
    let gain = |c: &Conjunction| c.coverage.pos.intersection(uncovered).count();
    let target = gain(&conj);
    let mut best = conj;
    let mut order = best.members.clone();
    order.sort_by_key(|&m| (std::cmp::Reverse(pool[m].cost()), m));
    for m in order {
        if best.members.len() == 1 {
            break;
        }
        let rest: Vec<usize> = best.members.iter().copied().filter(|&x| x != m).collect();
        let cand = Conjunction::from_members(pool, rest);
        if cand.coverage.fp() == 0 && gain(&cand) >= target {
            best = cand;
        }
    }
    best
}

/// Enumerates subset-maximal conjunctions with the cost bound raised one
/// unit at a time, so each conjunction is a cheapest way to reach its
/// coverage. Blocking state persists across calls; pass a growing pool.
#[derive(Clone, Debug, Default)]
pub struct CompleteJoin {
    found: Vec<FixedBitSet>,
    done_bound: usize,
}

impl CompleteJoin {
    pub fn new() -> CompleteJoin {
        CompleteJoin::default()
    }

    /// Highest bound fully enumerated so far.
    pub fn done_bound(&self) -> usize {
        self.done_bound
    }

    /// Coverage sets already blocked.
    pub fn found(&self) -> &[FixedBitSet] {
        &self.found
    }

    /// Enumerate new conjunctions with cost up to `bound`.
    pub fn run<S: Scored>(&mut self, pool: &[S], npos: usize, nneg: usize, bound: usize, budget: Budget) -> JoinOutput {
        let mut out = JoinOutput { conjunctions: Vec::new(), complete: true };
        if bound <= self.done_bound {
            return out;
        }
        let mut solver = Solver::new(budget);
        let vars = encode_join(&mut solver, pool, npos, nneg, &self.found);
        solver.add_clause(&vars.select);
        solver.add_clause(&vars.claim);
        let items: Vec<(Lit, u64)> = vars.select.iter().zip(pool).map(|(&l, s)| (l, s.cost() as u64)).collect();
        let counter = weighted_counter(&mut solver, &items, bound as u64 + 1);

        for b in self.done_bound + 1..=bound {
            let size: Vec<Lit> = counter.at_most(b as u64).into_iter().collect();
            loop {
                match self.next_conjunction(&mut solver, &vars, pool, &size) {
                    Ok(Some(conj)) => {
                        block(&mut solver, &vars.claim, &conj.coverage.pos);
                        self.found.push(conj.coverage.pos.clone());
                        out.conjunctions.push(conj);
                    }
                    Ok(None) => break,
                    Err(SatError::Budget) => {
                        out.complete = false;
                        return out;
                    }
                }
            }
            self.done_bound = b;
        }
        out
    }

    /// One conjunction whose claimed coverage cannot be extended.
    fn next_conjunction<S: Scored>(&self, solver: &mut Solver, vars: &JoinVars, pool: &[S], size: &[Lit]) -> Result<Option<Conjunction>, SatError> {
        if !solver.solve(size)? {
            return Ok(None);
        }
        let mut members: Vec<usize>;
        loop {
            members = (0..pool.len()).filter(|&h| solver.value(vars.select[h])).collect();
            let claimed: Vec<usize> = (0..vars.claim.len()).filter(|&e| solver.value(vars.claim[e])).collect();
            let rest: Vec<Lit> = (0..vars.claim.len()).filter(|e| !claimed.contains(e)).map(|e| vars.claim[e]).collect();
            if rest.is_empty() {
                break;
            }
            // Cover everything claimed so far and at least one more.
            let act = solver.new_var();
            let mut clause = vec![!act];
            clause.extend(rest);
            solver.add_clause(&clause);
            let mut assume: Vec<Lit> = size.to_vec();
            assume.push(act);
            assume.extend(claimed.iter().map(|&e| vars.claim[e]));
            let more = solver.solve(&assume)?;
            solver.add_clause(&[!act]);
            if !more {
                break;
            }
        }
        Ok(Some(Conjunction::from_members(pool, members)))
    }
}
