//! Combine stage: a minimum-cost union of units covering every positive.
//!
//! A unit is a single program or a conjunction of programs. Conjunctions
//! become ordinary Datalog by renaming each member's target to a fresh
//! auxiliary predicate and adding one rule that requires all of them.

use crate::join::Scored;
use crate::logic::{Atom, Pred, Program, Rule, Sym, Term};
use crate::sat::{weighted_counter, Budget, ClauseSink, Lit, SatError, Solver};

/// Building block of a solution.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Unit {
    Single(Program),
    Conjunction(Vec<Program>),
}

impl Unit {
    /// Sum of member costs; the linking rule is not counted.
    pub fn cost(&self) -> usize {
        match self {
            Unit::Single(p) => p.cost(),
            Unit::Conjunction(ms) => ms.iter().map(Program::cost).sum(),
        }
    }

    pub fn members(&self) -> &[Program] {
        match self {
            Unit::Single(p) => std::slice::from_ref(p),
            Unit::Conjunction(ms) => ms,
        }
    }
}

fn rename_pred(atom: &Atom, from: Pred, to: Pred) -> Atom {
    if atom.pred == from {
        Atom::new(to, atom.args.clone())
    } else {
        atom.clone()
    }
}

/// Rules of a conjunction over `target`, with auxiliary predicates numbered
/// from `*next_aux`. A single member is returned unchanged.
pub fn reify(members: &[Program], target: Pred, next_aux: &mut usize) -> Vec<Rule> {
    if members.len() == 1 {
        return members[0].rules.clone();
    }
    let mut rules = Vec::new();
    let mut link_body = Vec::new();
    let vars: Vec<Term> = (0..target.arity).map(Term::Var).collect();
    for m in members {
        *next_aux += 1;
        let aux = Pred { name: Sym::new(&format!("{}_{}", target.name, next_aux)), arity: target.arity };
        for r in &m.rules {
            rules.push(Rule::new(
                rename_pred(&r.head, target, aux),
                r.body.iter().map(|a| rename_pred(a, target, aux)).collect(),
            ));
        }
        link_body.push(Atom::new(aux, vars.clone()));
    }
    rules.push(Rule::new(Atom::new(target, vars), link_body));
    rules
}

/// One program for a conjunction.
pub fn reify_conjunction(members: &[Program], target: Pred) -> Program {
    let mut next = 0;
    Program::with_target(reify(members, target, &mut next), target)
}

/// One program for a union of units, auxiliary names kept distinct.
pub fn union_program(units: &[&Unit], target: Pred) -> Program {
    let mut next = 0;
    let mut rules = Vec::new();
    for u in units {
        for r in reify(u.members(), target, &mut next) {
            if !rules.contains(&r) {
                rules.push(r);
            }
        }
    }
    Program::with_target(rules, target)
}

/// Chosen unit indices and their total cost.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Selection {
    pub units: Vec<usize>,
    pub cost: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CombineOutput {
    pub best: Option<Selection>,
    /// False when the budget stopped the search early.
    pub optimal: bool,
    pub rejected: usize,
}

/// Cheapest set of units, cost at most `max_size`, covering all `npos`
/// positives and accepted by `verify`. Rejected sets and their supersets
/// are blocked, since adding rules only grows the model.
pub fn combine<S: Scored>(units: &[S], npos: usize, max_size: usize, budget: Budget, mut verify: impl FnMut(&[usize]) -> bool) -> CombineOutput {
    let mut out = CombineOutput { best: None, optimal: true, rejected: 0 };
    if npos == 0 {
        if verify(&[]) {
            out.best = Some(Selection { units: Vec::new(), cost: 0 });
        }
        return out;
    }
    let coverable = (0..npos).all(|e| units.iter().any(|u| u.coverage().pos.contains(e)));
    if !coverable {
        return out;
    }
    let mut solver = Solver::new(budget);
    let select: Vec<Lit> = units.iter().map(|_| solver.new_var()).collect();
    for e in 0..npos {
        let clause: Vec<Lit> = units
            .iter()
            .enumerate()
            .filter(|(_, u)| u.coverage().pos.contains(e))
            .map(|(i, _)| select[i])
            .collect();
        solver.add_clause(&clause);
    }
    let items: Vec<(Lit, u64)> = select.iter().zip(units).map(|(&l, u)| (l, u.cost() as u64)).collect();
    let counter = weighted_counter(&mut solver, &items, max_size as u64 + 1);
    let mut bound = max_size;
    loop {
        let assume: Vec<Lit> = counter.at_most(bound as u64).into_iter().collect();
        match solver.solve(&assume) {
            Ok(true) => {}
            Ok(false) => break,
            Err(SatError::Budget) => {
                out.optimal = false;
                break;
            }
        }
        let chosen: Vec<usize> = (0..units.len()).filter(|&i| solver.value(select[i])).collect();
        let cost: usize = chosen.iter().map(|&i| units[i].cost()).sum();
        if verify(&chosen) {
            out.best = Some(Selection { units: chosen, cost });
            if cost == 0 {
                break;
            }
            bound = cost - 1;
        } else {
            out.rejected += 1;
            let clause: Vec<Lit> = chosen.iter().map(|&i| !select[i]).collect();
            solver.add_clause(&clause);
        }
    }
    out
}
