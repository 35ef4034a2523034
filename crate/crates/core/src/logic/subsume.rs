//! Theta-subsumption by backtracking over body-atom matches.

use super::{Atom, Program, Rule, Term};

/// True iff some substitution maps `general` into a subset of `specific`
/// (head onto head, body into body).
pub fn rule_subsumes(general: &Rule, specific: &Rule) -> bool {
    if general.head.pred != specific.head.pred {
        return false;
    }
    let width = general
        .head
        .vars()
        .chain(general.body.iter().flat_map(|a| a.vars()))
        .max()
        .map_or(0, |v| v as usize + 1);
    let mut binding: Vec<Option<Term>> = vec![None; width];
    let mut trail = Vec::new();
    if !match_atom(&general.head, &specific.head, &mut binding, &mut trail) {
        return false;
    }
    // Most constrained atoms first.
    let mut order: Vec<(&Atom, Vec<&Atom>)> = general
        .body
        .iter()
        .map(|g| (g, specific.body.iter().filter(|s| s.pred == g.pred).collect::<Vec<_>>()))
        .collect();
    if order.iter().any(|(_, c)| c.is_empty()) {
        return false;
    }
    order.sort_by_key(|(_, c)| c.len());
    backtrack(&order, 0, &mut binding)
}

fn match_atom(g: &Atom, s: &Atom, binding: &mut [Option<Term>], trail: &mut Vec<u8>) -> bool {
    if g.pred != s.pred {
        return false;
    }
    for (gt, st) in g.args.iter().zip(&s.args) {
        match *gt {
            Term::Const(_) => {
                if gt != st {
                    return false;
                }
            }
            Term::Var(v) => match binding[v as usize] {
                Some(b) if b != *st => return false,
                Some(_) => {}
                None => {
                    binding[v as usize] = Some(*st);
                    trail.push(v);
                }
            },
        }
    }
    true
}

fn backtrack(order: &[(&Atom, Vec<&Atom>)], i: usize, binding: &mut [Option<Term>]) -> bool {
    let Some((g, cands)) = order.get(i) else {
        return true;
    };
    for s in cands {
        let mut trail = Vec::new();
        if match_atom(g, s, binding, &mut trail) && backtrack(order, i + 1, binding) {
            return true;
        }
        for v in trail {
            binding[v as usize] = None;
        }
    }
    false
}

/// Every rule of `specific` is subsumed by some rule of `general`.
pub fn program_subsumes(general: &Program, specific: &Program) -> bool {
    specific
        .rules
        .iter()
        .all(|s| general.rules.iter().any(|g| rule_subsumes(g, s)))
}
