//! Canonical representatives of alpha-equivalence classes of rules.
//!
//! Head variables are numbered by first occurrence in the head. Body-only
//! variables are numbered by first occurrence along the body ordering whose
//! renamed atom sequence is lexicographically least; ties branch.

use super::{Atom, LogicError, Rule, Term};

const UNMAPPED: u8 = u8::MAX;

/// Canonical form of a safe rule. Unsafe rules are rejected.
pub fn canonicalize(rule: &Rule) -> Result<Rule, LogicError> {
    if !rule.is_safe() {
        return Err(LogicError::Unsafe(rule.to_string()));
    }
    Ok(canonical_form(rule))
}

/// Canonical form without the safety check.
pub fn canonical_form(rule: &Rule) -> Rule {
    let max_var = rule
        .head
        .vars()
        .chain(rule.body.iter().flat_map(|a| a.vars()))
        .max()
        .map_or(0, |v| v as usize + 1);
    let mut map = vec![UNMAPPED; max_var];
    let mut next = 0u8;
    let head_args = rule
        .head
        .args
        .iter()
        .map(|t| match *t {
            Term::Var(v) => {
                if map[v as usize] == UNMAPPED {
                    map[v as usize] = next;
                    next += 1;
                }
                Term::Var(map[v as usize])
            }
            c => c,
        })
        .collect();
    let head = Atom::new(rule.head.pred, head_args);

    let mut body: Vec<&Atom> = rule.body.iter().collect();
    body.sort();
    body.dedup();

    let mut search = Search { atoms: body, best: None, prefix: Vec::new() };
    let mut used = vec![false; search.atoms.len()];
    search.run(&mut map, next, &mut used);
    let mut best = search.best.unwrap_or_default();
    best.sort();
    Rule::new(head, best)
}

struct Search<'a> {
    atoms: Vec<&'a Atom>,
    best: Option<Vec<Atom>>,
    prefix: Vec<Atom>,
}

/// Rename `atom` under `map`, numbering unmapped variables from `next` in order of appearance.
fn rename(atom: &Atom, map: &[u8], next: u8) -> (Atom, Vec<u8>) {
    let mut fresh: Vec<u8> = Vec::new();
    let args = atom
        .args
        .iter()
        .map(|t| match *t {
            Term::Var(v) => {
                let m = map[v as usize];
                if m != UNMAPPED {
                    Term::Var(m)
                } else {
                    let pos = match fresh.iter().position(|&f| f == v) {
                        Some(p) => p,
                        None => {
                            fresh.push(v);
                            fresh.len() - 1
                        }
                    };
                    Term::Var(next + pos as u8)
                }
            }
            c => c,
        })
        .collect();
    (Atom::new(atom.pred, args), fresh)
}

impl Search<'_> {
    fn run(&mut self, map: &mut [u8], next: u8, used: &mut [bool]) {
        let depth = self.prefix.len();
        if depth == self.atoms.len() {
            let better = match &self.best {
                None => true,
                Some(b) => self.prefix < *b,
            };
            if better {
                self.best = Some(self.prefix.clone());
            }
            return;
        }
        let mut min: Option<Atom> = None;
        let mut branches: Vec<(usize, Vec<u8>)> = Vec::new();
        for i in 0..self.atoms.len() {
            if used[i] {
                continue;
            }
            let (renamed, fresh) = rename(self.atoms[i], map, next);
            match &min {
                Some(m) if renamed > *m => {}
                Some(m) if renamed == *m => branches.push((i, fresh)),
                _ => {
                    min = Some(renamed);
                    branches.clear();
                    branches.push((i, fresh));
                }
            }
        }
        let key = min.expect("an unused atom remains");
        // Compare against the incumbent at this depth; the prefix before it is equal.
        if let Some(b) = &self.best {
            if self.prefix.as_slice() == &b[..depth] && key > b[depth] {
                return;
            }
        }
        // No fresh variables means the choice is forced: renaming is injective.
        if branches[0].1.is_empty() {
            branches.truncate(1);
        }
        for (i, fresh) in branches {
            for (k, &v) in fresh.iter().enumerate() {
                map[v as usize] = next + k as u8;
            }
            used[i] = true;
            self.prefix.push(key.clone());
            self.run(map, next + fresh.len() as u8, used);
            self.prefix.pop();
            used[i] = false;
            for &v in &fresh {
                map[v as usize] = UNMAPPED;
            }
        }
    }
}
