//! Splittability: connected components of body atoms linked by shared
//! body-only variables.

use super::{LogicError, Program, Rule};

/// Body atom indices grouped into components, ordered by smallest index.
/// Atoms without body-only variables form singleton components.
pub fn body_components(rule: &Rule) -> Vec<Vec<usize>> {
    let body_only = rule.body_only_vars();
    let n = rule.body.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    let mut owner: std::collections::BTreeMap<u8, usize> = Default::default();
    for (i, atom) in rule.body.iter().enumerate() {
        for v in atom.vars().filter(|v| body_only.contains(v)) {
            match owner.get(&v) {
                Some(&j) => {
                    let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                    if a != b {
                        parent[a.max(b)] = a.min(b);
                    }
                }
                None => {
                    owner.insert(v, i);
                }
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut slot = vec![usize::MAX; n];
    for i in 0..n {
        let r = find(&mut parent, i);
        if slot[r] == usize::MAX {
            slot[r] = groups.len();
            groups.push(Vec::new());
        }
        groups[slot[r]].push(i);
    }
    groups
}

pub fn is_splittable_rule(rule: &Rule) -> bool {
    body_components(rule).len() >= 2
}

/// Only single-rule programs can be splittable.
pub fn is_splittable(program: &Program) -> bool {
    program.rules.len() == 1 && is_splittable_rule(&program.rules[0])
}

/// A body of two or more atoms with an atom that has no body-only variable.
pub fn has_head_only_atom(rule: &Rule) -> bool {
    if rule.body.len() < 2 {
        return false;
    }
    let body_only = rule.body_only_vars();
    rule.body.iter().any(|a| !a.vars().any(|v| body_only.contains(&v)))
}

/// One factor rule per component, each sharing the original head.
pub fn split_rule(rule: &Rule) -> Result<Vec<Rule>, LogicError> {
    if rule.is_recursive() {
        return Err(LogicError::Recursive(rule.to_string()));
    }
    Ok(body_components(rule)
        .into_iter()
        .map(|c| Rule::new(rule.head.clone(), c.into_iter().map(|i| rule.body[i].clone()).collect()))
        .collect())
}
