//! Function-free first-order terms, atoms, rules and programs.
//!
//! Symbols are interned once and compared by pointer; ordering is by the
//! underlying string so canonical forms never depend on interning order.

mod canon;
mod split;
mod subsume;

pub use canon::{canonical_form, canonicalize};
pub use split::{body_components, has_head_only_atom, is_splittable, is_splittable_rule, split_rule};
pub use subsume::{program_subsumes, rule_subsumes};

use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::{Mutex, OnceLock};

#[derive(Debug, thiserror::Error, Clone, PartialEq, Eq)]
pub enum LogicError {
    #[error("unsafe rule (head variable missing from body): {0}")]
    Unsafe(String),
    #[error("recursive rule cannot be split: {0}")]
    Recursive(String),
}

/// Interned symbol: predicate names and constants.
#[derive(Clone, Copy)]
pub struct Sym(&'static str);

impl Sym {
    pub fn new(s: &str) -> Sym {
        static POOL: OnceLock<Mutex<HashSet<&'static str>>> = OnceLock::new();
        let mut pool = POOL.get_or_init(Default::default).lock().unwrap();
        if let Some(&existing) = pool.get(s) {
            return Sym(existing);
        }
        let leaked: &'static str = Box::leak(s.to_owned().into_boxed_str());
        pool.insert(leaked);
        Sym(leaked)
    }

    pub fn as_str(self) -> &'static str {
        self.0
    }
}

impl PartialEq for Sym {
    fn eq(&self, other: &Self) -> bool {
        std::ptr::eq(self.0.as_ptr(), other.0.as_ptr())
    }
}
impl Eq for Sym {}

impl Hash for Sym {
    fn hash<H: Hasher>(&self, state: &mut H) {
        (self.0.as_ptr() as usize).hash(state)
    }
}

impl PartialOrd for Sym {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Sym {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        if self == other {
            std::cmp::Ordering::Equal
        } else {
            self.0.cmp(other.0)
        }
    }
}

impl fmt::Debug for Sym {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.0)
    }
}
impl fmt::Display for Sym {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Pred {
    pub name: Sym,
    pub arity: u8,
}

impl Pred {
    pub fn new(name: &str, arity: u8) -> Pred {
        Pred { name: Sym::new(name), arity }
    }
}

impl fmt::Display for Pred {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.name, self.arity)
    }
}

/// Variables sort before constants.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Var(u8),
    Const(Sym),
}

impl Term {
    pub fn constant(s: &str) -> Term {
        Term::Const(Sym::new(s))
    }
    pub fn as_var(self) -> Option<u8> {
        match self {
            Term::Var(v) => Some(v),
            Term::Const(_) => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Atom {
    pub pred: Pred,
    pub args: Vec<Term>,
}

impl Atom {
    pub fn new(pred: Pred, args: Vec<Term>) -> Atom {
        debug_assert_eq!(pred.arity as usize, args.len());
        Atom { pred, args }
    }

    /// Ground atom from constant names.
    pub fn fact(name: &str, consts: &[&str]) -> Atom {
        Atom::new(
            Pred::new(name, consts.len() as u8),
            consts.iter().map(|c| Term::constant(c)).collect(),
        )
    }

    pub fn is_ground(&self) -> bool {
        self.args.iter().all(|t| matches!(t, Term::Const(_)))
    }

    pub fn vars(&self) -> impl Iterator<Item = u8> + '_ {
        self.args.iter().filter_map(|t| t.as_var())
    }
}

pub(crate) fn var_name(v: u8) -> String {
    if v < 26 {
        ((b'A' + v) as char).to_string()
    } else {
        format!("V{v}")
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.pred.name)?;
        if self.args.is_empty() {
            return Ok(());
        }
        f.write_str("(")?;
        for (i, t) in self.args.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            match t {
                Term::Var(v) => f.write_str(&var_name(*v))?,
                Term::Const(c) => write!(f, "{c}")?,
            }
        }
        f.write_str(")")
    }
}

/// Definite clause `head :- body`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Rule {
    pub head: Atom,
    pub body: Vec<Atom>,
}

impl Rule {
    pub fn new(head: Atom, body: Vec<Atom>) -> Rule {
        Rule { head, body }
    }

    /// Literal count, head included.
    pub fn cost(&self) -> usize {
        1 + self.body.len()
    }

    pub fn head_vars(&self) -> BTreeSet<u8> {
        self.head.vars().collect()
    }

    pub fn body_vars(&self) -> BTreeSet<u8> {
        self.body.iter().flat_map(|a| a.vars()).collect()
    }

    pub fn body_only_vars(&self) -> BTreeSet<u8> {
        let head = self.head_vars();
        self.body_vars().into_iter().filter(|v| !head.contains(v)).collect()
    }

    pub fn num_vars(&self) -> usize {
        let mut all = self.head_vars();
        all.extend(self.body_vars());
        all.len()
    }

    pub fn is_safe(&self) -> bool {
        let body = self.body_vars();
        self.head.vars().all(|v| body.contains(&v))
    }

    /// True when the head predicate occurs in the body.
    pub fn is_recursive(&self) -> bool {
        self.body.iter().any(|a| a.pred == self.head.pred)
    }

    pub fn uses_pred(&self, p: Pred) -> bool {
        self.body.iter().any(|a| a.pred == p)
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.head)?;
        if !self.body.is_empty() {
            f.write_str(" :- ")?;
            for (i, a) in self.body.iter().enumerate() {
                if i > 0 {
                    f.write_str(", ")?;
                }
                write!(f, "{a}")?;
            }
        }
        f.write_str(".")
    }
}

/// A set of rules defining `target` (auxiliary predicates allowed).
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Program {
    pub rules: Vec<Rule>,
    pub target: Pred,
}

impl Program {
    /// Target is taken from the first rule's head.
    pub fn new(rules: Vec<Rule>) -> Program {
        let target = rules.first().expect("program needs at least one rule").head.pred;
        Program { rules, target }
    }

    pub fn with_target(rules: Vec<Rule>, target: Pred) -> Program {
        Program { rules, target }
    }

    pub fn cost(&self) -> usize {
        self.rules.iter().map(Rule::cost).sum()
    }

    pub fn head_preds(&self) -> BTreeSet<Pred> {
        self.rules.iter().map(|r| r.head.pred).collect()
    }

    /// Some head predicate appears in some body.
    pub fn is_recursive(&self) -> bool {
        let heads = self.head_preds();
        self.rules.iter().any(|r| r.body.iter().any(|a| heads.contains(&a.pred)))
    }

    /// At least two rules and no head predicate used in any body.
    pub fn is_separable(&self) -> bool {
        self.rules.len() >= 2 && !self.is_recursive()
    }

    /// Canonicalize every rule, sort and deduplicate.
    pub fn canonical(&self) -> Result<Program, LogicError> {
        let mut rules = self.rules.iter().map(canonicalize).collect::<Result<Vec<_>, _>>()?;
        rules.sort();
        rules.dedup();
        Ok(Program { rules, target: self.target })
    }
}

impl fmt::Display for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, r) in self.rules.iter().enumerate() {
            if i > 0 {
                f.write_str("\n")?;
            }
            write!(f, "{r}")?;
        }
        Ok(())
    }
}
