//! Propositional layer: literals, CNF, an incremental solver with
//! assumptions and a wall-clock budget, cardinality encodings and MaxSAT.
//!
//! Satisfiability itself is delegated to `batsat`; everything layered on
//! top (counters, MaxSAT search, join and combine encodings) lives here.

mod card;
mod maxsat;

pub use card::{encode_size_bound, weighted_counter, Counter};
pub use maxsat::{maxsat, MaxSatResult};

use batsat::{lbool, Callbacks, SolverInterface};
use std::fmt::Write as _;
use std::ops::Not;
use std::time::Instant;

/// DIMACS-style literal: variable index + 1, negative when negated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Lit(i32);

impl Lit {
    pub fn positive(var: u32) -> Lit {
        Lit(var as i32 + 1)
    }
    pub fn var(self) -> u32 {
        self.0.unsigned_abs() - 1
    }
    pub fn is_positive(self) -> bool {
        self.0 > 0
    }
    pub fn dimacs(self) -> i32 {
        self.0
    }
}

impl Not for Lit {
    type Output = Lit;
    fn not(self) -> Lit {
        Lit(-self.0)
    }
}

/// Anything that accepts fresh variables and clauses.
pub trait ClauseSink {
    fn new_var(&mut self) -> Lit;
    fn add_clause(&mut self, clause: &[Lit]);
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Cnf {
    pub num_vars: u32,
    pub clauses: Vec<Vec<Lit>>,
}

impl ClauseSink for Cnf {
    fn new_var(&mut self) -> Lit {
        self.num_vars += 1;
        Lit::positive(self.num_vars - 1)
    }
    fn add_clause(&mut self, clause: &[Lit]) {
        self.clauses.push(clause.to_vec());
    }
}

impl Cnf {
    pub fn to_dimacs(&self) -> String {
        let mut s = format!("p cnf {} {}\n", self.num_vars, self.clauses.len());
        for c in &self.clauses {
            for l in c {
                let _ = write!(s, "{} ", l.dimacs());
            }
            s.push_str("0\n");
        }
        s
    }

    /// Truth value of every clause under `model` (indexed by variable).
    pub fn satisfied_by(&self, model: &[bool]) -> bool {
        self.clauses
            .iter()
            .all(|c| c.iter().any(|l| model[l.var() as usize] == l.is_positive()))
    }
}

/// Wall-clock limit shared by all solver calls of one run.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Budget {
    pub deadline: Option<Instant>,
}

impl Budget {
    pub fn unlimited() -> Budget {
        Budget { deadline: None }
    }
    pub fn until(deadline: Instant) -> Budget {
        Budget { deadline: Some(deadline) }
    }
    pub fn expired(&self) -> bool {
        self.deadline.is_some_and(|d| Instant::now() >= d)
    }
}

#[derive(Debug, thiserror::Error, Clone, Copy, PartialEq, Eq)]
pub enum SatError {
    #[error("solver budget exhausted")]
    Budget,
}

struct Stop(Budget);

impl Callbacks for Stop {
    fn stop(&self) -> bool {
        self.0.expired()
    }
}

/// Incremental solver. Keeps a clause log so the encoding can be dumped.
pub struct Solver {
    inner: batsat::Solver<Stop>,
    vars: u32,
    inconsistent: bool,
    log: Cnf,
    budget: Budget,
}

impl Solver {
    pub fn new(budget: Budget) -> Solver {
        Solver {
            inner: batsat::Solver::new(batsat::SolverOpts::default(), Stop(budget)),
            vars: 0,
            inconsistent: false,
            log: Cnf::default(),
            budget,
        }
    }

    pub fn from_cnf(cnf: &Cnf, budget: Budget) -> Solver {
        let mut s = Solver::new(budget);
        while s.vars < cnf.num_vars {
            s.new_var();
        }
        for c in &cnf.clauses {
            s.add_clause(c);
        }
        s
    }

    fn to_batsat(l: Lit) -> batsat::Lit {
        batsat::Lit::new(batsat::Var::unsafe_from_idx(l.var()), l.is_positive())
    }

    /// True when satisfiable under `assumptions`; the model is then readable.
    pub fn solve(&mut self, assumptions: &[Lit]) -> Result<bool, SatError> {
        if self.inconsistent {
            return Ok(false);
        }
        if self.budget.expired() {
            return Err(SatError::Budget);
        }
        let assumps: Vec<batsat::Lit> = assumptions.iter().map(|&l| Self::to_batsat(l)).collect();
        let r = self.inner.solve_limited(&assumps);
        if r == lbool::TRUE {
            Ok(true)
        } else if r == lbool::FALSE {
            Ok(false)
        } else {
            Err(SatError::Budget)
        }
    }

    /// Value in the last model.
    pub fn value(&self, l: Lit) -> bool {
        let v = self.inner.value_var(batsat::Var::unsafe_from_idx(l.var()));
        (v == lbool::TRUE) == l.is_positive()
    }

    pub fn model(&self) -> Vec<bool> {
        (0..self.vars).map(|v| self.value(Lit::positive(v))).collect()
    }

    pub fn num_vars(&self) -> u32 {
        self.vars
    }

    pub fn clauses(&self) -> &Cnf {
        &self.log
    }
}

impl ClauseSink for Solver {
    fn new_var(&mut self) -> Lit {
        let v = self.inner.new_var_default();
        debug_assert_eq!(v.idx(), self.vars);
        self.vars += 1;
        self.log.num_vars = self.vars;
        Lit::positive(self.vars - 1)
    }

    fn add_clause(&mut self, clause: &[Lit]) {
        self.log.add_clause(clause);
        if clause.is_empty() {
            self.inconsistent = true;
            return;
        }
        let mut c: Vec<batsat::Lit> = clause.iter().map(|&l| Self::to_batsat(l)).collect();
        if !self.inner.add_clause_reuse(&mut c) {
            self.inconsistent = true;
        }
    }
}
