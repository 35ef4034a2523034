//! The generate / test / join / combine / constrain loop.

use crate::combine::{combine, union_program, Unit};
use crate::datalog::{Background, CoverageRecord, EvalError, Examples, FactStore, Tester, DEFAULT_MAX_DERIVED};
use crate::generator::{BiasError, ConstraintStore, Generator, Verdict};
use crate::io::Task;
use crate::join::{build_encoding, filter_subsumed, incomplete_join, CompleteJoin, Conjunction, Scored};
use crate::logic::{is_splittable, Program, Rule};
use crate::sat::Budget;
use serde::Serialize;
use std::collections::HashSet;
use std::path::PathBuf;
use std::time::{Duration, Instant};

#[derive(Clone, Debug)]
pub struct LearnOptions {
    pub timeout: Option<Duration>,
    /// Initial bound on solution cost.
    pub max_size: Option<usize>,
    pub disable_join: bool,
    pub allow_splittable: bool,
    /// Turns off the constraint store and the subsumed-conjunction filter.
    pub disable_pruning: bool,
    pub seed: u64,
    /// Programs tested between join/combine rounds.
    pub batch: usize,
    pub max_derived: usize,
    /// Write every join encoding here as DIMACS.
    pub dump_cnf: Option<PathBuf>,
}

impl Default for LearnOptions {
    fn default() -> LearnOptions {
        LearnOptions {
            timeout: None,
            max_size: None,
            disable_join: false,
            allow_splittable: false,
            disable_pruning: false,
            seed: 0,
            batch: 2048,
            max_derived: DEFAULT_MAX_DERIVED,
            dump_cnf: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Class {
    Solution,
    Combinable,
    Joinable,
    Useless,
}

pub fn classify(cov: &CoverageRecord) -> Class {
    if cov.fn_() == 0 && cov.fp() == 0 {
        Class::Solution
    } else if cov.tp() == 0 {
        Class::Useless
    } else if cov.fp() == 0 {
        Class::Combinable
    } else {
        Class::Joinable
    }
}

/// Progress notifications.
#[derive(Clone, Debug)]
pub enum Event<'a> {
    Size { k: usize, candidates: usize },
    Tested { k: usize, tested: usize, combinable: usize, joinable: usize },
    Conjunction { complete: bool, members: &'a [Program], cost: usize, covered: usize },
    Bound { cost: usize, program: &'a Program },
    Finished { optimal: bool },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Solution {
    /// Reified union, directly evaluable.
    pub program: Program,
    /// Sum of unit costs; linking rules excluded.
    pub cost: usize,
    pub units: Vec<Unit>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Timing {
    pub wall_time_s: f64,
    pub generate_s: f64,
    pub test_s: f64,
    pub join_s: f64,
    pub combine_s: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct RunStats {
    pub final_k: usize,
    pub programs_generated: usize,
    pub programs_tested: usize,
    pub programs_skipped: usize,
    pub combinable: usize,
    pub joinable: usize,
    pub constraints: usize,
    pub conjunctions_incomplete: usize,
    pub conjunctions_complete: usize,
    pub combine_calls: usize,
    pub combine_rejected: usize,
    pub solutions_accepted: usize,
    pub solution_cost: Option<usize>,
    pub reified_size: Option<usize>,
    pub optimal: bool,
    pub timed_out: bool,
    pub seed: u64,
    #[serde(flatten)]
    pub timing: Timing,
}

impl RunStats {
    /// One flat JSON object.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("stats serialize")
    }
}

#[derive(Clone, Debug)]
pub struct LearnResult {
    pub solution: Option<Solution>,
    pub optimal: bool,
    pub stats: RunStats,
}

#[derive(Debug, thiserror::Error)]
pub enum LearnError {
    #[error("{0}")]
    Eval(#[from] EvalError),
    #[error("{0}")]
    Bias(#[from] BiasError),
    #[error("writing {path}: {err}")]
    Dump { path: String, err: std::io::Error },
}

struct Pooled {
    program: Program,
    cost: usize,
    cov: CoverageRecord,
}

impl Scored for Pooled {
    fn cost(&self) -> usize {
        self.cost
    }
    fn coverage(&self) -> &CoverageRecord {
        &self.cov
    }
}

struct UnitEntry {
    unit: Unit,
    cost: usize,
    cov: CoverageRecord,
}

impl Scored for UnitEntry {
    fn cost(&self) -> usize {
        self.cost
    }
    fn coverage(&self) -> &CoverageRecord {
        &self.cov
    }
}

struct State<'e> {
    opts: LearnOptions,
    tester: Tester,
    to_join: Vec<Pooled>,
    units: Vec<UnitEntry>,
    unit_keys: HashSet<Unit>,
    complete: CompleteJoin,
    best: Option<Solution>,
    maxsize: usize,
    deadline: Option<Instant>,
    stats: RunStats,
    /// Join/combine results may be stale.
    dirty: bool,
    dumps: usize,
    /// Use the complete join even without a solution.
    finalizing: bool,
    on_event: &'e mut dyn FnMut(&Event),
}

pub fn learn(task: &Task, opts: &LearnOptions) -> Result<LearnResult, LearnError> {
    learn_with(task, opts, &mut |_| {})
}

/// Build the tester a task's programs are evaluated with.
pub fn tester_for(task: &Task, max_derived: usize) -> Result<Tester, EvalError> {
    let bg = Background::new(task.facts.clone(), &task.bk_rules)?
        .with_constants(task.bias.constants())
        .with_max_derived(max_derived);
    Tester::new(bg, task.examples.clone())
}

pub fn learn_with(task: &Task, opts: &LearnOptions, on_event: &mut dyn FnMut(&Event)) -> Result<LearnResult, LearnError> {
    let start = Instant::now();
    let mut bias = task.bias.clone();
    bias.allow_splittable |= opts.allow_splittable;
    let mut gen = Generator::new(bias)?;
    let mut st = State {
        opts: opts.clone(),
        tester: tester_for(task, opts.max_derived)?,
        to_join: Vec::new(),
        units: Vec::new(),
        unit_keys: HashSet::new(),
        complete: CompleteJoin::new(),
        best: None,
        maxsize: opts.max_size.unwrap_or(usize::MAX),
        deadline: opts.timeout.map(|t| start + t),
        stats: RunStats { seed: opts.seed, ..RunStats::default() },
        dirty: false,
        dumps: 0,
        finalizing: false,
        on_event,
    };
    let mut store = ConstraintStore::new();
    let empty = ConstraintStore::new();
    let mut exhausted = false;
    let mut k = 2;
    while k <= st.maxsize && !st.expired() {
        if k > gen.max_cost() {
            exhausted = true;
            break;
        }
        st.stats.final_k = k;
        let t = Instant::now();
        let cands = gen.programs_of_size(k, if opts.disable_pruning { &empty } else { &store });
        st.stats.timing.generate_s += t.elapsed().as_secs_f64();
        st.stats.programs_generated += cands.len();
        (st.on_event)(&Event::Size { k, candidates: cands.len() });
        let mut direct = false;
        for chunk in cands.chunks(opts.batch.max(1)) {
            if st.expired() {
                break;
            }
            let t = Instant::now();
            let results = st.tester.coverage_batch(chunk);
            st.stats.timing.test_s += t.elapsed().as_secs_f64();
            for (p, res) in chunk.iter().zip(results) {
                let cov = match res {
                    Ok(c) => c,
                    Err(EvalError::ResourceLimit(_)) => {
                        st.stats.programs_skipped += 1;
                        continue;
                    }
                    Err(e) => return Err(e.into()),
                };
                st.stats.programs_tested += 1;
                let class = classify(&cov);
                match class {
                    Class::Solution => {
                        if st.best.as_ref().map_or(true, |b| k < b.cost) {
                            let unit = Unit::Single(p.clone());
                            st.accept(Solution { program: p.clone(), cost: k, units: vec![unit] });
                            direct = true;
                        }
                    }
                    Class::Combinable => st.add_unit(Unit::Single(p.clone()), k, cov.clone()),
                    Class::Joinable => {
                        if !opts.disable_join && !is_splittable(p) {
                            st.stats.joinable += 1;
                            st.to_join.push(Pooled { program: p.clone(), cost: k, cov: cov.clone() });
                            st.dirty = true;
                        }
                    }
                    Class::Useless => {}
                }
                if !opts.disable_pruning {
                    if cov.tp() == 0 {
                        store.add(p.clone(), Verdict::NoPositives);
                    }
                    if cov.fp() == 0 {
                        store.add(p.clone(), Verdict::NoNegatives);
                    }
                }
            }
            (st.on_event)(&Event::Tested { k, tested: st.stats.programs_tested, combinable: st.units.len(), joinable: st.to_join.len() });
            if direct {
                // Nothing larger is needed; only cheaper compositions remain.
                break;
            }
            st.join_and_combine(k)?;
        }
        k += 1;
    }
    if !st.expired() && (exhausted || k > st.maxsize) {
        // Sweep the remaining bound so every cheaper composition is seen.
        let cap = st.to_join.iter().map(|p| p.cost).sum::<usize>().min(st.maxsize);
        st.dirty = true;
        st.finalizing = true;
        st.join_and_combine(cap)?;
    }
    st.stats.constraints = store.len();
    let optimal = !st.expired() && !st.stats.timed_out;
    st.stats.optimal = optimal;
    st.stats.timing.wall_time_s = start.elapsed().as_secs_f64();
    (st.on_event)(&Event::Finished { optimal });
    Ok(LearnResult { solution: st.best, optimal, stats: st.stats })
}

impl State<'_> {
    fn budget(&self) -> Budget {
        match self.deadline {
            Some(d) => Budget::until(d),
            None => Budget::unlimited(),
        }
    }

    fn expired(&self) -> bool {
        self.deadline.is_some_and(|d| Instant::now() >= d)
    }

    fn add_unit(&mut self, unit: Unit, cost: usize, cov: CoverageRecord) {
        if self.unit_keys.insert(unit.clone()) {
            self.stats.combinable += 1;
            self.units.push(UnitEntry { unit, cost, cov });
            self.dirty = true;
        }
    }

    fn accept(&mut self, sol: Solution) {
        self.stats.solutions_accepted += 1;
        self.stats.solution_cost = Some(sol.cost);
        self.stats.reified_size = Some(sol.program.cost());
        self.maxsize = sol.cost - 1;
        (self.on_event)(&Event::Bound { cost: sol.cost, program: &sol.program });
        self.best = Some(sol);
    }

    fn dump(&mut self, bound: usize) -> Result<(), LearnError> {
        let Some(dir) = self.opts.dump_cnf.clone() else {
            return Ok(());
        };
        let (cnf, _) = build_encoding(&self.to_join, self.tester.npos(), self.tester.nneg(), self.complete.found());
        self.dumps += 1;
        let path = dir.join(format!("join_{:04}_bound{bound}.cnf", self.dumps));
        std::fs::write(&path, cnf.to_dimacs()).map_err(|err| LearnError::Dump { path: path.display().to_string(), err })
    }

    /// Join the pool with cost bound `k`, then try to combine.
    fn join_and_combine(&mut self, k: usize) -> Result<(), LearnError> {
        if !self.dirty || self.expired() {
            return Ok(());
        }
        self.dirty = false;
        let (npos, nneg) = (self.tester.npos(), self.tester.nneg());
        if !self.opts.disable_join && !self.to_join.is_empty() {
            let t = Instant::now();
            let bound = k.min(self.maxsize);
            self.dump(bound)?;
            let complete = self.best.is_some() || self.finalizing;
            let out = if !complete {
                incomplete_join(&self.to_join, npos, nneg, self.budget())
            } else {
                self.complete.run(&self.to_join, npos, nneg, bound, self.budget())
            };
            if !out.complete {
                self.stats.timed_out = true;
            }
            let conjs: Vec<Conjunction> = out.conjunctions.into_iter().filter(|c| c.is_valid()).collect();
            for c in &conjs {
                if complete {
                    self.stats.conjunctions_complete += 1;
                } else {
                    self.stats.conjunctions_incomplete += 1;
                }
                let members: Vec<Program> = c.members.iter().map(|&m| self.to_join[m].program.clone()).collect();
                (self.on_event)(&Event::Conjunction { complete, members: &members, cost: c.cost, covered: c.coverage.tp() });
            }
            let conjs = if self.opts.disable_pruning { conjs } else { filter_subsumed(conjs) };
            for c in conjs {
                let mut members: Vec<Program> = c.members.iter().map(|&m| self.to_join[m].program.clone()).collect();
                members.sort();
                self.add_unit(Unit::Conjunction(members), c.cost, c.coverage);
            }
            self.stats.timing.join_s += t.elapsed().as_secs_f64();
        }
        self.combine_units()
    }

    fn combine_units(&mut self) -> Result<(), LearnError> {
        if self.units.is_empty() || self.expired() {
            return Ok(());
        }
        let t = Instant::now();
        self.stats.combine_calls += 1;
        let npos = self.tester.npos();
        let target = self.tester.examples.target().unwrap_or(self.units[0].unit.members()[0].target);
        let cap = self.units.iter().map(|u| u.cost).sum::<usize>().min(self.maxsize);
        let mut err = None;
        let tester = &self.tester;
        let units = &self.units;
        let out = combine(units, npos, cap, self.budget(), |sel| {
            let chosen: Vec<&Unit> = sel.iter().map(|&i| &units[i].unit).collect();
            match tester.coverage(&union_program(&chosen, target)) {
                Ok(cov) => cov.fn_() == 0 && cov.fp() == 0,
                Err(e) => {
                    err.get_or_insert(e);
                    false
                }
            }
        });
        if let Some(e) = err {
            if !matches!(e, EvalError::ResourceLimit(_)) {
                return Err(e.into());
            }
        }
        self.stats.combine_rejected += out.rejected;
        if !out.optimal {
            self.stats.timed_out = true;
        }
        if let Some(sel) = out.best {
            if self.best.as_ref().map_or(true, |b| sel.cost < b.cost) {
                let chosen: Vec<Unit> = sel.units.iter().map(|&i| self.units[i].unit.clone()).collect();
                let refs: Vec<&Unit> = chosen.iter().collect();
                let program = union_program(&refs, target);
                self.accept(Solution { program, cost: sel.cost, units: chosen });
            }
        }
        self.stats.timing.combine_s += t.elapsed().as_secs_f64();
        Ok(())
    }
}

/// Fraction of `examples` classified correctly; an absent program entails nothing.
pub fn accuracy(program: Option<&Program>, facts: &FactStore, bk_rules: &[Rule], examples: &Examples) -> Result<f64, EvalError> {
    let total = examples.pos.len() + examples.neg.len();
    if total == 0 {
        return Ok(1.0);
    }
    let Some(p) = program else {
        return Ok(examples.neg.len() as f64 / total as f64);
    };
    let bg = Background::new(facts.clone(), bk_rules)?;
    let tester = Tester::new(bg, examples.clone())?;
    let cov = tester.coverage(p)?;
    Ok((cov.tp() + cov.tn()) as f64 / total as f64)
}
