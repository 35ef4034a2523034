//! Partial MaxSAT with unit soft clauses by SAT-UNSAT linear search.

use super::{weighted_counter, Budget, ClauseSink, Cnf, Lit, SatError, Solver};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MaxSatResult {
    /// Assignment to the variables of the hard formula.
    pub model: Vec<bool>,
    /// Number of soft literals left false.
    pub falsified: usize,
    /// False when the budget ran out before optimality was proved.
    pub optimal: bool,
}

/// Satisfy `hard` while making as many `soft` literals true as possible.
/// `Ok(None)` when `hard` is unsatisfiable.
pub fn maxsat(hard: &Cnf, soft: &[Lit], budget: Budget) -> Result<Option<MaxSatResult>, SatError> {
    let mut solver = Solver::from_cnf(hard, budget);
    // Relaxation variable r_i may be true only to excuse soft_i.
    let relax: Vec<Lit> = soft
        .iter()
        .map(|&s| {
            let r = solver.new_var();
            solver.add_clause(&[s, r]);
            r
        })
        .collect();
    let items: Vec<(Lit, u64)> = relax.iter().map(|&r| (r, 1)).collect();
    let counter = weighted_counter(&mut solver, &items, soft.len() as u64 + 1);

    let mut best: Option<MaxSatResult> = None;
    let mut assume: Vec<Lit> = Vec::new();
    loop {
        match solver.solve(&assume) {
            Ok(true) => {
                let full = solver.model();
                let falsified = soft.iter().filter(|&&s| !solver.value(s)).count();
                best = Some(MaxSatResult { model: full[..hard.num_vars as usize].to_vec(), falsified, optimal: false });
                if falsified == 0 {
                    break;
                }
                assume = counter.at_most(falsified as u64 - 1).into_iter().collect();
            }
            Ok(false) => break,
            Err(e) => {
                return match best {
                    Some(b) => Ok(Some(b)),
                    None => Err(e),
                }
            }
        }
    }
    Ok(best.map(|mut b| {
        b.optimal = true;
        b
    }))
}
