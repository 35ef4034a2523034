//! Learning optimal Datalog programs by joining small programs into
//! conjunctions and combining them into unions.
//!
//! Pipeline: [`generator`] enumerates candidate programs by cost, [`datalog`]
//! tests them against examples, [`join`] builds conjunctions over programs
//! that cover too much, [`combine`] picks a minimum-cost union, and
//! [`learner`] drives the loop. [`io`] and [`tasks`] handle files and
//! synthetic task families.

pub mod logic;
pub mod par;
pub mod datalog;
pub mod join;
pub mod sat;
pub mod generator;
pub mod combine;
pub mod io;
pub mod learner;
pub mod tasks;
