//! Mutation-based fuzzing of Constrained Horn Clause solvers.

pub mod ast;
pub mod mutation;
pub mod solver;
pub mod oracle;
pub mod scheduler;
pub mod reducer;
pub mod report;
pub mod session;
pub mod testing;
