//! k-induction model checker for a small C subset, with polyhedral loop
//! invariants inferred and instrumented as assumptions.

pub mod bv;
pub mod driver;
pub mod frontend;
pub mod goto_ir;
pub mod interp;
pub mod invgen;
pub mod ir;
pub mod kind;
pub mod solver;
pub mod vcgen;
