//! Polyhedral invariant inference.

pub mod linear;
pub mod polyhedron;
pub mod transformer;
pub mod propagate;
pub mod instrument;
pub mod validate;

use crate::ir::Program;
use crate::solver::SolverConfig;
use propagate::Invariants;
use std::fmt::Write;
use validate::Rejected;

/// Result of inference plus validation.
#[derive(Clone, Debug)]
pub struct Inference {
    pub invariants: Invariants,
    pub rejected: Vec<Rejected>,
}

/// Propagates polyhedra and keeps only what the solver validates.
pub fn infer(p: &Program, cfg: &SolverConfig) -> Inference {
    let candidates = propagate::propagate(p);
    let (invariants, rejected) = validate::validate(p, &candidates, cfg);
    for r in &rejected {
        log::info!("loop {}: rejected {:?} fact {}", r.loop_id, r.point, r.constraint);
    }
    Inference { invariants, rejected }
}

/// Per loop and point, one constraint per line in the form
/// `c1*v1 + ... + c0 <= 0`.
pub fn dump(invs: &Invariants) -> String {
    let mut out = String::new();
    for (id, inv) in invs {
        for (name, poly) in [("entry", &inv.entry), ("head", &inv.head), ("exit", &inv.exit)] {
            let _ = writeln!(out, "loop {id} {name}:");
            if poly.is_bottom() {
                let _ = writeln!(out, "  false");
            } else if poly.is_top() {
                let _ = writeln!(out, "  true");
            }
            for c in poly.constraints() {
                let _ = writeln!(out, "  {c}");
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend;
    use crate::goto_ir;
    use crate::ir::Widths;

    #[test]
    fn series_dump() {
        let p = goto_ir::lower(&frontend::load(goto_ir::tests::SERIES, Widths::default()).unwrap());
        let inf = infer(&p, &SolverConfig::default());
        let d = dump(&inf.invariants);
        assert!(d.starts_with("loop 0 entry:\n"), "{d}");
        assert!(d.contains("  1*i + -1*n + 0 <= 0\n"), "{d}");
        assert!(d.contains("loop 0 exit:\n"), "{d}");
    }
}
