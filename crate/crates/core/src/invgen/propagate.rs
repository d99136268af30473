//! Forward propagation of polyhedra through a structured program, with
//! Kleene iteration, delayed widening and one narrowing pass at loop heads.

use super::polyhedron::Polyhedron;
use super::transformer::{transformer_of, Linearizer};
use crate::ir::{LoopId, Program, Stmt};
use std::collections::BTreeMap;

/// Iterations before widening starts.
pub const WIDENING_DELAY: usize = 3;
/// Safety net; widening normally stabilizes much earlier.
const MAX_ITERATIONS: usize = 100;

/// Inferred facts for one loop.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LoopInvariants {
    /// Before the loop statement.
    pub entry: Polyhedron,
    /// At the loop head, before the condition is tested.
    pub cut: Polyhedron,
    /// At the top of the body (`cut` and the condition).
    pub head: Polyhedron,
    /// Immediately after the loop (`cut` and the negated condition).
    pub exit: Polyhedron,
}

pub type Invariants = BTreeMap<LoopId, LoopInvariants>;

/// Polyhedra at the entry, head and exit of every loop of `p`.
pub fn propagate(p: &Program) -> Invariants {
    let mut a = Analyzer {
        p,
        out: Invariants::new(),
    };
    a.block(Polyhedron::top(), &p.body);
    a.out
}

struct Analyzer<'a> {
    p: &'a Program,
    out: Invariants,
}

impl Analyzer<'_> {
    fn lin<'s>(&'s self, state: &'s Polyhedron) -> Linearizer<'s> {
        Linearizer {
            symbols: &self.p.symbols,
            state: Some(state),
        }
    }

    fn block(&mut self, mut state: Polyhedron, stmts: &[Stmt]) -> Polyhedron {
        for s in stmts {
            if state.is_bottom() {
                break;
            }
            state = self.stmt(state, s);
        }
        state
    }

    fn stmt(&mut self, state: Polyhedron, s: &Stmt) -> Polyhedron {
        match s {
            Stmt::Decl { .. } | Stmt::Assign { .. } | Stmt::Assume { .. } => {
                let t = transformer_of(s, &self.lin(&state));
                t.apply(&state)
            }
            Stmt::If {
                cond,
                then_branch,
                else_branch,
                ..
            } => {
                let t = self.lin(&state).constrain(&state, cond, true);
                let e = self.lin(&state).constrain(&state, cond, false);
                let t = self.block(t, then_branch);
                let e = self.block(e, else_branch);
                t.join(&e)
            }
            Stmt::While { id, cond, body, .. } => self.while_loop(state, *id, cond, body),
            // Assertions do not block execution in the analysed semantics.
            Stmt::Assert { .. }
            | Stmt::SaveState { .. }
            | Stmt::UpdateState { .. }
            | Stmt::AssumeNewState { .. }
            | Stmt::Mark(_) => state,
        }
    }

    fn while_loop(&mut self, entry: Polyhedron, id: LoopId, cond: &crate::ir::Expr, body: &[Stmt]) -> Polyhedron {
        let mut head = entry.clone();
        let mut n = 0;
        loop {
            let inside = self.lin(&head).constrain(&head, cond, true);
            let after = self.block(inside, body);
            let mut next = head.join(&after);
            if n >= WIDENING_DELAY {
                next = head.widen(&next);
            }
            // Stable once the new iterate adds no states.
            if next.entails_all(&head) {
                break;
            }
            head = next;
            n += 1;
            if n >= MAX_ITERATIONS {
                log::warn!("loop {id}: no fixpoint after {n} iterations; giving up precision");
                head = Polyhedron::top();
                break;
            }
        }
        // One descending step; any post-fixpoint image is still sound.
        let inside = self.lin(&head).constrain(&head, cond, true);
        let after = self.block(inside, body);
        let narrowed = entry.join(&after);
        let cut = narrowed.meet(head.constraints().iter().cloned()).minimize();
        let cut = if cut.is_empty() { Polyhedron::bottom() } else { cut };
        let inv = self.loop_points(entry, cut, cond);
        let exit = inv.exit.clone();
        self.out.insert(id, inv);
        exit
    }

    fn loop_points(&self, entry: Polyhedron, cut: Polyhedron, cond: &crate::ir::Expr) -> LoopInvariants {
        let lin = self.lin(&cut);
        let head = lin.constrain(&cut, cond, true).minimize();
        let exit = lin.constrain(&cut, cond, false).minimize();
        LoopInvariants {
            entry: entry.minimize(),
            cut,
            head,
            exit,
        }
    }
}

/// Recomputes the head and exit facts from a (validated) entry and cut.
pub fn derive_points(p: &Program, id: LoopId, entry: Polyhedron, cut: Polyhedron) -> Option<LoopInvariants> {
    let mut found = None;
    Stmt::visit_loops(&p.body, &mut |s| {
        if let Stmt::While { id: l, cond, .. } = s {
            if *l == id {
                found = Some(cond.clone());
            }
        }
    });
    let cond = found?;
    let a = Analyzer {
        p,
        out: Invariants::new(),
    };
    Some(a.loop_points(entry, cut, &cond))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend;
    use crate::goto_ir;
    use crate::invgen::linear::{Constraint, LinExpr};
    use crate::ir::Widths;

    fn lin(terms: &[(&str, i128)], c: i128) -> LinExpr {
        let mut x = LinExpr::constant(c);
        for (v, k) in terms {
            x = x.add(&LinExpr::term(*v, *k)).unwrap();
        }
        x
    }

    #[test]
    fn series_points() {
        let p = goto_ir::lower(&frontend::load(goto_ir::tests::SERIES, Widths::default()).unwrap());
        let inv = &propagate(&p)[&0];
        // entry: i == 1, sn == 0
        assert!(inv.entry.entails(&Constraint::eq(lin(&[("i", 1)], -1))));
        assert!(inv.entry.entails(&Constraint::eq(lin(&[("sn", 1)], 0))));
        // head: 1 <= i, i <= n
        assert!(inv.head.entails(&Constraint::le(lin(&[("i", -1)], 1))));
        assert!(inv.head.entails(&Constraint::le(lin(&[("i", 1), ("n", -1)], 0))));
        // exit: 1 <= i, i == n + 1
        assert!(inv.exit.entails(&Constraint::le(lin(&[("i", -1)], 1))));
        assert!(inv.exit.entails(&Constraint::le(lin(&[("n", 1), ("i", -1)], 1))));
        // The accumulator relation survives widening.
        assert!(inv.cut.entails(&Constraint::eq(lin(&[("sn", 1), ("i", -2)], 2))));
    }

    #[test]
    fn nested_loop_points_exist() {
        let p = goto_ir::lower(
            &frontend::load(
                "int main() { int i = 0; int s = 0; while (i < 5) { int j = 0; while (j < i) { s = s + 1; j++; } i++; } assert(i == 5); }",
                Widths::default(),
            )
            .unwrap(),
        );
        let inv = propagate(&p);
        assert_eq!(inv.len(), 2);
        assert!(inv[&0].exit.entails(&Constraint::eq(lin(&[("i", 1)], -5))));
        assert!(inv[&1].head.entails(&Constraint::le(lin(&[("j", 1), ("i", -1)], 1))));
    }
}
