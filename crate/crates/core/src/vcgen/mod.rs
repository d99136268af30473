//! Verification-condition generation: SSA conversion of loop-free programs and
//! assembly of a single satisfiability query whose models are violations.

pub mod eval;
pub mod ssa;
pub mod term;

use crate::ir::{AssertKind, Loc, Program};
use ssa::{Def, EventKind, SsaProgram};
use std::collections::HashMap;
use term::{Sort, Term, Value};

pub use eval::Compiled;
pub use ssa::to_ssa;

/// Assignment to free symbols, as bit patterns (booleans are 0 or 1).
pub type Model = HashMap<String, u128>;

#[derive(Clone, Debug)]
pub struct Violation {
    pub term: Term,
    pub loc: Loc,
    pub kind: AssertKind,
}

/// A loop-free program reduced to `free`, `defs` and a `query` that is
/// satisfiable iff some assertion can fail on a path consistent with every
/// assumption preceding it.
#[derive(Clone, Debug)]
pub struct Vc {
    pub free: Vec<(String, Sort)>,
    pub defs: Vec<Def>,
    pub query: Term,
    pub violations: Vec<Violation>,
    /// Some assumption is unconditionally false; later asserts are dead.
    pub vacuous: bool,
    pub ssa: SsaProgram,
}

/// Builds the VC of a loop-free program.
pub fn generate(p: &Program) -> Vc {
    build_vc(to_ssa(p))
}

pub fn build_vc(ssa: SsaProgram) -> Vc {
    let mut defs = ssa.defs.clone();
    let mut acc = Term::bool(true);
    let mut violations = Vec::new();
    let mut n_acc = 0;
    for ev in &ssa.events {
        match ev.kind {
            EventKind::Assume(_) => {
                let a = Term::implies(ev.guard.clone(), ev.cond.clone());
                if a.as_bool() == Some(true) {
                    continue;
                }
                let t = Term::and(vec![acc.clone(), a]);
                acc = if t.is_const() {
                    t
                } else {
                    let name = format!("assume!{n_acc}");
                    n_acc += 1;
                    defs.push(Def {
                        name: name.clone(),
                        sort: Sort::Bool,
                        term: t,
                    });
                    Term::var(name, Sort::Bool)
                };
            }
            EventKind::Assert(kind) => {
                let v = Term::and(vec![ev.guard.clone(), acc.clone(), Term::not(ev.cond.clone())]);
                if v.as_bool() == Some(false) {
                    continue;
                }
                violations.push(Violation {
                    term: v,
                    loc: ev.loc,
                    kind,
                });
            }
        }
    }
    let query = Term::or(violations.iter().map(|v| v.term.clone()).collect());
    Vc {
        free: ssa.free.clone(),
        defs,
        query,
        violations,
        vacuous: ssa.vacuous || acc.as_bool() == Some(false),
        ssa,
    }
}

impl Vc {
    /// Copy whose query covers only the violations selected by `keep`.
    pub fn restrict(&self, keep: impl Fn(&Violation) -> bool) -> Vc {
        let violations: Vec<Violation> = self.violations.iter().filter(|v| keep(v)).cloned().collect();
        Vc {
            query: Term::or(violations.iter().map(|v| v.term.clone()).collect()),
            violations,
            ..self.clone()
        }
    }

    /// Values of free symbols and definitions under `model`.
    pub fn environment(&self, model: &Model) -> HashMap<String, Value> {
        let mut env = HashMap::new();
        for (n, s) in &self.free {
            let v = model.get(n).copied().unwrap_or(0);
            env.insert(
                n.clone(),
                match s {
                    Sort::Bool => Value::Bool(v != 0),
                    Sort::Bv(_) => Value::Bv(v),
                },
            );
        }
        for d in &self.defs {
            let v = d.term.eval(&env);
            env.insert(d.name.clone(), v);
        }
        env
    }

    /// Whether `model` satisfies the query.
    pub fn check_model(&self, model: &Model) -> bool {
        self.query.eval(&self.environment(model)).as_bool()
    }

    /// Total number of free bits, the size exponent of the model space.
    pub fn free_bits(&self) -> u32 {
        self.free
            .iter()
            .map(|(_, s)| match s {
                Sort::Bool => 1,
                Sort::Bv(w) => *w,
            })
            .sum()
    }

    /// Values for nondeterministic choices that are actually drawn under
    /// `model`, in execution order.
    pub fn inputs(&self, model: &Model) -> Vec<u128> {
        let env = self.environment(model);
        self.ssa
            .nondets
            .iter()
            .filter(|r| r.guard.eval(&env).as_bool())
            .map(|r| model.get(&r.name).copied().unwrap_or(0))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend;
    use crate::goto_ir;
    use crate::ir::Widths;

    fn vc_of(src: &str) -> Vc {
        let tp = frontend::load(src, Widths::default()).unwrap();
        generate(&goto_ir::lower(&tp))
    }

    #[test]
    fn assume_guards_later_asserts_only() {
        let vc = vc_of("int main() { int x = nondet_int(); assert(x != 3); assume(x == 3); assert(x == 3); }");
        assert_eq!(vc.violations.len(), 2);
        let mut m = Model::new();
        m.insert(vc.free[0].0.clone(), 3);
        assert!(vc.check_model(&m));
        assert!(!vc.violations[1].term.eval(&vc.environment(&m)).as_bool());
    }

    #[test]
    fn constant_assumes_are_eliminated() {
        let vc = vc_of(
            "int main() { long long int i = 1, sn = 0; unsigned int n = nondet_uint(); \
             assume(i == 1 && sn == 0); assume(n >= 1); assert(sn == 0); }",
        );
        let kept: Vec<&Def> = vc.defs.iter().filter(|d| d.name.starts_with("assume!")).collect();
        assert_eq!(kept.len(), 1, "{:?}", vc.defs);
        assert!(!vc.vacuous);
        assert_eq!(vc.query, Term::bool(false));
    }

    #[test]
    fn false_assume_is_vacuous() {
        let vc = vc_of("int main() { assume(0); assert(0); }");
        assert!(vc.vacuous);
        assert_eq!(vc.query, Term::bool(false));
    }

    #[test]
    fn compiled_agrees_with_term_eval() {
        let vc = vc_of(
            "int main() { unsigned char a = nondet_uchar(); signed char b = nondet_char(); \
             int q = a / b; int r = b % 3; if (a > b) q = q - r; assert(q != 7 || r == 1); }",
        );
        let c = Compiled::new(&vc);
        let mut slots = Vec::new();
        for a in 0..256u128 {
            for b in (0..256u128).step_by(7) {
                let mut m = Model::new();
                for (n, _) in &vc.free {
                    m.insert(n.clone(), 0);
                }
                let names: Vec<String> = vc.free.iter().map(|(n, _)| n.clone()).collect();
                m.insert(names[0].clone(), a);
                m.insert(names[1].clone(), b);
                let fv = c.free_values(&m);
                assert_eq!(c.run(&fv, &mut slots), vc.check_model(&m), "a={a} b={b}");
            }
        }
    }
}
