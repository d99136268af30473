//! Convex polyhedra as constraint systems, with Fourier–Motzkin projection
//! and the convex hull computed by lifting. Variables range over the
//! integers, which licenses constant tightening.
//!
//! Every operation may drop constraints (on coefficient overflow or when the
//! constraint cap is hit); dropping only enlarges a polyhedron, so results
//! stay over-approximations.

use super::linear::{Constraint, LinExpr, Norm, Rel};
use std::collections::{BTreeSet, HashMap};

/// Constraints kept per polyhedron; the excess with the largest constant
/// magnitude is dropped.
pub const MAX_CONSTRAINTS: usize = 64;
/// Intermediate growth allowed during one elimination step.
const MAX_INTERMEDIATE: usize = 512;

/// A conjunction of constraints; no constraints means Top.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Polyhedron {
    cs: Vec<Constraint>,
    bottom: bool,
}

impl Default for Polyhedron {
    fn default() -> Self {
        Polyhedron::top()
    }
}

impl Polyhedron {
    pub fn top() -> Polyhedron {
        Polyhedron {
            cs: Vec::new(),
            bottom: false,
        }
    }

    pub fn bottom() -> Polyhedron {
        Polyhedron {
            cs: Vec::new(),
            bottom: true,
        }
    }

    pub fn from_constraints(cs: impl IntoIterator<Item = Constraint>) -> Polyhedron {
        Polyhedron::top().meet(cs)
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.cs
    }

    pub fn is_top(&self) -> bool {
        !self.bottom && self.cs.is_empty()
    }

    /// Syntactically bottom; see [`Polyhedron::is_empty`] for the semantic test.
    pub fn is_bottom(&self) -> bool {
        self.bottom
    }

    pub fn vars(&self) -> BTreeSet<String> {
        self.cs
            .iter()
            .flat_map(|c| c.expr.coeffs.keys().cloned())
            .collect()
    }

    pub fn meet(&self, extra: impl IntoIterator<Item = Constraint>) -> Polyhedron {
        if self.bottom {
            return self.clone();
        }
        let mut cs = self.cs.clone();
        cs.extend(extra);
        match simplify(cs, true) {
            Some(cs) => Polyhedron { cs: cap(cs), bottom: false },
            None => Polyhedron::bottom(),
        }
    }

    /// Eliminates `vars` existentially.
    pub fn project(&self, vars: &[String]) -> Polyhedron {
        if self.bottom {
            return self.clone();
        }
        let mut cs = self.cs.clone();
        for v in vars {
            match eliminate(cs, v, true) {
                Some(next) => cs = next,
                None => return Polyhedron::bottom(),
            }
        }
        Polyhedron { cs: cap(cs), bottom: false }
    }

    /// Keeps only constraints over `vars`, projecting out everything else.
    pub fn project_onto(&self, vars: &BTreeSet<String>) -> Polyhedron {
        let others: Vec<String> = self.vars().into_iter().filter(|v| !vars.contains(v)).collect();
        self.project(&others)
    }

    /// Whether the system has no rational solution after integer tightening.
    pub fn is_empty(&self) -> bool {
        if self.bottom {
            return true;
        }
        let vars: Vec<String> = self.vars().into_iter().collect();
        self.project(&vars).bottom
    }

    pub fn entails(&self, c: &Constraint) -> bool {
        if self.is_empty() {
            return true;
        }
        c.as_les().iter().all(|le| match le.negate_le() {
            Some(neg) => self.meet([neg]).is_empty(),
            None => false,
        })
    }

    pub fn entails_all(&self, other: &Polyhedron) -> bool {
        other.bottom && self.is_empty() || !other.bottom && other.cs.iter().all(|c| self.entails(c))
    }

    /// Same set of integer points as far as the entailment test can tell.
    pub fn equivalent(&self, other: &Polyhedron) -> bool {
        self.entails_all(other) && other.entails_all(self)
    }

    pub fn contains(&self, env: &HashMap<String, i128>) -> bool {
        !self.bottom && self.cs.iter().all(|c| c.holds(env).unwrap_or(true))
    }

    /// Bounds of `e` over the polyhedron; `None` for unbounded directions.
    pub fn bounds(&self, e: &LinExpr) -> (Option<i128>, Option<i128>) {
        const T: &str = "\u{1}t";
        let Some(def) = LinExpr::var(T).sub(e) else {
            return (None, None);
        };
        let p = self.meet([Constraint::eq(def)]);
        let keep: BTreeSet<String> = [T.to_string()].into_iter().collect();
        let p = p.project_onto(&keep);
        if p.bottom {
            return (Some(0), Some(-1));
        }
        let (mut lo, mut hi) = (None::<i128>, None::<i128>);
        for c in &p.cs {
            let a = c.expr.coeff(T);
            let k = c.expr.constant;
            // a·t + k (rel) 0 with a = ±1 after normalization.
            match (c.rel, a) {
                (Rel::Eq, _) => {
                    let v = -k / a;
                    lo = Some(lo.map_or(v, |l| l.max(v)));
                    hi = Some(hi.map_or(v, |h| h.min(v)));
                }
                (Rel::Le, 1) => hi = Some(hi.map_or(-k, |h| h.min(-k))),
                (Rel::Le, -1) => lo = Some(lo.map_or(k, |l| l.max(k))),
                _ => {}
            }
        }
        (lo, hi)
    }

    pub fn rename(&self, f: &dyn Fn(&str) -> String) -> Polyhedron {
        Polyhedron {
            cs: self
                .cs
                .iter()
                .map(|c| Constraint {
                    expr: c.expr.rename(f),
                    rel: c.rel,
                })
                .collect(),
            bottom: self.bottom,
        }
    }

    /// Convex hull.
    pub fn join(&self, other: &Polyhedron) -> Polyhedron {
        if self.is_empty() {
            return other.clone();
        }
        if other.is_empty() {
            return self.clone();
        }
        if self.is_top() || other.is_top() {
            return Polyhedron::top();
        }
        // x = y + z with y ∈ λ·P, z ∈ (1−λ)·Q, 0 ≤ λ ≤ 1; eliminate y and λ.
        const LAMBDA: &str = "\u{1}lambda";
        let y = |v: &str| format!("\u{1}y.{v}");
        let vars: Vec<String> = self.vars().union(&other.vars()).cloned().collect();
        let mut cs = Vec::new();
        let lam = LinExpr::var(LAMBDA);
        for c in &self.cs {
            let mut e = c.expr.rename(&|v| y(v));
            e.constant = 0;
            if let Some(e) = e.combine(1, &lam, c.expr.constant) {
                cs.push(Constraint { expr: e, rel: c.rel });
            }
        }
        for c in &other.cs {
            // a·(x − y) + c·(1 − λ)
            let x_minus_y = c.expr.coeffs.iter().try_fold(LinExpr::constant(0), |acc, (v, a)| {
                acc.add(&LinExpr::var(v.clone()).sub(&LinExpr::var(y(v)))?.scale(*a)?)
            });
            let Some(x_minus_y) = x_minus_y else {
                continue;
            };
            let one_minus_l = LinExpr::constant(1).sub(&lam).expect("small");
            if let Some(e) = x_minus_y.combine(1, &one_minus_l, c.expr.constant) {
                cs.push(Constraint { expr: e, rel: c.rel });
            }
        }
        cs.push(Constraint::le(LinExpr::term(LAMBDA, -1)));
        cs.push(Constraint::le(lam.sub(&LinExpr::constant(1)).expect("small")));
        let Some(mut cs) = simplify(cs, false) else {
            return Polyhedron::bottom();
        };
        let mut elim: Vec<String> = vars.iter().map(|v| y(v)).collect();
        elim.push(LAMBDA.to_string());
        for v in &elim {
            match eliminate(cs, v, false) {
                Some(next) => cs = next,
                None => return Polyhedron::bottom(),
            }
        }
        Polyhedron::from_constraints(cs).minimize()
    }

    /// Standard widening: the constraints of `self` that `newer` satisfies.
    pub fn widen(&self, newer: &Polyhedron) -> Polyhedron {
        if self.is_empty() {
            return newer.clone();
        }
        let kept: Vec<Constraint> = self
            .cs
            .iter()
            .flat_map(|c| c.as_les())
            .filter(|c| newer.entails(c))
            .collect();
        Polyhedron::from_constraints(kept)
    }

    /// Removes constraints implied by the others.
    pub fn minimize(&self) -> Polyhedron {
        if self.bottom || self.is_empty() {
            return Polyhedron::bottom();
        }
        let mut cs = self.cs.clone();
        let mut i = 0;
        while i < cs.len() {
            if cs[i].rel == Rel::Le {
                let mut rest = cs.clone();
                let c = rest.remove(i);
                let others = Polyhedron {
                    cs: rest.clone(),
                    bottom: false,
                };
                if others.entails(&c) {
                    cs = rest;
                    continue;
                }
            }
            i += 1;
        }
        Polyhedron { cs, bottom: false }
    }
}

/// Normalizes, deduplicates, merges opposite inequalities into equalities and
/// keeps the tightest of parallel inequalities. Equalities are solved for a
/// pivot (unit coefficient and alphabetically last name preferred) that is
/// substituted everywhere else, so the system stays in a canonical form.
/// `None` if trivially false.
fn simplify(cs: Vec<Constraint>, integral: bool) -> Option<Vec<Constraint>> {
    let (mut eqs, mut les): (Vec<Constraint>, Vec<Constraint>) = cs.into_iter().partition(|c| c.rel == Rel::Eq);
    let mut solved: Vec<Constraint> = Vec::new();
    loop {
        while let Some(e) = eqs.pop() {
            let e = match e.normalize(integral) {
                Norm::True => continue,
                Norm::False => return None,
                Norm::Constraint(e) => e,
            };
            let v = pivot(&e.expr);
            let mut sub = |c: Constraint| -> Option<Constraint> {
                substitute(&c, &e.expr, &v)
            };
            eqs = eqs.into_iter().filter_map(&mut sub).collect();
            les = les.into_iter().filter_map(&mut sub).collect();
            solved = solved.into_iter().filter_map(&mut sub).collect();
            solved.push(e);
        }
        let (merged, found) = merge_les(les, integral)?;
        les = merged;
        if found.is_empty() {
            break;
        }
        eqs = found;
    }
    let mut out = Vec::new();
    for e in solved {
        match e.normalize(integral) {
            Norm::True => {}
            Norm::False => return None,
            Norm::Constraint(e) => {
                if !out.contains(&e) {
                    out.push(e)
                }
            }
        }
    }
    out.sort();
    out.extend(les);
    Some(out)
}

fn pivot(e: &LinExpr) -> String {
    let unit = e.coeffs.iter().filter(|(_, c)| c.unsigned_abs() == 1).map(|(v, _)| v).next_back();
    unit.or_else(|| e.coeffs.keys().next_back()).expect("non-constant equality").clone()
}

/// Eliminates `v` from `c` using `eq == 0`; drops `c` on overflow.
fn substitute(c: &Constraint, eq: &LinExpr, v: &str) -> Option<Constraint> {
    let b = c.expr.coeff(v);
    if b == 0 {
        return Some(c.clone());
    }
    let a = eq.coeff(v);
    // |a|·c − sign(a)·b·eq keeps the direction of an inequality.
    let e = c.expr.combine(a.abs(), eq, -b * a.signum())?;
    Some(Constraint { expr: e, rel: c.rel })
}

/// Tightest parallel inequalities; opposite pairs that meet become
/// equalities, returned separately.
fn merge_les(cs: Vec<Constraint>, integral: bool) -> Option<(Vec<Constraint>, Vec<Constraint>)> {
    let mut les: HashMap<std::collections::BTreeMap<String, i128>, i128> = HashMap::new();
    let mut eqs: Vec<Constraint> = Vec::new();
    for c in cs {
        match c.normalize(integral) {
            Norm::True => {}
            Norm::False => return None,
            Norm::Constraint(c) => {
                let e = les.entry(c.expr.coeffs).or_insert(c.expr.constant);
                *e = (*e).max(c.expr.constant);
            }
        }
    }
    let mut out = Vec::new();
    let mut keys: Vec<_> = les.keys().cloned().collect();
    keys.sort();
    let mut used = BTreeSet::new();
    for k in &keys {
        if used.contains(k) {
            continue;
        }
        let c = les[k];
        let neg: std::collections::BTreeMap<String, i128> = k.iter().map(|(v, a)| (v.clone(), -a)).collect();
        if let Some(&c2) = les.get(&neg) {
            // a·x + c ≤ 0 and −a·x + c2 ≤ 0, i.e. c2 ≤ a·x ≤ −c.
            if c2 > -c {
                return None;
            }
            if c2 == -c {
                used.insert(neg.clone());
                used.insert(k.clone());
                eqs.push(Constraint::eq(LinExpr { coeffs: k.clone(), constant: c }));
                continue;
            }
        }
        used.insert(k.clone());
        out.push(Constraint::le(LinExpr {
            coeffs: k.clone(),
            constant: c,
        }));
    }
    Some((out, eqs))
}

/// One Fourier–Motzkin step. `None` if a contradiction is derived.
fn eliminate(cs: Vec<Constraint>, v: &str, integral: bool) -> Option<Vec<Constraint>> {
    let (with, mut without): (Vec<Constraint>, Vec<Constraint>) = cs.into_iter().partition(|c| c.mentions(v));
    if with.is_empty() {
        return Some(without);
    }
    if let Some(pos) = with.iter().position(|c| c.rel == Rel::Eq) {
        // Exact substitution through the equality.
        let mut eq = with[pos].expr.clone();
        if eq.coeff(v) < 0 {
            eq = eq.scale(-1)?;
        }
        let a = eq.coeff(v);
        for (i, c) in with.iter().enumerate() {
            if i == pos {
                continue;
            }
            let b = c.expr.coeff(v);
            if let Some(e) = c.expr.combine(a, &eq, -b) {
                without.push(Constraint { expr: e, rel: c.rel });
            }
        }
        return simplify(without, integral);
    }
    let (pos, neg): (Vec<&Constraint>, Vec<&Constraint>) = with.iter().partition(|c| c.expr.coeff(v) > 0);
    let mut produced = Vec::new();
    for p in &pos {
        for n in &neg {
            let a = p.expr.coeff(v);
            let b = -n.expr.coeff(v);
            if let Some(e) = p.expr.combine(b, &n.expr, a) {
                produced.push(Constraint::le(e));
            }
        }
    }
    let mut produced = simplify(produced, integral)?;
    if produced.len() > MAX_INTERMEDIATE {
        produced = cap_to(produced, MAX_INTERMEDIATE);
    }
    without.extend(produced);
    simplify(without, integral)
}

fn cap(cs: Vec<Constraint>) -> Vec<Constraint> {
    cap_to(cs, MAX_CONSTRAINTS)
}

fn cap_to(mut cs: Vec<Constraint>, n: usize) -> Vec<Constraint> {
    if cs.len() > n {
        log::debug!("polyhedron exceeds {n} constraints; dropping the weakest");
        // Equalities first, then by constant magnitude.
        cs.sort_by_key(|c| (c.rel != Rel::Eq, c.expr.constant.unsigned_abs()));
        cs.truncate(n);
    }
    cs
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lin(terms: &[(&str, i128)], c: i128) -> LinExpr {
        let mut x = LinExpr::constant(c);
        for (v, k) in terms {
            x = x.add(&LinExpr::term(*v, *k)).unwrap();
        }
        x
    }

    fn le(terms: &[(&str, i128)], c: i128) -> Constraint {
        Constraint::le(lin(terms, c))
    }

    fn eq(terms: &[(&str, i128)], c: i128) -> Constraint {
        Constraint::eq(lin(terms, c))
    }

    #[test]
    fn projection_and_emptiness() {
        // 1 <= x, x <= y, y <= 3  ⇒  1 <= y
        let p = Polyhedron::from_constraints([le(&[("x", -1)], 1), le(&[("x", 1), ("y", -1)], 0), le(&[("y", 1)], -3)]);
        let q = p.project(&["x".to_string()]);
        assert!(q.entails(&le(&[("y", -1)], 1)));
        assert!(!q.entails(&le(&[("y", -1)], 2)));
        assert!(p.meet([le(&[("y", 1)], 0)]).is_empty());
        // 2x = 1 has no integer solution.
        assert!(Polyhedron::from_constraints([eq(&[("x", 2)], -1)]).is_empty());
    }

    #[test]
    fn hull_recovers_linear_relation() {
        let p = Polyhedron::from_constraints([eq(&[("i", 1)], -1), eq(&[("sn", 1)], 0)]);
        let q = Polyhedron::from_constraints([eq(&[("i", 1)], -2), eq(&[("sn", 1)], -2)]);
        let h = p.join(&q);
        assert!(h.entails(&eq(&[("sn", 1), ("i", -2)], 2)));
        assert!(h.entails(&le(&[("i", -1)], 1)));
        assert!(h.entails(&le(&[("i", 1)], -2)));
        assert!(!h.entails(&le(&[("i", 1)], -1)));
        let mut env = HashMap::new();
        env.insert("i".to_string(), 1);
        env.insert("sn".to_string(), 0);
        assert!(h.contains(&env));
    }

    #[test]
    fn widening_drops_unstable_bounds() {
        let p = Polyhedron::from_constraints([le(&[("i", -1)], 1), le(&[("i", 1)], -2)]);
        let q = Polyhedron::from_constraints([le(&[("i", -1)], 1), le(&[("i", 1)], -3)]);
        let w = p.widen(&q);
        assert!(w.entails(&le(&[("i", -1)], 1)));
        assert!(!w.entails(&le(&[("i", 1)], -3)));
    }

    #[test]
    fn bounds_of_expression() {
        let p = Polyhedron::from_constraints([le(&[("i", -1)], 1), le(&[("i", 1), ("n", -1)], 0), le(&[("n", 1)], -10)]);
        assert_eq!(p.bounds(&lin(&[("i", 1)], 1)), (Some(2), Some(11)));
        assert_eq!(p.bounds(&lin(&[("n", -1)], 0)), (Some(-10), Some(-1)));
        let top = Polyhedron::top();
        assert_eq!(top.bounds(&lin(&[("x", 1)], 0)), (None, None));
    }

    #[test]
    fn join_with_bottom_and_top() {
        let p = Polyhedron::from_constraints([le(&[("x", 1)], -2)]);
        assert_eq!(p.join(&Polyhedron::bottom()), p);
        assert!(p.join(&Polyhedron::top()).is_top());
    }
}
