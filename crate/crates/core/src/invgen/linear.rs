//! Affine expressions and constraints with checked `i128` coefficients.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

/// `Σ coeffs[v]·v + constant`. Zero coefficients are never stored.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LinExpr {
    pub coeffs: BTreeMap<String, i128>,
    pub constant: i128,
}

impl LinExpr {
    pub fn constant(c: i128) -> LinExpr {
        LinExpr {
            coeffs: BTreeMap::new(),
            constant: c,
        }
    }

    pub fn var(v: impl Into<String>) -> LinExpr {
        LinExpr::term(v, 1)
    }

    pub fn term(v: impl Into<String>, c: i128) -> LinExpr {
        let mut coeffs = BTreeMap::new();
        if c != 0 {
            coeffs.insert(v.into(), c);
        }
        LinExpr { coeffs, constant: 0 }
    }

    pub fn coeff(&self, v: &str) -> i128 {
        self.coeffs.get(v).copied().unwrap_or(0)
    }

    pub fn is_constant(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// `ka·self + kb·other`, or `None` on overflow.
    pub fn combine(&self, ka: i128, other: &LinExpr, kb: i128) -> Option<LinExpr> {
        let mut coeffs = BTreeMap::new();
        for (v, c) in &self.coeffs {
            coeffs.insert(v.clone(), c.checked_mul(ka)?);
        }
        for (v, c) in &other.coeffs {
            let add = c.checked_mul(kb)?;
            let e = coeffs.entry(v.clone()).or_insert(0);
            *e = e.checked_add(add)?;
        }
        coeffs.retain(|_, c| *c != 0);
        Some(LinExpr {
            coeffs,
            constant: self.constant.checked_mul(ka)?.checked_add(other.constant.checked_mul(kb)?)?,
        })
    }

    pub fn add(&self, other: &LinExpr) -> Option<LinExpr> {
        self.combine(1, other, 1)
    }

    pub fn sub(&self, other: &LinExpr) -> Option<LinExpr> {
        self.combine(1, other, -1)
    }

    pub fn scale(&self, k: i128) -> Option<LinExpr> {
        self.combine(k, &LinExpr::default(), 0)
    }

    /// Replaces `v` by `e`.
    pub fn substitute(&self, v: &str, e: &LinExpr) -> Option<LinExpr> {
        let c = self.coeff(v);
        if c == 0 {
            return Some(self.clone());
        }
        let mut rest = self.clone();
        rest.coeffs.remove(v);
        rest.combine(1, e, c)
    }

    pub fn rename(&self, f: &dyn Fn(&str) -> String) -> LinExpr {
        LinExpr {
            coeffs: self.coeffs.iter().map(|(v, c)| (f(v), *c)).collect(),
            constant: self.constant,
        }
    }

    pub fn eval(&self, env: &HashMap<String, i128>) -> Option<i128> {
        let mut acc = self.constant;
        for (v, c) in &self.coeffs {
            acc = acc.checked_add(c.checked_mul(*env.get(v.as_str())?)?)?;
        }
        Some(acc)
    }

    fn gcd_of_coeffs(&self) -> i128 {
        self.coeffs.values().fold(0, |g, c| gcd(g, *c))
    }
}

pub fn gcd(a: i128, b: i128) -> i128 {
    let (mut a, mut b) = (a.unsigned_abs(), b.unsigned_abs());
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a as i128
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Rel {
    Le,
    Eq,
}

/// `expr <= 0` or `expr == 0`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Constraint {
    pub expr: LinExpr,
    pub rel: Rel,
}

/// Result of normalizing a constraint.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Norm {
    True,
    False,
    Constraint(Constraint),
}

impl Constraint {
    pub fn le(expr: LinExpr) -> Constraint {
        Constraint { expr, rel: Rel::Le }
    }

    pub fn eq(expr: LinExpr) -> Constraint {
        Constraint { expr, rel: Rel::Eq }
    }

    /// `a <= b`.
    pub fn le_between(a: &LinExpr, b: &LinExpr) -> Option<Constraint> {
        Some(Constraint::le(a.sub(b)?))
    }

    /// Divides by the coefficient gcd and fixes the sign of equalities. With
    /// `integral`, every variable ranges over the integers, so `≤` constants
    /// are rounded and equalities with a non-divisible constant are false.
    pub fn normalize(mut self, integral: bool) -> Norm {
        let g = self.expr.gcd_of_coeffs();
        if g == 0 {
            let holds = match self.rel {
                Rel::Le => self.expr.constant <= 0,
                Rel::Eq => self.expr.constant == 0,
            };
            return if holds { Norm::True } else { Norm::False };
        }
        let c = self.expr.constant;
        match self.rel {
            Rel::Le => {
                let g = if integral { g } else { gcd(g, c) };
                self.expr.coeffs.values_mut().for_each(|v| *v /= g);
                // Σ(a/g)·v ≤ −c/g tightens to Σ(a/g)·v + ⌈c/g⌉ ≤ 0.
                self.expr.constant = div_ceil(c, g);
            }
            Rel::Eq => {
                if c % g != 0 {
                    if integral {
                        return Norm::False;
                    }
                    let g2 = gcd(g, c);
                    self.expr.coeffs.values_mut().for_each(|v| *v /= g2);
                    self.expr.constant /= g2;
                } else {
                    self.expr.coeffs.values_mut().for_each(|v| *v /= g);
                    self.expr.constant /= g;
                }
                if self.expr.coeffs.values().next().copied().unwrap_or(0) < 0 {
                    self.expr = self.expr.scale(-1).expect("negation of normalized values");
                }
            }
        }
        Norm::Constraint(self)
    }

    pub fn holds(&self, env: &HashMap<String, i128>) -> Option<bool> {
        let v = self.expr.eval(env)?;
        Some(match self.rel {
            Rel::Le => v <= 0,
            Rel::Eq => v == 0,
        })
    }

    /// Integer negation of a `≤` constraint: `e ≥ 1`.
    pub fn negate_le(&self) -> Option<Constraint> {
        debug_assert_eq!(self.rel, Rel::Le);
        Some(Constraint::le(self.expr.scale(-1)?.add(&LinExpr::constant(1))?))
    }

    /// The constraint as one or two `≤` constraints.
    pub fn as_les(&self) -> Vec<Constraint> {
        match self.rel {
            Rel::Le => vec![self.clone()],
            Rel::Eq => {
                let mut out = vec![Constraint::le(self.expr.clone())];
                if let Some(n) = self.expr.scale(-1) {
                    out.push(Constraint::le(n));
                }
                out
            }
        }
    }

    pub fn mentions(&self, v: &str) -> bool {
        self.expr.coeff(v) != 0
    }

    /// Source-like form with positive coefficients on both sides, variables
    /// ordered by `order`, e.g. `2*j <= 5*t - 1` or `1 <= i`.
    pub fn render(&self, order: &dyn Fn(&str) -> usize) -> String {
        let mut vars: Vec<(&String, i128)> = self.expr.coeffs.iter().map(|(v, c)| (v, *c)).collect();
        vars.sort_by_key(|(v, _)| (order(v), (*v).clone()));
        let mut lhs: Vec<(&str, i128)> = vars.iter().filter(|(_, c)| *c > 0).map(|(v, c)| (v.as_str(), *c)).collect();
        let mut rhs: Vec<(&str, i128)> = vars.iter().filter(|(_, c)| *c < 0).map(|(v, c)| (v.as_str(), -c)).collect();
        if self.rel == Rel::Eq && lhs.is_empty() {
            std::mem::swap(&mut lhs, &mut rhs);
        }
        let op = match self.rel {
            Rel::Le => "<=",
            Rel::Eq => "==",
        };
        let c = self.expr.constant;
        let side = |terms: &[(&str, i128)], k: i128| -> String {
            if terms.is_empty() {
                return k.to_string();
            }
            let mut s = terms
                .iter()
                .map(|(v, c)| if *c == 1 { v.to_string() } else { format!("{c}*{v}") })
                .collect::<Vec<_>>()
                .join(" + ");
            if k > 0 {
                s.push_str(&format!(" + {k}"));
            } else if k < 0 {
                s.push_str(&format!(" - {}", k.unsigned_abs()));
            }
            s
        };
        if rhs.is_empty() {
            format!("{} {op} {}", side(&lhs, 0), -c)
        } else if lhs.is_empty() {
            format!("{c} {op} {}", side(&rhs, 0))
        } else {
            format!("{} {op} {}", side(&lhs, 0), side(&rhs, -c))
        }
    }
}

/// Dump form `c1*v1 + ... + c0 <= 0`.
impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (v, c) in &self.expr.coeffs {
            write!(f, "{c}*{v} + ")?;
        }
        let op = match self.rel {
            Rel::Le => "<=",
            Rel::Eq => "==",
        };
        write!(f, "{} {op} 0", self.expr.constant)
    }
}

fn div_ceil(a: i128, b: i128) -> i128 {
    debug_assert!(b > 0);
    let q = a.div_euclid(b);
    if a.rem_euclid(b) == 0 {
        q
    } else {
        q + 1
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e(terms: &[(&str, i128)], c: i128) -> LinExpr {
        let mut x = LinExpr::constant(c);
        for (v, k) in terms {
            x = x.add(&LinExpr::term(*v, *k)).unwrap();
        }
        x
    }

    fn pos(v: &str) -> usize {
        ["i", "sn", "n", "j", "t"].iter().position(|x| *x == v).unwrap_or(99)
    }

    #[test]
    fn strict_inequality_rendering() {
        // 2j < 5t over the integers is 2j - 5t + 1 <= 0.
        let c = Constraint::le(e(&[("j", 2), ("t", -5)], 1));
        assert_eq!(c.render(&pos), "2*j <= 5*t - 1");
        let c = Constraint::le(e(&[("i", -1)], 1));
        assert_eq!(c.render(&pos), "1 <= i");
        let c = Constraint::le(e(&[("i", 1), ("n", -1)], 0));
        assert_eq!(c.render(&pos), "i <= n");
        let c = Constraint::le(e(&[("i", -1), ("n", 1)], 1));
        assert_eq!(c.render(&pos), "n <= i - 1");
        let c = Constraint::eq(e(&[("i", 2), ("sn", -1)], -2));
        assert_eq!(c.render(&pos), "2*i == sn + 2");
        assert_eq!(c.to_string(), "2*i + -1*sn + -2 == 0");
    }

    #[test]
    fn normalization_tightens() {
        let c = Constraint::le(e(&[("x", 2)], -3)).normalize(true);
        assert_eq!(c, Norm::Constraint(Constraint::le(e(&[("x", 1)], -1))));
        let c = Constraint::le(e(&[("x", 2)], -3)).normalize(false);
        assert_eq!(c, Norm::Constraint(Constraint::le(e(&[("x", 2)], -3))));
        assert_eq!(Constraint::eq(e(&[("x", 2)], 1)).normalize(true), Norm::False);
        assert_eq!(Constraint::le(e(&[], -1)).normalize(true), Norm::True);
        let c = Constraint::eq(e(&[("x", -2), ("y", 4)], 6)).normalize(true);
        assert_eq!(c, Norm::Constraint(Constraint::eq(e(&[("x", 1), ("y", -2)], -3))));
    }
}
