//! Fixed-width bit-vector operations matching the QF_BV semantics used by the
//! solver encoding. Values are bit patterns stored in the low bits of a u128.

use crate::ir::{BinOp, IntType, UnOp};

/// Applies an arithmetic or comparison operator to operands of type `ty`.
/// Logical operators treat any nonzero value as true. Division or remainder
/// by zero has no defined result and yields `None`; callers substitute a
/// fresh nondeterministic value. Comparison results are 0 or 1.
pub fn binop(op: BinOp, ty: IntType, a: u128, b: u128) -> Option<u128> {
    let m = ty.mask();
    let (a, b) = (a & m, b & m);
    let sa = ty.to_math(a);
    let sb = ty.to_math(b);
    let cmp = |r: bool| Some(r as u128);
    match op {
        BinOp::Add => Some(a.wrapping_add(b) & m),
        BinOp::Sub => Some(a.wrapping_sub(b) & m),
        BinOp::Mul => Some(a.wrapping_mul(b) & m),
        BinOp::Div | BinOp::Rem if b == 0 => None,
        BinOp::Div if ty.signed => Some(ty.wrap(sa.wrapping_div(sb))),
        BinOp::Rem if ty.signed => Some(ty.wrap(sa.wrapping_rem(sb))),
        BinOp::Div => Some(a / b),
        BinOp::Rem => Some(a % b),
        BinOp::Lt => cmp(if ty.signed { sa < sb } else { a < b }),
        BinOp::Le => cmp(if ty.signed { sa <= sb } else { a <= b }),
        BinOp::Gt => cmp(if ty.signed { sa > sb } else { a > b }),
        BinOp::Ge => cmp(if ty.signed { sa >= sb } else { a >= b }),
        BinOp::Eq => cmp(a == b),
        BinOp::Ne => cmp(a != b),
        BinOp::And => cmp(a != 0 && b != 0),
        BinOp::Or => cmp(a != 0 || b != 0),
    }
}

pub fn unop(op: UnOp, ty: IntType, a: u128) -> u128 {
    match op {
        UnOp::Neg => a.wrapping_neg() & ty.mask(),
        UnOp::Not => (a & ty.mask() == 0) as u128,
    }
}

/// Converts a value of type `from` to type `to` (sign- or zero-extension, or
/// truncation).
pub fn cast(from: IntType, to: IntType, a: u128) -> u128 {
    to.wrap(from.to_math(a))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn signed_division_truncates_toward_zero() {
        let i4 = IntType::new(4, true);
        assert_eq!(i4.to_math(binop(BinOp::Div, i4, i4.wrap(-7), 2).unwrap()), -3);
        assert_eq!(i4.to_math(binop(BinOp::Rem, i4, i4.wrap(-7), 2).unwrap()), -1);
        // MIN / -1 wraps.
        assert_eq!(binop(BinOp::Div, i4, i4.wrap(-8), i4.wrap(-1)), Some(i4.wrap(-8)));
        assert_eq!(binop(BinOp::Div, i4, 3, 0), None);
    }

    #[test]
    fn comparisons_respect_signedness() {
        let u4 = IntType::new(4, false);
        let i4 = IntType::new(4, true);
        assert_eq!(binop(BinOp::Lt, u4, 15, 1), Some(0));
        assert_eq!(binop(BinOp::Lt, i4, 15, 1), Some(1));
        assert_eq!(cast(i4, IntType::new(8, true), 15), 0xff);
        assert_eq!(cast(u4, IntType::new(8, true), 15), 15);
        assert_eq!(unop(UnOp::Neg, u4, 1), 15);
    }
}
