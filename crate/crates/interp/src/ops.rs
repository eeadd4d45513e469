//! Primitive operators. Arithmetic wraps at the operand width.

use beepl_core::{Bop, Dir, IntVal, PrimTy, Uop, Value};

/// Operand combinations whose C counterpart is undefined or traps. The
/// interpreter yields zero for them.
pub fn unsafe_op(op: Bop, v1: &Value, v2: &Value) -> bool {
    let (Some(a), Some(b)) = (v1.as_int(), v2.as_int()) else { return false };
    let t = a.ty();
    match op {
        Bop::Div | Bop::Mod => b.is_zero() || (t.is_signed() && a.value() == t.min_value() && b.value() == -1),
        Bop::Shl | Bop::Shr => b.value() < 0 || b.value() >= t.bits() as i128,
        _ => false,
    }
}

fn int_op(op: Bop, a: IntVal, b: IntVal) -> Value {
    let t = a.ty();
    let (x, y) = (a.value(), b.value());
    let w = |v: i128| Value::Int(IntVal::wrap(t, v));
    match op {
        Bop::Add => w(x + y),
        Bop::Sub => w(x - y),
        Bop::Mul => w(x.wrapping_mul(y)),
        Bop::Div => w(x / y),
        Bop::Mod => w(x % y),
        Bop::And => w(x & y),
        Bop::Or => w(x | y),
        Bop::Xor => w(x ^ y),
        Bop::Shl => w(x.wrapping_shl(y as u32)),
        Bop::Shr => w(x >> y as u32),
        Bop::Eq => Value::Bool(x == y),
        Bop::Ne => Value::Bool(x != y),
        Bop::Lt => Value::Bool(x < y),
        Bop::Le => Value::Bool(x <= y),
        Bop::Gt => Value::Bool(x > y),
        Bop::Ge => Value::Bool(x >= y),
        Bop::Land | Bop::Lor => Value::Undef,
    }
}

/// Binary operator semantics for operands already known to be safe.
/// Ill-typed operand pairs yield `Undef`.
pub fn bop_sem(op: Bop, v1: &Value, v2: &Value) -> Value {
    match (v1, v2) {
        (Value::Int(a), Value::Int(b)) if a.ty() == b.ty() => {
            if unsafe_op(op, v1, v2) {
                return Value::Undef;
            }
            int_op(op, *a, *b)
        }
        (Value::Bool(a), Value::Bool(b)) => match op {
            Bop::Land => Value::Bool(*a && *b),
            Bop::Lor => Value::Bool(*a || *b),
            Bop::Eq => Value::Bool(a == b),
            Bop::Ne => Value::Bool(a != b),
            _ => Value::Undef,
        },
        _ => Value::Undef,
    }
}

/// Rule BOPV: zero of the operand type when `unsafe_op` holds.
pub fn bop_guarded(op: Bop, v1: &Value, v2: &Value) -> Value {
    match v1 {
        Value::Int(a) if unsafe_op(op, v1, v2) => Value::Int(IntVal::zero(a.ty())),
        _ => bop_sem(op, v1, v2),
    }
}

pub fn uop_sem(op: Uop, v: &Value) -> Value {
    match (op, v) {
        (Uop::Neg, Value::Int(i)) => Value::Int(IntVal::wrap(i.ty(), -i.value())),
        (Uop::BitNot, Value::Int(i)) => Value::Int(IntVal::wrap(i.ty(), !i.value())),
        (Uop::LogNot, Value::Bool(b)) => Value::Bool(!b),
        (Uop::Cast(to), Value::Int(i)) if to != PrimTy::Bool => Value::Int(i.cast(to)),
        _ => Value::Undef,
    }
}

/// Number of iterations of `for (v1 ... v2, d)`, bounds inclusive.
pub fn range(v1: &Value, v2: &Value, d: Dir) -> u128 {
    let (Some(a), Some(b)) = (v1.as_int(), v2.as_int()) else { return 0 };
    let n = match d {
        Dir::Up => b.value() - a.value() + 1,
        Dir::Down => a.value() - b.value() + 1,
    };
    n.max(0) as u128
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unsafe_cases() {
        assert!(unsafe_op(Bop::Mod, &Value::int(3), &Value::int(0)));
        assert!(unsafe_op(Bop::Shr, &Value::long(808464432), &Value::long(64)));
        assert!(!unsafe_op(Bop::Add, &Value::int(2), &Value::int(3)));
        assert!(unsafe_op(Bop::Div, &Value::int(i32::MIN), &Value::int(-1)));
        assert!(unsafe_op(Bop::Shl, &Value::int(1), &Value::int(-1)));
        assert!(!unsafe_op(Bop::Shl, &Value::int(1), &Value::int(31)));
        let u = |v| Value::Int(IntVal::wrap(PrimTy::UINT, v));
        assert!(!unsafe_op(Bop::Div, &u(0xFFFF_FFFF), &u(0xFFFF_FFFF)));
    }

    #[test]
    fn semantics() {
        assert_eq!(uop_sem(Uop::Cast(PrimTy::INT), &Value::long(0x1_0000_0000)), Value::int(0));
        assert_eq!(uop_sem(Uop::Neg, &Value::int(5)), Value::int(-5));
        assert_eq!(bop_sem(Bop::Mul, &Value::int(65536), &Value::int(65536)), Value::int(0));
        assert_eq!(bop_guarded(Bop::Mod, &Value::int(3), &Value::int(0)), Value::int(0));
        assert_eq!(bop_sem(Bop::Mod, &Value::int(3), &Value::int(0)), Value::Undef);
        assert_eq!(bop_sem(Bop::Mod, &Value::int(-7), &Value::int(2)), Value::int(-1));
        assert_eq!(bop_sem(Bop::Shr, &Value::int(-8), &Value::int(1)), Value::int(-4));
        assert_eq!(bop_sem(Bop::Lt, &Value::int(-8), &Value::int(1)), Value::Bool(true));
    }

    #[test]
    fn ranges() {
        assert_eq!(range(&Value::int(1), &Value::int(5), Dir::Up), 5);
        assert_eq!(range(&Value::int(5), &Value::int(1), Dir::Up), 0);
        assert_eq!(range(&Value::int(5), &Value::int(1), Dir::Down), 5);
        assert_eq!(range(&Value::int(3), &Value::int(3), Dir::Down), 1);
    }
}
