use std::fmt;

use crate::ast::BlockId;
use crate::types::{PrimTy, Ty};

/// An integer of a fixed primitive type, stored as its two's-complement bit
/// pattern truncated to the type's width.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct IntVal {
    ty: PrimTy,
    bits: u64,
}

impl IntVal {
    /// Wraps `v` into the range of `ty`.
    pub fn wrap(ty: PrimTy, v: i128) -> IntVal {
        assert!(ty.is_integer(), "IntVal over bool");
        let w = ty.bits();
        let mask: u128 = if w == 64 { u64::MAX as u128 } else { (1u128 << w) - 1 };
        IntVal { ty, bits: ((v as u128) & mask) as u64 }
    }

    pub fn exact(ty: PrimTy, v: i128) -> Option<IntVal> {
        (ty.is_integer() && ty.fits(v)).then(|| IntVal::wrap(ty, v))
    }

    pub fn int(v: i32) -> IntVal {
        IntVal::wrap(PrimTy::INT, v as i128)
    }

    pub fn long(v: i64) -> IntVal {
        IntVal::wrap(PrimTy::LONG, v as i128)
    }

    pub fn zero(ty: PrimTy) -> IntVal {
        IntVal::wrap(ty, 0)
    }

    pub fn ty(&self) -> PrimTy {
        self.ty
    }

    pub fn bits(&self) -> u64 {
        self.bits
    }

    /// Mathematical value under the type's signedness.
    pub fn value(&self) -> i128 {
        let w = self.ty.bits();
        if self.ty.is_signed() && (self.bits >> (w - 1)) & 1 == 1 {
            self.bits as i128 - (1i128 << w)
        } else {
            self.bits as i128
        }
    }

    pub fn cast(&self, to: PrimTy) -> IntVal {
        IntVal::wrap(to, self.value())
    }

    pub fn is_zero(&self) -> bool {
        self.bits == 0
    }

    /// Little-endian encoding at the type's width.
    pub fn to_le_bytes(&self) -> Vec<u8> {
        self.bits.to_le_bytes()[..self.ty.bytes() as usize].to_vec()
    }

    pub fn from_le_bytes(ty: PrimTy, bytes: &[u8]) -> IntVal {
        let mut buf = [0u8; 8];
        buf[..bytes.len()].copy_from_slice(bytes);
        IntVal::wrap(ty, u64::from_le_bytes(buf) as i128)
    }
}

impl fmt::Display for IntVal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value())
    }
}

/// A readable window `[off, off + len)` over a block's raw bytes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BytesView {
    pub block: BlockId,
    pub off: u32,
    pub len: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Value {
    Unit,
    Bool(bool),
    Int(IntVal),
    Loc(BlockId, u32),
    /// `none` at the given option type.
    None(Ty),
    Some(Box<Value>),
    Bytes(BytesView),
    Undef,
}

impl Value {
    pub fn int(v: i32) -> Value {
        Value::Int(IntVal::int(v))
    }

    pub fn long(v: i64) -> Value {
        Value::Int(IntVal::long(v))
    }

    pub fn as_int(&self) -> Option<IntVal> {
        match self {
            Value::Int(i) => Some(*i),
            _ => None,
        }
    }

    pub fn is_undef(&self) -> bool {
        match self {
            Value::Undef => true,
            Value::Some(v) => v.is_undef(),
            _ => false,
        }
    }

    /// Zero value of a scalar type, if it has one without allocation.
    pub fn zero_of(ty: &Ty) -> Option<Value> {
        Some(match ty {
            Ty::Prim(PrimTy::Bool) => Value::Bool(false),
            Ty::Prim(p) => Value::Int(IntVal::zero(*p)),
            Ty::Unit => Value::Unit,
            Ty::Option(_) => Value::None(ty.clone()),
            _ => return None,
        })
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Unit => f.write_str("()"),
            Value::Bool(b) => write!(f, "{b}"),
            Value::Int(i) => write!(f, "{i}"),
            Value::Loc(b, o) => write!(f, "loc({}, {o})", b.0),
            Value::None(_) => f.write_str("none"),
            Value::Some(v) => write!(f, "some({v})"),
            Value::Bytes(v) => write!(f, "bytes({}, {}, {})", v.block.0, v.off, v.len),
            Value::Undef => f.write_str("undef"),
        }
    }
}
