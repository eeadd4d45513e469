use std::collections::BTreeMap;
use std::fmt;

use crate::effect::Effect;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sign {
    Signed,
    Unsigned,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum IntSize {
    I8,
    I16,
    I32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PrimTy {
    Bool,
    Int(IntSize, Sign),
    Long(Sign),
}

impl PrimTy {
    pub const INT: PrimTy = PrimTy::Int(IntSize::I32, Sign::Signed);
    pub const UINT: PrimTy = PrimTy::Int(IntSize::I32, Sign::Unsigned);
    pub const LONG: PrimTy = PrimTy::Long(Sign::Signed);
    pub const ULONG: PrimTy = PrimTy::Long(Sign::Unsigned);
    pub const I8: PrimTy = PrimTy::Int(IntSize::I8, Sign::Signed);
    pub const U8: PrimTy = PrimTy::Int(IntSize::I8, Sign::Unsigned);
    pub const I16: PrimTy = PrimTy::Int(IntSize::I16, Sign::Signed);
    pub const U16: PrimTy = PrimTy::Int(IntSize::I16, Sign::Unsigned);

    pub const INTEGERS: [PrimTy; 8] = [
        PrimTy::I8,
        PrimTy::U8,
        PrimTy::I16,
        PrimTy::U16,
        PrimTy::INT,
        PrimTy::UINT,
        PrimTy::LONG,
        PrimTy::ULONG,
    ];

    pub fn is_integer(self) -> bool {
        !matches!(self, PrimTy::Bool)
    }

    /// Width in bits; bool occupies one byte.
    pub fn bits(self) -> u32 {
        match self {
            PrimTy::Bool => 8,
            PrimTy::Int(IntSize::I8, _) => 8,
            PrimTy::Int(IntSize::I16, _) => 16,
            PrimTy::Int(IntSize::I32, _) => 32,
            PrimTy::Long(_) => 64,
        }
    }

    pub fn bytes(self) -> u32 {
        self.bits() / 8
    }

    pub fn is_signed(self) -> bool {
        matches!(self, PrimTy::Int(_, Sign::Signed) | PrimTy::Long(Sign::Signed))
    }

    pub fn min_value(self) -> i128 {
        match self {
            PrimTy::Bool => 0,
            p if p.is_signed() => -(1i128 << (p.bits() - 1)),
            _ => 0,
        }
    }

    pub fn max_value(self) -> i128 {
        match self {
            PrimTy::Bool => 1,
            p if p.is_signed() => (1i128 << (p.bits() - 1)) - 1,
            p => (1i128 << p.bits()) - 1,
        }
    }

    pub fn fits(self, v: i128) -> bool {
        v >= self.min_value() && v <= self.max_value()
    }

    pub fn name(self) -> &'static str {
        match self {
            PrimTy::Bool => "bool",
            PrimTy::Int(IntSize::I8, Sign::Signed) => "int8",
            PrimTy::Int(IntSize::I8, Sign::Unsigned) => "uint8",
            PrimTy::Int(IntSize::I16, Sign::Signed) => "int16",
            PrimTy::Int(IntSize::I16, Sign::Unsigned) => "uint16",
            PrimTy::Int(IntSize::I32, Sign::Signed) => "int",
            PrimTy::Int(IntSize::I32, Sign::Unsigned) => "uint",
            PrimTy::Long(Sign::Signed) => "long",
            PrimTy::Long(Sign::Unsigned) => "ulong",
        }
    }

    pub fn from_name(s: &str) -> Option<PrimTy> {
        Some(match s {
            "bool" => PrimTy::Bool,
            "int8" | "char" => PrimTy::I8,
            "uint8" => PrimTy::U8,
            "int16" => PrimTy::I16,
            "uint16" => PrimTy::U16,
            "int" | "int32" => PrimTy::INT,
            "uint" | "uint32" => PrimTy::UINT,
            "long" | "int64" => PrimTy::LONG,
            "ulong" | "uint64" => PrimTy::ULONG,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Ty {
    Prim(PrimTy),
    Ref(Box<Ty>),
    Option(Box<Ty>),
    Fun(Vec<Ty>, Effect, Box<Ty>),
    FunPtr(Vec<Ty>, Effect, Box<Ty>),
    Struct(String),
    Array(PrimTy, u32),
    Bytes,
    Unit,
}

impl Ty {
    pub const INT: Ty = Ty::Prim(PrimTy::INT);
    pub const LONG: Ty = Ty::Prim(PrimTy::LONG);
    pub const BOOL: Ty = Ty::Prim(PrimTy::Bool);

    pub fn int() -> Ty {
        Ty::INT
    }

    pub fn long() -> Ty {
        Ty::LONG
    }

    pub fn ptr(t: Ty) -> Ty {
        Ty::Ref(Box::new(t))
    }

    pub fn option_ptr(t: Ty) -> Ty {
        Ty::Option(Box::new(Ty::Ref(Box::new(t))))
    }

    pub fn strukt(id: &str) -> Ty {
        Ty::Struct(id.to_string())
    }

    /// `isBasic`: the types a reference may point to.
    pub fn is_basic(&self) -> bool {
        matches!(self, Ty::Prim(_) | Ty::Struct(_) | Ty::Array(..))
    }

    pub fn is_pointer(&self) -> bool {
        matches!(self, Ty::Ref(_) | Ty::FunPtr(..) | Ty::Option(_))
    }

    pub fn as_prim(&self) -> Option<PrimTy> {
        match self {
            Ty::Prim(p) => Some(*p),
            _ => None,
        }
    }

    pub fn is_integer(&self) -> bool {
        matches!(self, Ty::Prim(p) if p.is_integer())
    }

    /// Structural well-formedness of the type grammar.
    pub fn well_formed(&self) -> bool {
        match self {
            Ty::Prim(_) | Ty::Struct(_) | Ty::Bytes | Ty::Unit => true,
            Ty::Ref(t) => t.is_basic() && t.well_formed(),
            Ty::Option(t) => matches!(**t, Ty::Ref(_) | Ty::FunPtr(..)) && t.well_formed(),
            Ty::Fun(args, _, r) | Ty::FunPtr(args, _, r) => {
                args.iter().all(Ty::well_formed) && r.well_formed()
            }
            Ty::Array(_, n) => *n >= 1,
        }
    }

    pub fn mentions_struct<'a>(&'a self, out: &mut Vec<&'a str>) {
        match self {
            Ty::Struct(s) => out.push(s),
            Ty::Ref(t) | Ty::Option(t) => t.mentions_struct(out),
            Ty::Fun(a, _, r) | Ty::FunPtr(a, _, r) => {
                for t in a {
                    t.mentions_struct(out);
                }
                r.mentions_struct(out);
            }
            _ => {}
        }
    }
}

impl fmt::Display for Ty {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ty::Prim(p) => f.write_str(p.name()),
            Ty::Ref(t) => write!(f, "{t}*"),
            Ty::Option(t) => write!(f, "option({t})"),
            Ty::Fun(args, eff, r) | Ty::FunPtr(args, eff, r) => {
                f.write_str("(")?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{a}")?;
                }
                write!(f, ") -{eff}-> {r}")?;
                if matches!(self, Ty::FunPtr(..)) {
                    f.write_str("*")?;
                }
                Ok(())
            }
            Ty::Struct(s) => write!(f, "struct {s}"),
            Ty::Array(p, n) => write!(f, "{}[{n}]", p.name()),
            Ty::Bytes => f.write_str("bytes"),
            Ty::Unit => f.write_str("unit"),
        }
    }
}

/// A struct definition: ordered fields.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Composite {
    pub name: String,
    pub fields: Vec<(String, Ty)>,
}

pub type StructTable = BTreeMap<String, Composite>;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LayoutError {
    #[error("unknown struct `{0}`")]
    UnknownStruct(String),
    #[error("type `{0}` has no size")]
    Unsized(String),
    #[error("struct `{0}` has no field `{1}`")]
    UnknownField(String, String),
    #[error("struct `{0}` is recursive")]
    Recursive(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldLayout {
    pub name: String,
    pub offset: u32,
    pub ty: Ty,
}

fn round_up(n: u32, a: u32) -> u32 {
    n.div_ceil(a) * a
}

fn size_align(ty: &Ty, table: &StructTable, depth: u32) -> Result<(u32, u32), LayoutError> {
    Ok(match ty {
        Ty::Prim(p) => (p.bytes(), p.bytes()),
        Ty::Ref(_) | Ty::Option(_) | Ty::FunPtr(..) => (8, 8),
        Ty::Bytes => (16, 8),
        Ty::Unit => (4, 4),
        Ty::Array(p, n) => (p.bytes() * n, p.bytes()),
        Ty::Fun(..) => return Err(LayoutError::Unsized(ty.to_string())),
        Ty::Struct(id) => {
            if depth > 32 {
                return Err(LayoutError::Recursive(id.clone()));
            }
            let c = table.get(id).ok_or_else(|| LayoutError::UnknownStruct(id.clone()))?;
            let (_, size, align) = layout_fields(c, table, depth + 1)?;
            (size, align)
        }
    })
}

fn layout_fields(
    c: &Composite,
    table: &StructTable,
    depth: u32,
) -> Result<(Vec<FieldLayout>, u32, u32), LayoutError> {
    let mut off = 0;
    let mut max_align = 1;
    let mut out = Vec::with_capacity(c.fields.len());
    for (name, ty) in &c.fields {
        let (sz, al) = size_align(ty, table, depth)?;
        off = round_up(off, al);
        out.push(FieldLayout { name: name.clone(), offset: off, ty: ty.clone() });
        off += sz;
        max_align = max_align.max(al);
    }
    Ok((out, round_up(off, max_align), max_align))
}

/// Size in bytes under natural C alignment.
pub fn sizeof(ty: &Ty, table: &StructTable) -> Result<u32, LayoutError> {
    size_align(ty, table, 0).map(|(s, _)| s)
}

pub fn alignof(ty: &Ty, table: &StructTable) -> Result<u32, LayoutError> {
    size_align(ty, table, 0).map(|(_, a)| a)
}

pub fn struct_layout(id: &str, table: &StructTable) -> Result<Vec<FieldLayout>, LayoutError> {
    let c = table.get(id).ok_or_else(|| LayoutError::UnknownStruct(id.to_string()))?;
    layout_fields(c, table, 0).map(|(f, _, _)| f)
}

pub fn field_layout(id: &str, field: &str, table: &StructTable) -> Result<FieldLayout, LayoutError> {
    struct_layout(id, table)?
        .into_iter()
        .find(|f| f.name == field)
        .ok_or_else(|| LayoutError::UnknownField(id.to_string(), field.to_string()))
}
