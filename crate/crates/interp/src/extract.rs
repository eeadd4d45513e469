use beepl_core::{BytesView, IntVal, PrimTy, Ty, Value};

use crate::memory::{MemError, Perm};
use crate::state::State;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ExtractError {
    #[error("region of {have} bytes is shorter than the {need} bytes required")]
    TooShort { need: u32, have: u32 },
    #[error("cannot decode a `{0}` from bytes")]
    Unsupported(Ty),
    #[error(transparent)]
    Memory(#[from] MemError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Extracted {
    pub value: Value,
    /// Scalar fields by name, in layout order.
    pub fields: Vec<(String, Value)>,
}

fn decode(p: PrimTy, bytes: &[u8]) -> Value {
    if p == PrimTy::Bool {
        Value::Bool(bytes[0] != 0)
    } else {
        Value::Int(IntVal::from_le_bytes(p, bytes))
    }
}

/// Decodes `target` from the start of `view`, little-endian. A struct is
/// copied into a fresh block typed `Struct s`.
pub fn extract(s: &mut State, view: &BytesView, target: &Ty) -> Result<Extracted, ExtractError> {
    let need = match target {
        Ty::Prim(_) | Ty::Struct(_) => s.size_of(target),
        t => return Err(ExtractError::Unsupported(t.clone())),
    };
    if view.len < need {
        return Err(ExtractError::TooShort { need, have: view.len });
    }
    let bytes = s.theta.read_bytes(view.block, view.off, need)?.to_vec();
    match target {
        Ty::Prim(p) => Ok(Extracted { value: decode(*p, &bytes), fields: Vec::new() }),
        Ty::Struct(id) => {
            let layout = s.layout(id);
            let b = s.theta.alloc_raw(bytes.clone(), Perm::Freeable);
            s.sigma.insert(b, target.clone());
            s.monitor.allocations += 1;
            let mut fields = Vec::new();
            for f in layout {
                match &f.ty {
                    Ty::Prim(p) => {
                        let o = f.offset as usize;
                        let v = decode(*p, &bytes[o..o + p.bytes() as usize]);
                        s.theta.store(b, f.offset, v.clone())?;
                        fields.push((f.name, v));
                    }
                    Ty::Array(..) => {}
                    t => return Err(ExtractError::Unsupported(t.clone())),
                }
            }
            Ok(Extracted { value: Value::Loc(b, 0), fields })
        }
        _ => unreachable!(),
    }
}
