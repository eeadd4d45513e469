use std::collections::{BTreeSet, HashMap};

use beepl_core::{BlockId, Ty, Value};

use crate::memory::Perm;
use crate::state::State;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("clause {clause}: {msg}")]
pub struct WfError {
    pub clause: u8,
    pub msg: String,
}

fn fail<T>(clause: u8, msg: impl Into<String>) -> Result<T, WfError> {
    Err(WfError { clause, msg: msg.into() })
}

fn var_block_ok(sigma: &HashMap<BlockId, Ty>, b: BlockId, ty: &Ty) -> bool {
    match sigma.get(&b) {
        Some(Ty::Ref(t)) => **t == *ty,
        Some(t @ Ty::Struct(_)) => t == ty,
        _ => false,
    }
}

/// The well-formedness contract between a typing environment and a state.
/// Clauses:
/// 1. every variable of Γ resolves through Ω or Δ to an initialized block
///    whose Σ type matches;
/// 2. Σ's domain is exactly the set of freeable blocks;
/// 3. functions in Δ have disjoint parameter and local names;
/// 4. every struct named by Σ, Δ or Ω is in Π;
/// 5. no name is both local and global;
/// 6. stored values agree with Σ and point only at live blocks.
pub fn well_formed(gamma: &[(String, Ty)], sigma: &HashMap<BlockId, Ty>, s: &State) -> Result<(), WfError> {
    let root = s.root.and_then(|r| s.frames.get(&r));
    for (x, ty) in gamma {
        let found = root.and_then(|f| f.get(x)).map(|(b, t)| (b, t.clone())).or_else(|| s.delta.globals.get(x).cloned());
        let Some((b, t)) = found else { return fail(1, format!("`{x}` is not bound in the state")) };
        if t != *ty || !var_block_ok(sigma, b, ty) {
            return fail(1, format!("`{x}` has type `{ty}` but its storage is typed differently"));
        }
        if !matches!(ty, Ty::Struct(_) | Ty::Array(..)) && s.theta.load(b, 0).is_err() {
            return fail(1, format!("`{x}` is not initialized"));
        }
    }
    for frame in s.frames.values() {
        for (x, b, t) in &frame.vars {
            if !var_block_ok(sigma, *b, t) {
                return fail(1, format!("local `{x}` has untyped storage"));
            }
        }
    }

    for b in sigma.keys() {
        if !s.theta.is_valid_access(*b, Perm::Freeable) {
            return fail(2, format!("block {} is typed but not accessible", b.0));
        }
    }
    for (b, k) in &s.theta.blocks {
        if k.perm == Perm::Freeable && !sigma.contains_key(b) {
            return fail(2, format!("block {} is accessible but untyped", b.0));
        }
    }

    for (name, fd) in &s.delta.funs {
        let args: BTreeSet<&str> = fd.args.iter().map(|(x, _)| x.as_str()).collect();
        if args.len() != fd.args.len() || fd.vars.iter().any(|(x, _)| args.contains(x.as_str())) {
            return fail(3, format!("`{name}` binds a name twice"));
        }
    }

    let mut structs = Vec::new();
    for t in sigma.values() {
        t.mentions_struct(&mut structs);
    }
    for (_, t) in s.delta.globals.values() {
        t.mentions_struct(&mut structs);
    }
    for f in s.frames.values() {
        for (_, _, t) in &f.vars {
            t.mentions_struct(&mut structs);
        }
    }
    if let Some(id) = structs.into_iter().find(|id| !s.delta.pi.contains_key(*id)) {
        return fail(4, format!("struct `{id}` is not defined"));
    }

    for f in s.frames.values() {
        if let Some((x, _, _)) = f.vars.iter().find(|(x, _, _)| s.delta.globals.contains_key(x) || s.delta.funs.contains_key(x)) {
            return fail(5, format!("`{x}` is both local and global"));
        }
    }

    for (b, ty) in sigma {
        let k = &s.theta.blocks[b];
        if let Ty::Ref(inner) = ty {
            if let (Ty::Prim(_) | Ty::Ref(_) | Ty::Option(_), Some(v)) = (&**inner, k.cells.get(&0)) {
                if s.type_of(v).as_ref() != Some(&**inner) {
                    return fail(6, format!("block {} holds `{v}` but is typed `{ty}`", b.0));
                }
            }
        }
        for v in k.cells.values() {
            live(s, v).map_err(|m| WfError { clause: 6, msg: format!("block {}: {m}", b.0) })?;
        }
    }
    Ok(())
}

fn live(s: &State, v: &Value) -> Result<(), String> {
    match v {
        Value::Loc(b, _) if !s.sigma.contains_key(b) => Err(format!("dangling location {}", b.0)),
        Value::Bytes(view) => match s.theta.blocks.get(&view.block) {
            Some(k) if view.off as usize + view.len as usize <= k.raw.len() => Ok(()),
            _ => Err("byte view outside its buffer".into()),
        },
        Value::Some(inner) => live(s, inner),
        Value::Undef => Err("undefined value in memory".into()),
        _ => Ok(()),
    }
}

pub fn is_well_formed(gamma: &[(String, Ty)], s: &State) -> bool {
    well_formed(gamma, &s.sigma, s).is_ok()
}
