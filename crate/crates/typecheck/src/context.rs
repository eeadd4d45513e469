use std::collections::{BTreeMap, HashMap};

use beepl_core::{BlockId, Effect, FrameId, IntVal, StructTable, Ty};

use crate::registry::{HelperRegistry, HelperSig};

/// Signature of a user function visible to later declarations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FunSig {
    pub args: Vec<Ty>,
    pub eff: Effect,
    pub ret: Ty,
}

impl FunSig {
    pub fn fun_ty(&self) -> Ty {
        Ty::Fun(self.args.clone(), self.eff.clone(), Box::new(self.ret.clone()))
    }
}

/// Γ, Σ, Π and Ψ, plus the global namespace.
///
/// `gamma` holds locals only, innermost binding last. Globals, functions,
/// helpers and constants live in their own maps so the two namespaces stay
/// disjoint. `frames` gives the parameter environment of each activation
/// frame, needed to type runtime states.
#[derive(Debug, Clone, Default)]
pub struct TypingContext {
    pub gamma: Vec<(String, Ty)>,
    pub sigma: HashMap<BlockId, Ty>,
    pub pi: StructTable,
    pub psi: BTreeMap<String, HelperSig>,
    pub funs: BTreeMap<String, FunSig>,
    pub globals: BTreeMap<String, Ty>,
    pub consts: BTreeMap<String, IntVal>,
    pub frames: HashMap<FrameId, Vec<(String, Ty)>>,
}

impl TypingContext {
    pub fn new() -> TypingContext {
        TypingContext::default()
    }

    pub fn from_registry(reg: &HelperRegistry) -> TypingContext {
        let mut ctx = TypingContext::new();
        ctx.psi = reg.helpers.clone();
        ctx.consts = reg.constants.clone();
        for c in &reg.composites {
            ctx.pi.insert(c.name.clone(), c.clone());
        }
        ctx
    }

    pub fn with_var(mut self, x: &str, ty: Ty) -> TypingContext {
        self.gamma.push((x.to_string(), ty));
        self
    }

    pub fn local(&self, x: &str) -> Option<&Ty> {
        self.gamma.iter().rev().find(|(y, _)| y == x).map(|(_, t)| t)
    }

    /// True when `x` names a global, function, helper or constant.
    pub fn is_global_name(&self, x: &str) -> bool {
        self.globals.contains_key(x)
            || self.funs.contains_key(x)
            || self.psi.contains_key(x)
            || self.consts.contains_key(x)
    }
}
