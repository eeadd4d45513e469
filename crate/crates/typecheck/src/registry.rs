use std::collections::BTreeMap;

use beepl_core::{Composite, EffAtom, Effect, IntVal, PrimTy, Ty};

/// Signature of an external function in Ψ.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HelperSig {
    pub name: String,
    pub args: Vec<Ty>,
    pub ret: Ty,
    pub eff: Effect,
}

impl HelperSig {
    pub fn new(name: &str, args: Vec<Ty>, ret: Ty, eff: &[EffAtom]) -> HelperSig {
        HelperSig { name: name.to_string(), args, ret, eff: Effect::of(eff) }
    }

    pub fn arity(&self) -> usize {
        self.args.len()
    }

    pub fn fun_ty(&self) -> Ty {
        Ty::Fun(self.args.clone(), self.eff.clone(), Box::new(self.ret.clone()))
    }
}

/// Helpers, named constants and builtin structs available to every program.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct HelperRegistry {
    pub helpers: BTreeMap<String, HelperSig>,
    pub constants: BTreeMap<String, IntVal>,
    pub composites: Vec<Composite>,
}

impl HelperRegistry {
    pub fn lookup(&self, name: &str) -> Option<&HelperSig> {
        self.helpers.get(name)
    }

    pub fn constant(&self, name: &str) -> Option<IntVal> {
        self.constants.get(name).copied()
    }

    pub fn add_helper(&mut self, sig: HelperSig) {
        self.helpers.insert(sig.name.clone(), sig);
    }
}

pub const MAP_STRUCT: &str = "bpf_map";

pub fn map_ptr() -> Ty {
    Ty::ptr(Ty::strukt(MAP_STRUCT))
}

pub fn default_helper_registry() -> HelperRegistry {
    use EffAtom::*;
    let mut r = HelperRegistry::default();
    r.add_helper(HelperSig::new(
        "bpf_map_lookup_elem",
        vec![Ty::Option(Box::new(map_ptr())), Ty::option_ptr(Ty::LONG)],
        Ty::option_ptr(Ty::LONG),
        &[Read, Io],
    ));
    r.add_helper(HelperSig::new("bpf_get_current_uid_gid", vec![], Ty::LONG, &[Io]));
    r.add_helper(HelperSig::new("htons", vec![Ty::Prim(PrimTy::U16)], Ty::Prim(PrimTy::U16), &[]));

    for (name, v) in [("XDP_ABORTED", 0), ("XDP_DROP", 1), ("XDP_PASS", 2), ("XDP_TX", 3), ("XDP_REDIRECT", 4)] {
        r.constants.insert(name.to_string(), IntVal::int(v));
    }
    for (name, v) in [("ETH_P_IP", 0x0800), ("ETH_P_ARP", 0x0806), ("ETH_P_IPV6", 0x86DD)] {
        r.constants.insert(name.to_string(), IntVal::wrap(PrimTy::U16, v));
    }

    let u8s = |n| Ty::Array(PrimTy::U8, n);
    r.composites = vec![
        Composite {
            name: "ethhdr".into(),
            fields: vec![
                ("h_dest".into(), u8s(6)),
                ("h_source".into(), u8s(6)),
                ("h_proto".into(), Ty::Prim(PrimTy::U16)),
            ],
        },
        Composite { name: "xdp_md".into(), fields: vec![("data".into(), Ty::Bytes)] },
        Composite { name: "__sk_buff".into(), fields: vec![("data".into(), Ty::Bytes)] },
        Composite { name: MAP_STRUCT.into(), fields: vec![("id".into(), Ty::INT)] },
    ];
    r
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lookups() {
        let r = default_helper_registry();
        let l = r.lookup("bpf_map_lookup_elem").unwrap();
        assert_eq!(l.arity(), 2);
        assert_eq!(l.eff, Effect::of(&[EffAtom::Read, EffAtom::Io]));
        let u = r.lookup("bpf_get_current_uid_gid").unwrap();
        assert_eq!(u.arity(), 0);
        assert_eq!(u.eff, Effect::single(EffAtom::Io));
        assert!(r.lookup("no_such_helper").is_none());
    }

    #[test]
    fn pointer_results_are_optional() {
        let r = default_helper_registry();
        for h in r.helpers.values() {
            assert!(!matches!(h.ret, Ty::Ref(_) | Ty::FunPtr(..)), "{} returns a bare pointer", h.name);
        }
    }

    #[test]
    fn xdp_constants() {
        let r = default_helper_registry();
        assert_eq!(r.constant("XDP_ABORTED"), Some(IntVal::int(0)));
        assert_eq!(r.constant("XDP_DROP"), Some(IntVal::int(1)));
        assert_eq!(r.constant("XDP_PASS"), Some(IntVal::int(2)));
        assert_eq!(r.constant("ETH_P_IPV6").unwrap().value(), 0x86DD);
    }
}
