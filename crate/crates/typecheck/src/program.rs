use std::collections::{BTreeMap, BTreeSet};

use beepl_core::{Decl, EffAtom, Effect, FunDecl, GlobInit, Program, PrimTy, StructTable, Ty};
use beepl_frontend::Diagnostic;

use crate::context::{FunSig, TypingContext};
use crate::expr::{check_ty, terr, Checker, TResult};
use crate::registry::{default_helper_registry, map_ptr, HelperRegistry, HelperSig};

/// Whether an argument of type `ty` may appear in a function placed in `sec`.
pub fn section_ok(ty: &Ty, sec: Option<&str>) -> bool {
    let Some(sec) = sec else { return true };
    let Ty::Option(inner) = ty else { return true };
    let Ty::Ref(target) = &**inner else { return true };
    match &**target {
        Ty::Struct(id) if id == "xdp_md" => sec == "xdp",
        Ty::Struct(id) if id == "__sk_buff" => sec == "socket",
        _ => true,
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TypedFunDecl {
    /// The declaration with its body elaborated.
    pub decl: FunDecl,
    /// Inferred effect of the body.
    pub eff: Effect,
}

/// A checked program: elaborated declarations plus the environments they
/// were checked in.
#[derive(Debug, Clone)]
pub struct TypedProgram {
    pub program: Program,
    pub registry: HelperRegistry,
    pub pi: StructTable,
    pub psi: BTreeMap<String, HelperSig>,
    pub funs: BTreeMap<String, FunSig>,
    pub globals: BTreeMap<String, Ty>,
    pub effects: BTreeMap<String, Effect>,
}

impl TypedProgram {
    /// The global typing context, with Γ and Σ empty.
    pub fn context(&self) -> TypingContext {
        TypingContext {
            pi: self.pi.clone(),
            psi: self.psi.clone(),
            funs: self.funs.clone(),
            globals: self.globals.clone(),
            consts: self.registry.constants.clone(),
            ..TypingContext::default()
        }
    }

    pub fn effect_of(&self, fun: &str) -> Option<&Effect> {
        self.effects.get(fun)
    }
}

fn param_ty_ok(t: &Ty) -> bool {
    matches!(t, Ty::Prim(_) | Ty::Ref(_) | Ty::Option(_) | Ty::Struct(_) | Ty::Bytes)
}

pub fn check_fun_decl(ctx: &TypingContext, fd: &FunDecl) -> TResult<TypedFunDecl> {
    let sp = fd.span;
    check_ty(ctx, &fd.rt, sp)?;
    if fd.rt.is_pointer() {
        return Err(terr("ReturnsPointer", "TFDECL", format!("`{}` may not return the pointer type `{}`", fd.name, fd.rt), sp));
    }
    if matches!(fd.rt, Ty::Array(..) | Ty::Fun(..)) {
        return Err(terr("InvalidReturnType", "TFDECL", format!("`{}` cannot return a `{}`", fd.name, fd.rt), sp));
    }
    let mut seen = BTreeSet::new();
    for (x, t) in fd.args.iter().chain(fd.vars.iter()) {
        if !seen.insert(x.as_str()) {
            return Err(terr("DuplicateParam", "TFDECL", format!("`{x}` is bound twice in `{}`", fd.name), sp));
        }
        if ctx.is_global_name(x) {
            return Err(terr("ShadowsGlobal", "TFDECL", format!("parameter `{x}` shadows a global name"), sp));
        }
        check_ty(ctx, t, sp)?;
        if !param_ty_ok(t) {
            return Err(terr("InvalidParamType", "TFDECL", format!("`{x}` cannot have type `{t}`"), sp));
        }
    }
    for (x, t) in &fd.args {
        if !section_ok(t, fd.sec.as_deref()) {
            return Err(terr(
                "SectionMismatch",
                "TFDECL",
                format!("argument `{x}` of type `{t}` is not allowed in section \"{}\"", fd.sec.as_deref().unwrap_or("")),
                sp,
            ));
        }
    }
    let mut c = Checker::new(ctx);
    c.set_scope(fd.args.iter().chain(fd.vars.iter()).cloned().collect());
    let mut body = fd.body.clone();
    let (t, eff) = c.check(&mut body, Some(&fd.rt))?;
    if t != fd.rt {
        return Err(terr(
            "ReturnTypeMismatch",
            "TFDECL",
            format!("`{}` is declared to return `{}` but its body has type `{t}`", fd.name, fd.rt),
            body.span,
        ));
    }
    if let Some(declared) = &fd.ef {
        if !eff.subset_of(declared) {
            return Err(terr(
                "EffectAnnotationTooSmall",
                "TFDECL",
                format!("`{}` is annotated {declared} but its body has effect {eff}", fd.name),
                sp,
            ));
        }
    }
    Ok(TypedFunDecl { decl: FunDecl { body, ..fd.clone() }, eff })
}

fn dup(name: &str, span: beepl_core::Span) -> Diagnostic {
    terr("DuplicateName", "TPROG", format!("`{name}` is declared more than once"), span)
}

pub fn check_program(p: &Program) -> TResult<TypedProgram> {
    check_program_with(p, &default_helper_registry())
}

pub fn check_program_with(p: &Program, reg: &HelperRegistry) -> TResult<TypedProgram> {
    let mut ctx = TypingContext::from_registry(reg);
    for co in &p.composites {
        let sp = beepl_core::Span::default();
        if ctx.pi.contains_key(&co.name) {
            return Err(dup(&co.name, sp));
        }
        if co.fields.is_empty() {
            return Err(terr("InvalidStruct", "TPROG", format!("struct `{}` has no fields", co.name), sp));
        }
        let mut names = BTreeSet::new();
        for (f, t) in &co.fields {
            if !names.insert(f.as_str()) {
                return Err(terr("InvalidStruct", "TPROG", format!("field `{f}` repeats in `{}`", co.name), sp));
            }
            if !matches!(t, Ty::Prim(_) | Ty::Array(..)) || !t.well_formed() {
                return Err(terr("InvalidStruct", "TPROG", format!("field `{f}` of `{}` has unsupported type `{t}`", co.name), sp));
            }
        }
        ctx.pi.insert(co.name.clone(), co.clone());
    }

    let mut names = BTreeSet::new();
    let mut decls = Vec::with_capacity(p.decls.len());
    let mut effects = BTreeMap::new();
    for d in &p.decls {
        let (name, sp) = (d.name().to_string(), d.span());
        let builtin_clash = ctx.consts.contains_key(&name) || (!matches!(d, Decl::Ext(_)) && ctx.psi.contains_key(&name));
        if !names.insert(name.clone()) || builtin_clash {
            return Err(dup(&name, sp));
        }
        match d {
            Decl::Ext(x) => {
                for t in x.args.iter().chain(std::iter::once(&x.ret)) {
                    check_ty(&ctx, t, sp)?;
                }
                if matches!(x.ret, Ty::Ref(_) | Ty::FunPtr(..)) {
                    return Err(terr("ReturnsPointer", "TPROG", format!("extern `{name}` must return an option, not `{}`", x.ret), sp));
                }
                if matches!(x.ret, Ty::Array(..) | Ty::Fun(..) | Ty::Struct(_)) || !x.args.iter().all(param_ty_ok) {
                    return Err(terr("InvalidParamType", "TPROG", format!("extern `{name}` has an unsupported signature"), sp));
                }
                if x.ef.contains(EffAtom::Divergence) {
                    return Err(terr("DivergentExtern", "TPROG", format!("extern `{name}` may not diverge"), sp));
                }
                let sig = HelperSig { name: name.clone(), args: x.args.clone(), ret: x.ret.clone(), eff: x.ef.clone() };
                match ctx.psi.get(&name) {
                    Some(known) if *known != sig => {
                        return Err(terr(
                            "HelperSignatureMismatch",
                            "TPROG",
                            format!("extern `{name}` disagrees with the helper registry"),
                            sp,
                        ))
                    }
                    _ => {
                        ctx.psi.insert(name, sig);
                    }
                }
                decls.push(d.clone());
            }
            Decl::Glob(g) => {
                check_ty(&ctx, &g.ty, sp)?;
                let mut g = g.clone();
                match &mut g.init {
                    GlobInit::Const(e) => {
                        if !matches!(g.ty, Ty::Prim(_)) {
                            return Err(terr("InvalidGlobalInit", "TGDECL", format!("global `{name}` must have a primitive type"), sp));
                        }
                        let (t, _) = Checker::new(&ctx).check(e, Some(&g.ty))?;
                        if t != g.ty {
                            return Err(terr("TypeMismatch", "TGDECL", format!("global `{name}` is `{}` but initialized with a `{t}`", g.ty), sp));
                        }
                    }
                    GlobInit::Str(_) => {
                        if !matches!(g.ty, Ty::Array(PrimTy::I8 | PrimTy::U8, _)) {
                            return Err(terr("InvalidGlobalInit", "TGDECL", format!("string initializer for `{}`", g.ty), sp));
                        }
                    }
                    GlobInit::Map => {
                        if g.ty != map_ptr() {
                            return Err(terr("InvalidGlobalInit", "TGDECL", "map declarations have the map pointer type", sp));
                        }
                    }
                }
                if !section_ok(&g.ty, g.sec.as_deref()) {
                    return Err(terr("SectionMismatch", "TGDECL", format!("global `{name}` is not allowed in its section"), sp));
                }
                ctx.globals.insert(name, g.ty.clone());
                decls.push(Decl::Glob(g));
            }
            Decl::Fun(f) => {
                let tf = check_fun_decl(&ctx, f)?;
                let sig = FunSig { args: f.args.iter().map(|(_, t)| t.clone()).collect(), eff: tf.eff.clone(), ret: f.rt.clone() };
                ctx.funs.insert(name.clone(), sig);
                effects.insert(name, tf.eff);
                decls.push(Decl::Fun(tf.decl));
            }
        }
    }
    Ok(TypedProgram {
        program: Program { decls, composites: p.composites.clone() },
        registry: reg.clone(),
        pi: ctx.pi,
        psi: ctx.psi,
        funs: ctx.funs,
        globals: ctx.globals,
        effects,
    })
}

/// Parses and checks a source text.
pub fn check_source(src: &str) -> TResult<TypedProgram> {
    let p = beepl_frontend::parse_program(src)?;
    check_program(&p)
}
