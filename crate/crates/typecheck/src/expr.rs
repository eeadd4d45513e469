use beepl_core::{
    fvar, Bop, EffAtom, Effect, Expr, ExprKind, IntVal, Pattern, PrimOp, PrimTy, Span, Ty, Uop,
};
use beepl_frontend::Diagnostic;

use crate::context::TypingContext;
use crate::derivation::Derivation;

pub type TResult<T> = Result<T, Diagnostic>;

pub(crate) fn terr(code: &str, rule: &str, msg: impl Into<String>, span: Span) -> Diagnostic {
    Diagnostic::error(code, msg, span).with_rule(rule)
}

/// Checks well-formedness of a written type and that every struct it names exists.
pub(crate) fn check_ty(ctx: &TypingContext, ty: &Ty, span: Span) -> TResult<()> {
    if !ty.well_formed() {
        return Err(Diagnostic::error("InvalidType", format!("ill-formed type `{ty}`"), span));
    }
    let mut names = Vec::new();
    ty.mentions_struct(&mut names);
    for n in names {
        if !ctx.pi.contains_key(n) {
            return Err(Diagnostic::error("UnknownStruct", format!("unknown struct `{n}`"), span));
        }
    }
    Ok(())
}

/// Literals whose type is decided by their context.
fn literalish(e: &Expr) -> bool {
    match &e.kind {
        ExprKind::ConstInt(_) | ExprKind::ConstLong(_) | ExprKind::NoneLit(None) => true,
        ExprKind::Prim(PrimOp::Uop(Uop::Neg | Uop::BitNot), a) => literalish(&a[0]),
        ExprKind::Prim(PrimOp::Bop(op), a) if !op.is_comparison() && !op.is_logical() => {
            literalish(&a[0]) && literalish(&a[1])
        }
        _ => false,
    }
}

/// Retypes an unsuffixed literal to the integer type the context expects.
fn coerce_literal(e: &mut Expr, hint: &Ty) {
    let Some(p) = hint.as_prim() else { return };
    if !p.is_integer() {
        return;
    }
    let v = match e.kind {
        ExprKind::ConstInt(v) => v as i128,
        ExprKind::ConstLong(v) if p.bits() == 64 => v as i128,
        _ => return,
    };
    if p.fits(v) {
        e.kind = Expr::num(IntVal::wrap(p, v)).kind;
    }
}

fn lit_rule(p: PrimTy) -> &'static str {
    if p.bits() == 64 {
        "TCONSL"
    } else {
        "TCONSI"
    }
}

fn cat(parts: &[&Effect]) -> Effect {
    let mut out = Effect::empty();
    for p in parts {
        out.append(p);
    }
    out
}

fn prepend(a: EffAtom, eff: &Effect) -> Effect {
    Effect::single(a).concat(eff)
}

type Judgment = (&'static str, Ty, Effect);

/// The elaborating checker. Elaboration fills omitted `let` types, types
/// `none` literals, retypes literals from context, replaces named constants by
/// literals and wraps reference arguments passed to option parameters. It is
/// idempotent on its own output.
pub struct Checker<'a> {
    ctx: &'a TypingContext,
    scope: Vec<(String, Ty)>,
    normalize: bool,
    record: Option<Vec<Derivation>>,
}

impl<'a> Checker<'a> {
    pub fn new(ctx: &'a TypingContext) -> Checker<'a> {
        Checker { ctx, scope: ctx.gamma.clone(), normalize: false, record: None }
    }

    /// Deduplicates effect atoms after every rule. Inclusion results are
    /// unchanged; list shapes are not those of the rules.
    pub fn normalized(mut self) -> Checker<'a> {
        self.normalize = true;
        self
    }

    pub fn recording(mut self) -> Checker<'a> {
        self.record = Some(Vec::new());
        self
    }

    /// Replaces the local environment.
    pub fn set_scope(&mut self, scope: Vec<(String, Ty)>) {
        self.scope = scope;
    }

    pub fn take_derivation(&mut self) -> Option<Derivation> {
        self.record.as_mut().and_then(Vec::pop)
    }

    fn pop_node(&mut self) -> Option<Derivation> {
        self.record.as_mut().and_then(Vec::pop)
    }

    fn push_node(&mut self, d: Option<Derivation>) {
        if let (Some(rec), Some(d)) = (self.record.as_mut(), d) {
            rec.push(d);
        }
    }

    fn lookup(&self, x: &str) -> Option<&Ty> {
        self.scope.iter().rev().find(|(y, _)| y == x).map(|(_, t)| t).or_else(|| self.ctx.globals.get(x))
    }

    fn bind_ok(&self, x: &str, span: Span, rule: &str) -> TResult<()> {
        if self.ctx.is_global_name(x) {
            return Err(terr("ShadowsGlobal", rule, format!("local `{x}` shadows a global name"), span));
        }
        Ok(())
    }

    pub fn check(&mut self, e: &mut Expr, hint: Option<&Ty>) -> TResult<(Ty, Effect)> {
        let mark = self.record.as_ref().map_or(0, Vec::len);
        let (rule, ty, mut eff) = self.check_kind(e, hint)?;
        if self.normalize {
            eff.dedup_kinds();
        }
        if let Some(rec) = &mut self.record {
            let premises = rec.split_off(mark);
            rec.push(Derivation { rule, ty: ty.clone(), eff: eff.clone(), premises });
        }
        Ok((ty, eff))
    }

    /// Checks two expressions that must agree on a type, typing a
    /// context-dependent literal after its partner. Derivations stay in
    /// source order.
    fn check_pair(&mut self, a: &mut Expr, b: &mut Expr, hint: Option<&Ty>) -> TResult<((Ty, Effect), (Ty, Effect))> {
        if hint.is_none() && literalish(a) && !literalish(b) {
            let rb = self.check(b, None)?;
            let db = self.pop_node();
            let ra = self.check(a, Some(&rb.0))?;
            self.push_node(db);
            Ok((ra, rb))
        } else {
            let ra = self.check(a, hint)?;
            let hb = hint.cloned().unwrap_or_else(|| ra.0.clone());
            let rb = self.check(b, Some(&hb))?;
            Ok((ra, rb))
        }
    }

    fn check_kind(&mut self, e: &mut Expr, hint: Option<&Ty>) -> TResult<Judgment> {
        let span = e.span;
        if let Some(h) = hint {
            coerce_literal(e, h);
        }
        if let ExprKind::Var(x) = &e.kind {
            if self.lookup(x).is_none() {
                if let Some(v) = self.ctx.consts.get(x) {
                    e.kind = Expr::num(*v).kind;
                }
            }
        }
        match &mut e.kind {
            ExprKind::Var(x) => match self.lookup(x) {
                Some(Ty::Array(..)) => {
                    Err(terr("ArrayValue", "TVAR", format!("array `{x}` cannot be used as a value"), span))
                }
                Some(t) => Ok(("TVAR", t.clone(), Effect::empty())),
                None if self.ctx.funs.contains_key(x.as_str()) || self.ctx.psi.contains_key(x.as_str()) => {
                    Err(terr("FunctionAsValue", "TVAR", format!("function `{x}` can only be called"), span))
                }
                None => Err(terr("UnboundVariable", "TVAR", format!("unbound variable `{x}`"), span)),
            },
            ExprKind::ConstInt(_) => Ok(("TCONSI", Ty::INT, Effect::empty())),
            ExprKind::ConstLong(_) => Ok(("TCONSL", Ty::LONG, Effect::empty())),
            ExprKind::ConstNum(v) => Ok((lit_rule(v.ty()), Ty::Prim(v.ty()), Effect::empty())),
            ExprKind::ConstBool(_) => Ok(("TCONSB", Ty::BOOL, Effect::empty())),
            ExprKind::UnitLit => Ok(("TUNIT", Ty::Unit, Effect::empty())),
            ExprKind::Loc(b, _) => match self.ctx.sigma.get(b) {
                Some(t @ (Ty::Ref(_) | Ty::Struct(_))) => Ok(("TLOC", t.clone(), Effect::empty())),
                _ => Err(terr("UnknownLocation", "TLOC", format!("location {} has no pointer type in the store typing", b.0), span)),
            },
            ExprKind::Bytes(_) => Ok(("TBYTES", Ty::Bytes, Effect::empty())),
            ExprKind::Undef => Err(terr("UndefValue", "TVALUE", "undefined value", span)),
            ExprKind::Prim(op, args) => {
                let op = *op;
                self.check_prim(op, args, hint, span)
            }
            ExprKind::Let(x, declared, bound, body) => {
                self.bind_ok(x, span, "TBIND")?;
                if let Some(t) = declared.as_ref() {
                    check_ty(self.ctx, t, span)?;
                }
                let (t1, e1) = self.check(bound, declared.as_ref())?;
                if let Some(t) = declared.as_ref() {
                    if *t != t1 {
                        return Err(terr(
                            "TypeMismatch",
                            "TBIND",
                            format!("`{x}` is declared `{t}` but bound to a `{t1}`"),
                            bound.span,
                        ));
                    }
                }
                *declared = Some(t1.clone());
                self.scope.push((x.clone(), t1));
                let r = self.check(body, hint);
                self.scope.pop();
                let (t2, e2) = r?;
                Ok(("TBIND", t2, e1.concat(&e2)))
            }
            ExprKind::Cond(g, t, f) => {
                let (tg, eg) = self.check(g, Some(&Ty::BOOL))?;
                if tg != Ty::BOOL {
                    return Err(terr("GuardNotBool", "TCOND", format!("condition has type `{tg}`, expected `bool`"), g.span));
                }
                let ((t1, e1), (t2, e2)) = self.check_pair(t, f, hint)?;
                if t1 != t2 {
                    return Err(terr("BranchTypeMismatch", "TCOND", format!("branches have types `{t1}` and `{t2}`"), span));
                }
                Ok(("TCOND", t1, cat(&[&eg, &e1, &e2])))
            }
            ExprKind::App(callee, args) => self.check_app(callee, args, span),
            ExprKind::StructInit(s, fields) => {
                let co = self
                    .ctx
                    .pi
                    .get(s.as_str())
                    .ok_or_else(|| terr("UnknownStruct", "TSINIT", format!("unknown struct `{s}`"), span))?
                    .clone();
                if co.fields.len() != fields.len()
                    || co.fields.iter().zip(fields.iter()).any(|((f, _), (g, _))| f != g)
                {
                    let want: Vec<&str> = co.fields.iter().map(|(f, _)| f.as_str()).collect();
                    return Err(terr(
                        "FieldMismatch",
                        "TSINIT",
                        format!("struct `{s}` must be initialized with fields {{{}}} in order", want.join(", ")),
                        span,
                    ));
                }
                let mut eff = Effect::empty();
                for ((f, fty), (_, fe)) in co.fields.iter().zip(fields.iter_mut()) {
                    if matches!(fty, Ty::Array(..)) {
                        return Err(terr("FieldMismatch", "TSINIT", format!("array field `{f}` cannot be initialized"), fe.span));
                    }
                    let (t, ef) = self.check(fe, Some(fty))?;
                    if t != *fty {
                        return Err(terr("FieldMismatch", "TSINIT", format!("field `{f}` expects `{fty}`, found `{t}`"), fe.span));
                    }
                    eff.append(&ef);
                }
                eff.push(EffAtom::Alloc);
                Ok(("TSINIT", Ty::ptr(Ty::Struct(s.clone())), eff))
            }
            ExprKind::Field(target, f) => {
                let (t, eff) = self.check(target, None)?;
                let (id, eff) = match &t {
                    Ty::Struct(id) => (id.clone(), eff),
                    Ty::Ref(inner) => match &**inner {
                        Ty::Struct(id) => (id.clone(), eff.concat(&Effect::single(EffAtom::Read))),
                        _ => return Err(terr("NotAStruct", "TFIELD", format!("field access on `{t}`"), span)),
                    },
                    Ty::Option(_) => {
                        return Err(terr("DerefOfOption", "TFIELD", format!("field access through option type `{t}`"), span))
                    }
                    _ => return Err(terr("NotAStruct", "TFIELD", format!("field access on `{t}`"), span)),
                };
                let co = self
                    .ctx
                    .pi
                    .get(&id)
                    .ok_or_else(|| terr("UnknownStruct", "TFIELD", format!("unknown struct `{id}`"), span))?;
                let fty = co
                    .fields
                    .iter()
                    .find(|(g, _)| g == f)
                    .map(|(_, t)| t.clone())
                    .ok_or_else(|| terr("UnknownField", "TFIELD", format!("struct `{id}` has no field `{f}`"), span))?;
                if !matches!(fty, Ty::Prim(_) | Ty::Bytes) {
                    return Err(terr("FieldNotScalar", "TFIELD", format!("field `{f}` of type `{fty}` cannot be read"), span));
                }
                Ok(("TFIELD", fty, eff))
            }
            ExprKind::NoneLit(t) => {
                if t.is_none() {
                    match hint {
                        Some(h @ Ty::Option(_)) => *t = Some(h.clone()),
                        _ => return Err(terr("AmbiguousNone", "TNONE", "cannot infer the type of `none`", span)),
                    }
                }
                let ty = t.clone().expect("set above");
                if !matches!(ty, Ty::Option(_)) {
                    return Err(terr("InvalidType", "TNONE", format!("`none` at non-option type `{ty}`"), span));
                }
                check_ty(self.ctx, &ty, span)?;
                Ok(("TNONE", ty, Effect::empty()))
            }
            ExprKind::SomeLit(inner) => {
                let h = match hint {
                    Some(Ty::Option(t)) => Some(&**t),
                    _ => None,
                };
                let (t, eff) = self.check(inner, h)?;
                if !matches!(t, Ty::Ref(_) | Ty::FunPtr(..)) {
                    return Err(terr("SomeOfNonPointer", "TSOME", format!("`some` needs a pointer, found `{t}`"), span));
                }
                Ok(("TSOME", Ty::Option(Box::new(t)), eff))
            }
            ExprKind::Match(scrut, arms) => self.check_match(scrut, arms, hint, span),
            ExprKind::For(lo, hi, _, body) => {
                let ((t1, e1), (t2, e2)) = self.check_pair(lo, hi, None)?;
                if t1 != t2 || !(t1 == Ty::INT || t1 == Ty::LONG) {
                    return Err(terr(
                        "ForBoundType",
                        "TFOR",
                        format!("loop bounds must both be `int` or both `long`, found `{t1}` and `{t2}`"),
                        span,
                    ));
                }
                let fb = fvar(body);
                let mut fl = fvar(lo);
                fl.extend(fvar(hi));
                if let Some(x) = fb.intersection(&fl).next() {
                    return Err(terr(
                        "ForBodyCapturesBounds",
                        "TFOR",
                        format!("loop body mentions `{x}`, which also occurs in the bounds"),
                        body.span,
                    ));
                }
                let (_, eb) = self.check(body, None)?;
                Ok(("TFOR", Ty::Unit, cat(&[&e1, &e2, &eb])))
            }
            ExprKind::Repeat { body, current, .. } => {
                let (_, ec) = self.check(current, None)?;
                let (_, eb) = self.check(body, None)?;
                Ok(("TREPEAT", Ty::Unit, ec.concat(&eb)))
            }
            ExprKind::Call { frame, body } => {
                let params = self
                    .ctx
                    .frames
                    .get(frame)
                    .cloned()
                    .ok_or_else(|| terr("UnknownFrame", "TCALL", format!("no frame {}", frame.0), span))?;
                let saved = std::mem::replace(&mut self.scope, params);
                let r = self.check(body, hint);
                self.scope = saved;
                let (t, eff) = r?;
                Ok(("TCALL", t, eff))
            }
        }
    }

    fn check_prim(&mut self, op: PrimOp, args: &mut [Expr], hint: Option<&Ty>, span: Span) -> TResult<Judgment> {
        match op {
            PrimOp::Deref => {
                let (t, eff) = self.check(&mut args[0], None)?;
                match t {
                    Ty::Ref(inner) if !matches!(*inner, Ty::Array(..)) => {
                        Ok(("TDEREF", *inner, prepend(EffAtom::Read, &eff)))
                    }
                    Ty::Option(_) => Err(terr(
                        "DerefOfOption",
                        "TDEREF",
                        format!("cannot dereference a value of option type `{t}`; match on it first"),
                        span,
                    )),
                    t => Err(terr("NotAPointer", "TDEREF", format!("cannot dereference a value of type `{t}`"), span)),
                }
            }
            PrimOp::RefOp => {
                let h = match hint {
                    Some(Ty::Ref(t)) => Some(&**t),
                    _ => None,
                };
                let (t, eff) = self.check(&mut args[0], h)?;
                if !t.is_basic() || matches!(t, Ty::Array(..)) {
                    return Err(terr("RefOfNonBasic", "TREF", format!("cannot take a reference to a `{t}`"), span));
                }
                Ok(("TREF", Ty::ptr(t), prepend(EffAtom::Alloc, &eff)))
            }
            PrimOp::Assign => {
                let (a, b) = args.split_at_mut(1);
                let (t1, e1) = self.check(&mut a[0], None)?;
                let target = match t1 {
                    Ty::Ref(inner) if !matches!(*inner, Ty::Array(..)) => *inner,
                    Ty::Option(_) => {
                        return Err(terr("DerefOfOption", "TMASSGN", format!("cannot assign through option type `{t1}`"), span))
                    }
                    t => return Err(terr("NotAPointer", "TMASSGN", format!("cannot assign through a `{t}`"), span)),
                };
                let (t2, e2) = self.check(&mut b[0], Some(&target))?;
                if t2 != target {
                    return Err(terr("TypeMismatch", "TMASSGN", format!("assigning a `{t2}` to a `{target}*`"), b[0].span));
                }
                Ok(("TMASSGN", Ty::Unit, cat(&[&e1, &e2, &Effect::single(EffAtom::Write)])))
            }
            PrimOp::Uop(u) => {
                let h = match u {
                    Uop::Neg | Uop::BitNot => hint.filter(|h| h.is_integer()),
                    Uop::LogNot => Some(&Ty::BOOL),
                    Uop::Cast(_) => None,
                };
                let (t, eff) = self.check(&mut args[0], h)?;
                let p = match &t {
                    Ty::Prim(p) => *p,
                    t if t.is_pointer() => {
                        return Err(terr("PointerArithmetic", "TUOP", format!("operator applied to pointer type `{t}`"), span))
                    }
                    t => return Err(terr("InvalidOperand", "TUOP", format!("operator applied to `{t}`"), span)),
                };
                let ok = match u {
                    Uop::Neg | Uop::BitNot => p.is_integer(),
                    Uop::LogNot => p == PrimTy::Bool,
                    Uop::Cast(to) => p.is_integer() && to.is_integer(),
                };
                if !ok {
                    return Err(terr("InvalidOperand", "TUOP", format!("operator not defined on `{t}`"), span));
                }
                let rt = match u {
                    Uop::Cast(to) => Ty::Prim(to),
                    _ => t,
                };
                Ok(("TUOP", rt, eff))
            }
            PrimOp::Bop(b) => {
                let h = if b.is_comparison() {
                    None
                } else if b.is_logical() {
                    Some(&Ty::BOOL)
                } else {
                    hint.filter(|h| h.is_integer())
                };
                let (l, r) = args.split_at_mut(1);
                let ((t1, e1), (t2, e2)) = self.check_pair(&mut l[0], &mut r[0], h)?;
                for t in [&t1, &t2] {
                    if t.is_pointer() {
                        return Err(terr("PointerArithmetic", "TBOP", format!("`{}` applied to pointer type `{t}`", b.symbol()), span));
                    }
                }
                if t1 != t2 {
                    return Err(terr(
                        "OperandTypeMismatch",
                        "TBOP",
                        format!("`{}` operands have types `{t1}` and `{t2}`", b.symbol()),
                        span,
                    ));
                }
                let Ty::Prim(p) = t1 else {
                    return Err(terr("InvalidOperand", "TBOP", format!("`{}` applied to `{t1}`", b.symbol()), span));
                };
                let ok = match b {
                    Bop::Eq | Bop::Ne => true,
                    Bop::Land | Bop::Lor => p == PrimTy::Bool,
                    _ => p.is_integer(),
                };
                if !ok {
                    return Err(terr("InvalidOperand", "TBOP", format!("`{}` is not defined on `{t1}`", b.symbol()), span));
                }
                let rt = if b.is_comparison() || b.is_logical() { Ty::BOOL } else { t1 };
                Ok(("TBOP", rt, e1.concat(&e2)))
            }
        }
    }

    fn check_app(&mut self, callee: &mut Expr, args: &mut [Expr], span: Span) -> TResult<Judgment> {
        let ExprKind::Var(name) = &callee.kind else {
            return Err(terr("NotCallable", "TAPP", "only named functions can be called", callee.span));
        };
        if self.scope.iter().any(|(x, _)| x == name) || self.ctx.globals.contains_key(name) {
            return Err(terr("NotCallable", "TAPP", format!("`{name}` is not a function"), callee.span));
        }
        let (params, eff_e, ret) = if let Some(f) = self.ctx.funs.get(name) {
            (f.args.clone(), f.eff.clone(), f.ret.clone())
        } else if let Some(h) = self.ctx.psi.get(name) {
            (h.args.clone(), h.eff.clone(), h.ret.clone())
        } else {
            return Err(terr("UnknownHelper", "TAPP", format!("unknown function or helper `{name}`"), callee.span));
        };
        if params.len() != args.len() {
            return Err(terr(
                "ArgArityMismatch",
                "TAPP",
                format!("`{name}` takes {} argument(s), {} given", params.len(), args.len()),
                span,
            ));
        }
        if let Some(rec) = &mut self.record {
            let fty = Ty::Fun(params.clone(), eff_e.clone(), Box::new(ret.clone()));
            rec.push(Derivation { rule: "TVAR", ty: fty, eff: Effect::empty(), premises: Vec::new() });
        }
        let mut eff = Effect::empty();
        for (a, p) in args.iter_mut().zip(params.iter()) {
            let (mut t, ea) = self.check(a, Some(p))?;
            if let Ty::Option(inner) = p {
                if t == **inner && matches!(t, Ty::Ref(_)) {
                    let sp = a.span;
                    let inner_expr = std::mem::replace(a, Expr::unit());
                    *a = Expr::at(ExprKind::SomeLit(Box::new(inner_expr)), sp);
                    t = p.clone();
                    if let Some(rec) = &mut self.record {
                        let d = rec.pop().expect("argument derivation");
                        rec.push(Derivation { rule: "TSOME", ty: t.clone(), eff: ea.clone(), premises: vec![d] });
                    }
                }
            }
            if t != *p {
                return Err(terr("ArgTypeMismatch", "TAPP", format!("argument of `{name}` expects `{p}`, found `{t}`"), a.span));
            }
            eff.append(&ea);
        }
        eff.append(&eff_e);
        Ok(("TAPP", ret, eff))
    }

    fn check_match(
        &mut self,
        scrut: &mut Expr,
        arms: &mut [(Pattern, Expr)],
        hint: Option<&Ty>,
        span: Span,
    ) -> TResult<Judgment> {
        let (ts, em) = self.check(scrut, None)?;
        let (rule, binders) = match &ts {
            Ty::Option(inner) => ("TMATCHO", self.option_arms(arms, inner, span)?),
            Ty::Bytes => ("TMATCHB", self.bytes_arms(arms, span)?),
            t => return Err(terr("ScrutineeType", "TMATCH", format!("cannot match on a value of type `{t}`"), scrut.span)),
        };
        // Context-typed literal arms are checked last.
        let mut order: Vec<usize> = (0..arms.len()).collect();
        if hint.is_none() {
            order.sort_by_key(|&i| literalish(&arms[i].1));
        }
        let mut results: Vec<Option<(Ty, Effect, Option<Derivation>)>> = vec![None; arms.len()];
        // The hint only guides literals; arms are compared with each other.
        let mut expected: Option<Ty> = None;
        for &i in &order {
            let depth = self.scope.len();
            for (x, t) in &binders[i] {
                self.bind_ok(x, span, rule)?;
                self.scope.push((x.clone(), t.clone()));
            }
            let r = self.check(&mut arms[i].1, expected.as_ref().or(hint));
            self.scope.truncate(depth);
            let (t, eff) = r?;
            if let Some(want) = &expected {
                if t != *want {
                    return Err(terr(
                        "BranchTypeMismatch",
                        rule,
                        format!("match arms have types `{want}` and `{t}`"),
                        arms[i].1.span,
                    ));
                }
            }
            expected.get_or_insert_with(|| t.clone());
            let d = self.pop_node();
            results[i] = Some((t, eff, d));
        }
        let mut eff = em;
        let mut ty = None;
        for r in results {
            let (t, e, d) = r.expect("every arm checked");
            eff.append(&e);
            ty.get_or_insert(t);
            self.push_node(d);
        }
        Ok((rule, ty.expect("at least one arm"), eff))
    }

    fn option_arms(&self, arms: &[(Pattern, Expr)], inner: &Ty, span: Span) -> TResult<Vec<Vec<(String, Ty)>>> {
        let none = arms.iter().filter(|(p, _)| matches!(p, Pattern::Pnone)).count();
        let some = arms.iter().filter(|(p, _)| matches!(p, Pattern::Psome(_))).count();
        let wild = arms.iter().filter(|(p, _)| matches!(p, Pattern::Pwild)).count();
        if arms.iter().any(|(p, _)| matches!(p, Pattern::Pbytes { .. })) {
            return Err(terr("PatternTypeMismatch", "TMATCHO", "bytes pattern used on an option", span));
        }
        if arms.len() != 2 || none > 1 || some > 1 || wild > 1 {
            return Err(terr(
                "NonExhaustiveOptionMatch",
                "TMATCHO",
                "an option match needs exactly one `pnone` and one `psome` arm (one may be `_`)",
                span,
            ));
        }
        Ok(arms
            .iter()
            .map(|(p, _)| match p {
                Pattern::Psome(x) => vec![(x.clone(), inner.clone())],
                _ => Vec::new(),
            })
            .collect())
    }

    fn bytes_arms(&self, arms: &[(Pattern, Expr)], span: Span) -> TResult<Vec<Vec<(String, Ty)>>> {
        let shape = "a bytes match needs a bytes pattern arm followed by a `_` arm";
        let [(Pattern::Pbytes { x, target, fields }, _), (Pattern::Pwild, _)] = arms else {
            return Err(terr("BytesMatchShape", "TMATCHB", shape, span));
        };
        check_ty(self.ctx, target, span)?;
        let mut binders = vec![(x.clone(), target.clone())];
        match target {
            Ty::Prim(_) => {
                if !fields.is_empty() {
                    return Err(terr("FieldMismatch", "TMATCHB", format!("primitive target `{target}` has no fields"), span));
                }
            }
            Ty::Struct(s) => {
                let co = &self.ctx.pi[s];
                if let Some((f, t)) = co.fields.iter().find(|(_, t)| !matches!(t, Ty::Prim(_) | Ty::Array(..))) {
                    return Err(terr(
                        "FieldMismatch",
                        "TMATCHB",
                        format!("struct `{s}` cannot be decoded from bytes: field `{f}` has type `{t}`"),
                        span,
                    ));
                }
                for (y, ty) in fields {
                    match co.fields.iter().find(|(f, _)| f == y) {
                        Some((_, ft)) if ft == ty && matches!(ty, Ty::Prim(_)) => {}
                        Some((_, ft)) => {
                            return Err(terr(
                                "FieldMismatch",
                                "TMATCHB",
                                format!("field `{y}` of `{s}` has type `{ft}`, pattern says `{ty}`"),
                                span,
                            ))
                        }
                        None => {
                            return Err(terr("FieldMismatch", "TMATCHB", format!("struct `{s}` has no field `{y}`"), span))
                        }
                    }
                    if y == x || binders.iter().any(|(b, _)| b == y) {
                        return Err(terr("FieldMismatch", "TMATCHB", format!("`{y}` is bound twice"), span));
                    }
                    binders.push((y.clone(), ty.clone()));
                }
            }
            t => {
                return Err(terr("PatternTypeMismatch", "TMATCHB", format!("cannot decode a `{t}` from bytes"), span));
            }
        }
        Ok(vec![binders, Vec::new()])
    }
}

/// `Γ,Σ,Π,Ψ ⊢ e : τ, η` on an unmodified copy of `e`.
pub fn infer_expr(ctx: &TypingContext, e: &Expr) -> TResult<(Ty, Effect)> {
    let mut e = e.clone();
    Checker::new(ctx).check(&mut e, None)
}

/// Like [`infer_expr`] with effects deduplicated after every rule.
pub fn infer_expr_normalized(ctx: &TypingContext, e: &Expr) -> TResult<(Ty, Effect)> {
    let mut e = e.clone();
    Checker::new(ctx).normalized().check(&mut e, None)
}

/// Checks `e` in place, elaborating it, with an optional expected type.
pub fn elaborate_expr(ctx: &TypingContext, e: &mut Expr, expected: Option<&Ty>) -> TResult<(Ty, Effect)> {
    Checker::new(ctx).check(e, expected)
}
