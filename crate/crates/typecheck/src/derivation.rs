use beepl_core::{EffAtom, Effect, Expr, ExprKind, Pattern, PrimOp, Ty};

use crate::context::TypingContext;
use crate::expr::{Checker, TResult};

/// One node of a typing derivation: the rule applied, its conclusion and the
/// judgments for the immediate subexpressions, in source order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Derivation {
    pub rule: &'static str,
    pub ty: Ty,
    pub eff: Effect,
    pub premises: Vec<Derivation>,
}

impl Derivation {
    pub fn size(&self) -> usize {
        1 + self.premises.iter().map(Derivation::size).sum::<usize>()
    }
}

/// Elaborates `e` and returns it together with its derivation.
pub fn derive(ctx: &TypingContext, e: &Expr) -> TResult<(Expr, Derivation)> {
    let mut e = e.clone();
    let mut c = Checker::new(ctx).recording();
    c.check(&mut e, None)?;
    let d = c.take_derivation().expect("derivation recorded");
    Ok((e, d))
}

/// Walks the derivation of `e`. At every node the rule must be the one for
/// the node's syntactic form, each premise must equal an independent
/// re-check of the corresponding subexpression, and the conclusion must be
/// computed from the premises as the rule prescribes. Returns the number of
/// nodes audited.
pub fn audit(ctx: &TypingContext, e: &Expr) -> Result<usize, String> {
    let (e, d) = derive(ctx, e).map_err(|d| format!("not well typed: {d}"))?;
    let mut scope = ctx.gamma.clone();
    walk(ctx, &mut scope, &e, &d)
}

fn recheck(ctx: &TypingContext, scope: &[(String, Ty)], e: &Expr) -> Result<(Ty, Effect), String> {
    let mut e = e.clone();
    let mut c = Checker::new(ctx);
    c.set_scope(scope.to_vec());
    c.check(&mut e, None).map_err(|d| format!("subexpression fails to re-check: {d}"))
}

fn expected_rule(e: &Expr) -> &'static str {
    match &e.kind {
        ExprKind::Var(_) => "TVAR",
        ExprKind::ConstInt(_) => "TCONSI",
        ExprKind::ConstLong(_) => "TCONSL",
        ExprKind::ConstNum(v) if v.ty().bits() == 64 => "TCONSL",
        ExprKind::ConstNum(_) => "TCONSI",
        ExprKind::ConstBool(_) => "TCONSB",
        ExprKind::UnitLit => "TUNIT",
        ExprKind::Loc(..) => "TLOC",
        ExprKind::Bytes(_) => "TBYTES",
        ExprKind::Undef => "TVALUE",
        ExprKind::Prim(PrimOp::Deref, _) => "TDEREF",
        ExprKind::Prim(PrimOp::RefOp, _) => "TREF",
        ExprKind::Prim(PrimOp::Assign, _) => "TMASSGN",
        ExprKind::Prim(PrimOp::Uop(_), _) => "TUOP",
        ExprKind::Prim(PrimOp::Bop(_), _) => "TBOP",
        ExprKind::Let(..) => "TBIND",
        ExprKind::Cond(..) => "TCOND",
        ExprKind::App(..) => "TAPP",
        ExprKind::StructInit(..) => "TSINIT",
        ExprKind::Field(..) => "TFIELD",
        ExprKind::NoneLit(_) => "TNONE",
        ExprKind::SomeLit(_) => "TSOME",
        ExprKind::Match(..) => "TMATCH",
        ExprKind::For(..) => "TFOR",
        ExprKind::Repeat { .. } => "TREPEAT",
        ExprKind::Call { .. } => "TCALL",
    }
}

fn concat_premises(ps: &[Derivation]) -> Effect {
    let mut out = Effect::empty();
    for p in ps {
        out.append(&p.eff);
    }
    out
}

fn walk(ctx: &TypingContext, scope: &mut Vec<(String, Ty)>, e: &Expr, d: &Derivation) -> Result<usize, String> {
    let want = expected_rule(e);
    let rule_ok = if want == "TMATCH" { d.rule == "TMATCHO" || d.rule == "TMATCHB" } else { d.rule == want };
    if !rule_ok {
        return Err(format!("rule {} concluded for a node that needs {want}", d.rule));
    }
    let ps = &d.premises;
    let fail = |what: &str| Err(format!("{}: {what}", d.rule));

    // Children with the extra bindings each one sees.
    let mut kids: Vec<(&Expr, Vec<(String, Ty)>)> = Vec::new();
    let mut frame_scope: Option<Vec<(String, Ty)>> = None;
    match &e.kind {
        ExprKind::Let(x, t, a, b) => {
            kids.push((a, Vec::new()));
            kids.push((b, vec![(x.clone(), t.clone().ok_or("let without type after elaboration")?)]));
        }
        ExprKind::Match(s, arms) => {
            kids.push((s, Vec::new()));
            let st = ps.first().map(|p| p.ty.clone());
            for (p, body) in arms {
                let binds = match (p, &st) {
                    (Pattern::Psome(x), Some(Ty::Option(inner))) => vec![(x.clone(), (**inner).clone())],
                    (Pattern::Pbytes { x, target, fields }, _) => {
                        let mut v = vec![(x.clone(), target.clone())];
                        v.extend(fields.iter().cloned());
                        v
                    }
                    _ => Vec::new(),
                };
                kids.push((body, binds));
            }
        }
        ExprKind::Call { frame, body } => {
            frame_scope = Some(ctx.frames.get(frame).cloned().ok_or("unknown frame")?);
            kids.push((body, Vec::new()));
        }
        ExprKind::App(_, args) => {
            // The callee premise is checked against the signature below.
            for a in args {
                kids.push((a, Vec::new()));
            }
        }
        _ => {
            for c in e.children() {
                kids.push((c, Vec::new()));
            }
        }
    }
    let offset = usize::from(matches!(e.kind, ExprKind::App(..)));
    if ps.len() != kids.len() + offset {
        return fail(&format!("{} premises for {} subexpressions", ps.len(), kids.len() + offset));
    }

    let mut count = 1;
    for (i, (k, binds)) in kids.iter().enumerate() {
        let p = &ps[i + offset];
        let saved = frame_scope.as_ref().map(|fs| std::mem::replace(scope, fs.clone()));
        let depth = scope.len();
        scope.extend(binds.iter().cloned());
        let r = recheck(ctx, scope, k).and_then(|(t, eff)| {
            if t != p.ty || eff != p.eff {
                Err(format!("{}: premise {i} records ({}, {}) but re-checks to ({t}, {eff})", d.rule, p.ty, p.eff))
            } else {
                walk(ctx, scope, k, p)
            }
        });
        scope.truncate(depth);
        if let Some(s) = saved {
            *scope = s;
        }
        count += r?;
    }

    // Conclusion from premises.
    let none = Effect::empty;
    let (ty_ok, eff) = match d.rule {
        "TVAR" | "TCONSI" | "TCONSL" | "TCONSB" | "TUNIT" | "TLOC" | "TBYTES" | "TNONE" => (ps.is_empty(), none()),
        "TREF" => (d.ty == Ty::ptr(ps[0].ty.clone()), Effect::single(EffAtom::Alloc).concat(&ps[0].eff)),
        "TDEREF" => (ps[0].ty == Ty::ptr(d.ty.clone()), Effect::single(EffAtom::Read).concat(&ps[0].eff)),
        "TMASSGN" => (
            d.ty == Ty::Unit && ps[0].ty == Ty::ptr(ps[1].ty.clone()),
            concat_premises(ps).concat(&Effect::single(EffAtom::Write)),
        ),
        "TUOP" => (matches!(ps[0].ty, Ty::Prim(_)), ps[0].eff.clone()),
        "TBOP" => (ps[0].ty == ps[1].ty && matches!(ps[0].ty, Ty::Prim(_)), concat_premises(ps)),
        "TBIND" => (d.ty == ps[1].ty, concat_premises(ps)),
        "TCOND" => (ps[0].ty == Ty::BOOL && ps[1].ty == d.ty && ps[2].ty == d.ty, concat_premises(ps)),
        "TAPP" => {
            let Ty::Fun(args, eff_e, ret) = &ps[0].ty else { return fail("callee premise is not a function type") };
            let ExprKind::App(callee, _) = &e.kind else { unreachable!() };
            let ExprKind::Var(name) = &callee.kind else { return fail("callee is not a name") };
            let sig = ctx
                .funs
                .get(name)
                .map(|f| f.fun_ty())
                .or_else(|| ctx.psi.get(name).map(|h| h.fun_ty()))
                .ok_or("callee not in scope")?;
            let arg_tys: Vec<Ty> = ps[1..].iter().map(|p| p.ty.clone()).collect();
            (sig == ps[0].ty && **ret == d.ty && *args == arg_tys, concat_premises(ps).concat(eff_e))
        }
        "TSINIT" => (true, concat_premises(ps).concat(&Effect::single(EffAtom::Alloc))),
        "TFIELD" => {
            let read = matches!(ps[0].ty, Ty::Ref(_));
            let mut eff = ps[0].eff.clone();
            if read {
                eff.push(EffAtom::Read);
            }
            (true, eff)
        }
        "TSOME" => (d.ty == Ty::Option(Box::new(ps[0].ty.clone())), ps[0].eff.clone()),
        "TMATCHO" | "TMATCHB" => {
            let arms_agree = ps[1..].iter().all(|p| p.ty == d.ty);
            let scrut_ok = if d.rule == "TMATCHO" { matches!(ps[0].ty, Ty::Option(_)) } else { ps[0].ty == Ty::Bytes };
            (arms_agree && scrut_ok, concat_premises(ps))
        }
        "TFOR" => (
            d.ty == Ty::Unit && ps[0].ty == ps[1].ty && (ps[0].ty == Ty::INT || ps[0].ty == Ty::LONG),
            concat_premises(ps),
        ),
        "TREPEAT" => (d.ty == Ty::Unit, concat_premises(ps)),
        "TCALL" => (d.ty == ps[0].ty, ps[0].eff.clone()),
        other => return Err(format!("unexpected rule {other}")),
    };
    if !ty_ok {
        return fail("conclusion type does not follow from the premises");
    }
    if eff != d.eff {
        return fail(&format!("effect {} but premises give {eff}", d.eff));
    }
    Ok(count + usize::from(offset == 1))
}
