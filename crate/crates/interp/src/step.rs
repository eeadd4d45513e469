use beepl_core::{Expr, ExprKind, FrameId, Pattern, PrimOp, Ty, Value};

use crate::extract::{extract, ExtractError};
use crate::memory::MemError;
use crate::ops::{bop_guarded, bop_sem, range, uop_sem};
use crate::state::{Frame, State, TraceLine};
use crate::subst::subst_in_place;
use crate::world::{call_external, ExternalWorld};

/// Why no rule applies.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum Fault {
    #[error("dereference of a non-location value `{0}`")]
    NullDeref(String),
    #[error("uninitialized read: {0}")]
    Uninit(MemError),
    #[error("memory fault: {0}")]
    Memory(MemError),
    #[error("undefined value produced by `{0}`")]
    Undef(String),
    #[error("unbound name `{0}`")]
    Unbound(String),
    #[error("no rule applies: {0}")]
    NoRule(String),
}

impl Fault {
    fn mem(e: MemError) -> Fault {
        match e {
            MemError::Uninit(..) => Fault::Uninit(e),
            e => Fault::Memory(e),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StepOutcome {
    Stepped { expr: Expr, rule: &'static str },
    IsValue,
    Stuck(Fault),
}

/// One small step from `e`. The state is updated in place.
pub fn step(s: &mut State, w: &mut ExternalWorld, e: &Expr) -> StepOutcome {
    let mut e = e.clone();
    match step_mut(s, w, &mut e) {
        Ok(Some(rule)) => StepOutcome::Stepped { expr: e, rule },
        Ok(None) => StepOutcome::IsValue,
        Err(f) => StepOutcome::Stuck(f),
    }
}

/// In-place variant of [`step`]. Returns the rule applied, or `None` when
/// `e` is already a value.
pub fn step_mut(s: &mut State, w: &mut ExternalWorld, e: &mut Expr) -> Result<Option<&'static str>, Fault> {
    if e.is_value() {
        return Ok(None);
    }
    let root = s.root;
    go(s, w, e, root).map(Some)
}

fn val(e: &Expr) -> Value {
    e.as_value().expect("checked to be a value")
}

fn set_value(e: &mut Expr, v: &Value) {
    let sp = e.span;
    *e = Expr::from_value(v);
    e.span = sp;
}

fn replace(e: &mut Expr, with: Expr) {
    *e = with;
}

fn first_non_value(es: &mut [Expr]) -> Option<&mut Expr> {
    es.iter_mut().find(|x| !x.is_value())
}

fn summary(e: &Expr) -> String {
    match &e.kind {
        ExprKind::Var(x) => x.clone(),
        ExprKind::Prim(PrimOp::Deref, _) => "!_".into(),
        ExprKind::Prim(PrimOp::RefOp, _) => "ref(_)".into(),
        ExprKind::Prim(PrimOp::Assign, _) => "_ := _".into(),
        ExprKind::Prim(PrimOp::Uop(u), _) => format!("{u:?}(_)"),
        ExprKind::Prim(PrimOp::Bop(b), a) => {
            let show = |x: &Expr| x.as_value().map_or("_".to_string(), |v| v.to_string());
            format!("{} {} {}", show(&a[0]), b.symbol(), show(&a[1]))
        }
        ExprKind::Let(x, ..) => format!("let {x}"),
        ExprKind::Cond(..) => "if".into(),
        ExprKind::App(f, _) => match &f.kind {
            ExprKind::Var(n) => format!("{n}(..)"),
            _ => "call".into(),
        },
        ExprKind::StructInit(s, _) => format!("struct {s}"),
        ExprKind::Field(_, f) => format!("_.{f}"),
        ExprKind::Match(..) => "match".into(),
        ExprKind::For(..) => "for".into(),
        _ => "_".into(),
    }
}

fn go(s: &mut State, w: &mut ExternalWorld, e: &mut Expr, frame: Option<FrameId>) -> Result<&'static str, Fault> {
    let redex = if s.config.trace { Some(summary(e)) } else { None };
    let (rule, here) = reduce(s, w, e, frame)?;
    if let (Some(redex), true) = (redex, here) {
        s.trace.push(TraceLine { rule, redex, blocks: s.theta.blocks.len() });
    }
    Ok(rule)
}

/// Steps a subexpression; the rule is reported and traced there.
fn inner(s: &mut State, w: &mut ExternalWorld, e: &mut Expr, frame: Option<FrameId>) -> Result<(&'static str, bool), Fault> {
    Ok((go(s, w, e, frame)?, false))
}

fn reduce(
    s: &mut State,
    w: &mut ExternalWorld,
    e: &mut Expr,
    frame: Option<FrameId>,
) -> Result<(&'static str, bool), Fault> {
    match &mut e.kind {
        ExprKind::Var(x) => {
            if let Some((b, _)) = frame.and_then(|f| s.frames.get(&f)).and_then(|f| f.get(x)) {
                let v = read_var(s, b)?;
                set_value(e, &v);
                return Ok(("LVAR", true));
            }
            if let Some((b, _)) = s.delta.globals.get(x.as_str()) {
                let v = read_var(s, *b)?;
                set_value(e, &v);
                return Ok(("GVAR", true));
            }
            Err(Fault::Unbound(x.clone()))
        }
        ExprKind::Prim(op, args) => {
            let op = *op;
            if let Some(a) = first_non_value(args) {
                return inner(s, w, a, frame);
            }
            let vs: Vec<Value> = args.iter().map(val).collect();
            let (v, rule) = prim(s, op, &vs)?;
            set_value(e, &v);
            Ok((rule, true))
        }
        ExprKind::Let(x, _, bound, body) => {
            if !bound.is_value() {
                return inner(s, w, bound, frame);
            }
            let x = x.clone();
            let v = (**bound).clone();
            let mut b = std::mem::replace(&mut **body, Expr::unit());
            subst_in_place(&mut b, &x, &v);
            replace(e, b);
            Ok(("LETV", true))
        }
        ExprKind::Cond(g, t, f) => {
            if !g.is_value() {
                return inner(s, w, g, frame);
            }
            let (next, rule) = match val(g) {
                Value::Bool(true) => (std::mem::replace(&mut **t, Expr::unit()), "CONDT"),
                Value::Bool(false) => (std::mem::replace(&mut **f, Expr::unit()), "CONDF"),
                v => return Err(Fault::NoRule(format!("condition on `{v}`"))),
            };
            replace(e, next);
            Ok((rule, true))
        }
        ExprKind::App(callee, args) => {
            if let Some(a) = first_non_value(args) {
                return inner(s, w, a, frame);
            }
            let ExprKind::Var(name) = &callee.kind else {
                return Err(Fault::NoRule("call of a non-name".into()));
            };
            let name = name.clone();
            let vs: Vec<Value> = args.iter().map(val).collect();
            if let Some(fd) = s.delta.funs.get(&name).cloned() {
                if fd.args.len() != vs.len() {
                    return Err(Fault::NoRule(format!("`{name}` applied to {} arguments", vs.len())));
                }
                let mut fr = Frame::default();
                for ((x, t), v) in fd.args.iter().zip(vs.iter()) {
                    let b = s.alloc_var(t, None);
                    s.write(b, 0, t, v).map_err(Fault::mem)?;
                    fr.vars.push((x.clone(), b, t.clone()));
                }
                for (x, t) in &fd.vars {
                    let b = s.alloc_var(t, None);
                    fr.vars.push((x.clone(), b, t.clone()));
                }
                let id = s.fresh_frame(fr);
                let body = fd.body.clone();
                if body.is_value() {
                    replace(e, body);
                } else {
                    replace(e, Expr::at(ExprKind::Call { frame: id, body: Box::new(body) }, e.span));
                }
                return Ok(("APP3", true));
            }
            if s.delta.psi.contains_key(&name) {
                let v = call_external(s, w, &name, &vs)?;
                set_value(e, &v);
                return Ok(("EAPP", true));
            }
            Err(Fault::Unbound(name))
        }
        ExprKind::StructInit(id, fields) => {
            if let Some((_, f)) = fields.iter_mut().find(|(_, f)| !f.is_value()) {
                return inner(s, w, f, frame);
            }
            let ty = Ty::Struct(id.clone());
            let layout = s.layout(id);
            let b = s.alloc_ref(&ty);
            for ((fname, fe), l) in fields.iter().zip(layout.iter()) {
                debug_assert_eq!(fname, &l.name);
                s.write(b, l.offset, &l.ty, &val(fe)).map_err(Fault::mem)?;
            }
            set_value(e, &Value::Loc(b, 0));
            Ok(("STRUCTV", true))
        }
        ExprKind::Field(target, f) => {
            if !target.is_value() {
                return inner(s, w, target, frame);
            }
            let Value::Loc(b, o) = val(target) else {
                return Err(Fault::NullDeref(format!("field `{f}` of {}", val(target))));
            };
            let id = match s.sigma.get(&b) {
                Some(Ty::Struct(id)) => id.clone(),
                Some(Ty::Ref(t)) => match &**t {
                    Ty::Struct(id) => id.clone(),
                    _ => return Err(Fault::NoRule("field access on a non-struct location".into())),
                },
                _ => return Err(Fault::NoRule("field access on an untyped location".into())),
            };
            let l = s
                .layout(&id)
                .into_iter()
                .find(|l| l.name == *f)
                .ok_or_else(|| Fault::NoRule(format!("no field `{f}`")))?;
            let v = s.theta.load(b, o + l.offset).map_err(Fault::mem)?.clone();
            set_value(e, &v);
            Ok(("FACCESSV", true))
        }
        ExprKind::SomeLit(inner_e) => inner(s, w, inner_e, frame),
        ExprKind::NoneLit(None) => Err(Fault::NoRule("`none` without a type".into())),
        ExprKind::Match(scrut, arms) => {
            if !scrut.is_value() {
                return inner(s, w, scrut, frame);
            }
            let v = val(scrut);
            let arms = std::mem::take(arms);
            let (next, rule) = match_value(s, v, arms)?;
            replace(e, next);
            Ok((rule, true))
        }
        ExprKind::For(lo, hi, d, body) => {
            if !lo.is_value() {
                return inner(s, w, lo, frame);
            }
            if !hi.is_value() {
                return inner(s, w, hi, frame);
            }
            let n = range(&val(lo), &val(hi), *d);
            if n == 0 || body.is_value() {
                set_value(e, &Value::Unit);
            } else {
                let b = std::mem::replace(&mut **body, Expr::unit());
                let kind = ExprKind::Repeat { remaining: n - 1, current: Box::new(b.clone()), body: Box::new(b) };
                replace(e, Expr::at(kind, e.span));
            }
            Ok(("FORV", true))
        }
        ExprKind::Repeat { remaining, body, current } => {
            let rule = go(s, w, current, frame)?;
            if current.is_value() {
                if *remaining == 0 {
                    set_value(e, &Value::Unit);
                } else {
                    *remaining -= 1;
                    **current = (**body).clone();
                }
            }
            Ok((rule, false))
        }
        ExprKind::Call { frame: f, body } => {
            let f = *f;
            let rule = go(s, w, body, Some(f))?;
            if body.is_value() {
                let b = std::mem::replace(&mut **body, Expr::unit());
                replace(e, b);
            }
            Ok((rule, false))
        }
        _ => Err(Fault::NoRule("stuck expression".into())),
    }
}

fn read_var(s: &State, b: beepl_core::BlockId) -> Result<Value, Fault> {
    if let Some(Ty::Struct(_)) = s.sigma.get(&b) {
        return Ok(Value::Loc(b, 0));
    }
    s.theta.load(b, 0).cloned().map_err(Fault::mem)
}

fn prim(s: &mut State, op: PrimOp, vs: &[Value]) -> Result<(Value, &'static str), Fault> {
    match op {
        PrimOp::RefOp => {
            let ty = s.type_of(&vs[0]).ok_or_else(|| Fault::NoRule(format!("ref of `{}`", vs[0])))?;
            let b = s.alloc_ref(&ty);
            s.write(b, 0, &ty, &vs[0]).map_err(Fault::mem)?;
            Ok((Value::Loc(b, 0), "REFV"))
        }
        PrimOp::Deref => {
            let Value::Loc(b, o) = vs[0] else { return Err(Fault::NullDeref(vs[0].to_string())) };
            s.monitor.derefs += 1;
            let v = match s.sigma.get(&b) {
                Some(Ty::Ref(t)) if matches!(**t, Ty::Struct(_)) => {
                    let t = (**t).clone();
                    let copy = s.alloc_var(&t, None);
                    s.write(copy, 0, &t, &Value::Loc(b, o)).map_err(Fault::mem)?;
                    Value::Loc(copy, 0)
                }
                _ => s.theta.load(b, o).map_err(Fault::mem)?.clone(),
            };
            Ok((v, "DREFV"))
        }
        PrimOp::Assign => {
            let Value::Loc(b, o) = vs[0] else { return Err(Fault::NullDeref(vs[0].to_string())) };
            s.monitor.assigns += 1;
            let ty = match s.sigma.get(&b) {
                Some(Ty::Ref(t)) => (**t).clone(),
                _ => return Err(Fault::NoRule("assignment through an untyped location".into())),
            };
            s.write(b, o, &ty, &vs[1]).map_err(Fault::mem)?;
            Ok((Value::Unit, "MASSGNV"))
        }
        PrimOp::Uop(u) => {
            let v = uop_sem(u, &vs[0]);
            if v.is_undef() {
                return Err(Fault::Undef(format!("{u:?} {}", vs[0])));
            }
            Ok((v, "UOPV"))
        }
        PrimOp::Bop(b) => {
            let v = if s.config.guard_unsafe { bop_guarded(b, &vs[0], &vs[1]) } else { bop_sem(b, &vs[0], &vs[1]) };
            if v.is_undef() {
                return Err(Fault::Undef(format!("{} {} {}", vs[0], b.symbol(), vs[1])));
            }
            Ok((v, "BOPV"))
        }
    }
}

fn match_value(s: &mut State, v: Value, mut arms: Vec<(Pattern, Expr)>) -> Result<(Expr, &'static str), Fault> {
    let pick = |arms: &mut Vec<(Pattern, Expr)>, want: fn(&Pattern) -> bool| -> Option<(Pattern, Expr)> {
        let i = arms.iter().position(|(p, _)| want(p)).or_else(|| arms.iter().position(|(p, _)| *p == Pattern::Pwild))?;
        Some(arms.swap_remove(i))
    };
    match v {
        Value::None(_) => {
            let (_, body) = pick(&mut arms, |p| *p == Pattern::Pnone).ok_or_else(|| Fault::NoRule("no pnone arm".into()))?;
            Ok((body, "MNONE"))
        }
        Value::Some(inner) => {
            let (p, mut body) = pick(&mut arms, |p| matches!(p, Pattern::Psome(_)))
                .ok_or_else(|| Fault::NoRule("no psome arm".into()))?;
            if let Pattern::Psome(x) = p {
                subst_in_place(&mut body, &x, &Expr::from_value(&inner));
            }
            Ok((body, "MSOME"))
        }
        Value::Bytes(view) => {
            let mut it = arms.into_iter();
            let (Some((Pattern::Pbytes { x, target, fields }, mut body)), Some((_, fallback))) = (it.next(), it.next())
            else {
                return Err(Fault::NoRule("bytes match without a bytes arm and a fallback".into()));
            };
            match extract(s, &view, &target) {
                Ok(ex) => {
                    s.monitor.extract_ok += 1;
                    for (y, _) in &fields {
                        let fv = ex
                            .fields
                            .iter()
                            .find(|(f, _)| f == y)
                            .map(|(_, v)| v.clone())
                            .ok_or_else(|| Fault::NoRule(format!("no field `{y}`")))?;
                        subst_in_place(&mut body, y, &Expr::from_value(&fv));
                    }
                    subst_in_place(&mut body, &x, &Expr::from_value(&ex.value));
                    Ok((body, "MBYTES"))
                }
                Err(ExtractError::TooShort { .. }) => {
                    s.monitor.extract_short += 1;
                    Ok((fallback, "MBYTESF"))
                }
                Err(ExtractError::Memory(m)) => Err(Fault::Memory(m)),
                Err(e) => Err(Fault::NoRule(e.to_string())),
            }
        }
        v => Err(Fault::NoRule(format!("match on `{v}`"))),
    }
}
