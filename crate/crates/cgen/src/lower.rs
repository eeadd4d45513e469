//! Expression lowering. Every subexpression becomes a list of statements
//! plus a side-effect-free C expression; calls and allocations land in
//! fresh temporaries so C evaluation order never matters.

use std::collections::{BTreeMap, BTreeSet};

use beepl_core::{Bop, Dir, Expr, ExprKind, IntVal, Pattern, PrimOp, PrimTy, Ty, Uop};
use beepl_typecheck::TypedProgram;

use crate::cir::{CExpr, CStmt, CType};
use crate::names::{member, NameSupply};
use crate::{CgenError, Mode};

type R<T> = Result<T, CgenError>;
type Frag = (Vec<CStmt>, CExpr);

fn internal(msg: impl Into<String>) -> CgenError {
    CgenError::Internal(msg.into())
}

pub fn prim_c(p: PrimTy) -> &'static str {
    match p {
        PrimTy::Bool => "_Bool",
        PrimTy::I8 => "signed char",
        PrimTy::U8 => "unsigned char",
        PrimTy::I16 => "short",
        PrimTy::U16 => "unsigned short",
        PrimTy::INT => "int",
        PrimTy::UINT => "unsigned int",
        PrimTy::LONG => "long",
        PrimTy::ULONG => "unsigned long",
    }
}

pub fn ctype(t: &Ty) -> R<CType> {
    Ok(match t {
        Ty::Prim(p) => CType::base(prim_c(*p)),
        Ty::Ref(inner) => ctype(inner)?.ptr_to(),
        Ty::Option(inner) => match &**inner {
            Ty::Ref(target) => ctype(target)?.ptr_to(),
            other => return Err(internal(format!("option over `{other}`"))),
        },
        Ty::Struct(s) => CType::base(&format!("struct {s}")),
        Ty::Bytes => CType::base("bytes_t"),
        Ty::Unit => CType::base("int"),
        Ty::Array(p, n) => CType { array: Some(*n), ..CType::base(prim_c(*p)) },
        Ty::Fun(..) | Ty::FunPtr(..) => return Err(internal(format!("no C type for `{t}`"))),
    })
}

/// A literal of the exact C type of `v`.
pub fn lit(v: IntVal) -> CExpr {
    let x = v.value();
    let p = v.ty();
    CExpr::Lit(match p {
        PrimTy::Bool => (if x != 0 { "1" } else { "0" }).to_string(),
        PrimTy::INT if x == i32::MIN as i128 => "INT_MIN".to_string(),
        PrimTy::INT => x.to_string(),
        PrimTy::UINT => format!("{x}U"),
        PrimTy::LONG if x == i64::MIN as i128 => "LONG_MIN".to_string(),
        PrimTy::LONG => format!("{x}L"),
        PrimTy::ULONG => format!("{x}UL"),
        small => format!("(({}){x})", prim_c(small)),
    })
}

fn min_of(p: PrimTy) -> CExpr {
    CExpr::lit(match p {
        PrimTy::INT => "INT_MIN".to_string(),
        PrimTy::LONG => "LONG_MIN".to_string(),
        small => format!("({})", small.min_value()),
    })
}

/// The unsigned type arithmetic on `p` is carried out in.
fn wide_unsigned(p: PrimTy) -> &'static str {
    if p.bits() == 64 {
        "unsigned long"
    } else {
        "unsigned int"
    }
}

fn narrow(p: PrimTy, e: CExpr) -> CExpr {
    if p.bits() < 32 {
        CExpr::cast(prim_c(p), e)
    } else {
        e
    }
}

fn wrapping(p: PrimTy, op: &'static str, a: CExpr, b: CExpr) -> CExpr {
    if !p.is_signed() && p.bits() >= 32 {
        CExpr::bin(op, a, b)
    } else {
        let u = wide_unsigned(p);
        CExpr::cast(prim_c(p), CExpr::bin(op, CExpr::cast(u, a), CExpr::cast(u, b)))
    }
}

/// Binary operators. Division and shifts carry the guard that makes the
/// unsafe operand classes yield zero; their operands must be atoms.
pub fn lower_bop(op: Bop, t: &Ty, a: CExpr, b: CExpr) -> CExpr {
    let p = t.as_prim().unwrap_or(PrimTy::Bool);
    let zero = || CExpr::lit("0");
    match op {
        Bop::Add => wrapping(p, "+", a, b),
        Bop::Sub => wrapping(p, "-", a, b),
        Bop::Mul => wrapping(p, "*", a, b),
        Bop::And | Bop::Or | Bop::Xor => narrow(p, CExpr::bin(op.symbol(), a, b)),
        Bop::Div | Bop::Mod => {
            let core = narrow(p, CExpr::bin(op.symbol(), a.clone(), b.clone()));
            let inner = if p.is_signed() {
                let overflow = CExpr::bin("&&", CExpr::bin("==", a, min_of(p)), CExpr::bin("==", b.clone(), CExpr::lit("-1")));
                CExpr::cond(overflow, zero(), core)
            } else {
                core
            };
            CExpr::cond(CExpr::bin("==", b, zero()), zero(), inner)
        }
        Bop::Shl | Bop::Shr => {
            let guard = CExpr::bin(">=", CExpr::cast("unsigned long", b.clone()), CExpr::lit(p.bits().to_string()));
            let shifted = if op == Bop::Shl {
                if !p.is_signed() && p.bits() >= 32 {
                    CExpr::bin("<<", a, b)
                } else {
                    CExpr::cast(prim_c(p), CExpr::bin("<<", CExpr::cast(wide_unsigned(p), a), b))
                }
            } else {
                narrow(p, CExpr::bin(">>", a, b))
            };
            CExpr::cond(guard, zero(), shifted)
        }
        Bop::Eq | Bop::Ne | Bop::Lt | Bop::Le | Bop::Gt | Bop::Ge | Bop::Land | Bop::Lor => CExpr::bin(op.symbol(), a, b),
    }
}

pub fn lower_uop(op: Uop, t: &Ty, a: CExpr) -> CExpr {
    let p = t.as_prim().unwrap_or(PrimTy::Bool);
    match op {
        Uop::LogNot => CExpr::Unary("!", Box::new(a)),
        Uop::BitNot => narrow(p, CExpr::Unary("~", Box::new(a))),
        Uop::Neg if !p.is_signed() && p.bits() >= 32 => CExpr::Unary("-", Box::new(a)),
        Uop::Neg => {
            let u = wide_unsigned(p);
            let z = if p.bits() == 64 { "0UL" } else { "0U" };
            CExpr::cast(prim_c(p), CExpr::bin("-", CExpr::lit(z), CExpr::cast(u, a)))
        }
        Uop::Cast(to) => CExpr::cast(prim_c(to), a),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum Global {
    Value(String),
    /// A map handle; the source name denotes its address.
    Map(String),
}

/// Program-wide facts shared by every function.
pub(crate) struct Env<'a> {
    pub tp: &'a TypedProgram,
    pub mode: Mode,
    pub funs: BTreeMap<String, String>,
    pub globals: BTreeMap<String, Global>,
    /// Every file-scope C name.
    pub reserved: BTreeSet<String>,
}

/// Where a branch leaves its value.
#[derive(Debug, Clone)]
enum Cont {
    Return,
    Into(Option<String>),
}

pub(crate) struct FnLower<'a> {
    env: &'a Env<'a>,
    ns: NameSupply,
    scope: Vec<(String, String, Ty)>,
    pub locals: Vec<(CType, String)>,
    /// Locals whose address is taken; reading them is not stable.
    cells: BTreeSet<String>,
    pub nullable: Vec<String>,
    ret: Ty,
}

impl<'a> FnLower<'a> {
    pub fn new(env: &'a Env<'a>, ret: Ty) -> FnLower<'a> {
        FnLower {
            env,
            ns: NameSupply::new(env.reserved.iter().cloned()),
            scope: Vec::new(),
            locals: Vec::new(),
            cells: BTreeSet::new(),
            nullable: Vec::new(),
            ret,
        }
    }

    /// Binds a parameter (or declared variable) and returns its C name.
    pub fn param(&mut self, x: &str, t: &Ty) -> String {
        let c = self.ns.binder(x);
        self.note(&c, t);
        self.scope.push((x.to_string(), c.clone(), t.clone()));
        c
    }

    fn note(&mut self, c: &str, t: &Ty) {
        if matches!(t, Ty::Option(_)) {
            self.nullable.push(c.to_string());
        }
    }

    pub fn declare_var(&mut self, x: &str, t: &Ty) -> R<()> {
        let c = self.param(x, t);
        self.locals.push((ctype(t)?, c));
        Ok(())
    }

    fn temp(&mut self, prefix: &'static str, t: &Ty) -> R<String> {
        let n = self.ns.fresh(prefix);
        self.locals.push((ctype(t)?, n.clone()));
        self.note(&n, t);
        Ok(n)
    }

    fn temp_c(&mut self, prefix: &'static str, t: CType) -> String {
        let n = self.ns.fresh(prefix);
        self.locals.push((t, n.clone()));
        n
    }

    fn bind(&mut self, x: &str, t: &Ty) -> R<String> {
        let c = self.ns.binder(x);
        self.locals.push((ctype(t)?, c.clone()));
        self.note(&c, t);
        self.scope.push((x.to_string(), c.clone(), t.clone()));
        Ok(c)
    }

    fn lookup(&self, x: &str) -> Option<&(String, String, Ty)> {
        self.scope.iter().rev().find(|(y, _, _)| y == x)
    }

    // ---- types of elaborated subexpressions ----

    fn var_ty(&self, x: &str, extra: &[(String, Ty)]) -> R<Ty> {
        if let Some((_, t)) = extra.iter().rev().find(|(y, _)| y == x) {
            return Ok(t.clone());
        }
        if let Some((_, _, t)) = self.lookup(x) {
            return Ok(t.clone());
        }
        self.env.tp.globals.get(x).cloned().ok_or_else(|| internal(format!("unbound `{x}`")))
    }

    fn field_ty(&self, s: &str, f: &str) -> R<Ty> {
        let co = self.env.tp.pi.get(s).ok_or_else(|| internal(format!("unknown struct `{s}`")))?;
        co.fields.iter().find(|(g, _)| g == f).map(|(_, t)| t.clone()).ok_or_else(|| internal(format!("no field `{f}`")))
    }

    fn ret_ty(&self, f: &str) -> R<Ty> {
        if let Some(sig) = self.env.tp.funs.get(f) {
            return Ok(sig.ret.clone());
        }
        self.env.tp.psi.get(f).map(|h| h.ret.clone()).ok_or_else(|| internal(format!("unknown callee `{f}`")))
    }

    pub fn ty(&self, e: &Expr) -> R<Ty> {
        self.ty_in(e, &mut Vec::new())
    }

    fn ty_in(&self, e: &Expr, extra: &mut Vec<(String, Ty)>) -> R<Ty> {
        Ok(match &e.kind {
            ExprKind::Var(x) => self.var_ty(x, extra)?,
            ExprKind::ConstInt(_) => Ty::INT,
            ExprKind::ConstLong(_) => Ty::LONG,
            ExprKind::ConstNum(v) => Ty::Prim(v.ty()),
            ExprKind::ConstBool(_) => Ty::BOOL,
            ExprKind::UnitLit | ExprKind::For(..) => Ty::Unit,
            ExprKind::Prim(PrimOp::Assign, _) => Ty::Unit,
            ExprKind::Prim(PrimOp::RefOp, a) => Ty::ptr(self.ty_in(&a[0], extra)?),
            ExprKind::Prim(PrimOp::Deref, a) => match self.ty_in(&a[0], extra)? {
                Ty::Ref(t) => *t,
                t => return Err(internal(format!("dereference of `{t}`"))),
            },
            ExprKind::Prim(PrimOp::Uop(Uop::Cast(p)), _) => Ty::Prim(*p),
            ExprKind::Prim(PrimOp::Uop(Uop::LogNot), _) => Ty::BOOL,
            ExprKind::Prim(PrimOp::Uop(_), a) => self.ty_in(&a[0], extra)?,
            ExprKind::Prim(PrimOp::Bop(op), a) => {
                if op.is_comparison() || op.is_logical() {
                    Ty::BOOL
                } else {
                    self.ty_in(&a[0], extra)?
                }
            }
            ExprKind::Let(x, t, _, b) => {
                let t = t.clone().ok_or_else(|| internal("let without a type"))?;
                extra.push((x.clone(), t));
                let r = self.ty_in(b, extra);
                extra.pop();
                r?
            }
            ExprKind::Cond(_, t, _) => self.ty_in(t, extra)?,
            ExprKind::App(f, _) => match &f.kind {
                ExprKind::Var(name) => self.ret_ty(name)?,
                _ => return Err(internal("callee is not a name")),
            },
            ExprKind::StructInit(s, _) => Ty::ptr(Ty::strukt(s)),
            ExprKind::Field(a, f) => match self.ty_in(a, extra)? {
                Ty::Struct(s) => self.field_ty(&s, f)?,
                Ty::Ref(t) => match *t {
                    Ty::Struct(s) => self.field_ty(&s, f)?,
                    t => return Err(internal(format!("field of `{t}*`"))),
                },
                t => return Err(internal(format!("field of `{t}`"))),
            },
            ExprKind::NoneLit(t) => t.clone().ok_or_else(|| internal("untyped none"))?,
            ExprKind::SomeLit(a) => Ty::Option(Box::new(self.ty_in(a, extra)?)),
            ExprKind::Match(s, arms) => {
                let st = self.ty_in(s, extra)?;
                let (p, body) = arms.first().ok_or_else(|| internal("empty match"))?;
                let depth = extra.len();
                match (p, &st) {
                    (Pattern::Psome(x), Ty::Option(inner)) => extra.push((x.clone(), (**inner).clone())),
                    (Pattern::Pbytes { x, target, fields }, _) => {
                        extra.push((x.clone(), target.clone()));
                        extra.extend(fields.iter().cloned());
                    }
                    _ => {}
                }
                let r = self.ty_in(body, extra);
                extra.truncate(depth);
                r?
            }
            ExprKind::Loc(..) | ExprKind::Bytes(_) | ExprKind::Undef | ExprKind::Repeat { .. } | ExprKind::Call { .. } => {
                return Err(internal("runtime-only expression in a checked program"))
            }
        })
    }

    // ---- helpers ----

    fn stable(&self, c: &CExpr) -> bool {
        let mut ok = true;
        c.walk(&mut |n| match n {
            CExpr::Deref(_) | CExpr::Arrow(..) | CExpr::Call(..) => ok = false,
            CExpr::Name(x) if self.cells.contains(x) => ok = false,
            _ => {}
        });
        ok
    }

    fn spill(&mut self, s: &mut Vec<CStmt>, c: CExpr, t: &Ty) -> R<CExpr> {
        let n = self.temp("t", t)?;
        s.push(CStmt::Assign(CExpr::Name(n.clone()), c));
        Ok(CExpr::Name(n))
    }

    fn atom(&mut self, s: &mut Vec<CStmt>, c: CExpr, t: &Ty) -> R<CExpr> {
        if c.is_atom() && self.stable(&c) {
            Ok(c)
        } else {
            self.spill(s, c, t)
        }
    }

    /// Lowers operands left to right. An operand whose value could be
    /// changed by a later operand's statements is saved first.
    fn lower_seq(&mut self, es: &[&Expr]) -> R<(Vec<CStmt>, Vec<CExpr>)> {
        let mut stmts = Vec::new();
        let mut vals: Vec<(CExpr, Ty)> = Vec::new();
        for e in es {
            let t = self.ty(e)?;
            let (s, c) = self.lower(e)?;
            if !s.is_empty() {
                for (v, vt) in vals.iter_mut() {
                    if !self.stable(v) {
                        *v = self.spill(&mut stmts, v.clone(), vt)?;
                    }
                }
                stmts.extend(s);
            }
            vals.push((c, t));
        }
        Ok((stmts, vals.into_iter().map(|(c, _)| c).collect()))
    }

    fn pointer(&mut self, s: &mut Vec<CStmt>, c: CExpr, t: &Ty) -> R<CExpr> {
        match c {
            CExpr::AddrOf(_) => Ok(c),
            CExpr::Name(_) if self.stable(&c) => Ok(c),
            other => self.spill(s, other, t),
        }
    }

    fn deref(p: CExpr) -> CExpr {
        match p {
            CExpr::AddrOf(x) => CExpr::Name(x),
            p => CExpr::Deref(Box::new(p)),
        }
    }

    fn arrow(p: CExpr, f: &str) -> CExpr {
        match p {
            CExpr::AddrOf(x) => CExpr::Dot(Box::new(CExpr::Name(x)), member(f)),
            p => CExpr::Arrow(Box::new(p), member(f)),
        }
    }

    fn finish(&mut self, k: &Cont, (mut s, c): Frag) -> Vec<CStmt> {
        match k {
            Cont::Return => {
                let v = if self.ret == Ty::Unit { CExpr::lit("0") } else { c };
                s.push(CStmt::Return(v));
            }
            Cont::Into(Some(r)) => s.push(CStmt::Assign(CExpr::Name(r.clone()), c)),
            Cont::Into(None) => {}
        }
        s
    }

    fn result_slot(&mut self, t: &Ty) -> R<Option<String>> {
        if *t == Ty::Unit {
            Ok(None)
        } else {
            self.temp("t", t).map(Some)
        }
    }

    fn slot_value(r: Option<String>) -> CExpr {
        r.map(CExpr::Name).unwrap_or_else(|| CExpr::lit("0"))
    }

    // ---- expressions ----

    /// A function body: every path ends in `return`.
    pub fn lower_body(&mut self, e: &Expr) -> R<Vec<CStmt>> {
        self.branch(e, &Cont::Return)
    }

    fn branch(&mut self, e: &Expr, k: &Cont) -> R<Vec<CStmt>> {
        match &e.kind {
            ExprKind::Let(x, t, a, b) => {
                let mut s = self.bind_let(x, t.as_ref(), a)?;
                let rest = self.branch(b, k);
                if x != "_" {
                    self.scope.pop();
                }
                s.extend(rest?);
                Ok(s)
            }
            ExprKind::Cond(g, t, f) if matches!(k, Cont::Return) => {
                let (mut s, cg) = self.lower(g)?;
                let st = self.branch(t, k)?;
                let sf = self.branch(f, k)?;
                s.push(CStmt::If(cg, st, sf));
                Ok(s)
            }
            ExprKind::Match(scrut, arms) => self.lower_match(scrut, arms, k),
            _ => {
                let frag = self.lower(e)?;
                Ok(self.finish(k, frag))
            }
        }
    }

    fn bind_let(&mut self, x: &str, t: Option<&Ty>, a: &Expr) -> R<Vec<CStmt>> {
        let t = match t {
            Some(t) => t.clone(),
            None => self.ty(a)?,
        };
        let (mut s, c) = self.lower(a)?;
        if x == "_" {
            return Ok(s);
        }
        let xc = self.bind(x, &t)?;
        // Assign a call result straight to the binder.
        if let (Some(CStmt::Assign(CExpr::Name(tmp), _)), CExpr::Name(cn)) = (s.last(), &c) {
            if tmp == cn && tmp.starts_with("__bpl_t") && !self.cells.contains(tmp) {
                let tmp = tmp.clone();
                let Some(CStmt::Assign(_, rhs)) = s.pop() else { unreachable!() };
                self.locals.retain(|(_, n)| *n != tmp);
                s.push(CStmt::Assign(CExpr::Name(xc), rhs));
                return Ok(s);
            }
        }
        s.push(CStmt::Assign(CExpr::Name(xc), c));
        Ok(s)
    }

    pub fn lower(&mut self, e: &Expr) -> R<Frag> {
        match &e.kind {
            ExprKind::Var(x) => self.var(x).map(|c| (Vec::new(), c)),
            ExprKind::ConstInt(v) => Ok((Vec::new(), lit(IntVal::int(*v)))),
            ExprKind::ConstLong(v) => Ok((Vec::new(), lit(IntVal::long(*v)))),
            ExprKind::ConstNum(v) => Ok((Vec::new(), lit(*v))),
            ExprKind::ConstBool(b) => Ok((Vec::new(), CExpr::lit(if *b { "1" } else { "0" }))),
            ExprKind::UnitLit => Ok((Vec::new(), CExpr::lit("0"))),
            ExprKind::Prim(PrimOp::Deref, a) => {
                let t = self.ty(&a[0])?;
                let (mut s, c) = self.lower(&a[0])?;
                let p = self.pointer(&mut s, c, &t)?;
                Ok((s, Self::deref(p)))
            }
            ExprKind::Prim(PrimOp::RefOp, a) => {
                let t = self.ty(&a[0])?;
                let (mut s, c) = self.lower(&a[0])?;
                let cell = self.temp("t", &t)?;
                self.cells.insert(cell.clone());
                s.push(CStmt::Assign(CExpr::Name(cell.clone()), c));
                Ok((s, CExpr::AddrOf(cell)))
            }
            ExprKind::Prim(PrimOp::Assign, a) => {
                let t = self.ty(&a[0])?;
                let (mut s, mut cs) = self.lower_seq(&[&a[0], &a[1]])?;
                let v = cs.pop().expect("two operands");
                let p = cs.pop().expect("two operands");
                let p = self.pointer(&mut s, p, &t)?;
                s.push(CStmt::Assign(Self::deref(p), v));
                Ok((s, CExpr::lit("0")))
            }
            ExprKind::Prim(PrimOp::Uop(op), a) => {
                let t = self.ty(&a[0])?;
                let (s, c) = self.lower(&a[0])?;
                Ok((s, lower_uop(*op, &t, c)))
            }
            ExprKind::Prim(PrimOp::Bop(op), a) => {
                let t = self.ty(&a[0])?;
                let (mut s, mut cs) = self.lower_seq(&[&a[0], &a[1]])?;
                let mut b = cs.pop().expect("two operands");
                let mut x = cs.pop().expect("two operands");
                if op.is_division() || op.is_shift() {
                    x = self.atom(&mut s, x, &t)?;
                    b = self.atom(&mut s, b, &t)?;
                }
                Ok((s, lower_bop(*op, &t, x, b)))
            }
            ExprKind::Let(x, t, a, b) => {
                let mut s = self.bind_let(x, t.as_ref(), a)?;
                let rest = self.lower(b);
                if x != "_" {
                    self.scope.pop();
                }
                let (s2, c) = rest?;
                s.extend(s2);
                Ok((s, c))
            }
            ExprKind::Cond(g, t, f) => {
                let ty = self.ty(t)?;
                let (mut s, cg) = self.lower(g)?;
                let (st, ct) = self.lower(t)?;
                let (sf, cf) = self.lower(f)?;
                if st.is_empty() && sf.is_empty() && ty != Ty::Unit && !matches!(ty, Ty::Struct(_) | Ty::Bytes) {
                    return Ok((s, CExpr::cond(cg, ct, cf)));
                }
                let r = self.result_slot(&ty)?;
                let k = Cont::Into(r.clone());
                let st = self.finish(&k, (st, ct));
                let sf = self.finish(&k, (sf, cf));
                s.push(CStmt::If(cg, st, sf));
                Ok((s, Self::slot_value(r)))
            }
            ExprKind::App(f, args) => {
                let ExprKind::Var(name) = &f.kind else { return Err(internal("callee is not a name")) };
                let ret = self.ret_ty(name)?;
                let cname = self.env.funs.get(name).cloned().unwrap_or_else(|| name.clone());
                let refs: Vec<&Expr> = args.iter().collect();
                let (mut s, cs) = self.lower_seq(&refs)?;
                let call = CExpr::Call(cname, cs);
                if ret == Ty::Unit {
                    s.push(CStmt::Expr(call));
                    return Ok((s, CExpr::lit("0")));
                }
                let v = self.spill(&mut s, call, &ret)?;
                Ok((s, v))
            }
            ExprKind::StructInit(sn, fields) => {
                let refs: Vec<&Expr> = fields.iter().map(|(_, e)| e).collect();
                let (mut s, cs) = self.lower_seq(&refs)?;
                let tmp = self.temp("t", &Ty::strukt(sn))?;
                self.cells.insert(tmp.clone());
                s.push(CStmt::Assign(CExpr::name(&tmp), CExpr::lit(format!("(struct {sn}){{0}}"))));
                for ((f, _), c) in fields.iter().zip(cs) {
                    s.push(CStmt::Assign(CExpr::Dot(Box::new(CExpr::name(&tmp)), member(f)), c));
                }
                Ok((s, CExpr::AddrOf(tmp)))
            }
            ExprKind::Field(a, f) => {
                let t = self.ty(a)?;
                let (mut s, c) = self.lower(a)?;
                match &t {
                    Ty::Ref(inner) => {
                        let p = self.pointer(&mut s, c, &t)?;
                        if let (Mode::Ebpf, Ty::Struct(sn), "data") = (self.env.mode, &**inner, f.as_str()) {
                            if let Some(h) = crate::prelude::ctx_data_helper(sn) {
                                return Ok((s, CExpr::Call(h.to_string(), vec![p])));
                            }
                        }
                        Ok((s, Self::arrow(p, f)))
                    }
                    Ty::Struct(_) => {
                        let c = match c {
                            CExpr::Name(_) | CExpr::Deref(_) => c,
                            other => self.spill(&mut s, other, &t)?,
                        };
                        Ok((s, CExpr::Dot(Box::new(c), member(f))))
                    }
                    other => Err(internal(format!("field access on `{other}`"))),
                }
            }
            ExprKind::NoneLit(t) => {
                let t = t.as_ref().ok_or_else(|| internal("untyped none"))?;
                Ok((Vec::new(), CExpr::cast(ctype(t)?.abstract_name(), CExpr::lit("0"))))
            }
            ExprKind::SomeLit(a) => self.lower(a),
            ExprKind::Match(scrut, arms) => {
                let ty = self.ty(e)?;
                let r = self.result_slot(&ty)?;
                let s = self.lower_match(scrut, arms, &Cont::Into(r.clone()))?;
                Ok((s, Self::slot_value(r)))
            }
            ExprKind::For(lo, hi, d, body) => {
                let bt = self.ty(lo)?;
                let (mut s, mut cs) = self.lower_seq(&[lo, hi])?;
                let ch = cs.pop().expect("two bounds");
                let cl = cs.pop().expect("two bounds");
                let l = self.temp("l", &bt)?;
                let h = self.temp("h", &bt)?;
                let i = self.temp("i", &bt)?;
                s.push(CStmt::Assign(CExpr::name(&l), cl));
                s.push(CStmt::Assign(CExpr::name(&h), ch));
                let (sb, _) = self.lower(body)?;
                s.push(CStmt::For { index: i, lo: l, hi: h, up: *d == Dir::Up, body: sb });
                Ok((s, CExpr::lit("0")))
            }
            ExprKind::Loc(..) | ExprKind::Bytes(_) | ExprKind::Undef | ExprKind::Repeat { .. } | ExprKind::Call { .. } => {
                Err(internal("runtime-only expression in a checked program"))
            }
        }
    }

    fn var(&self, x: &str) -> R<CExpr> {
        if let Some((_, c, _)) = self.lookup(x) {
            return Ok(CExpr::name(c));
        }
        match self.env.globals.get(x) {
            Some(Global::Value(c)) => Ok(CExpr::name(c)),
            Some(Global::Map(c)) => Ok(CExpr::AddrOf(c.clone())),
            None => Err(internal(format!("unbound `{x}`"))),
        }
    }

    fn lower_match(&mut self, scrut: &Expr, arms: &[(Pattern, Expr)], k: &Cont) -> R<Vec<CStmt>> {
        let st = self.ty(scrut)?;
        match &st {
            Ty::Option(inner) => {
                let none_arm = arms.iter().find(|(p, _)| matches!(p, Pattern::Pnone | Pattern::Pwild));
                let some_arm = arms.iter().find(|(p, _)| matches!(p, Pattern::Psome(_) | Pattern::Pwild));
                let (Some((_, none_body)), Some((sp, some_body))) = (none_arm, some_arm) else {
                    return Err(internal("option match without both cases"));
                };
                let (mut s, c) = self.lower(scrut)?;
                let p = match c {
                    CExpr::Name(_) if self.stable(&c) => c,
                    other => self.spill(&mut s, other, &st)?,
                };
                let on_none = self.branch(none_body, k)?;
                let mut on_some = Vec::new();
                let bound = if let Pattern::Psome(x) = sp {
                    let xc = self.bind(x, inner)?;
                    on_some.push(CStmt::Assign(CExpr::Name(xc), p.clone()));
                    true
                } else {
                    false
                };
                let rest = self.branch(some_body, k);
                if bound {
                    self.scope.pop();
                }
                on_some.extend(rest?);
                let null = CExpr::cast(ctype(&st)?.abstract_name(), CExpr::lit("0"));
                s.push(CStmt::If(CExpr::bin("==", p, null), on_none, on_some));
                Ok(s)
            }
            Ty::Bytes => {
                let Some((Pattern::Pbytes { x, target, fields }, hit)) =
                    arms.iter().find(|(p, _)| matches!(p, Pattern::Pbytes { .. }))
                else {
                    return Err(internal("bytes match without a bytes pattern"));
                };
                let miss = arms.iter().find(|(p, _)| matches!(p, Pattern::Pwild)).map(|(_, b)| b);
                let (mut s, c) = self.lower(scrut)?;
                let b = self.temp("b", &Ty::Bytes)?;
                s.push(CStmt::Assign(CExpr::name(&b), c));
                let tc = ctype(target)?;
                let size = CExpr::Sizeof(tc.abstract_name());
                let start = CExpr::Dot(Box::new(CExpr::name(&b)), "start".into());
                let end = CExpr::Dot(Box::new(CExpr::name(&b)), "end".into());
                let short = CExpr::bin(">", CExpr::bin("+", start.clone(), size.clone()), end);
                let on_miss = match miss {
                    Some(body) => self.branch(body, k)?,
                    None => return Err(internal("bytes match without a fallback")),
                };
                let depth = self.scope.len();
                let mut on_hit = Vec::new();
                match target {
                    Ty::Struct(sn) => {
                        let p = self.temp_c("p", tc.clone().ptr_to());
                        on_hit.push(CStmt::Assign(CExpr::name(&p), CExpr::cast(format!("struct {sn} *"), start.clone())));
                        if x != "_" {
                            let xc = self.bind(x, target)?;
                            on_hit.push(CStmt::Assign(CExpr::Name(xc), CExpr::Deref(Box::new(CExpr::name(&p)))));
                        }
                        for (f, ft) in fields {
                            let fc = self.bind(f, ft)?;
                            let src = CExpr::Arrow(Box::new(CExpr::name(&p)), member(f));
                            if let Ty::Array(..) = ft {
                                let copy = CExpr::Call(
                                    "__builtin_memcpy".into(),
                                    vec![CExpr::Name(fc), src, CExpr::Sizeof(ctype(ft)?.abstract_name())],
                                );
                                on_hit.push(CStmt::Expr(copy));
                            } else {
                                on_hit.push(CStmt::Assign(CExpr::Name(fc), src));
                            }
                        }
                    }
                    _ => {
                        if x != "_" {
                            let xc = self.bind(x, target)?;
                            let copy = CExpr::Call("__builtin_memcpy".into(), vec![CExpr::AddrOf(xc), start.clone(), size.clone()]);
                            on_hit.push(CStmt::Expr(copy));
                        }
                    }
                }
                on_hit.push(CStmt::AddAssign(start, size));
                let rest = self.branch(hit, k);
                self.scope.truncate(depth);
                on_hit.extend(rest?);
                s.push(CStmt::If(short, on_miss, on_hit));
                Ok(s)
            }
            other => Err(internal(format!("match on `{other}`"))),
        }
    }
}
