use std::collections::BTreeSet;
use std::fmt;

use crate::effect::Effect;
use crate::types::{PrimTy, Ty};
use crate::value::{BytesView, IntVal, Value};

pub use crate::types::Composite;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BlockId(pub u64);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FrameId(pub u64);

/// Source region. `line`/`col` are 1-based and refer to `start`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct Span {
    pub start: usize,
    pub end: usize,
    pub line: u32,
    pub col: u32,
}

impl Span {
    pub fn to(self, other: Span) -> Span {
        Span { start: self.start, end: other.end.max(self.end), line: self.line, col: self.col }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Uop {
    Neg,
    LogNot,
    BitNot,
    Cast(PrimTy),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Bop {
    Add,
    Sub,
    Mul,
    Div,
    Mod,
    And,
    Or,
    Xor,
    Shl,
    Shr,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    Land,
    Lor,
}

impl Bop {
    pub const ALL: [Bop; 18] = [
        Bop::Add,
        Bop::Sub,
        Bop::Mul,
        Bop::Div,
        Bop::Mod,
        Bop::And,
        Bop::Or,
        Bop::Xor,
        Bop::Shl,
        Bop::Shr,
        Bop::Eq,
        Bop::Ne,
        Bop::Lt,
        Bop::Le,
        Bop::Gt,
        Bop::Ge,
        Bop::Land,
        Bop::Lor,
    ];

    pub fn symbol(self) -> &'static str {
        match self {
            Bop::Add => "+",
            Bop::Sub => "-",
            Bop::Mul => "*",
            Bop::Div => "/",
            Bop::Mod => "%",
            Bop::And => "&",
            Bop::Or => "|",
            Bop::Xor => "^",
            Bop::Shl => "<<",
            Bop::Shr => ">>",
            Bop::Eq => "==",
            Bop::Ne => "!=",
            Bop::Lt => "<",
            Bop::Le => "<=",
            Bop::Gt => ">",
            Bop::Ge => ">=",
            Bop::Land => "&&",
            Bop::Lor => "||",
        }
    }

    pub fn is_comparison(self) -> bool {
        matches!(self, Bop::Eq | Bop::Ne | Bop::Lt | Bop::Le | Bop::Gt | Bop::Ge)
    }

    pub fn is_logical(self) -> bool {
        matches!(self, Bop::Land | Bop::Lor)
    }

    pub fn is_shift(self) -> bool {
        matches!(self, Bop::Shl | Bop::Shr)
    }

    pub fn is_division(self) -> bool {
        matches!(self, Bop::Div | Bop::Mod)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PrimOp {
    Deref,
    Assign,
    RefOp,
    Uop(Uop),
    Bop(Bop),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Dir {
    Up,
    Down,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Pattern {
    Pnone,
    Psome(String),
    /// `x, τ: (y, τy), ...`; field binders are named after struct fields.
    Pbytes { x: String, target: Ty, fields: Vec<(String, Ty)> },
    Pwild,
}

impl Pattern {
    pub fn binders(&self) -> Vec<&str> {
        match self {
            Pattern::Psome(x) => vec![x.as_str()],
            Pattern::Pbytes { x, fields, .. } => {
                let mut v = vec![x.as_str()];
                v.extend(fields.iter().map(|(y, _)| y.as_str()));
                v
            }
            Pattern::Pnone | Pattern::Pwild => Vec::new(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Expr {
    pub kind: ExprKind,
    pub span: Span,
}

/// Spans are ignored by equality.
impl PartialEq for Expr {
    fn eq(&self, other: &Expr) -> bool {
        self.kind == other.kind
    }
}

impl Eq for Expr {}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ExprKind {
    Var(String),
    ConstInt(i32),
    ConstLong(i64),
    /// Integer literal of a type other than `int` or `long`.
    ConstNum(IntVal),
    ConstBool(bool),
    UnitLit,
    App(Box<Expr>, Vec<Expr>),
    Prim(PrimOp, Vec<Expr>),
    /// The declared type is `None` only before checking.
    Let(String, Option<Ty>, Box<Expr>, Box<Expr>),
    Cond(Box<Expr>, Box<Expr>, Box<Expr>),
    StructInit(String, Vec<(String, Expr)>),
    Field(Box<Expr>, String),
    /// Carries its option type once known.
    NoneLit(Option<Ty>),
    SomeLit(Box<Expr>),
    Match(Box<Expr>, Vec<(Pattern, Expr)>),
    For(Box<Expr>, Box<Expr>, Dir, Box<Expr>),
    // Runtime-only forms below; never produced by the parser.
    Loc(BlockId, u32),
    Bytes(BytesView),
    Undef,
    /// Loop unrolling in progress: `current` runs, then `remaining` more copies of `body`.
    Repeat { remaining: u128, body: Box<Expr>, current: Box<Expr> },
    /// Function body executing in an activation frame.
    Call { frame: FrameId, body: Box<Expr> },
}

impl Expr {
    pub fn new(kind: ExprKind) -> Expr {
        Expr { kind, span: Span::default() }
    }

    pub fn at(kind: ExprKind, span: Span) -> Expr {
        Expr { kind, span }
    }

    pub fn var(x: &str) -> Expr {
        Expr::new(ExprKind::Var(x.to_string()))
    }

    pub fn int(v: i32) -> Expr {
        Expr::new(ExprKind::ConstInt(v))
    }

    pub fn long(v: i64) -> Expr {
        Expr::new(ExprKind::ConstLong(v))
    }

    pub fn boolean(b: bool) -> Expr {
        Expr::new(ExprKind::ConstBool(b))
    }

    pub fn unit() -> Expr {
        Expr::new(ExprKind::UnitLit)
    }

    pub fn num(v: IntVal) -> Expr {
        Expr::new(int_kind(v))
    }

    pub fn prim(op: PrimOp, args: Vec<Expr>) -> Expr {
        Expr::new(ExprKind::Prim(op, args))
    }

    pub fn bop(op: Bop, a: Expr, b: Expr) -> Expr {
        Expr::prim(PrimOp::Bop(op), vec![a, b])
    }

    pub fn uop(op: Uop, a: Expr) -> Expr {
        Expr::prim(PrimOp::Uop(op), vec![a])
    }

    pub fn deref(a: Expr) -> Expr {
        Expr::prim(PrimOp::Deref, vec![a])
    }

    pub fn reference(a: Expr) -> Expr {
        Expr::prim(PrimOp::RefOp, vec![a])
    }

    pub fn assign(a: Expr, b: Expr) -> Expr {
        Expr::prim(PrimOp::Assign, vec![a, b])
    }

    pub fn let_(x: &str, ty: Option<Ty>, bound: Expr, body: Expr) -> Expr {
        Expr::new(ExprKind::Let(x.to_string(), ty, Box::new(bound), Box::new(body)))
    }

    pub fn cond(g: Expr, t: Expr, e: Expr) -> Expr {
        Expr::new(ExprKind::Cond(Box::new(g), Box::new(t), Box::new(e)))
    }

    pub fn app(f: &str, args: Vec<Expr>) -> Expr {
        Expr::new(ExprKind::App(Box::new(Expr::var(f)), args))
    }

    pub fn for_(lo: Expr, hi: Expr, d: Dir, body: Expr) -> Expr {
        Expr::new(ExprKind::For(Box::new(lo), Box::new(hi), d, Box::new(body)))
    }

    pub fn matches(scrut: Expr, arms: Vec<(Pattern, Expr)>) -> Expr {
        Expr::new(ExprKind::Match(Box::new(scrut), arms))
    }

    pub fn some(e: Expr) -> Expr {
        Expr::new(ExprKind::SomeLit(Box::new(e)))
    }

    pub fn none(ty: Option<Ty>) -> Expr {
        Expr::new(ExprKind::NoneLit(ty))
    }

    pub fn field(e: Expr, f: &str) -> Expr {
        Expr::new(ExprKind::Field(Box::new(e), f.to_string()))
    }

    pub fn loc(b: BlockId, off: u32) -> Expr {
        Expr::new(ExprKind::Loc(b, off))
    }

    pub fn is_value(&self) -> bool {
        match &self.kind {
            ExprKind::ConstInt(_)
            | ExprKind::ConstLong(_)
            | ExprKind::ConstNum(_)
            | ExprKind::ConstBool(_)
            | ExprKind::UnitLit
            | ExprKind::Loc(..)
            | ExprKind::Bytes(_)
            | ExprKind::Undef => true,
            ExprKind::NoneLit(t) => t.is_some(),
            ExprKind::SomeLit(e) => e.is_value(),
            _ => false,
        }
    }

    pub fn as_value(&self) -> Option<Value> {
        Some(match &self.kind {
            ExprKind::ConstInt(v) => Value::int(*v),
            ExprKind::ConstLong(v) => Value::long(*v),
            ExprKind::ConstNum(v) => Value::Int(*v),
            ExprKind::ConstBool(b) => Value::Bool(*b),
            ExprKind::UnitLit => Value::Unit,
            ExprKind::Loc(b, o) => Value::Loc(*b, *o),
            ExprKind::Bytes(v) => Value::Bytes(*v),
            ExprKind::Undef => Value::Undef,
            ExprKind::NoneLit(Some(t)) => Value::None(t.clone()),
            ExprKind::SomeLit(e) => Value::Some(Box::new(e.as_value()?)),
            _ => return None,
        })
    }

    pub fn from_value(v: &Value) -> Expr {
        Expr::new(match v {
            Value::Unit => ExprKind::UnitLit,
            Value::Bool(b) => ExprKind::ConstBool(*b),
            Value::Int(i) => int_kind(*i),
            Value::Loc(b, o) => ExprKind::Loc(*b, *o),
            Value::None(t) => ExprKind::NoneLit(Some(t.clone())),
            Value::Some(v) => ExprKind::SomeLit(Box::new(Expr::from_value(v))),
            Value::Bytes(b) => ExprKind::Bytes(*b),
            Value::Undef => ExprKind::Undef,
        })
    }

    /// True for nodes that only arise during evaluation.
    pub fn is_internal(&self) -> bool {
        matches!(
            self.kind,
            ExprKind::Loc(..)
                | ExprKind::Bytes(_)
                | ExprKind::Undef
                | ExprKind::Repeat { .. }
                | ExprKind::Call { .. }
        )
    }

    pub fn contains_internal(&self) -> bool {
        let mut found = false;
        self.walk(&mut |e| found |= e.is_internal());
        found
    }

    /// Pre-order traversal.
    pub fn walk(&self, f: &mut dyn FnMut(&Expr)) {
        f(self);
        for c in self.children() {
            c.walk(f);
        }
    }

    pub fn children(&self) -> Vec<&Expr> {
        match &self.kind {
            ExprKind::App(f, args) => std::iter::once(&**f).chain(args.iter()).collect(),
            ExprKind::Prim(_, args) => args.iter().collect(),
            ExprKind::Let(_, _, a, b) => vec![a, b],
            ExprKind::Cond(a, b, c) => vec![a, b, c],
            ExprKind::StructInit(_, fs) => fs.iter().map(|(_, e)| e).collect(),
            ExprKind::Field(e, _) | ExprKind::SomeLit(e) => vec![e],
            ExprKind::Match(s, arms) => std::iter::once(&**s).chain(arms.iter().map(|(_, e)| e)).collect(),
            ExprKind::For(a, b, _, c) => vec![a, b, c],
            ExprKind::Repeat { body, current, .. } => vec![current, body],
            ExprKind::Call { body, .. } => vec![body],
            _ => Vec::new(),
        }
    }

    pub fn size(&self) -> usize {
        let mut n = 0;
        self.walk(&mut |_| n += 1);
        n
    }
}

fn int_kind(v: IntVal) -> ExprKind {
    match v.ty() {
        PrimTy::INT => ExprKind::ConstInt(v.value() as i32),
        PrimTy::LONG => ExprKind::ConstLong(v.value() as i64),
        _ => ExprKind::ConstNum(v),
    }
}

/// Free variables. Let, `psome` and bytes-pattern binders scope over their bodies.
pub fn fvar(e: &Expr) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    collect_fvar(e, &mut Vec::new(), &mut out);
    out
}

fn collect_fvar(e: &Expr, bound: &mut Vec<String>, out: &mut BTreeSet<String>) {
    match &e.kind {
        ExprKind::Var(x) => {
            if !bound.iter().any(|b| b == x) {
                out.insert(x.clone());
            }
        }
        ExprKind::Let(x, _, a, b) => {
            collect_fvar(a, bound, out);
            bound.push(x.clone());
            collect_fvar(b, bound, out);
            bound.pop();
        }
        ExprKind::Match(s, arms) => {
            collect_fvar(s, bound, out);
            for (p, body) in arms {
                let names = p.binders();
                let n = names.len();
                bound.extend(names.into_iter().map(str::to_string));
                collect_fvar(body, bound, out);
                bound.truncate(bound.len() - n);
            }
        }
        _ => {
            for c in e.children() {
                collect_fvar(c, bound, out);
            }
        }
    }
}

/// Opaque calling-convention tag, carried but never interpreted.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CallConv(pub String);

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FunDecl {
    pub name: String,
    pub sec: Option<String>,
    pub rt: Ty,
    /// Declared effect annotation, if any.
    pub ef: Option<Effect>,
    pub cc: CallConv,
    pub args: Vec<(String, Ty)>,
    pub vars: Vec<(String, Ty)>,
    pub body: Expr,
    pub flag: bool,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExtDecl {
    pub name: String,
    pub args: Vec<Ty>,
    pub ret: Ty,
    pub ef: Effect,
    pub cc: CallConv,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GlobInit {
    Const(Expr),
    Str(String),
    /// A map handle declared as `struct { ... } name`.
    Map,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GlobDecl {
    pub name: String,
    pub ty: Ty,
    pub init: GlobInit,
    pub sec: Option<String>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Decl {
    Fun(FunDecl),
    Ext(ExtDecl),
    Glob(GlobDecl),
}

impl Decl {
    pub fn name(&self) -> &str {
        match self {
            Decl::Fun(f) => &f.name,
            Decl::Ext(e) => &e.name,
            Decl::Glob(g) => &g.name,
        }
    }

    pub fn span(&self) -> Span {
        match self {
            Decl::Fun(f) => f.span,
            Decl::Ext(e) => e.span,
            Decl::Glob(g) => g.span,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Program {
    pub decls: Vec<Decl>,
    pub composites: Vec<Composite>,
}

impl Program {
    pub fn functions(&self) -> impl Iterator<Item = &FunDecl> {
        self.decls.iter().filter_map(|d| match d {
            Decl::Fun(f) => Some(f),
            _ => None,
        })
    }

    pub fn function(&self, name: &str) -> Option<&FunDecl> {
        self.functions().find(|f| f.name == name)
    }

    pub fn globals(&self) -> impl Iterator<Item = &GlobDecl> {
        self.decls.iter().filter_map(|d| match d {
            Decl::Glob(g) => Some(g),
            _ => None,
        })
    }
}

impl fmt::Display for Dir {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Dir::Up => "Up",
            Dir::Down => "Down",
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn set(xs: &[&str]) -> BTreeSet<String> {
        xs.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn fvar_examples() {
        assert_eq!(fvar(&Expr::var("x")), set(&["x"]));
        let e = Expr::let_("x", Some(Ty::INT), Expr::int(1), Expr::bop(Bop::Add, Expr::var("x"), Expr::var("y")));
        assert_eq!(fvar(&e), set(&["y"]));
        let body = Expr::assign(Expr::var("x"), Expr::bop(Bop::Add, Expr::deref(Expr::var("x")), Expr::int(1)));
        let l = Expr::for_(Expr::int(1), Expr::int(5), Dir::Up, body);
        assert_eq!(fvar(&l), set(&["x"]));
    }

    #[test]
    fn fvar_patterns() {
        let m = Expr::matches(
            Expr::var("p"),
            vec![
                (Pattern::Pnone, Expr::var("a")),
                (Pattern::Psome("q".into()), Expr::deref(Expr::var("q"))),
            ],
        );
        assert_eq!(fvar(&m), set(&["a", "p"]));
        let b = Expr::matches(
            Expr::var("d"),
            vec![
                (
                    Pattern::Pbytes {
                        x: "eth".into(),
                        target: Ty::strukt("ethhdr"),
                        fields: vec![("h_proto".into(), Ty::Prim(PrimTy::U16))],
                    },
                    Expr::bop(Bop::Eq, Expr::var("h_proto"), Expr::var("k")),
                ),
                (Pattern::Pwild, Expr::var("eth")),
            ],
        );
        assert_eq!(fvar(&b), set(&["d", "eth", "k"]));
    }

    #[test]
    fn value_roundtrip() {
        let vals = [
            Value::int(-3),
            Value::long(1 << 40),
            Value::Int(IntVal::wrap(PrimTy::U16, 0x86DD)),
            Value::Bool(true),
            Value::Unit,
            Value::Some(Box::new(Value::Loc(BlockId(3), 0))),
            Value::None(Ty::option_ptr(Ty::LONG)),
        ];
        for v in vals {
            let e = Expr::from_value(&v);
            assert!(e.is_value());
            assert_eq!(e.as_value(), Some(v));
        }
        assert!(!Expr::none(None).is_value());
    }

    #[test]
    fn spans_ignored_by_eq() {
        let a = Expr::at(ExprKind::ConstInt(1), Span { start: 0, end: 1, line: 1, col: 1 });
        assert_eq!(a, Expr::int(1));
    }

    proptest! {
        #[test]
        fn let_binder_never_free(x in "[a-z]", y in "[a-z]") {
            let e = Expr::let_(&x, None, Expr::var(&y), Expr::bop(Bop::Add, Expr::var(&x), Expr::var(&y)));
            let fv = fvar(&e);
            prop_assert!(fv.contains(&y));
            prop_assert_eq!(fv.contains(&x), x == y);
        }
    }
}
