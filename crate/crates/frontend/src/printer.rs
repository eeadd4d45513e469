use std::fmt::Write;

use beepl_core::{
    Decl, Effect, Expr, ExprKind, GlobInit, IntVal, Pattern, PrimOp, PrimTy, Program, Ty, Uop,
};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PrintError {
    UnprintableInternalNode(String),
    UnprintableType(String),
}

impl std::fmt::Display for PrintError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PrintError::UnprintableInternalNode(s) => write!(f, "internal node `{s}` has no surface syntax"),
            PrintError::UnprintableType(s) => write!(f, "type `{s}` has no surface syntax"),
        }
    }
}

impl std::error::Error for PrintError {}

type PResult = Result<(), PrintError>;

pub fn print_ty(t: &Ty) -> Result<String, PrintError> {
    Ok(match t {
        Ty::Prim(p) => p.name().to_string(),
        Ty::Ref(inner) => format!("{}*", print_ty(inner)?),
        Ty::Option(inner) => format!("option({})", print_ty(inner)?),
        Ty::Struct(s) => format!("struct {s}"),
        Ty::Bytes => "bytes".into(),
        Ty::Unit => "unit".into(),
        Ty::Array(..) | Ty::Fun(..) | Ty::FunPtr(..) => return Err(PrintError::UnprintableType(t.to_string())),
    })
}

fn suffix(v: &IntVal) -> &'static str {
    match v.ty() {
        PrimTy::I8 => "i8",
        PrimTy::U8 => "u8",
        PrimTy::I16 => "i16",
        PrimTy::U16 => "u16",
        PrimTy::UINT => "u",
        PrimTy::LONG => "L",
        PrimTy::ULONG => "ul",
        _ => "",
    }
}

fn is_compound(e: &Expr) -> bool {
    matches!(
        e.kind,
        ExprKind::Let(..) | ExprKind::Cond(..) | ExprKind::Match(..) | ExprKind::For(..) | ExprKind::Prim(PrimOp::Assign, _)
    )
}

fn is_unary(e: &Expr) -> bool {
    match &e.kind {
        ExprKind::Prim(PrimOp::Deref | PrimOp::Uop(_), _) => true,
        ExprKind::ConstInt(v) => *v < 0,
        ExprKind::ConstLong(v) => *v < 0,
        ExprKind::ConstNum(v) => v.value() < 0,
        _ => false,
    }
}

struct Printer {
    out: String,
}

impl Printer {
    /// Any position: compound forms are parenthesized.
    fn child(&mut self, e: &Expr) -> PResult {
        if is_compound(e) {
            self.out.push('(');
            self.tail(e)?;
            self.out.push(')');
            Ok(())
        } else {
            self.tail(e)
        }
    }

    /// Operand of a prefix operator or field access.
    fn operand(&mut self, e: &Expr, postfix: bool) -> PResult {
        if is_compound(e) || (postfix && is_unary(e)) {
            self.out.push('(');
            self.tail(e)?;
            self.out.push(')');
            Ok(())
        } else {
            self.tail(e)
        }
    }

    fn literal_operand(&mut self, e: &Expr) -> PResult {
        if matches!(e.kind, ExprKind::ConstInt(_) | ExprKind::ConstLong(_) | ExprKind::ConstNum(_)) {
            self.out.push('(');
            self.tail(e)?;
            self.out.push(')');
            Ok(())
        } else {
            self.operand(e, false)
        }
    }

    fn tail(&mut self, e: &Expr) -> PResult {
        match &e.kind {
            ExprKind::Var(x) => self.out.push_str(x),
            ExprKind::ConstInt(v) => write!(self.out, "{v}").unwrap(),
            ExprKind::ConstLong(v) => write!(self.out, "{v}L").unwrap(),
            ExprKind::ConstNum(v) => write!(self.out, "{}{}", v.value(), suffix(v)).unwrap(),
            ExprKind::ConstBool(b) => write!(self.out, "{b}").unwrap(),
            ExprKind::UnitLit => self.out.push_str("()"),
            ExprKind::App(f, args) => {
                self.child(f)?;
                self.out.push('(');
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        self.out.push_str(", ");
                    }
                    self.child(a)?;
                }
                self.out.push(')');
            }
            ExprKind::Prim(op, args) => match (op, args.as_slice()) {
                (PrimOp::Deref, [a]) => {
                    self.out.push('!');
                    self.operand(a, false)?;
                }
                (PrimOp::RefOp, [a]) => {
                    self.out.push_str("ref(");
                    self.tail(a)?;
                    self.out.push(')');
                }
                (PrimOp::Assign, [a, b]) => {
                    self.child(a)?;
                    self.out.push_str(" := ");
                    self.tail(b)?;
                }
                (PrimOp::Uop(u), [a]) => {
                    match u {
                        Uop::Neg => {
                            self.out.push('-');
                            self.literal_operand(a)?;
                            return Ok(());
                        }
                        Uop::BitNot => self.out.push('~'),
                        Uop::LogNot => self.out.push_str("not "),
                        Uop::Cast(p) => write!(self.out, "({})", p.name()).unwrap(),
                    }
                    self.operand(a, false)?;
                }
                (PrimOp::Bop(b), [l, r]) => {
                    self.out.push('(');
                    self.child(l)?;
                    write!(self.out, " {} ", b.symbol()).unwrap();
                    self.child(r)?;
                    self.out.push(')');
                }
                _ => return Err(PrintError::UnprintableInternalNode(format!("{op:?} with {} operands", args.len()))),
            },
            ExprKind::Let(x, ty, a, b) => {
                write!(self.out, "let {x}").unwrap();
                if let Some(t) = ty {
                    write!(self.out, " : {}", print_ty(t)?).unwrap();
                }
                self.out.push_str(" = ");
                self.child(a)?;
                self.out.push_str(" in ");
                self.tail(b)?;
            }
            ExprKind::Cond(g, t, f) => {
                self.out.push_str("if ");
                self.child(g)?;
                self.out.push_str(" then ");
                self.child(t)?;
                self.out.push_str(" else ");
                self.child(f)?;
            }
            ExprKind::StructInit(s, fields) => {
                write!(self.out, "{s} {{ ").unwrap();
                for (i, (f, v)) in fields.iter().enumerate() {
                    if i > 0 {
                        self.out.push_str(", ");
                    }
                    write!(self.out, "{f} = ").unwrap();
                    self.child(v)?;
                }
                self.out.push_str(" }");
            }
            ExprKind::Field(t, f) => {
                self.operand(t, true)?;
                write!(self.out, ".{f}").unwrap();
            }
            ExprKind::NoneLit(None) => self.out.push_str("none"),
            ExprKind::NoneLit(Some(Ty::Option(inner))) => write!(self.out, "none({})", print_ty(inner)?).unwrap(),
            ExprKind::NoneLit(Some(t)) => return Err(PrintError::UnprintableType(t.to_string())),
            ExprKind::SomeLit(a) => {
                self.out.push_str("some(");
                self.tail(a)?;
                self.out.push(')');
            }
            ExprKind::Match(s, arms) => {
                self.out.push_str("match ");
                self.child(s)?;
                self.out.push_str(" with");
                for (p, body) in arms {
                    self.out.push_str(" | ");
                    self.pattern(p)?;
                    self.out.push_str(" => ");
                    self.child(body)?;
                }
            }
            ExprKind::For(lo, hi, d, body) => {
                self.out.push_str("for (");
                self.child(lo)?;
                self.out.push_str(" ... ");
                self.child(hi)?;
                write!(self.out, ", {d}) {{ ").unwrap();
                self.tail(body)?;
                self.out.push_str(" }");
            }
            ExprKind::Loc(..) | ExprKind::Bytes(_) | ExprKind::Undef | ExprKind::Repeat { .. } | ExprKind::Call { .. } => {
                return Err(PrintError::UnprintableInternalNode(format!("{:?}", e.kind)))
            }
        }
        Ok(())
    }

    fn pattern(&mut self, p: &Pattern) -> PResult {
        match p {
            Pattern::Pnone => self.out.push_str("pnone"),
            Pattern::Psome(x) => write!(self.out, "psome {x}").unwrap(),
            Pattern::Pwild => self.out.push('_'),
            Pattern::Pbytes { x, target, fields } => {
                write!(self.out, "{x}, {}", print_ty(target)?).unwrap();
                for (i, (y, t)) in fields.iter().enumerate() {
                    self.out.push_str(if i == 0 { ": " } else { ", " });
                    write!(self.out, "({y}, {})", print_ty(t)?).unwrap();
                }
            }
        }
        Ok(())
    }
}

pub fn print_expr(e: &Expr) -> Result<String, PrintError> {
    let mut p = Printer { out: String::new() };
    p.tail(e)?;
    Ok(p.out)
}

fn print_effect(e: &Effect) -> String {
    e.to_string()
}

fn quote(s: &str) -> String {
    let mut out = String::from("\"");
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            '\0' => out.push_str("\\0"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

pub fn print_program(p: &Program) -> Result<String, PrintError> {
    let mut out = String::new();
    for c in &p.composites {
        writeln!(out, "struct {} {{", c.name).unwrap();
        for (f, t) in &c.fields {
            match t {
                Ty::Array(e, n) => writeln!(out, "    {} {f}[{n}];", e.name()).unwrap(),
                t => writeln!(out, "    {} {f};", print_ty(t)?).unwrap(),
            }
        }
        out.push_str("}\n\n");
    }
    for d in &p.decls {
        match d {
            Decl::Ext(e) => {
                let args: Result<Vec<_>, _> = e.args.iter().map(print_ty).collect();
                write!(out, "extern fun {}({}) : {}", e.name, args?.join(", "), print_ty(&e.ret)?).unwrap();
                if !e.ef.is_empty() {
                    write!(out, ", {}", print_effect(&e.ef)).unwrap();
                }
                out.push_str(";\n\n");
            }
            Decl::Glob(g) => {
                let sec = g.sec.as_ref().map(|s| format!(" #section {}", quote(s))).unwrap_or_default();
                match (&g.init, &g.ty) {
                    (GlobInit::Map, _) => writeln!(out, "struct {{ ... }} {}{sec};", g.name).unwrap(),
                    (GlobInit::Str(s), Ty::Array(e, n)) => {
                        writeln!(out, "{} {}[{n}]{sec} = {};", e.name(), g.name, quote(s)).unwrap()
                    }
                    (GlobInit::Const(v), t) => {
                        writeln!(out, "{} {}{sec} = {};", print_ty(t)?, g.name, print_expr(v)?).unwrap()
                    }
                    (GlobInit::Str(_), t) => return Err(PrintError::UnprintableType(t.to_string())),
                }
                out.push('\n');
            }
            Decl::Fun(f) => {
                if let Some(s) = &f.sec {
                    writeln!(out, "#section {}", quote(s)).unwrap();
                }
                let mut args = Vec::new();
                for (x, t) in &f.args {
                    args.push(format!("{} {x}", print_ty(t)?));
                }
                write!(out, "fun {}({}) : {}", f.name, args.join(", "), print_ty(&f.rt)?).unwrap();
                if let Some(e) = &f.ef {
                    write!(out, ", {}", print_effect(e)).unwrap();
                }
                writeln!(out, " {{\n    {}\n}}\n", print_expr(&f.body)?).unwrap();
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::{parse_expr, parse_program};
    use beepl_core::{Bop, Dir, PrimTy};
    use proptest::prelude::*;

    #[test]
    fn examples() {
        assert_eq!(print_expr(&Expr::int(5)).unwrap(), "5");
        assert_eq!(print_expr(&Expr::let_("x", Some(Ty::INT), Expr::int(2), Expr::var("x"))).unwrap(), "let x : int = 2 in x");
        assert_eq!(print_expr(&Expr::reference(Expr::int(2))).unwrap(), "ref(2)");
        assert!(matches!(
            print_expr(&Expr::loc(beepl_core::BlockId(1), 0)),
            Err(PrintError::UnprintableInternalNode(_))
        ));
    }

    #[test]
    fn program_roundtrip() {
        let src = r#"
            struct pair { int a; uint8 tag[4]; }
            extern fun probe(long, int) : long, <io>;
            long G = 7;
            #section "xdp"
            struct { ... } tbl #section ".maps"
            fun main(option(struct xdp_md*) ctx) : int, <alloc,read> { match ctx with | pnone => 1 | psome c => 2 }
            char LICENSE[] #section "license" = "GPL";
        "#;
        let p = parse_program(src).unwrap();
        let text = print_program(&p).unwrap();
        let q = parse_program(&text).unwrap();
        let strip = |p: &Program| -> Vec<Decl> {
            p.decls
                .iter()
                .cloned()
                .map(|mut d| {
                    match &mut d {
                        Decl::Fun(f) => f.span = Default::default(),
                        Decl::Ext(e) => e.span = Default::default(),
                        Decl::Glob(g) => g.span = Default::default(),
                    }
                    d
                })
                .collect()
        };
        assert_eq!(strip(&p), strip(&q));
        assert_eq!(p.composites, q.composites);
    }

    const NAMES: &[&str] = &["x", "y", "p'", "_", "acc", "ctx"];

    fn name() -> impl Strategy<Value = String> {
        prop::sample::select(NAMES.to_vec()).prop_map(str::to_string)
    }

    fn prim() -> impl Strategy<Value = PrimTy> {
        prop::sample::select(PrimTy::INTEGERS.to_vec())
    }

    fn ty() -> impl Strategy<Value = Ty> {
        let base = prop_oneof![
            prim().prop_map(Ty::Prim),
            Just(Ty::BOOL),
            Just(Ty::Bytes),
            Just(Ty::Unit),
            Just(Ty::strukt("s")),
        ];
        base.prop_flat_map(|b| {
            if b.is_basic() {
                prop_oneof![
                    Just(b.clone()),
                    Just(Ty::ptr(b.clone())),
                    Just(Ty::Option(Box::new(Ty::ptr(b)))),
                ]
                .boxed()
            } else {
                Just(b).boxed()
            }
        })
    }

    /// The parser rejects a literal bound at a declared type it does not fit.
    fn let_ok(t: &Option<Ty>, a: &Expr) -> bool {
        let v = match &a.kind {
            ExprKind::ConstInt(v) => *v as i128,
            ExprKind::ConstLong(v) => *v as i128,
            ExprKind::ConstNum(v) => v.value(),
            _ => return true,
        };
        match t {
            Some(Ty::Prim(p)) if p.is_integer() => p.fits(v),
            _ => true,
        }
    }

    fn literal() -> impl Strategy<Value = Expr> {
        prop_oneof![
            any::<i32>().prop_map(Expr::int),
            any::<i64>().prop_map(Expr::long),
            (prim(), any::<i64>()).prop_map(|(p, v)| Expr::num(IntVal::wrap(p, v as i128))),
            any::<bool>().prop_map(Expr::boolean),
            Just(Expr::unit()),
        ]
    }

    fn pattern() -> impl Strategy<Value = Pattern> {
        prop_oneof![
            Just(Pattern::Pnone),
            Just(Pattern::Pwild),
            name().prop_map(Pattern::Psome),
            (name(), prop::collection::vec((name(), prim()), 0..3)).prop_map(|(x, fs)| Pattern::Pbytes {
                x,
                target: Ty::strukt("hdr"),
                fields: fs.into_iter().map(|(y, p)| (y, Ty::Prim(p))).collect()
            }),
        ]
    }

    fn surface_expr() -> impl Strategy<Value = Expr> {
        let leaf = prop_oneof![literal(), name().prop_map(|n| Expr::var(&n)), Just(Expr::none(None)), ty().prop_filter_map("ptr", |t| match t {
            Ty::Option(_) => Some(Expr::none(Some(t))),
            _ => None,
        })];
        leaf.prop_recursive(5, 64, 4, |inner| {
            prop_oneof![
                (prop::sample::select(Bop::ALL.to_vec()), inner.clone(), inner.clone()).prop_map(|(b, l, r)| Expr::bop(b, l, r)),
                (prop_oneof![Just(Uop::Neg), Just(Uop::BitNot), Just(Uop::LogNot), prim().prop_map(Uop::Cast)], inner.clone())
                    .prop_map(|(u, a)| Expr::uop(u, a)),
                inner.clone().prop_map(Expr::deref),
                inner.clone().prop_map(Expr::reference),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::assign(a, b)),
                (name(), prop::option::of(ty()), inner.clone(), inner.clone())
                    .prop_filter("literal fits", |(_, t, a, _)| let_ok(t, a))
                    .prop_map(|(x, t, a, b)| Expr::let_(&x, t, a, b)),
                (inner.clone(), inner.clone(), inner.clone()).prop_map(|(g, t, e)| Expr::cond(g, t, e)),
                (name(), prop::collection::vec(inner.clone(), 0..3)).prop_map(|(f, a)| Expr::app(&f, a)),
                prop::collection::vec((name(), inner.clone()), 0..3)
                    .prop_map(|fs| Expr::new(ExprKind::StructInit("s".into(), fs))),
                (inner.clone(), name()).prop_map(|(e, f)| Expr::field(e, &f)),
                inner.clone().prop_map(Expr::some),
                (inner.clone(), prop::collection::vec((pattern(), inner.clone()), 1..3)).prop_map(|(s, a)| Expr::matches(s, a)),
                (inner.clone(), inner.clone(), prop_oneof![Just(Dir::Up), Just(Dir::Down)], inner)
                    .prop_map(|(l, h, d, b)| Expr::for_(l, h, d, b)),
            ]
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(512))]

        #[test]
        fn parse_print_roundtrip(e in surface_expr()) {
            let text = print_expr(&e).unwrap();
            let back = parse_expr(&text);
            prop_assert!(back.is_ok(), "{} => {:?}", text, back);
            prop_assert_eq!(back.unwrap(), e, "{}", text);
        }

        #[test]
        fn parsing_is_deterministic(e in surface_expr()) {
            let text = print_expr(&e).unwrap();
            prop_assert_eq!(parse_expr(&text), parse_expr(&text));
        }

        #[test]
        fn parser_never_panics(s in "[a-z0-9 ()|=>:*!+\\-{}.,;<]{0,40}") {
            let _ = parse_expr(&s);
            let _ = parse_program(&s);
        }
    }
}
