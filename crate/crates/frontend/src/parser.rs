use beepl_core::{
    Bop, CallConv, Composite, Decl, Dir, EffAtom, Effect, Expr, ExprKind, ExtDecl, FunDecl,
    GlobDecl, GlobInit, IntVal, Pattern, PrimTy, Program, Span, Ty, Uop,
};

use crate::diag::Diagnostic;
use crate::lexer::{tokenize, TokKind, Token};

const BINARY_LEVELS: &[&[(&str, Bop)]] = &[
    &[("||", Bop::Lor)],
    &[("&&", Bop::Land)],
    &[("|", Bop::Or)],
    &[("^", Bop::Xor)],
    &[("&", Bop::And)],
    &[("==", Bop::Eq), ("!=", Bop::Ne)],
    &[("<", Bop::Lt), ("<=", Bop::Le), (">", Bop::Gt), (">=", Bop::Ge)],
    &[("<<", Bop::Shl), (">>", Bop::Shr)],
    &[("+", Bop::Add), ("-", Bop::Sub)],
    &[("*", Bop::Mul), ("/", Bop::Div), ("%", Bop::Mod)],
];

const TYPE_KEYWORDS: &[&str] = &[
    "bool", "char", "int", "uint", "long", "ulong", "int8", "uint8", "int16", "uint16", "int32",
    "uint32", "int64", "uint64", "unit", "bytes", "struct", "option",
];

type PResult<T> = Result<T, Diagnostic>;

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    /// Inside a match arm body, `|` separates arms instead of meaning bitwise or.
    no_bar: bool,
    eof: Span,
}

fn perr(msg: impl Into<String>, span: Span) -> Diagnostic {
    Diagnostic::error("ParseError", msg, span)
}

impl Parser {
    fn new(src: &str) -> PResult<Parser> {
        let toks = tokenize(src)?;
        let lines = src.split('\n').count() as u32;
        let last_col = src.rsplit('\n').next().map_or(0, |l| l.chars().count()) as u32 + 1;
        let eof = Span { start: src.len(), end: src.len(), line: lines.max(1), col: last_col };
        Ok(Parser { toks, pos: 0, no_bar: false, eof })
    }

    fn peek(&self) -> Option<&Token> {
        self.toks.get(self.pos)
    }

    fn peek_n(&self, n: usize) -> Option<&Token> {
        self.toks.get(self.pos + n)
    }

    fn span(&self) -> Span {
        self.peek().map_or(self.eof, |t| t.span)
    }

    fn prev_span(&self) -> Span {
        if self.pos == 0 {
            self.eof
        } else {
            self.toks[self.pos - 1].span
        }
    }

    fn describe(&self) -> String {
        match self.peek() {
            Some(t) => format!("`{}`", t.lexeme),
            None => "end of input".to_string(),
        }
    }

    fn bump(&mut self) -> PResult<Token> {
        let t = self.peek().cloned().ok_or_else(|| perr("unexpected end of input", self.eof))?;
        self.pos += 1;
        Ok(t)
    }

    fn at_punct(&self, p: &str) -> bool {
        self.peek().is_some_and(|t| t.is_punct(p))
    }

    fn at_kw(&self, k: &str) -> bool {
        self.peek().is_some_and(|t| t.is_kw(k))
    }

    fn eat_punct(&mut self, p: &str) -> bool {
        if self.at_punct(p) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn eat_kw(&mut self, k: &str) -> bool {
        if self.at_kw(k) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect_punct(&mut self, p: &str) -> PResult<Span> {
        if self.at_punct(p) {
            Ok(self.bump()?.span)
        } else {
            Err(perr(format!("expected `{p}`, found {}", self.describe()), self.span()))
        }
    }

    fn expect_kw(&mut self, k: &str) -> PResult<Span> {
        if self.at_kw(k) {
            Ok(self.bump()?.span)
        } else {
            Err(perr(format!("expected `{k}`, found {}", self.describe()), self.span()))
        }
    }

    fn ident(&mut self) -> PResult<(String, Span)> {
        match self.peek() {
            Some(t) if t.kind == TokKind::Ident => {
                let t = self.bump()?;
                Ok((t.lexeme, t.span))
            }
            _ => Err(perr(format!("expected identifier, found {}", self.describe()), self.span())),
        }
    }

    fn string(&mut self) -> PResult<String> {
        match self.peek().map(|t| t.kind.clone()) {
            Some(TokKind::Str(s)) => {
                self.pos += 1;
                Ok(s)
            }
            _ => Err(perr(format!("expected string literal, found {}", self.describe()), self.span())),
        }
    }

    fn at_type_start(&self, n: usize) -> bool {
        self.peek_n(n).is_some_and(|t| t.kind == TokKind::Keyword && TYPE_KEYWORDS.contains(&t.lexeme.as_str()))
    }

    // ---- types and effects ----

    fn ty(&mut self) -> PResult<Ty> {
        let sp = self.span();
        let t = self.bump()?;
        let mut ty = if t.kind != TokKind::Keyword {
            return Err(perr(format!("expected type, found `{}`", t.lexeme), t.span));
        } else if let Some(p) = PrimTy::from_name(&t.lexeme) {
            Ty::Prim(p)
        } else {
            match t.lexeme.as_str() {
                "unit" => Ty::Unit,
                "bytes" => Ty::Bytes,
                "struct" => Ty::Struct(self.ident()?.0),
                "option" => {
                    self.expect_punct("(")?;
                    let inner = self.ty()?;
                    self.expect_punct(")")?;
                    if !matches!(inner, Ty::Ref(_) | Ty::FunPtr(..)) {
                        return Err(perr(format!("option requires a pointer type, found `{inner}`"), sp));
                    }
                    Ty::Option(Box::new(inner))
                }
                _ => return Err(perr(format!("expected type, found `{}`", t.lexeme), t.span)),
            }
        };
        while self.eat_punct("*") {
            if !ty.is_basic() {
                return Err(perr(format!("pointer to non-basic type `{ty}`"), sp.to(self.prev_span())));
            }
            ty = Ty::Ref(Box::new(ty));
        }
        Ok(ty)
    }

    fn effect(&mut self) -> PResult<Effect> {
        self.expect_punct("<")?;
        let mut eff = Effect::empty();
        if self.eat_punct(">") {
            return Ok(eff);
        }
        loop {
            let (name, sp) = self.ident()?;
            let a = EffAtom::from_name(&name).ok_or_else(|| perr(format!("unknown effect `{name}`"), sp))?;
            eff.push(a);
            if self.eat_punct(">") {
                return Ok(eff);
            }
            self.expect_punct(",")?;
        }
    }

    // ---- expressions ----

    fn expr(&mut self) -> PResult<Expr> {
        let sp = self.span();
        if self.eat_kw("let") {
            let (x, _) = self.ident()?;
            let ty = if self.eat_punct(":") { Some(self.ty()?) } else { None };
            self.expect_punct("=")?;
            let bound = self.expr()?;
            check_literal_fit(&bound, ty.as_ref())?;
            self.expect_kw("in")?;
            let body = self.expr()?;
            let span = sp.to(body.span);
            return Ok(Expr::at(ExprKind::Let(x, ty, Box::new(bound), Box::new(body)), span));
        }
        if self.eat_kw("if") {
            let g = self.expr()?;
            self.expect_kw("then")?;
            let t = self.expr()?;
            self.expect_kw("else")?;
            let e = self.expr()?;
            let span = sp.to(e.span);
            return Ok(Expr::at(ExprKind::Cond(Box::new(g), Box::new(t), Box::new(e)), span));
        }
        if self.eat_kw("match") {
            let scrut = self.expr()?;
            self.expect_kw("with")?;
            let mut arms = Vec::new();
            let saved = self.no_bar;
            self.no_bar = true;
            let mut first = true;
            while self.at_punct("|") || first {
                if !self.eat_punct("|") && !first {
                    break;
                }
                first = false;
                let pat = self.pattern()?;
                self.expect_punct("=>")?;
                let body = self.expr()?;
                arms.push((pat, body));
            }
            self.no_bar = saved;
            let span = sp.to(self.prev_span());
            return Ok(Expr::at(ExprKind::Match(Box::new(scrut), arms), span));
        }
        if self.eat_kw("for") {
            self.expect_punct("(")?;
            let saved = std::mem::replace(&mut self.no_bar, false);
            let lo = self.expr()?;
            self.expect_punct("...")?;
            let hi = self.expr()?;
            self.expect_punct(",")?;
            let dir = if self.eat_kw("Up") {
                Dir::Up
            } else if self.eat_kw("Down") {
                Dir::Down
            } else {
                return Err(perr(format!("expected `Up` or `Down`, found {}", self.describe()), self.span()));
            };
            self.expect_punct(")")?;
            self.expect_punct("{")?;
            let body = self.expr()?;
            self.eat_punct(";");
            let end = self.expect_punct("}")?;
            self.no_bar = saved;
            return Ok(Expr::at(ExprKind::For(Box::new(lo), Box::new(hi), dir, Box::new(body)), sp.to(end)));
        }
        let lhs = self.binary(0)?;
        if self.eat_punct(":=") {
            let rhs = self.expr()?;
            let span = lhs.span.to(rhs.span);
            return Ok(Expr::at(ExprKind::Prim(beepl_core::PrimOp::Assign, vec![lhs, rhs]), span));
        }
        Ok(lhs)
    }

    fn binary(&mut self, level: usize) -> PResult<Expr> {
        if level == BINARY_LEVELS.len() {
            return self.unary();
        }
        let mut lhs = self.binary(level + 1)?;
        loop {
            let Some(op) = BINARY_LEVELS[level]
                .iter()
                .find(|(p, _)| self.at_punct(p) && !(self.no_bar && *p == "|"))
                .map(|(_, op)| *op)
            else {
                return Ok(lhs);
            };
            self.pos += 1;
            let rhs = self.binary(level + 1)?;
            let span = lhs.span.to(rhs.span);
            lhs = Expr::at(ExprKind::Prim(beepl_core::PrimOp::Bop(op), vec![lhs, rhs]), span);
        }
    }

    fn literal(&mut self, negative: bool, sp: Span) -> PResult<Expr> {
        let t = self.bump()?;
        let TokKind::Int(mag, suffix) = t.kind else { unreachable!() };
        let v = if negative { -(mag as i128) } else { mag as i128 };
        let span = sp.to(t.span);
        let kind = match suffix {
            Some(ty) => {
                let iv = IntVal::exact(ty, v).ok_or_else(|| {
                    Diagnostic::error("LiteralOutOfRange", format!("literal {v} does not fit in `{}`", ty.name()), span)
                })?;
                Expr::num(iv).kind
            }
            None if PrimTy::INT.fits(v) => ExprKind::ConstInt(v as i32),
            None if PrimTy::LONG.fits(v) => ExprKind::ConstLong(v as i64),
            None => ExprKind::ConstNum(IntVal::wrap(PrimTy::ULONG, v)),
        };
        Ok(Expr::at(kind, span))
    }

    fn unary(&mut self) -> PResult<Expr> {
        let sp = self.span();
        if self.at_punct("-") {
            let adjacent_lit = matches!(self.peek_n(1), Some(t) if matches!(t.kind, TokKind::Int(..)) && t.span.start == sp.end);
            self.pos += 1;
            if adjacent_lit {
                let lit = self.literal(true, sp)?;
                return self.postfix(lit);
            }
            let e = self.unary()?;
            let span = sp.to(e.span);
            return Ok(Expr::at(ExprKind::Prim(beepl_core::PrimOp::Uop(Uop::Neg), vec![e]), span));
        }
        let op = if self.eat_punct("~") {
            Some(beepl_core::PrimOp::Uop(Uop::BitNot))
        } else if self.eat_kw("not") {
            Some(beepl_core::PrimOp::Uop(Uop::LogNot))
        } else if self.eat_punct("!") {
            Some(beepl_core::PrimOp::Deref)
        } else if self.at_punct("(") && self.at_type_start(1) {
            self.pos += 1;
            let ty = self.ty()?;
            self.expect_punct(")")?;
            match ty {
                Ty::Prim(p) if p.is_integer() => Some(beepl_core::PrimOp::Uop(Uop::Cast(p))),
                _ => return Err(perr(format!("casts are only defined between integer types, not `{ty}`"), sp)),
            }
        } else {
            None
        };
        if let Some(op) = op {
            let e = self.unary()?;
            let span = sp.to(e.span);
            return Ok(Expr::at(ExprKind::Prim(op, vec![e]), span));
        }
        let p = self.primary()?;
        self.postfix(p)
    }

    fn postfix(&mut self, mut e: Expr) -> PResult<Expr> {
        while self.eat_punct(".") {
            let (f, fsp) = self.ident()?;
            let span = e.span.to(fsp);
            e = Expr::at(ExprKind::Field(Box::new(e), f), span);
        }
        Ok(e)
    }

    fn paren_expr(&mut self) -> PResult<Expr> {
        self.expect_punct("(")?;
        let saved = std::mem::replace(&mut self.no_bar, false);
        let e = self.expr()?;
        self.no_bar = saved;
        self.expect_punct(")")?;
        Ok(e)
    }

    fn primary(&mut self) -> PResult<Expr> {
        let sp = self.span();
        let Some(t) = self.peek().cloned() else {
            return Err(perr("unexpected end of input", self.eof));
        };
        match &t.kind {
            TokKind::Int(..) => return self.literal(false, sp),
            TokKind::Ident => {
                self.pos += 1;
                if self.at_punct("(") {
                    let args = self.call_args()?;
                    let span = sp.to(self.prev_span());
                    let callee = Expr::at(ExprKind::Var(t.lexeme), t.span);
                    return Ok(Expr::at(ExprKind::App(Box::new(callee), args), span));
                }
                if self.eat_punct("{") {
                    let saved = std::mem::replace(&mut self.no_bar, false);
                    let mut fields = Vec::new();
                    while !self.at_punct("}") {
                        let (f, _) = self.ident()?;
                        self.expect_punct("=")?;
                        fields.push((f, self.expr()?));
                        if !self.eat_punct(",") {
                            break;
                        }
                    }
                    let end = self.expect_punct("}")?;
                    self.no_bar = saved;
                    return Ok(Expr::at(ExprKind::StructInit(t.lexeme, fields), sp.to(end)));
                }
                return Ok(Expr::at(ExprKind::Var(t.lexeme), t.span));
            }
            TokKind::Keyword => match t.lexeme.as_str() {
                "true" | "false" => {
                    self.pos += 1;
                    return Ok(Expr::at(ExprKind::ConstBool(t.lexeme == "true"), t.span));
                }
                "ref" | "some" => {
                    self.pos += 1;
                    let e = self.paren_expr()?;
                    let span = sp.to(self.prev_span());
                    let kind = if t.lexeme == "ref" {
                        ExprKind::Prim(beepl_core::PrimOp::RefOp, vec![e])
                    } else {
                        ExprKind::SomeLit(Box::new(e))
                    };
                    return Ok(Expr::at(kind, span));
                }
                "none" => {
                    self.pos += 1;
                    if self.eat_punct("(") {
                        let inner = self.ty()?;
                        let end = self.expect_punct(")")?;
                        if !matches!(inner, Ty::Ref(_) | Ty::FunPtr(..)) {
                            return Err(perr(format!("none requires a pointer type, found `{inner}`"), sp.to(end)));
                        }
                        return Ok(Expr::at(ExprKind::NoneLit(Some(Ty::Option(Box::new(inner)))), sp.to(end)));
                    }
                    return Ok(Expr::at(ExprKind::NoneLit(None), t.span));
                }
                _ => {}
            },
            TokKind::Punct if t.lexeme == "(" => {
                if self.peek_n(1).is_some_and(|n| n.is_punct(")")) {
                    self.pos += 2;
                    return Ok(Expr::at(ExprKind::UnitLit, sp.to(self.prev_span())));
                }
                let mut e = self.paren_expr()?;
                e.span = sp.to(self.prev_span());
                return Ok(e);
            }
            _ => {}
        }
        Err(perr(format!("expected expression, found `{}`", t.lexeme), t.span))
    }

    fn call_args(&mut self) -> PResult<Vec<Expr>> {
        self.expect_punct("(")?;
        let saved = std::mem::replace(&mut self.no_bar, false);
        let mut args = Vec::new();
        if !self.at_punct(")") {
            loop {
                args.push(self.expr()?);
                if !self.eat_punct(",") {
                    break;
                }
            }
        }
        self.no_bar = saved;
        self.expect_punct(")")?;
        Ok(args)
    }

    fn pattern(&mut self) -> PResult<Pattern> {
        if self.eat_kw("pnone") {
            return Ok(Pattern::Pnone);
        }
        if self.eat_kw("psome") {
            return Ok(Pattern::Psome(self.ident()?.0));
        }
        let (x, sp) = self.ident()?;
        if x == "_" && self.at_punct("=>") {
            return Ok(Pattern::Pwild);
        }
        if !self.eat_punct(",") {
            return Err(perr(format!("expected pattern, found `{x}`"), sp));
        }
        let target = self.ty()?;
        let mut fields = Vec::new();
        if self.eat_punct(":") {
            loop {
                self.expect_punct("(")?;
                let (y, _) = self.ident()?;
                self.expect_punct(",")?;
                let t = self.ty()?;
                self.expect_punct(")")?;
                fields.push((y, t));
                if !self.eat_punct(",") {
                    break;
                }
            }
        }
        Ok(Pattern::Pbytes { x, target, fields })
    }

    // ---- declarations ----

    fn program(&mut self) -> PResult<Program> {
        let mut prog = Program::default();
        let mut pending: Option<String> = None;
        while self.peek().is_some() {
            let t = self.peek().cloned().expect("token");
            if t.kind == TokKind::Section {
                self.pos += 1;
                pending = Some(self.string()?);
                continue;
            }
            if t.is_kw("fun") {
                let f = self.fun_decl(pending.take())?;
                prog.decls.push(Decl::Fun(f));
            } else if t.is_kw("extern") {
                let e = self.ext_decl()?;
                prog.decls.push(Decl::Ext(e));
            } else if t.is_kw("struct") && self.peek_n(1).is_some_and(|n| n.is_punct("{")) {
                let g = self.map_decl(&mut pending)?;
                prog.decls.push(Decl::Glob(g));
            } else if t.is_kw("struct")
                && self.peek_n(1).is_some_and(|n| n.kind == TokKind::Ident)
                && self.peek_n(2).is_some_and(|n| n.is_punct("{"))
            {
                let c = self.composite()?;
                prog.composites.push(c);
            } else if self.at_type_start(0) {
                let g = self.glob_decl(&mut pending)?;
                prog.decls.push(Decl::Glob(g));
            } else {
                return Err(perr(format!("expected declaration, found `{}`", t.lexeme), t.span));
            }
        }
        Ok(prog)
    }

    fn fun_decl(&mut self, sec: Option<String>) -> PResult<FunDecl> {
        let sp = self.expect_kw("fun")?;
        let (name, _) = self.ident()?;
        self.expect_punct("(")?;
        let mut args = Vec::new();
        if !self.at_punct(")") {
            loop {
                let ty = self.ty()?;
                let (x, _) = self.ident()?;
                args.push((x, ty));
                if !self.eat_punct(",") {
                    break;
                }
            }
        }
        self.expect_punct(")")?;
        self.expect_punct(":")?;
        let rt = self.ty()?;
        let ef = if self.eat_punct(",") { Some(self.effect()?) } else { None };
        self.expect_punct("{")?;
        let body = self.expr()?;
        self.eat_punct(";");
        let end = self.expect_punct("}")?;
        let flag = sec.is_some();
        Ok(FunDecl { name, sec, rt, ef, cc: CallConv::default(), args, vars: Vec::new(), body, flag, span: sp.to(end) })
    }

    fn ext_decl(&mut self) -> PResult<ExtDecl> {
        let sp = self.expect_kw("extern")?;
        self.expect_kw("fun")?;
        let (name, _) = self.ident()?;
        self.expect_punct("(")?;
        let mut args = Vec::new();
        if !self.at_punct(")") {
            loop {
                args.push(self.ty()?);
                if self.peek().is_some_and(|t| t.kind == TokKind::Ident) {
                    self.pos += 1;
                }
                if !self.eat_punct(",") {
                    break;
                }
            }
        }
        self.expect_punct(")")?;
        self.expect_punct(":")?;
        let ret = self.ty()?;
        let ef = if self.eat_punct(",") { self.effect()? } else { Effect::empty() };
        let end = self.expect_punct(";")?;
        Ok(ExtDecl { name, args, ret, ef, cc: CallConv::default(), span: sp.to(end) })
    }

    fn trailing_section(&mut self) -> PResult<Option<String>> {
        if self.peek().is_some_and(|t| t.kind == TokKind::Section) {
            self.pos += 1;
            return Ok(Some(self.string()?));
        }
        Ok(None)
    }

    fn map_decl(&mut self, pending: &mut Option<String>) -> PResult<GlobDecl> {
        let sp = self.expect_kw("struct")?;
        self.expect_punct("{")?;
        self.expect_punct("...")?;
        self.expect_punct("}")?;
        let (name, _) = self.ident()?;
        let sec = match self.trailing_section()? {
            Some(s) => Some(s),
            None => pending.take(),
        };
        self.eat_punct(";");
        let ty = Ty::Ref(Box::new(Ty::Struct("bpf_map".into())));
        Ok(GlobDecl { name, ty, init: GlobInit::Map, sec, span: sp.to(self.prev_span()) })
    }

    fn composite(&mut self) -> PResult<Composite> {
        self.expect_kw("struct")?;
        let (name, _) = self.ident()?;
        self.expect_punct("{")?;
        let mut fields = Vec::new();
        while !self.eat_punct("}") {
            let ty = self.ty()?;
            let (f, _) = self.ident()?;
            let ty = if self.eat_punct("[") {
                let n = self.array_len()?.ok_or_else(|| perr("struct array fields need a length", self.span()))?;
                match ty {
                    Ty::Prim(p) => Ty::Array(p, n),
                    _ => return Err(perr("array elements must be primitive", self.prev_span())),
                }
            } else {
                ty
            };
            self.expect_punct(";")?;
            fields.push((f, ty));
        }
        self.eat_punct(";");
        Ok(Composite { name, fields })
    }

    /// After `[`: an optional length, then `]`.
    fn array_len(&mut self) -> PResult<Option<u32>> {
        let n = match self.peek().map(|t| t.kind.clone()) {
            Some(TokKind::Int(n, None)) => {
                let sp = self.bump()?.span;
                if n == 0 || n > u32::MAX as u64 {
                    return Err(perr("array length must be positive", sp));
                }
                Some(n as u32)
            }
            _ => None,
        };
        self.expect_punct("]")?;
        Ok(n)
    }

    fn glob_decl(&mut self, pending: &mut Option<String>) -> PResult<GlobDecl> {
        let sp = self.span();
        let ty = self.ty()?;
        let (name, _) = self.ident()?;
        let array = if self.eat_punct("[") { Some(self.array_len()?) } else { None };
        let sec = match self.trailing_section()? {
            Some(s) => Some(s),
            None => pending.take(),
        };
        self.expect_punct("=")?;
        let (ty, init) = match array {
            Some(len) => {
                let Ty::Prim(elem) = ty else {
                    return Err(perr("array elements must be primitive", sp));
                };
                let s = self.string()?;
                let n = len.unwrap_or(s.len() as u32 + 1);
                if (s.len() as u32) >= n {
                    return Err(perr(format!("string of {} bytes does not fit `{name}[{n}]`", s.len()), sp));
                }
                (Ty::Array(elem, n), GlobInit::Str(s))
            }
            None => {
                let e = self.unary()?;
                if !e.is_value() {
                    return Err(perr("global initializers must be literals", e.span));
                }
                check_literal_fit(&e, Some(&ty))?;
                (ty, GlobInit::Const(e))
            }
        };
        let end = self.expect_punct(";")?;
        Ok(GlobDecl { name, ty, init, sec, span: sp.to(end) })
    }
}

/// A literal bound directly at a declared integer type must fit it.
fn check_literal_fit(e: &Expr, ty: Option<&Ty>) -> PResult<()> {
    let Some(Ty::Prim(p)) = ty else { return Ok(()) };
    if !p.is_integer() {
        return Ok(());
    }
    let v = match &e.kind {
        ExprKind::ConstInt(v) => *v as i128,
        ExprKind::ConstLong(v) => *v as i128,
        ExprKind::ConstNum(v) => v.value(),
        _ => return Ok(()),
    };
    if p.fits(v) {
        Ok(())
    } else {
        Err(Diagnostic::error("LiteralOutOfRange", format!("literal {v} does not fit in `{}`", p.name()), e.span))
    }
}

pub fn parse_program(src: &str) -> Result<Program, Diagnostic> {
    Parser::new(src)?.program()
}

pub fn parse_expr(src: &str) -> Result<Expr, Diagnostic> {
    let mut p = Parser::new(src)?;
    let e = p.expr()?;
    if p.peek().is_some() {
        return Err(perr(format!("unexpected {} after expression", p.describe()), p.span()));
    }
    Ok(e)
}

pub fn parse_ty(src: &str) -> Result<Ty, Diagnostic> {
    let mut p = Parser::new(src)?;
    let t = p.ty()?;
    if p.peek().is_some() {
        return Err(perr(format!("unexpected {} after type", p.describe()), p.span()));
    }
    Ok(t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use beepl_core::PrimOp;

    #[test]
    fn minimal_function() {
        let p = parse_program("fun f() : int { 1 }").unwrap();
        let f = p.function("f").unwrap();
        assert_eq!(f.rt, Ty::INT);
        assert!(f.args.is_empty());
        assert_eq!(f.body, Expr::int(1));
        assert!(!f.flag);
    }

    #[test]
    fn precedence() {
        let e = parse_expr("1 + 2 * 3 == 7 && true").unwrap();
        let want = Expr::bop(
            Bop::Land,
            Expr::bop(Bop::Eq, Expr::bop(Bop::Add, Expr::int(1), Expr::bop(Bop::Mul, Expr::int(2), Expr::int(3))), Expr::int(7)),
            Expr::boolean(true),
        );
        assert_eq!(e, want);
        let e = parse_expr("uid := f() & 0xFFFFFFFF").unwrap();
        let ExprKind::Prim(PrimOp::Assign, args) = &e.kind else { panic!() };
        assert_eq!(args[1], Expr::bop(Bop::And, Expr::app("f", vec![]), Expr::long(0xFFFF_FFFF)));
    }

    #[test]
    fn negative_literals_fold() {
        assert_eq!(parse_expr("-5").unwrap(), Expr::int(-5));
        assert_eq!(parse_expr("-2147483648").unwrap(), Expr::int(i32::MIN));
        assert_eq!(parse_expr("- 5").unwrap(), Expr::uop(Uop::Neg, Expr::int(5)));
        assert_eq!(parse_expr("a - 5").unwrap(), Expr::bop(Bop::Sub, Expr::var("a"), Expr::int(5)));
        assert_eq!(parse_expr("2147483648").unwrap(), Expr::long(2147483648));
    }

    #[test]
    fn literal_too_wide_for_declared_type() {
        let e = parse_expr("let x : int = 0x100000000 in x").unwrap_err();
        assert_eq!(e.code, "LiteralOutOfRange");
        assert_eq!(parse_expr("300u8").unwrap_err().code, "LiteralOutOfRange");
    }

    #[test]
    fn match_arms_stop_at_bar() {
        let e = parse_expr("match p with | pnone => -1 | psome q => (int)!q").unwrap();
        let ExprKind::Match(_, arms) = &e.kind else { panic!() };
        assert_eq!(arms.len(), 2);
        assert_eq!(arms[0], (Pattern::Pnone, Expr::int(-1)));
        assert_eq!(arms[1].0, Pattern::Psome("q".into()));
        assert_eq!(arms[1].1, Expr::uop(Uop::Cast(PrimTy::INT), Expr::deref(Expr::var("q"))));
        let e = parse_expr("match p with | pnone => (a | b) | _ => c").unwrap();
        let ExprKind::Match(_, arms) = &e.kind else { panic!() };
        assert_eq!(arms[0].1, Expr::bop(Bop::Or, Expr::var("a"), Expr::var("b")));
        assert_eq!(arms[1].0, Pattern::Pwild);
    }

    #[test]
    fn bytes_pattern() {
        let e = parse_expr("match d with | eth, struct ethhdr: (h_proto, uint16) => 1 | _ => 2").unwrap();
        let ExprKind::Match(_, arms) = &e.kind else { panic!() };
        assert_eq!(
            arms[0].0,
            Pattern::Pbytes {
                x: "eth".into(),
                target: Ty::strukt("ethhdr"),
                fields: vec![("h_proto".into(), Ty::Prim(PrimTy::U16))]
            }
        );
    }

    #[test]
    fn loops_and_refs() {
        let e = parse_expr("for (1 ... 5, Up) { x := !x + 1 }").unwrap();
        let body = Expr::assign(Expr::var("x"), Expr::bop(Bop::Add, Expr::deref(Expr::var("x")), Expr::int(1)));
        assert_eq!(e, Expr::for_(Expr::int(1), Expr::int(5), Dir::Up, body));
        assert_eq!(parse_expr("ref(2)").unwrap(), Expr::reference(Expr::int(2)));
    }

    #[test]
    fn declarations() {
        let src = r#"
            struct pair { int a; uint8 tag[4]; }
            extern fun probe(long, int x) : long, <io>;
            long G = 7;
            #section "xdp"
            struct { ... } tbl #section ".maps"
            fun main(option(struct xdp_md*) ctx) : int, <alloc,read> { 0; }
            char LICENSE[] #section "license" = "GPL";
        "#;
        let p = parse_program(src).unwrap();
        assert_eq!(p.composites[0].fields[1], ("tag".into(), Ty::Array(PrimTy::U8, 4)));
        let Decl::Ext(e) = &p.decls[0] else { panic!() };
        assert_eq!(e.args, vec![Ty::LONG, Ty::INT]);
        let Decl::Glob(tbl) = &p.decls[2] else { panic!() };
        assert_eq!(tbl.sec.as_deref(), Some(".maps"));
        let f = p.function("main").unwrap();
        assert_eq!(f.sec.as_deref(), Some("xdp"));
        assert!(f.flag);
        assert_eq!(f.ef, Some(Effect::of(&[EffAtom::Alloc, EffAtom::Read])));
        let Decl::Glob(lic) = &p.decls[4] else { panic!() };
        assert_eq!(lic.ty, Ty::Array(PrimTy::I8, 4));
        assert_eq!(lic.init, GlobInit::Str("GPL".into()));
    }

    #[test]
    fn errors_point_at_first_bad_token() {
        let e = parse_program("fun f() : int {\n  let x = in x }").unwrap_err();
        assert_eq!(e.code, "ParseError");
        assert_eq!((e.span.line, e.span.col), (2, 11));
        assert!(parse_ty("option(int)").is_err());
        assert!(parse_program("fun f() : int { 1").is_err());
    }

    #[test]
    fn no_internal_nodes_from_parser() {
        let p = parse_program("fun f(int* x) : int { let y : int = !x in match none(int*) with | pnone => y | psome z => !z }").unwrap();
        assert!(!p.functions().any(|f| f.body.contains_internal()));
    }
}
