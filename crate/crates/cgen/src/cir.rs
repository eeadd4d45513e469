//! The C fragment tree and its rendering.

use std::fmt::Write as _;

/// A C type, split so that declarators can be rendered around a name.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CType {
    pub base: String,
    pub ptr: bool,
    pub array: Option<u32>,
}

impl CType {
    pub fn base(s: &str) -> CType {
        CType { base: s.to_string(), ptr: false, array: None }
    }

    pub fn ptr_to(mut self) -> CType {
        self.ptr = true;
        self
    }

    pub fn declare(&self, name: &str) -> String {
        let star = if self.ptr { " *" } else { " " };
        match self.array {
            Some(n) => format!("{}{star}{name}[{n}]", self.base),
            None => format!("{}{star}{name}", self.base),
        }
    }

    /// Abstract declarator, as used in casts and `sizeof`.
    pub fn abstract_name(&self) -> String {
        match (self.ptr, self.array) {
            (true, _) => format!("{} *", self.base),
            (false, Some(n)) => format!("{}[{n}]", self.base),
            (false, None) => self.base.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CExpr {
    Name(String),
    /// Rendered as given.
    Lit(String),
    Unary(&'static str, Box<CExpr>),
    Binary(&'static str, Box<CExpr>, Box<CExpr>),
    Cond(Box<CExpr>, Box<CExpr>, Box<CExpr>),
    Cast(String, Box<CExpr>),
    Deref(Box<CExpr>),
    AddrOf(String),
    Dot(Box<CExpr>, String),
    Arrow(Box<CExpr>, String),
    Call(String, Vec<CExpr>),
    Sizeof(String),
}

impl CExpr {
    pub fn name(s: &str) -> CExpr {
        CExpr::Name(s.to_string())
    }

    pub fn lit(s: impl Into<String>) -> CExpr {
        CExpr::Lit(s.into())
    }

    pub fn bin(op: &'static str, a: CExpr, b: CExpr) -> CExpr {
        CExpr::Binary(op, Box::new(a), Box::new(b))
    }

    pub fn cast(t: impl Into<String>, e: CExpr) -> CExpr {
        CExpr::Cast(t.into(), Box::new(e))
    }

    pub fn cond(c: CExpr, a: CExpr, b: CExpr) -> CExpr {
        CExpr::Cond(Box::new(c), Box::new(a), Box::new(b))
    }

    pub fn is_atom(&self) -> bool {
        matches!(self, CExpr::Name(_) | CExpr::Lit(_))
    }

    pub fn walk(&self, f: &mut dyn FnMut(&CExpr)) {
        f(self);
        match self {
            CExpr::Unary(_, a) | CExpr::Cast(_, a) | CExpr::Deref(a) | CExpr::Dot(a, _) | CExpr::Arrow(a, _) => a.walk(f),
            CExpr::Binary(_, a, b) => {
                a.walk(f);
                b.walk(f);
            }
            CExpr::Cond(a, b, c) => {
                a.walk(f);
                b.walk(f);
                c.walk(f);
            }
            CExpr::Call(_, args) => args.iter().for_each(|a| a.walk(f)),
            CExpr::Name(_) | CExpr::Lit(_) | CExpr::AddrOf(_) | CExpr::Sizeof(_) => {}
        }
    }

    pub fn render(&self) -> String {
        match self {
            CExpr::Name(s) | CExpr::Lit(s) => s.clone(),
            CExpr::Unary(op, a) => format!("{op}({})", a.render()),
            CExpr::Binary(op, a, b) => {
                let side = |e: &CExpr| match e {
                    CExpr::Binary(inner, ..) if is_relational(op) && is_arith(inner) => e.render_bare(),
                    _ => e.render(),
                };
                format!("({} {op} {})", side(a), side(b))
            }
            CExpr::Cond(c, a, b) => format!("({} ? {} : {})", c.render(), a.render(), b.render()),
            CExpr::Cast(t, a) => match &**a {
                CExpr::Name(_) | CExpr::Lit(_) | CExpr::Binary(..) | CExpr::Cond(..) | CExpr::Deref(_) => {
                    format!("({t}){}", a.render())
                }
                _ => format!("({t})({})", a.render()),
            },
            CExpr::Deref(a) => format!("(*{})", a.render()),
            CExpr::AddrOf(s) => format!("&{s}"),
            CExpr::Dot(a, f) => format!("{}.{f}", a.render()),
            CExpr::Arrow(a, f) => format!("{}->{f}", a.render()),
            CExpr::Call(f, args) => {
                let args: Vec<String> = args.iter().map(CExpr::render).collect();
                format!("{f}({})", args.join(", "))
            }
            CExpr::Sizeof(t) => format!("sizeof({t})"),
        }
    }

    /// Rendering for statement heads, without the outermost parentheses.
    fn render_bare(&self) -> String {
        let s = self.render();
        if matches!(self, CExpr::Binary(..)) {
            s[1..s.len() - 1].to_string()
        } else {
            s
        }
    }
}

fn is_relational(op: &str) -> bool {
    matches!(op, "<" | "<=" | ">" | ">=" | "==" | "!=")
}

fn is_arith(op: &str) -> bool {
    matches!(op, "+" | "-" | "*" | "/" | "%")
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CStmt {
    Assign(CExpr, CExpr),
    AddAssign(CExpr, CExpr),
    Expr(CExpr),
    If(CExpr, Vec<CStmt>, Vec<CStmt>),
    /// Inclusive counted loop over fresh `lo`/`hi`; the exit test sits at
    /// the bottom so the index never steps past `hi`.
    For { index: String, lo: String, hi: String, up: bool, body: Vec<CStmt> },
    Return(CExpr),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CFunction {
    pub name: String,
    pub sec: Option<String>,
    pub ret: CType,
    pub params: Vec<(CType, String)>,
    pub locals: Vec<(CType, String)>,
    pub body: Vec<CStmt>,
    /// Parameters and locals of optional pointer type; they may hold null.
    pub nullable: Vec<String>,
}

fn indent(out: &mut String, depth: usize) {
    for _ in 0..depth {
        out.push_str("    ");
    }
}

fn render_block(out: &mut String, stmts: &[CStmt], depth: usize) {
    for s in stmts {
        render_stmt(out, s, depth);
    }
}

fn render_stmt(out: &mut String, s: &CStmt, depth: usize) {
    indent(out, depth);
    match s {
        CStmt::Assign(CExpr::Deref(p), v) => {
            let _ = writeln!(out, "*{} = {};", p.render(), v.render_bare());
        }
        CStmt::Assign(l, v) => {
            let _ = writeln!(out, "{} = {};", l.render(), v.render_bare());
        }
        CStmt::AddAssign(l, v) => {
            let _ = writeln!(out, "{} += {};", l.render(), v.render_bare());
        }
        CStmt::Expr(e) => {
            let _ = writeln!(out, "{};", e.render_bare());
        }
        CStmt::Return(e) => {
            let _ = writeln!(out, "return {};", e.render_bare());
        }
        CStmt::If(c, t, e) => {
            let _ = writeln!(out, "if ({}) {{", c.render_bare());
            render_block(out, t, depth + 1);
            indent(out, depth);
            if e.is_empty() {
                out.push_str("}\n");
            } else {
                out.push_str("} else {\n");
                render_block(out, e, depth + 1);
                indent(out, depth);
                out.push_str("}\n");
            }
        }
        CStmt::For { index, lo, hi, up, body } => {
            let (cmp, step) = if *up { ("<=", "++") } else { (">=", "--") };
            let _ = writeln!(out, "if ({lo} {cmp} {hi}) {{");
            indent(out, depth + 1);
            let _ = writeln!(out, "for ({index} = {lo}; ; {index}{step}) {{");
            render_block(out, body, depth + 2);
            indent(out, depth + 2);
            let _ = writeln!(out, "if ({index} == {hi}) break;");
            indent(out, depth + 1);
            out.push_str("}\n");
            indent(out, depth);
            out.push_str("}\n");
        }
    }
}

impl CFunction {
    pub fn signature(&self) -> String {
        let params: Vec<String> = self.params.iter().map(|(t, n)| t.declare(n)).collect();
        self.ret.declare(&format!("{}({})", self.name, params.join(", ")))
    }

    pub fn render(&self, with_sec: bool) -> String {
        let mut out = String::new();
        if let (true, Some(sec)) = (with_sec, &self.sec) {
            let _ = writeln!(out, "SEC({})", c_string(sec));
        }
        out.push_str(&self.signature());
        out.push_str("\n{\n");
        for (t, n) in &self.locals {
            let _ = writeln!(out, "    {};", t.declare(n));
        }
        render_block(&mut out, &self.body, 1);
        out.push_str("}\n");
        out
    }

    /// Every statement, depth first.
    pub fn statements(&self) -> Vec<&CStmt> {
        fn go<'a>(ss: &'a [CStmt], out: &mut Vec<&'a CStmt>) {
            for s in ss {
                out.push(s);
                match s {
                    CStmt::If(_, t, e) => {
                        go(t, out);
                        go(e, out);
                    }
                    CStmt::For { body, .. } => go(body, out),
                    _ => {}
                }
            }
        }
        let mut out = Vec::new();
        go(&self.body, &mut out);
        out
    }
}

/// A C string literal.
pub fn c_string(s: &str) -> String {
    let mut out = String::from("\"");
    for b in s.bytes() {
        match b {
            b'"' => out.push_str("\\\""),
            b'\\' => out.push_str("\\\\"),
            b'\n' => out.push_str("\\n"),
            b'\t' => out.push_str("\\t"),
            0x20..=0x7e => out.push(b as char),
            _ => {
                let _ = write!(out, "\\{b:03o}");
            }
        }
    }
    out.push('"');
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn declarators() {
        assert_eq!(CType::base("long").ptr_to().declare("p"), "long *p");
        assert_eq!(CType { array: Some(6), ..CType::base("unsigned char") }.declare("h"), "unsigned char h[6]");
        assert_eq!(CType::base("struct ethhdr").ptr_to().abstract_name(), "struct ethhdr *");
    }

    #[test]
    fn statements_render() {
        let f = CFunction {
            name: "f".into(),
            sec: Some("xdp".into()),
            ret: CType::base("int"),
            params: vec![],
            locals: vec![],
            body: vec![CStmt::Return(CExpr::lit("1"))],
            nullable: vec![],
        };
        assert_eq!(f.render(true), "SEC(\"xdp\")\nint f()\n{\n    return 1;\n}\n");
        let guard = CExpr::bin("==", CExpr::name("p"), CExpr::cast("long *", CExpr::lit("0")));
        let mut out = String::new();
        render_stmt(&mut out, &CStmt::If(guard, vec![CStmt::Return(CExpr::lit("-1"))], vec![]), 0);
        assert_eq!(out, "if (p == (long *)0) {\n    return -1;\n}\n");
    }

    #[test]
    fn strings_escape() {
        assert_eq!(c_string("GPL"), "\"GPL\"");
        assert_eq!(c_string("a\"b\\\n\u{1}"), "\"a\\\"b\\\\\\n\\001\"");
    }
}
