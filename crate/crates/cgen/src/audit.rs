//! Post-generation checks on the emitted C.
//!
//! [`guard_audit`] scans the rendered text of each function: every division,
//! remainder and shift must sit behind the guard that makes it total.
//! [`deref_audit`] walks the fragment tree: every dereference must be of a
//! pointer that cannot be null, and every read through a packet view must
//! follow a bounds check covering it.

use std::collections::{BTreeMap, BTreeSet};

use crate::cir::{CExpr, CFunction, CStmt};
use crate::emit::CUnit;
use crate::CgenError;

fn tokens(text: &str) -> Vec<String> {
    const MULTI: &[&str] = &["->", "<<", ">>", "<=", ">=", "==", "!=", "&&", "||", "++", "--", "+="];
    let b = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < b.len() {
        let c = b[i];
        if c.is_ascii_whitespace() {
            i += 1;
        } else if c.is_ascii_alphanumeric() || c == b'_' {
            let start = i;
            while i < b.len() && (b[i].is_ascii_alphanumeric() || b[i] == b'_') {
                i += 1;
            }
            out.push(text[start..i].to_string());
        } else if c == b'"' {
            let start = i;
            i += 1;
            while i < b.len() && b[i] != b'"' {
                i += if b[i] == b'\\' { 2 } else { 1 };
            }
            i = (i + 1).min(b.len());
            out.push(text[start..i].to_string());
        } else if let Some(m) = MULTI.iter().find(|m| text[i..].starts_with(**m)) {
            out.push(m.to_string());
            i += m.len();
        } else {
            out.push((c as char).to_string());
            i += 1;
        }
    }
    out
}

/// The operand right of position `k`: tokens up to the parenthesis that
/// closes the enclosing group.
fn right_operand(toks: &[String], k: usize) -> &[String] {
    let mut depth = 0i32;
    for (j, t) in toks.iter().enumerate().skip(k + 1) {
        match t.as_str() {
            "(" => depth += 1,
            ")" if depth == 0 => return &toks[k + 1..j],
            ")" => depth -= 1,
            ";" | "?" | ":" if depth == 0 => return &toks[k + 1..j],
            _ => {}
        }
    }
    &toks[k + 1..]
}

fn contains_seq(hay: &[String], needle: &[String]) -> bool {
    !needle.is_empty() && hay.windows(needle.len()).any(|w| w == needle)
}

fn seq(parts: &[&str], operand: &[String]) -> Vec<String> {
    let mut out = Vec::new();
    for p in parts {
        if *p == "$" {
            out.extend(operand.iter().cloned());
        } else {
            out.push(p.to_string());
        }
    }
    out
}

/// Checks the rendered text of one function.
pub fn guard_audit(name: &str, text: &str) -> Result<(), String> {
    let toks = tokens(text);
    let mut stmt_start = 0;
    for (k, t) in toks.iter().enumerate() {
        match t.as_str() {
            ";" | "{" | "}" => stmt_start = k + 1,
            "/" | "%" | "<<" | ">>" => {
                let operand = right_operand(&toks, k);
                let before = &toks[stmt_start..k];
                let ok = if t == "/" || t == "%" {
                    contains_seq(before, &seq(&["(", "$", "==", "0", ")", "?"], operand))
                } else {
                    let head = seq(&["(", "(", "unsigned", "long", ")", "$", ">="], operand);
                    before.windows(head.len() + 3).any(|w| {
                        w[..head.len()] == head[..]
                            && w[head.len()].parse::<u32>().is_ok_and(|n| matches!(n, 8 | 16 | 32 | 64))
                            && w[head.len() + 1] == ")"
                            && w[head.len() + 2] == "?"
                    })
                };
                if !ok {
                    return Err(format!("`{t}` in `{name}` is not guarded (operand `{}`)", operand.join(" ")));
                }
            }
            _ => {}
        }
    }
    Ok(())
}

#[derive(Clone, Default)]
struct Facts {
    /// Nullable names known to be non-null here.
    proven: BTreeSet<String>,
    /// Packet views whose next `sizeof(T)` bytes are in bounds, with `T`.
    checked: BTreeMap<String, String>,
}

impl Facts {
    fn meet(&self, other: &Facts) -> Facts {
        Facts {
            proven: self.proven.intersection(&other.proven).cloned().collect(),
            checked: self.checked.iter().filter(|(k, v)| other.checked.get(*k) == Some(v)).map(|(k, v)| (k.clone(), v.clone())).collect(),
        }
    }
}

struct DerefAudit<'a> {
    f: &'a CFunction,
    nullable: BTreeSet<&'a str>,
    pointers: BTreeSet<&'a str>,
}

fn start_of(e: &CExpr) -> Option<&str> {
    match e {
        CExpr::Dot(b, f) if f == "start" => match &**b {
            CExpr::Name(n) => Some(n),
            _ => None,
        },
        _ => None,
    }
}

impl<'a> DerefAudit<'a> {
    fn err(&self, msg: String) -> String {
        format!("in `{}`: {msg}", self.f.name)
    }

    /// Whether `e` is known to hold a valid pointer.
    fn nonnull(&self, facts: &Facts, e: &CExpr) -> bool {
        match e {
            CExpr::AddrOf(_) => true,
            CExpr::Name(n) => !self.nullable.contains(n.as_str()) || facts.proven.contains(n),
            CExpr::Cond(_, a, b) => self.nonnull(facts, a) && self.nonnull(facts, b),
            _ => false,
        }
    }

    /// Whether `e` may evaluate to null as far as this function can tell.
    fn maybe_null(&self, facts: &Facts, e: &CExpr) -> bool {
        match e {
            CExpr::Name(n) => self.nullable.contains(n.as_str()) && !facts.proven.contains(n),
            CExpr::Cond(_, a, b) => self.maybe_null(facts, a) || self.maybe_null(facts, b),
            CExpr::Cast(_, a) => matches!(&**a, CExpr::Lit(l) if l == "0") || self.maybe_null(facts, a),
            CExpr::Lit(l) => l == "0",
            _ => false,
        }
    }

    fn expr(&self, facts: &Facts, e: &CExpr) -> Result<(), String> {
        let mut problem = None;
        e.walk(&mut |n| {
            if problem.is_some() {
                return;
            }
            match n {
                CExpr::Deref(p) | CExpr::Arrow(p, _) => match &**p {
                    CExpr::AddrOf(_) => {}
                    CExpr::Name(_) if self.nonnull(facts, p) => {}
                    other => problem = Some(format!("dereference of `{}` which may be null", other.render())),
                },
                CExpr::Cast(t, inner) => {
                    if let Some(b) = start_of(inner) {
                        let want = t.trim_end_matches('*').trim_end();
                        if facts.checked.get(b).map(String::as_str) != Some(want) {
                            problem = Some(format!("`{}` is read without a bounds check for `{want}`", b));
                        }
                    }
                }
                CExpr::Call(f, args) if f == "__builtin_memcpy" => {
                    if let [_, src, CExpr::Sizeof(t)] = args.as_slice() {
                        if let Some(b) = start_of(src) {
                            if facts.checked.get(b) != Some(t) {
                                problem = Some(format!("`{b}` is copied without a bounds check for `{t}`"));
                            }
                        }
                    }
                }
                CExpr::Call(f, args)
                    if f.starts_with("__bpl_") && f.ends_with("_data") && !args.iter().all(|a| self.nonnull(facts, a)) =>
                {
                    problem = Some(format!("context passed to `{f}` may be null"));
                }
                _ => {}
            }
        });
        problem.map_or(Ok(()), |p| Err(self.err(p)))
    }

    fn block(&self, mut facts: Facts, ss: &[CStmt]) -> Result<Facts, String> {
        for s in ss {
            facts = self.stmt(facts, s)?;
        }
        Ok(facts)
    }

    fn stmt(&self, mut facts: Facts, s: &CStmt) -> Result<Facts, String> {
        match s {
            CStmt::Assign(l, v) => {
                self.expr(&facts, l)?;
                self.expr(&facts, v)?;
                if let CExpr::Name(x) = l {
                    if self.pointers.contains(x.as_str()) && !self.nullable.contains(x.as_str()) && self.maybe_null(&facts, v) {
                        return Err(self.err(format!("`{x}` cannot be null but is assigned `{}`", v.render())));
                    }
                    if self.nullable.contains(x.as_str()) && self.nonnull(&facts, v) {
                        facts.proven.insert(x.clone());
                    } else {
                        facts.proven.remove(x);
                    }
                    facts.checked.remove(x);
                }
                Ok(facts)
            }
            CStmt::AddAssign(l, v) => {
                self.expr(&facts, l)?;
                self.expr(&facts, v)?;
                if let Some(b) = start_of(l) {
                    facts.checked.remove(b);
                }
                Ok(facts)
            }
            CStmt::Expr(e) | CStmt::Return(e) => {
                self.expr(&facts, e)?;
                Ok(facts)
            }
            CStmt::If(c, t, e) => {
                self.expr(&facts, c)?;
                let mut on_true = facts.clone();
                let mut on_false = facts.clone();
                match c {
                    CExpr::Binary("==", p, z) if matches!(&**z, CExpr::Cast(_, l) if **l == CExpr::lit("0")) => {
                        if let CExpr::Name(p) = &**p {
                            on_false.proven.insert(p.clone());
                        }
                    }
                    CExpr::Binary(">", sum, end) => {
                        if let (CExpr::Binary("+", start, size), CExpr::Dot(eb, ef)) = (&**sum, &**end) {
                            if let (Some(b), CExpr::Sizeof(t), CExpr::Name(b2)) = (start_of(start), &**size, &**eb) {
                                if b == b2 && ef == "end" {
                                    on_false.checked.insert(b.to_string(), t.clone());
                                }
                            }
                        }
                    }
                    _ => {}
                }
                on_true = self.block(on_true, t)?;
                on_false = self.block(on_false, e)?;
                Ok(on_true.meet(&on_false))
            }
            CStmt::For { index, lo, hi, body, .. } => {
                for x in [index, lo, hi] {
                    facts.proven.remove(x);
                }
                let once = self.block(facts.clone(), body)?;
                let entry = facts.meet(&once);
                let again = self.block(entry.clone(), body)?;
                Ok(entry.meet(&again))
            }
        }
    }
}

pub fn deref_audit(f: &CFunction) -> Result<(), String> {
    let a = DerefAudit {
        f,
        nullable: f.nullable.iter().map(String::as_str).collect(),
        pointers: f.params.iter().chain(&f.locals).filter(|(t, _)| t.ptr).map(|(_, n)| n.as_str()).collect(),
    };
    a.block(Facts::default(), &f.body).map(|_| ())
}

/// Runs both audits over every generated function.
pub fn audit(unit: &CUnit) -> Result<(), CgenError> {
    for f in &unit.functions {
        guard_audit(&f.name, &f.render(false)).map_err(CgenError::Audit)?;
        deref_audit(f).map_err(CgenError::Audit)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cir::CType;

    #[test]
    fn guards_found() {
        assert!(guard_audit("f", "return ((b == 0) ? 0 : (a % b));").is_ok());
        assert!(guard_audit("f", "return (a % b);").is_err());
        assert!(guard_audit("f", "x = ((c == 0) ? 0 : (a / b));").is_err());
        assert!(guard_audit("f", "return (((unsigned long)s >= 64) ? 0 : (r >> s));").is_ok());
        assert!(guard_audit("f", "return (((unsigned long)s >= 64) ? 0 : (r >> t));").is_err());
        assert!(guard_audit("f", "if (x) { y = ((b == 0) ? 0 : 1); } z = (a / b);").is_err());
    }

    fn fun(body: Vec<CStmt>, nullable: &[&str]) -> CFunction {
        let p = CType::base("long").ptr_to();
        CFunction {
            name: "f".into(),
            sec: None,
            ret: CType::base("int"),
            params: vec![(p.clone(), "p".into())],
            locals: vec![(p, "x".into())],
            body,
            nullable: nullable.iter().map(|s| s.to_string()).collect(),
        }
    }

    #[test]
    fn null_guard_required() {
        let read = CStmt::Return(CExpr::Deref(Box::new(CExpr::name("p"))));
        assert!(deref_audit(&fun(vec![read.clone()], &[])).is_ok());
        assert!(deref_audit(&fun(vec![read.clone()], &["p"])).is_err());
        let guard = CExpr::bin("==", CExpr::name("p"), CExpr::cast("long *", CExpr::lit("0")));
        let guarded = CStmt::If(
            guard,
            vec![CStmt::Return(CExpr::lit("-1"))],
            vec![CStmt::Assign(CExpr::name("x"), CExpr::name("p")), CStmt::Return(CExpr::Deref(Box::new(CExpr::name("x"))))],
        );
        assert!(deref_audit(&fun(vec![guarded], &["p"])).is_ok());
        let leak = CStmt::Assign(CExpr::name("x"), CExpr::name("p"));
        assert!(deref_audit(&fun(vec![leak], &["p"])).is_err());
    }
}
