use std::collections::{BTreeMap, BTreeSet};

/// Prefix of every identifier the generator invents. The lexer rejects
/// source identifiers that start with it.
pub const PREFIX: &str = "__bpl_";

const C_KEYWORDS: &[&str] = &[
    "auto", "break", "case", "char", "const", "continue", "default", "do", "double", "else", "enum", "extern",
    "float", "for", "goto", "if", "inline", "int", "long", "register", "restrict", "return", "short", "signed",
    "sizeof", "static", "struct", "switch", "typedef", "union", "unsigned", "void", "volatile", "while", "_Bool",
    "_Complex", "_Imaginary", "_Alignas", "_Alignof", "_Atomic", "_Generic", "_Noreturn", "_Static_assert",
    "_Thread_local",
];

/// Names the preludes define or that the host shim needs.
const PRELUDE_NAMES: &[&str] =
    &["main", "printf", "bytes_t", "SEC", "NULL", "INT_MIN", "LONG_MIN", "htons"];

pub fn is_c_ident(s: &str) -> bool {
    let mut cs = s.chars();
    matches!(cs.next(), Some(c) if c.is_ascii_alphabetic() || c == '_') && cs.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// Whether `s` can be emitted verbatim as a C identifier of our choosing.
pub fn usable(s: &str) -> bool {
    is_c_ident(s)
        && !C_KEYWORDS.contains(&s)
        && !PRELUDE_NAMES.contains(&s)
        && !s.starts_with("__")
        && !(s.starts_with('_') && s[1..].starts_with(|c: char| c.is_ascii_uppercase()))
}

/// Keeps only identifier characters; primes become underscores.
pub fn sanitize(s: &str) -> String {
    s.chars().map(|c| if c.is_ascii_alphanumeric() || c == '_' { c } else { '_' }).collect()
}

/// A struct member name. Members live in their own namespace, so only
/// keywords need replacing.
pub fn member(s: &str) -> String {
    if is_c_ident(s) && !C_KEYWORDS.contains(&s) {
        s.to_string()
    } else {
        format!("{PREFIX}m_{}", sanitize(s))
    }
}

/// Fresh names, one counter per prefix.
#[derive(Debug, Clone, Default)]
pub struct NameSupply {
    counters: BTreeMap<&'static str, u32>,
    taken: BTreeSet<String>,
}

impl NameSupply {
    pub fn new(taken: impl IntoIterator<Item = String>) -> NameSupply {
        NameSupply { counters: BTreeMap::new(), taken: taken.into_iter().collect() }
    }

    pub fn fresh(&mut self, prefix: &'static str) -> String {
        let n = self.counters.entry(prefix).or_default();
        let name = format!("{PREFIX}{prefix}{n}");
        *n += 1;
        self.taken.insert(name.clone());
        name
    }

    /// A C name for source binder `x`: `x` itself the first time it is
    /// usable, a fresh name otherwise.
    pub fn binder(&mut self, x: &str) -> String {
        if usable(x) && !self.taken.contains(x) {
            self.taken.insert(x.to_string());
            return x.to_string();
        }
        let n = self.counters.entry("v").or_default();
        let name = format!("{PREFIX}v{n}_{}", sanitize(x));
        *n += 1;
        self.taken.insert(name.clone());
        name
    }

    pub fn is_taken(&self, s: &str) -> bool {
        self.taken.contains(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binders() {
        let mut ns = NameSupply::new(["f".to_string()]);
        assert_eq!(ns.binder("x"), "x");
        assert_eq!(ns.binder("x"), "__bpl_v0_x");
        assert_eq!(ns.binder("p'"), "__bpl_v1_p_");
        assert_eq!(ns.binder("f"), "__bpl_v2_f");
        assert_eq!(ns.binder("double"), "__bpl_v3_double");
        assert_eq!(ns.fresh("t"), "__bpl_t0");
        assert_eq!(ns.fresh("t"), "__bpl_t1");
        assert_eq!(ns.fresh("l"), "__bpl_l0");
    }

    #[test]
    fn usability() {
        assert!(usable("w1"));
        assert!(!usable("main") && !usable("int") && !usable("_Foo") && !usable("__x") && !usable("a'"));
        assert_eq!(member("h_proto"), "h_proto");
        assert_eq!(member("static"), "__bpl_m_static");
    }
}
