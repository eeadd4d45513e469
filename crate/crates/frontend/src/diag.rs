use std::fmt;

use beepl_core::Span;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Severity {
    Error,
    Warning,
}

impl Severity {
    pub fn as_str(self) -> &'static str {
        match self {
            Severity::Error => "error",
            Severity::Warning => "warning",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub severity: Severity,
    pub code: String,
    pub message: String,
    pub span: Span,
    pub note: Option<String>,
    /// Typing or evaluation rule that failed, when one applies.
    pub rule: Option<String>,
}

impl Diagnostic {
    pub fn error(code: &str, message: impl Into<String>, span: Span) -> Diagnostic {
        Diagnostic {
            severity: Severity::Error,
            code: code.to_string(),
            message: message.into(),
            span,
            note: None,
            rule: None,
        }
    }

    pub fn with_rule(mut self, rule: &str) -> Diagnostic {
        self.rule = Some(rule.to_string());
        self
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Diagnostic {
        self.note = Some(note.into());
        self
    }

    /// `file:line:col: error[CODE]: message`
    pub fn render(&self, file: &str) -> String {
        let mut s = format!(
            "{}:{}:{}: {}[{}]: {}",
            file,
            self.span.line,
            self.span.col,
            self.severity.as_str(),
            self.code,
            self.message
        );
        if let Some(n) = &self.note {
            s.push_str("\n  note: ");
            s.push_str(n);
        }
        s
    }

    pub fn to_json_value(&self) -> serde_json::Value {
        let mut v = serde_json::json!({
            "severity": self.severity.as_str(),
            "code": self.code,
            "message": self.message,
            "line": self.span.line,
            "col": self.span.col,
        });
        if let Some(r) = &self.rule {
            v["rule"] = serde_json::Value::String(r.clone());
        }
        if let Some(n) = &self.note {
            v["note"] = serde_json::Value::String(n.clone());
        }
        v
    }
}

pub fn to_json(diags: &[Diagnostic]) -> String {
    let arr: Vec<_> = diags.iter().map(Diagnostic::to_json_value).collect();
    serde_json::to_string_pretty(&serde_json::Value::Array(arr)).expect("json")
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}[{}]: {}", self.span.line, self.span.col, self.severity.as_str(), self.code, self.message)
    }
}

impl std::error::Error for Diagnostic {}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn render_format() {
        let d = Diagnostic::error("DerefOfOption", "cannot dereference `p`", Span { start: 4, end: 6, line: 3, col: 9 })
            .with_rule("TDEREF");
        assert_eq!(d.render("a.bpl"), "a.bpl:3:9: error[DerefOfOption]: cannot dereference `p`");
        let j: serde_json::Value = serde_json::from_str(&to_json(&[d])).unwrap();
        assert_eq!(j[0]["code"], "DerefOfOption");
        assert_eq!(j[0]["line"], 3);
        assert_eq!(j[0]["col"], 9);
        assert_eq!(j[0]["rule"], "TDEREF");
        assert_eq!(j[0]["severity"], "error");
    }
}
