//! Regression checks over the vendored CVE corpus.

use std::time::Instant;

use beepl_cgen::emit_program;
use beepl_core::{IntVal, PrimTy, Value};
use beepl_frontend::parse_program;
use beepl_interp::check::{run_checked, CheckOptions};
use beepl_interp::{default_entry, ExternalWorld};
use beepl_typecheck::{check_program, TypedProgram};

use crate::report::{Outcome, Reproducer, RunReport, SuiteReport};

pub const BPROG1: &str = include_str!("../corpus/bprog1.bpl");
pub const BPROG1_MOD: &str = include_str!("../corpus/bprog1_mod.bpl");
pub const BPROG2: &str = include_str!("../corpus/bprog2.bpl");
pub const BPROG3: &str = include_str!("../corpus/bprog3.bpl");
pub const BPROG4: &str = include_str!("../corpus/bprog4.bpl");
pub const SHIFT: &str = include_str!("../corpus/shift.bpl");
pub const LOOP: &str = include_str!("../corpus/loop.bpl");
pub const FOO: &str = include_str!("../corpus/foo.bpl");
pub const BAR: &str = include_str!("../corpus/bar.bpl");

/// Every corpus file by name.
pub const CORPUS: &[(&str, &str)] = &[
    ("bar.bpl", BAR),
    ("bprog1.bpl", BPROG1),
    ("bprog1_mod.bpl", BPROG1_MOD),
    ("bprog2.bpl", BPROG2),
    ("bprog3.bpl", BPROG3),
    ("bprog4.bpl", BPROG4),
    ("foo.bpl", FOO),
    ("loop.bpl", LOOP),
    ("shift.bpl", SHIFT),
];

/// Removes whitespace and the prefixes the code generator adds to renamed
/// locals (`__bpl_v3_x` becomes `x`) and bytes views (`__bpl_b0.start`
/// becomes `start`).
pub fn normalize_c(text: &str) -> String {
    let squashed: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    let mut out = String::with_capacity(squashed.len());
    let mut rest = squashed.as_str();
    while let Some(pos) = rest.find("__bpl_") {
        out.push_str(&rest[..pos]);
        let tail = &rest[pos + 6..];
        let b = tail.as_bytes();
        let digits = b.iter().skip(1).take_while(|c| c.is_ascii_digit()).count();
        let prefix = match (b.first(), b.get(1 + digits)) {
            (Some(b'v'), Some(b'_')) | (Some(b'b'), Some(b'.')) => digits > 0,
            _ => false,
        };
        if prefix {
            rest = &tail[2 + digits..];
        } else {
            out.push_str("__bpl_");
            rest = tail;
        }
    }
    out.push_str(rest);
    out
}

fn checked(src: &str) -> Result<TypedProgram, String> {
    let p = parse_program(src).map_err(|e| e.to_string())?;
    check_program(&p).map_err(|d| d.to_string())
}

/// Runs the entry under every monitor and returns its value.
fn eval(tp: &TypedProgram, w: ExternalWorld) -> Result<Value, String> {
    let entry = default_entry(&tp.program).ok_or("no entry")?;
    run_checked(tp, &entry, &mut w.clone(), &CheckOptions::default()).map(|r| r.value).map_err(|v| v.to_string())
}

fn emitted(tp: &TypedProgram) -> Result<String, String> {
    emit_program(tp).map(|u| normalize_c(&u.text)).map_err(|e| e.to_string())
}

fn expect_value(got: Value, want: Value) -> Result<String, String> {
    if got == want {
        Ok(format!("evaluates to {got}"))
    } else {
        Err(format!("evaluates to {got}, expected {want}"))
    }
}

fn int(v: i32) -> Value {
    Value::Int(IntVal::wrap(PrimTy::INT, v as i128))
}

fn ipv6_frame() -> Vec<u8> {
    let mut p = vec![0u8; 14];
    p[12..14].copy_from_slice(&[0x86, 0xDD]);
    p
}

fn unchecked_deref_rejected() -> Result<Outcome, String> {
    let p = parse_program(BPROG2).map_err(|e| e.to_string())?;
    match check_program(&p) {
        Err(d) if d.code == "DerefOfOption" => Ok(Outcome::Diagnostic(d.to_string())),
        Err(d) => Err(format!("rejected with {} instead of DerefOfOption", d.code)),
        Ok(_) => Err("accepted".into()),
    }
}

fn lookup_guarded() -> Result<Outcome, String> {
    let tp = checked(BPROG3)?;
    let c = emitted(&tp)?;
    let guard = ["p==(long*)0", "p==NULL"].iter().filter_map(|g| c.find(g)).min().ok_or("no NULL guard in the emitted C")?;
    let deref = c.find("(*p_)").or_else(|| c.find("(*p)")).ok_or("no dereference in the emitted C")?;
    if guard > deref {
        return Err("the NULL guard follows the dereference".into());
    }
    let uid = (beepl_interp::DEFAULT_UID_GID & 0xFFFF_FFFF) as i64;
    expect_value(eval(&tp, ExternalWorld::default())?, int(-1))?;
    expect_value(eval(&tp, ExternalWorld::default().with_map_entry("counter_table", uid, 41))?, int(41))?;
    Ok(Outcome::Value("NULL guard precedes the dereference".into()))
}

fn remainder_guarded() -> Result<Outcome, String> {
    let tp = checked(BPROG1)?;
    expect_value(eval(&tp, ExternalWorld::default())?, int(2))?;
    let c = emitted(&tp)?;
    if !c.contains("(w0==0)?0:") {
        return Err("no zero-divisor guard in the emitted C".into());
    }
    let m = checked(BPROG1_MOD)?;
    expect_value(eval(&m, ExternalWorld::default())?, int(0))?;
    Ok(Outcome::Value("w1 % w0 evaluates to 0; zero-divisor guard present".into()))
}

fn header_bounds_checked() -> Result<Outcome, String> {
    let tp = checked(BPROG4)?;
    let c = emitted(&tp)?;
    let check = c.find("start+sizeof(structethhdr)>end").ok_or("no bounds check in the emitted C")?;
    let access = c.find("->h_proto").ok_or("no header field access in the emitted C")?;
    if check > access {
        return Err("the bounds check follows the field access".into());
    }
    expect_value(eval(&tp, ExternalWorld::default().with_packet(ipv6_frame()))?, int(1))?;
    expect_value(eval(&tp, ExternalWorld::default().with_packet(vec![0x86]))?, int(1))?;
    let mut ipv4 = ipv6_frame();
    ipv4[12..14].copy_from_slice(&[0x08, 0x00]);
    expect_value(eval(&tp, ExternalWorld::default().with_packet(ipv4))?, int(2))?;
    Ok(Outcome::Value("bounds check precedes the header read".into()))
}

fn oversized_shift_zero() -> Result<Outcome, String> {
    let tp = checked(SHIFT)?;
    let v = eval(&tp, ExternalWorld::default())?;
    expect_value(v, Value::Int(IntVal::wrap(PrimTy::LONG, 0))).map(Outcome::Value)
}

/// The corpus checks, one report each.
pub fn run_cve_corpus() -> SuiteReport {
    type Check = fn() -> Result<Outcome, String>;
    let checks: [(&str, &str, Check); 5] = [
        ("cve/bprog2-rejected", BPROG2, unchecked_deref_rejected),
        ("cve/bprog3-null-guard", BPROG3, lookup_guarded),
        ("cve/bprog1-remainder", BPROG1, remainder_guarded),
        ("cve/bprog4-bounds", BPROG4, header_bounds_checked),
        ("cve/shift", SHIFT, oversized_shift_zero),
    ];
    let start = Instant::now();
    let runs = checks
        .iter()
        .map(|(id, src, check)| {
            let t = Instant::now();
            let outcome = check().unwrap_or_else(|detail| Outcome::Violation {
                property: "cve".into(),
                detail,
                reproducer: Box::new(Reproducer { seed: 0, program: src.to_string(), packet_hex: String::new() }),
            });
            RunReport { elapsed: t.elapsed(), ..RunReport::new(*id, 0, outcome) }
        })
        .collect();
    SuiteReport { runs, elapsed: start.elapsed(), ..SuiteReport::new("cve", 0) }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalization() {
        assert_eq!(normalize_c("if (__bpl_v0_p_ == (long *)0)"), "if(p_==(long*)0)");
        assert_eq!(normalize_c("__bpl_b12.start + x"), "start+x");
        assert_eq!(normalize_c("__bpl_f_main() + __bpl_x"), "__bpl_f_main()+__bpl_x");
        assert_eq!(normalize_c("a __bpl_"), "a__bpl_");
    }
}
