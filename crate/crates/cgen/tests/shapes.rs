mod common;

use beepl_cgen::audit::{deref_audit, guard_audit};
use beepl_cgen::{emit_program, emit_program_with, CgenError, EmitOptions, Mode};
use common::*;

fn squash(s: &str) -> String {
    s.chars().filter(|c| !c.is_whitespace()).collect::<String>().replace("__bpl_b0.", "")
}

fn function_text(src: &str, name: &str) -> String {
    let unit = emit_program(&checked(src)).unwrap();
    unit.functions.iter().find(|f| f.name == name).unwrap().render(true)
}

#[test]
fn constant_function() {
    let text = function_text("fun f() : int { 1 }", "f");
    assert_eq!(text, "int f()\n{\n    return 1;\n}\n");
}

#[test]
fn lookup_result_tested_before_use() {
    let text = function_text(&corpus_src("bprog3.bpl"), "bprog3");
    let guard = text.find("if (p == (long *)0)").expect("null test");
    let deref = text.find("(*__bpl_v0_p_)").expect("dereference");
    assert!(guard < deref, "{text}");
    assert!(text.starts_with("SEC(\"xdp\")\nint bprog3(struct xdp_md *ctx)"));
}

#[test]
fn remainder_guarded() {
    let text = function_text(&corpus_src("bprog1.bpl"), "bprog1");
    assert!(text.contains("(w0 == 0) ? 0 : "), "{text}");
    assert!(text.contains("(w1 == INT_MIN) && (w0 == -1)"), "{text}");
    assert!(text.contains("if (r0 != 0L)"), "{text}");
}

#[test]
fn bounds_check_precedes_header_read() {
    let text = function_text(&corpus_src("bprog4.bpl"), "bprog4");
    let flat = squash(&text);
    let check = flat.find("if(start+sizeof(structethhdr)>end)").expect("bounds check");
    let read = flat.find("->h_proto").expect("field read");
    assert!(check < read, "{text}");
    assert!(text.contains("__bpl_xdp_data(c)"), "{text}");
}

#[test]
fn shift_guarded() {
    let text = function_text(&corpus_src("shift.bpl"), "__bpl_f_main");
    assert!(text.contains("(unsigned long)r >= 64) ? 0 : (r >> r)"), "{text}");
}

#[test]
fn ebpf_unit_layout() {
    let unit = emit_program(&corpus("bprog3.bpl")).unwrap();
    assert!(unit.prelude.contains("#define SEC(name)"));
    assert!(unit.decls.iter().any(|d| d.contains("struct bpf_map counter_table SEC(\".maps\") = { 0 };")));
    assert!(unit.decls.iter().any(|d| d.contains("LICENSE[4] SEC(\"license\") = \"GPL\";")));
    assert!(unit.decls.iter().any(|d| d.contains("(void *)1;")));
    assert!(!unit.text.contains("int main("));
    assert!(unit.text.ends_with(&unit.functions.last().unwrap().render(true)));
}

#[test]
fn host_unit_has_main() {
    let opts = EmitOptions { mode: Mode::Host, ..Default::default() };
    let unit = emit_program_with(&corpus("bprog3.bpl"), &opts).unwrap();
    assert!(unit.text.contains("int main(void)"));
    assert!(unit.text.contains("__bpl_r = bprog3(&__bpl_a0);"));
    assert!(!unit.text.contains("SEC("));
}

#[test]
fn source_names_are_kept_or_renamed() {
    let unit = emit_program(&checked("fun main() : int { let double = 3 in let x = 1 in let x = x + double in x }")).unwrap();
    let f = &unit.functions[0];
    assert_eq!(f.name, "__bpl_f_main");
    let text = f.render(false);
    assert!(text.contains("__bpl_v0_double = 3;"), "{text}");
    assert!(text.contains("x = 1;") && text.contains("__bpl_v1_x = (int)((unsigned int)x + (unsigned int)__bpl_v0_double);"), "{text}");
}

#[test]
fn output_is_deterministic() {
    for name in ["bprog1.bpl", "bprog3.bpl", "bprog4.bpl", "loop.bpl"] {
        let a = emit_program(&corpus(name)).unwrap();
        let b = emit_program(&corpus(name)).unwrap();
        assert_eq!(a, b);
    }
}

#[test]
fn corpus_passes_audits() {
    for name in ["bar.bpl", "bprog1.bpl", "bprog1_mod.bpl", "bprog3.bpl", "bprog4.bpl", "foo.bpl", "loop.bpl", "shift.bpl"] {
        for mode in [Mode::Ebpf, Mode::Host] {
            let unit = emit_program_with(&corpus(name), &EmitOptions { mode, ..Default::default() }).unwrap();
            for f in &unit.functions {
                guard_audit(&f.name, &f.render(false)).unwrap();
                deref_audit(f).unwrap();
            }
        }
    }
}

#[test]
fn audit_rejects_tampered_output() {
    let unit = emit_program(&corpus("bprog3.bpl")).unwrap();
    let mut f = unit.functions[0].clone();
    // Drop the null test, keeping only the branch that dereferences.
    let pos = f.body.iter().position(|s| matches!(s, beepl_cgen::CStmt::If(..))).unwrap();
    let beepl_cgen::CStmt::If(_, _, on_some) = f.body.remove(pos) else { unreachable!() };
    f.body.extend(on_some);
    assert!(deref_audit(&f).unwrap_err().contains("cannot be null"));

    let text = unit.functions[0].render(false).replace("return -1;", "return 7 / __bpl_t1;");
    assert!(guard_audit("bprog3", &text).is_err());
}

#[test]
fn missing_entry_reported() {
    let opts = EmitOptions { mode: Mode::Host, entry: Some("nope".into()), ..Default::default() };
    assert_eq!(emit_program_with(&corpus("foo.bpl"), &opts).unwrap_err(), CgenError::NoEntry("nope".into()));
}

#[test]
fn loops_stop_at_the_bound() {
    let text = function_text(&corpus_src("loop.bpl"), "loop");
    assert!(text.contains("if (__bpl_l0 <= __bpl_h0) {"), "{text}");
    assert!(text.contains("for (__bpl_i0 = __bpl_l0; ; __bpl_i0++) {"), "{text}");
    assert!(text.contains("if (__bpl_i0 == __bpl_h0) break;"), "{text}");
}
