use std::path::PathBuf;

use beepl_core::{Bop, Dir, EffAtom, Effect, Expr, PrimTy, Ty};
use beepl_frontend::{parse_expr, parse_program};
use beepl_typecheck::*;

fn corpus(name: &str) -> String {
    let p = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../driver/corpus").join(name);
    std::fs::read_to_string(&p).unwrap_or_else(|e| panic!("{}: {e}", p.display()))
}

fn check(src: &str) -> Result<TypedProgram, String> {
    let p = parse_program(src).map_err(|d| format!("parse: {d}"))?;
    check_program(&p).map_err(|d| d.code.to_string())
}

fn reg_ctx() -> TypingContext {
    TypingContext::from_registry(&default_helper_registry())
}

use EffAtom::*;

#[test]
fn deref_of_option_is_rejected() {
    let ctx = reg_ctx().with_var("p", Ty::option_ptr(Ty::long()));
    let err = infer_expr(&ctx, &Expr::deref(Expr::var("p"))).unwrap_err();
    assert_eq!(err.code, "DerefOfOption");
}

#[test]
fn ref_allocates() {
    let ctx = TypingContext::new();
    assert_eq!(infer_expr(&ctx, &Expr::reference(Expr::int(2))).unwrap(), (Ty::ptr(Ty::int()), Effect::of(&[Alloc])));
    assert_eq!(infer_expr(&ctx, &Expr::boolean(true)).unwrap(), (Ty::BOOL, Effect::empty()));
}

#[test]
fn bar_body_effect_order() {
    let e = parse_expr("let x : int* = ref(2) in let _ = x := !x + 1 in !x").unwrap();
    let (t, eff) = infer_expr(&TypingContext::new(), &e).unwrap();
    assert_eq!(t, Ty::int());
    assert_eq!(eff, Effect::of(&[Alloc, Read, Write, Read]));
}

#[test]
fn loop_body_may_not_touch_bounds() {
    let ctx = TypingContext::new().with_var("n", Ty::int());
    let e = Expr::for_(Expr::var("n"), Expr::int(5), Dir::Up, Expr::assign(Expr::var("n"), Expr::int(1)));
    assert_eq!(infer_expr(&ctx, &e).unwrap_err().code, "ForBodyCapturesBounds");
    let ok = parse_expr("let x : int* = ref(0) in for (1 ... 5, Up) { x := !x + 1 }").unwrap();
    assert_eq!(infer_expr(&ctx, &ok).unwrap().0, Ty::Unit);
}

#[test]
fn pointer_return_rejected() {
    assert_eq!(check("fun f() : int* { ref(2) }").unwrap_err(), "ReturnsPointer");
    let tp = check("fun f() : int { 1 }").unwrap();
    assert_eq!(tp.effect_of("f"), Some(&Effect::empty()));
}

#[test]
fn sections() {
    let xdp = Ty::option_ptr(Ty::strukt("xdp_md"));
    let skb = Ty::option_ptr(Ty::strukt("__sk_buff"));
    assert!(section_ok(&xdp, Some("xdp")));
    assert!(!section_ok(&xdp, Some("socket")));
    assert!(section_ok(&xdp, None));
    assert!(section_ok(&skb, Some("socket")));
    assert!(!section_ok(&skb, Some("xdp")));
    assert!(section_ok(&Ty::int(), None));
    assert_eq!(
        check("#section \"socket\"\nfun f(option(struct xdp_md*) c) : int { 0 }").unwrap_err(),
        "SectionMismatch"
    );
}

#[test]
fn empty_program() {
    let tp = check("").unwrap();
    assert!(tp.effects.is_empty());
}

#[test]
fn unchecked_lookup_rejected() {
    assert_eq!(check(&corpus("bprog2.bpl")).unwrap_err(), "DerefOfOption");
}

#[test]
fn checked_lookup_accepted() {
    let tp = check(&corpus("bprog3.bpl")).unwrap();
    let eff = tp.effect_of("bprog3").unwrap();
    for a in [Alloc, Io, Write, Read] {
        assert!(eff.contains(a), "{a:?} missing from {eff}");
    }
    assert!(!eff.contains(Divergence));
}

#[test]
fn corpus_accepted() {
    for (f, name) in [
        ("bprog1.bpl", "bprog1"),
        ("bprog1_mod.bpl", "main"),
        ("bprog4.bpl", "bprog4"),
        ("shift.bpl", "main"),
        ("foo.bpl", "foo"),
        ("bar.bpl", "bar"),
        ("loop.bpl", "loop"),
    ] {
        let tp = check(&corpus(f)).unwrap_or_else(|e| panic!("{f}: {e}"));
        assert!(tp.effect_of(name).is_some(), "{f}");
    }
    let tp = check(&corpus("foo.bpl")).unwrap();
    assert_eq!(tp.effect_of("foo"), Some(&Effect::of(&[Alloc, Read])));
    let tp = check(&corpus("loop.bpl")).unwrap();
    assert_eq!(tp.effect_of("loop"), Some(&Effect::of(&[Alloc, Read, Write, Read])));
}

#[test]
fn annotation_must_cover_inferred() {
    assert_eq!(check("fun f() : int, <read> { let x : int* = ref(2) in !x }").unwrap_err(), "EffectAnnotationTooSmall");
    // Annotations need not be tight, and divergence is accepted but never inferred.
    let tp = check("fun f() : int, <alloc,read,div> { let x : int* = ref(2) in !x }").unwrap();
    assert_eq!(tp.effect_of("f"), Some(&Effect::of(&[Alloc, Read])));
}

#[test]
fn calls_see_only_earlier_functions() {
    assert_eq!(check("fun f() : int { g() }\nfun g() : int { 1 }").unwrap_err(), "UnknownHelper");
    assert_eq!(check("fun f() : int { f() }").unwrap_err(), "UnknownHelper");
    let tp = check("fun g() : int, <alloc> { let x : int* = ref(1) in 1 }\nfun f() : int { g() + g() }").unwrap();
    assert_eq!(tp.effect_of("f"), Some(&Effect::of(&[Alloc, Alloc])));
}

#[test]
fn lookup_helper_effects() {
    let ctx = reg_ctx().with_var("m", map_ptr()).with_var("k", Ty::ptr(Ty::long()));
    let e = parse_expr("bpf_map_lookup_elem(m, k)").unwrap();
    let (t, eff) = infer_expr(&ctx, &e).unwrap();
    assert_eq!(t, Ty::option_ptr(Ty::long()));
    assert_eq!(eff, Effect::of(&[Read, Io]));
    let e = parse_expr("bpf_map_lookup_elem(m)").unwrap();
    assert_eq!(infer_expr(&ctx, &e).unwrap_err().code, "ArgArityMismatch");
}

#[test]
fn literal_coercion_and_constants() {
    let e = parse_expr("htons(ETH_P_IPV6)").unwrap();
    let (t, _) = infer_expr(&reg_ctx(), &e).unwrap();
    assert_eq!(t, Ty::Prim(PrimTy::U16));
    let e = parse_expr("let b : long = 1 in b + 2").unwrap();
    assert_eq!(infer_expr(&reg_ctx(), &e).unwrap().0, Ty::long());
    let e = Expr::bop(Bop::Add, Expr::int(1), Expr::long(2));
    assert_eq!(infer_expr(&reg_ctx(), &e).unwrap_err().code, "OperandTypeMismatch");
}

#[test]
fn none_needs_a_type() {
    let e = parse_expr("none").unwrap();
    assert_eq!(infer_expr(&reg_ctx(), &e).unwrap_err().code, "AmbiguousNone");
    let e = parse_expr("let p : option(long*) = none in match p with | pnone => 0 | psome q => 1").unwrap();
    assert_eq!(infer_expr(&reg_ctx(), &e).unwrap().0, Ty::int());
}

#[test]
fn option_match_must_be_exhaustive() {
    let ctx = reg_ctx().with_var("p", Ty::option_ptr(Ty::long()));
    let e = parse_expr("match p with | psome q => !q").unwrap();
    assert_eq!(infer_expr(&ctx, &e).unwrap_err().code, "NonExhaustiveOptionMatch");
}

#[test]
fn bindings_may_not_shadow_globals() {
    let src = "struct { ... } m #section \".maps\"\nfun f() : int { let m : int = 1 in m }";
    assert_eq!(check(src).unwrap_err(), "ShadowsGlobal");
}

#[test]
fn derivations_pass_audit_on_corpus() {
    for f in ["bprog3.bpl", "bprog4.bpl", "bar.bpl", "loop.bpl", "bprog1.bpl"] {
        let tp = check(&corpus(f)).unwrap();
        let ctx = tp.context();
        for fd in tp.program.functions() {
            let mut c = ctx.clone();
            c.gamma = fd.args.clone();
            let n = audit(&c, &fd.body).unwrap_or_else(|e| panic!("{f}: {e}"));
            assert!(n >= fd.body.size() / 2, "{f}: only {n} nodes");
        }
    }
}

#[test]
fn elaboration_is_idempotent_on_corpus() {
    for f in ["bprog3.bpl", "bprog4.bpl", "bprog1.bpl"] {
        let tp = check(&corpus(f)).unwrap();
        let again = check_program(&tp.program).unwrap();
        assert_eq!(again.program.decls.len(), tp.program.decls.len());
        for (a, b) in tp.program.functions().zip(again.program.functions()) {
            assert_eq!(a.body, b.body, "{f}");
        }
    }
}

#[test]
fn match_as_option_argument() {
    // Arms yield `int*`; the parameter wants `option(int*)`. The arms agree
    // with each other, and the argument is wrapped afterwards.
    let src = "fun f(option(int*) p) : int { match p with | pnone => 0 | psome q => !q }
               fun main() : int { let o : option(int*) = none in f(match o with | pnone => ref(1) | psome r => r) }";
    check(src).unwrap();
    let mixed = "fun main() : int { let o : option(int*) = none in match o with | pnone => 1 | psome r => true }";
    assert_eq!(check(mixed).unwrap_err(), "BranchTypeMismatch");
}
