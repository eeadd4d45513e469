use std::path::PathBuf;

use beepl_core::{Bop, BytesView, Composite, Expr, IntVal, Pattern, PrimTy, Ty, Value};
use beepl_frontend::{parse_expr, parse_program};
use beepl_interp::check::{run_checked, CheckOptions};
use beepl_interp::*;
use beepl_typecheck::{check_program, default_helper_registry, TypedProgram, TypingContext};

fn corpus(name: &str) -> TypedProgram {
    let p = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../driver/corpus").join(name);
    let src = std::fs::read_to_string(&p).unwrap();
    check_program(&parse_program(&src).unwrap()).unwrap()
}

fn ctx() -> TypingContext {
    TypingContext::from_registry(&default_helper_registry())
}

fn eval_src(src: &str) -> (Value, u64) {
    let c = ctx();
    let mut e = parse_expr(src).unwrap();
    beepl_typecheck::elaborate_expr(&c, &mut e, None).unwrap();
    let mut s = State::from_context(&c);
    eval_multi(&mut s, &mut ExternalWorld::default(), e, DEFAULT_FUEL).unwrap()
}

#[test]
fn deref_of_stored_value() {
    let mut s = State::from_context(&ctx());
    let b = s.alloc_var(&Ty::INT, Some(Value::int(7)));
    let out = step(&mut s, &mut ExternalWorld::default(), &Expr::deref(Expr::loc(b, 0)));
    assert_eq!(out, StepOutcome::Stepped { expr: Expr::int(7), rule: "DREFV" });
}

#[test]
fn ref_allocates_fresh_block() {
    let mut s = State::from_context(&ctx());
    let before: Vec<_> = s.theta.blocks.keys().copied().collect();
    let StepOutcome::Stepped { expr, rule } = step(&mut s, &mut ExternalWorld::default(), &Expr::reference(Expr::int(2)))
    else {
        panic!()
    };
    assert_eq!(rule, "REFV");
    let beepl_core::ExprKind::Loc(b, 0) = expr.kind else { panic!("{expr:?}") };
    assert!(before.iter().all(|old| *old < b));
    assert_eq!(s.sigma[&b], Ty::ptr(Ty::INT));
    assert!(is_well_formed(&[], &s));
}

#[test]
fn match_on_none_takes_first_arm() {
    let mut s = State::from_context(&ctx());
    let e = Expr::matches(
        Expr::none(Some(Ty::option_ptr(Ty::LONG))),
        vec![(Pattern::Pnone, Expr::int(-1)), (Pattern::Psome("p'".into()), Expr::int(0))],
    );
    assert_eq!(step(&mut s, &mut ExternalWorld::default(), &e), StepOutcome::Stepped { expr: Expr::int(-1), rule: "MNONE" });
}

#[test]
fn loop_adds_five() {
    // Oracle: 2 plus one per iteration of the inclusive range 1..=5.
    let expected = 2 + (1..=5).count() as i32;
    let (v, _) = eval_src("let x : int* = ref(2) in let _ = for(1 ... 5, Up) {x := !x + 1} in !x");
    assert_eq!(v, Value::int(expected));
    assert_eq!(eval_src("1"), (Value::int(1), 0));
}

#[test]
fn for_step_accounting() {
    // One FORV step plus the body's steps per iteration. The body
    // `x := !x + 1` takes DREFV, BOPV and MASSGNV.
    let (_, with_loop) = eval_src("let x : int* = ref(2) in let _ = for(1 ... 4, Up) {x := !x + 1} in !x");
    let (_, empty_loop) = eval_src("let x : int* = ref(2) in let _ = for(5 ... 4, Up) {x := !x + 1} in !x");
    assert_eq!(with_loop - empty_loop, 4 * 3);
}

#[test]
fn truncated_divisor() {
    let tp = corpus("bprog1_mod.bpl");
    let out = run_function(&tp, "main", &mut ExternalWorld::default(), DEFAULT_FUEL, Config::default()).unwrap();
    assert_eq!(out.value, Value::int(0));
    let tp = corpus("bprog1.bpl");
    let out = run_function(&tp, "bprog1", &mut ExternalWorld::default(), DEFAULT_FUEL, Config::default()).unwrap();
    assert_eq!(out.value, Value::int(2));
}

#[test]
fn oversized_shift_is_zero() {
    let tp = corpus("shift.bpl");
    let out = run_function(&tp, "main", &mut ExternalWorld::default(), DEFAULT_FUEL, Config::default()).unwrap();
    assert_eq!(out.value, Value::long(0));
    let unguarded = Config { guard_unsafe: false, ..Config::default() };
    let err = run_function(&tp, "main", &mut ExternalWorld::default(), DEFAULT_FUEL, unguarded).unwrap_err();
    assert!(matches!(err, EvalError::Stuck { fault: Fault::Undef(_), .. }), "{err}");
}

#[test]
fn section_three_functions() {
    for (f, name) in [("foo.bpl", "foo"), ("bar.bpl", "bar"), ("loop.bpl", "loop")] {
        let tp = corpus(f);
        let want = match name {
            "loop" => 7,
            _ => 3,
        };
        let r = run_checked(&tp, name, &mut ExternalWorld::default(), &CheckOptions::default()).unwrap();
        assert_eq!(r.value, Value::int(want), "{f}");
        assert!(r.preservation_checks > 0 && r.wf_checks == r.steps);
    }
}

fn ipv6_frame() -> Vec<u8> {
    let mut f = vec![0x11; 12];
    f.extend([0x86, 0xDD]);
    f.extend([0u8; 40]);
    f
}

#[test]
fn ipv6_dropped() {
    let tp = corpus("bprog4.bpl");
    let run = |pkt: Vec<u8>| {
        let mut w = ExternalWorld::default().with_packet(pkt);
        run_checked(&tp, "bprog4", &mut w, &CheckOptions::default()).unwrap()
    };
    let drop = run(ipv6_frame());
    assert_eq!(drop.value, Value::int(1));
    assert_eq!(drop.rules.get("MBYTES"), Some(&1));
    let mut v4 = ipv6_frame();
    v4[12..14].copy_from_slice(&[0x08, 0x00]);
    assert_eq!(run(v4).value, Value::int(2));
    let short = run(vec![0; 10]);
    assert_eq!(short.value, Value::int(1));
    assert_eq!(short.rules.get("MBYTESF"), Some(&1));
}

#[test]
fn map_lookup_hit_and_miss() {
    let tp = corpus("bprog3.bpl");
    let miss = run_checked(&tp, "bprog3", &mut ExternalWorld::default(), &CheckOptions::default()).unwrap();
    assert_eq!(miss.value, Value::int(-1));
    // The key is the low 32 bits of the uid/gid pair.
    let key = (DEFAULT_UID_GID & 0xFFFF_FFFF) as i64;
    let mut w = ExternalWorld::default().with_map_entry("counter_table", key, 41);
    let hit = run_checked(&tp, "bprog3", &mut w, &CheckOptions::default()).unwrap();
    assert_eq!(hit.value, Value::int(41));
    let helpers: Vec<&str> = w.io_log.iter().map(|e| e.helper.as_str()).collect();
    assert_eq!(helpers, vec!["bpf_get_current_uid_gid", "bpf_map_lookup_elem"]);
}

#[test]
fn evaluation_is_deterministic() {
    let tp = corpus("bprog4.bpl");
    let go = || {
        let mut w = ExternalWorld::default().with_packet(ipv6_frame());
        let o = run_function(&tp, "bprog4", &mut w, DEFAULT_FUEL, Config { trace: true, ..Config::default() }).unwrap();
        (o.value, o.steps, o.state.trace, w)
    };
    let a = go();
    assert_eq!(a, go());
    assert_eq!(a.2.len() as u64, a.1);
}

#[test]
fn well_formedness_detects_freed_block() {
    let tp = corpus("bprog3.bpl");
    let mut s = State::new(&tp);
    assert!(is_well_formed(&[], &s));
    let typed = *s.sigma.keys().next().unwrap();
    s.theta.free(typed);
    let err = well_formed(&[], &s.sigma, &s).unwrap_err();
    assert_eq!(err.clause, 2);
}

#[test]
fn well_formedness_needs_bound_gamma() {
    let mut s = State::from_context(&ctx());
    let g = vec![("x".to_string(), Ty::INT)];
    assert_eq!(well_formed(&g, &s.sigma, &s).unwrap_err().clause, 1);
    s.bind_root("x", &Ty::INT, Value::int(3));
    assert!(is_well_formed(&g, &s));
    let (v, n) = eval_multi(&mut s, &mut ExternalWorld::default(), Expr::bop(Bop::Add, Expr::var("x"), Expr::int(1)), 10)
        .unwrap();
    assert_eq!((v, n), (Value::int(4), 2));
}

#[test]
fn extraction_bounds_exhaustive() {
    let mut pi: std::collections::BTreeMap<_, _> =
        default_helper_registry().composites.into_iter().map(|c| (c.name.clone(), c)).collect();
    pi.insert("pair".into(), Composite { name: "pair".into(), fields: vec![("a".into(), Ty::Prim(PrimTy::U8)), ("b".into(), Ty::INT)] });
    let targets = [Ty::strukt("ethhdr"), Ty::strukt("pair"), Ty::Prim(PrimTy::U8), Ty::LONG, Ty::Prim(PrimTy::U16)];
    for t in &targets {
        let mut s = State::bare(pi.clone(), Default::default());
        let need = s.size_of(t);
        for len in 0..=2 * need {
            let b = s.theta.alloc_raw((0..len as u8).collect(), Perm::ReadOnly);
            let r = extract(&mut s, &BytesView { block: b, off: 0, len }, t);
            assert_eq!(r.is_ok(), len >= need, "{t} over {len} bytes");
        }
    }
}

#[test]
fn fuel_exhaustion_reported() {
    let c = ctx();
    let mut e = parse_expr("let x : long* = ref(0) in for(1 ... 1000000, Up) { x := !x + 1 }").unwrap();
    beepl_typecheck::elaborate_expr(&c, &mut e, None).unwrap();
    let mut s = State::from_context(&c);
    let err = eval_multi(&mut s, &mut ExternalWorld::default(), e, 1000).unwrap_err();
    assert_eq!(err, EvalError::FuelExhausted { steps: 1000 });
}

#[test]
fn htons_swaps() {
    let c = ctx();
    let mut e = parse_expr("htons(ETH_P_IPV6)").unwrap();
    beepl_typecheck::elaborate_expr(&c, &mut e, None).unwrap();
    let mut s = State::from_context(&c);
    let (v, _) = eval_multi(&mut s, &mut ExternalWorld::default(), e, 10).unwrap();
    assert_eq!(v, Value::Int(IntVal::wrap(PrimTy::U16, 0xDD86)));
}

#[test]
fn packet_hex_roundtrip() {
    let text = "# ethernet\n1111 1111 1111 2222 2222 2222\n86dd\n";
    let p = decode_packet_hex(text).unwrap();
    assert_eq!(p.len(), 14);
    assert_eq!(&p[12..], &[0x86, 0xDD]);
}
