use beepl_core::{Decl, ExprKind};
use beepl_frontend::{parse_program, print_program};
use beepl_typecheck::check_program;
use beeplc::{generate_well_typed, shrink, Features, GenConfig};
use proptest::prelude::*;

fn cfg(seed: u64, max_depth: u32) -> GenConfig {
    GenConfig { seed, max_depth, ..GenConfig::default() }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn generated_programs_check(seed in any::<u64>(), depth in 1u32..=8) {
        let p = generate_well_typed(&cfg(seed, depth)).unwrap();
        prop_assert!(check_program(&p).is_ok());
    }

    #[test]
    fn printing_round_trips(seed in any::<u64>(), depth in 1u32..=8) {
        let p = generate_well_typed(&cfg(seed, depth)).unwrap();
        let text = print_program(&p).unwrap();
        let back = parse_program(&text).unwrap();
        prop_assert_eq!(print_program(&back).unwrap(), text);
        prop_assert!(check_program(&back).is_ok());
    }

    #[test]
    fn feature_free_programs_check(seed in any::<u64>()) {
        let c = GenConfig { features: Features::NONE, ..cfg(seed, 8) };
        let p = generate_well_typed(&c).unwrap();
        prop_assert!(check_program(&p).is_ok());
        let text = print_program(&p).unwrap();
        prop_assert!(!text.contains("for") && !text.contains("match"), "{}", text);
    }
}

#[test]
fn depth_one_main_is_a_leaf() {
    let p = generate_well_typed(&cfg(0, 1)).unwrap();
    let main = p.functions().find(|f| f.name == "main").expect("main");
    assert!(main.body.children().is_empty(), "{:?}", main.body.kind);
    assert!(matches!(main.body.kind, ExprKind::ConstInt(_) | ExprKind::Var(_) | ExprKind::ConstNum(_)));
}

#[test]
fn same_seed_same_text() {
    for seed in [0, 1, 42, u64::MAX] {
        let a = print_program(&generate_well_typed(&cfg(seed, 8)).unwrap()).unwrap();
        let b = print_program(&generate_well_typed(&cfg(seed, 8)).unwrap()).unwrap();
        assert_eq!(a, b);
    }
}

#[test]
fn seeds_differ() {
    let texts: std::collections::BTreeSet<String> =
        (0..20).map(|s| print_program(&generate_well_typed(&cfg(s, 8)).unwrap()).unwrap()).collect();
    assert!(texts.len() >= 18, "only {} distinct programs", texts.len());
}

#[test]
fn main_is_last() {
    for seed in 0..50 {
        let p = generate_well_typed(&cfg(seed, 6)).unwrap();
        assert!(matches!(p.decls.last(), Some(Decl::Fun(f)) if f.name == "main"));
    }
}

#[test]
fn shrinking_keeps_the_failure() {
    // The property: the program still mentions a division.
    let divides = |t: &beepl_typecheck::TypedProgram| print_program(&t.program).unwrap().contains(" / ");
    let mut shrunk_some = 0;
    for seed in 0..60 {
        let p = generate_well_typed(&cfg(seed, 8)).unwrap();
        let tp = check_program(&p).unwrap();
        if !divides(&tp) {
            continue;
        }
        let s = shrink(&p, &mut |t| divides(t), 200);
        let small = check_program(&s.program).expect("shrunk programs check");
        assert!(divides(&small));
        let (before, after) = (print_program(&p).unwrap().len(), print_program(&s.program).unwrap().len());
        assert!(after <= before);
        shrunk_some += (after < before) as usize;
    }
    assert!(shrunk_some > 0);
}
