use std::collections::BTreeSet;

use beepl_core::{fvar, Bop, Dir, EffAtom, Expr, ExprKind, Pattern, PrimOp, Ty, Uop};
use beepl_typecheck::*;
use proptest::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq)]
enum G {
    Int,
    Long,
    Bool,
    LongPtr,
    OptPtr,
    Unit,
}

fn ctx() -> TypingContext {
    TypingContext::from_registry(&default_helper_registry())
        .with_var("a", Ty::int())
        .with_var("b", Ty::long())
        .with_var("flag", Ty::BOOL)
        .with_var("q", Ty::ptr(Ty::long()))
        .with_var("p", Ty::option_ptr(Ty::long()))
}

fn leaf(g: G) -> BoxedStrategy<Expr> {
    match g {
        G::Int => prop_oneof![(-50i32..50).prop_map(Expr::int), Just(Expr::var("a"))].boxed(),
        G::Long => prop_oneof![(-50i64..50).prop_map(Expr::long), Just(Expr::var("b"))].boxed(),
        G::Bool => prop_oneof![any::<bool>().prop_map(Expr::boolean), Just(Expr::var("flag"))].boxed(),
        G::LongPtr => Just(Expr::var("q")).boxed(),
        G::OptPtr => prop_oneof![Just(Expr::var("p")), Just(Expr::none(Some(Ty::option_ptr(Ty::long()))))].boxed(),
        G::Unit => Just(Expr::unit()).boxed(),
    }
}

/// Mostly well-typed expressions of the requested type. Binders are drawn
/// from a small pool, so some loops capture their bounds and get rejected.
fn gen(g: G, depth: u32) -> BoxedStrategy<Expr> {
    if depth == 0 {
        return leaf(g);
    }
    let d = depth - 1;
    let arith = prop::sample::select(vec![Bop::Add, Bop::Sub, Bop::Mul, Bop::Div, Bop::Mod, Bop::And, Bop::Shl, Bop::Shr]);
    let name = prop::sample::select(vec!["x", "y", "z"]);
    let num = |t: G| -> BoxedStrategy<Expr> {
        let ty = if t == G::Int { Ty::int() } else { Ty::long() };
        prop_oneof![
            2 => leaf(t),
            2 => (arith.clone(), gen(t, d), gen(t, d)).prop_map(|(o, x, y)| Expr::bop(o, x, y)),
            1 => gen(t, d).prop_map(|x| Expr::uop(Uop::Neg, x)),
            1 => (gen(G::Bool, d), gen(t, d), gen(t, d)).prop_map(|(c, x, y)| Expr::cond(c, x, y)),
            1 => (name.clone(), gen(t, d), gen(t, d)).prop_map(move |(x, v, body)| Expr::let_(x, Some(ty.clone()), v, body)),
            1 => (gen(G::Unit, d), gen(t, d)).prop_map(|(u, body)| Expr::let_("_", None, u, body)),
        ]
        .boxed()
    };
    match g {
        G::Int => prop_oneof![
            4 => num(G::Int),
            1 => gen(G::Long, d).prop_map(|x| Expr::uop(Uop::Cast(beepl_core::PrimTy::INT), x)),
        ]
        .boxed(),
        G::Long => prop_oneof![
            4 => num(G::Long),
            1 => gen(G::LongPtr, d).prop_map(Expr::deref),
            1 => (gen(G::OptPtr, d), gen(G::Long, d)).prop_map(|(s, dflt)| Expr::matches(
                s,
                vec![(Pattern::Pnone, dflt), (Pattern::Psome("r".into()), Expr::deref(Expr::var("r")))]
            )),
        ]
        .boxed(),
        G::Bool => prop_oneof![
            2 => leaf(G::Bool),
            2 => (prop::sample::select(vec![Bop::Lt, Bop::Eq, Bop::Ne]), gen(G::Int, d), gen(G::Int, d))
                .prop_map(|(o, x, y)| Expr::bop(o, x, y)),
            1 => gen(G::Bool, d).prop_map(|x| Expr::uop(Uop::LogNot, x)),
        ]
        .boxed(),
        G::LongPtr => prop_oneof![2 => leaf(G::LongPtr), 1 => gen(G::Long, d).prop_map(Expr::reference)].boxed(),
        G::OptPtr => prop_oneof![
            2 => leaf(G::OptPtr),
            1 => gen(G::LongPtr, d).prop_map(Expr::some),
            1 => gen(G::LongPtr, d).prop_map(|k| Expr::app("bpf_map_lookup_elem", vec![Expr::var("m"), k])),
        ]
        .boxed(),
        G::Unit => prop_oneof![
            1 => leaf(G::Unit),
            2 => (gen(G::LongPtr, d), gen(G::Long, d)).prop_map(|(l, r)| Expr::assign(l, r)),
            2 => (gen(G::Int, d.min(1)), gen(G::Int, d.min(1)), prop::bool::ANY, gen(G::Unit, d))
                .prop_map(|(lo, hi, up, body)| Expr::for_(lo, hi, if up { Dir::Up } else { Dir::Down }, body)),
        ]
        .boxed(),
    }
}

fn any_expr() -> impl Strategy<Value = Expr> {
    prop::sample::select(vec![G::Int, G::Long, G::Bool, G::Unit, G::OptPtr])
        .prop_flat_map(|g| gen(g, 4))
}

fn full_ctx() -> TypingContext {
    let mut c = ctx();
    c.globals.insert("m".into(), map_ptr());
    c
}

fn fors(e: &Expr) -> Vec<(BTreeSet<String>, BTreeSet<String>)> {
    let mut out = Vec::new();
    e.walk(&mut |n| {
        if let ExprKind::For(lo, hi, _, body) = &n.kind {
            let mut b = fvar(lo);
            b.extend(fvar(hi));
            out.push((b, fvar(body)));
        }
    });
    out
}

/// Replaces the `k`-th dereference of `q` (mod the count) with one of `p`.
fn plant(e: &mut Expr, k: usize) -> bool {
    fn count(e: &Expr) -> usize {
        let mut n = 0;
        e.walk(&mut |x| {
            if is_deref_q(x) {
                n += 1
            }
        });
        n
    }
    fn is_deref_q(e: &Expr) -> bool {
        matches!(&e.kind, ExprKind::Prim(PrimOp::Deref, a) if matches!(&a[0].kind, ExprKind::Var(v) if v == "q"))
    }
    fn go(e: &mut Expr, k: &mut usize) -> bool {
        if is_deref_q(e) {
            if *k == 0 {
                *e = Expr::deref(Expr::var("p"));
                return true;
            }
            *k -= 1;
        }
        let kids: Vec<&mut Expr> = match &mut e.kind {
            ExprKind::Prim(_, a) => a.iter_mut().collect(),
            ExprKind::Let(_, _, a, b) => vec![a, b],
            ExprKind::Cond(a, b, c) => vec![a, b, c],
            ExprKind::App(_, a) => a.iter_mut().collect(),
            ExprKind::SomeLit(a) => vec![a],
            ExprKind::Match(s, arms) => {
                let mut v: Vec<&mut Expr> = vec![s];
                v.extend(arms.iter_mut().map(|(_, b)| b));
                v
            }
            ExprKind::For(a, b, _, c) => vec![a, b, c],
            _ => Vec::new(),
        };
        kids.into_iter().any(|c| go(c, k))
    }
    let n = count(e);
    n > 0 && go(e, &mut (k % n))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn inference_is_deterministic(e in any_expr()) {
        let c = full_ctx();
        let r1 = infer_expr(&c, &e);
        let r2 = infer_expr(&c, &e);
        prop_assert_eq!(r1.is_ok(), r2.is_ok());
        match (r1, r2) {
            (Ok(a), Ok(b)) => prop_assert_eq!(a, b),
            (Err(a), Err(b)) => prop_assert_eq!((a.code, a.span), (b.code, b.span)),
            _ => unreachable!(),
        }
    }

    #[test]
    fn no_divergence_inferred(e in any_expr()) {
        if let Ok((_, eff)) = infer_expr(&full_ctx(), &e) {
            prop_assert!(!eff.contains(EffAtom::Divergence));
        }
    }

    #[test]
    fn accepted_loops_do_not_capture_bounds(e in any_expr()) {
        if infer_expr(&full_ctx(), &e).is_ok() {
            for (bounds, body) in fors(&e) {
                prop_assert!(bounds.is_disjoint(&body), "{:?} vs {:?}", bounds, body);
            }
        }
    }

    #[test]
    fn capture_is_reported(e in any_expr()) {
        // Loops whose body mentions a bound variable are never accepted.
        if fors(&e).iter().any(|(b, body)| !b.is_disjoint(body)) {
            prop_assert!(infer_expr(&full_ctx(), &e).is_err());
        }
    }

    #[test]
    fn deref_of_option_always_rejected(mut e in gen(G::Long, 4), k in 0usize..8) {
        let c = full_ctx();
        // `+ !q` guarantees at least one site to plant into.
        e = Expr::bop(Bop::Add, e, Expr::deref(Expr::var("q")));
        let before = infer_expr(&c, &e);
        prop_assert!(plant(&mut e, k));
        let after = infer_expr(&c, &e);
        prop_assert!(after.is_err());
        if before.is_ok() {
            prop_assert_eq!(after.unwrap_err().code, "DerefOfOption");
        }
    }

    #[test]
    fn derivations_pass_rule_audit(e in any_expr()) {
        let c = full_ctx();
        if infer_expr(&c, &e).is_ok() {
            let n = audit(&c, &e);
            prop_assert!(n.is_ok(), "{}", n.unwrap_err());
        }
    }

    #[test]
    fn elaboration_preserves_judgment(e in any_expr()) {
        let c = full_ctx();
        if let Ok(j) = infer_expr(&c, &e) {
            let mut el = e.clone();
            let j2 = elaborate_expr(&c, &mut el, None).unwrap();
            prop_assert_eq!(&j, &j2);
            prop_assert_eq!(infer_expr(&c, &el).unwrap(), j);
            let mut el2 = el.clone();
            elaborate_expr(&c, &mut el2, None).unwrap();
            prop_assert_eq!(el2, el);
        }
    }
}

#[test]
fn generator_mostly_accepted() {
    use proptest::strategy::ValueTree;
    use proptest::test_runner::TestRunner;
    let mut runner = TestRunner::deterministic();
    let s = any_expr();
    let c = full_ctx();
    let ok = (0..400)
        .filter(|_| infer_expr(&c, &s.new_tree(&mut runner).unwrap().current()).is_ok())
        .count();
    assert!(ok > 100, "only {ok}/400 accepted");
}
