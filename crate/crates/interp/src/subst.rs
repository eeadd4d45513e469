use beepl_core::{Expr, ExprKind};

/// `e[x ← v]`. Binders named `x` shadow; function bodies under `Call` are
/// closed and left alone, as are callee names.
pub fn subst(e: &Expr, x: &str, v: &Expr) -> Expr {
    let mut out = e.clone();
    subst_in_place(&mut out, x, v);
    out
}

pub fn subst_in_place(e: &mut Expr, x: &str, v: &Expr) {
    match &mut e.kind {
        ExprKind::Var(y) if y == x => {
            let sp = e.span;
            *e = v.clone();
            e.span = sp;
        }
        ExprKind::Let(y, _, a, b) => {
            subst_in_place(a, x, v);
            if y != x {
                subst_in_place(b, x, v);
            }
        }
        ExprKind::Match(s, arms) => {
            subst_in_place(s, x, v);
            for (p, body) in arms {
                if !p.binders().contains(&x) {
                    subst_in_place(body, x, v);
                }
            }
        }
        ExprKind::App(_, args) => {
            for a in args {
                subst_in_place(a, x, v);
            }
        }
        ExprKind::Call { .. } => {}
        ExprKind::Prim(_, args) => {
            for a in args {
                subst_in_place(a, x, v);
            }
        }
        ExprKind::Cond(a, b, c) | ExprKind::For(a, b, _, c) => {
            subst_in_place(a, x, v);
            subst_in_place(b, x, v);
            subst_in_place(c, x, v);
        }
        ExprKind::StructInit(_, fs) => {
            for (_, f) in fs {
                subst_in_place(f, x, v);
            }
        }
        ExprKind::Field(a, _) | ExprKind::SomeLit(a) => subst_in_place(a, x, v),
        ExprKind::Repeat { body, current, .. } => {
            subst_in_place(body, x, v);
            subst_in_place(current, x, v);
        }
        _ => {}
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use beepl_core::{fvar, Bop};

    #[test]
    fn examples() {
        assert_eq!(subst(&Expr::var("x"), "x", &Expr::int(5)), Expr::int(5));
        let shadow = Expr::let_("x", None, Expr::int(1), Expr::var("x"));
        assert_eq!(subst(&shadow, "x", &Expr::int(5)), shadow);
        let sum = Expr::bop(Bop::Add, Expr::var("x"), Expr::var("y"));
        assert_eq!(subst(&sum, "x", &Expr::int(2)), Expr::bop(Bop::Add, Expr::int(2), Expr::var("y")));
    }

    #[test]
    fn bound_expression_is_substituted() {
        let e = Expr::let_("x", None, Expr::var("x"), Expr::var("x"));
        let want = Expr::let_("x", None, Expr::int(3), Expr::var("x"));
        assert_eq!(subst(&e, "x", &Expr::int(3)), want);
        assert!(!fvar(&subst(&Expr::var("x"), "x", &Expr::int(3))).contains("x"));
    }
}
