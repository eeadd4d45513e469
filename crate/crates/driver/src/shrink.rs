//! Type-preserving shrinking of failing programs.
//!
//! A candidate replaces one subexpression with a smaller expression of the
//! same type (a same-typed child, or the smallest literal of the type), or
//! drops a declaration nothing uses. It is kept when the whole program still
//! checks and the caller's predicate still fails.

use beepl_core::{Decl, Expr, ExprKind, IntVal, Pattern, PrimTy, Program, Ty};
use beepl_typecheck::{check_program, infer_expr, TypedProgram, TypingContext};

use crate::gen::lit_expr;

#[derive(Debug, Clone)]
pub struct Shrunk {
    pub program: Program,
    /// Candidates accepted.
    pub accepted: usize,
    /// Predicate evaluations spent.
    pub tries: usize,
}

/// Shrinks `p` while `fails` keeps returning true, within `budget`
/// predicate evaluations. `p` itself must check; otherwise it is returned
/// unchanged.
pub fn shrink(p: &Program, fails: &mut dyn FnMut(&TypedProgram) -> bool, budget: usize) -> Shrunk {
    let Ok(tp) = check_program(p) else {
        return Shrunk { program: p.clone(), accepted: 0, tries: 0 };
    };
    let mut cur = tp.program.clone();
    let mut cur_tp = tp;
    let (mut accepted, mut tries) = (0, 0);
    'outer: while tries < budget {
        for cand in candidates(&cur_tp) {
            if tries >= budget {
                break 'outer;
            }
            let Ok(ctp) = check_program(&cand) else { continue };
            tries += 1;
            if fails(&ctp) {
                cur = ctp.program.clone();
                cur_tp = ctp;
                accepted += 1;
                continue 'outer;
            }
        }
        break;
    }
    Shrunk { program: cur, accepted, tries }
}

/// Path of child indices from a function body, as in [`Expr::children`].
type Path = Vec<usize>;

struct Site {
    decl: usize,
    path: Path,
    ty: Ty,
}

fn candidates(tp: &TypedProgram) -> Vec<Program> {
    let p = &tp.program;
    let mut out = Vec::new();
    let last = p.decls.iter().rposition(|d| matches!(d, Decl::Fun(_)));
    for i in 0..p.decls.len() {
        if Some(i) != last {
            let mut q = p.clone();
            q.decls.remove(i);
            out.push(q);
        }
    }
    for k in 0..p.composites.len() {
        let mut q = p.clone();
        q.composites.remove(k);
        out.push(q);
    }
    let sites = sites(tp);
    for s in &sites {
        let Decl::Fun(f) = &p.decls[s.decl] else { continue };
        let node = at(&f.body, &s.path);
        let mut repl = Vec::new();
        if let Some(z) = smallest(&s.ty) {
            if *node != z && node.size() >= z.size() {
                repl.push(z);
            }
        }
        for (i, c) in node.children().into_iter().enumerate() {
            let mut cp = s.path.clone();
            cp.push(i);
            if sites.iter().any(|t| t.decl == s.decl && t.path == cp && t.ty == s.ty) {
                repl.push(c.clone());
            }
        }
        for r in repl {
            let mut q = p.clone();
            if let Decl::Fun(g) = &mut q.decls[s.decl] {
                *at_mut(&mut g.body, &s.path) = r;
            }
            out.push(q);
        }
    }
    out
}

/// The smallest closed expression of a type, if there is one.
fn smallest(ty: &Ty) -> Option<Expr> {
    match ty {
        Ty::Prim(PrimTy::Bool) => Some(Expr::boolean(false)),
        Ty::Prim(p) => Some(lit_expr(IntVal::wrap(*p, 0))),
        Ty::Unit => Some(Expr::unit()),
        Ty::Option(_) => Some(Expr::none(Some(ty.clone()))),
        Ty::Ref(inner) => match &**inner {
            Ty::Prim(p) => Some(Expr::reference(smallest(&Ty::Prim(*p))?)),
            _ => None,
        },
        _ => None,
    }
}

fn at<'a>(e: &'a Expr, path: &[usize]) -> &'a Expr {
    path.iter().fold(e, |e, &i| e.children()[i])
}

fn at_mut<'a>(e: &'a mut Expr, path: &[usize]) -> &'a mut Expr {
    path.iter().fold(e, |e, &i| child_mut(e, i))
}

fn child_mut(e: &mut Expr, i: usize) -> &mut Expr {
    match &mut e.kind {
        ExprKind::App(f, args) => {
            if i == 0 {
                f
            } else {
                &mut args[i - 1]
            }
        }
        ExprKind::Prim(_, args) => &mut args[i],
        ExprKind::Let(_, _, a, b) => [a, b].into_iter().nth(i).expect("let has two children"),
        ExprKind::Cond(a, b, c) | ExprKind::For(a, b, _, c) => [a, b, c].into_iter().nth(i).expect("three children"),
        ExprKind::StructInit(_, fs) => &mut fs[i].1,
        ExprKind::Field(a, _) | ExprKind::SomeLit(a) => a,
        ExprKind::Match(s, arms) => {
            if i == 0 {
                s
            } else {
                &mut arms[i - 1].1
            }
        }
        _ => unreachable!("no child {i}"),
    }
}

/// Every typeable subexpression of every function body, with its type.
fn sites(tp: &TypedProgram) -> Vec<Site> {
    let base = tp.context();
    let mut out = Vec::new();
    for (i, d) in tp.program.decls.iter().enumerate() {
        if let Decl::Fun(f) = d {
            let mut ctx = base.clone();
            ctx.gamma = f.args.iter().chain(f.vars.iter()).cloned().collect();
            walk(&mut ctx, &f.body, i, &mut Vec::new(), &mut out);
        }
    }
    out
}

fn walk(ctx: &mut TypingContext, e: &Expr, decl: usize, path: &mut Path, out: &mut Vec<Site>) {
    let Ok((ty, _)) = infer_expr(ctx, e) else { return };
    let scrut_ty = match &e.kind {
        ExprKind::Match(s, _) => infer_expr(ctx, s).ok().map(|(t, _)| t),
        _ => None,
    };
    out.push(Site { decl, path: path.clone(), ty });
    for (i, c) in e.children().into_iter().enumerate() {
        let binders: Vec<(String, Ty)> = match &e.kind {
            ExprKind::Let(x, Some(t), _, _) if i == 1 => vec![(x.clone(), t.clone())],
            ExprKind::Match(_, arms) if i > 0 => match (&arms[i - 1].0, &scrut_ty) {
                (Pattern::Psome(y), Some(Ty::Option(inner))) => vec![(y.clone(), (**inner).clone())],
                (Pattern::Pbytes { x, target, fields }, _) => {
                    std::iter::once((x.clone(), target.clone())).chain(fields.iter().cloned()).collect()
                }
                _ => Vec::new(),
            },
            _ => Vec::new(),
        };
        let depth = ctx.gamma.len();
        ctx.gamma.extend(binders);
        path.push(i);
        walk(ctx, c, decl, path, out);
        path.pop();
        ctx.gamma.truncate(depth);
    }
}
