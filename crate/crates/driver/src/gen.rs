//! Type-directed generation of well-typed programs.
//!
//! Every expression is built against a goal type, so a generated program
//! passes the checker by construction. The checker still runs on the
//! result; a rejection is reported as [`GenError::IllTyped`] rather than
//! hidden by a retry.

use std::collections::BTreeMap;

use beepl_core::{
    Bop, CallConv, Composite, Decl, Dir, Expr, ExprKind, FunDecl, GlobDecl, GlobInit, IntVal, Pattern, PrimTy, Program,
    Span, Ty, Uop,
};
use beepl_typecheck::{check_program, map_ptr};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Language features the generator may use.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Features {
    pub loops: bool,
    pub matches: bool,
    /// Bytes matches on the packet of an `xdp_md` context.
    pub bytes: bool,
    /// Helper calls, maps and constant globals.
    pub externals: bool,
}

impl Features {
    pub const ALL: Features = Features { loops: true, matches: true, bytes: true, externals: true };
    pub const NONE: Features = Features { loops: false, matches: false, bytes: false, externals: false };
}

impl Default for Features {
    fn default() -> Features {
        Features::ALL
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GenConfig {
    pub seed: u64,
    /// Expression depth, at most [`MAX_DEPTH`]; depth 1 gives leaves only.
    pub max_depth: u32,
    /// Helper functions generated before `main`.
    pub max_decls: usize,
    pub features: Features,
    /// Range of ordinary literals; boundary values are mixed in regardless.
    pub lit_range: (i64, i64),
}

pub const MAX_DEPTH: u32 = 8;

impl Default for GenConfig {
    fn default() -> GenConfig {
        GenConfig { seed: 0, max_depth: 6, max_decls: 3, features: Features::ALL, lit_range: (-64, 64) }
    }
}

impl GenConfig {
    pub fn with_seed(&self, seed: u64) -> GenConfig {
        GenConfig { seed, ..self.clone() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GenError {
    #[error("seed {seed}: no program within the step budget after {attempts} attempts")]
    GenerationExhausted { seed: u64, attempts: u32 },
    #[error("seed {seed}: generated program rejected by the checker: {diagnostic}")]
    IllTyped { seed: u64, diagnostic: String, program: Box<Program> },
}

const ATTEMPTS: u32 = 16;
/// Upper bound on the estimated evaluation steps of `main`.
pub const STEP_BUDGET: u64 = 20_000;
const NODE_BUDGET: usize = 240;
const MAX_LOOP_NEST: u32 = 2;
const PAIR: &str = "pair";
const MAP: &str = "m0";
const GLOBAL: &str = "g0";
const CTX: &str = "ctx";

/// Generates a program whose `main` passes the checker and whose estimated
/// run stays within [`STEP_BUDGET`].
pub fn generate_well_typed(cfg: &GenConfig) -> Result<Program, GenError> {
    for attempt in 0..ATTEMPTS {
        let sub = cfg.seed.wrapping_add((attempt as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
        let p = raw_program(cfg, sub);
        if let Err(d) = check_program(&p) {
            return Err(GenError::IllTyped { seed: cfg.seed, diagnostic: d.to_string(), program: Box::new(p) });
        }
        if estimate_steps(&p) <= STEP_BUDGET {
            return Ok(p);
        }
    }
    Err(GenError::GenerationExhausted { seed: cfg.seed, attempts: ATTEMPTS })
}

/// One draw of the generator, before any checking.
pub fn raw_program(cfg: &GenConfig, seed: u64) -> Program {
    Gen::new(cfg, seed).program()
}

/// Rough count of evaluation steps for `main`, multiplying loop bodies by
/// their literal trip counts and charging calls with the callee's cost.
pub fn estimate_steps(p: &Program) -> u64 {
    let mut costs: BTreeMap<String, u64> = BTreeMap::new();
    for f in p.functions() {
        let c = cost(&f.body, &costs).saturating_add(f.args.len() as u64 + 2);
        costs.insert(f.name.clone(), c);
    }
    p.functions().last().map_or(0, |f| costs[&f.name])
}

fn literal(e: &Expr) -> Option<i128> {
    match &e.kind {
        ExprKind::ConstInt(v) => Some(*v as i128),
        ExprKind::ConstLong(v) => Some(*v as i128),
        ExprKind::ConstNum(v) => Some(v.value()),
        _ => None,
    }
}

fn cost(e: &Expr, funs: &BTreeMap<String, u64>) -> u64 {
    let own = match &e.kind {
        ExprKind::For(lo, hi, d, body) => {
            let trips = match (literal(lo), literal(hi)) {
                (Some(a), Some(b)) => {
                    let n = if *d == Dir::Up { b - a + 1 } else { a - b + 1 };
                    n.clamp(0, u32::MAX as i128) as u64
                }
                _ => u32::MAX as u64,
            };
            let each = cost(body, funs).saturating_add(3);
            return trips.saturating_mul(each).saturating_add(cost(lo, funs)).saturating_add(cost(hi, funs)).saturating_add(2);
        }
        ExprKind::App(f, _) => match &f.kind {
            ExprKind::Var(name) => funs.get(name).copied().unwrap_or(2),
            _ => 2,
        },
        _ => 1,
    };
    e.children().into_iter().fold(own, |acc, c| acc.saturating_add(cost(c, funs)))
}

#[derive(Clone)]
struct FunInfo {
    name: String,
    args: Vec<Ty>,
    ret: Ty,
}

struct Gen<'a> {
    cfg: &'a GenConfig,
    rng: ChaCha8Rng,
    funs: Vec<FunInfo>,
    scope: Vec<(String, Ty)>,
    fresh: u32,
    nodes: usize,
    loops: u32,
    has_pair: bool,
    has_map: bool,
    has_global: bool,
}

const REF_PRIMS: [PrimTy; 2] = [PrimTy::INT, PrimTy::LONG];

impl<'a> Gen<'a> {
    fn new(cfg: &'a GenConfig, seed: u64) -> Gen<'a> {
        Gen {
            cfg,
            rng: ChaCha8Rng::seed_from_u64(seed),
            funs: Vec::new(),
            scope: Vec::new(),
            fresh: 0,
            nodes: 0,
            loops: 0,
            has_pair: false,
            has_map: false,
            has_global: false,
        }
    }

    fn depth(&self) -> u32 {
        self.cfg.max_depth.min(MAX_DEPTH)
    }

    fn chance(&mut self, p: f64) -> bool {
        self.rng.gen_bool(p)
    }

    fn program(mut self) -> Program {
        let feats = self.cfg.features;
        let mut decls = Vec::new();
        let mut composites = Vec::new();
        if self.chance(0.4) {
            composites.push(Composite { name: PAIR.into(), fields: vec![("a".into(), Ty::INT), ("b".into(), Ty::LONG)] });
            self.has_pair = true;
        }
        if feats.externals && self.chance(0.4) {
            decls.push(Decl::Glob(GlobDecl {
                name: MAP.into(),
                ty: map_ptr(),
                init: GlobInit::Map,
                sec: Some(".maps".into()),
                span: Span::default(),
            }));
            self.has_map = true;
        }
        if feats.externals && self.chance(0.3) {
            let v = self.int_lit(PrimTy::INT);
            decls.push(Decl::Glob(GlobDecl {
                name: GLOBAL.into(),
                ty: Ty::INT,
                init: GlobInit::Const(v),
                sec: None,
                span: Span::default(),
            }));
            self.has_global = true;
        }
        let n = if self.cfg.max_decls == 0 { 0 } else { self.rng.gen_range(0..=self.cfg.max_decls) };
        for i in 0..n {
            let args: Vec<(String, Ty)> = (0..self.rng.gen_range(0..=3)).map(|j| (format!("a{j}"), self.arg_ty())).collect();
            let ret = self.ret_ty();
            let f = self.function(&format!("f{i}"), args, ret);
            decls.push(Decl::Fun(f));
        }
        let args = if feats.bytes && self.chance(0.5) {
            vec![(CTX.to_string(), Ty::Option(Box::new(Ty::ptr(Ty::strukt("xdp_md")))))]
        } else {
            Vec::new()
        };
        let mut main = self.function("main", args, Ty::INT);
        self.call_helpers(&mut main);
        decls.push(Decl::Fun(main));
        Program { decls, composites }
    }

    fn function(&mut self, name: &str, args: Vec<(String, Ty)>, ret: Ty) -> FunDecl {
        self.scope = args.clone();
        if self.has_global {
            self.scope.push((GLOBAL.into(), Ty::INT));
        }
        self.fresh = 0;
        self.nodes = 0;
        self.loops = 0;
        let body = self.expr(&ret, self.depth());
        self.funs.push(FunInfo { name: name.into(), args: args.iter().map(|(_, t)| t.clone()).collect(), ret: ret.clone() });
        FunDecl {
            name: name.into(),
            sec: None,
            rt: ret,
            ef: None,
            cc: CallConv::default(),
            args,
            vars: Vec::new(),
            body,
            flag: false,
            span: Span::default(),
        }
    }

    /// Binds a call of most earlier functions ahead of the body of `main`,
    /// so that their bodies run.
    fn call_helpers(&mut self, main: &mut FunDecl) {
        if self.depth() < 3 {
            return;
        }
        let own = self.funs.pop();
        let helpers = self.funs.clone();
        self.scope = main.args.clone();
        if self.has_global {
            self.scope.push((GLOBAL.into(), Ty::INT));
        }
        let mut calls = Vec::new();
        for f in helpers.iter().rev() {
            if self.chance(0.8) {
                let args: Vec<Expr> = f.args.iter().map(|t| self.sub(t, 2)).collect();
                calls.push((Expr::app(&f.name, args), f.ret.clone()));
            }
        }
        let mut body = std::mem::replace(&mut main.body, Expr::unit());
        for (call, ret) in calls {
            let x = self.fresh_name();
            body = Expr::let_(&x, Some(ret), call, body);
        }
        main.body = body;
        self.funs.extend(own);
    }

    fn prim(&mut self) -> PrimTy {
        const WEIGHTED: [(PrimTy, u32); 9] = [
            (PrimTy::INT, 5),
            (PrimTy::LONG, 4),
            (PrimTy::Bool, 3),
            (PrimTy::UINT, 1),
            (PrimTy::ULONG, 1),
            (PrimTy::I8, 1),
            (PrimTy::U8, 1),
            (PrimTy::I16, 1),
            (PrimTy::U16, 1),
        ];
        WEIGHTED.choose_weighted(&mut self.rng, |(_, w)| *w).expect("non-empty").0
    }

    fn int_prim(&mut self) -> PrimTy {
        loop {
            let p = self.prim();
            if p != PrimTy::Bool {
                return p;
            }
        }
    }

    fn ref_prim(&mut self) -> PrimTy {
        *REF_PRIMS.choose(&mut self.rng).expect("non-empty")
    }

    fn arg_ty(&mut self) -> Ty {
        match self.rng.gen_range(0..10) {
            0 | 1 => Ty::ptr(Ty::Prim(self.ref_prim())),
            2 if self.cfg.features.matches => Ty::Option(Box::new(Ty::ptr(Ty::Prim(self.ref_prim())))),
            _ => Ty::Prim(self.prim()),
        }
    }

    fn ret_ty(&mut self) -> Ty {
        if self.chance(0.15) {
            Ty::Unit
        } else {
            Ty::Prim(self.prim())
        }
    }

    /// Type of a let-bound variable.
    fn binder_ty(&mut self) -> Ty {
        match self.rng.gen_range(0..20) {
            0..=2 => Ty::ptr(Ty::Prim(self.ref_prim())),
            3 if self.cfg.features.matches => Ty::Option(Box::new(Ty::ptr(Ty::Prim(self.ref_prim())))),
            4 if self.has_pair => Ty::ptr(Ty::strukt(PAIR)),
            5 => Ty::Unit,
            _ => Ty::Prim(self.prim()),
        }
    }

    fn fresh_name(&mut self) -> String {
        let n = self.fresh;
        self.fresh += 1;
        format!("v{n}")
    }

    /// A fresh name, or now and then an existing local to shadow.
    fn binder(&mut self) -> String {
        if self.chance(0.1) {
            let locals: Vec<String> =
                self.scope.iter().map(|(x, _)| x.clone()).filter(|x| x.starts_with('v')).collect();
            if let Some(x) = locals.choose(&mut self.rng) {
                return x.clone();
            }
        }
        self.fresh_name()
    }

    fn with_binders<T>(&mut self, binders: &[(String, Ty)], f: impl FnOnce(&mut Self) -> T) -> T {
        let depth = self.scope.len();
        self.scope.extend(binders.iter().cloned());
        let r = f(self);
        self.scope.truncate(depth);
        r
    }

    /// Variables in scope at `ty`, innermost binding only.
    fn vars_of(&self, ty: &Ty) -> Vec<String> {
        let mut out = Vec::new();
        for (i, (x, t)) in self.scope.iter().enumerate() {
            let shadowed = self.scope[i + 1..].iter().any(|(y, _)| y == x);
            if t == ty && !shadowed && x != "_" {
                out.push(x.clone());
            }
        }
        out
    }

    fn int_lit(&mut self, p: PrimTy) -> Expr {
        let v = if self.chance(0.15) {
            let bits = p.bits() as i128;
            *[0, 1, -1, p.min_value(), p.max_value(), bits, bits - 1].choose(&mut self.rng).expect("non-empty")
        } else {
            let (lo, hi) = self.cfg.lit_range;
            self.rng.gen_range(lo..=hi) as i128
        };
        lit_expr(IntVal::wrap(p, v))
    }

    fn leaf(&mut self, ty: &Ty) -> Expr {
        let vars = self.vars_of(ty);
        if !vars.is_empty() && self.chance(0.6) {
            return Expr::var(vars.choose(&mut self.rng).expect("non-empty"));
        }
        match ty {
            Ty::Prim(PrimTy::Bool) => Expr::boolean(self.chance(0.5)),
            Ty::Prim(p) => self.int_lit(*p),
            Ty::Ref(inner) => match &**inner {
                Ty::Prim(p) => Expr::reference(self.int_lit(*p)),
                Ty::Struct(s) if s == PAIR => self.pair_init(0),
                _ => unreachable!("no leaf at {ty}"),
            },
            Ty::Option(_) => Expr::none(Some(ty.clone())),
            Ty::Unit => Expr::unit(),
            _ => unreachable!("no leaf at {ty}"),
        }
    }

    fn pair_init(&mut self, depth: u32) -> Expr {
        let a = self.sub(&Ty::INT, depth);
        let b = self.sub(&Ty::LONG, depth);
        Expr::new(ExprKind::StructInit(PAIR.into(), vec![("a".into(), a), ("b".into(), b)]))
    }

    fn sub(&mut self, ty: &Ty, depth: u32) -> Expr {
        if depth <= 1 {
            self.leaf(ty)
        } else {
            self.expr(ty, depth)
        }
    }

    fn expr(&mut self, ty: &Ty, depth: u32) -> Expr {
        let max = self.depth().max(1) as f64;
        let spent = 1.0 - depth as f64 / max;
        let p_leaf = 0.03 + 0.6 * spent * spent;
        if depth <= 1 || self.nodes >= NODE_BUDGET || self.chance(p_leaf.clamp(0.0, 0.95)) {
            return self.leaf(ty);
        }
        self.nodes += 1;
        let d = depth - 1;
        if self.chance(0.35) {
            if let Some(e) = self.common(ty, d) {
                return e;
            }
        }
        match ty {
            Ty::Prim(PrimTy::Bool) => self.bool_expr(d),
            Ty::Prim(p) => self.int_expr(*p, d),
            Ty::Ref(inner) => self.ref_expr(inner, d),
            Ty::Option(inner) => self.option_expr(ty, inner, d),
            Ty::Unit => self.unit_expr(d),
            _ => self.leaf(ty),
        }
    }

    /// Forms available at every type.
    fn common(&mut self, ty: &Ty, d: u32) -> Option<Expr> {
        match self.rng.gen_range(0..7) {
            0 | 1 => {
                let t = self.binder_ty();
                let bound = self.sub(&t, d);
                let x = self.binder();
                let body = self.with_binders(&[(x.clone(), t.clone())], |g| g.sub(ty, d));
                Some(Expr::let_(&x, Some(t), bound, body))
            }
            2 => {
                let bound = self.sub(&Ty::Unit, d);
                let body = self.sub(ty, d);
                Some(Expr::let_("_", Some(Ty::Unit), bound, body))
            }
            3 => {
                let g = self.sub(&Ty::BOOL, d);
                let a = self.sub(ty, d);
                let b = self.sub(ty, d);
                Some(Expr::cond(g, a, b))
            }
            4 => self.call(ty, d),
            5 if self.cfg.features.matches => Some(self.option_match(ty, d)),
            6 if self.cfg.features.bytes => self.ctx_match(ty, d),
            _ => None,
        }
    }

    fn call(&mut self, ty: &Ty, d: u32) -> Option<Expr> {
        let fs: Vec<FunInfo> = self.funs.iter().filter(|f| f.ret == *ty).cloned().collect();
        let f = fs.choose(&mut self.rng)?.clone();
        let args = f.args.iter().map(|t| self.sub(t, d)).collect();
        Some(Expr::app(&f.name, args))
    }

    fn option_match(&mut self, ty: &Ty, d: u32) -> Expr {
        let p = self.ref_prim();
        let opt = Ty::Option(Box::new(Ty::ptr(Ty::Prim(p))));
        let scrut = self.sub(&opt, d);
        let y = self.binder();
        let none_arm = self.sub(ty, d);
        let some_arm = self.with_binders(&[(y.clone(), Ty::ptr(Ty::Prim(p)))], |g| g.sub(ty, d));
        let arms = match self.rng.gen_range(0..10) {
            0..=6 => vec![(Pattern::Pnone, none_arm), (Pattern::Psome(y), some_arm)],
            7 | 8 => vec![(Pattern::Psome(y), some_arm), (Pattern::Pnone, none_arm)],
            _ => vec![(Pattern::Psome(y), some_arm), (Pattern::Pwild, none_arm)],
        };
        Expr::matches(scrut, arms)
    }

    /// Opens the context option, or decodes its packet once it is open.
    fn ctx_match(&mut self, ty: &Ty, d: u32) -> Option<Expr> {
        let xdp = Ty::ptr(Ty::strukt("xdp_md"));
        if let Some(c) = self.vars_of(&xdp).choose(&mut self.rng).cloned() {
            return Some(self.bytes_match(&c, ty, d));
        }
        let opt = Ty::Option(Box::new(xdp.clone()));
        let c = self.vars_of(&opt).choose(&mut self.rng).cloned()?;
        let y = self.fresh_name();
        let none_arm = self.sub(ty, d);
        let some_arm = self.with_binders(&[(y.clone(), xdp)], |g| g.sub(ty, d));
        Some(Expr::matches(Expr::var(&c), vec![(Pattern::Pnone, none_arm), (Pattern::Psome(y), some_arm)]))
    }

    fn bytes_match(&mut self, c: &str, ty: &Ty, d: u32) -> Expr {
        let x = self.fresh_name();
        let (target, fields) = match self.rng.gen_range(0..6) {
            0 => (Ty::strukt("ethhdr"), vec![("h_proto".to_string(), Ty::Prim(PrimTy::U16))]),
            1 => (Ty::strukt("ethhdr"), Vec::new()),
            2 => (Ty::Prim(PrimTy::U8), Vec::new()),
            3 => (Ty::Prim(PrimTy::U16), Vec::new()),
            4 => (Ty::Prim(PrimTy::UINT), Vec::new()),
            _ => (Ty::Prim(PrimTy::ULONG), Vec::new()),
        };
        let mut binders = vec![(x.clone(), target.clone())];
        binders.extend(fields.iter().cloned());
        let hit = self.with_binders(&binders, |g| g.sub(ty, d));
        let miss = self.sub(ty, d);
        Expr::matches(
            Expr::field(Expr::var(c), "data"),
            vec![(Pattern::Pbytes { x, target, fields }, hit), (Pattern::Pwild, miss)],
        )
    }

    fn int_expr(&mut self, p: PrimTy, d: u32) -> Expr {
        let t = Ty::Prim(p);
        let ext = self.cfg.features.externals;
        loop {
            match self.rng.gen_range(0..12) {
                0..=4 => {
                    const ARITH: [Bop; 10] =
                        [Bop::Add, Bop::Sub, Bop::Mul, Bop::Div, Bop::Mod, Bop::And, Bop::Or, Bop::Xor, Bop::Shl, Bop::Shr];
                    let op = *ARITH.choose(&mut self.rng).expect("non-empty");
                    let a = self.sub(&t, d);
                    let b = self.sub(&t, d);
                    return Expr::bop(op, a, b);
                }
                5 => {
                    let op = if self.chance(0.5) { Uop::Neg } else { Uop::BitNot };
                    return Expr::uop(op, self.sub(&t, d));
                }
                6 => {
                    let q = self.int_prim();
                    return Expr::uop(Uop::Cast(p), self.sub(&Ty::Prim(q), d));
                }
                7 if REF_PRIMS.contains(&p) => return Expr::deref(self.sub(&Ty::ptr(t.clone()), d)),
                8 if self.has_pair && REF_PRIMS.contains(&p) => {
                    let s = self.sub(&Ty::ptr(Ty::strukt(PAIR)), d);
                    return Expr::field(s, if p == PrimTy::INT { "a" } else { "b" });
                }
                9 if ext && p == PrimTy::LONG => return Expr::app("bpf_get_current_uid_gid", Vec::new()),
                10 if ext && p == PrimTy::U16 => {
                    let a = self.sub(&t, d);
                    return Expr::app("htons", vec![a]);
                }
                11 => return self.leaf(&t),
                _ => {}
            }
        }
    }

    fn bool_expr(&mut self, d: u32) -> Expr {
        match self.rng.gen_range(0..6) {
            0..=2 => {
                const CMP: [Bop; 6] = [Bop::Eq, Bop::Ne, Bop::Lt, Bop::Le, Bop::Gt, Bop::Ge];
                let op = *CMP.choose(&mut self.rng).expect("non-empty");
                let q = Ty::Prim(self.int_prim());
                let a = self.sub(&q, d);
                let b = self.sub(&q, d);
                Expr::bop(op, a, b)
            }
            3 | 4 => {
                const LOGIC: [Bop; 4] = [Bop::Land, Bop::Lor, Bop::Eq, Bop::Ne];
                let op = *LOGIC.choose(&mut self.rng).expect("non-empty");
                let a = self.sub(&Ty::BOOL, d);
                let b = self.sub(&Ty::BOOL, d);
                Expr::bop(op, a, b)
            }
            _ => Expr::uop(Uop::LogNot, self.sub(&Ty::BOOL, d)),
        }
    }

    fn ref_expr(&mut self, inner: &Ty, d: u32) -> Expr {
        match inner {
            Ty::Prim(p) => Expr::reference(self.sub(&Ty::Prim(*p), d)),
            Ty::Struct(s) if s == PAIR => self.pair_init(d),
            _ => self.leaf(&Ty::ptr(inner.clone())),
        }
    }

    fn option_expr(&mut self, ty: &Ty, inner: &Ty, d: u32) -> Expr {
        let lookup = self.has_map && *inner == Ty::ptr(Ty::LONG);
        match self.rng.gen_range(0..4) {
            0 => Expr::none(Some(ty.clone())),
            1 | 2 if lookup => {
                let key = self.sub(&Ty::ptr(Ty::LONG), d);
                Expr::app("bpf_map_lookup_elem", vec![Expr::var(MAP), key])
            }
            _ => Expr::some(self.sub(inner, d)),
        }
    }

    fn unit_expr(&mut self, d: u32) -> Expr {
        match self.rng.gen_range(0..4) {
            0 | 1 => {
                let p = self.ref_prim();
                let target = self.sub(&Ty::ptr(Ty::Prim(p)), d);
                let v = self.sub(&Ty::Prim(p), d);
                Expr::assign(target, v)
            }
            2 if self.cfg.features.loops && self.loops < MAX_LOOP_NEST => self.loop_expr(d),
            _ => Expr::unit(),
        }
    }

    /// Loops take literal bounds with short trip counts, which keeps them
    /// clear of the bound-capture rule and the step budget.
    fn loop_expr(&mut self, d: u32) -> Expr {
        let p = self.ref_prim();
        let start: i64 = self.rng.gen_range(-3..=3);
        let trips: i64 = self.rng.gen_range(-1..=8);
        let dir = if self.chance(0.7) { Dir::Up } else { Dir::Down };
        let end = if dir == Dir::Up { start + trips - 1 } else { start - trips + 1 };
        let bound = |v: i64| lit_expr(IntVal::wrap(p, v as i128));
        self.loops += 1;
        let body = self.sub(&Ty::Unit, d);
        self.loops -= 1;
        Expr::for_(bound(start), bound(end), dir, body)
    }
}

/// The literal expression for a value, typed by its own kind.
pub fn lit_expr(v: IntVal) -> Expr {
    match v.ty() {
        PrimTy::INT => Expr::int(v.value() as i32),
        PrimTy::LONG => Expr::long(v.value() as i64),
        _ => Expr::num(v),
    }
}
