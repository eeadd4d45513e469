use std::collections::{BTreeMap, HashMap};

use beepl_core::{
    sizeof, struct_layout, BlockId, BytesView, Decl, FrameId, FunDecl, GlobInit, PrimTy, StructTable, Ty, Value,
};
use beepl_typecheck::{HelperSig, TypedProgram, TypingContext, MAP_STRUCT};

use crate::memory::{Memory, Perm};
use crate::world::ExternalWorld;

/// Δ: functions, global bindings and the struct and helper tables.
#[derive(Debug, Clone, Default)]
pub struct Delta {
    pub funs: BTreeMap<String, FunDecl>,
    pub globals: BTreeMap<String, (BlockId, Ty)>,
    pub pi: StructTable,
    pub psi: BTreeMap<String, HelperSig>,
}

/// Ω for one activation.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Frame {
    pub vars: Vec<(String, BlockId, Ty)>,
}

impl Frame {
    pub fn get(&self, x: &str) -> Option<(BlockId, &Ty)> {
        self.vars.iter().rev().find(|(y, _, _)| y == x).map(|(_, b, t)| (*b, t))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Config {
    /// Rule BOPV's zero result for unsafe operands. Only the mutation tests
    /// turn it off.
    pub guard_unsafe: bool,
    pub trace: bool,
}

impl Default for Config {
    fn default() -> Config {
        Config { guard_unsafe: true, trace: false }
    }
}

/// Counters for the runtime monitors.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Monitor {
    pub derefs: u64,
    pub assigns: u64,
    pub allocations: u64,
    pub extract_ok: u64,
    pub extract_short: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceLine {
    pub rule: &'static str,
    pub redex: String,
    pub blocks: usize,
}

#[derive(Debug, Clone)]
pub struct State {
    pub delta: Delta,
    pub frames: BTreeMap<FrameId, Frame>,
    pub theta: Memory,
    /// Σ: the type of `Loc(b, 0)` for every typed block.
    pub sigma: HashMap<BlockId, Ty>,
    /// Frame that free variables of a top-level expression resolve in.
    pub root: Option<FrameId>,
    pub next_frame: u64,
    pub map_blocks: BTreeMap<BlockId, String>,
    pub lookups: BTreeMap<(String, i64), BlockId>,
    pub packet_block: Option<BlockId>,
    pub config: Config,
    pub monitor: Monitor,
    pub trace: Vec<TraceLine>,
}

impl State {
    /// A state with no globals over the given struct and helper tables.
    pub fn bare(pi: StructTable, psi: BTreeMap<String, HelperSig>) -> State {
        State {
            delta: Delta { pi, psi, ..Delta::default() },
            frames: BTreeMap::new(),
            theta: Memory::new(),
            sigma: HashMap::new(),
            root: None,
            next_frame: 1,
            map_blocks: BTreeMap::new(),
            lookups: BTreeMap::new(),
            packet_block: None,
            config: Config::default(),
            monitor: Monitor::default(),
            trace: Vec::new(),
        }
    }

    pub fn from_context(ctx: &TypingContext) -> State {
        State::bare(ctx.pi.clone(), ctx.psi.clone())
    }

    /// Initial state of a checked program: globals are allocated in
    /// declaration order.
    pub fn new(tp: &TypedProgram) -> State {
        let mut s = State::bare(tp.pi.clone(), tp.psi.clone());
        let mut map_id = 0;
        for d in &tp.program.decls {
            match d {
                Decl::Fun(f) => {
                    s.delta.funs.insert(f.name.clone(), f.clone());
                }
                Decl::Ext(_) => {}
                Decl::Glob(g) => {
                    let b = match &g.init {
                        GlobInit::Const(e) => {
                            let v = e.as_value().expect("elaborated global initializer is a literal");
                            s.alloc_var(&g.ty, Some(v))
                        }
                        GlobInit::Str(text) => {
                            let size = sizeof(&g.ty, &s.delta.pi).unwrap_or(0);
                            let mut raw = text.as_bytes().to_vec();
                            raw.resize(size as usize, 0);
                            let b = s.theta.alloc_raw(raw, Perm::Freeable);
                            s.sigma.insert(b, Ty::ptr(g.ty.clone()));
                            b
                        }
                        GlobInit::Map => {
                            let m = s.alloc_ref(&Ty::strukt(MAP_STRUCT));
                            s.theta.store(m, 0, Value::int(map_id)).expect("fresh block");
                            map_id += 1;
                            s.map_blocks.insert(m, g.name.clone());
                            s.alloc_var(&g.ty, Some(Value::Loc(m, 0)))
                        }
                    };
                    s.delta.globals.insert(g.name.clone(), (b, g.ty.clone()));
                }
            }
        }
        s
    }

    pub fn layout(&self, id: &str) -> Vec<beepl_core::FieldLayout> {
        struct_layout(id, &self.delta.pi).unwrap_or_default()
    }

    pub fn size_of(&self, ty: &Ty) -> u32 {
        sizeof(ty, &self.delta.pi).unwrap_or(8)
    }

    /// Dynamic type of a value; locations are typed through Σ.
    pub fn type_of(&self, v: &Value) -> Option<Ty> {
        Some(match v {
            Value::Unit => Ty::Unit,
            Value::Bool(_) => Ty::BOOL,
            Value::Int(i) => Ty::Prim(i.ty()),
            Value::Loc(b, _) => self.sigma.get(b)?.clone(),
            Value::None(t) => t.clone(),
            Value::Some(v) => Ty::Option(Box::new(self.type_of(v)?)),
            Value::Bytes(_) => Ty::Bytes,
            Value::Undef => return None,
        })
    }

    /// Allocates a block whose address has type `Ref(content)`.
    pub fn alloc_ref(&mut self, content: &Ty) -> BlockId {
        let b = self.theta.alloc(self.size_of(content), Perm::Freeable);
        self.sigma.insert(b, Ty::ptr(content.clone()));
        self.monitor.allocations += 1;
        b
    }

    /// A variable's storage. Struct variables hold the struct itself, so
    /// their block is typed `Struct s`.
    pub fn alloc_var(&mut self, ty: &Ty, init: Option<Value>) -> BlockId {
        let b = if let Ty::Struct(_) = ty {
            let b = self.theta.alloc(self.size_of(ty), Perm::Freeable);
            self.sigma.insert(b, ty.clone());
            self.monitor.allocations += 1;
            b
        } else {
            self.alloc_ref(ty)
        };
        if let Some(v) = init {
            self.write(b, 0, ty, &v).expect("fresh block");
        }
        b
    }

    /// Writes `v` of type `ty` at `(b, off)`. Struct values are copied
    /// field by field.
    pub fn write(&mut self, b: BlockId, off: u32, ty: &Ty, v: &Value) -> Result<(), crate::memory::MemError> {
        if let (Ty::Struct(_), Value::Loc(src, so)) = (ty, v) {
            let size = self.size_of(ty);
            let from = self.theta.block(*src)?.clone();
            let dst = self.theta.blocks.get_mut(&b).ok_or(crate::memory::MemError::Invalid(b.0))?;
            for (o, c) in from.cells.range(*so..*so + size) {
                dst.cells.insert(o - so + off, c.clone());
            }
            let (s0, d0) = (*so as usize, off as usize);
            let n = (size as usize).min(from.raw.len().saturating_sub(s0)).min(dst.raw.len().saturating_sub(d0));
            dst.raw[d0..d0 + n].copy_from_slice(&from.raw[s0..s0 + n]);
            return Ok(());
        }
        self.theta.store(b, off, v.clone())
    }

    fn zero_fill(&mut self, b: BlockId, ty: &Ty) {
        match ty {
            Ty::Struct(id) => {
                for f in self.layout(id) {
                    if let Some(z) = Value::zero_of(&f.ty) {
                        self.theta.store(b, f.offset, z).expect("fresh block");
                    }
                }
            }
            t => {
                if let Some(z) = Value::zero_of(t) {
                    self.theta.store(b, 0, z).expect("fresh block");
                }
            }
        }
    }

    /// A block of type `ty` with every scalar field zeroed. Returns the block
    /// typed as `Ref(ty)`, except for structs, which are typed `Struct s`.
    pub fn alloc_zeroed(&mut self, ty: &Ty) -> BlockId {
        let b = self.alloc_var(ty, None);
        self.zero_fill(b, ty);
        b
    }

    pub fn fresh_frame(&mut self, frame: Frame) -> FrameId {
        let id = FrameId(self.next_frame);
        self.next_frame += 1;
        self.frames.insert(id, frame);
        id
    }

    /// Binds variables for a top-level expression.
    pub fn bind_root(&mut self, x: &str, ty: &Ty, v: Value) {
        let b = self.alloc_var(ty, Some(v));
        let root = match self.root {
            Some(r) => r,
            None => {
                let r = self.fresh_frame(Frame::default());
                self.root = Some(r);
                r
            }
        };
        self.frames.get_mut(&root).expect("root frame").vars.push((x.to_string(), b, ty.clone()));
    }

    fn packet(&mut self, w: &ExternalWorld) -> BytesView {
        let b = match self.packet_block {
            Some(b) => b,
            None => {
                let b = self.theta.alloc_raw(w.packet.clone(), Perm::ReadOnly);
                self.packet_block = Some(b);
                b
            }
        };
        BytesView { block: b, off: 0, len: w.packet.len() as u32 }
    }

    /// Argument values for calling an entry point. Context pointers see the
    /// world's packet; scalars are zero.
    pub fn entry_args(&mut self, params: &[(String, Ty)], w: &ExternalWorld) -> Vec<Value> {
        params
            .iter()
            .map(|(_, t)| match t {
                Ty::Option(inner) => match &**inner {
                    Ty::Ref(target) => match &**target {
                        Ty::Struct(id) if id == "xdp_md" || id == "__sk_buff" => {
                            let view = self.packet(w);
                            let b = self.alloc_ref(target);
                            self.theta.store(b, 0, Value::Bytes(view)).expect("fresh block");
                            Value::Some(Box::new(Value::Loc(b, 0)))
                        }
                        _ => Value::None(t.clone()),
                    },
                    _ => Value::None(t.clone()),
                },
                Ty::Ref(target) => {
                    let b = self.alloc_ref(target);
                    self.zero_fill(b, target);
                    Value::Loc(b, 0)
                }
                Ty::Struct(_) => Value::Loc(self.alloc_zeroed(t), 0),
                Ty::Bytes => Value::Bytes(self.packet(w)),
                Ty::Prim(PrimTy::Bool) => Value::Bool(false),
                other => Value::zero_of(other).unwrap_or(Value::Unit),
            })
            .collect()
    }

    /// The typing context for intermediate expressions: Σ and the frame
    /// environments come from this state.
    pub fn typing_context(&self, base: &TypingContext) -> TypingContext {
        let mut c = base.clone();
        c.sigma = self.sigma.clone();
        c.frames = self
            .frames
            .iter()
            .map(|(id, f)| (*id, f.vars.iter().map(|(x, _, t)| (x.clone(), t.clone())).collect()))
            .collect();
        if let Some(r) = self.root {
            c.gamma = c.frames[&r].clone();
        }
        c
    }
}
