use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use beepl_core::{Decl, GlobInit, Ty, Value};
use beepl_interp::ExternalWorld;
use beepl_typecheck::{HelperSig, TypedProgram};

use crate::cir::{c_string, CFunction, CType};
use crate::lower::{ctype, lit, Env, FnLower, Global};
use crate::names::{member, sanitize, usable, PREFIX};
use crate::{prelude, CgenError, Mode};

/// What the host stubs answer: the same facts the interpreter's world holds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HostWorld {
    pub uid_gid: u64,
    pub packet: Vec<u8>,
    pub maps: BTreeMap<String, BTreeMap<i64, i64>>,
}

impl Default for HostWorld {
    fn default() -> HostWorld {
        HostWorld::from(&ExternalWorld::default())
    }
}

impl From<&ExternalWorld> for HostWorld {
    fn from(w: &ExternalWorld) -> HostWorld {
        HostWorld { uid_gid: w.uid_gid, packet: w.packet.clone(), maps: w.maps.clone() }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EmitOptions {
    pub mode: Mode,
    /// Function called by the host `main`; defaults to the program's entry.
    pub entry: Option<String>,
    pub world: HostWorld,
}

/// A generated translation unit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CUnit {
    pub prelude: String,
    /// Struct definitions, globals and helper declarations, in order.
    pub decls: Vec<String>,
    pub functions: Vec<CFunction>,
    /// The complete file.
    pub text: String,
}

fn declare_fn(ret: &CType, name: &str, params: &[String]) -> String {
    let params = if params.is_empty() { "void".to_string() } else { params.join(", ") };
    ret.declare(&format!("{name}({params})"))
}

fn sig_types(sig: &HelperSig) -> Result<(CType, Vec<CType>), CgenError> {
    let args = sig.args.iter().map(ctype).collect::<Result<Vec<_>, _>>()?;
    Ok((ctype(&sig.ret)?, args))
}

fn struct_order(tp: &TypedProgram) -> Vec<String> {
    fn visit(tp: &TypedProgram, s: &str, seen: &mut BTreeSet<String>, out: &mut Vec<String>) {
        if !seen.insert(s.to_string()) {
            return;
        }
        if let Some(c) = tp.pi.get(s) {
            for (_, t) in &c.fields {
                if let Ty::Struct(inner) = t {
                    visit(tp, inner, seen, out);
                }
            }
            out.push(s.to_string());
        }
    }
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    let declared = tp.registry.composites.iter().chain(&tp.program.composites).map(|c| c.name.clone());
    let names: Vec<String> = declared.chain(tp.pi.keys().cloned()).collect();
    for s in names {
        visit(tp, &s, &mut seen, &mut out);
    }
    out
}

fn struct_def(tp: &TypedProgram, s: &str) -> Result<String, CgenError> {
    let c = &tp.pi[s];
    let mut out = format!("struct {s} {{\n");
    for (f, t) in &c.fields {
        let _ = writeln!(out, "    {};", ctype(t)?.declare(&member(f)));
    }
    if c.fields.is_empty() {
        out.push_str("    char __bpl_empty;\n");
    }
    out.push_str("};\n");
    Ok(out)
}

/// Assigns C names to every file-scope entity.
fn plan(tp: &TypedProgram, mode: Mode) -> Env<'_> {
    let mut funs = BTreeMap::new();
    let mut globals = BTreeMap::new();
    for name in tp.psi.keys() {
        let c = if tp.registry.helpers.contains_key(name) || usable(name) {
            name.clone()
        } else {
            format!("{PREFIX}x_{}", sanitize(name))
        };
        funs.insert(name.clone(), c);
    }
    for d in &tp.program.decls {
        match d {
            Decl::Fun(f) => {
                let c = if usable(&f.name) { f.name.clone() } else { format!("{PREFIX}f_{}", sanitize(&f.name)) };
                funs.insert(f.name.clone(), c);
            }
            Decl::Glob(g) => {
                let c = if usable(&g.name) { g.name.clone() } else { format!("{PREFIX}g_{}", sanitize(&g.name)) };
                let entry = if matches!(g.init, GlobInit::Map) { Global::Map(c) } else { Global::Value(c) };
                globals.insert(g.name.clone(), entry);
            }
            Decl::Ext(_) => {}
        }
    }
    let mut reserved: BTreeSet<String> = funs.values().cloned().collect();
    for g in globals.values() {
        let (Global::Value(c) | Global::Map(c)) = g;
        reserved.insert(c.clone());
    }
    reserved.extend(tp.registry.constants.keys().cloned());
    Env { tp, mode, funs, globals, reserved }
}

fn global_decls(env: &Env, out: &mut Vec<String>) -> Result<(), CgenError> {
    let mut map_id = 0;
    for g in env.tp.program.globals() {
        let sec = match (env.mode, &g.sec) {
            (Mode::Ebpf, Some(s)) => format!(" SEC({})", c_string(s)),
            _ => String::new(),
        };
        let text = match (&g.init, &env.globals[&g.name]) {
            (GlobInit::Map, Global::Map(c)) => {
                let t = format!("struct bpf_map {c}{sec} = {{ {map_id} }};\n");
                map_id += 1;
                t
            }
            (GlobInit::Str(s), Global::Value(c)) => {
                format!("{}{sec} = {};\n", ctype(&g.ty)?.declare(c), c_string(s))
            }
            (GlobInit::Const(e), Global::Value(c)) => {
                let v = match e.as_value() {
                    Some(Value::Int(i)) => lit(i).render(),
                    Some(Value::Bool(b)) => (b as u8).to_string(),
                    _ => return Err(CgenError::Internal(format!("initializer of `{}` is not a literal", g.name))),
                };
                format!("{}{sec} = {v};\n", ctype(&g.ty)?.declare(c))
            }
            _ => return Err(CgenError::Internal(format!("global `{}` planned inconsistently", g.name))),
        };
        out.push(text);
    }
    Ok(())
}

fn helper_decls(env: &Env, world: &HostWorld, out: &mut Vec<String>) -> Result<(), CgenError> {
    for (name, sig) in &env.tp.psi {
        let cname = &env.funs[name];
        if name == "htons" {
            out.push(prelude::HTONS.to_string());
            continue;
        }
        let (ret, args) = sig_types(sig)?;
        match env.mode {
            Mode::Ebpf => match prelude::helper_id(name) {
                Some(id) if env.tp.registry.helpers.contains_key(name) => {
                    let ptr = format!("(*{cname})");
                    let types: Vec<String> = args.iter().map(CType::abstract_name).collect();
                    out.push(format!("static __attribute__((unused)) {} = (void *){id};\n", declare_fn(&ret, &ptr, &types)));
                }
                _ => {
                    let types: Vec<String> = args.iter().map(CType::abstract_name).collect();
                    out.push(format!("extern {};\n", declare_fn(&ret, cname, &types)));
                }
            },
            Mode::Host => {
                let params: Vec<String> =
                    args.iter().enumerate().map(|(i, t)| t.declare(&format!("{PREFIX}a{i}"))).collect();
                let head = declare_fn(&ret, cname, &params);
                let body = match name.as_str() {
                    "bpf_get_current_uid_gid" if env.tp.registry.helpers.contains_key(name) => {
                        format!("    return (long){}UL;\n", world.uid_gid)
                    }
                    "bpf_map_lookup_elem" if env.tp.registry.helpers.contains_key(name) => {
                        out.push(map_entries(env, world));
                        "    int i;\n    if (__bpl_a0 == 0 || __bpl_a1 == 0) return 0;\n    \
                         for (i = 0; __bpl_entries[i].map != 0; i++)\n        \
                         if (__bpl_entries[i].map == __bpl_a0 && __bpl_entries[i].key == *__bpl_a1) \
                         return &__bpl_entries[i].value;\n    return 0;\n"
                            .to_string()
                    }
                    _ => format!("    static {};\n    return {PREFIX}z;\n", ret.declare(&format!("{PREFIX}z"))),
                };
                out.push(format!("{head}\n{{\n{body}}}\n"));
            }
        }
    }
    Ok(())
}

fn map_entries(env: &Env, world: &HostWorld) -> String {
    let mut out = String::from(
        "struct __bpl_entry { struct bpf_map *map; long key; long value; };\nstatic struct __bpl_entry __bpl_entries[] = {\n",
    );
    for (map, entries) in &world.maps {
        if let Some(Global::Map(c)) = env.globals.get(map) {
            for (k, v) in entries {
                let _ = writeln!(out, "    {{ &{c}, {}, {} }},", lit(beepl_core::IntVal::long(*k)).render(), lit(beepl_core::IntVal::long(*v)).render());
            }
        }
    }
    out.push_str("    { 0, 0, 0 }\n};\n");
    out
}

fn function(env: &Env, f: &beepl_core::FunDecl) -> Result<CFunction, CgenError> {
    let mut fl = FnLower::new(env, f.rt.clone());
    let mut params = Vec::new();
    for (x, t) in &f.args {
        let c = fl.param(x, t);
        params.push((ctype(t)?, c));
    }
    for (x, t) in &f.vars {
        fl.declare_var(x, t)?;
    }
    let body = fl.lower_body(&f.body)?;
    Ok(CFunction {
        name: env.funs[&f.name].clone(),
        sec: f.sec.clone(),
        ret: ctype(&f.rt)?,
        params,
        locals: std::mem::take(&mut fl.locals),
        body,
        nullable: std::mem::take(&mut fl.nullable),
    })
}

fn host_main(env: &Env, entry: &str, world: &HostWorld) -> Result<String, CgenError> {
    let f = env.tp.program.function(entry).ok_or_else(|| CgenError::NoEntry(entry.to_string()))?;
    let mut out = String::new();
    let bytes: Vec<String> = world.packet.iter().map(|b| format!("0x{b:02x}")).collect();
    let size = world.packet.len().max(1);
    let init = if bytes.is_empty() { "0".to_string() } else { bytes.join(", ") };
    let _ = writeln!(out, "static __attribute__((unused)) unsigned char __bpl_packet[{size}] = {{ {init} }};");
    out.push_str("int main(void)\n{\n");
    let mut setup = String::new();
    let mut args = Vec::new();
    let len = world.packet.len();
    for (i, (_, t)) in f.args.iter().enumerate() {
        let a = format!("{PREFIX}a{i}");
        let packet_view = |v: &str| format!("    {v}.start = __bpl_packet;\n    {v}.end = __bpl_packet + {len};\n");
        match t {
            Ty::Option(inner) => match &**inner {
                Ty::Ref(target) if matches!(&**target, Ty::Struct(s) if prelude::KERNEL_CTX.contains(&s.as_str())) => {
                    let _ = writeln!(out, "    static {};", ctype(target)?.declare(&a));
                    setup.push_str(&packet_view(&format!("{a}.data")));
                    args.push(format!("&{a}"));
                }
                _ => args.push(format!("({})0", ctype(t)?.abstract_name())),
            },
            Ty::Ref(target) => {
                let _ = writeln!(out, "    static {};", ctype(target)?.declare(&a));
                args.push(format!("&{a}"));
            }
            Ty::Bytes => {
                let _ = writeln!(out, "    bytes_t {a};");
                setup.push_str(&packet_view(&a));
                args.push(a);
            }
            Ty::Struct(_) => {
                let _ = writeln!(out, "    static {};", ctype(t)?.declare(&a));
                args.push(a);
            }
            _ => args.push("0".to_string()),
        }
    }
    let ret = ctype(&f.rt)?;
    let _ = writeln!(out, "    {};", ret.declare(&format!("{PREFIX}r")));
    out.push_str(&setup);
    let _ = writeln!(out, "    {PREFIX}r = {}({});", env.funs[entry], args.join(", "));
    match f.rt {
        Ty::Prim(p) => {
            let (fmt, cast) = if p.is_signed() { ("%lld", "long long") } else { ("%llu", "unsigned long long") };
            let _ = writeln!(out, "    printf(\"{fmt}\\n\", ({cast}){PREFIX}r);");
            let _ = writeln!(out, "    return (int)({PREFIX}r & 255);");
        }
        _ => out.push_str("    return 0;\n"),
    }
    out.push_str("}\n");
    Ok(out)
}

pub(crate) fn emit(tp: &TypedProgram, opts: &EmitOptions) -> Result<CUnit, CgenError> {
    let env = plan(tp, opts.mode);
    let mut prelude_text = String::from(prelude::COMMON);
    match opts.mode {
        Mode::Ebpf => {
            prelude_text.push_str(prelude::EBPF);
            prelude_text.push_str(prelude::EBPF_CTX);
        }
        Mode::Host => prelude_text.push_str(prelude::HOST),
    }
    let mut decls = Vec::new();
    for s in struct_order(tp) {
        if opts.mode == Mode::Ebpf && prelude::KERNEL_CTX.contains(&s.as_str()) {
            continue;
        }
        decls.push(struct_def(tp, &s)?);
    }
    global_decls(&env, &mut decls)?;
    helper_decls(&env, &opts.world, &mut decls)?;
    let functions = tp.program.functions().map(|f| function(&env, f)).collect::<Result<Vec<_>, _>>()?;
    let mut text = prelude_text.clone();
    for d in &decls {
        text.push_str(d);
    }
    for f in &functions {
        text.push('\n');
        text.push_str(&f.render(opts.mode == Mode::Ebpf));
    }
    if opts.mode == Mode::Host {
        let entry = match &opts.entry {
            Some(e) => e.clone(),
            None => beepl_interp::default_entry(&tp.program).ok_or_else(|| CgenError::NoEntry("<none>".into()))?,
        };
        text.push('\n');
        text.push_str(&host_main(&env, &entry, &opts.world)?);
    }
    let unit = CUnit { prelude: prelude_text, decls, functions, text };
    crate::audit::audit(&unit)?;
    Ok(unit)
}
