//! Acceptance run: one PASS/FAIL line per criterion. Exits nonzero when any
//! criterion fails. The differential criterion is skipped, not failed, when
//! no C compiler is available.

use std::time::{Duration, Instant};

use beepl_core::{Bop, Dir, IntVal, PrimTy, Value};
use beepl_frontend::parse_program;
use beepl_interp::{bop_sem, default_entry, range, run_function, unsafe_op, Config, ExternalWorld};
use beepl_typecheck::{check_program, TypedProgram};
use beeplc::{generated_cases, resolve_cc, run_cve_corpus, run_differential, run_property_suite, GenConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const CVE_LIMIT: Duration = Duration::from_secs(5);
const PROPERTY_LIMIT: Duration = Duration::from_secs(120);
const BOUNDS_LIMIT: Duration = Duration::from_secs(1);
const UNSAFE_LIMIT: Duration = Duration::from_secs(1);
const DIFFERENTIAL_LIMIT: Duration = Duration::from_secs(180);
const LOOP_LIMIT: Duration = Duration::from_secs(1);

const PROPERTY_PROGRAMS: usize = 1000;
const PROPERTY_DEPTH: u32 = 8;
const DIFFERENTIAL_PROGRAMS: usize = 100;
const SAFE_GRID: usize = 64;

enum Verdict {
    Pass(String),
    Fail(String),
    Skip(String),
}

fn checked(src: &str) -> Result<TypedProgram, String> {
    let p = parse_program(src).map_err(|d| d.to_string())?;
    check_program(&p).map_err(|d| d.to_string())
}

fn run_entry(tp: &TypedProgram, world: ExternalWorld, trace: bool) -> Result<beepl_interp::Outcome, String> {
    let entry = default_entry(&tp.program).ok_or("no entry")?;
    run_function(tp, &entry, &mut world.clone(), 10_000, Config { trace, ..Config::default() }).map_err(|e| e.to_string())
}

fn cve() -> Verdict {
    let r = run_cve_corpus();
    if r.is_ok() && r.executed() == 5 {
        Verdict::Pass(format!("{} corpus checks", r.executed()))
    } else {
        Verdict::Fail(r.to_string())
    }
}

fn properties() -> Verdict {
    let cfg = GenConfig { max_depth: PROPERTY_DEPTH, ..GenConfig::default() };
    let r = run_property_suite(PROPERTY_PROGRAMS, &cfg);
    let checks: u64 = r.runs.iter().map(|x| x.preservation_checks).sum();
    if r.is_ok() && r.executed() >= PROPERTY_PROGRAMS && checks > 0 {
        Verdict::Pass(format!("{} programs, {} steps, {checks} preservation checks, 0 violations", r.executed(), r.total_steps()))
    } else {
        Verdict::Fail(r.to_string())
    }
}

/// A bytes match over the context packet; 1 on extraction, 0 on fallback.
fn bytes_program(target: &str) -> String {
    format!(
        "fun main(option(struct xdp_md*) ctx) : int {{
            match ctx with
                | pnone => 0 - 1
                | psome c =>
                    match c.data with
                        | v, {target} => 1
                        | _ => 0
        }}"
    )
}

fn bounds() -> Verdict {
    let targets = [("uint8", 1usize), ("uint16", 2), ("uint", 4), ("ulong", 8), ("struct ethhdr", 14)];
    let mut cases = 0;
    for (target, size) in targets {
        let tp = match checked(&bytes_program(target)) {
            Ok(tp) => tp,
            Err(e) => return Verdict::Fail(format!("{target}: {e}")),
        };
        for len in 0..=2 * size {
            let packet: Vec<u8> = (0..len as u8).collect();
            let out = match run_entry(&tp, ExternalWorld::default().with_packet(packet), true) {
                Ok(o) => o,
                Err(e) => return Verdict::Fail(format!("{target} over {len} bytes: {e}")),
            };
            let rules: Vec<&str> = out.state.trace.iter().map(|t| t.rule).filter(|r| r.starts_with("MBYTES")).collect();
            let fits = len >= size;
            let (want_rule, want_value) = if fits { ("MBYTES", 1) } else { ("MBYTESF", 0) };
            if rules != [want_rule] || out.value != Value::int(want_value) {
                return Verdict::Fail(format!("{target} over {len} bytes: rules {rules:?}, value {}", out.value));
            }
            cases += 1;
        }
    }
    Verdict::Pass(format!("{cases} (target, length) cases"))
}

const WIDTHS: [(PrimTy, u32, bool); 4] =
    [(PrimTy::INT, 32, true), (PrimTy::LONG, 64, true), (PrimTy::UINT, 32, false), (PrimTy::ULONG, 64, false)];

/// Reduces `v` modulo 2^bits into the signed or unsigned range.
fn wrap_oracle(v: i128, bits: u32, signed: bool) -> i128 {
    let m = 1i128 << bits;
    let r = v.rem_euclid(m);
    if signed && r >= m / 2 {
        r - m
    } else {
        r
    }
}

/// The same operation on unbounded integers, then wrapped.
fn oracle(op: Bop, x: i128, y: i128, bits: u32, signed: bool) -> i128 {
    let raw = match op {
        Bop::Add => x + y,
        Bop::Sub => x - y,
        // Exact modulo 2^128, which 2^bits divides.
        Bop::Mul => (x as u128).wrapping_mul(y as u128) as i128,
        Bop::Div => x / y,
        Bop::Mod => x % y,
        Bop::And => x & y,
        Bop::Or => x | y,
        Bop::Xor => x ^ y,
        Bop::Shl => ((x.rem_euclid(1i128 << bits) as u128) << y) as i128,
        Bop::Shr => x >> y,
        _ => unreachable!("arithmetic only"),
    };
    wrap_oracle(raw, bits, signed)
}

fn unsafe_table() -> Verdict {
    let v = |t: PrimTy, x: i128| Value::Int(IntVal::wrap(t, x));
    let classes: [(&str, Bop, Value, Value); 8] = [
        ("zero divisor", Bop::Div, v(PrimTy::INT, 7), v(PrimTy::INT, 0)),
        ("zero divisor", Bop::Mod, v(PrimTy::ULONG, 7), v(PrimTy::ULONG, 0)),
        ("signed min / -1", Bop::Div, v(PrimTy::INT, i32::MIN as i128), v(PrimTy::INT, -1)),
        ("signed min / -1", Bop::Mod, v(PrimTy::LONG, i64::MIN as i128), v(PrimTy::LONG, -1)),
        ("shift >= width", Bop::Shl, v(PrimTy::INT, 1), v(PrimTy::INT, 32)),
        ("shift >= width", Bop::Shr, v(PrimTy::LONG, 808464432), v(PrimTy::LONG, 64)),
        ("negative shift", Bop::Shl, v(PrimTy::INT, 1), v(PrimTy::INT, -1)),
        ("negative shift", Bop::Shr, v(PrimTy::LONG, 1), v(PrimTy::LONG, -5)),
    ];
    for (class, op, a, b) in &classes {
        if !unsafe_op(*op, a, b) {
            return Verdict::Fail(format!("{class}: {a} {op:?} {b} reported safe"));
        }
    }
    const OPS: [Bop; 10] = [Bop::Add, Bop::Sub, Bop::Mul, Bop::Div, Bop::Mod, Bop::And, Bop::Or, Bop::Xor, Bop::Shl, Bop::Shr];
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut grid = 0;
    while grid < SAFE_GRID {
        let (t, bits, signed) = WIDTHS[rng.gen_range(0..WIDTHS.len())];
        let op = OPS[rng.gen_range(0..OPS.len())];
        let pick = |rng: &mut ChaCha8Rng| match rng.gen_range(0..3) {
            0 => wrap_oracle(rng.gen_range(-8..=8), bits, signed),
            1 => wrap_oracle(rng.gen::<i64>() as i128, bits, signed),
            _ => wrap_oracle(if rng.gen() { 1i128 << (bits - 1) } else { (1i128 << (bits - 1)) - 1 }, bits, signed),
        };
        let x = pick(&mut rng);
        let y = if matches!(op, Bop::Shl | Bop::Shr) { rng.gen_range(0..bits as i128) } else { pick(&mut rng) };
        let min = if signed { -(1i128 << (bits - 1)) } else { 0 };
        if matches!(op, Bop::Div | Bop::Mod) && (y == 0 || (signed && x == min && y == -1)) {
            continue;
        }
        let (a, b) = (v(t, x), v(t, y));
        if unsafe_op(op, &a, &b) {
            return Verdict::Fail(format!("{a} {op:?} {b} reported unsafe"));
        }
        let want = v(t, oracle(op, x, y, bits, signed));
        let got = bop_sem(op, &a, &b);
        if got != want {
            return Verdict::Fail(format!("{a} {op:?} {b}: got {got}, oracle {want}"));
        }
        grid += 1;
    }
    Verdict::Pass(format!("{} unsafe cases, {grid} safe pairs match the oracle", classes.len()))
}

fn differential() -> Verdict {
    let Some(cc) = resolve_cc(None) else {
        return Verdict::Skip("no C compiler configured".into());
    };
    let cases = generated_cases(DIFFERENTIAL_PROGRAMS, &GenConfig::default());
    let r = run_differential(&cases, Some(&cc));
    if let Some(reason) = &r.skipped {
        return Verdict::Skip(reason.clone());
    }
    if r.is_ok() && r.executed() >= DIFFERENTIAL_PROGRAMS {
        Verdict::Pass(format!("{} programs agree under {cc}", r.executed()))
    } else {
        Verdict::Fail(r.to_string())
    }
}

fn loops() -> Verdict {
    let tp = match checked(include_str!("../corpus/loop.bpl")) {
        Ok(tp) => tp,
        Err(e) => return Verdict::Fail(e),
    };
    match run_entry(&tp, ExternalWorld::default(), false) {
        Ok(o) if o.value == Value::int(7) => {}
        Ok(o) => return Verdict::Fail(format!("loop.bpl evaluates to {}", o.value)),
        Err(e) => return Verdict::Fail(e),
    }
    let mut cases = 0;
    for lo in -3i32..=3 {
        for hi in -3i32..=3 {
            for (dir, name, want) in [(Dir::Up, "Up", (hi - lo + 1).max(0)), (Dir::Down, "Down", (lo - hi + 1).max(0))] {
                let n = range(&Value::int(lo), &Value::int(hi), dir);
                let src = format!(
                    "fun main() : int {{ let x : int* = ref(0) in let _ = for({lo} ... {hi}, {name}) {{ x := !x + 1 }} in !x }}"
                );
                let counted = checked(&src).and_then(|tp| run_entry(&tp, ExternalWorld::default(), false)).map(|o| o.value);
                if n != want as u128 || counted != Ok(Value::int(want)) {
                    return Verdict::Fail(format!("for({lo} ... {hi}, {name}): range {n}, loop {counted:?}, oracle {want}"));
                }
                cases += 1;
            }
        }
    }
    Verdict::Pass(format!("loop.bpl = 7, {cases} range cases"))
}

fn main() {
    type Criterion = (&'static str, Duration, fn() -> Verdict);
    let criteria: [Criterion; 6] = [
        ("cve corpus", CVE_LIMIT, cve),
        ("metatheory properties", PROPERTY_LIMIT, properties),
        ("bounds exhaustion", BOUNDS_LIMIT, bounds),
        ("unsafe predicate", UNSAFE_LIMIT, unsafe_table),
        ("differential", DIFFERENTIAL_LIMIT, differential),
        ("loop semantics", LOOP_LIMIT, loops),
    ];
    let mut failed = 0;
    for (i, (name, limit, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let verdict = check();
        let t = start.elapsed();
        let verdict = match verdict {
            Verdict::Pass(_) if t > *limit => Verdict::Fail(format!("took {:.2}s, limit {:.0}s", t.as_secs_f64(), limit.as_secs_f64())),
            v => v,
        };
        let (tag, detail) = match &verdict {
            Verdict::Pass(d) => ("PASS", d),
            Verdict::Fail(d) => ("FAIL", d),
            Verdict::Skip(d) => ("SKIP", d),
        };
        println!("{tag} {}. {name} ({:.2}s): {detail}", i + 1, t.as_secs_f64());
        failed += matches!(verdict, Verdict::Fail(_)) as usize;
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
