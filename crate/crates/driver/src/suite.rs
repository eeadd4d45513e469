//! The metatheory property suite over generated programs.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use beepl_core::{Decl, EffAtom, GlobInit, Program};
use beepl_interp::check::{run_checked, CheckOptions};
use beepl_interp::{default_entry, Config, ExternalWorld};
use beepl_typecheck::{check_program, TypedProgram};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::gen::{generate_well_typed, GenConfig, GenError};
use crate::report::{Outcome, Reproducer, RunReport, SuiteReport};
use crate::shrink::shrink;

pub const SUITE_FUEL: u64 = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SuiteOptions {
    pub fuel: u64,
    /// Interpreter configuration; the mutation tests switch guards off here.
    pub config: Config,
    pub threads: usize,
    /// Predicate evaluations the shrinker may spend per failure.
    pub shrink_budget: usize,
}

impl Default for SuiteOptions {
    fn default() -> SuiteOptions {
        SuiteOptions {
            fuel: SUITE_FUEL,
            config: Config::default(),
            threads: std::thread::available_parallelism().map_or(1, |n| n.get()),
            shrink_budget: 300,
        }
    }
}

/// Per-program seeds, fixed by the suite seed alone.
pub fn program_seeds(seed: u64, n: usize) -> Vec<u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.gen()).collect()
}

/// The external world a generated program runs against: a packet of random
/// length, sometimes carrying an IPv4 or IPv6 ethertype, and a few entries
/// in each declared map.
pub fn world_for(seed: u64, p: &Program) -> ExternalWorld {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5EED_F00D);
    let len = match rng.gen_range(0..4) {
        0 => 0,
        1 => rng.gen_range(1..14),
        _ => rng.gen_range(14..=64),
    };
    let mut packet: Vec<u8> = (0..len).map(|_| rng.gen()).collect();
    if len >= 14 && rng.gen_bool(0.6) {
        let proto: [u8; 2] = if rng.gen_bool(0.5) { [0x86, 0xDD] } else { [0x08, 0x00] };
        packet[12..14].copy_from_slice(&proto);
    }
    let mut w = ExternalWorld::default().with_packet(packet);
    let uid = (w.uid_gid & 0xFFFF_FFFF) as i64;
    for d in &p.decls {
        if let Decl::Glob(g) = d {
            if g.init == GlobInit::Map {
                for key in [0, 1, 2, uid, rng.gen_range(-64..=64)] {
                    if rng.gen_bool(0.7) {
                        w = w.with_map_entry(&g.name, key, rng.gen_range(-100..=100));
                    }
                }
            }
        }
    }
    w
}

/// A clean checked run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Audit {
    pub value: String,
    pub steps: u64,
    pub preservation_checks: u64,
    pub wf_checks: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Failure {
    pub property: String,
    pub detail: String,
}

impl Failure {
    fn new(property: &str, detail: impl Into<String>) -> Failure {
        Failure { property: property.into(), detail: detail.into() }
    }
}

/// Runs the entry of `tp` with every per-step monitor on, after checking
/// that no inferred effect contains divergence.
pub fn audit_program(tp: &TypedProgram, world: &ExternalWorld, opts: &SuiteOptions) -> Result<Audit, Failure> {
    if let Some((f, _)) = tp.effects.iter().find(|(_, e)| e.contains(EffAtom::Divergence)) {
        return Err(Failure::new("termination", format!("the effect of `{f}` contains divergence")));
    }
    let entry = default_entry(&tp.program).ok_or_else(|| Failure::new("entry", "program has no functions"))?;
    let copts = CheckOptions { fuel: opts.fuel, config: opts.config, ..CheckOptions::default() };
    match run_checked(tp, &entry, &mut world.clone(), &copts) {
        Ok(run) => Ok(Audit {
            value: run.value.to_string(),
            steps: run.steps,
            preservation_checks: run.preservation_checks,
            wf_checks: run.wf_checks,
        }),
        Err(v) => Err(Failure::new(v.property(), v.to_string())),
    }
}

/// Maps `f` over `0..n` on up to `threads` workers; results keep index order.
pub fn fan_out<T: Send>(n: usize, threads: usize, f: impl Fn(usize) -> T + Sync) -> Vec<T> {
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<T>>> = Mutex::new((0..n).map(|_| None).collect());
    std::thread::scope(|s| {
        for _ in 0..threads.clamp(1, n.max(1)) {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= n {
                    break;
                }
                let r = f(i);
                slots.lock().expect("no worker panicked")[i] = Some(r);
            });
        }
    });
    slots.into_inner().expect("no worker panicked").into_iter().map(|r| r.expect("every index ran")).collect()
}

/// Generates `n` programs from `cfg` and audits each one.
pub fn run_property_suite(n: usize, cfg: &GenConfig) -> SuiteReport {
    run_property_suite_with(n, cfg, &SuiteOptions::default())
}

pub fn run_property_suite_with(n: usize, cfg: &GenConfig, opts: &SuiteOptions) -> SuiteReport {
    let start = Instant::now();
    let seeds = program_seeds(cfg.seed, n);
    let runs = fan_out(n, opts.threads, |i| property_run(i, seeds[i], cfg, opts));
    SuiteReport { runs, elapsed: start.elapsed(), ..SuiteReport::new("property", cfg.seed) }
}

fn property_run(i: usize, seed: u64, cfg: &GenConfig, opts: &SuiteOptions) -> RunReport {
    let start = Instant::now();
    let id = format!("property#{i}");
    let p = match generate_well_typed(&cfg.with_seed(seed)) {
        Ok(p) => p,
        Err(e @ GenError::GenerationExhausted { .. }) => return RunReport::new(id, seed, Outcome::Skipped(e.to_string())),
        Err(GenError::IllTyped { diagnostic, program, .. }) => {
            let reproducer = Reproducer { seed, program: print(&program), packet_hex: String::new() };
            let outcome = Outcome::Violation { property: "generator".into(), detail: diagnostic, reproducer: Box::new(reproducer) };
            return RunReport::new(id, seed, outcome);
        }
    };
    let tp = check_program(&p).expect("generator output checks");
    let world = world_for(seed, &p);
    let mut report = match audit_program(&tp, &world, opts) {
        Ok(a) => RunReport {
            steps: a.steps,
            preservation_checks: a.preservation_checks,
            wf_checks: a.wf_checks,
            ..RunReport::new(id, seed, Outcome::Value(a.value))
        },
        Err(f) => {
            let mut same = |t: &TypedProgram| audit_program(t, &world, opts).is_err_and(|g| g.property == f.property);
            let small = shrink(&tp.program, &mut same, opts.shrink_budget).program;
            let reproducer = Reproducer { seed, program: print(&small), packet_hex: hex::encode(&world.packet) };
            RunReport::new(id, seed, Outcome::Violation { property: f.property, detail: f.detail, reproducer: Box::new(reproducer) })
        }
    };
    report.elapsed = start.elapsed();
    report
}

pub(crate) fn print(p: &Program) -> String {
    beepl_frontend::print_program(p).unwrap_or_else(|e| format!("// unprintable program: {e}\n{p:?}"))
}
