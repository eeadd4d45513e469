//! Differential runs: the interpreter against host C built by a system
//! compiler.

use std::path::Path;
use std::process::Command;
use std::time::Instant;

use beepl_cgen::{emit_program_with, EmitOptions, HostWorld, Mode};
use beepl_core::{Program, Value};
use beepl_interp::{default_entry, run_function, Config, ExternalWorld, DEFAULT_FUEL};
use beepl_typecheck::{check_program, TypedProgram};

use crate::gen::{generate_well_typed, GenConfig};
use crate::report::{Outcome, Reproducer, RunReport, SuiteReport};
use crate::shrink::shrink;
use crate::suite::{fan_out, print, program_seeds, world_for, SuiteOptions};

pub const CC_ENV: &str = "BEEPLC_CC";
const SHRINK_BUDGET: usize = 40;

#[derive(Debug, Clone)]
pub struct DiffCase {
    pub id: String,
    pub seed: u64,
    pub program: Program,
    pub world: ExternalWorld,
}

/// `n` generated programs with their worlds, numbered as in the property
/// suite.
pub fn generated_cases(n: usize, cfg: &GenConfig) -> Vec<DiffCase> {
    program_seeds(cfg.seed, n)
        .into_iter()
        .enumerate()
        .filter_map(|(i, seed)| {
            let program = generate_well_typed(&cfg.with_seed(seed)).ok()?;
            let world = world_for(seed, &program);
            Some(DiffCase { id: format!("differential#{i}"), seed, program, world })
        })
        .collect()
}

/// The compiler to use: `explicit`, else `$BEEPLC_CC`, else the first of
/// `cc`, `gcc` and `clang` that runs.
pub fn resolve_cc(explicit: Option<&str>) -> Option<String> {
    if let Some(c) = explicit {
        return Some(c.to_string());
    }
    if let Ok(c) = std::env::var(CC_ENV) {
        if !c.is_empty() {
            return Some(c);
        }
    }
    ["cc", "gcc", "clang"]
        .into_iter()
        .find(|c| Command::new(c).arg("--version").output().is_ok_and(|o| o.status.success()))
        .map(str::to_string)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Compiler {
    pub path: String,
    /// Whether the undefined-behavior sanitizer links.
    pub sanitize: bool,
}

impl Compiler {
    /// Checks that `path` compiles a trivial program.
    pub fn probe(path: &str) -> Option<Compiler> {
        let dir = tempfile::tempdir().ok()?;
        let src = dir.path().join("probe.c");
        std::fs::write(&src, "int main(void) { return 0; }\n").ok()?;
        let build = |flags: &[&str]| {
            Command::new(path)
                .args(flags)
                .arg("-o")
                .arg(dir.path().join("probe"))
                .arg(&src)
                .output()
                .is_ok_and(|o| o.status.success())
        };
        if !build(&["-std=c11"]) {
            return None;
        }
        Some(Compiler { path: path.to_string(), sanitize: build(&["-std=c11", "-fsanitize=undefined"]) })
    }

    /// Builds and runs `text`; returns stdout, stderr and the exit code.
    pub fn run(&self, dir: &Path, text: &str) -> Result<(String, String, i32), String> {
        let src = dir.join("prog.c");
        let exe = dir.join("prog");
        std::fs::write(&src, text).map_err(|e| e.to_string())?;
        let mut cmd = Command::new(&self.path);
        cmd.args(["-std=c11", "-O1", "-w"]);
        if self.sanitize {
            cmd.args(["-fsanitize=undefined", "-fno-sanitize-recover=all"]);
        }
        let out = cmd.arg("-o").arg(&exe).arg(&src).output().map_err(|e| e.to_string())?;
        if !out.status.success() {
            return Err(format!("compilation failed:\n{}", String::from_utf8_lossy(&out.stderr)));
        }
        let run = Command::new(&exe).output().map_err(|e| e.to_string())?;
        let code = run.status.code().ok_or("terminated by a signal")?;
        Ok((String::from_utf8_lossy(&run.stdout).into_owned(), String::from_utf8_lossy(&run.stderr).into_owned(), code))
    }
}

/// Compares the interpreter with compiled C on every case. A missing
/// compiler or an empty case list skips the suite.
pub fn run_differential(cases: &[DiffCase], cc: Option<&str>) -> SuiteReport {
    run_differential_with(cases, cc, &SuiteOptions::default())
}

pub fn run_differential_with(cases: &[DiffCase], cc: Option<&str>, opts: &SuiteOptions) -> SuiteReport {
    let seed = cases.first().map_or(0, |c| c.seed);
    if cases.is_empty() {
        return SuiteReport::skipped("differential", seed, "no programs");
    }
    let Some(path) = cc else {
        return SuiteReport::skipped("differential", seed, "no C compiler configured");
    };
    let Some(compiler) = Compiler::probe(path) else {
        return SuiteReport::skipped("differential", seed, format!("C compiler `{path}` is unavailable"));
    };
    let start = Instant::now();
    let runs = fan_out(cases.len(), opts.threads, |i| diff_run(&cases[i], &compiler));
    SuiteReport { runs, elapsed: start.elapsed(), ..SuiteReport::new("differential", seed) }
}

fn scalar(v: &Value) -> Option<i128> {
    match v {
        Value::Int(i) => Some(i.value()),
        Value::Bool(b) => Some(*b as i128),
        _ => None,
    }
}

/// Interpreter result and C result for one program, or why they differ.
fn compare(tp: &TypedProgram, world: &ExternalWorld, compiler: &Compiler) -> Result<(i128, u64), String> {
    let entry = default_entry(&tp.program).ok_or("program has no functions")?;
    let out = run_function(tp, &entry, &mut world.clone(), DEFAULT_FUEL, Config::default()).map_err(|e| format!("interpreter: {e}"))?;
    let want = scalar(&out.value).ok_or_else(|| format!("entry returned the non-scalar {}", out.value))?;
    let opts = EmitOptions { mode: Mode::Host, entry: Some(entry), world: HostWorld::from(world) };
    let unit = emit_program_with(tp, &opts).map_err(|e| format!("code generation: {e}"))?;
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let (stdout, stderr, code) = compiler.run(dir.path(), &unit.text)?;
    if !stderr.trim().is_empty() {
        return Err(format!("C run reported: {}", stderr.trim()));
    }
    let printed = stdout.trim();
    if printed != want.to_string() || code as i128 != want & 255 {
        return Err(format!("interpreter {want}, C printed `{printed}` and exited {code}"));
    }
    Ok((want, out.steps))
}

fn diff_run(case: &DiffCase, compiler: &Compiler) -> RunReport {
    let start = Instant::now();
    let tp = match check_program(&case.program) {
        Ok(tp) => tp,
        Err(d) => return RunReport::new(&case.id, case.seed, Outcome::Diagnostic(d.to_string())),
    };
    let mut report = match compare(&tp, &case.world, compiler) {
        Ok((v, steps)) => RunReport { steps, ..RunReport::new(&case.id, case.seed, Outcome::Value(v.to_string())) },
        Err(detail) => {
            let mut still = |t: &TypedProgram| compare(t, &case.world, compiler).is_err();
            let small = shrink(&tp.program, &mut still, SHRINK_BUDGET).program;
            let reproducer = Reproducer { seed: case.seed, program: print(&small), packet_hex: hex::encode(&case.world.packet) };
            let outcome = Outcome::Violation { property: "compiler-correctness".into(), detail, reproducer: Box::new(reproducer) };
            RunReport::new(&case.id, case.seed, outcome)
        }
    };
    report.elapsed = start.elapsed();
    report
}
