//! The `beeplc` command line.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use beepl_cgen::{emit_program_with, CgenError, EmitOptions, Mode};
use beepl_frontend::{parse_program, Diagnostic};
use beepl_interp::{decode_packet_hex, default_entry, run_function, Config, EvalError, ExternalWorld, DEFAULT_FUEL};
use beepl_typecheck::{check_program, TypedProgram};
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::cve::run_cve_corpus;
use crate::diff::{generated_cases, resolve_cc, run_differential};
use crate::gen::GenConfig;
use crate::report::SuiteReport;
use crate::suite::run_property_suite;

pub const EXIT_OK: i32 = 0;
pub const EXIT_DIAGNOSTICS: i32 = 1;
pub const EXIT_VIOLATION: i32 = 2;
pub const EXIT_USAGE: i32 = 3;

/// Differential programs in a self-test, at most.
const SELFTEST_DIFFERENTIAL: usize = 100;

#[derive(Debug, Parser)]
#[command(name = "beeplc", version, about = "Checker, interpreter and C back end for BeePL")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Parse and type-check a program.
    Check {
        file: PathBuf,
        /// Print diagnostics and inferred effects as JSON.
        #[arg(long)]
        json: bool,
    },
    /// Run a program in the reference interpreter.
    Run {
        file: PathBuf,
        /// Function to run; defaults to `main`, then the first section entry.
        #[arg(long)]
        entry: Option<String>,
        #[arg(long, default_value_t = DEFAULT_FUEL)]
        fuel: u64,
        /// Print every reduction step.
        #[arg(long)]
        trace: bool,
        /// Packet for the context argument, as a hex file.
        #[arg(long)]
        packet: Option<PathBuf>,
    },
    /// Translate a program to C.
    #[command(name = "emit-c")]
    EmitC {
        file: PathBuf,
        #[arg(short = 'o', value_name = "OUT.c")]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t = ModeArg::Ebpf)]
        mode: ModeArg,
    },
    /// Run the corpus, property and differential suites.
    Selftest {
        /// Generated programs in the property suite.
        #[arg(long, default_value_t = 1000)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// C compiler for the differential suite; overrides BEEPLC_CC.
        #[arg(long)]
        cc: Option<String>,
        #[arg(long)]
        skip_differential: bool,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Ebpf,
    Host,
}

struct Io<'a> {
    out: &'a mut dyn Write,
    err: &'a mut dyn Write,
}

/// Runs the command line `args` (program name first) and returns the exit
/// code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { err.write_all(text.as_bytes()) } else { out.write_all(text.as_bytes()) };
            return code;
        }
    };
    let mut io = Io { out, err };
    match cli.cmd {
        Cmd::Check { file, json } => check(&mut io, &file, json),
        Cmd::Run { file, entry, fuel, trace, packet } => run_file(&mut io, &file, entry, fuel, trace, packet.as_deref()),
        Cmd::EmitC { file, out, mode } => emit(&mut io, &file, &out, mode),
        Cmd::Selftest { n, seed, cc, skip_differential } => selftest(&mut io, n, seed, cc.as_deref(), skip_differential),
    }
}

fn read(io: &mut Io, file: &Path) -> Result<String, i32> {
    std::fs::read_to_string(file).map_err(|e| {
        let _ = writeln!(io.err, "beeplc: cannot read {}: {e}", file.display());
        EXIT_USAGE
    })
}

#[allow(clippy::result_large_err)]
fn load(src: &str) -> Result<TypedProgram, Diagnostic> {
    check_program(&parse_program(src)?)
}

fn report_diag(io: &mut Io, file: &Path, d: &Diagnostic) -> i32 {
    let _ = writeln!(io.err, "{}", d.render(&file.display().to_string()));
    EXIT_DIAGNOSTICS
}

fn check(io: &mut Io, file: &Path, as_json: bool) -> i32 {
    let src = match read(io, file) {
        Ok(s) => s,
        Err(code) => return code,
    };
    let result = load(&src);
    if as_json {
        let v = match &result {
            Ok(tp) => json!({
                "file": file.display().to_string(),
                "ok": true,
                "diagnostics": [],
                "functions": tp.program.functions().map(|f| json!({
                    "name": f.name,
                    "type": tp.funs[&f.name].fun_ty().to_string(),
                    "effect": tp.effects[&f.name].to_string(),
                })).collect::<Vec<_>>(),
            }),
            Err(d) => json!({
                "file": file.display().to_string(),
                "ok": false,
                "diagnostics": [d.to_json_value()],
                "functions": [],
            }),
        };
        let _ = writeln!(io.out, "{}", serde_json::to_string_pretty(&v).expect("json"));
        return if result.is_ok() { EXIT_OK } else { EXIT_DIAGNOSTICS };
    }
    match result {
        Ok(tp) => {
            for f in tp.program.functions() {
                let _ = writeln!(io.out, "{} : {}, {}", f.name, tp.funs[&f.name].fun_ty(), tp.effects[&f.name]);
            }
            EXIT_OK
        }
        Err(d) => report_diag(io, file, &d),
    }
}

fn run_file(io: &mut Io, file: &Path, entry: Option<String>, fuel: u64, trace: bool, packet: Option<&Path>) -> i32 {
    let src = match read(io, file) {
        Ok(s) => s,
        Err(code) => return code,
    };
    let tp = match load(&src) {
        Ok(tp) => tp,
        Err(d) => return report_diag(io, file, &d),
    };
    let mut world = ExternalWorld::default();
    if let Some(path) = packet {
        let text = match read(io, path) {
            Ok(t) => t,
            Err(code) => return code,
        };
        match decode_packet_hex(&text) {
            Ok(bytes) => world.packet = bytes,
            Err(e) => {
                let _ = writeln!(io.err, "beeplc: {}: {e}", path.display());
                return EXIT_USAGE;
            }
        }
    }
    let Some(entry) = entry.or_else(|| default_entry(&tp.program)) else {
        let _ = writeln!(io.err, "beeplc: {} declares no function to run", file.display());
        return EXIT_USAGE;
    };
    let config = Config { trace, ..Config::default() };
    match run_function(&tp, &entry, &mut world, fuel, config) {
        Ok(outcome) => {
            for line in &outcome.state.trace {
                let _ = writeln!(io.err, "{:<8} {}", line.rule, line.redex);
            }
            let _ = writeln!(io.out, "{}", outcome.value);
            let _ = writeln!(io.err, "{} steps", outcome.steps);
            EXIT_OK
        }
        Err(EvalError::NoEntry(name)) => {
            let _ = writeln!(io.err, "beeplc: no function `{name}` in {}", file.display());
            EXIT_USAGE
        }
        Err(e) => {
            let _ = writeln!(io.err, "beeplc: {e}");
            EXIT_VIOLATION
        }
    }
}

fn emit(io: &mut Io, file: &Path, out: &Path, mode: ModeArg) -> i32 {
    let src = match read(io, file) {
        Ok(s) => s,
        Err(code) => return code,
    };
    let tp = match load(&src) {
        Ok(tp) => tp,
        Err(d) => return report_diag(io, file, &d),
    };
    let mode = match mode {
        ModeArg::Ebpf => Mode::Ebpf,
        ModeArg::Host => Mode::Host,
    };
    match emit_program_with(&tp, &EmitOptions { mode, ..EmitOptions::default() }) {
        Ok(unit) => match std::fs::write(out, unit.text) {
            Ok(()) => EXIT_OK,
            Err(e) => {
                let _ = writeln!(io.err, "beeplc: cannot write {}: {e}", out.display());
                EXIT_USAGE
            }
        },
        Err(e @ CgenError::NoEntry(_)) => {
            let _ = writeln!(io.err, "beeplc: {e}");
            EXIT_USAGE
        }
        Err(e) => {
            let _ = writeln!(io.err, "beeplc: {e}");
            EXIT_VIOLATION
        }
    }
}

fn selftest(io: &mut Io, n: usize, seed: u64, cc: Option<&str>, skip_differential: bool) -> i32 {
    let cfg = GenConfig { seed, max_depth: crate::gen::MAX_DEPTH, ..GenConfig::default() };
    let mut reports: Vec<SuiteReport> = vec![run_cve_corpus(), run_property_suite(n, &cfg)];
    if skip_differential {
        reports.push(SuiteReport::skipped("differential", seed, "--skip-differential"));
    } else {
        let cases = generated_cases(n.min(SELFTEST_DIFFERENTIAL), &cfg);
        reports.push(run_differential(&cases, resolve_cc(cc).as_deref()));
    }
    let mut code = EXIT_OK;
    for r in &reports {
        let _ = writeln!(io.out, "{r}");
        if !r.is_ok() {
            code = EXIT_VIOLATION;
        }
    }
    code
}
