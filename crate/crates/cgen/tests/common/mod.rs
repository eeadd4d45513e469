#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::Command;

use beepl_frontend::parse_program;
use beepl_typecheck::{check_program, TypedProgram};

pub fn corpus_src(name: &str) -> String {
    let p = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../driver/corpus").join(name);
    std::fs::read_to_string(p).unwrap()
}

pub fn checked(src: &str) -> TypedProgram {
    check_program(&parse_program(src).unwrap()).unwrap()
}

pub fn corpus(name: &str) -> TypedProgram {
    checked(&corpus_src(name))
}

/// A working C compiler, if the machine has one.
pub fn cc() -> Option<String> {
    let candidates = std::env::var("BEEPLC_CC").ok().into_iter().chain(["cc".to_string(), "gcc".into(), "clang".into()]);
    candidates.into_iter().find(|c| Command::new(c).arg("--version").output().is_ok_and(|o| o.status.success()))
}

pub fn has_bpf_clang() -> bool {
    Command::new("clang").args(["-target", "bpf", "--version"]).output().is_ok_and(|o| o.status.success())
}

/// Compiles `text` with sanitizers and runs it; returns stdout and exit code.
pub fn compile_and_run(cc: &str, dir: &Path, text: &str) -> (String, i32) {
    let src = dir.join("prog.c");
    let exe = dir.join("prog");
    std::fs::write(&src, text).unwrap();
    let out = Command::new(cc)
        .args(["-std=c11", "-O1", "-w", "-fsanitize=undefined", "-fno-sanitize-recover=all", "-o"])
        .arg(&exe)
        .arg(&src)
        .output()
        .unwrap();
    assert!(out.status.success(), "compile failed:\n{}\n{text}", String::from_utf8_lossy(&out.stderr));
    let run = Command::new(&exe).output().unwrap();
    assert!(run.stderr.is_empty(), "runtime error:\n{}", String::from_utf8_lossy(&run.stderr));
    (String::from_utf8(run.stdout).unwrap(), run.status.code().unwrap_or(-1))
}
