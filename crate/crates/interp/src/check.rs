//! Evaluation with the metatheory checked at every step.

use std::collections::BTreeMap;

use beepl_core::{Effect, Expr, Ty, Value};
use beepl_typecheck::{infer_expr, TypedProgram, TypingContext};

use crate::eval::entry_call;
use crate::memory::Memory;
use crate::state::{Config, State};
use crate::step::{step_mut, Fault};
use crate::wf::{well_formed, WfError};
use crate::world::ExternalWorld;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CheckOptions {
    pub fuel: u64,
    pub preservation: bool,
    pub well_formed: bool,
    /// Compare untouched blocks across allocating steps.
    pub allocation: bool,
    pub config: Config,
}

impl Default for CheckOptions {
    fn default() -> CheckOptions {
        CheckOptions {
            fuel: crate::DEFAULT_FUEL,
            preservation: true,
            well_formed: true,
            allocation: true,
            config: Config::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum Violation {
    #[error("initial expression does not type: {0}")]
    IllTyped(String),
    #[error("progress: stuck at step {step}: {fault}")]
    Progress { step: u64, fault: Fault },
    #[error("null safety: {fault} at step {step}")]
    NullDeref { step: u64, fault: Fault },
    #[error("initialization: {fault} at step {step}")]
    Uninit { step: u64, fault: Fault },
    #[error("undefined behavior: {fault} at step {step}")]
    Undef { step: u64, fault: Fault },
    #[error("preservation after {rule} at step {step}: {detail}")]
    Preservation { step: u64, rule: &'static str, detail: String },
    #[error("well-formedness after {rule} at step {step}: {err}")]
    WellFormed { step: u64, rule: &'static str, err: WfError },
    #[error("allocation by {rule} at step {step} disturbed block {block}")]
    Allocation { step: u64, rule: &'static str, block: u64 },
    #[error("termination: fuel exhausted after {steps} steps")]
    Termination { steps: u64 },
}

impl Violation {
    /// Short name of the property that failed.
    pub fn property(&self) -> &'static str {
        match self {
            Violation::IllTyped(_) => "typing",
            Violation::Progress { .. } => "progress",
            Violation::NullDeref { .. } => "null-safety",
            Violation::Uninit { .. } => "initialization",
            Violation::Undef { .. } => "never-undef",
            Violation::Preservation { .. } => "preservation",
            Violation::WellFormed { .. } => "well-formedness",
            Violation::Allocation { .. } => "allocation",
            Violation::Termination { .. } => "termination",
        }
    }
}

#[derive(Debug, Clone)]
pub struct CheckedRun {
    pub value: Value,
    pub steps: u64,
    pub ty: Ty,
    pub effect: Effect,
    pub preservation_checks: u64,
    pub wf_checks: u64,
    pub rules: BTreeMap<&'static str, u64>,
    pub state: State,
}

const ALLOCATING: &[&str] = &["REFV", "STRUCTV", "APP3", "MBYTES", "EAPP", "DREFV"];

fn classify(step: u64, fault: Fault) -> Violation {
    match fault {
        Fault::NullDeref(_) => Violation::NullDeref { step, fault },
        Fault::Uninit(_) => Violation::Uninit { step, fault },
        Fault::Undef(_) => Violation::Undef { step, fault },
        _ => Violation::Progress { step, fault },
    }
}

fn disturbed(before: &Memory, after: &Memory) -> Option<u64> {
    before.blocks.iter().find(|(b, k)| after.blocks.get(b) != Some(k)).map(|(b, _)| b.0)
}

/// Evaluates `e` from `s`, checking after every step that the expression
/// keeps its type with a smaller effect, that the state stays well formed and
/// that allocation leaves existing blocks alone.
pub fn eval_checked(
    s: &mut State,
    base: &TypingContext,
    w: &mut ExternalWorld,
    mut e: Expr,
    opts: &CheckOptions,
) -> Result<CheckedRun, Violation> {
    s.config = opts.config;
    let gamma = base.gamma.clone();
    let (ty, mut eff) =
        infer_expr(&s.typing_context(base), &e).map_err(|d| Violation::IllTyped(d.to_string()))?;
    let mut run = CheckedRun {
        value: Value::Unit,
        steps: 0,
        ty: ty.clone(),
        effect: eff.clone(),
        preservation_checks: 0,
        wf_checks: 0,
        rules: BTreeMap::new(),
        state: State::bare(Default::default(), Default::default()),
    };
    loop {
        if let Some(v) = e.as_value() {
            if v.is_undef() {
                return Err(Violation::Undef { step: run.steps, fault: Fault::Undef("result".into()) });
            }
            run.value = v;
            run.state = s.clone();
            return Ok(run);
        }
        if run.steps >= opts.fuel {
            return Err(Violation::Termination { steps: run.steps });
        }
        let snapshot = opts.allocation.then(|| s.theta.clone());
        let rule = match step_mut(s, w, &mut e) {
            Ok(Some(r)) => r,
            Ok(None) => unreachable!("values handled above"),
            Err(f) => return Err(classify(run.steps, f)),
        };
        run.steps += 1;
        *run.rules.entry(rule).or_default() += 1;
        let step = run.steps;
        if e.contains_internal() {
            let mut undef = false;
            e.walk(&mut |n| undef |= matches!(n.kind, beepl_core::ExprKind::Undef));
            if undef {
                return Err(Violation::Undef { step, fault: Fault::Undef(rule.into()) });
            }
        }
        if let (Some(before), true) = (snapshot, ALLOCATING.contains(&rule)) {
            if let Some(block) = disturbed(&before, &s.theta) {
                return Err(Violation::Allocation { step, rule, block });
            }
        }
        if opts.preservation {
            run.preservation_checks += 1;
            match infer_expr(&s.typing_context(base), &e) {
                Ok((t2, e2)) => {
                    if t2 != ty {
                        let detail = format!("type changed from `{ty}` to `{t2}`");
                        return Err(Violation::Preservation { step, rule, detail });
                    }
                    if !e2.subset_of(&eff) {
                        let detail = format!("effect grew from {eff} to {e2}");
                        return Err(Violation::Preservation { step, rule, detail });
                    }
                    eff = e2;
                }
                Err(d) => return Err(Violation::Preservation { step, rule, detail: d.to_string() }),
            }
        }
        if opts.well_formed {
            run.wf_checks += 1;
            well_formed(&gamma, &s.sigma, s).map_err(|err| Violation::WellFormed { step, rule, err })?;
        }
    }
}

/// Runs function `name` of a checked program under [`eval_checked`].
pub fn run_checked(
    tp: &TypedProgram,
    name: &str,
    w: &mut ExternalWorld,
    opts: &CheckOptions,
) -> Result<CheckedRun, Violation> {
    let mut s = State::new(tp);
    let e = entry_call(&mut s, w, name).map_err(|e| Violation::IllTyped(e.to_string()))?;
    if opts.well_formed {
        well_formed(&[], &s.sigma, &s).map_err(|err| Violation::WellFormed { step: 0, rule: "init", err })?;
    }
    eval_checked(&mut s, &tp.context(), w, e, opts)
}
