use beepl_core::{Expr, Value};
use beepl_typecheck::TypedProgram;

use crate::state::{Config, State};
use crate::step::{step_mut, Fault};
use crate::world::ExternalWorld;

pub const DEFAULT_FUEL: u64 = 1_000_000;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EvalError {
    #[error("fuel exhausted after {steps} steps")]
    FuelExhausted { steps: u64 },
    #[error("stuck after {steps} steps: {fault}")]
    Stuck { fault: Fault, steps: u64 },
    #[error("no function `{0}` to run")]
    NoEntry(String),
}

/// Steps `e` to a value. The step count is exact: a value takes zero steps.
pub fn eval_multi(s: &mut State, w: &mut ExternalWorld, mut e: Expr, fuel: u64) -> Result<(Value, u64), EvalError> {
    let mut steps = 0;
    loop {
        if let Some(v) = e.as_value() {
            return Ok((v, steps));
        }
        if steps >= fuel {
            return Err(EvalError::FuelExhausted { steps });
        }
        step_mut(s, w, &mut e).map_err(|fault| EvalError::Stuck { fault, steps })?;
        steps += 1;
    }
}

/// The application expression that runs function `name` with arguments
/// built from the world.
pub fn entry_call(s: &mut State, w: &ExternalWorld, name: &str) -> Result<Expr, EvalError> {
    let fd = s.delta.funs.get(name).cloned().ok_or_else(|| EvalError::NoEntry(name.to_string()))?;
    let args = s.entry_args(&fd.args, w);
    Ok(Expr::app(name, args.iter().map(Expr::from_value).collect()))
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub value: Value,
    pub steps: u64,
    pub state: State,
}

pub fn run_function(
    tp: &TypedProgram,
    name: &str,
    w: &mut ExternalWorld,
    fuel: u64,
    config: Config,
) -> Result<Outcome, EvalError> {
    let mut s = State::new(tp);
    s.config = config;
    let e = entry_call(&mut s, w, name)?;
    let (value, steps) = eval_multi(&mut s, w, e, fuel)?;
    Ok(Outcome { value, steps, state: s })
}

/// The function a program runs when no entry is named: `main` if present,
/// else the first function with a section, else the last function.
pub fn default_entry(p: &beepl_core::Program) -> Option<String> {
    let funs: Vec<_> = p.functions().collect();
    funs.iter()
        .find(|f| f.name == "main")
        .or_else(|| funs.iter().find(|f| f.flag))
        .or_else(|| funs.last())
        .map(|f| f.name.clone())
}
