//! Small-step reference interpreter for BeePL.
//!
//! Memory is a set of numbered blocks; a pointer is a block and an offset.
//! [`step`] performs one reduction and [`eval_multi`] iterates it under a
//! fuel bound. [`check`] re-typechecks every intermediate expression and
//! validates the state as evaluation proceeds.

pub mod check;
mod eval;
mod extract;
mod memory;
mod ops;
mod state;
mod step;
mod subst;
mod wf;
mod world;

pub use eval::{default_entry, entry_call, eval_multi, run_function, EvalError, Outcome, DEFAULT_FUEL};
pub use extract::{extract, ExtractError, Extracted};
pub use memory::{Block, MemError, Memory, Perm};
pub use ops::{bop_guarded, bop_sem, range, unsafe_op, uop_sem};
pub use state::{Config, Delta, Frame, Monitor, State, TraceLine};
pub use step::{step, step_mut, Fault, StepOutcome};
pub use subst::{subst, subst_in_place};
pub use wf::{is_well_formed, well_formed, WfError};
pub use world::{decode_packet_hex, ExternalWorld, IoEvent, PacketError, DEFAULT_UID_GID};
