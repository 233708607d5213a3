//! Integer programs for the relocation problem: builders, LP text, the
//! sequence codec, a constraint checker and solver backends.

pub mod backend;
pub mod check;
pub mod codec;
pub mod lp;
pub mod model;

pub use backend::{
    parse_solution, Backend, BackendError, Budget, ExternalBackend, InternalBackend, SolveOutcome,
    SolveStatus, SOLVER_CMD_ENV,
};
pub use check::{check_assignment, CheckError, FeasibilityReport, Violation};
pub use codec::{decode_assignment, encode_sequence, Assignment, CodecError};
pub use lp::{emit_lp, emit_program, parse_lp, LpParseError};
pub use model::{
    build_brp_m3, build_brp_m3r, expected_binary_count, Group, Model, ModelError, ModelMeta, Program,
    Variant,
};
