//! Simple tree-based (1+1) genetic-programming hill climbers on the ORDER
//! and MAJORITY model problems.
//!
//! The crate provides:
//!
//! - [`tree`]: arena-backed binary parse trees with the HVL-Mutate' edit
//!   primitives (substitute, insert, delete), uniform node/leaf sampling,
//!   and a canonical text serialization;
//! - [`problems`]: ORDER and MAJORITY fitness, per-variable deficit
//!   bookkeeping, and the exact stuck characterization for strict
//!   single-step climbing on MAJORITY;
//! - [`engine`]: the (1+1) evolutionary loop with configurable acceptance
//!   (neutral moves in or out) and proposal size (one step or
//!   `1 + Pois(1)` steps);
//! - [`init`]: the initial solutions runs start from;
//! - [`oracle`]: exact, exhaustive verification machinery built on
//!   rational arithmetic.

pub mod engine;
pub mod init;
pub mod oracle;
pub mod parse;
pub mod problems;
pub mod terminal;
pub mod tree;

pub use engine::{
    accept, run, sample_op_count, AcceptancePolicy, EngineError, OpCountPolicy, RunConfig,
    RunResult, RunStatus, TraceLevel,
};
pub use init::{
    init_adversarial_majority, init_from_text, init_t_lopt, init_unity_expectation, InitError,
    InitSpec,
};
pub use parse::{parse_tree, serialize, TreeParseError};
pub use problems::{
    is_stuck_gpstar_single_majority, majority_fitness, order_fitness, DeficitProfile,
    ExecutionPath, Fitness, OrderEvaluator, ProblemKind,
};
pub use terminal::Terminal;
pub use tree::{GpTree, LeafRef, MutationOp, MutationRecord, NodePath, NodeRef, Side, StaleHandle};
