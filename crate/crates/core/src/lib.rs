//! Static latency bounds for multi-peer programs.
//!
//! Programs place definitions on peer types and reach other peers with
//! `get P { t }`. The [`typer`] assigns every term an upper bound on its
//! latency, possibly depending on input sizes; the [`runtime`] evaluates
//! programs over concrete peer instances and measures the latency actually
//! incurred, so the two can be compared.

pub mod arith;
pub mod fuzz;
pub mod syntax;
pub mod topology;
pub mod runtime;
pub mod typer;

pub use arith::{ArithTerm, Assignment, AssumptionSet, Constraint, TriState};
pub use syntax::{parse, pretty, BasicType, PeerType, Program, SizedType, Term};
pub use topology::{load_topology, LatencyMatrix, PeerInstance, TopologyError};
pub use typer::{typecheck_program, typecheck_term, TypeError, TypeErrorKind};
pub use runtime::{check_soundness, enumerate_runs, run, RunResult, RuntimeError, Strategy, Verdict};
