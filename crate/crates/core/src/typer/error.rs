use std::fmt;

use crate::arith::{Assignment, Constraint};
use crate::syntax::Pos;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TypeErrorKind {
    Mismatch,
    UnboundVar,
    UnprovenBound,
    NonDecreasingRecursion,
    PlacementError,
    ArithUnknown,
}

impl fmt::Display for TypeErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            TypeErrorKind::Mismatch => "Mismatch",
            TypeErrorKind::UnboundVar => "UnboundVar",
            TypeErrorKind::UnprovenBound => "UnprovenBound",
            TypeErrorKind::NonDecreasingRecursion => "NonDecreasingRecursion",
            TypeErrorKind::PlacementError => "PlacementError",
            TypeErrorKind::ArithUnknown => "ArithUnknown",
        };
        f.write_str(s)
    }
}

/// A rejected typing obligation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TypeError {
    pub kind: TypeErrorKind,
    /// Position of the enclosing definition (or `main`).
    pub pos: Pos,
    pub message: String,
    pub unproved: Option<Constraint>,
    /// Assignment violating `unproved`, when the prover found one.
    pub witness: Option<Assignment>,
}

impl TypeError {
    pub(crate) fn new(kind: TypeErrorKind, message: impl Into<String>) -> Self {
        TypeError {
            kind,
            pos: Pos::default(),
            message: message.into(),
            unproved: None,
            witness: None,
        }
    }

    /// One-line rendering: `ERROR <file>:<line>:<col> [<kind>] <message>; unproved: <constraint>`.
    pub fn render(&self, file: &str) -> String {
        let mut out = format!("ERROR {file}:{} [{}] {}", self.pos, self.kind, self.message);
        if let Some(c) = &self.unproved {
            out.push_str(&format!("; unproved: {c}"));
        }
        out
    }
}

impl fmt::Display for TypeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}] {}", self.kind, self.message)?;
        if let Some(c) = &self.unproved {
            write!(f, "; unproved: {c}")?;
        }
        if let Some(w) = &self.witness {
            let pairs: Vec<String> = w.iter().map(|(k, v)| format!("{k}={v}")).collect();
            write!(f, " (counterexample: {})", pairs.join(", "))?;
        }
        Ok(())
    }
}

impl std::error::Error for TypeError {}
