//! Symbolic natural-number arithmetic for sizes and latency bounds.
//!
//! Terms range over `0`, successor, `+`, `*`, `min` and `max` with named
//! variables that always stand for naturals. There is no subtraction, so
//! every operator is monotone in every variable; the prover and the typer
//! both lean on that fact.

mod normal;
mod prover;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use num_bigint::BigUint;
use num_traits::{One, Zero};
use thiserror::Error;

pub use normal::{normalize, Monomial, NormalForm, Poly};
pub use prover::{
    falsify, prove_eq, prove_leq, AssumptionSet, Constraint, Relation, TriState,
    DEFAULT_PROVER_BUDGET,
};

/// Natural-number valuation of size variables.
pub type Assignment = BTreeMap<String, BigUint>;

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ArithTerm {
    Zero,
    /// Decimal literal; equivalent to the matching `Succ` chain.
    Lit(BigUint),
    Succ(Box<ArithTerm>),
    Var(String),
    Add(Box<ArithTerm>, Box<ArithTerm>),
    Mul(Box<ArithTerm>, Box<ArithTerm>),
    Min(Box<ArithTerm>, Box<ArithTerm>),
    Max(Box<ArithTerm>, Box<ArithTerm>),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ArithError {
    #[error("no value assigned to size variable `{0}`")]
    MissingVariable(String),
}

impl ArithTerm {
    pub fn lit(n: impl Into<BigUint>) -> Self {
        let n = n.into();
        if n.is_zero() {
            ArithTerm::Zero
        } else {
            ArithTerm::Lit(n)
        }
    }

    pub fn var(name: impl Into<String>) -> Self {
        ArithTerm::Var(name.into())
    }

    pub fn succ(a: ArithTerm) -> Self {
        ArithTerm::Succ(Box::new(a))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn add(a: ArithTerm, b: ArithTerm) -> Self {
        ArithTerm::Add(Box::new(a), Box::new(b))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn mul(a: ArithTerm, b: ArithTerm) -> Self {
        ArithTerm::Mul(Box::new(a), Box::new(b))
    }

    pub fn min(a: ArithTerm, b: ArithTerm) -> Self {
        ArithTerm::Min(Box::new(a), Box::new(b))
    }

    pub fn max(a: ArithTerm, b: ArithTerm) -> Self {
        ArithTerm::Max(Box::new(a), Box::new(b))
    }

    /// Sum of a list of terms, `0` when empty.
    pub fn sum(terms: impl IntoIterator<Item = ArithTerm>) -> Self {
        terms
            .into_iter()
            .reduce(ArithTerm::add)
            .unwrap_or(ArithTerm::Zero)
    }

    /// Returns the literal value if the term is a plain numeral.
    pub fn as_literal(&self) -> Option<BigUint> {
        match self {
            ArithTerm::Zero => Some(BigUint::zero()),
            ArithTerm::Lit(n) => Some(n.clone()),
            ArithTerm::Succ(a) => a.as_literal().map(|n| n + 1u32),
            _ => None,
        }
    }

    pub fn free_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    pub(crate) fn collect_vars(&self, out: &mut BTreeSet<String>) {
        match self {
            ArithTerm::Zero | ArithTerm::Lit(_) => {}
            ArithTerm::Var(x) => {
                out.insert(x.clone());
            }
            ArithTerm::Succ(a) => a.collect_vars(out),
            ArithTerm::Add(a, b)
            | ArithTerm::Mul(a, b)
            | ArithTerm::Min(a, b)
            | ArithTerm::Max(a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
        }
    }

    pub fn mentions(&self, x: &str) -> bool {
        match self {
            ArithTerm::Zero | ArithTerm::Lit(_) => false,
            ArithTerm::Var(y) => x == y,
            ArithTerm::Succ(a) => a.mentions(x),
            ArithTerm::Add(a, b)
            | ArithTerm::Mul(a, b)
            | ArithTerm::Min(a, b)
            | ArithTerm::Max(a, b) => a.mentions(x) || b.mentions(x),
        }
    }

    pub fn is_closed(&self) -> bool {
        self.free_vars().is_empty()
    }

    /// Replaces every occurrence of `x` with `by`.
    pub fn substitute(&self, x: &str, by: &ArithTerm) -> ArithTerm {
        self.map_vars(&mut |y| (y == x).then(|| by.clone()))
    }

    /// Rebuilds the term, replacing each variable for which `f` returns a term.
    pub fn map_vars(&self, f: &mut dyn FnMut(&str) -> Option<ArithTerm>) -> ArithTerm {
        let mut both = |a: &ArithTerm, b: &ArithTerm| (Box::new(a.map_vars(f)), Box::new(b.map_vars(f)));
        match self {
            ArithTerm::Zero | ArithTerm::Lit(_) => self.clone(),
            ArithTerm::Var(y) => match f(y) {
                Some(t) => t,
                None => self.clone(),
            },
            ArithTerm::Succ(a) => ArithTerm::Succ(Box::new(a.map_vars(f))),
            ArithTerm::Add(a, b) => {
                let (a, b) = both(a, b);
                ArithTerm::Add(a, b)
            }
            ArithTerm::Mul(a, b) => {
                let (a, b) = both(a, b);
                ArithTerm::Mul(a, b)
            }
            ArithTerm::Min(a, b) => {
                let (a, b) = both(a, b);
                ArithTerm::Min(a, b)
            }
            ArithTerm::Max(a, b) => {
                let (a, b) = both(a, b);
                ArithTerm::Max(a, b)
            }
        }
    }

    /// Evaluates the term under `sigma`.
    pub fn denote(&self, sigma: &Assignment) -> Result<BigUint, ArithError> {
        Ok(match self {
            ArithTerm::Zero => BigUint::zero(),
            ArithTerm::Lit(n) => n.clone(),
            ArithTerm::Succ(a) => a.denote(sigma)? + BigUint::one(),
            ArithTerm::Var(x) => sigma
                .get(x)
                .cloned()
                .ok_or_else(|| ArithError::MissingVariable(x.clone()))?,
            ArithTerm::Add(a, b) => a.denote(sigma)? + b.denote(sigma)?,
            ArithTerm::Mul(a, b) => a.denote(sigma)? * b.denote(sigma)?,
            ArithTerm::Min(a, b) => a.denote(sigma)?.min(b.denote(sigma)?),
            ArithTerm::Max(a, b) => a.denote(sigma)?.max(b.denote(sigma)?),
        })
    }

    /// Canonical representative of the term's equivalence class.
    pub fn simplified(&self) -> ArithTerm {
        normalize(self).embed()
    }
}

/// Free-standing form of [`ArithTerm::denote`].
pub fn denote(a: &ArithTerm, sigma: &Assignment) -> Result<BigUint, ArithError> {
    a.denote(sigma)
}

/// Free-standing form of [`ArithTerm::substitute`].
pub fn substitute(a: &ArithTerm, x: &str, by: &ArithTerm) -> ArithTerm {
    a.substitute(x, by)
}

impl From<u64> for ArithTerm {
    fn from(n: u64) -> Self {
        ArithTerm::lit(n)
    }
}

// Precedence: 0 = sum, 1 = product operand, 2 = atom.
fn fmt_prec(a_node: &ArithTerm, prec: u8, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    match a_node {
        ArithTerm::Zero => write!(f, "0"),
        ArithTerm::Lit(n) => write!(f, "{n}"),
        ArithTerm::Var(x) => write!(f, "{x}"),
        ArithTerm::Succ(a) => {
            write!(f, "S(")?;
            fmt_prec(a, 0, f)?;
            write!(f, ")")
        }
        ArithTerm::Min(a, b) | ArithTerm::Max(a, b) => {
            let name = if matches!(a_node, ArithTerm::Min(..)) { "min" } else { "max" };
            write!(f, "{name}(")?;
            fmt_prec(a, 0, f)?;
            write!(f, ", ")?;
            fmt_prec(b, 0, f)?;
            write!(f, ")")
        }
        ArithTerm::Add(a, b) => {
            if prec > 0 {
                write!(f, "(")?;
            }
            fmt_prec(a, 0, f)?;
            write!(f, " + ")?;
            fmt_prec(b, 1, f)?;
            if prec > 0 {
                write!(f, ")")?;
            }
            Ok(())
        }
        ArithTerm::Mul(a, b) => {
            if prec > 1 {
                write!(f, "(")?;
            }
            fmt_prec(a, 1, f)?;
            write!(f, " * ")?;
            fmt_prec(b, 2, f)?;
            if prec > 1 {
                write!(f, ")")?;
            }
            Ok(())
        }
    }
}

impl fmt::Display for ArithTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt_prec(self, 0, f)
    }
}

impl FromStr for ArithTerm {
    type Err = crate::syntax::SyntaxError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        crate::syntax::parse_arith(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sigma(pairs: &[(&str, u64)]) -> Assignment {
        pairs
            .iter()
            .map(|(k, v)| (k.to_string(), BigUint::from(*v)))
            .collect()
    }

    fn t(s: &str) -> ArithTerm {
        s.parse().unwrap()
    }

    #[test]
    fn denote_examples() {
        assert_eq!(t("0").denote(&sigma(&[])).unwrap(), BigUint::from(0u32));
        assert_eq!(
            t("s * 2 + 1").denote(&sigma(&[("s", 3)])).unwrap(),
            BigUint::from(7u32)
        );
        assert_eq!(
            t("min(s, t)").denote(&sigma(&[("s", 4), ("t", 9)])).unwrap(),
            BigUint::from(4u32)
        );
        assert_eq!(t("S(S(0))").denote(&sigma(&[])).unwrap(), BigUint::from(2u32));
    }

    #[test]
    fn denote_reports_missing_variable() {
        assert_eq!(
            t("s + u").denote(&sigma(&[("s", 1)])),
            Err(ArithError::MissingVariable("u".into()))
        );
    }

    #[test]
    fn substitute_examples() {
        assert_eq!(t("s * l").substitute("s", &t("4")), t("4 * l"));
        assert_eq!(t("s + s").substitute("s", &t("t + 1")), t("(t + 1) + (t + 1)"));
        assert_eq!(t("3").substitute("s", &t("0")), t("3"));
    }

    #[test]
    fn display_respects_precedence() {
        let a = ArithTerm::mul(t("a + b"), t("c"));
        assert_eq!(a.to_string(), "(a + b) * c");
        let b = ArithTerm::add(t("a"), t("b + c"));
        assert_eq!(b.to_string(), "a + (b + c)");
        assert_eq!(t("max(1, s * 2)").to_string(), "max(1, s * 2)");
        assert_eq!(t("(a + b) * c"), a);
    }
}
