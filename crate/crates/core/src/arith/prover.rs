//! Conservative prover for equalities and inequalities between arithmetic
//! terms under a set of assumptions.
//!
//! The assumptions are first put into solved form: equalities of the shape
//! `x + k = e` eliminate `x`, and inequalities `e <= x + k` eliminate `x` in
//! favour of `e + d - k` with a fresh slack variable `d`. Whatever cannot be
//! oriented is kept as a residual fact and used for chaining. Claims are
//! then decided by comparing normal forms; a failed proof falls back to the
//! sampling search in [`falsify`] to look for a counterexample.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_bigint::BigUint;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::normal::{normalize, NormalForm, Poly};
use super::{ArithTerm, Assignment};

/// Sample budget the provers spend looking for a counterexample.
pub const DEFAULT_PROVER_BUDGET: usize = 2048;

const REWRITE_CAP: usize = 64;
const GRID_MAX: u32 = 16;
const GRID_VARS: usize = 3;
const RANDOM_MAX: u32 = 64;
const FALSIFY_SEED: u64 = 0x6c61_7463;
const SLACK_PREFIX: &str = "%slack";

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Relation {
    Eq,
    Leq,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Constraint {
    pub lhs: ArithTerm,
    pub rel: Relation,
    pub rhs: ArithTerm,
}

impl Constraint {
    pub fn eq(lhs: ArithTerm, rhs: ArithTerm) -> Self {
        Constraint {
            lhs,
            rel: Relation::Eq,
            rhs,
        }
    }

    pub fn leq(lhs: ArithTerm, rhs: ArithTerm) -> Self {
        Constraint {
            lhs,
            rel: Relation::Leq,
            rhs,
        }
    }

    /// Whether the constraint holds under `sigma`; `None` if a variable is unassigned.
    pub fn holds(&self, sigma: &Assignment) -> Option<bool> {
        let l = self.lhs.denote(sigma).ok()?;
        let r = self.rhs.denote(sigma).ok()?;
        Some(match self.rel {
            Relation::Eq => l == r,
            Relation::Leq => l <= r,
        })
    }

    pub fn free_vars(&self) -> BTreeSet<String> {
        let mut out = self.lhs.free_vars();
        self.rhs.collect_vars(&mut out);
        out
    }
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let op = match self.rel {
            Relation::Eq => "=",
            Relation::Leq => "<=",
        };
        write!(f, "{} {op} {}", self.lhs, self.rhs)
    }
}

/// A finite, unordered set of arithmetic facts.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct AssumptionSet(BTreeSet<Constraint>);

impl AssumptionSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, c: Constraint) {
        self.0.insert(c);
    }

    pub fn with(&self, c: Constraint) -> Self {
        let mut out = self.clone();
        out.insert(c);
        out
    }

    pub fn iter(&self) -> impl Iterator<Item = &Constraint> {
        self.0.iter()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn free_vars(&self) -> BTreeSet<String> {
        self.0.iter().flat_map(Constraint::free_vars).collect()
    }

    pub fn holds(&self, sigma: &Assignment) -> bool {
        self.0.iter().all(|c| c.holds(sigma) == Some(true))
    }
}

impl FromIterator<Constraint> for AssumptionSet {
    fn from_iter<I: IntoIterator<Item = Constraint>>(iter: I) -> Self {
        AssumptionSet(iter.into_iter().collect())
    }
}

/// Outcome of a proof attempt. `Disproved` carries a witness that satisfies
/// the assumptions and violates the claim.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TriState {
    Proved,
    Disproved(Assignment),
    Unknown,
}

impl TriState {
    pub fn is_proved(&self) -> bool {
        matches!(self, TriState::Proved)
    }
}

// Lower bound on the value of a normal form: leaves are at least their constant term.
fn constant_floor(nf: &NormalForm) -> BigUint {
    nf.clauses()
        .map(|c| c.iter().map(Poly::constant_term).min().unwrap_or_default())
        .max()
        .unwrap_or_default()
}

/// Assumptions in solved form.
struct Solved {
    /// Eliminated variable -> definition over the remaining variables.
    defs: BTreeMap<String, NormalForm>,
    /// Residual `u <= v` facts.
    facts: Vec<(NormalForm, NormalForm)>,
    inconsistent: bool,
    slack: usize,
}

impl Solved {
    fn new(phi: &AssumptionSet) -> Self {
        let mut s = Solved {
            defs: BTreeMap::new(),
            facts: Vec::new(),
            inconsistent: false,
            slack: 0,
        };
        for c in phi.iter() {
            let l = s.apply(&c.lhs);
            let r = s.apply(&c.rhs);
            match c.rel {
                Relation::Eq => s.add_eq(l, r),
                Relation::Leq => s.add_leq(l, r),
            }
        }
        s
    }

    fn apply(&self, a: &ArithTerm) -> NormalForm {
        let mut term = a.clone();
        for _ in 0..REWRITE_CAP {
            if !term.free_vars().iter().any(|x| self.defs.contains_key(x)) {
                break;
            }
            term = term.map_vars(&mut |x| self.defs.get(x).map(NormalForm::embed));
        }
        normalize(&term)
    }

    fn eliminate(&mut self, x: String, def: NormalForm) {
        let embedded = def.embed();
        for d in self.defs.values_mut() {
            if d.free_vars().contains(&x) {
                *d = normalize(&d.embed().substitute(&x, &embedded));
            }
        }
        for (u, v) in &mut self.facts {
            *u = normalize(&u.embed().substitute(&x, &embedded));
            *v = normalize(&v.embed().substitute(&x, &embedded));
        }
        self.defs.insert(x, def);
    }

    fn contradicts(l: &NormalForm, r: &NormalForm) -> bool {
        r.as_literal().is_some_and(|c| constant_floor(l) > c)
    }

    fn add_eq(&mut self, l: NormalForm, r: NormalForm) {
        if l == r {
            return;
        }
        if Self::contradicts(&l, &r) || Self::contradicts(&r, &l) {
            self.inconsistent = true;
            return;
        }
        for (side, other) in [(&l, &r), (&r, &l)] {
            let Some((x, k)) = side.as_poly().and_then(Poly::as_var_plus_const) else {
                continue;
            };
            if other.free_vars().contains(&x) {
                continue;
            }
            if let Some(def) = other.minus_const(&k) {
                self.eliminate(x, def);
                return;
            }
        }
        self.facts.push((l.clone(), r.clone()));
        self.facts.push((r, l));
    }

    fn add_leq(&mut self, l: NormalForm, r: NormalForm) {
        if l.leq(&r) {
            return;
        }
        if Self::contradicts(&l, &r) {
            self.inconsistent = true;
            return;
        }
        if let Some((x, k)) = r.as_poly().and_then(Poly::as_var_plus_const) {
            if !l.free_vars().contains(&x) {
                let slack = NormalForm::from_poly(Poly::var(&format!("{SLACK_PREFIX}{}", self.slack)));
                if let Some(def) = l.plus(&slack).minus_const(&k) {
                    self.slack += 1;
                    self.eliminate(x, def);
                    return;
                }
            }
        }
        self.facts.push((l, r));
    }

    fn leq(&self, a: &NormalForm, b: &NormalForm) -> bool {
        if a.leq(b) {
            return true;
        }
        let mut seen: BTreeSet<&NormalForm> = BTreeSet::new();
        let mut frontier = vec![a];
        for _ in 0..REWRITE_CAP {
            let mut next = Vec::new();
            for x in frontier {
                for (u, v) in &self.facts {
                    if x.leq(u) && seen.insert(v) {
                        if v.leq(b) {
                            return true;
                        }
                        next.push(v);
                    }
                }
            }
            if next.is_empty() {
                break;
            }
            frontier = next;
        }
        false
    }
}

/// Attempts to prove `a = b` under `phi`.
pub fn prove_eq(phi: &AssumptionSet, a: &ArithTerm, b: &ArithTerm) -> TriState {
    let solved = Solved::new(phi);
    if solved.inconsistent {
        return TriState::Proved;
    }
    let (na, nb) = (solved.apply(a), solved.apply(b));
    if na == nb || (solved.leq(&na, &nb) && solved.leq(&nb, &na)) {
        return TriState::Proved;
    }
    refute(phi, Constraint::eq(a.clone(), b.clone()))
}

/// Attempts to prove `a <= b` under `phi`.
pub fn prove_leq(phi: &AssumptionSet, a: &ArithTerm, b: &ArithTerm) -> TriState {
    let solved = Solved::new(phi);
    if solved.inconsistent {
        return TriState::Proved;
    }
    if solved.leq(&solved.apply(a), &solved.apply(b)) {
        return TriState::Proved;
    }
    refute(phi, Constraint::leq(a.clone(), b.clone()))
}

fn refute(phi: &AssumptionSet, claim: Constraint) -> TriState {
    match falsify(phi, &claim, DEFAULT_PROVER_BUDGET) {
        Some(witness) => TriState::Disproved(witness),
        None => TriState::Unknown,
    }
}

/// Searches for an assignment that satisfies `phi` but violates `claim`.
///
/// Variables that the assumptions define in terms of others are computed
/// rather than sampled. The remaining variables are enumerated over
/// `0..=16` exhaustively when there are at most three of them, then drawn
/// pseudorandomly from a fixed seed until `budget` samples are spent. Every
/// candidate is checked against the original constraints by direct
/// evaluation.
pub fn falsify(phi: &AssumptionSet, claim: &Constraint, budget: usize) -> Option<Assignment> {
    let solved = Solved::new(phi);
    if solved.inconsistent {
        return None;
    }
    let mut original = phi.free_vars();
    original.extend(claim.free_vars());

    let mut base: BTreeSet<String> = original
        .iter()
        .filter(|x| !solved.defs.contains_key(*x))
        .cloned()
        .collect();
    for def in solved.defs.values() {
        base.extend(def.free_vars());
    }
    let base: Vec<String> = base.into_iter().collect();
    let defs: Vec<(&String, ArithTerm)> = solved
        .defs
        .iter()
        .map(|(x, d)| (x, d.embed()))
        .collect();

    let check = |point: &[u32]| -> Option<Assignment> {
        let mut sigma: Assignment = base
            .iter()
            .cloned()
            .zip(point.iter().map(|v| BigUint::from(*v)))
            .collect();
        for (x, d) in &defs {
            let v = d.denote(&sigma).ok()?;
            sigma.insert((*x).clone(), v);
        }
        if phi.holds(&sigma) && claim.holds(&sigma) == Some(false) {
            sigma.retain(|x, _| original.contains(x));
            Some(sigma)
        } else {
            None
        }
    };

    let mut spent = 0usize;
    if base.len() <= GRID_VARS {
        let mut point = vec![0u32; base.len()];
        loop {
            if spent >= budget {
                return None;
            }
            spent += 1;
            if let Some(w) = check(&point) {
                return Some(w);
            }
            // Odometer increment, last variable fastest.
            let mut i = point.len();
            loop {
                if i == 0 {
                    break;
                }
                i -= 1;
                if point[i] < GRID_MAX {
                    point[i] += 1;
                    break;
                }
                point[i] = 0;
            }
            if point.iter().all(|v| *v == 0) {
                break;
            }
        }
        if base.is_empty() {
            return None;
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(FALSIFY_SEED);
    let mut point = vec![0u32; base.len()];
    while spent < budget {
        spent += 1;
        for v in point.iter_mut() {
            *v = rng.gen_range(0..=RANDOM_MAX);
        }
        if let Some(w) = check(&point) {
            return Some(w);
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(s: &str) -> ArithTerm {
        s.parse().unwrap()
    }

    fn phi(cs: &[Constraint]) -> AssumptionSet {
        cs.iter().cloned().collect()
    }

    fn witness(pairs: &[(&str, u32)]) -> Assignment {
        pairs
            .iter()
            .map(|(k, v)| (k.to_string(), BigUint::from(*v)))
            .collect()
    }

    #[test]
    fn eq_by_normal_form() {
        assert_eq!(prove_eq(&phi(&[]), &t("s + 1"), &t("1 + s")), TriState::Proved);
    }

    #[test]
    fn eq_disproved_with_first_witness() {
        assert_eq!(
            prove_eq(&phi(&[]), &t("s"), &t("s + 1")),
            TriState::Disproved(witness(&[("s", 0)]))
        );
    }

    #[test]
    fn eq_by_assumption_rewriting() {
        let p = phi(&[Constraint::eq(t("s"), t("s0 + 1"))]);
        assert_eq!(prove_eq(&p, &t("s"), &t("s0 + 1")), TriState::Proved);
        assert_eq!(prove_eq(&p, &t("2 * s"), &t("2 * s0 + 2")), TriState::Proved);
    }

    #[test]
    fn leq_examples() {
        let empty = phi(&[]);
        assert_eq!(prove_leq(&empty, &t("l"), &t("l + L")), TriState::Proved);
        let p = phi(&[Constraint::eq(t("s"), t("s0 + 1"))]);
        assert_eq!(prove_leq(&p, &t("s0 + 1"), &t("s")), TriState::Proved);
        assert_eq!(
            prove_leq(&empty, &t("s * s"), &t("s")),
            TriState::Disproved(witness(&[("s", 2)]))
        );
    }

    #[test]
    fn leq_required_rules() {
        let empty = phi(&[]);
        assert!(prove_leq(&empty, &t("x"), &t("max(x, y)")).is_proved());
        assert!(prove_leq(&empty, &t("min(x, y)"), &t("x")).is_proved());
        assert!(prove_leq(&empty, &t("2 * s + 1"), &t("3 * s + s * t + 1")).is_proved());
        // Congruence through an assumed inequality.
        let p = phi(&[Constraint::leq(t("a"), t("b"))]);
        assert!(prove_leq(&p, &t("a + c"), &t("b + c")).is_proved());
        assert!(prove_leq(&p, &t("a * c"), &t("b * c")).is_proved());
        // Transitive chain.
        let p = phi(&[
            Constraint::leq(t("x"), t("y")),
            Constraint::leq(t("y"), t("z")),
        ]);
        assert!(prove_leq(&p, &t("x"), &t("z + 4")).is_proved());
    }

    #[test]
    fn residual_facts_chain() {
        // Neither side of these can be oriented into a definition.
        let p = phi(&[
            Constraint::leq(t("a * b"), t("2 * c")),
            Constraint::leq(t("2 * c"), t("d * d")),
        ]);
        assert!(prove_leq(&p, &t("a * b"), &t("d * d + 1")).is_proved());
    }

    #[test]
    fn size_decrease_obligations() {
        // Tail of a list whose length is bounded by s.
        let p = phi(&[Constraint::leq(t("n + 1"), t("s"))]);
        assert!(prove_leq(&p, &t("n + 1"), &t("s")).is_proved());
        assert!(prove_leq(&p, &t("n * 200 + 200"), &t("s * 200")).is_proved());
        match prove_leq(&p, &t("s + 1"), &t("s")) {
            TriState::Disproved(w) => assert_eq!(w.get("s"), Some(&BigUint::from(1u32))),
            other => panic!("expected a witness, got {other:?}"),
        }
    }

    #[test]
    fn inconsistent_assumptions_prove_anything() {
        let p = phi(&[Constraint::eq(t("n + 1"), t("0"))]);
        assert!(prove_leq(&p, &t("1000"), &t("0")).is_proved());
        assert_eq!(falsify(&p, &Constraint::leq(t("1"), t("0")), 100), None);
    }

    #[test]
    fn falsify_examples() {
        let empty = phi(&[]);
        assert_eq!(falsify(&empty, &Constraint::leq(t("s"), t("s + 1")), 1000), None);
        assert_eq!(
            falsify(&empty, &Constraint::leq(t("s * s"), t("s")), 1000),
            Some(witness(&[("s", 2)]))
        );
        let p = phi(&[Constraint::eq(t("s"), t("0"))]);
        assert_eq!(falsify(&p, &Constraint::leq(t("s"), t("0")), 100), None);
    }

    #[test]
    fn falsify_respects_budget() {
        // The first violation is at x = 3; a budget of 3 samples stops short.
        let claim = Constraint::leq(t("x"), t("2"));
        assert_eq!(falsify(&phi(&[]), &claim, 3), None);
        assert_eq!(falsify(&phi(&[]), &claim, 4), Some(witness(&[("x", 3)])));
    }

    #[test]
    fn falsify_samples_beyond_the_grid() {
        // Four free variables: only the seeded random phase runs.
        let claim = Constraint::leq(t("a + b + c + d"), t("20"));
        assert!(falsify(&phi(&[]), &claim, 500).is_some());
    }
}
