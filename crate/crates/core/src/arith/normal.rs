use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_bigint::BigUint;
use num_traits::{One, Zero};

use super::{ArithTerm, Assignment};

/// Product of variables with multiplicities, e.g. `s * s * t`.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Monomial(BTreeMap<String, u32>);

impl Monomial {
    pub fn unit() -> Self {
        Monomial::default()
    }

    pub fn var(x: &str) -> Self {
        Monomial(BTreeMap::from([(x.to_string(), 1)]))
    }

    pub fn is_unit(&self) -> bool {
        self.0.is_empty()
    }

    pub fn vars(&self) -> impl Iterator<Item = (&str, u32)> {
        self.0.iter().map(|(k, v)| (k.as_str(), *v))
    }

    fn times(&self, other: &Monomial) -> Monomial {
        let mut out = self.0.clone();
        for (x, e) in &other.0 {
            *out.entry(x.clone()).or_insert(0) += e;
        }
        Monomial(out)
    }

    fn embed(&self) -> Option<ArithTerm> {
        self.0
            .iter()
            .flat_map(|(x, e)| std::iter::repeat_n(x, *e as usize))
            .map(|x| ArithTerm::Var(x.clone()))
            .reduce(ArithTerm::mul)
    }
}

/// Polynomial with natural coefficients, keyed by monomial. Zero
/// coefficients are never stored.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Poly(BTreeMap<Monomial, BigUint>);

impl Poly {
    pub fn zero() -> Self {
        Poly::default()
    }

    pub fn constant(n: BigUint) -> Self {
        let mut p = Poly::zero();
        if !n.is_zero() {
            p.0.insert(Monomial::unit(), n);
        }
        p
    }

    pub fn var(x: &str) -> Self {
        Poly(BTreeMap::from([(Monomial::var(x), BigUint::one())]))
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &BigUint)> {
        self.0.iter()
    }

    pub fn constant_term(&self) -> BigUint {
        self.0
            .get(&Monomial::unit())
            .cloned()
            .unwrap_or_default()
    }

    pub fn is_constant(&self) -> bool {
        self.0.keys().all(Monomial::is_unit)
    }

    pub fn plus(&self, other: &Poly) -> Poly {
        let mut out = self.0.clone();
        for (m, c) in &other.0 {
            *out.entry(m.clone()).or_default() += c;
        }
        Poly(out)
    }

    pub fn times(&self, other: &Poly) -> Poly {
        let mut out: BTreeMap<Monomial, BigUint> = BTreeMap::new();
        for (m1, c1) in &self.0 {
            for (m2, c2) in &other.0 {
                *out.entry(m1.times(m2)).or_default() += c1 * c2;
            }
        }
        Poly(out)
    }

    /// Coefficient-wise domination. Since every variable is a natural,
    /// `p.dominated_by(q)` implies `p <= q` under every assignment.
    pub fn dominated_by(&self, other: &Poly) -> bool {
        self.0
            .iter()
            .all(|(m, c)| other.0.get(m).is_some_and(|d| c <= d))
    }

    /// `Some((x, k))` when the polynomial is exactly `x + k`.
    pub fn as_var_plus_const(&self) -> Option<(String, BigUint)> {
        let mut var = None;
        for (m, c) in &self.0 {
            if m.is_unit() {
                continue;
            }
            let mut vs = m.vars();
            match (vs.next(), vs.next(), var.is_some()) {
                (Some((x, 1)), None, false) if c.is_one() => var = Some(x.to_string()),
                _ => return None,
            }
        }
        var.map(|x| (x, self.constant_term()))
    }

    /// Subtracts `k` from the constant term, if that stays natural.
    pub fn minus_const(&self, k: &BigUint) -> Option<Poly> {
        if k.is_zero() {
            return Some(self.clone());
        }
        let c = self.constant_term();
        if &c < k {
            return None;
        }
        let mut out = self.0.clone();
        let rest = c - k;
        if rest.is_zero() {
            out.remove(&Monomial::unit());
        } else {
            out.insert(Monomial::unit(), rest);
        }
        Some(Poly(out))
    }

    pub fn free_vars(&self) -> BTreeSet<String> {
        self.0
            .keys()
            .flat_map(|m| m.0.keys().cloned())
            .collect()
    }

    pub fn embed(&self) -> ArithTerm {
        // Constant term last reads better: `2 * s + 1`.
        let nonconst = self.0.iter().filter(|(m, _)| !m.is_unit());
        let mut parts: Vec<ArithTerm> = nonconst
            .map(|(m, c)| {
                let vars = m.embed().expect("non-unit monomial");
                if c.is_one() {
                    vars
                } else {
                    ArithTerm::mul(ArithTerm::Lit(c.clone()), vars)
                }
            })
            .collect();
        let c = self.constant_term();
        if !c.is_zero() {
            parts.push(ArithTerm::Lit(c));
        }
        ArithTerm::sum(parts)
    }

    pub fn denote(&self, sigma: &Assignment) -> Option<BigUint> {
        let mut total = BigUint::zero();
        for (m, c) in &self.0 {
            let mut prod = c.clone();
            for (x, e) in m.vars() {
                prod *= sigma.get(x)?.pow(e);
            }
            total += prod;
        }
        Some(total)
    }
}

/// Canonical form: a maximum over clauses, each clause a minimum over
/// polynomials. Within a clause no polynomial dominates another, and no
/// clause is dominated by another clause.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NormalForm {
    clauses: BTreeSet<BTreeSet<Poly>>,
}

type Clause = BTreeSet<Poly>;

// min(a) <= min(b) whenever every member of b is bounded below by some member of a.
fn clause_below(a: &Clause, b: &Clause) -> bool {
    b.iter().all(|q| a.iter().any(|p| p.dominated_by(q)))
}

impl NormalForm {
    pub fn from_poly(p: Poly) -> Self {
        NormalForm {
            clauses: BTreeSet::from([BTreeSet::from([p])]),
        }
    }

    pub fn constant(n: BigUint) -> Self {
        Self::from_poly(Poly::constant(n))
    }

    fn from_clauses(raw: impl IntoIterator<Item = Clause>) -> Self {
        let reduced: BTreeSet<Clause> = raw
            .into_iter()
            .map(|clause| {
                clause
                    .iter()
                    .filter(|p| !clause.iter().any(|q| q != *p && q.dominated_by(p)))
                    .cloned()
                    .collect()
            })
            .collect();
        let clauses = reduced
            .iter()
            .filter(|a| !reduced.iter().any(|b| b != *a && clause_below(a, b)))
            .cloned()
            .collect();
        NormalForm { clauses }
    }

    pub fn clauses(&self) -> impl Iterator<Item = &BTreeSet<Poly>> {
        self.clauses.iter()
    }

    /// The single polynomial, when the form has no min/max structure.
    pub fn as_poly(&self) -> Option<&Poly> {
        match (self.clauses.len(), self.clauses.first()) {
            (1, Some(c)) if c.len() == 1 => c.first(),
            _ => None,
        }
    }

    pub fn as_literal(&self) -> Option<BigUint> {
        self.as_poly()
            .filter(|p| p.is_constant())
            .map(Poly::constant_term)
    }

    pub fn as_var(&self) -> Option<&str> {
        let p = self.as_poly()?;
        match p.as_var_plus_const() {
            Some((_, k)) if k.is_zero() => p.0.keys().next()?.0.keys().next().map(String::as_str),
            _ => None,
        }
    }

    fn combine(&self, other: &Self, op: impl Fn(&Poly, &Poly) -> Poly) -> Self {
        let mut out = Vec::new();
        for a in &self.clauses {
            for b in &other.clauses {
                out.push(
                    a.iter()
                        .flat_map(|p| b.iter().map(|q| op(p, q)).collect::<Vec<_>>())
                        .collect(),
                );
            }
        }
        Self::from_clauses(out)
    }

    pub fn plus(&self, other: &Self) -> Self {
        self.combine(other, Poly::plus)
    }

    pub fn times(&self, other: &Self) -> Self {
        self.combine(other, Poly::times)
    }

    pub fn max(&self, other: &Self) -> Self {
        Self::from_clauses(self.clauses.iter().chain(&other.clauses).cloned())
    }

    pub fn min(&self, other: &Self) -> Self {
        let mut out = Vec::new();
        for a in &self.clauses {
            for b in &other.clauses {
                out.push(a.union(b).cloned().collect());
            }
        }
        Self::from_clauses(out)
    }

    /// Sound structural check for `self <= other` under every assignment.
    pub fn leq(&self, other: &Self) -> bool {
        self.clauses
            .iter()
            .all(|a| other.clauses.iter().any(|b| clause_below(a, b)))
    }

    /// Subtracts `k` from every leaf, if every leaf's constant term allows it.
    pub fn minus_const(&self, k: &BigUint) -> Option<Self> {
        let mut out = Vec::new();
        for c in &self.clauses {
            out.push(c.iter().map(|p| p.minus_const(k)).collect::<Option<Clause>>()?);
        }
        Some(Self::from_clauses(out))
    }

    pub fn free_vars(&self) -> BTreeSet<String> {
        self.clauses
            .iter()
            .flatten()
            .flat_map(Poly::free_vars)
            .collect()
    }

    pub fn embed(&self) -> ArithTerm {
        self.clauses
            .iter()
            .map(|c| {
                c.iter()
                    .map(Poly::embed)
                    .reduce(ArithTerm::min)
                    .expect("non-empty clause")
            })
            .reduce(ArithTerm::max)
            .expect("non-empty normal form")
    }
}

impl fmt::Display for NormalForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.embed())
    }
}

/// Computes the canonical normal form of an arithmetic term.
pub fn normalize(a: &ArithTerm) -> NormalForm {
    match a {
        ArithTerm::Zero => NormalForm::from_poly(Poly::zero()),
        ArithTerm::Lit(n) => NormalForm::constant(n.clone()),
        ArithTerm::Var(x) => NormalForm::from_poly(Poly::var(x)),
        ArithTerm::Succ(a) => normalize(a).plus(&NormalForm::constant(BigUint::one())),
        ArithTerm::Add(a, b) => normalize(a).plus(&normalize(b)),
        ArithTerm::Mul(a, b) => normalize(a).times(&normalize(b)),
        ArithTerm::Min(a, b) => NormalForm::min(&normalize(a), &normalize(b)),
        ArithTerm::Max(a, b) => NormalForm::max(&normalize(a), &normalize(b)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(s: &str) -> ArithTerm {
        s.parse().unwrap()
    }

    fn nf(s: &str) -> NormalForm {
        normalize(&t(s))
    }

    #[test]
    fn additive_identity() {
        assert_eq!(nf("s + 0"), nf("s"));
        assert_eq!(nf("s + 0").embed(), t("s"));
    }

    #[test]
    fn constant_folding() {
        assert_eq!(nf("max(3, 5)").as_literal(), Some(BigUint::from(5u32)));
        assert_eq!(nf("min(3, 5)").as_literal(), Some(BigUint::from(3u32)));
        assert_eq!(nf("S(S(2))").as_literal(), Some(BigUint::from(4u32)));
    }

    #[test]
    fn collects_like_terms() {
        let n = nf("s * 2 + s");
        assert_eq!(n, nf("3 * s"));
        assert_eq!(n.embed().to_string(), "3 * s");
        // Oracle: denotations agree on 0..=100.
        for v in 0u32..=100 {
            let sigma = Assignment::from([("s".to_string(), BigUint::from(v))]);
            assert_eq!(
                t("s * 2 + s").denote(&sigma).unwrap(),
                n.embed().denote(&sigma).unwrap()
            );
        }
    }

    #[test]
    fn lattice_absorption() {
        assert_eq!(nf("max(s, 0)"), nf("s"));
        assert_eq!(nf("min(s, 0)"), nf("0"));
        assert_eq!(nf("max(s, s + 1)"), nf("s + 1"));
        assert_eq!(nf("min(s, max(s, t))"), nf("s"));
        assert_eq!(nf("max(a, b) + c"), nf("max(a + c, b + c)"));
    }

    #[test]
    fn structural_leq() {
        assert!(nf("l").leq(&nf("l + k")));
        assert!(nf("x").leq(&nf("max(x, y)")));
        assert!(nf("min(x, y)").leq(&nf("x")));
        assert!(!nf("s * s").leq(&nf("s")));
        assert!(!nf("max(x, y)").leq(&nf("x")));
    }

    #[test]
    fn var_plus_const() {
        let p = nf("t + 3");
        assert_eq!(
            p.as_poly().unwrap().as_var_plus_const(),
            Some(("t".to_string(), BigUint::from(3u32)))
        );
        assert_eq!(nf("2 * t").as_poly().unwrap().as_var_plus_const(), None);
        assert_eq!(nf("x").as_var(), Some("x"));
        assert_eq!(nf("x + 1").as_var(), None);
    }
}
