//! Brute-force evaluation of the bounded satisfaction relations.
//!
//! Every quantifier is expanded over the explicitly enumerated prefixes of
//! its structure and the body is evaluated by direct recursion over the
//! rule table. This is the reference the QBF pipeline is tested against; it
//! makes no attempt at efficiency.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::hyperltl::{to_nnf_body, Atom, Body, HyperFormula, Quantifier};
use crate::kripke::{KripkeStructure, ModelMap, TracePrefix, HALT_AP};

/// Largest number of prefixes the oracle is willing to enumerate.
pub const ENUMERATION_CAP: u128 = 1_000_000;

/// How temporal operators are read at the bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Semantics {
    /// Pending eventualities never happen.
    Pes,
    /// Pending eventualities always happen.
    Opt,
    /// Pessimistic, but exact once every trace has halted.
    Hpes,
    /// Optimistic, but exact once every trace has halted.
    Hopt,
    /// Fixpoint unfolding up to and including `k`, with `false` at `k + 1`.
    Classic,
    /// Like `Classic` with `true` at `k + 1`; only reachable through [`dual`].
    ClassicDual,
}

impl Semantics {
    /// The five semantics selectable from the command line.
    pub const USER: [Semantics; 5] =
        [Semantics::Pes, Semantics::Opt, Semantics::Hpes, Semantics::Hopt, Semantics::Classic];

    pub fn dual(self) -> Semantics {
        match self {
            Semantics::Pes => Semantics::Opt,
            Semantics::Opt => Semantics::Pes,
            Semantics::Hpes => Semantics::Hopt,
            Semantics::Hopt => Semantics::Hpes,
            Semantics::Classic => Semantics::ClassicDual,
            Semantics::ClassicDual => Semantics::Classic,
        }
    }

    pub fn is_halting(self) -> bool {
        matches!(self, Semantics::Hpes | Semantics::Hopt)
    }

    pub fn name(self) -> &'static str {
        match self {
            Semantics::Pes => "pes",
            Semantics::Opt => "opt",
            Semantics::Hpes => "hpes",
            Semantics::Hopt => "hopt",
            Semantics::Classic => "classic",
            Semantics::ClassicDual => "classic-dual",
        }
    }
}

/// Pairs each semantics with its dual: pes/opt, hpes/hopt, classic/classic-dual.
pub fn dual(sem: Semantics) -> Semantics {
    sem.dual()
}

impl fmt::Display for Semantics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Semantics {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "pes" => Ok(Semantics::Pes),
            "opt" => Ok(Semantics::Opt),
            "hpes" => Ok(Semantics::Hpes),
            "hopt" => Ok(Semantics::Hopt),
            "classic" => Ok(Semantics::Classic),
            other => Err(format!("unknown semantics `{other}` (pes|opt|hpes|hopt|classic)")),
        }
    }
}

/// Bound plus the reading of temporal operators at the bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Unrolling {
    pub k: usize,
    pub semantics: Semantics,
    /// Read halting release at the bound on its left operand, as printed,
    /// instead of the right operand.
    pub paper_literal: bool,
}

impl Unrolling {
    pub fn new(k: usize, semantics: Semantics) -> Self {
        Unrolling { k, semantics, paper_literal: false }
    }

    pub fn paper_literal(mut self, on: bool) -> Self {
        self.paper_literal = on;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("trace variable `{0}` is not assigned")]
    UnassignedVariable(String),
    #[error("no model for trace variable `{0}`")]
    MissingModel(String),
    #[error("proposition `{}` is not declared by the model of `{}`", .0.ap, .0.var)]
    UnknownProposition(Atom),
    #[error("body is not in negation normal form")]
    NotNnf,
    #[error("refusing to enumerate {0} prefixes")]
    ExplosionGuard(u128),
    #[error("prefix for `{0}` does not have the bound's length")]
    LengthMismatch(String),
}

/// One prefix per trace variable, all of length `k + 1`.
#[derive(Debug, Clone)]
pub struct BoundedAssignment<'a> {
    k: usize,
    mapping: BTreeMap<String, (&'a KripkeStructure, TracePrefix)>,
}

impl<'a> BoundedAssignment<'a> {
    pub fn new(k: usize) -> Self {
        BoundedAssignment { k, mapping: BTreeMap::new() }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn assign(
        &mut self,
        var: &str,
        model: &'a KripkeStructure,
        prefix: TracePrefix,
    ) -> Result<(), OracleError> {
        if prefix.len() != self.k + 1 {
            return Err(OracleError::LengthMismatch(var.to_string()));
        }
        self.mapping.insert(var.to_string(), (model, prefix));
        Ok(())
    }

    pub fn unassign(&mut self, var: &str) {
        self.mapping.remove(var);
    }

    pub fn get(&self, var: &str) -> Option<&TracePrefix> {
        self.mapping.get(var).map(|(_, p)| p)
    }

    fn atom(&self, a: &Atom, i: usize) -> Result<bool, OracleError> {
        let (model, prefix) =
            self.mapping.get(&a.var).ok_or_else(|| OracleError::UnassignedVariable(a.var.clone()))?;
        if a.ap == HALT_AP {
            return Ok(model.is_halt(prefix.states[i]));
        }
        if model.ap_index(&a.ap).is_none() {
            return Err(OracleError::UnknownProposition(a.clone()));
        }
        Ok(prefix.letters[i].contains(&a.ap))
    }

    /// Every assigned trace sits in a halting state at step `i`.
    fn halted(&self, i: usize) -> bool {
        self.mapping.values().all(|(m, p)| m.is_halt(p.states[i]))
    }
}

/// Bounded satisfaction of an NNF body at step `i`.
pub fn eval_body(
    pi: &BoundedAssignment<'_>,
    i: usize,
    body: &Body,
    un: Unrolling,
) -> Result<bool, OracleError> {
    let k = un.k;
    debug_assert!(i <= k);
    match body {
        Body::True => Ok(true),
        Body::False => Ok(false),
        Body::Atom(a) => pi.atom(a, i),
        Body::NegAtom(a) => pi.atom(a, i).map(|v| !v),
        Body::And(x, y) => Ok(eval_body(pi, i, x, un)? && eval_body(pi, i, y, un)?),
        Body::Or(x, y) => Ok(eval_body(pi, i, x, un)? || eval_body(pi, i, y, un)?),
        Body::Next(x) if i < k => eval_body(pi, i + 1, x, un),
        Body::Until(x, y) if i < k => Ok(eval_body(pi, i, y, un)?
            || (eval_body(pi, i, x, un)? && eval_body(pi, i + 1, body, un)?)),
        Body::Release(x, y) if i < k => Ok(eval_body(pi, i, y, un)?
            && (eval_body(pi, i, x, un)? || eval_body(pi, i + 1, body, un)?)),
        Body::Next(_) | Body::Until(..) | Body::Release(..) => at_bound(pi, body, un),
        _ => Err(OracleError::NotNnf),
    }
}

/// Temporal operators at `i = k`.
fn at_bound(pi: &BoundedAssignment<'_>, body: &Body, un: Unrolling) -> Result<bool, OracleError> {
    let k = un.k;
    match un.semantics {
        Semantics::Pes => Ok(false),
        Semantics::Opt => Ok(true),
        Semantics::Hpes | Semantics::Hopt => {
            let halted = pi.halted(k);
            let exact = match body {
                Body::Next(x) => eval_body(pi, k, x, un)?,
                Body::Until(_, y) => eval_body(pi, k, y, un)?,
                Body::Release(x, y) => {
                    eval_body(pi, k, if un.paper_literal { x } else { y }, un)?
                }
                _ => unreachable!(),
            };
            Ok(if un.semantics == Semantics::Hpes { halted && exact } else { !halted || exact })
        }
        Semantics::Classic | Semantics::ClassicDual => {
            let beyond = un.semantics == Semantics::ClassicDual;
            match body {
                Body::Next(_) => Ok(beyond),
                Body::Until(x, y) => {
                    Ok(eval_body(pi, k, y, un)? || (eval_body(pi, k, x, un)? && beyond))
                }
                Body::Release(x, y) => {
                    Ok(eval_body(pi, k, y, un)? && (eval_body(pi, k, x, un)? || beyond))
                }
                _ => unreachable!(),
            }
        }
    }
}

/// Bounded model checking by enumeration: every quantifier ranges over the
/// length-`k + 1` prefixes of its variable's structure.
pub fn check_bounded(models: &ModelMap, f: &HyperFormula, un: Unrolling) -> Result<bool, OracleError> {
    check_with_fixed(models, f, un, &BTreeMap::new())
}

/// Like [`check_bounded`], but the variables in `fixed` are bound to the
/// given prefixes instead of being quantified.
pub fn check_with_fixed(
    models: &ModelMap,
    f: &HyperFormula,
    un: Unrolling,
    fixed: &BTreeMap<String, TracePrefix>,
) -> Result<bool, OracleError> {
    let body = to_nnf_body(&f.body);
    let mut total: u128 = 0;
    let mut domains = Vec::new();
    for (q, v) in &f.prefix {
        let model = models.get(v).ok_or_else(|| OracleError::MissingModel(v.clone()))?;
        if let Some(p) = fixed.get(v) {
            domains.push((*q, v.as_str(), model, vec![p.clone()]));
            continue;
        }
        total = total.saturating_add(model.count_prefixes(un.k));
        if total > ENUMERATION_CAP {
            return Err(OracleError::ExplosionGuard(total));
        }
        domains.push((*q, v.as_str(), model, model.enumerate_prefixes(un.k)));
    }
    let mut pi = BoundedAssignment::new(un.k);
    quantify(&domains, &mut pi, &body, un)
}

type Domain<'a> = (Quantifier, &'a str, &'a KripkeStructure, Vec<TracePrefix>);

fn quantify<'a>(
    domains: &'a [Domain<'a>],
    pi: &mut BoundedAssignment<'a>,
    body: &Body,
    un: Unrolling,
) -> Result<bool, OracleError> {
    let Some(((q, var, model, prefixes), rest)) = domains.split_first() else {
        return eval_body(pi, 0, body, un);
    };
    for p in prefixes {
        pi.assign(var, model, p.clone())?;
        let v = quantify(rest, pi, body, un)?;
        match (q, v) {
            (Quantifier::Exists, true) => {
                pi.unassign(var);
                return Ok(true);
            }
            (Quantifier::Forall, false) => {
                pi.unassign(var);
                return Ok(false);
            }
            _ => {}
        }
    }
    pi.unassign(var);
    Ok(*q == Quantifier::Forall)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hyperltl::{parse_body, parse_formula};
    use crate::kripke::parse_kripke;

    fn single(halt: bool) -> KripkeStructure {
        let h = if halt { "halt s0;" } else { "" };
        parse_kripke(&format!("ap a; states s0; init s0; {h} label s0 {{a}}; trans s0 -> s0;"))
            .unwrap()
    }

    fn check(k: &KripkeStructure, f: &str, bound: usize, sem: Semantics, literal: bool) -> bool {
        let f = parse_formula(f).unwrap();
        let models = ModelMap::uniform(f.vars(), k.clone());
        check_bounded(&models, &f, Unrolling::new(bound, sem).paper_literal(literal)).unwrap()
    }

    #[test]
    fn atom_at_step_zero() {
        let k = single(false);
        let mut pi = BoundedAssignment::new(0);
        pi.assign("A", &k, k.enumerate_prefixes(0).remove(0)).unwrap();
        let b = parse_body("a[A]").unwrap();
        assert!(eval_body(&pi, 0, &b, Unrolling::new(0, Semantics::Pes)).unwrap());
    }

    #[test]
    fn next_at_bound_is_false_under_pes() {
        let k = single(false);
        let mut pi = BoundedAssignment::new(1);
        pi.assign("A", &k, k.enumerate_prefixes(1).remove(0)).unwrap();
        let b = to_nnf_body(&parse_body("X a[A]").unwrap());
        assert!(!eval_body(&pi, 1, &b, Unrolling::new(1, Semantics::Pes)).unwrap());
        assert!(eval_body(&pi, 1, &b, Unrolling::new(1, Semantics::Opt)).unwrap());
    }

    #[test]
    fn eventually_with_late_witness() {
        // p holds only at step 1 = k
        let k = parse_kripke(
            "ap p; states s0 s1; init s0; label s0 {}; label s1 {p}; \
             trans s0 -> s1; trans s1 -> s1;",
        )
        .unwrap();
        let mut pi = BoundedAssignment::new(1);
        pi.assign("A", &k, k.enumerate_prefixes(1).remove(0)).unwrap();
        let b = to_nnf_body(&parse_body("F p[A]").unwrap());
        // step 0: p false, so U recurses to step 1 = k, where (P2) fails and (O2) holds
        assert!(!eval_body(&pi, 0, &b, Unrolling::new(1, Semantics::Pes)).unwrap());
        assert!(eval_body(&pi, 0, &b, Unrolling::new(1, Semantics::Opt)).unwrap());
        // the fixpoint unfolding sees p at k
        assert!(eval_body(&pi, 0, &b, Unrolling::new(1, Semantics::Classic)).unwrap());
    }

    #[test]
    fn quantifier_examples() {
        let k = single(false);
        assert!(check(&k, "exists A. a[A]", 0, Semantics::Pes, false));
        assert!(!check(&k, "forall A. G a[A]", 2, Semantics::Pes, false));
        assert!(check(&k, "forall A. G a[A]", 2, Semantics::Opt, false));
    }

    #[test]
    fn halting_release_both_readings() {
        let k = single(true);
        assert!(check(&k, "forall A. G a[A]", 2, Semantics::Hopt, false));
        assert!(check(&k, "forall A. G a[A]", 2, Semantics::Hpes, false));
        // as printed, the left operand `false` is tested at k
        assert!(!check(&k, "forall A. G a[A]", 2, Semantics::Hpes, true));
        assert!(!check(&k, "forall A. G a[A]", 2, Semantics::Hopt, true));
    }

    #[test]
    fn halt_proposition() {
        let k = single(true);
        assert!(check(&k, "forall A. G @halt[A]", 3, Semantics::Hpes, false));
        assert!(!check(&single(false), "exists A. @halt[A]", 0, Semantics::Pes, false));
    }

    #[test]
    fn dual_is_involution() {
        for s in Semantics::USER {
            assert_eq!(dual(dual(s)), s);
        }
        assert_eq!(dual(Semantics::Pes), Semantics::Opt);
        assert_eq!(dual(Semantics::Opt), Semantics::Pes);
        assert_eq!(dual(Semantics::Hpes), Semantics::Hopt);
    }

    #[test]
    fn errors() {
        let k = single(false);
        let mut pi = BoundedAssignment::new(0);
        pi.assign("A", &k, k.enumerate_prefixes(0).remove(0)).unwrap();
        let un = Unrolling::new(0, Semantics::Pes);
        assert_eq!(
            eval_body(&pi, 0, &parse_body("a[B]").unwrap(), un),
            Err(OracleError::UnassignedVariable("B".into()))
        );
        assert!(matches!(
            eval_body(&pi, 0, &parse_body("zz[A]").unwrap(), un),
            Err(OracleError::UnknownProposition(_))
        ));
        assert_eq!(eval_body(&pi, 0, &parse_body("F a[A]").unwrap(), un), Err(OracleError::NotNnf));

        let wide = parse_kripke(
            "states a b c d; init a; label a {}; label b {}; label c {}; label d {}; \
             trans a -> a, b, c, d; trans b -> a, b, c, d; trans c -> a, b, c, d; trans d -> a, b, c, d;",
        )
        .unwrap();
        let f = parse_formula("forall A. G true").unwrap();
        let models = ModelMap::uniform(f.vars(), wide);
        assert!(matches!(
            check_bounded(&models, &f, Unrolling::new(12, Semantics::Pes)),
            Err(OracleError::ExplosionGuard(_))
        ));
    }
}
