//! HyperLTL formulas: concrete syntax, desugaring, negation normal form and
//! prefix dualization.

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Quantifier {
    Forall,
    Exists,
}

impl Quantifier {
    pub fn flip(self) -> Self {
        match self {
            Quantifier::Forall => Quantifier::Exists,
            Quantifier::Exists => Quantifier::Forall,
        }
    }
}

impl fmt::Display for Quantifier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Quantifier::Forall => "forall",
            Quantifier::Exists => "exists",
        })
    }
}

/// `ap[var]`
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Atom {
    pub ap: String,
    pub var: String,
}

impl Atom {
    pub fn new(ap: &str, var: &str) -> Self {
        Atom { ap: ap.to_string(), var: var.to_string() }
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}[{}]", self.ap, self.var)
    }
}

/// Quantifier-free formula body. After [`to_nnf`] only `True`, `False`,
/// `Atom`, `NegAtom`, `And`, `Or`, `Next`, `Until` and `Release` remain.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Body {
    True,
    False,
    Atom(Atom),
    NegAtom(Atom),
    Not(Box<Body>),
    And(Box<Body>, Box<Body>),
    Or(Box<Body>, Box<Body>),
    Implies(Box<Body>, Box<Body>),
    Iff(Box<Body>, Box<Body>),
    Next(Box<Body>),
    Until(Box<Body>, Box<Body>),
    Release(Box<Body>, Box<Body>),
    Eventually(Box<Body>),
    Globally(Box<Body>),
    WeakUntil(Box<Body>, Box<Body>),
}

impl Body {
    pub fn atom(ap: &str, var: &str) -> Body {
        Body::Atom(Atom::new(ap, var))
    }
    pub fn neg_atom(ap: &str, var: &str) -> Body {
        Body::NegAtom(Atom::new(ap, var))
    }
    #[allow(clippy::should_implement_trait)]
    pub fn not(b: Body) -> Body {
        Body::Not(Box::new(b))
    }
    pub fn and(a: Body, b: Body) -> Body {
        Body::And(Box::new(a), Box::new(b))
    }
    pub fn or(a: Body, b: Body) -> Body {
        Body::Or(Box::new(a), Box::new(b))
    }
    pub fn implies(a: Body, b: Body) -> Body {
        Body::Implies(Box::new(a), Box::new(b))
    }
    pub fn iff(a: Body, b: Body) -> Body {
        Body::Iff(Box::new(a), Box::new(b))
    }
    pub fn next(a: Body) -> Body {
        Body::Next(Box::new(a))
    }
    pub fn until(a: Body, b: Body) -> Body {
        Body::Until(Box::new(a), Box::new(b))
    }
    pub fn release(a: Body, b: Body) -> Body {
        Body::Release(Box::new(a), Box::new(b))
    }
    pub fn eventually(a: Body) -> Body {
        Body::Eventually(Box::new(a))
    }
    pub fn globally(a: Body) -> Body {
        Body::Globally(Box::new(a))
    }
    pub fn weak_until(a: Body, b: Body) -> Body {
        Body::WeakUntil(Box::new(a), Box::new(b))
    }

    /// Trace variables mentioned by atoms.
    pub fn vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.visit_atoms(&mut |a| {
            out.insert(a.var.clone());
        });
        out
    }

    pub fn visit_atoms(&self, f: &mut impl FnMut(&Atom)) {
        match self {
            Body::True | Body::False => {}
            Body::Atom(a) | Body::NegAtom(a) => f(a),
            Body::Not(x) | Body::Next(x) | Body::Eventually(x) | Body::Globally(x) => {
                x.visit_atoms(f)
            }
            Body::And(x, y)
            | Body::Or(x, y)
            | Body::Implies(x, y)
            | Body::Iff(x, y)
            | Body::Until(x, y)
            | Body::Release(x, y)
            | Body::WeakUntil(x, y) => {
                x.visit_atoms(f);
                y.visit_atoms(f);
            }
        }
    }

    /// True iff only the NNF core constructors occur.
    pub fn is_nnf(&self) -> bool {
        match self {
            Body::True | Body::False | Body::Atom(_) | Body::NegAtom(_) => true,
            Body::Next(x) => x.is_nnf(),
            Body::And(x, y) | Body::Or(x, y) | Body::Until(x, y) | Body::Release(x, y) => {
                x.is_nnf() && y.is_nnf()
            }
            _ => false,
        }
    }

    fn contains(&self, pred: &impl Fn(&Body) -> bool) -> bool {
        if pred(self) {
            return true;
        }
        match self {
            Body::True | Body::False | Body::Atom(_) | Body::NegAtom(_) => false,
            Body::Not(x) | Body::Next(x) | Body::Eventually(x) | Body::Globally(x) => {
                x.contains(pred)
            }
            Body::And(x, y)
            | Body::Or(x, y)
            | Body::Implies(x, y)
            | Body::Iff(x, y)
            | Body::Until(x, y)
            | Body::Release(x, y)
            | Body::WeakUntil(x, y) => x.contains(pred) || y.contains(pred),
        }
    }

    /// Number of nodes.
    pub fn size(&self) -> usize {
        match self {
            Body::True | Body::False | Body::Atom(_) | Body::NegAtom(_) => 1,
            Body::Not(x) | Body::Next(x) | Body::Eventually(x) | Body::Globally(x) => 1 + x.size(),
            Body::And(x, y)
            | Body::Or(x, y)
            | Body::Implies(x, y)
            | Body::Iff(x, y)
            | Body::Until(x, y)
            | Body::Release(x, y)
            | Body::WeakUntil(x, y) => 1 + x.size() + y.size(),
        }
    }
}

impl fmt::Display for Body {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Body::True => f.write_str("true"),
            Body::False => f.write_str("false"),
            Body::Atom(a) => write!(f, "{a}"),
            Body::NegAtom(a) => write!(f, "!{a}"),
            Body::Not(x) => write!(f, "!({x})"),
            Body::Next(x) => write!(f, "X ({x})"),
            Body::Eventually(x) => write!(f, "F ({x})"),
            Body::Globally(x) => write!(f, "G ({x})"),
            Body::And(x, y) => write!(f, "({x}) & ({y})"),
            Body::Or(x, y) => write!(f, "({x}) | ({y})"),
            Body::Implies(x, y) => write!(f, "({x}) -> ({y})"),
            Body::Iff(x, y) => write!(f, "({x}) <-> ({y})"),
            Body::Until(x, y) => write!(f, "({x}) U ({y})"),
            Body::Release(x, y) => write!(f, "({x}) R ({y})"),
            Body::WeakUntil(x, y) => write!(f, "({x}) W ({y})"),
        }
    }
}

/// A closed prenex HyperLTL formula.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct HyperFormula {
    pub prefix: Vec<(Quantifier, String)>,
    pub body: Body,
}

impl HyperFormula {
    pub fn new(prefix: Vec<(Quantifier, String)>, body: Body) -> Result<Self, FormulaError> {
        let f = HyperFormula { prefix, body };
        f.check_closed()?;
        Ok(f)
    }

    pub fn vars(&self) -> impl Iterator<Item = &str> {
        self.prefix.iter().map(|(_, v)| v.as_str())
    }

    pub fn quantifier_of(&self, var: &str) -> Option<Quantifier> {
        self.prefix.iter().find(|(_, v)| v == var).map(|(q, _)| *q)
    }

    fn check_closed(&self) -> Result<(), FormulaError> {
        let mut seen = BTreeSet::new();
        for (_, v) in &self.prefix {
            if !seen.insert(v.clone()) {
                return Err(FormulaError::DuplicateVariable(v.clone()));
            }
        }
        for v in self.body.vars() {
            if !seen.contains(&v) {
                return Err(FormulaError::UnboundVariable(v));
            }
        }
        Ok(())
    }
}

impl fmt::Display for HyperFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (q, v) in &self.prefix {
            write!(f, "{q} {v}. ")?;
        }
        write!(f, "{}", self.body)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FormulaError {
    #[error("{line}:{col}: syntax error: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error("{line}:{col}: quantifiers are only allowed as a leading prefix")]
    QuantifierInBody { line: usize, col: usize },
    #[error("trace variable `{0}` is not bound by the quantifier prefix")]
    UnboundVariable(String),
    #[error("trace variable `{0}` is quantified twice")]
    DuplicateVariable(String),
}

// ---------------------------------------------------------------------------
// concrete syntax

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    LBrack,
    RBrack,
    LParen,
    RParen,
    Dot,
    Bang,
    Amp,
    Pipe,
    Arrow,
    DArrow,
}

#[derive(Debug, Clone)]
struct Spanned {
    tok: Tok,
    line: usize,
    col: usize,
}

fn lex(text: &str) -> Result<Vec<Spanned>, FormulaError> {
    let mut out = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let line_no = ln + 1;
        let chars: Vec<char> = line.chars().collect();
        let mut i = 0;
        while i < chars.len() {
            let c = chars[i];
            let col = i + 1;
            let mut push = |tok, len: usize, i: &mut usize| {
                out.push(Spanned { tok, line: line_no, col });
                *i += len;
            };
            match c {
                '#' => break,
                c if c.is_whitespace() => i += 1,
                '[' => push(Tok::LBrack, 1, &mut i),
                ']' => push(Tok::RBrack, 1, &mut i),
                '(' => push(Tok::LParen, 1, &mut i),
                ')' => push(Tok::RParen, 1, &mut i),
                '.' => push(Tok::Dot, 1, &mut i),
                '!' => push(Tok::Bang, 1, &mut i),
                '&' => push(Tok::Amp, 1, &mut i),
                '|' => push(Tok::Pipe, 1, &mut i),
                '-' if chars.get(i + 1) == Some(&'>') => push(Tok::Arrow, 2, &mut i),
                '<' if chars.get(i + 1) == Some(&'-') && chars.get(i + 2) == Some(&'>') => {
                    push(Tok::DArrow, 3, &mut i)
                }
                c if c.is_ascii_alphabetic() || c == '_' || c == '@' => {
                    let start = i;
                    i += 1;
                    while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                        i += 1;
                    }
                    out.push(Spanned {
                        tok: Tok::Ident(chars[start..i].iter().collect()),
                        line: line_no,
                        col,
                    });
                }
                other => {
                    return Err(FormulaError::Syntax {
                        line: line_no,
                        col,
                        msg: format!("unexpected character `{other}`"),
                    })
                }
            }
        }
    }
    Ok(out)
}

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.tok)
    }

    fn peek2(&self) -> Option<&Tok> {
        self.toks.get(self.pos + 1).map(|t| &t.tok)
    }

    fn here(&self) -> (usize, usize) {
        match self.toks.get(self.pos).or(self.toks.last()) {
            Some(t) if self.pos < self.toks.len() => (t.line, t.col),
            Some(t) => (t.line, t.col + 1),
            None => (1, 1),
        }
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T, FormulaError> {
        let (line, col) = self.here();
        Err(FormulaError::Syntax { line, col, msg: msg.into() })
    }

    fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek() == Some(tok) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<(), FormulaError> {
        if self.eat(&tok) {
            Ok(())
        } else {
            self.err(format!("expected {what}"))
        }
    }

    fn ident(&mut self) -> Result<String, FormulaError> {
        match self.peek().cloned() {
            Some(Tok::Ident(s)) => {
                self.pos += 1;
                Ok(s)
            }
            _ => self.err("expected identifier"),
        }
    }

    fn at_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Some(Tok::Ident(s)) if s == kw)
            && self.peek2() != Some(&Tok::LBrack)
    }

    fn prefix(&mut self) -> Result<Vec<(Quantifier, String)>, FormulaError> {
        let mut out = Vec::new();
        loop {
            let q = if self.at_keyword("forall") {
                Quantifier::Forall
            } else if self.at_keyword("exists") {
                Quantifier::Exists
            } else {
                return Ok(out);
            };
            self.pos += 1;
            let v = self.ident()?;
            self.expect(Tok::Dot, "`.`")?;
            out.push((q, v));
        }
    }

    // <-> (loosest), -> (right), |, &, U R W (right), unary
    fn iff(&mut self) -> Result<Body, FormulaError> {
        let mut lhs = self.implies()?;
        while self.eat(&Tok::DArrow) {
            let rhs = self.implies()?;
            lhs = Body::iff(lhs, rhs);
        }
        Ok(lhs)
    }

    fn implies(&mut self) -> Result<Body, FormulaError> {
        let lhs = self.or()?;
        if self.eat(&Tok::Arrow) {
            let rhs = self.implies()?;
            return Ok(Body::implies(lhs, rhs));
        }
        Ok(lhs)
    }

    fn or(&mut self) -> Result<Body, FormulaError> {
        let mut lhs = self.and()?;
        while self.eat(&Tok::Pipe) {
            let rhs = self.and()?;
            lhs = Body::or(lhs, rhs);
        }
        Ok(lhs)
    }

    fn and(&mut self) -> Result<Body, FormulaError> {
        let mut lhs = self.temporal()?;
        while self.eat(&Tok::Amp) {
            let rhs = self.temporal()?;
            lhs = Body::and(lhs, rhs);
        }
        Ok(lhs)
    }

    fn temporal(&mut self) -> Result<Body, FormulaError> {
        let lhs = self.unary()?;
        for (kw, ctor) in [
            ("U", Body::until as fn(Body, Body) -> Body),
            ("R", Body::release),
            ("W", Body::weak_until),
        ] {
            if self.at_keyword(kw) {
                self.pos += 1;
                let rhs = self.temporal()?;
                return Ok(ctor(lhs, rhs));
            }
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Body, FormulaError> {
        if self.eat(&Tok::Bang) {
            return Ok(Body::not(self.unary()?));
        }
        for (kw, ctor) in [
            ("X", Body::next as fn(Body) -> Body),
            ("F", Body::eventually),
            ("G", Body::globally),
        ] {
            if self.at_keyword(kw) {
                self.pos += 1;
                return Ok(ctor(self.unary()?));
            }
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<Body, FormulaError> {
        if self.at_keyword("forall") || self.at_keyword("exists") {
            let (line, col) = self.here();
            return Err(FormulaError::QuantifierInBody { line, col });
        }
        if self.eat(&Tok::LParen) {
            let b = self.iff()?;
            self.expect(Tok::RParen, "`)`")?;
            return Ok(b);
        }
        if self.at_keyword("true") {
            self.pos += 1;
            return Ok(Body::True);
        }
        if self.at_keyword("false") {
            self.pos += 1;
            return Ok(Body::False);
        }
        match self.peek() {
            Some(Tok::Ident(_)) if self.peek2() == Some(&Tok::LBrack) => {
                let ap = self.ident()?;
                self.pos += 1;
                let var = self.ident()?;
                self.expect(Tok::RBrack, "`]`")?;
                Ok(Body::Atom(Atom { ap, var }))
            }
            Some(Tok::Ident(s)) => {
                let s = s.clone();
                self.err(format!("expected `{s}[Var]`"))
            }
            _ => self.err("expected formula"),
        }
    }
}

/// Parses `forall A. exists B. body`.
pub fn parse_formula(text: &str) -> Result<HyperFormula, FormulaError> {
    let mut p = Parser { toks: lex(text)?, pos: 0 };
    let prefix = p.prefix()?;
    let body = p.iff()?;
    if p.pos < p.toks.len() {
        if p.at_keyword("forall") || p.at_keyword("exists") {
            let (line, col) = p.here();
            return Err(FormulaError::QuantifierInBody { line, col });
        }
        return p.err("unexpected trailing input");
    }
    HyperFormula::new(prefix, body)
}

/// Parses a quantifier-free body, e.g. for tests.
pub fn parse_body(text: &str) -> Result<Body, FormulaError> {
    let mut p = Parser { toks: lex(text)?, pos: 0 };
    let body = p.iff()?;
    if p.pos < p.toks.len() {
        return p.err("unexpected trailing input");
    }
    Ok(body)
}

// ---------------------------------------------------------------------------
// rewriting

/// Rewrites derived operators into the core set plus `Not`.
pub fn desugar_body(b: &Body) -> Body {
    use Body::*;
    match b {
        True => True,
        False => False,
        Atom(a) => Atom(a.clone()),
        NegAtom(a) => NegAtom(a.clone()),
        Not(x) => Body::not(desugar_body(x)),
        And(x, y) => Body::and(desugar_body(x), desugar_body(y)),
        Or(x, y) => Body::or(desugar_body(x), desugar_body(y)),
        Implies(x, y) => Body::or(Body::not(desugar_body(x)), desugar_body(y)),
        Iff(x, y) => {
            let (x, y) = (desugar_body(x), desugar_body(y));
            Body::or(
                Body::and(x.clone(), y.clone()),
                Body::and(Body::not(x), Body::not(y)),
            )
        }
        Next(x) => Body::next(desugar_body(x)),
        Until(x, y) => Body::until(desugar_body(x), desugar_body(y)),
        Release(x, y) => Body::release(desugar_body(x), desugar_body(y)),
        Eventually(x) => Body::until(True, desugar_body(x)),
        Globally(x) => Body::release(False, desugar_body(x)),
        WeakUntil(x, y) => {
            let (x, y) = (desugar_body(x), desugar_body(y));
            Body::release(y.clone(), Body::or(x, y))
        }
    }
}

pub fn desugar(f: &HyperFormula) -> HyperFormula {
    HyperFormula { prefix: f.prefix.clone(), body: desugar_body(&f.body) }
}

fn nnf(b: &Body, negated: bool) -> Body {
    use Body::*;
    match (b, negated) {
        (True, false) | (False, true) => True,
        (False, false) | (True, true) => False,
        (Atom(a), false) | (NegAtom(a), true) => Atom(a.clone()),
        (Atom(a), true) | (NegAtom(a), false) => NegAtom(a.clone()),
        (Not(x), n) => nnf(x, !n),
        (And(x, y), false) | (Or(x, y), true) => Body::and(nnf(x, negated), nnf(y, negated)),
        (Or(x, y), false) | (And(x, y), true) => Body::or(nnf(x, negated), nnf(y, negated)),
        (Next(x), n) => Body::next(nnf(x, n)),
        (Until(x, y), false) | (Release(x, y), true) => {
            Body::until(nnf(x, negated), nnf(y, negated))
        }
        (Release(x, y), false) | (Until(x, y), true) => {
            Body::release(nnf(x, negated), nnf(y, negated))
        }
        (Implies(..) | Iff(..) | Eventually(_) | Globally(_) | WeakUntil(..), n) => {
            nnf(&desugar_body(b), n)
        }
    }
}

/// Negation normal form of a body; derived operators are desugared first.
pub fn to_nnf_body(b: &Body) -> Body {
    nnf(b, false)
}

/// NNF of `!b`.
pub fn negate_body(b: &Body) -> Body {
    nnf(b, true)
}

pub fn to_nnf(f: &HyperFormula) -> HyperFormula {
    HyperFormula { prefix: f.prefix.clone(), body: to_nnf_body(&f.body) }
}

/// Dualizes the prefix and pushes the negation into the body.
pub fn negate(f: &HyperFormula) -> HyperFormula {
    HyperFormula {
        prefix: f.prefix.iter().map(|(q, v)| (q.flip(), v.clone())).collect(),
        body: negate_body(&f.body),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Fragment {
    SyntacticSafety,
    SyntacticCosafety,
    Neither,
}

impl fmt::Display for Fragment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Fragment::SyntacticSafety => "syntactic safety",
            Fragment::SyntacticCosafety => "syntactic co-safety",
            Fragment::Neither => "neither safety nor co-safety",
        })
    }
}

/// Syntactic approximation of the safety / co-safety classes on the NNF
/// body: no `U` means safety, no `R` means co-safety.
pub fn classify_fragment(f: &HyperFormula) -> Fragment {
    let body = to_nnf_body(&f.body);
    let has_until = body.contains(&|b| matches!(b, Body::Until(..)));
    let has_release = body.contains(&|b| matches!(b, Body::Release(..)));
    if !has_until {
        Fragment::SyntacticSafety
    } else if !has_release {
        Fragment::SyntacticCosafety
    } else {
        Fragment::Neither
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn a(ap: &str, v: &str) -> Body {
        Body::atom(ap, v)
    }

    #[test]
    fn parses_observational_determinism_shape() {
        let f = parse_formula("forall A. forall B. G (a[A] <-> a[B])").unwrap();
        assert_eq!(
            f.prefix,
            vec![(Quantifier::Forall, "A".into()), (Quantifier::Forall, "B".into())]
        );
        assert_eq!(f.body, Body::globally(Body::iff(a("a", "A"), a("a", "B"))));
    }

    #[test]
    fn parses_single_atom() {
        let f = parse_formula("exists A. a[A]").unwrap();
        assert_eq!(f.prefix, vec![(Quantifier::Exists, "A".into())]);
        assert_eq!(f.body, a("a", "A"));
    }

    #[test]
    fn unbound_variable() {
        assert_eq!(
            parse_formula("forall A. b[B]"),
            Err(FormulaError::UnboundVariable("B".into()))
        );
    }

    #[test]
    fn quantifier_in_body_rejected() {
        assert!(matches!(
            parse_formula("forall A. a[A] & exists B. a[B]"),
            Err(FormulaError::QuantifierInBody { .. })
        ));
        assert!(matches!(
            parse_formula("forall A. (exists B. a[B])"),
            Err(FormulaError::QuantifierInBody { .. })
        ));
    }

    #[test]
    fn duplicate_variable_rejected() {
        assert_eq!(
            parse_formula("forall A. exists A. a[A]"),
            Err(FormulaError::DuplicateVariable("A".into()))
        );
    }

    #[test]
    fn precedence() {
        // U binds tighter than &, & tighter than |, | tighter than ->, -> tighter than <->
        let b = parse_body("p[A] & q[A] U r[A] | s[A] -> t[A] <-> u[A]").unwrap();
        let expected = Body::iff(
            Body::implies(
                Body::or(Body::and(a("p", "A"), Body::until(a("q", "A"), a("r", "A"))), a("s", "A")),
                a("t", "A"),
            ),
            a("u", "A"),
        );
        assert_eq!(b, expected);
        // right associativity
        assert_eq!(
            parse_body("p[A] U q[A] U r[A]").unwrap(),
            Body::until(a("p", "A"), Body::until(a("q", "A"), a("r", "A")))
        );
        assert_eq!(
            parse_body("p[A] -> q[A] -> r[A]").unwrap(),
            Body::implies(a("p", "A"), Body::implies(a("q", "A"), a("r", "A")))
        );
        // unary binds tightest
        assert_eq!(
            parse_body("F p[A] U q[A]").unwrap(),
            Body::until(Body::eventually(a("p", "A")), a("q", "A"))
        );
        assert_eq!(parse_body("@halt[A]").unwrap(), a("@halt", "A"));
    }

    #[test]
    fn propositions_named_like_keywords() {
        assert_eq!(parse_body("F[A]").unwrap(), a("F", "A"));
        assert_eq!(parse_body("G F[A]").unwrap(), Body::globally(a("F", "A")));
    }

    #[test]
    fn display_round_trips() {
        let f = parse_formula("exists A. forall B. (!goal[B]) U goal[A] & G (x[A] W !y[B])").unwrap();
        assert_eq!(parse_formula(&f.to_string()).unwrap(), f);
    }

    #[test]
    fn desugar_table() {
        let p = a("p", "A");
        assert_eq!(desugar_body(&Body::eventually(p.clone())), Body::until(Body::True, p.clone()));
        assert_eq!(desugar_body(&Body::globally(p.clone())), Body::release(Body::False, p.clone()));
        let o = Body::iff(a("o", "A"), a("o", "B"));
        let i = Body::not(Body::iff(a("i", "A"), a("i", "B")));
        let w = desugar_body(&Body::weak_until(o.clone(), i.clone()));
        let (o, i) = (desugar_body(&o), desugar_body(&i));
        assert_eq!(w, Body::release(i.clone(), Body::or(o, i)));
    }

    #[test]
    fn nnf_dualities() {
        let p = a("p", "A");
        assert_eq!(
            to_nnf_body(&Body::not(Body::until(Body::True, p.clone()))),
            Body::release(Body::False, Body::neg_atom("p", "A"))
        );
        assert_eq!(
            to_nnf_body(&Body::not(Body::next(p.clone()))),
            Body::next(Body::neg_atom("p", "A"))
        );
        let b = Body::not(Body::or(p, Body::and(a("q", "A"), Body::next(a("r", "A")))));
        assert_eq!(
            to_nnf_body(&b),
            Body::and(
                Body::neg_atom("p", "A"),
                Body::or(Body::neg_atom("q", "A"), Body::next(Body::neg_atom("r", "A")))
            )
        );
        assert_eq!(to_nnf_body(&Body::not(Body::not(a("p", "A")))), a("p", "A"));
    }

    #[test]
    fn negation_flips_prefix() {
        let f = parse_formula("forall A. exists B. G (p[A] <-> p[B])").unwrap();
        let g = negate(&f);
        assert_eq!(
            g.prefix,
            vec![(Quantifier::Exists, "A".into()), (Quantifier::Forall, "B".into())]
        );
        assert_eq!(g.body, negate_body(&f.body));
        assert!(g.body.is_nnf());

        let f = parse_formula("exists A. F goal[A]").unwrap();
        let g = negate(&f);
        assert_eq!(g.prefix, vec![(Quantifier::Forall, "A".into())]);
        assert_eq!(g.body, Body::release(Body::False, Body::neg_atom("goal", "A")));
        assert_eq!(to_nnf(&g).body, to_nnf_body(&parse_body("G !goal[A]").unwrap()));

        assert_eq!(negate(&negate(&f)), to_nnf(&f));
    }

    #[test]
    fn fragments() {
        let cls = |s: &str| classify_fragment(&parse_formula(s).unwrap());
        assert_eq!(cls("forall A. G p[A]"), Fragment::SyntacticSafety);
        assert_eq!(cls("forall A. F p[A]"), Fragment::SyntacticCosafety);
        assert_eq!(cls("forall A. F p[A] & G q[A]"), Fragment::Neither);
    }

    #[test]
    fn nnf_idempotent() {
        let b = parse_body("!(p[A] W (q[A] -> X r[B])) <-> G F s[A]").unwrap();
        let once = to_nnf_body(&desugar_body(&b));
        assert!(once.is_nnf());
        assert_eq!(to_nnf_body(&once), once);
    }

    /// Finite-trace evaluator written from the quantifier definitions of
    /// each operator (no fixpoint unfolding), used to check the W rewrite.
    fn direct(b: &Body, t: &[(bool, bool)], i: usize) -> bool {
        let n = t.len();
        match b {
            Body::True => true,
            Body::False => false,
            Body::Atom(a) => if a.ap == "x" { t[i].0 } else { t[i].1 },
            Body::NegAtom(a) => !direct(&Body::Atom(a.clone()), t, i),
            Body::Not(x) => !direct(x, t, i),
            Body::And(x, y) => direct(x, t, i) && direct(y, t, i),
            Body::Or(x, y) => direct(x, t, i) || direct(y, t, i),
            Body::Until(x, y) => (i..n).any(|j| direct(y, t, j) && (i..j).all(|l| direct(x, t, l))),
            Body::Globally(x) => (i..n).all(|j| direct(x, t, j)),
            Body::WeakUntil(x, y) => {
                direct(&Body::until((**x).clone(), (**y).clone()), t, i)
                    || direct(&Body::globally((**x).clone()), t, i)
            }
            Body::Release(x, y) => {
                (i..n).all(|j| direct(y, t, j) || (i..j).any(|l| direct(x, t, l)))
            }
            other => unreachable!("{other:?}"),
        }
    }

    #[test]
    fn weak_until_rewrite_matches_definition_on_all_short_traces() {
        let x = a("x", "A");
        let y = a("y", "A");
        let w = Body::weak_until(x.clone(), y.clone());
        let rewritten = desugar_body(&w);
        assert_eq!(rewritten, Body::release(y.clone(), Body::or(x, y)));
        for code in 0..(1u32 << 8) {
            let t: Vec<(bool, bool)> =
                (0..4).map(|i| (code >> (2 * i) & 1 == 1, code >> (2 * i + 1) & 1 == 1)).collect();
            for i in 0..4 {
                assert_eq!(direct(&w, &t, i), direct(&rewritten, &t, i), "trace {t:?} at {i}");
            }
        }
    }
}
