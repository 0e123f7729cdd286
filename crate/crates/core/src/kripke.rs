//! Explicit-state Kripke structures.
//!
//! A structure is a finite set of named states with one initial state, a
//! total transition relation, a labeling over a declared set of atomic
//! propositions and an optional set of halting states. Declaration order of
//! states and propositions is preserved; every downstream variable layout is
//! derived from it.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::Arc;
use std::fmt::{self, Write as _};

use thiserror::Error;

/// Reserved proposition that holds exactly on halting states.
pub const HALT_AP: &str = "@halt";

pub type StateId = usize;

/// A set of proposition names, one letter of a trace.
pub type Letter = BTreeSet<String>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum KripkeError {
    #[error("{line}:{col}: syntax error: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error("{line}:{col}: duplicate state `{name}`")]
    DuplicateState { name: String, line: usize, col: usize },
    #[error("{line}:{col}: duplicate proposition `{name}`")]
    DuplicateAp { name: String, line: usize, col: usize },
    #[error("{line}:{col}: undeclared {kind} `{name}`")]
    Undeclared { kind: &'static str, name: String, line: usize, col: usize },
    #[error("missing `init` statement")]
    MissingInit,
    #[error("{line}:{col}: initial state declared twice")]
    DuplicateInit { line: usize, col: usize },
    #[error("state `{0}` has no `label` statement")]
    MissingLabel(String),
    #[error("{line}:{col}: state `{name}` labeled twice")]
    DuplicateLabel { name: String, line: usize, col: usize },
    #[error("proposition name `{0}` is reserved")]
    ReservedName(String),
    #[error("state `{0}` has no outgoing transition")]
    NonTotal(String),
    #[error("halting state `{0}` is not absorbing")]
    HaltNotAbsorbing(String),
    #[error("reference to unknown name `{0}`")]
    DanglingReference(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KripkeStructure {
    states: Vec<String>,
    init: StateId,
    succ: Vec<Vec<StateId>>,
    labels: Vec<Vec<usize>>,
    halt: Vec<bool>,
    aps: Vec<String>,
}

impl KripkeStructure {
    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn states(&self) -> &[String] {
        &self.states
    }

    pub fn state_name(&self, s: StateId) -> &str {
        &self.states[s]
    }

    pub fn state_index(&self, name: &str) -> Option<StateId> {
        self.states.iter().position(|n| n == name)
    }

    pub fn init(&self) -> StateId {
        self.init
    }

    /// Successors of `s`, sorted by declaration order.
    pub fn successors(&self, s: StateId) -> &[StateId] {
        &self.succ[s]
    }

    pub fn has_transition(&self, from: StateId, to: StateId) -> bool {
        self.succ[from].binary_search(&to).is_ok()
    }

    pub fn num_transitions(&self) -> usize {
        self.succ.iter().map(Vec::len).sum()
    }

    pub fn aps(&self) -> &[String] {
        &self.aps
    }

    pub fn ap_index(&self, name: &str) -> Option<usize> {
        self.aps.iter().position(|n| n == name)
    }

    /// Indices of the propositions labeling `s`, sorted.
    pub fn label(&self, s: StateId) -> &[usize] {
        &self.labels[s]
    }

    pub fn holds(&self, s: StateId, ap: usize) -> bool {
        self.labels[s].binary_search(&ap).is_ok()
    }

    pub fn is_halt(&self, s: StateId) -> bool {
        self.halt[s]
    }

    pub fn has_halt_states(&self) -> bool {
        self.halt.iter().any(|&h| h)
    }

    pub fn halt_states(&self) -> impl Iterator<Item = StateId> + '_ {
        (0..self.states.len()).filter(|&s| self.halt[s])
    }

    /// The letter `L(s)` as a set of proposition names (without `@halt`).
    pub fn letter(&self, s: StateId) -> Letter {
        self.labels[s].iter().map(|&a| self.aps[a].clone()).collect()
    }

    /// Checks every structural invariant. Structures produced by
    /// [`parse_kripke`] and [`KripkeBuilder::build`] are always valid.
    pub fn validate(&self) -> Result<(), KripkeError> {
        let n = self.states.len();
        if self.init >= n {
            return Err(KripkeError::DanglingReference(format!("state #{}", self.init)));
        }
        for (s, succ) in self.succ.iter().enumerate() {
            if let Some(&t) = succ.iter().find(|&&t| t >= n) {
                return Err(KripkeError::DanglingReference(format!("state #{t}")));
            }
            if succ.is_empty() {
                return Err(KripkeError::NonTotal(self.states[s].clone()));
            }
        }
        for labels in &self.labels {
            if let Some(&a) = labels.iter().find(|&&a| a >= self.aps.len()) {
                return Err(KripkeError::DanglingReference(format!("proposition #{a}")));
            }
        }
        for ap in &self.aps {
            if ap.starts_with('@') {
                return Err(KripkeError::ReservedName(ap.clone()));
            }
        }
        for s in self.halt_states() {
            // a halted trace must stay put, otherwise evaluating at the
            // bound would not reflect the infinite continuation
            if self.succ[s] != [s] {
                return Err(KripkeError::HaltNotAbsorbing(self.states[s].clone()));
            }
        }
        Ok(())
    }

    /// All initialized paths with `k + 1` states, in depth-first order with
    /// successors visited in declaration order.
    pub fn enumerate_prefixes(&self, k: usize) -> Vec<TracePrefix> {
        let mut out = Vec::new();
        let mut path = vec![self.init];
        self.extend_paths(&mut path, k + 1, &mut out);
        out
    }

    fn extend_paths(&self, path: &mut Vec<StateId>, len: usize, out: &mut Vec<TracePrefix>) {
        if path.len() == len {
            out.push(TracePrefix::from_states(self, path.clone()));
            return;
        }
        let last = *path.last().unwrap();
        for &t in &self.succ[last] {
            path.push(t);
            self.extend_paths(path, len, out);
            path.pop();
        }
    }

    /// Number of initialized paths with `k + 1` states, saturating.
    pub fn count_prefixes(&self, k: usize) -> u128 {
        let mut counts = vec![0u128; self.states.len()];
        counts[self.init] = 1;
        for _ in 0..k {
            let mut next = vec![0u128; self.states.len()];
            for (s, &c) in counts.iter().enumerate() {
                if c == 0 {
                    continue;
                }
                for &t in &self.succ[s] {
                    next[t] = next[t].saturating_add(c);
                }
            }
            counts = next;
        }
        counts.into_iter().fold(0u128, |a, c| a.saturating_add(c))
    }

    /// Prints the structure in canonical `.kr` form.
    pub fn render(&self) -> String {
        let mut out = String::new();
        if !self.aps.is_empty() {
            let _ = writeln!(out, "ap {};", self.aps.join(" "));
        }
        let _ = writeln!(out, "states {};", self.states.join(" "));
        let _ = writeln!(out, "init {};", self.states[self.init]);
        let halts: Vec<&str> = self.halt_states().map(|s| self.states[s].as_str()).collect();
        if !halts.is_empty() {
            let _ = writeln!(out, "halt {};", halts.join(" "));
        }
        for (s, name) in self.states.iter().enumerate() {
            let names: Vec<&str> = self.labels[s].iter().map(|&a| self.aps[a].as_str()).collect();
            let _ = writeln!(out, "label {} {{{}}};", name, names.join(", "));
        }
        for (s, succ) in self.succ.iter().enumerate() {
            for &t in succ {
                let _ = writeln!(out, "trans {} -> {};", self.states[s], self.states[t]);
            }
        }
        out
    }
}

impl fmt::Display for KripkeStructure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

/// Incremental construction by name, used by the parser and the model
/// generators.
#[derive(Debug, Default, Clone)]
pub struct KripkeBuilder {
    states: Vec<String>,
    state_ix: HashMap<String, StateId>,
    aps: Vec<String>,
    ap_ix: HashMap<String, usize>,
    init: Option<StateId>,
    succ: Vec<BTreeSet<StateId>>,
    labels: Vec<Option<BTreeSet<usize>>>,
    halt: Vec<bool>,
}

impl KripkeBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn ap(&mut self, name: &str) -> Result<usize, KripkeError> {
        if name.starts_with('@') {
            return Err(KripkeError::ReservedName(name.to_string()));
        }
        if self.ap_ix.contains_key(name) {
            return Err(KripkeError::DuplicateAp { name: name.to_string(), line: 0, col: 0 });
        }
        let ix = self.aps.len();
        self.aps.push(name.to_string());
        self.ap_ix.insert(name.to_string(), ix);
        Ok(ix)
    }

    pub fn state(&mut self, name: &str) -> Result<StateId, KripkeError> {
        if self.state_ix.contains_key(name) {
            return Err(KripkeError::DuplicateState { name: name.to_string(), line: 0, col: 0 });
        }
        let ix = self.states.len();
        self.states.push(name.to_string());
        self.state_ix.insert(name.to_string(), ix);
        self.succ.push(BTreeSet::new());
        self.labels.push(None);
        self.halt.push(false);
        Ok(ix)
    }

    pub fn state_id(&self, name: &str) -> Option<StateId> {
        self.state_ix.get(name).copied()
    }

    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    fn lookup_state(&self, name: &str) -> Result<StateId, KripkeError> {
        self.state_id(name).ok_or_else(|| KripkeError::DanglingReference(name.to_string()))
    }

    pub fn init(&mut self, name: &str) -> Result<(), KripkeError> {
        self.init = Some(self.lookup_state(name)?);
        Ok(())
    }

    pub fn halt(&mut self, name: &str) -> Result<(), KripkeError> {
        let s = self.lookup_state(name)?;
        self.halt[s] = true;
        Ok(())
    }

    pub fn label<'a>(
        &mut self,
        state: &str,
        aps: impl IntoIterator<Item = &'a str>,
    ) -> Result<(), KripkeError> {
        let s = self.lookup_state(state)?;
        let mut set = BTreeSet::new();
        for ap in aps {
            let a = *self
                .ap_ix
                .get(ap)
                .ok_or_else(|| KripkeError::DanglingReference(ap.to_string()))?;
            set.insert(a);
        }
        if self.labels[s].is_some() {
            return Err(KripkeError::DuplicateLabel { name: state.to_string(), line: 0, col: 0 });
        }
        self.labels[s] = Some(set);
        Ok(())
    }

    pub fn trans(&mut self, from: &str, to: &str) -> Result<(), KripkeError> {
        let s = self.lookup_state(from)?;
        let t = self.lookup_state(to)?;
        self.succ[s].insert(t);
        Ok(())
    }

    pub fn build(self) -> Result<KripkeStructure, KripkeError> {
        let init = self.init.ok_or(KripkeError::MissingInit)?;
        let mut labels = Vec::with_capacity(self.states.len());
        for (s, l) in self.labels.into_iter().enumerate() {
            match l {
                Some(l) => labels.push(l.into_iter().collect()),
                None => return Err(KripkeError::MissingLabel(self.states[s].clone())),
            }
        }
        let k = KripkeStructure {
            states: self.states,
            init,
            succ: self.succ.into_iter().map(|s| s.into_iter().collect()).collect(),
            labels,
            halt: self.halt,
            aps: self.aps,
        };
        k.validate()?;
        Ok(k)
    }
}

/// A finite path prefix together with its letters.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct TracePrefix {
    pub states: Vec<StateId>,
    pub letters: Vec<Letter>,
}

impl TracePrefix {
    pub fn from_states(k: &KripkeStructure, states: Vec<StateId>) -> Self {
        let letters = states.iter().map(|&s| k.letter(s)).collect();
        TracePrefix { states, letters }
    }

    /// Number of positions, `k + 1`.
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// True iff this is an initialized path of `k` whose letters match the
    /// labeling.
    pub fn is_trace_of(&self, k: &KripkeStructure) -> bool {
        if self.states.is_empty() || self.states.len() != self.letters.len() {
            return false;
        }
        if self.states[0] != k.init() || self.states.iter().any(|&s| s >= k.num_states()) {
            return false;
        }
        if !self.states.windows(2).all(|w| k.has_transition(w[0], w[1])) {
            return false;
        }
        self.states.iter().zip(&self.letters).all(|(&s, l)| *l == k.letter(s))
    }

    /// `{a,b} {a} {}` rendering used by witness files.
    pub fn render_letters(&self) -> String {
        self.letters
            .iter()
            .map(|l| format!("{{{}}}", l.iter().map(String::as_str).collect::<Vec<_>>().join(",")))
            .collect::<Vec<_>>()
            .join(" ")
    }
}

/// One structure per trace variable (the multi-model semantics).
#[derive(Clone, Debug, Default)]
pub struct ModelMap {
    models: BTreeMap<String, Arc<KripkeStructure>>,
}

impl ModelMap {
    pub fn new() -> Self {
        Self::default()
    }

    /// Every listed variable ranges over the traces of the same structure.
    pub fn uniform<'a>(vars: impl IntoIterator<Item = &'a str>, k: KripkeStructure) -> Self {
        let k = Arc::new(k);
        let mut m = ModelMap::new();
        for v in vars {
            m.models.insert(v.to_string(), k.clone());
        }
        m
    }

    pub fn insert(&mut self, var: &str, k: impl Into<Arc<KripkeStructure>>) {
        self.models.insert(var.to_string(), k.into());
    }

    pub fn get(&self, var: &str) -> Option<&KripkeStructure> {
        self.models.get(var).map(|k| k.as_ref())
    }

    pub fn vars(&self) -> impl Iterator<Item = &str> {
        self.models.keys().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.models.len()
    }

    pub fn is_empty(&self) -> bool {
        self.models.is_empty()
    }
}

// ---------------------------------------------------------------------------
// `.kr` parser

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Semi,
    LBrace,
    RBrace,
    Comma,
    Arrow,
}

#[derive(Debug, Clone)]
struct Spanned {
    tok: Tok,
    line: usize,
    col: usize,
}

fn lex(text: &str) -> Result<Vec<Spanned>, KripkeError> {
    let mut out = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let line_no = ln + 1;
        let chars: Vec<char> = line.chars().collect();
        let mut i = 0;
        while i < chars.len() {
            let c = chars[i];
            let col = i + 1;
            match c {
                '#' => break,
                c if c.is_whitespace() => i += 1,
                ';' => {
                    out.push(Spanned { tok: Tok::Semi, line: line_no, col });
                    i += 1;
                }
                '{' => {
                    out.push(Spanned { tok: Tok::LBrace, line: line_no, col });
                    i += 1;
                }
                '}' => {
                    out.push(Spanned { tok: Tok::RBrace, line: line_no, col });
                    i += 1;
                }
                ',' => {
                    out.push(Spanned { tok: Tok::Comma, line: line_no, col });
                    i += 1;
                }
                '-' if chars.get(i + 1) == Some(&'>') => {
                    out.push(Spanned { tok: Tok::Arrow, line: line_no, col });
                    i += 2;
                }
                c if c.is_ascii_alphabetic() || c == '_' => {
                    let start = i;
                    while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                        i += 1;
                    }
                    let ident: String = chars[start..i].iter().collect();
                    out.push(Spanned { tok: Tok::Ident(ident), line: line_no, col });
                }
                other => {
                    return Err(KripkeError::Syntax {
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
    eof: (usize, usize),
}

impl Parser {
    fn peek(&self) -> Option<&Spanned> {
        self.toks.get(self.pos)
    }

    fn here(&self) -> (usize, usize) {
        self.peek().map(|t| (t.line, t.col)).unwrap_or(self.eof)
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T, KripkeError> {
        let (line, col) = self.here();
        Err(KripkeError::Syntax { line, col, msg: msg.into() })
    }

    fn ident(&mut self) -> Result<(String, usize, usize), KripkeError> {
        match self.peek().cloned() {
            Some(Spanned { tok: Tok::Ident(s), line, col }) => {
                self.pos += 1;
                Ok((s, line, col))
            }
            _ => self.err("expected identifier"),
        }
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<(), KripkeError> {
        match self.peek() {
            Some(t) if t.tok == tok => {
                self.pos += 1;
                Ok(())
            }
            _ => self.err(format!("expected {what}")),
        }
    }

    fn at(&self, tok: &Tok) -> bool {
        matches!(self.peek(), Some(t) if t.tok == *tok)
    }

    /// Identifiers up to the terminating `;`.
    fn ident_list(&mut self) -> Result<Vec<(String, usize, usize)>, KripkeError> {
        let mut out = Vec::new();
        while !self.at(&Tok::Semi) {
            if self.peek().is_none() {
                return self.err("expected `;`");
            }
            out.push(self.ident()?);
            if self.at(&Tok::Comma) {
                self.pos += 1;
            }
        }
        self.pos += 1;
        Ok(out)
    }
}

/// Parses and validates a `.kr` document.
pub fn parse_kripke(text: &str) -> Result<KripkeStructure, KripkeError> {
    let toks = lex(text)?;
    let eof = (text.lines().count().max(1), text.lines().last().map_or(1, |l| l.len() + 1));
    let mut p = Parser { toks, pos: 0, eof };

    let mut b = KripkeBuilder::new();
    let mut init_seen = false;
    let undeclared = |kind, name: String, line, col| KripkeError::Undeclared { kind, name, line, col };

    while p.peek().is_some() {
        let (kw, kl, kc) = p.ident()?;
        match kw.as_str() {
            "ap" => {
                for (name, line, col) in p.ident_list()? {
                    b.ap(&name).map_err(|e| match e {
                        KripkeError::DuplicateAp { name, .. } => {
                            KripkeError::DuplicateAp { name, line, col }
                        }
                        e => e,
                    })?;
                }
            }
            "states" => {
                for (name, line, col) in p.ident_list()? {
                    b.state(&name).map_err(|e| match e {
                        KripkeError::DuplicateState { name, .. } => {
                            KripkeError::DuplicateState { name, line, col }
                        }
                        e => e,
                    })?;
                }
            }
            "init" => {
                let (name, line, col) = p.ident()?;
                p.expect(Tok::Semi, "`;`")?;
                if init_seen {
                    return Err(KripkeError::DuplicateInit { line: kl, col: kc });
                }
                b.init(&name).map_err(|_| undeclared("state", name, line, col))?;
                init_seen = true;
            }
            "halt" => {
                for (name, line, col) in p.ident_list()? {
                    b.halt(&name).map_err(|_| undeclared("state", name, line, col))?;
                }
            }
            "label" => {
                let (state, sl, sc) = p.ident()?;
                p.expect(Tok::LBrace, "`{`")?;
                let mut aps = Vec::new();
                while !p.at(&Tok::RBrace) {
                    if p.peek().is_none() {
                        return p.err("expected `}`");
                    }
                    aps.push(p.ident()?);
                    if p.at(&Tok::Comma) {
                        p.pos += 1;
                    }
                }
                p.pos += 1;
                p.expect(Tok::Semi, "`;`")?;
                if b.state_id(&state).is_none() {
                    return Err(undeclared("state", state, sl, sc));
                }
                for (ap, line, col) in &aps {
                    if !b.ap_ix.contains_key(ap) {
                        return Err(undeclared("proposition", ap.clone(), *line, *col));
                    }
                }
                b.label(&state, aps.iter().map(|(a, _, _)| a.as_str())).map_err(|e| match e {
                    KripkeError::DuplicateLabel { name, .. } => {
                        KripkeError::DuplicateLabel { name, line: kl, col: kc }
                    }
                    e => e,
                })?;
            }
            "trans" => {
                let (from, fl, fc) = p.ident()?;
                p.expect(Tok::Arrow, "`->`")?;
                let mut targets = vec![p.ident()?];
                while p.at(&Tok::Comma) {
                    p.pos += 1;
                    targets.push(p.ident()?);
                }
                p.expect(Tok::Semi, "`;`")?;
                if b.state_id(&from).is_none() {
                    return Err(undeclared("state", from, fl, fc));
                }
                for (to, tl, tc) in targets {
                    if b.state_id(&to).is_none() {
                        return Err(undeclared("state", to, tl, tc));
                    }
                    b.trans(&from, &to)?;
                }
            }
            other => {
                return Err(KripkeError::Syntax {
                    line: kl,
                    col: kc,
                    msg: format!("unknown statement `{other}`"),
                })
            }
        }
    }
    b.build()
}
