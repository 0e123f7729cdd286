//! The bound-iteration loop, sound interpretation of QBF answers, and
//! witness decoding with independent re-verification.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::path::PathBuf;
use std::str::FromStr;
use std::time::{Duration, Instant};

use serde::Serialize;
use thiserror::Error;

use crate::circuit::Var;
use crate::encoder::{assemble_qbf, EncodeError, VarLayout};
use crate::hyperltl::{classify_fragment, negate, to_nnf, Fragment, HyperFormula, Quantifier};
use crate::kripke::{KripkeStructure, ModelMap, TracePrefix};
use crate::oracle::{check_with_fixed, OracleError, Semantics, Unrolling};
use crate::qbf::{emit_qcir, run_external, solve_with, QbfError, SolveOptions, DEFAULT_NODE_CAP};

#[derive(Debug, Error)]
pub enum DriverError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("model of `{0}` has no halt state, which the halting semantics require")]
    NoHaltStates(String),
    #[error(transparent)]
    Encode(#[from] EncodeError),
    #[error(transparent)]
    Solver(#[from] QbfError),
    #[error("decoded witness for `{0}` is not a trace of its model")]
    InvalidWitness(String),
    #[error("internal error: witness rejected by the reference evaluator at k = {0}")]
    WitnessRejected(usize),
    #[error("writing {path}: {msg}")]
    Io { path: String, msg: String },
}

/// How the user's formula is checked.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Search for a counterexample: negate, pessimistic by default.
    Falsify,
    /// Try to rule out counterexamples: negate, optimistic by default.
    Prove,
    /// Encode the formula as given.
    Raw,
}

impl Mode {
    pub fn negates(self) -> bool {
        self != Mode::Raw
    }

    pub fn default_semantics(self) -> Semantics {
        match self {
            Mode::Prove => Semantics::Opt,
            Mode::Falsify | Mode::Raw => Semantics::Pes,
        }
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "falsify" => Ok(Mode::Falsify),
            "prove" => Ok(Mode::Prove),
            "raw" => Ok(Mode::Raw),
            other => Err(format!("unknown mode `{other}` (falsify|prove|raw)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SolverChoice {
    Builtin,
    /// Command template with a `{file}` placeholder.
    External(String),
}

impl FromStr for SolverChoice {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "builtin" {
            Ok(SolverChoice::Builtin)
        } else if let Some(cmd) = s.strip_prefix("external:") {
            Ok(SolverChoice::External(cmd.to_string()))
        } else {
            Err(format!("unknown solver `{s}` (builtin|external:\"CMD {{file}}\")"))
        }
    }
}

#[derive(Debug, Clone)]
pub struct CheckConfig {
    pub formula: HyperFormula,
    pub models: ModelMap,
    pub k_from: usize,
    pub k_max: usize,
    pub semantics: Semantics,
    pub negate_first: bool,
    pub paper_literal: bool,
    pub solver: SolverChoice,
    /// Where to write the QCIR of each bound; `{k}` is replaced by the bound.
    pub emit_qcir: Option<PathBuf>,
    pub node_cap: usize,
    pub timeout: Option<Duration>,
}

impl CheckConfig {
    pub fn new(formula: HyperFormula, models: ModelMap, k_max: usize, mode: Mode) -> Self {
        CheckConfig {
            formula,
            models,
            k_from: 0,
            k_max,
            semantics: mode.default_semantics(),
            negate_first: mode.negates(),
            paper_literal: false,
            solver: SolverChoice::Builtin,
            emit_qcir: None,
            node_cap: DEFAULT_NODE_CAP,
            timeout: None,
        }
    }

    pub fn semantics(mut self, sem: Semantics) -> Self {
        self.semantics = sem;
        self
    }

    pub fn from(mut self, k: usize) -> Self {
        self.k_from = k;
        self
    }

    fn validate(&self) -> Result<(), DriverError> {
        if self.k_from > self.k_max {
            return Err(DriverError::Config(format!("--from {} exceeds bound {}", self.k_from, self.k_max)));
        }
        if self.semantics == Semantics::ClassicDual {
            return Err(DriverError::Config("classic-dual is internal".into()));
        }
        for v in self.formula.vars() {
            let m = self
                .models
                .get(v)
                .ok_or_else(|| DriverError::Config(format!("no model for trace variable `{v}`")))?;
            if self.semantics.is_halting() && !m.has_halt_states() {
                return Err(DriverError::NoHaltStates(v.to_string()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Interpretation {
    Holds,
    Fails,
    Unknown,
}

impl Interpretation {
    fn flip(self) -> Self {
        match self {
            Interpretation::Holds => Interpretation::Fails,
            Interpretation::Fails => Interpretation::Holds,
            Interpretation::Unknown => Interpretation::Unknown,
        }
    }
}

impl fmt::Display for Interpretation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Interpretation::Holds => "HOLDS",
            Interpretation::Fails => "FAILS",
            Interpretation::Unknown => "UNKNOWN",
        })
    }
}

/// What a QBF answer licenses about the encoded formula itself: a
/// pessimistic yes is a real yes, an optimistic no is a real no.
pub fn interpret(value: bool, sem: Semantics) -> Interpretation {
    match (sem, value) {
        (Semantics::Pes | Semantics::Hpes, true) => Interpretation::Holds,
        (Semantics::Opt | Semantics::Hopt, false) => Interpretation::Fails,
        _ => Interpretation::Unknown,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundResult {
    pub k: usize,
    pub qbf_value: bool,
    pub interpretation: Interpretation,
    pub millis: u128,
}

#[derive(Debug, Clone)]
pub struct Verdict {
    pub k: usize,
    pub qbf_value: bool,
    /// About the user's formula, negation already undone.
    pub interpretation: Interpretation,
    /// Traces for the leading existential variables of the checked formula.
    pub witness: Option<BTreeMap<String, TracePrefix>>,
    /// Whether the witness passed the reference evaluator; `None` when it
    /// was too large to enumerate.
    pub witness_verified: Option<bool>,
    pub fragment_hint: Fragment,
    /// The formula actually encoded, in negation normal form.
    pub checked: HyperFormula,
    pub bounds: Vec<BoundResult>,
}

/// Decodes the trace of `trace` from an assignment to its block.
pub fn extract_witness(
    assignment: &BTreeMap<Var, bool>,
    layout: &VarLayout,
    trace: &str,
    model: &KripkeStructure,
) -> Result<TracePrefix, DriverError> {
    let invalid = || DriverError::InvalidWitness(trace.to_string());
    let b = layout.block(trace).ok_or_else(invalid)?;
    let mut states = Vec::with_capacity(layout.k + 1);
    for i in 0..=layout.k {
        let mut s = 0usize;
        for j in 0..b.state_bits {
            if *assignment.get(&b.state_bit(j, i)).ok_or_else(invalid)? {
                s |= 1 << j;
            }
        }
        if s >= model.num_states() {
            return Err(invalid());
        }
        states.push(s);
    }
    let prefix = TracePrefix::from_states(model, states);
    if !prefix.is_trace_of(model) {
        return Err(invalid());
    }
    for (i, &s) in prefix.states.iter().enumerate() {
        let bits_match = (0..b.aps.len())
            .all(|a| assignment.get(&b.ap_var(a, i)).copied() == Some(model.holds(s, a)))
            && assignment.get(&b.halt_var(i)).copied() == Some(model.is_halt(s));
        if !bits_match {
            return Err(invalid());
        }
    }
    Ok(prefix)
}

/// Re-checks a witness by enumeration: the given traces are substituted
/// for their variables and the remaining quantifiers are expanded.
pub fn verify_witness(
    w: &BTreeMap<String, TracePrefix>,
    models: &ModelMap,
    checked: &HyperFormula,
    un: Unrolling,
) -> Result<bool, OracleError> {
    for (v, p) in w {
        let model = models.get(v).ok_or_else(|| OracleError::MissingModel(v.clone()))?;
        if p.len() != un.k + 1 || !p.is_trace_of(model) {
            return Ok(false);
        }
    }
    check_with_fixed(models, checked, un, w)
}

/// Runs the bounded check for `k_from..=k_max`, stopping at the first
/// conclusive bound.
pub fn check(cfg: &CheckConfig) -> Result<Verdict, DriverError> {
    cfg.validate()?;
    let checked = if cfg.negate_first { negate(&cfg.formula) } else { to_nnf(&cfg.formula) };
    let fragment_hint = classify_fragment(&checked);
    let mut bounds = Vec::new();
    for k in cfg.k_from..=cfg.k_max {
        let started = Instant::now();
        let un = Unrolling::new(k, cfg.semantics).paper_literal(cfg.paper_literal);
        let enc = assemble_qbf(&checked, &cfg.models, un)?;
        if let Some(path) = &cfg.emit_qcir {
            let path = path.to_string_lossy().replace("{k}", &k.to_string());
            std::fs::write(&path, emit_qcir(&enc.qbf))
                .map_err(|e| DriverError::Io { path: path.clone(), msg: e.to_string() })?;
        }
        let result = match &cfg.solver {
            SolverChoice::Builtin => solve_with(&enc.qbf, SolveOptions { node_cap: cfg.node_cap })?,
            SolverChoice::External(cmd) => run_external(cmd, &enc.qbf, cfg.timeout)?,
        };
        let raw = interpret(result.value, cfg.semantics);
        let interpretation = if cfg.negate_first { raw.flip() } else { raw };
        bounds.push(BoundResult {
            k,
            qbf_value: result.value,
            interpretation,
            millis: started.elapsed().as_millis(),
        });
        if interpretation == Interpretation::Unknown && k < cfg.k_max {
            continue;
        }
        let mut witness = None;
        let mut witness_verified = None;
        let outer_exists = enc.qbf.outer_quantifier() == Some(Quantifier::Exists);
        if let (true, true, Some(assign)) = (outer_exists, result.value, &result.witness) {
            let mut w = BTreeMap::new();
            for (q, v) in &checked.prefix {
                if *q != Quantifier::Exists {
                    break;
                }
                let model = cfg.models.get(v).expect("validated");
                w.insert(v.clone(), extract_witness(assign, &enc.layout, v, model)?);
            }
            witness_verified = match verify_witness(&w, &cfg.models, &checked, un) {
                Ok(true) => Some(true),
                Ok(false) => return Err(DriverError::WitnessRejected(k)),
                Err(OracleError::ExplosionGuard(_)) => None,
                Err(e) => return Err(DriverError::Config(e.to_string())),
            };
            witness = Some(w);
        }
        return Ok(Verdict {
            k,
            qbf_value: result.value,
            interpretation,
            witness,
            witness_verified,
            fragment_hint,
            checked,
            bounds,
        });
    }
    unreachable!("the loop returns at k_max")
}

/// Versioned machine-readable report.
#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub schema: &'static str,
    pub formula: String,
    pub checked: String,
    pub semantics: Semantics,
    pub negated: bool,
    pub paper_literal: bool,
    pub k: usize,
    pub qbf_value: bool,
    pub verdict: Interpretation,
    pub fragment: Fragment,
    pub witness: Option<BTreeMap<String, WitnessTrace>>,
    pub witness_verified: Option<bool>,
    pub bounds: Vec<BoundResult>,
}

#[derive(Debug, Clone, Serialize)]
pub struct WitnessTrace {
    pub states: Vec<String>,
    pub letters: Vec<Vec<String>>,
}

impl Report {
    pub fn new(cfg: &CheckConfig, v: &Verdict) -> Self {
        let witness = v.witness.as_ref().map(|w| {
            w.iter()
                .map(|(var, p)| {
                    let model = cfg.models.get(var).expect("validated");
                    let trace = WitnessTrace {
                        states: p.states.iter().map(|&s| model.state_name(s).to_string()).collect(),
                        letters: p.letters.iter().map(|l| l.iter().cloned().collect()).collect(),
                    };
                    (var.clone(), trace)
                })
                .collect()
        });
        Report {
            schema: "hyperbmc/1",
            formula: cfg.formula.to_string(),
            checked: v.checked.to_string(),
            semantics: cfg.semantics,
            negated: cfg.negate_first,
            paper_literal: cfg.paper_literal,
            k: v.k,
            qbf_value: v.qbf_value,
            verdict: v.interpretation,
            fragment: v.fragment_hint,
            witness,
            witness_verified: v.witness_verified,
            bounds: v.bounds.clone(),
        }
    }
}

/// Human-readable summary.
pub fn render_text(cfg: &CheckConfig, v: &Verdict) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "verdict: {} at k = {}", v.interpretation, v.k);
    let what = if cfg.negate_first { "negated formula" } else { "formula" };
    let _ = writeln!(
        out,
        "encoded {what} under {}: QBF {}",
        cfg.semantics,
        if v.qbf_value { "TRUE" } else { "FALSE" }
    );
    let _ = writeln!(out, "fragment: {}", v.fragment_hint);
    if let Some(w) = &v.witness {
        let label = if cfg.negate_first { "counterexample" } else { "witness" };
        let status = match v.witness_verified {
            Some(true) => "verified",
            Some(false) => "REJECTED",
            None => "not re-checked (too many traces)",
        };
        let _ = writeln!(out, "{label} ({status}):");
        for (var, p) in w {
            let model = cfg.models.get(var).expect("validated");
            let names: Vec<&str> = p.states.iter().map(|&s| model.state_name(s)).collect();
            let _ = writeln!(out, "  {var}: {}", names.join(" "));
            let _ = writeln!(out, "  {var}: {}", p.render_letters());
        }
    }
    if v.interpretation == Interpretation::Unknown {
        let hint = match v.fragment_hint {
            Fragment::SyntacticSafety => "checked formula is a safety formula; pes/hpes can confirm it",
            Fragment::SyntacticCosafety => "checked formula is a co-safety formula; opt/hopt can refute it",
            Fragment::Neither => "try a larger bound or a halting semantics",
        };
        let _ = writeln!(out, "hint: {hint}");
    }
    out
}

/// One line per trace variable: `VAR: {a,b} {a} {}`.
pub fn render_witness_file(w: &BTreeMap<String, TracePrefix>) -> String {
    w.iter().map(|(v, p)| format!("{v}: {}\n", p.render_letters())).collect()
}
