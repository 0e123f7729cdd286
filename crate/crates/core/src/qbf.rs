//! Prenex QBF: representation, built-in solver, QCIR output and an
//! adapter for external solvers.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::io::{Read as _, Write as _};
use std::process::{Command, Stdio};
use std::time::Duration;

use thiserror::Error;
use wait_timeout::ChildExt;

use crate::circuit::{deep, Circuit, Node, NodeId, Var};
use crate::hyperltl::Quantifier;
use crate::sat::{Lit, Solver};

pub const DEFAULT_NODE_CAP: usize = 50_000_000;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum QbfError {
    #[error("circuit grew past {0} nodes")]
    ResourceLimit(usize),
    #[error("external solver not found: {0}")]
    SolverNotFound(String),
    #[error("external solver timed out after {0} s")]
    Timeout(u64),
    #[error("unparsable solver output: {0:?}")]
    UnparsableOutput(String),
    #[error("command template lacks a {{file}} placeholder")]
    MissingPlaceholder,
    #[error("i/o error: {0}")]
    Io(String),
    #[error("QCIR line {line}: {msg}")]
    Qcir { line: usize, msg: String },
}

#[derive(Debug, Clone)]
pub struct PrenexQBF {
    pub blocks: Vec<(Quantifier, Vec<Var>)>,
    pub circuit: Circuit,
    pub matrix: NodeId,
    /// Name of each variable, indexed by [`Var`].
    pub names: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SolveResult {
    pub value: bool,
    /// Assignment to the first block: a model when that block is
    /// existential and the value is true, a countermodel when it is
    /// universal and the value is false.
    pub witness: Option<BTreeMap<Var, bool>>,
}

#[derive(Debug, Clone, Copy)]
pub struct SolveOptions {
    pub node_cap: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions { node_cap: DEFAULT_NODE_CAP }
    }
}

impl PrenexQBF {
    pub fn new(circuit: Circuit, matrix: NodeId, names: Vec<String>) -> Self {
        PrenexQBF { blocks: Vec::new(), circuit, matrix, names }
    }

    pub fn num_vars(&self) -> usize {
        self.names.len()
    }

    /// Drops empty blocks and merges neighbours with the same quantifier.
    pub fn normalize(&mut self) {
        let mut out: Vec<(Quantifier, Vec<Var>)> = Vec::new();
        for (q, vs) in self.blocks.drain(..) {
            if vs.is_empty() {
                continue;
            }
            match out.last_mut() {
                Some((last, acc)) if *last == q => acc.extend(vs),
                _ => out.push((q, vs)),
            }
        }
        self.blocks = out;
    }

    pub fn outer_quantifier(&self) -> Option<Quantifier> {
        self.blocks.first().map(|(q, _)| *q)
    }
}

/// Solves with the default options.
pub fn solve(q: &PrenexQBF) -> Result<SolveResult, QbfError> {
    solve_with(q, SolveOptions::default())
}

/// Expands every block past the second one variable by variable (innermost
/// block first, reverse layout order), then decides the remaining one- or
/// two-block problem with SAT calls. Two blocks are handled by
/// counterexample-guided expansion of the inner block.
pub fn solve_with(q: &PrenexQBF, opts: SolveOptions) -> Result<SolveResult, QbfError> {
    let mut q = q.clone();
    q.normalize();
    let mut matrix = q.matrix;
    while q.blocks.len() > 2 {
        let (quant, vars) = q.blocks.pop().unwrap();
        for &x in vars.iter().rev() {
            matrix = Eliminator::new(&mut q.circuit, x, quant).run(matrix);
            if q.circuit.len() > opts.node_cap {
                return Err(QbfError::ResourceLimit(q.circuit.len()));
            }
        }
    }
    let c = &mut q.circuit;
    let nvars = q.names.len();
    match q.blocks.as_slice() {
        [] => Ok(SolveResult { value: c.as_const(matrix).unwrap_or(true), witness: None }),
        [(quant, outer)] => {
            let target = if *quant == Quantifier::Exists { matrix } else { c.not(matrix) };
            let mut sat = SatEncoding::new(nvars, outer);
            let root = sat.encode(c, target);
            sat.solver.add_clause(&[root]);
            let found = sat.solver.solve(&[]);
            let value = found == (*quant == Quantifier::Exists);
            let witness = found.then(|| sat.assignment(outer));
            Ok(SolveResult { value, witness })
        }
        [(quant, outer), (_, inner)] => {
            let target = if *quant == Quantifier::Exists { matrix } else { c.not(matrix) };
            let (found, witness) = exists_forall(c, target, outer, inner, nvars, opts)?;
            let value = found == (*quant == Quantifier::Exists);
            Ok(SolveResult { value, witness })
        }
        _ => unreachable!(),
    }
}

/// Decides `∃outer ∀inner. f`, returning the outer model when true.
fn exists_forall(
    c: &mut Circuit,
    f: NodeId,
    outer: &[Var],
    inner: &[Var],
    nvars: usize,
    opts: SolveOptions,
) -> Result<(bool, Option<BTreeMap<Var, bool>>), QbfError> {
    let mut candidates = SatEncoding::new(nvars, outer);
    let neg = c.not(f);
    let mut checker = SatEncoding::new(nvars, &[outer, inner].concat());
    let root = checker.encode(c, neg);
    checker.solver.add_clause(&[root]);
    let mut inner_mask = vec![None; nvars];
    loop {
        if !candidates.solver.solve(&[]) {
            return Ok((false, None));
        }
        let cand = candidates.assignment(outer);
        let assume: Vec<Lit> = cand.iter().map(|(&v, &b)| checker.input_lit(v, b)).collect();
        if !checker.solver.solve(&assume) {
            return Ok((true, Some(cand)));
        }
        for &y in inner {
            inner_mask[y as usize] = Some(checker.model(y));
        }
        let refined = c.restrict(f, &|v| inner_mask[v as usize]);
        if c.len() > opts.node_cap {
            return Err(QbfError::ResourceLimit(c.len()));
        }
        let lit = candidates.encode(c, refined);
        candidates.solver.add_clause(&[lit]);
    }
}

/// Tseitin encoding of circuit nodes into one incremental SAT instance.
struct SatEncoding {
    solver: Solver,
    inputs: Vec<Option<u32>>,
    gates: HashMap<NodeId, Lit>,
    truth: Lit,
}

impl SatEncoding {
    /// `inputs` become the priority variables, in the given order.
    fn new(nvars: usize, inputs: &[Var]) -> Self {
        let mut solver = Solver::new();
        let mut map = vec![None; nvars];
        for &v in inputs {
            map[v as usize] = Some(solver.new_var(true));
        }
        let t = solver.new_var(false);
        let truth = Lit::new(t, true);
        solver.add_clause(&[truth]);
        SatEncoding { solver, inputs: map, gates: HashMap::new(), truth }
    }

    fn input_lit(&mut self, v: Var, positive: bool) -> Lit {
        let sv = match self.inputs[v as usize] {
            Some(sv) => sv,
            None => {
                let sv = self.solver.new_var(false);
                self.inputs[v as usize] = Some(sv);
                sv
            }
        };
        Lit::new(sv, positive)
    }

    fn model(&self, v: Var) -> bool {
        self.inputs[v as usize].is_some_and(|sv| self.solver.model_value(sv))
    }

    fn assignment(&self, vars: &[Var]) -> BTreeMap<Var, bool> {
        vars.iter().map(|&v| (v, self.model(v))).collect()
    }

    fn encode(&mut self, c: &Circuit, root: NodeId) -> Lit {
        if let Some(&l) = self.gates.get(&root) {
            return l;
        }
        for id in c.topological(root) {
            if self.gates.contains_key(&id) {
                continue;
            }
            let lit = match c.node(id) {
                Node::Const(b) => {
                    if *b {
                        self.truth
                    } else {
                        !self.truth
                    }
                }
                Node::Lit(v, p) => self.input_lit(*v, *p),
                Node::And(cs) | Node::Or(cs) => {
                    let is_and = matches!(c.node(id), Node::And(_));
                    let kids: Vec<Lit> = cs.iter().map(|ch| self.gates[ch]).collect();
                    let g = Lit::new(self.solver.new_var(false), true);
                    // an Or gate is the negation of the And of negated children
                    let (out, kids): (Lit, Vec<Lit>) =
                        if is_and { (g, kids) } else { (!g, kids.into_iter().map(|l| !l).collect()) };
                    let mut big = Vec::with_capacity(kids.len() + 1);
                    big.push(out);
                    for &k in &kids {
                        self.solver.add_clause(&[!out, k]);
                        big.push(!k);
                    }
                    self.solver.add_clause(&big);
                    g
                }
            };
            self.gates.insert(id, lit);
        }
        self.gates[&root]
    }
}

/// Removes one quantified variable by cofactoring, pushing the quantifier
/// as far down as the connectives allow.
struct Eliminator<'c> {
    c: &'c mut Circuit,
    x: Var,
    forall: bool,
    memo: HashMap<NodeId, NodeId>,
    cofactors: [HashMap<NodeId, NodeId>; 2],
}

impl<'c> Eliminator<'c> {
    fn new(c: &'c mut Circuit, x: Var, q: Quantifier) -> Self {
        Eliminator {
            c,
            x,
            forall: q == Quantifier::Forall,
            memo: HashMap::new(),
            cofactors: [HashMap::new(), HashMap::new()],
        }
    }

    fn run(mut self, root: NodeId) -> NodeId {
        self.elim(root)
    }

    fn elim(&mut self, n: NodeId) -> NodeId {
        if !self.c.may_depend(n, self.x) {
            return n;
        }
        if let Some(&r) = self.memo.get(&n) {
            return r;
        }
        let r = deep(|| match self.c.node(n).clone() {
            Node::Const(_) => n,
            Node::Lit(v, _) if v != self.x => n,
            Node::Lit(..) => self.c.constant(!self.forall),
            Node::And(cs) | Node::Or(cs) => {
                let is_and = matches!(self.c.node(n), Node::And(_));
                if is_and == self.forall {
                    let kids: Vec<NodeId> = cs.iter().map(|&ch| self.elim(ch)).collect();
                    return self.gate(is_and, kids);
                }
                let (dep, mut rest): (Vec<NodeId>, Vec<NodeId>) =
                    cs.iter().partition(|&&ch| self.c.may_depend(ch, self.x));
                match dep.len() {
                    0 => n,
                    1 => {
                        rest.push(self.elim(dep[0]));
                        self.gate(is_and, rest)
                    }
                    _ => {
                        let d = self.gate(is_and, dep);
                        let lo = self.cofactor(d, false);
                        let hi = self.cofactor(d, true);
                        rest.push(self.combine(is_and, lo, hi));
                        self.gate(is_and, rest)
                    }
                }
            }
        });
        self.memo.insert(n, r);
        r
    }

    fn gate(&mut self, is_and: bool, kids: Vec<NodeId>) -> NodeId {
        if is_and {
            self.c.and(kids)
        } else {
            self.c.or(kids)
        }
    }

    /// Joins two cofactors of an `inner`-gate with the quantifier's
    /// connective, factoring out children they share.
    fn combine(&mut self, inner_is_and: bool, a: NodeId, b: NodeId) -> NodeId {
        let children = |c: &Circuit, n: NodeId| -> Vec<NodeId> {
            match c.node(n) {
                Node::And(cs) if inner_is_and => cs.to_vec(),
                Node::Or(cs) if !inner_is_and => cs.to_vec(),
                _ => vec![n],
            }
        };
        let (ka, kb) = (children(self.c, a), children(self.c, b));
        let common: Vec<NodeId> = ka.iter().filter(|n| kb.binary_search(n).is_ok()).copied().collect();
        let outer_is_and = !inner_is_and;
        if common.is_empty() {
            return self.gate(outer_is_and, vec![a, b]);
        }
        let ra: Vec<NodeId> = ka.into_iter().filter(|n| common.binary_search(n).is_err()).collect();
        let rb: Vec<NodeId> = kb.into_iter().filter(|n| common.binary_search(n).is_err()).collect();
        let ga = self.gate(inner_is_and, ra);
        let gb = self.gate(inner_is_and, rb);
        let joined = self.gate(outer_is_and, vec![ga, gb]);
        let mut all = common;
        all.push(joined);
        self.gate(inner_is_and, all)
    }

    fn cofactor(&mut self, n: NodeId, b: bool) -> NodeId {
        if !self.c.may_depend(n, self.x) {
            return n;
        }
        if let Some(&r) = self.cofactors[b as usize].get(&n) {
            return r;
        }
        let r = deep(|| match self.c.node(n).clone() {
            Node::Const(_) => n,
            Node::Lit(v, p) if v == self.x => self.c.constant(p == b),
            Node::Lit(..) => n,
            Node::And(cs) => {
                let kids: Vec<NodeId> = cs.iter().map(|&ch| self.cofactor(ch, b)).collect();
                self.c.and(kids)
            }
            Node::Or(cs) => {
                let kids: Vec<NodeId> = cs.iter().map(|&ch| self.cofactor(ch, b)).collect();
                self.c.or(kids)
            }
        });
        self.cofactors[b as usize].insert(n, r);
        r
    }
}

/// Renders the QBF in QCIR-G14 syntax.
pub fn emit_qcir(q: &PrenexQBF) -> String {
    let c = &q.circuit;
    let mut out = String::from("#QCIR-G14\n");
    for (quant, vars) in &q.blocks {
        if vars.is_empty() {
            continue;
        }
        let names: Vec<&str> = vars.iter().map(|&v| q.names[v as usize].as_str()).collect();
        let _ = writeln!(out, "{}({})", quant, names.join(", "));
    }
    let mut gate_no: HashMap<NodeId, usize> = HashMap::new();
    let mut lines = Vec::new();
    let lit_text = |v: Var, p: bool| {
        let name = &q.names[v as usize];
        if p {
            name.clone()
        } else {
            format!("-{name}")
        }
    };
    for id in c.topological(q.matrix) {
        let (kind, kids): (&str, Vec<String>) = match c.node(id) {
            Node::Const(true) => ("and", vec![]),
            Node::Const(false) => ("or", vec![]),
            Node::Lit(..) => continue,
            Node::And(cs) | Node::Or(cs) => {
                let kind = if matches!(c.node(id), Node::And(_)) { "and" } else { "or" };
                let kids = cs
                    .iter()
                    .map(|ch| match c.node(*ch) {
                        Node::Lit(v, p) => lit_text(*v, *p),
                        _ => format!("g{}", gate_no[ch]),
                    })
                    .collect();
                (kind, kids)
            }
        };
        let n = gate_no.len() + 1;
        gate_no.insert(id, n);
        lines.push(format!("g{n} = {kind}({})", kids.join(", ")));
    }
    let output = match c.node(q.matrix) {
        Node::Lit(v, p) => {
            let n = gate_no.len() + 1;
            lines.push(format!("g{n} = and({})", lit_text(*v, *p)));
            n
        }
        _ => gate_no[&q.matrix],
    };
    let _ = writeln!(out, "output(g{output})");
    for l in lines {
        out.push_str(&l);
        out.push('\n');
    }
    out
}

/// Reads a QCIR-G14 document produced by [`emit_qcir`] (or of the same
/// shape).
pub fn parse_qcir(text: &str) -> Result<PrenexQBF, QbfError> {
    let err = |line: usize, msg: &str| QbfError::Qcir { line, msg: msg.to_string() };
    let mut circuit = Circuit::new();
    let mut names: Vec<String> = Vec::new();
    let mut var_of: HashMap<String, Var> = HashMap::new();
    let mut gates: HashMap<String, NodeId> = HashMap::new();
    let mut blocks = Vec::new();
    let mut output: Option<(usize, String)> = None;
    let args = |s: &str, line: usize| -> Result<Vec<String>, QbfError> {
        let open = s.find('(').ok_or_else(|| err(line, "expected `(`"))?;
        let inner = s[open + 1..].strip_suffix(')').ok_or_else(|| err(line, "expected `)`"))?;
        Ok(inner.split(',').map(str::trim).filter(|a| !a.is_empty()).map(String::from).collect())
    };
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let s = raw.trim();
        if s.is_empty() || s.starts_with('#') {
            continue;
        }
        if s.starts_with("exists(") || s.starts_with("forall(") {
            let quant = if s.starts_with("exists") { Quantifier::Exists } else { Quantifier::Forall };
            let mut vars = Vec::new();
            for a in args(s, line)? {
                if var_of.contains_key(&a) {
                    return Err(err(line, "variable quantified twice"));
                }
                let v = names.len() as Var;
                var_of.insert(a.clone(), v);
                names.push(a);
                vars.push(v);
            }
            blocks.push((quant, vars));
        } else if s.starts_with("output(") {
            let a = args(s, line)?;
            if a.len() != 1 {
                return Err(err(line, "output takes one gate"));
            }
            output = Some((line, a[0].clone()));
        } else if let Some((lhs, rhs)) = s.split_once('=') {
            let lhs = lhs.trim().to_string();
            let rhs = rhs.trim();
            let is_and = rhs.starts_with("and(");
            if !is_and && !rhs.starts_with("or(") {
                return Err(err(line, "unsupported gate type"));
            }
            let mut kids = Vec::new();
            for a in args(rhs, line)? {
                let (neg, name) = match a.strip_prefix('-') {
                    Some(n) => (true, n),
                    None => (false, a.as_str()),
                };
                let node = if let Some(&g) = gates.get(name) {
                    g
                } else if let Some(&v) = var_of.get(name) {
                    circuit.var(v)
                } else {
                    return Err(err(line, &format!("unknown identifier `{name}`")));
                };
                kids.push(if neg { circuit.not(node) } else { node });
            }
            let g = if is_and { circuit.and(kids) } else { circuit.or(kids) };
            gates.insert(lhs, g);
        } else {
            return Err(err(line, "unrecognised statement"));
        }
    }
    let (line, out) = output.ok_or_else(|| err(0, "missing output"))?;
    let matrix = *gates.get(&out).ok_or_else(|| err(line, "output gate undefined"))?;
    Ok(PrenexQBF { blocks, circuit, matrix, names })
}

/// Runs an external QCIR solver. `template` must contain `{file}`, which is
/// replaced by the path of a temporary QCIR file; the command runs through
/// `sh -c`.
pub fn run_external(
    template: &str,
    q: &PrenexQBF,
    timeout: Option<Duration>,
) -> Result<SolveResult, QbfError> {
    if !template.contains("{file}") {
        return Err(QbfError::MissingPlaceholder);
    }
    let io = |e: std::io::Error| QbfError::Io(e.to_string());
    let mut file = tempfile::Builder::new().suffix(".qcir").tempfile().map_err(io)?;
    file.write_all(emit_qcir(q).as_bytes()).map_err(io)?;
    file.flush().map_err(io)?;
    let path = file.path().to_string_lossy().replace('\'', "'\\''");
    let cmd = template.replace("{file}", &format!("'{path}'"));
    let mut child = Command::new("sh")
        .arg("-c")
        .arg(&cmd)
        .stdin(Stdio::null())
        .stdout(Stdio::piped())
        .stderr(Stdio::null())
        .spawn()
        .map_err(|_| QbfError::SolverNotFound(template.to_string()))?;
    let mut stdout = child.stdout.take().unwrap();
    let reader = std::thread::spawn(move || {
        let mut buf = Vec::new();
        let _ = stdout.read_to_end(&mut buf);
        buf
    });
    let status = match timeout {
        Some(t) => match child.wait_timeout(t).map_err(io)? {
            Some(s) => s,
            None => {
                let _ = child.kill();
                let _ = child.wait();
                return Err(QbfError::Timeout(t.as_secs()));
            }
        },
        None => child.wait().map_err(io)?,
    };
    let output = reader.join().unwrap_or_default();
    let text = String::from_utf8_lossy(&output);
    match status.code() {
        Some(10) => return Ok(SolveResult { value: true, witness: None }),
        Some(20) => return Ok(SolveResult { value: false, witness: None }),
        Some(126) | Some(127) => return Err(QbfError::SolverNotFound(template.to_string())),
        _ => {}
    }
    match text.lines().next().map(str::trim) {
        Some("r SAT") => Ok(SolveResult { value: true, witness: None }),
        Some("r UNSAT") => Ok(SolveResult { value: false, witness: None }),
        _ => Err(QbfError::UnparsableOutput(text.chars().take(200).collect())),
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Evaluates by full expansion over all assignments, block by block.
    pub(crate) fn naive(q: &PrenexQBF) -> bool {
        let order: Vec<(Quantifier, Var)> =
            q.blocks.iter().flat_map(|(quant, vs)| vs.iter().map(move |&v| (*quant, v))).collect();
        let mut val = vec![false; q.names.len()];
        fn go(q: &PrenexQBF, order: &[(Quantifier, Var)], val: &mut Vec<bool>) -> bool {
            let Some(((quant, v), rest)) = order.split_first() else {
                return q.circuit.eval(q.matrix, &|x| val[x as usize]);
            };
            let mut results = [false; 2];
            for b in [false, true] {
                val[*v as usize] = b;
                results[b as usize] = go(q, rest, val);
            }
            match quant {
                Quantifier::Exists => results[0] || results[1],
                Quantifier::Forall => results[0] && results[1],
            }
        }
        go(q, &order, &mut val)
    }

    fn names(n: usize) -> Vec<String> {
        (1..=n).map(|i| format!("x{i}")).collect()
    }

    /// ∃x1 ∀x2 ∃x3 ∃x4 ∀x5 over four clauses.
    pub(crate) fn five_variable_example() -> PrenexQBF {
        let mut c = Circuit::new();
        let clauses: [[(Var, bool); 3]; 4] = [
            [(0, true), (1, false), (2, true)],
            [(0, false), (1, true), (3, false)],
            [(2, false), (3, true), (4, false)],
            [(0, true), (3, true), (4, true)],
        ];
        let cls: Vec<NodeId> = clauses
            .iter()
            .map(|cl| {
                let lits: Vec<NodeId> = cl.iter().map(|&(v, p)| c.lit(v, p)).collect();
                c.or(lits)
            })
            .collect();
        let m = c.and(cls);
        let mut q = PrenexQBF::new(c, m, names(5));
        q.blocks = vec![
            (Quantifier::Exists, vec![0]),
            (Quantifier::Forall, vec![1]),
            (Quantifier::Exists, vec![2, 3]),
            (Quantifier::Forall, vec![4]),
        ];
        q
    }

    fn random_node(c: &mut Circuit, rng: &mut ChaCha8Rng, n: u32, depth: u32) -> NodeId {
        if depth == 0 || rng.gen_ratio(1, 4) {
            return match rng.gen_range(0..12) {
                0 => c.tru(),
                1 => c.fls(),
                _ => {
                    let v = rng.gen_range(0..n);
                    let positive = rng.gen();
                    c.lit(v, positive)
                }
            };
        }
        let kids: Vec<NodeId> =
            (0..rng.gen_range(2..=3)).map(|_| random_node(c, rng, n, depth - 1)).collect();
        match rng.gen_range(0..3) {
            0 => c.and(kids),
            1 => c.or(kids),
            _ => {
                let a = c.and(kids);
                c.not(a)
            }
        }
    }

    pub(crate) fn random_qbf(rng: &mut ChaCha8Rng, max_vars: u32) -> PrenexQBF {
        let n = rng.gen_range(1..=max_vars);
        let mut c = Circuit::new();
        let depth = rng.gen_range(1..=5);
        let m = random_node(&mut c, rng, n, depth);
        let mut q = PrenexQBF::new(c, m, names(n as usize));
        let mut blocks: Vec<(Quantifier, Vec<Var>)> = Vec::new();
        for v in 0..n {
            if blocks.is_empty() || rng.gen_ratio(1, 3) {
                let quant = if rng.gen() { Quantifier::Exists } else { Quantifier::Forall };
                blocks.push((quant, vec![]));
            }
            blocks.last_mut().unwrap().1.push(v);
        }
        q.blocks = blocks;
        q
    }

    fn check_witness(q: &PrenexQBF, r: &SolveResult) {
        let Some(w) = &r.witness else { return };
        let mut fixed = q.clone();
        fixed.normalize();
        let (quant, outer) = fixed.blocks.remove(0);
        assert_eq!(outer.len(), w.len());
        fixed.matrix = fixed.circuit.restrict(fixed.matrix, &|v| w.get(&v).copied());
        let rest = naive(&fixed);
        match quant {
            Quantifier::Exists => assert!(rest && r.value),
            Quantifier::Forall => assert!(!rest && !r.value),
        }
    }

    #[test]
    fn exists_forall_disjunction() {
        let mut c = Circuit::new();
        let (x, y) = (c.var(0), c.var(1));
        let m = c.or2(x, y);
        let mut q = PrenexQBF::new(c, m, vec!["x".into(), "y".into()]);
        q.blocks = vec![(Quantifier::Exists, vec![0]), (Quantifier::Forall, vec![1])];
        let r = solve(&q).unwrap();
        assert!(r.value);
        assert_eq!(r.witness, Some(BTreeMap::from([(0, true)])));
    }

    #[test]
    fn forall_exists_equivalence_has_no_witness() {
        let mut c = Circuit::new();
        let (x, y) = (c.var(0), c.var(1));
        let m = c.iff(x, y);
        let mut q = PrenexQBF::new(c, m, vec!["x".into(), "y".into()]);
        q.blocks = vec![(Quantifier::Forall, vec![1]), (Quantifier::Exists, vec![0])];
        let r = solve(&q).unwrap();
        assert!(r.value);
        assert_eq!(r.witness, None);
    }

    #[test]
    fn five_variable_example_is_true() {
        let q = five_variable_example();
        assert!(naive(&q));
        let r = solve(&q).unwrap();
        assert!(r.value);
        check_witness(&q, &r);
        let valid: Vec<bool> = [false, true]
            .into_iter()
            .filter(|&b| {
                let mut fixed = q.clone();
                fixed.blocks.remove(0);
                fixed.matrix = fixed.circuit.restrict(fixed.matrix, &|v| (v == 0).then_some(b));
                naive(&fixed)
            })
            .collect();
        // both values of x1 work; false-first branching picks false
        assert_eq!(valid, vec![false, true]);
        assert_eq!(r.witness, Some(BTreeMap::from([(0, false)])));
    }

    #[test]
    fn random_qbfs_match_naive() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..1500 {
            let q = random_qbf(&mut rng, 8);
            let r = solve(&q).unwrap();
            assert_eq!(r.value, naive(&q), "{}", emit_qcir(&q));
            check_witness(&q, &r);
        }
    }

    #[test]
    fn elimination_matches_naive_per_variable() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..300 {
            let q = random_qbf(&mut rng, 6);
            let mut e = q.clone();
            for (quant, vars) in q.blocks.iter().rev() {
                for &x in vars.iter().rev() {
                    e.matrix = Eliminator::new(&mut e.circuit, x, *quant).run(e.matrix);
                }
            }
            assert_eq!(e.circuit.as_const(e.matrix), Some(naive(&q)));
        }
    }

    #[test]
    fn smallest_qcir_document() {
        let mut c = Circuit::new();
        let x = c.var(0);
        let mut q = PrenexQBF::new(c, x, vec!["x".into()]);
        q.blocks = vec![(Quantifier::Exists, vec![0])];
        assert_eq!(emit_qcir(&q), "#QCIR-G14\nexists(x)\noutput(g1)\ng1 = and(x)\n");
    }

    #[test]
    fn qcir_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let q = random_qbf(&mut rng, 6);
            let text = emit_qcir(&q);
            let back = parse_qcir(&text).unwrap();
            assert_eq!(back.names, q.names);
            assert_eq!(back.blocks, q.blocks);
            let n = q.names.len() as u32;
            for bits in 0..1u32 << n {
                let val = |v: Var| bits >> v & 1 == 1;
                assert_eq!(back.circuit.eval(back.matrix, &val), q.circuit.eval(q.matrix, &val));
            }
            assert_eq!(emit_qcir(&back).lines().count(), text.lines().count());
        }
    }

    #[test]
    fn qcir_parse_errors() {
        assert!(matches!(parse_qcir("#QCIR-G14\nexists(x)\n"), Err(QbfError::Qcir { .. })));
        assert!(matches!(
            parse_qcir("#QCIR-G14\nexists(x)\noutput(g1)\ng1 = and(y)\n"),
            Err(QbfError::Qcir { line: 4, .. })
        ));
    }

    fn trivially_true() -> PrenexQBF {
        let mut c = Circuit::new();
        let x = c.var(0);
        let nx = c.not(x);
        let m = c.or2(x, nx);
        let mut q = PrenexQBF::new(c, m, vec!["x".into()]);
        q.blocks = vec![(Quantifier::Forall, vec![0])];
        q
    }

    #[test]
    fn external_exit_codes() {
        let q = trivially_true();
        let t = |cmd: &str| run_external(cmd, &q, Some(Duration::from_secs(10)));
        assert!(t("test -s {file}; exit 10").unwrap().value);
        assert!(!t("exit 20 # {file}").unwrap().value);
        assert!(t("echo 'r SAT' # {file}").unwrap().value);
        assert!(!t("echo 'r UNSAT' # {file}").unwrap().value);
        assert!(matches!(t("echo nonsense # {file}"), Err(QbfError::UnparsableOutput(_))));
        assert!(matches!(t("no-such-solver-xyz {file}"), Err(QbfError::SolverNotFound(_))));
        assert_eq!(t("cat"), Err(QbfError::MissingPlaceholder));
        let slow = run_external("sleep 5 # {file}", &q, Some(Duration::from_millis(200)));
        assert_eq!(slow, Err(QbfError::Timeout(0)));
    }

    #[test]
    fn external_solver_sees_the_document() {
        let q = trivially_true();
        let r = run_external("grep -q 'forall(x)' {file} && exit 10 || exit 20", &q, None).unwrap();
        assert!(r.value);
    }
}
