//! Generators for the case-study structures and a small library of formulas.
//!
//! Each generator explores the reachable state space of an explicit model and
//! emits a validated [`KripkeStructure`] with deterministic state names.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::kripke::{KripkeBuilder, KripkeError, KripkeStructure};

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("bakery supports 2 or 3 processes, got {0}")]
    ProcessCount(usize),
    #[error("grid must have positive width and height")]
    EmptyGrid,
    #[error("cell ({0}, {1}) is outside the grid")]
    OutOfBounds(usize, usize),
    #[error("grid needs at least one initial cell")]
    NoInit,
    #[error("grid needs at least one goal cell")]
    NoGoal,
    #[error("cell ({0}, {1}) is both an obstacle and an initial or goal cell")]
    Blocked(usize, usize),
    #[error("map line {line}: {msg}")]
    Map { line: usize, msg: String },
    #[error("unknown variant `{0}` (expected correct or incorrect)")]
    UnknownVariant(String),
    #[error("unknown builtin spec `{0}`")]
    UnknownSpec(String),
    #[error(transparent)]
    Kripke(#[from] KripkeError),
}

/// Breadth-first exploration from `init`; states are named in discovery order
/// by `name`, which must be injective.
fn explore<K, S, N, L, H>(
    init: K,
    aps: &[&str],
    mut succ: S,
    name: N,
    label: L,
    is_halt: H,
) -> Result<KripkeStructure, ModelError>
where
    K: Ord + Clone,
    S: FnMut(&K) -> Vec<K>,
    N: Fn(&K) -> String,
    L: Fn(&K) -> Vec<String>,
    H: Fn(&K) -> bool,
{
    let mut b = KripkeBuilder::new();
    for ap in aps {
        b.ap(ap)?;
    }
    let mut seen: BTreeMap<K, String> = BTreeMap::new();
    let mut queue = VecDeque::new();
    let mut edges = Vec::new();

    let first = name(&init);
    b.state(&first)?;
    b.init(&first)?;
    seen.insert(init.clone(), first);
    queue.push_back(init);
    while let Some(s) = queue.pop_front() {
        let from = seen[&s].clone();
        let labels = label(&s);
        b.label(&from, labels.iter().map(String::as_str))?;
        if is_halt(&s) {
            b.halt(&from)?;
            edges.push((from.clone(), from));
            continue;
        }
        for t in succ(&s) {
            let to = match seen.get(&t) {
                Some(n) => n.clone(),
                None => {
                    let n = name(&t);
                    b.state(&n)?;
                    seen.insert(t.clone(), n.clone());
                    queue.push_back(t);
                    n
                }
            };
            edges.push((from.clone(), to));
        }
    }
    for (from, to) in edges {
        b.trans(&from, &to)?;
    }
    Ok(b.build()?)
}

// ---------------------------------------------------------------------------
// Bakery

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum Pc {
    Noncrit,
    Wait,
    Crit,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
struct BakeryState {
    pc: Vec<Pc>,
    ticket: Vec<u8>,
    select: u8,
}

fn bakery_step(s: &BakeryState) -> (Vec<Pc>, Vec<u8>) {
    let n = s.pc.len();
    let max = s.ticket.iter().copied().max().unwrap_or(0);
    let holder = (0..n).filter(|&p| s.ticket[p] > 0).min_by_key(|&p| (s.ticket[p], p));
    let mut pc = s.pc.clone();
    let mut ticket = s.ticket.clone();
    for p in 0..n {
        if s.select & (1 << p) != 0 {
            ticket[p] = max + 1;
            pc[p] = Pc::Wait;
        } else if s.pc[p] == Pc::Wait && holder == Some(p) {
            pc[p] = Pc::Crit;
        }
    }
    // Keep only the relative order of tickets: dense ranks over the nonzero values.
    let ranks: BTreeSet<u8> = ticket.iter().copied().filter(|&t| t > 0).collect();
    for t in ticket.iter_mut().filter(|t| **t > 0) {
        *t = ranks.iter().position(|r| r == t).unwrap() as u8 + 1;
    }
    (pc, ticket)
}

/// Explicit-state product of the bakery algorithm for `n` processes.
///
/// A state records each process's program counter and ticket together with
/// the set of processes selected to move next. Tickets are kept as dense
/// ranks, so they never exceed `n`. Program counters are encoded on two bits,
/// `pcP<i>_1 pcP<i>_0`: noncrit `00`, wait `01`, crit `10`.
pub fn gen_bakery(n: usize) -> Result<KripkeStructure, ModelError> {
    if !(2..=3).contains(&n) {
        return Err(ModelError::ProcessCount(n));
    }
    let mut aps: Vec<String> = Vec::new();
    for p in 0..n {
        aps.push(format!("selectP{p}"));
    }
    aps.push("pause".into());
    for p in 0..n {
        aps.push(format!("pcP{p}_0"));
        aps.push(format!("pcP{p}_1"));
    }
    let ap_refs: Vec<&str> = aps.iter().map(String::as_str).collect();
    let init = BakeryState { pc: vec![Pc::Noncrit; n], ticket: vec![0; n], select: 0 };
    explore(
        init,
        &ap_refs,
        |s| {
            let (pc, ticket) = bakery_step(s);
            (0..1u8 << n)
                .map(|select| BakeryState { pc: pc.clone(), ticket: ticket.clone(), select })
                .collect()
        },
        |s| {
            let pcs: String = s
                .pc
                .iter()
                .map(|p| match p {
                    Pc::Noncrit => 'N',
                    Pc::Wait => 'W',
                    Pc::Crit => 'C',
                })
                .collect();
            let tickets: String = s.ticket.iter().map(|t| t.to_string()).collect();
            let sel: String = (0..n).map(|p| if s.select & (1 << p) != 0 { '1' } else { '0' }).collect();
            format!("b{pcs}_{tickets}_{sel}")
        },
        |s| {
            let mut l = Vec::new();
            for p in 0..n {
                if s.select & (1 << p) != 0 {
                    l.push(format!("selectP{p}"));
                }
                match s.pc[p] {
                    Pc::Noncrit => {}
                    Pc::Wait => l.push(format!("pcP{p}_0")),
                    Pc::Crit => l.push(format!("pcP{p}_1")),
                }
            }
            if s.select == 0 {
                l.push("pause".into());
            }
            l
        },
        |_| false,
    )
}

// ---------------------------------------------------------------------------
// Grid

pub type Cell = (usize, usize);

/// A rectangular grid world; `y` grows downwards, row 0 is the first map line.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct GridMap {
    pub width: usize,
    pub height: usize,
    pub obstacles: BTreeSet<Cell>,
    pub inits: BTreeSet<Cell>,
    pub goals: BTreeSet<Cell>,
}

impl GridMap {
    pub fn is_free(&self, c: Cell) -> bool {
        c.0 < self.width && c.1 < self.height && !self.obstacles.contains(&c)
    }

    /// Free four-neighbours of `c` paired with the move that reaches them.
    pub fn moves(&self, c: Cell) -> Vec<(Move, Cell)> {
        let (x, y) = c;
        let mut out = Vec::new();
        if y > 0 {
            out.push((Move::Up, (x, y - 1)));
        }
        out.push((Move::Right, (x + 1, y)));
        out.push((Move::Down, (x, y + 1)));
        if x > 0 {
            out.push((Move::Left, (x - 1, y)));
        }
        out.retain(|&(_, n)| self.is_free(n));
        out
    }

    pub fn to_kripke(&self) -> Result<KripkeStructure, ModelError> {
        gen_grid(self.width, self.height, &self.obstacles, &self.inits, &self.goals)
    }
}

/// Parses a map with one line per row: `.` free, `#` obstacle, `I` initial,
/// `G` goal. Blank lines and lines starting with `;` are skipped.
pub fn parse_grid_map(text: &str) -> Result<GridMap, ModelError> {
    let mut map = GridMap::default();
    for (ix, line) in text.lines().enumerate() {
        let line = line.trim_end();
        if line.is_empty() || line.starts_with(';') {
            continue;
        }
        let y = map.height;
        let width = line.chars().count();
        if y == 0 {
            map.width = width;
        } else if width != map.width {
            return Err(ModelError::Map {
                line: ix + 1,
                msg: format!("row has {width} cells, expected {}", map.width),
            });
        }
        for (x, ch) in line.chars().enumerate() {
            match ch {
                '.' => {}
                '#' => {
                    map.obstacles.insert((x, y));
                }
                'I' => {
                    map.inits.insert((x, y));
                }
                'G' => {
                    map.goals.insert((x, y));
                }
                other => {
                    return Err(ModelError::Map {
                        line: ix + 1,
                        msg: format!("unexpected cell character `{other}`"),
                    })
                }
            }
        }
        map.height += 1;
    }
    if map.height == 0 {
        return Err(ModelError::EmptyGrid);
    }
    Ok(map)
}

/// The last move taken, shown on the `mv1 mv0` bits. The start of a run shares
/// the `00` code with [`Move::Up`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Move {
    Start,
    Up,
    Right,
    Down,
    Left,
}

impl Move {
    fn bits(self) -> (bool, bool) {
        match self {
            Move::Start | Move::Up => (false, false),
            Move::Right => (false, true),
            Move::Down => (true, false),
            Move::Left => (true, true),
        }
    }

    fn tag(self) -> char {
        match self {
            Move::Start => 'o',
            Move::Up => 'u',
            Move::Right => 'r',
            Move::Down => 'd',
            Move::Left => 'l',
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum GridState {
    Fanout,
    At(Cell, Move),
}

/// Grid world with four-neighbour moves. One state per reachable (cell, last
/// move) pair; goal cells are labelled `goal` and halt. Several initial cells
/// are reached from an extra unlabelled start state.
pub fn gen_grid(
    width: usize,
    height: usize,
    obstacles: &BTreeSet<Cell>,
    inits: &BTreeSet<Cell>,
    goals: &BTreeSet<Cell>,
) -> Result<KripkeStructure, ModelError> {
    if width == 0 || height == 0 {
        return Err(ModelError::EmptyGrid);
    }
    if inits.is_empty() {
        return Err(ModelError::NoInit);
    }
    if goals.is_empty() {
        return Err(ModelError::NoGoal);
    }
    for &(x, y) in obstacles.iter().chain(inits).chain(goals) {
        if x >= width || y >= height {
            return Err(ModelError::OutOfBounds(x, y));
        }
    }
    if let Some(&(x, y)) = inits.iter().chain(goals).find(|c| obstacles.contains(c)) {
        return Err(ModelError::Blocked(x, y));
    }
    let map = GridMap {
        width,
        height,
        obstacles: obstacles.clone(),
        inits: inits.clone(),
        goals: goals.clone(),
    };
    let init = if inits.len() == 1 {
        GridState::At(*inits.iter().next().unwrap(), Move::Start)
    } else {
        GridState::Fanout
    };
    explore(
        init,
        &["goal", "mv0", "mv1"],
        |s| match s {
            GridState::Fanout => inits.iter().map(|&c| GridState::At(c, Move::Start)).collect(),
            GridState::At(c, _) => {
                let next: Vec<_> =
                    map.moves(*c).into_iter().map(|(m, n)| GridState::At(n, m)).collect();
                if next.is_empty() {
                    vec![s.clone()]
                } else {
                    next
                }
            }
        },
        |s| match s {
            GridState::Fanout => "start".to_string(),
            GridState::At((x, y), m) => format!("x{x}y{y}{}", m.tag()),
        },
        |s| match s {
            GridState::Fanout => Vec::new(),
            GridState::At(c, m) => {
                let mut l = Vec::new();
                if goals.contains(c) {
                    l.push("goal".to_string());
                }
                let (hi, lo) = m.bits();
                if lo {
                    l.push("mv0".to_string());
                }
                if hi {
                    l.push("mv1".to_string());
                }
                l
            }
        },
        |s| matches!(s, GridState::At(c, _) if goals.contains(c)),
    )
}

// ---------------------------------------------------------------------------
// Non-repudiation

/// Which trusted-party program drives the protocol.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NonrepVariant {
    /// The receipt is collected before the origin proof is released.
    Correct,
    /// The origin proof is released before the receipt arrives.
    Incorrect,
}

impl FromStr for NonrepVariant {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, ModelError> {
        match s {
            "correct" => Ok(NonrepVariant::Correct),
            "incorrect" => Ok(NonrepVariant::Incorrect),
            other => Err(ModelError::UnknownVariant(other.to_string())),
        }
    }
}

impl fmt::Display for NonrepVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NonrepVariant::Correct => "correct",
            NonrepVariant::Incorrect => "incorrect",
        })
    }
}

/// Number of steps in every protocol run; the state reached by the last step
/// halts.
pub const NONREP_STEPS: u8 = 15;

/// Action propositions of the sender.
pub const SENDER_ACTIONS: [&str; 5] = ["A_m_B", "A_m_T", "A_NRO_B", "A_NRO_T", "A_skip"];
/// Action propositions of the receiver.
pub const RECEIVER_ACTIONS: [&str; 3] = ["B_NRR_A", "B_NRR_T", "B_skip"];

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum TrustedOp {
    AwaitMessage,
    AwaitOrigin,
    ForwardMessage,
    ForwardOrigin,
    AwaitReceipt,
    ForwardReceipt,
    ForwardOriginAndReceipt,
}

const TRUSTED_CORRECT: [TrustedOp; 5] = [
    TrustedOp::AwaitMessage,
    TrustedOp::AwaitOrigin,
    TrustedOp::ForwardMessage,
    TrustedOp::AwaitReceipt,
    TrustedOp::ForwardOriginAndReceipt,
];

const TRUSTED_INCORRECT: [TrustedOp; 6] = [
    TrustedOp::AwaitMessage,
    TrustedOp::AwaitOrigin,
    TrustedOp::ForwardMessage,
    TrustedOp::ForwardOrigin,
    TrustedOp::AwaitReceipt,
    TrustedOp::ForwardReceipt,
];

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
struct NonrepState {
    step: u8,
    /// 0 nothing sent, 1 message sent to T, 2 origin proof sent to T.
    sender: u8,
    /// Position in the trusted party's program.
    pc: u8,
    receipt_sent: bool,
    /// Delivery flags: B holds m, B holds NRO, A holds NRR.
    got_m: bool,
    got_nro: bool,
    got_nrr: bool,
    action: Option<&'static str>,
}

/// Turn-based run of sender A, trusted party T and receiver B, in rounds of
/// A, T, B. A either follows the protocol through T or idles; B either returns
/// its receipt once it holds the message or idles; T runs the chosen program.
/// Every run halts after [`NONREP_STEPS`] steps.
pub fn gen_nonrepudiation(variant: NonrepVariant) -> Result<KripkeStructure, ModelError> {
    let program: &[TrustedOp] = match variant {
        NonrepVariant::Correct => &TRUSTED_CORRECT,
        NonrepVariant::Incorrect => &TRUSTED_INCORRECT,
    };
    let mut aps: Vec<&str> = SENDER_ACTIONS.to_vec();
    aps.extend(RECEIVER_ACTIONS);
    aps.extend(["m", "NRO", "NRR"]);
    let init = NonrepState {
        step: 0,
        sender: 0,
        pc: 0,
        receipt_sent: false,
        got_m: false,
        got_nro: false,
        got_nrr: false,
        action: None,
    };
    explore(
        init,
        &aps,
        |s| {
            let mut base = s.clone();
            base.step += 1;
            base.action = None;
            match s.step % 3 {
                0 => {
                    let mut out = vec![NonrepState { action: Some("A_skip"), ..base.clone() }];
                    match s.sender {
                        0 => out.push(NonrepState { sender: 1, action: Some("A_m_T"), ..base }),
                        1 => out.push(NonrepState { sender: 2, action: Some("A_NRO_T"), ..base }),
                        _ => {}
                    }
                    out
                }
                1 => vec![trusted_turn(program, base)],
                _ => {
                    let mut out = vec![NonrepState { action: Some("B_skip"), ..base.clone() }];
                    if base.got_m && !base.receipt_sent {
                        out.push(NonrepState { receipt_sent: true, action: Some("B_NRR_T"), ..base });
                    }
                    out
                }
            }
        },
        |s| {
            format!(
                "n{}_a{}_t{}_{}{}{}{}_{}",
                s.step,
                s.sender,
                s.pc,
                s.receipt_sent as u8,
                s.got_m as u8,
                s.got_nro as u8,
                s.got_nrr as u8,
                s.action.unwrap_or("none"),
            )
        },
        |s| {
            let mut l: Vec<String> = s.action.iter().map(|a| a.to_string()).collect();
            for (flag, ap) in [(s.got_m, "m"), (s.got_nro, "NRO"), (s.got_nrr, "NRR")] {
                if flag {
                    l.push(ap.to_string());
                }
            }
            l
        },
        |s| s.step == NONREP_STEPS,
    )
}

fn trusted_turn(program: &[TrustedOp], mut s: NonrepState) -> NonrepState {
    while let Some(&op) = program.get(s.pc as usize) {
        let ready = match op {
            TrustedOp::AwaitMessage => s.sender >= 1,
            TrustedOp::AwaitOrigin => s.sender >= 2,
            TrustedOp::AwaitReceipt => s.receipt_sent,
            _ => true,
        };
        if !ready {
            break;
        }
        s.pc += 1;
        match op {
            TrustedOp::ForwardMessage => s.got_m = true,
            TrustedOp::ForwardOrigin => s.got_nro = true,
            TrustedOp::ForwardReceipt => s.got_nrr = true,
            TrustedOp::ForwardOriginAndReceipt => {
                s.got_nro = true;
                s.got_nrr = true;
            }
            _ => continue,
        }
        break;
    }
    s
}

// ---------------------------------------------------------------------------
// Formula library

/// A named formula with the models it expects, one role per trace variable in
/// prefix order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SpecEntry {
    pub name: &'static str,
    pub formula: String,
    pub arity: usize,
    pub roles: Vec<&'static str>,
    pub notes: &'static str,
}

pub const BUILTIN_SPECS: [&str; 8] = [
    "symmetry",
    "symmetry3",
    "linearizability",
    "ni",
    "fairness",
    "shortest_path",
    "robustness",
    "mutation",
];

fn iff(ap_a: &str, var_a: &str, ap_b: &str, var_b: &str) -> String {
    format!("({ap_a}[{var_a}] <-> {ap_b}[{var_b}])")
}

fn symmetry(n: usize) -> String {
    let swap = |p: usize| match p {
        0 => 1,
        1 => 0,
        p => p,
    };
    let mut parts = Vec::new();
    for p in 0..n {
        parts.push(iff(&format!("selectP{p}"), "A", &format!("selectP{}", swap(p)), "B"));
    }
    parts.push(iff("pause", "A", "pause", "B"));
    for p in 0..n {
        for bit in 0..2 {
            parts.push(iff(&format!("pcP{p}_{bit}"), "A", &format!("pcP{}_{bit}", swap(p)), "B"));
        }
    }
    format!("forall A. exists B. G ({})", parts.join(" & "))
}

fn same_actions(actions: &[&str]) -> String {
    let parts: Vec<String> = actions.iter().map(|a| iff(a, "P", a, "Q")).collect();
    format!("G ({})", parts.join(" & "))
}

pub fn builtin_spec(name: &str) -> Result<SpecEntry, ModelError> {
    let entry = match name {
        "symmetry" | "symmetry3" => {
            let n = if name == "symmetry" { 2 } else { 3 };
            SpecEntry {
                name: if n == 2 { "symmetry" } else { "symmetry3" },
                formula: symmetry(n),
                arity: 2,
                roles: vec!["bakery", "bakery"],
                notes: "Swapping processes 0 and 1 maps every run to a run. \
                        Use with `gen bakery` of the same process count.",
            }
        }
        "linearizability" => SpecEntry {
            name: "linearizability",
            formula: "forall M. exists S. G (history[M] <-> history[S])".into(),
            arity: 2,
            roles: vec!["implementation", "sequential-spec"],
            notes: "Every implementation history is matched by a sequential one. \
                    Bind M and S to separate models.",
        },
        "ni" => SpecEntry {
            name: "ni",
            formula: "forall A. exists B. X (!(PIN[A] <-> PIN[B]) & \
                      ((!terminate[A] | !terminate[B]) U \
                      ((terminate[A] & terminate[B]) & (Result[A] <-> Result[B]))))"
                .into(),
            arity: 2,
            roles: vec!["program", "program"],
            notes: "Non-interference up to termination. The secret is chosen by the first \
                    transition, so the comparison starts one step in.",
        },
        "fairness" => {
            let fair = "((F NRR[Q]) <-> (F NRO[Q]))";
            SpecEntry {
                name: "fairness",
                formula: format!(
                    "exists P. forall Q. (F m[P]) & (F NRR[P]) & (F NRO[P]) & \
                     (({}) -> {fair}) & (({}) -> {fair})",
                    same_actions(&SENDER_ACTIONS),
                    same_actions(&RECEIVER_ACTIONS),
                ),
                arity: 2,
                roles: vec!["protocol", "protocol"],
                notes: "Some complete run exists, and any run agreeing with it on all sender \
                        actions or on all receiver actions delivers both proofs or neither. \
                        Use with `gen nonrep`.",
            }
        }
        "shortest_path" => SpecEntry {
            name: "shortest_path",
            formula: "exists A. forall B. (!goal[B]) U goal[A]".into(),
            arity: 2,
            roles: vec!["grid", "grid"],
            notes: "A reaches a goal no later than any other run. Use with `gen grid`.",
        },
        "robustness" => SpecEntry {
            name: "robustness",
            formula: "exists A. forall B. (G ((mv0[A] <-> mv0[B]) & (mv1[A] <-> mv1[B]))) -> \
                      F (goal[A] & goal[B])"
                .into(),
            arity: 2,
            roles: vec!["grid", "grid"],
            notes: "A move sequence that reaches a goal from every initial cell. \
                    Use with a multi-init grid.",
        },
        "mutation" => SpecEntry {
            name: "mutation",
            formula: "exists A. forall B. (mut[A] & !mut[B]) & \
                      ((input[A] <-> input[B]) U !(output[A] <-> output[B]))"
                .into(),
            arity: 2,
            roles: vec!["mutant-model", "original-model"],
            notes: "A mutated run whose output diverges from every unmutated run \
                    sharing its inputs.",
        },
        other => return Err(ModelError::UnknownSpec(other.to_string())),
    };
    Ok(entry)
}
