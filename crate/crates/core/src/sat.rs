//! Incremental CDCL SAT solver with a static branching order.
//!
//! Branching picks the lowest-numbered unassigned *priority* variable and
//! tries `false` first, then falls back to the remaining variables in the
//! same way. Together with first-UIP learning this keeps runs
//! deterministic. Clauses may be added between calls, and each call may
//! carry assumptions.

/// A literal: variable index times two, plus one if negated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Lit(u32);

impl Lit {
    pub fn new(var: u32, positive: bool) -> Lit {
        Lit(var << 1 | (!positive) as u32)
    }

    pub fn var(self) -> u32 {
        self.0 >> 1
    }

    pub fn is_positive(self) -> bool {
        self.0 & 1 == 0
    }

    fn index(self) -> usize {
        self.0 as usize
    }
}

impl std::ops::Not for Lit {
    type Output = Lit;
    fn not(self) -> Lit {
        Lit(self.0 ^ 1)
    }
}

const NO_REASON: u32 = u32::MAX;

#[derive(Debug, Default, Clone)]
pub struct Solver {
    clauses: Vec<Vec<Lit>>,
    watches: Vec<Vec<u32>>,
    /// 0 unassigned, 1 true, -1 false.
    value: Vec<i8>,
    level: Vec<u32>,
    reason: Vec<u32>,
    priority: Vec<bool>,
    trail: Vec<Lit>,
    trail_lim: Vec<usize>,
    qhead: usize,
    next_priority: usize,
    next_any: usize,
    seen: Vec<bool>,
    unsat: bool,
    model: Vec<bool>,
    conflicts: u64,
}

impl Solver {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn num_vars(&self) -> usize {
        self.value.len()
    }

    pub fn num_clauses(&self) -> usize {
        self.clauses.len()
    }

    pub fn conflicts(&self) -> u64 {
        self.conflicts
    }

    /// Adds a variable; priority variables are branched on first.
    pub fn new_var(&mut self, priority: bool) -> u32 {
        let v = self.value.len() as u32;
        self.value.push(0);
        self.level.push(0);
        self.reason.push(NO_REASON);
        self.priority.push(priority);
        self.seen.push(false);
        self.watches.push(Vec::new());
        self.watches.push(Vec::new());
        v
    }

    fn lit_value(&self, l: Lit) -> i8 {
        let v = self.value[l.var() as usize];
        if l.is_positive() {
            v
        } else {
            -v
        }
    }

    fn decision_level(&self) -> usize {
        self.trail_lim.len()
    }

    fn enqueue(&mut self, l: Lit, reason: u32) {
        let v = l.var() as usize;
        self.value[v] = if l.is_positive() { 1 } else { -1 };
        self.level[v] = self.decision_level() as u32;
        self.reason[v] = reason;
        self.trail.push(l);
    }

    fn backtrack(&mut self, level: usize) {
        if self.decision_level() <= level {
            return;
        }
        let keep = self.trail_lim[level];
        for i in (keep..self.trail.len()).rev() {
            let v = self.trail[i].var() as usize;
            self.value[v] = 0;
            self.reason[v] = NO_REASON;
            if self.priority[v] {
                self.next_priority = self.next_priority.min(v);
            }
            self.next_any = self.next_any.min(v);
        }
        self.trail.truncate(keep);
        self.trail_lim.truncate(level);
        self.qhead = keep;
    }

    /// Adds a clause permanently. Returns `false` once the clause set is
    /// known to be unsatisfiable.
    pub fn add_clause(&mut self, lits: &[Lit]) -> bool {
        if self.unsat {
            return false;
        }
        self.backtrack(0);
        let mut c: Vec<Lit> = Vec::with_capacity(lits.len());
        for &l in lits {
            match self.lit_value(l) {
                1 => return true,
                -1 => {}
                _ => {
                    if c.contains(&!l) {
                        return true;
                    }
                    if !c.contains(&l) {
                        c.push(l);
                    }
                }
            }
        }
        match c.len() {
            0 => {
                self.unsat = true;
                false
            }
            1 => {
                self.enqueue(c[0], NO_REASON);
                if self.propagate().is_some() {
                    self.unsat = true;
                }
                !self.unsat
            }
            _ => {
                self.attach(c);
                true
            }
        }
    }

    fn attach(&mut self, c: Vec<Lit>) -> u32 {
        let ci = self.clauses.len() as u32;
        self.watches[c[0].index()].push(ci);
        self.watches[c[1].index()].push(ci);
        self.clauses.push(c);
        ci
    }

    /// Unit propagation; returns a conflicting clause if one is found.
    fn propagate(&mut self) -> Option<u32> {
        while self.qhead < self.trail.len() {
            let p = self.trail[self.qhead];
            self.qhead += 1;
            let falsified = !p;
            let mut ws = std::mem::take(&mut self.watches[falsified.index()]);
            let mut keep = 0;
            let mut conflict = None;
            let mut i = 0;
            while i < ws.len() {
                let ci = ws[i];
                i += 1;
                let clause = &mut self.clauses[ci as usize];
                if clause[0] == falsified {
                    clause.swap(0, 1);
                }
                let first = clause[0];
                let first_val = {
                    let v = self.value[first.var() as usize];
                    if first.is_positive() { v } else { -v }
                };
                if first_val == 1 {
                    ws[keep] = ci;
                    keep += 1;
                    continue;
                }
                let mut moved = false;
                for j in 2..clause.len() {
                    let l = clause[j];
                    let v = self.value[l.var() as usize];
                    let lv = if l.is_positive() { v } else { -v };
                    if lv != -1 {
                        clause.swap(1, j);
                        self.watches[clause[1].index()].push(ci);
                        moved = true;
                        break;
                    }
                }
                if moved {
                    continue;
                }
                ws[keep] = ci;
                keep += 1;
                if first_val == -1 {
                    conflict = Some(ci);
                    while i < ws.len() {
                        ws[keep] = ws[i];
                        keep += 1;
                        i += 1;
                    }
                    break;
                }
                self.enqueue(first, ci);
            }
            ws.truncate(keep);
            self.watches[falsified.index()] = ws;
            if conflict.is_some() {
                self.qhead = self.trail.len();
                return conflict;
            }
        }
        None
    }

    /// First-UIP conflict analysis; returns the learnt clause (asserting
    /// literal first) and the level to jump back to.
    fn analyze(&mut self, mut confl: u32) -> (Vec<Lit>, usize) {
        let mut learnt = vec![Lit(0)];
        let mut pending = 0;
        let mut idx = self.trail.len();
        let current = self.decision_level() as u32;
        let mut p: Option<Lit> = None;
        loop {
            let clause = &self.clauses[confl as usize];
            for &q in clause.iter().filter(|&&q| Some(q) != p) {
                let v = q.var() as usize;
                if !self.seen[v] && self.level[v] > 0 {
                    self.seen[v] = true;
                    if self.level[v] >= current {
                        pending += 1;
                    } else {
                        learnt.push(q);
                    }
                }
            }
            loop {
                idx -= 1;
                if self.seen[self.trail[idx].var() as usize] {
                    break;
                }
            }
            let lit = self.trail[idx];
            p = Some(lit);
            self.seen[lit.var() as usize] = false;
            pending -= 1;
            if pending == 0 {
                learnt[0] = !lit;
                break;
            }
            confl = self.reason[lit.var() as usize];
            debug_assert_ne!(confl, NO_REASON);
        }
        for l in &learnt[1..] {
            self.seen[l.var() as usize] = false;
        }
        let mut back = 0;
        if learnt.len() > 1 {
            let mut best = 1;
            for i in 2..learnt.len() {
                if self.level[learnt[i].var() as usize] > self.level[learnt[best].var() as usize] {
                    best = i;
                }
            }
            learnt.swap(1, best);
            back = self.level[learnt[1].var() as usize] as usize;
        }
        (learnt, back)
    }

    fn pick_branch(&mut self) -> Option<u32> {
        let n = self.value.len();
        while self.next_priority < n {
            let v = self.next_priority;
            if self.priority[v] && self.value[v] == 0 {
                return Some(v as u32);
            }
            self.next_priority += 1;
        }
        while self.next_any < n {
            let v = self.next_any;
            if self.value[v] == 0 {
                return Some(v as u32);
            }
            self.next_any += 1;
        }
        None
    }

    /// Searches for a model extending `assumptions`.
    pub fn solve(&mut self, assumptions: &[Lit]) -> bool {
        if self.unsat {
            return false;
        }
        self.backtrack(0);
        if self.propagate().is_some() {
            self.unsat = true;
            return false;
        }
        loop {
            if let Some(confl) = self.propagate() {
                self.conflicts += 1;
                if self.decision_level() == 0 {
                    self.unsat = true;
                    return false;
                }
                let (learnt, back) = self.analyze(confl);
                self.backtrack(back);
                if learnt.len() == 1 {
                    self.enqueue(learnt[0], NO_REASON);
                } else {
                    let first = learnt[0];
                    let ci = self.attach(learnt);
                    self.enqueue(first, ci);
                }
                continue;
            }
            let dl = self.decision_level();
            if dl < assumptions.len() {
                let a = assumptions[dl];
                match self.lit_value(a) {
                    1 => self.trail_lim.push(self.trail.len()),
                    -1 => {
                        self.backtrack(0);
                        return false;
                    }
                    _ => {
                        self.trail_lim.push(self.trail.len());
                        self.enqueue(a, NO_REASON);
                    }
                }
                continue;
            }
            match self.pick_branch() {
                Some(v) => {
                    self.trail_lim.push(self.trail.len());
                    self.enqueue(Lit::new(v, false), NO_REASON);
                }
                None => {
                    self.model = self.value.iter().map(|&x| x == 1).collect();
                    self.backtrack(0);
                    return true;
                }
            }
        }
    }

    /// Value of `v` in the last model found.
    pub fn model_value(&self, v: u32) -> bool {
        self.model.get(v as usize).copied().unwrap_or(false)
    }
}
