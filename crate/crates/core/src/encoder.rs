//! Compilation of a bounded model-checking instance into a prenex QBF.
//!
//! Each trace variable owns one quantifier block. Per step the block holds
//! one bit per proposition of its structure (declaration order), one bit
//! for `@halt` and a binary state code. The propositional bits are tied to
//! the state code, so the body only ever reads propositions.

use std::collections::{HashMap, HashSet};

use thiserror::Error;

use crate::circuit::{Circuit, NodeId, Var};
use crate::hyperltl::{to_nnf, Atom, Body, HyperFormula, Quantifier};
use crate::kripke::{KripkeStructure, ModelMap, StateId, HALT_AP};
use crate::oracle::{Semantics, Unrolling};
use crate::qbf::PrenexQBF;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EncodeError {
    #[error("no model for trace variable `{0}`")]
    MissingModel(String),
    #[error("trace variable `{0}` is not quantified")]
    UnboundVariable(String),
    #[error("proposition `{}` is not declared by the model of `{}`", .0.ap, .0.var)]
    UnknownProposition(Atom),
}

/// Variables of one trace variable across all steps.
#[derive(Debug, Clone)]
pub struct TraceBlock {
    pub trace: String,
    pub quantifier: Quantifier,
    pub aps: Vec<String>,
    pub state_bits: usize,
    first: Var,
}

impl TraceBlock {
    fn per_step(&self) -> usize {
        self.aps.len() + 1 + self.state_bits
    }

    fn at(&self, step: usize, offset: usize) -> Var {
        (self.first as usize + step * self.per_step() + offset) as Var
    }

    pub fn ap_var(&self, ap: usize, step: usize) -> Var {
        self.at(step, ap)
    }

    pub fn halt_var(&self, step: usize) -> Var {
        self.at(step, self.aps.len())
    }

    pub fn state_bit(&self, bit: usize, step: usize) -> Var {
        self.at(step, self.aps.len() + 1 + bit)
    }
}

#[derive(Debug, Clone)]
pub struct VarLayout {
    pub k: usize,
    pub blocks: Vec<TraceBlock>,
    pub names: Vec<String>,
}

fn bits_for(n: usize) -> usize {
    if n <= 1 {
        0
    } else {
        (usize::BITS - (n - 1).leading_zeros()) as usize
    }
}

impl VarLayout {
    /// One block per quantified variable, in prefix order.
    pub fn new(f: &HyperFormula, models: &ModelMap, k: usize) -> Result<Self, EncodeError> {
        let mut blocks = Vec::new();
        let mut names = Vec::new();
        let mut taken = HashSet::new();
        let mut fresh = |base: String, names: &mut Vec<String>| {
            let mut name = base.clone();
            let mut n = 1;
            while !taken.insert(name.clone()) {
                name = format!("{base}_{n}");
                n += 1;
            }
            names.push(name);
        };
        for (q, v) in &f.prefix {
            let model = models.get(v).ok_or_else(|| EncodeError::MissingModel(v.clone()))?;
            let block = TraceBlock {
                trace: v.clone(),
                quantifier: *q,
                aps: model.aps().to_vec(),
                state_bits: bits_for(model.num_states()),
                first: names.len() as Var,
            };
            for i in 0..=k {
                for ap in &block.aps {
                    fresh(format!("{ap}_{v}_{i}"), &mut names);
                }
                fresh(format!("__halt_{v}_{i}"), &mut names);
                for j in 0..block.state_bits {
                    fresh(format!("__sb{j}_{v}_{i}"), &mut names);
                }
            }
            blocks.push(block);
        }
        Ok(VarLayout { k, blocks, names })
    }

    pub fn block(&self, trace: &str) -> Option<&TraceBlock> {
        self.blocks.iter().find(|b| b.trace == trace)
    }

    pub fn block_vars(&self, trace: &str) -> Vec<Var> {
        let Some(b) = self.block(trace) else { return Vec::new() };
        let n = b.per_step() * (self.k + 1);
        (b.first..b.first + n as Var).collect()
    }

    pub fn num_vars(&self) -> usize {
        self.names.len()
    }
}

/// Conjunction fixing the state code of `trace` at `step` to `s`.
fn state_is(c: &mut Circuit, b: &TraceBlock, s: StateId, step: usize) -> NodeId {
    let bits: Vec<NodeId> =
        (0..b.state_bits).map(|j| c.lit(b.state_bit(j, step), s >> j & 1 == 1)).collect();
    c.and(bits)
}

/// Initialized, transition-consistent paths of length `k + 1`, with every
/// proposition and `@halt` bit equal to the labelling of the coded state.
pub fn unroll_structure(
    c: &mut Circuit,
    model: &KripkeStructure,
    trace: &str,
    layout: &VarLayout,
) -> NodeId {
    let b = layout.block(trace).expect("trace variable in layout");
    let k = layout.k;
    let n = model.num_states();
    let mut parts = vec![state_is(c, b, model.init(), 0)];
    for i in 0..k {
        let moves: Vec<NodeId> = (0..n)
            .map(|s| {
                let here = state_is(c, b, s, i);
                let next: Vec<NodeId> =
                    model.successors(s).iter().map(|&t| state_is(c, b, t, i + 1)).collect();
                let next = c.or(next);
                c.and2(here, next)
            })
            .collect();
        parts.push(c.or(moves));
    }
    for i in 0..=k {
        for (a, _) in b.aps.iter().enumerate() {
            let states: Vec<NodeId> =
                (0..n).filter(|&s| model.holds(s, a)).map(|s| state_is(c, b, s, i)).collect();
            let any = c.or(states);
            let bit = c.var(b.ap_var(a, i));
            parts.push(c.iff(bit, any));
        }
        let halting: Vec<NodeId> =
            (0..n).filter(|&s| model.is_halt(s)).map(|s| state_is(c, b, s, i)).collect();
        let any = c.or(halting);
        let bit = c.var(b.halt_var(i));
        parts.push(c.iff(bit, any));
    }
    c.and(parts)
}

struct BodyEncoder<'a> {
    c: &'a mut Circuit,
    layout: &'a VarLayout,
    un: Unrolling,
    memo: HashMap<(*const Body, usize), NodeId>,
}

impl BodyEncoder<'_> {
    fn atom(&mut self, a: &Atom, step: usize) -> Result<NodeId, EncodeError> {
        let b = self.layout.block(&a.var).ok_or_else(|| EncodeError::UnboundVariable(a.var.clone()))?;
        let v = if a.ap == HALT_AP {
            b.halt_var(step)
        } else {
            let ix = b
                .aps
                .iter()
                .position(|p| *p == a.ap)
                .ok_or_else(|| EncodeError::UnknownProposition(a.clone()))?;
            b.ap_var(ix, step)
        };
        Ok(self.c.var(v))
    }

    fn halted(&mut self) -> NodeId {
        let k = self.layout.k;
        let vars: Vec<Var> = self.layout.blocks.iter().map(|b| b.halt_var(k)).collect();
        let bits: Vec<NodeId> = vars.into_iter().map(|v| self.c.var(v)).collect();
        self.c.and(bits)
    }

    fn encode(&mut self, body: &Body, i: usize) -> Result<NodeId, EncodeError> {
        let key = (body as *const Body, i);
        if let Some(&n) = self.memo.get(&key) {
            return Ok(n);
        }
        let n = crate::circuit::deep(|| self.encode_uncached(body, i))?;
        self.memo.insert(key, n);
        Ok(n)
    }

    fn encode_uncached(&mut self, body: &Body, i: usize) -> Result<NodeId, EncodeError> {
        let k = self.layout.k;
        let sem = self.un.semantics;
        if i > k {
            // only reachable under the fixpoint-unfolding semantics
            return Ok(self.c.constant(sem == Semantics::ClassicDual));
        }
        let classic = matches!(sem, Semantics::Classic | Semantics::ClassicDual);
        let unfold = i < k || classic;
        Ok(match body {
            Body::True => self.c.tru(),
            Body::False => self.c.fls(),
            Body::Atom(a) => self.atom(a, i)?,
            Body::NegAtom(a) => {
                let x = self.atom(a, i)?;
                self.c.not(x)
            }
            Body::And(x, y) => {
                let (x, y) = (self.encode(x, i)?, self.encode(y, i)?);
                self.c.and2(x, y)
            }
            Body::Or(x, y) => {
                let (x, y) = (self.encode(x, i)?, self.encode(y, i)?);
                self.c.or2(x, y)
            }
            Body::Next(x) if unfold => self.encode(x, i + 1)?,
            Body::Until(x, y) if unfold => {
                let (x, y, later) = (self.encode(x, i)?, self.encode(y, i)?, self.encode(body, i + 1)?);
                let keep = self.c.and2(x, later);
                self.c.or2(y, keep)
            }
            Body::Release(x, y) if unfold => {
                let (x, y, later) = (self.encode(x, i)?, self.encode(y, i)?, self.encode(body, i + 1)?);
                let keep = self.c.or2(x, later);
                self.c.and2(y, keep)
            }
            Body::Next(_) | Body::Until(..) | Body::Release(..) => match sem {
                Semantics::Pes => self.c.fls(),
                Semantics::Opt => self.c.tru(),
                _ => {
                    let now = match body {
                        Body::Next(x) => self.encode(x, k)?,
                        Body::Until(_, y) => self.encode(y, k)?,
                        Body::Release(x, y) => {
                            self.encode(if self.un.paper_literal { x } else { y }, k)?
                        }
                        _ => unreachable!(),
                    };
                    let halted = self.halted();
                    if sem == Semantics::Hpes {
                        self.c.and2(halted, now)
                    } else {
                        self.c.implies(halted, now)
                    }
                }
            },
            other => panic!("body not in negation normal form: {other}"),
        })
    }
}

/// Circuit for the body at step 0. The body must be in negation normal form.
pub fn encode_body(
    c: &mut Circuit,
    body: &Body,
    layout: &VarLayout,
    un: Unrolling,
) -> Result<NodeId, EncodeError> {
    assert_eq!(layout.k, un.k, "layout built for a different bound");
    let mut enc = BodyEncoder { c, layout, un, memo: HashMap::new() };
    enc.encode(body, 0)
}

/// A compiled instance together with the layout needed to decode it.
#[derive(Debug, Clone)]
pub struct Encoding {
    pub qbf: PrenexQBF,
    pub layout: VarLayout,
    /// The checked formula in negation normal form.
    pub formula: HyperFormula,
}

/// Builds `Q1 x1 ... Qn xn. K1 o1 (K2 o2 (... (Kn on body)))` where `oi` is
/// conjunction for an existential and implication for a universal.
pub fn assemble_qbf(f: &HyperFormula, models: &ModelMap, un: Unrolling) -> Result<Encoding, EncodeError> {
    let formula = to_nnf(f);
    let layout = VarLayout::new(&formula, models, un.k)?;
    let mut c = Circuit::new();
    let mut m = encode_body(&mut c, &formula.body, &layout, un)?;
    for (q, v) in formula.prefix.iter().rev() {
        let model = models.get(v).ok_or_else(|| EncodeError::MissingModel(v.clone()))?;
        let paths = unroll_structure(&mut c, model, v, &layout);
        m = match q {
            Quantifier::Exists => c.and2(paths, m),
            Quantifier::Forall => c.implies(paths, m),
        };
    }
    let mut qbf = PrenexQBF::new(c, m, layout.names.clone());
    qbf.blocks = formula.prefix.iter().map(|(q, v)| (*q, layout.block_vars(v))).collect();
    qbf.normalize();
    Ok(Encoding { qbf, layout, formula })
}
