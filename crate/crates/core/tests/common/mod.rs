//! Random instance generators and brute-force references shared by the
//! integration tests.
#![allow(dead_code)]

use std::collections::BTreeMap;

use hyperbmc_core::circuit::{Circuit, NodeId, Var};
use hyperbmc_core::{
    Body, HyperFormula, KripkeBuilder, KripkeStructure, ModelMap, PrenexQBF, Quantifier, Semantics,
    TracePrefix,
};
use rand::seq::SliceRandom;
use rand::Rng;

pub const USER_SEMANTICS: [Semantics; 5] =
    [Semantics::Pes, Semantics::Opt, Semantics::Hpes, Semantics::Hopt, Semantics::Classic];

pub const APS: [&str; 2] = ["p", "q"];

fn label_and_build(
    rng: &mut impl Rng,
    n: usize,
    aps: &[&str],
    succ: &[Vec<usize>],
    halt: &[bool],
) -> KripkeStructure {
    let mut b = KripkeBuilder::new();
    for ap in aps {
        b.ap(ap).unwrap();
    }
    let names: Vec<String> = (0..n).map(|i| format!("s{i}")).collect();
    for name in &names {
        b.state(name).unwrap();
    }
    b.init("s0").unwrap();
    for (s, name) in names.iter().enumerate() {
        let l: Vec<&str> = aps.iter().copied().filter(|_| rng.gen_bool(0.5)).collect();
        b.label(name, l).unwrap();
        if halt[s] {
            b.halt(name).unwrap();
        }
        for &t in &succ[s] {
            b.trans(name, &names[t]).unwrap();
        }
    }
    b.build().unwrap()
}

/// Arbitrary total structure; some states may be halting sinks.
pub fn random_structure(rng: &mut impl Rng, max_states: usize, aps: &[&str]) -> KripkeStructure {
    let n = rng.gen_range(1..=max_states);
    let halt: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.25)).collect();
    let succ: Vec<Vec<usize>> = (0..n)
        .map(|s| {
            if halt[s] {
                return vec![s];
            }
            let mut out: Vec<usize> = (0..n).filter(|_| rng.gen_bool(0.4)).collect();
            if out.is_empty() {
                out.push(rng.gen_range(0..n));
            }
            out
        })
        .collect();
    label_and_build(rng, n, aps, &succ, &halt)
}

/// Acyclic apart from the self-loops of its halting sinks, so every path
/// halts within `num_states - 1` steps.
pub fn random_acyclic_halting(rng: &mut impl Rng, max_states: usize, aps: &[&str]) -> KripkeStructure {
    let n = rng.gen_range(1..=max_states);
    let mut halt = vec![false; n];
    let mut succ = vec![Vec::new(); n];
    for s in 0..n {
        let later: Vec<usize> = (s + 1..n).filter(|_| rng.gen_bool(0.5)).collect();
        if s == n - 1 || (s > 0 && rng.gen_bool(0.2)) {
            halt[s] = true;
            succ[s] = vec![s];
        } else if later.is_empty() {
            succ[s] = vec![rng.gen_range(s + 1..n)];
        } else {
            succ[s] = later;
        }
    }
    label_and_build(rng, n, aps, &succ, &halt)
}

pub fn random_body(rng: &mut impl Rng, vars: &[&str], aps: &[&str], depth: u32) -> Body {
    if depth == 0 || rng.gen_ratio(1, 4) {
        let ap = aps.choose(rng).unwrap();
        let var = vars.choose(rng).unwrap();
        return match rng.gen_range(0..10) {
            0 => Body::True,
            1 => Body::False,
            2..=5 => Body::atom(ap, var),
            _ => Body::neg_atom(ap, var),
        };
    }
    let sub = |rng: &mut _| random_body(rng, vars, aps, depth - 1);
    match rng.gen_range(0..12) {
        0 => Body::not(sub(rng)),
        1 => Body::and(sub(rng), sub(rng)),
        2 => Body::or(sub(rng), sub(rng)),
        3 => Body::implies(sub(rng), sub(rng)),
        4 => Body::iff(sub(rng), sub(rng)),
        5 => Body::next(sub(rng)),
        6 | 7 => Body::until(sub(rng), sub(rng)),
        8 => Body::release(sub(rng), sub(rng)),
        9 => Body::eventually(sub(rng)),
        10 => Body::globally(sub(rng)),
        _ => Body::weak_until(sub(rng), sub(rng)),
    }
}

/// One or two quantifiers over `A`, `B` and a body of depth at most 3.
pub fn random_formula(rng: &mut impl Rng, aps: &[&str]) -> HyperFormula {
    let vars: &[&str] = if rng.gen_bool(0.3) { &["A"] } else { &["A", "B"] };
    let prefix = vars
        .iter()
        .map(|v| {
            let q = if rng.gen_bool(0.5) { Quantifier::Exists } else { Quantifier::Forall };
            (q, v.to_string())
        })
        .collect();
    let depth = rng.gen_range(1..=3);
    let body = random_body(rng, vars, aps, depth);
    HyperFormula::new(prefix, body).unwrap()
}

/// Evaluates by full expansion over all assignments, block by block.
pub fn naive_qbf(q: &PrenexQBF) -> bool {
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

fn random_node(c: &mut Circuit, rng: &mut impl Rng, n: u32, depth: u32) -> NodeId {
    if depth == 0 || rng.gen_ratio(1, 5) {
        return match rng.gen_range(0..16) {
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
        (0..rng.gen_range(2..=4)).map(|_| random_node(c, rng, n, depth - 1)).collect();
    match rng.gen_range(0..4) {
        0 => c.and(kids),
        1 => c.or(kids),
        2 => {
            let a = c.and(kids);
            c.not(a)
        }
        _ => {
            let a = kids[0];
            let b = kids[1];
            c.iff(a, b)
        }
    }
}

/// Random prenex QBF with between one and `max_vars` variables, each bound
/// exactly once, in up to as many blocks as variables.
pub fn random_qbf(rng: &mut impl Rng, max_vars: u32) -> PrenexQBF {
    let n = rng.gen_range(1..=max_vars);
    let mut c = Circuit::new();
    let depth = rng.gen_range(1..=6);
    let m = random_node(&mut c, rng, n, depth);
    let names = (1..=n).map(|i| format!("x{i}")).collect();
    let mut q = PrenexQBF::new(c, m, names);
    let mut vars: Vec<Var> = (0..n).collect();
    vars.shuffle(rng);
    let mut blocks: Vec<(Quantifier, Vec<Var>)> = Vec::new();
    for v in vars {
        if blocks.is_empty() || rng.gen_ratio(1, 3) {
            let quant = if rng.gen() { Quantifier::Exists } else { Quantifier::Forall };
            blocks.push((quant, Vec::new()));
        }
        blocks.last_mut().unwrap().1.push(v);
    }
    q.blocks = blocks;
    q
}

/// Truth of `body` at every position `0..=d` of traces that are constant
/// from position `d` on.
fn eval_constant_tail(body: &Body, traces: &BTreeMap<String, &TracePrefix>, d: usize) -> Vec<bool> {
    let backward = |last: bool, step: &dyn Fn(usize, bool) -> bool| {
        let mut v = vec![false; d + 1];
        v[d] = last;
        for i in (0..d).rev() {
            v[i] = step(i, v[i + 1]);
        }
        v
    };
    match body {
        Body::True => vec![true; d + 1],
        Body::False => vec![false; d + 1],
        Body::Atom(a) => (0..=d).map(|i| traces[&a.var].letters[i].contains(&a.ap)).collect(),
        Body::NegAtom(a) => (0..=d).map(|i| !traces[&a.var].letters[i].contains(&a.ap)).collect(),
        Body::Not(x) => eval_constant_tail(x, traces, d).into_iter().map(|b| !b).collect(),
        Body::And(x, y) | Body::Or(x, y) | Body::Implies(x, y) | Body::Iff(x, y) => {
            let a = eval_constant_tail(x, traces, d);
            let b = eval_constant_tail(y, traces, d);
            a.iter()
                .zip(&b)
                .map(|(&a, &b)| match body {
                    Body::And(..) => a && b,
                    Body::Or(..) => a || b,
                    Body::Implies(..) => !a || b,
                    _ => a == b,
                })
                .collect()
        }
        Body::Next(x) => {
            let a = eval_constant_tail(x, traces, d);
            (0..=d).map(|i| a[(i + 1).min(d)]).collect()
        }
        Body::Eventually(x) => {
            let a = eval_constant_tail(x, traces, d);
            backward(a[d], &|i, next| a[i] || next)
        }
        Body::Globally(x) => {
            let a = eval_constant_tail(x, traces, d);
            backward(a[d], &|i, next| a[i] && next)
        }
        Body::Until(x, y) | Body::Release(x, y) | Body::WeakUntil(x, y) => {
            let a = eval_constant_tail(x, traces, d);
            let b = eval_constant_tail(y, traces, d);
            match body {
                Body::Until(..) => backward(b[d], &|i, next| b[i] || (a[i] && next)),
                Body::Release(..) => backward(b[d], &|i, next| b[i] && (a[i] || next)),
                _ => backward(b[d] || a[d], &|i, next| b[i] || (a[i] && next)),
            }
        }
    }
}

/// Truth of `f` over the infinite traces of structures whose paths all end in
/// halting sinks within `d` steps.
pub fn infinite_truth(models: &ModelMap, f: &HyperFormula, d: usize) -> bool {
    let paths: BTreeMap<String, Vec<TracePrefix>> = f
        .vars()
        .map(|v| (v.to_string(), models.get(v).unwrap().enumerate_prefixes(d)))
        .collect();
    fn go<'a>(
        f: &HyperFormula,
        level: usize,
        paths: &'a BTreeMap<String, Vec<TracePrefix>>,
        chosen: &mut BTreeMap<String, &'a TracePrefix>,
        d: usize,
    ) -> bool {
        let Some((q, var)) = f.prefix.get(level) else {
            return eval_constant_tail(&f.body, chosen, d)[0];
        };
        let mut any = false;
        let mut all = true;
        for p in &paths[var] {
            chosen.insert(var.clone(), p);
            let r = go(f, level + 1, paths, chosen, d);
            any |= r;
            all &= r;
        }
        chosen.remove(var);
        match q {
            Quantifier::Exists => any,
            Quantifier::Forall => all,
        }
    }
    go(f, 0, &paths, &mut BTreeMap::new(), d)
}

/// `exists x. x`
pub fn exists_x() -> PrenexQBF {
    let mut c = Circuit::new();
    let m = c.lit(0, true);
    let mut q = PrenexQBF::new(c, m, vec!["x".into()]);
    q.blocks = vec![(Quantifier::Exists, vec![0])];
    q
}

/// ∃x1 ∀x2 ∃x3 x4 ∀x5 over four three-literal clauses.
pub fn five_variable_example() -> PrenexQBF {
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
    let names = (1..=5).map(|i| format!("x{i}")).collect();
    let mut q = PrenexQBF::new(c, m, names);
    q.blocks = vec![
        (Quantifier::Exists, vec![0]),
        (Quantifier::Forall, vec![1]),
        (Quantifier::Exists, vec![2, 3]),
        (Quantifier::Forall, vec![4]),
    ];
    q
}

/// The QBF left after fixing the variables of `fixed` and dropping them from
/// the prefix.
pub fn fix_vars(q: &PrenexQBF, fixed: &BTreeMap<Var, bool>) -> PrenexQBF {
    let mut c = q.circuit.clone();
    let m = c.restrict(q.matrix, &|v| fixed.get(&v).copied());
    let mut out = PrenexQBF::new(c, m, q.names.clone());
    out.blocks = q
        .blocks
        .iter()
        .map(|(quant, vs)| (*quant, vs.iter().copied().filter(|v| !fixed.contains_key(v)).collect()))
        .collect();
    out
}

/// Value of the QBF encoding of `f` under `un`.
pub fn encoded_value(models: &ModelMap, f: &HyperFormula, un: hyperbmc_core::Unrolling) -> bool {
    let nnf = hyperbmc_core::to_nnf(f);
    let enc = hyperbmc_core::assemble_qbf(&nnf, models, un).unwrap();
    hyperbmc_core::solve(&enc.qbf).unwrap().value
}

/// One structure per trace variable, shared or independent at random.
pub fn random_models(rng: &mut impl Rng, f: &HyperFormula, aps: &[&str], acyclic: bool) -> ModelMap {
    let make = |rng: &mut _| {
        if acyclic {
            random_acyclic_halting(rng, 4, aps)
        } else {
            random_structure(rng, 4, aps)
        }
    };
    let vars: Vec<&str> = f.vars().collect();
    if rng.gen_bool(0.5) {
        let k = make(rng);
        ModelMap::uniform(vars, k)
    } else {
        let mut m = ModelMap::new();
        for v in vars {
            m.insert(v, make(rng));
        }
        m
    }
}
