//! Hash-consed Boolean circuits in negation normal form.
//!
//! Negation is only ever applied to variables; [`Circuit::not`] pushes it
//! through `And`/`Or` by De Morgan, caching both polarities. `And`/`Or`
//! nodes are flattened, sorted and deduplicated, so structurally equal
//! formulas share one node.

use std::collections::HashMap;

pub type Var = u32;

/// Index of a node inside its [`Circuit`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(u32);

impl NodeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Node {
    Const(bool),
    /// A variable (`true`) or its negation (`false`).
    Lit(Var, bool),
    And(Box<[NodeId]>),
    Or(Box<[NodeId]>),
}

const RED_ZONE: usize = 64 * 1024;
const STACK_CHUNK: usize = 4 * 1024 * 1024;

pub(crate) fn deep<R>(f: impl FnOnce() -> R) -> R {
    stacker::maybe_grow(RED_ZONE, STACK_CHUNK, f)
}

#[derive(Debug, Clone)]
pub struct Circuit {
    nodes: Vec<Node>,
    table: HashMap<Node, NodeId>,
    /// Smallest and largest variable below each node; `(MAX, 0)` if none.
    range: Vec<(Var, Var)>,
    negation: HashMap<NodeId, NodeId>,
}

impl Default for Circuit {
    fn default() -> Self {
        Self::new()
    }
}

impl Circuit {
    pub fn new() -> Self {
        let mut c = Circuit {
            nodes: Vec::new(),
            table: HashMap::new(),
            range: Vec::new(),
            negation: HashMap::new(),
        };
        let f = c.intern(Node::Const(false));
        let t = c.intern(Node::Const(true));
        c.negation.insert(f, t);
        c.negation.insert(t, f);
        c
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id.index()]
    }

    pub fn range(&self, id: NodeId) -> (Var, Var) {
        self.range[id.index()]
    }

    /// Whether `v` can occur below `id` (a cheap over-approximation).
    pub fn may_depend(&self, id: NodeId, v: Var) -> bool {
        let (lo, hi) = self.range[id.index()];
        lo <= v && v <= hi
    }

    fn intern(&mut self, node: Node) -> NodeId {
        if let Some(&id) = self.table.get(&node) {
            return id;
        }
        let range = match &node {
            Node::Const(_) => (Var::MAX, 0),
            Node::Lit(v, _) => (*v, *v),
            Node::And(cs) | Node::Or(cs) => cs.iter().fold((Var::MAX, 0), |(lo, hi), c| {
                let (a, b) = self.range[c.index()];
                (lo.min(a), hi.max(b))
            }),
        };
        let id = NodeId(self.nodes.len() as u32);
        self.nodes.push(node.clone());
        self.range.push(range);
        self.table.insert(node, id);
        id
    }

    pub fn constant(&mut self, b: bool) -> NodeId {
        NodeId(b as u32)
    }

    pub fn tru(&self) -> NodeId {
        NodeId(1)
    }

    pub fn fls(&self) -> NodeId {
        NodeId(0)
    }

    pub fn as_const(&self, id: NodeId) -> Option<bool> {
        match self.node(id) {
            Node::Const(b) => Some(*b),
            _ => None,
        }
    }

    pub fn lit(&mut self, v: Var, positive: bool) -> NodeId {
        let id = self.intern(Node::Lit(v, positive));
        if !self.negation.contains_key(&id) {
            let neg = self.intern(Node::Lit(v, !positive));
            self.negation.insert(id, neg);
            self.negation.insert(neg, id);
        }
        id
    }

    pub fn var(&mut self, v: Var) -> NodeId {
        self.lit(v, true)
    }

    pub fn and(&mut self, children: impl IntoIterator<Item = NodeId>) -> NodeId {
        self.gate(true, children)
    }

    pub fn or(&mut self, children: impl IntoIterator<Item = NodeId>) -> NodeId {
        self.gate(false, children)
    }

    pub fn and2(&mut self, a: NodeId, b: NodeId) -> NodeId {
        self.gate(true, [a, b])
    }

    pub fn or2(&mut self, a: NodeId, b: NodeId) -> NodeId {
        self.gate(false, [a, b])
    }

    pub fn implies(&mut self, a: NodeId, b: NodeId) -> NodeId {
        let na = self.not(a);
        self.or2(na, b)
    }

    pub fn iff(&mut self, a: NodeId, b: NodeId) -> NodeId {
        let (na, nb) = (self.not(a), self.not(b));
        let both = self.and2(a, b);
        let neither = self.and2(na, nb);
        self.or2(both, neither)
    }

    /// `is_and` selects the connective; the other one's identity is absorbing.
    fn gate(&mut self, is_and: bool, children: impl IntoIterator<Item = NodeId>) -> NodeId {
        let unit = self.constant(is_and);
        let zero = self.constant(!is_and);
        let mut out: Vec<NodeId> = Vec::new();
        for c in children {
            match self.node(c) {
                Node::Const(b) if *b == is_and => {}
                Node::Const(_) => return zero,
                Node::And(cs) if is_and => out.extend_from_slice(cs),
                Node::Or(cs) if !is_and => out.extend_from_slice(cs),
                _ => out.push(c),
            }
        }
        out.sort_unstable();
        out.dedup();
        for c in &out {
            if let Some(n) = self.negation.get(c) {
                if out.binary_search(n).is_ok() {
                    return zero;
                }
            }
        }
        match out.len() {
            0 => unit,
            1 => out[0],
            _ => {
                let boxed = out.into_boxed_slice();
                self.intern(if is_and { Node::And(boxed) } else { Node::Or(boxed) })
            }
        }
    }

    pub fn not(&mut self, id: NodeId) -> NodeId {
        if let Some(&n) = self.negation.get(&id) {
            return n;
        }
        let n = deep(|| match self.node(id).clone() {
            Node::Const(b) => self.constant(!b),
            Node::Lit(v, p) => self.lit(v, !p),
            Node::And(cs) => {
                let neg: Vec<NodeId> = cs.iter().map(|&c| self.not(c)).collect();
                self.or(neg)
            }
            Node::Or(cs) => {
                let neg: Vec<NodeId> = cs.iter().map(|&c| self.not(c)).collect();
                self.and(neg)
            }
        });
        self.negation.insert(id, n);
        self.negation.insert(n, id);
        n
    }

    /// Substitutes constants for the variables `value` maps to `Some`.
    pub fn restrict(&mut self, root: NodeId, value: &dyn Fn(Var) -> Option<bool>) -> NodeId {
        let mut memo = HashMap::new();
        self.restrict_memo(root, value, &mut memo)
    }

    pub(crate) fn restrict_memo(
        &mut self,
        id: NodeId,
        value: &dyn Fn(Var) -> Option<bool>,
        memo: &mut HashMap<NodeId, NodeId>,
    ) -> NodeId {
        if let Some(&r) = memo.get(&id) {
            return r;
        }
        let r = deep(|| match self.node(id).clone() {
            Node::Const(_) => id,
            Node::Lit(v, p) => match value(v) {
                Some(b) => self.constant(b == p),
                None => id,
            },
            Node::And(cs) => {
                let cs: Vec<NodeId> =
                    cs.iter().map(|&c| self.restrict_memo(c, value, memo)).collect();
                self.and(cs)
            }
            Node::Or(cs) => {
                let cs: Vec<NodeId> =
                    cs.iter().map(|&c| self.restrict_memo(c, value, memo)).collect();
                self.or(cs)
            }
        });
        memo.insert(id, r);
        r
    }

    /// Evaluates `root` under a total assignment.
    pub fn eval(&self, root: NodeId, value: &dyn Fn(Var) -> bool) -> bool {
        let mut memo: HashMap<NodeId, bool> = HashMap::new();
        self.eval_memo(root, value, &mut memo)
    }

    fn eval_memo(&self, id: NodeId, value: &dyn Fn(Var) -> bool, memo: &mut HashMap<NodeId, bool>) -> bool {
        if let Some(&b) = memo.get(&id) {
            return b;
        }
        let b = deep(|| match self.node(id) {
            Node::Const(b) => *b,
            Node::Lit(v, p) => value(*v) == *p,
            Node::And(cs) => cs.iter().all(|&c| self.eval_memo(c, value, memo)),
            Node::Or(cs) => cs.iter().any(|&c| self.eval_memo(c, value, memo)),
        });
        memo.insert(id, b);
        b
    }

    /// Variables occurring below `root`, ascending.
    pub fn support(&self, root: NodeId) -> Vec<Var> {
        let mut seen = vec![false; self.nodes.len()];
        let mut vars = Vec::new();
        let mut stack = vec![root];
        while let Some(id) = stack.pop() {
            if std::mem::replace(&mut seen[id.index()], true) {
                continue;
            }
            match self.node(id) {
                Node::Const(_) => {}
                Node::Lit(v, _) => vars.push(*v),
                Node::And(cs) | Node::Or(cs) => stack.extend_from_slice(cs),
            }
        }
        vars.sort_unstable();
        vars.dedup();
        vars
    }

    /// Nodes reachable from `root`, children before parents.
    pub fn topological(&self, root: NodeId) -> Vec<NodeId> {
        let mut seen = vec![false; self.nodes.len()];
        let mut order = Vec::new();
        let mut stack = vec![(root, false)];
        while let Some((id, expanded)) = stack.pop() {
            if expanded {
                order.push(id);
                continue;
            }
            if std::mem::replace(&mut seen[id.index()], true) {
                continue;
            }
            stack.push((id, true));
            if let Node::And(cs) | Node::Or(cs) = self.node(id) {
                for &c in cs.iter().rev() {
                    if !seen[c.index()] {
                        stack.push((c, false));
                    }
                }
            }
        }
        order
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constants_fold() {
        let mut c = Circuit::new();
        let x = c.var(0);
        let t = c.tru();
        let f = c.fls();
        assert_eq!(c.and2(x, f), f);
        assert_eq!(c.and2(x, t), x);
        assert_eq!(c.or2(x, t), t);
        assert_eq!(c.or2(x, f), x);
        let nx = c.not(x);
        assert_eq!(c.and2(x, nx), f);
        assert_eq!(c.or2(nx, x), t);
    }

    #[test]
    fn structural_sharing() {
        let mut c = Circuit::new();
        let (x, y) = (c.var(0), c.var(1));
        let a = c.and2(x, y);
        let b = c.and2(y, x);
        assert_eq!(a, b);
        let n = c.len();
        let _ = c.and([y, x, y]);
        assert_eq!(c.len(), n);
    }

    #[test]
    fn negation_is_involutive_and_pushed_to_literals() {
        let mut c = Circuit::new();
        let (x, y, z) = (c.var(0), c.var(1), c.var(2));
        let yz = c.or2(y, z);
        let f = c.and2(x, yz);
        let nf = c.not(f);
        assert!(matches!(c.node(nf), Node::Or(_)));
        assert_eq!(c.not(nf), f);
        for bits in 0..8u32 {
            let val = |v: Var| bits >> v & 1 == 1;
            assert_eq!(c.eval(nf, &val), !c.eval(f, &val));
        }
    }

    #[test]
    fn restrict_substitutes() {
        let mut c = Circuit::new();
        let (x, y) = (c.var(0), c.var(1));
        let f = c.iff(x, y);
        let g = c.restrict(f, &|v| (v == 0).then_some(true));
        assert_eq!(g, y);
        assert_eq!(c.support(f), vec![0, 1]);
        assert_eq!(c.range(f), (0, 1));
    }

    #[test]
    fn topological_order_puts_children_first() {
        let mut c = Circuit::new();
        let (x, y) = (c.var(0), c.var(1));
        let nx = c.not(x);
        let a = c.and2(nx, y);
        let root = c.or2(a, x);
        let order = c.topological(root);
        assert_eq!(*order.last().unwrap(), root);
        let pos = |n: NodeId| order.iter().position(|&m| m == n).unwrap();
        assert!(pos(a) < pos(root));
        assert!(pos(nx) < pos(a));
    }
}
