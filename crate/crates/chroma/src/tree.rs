//! Decision trees over a finite field: a binary rooted tree of field
//! computations and zero-test branches deciding a subset of F, together with
//! the rewrite passes that prepare a tree for compilation to a straight-line
//! program (see [`rewrite`]) and characteristic-polynomial extraction (see
//! [`charpoly`]).
//!
//! The text format is line oriented; ids are positive integers, field
//! elements are canonical encodings:
//!
//! ```text
//! input <id>
//! const <id> <elem>
//! scale <id> <elem> <src>
//! add|sub|mul|div <id> <a> <b>
//! branch <id> <src> <eqchild> <neqchild>
//! leaf <id> in|out
//! root <id>
//! ```
//!
//! A computation line continues at the node declared on the following line;
//! branches name their children explicitly, so each branch child (and the
//! root) starts a new run of lines. `#` comments and blank lines are
//! skipped. Value operands (`src`, `a`, `b`) must name computation nodes
//! strictly earlier on the same root-to-leaf path.

pub mod charpoly;
pub mod rewrite;

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

use crate::field::{FieldCtx, FieldElement};

pub type NodeId = usize;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TreeError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("node {0} referenced but never declared")]
    UnknownNode(usize),
    #[error("node {0} declared twice")]
    DuplicateNode(usize),
    #[error("missing root directive")]
    MissingRoot,
    #[error("node {0} has more than one parent")]
    MultipleParents(NodeId),
    #[error("node {0} is unreachable from the root")]
    Unreachable(NodeId),
    #[error("the root must be the input node (or a single leaf)")]
    BadRoot,
    #[error("exactly one input node is allowed, at the root")]
    MisplacedInput,
    #[error("node {node} references {operand}, which is not an ancestor computation")]
    RefNotAncestor { node: NodeId, operand: NodeId },
    #[error("division by zero at node {node}")]
    DivisionByZero { node: NodeId },
    #[error("evaluation failed on inputs: {0:?}")]
    EvalFailures(Vec<u64>),
    #[error("node {node}: {msg}")]
    Retract { node: NodeId, msg: String },
    #[error("operation requires width <= 1, tree has width {0}")]
    WidthTooLarge(usize),
    #[error("operation requires a division-free tree (node {0} divides)")]
    HasDivision(NodeId),
    #[error("internal invariant violated: {0}")]
    Internal(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Label {
    In,
    Out,
}

impl Label {
    pub fn opposite(self) -> Label {
        match self {
            Label::In => Label::Out,
            Label::Out => Label::In,
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Label::In => write!(f, "in"),
            Label::Out => write!(f, "out"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl BinOp {
    pub fn name(self) -> &'static str {
        match self {
            BinOp::Add => "add",
            BinOp::Sub => "sub",
            BinOp::Mul => "mul",
            BinOp::Div => "div",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Node {
    /// The unique input node; always the root of a non-trivial tree.
    Input { next: NodeId },
    Const { value: FieldElement, next: NodeId },
    Scale { coeff: FieldElement, src: NodeId, next: NodeId },
    Bin { op: BinOp, lhs: NodeId, rhs: NodeId, next: NodeId },
    /// Tests the value of `test` against zero.
    Branch { test: NodeId, eq: NodeId, neq: NodeId },
    Leaf { label: Label },
}

impl Node {
    pub fn is_computation(&self) -> bool {
        matches!(
            self,
            Node::Input { .. } | Node::Const { .. } | Node::Scale { .. } | Node::Bin { .. }
        )
    }

    pub(crate) fn next(&self) -> Option<NodeId> {
        match *self {
            Node::Input { next }
            | Node::Const { next, .. }
            | Node::Scale { next, .. }
            | Node::Bin { next, .. } => Some(next),
            _ => None,
        }
    }

    fn children(&self) -> Vec<NodeId> {
        match *self {
            Node::Branch { eq, neq, .. } => vec![eq, neq],
            ref n => n.next().into_iter().collect(),
        }
    }

    pub(crate) fn operands(&self) -> Vec<NodeId> {
        match *self {
            Node::Scale { src, .. } => vec![src],
            Node::Bin { lhs, rhs, .. } => vec![lhs, rhs],
            Node::Branch { test, .. } => vec![test],
            _ => Vec::new(),
        }
    }
}

/// The nodes visited by one evaluation (or by the generic path), root and
/// terminal leaf included, plus the count of internal nodes (everything
/// except the root and the leaf).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PathInfo {
    pub nodes: Vec<NodeId>,
    pub internal_nodes: usize,
    pub label: Option<Label>,
}

#[derive(Debug, Clone)]
pub struct DecisionTree {
    nodes: Vec<Node>,
    root: NodeId,
}

impl DecisionTree {
    /// Builds a tree from an arena and validates every structural invariant.
    pub fn from_nodes(nodes: Vec<Node>, root: NodeId) -> Result<DecisionTree, TreeError> {
        let t = DecisionTree { nodes, root };
        t.validate()?;
        Ok(t)
    }

    pub fn root(&self) -> NodeId {
        self.root
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id]
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    fn validate(&self) -> Result<(), TreeError> {
        let n = self.nodes.len();
        if self.root >= n {
            return Err(TreeError::UnknownNode(self.root));
        }
        match self.nodes[self.root] {
            Node::Input { .. } => {}
            Node::Leaf { .. } if n == 1 => return Ok(()),
            _ => return Err(TreeError::BadRoot),
        }
        // Single-parent and reachability.
        let mut parent = vec![None; n];
        for (id, node) in self.nodes.iter().enumerate() {
            for c in node.children() {
                if c >= n {
                    return Err(TreeError::UnknownNode(c));
                }
                if parent[c].is_some() || c == self.root {
                    return Err(TreeError::MultipleParents(c));
                }
                parent[c] = Some(id);
            }
        }
        let mut reach = vec![false; n];
        let mut stack = vec![self.root];
        reach[self.root] = true;
        while let Some(id) = stack.pop() {
            for c in self.nodes[id].children() {
                if !reach[c] {
                    reach[c] = true;
                    stack.push(c);
                }
            }
        }
        if let Some(id) = reach.iter().position(|&r| !r) {
            return Err(TreeError::Unreachable(id));
        }
        // No second input; operands are ancestor-side computations.
        for (id, node) in self.nodes.iter().enumerate() {
            if matches!(node, Node::Input { .. }) && id != self.root {
                return Err(TreeError::MisplacedInput);
            }
            for op in node.operands() {
                if op >= n {
                    return Err(TreeError::UnknownNode(op));
                }
                if !self.nodes[op].is_computation() {
                    return Err(TreeError::RefNotAncestor { node: id, operand: op });
                }
                let mut cur = id;
                let ok = loop {
                    match parent[cur] {
                        Some(p) => {
                            if p == op {
                                break true;
                            }
                            cur = p;
                        }
                        None => break false,
                    }
                };
                if !ok {
                    return Err(TreeError::RefNotAncestor { node: id, operand: op });
                }
            }
        }
        Ok(())
    }

    pub fn has_division(&self) -> bool {
        self.nodes
            .iter()
            .any(|n| matches!(n, Node::Bin { op: BinOp::Div, .. }))
    }

    /// Runs the tree on one input.
    pub fn evaluate(
        &self,
        ctx: &FieldCtx,
        x: FieldElement,
    ) -> Result<(Label, PathInfo), TreeError> {
        let mut values: Vec<Option<FieldElement>> = vec![None; self.nodes.len()];
        let mut path = Vec::new();
        let mut cur = self.root;
        loop {
            path.push(cur);
            let get = |values: &[Option<FieldElement>], id: NodeId| {
                values[id].expect("operands are validated ancestors")
            };
            match self.nodes[cur] {
                Node::Input { next } => {
                    values[cur] = Some(x);
                    cur = next;
                }
                Node::Const { value, next } => {
                    values[cur] = Some(value);
                    cur = next;
                }
                Node::Scale { coeff, src, next } => {
                    values[cur] = Some(ctx.mul(coeff, get(&values, src)));
                    cur = next;
                }
                Node::Bin { op, lhs, rhs, next } => {
                    let (a, b) = (get(&values, lhs), get(&values, rhs));
                    let v = match op {
                        BinOp::Add => ctx.add(a, b),
                        BinOp::Sub => ctx.sub(a, b),
                        BinOp::Mul => ctx.mul(a, b),
                        BinOp::Div => {
                            if b.is_zero() {
                                return Err(TreeError::DivisionByZero { node: cur });
                            }
                            ctx.div(a, b).expect("nonzero divisor")
                        }
                    };
                    values[cur] = Some(v);
                    cur = next;
                }
                Node::Branch { test, eq, neq } => {
                    cur = if get(&values, test).is_zero() { eq } else { neq };
                }
                Node::Leaf { label } => {
                    let internal_nodes = path.len().saturating_sub(2);
                    return Ok((
                        label,
                        PathInfo {
                            nodes: path,
                            internal_nodes,
                            label: Some(label),
                        },
                    ));
                }
            }
        }
    }

    /// Evaluation outcome for every field element, indexed by encoding.
    pub fn eval_table(&self, ctx: &FieldCtx) -> Vec<Result<Label, TreeError>> {
        ctx.elements()
            .map(|x| self.evaluate(ctx, x).map(|(l, _)| l))
            .collect()
    }

    /// The decided subset as a membership vector indexed by encoding.
    /// Fails (listing the offending inputs) if any evaluation fails.
    pub fn decided_set(&self, ctx: &FieldCtx) -> Result<Vec<bool>, TreeError> {
        let table = self.eval_table(ctx);
        let failures: Vec<u64> = table
            .iter()
            .enumerate()
            .filter(|(_, r)| r.is_err())
            .map(|(i, _)| i as u64)
            .collect();
        if !failures.is_empty() {
            return Err(TreeError::EvalFailures(failures));
        }
        Ok(table.into_iter().map(|r| r.unwrap() == Label::In).collect())
    }

    /// Maximum number of internal nodes (computations and branches, the root
    /// input and leaves excluded) over all root-to-leaf paths.
    pub fn size(&self) -> usize {
        fn go(t: &DecisionTree, id: NodeId, is_root: bool) -> usize {
            let own = usize::from(!is_root && !matches!(t.nodes[id], Node::Leaf { .. }));
            match t.nodes[id] {
                Node::Branch { eq, neq, .. } => own + go(t, eq, false).max(go(t, neq, false)),
                Node::Leaf { .. } => 0,
                ref n => own + go(t, n.next().expect("computation has next"), false),
            }
        }
        go(self, self.root, true)
    }

    /// For every branch node, the number of decision nodes separating it
    /// from the generic path, counting itself when off the path (so on-path
    /// branches score 0). Non-branch slots hold None.
    pub fn branch_offsets(&self) -> Vec<Option<usize>> {
        let mut out = vec![None; self.nodes.len()];
        // (node, number of off-path decision ancestors; None while on the
        // generic path)
        let mut stack: Vec<(NodeId, Option<usize>)> = vec![(self.root, None)];
        while let Some((id, off)) = stack.pop() {
            match self.nodes[id] {
                Node::Branch { eq, neq, .. } => match off {
                    None => {
                        out[id] = Some(0);
                        stack.push((eq, Some(0)));
                        stack.push((neq, None));
                    }
                    Some(k) => {
                        out[id] = Some(k + 1);
                        stack.push((eq, Some(k + 1)));
                        stack.push((neq, Some(k + 1)));
                    }
                },
                Node::Leaf { .. } => {}
                ref n => stack.push((n.next().expect("computation has next"), off)),
            }
        }
        out
    }

    /// Maximum branch offset: 0 iff every branch lies on the generic path.
    pub fn width(&self) -> usize {
        self.branch_offsets()
            .iter()
            .flatten()
            .copied()
            .max()
            .unwrap_or(0)
    }

    /// The path taking the "not equal" fork at every branch.
    pub fn generic_path(&self) -> PathInfo {
        let mut nodes = Vec::new();
        let mut cur = self.root;
        loop {
            nodes.push(cur);
            match self.nodes[cur] {
                Node::Branch { neq, .. } => cur = neq,
                Node::Leaf { label } => {
                    let internal_nodes = nodes.len().saturating_sub(2);
                    return PathInfo {
                        nodes,
                        internal_nodes,
                        label: Some(label),
                    };
                }
                ref n => cur = n.next().expect("computation has next"),
            }
        }
    }

    /// Structural equality, insensitive to arena numbering.
    pub fn structurally_equal(&self, other: &DecisionTree) -> bool {
        fn go(
            a: &DecisionTree,
            b: &DecisionTree,
            ia: NodeId,
            ib: NodeId,
            map: &mut HashMap<NodeId, NodeId>,
        ) -> bool {
            map.insert(ia, ib);
            match (&a.nodes[ia], &b.nodes[ib]) {
                (Node::Input { next: na }, Node::Input { next: nb }) => go(a, b, *na, *nb, map),
                (Node::Const { value: va, next: na }, Node::Const { value: vb, next: nb }) => {
                    va == vb && go(a, b, *na, *nb, map)
                }
                (
                    Node::Scale { coeff: ca, src: sa, next: na },
                    Node::Scale { coeff: cb, src: sb, next: nb },
                ) => ca == cb && map.get(sa) == Some(sb) && go(a, b, *na, *nb, map),
                (
                    Node::Bin { op: oa, lhs: la, rhs: ra, next: na },
                    Node::Bin { op: ob, lhs: lb, rhs: rb, next: nb },
                ) => {
                    oa == ob
                        && map.get(la) == Some(lb)
                        && map.get(ra) == Some(rb)
                        && go(a, b, *na, *nb, map)
                }
                (
                    Node::Branch { test: ta, eq: ea, neq: qa },
                    Node::Branch { test: tb, eq: eb, neq: qb },
                ) => {
                    map.get(ta) == Some(tb) && go(a, b, *ea, *eb, map) && go(a, b, *qa, *qb, map)
                }
                (Node::Leaf { label: la }, Node::Leaf { label: lb }) => la == lb,
                _ => false,
            }
        }
        self.nodes.len() == other.nodes.len()
            && go(self, other, self.root, other.root, &mut HashMap::new())
    }

    /// Parses the line-oriented text format.
    pub fn parse(ctx: &FieldCtx, text: &str) -> Result<DecisionTree, TreeError> {
        enum Rec {
            Input,
            Const(FieldElement),
            Scale(FieldElement, usize),
            Bin(BinOp, usize, usize),
            Branch(usize, usize, usize),
            Leaf(Label),
        }
        let mut records: Vec<(usize, usize, Rec)> = Vec::new(); // (line, fileid, rec)
        let mut root_fileid: Option<usize> = None;
        for (idx, raw) in text.lines().enumerate() {
            let lineno = idx + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |msg: String| TreeError::Parse { line: lineno, msg };
            let toks: Vec<&str> = line.split_whitespace().collect();
            let id_tok = |i: usize| -> Result<usize, TreeError> {
                let id = toks
                    .get(i)
                    .and_then(|s| s.parse::<usize>().ok())
                    .ok_or_else(|| err(format!("expected a node id at position {i}")))?;
                if id == 0 {
                    return Err(err("node ids are positive".to_string()));
                }
                Ok(id)
            };
            let elem_tok = |i: usize| -> Result<FieldElement, TreeError> {
                let enc = toks
                    .get(i)
                    .and_then(|s| s.parse::<u64>().ok())
                    .ok_or_else(|| err(format!("expected an element encoding at position {i}")))?;
                ctx.element(enc).map_err(|e| err(e.to_string()))
            };
            let arity = |n: usize| -> Result<(), TreeError> {
                if toks.len() != n {
                    Err(err(format!("expected {n} tokens, got {}", toks.len())))
                } else {
                    Ok(())
                }
            };
            match toks[0] {
                "root" => {
                    arity(2)?;
                    if root_fileid.is_some() {
                        return Err(err("duplicate root directive".to_string()));
                    }
                    root_fileid = Some(id_tok(1)?);
                }
                "input" => {
                    arity(2)?;
                    records.push((lineno, id_tok(1)?, Rec::Input));
                }
                "const" => {
                    arity(3)?;
                    records.push((lineno, id_tok(1)?, Rec::Const(elem_tok(2)?)));
                }
                "scale" => {
                    arity(4)?;
                    records.push((lineno, id_tok(1)?, Rec::Scale(elem_tok(2)?, id_tok(3)?)));
                }
                op @ ("add" | "sub" | "mul" | "div") => {
                    arity(4)?;
                    let op = match op {
                        "add" => BinOp::Add,
                        "sub" => BinOp::Sub,
                        "mul" => BinOp::Mul,
                        _ => BinOp::Div,
                    };
                    records.push((lineno, id_tok(1)?, Rec::Bin(op, id_tok(2)?, id_tok(3)?)));
                }
                "branch" => {
                    arity(5)?;
                    records.push((
                        lineno,
                        id_tok(1)?,
                        Rec::Branch(id_tok(2)?, id_tok(3)?, id_tok(4)?),
                    ));
                }
                "leaf" => {
                    arity(3)?;
                    let label = match toks[2] {
                        "in" => Label::In,
                        "out" => Label::Out,
                        other => {
                            return Err(err(format!("expected in|out, got {other:?}")));
                        }
                    };
                    records.push((lineno, id_tok(1)?, Rec::Leaf(label)));
                }
                other => return Err(err(format!("unknown directive {other:?}"))),
            }
        }
        let root_fileid = root_fileid.ok_or(TreeError::MissingRoot)?;
        let mut arena_of: HashMap<usize, NodeId> = HashMap::new();
        for (i, (_, fileid, _)) in records.iter().enumerate() {
            if arena_of.insert(*fileid, i).is_some() {
                return Err(TreeError::DuplicateNode(*fileid));
            }
        }
        let lookup = |fileid: usize| -> Result<NodeId, TreeError> {
            arena_of
                .get(&fileid)
                .copied()
                .ok_or(TreeError::UnknownNode(fileid))
        };
        let mut nodes = Vec::with_capacity(records.len());
        for (i, (line, _, rec)) in records.iter().enumerate() {
            // A computation continues at the node on the following line.
            let next = || -> Result<NodeId, TreeError> {
                if i + 1 < records.len() {
                    Ok(i + 1)
                } else {
                    Err(TreeError::Parse {
                        line: *line,
                        msg: "computation node at end of file has no continuation".to_string(),
                    })
                }
            };
            nodes.push(match *rec {
                Rec::Input => Node::Input { next: next()? },
                Rec::Const(value) => Node::Const { value, next: next()? },
                Rec::Scale(coeff, src) => Node::Scale {
                    coeff,
                    src: lookup(src)?,
                    next: next()?,
                },
                Rec::Bin(op, a, b) => Node::Bin {
                    op,
                    lhs: lookup(a)?,
                    rhs: lookup(b)?,
                    next: next()?,
                },
                Rec::Branch(src, eq, neq) => Node::Branch {
                    test: lookup(src)?,
                    eq: lookup(eq)?,
                    neq: lookup(neq)?,
                },
                Rec::Leaf(label) => Node::Leaf { label },
            });
        }
        DecisionTree::from_nodes(nodes, lookup(root_fileid)?)
    }

    /// Renders the text format; `parse` of the output rebuilds an equal tree.
    /// Nodes are renumbered in emission order starting at 1.
    pub fn to_text(&self) -> String {
        // Emission order: a computation is followed by its continuation, a
        // branch by its eq run then its neq run.
        fn collect(t: &DecisionTree, id: NodeId, order: &mut Vec<NodeId>) {
            order.push(id);
            match t.nodes[id] {
                Node::Branch { eq, neq, .. } => {
                    collect(t, eq, order);
                    collect(t, neq, order);
                }
                Node::Leaf { .. } => {}
                ref n => collect(t, n.next().expect("computation has next"), order),
            }
        }
        let mut order = Vec::new();
        collect(self, self.root, &mut order);
        let mut fileid = vec![0usize; self.nodes.len()];
        for (i, &id) in order.iter().enumerate() {
            fileid[id] = i + 1;
        }
        let mut out = String::new();
        for &id in &order {
            let line = match self.nodes[id] {
                Node::Input { .. } => format!("input {}", fileid[id]),
                Node::Const { value, .. } => format!("const {} {}", fileid[id], value),
                Node::Scale { coeff, src, .. } => {
                    format!("scale {} {} {}", fileid[id], coeff, fileid[src])
                }
                Node::Bin { op, lhs, rhs, .. } => {
                    format!("{} {} {} {}", op.name(), fileid[id], fileid[lhs], fileid[rhs])
                }
                Node::Branch { test, eq, neq } => format!(
                    "branch {} {} {} {}",
                    fileid[id], fileid[test], fileid[eq], fileid[neq]
                ),
                Node::Leaf { label } => format!("leaf {} {}", fileid[id], label),
            };
            out.push_str(&line);
            out.push('\n');
        }
        out.push_str(&format!("root {}\n", fileid[self.root]));
        out
    }
}
