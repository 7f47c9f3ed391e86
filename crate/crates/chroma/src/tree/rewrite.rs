//! Tree rewrite passes: pruning, division elimination, segment retraction
//! and width reduction.
//!
//! All passes return fresh trees (arenas are renumbered) and preserve the
//! decided set on every input where the original tree evaluates
//! successfully. Division elimination additionally makes the tree total.

use std::collections::HashMap;

use crate::field::{FieldCtx, FieldElement};
use crate::tree::{BinOp, DecisionTree, Label, Node, NodeId, TreeError};

const DUMMY: NodeId = usize::MAX;

/// Arena-under-construction with patchable links.
#[derive(Clone)]
struct TreeBuilder {
    nodes: Vec<Node>,
}

impl TreeBuilder {
    fn new() -> TreeBuilder {
        TreeBuilder { nodes: Vec::new() }
    }

    fn alloc(&mut self, node: Node) -> NodeId {
        self.nodes.push(node);
        self.nodes.len() - 1
    }

    fn leaf(&mut self, label: Label) -> NodeId {
        self.alloc(Node::Leaf { label })
    }

    fn link_next(&mut self, id: NodeId, next: NodeId) {
        match &mut self.nodes[id] {
            Node::Input { next: n }
            | Node::Const { next: n, .. }
            | Node::Scale { next: n, .. }
            | Node::Bin { next: n, .. } => *n = next,
            _ => unreachable!("only computations are relinked"),
        }
    }

    fn link_branch(&mut self, id: NodeId, eq: NodeId, neq: NodeId) {
        match &mut self.nodes[id] {
            Node::Branch { eq: e, neq: q, .. } => {
                *e = eq;
                *q = neq;
            }
            _ => unreachable!("not a branch"),
        }
    }

    fn finish(self, root: NodeId) -> Result<DecisionTree, TreeError> {
        DecisionTree::from_nodes(self.nodes, root)
    }
}

// ---------------------------------------------------------------------------
// Pruning
// ---------------------------------------------------------------------------

/// Removes unreachable forks and computations that feed no decision, until
/// stable. Fork reachability is established by exhaustive evaluation over
/// the field (failing inputs reach nothing); a branch whose surviving inputs
/// all take one fork is replaced by that subtree, and a branch no input
/// reaches collapses to its generic ("not equal") subtree. The decided set
/// is unchanged on the original domain of definition and the longest-path
/// size never grows.
pub fn prune(t: &DecisionTree, ctx: &FieldCtx) -> Result<DecisionTree, TreeError> {
    let mut cur = t.clone();
    loop {
        let next = prune_once(&cur, ctx)?;
        if next.structurally_equal(&cur) {
            return Ok(next);
        }
        cur = next;
    }
}

fn prune_once(t: &DecisionTree, ctx: &FieldCtx) -> Result<DecisionTree, TreeError> {
    let n = t.num_nodes();
    let mut eq_reached = vec![false; n];
    let mut neq_reached = vec![false; n];
    for x in ctx.elements() {
        if let Ok((_, path)) = t.evaluate(ctx, x) {
            for pair in path.nodes.windows(2) {
                if let Node::Branch { eq, .. } = t.node(pair[0]) {
                    if pair[1] == *eq {
                        eq_reached[pair[0]] = true;
                    } else {
                        neq_reached[pair[0]] = true;
                    }
                }
            }
        }
    }
    let mut b = TreeBuilder::new();
    let mut map: HashMap<NodeId, NodeId> = HashMap::new();

    fn go(
        t: &DecisionTree,
        id: NodeId,
        b: &mut TreeBuilder,
        map: &mut HashMap<NodeId, NodeId>,
        eq_reached: &[bool],
        neq_reached: &[bool],
    ) -> NodeId {
        match *t.node(id) {
            Node::Branch { test, eq, neq } => {
                match (eq_reached[id], neq_reached[id]) {
                    (true, true) => {
                        let nid = b.alloc(Node::Branch {
                            test: map[&test],
                            eq: DUMMY,
                            neq: DUMMY,
                        });
                        let e = go(t, eq, b, map, eq_reached, neq_reached);
                        let q = go(t, neq, b, map, eq_reached, neq_reached);
                        b.link_branch(nid, e, q);
                        nid
                    }
                    (true, false) => go(t, eq, b, map, eq_reached, neq_reached),
                    // One-sided or fully unreachable: keep the generic fork.
                    _ => go(t, neq, b, map, eq_reached, neq_reached),
                }
            }
            Node::Leaf { label } => b.leaf(label),
            ref node => {
                let next = node.next().expect("computation has next");
                let nid = match *node {
                    Node::Input { .. } => b.alloc(Node::Input { next: DUMMY }),
                    Node::Const { value, .. } => b.alloc(Node::Const { value, next: DUMMY }),
                    Node::Scale { coeff, src, .. } => b.alloc(Node::Scale {
                        coeff,
                        src: map[&src],
                        next: DUMMY,
                    }),
                    Node::Bin { op, lhs, rhs, .. } => b.alloc(Node::Bin {
                        op,
                        lhs: map[&lhs],
                        rhs: map[&rhs],
                        next: DUMMY,
                    }),
                    _ => unreachable!(),
                };
                map.insert(id, nid);
                let c = go(t, next, b, map, eq_reached, neq_reached);
                b.link_next(nid, c);
                nid
            }
        }
    }

    let root = go(t, t.root(), &mut b, &mut map, &eq_reached, &neq_reached);
    splice_dead_computations(&b.finish(root)?)
}

/// Both pruned-tree conditions, checkable after the fact: every branch is
/// two-way reachable under exhaustive evaluation, and every computation has
/// a branch below it.
pub fn is_pruned(t: &DecisionTree, ctx: &FieldCtx) -> bool {
    prune(t, ctx).map_or(false, |p| p.structurally_equal(t))
}

// ---------------------------------------------------------------------------
// Division elimination
// ---------------------------------------------------------------------------

/// Rewrites every value as a numerator/denominator pair so that no node
/// divides. Where the original evaluation is defined the decided set is
/// unchanged; inputs that used to fail on a zero divisor now evaluate (the
/// tree becomes total). The longest path grows by at most a factor of four.
///
/// Division-free trees are returned unchanged.
pub fn eliminate_division(t: &DecisionTree) -> Result<DecisionTree, TreeError> {
    if !t.has_division() {
        return Ok(t.clone());
    }
    let mut b = TreeBuilder::new();
    // Original id -> (numerator id, optional denominator id); a missing
    // denominator means 1.
    let mut map: HashMap<NodeId, (NodeId, Option<NodeId>)> = HashMap::new();

    fn go(
        t: &DecisionTree,
        id: NodeId,
        b: &mut TreeBuilder,
        map: &mut HashMap<NodeId, (NodeId, Option<NodeId>)>,
    ) -> NodeId {
        // Emits a run of computations for one original node; returns the head
        // of the new subtree.
        let chain_then = |b: &mut TreeBuilder,
                          map: &mut HashMap<NodeId, (NodeId, Option<NodeId>)>,
                          emitted: Vec<NodeId>,
                          t: &DecisionTree,
                          next: NodeId|
         -> NodeId {
            let tail = go(t, next, b, map);
            let mut cur = tail;
            for &id in emitted.iter().rev() {
                b.link_next(id, cur);
                cur = id;
            }
            cur
        };
        match *t.node(id) {
            Node::Input { next } => {
                let nid = b.alloc(Node::Input { next: DUMMY });
                map.insert(id, (nid, None));
                chain_then(b, map, vec![nid], t, next)
            }
            Node::Const { value, next } => {
                let nid = b.alloc(Node::Const { value, next: DUMMY });
                map.insert(id, (nid, None));
                chain_then(b, map, vec![nid], t, next)
            }
            Node::Scale { coeff, src, next } => {
                let (sn, sd) = map[&src];
                let nid = b.alloc(Node::Scale { coeff, src: sn, next: DUMMY });
                map.insert(id, (nid, sd));
                chain_then(b, map, vec![nid], t, next)
            }
            Node::Bin { op, lhs, rhs, next } => {
                let (ln, ld) = map[&lhs];
                let (rn, rd) = map[&rhs];
                let mut emitted = Vec::new();
                let mul = |b: &mut TreeBuilder, emitted: &mut Vec<NodeId>, a, c| {
                    let m = b.alloc(Node::Bin { op: BinOp::Mul, lhs: a, rhs: c, next: DUMMY });
                    emitted.push(m);
                    m
                };
                // Cross-multiply one side when only the other carries a
                // denominator.
                let opt_mul = |b: &mut TreeBuilder,
                               emitted: &mut Vec<NodeId>,
                               a: Option<NodeId>,
                               c: Option<NodeId>| {
                    match (a, c) {
                        (None, None) => None,
                        (Some(x), None) | (None, Some(x)) => Some(x),
                        (Some(x), Some(y)) => {
                            let m = b.alloc(Node::Bin {
                                op: BinOp::Mul,
                                lhs: x,
                                rhs: y,
                                next: DUMMY,
                            });
                            emitted.push(m);
                            Some(m)
                        }
                    }
                };
                let pair = match op {
                    BinOp::Mul => {
                        let num = mul(b, &mut emitted, ln, rn);
                        let den = opt_mul(b, &mut emitted, ld, rd);
                        (num, den)
                    }
                    BinOp::Div => {
                        let num = match rd {
                            None => ln,
                            Some(rd) => mul(b, &mut emitted, ln, rd),
                        };
                        let den = match ld {
                            None => rn,
                            Some(ld) => mul(b, &mut emitted, ld, rn),
                        };
                        (num, Some(den))
                    }
                    BinOp::Add | BinOp::Sub => {
                        let a = match rd {
                            None => ln,
                            Some(rd) => mul(b, &mut emitted, ln, rd),
                        };
                        let c = match ld {
                            None => rn,
                            Some(ld) => mul(b, &mut emitted, rn, ld),
                        };
                        let num = b.alloc(Node::Bin { op, lhs: a, rhs: c, next: DUMMY });
                        emitted.push(num);
                        let den = opt_mul(b, &mut emitted, ld, rd);
                        (num, den)
                    }
                };
                map.insert(id, pair);
                chain_then(b, map, emitted, t, next)
            }
            Node::Branch { test, eq, neq } => {
                // The pair value is zero exactly when its numerator is,
                // wherever the original denominator was nonzero.
                let nid = b.alloc(Node::Branch { test: map[&test].0, eq: DUMMY, neq: DUMMY });
                let e = go(t, eq, b, map);
                let q = go(t, neq, b, map);
                b.link_branch(nid, e, q);
                nid
            }
            Node::Leaf { label } => b.leaf(label),
        }
    }

    let root = go(t, t.root(), &mut b, &mut map);
    let rewritten = b.finish(root)?;
    // Stranded denominator products feed no decision; splice them so the
    // pruned-tree conditions survive the pass.
    splice_dead_computations(&rewritten)
}

/// Dataflow half of pruning: splices out computations whose value never
/// reaches a branch test. A branch-free tree collapses to its single leaf.
/// Dropping a dead division can only extend the evaluation domain.
fn splice_dead_computations(t: &DecisionTree) -> Result<DecisionTree, TreeError> {
    let n = t.num_nodes();
    if !(0..n).any(|i| matches!(t.node(i), Node::Branch { .. })) {
        let label = t.generic_path().label.expect("paths end at leaves");
        return DecisionTree::from_nodes(vec![Node::Leaf { label }], 0);
    }
    // A computation is live when some branch test depends on it.
    let mut live = vec![false; n];
    let mut work: Vec<NodeId> = (0..n)
        .filter(|&i| matches!(t.node(i), Node::Branch { .. }))
        .flat_map(|i| t.node(i).operands())
        .collect();
    while let Some(id) = work.pop() {
        if !live[id] {
            live[id] = true;
            work.extend(t.node(id).operands());
        }
    }
    let mut b = TreeBuilder::new();
    let mut map: HashMap<NodeId, NodeId> = HashMap::new();

    fn go(
        t: &DecisionTree,
        id: NodeId,
        b: &mut TreeBuilder,
        map: &mut HashMap<NodeId, NodeId>,
        live: &[bool],
    ) -> NodeId {
        match *t.node(id) {
            Node::Branch { test, eq, neq } => {
                let nid = b.alloc(Node::Branch { test: map[&test], eq: DUMMY, neq: DUMMY });
                let e = go(t, eq, b, map, live);
                let q = go(t, neq, b, map, live);
                b.link_branch(nid, e, q);
                nid
            }
            Node::Leaf { label } => b.leaf(label),
            ref node => {
                let next = node.next().expect("computation has next");
                // The input stays as the structural root even when no test
                // depends on it.
                if !live[id] && id != t.root() {
                    return go(t, next, b, map, live);
                }
                let nid = match *node {
                    Node::Input { .. } => b.alloc(Node::Input { next: DUMMY }),
                    Node::Const { value, .. } => b.alloc(Node::Const { value, next: DUMMY }),
                    Node::Scale { coeff, src, .. } => {
                        b.alloc(Node::Scale { coeff, src: map[&src], next: DUMMY })
                    }
                    Node::Bin { op, lhs, rhs, .. } => {
                        b.alloc(Node::Bin { op, lhs: map[&lhs], rhs: map[&rhs], next: DUMMY })
                    }
                    _ => unreachable!(),
                };
                map.insert(id, nid);
                let c = go(t, next, b, map, live);
                b.link_next(nid, c);
                nid
            }
        }
    }

    let root = go(t, t.root(), &mut b, &mut map, &live);
    b.finish(root)
}

// ---------------------------------------------------------------------------
// Retraction
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fork {
    Eq,
    Neq,
}

/// Decision polynomial over the two values tested inside a retractable
/// segment. `FermatNu`/`FermatMu` stand for the (q-1)-th powers.
#[derive(Debug, Clone)]
pub enum DecisionExpr {
    Nu,
    Mu,
    One,
    FermatNu,
    FermatMu,
    Add(Box<DecisionExpr>, Box<DecisionExpr>),
    Sub(Box<DecisionExpr>, Box<DecisionExpr>),
    Mul(Box<DecisionExpr>, Box<DecisionExpr>),
}

impl DecisionExpr {
    pub fn eval(&self, ctx: &FieldCtx, u_nu: FieldElement, u_mu: FieldElement) -> FieldElement {
        match self {
            DecisionExpr::Nu => u_nu,
            DecisionExpr::Mu => u_mu,
            DecisionExpr::One => ctx.one(),
            DecisionExpr::FermatNu => ctx.pow(u_nu, ctx.order() - 1),
            DecisionExpr::FermatMu => ctx.pow(u_mu, ctx.order() - 1),
            DecisionExpr::Add(a, b) => ctx.add(a.eval(ctx, u_nu, u_mu), b.eval(ctx, u_nu, u_mu)),
            DecisionExpr::Sub(a, b) => ctx.sub(a.eval(ctx, u_nu, u_mu), b.eval(ctx, u_nu, u_mu)),
            DecisionExpr::Mul(a, b) => ctx.mul(a.eval(ctx, u_nu, u_mu), b.eval(ctx, u_nu, u_mu)),
        }
    }
}

fn e_one() -> DecisionExpr {
    DecisionExpr::One
}
fn e_sub(a: DecisionExpr, b: DecisionExpr) -> DecisionExpr {
    DecisionExpr::Sub(Box::new(a), Box::new(b))
}
fn e_add(a: DecisionExpr, b: DecisionExpr) -> DecisionExpr {
    DecisionExpr::Add(Box::new(a), Box::new(b))
}
fn e_mul(a: DecisionExpr, b: DecisionExpr) -> DecisionExpr {
    DecisionExpr::Mul(Box::new(a), Box::new(b))
}

/// One-decision-below-another segment: the second decision mu hangs off one
/// fork of nu, the In-labeled leaf of mu sits on `mu_fork`, and the other
/// fork of nu ends at a leaf labeled `lambda2`. The row's polynomial is zero
/// exactly on the inputs the segment sends to an In leaf.
#[derive(Debug, Clone, Copy)]
pub struct CaseOneRow {
    pub lambda2: Label,
    /// Fork of nu on the path to mu.
    pub nu_fork: Fork,
    /// Fork of mu holding the In leaf.
    pub mu_fork: Fork,
}

pub fn case_one_expr(row: CaseOneRow) -> DecisionExpr {
    use DecisionExpr::{FermatMu as PM, FermatNu as PN, Mu, Nu};
    match (row.lambda2, row.nu_fork, row.mu_fork) {
        (Label::In, Fork::Eq, Fork::Eq) => e_mul(e_sub(e_one(), PN), Mu),
        (Label::In, Fork::Eq, Fork::Neq) => e_mul(e_sub(e_one(), PN), e_sub(e_one(), PM)),
        (Label::In, Fork::Neq, Fork::Eq) => e_mul(Mu, Nu),
        (Label::In, Fork::Neq, Fork::Neq) => e_mul(e_sub(e_one(), PM), Nu),
        (Label::Out, Fork::Eq, Fork::Eq) => {
            e_sub(e_one(), e_mul(e_sub(e_one(), PN), e_sub(e_one(), PM)))
        }
        (Label::Out, Fork::Eq, Fork::Neq) => e_sub(e_one(), e_mul(e_sub(e_one(), PN), PM)),
        (Label::Out, Fork::Neq, Fork::Eq) => e_sub(e_one(), e_mul(e_sub(e_one(), PM), PN)),
        (Label::Out, Fork::Neq, Fork::Neq) => e_sub(e_one(), e_mul(PN, PM)),
    }
}

/// What the segment answers for one value combination.
pub fn case_one_segment_label(row: CaseOneRow, u_nu_zero: bool, u_mu_zero: bool) -> Label {
    let to_mu = match row.nu_fork {
        Fork::Eq => u_nu_zero,
        Fork::Neq => !u_nu_zero,
    };
    if !to_mu {
        return row.lambda2;
    }
    let to_in = match row.mu_fork {
        Fork::Eq => u_mu_zero,
        Fork::Neq => !u_mu_zero,
    };
    if to_in {
        Label::In
    } else {
        Label::Out
    }
}

/// Both forks of nu end at decisions testing one shared value; the four
/// leaves are labeled by (nu fork, second-level fork) in the order
/// (eq,eq), (eq,neq), (neq,eq), (neq,neq).
pub fn case_two_expr(pattern: [Label; 4]) -> Option<DecisionExpr> {
    use DecisionExpr::{FermatMu as PM, FermatNu as PN, Mu, Nu};
    use Label::{In, Out};
    match pattern {
        // In exactly when the shared second-level value is zero.
        [In, Out, In, Out] => Some(e_add(e_mul(e_sub(e_one(), PN), Mu), e_mul(Mu, Nu))),
        // In exactly when one of the two values is zero and the other not.
        [Out, In, In, Out] => Some(e_add(
            e_mul(e_sub(e_one(), PM), e_sub(e_one(), PN)),
            e_mul(Mu, Nu),
        )),
        // In exactly when the two values are both zero or both nonzero.
        [In, Out, Out, In] => Some(e_add(
            e_mul(e_sub(e_one(), PN), Mu),
            e_mul(e_sub(e_one(), PM), Nu),
        )),
        // In exactly when the shared second-level value is nonzero.
        [Out, In, Out, In] => Some(e_add(
            e_mul(e_sub(e_one(), PM), e_sub(e_one(), PN)),
            e_mul(e_sub(e_one(), PM), Nu),
        )),
        _ => None,
    }
}

pub fn case_two_segment_label(pattern: [Label; 4], u_nu_zero: bool, u_mu_zero: bool) -> Label {
    match (u_nu_zero, u_mu_zero) {
        (true, true) => pattern[0],
        (true, false) => pattern[1],
        (false, true) => pattern[2],
        (false, false) => pattern[3],
    }
}

/// A fork walked through its computation run to the first non-computation.
struct ForkView {
    comps: Vec<NodeId>,
    terminal: NodeId,
}

fn fork_view(t: &DecisionTree, start: NodeId) -> ForkView {
    let mut comps = Vec::new();
    let mut cur = start;
    loop {
        match t.node(cur) {
            Node::Branch { .. } | Node::Leaf { .. } => {
                return ForkView { comps, terminal: cur }
            }
            n => {
                comps.push(cur);
                cur = n.next().expect("computation has next");
            }
        }
    }
}

/// Leaf label at the end of a fork, requiring no deeper decisions.
fn fork_leaf_label(t: &DecisionTree, start: NodeId) -> Option<Label> {
    let view = fork_view(t, start);
    match *t.node(view.terminal) {
        Node::Leaf { label } => Some(label),
        _ => None,
    }
}

/// Second-level decision summary: the branch, its tested value and its two
/// terminal leaf labels.
struct SecondLevel {
    comps: Vec<NodeId>,
    test: NodeId,
    eq_label: Label,
    neq_label: Label,
}

fn second_level(t: &DecisionTree, view: ForkView) -> Result<SecondLevel, String> {
    let Node::Branch { test, eq, neq } = *t.node(view.terminal) else {
        return Err("expected a decision at the end of the fork".to_string());
    };
    let eq_label =
        fork_leaf_label(t, eq).ok_or("a decision deeper than the segment".to_string())?;
    let neq_label =
        fork_leaf_label(t, neq).ok_or("a decision deeper than the segment".to_string())?;
    Ok(SecondLevel {
        comps: view.comps,
        test,
        eq_label,
        neq_label,
    })
}

enum Shape {
    /// One fork reaches a decision, the other a leaf.
    One {
        mu: SecondLevel,
        nu_fork: Fork,
        lambda2: Label,
    },
    /// Both forks reach decisions.
    Two { eq: SecondLevel, neq: SecondLevel },
}

fn segment_shape(t: &DecisionTree, nu: NodeId) -> Result<Shape, String> {
    let Node::Branch { eq, neq, .. } = *t.node(nu) else {
        return Err("retraction site is not a decision node".to_string());
    };
    let ve = fork_view(t, eq);
    let vn = fork_view(t, neq);
    let is_branch = |v: &ForkView| matches!(t.node(v.terminal), Node::Branch { .. });
    match (is_branch(&ve), is_branch(&vn)) {
        (true, false) => Ok(Shape::One {
            mu: second_level(t, ve)?,
            nu_fork: Fork::Eq,
            lambda2: fork_leaf_label(t, neq).expect("terminal is a leaf"),
        }),
        (false, true) => Ok(Shape::One {
            mu: second_level(t, vn)?,
            nu_fork: Fork::Neq,
            lambda2: fork_leaf_label(t, eq).expect("terminal is a leaf"),
        }),
        (true, true) => Ok(Shape::Two {
            eq: second_level(t, ve)?,
            neq: second_level(t, vn)?,
        }),
        (false, false) => Err("both forks end at leaves; nothing to retract".to_string()),
    }
}

/// Replaces the segment below an off-generic-path decision node by a run of
/// computations and a single decision, per the two tabulated segment shapes.
/// Fails when the segment matches neither shape (use [`reduce_width`] for
/// the general construction with fallback).
pub fn retract(
    t: &DecisionTree,
    nu: NodeId,
    ctx: &FieldCtx,
) -> Result<DecisionTree, TreeError> {
    if t.has_division() {
        let div = (0..t.num_nodes())
            .find(|&i| matches!(t.node(i), Node::Bin { op: BinOp::Div, .. }))
            .unwrap();
        return Err(TreeError::HasDivision(div));
    }
    let offsets = t.branch_offsets();
    match offsets.get(nu).copied().flatten() {
        Some(k) if k >= 1 => {}
        _ => {
            return Err(TreeError::Retract {
                node: nu,
                msg: "site must be a decision node off the generic path".to_string(),
            })
        }
    }
    let plan = plan_verbatim(t, nu).map_err(|msg| TreeError::Retract { node: nu, msg })?;
    apply_replacement(t, nu, ctx, &plan)
}

/// How one retraction site will be rewritten.
enum Plan {
    /// Tabulated decision polynomial over (nu test, mu test).
    Verbatim {
        expr: DecisionExpr,
        nu_test: NodeId,
        mu_test: NodeId,
        /// Computation run re-emitted ahead of the polynomial (the support
        /// of mu's test below nu).
        chain: Vec<NodeId>,
    },
    /// Interpolated side forms; `convention` tells which leaf the zero
    /// outcome maps to.
    Fallback {
        eq_side: SideSpec,
        neq_side: SideSpec,
        nu_test: NodeId,
        convention: ZeroMeans,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ZeroMeans {
    In,
    Out,
}

/// What one fork of the site decides, as a function of at most one value.
#[derive(Clone)]
struct SideSpec {
    form: SideForm,
    /// Tested node and its support run below the site, when the form
    /// depends on a value.
    value: Option<(NodeId, Vec<NodeId>)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum SideForm {
    AlwaysIn,
    NeverIn,
    InIffZero,
    InIffNonzero,
}

fn side_form(eq_label: Label, neq_label: Label) -> SideForm {
    match (eq_label, neq_label) {
        (Label::In, Label::In) => SideForm::AlwaysIn,
        (Label::Out, Label::Out) => SideForm::NeverIn,
        (Label::In, Label::Out) => SideForm::InIffZero,
        (Label::Out, Label::In) => SideForm::InIffNonzero,
    }
}

/// Nodes of `comps` (in order) that feed `target`, directly or transitively.
fn chain_support(t: &DecisionTree, comps: &[NodeId], target: NodeId) -> Vec<NodeId> {
    let mut needed: Vec<NodeId> = vec![target];
    let mut support = Vec::new();
    for &id in comps.iter().rev() {
        if needed.contains(&id) {
            support.push(id);
            needed.extend(t.node(id).operands());
        }
    }
    support.reverse();
    support
}

fn plan_verbatim(t: &DecisionTree, nu: NodeId) -> Result<Plan, String> {
    let Node::Branch { test: nu_test, .. } = *t.node(nu) else {
        return Err("site is not a decision node".to_string());
    };
    match segment_shape(t, nu)? {
        Shape::One { mu, nu_fork, lambda2 } => {
            if mu.eq_label == mu.neq_label {
                return Err(format!(
                    "second-level leaves share the label {}",
                    mu.eq_label
                ));
            }
            let mu_fork = if mu.eq_label == Label::In { Fork::Eq } else { Fork::Neq };
            let row = CaseOneRow { lambda2, nu_fork, mu_fork };
            let chain = chain_support(t, &mu.comps, mu.test);
            Ok(Plan::Verbatim {
                expr: case_one_expr(row),
                nu_test,
                mu_test: mu.test,
                chain,
            })
        }
        Shape::Two { eq, neq } => {
            if eq.eq_label == eq.neq_label || neq.eq_label == neq.neq_label {
                return Err("a second-level decision has equal leaf labels".to_string());
            }
            if eq.test != neq.test {
                return Err("second-level decisions test different values".to_string());
            }
            if !eq.comps.is_empty() || !neq.comps.is_empty() {
                // The shared value is an ancestor of the site, so any run of
                // computations between the site and the decisions is dead
                // weight; dropping it is handled by the fallback path.
                let all_dead = chain_support(t, &eq.comps, eq.test).is_empty()
                    && chain_support(t, &neq.comps, neq.test).is_empty();
                if !all_dead {
                    return Err("second-level test computed inside the segment".to_string());
                }
            }
            let pattern = [eq.eq_label, eq.neq_label, neq.eq_label, neq.neq_label];
            let expr = case_two_expr(pattern)
                .expect("all opposite-label patterns are tabulated");
            Ok(Plan::Verbatim {
                expr,
                nu_test,
                mu_test: eq.test,
                chain: Vec::new(),
            })
        }
    }
}

fn plan_fallback(t: &DecisionTree, nu: NodeId) -> Result<Plan, String> {
    let Node::Branch { test: nu_test, .. } = *t.node(nu) else {
        return Err("site is not a decision node".to_string());
    };
    let side_of_level = |lvl: &SecondLevel| -> SideSpec {
        let form = side_form(lvl.eq_label, lvl.neq_label);
        let value = match form {
            SideForm::AlwaysIn | SideForm::NeverIn => None,
            _ => Some((lvl.test, chain_support(t, &lvl.comps, lvl.test))),
        };
        SideSpec { form, value }
    };
    let side_of_leaf = |label: Label| -> SideSpec {
        SideSpec {
            form: match label {
                Label::In => SideForm::AlwaysIn,
                Label::Out => SideForm::NeverIn,
            },
            value: None,
        }
    };
    let (eq_side, neq_side) = match segment_shape(t, nu)? {
        Shape::One { mu, nu_fork, lambda2 } => {
            let mu_side = side_of_level(&mu);
            let leaf_side = side_of_leaf(lambda2);
            match nu_fork {
                Fork::Eq => (mu_side, leaf_side),
                Fork::Neq => (leaf_side, mu_side),
            }
        }
        Shape::Two { eq, neq } => (side_of_level(&eq), side_of_level(&neq)),
    };
    // Pick the leaf convention that emits fewer nodes: the expensive form is
    // the Fermat power, and the two conventions dualize the forms.
    let cost = |conv: ZeroMeans, side: &SideSpec| -> usize {
        match effective_form(conv, side.form) {
            SideForm::AlwaysIn | SideForm::NeverIn => 1,
            SideForm::InIffZero => 0,
            SideForm::InIffNonzero => 8, // power chain dominates
        }
    };
    let convention = if cost(ZeroMeans::In, &eq_side) + cost(ZeroMeans::In, &neq_side)
        <= cost(ZeroMeans::Out, &eq_side) + cost(ZeroMeans::Out, &neq_side)
    {
        ZeroMeans::In
    } else {
        ZeroMeans::Out
    };
    Ok(Plan::Fallback { eq_side, neq_side, nu_test, convention })
}

/// The form whose zero set the emitted polynomial must realize under the
/// chosen convention.
fn effective_form(conv: ZeroMeans, form: SideForm) -> SideForm {
    match conv {
        ZeroMeans::In => form,
        ZeroMeans::Out => match form {
            SideForm::AlwaysIn => SideForm::NeverIn,
            SideForm::NeverIn => SideForm::AlwaysIn,
            SideForm::InIffZero => SideForm::InIffNonzero,
            SideForm::InIffNonzero => SideForm::InIffZero,
        },
    }
}

/// Value produced while emitting a replacement run: either a known constant
/// (not yet materialized) or an emitted node.
#[derive(Clone, Copy)]
enum Val {
    Const(FieldElement),
    Node(NodeId),
}

/// Emits a straight computation run; constants fold and the unit constant is
/// cached so each segment materializes it at most once.
struct RunEmitter<'a> {
    ctx: &'a FieldCtx,
    b: &'a mut TreeBuilder,
    emitted: Vec<NodeId>,
    one_node: Option<NodeId>,
    pow_cache: HashMap<NodeId, NodeId>,
}

impl<'a> RunEmitter<'a> {
    fn new(ctx: &'a FieldCtx, b: &'a mut TreeBuilder) -> RunEmitter<'a> {
        RunEmitter { ctx, b, emitted: Vec::new(), one_node: None, pow_cache: HashMap::new() }
    }

    fn comp(&mut self, node: Node) -> NodeId {
        let id = self.b.alloc(node);
        self.emitted.push(id);
        id
    }

    fn materialize(&mut self, v: Val) -> NodeId {
        match v {
            Val::Node(id) => id,
            Val::Const(c) => {
                if c == self.ctx.one() {
                    if let Some(id) = self.one_node {
                        return id;
                    }
                    let id = self.comp(Node::Const { value: c, next: DUMMY });
                    self.one_node = Some(id);
                    id
                } else {
                    self.comp(Node::Const { value: c, next: DUMMY })
                }
            }
        }
    }

    fn bin(&mut self, op: BinOp, a: Val, b: Val) -> Val {
        let ctx = self.ctx;
        match (a, b) {
            (Val::Const(x), Val::Const(y)) => Val::Const(match op {
                BinOp::Add => ctx.add(x, y),
                BinOp::Sub => ctx.sub(x, y),
                BinOp::Mul => ctx.mul(x, y),
                BinOp::Div => unreachable!("no division is emitted"),
            }),
            _ => {
                // Identity folds that keep segments lean.
                match (op, a, b) {
                    (BinOp::Mul, Val::Const(c), v) | (BinOp::Mul, v, Val::Const(c)) => {
                        if c.is_zero() {
                            return Val::Const(ctx.zero());
                        }
                        if c == ctx.one() {
                            return v;
                        }
                        let src = self.materialize(v);
                        return Val::Node(self.comp(Node::Scale { coeff: c, src, next: DUMMY }));
                    }
                    (BinOp::Add, Val::Const(c), v) | (BinOp::Add, v, Val::Const(c))
                        if c.is_zero() =>
                    {
                        return v;
                    }
                    (BinOp::Sub, v, Val::Const(c)) if c.is_zero() => return v,
                    _ => {}
                }
                let lhs = self.materialize(a);
                let rhs = self.materialize(b);
                Val::Node(self.comp(Node::Bin { op, lhs, rhs, next: DUMMY }))
            }
        }
    }

    /// Square-and-multiply power of an already-emitted value.
    fn pow(&mut self, base: NodeId, e: u64) -> NodeId {
        if e == 1 {
            return base;
        }
        if let Some(&hit) = self.pow_cache.get(&base) {
            return hit;
        }
        let bits = 64 - e.leading_zeros();
        let mut acc = base;
        for i in (0..bits - 1).rev() {
            acc = self.comp(Node::Bin { op: BinOp::Mul, lhs: acc, rhs: acc, next: DUMMY });
            if (e >> i) & 1 == 1 {
                acc = self.comp(Node::Bin { op: BinOp::Mul, lhs: acc, rhs: base, next: DUMMY });
            }
        }
        self.pow_cache.insert(base, acc);
        acc
    }

    fn expr(&mut self, e: &DecisionExpr, nu: NodeId, mu: NodeId) -> Val {
        let qm1 = self.ctx.order() - 1;
        match e {
            DecisionExpr::Nu => Val::Node(nu),
            DecisionExpr::Mu => Val::Node(mu),
            DecisionExpr::One => Val::Const(self.ctx.one()),
            DecisionExpr::FermatNu => Val::Node(self.pow(nu, qm1)),
            DecisionExpr::FermatMu => Val::Node(self.pow(mu, qm1)),
            DecisionExpr::Add(a, b) => {
                let (x, y) = (self.expr(a, nu, mu), self.expr(b, nu, mu));
                self.bin(BinOp::Add, x, y)
            }
            DecisionExpr::Sub(a, b) => {
                let (x, y) = (self.expr(a, nu, mu), self.expr(b, nu, mu));
                self.bin(BinOp::Sub, x, y)
            }
            DecisionExpr::Mul(a, b) => {
                let (x, y) = (self.expr(a, nu, mu), self.expr(b, nu, mu));
                self.bin(BinOp::Mul, x, y)
            }
        }
    }

    /// The chosen side form as a value with the convention's zero meaning.
    fn side_poly(&mut self, form: SideForm, value: Option<NodeId>) -> Val {
        let qm1 = self.ctx.order() - 1;
        match form {
            SideForm::AlwaysIn => Val::Const(self.ctx.zero()),
            SideForm::NeverIn => Val::Const(self.ctx.one()),
            SideForm::InIffZero => Val::Node(value.expect("form depends on a value")),
            SideForm::InIffNonzero => {
                let p = self.pow(value.expect("form depends on a value"), qm1);
                self.bin(BinOp::Sub, Val::Const(self.ctx.one()), Val::Node(p))
            }
        }
    }
}

/// Rebuilds the tree with the planned replacement at `site`.
fn apply_replacement(
    t: &DecisionTree,
    site: NodeId,
    ctx: &FieldCtx,
    plan: &Plan,
) -> Result<DecisionTree, TreeError> {
    let mut b = TreeBuilder::new();
    let mut map: HashMap<NodeId, NodeId> = HashMap::new();

    fn re_emit_chain(
        t: &DecisionTree,
        chain: &[NodeId],
        run: &mut RunEmitter<'_>,
        map: &mut HashMap<NodeId, NodeId>,
    ) {
        for &id in chain {
            let nid = match *t.node(id) {
                Node::Const { value, .. } => run.comp(Node::Const { value, next: DUMMY }),
                Node::Scale { coeff, src, .. } => {
                    let src = map[&src];
                    run.comp(Node::Scale { coeff, src, next: DUMMY })
                }
                Node::Bin { op, lhs, rhs, .. } => {
                    let (lhs, rhs) = (map[&lhs], map[&rhs]);
                    run.comp(Node::Bin { op, lhs, rhs, next: DUMMY })
                }
                _ => unreachable!("chains contain only computations"),
            };
            map.insert(id, nid);
        }
    }

    fn emit_site(
        t: &DecisionTree,
        ctx: &FieldCtx,
        plan: &Plan,
        b: &mut TreeBuilder,
        map: &mut HashMap<NodeId, NodeId>,
    ) -> NodeId {
        let mut run = RunEmitter::new(ctx, b);
        let (test_val, zero_label) = match plan {
            Plan::Verbatim { expr, nu_test, mu_test, chain } => {
                re_emit_chain(t, chain, &mut run, map);
                let nu = map[nu_test];
                let mu = map[mu_test];
                (run.expr(expr, nu, mu), Label::In)
            }
            Plan::Fallback { eq_side, neq_side, nu_test, convention } => {
                let side_val = |run: &mut RunEmitter<'_>,
                                    map: &mut HashMap<NodeId, NodeId>,
                                    side: &SideSpec|
                 -> Val {
                    let value = side.value.as_ref().map(|(test, chain)| {
                        re_emit_chain(t, chain, run, map);
                        map[test]
                    });
                    run.side_poly(effective_form(*convention, side.form), value)
                };
                let ge = side_val(&mut run, map, eq_side);
                let gn = side_val(&mut run, map, neq_side);
                // z = ge + s^(q-1) * (gn - ge); at s = 0 the eq side's
                // polynomial answers, otherwise the neq side's.
                let z = match (ge, gn) {
                    (Val::Const(a), Val::Const(b)) if a == b => Val::Const(a),
                    _ => {
                        let s = run.pow(map[nu_test], ctx.order() - 1);
                        let d = run.bin(BinOp::Sub, gn, ge);
                        let sd = run.bin(BinOp::Mul, Val::Node(s), d);
                        run.bin(BinOp::Add, ge, sd)
                    }
                };
                let zero_label = match convention {
                    ZeroMeans::In => Label::In,
                    ZeroMeans::Out => Label::Out,
                };
                (z, zero_label)
            }
        };
        let test = run.materialize(test_val);
        let emitted = std::mem::take(&mut run.emitted);
        let xi = b.alloc(Node::Branch { test, eq: DUMMY, neq: DUMMY });
        let leaf_eq = b.leaf(zero_label);
        let leaf_neq = b.leaf(zero_label.opposite());
        b.link_branch(xi, leaf_eq, leaf_neq);
        // Wire the run front to back, ending at the new decision.
        let mut cur = xi;
        for &id in emitted.iter().rev() {
            b.link_next(id, cur);
            cur = id;
        }
        cur
    }

    fn go(
        t: &DecisionTree,
        id: NodeId,
        site: NodeId,
        ctx: &FieldCtx,
        plan: &Plan,
        b: &mut TreeBuilder,
        map: &mut HashMap<NodeId, NodeId>,
    ) -> NodeId {
        if id == site {
            return emit_site(t, ctx, plan, b, map);
        }
        match *t.node(id) {
            Node::Branch { test, eq, neq } => {
                let nid = b.alloc(Node::Branch { test: map[&test], eq: DUMMY, neq: DUMMY });
                let e = go(t, eq, site, ctx, plan, b, map);
                let q = go(t, neq, site, ctx, plan, b, map);
                b.link_branch(nid, e, q);
                nid
            }
            Node::Leaf { label } => b.leaf(label),
            ref node => {
                let next = node.next().expect("computation has next");
                let nid = match *node {
                    Node::Input { .. } => b.alloc(Node::Input { next: DUMMY }),
                    Node::Const { value, .. } => b.alloc(Node::Const { value, next: DUMMY }),
                    Node::Scale { coeff, src, .. } => {
                        b.alloc(Node::Scale { coeff, src: map[&src], next: DUMMY })
                    }
                    Node::Bin { op, lhs, rhs, .. } => {
                        b.alloc(Node::Bin { op, lhs: map[&lhs], rhs: map[&rhs], next: DUMMY })
                    }
                    _ => unreachable!(),
                };
                map.insert(id, nid);
                let c = go(t, next, site, ctx, plan, b, map);
                b.link_next(nid, c);
                nid
            }
        }
    }

    let root = go(t, t.root(), site, ctx, plan, &mut b, &mut map);
    b.finish(root)
}

// ---------------------------------------------------------------------------
// Width reduction
// ---------------------------------------------------------------------------

/// Per-round record of one width-reduction sweep.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoundStats {
    pub width_before: usize,
    pub width_after: usize,
    pub size_before: usize,
    pub size_after: usize,
    /// 6 * ceil(log2 q), the permitted per-round size growth.
    pub growth_limit: usize,
    pub retracts: usize,
    pub fallbacks: usize,
}

/// Retracts at every maximal-offset site until the tree has width <= 1.
/// Each round removes exactly one level of off-path decisions and may grow
/// the longest path by at most 6*ceil(log2 q); otherwise an internal error
/// is returned. The input must be division free and should be pruned.
pub fn reduce_width(
    t: &DecisionTree,
    ctx: &FieldCtx,
) -> Result<(DecisionTree, Vec<RoundStats>), TreeError> {
    if t.has_division() {
        let div = (0..t.num_nodes())
            .find(|&i| matches!(t.node(i), Node::Bin { op: BinOp::Div, .. }))
            .unwrap();
        return Err(TreeError::HasDivision(div));
    }
    let mut cur = t.clone();
    let mut rounds = Vec::new();
    let growth_limit = 6 * ctx.log2_order() as usize;
    while cur.width() > 1 {
        let width_before = cur.width();
        let size_before = cur.size();
        let mut retracts = 0;
        let mut fallbacks = 0;
        while cur.width() == width_before {
            let site = find_site(&cur, width_before).ok_or_else(|| {
                TreeError::Internal("width > 1 but no retraction site found".to_string())
            })?;
            let (next, used_fallback) = retract_with_fallback(&cur, site, ctx)?;
            retracts += 1;
            fallbacks += usize::from(used_fallback);
            cur = next;
        }
        let stats = RoundStats {
            width_before,
            width_after: cur.width(),
            size_before,
            size_after: cur.size(),
            growth_limit,
            retracts,
            fallbacks,
        };
        if stats.width_after != width_before - 1 {
            return Err(TreeError::Internal(format!(
                "round changed width {} -> {}",
                width_before, stats.width_after
            )));
        }
        if stats.size_after > size_before + growth_limit {
            return Err(TreeError::Internal(format!(
                "round grew size {} -> {} past limit +{}",
                size_before, stats.size_after, growth_limit
            )));
        }
        rounds.push(stats);
    }
    Ok((cur, rounds))
}

/// First (in emission preorder) decision at offset width-1 with a decision
/// directly below it.
fn find_site(t: &DecisionTree, width: usize) -> Option<NodeId> {
    let offsets = t.branch_offsets();
    fn preorder(t: &DecisionTree, id: NodeId, out: &mut Vec<NodeId>) {
        out.push(id);
        match *t.node(id) {
            Node::Branch { eq, neq, .. } => {
                preorder(t, eq, out);
                preorder(t, neq, out);
            }
            Node::Leaf { .. } => {}
            ref n => preorder(t, n.next().expect("computation has next"), out),
        }
    }
    let mut order = Vec::new();
    preorder(t, t.root(), &mut order);
    order.into_iter().find(|&id| {
        if offsets[id] != Some(width - 1) {
            return false;
        }
        let Node::Branch { eq, neq, .. } = *t.node(id) else {
            return false;
        };
        let is_branch =
            |start| matches!(t.node(fork_view(t, start).terminal), Node::Branch { .. });
        is_branch(eq) || is_branch(neq)
    })
}

fn retract_with_fallback(
    t: &DecisionTree,
    site: NodeId,
    ctx: &FieldCtx,
) -> Result<(DecisionTree, bool), TreeError> {
    match plan_verbatim(t, site) {
        Ok(plan) => Ok((apply_replacement(t, site, ctx, &plan)?, false)),
        Err(_) => {
            let plan = plan_fallback(t, site)
                .map_err(|msg| TreeError::Retract { node: site, msg })?;
            Ok((apply_replacement(t, site, ctx, &plan)?, true))
        }
    }
}
