//! Characteristic polynomials of decided sets.
//!
//! Three routes are kept side by side:
//!
//! - [`char_poly_oracle`]: interpolation of the decided-set indicator, the
//!   ground truth (degree < q, values in {0, 1}).
//! - [`char_poly_normalized`]: sum over In-leaves of Fermat-power path
//!   indicators; provably equal to the oracle as a function, and the form
//!   the straight-line compiler emits.
//! - [`char_poly_verbatim`]: the tabulated product formula over the node
//!   classification of a width <= 1 tree. Its leading factor multiplies the
//!   raw tested values, so it is generally not {0,1}-valued; callers get a
//!   point-wise agreement count against the oracle instead of a guarantee.

use crate::field::FieldCtx;
use crate::poly::{interpolate, Poly};
use crate::tree::{DecisionTree, Label, Node, NodeId, TreeError};

/// Node classification of a width <= 1 tree: decisions on the generic path,
/// and off-path decisions keyed by whether their zero or nonzero outcome
/// forces membership, each with its on-path parent decision (computation
/// runs disregarded).
#[derive(Debug, Clone, Default)]
pub struct Classification {
    pub on_path: Vec<NodeId>,
    /// (off-path decision, on-path parent): the eq leaf is labeled In.
    pub zero_implies_in: Vec<(NodeId, NodeId)>,
    /// (off-path decision, on-path parent): only the neq leaf is labeled In.
    pub nonzero_implies_in: Vec<(NodeId, NodeId)>,
    /// Off-path decisions with both leaves labeled Out; no product factor
    /// captures them.
    pub unclassified: Vec<NodeId>,
}

/// Splits the decision nodes of a width <= 1 tree by position and leaf
/// labels.
pub fn classify(t: &DecisionTree, ctx: &FieldCtx) -> Result<Classification, TreeError> {
    let _ = ctx;
    let width = t.width();
    if width > 1 {
        return Err(TreeError::WidthTooLarge(width));
    }
    let mut out = Classification::default();
    let mut cur = t.root();
    loop {
        match *t.node(cur) {
            Node::Branch { eq, neq, .. } => {
                out.on_path.push(cur);
                classify_off_path(t, eq, cur, &mut out)?;
                cur = neq;
            }
            Node::Leaf { .. } => return Ok(out),
            ref n => cur = n.next().expect("computation has next"),
        }
    }
}

fn classify_off_path(
    t: &DecisionTree,
    start: NodeId,
    parent: NodeId,
    out: &mut Classification,
) -> Result<(), TreeError> {
    // Walk the computation run hanging off the eq fork; width <= 1 allows at
    // most one decision there, with leaf-terminated forks.
    let mut cur = start;
    loop {
        match *t.node(cur) {
            Node::Leaf { .. } => return Ok(()),
            Node::Branch { eq, neq, .. } => {
                let leaf_label = |start: NodeId| -> Result<Label, TreeError> {
                    let mut c = start;
                    loop {
                        match *t.node(c) {
                            Node::Leaf { label } => return Ok(label),
                            Node::Branch { .. } => {
                                return Err(TreeError::Internal(
                                    "width <= 1 tree has a second off-path decision".into(),
                                ))
                            }
                            ref n => c = n.next().expect("computation has next"),
                        }
                    }
                };
                let eq_label = leaf_label(eq)?;
                let neq_label = leaf_label(neq)?;
                match (eq_label, neq_label) {
                    (Label::In, _) => out.zero_implies_in.push((cur, parent)),
                    (Label::Out, Label::In) => out.nonzero_implies_in.push((cur, parent)),
                    (Label::Out, Label::Out) => out.unclassified.push(cur),
                }
                return Ok(());
            }
            ref n => cur = n.next().expect("computation has next"),
        }
    }
}

/// Polynomial (in the input, reduced so x^q = x) computed at every node on
/// its root path; None for branches and leaves. Requires a division-free
/// tree.
pub fn symbolic_values(t: &DecisionTree, ctx: &FieldCtx) -> Result<Vec<Option<Poly>>, TreeError> {
    let mut vals: Vec<Option<Poly>> = vec![None; t.num_nodes()];
    let mut stack = vec![t.root()];
    while let Some(id) = stack.pop() {
        match *t.node(id) {
            Node::Input { next } => {
                vals[id] = Some(Poly::x(ctx));
                stack.push(next);
            }
            Node::Const { value, next } => {
                vals[id] = Some(Poly::constant(value));
                stack.push(next);
            }
            Node::Scale { coeff, src, next } => {
                let p = vals[src].as_ref().expect("ancestor computed").scale(ctx, coeff);
                vals[id] = Some(p);
                stack.push(next);
            }
            Node::Bin { op, lhs, rhs, next } => {
                let a = vals[lhs].as_ref().expect("ancestor computed");
                let b = vals[rhs].as_ref().expect("ancestor computed");
                let p = match op {
                    crate::tree::BinOp::Add => a.add(ctx, b),
                    crate::tree::BinOp::Sub => a.sub(ctx, b),
                    crate::tree::BinOp::Mul => a.mul(ctx, b).reduce_mod_xq_minus_x(ctx),
                    crate::tree::BinOp::Div => {
                        return Err(TreeError::HasDivision(id));
                    }
                };
                vals[id] = Some(p);
                stack.push(next);
            }
            Node::Branch { eq, neq, .. } => {
                stack.push(eq);
                stack.push(neq);
            }
            Node::Leaf { .. } => {}
        }
    }
    Ok(vals)
}

fn pow_reduced(ctx: &FieldCtx, p: &Poly, mut e: u64) -> Poly {
    let mut base = p.reduce_mod_xq_minus_x(ctx);
    let mut acc = Poly::one(ctx);
    while e > 0 {
        if e & 1 == 1 {
            acc = acc.mul(ctx, &base).reduce_mod_xq_minus_x(ctx);
        }
        base = base.mul(ctx, &base).reduce_mod_xq_minus_x(ctx);
        e >>= 1;
    }
    acc
}

/// Indicator interpolation of the decided set: the unique degree < q
/// polynomial that is 1 on members and 0 elsewhere. Requires the tree to
/// evaluate on all of F.
pub fn char_poly_oracle(t: &DecisionTree, ctx: &FieldCtx) -> Result<Poly, TreeError> {
    let set = t.decided_set(ctx)?;
    let points: Vec<_> = ctx
        .elements()
        .map(|x| {
            let member = set[x.encoding() as usize];
            (x, if member { ctx.one() } else { ctx.zero() })
        })
        .collect();
    Ok(interpolate(ctx, &points).expect("all field points supplied"))
}

/// The tabulated product over the classification, expanded symbolically and
/// reduced so x^q = x. Compare with the oracle via [`agreement`]; equality
/// is not guaranteed.
pub fn char_poly_verbatim(t: &DecisionTree, ctx: &FieldCtx) -> Result<Poly, TreeError> {
    let c = classify(t, ctx)?;
    let vals = symbolic_values(t, ctx)?;
    let test_poly = |id: NodeId| -> &Poly {
        let Node::Branch { test, .. } = t.node(id) else {
            unreachable!("classification holds branches");
        };
        vals[*test].as_ref().expect("tests are computations")
    };
    let qm1 = ctx.order() - 1;
    let one = Poly::one(ctx);
    let mut chi = one.clone();
    for &d in &c.on_path {
        chi = chi.mul(ctx, test_poly(d)).reduce_mod_xq_minus_x(ctx);
    }
    for &(nu, mu) in &c.zero_implies_in {
        // 1 - (1 - u_nu^(q-1)) * (1 - u_mu^(q-1))
        let a = one.sub(ctx, &pow_reduced(ctx, test_poly(nu), qm1));
        let b = one.sub(ctx, &pow_reduced(ctx, test_poly(mu), qm1));
        let factor = one.sub(ctx, &a.mul(ctx, &b).reduce_mod_xq_minus_x(ctx));
        chi = chi.mul(ctx, &factor).reduce_mod_xq_minus_x(ctx);
    }
    for &(nu, mu) in &c.nonzero_implies_in {
        // 1 - u_nu * (1 - u_mu^(q-1))
        let b = one.sub(ctx, &pow_reduced(ctx, test_poly(mu), qm1));
        let prod = test_poly(nu).mul(ctx, &b).reduce_mod_xq_minus_x(ctx);
        let factor = one.sub(ctx, &prod);
        chi = chi.mul(ctx, &factor).reduce_mod_xq_minus_x(ctx);
    }
    Ok(chi)
}

/// Sum over In-leaves of the Fermat-power indicators of their root paths:
/// (1 - u^(q-1)) for an eq fork, u^(q-1) for a neq fork. Always equal to the
/// oracle as a function on F. Requires a division-free tree (any width).
pub fn char_poly_normalized(t: &DecisionTree, ctx: &FieldCtx) -> Result<Poly, TreeError> {
    let vals = symbolic_values(t, ctx)?;
    let qm1 = ctx.order() - 1;
    let one = Poly::one(ctx);

    fn go(
        t: &DecisionTree,
        ctx: &FieldCtx,
        vals: &[Option<Poly>],
        qm1: u64,
        one: &Poly,
        id: NodeId,
        acc: Poly,
        out: &mut Poly,
    ) {
        match *t.node(id) {
            Node::Leaf { label } => {
                if label == Label::In {
                    *out = out.add(ctx, &acc);
                }
            }
            Node::Branch { test, eq, neq } => {
                let s = pow_reduced(ctx, vals[test].as_ref().expect("computed"), qm1);
                let eq_acc = acc.mul(ctx, &one.sub(ctx, &s)).reduce_mod_xq_minus_x(ctx);
                let neq_acc = acc.mul(ctx, &s).reduce_mod_xq_minus_x(ctx);
                go(t, ctx, vals, qm1, one, eq, eq_acc, out);
                go(t, ctx, vals, qm1, one, neq, neq_acc, out);
            }
            ref n => go(
                t,
                ctx,
                vals,
                qm1,
                one,
                n.next().expect("computation has next"),
                acc,
                out,
            ),
        }
    }

    let mut out = Poly::zero();
    go(t, ctx, &vals, qm1, &one, t.root(), one.clone(), &mut out);
    Ok(out.reduce_mod_xq_minus_x(ctx))
}

/// Point-wise agreement of two polynomials over the whole field:
/// (matching points, field order).
pub fn agreement(ctx: &FieldCtx, a: &Poly, b: &Poly) -> (usize, usize) {
    let matches = ctx
        .elements()
        .filter(|&x| a.eval(ctx, x) == b.eval(ctx, x))
        .count();
    (matches, ctx.order() as usize)
}
