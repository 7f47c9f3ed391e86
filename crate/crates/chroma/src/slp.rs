//! Straight-line programs over GF(p^n) counting only nonscalar
//! multiplications.
//!
//! A computation sequence starts from g_0 = x; every step multiplies two
//! affine combinations of earlier entries (an implicit constant-1 slot is
//! free, as are additions and scalar factors), and the output is an affine
//! combination of all entries. The sequence length L is the number of
//! steps.
//!
//! Builders: [`build_power`] (binary powering), [`compile_tree`] (the
//! characteristic polynomial of a width <= 1 decision tree through its
//! Fermat-power leaf indicators) and [`paterson_stockmeyer`]
//! (baby-step/giant-step evaluation of an arbitrary polynomial).
//! [`full_pipeline`] chains the tree rewrites and both builders and checks
//! the 24 * ceil(log2 q) * size bound.

use std::collections::HashMap;

use thiserror::Error;

use crate::field::{FieldCtx, FieldElement};
use crate::poly::Poly;
use crate::tree::charpoly::{
    agreement, char_poly_normalized, char_poly_oracle, char_poly_verbatim,
};
use crate::tree::rewrite::{eliminate_division, prune, reduce_width, RoundStats};
use crate::tree::{BinOp, DecisionTree, Label, Node, NodeId, TreeError};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SlpError {
    #[error("step {step} references g_{reference}, which is not earlier")]
    BadWiring { step: usize, reference: usize },
    #[error("output references g_{0}, which does not exist")]
    BadOutputWiring(usize),
}

/// Affine combination c_0 + sum c_j * g_j. Terms are kept sorted by index
/// with no zero coefficients.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinComb {
    pub constant: FieldElement,
    pub terms: Vec<(usize, FieldElement)>,
}

impl LinComb {
    fn constant_only(c: FieldElement) -> LinComb {
        LinComb { constant: c, terms: Vec::new() }
    }

    fn single(ctx: &FieldCtx, index: usize) -> LinComb {
        LinComb { constant: ctx.zero(), terms: vec![(index, ctx.one())] }
    }

    fn as_constant(&self) -> Option<FieldElement> {
        self.terms.is_empty().then_some(self.constant)
    }

    fn add_scaled(&self, ctx: &FieldCtx, other: &LinComb, scale: FieldElement) -> LinComb {
        let mut terms = self.terms.clone();
        for &(j, c) in &other.terms {
            let c = ctx.mul(c, scale);
            match terms.binary_search_by_key(&j, |&(k, _)| k) {
                Ok(pos) => {
                    let v = ctx.add(terms[pos].1, c);
                    if v.is_zero() {
                        terms.remove(pos);
                    } else {
                        terms[pos].1 = v;
                    }
                }
                Err(pos) => {
                    if !c.is_zero() {
                        terms.insert(pos, (j, c));
                    }
                }
            }
        }
        LinComb {
            constant: ctx.add(self.constant, ctx.mul(other.constant, scale)),
            terms,
        }
    }

    fn scale(&self, ctx: &FieldCtx, c: FieldElement) -> LinComb {
        if c.is_zero() {
            return LinComb::constant_only(ctx.zero());
        }
        LinComb {
            constant: ctx.mul(self.constant, c),
            terms: self.terms.iter().map(|&(j, a)| (j, ctx.mul(a, c))).collect(),
        }
    }

    fn render(&self) -> String {
        let mut toks = Vec::new();
        if !self.constant.is_zero() {
            toks.push(self.constant.to_string());
        }
        for &(j, c) in &self.terms {
            toks.push(format!("{c}*g{j}"));
        }
        if toks.is_empty() {
            "0".to_string()
        } else {
            toks.join(" ")
        }
    }
}

/// One nonscalar multiplication.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Step {
    pub lhs: LinComb,
    pub rhs: LinComb,
}

/// g_0 = x, steps defining g_1..g_r, and the affine output combination.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComputationSequence {
    pub steps: Vec<Step>,
    pub output: LinComb,
}

/// How [`ComputationSequence::validate`] compares polynomials.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ValidationMode {
    /// Exact identity in F[x].
    Strict,
    /// Equality of functions on F: both sides reduced by x^q = x.
    FunctionModQ,
}

impl ComputationSequence {
    /// The nonscalar multiplication count L.
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Symbolically expands the output as a polynomial in x.
    pub fn expand(&self, ctx: &FieldCtx, mode: ValidationMode) -> Result<Poly, SlpError> {
        let reduce = |p: Poly| match mode {
            ValidationMode::Strict => p,
            ValidationMode::FunctionModQ => p.reduce_mod_xq_minus_x(ctx),
        };
        let mut gs: Vec<Poly> = vec![Poly::x(ctx)];
        for (i, step) in self.steps.iter().enumerate() {
            let step_index = i + 1;
            let expand_comb = |comb: &LinComb| -> Result<Poly, SlpError> {
                let mut acc = Poly::constant(comb.constant);
                for &(j, c) in &comb.terms {
                    if j >= step_index {
                        return Err(SlpError::BadWiring { step: step_index, reference: j });
                    }
                    acc = acc.add(ctx, &gs[j].scale(ctx, c));
                }
                Ok(acc)
            };
            let lhs = expand_comb(&step.lhs)?;
            let rhs = expand_comb(&step.rhs)?;
            gs.push(reduce(lhs.mul(ctx, &rhs)));
        }
        let mut out = Poly::constant(self.output.constant);
        for &(j, c) in &self.output.terms {
            if j >= gs.len() {
                return Err(SlpError::BadOutputWiring(j));
            }
            out = out.add(ctx, &gs[j].scale(ctx, c));
        }
        Ok(reduce(out))
    }

    /// Checks that the sequence computes `f` (strictly or as a function).
    pub fn validate(&self, ctx: &FieldCtx, f: &Poly, mode: ValidationMode) -> Result<bool, SlpError> {
        let target = match mode {
            ValidationMode::Strict => f.clone(),
            ValidationMode::FunctionModQ => f.reduce_mod_xq_minus_x(ctx),
        };
        Ok(self.expand(ctx, mode)? == target)
    }

    /// Text rendering: one `g <i> : (<lhs>) * (<rhs>)` line per step and a
    /// final `out : <f0> (<terms>)` line.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for (i, step) in self.steps.iter().enumerate() {
            out.push_str(&format!(
                "g {} : ({}) * ({})\n",
                i + 1,
                step.lhs.render(),
                step.rhs.render()
            ));
        }
        let terms = if self.output.terms.is_empty() {
            "0".to_string()
        } else {
            self.output
                .terms
                .iter()
                .map(|&(j, c)| format!("{c}*g{j}"))
                .collect::<Vec<_>>()
                .join(" ")
        };
        out.push_str(&format!("out : {} ({})\n", self.output.constant, terms));
        out
    }
}

/// Affine view of a value during construction: a combination of existing
/// entries. Multiplying two non-constant handles emits a step.
#[derive(Debug, Clone)]
pub struct Handle(LinComb);

/// Incremental sequence builder; additions, subtractions and scalar factors
/// are free, multiplications of two non-constant combinations append steps.
pub struct SlpBuilder<'a> {
    ctx: &'a FieldCtx,
    steps: Vec<Step>,
}

impl<'a> SlpBuilder<'a> {
    pub fn new(ctx: &'a FieldCtx) -> SlpBuilder<'a> {
        SlpBuilder { ctx, steps: Vec::new() }
    }

    pub fn input(&self) -> Handle {
        Handle(LinComb::single(self.ctx, 0))
    }

    pub fn constant(&self, c: FieldElement) -> Handle {
        Handle(LinComb::constant_only(c))
    }

    pub fn add(&self, a: &Handle, b: &Handle) -> Handle {
        Handle(a.0.add_scaled(self.ctx, &b.0, self.ctx.one()))
    }

    pub fn sub(&self, a: &Handle, b: &Handle) -> Handle {
        Handle(a.0.add_scaled(self.ctx, &b.0, self.ctx.minus_one()))
    }

    pub fn scale(&self, c: FieldElement, a: &Handle) -> Handle {
        Handle(a.0.scale(self.ctx, c))
    }

    /// One nonscalar multiplication, unless a side is constant (free).
    pub fn mul(&mut self, a: &Handle, b: &Handle) -> Handle {
        if let Some(c) = a.0.as_constant() {
            return self.scale(c, b);
        }
        if let Some(c) = b.0.as_constant() {
            return self.scale(c, a);
        }
        self.steps.push(Step { lhs: a.0.clone(), rhs: b.0.clone() });
        Handle(LinComb::single(self.ctx, self.steps.len()))
    }

    /// Binary square-and-multiply powering: at most 2*floor(log2 e) steps.
    pub fn pow(&mut self, a: &Handle, e: u64) -> Handle {
        if e == 0 {
            return self.constant(self.ctx.one());
        }
        if let Some(c) = a.0.as_constant() {
            return self.constant(self.ctx.pow(c, e));
        }
        let bits = 64 - e.leading_zeros();
        let mut acc = a.clone();
        for i in (0..bits - 1).rev() {
            acc = self.mul(&acc.clone(), &acc);
            if (e >> i) & 1 == 1 {
                acc = self.mul(&acc, a);
            }
        }
        acc
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn finish(self, output: &Handle) -> ComputationSequence {
        ComputationSequence { steps: self.steps, output: output.0.clone() }
    }
}

/// Sequence for x^k by binary powering; L <= 2*floor(log2 k).
pub fn build_power(ctx: &FieldCtx, k: u64) -> ComputationSequence {
    let mut b = SlpBuilder::new(ctx);
    let x = b.input();
    let h = b.pow(&x, k);
    b.finish(&h)
}

/// Complexity verdict for a compiled characteristic polynomial.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexityReport {
    /// Nonscalar multiplications of the best sequence considered.
    pub l: usize,
    /// 24 * ceil(log2 q) * |T| for the stated tree size |T|.
    pub bound: usize,
    pub pass: bool,
    /// sqrt(deg chi) - 1 when chi is nonconstant: the generic lower-bound
    /// reference (not asserted; it applies only off the degenerate locus).
    pub ps_reference: Option<f64>,
}

/// Result of compiling one width <= 1 tree.
#[derive(Debug, Clone)]
pub struct TreeCompilation {
    pub seq: ComputationSequence,
    pub oracle: Poly,
    pub normalized: Poly,
    /// Whether the sequence validates against the oracle mod x^q - x.
    pub valid: bool,
    pub report: ComplexityReport,
}

/// Emits a sequence computing the characteristic polynomial of a width <= 1,
/// division-free tree: tree multiplications become steps, each tested
/// value's Fermat power is built once and shared, and per-leaf indicator
/// factors cost one multiplication each. `original_size` is the |T| the
/// bound is compared against (the tree as given before any rewriting).
pub fn compile_tree(
    t: &DecisionTree,
    ctx: &FieldCtx,
    original_size: usize,
) -> Result<TreeCompilation, TreeError> {
    let width = t.width();
    if width > 1 {
        return Err(TreeError::WidthTooLarge(width));
    }
    let oracle = char_poly_oracle(t, ctx)?;
    let normalized = char_poly_normalized(t, ctx)?;
    let mut b = SlpBuilder::new(ctx);
    let mut values: HashMap<NodeId, Handle> = HashMap::new();
    let mut powers: HashMap<NodeId, Handle> = HashMap::new();

    fn value_handle(
        t: &DecisionTree,
        b: &mut SlpBuilder<'_>,
        values: &mut HashMap<NodeId, Handle>,
        id: NodeId,
    ) -> Result<Handle, TreeError> {
        if let Some(h) = values.get(&id) {
            return Ok(h.clone());
        }
        let h = match *t.node(id) {
            Node::Input { .. } => b.input(),
            Node::Const { value, .. } => b.constant(value),
            Node::Scale { coeff, src, .. } => {
                let s = value_handle(t, b, values, src)?;
                b.scale(coeff, &s)
            }
            Node::Bin { op, lhs, rhs, .. } => {
                let a = value_handle(t, b, values, lhs)?;
                let c = value_handle(t, b, values, rhs)?;
                match op {
                    BinOp::Add => b.add(&a, &c),
                    BinOp::Sub => b.sub(&a, &c),
                    BinOp::Mul => b.mul(&a, &c),
                    BinOp::Div => return Err(TreeError::HasDivision(id)),
                }
            }
            _ => unreachable!("values come from computations"),
        };
        values.insert(id, h.clone());
        Ok(h)
    }

    // Sum the indicator product of every In-leaf's path.
    fn walk(
        t: &DecisionTree,
        ctx: &FieldCtx,
        b: &mut SlpBuilder<'_>,
        values: &mut HashMap<NodeId, Handle>,
        powers: &mut HashMap<NodeId, Handle>,
        id: NodeId,
        acc: Handle,
        out: &mut Handle,
    ) -> Result<(), TreeError> {
        match *t.node(id) {
            Node::Leaf { label } => {
                if label == Label::In {
                    *out = b.add(out, &acc);
                }
                Ok(())
            }
            Node::Branch { test, eq, neq } => {
                let s = match powers.get(&test) {
                    Some(h) => h.clone(),
                    None => {
                        let v = value_handle(t, b, values, test)?;
                        let p = b.pow(&v, ctx.order() - 1);
                        powers.insert(test, p.clone());
                        p
                    }
                };
                let one = b.constant(ctx.one());
                let eq_ind = b.sub(&one, &s);
                let eq_acc = b.mul(&acc, &eq_ind);
                let neq_acc = b.mul(&acc, &s);
                walk(t, ctx, b, values, powers, eq, eq_acc, out)?;
                walk(t, ctx, b, values, powers, neq, neq_acc, out)
            }
            ref n => {
                let next = n.next().expect("computation has next");
                walk(t, ctx, b, values, powers, next, acc, out)
            }
        }
    }

    let one = b.constant(ctx.one());
    let mut out = b.constant(ctx.zero());
    walk(t, ctx, &mut b, &mut values, &mut powers, t.root(), one, &mut out)?;
    let seq = b.finish(&out);
    let valid = seq
        .validate(ctx, &oracle, ValidationMode::FunctionModQ)
        .map_err(|e| TreeError::Internal(e.to_string()))?;
    let l = seq.len();
    let bound = 24 * ctx.log2_order() as usize * original_size;
    let report = ComplexityReport {
        l,
        bound,
        pass: l <= bound,
        ps_reference: oracle
            .degree()
            .filter(|&d| d > 0)
            .map(|d| (d as f64).sqrt() - 1.0),
    };
    Ok(TreeCompilation { seq, oracle, normalized, valid, report })
}

/// Baby-step/giant-step evaluation of f: babies x^2..x^k for
/// k = ceil(sqrt(d+1)), then Horner in y = x^k over the coefficient blocks.
/// L <= 2*ceil(sqrt(d+1)) + ceil(log2 d).
pub fn paterson_stockmeyer(ctx: &FieldCtx, f: &Poly) -> ComputationSequence {
    let mut b = SlpBuilder::new(ctx);
    let d = f.degree().unwrap_or(0);
    if d <= 1 {
        let x = b.input();
        let lin = b.scale(f.coeff(ctx, 1), &x);
        let c = b.constant(f.coeff(ctx, 0));
        let out = b.add(&lin, &c);
        return b.finish(&out);
    }
    let k = (d as f64 + 1.0).sqrt().ceil() as usize;
    let x = b.input();
    let mut powers: Vec<Handle> = vec![b.constant(ctx.one()), x.clone()];
    for _ in 2..=k {
        let next = b.mul(powers.last().unwrap(), &x);
        powers.push(next);
    }
    let y = powers[k].clone();
    let block = |b: &SlpBuilder<'_>, j: usize| -> Handle {
        let mut acc = b.constant(f.coeff(ctx, j * k));
        for i in 1..k {
            let coeff = f.coeff(ctx, j * k + i);
            if !coeff.is_zero() {
                let term = b.scale(coeff, &powers[i]);
                acc = b.add(&acc, &term);
            }
        }
        acc
    };
    let m = (d + 1).div_ceil(k);
    let mut acc = block(&b, m - 1);
    for j in (0..m - 1).rev() {
        let shifted = b.mul(&acc, &y);
        let blk = block(&b, j);
        acc = b.add(&shifted, &blk);
    }
    b.finish(&acc)
}

/// Sizes and width at one pipeline stage.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StageInfo {
    pub name: &'static str,
    pub size: usize,
    pub width: usize,
    pub nodes: usize,
}

/// Full run: prune, eliminate division, reduce width, compile, and compare
/// against the baby-step/giant-step build of the oracle.
#[derive(Debug, Clone)]
pub struct PipelineReport {
    pub stages: Vec<StageInfo>,
    pub rounds: Vec<RoundStats>,
    /// Inputs (by encoding) where the original tree fails to evaluate but
    /// the rewritten tree answers.
    pub domain_extended: Vec<u64>,
    pub oracle: Poly,
    pub verbatim: Poly,
    pub verbatim_agreement: (usize, usize),
    pub normalized: Poly,
    pub tree_seq: ComputationSequence,
    pub ps_seq: ComputationSequence,
    pub l_tree: usize,
    pub l_ps: usize,
    pub report: ComplexityReport,
    pub final_tree: DecisionTree,
}

pub fn full_pipeline(t: &DecisionTree, ctx: &FieldCtx) -> Result<PipelineReport, TreeError> {
    let mut stages = Vec::new();
    let stage = |name: &'static str, t: &DecisionTree| StageInfo {
        name,
        size: t.size(),
        width: t.width(),
        nodes: t.num_nodes(),
    };
    stages.push(stage("original", t));
    let original_size = t.size();
    let pruned = prune(t, ctx)?;
    stages.push(stage("pruned", &pruned));
    let divfree = eliminate_division(&pruned)?;
    stages.push(stage("division-free", &divfree));
    let (reduced, rounds) = reduce_width(&divfree, ctx)?;
    stages.push(stage("width-reduced", &reduced));

    let domain_extended: Vec<u64> = ctx
        .elements()
        .filter(|&x| t.evaluate(ctx, x).is_err() && reduced.evaluate(ctx, x).is_ok())
        .map(|x| x.encoding())
        .collect();

    let compiled = compile_tree(&reduced, ctx, original_size)?;
    if !compiled.valid {
        return Err(TreeError::Internal(
            "compiled sequence does not validate against the oracle".to_string(),
        ));
    }
    let verbatim = char_poly_verbatim(&reduced, ctx)?;
    let verbatim_agreement = agreement(ctx, &verbatim, &compiled.oracle);

    let ps_seq = paterson_stockmeyer(ctx, &compiled.oracle);
    match ps_seq.validate(ctx, &compiled.oracle, ValidationMode::Strict) {
        Ok(true) => {}
        _ => {
            return Err(TreeError::Internal(
                "power-block sequence does not validate".to_string(),
            ))
        }
    }
    let l_tree = compiled.seq.len();
    let l_ps = ps_seq.len();
    let l = l_tree.min(l_ps);
    let report = ComplexityReport {
        l,
        bound: compiled.report.bound,
        pass: l <= compiled.report.bound,
        ps_reference: compiled.report.ps_reference,
    };
    Ok(PipelineReport {
        stages,
        rounds,
        domain_extended,
        oracle: compiled.oracle,
        verbatim,
        verbatim_agreement,
        normalized: compiled.normalized,
        tree_seq: compiled.seq,
        ps_seq,
        l_tree,
        l_ps,
        report,
        final_tree: reduced,
    })
}
