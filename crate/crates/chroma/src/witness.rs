//! Witness polynomials along lines in coloring-array space.
//!
//! A line theta(t) = A + t*B through arrays of shape (|V|, |E|, q-1) projects
//! at each edge assignment alpha to a |V| x |E| matrix over F[t] with
//! degree <= 1 entries. The monic gcd f_alpha of a family of its maximal
//! minors vanishes at t0 exactly where the projected matrix drops rank, so
//! the roots of prod f_alpha locate the points of the line whose underlying
//! array is a member of the coloring variety.
//!
//! Two minor families are kept side by side: `Delta` takes the cofactors on
//! the leading columns (one trailing column swapped in), and `AllMinors`
//! takes every maximal minor. Only the second makes the root-rank
//! equivalence unconditional, so it is the default.

use thiserror::Error;

use crate::coloring::{AlphaMap, ColorArray, ColoringError};
use crate::field::{FieldCtx, FieldElement};
use crate::linalg::PolyMatrix;
use crate::poly::{monic_gcd, Poly};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum WitnessError {
    #[error("line endpoints disagree in shape: {0}")]
    ShapeMismatch(String),
    #[error("witness polynomials require |V| <= |E|, got {vertices} vertices and {edges} edges")]
    TooFewEdges { vertices: usize, edges: usize },
    #[error(transparent)]
    Coloring(#[from] ColoringError),
}

/// Which maximal minors feed the gcd.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MinorMode {
    /// Leading |V|-1 columns plus one trailing column: |E|-|V|+1 minors.
    Delta,
    /// All C(|E|, |V|) maximal minors.
    #[default]
    AllMinors,
}

impl MinorMode {
    pub fn name(self) -> &'static str {
        match self {
            MinorMode::Delta => "delta",
            MinorMode::AllMinors => "all_minors",
        }
    }
}

/// A line t -> base + t * direction in array space.
#[derive(Debug, Clone)]
pub struct ArrayLine {
    base: ColorArray,
    direction: ColorArray,
}

impl ArrayLine {
    pub fn new(base: ColorArray, direction: ColorArray) -> Result<ArrayLine, WitnessError> {
        if base.num_vertices() != direction.num_vertices()
            || base.num_edges() != direction.num_edges()
        {
            return Err(WitnessError::ShapeMismatch(format!(
                "base is {}v/{}e, direction is {}v/{}e",
                base.num_vertices(),
                base.num_edges(),
                direction.num_vertices(),
                direction.num_edges()
            )));
        }
        Ok(ArrayLine { base, direction })
    }

    pub fn num_vertices(&self) -> usize {
        self.base.num_vertices()
    }

    pub fn num_edges(&self) -> usize {
        self.base.num_edges()
    }

    /// The projected line as a matrix over F[t], entries of degree <= 1.
    pub fn project(&self, ctx: &FieldCtx, alpha: &AlphaMap) -> Result<PolyMatrix, WitnessError> {
        let b = self.base.project(ctx, alpha)?;
        let d = self.direction.project(ctx, alpha)?;
        let mut entries = Vec::with_capacity(b.rows() * b.cols());
        for v in 0..b.rows() {
            for e in 0..b.cols() {
                entries.push(Poly::from_coeffs(ctx, vec![b.get(v, e), d.get(v, e)]));
            }
        }
        Ok(PolyMatrix::new(b.rows(), b.cols(), entries))
    }

    /// The array at parameter t0.
    pub fn at(&self, ctx: &FieldCtx, t0: FieldElement) -> ColorArray {
        ColorArray::from_fn(ctx, self.num_vertices(), self.num_edges(), |v, e, c| {
            ctx.add(
                self.base.get(v, e, c),
                ctx.mul(t0, self.direction.get(v, e, c)),
            )
        })
    }
}

/// Monic gcd of the chosen minor family of the projected line.
pub fn f_alpha(
    ctx: &FieldCtx,
    line: &ArrayLine,
    alpha: &AlphaMap,
    mode: MinorMode,
) -> Result<Poly, WitnessError> {
    if line.num_vertices() > line.num_edges() {
        return Err(WitnessError::TooFewEdges {
            vertices: line.num_vertices(),
            edges: line.num_edges(),
        });
    }
    let m = line.project(ctx, alpha)?;
    let minors = match mode {
        MinorMode::Delta => m.major_cofactors(ctx),
        MinorMode::AllMinors => m.maximal_minors(ctx),
    }
    .expect("rows <= cols checked above");
    Ok(monic_gcd(ctx, &minors))
}

/// Per-assignment detail of a membership test at a parameter value.
#[derive(Debug, Clone)]
pub struct AlphaDetail {
    pub alpha: AlphaMap,
    pub f: Poly,
    pub value_at_t0: FieldElement,
    /// Projected rank at t0, the ground truth the gcd test is compared to.
    pub rank_at_t0: usize,
}

/// Outcome of scanning every alpha at one parameter value.
#[derive(Debug, Clone)]
pub struct MembershipReport {
    pub t0: FieldElement,
    pub mode: MinorMode,
    pub member: bool,
    /// Same question answered with the Delta minor family, for comparison.
    pub member_delta: bool,
    pub details: Vec<AlphaDetail>,
}

/// Tests whether the array theta(t0) lies in the coloring variety: yes when
/// some f_alpha vanishes at t0.
pub fn membership_via_roots(
    ctx: &FieldCtx,
    line: &ArrayLine,
    t0: FieldElement,
    mode: MinorMode,
) -> Result<MembershipReport, WitnessError> {
    if line.num_vertices() > line.num_edges() {
        return Err(WitnessError::TooFewEdges {
            vertices: line.num_vertices(),
            edges: line.num_edges(),
        });
    }
    let total = AlphaMap::count(ctx, line.num_edges()).expect("alpha space too large");
    let mut details = Vec::with_capacity(total as usize);
    let mut member = false;
    let mut member_delta = false;
    for index in 0..total {
        let alpha = AlphaMap::from_index(ctx, line.num_edges(), index);
        let projected = line.project(ctx, &alpha)?;
        let rank_at_t0 = projected.eval(ctx, t0).rank(ctx);
        let minors = |mode: MinorMode| match mode {
            MinorMode::Delta => projected.major_cofactors(ctx),
            MinorMode::AllMinors => projected.maximal_minors(ctx),
        };
        let f = monic_gcd(ctx, &minors(mode).expect("rows <= cols checked above"));
        let f_delta = monic_gcd(ctx, &minors(MinorMode::Delta).expect("checked above"));
        let value_at_t0 = f.eval(ctx, t0);
        member |= value_at_t0.is_zero();
        member_delta |= f_delta.eval(ctx, t0).is_zero();
        details.push(AlphaDetail {
            alpha,
            f,
            value_at_t0,
            rank_at_t0,
        });
    }
    Ok(MembershipReport {
        t0,
        mode,
        member,
        member_delta,
        details,
    })
}

/// The product scan over a graph pair: theta(x) = A(g1) + x * A(g2),
/// Phi = prod over alpha of f_alpha, chi = Phi^(q-1).
#[derive(Debug, Clone)]
pub struct WitnessReport {
    pub mode: MinorMode,
    /// f_alpha per assignment, in enumeration order.
    pub factors: Vec<(AlphaMap, Poly)>,
    pub phi: Poly,
    pub chi: Poly,
    pub phi_degree: Option<usize>,
    pub chi_degree: Option<usize>,
    /// Degree bound |V| * (q-2)^|E| on Phi.
    pub phi_degree_bound: u64,
    /// sqrt(deg chi) - 1, the generic-polynomial complexity reference.
    pub ps_reference: Option<f64>,
}

/// Computes Phi and chi for a pair of same-shape graphs, along with degree
/// data. Each f_alpha is a monic gcd, so Phi is monic; normalization affects
/// neither root sets nor degrees.
pub fn conjecture_scan(
    ctx: &FieldCtx,
    g1: &crate::graph::OrientedGraph,
    g2: &crate::graph::OrientedGraph,
    mode: MinorMode,
) -> Result<WitnessReport, WitnessError> {
    if g1.num_vertices() != g2.num_vertices() || g1.num_edges() != g2.num_edges() {
        return Err(WitnessError::ShapeMismatch(format!(
            "graphs are {}v/{}e and {}v/{}e",
            g1.num_vertices(),
            g1.num_edges(),
            g2.num_vertices(),
            g2.num_edges()
        )));
    }
    let line = ArrayLine::new(ColorArray::of_graph(g1, ctx), ColorArray::of_graph(g2, ctx))?;
    if line.num_vertices() > line.num_edges() {
        return Err(WitnessError::TooFewEdges {
            vertices: line.num_vertices(),
            edges: line.num_edges(),
        });
    }
    let total = AlphaMap::count(ctx, line.num_edges()).expect("alpha space too large");
    let mut factors = Vec::with_capacity(total as usize);
    let mut phi = Poly::one(ctx);
    for index in 0..total {
        let alpha = AlphaMap::from_index(ctx, line.num_edges(), index);
        let f = f_alpha(ctx, &line, &alpha, mode)?;
        phi = phi.mul(ctx, &f);
        factors.push((alpha, f));
    }
    let chi = phi.pow(ctx, ctx.order() - 1);
    let phi_degree = phi.degree();
    let chi_degree = chi.degree();
    let phi_degree_bound =
        (line.num_vertices() as u64) * (ctx.order() - 2).pow(line.num_edges() as u32);
    let ps_reference = chi_degree.map(|d| (d as f64).sqrt() - 1.0);
    Ok(WitnessReport {
        mode,
        factors,
        phi,
        chi,
        phi_degree,
        chi_degree,
        phi_degree_bound,
        ps_reference,
    })
}
