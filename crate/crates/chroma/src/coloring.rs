//! Coloring of oriented graphs by nonzero field elements, decided through
//! rank of projected coloring arrays, plus an independent brute-force
//! backtracking oracle.
//!
//! The array A of a graph has shape (|V|, |E|, q-1): the (v, e, c) entry is 1
//! when v is the tail of e, c when v is the head, and 0 otherwise. Projecting
//! at an edge assignment alpha (values outside {0, -1}) keeps the slice
//! c = alpha(e), giving a |V| x |E| matrix whose left kernel vectors are
//! exactly the colorings compatible with alpha.

use std::sync::atomic::{AtomicU64, Ordering};

use thiserror::Error;

use crate::field::{FieldCtx, FieldElement};
use crate::graph::OrientedGraph;
use crate::linalg::FieldMatrix;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ColoringError {
    #[error("alpha value {0} is not allowed (must avoid 0 and -1)")]
    BadAlphaValue(FieldElement),
    #[error("alpha has {got} values but the graph has {expected} edges")]
    AlphaLength { got: usize, expected: usize },
    #[error("internal consistency failure: {0}")]
    Internal(String),
}

/// Per-edge values alpha(e) drawn from F \ {0, -1}.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AlphaMap {
    values: Vec<FieldElement>,
}

impl AlphaMap {
    pub fn new(ctx: &FieldCtx, values: Vec<FieldElement>) -> Result<AlphaMap, ColoringError> {
        let minus_one = ctx.minus_one();
        for &v in &values {
            if v.is_zero() || v == minus_one {
                return Err(ColoringError::BadAlphaValue(v));
            }
        }
        Ok(AlphaMap { values })
    }

    pub fn values(&self) -> &[FieldElement] {
        &self.values
    }

    pub fn encodings(&self) -> Vec<u64> {
        self.values.iter().map(|v| v.encoding()).collect()
    }

    /// Number of alpha maps on `num_edges` edges: (q-2)^|E|.
    pub fn count(ctx: &FieldCtx, num_edges: usize) -> Option<u64> {
        let m = ctx.order() - 2;
        let mut acc: u64 = 1;
        for _ in 0..num_edges {
            acc = acc.checked_mul(m)?;
        }
        Some(acc)
    }

    /// The index-th alpha map in enumeration order: a mixed-radix counter
    /// over the q-2 allowed values in encoding order, with edge 1 varying
    /// fastest. Deterministic, so reported witnesses are reproducible.
    pub fn from_index(ctx: &FieldCtx, num_edges: usize, mut index: u64) -> AlphaMap {
        let allowed = ctx.units_excluding_minus_one();
        let m = allowed.len() as u64;
        let mut values = Vec::with_capacity(num_edges);
        for _ in 0..num_edges {
            values.push(allowed[(index % m) as usize]);
            index /= m;
        }
        AlphaMap { values }
    }
}

/// A per-vertex assignment of nonzero field elements with adjacent vertices
/// distinct.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Coloring {
    values: Vec<FieldElement>,
}

impl Coloring {
    pub fn values(&self) -> &[FieldElement] {
        &self.values
    }

    pub fn encodings(&self) -> Vec<u64> {
        self.values.iter().map(|v| v.encoding()).collect()
    }

    /// Checks the coloring invariants against a graph: all values nonzero and
    /// endpoints of every edge distinct.
    pub fn is_proper(&self, g: &OrientedGraph) -> bool {
        if self.values.len() != g.num_vertices() {
            return false;
        }
        if self.values.iter().any(|v| v.is_zero()) {
            return false;
        }
        g.edges().iter().all(|&(t, h)| self.values[t] != self.values[h])
    }
}

/// The 3-index array of a graph, or any array of the same shape (lines in
/// array space use arbitrary entries).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColorArray {
    num_vertices: usize,
    num_edges: usize,
    colors: usize,
    entries: Vec<FieldElement>,
}

impl ColorArray {
    /// The array of a graph, entries fixed by the incidence case formula.
    pub fn of_graph(g: &OrientedGraph, ctx: &FieldCtx) -> ColorArray {
        ColorArray::from_fn(ctx, g.num_vertices(), g.num_edges(), |v, e, c| {
            let (t, h) = g.edges()[e];
            if v == t {
                ctx.one()
            } else if v == h {
                c
            } else {
                ctx.zero()
            }
        })
    }

    /// Arbitrary array of the given shape; `f(v, e, c)` supplies the entry
    /// for each vertex index, edge index and nonzero color c.
    pub fn from_fn(
        ctx: &FieldCtx,
        num_vertices: usize,
        num_edges: usize,
        f: impl Fn(usize, usize, FieldElement) -> FieldElement,
    ) -> ColorArray {
        let colors = (ctx.order() - 1) as usize;
        let mut entries = Vec::with_capacity(num_vertices * num_edges * colors);
        for v in 0..num_vertices {
            for e in 0..num_edges {
                for cenc in 1..=colors as u64 {
                    let c = ctx.element(cenc).expect("color in range");
                    entries.push(f(v, e, c));
                }
            }
        }
        ColorArray {
            num_vertices,
            num_edges,
            colors,
            entries,
        }
    }

    pub fn num_vertices(&self) -> usize {
        self.num_vertices
    }

    pub fn num_edges(&self) -> usize {
        self.num_edges
    }

    /// Entry at (v, e, c) for a nonzero color c.
    pub fn get(&self, v: usize, e: usize, c: FieldElement) -> FieldElement {
        debug_assert!(!c.is_zero());
        let slot = (c.encoding() - 1) as usize;
        self.entries[(v * self.num_edges + e) * self.colors + slot]
    }

    /// Slice at c = alpha(e) in each edge fiber: the |V| x |E| matrix with
    /// M(v, e) = A(v, e, alpha(e)).
    pub fn project(&self, ctx: &FieldCtx, alpha: &AlphaMap) -> Result<FieldMatrix, ColoringError> {
        if alpha.values().len() != self.num_edges {
            return Err(ColoringError::AlphaLength {
                got: alpha.values().len(),
                expected: self.num_edges,
            });
        }
        let mut m = FieldMatrix::zeros(ctx, self.num_vertices, self.num_edges);
        for v in 0..self.num_vertices {
            for (e, &a) in alpha.values().iter().enumerate() {
                m.set(v, e, self.get(v, e, a));
            }
        }
        Ok(m)
    }
}

/// Reads a kernel vector of the projected array as a coloring, checking the
/// per-edge relation c_tail = -alpha(e) * c_head. For a connected graph a
/// nonzero kernel vector can have no zero coordinate, and alpha avoiding
/// {0, -1} forces adjacent coordinates distinct; violations are internal
/// consistency failures.
pub fn extract_coloring(
    ctx: &FieldCtx,
    kernel_vec: &[FieldElement],
    alpha: &AlphaMap,
    g: &OrientedGraph,
) -> Result<Coloring, ColoringError> {
    if kernel_vec.len() != g.num_vertices() {
        return Err(ColoringError::Internal(format!(
            "kernel vector length {} != |V| = {}",
            kernel_vec.len(),
            g.num_vertices()
        )));
    }
    if kernel_vec.iter().all(|c| c.is_zero()) {
        return Err(ColoringError::Internal("kernel vector is zero".into()));
    }
    for (e, &(t, h)) in g.edges().iter().enumerate() {
        let lhs = kernel_vec[t];
        let rhs = ctx.neg(ctx.mul(alpha.values()[e], kernel_vec[h]));
        if lhs != rhs {
            return Err(ColoringError::Internal(format!(
                "kernel vector violates the edge {} relation",
                e + 1
            )));
        }
    }
    if kernel_vec.iter().any(|c| c.is_zero()) {
        return Err(ColoringError::Internal(
            "kernel vector has a zero coordinate on a connected graph".into(),
        ));
    }
    let coloring = Coloring {
        values: kernel_vec.to_vec(),
    };
    if !coloring.is_proper(g) {
        return Err(ColoringError::Internal(
            "extracted coloring is not proper".into(),
        ));
    }
    Ok(coloring)
}

/// Decides colorability through the projected-array rank criterion.
///
/// Alpha maps are enumerated in the deterministic order of
/// [`AlphaMap::from_index`] and the first witness wins; when |E| < |V| the
/// kernel is nonzero for every alpha, so the all-smallest alpha is used
/// directly. Returns the witness assignment and a checked coloring, or None.
///
/// The scan honors `threads` workers (1 = sequential); results do not depend
/// on the thread count.
pub fn decide_colorable(
    g: &OrientedGraph,
    ctx: &FieldCtx,
    threads: usize,
) -> Option<(AlphaMap, Coloring)> {
    let array = ColorArray::of_graph(g, ctx);
    let total = AlphaMap::count(ctx, g.num_edges())
        .expect("alpha space too large to enumerate");
    let check = |index: u64| -> Option<(AlphaMap, Coloring)> {
        let alpha = AlphaMap::from_index(ctx, g.num_edges(), index);
        let m = array.project(ctx, &alpha).expect("alpha length matches");
        // A nonempty left kernel is exactly the rank < |V| criterion.
        let kernel = m.left_kernel(ctx);
        let vec = kernel.first()?;
        let coloring = extract_coloring(ctx, vec, &alpha, g)
            .expect("kernel vector must extract to a proper coloring");
        Some((alpha, coloring))
    };
    if g.num_edges() < g.num_vertices() {
        // Kernel dimension is at least |V| - |E| > 0 for every alpha.
        let hit = check(0);
        debug_assert!(hit.is_some());
        return hit;
    }
    let threads = threads.max(1).min(total.max(1) as usize);
    if threads == 1 {
        return (0..total).find_map(check);
    }
    let best = AtomicU64::new(u64::MAX);
    let chunk = total.div_ceil(threads as u64);
    std::thread::scope(|scope| {
        let mut handles = Vec::new();
        for t in 0..threads as u64 {
            let lo = t * chunk;
            let hi = ((t + 1) * chunk).min(total);
            let best = &best;
            let check = &check;
            handles.push(scope.spawn(move || {
                for i in lo..hi {
                    if best.load(Ordering::Relaxed) < lo {
                        return None;
                    }
                    if let Some(hit) = check(i) {
                        best.fetch_min(i, Ordering::Relaxed);
                        return Some((i, hit));
                    }
                }
                None
            }));
        }
        handles
            .into_iter()
            .filter_map(|h| h.join().expect("scan worker panicked"))
            .min_by_key(|(i, _)| *i)
            .map(|(_, hit)| hit)
    })
}

/// Independent oracle: backtracking over assignments V -> F*, vertices in
/// index order, colors in encoding order. Orientation is ignored and
/// parallel edges collapse.
pub fn brute_force_colorable(g: &OrientedGraph, ctx: &FieldCtx) -> Option<Coloring> {
    let adj = g.adjacency();
    let colors: Vec<FieldElement> = ctx.elements().skip(1).collect();
    let mut assignment: Vec<Option<FieldElement>> = vec![None; g.num_vertices()];

    fn go(
        v: usize,
        adj: &[Vec<usize>],
        colors: &[FieldElement],
        assignment: &mut Vec<Option<FieldElement>>,
    ) -> bool {
        if v == assignment.len() {
            return true;
        }
        'colors: for &c in colors {
            for &w in &adj[v] {
                if assignment[w] == Some(c) {
                    continue 'colors;
                }
            }
            assignment[v] = Some(c);
            if go(v + 1, adj, colors, assignment) {
                return true;
            }
            assignment[v] = None;
        }
        false
    }

    if go(0, &adj, &colors, &mut assignment) {
        Some(Coloring {
            values: assignment.into_iter().map(|c| c.unwrap()).collect(),
        })
    } else {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::FieldCtx;
    use crate::graph::OrientedGraph;

    fn gf(p: u64, n: u32) -> FieldCtx {
        FieldCtx::new(p, n).unwrap()
    }

    fn example1() -> OrientedGraph {
        OrientedGraph::new(4, &[(3, 1), (1, 2), (2, 4), (4, 3), (3, 2)]).unwrap()
    }

    fn k4() -> OrientedGraph {
        OrientedGraph::new(4, &[(1, 2), (1, 3), (1, 4), (2, 3), (2, 4), (3, 4)]).unwrap()
    }

    fn triangle() -> OrientedGraph {
        OrientedGraph::new(3, &[(1, 2), (2, 3), (3, 1)]).unwrap()
    }

    fn alpha(ctx: &FieldCtx, encs: &[u64]) -> AlphaMap {
        AlphaMap::new(
            ctx,
            encs.iter().map(|&e| ctx.element(e).unwrap()).collect(),
        )
        .unwrap()
    }

    #[test]
    fn array_entries_follow_case_formula() {
        let f = gf(2, 2);
        let g = OrientedGraph::new(2, &[(1, 2)]).unwrap();
        let a = ColorArray::of_graph(&g, &f);
        for cenc in 1..4 {
            let c = f.element(cenc).unwrap();
            assert_eq!(a.get(0, 0, c), f.one());
            assert_eq!(a.get(1, 0, c), c);
        }
        // Entries vanish off the edge endpoints.
        let g3 = triangle();
        let a3 = ColorArray::of_graph(&g3, &f);
        for cenc in 1..4 {
            let c = f.element(cenc).unwrap();
            assert_eq!(a3.get(2, 0, c), f.zero());
            assert_eq!(a3.get(0, 1, c), f.zero());
        }
    }

    #[test]
    fn projection_matches_displayed_matrix() {
        let f = gf(2, 2);
        let a = ColorArray::of_graph(&example1(), &f);
        let w = alpha(&f, &[2, 2, 2, 2, 2]);
        let m = a.project(&f, &w).unwrap();
        let expect: [[u64; 5]; 4] = [
            [2, 1, 0, 0, 0],
            [0, 2, 1, 0, 2],
            [1, 0, 0, 2, 1],
            [0, 0, 2, 1, 0],
        ];
        for (v, row) in expect.iter().enumerate() {
            for (e, &enc) in row.iter().enumerate() {
                assert_eq!(m.get(v, e).encoding(), enc, "entry ({v},{e})");
            }
        }
        // Every column has exactly two nonzero entries.
        for e in 0..5 {
            let nonzero = (0..4).filter(|&v| !m.get(v, e).is_zero()).count();
            assert_eq!(nonzero, 2);
        }
    }

    #[test]
    fn path_graph_projection_over_gf5() {
        let f = gf(5, 1);
        let g = OrientedGraph::new(3, &[(1, 2), (2, 3)]).unwrap();
        let a = ColorArray::of_graph(&g, &f);
        let m = a.project(&f, &alpha(&f, &[1, 1])).unwrap();
        let expect = [[1, 0], [1, 1], [0, 1]];
        for (v, row) in expect.iter().enumerate() {
            for (e, &enc) in row.iter().enumerate() {
                assert_eq!(m.get(v, e).encoding(), enc);
            }
        }
    }

    #[test]
    fn alpha_validation() {
        let f = gf(5, 1);
        assert!(AlphaMap::new(&f, vec![f.zero()]).is_err());
        assert!(AlphaMap::new(&f, vec![f.element(4).unwrap()]).is_err());
        assert!(AlphaMap::new(&f, vec![f.one()]).is_ok());
    }

    #[test]
    fn rank_and_kernel_at_spec_witness() {
        let f = gf(2, 2);
        let a = ColorArray::of_graph(&example1(), &f);
        let w = alpha(&f, &[3, 3, 2, 2, 2]);
        let m = a.project(&f, &w).unwrap();
        assert_eq!(m.rank(&f), 3);
        let kernel = m.left_kernel(&f);
        assert_eq!(kernel.len(), 1);
        let encs: Vec<u64> = kernel[0].iter().map(|c| c.encoding()).collect();
        assert_eq!(encs, vec![1, 2, 3, 1]);
    }

    #[test]
    fn decide_matches_spec_witness_on_fixture() {
        let f = gf(2, 2);
        let (w, c) = decide_colorable(&example1(), &f, 1).unwrap();
        assert_eq!(w.encodings(), vec![3, 3, 2, 2, 2]);
        assert_eq!(c.encodings(), vec![1, 2, 3, 1]);
        assert!(c.is_proper(&example1()));
    }

    #[test]
    fn decide_is_thread_count_invariant() {
        let f = gf(2, 2);
        for threads in [1, 2, 3, 8] {
            let (w, c) = decide_colorable(&example1(), &f, threads).unwrap();
            assert_eq!(w.encodings(), vec![3, 3, 2, 2, 2]);
            assert_eq!(c.encodings(), vec![1, 2, 3, 1]);
        }
    }

    #[test]
    fn triangle_and_k4_over_gf4() {
        let f = gf(2, 2);
        let (_, c) = decide_colorable(&triangle(), &f, 1).unwrap();
        assert!(c.is_proper(&triangle()));
        assert!(decide_colorable(&k4(), &f, 1).is_none());
        assert!(brute_force_colorable(&k4(), &f).is_none());
        // K4 has a proper coloring once q-1 >= 4.
        let f5 = gf(5, 1);
        assert!(decide_colorable(&k4(), &f5, 1).is_some());
    }

    #[test]
    fn brute_force_fixture_coloring() {
        let f = gf(2, 2);
        let c = brute_force_colorable(&example1(), &f).unwrap();
        assert_eq!(c.encodings(), vec![1, 2, 3, 1]);
    }

    #[test]
    fn star_graph_always_colorable() {
        let f = gf(2, 2);
        let star = OrientedGraph::new(4, &[(1, 2), (1, 3), (1, 4)]).unwrap();
        let (_, c) = decide_colorable(&star, &f, 1).unwrap();
        assert!(c.is_proper(&star));
    }

    #[test]
    fn single_edge_kernel_extraction() {
        let f = gf(2, 2);
        let g = OrientedGraph::new(2, &[(1, 2)]).unwrap();
        for aenc in [2u64, 3] {
            let w = alpha(&f, &[aenc]);
            let a = w.values()[0];
            let vec = vec![f.neg(a), f.one()];
            let c = extract_coloring(&f, &vec, &w, &g).unwrap();
            assert!(c.is_proper(&g));
        }
    }

    #[test]
    fn fermat_direction_on_proper_colorings() {
        // For a proper coloring, every edge satisfies
        // prod over allowed alpha of (c_tail + alpha * c_head) = 0.
        for (p, n) in [(2, 2), (5, 1)] {
            let f = gf(p, n);
            let g = example1();
            let c = brute_force_colorable(&g, &f).unwrap();
            for &(t, h) in g.edges() {
                let mut prod = f.one();
                for a in f.units_excluding_minus_one() {
                    prod = f.mul(prod, f.add(c.values()[t], f.mul(a, c.values()[h])));
                }
                assert!(prod.is_zero());
            }
        }
    }

    #[test]
    fn trees_always_colorable() {
        for (p, n) in [(2, 2), (5, 1), (2, 3)] {
            let f = gf(p, n);
            // A path, a star and a caterpillar: |E| = |V| - 1.
            let trees = [
                OrientedGraph::new(5, &[(1, 2), (2, 3), (3, 4), (4, 5)]).unwrap(),
                OrientedGraph::new(5, &[(1, 2), (1, 3), (1, 4), (1, 5)]).unwrap(),
                OrientedGraph::new(5, &[(1, 2), (2, 3), (2, 4), (3, 5)]).unwrap(),
            ];
            for g in &trees {
                let (_, c) = decide_colorable(g, &f, 1).expect("trees are colorable");
                assert!(c.is_proper(g));
            }
        }
    }

    #[test]
    fn orientation_flip_preserves_answer() {
        let f = gf(2, 2);
        for g in [example1(), k4(), triangle()] {
            let base = decide_colorable(&g, &f, 1).is_some();
            for e in 0..g.num_edges() {
                let flipped = g.flip_edge(e);
                assert_eq!(decide_colorable(&flipped, &f, 1).is_some(), base);
            }
        }
    }

    #[test]
    fn single_vertex_graph() {
        let f = gf(2, 2);
        let g = OrientedGraph::new(1, &[]).unwrap();
        let (w, c) = decide_colorable(&g, &f, 1).unwrap();
        assert!(w.values().is_empty());
        assert_eq!(c.values().len(), 1);
        assert!(!c.values()[0].is_zero());
    }
}
