//! Connected graphs with oriented edges, and the line-oriented text format:
//!
//! ```text
//! graph <|V|> <|E|>
//! e <tail> <head>     (|E| lines, 1-indexed vertex ids, tail = e(0))
//! ```
//!
//! Blank lines and lines starting with `#` are ignored.

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GraphError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("edge {edge} is a self-loop on vertex {vertex}")]
    SelfLoop { edge: usize, vertex: usize },
    #[error("edge {edge} references vertex {vertex}, but the graph has {num_vertices} vertices")]
    VertexOutOfRange {
        edge: usize,
        vertex: usize,
        num_vertices: usize,
    },
    #[error("graph is not connected")]
    Disconnected,
    #[error("graph must have at least one vertex")]
    Empty,
}

/// A connected graph whose edges carry an orientation e(0) -> e(1).
/// Vertices are 1-indexed in the text format and stored 0-indexed here.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OrientedGraph {
    num_vertices: usize,
    /// (tail, head) pairs, 0-indexed.
    edges: Vec<(usize, usize)>,
}

impl OrientedGraph {
    /// Builds a graph from 1-indexed (tail, head) pairs, validating the
    /// no-self-loop and connectivity invariants.
    pub fn new(num_vertices: usize, edges_1indexed: &[(usize, usize)]) -> Result<Self, GraphError> {
        if num_vertices == 0 {
            return Err(GraphError::Empty);
        }
        let mut edges = Vec::with_capacity(edges_1indexed.len());
        for (i, &(t, h)) in edges_1indexed.iter().enumerate() {
            for v in [t, h] {
                if v == 0 || v > num_vertices {
                    return Err(GraphError::VertexOutOfRange {
                        edge: i + 1,
                        vertex: v,
                        num_vertices,
                    });
                }
            }
            if t == h {
                return Err(GraphError::SelfLoop {
                    edge: i + 1,
                    vertex: t,
                });
            }
            edges.push((t - 1, h - 1));
        }
        let g = OrientedGraph { num_vertices, edges };
        if !g.is_connected() {
            return Err(GraphError::Disconnected);
        }
        Ok(g)
    }

    pub fn num_vertices(&self) -> usize {
        self.num_vertices
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    /// 0-indexed (tail, head) pairs.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    /// Undirected adjacency sets (parallel edges collapsed).
    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.num_vertices];
        for &(t, h) in &self.edges {
            if !adj[t].contains(&h) {
                adj[t].push(h);
            }
            if !adj[h].contains(&t) {
                adj[h].push(t);
            }
        }
        for set in adj.iter_mut() {
            set.sort_unstable();
        }
        adj
    }

    fn is_connected(&self) -> bool {
        let adj = self.adjacency();
        let mut seen = vec![false; self.num_vertices];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(v) = stack.pop() {
            for &w in &adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }

    /// Flips the orientation of one edge; adjacency is unchanged.
    pub fn flip_edge(&self, edge: usize) -> OrientedGraph {
        let mut g = self.clone();
        let (t, h) = g.edges[edge];
        g.edges[edge] = (h, t);
        g
    }

    pub fn parse(text: &str) -> Result<Self, GraphError> {
        let mut header: Option<(usize, usize)> = None;
        let mut edges = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let lineno = idx + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut tok = line.split_whitespace();
            let err = |msg: &str| GraphError::Parse {
                line: lineno,
                msg: msg.to_string(),
            };
            match tok.next() {
                Some("graph") => {
                    if header.is_some() {
                        return Err(err("duplicate graph header"));
                    }
                    let v = tok
                        .next()
                        .and_then(|s| s.parse::<usize>().ok())
                        .ok_or_else(|| err("expected `graph <|V|> <|E|>`"))?;
                    let e = tok
                        .next()
                        .and_then(|s| s.parse::<usize>().ok())
                        .ok_or_else(|| err("expected `graph <|V|> <|E|>`"))?;
                    if tok.next().is_some() {
                        return Err(err("trailing tokens after graph header"));
                    }
                    header = Some((v, e));
                }
                Some("e") => {
                    if header.is_none() {
                        return Err(err("edge before graph header"));
                    }
                    let t = tok
                        .next()
                        .and_then(|s| s.parse::<usize>().ok())
                        .ok_or_else(|| err("expected `e <tail> <head>`"))?;
                    let h = tok
                        .next()
                        .and_then(|s| s.parse::<usize>().ok())
                        .ok_or_else(|| err("expected `e <tail> <head>`"))?;
                    if tok.next().is_some() {
                        return Err(err("trailing tokens after edge"));
                    }
                    edges.push((t, h));
                }
                Some(other) => {
                    return Err(err(&format!("unknown directive {other:?}")));
                }
                None => unreachable!("blank lines are skipped"),
            }
        }
        let (v, e) = header.ok_or(GraphError::Parse {
            line: text.lines().count() + 1,
            msg: "missing graph header".to_string(),
        })?;
        if e != edges.len() {
            return Err(GraphError::Parse {
                line: text.lines().count() + 1,
                msg: format!("header declares {} edges, found {}", e, edges.len()),
            });
        }
        OrientedGraph::new(v, &edges)
    }
}
