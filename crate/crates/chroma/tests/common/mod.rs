//! Seeded generators shared by the integration suites.

use rand::rngs::StdRng;
use rand::Rng;

use chroma::field::FieldCtx;
use chroma::graph::OrientedGraph;
use chroma::tree::{BinOp, DecisionTree, Label, Node, NodeId};

/// Random connected graph with 1..=max_vertices vertices and at most
/// max_edges edges: a random spanning tree plus extra random edges, each
/// with a random orientation.
pub fn random_connected_graph(
    rng: &mut StdRng,
    max_vertices: usize,
    max_edges: usize,
) -> OrientedGraph {
    let v = rng.random_range(1..=max_vertices);
    let mut edges: Vec<(usize, usize)> = Vec::new();
    for w in 2..=v {
        let anchor = rng.random_range(1..w);
        if rng.random_bool(0.5) {
            edges.push((anchor, w));
        } else {
            edges.push((w, anchor));
        }
    }
    if v >= 2 {
        let extra = rng.random_range(0..=max_edges.saturating_sub(edges.len()));
        for _ in 0..extra {
            let a = rng.random_range(1..=v);
            let mut b = rng.random_range(1..=v);
            while b == a {
                b = rng.random_range(1..=v);
            }
            edges.push((a, b));
        }
    }
    OrientedGraph::new(v, &edges).expect("generated graph is connected")
}

pub struct TreeGenConfig {
    pub max_depth: usize,
    pub max_nodes: usize,
    pub allow_division: bool,
}

/// Random decision tree: an input root followed by random computation runs,
/// zero-test branches and leaves. Operands always reference ancestors.
pub fn random_tree(rng: &mut StdRng, ctx: &FieldCtx, cfg: &TreeGenConfig) -> DecisionTree {
    let mut nodes: Vec<Node> = Vec::new();
    let mut budget = cfg.max_nodes.saturating_sub(1);
    nodes.push(Node::Input { next: 0 });
    let mut ancestors = vec![0usize];
    let head = gen_run(rng, ctx, cfg, &mut nodes, &mut budget, &mut ancestors, cfg.max_depth);
    if let Node::Input { next } = &mut nodes[0] {
        *next = head;
    }
    DecisionTree::from_nodes(nodes, 0).expect("generated tree is well formed")
}

fn patch_next(nodes: &mut [Node], id: NodeId, child: NodeId) {
    match &mut nodes[id] {
        Node::Const { next, .. } | Node::Scale { next, .. } | Node::Bin { next, .. } => {
            *next = child
        }
        _ => unreachable!(),
    }
}

fn gen_run(
    rng: &mut StdRng,
    ctx: &FieldCtx,
    cfg: &TreeGenConfig,
    nodes: &mut Vec<Node>,
    budget: &mut usize,
    ancestors: &mut Vec<NodeId>,
    depth: usize,
) -> NodeId {
    if *budget == 0 || depth == 0 {
        return emit_leaf(rng, nodes);
    }
    let roll: f64 = rng.random();
    if roll < 0.45 {
        // A computation, then continue the run.
        *budget -= 1;
        let id = nodes.len();
        let pick = |rng: &mut StdRng, anc: &[NodeId]| anc[rng.random_range(0..anc.len())];
        let elem = |rng: &mut StdRng| {
            ctx.element(rng.random_range(0..ctx.order())).expect("in range")
        };
        let kind: f64 = rng.random();
        let node = if kind < 0.2 {
            Node::Const { value: elem(rng), next: 0 }
        } else if kind < 0.35 {
            Node::Scale { coeff: elem(rng), src: pick(rng, ancestors), next: 0 }
        } else {
            let ops: &[BinOp] = if cfg.allow_division {
                &[BinOp::Add, BinOp::Sub, BinOp::Mul, BinOp::Div]
            } else {
                &[BinOp::Add, BinOp::Sub, BinOp::Mul]
            };
            Node::Bin {
                op: ops[rng.random_range(0..ops.len())],
                lhs: pick(rng, ancestors),
                rhs: pick(rng, ancestors),
                next: 0,
            }
        };
        nodes.push(node);
        ancestors.push(id);
        let child = gen_run(rng, ctx, cfg, nodes, budget, ancestors, depth);
        ancestors.pop();
        patch_next(nodes, id, child);
        id
    } else if roll < 0.8 {
        // A branch over some computed value.
        *budget -= 1;
        let id = nodes.len();
        let test = ancestors[rng.random_range(0..ancestors.len())];
        nodes.push(Node::Branch { test, eq: 0, neq: 0 });
        let eq = gen_run(rng, ctx, cfg, nodes, budget, ancestors, depth - 1);
        let neq = gen_run(rng, ctx, cfg, nodes, budget, ancestors, depth - 1);
        if let Node::Branch { eq: e, neq: q, .. } = &mut nodes[id] {
            *e = eq;
            *q = neq;
        }
        id
    } else {
        emit_leaf(rng, nodes)
    }
}

fn emit_leaf(rng: &mut StdRng, nodes: &mut Vec<Node>) -> NodeId {
    let id = nodes.len();
    let label = if rng.random_bool(0.5) { Label::In } else { Label::Out };
    nodes.push(Node::Leaf { label });
    id
}
