fn main() {
    let f = chroma::field::FieldCtx::new(2, 2).unwrap();
    let g1 = chroma::graph::OrientedGraph::new(4, &[(3,1),(1,2),(2,4),(4,3),(3,2)]).unwrap();
    let g2 = chroma::graph::OrientedGraph::new(4, &[(1,2),(1,3),(1,4),(2,4),(3,4)]).unwrap();
    let g3 = chroma::graph::OrientedGraph::new(4, &[(1,2),(2,3),(3,4),(4,1),(1,3)]).unwrap();
    for (name, a, b) in [("g1-g2", &g1, &g2), ("g1-g3", &g1, &g3), ("g2-g3", &g2, &g3), ("g3-g2", &g3, &g2), ("g2-g1", &g2, &g1)] {
        let r = chroma::witness::conjecture_scan(&f, a, b, chroma::witness::MinorMode::AllMinors).unwrap();
        println!("{name}: phi_degree={:?} chi_degree={:?} ps={:?}", r.phi_degree, r.chi_degree, r.ps_reference);
    }
}
