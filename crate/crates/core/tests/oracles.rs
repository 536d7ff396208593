//! Fixed reference values. Sparsity verdicts are rechecked by enumeration,
//! ranks by a pivoted QR factorisation that shares no code with the SVD path.

use nalgebra::DMatrix;

use rigidity_core::contexts::{assemble, ContextSpec, Placement};
use rigidity_core::graph::{BiColouredGraph, Colour, Subgraph};
use rigidity_core::moves::{find_reduction, reduce_fully, ConstructionMove, Reduction};
use rigidity_core::numeric::{decide_rigidity, generic_placement, numerical_rank, trial_seed, RigidityStatus};
use rigidity_core::sparsity::{
    brute_force_sparse, class_check, is_23_circuit, is_blue_limited, is_sparse, is_tight, SparsityClass,
};
use Colour::{Blue, Red};

const PAIRS: [(usize, usize); 6] = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];

fn k4(colours: [Colour; 6]) -> BiColouredGraph {
    BiColouredGraph::from_edges(4, PAIRS.iter().zip(colours).map(|(&(u, v), c)| (u, v, c))).unwrap()
}

fn qr_rank(m: &DMatrix<f64>) -> usize {
    let mut rows = m.clone();
    for mut r in rows.row_iter_mut() {
        let norm = r.norm();
        if norm > 0.0 {
            r /= norm;
        }
    }
    // Rank of M equals rank of M^T; factor the tall orientation.
    let t = if rows.nrows() < rows.ncols() { rows.transpose() } else { rows };
    let r = t.col_piv_qr().r();
    let diag: Vec<f64> = (0..r.nrows().min(r.ncols())).map(|i| r[(i, i)].abs()).collect();
    let top = diag.iter().cloned().fold(0.0, f64::max);
    diag.iter().filter(|&&d| d > 1e-9 * top).count()
}

fn ranks_at_trials(ctx: &ContextSpec, g: &BiColouredGraph, trials: u64) -> Vec<(usize, usize)> {
    (0..trials)
        .map(|t| {
            let p = generic_placement(ctx, g, trial_seed(17, t)).unwrap();
            let m = assemble(ctx, g, &p).unwrap().matrix;
            (numerical_rank(&m, 1e-9).unwrap().rank, qr_rank(&m))
        })
        .collect()
}

#[test]
fn k4_counts() {
    let g = k4([Blue, Red, Blue, Red, Blue, Red]);
    assert!(is_sparse(&g, 2).unwrap().verdict);
    assert!(is_tight(&g, 2).unwrap());
    let r3 = is_sparse(&g, 3).unwrap();
    assert!(!r3.verdict);
    assert_eq!(r3.witness.unwrap().edges.len(), 6);
    assert!(is_23_circuit(&g));
    let minus = {
        let mut h = g.clone();
        let first = *g.edges().next().unwrap();
        h.remove_edge(&first);
        h
    };
    assert!(!is_tight(&minus, 2).unwrap());
    for l in 1..=3 {
        assert_eq!(is_sparse(&g, l).unwrap().verdict, brute_force_sparse(&g, l).unwrap());
    }
}

#[test]
fn doubled_triangle_is_not_22_sparse() {
    let g = BiColouredGraph::complete(3, false);
    assert_eq!(g.edge_count(), 6);
    assert!(!is_sparse(&g, 2).unwrap().verdict);
    assert!(!brute_force_sparse(&g, 2).unwrap());
}

#[test]
fn small_counts() {
    assert!(is_tight(&BiColouredGraph::empty(1), 2).unwrap());
    assert!(!is_23_circuit(&BiColouredGraph::empty(1)));
    let single = BiColouredGraph::from_edges(2, [(0, 1, Blue)]).unwrap();
    assert!(brute_force_sparse(&single, 3).unwrap());
    let doubled = BiColouredGraph::from_edges(2, [(0, 1, Blue), (0, 1, Red)]).unwrap();
    assert!(!brute_force_sparse(&doubled, 3).unwrap());
    assert!(!is_sparse(&doubled, 3).unwrap().verdict);
    let two_k4 = BiColouredGraph::from_edges(
        8,
        PAIRS.iter().flat_map(|&(u, v)| [(u, v, Blue), (u + 4, v + 4, Red)]),
    )
    .unwrap();
    assert!(!is_23_circuit(&two_k4));
}

#[test]
fn blue_limitation() {
    assert!(!is_blue_limited(&k4([Blue; 6])));
    assert!(is_blue_limited(&k4([Blue, Blue, Blue, Blue, Blue, Red])));
    assert!(is_blue_limited(&k4([Red; 6])));
    let five_one = k4([Blue, Blue, Red, Blue, Blue, Blue]);
    assert!(class_check(&five_one, &SparsityClass::Tight22BlueLimited).unwrap().verdict);
    assert!(!class_check(&k4([Blue; 6]), &SparsityClass::Tight22BlueLimited).unwrap().verdict);
    let blue = five_one.monochrome_graph(Blue);
    assert!(brute_force_sparse(&blue, 3).unwrap());
}

#[test]
fn two_trees_on_three_vertices() {
    let g = BiColouredGraph::from_edges(3, [(0, 1, Blue), (1, 2, Blue), (0, 2, Red), (1, 2, Red)]).unwrap();
    assert!(class_check(&g, &SparsityClass::Separable { blocks: vec![1, 1] }).unwrap().verdict);
    let v = decide_rigidity(&ContextSpec::Separable { blocks: vec![1, 1] }, &g, 5, 3, 1e-9).unwrap();
    assert_eq!(v.status, RigidityStatus::MinimallyRigid);
}

#[test]
fn minimal_tight_block_witness() {
    // A K4 with a pendant degree-2 vertex, plus one more edge inside the K4.
    let mut g = k4([Blue, Red, Blue, Red, Blue, Red]).insert_vertex(4).unwrap();
    g.add_edge(rigidity_core::ColouredEdge::new(4, 0, Blue)).unwrap();
    g.add_edge(rigidity_core::ColouredEdge::new(4, 1, Red)).unwrap();
    g.add_edge(rigidity_core::ColouredEdge::new(0, 1, Red)).unwrap();
    let w: Subgraph = is_sparse(&g, 2).unwrap().witness.unwrap();
    assert_eq!(w.vertices.len(), 4);
    assert!(w.edges.len() > 2 * 4 - 2);
}

#[test]
fn mixed_k4_spot_ranks() {
    let ctx = ContextSpec::MixedLqPlane { q: 3.0 };
    for (svd, qr) in ranks_at_trials(&ctx, &k4([Blue; 6]), 5) {
        assert_eq!((svd, qr), (5, 5));
    }
    for (svd, qr) in ranks_at_trials(&ctx, &k4([Red, Blue, Blue, Blue, Blue, Blue]), 5) {
        assert_eq!((svd, qr), (6, 6));
    }
}

#[test]
fn cylinder_k4_spot_ranks() {
    for colours in [[Blue; 6], [Blue, Blue, Blue, Blue, Blue, Red], [Red, Blue, Red, Red, Red, Red]] {
        let g = k4(colours);
        for (svd, qr) in ranks_at_trials(&ContextSpec::Cylinder, &g, 5) {
            assert_eq!((svd, qr), (10, 10));
        }
        assert_eq!(find_reduction(&g, &SparsityClass::Tight22).unwrap(), Reduction::Base);
    }
}

#[test]
fn red_cylinder_k4_needs_a_winding_placement() {
    let ctx = ContextSpec::Cylinder;
    let g = k4([Red; 6]);
    let v = decide_rigidity(&ctx, &g, 5, 17, 1e-9).unwrap();
    assert_eq!((v.status, v.rank), (RigidityStatus::MinimallyRigid, 10));

    // Joints inside a half-cylinder: the geodesics unroll onto a planar K4.
    let half = Placement {
        coords: [(0.1, 0.3), (0.9, -0.4), (1.7, 0.8), (0.6, 1.5)]
            .iter()
            .map(|&(t, z): &(f64, f64)| vec![t.cos(), t.sin(), z])
            .collect(),
    };
    let m = assemble(&ctx, &g, &half).unwrap().matrix;
    assert_eq!((numerical_rank(&m, 1e-9).unwrap().rank, qr_rank(&m)), (9, 9));

    // Spread round the full circle the lifted triangles cannot close up.
    let spread = Placement {
        coords: [(0.0, 0.3), (2.0, -0.4), (4.0, 0.8), (1.0, 1.5)]
            .iter()
            .map(|&(t, z): &(f64, f64)| vec![t.cos(), t.sin(), z])
            .collect(),
    };
    let m = assemble(&ctx, &g, &spread).unwrap().matrix;
    assert_eq!((numerical_rank(&m, 1e-9).unwrap().rank, qr_rank(&m)), (10, 10));
}

#[test]
fn sphere_ranks_ignore_colour() {
    let g = k4([Blue; 6]);
    let minus: BiColouredGraph = {
        let mut h = g.clone();
        h.remove_edge(&rigidity_core::ColouredEdge::new(2, 3, Blue));
        h
    };
    for colours in [[Blue; 6], [Red; 6], [Red, Blue, Red, Blue, Red, Blue]] {
        let h = BiColouredGraph::from_edges(
            4,
            minus.edges().zip(colours).map(|(e, c)| (e.u, e.v, c)),
        )
        .unwrap();
        for (svd, qr) in ranks_at_trials(&ContextSpec::Sphere, &h, 3) {
            assert_eq!((svd, qr), (9, 9));
        }
    }
}

#[test]
fn small_decisions() {
    let mixed = ContextSpec::MixedLqPlane { q: 3.0 };
    let k2 = BiColouredGraph::from_edges(2, [(0, 1, Blue), (0, 1, Red)]).unwrap();
    let v = decide_rigidity(&mixed, &k2, 5, 0, 1e-9).unwrap();
    assert_eq!((v.status, v.rank), (RigidityStatus::MinimallyRigid, 2));
    let v = decide_rigidity(&mixed, &k4([Blue; 6]), 5, 0, 1e-9).unwrap();
    assert_eq!((v.status, v.rank, v.required_rank), (RigidityStatus::Flexible, 5, 6));
    let v = decide_rigidity(&ContextSpec::Cylinder, &BiColouredGraph::empty(1), 5, 0, 1e-9).unwrap();
    assert_eq!((v.status, v.rank), (RigidityStatus::MinimallyRigid, 1));
}

#[test]
fn k4_base_for_blue_limited_reduces_to_k1() {
    let g = k4([Blue, Blue, Red, Blue, Blue, Blue]);
    let trace = reduce_fully(&g, &SparsityClass::Tight22BlueLimited).unwrap();
    assert_eq!(trace.base, BiColouredGraph::empty(1));
    assert_eq!(trace.replay().unwrap(), g);
}

#[test]
fn red_k4_back_substitutes() {
    let red = k4([Red; 6]);
    let trace = reduce_fully(&red, &SparsityClass::Tight22BlueLimited).unwrap();
    assert_eq!(trace.replay().unwrap(), red);
    assert!(trace.steps.iter().any(|m| matches!(m, ConstructionMove::K2K2Sub { .. })));
}
