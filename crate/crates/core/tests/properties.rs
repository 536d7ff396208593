use nalgebra::DMatrix;
use proptest::prelude::*;

use rigidity_core::contexts::{assemble, random_placement, trivial_flex_basis, ContextSpec};
use rigidity_core::graph::{BiColouredGraph, Colour, ColouredEdge};
use rigidity_core::moves::{find_reduction, random_construct, reduce_fully, ConstructionTrace, Reduction};
use rigidity_core::numeric::{
    decide_rigidity, generic_placement, nullspace_basis, numerical_rank, trial_seed, RigidityStatus,
};
use rigidity_core::sparsity::{brute_force_sparse, class_check, is_23_circuit, is_sparse, is_tight, SparsityClass};

const TOL: f64 = 1e-9;

fn universe(n: usize, loops: bool) -> Vec<ColouredEdge> {
    BiColouredGraph::complete(n, loops).edges().copied().collect()
}

prop_compose! {
    fn graph(max_n: usize, loops: bool)(n in 1..=max_n)
        (mask in proptest::collection::vec(any::<bool>(), universe(n, loops).len()), n in Just(n)) -> BiColouredGraph {
        let edges = universe(n, loops).into_iter().zip(mask).filter(|(_, keep)| *keep).map(|(e, _)| e);
        BiColouredGraph::from_edges(n, edges).unwrap()
    }
}

prop_compose! {
    /// Sparser random graphs, closer to the tight boundary.
    fn thin_graph(max_n: usize)(n in 2..=max_n)
        (picks in proptest::collection::vec(any::<prop::sample::Index>(), 0..=2 * n), n in Just(n)) -> BiColouredGraph {
        let all = universe(n, false);
        let edges: Vec<ColouredEdge> = picks.iter().map(|i| all[i.index(all.len())]).collect();
        let mut g = BiColouredGraph::empty(n);
        for e in edges {
            let _ = g.add_edge(e);
        }
        g
    }
}

fn without(g: &BiColouredGraph, e: &ColouredEdge) -> BiColouredGraph {
    let mut h = g.clone();
    h.remove_edge(e);
    h
}

fn construction_class() -> impl Strategy<Value = SparsityClass> {
    prop_oneof![Just(SparsityClass::Tight22), Just(SparsityClass::Tight22BlueLimited), Just(SparsityClass::Tight23)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn pebble_game_agrees_with_enumeration(g in graph(6, false), l in 1u8..=3) {
        prop_assert_eq!(is_sparse(&g, l).unwrap().verdict, brute_force_sparse(&g, l).unwrap());
    }

    #[test]
    fn pebble_game_agrees_on_thin_graphs(g in thin_graph(8), l in 1u8..=3) {
        prop_assert_eq!(is_sparse(&g, l).unwrap().verdict, brute_force_sparse(&g, l).unwrap());
    }

    #[test]
    fn loops_only_count_for_l_one(g in graph(4, true)) {
        prop_assert_eq!(is_sparse(&g, 1).unwrap().verdict, brute_force_sparse(&g, 1).unwrap());
        if g.has_loops() {
            prop_assert!(is_sparse(&g, 2).is_err());
            prop_assert!(is_sparse(&g, 3).is_err());
        }
    }

    #[test]
    fn witnesses_violate_the_count(g in graph(6, false), l in 1u8..=3) {
        let report = is_sparse(&g, l).unwrap();
        prop_assert_eq!(report.verdict, report.witness.is_none());
        if let Some(w) = report.witness {
            prop_assert!(w.edges.len() as i64 > 2 * w.vertices.len() as i64 - l as i64);
            for e in &w.edges {
                prop_assert!(g.contains(e));
                prop_assert!(w.vertices.contains(&e.u) && w.vertices.contains(&e.v));
            }
        }
    }

    #[test]
    fn sparsity_is_hereditary(g in thin_graph(8), l in 1u8..=3) {
        if is_sparse(&g, l).unwrap().verdict {
            for e in g.edges() {
                prop_assert!(is_sparse(&without(&g, e), l).unwrap().verdict);
            }
            for v in 0..g.n() {
                prop_assert!(is_sparse(&g.remove_vertex(v).unwrap(), l).unwrap().verdict);
            }
        }
    }

    #[test]
    fn sparsity_is_monotone_in_l(g in graph(6, false)) {
        let v: Vec<bool> = (1..=3).map(|l| is_sparse(&g, l).unwrap().verdict).collect();
        prop_assert!(!v[2] || v[1]);
        prop_assert!(!v[1] || v[0]);
    }

    #[test]
    fn sparsity_ignores_labels(g in thin_graph(7), l in 1u8..=3, rot in 0usize..7) {
        let n = g.n();
        let perm: Vec<usize> = (0..n).map(|i| (i + rot) % n).collect();
        let h = g.relabel(&perm).unwrap();
        prop_assert_eq!(is_sparse(&g, l).unwrap().verdict, is_sparse(&h, l).unwrap().verdict);
    }

    #[test]
    fn circuits_are_tight_with_degree_three(g in thin_graph(7)) {
        if is_23_circuit(&g) {
            prop_assert!(is_tight(&g, 2).unwrap());
            if g.n() >= 4 {
                prop_assert!((0..g.n()).all(|v| g.degree(v) >= 3));
            }
        }
    }

    #[test]
    fn graph_files_round_trip(g in graph(5, true)) {
        let text = g.to_json();
        let back = BiColouredGraph::parse(&text).unwrap();
        prop_assert_eq!(back.to_json(), text);
        prop_assert_eq!(back, g);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn constructions_stay_in_class_and_replay(class in construction_class(), n in 2usize..=9, seed in any::<u64>()) {
        let (g, trace) = random_construct(&class, n, seed).unwrap();
        prop_assert_eq!(g.n(), n);
        prop_assert!(!g.has_loops());
        let chain = trace.replay_all().unwrap();
        prop_assert_eq!(chain.last().unwrap(), &g);
        for h in &chain {
            prop_assert!(class_check(h, &class).unwrap().verdict, "{} left {}", h, class);
        }
        for w in chain.windows(2) {
            prop_assert!(w[1].n() > w[0].n());
        }
        let parsed = ConstructionTrace::parse(&trace.to_json()).unwrap();
        prop_assert_eq!(parsed, trace);
    }

    #[test]
    fn reductions_shrink_and_invert(class in construction_class(), n in 2usize..=9, seed in any::<u64>()) {
        let (g, _) = random_construct(&class, n, seed).unwrap();
        match find_reduction(&g, &class).unwrap() {
            Reduction::Base => prop_assert!(g.n() <= 4),
            Reduction::Step { reduced, forward } => {
                prop_assert!(reduced.n() < g.n());
                prop_assert!(class_check(&reduced, &class).unwrap().verdict);
                prop_assert_eq!(forward.apply(&reduced).unwrap(), g.clone());
            }
        }
        let trace = reduce_fully(&g, &class).unwrap();
        prop_assert_eq!(trace.replay().unwrap(), g);
    }

    #[test]
    fn rank_ignores_row_order_and_scale(rows in 1usize..12, cols in 1usize..12, seed in any::<u64>(), scales in proptest::collection::vec(0.01f64..100.0, 12)) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let base = DMatrix::from_fn(rows.min(cols).max(1), cols, |_, _| rng.random_range(-1.0..1.0));
        let m = DMatrix::from_fn(rows, cols, |r, c| {
            let k = r % base.nrows();
            base[(k, c)] * (1.0 + r as f64 / 7.0)
        });
        let rank = numerical_rank(&m, TOL).unwrap().rank;
        let scaled = DMatrix::from_fn(rows, cols, |r, c| m[(r, c)] * scales[r]);
        prop_assert_eq!(numerical_rank(&scaled, TOL).unwrap().rank, rank);
        let reversed = DMatrix::from_fn(rows, cols, |r, c| m[(rows - 1 - r, c)]);
        prop_assert_eq!(numerical_rank(&reversed, TOL).unwrap().rank, rank);
        let kernel = nullspace_basis(&m, TOL).unwrap();
        prop_assert_eq!(kernel.ncols(), cols - rank);
        prop_assert!((&m * &kernel).amax() < 1e-8);
    }
}

fn contexts() -> Vec<ContextSpec> {
    vec![
        ContextSpec::Cylinder,
        ContextSpec::Sphere,
        ContextSpec::MixedLqPlane { q: 3.0 },
        ContextSpec::MixedLqPlane { q: 1.5 },
        ContextSpec::DirectionLengthEuclidean,
        ContextSpec::DirectionLengthLq { q: 3.0 },
        ContextSpec::Separable { blocks: vec![1, 1] },
        ContextSpec::Separable { blocks: vec![2, 1] },
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn rows_monotone_under_edge_changes(g in thin_graph(6), ctx in proptest::sample::select(contexts()), seed in any::<u64>()) {
        let p = generic_placement(&ctx, &BiColouredGraph::complete(g.n(), false), seed).unwrap();
        let rank = |h: &BiColouredGraph| numerical_rank(&assemble(&ctx, h, &p).unwrap().matrix, TOL).unwrap().rank;
        let r = rank(&g);
        for e in g.edges() {
            let smaller = rank(&without(&g, e));
            prop_assert!(smaller <= r && smaller + 1 >= r);
        }
        let m = assemble(&ctx, &g, &p).unwrap().matrix;
        let t = trivial_flex_basis(&ctx, &p).unwrap();
        prop_assert_eq!(t.ncols(), ctx.trivial_dim_for(g.n()));
        prop_assert!((&m * &t).amax() < 1e-9);
    }

    #[test]
    fn minimally_rigid_rows_are_independent(class_ctx in proptest::sample::select(vec![
        (SparsityClass::Tight22, ContextSpec::Cylinder),
        (SparsityClass::Tight23, ContextSpec::Sphere),
        (SparsityClass::Tight22BlueLimited, ContextSpec::MixedLqPlane { q: 3.0 }),
        (SparsityClass::Tight22BlueLimited, ContextSpec::DirectionLengthLq { q: 3.0 }),
    ]), n in 2usize..=8, seed in any::<u64>()) {
        let (class, ctx) = class_ctx;
        let (g, _) = random_construct(&class, n, seed).unwrap();
        let v = decide_rigidity(&ctx, &g, 16, seed, TOL).unwrap();
        prop_assert_eq!(v.status, RigidityStatus::MinimallyRigid);
        let best = v.trial_ranks.iter().position(|&r| r == v.rank).unwrap() as u64;
        let p = generic_placement(&ctx, &g, trial_seed(seed, best)).unwrap();
        let m = assemble(&ctx, &g, &p).unwrap();
        let full = numerical_rank(&m.matrix, TOL).unwrap().rank;
        prop_assert_eq!(full, v.required_rank);
        for r in 0..g.edge_count() {
            prop_assert_eq!(numerical_rank(&m.without_row(r).matrix, TOL).unwrap().rank, full - 1);
        }
        prop_assert_eq!(nullspace_basis(&m.matrix, TOL).unwrap().ncols(), ctx.trivial_dim_for(n));
    }

    #[test]
    fn decisions_repeat_per_seed(g in thin_graph(6), ctx in proptest::sample::select(contexts()), seed in any::<u64>()) {
        let a = decide_rigidity(&ctx, &g, 2, seed, TOL).unwrap();
        let b = decide_rigidity(&ctx, &g, 2, seed, TOL).unwrap();
        prop_assert_eq!(a, b);
        prop_assert_eq!(random_placement(&ctx, g.n(), seed).unwrap(), random_placement(&ctx, g.n(), seed).unwrap());
    }
}

#[test]
fn colours_are_symmetric_for_tight_counts() {
    for seed in 0..20 {
        let (g, _) = random_construct(&SparsityClass::Tight22, 7, seed).unwrap();
        let swapped = BiColouredGraph::from_edges(
            g.n(),
            g.edges().map(|e| ColouredEdge::new(e.u, e.v, e.colour.other())),
        )
        .unwrap();
        assert!(is_tight(&swapped, 2).unwrap());
        assert_eq!(g.colour_count(Colour::Blue), swapped.colour_count(Colour::Red));
    }
}
