//! Construction moves on bi-coloured graphs, seeded random generation of class
//! members, and reduction search back to a base graph.
//!
//! Every move that creates vertices names the ids they receive in the output
//! (`at`, `positions`); existing ids shift up to make room. Reductions record
//! the forward move that undoes them, so a trace replays to the exact labelled
//! graph it was computed from.

use std::collections::BTreeSet;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{BiColouredGraph, Colour, ColouredEdge};
use crate::sparsity::{class_check, PebbleGame, SparsityClass, BRUTE_FORCE_LIMIT};

/// `removed -> {added[0], added[1]}` for a 1-extension, with `added` sorted.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ColourCase {
    pub removed: Colour,
    pub added: [Colour; 2],
}

impl ColourCase {
    pub fn new(removed: Colour, a: Colour, b: Colour) -> Self {
        let added = if a <= b { [a, b] } else { [b, a] };
        ColourCase { removed, added }
    }

    /// All six cases.
    pub fn all() -> [ColourCase; 6] {
        use Colour::{Blue, Red};
        [
            ColourCase::new(Red, Blue, Blue),
            ColourCase::new(Red, Blue, Red),
            ColourCase::new(Red, Red, Red),
            ColourCase::new(Blue, Blue, Blue),
            ColourCase::new(Blue, Blue, Red),
            ColourCase::new(Blue, Red, Red),
        ]
    }
}

/// An edge of a contracted vertex and the vertex of the inserted graph it is
/// re-attached to.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Attachment {
    pub neighbour: usize,
    pub colour: Colour,
    pub target: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "move", rename_all = "snake_case")]
pub enum ConstructionMove {
    /// Adds vertex `at` with an edge to each of `ends`. A repeated neighbour
    /// must get one edge of each colour.
    ZeroExt { at: usize, ends: [(usize, Colour); 2] },
    /// Deletes `removed` and adds vertex `at` joined to both of its endpoints
    /// and to `third`.
    OneExt {
        at: usize,
        removed: ColouredEdge,
        colour_u: Colour,
        colour_v: Colour,
        third: usize,
        third_colour: Colour,
    },
    /// Splits `vertex` into itself and a new vertex `at`; the edge to
    /// `neighbour` of colour `colour` is doubled and the two halves joined by
    /// a `colour` edge. Incident edges listed in `moved` go to `at`.
    VertexSplit {
        vertex: usize,
        neighbour: usize,
        colour: Colour,
        at: usize,
        moved: Vec<(usize, Colour)>,
    },
    /// Replaces `vertex` by a copy of `inserted` whose vertices get the ids
    /// `positions` (increasing) in the output.
    GraphExt {
        vertex: usize,
        inserted: BiColouredGraph,
        attachment: Vec<Attachment>,
        positions: Vec<usize>,
    },
    /// Replaces the bi-coloured pairs `xy`, `yz` by a red K4 on `x, y, z, at`.
    K2K2Sub { x: usize, y: usize, z: usize, at: usize },
}

fn illegal(msg: impl Into<String>) -> Error {
    Error::IllegalMove(msg.into())
}

fn shifter(at: usize) -> impl Fn(usize) -> usize {
    move |w| if w >= at { w + 1 } else { w }
}

fn unshifter(removed: usize) -> impl Fn(usize) -> usize {
    move |w| if w > removed { w - 1 } else { w }
}

fn reject_loops(g: &BiColouredGraph) -> Result<()> {
    match g.edges().find(|e| e.is_loop()) {
        Some(e) => Err(Error::LoopNotAllowed(format!("construction moves need loopless graphs, found {e}"))),
        None => Ok(()),
    }
}

impl ConstructionMove {
    pub fn kind(&self) -> &'static str {
        match self {
            ConstructionMove::ZeroExt { .. } => "zero_ext",
            ConstructionMove::OneExt { .. } => "one_ext",
            ConstructionMove::VertexSplit { .. } => "vertex_split",
            ConstructionMove::GraphExt { .. } => "graph_ext",
            ConstructionMove::K2K2Sub { .. } => "k2k2_sub",
        }
    }

    /// Colour case of a 1-extension.
    pub fn colour_case(&self) -> Option<ColourCase> {
        match *self {
            ConstructionMove::OneExt { removed, colour_u, colour_v, .. } => {
                Some(ColourCase::new(removed.colour, colour_u, colour_v))
            }
            _ => None,
        }
    }

    /// Applies the move, checking its structural preconditions only.
    pub fn apply(&self, g: &BiColouredGraph) -> Result<BiColouredGraph> {
        reject_loops(g)?;
        let n = g.n();
        match self {
            ConstructionMove::ZeroExt { at, ends } => {
                let at = *at;
                if at > n {
                    return Err(illegal(format!("new vertex id {at} beyond {n}")));
                }
                for &(w, _) in ends {
                    g.check_vertex(w)?;
                }
                if ends[0].0 == ends[1].0 && ends[0].1 == ends[1].1 {
                    return Err(illegal("a single-neighbour 0-extension needs one edge of each colour"));
                }
                let s = shifter(at);
                let mut h = g.insert_vertex(at)?;
                for &(w, c) in ends {
                    h.add_edge(ColouredEdge::new(s(w), at, c))?;
                }
                Ok(h)
            }
            ConstructionMove::OneExt { at, removed, colour_u, colour_v, third, third_colour } => {
                let at = *at;
                if at > n {
                    return Err(illegal(format!("new vertex id {at} beyond {n}")));
                }
                if removed.is_loop() || !g.contains(removed) {
                    return Err(illegal(format!("edge {removed} is not in the graph")));
                }
                g.check_vertex(*third)?;
                let mut h = g.clone();
                h.remove_edge(removed);
                let s = shifter(at);
                let mut h = h.insert_vertex(at)?;
                for (w, c) in [(removed.u, *colour_u), (removed.v, *colour_v), (*third, *third_colour)] {
                    h.add_edge(ColouredEdge::new(s(w), at, c))
                        .map_err(|_| illegal(format!("1-extension creates a monochrome parallel edge at {w}")))?;
                }
                Ok(h)
            }
            ConstructionMove::VertexSplit { vertex, neighbour, colour, at, moved } => {
                let (v, x, c, at) = (*vertex, *neighbour, *colour, *at);
                g.check_vertex(v)?;
                if at > n {
                    return Err(illegal(format!("new vertex id {at} beyond {n}")));
                }
                let designated = ColouredEdge::new(x, v, c);
                if x == v || !g.contains(&designated) {
                    return Err(illegal(format!("vertex split needs edge {designated}")));
                }
                let incident = g.incident(v);
                let mut moved_set = BTreeSet::new();
                for &(y, col) in moved {
                    let e = ColouredEdge::new(y, v, col);
                    if e == designated || !incident.contains(&e) || !moved_set.insert(e) {
                        return Err(illegal(format!("cannot move edge {e} in a split of {v}")));
                    }
                }
                let mut h = g.clone();
                for e in &incident {
                    h.remove_edge(e);
                }
                let s = shifter(at);
                let mut h = h.insert_vertex(at)?;
                let v1 = s(v);
                h.add_edge(ColouredEdge::new(v1, at, c))?;
                h.add_edge(ColouredEdge::new(s(x), v1, c))?;
                h.add_edge(ColouredEdge::new(s(x), at, c))?;
                for e in incident.iter().filter(|&&e| e != designated) {
                    let y = s(e.opposite(v));
                    let target = if moved_set.contains(e) { at } else { v1 };
                    h.add_edge(ColouredEdge::new(y, target, e.colour))?;
                }
                Ok(h)
            }
            ConstructionMove::GraphExt { vertex, inserted, attachment, positions } => {
                let v = *vertex;
                g.check_vertex(v)?;
                reject_loops(inserted)?;
                if inserted.deficiency() != 2 {
                    return Err(illegal(format!(
                        "graph extension needs f(H) = 2, got {}",
                        inserted.deficiency()
                    )));
                }
                let k = inserted.n();
                let m = n - 1 + k;
                if positions.len() != k
                    || positions.windows(2).any(|w| w[0] >= w[1])
                    || positions.last().is_some_and(|&p| p >= m)
                {
                    return Err(illegal(format!("positions {positions:?} invalid for {k} new vertices among {m}")));
                }
                let mut incident: BTreeSet<ColouredEdge> = g.incident(v).into_iter().collect();
                for a in attachment {
                    let e = ColouredEdge::new(a.neighbour, v, a.colour);
                    if a.target >= k || !incident.remove(&e) {
                        return Err(illegal(format!("attachment {a:?} does not match an edge of {v}")));
                    }
                }
                if let Some(e) = incident.first() {
                    return Err(illegal(format!("edge {e} of {v} has no attachment")));
                }
                let pos_set: BTreeSet<usize> = positions.iter().copied().collect();
                let rest: Vec<usize> = (0..m).filter(|p| !pos_set.contains(p)).collect();
                let old = |w: usize| rest[if w > v { w - 1 } else { w }];
                let mut h = BiColouredGraph::empty(m);
                for e in g.edges().filter(|e| !e.touches(v)) {
                    h.add_edge(e.map(old))?;
                }
                for e in inserted.edges() {
                    h.add_edge(e.map(|w| positions[w]))?;
                }
                for a in attachment {
                    h.add_edge(ColouredEdge::new(old(a.neighbour), positions[a.target], a.colour))
                        .map_err(|_| illegal("graph extension creates a monochrome parallel edge"))?;
                }
                Ok(h)
            }
            ConstructionMove::K2K2Sub { x, y, z, at } => {
                let (x, y, z, at) = (*x, *y, *z, *at);
                for w in [x, y, z] {
                    g.check_vertex(w)?;
                }
                if x == y || y == z || x == z {
                    return Err(illegal("substitution needs three distinct vertices"));
                }
                if at > n {
                    return Err(illegal(format!("new vertex id {at} beyond {n}")));
                }
                let pattern = [
                    ColouredEdge::new(x, y, Colour::Blue),
                    ColouredEdge::new(x, y, Colour::Red),
                    ColouredEdge::new(y, z, Colour::Blue),
                    ColouredEdge::new(y, z, Colour::Red),
                ];
                if let Some(e) = pattern.iter().find(|e| !g.contains(e)) {
                    return Err(illegal(format!("K2+K2 pattern at {x},{y},{z} lacks {e}")));
                }
                if g.has_edge(x, z, Colour::Red) {
                    return Err(illegal(format!("red edge {x}{z} already present")));
                }
                let mut h = g.clone();
                for e in &pattern {
                    h.remove_edge(e);
                }
                let s = shifter(at);
                let mut h = h.insert_vertex(at)?;
                let (x, y, z) = (s(x), s(y), s(z));
                for (a, b) in [(x, y), (y, z), (x, z), (x, at), (y, at), (z, at)] {
                    h.add_edge(ColouredEdge::new(a, b, Colour::Red))?;
                }
                Ok(h)
            }
        }
    }

    /// Whether the move belongs to the construction scheme of `class`
    /// (on top of its structural preconditions, checked by [`apply`]).
    ///
    /// [`apply`]: ConstructionMove::apply
    pub fn check_class_legal(&self, g: &BiColouredGraph, class: &SparsityClass) -> Result<()> {
        let not_in_scheme = || illegal(format!("{} is not a construction move for class {class}", self.kind()));
        match class {
            SparsityClass::Tight22 => match self {
                ConstructionMove::OneExt { removed, colour_u, colour_v, third, .. } => {
                    if *colour_u != removed.colour || *colour_v != removed.colour {
                        return Err(illegal("cylinder 1-extensions must be colour-restricted"));
                    }
                    if *third == removed.u || *third == removed.v {
                        return Err(illegal("cylinder 1-extensions need three distinct neighbours"));
                    }
                    Ok(())
                }
                ConstructionMove::K2K2Sub { .. } => Err(not_in_scheme()),
                _ => Ok(()),
            },
            SparsityClass::Tight22BlueLimited => match self {
                ConstructionMove::OneExt { removed, colour_u, colour_v, .. } => {
                    let case = ColourCase::new(removed.colour, *colour_u, *colour_v);
                    if case == ColourCase::new(Colour::Red, Colour::Blue, Colour::Blue) {
                        return Err(illegal("colour case r -> {b,b} is excluded"));
                    }
                    if case == ColourCase::new(Colour::Blue, Colour::Red, Colour::Red)
                        && g.has_edge(removed.u, removed.v, Colour::Red)
                    {
                        return Err(illegal("parallel-edge colour case b -> {r,r} is excluded"));
                    }
                    Ok(())
                }
                ConstructionMove::ZeroExt { .. } | ConstructionMove::K2K2Sub { .. } => Ok(()),
                _ => Err(not_in_scheme()),
            },
            SparsityClass::Tight23 => match self {
                ConstructionMove::ZeroExt { ends, .. } if ends[0].0 != ends[1].0 => Ok(()),
                ConstructionMove::OneExt { removed, third, .. } if *third != removed.u && *third != removed.v => {
                    Ok(())
                }
                _ => Err(not_in_scheme()),
            },
            _ => Err(illegal(format!("no construction scheme for class {class}"))),
        }
    }
}

/// A base graph and the forward moves that build the target from it.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConstructionTrace {
    pub base: BiColouredGraph,
    pub steps: Vec<ConstructionMove>,
}

impl ConstructionTrace {
    pub fn replay(&self) -> Result<BiColouredGraph> {
        Ok(self.replay_all()?.pop().expect("replay yields the base at least"))
    }

    /// The base followed by the graph after every step.
    pub fn replay_all(&self) -> Result<Vec<BiColouredGraph>> {
        let mut graphs = vec![self.base.clone()];
        for step in &self.steps {
            let next = step.apply(graphs.last().expect("nonempty"))?;
            graphs.push(next);
        }
        Ok(graphs)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("trace serialization is infallible")
    }

    pub fn parse(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

pub fn zero_extension(g: &BiColouredGraph, ends: [(usize, Colour); 2]) -> Result<BiColouredGraph> {
    ConstructionMove::ZeroExt { at: g.n(), ends }.apply(g)
}

/// A 1-extension on `removed` with the new vertex appended; `colour_u`,
/// `colour_v` colour the edges to `removed.u`, `removed.v`.
pub fn one_extension(
    g: &BiColouredGraph,
    removed: ColouredEdge,
    colours: (Colour, Colour),
    third: (usize, Colour),
    class: &SparsityClass,
) -> Result<BiColouredGraph> {
    let mv = ConstructionMove::OneExt {
        at: g.n(),
        removed: ColouredEdge::new(removed.u, removed.v, removed.colour),
        colour_u: colours.0,
        colour_v: colours.1,
        third: third.0,
        third_colour: third.1,
    };
    mv.check_class_legal(g, class)?;
    mv.apply(g)
}

pub fn vertex_split(
    g: &BiColouredGraph,
    vertex: usize,
    neighbour: usize,
    moved: &[(usize, Colour)],
    colour: Colour,
) -> Result<BiColouredGraph> {
    ConstructionMove::VertexSplit { vertex, neighbour, colour, at: g.n(), moved: moved.to_vec() }.apply(g)
}

/// Replaces `vertex` by `inserted`, whose vertices are appended after the
/// remaining vertices of `g`.
pub fn graph_extension(
    g: &BiColouredGraph,
    vertex: usize,
    inserted: &BiColouredGraph,
    attachment: &[Attachment],
) -> Result<BiColouredGraph> {
    let start = g.n().saturating_sub(1);
    ConstructionMove::GraphExt {
        vertex,
        inserted: inserted.clone(),
        attachment: attachment.to_vec(),
        positions: (start..start + inserted.n()).collect(),
    }
    .apply(g)
}

pub fn k2k2_substitute(g: &BiColouredGraph, x: usize, y: usize, z: usize) -> Result<BiColouredGraph> {
    ConstructionMove::K2K2Sub { x, y, z, at: g.n() }.apply(g)
}

/// `(x, y, z)` with bi-coloured pairs `xy`, `yz`, `x < z`, and no red `xz`.
pub fn k2k2_patterns(g: &BiColouredGraph) -> Vec<(usize, usize, usize)> {
    let mut out = Vec::new();
    for y in 0..g.n() {
        let doubled: Vec<usize> = g
            .neighbours(y)
            .into_iter()
            .filter(|&w| g.has_edge(y, w, Colour::Blue) && g.has_edge(y, w, Colour::Red))
            .collect();
        for (i, &x) in doubled.iter().enumerate() {
            for &z in &doubled[i + 1..] {
                if !g.has_edge(x, z, Colour::Red) {
                    out.push((x, y, z));
                }
            }
        }
    }
    out
}

fn random_colour(rng: &mut ChaCha8Rng) -> Colour {
    if rng.random_bool(0.5) {
        Colour::Blue
    } else {
        Colour::Red
    }
}

/// A K4 (pairs in lexicographic order) with at least five edges of one colour.
fn random_k4_base(rng: &mut ChaCha8Rng) -> BiColouredGraph {
    let major = random_colour(rng);
    let minority = if rng.random_bool(0.5) { Some(rng.random_range(0..6)) } else { None };
    random_k4_with(|i| if Some(i) == minority { major.other() } else { major })
}

fn random_k4_with(colour_of: impl Fn(usize) -> Colour) -> BiColouredGraph {
    let pairs = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];
    BiColouredGraph::from_edges(4, pairs.iter().enumerate().map(|(i, &(u, v))| (u, v, colour_of(i))))
        .expect("K4 is monochrome simple")
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
enum MoveKind {
    Zero,
    One,
    Split,
    GraphExt,
    Sub,
}

fn move_kinds(class: &SparsityClass) -> Result<&'static [MoveKind]> {
    match class {
        SparsityClass::Tight22 => Ok(&[MoveKind::Zero, MoveKind::One, MoveKind::Split, MoveKind::GraphExt]),
        SparsityClass::Tight22BlueLimited => Ok(&[MoveKind::Zero, MoveKind::One, MoveKind::Sub]),
        SparsityClass::Tight23 => Ok(&[MoveKind::Zero, MoveKind::One]),
        _ => Err(illegal(format!("no construction scheme for class {class}"))),
    }
}

fn draw_move(
    kind: MoveKind,
    g: &BiColouredGraph,
    class: &SparsityClass,
    budget: usize,
    rng: &mut ChaCha8Rng,
) -> Option<ConstructionMove> {
    let n = g.n();
    let edges: Vec<ColouredEdge> = g.edges().copied().collect();
    match kind {
        MoveKind::Zero => {
            let a = rng.random_range(0..n);
            let b = rng.random_range(0..n);
            let ends = if a == b {
                let c = random_colour(rng);
                [(a, c), (a, c.other())]
            } else {
                [(a, random_colour(rng)), (b, random_colour(rng))]
            };
            Some(ConstructionMove::ZeroExt { at: n, ends })
        }
        MoveKind::One => {
            let &removed = edges.choose(rng)?;
            let (colour_u, colour_v) = if *class == SparsityClass::Tight22 {
                (removed.colour, removed.colour)
            } else {
                (random_colour(rng), random_colour(rng))
            };
            Some(ConstructionMove::OneExt {
                at: n,
                removed,
                colour_u,
                colour_v,
                third: rng.random_range(0..n),
                third_colour: random_colour(rng),
            })
        }
        MoveKind::Split => {
            let &designated = edges.choose(rng)?;
            let v = if rng.random_bool(0.5) { designated.u } else { designated.v };
            let moved = g
                .incident(v)
                .into_iter()
                .filter(|&e| e != designated && rng.random_bool(0.5))
                .map(|e| (e.opposite(v), e.colour))
                .collect();
            Some(ConstructionMove::VertexSplit {
                vertex: v,
                neighbour: designated.opposite(v),
                colour: designated.colour,
                at: n,
                moved,
            })
        }
        MoveKind::GraphExt => {
            let inserted = if budget >= 3 && rng.random_bool(0.5) {
                let colours: Vec<Colour> = (0..6).map(|_| random_colour(rng)).collect();
                random_k4_with(|i| colours[i])
            } else {
                BiColouredGraph::complete(2, false)
            };
            let v = rng.random_range(0..n);
            let attachment = g
                .incident(v)
                .into_iter()
                .map(|e| Attachment {
                    neighbour: e.opposite(v),
                    colour: e.colour,
                    target: rng.random_range(0..inserted.n()),
                })
                .collect();
            let k = inserted.n();
            Some(ConstructionMove::GraphExt { vertex: v, inserted, attachment, positions: (n - 1..n - 1 + k).collect() })
        }
        MoveKind::Sub => {
            let &(x, y, z) = k2k2_patterns(g).choose(rng)?;
            Some(ConstructionMove::K2K2Sub { x, y, z, at: n })
        }
    }
}

fn added_vertices(mv: &ConstructionMove) -> usize {
    match mv {
        ConstructionMove::GraphExt { inserted, .. } => inserted.n() - 1,
        _ => 1,
    }
}

/// Builds a member of `class` on `n_target` vertices by random forward moves.
///
/// Supported classes: `Tight22` (0-extensions, colour-restricted 1-extensions,
/// colour-restricted vertex splits, graph extensions by a bi-coloured K2 or a
/// coloured K4), `Tight22BlueLimited` (0-extensions, 1-extensions outside the
/// excluded colour cases, K2+K2 substitutions) and `Tight23` (Henneberg moves
/// on simple graphs, random colours).
pub fn random_construct(
    class: &SparsityClass,
    n_target: usize,
    seed: u64,
) -> Result<(BiColouredGraph, ConstructionTrace)> {
    let kinds = move_kinds(class)?;
    if n_target == 0 {
        return Err(illegal("target size must be at least 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let base = match class {
        SparsityClass::Tight22 if n_target >= 4 && rng.random_bool(0.5) => random_k4_base(&mut rng),
        SparsityClass::Tight23 => {
            if n_target < 2 {
                return Err(illegal("(2,3)-tight graphs need at least two vertices"));
            }
            BiColouredGraph::from_edges(2, [(0, 1, random_colour(&mut rng))])?
        }
        _ => BiColouredGraph::empty(1),
    };
    let mut g = base.clone();
    let mut steps = Vec::new();
    while g.n() < n_target {
        let budget = n_target - g.n();
        let kind = *kinds.choose(&mut rng).expect("nonempty move set");
        for _ in 0..64 {
            let Some(mv) = draw_move(kind, &g, class, budget, &mut rng) else { break };
            if added_vertices(&mv) > budget || mv.check_class_legal(&g, class).is_err() {
                continue;
            }
            if let Ok(next) = mv.apply(&g) {
                g = next;
                steps.push(mv);
                break;
            }
        }
    }
    Ok((g.clone(), ConstructionTrace { base, steps }))
}

/// Outcome of a single reduction search.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Reduction {
    /// The graph is a base of its class.
    Base,
    /// `forward` applied to `reduced` gives back the input graph.
    Step { reduced: BiColouredGraph, forward: ConstructionMove },
}

fn is_base(g: &BiColouredGraph, class: &SparsityClass) -> bool {
    match class {
        SparsityClass::Tight23 => g.n() == 2 && g.edge_count() == 1,
        SparsityClass::Tight22 => {
            g.n() == 1
                || (g.n() == 4
                    && g.edge_count() == 6
                    && g.neighbours(0).len() == 3
                    && (0..4).all(|v| g.neighbours(v).len() == 3)
                    && Colour::ALL.iter().any(|&c| g.colour_count(c) >= 5))
        }
        _ => g.n() == 1,
    }
}

struct Search<'a> {
    g: &'a BiColouredGraph,
    class: &'a SparsityClass,
}

impl Search<'_> {
    fn accept(&self, reduced: BiColouredGraph, forward: ConstructionMove) -> Option<Reduction> {
        forward.check_class_legal(&reduced, self.class).ok()?;
        if !class_check(&reduced, self.class).ok()?.verdict {
            return None;
        }
        debug_assert_eq!(forward.apply(&reduced).ok().as_ref(), Some(self.g), "forward move must invert the reduction");
        Some(Reduction::Step { reduced, forward })
    }

    fn vertices_of_degree(&self, d: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.g.n()).filter(move |&v| self.g.degree(v) == d)
    }

    fn zero_reduction(&self) -> Option<Reduction> {
        for v in self.vertices_of_degree(2) {
            let e = self.g.incident(v);
            let down = unshifter(v);
            let ends = [(down(e[0].opposite(v)), e[0].colour), (down(e[1].opposite(v)), e[1].colour)];
            let reduced = self.g.remove_vertex(v).ok()?;
            if let Some(r) = self.accept(reduced, ConstructionMove::ZeroExt { at: v, ends }) {
                return Some(r);
            }
        }
        None
    }

    fn one_reduction(&self) -> Option<Reduction> {
        for v in self.vertices_of_degree(3) {
            let incident = self.g.incident(v);
            let down = unshifter(v);
            let mut candidates = Vec::new();
            for third in 0..3 {
                let pair: Vec<ColouredEdge> = (0..3).filter(|&i| i != third).map(|i| incident[i]).collect();
                let (a, b) = (pair[0].opposite(v), pair[1].opposite(v));
                if a == b {
                    continue;
                }
                let (ex, ey) = if a < b { (pair[0], pair[1]) } else { (pair[1], pair[0]) };
                let (x, y) = (a.min(b), a.max(b));
                for c in Colour::ALL {
                    if !self.g.has_edge(x, y, c) {
                        candidates.push(((x, y, c), ex.colour, ey.colour, incident[third]));
                    }
                }
            }
            candidates.sort_by_key(|&(key, ..)| key);
            for ((x, y, c), colour_u, colour_v, third_edge) in candidates {
                let Ok(mut reduced) = self.g.remove_vertex(v) else { continue };
                let removed = ColouredEdge::new(down(x), down(y), c);
                if reduced.add_edge(removed).is_err() {
                    continue;
                }
                let forward = ConstructionMove::OneExt {
                    at: v,
                    removed,
                    colour_u,
                    colour_v,
                    third: down(third_edge.opposite(v)),
                    third_colour: third_edge.colour,
                };
                if let Some(r) = self.accept(reduced, forward) {
                    return Some(r);
                }
            }
        }
        None
    }

    /// Inverse K2+K2 substitution at a degree-3 vertex of a red K4.
    fn back_substitution(&self) -> Option<Reduction> {
        let g = self.g;
        for v in self.vertices_of_degree(3) {
            let incident = g.incident(v);
            if incident.iter().any(|e| e.colour != Colour::Red) {
                continue;
            }
            let nbrs: Vec<usize> = incident.iter().map(|e| e.opposite(v)).collect();
            if nbrs.iter().collect::<BTreeSet<_>>().len() != 3 {
                continue;
            }
            let [a, b, c] = [nbrs[0], nbrs[1], nbrs[2]];
            if ![(a, b), (a, c), (b, c)].iter().all(|&(p, q)| g.has_edge(p, q, Colour::Red)) {
                continue;
            }
            for (mid, p, q) in [(a, b, c), (b, a, c), (c, a, b)] {
                if g.has_edge(p, mid, Colour::Blue) || g.has_edge(mid, q, Colour::Blue) {
                    continue;
                }
                let mut h = g.clone();
                h.remove_edge(&ColouredEdge::new(p, q, Colour::Red));
                h.add_edge(ColouredEdge::new(p, mid, Colour::Blue)).ok()?;
                h.add_edge(ColouredEdge::new(mid, q, Colour::Blue)).ok()?;
                let Ok(reduced) = h.remove_vertex(v) else { continue };
                let down = unshifter(v);
                let forward = ConstructionMove::K2K2Sub { x: down(p), y: down(mid), z: down(q), at: v };
                if let Some(r) = self.accept(reduced, forward) {
                    return Some(r);
                }
            }
        }
        None
    }

    /// Contracts the edge `ab` of a monochrome triangle `abz`.
    fn triangle_contraction(&self) -> Option<Reduction> {
        let g = self.g;
        for &e in g.edges() {
            let (a, b, c) = (e.u, e.v, e.colour);
            for z in 0..g.n() {
                if z == a || z == b || !g.has_edge(a, z, c) || !g.has_edge(b, z, c) {
                    continue;
                }
                let mut h = g.clone();
                let b_edges = g.incident(b);
                for f in &b_edges {
                    h.remove_edge(f);
                }
                let mut moved = Vec::new();
                let mut ok = true;
                for f in &b_edges {
                    let y = f.opposite(b);
                    if (y == a && f.colour == c) || (y == z && f.colour == c) {
                        continue;
                    }
                    if y == a || h.add_edge(ColouredEdge::new(y, a, f.colour)).is_err() {
                        ok = false;
                        break;
                    }
                    moved.push((y, f.colour));
                }
                if !ok {
                    continue;
                }
                let Ok(reduced) = h.remove_vertex(b) else { continue };
                let down = unshifter(b);
                let forward = ConstructionMove::VertexSplit {
                    vertex: down(a),
                    neighbour: down(z),
                    colour: c,
                    at: b,
                    moved: moved.into_iter().map(|(y, col)| (down(y), col)).collect(),
                };
                if let Some(r) = self.accept(reduced, forward) {
                    return Some(r);
                }
            }
        }
        None
    }

    fn contract_set(&self, set: &BTreeSet<usize>) -> Option<Reduction> {
        let g = self.g;
        let rest: Vec<usize> = (0..g.n()).filter(|w| !set.contains(w)).collect();
        let first = *set.first()?;
        let w = rest.iter().filter(|&&r| r < first).count();
        let index_of = |r: usize| {
            let k = rest.binary_search(&r).expect("vertex outside the contracted set");
            if k < w {
                k
            } else {
                k + 1
            }
        };
        let members: Vec<usize> = set.iter().copied().collect();
        let mut reduced = BiColouredGraph::empty(rest.len() + 1);
        let mut attachment = Vec::new();
        for e in g.edges() {
            match (set.contains(&e.u), set.contains(&e.v)) {
                (false, false) => reduced.add_edge(e.map(index_of)).ok()?,
                (true, true) => {}
                (inside_u, _) => {
                    let (s, y) = if inside_u { (e.u, e.v) } else { (e.v, e.u) };
                    reduced.add_edge(ColouredEdge::new(index_of(y), w, e.colour)).ok()?;
                    attachment.push(Attachment {
                        neighbour: index_of(y),
                        colour: e.colour,
                        target: members.binary_search(&s).expect("member"),
                    });
                }
            }
        }
        let inserted = g.induced(set).to_graph();
        let forward = ConstructionMove::GraphExt { vertex: w, inserted, attachment, positions: members };
        self.accept(reduced, forward)
    }

    fn graph_contraction(&self) -> Option<Reduction> {
        let g = self.g;
        let n = g.n();
        let (mut game, rejected) = PebbleGame::run(g, 2);
        if rejected.is_some() {
            return None;
        }
        let mut blocks = BTreeSet::new();
        for x in 0..n {
            for y in x + 1..n {
                if let Some(block) = game.tight_block(x, y) {
                    if block.len() >= 2 && block.len() < n {
                        blocks.insert((block.len(), block.into_iter().collect::<Vec<_>>()));
                    }
                }
            }
        }
        for (_, block) in &blocks {
            if let Some(r) = self.contract_set(&block.iter().copied().collect()) {
                return Some(r);
            }
        }
        if n > BRUTE_FORCE_LIMIT {
            return None;
        }
        // Exhaustive fallback over every proper vertex subset with f = 2.
        let mut subsets: Vec<BTreeSet<usize>> = (1u32..(1 << n) - 1)
            .filter(|m| m.count_ones() >= 2)
            .map(|m| (0..n).filter(|&i| m >> i & 1 == 1).collect::<BTreeSet<usize>>())
            .filter(|s| g.induced(s).deficiency() == 2)
            .filter(|s| !blocks.contains(&(s.len(), s.iter().copied().collect())))
            .collect();
        subsets.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
        subsets.iter().find_map(|s| self.contract_set(s))
    }
}

/// Finds one reduction step of a class member towards a base graph.
///
/// Search order: 0-reduction at the lowest-id degree-2 vertex, 1-reductions at
/// degree-3 vertices (added edge in lexicographic order), then the class's
/// special reductions: K4 back-substitution for `Tight22BlueLimited`;
/// triangle edge contraction and graph contraction for `Tight22`.
pub fn find_reduction(g: &BiColouredGraph, class: &SparsityClass) -> Result<Reduction> {
    move_kinds(class)?;
    if !class_check(g, class)?.verdict {
        return Err(Error::NotInClass(format!("{class}: {g}")));
    }
    if is_base(g, class) {
        return Ok(Reduction::Base);
    }
    let search = Search { g, class };
    let found = search.zero_reduction().or_else(|| search.one_reduction()).or_else(|| match class {
        SparsityClass::Tight22BlueLimited => search.back_substitution(),
        SparsityClass::Tight22 => search.triangle_contraction().or_else(|| search.graph_contraction()),
        _ => None,
    });
    found.ok_or_else(|| Error::ReductionExhausted { class: class.name(), graph: g.to_json() })
}

/// Reduces `g` to a base; replaying the returned trace rebuilds `g` exactly.
pub fn reduce_fully(g: &BiColouredGraph, class: &SparsityClass) -> Result<ConstructionTrace> {
    let mut current = g.clone();
    let mut steps = Vec::new();
    loop {
        match find_reduction(&current, class)? {
            Reduction::Base => break,
            Reduction::Step { reduced, forward } => {
                steps.push(forward);
                current = reduced;
            }
        }
    }
    steps.reverse();
    Ok(ConstructionTrace { base: current, steps })
}
