//! (2,l)-sparsity certification by the pebble game, the mixed classes built on
//! top of it, and an enumeration oracle for small graphs.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{BiColouredGraph, Colour, ColouredEdge, Subgraph};

/// Largest vertex count accepted by [`brute_force_sparse`].
pub const BRUTE_FORCE_LIMIT: usize = 12;

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum SparsityClass {
    /// (2,3)-tight: frameworks on the sphere.
    Tight23,
    /// (2,2)-tight: frameworks on the cylinder.
    Tight22,
    /// (2,2)-tight with a (2,3)-sparse blue subgraph.
    Tight22BlueLimited,
    /// (2,2)-tight with both monochrome subgraphs (2,3)-sparse.
    Tight22MonoLimited,
    /// One block per colour (blue first); a block of dimension 1 needs a
    /// monochrome spanning tree, one of dimension 2 a (2,3)-tight subgraph.
    Separable { blocks: Vec<u8> },
}

impl SparsityClass {
    pub fn separable(blocks: &[u8]) -> Result<Self> {
        if blocks.len() != 2 || blocks.iter().any(|&d| d != 1 && d != 2) {
            return Err(Error::InvalidContext(format!(
                "separable classes need exactly two blocks of dimension 1 or 2, got {blocks:?}"
            )));
        }
        Ok(SparsityClass::Separable { blocks: blocks.to_vec() })
    }

    pub fn name(&self) -> String {
        match self {
            SparsityClass::Tight23 => "tight23".into(),
            SparsityClass::Tight22 => "tight22".into(),
            SparsityClass::Tight22BlueLimited => "tight22-blue-limited".into(),
            SparsityClass::Tight22MonoLimited => "tight22-mono-limited".into(),
            SparsityClass::Separable { blocks } => {
                let dims: Vec<String> = blocks.iter().map(u8::to_string).collect();
                format!("separable:{}", dims.join(","))
            }
        }
    }
}

impl fmt::Display for SparsityClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl FromStr for SparsityClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tight23" | "sphere" => Ok(SparsityClass::Tight23),
            "tight22" | "cylinder" => Ok(SparsityClass::Tight22),
            "tight22-blue-limited" | "mixed" | "blue-limited" => Ok(SparsityClass::Tight22BlueLimited),
            "tight22-mono-limited" | "mono-limited" => Ok(SparsityClass::Tight22MonoLimited),
            _ => {
                let dims = s
                    .strip_prefix("separable:")
                    .ok_or_else(|| Error::InvalidContext(format!("unknown sparsity class {s:?}")))?;
                let blocks = dims
                    .split(',')
                    .map(|d| d.trim().parse::<u8>())
                    .collect::<std::result::Result<Vec<_>, _>>()
                    .map_err(|e| Error::InvalidContext(format!("bad block list {dims:?}: {e}")))?;
                SparsityClass::separable(&blocks)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SparsityReport {
    pub verdict: bool,
    pub witness: Option<Subgraph>,
}

impl SparsityReport {
    fn pass() -> Self {
        SparsityReport { verdict: true, witness: None }
    }

    fn fail(witness: Subgraph) -> Self {
        SparsityReport { verdict: false, witness: Some(witness) }
    }
}

/// The (2,l) pebble game on a multigraph.
///
/// Each vertex starts with two pebbles. An accepted edge is oriented away from
/// the vertex whose pebble it consumed.
pub(crate) struct PebbleGame {
    l: usize,
    pebbles: Vec<u8>,
    /// Accepted edges as (tail, head, edge).
    arcs: Vec<(usize, usize, ColouredEdge)>,
    out: Vec<Vec<usize>>,
}

impl PebbleGame {
    pub(crate) fn new(n: usize, l: usize) -> Self {
        PebbleGame { l, pebbles: vec![2; n], arcs: Vec::new(), out: vec![Vec::new(); n] }
    }

    /// Runs the game over `g`'s edges in canonical order; returns the first
    /// rejected edge, if any.
    pub(crate) fn run(g: &BiColouredGraph, l: usize) -> (Self, Option<ColouredEdge>) {
        let mut game = PebbleGame::new(g.n(), l);
        for &e in g.edges() {
            if !game.try_insert(e) {
                return (game, Some(e));
            }
        }
        (game, None)
    }

    fn pebbles_on(&self, u: usize, v: usize) -> usize {
        if u == v {
            self.pebbles[u] as usize
        } else {
            (self.pebbles[u] + self.pebbles[v]) as usize
        }
    }

    /// Searches from `start` for a free pebble (never taking one from
    /// `start` or `blocked`) and moves it to `start` by reversing the path.
    fn fetch_pebble(&mut self, start: usize, blocked: usize) -> bool {
        let n = self.pebbles.len();
        let mut visited = vec![false; n];
        let mut parent_arc: Vec<Option<usize>> = vec![None; n];
        visited[start] = true;
        visited[blocked] = true;
        let mut stack = vec![start];
        let mut found = None;
        'search: while let Some(x) = stack.pop() {
            let mut next: Vec<(usize, usize)> = self.out[x].iter().map(|&a| (self.arcs[a].1, a)).collect();
            // Pushed in reverse so the lowest head id is explored first.
            next.sort_unstable_by(|a, b| b.cmp(a));
            for (head, arc) in next {
                if visited[head] {
                    continue;
                }
                visited[head] = true;
                parent_arc[head] = Some(arc);
                if self.pebbles[head] > 0 {
                    found = Some(head);
                    break 'search;
                }
                stack.push(head);
            }
        }
        let Some(mut w) = found else { return false };
        self.pebbles[w] -= 1;
        while w != start {
            let arc = parent_arc[w].expect("path back to start");
            let (tail, head, e) = self.arcs[arc];
            debug_assert_eq!(head, w);
            self.out[tail].retain(|&a| a != arc);
            self.out[head].push(arc);
            self.arcs[arc] = (head, tail, e);
            w = tail;
        }
        self.pebbles[start] += 1;
        true
    }

    /// Tries to collect `need` pebbles on `{u, v}`.
    pub(crate) fn gather(&mut self, u: usize, v: usize, need: usize) -> bool {
        while self.pebbles_on(u, v) < need {
            if self.pebbles[u] < 2 && self.fetch_pebble(u, v) {
                continue;
            }
            if u != v && self.pebbles[v] < 2 && self.fetch_pebble(v, u) {
                continue;
            }
            return false;
        }
        true
    }

    pub(crate) fn try_insert(&mut self, e: ColouredEdge) -> bool {
        if !self.gather(e.u, e.v, self.l + 1) {
            return false;
        }
        let tail = if self.pebbles[e.u] > 0 { e.u } else { e.v };
        let head = e.opposite(tail);
        self.pebbles[tail] -= 1;
        self.out[tail].push(self.arcs.len());
        self.arcs.push((tail, head, e));
        true
    }

    /// Vertices reachable from `{u, v}` along accepted arcs.
    pub(crate) fn reach(&self, u: usize, v: usize) -> BTreeSet<usize> {
        let mut seen: BTreeSet<usize> = [u, v].into_iter().collect();
        let mut stack = vec![u, v];
        while let Some(x) = stack.pop() {
            for &a in &self.out[x] {
                let head = self.arcs[a].1;
                if seen.insert(head) {
                    stack.push(head);
                }
            }
        }
        seen
    }

    /// Accepted edges with both endpoints in `set`.
    pub(crate) fn edges_within(&self, set: &BTreeSet<usize>) -> Vec<ColouredEdge> {
        let mut edges: Vec<ColouredEdge> = self
            .arcs
            .iter()
            .filter(|(t, h, _)| set.contains(t) && set.contains(h))
            .map(|&(_, _, e)| e)
            .collect();
        edges.sort();
        edges
    }

    /// For a game that accepted every edge: the vertex set of a (2,l)-tight
    /// subgraph containing `x` and `y`, or `None` when no such subgraph exists.
    pub(crate) fn tight_block(&mut self, x: usize, y: usize) -> Option<BTreeSet<usize>> {
        if x == y || self.gather(x, y, self.l + 1) {
            None
        } else {
            Some(self.reach(x, y))
        }
    }
}

fn check_l(l: u8) -> Result<usize> {
    if (1..=3).contains(&l) {
        Ok(l as usize)
    } else {
        Err(Error::BadSparsityParameter(l))
    }
}

/// Whether every subgraph with at least one edge has `|E'| <= 2|V'| - l`.
///
/// Loops are only meaningful for `l = 1`; a loop with `l >= 2` is an error.
pub fn is_sparse(g: &BiColouredGraph, l: u8) -> Result<SparsityReport> {
    let l = check_l(l)?;
    if l >= 2 {
        if let Some(e) = g.edges().find(|e| e.is_loop()) {
            return Err(Error::LoopNotAllowed(format!("loop {e} in a (2,{l}) sparsity query")));
        }
    }
    let (game, rejected) = PebbleGame::run(g, l);
    Ok(match rejected {
        None => SparsityReport::pass(),
        Some(e) => {
            let vertices = game.reach(e.u, e.v);
            let mut edges = game.edges_within(&vertices);
            edges.push(e);
            edges.sort();
            SparsityReport::fail(Subgraph { vertices, edges })
        }
    })
}

pub fn is_tight(g: &BiColouredGraph, l: u8) -> Result<bool> {
    let report = is_sparse(g, l)?;
    Ok(report.verdict && g.edge_count() as i64 == 2 * g.n() as i64 - l as i64)
}

fn tight_report(g: &BiColouredGraph, l: u8) -> Result<SparsityReport> {
    let report = is_sparse(g, l)?;
    if !report.verdict {
        return Ok(report);
    }
    if g.edge_count() as i64 != 2 * g.n() as i64 - l as i64 {
        return Ok(SparsityReport::fail(whole(g)));
    }
    Ok(SparsityReport::pass())
}

fn whole(g: &BiColouredGraph) -> Subgraph {
    g.induced(&(0..g.n()).collect())
}

/// Whether the blue subgraph is (2,3)-sparse.
pub fn is_blue_limited(g: &BiColouredGraph) -> bool {
    monochrome_sparse(g, Colour::Blue).verdict
}

fn monochrome_sparse(g: &BiColouredGraph, c: Colour) -> SparsityReport {
    let mono = g.monochrome_graph(c);
    match is_sparse(&mono, 3) {
        Ok(report) => report,
        // A monochrome loop on its own already breaks (2,3)-sparsity.
        Err(_) => {
            let e = *mono.edges().find(|e| e.is_loop()).expect("only loops make the query fail");
            SparsityReport::fail(Subgraph { vertices: [e.u].into_iter().collect(), edges: vec![e] })
        }
    }
}

/// `|E| = 2|V| - 2` and every proper subgraph with an edge is (2,3)-sparse.
pub fn is_23_circuit(g: &BiColouredGraph) -> bool {
    if g.edge_count() == 0 || g.has_loops() || g.edge_count() as i64 != 2 * g.n() as i64 - 2 {
        return false;
    }
    // A proper subgraph either misses an edge or misses a vertex; the latter
    // only matters when that vertex is isolated.
    if (0..g.n()).any(|v| g.degree(v) == 0) {
        return false;
    }
    g.edges().all(|e| {
        let mut h = g.clone();
        h.remove_edge(e);
        matches!(is_sparse(&h, 3), Ok(r) if r.verdict)
    })
}

fn spanning_tree_report(g: &BiColouredGraph, c: Colour) -> SparsityReport {
    let mono = g.monochrome_graph(c);
    let n = g.n();
    let whole_mono = || mono.induced(&(0..n).collect());
    if mono.has_loops() || mono.edge_count() + 1 != n {
        return SparsityReport::fail(whole_mono());
    }
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for e in mono.edges() {
        let (a, b) = (find(&mut parent, e.u), find(&mut parent, e.v));
        if a == b {
            return SparsityReport::fail(whole_mono());
        }
        parent[a] = b;
    }
    SparsityReport::pass()
}

/// Evaluates the class predicate on a loopless graph.
pub fn class_check(g: &BiColouredGraph, class: &SparsityClass) -> Result<SparsityReport> {
    if let Some(e) = g.edges().find(|e| e.is_loop()) {
        return Err(Error::LoopNotAllowed(format!("loop {e} in a class check")));
    }
    let limited = |report: SparsityReport, colours: &[Colour]| {
        if !report.verdict {
            return report;
        }
        for &c in colours {
            let mono = monochrome_sparse(g, c);
            if !mono.verdict {
                return mono;
            }
        }
        report
    };
    Ok(match class {
        SparsityClass::Tight23 => tight_report(g, 3)?,
        SparsityClass::Tight22 => tight_report(g, 2)?,
        SparsityClass::Tight22BlueLimited => limited(tight_report(g, 2)?, &[Colour::Blue]),
        SparsityClass::Tight22MonoLimited => limited(tight_report(g, 2)?, &Colour::ALL),
        SparsityClass::Separable { blocks } => {
            SparsityClass::separable(blocks)?;
            for (&dim, c) in blocks.iter().zip(Colour::ALL) {
                let report = if dim == 1 {
                    spanning_tree_report(g, c)
                } else {
                    tight_report(&g.monochrome_graph(c), 3)?
                };
                if !report.verdict {
                    return Ok(report);
                }
            }
            SparsityReport::pass()
        }
    })
}

/// Enumeration oracle: checks the sparsity count on every induced subgraph.
pub fn brute_force_sparse(g: &BiColouredGraph, l: u8) -> Result<bool> {
    let l = check_l(l)? as i64;
    let n = g.n();
    if n > BRUTE_FORCE_LIMIT {
        return Err(Error::GuardExceeded { n, limit: BRUTE_FORCE_LIMIT });
    }
    let masks: Vec<u32> = g.edges().map(|e| (1u32 << e.u) | (1u32 << e.v)).collect();
    for subset in 1u32..(1u32 << n) {
        let edges = masks.iter().filter(|&&m| m & subset == m).count() as i64;
        if edges > 0 && edges > 2 * i64::from(subset.count_ones()) - l {
            return Ok(false);
        }
    }
    Ok(true)
}
