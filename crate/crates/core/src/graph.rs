//! Bi-coloured multigraphs whose monochrome subgraphs are simple.
//!
//! Vertices are the dense ids `0..n`. Between any two vertices there is at most
//! one edge of each colour, and each vertex carries at most one loop of each
//! colour. Equality is labelled equality.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Colour {
    #[serde(rename = "b")]
    Blue,
    #[serde(rename = "r")]
    Red,
}

impl Colour {
    pub const ALL: [Colour; 2] = [Colour::Blue, Colour::Red];

    pub fn other(self) -> Colour {
        match self {
            Colour::Blue => Colour::Red,
            Colour::Red => Colour::Blue,
        }
    }

    pub fn symbol(self) -> char {
        match self {
            Colour::Blue => 'b',
            Colour::Red => 'r',
        }
    }

    pub fn index(self) -> usize {
        match self {
            Colour::Blue => 0,
            Colour::Red => 1,
        }
    }
}

impl fmt::Display for Colour {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.symbol())
    }
}

impl FromStr for Colour {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "b" | "blue" => Ok(Colour::Blue),
            "r" | "red" => Ok(Colour::Red),
            _ => Err(Error::Parse(format!("unknown colour {s:?} (expected b or r)"))),
        }
    }
}

/// An edge with normalized endpoints (`u <= v`). `u == v` is a loop.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(from = "(usize, usize, Colour)", into = "(usize, usize, Colour)")]
pub struct ColouredEdge {
    pub u: usize,
    pub v: usize,
    pub colour: Colour,
}

impl ColouredEdge {
    pub fn new(a: usize, b: usize, colour: Colour) -> Self {
        let (u, v) = if a <= b { (a, b) } else { (b, a) };
        ColouredEdge { u, v, colour }
    }

    pub fn is_loop(&self) -> bool {
        self.u == self.v
    }

    pub fn touches(&self, w: usize) -> bool {
        self.u == w || self.v == w
    }

    /// The endpoint opposite `w`. Panics if `w` is not an endpoint.
    pub fn opposite(&self, w: usize) -> usize {
        if self.u == w {
            self.v
        } else {
            assert_eq!(self.v, w, "{w} is not an endpoint of {self}");
            self.u
        }
    }

    pub fn map(&self, f: impl Fn(usize) -> usize) -> ColouredEdge {
        ColouredEdge::new(f(self.u), f(self.v), self.colour)
    }
}

impl From<(usize, usize, Colour)> for ColouredEdge {
    fn from((u, v, c): (usize, usize, Colour)) -> Self {
        ColouredEdge::new(u, v, c)
    }
}

impl From<ColouredEdge> for (usize, usize, Colour) {
    fn from(e: ColouredEdge) -> Self {
        (e.u, e.v, e.colour)
    }
}

impl fmt::Display for ColouredEdge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{},{})", self.u, self.v, self.colour)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct BiColouredGraph {
    n: usize,
    edges: BTreeSet<ColouredEdge>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GraphFile {
    n: usize,
    edges: Vec<(usize, usize, Colour)>,
}

impl BiColouredGraph {
    /// The edgeless graph on `n` vertices.
    pub fn empty(n: usize) -> Self {
        BiColouredGraph { n, edges: BTreeSet::new() }
    }

    pub fn from_edges<I, E>(n: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = E>,
        E: Into<ColouredEdge>,
    {
        let mut g = Self::empty(n);
        for e in edges {
            g.add_edge(e.into())?;
        }
        Ok(g)
    }

    /// Every pair carries one blue and one red edge; optionally every vertex
    /// carries one loop of each colour.
    pub fn complete(n: usize, with_loops: bool) -> Self {
        let mut edges = BTreeSet::new();
        for u in 0..n {
            let first = if with_loops { u } else { u + 1 };
            for v in first..n {
                for c in Colour::ALL {
                    edges.insert(ColouredEdge::new(u, v, c));
                }
            }
        }
        BiColouredGraph { n, edges }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Edges in canonical `(u, v, colour)` order.
    pub fn edges(&self) -> impl Iterator<Item = &ColouredEdge> + '_ {
        self.edges.iter()
    }

    pub fn contains(&self, e: &ColouredEdge) -> bool {
        self.edges.contains(e)
    }

    pub fn has_edge(&self, a: usize, b: usize, c: Colour) -> bool {
        self.edges.contains(&ColouredEdge::new(a, b, c))
    }

    pub fn has_loops(&self) -> bool {
        self.edges.iter().any(ColouredEdge::is_loop)
    }

    pub fn add_edge(&mut self, e: ColouredEdge) -> Result<()> {
        let e = ColouredEdge::new(e.u, e.v, e.colour);
        if e.v >= self.n {
            return Err(Error::EndpointOutOfRange { edge: e, n: self.n });
        }
        if !self.edges.insert(e) {
            return Err(Error::DuplicateEdge(e));
        }
        Ok(())
    }

    pub fn remove_edge(&mut self, e: &ColouredEdge) -> bool {
        self.edges.remove(&ColouredEdge::new(e.u, e.v, e.colour))
    }

    pub fn check_vertex(&self, v: usize) -> Result<()> {
        if v < self.n {
            Ok(())
        } else {
            Err(Error::VertexOutOfRange { vertex: v, n: self.n })
        }
    }

    /// Degree with loops counted twice.
    pub fn degree(&self, w: usize) -> usize {
        self.edges
            .iter()
            .map(|e| if e.is_loop() && e.u == w { 2 } else { usize::from(e.touches(w)) })
            .sum()
    }

    pub fn incident(&self, w: usize) -> Vec<ColouredEdge> {
        self.edges.iter().filter(|e| e.touches(w)).copied().collect()
    }

    pub fn neighbours(&self, w: usize) -> BTreeSet<usize> {
        self.edges
            .iter()
            .filter(|e| e.touches(w) && !e.is_loop())
            .map(|e| e.opposite(w))
            .collect()
    }

    pub fn colour_count(&self, c: Colour) -> usize {
        self.edges.iter().filter(|e| e.colour == c).count()
    }

    pub fn deficiency(&self) -> i64 {
        2 * self.n as i64 - self.edges.len() as i64
    }

    /// The spanning subgraph of colour-`c` edges.
    pub fn monochrome(&self, c: Colour) -> Subgraph {
        Subgraph {
            vertices: (0..self.n).collect(),
            edges: self.edges.iter().filter(|e| e.colour == c).copied().collect(),
        }
    }

    pub fn monochrome_graph(&self, c: Colour) -> BiColouredGraph {
        BiColouredGraph {
            n: self.n,
            edges: self.edges.iter().filter(|e| e.colour == c).copied().collect(),
        }
    }

    pub fn induced(&self, vertices: &BTreeSet<usize>) -> Subgraph {
        Subgraph {
            vertices: vertices.clone(),
            edges: self
                .edges
                .iter()
                .filter(|e| vertices.contains(&e.u) && vertices.contains(&e.v))
                .copied()
                .collect(),
        }
    }

    /// Inserts an isolated vertex with id `at`; existing ids `>= at` shift up.
    pub fn insert_vertex(&self, at: usize) -> Result<BiColouredGraph> {
        if at > self.n {
            return Err(Error::VertexOutOfRange { vertex: at, n: self.n + 1 });
        }
        let shift = |w: usize| if w >= at { w + 1 } else { w };
        Ok(BiColouredGraph {
            n: self.n + 1,
            edges: self.edges.iter().map(|e| e.map(shift)).collect(),
        })
    }

    /// Deletes `v` and its incident edges; ids above `v` shift down.
    pub fn remove_vertex(&self, v: usize) -> Result<BiColouredGraph> {
        self.check_vertex(v)?;
        let shift = |w: usize| if w > v { w - 1 } else { w };
        Ok(BiColouredGraph {
            n: self.n - 1,
            edges: self.edges.iter().filter(|e| !e.touches(v)).map(|e| e.map(shift)).collect(),
        })
    }

    /// Applies a vertex relabelling `perm[old] = new` (a permutation of `0..n`).
    pub fn relabel(&self, perm: &[usize]) -> Result<BiColouredGraph> {
        let mut seen = vec![false; self.n];
        if perm.len() != self.n {
            return Err(Error::IllegalMove(format!("relabelling has length {} for n = {}", perm.len(), self.n)));
        }
        for &p in perm {
            if p >= self.n || std::mem::replace(&mut seen[p], true) {
                return Err(Error::IllegalMove("relabelling is not a permutation".into()));
            }
        }
        Ok(BiColouredGraph { n: self.n, edges: self.edges.iter().map(|e| e.map(|w| perm[w])).collect() })
    }

    pub fn parse(text: &str) -> Result<Self> {
        let file: GraphFile = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        Self::from_edges(file.n, file.edges)
    }

    /// Canonical compact JSON, e.g. `{"n":2,"edges":[[0,1,"b"],[0,1,"r"]]}`.
    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_file()).expect("graph serialization is infallible")
    }

    fn to_file(&self) -> GraphFile {
        GraphFile { n: self.n, edges: self.edges.iter().map(|&e| e.into()).collect() }
    }
}

impl fmt::Display for BiColouredGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_json())
    }
}

impl Serialize for BiColouredGraph {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_file().serialize(s)
    }
}

impl<'de> Deserialize<'de> for BiColouredGraph {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let file = GraphFile::deserialize(d)?;
        Self::from_edges(file.n, file.edges).map_err(serde::de::Error::custom)
    }
}

/// A vertex subset together with edges among those vertices.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Subgraph {
    pub vertices: BTreeSet<usize>,
    pub edges: Vec<ColouredEdge>,
}

impl Subgraph {
    pub fn new(vertices: BTreeSet<usize>, edges: Vec<ColouredEdge>) -> Result<Self> {
        if let Some(e) = edges.iter().find(|e| !vertices.contains(&e.u) || !vertices.contains(&e.v)) {
            return Err(Error::IllegalMove(format!("subgraph edge {e} leaves its vertex set")));
        }
        Ok(Subgraph { vertices, edges })
    }

    /// `2|V(H)| - |E(H)|`.
    pub fn deficiency(&self) -> i64 {
        2 * self.vertices.len() as i64 - self.edges.len() as i64
    }

    /// Relabels the vertex set to `0..k` in increasing order.
    pub fn to_graph(&self) -> BiColouredGraph {
        let index: Vec<usize> = self.vertices.iter().copied().collect();
        let pos = |w: usize| index.binary_search(&w).expect("edge endpoint in vertex set");
        BiColouredGraph {
            n: index.len(),
            edges: self.edges.iter().map(|e| e.map(pos)).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use Colour::{Blue, Red};

    #[test]
    fn parse_parallel_pair() {
        let g = BiColouredGraph::parse(r#"{"n":2,"edges":[[0,1,"b"],[0,1,"r"]]}"#).unwrap();
        assert_eq!(g.n(), 2);
        assert!(g.has_edge(0, 1, Blue) && g.has_edge(1, 0, Red));
        assert_eq!(g.edge_count(), 2);
    }

    #[test]
    fn parse_and_serialize_k1() {
        let g = BiColouredGraph::parse(r#"{"n":1,"edges":[]}"#).unwrap();
        assert_eq!(g, BiColouredGraph::empty(1));
        assert_eq!(g.to_json(), r#"{"n":1,"edges":[]}"#);
    }

    #[test]
    fn duplicate_after_normalization_is_rejected() {
        let err = BiColouredGraph::parse(r#"{"n":2,"edges":[[0,1,"b"],[1,0,"b"]]}"#).unwrap_err();
        assert!(matches!(err, Error::DuplicateEdge(_)), "{err}");
    }

    #[test]
    fn out_of_range_and_malformed() {
        assert!(matches!(
            BiColouredGraph::parse(r#"{"n":2,"edges":[[0,2,"r"]]}"#),
            Err(Error::EndpointOutOfRange { .. })
        ));
        assert!(matches!(BiColouredGraph::parse(r#"{"n":2,"edges":[[0,1,"g"]]}"#), Err(Error::Parse(_))));
        assert!(matches!(BiColouredGraph::parse("{\"n\":2}"), Err(Error::Parse(_))));
        assert!(matches!(BiColouredGraph::parse("not json"), Err(Error::Parse(_))));
    }

    #[test]
    fn serialization_normalizes_and_sorts() {
        let g = BiColouredGraph::parse(r#"{"n":3,"edges":[[2,1,"r"],[1,0,"r"],[0,1,"b"],[2,2,"b"]]}"#).unwrap();
        assert_eq!(g.to_json(), r#"{"n":3,"edges":[[0,1,"b"],[0,1,"r"],[1,2,"r"],[2,2,"b"]]}"#);
    }

    #[test]
    fn complete_graph_counts() {
        let k3 = BiColouredGraph::complete(3, false);
        assert_eq!(k3.edge_count(), 6);
        assert_eq!(k3.colour_count(Blue), 3);
        assert_eq!(k3.colour_count(Red), 3);
        let k1 = BiColouredGraph::complete(1, true);
        assert_eq!(k1.edge_count(), 2);
        assert!(k1.edges().all(ColouredEdge::is_loop));
        assert_eq!(BiColouredGraph::complete(2, true).edge_count(), 6);
        for n in 1..8 {
            assert_eq!(BiColouredGraph::complete(n, false).edge_count(), n * (n - 1));
            assert_eq!(BiColouredGraph::complete(n, true).edge_count(), n * (n - 1) + 2 * n);
            assert_eq!(BiColouredGraph::complete(n, false).deficiency(), 2 * n as i64 - (n * (n - 1)) as i64);
        }
    }

    #[test]
    fn monochrome_subgraphs() {
        let k2 = BiColouredGraph::from_edges(2, [(0, 1, Blue), (0, 1, Red)]).unwrap();
        assert_eq!(k2.monochrome(Blue).edges, vec![ColouredEdge::new(0, 1, Blue)]);

        let red_k4 = BiColouredGraph::complete(4, false).monochrome_graph(Red);
        let blue = red_k4.monochrome(Blue);
        assert_eq!(blue.vertices.len(), 4);
        assert!(blue.edges.is_empty());

        let tri = BiColouredGraph::complete(3, false).monochrome(Red);
        assert_eq!(tri.edges.len(), 3);
        assert!(tri.edges.iter().all(|e| e.colour == Red));
    }

    #[test]
    fn deficiency_examples() {
        assert_eq!(BiColouredGraph::empty(1).deficiency(), 2);
        let k4 = BiColouredGraph::complete(4, false).monochrome_graph(Blue);
        assert_eq!(k4.deficiency(), 2);
        let k2 = BiColouredGraph::complete(2, false);
        assert_eq!(k2.deficiency(), 2);
        let all: BTreeSet<usize> = (0..2).collect();
        assert_eq!(k2.induced(&all).deficiency(), 2);
    }

    #[test]
    fn insert_and_remove_vertex_are_inverse() {
        let g = BiColouredGraph::complete(3, false);
        for at in 0..=3 {
            let h = g.insert_vertex(at).unwrap();
            assert_eq!(h.degree(at), 0);
            assert_eq!(h.remove_vertex(at).unwrap(), g);
        }
    }

    #[test]
    fn subgraph_rejects_stray_edges() {
        let verts: BTreeSet<usize> = [0, 1].into_iter().collect();
        assert!(Subgraph::new(verts, vec![ColouredEdge::new(1, 2, Red)]).is_err());
    }
}
