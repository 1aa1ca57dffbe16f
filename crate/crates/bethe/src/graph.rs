//! Undirected graph topology for pairwise models.
//!
//! Edges are stored as pairs `(i, j)` with `i < j`, sorted lexicographically.
//! Every aligned quantity in the crate (couplings, pair pseudomarginals,
//! minimal-coordinate vectors) follows this canonical edge order.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{BetheError, Result};

/// One entry of a node's adjacency list.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Incidence {
    /// The node at the other end of the edge.
    pub neighbor: usize,
    /// Index of the edge in canonical edge order.
    pub edge: usize,
}

/// Graph topology: node count plus canonical edge list, with adjacency lists
/// precomputed for message passing.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "GraphData", into = "GraphData")]
pub struct Graph {
    n: usize,
    edges: Vec<(usize, usize)>,
    adjacency: Vec<Vec<Incidence>>,
}

/// Wire form: `{"n": ..., "edges": [[i,j],...]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct GraphData {
    n: usize,
    edges: Vec<(usize, usize)>,
}

impl TryFrom<GraphData> for Graph {
    type Error = BetheError;
    fn try_from(data: GraphData) -> Result<Self> {
        Graph::from_edges(data.n, data.edges)
    }
}

impl From<Graph> for GraphData {
    fn from(g: Graph) -> Self {
        GraphData {
            n: g.n,
            edges: g.edges,
        }
    }
}

impl PartialEq for Graph {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.edges == other.edges
    }
}

impl Graph {
    /// Build a graph from an edge list. Pairs may arrive in any orientation
    /// and order; they are normalized to `i < j` and sorted. Self-loops,
    /// duplicates, and out-of-range endpoints are rejected.
    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut canonical: Vec<(usize, usize)> = Vec::new();
        for (a, b) in edges {
            if a == b {
                return Err(BetheError::InvalidEdges(format!("self-loop at node {a}")));
            }
            if a >= n || b >= n {
                return Err(BetheError::InvalidEdges(format!(
                    "edge ({a},{b}) out of range for n={n}"
                )));
            }
            canonical.push((a.min(b), a.max(b)));
        }
        canonical.sort_unstable();
        if let Some(w) = canonical.windows(2).find(|w| w[0] == w[1]) {
            return Err(BetheError::InvalidEdges(format!(
                "duplicate edge ({},{})",
                w[0].0, w[0].1
            )));
        }
        let mut adjacency = vec![Vec::new(); n];
        for (e, &(i, j)) in canonical.iter().enumerate() {
            adjacency[i].push(Incidence {
                neighbor: j,
                edge: e,
            });
            adjacency[j].push(Incidence {
                neighbor: i,
                edge: e,
            });
        }
        Ok(Graph {
            n,
            edges: canonical,
            adjacency,
        })
    }

    /// Fully connected graph on `n` nodes.
    pub fn complete(n: usize) -> Self {
        let edges = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j)));
        Self::from_edges(n, edges).expect("complete graph edges are valid")
    }

    /// Uniform random labeled tree: node `k > 0` attaches to a uniformly
    /// random earlier node.
    pub fn random_tree(n: usize, rng: &mut impl Rng) -> Self {
        let edges: Vec<(usize, usize)> = (1..n).map(|k| (rng.gen_range(0..k), k)).collect();
        Self::from_edges(n, edges).expect("tree edges are valid")
    }

    /// Erdős–Rényi graph: each pair becomes an edge independently with
    /// probability `p`.
    pub fn random_gnp(n: usize, p: f64, rng: &mut impl Rng) -> Self {
        let mut edges = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                if rng.gen::<f64>() < p {
                    edges.push((i, j));
                }
            }
        }
        Self::from_edges(n, edges).expect("sampled edges are valid")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    /// Dimension of the minimal coordinate vector: one node entry plus one
    /// pair entry per edge.
    pub fn dim(&self) -> usize {
        self.n + self.edges.len()
    }

    pub fn degree(&self, node: usize) -> usize {
        self.adjacency[node].len()
    }

    pub fn incidences(&self, node: usize) -> &[Incidence] {
        &self.adjacency[node]
    }

    /// True when the graph has no cycles.
    pub fn is_forest(&self) -> bool {
        let mut parent: Vec<usize> = (0..self.n).collect();
        fn find(parent: &mut [usize], mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        for &(i, j) in &self.edges {
            let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
            if ri == rj {
                return false;
            }
            parent[ri] = rj;
        }
        true
    }
}
