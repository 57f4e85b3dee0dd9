//! Undirected weighted graphs stored with an explicit symmetric closure.

use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Immutable undirected graph.
///
/// Neighbor lists are kept in compressed row form and contain both
/// directions of every edge. Self-loops are never stored; normalization
/// schemes that need them add them when the operator is built.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    num_nodes: usize,
    offsets: Vec<usize>,
    neighbors: Vec<usize>,
    weights: Vec<f64>,
}

/// Builds a graph from `(u, v, w)` triples.
///
/// `num_nodes` defaults to the largest index plus one. Each unordered pair
/// may appear once; listing both `(u, v)` and `(v, u)` counts as a duplicate.
pub fn build_graph<I>(edges: I, num_nodes: Option<usize>) -> Result<Graph>
where
    I: IntoIterator<Item = (usize, usize, f64)>,
{
    let edges: Vec<(usize, usize, f64)> = edges.into_iter().collect();
    let inferred = edges.iter().map(|&(u, v, _)| u.max(v) + 1).max().unwrap_or(0);
    let n = match num_nodes {
        Some(n) => {
            if let Some(&(u, v, _)) = edges.iter().find(|&&(u, v, _)| u >= n || v >= n) {
                return Err(Error::IndexOutOfRange {
                    index: u.max(v),
                    num_nodes: n,
                });
            }
            n
        }
        None => inferred,
    };
    if n == 0 {
        return Err(Error::InvalidParam("graph must have at least one node".into()));
    }

    let mut seen = HashSet::with_capacity(edges.len());
    let mut adj: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for &(u, v, w) in &edges {
        if u == v {
            return Err(Error::SelfLoopInInput(u));
        }
        if !w.is_finite() || w < 0.0 {
            return Err(Error::InvalidWeight(w));
        }
        if !seen.insert((u.min(v), u.max(v))) {
            return Err(Error::DuplicateEdge(u, v));
        }
        adj[u].push((v, w));
        adj[v].push((u, w));
    }

    let mut offsets = Vec::with_capacity(n + 1);
    let mut neighbors = Vec::with_capacity(2 * edges.len());
    let mut weights = Vec::with_capacity(2 * edges.len());
    offsets.push(0);
    for row in &mut adj {
        row.sort_unstable_by_key(|&(j, _)| j);
        for &(j, w) in row.iter() {
            neighbors.push(j);
            weights.push(w);
        }
        offsets.push(neighbors.len());
    }
    Ok(Graph {
        num_nodes: n,
        offsets,
        neighbors,
        weights,
    })
}

impl Graph {
    /// Unit-weight graph from index pairs.
    pub fn from_pairs(pairs: &[(usize, usize)], num_nodes: Option<usize>) -> Result<Graph> {
        build_graph(pairs.iter().map(|&(u, v)| (u, v, 1.0)), num_nodes)
    }

    /// Graph with `n` nodes and no edges.
    pub fn empty(n: usize) -> Result<Graph> {
        build_graph(std::iter::empty(), Some(n))
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    /// Number of undirected edges.
    pub fn num_edges(&self) -> usize {
        self.neighbors.len() / 2
    }

    /// Neighbors of `i` with edge weights, sorted by index.
    pub fn neighbors(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.offsets[i]..self.offsets[i + 1];
        self.neighbors[range.clone()]
            .iter()
            .copied()
            .zip(self.weights[range].iter().copied())
    }

    pub fn row_range(&self, i: usize) -> std::ops::Range<usize> {
        self.offsets[i]..self.offsets[i + 1]
    }

    pub(crate) fn raw_neighbors(&self) -> &[usize] {
        &self.neighbors
    }

    pub(crate) fn raw_weights(&self) -> &[f64] {
        &self.weights
    }

    /// Each undirected edge once, as `(u, v, w)` with `u < v`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.num_nodes).flat_map(move |u| {
            self.neighbors(u)
                .filter(move |&(v, _)| u < v)
                .map(move |(v, w)| (u, v, w))
        })
    }

    pub fn degree(&self, i: usize) -> f64 {
        self.weights[self.row_range(i)].iter().sum()
    }

    pub fn degree_vector(&self) -> Vec<f64> {
        (0..self.num_nodes).map(|i| self.degree(i)).collect()
    }

    /// First node with zero incident weight, if any.
    pub fn isolated_node(&self) -> Option<usize> {
        (0..self.num_nodes).find(|&i| self.degree(i) == 0.0)
    }

    /// Connected component label for every node (labels are 0-based, in
    /// order of the smallest node of each component).
    pub fn components(&self) -> Vec<usize> {
        let mut label = vec![usize::MAX; self.num_nodes];
        let mut next = 0;
        let mut stack = Vec::new();
        for s in 0..self.num_nodes {
            if label[s] != usize::MAX {
                continue;
            }
            label[s] = next;
            stack.push(s);
            while let Some(u) = stack.pop() {
                for (v, _) in self.neighbors(u) {
                    if label[v] == usize::MAX {
                        label[v] = next;
                        stack.push(v);
                    }
                }
            }
            next += 1;
        }
        label
    }

    pub fn is_connected(&self) -> bool {
        self.components().iter().all(|&c| c == 0)
    }

    /// Two-colorability test over all components.
    pub fn is_bipartite(&self) -> bool {
        let mut color = vec![u8::MAX; self.num_nodes];
        let mut stack = Vec::new();
        for s in 0..self.num_nodes {
            if color[s] != u8::MAX {
                continue;
            }
            color[s] = 0;
            stack.push(s);
            while let Some(u) = stack.pop() {
                for (v, _) in self.neighbors(u) {
                    if color[v] == u8::MAX {
                        color[v] = 1 - color[u];
                        stack.push(v);
                    } else if color[v] == color[u] {
                        return false;
                    }
                }
            }
        }
        true
    }
}

/// Free-function form of [`Graph::degree_vector`].
pub fn degree_vector(g: &Graph) -> Vec<f64> {
    g.degree_vector()
}

/// Seeded random connected graph: a random spanning tree plus each
/// remaining pair with probability `extra_edge_prob`.
pub fn random_connected(n: usize, extra_edge_prob: f64, seed: u64) -> Result<Graph> {
    if n == 0 {
        return Err(Error::InvalidParam("n must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let mut set = HashSet::new();
    for k in 1..n {
        let parent = order[rng.random_range(0..k)];
        let child = order[k];
        set.insert((parent.min(child), parent.max(child)));
    }
    for u in 0..n {
        for v in u + 1..n {
            if rng.random::<f64>() < extra_edge_prob {
                set.insert((u, v));
            }
        }
    }
    let mut pairs: Vec<(usize, usize)> = set.into_iter().collect();
    pairs.sort_unstable();
    Graph::from_pairs(&pairs, Some(n))
}

/// Seeded random `d`-regular simple graph.
///
/// Stubs are paired uniformly (configuration model); self-loops and repeated
/// pairs are then removed with random double-edge swaps.
pub fn random_regular(n: usize, d: usize, seed: u64) -> Result<Graph> {
    if d >= n || (n * d) % 2 != 0 {
        return Err(Error::InvalidParam(format!(
            "no simple {d}-regular graph on {n} nodes"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut stubs: Vec<usize> = (0..n).flat_map(|u| std::iter::repeat_n(u, d)).collect();
    stubs.shuffle(&mut rng);
    let mut edges: Vec<(usize, usize)> = stubs
        .chunks_exact(2)
        .map(|p| (p[0].min(p[1]), p[0].max(p[1])))
        .collect();

    let mut count: std::collections::HashMap<(usize, usize), usize> = Default::default();
    for &e in &edges {
        *count.entry(e).or_default() += 1;
    }
    let is_bad = |e: (usize, usize), count: &std::collections::HashMap<(usize, usize), usize>| {
        e.0 == e.1 || count[&e] > 1
    };
    let m = edges.len();
    let mut guard = 0usize;
    loop {
        let bad: Vec<usize> = (0..m).filter(|&i| is_bad(edges[i], &count)).collect();
        if bad.is_empty() {
            break;
        }
        for &i in &bad {
            if !is_bad(edges[i], &count) {
                continue;
            }
            guard += 1;
            if guard > 1000 * m {
                return Err(Error::InvalidParam("regular graph repair did not terminate".into()));
            }
            let j = rng.random_range(0..m);
            if j == i {
                continue;
            }
            let (a, b) = edges[i];
            let (c, e) = edges[j];
            let (x, y) = if rng.random::<bool>() { (c, e) } else { (e, c) };
            let n1 = (a.min(x), a.max(x));
            let n2 = (b.min(y), b.max(y));
            if n1.0 == n1.1 || n2.0 == n2.1 || n1 == n2 {
                continue;
            }
            if count.get(&n1).copied().unwrap_or(0) > 0 || count.get(&n2).copied().unwrap_or(0) > 0 {
                continue;
            }
            for old in [edges[i], edges[j]] {
                let c = count.get_mut(&old).expect("edge counted");
                *c -= 1;
                if *c == 0 {
                    count.remove(&old);
                }
            }
            edges[i] = n1;
            edges[j] = n2;
            *count.entry(n1).or_default() += 1;
            *count.entry(n2).or_default() += 1;
        }
    }
    edges.sort_unstable();
    Graph::from_pairs(&edges, Some(n))
}
