//! Signal support graphs.
//!
//! Vertices are zero-based; grid vertices are numbered row-major, so pixel
//! `(r, c)` of a `rows × cols` grid is vertex `r * cols + c`.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GraphKind {
    Chain,
    Grid { rows: usize, cols: usize },
    General,
}

/// Undirected connected graph with an ordered edge list `(n, m)`, `n < m`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    num_vertices: usize,
    edges: Vec<(usize, usize)>,
    kind: GraphKind,
}

impl Graph {
    /// Path graph `0 - 1 - ... - (n-1)`.
    pub fn chain(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("chain graph needs at least one vertex"));
        }
        let edges = (0..n - 1).map(|i| (i, i + 1)).collect();
        Ok(Self {
            num_vertices: n,
            edges,
            kind: GraphKind::Chain,
        })
    }

    /// 4-neighbour grid. Edges are listed in lexicographic order.
    pub fn grid(rows: usize, cols: usize) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::invalid(format!(
                "grid dimensions must be positive, got {rows}x{cols}"
            )));
        }
        let mut edges = Vec::with_capacity(rows * (cols - 1) + cols * (rows - 1));
        for r in 0..rows {
            for c in 0..cols {
                let v = r * cols + c;
                if c + 1 < cols {
                    edges.push((v, v + 1));
                }
                if r + 1 < rows {
                    edges.push((v, v + cols));
                }
            }
        }
        Ok(Self {
            num_vertices: rows * cols,
            edges,
            kind: GraphKind::Grid { rows, cols },
        })
    }

    /// Arbitrary edge list. Edges are normalized to `n < m` and sorted;
    /// self-loops, duplicates, out-of-range indices and disconnected graphs
    /// are rejected.
    pub fn general(num_vertices: usize, edges: &[(usize, usize)]) -> Result<Self> {
        if num_vertices == 0 {
            return Err(Error::invalid("graph needs at least one vertex"));
        }
        let mut normalized = Vec::with_capacity(edges.len());
        for &(a, b) in edges {
            if a == b {
                return Err(Error::invalid(format!("self-loop at vertex {a}")));
            }
            let (n, m) = if a < b { (a, b) } else { (b, a) };
            if m >= num_vertices {
                return Err(Error::invalid(format!(
                    "edge ({a}, {b}) out of range for {num_vertices} vertices"
                )));
            }
            normalized.push((n, m));
        }
        normalized.sort_unstable();
        if normalized.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::invalid("duplicate edge"));
        }
        let graph = Self {
            num_vertices,
            edges: normalized,
            kind: GraphKind::General,
        };
        if !graph.is_connected() {
            return Err(Error::invalid("graph is not connected"));
        }
        Ok(graph)
    }

    pub fn num_vertices(&self) -> usize {
        self.num_vertices
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn kind(&self) -> GraphKind {
        self.kind
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.num_vertices];
        for &(n, m) in &self.edges {
            deg[n] += 1;
            deg[m] += 1;
        }
        deg
    }

    pub fn max_degree(&self) -> usize {
        self.degrees().into_iter().max().unwrap_or(0)
    }

    pub fn is_connected(&self) -> bool {
        let n = self.num_vertices;
        let mut adjacency = vec![Vec::new(); n];
        for &(a, b) in &self.edges {
            adjacency[a].push(b);
            adjacency[b].push(a);
        }
        let mut seen = vec![false; n];
        let mut stack = vec![0];
        seen[0] = true;
        let mut count = 1;
        while let Some(v) = stack.pop() {
            for &w in &adjacency[v] {
                if !seen[w] {
                    seen[w] = true;
                    count += 1;
                    stack.push(w);
                }
            }
        }
        count == n
    }
}
