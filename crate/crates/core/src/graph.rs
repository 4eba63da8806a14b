//! Directed communication graphs and their column-stochastic mixing matrices.
//!
//! Vertices are numbered `1..=n` in edge lists (the form they take in config
//! files); internally everything is `0..n`, and all other APIs in this crate
//! index agents from zero. An edge `(j, i)` means vertex `j` sends to vertex
//! `i`. Every vertex is given a self-loop whether or not the edge list
//! mentions it: each agent always hears its own previous value, which keeps
//! the mixing matrix primitive whenever the graph is strongly connected.

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

/// Convergence threshold for the Perron vector power iteration.
const PERRON_TOL: f64 = 1e-12;

/// Errors from graph construction and matrix assembly.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum GraphError {
    /// An edge endpoint lies outside `1..=n`.
    #[error("edge ({from}, {to}) out of range for {n} vertices (valid labels are 1..={n})")]
    InvalidEdge { from: usize, to: usize, n: usize },
    /// The graph has a pair of vertices with no directed path between them.
    #[error("graph is not strongly connected")]
    NotStronglyConnected,
}

/// A directed graph with forced self-loops, stored as out-neighbor lists.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DirectedGraph {
    n: usize,
    /// `out[j]` holds the 0-based targets of vertex `j`, sorted, self-loop
    /// included.
    out: Vec<Vec<usize>>,
}

impl DirectedGraph {
    /// Builds a graph on `n >= 1` vertices from a 1-based edge list.
    ///
    /// Duplicate edges are collapsed and self-loops are added for every
    /// vertex regardless of the input.
    pub fn new(n: usize, edges: &[(usize, usize)]) -> Result<Self, GraphError> {
        assert!(n >= 1, "graph needs at least one vertex");
        let mut adjacency = vec![vec![false; n]; n];
        for v in 0..n {
            adjacency[v][v] = true;
        }
        for &(from, to) in edges {
            if from < 1 || from > n || to < 1 || to > n {
                return Err(GraphError::InvalidEdge { from, to, n });
            }
            adjacency[from - 1][to - 1] = true;
        }
        let out = adjacency
            .into_iter()
            .map(|row| {
                row.iter()
                    .enumerate()
                    .filter_map(|(i, &present)| present.then_some(i))
                    .collect()
            })
            .collect();
        Ok(Self { n, out })
    }

    /// Ring on `n` vertices: each vertex sends to its successor mod `n`.
    pub fn ring(n: usize) -> Self {
        let edges: Vec<(usize, usize)> = (1..=n).map(|v| (v, v % n + 1)).collect();
        Self::new(n, &edges).expect("ring edges are always in range")
    }

    /// Complete digraph on `n` vertices.
    pub fn complete(n: usize) -> Self {
        let mut edges = Vec::with_capacity(n * n);
        for from in 1..=n {
            for to in 1..=n {
                if from != to {
                    edges.push((from, to));
                }
            }
        }
        Self::new(n, &edges).expect("complete edges are always in range")
    }

    /// Random strongly connected digraph: a Hamiltonian cycle through a
    /// shuffled vertex order plus each remaining ordered pair independently
    /// with probability `extra_edge_prob`. Deterministic in `seed`.
    pub fn random_strongly_connected(n: usize, extra_edge_prob: f64, seed: u64) -> Self {
        assert!(n >= 1, "graph needs at least one vertex");
        assert!(
            (0.0..=1.0).contains(&extra_edge_prob),
            "edge probability must lie in [0, 1]"
        );
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut order: Vec<usize> = (1..=n).collect();
        order.shuffle(&mut rng);
        let mut edges: Vec<(usize, usize)> = (0..n)
            .map(|k| (order[k], order[(k + 1) % n]))
            .collect();
        for from in 1..=n {
            for to in 1..=n {
                if from != to && rng.gen::<f64>() < extra_edge_prob {
                    edges.push((from, to));
                }
            }
        }
        Self::new(n, &edges).expect("generated edges are always in range")
    }

    /// Number of vertices.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Out-degree of 0-based vertex `j`, counting its self-loop.
    pub fn out_degree(&self, j: usize) -> usize {
        self.out[j].len()
    }

    /// Sorted 0-based out-neighbors of vertex `j`, self-loop included.
    pub fn out_neighbors(&self, j: usize) -> &[usize] {
        &self.out[j]
    }

    /// Edges as 1-based pairs `(from, to)`, self-loops omitted, sorted.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut edges = Vec::new();
        for (j, targets) in self.out.iter().enumerate() {
            for &i in targets {
                if i != j {
                    edges.push((j + 1, i + 1));
                }
            }
        }
        edges.sort_unstable();
        edges
    }

    /// Whether every vertex can reach every other along directed paths.
    ///
    /// Two iterative depth-first sweeps: one on the graph, one on its
    /// reverse; the graph is strongly connected iff both sweeps starting
    /// from vertex 0 reach everything.
    pub fn is_strongly_connected(&self) -> bool {
        if self.n == 1 {
            return true;
        }
        let mut reverse = vec![Vec::new(); self.n];
        for (j, targets) in self.out.iter().enumerate() {
            for &i in targets {
                reverse[i].push(j);
            }
        }
        let reaches_all = |adj: &[Vec<usize>]| -> bool {
            let mut seen = vec![false; self.n];
            let mut stack = vec![0usize];
            seen[0] = true;
            let mut count = 1;
            while let Some(v) = stack.pop() {
                for &w in &adj[v] {
                    if !seen[w] {
                        seen[w] = true;
                        count += 1;
                        stack.push(w);
                    }
                }
            }
            count == self.n
        };
        reaches_all(&self.out) && reaches_all(&reverse)
    }

    /// Column-stochastic mixing matrix from out-degree weights:
    /// `P[i][j] = 1 / out_degree(j)` when `j` sends to `i`, zero otherwise.
    ///
    /// Fails unless the graph is strongly connected; with the forced
    /// self-loops that makes `P` primitive, so its Perron vector is strictly
    /// positive and the power iteration below converges.
    pub fn perron_matrix(&self) -> Result<PerronMatrix, GraphError> {
        if !self.is_strongly_connected() {
            return Err(GraphError::NotStronglyConnected);
        }
        let n = self.n;
        let mut entries = DMatrix::zeros(n, n);
        for (j, targets) in self.out.iter().enumerate() {
            let weight = 1.0 / targets.len() as f64;
            for &i in targets {
                entries[(i, j)] = weight;
            }
        }
        let perron_vector = perron_vector_of(&entries);
        Ok(PerronMatrix {
            entries,
            perron_vector,
        })
    }
}

/// Power iteration for the right eigenvector of eigenvalue 1.
///
/// `p` is column stochastic, so `sum(w)` is preserved exactly by each
/// multiply; starting from the uniform vector keeps the iterates on the unit
/// simplex and the limit is the unit-sum Perron vector.
fn perron_vector_of(p: &DMatrix<f64>) -> DVector<f64> {
    let n = p.nrows();
    let mut w = DVector::from_element(n, 1.0 / n as f64);
    for _ in 0..2_000_000 {
        let next = p * &w;
        let residual = (&next - &w).amax();
        w = next;
        if residual <= PERRON_TOL {
            return w;
        }
    }
    unreachable!("power iteration on a primitive column-stochastic matrix must converge");
}

/// Column-stochastic mixing matrix of a strongly connected digraph together
/// with its unit-sum Perron vector.
#[derive(Debug, Clone, PartialEq)]
pub struct PerronMatrix {
    entries: DMatrix<f64>,
    perron_vector: DVector<f64>,
}

impl PerronMatrix {
    /// Matrix dimension (number of agents).
    pub fn n(&self) -> usize {
        self.entries.nrows()
    }

    /// The matrix itself, `n x n`, columns summing to one.
    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    /// Strictly positive right eigenvector `w` with `P w = w`, `sum(w) = 1`.
    pub fn perron_vector(&self) -> &DVector<f64> {
        &self.perron_vector
    }
}
