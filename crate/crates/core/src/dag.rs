//! Vec2DAG: an unconstrained real-vector parameterization of directed acyclic graphs.
//!
//! A vector `z` of length `d(d+1)/2` is split into node potentials `p` (the first `d`
//! entries) and a strictly upper-triangular edge-potential matrix `E` filled row-major
//! from the remaining `d(d-1)/2` entries. The graph has an edge `i -> j` iff
//! `E[i,j] + E[j,i] > 0` and `p[j] > p[i]`. Because edges always point towards higher
//! potential, every output is acyclic, and every DAG is reachable (see [`dag_to_vec`]).
//!
//! Serialization order of `E` is row-major over the upper triangle:
//! `(0,1), (0,2), ..., (0,d-1), (1,2), ...`. Vectors produced by implementations that
//! use column-major order will decode to different graphs.

use std::fmt;
use std::io::{Read, Write};
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of entries in a potential vector for `d` nodes.
pub const fn potential_len(d: usize) -> usize {
    d * (d + 1) / 2
}

/// Position of the edge potential `E[i,j]` (`i < j`) inside a potential vector.
#[inline]
pub fn edge_slot(d: usize, i: usize, j: usize) -> usize {
    debug_assert!(i < j && j < d);
    d + i * (2 * d - i - 1) / 2 + (j - i - 1)
}

/// Unconstrained DAG representation `z = (p, E)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PotentialVec {
    d: usize,
    values: Vec<f64>,
}

impl PotentialVec {
    pub fn new(d: usize, values: Vec<f64>) -> Result<Self> {
        let expected = potential_len(d);
        if d == 0 || values.len() != expected {
            return Err(Error::PotentialLength {
                d,
                expected,
                got: values.len(),
            });
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(pos));
        }
        Ok(Self { d, values })
    }

    pub fn zeros(d: usize) -> Self {
        Self {
            d,
            values: vec![0.0; potential_len(d)],
        }
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Node potentials `p(z)`: the first `d` entries.
    pub fn node_potentials(&self) -> &[f64] {
        &self.values[..self.d]
    }

    /// Edge potentials `E(z)` as a dense matrix, zero on and below the diagonal.
    pub fn edge_potentials(&self) -> DMatrix<f64> {
        let d = self.d;
        let mut e = DMatrix::zeros(d, d);
        for i in 0..d {
            for j in i + 1..d {
                e[(i, j)] = self.values[edge_slot(d, i, j)];
            }
        }
        e
    }

    /// Sup norm of the vector.
    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Binary adjacency matrix of a directed acyclic graph; `(i, j)` set iff `i -> j`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Dag {
    d: usize,
    adj: Vec<bool>,
}

impl fmt::Debug for Dag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Dag(d={}, edges={:?})", self.d, self.edges())
    }
}

impl Dag {
    /// Edgeless graph on `d` nodes.
    pub fn empty(d: usize) -> Self {
        Self {
            d,
            adj: vec![false; d * d],
        }
    }

    /// Validates a row-major `d x d` adjacency matrix.
    pub fn from_adjacency(d: usize, adj: Vec<bool>) -> Result<Self> {
        if adj.len() != d * d {
            return Err(Error::Shape(format!(
                "adjacency of length {} is not {d}x{d}",
                adj.len()
            )));
        }
        if let Some(i) = (0..d).find(|&i| adj[i * d + i]) {
            return Err(Error::SelfLoop(i));
        }
        if !is_acyclic(d, &adj) {
            return Err(Error::Cyclic);
        }
        Ok(Self { d, adj })
    }

    pub fn from_edges(d: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut adj = vec![false; d * d];
        for &(i, j) in edges {
            if i >= d || j >= d {
                return Err(Error::Shape(format!("edge ({i},{j}) out of range for {d} nodes")));
            }
            adj[i * d + j] = true;
        }
        Self::from_adjacency(d, adj)
    }

    /// Caller guarantees acyclicity and a zero diagonal.
    pub(crate) fn from_adjacency_unchecked(d: usize, adj: Vec<bool>) -> Self {
        debug_assert!(is_acyclic(d, &adj));
        Self { d, adj }
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn adjacency(&self) -> &[bool] {
        &self.adj
    }

    #[inline]
    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.adj[i * self.d + j]
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().filter(|&&a| a).count()
    }

    pub fn edges(&self) -> Vec<(usize, usize)> {
        let d = self.d;
        (0..d * d)
            .filter(|&k| self.adj[k])
            .map(|k| (k / d, k % d))
            .collect()
    }

    pub fn parents(&self, j: usize) -> Vec<usize> {
        (0..self.d).filter(|&i| self.has_edge(i, j)).collect()
    }

    pub fn children(&self, i: usize) -> Vec<usize> {
        (0..self.d).filter(|&j| self.has_edge(i, j)).collect()
    }

    /// Parent set of `j` as a bitmask, or `None` when `d > 64`.
    #[inline]
    pub fn parent_mask(&self, j: usize) -> Option<u64> {
        if self.d > 64 {
            return None;
        }
        let mut mask = 0u64;
        for i in 0..self.d {
            if self.adj[i * self.d + j] {
                mask |= 1 << i;
            }
        }
        Some(mask)
    }

    /// A topological order (Kahn's algorithm, smallest ready index first).
    pub fn topological_order(&self) -> Vec<usize> {
        kahn_order(self.d, &self.adj).expect("Dag invariant: acyclic")
    }

    /// `reach[i*d + j]` is true iff there is a directed path of length >= 1 from `i` to `j`.
    pub fn reachability(&self) -> Vec<bool> {
        let d = self.d;
        let mut reach = vec![false; d * d];
        // Process in reverse topological order so every child's row is final.
        for &i in self.topological_order().iter().rev() {
            for j in 0..d {
                if self.adj[i * d + j] {
                    reach[i * d + j] = true;
                    for k in 0..d {
                        if reach[j * d + k] {
                            reach[i * d + k] = true;
                        }
                    }
                }
            }
        }
        reach
    }

    /// Number of ancestors of every node.
    pub fn ancestor_counts(&self) -> Vec<usize> {
        let d = self.d;
        let reach = self.reachability();
        (0..d)
            .map(|j| (0..d).filter(|&i| reach[i * d + j]).count())
            .collect()
    }

    /// Subgraph induced on `keep` (in the given order).
    pub fn induced_subgraph(&self, keep: &[usize]) -> Dag {
        let m = keep.len();
        let mut adj = vec![false; m * m];
        for (a, &i) in keep.iter().enumerate() {
            for (b, &j) in keep.iter().enumerate() {
                adj[a * m + b] = self.has_edge(i, j);
            }
        }
        Dag::from_adjacency_unchecked(m, adj)
    }

    /// Writes the adjacency as `d` lines of comma-separated 0/1 integers.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        for i in 0..self.d {
            let row: Vec<&str> = (0..self.d)
                .map(|j| if self.has_edge(i, j) { "1" } else { "0" })
                .collect();
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("ascii")
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let file = std::fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(file))
    }

    /// Parses a square 0/1 CSV matrix without header.
    pub fn read_csv<R: Read>(input: R) -> Result<Dag> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .from_reader(input);
        let mut rows: Vec<Vec<bool>> = Vec::new();
        for record in reader.records() {
            let record = record.map_err(csv_error)?;
            let line = record.position().map_or(0, |p| p.line());
            let mut row = Vec::with_capacity(record.len());
            for field in record.iter() {
                match field {
                    "0" => row.push(false),
                    "1" => row.push(true),
                    other => {
                        return Err(Error::Csv {
                            line,
                            msg: format!("expected 0 or 1, found {other:?}"),
                        })
                    }
                }
            }
            rows.push(row);
        }
        let d = rows.len();
        if d == 0 {
            return Err(Error::Csv {
                line: 0,
                msg: "empty adjacency matrix".into(),
            });
        }
        if let Some(bad) = rows.iter().position(|r| r.len() != d) {
            return Err(Error::Csv {
                line: bad as u64 + 1,
                msg: format!("row has {} columns, expected {d}", rows[bad].len()),
            });
        }
        Dag::from_adjacency(d, rows.concat())
    }

    pub fn load_csv(path: impl AsRef<Path>) -> Result<Dag> {
        Dag::read_csv(std::fs::File::open(path)?)
    }
}

pub(crate) fn csv_error(e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line());
    Error::Csv {
        line,
        msg: e.to_string(),
    }
}

/// Real-weighted DAG; `weights[(i, j)]` is the coefficient of `X_i` in the mechanism of `X_j`.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightedGraph {
    weights: DMatrix<f64>,
}

impl WeightedGraph {
    pub fn new(weights: DMatrix<f64>) -> Result<Self> {
        if weights.nrows() != weights.ncols() {
            return Err(Error::Shape(format!(
                "weight matrix is {}x{}",
                weights.nrows(),
                weights.ncols()
            )));
        }
        let d = weights.nrows();
        let adj: Vec<bool> = (0..d * d).map(|k| weights[(k / d, k % d)] != 0.0).collect();
        Dag::from_adjacency(d, adj)?;
        Ok(Self { weights })
    }

    pub fn zeros(d: usize) -> Self {
        Self {
            weights: DMatrix::zeros(d, d),
        }
    }

    pub fn d(&self) -> usize {
        self.weights.nrows()
    }

    pub fn weights(&self) -> &DMatrix<f64> {
        &self.weights
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.weights[(i, j)]
    }

    pub fn support(&self) -> Dag {
        let d = self.d();
        let adj = (0..d * d).map(|k| self.weights[(k / d, k % d)] != 0.0).collect();
        Dag::from_adjacency_unchecked(d, adj)
    }
}

/// Decodes a potential vector into its DAG.
///
/// Ties in node potential and non-positive edge potentials produce no edge.
pub fn vec_to_dag(z: &PotentialVec) -> Dag {
    let d = z.d;
    let p = z.node_potentials();
    let mut adj = vec![false; d * d];
    let mut slot = d;
    for i in 0..d {
        for j in i + 1..d {
            if z.values[slot] > 0.0 {
                if p[j] > p[i] {
                    adj[i * d + j] = true;
                } else if p[i] > p[j] {
                    adj[j * d + i] = true;
                }
            }
            slot += 1;
        }
    }
    Dag::from_adjacency_unchecked(d, adj)
}

/// Builds a potential vector in `[-eps/2, eps/2]^{d(d+1)/2}` that decodes to `dag`.
///
/// Node potentials are ancestor counts rescaled to `[-eps/2, eps/2]`; connected pairs
/// get edge potential `+eps/2` and all others `-eps/2`. When every node has the same
/// ancestor count (only possible for the edgeless graph) all potentials are `-eps/2`.
pub fn dag_to_vec(dag: &Dag, eps: f64) -> Result<PotentialVec> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::InvalidArgument(format!("epsilon must be positive, got {eps}")));
    }
    let d = dag.d;
    let counts = dag.ancestor_counts();
    let lo = *counts.iter().min().unwrap_or(&0);
    let hi = *counts.iter().max().unwrap_or(&0);
    let half = 0.5 * eps;
    let mut values = Vec::with_capacity(potential_len(d));
    if hi == lo {
        values.extend(std::iter::repeat(-half).take(d));
    } else {
        let span = (hi - lo) as f64;
        values.extend(
            counts
                .iter()
                .map(|&c| (c - lo) as f64 / span * eps - half),
        );
    }
    for i in 0..d {
        for j in i + 1..d {
            let connected = dag.has_edge(i, j) || dag.has_edge(j, i);
            values.push(if connected { half } else { -half });
        }
    }
    PotentialVec::new(d, values)
}

fn kahn_order(d: usize, adj: &[bool]) -> Option<Vec<usize>> {
    let mut indegree = vec![0usize; d];
    for i in 0..d {
        for j in 0..d {
            if adj[i * d + j] {
                indegree[j] += 1;
            }
        }
    }
    let mut ready: std::collections::BinaryHeap<std::cmp::Reverse<usize>> = (0..d)
        .filter(|&j| indegree[j] == 0)
        .map(std::cmp::Reverse)
        .collect();
    let mut order = Vec::with_capacity(d);
    while let Some(std::cmp::Reverse(i)) = ready.pop() {
        order.push(i);
        for j in 0..d {
            if adj[i * d + j] {
                indegree[j] -= 1;
                if indegree[j] == 0 {
                    ready.push(std::cmp::Reverse(j));
                }
            }
        }
    }
    (order.len() == d).then_some(order)
}

/// True iff the row-major `d x d` adjacency admits a topological order.
pub fn is_acyclic(d: usize, adj: &[bool]) -> bool {
    kahn_order(d, adj).is_some()
}

/// Every labeled DAG on `d <= 4` nodes, by brute force over all off-diagonal patterns.
pub fn enumerate_dags(d: usize) -> Result<Vec<Dag>> {
    if d > 4 {
        return Err(Error::EnumerationTooLarge(d));
    }
    let slots: Vec<usize> = (0..d * d).filter(|k| k / d != k % d).collect();
    let mut out = Vec::new();
    for mask in 0u32..(1u32 << slots.len()) {
        let mut adj = vec![false; d * d];
        for (bit, &k) in slots.iter().enumerate() {
            adj[k] = mask >> bit & 1 == 1;
        }
        if is_acyclic(d, &adj) {
            out.push(Dag { d, adj });
        }
    }
    Ok(out)
}
