//! Sensor graphs, the combinatorial Laplacian, and the graph Fourier basis.
//!
//! Graphs are undirected, unweighted and loop-free. The Laplacian `L = D - A`
//! is used as the graph shift operator; its orthonormal eigenvectors sorted by
//! eigenvalue form the graph Fourier basis.

use std::collections::BTreeSet;
use std::io::{BufRead, Write};

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// A point in the plane, in arbitrary spatial units.
pub type Point = [f64; 2];

#[derive(Debug, Clone, PartialEq)]
pub struct SpatialGraph {
    coords: Vec<Point>,
    n_vertices: usize,
    /// Unordered pairs stored as `(lo, hi)` with `lo < hi`.
    edges: BTreeSet<(usize, usize)>,
}

impl SpatialGraph {
    /// Builds a graph from an explicit edge list. Pairs are normalized to
    /// `(lo, hi)`; duplicates and reversed duplicates collapse.
    pub fn from_edges(
        n_vertices: usize,
        edges: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self> {
        if n_vertices == 0 {
            return Err(Error::DegenerateInput(
                "graph needs at least one vertex".into(),
            ));
        }
        let mut set = BTreeSet::new();
        for (u, v) in edges {
            if u >= n_vertices || v >= n_vertices {
                return Err(Error::DegenerateInput(format!(
                    "edge ({u}, {v}) references a vertex >= {n_vertices}"
                )));
            }
            if u == v {
                return Err(Error::DegenerateInput(format!("self-loop at vertex {u}")));
            }
            set.insert((u.min(v), u.max(v)));
        }
        Ok(Self {
            coords: Vec::new(),
            n_vertices,
            edges: set,
        })
    }

    /// Attaches coordinates (one per vertex).
    pub fn with_coords(mut self, coords: Vec<Point>) -> Result<Self> {
        if coords.len() != self.n_vertices {
            return Err(Error::ShapeError(format!(
                "{} coordinates for {} vertices",
                coords.len(),
                self.n_vertices
            )));
        }
        self.coords = coords;
        Ok(self)
    }

    pub fn n_vertices(&self) -> usize {
        self.n_vertices
    }

    /// Empty when the graph was read from an edge list without coordinates.
    pub fn coords(&self) -> &[Point] {
        &self.coords
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.edges.contains(&(u.min(v), u.max(v)))
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.n_vertices];
        for &(u, v) in &self.edges {
            deg[u] += 1;
            deg[v] += 1;
        }
        deg
    }

    /// Combinatorial Laplacian `D - A` with unit edge weights.
    pub fn laplacian(&self) -> DMatrix<f64> {
        let n = self.n_vertices;
        let mut l = DMatrix::zeros(n, n);
        for &(u, v) in &self.edges {
            l[(u, v)] = -1.0;
            l[(v, u)] = -1.0;
            l[(u, u)] += 1.0;
            l[(v, v)] += 1.0;
        }
        l
    }
}

/// Output of [`build_knn_graph`]. `clamped_from` records a requested `k`
/// that had to be reduced to `N - 1`.
#[derive(Debug, Clone)]
pub struct KnnGraph {
    pub graph: SpatialGraph,
    pub k: usize,
    pub clamped_from: Option<usize>,
}

/// Connects every vertex to its `k` nearest Euclidean neighbors and
/// symmetrizes the edge set by union. Distance ties go to the lower index.
pub fn build_knn_graph(coords: &[Point], k: usize) -> Result<KnnGraph> {
    let n = coords.len();
    if n < 2 {
        return Err(Error::DegenerateInput(format!(
            "k-NN graph needs at least 2 points, got {n}"
        )));
    }
    if k == 0 {
        return Err(Error::DegenerateInput("k must be at least 1".into()));
    }
    if coords.iter().flatten().any(|c| !c.is_finite()) {
        return Err(Error::DegenerateInput("non-finite coordinate".into()));
    }
    let (k_eff, clamped_from) = if k >= n { (n - 1, Some(k)) } else { (k, None) };

    let mut edges = BTreeSet::new();
    let mut cand: Vec<(f64, usize)> = Vec::with_capacity(n - 1);
    for i in 0..n {
        cand.clear();
        for j in 0..n {
            if j == i {
                continue;
            }
            let dx = coords[i][0] - coords[j][0];
            let dy = coords[i][1] - coords[j][1];
            let d2 = dx * dx + dy * dy;
            if d2 == 0.0 {
                return Err(Error::DegenerateInput(format!(
                    "points {} and {} share coordinates",
                    i.min(j),
                    i.max(j)
                )));
            }
            cand.push((d2, j));
        }
        cand.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        for &(_, j) in cand.iter().take(k_eff) {
            edges.insert((i.min(j), i.max(j)));
        }
    }

    let graph = SpatialGraph {
        coords: coords.to_vec(),
        n_vertices: n,
        edges,
    };
    Ok(KnnGraph {
        graph,
        k: k_eff,
        clamped_from,
    })
}

/// Eigenvalues in nondecreasing order with matching orthonormal eigenvector
/// columns. In each column the first entry of magnitude above `1e-12` is
/// positive.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralBasis {
    eigenvalues: Vec<f64>,
    eigenvectors: DMatrix<f64>,
}

const SYMMETRY_TOL: f64 = 1e-10;
const SIGN_TOL: f64 = 1e-12;

/// Dense symmetric eigendecomposition of a graph shift operator.
pub fn eigendecompose(shift: &DMatrix<f64>) -> Result<SpectralBasis> {
    let n = shift.nrows();
    if n == 0 || shift.ncols() != n {
        return Err(Error::InvalidOperator(format!(
            "expected a non-empty square matrix, got {}x{}",
            shift.nrows(),
            shift.ncols()
        )));
    }
    for i in 0..n {
        for j in (i + 1)..n {
            let d = (shift[(i, j)] - shift[(j, i)]).abs();
            if !(d <= SYMMETRY_TOL) {
                return Err(Error::InvalidOperator(format!(
                    "asymmetric at ({i}, {j}): |S_ij - S_ji| = {d:e}"
                )));
            }
        }
    }

    let eig = nalgebra::SymmetricEigen::new(shift.clone());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));

    let eigenvalues = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut eigenvectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        let col = eig.eigenvectors.column(src);
        let sign = col
            .iter()
            .find(|x| x.abs() > SIGN_TOL)
            .map_or(1.0, |x| x.signum());
        eigenvectors.set_column(dst, &(col * sign));
    }
    Ok(SpectralBasis {
        eigenvalues,
        eigenvectors,
    })
}

impl SpectralBasis {
    pub fn n(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Columns are the basis vectors `phi_1 .. phi_N`.
    pub fn eigenvectors(&self) -> &DMatrix<f64> {
        &self.eigenvectors
    }

    /// `phi_k(v)` with a 1-based frequency index `k`.
    #[inline]
    pub fn phi(&self, k: usize, v: usize) -> f64 {
        self.eigenvectors[(v, k - 1)]
    }

    /// Laplacian basis of `graph`.
    pub fn of_graph(graph: &SpatialGraph) -> Result<Self> {
        eigendecompose(&graph.laplacian())
    }
}

/// Writes `N` on the first line, then one `u v` pair per line.
pub fn write_edge_list<W: Write>(graph: &SpatialGraph, mut out: W) -> Result<()> {
    writeln!(out, "{}", graph.n_vertices())?;
    for (u, v) in graph.edges() {
        writeln!(out, "{u} {v}")?;
    }
    Ok(())
}

pub fn read_edge_list<R: BufRead>(input: R) -> Result<SpatialGraph> {
    let mut lines = input
        .lines()
        .enumerate()
        .filter(|(_, l)| l.as_ref().map_or(true, |s| !s.trim().is_empty()));
    let (_, first) = lines
        .next()
        .ok_or_else(|| Error::DegenerateInput("empty edge list".into()))?;
    let n: usize = first?
        .trim()
        .parse()
        .map_err(|e| Error::DegenerateInput(format!("line 1: vertex count: {e}")))?;
    let mut edges = Vec::new();
    for (lineno, line) in lines {
        let line = line?;
        let mut parts = line.split_whitespace();
        let mut next = || -> Result<usize> {
            parts
                .next()
                .ok_or_else(|| {
                    Error::DegenerateInput(format!("line {}: expected 'u v'", lineno + 1))
                })?
                .parse()
                .map_err(|e| Error::DegenerateInput(format!("line {}: {e}", lineno + 1)))
        };
        let u = next()?;
        let v = next()?;
        edges.push((u, v));
    }
    SpatialGraph::from_edges(n, edges)
}

/// CSV with header `vertex_id,x,y`.
pub fn write_coords_csv<W: Write>(coords: &[Point], mut out: W) -> Result<()> {
    writeln!(out, "vertex_id,x,y")?;
    for (i, c) in coords.iter().enumerate() {
        writeln!(out, "{i},{},{}", c[0], c[1])?;
    }
    Ok(())
}

/// Reads a `vertex_id,x,y` CSV. Rows may come in any order but ids must
/// cover `0..N` exactly once.
pub fn read_coords_csv<R: BufRead>(input: R) -> Result<Vec<Point>> {
    let mut rows: Vec<(usize, Point)> = Vec::new();
    for (lineno, line) in input.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || (lineno == 0 && line.starts_with("vertex_id")) {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 3 {
            return Err(Error::DegenerateInput(format!(
                "line {}: expected 3 fields, got {}",
                lineno + 1,
                fields.len()
            )));
        }
        let bad =
            |e: &dyn std::fmt::Display| Error::DegenerateInput(format!("line {}: {e}", lineno + 1));
        let id: usize = fields[0].parse().map_err(|e| bad(&e))?;
        let x: f64 = fields[1].parse().map_err(|e| bad(&e))?;
        let y: f64 = fields[2].parse().map_err(|e| bad(&e))?;
        rows.push((id, [x, y]));
    }
    rows.sort_by_key(|r| r.0);
    for (expect, (id, _)) in rows.iter().enumerate() {
        if *id != expect {
            return Err(Error::DegenerateInput(format!(
                "vertex ids must cover 0..{} exactly once",
                rows.len()
            )));
        }
    }
    Ok(rows.into_iter().map(|r| r.1).collect())
}
