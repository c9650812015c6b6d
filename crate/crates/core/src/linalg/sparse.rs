//! Compressed sparse rows, reverse Cuthill–McKee ordering and an envelope
//! (skyline) Cholesky factorization for the interior block of the stiffness
//! matrix.

use std::collections::VecDeque;

use rayon::prelude::*;

use super::dense::{Cholesky, DenseMatrix, SymMatrix};
use crate::error::{Error, Result};

/// Below this order the interior block is factored densely.
pub const DENSE_FALLBACK_ORDER: usize = 300;

#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    rows: usize,
    cols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    data: Vec<f64>,
}

impl CsrMatrix {
    /// Sums duplicate `(row, col, value)` entries.
    pub fn from_triplets(rows: usize, cols: usize, mut triplets: Vec<(usize, usize, f64)>) -> Self {
        triplets.sort_unstable_by_key(|&(i, j, _)| (i, j));
        let mut indptr = vec![0; rows + 1];
        let mut indices = Vec::with_capacity(triplets.len());
        let mut data: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (i, j, v) in triplets {
            assert!(i < rows && j < cols, "triplet ({i}, {j}) out of bounds");
            if last == Some((i, j)) {
                *data.last_mut().unwrap() += v;
            } else {
                indices.push(j);
                data.push(v);
                indptr[i + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..rows {
            indptr[i + 1] += indptr[i];
        }
        Self {
            rows,
            cols,
            indptr,
            indices,
            data,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.data.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.indptr[i]..self.indptr[i + 1];
        self.indices[range.clone()]
            .iter()
            .copied()
            .zip(self.data[range].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let range = self.indptr[i]..self.indptr[i + 1];
        match self.indices[range.clone()].binary_search(&j) {
            Ok(pos) => self.data[range.start + pos],
            Err(_) => 0.0,
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.rows)
            .map(|i| self.row(i).map(|(j, v)| v * x[j]).sum())
            .collect()
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut m = DenseMatrix::zeros(self.rows, self.cols);
        for i in 0..self.rows {
            for (j, v) in self.row(i) {
                m[(i, j)] = v;
            }
        }
        m
    }

    /// Extracts the block with the given row and column index lists.
    pub fn submatrix(&self, row_ids: &[usize], col_ids: &[usize]) -> CsrMatrix {
        let mut col_map = vec![usize::MAX; self.cols];
        for (new, &old) in col_ids.iter().enumerate() {
            col_map[old] = new;
        }
        let triplets = row_ids
            .iter()
            .enumerate()
            .flat_map(|(new_i, &old_i)| {
                let col_map = &col_map;
                self.row(old_i)
                    .filter(move |&(j, _)| col_map[j] != usize::MAX)
                    .map(move |(j, v)| (new_i, col_map[j], v))
            })
            .collect();
        CsrMatrix::from_triplets(row_ids.len(), col_ids.len(), triplets)
    }

    /// Dense symmetric copy (lower triangle is taken).
    pub fn to_sym(&self) -> Result<SymMatrix> {
        if self.rows != self.cols {
            return Err(Error::DimensionMismatch("matrix is not square".into()));
        }
        let mut s = SymMatrix::zeros(self.rows);
        for i in 0..self.rows {
            for (j, v) in self.row(i) {
                if j <= i {
                    s.set(i, j, v);
                }
            }
        }
        Ok(s)
    }

    /// Largest `|A_ij - A_ji|`.
    pub fn asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.rows {
            for (j, v) in self.row(i) {
                worst = worst.max((v - self.get(j, i)).abs());
            }
        }
        worst
    }
}

/// Reverse Cuthill–McKee ordering of the graph of a structurally symmetric
/// matrix. Returns `perm` with `perm[new] = old`.
pub fn reverse_cuthill_mckee(a: &CsrMatrix) -> Vec<usize> {
    let n = a.rows();
    let degree: Vec<usize> = (0..n).map(|i| a.row(i).filter(|&(j, _)| j != i).count()).collect();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut neighbours = Vec::new();

    while order.len() < n {
        // Start each component from an unvisited node of minimum degree.
        let start = (0..n)
            .filter(|&i| !visited[i])
            .min_by_key(|&i| degree[i])
            .unwrap();
        let start = pseudo_peripheral(a, start, &visited);
        let mut queue = VecDeque::from([start]);
        visited[start] = true;
        while let Some(node) = queue.pop_front() {
            order.push(node);
            neighbours.clear();
            neighbours.extend(a.row(node).map(|(j, _)| j).filter(|&j| !visited[j]));
            neighbours.sort_by_key(|&j| (degree[j], j));
            for &j in &neighbours {
                visited[j] = true;
                queue.push_back(j);
            }
        }
    }
    order.reverse();
    order
}

/// Node at maximal BFS depth from `start`, repeated while the eccentricity grows.
fn pseudo_peripheral(a: &CsrMatrix, start: usize, blocked: &[bool]) -> usize {
    let mut current = start;
    let mut best_depth = 0;
    for _ in 0..8 {
        let (far, depth) = bfs_farthest(a, current, blocked);
        if depth <= best_depth {
            break;
        }
        best_depth = depth;
        current = far;
    }
    current
}

fn bfs_farthest(a: &CsrMatrix, start: usize, blocked: &[bool]) -> (usize, usize) {
    let mut depth = vec![usize::MAX; a.rows()];
    depth[start] = 0;
    let mut queue = VecDeque::from([start]);
    let mut far = (start, 0);
    while let Some(node) = queue.pop_front() {
        let d = depth[node];
        if d > far.1 {
            far = (node, d);
        }
        for (j, _) in a.row(node) {
            if !blocked[j] && depth[j] == usize::MAX {
                depth[j] = d + 1;
                queue.push_back(j);
            }
        }
    }
    far
}

/// Envelope Cholesky factor of `P A Pᵀ`.
#[derive(Debug, Clone)]
pub struct EnvelopeCholesky {
    perm: Vec<usize>,
    first: Vec<usize>,
    offsets: Vec<usize>,
    values: Vec<f64>,
}

impl EnvelopeCholesky {
    pub fn factor(a: &CsrMatrix, perm: Vec<usize>) -> Result<Self> {
        let n = a.rows();
        let mut inverse = vec![0; n];
        for (new, &old) in perm.iter().enumerate() {
            inverse[old] = new;
        }
        let mut first: Vec<usize> = (0..n).collect();
        for (new_i, &old_i) in perm.iter().enumerate() {
            for (old_j, _) in a.row(old_i) {
                let new_j = inverse[old_j];
                if new_j < first[new_i] {
                    first[new_i] = new_j;
                }
            }
        }
        let mut offsets = Vec::with_capacity(n + 1);
        offsets.push(0);
        for i in 0..n {
            offsets.push(offsets[i] + (i - first[i] + 1));
        }
        let mut values = vec![0.0; offsets[n]];
        for (new_i, &old_i) in perm.iter().enumerate() {
            for (old_j, v) in a.row(old_i) {
                let new_j = inverse[old_j];
                if new_j <= new_i {
                    values[offsets[new_i] + new_j - first[new_i]] = v;
                }
            }
        }

        for i in 0..n {
            let fi = first[i];
            let (done, rest) = values.split_at_mut(offsets[i]);
            let row_i = &mut rest[..i - fi + 1];
            for j in fi..i {
                let fj = first[j];
                let row_j = &done[offsets[j]..offsets[j + 1]];
                let start = fi.max(fj);
                let mut s = row_i[j - fi];
                for k in start..j {
                    s -= row_i[k - fi] * row_j[k - fj];
                }
                row_i[j - fi] = s / row_j[j - fj];
            }
            let mut diag = row_i[i - fi];
            for k in fi..i {
                diag -= row_i[k - fi] * row_i[k - fi];
            }
            if !(diag > 0.0) {
                return Err(Error::NonPositivePivot {
                    index: perm[i],
                    value: diag,
                });
            }
            row_i[i - fi] = diag.sqrt();
        }
        Ok(Self {
            perm,
            first,
            offsets,
            values,
        })
    }

    pub fn dim(&self) -> usize {
        self.perm.len()
    }

    /// Stored entries of the factor.
    pub fn envelope_size(&self) -> usize {
        self.values.len()
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.values[self.offsets[i]..self.offsets[i + 1]]
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.dim();
        let mut y: Vec<f64> = self.perm.iter().map(|&old| b[old]).collect();
        for i in 0..n {
            let fi = self.first[i];
            let row = self.row(i);
            let s: f64 = row[..i - fi].iter().zip(&y[fi..i]).map(|(l, v)| l * v).sum();
            y[i] = (y[i] - s) / row[i - fi];
        }
        for i in (0..n).rev() {
            let fi = self.first[i];
            let row = self.row(i);
            y[i] /= row[i - fi];
            let xi = y[i];
            for (v, l) in y[fi..i].iter_mut().zip(&row[..i - fi]) {
                *v -= l * xi;
            }
        }
        let mut x = vec![0.0; n];
        for (new, &old) in self.perm.iter().enumerate() {
            x[old] = y[new];
        }
        x
    }
}

/// Factorization of a sparse symmetric positive definite matrix: dense
/// Cholesky for small orders, RCM-ordered envelope Cholesky otherwise.
#[derive(Debug, Clone)]
pub enum SparseSpdSolver {
    Dense(Cholesky),
    Envelope(EnvelopeCholesky),
}

impl SparseSpdSolver {
    pub fn new(a: &CsrMatrix) -> Result<Self> {
        if a.rows() != a.cols() {
            return Err(Error::DimensionMismatch("matrix is not square".into()));
        }
        if a.rows() < DENSE_FALLBACK_ORDER {
            Ok(Self::Dense(Cholesky::factor(&a.to_sym()?)?))
        } else {
            let perm = reverse_cuthill_mckee(a);
            Ok(Self::Envelope(EnvelopeCholesky::factor(a, perm)?))
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Dense(c) => c.dim(),
            Self::Envelope(e) => e.dim(),
        }
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        match self {
            Self::Dense(c) => c.solve(b),
            Self::Envelope(e) => e.solve(b),
        }
    }

    /// Solves for each column independently, in parallel.
    pub fn solve_columns(&self, columns: &[Vec<f64>]) -> Vec<Vec<f64>> {
        columns.par_iter().map(|b| self.solve(b)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::dense::norm2;

    /// 5-point Laplacian plus identity on a `w x w` grid.
    fn grid_matrix(w: usize) -> CsrMatrix {
        let idx = |i: usize, j: usize| i * w + j;
        let mut t = Vec::new();
        for i in 0..w {
            for j in 0..w {
                t.push((idx(i, j), idx(i, j), 5.0));
                if i + 1 < w {
                    t.push((idx(i, j), idx(i + 1, j), -1.0));
                    t.push((idx(i + 1, j), idx(i, j), -1.0));
                }
                if j + 1 < w {
                    t.push((idx(i, j), idx(i, j + 1), -1.0));
                    t.push((idx(i, j + 1), idx(i, j), -1.0));
                }
            }
        }
        CsrMatrix::from_triplets(w * w, w * w, t)
    }

    #[test]
    fn triplets_sum_duplicates() {
        let m = CsrMatrix::from_triplets(2, 2, vec![(0, 0, 1.0), (1, 0, 2.0), (0, 0, 3.0)]);
        assert_eq!(m.get(0, 0), 4.0);
        assert_eq!(m.get(1, 0), 2.0);
        assert_eq!(m.get(1, 1), 0.0);
        assert_eq!(m.nnz(), 2);
    }

    #[test]
    fn rcm_is_a_permutation_and_reduces_bandwidth() {
        let a = grid_matrix(20);
        // Scramble the natural ordering first.
        let n = a.rows();
        let scramble: Vec<usize> = (0..n).map(|i| (i * 37) % n).collect();
        let scrambled = a.submatrix(&scramble, &scramble);
        let perm = reverse_cuthill_mckee(&scrambled);
        let mut sorted = perm.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, (0..n).collect::<Vec<_>>());

        let bandwidth = |m: &CsrMatrix| {
            (0..m.rows())
                .flat_map(|i| m.row(i).map(move |(j, _)| i.abs_diff(j)))
                .max()
                .unwrap()
        };
        let reordered = scrambled.submatrix(&perm, &perm);
        assert!(bandwidth(&reordered) <= 2 * 20, "{}", bandwidth(&reordered));
        assert!(bandwidth(&reordered) < bandwidth(&scrambled));
    }

    #[test]
    fn envelope_solver_matches_dense() {
        let a = grid_matrix(25);
        let n = a.rows();
        assert!(n >= DENSE_FALLBACK_ORDER);
        let solver = SparseSpdSolver::new(&a).unwrap();
        assert!(matches!(solver, SparseSpdSolver::Envelope(_)));
        let b: Vec<f64> = (0..n).map(|i| ((i * 7) % 11) as f64 - 5.0).collect();
        let x = solver.solve(&b);
        let r: Vec<f64> = a.matvec(&x).iter().zip(&b).map(|(p, q)| p - q).collect();
        assert!(norm2(&r) < 1e-10 * norm2(&b));

        let dense = Cholesky::factor(&a.to_sym().unwrap()).unwrap().solve(&b);
        let diff: Vec<f64> = x.iter().zip(&dense).map(|(p, q)| p - q).collect();
        assert!(norm2(&diff) < 1e-10 * norm2(&dense));
    }

    #[test]
    fn envelope_reports_original_pivot_index() {
        let mut t: Vec<(usize, usize, f64)> = (0..400).map(|i| (i, i, 1.0)).collect();
        t[123].2 = -2.0;
        let a = CsrMatrix::from_triplets(400, 400, t);
        match SparseSpdSolver::new(&a) {
            Err(Error::NonPositivePivot { index, .. }) => assert_eq!(index, 123),
            other => panic!("unexpected {other:?}"),
        }
    }
}
