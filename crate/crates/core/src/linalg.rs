//! Sparse symmetric storage and the two solvers used for interior
//! Dirichlet problems: an envelope (skyline) Cholesky factorization after
//! reverse Cuthill-McKee reordering, and Jacobi-preconditioned conjugate
//! gradients for systems above the direct-solve size limit.

use std::collections::VecDeque;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of unknowns above which `SolverMethod::Auto` switches to CG.
pub const DIRECT_SOLVE_LIMIT: usize = 20_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolverMethod {
    Auto,
    DirectFactorization,
    ConjugateGradient,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub method: SolverMethod,
    /// Relative residual tolerance; must lie in (0, 1e-6].
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            method: SolverMethod::Auto,
            tolerance: 1e-12,
            max_iterations: 50_000,
        }
    }
}

impl SolverConfig {
    pub fn with_tolerance(tolerance: f64) -> Result<Self> {
        let cfg = Self {
            tolerance,
            ..Self::default()
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0 && self.tolerance <= 1e-6) {
            return Err(Error::InvalidParameter(format!(
                "solver tolerance {} outside (0, 1e-6]",
                self.tolerance
            )));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidParameter("max_iterations must be positive".into()));
        }
        Ok(())
    }

    fn use_direct(&self, n: usize) -> bool {
        match self.method {
            SolverMethod::Auto => n <= DIRECT_SOLVE_LIMIT,
            SolverMethod::DirectFactorization => true,
            SolverMethod::ConjugateGradient => false,
        }
    }
}

/// Symmetric matrix in compressed-row form with both triangles stored.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseSymmetric {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl SparseSymmetric {
    /// Assembles from `(i, j, value)` triplets. Off-diagonal triplets are
    /// mirrored; duplicates are summed.
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for &(i, j, v) in triplets {
            rows[i].push((j, v));
            if i != j {
                rows[j].push((i, v));
            }
        }
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for mut row in rows {
            row.sort_by_key(|&(j, _)| j);
            let mut last: Option<usize> = None;
            for (j, v) in row {
                if last == Some(j) {
                    *vals.last_mut().unwrap() += v;
                } else {
                    cols.push(j);
                    vals.push(v);
                    last = Some(j);
                }
            }
            row_ptr.push(cols.len());
        }
        Self {
            n,
            row_ptr,
            cols,
            vals,
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let (a, b) = (self.row_ptr[i], self.row_ptr[i + 1]);
        self.cols[a..b].iter().copied().zip(self.vals[a..b].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (a, b) = (self.row_ptr[i], self.row_ptr[i + 1]);
        match self.cols[a..b].binary_search(&j) {
            Ok(k) => self.vals[a + k],
            Err(_) => 0.0,
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| self.row(i).map(|(j, v)| v * x[j]).sum())
            .collect()
    }

    pub fn quadratic_form(&self, x: &[f64], y: &[f64]) -> f64 {
        let ax = self.apply(x);
        ax.iter().zip(y).map(|(a, b)| a * b).sum()
    }

    /// Row sums, i.e. `A·1`.
    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.row(i).map(|(_, v)| v).sum()).collect()
    }

    /// Principal submatrix on `idx` (in the given order).
    pub fn principal_submatrix(&self, idx: &[usize]) -> SparseSymmetric {
        let mut local = vec![usize::MAX; self.n];
        for (k, &i) in idx.iter().enumerate() {
            local[i] = k;
        }
        let mut triplets = Vec::new();
        for (k, &i) in idx.iter().enumerate() {
            for (j, v) in self.row(i) {
                let l = local[j];
                if l != usize::MAX && l >= k {
                    triplets.push((k, l, v));
                }
            }
        }
        SparseSymmetric::from_triplets(idx.len(), &triplets)
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                m[(i, j)] = v;
            }
        }
        m
    }

    fn inf_norm(&self) -> f64 {
        (0..self.n)
            .map(|i| self.row(i).map(|(_, v)| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }
}

/// Reverse Cuthill-McKee ordering of the sparsity graph.
pub fn reverse_cuthill_mckee(a: &SparseSymmetric) -> Vec<usize> {
    let n = a.dim();
    let degree: Vec<usize> = (0..n).map(|i| a.row(i).filter(|&(j, _)| j != i).count()).collect();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);

    let bfs_levels = |start: usize, visited: &[bool]| -> (usize, usize) {
        // returns (last vertex of the deepest level, eccentricity)
        let mut dist = vec![usize::MAX; n];
        let mut queue = VecDeque::new();
        dist[start] = 0;
        queue.push_back(start);
        let mut far = start;
        while let Some(v) = queue.pop_front() {
            if dist[v] > dist[far] || (dist[v] == dist[far] && degree[v] < degree[far]) {
                far = v;
            }
            for (w, _) in a.row(v) {
                if w != v && !visited[w] && dist[w] == usize::MAX {
                    dist[w] = dist[v] + 1;
                    queue.push_back(w);
                }
            }
        }
        (far, dist[far])
    };

    let mut seeds: Vec<usize> = (0..n).collect();
    seeds.sort_by_key(|&i| (degree[i], i));
    for &seed in &seeds {
        if visited[seed] {
            continue;
        }
        // pseudo-peripheral start
        let mut start = seed;
        let (mut far, mut ecc) = bfs_levels(start, &visited);
        loop {
            let (far2, ecc2) = bfs_levels(far, &visited);
            if ecc2 <= ecc {
                break;
            }
            start = far;
            far = far2;
            ecc = ecc2;
        }
        let _ = far;
        let mut queue = VecDeque::new();
        visited[start] = true;
        queue.push_back(start);
        while let Some(v) = queue.pop_front() {
            order.push(v);
            let mut nbrs: Vec<usize> = a
                .row(v)
                .map(|(w, _)| w)
                .filter(|&w| w != v && !visited[w])
                .collect();
            nbrs.sort_by_key(|&w| (degree[w], w));
            for w in nbrs {
                visited[w] = true;
                queue.push_back(w);
            }
        }
    }
    order.reverse();
    order
}

/// Envelope Cholesky factor `P A Pᵀ = L Lᵀ`.
#[derive(Debug, Clone)]
pub struct SkylineCholesky {
    n: usize,
    perm: Vec<usize>,
    first: Vec<usize>,
    row_start: Vec<usize>,
    data: Vec<f64>,
}

impl SkylineCholesky {
    pub fn factor(a: &SparseSymmetric) -> Result<Self> {
        let n = a.dim();
        let perm = reverse_cuthill_mckee(a);
        let mut inv = vec![0usize; n];
        for (k, &i) in perm.iter().enumerate() {
            inv[i] = k;
        }
        let mut first: Vec<usize> = (0..n).collect();
        for k in 0..n {
            for (j, _) in a.row(perm[k]) {
                first[k] = first[k].min(inv[j]);
            }
        }
        let mut row_start = Vec::with_capacity(n + 1);
        row_start.push(0);
        for k in 0..n {
            let len = k - first[k] + 1;
            row_start.push(row_start[k] + len);
        }
        let mut data = vec![0.0; row_start[n]];
        for k in 0..n {
            for (j, v) in a.row(perm[k]) {
                let l = inv[j];
                if l <= k {
                    data[row_start[k] + (l - first[k])] = v;
                }
            }
        }
        for i in 0..n {
            let fi = first[i];
            let ri = row_start[i];
            for j in fi..i {
                let fj = first[j];
                let rj = row_start[j];
                let lo = fi.max(fj);
                let len = j - lo;
                let (head, tail) = data.split_at_mut(ri);
                let row_j = &head[rj + (lo - fj)..rj + (lo - fj) + len];
                let row_i = &tail[(lo - fi)..(lo - fi) + len];
                let dot: f64 = row_i.iter().zip(row_j).map(|(x, y)| x * y).sum();
                let diag_j = head[rj + (j - fj)];
                let slot = &mut tail[j - fi];
                *slot = (*slot - dot) / diag_j;
            }
            let row_i = &data[ri..ri + (i - fi)];
            let sq: f64 = row_i.iter().map(|x| x * x).sum();
            let orig = data[ri + (i - fi)];
            let d = orig - sq;
            if !(d > 1e-14 * orig.abs()) || !d.is_finite() {
                return Err(Error::SingularRestriction(format!(
                    "nonpositive pivot {d:e} at elimination step {i}"
                )));
            }
            data[ri + (i - fi)] = d.sqrt();
        }
        Ok(Self {
            n,
            perm,
            first,
            row_start,
            data,
        })
    }

    pub fn envelope_size(&self) -> usize {
        self.data.len()
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut y: Vec<f64> = self.perm.iter().map(|&i| b[i]).collect();
        for i in 0..n {
            let fi = self.first[i];
            let ri = self.row_start[i];
            let row = &self.data[ri..ri + (i - fi)];
            let dot: f64 = row.iter().zip(&y[fi..i]).map(|(a, b)| a * b).sum();
            y[i] = (y[i] - dot) / self.data[ri + (i - fi)];
        }
        for i in (0..n).rev() {
            let fi = self.first[i];
            let ri = self.row_start[i];
            y[i] /= self.data[ri + (i - fi)];
            let yi = y[i];
            for (k, l) in self.data[ri..ri + (i - fi)].iter().enumerate() {
                y[fi + k] -= l * yi;
            }
        }
        let mut x = vec![0.0; n];
        for (k, &i) in self.perm.iter().enumerate() {
            x[i] = y[k];
        }
        x
    }
}

/// Jacobi-preconditioned conjugate gradients.
pub fn conjugate_gradient(
    a: &SparseSymmetric,
    b: &[f64],
    tolerance: f64,
    max_iterations: usize,
) -> Result<Vec<f64>> {
    let n = a.dim();
    let inv_diag: Vec<f64> = a
        .diagonal()
        .iter()
        .map(|&d| if d > 0.0 { 1.0 / d } else { 1.0 })
        .collect();
    let b_norm = norm2(b);
    let mut x = vec![0.0; n];
    if b_norm == 0.0 {
        return Ok(x);
    }
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(r, d)| r * d).collect();
    let mut p = z.clone();
    let mut rz: f64 = dot(&r, &z);
    for _ in 0..max_iterations {
        let ap = a.apply(&p);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(Error::SingularRestriction("CG breakdown (pᵀAp ≤ 0)".into()));
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        if norm2(&r) <= tolerance * b_norm {
            return Ok(x);
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(Error::SolverFailure(format!(
        "CG did not reach relative residual {tolerance:e} in {max_iterations} iterations"
    )))
}

/// A prepared solver for one SPD system, shareable across threads.
#[derive(Debug, Clone)]
pub enum SpdSolver {
    Direct {
        matrix: SparseSymmetric,
        factor: SkylineCholesky,
        tolerance: f64,
    },
    ConjugateGradient {
        matrix: SparseSymmetric,
        tolerance: f64,
        max_iterations: usize,
    },
}

impl SpdSolver {
    pub fn new(matrix: SparseSymmetric, config: &SolverConfig) -> Result<Self> {
        config.validate()?;
        if config.use_direct(matrix.dim()) {
            let factor = SkylineCholesky::factor(&matrix)?;
            Ok(SpdSolver::Direct {
                matrix,
                factor,
                tolerance: config.tolerance,
            })
        } else {
            Ok(SpdSolver::ConjugateGradient {
                matrix,
                tolerance: config.tolerance,
                max_iterations: config.max_iterations,
            })
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix().dim()
    }

    pub fn matrix(&self) -> &SparseSymmetric {
        match self {
            SpdSolver::Direct { matrix, .. } | SpdSolver::ConjugateGradient { matrix, .. } => matrix,
        }
    }

    /// Solves `A x = b`. The direct path applies one step of iterative
    /// refinement and then checks the normwise backward error
    /// `‖b − Ax‖∞ / (‖A‖∞‖x‖∞ + ‖b‖∞)` against the tolerance.
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        if b.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: b.len(),
            });
        }
        if self.dim() == 0 {
            return Ok(Vec::new());
        }
        match self {
            SpdSolver::Direct {
                matrix,
                factor,
                tolerance,
            } => {
                let mut x = factor.solve(b);
                let r: Vec<f64> = matrix.apply(&x).iter().zip(b).map(|(ax, b)| b - ax).collect();
                let dx = factor.solve(&r);
                for (xi, d) in x.iter_mut().zip(dx) {
                    *xi += d;
                }
                let r: Vec<f64> = matrix.apply(&x).iter().zip(b).map(|(ax, b)| b - ax).collect();
                let denom = matrix.inf_norm() * inf_norm(&x) + inf_norm(b);
                let backward = if denom > 0.0 { inf_norm(&r) / denom } else { 0.0 };
                if !(backward <= *tolerance) {
                    return Err(Error::SolverFailure(format!(
                        "backward error {backward:e} above tolerance {tolerance:e}"
                    )));
                }
                Ok(x)
            }
            SpdSolver::ConjugateGradient {
                matrix,
                tolerance,
                max_iterations,
            } => conjugate_gradient(matrix, b, *tolerance, *max_iterations),
        }
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn inf_norm(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Cholesky-based Schur complement of a dense SPD-block matrix:
/// `A_kk − A_ke A_ee⁻¹ A_ek` with `keep`/`elim` index sets.
pub fn dense_schur_complement(a: &DMatrix<f64>, keep: &[usize], elim: &[usize]) -> Result<DMatrix<f64>> {
    let akk = a.select_rows(keep).select_columns(keep);
    if elim.is_empty() {
        return Ok(akk);
    }
    let aee = a.select_rows(elim).select_columns(elim);
    let aek = a.select_rows(elim).select_columns(keep);
    let chol = aee
        .cholesky()
        .ok_or_else(|| Error::SingularRestriction("dense eliminated block is not SPD".into()))?;
    let y = chol.solve(&aek);
    Ok(akk - aek.transpose() * y)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid_laplacian(w: usize, shift: f64) -> SparseSymmetric {
        let id = |x: usize, y: usize| y * w + x;
        let mut t = Vec::new();
        for y in 0..w {
            for x in 0..w {
                t.push((id(x, y), id(x, y), shift));
                if x + 1 < w {
                    t.push((id(x, y), id(x, y), 1.0));
                    t.push((id(x + 1, y), id(x + 1, y), 1.0));
                    t.push((id(x, y), id(x + 1, y), -1.0));
                }
                if y + 1 < w {
                    t.push((id(x, y), id(x, y), 1.0));
                    t.push((id(x, y + 1), id(x, y + 1), 1.0));
                    t.push((id(x, y), id(x, y + 1), -1.0));
                }
            }
        }
        SparseSymmetric::from_triplets(w * w, &t)
    }

    #[test]
    fn triplets_are_mirrored_and_summed() {
        let a = SparseSymmetric::from_triplets(2, &[(0, 0, 1.0), (0, 0, 2.0), (0, 1, -1.0)]);
        assert_eq!(a.get(0, 0), 3.0);
        assert_eq!(a.get(1, 0), -1.0);
        assert_eq!(a.get(1, 1), 0.0);
        assert_eq!(a.nnz(), 3);
    }

    #[test]
    fn rcm_is_a_permutation() {
        let a = grid_laplacian(7, 0.1);
        let mut p = reverse_cuthill_mckee(&a);
        p.sort_unstable();
        assert_eq!(p, (0..49).collect::<Vec<_>>());
    }

    #[test]
    fn skyline_matches_dense_solve() {
        let a = grid_laplacian(9, 0.05);
        let b: Vec<f64> = (0..81).map(|i| ((i * 37) % 11) as f64 - 5.0).collect();
        let f = SkylineCholesky::factor(&a).unwrap();
        let x = f.solve(&b);
        let dense = a.to_dense().cholesky().unwrap().solve(&nalgebra::DVector::from_vec(b.clone()));
        for i in 0..81 {
            assert!((x[i] - dense[i]).abs() < 1e-10 * (1.0 + dense[i].abs()));
        }
        // RCM keeps the grid envelope near n * w
        assert!(f.envelope_size() < 81 * 20);
    }

    #[test]
    fn cg_agrees_with_direct() {
        let a = grid_laplacian(12, 0.01);
        let b: Vec<f64> = (0..144).map(|i| (i as f64).sin()).collect();
        let direct = SpdSolver::new(a.clone(), &SolverConfig::default()).unwrap();
        let cfg = SolverConfig {
            method: SolverMethod::ConjugateGradient,
            ..SolverConfig::default()
        };
        let cg = SpdSolver::new(a, &cfg).unwrap();
        let x1 = direct.solve(&b).unwrap();
        let x2 = cg.solve(&b).unwrap();
        let scale = x1.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for (p, q) in x1.iter().zip(&x2) {
            assert!((p - q).abs() < 1e-9 * scale);
        }
    }

    #[test]
    fn singular_system_is_reported() {
        let a = grid_laplacian(4, 0.0);
        assert!(matches!(
            SkylineCholesky::factor(&a),
            Err(Error::SingularRestriction(_))
        ));
    }

    #[test]
    fn tolerance_range_enforced() {
        assert!(SolverConfig::with_tolerance(1e-5).is_err());
        assert!(SolverConfig::with_tolerance(0.0).is_err());
        assert!(SolverConfig::with_tolerance(1e-10).is_ok());
    }

    #[test]
    fn dense_schur_of_path() {
        // path 0-1-2, eliminate the middle vertex
        let a = DMatrix::from_row_slice(3, 3, &[1.0, -1.0, 0.0, -1.0, 2.0, -1.0, 0.0, -1.0, 1.0]);
        let s = dense_schur_complement(&a, &[0, 2], &[1]).unwrap();
        assert!((s[(0, 1)] + 0.5).abs() < 1e-15);
        assert!((s[(0, 0)] - 0.5).abs() < 1e-15);
    }
}
