//! Dense linear algebra: row-major matrices, LU solves with partial
//! pivoting, and null-space extraction with a scale-relative rank tolerance.
//!
//! Everything here is deterministic: pivoting scans rows in index order and
//! breaks magnitude ties toward the lower index, so identical inputs always
//! produce identical factorizations.

use thiserror::Error;

/// Relative pivot tolerance: a pivot is treated as zero when its magnitude
/// is at most `RANK_REL_TOL` times the matrix ∞-norm.
pub const RANK_REL_TOL: f64 = 1e-8;

#[derive(Debug, Error, PartialEq)]
pub enum LinalgError {
    #[error("matrix is singular to working precision (pivot {pivot:.3e} at step {step})")]
    Singular { step: usize, pivot: f64 },
    #[error("dimension mismatch: {0}")]
    Shape(String),
}

/// Dense row-major matrix of f64.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        Self {
            rows: r,
            cols: c,
            data: rows.concat(),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    /// ∞-norm: maximum absolute row sum; 0 for empty matrices.
    pub fn inf_norm(&self) -> f64 {
        (0..self.rows)
            .map(|i| self.row(i).iter().map(|x| x.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.cols, "mul_vec dimension mismatch");
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn mat_mul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.rows, "mat_mul dimension mismatch");
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    /// `I - self` for a square matrix.
    pub fn identity_minus(&self) -> Matrix {
        assert_eq!(self.rows, self.cols, "identity_minus needs a square matrix");
        let mut out = self.clone();
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(i, j)] = if i == j {
                    1.0 - self[(i, j)]
                } else {
                    -self[(i, j)]
                };
            }
        }
        out
    }

    /// Copies the submatrix with the given row and column index sets.
    pub fn select(&self, row_idx: &[usize], col_idx: &[usize]) -> Matrix {
        let mut out = Matrix::zeros(row_idx.len(), col_idx.len());
        for (i, &r) in row_idx.iter().enumerate() {
            for (j, &c) in col_idx.iter().enumerate() {
                out[(i, j)] = self[(r, c)];
            }
        }
        out
    }
}

impl std::ops::Index<(usize, usize)> for Matrix {
    type Output = f64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Matrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

/// LU factorization with row partial pivoting, PA = LU stored packed.
pub struct LuFactors {
    lu: Matrix,
    perm: Vec<usize>,
}

/// Factors a square matrix. Fails when a pivot falls below the
/// scale-relative tolerance, i.e. the matrix is singular at working
/// precision.
pub fn lu_factor(a: &Matrix) -> Result<LuFactors, LinalgError> {
    if a.rows() != a.cols() {
        return Err(LinalgError::Shape(format!(
            "{}x{} is not square",
            a.rows(),
            a.cols()
        )));
    }
    let n = a.rows();
    let tol = RANK_REL_TOL * a.inf_norm();
    let mut lu = a.clone();
    let mut perm: Vec<usize> = (0..n).collect();

    for k in 0..n {
        let mut best = k;
        let mut best_abs = lu[(k, k)].abs();
        for r in k + 1..n {
            let v = lu[(r, k)].abs();
            if v > best_abs {
                best = r;
                best_abs = v;
            }
        }
        if best_abs <= tol {
            return Err(LinalgError::Singular {
                step: k,
                pivot: lu[(best, k)],
            });
        }
        if best != k {
            perm.swap(k, best);
            for j in 0..n {
                let tmp = lu[(k, j)];
                lu[(k, j)] = lu[(best, j)];
                lu[(best, j)] = tmp;
            }
        }
        let pivot = lu[(k, k)];
        for r in k + 1..n {
            let factor = lu[(r, k)] / pivot;
            lu[(r, k)] = factor;
            if factor != 0.0 {
                for j in k + 1..n {
                    let sub = factor * lu[(k, j)];
                    lu[(r, j)] -= sub;
                }
            }
        }
    }
    Ok(LuFactors { lu, perm })
}

impl LuFactors {
    /// Solves `A x = b` for one right-hand side.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.lu.rows();
        assert_eq!(b.len(), n, "rhs length mismatch");
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        // forward: L y = P b
        for i in 1..n {
            let mut acc = x[i];
            for j in 0..i {
                acc -= self.lu[(i, j)] * x[j];
            }
            x[i] = acc;
        }
        // backward: U x = y
        for i in (0..n).rev() {
            let mut acc = x[i];
            for j in i + 1..n {
                acc -= self.lu[(i, j)] * x[j];
            }
            x[i] = acc / self.lu[(i, i)];
        }
        x
    }

    /// Solves `A X = B` column by column.
    pub fn solve_matrix(&self, b: &Matrix) -> Matrix {
        let n = self.lu.rows();
        assert_eq!(b.rows(), n, "rhs row count mismatch");
        let mut out = Matrix::zeros(n, b.cols());
        let mut col = vec![0.0; n];
        for j in 0..b.cols() {
            for i in 0..n {
                col[i] = b[(i, j)];
            }
            let x = self.solve(&col);
            for i in 0..n {
                out[(i, j)] = x[i];
            }
        }
        out
    }
}

/// One-shot linear solve.
pub fn solve(a: &Matrix, b: &[f64]) -> Result<Vec<f64>, LinalgError> {
    Ok(lu_factor(a)?.solve(b))
}

/// Null space of a square matrix under the scale-relative pivot tolerance.
#[derive(Debug, Clone)]
pub struct NullSpace {
    pub dim: usize,
    /// Unit-norm basis vectors (empty when `dim == 0`), pairwise
    /// orthogonalized by modified Gram-Schmidt.
    pub basis: Vec<Vec<f64>>,
}

/// Computes the null space by row echelon reduction with partial pivoting.
/// A column whose best remaining pivot is at most `rel_tol * ‖A‖_∞` is
/// treated as free; each free column yields one basis vector.
pub fn null_space(a: &Matrix, rel_tol: f64) -> NullSpace {
    assert_eq!(a.rows(), a.cols(), "null_space needs a square matrix");
    let n = a.rows();
    if n == 0 {
        return NullSpace {
            dim: 0,
            basis: vec![],
        };
    }
    let tol = rel_tol * a.inf_norm();
    let mut work = a.clone();
    // pivot_in_col[j] = row holding the pivot of column j, if any
    let mut pivot_in_col: Vec<Option<usize>> = vec![None; n];
    let mut pivot_row = 0usize;

    for col in 0..n {
        if pivot_row >= n {
            break;
        }
        let mut best = pivot_row;
        let mut best_abs = work[(pivot_row, col)].abs();
        for r in pivot_row + 1..n {
            let v = work[(r, col)].abs();
            if v > best_abs {
                best = r;
                best_abs = v;
            }
        }
        if best_abs <= tol {
            continue; // free column
        }
        if best != pivot_row {
            for j in 0..n {
                let tmp = work[(pivot_row, j)];
                work[(pivot_row, j)] = work[(best, j)];
                work[(best, j)] = tmp;
            }
        }
        let pivot = work[(pivot_row, col)];
        for r in 0..n {
            if r == pivot_row {
                continue;
            }
            let factor = work[(r, col)] / pivot;
            if factor != 0.0 {
                for j in col..n {
                    let sub = factor * work[(pivot_row, j)];
                    work[(r, j)] -= sub;
                }
                work[(r, col)] = 0.0;
            }
        }
        pivot_in_col[col] = Some(pivot_row);
        pivot_row += 1;
    }

    let free_cols: Vec<usize> = (0..n).filter(|&c| pivot_in_col[c].is_none()).collect();
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(free_cols.len());
    for &f in &free_cols {
        let mut v = vec![0.0; n];
        v[f] = 1.0;
        for c in 0..n {
            if let Some(r) = pivot_in_col[c] {
                v[c] = -work[(r, f)] / work[(r, c)];
            }
        }
        // modified Gram-Schmidt against the vectors already emitted
        for prev in &basis {
            let dot: f64 = v.iter().zip(prev.iter()).map(|(a, b)| a * b).sum();
            for (vi, pi) in v.iter_mut().zip(prev.iter()) {
                *vi -= dot * pi;
            }
        }
        let norm: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            for vi in &mut v {
                *vi /= norm;
            }
        }
        basis.push(v);
    }
    NullSpace {
        dim: basis.len(),
        basis,
    }
}

/// Max-abs entry of a vector.
pub fn vec_inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |acc, x| acc.max(x.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
        a.iter()
            .zip(b)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn solves_small_system() {
        // 2x + y = 5, x + 3y = 10 -> x = 1, y = 3
        let a = Matrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 3.0]]);
        let x = solve(&a, &[5.0, 10.0]).unwrap();
        assert!(max_abs_diff(&x, &[1.0, 3.0]) < 1e-12);
    }

    #[test]
    fn pivoting_handles_zero_leading_entry() {
        let a = Matrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]);
        let x = solve(&a, &[2.0, 3.0]).unwrap();
        assert!(max_abs_diff(&x, &[3.0, 2.0]) < 1e-12);
    }

    #[test]
    fn singular_is_reported() {
        let a = Matrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]]);
        assert!(matches!(
            solve(&a, &[1.0, 1.0]),
            Err(LinalgError::Singular { .. })
        ));
    }

    #[test]
    fn zero_matrix_null_space_is_full() {
        let a = Matrix::zeros(3, 3);
        let ns = null_space(&a, RANK_REL_TOL);
        assert_eq!(ns.dim, 3);
    }

    #[test]
    fn identity_null_space_is_trivial() {
        let ns = null_space(&Matrix::identity(4), RANK_REL_TOL);
        assert_eq!(ns.dim, 0);
        assert!(ns.basis.is_empty());
    }

    #[test]
    fn rank_one_deficiency() {
        // rows are multiples: rank 1, nullity 1; null vector ∝ (1, -1)
        let a = Matrix::from_rows(&[vec![1.0, 1.0], vec![2.0, 2.0]]);
        let ns = null_space(&a, RANK_REL_TOL);
        assert_eq!(ns.dim, 1);
        let v = &ns.basis[0];
        assert!((v[0] + v[1]).abs() < 1e-12);
        let norm: f64 = v.iter().map(|x| x * x).sum::<f64>();
        assert!((norm - 1.0).abs() < 1e-12);
    }

    #[test]
    fn null_basis_residual_is_small() {
        let a = Matrix::from_rows(&[
            vec![1.0, -1.0, 0.0],
            vec![0.0, 0.5, 0.0],
            vec![0.0, 0.0, 0.0],
        ]);
        let ns = null_space(&a, RANK_REL_TOL);
        assert_eq!(ns.dim, 1);
        for v in &ns.basis {
            let resid = vec_inf_norm(&a.mul_vec(v));
            assert!(resid <= 1e-7 * a.inf_norm() * vec_inf_norm(v));
        }
    }

    #[test]
    fn solve_matrix_matches_columnwise() {
        let a = Matrix::from_rows(&[vec![3.0, 1.0], vec![1.0, 2.0]]);
        let b = Matrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]);
        let inv = lu_factor(&a).unwrap().solve_matrix(&b);
        let prod = a.mat_mul(&inv);
        for i in 0..2 {
            for j in 0..2 {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((prod[(i, j)] - expect).abs() < 1e-12);
            }
        }
    }
}
