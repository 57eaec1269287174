//! Sparse matrix storage and the direct solver used by every linear solve.
//!
//! Assembly pushes triplets into a [`CooBuilder`]; `build` sorts them and sums
//! duplicates in insertion order, so the resulting [`CsrMatrix`] is bit-identical
//! for identical inputs. Factorizations go through faer's sparse LU with
//! sequential parallelism for the same reason.

use faer::sparse::{SparseColMat, Triplet};
use faer::{Mat, Par};

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct CooBuilder {
    nrows: usize,
    ncols: usize,
    entries: Vec<(usize, usize, f64)>,
}

impl CooBuilder {
    pub fn new(nrows: usize, ncols: usize) -> Self {
        Self {
            nrows,
            ncols,
            entries: Vec::new(),
        }
    }

    pub fn with_capacity(nrows: usize, ncols: usize, cap: usize) -> Self {
        Self {
            nrows,
            ncols,
            entries: Vec::with_capacity(cap),
        }
    }

    #[inline]
    pub fn push(&mut self, row: usize, col: usize, value: f64) {
        debug_assert!(row < self.nrows && col < self.ncols);
        self.entries.push((row, col, value));
    }

    pub fn build(mut self) -> CsrMatrix {
        // stable sort keeps duplicate summation order fixed
        self.entries.sort_by_key(|&(r, c, _)| (r, c));
        let mut row_ptr = vec![0usize; self.nrows + 1];
        let mut col_idx = Vec::with_capacity(self.entries.len());
        let mut values: Vec<f64> = Vec::with_capacity(self.entries.len());
        let mut last: Option<(usize, usize)> = None;
        for &(r, c, v) in &self.entries {
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                col_idx.push(c);
                values.push(v);
                row_ptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for i in 0..self.nrows {
            row_ptr[i + 1] += row_ptr[i];
        }
        CsrMatrix {
            nrows: self.nrows,
            ncols: self.ncols,
            row_ptr,
            col_idx,
            values,
        }
    }
}

/// Compressed sparse row matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    pub nrows: usize,
    pub ncols: usize,
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<usize>,
    pub values: Vec<f64>,
}

impl CsrMatrix {
    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[range.clone()]
            .iter()
            .copied()
            .zip(self.values[range].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.col_idx[range.clone()].binary_search(&j) {
            Ok(k) => self.values[range.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.ncols);
        (0..self.nrows)
            .map(|i| self.row(i).map(|(j, a)| a * x[j]).sum())
            .collect()
    }

    /// `yᵀ A x`
    pub fn bilinear(&self, y: &[f64], x: &[f64]) -> f64 {
        assert_eq!(y.len(), self.nrows);
        (0..self.nrows)
            .map(|i| y[i] * self.row(i).map(|(j, a)| a * x[j]).sum::<f64>())
            .sum()
    }

    pub fn transpose(&self) -> CsrMatrix {
        let mut coo = CooBuilder::with_capacity(self.ncols, self.nrows, self.nnz());
        for i in 0..self.nrows {
            for (j, a) in self.row(i) {
                coo.push(j, i, a);
            }
        }
        coo.build()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Largest entry of `|A - Aᵀ|`.
    pub fn asymmetry(&self) -> f64 {
        let t = self.transpose();
        self.sub_max_abs(&t, 1.0)
    }

    /// Largest entry of `|A + sign·B|`.
    pub fn sub_max_abs(&self, other: &CsrMatrix, sign: f64) -> f64 {
        assert_eq!((self.nrows, self.ncols), (other.nrows, other.ncols));
        let mut worst = 0.0f64;
        for i in 0..self.nrows {
            for (j, a) in self.row(i) {
                worst = worst.max((a - sign * other.get(i, j)).abs());
            }
            for (j, b) in other.row(i) {
                if self.get(i, j) == 0.0 {
                    worst = worst.max(b.abs());
                }
            }
        }
        worst
    }

    pub fn scaled(&self, factor: f64) -> CsrMatrix {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= factor);
        out
    }

    pub fn add(&self, other: &CsrMatrix) -> CsrMatrix {
        assert_eq!((self.nrows, self.ncols), (other.nrows, other.ncols));
        let mut coo = CooBuilder::with_capacity(self.nrows, self.ncols, self.nnz() + other.nnz());
        for m in [self, other] {
            for i in 0..m.nrows {
                for (j, a) in m.row(i) {
                    coo.push(i, j, a);
                }
            }
        }
        coo.build()
    }

    /// Restrict to the rows and columns selected by the two index maps.
    /// `row_map[i] = Some(r)` keeps original row `i` as row `r`.
    pub fn submatrix(
        &self,
        row_map: &[Option<usize>],
        nrows: usize,
        col_map: &[Option<usize>],
        ncols: usize,
    ) -> CsrMatrix {
        let mut coo = CooBuilder::new(nrows, ncols);
        for i in 0..self.nrows {
            let Some(r) = row_map[i] else { continue };
            for (j, a) in self.row(i) {
                if let Some(c) = col_map[j] {
                    coo.push(r, c, a);
                }
            }
        }
        coo.build()
    }
}

/// Sparse LU factorization of a square matrix.
pub struct SparseLu {
    n: usize,
    lu: faer::sparse::linalg::solvers::Lu<usize, f64>,
}

impl SparseLu {
    pub fn factor(a: &CsrMatrix) -> Result<Self> {
        if a.nrows != a.ncols {
            return Err(Error::SolverFault(format!(
                "matrix is {}x{}, expected square",
                a.nrows, a.ncols
            )));
        }
        faer::set_global_parallelism(Par::Seq);
        let mut triplets = Vec::with_capacity(a.nnz());
        for i in 0..a.nrows {
            for (j, v) in a.row(i) {
                if !v.is_finite() {
                    return Err(Error::SolverFault("matrix has non-finite entries".into()));
                }
                triplets.push(Triplet::new(i, j, v));
            }
        }
        let sp = SparseColMat::<usize, f64>::try_new_from_triplets(a.nrows, a.ncols, &triplets)
            .map_err(|e| Error::SolverFault(format!("sparse matrix build failed: {e:?}")))?;
        let lu = sp
            .sp_lu()
            .map_err(|e| Error::SolverFault(format!("sparse LU failed: {e:?}")))?;
        Ok(Self { n: a.nrows, lu })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        use faer::prelude::Solve;
        assert_eq!(b.len(), self.n);
        let mut rhs = Mat::<f64>::from_fn(self.n, 1, |i, _| b[i]);
        self.lu.solve_in_place(rhs.as_mut());
        let x: Vec<f64> = (0..self.n).map(|i| rhs[(i, 0)]).collect();
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::SolverFault("singular system (non-finite solution)".into()));
        }
        Ok(x)
    }
}

/// Factor `a` and solve, then verify the residual so a numerically singular
/// system is reported instead of returning garbage.
pub fn solve_checked(a: &CsrMatrix, b: &[f64], rel_tol: f64) -> Result<Vec<f64>> {
    let lu = SparseLu::factor(a)?;
    let x = lu.solve(b)?;
    check_residual(a, &x, b, rel_tol)?;
    Ok(x)
}

pub fn check_residual(a: &CsrMatrix, x: &[f64], b: &[f64], rel_tol: f64) -> Result<()> {
    let ax = a.matvec(x);
    let res = ax.iter().zip(b).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
    let scale = norm_inf(b).max(a.max_abs() * norm_inf(x));
    if res > rel_tol * scale.max(f64::MIN_POSITIVE) {
        return Err(Error::SolverFault(format!(
            "residual {res:.3e} exceeds {rel_tol:.1e} x scale {scale:.3e}; system is singular or ill-conditioned"
        )));
    }
    Ok(())
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn norm_inf(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    y.iter_mut().zip(x).for_each(|(yi, xi)| *yi += alpha * xi);
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duplicates_are_summed() {
        let mut coo = CooBuilder::new(2, 2);
        coo.push(1, 0, 1.5);
        coo.push(0, 0, 2.0);
        coo.push(1, 0, 0.5);
        let a = coo.build();
        assert_eq!(a.get(1, 0), 2.0);
        assert_eq!(a.get(0, 0), 2.0);
        assert_eq!(a.get(0, 1), 0.0);
        assert_eq!(a.nnz(), 2);
    }

    #[test]
    fn lu_solves_known_system() {
        let mut coo = CooBuilder::new(2, 2);
        for (i, j, v) in [(0, 0, 2.0), (0, 1, 1.0), (1, 0, 5.0), (1, 1, 7.0)] {
            coo.push(i, j, v);
        }
        let a = coo.build();
        let x = solve_checked(&a, &[11.0, 13.0], 1e-12).unwrap();
        assert!((x[0] - 64.0 / 9.0).abs() < 1e-12);
        assert!((x[1] + 29.0 / 9.0).abs() < 1e-12);
    }

    #[test]
    fn singular_system_is_a_fault() {
        let mut coo = CooBuilder::new(2, 2);
        for (i, j, v) in [(0, 0, 1.0), (0, 1, 1.0), (1, 0, 1.0), (1, 1, 1.0)] {
            coo.push(i, j, v);
        }
        let a = coo.build();
        assert!(solve_checked(&a, &[1.0, 2.0], 1e-10).is_err());
    }

    #[test]
    fn transpose_and_asymmetry() {
        let mut coo = CooBuilder::new(2, 3);
        coo.push(0, 2, 4.0);
        coo.push(1, 0, -1.0);
        let a = coo.build();
        let t = a.transpose();
        assert_eq!((t.nrows, t.ncols), (3, 2));
        assert_eq!(t.get(2, 0), 4.0);
        assert_eq!(t.get(0, 1), -1.0);
    }
}
