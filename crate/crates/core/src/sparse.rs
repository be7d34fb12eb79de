//! Compressed-sparse-row matrices with a shareable sparsity pattern.

use std::sync::Arc;

use crate::error::{Error, Result};

/// Row offsets and strictly increasing column indices of a CSR matrix.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SparsityPattern {
    n_rows: usize,
    n_cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
}

impl SparsityPattern {
    /// Builds a pattern from unsorted, possibly repeated `(row, col)` lists per row.
    pub fn from_rows(n_cols: usize, mut rows: Vec<Vec<usize>>) -> Result<Self> {
        let n_rows = rows.len();
        let mut row_ptr = Vec::with_capacity(n_rows + 1);
        row_ptr.push(0);
        let mut col_idx = Vec::new();
        for row in rows.iter_mut() {
            row.sort_unstable();
            row.dedup();
            if let Some(&last) = row.last() {
                if last >= n_cols {
                    return Err(Error::InvalidArgument(format!(
                        "column {last} out of range for {n_cols} columns"
                    )));
                }
            }
            col_idx.extend_from_slice(row);
            row_ptr.push(col_idx.len());
        }
        Ok(SparsityPattern {
            n_rows,
            n_cols,
            row_ptr,
            col_idx,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.col_idx.len()
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_idx(&self) -> &[usize] {
        &self.col_idx
    }

    pub fn row(&self, i: usize) -> &[usize] {
        &self.col_idx[self.row_ptr[i]..self.row_ptr[i + 1]]
    }

    /// Position of `(row, col)` in the value array.
    #[inline]
    pub fn find(&self, row: usize, col: usize) -> Option<usize> {
        let start = self.row_ptr[row];
        self.row(row).binary_search(&col).ok().map(|offset| start + offset)
    }
}

#[derive(Clone, Debug)]
pub struct CsrMatrix {
    pattern: Arc<SparsityPattern>,
    values: Vec<f64>,
}

impl CsrMatrix {
    pub fn zeros(pattern: Arc<SparsityPattern>) -> Self {
        let nnz = pattern.nnz();
        CsrMatrix {
            pattern,
            values: vec![0.0; nnz],
        }
    }

    pub fn identity(n: usize) -> Self {
        let rows = (0..n).map(|i| vec![i]).collect();
        let pattern = SparsityPattern::from_rows(n, rows).expect("diagonal pattern");
        CsrMatrix {
            pattern: Arc::new(pattern),
            values: vec![1.0; n],
        }
    }

    /// Keeps every nonzero of a dense row-major matrix.
    pub fn from_dense(rows: &[Vec<f64>]) -> Self {
        let n_cols = rows.first().map_or(0, Vec::len);
        let cols = rows
            .iter()
            .map(|r| (0..n_cols).filter(|&j| r[j] != 0.0).collect())
            .collect();
        let pattern = SparsityPattern::from_rows(n_cols, cols).expect("dense pattern");
        let values = rows
            .iter()
            .flat_map(|r| r.iter().copied().filter(|&v| v != 0.0))
            .collect();
        CsrMatrix {
            pattern: Arc::new(pattern),
            values,
        }
    }

    pub fn pattern(&self) -> &Arc<SparsityPattern> {
        &self.pattern
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn n_rows(&self) -> usize {
        self.pattern.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.pattern.n_cols
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.pattern.find(row, col).map_or(0.0, |k| self.values[k])
    }

    #[inline]
    pub fn add_at(&mut self, row: usize, col: usize, value: f64) {
        let k = self
            .pattern
            .find(row, col)
            .unwrap_or_else(|| panic!("entry ({row}, {col}) not in sparsity pattern"));
        self.values[k] += value;
    }

    /// Scatters a row-major local matrix.
    pub fn add_local(&mut self, rows: &[usize], cols: &[usize], local: &[f64]) {
        debug_assert_eq!(local.len(), rows.len() * cols.len());
        for (a, &i) in rows.iter().enumerate() {
            let start = self.pattern.row_ptr[i];
            let row_cols = self.pattern.row(i);
            for (b, &j) in cols.iter().enumerate() {
                let v = local[a * cols.len() + b];
                if v == 0.0 {
                    continue;
                }
                let k = start
                    + row_cols
                        .binary_search(&j)
                        .unwrap_or_else(|_| panic!("entry ({i}, {j}) not in sparsity pattern"));
                self.values[k] += v;
            }
        }
    }

    /// `self += factor * other`; both matrices must share the pattern.
    pub fn axpy(&mut self, factor: f64, other: &CsrMatrix) {
        assert!(
            Arc::ptr_eq(&self.pattern, &other.pattern) || self.pattern == other.pattern,
            "axpy on matrices with different patterns"
        );
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += factor * b;
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for v in &mut self.values {
            *v *= factor;
        }
    }

    pub fn mul_vec_into(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n_cols());
        debug_assert_eq!(y.len(), self.n_rows());
        let rp = &self.pattern.row_ptr;
        let ci = &self.pattern.col_idx;
        for (i, yi) in y.iter_mut().enumerate() {
            let mut s = 0.0;
            for k in rp[i]..rp[i + 1] {
                s += self.values[k] * x[ci[k]];
            }
            *yi = s;
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n_rows()];
        self.mul_vec_into(x, &mut y);
        y
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n_rows()).map(|i| self.get(i, i)).collect()
    }

    pub fn row_sums(&self) -> Vec<f64> {
        let rp = &self.pattern.row_ptr;
        (0..self.n_rows())
            .map(|i| self.values[rp[i]..rp[i + 1]].iter().sum())
            .collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Largest `|a_ij - a_ji|`.
    pub fn asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.n_rows() {
            for (k, &j) in self.pattern.row(i).iter().enumerate() {
                let aij = self.values[self.pattern.row_ptr[i] + k];
                worst = worst.max((aij - self.get(j, i)).abs());
            }
        }
        worst
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut out = vec![vec![0.0; self.n_cols()]; self.n_rows()];
        for (i, row) in out.iter_mut().enumerate() {
            for (k, &j) in self.pattern.row(i).iter().enumerate() {
                row[j] = self.values[self.pattern.row_ptr[i] + k];
            }
        }
        out
    }

    /// Imposes `x[d] = value` for each Dirichlet dof by row and column
    /// elimination. The eliminated columns are lifted into `rhs`, the row
    /// becomes the identity and symmetry of the remaining block is kept.
    pub fn apply_dirichlet(&mut self, dofs: &[usize], values: &[f64], rhs: &mut [f64]) {
        assert_eq!(dofs.len(), values.len());
        let n = self.n_rows();
        let mut fixed = vec![None; n];
        for (&d, &v) in dofs.iter().zip(values) {
            fixed[d] = Some(v);
        }
        let rp = self.pattern.row_ptr.clone();
        for i in 0..n {
            if let Some(vi) = fixed[i] {
                for k in rp[i]..rp[i + 1] {
                    let j = self.pattern.col_idx[k];
                    self.values[k] = if j == i { 1.0 } else { 0.0 };
                }
                rhs[i] = vi;
            } else {
                for k in rp[i]..rp[i + 1] {
                    let j = self.pattern.col_idx[k];
                    if let Some(vj) = fixed[j] {
                        rhs[i] -= self.values[k] * vj;
                        self.values[k] = 0.0;
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pattern_sorted_and_deduplicated() {
        let p = SparsityPattern::from_rows(4, vec![vec![3, 1, 1, 0], vec![], vec![2, 2]]).unwrap();
        assert_eq!(p.row(0), &[0, 1, 3]);
        assert!(p.row(1).is_empty());
        assert_eq!(p.row(2), &[2]);
        assert_eq!(p.find(0, 3), Some(2));
        assert_eq!(p.find(0, 2), None);
        assert!(SparsityPattern::from_rows(2, vec![vec![2]]).is_err());
    }

    #[test]
    fn matvec_matches_dense() {
        let dense = vec![vec![4.0, -1.0, 0.0], vec![-1.0, 4.0, -1.0], vec![0.0, -1.0, 4.0]];
        let a = CsrMatrix::from_dense(&dense);
        let y = a.mul_vec(&[1.0, 2.0, 3.0]);
        assert_eq!(y, vec![2.0, 4.0, 10.0]);
        assert_eq!(a.to_dense(), dense);
        assert_eq!(a.asymmetry(), 0.0);
    }

    #[test]
    fn dirichlet_elimination_keeps_symmetry() {
        let mut a = CsrMatrix::from_dense(&[vec![2.0, -1.0, 0.0], vec![-1.0, 2.0, -1.0], vec![0.0, -1.0, 2.0]]);
        let mut rhs = vec![0.0, 0.0, 0.0];
        a.apply_dirichlet(&[0], &[1.0], &mut rhs);
        assert_eq!(rhs, vec![1.0, 1.0, 0.0]);
        assert_eq!(a.asymmetry(), 0.0);
        assert_eq!(a.get(0, 0), 1.0);
        assert_eq!(a.get(1, 0), 0.0);
    }
}
