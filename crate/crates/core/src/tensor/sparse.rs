use super::{Tensor, TensorError, TensorResult};

/// Compressed sparse row matrix of constants.
///
/// Used for WL count vectors, which are far too wide to densify.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    rows: usize,
    cols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    /// Build from per-row `(column, value)` lists. Columns within a row must
    /// be strictly increasing.
    pub fn from_rows<R>(cols: usize, rows: R) -> TensorResult<Self>
    where
        R: IntoIterator,
        R::Item: AsRef<[(usize, f64)]>,
    {
        let mut indptr = vec![0];
        let mut indices = Vec::new();
        let mut values = Vec::new();
        for row in rows {
            let mut last = None;
            for &(c, v) in row.as_ref() {
                if c >= cols || last.is_some_and(|l| c <= l) {
                    return Err(TensorError::ShapeMismatch {
                        op: "sparse_from_rows",
                        left: [indptr.len() - 1, cols],
                        right: [indptr.len() - 1, c],
                    });
                }
                if !v.is_finite() {
                    return Err(TensorError::NonFinite { op: "sparse_from_rows" });
                }
                last = Some(c);
                indices.push(c);
                values.push(v);
            }
            indptr.push(indices.len());
        }
        Ok(Self {
            rows: indptr.len() - 1,
            cols,
            indptr,
            indices,
            values,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> [usize; 2] {
        [self.rows, self.cols]
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.indptr[r]..self.indptr[r + 1];
        self.indices[span.clone()]
            .iter()
            .copied()
            .zip(self.values[span].iter().copied())
    }

    pub fn to_dense(&self) -> Tensor {
        let mut out = Tensor::zeros(self.rows, self.cols);
        for r in 0..self.rows {
            for (c, v) in self.row(r) {
                out.set(r, c, v);
            }
        }
        out
    }

    /// `self · dense`.
    pub fn matmul(&self, dense: &Tensor) -> TensorResult<Tensor> {
        if self.cols != dense.rows() {
            return Err(TensorError::ShapeMismatch {
                op: "sparse_matmul",
                left: self.shape(),
                right: dense.shape(),
            });
        }
        let m = dense.cols();
        let mut out = Tensor::zeros(self.rows, m);
        for r in 0..self.rows {
            let span = self.indptr[r]..self.indptr[r + 1];
            let out_row = out.row_mut(r);
            for (&c, &v) in self.indices[span.clone()].iter().zip(&self.values[span]) {
                for (o, &w) in out_row.iter_mut().zip(dense.row(c)) {
                    *o += v * w;
                }
            }
        }
        Ok(out)
    }

    /// `out += selfᵀ · dense`.
    pub(crate) fn transpose_matmul_into(&self, dense: &Tensor, out: &mut Tensor) {
        for r in 0..self.rows {
            let g = dense.row(r);
            let span = self.indptr[r]..self.indptr[r + 1];
            for (&c, &v) in self.indices[span.clone()].iter().zip(&self.values[span]) {
                for (o, &x) in out.row_mut(c).iter_mut().zip(g) {
                    *o += v * x;
                }
            }
        }
    }
}
