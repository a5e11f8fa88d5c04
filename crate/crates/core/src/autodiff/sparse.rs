use rayon::prelude::*;

use super::{AutodiffError, Tensor};

/// Compressed sparse row matrix used for constant propagation operators.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    rows: usize,
    cols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Builds from `(row, col, value)` triplets. Duplicate coordinates are summed.
    pub fn from_triplets(
        rows: usize,
        cols: usize,
        triplets: &[(usize, usize, f64)],
    ) -> Result<Self, AutodiffError> {
        let mut sorted: Vec<(usize, usize, f64)> = triplets.to_vec();
        for &(r, c, _) in &sorted {
            if r >= rows || c >= cols {
                return Err(AutodiffError::IndexOutOfRange {
                    op: "csr",
                    index: if r >= rows { r } else { c },
                    len: if r >= rows { rows } else { cols },
                });
            }
        }
        sorted.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut indptr = vec![0usize; rows + 1];
        let mut indices = Vec::with_capacity(sorted.len());
        let mut values: Vec<f64> = Vec::with_capacity(sorted.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in sorted {
            if last == Some((r, c)) {
                *values.last_mut().expect("duplicate follows an entry") += v;
                continue;
            }
            last = Some((r, c));
            indices.push(c);
            values.push(v);
            indptr[r + 1] += 1;
        }
        for r in 0..rows {
            indptr[r + 1] += indptr[r];
        }
        Ok(Self {
            rows,
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

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Iterates `(col, value)` over one row.
    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.indptr[r]..self.indptr[r + 1];
        self.indices[span.clone()]
            .iter()
            .copied()
            .zip(self.values[span].iter().copied())
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.row(r).find(|&(j, _)| j == c).map_or(0.0, |(_, v)| v)
    }

    pub fn to_dense(&self) -> Tensor {
        let mut out = Tensor::zeros(self.rows, self.cols);
        for r in 0..self.rows {
            for (c, v) in self.row(r) {
                out.set(r, c, out.get(r, c) + v);
            }
        }
        out
    }

    pub fn transpose(&self) -> CsrMatrix {
        let triplets: Vec<(usize, usize, f64)> = (0..self.rows)
            .flat_map(|r| self.row(r).map(move |(c, v)| (c, r, v)))
            .collect();
        CsrMatrix::from_triplets(self.cols, self.rows, &triplets)
            .expect("transposed coordinates stay in range")
    }

    /// Dense product `self * rhs`.
    pub fn matmul(&self, rhs: &Tensor) -> Result<Tensor, AutodiffError> {
        if self.cols != rhs.rows() {
            return Err(AutodiffError::ShapeMismatch {
                op: "spmm",
                lhs: (self.rows, self.cols),
                rhs: rhs.shape(),
            });
        }
        let m = rhs.cols();
        let mut out = Tensor::zeros(self.rows, m);
        if m == 0 {
            return Ok(out);
        }
        out.data_mut()
            .par_chunks_mut(m)
            .enumerate()
            .for_each(|(r, out_row)| {
                for (c, v) in self.row(r) {
                    for (o, &b) in out_row.iter_mut().zip(rhs.row(c)) {
                        *o += v * b;
                    }
                }
            });
        Ok(out)
    }

    /// Dense product `self^T * rhs`.
    pub fn t_matmul(&self, rhs: &Tensor) -> Result<Tensor, AutodiffError> {
        if self.rows != rhs.rows() {
            return Err(AutodiffError::ShapeMismatch {
                op: "spmm_t",
                lhs: (self.cols, self.rows),
                rhs: rhs.shape(),
            });
        }
        let m = rhs.cols();
        let mut out = Tensor::zeros(self.cols, m);
        for r in 0..self.rows {
            let g = rhs.row(r);
            for (c, v) in self.row(r) {
                for (o, &b) in out.row_mut(c).iter_mut().zip(g) {
                    *o += v * b;
                }
            }
        }
        Ok(out)
    }
}
