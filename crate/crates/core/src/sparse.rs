//! Compressed sparse row matrices.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    data: Vec<f64>,
}

impl CsrMatrix {
    /// Builds from `(row, col, value)` triplets; duplicates are summed in input order.
    pub fn from_triplets(nrows: usize, ncols: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut counts = vec![0usize; nrows + 1];
        for &(r, c, _) in triplets {
            assert!(r < nrows && c < ncols, "triplet ({r}, {c}) out of bounds");
            counts[r + 1] += 1;
        }
        for i in 0..nrows {
            counts[i + 1] += counts[i];
        }
        let mut fill = counts.clone();
        let mut buf = vec![(0usize, 0.0f64); triplets.len()];
        for &(r, c, v) in triplets {
            buf[fill[r]] = (c, v);
            fill[r] += 1;
        }
        let mut indptr = Vec::with_capacity(nrows + 1);
        let mut indices = Vec::new();
        let mut data = Vec::new();
        indptr.push(0);
        for r in 0..nrows {
            let row = &mut buf[counts[r]..counts[r + 1]];
            // stable: duplicates keep insertion order, so summation is deterministic
            row.sort_by_key(|e| e.0);
            let mut last = usize::MAX;
            for &(c, v) in row.iter() {
                if c == last {
                    *data.last_mut().unwrap() += v;
                } else {
                    indices.push(c);
                    data.push(v);
                    last = c;
                }
            }
            indptr.push(indices.len());
        }
        Self {
            nrows,
            ncols,
            indptr,
            indices,
            data,
        }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            nrows: n,
            ncols: n,
            indptr: (0..=n).collect(),
            indices: (0..n).collect(),
            data: vec![1.0; n],
        }
    }

    pub fn from_dense(m: &DMatrix<f64>) -> Self {
        let mut t = Vec::new();
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                if m[(i, j)] != 0.0 {
                    t.push((i, j, m[(i, j)]));
                }
            }
        }
        Self::from_triplets(m.nrows(), m.ncols(), &t)
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.data.len()
    }

    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let r = self.indptr[i]..self.indptr[i + 1];
        (&self.indices[r.clone()], &self.data[r])
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (cols, vals) = self.row(i);
        cols.binary_search(&j).map(|p| vals[p]).unwrap_or(0.0)
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.nrows).flat_map(move |i| {
            let (c, v) = self.row(i);
            c.iter().zip(v).map(move |(&j, &x)| (i, j, x))
        })
    }

    /// `y = A x`.
    pub fn mul_vec_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.ncols);
        assert_eq!(y.len(), self.nrows);
        let row = |i: usize| -> f64 {
            let (c, v) = self.row(i);
            c.iter().zip(v).map(|(&j, &a)| a * x[j]).sum()
        };
        if self.nnz() > 1 << 16 {
            y.par_iter_mut()
                .enumerate()
                .for_each(|(i, yi)| *yi = row(i));
        } else {
            y.iter_mut().enumerate().for_each(|(i, yi)| *yi = row(i));
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.nrows];
        self.mul_vec_into(x, &mut y);
        y
    }

    /// `y = Aᵀ x`.
    pub fn transpose_mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.nrows);
        let mut y = vec![0.0; self.ncols];
        for (i, &xi) in x.iter().enumerate() {
            if xi != 0.0 {
                let (c, v) = self.row(i);
                for (&j, &a) in c.iter().zip(v) {
                    y[j] += a * xi;
                }
            }
        }
        y
    }

    pub fn transpose(&self) -> Self {
        let t: Vec<_> = self.triplets().map(|(i, j, v)| (j, i, v)).collect();
        Self::from_triplets(self.ncols, self.nrows, &t)
    }

    /// Sparse product `self * other`.
    pub fn matmul(&self, other: &CsrMatrix) -> Result<Self> {
        Error::check_len(self.ncols, other.nrows)?;
        let rows: Vec<(Vec<usize>, Vec<f64>)> = (0..self.nrows)
            .into_par_iter()
            .map(|i| {
                let mut acc: Vec<(usize, f64)> = Vec::new();
                let (ca, va) = self.row(i);
                for (&k, &a) in ca.iter().zip(va) {
                    let (cb, vb) = other.row(k);
                    acc.extend(cb.iter().zip(vb).map(|(&j, &b)| (j, a * b)));
                }
                acc.sort_by_key(|e| e.0);
                let mut cols = Vec::new();
                let mut vals: Vec<f64> = Vec::new();
                for (j, v) in acc {
                    if cols.last() == Some(&j) {
                        *vals.last_mut().unwrap() += v;
                    } else {
                        cols.push(j);
                        vals.push(v);
                    }
                }
                (cols, vals)
            })
            .collect();
        let mut indptr = vec![0];
        let mut indices = Vec::new();
        let mut data = Vec::new();
        for (c, v) in rows {
            indices.extend(c);
            data.extend(v);
            indptr.push(indices.len());
        }
        Ok(Self {
            nrows: self.nrows,
            ncols: other.ncols,
            indptr,
            indices,
            data,
        })
    }

    /// Principal submatrix on a strictly increasing index set.
    pub fn principal_submatrix(&self, idx: &[usize]) -> Result<Self> {
        if let Some(w) = idx.windows(2).find(|w| w[0] >= w[1]) {
            return Err(Error::Data(format!(
                "block index set must be strictly increasing (found {} then {})",
                w[0], w[1]
            )));
        }
        if let Some(&last) = idx.last() {
            if last >= self.nrows.min(self.ncols) {
                return Err(Error::Dimension {
                    expected: self.nrows,
                    found: last + 1,
                });
            }
        }
        let contiguous = idx
            .first()
            .map_or(true, |&f| idx.last().unwrap() - f + 1 == idx.len());
        let mut indptr = vec![0];
        let mut indices = Vec::new();
        let mut data = Vec::new();
        for &i in idx {
            let (c, v) = self.row(i);
            for (&j, &x) in c.iter().zip(v) {
                let local = if contiguous {
                    let f = idx[0];
                    (j >= f && j - f < idx.len()).then(|| j - f)
                } else {
                    idx.binary_search(&j).ok()
                };
                if let Some(l) = local {
                    indices.push(l);
                    data.push(x);
                }
            }
            indptr.push(indices.len());
        }
        Ok(Self {
            nrows: idx.len(),
            ncols: idx.len(),
            indptr,
            indices,
            data,
        })
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.nrows, self.ncols);
        for (i, j, v) in self.triplets() {
            m[(i, j)] += v;
        }
        m
    }

    /// `max |a_ij - a_ji| / max |a_ij|`.
    pub fn relative_asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        let mut scale: f64 = 0.0;
        for (i, j, v) in self.triplets() {
            scale = scale.max(v.abs());
            worst = worst.max((v - self.get(j, i)).abs());
        }
        if scale == 0.0 {
            0.0
        } else {
            worst / scale
        }
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triplets_sum_duplicates() {
        let m =
            CsrMatrix::from_triplets(2, 3, &[(0, 2, 1.0), (0, 0, 2.0), (0, 2, 3.0), (1, 1, -1.0)]);
        assert_eq!(m.nnz(), 3);
        assert_eq!(m.get(0, 2), 4.0);
        assert_eq!(m.get(1, 0), 0.0);
        assert_eq!(m.mul_vec(&[1.0, 1.0, 1.0]), vec![6.0, -1.0]);
        assert_eq!(m.transpose_mul_vec(&[1.0, 2.0]), vec![2.0, -2.0, 4.0]);
    }

    #[test]
    fn submatrix_and_product_match_dense() {
        let d = DMatrix::from_fn(5, 5, |i, j| {
            if (i + 2 * j) % 3 == 0 {
                (i * 5 + j) as f64
            } else {
                0.0
            }
        });
        let s = CsrMatrix::from_dense(&d);
        let idx = [0, 2, 3];
        let sub = s.principal_submatrix(&idx).unwrap().to_dense();
        for (a, &i) in idx.iter().enumerate() {
            for (b, &j) in idx.iter().enumerate() {
                assert_eq!(sub[(a, b)], d[(i, j)]);
            }
        }
        let contiguous = s.principal_submatrix(&[1, 2, 3]).unwrap().to_dense();
        assert_eq!(contiguous, d.view((1, 1), (3, 3)).clone_owned());
        assert_eq!(
            s.matmul(&s.transpose()).unwrap().to_dense(),
            &d * d.transpose()
        );
        assert!(s.principal_submatrix(&[2, 1]).is_err());
        assert!(s.principal_submatrix(&[1, 1]).is_err());
        assert!(s.principal_submatrix(&[7]).is_err());
    }
}
