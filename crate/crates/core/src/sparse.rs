//! Compressed-row sparse matrices and the coordinate text dump.

use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use faer::sparse::{SparseColMat, Triplet};

use crate::error::{Error, Result};

/// Square or rectangular real matrix in compressed-row storage.
///
/// Column indices within a row are strictly increasing and duplicate
/// triplets are summed at construction.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        CsrMatrix {
            nrows,
            ncols,
            row_ptr: vec![0; nrows + 1],
            col_idx: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_triplets(n, n, (0..n).map(|i| (i, i, 1.0)))
    }

    /// Builds from `(row, col, value)` triplets; duplicates are summed.
    ///
    /// Explicit zeros are kept so that the sparsity pattern of an assembled
    /// operator does not depend on the data.
    pub fn from_triplets<I>(nrows: usize, ncols: usize, triplets: I) -> Self
    where
        I: IntoIterator<Item = (usize, usize, f64)>,
    {
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); nrows];
        for (r, c, v) in triplets {
            assert!(r < nrows && c < ncols, "triplet ({r}, {c}) out of bounds");
            rows[r].push((c, v));
        }
        let mut row_ptr = Vec::with_capacity(nrows + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        for mut row in rows {
            row.sort_by_key(|&(c, _)| c);
            let mut last: Option<usize> = None;
            for (c, v) in row {
                if last == Some(c) {
                    *values.last_mut().unwrap() += v;
                } else {
                    col_idx.push(c);
                    values.push(v);
                    last = Some(c);
                }
            }
            row_ptr.push(col_idx.len());
        }
        CsrMatrix {
            nrows,
            ncols,
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn is_square(&self) -> bool {
        self.nrows == self.ncols
    }

    /// Entries of row `i` as `(col, value)` pairs.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[span.clone()]
            .iter()
            .copied()
            .zip(self.values[span].iter().copied())
    }

    /// All stored entries in row-major order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.nrows).flat_map(move |i| self.row(i).map(move |(j, v)| (i, j, v)))
    }

    /// Stored value at `(i, j)`, zero when outside the pattern.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let span = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.col_idx[span.clone()].binary_search(&j) {
            Ok(k) => self.values[span.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.nrows.min(self.ncols)).map(|i| self.get(i, i)).collect()
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.nrows).map(|i| self.row(i).map(|(_, v)| v).sum()).collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// `y = A x`.
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.ncols);
        (0..self.nrows)
            .map(|i| self.row(i).map(|(j, v)| v * x[j]).sum())
            .collect()
    }

    /// `y = xᵀ A`, the left (row-vector) action.
    pub fn left_mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.nrows);
        let mut y = vec![0.0; self.ncols];
        for (i, j, v) in self.iter() {
            y[j] += x[i] * v;
        }
        y
    }

    pub fn transpose(&self) -> CsrMatrix {
        CsrMatrix::from_triplets(self.ncols, self.nrows, self.iter().map(|(i, j, v)| (j, i, v)))
    }

    pub fn scale(&self, alpha: f64) -> CsrMatrix {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= alpha);
        out
    }

    /// `A + alpha B`, pattern is the union of both patterns.
    pub fn add_scaled(&self, alpha: f64, other: &CsrMatrix) -> CsrMatrix {
        assert_eq!((self.nrows, self.ncols), (other.nrows, other.ncols));
        CsrMatrix::from_triplets(
            self.nrows,
            self.ncols,
            self.iter()
                .chain(other.iter().map(|(i, j, v)| (i, j, alpha * v))),
        )
    }

    /// `A - shift·I` as a faer column-major sparse matrix (for factorisation).
    pub(crate) fn to_faer_shifted(&self, shift: f64) -> Result<SparseColMat<usize, f64>> {
        let mut trip: Vec<Triplet<usize, usize, f64>> = self
            .iter()
            .map(|(i, j, v)| Triplet::new(i, j, v))
            .collect();
        if shift != 0.0 {
            trip.extend((0..self.nrows).map(|i| Triplet::new(i, i, -shift)));
        }
        SparseColMat::try_new_from_triplets(self.nrows, self.ncols, &trip)
            .map_err(|e| Error::Numerical(format!("sparse matrix creation failed: {e:?}")))
    }

    /// Dense row-major copy; intended for small matrices.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.ncols]; self.nrows];
        for (i, j, v) in self.iter() {
            d[i][j] += v;
        }
        d
    }

    /// Writes the coordinate dump: header `N nnz` (or `nrows ncols nnz` when
    /// rectangular), then one `row col value` line per stored entry, 0-based.
    pub fn write_coo(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        let io = |e| Error::io(path, e);
        if self.is_square() {
            writeln!(w, "{} {}", self.nrows, self.nnz()).map_err(io)?;
        } else {
            writeln!(w, "{} {} {}", self.nrows, self.ncols, self.nnz()).map_err(io)?;
        }
        for (i, j, v) in self.iter() {
            writeln!(w, "{i} {j} {v:e}").map_err(io)?;
        }
        w.flush().map_err(io)
    }

    pub fn read_coo(path: &Path) -> Result<CsrMatrix> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let mut lines = BufReader::new(file).lines();
        let bad = |what: &str| Error::ingestion(path.display().to_string(), what.to_string());
        let header = lines
            .next()
            .ok_or_else(|| bad("empty file"))?
            .map_err(|e| Error::io(path, e))?;
        let dims: Vec<usize> = header
            .split_whitespace()
            .map(|s| s.parse().map_err(|_| bad("bad header")))
            .collect::<Result<_>>()?;
        let (nrows, ncols, nnz) = match dims[..] {
            [n, nnz] => (n, n, nnz),
            [r, c, nnz] => (r, c, nnz),
            _ => return Err(bad("header must be `N nnz`")),
        };
        let mut trip = Vec::with_capacity(nnz);
        for line in lines {
            let line = line.map_err(|e| Error::io(path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let mut it = line.split_whitespace();
            let mut next = || it.next().ok_or_else(|| bad("short entry line"));
            let i: usize = next()?.parse().map_err(|_| bad("bad row index"))?;
            let j: usize = next()?.parse().map_err(|_| bad("bad column index"))?;
            let v: f64 = next()?.parse().map_err(|_| bad("bad value"))?;
            if i >= nrows || j >= ncols {
                return Err(bad("index out of range"));
            }
            trip.push((i, j, v));
        }
        if trip.len() != nnz {
            return Err(bad("entry count does not match header"));
        }
        Ok(CsrMatrix::from_triplets(nrows, ncols, trip))
    }
}
