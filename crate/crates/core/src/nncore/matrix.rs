use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};

/// Row-major dense matrix of `f64`. Vectors are stored as `1 × n`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::dim(format!(
                "{} values cannot fill a {rows}x{cols} matrix",
                data.len()
            )));
        }
        if let Some(bad) = data.iter().find(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("non-finite matrix entry {bad}")));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn row_vector(data: Vec<f64>) -> Self {
        Self {
            rows: 1,
            cols: data.len(),
            data,
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    /// I.i.d. `normal(0, std²)` entries. `std == 0` yields the zero matrix
    /// without consuming randomness.
    pub fn random_normal<R: Rng + ?Sized>(
        rows: usize,
        cols: usize,
        std: f64,
        rng: &mut R,
    ) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::invalid(format!(
                "matrix dimensions must be positive, got {rows}x{cols}"
            )));
        }
        if !(std >= 0.0 && std.is_finite()) {
            return Err(Error::invalid(format!("standard deviation {std} must be >= 0")));
        }
        if std == 0.0 {
            return Ok(Self::zeros(rows, cols));
        }
        let normal = Normal::new(0.0, std).map_err(|e| Error::invalid(e.to_string()))?;
        let data = (0..rows * cols).map(|_| normal.sample(rng)).collect();
        Ok(Self { rows, cols, data })
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn fill(&mut self, v: f64) {
        self.data.iter_mut().for_each(|x| *x = v);
    }

    pub fn sum_sq(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                t.data[c * self.rows + r] = self.data[r * self.cols + c];
            }
        }
        t
    }

    /// `out = self · x`. Zero entries of `x` are skipped, which keeps sparse
    /// rating inputs cheap.
    pub fn matvec_into(&self, x: &[f64], out: &mut [f64]) {
        assert_eq!(x.len(), self.cols, "matvec input length");
        assert_eq!(out.len(), self.rows, "matvec output length");
        out.iter_mut().for_each(|o| *o = 0.0);
        let nonzero: Vec<usize> = (0..x.len()).filter(|&j| x[j] != 0.0).collect();
        if nonzero.len() * 2 < x.len() {
            for (r, o) in out.iter_mut().enumerate() {
                let row = self.row(r);
                let mut acc = 0.0;
                for &j in &nonzero {
                    acc += row[j] * x[j];
                }
                *o = acc;
            }
        } else {
            for (r, o) in out.iter_mut().enumerate() {
                let row = self.row(r);
                let mut acc = 0.0;
                for (w, xj) in row.iter().zip(x) {
                    if *xj != 0.0 {
                        acc += w * xj;
                    }
                }
                *o = acc;
            }
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.rows];
        self.matvec_into(x, &mut out);
        out
    }

    /// `selfᵀ · g`.
    pub fn matvec_transposed(&self, g: &[f64]) -> Vec<f64> {
        assert_eq!(g.len(), self.rows, "transposed matvec input length");
        let mut out = vec![0.0; self.cols];
        for (r, &gr) in g.iter().enumerate() {
            if gr == 0.0 {
                continue;
            }
            for (o, w) in out.iter_mut().zip(self.row(r)) {
                *o += w * gr;
            }
        }
        out
    }

    /// `self += g · xᵀ`, skipping zero factors.
    pub fn add_outer(&mut self, g: &[f64], x: &[f64]) {
        assert_eq!(g.len(), self.rows, "outer product rows");
        assert_eq!(x.len(), self.cols, "outer product cols");
        let nonzero: Vec<usize> = (0..x.len()).filter(|&j| x[j] != 0.0).collect();
        for (r, &gr) in g.iter().enumerate() {
            if gr == 0.0 {
                continue;
            }
            let row = self.row_mut(r);
            for &j in &nonzero {
                row[j] += gr * x[j];
            }
        }
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}
