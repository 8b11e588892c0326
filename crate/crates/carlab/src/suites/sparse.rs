//! Coordinate-list matrices for products with ladder operators, which have
//! at most one nonzero per column.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

pub(crate) type Dense = DMatrix<C64>;

#[derive(Debug, Clone)]
pub(crate) struct Sparse {
    rows: usize,
    cols: usize,
    entries: Vec<(usize, usize, C64)>,
}

impl Sparse {
    pub fn from_dense(m: &Dense) -> Self {
        let mut entries = Vec::new();
        for c in 0..m.ncols() {
            for r in 0..m.nrows() {
                let v = m[(r, c)];
                if v.re != 0.0 || v.im != 0.0 {
                    entries.push((r, c, v));
                }
            }
        }
        Self { rows: m.nrows(), cols: m.ncols(), entries }
    }

    pub fn adjoint(&self) -> Self {
        Self {
            rows: self.cols,
            cols: self.rows,
            entries: self.entries.iter().map(|&(r, c, v)| (c, r, v.conj())).collect(),
        }
    }

    /// `self · b`.
    pub fn left(&self, b: &Dense) -> Dense {
        let mut out = Dense::zeros(self.rows, b.ncols());
        for &(r, c, v) in &self.entries {
            for j in 0..b.ncols() {
                out[(r, j)] += v * b[(c, j)];
            }
        }
        out
    }

    /// `b · self`.
    pub fn right(&self, b: &Dense) -> Dense {
        let mut out = Dense::zeros(b.nrows(), self.cols);
        for &(r, c, v) in &self.entries {
            for i in 0..b.nrows() {
                out[(i, c)] += b[(i, r)] * v;
            }
        }
        out
    }

    pub fn to_dense(&self) -> Dense {
        let mut out = Dense::zeros(self.rows, self.cols);
        for &(r, c, v) in &self.entries {
            out[(r, c)] += v;
        }
        out
    }
}

/// Largest entry modulus.
pub(crate) fn max_abs(m: &Dense) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}
