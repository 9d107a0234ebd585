//! Dense helpers tuned for the structured, mostly sparse transition
//! Jacobians produced by the composite model.

use nalgebra::{DMatrix, DVector};

/// Square matrix stored by rows, nonzeros only. Transition Jacobians of
/// the composite model have a handful of entries per row.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseRows {
    dim: usize,
    row_start: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl SparseRows {
    /// Empty builder for an `dim x dim` matrix; fill rows in order with
    /// [`push`](Self::push) and [`end_row`](Self::end_row).
    pub fn builder(dim: usize, nnz: usize) -> Self {
        let mut row_start = Vec::with_capacity(dim + 1);
        row_start.push(0);
        Self { dim, row_start, cols: Vec::with_capacity(nnz), vals: Vec::with_capacity(nnz) }
    }

    pub fn push(&mut self, col: usize, val: f64) {
        debug_assert!(col < self.dim);
        if val != 0.0 {
            self.cols.push(col);
            self.vals.push(val);
        }
    }

    pub fn end_row(&mut self) {
        self.row_start.push(self.cols.len());
    }

    pub fn from_dense(m: &DMatrix<f64>) -> Self {
        let n = m.nrows();
        let mut out = Self::builder(n, 4 * n);
        for i in 0..n {
            for j in 0..m.ncols() {
                out.push(j, m[(i, j)]);
            }
            out.end_row();
        }
        out
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Whether every row has been closed.
    pub fn is_complete(&self) -> bool {
        self.row_start.len() == self.dim + 1
    }

    fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_start[i]..self.row_start[i + 1];
        self.cols[r.clone()].iter().copied().zip(self.vals[r].iter().copied())
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for i in 0..self.dim {
            for (j, v) in self.row(i) {
                m[(i, j)] = v;
            }
        }
        m
    }

    pub fn mul_vec(&self, x: &DVector<f64>) -> DVector<f64> {
        DVector::from_fn(self.dim, |i, _| self.row(i).map(|(j, v)| v * x[j]).sum())
    }

    /// `F M` for a dense `M`.
    pub fn mul_mat(&self, m: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(self.dim, m.ncols());
        for k in 0..m.ncols() {
            let col = m.column(k);
            for i in 0..self.dim {
                out[(i, k)] = self.row(i).map(|(j, v)| v * col[j]).sum();
            }
        }
        out
    }

    /// `F P F^T` for symmetric `P`; the result is exactly symmetric.
    pub fn sandwich(&self, p: &DMatrix<f64>) -> DMatrix<f64> {
        let n = self.dim;
        let mut work = DMatrix::zeros(n, n);
        let mut out = DMatrix::zeros(n, n);
        self.sandwich_into(p, &mut work, &mut out);
        out
    }

    /// [`sandwich`](Self::sandwich) into caller-owned `n x n` buffers.
    pub fn sandwich_into(&self, p: &DMatrix<f64>, work: &mut DMatrix<f64>, out: &mut DMatrix<f64>) {
        let n = self.dim;
        assert!(p.shape() == (n, n) && work.shape() == (n, n) && out.shape() == (n, n));
        // out = P F^T is (F P)^T for symmetric P; transposing it into work
        // lets the second product run over contiguous columns too.
        self.right_mul_t(p.as_slice(), out.as_mut_slice(), false);
        out.transpose_to(work);
        // The result is symmetric, so only its lower triangle is computed.
        self.right_mul_t(work.as_slice(), out.as_mut_slice(), true);
        let os = out.as_mut_slice();
        for c in 0..n {
            for r in c + 1..n {
                os[r * n + c] = os[c * n + r];
            }
        }
    }

    /// `M F^T` for column-major `n x n` slices, optionally only on and
    /// below the diagonal.
    fn right_mul_t(&self, m: &[f64], out: &mut [f64], lower: bool) {
        let n = self.dim;
        for k in 0..n {
            let first = if lower { k } else { 0 };
            let col = &mut out[k * n + first..(k + 1) * n];
            let r = self.row_start[k]..self.row_start[k + 1];
            let (cols, vals) = (&self.cols[r.clone()], &self.vals[r]);
            match cols.len() {
                0 => col.fill(0.0),
                _ => {
                    let j0 = cols[0];
                    let v0 = vals[0];
                    for (c, mj) in col.iter_mut().zip(&m[j0 * n + first..(j0 + 1) * n]) {
                        *c = v0 * mj;
                    }
                    for (&j, &v) in cols[1..].iter().zip(&vals[1..]) {
                        for (c, mj) in col.iter_mut().zip(&m[j * n + first..(j + 1) * n]) {
                            *c += v * mj;
                        }
                    }
                }
            }
        }
    }
}

pub(crate) fn symmetrize(p: &mut DMatrix<f64>) {
    let n = p.nrows();
    for j in 0..n {
        for i in (j + 1)..n {
            let m = 0.5 * (p[(i, j)] + p[(j, i)]);
            p[(i, j)] = m;
            p[(j, i)] = m;
        }
    }
}

pub(crate) fn max_asymmetry(p: &DMatrix<f64>) -> f64 {
    let n = p.nrows();
    let mut worst = 0.0f64;
    for j in 0..n {
        for i in (j + 1)..n {
            worst = worst.max((p[(i, j)] - p[(j, i)]).abs());
        }
    }
    worst
}

pub(crate) fn is_diagonal(m: &DMatrix<f64>) -> bool {
    let (nr, nc) = m.shape();
    (0..nc).all(|j| (0..nr).all(|i| i == j || m[(i, j)] == 0.0))
}

/// Square-root factor `L` with `L L^T = C` for a symmetric positive
/// semidefinite `C`. Cholesky when it succeeds, otherwise an eigenvalue
/// factorisation with negative round-off eigenvalues clamped to zero.
pub(crate) fn psd_factor(c: &DMatrix<f64>) -> DMatrix<f64> {
    let n = c.nrows();
    if is_diagonal(c) {
        return DMatrix::from_diagonal(&DVector::from_iterator(
            n,
            (0..n).map(|i| c[(i, i)].max(0.0).sqrt()),
        ));
    }
    if let Some(ch) = c.clone().cholesky() {
        return ch.unpack();
    }
    let eig = c.clone().symmetric_eigen();
    let mut l = eig.eigenvectors;
    for (j, lam) in eig.eigenvalues.iter().enumerate() {
        let s = lam.max(0.0).sqrt();
        l.column_mut(j).scale_mut(s);
    }
    l
}
