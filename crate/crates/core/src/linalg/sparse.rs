use std::cmp::Ordering;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;
use crate::scalar::Real;

/// Compressed-row sparse matrix.
///
/// Column indices are strictly increasing within each row and no duplicate
/// entries are stored.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix<T> {
    n_rows: usize,
    n_cols: usize,
    row_offsets: Vec<usize>,
    col_indices: Vec<usize>,
    values: Vec<T>,
}

/// Coordinate-format accumulator; duplicates are summed on [`finalize`](Self::finalize).
#[derive(Debug, Clone)]
pub struct TripletBuilder<T> {
    n_rows: usize,
    n_cols: usize,
    entries: Vec<(usize, usize, T)>,
}

impl<T: Real> TripletBuilder<T> {
    pub fn new(n_rows: usize, n_cols: usize) -> Self {
        Self {
            n_rows,
            n_cols,
            entries: Vec::new(),
        }
    }

    pub fn with_capacity(n_rows: usize, n_cols: usize, cap: usize) -> Self {
        Self {
            n_rows,
            n_cols,
            entries: Vec::with_capacity(cap),
        }
    }

    #[inline]
    pub fn push(&mut self, row: usize, col: usize, value: T) {
        debug_assert!(row < self.n_rows && col < self.n_cols);
        self.entries.push((row, col, value));
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Sorts, sums duplicates and produces the compressed-row matrix.
    ///
    /// Duplicates are summed in ascending value order, so the result does not
    /// depend on the order in which triplets were pushed. Explicit zeros that
    /// arise from summation are kept (they preserve the assembled pattern).
    pub fn finalize(mut self) -> SparseMatrix<T> {
        self.entries.sort_unstable_by(|a, b| {
            (a.0, a.1)
                .cmp(&(b.0, b.1))
                .then_with(|| a.2.partial_cmp(&b.2).unwrap_or(Ordering::Equal))
        });
        let mut row_offsets = vec![0usize; self.n_rows + 1];
        let mut col_indices = Vec::with_capacity(self.entries.len());
        let mut values: Vec<T> = Vec::with_capacity(self.entries.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in self.entries {
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                col_indices.push(c);
                values.push(v);
                row_offsets[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for i in 0..self.n_rows {
            row_offsets[i + 1] += row_offsets[i];
        }
        SparseMatrix {
            n_rows: self.n_rows,
            n_cols: self.n_cols,
            row_offsets,
            col_indices,
            values,
        }
    }
}

impl<T: Real> SparseMatrix<T> {
    /// Builds a matrix from raw compressed-row arrays, validating the layout.
    pub fn from_csr(
        n_rows: usize,
        n_cols: usize,
        row_offsets: Vec<usize>,
        col_indices: Vec<usize>,
        values: Vec<T>,
    ) -> Result<Self> {
        if row_offsets.len() != n_rows + 1 {
            return Err(Error::DimensionMismatch {
                context: "row offsets",
                expected: n_rows + 1,
                got: row_offsets.len(),
            });
        }
        if col_indices.len() != values.len() || *row_offsets.last().unwrap() != values.len() {
            return Err(Error::InvalidArgument("inconsistent CSR array lengths".into()));
        }
        for i in 0..n_rows {
            if row_offsets[i] > row_offsets[i + 1] {
                return Err(Error::InvalidArgument("row offsets not monotone".into()));
            }
            let cols = &col_indices[row_offsets[i]..row_offsets[i + 1]];
            for w in cols.windows(2) {
                if w[0] >= w[1] {
                    return Err(Error::InvalidArgument(format!(
                        "column indices not strictly increasing in row {i}"
                    )));
                }
            }
            if let Some(&c) = cols.last() {
                if c >= n_cols {
                    return Err(Error::IndexOutOfRange { index: c, len: n_cols });
                }
            }
        }
        Ok(Self {
            n_rows,
            n_cols,
            row_offsets,
            col_indices,
            values,
        })
    }

    pub fn zeros(n_rows: usize, n_cols: usize) -> Self {
        Self {
            n_rows,
            n_cols,
            row_offsets: vec![0; n_rows + 1],
            col_indices: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            n_rows: n,
            n_cols: n,
            row_offsets: (0..=n).collect(),
            col_indices: (0..n).collect(),
            values: vec![T::one(); n],
        }
    }

    pub fn from_diagonal(diag: &[T]) -> Self {
        let n = diag.len();
        Self {
            n_rows: n,
            n_cols: n,
            row_offsets: (0..=n).collect(),
            col_indices: (0..n).collect(),
            values: diag.to_vec(),
        }
    }

    pub fn from_dense(m: &DenseMatrix<T>) -> Self {
        let mut b = TripletBuilder::new(m.n_rows(), m.n_cols());
        for i in 0..m.n_rows() {
            for j in 0..m.n_cols() {
                let v = m[(i, j)];
                if v != T::zero() {
                    b.push(i, j, v);
                }
            }
        }
        b.finalize()
    }

    #[inline]
    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    #[inline]
    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    #[inline]
    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_offsets(&self) -> &[usize] {
        &self.row_offsets
    }

    pub fn col_indices(&self) -> &[usize] {
        &self.col_indices
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [T] {
        &mut self.values
    }

    /// Column indices and values of row `i`.
    #[inline]
    pub fn row(&self, i: usize) -> (&[usize], &[T]) {
        let (s, e) = (self.row_offsets[i], self.row_offsets[i + 1]);
        (&self.col_indices[s..e], &self.values[s..e])
    }

    /// Stored value at `(i, j)`, zero when the entry is not in the pattern.
    pub fn get(&self, i: usize, j: usize) -> T {
        let (cols, vals) = self.row(i);
        match cols.binary_search(&j) {
            Ok(k) => vals[k],
            Err(_) => T::zero(),
        }
    }

    pub fn diagonal(&self) -> Vec<T> {
        (0..self.n_rows.min(self.n_cols)).map(|i| self.get(i, i)).collect()
    }

    pub fn spmv(&self, x: &[T]) -> Result<Vec<T>> {
        let mut y = vec![T::zero(); self.n_rows];
        self.spmv_into(x, &mut y)?;
        Ok(y)
    }

    pub fn spmv_into(&self, x: &[T], y: &mut [T]) -> Result<()> {
        if x.len() != self.n_cols {
            return Err(Error::DimensionMismatch {
                context: "spmv input",
                expected: self.n_cols,
                got: x.len(),
            });
        }
        if y.len() != self.n_rows {
            return Err(Error::DimensionMismatch {
                context: "spmv output",
                expected: self.n_rows,
                got: y.len(),
            });
        }
        self.mul_vec_unchecked(x, y);
        Ok(())
    }

    /// `y = self · x` without length checks (hot loops in the solvers).
    #[inline]
    pub fn mul_vec_unchecked(&self, x: &[T], y: &mut [T]) {
        for (i, yi) in y.iter_mut().enumerate() {
            let (s, e) = (self.row_offsets[i], self.row_offsets[i + 1]);
            let mut acc = T::zero();
            for k in s..e {
                acc += self.values[k] * x[self.col_indices[k]];
            }
            *yi = acc;
        }
    }

    /// `y += scale · self · x`.
    pub fn mul_vec_add(&self, scale: T, x: &[T], y: &mut [T]) {
        debug_assert_eq!(x.len(), self.n_cols);
        debug_assert_eq!(y.len(), self.n_rows);
        for (i, yi) in y.iter_mut().enumerate() {
            let (s, e) = (self.row_offsets[i], self.row_offsets[i + 1]);
            let mut acc = T::zero();
            for k in s..e {
                acc += self.values[k] * x[self.col_indices[k]];
            }
            *yi += scale * acc;
        }
    }

    /// `r = b − self · x`.
    pub fn residual_into(&self, b: &[T], x: &[T], r: &mut [T]) {
        for (i, ri) in r.iter_mut().enumerate() {
            let (s, e) = (self.row_offsets[i], self.row_offsets[i + 1]);
            let mut acc = b[i];
            for k in s..e {
                acc -= self.values[k] * x[self.col_indices[k]];
            }
            *ri = acc;
        }
    }

    pub fn transpose(&self) -> Self {
        let mut counts = vec![0usize; self.n_cols + 1];
        for &c in &self.col_indices {
            counts[c + 1] += 1;
        }
        for j in 0..self.n_cols {
            counts[j + 1] += counts[j];
        }
        let mut next = counts.clone();
        let mut col_indices = vec![0usize; self.nnz()];
        let mut values = vec![T::zero(); self.nnz()];
        for i in 0..self.n_rows {
            let (cols, vals) = self.row(i);
            for (&c, &v) in cols.iter().zip(vals) {
                let dst = next[c];
                col_indices[dst] = i;
                values[dst] = v;
                next[c] += 1;
            }
        }
        Self {
            n_rows: self.n_cols,
            n_cols: self.n_rows,
            row_offsets: counts,
            col_indices,
            values,
        }
    }

    pub fn scaled(&self, s: T) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= s);
        out
    }

    /// `a·self + b·other` over the union of both patterns.
    pub fn linear_combination(&self, a: T, other: &Self, b: T) -> Result<Self> {
        if self.n_rows != other.n_rows || self.n_cols != other.n_cols {
            return Err(Error::DimensionMismatch {
                context: "matrix sum",
                expected: self.n_rows * self.n_cols,
                got: other.n_rows * other.n_cols,
            });
        }
        let mut row_offsets = Vec::with_capacity(self.n_rows + 1);
        row_offsets.push(0);
        let mut col_indices = Vec::with_capacity(self.nnz().max(other.nnz()));
        let mut values = Vec::with_capacity(self.nnz().max(other.nnz()));
        for i in 0..self.n_rows {
            let (ca, va) = self.row(i);
            let (cb, vb) = other.row(i);
            let (mut p, mut q) = (0, 0);
            while p < ca.len() || q < cb.len() {
                let take_a = q >= cb.len() || (p < ca.len() && ca[p] < cb[q]);
                let take_b = p >= ca.len() || (q < cb.len() && cb[q] < ca[p]);
                if take_a {
                    col_indices.push(ca[p]);
                    values.push(a * va[p]);
                    p += 1;
                } else if take_b {
                    col_indices.push(cb[q]);
                    values.push(b * vb[q]);
                    q += 1;
                } else {
                    col_indices.push(ca[p]);
                    values.push(a * va[p] + b * vb[q]);
                    p += 1;
                    q += 1;
                }
            }
            row_offsets.push(col_indices.len());
        }
        Ok(Self {
            n_rows: self.n_rows,
            n_cols: self.n_cols,
            row_offsets,
            col_indices,
            values,
        })
    }

    /// Sparse product `self · other` (row-wise accumulation).
    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.n_cols != other.n_rows {
            return Err(Error::DimensionMismatch {
                context: "sparse product",
                expected: self.n_cols,
                got: other.n_rows,
            });
        }
        let mut acc = vec![T::zero(); other.n_cols];
        let mut marker = vec![usize::MAX; other.n_cols];
        let mut touched: Vec<usize> = Vec::new();
        let mut row_offsets = vec![0usize];
        let mut col_indices = Vec::new();
        let mut values = Vec::new();
        for i in 0..self.n_rows {
            touched.clear();
            let (ca, va) = self.row(i);
            for (&k, &a) in ca.iter().zip(va) {
                let (cb, vb) = other.row(k);
                for (&j, &b) in cb.iter().zip(vb) {
                    if marker[j] != i {
                        marker[j] = i;
                        acc[j] = T::zero();
                        touched.push(j);
                    }
                    acc[j] += a * b;
                }
            }
            touched.sort_unstable();
            for &j in &touched {
                col_indices.push(j);
                values.push(acc[j]);
            }
            row_offsets.push(col_indices.len());
        }
        Ok(Self {
            n_rows: self.n_rows,
            n_cols: other.n_cols,
            row_offsets,
            col_indices,
            values,
        })
    }

    pub fn to_dense(&self) -> DenseMatrix<T> {
        let mut d = DenseMatrix::zeros(self.n_rows, self.n_cols);
        for i in 0..self.n_rows {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                d[(i, j)] = v;
            }
        }
        d
    }

    pub fn max_abs(&self) -> T {
        self.values
            .iter()
            .fold(T::zero(), |m, &v| if v.abs() > m { v.abs() } else { m })
    }

    /// Largest `|a_ij − a_ji|`.
    pub fn asymmetry(&self) -> T {
        let t = self.transpose();
        match self.linear_combination(T::one(), &t, -T::one()) {
            Ok(d) => d.max_abs(),
            Err(_) => T::infinity(),
        }
    }

    /// Lower and upper bandwidths.
    pub fn bandwidths(&self) -> (usize, usize) {
        let (mut kl, mut ku) = (0, 0);
        for i in 0..self.n_rows {
            let (cols, _) = self.row(i);
            if let (Some(&f), Some(&l)) = (cols.first(), cols.last()) {
                if f < i {
                    kl = kl.max(i - f);
                }
                if l > i {
                    ku = ku.max(l - i);
                }
            }
        }
        (kl, ku)
    }

    /// Symmetric permutation `B[new_i, new_j] = A[old_i, old_j]` with
    /// `new_of_old[old] = new`.
    pub fn permute_symmetric(&self, new_of_old: &[usize]) -> Result<Self> {
        if self.n_rows != self.n_cols || new_of_old.len() != self.n_rows {
            return Err(Error::DimensionMismatch {
                context: "symmetric permutation",
                expected: self.n_rows,
                got: new_of_old.len(),
            });
        }
        let mut b = TripletBuilder::with_capacity(self.n_rows, self.n_cols, self.nnz());
        for i in 0..self.n_rows {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                b.push(new_of_old[i], new_of_old[j], v);
            }
        }
        Ok(b.finalize())
    }

    /// Zeroes row `i` and sets the diagonal to `diag` if it is in the pattern.
    pub fn set_row_identity(&mut self, i: usize, diag: T) {
        let (s, e) = (self.row_offsets[i], self.row_offsets[i + 1]);
        for k in s..e {
            self.values[k] = if self.col_indices[k] == i { diag } else { T::zero() };
        }
    }

    pub fn zero_row(&mut self, i: usize) {
        let (s, e) = (self.row_offsets[i], self.row_offsets[i + 1]);
        self.values[s..e].iter_mut().for_each(|v| *v = T::zero());
    }

    /// Zeroes every entry whose column is flagged in `mask`.
    pub fn zero_columns(&mut self, mask: &[bool]) {
        for k in 0..self.values.len() {
            if mask[self.col_indices[k]] {
                self.values[k] = T::zero();
            }
        }
    }

    /// Dense extraction `m[rows, cols]`, preserving the order of both index sets.
    pub fn submatrix(&self, rows: &[usize], cols: &[usize]) -> Result<DenseMatrix<T>> {
        check_index_set(rows, self.n_rows)?;
        let col_pos = index_positions(cols, self.n_cols)?;
        let mut out = DenseMatrix::zeros(rows.len(), cols.len());
        for (li, &gi) in rows.iter().enumerate() {
            let (cs, vs) = self.row(gi);
            for (&c, &v) in cs.iter().zip(vs) {
                if let Some(lj) = col_pos.get(c) {
                    out[(li, lj)] = v;
                }
            }
        }
        Ok(out)
    }

    /// MatrixMarket coordinate export.
    pub fn to_matrix_market(&self) -> String {
        let mut s = String::new();
        s.push_str("%%MatrixMarket matrix coordinate real general\n");
        let _ = writeln!(s, "{} {} {}", self.n_rows, self.n_cols, self.nnz());
        for i in 0..self.n_rows {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                let _ = writeln!(s, "{} {} {:.17e}", i + 1, j + 1, v.as_f64());
            }
        }
        s
    }
}

/// Sparse lookup from global index to position in an index set.
pub(crate) struct IndexPositions {
    pos: Vec<usize>,
}

impl IndexPositions {
    #[inline]
    pub(crate) fn get(&self, global: usize) -> Option<usize> {
        match self.pos[global] {
            usize::MAX => None,
            p => Some(p),
        }
    }
}

pub(crate) fn check_index_set(idx: &[usize], len: usize) -> Result<()> {
    index_positions(idx, len).map(|_| ())
}

pub(crate) fn index_positions(idx: &[usize], len: usize) -> Result<IndexPositions> {
    let mut pos = vec![usize::MAX; len];
    for (k, &g) in idx.iter().enumerate() {
        if g >= len {
            return Err(Error::IndexOutOfRange { index: g, len });
        }
        if pos[g] != usize::MAX {
            return Err(Error::DuplicateIndex { index: g });
        }
        pos[g] = k;
    }
    Ok(IndexPositions { pos })
}

/// Assembles a 2×2 block matrix `[[a, b], [c, d]]`.
pub fn block2x2<T: Real>(
    a: &SparseMatrix<T>,
    b: &SparseMatrix<T>,
    c: &SparseMatrix<T>,
    d: &SparseMatrix<T>,
) -> Result<SparseMatrix<T>> {
    if a.n_rows != b.n_rows || c.n_rows != d.n_rows || a.n_cols != c.n_cols || b.n_cols != d.n_cols
    {
        return Err(Error::InvalidArgument("incompatible block shapes".into()));
    }
    let n0 = a.n_cols;
    let n_rows = a.n_rows + c.n_rows;
    let n_cols = a.n_cols + b.n_cols;
    let mut row_offsets = Vec::with_capacity(n_rows + 1);
    row_offsets.push(0);
    let mut col_indices = Vec::with_capacity(a.nnz() + b.nnz() + c.nnz() + d.nnz());
    let mut values = Vec::with_capacity(col_indices.capacity());
    for (left, right) in [(a, b), (c, d)] {
        for i in 0..left.n_rows {
            let (cl, vl) = left.row(i);
            col_indices.extend_from_slice(cl);
            values.extend_from_slice(vl);
            let (cr, vr) = right.row(i);
            col_indices.extend(cr.iter().map(|&j| j + n0));
            values.extend_from_slice(vr);
            row_offsets.push(col_indices.len());
        }
    }
    Ok(SparseMatrix {
        n_rows,
        n_cols,
        row_offsets,
        col_indices,
        values,
    })
}
