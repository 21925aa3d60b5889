use rayon::prelude::*;

use super::SparseError;

/// Rows above this count are multiplied in parallel.
const PAR_ROWS: usize = 4096;

/// Compressed sparse row matrix with sorted, duplicate-free column indices.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    data: Vec<f64>,
}

impl CsrMatrix {
    /// Build from raw arrays, checking the structural invariants.
    pub fn from_raw(
        nrows: usize,
        ncols: usize,
        indptr: Vec<usize>,
        indices: Vec<usize>,
        data: Vec<f64>,
    ) -> Result<Self, SparseError> {
        if indptr.len() != nrows + 1 || indptr[0] != 0 || indptr[nrows] != indices.len() {
            return Err(SparseError::Structure("row offsets do not match the entry count".into()));
        }
        if indices.len() != data.len() {
            return Err(SparseError::Structure("indices and values differ in length".into()));
        }
        for i in 0..nrows {
            if indptr[i] > indptr[i + 1] {
                return Err(SparseError::Structure(format!("row offsets decrease at row {i}")));
            }
            let row = &indices[indptr[i]..indptr[i + 1]];
            if row.iter().any(|&c| c >= ncols) {
                return Err(SparseError::Structure(format!("column index out of range in row {i}")));
            }
            if row.windows(2).any(|w| w[0] >= w[1]) {
                return Err(SparseError::Structure(format!(
                    "column indices of row {i} are not strictly increasing"
                )));
            }
        }
        Ok(Self {
            nrows,
            ncols,
            indptr,
            indices,
            data,
        })
    }

    /// Sum duplicate entries; entries of equal position are added in input
    /// order, so the result is deterministic.
    pub fn from_triplets(nrows: usize, ncols: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut order: Vec<usize> = (0..triplets.len()).collect();
        order.sort_by_key(|&k| (triplets[k].0, triplets[k].1));
        let mut indptr = vec![0; nrows + 1];
        let mut indices = Vec::with_capacity(triplets.len());
        let mut data: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for k in order {
            let (i, j, v) = triplets[k];
            assert!(i < nrows && j < ncols, "triplet ({i}, {j}) outside {nrows}x{ncols}");
            if last == Some((i, j)) {
                *data.last_mut().unwrap() += v;
            } else {
                indices.push(j);
                data.push(v);
                indptr[i + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..nrows {
            indptr[i + 1] += indptr[i];
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

    /// Square matrix with the given sorted row patterns and zero values.
    pub fn zeros_with_pattern(n: usize, rows: &[Vec<usize>]) -> Self {
        let mut indptr = Vec::with_capacity(n + 1);
        indptr.push(0);
        let mut indices = Vec::new();
        for row in rows {
            indices.extend_from_slice(row);
            indptr.push(indices.len());
        }
        let nnz = indices.len();
        Self {
            nrows: n,
            ncols: n,
            indptr,
            indices,
            data: vec![0.0; nnz],
        }
    }

    pub fn from_dense(rows: &[Vec<f64>]) -> Self {
        let n = rows.len();
        let m = rows.first().map_or(0, Vec::len);
        let mut t = Vec::new();
        for (i, row) in rows.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                if v != 0.0 {
                    t.push((i, j, v));
                }
            }
        }
        Self::from_triplets(n, m, &t)
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

    pub fn indptr(&self) -> &[usize] {
        &self.indptr
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn values(&self) -> &[f64] {
        &self.data
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let r = self.indptr[i]..self.indptr[i + 1];
        (&self.indices[r.clone()], &self.data[r])
    }

    /// Position of entry (i, j) in the value array.
    pub fn find(&self, i: usize, j: usize) -> Option<usize> {
        let start = self.indptr[i];
        self.indices[start..self.indptr[i + 1]]
            .binary_search(&j)
            .ok()
            .map(|k| start + k)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.find(i, j).map_or(0.0, |k| self.data[k])
    }

    /// Add `v` to a structurally present entry; panics otherwise.
    pub fn add_at(&mut self, i: usize, j: usize, v: f64) {
        let k = self
            .find(i, j)
            .unwrap_or_else(|| panic!("entry ({i}, {j}) is not in the sparsity pattern"));
        self.data[k] += v;
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.nrows.min(self.ncols)).map(|i| self.get(i, i)).collect()
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.nrows];
        self.matvec_into(x, &mut y);
        y
    }

    pub fn matvec_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.ncols, "matvec input length");
        assert_eq!(y.len(), self.nrows, "matvec output length");
        let row_dot = |i: usize| {
            let mut s = 0.0;
            for k in self.indptr[i]..self.indptr[i + 1] {
                s += self.data[k] * x[self.indices[k]];
            }
            s
        };
        if self.nrows >= PAR_ROWS {
            y.par_iter_mut().enumerate().for_each(|(i, yi)| *yi = row_dot(i));
        } else {
            for (i, yi) in y.iter_mut().enumerate() {
                *yi = row_dot(i);
            }
        }
    }

    pub fn scaled(&self, s: f64) -> Self {
        let mut m = self.clone();
        m.data.iter_mut().for_each(|v| *v *= s);
        m
    }

    /// `self + s * other`, with the union of both patterns.
    pub fn add_scaled(&self, other: &CsrMatrix, s: f64) -> Self {
        assert_eq!((self.nrows, self.ncols), (other.nrows, other.ncols), "shape mismatch");
        let mut indptr = Vec::with_capacity(self.nrows + 1);
        indptr.push(0);
        let mut indices = Vec::with_capacity(self.nnz().max(other.nnz()));
        let mut data = Vec::with_capacity(self.nnz().max(other.nnz()));
        for i in 0..self.nrows {
            let (ca, va) = self.row(i);
            let (cb, vb) = other.row(i);
            let (mut p, mut q) = (0, 0);
            while p < ca.len() || q < cb.len() {
                let take_a = q == cb.len() || (p < ca.len() && ca[p] < cb[q]);
                let take_b = p == ca.len() || (q < cb.len() && cb[q] < ca[p]);
                if take_a {
                    indices.push(ca[p]);
                    data.push(va[p]);
                    p += 1;
                } else if take_b {
                    indices.push(cb[q]);
                    data.push(s * vb[q]);
                    q += 1;
                } else {
                    indices.push(ca[p]);
                    data.push(va[p] + s * vb[q]);
                    p += 1;
                    q += 1;
                }
            }
            indptr.push(indices.len());
        }
        Self {
            nrows: self.nrows,
            ncols: self.ncols,
            indptr,
            indices,
            data,
        }
    }

    /// Assemble `[[a, b], [c, d]]` from four blocks of equal square size.
    pub fn block2x2(a: &CsrMatrix, b: &CsrMatrix, c: &CsrMatrix, d: &CsrMatrix) -> Self {
        let n = a.nrows;
        for m in [a, b, c, d] {
            assert_eq!((m.nrows, m.ncols), (n, n), "blocks must be square and equal in size");
        }
        let mut indptr = Vec::with_capacity(2 * n + 1);
        indptr.push(0);
        let cap = a.nnz() + b.nnz() + c.nnz() + d.nnz();
        let mut indices = Vec::with_capacity(cap);
        let mut data = Vec::with_capacity(cap);
        for (left, right) in [(a, b), (c, d)] {
            for i in 0..n {
                let (cl, vl) = left.row(i);
                indices.extend_from_slice(cl);
                data.extend_from_slice(vl);
                let (cr, vr) = right.row(i);
                indices.extend(cr.iter().map(|j| j + n));
                data.extend_from_slice(vr);
                indptr.push(indices.len());
            }
        }
        Self {
            nrows: 2 * n,
            ncols: 2 * n,
            indptr,
            indices,
            data,
        }
    }

    /// Extract block (bi, bj) of a 2x2 block matrix of size 2n.
    pub fn block(&self, bi: usize, bj: usize) -> Self {
        let n = self.nrows / 2;
        let mut indptr = Vec::with_capacity(n + 1);
        indptr.push(0);
        let mut indices = Vec::new();
        let mut data = Vec::new();
        for i in 0..n {
            let (c, v) = self.row(bi * n + i);
            for (&j, &x) in c.iter().zip(v) {
                if j >= bj * n && j < (bj + 1) * n {
                    indices.push(j - bj * n);
                    data.push(x);
                }
            }
            indptr.push(indices.len());
        }
        Self {
            nrows: n,
            ncols: n,
            indptr,
            indices,
            data,
        }
    }

    pub fn transpose(&self) -> Self {
        let mut t = Vec::with_capacity(self.nnz());
        for i in 0..self.nrows {
            let (c, v) = self.row(i);
            for (&j, &x) in c.iter().zip(v) {
                t.push((j, i, x));
            }
        }
        Self::from_triplets(self.ncols, self.nrows, &t)
    }

    /// Largest `|a_ij - a_ji|`.
    pub fn asymmetry(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.nrows {
            let (c, v) = self.row(i);
            for (&j, &x) in c.iter().zip(v) {
                worst = worst.max((x - self.get(j, i)).abs());
            }
        }
        worst
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.ncols]; self.nrows];
        for (i, row) in d.iter_mut().enumerate() {
            let (c, v) = self.row(i);
            for (&j, &x) in c.iter().zip(v) {
                row[j] = x;
            }
        }
        d
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triplets_sum_duplicates() {
        let m = CsrMatrix::from_triplets(2, 3, &[(1, 2, 1.0), (0, 0, 2.0), (1, 2, 0.5), (0, 1, -1.0)]);
        assert_eq!(m.to_dense(), vec![vec![2.0, -1.0, 0.0], vec![0.0, 0.0, 1.5]]);
        assert_eq!(m.nnz(), 3);
        assert_eq!(m.matvec(&[1.0, 2.0, 3.0]), vec![0.0, 4.5]);
    }

    #[test]
    fn raw_constructor_checks_invariants() {
        assert!(CsrMatrix::from_raw(2, 2, vec![0, 1, 2], vec![0, 1], vec![1.0, 1.0]).is_ok());
        assert!(CsrMatrix::from_raw(2, 2, vec![0, 2, 2], vec![1, 0], vec![1.0, 1.0]).is_err());
        assert!(CsrMatrix::from_raw(2, 2, vec![0, 1, 2], vec![0, 2], vec![1.0, 1.0]).is_err());
        assert!(CsrMatrix::from_raw(2, 2, vec![0, 1], vec![0], vec![1.0]).is_err());
    }

    #[test]
    fn add_scaled_merges_patterns() {
        let a = CsrMatrix::from_dense(&[vec![1.0, 0.0], vec![0.0, 2.0]]);
        let b = CsrMatrix::from_dense(&[vec![0.0, 3.0], vec![4.0, 1.0]]);
        let c = a.add_scaled(&b, 2.0);
        assert_eq!(c.to_dense(), vec![vec![1.0, 6.0], vec![8.0, 4.0]]);
    }

    #[test]
    fn block_round_trip() {
        let a = CsrMatrix::from_dense(&[vec![1.0, 2.0], vec![0.0, 3.0]]);
        let b = CsrMatrix::identity(2);
        let c = a.scaled(-1.0);
        let d = a.transpose();
        let m = CsrMatrix::block2x2(&a, &b, &c, &d);
        assert_eq!(m.nrows(), 4);
        assert_eq!(m.get(0, 1), 2.0);
        assert_eq!(m.get(1, 3), 1.0);
        assert_eq!(m.get(2, 1), -2.0);
        assert_eq!(m.get(3, 2), 2.0);
        assert_eq!(m.block(0, 0), a);
        assert_eq!(m.block(0, 1), b);
        assert_eq!(m.block(1, 0), c);
        assert_eq!(m.block(1, 1), d);
        assert_eq!(d.asymmetry(), 2.0);
    }

    #[test]
    fn parallel_and_serial_matvec_agree() {
        let n = 3 * PAR_ROWS;
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0 + (i % 7) as f64));
            if i + 1 < n {
                t.push((i, i + 1, -1.0 / (1 + i % 5) as f64));
                t.push((i + 1, i, -0.5));
            }
        }
        let m = CsrMatrix::from_triplets(n, n, &t);
        let x: Vec<f64> = (0..n).map(|i| (i as f64 * 0.37).sin()).collect();
        let y = m.matvec(&x);
        for i in [0, 17, n / 2, n - 1] {
            let (c, v) = m.row(i);
            let s: f64 = c.iter().zip(v).map(|(&j, &a)| a * x[j]).sum();
            assert_eq!(y[i].to_bits(), s.to_bits());
        }
    }
}
