use super::{CsrMatrix, Preconditioner, SparseError};

/// Incomplete LU factors on the sparsity pattern of `A`: the strictly lower
/// part holds `L` (unit diagonal implied), the rest holds `U`.
#[derive(Debug, Clone)]
pub struct IluFactors {
    lu: CsrMatrix,
    diag: Vec<usize>,
    /// Diagonal shift added before factorization, if a retry was needed.
    pub shift: Option<f64>,
}

pub fn ilu0(a: &CsrMatrix) -> Result<IluFactors, SparseError> {
    factor(a, 0.0).map(|(lu, diag)| IluFactors { lu, diag, shift: None })
}

/// ILU(0), retrying once with the diagonal shifted by
/// `1e-12 * max |a_ii|` if a zero pivot appears.
pub fn ilu0_with_shift_retry(a: &CsrMatrix) -> Result<IluFactors, SparseError> {
    match ilu0(a) {
        Err(SparseError::ZeroPivot { row }) => {
            let scale = a.diagonal().iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let shift = 1e-12 * if scale > 0.0 { scale } else { 1.0 };
            log::warn!("ILU(0) hit a zero pivot in row {row}; retrying with diagonal shift {shift:e}");
            let (lu, diag) = factor(a, shift)?;
            Ok(IluFactors {
                lu,
                diag,
                shift: Some(shift),
            })
        }
        other => other,
    }
}

fn factor(a: &CsrMatrix, shift: f64) -> Result<(CsrMatrix, Vec<usize>), SparseError> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(SparseError::Structure("ILU(0) needs a square matrix".into()));
    }
    let mut lu = a.clone();
    let mut diag = Vec::with_capacity(n);
    for i in 0..n {
        let k = lu.find(i, i).ok_or(SparseError::MissingDiagonal { row: i })?;
        diag.push(k);
    }
    if shift != 0.0 {
        let vals = lu.values_mut();
        for &k in &diag {
            vals[k] += shift;
        }
    }

    let indptr = lu.indptr().to_vec();
    let indices = lu.indices().to_vec();
    // column -> position in the current row, or usize::MAX
    let mut pos = vec![usize::MAX; n];
    for i in 0..n {
        let (start, end) = (indptr[i], indptr[i + 1]);
        for p in start..end {
            pos[indices[p]] = p;
        }
        let vals = lu.values_mut();
        for p in start..end {
            let k = indices[p];
            if k >= i {
                break;
            }
            let pivot = vals[diag[k]];
            let lik = vals[p] / pivot;
            vals[p] = lik;
            for q in diag[k] + 1..indptr[k + 1] {
                let j = indices[q];
                let target = pos[j];
                if target != usize::MAX {
                    vals[target] -= lik * vals[q];
                }
            }
        }
        let uii = vals[diag[i]];
        if uii == 0.0 || !uii.is_finite() {
            return Err(SparseError::ZeroPivot { row: i });
        }
        for p in start..end {
            pos[indices[p]] = usize::MAX;
        }
    }
    Ok((lu, diag))
}

impl IluFactors {
    /// Solve `L U z = r`.
    pub fn solve_into(&self, r: &[f64], z: &mut [f64]) {
        let n = self.diag.len();
        let indptr = self.lu.indptr();
        let indices = self.lu.indices();
        let vals = self.lu.values();
        for i in 0..n {
            let mut s = r[i];
            for p in indptr[i]..self.diag[i] {
                s -= vals[p] * z[indices[p]];
            }
            z[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = z[i];
            for p in self.diag[i] + 1..indptr[i + 1] {
                s -= vals[p] * z[indices[p]];
            }
            z[i] = s / vals[self.diag[i]];
        }
    }

    pub fn l_entry(&self, i: usize, j: usize) -> f64 {
        match i.cmp(&j) {
            std::cmp::Ordering::Equal => 1.0,
            std::cmp::Ordering::Greater => self.lu.get(i, j),
            std::cmp::Ordering::Less => 0.0,
        }
    }

    pub fn u_entry(&self, i: usize, j: usize) -> f64 {
        if i <= j {
            self.lu.get(i, j)
        } else {
            0.0
        }
    }
}

impl Preconditioner for IluFactors {
    fn apply(&self, r: &[f64], z: &mut [f64]) {
        self.solve_into(r, z);
    }
}
