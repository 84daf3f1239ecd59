//! Compressed sparse rows and banded LU factorization.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::{Error, Result};

/// Square sparse matrix in compressed-row form.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    col: Vec<usize>,
    val: Vec<f64>,
}

impl CsrMatrix {
    /// Builds from `(row, col, value)` triplets; duplicates are summed in
    /// insertion order so the result is deterministic.
    pub fn from_triplets(n: usize, mut triplets: Vec<(usize, usize, f64)>) -> Self {
        // stable sort keeps the summation order of duplicates
        triplets.sort_by_key(|t| (t.0, t.1));
        let mut row_ptr = vec![0usize; n + 1];
        let mut col = Vec::with_capacity(triplets.len());
        let mut val: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in triplets {
            if last == Some((r, c)) {
                *val.last_mut().unwrap() += v;
            } else {
                col.push(c);
                val.push(v);
                row_ptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        CsrMatrix { n, row_ptr, col, val }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col[r.clone()].iter().copied().zip(self.val[r].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.row(i).filter(|(c, _)| *c == j).map(|(_, v)| v).sum()
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.matvec_into(x, &mut y);
        y
    }

    pub fn matvec_into(&self, x: &[f64], y: &mut [f64]) {
        for i in 0..self.n {
            let mut s = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                s += self.val[k] * x[self.col[k]];
            }
            y[i] = s;
        }
    }

    /// `(lower, upper)` bandwidths.
    pub fn bandwidths(&self) -> (usize, usize) {
        let mut kl = 0;
        let mut ku = 0;
        for i in 0..self.n {
            for (j, _) in self.row(i) {
                if j < i {
                    kl = kl.max(i - j);
                } else {
                    ku = ku.max(j - i);
                }
            }
        }
        (kl, ku)
    }

    /// Nonpositive off-diagonal entries and positive diagonal in every row.
    pub fn is_z_matrix(&self) -> bool {
        (0..self.n).all(|i| self.row(i).all(|(j, v)| if i == j { v > 0.0 } else { v <= 0.0 }))
    }

    /// Same pattern with `shift[i]` added to each diagonal entry.
    pub fn with_diagonal_shift(&self, shift: &[f64]) -> CsrMatrix {
        let mut out = self.clone();
        for i in 0..self.n {
            let mut found = false;
            for k in out.row_ptr[i]..out.row_ptr[i + 1] {
                if out.col[k] == i {
                    out.val[k] += shift[i];
                    found = true;
                }
            }
            assert!(found, "diagonal entry missing in row {i}");
        }
        out
    }
}

/// LU factorization of a banded matrix, column-major band storage, with
/// optional partial pivoting.
#[derive(Debug, Clone)]
pub struct BandLu {
    n: usize,
    kl: usize,
    /// Upper bandwidth of the stored factor (grows by `kl` with pivoting).
    ku: usize,
    ld: usize,
    data: Vec<f64>,
    pivots: Option<Vec<usize>>,
}

impl BandLu {
    pub fn factor(a: &CsrMatrix, pivoting: bool) -> Result<Self> {
        let n = a.dim();
        let (kl, ku0) = a.bandwidths();
        let ku = if pivoting { ku0 + kl } else { ku0 };
        let ld = kl + ku + 1;
        let mut data = vec![0.0; n * ld];
        let mut diag_scale: f64 = 0.0;
        for i in 0..n {
            for (j, v) in a.row(i) {
                data[j * ld + (i + ku - j)] += v;
                if i == j {
                    diag_scale = diag_scale.max(v.abs());
                }
            }
        }
        let mut pivots = if pivoting { Some(vec![0usize; n]) } else { None };
        let tiny = 1e-13 * diag_scale.max(f64::MIN_POSITIVE);
        for k in 0..n {
            let last_row = (k + kl).min(n - 1);
            if let Some(piv) = pivots.as_mut() {
                let mut p = k;
                let mut best = data[k * ld + ku].abs();
                for i in k + 1..=last_row {
                    let v = data[k * ld + (i + ku - k)].abs();
                    if v > best {
                        best = v;
                        p = i;
                    }
                }
                piv[k] = p;
                if p != k {
                    let last_col = (k + ku).min(n - 1);
                    for j in k..=last_col {
                        data.swap(j * ld + (k + ku - j), j * ld + (p + ku - j));
                    }
                }
            }
            let pivot = data[k * ld + ku];
            if !(pivot.abs() > tiny) {
                return Err(Error::Solver(format!("zero pivot {pivot:e} at row {k}")));
            }
            let len = last_row - k;
            if len == 0 {
                continue;
            }
            let inv = 1.0 / pivot;
            for v in &mut data[k * ld + ku + 1..k * ld + ku + 1 + len] {
                *v *= inv;
            }
            let last_col = (k + ku).min(n - 1);
            for j in k + 1..=last_col {
                let (left, right) = data.split_at_mut(j * ld);
                let akj = right[k + ku - j];
                if akj == 0.0 {
                    continue;
                }
                let m = &left[k * ld + ku + 1..k * ld + ku + 1 + len];
                let start = k + 1 + ku - j;
                let c = &mut right[start..start + len];
                for (cv, mv) in c.iter_mut().zip(m) {
                    *cv -= mv * akj;
                }
            }
        }
        Ok(BandLu { n, kl, ku, ld, data, pivots })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn solve_in_place(&self, b: &mut [f64]) {
        let (n, kl, ku, ld) = (self.n, self.kl, self.ku, self.ld);
        for k in 0..n {
            if let Some(p) = &self.pivots {
                b.swap(k, p[k]);
            }
            let bk = b[k];
            if bk != 0.0 {
                let last = (k + kl).min(n - 1);
                let col = &self.data[k * ld + ku + 1..k * ld + ku + 1 + (last - k)];
                for (bi, l) in b[k + 1..=last].iter_mut().zip(col) {
                    *bi -= l * bk;
                }
            }
        }
        for k in (0..n).rev() {
            let bk = b[k] / self.data[k * ld + ku];
            b[k] = bk;
            if bk != 0.0 {
                let first = k.saturating_sub(ku);
                let col = &self.data[k * ld + (first + ku - k)..k * ld + ku];
                for (bi, u) in b[first..k].iter_mut().zip(col) {
                    *bi -= u * bk;
                }
            }
        }
    }
}
