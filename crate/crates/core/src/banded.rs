//! Banded matrices with an in-place LU factorisation (no pivoting).
//!
//! The systems assembled by the stepper and the spline fit are either
//! diagonally dominant or similar to symmetric positive definite matrices,
//! so Doolittle elimination without row exchanges keeps the band intact.

use crate::error::CurveError;

/// Square matrix with `lower` sub-diagonals and `upper` super-diagonals,
/// stored row by row.
#[derive(Debug, Clone)]
pub struct BandedMatrix {
    n: usize,
    lower: usize,
    upper: usize,
    data: Vec<f64>,
}

impl BandedMatrix {
    pub fn zeros(n: usize, lower: usize, upper: usize) -> Self {
        Self {
            n,
            lower,
            upper,
            data: vec![0.0; n * (lower + upper + 1)],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    fn slot(&self, row: usize, col: usize) -> usize {
        debug_assert!(col + self.lower >= row && col <= row + self.upper);
        row * (self.lower + self.upper + 1) + (col + self.lower - row)
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        if col + self.lower < row || col > row + self.upper || row >= self.n || col >= self.n {
            return 0.0;
        }
        self.data[self.slot(row, col)]
    }

    /// Adds `value` to entry (row, col). Panics outside the band.
    pub fn add(&mut self, row: usize, col: usize, value: f64) {
        assert!(
            col + self.lower >= row && col <= row + self.upper && row < self.n && col < self.n,
            "entry ({row}, {col}) outside band"
        );
        let k = self.slot(row, col);
        self.data[k] += value;
    }

    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        let k = self.slot(row, col);
        self.data[k] = value;
    }

    /// Clears row `row` and places `value` on its diagonal.
    pub fn set_identity_row(&mut self, row: usize, value: f64) {
        let lo = row.saturating_sub(self.lower);
        let hi = (row + self.upper).min(self.n - 1);
        for col in lo..=hi {
            self.set(row, col, 0.0);
        }
        self.set(row, row, value);
    }

    /// y = A x
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|row| {
                let lo = row.saturating_sub(self.lower);
                let hi = (row + self.upper).min(self.n - 1);
                (lo..=hi).map(|col| self.get(row, col) * x[col]).sum()
            })
            .collect()
    }

    pub fn factor(mut self) -> Result<BandedLu, CurveError> {
        let n = self.n;
        let scale = self.data.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let tiny = f64::EPSILON * scale.max(f64::MIN_POSITIVE);
        for k in 0..n {
            let pivot = self.data[self.slot(k, k)];
            if !pivot.is_finite() || pivot.abs() <= tiny {
                return Err(CurveError::SingularPivot { row: k });
            }
            let last_row = (k + self.lower).min(n - 1);
            let last_col = (k + self.upper).min(n - 1);
            for i in k + 1..=last_row {
                let s = self.slot(i, k);
                let l = self.data[s] / pivot;
                self.data[s] = l;
                if l == 0.0 {
                    continue;
                }
                for j in k + 1..=last_col {
                    let ukj = self.data[self.slot(k, j)];
                    let sij = self.slot(i, j);
                    self.data[sij] -= l * ukj;
                }
            }
        }
        Ok(BandedLu { m: self })
    }
}

/// LU factors packed in the band storage of the original matrix.
#[derive(Debug, Clone)]
pub struct BandedLu {
    m: BandedMatrix,
}

impl BandedLu {
    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let a = &self.m;
        let n = a.n;
        assert_eq!(rhs.len(), n);
        let mut x = rhs.to_vec();
        for i in 0..n {
            let lo = i.saturating_sub(a.lower);
            let mut acc = x[i];
            for (j, xj) in x.iter().enumerate().take(i).skip(lo) {
                acc -= a.data[a.slot(i, j)] * xj;
            }
            x[i] = acc;
        }
        for i in (0..n).rev() {
            let hi = (i + a.upper).min(n - 1);
            let mut acc = x[i];
            for j in i + 1..=hi {
                acc -= a.data[a.slot(i, j)] * x[j];
            }
            x[i] = acc / a.data[a.slot(i, i)];
        }
        x
    }
}
