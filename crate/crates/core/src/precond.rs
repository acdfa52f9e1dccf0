//! Cholesky factorization of `I - Lap` on Ω with homogeneous Dirichlet data.
//!
//! Rows and columns are both restricted to Ω, so the matrix has 5 on the
//! diagonal and -1 for every pair of 4-neighbours inside Ω. The factor is
//! stored in envelope (skyline) form: row `r` keeps the columns
//! `first[r]..=r`. In the column-major natural ordering the envelope width is
//! about one column of Ω, and Cholesky creates no fill outside it.

use crate::error::{InpaintError, Result};
use crate::grid::InpaintDomain;

/// `I - Lap_Ω` as an explicit symmetric sparse matrix (lower triangle by rows).
#[derive(Debug, Clone)]
pub struct ShiftedLaplacian {
    n: usize,
    // strictly lower neighbours of each row
    lower: Vec<Vec<usize>>,
    // all neighbours of each row, ascending
    neighbours: Vec<Vec<usize>>,
}

impl ShiftedLaplacian {
    pub fn new(domain: &InpaintDomain) -> Self {
        let n = domain.len_omega();
        let mut neighbours = Vec::with_capacity(n);
        for &(i, j) in domain.omega() {
            let mut nb: Vec<usize> = [(i - 1, j), (i + 1, j), (i, j - 1), (i, j + 1)]
                .iter()
                .filter_map(|&(a, b)| domain.index_omega(a, b))
                .collect();
            nb.sort_unstable();
            neighbours.push(nb);
        }
        let lower = neighbours
            .iter()
            .enumerate()
            .map(|(r, nb)| nb.iter().copied().filter(|&c| c < r).collect())
            .collect();
        Self {
            n,
            lower,
            neighbours,
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// `(I - Lap_Ω) x`.
    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.n {
            return Err(InpaintError::LengthMismatch {
                expected: self.n,
                found: x.len(),
            });
        }
        Ok(self
            .neighbours
            .iter()
            .enumerate()
            .map(|(r, nb)| 5.0 * x[r] - nb.iter().map(|&c| x[c]).sum::<f64>())
            .collect())
    }

    /// `(I - Lap_Ω)^k x` by repeated products.
    pub fn apply_pow(&self, x: &[f64], k: u32) -> Result<Vec<f64>> {
        let mut y = x.to_vec();
        if y.len() != self.n {
            return Err(InpaintError::LengthMismatch {
                expected: self.n,
                found: y.len(),
            });
        }
        for _ in 0..k {
            y = self.apply(&y)?;
        }
        Ok(y)
    }
}

/// Envelope Cholesky factor `L` with `L Lᵀ = I - Lap_Ω`.
#[derive(Debug, Clone)]
pub struct PreconditionerFactorization {
    matrix: ShiftedLaplacian,
    n: usize,
    first: Vec<usize>,
    offsets: Vec<usize>,
    values: Vec<f64>,
}

impl PreconditionerFactorization {
    pub fn dim(&self) -> usize {
        self.n
    }

    /// Number of stored factor entries.
    pub fn envelope_size(&self) -> usize {
        self.values.len()
    }

    #[inline]
    fn row(&self, r: usize) -> &[f64] {
        &self.values[self.offsets[r]..self.offsets[r + 1]]
    }

    /// The factored matrix, for forward products.
    pub fn matrix(&self) -> &ShiftedLaplacian {
        &self.matrix
    }

    fn factor(matrix: ShiftedLaplacian) -> Result<Self> {
        let n = matrix.n;
        let first: Vec<usize> = (0..n)
            .map(|r| matrix.lower[r].first().copied().unwrap_or(r))
            .collect();
        let mut offsets = Vec::with_capacity(n + 1);
        offsets.push(0);
        for r in 0..n {
            offsets.push(offsets[r] + (r - first[r] + 1));
        }
        let mut values: Vec<f64> = vec![0.0; offsets[n]];

        for r in 0..n {
            let fr = first[r];
            let base = offsets[r];
            for &c in &matrix.lower[r] {
                values[base + c - fr] = -1.0;
            }
            values[base + r - fr] = 5.0;

            for c in fr..r {
                let fc = first[c];
                let start = fr.max(fc);
                let mut s = values[base + c - fr];
                let cbase = offsets[c];
                for k in start..c {
                    s -= values[base + k - fr] * values[cbase + k - fc];
                }
                values[base + c - fr] = s / values[cbase + c - fc];
            }
            let mut d = values[base + r - fr];
            for k in fr..r {
                let l = values[base + k - fr];
                d -= l * l;
            }
            if !(d > 0.0) || !d.is_finite() {
                return Err(InpaintError::NotPositiveDefinite { row: r, pivot: d });
            }
            values[base + r - fr] = d.sqrt();
        }

        Ok(Self {
            matrix,
            n,
            first,
            offsets,
            values,
        })
    }

    /// One solve of `(I - Lap_Ω) x = y`.
    pub fn solve(&self, y: &[f64]) -> Result<Vec<f64>> {
        if y.len() != self.n {
            return Err(InpaintError::LengthMismatch {
                expected: self.n,
                found: y.len(),
            });
        }
        let mut x = y.to_vec();
        self.solve_in_place(&mut x);
        Ok(x)
    }

    fn solve_in_place(&self, x: &mut [f64]) {
        // L z = y
        for r in 0..self.n {
            let fr = self.first[r];
            let row = self.row(r);
            let mut s = x[r];
            for (k, &l) in (fr..r).zip(row) {
                s -= l * x[k];
            }
            x[r] = s / row[r - fr];
        }
        // Lᵀ x = z
        for r in (0..self.n).rev() {
            let fr = self.first[r];
            let row = self.row(r);
            let xr = x[r] / row[r - fr];
            x[r] = xr;
            for (k, &l) in (fr..r).zip(row) {
                x[k] -= l * xr;
            }
        }
    }

    /// `(I - Lap_Ω)^{-k} y` by `k` successive solves.
    pub fn solve_k(&self, y: &[f64], k: u32) -> Result<Vec<f64>> {
        if y.len() != self.n {
            return Err(InpaintError::LengthMismatch {
                expected: self.n,
                found: y.len(),
            });
        }
        let mut x = y.to_vec();
        for _ in 0..k {
            self.solve_in_place(&mut x);
        }
        Ok(x)
    }
}

pub fn factor_preconditioner(domain: &InpaintDomain) -> Result<PreconditionerFactorization> {
    PreconditionerFactorization::factor(ShiftedLaplacian::new(domain))
}
