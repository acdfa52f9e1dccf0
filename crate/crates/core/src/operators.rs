//! Sparse finite-difference operators with rows on Ω and columns on Ω′.
//!
//! Stencils are composed on the full grid first and only then restricted, so
//! `D1Lap` is exactly `D1 * Lap` at every Ω row. Grid spacing is 1.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{InpaintError, Result};
use crate::grid::InpaintDomain;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OperatorName {
    D1,
    D2,
    Lap,
    D1Lap,
    D2Lap,
}

impl fmt::Display for OperatorName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            OperatorName::D1 => "D1",
            OperatorName::D2 => "D2",
            OperatorName::Lap => "Lap",
            OperatorName::D1Lap => "D1Lap",
            OperatorName::D2Lap => "D2Lap",
        };
        f.write_str(s)
    }
}

type Stencil = Vec<((isize, isize), f64)>;

fn d1_stencil() -> Stencil {
    vec![((-1, 0), -0.5), ((1, 0), 0.5)]
}

fn d2_stencil() -> Stencil {
    vec![((0, -1), -0.5), ((0, 1), 0.5)]
}

fn lap_stencil() -> Stencil {
    vec![
        ((0, -1), 1.0),
        ((-1, 0), 1.0),
        ((0, 0), -4.0),
        ((1, 0), 1.0),
        ((0, 1), 1.0),
    ]
}

/// Full-grid product `outer * inner`, zero coefficients removed.
fn compose(outer: &Stencil, inner: &Stencil) -> Stencil {
    let mut acc: BTreeMap<(isize, isize), f64> = BTreeMap::new();
    for &((oi, oj), co) in outer {
        for &((ii, ij), ci) in inner {
            *acc.entry((oi + ii, oj + ij)).or_insert(0.0) += co * ci;
        }
    }
    acc.into_iter().filter(|&(_, c)| c != 0.0).collect()
}

fn stencil_for(name: OperatorName) -> Stencil {
    match name {
        OperatorName::D1 => d1_stencil(),
        OperatorName::D2 => d2_stencil(),
        OperatorName::Lap => lap_stencil(),
        OperatorName::D1Lap => compose(&d1_stencil(), &lap_stencil()),
        OperatorName::D2Lap => compose(&d2_stencil(), &lap_stencil()),
    }
}

/// CSR matrix from Ω′-vectors to Ω-vectors.
#[derive(Debug, Clone)]
pub struct RestrictedOperator {
    name: OperatorName,
    rows: usize,
    cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl RestrictedOperator {
    fn build(name: OperatorName, domain: &InpaintDomain) -> Result<Self> {
        let stencil = stencil_for(name);
        let (height, width) = domain.shape();
        let mut row_ptr = Vec::with_capacity(domain.len_omega() + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        for &(i, j) in domain.omega() {
            let mut row: Vec<(usize, f64)> = Vec::with_capacity(stencil.len());
            for &((di, dj), c) in &stencil {
                let ii = i as isize + di;
                let jj = j as isize + dj;
                if ii < 0 || jj < 0 || ii as usize >= height || jj as usize >= width {
                    return Err(InpaintError::InvalidDomain(format!(
                        "{name} stencil at ({i}, {j}) leaves the image"
                    )));
                }
                let col = domain
                    .index_omega_prime(ii as usize, jj as usize)
                    .ok_or_else(|| {
                        InpaintError::InvalidDomain(format!(
                            "{name} stencil at ({i}, {j}) reads ({ii}, {jj}) outside the extended region"
                        ))
                    })?;
                row.push((col, c));
            }
            row.sort_by_key(|&(c, _)| c);
            for (c, v) in row {
                col_idx.push(c);
                values.push(v);
            }
            row_ptr.push(col_idx.len());
        }
        Ok(Self {
            name,
            rows: domain.len_omega(),
            cols: domain.len_omega_prime(),
            row_ptr,
            col_idx,
            values,
        })
    }

    pub fn name(&self) -> OperatorName {
        self.name
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Column/value pairs of row `r`.
    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        self.col_idx[span.clone()]
            .iter()
            .copied()
            .zip(self.values[span].iter().copied())
    }

    pub fn apply(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.cols {
            return Err(InpaintError::LengthMismatch {
                expected: self.cols,
                found: v.len(),
            });
        }
        let mut out = vec![0.0; self.rows];
        self.apply_into(v, &mut out);
        Ok(out)
    }

    pub(crate) fn apply_into(&self, v: &[f64], out: &mut [f64]) {
        for (r, o) in out.iter_mut().enumerate() {
            let mut s = 0.0;
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                s += self.values[k] * v[self.col_idx[k]];
            }
            *o = s;
        }
    }

    pub fn apply_adjoint(&self, w: &[f64]) -> Result<Vec<f64>> {
        if w.len() != self.rows {
            return Err(InpaintError::LengthMismatch {
                expected: self.rows,
                found: w.len(),
            });
        }
        let mut out = vec![0.0; self.cols];
        self.apply_adjoint_add(w, &mut out);
        Ok(out)
    }

    /// `out += Aᵀ w`.
    pub(crate) fn apply_adjoint_add(&self, w: &[f64], out: &mut [f64]) {
        for (r, &wr) in w.iter().enumerate() {
            if wr == 0.0 {
                continue;
            }
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                out[self.col_idx[k]] += self.values[k] * wr;
            }
        }
    }
}

/// The five restricted operators of one domain.
#[derive(Debug, Clone)]
pub struct OperatorSet {
    pub d1: RestrictedOperator,
    pub d2: RestrictedOperator,
    pub lap: RestrictedOperator,
    pub d1lap: RestrictedOperator,
    pub d2lap: RestrictedOperator,
    omega_in_prime: Vec<usize>,
}

impl OperatorSet {
    pub fn get(&self, name: OperatorName) -> &RestrictedOperator {
        match name {
            OperatorName::D1 => &self.d1,
            OperatorName::D2 => &self.d2,
            OperatorName::Lap => &self.lap,
            OperatorName::D1Lap => &self.d1lap,
            OperatorName::D2Lap => &self.d2lap,
        }
    }

    pub fn len_omega(&self) -> usize {
        self.d1.rows
    }

    pub fn len_omega_prime(&self) -> usize {
        self.d1.cols
    }

    /// Position of each Ω entry inside an Ω′-vector.
    pub fn omega_in_prime(&self) -> &[usize] {
        &self.omega_in_prime
    }
}

pub fn build_operators(domain: &InpaintDomain, shape: (usize, usize)) -> Result<OperatorSet> {
    if domain.shape() != shape {
        return Err(InpaintError::InvalidDomain(format!(
            "domain built for {:?}, operators requested for {:?}",
            domain.shape(),
            shape
        )));
    }
    Ok(OperatorSet {
        d1: RestrictedOperator::build(OperatorName::D1, domain)?,
        d2: RestrictedOperator::build(OperatorName::D2, domain)?,
        lap: RestrictedOperator::build(OperatorName::Lap, domain)?,
        d1lap: RestrictedOperator::build(OperatorName::D1Lap, domain)?,
        d2lap: RestrictedOperator::build(OperatorName::D2Lap, domain)?,
        omega_in_prime: domain.omega_in_prime(),
    })
}
