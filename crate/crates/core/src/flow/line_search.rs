//! One-dimensional minimization of `phi(t) = E(u0 - t g)` over `t > 0`.
//!
//! The residual is bilinear in the image, so `phi` is a quartic in `t`. The
//! default method samples it at five equispaced points of a bracket
//! `[0, T]`, interpolates the quartic and takes its minimizer. The bracket is
//! doubled while the minimizer sits at its right end and shrunk once when the
//! minimizer lies in its first quarter, which keeps the samples at the scale
//! of the answer. Golden-section and backtracking searches serve as fallbacks.

use crate::error::{InpaintError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LineSearchMethod {
    #[default]
    QuarticFit,
    GoldenSection,
    Backtracking,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LineSearchParams {
    pub method: LineSearchMethod,
    /// Smallest step tried before giving up.
    pub t_min: f64,
    pub max_expansions: usize,
    pub golden_rel_tol: f64,
    pub golden_max_iters: usize,
    /// Sufficient-decrease constant for backtracking.
    pub armijo: f64,
    pub shrink: f64,
}

impl Default for LineSearchParams {
    fn default() -> Self {
        Self {
            method: LineSearchMethod::QuarticFit,
            t_min: 1e-14,
            max_expansions: 60,
            golden_rel_tol: 1e-10,
            golden_max_iters: 200,
            armijo: 1e-4,
            shrink: 0.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    pub step: f64,
    pub value: f64,
    pub evaluations: usize,
}

struct Counted<F> {
    phi: F,
    evaluations: usize,
    best: (f64, f64),
}

impl<F: FnMut(f64) -> Result<f64>> Counted<F> {
    fn eval(&mut self, t: f64) -> Result<f64> {
        self.evaluations += 1;
        let v = (self.phi)(t)?;
        let v = if v.is_finite() { v } else { f64::INFINITY };
        if v < self.best.1 {
            self.best = (t, v);
        }
        Ok(v)
    }

    fn outcome(&self) -> StepOutcome {
        StepOutcome {
            step: self.best.0,
            value: self.best.1,
            evaluations: self.evaluations,
        }
    }

    fn improved(&self, phi0: f64) -> bool {
        self.best.0 > 0.0 && self.best.1 < phi0
    }
}

/// Finds `t > 0` with `phi(t) < phi(0)`, approximately minimizing `phi`.
///
/// `slope0` is `phi'(0)` (only used by backtracking) and `bracket` the initial
/// guess for the bracket length.
pub fn line_search<F>(
    phi: F,
    phi0: f64,
    slope0: f64,
    bracket: f64,
    params: &LineSearchParams,
) -> Result<StepOutcome>
where
    F: FnMut(f64) -> Result<f64>,
{
    let mut f = Counted {
        phi,
        evaluations: 0,
        best: (0.0, phi0),
    };
    let bracket = if bracket.is_finite() && bracket > 0.0 {
        bracket
    } else {
        1.0
    };

    if params.method == LineSearchMethod::QuarticFit {
        if let Some(out) = quartic_search(&mut f, phi0, bracket, params)? {
            return Ok(out);
        }
    }
    if params.method != LineSearchMethod::Backtracking {
        golden_search(&mut f, phi0, bracket, params)?;
        if f.improved(phi0) {
            return Ok(f.outcome());
        }
    }
    backtracking(&mut f, phi0, slope0, bracket, params)?;
    if f.improved(phi0) {
        return Ok(f.outcome());
    }
    Err(InpaintError::StepUnderflow {
        t_min: params.t_min,
    })
}

fn quartic_search<F: FnMut(f64) -> Result<f64>>(
    f: &mut Counted<F>,
    phi0: f64,
    bracket: f64,
    params: &LineSearchParams,
) -> Result<Option<StepOutcome>> {
    let mut t_hat = bracket;
    let mut shrunk = false;
    for _ in 0..params.max_expansions {
        if t_hat < params.t_min {
            break;
        }
        let mut ys = [phi0; 5];
        for (k, y) in ys.iter_mut().enumerate().skip(1) {
            *y = f.eval(t_hat * k as f64 / 4.0)?;
        }
        if ys.iter().any(|y| !y.is_finite()) {
            t_hat /= 4.0;
            continue;
        }
        let coeffs = fit_quartic(&ys);
        let s = argmin_on_unit(&coeffs);
        if s >= 0.98 {
            t_hat *= 2.0;
            continue;
        }
        if s <= 0.0 {
            if f.improved(phi0) {
                return Ok(Some(f.outcome()));
            }
            t_hat /= 16.0;
            continue;
        }
        if s < 0.25 && !shrunk {
            shrunk = true;
            t_hat *= 2.0 * s;
            continue;
        }
        f.eval(s * t_hat)?;
        if f.improved(phi0) {
            return Ok(Some(f.outcome()));
        }
        break;
    }
    Ok(None)
}

fn golden_search<F: FnMut(f64) -> Result<f64>>(
    f: &mut Counted<F>,
    phi0: f64,
    bracket: f64,
    params: &LineSearchParams,
) -> Result<()> {
    // Grow the bracket until its right end is no better than its midpoint.
    let mut hi = bracket;
    let mut mid = f.eval(0.5 * hi)?;
    for _ in 0..params.max_expansions {
        let end = f.eval(hi)?;
        if end >= mid || end >= phi0 {
            break;
        }
        mid = end;
        hi *= 2.0;
    }
    let ratio = 0.5 * (5f64.sqrt() - 1.0);
    let (mut a, mut b) = (0.0, hi);
    let mut x1 = b - ratio * (b - a);
    let mut x2 = a + ratio * (b - a);
    let mut f1 = f.eval(x1)?;
    let mut f2 = f.eval(x2)?;
    for _ in 0..params.golden_max_iters {
        if (b - a) <= params.golden_rel_tol * b.max(params.t_min) {
            break;
        }
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - ratio * (b - a);
            f1 = f.eval(x1)?;
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + ratio * (b - a);
            f2 = f.eval(x2)?;
        }
    }
    Ok(())
}

fn backtracking<F: FnMut(f64) -> Result<f64>>(
    f: &mut Counted<F>,
    phi0: f64,
    slope0: f64,
    bracket: f64,
    params: &LineSearchParams,
) -> Result<()> {
    let slope = if slope0 < 0.0 { slope0 } else { 0.0 };
    let mut t = bracket;
    while t >= params.t_min {
        let v = f.eval(t)?;
        if v < phi0 && v <= phi0 + params.armijo * t * slope {
            return Ok(());
        }
        t *= params.shrink;
    }
    Ok(())
}

/// Monomial coefficients of the quartic through `(k/4, ys[k])`, `k = 0..=4`.
pub(crate) fn fit_quartic(ys: &[f64; 5]) -> [f64; 5] {
    let mut a = [[0.0f64; 6]; 5];
    for (k, row) in a.iter_mut().enumerate() {
        let s = k as f64 / 4.0;
        let mut p = 1.0;
        for entry in row.iter_mut().take(5) {
            *entry = p;
            p *= s;
        }
        row[5] = ys[k];
    }
    for col in 0..5 {
        let pivot = (col..5)
            .max_by(|&x, &y| a[x][col].abs().partial_cmp(&a[y][col].abs()).unwrap())
            .unwrap();
        a.swap(col, pivot);
        for r in col + 1..5 {
            let m = a[r][col] / a[col][col];
            let prow = a[col];
            for (x, p) in a[r].iter_mut().zip(prow).skip(col) {
                *x -= m * p;
            }
        }
    }
    let mut c = [0.0; 5];
    for r in (0..5).rev() {
        let mut s = a[r][5];
        for k in r + 1..5 {
            s -= a[r][k] * c[k];
        }
        c[r] = s / a[r][r];
    }
    c
}

fn poly(c: &[f64; 5], s: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &ck| acc * s + ck)
}

fn dpoly(c: &[f64; 5], s: f64) -> f64 {
    ((4.0 * c[4] * s + 3.0 * c[3]) * s + 2.0 * c[2]) * s + c[1]
}

/// Global minimizer of the quartic on `[0, 1]`.
pub(crate) fn argmin_on_unit(c: &[f64; 5]) -> f64 {
    // p'' = 2 c2 + 6 c3 s + 12 c4 s^2 splits [0, 1] into pieces where p' is monotone.
    let mut knots = vec![0.0, 1.0];
    let (qa, qb, qc) = (12.0 * c[4], 6.0 * c[3], 2.0 * c[2]);
    if qa.abs() > 0.0 {
        let disc = qb * qb - 4.0 * qa * qc;
        if disc >= 0.0 {
            let sq = disc.sqrt();
            let q = -0.5 * (qb + qb.signum() * sq);
            for r in [q / qa, if q != 0.0 { qc / q } else { f64::NAN }] {
                if r > 0.0 && r < 1.0 {
                    knots.push(r);
                }
            }
        }
    } else if qb.abs() > 0.0 {
        let r = -qc / qb;
        if r > 0.0 && r < 1.0 {
            knots.push(r);
        }
    }
    knots.sort_by(|a, b| a.partial_cmp(b).unwrap());

    let mut candidates = vec![0.0, 1.0];
    for w in knots.windows(2) {
        let (mut lo, mut hi) = (w[0], w[1]);
        let (dlo, dhi) = (dpoly(c, lo), dpoly(c, hi));
        if dlo == 0.0 {
            candidates.push(lo);
            continue;
        }
        if dlo.signum() == dhi.signum() {
            continue;
        }
        for _ in 0..100 {
            let m = 0.5 * (lo + hi);
            if m <= lo || m >= hi {
                break;
            }
            if dpoly(c, m).signum() == dlo.signum() {
                lo = m;
            } else {
                hi = m;
            }
        }
        candidates.push(0.5 * (lo + hi));
    }
    candidates
        .into_iter()
        .min_by(|&a, &b| poly(c, a).partial_cmp(&poly(c, b)).unwrap())
        .unwrap()
}
