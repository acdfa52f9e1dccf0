//! Residual `F = D2u * D1Lap u - D1u * D2Lap u`, energy `E = ½‖F‖²`, and the
//! Euler-Lagrange and Sobolev gradients with respect to the Ω entries of `u'`.

use std::fmt;
use std::str::FromStr;

use crate::error::{InpaintError, Result};
use crate::operators::OperatorSet;
use crate::precond::PreconditionerFactorization;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GradientKind {
    EulerLagrange,
    /// `(I - Lap)^{-k}` applied to the Euler-Lagrange gradient, `k` in 1..=3.
    Sobolev(u32),
}

impl GradientKind {
    pub fn sobolev(k: u32) -> Result<Self> {
        if (1..=3).contains(&k) {
            Ok(GradientKind::Sobolev(k))
        } else {
            Err(InpaintError::InvalidConfig(format!(
                "Sobolev order must be 1, 2 or 3, got {k}"
            )))
        }
    }

    /// Number of resolvent applications; 0 for Euler-Lagrange.
    pub fn order(self) -> u32 {
        match self {
            GradientKind::EulerLagrange => 0,
            GradientKind::Sobolev(k) => k,
        }
    }
}

impl fmt::Display for GradientKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GradientKind::EulerLagrange => f.write_str("el"),
            GradientKind::Sobolev(k) => write!(f, "h{k}"),
        }
    }
}

impl FromStr for GradientKind {
    type Err = InpaintError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "el" => Ok(GradientKind::EulerLagrange),
            "h1" => Ok(GradientKind::Sobolev(1)),
            "h2" => Ok(GradientKind::Sobolev(2)),
            "h3" => Ok(GradientKind::Sobolev(3)),
            other => Err(InpaintError::InvalidConfig(format!(
                "unknown gradient kind {other:?}"
            ))),
        }
    }
}

/// Residual, energy and the derivative products they were built from.
#[derive(Debug, Clone)]
pub struct EnergyState {
    pub residual: Vec<f64>,
    pub energy: f64,
    pub d1u: Vec<f64>,
    pub d2u: Vec<f64>,
    pub d1lapu: Vec<f64>,
    pub d2lapu: Vec<f64>,
}

fn check_prime(u_prime: &[f64], ops: &OperatorSet) -> Result<()> {
    if u_prime.len() != ops.len_omega_prime() {
        return Err(InpaintError::LengthMismatch {
            expected: ops.len_omega_prime(),
            found: u_prime.len(),
        });
    }
    Ok(())
}

pub fn evaluate(u_prime: &[f64], ops: &OperatorSet) -> Result<EnergyState> {
    check_prime(u_prime, ops)?;
    let n = ops.len_omega();
    let mut d1u = vec![0.0; n];
    let mut d2u = vec![0.0; n];
    let mut d1lapu = vec![0.0; n];
    let mut d2lapu = vec![0.0; n];
    ops.d1.apply_into(u_prime, &mut d1u);
    ops.d2.apply_into(u_prime, &mut d2u);
    ops.d1lap.apply_into(u_prime, &mut d1lapu);
    ops.d2lap.apply_into(u_prime, &mut d2lapu);
    let residual: Vec<f64> = (0..n)
        .map(|k| d2u[k] * d1lapu[k] - d1u[k] * d2lapu[k])
        .collect();
    let energy = 0.5 * residual.iter().map(|f| f * f).sum::<f64>();
    Ok(EnergyState {
        residual,
        energy,
        d1u,
        d2u,
        d1lapu,
        d2lapu,
    })
}

pub fn residual(u_prime: &[f64], ops: &OperatorSet) -> Result<Vec<f64>> {
    Ok(evaluate(u_prime, ops)?.residual)
}

pub fn energy(u_prime: &[f64], ops: &OperatorSet) -> Result<f64> {
    Ok(evaluate(u_prime, ops)?.energy)
}

/// Euler-Lagrange gradient from an already evaluated state.
///
/// With `v1 = F * (-D2Lap u, D1Lap u)` and `v2 = -F * (-D2u, D1u)` the
/// gradient is `D1ᵀ v1.0 + D2ᵀ v1.1 + Lap (D1ᵀ v2.0 + D2ᵀ v2.1)` read on Ω.
/// These signs make `E(u + s h)' = <h, g>` for every `h` supported on Ω.
pub fn gradient_el_from_state(state: &EnergyState, ops: &OperatorSet) -> Vec<f64> {
    let f = &state.residual;
    let n = f.len();
    let mut v1x = vec![0.0; n];
    let mut v1y = vec![0.0; n];
    let mut v2x = vec![0.0; n];
    let mut v2y = vec![0.0; n];
    for k in 0..n {
        v1x[k] = -f[k] * state.d2lapu[k];
        v1y[k] = f[k] * state.d1lapu[k];
        v2x[k] = f[k] * state.d2u[k];
        v2y[k] = -f[k] * state.d1u[k];
    }

    let m = ops.len_omega_prime();
    let mut first = vec![0.0; m];
    ops.d1.apply_adjoint_add(&v1x, &mut first);
    ops.d2.apply_adjoint_add(&v1y, &mut first);
    let mut lifted = vec![0.0; m];
    ops.d1.apply_adjoint_add(&v2x, &mut lifted);
    ops.d2.apply_adjoint_add(&v2y, &mut lifted);
    let mut g = vec![0.0; n];
    ops.lap.apply_into(&lifted, &mut g);
    for (gk, &p) in g.iter_mut().zip(ops.omega_in_prime()) {
        *gk += first[p];
    }
    g
}

pub fn gradient_el(u_prime: &[f64], ops: &OperatorSet) -> Result<Vec<f64>> {
    let state = evaluate(u_prime, ops)?;
    Ok(gradient_el_from_state(&state, ops))
}

/// Applies the preconditioner of `kind` to an Euler-Lagrange gradient.
pub fn precondition(
    g_el: &[f64],
    fact: &PreconditionerFactorization,
    kind: GradientKind,
) -> Result<Vec<f64>> {
    match kind {
        GradientKind::EulerLagrange => Ok(g_el.to_vec()),
        GradientKind::Sobolev(k) => fact.solve_k(g_el, k),
    }
}

pub fn gradient(
    u_prime: &[f64],
    ops: &OperatorSet,
    fact: &PreconditionerFactorization,
    kind: GradientKind,
) -> Result<Vec<f64>> {
    precondition(&gradient_el(u_prime, ops)?, fact, kind)
}
