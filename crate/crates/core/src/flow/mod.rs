//! Steepest descent on the inpainting energy.
//!
//! The image is first filled with the harmonic extension of its surroundings,
//! then updated as `u0 <- u0 - t_n g_n` where `g_n` is the Euler-Lagrange or a
//! Sobolev gradient and `t_n` minimizes the energy along `-g_n`. Iteration
//! stops once the largest pixel change of an update falls below `tol`.

mod line_search;
mod sor;
mod trace;

use std::time::Instant;

pub use line_search::{line_search, LineSearchMethod, LineSearchParams, StepOutcome};
pub use sor::sor_fill;
pub use trace::{ConvergenceTrace, StopReason, TraceRecord};

use crate::diagnostics::{condition_report, dot, kappa_from_products, ConditionReport, KappaFormula};
use crate::energy::{evaluate, gradient_el_from_state, precondition, GradientKind};
use crate::error::{InpaintError, Result};
use crate::grid::{restrict, GrayImage, InpaintDomain, Region};
use crate::operators::OperatorSet;
use crate::precond::PreconditionerFactorization;

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub gradient_kind: GradientKind,
    /// Stop once `max |u_{n+1} - u_n| < tol`.
    pub tol: f64,
    pub max_iters: usize,
    pub sor_omega: f64,
    pub sor_tol: f64,
    pub sor_max_iters: usize,
    pub line_search: LineSearchParams,
    /// Energies at or below this count as an exact zero of the residual.
    pub energy_floor: f64,
    pub kappa_formula: KappaFormula,
    /// Record zero wall time so traces are byte-reproducible.
    pub reproducible: bool,
    /// Emit a log line every this many iterations (0 disables).
    pub log_every: usize,
    /// Record a full condition report every this many iterations (0 disables).
    pub condition_every: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            gradient_kind: GradientKind::Sobolev(1),
            tol: 1e-4,
            max_iters: 20_000,
            sor_omega: 1.8,
            sor_tol: 1e-12,
            sor_max_iters: 50_000,
            line_search: LineSearchParams::default(),
            energy_floor: 1e-20,
            kappa_formula: KappaFormula::Rooted,
            reproducible: false,
            log_every: 500,
            condition_every: 0,
        }
    }
}

impl SolverConfig {
    pub fn with_kind(kind: GradientKind) -> Self {
        Self {
            gradient_kind: kind,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(InpaintError::InvalidConfig(format!("tol must be positive, got {}", self.tol)));
        }
        if !(self.sor_omega > 1.0 && self.sor_omega < 2.0) {
            return Err(InpaintError::InvalidConfig(format!(
                "SOR relaxation must lie in (1, 2), got {}",
                self.sor_omega
            )));
        }
        if !(self.sor_tol > 0.0) {
            return Err(InpaintError::InvalidConfig("sor_tol must be positive".into()));
        }
        if let GradientKind::Sobolev(k) = self.gradient_kind {
            GradientKind::sobolev(k)?;
        }
        Ok(())
    }
}

/// Replaces Ω by the SOR solution of the Laplace equation with Dirichlet data
/// taken from the surrounding pixels.
pub fn harmonic_init(image: &GrayImage, domain: &InpaintDomain, cfg: &SolverConfig) -> Result<GrayImage> {
    cfg.validate()?;
    log::debug!(
        "harmonic fill: omega {} tol {:e} max sweeps {}",
        cfg.sor_omega,
        cfg.sor_tol,
        cfg.sor_max_iters
    );
    sor_fill(image, domain, cfg.sor_omega, cfg.sor_tol, cfg.sor_max_iters)
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub image: GrayImage,
    pub trace: ConvergenceTrace,
    pub stop: StopReason,
    pub conditions: Vec<ConditionReport>,
}

pub(crate) struct Clock {
    start: Instant,
    frozen: bool,
}

impl Clock {
    pub(crate) fn new(frozen: bool) -> Self {
        Self {
            start: Instant::now(),
            frozen,
        }
    }

    pub(crate) fn ms(&self) -> f64 {
        if self.frozen {
            0.0
        } else {
            self.start.elapsed().as_secs_f64() * 1e3
        }
    }
}

fn all_finite(v: &[f64]) -> bool {
    v.iter().all(|x| x.is_finite())
}

/// Runs the descent from `image`, which should already hold an initial fill.
pub fn minimize(
    image: &GrayImage,
    domain: &InpaintDomain,
    ops: &OperatorSet,
    fact: &PreconditionerFactorization,
    cfg: &SolverConfig,
) -> Result<Solution> {
    cfg.validate()?;
    if ops.len_omega() != domain.len_omega() || fact.dim() != domain.len_omega() {
        return Err(InpaintError::InvalidDomain(
            "operators or factorization built for a different domain".into(),
        ));
    }
    let kind = cfg.gradient_kind;
    let k = kind.order();
    let pos = ops.omega_in_prime().to_vec();
    let mut u_prime = restrict(image, domain, Region::OmegaPrime)?;
    let mut trace = ConvergenceTrace::new();
    let clock = Clock::new(cfg.reproducible);

    let mut last_error = f64::NAN;
    let mut last_step = f64::NAN;
    let mut bracket = f64::NAN;
    let mut stop = StopReason::MaxIters;
    let mut g_prime = vec![0.0; u_prime.len()];
    let mut trial = u_prime.clone();
    let mut conditions = Vec::new();

    for iter in 0..=cfg.max_iters {
        let state = evaluate(&u_prime, ops)?;
        let g_el = gradient_el_from_state(&state, ops);
        if !state.energy.is_finite() || !all_finite(&g_el) {
            return Err(InpaintError::NonFiniteEnergy { iter });
        }
        let g = precondition(&g_el, fact, kind)?;
        let u0: Vec<f64> = pos.iter().map(|&p| u_prime[p]).collect();
        let g_dot = dot(&g_el, &g);
        let kappa = if state.energy > 0.0 {
            let x_sq = dot(&u0, &fact.matrix().apply_pow(&u0, k)?);
            kappa_from_products(g_dot, x_sq, state.energy, cfg.kappa_formula)?
        } else {
            f64::NAN
        };
        if cfg.condition_every > 0 && iter % cfg.condition_every == 0 && state.energy > 0.0 {
            conditions.push(condition_report(iter, &u0, &g_el, fact, state.energy, cfg.kappa_formula)?);
        }
        trace.push(TraceRecord {
            iter,
            energy: state.energy,
            residual2: 2.0 * state.energy,
            error: last_error,
            step: last_step,
            kappa,
            wall_ms: clock.ms(),
        });
        if cfg.log_every > 0 && iter % cfg.log_every == 0 {
            log::info!(
                "{kind} iter {iter}: energy {:.6e} error {:.3e} step {:.3e}",
                state.energy,
                last_error,
                last_step
            );
        }

        if iter > 0 && last_error < cfg.tol {
            stop = StopReason::Converged;
            break;
        }
        if state.energy <= cfg.energy_floor || g_dot <= 0.0 {
            stop = StopReason::Converged;
            break;
        }
        if iter == cfg.max_iters {
            stop = StopReason::MaxIters;
            break;
        }

        for (&p, &gk) in pos.iter().zip(&g) {
            g_prime[p] = gk;
        }
        if !bracket.is_finite() {
            let g_inf = g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            bracket = 1.0 / (1.0 + g_inf);
        }
        let phi = |t: f64| -> Result<f64> {
            for &p in &pos {
                trial[p] = u_prime[p] - t * g_prime[p];
            }
            Ok(evaluate(&trial, ops)?.energy)
        };
        let outcome = match line_search(phi, state.energy, -g_dot, bracket, &cfg.line_search) {
            Ok(o) => o,
            Err(InpaintError::StepUnderflow { .. }) => {
                stop = StopReason::StepUnderflow;
                break;
            }
            Err(e) => return Err(e),
        };

        let t = outcome.step;
        let mut err = 0.0f64;
        for &p in &pos {
            let new = u_prime[p] - t * g_prime[p];
            err = err.max((new - u_prime[p]).abs());
            u_prime[p] = new;
        }
        last_error = err;
        last_step = t;
        bracket = 2.0 * t;
    }

    let mut out = image.clone();
    for (&(i, j), &p) in domain.omega().iter().zip(&pos) {
        out.set(i, j, u_prime[p]);
    }
    Ok(Solution {
        image: out,
        trace,
        stop,
        conditions,
    })
}
