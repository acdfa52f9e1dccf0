//! Explicit time stepping of `I_t = ∇⊥I · ∇ΔI` with periodic Perona-Malik
//! diffusion, the reference scheme the minimizers are compared against.

use std::fmt;
use std::str::FromStr;

use crate::energy::evaluate;
use crate::error::{InpaintError, Result};
use crate::flow::{Clock, ConvergenceTrace, Solution, StopReason, TraceRecord};
use crate::grid::{restrict, GrayImage, InpaintDomain, Region};
use crate::operators::build_operators;

/// Discretization of the convection term.
/// Explicit Euler with central differences amplifies every Fourier mode of
/// the dispersive term and is kept for reference only.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Limiter {
    Central,
    #[default]
    /// One-sided differences of ΔI, limited by minmod against the central
    /// difference. The side is picked so the step damps `I`: for
    /// `I_t = v ∂ΔI` with `v > 0` the backward difference.
    MinmodUpwind,
}

impl fmt::Display for Limiter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Limiter::Central => "central",
            Limiter::MinmodUpwind => "minmod-upwind",
        })
    }
}

impl FromStr for Limiter {
    type Err = InpaintError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "central" => Ok(Limiter::Central),
            "minmod-upwind" => Ok(Limiter::MinmodUpwind),
            other => Err(InpaintError::InvalidConfig(format!("unknown limiter {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BbsConfig {
    /// Fixed time step; `None` recomputes `cfl / (4 max|∇I| + tiny)` every step.
    pub dt: Option<f64>,
    pub cfl: f64,
    pub diffusion_every: usize,
    pub diffusion_steps: usize,
    pub pm_k: f64,
    pub pm_dt: f64,
    pub limiter: Limiter,
    /// Diffusion passes applied before the first step.
    pub init_diffusion_passes: usize,
    pub max_iters: usize,
    pub tol: f64,
    pub energy_floor: f64,
    pub reproducible: bool,
    pub log_every: usize,
}

impl Default for BbsConfig {
    fn default() -> Self {
        Self {
            dt: None,
            cfl: 0.1,
            diffusion_every: 50,
            diffusion_steps: 5,
            pm_k: 0.1,
            pm_dt: 0.2,
            limiter: Limiter::MinmodUpwind,
            init_diffusion_passes: 0,
            max_iters: 20_000,
            tol: 1e-4,
            energy_floor: 1e-20,
            reproducible: false,
            log_every: 500,
        }
    }
}

impl BbsConfig {
    pub fn validate(&self) -> Result<()> {
        if let Some(dt) = self.dt {
            if !(dt > 0.0) {
                return Err(InpaintError::InvalidConfig(format!("dt must be positive, got {dt}")));
            }
        }
        if !(self.cfl > 0.0) {
            return Err(InpaintError::InvalidConfig("cfl must be positive".into()));
        }
        if self.diffusion_every == 0 {
            return Err(InpaintError::InvalidConfig("diffusion_every must be at least 1".into()));
        }
        if !(self.pm_k > 0.0) || !(self.pm_dt > 0.0) {
            return Err(InpaintError::InvalidConfig("pm_k and pm_dt must be positive".into()));
        }
        if !(self.tol > 0.0) {
            return Err(InpaintError::InvalidConfig("tol must be positive".into()));
        }
        Ok(())
    }
}

/// Edge-stopping conductivity `exp(-s / k)`.
pub fn conductivity(grad_norm: f64, k: f64) -> f64 {
    (-grad_norm / k).exp()
}

fn lap(img: &GrayImage, i: usize, j: usize) -> f64 {
    img.get(i + 1, j) + img.get(i - 1, j) + img.get(i, j + 1) + img.get(i, j - 1) - 4.0 * img.get(i, j)
}

fn minmod(a: f64, b: f64) -> f64 {
    if a * b <= 0.0 {
        0.0
    } else if a.abs() < b.abs() {
        a
    } else {
        b
    }
}

/// Limited derivative of ΔI along one axis for the term `v ∂ΔI`.
fn limited(v: f64, back: f64, centre: f64, fwd: f64) -> f64 {
    let central = 0.5 * (fwd - back);
    let upwind = if v > 0.0 { centre - back } else { fwd - centre };
    minmod(upwind, central)
}

/// `∇⊥I · ∇ΔI` at every Ω pixel, in Ω order.
pub fn transport_rate(image: &GrayImage, domain: &InpaintDomain, limiter: Limiter) -> Vec<f64> {
    domain
        .omega()
        .iter()
        .map(|&(i, j)| {
            let d1 = 0.5 * (image.get(i + 1, j) - image.get(i - 1, j));
            let d2 = 0.5 * (image.get(i, j + 1) - image.get(i, j - 1));
            // ∇⊥I = (-D2 I, D1 I)
            let (a, b) = (-d2, d1);
            let (l1, l2) = match limiter {
                Limiter::Central => (
                    0.5 * (lap(image, i + 1, j) - lap(image, i - 1, j)),
                    0.5 * (lap(image, i, j + 1) - lap(image, i, j - 1)),
                ),
                Limiter::MinmodUpwind => {
                    let c = lap(image, i, j);
                    (
                        limited(a, lap(image, i - 1, j), c, lap(image, i + 1, j)),
                        limited(b, lap(image, i, j - 1), c, lap(image, i, j + 1)),
                    )
                }
            };
            a * l1 + b * l2
        })
        .collect()
}

/// `cfl / (4 max_Ω |∇I| + tiny)` with central differences.
pub fn cfl_dt(image: &GrayImage, domain: &InpaintDomain, cfl: f64) -> f64 {
    let g = domain.omega().iter().fold(0.0f64, |m, &(i, j)| {
        let d1 = 0.5 * (image.get(i + 1, j) - image.get(i - 1, j));
        let d2 = 0.5 * (image.get(i, j + 1) - image.get(i, j - 1));
        m.max(d1.hypot(d2))
    });
    cfl / (4.0 * g + 1e-12)
}

fn check_shape(image: &GrayImage, domain: &InpaintDomain) -> Result<()> {
    if image.shape() != domain.shape() {
        return Err(InpaintError::ShapeMismatch {
            expected: domain.shape(),
            found: image.shape(),
        });
    }
    Ok(())
}

/// One explicit step `I <- I + dt ∇⊥I·∇ΔI` on Ω with step `dt`.
pub fn bbs_step_with(image: &GrayImage, domain: &InpaintDomain, limiter: Limiter, dt: f64) -> Result<GrayImage> {
    check_shape(image, domain)?;
    let rate = transport_rate(image, domain, limiter);
    let mut out = image.clone();
    for (&(i, j), r) in domain.omega().iter().zip(rate) {
        let v = image.get(i, j) + dt * r;
        if !v.is_finite() {
            return Err(InpaintError::NonFiniteValues { iter: 0 });
        }
        out.set(i, j, v);
    }
    Ok(out)
}

/// One step with the configured or CFL time step.
pub fn bbs_step(image: &GrayImage, domain: &InpaintDomain, cfg: &BbsConfig) -> Result<GrayImage> {
    cfg.validate()?;
    let dt = cfg.dt.unwrap_or_else(|| cfl_dt(image, domain, cfg.cfl));
    bbs_step_with(image, domain, cfg.limiter, dt)
}

/// `cfg.diffusion_steps` Jacobi steps of `I_t = ∇·(c ∇I)` on Ω, conductivity
/// evaluated per edge from the intensity jump across it.
pub fn perona_malik_pass(image: &GrayImage, domain: &InpaintDomain, cfg: &BbsConfig) -> Result<GrayImage> {
    cfg.validate()?;
    check_shape(image, domain)?;
    let mut cur = image.clone();
    for _ in 0..cfg.diffusion_steps {
        let prev = cur.clone();
        for &(i, j) in domain.omega() {
            let p = prev.get(i, j);
            let flux: f64 = [(i - 1, j), (i + 1, j), (i, j - 1), (i, j + 1)]
                .iter()
                .map(|&(a, b)| {
                    let d = prev.get(a, b) - p;
                    conductivity(d.abs(), cfg.pm_k) * d
                })
                .sum();
            let v = p + cfg.pm_dt * flux;
            if !v.is_finite() {
                return Err(InpaintError::NonFiniteValues { iter: 0 });
            }
            cur.set(i, j, v);
        }
    }
    Ok(cur)
}

/// Evolves an initialized image until the largest pixel change of a step is
/// below `cfg.tol`. The trace records `E = ½‖F‖²` of every iterate.
pub fn bbs_run(image: &GrayImage, domain: &InpaintDomain, cfg: &BbsConfig) -> Result<Solution> {
    cfg.validate()?;
    check_shape(image, domain)?;
    let ops = build_operators(domain, domain.shape())?;
    let clock = Clock::new(cfg.reproducible);
    let mut cur = image.clone();
    for _ in 0..cfg.init_diffusion_passes {
        cur = perona_malik_pass(&cur, domain, cfg)?;
    }

    let mut trace = ConvergenceTrace::new();
    let mut last_error = f64::NAN;
    let mut last_step = f64::NAN;
    let mut stop = StopReason::MaxIters;
    for iter in 0..=cfg.max_iters {
        let up = restrict(&cur, domain, Region::OmegaPrime)?;
        let energy = evaluate(&up, &ops)?.energy;
        if !energy.is_finite() {
            return Err(InpaintError::NonFiniteEnergy { iter });
        }
        trace.push(TraceRecord {
            iter,
            energy,
            residual2: 2.0 * energy,
            error: last_error,
            step: last_step,
            kappa: f64::NAN,
            wall_ms: clock.ms(),
        });
        if cfg.log_every > 0 && iter % cfg.log_every == 0 {
            log::info!("bbs iter {iter}: energy {energy:.6e} error {last_error:.3e}");
        }
        if (iter > 0 && last_error < cfg.tol) || energy <= cfg.energy_floor {
            stop = StopReason::Converged;
            break;
        }
        if iter == cfg.max_iters {
            break;
        }

        let dt = cfg.dt.unwrap_or_else(|| cfl_dt(&cur, domain, cfg.cfl));
        let mut next = bbs_step_with(&cur, domain, cfg.limiter, dt).map_err(|e| match e {
            InpaintError::NonFiniteValues { .. } => InpaintError::NonFiniteValues { iter: iter + 1 },
            e => e,
        })?;
        if (iter + 1) % cfg.diffusion_every == 0 {
            next = perona_malik_pass(&next, domain, cfg)?;
        }
        last_error = domain
            .omega()
            .iter()
            .fold(0.0f64, |m, &(i, j)| m.max((next.get(i, j) - cur.get(i, j)).abs()));
        last_step = dt;
        cur = next;
    }
    Ok(Solution {
        image: cur,
        trace,
        stop,
        conditions: Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy::residual;
    use crate::fixtures;
    use crate::grid::{extract_domain, Mask};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_case(seed: u64, n: usize) -> (GrayImage, InpaintDomain) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let img = GrayImage::from_fn(n, n, |_, _| rng.gen::<f64>());
        let mask = Mask::from_fn(n, n, |i, j| (4..n - 4).contains(&i) && (4..n - 5).contains(&j) && (i + j) % 7 != 0);
        let d = extract_domain(&img, &mask).unwrap();
        (img, d)
    }

    #[test]
    fn linear_and_constant_images_do_not_move() {
        let (img, mask) = fixtures::ramp(16, 6);
        let lin = GrayImage::from_fn(16, 16, |i, j| 0.1 + 0.8 * (i + 2 * j) as f64 / 45.0);
        let d = extract_domain(&img, &mask).unwrap();
        for limiter in [Limiter::Central, Limiter::MinmodUpwind] {
            let cfg = BbsConfig { limiter, ..Default::default() };
            let out = bbs_step(&lin, &d, &cfg).unwrap();
            for &(i, j) in d.omega() {
                assert!((out.get(i, j) - lin.get(i, j)).abs() < 1e-15);
            }
            let c = GrayImage::filled(16, 16, 0.4);
            assert_eq!(bbs_step(&c, &d, &cfg).unwrap(), c);
        }
    }

    #[test]
    fn central_step_matches_stencil_oracle() {
        let (img, d) = random_case(5, 16);
        let dt = 0.01;
        let out = bbs_step_with(&img, &d, Limiter::Central, dt).unwrap();
        let u = |i: usize, j: usize| img.get(i, j);
        for &(i, j) in d.omega() {
            let l = |a: usize, b: usize| u(a + 1, b) + u(a - 1, b) + u(a, b + 1) + u(a, b - 1) - 4.0 * u(a, b);
            let ix = (u(i + 1, j) - u(i - 1, j)) / 2.0;
            let iy = (u(i, j + 1) - u(i, j - 1)) / 2.0;
            let lx = (l(i + 1, j) - l(i - 1, j)) / 2.0;
            let ly = (l(i, j + 1) - l(i, j - 1)) / 2.0;
            let want = u(i, j) + dt * (-iy * lx + ix * ly);
            assert!((out.get(i, j) - want).abs() < 1e-14);
        }
    }

    #[test]
    fn central_rate_is_minus_the_residual() {
        let (img, d) = random_case(8, 18);
        let ops = build_operators(&d, d.shape()).unwrap();
        let f = residual(&restrict(&img, &d, Region::OmegaPrime).unwrap(), &ops).unwrap();
        let rate = transport_rate(&img, &d, Limiter::Central);
        for (r, f) in rate.iter().zip(&f) {
            assert!((r + f).abs() < 1e-13);
        }
    }

    #[test]
    fn minmod_agrees_with_central_on_smooth_monotone_data() {
        // cubic: ΔI is linear, so one-sided and central slopes coincide
        let img = GrayImage::from_fn(14, 14, |i, j| {
            let (x, y) = (i as f64, j as f64);
            0.0005 * x * x * x + 0.0003 * y * y * y + 0.01 * y + 0.002 * x * y
        });
        let d = extract_domain(&img, &fixtures::centered_hole(14, 6)).unwrap();
        let a = transport_rate(&img, &d, Limiter::Central);
        let b = transport_rate(&img, &d, Limiter::MinmodUpwind);
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-14);
        }
        assert_eq!(minmod(1.0, -2.0), 0.0);
        assert_eq!(minmod(-1.0, -2.0), -1.0);
        assert_eq!(minmod(3.0, 2.0), 2.0);
    }

    #[test]
    fn conductivity_values() {
        assert_eq!(conductivity(0.0, 0.1), 1.0);
        let c = conductivity(1.0, 0.1);
        assert!((c - 4.539_992_976_248_485e-5).abs() < 1e-18);
        assert!(c > 0.0 && c <= 1.0);
    }

    #[test]
    fn diffusion_change_equals_boundary_flux() {
        let (img, d) = random_case(13, 16);
        let cfg = BbsConfig {
            diffusion_steps: 1,
            ..Default::default()
        };
        let out = perona_malik_pass(&img, &d, &cfg).unwrap();
        let change: f64 = d.omega().iter().map(|&(i, j)| out.get(i, j) - img.get(i, j)).sum();
        // interior edges cancel; only edges leaving Ω contribute
        let mut flux = 0.0;
        for &(i, j) in d.omega() {
            for (a, b) in [(i - 1, j), (i + 1, j), (i, j - 1), (i, j + 1)] {
                if !d.contains(a, b) {
                    let diff = img.get(a, b) - img.get(i, j);
                    flux += cfg.pm_dt * conductivity(diff.abs(), cfg.pm_k) * diff;
                }
            }
        }
        assert!((change - flux).abs() < 1e-12);
    }

    #[test]
    fn diffusion_obeys_maximum_principle() {
        let (img, d) = random_case(17, 16);
        let cfg = BbsConfig {
            diffusion_steps: 20,
            pm_dt: 0.25,
            ..Default::default()
        };
        let out = perona_malik_pass(&img, &d, &cfg).unwrap();
        let (lo, hi) = d.omega_prime().iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &(i, j)| {
            (lo.min(img.get(i, j)), hi.max(img.get(i, j)))
        });
        for &(i, j) in d.omega() {
            assert!(out.get(i, j) >= lo - 1e-15 && out.get(i, j) <= hi + 1e-15);
        }
        let c = GrayImage::filled(16, 16, 0.3);
        assert_eq!(perona_malik_pass(&c, &d, &cfg).unwrap(), c);
    }

    #[test]
    fn zero_residual_converges_immediately() {
        let (img, mask) = fixtures::ramp(20, 8);
        let lin = GrayImage::from_fn(20, 20, |i, j| if mask.get(i, j) { 0.5 } else { img.get(i, j) });
        let d = extract_domain(&lin, &mask).unwrap();
        let filled = crate::flow::sor_fill(&lin, &d, 1.8, 1e-13, 100_000).unwrap();
        let sol = bbs_run(&filled, &d, &BbsConfig::default()).unwrap();
        assert_eq!(sol.stop, StopReason::Converged);
        assert_eq!(sol.trace.iterations(), 0);
    }

    #[test]
    fn default_scheme_converges_where_central_at_full_cfl_does_not() {
        let (img, mask) = fixtures::stripe(32, 8);
        let d = extract_domain(&img, &mask).unwrap();
        let init = crate::flow::sor_fill(&img, &d, 1.8, 1e-10, 10_000).unwrap();
        let sol = bbs_run(&init, &d, &BbsConfig { log_every: 0, ..Default::default() }).unwrap();
        assert_eq!(sol.stop, StopReason::Converged);
        let r = &sol.trace.records;
        assert!(r.last().unwrap().energy < 1e-2 * r[0].energy);
        let central = BbsConfig {
            limiter: Limiter::Central,
            cfl: 0.9,
            max_iters: 3000,
            log_every: 0,
            ..Default::default()
        };
        match bbs_run(&init, &d, &central) {
            Ok(s) => assert!(!s.stop.is_converged()),
            Err(e) => assert!(matches!(e, InpaintError::NonFiniteEnergy { .. } | InpaintError::NonFiniteValues { .. })),
        }
    }

    #[test]
    fn run_leaves_outside_untouched() {
        let (img, mask) = fixtures::stripe(32, 8);
        let d = extract_domain(&img, &mask).unwrap();
        let init = crate::flow::sor_fill(&img, &d, 1.8, 1e-10, 10_000).unwrap();
        let cfg = BbsConfig {
            max_iters: 120,
            init_diffusion_passes: 1,
            ..Default::default()
        };
        let sol = bbs_run(&init, &d, &cfg).unwrap();
        assert_eq!(sol.trace.records.len(), 121);
        for i in 0..32 {
            for j in 0..32 {
                if !d.contains(i, j) {
                    assert_eq!(sol.image.get(i, j).to_bits(), init.get(i, j).to_bits());
                }
            }
        }
        assert!(BbsConfig { diffusion_every: 0, ..Default::default() }.validate().is_err());
    }
}
