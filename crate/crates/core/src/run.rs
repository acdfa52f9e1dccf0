//! End-to-end pipelines behind the command-line modes.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use crate::bbs::{bbs_run, BbsConfig};
use crate::energy::{evaluate, GradientKind};
use crate::error::{InpaintError, Result};
use crate::flow::{harmonic_init, minimize, ConvergenceTrace, SolverConfig, StopReason, TraceRecord};
use crate::grid::{extract_domain, restrict, GrayImage, InpaintDomain, Mask, Region, BORDER_MARGIN};
use crate::io::{expand_nearest, load_image, load_mask, save_image, write_trace};
use crate::operators::build_operators;
use crate::precond::factor_preconditioner;

pub const EXIT_OK: u8 = 0;
pub const EXIT_USAGE: u8 = 1;
pub const EXIT_IO: u8 = 2;
pub const EXIT_DOMAIN: u8 = 3;
pub const EXIT_NOT_CONVERGED: u8 = 4;

/// Methods run by `compare`, in this order.
pub const COMPARE_METHODS: [Method; 4] = [Method::Bbs, Method::El, Method::H1, Method::H3];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    El,
    H1,
    H2,
    H3,
    Bbs,
    LaplaceOnly,
}

impl Method {
    pub fn gradient_kind(self) -> Option<GradientKind> {
        match self {
            Method::El => Some(GradientKind::EulerLagrange),
            Method::H1 => Some(GradientKind::Sobolev(1)),
            Method::H2 => Some(GradientKind::Sobolev(2)),
            Method::H3 => Some(GradientKind::Sobolev(3)),
            Method::Bbs | Method::LaplaceOnly => None,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::El => "el",
            Method::H1 => "h1",
            Method::H2 => "h2",
            Method::H3 => "h3",
            Method::Bbs => "bbs",
            Method::LaplaceOnly => "laplace-only",
        })
    }
}

impl FromStr for Method {
    type Err = InpaintError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "el" => Ok(Method::El),
            "h1" => Ok(Method::H1),
            "h2" => Ok(Method::H2),
            "h3" => Ok(Method::H3),
            "bbs" => Ok(Method::Bbs),
            "laplace-only" => Ok(Method::LaplaceOnly),
            other => Err(InpaintError::InvalidConfig(format!("unknown method {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Mode {
    Inpaint {
        mask: PathBuf,
        method: Method,
        output: PathBuf,
        trace: Option<PathBuf>,
    },
    Interpolate {
        factor: usize,
        method: Method,
        output: PathBuf,
        trace: Option<PathBuf>,
    },
    Compare {
        mask: PathBuf,
        out_dir: PathBuf,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSpec {
    pub input: PathBuf,
    pub mode: Mode,
    pub solver: SolverConfig,
    pub bbs: BbsConfig,
}

impl RunSpec {
    /// Sets the shared stopping rule on both solver families.
    pub fn set_tol(&mut self, tol: f64) {
        self.solver.tol = tol;
        self.bbs.tol = tol;
    }

    pub fn set_max_iters(&mut self, n: usize) {
        self.solver.max_iters = n;
        self.bbs.max_iters = n;
    }

    pub fn set_reproducible(&mut self, on: bool) {
        self.solver.reproducible = on;
        self.bbs.reproducible = on;
    }
}

#[derive(Debug, Clone)]
pub struct MethodRun {
    pub method: Method,
    pub image: GrayImage,
    pub trace: ConvergenceTrace,
    pub stop: StopReason,
}

fn init_only_trace(init: &GrayImage, domain: &InpaintDomain) -> Result<ConvergenceTrace> {
    let ops = build_operators(domain, domain.shape())?;
    let energy = evaluate(&restrict(init, domain, Region::OmegaPrime)?, &ops)?.energy;
    let mut trace = ConvergenceTrace::new();
    trace.push(TraceRecord {
        iter: 0,
        energy,
        residual2: 2.0 * energy,
        error: f64::NAN,
        step: f64::NAN,
        kappa: f64::NAN,
        wall_ms: 0.0,
    });
    Ok(trace)
}

/// Harmonic fill followed by the chosen method on the region marked by `mask`.
pub fn solve(image: &GrayImage, mask: &Mask, method: Method, solver: &SolverConfig, bbs: &BbsConfig) -> Result<MethodRun> {
    let domain = extract_domain(image, mask)?;
    let init = harmonic_init(image, &domain, solver)?;
    let outcome = match method {
        Method::LaplaceOnly => {
            return Ok(MethodRun {
                method,
                trace: init_only_trace(&init, &domain)?,
                image: init,
                stop: StopReason::Converged,
            })
        }
        Method::Bbs => bbs_run(&init, &domain, bbs),
        _ => {
            let kind = method.gradient_kind().expect("gradient method");
            let cfg = SolverConfig {
                gradient_kind: kind,
                ..solver.clone()
            };
            let ops = build_operators(&domain, domain.shape())?;
            let fact = factor_preconditioner(&domain)?;
            minimize(&init, &domain, &ops, &fact, &cfg)
        }
    };
    match outcome {
        Ok(sol) => Ok(MethodRun {
            method,
            image: sol.image,
            trace: sol.trace,
            stop: sol.stop,
        }),
        Err(InpaintError::NonFiniteEnergy { iter } | InpaintError::NonFiniteValues { iter }) => {
            log::warn!("{method} diverged at iteration {iter}; keeping the initial fill");
            Ok(MethodRun {
                method,
                trace: init_only_trace(&init, &domain)?,
                image: init,
                stop: StopReason::Diverged,
            })
        }
        Err(e) => Err(e),
    }
}

/// Copies the image into a frame `pad` pixels wider on every side, extending
/// the border values outward.
pub fn pad_edge(image: &GrayImage, pad: usize) -> GrayImage {
    let (h, w) = image.shape();
    let clampi = |a: usize, n: usize| a.saturating_sub(pad).min(n - 1);
    let mut out = GrayImage::from_fn(h + 2 * pad, w + 2 * pad, |a, b| image.get(clampi(a, h), clampi(b, w)));
    out.set_scale(image.scale());
    out
}

pub fn crop(image: &GrayImage, pad: usize, height: usize, width: usize) -> GrayImage {
    let mut out = GrayImage::from_fn(height, width, |i, j| image.get(i + pad, j + pad));
    out.set_scale(image.scale());
    out
}

/// Upscales by `factor`: anchors keep their values, the new pixels are
/// inpainted. The expanded image is framed by `BORDER_MARGIN` replicated
/// pixels so that new pixels on the last rows and columns can be solved for.
pub fn interpolate(image: &GrayImage, factor: usize, method: Method, solver: &SolverConfig, bbs: &BbsConfig) -> Result<MethodRun> {
    let (big, mask) = expand_nearest(image, factor)?;
    let (h, w) = big.shape();
    let pad = BORDER_MARGIN;
    let padded = pad_edge(&big, pad);
    let pmask = Mask::from_fn(h + 2 * pad, w + 2 * pad, |a, b| {
        (pad..pad + h).contains(&a) && (pad..pad + w).contains(&b) && mask.get(a - pad, b - pad)
    });
    let run = solve(&padded, &pmask, method, solver, bbs)?;
    Ok(MethodRun {
        image: crop(&run.image, pad, h, w),
        ..run
    })
}

fn exit_for_stop(stop: StopReason) -> u8 {
    if stop.is_converged() {
        EXIT_OK
    } else {
        EXIT_NOT_CONVERGED
    }
}

/// Exit status for an error that ended a run.
pub fn exit_code(err: &InpaintError) -> u8 {
    use InpaintError::*;
    match err {
        Io(_) | UnsupportedFormat(_) | AllZeroImage | MalformedTrace(_) => EXIT_IO,
        EmptyMask | MaskTouchesBorder { .. } | ShapeMismatch { .. } | InvalidDomain(_) | NotPositiveDefinite { .. } => {
            EXIT_DOMAIN
        }
        InvalidConfig(_) | FactorTooSmall(_) => EXIT_USAGE,
        _ => EXIT_NOT_CONVERGED,
    }
}

fn write_outputs(run: &MethodRun, output: &Path, trace: Option<&Path>) -> Result<()> {
    save_image(&run.image, output)?;
    if let Some(t) = trace {
        write_trace(&run.trace, t)?;
    }
    Ok(())
}

fn thread_cap() -> usize {
    std::env::var("INPAINT_THREADS")
        .ok()
        .and_then(|s| s.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

/// Runs `methods` on the same problem with at most `threads` workers.
/// Results come back in the order of `methods`.
pub fn run_methods(
    image: &GrayImage,
    mask: &Mask,
    methods: &[Method],
    solver: &SolverConfig,
    bbs: &BbsConfig,
    threads: usize,
) -> Vec<Result<MethodRun>> {
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<Result<MethodRun>>>> = Mutex::new((0..methods.len()).map(|_| None).collect());
    std::thread::scope(|s| {
        for _ in 0..threads.clamp(1, methods.len().max(1)) {
            s.spawn(|| loop {
                let k = next.fetch_add(1, Ordering::SeqCst);
                let Some(&method) = methods.get(k) else { break };
                let res = solve(image, mask, method, solver, bbs);
                slots.lock().expect("result lock")[k] = Some(res);
            });
        }
    });
    slots
        .into_inner()
        .expect("result lock")
        .into_iter()
        .map(|r| r.expect("every method ran"))
        .collect()
}

/// Summary rows sorted by iteration count, ties by method name.
pub fn summary_csv(runs: &[MethodRun]) -> String {
    let mut rows: Vec<&MethodRun> = runs.iter().collect();
    rows.sort_by(|a, b| {
        (a.trace.iterations(), a.method.to_string()).cmp(&(b.trace.iterations(), b.method.to_string()))
    });
    let mut s = String::from("method,iterations,stop,initial_residual2,final_residual2\n");
    for r in rows {
        s.push_str(&format!(
            "{},{},{},{:.16e},{:.16e}\n",
            r.method,
            r.trace.iterations(),
            r.stop,
            r.trace.initial_residual2().unwrap_or(f64::NAN),
            r.trace.final_residual2().unwrap_or(f64::NAN)
        ));
    }
    s
}

fn execute(spec: &RunSpec) -> Result<u8> {
    let image = load_image(&spec.input)?;
    match &spec.mode {
        Mode::Inpaint {
            mask,
            method,
            output,
            trace,
        } => {
            let mask = load_mask(mask)?;
            let run = solve(&image, &mask, *method, &spec.solver, &spec.bbs)?;
            write_outputs(&run, output, trace.as_deref())?;
            log::info!("{}: {} after {} iterations", run.method, run.stop, run.trace.iterations());
            Ok(exit_for_stop(run.stop))
        }
        Mode::Interpolate {
            factor,
            method,
            output,
            trace,
        } => {
            if !(2..=4).contains(factor) {
                return Err(InpaintError::InvalidConfig(format!("factor must be 2, 3 or 4, got {factor}")));
            }
            let run = interpolate(&image, *factor, *method, &spec.solver, &spec.bbs)?;
            write_outputs(&run, output, trace.as_deref())?;
            Ok(exit_for_stop(run.stop))
        }
        Mode::Compare { mask, out_dir } => {
            let mask = load_mask(mask)?;
            // fail on a bad mask before spawning workers
            extract_domain(&image, &mask)?;
            fs::create_dir_all(out_dir)?;
            let results = run_methods(&image, &mask, &COMPARE_METHODS, &spec.solver, &spec.bbs, thread_cap());
            let mut runs = Vec::new();
            for r in results {
                runs.push(r?);
            }
            let mut code = EXIT_OK;
            for run in &runs {
                let name = run.method.to_string();
                write_outputs(
                    run,
                    &out_dir.join(format!("{name}.png")),
                    Some(&out_dir.join(format!("{name}_trace.csv"))),
                )?;
                code = code.max(exit_for_stop(run.stop));
            }
            fs::write(out_dir.join("summary.csv"), summary_csv(&runs))?;
            Ok(code)
        }
    }
}

/// Runs a spec end to end and returns the process exit status.
pub fn run(spec: &RunSpec) -> u8 {
    match spec.solver.validate().and_then(|_| spec.bbs.validate()) {
        Ok(()) => {}
        Err(e) => {
            log::error!("{e}");
            return EXIT_USAGE;
        }
    }
    match execute(spec) {
        Ok(code) => code,
        Err(e) => {
            log::error!("{e}");
            exit_code(&e)
        }
    }
}
