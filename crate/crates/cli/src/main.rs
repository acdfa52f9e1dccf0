use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use inpaint_core::bbs::{BbsConfig, Limiter};
use inpaint_core::diagnostics::KappaFormula;
use inpaint_core::flow::{LineSearchMethod, SolverConfig};
use inpaint_core::run::{run, Method, Mode, RunSpec, EXIT_USAGE};

#[derive(Parser)]
#[command(name = "sobinpaint", version, about = "Navier-Stokes inpainting by Sobolev gradient descent")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fill the nonzero pixels of a mask.
    Inpaint {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        mask: PathBuf,
        #[arg(long, default_value = "h1", value_parser = parse_method)]
        method: Method,
        #[arg(long)]
        output: PathBuf,
        #[arg(long)]
        trace: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Upscale by an integer factor, inpainting the new pixels.
    Interpolate {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_parser = clap::value_parser!(u8).range(2..=4))]
        factor: u8,
        #[arg(long, default_value = "h1", value_parser = parse_method)]
        method: Method,
        #[arg(long)]
        output: PathBuf,
        #[arg(long)]
        trace: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Run bbs, el, h1 and h3 on one problem and summarize.
    Compare {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        mask: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args)]
struct Common {
    /// Stop when the largest pixel change of an update is below this.
    #[arg(long, default_value_t = 1e-4)]
    tol: f64,
    #[arg(long, default_value_t = 20_000)]
    max_iters: usize,
    /// Write zero wall times so repeated runs give identical traces.
    #[arg(long)]
    reproducible: bool,
    #[arg(long, default_value = "rooted", value_parser = parse_kappa)]
    kappa_formula: KappaFormula,
    #[arg(long, default_value = "quartic", value_parser = parse_line_search)]
    line_search: LineSearchMethod,
    #[arg(long, default_value_t = 1.8)]
    sor_omega: f64,
    #[arg(long, default_value_t = 1e-12)]
    sor_tol: f64,
    /// Fixed BBS time step; by default it follows the CFL rule.
    #[arg(long)]
    bbs_dt: Option<f64>,
    #[arg(long, default_value_t = 0.1)]
    bbs_cfl: f64,
    #[arg(long, default_value = "minmod-upwind", value_parser = parse_limiter)]
    limiter: Limiter,
    #[arg(long, default_value_t = 50)]
    diffusion_every: usize,
    #[arg(long, default_value_t = 5)]
    diffusion_steps: usize,
    #[arg(long, default_value_t = 0.1)]
    pm_k: f64,
    #[arg(long, default_value_t = 0.2)]
    pm_dt: f64,
    /// Diffusion passes applied before BBS starts.
    #[arg(long, default_value_t = 0)]
    init_diffusion: usize,
    #[arg(long, default_value_t = 500)]
    log_every: usize,
}

fn parse_method(s: &str) -> Result<Method, String> {
    s.parse().map_err(|e: inpaint_core::InpaintError| e.to_string())
}

fn parse_kappa(s: &str) -> Result<KappaFormula, String> {
    s.parse().map_err(|e: inpaint_core::InpaintError| e.to_string())
}

fn parse_limiter(s: &str) -> Result<Limiter, String> {
    s.parse().map_err(|e: inpaint_core::InpaintError| e.to_string())
}

fn parse_line_search(s: &str) -> Result<LineSearchMethod, String> {
    match s {
        "quartic" => Ok(LineSearchMethod::QuarticFit),
        "golden" => Ok(LineSearchMethod::GoldenSection),
        "backtracking" => Ok(LineSearchMethod::Backtracking),
        other => Err(format!("unknown line search {other:?}; expected quartic, golden or backtracking")),
    }
}

impl Common {
    fn spec(&self, input: PathBuf, mode: Mode) -> RunSpec {
        let mut solver = SolverConfig {
            kappa_formula: self.kappa_formula,
            sor_omega: self.sor_omega,
            sor_tol: self.sor_tol,
            log_every: self.log_every,
            ..SolverConfig::default()
        };
        solver.line_search.method = self.line_search;
        let bbs = BbsConfig {
            dt: self.bbs_dt,
            cfl: self.bbs_cfl,
            limiter: self.limiter,
            diffusion_every: self.diffusion_every,
            diffusion_steps: self.diffusion_steps,
            pm_k: self.pm_k,
            pm_dt: self.pm_dt,
            init_diffusion_passes: self.init_diffusion,
            log_every: self.log_every,
            ..BbsConfig::default()
        };
        let mut spec = RunSpec {
            input,
            mode,
            solver,
            bbs,
        };
        spec.set_tol(self.tol);
        spec.set_max_iters(self.max_iters);
        spec.set_reproducible(self.reproducible);
        spec
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let spec = match cli.command {
        Command::Inpaint {
            input,
            mask,
            method,
            output,
            trace,
            common,
        } => common.spec(
            input,
            Mode::Inpaint {
                mask,
                method,
                output,
                trace,
            },
        ),
        Command::Interpolate {
            input,
            factor,
            method,
            output,
            trace,
            common,
        } => common.spec(
            input,
            Mode::Interpolate {
                factor: factor as usize,
                method,
                output,
                trace,
            },
        ),
        Command::Compare {
            input,
            mask,
            out_dir,
            common,
        } => common.spec(input, Mode::Compare { mask, out_dir }),
    };
    ExitCode::from(run(&spec))
}
