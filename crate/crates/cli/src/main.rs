//! `magloop`: experiment runner for the loop-space magnetic geodesic solver.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use magloop::{ChartPoint64, FlowState64};

use magloop_cli::commands::{self, ShootRequest};
use magloop_cli::CliError;

#[derive(Parser)]
#[command(
    name = "magloop",
    version,
    about = "Minimax search for periodic magnetic geodesics on 2-D charts"
)]
struct Cli {
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Log progress to stderr (RUST_LOG overrides).
    #[arg(short, long, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a continuation experiment from a JSON config.
    ///
    /// Writes result.json, summary.txt and step_<n>.csv. Exit codes: 0
    /// converged or diverging, 1 runtime/IO failure, 2 config error,
    /// 3 inconclusive, 4 no negative-action loop.
    Run {
        /// Experiment config (JSON).
        #[arg(long, short)]
        config: PathBuf,
        /// Output directory (overrides the config's output_dir).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// One cutoff-free minimax run at fixed (eps, tau).
    Mpass {
        /// Experiment config (JSON); geometry, E, discretization and solver are used.
        #[arg(long, short)]
        config: PathBuf,
        /// Regularization eps (default: the config's eps0).
        #[arg(long)]
        eps: Option<f64>,
        /// Exponent perturbation tau (default: the config's tau0).
        #[arg(long)]
        tau: Option<f64>,
        /// Directory for mpass.json and argmax.csv.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Integrate the Lorentz flow from one initial state.
    Flow {
        #[command(flatten)]
        geometry: GeometryArgs,
        /// Initial x.
        #[arg(long, default_value_t = 0.0)]
        x: f64,
        /// Initial y.
        #[arg(long, default_value_t = 0.0)]
        y: f64,
        /// Chart speed |v|.
        #[arg(long, default_value_t = 1.0)]
        speed: f64,
        /// Direction of v, radians from the x axis.
        #[arg(long, default_value_t = 0.0)]
        angle: f64,
        /// Integration time.
        #[arg(long = "T")]
        t_end: f64,
        /// RK4 steps (default: step size about 1e-3).
        #[arg(long)]
        steps: Option<usize>,
        /// Trajectory CSV (t,x,y,vx,vy,energy).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare analytic gradients with central differences on random loops.
    Gradcheck {
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long, default_value_t = 50)]
        loops: usize,
        /// Finite-difference step.
        #[arg(long, default_value_t = 1e-6)]
        h: f64,
        /// Largest accepted relative L2 error.
        #[arg(long, default_value_t = 1e-5)]
        tol: f64,
    },
    /// Independent reference solutions.
    #[command(subcommand)]
    Oracle(OracleCommand),
}

#[derive(Subcommand)]
enum OracleCommand {
    /// Closed-form Larmor radius and mountain-pass level on the plane.
    Larmor {
        #[arg(long = "E")]
        energy: f64,
        #[arg(long = "B")]
        b: f64,
    },
    /// Periodic orbits by shooting, each re-checked as an S_E extremal at 2E.
    Shoot {
        #[command(flatten)]
        geometry: GeometryArgs,
        /// Mechanical energy ½g(v,v) of the orbits.
        #[arg(long = "E")]
        energy: f64,
        /// Seed positions per axis.
        #[arg(long, default_value_t = 4)]
        grid: usize,
        /// Seed directions per position.
        #[arg(long, default_value_t = 4)]
        directions: usize,
        /// Longest period followed.
        #[arg(long, default_value_t = 2.0)]
        period_cap: f64,
        /// Closure tolerance.
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        /// Vertices of the loops built from orbits.
        #[arg(long, default_value_t = 256)]
        n: usize,
        /// Directory for orbits.json and orbit_<i>.csv.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct GeometryArgs {
    /// plane, flat-torus-sine or conformal-torus.
    #[arg(long, default_value = "plane")]
    kind: String,
    /// Field strength (plane).
    #[arg(long = "B", default_value_t = 1.0)]
    b: f64,
    /// Potential amplitude (torus kinds).
    #[arg(long, default_value_t = 0.0)]
    a: f64,
    /// Wavenumber (torus kinds).
    #[arg(long, default_value_t = 1)]
    k: u32,
    /// Conformal factor amplitude.
    #[arg(long, default_value_t = 0.0)]
    u_amp: f64,
}

impl GeometryArgs {
    fn spec(&self) -> Result<magloop::GeometrySpec64, CliError> {
        commands::geometry_from_flags(&self.kind, self.b, self.a, self.k, self.u_amp)
    }
}

fn dispatch(command: Command) -> Result<i32, CliError> {
    match command {
        Command::Run { config, out } => commands::run(&config, out.as_deref()),
        Command::Mpass {
            config,
            eps,
            tau,
            out,
        } => commands::mpass(&config, eps, tau, out.as_deref()),
        Command::Flow {
            geometry,
            x,
            y,
            speed,
            angle,
            t_end,
            steps,
            out,
        } => {
            let spec = geometry.spec()?;
            let s0 = FlowState64::new(
                ChartPoint64::new(x, y),
                ChartPoint64::new(angle.cos(), angle.sin()) * speed,
            );
            let steps = steps.unwrap_or_else(|| (t_end / 1e-3).ceil().max(1.0) as usize);
            commands::flow(&spec, s0, t_end, steps, out.as_deref())
        }
        Command::Gradcheck {
            seed,
            loops,
            h,
            tol,
        } => commands::gradcheck(seed, loops, h, tol),
        Command::Oracle(OracleCommand::Larmor { energy, b }) => commands::larmor(energy, b),
        Command::Oracle(OracleCommand::Shoot {
            geometry,
            energy,
            grid,
            directions,
            period_cap,
            tol,
            n,
            out,
        }) => {
            let spec = geometry.spec()?;
            let req = ShootRequest {
                energy,
                grid,
                directions,
                period_cap,
                tol,
                n_vertices: n,
            };
            commands::shoot(&spec, &req, out.as_deref())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.verbose { "info" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            eprintln!("error: cannot configure {n} threads: {e}");
            return ExitCode::from(1);
        }
    }
    match dispatch(cli.command) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
