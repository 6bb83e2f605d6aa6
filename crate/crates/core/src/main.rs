use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use serde_json::{Map, Value};

use ddsim::checks::{run_check, CHECK_IDS};
use ddsim::config::{file_layer, resolve};
use ddsim::report::run_sweep;
use ddsim::sequence::{build, Protocol};

/// Worker threads for the ensemble fan-out; results do not depend on it.
const THREADS_ENV: &str = "DDSIM_THREADS";

#[derive(Parser)]
#[command(name = "ddsim", version, about = "Dynamical decoupling with systematic pulse errors")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sweep the total time and write F_x, F_y, F_z as CSV.
    Simulate(SimulateArgs),
    /// Run the validation checks and print a pass/fail table.
    Validate {
        /// Only run these check ids (0-11).
        #[arg(long, value_delimiter = ',')]
        only: Vec<u32>,
    },
    /// Print the event list of one sequence.
    ExportSequence {
        #[arg(long)]
        protocol: Protocol,
        #[arg(long)]
        level: u32,
        /// Total evolution time.
        #[arg(long)]
        t: f64,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

#[derive(Args)]
struct SimulateArgs {
    /// JSON config file, or a metadata sidecar from an earlier run.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Named parameter set: si-p, perfect.
    #[arg(long)]
    preset: Option<String>,
    /// udd, qdd, qdd-zy.
    #[arg(long)]
    protocol: Option<String>,
    #[arg(long)]
    level: Option<u32>,
    #[arg(long, allow_hyphen_values = true)]
    t_start: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    t_max: Option<f64>,
    /// Grid points after the leading t = 0.
    #[arg(long)]
    points: Option<usize>,
    /// linear or log-with-zero.
    #[arg(long)]
    spacing: Option<String>,
    /// Width of the static field distribution.
    #[arg(long, allow_hyphen_values = true)]
    b: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    eps0: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    n0: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    mx: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    ny: Option<f64>,
    /// quadrature or monte_carlo.
    #[arg(long)]
    method: Option<String>,
    #[arg(long)]
    nodes_b: Option<usize>,
    #[arg(long)]
    nodes_eps: Option<usize>,
    #[arg(long)]
    nodes_nz: Option<usize>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// independent or correlated_spatial.
    #[arg(long)]
    error_mode: Option<String>,
    /// x_then_y or y_then_x.
    #[arg(long)]
    z_order: Option<String>,
    /// CSV path; the sidecar goes to <output>.meta.json. Stdout when absent.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

impl SimulateArgs {
    fn flag_layer(&self) -> Map<String, Value> {
        let mut m = Map::new();
        let mut put = |key: &str, v: Option<Value>| {
            if let Some(v) = v {
                m.insert(key.to_string(), v);
            }
        };
        put("preset", self.preset.clone().map(Value::from));
        put("protocol", self.protocol.clone().map(Value::from));
        put("level", self.level.map(Value::from));
        put("t_start", self.t_start.map(Value::from));
        put("t_max", self.t_max.map(Value::from));
        put("points", self.points.map(Value::from));
        put("spacing", self.spacing.clone().map(Value::from));
        put("b", self.b.map(Value::from));
        put("eps0", self.eps0.map(Value::from));
        put("n0", self.n0.map(Value::from));
        put("mx", self.mx.map(Value::from));
        put("ny", self.ny.map(Value::from));
        put("method", self.method.clone().map(Value::from));
        put("nodes_b", self.nodes_b.map(Value::from));
        put("nodes_eps", self.nodes_eps.map(Value::from));
        put("nodes_nz", self.nodes_nz.map(Value::from));
        put("samples", self.samples.map(Value::from));
        put("seed", self.seed.map(Value::from));
        put("error_mode", self.error_mode.clone().map(Value::from));
        put("z_order", self.z_order.clone().map(Value::from));
        put("output", self.output.as_ref().map(|p| Value::from(p.display().to_string())));
        m
    }
}

fn configure_threads() -> anyhow::Result<()> {
    if let Ok(raw) = std::env::var(THREADS_ENV) {
        let n: usize = raw
            .parse()
            .with_context(|| format!("{THREADS_ENV} must be a positive integer, got `{raw}`"))?;
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

fn simulate(args: &SimulateArgs) -> anyhow::Result<()> {
    let file = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
            Some(file_layer(&text)?)
        }
        None => None,
    };
    let config = resolve(file, args.flag_layer())?;
    let (curve, sidecar) = run_sweep(&config)?;
    match &config.output {
        Some(out) => eprintln!(
            "wrote {} rows to {} ({}-{}, {} pulses)",
            curve.rows.len(),
            out.display(),
            sidecar.metadata.protocol,
            sidecar.metadata.level,
            sidecar.metadata.pulse_count
        ),
        None => print!("{}", curve.to_csv()),
    }
    Ok(())
}

fn validate(only: &[u32]) -> anyhow::Result<bool> {
    let ids: Vec<u32> = if only.is_empty() { CHECK_IDS.to_vec() } else { only.to_vec() };
    let mut failures = Vec::new();
    for id in ids {
        let check = run_check(id)?;
        println!("{}", check.summary());
        for row in &check.rows {
            println!("    {row}");
            if !row.pass {
                failures.push(format!("[{id}] {}", row.name));
            }
        }
    }
    if failures.is_empty() {
        println!("all checks passed");
    } else {
        println!("{} failed:", failures.len());
        for f in &failures {
            println!("  {f}");
        }
    }
    Ok(failures.is_empty())
}

fn run() -> anyhow::Result<bool> {
    configure_threads()?;
    match Cli::parse().command {
        Command::Simulate(args) => simulate(&args).map(|_| true),
        Command::Validate { only } => validate(&only),
        Command::ExportSequence {
            protocol,
            level,
            t,
            output,
        } => {
            if !(t >= 0.0 && t.is_finite()) {
                bail!("invalid value for `t`: must be finite and non-negative");
            }
            let text = build(protocol, level, t)?.to_text();
            match output {
                Some(path) => fs::write(&path, text).with_context(|| format!("cannot write {}", path.display()))?,
                None => print!("{text}"),
            }
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
