use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use twobody::error::Error;
use twobody::evolve::{diagnose, EvolveConfig};
use twobody::exec::Exec;
use twobody::export::{mass_map, matrix_dump, parse_grid, write_mass_map_csv, write_snapshots_csv, write_velocity_csv, MatrixSet};
use twobody::interaction::{spectrum, SpectrumConfig};
use twobody::report::Report;
use twobody::suites::{check_poincare, parse_seed, run_suite, PoincareMode, Suite, SuiteConfig};

/// Verification suites and wavepacket evolution for the eight-component
/// two-particle wave equation.
#[derive(Parser)]
#[command(name = "twobody", version)]
struct Cli {
    /// Run every data-parallel loop on one thread.
    #[arg(long, global = true, env = "TWOBODY_SEQUENTIAL")]
    sequential: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Dump a matrix set as JSON.
    GenMatrices {
        /// gamma8, gamma16 or spin
        #[arg(long)]
        set: MatrixSet,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Poincaré closure of the raw or canonical generators, or their unitary equivalence.
    CheckPoincare {
        /// raw, canonical or equivalence
        #[arg(long, default_value = "canonical")]
        mode: PoincareMode,
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        m: Option<f64>,
    },
    /// Velocity spectra and the subluminality bound.
    Velocity {
        /// Total mass.
        #[arg(long)]
        m: Option<f64>,
        #[command(flatten)]
        common: Common,
        /// CSV with columns p1..p6, eig1..eig8 (eigenvalues of V²).
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Invariant mass directly and through K'² over a grid of |K|.
    MassMap {
        #[arg(long)]
        m1: f64,
        #[arg(long)]
        m2: f64,
        /// a:b:n
        #[arg(long)]
        k_grid: String,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Frozen-radius spectrum of the interaction Hamiltonians.
    Spectrum {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        r: f64,
        /// Six comma-separated momentum components.
        #[arg(long, allow_hyphen_values = true)]
        p: String,
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Evolve a wavepacket and diagnose the run.
    Evolve {
        /// Evolution config; the default free packet when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 51)]
        snapshots: usize,
        /// Writes PREFIXsnapshots.csv.
        #[arg(long)]
        csv_prefix: Option<String>,
        /// Diagnosis as JSON.
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Run a verification suite and write the report.
    Run {
        /// clifford, poincare, positions, velocity, kinematics, interaction, evolve or all
        #[arg(long, env = "TWOBODY_SUITE", default_value = "all")]
        suite: String,
        #[command(flatten)]
        common: Common,
        /// Directory for velocity.csv and evolve_snapshots.csv.
        #[arg(long, env = "TWOBODY_CSV_DIR")]
        csv_dir: Option<PathBuf>,
        /// Only print the summary line.
        #[arg(long, env = "TWOBODY_QUIET")]
        quiet: bool,
    },
}

#[derive(Args)]
struct Common {
    /// JSON suite config; command-line flags take precedence.
    #[arg(long, env = "TWOBODY_CONFIG")]
    config: Option<PathBuf>,
    /// Hexadecimal seed, e.g. 0x5EED.
    #[arg(long, env = "TWOBODY_SEED")]
    seed: Option<String>,
    /// Replace every residual tolerance.
    #[arg(long, env = "TWOBODY_TOL")]
    tol: Option<f64>,
    #[arg(long, env = "TWOBODY_POINTS")]
    points: Option<usize>,
    /// Report as JSON.
    #[arg(long, env = "TWOBODY_JSON")]
    json: Option<PathBuf>,
}

impl Common {
    fn config(&self) -> Result<SuiteConfig, Error> {
        let mut cfg = match &self.config {
            Some(path) => SuiteConfig::from_json(&read(path)?)?,
            None => SuiteConfig::default(),
        };
        if let Some(s) = &self.seed {
            cfg.seed = parse_seed(s)?;
        }
        if self.tol.is_some() {
            cfg.tol = self.tol;
        }
        if let Some(n) = self.points {
            cfg.points = n;
        }
        cfg.validated()
    }
}

enum Failure {
    /// Checks ran and at least one failed.
    Checks,
    Error(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Error(e)
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Error(e.into())
    }
}

fn read(path: &Path) -> Result<String, Error> {
    fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))
}

/// A file, or stdout when no path is given.
fn output(path: Option<&Path>) -> Result<Box<dyn Write>, Error> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout())),
    })
}

fn write_json<T: serde::Serialize>(path: Option<&Path>, value: &T) -> Result<(), Error> {
    let mut w = output(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn finish_report(report: &Report, json: Option<&Path>, quiet: bool) -> Result<(), Failure> {
    if let Some(path) = json {
        fs::write(path, report.to_json() + "\n")?;
    }
    let text = report.table();
    if quiet {
        println!("{}", text.lines().last().unwrap_or_default());
    } else {
        print!("{text}");
    }
    if report.pass() {
        Ok(())
    } else {
        Err(Failure::Checks)
    }
}

fn parse_momentum(s: &str) -> Result<[f64; 6], Error> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|x| x.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| Error::Config(format!("momentum '{s}' is not six comma-separated numbers")))?;
    parts
        .try_into()
        .map_err(|_| Error::Config(format!("momentum '{s}' needs exactly six components")))
}

fn run(cli: Cli) -> Result<(), Failure> {
    let exec = if cli.sequential { Exec::Sequential } else { Exec::Parallel };
    match cli.command {
        Command::GenMatrices { set, out } => write_json(out.as_deref(), &matrix_dump(set))?,
        Command::CheckPoincare { mode, common, m } => {
            let mut cfg = common.config()?;
            if let Some(m) = m {
                cfg.m = m;
            }
            let report = check_poincare(mode, &cfg, exec)?;
            finish_report(&report, common.json.as_deref(), false)?;
        }
        Command::Velocity { m, common, csv } => {
            let mut cfg = common.config()?;
            if let Some(m) = m {
                cfg.m = m;
            }
            let (report, artifacts) = run_suite(Suite::Velocity, &cfg, exec)?;
            if let Some(path) = csv {
                write_velocity_csv(File::create(path)?, &artifacts.velocity)?;
            }
            finish_report(&report, common.json.as_deref(), false)?;
        }
        Command::MassMap { m1, m2, k_grid, csv } => {
            let rows = mass_map(m1, m2, &parse_grid(&k_grid)?)?;
            write_mass_map_csv(output(csv.as_deref())?, &rows)?;
        }
        Command::Spectrum { config, r, p, json } => {
            let text = read(&config)?;
            let cfg: SpectrumConfig = serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", config.display())))?;
            write_json(json.as_deref(), &spectrum(&cfg, r, parse_momentum(&p)?)?)?;
        }
        Command::Evolve {
            config,
            snapshots,
            csv_prefix,
            json,
        } => {
            let cfg = match config {
                Some(path) => {
                    let text = read(&path)?;
                    serde_json::from_str::<EvolveConfig>(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?
                }
                None => EvolveConfig::free_packet(),
            }
            .validated()?;
            let (ev, _) = cfg.run(snapshots, exec)?;
            let d = diagnose(&ev)?;
            if let Some(prefix) = csv_prefix {
                write_snapshots_csv(File::create(format!("{prefix}snapshots.csv"))?, &ev)?;
            }
            match json {
                Some(path) => write_json(Some(&path), &d)?,
                None => {
                    println!("max norm drift    {:.3e}", d.max_norm_drift);
                    println!("max energy drift  {:.3e}", d.max_energy_drift);
                    println!("min pos fraction  {:.15}", d.min_pos_fraction);
                    for v in &d.velocities {
                        println!("axis {}: fitted velocity {:.6}, predicted {:.6}", v.axis, v.fitted, v.predicted);
                    }
                }
            }
        }
        Command::Run {
            suite,
            common,
            csv_dir,
            quiet,
        } => {
            let suite: Suite = suite.parse()?;
            let cfg = common.config()?;
            let (report, artifacts) = run_suite(suite, &cfg, exec)?;
            if let Some(dir) = csv_dir {
                fs::create_dir_all(&dir)?;
                if !artifacts.velocity.is_empty() {
                    write_velocity_csv(File::create(dir.join("velocity.csv"))?, &artifacts.velocity)?;
                }
                if let Some(ev) = &artifacts.evolution {
                    write_snapshots_csv(File::create(dir.join("evolve_snapshots.csv"))?, ev)?;
                }
            }
            finish_report(&report, common.json.as_deref(), quiet)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Checks) => ExitCode::from(1),
        Err(Failure::Error(e @ Error::NonFinite { .. })) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
        Err(Failure::Error(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
