//! `cglpulse`: run pulse-interaction experiments from a TOML configuration.

mod config;
mod output;
mod pipeline;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};
use config::{parse_override, ConfigInvalid, DynMode, Level};
use serde::Serialize;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "cglpulse", version, about = "Weak pulse interaction experiments for the planar quintic CGLE")]
struct Cli {
    /// Worker threads for parameter sweeps (default: available cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// TOML run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override a configuration key, e.g. `--set ps.m=200`; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    sets: Vec<String>,
    /// Output directory (overrides output.dir).
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Args, Clone)]
struct OutFile {
    /// Path of the primary output file (default: inside the output directory).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the steady pulse and its neutral modes; writes the pulse archive.
    Pulse {
        /// Optional action word; `solve` is the only one.
        #[arg(value_parser = ["solve"])]
        action: Option<String>,
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        out: OutFile,
    },
    /// Write the radial profiles of the neutral modes.
    Modes {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        out: OutFile,
    },
    /// Fit the interaction constants from a pulse archive.
    FitConstants {
        /// Pulse archive to fit (solved from the configuration when absent).
        #[arg(long)]
        archive: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        out: OutFile,
    },
    /// Compare direct inner products with the interaction law over a range of d.
    KernelTable {
        #[arg(long)]
        dmin: Option<f64>,
        #[arg(long)]
        dmax: Option<f64>,
        #[arg(long)]
        steps: Option<usize>,
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        out: OutFile,
    },
    /// Closed orbits of the reduced two-pulse system.
    PhasePlane {
        #[arg(long)]
        cells: Option<usize>,
        #[arg(long)]
        orbits: Option<usize>,
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        out: OutFile,
    },
    /// Two in-line pulses from (r̄₀, ḡ₀).
    TwoPulse {
        #[arg(long)]
        rbar0: Option<f64>,
        #[arg(long)]
        gbar0: Option<f64>,
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
        #[arg(long)]
        t_end: Option<f64>,
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        out: OutFile,
    },
    /// First-return map r̄₀ ↦ r̄(T) at ḡ = π/2.
    ReturnMap {
        #[arg(long)]
        rmin: Option<f64>,
        #[arg(long)]
        rmax: Option<f64>,
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        out: OutFile,
    },
    /// Corrected N-pulse run with remainder snapshots.
    PsRun {
        /// Comma-separated snapshot times.
        #[arg(long, value_delimiter = ',')]
        snapshots: Option<Vec<f64>>,
        #[arg(long)]
        t_end: Option<f64>,
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        out: OutFile,
    },
    /// Symmetric relative equilibria and their stability.
    FixedPoints {
        #[arg(long = "N")]
        n: Option<usize>,
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
        /// Search the lined-up family instead of the regular geometry.
        #[arg(long)]
        lined_up: bool,
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        out: OutFile,
    },
    /// Classify a grid of symmetric starts.
    Basin {
        #[arg(long = "N")]
        n: Option<usize>,
        #[arg(long, allow_hyphen_values = true)]
        g_offset: Option<f64>,
        /// nx,ny
        #[arg(long, value_delimiter = ',')]
        grid: Option<Vec<usize>>,
        /// xmin,xmax,ymin,ymax of r₁ − r_N.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        window: Option<Vec<f64>>,
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
        #[arg(long)]
        t_end: Option<f64>,
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        out: OutFile,
    },
    /// Two mirror-image triads over a grid of separations and headings.
    Coherent {
        /// first,last,count of the separation S.
        #[arg(long = "S-range", value_delimiter = ',')]
        s_range: Option<Vec<f64>>,
        /// first,last,count of the heading θ₁.
        #[arg(long = "theta-range", value_delimiter = ',')]
        theta_range: Option<Vec<f64>>,
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        out: OutFile,
    },
    /// Check a configuration and list every problem.
    Validate {
        #[command(flatten)]
        common: Common,
        /// Print diagnostics as JSON.
        #[arg(long)]
        json: bool,
    },
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum ModeArg {
    Pos,
    Ps,
}

impl From<ModeArg> for DynMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Pos => DynMode::Pos,
            ModeArg::Ps => DynMode::Ps,
        }
    }
}

/// Overrides accumulated from subcommand flags.
struct Sets {
    kind: &'static str,
    items: Vec<(String, toml::Value)>,
}

impl Sets {
    fn new(kind: &'static str) -> Self {
        Sets { kind, items: Vec::new() }
    }

    fn put<T: Serialize>(&mut self, field: &str, value: Option<T>) -> Result<()> {
        if let Some(v) = value {
            self.items.push((format!("experiment.{}.{field}", self.kind), toml::Value::try_from(v)?));
        }
        Ok(())
    }
}

fn range3(v: Option<Vec<f64>>, flag: &str) -> Result<Option<(f64, f64, usize)>> {
    match v {
        None => Ok(None),
        Some(v) if v.len() == 3 && v[2] >= 1.0 && v[2].fract() == 0.0 => Ok(Some((v[0], v[1], v[2] as usize))),
        Some(_) => Err(ConfigInvalid(format!("{flag} expects first,last,count")).into()),
    }
}

fn execute(cli: Cli) -> Result<ExitCode> {
    if let Some(n) = cli.workers {
        rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global()?;
    }
    let (common, out, sets) = match cli.command {
        Command::Validate { common, json } => return validate(common, json),
        Command::Pulse { common, out, .. } => (common, out, Sets::new("pulse")),
        Command::Modes { common, out } => (common, out, Sets::new("modes")),
        Command::FitConstants { archive, common, out } => {
            let mut s = Sets::new("fit-constants");
            s.put("archive", archive.map(|p| p.display().to_string()))?;
            (common, out, s)
        }
        Command::KernelTable { dmin, dmax, steps, common, out } => {
            let mut s = Sets::new("kernel-table");
            s.put("dmin", dmin)?;
            s.put("dmax", dmax)?;
            s.put("steps", steps)?;
            (common, out, s)
        }
        Command::PhasePlane { cells, orbits, common, out } => {
            let mut s = Sets::new("phase-plane");
            s.put("cells", cells)?;
            s.put("orbits", orbits)?;
            (common, out, s)
        }
        Command::TwoPulse { rbar0, gbar0, mode, t_end, common, out } => {
            let mut s = Sets::new("two-pulse");
            s.put("rbar0", rbar0)?;
            s.put("gbar0", gbar0)?;
            s.put("mode", mode.map(DynMode::from))?;
            s.put("t_end", t_end)?;
            (common, out, s)
        }
        Command::ReturnMap { rmin, rmax, steps, mode, common, out } => {
            let mut s = Sets::new("return-map");
            s.put("rmin", rmin)?;
            s.put("rmax", rmax)?;
            s.put("steps", steps)?;
            s.put("mode", mode.map(DynMode::from))?;
            (common, out, s)
        }
        Command::PsRun { snapshots, t_end, common, out } => {
            let mut s = Sets::new("ps-run");
            s.put("snapshots", snapshots)?;
            s.put("t_end", t_end)?;
            (common, out, s)
        }
        Command::FixedPoints { n, mode, lined_up, common, out } => {
            let mut s = Sets::new("fixed-points");
            s.put("n", n)?;
            s.put("mode", mode.map(DynMode::from))?;
            s.put("lined_up", lined_up.then_some(true))?;
            (common, out, s)
        }
        Command::Basin { n, g_offset, grid, window, mode, t_end, common, out } => {
            let mut s = Sets::new("basin");
            if grid.as_ref().is_some_and(|g| g.len() != 2) {
                return Err(ConfigInvalid("--grid expects nx,ny".into()).into());
            }
            if window.as_ref().is_some_and(|w| w.len() != 4) {
                return Err(ConfigInvalid("--window expects xmin,xmax,ymin,ymax".into()).into());
            }
            s.put("n", n)?;
            s.put("g_offset", g_offset)?;
            s.put("grid", grid)?;
            s.put("window", window)?;
            s.put("mode", mode.map(DynMode::from))?;
            s.put("t_end", t_end)?;
            (common, out, s)
        }
        Command::Coherent { s_range, theta_range, common, out } => {
            let mut s = Sets::new("coherent");
            s.put("s_range", range3(s_range, "--S-range")?)?;
            s.put("theta_range", range3(theta_range, "--theta-range")?)?;
            (common, out, s)
        }
    };
    let cfg = load(&common, sets.items, Some(sets.kind))?;
    let manifest = pipeline::run(&cfg, out.out.as_deref())?;
    for o in &manifest.outputs {
        println!("{}", o.path.display());
    }
    println!("{}", cfg.output.dir.join(output::MANIFEST).display());
    Ok(ExitCode::SUCCESS)
}

fn load(common: &Common, mut extra: Vec<(String, toml::Value)>, kind: Option<&str>) -> Result<config::RunConfig> {
    let mut overrides = Vec::new();
    for s in &common.sets {
        overrides.push(parse_override(s)?);
    }
    overrides.append(&mut extra);
    if let Some(dir) = &common.out_dir {
        overrides.push(("output.dir".into(), toml::Value::String(dir.display().to_string())));
    }
    config::load(common.config.as_deref(), &overrides, kind)
}

fn validate(common: Common, json: bool) -> Result<ExitCode> {
    let cfg = load(&common, Vec::new(), None)?;
    let diags = config::validate(&cfg);
    if json {
        println!("{}", serde_json::to_string_pretty(&diags)?);
    } else if diags.is_empty() {
        println!("config ok");
    } else {
        for d in &diags {
            let level = match d.level {
                Level::Error => "error",
                Level::Warning => "warning",
            };
            println!("{level}: {}: {}", d.key, d.message);
        }
    }
    Ok(if diags.iter().any(|d| d.level == Level::Error) { ExitCode::from(2) } else { ExitCode::SUCCESS })
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<ConfigInvalid>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}
