//! Command-line front end: simulation runs, verification suites, exact
//! probes, and plot-data emission.
//!
//! Every stochastic subcommand requires an explicit seed (there is no
//! wall-clock default), echoes its fully resolved configuration into a
//! manifest, and can be reproduced exactly from that manifest. Configuration
//! precedence is flags > config file > defaults; the config file is a flat
//! `key = value` document. The output directory may also be set through the
//! `SMALLBLOCKS_OUT` environment variable (flags still win).

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use smallblocks_core::crp::{self, CrpParams, TrackerConfig};
use smallblocks_core::intensity::{self, ConeWindow};
use smallblocks_core::limit;
use smallblocks_core::oracle::{self, TupleFamily};
use smallblocks_core::rng::derive_rng;
use smallblocks_core::verify::{run_suite, suite_passes, Suite, SuiteConfig};
use smallblocks_core::BlockAtom;

const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Parser)]
#[command(name = "smallblocks", version, about = "Chinese restaurant process simulation and limit-law verification")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run seeded CRP trajectories; emit block atoms as CSV, observables as
    /// JSON lines, and a manifest echoing the full configuration.
    Simulate(SimulateArgs),
    /// Run a verification suite and write its reports; exits nonzero if any
    /// check fails.
    Verify(VerifyArgs),
    /// Print both exact oracle values for a block-history family as JSON.
    Probe(ProbeArgs),
    /// Print the intensity mass of a cone window (and optionally the
    /// consistency diff against a lifted copy) as JSON.
    Mass(MassArgs),
    /// Sample the limiting Poisson measure on a window; emit atoms as CSV.
    SampleLimit(SampleLimitArgs),
    /// Print closed-form limit-law values (CDFs, pgf, survival) as JSON.
    Law(LawArgs),
    /// Emit plot-ready CSV data for the limit objects.
    Plotdata(PlotdataArgs),
}

#[derive(Args, Clone, Serialize, Deserialize)]
struct CommonIo {
    /// Flat key = value config file; flags override its entries.
    #[arg(long)]
    #[serde(skip)]
    config: Option<PathBuf>,
    /// Output directory (also settable via SMALLBLOCKS_OUT).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Clone, Serialize, Deserialize)]
struct SimulateArgs {
    #[command(flatten)]
    io: CommonIo,
    /// Re-run the exact configuration recorded in a manifest file.
    #[arg(long, conflicts_with_all = ["theta", "n", "seed", "replicates"])]
    #[serde(skip)]
    manifest: Option<PathBuf>,
    #[arg(long)]
    theta: Option<f64>,
    /// Trajectory length (number of inserted elements).
    #[arg(long)]
    n: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    replicates: Option<u64>,
    /// Track block atoms up to this size.
    #[arg(long)]
    n_max: Option<u32>,
    #[arg(long)]
    track_atoms: Option<bool>,
    #[arg(long)]
    track_first_singleton: Option<bool>,
    /// Comma-separated snapshot steps for block counts.
    #[arg(long, value_delimiter = ',')]
    snapshot_steps: Option<Vec<u64>>,
}

#[derive(Args, Clone)]
struct VerifyArgs {
    /// Suite name: oracle, ewens, theorem1, counts, fpc, minpoint,
    /// shortlived, qprocess, or lemma2.
    suite: String,
    #[command(flatten)]
    io: CommonIo,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    theta: Option<f64>,
    #[arg(long)]
    n: Option<u64>,
    #[arg(long, alias = "reps")]
    replicates: Option<u64>,
    #[arg(long)]
    threshold: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    families: Option<u64>,
    #[arg(long)]
    horizon_multiple: Option<f64>,
}

#[derive(Args, Clone)]
struct ProbeArgs {
    #[arg(long)]
    theta: f64,
    /// Tuple family: tuples separated by ';', entries by ',' — the last
    /// entry of each tuple is the step m, e.g. "3,7,11,19;6,12,21,24".
    #[arg(long)]
    tuples: String,
}

#[derive(Args, Clone)]
struct MassArgs {
    #[arg(long)]
    theta: f64,
    /// Window as JSON: {"x_bounds":[[0.2,1.0]],"y_bounds":[1.0,2.0]}
    /// (an upper bound of 1e300 or larger is read as unbounded).
    #[arg(long)]
    window: String,
    /// Also lift the window to this dimension and report the mass diff.
    #[arg(long)]
    lift: Option<usize>,
}

#[derive(Args, Clone, Serialize, Deserialize)]
struct SampleLimitArgs {
    #[command(flatten)]
    io: CommonIo,
    #[arg(long)]
    theta: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    replicates: Option<u64>,
    /// Window as JSON, as in `mass`.
    #[arg(long)]
    window: Option<String>,
}

#[derive(Args, Clone)]
struct LawArgs {
    #[command(subcommand)]
    law: LawKind,
}

#[derive(Subcommand, Clone)]
enum LawKind {
    /// Pareto marginal CDF of the short-lived lifetime at given points.
    Pareto {
        #[arg(long)]
        theta: f64,
        #[arg(long)]
        delta: f64,
        #[arg(long, value_delimiter = ',')]
        t: Vec<f64>,
    },
    /// Joint pgf of the singleton counts on a time grid.
    Pgf {
        #[arg(long)]
        theta: f64,
        #[arg(long, value_delimiter = ',')]
        grid: Vec<f64>,
        #[arg(long, value_delimiter = ',')]
        z: Vec<f64>,
    },
    /// Joint survival of the leftmost-singleton path on a time grid.
    Survival {
        #[arg(long)]
        theta: f64,
        #[arg(long, value_delimiter = ',')]
        grid: Vec<f64>,
        #[arg(long, value_delimiter = ',')]
        x: Vec<f64>,
    },
    /// Poisson rates for joint block counts at times 1 and alpha.
    Rates {
        #[arg(long)]
        theta: f64,
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        n: u64,
    },
}

#[derive(Args, Clone)]
struct PlotdataArgs {
    #[command(subcommand)]
    kind: PlotKind,
}

#[derive(Subcommand, Clone)]
enum PlotKind {
    /// Atoms of the limit measure with the leftmost-singleton path.
    L {
        #[arg(long)]
        theta: f64,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 0.05)]
        tmin: f64,
        #[arg(long)]
        tmax: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Singleton-count path on a grid.
    X1 {
        #[arg(long)]
        theta: f64,
        #[arg(long)]
        seed: u64,
        #[arg(long, value_delimiter = ',')]
        grid: Vec<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// The grid boxes between consecutive times with per-box atom counts.
    Tij {
        #[arg(long)]
        theta: f64,
        #[arg(long)]
        seed: u64,
        #[arg(long, value_delimiter = ',')]
        grid: Vec<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

type AnyError = Box<dyn std::error::Error>;

fn run(cli: Cli) -> Result<ExitCode, AnyError> {
    match cli.command {
        Command::Simulate(args) => cmd_simulate(args),
        Command::Verify(args) => cmd_verify(args),
        Command::Probe(args) => cmd_probe(args),
        Command::Mass(args) => cmd_mass(args),
        Command::SampleLimit(args) => cmd_sample_limit(args),
        Command::Law(args) => cmd_law(args),
        Command::Plotdata(args) => cmd_plotdata(args),
    }
}

// --- configuration plumbing -----------------------------------------------

/// Flat `key = value` config file; '#' starts a comment.
fn read_kv_file(path: &Path) -> Result<BTreeMap<String, String>, AnyError> {
    let text = fs::read_to_string(path)
        .map_err(|e| format!("cannot read config file {}: {e}", path.display()))?;
    let mut map = BTreeMap::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap().trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| format!("{}:{}: expected key = value", path.display(), lineno + 1))?;
        map.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(map)
}

fn from_file<T: FromStr>(file: &BTreeMap<String, String>, key: &str) -> Result<Option<T>, AnyError>
where
    T::Err: std::fmt::Display,
{
    match file.get(key) {
        None => Ok(None),
        Some(raw) => raw
            .parse::<T>()
            .map(Some)
            .map_err(|e| format!("config key '{key}': {e}").into()),
    }
}

/// flags > config file > default
fn resolve<T: FromStr + Clone>(
    flag: &Option<T>,
    file: &BTreeMap<String, String>,
    key: &str,
    default: Option<T>,
) -> Result<T, AnyError>
where
    T::Err: std::fmt::Display,
{
    if let Some(v) = flag {
        return Ok(v.clone());
    }
    if let Some(v) = from_file::<T>(file, key)? {
        return Ok(v);
    }
    default.ok_or_else(|| format!("missing required parameter '{key}' (no default)").into())
}

fn out_dir(flag: &Option<PathBuf>) -> PathBuf {
    flag.clone()
        .or_else(|| std::env::var_os("SMALLBLOCKS_OUT").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), AnyError> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).map_err(|e| format!("cannot write {}: {e}", path.display()))?;
    Ok(())
}

#[derive(Serialize, Deserialize)]
struct Manifest<T> {
    version: String,
    command: String,
    config: T,
}

// --- simulate --------------------------------------------------------------

#[derive(Clone, Serialize, Deserialize)]
struct SimulateConfig {
    theta: f64,
    n: u64,
    seed: u64,
    replicates: u64,
    n_max: u32,
    track_atoms: bool,
    track_first_singleton: bool,
    snapshot_steps: Vec<u64>,
}

fn cmd_simulate(args: SimulateArgs) -> Result<ExitCode, AnyError> {
    let config = if let Some(manifest_path) = &args.manifest {
        let manifest: Manifest<SimulateConfig> =
            serde_json::from_str(&fs::read_to_string(manifest_path)?)?;
        if manifest.command != "simulate" {
            return Err(format!("manifest records command '{}'", manifest.command).into());
        }
        manifest.config
    } else {
        let file = match &args.io.config {
            Some(p) => read_kv_file(p)?,
            None => BTreeMap::new(),
        };
        SimulateConfig {
            theta: resolve(&args.theta, &file, "theta", Some(1.0))?,
            n: resolve(&args.n, &file, "n", None)?,
            seed: resolve(&args.seed, &file, "seed", None)?,
            replicates: resolve(&args.replicates, &file, "replicates", Some(1))?,
            n_max: resolve(&args.n_max, &file, "n_max", Some(2))?,
            track_atoms: resolve(&args.track_atoms, &file, "track_atoms", Some(true))?,
            track_first_singleton: resolve(
                &args.track_first_singleton,
                &file,
                "track_first_singleton",
                Some(false),
            )?,
            snapshot_steps: match &args.snapshot_steps {
                Some(v) => v.clone(),
                None => from_file::<String>(&file, "snapshot_steps")?
                    .map(|s| {
                        s.split(',')
                            .map(|x| x.trim().parse::<u64>())
                            .collect::<Result<Vec<_>, _>>()
                    })
                    .transpose()?
                    .unwrap_or_default(),
            },
        }
    };

    let params = CrpParams::new(config.theta, config.seed, config.n)?;
    let trackers = TrackerConfig {
        n_max: config.n_max,
        snapshot_steps: config.snapshot_steps.clone(),
        track_atoms: config.track_atoms,
        track_first_singleton: config.track_first_singleton,
    };

    let dir = out_dir(&args.io.out);
    fs::create_dir_all(&dir)?;
    let mut atoms = csv::Writer::from_path(dir.join("atoms.csv"))?;
    let mut header = vec!["replicate".to_string(), "N".to_string()];
    header.extend((1..=config.n_max).map(|i| format!("k{i}")));
    header.push("m".to_string());
    atoms.write_record(&header)?;
    let mut observables = fs::File::create(dir.join("observables.jsonl"))?;

    for rep in 0..config.replicates {
        let mut rng = derive_rng(config.seed, &[0, rep]);
        let obs = crp::run_with_rng(&params, &trackers, &mut rng)?;
        for n in 1..=config.n_max {
            for atom in obs.atoms(n) {
                let mut record = vec![rep.to_string(), n.to_string()];
                record.extend(atom.k.iter().map(|k| k.to_string()));
                record.extend(std::iter::repeat(String::new()).take((config.n_max - n) as usize));
                record.push(atom.m.to_string());
                atoms.write_record(&record)?;
            }
        }
        serde_json::to_writer(&mut observables, &obs)?;
        observables.write_all(b"\n")?;
    }
    atoms.flush()?;
    observables.flush()?;

    write_json(
        &dir.join("manifest.json"),
        &Manifest { version: VERSION.to_string(), command: "simulate".to_string(), config },
    )?;
    Ok(ExitCode::SUCCESS)
}

// --- verify ----------------------------------------------------------------

fn cmd_verify(args: VerifyArgs) -> Result<ExitCode, AnyError> {
    let suite: Suite = args.suite.parse()?;
    let file = match &args.io.config {
        Some(p) => read_kv_file(p)?,
        None => BTreeMap::new(),
    };
    let d = SuiteConfig::default();
    let config = SuiteConfig {
        seed: resolve(&args.seed, &file, "seed", None)?,
        theta: resolve(&args.theta, &file, "theta", Some(d.theta))?,
        n: resolve(&args.n, &file, "n", Some(d.n))?,
        replicates: resolve(&args.replicates, &file, "replicates", Some(d.replicates))?,
        threshold: resolve(&args.threshold, &file, "threshold", Some(d.threshold))?,
        delta: resolve(&args.delta, &file, "delta", Some(d.delta))?,
        alpha: resolve(&args.alpha, &file, "alpha", Some(d.alpha))?,
        families: resolve(&args.families, &file, "families", Some(d.families))?,
        horizon_multiple: resolve(
            &args.horizon_multiple,
            &file,
            "horizon_multiple",
            Some(d.horizon_multiple),
        )?,
        ..d
    };

    let reports = run_suite(suite, &config)?;
    for r in &reports {
        println!(
            "{}: {} (statistic {:.6e}, p {:.4}, n {})",
            r.test,
            if r.pass { "pass" } else { "FAIL" },
            r.statistic,
            r.p_value,
            r.sample_size
        );
    }
    let pass = suite_passes(&reports);
    println!(
        "suite {}: {} ({} checks)",
        suite.name(),
        if pass { "PASS" } else { "FAIL" },
        reports.len()
    );

    let dir = out_dir(&args.io.out);
    fs::create_dir_all(&dir)?;
    write_json(&dir.join(format!("report-{}.json", suite.name())), &reports)?;
    write_json(
        &dir.join(format!("manifest-{}.json", suite.name())),
        &Manifest { version: VERSION.to_string(), command: format!("verify {}", suite.name()), config },
    )?;
    Ok(if pass { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}

// --- probe -----------------------------------------------------------------

fn cmd_probe(args: ProbeArgs) -> Result<ExitCode, AnyError> {
    let mut tuples = Vec::new();
    for part in args.tuples.split(';') {
        let values: Vec<u64> = part
            .split(',')
            .map(|v| v.trim().parse::<u64>())
            .collect::<Result<_, _>>()
            .map_err(|e| format!("bad tuple '{part}': {e}"))?;
        if values.len() < 2 {
            return Err(format!("tuple '{part}' needs at least two entries").into());
        }
        tuples.push(BlockAtom {
            k: values[..values.len() - 1].to_vec(),
            m: values[values.len() - 1],
        });
    }
    let family = TupleFamily::new(tuples, args.theta)?;
    let joint = oracle::joint_probability(&family)?;
    let stepwise = oracle::stepwise_probability(&family)?;
    #[derive(Serialize)]
    struct Out {
        theta: f64,
        joint: f64,
        joint_ln: f64,
        stepwise: f64,
        stepwise_ln: f64,
        relative_error: f64,
    }
    println!(
        "{}",
        serde_json::to_string_pretty(&Out {
            theta: args.theta,
            joint: joint.value,
            joint_ln: joint.ln_value,
            stepwise: stepwise.value,
            stepwise_ln: stepwise.ln_value,
            relative_error: joint.relative_error(&stepwise),
        })?
    );
    Ok(ExitCode::SUCCESS)
}

// --- mass ------------------------------------------------------------------

fn parse_window(raw: &str) -> Result<ConeWindow, AnyError> {
    // JSON has no infinity literal: upper bounds >= 1e300 mean unbounded
    let unbound = |(l, u): (f64, f64)| (l, if u >= 1e300 { f64::INFINITY } else { u });
    let w: ConeWindow = serde_json::from_str(raw).map_err(|e| format!("bad window JSON: {e}"))?;
    let x_bounds: Vec<_> = w.x_bounds.into_iter().map(unbound).collect();
    Ok(ConeWindow::new(x_bounds, unbound(w.y_bounds))?)
}

fn cmd_mass(args: MassArgs) -> Result<ExitCode, AnyError> {
    let window = parse_window(&args.window)?;
    let mass = intensity::mass(&window, args.theta)?;
    #[derive(Serialize)]
    struct Out {
        mass: f64,
        lifted_mass: Option<f64>,
        consistency_diff: Option<f64>,
    }
    let mut out = Out { mass, lifted_mass: None, consistency_diff: None };
    if let Some(m) = args.lift {
        let (_, lifted, diff) = intensity::consistency_check(&window, m, args.theta)?;
        out.lifted_mass = Some(lifted);
        out.consistency_diff = Some(diff);
    }
    println!("{}", serde_json::to_string_pretty(&out)?);
    Ok(ExitCode::SUCCESS)
}

// --- sample-limit ----------------------------------------------------------

#[derive(Clone, Serialize, Deserialize)]
struct SampleLimitConfig {
    theta: f64,
    seed: u64,
    replicates: u64,
    window: ConeWindow,
}

fn cmd_sample_limit(args: SampleLimitArgs) -> Result<ExitCode, AnyError> {
    let file = match &args.io.config {
        Some(p) => read_kv_file(p)?,
        None => BTreeMap::new(),
    };
    let window_raw: String = resolve(&args.window, &file, "window", None)?;
    let config = SampleLimitConfig {
        theta: resolve(&args.theta, &file, "theta", Some(1.0))?,
        seed: resolve(&args.seed, &file, "seed", None)?,
        replicates: resolve(&args.replicates, &file, "replicates", Some(1))?,
        window: parse_window(&window_raw)?,
    };

    let dir = out_dir(&args.io.out);
    fs::create_dir_all(&dir)?;
    let mut writer = csv::Writer::from_path(dir.join("limit-atoms.csv"))?;
    let mut header = vec!["replicate".to_string()];
    header.extend((1..=config.window.n()).map(|i| format!("x{i}")));
    header.push("y".to_string());
    writer.write_record(&header)?;
    for rep in 0..config.replicates {
        let mut rng = derive_rng(config.seed, &[1, rep]);
        let sample = limit::sample_xi(&config.window, config.theta, &mut rng)?;
        for atom in &sample.atoms {
            let mut record = vec![rep.to_string()];
            record.extend(atom.iter().map(|v| format!("{v}")));
            writer.write_record(&record)?;
        }
    }
    writer.flush()?;
    write_json(
        &dir.join("manifest.json"),
        &Manifest { version: VERSION.to_string(), command: "sample-limit".to_string(), config },
    )?;
    Ok(ExitCode::SUCCESS)
}

// --- law -------------------------------------------------------------------

fn cmd_law(args: LawArgs) -> Result<ExitCode, AnyError> {
    let json = match args.law {
        LawKind::Pareto { theta, delta, t } => {
            let values: Vec<(f64, f64)> =
                t.iter().map(|&t| (t, limit::pareto_cdf(t, delta, theta))).collect();
            serde_json::json!({ "law": "pareto-cdf", "theta": theta, "delta": delta, "values": values })
        }
        LawKind::Pgf { theta, grid, z } => {
            if grid.len() != z.len() {
                return Err("grid and z must have equal length".into());
            }
            let value = limit::fpc_pgf(theta, &grid, &z);
            serde_json::json!({ "law": "pgf", "theta": theta, "grid": grid, "z": z, "value": value })
        }
        LawKind::Survival { theta, grid, x } => {
            if grid.len() != x.len() {
                return Err("grid and x must have equal length".into());
            }
            let value = limit::l_survival(theta, &grid, &x);
            serde_json::json!({ "law": "survival", "theta": theta, "grid": grid, "x": x, "value": value })
        }
        LawKind::Rates { theta, alpha, n } => {
            let c = intensity::PropCountsConstants::new(theta, alpha, n);
            serde_json::to_value(&c)?
        }
    };
    println!("{}", serde_json::to_string_pretty(&json)?);
    Ok(ExitCode::SUCCESS)
}

// --- plotdata --------------------------------------------------------------

fn cmd_plotdata(args: PlotdataArgs) -> Result<ExitCode, AnyError> {
    match args.kind {
        PlotKind::L { theta, seed, tmin, tmax, out } => {
            if !(0.0 < tmin && tmin < tmax) {
                return Err("need 0 < tmin < tmax".into());
            }
            let dir = out_dir(&out);
            fs::create_dir_all(&dir)?;
            let window = limit::path_window(tmin, tmax);
            let mut rng = derive_rng(seed, &[2]);
            let sample = limit::sample_xi(&window, theta, &mut rng)?;
            let mut atoms = csv::Writer::from_path(dir.join("atoms.csv"))?;
            atoms.write_record(["x", "y"])?;
            for a in &sample.atoms {
                atoms.write_record([format!("{}", a[0]), format!("{}", a[1])])?;
            }
            atoms.flush()?;
            // evaluate the path on a grid dense enough to show every step
            let grid: Vec<f64> = (0..=800)
                .map(|i| tmin + (tmax - tmin) * i as f64 / 800.0)
                .collect();
            let values = limit::path_l(&sample.atoms, &grid);
            let mut path = csv::Writer::from_path(dir.join("path.csv"))?;
            path.write_record(["t", "L"])?;
            for (t, v) in grid.iter().zip(&values) {
                path.write_record([format!("{t}"), format!("{v}")])?;
            }
            path.flush()?;
        }
        PlotKind::X1 { theta, seed, grid, out } => {
            if grid.is_empty() || grid[0] <= 0.0 || grid.windows(2).any(|w| w[0] >= w[1]) {
                return Err("grid must be positive and increasing".into());
            }
            let dir = out_dir(&out);
            fs::create_dir_all(&dir)?;
            let window = limit::path_window(grid[0], *grid.last().unwrap());
            let mut rng = derive_rng(seed, &[3]);
            let sample = limit::sample_xi(&window, theta, &mut rng)?;
            let values = limit::path_x1(&sample.atoms, &grid);
            let mut path = csv::Writer::from_path(dir.join("x1.csv"))?;
            path.write_record(["t", "X1"])?;
            for (t, v) in grid.iter().zip(&values) {
                path.write_record([format!("{t}"), format!("{v}")])?;
            }
            path.flush()?;
        }
        PlotKind::Tij { theta, seed, grid, out } => {
            if grid.len() < 2 || grid[0] <= 0.0 || grid.windows(2).any(|w| w[0] >= w[1]) {
                return Err("grid must be positive, increasing, length >= 2".into());
            }
            let dir = out_dir(&out);
            fs::create_dir_all(&dir)?;
            let window = limit::path_window(grid[0], *grid.last().unwrap());
            let mut rng = derive_rng(seed, &[4]);
            let sample = limit::sample_xi(&window, theta, &mut rng)?;
            let counts = limit::t_ij_counts(&sample.atoms, &grid);
            let rates = limit::lambda_prime(theta, &grid);
            let r = grid.len();
            let mut boxes = csv::Writer::from_path(dir.join("tij.csv"))?;
            boxes.write_record(["i", "j", "x_lo", "x_hi", "y_lo", "y_hi", "rate", "count"])?;
            for i in 0..r {
                for j in i..r {
                    let x_lo = if i == 0 { 0.0 } else { grid[i - 1] };
                    let y_hi = if j + 1 < r { grid[j + 1].to_string() } else { "inf".to_string() };
                    boxes.write_record([
                        (i + 1).to_string(),
                        (j + 1).to_string(),
                        x_lo.to_string(),
                        grid[i].to_string(),
                        grid[j].to_string(),
                        y_hi,
                        rates[i][j].to_string(),
                        counts[i][j].to_string(),
                    ])?;
                }
            }
            boxes.flush()?;
        }
    }
    Ok(ExitCode::SUCCESS)
}
