//! Command-line front end: `locate`, `sweep` and `dump-grid`.
//!
//! Configuration is resolved in three layers: built-in defaults, then an
//! optional TOML file, then command-line flags. A sweep report can itself be
//! passed back as `--config`; its embedded manifest config is used, which
//! reproduces the run.
//!
//! Exit codes: 0 on success, 2 for configuration or input errors, 3 for I/O
//! failures.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use time::format_description::well_known::Rfc3339;
use time::OffsetDateTime;

use crate::error::Error;
use crate::experiment::{noise_stream, sweep_n, AggregateRow, ExperimentConfig};
use crate::geometry::Point3;
use crate::grid::{place_virtual_tags, PlacementMode, RoomSpec, VirtualMode};
use crate::localizer::{LocalizationResult, Localizer, MatrixMode, NoiseSpec, ReaderTrajectory};
use crate::radio::RadioParams;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_IO: i32 = 3;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Io(_) => EXIT_IO,
        }
    }

    fn io(path: &Path, e: impl std::fmt::Display) -> Self {
        CliError::Io(format!("{}: {e}", path.display()))
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Config(e.to_string())
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "rfid3d",
    version,
    about = "Mobile-reader RFID tag localization simulator"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Locate a single target tag and print the vote table.
    Locate(LocateArgs),
    /// Monte Carlo sweep over the number of virtual tags.
    Sweep(SweepArgs),
    /// Write the reference matrix layout as CSV.
    DumpGrid(DumpGridArgs),
}

#[derive(Debug, Clone, Default, Args)]
pub struct ModeArgs {
    /// TOML configuration file (or a previous sweep report).
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub matrix_mode: Option<MatrixMode>,
    #[arg(long, value_enum)]
    pub virtual_mode: Option<VirtualMode>,
    #[arg(long, value_enum)]
    pub placement: Option<PlacementMode>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Enable Gaussian noise on target readings with this standard deviation (dB).
    #[arg(long, value_name = "DB")]
    pub noise_sigma: Option<f64>,
}

#[derive(Debug, Args)]
pub struct LocateArgs {
    /// Target position as X,Y,Z in meters.
    #[arg(long, value_parser = parse_point, allow_hyphen_values = true)]
    pub target: Point3,
    /// Virtual tags per edge; defaults to the first configured n value.
    #[arg(long)]
    pub n: Option<usize>,
    #[command(flatten)]
    pub modes: ModeArgs,
    /// Write the machine-readable record (TOML) to this file.
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub modes: ModeArgs,
    /// Comma-separated list of virtual-tag counts.
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    pub n: Option<Vec<usize>>,
    #[arg(long)]
    pub trials: Option<usize>,
    /// Output directory for report.toml and summary.csv.
    #[arg(long, value_name = "DIR", default_value = "sweep-out")]
    pub out: PathBuf,
    /// Also write every trial to trials.csv.
    #[arg(long)]
    pub per_trial: bool,
}

#[derive(Debug, Args)]
pub struct DumpGridArgs {
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub n: usize,
    #[arg(long, value_enum)]
    pub placement: Option<PlacementMode>,
    /// Destination CSV; standard output when omitted.
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

fn parse_point(s: &str) -> Result<Point3, String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != 3 {
        return Err(format!("expected X,Y,Z, got `{s}`"));
    }
    let mut c = [0.0; 3];
    for (slot, part) in c.iter_mut().zip(&parts) {
        *slot = part
            .parse::<f64>()
            .map_err(|e| format!("bad coordinate `{part}`: {e}"))?;
        if !slot.is_finite() {
            return Err(format!("coordinate `{part}` is not finite"));
        }
    }
    Ok(c.into())
}

/// Every [`ExperimentConfig`] field, all optional.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub room: Option<RoomSpec>,
    pub params: Option<RadioParams>,
    pub trajectory: Option<ReaderTrajectory>,
    pub n_values: Option<Vec<usize>>,
    pub trials_per_n: Option<usize>,
    pub seed: Option<u64>,
    pub placement_mode: Option<PlacementMode>,
    pub virtual_mode: Option<VirtualMode>,
    pub matrix_mode: Option<MatrixMode>,
    pub noise: Option<NoiseSpec>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut table: toml::Table =
            toml::from_str(text).map_err(|e| CliError::Config(format!("invalid config: {e}")))?;
        // A sweep report carries its resolved config under [manifest.config].
        if let Some(toml::Value::Table(mut manifest)) = table.remove("manifest") {
            table = match manifest.remove("config") {
                Some(toml::Value::Table(config)) => config,
                _ => {
                    return Err(CliError::Config(
                        "report manifest has no config table".into(),
                    ))
                }
            };
        }
        table
            .try_into()
            .map_err(|e| CliError::Config(format!("invalid config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    pub fn apply(self, c: &mut ExperimentConfig) {
        macro_rules! take {
            ($($field:ident),*) => {$(
                if let Some(v) = self.$field {
                    c.$field = v;
                }
            )*};
        }
        take!(
            room,
            params,
            trajectory,
            n_values,
            trials_per_n,
            seed,
            placement_mode,
            virtual_mode,
            matrix_mode,
            noise
        );
    }
}

impl ModeArgs {
    fn resolve(&self) -> Result<ExperimentConfig, CliError> {
        let mut c = ExperimentConfig::default();
        if let Some(path) = &self.config {
            ConfigFile::load(path)?.apply(&mut c);
        }
        if let Some(m) = self.matrix_mode {
            c.matrix_mode = m;
        }
        if let Some(v) = self.virtual_mode {
            c.virtual_mode = v;
        }
        if let Some(p) = self.placement {
            c.placement_mode = p;
        }
        if let Some(s) = self.seed {
            c.seed = s;
        }
        if let Some(sigma) = self.noise_sigma {
            c.noise = NoiseSpec::gaussian(sigma);
        }
        Ok(c)
    }
}

fn checked(c: ExperimentConfig) -> Result<ExperimentConfig, CliError> {
    c.validate()?;
    // TOML integers are signed 64-bit.
    if i64::try_from(c.seed).is_err() {
        return Err(CliError::Config(format!(
            "seed {} exceeds {}",
            c.seed,
            i64::MAX
        )));
    }
    Ok(c)
}

/// Provenance block embedded in every report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub timestamp: String,
    pub seed: u64,
    pub matrix_mode: String,
    pub virtual_mode: String,
    pub placement_mode: String,
    pub config: ExperimentConfig,
}

impl RunManifest {
    pub fn new(config: &ExperimentConfig) -> Self {
        Self {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp: OffsetDateTime::now_utc()
                .format(&Rfc3339)
                .unwrap_or_default(),
            seed: config.seed,
            matrix_mode: config.matrix_mode.label().to_string(),
            virtual_mode: config.virtual_mode.label().to_string(),
            placement_mode: config.placement_mode.label().to_string(),
            config: config.clone(),
        }
    }
}

/// `report.toml` written by `sweep`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepDocument {
    pub manifest: RunManifest,
    pub rows: Vec<AggregateRow>,
    pub overall: AggregateRow,
}

/// Record written by `locate --out`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocateDocument {
    pub manifest: RunManifest,
    pub n: usize,
    pub result: LocalizationResult,
}

fn to_toml<T: Serialize>(value: &T) -> Result<String, CliError> {
    toml::to_string(value).map_err(|e| CliError::Config(format!("cannot serialize report: {e}")))
}

fn write_file(path: &Path, contents: &[u8]) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|e| CliError::io(path, e))
}

fn stdout_err(e: std::io::Error) -> CliError {
    CliError::Io(format!("standard output: {e}"))
}

pub fn cmd_locate(args: &LocateArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let config = checked(args.modes.resolve()?)?;
    let n = args.n.unwrap_or(config.n_values[0]);
    let target = args.target;
    if !config.room.contains_strictly(&target) {
        return Err(CliError::Config(format!(
            "target {target} must lie strictly inside the {} x {} x {} m room",
            config.room.width_m, config.room.depth_m, config.room.height_m
        )));
    }
    let grid = place_virtual_tags(&config.room, n, config.placement_mode)?;
    let localizer = Localizer::new(&grid, &config.trajectory, config.settings())?;
    let result = localizer.locate(target, &mut noise_stream(config.seed, n, 0))?;

    write_locate_summary(&config, n, &grid, &result, out).map_err(stdout_err)?;

    if let Some(path) = &args.out {
        let doc = LocateDocument {
            manifest: RunManifest::new(&config),
            n,
            result,
        };
        write_file(path, to_toml(&doc)?.as_bytes())?;
    }
    Ok(())
}

fn write_locate_summary(
    config: &ExperimentConfig,
    n: usize,
    grid: &crate::grid::ReferenceGrid,
    r: &LocalizationResult,
    out: &mut dyn Write,
) -> std::io::Result<()> {
    let kind = grid.tags()[r.estimated_tag_id].kind.label();
    writeln!(
        out,
        "grid        {} tags ({}, n = {n}), {} / {}",
        grid.len(),
        config.placement_mode.label(),
        config.virtual_mode.label(),
        config.matrix_mode.label()
    )?;
    writeln!(out, "target      {:.6}", r.true_position)?;
    writeln!(
        out,
        "estimate    {:.6}  tag {} ({kind})",
        r.estimated_position, r.estimated_tag_id
    )?;
    writeln!(out, "error       {:.6} m", r.error_m)?;
    let [dx, dy, dz] = r.per_axis_abs_error;
    writeln!(out, "per-axis    |dx| {dx:.6}  |dy| {dy:.6}  |dz| {dz:.6}")?;
    writeln!(out)?;
    writeln!(
        out,
        "{:>4}  {:<28}  {:>5}  {:>10}",
        "stop", "reader", "tag", "|dRSSI| dB"
    )?;
    for v in &r.votes {
        let reader = config.trajectory.positions()[v.reader_position_index];
        writeln!(
            out,
            "{:>4}  {:<28}  {:>5}  {:>10.6}",
            v.reader_position_index,
            format!("{reader:.3}"),
            v.matched_tag_id,
            v.rssi_diff_db
        )?;
    }
    Ok(())
}

pub fn cmd_sweep(args: &SweepArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let mut config = args.modes.resolve()?;
    if let Some(n) = &args.n {
        config.n_values = n.clone();
    }
    if let Some(t) = args.trials {
        config.trials_per_n = t;
    }
    let config = checked(config)?;
    let report = sweep_n(&config)?;

    let doc = SweepDocument {
        manifest: RunManifest::new(&config),
        rows: report.rows.clone(),
        overall: report.overall.clone(),
    };
    let toml_text = to_toml(&doc)?;

    fs::create_dir_all(&args.out).map_err(|e| CliError::io(&args.out, e))?;
    let report_path = args.out.join("report.toml");
    write_file(&report_path, toml_text.as_bytes())?;

    let summary_path = args.out.join("summary.csv");
    let mut summary = Vec::new();
    report
        .write_summary_csv(&mut summary)
        .map_err(|e| CliError::io(&summary_path, e))?;
    write_file(&summary_path, &summary)?;

    let mut written = vec![report_path, summary_path];
    if args.per_trial {
        let trials_path = args.out.join("trials.csv");
        let mut trials = Vec::new();
        report
            .write_trials_csv(&mut trials)
            .map_err(|e| CliError::io(&trials_path, e))?;
        write_file(&trials_path, &trials)?;
        written.push(trials_path);
    }

    (|| -> std::io::Result<()> {
        writeln!(
            out,
            "{} trials per n, seed {}, {} / {} / {}",
            config.trials_per_n,
            config.seed,
            config.placement_mode.label(),
            config.virtual_mode.label(),
            config.matrix_mode.label()
        )?;
        writeln!(
            out,
            "{:>3}  {:>10}  {:>8}  {:>8}  {:>8}",
            "n", "mean err", "mae x", "mae y", "mae z"
        )?;
        for r in &report.rows {
            writeln!(
                out,
                "{:>3}  {:>10.4}  {:>8.4}  {:>8.4}  {:>8.4}",
                r.n, r.mean_error_m, r.mae_x, r.mae_y, r.mae_z
            )?;
        }
        let o = &report.overall;
        writeln!(
            out,
            "all  {:>10.4}  {:>8.4}  {:>8.4}  {:>8.4}",
            o.mean_error_m, o.mae_x, o.mae_y, o.mae_z
        )?;
        for p in &written {
            writeln!(out, "wrote {}", p.display())?;
        }
        Ok(())
    })()
    .map_err(stdout_err)
}

pub fn cmd_dump_grid(args: &DumpGridArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let modes = ModeArgs {
        config: args.config.clone(),
        placement: args.placement,
        ..Default::default()
    };
    let config = checked(modes.resolve()?)?;
    let grid = place_virtual_tags(&config.room, args.n, config.placement_mode)?;
    match &args.out {
        Some(path) => {
            let mut buf = Vec::new();
            grid.write_csv(&mut buf)
                .map_err(|e| CliError::io(path, e))?;
            write_file(path, &buf)
        }
        None => grid.write_csv(out).map_err(stdout_err),
    }
}

/// Parses `args` (including the program name) and runs the command,
/// returning the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                err.write_all(text.as_bytes())
            } else {
                out.write_all(text.as_bytes())
            };
            return code;
        }
    };
    let outcome = match &cli.command {
        Command::Locate(a) => cmd_locate(a, out),
        Command::Sweep(a) => cmd_sweep(a, out),
        Command::DumpGrid(a) => cmd_dump_grid(a, out),
    };
    match outcome {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}
