//! Seeded Monte Carlo sweeps over the number of virtual tags.
//!
//! Every trial draws from its own ChaCha stream keyed by the sweep seed and
//! the trial coordinates, so the outcome of a trial does not depend on which
//! thread runs it or in what order. Target positions are keyed by
//! `(seed, trial)` only, which pairs trial `i` across all values of `n`;
//! measurement noise is keyed by `(seed, n, trial)`.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Point3;
use crate::grid::{place_virtual_tags, PlacementMode, RoomSpec, VirtualMode};
use crate::localizer::{LocalizeSettings, Localizer, MatrixMode, NoiseSpec, ReaderTrajectory};
use crate::numfmt::sig6;
use crate::radio::RadioParams;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub room: RoomSpec,
    pub params: RadioParams,
    pub trajectory: ReaderTrajectory,
    pub n_values: Vec<usize>,
    pub trials_per_n: usize,
    pub seed: u64,
    pub placement_mode: PlacementMode,
    pub virtual_mode: VirtualMode,
    pub matrix_mode: MatrixMode,
    pub noise: NoiseSpec,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            room: RoomSpec::default(),
            params: RadioParams::default(),
            trajectory: ReaderTrajectory::default(),
            n_values: (0..=8).collect(),
            trials_per_n: 1000,
            seed: 0,
            placement_mode: PlacementMode::default(),
            virtual_mode: VirtualMode::default(),
            matrix_mode: MatrixMode::default(),
            noise: NoiseSpec::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        self.room.validate()?;
        self.params.validate()?;
        self.trajectory.validate()?;
        self.noise.validate()?;
        if self.n_values.is_empty() {
            return Err(Error::Config("n_values must not be empty".into()));
        }
        if self.trials_per_n == 0 {
            return Err(Error::Config("trials_per_n must be at least 1".into()));
        }
        Ok(())
    }

    pub fn settings(&self) -> LocalizeSettings {
        LocalizeSettings {
            params: self.params,
            matrix_mode: self.matrix_mode,
            virtual_mode: self.virtual_mode,
            noise: self.noise,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub n: usize,
    pub trial_index: usize,
    pub true_position: Point3,
    pub estimated_position: Point3,
    pub error_m: f64,
    pub per_axis_abs_error: [f64; 3],
}

/// Summary statistics for one value of `n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub n: usize,
    pub trials: usize,
    pub mean_error_m: f64,
    pub mae_x: f64,
    pub mae_y: f64,
    pub mae_z: f64,
    pub p50: f64,
    pub p90: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub config: ExperimentConfig,
    pub rows: Vec<AggregateRow>,
    /// Statistics over every trial of every `n`.
    pub overall: AggregateRow,
    #[serde(skip)]
    pub records: Vec<TrialRecord>,
}

const TARGET_STREAM: u64 = 1;
const NOISE_STREAM: u64 = 2;

fn stream(seed: u64, kind: u64, n: u64, trial: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    for (chunk, word) in key.chunks_exact_mut(8).zip([seed, kind, n, trial]) {
        chunk.copy_from_slice(&word.to_le_bytes());
    }
    ChaCha8Rng::from_seed(key)
}

/// Stream that draws trial `trial`'s target position.
pub fn target_stream(seed: u64, trial: usize) -> ChaCha8Rng {
    stream(seed, TARGET_STREAM, 0, trial as u64)
}

/// Stream that feeds trial `trial`'s measurement noise for `n`.
pub fn noise_stream(seed: u64, n: usize, trial: usize) -> ChaCha8Rng {
    stream(seed, NOISE_STREAM, n as u64, trial as u64)
}

/// Uniform point in the open room volume.
pub fn sample_target<R: Rng + ?Sized>(room: &RoomSpec, rng: &mut R) -> Point3 {
    loop {
        let p = Point3::new(
            rng.random::<f64>() * room.width_m,
            rng.random::<f64>() * room.depth_m,
            rng.random::<f64>() * room.height_m,
        );
        if room.contains_strictly(&p) {
            return p;
        }
    }
}

/// Runs `config.trials_per_n` localizations with `n` virtual tags per edge.
pub fn run_trials(config: &ExperimentConfig, n: usize) -> Result<Vec<TrialRecord>> {
    config.validate()?;
    let grid = place_virtual_tags(&config.room, n, config.placement_mode)?;
    let localizer = Localizer::new(&grid, &config.trajectory, config.settings())?;

    let outcomes: Vec<Result<TrialRecord>> = (0..config.trials_per_n)
        .into_par_iter()
        .map(|i| {
            let target = sample_target(&config.room, &mut target_stream(config.seed, i));
            let r = localizer
                .locate(target, &mut noise_stream(config.seed, n, i))
                .map_err(|e| Error::Trial {
                    n,
                    index: i,
                    source: Box::new(e),
                })?;
            Ok(TrialRecord {
                n,
                trial_index: i,
                true_position: r.true_position,
                estimated_position: r.estimated_position,
                error_m: r.error_m,
                per_axis_abs_error: r.per_axis_abs_error,
            })
        })
        .collect();
    // Sequential unwrap so the reported failure is always the lowest index.
    outcomes.into_iter().collect()
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, count) = values.fold((0.0, 0usize), |(s, c), v| (s + v, c + 1));
    sum / count as f64
}

/// Nearest-rank percentile of ascending `sorted`, `p` in (0, 100].
fn nearest_rank(sorted: &[f64], p: f64) -> f64 {
    let rank = ((p / 100.0) * sorted.len() as f64).ceil() as usize;
    sorted[rank.clamp(1, sorted.len()) - 1]
}

/// Means and percentiles of a set of trials. `n` is taken from the first record.
pub fn aggregate(records: &[TrialRecord]) -> Result<AggregateRow> {
    let first = records
        .first()
        .ok_or_else(|| Error::Config("cannot aggregate an empty trial list".into()))?;
    let mut errors: Vec<f64> = records.iter().map(|r| r.error_m).collect();
    errors.sort_by(f64::total_cmp);
    let axis = |k: usize| mean(records.iter().map(|r| r.per_axis_abs_error[k]));
    Ok(AggregateRow {
        n: first.n,
        trials: records.len(),
        mean_error_m: mean(records.iter().map(|r| r.error_m)),
        mae_x: axis(0),
        mae_y: axis(1),
        mae_z: axis(2),
        p50: nearest_rank(&errors, 50.0),
        p90: nearest_rank(&errors, 90.0),
        max: errors[errors.len() - 1],
    })
}

/// Runs and aggregates every `n` in `config.n_values`.
pub fn sweep_n(config: &ExperimentConfig) -> Result<SweepReport> {
    config.validate()?;
    let mut rows = Vec::with_capacity(config.n_values.len());
    let mut records = Vec::with_capacity(config.n_values.len() * config.trials_per_n);
    for &n in &config.n_values {
        let trials = run_trials(config, n)?;
        rows.push(aggregate(&trials)?);
        records.extend(trials);
    }
    let mut overall = aggregate(&records)?;
    // Not a single n; the overall row reports the largest one swept.
    overall.n = config.n_values.iter().copied().max().unwrap_or(0);
    Ok(SweepReport {
        config: config.clone(),
        rows,
        overall,
        records,
    })
}

pub const SUMMARY_CSV_HEADER: [&str; 8] = [
    "n",
    "mean_error_m",
    "mae_x",
    "mae_y",
    "mae_z",
    "p50",
    "p90",
    "max",
];

pub const TRIALS_CSV_HEADER: [&str; 12] = [
    "n", "trial", "true_x", "true_y", "true_z", "est_x", "est_y", "est_z", "error_m", "abs_dx",
    "abs_dy", "abs_dz",
];

const CSV_COMMENT: &str = "# numeric fields formatted with 6 significant digits\n";

impl SweepReport {
    /// One row per `n`, preceded by a `#` comment line describing the
    /// number format.
    pub fn write_summary_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        out.write_all(CSV_COMMENT.as_bytes())?;
        let mut w = csv::Writer::from_writer(out);
        w.write_record(SUMMARY_CSV_HEADER)?;
        for r in &self.rows {
            w.write_record([
                r.n.to_string(),
                sig6(r.mean_error_m),
                sig6(r.mae_x),
                sig6(r.mae_y),
                sig6(r.mae_z),
                sig6(r.p50),
                sig6(r.p90),
                sig6(r.max),
            ])?;
        }
        w.flush()
    }

    pub fn write_trials_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        out.write_all(CSV_COMMENT.as_bytes())?;
        let mut w = csv::Writer::from_writer(out);
        w.write_record(TRIALS_CSV_HEADER)?;
        for r in &self.records {
            let mut row = vec![r.n.to_string(), r.trial_index.to_string()];
            row.extend(r.true_position.to_array().map(sig6));
            row.extend(r.estimated_position.to_array().map(sig6));
            row.push(sig6(r.error_m));
            row.extend(r.per_axis_abs_error.map(sig6));
            w.write_record(row)?;
        }
        w.flush()
    }
}
