//! Single-reader localization by nearest-RSSI matching and incidence voting.
//!
//! The reader walks a trajectory. At every stop it reads the target tag and
//! the reference matrix, and the matrix tag whose reading is closest to the
//! target's casts one vote. The tag with the most votes is the estimate.

use std::collections::BTreeMap;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Point3;
use crate::grid::{GridMeasurement, ReferenceGrid, VirtualMode};
use crate::radio::{friis_backscatter, RadioParams};

/// Ordered reader stops.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReaderTrajectory {
    positions: Vec<Point3>,
}

impl Default for ReaderTrajectory {
    /// One-meter steps along the x axis from the origin to x = 10.
    fn default() -> Self {
        Self::along_x(10)
    }
}

impl ReaderTrajectory {
    pub fn new(positions: Vec<Point3>) -> Result<Self> {
        let t = Self { positions };
        t.validate()?;
        Ok(t)
    }

    /// Stops at `(i, 0, 0)` for `i = 0..=last`.
    pub fn along_x(last: usize) -> Self {
        Self {
            positions: (0..=last)
                .map(|i| Point3::new(i as f64, 0.0, 0.0))
                .collect(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.positions.is_empty() {
            return Err(Error::Config("reader trajectory is empty".into()));
        }
        if let Some(p) = self.positions.iter().find(|p| !p.is_finite()) {
            return Err(Error::Config(format!("non-finite reader position {p}")));
        }
        Ok(())
    }

    pub fn positions(&self) -> &[Point3] {
        &self.positions
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }
}

/// Optional zero-mean Gaussian noise on the target's readings.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseSpec {
    pub enabled: bool,
    pub sigma_db: f64,
}

impl NoiseSpec {
    pub fn gaussian(sigma_db: f64) -> Self {
        Self {
            enabled: true,
            sigma_db,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma_db.is_finite() && self.sigma_db >= 0.0) {
            return Err(Error::Config(format!(
                "noise sigma_db must be finite and non-negative, got {}",
                self.sigma_db
            )));
        }
        Ok(())
    }
}

/// When the matrix readings are taken.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize, clap::ValueEnum,
)]
#[serde(rename_all = "kebab-case")]
pub enum MatrixMode {
    /// Re-read the matrix at every reader stop.
    #[default]
    RecomputePerPosition,
    /// Read the matrix once, at the first stop, and reuse it.
    FixedAtFirstPosition,
}

impl MatrixMode {
    pub fn label(self) -> &'static str {
        match self {
            MatrixMode::RecomputePerPosition => "recompute-per-position",
            MatrixMode::FixedAtFirstPosition => "fixed-at-first-position",
        }
    }
}

/// The winning match at one reader stop.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Vote {
    pub reader_position_index: usize,
    pub matched_tag_id: usize,
    /// `|target − matched|` in dB.
    pub rssi_diff_db: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalizationResult {
    pub votes: Vec<Vote>,
    pub estimated_tag_id: usize,
    pub estimated_position: Point3,
    pub true_position: Point3,
    pub error_m: f64,
    /// `[|Δx|, |Δy|, |Δz|]`.
    pub per_axis_abs_error: [f64; 3],
}

/// Everything about a localization run except the grid, the trajectory and
/// the target.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LocalizeSettings {
    pub params: RadioParams,
    pub matrix_mode: MatrixMode,
    pub virtual_mode: VirtualMode,
    pub noise: NoiseSpec,
}

/// Reading of the target tag from `reader`, with noise when enabled.
pub fn measure_target<R: Rng + ?Sized>(
    target: Point3,
    reader: Point3,
    params: &RadioParams,
    noise: &NoiseSpec,
    rng: &mut R,
) -> Result<f64> {
    let clean = friis_backscatter(params, target.distance(&reader))?;
    if !noise.enabled {
        return Ok(clean);
    }
    let normal = Normal::new(0.0, noise.sigma_db)
        .map_err(|e| Error::Config(format!("invalid noise: {e}")))?;
    Ok(clean + normal.sample(rng))
}

/// The matrix tag whose reading is closest to `target_rssi`; the lowest id
/// wins ties. Saturated entries never match.
pub fn match_nearest_rssi(
    target_rssi: f64,
    measurement: &GridMeasurement,
    reader_position_index: usize,
) -> Result<Vote> {
    if measurement.is_empty() {
        return Err(Error::Config("grid measurement is empty".into()));
    }
    if !target_rssi.is_finite() {
        return Err(Error::Domain(format!(
            "target RSSI is not finite: {target_rssi}"
        )));
    }
    let mut best: Option<(usize, f64)> = None;
    for (id, &rssi) in measurement.rssi_dbm.iter().enumerate() {
        if !rssi.is_finite() {
            continue;
        }
        let diff = (target_rssi - rssi).abs();
        if best.is_none_or(|(_, d)| diff < d) {
            best = Some((id, diff));
        }
    }
    let (matched_tag_id, rssi_diff_db) = best.ok_or_else(|| {
        Error::Config(format!(
            "no measurable grid tag from reader at {}",
            measurement.reader_position
        ))
    })?;
    Ok(Vote {
        reader_position_index,
        matched_tag_id,
        rssi_diff_db,
    })
}

/// Id of the most-voted tag. Ties go to the smaller mean `rssi_diff_db`,
/// then to the lower id.
pub fn winning_tag(votes: &[Vote]) -> Result<usize> {
    let mut tally: BTreeMap<usize, (usize, f64)> = BTreeMap::new();
    for v in votes {
        let e = tally.entry(v.matched_tag_id).or_insert((0, 0.0));
        e.0 += 1;
        e.1 += v.rssi_diff_db;
    }
    // BTreeMap iterates by ascending id, so keeping the first of equals
    // implements the final tie-break.
    let mut best: Option<(usize, usize, f64)> = None;
    for (&id, &(count, sum)) in &tally {
        let mean = sum / count as f64;
        let better = match best {
            None => true,
            Some((_, c, m)) => count > c || (count == c && mean < m),
        };
        if better {
            best = Some((id, count, mean));
        }
    }
    best.map(|(id, _, _)| id)
        .ok_or_else(|| Error::Config("cannot vote on an empty vote list".into()))
}

/// Position of the most-voted tag; see [`winning_tag`].
pub fn vote_incidence(votes: &[Vote], grid: &ReferenceGrid) -> Result<Point3> {
    let id = winning_tag(votes)?;
    grid.tag(id)
        .map(|t| t.position)
        .ok_or_else(|| Error::Config(format!("vote for unknown tag id {id}")))
}

/// Euclidean error and per-axis absolute errors.
pub fn localization_error(estimated: Point3, true_pos: Point3) -> (f64, [f64; 3]) {
    (estimated.distance(&true_pos), estimated.abs_diff(&true_pos))
}

/// A grid, a trajectory and settings with the matrix readings precomputed,
/// ready to locate any number of targets.
#[derive(Debug, Clone)]
pub struct Localizer<'a> {
    grid: &'a ReferenceGrid,
    trajectory: &'a ReaderTrajectory,
    settings: LocalizeSettings,
    measurements: Vec<GridMeasurement>,
}

impl<'a> Localizer<'a> {
    pub fn new(
        grid: &'a ReferenceGrid,
        trajectory: &'a ReaderTrajectory,
        settings: LocalizeSettings,
    ) -> Result<Self> {
        trajectory.validate()?;
        settings.noise.validate()?;
        let stops = match settings.matrix_mode {
            MatrixMode::RecomputePerPosition => trajectory.positions(),
            MatrixMode::FixedAtFirstPosition => &trajectory.positions()[..1],
        };
        let measurements = stops
            .iter()
            .map(|&r| grid.measure_saturating(r, &settings.params, settings.virtual_mode))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            grid,
            trajectory,
            settings,
            measurements,
        })
    }

    pub fn grid(&self) -> &ReferenceGrid {
        self.grid
    }

    pub fn settings(&self) -> &LocalizeSettings {
        &self.settings
    }

    /// Matrix readings used at reader stop `index`.
    pub fn matrix_at(&self, index: usize) -> &GridMeasurement {
        match self.settings.matrix_mode {
            MatrixMode::RecomputePerPosition => &self.measurements[index],
            MatrixMode::FixedAtFirstPosition => &self.measurements[0],
        }
    }

    pub fn locate<R: Rng + ?Sized>(
        &self,
        target: Point3,
        rng: &mut R,
    ) -> Result<LocalizationResult> {
        if !self.grid.room().contains_strictly(&target) {
            return Err(Error::Domain(format!(
                "target {target} is not strictly inside the room"
            )));
        }
        self.locate_unchecked(target, rng)
    }

    /// Like [`locate`](Self::locate) but without the room check, for
    /// diagnostic placements on the room boundary.
    pub fn locate_unchecked<R: Rng + ?Sized>(
        &self,
        target: Point3,
        rng: &mut R,
    ) -> Result<LocalizationResult> {
        let s = &self.settings;
        let mut votes = Vec::with_capacity(self.trajectory.len());
        for (i, &reader) in self.trajectory.positions().iter().enumerate() {
            let rssi = measure_target(target, reader, &s.params, &s.noise, rng)?;
            votes.push(match_nearest_rssi(rssi, self.matrix_at(i), i)?);
        }
        Ok(self.conclude(votes, target))
    }

    fn conclude(&self, votes: Vec<Vote>, target: Point3) -> LocalizationResult {
        // Votes are never empty (validated trajectory) and ids come from the grid.
        let estimated_tag_id = winning_tag(&votes).expect("non-empty votes");
        let estimated_position = self.grid.tags()[estimated_tag_id].position;
        let (error_m, per_axis_abs_error) = localization_error(estimated_position, target);
        LocalizationResult {
            votes,
            estimated_tag_id,
            estimated_position,
            true_position: target,
            error_m,
            per_axis_abs_error,
        }
    }
}

/// Locates one target. Builds a throwaway [`Localizer`]; reuse one when
/// locating many targets against the same grid.
pub fn localize<R: Rng + ?Sized>(
    target: Point3,
    grid: &ReferenceGrid,
    trajectory: &ReaderTrajectory,
    settings: &LocalizeSettings,
    rng: &mut R,
) -> Result<LocalizationResult> {
    Localizer::new(grid, trajectory, *settings)?.locate(target, rng)
}
