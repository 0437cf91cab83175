//! Simulation and localization of passive RFID tags in a box-shaped room
//! with a single mobile reader.
//!
//! A matrix of reference tags on the room's corners, densified with
//! interpolated virtual tags, serves as an RSSI fingerprint. The reader walks
//! a trajectory, matches the target tag's reading against the matrix at each
//! stop, and the most-voted matrix tag is the position estimate.
//!
//! ```
//! use rfid3d::{place_virtual_tags, localize, LocalizeSettings, PlacementMode,
//!              Point3, ReaderTrajectory, RoomSpec};
//! use rand::SeedableRng;
//!
//! let room = RoomSpec::default();
//! let grid = place_virtual_tags(&room, 2, PlacementMode::EdgeInterpolation)?;
//! let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0);
//! let result = localize(
//!     Point3::new(2.9, 2.9, 3.9),
//!     &grid,
//!     &ReaderTrajectory::default(),
//!     &LocalizeSettings::default(),
//!     &mut rng,
//! )?;
//! assert_eq!(result.estimated_position, Point3::new(3.0, 3.0, 4.0));
//! # Ok::<(), rfid3d::Error>(())
//! ```

pub mod cli;
pub mod error;
pub mod experiment;
pub mod geometry;
pub mod grid;
pub mod localizer;
pub mod numfmt;
pub mod radio;

pub use error::{Error, Result};
pub use experiment::{
    aggregate, run_trials, sample_target, sweep_n, AggregateRow, ExperimentConfig, SweepReport,
    TrialRecord,
};
pub use geometry::{distance3, Point3};
pub use grid::{
    build_reference_tags, interpolate_rssi, place_virtual_tags, GridMeasurement, GridTag,
    PlacementMode, ReferenceGrid, RoomSpec, TagKind, VirtualMode,
};
pub use localizer::{
    localization_error, localize, match_nearest_rssi, measure_target, vote_incidence,
    LocalizationResult, LocalizeSettings, Localizer, MatrixMode, NoiseSpec, ReaderTrajectory, Vote,
};
pub use radio::{dbm_to_watts, friis_backscatter, watts_to_dbm, RadioParams};

// The guide's snippets run as doctests, one module per chapter.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/propagation.md")]
    mod propagation {}
    #[doc = include_str!("../../../book/src/reference-matrix.md")]
    mod reference_matrix {}
    #[doc = include_str!("../../../book/src/localization.md")]
    mod localization {}
    #[doc = include_str!("../../../book/src/experiments.md")]
    mod experiments {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
