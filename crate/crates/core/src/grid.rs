//! The reference matrix: eight real tags on the room's corners plus virtual
//! tags whose readings are interpolated from those corners.
//!
//! Tag ids follow a fixed canonical order so that every tie-break downstream
//! is reproducible: the eight corners first, in lexicographic `(x, y, z)`
//! order, then virtual tags. In edge mode virtual tags are listed edge by edge
//! (edges ordered by their endpoint ids) and by increasing fraction along the
//! edge; in lattice mode they follow lexicographic lattice index order.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Point3;
use crate::numfmt::sig6;
use crate::radio::{dbm_to_watts, friis_backscatter, watts_to_dbm, RadioParams};

/// Reading assigned to a tag that sits exactly on the reader's antenna.
///
/// The link budget has no value at zero distance; the tag is treated as
/// saturating the receiver and never wins a nearest-RSSI comparison.
pub const SATURATED_RSSI: f64 = f64::INFINITY;

/// Axis-aligned box room with one corner at the origin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RoomSpec {
    /// Extent along x.
    pub width_m: f64,
    /// Extent along y.
    pub depth_m: f64,
    /// Extent along z.
    pub height_m: f64,
}

impl Default for RoomSpec {
    fn default() -> Self {
        Self {
            width_m: 3.0,
            depth_m: 3.0,
            height_m: 4.0,
        }
    }
}

impl RoomSpec {
    pub fn new(width_m: f64, depth_m: f64, height_m: f64) -> Result<Self> {
        let room = Self {
            width_m,
            depth_m,
            height_m,
        };
        room.validate()?;
        Ok(room)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("width_m", self.width_m),
            ("depth_m", self.depth_m),
            ("height_m", self.height_m),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Config(format!(
                    "room {name} must be positive and finite, got {v}"
                )));
            }
        }
        Ok(())
    }

    pub fn extents(&self) -> [f64; 3] {
        [self.width_m, self.depth_m, self.height_m]
    }

    /// True when `p` lies in the open box `(0, w) × (0, d) × (0, h)`.
    pub fn contains_strictly(&self, p: &Point3) -> bool {
        p.to_array()
            .iter()
            .zip(self.extents())
            .all(|(&c, e)| c > 0.0 && c < e)
    }

    /// The eight corners in lexicographic `(x, y, z)` order. Corner `i` has
    /// x at the far wall when bit 2 of `i` is set, y for bit 1, z for bit 0.
    pub fn vertices(&self) -> [Point3; 8] {
        std::array::from_fn(|i| {
            Point3::new(
                if i & 4 != 0 { self.width_m } else { 0.0 },
                if i & 2 != 0 { self.depth_m } else { 0.0 },
                if i & 1 != 0 { self.height_m } else { 0.0 },
            )
        })
    }
}

/// The twelve edges of the box as pairs of corner ids, in canonical order.
pub fn cuboid_edges() -> Vec<(usize, usize)> {
    let mut edges = Vec::with_capacity(12);
    for a in 0..8usize {
        for b in (a + 1)..8 {
            if (a ^ b).count_ones() == 1 {
                edges.push((a, b));
            }
        }
    }
    edges
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TagKind {
    Reference,
    Virtual,
}

impl TagKind {
    pub fn label(self) -> &'static str {
        match self {
            TagKind::Reference => "reference",
            TagKind::Virtual => "virtual",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridTag {
    pub id: usize,
    pub position: Point3,
    pub kind: TagKind,
}

/// How virtual tags are laid out.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize, clap::ValueEnum,
)]
#[serde(rename_all = "kebab-case")]
pub enum PlacementMode {
    /// `n` equally spaced tags on each of the twelve edges.
    #[default]
    EdgeInterpolation,
    /// A uniform `(n + 2)³` lattice filling the room.
    Lattice,
}

impl PlacementMode {
    pub fn label(self) -> &'static str {
        match self {
            PlacementMode::EdgeInterpolation => "edge-interpolation",
            PlacementMode::Lattice => "lattice",
        }
    }
}

/// How virtual tags obtain their readings.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize, clap::ValueEnum,
)]
#[serde(rename_all = "kebab-case")]
pub enum VirtualMode {
    /// Linear interpolation of corner readings in dBm.
    #[default]
    Interpolated,
    /// Linear interpolation of corner readings in watts.
    InterpolatedLinear,
    /// Direct link-budget evaluation at the virtual position.
    ExactFriis,
}

impl VirtualMode {
    pub fn label(self) -> &'static str {
        match self {
            VirtualMode::Interpolated => "interpolated",
            VirtualMode::InterpolatedLinear => "interpolated-linear",
            VirtualMode::ExactFriis => "exact-friis",
        }
    }
}

/// Where a tag's interpolated reading comes from.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Anchor {
    Corner,
    Edge { a: usize, b: usize, t: f64 },
    Lattice { frac: [f64; 3] },
}

/// Reference and virtual tags of one room. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceGrid {
    room: RoomSpec,
    tags: Vec<GridTag>,
    anchors: Vec<Anchor>,
    n_virtual_per_edge: usize,
    placement_mode: PlacementMode,
}

/// The eight corner tags of `room`.
pub fn build_reference_tags(room: &RoomSpec) -> Result<Vec<GridTag>> {
    room.validate()?;
    Ok(room
        .vertices()
        .into_iter()
        .enumerate()
        .map(|(id, position)| GridTag {
            id,
            position,
            kind: TagKind::Reference,
        })
        .collect())
}

/// Builds the full matrix with `n` virtual tags per edge (edge mode) or per
/// lattice axis interval (lattice mode).
pub fn place_virtual_tags(room: &RoomSpec, n: usize, mode: PlacementMode) -> Result<ReferenceGrid> {
    let mut tags = build_reference_tags(room)?;
    let mut anchors = vec![Anchor::Corner; tags.len()];
    let corners = room.vertices();
    let mut push = |tags: &mut Vec<GridTag>, position, anchor| {
        tags.push(GridTag {
            id: tags.len(),
            position,
            kind: TagKind::Virtual,
        });
        anchors.push(anchor);
    };

    match mode {
        PlacementMode::EdgeInterpolation => {
            for (a, b) in cuboid_edges() {
                for i in 1..=n {
                    let t = i as f64 / (n + 1) as f64;
                    push(
                        &mut tags,
                        corners[a].lerp(&corners[b], t),
                        Anchor::Edge { a, b, t },
                    );
                }
            }
        }
        PlacementMode::Lattice => {
            let steps = n + 1;
            let ext = room.extents();
            for i in 0..=steps {
                for j in 0..=steps {
                    for k in 0..=steps {
                        let idx = [i, j, k];
                        if idx.iter().all(|&c| c == 0 || c == steps) {
                            continue;
                        }
                        let frac = idx.map(|c| c as f64 / steps as f64);
                        let position =
                            Point3::new(frac[0] * ext[0], frac[1] * ext[1], frac[2] * ext[2]);
                        push(&mut tags, position, Anchor::Lattice { frac });
                    }
                }
            }
        }
    }

    Ok(ReferenceGrid {
        room: *room,
        tags,
        anchors,
        n_virtual_per_edge: n,
        placement_mode: mode,
    })
}

/// `(1 - t)·a + t·b`, in whatever unit the readings carry.
pub fn interpolate_rssi(rssi_a: f64, rssi_b: f64, t: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::Domain(format!(
            "interpolation fraction must lie in [0, 1], got {t}"
        )));
    }
    if rssi_a == rssi_b || t == 0.0 {
        return Ok(rssi_a);
    }
    if t == 1.0 {
        return Ok(rssi_b);
    }
    if rssi_a.is_infinite() || rssi_b.is_infinite() {
        // Saturated endpoint: the blend is saturated too.
        return Ok((1.0 - t) * rssi_a + t * rssi_b);
    }
    // The exact value lies between the endpoints; clamp away rounding.
    let v = rssi_a + t * (rssi_b - rssi_a);
    Ok(v.clamp(rssi_a.min(rssi_b), rssi_a.max(rssi_b)))
}

/// Readings of every grid tag for one reader position, index-aligned with
/// [`ReferenceGrid::tags`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridMeasurement {
    pub reader_position: Point3,
    pub rssi_dbm: Vec<f64>,
}

impl GridMeasurement {
    pub fn len(&self) -> usize {
        self.rssi_dbm.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rssi_dbm.is_empty()
    }
}

impl ReferenceGrid {
    pub fn room(&self) -> &RoomSpec {
        &self.room
    }

    pub fn tags(&self) -> &[GridTag] {
        &self.tags
    }

    pub fn tag(&self, id: usize) -> Option<&GridTag> {
        self.tags.get(id)
    }

    pub fn len(&self) -> usize {
        self.tags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tags.is_empty()
    }

    pub fn n_virtual_per_edge(&self) -> usize {
        self.n_virtual_per_edge
    }

    pub fn placement_mode(&self) -> PlacementMode {
        self.placement_mode
    }

    /// Expected tag count for a placement.
    pub fn expected_len(n: usize, mode: PlacementMode) -> usize {
        match mode {
            PlacementMode::EdgeInterpolation => 8 + 12 * n,
            PlacementMode::Lattice => (n + 2).pow(3),
        }
    }

    /// Readings of the whole matrix from `reader`. Fails if the reader sits
    /// on any tag.
    pub fn measure(
        &self,
        reader: Point3,
        params: &RadioParams,
        mode: VirtualMode,
    ) -> Result<GridMeasurement> {
        if let Some(tag) = self.tags.iter().find(|t| t.position == reader) {
            return Err(Error::Domain(format!(
                "reader at {reader} coincides with grid tag {}",
                tag.id
            )));
        }
        self.measure_saturating(reader, params, mode)
    }

    /// Like [`measure`](Self::measure), but a tag located exactly at the
    /// reader reads [`SATURATED_RSSI`], as does any virtual tag interpolated
    /// from such a corner.
    pub fn measure_saturating(
        &self,
        reader: Point3,
        params: &RadioParams,
        mode: VirtualMode,
    ) -> Result<GridMeasurement> {
        params.validate()?;
        let exact = |p: &Point3| -> Result<f64> {
            let d = reader.distance(p);
            if d == 0.0 {
                Ok(SATURATED_RSSI)
            } else {
                friis_backscatter(params, d)
            }
        };

        let corner_rssi: Vec<f64> = self.tags[..8]
            .iter()
            .map(|t| exact(&t.position))
            .collect::<Result<_>>()?;

        let mut rssi_dbm = Vec::with_capacity(self.tags.len());
        for (tag, anchor) in self.tags.iter().zip(&self.anchors) {
            let value = match (anchor, mode) {
                (Anchor::Corner, _) => corner_rssi[tag.id],
                (_, VirtualMode::ExactFriis) => exact(&tag.position)?,
                (Anchor::Edge { a, b, t }, VirtualMode::Interpolated) => {
                    interpolate_rssi(corner_rssi[*a], corner_rssi[*b], *t)?
                }
                (Anchor::Edge { a, b, t }, VirtualMode::InterpolatedLinear) => {
                    let (wa, wb) = (dbm_to_watts(corner_rssi[*a]), dbm_to_watts(corner_rssi[*b]));
                    to_dbm(interpolate_rssi(wa, wb, *t)?)?
                }
                (Anchor::Lattice { frac }, VirtualMode::Interpolated) => {
                    trilinear(&corner_rssi, frac)
                }
                (Anchor::Lattice { frac }, VirtualMode::InterpolatedLinear) => {
                    let watts: Vec<f64> = corner_rssi.iter().map(|&r| dbm_to_watts(r)).collect();
                    to_dbm(trilinear(&watts, frac))?
                }
            };
            rssi_dbm.push(value);
        }
        Ok(GridMeasurement {
            reader_position: reader,
            rssi_dbm,
        })
    }

    /// Writes `id,kind,x,y,z` rows, numbers at six significant digits.
    pub fn write_csv<W: Write>(&self, out: W) -> std::io::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["id", "kind", "x", "y", "z"])?;
        for tag in &self.tags {
            w.write_record([
                tag.id.to_string(),
                tag.kind.label().to_string(),
                sig6(tag.position.x),
                sig6(tag.position.y),
                sig6(tag.position.z),
            ])?;
        }
        w.flush()
    }
}

fn to_dbm(watts: f64) -> Result<f64> {
    if watts == f64::INFINITY {
        Ok(SATURATED_RSSI)
    } else {
        watts_to_dbm(watts)
    }
}

/// Trilinear blend of the eight corner values; corners with zero weight are
/// skipped so a saturated corner only affects tags it actually anchors.
fn trilinear(corners: &[f64], frac: &[f64; 3]) -> f64 {
    let mut acc = 0.0;
    for (i, &value) in corners.iter().enumerate().take(8) {
        let w: f64 = (0..3)
            .map(|axis| {
                if i & (4 >> axis) != 0 {
                    frac[axis]
                } else {
                    1.0 - frac[axis]
                }
            })
            .product();
        if w > 0.0 {
            acc += w * value;
        }
    }
    acc
}
