//! Straight-line transliteration of the localization loop, written without
//! the library's grid, matching or voting code. Only the link-budget kernel
//! and the scalar interpolation are shared.

#![allow(dead_code)]

use rfid3d::{
    dbm_to_watts, friis_backscatter, interpolate_rssi, watts_to_dbm, MatrixMode, PlacementMode,
    Point3, RadioParams, RoomSpec, VirtualMode,
};

#[derive(Debug, Clone, Copy)]
pub enum Recipe {
    Corner,
    Edge(usize, usize, f64),
    Lattice([f64; 3]),
}

#[derive(Debug, Clone)]
pub struct OracleTag {
    pub position: Point3,
    pub recipe: Recipe,
}

pub fn oracle_grid(room: &RoomSpec, n: usize, placement: PlacementMode) -> Vec<OracleTag> {
    let mut tags = Vec::new();
    for x in [0.0, room.width_m] {
        for y in [0.0, room.depth_m] {
            for z in [0.0, room.height_m] {
                tags.push(OracleTag {
                    position: Point3::new(x, y, z),
                    recipe: Recipe::Corner,
                });
            }
        }
    }
    let corners: Vec<Point3> = tags.iter().map(|t| t.position).collect();
    match placement {
        PlacementMode::EdgeInterpolation => {
            for a in 0..8 {
                for b in a + 1..8 {
                    let (pa, pb) = (corners[a].to_array(), corners[b].to_array());
                    let differing = (0..3).filter(|&k| pa[k] != pb[k]).count();
                    if differing != 1 {
                        continue;
                    }
                    for i in 1..=n {
                        let t = i as f64 / (n + 1) as f64;
                        let p = corners[a] + (corners[b] - corners[a]) * t;
                        tags.push(OracleTag {
                            position: p,
                            recipe: Recipe::Edge(a, b, t),
                        });
                    }
                }
            }
        }
        PlacementMode::Lattice => {
            let s = n + 1;
            for i in 0..=s {
                for j in 0..=s {
                    for k in 0..=s {
                        let on_corner = [i, j, k].iter().all(|&c| c == 0 || c == s);
                        if on_corner {
                            continue;
                        }
                        let f = [
                            i as f64 / s as f64,
                            j as f64 / s as f64,
                            k as f64 / s as f64,
                        ];
                        tags.push(OracleTag {
                            position: Point3::new(
                                f[0] * room.width_m,
                                f[1] * room.depth_m,
                                f[2] * room.height_m,
                            ),
                            recipe: Recipe::Lattice(f),
                        });
                    }
                }
            }
        }
    }
    tags
}

fn direct(params: &RadioParams, a: Point3, b: Point3) -> f64 {
    let d = a.distance(&b);
    if d == 0.0 {
        f64::INFINITY
    } else {
        friis_backscatter(params, d).unwrap()
    }
}

fn blend(corner: &[f64], f: &[f64; 3]) -> f64 {
    let mut acc = 0.0;
    for (c, &value) in corner.iter().enumerate() {
        let wx = if c & 4 != 0 { f[0] } else { 1.0 - f[0] };
        let wy = if c & 2 != 0 { f[1] } else { 1.0 - f[1] };
        let wz = if c & 1 != 0 { f[2] } else { 1.0 - f[2] };
        let w = 1.0 * wx * wy * wz;
        if w > 0.0 {
            acc += w * value;
        }
    }
    acc
}

fn to_dbm(w: f64) -> f64 {
    if w == f64::INFINITY {
        f64::INFINITY
    } else {
        watts_to_dbm(w).unwrap()
    }
}

pub fn oracle_matrix(
    tags: &[OracleTag],
    reader: Point3,
    params: &RadioParams,
    mode: VirtualMode,
) -> Vec<f64> {
    let corner: Vec<f64> = tags[..8]
        .iter()
        .map(|t| direct(params, reader, t.position))
        .collect();
    let corner_w: Vec<f64> = corner.iter().map(|&r| dbm_to_watts(r)).collect();
    tags.iter()
        .enumerate()
        .map(|(id, t)| match (t.recipe, mode) {
            (Recipe::Corner, _) => corner[id],
            (_, VirtualMode::ExactFriis) => direct(params, reader, t.position),
            (Recipe::Edge(a, b, f), VirtualMode::Interpolated) => {
                interpolate_rssi(corner[a], corner[b], f).unwrap()
            }
            (Recipe::Edge(a, b, f), VirtualMode::InterpolatedLinear) => {
                to_dbm(interpolate_rssi(corner_w[a], corner_w[b], f).unwrap())
            }
            (Recipe::Lattice(f), VirtualMode::Interpolated) => blend(&corner, &f),
            (Recipe::Lattice(f), VirtualMode::InterpolatedLinear) => to_dbm(blend(&corner_w, &f)),
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleOutcome {
    /// `(tag index, |ΔRSSI|)` per reader stop.
    pub picks: Vec<(usize, f64)>,
    pub estimate: usize,
    pub position: Point3,
    pub error_m: f64,
}

/// Reader walk, per-stop argmin, incidence vote, error.
pub fn oracle_localize(
    target: Point3,
    tags: &[OracleTag],
    trajectory: &[Point3],
    params: &RadioParams,
    matrix_mode: MatrixMode,
    virtual_mode: VirtualMode,
) -> OracleOutcome {
    let fixed = oracle_matrix(tags, trajectory[0], params, virtual_mode);
    let mut picks = Vec::new();
    for &reader in trajectory {
        let matrix = match matrix_mode {
            MatrixMode::RecomputePerPosition => oracle_matrix(tags, reader, params, virtual_mode),
            MatrixMode::FixedAtFirstPosition => fixed.clone(),
        };
        let target_rssi = friis_backscatter(params, target.distance(&reader)).unwrap();
        let mut best = usize::MAX;
        let mut best_diff = f64::INFINITY;
        for (k, &r) in matrix.iter().enumerate() {
            if !r.is_finite() {
                continue;
            }
            let diff = (target_rssi - r).abs();
            if best == usize::MAX || diff < best_diff {
                best = k;
                best_diff = diff;
            }
        }
        picks.push((best, best_diff));
    }

    let mut count = vec![0usize; tags.len()];
    let mut sum = vec![0.0f64; tags.len()];
    for &(k, d) in &picks {
        count[k] += 1;
        sum[k] += d;
    }
    let mut estimate = usize::MAX;
    for k in 0..tags.len() {
        if count[k] == 0 {
            continue;
        }
        if estimate == usize::MAX {
            estimate = k;
            continue;
        }
        let mean_k = sum[k] / count[k] as f64;
        let mean_e = sum[estimate] / count[estimate] as f64;
        if count[k] > count[estimate] || (count[k] == count[estimate] && mean_k < mean_e) {
            estimate = k;
        }
    }
    let position = tags[estimate].position;
    let d = position - target;
    OracleOutcome {
        picks,
        estimate,
        position,
        error_m: (d.x * d.x + d.y * d.y + d.z * d.z).sqrt(),
    }
}
