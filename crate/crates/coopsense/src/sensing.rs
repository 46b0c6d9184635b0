//! Synthetic LiDAR data: per-node point clouds, per-object extraction,
//! occupancy grids, and data fusion for both placement outcomes.
//!
//! Points are sampled on the cuboid faces that face the sensor, with an
//! expected count following an inverse-square law in the sensor distance,
//! attenuated when the line of sight crosses another object. Clouds are
//! born aligned in the global frame.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::SensingConfig;
use crate::error::{Error, Result};
use crate::scenario::{BoundingBox, NodeSpec, Scenario};

/// Point cloud of one node, global frame.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    pub node: usize,
    pub points: Vec<[f64; 3]>,
}

impl PointCloud {
    /// Dump as one `x y z` triple per line, for inspection.
    pub fn to_xyz_text(&self) -> String {
        let mut out = String::new();
        for p in &self.points {
            out.push_str(&format!("{} {} {}\n", p[0], p[1], p[2]));
        }
        out
    }
}

/// The subset of a node's cloud that falls inside one object's box.
#[derive(Debug, Clone, PartialEq)]
pub struct ObjectData {
    pub object: usize,
    pub node: usize,
    pub points: Vec<[f64; 3]>,
}

impl ObjectData {
    pub fn empty(object: usize, node: usize) -> Self {
        Self {
            object,
            node,
            points: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Occupancy counts over the J^3 sub-boxes of an object's bounding box.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QualityGrid {
    j: u32,
    counts: Vec<u32>,
}

impl QualityGrid {
    pub fn zero(j: u32) -> Self {
        Self {
            j,
            counts: vec![0; (j * j * j) as usize],
        }
    }

    pub fn resolution(&self) -> u32 {
        self.j
    }

    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    /// Total number of binned points.
    pub fn total_points(&self) -> u64 {
        self.counts.iter().map(|&c| u64::from(c)).sum()
    }

    /// Number of sub-boxes holding at least one point.
    pub fn occupied_bins(&self) -> usize {
        self.counts.iter().filter(|&&c| c > 0).count()
    }

    /// Element-wise sum; grids must share the resolution.
    pub fn add(&self, other: &QualityGrid) -> QualityGrid {
        assert_eq!(self.j, other.j, "grid resolutions must match");
        let counts = self
            .counts
            .iter()
            .zip(&other.counts)
            .map(|(a, b)| a + b)
            .collect();
        QualityGrid { j: self.j, counts }
    }

    /// Component-wise dominance: every bin of `self` >= the bin of `other`.
    pub fn dominates(&self, other: &QualityGrid) -> bool {
        self.j == other.j && self.counts.iter().zip(&other.counts).all(|(a, b)| a >= b)
    }
}

/// Fused data for one object at one processing node.
#[derive(Debug, Clone, PartialEq)]
pub struct FusedData {
    pub object: usize,
    /// Node that will process the fused set (CAV id or 0 for the RSU).
    pub node: usize,
    /// Multiset union of the contributing object data (no deduplication).
    pub points: Vec<[f64; 3]>,
    pub grid: QualityGrid,
}

impl FusedData {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Cuboid face, used for sensor-facing sampling.
struct Face {
    /// Axis of the outward normal and its sign.
    axis: usize,
    sign: f64,
    area: f64,
}

fn visible_faces(bbox: &BoundingBox, sensor: [f64; 3]) -> Vec<Face> {
    let mut faces = Vec::new();
    #[allow(clippy::needless_range_loop)] // axis indexes three parallel arrays
    for axis in 0..3 {
        let (u, v) = match axis {
            0 => (1, 2),
            1 => (0, 2),
            _ => (0, 1),
        };
        let area = bbox.dims[u] * bbox.dims[v];
        for sign in [-1.0, 1.0] {
            let face_center = bbox.center[axis] + sign * bbox.dims[axis] / 2.0;
            if sign * (sensor[axis] - face_center) > 0.0 {
                faces.push(Face { axis, sign, area });
            }
        }
    }
    faces
}

/// Expected point count for one object as seen from `sensor`, before
/// occlusion scaling and clipping: density_ref * visible_area / distance^2.
fn expected_count(cfg: &SensingConfig, visible_area: f64, distance: f64) -> f64 {
    if distance * distance < 1e-12 {
        return cfg.max_points_per_object as f64;
    }
    cfg.density_ref * visible_area / (distance * distance)
}

/// True when the straight segment from the sensor to the object center
/// crosses some other object's box.
pub fn is_occluded(scenario: &Scenario, sensor: [f64; 3], object: usize) -> bool {
    let target = scenario.objects[object].bbox.center;
    scenario
        .objects
        .iter()
        .enumerate()
        .any(|(j, other)| j != object && other.bbox.segment_intersects(sensor, target))
}

/// Synthesize the point cloud one node observes, deterministically in
/// (node, scenario, seed). Per object, points land on the sensor-facing
/// faces; the count follows the inverse-square law, scaled by the occlusion
/// factor when the line of sight is blocked, and clipped to the cap.
pub fn synthesize_point_cloud(
    node: &NodeSpec,
    scenario: &Scenario,
    cfg: &SensingConfig,
    seed: u64,
) -> PointCloud {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(node.id as u64 + 1);
    let sensor = node.position;
    let mut points = Vec::new();

    for (k, obj) in scenario.objects.iter().enumerate() {
        let faces = visible_faces(&obj.bbox, sensor);
        let visible_area: f64 = faces.iter().map(|f| f.area).sum();
        if faces.is_empty() {
            continue;
        }
        let d2: f64 = sensor
            .iter()
            .zip(&obj.bbox.center)
            .map(|(s, c)| (s - c) * (s - c))
            .sum();
        let mut expected = expected_count(cfg, visible_area, d2.sqrt());
        if is_occluded(scenario, sensor, k) {
            expected *= cfg.occlusion_factor;
        }
        let count = (expected.round() as i64).clamp(0, cfg.max_points_per_object as i64) as usize;

        for _ in 0..count {
            // pick a face with probability proportional to its area
            let mut pick = rng.gen_range(0.0..visible_area);
            let mut chosen = faces.len() - 1;
            for (i, f) in faces.iter().enumerate() {
                if pick < f.area {
                    chosen = i;
                    break;
                }
                pick -= f.area;
            }
            let face = &faces[chosen];
            let (u, v) = match face.axis {
                0 => (1, 2),
                1 => (0, 2),
                _ => (0, 1),
            };
            let mut p = obj.bbox.center;
            p[face.axis] += face.sign * obj.bbox.dims[face.axis] / 2.0;
            p[u] += rng.gen_range(-0.5..0.5) * obj.bbox.dims[u];
            p[v] += rng.gen_range(-0.5..0.5) * obj.bbox.dims[v];
            points.push(p);
        }
    }

    PointCloud {
        node: node.id,
        points,
    }
}

/// Exactly the points of `cloud` inside the closed box.
pub fn extract_object_data(cloud: &PointCloud, object: usize, bbox: &BoundingBox) -> ObjectData {
    let points = cloud
        .points
        .iter()
        .copied()
        .filter(|&p| bbox.contains(p))
        .collect();
    ObjectData {
        object,
        node: cloud.node,
        points,
    }
}

/// Count points per sub-box after dividing the bounding box into `j`
/// half-open segments per axis; points on the upper box face are assigned
/// to the last bin.
pub fn quality_grid(data: &ObjectData, bbox: &BoundingBox, j: u32) -> Result<QualityGrid> {
    if j == 0 {
        return Err(Error::InvalidArgument(
            "grid resolution must be at least 1".into(),
        ));
    }
    let mut grid = QualityGrid::zero(j);
    let lo = bbox.min_corner();
    for p in &data.points {
        let mut index = 0usize;
        for axis in 0..3 {
            let step = bbox.dims[axis] / j as f64;
            let bin = (((p[axis] - lo[axis]) / step) as i64).clamp(0, i64::from(j) - 1) as usize;
            index = index * j as usize + bin;
        }
        grid.counts[index] += 1;
    }
    Ok(grid)
}

/// Fused data processed at the CAV: empty outside the RoI; otherwise the
/// union of the CAV's own object data with the RSU broadcast when the task
/// stays local, and the RSU data alone when it was offloaded.
pub fn fuse_local(
    own: &ObjectData,
    rsu: &ObjectData,
    offloaded: bool,
    in_roi: bool,
    bbox: &BoundingBox,
    j: u32,
) -> Result<FusedData> {
    if own.object != rsu.object {
        return Err(Error::InvalidArgument(format!(
            "fuse_local got object {} and object {}",
            own.object, rsu.object
        )));
    }
    let points: Vec<[f64; 3]> = if !in_roi {
        Vec::new()
    } else if offloaded {
        rsu.points.clone()
    } else {
        own.points
            .iter()
            .chain(rsu.points.iter())
            .copied()
            .collect()
    };
    let data = ObjectData {
        object: own.object,
        node: own.node,
        points,
    };
    let grid = quality_grid(&data, bbox, j)?;
    Ok(FusedData {
        object: own.object,
        node: own.node,
        points: data.points,
        grid,
    })
}

/// Fused data processed at the RSU: the union of every offloading CAV's
/// object data with the RSU's own.
pub fn fuse_rsu(
    contributions: &[&ObjectData],
    rsu: &ObjectData,
    bbox: &BoundingBox,
    j: u32,
) -> Result<FusedData> {
    for c in contributions {
        if c.object != rsu.object {
            return Err(Error::InvalidArgument(format!(
                "fuse_rsu got object {} and object {}",
                c.object, rsu.object
            )));
        }
    }
    let mut points = Vec::new();
    for c in contributions {
        points.extend_from_slice(&c.points);
    }
    points.extend_from_slice(&rsu.points);
    let data = ObjectData {
        object: rsu.object,
        node: 0,
        points,
    };
    let grid = quality_grid(&data, bbox, j)?;
    Ok(FusedData {
        object: rsu.object,
        node: 0,
        points: data.points,
        grid,
    })
}

/// Everything downstream stages need from the sensing phase: per-node
/// clouds and, per (node, object), the extracted data and its grid.
#[derive(Debug, Clone)]
pub struct SensingSnapshot {
    pub clouds: Vec<PointCloud>,
    object_data: Vec<Vec<ObjectData>>,
    grids: Vec<Vec<QualityGrid>>,
    grid_resolution: u32,
}

impl SensingSnapshot {
    pub fn collect(scenario: &Scenario, cfg: &SensingConfig, seed: u64) -> Result<Self> {
        cfg.validate()?;
        let clouds: Vec<PointCloud> = scenario
            .nodes
            .iter()
            .map(|n| synthesize_point_cloud(n, scenario, cfg, seed))
            .collect();
        Self::from_clouds(scenario, cfg.grid_resolution, clouds)
    }

    /// Build a snapshot from externally supplied clouds (tests, replays).
    pub fn from_clouds(scenario: &Scenario, j: u32, clouds: Vec<PointCloud>) -> Result<Self> {
        if clouds.len() != scenario.nodes.len() {
            return Err(Error::InvalidArgument("one cloud per node required".into()));
        }
        let mut object_data = Vec::with_capacity(clouds.len());
        let mut grids = Vec::with_capacity(clouds.len());
        for cloud in &clouds {
            let mut per_obj = Vec::with_capacity(scenario.objects.len());
            let mut per_grid = Vec::with_capacity(scenario.objects.len());
            for (k, obj) in scenario.objects.iter().enumerate() {
                let data = extract_object_data(cloud, k, &obj.bbox);
                per_grid.push(quality_grid(&data, &obj.bbox, j)?);
                per_obj.push(data);
            }
            object_data.push(per_obj);
            grids.push(per_grid);
        }
        Ok(Self {
            clouds,
            object_data,
            grids,
            grid_resolution: j,
        })
    }

    pub fn grid_resolution(&self) -> u32 {
        self.grid_resolution
    }

    pub fn data(&self, node: usize, object: usize) -> &ObjectData {
        &self.object_data[node][object]
    }

    pub fn grid(&self, node: usize, object: usize) -> &QualityGrid {
        &self.grids[node][object]
    }

    pub fn count(&self, node: usize, object: usize) -> usize {
        self.object_data[node][object].len()
    }
}
