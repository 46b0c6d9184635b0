//! Static world: road segment, RSU and CAV nodes, objects, and the
//! region-of-interest membership matrix.
//!
//! A scenario is generated once from a seeded configuration and is immutable
//! afterwards; all downstream stages only read it.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::ScenarioConfig;
use crate::error::{Error, Result};

/// Scenario file schema version.
pub const SCENARIO_SCHEMA_VERSION: u32 = 1;

/// Minimum longitudinal distance between entities sharing a lane:
/// the longest object class plus one meter, which rules out cuboid overlap.
pub const MIN_LANE_GAP_M: f64 = 5.5;

/// Road segment along the x axis, y in [0, width].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoadSegment {
    pub length_m: f64,
    pub width_m: f64,
    pub lane_count: usize,
}

impl RoadSegment {
    pub fn lane_width(&self) -> f64 {
        self.width_m / self.lane_count as f64
    }

    pub fn lane_center_y(&self, lane: usize) -> f64 {
        (lane as f64 + 0.5) * self.lane_width()
    }

    /// Travel direction of a lane: the lower half of the road heads +x,
    /// the upper half heads -x.
    pub fn lane_heading(&self, lane: usize) -> Heading {
        if lane * 2 < self.lane_count {
            Heading::PosX
        } else {
            Heading::NegX
        }
    }
}

/// Travel direction along the road axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Heading {
    PosX,
    NegX,
}

impl Heading {
    pub fn sign(self) -> f64 {
        match self {
            Heading::PosX => 1.0,
            Heading::NegX => -1.0,
        }
    }
}

/// Node role; node 0 is always the RSU.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NodeKind {
    Rsu,
    Cav,
}

/// One sensing/computing node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeSpec {
    /// 0 for the RSU, 1..=M for CAVs.
    pub id: usize,
    pub kind: NodeKind,
    /// Sensor position in the global frame, meters.
    pub position: [f64; 3],
    /// Travel direction; None for the RSU.
    pub heading: Option<Heading>,
    /// Compute capacity in cycles/s.
    pub compute_capacity_hz: f64,
    /// Uplink transmit power in watts; CAVs only.
    pub transmit_power_w: Option<f64>,
    /// Uplink channel gain; CAVs only.
    pub channel_gain: Option<f64>,
}

/// Object class; determines default cuboid dimensions. Classes feed the
/// table accuracy model only, never the optimizer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ObjectClass {
    Car,
    Pedestrian,
    Cyclist,
}

impl ObjectClass {
    pub const ALL: [ObjectClass; 3] = [
        ObjectClass::Car,
        ObjectClass::Pedestrian,
        ObjectClass::Cyclist,
    ];

    /// Default cuboid dimensions (length, width, height) in meters.
    pub fn dims(self) -> [f64; 3] {
        match self {
            ObjectClass::Car => [4.5, 1.9, 1.6],
            ObjectClass::Pedestrian => [0.6, 0.6, 1.75],
            ObjectClass::Cyclist => [1.8, 0.6, 1.7],
        }
    }
}

/// Axis-aligned cuboid: center plus per-axis extents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub center: [f64; 3],
    pub dims: [f64; 3],
}

impl BoundingBox {
    pub fn new(center: [f64; 3], dims: [f64; 3]) -> Self {
        Self { center, dims }
    }

    pub fn min_corner(&self) -> [f64; 3] {
        [
            self.center[0] - self.dims[0] / 2.0,
            self.center[1] - self.dims[1] / 2.0,
            self.center[2] - self.dims[2] / 2.0,
        ]
    }

    pub fn max_corner(&self) -> [f64; 3] {
        [
            self.center[0] + self.dims[0] / 2.0,
            self.center[1] + self.dims[1] / 2.0,
            self.center[2] + self.dims[2] / 2.0,
        ]
    }

    /// Closed-box containment (boundary points count as inside).
    pub fn contains(&self, p: [f64; 3]) -> bool {
        let lo = self.min_corner();
        let hi = self.max_corner();
        (0..3).all(|a| p[a] >= lo[a] && p[a] <= hi[a])
    }

    /// Total surface area of the cuboid.
    pub fn surface_area(&self) -> f64 {
        let [x, y, z] = self.dims;
        2.0 * (x * y + x * z + y * z)
    }

    /// True when the segment a -> b crosses the cuboid (slab test).
    pub fn segment_intersects(&self, a: [f64; 3], b: [f64; 3]) -> bool {
        let lo = self.min_corner();
        let hi = self.max_corner();
        let mut t_min = 0.0f64;
        let mut t_max = 1.0f64;
        for axis in 0..3 {
            let d = b[axis] - a[axis];
            if d.abs() < 1e-12 {
                if a[axis] < lo[axis] || a[axis] > hi[axis] {
                    return false;
                }
            } else {
                let mut t1 = (lo[axis] - a[axis]) / d;
                let mut t2 = (hi[axis] - a[axis]) / d;
                if t1 > t2 {
                    std::mem::swap(&mut t1, &mut t2);
                }
                t_min = t_min.max(t1);
                t_max = t_max.min(t2);
                if t_min > t_max {
                    return false;
                }
            }
        }
        true
    }
}

/// A classified object on the road.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneObject {
    pub class: ObjectClass,
    pub bbox: BoundingBox,
}

/// Region of interest of one CAV: a closed rectangle spanning the road width.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoIRect {
    pub cav: usize,
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl RoIRect {
    pub fn contains(&self, p: [f64; 3]) -> bool {
        p[0] >= self.x_min && p[0] <= self.x_max && p[1] >= self.y_min && p[1] <= self.y_max
    }
}

/// One sensing task: classify `object` for `cav`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Task {
    pub object: usize,
    pub cav: usize,
}

/// Binary membership matrix: `rows[k][m-1]` says whether object k lies in
/// the RoI of CAV m.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoIMatrix {
    pub cav_count: usize,
    pub rows: Vec<Vec<bool>>,
}

impl RoIMatrix {
    pub fn object_count(&self) -> usize {
        self.rows.len()
    }

    /// Membership of object `k` in the RoI of CAV `m` (1-based CAV id).
    pub fn contains(&self, object: usize, cav: usize) -> bool {
        self.rows[object][cav - 1]
    }

    /// The CAV ids that need object `k` processed.
    pub fn object_cavs(&self, object: usize) -> Result<Vec<usize>> {
        let row = self.rows.get(object).ok_or_else(|| {
            Error::IndexOutOfRange(format!(
                "object {object} (scenario has {} objects)",
                self.rows.len()
            ))
        })?;
        Ok(row
            .iter()
            .enumerate()
            .filter_map(|(i, &inside)| inside.then_some(i + 1))
            .collect())
    }

    /// All tasks in lexicographic (object, cav) order.
    pub fn tasks(&self) -> Vec<Task> {
        let mut tasks = Vec::new();
        for (k, row) in self.rows.iter().enumerate() {
            for (i, &inside) in row.iter().enumerate() {
                if inside {
                    tasks.push(Task {
                        object: k,
                        cav: i + 1,
                    });
                }
            }
        }
        tasks
    }
}

/// The immutable world shared by every downstream stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub road: RoadSegment,
    /// Node 0 is the RSU, nodes 1..=M are CAVs.
    pub nodes: Vec<NodeSpec>,
    pub objects: Vec<SceneObject>,
    /// RoI rectangle per CAV, index m-1.
    pub rois: Vec<RoIRect>,
    pub membership: RoIMatrix,
    pub seed: u64,
}

/// Versioned on-disk wrapper for scenario replay files.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct ScenarioFile {
    schema_version: u32,
    scenario: Scenario,
}

impl Scenario {
    pub fn cav_count(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn object_count(&self) -> usize {
        self.objects.len()
    }

    pub fn rsu(&self) -> &NodeSpec {
        &self.nodes[0]
    }

    pub fn cav(&self, m: usize) -> &NodeSpec {
        &self.nodes[m]
    }

    pub fn cavs(&self) -> impl Iterator<Item = &NodeSpec> {
        self.nodes[1..].iter()
    }

    /// Versioned, self-describing text rendering for replay.
    pub fn to_toml_string(&self) -> String {
        let file = ScenarioFile {
            schema_version: SCENARIO_SCHEMA_VERSION,
            scenario: self.clone(),
        };
        toml::to_string_pretty(&file).expect("scenario serializes")
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let file: ScenarioFile =
            toml::from_str(text).map_err(|e| Error::Config(format!("scenario file: {e}")))?;
        if file.schema_version != SCENARIO_SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "unsupported scenario schema_version {} (expected {})",
                file.schema_version, SCENARIO_SCHEMA_VERSION
            )));
        }
        file.scenario.validate()?;
        Ok(file.scenario)
    }

    pub fn validate(&self) -> Result<()> {
        if self.nodes.is_empty() || self.nodes[0].kind != NodeKind::Rsu {
            return Err(Error::Config("node 0 must be the RSU".into()));
        }
        if self.nodes[1..].iter().any(|n| n.kind != NodeKind::Cav) {
            return Err(Error::Config("exactly one RSU allowed, at node 0".into()));
        }
        for (i, node) in self.nodes.iter().enumerate() {
            if node.id != i {
                return Err(Error::Config(format!(
                    "node ids must be contiguous, got {}",
                    node.id
                )));
            }
            if !crate::config::finite_positive(node.compute_capacity_hz) {
                return Err(Error::Config(format!(
                    "node {} has no compute capacity",
                    node.id
                )));
            }
        }
        for (k, obj) in self.objects.iter().enumerate() {
            if !obj
                .bbox
                .dims
                .iter()
                .all(|d| crate::config::finite_positive(*d))
            {
                return Err(Error::Config(format!(
                    "object {k} has non-positive dimensions"
                )));
            }
            let c = obj.bbox.center;
            if c[0] < 0.0 || c[0] > self.road.length_m || c[1] < 0.0 || c[1] > self.road.width_m {
                return Err(Error::Config(format!(
                    "object {k} lies outside the road extent"
                )));
            }
        }
        if self.rois.len() != self.cav_count()
            || self.membership.cav_count != self.cav_count()
            || self.membership.object_count() != self.object_count()
            || self
                .membership
                .rows
                .iter()
                .any(|r| r.len() != self.cav_count())
        {
            return Err(Error::Config(
                "RoI data does not match node/object counts".into(),
            ));
        }
        Ok(())
    }
}

/// RoI rectangle of a CAV: `r_behind` meters behind the sensor, `r_ahead`
/// ahead of it (by travel direction), spanning the full road width.
pub fn compute_roi(
    cav: &NodeSpec,
    road: &RoadSegment,
    r_behind: f64,
    r_ahead: f64,
) -> Result<RoIRect> {
    if cav.kind != NodeKind::Cav {
        return Err(Error::InvalidArgument(format!(
            "compute_roi called on node {} which is not a CAV",
            cav.id
        )));
    }
    if r_behind < 0.0 || r_ahead < 0.0 {
        return Err(Error::InvalidArgument(
            "RoI extents must be non-negative".into(),
        ));
    }
    let heading = cav.heading.unwrap_or(Heading::PosX);
    let x = cav.position[0];
    let (x_min, x_max) = match heading {
        Heading::PosX => (x - r_behind, x + r_ahead),
        Heading::NegX => (x - r_ahead, x + r_behind),
    };
    Ok(RoIRect {
        cav: cav.id,
        x_min,
        x_max,
        y_min: 0.0,
        y_max: road.width_m,
    })
}

/// Recompute the membership matrix from the scenario's objects and RoIs.
/// Inclusion uses the bounding-box center point.
pub fn compute_membership(scenario: &Scenario) -> RoIMatrix {
    membership_from_parts(&scenario.objects, &scenario.rois, scenario.cav_count())
}

fn membership_from_parts(objects: &[SceneObject], rois: &[RoIRect], cav_count: usize) -> RoIMatrix {
    let rows = objects
        .iter()
        .map(|obj| {
            rois.iter()
                .map(|roi| roi.contains(obj.bbox.center))
                .collect()
        })
        .collect();
    RoIMatrix { cav_count, rows }
}

/// Pick a (lane, x) pair keeping `MIN_LANE_GAP_M` from entities already in
/// the same lane. `occupied` holds (lane, x) of everything placed so far.
fn place_in_lane(
    rng: &mut ChaCha8Rng,
    road: &RoadSegment,
    occupied: &[(usize, f64)],
    half_length: f64,
    attempts: usize,
) -> Result<(usize, f64)> {
    let lo = half_length + 0.1;
    let hi = road.length_m - half_length - 0.1;
    if lo >= hi {
        return Err(Error::Config(
            "road too short for the requested entities".into(),
        ));
    }
    for _ in 0..attempts {
        let lane = rng.gen_range(0..road.lane_count);
        let x = rng.gen_range(lo..hi);
        let clear = occupied
            .iter()
            .all(|&(l, ox)| l != lane || (x - ox).abs() >= MIN_LANE_GAP_M);
        if clear {
            return Ok((lane, x));
        }
    }
    Err(Error::Config(format!(
        "placement failed after {attempts} attempts; road too small for the requested object count"
    )))
}

/// Generate the world deterministically from (config, seed): RSU, CAVs in
/// lanes, non-overlapping objects on lane centerlines, and the membership
/// matrix.
pub fn generate_scenario(cfg: &ScenarioConfig, seed: u64) -> Result<Scenario> {
    cfg.validate()?;
    let road = RoadSegment {
        length_m: cfg.road_length_m,
        width_m: cfg.road_width_m,
        lane_count: cfg.lane_count,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut nodes = Vec::with_capacity(cfg.cav_count + 1);
    nodes.push(NodeSpec {
        id: 0,
        kind: NodeKind::Rsu,
        position: [road.length_m / 2.0, -1.0, cfg.rsu_sensor_height_m],
        heading: None,
        compute_capacity_hz: cfg.rsu_compute_ghz * 1e9,
        transmit_power_w: None,
        channel_gain: None,
    });

    // CAVs occupy lanes like car-sized entities.
    let mut occupied: Vec<(usize, f64)> = Vec::new();
    let car_half_length = ObjectClass::Car.dims()[0] / 2.0;
    for m in 1..=cfg.cav_count {
        let (lane, x) = place_in_lane(
            &mut rng,
            &road,
            &occupied,
            car_half_length,
            cfg.placement_attempts,
        )?;
        occupied.push((lane, x));
        nodes.push(NodeSpec {
            id: m,
            kind: NodeKind::Cav,
            position: [x, road.lane_center_y(lane), cfg.cav_sensor_height_m],
            heading: Some(road.lane_heading(lane)),
            compute_capacity_hz: cfg.cav_compute_ghz * 1e9,
            transmit_power_w: Some(cfg.cav_tx_power_w),
            channel_gain: Some(cfg.cav_channel_gain),
        });
    }

    let mut objects = Vec::with_capacity(cfg.object_count);
    for _ in 0..cfg.object_count {
        let class = ObjectClass::ALL[rng.gen_range(0..ObjectClass::ALL.len())];
        let dims = class.dims();
        let (lane, x) = place_in_lane(
            &mut rng,
            &road,
            &occupied,
            dims[0] / 2.0,
            cfg.placement_attempts,
        )?;
        occupied.push((lane, x));
        objects.push(SceneObject {
            class,
            bbox: BoundingBox::new([x, road.lane_center_y(lane), dims[2] / 2.0], dims),
        });
    }

    let rois = nodes[1..]
        .iter()
        .map(|cav| compute_roi(cav, &road, cfg.roi_behind_m, cfg.roi_ahead_m))
        .collect::<Result<Vec<_>>>()?;
    let membership = membership_from_parts(&objects, &rois, cfg.cav_count);

    let scenario = Scenario {
        road,
        nodes,
        objects,
        rois,
        membership,
        seed,
    };
    scenario.validate()?;
    Ok(scenario)
}
