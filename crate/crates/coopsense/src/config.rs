//! Experiment configuration: TOML-backed sections with built-in defaults.
//!
//! Every field can be overridden from a config file; omitted sections and
//! fields fall back to the defaults below, so a partial file such as
//!
//! ```toml
//! [scenario]
//! object_count = 12
//!
//! [accuracy]
//! threshold = 0.9
//! ```
//!
//! is a complete configuration.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Schema version accepted by [`ExperimentConfig::from_toml_str`].
pub const CONFIG_SCHEMA_VERSION: u32 = 1;

/// Finite and strictly positive; NaN and infinities fail.
pub(crate) fn finite_positive(x: f64) -> bool {
    x.is_finite() && x > 0.0
}

/// Finite and non-negative; NaN and infinities fail.
pub(crate) fn finite_non_negative(x: f64) -> bool {
    x.is_finite() && x >= 0.0
}

/// Top-level configuration for scenario generation, the system model,
/// the solver, and the experiment runners.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub scenario: ScenarioConfig,
    pub sensing: SensingConfig,
    pub accuracy: AccuracyConfig,
    pub link: LinkConfig,
    pub compute: ComputeConfig,
    pub gibbs: GibbsConfig,
    pub experiment: ExperimentSection,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            schema_version: CONFIG_SCHEMA_VERSION,
            scenario: ScenarioConfig::default(),
            sensing: SensingConfig::default(),
            accuracy: AccuracyConfig::default(),
            link: LinkConfig::default(),
            compute: ComputeConfig::default(),
            gibbs: GibbsConfig::default(),
            experiment: ExperimentSection::default(),
        }
    }
}

/// Static world generation parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    /// Road segment length in meters.
    pub road_length_m: f64,
    /// Road width in meters (the RoI rectangle spans the full width).
    pub road_width_m: f64,
    /// Number of lanes; the lower half heads +x, the upper half -x.
    pub lane_count: usize,
    /// Number of CAVs (M).
    pub cav_count: usize,
    /// Number of objects to classify (K).
    pub object_count: usize,
    /// RoI extent behind the CAV, in meters.
    pub roi_behind_m: f64,
    /// RoI extent ahead of the CAV, in meters.
    pub roi_ahead_m: f64,
    /// CAV compute capacity in GHz.
    pub cav_compute_ghz: f64,
    /// RSU edge server capacity in GHz.
    pub rsu_compute_ghz: f64,
    /// Uplink transmit power per CAV, watts.
    pub cav_tx_power_w: f64,
    /// Uplink channel gain per CAV (dimensionless).
    pub cav_channel_gain: f64,
    /// Height of the CAV roof LiDAR, meters.
    pub cav_sensor_height_m: f64,
    /// Height of the RSU LiDAR, meters.
    pub rsu_sensor_height_m: f64,
    /// Bounded retries for non-overlapping placement before giving up.
    pub placement_attempts: usize,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            road_length_m: 50.0,
            road_width_m: 14.0,
            lane_count: 4,
            cav_count: 3,
            object_count: 7,
            roi_behind_m: 20.0,
            roi_ahead_m: 20.0,
            cav_compute_ghz: 10.0,
            rsu_compute_ghz: 200.0,
            cav_tx_power_w: 0.1,
            cav_channel_gain: 1e-12,
            cav_sensor_height_m: 1.7,
            rsu_sensor_height_m: 6.0,
            placement_attempts: 1000,
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        if !finite_positive(self.road_length_m) || !finite_positive(self.road_width_m) {
            return Err(Error::Config("road dimensions must be positive".into()));
        }
        if self.lane_count == 0 {
            return Err(Error::Config("lane_count must be at least 1".into()));
        }
        if self.cav_count == 0 {
            return Err(Error::Config("cav_count must be at least 1".into()));
        }
        if !finite_non_negative(self.roi_behind_m) || !finite_non_negative(self.roi_ahead_m) {
            return Err(Error::Config("RoI extents must be non-negative".into()));
        }
        if !finite_positive(self.cav_compute_ghz) || !finite_positive(self.rsu_compute_ghz) {
            return Err(Error::Config("compute capacities must be positive".into()));
        }
        if !finite_positive(self.cav_tx_power_w) || !finite_positive(self.cav_channel_gain) {
            return Err(Error::Config(
                "transmit power and channel gain must be positive".into(),
            ));
        }
        if !finite_positive(self.cav_sensor_height_m) || !finite_positive(self.rsu_sensor_height_m)
        {
            return Err(Error::Config("sensor heights must be positive".into()));
        }
        if self.placement_attempts == 0 {
            return Err(Error::Config(
                "placement_attempts must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// Point cloud synthesis parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SensingConfig {
    /// Segments per axis of the per-object occupancy grid (J).
    pub grid_resolution: u32,
    /// Reference point density: expected points on a 1 m^2 face at 1 m range
    /// scale, i.e. expected count = density_ref * visible_area / distance^2.
    pub density_ref: f64,
    /// Hard cap on points per object per sensor.
    pub max_points_per_object: usize,
    /// Multiplier applied to the expected count when the line of sight to the
    /// object center crosses another object's box. 1.0 disables occlusion.
    pub occlusion_factor: f64,
}

impl Default for SensingConfig {
    fn default() -> Self {
        Self {
            grid_resolution: 3,
            density_ref: 2000.0,
            max_points_per_object: 4096,
            occlusion_factor: 0.1,
        }
    }
}

impl SensingConfig {
    pub fn validate(&self) -> Result<()> {
        if self.grid_resolution == 0 {
            return Err(Error::Config("grid_resolution must be at least 1".into()));
        }
        if !finite_non_negative(self.density_ref) {
            return Err(Error::Config("density_ref must be non-negative".into()));
        }
        if !(0.0..=1.0).contains(&self.occlusion_factor) {
            return Err(Error::Config("occlusion_factor must lie in [0, 1]".into()));
        }
        Ok(())
    }
}

/// Which accuracy model backs the constraint.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AccuracyModelKind {
    /// Monotone parametric surrogate (default).
    Surrogate,
    /// Nearest-entry lookup table loaded from `table_path`.
    Table,
}

/// Accuracy model parameters and the per-CAV constraint threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AccuracyConfig {
    pub model: AccuracyModelKind,
    /// Required per-CAV mean accuracy (A).
    pub threshold: f64,
    /// Surrogate output when the fused grid is empty.
    pub a_floor: f64,
    /// Surrogate output at full coverage and saturated density.
    pub a_ceil: f64,
    /// Weight of occupied-bin coverage; coverage_weight + density_weight = 1.
    pub coverage_weight: f64,
    /// Weight of the point-density term.
    pub density_weight: f64,
    /// Density saturates at density_saturation points per m^2 of box surface.
    pub density_saturation: f64,
    /// Lookup table file for the table model.
    pub table_path: Option<PathBuf>,
}

impl Default for AccuracyConfig {
    fn default() -> Self {
        Self {
            model: AccuracyModelKind::Surrogate,
            threshold: 0.85,
            a_floor: 0.3,
            a_ceil: 0.99,
            coverage_weight: 0.6,
            density_weight: 0.4,
            density_saturation: 8.0,
            table_path: None,
        }
    }
}

impl AccuracyConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.threshold) {
            return Err(Error::Config(
                "accuracy threshold must lie in [0, 1]".into(),
            ));
        }
        if !(0.0 <= self.a_floor && self.a_floor < self.a_ceil && self.a_ceil <= 1.0) {
            return Err(Error::Config("need 0 <= a_floor < a_ceil <= 1".into()));
        }
        if self.coverage_weight < 0.0 || self.density_weight < 0.0 {
            return Err(Error::Config(
                "accuracy weights must be non-negative".into(),
            ));
        }
        if (self.coverage_weight + self.density_weight - 1.0).abs() > 1e-9 {
            return Err(Error::Config(
                "coverage_weight + density_weight must equal 1".into(),
            ));
        }
        if !finite_positive(self.density_saturation) {
            return Err(Error::Config("density_saturation must be positive".into()));
        }
        if self.model == AccuracyModelKind::Table && self.table_path.is_none() {
            return Err(Error::Config("table model requires table_path".into()));
        }
        Ok(())
    }
}

/// Uplink channel parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LinkConfig {
    /// Total uplink bandwidth in Hz (B).
    pub bandwidth_hz: f64,
    /// Bandwidth of one subcarrier in Hz (B_s); B must be a multiple.
    pub subcarrier_bandwidth_hz: f64,
    /// Noise power spectral density, W/Hz.
    pub noise_psd_w_per_hz: f64,
    /// Encoded size of one observation point in bits.
    pub bits_per_point: u64,
    /// Duration of the RSU data broadcast, seconds.
    pub broadcast_time_s: f64,
}

impl Default for LinkConfig {
    fn default() -> Self {
        Self {
            bandwidth_hz: 20e6,
            subcarrier_bandwidth_hz: 1e6,
            noise_psd_w_per_hz: 4e-21,
            bits_per_point: 96,
            broadcast_time_s: 5e-3,
        }
    }
}

impl LinkConfig {
    pub fn validate(&self) -> Result<()> {
        if !finite_positive(self.subcarrier_bandwidth_hz) || !finite_positive(self.bandwidth_hz) {
            return Err(Error::Config("bandwidths must be positive".into()));
        }
        let ratio = self.bandwidth_hz / self.subcarrier_bandwidth_hz;
        if (ratio - ratio.round()).abs() > 1e-6 || ratio.round() < 1.0 {
            return Err(Error::Config(
                "bandwidth_hz must be a positive integer multiple of subcarrier_bandwidth_hz"
                    .into(),
            ));
        }
        if !finite_positive(self.noise_psd_w_per_hz) {
            return Err(Error::Config("noise_psd_w_per_hz must be positive".into()));
        }
        if self.bits_per_point == 0 {
            return Err(Error::Config("bits_per_point must be positive".into()));
        }
        if !finite_non_negative(self.broadcast_time_s) {
            return Err(Error::Config(
                "broadcast_time_s must be non-negative".into(),
            ));
        }
        Ok(())
    }

    /// Number of subcarriers, B / B_s.
    pub fn total_subcarriers(&self) -> u32 {
        (self.bandwidth_hz / self.subcarrier_bandwidth_hz).round() as u32
    }
}

/// Processing cost model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ComputeConfig {
    /// CPU cycles needed per point of fused data.
    pub cycles_per_point: u64,
}

impl Default for ComputeConfig {
    fn default() -> Self {
        Self {
            cycles_per_point: 50_000,
        }
    }
}

impl ComputeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.cycles_per_point == 0 {
            return Err(Error::Config("cycles_per_point must be positive".into()));
        }
        Ok(())
    }
}

/// Gibbs sampler parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GibbsConfig {
    /// Smoothing temperature balancing exploration and exploitation.
    pub tau: f64,
    /// Maximum number of iterations (T).
    pub max_iters: usize,
    /// Stop early after this many iterations without a best-so-far improvement.
    pub stall_window: usize,
    /// Seed for the sampler chain.
    pub seed: u64,
}

impl Default for GibbsConfig {
    fn default() -> Self {
        Self {
            tau: 1e-4,
            max_iters: 2000,
            stall_window: 300,
            seed: 1,
        }
    }
}

impl GibbsConfig {
    pub fn validate(&self) -> Result<()> {
        if !finite_positive(self.tau) {
            return Err(Error::Config("tau must be positive".into()));
        }
        if self.max_iters == 0 {
            return Err(Error::Config("max_iters must be at least 1".into()));
        }
        Ok(())
    }
}

/// Experiment sweep definitions used by the CLI runners.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentSection {
    /// Temperatures for the convergence experiment.
    pub tau_list: Vec<f64>,
    /// CAV compute candidates (GHz) for the completion-time sweep.
    pub cav_compute_sweep_ghz: Vec<f64>,
    /// Seeds evaluated by the sweep runners.
    pub seeds: Vec<u64>,
    /// Output directory; the CLI flag and COOPSENSE_OUT override it.
    pub output_dir: Option<PathBuf>,
}

impl Default for ExperimentSection {
    fn default() -> Self {
        Self {
            tau_list: vec![1e-3, 1e-4, 1e-5, 1e-6],
            cav_compute_sweep_ghz: vec![2.5, 2.0, 7.5, 10.0, 12.5, 15.0],
            seeds: vec![1, 2, 3],
            output_dir: None,
        }
    }
}

impl ExperimentSection {
    pub fn validate(&self) -> Result<()> {
        if self.tau_list.is_empty() || !self.tau_list.iter().all(|t| finite_positive(*t)) {
            return Err(Error::Config(
                "tau_list must be non-empty and positive".into(),
            ));
        }
        if self.cav_compute_sweep_ghz.is_empty()
            || !self
                .cav_compute_sweep_ghz
                .iter()
                .all(|f| finite_positive(*f))
        {
            return Err(Error::Config(
                "cav_compute_sweep_ghz must be non-empty and positive".into(),
            ));
        }
        if self.seeds.is_empty() {
            return Err(Error::Config("seeds must be non-empty".into()));
        }
        Ok(())
    }
}

impl ExperimentConfig {
    /// Parse a TOML string, apply defaults for missing fields, and validate.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig =
            toml::from_str(text).map_err(|e| Error::Config(format!("{e}")))?;
        if cfg.schema_version != CONFIG_SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "unsupported schema_version {} (expected {})",
                cfg.schema_version, CONFIG_SCHEMA_VERSION
            )));
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Load a configuration file.
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        self.scenario.validate()?;
        self.sensing.validate()?;
        self.accuracy.validate()?;
        self.link.validate()?;
        self.compute.validate()?;
        self.gibbs.validate()?;
        self.experiment.validate()?;
        Ok(())
    }

    /// Canonical TOML rendering of the full (defaults-applied) configuration.
    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    /// Stable 64-bit FNV-1a hash of the canonical rendering, for provenance.
    pub fn content_hash(&self) -> String {
        let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
        for byte in self.to_toml_string().as_bytes() {
            hash ^= u64::from(*byte);
            hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
        }
        format!("{hash:016x}")
    }
}
