//! Accuracy estimation: map fused data quality and bounding-box size to an
//! estimated classification accuracy, and aggregate it per CAV.
//!
//! Two interchangeable models sit behind [`AccuracyModel`]: a monotone
//! parametric surrogate (default) and a nearest-entry lookup table loaded
//! from a text file. The surrogate is non-decreasing in every grid
//! component, which makes full offloading a certificate of maximal
//! achievable accuracy.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::{AccuracyConfig, AccuracyModelKind};
use crate::error::{Error, Result};
use crate::sensing::QualityGrid;

/// Parameters of the monotone surrogate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurrogateParams {
    /// Output for an empty grid.
    pub a_floor: f64,
    /// Output at full coverage and saturated density.
    pub a_ceil: f64,
    /// Weight of occupied-bin coverage.
    pub coverage_weight: f64,
    /// Weight of the density term.
    pub density_weight: f64,
    /// Points per m^2 of box surface at which density saturates.
    pub density_saturation: f64,
}

impl SurrogateParams {
    pub fn validate(&self) -> Result<()> {
        if !(0.0 <= self.a_floor && self.a_floor < self.a_ceil && self.a_ceil <= 1.0) {
            return Err(Error::Model("need 0 <= a_floor < a_ceil <= 1".into()));
        }
        if self.coverage_weight < 0.0 || self.density_weight < 0.0 {
            return Err(Error::Model("weights must be non-negative".into()));
        }
        if (self.coverage_weight + self.density_weight - 1.0).abs() > 1e-9 {
            return Err(Error::Model("weights must sum to 1".into()));
        }
        if !crate::config::finite_positive(self.density_saturation) {
            return Err(Error::Model("density_saturation must be positive".into()));
        }
        Ok(())
    }
}

impl From<&AccuracyConfig> for SurrogateParams {
    fn from(cfg: &AccuracyConfig) -> Self {
        Self {
            a_floor: cfg.a_floor,
            a_ceil: cfg.a_ceil,
            coverage_weight: cfg.coverage_weight,
            density_weight: cfg.density_weight,
            density_saturation: cfg.density_saturation,
        }
    }
}

/// One record of the table model: a full grid, box dimensions, accuracy.
#[derive(Debug, Clone, PartialEq)]
pub struct TableEntry {
    pub counts: Vec<u32>,
    pub dims: [f64; 3],
    pub accuracy: f64,
}

/// Table-driven model: exact-match lookup first, nearest entry otherwise.
#[derive(Debug, Clone, PartialEq)]
pub struct AccuracyTable {
    entries: Vec<TableEntry>,
    grid_len: usize,
}

impl AccuracyTable {
    /// Parse the table format: one record per line, whitespace separated:
    /// J^3 bin counts, three box dimensions, accuracy. Lines starting with
    /// `#` are comments.
    pub fn from_str(text: &str, grid_resolution: u32) -> Result<Self> {
        let grid_len = (grid_resolution as usize).pow(3);
        let mut entries = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != grid_len + 4 {
                return Err(Error::Model(format!(
                    "line {}: expected {} fields ({} counts + 3 dims + accuracy), got {}",
                    lineno + 1,
                    grid_len + 4,
                    grid_len,
                    fields.len()
                )));
            }
            let parse = |s: &str| -> Result<f64> {
                s.parse::<f64>()
                    .map_err(|_| Error::Model(format!("line {}: bad number {s:?}", lineno + 1)))
            };
            let mut counts = Vec::with_capacity(grid_len);
            for field in &fields[..grid_len] {
                let v = parse(field)?;
                if v < 0.0 || v.fract() != 0.0 {
                    return Err(Error::Model(format!(
                        "line {}: counts must be non-negative integers",
                        lineno + 1
                    )));
                }
                counts.push(v as u32);
            }
            let dims = [
                parse(fields[grid_len])?,
                parse(fields[grid_len + 1])?,
                parse(fields[grid_len + 2])?,
            ];
            let accuracy = parse(fields[grid_len + 3])?;
            if !(0.0..=1.0).contains(&accuracy) {
                return Err(Error::Model(format!(
                    "line {}: accuracy outside [0, 1]",
                    lineno + 1
                )));
            }
            entries.push(TableEntry {
                counts,
                dims,
                accuracy,
            });
        }
        if entries.is_empty() {
            return Err(Error::Model("accuracy table is empty".into()));
        }
        Ok(Self { entries, grid_len })
    }

    pub fn from_path(path: &Path, grid_resolution: u32) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Model(format!("cannot read {}: {e}", path.display())))?;
        Self::from_str(&text, grid_resolution)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    fn lookup(&self, grid: &QualityGrid, dims: [f64; 3]) -> f64 {
        // exact match wins
        for e in &self.entries {
            if e.dims == dims && e.counts.as_slice() == grid.counts() {
                return e.accuracy;
            }
        }
        // otherwise the nearest entry in (counts, dims) space; ties keep
        // the first (file-order) entry
        let mut best = &self.entries[0];
        let mut best_dist = f64::INFINITY;
        for e in &self.entries {
            let mut dist = 0.0;
            for (a, b) in e.counts.iter().zip(grid.counts()) {
                let d = f64::from(*a) - f64::from(*b);
                dist += d * d;
            }
            for (a, b) in e.dims.iter().zip(&dims) {
                let d = a - b;
                dist += d * d;
            }
            if dist < best_dist {
                best_dist = dist;
                best = e;
            }
        }
        best.accuracy
    }
}

/// The pluggable accuracy estimator.
#[derive(Debug, Clone, PartialEq)]
pub enum AccuracyModel {
    Surrogate(SurrogateParams),
    Table(AccuracyTable),
}

impl AccuracyModel {
    pub fn from_config(cfg: &AccuracyConfig, grid_resolution: u32) -> Result<Self> {
        cfg.validate().map_err(|e| Error::Model(e.to_string()))?;
        match cfg.model {
            AccuracyModelKind::Surrogate => {
                let params = SurrogateParams::from(cfg);
                params.validate()?;
                Ok(AccuracyModel::Surrogate(params))
            }
            AccuracyModelKind::Table => {
                let path = cfg
                    .table_path
                    .as_ref()
                    .ok_or_else(|| Error::Model("table model requires table_path".into()))?;
                Ok(AccuracyModel::Table(AccuracyTable::from_path(
                    path,
                    grid_resolution,
                )?))
            }
        }
    }

    /// Estimated accuracy for fused data described by `grid` inside a box
    /// with the given dimensions. Always in [0, 1].
    ///
    /// Surrogate: with coverage c = occupied bins / total bins and density
    /// nu = min(1, points / (saturation * box surface area)),
    /// a = floor + (ceil - floor) * (w_cov * c + w_den * nu).
    pub fn estimate(&self, grid: &QualityGrid, dims: [f64; 3]) -> f64 {
        match self {
            AccuracyModel::Surrogate(p) => {
                let coverage = grid.occupied_bins() as f64 / grid.len() as f64;
                let [x, y, z] = dims;
                let surface = 2.0 * (x * y + x * z + y * z);
                let density =
                    (grid.total_points() as f64 / (p.density_saturation * surface)).min(1.0);
                p.a_floor
                    + (p.a_ceil - p.a_floor)
                        * (p.coverage_weight * coverage + p.density_weight * density)
            }
            AccuracyModel::Table(table) => table.lookup(grid, dims),
        }
    }
}

/// Estimate accuracy from fused data quality and the object's box size.
pub fn estimate_accuracy(model: &AccuracyModel, grid: &QualityGrid, dims: [f64; 3]) -> f64 {
    model.estimate(grid, dims)
}

/// Accuracy of a single task under some placement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TaskAccuracy {
    pub object: usize,
    pub cav: usize,
    pub value: f64,
}

/// Per-task accuracies plus the per-CAV means checked against the threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccuracyReport {
    pub per_task: Vec<TaskAccuracy>,
    /// Mean accuracy per CAV (index m-1); None when the CAV has no task.
    pub cav_means: Vec<Option<f64>>,
    pub threshold: f64,
}

impl AccuracyReport {
    pub fn new(per_task: Vec<TaskAccuracy>, cav_count: usize, threshold: f64) -> Self {
        let cav_means = (1..=cav_count)
            .map(|m| cav_mean_accuracy(&per_task, m))
            .collect();
        Self {
            per_task,
            cav_means,
            threshold,
        }
    }

    /// True when every CAV with at least one task reaches the threshold;
    /// CAVs without tasks are vacuously satisfied.
    pub fn feasible(&self) -> bool {
        self.cav_means
            .iter()
            .all(|m| m.is_none_or(|v| v >= self.threshold))
    }

    pub fn cav_mean(&self, cav: usize) -> Option<f64> {
        self.cav_means[cav - 1]
    }
}

/// Mean accuracy of CAV `m` over its tasks; None when it has none.
pub fn cav_mean_accuracy(per_task: &[TaskAccuracy], cav: usize) -> Option<f64> {
    let mut sum = 0.0;
    let mut n = 0usize;
    for t in per_task {
        if t.cav == cav {
            sum += t.value;
            n += 1;
        }
    }
    (n > 0).then(|| sum / n as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::BoundingBox;
    use crate::sensing::{quality_grid, ObjectData};
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const EPS: f64 = 1e-12;

    fn surrogate() -> AccuracyModel {
        AccuracyModel::Surrogate(SurrogateParams {
            a_floor: 0.3,
            a_ceil: 0.99,
            coverage_weight: 0.6,
            density_weight: 0.4,
            density_saturation: 8.0,
        })
    }

    fn grid_with(counts: &[(usize, u32)], j: u32) -> QualityGrid {
        let bbox = BoundingBox::new([0.5, 0.5, 0.5], [1.0, 1.0, 1.0]);
        let mut points = Vec::new();
        let step = 1.0 / j as f64;
        for &(index, count) in counts {
            let iz = index % j as usize;
            let iy = (index / j as usize) % j as usize;
            let ix = index / (j as usize * j as usize);
            let center = [
                (ix as f64 + 0.5) * step,
                (iy as f64 + 0.5) * step,
                (iz as f64 + 0.5) * step,
            ];
            for _ in 0..count {
                points.push(center);
            }
        }
        quality_grid(
            &ObjectData {
                object: 0,
                node: 0,
                points,
            },
            &bbox,
            j,
        )
        .unwrap()
    }

    #[test]
    fn empty_grid_hits_the_floor() {
        let g = QualityGrid::zero(3);
        let a = surrogate().estimate(&g, [1.0, 1.0, 1.0]);
        assert!((a - 0.3).abs() < EPS);
    }

    #[test]
    fn saturated_grid_hits_the_ceiling() {
        // unit cube: surface 6 m^2, saturation at 48 points
        let counts: Vec<(usize, u32)> = (0..27).map(|i| (i, 2)).collect();
        let g = grid_with(&counts, 3);
        assert_eq!(g.total_points(), 54);
        let a = surrogate().estimate(&g, [1.0, 1.0, 1.0]);
        assert!((a - 0.99).abs() < EPS);
    }

    #[test]
    fn surrogate_hand_value() {
        // 9 of 27 bins occupied, density ratio exactly 0.5:
        // a = 0.3 + 0.69 * (0.6/3 + 0.4*0.5) = 0.576
        let counts: Vec<(usize, u32)> = (0..9).map(|i| (i * 3, 1)).collect();
        let mut g = grid_with(&counts, 3);
        // top up one bin so the total is 24 points = half of 48
        let extra: Vec<(usize, u32)> = vec![(0, 15)];
        g = g.add(&grid_with(&extra, 3));
        assert_eq!(g.total_points(), 24);
        assert_eq!(g.occupied_bins(), 9);
        let a = surrogate().estimate(&g, [1.0, 1.0, 1.0]);
        assert!((a - 0.576).abs() < 1e-12, "got {a}");
    }

    #[test]
    fn surrogate_is_monotone_and_bounded() {
        let model = surrogate();
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for _ in 0..200 {
            let dims = [
                rng.gen_range(0.5..5.0),
                rng.gen_range(0.5..2.0),
                rng.gen_range(0.5..2.0),
            ];
            let mut base: Vec<(usize, u32)> = Vec::new();
            let mut extra: Vec<(usize, u32)> = Vec::new();
            for i in 0..27 {
                if rng.gen_bool(0.4) {
                    base.push((i, rng.gen_range(0..20)));
                }
                if rng.gen_bool(0.3) {
                    extra.push((i, rng.gen_range(0..20)));
                }
            }
            let g = grid_with(&base, 3);
            let bigger = g.add(&grid_with(&extra, 3));
            let a = model.estimate(&g, dims);
            let b = model.estimate(&bigger, dims);
            assert!(b >= a - EPS, "monotonicity violated: {a} -> {b}");
            assert!((0.3..=0.99 + EPS).contains(&a));
            assert!((0.3..=0.99 + EPS).contains(&b));
        }
    }

    #[test]
    fn cav_means() {
        let tasks = vec![
            TaskAccuracy {
                object: 0,
                cav: 1,
                value: 0.9,
            },
            TaskAccuracy {
                object: 1,
                cav: 1,
                value: 0.8,
            },
            TaskAccuracy {
                object: 2,
                cav: 1,
                value: 0.9,
            },
            TaskAccuracy {
                object: 0,
                cav: 2,
                value: 0.85,
            },
        ];
        let m1 = cav_mean_accuracy(&tasks, 1).unwrap();
        assert!((m1 - 2.6 / 3.0).abs() < EPS, "got {m1}");
        assert!((cav_mean_accuracy(&tasks, 2).unwrap() - 0.85).abs() < EPS);
        assert_eq!(cav_mean_accuracy(&tasks, 3), None);
    }

    #[test]
    fn report_feasibility_vacuous_and_boundary() {
        let tasks = vec![
            TaskAccuracy {
                object: 0,
                cav: 1,
                value: 0.87,
            },
            TaskAccuracy {
                object: 1,
                cav: 2,
                value: 0.85,
            },
        ];
        // CAV 3 has no task: vacuously satisfied; CAV 2 sits exactly on the
        // threshold, which is inclusive.
        let report = AccuracyReport::new(tasks, 3, 0.85);
        assert!(report.feasible());
        assert_eq!(report.cav_mean(3), None);

        let tasks = vec![TaskAccuracy {
            object: 0,
            cav: 1,
            value: 0.8499,
        }];
        assert!(!AccuracyReport::new(tasks, 1, 0.85).feasible());
    }

    #[test]
    fn table_exact_match_beats_nearest() {
        let mut text = String::from("# counts[8] lx ly lz accuracy\n");
        text.push_str("0 0 0 0 0 0 0 0 1.0 1.0 1.0 0.4\n");
        text.push_str("5 0 0 0 0 0 0 5 1.0 1.0 1.0 0.9\n");
        let table = AccuracyTable::from_str(&text, 2).unwrap();
        let model = AccuracyModel::Table(table);

        let exact = grid_with(&[(0, 5), (7, 5)], 2);
        assert_eq!(model.estimate(&exact, [1.0, 1.0, 1.0]), 0.9);

        // closer to the second row
        let near = grid_with(&[(0, 4), (7, 5)], 2);
        assert_eq!(model.estimate(&near, [1.0, 1.0, 1.0]), 0.9);

        // closer to the empty row
        let sparse = grid_with(&[(0, 1)], 2);
        assert_eq!(model.estimate(&sparse, [1.0, 1.0, 1.0]), 0.4);
    }

    #[test]
    fn empty_table_is_a_model_error() {
        assert!(matches!(
            AccuracyTable::from_str("# nothing here\n", 3),
            Err(Error::Model(_))
        ));
    }

    #[test]
    fn table_model_loads_from_config_path() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.tbl");
        let mut text = String::from("# 8 counts, dims, accuracy\n");
        text.push_str("0 0 0 0 0 0 0 0 1.0 1.0 1.0 0.35\n");
        text.push_str("9 9 9 9 9 9 9 9 1.0 1.0 1.0 0.95\n");
        std::fs::write(&path, text).unwrap();
        let cfg = crate::config::AccuracyConfig {
            model: crate::config::AccuracyModelKind::Table,
            table_path: Some(path),
            ..Default::default()
        };
        let model = AccuracyModel::from_config(&cfg, 2).unwrap();
        let g = grid_with(
            &[
                (0, 9),
                (1, 9),
                (2, 9),
                (3, 9),
                (4, 9),
                (5, 9),
                (6, 9),
                (7, 9),
            ],
            2,
        );
        assert_eq!(model.estimate(&g, [1.0, 1.0, 1.0]), 0.95);

        let missing = crate::config::AccuracyConfig {
            model: crate::config::AccuracyModelKind::Table,
            table_path: Some(dir.path().join("nope.tbl")),
            ..Default::default()
        };
        assert!(matches!(
            AccuracyModel::from_config(&missing, 2),
            Err(Error::Model(_))
        ));
    }

    #[test]
    fn malformed_table_lines_are_rejected() {
        assert!(matches!(
            AccuracyTable::from_str("1 2 3\n", 2),
            Err(Error::Model(_))
        ));
        assert!(matches!(
            AccuracyTable::from_str("0 0 0 0 0 0 0 0 1.0 1.0 1.0 1.5\n", 2),
            Err(Error::Model(_))
        ));
    }
}
