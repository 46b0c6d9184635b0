//! Processing model: per-(object, node) cycle demands, the multiplicity of
//! each demand in the objective, the exact closed-form CPU-share
//! allocation, and the resulting computation times.
//!
//! Per node, minimizing the weighted sum of `weight / share` over shares
//! that sum to one has the exact solution `share_i = sqrt(w_i) / sum_j
//! sqrt(w_j)`; demands that carry zero weight are excluded and get no
//! share.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scenario::{RoIMatrix, Task};
use crate::sensing::FusedData;

/// Cycles needed to process one fused data set.
pub fn compute_demand(fused: &FusedData, cycles_per_point: u64) -> u64 {
    demand_for_count(fused.len() as u64, cycles_per_point)
}

/// Cycles needed for `point_count` fused points.
pub fn demand_for_count(point_count: u64, cycles_per_point: u64) -> u64 {
    cycles_per_point * point_count
}

/// How many CAVs wait on each per-node demand: 1 for a task kept local,
/// and the number of offloading CAVs for an object processed at the RSU.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TimeFactors {
    /// Per task (aligned with the task list): 1 when local, 0 when offloaded.
    pub local: Vec<u32>,
    /// Per object: number of CAVs that offloaded it.
    pub rsu: Vec<u32>,
}

/// Derive the time factors from the membership matrix and a placement
/// (`offloaded` aligned with `roi.tasks()`).
pub fn time_factors(roi: &RoIMatrix, offloaded: &[bool]) -> TimeFactors {
    let tasks = roi.tasks();
    debug_assert_eq!(tasks.len(), offloaded.len());
    let mut rsu = vec![0u32; roi.object_count()];
    let mut local = Vec::with_capacity(tasks.len());
    for (task, &off) in tasks.iter().zip(offloaded) {
        if off {
            rsu[task.object] += 1;
            local.push(0);
        } else {
            local.push(1);
        }
    }
    TimeFactors { local, rsu }
}

/// One demand on a node: the object, its multiplicity in the objective,
/// and the cycles it needs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoadItem {
    pub object: usize,
    pub multiplicity: u32,
    pub cycles: u64,
}

impl LoadItem {
    pub fn weight(&self) -> f64 {
        f64::from(self.multiplicity) * self.cycles as f64
    }
}

/// All demands placed on one node.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeLoad {
    pub node: usize,
    pub items: Vec<LoadItem>,
}

/// CPU share of one (node, object) pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComputeShare {
    pub node: usize,
    pub object: usize,
    pub fraction: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ComputeAllocation {
    pub shares: Vec<ComputeShare>,
}

impl ComputeAllocation {
    pub fn get(&self, node: usize, object: usize) -> Option<f64> {
        self.shares
            .iter()
            .find(|s| s.node == node && s.object == object)
            .map(|s| s.fraction)
    }

    /// Sum of shares handed out on one node.
    pub fn node_total(&self, node: usize) -> f64 {
        self.shares
            .iter()
            .filter(|s| s.node == node)
            .map(|s| s.fraction)
            .sum()
    }
}

/// Exact optimal CPU split per node: shares proportional to the square
/// root of `multiplicity * cycles`. Zero-weight items are skipped; nodes
/// whose demands are all zero emit nothing.
pub fn optimal_compute_allocation(loads: &[NodeLoad]) -> ComputeAllocation {
    let mut shares = Vec::new();
    for load in loads {
        let roots: Vec<f64> = load.items.iter().map(|it| it.weight().sqrt()).collect();
        let denom: f64 = roots.iter().sum();
        if denom <= 0.0 {
            continue;
        }
        for (item, root) in load.items.iter().zip(&roots) {
            if *root > 0.0 {
                shares.push(ComputeShare {
                    node: load.node,
                    object: item.object,
                    fraction: root / denom,
                });
            }
        }
    }
    ComputeAllocation { shares }
}

/// Even split baseline: every loaded item on a node gets the same share.
pub fn even_compute_allocation(loads: &[NodeLoad]) -> ComputeAllocation {
    let mut shares = Vec::new();
    for load in loads {
        let loaded: Vec<&LoadItem> = load.items.iter().filter(|it| it.weight() > 0.0).collect();
        if loaded.is_empty() {
            continue;
        }
        let fraction = 1.0 / loaded.len() as f64;
        for item in loaded {
            shares.push(ComputeShare {
                node: load.node,
                object: item.object,
                fraction,
            });
        }
    }
    ComputeAllocation { shares }
}

/// Computation time of every task. Local tasks use their own node's fused
/// demand; offloaded tasks of one object all report the identical RSU time.
/// `local_demand` is aligned with `tasks`; `rsu_demand` is per object;
/// `capacity_hz` is per node id.
pub fn computation_times(
    tasks: &[Task],
    offloaded: &[bool],
    local_demand: &[u64],
    rsu_demand: &[u64],
    allocation: &ComputeAllocation,
    capacity_hz: &[f64],
) -> Result<Vec<f64>> {
    debug_assert_eq!(tasks.len(), offloaded.len());
    debug_assert_eq!(tasks.len(), local_demand.len());
    let mut times = Vec::with_capacity(tasks.len());
    for (i, task) in tasks.iter().enumerate() {
        let (node, cycles) = if offloaded[i] {
            (0usize, rsu_demand[task.object])
        } else {
            (task.cav, local_demand[i])
        };
        if cycles == 0 {
            times.push(0.0);
            continue;
        }
        let fraction = allocation.get(node, task.object).unwrap_or(0.0);
        if !crate::config::finite_positive(fraction) {
            return Err(Error::Infeasible(format!(
                "object {} needs {} cycles on node {} but holds no CPU share",
                task.object, cycles, node
            )));
        }
        times.push(cycles as f64 / (fraction * capacity_hz[node]));
    }
    Ok(times)
}
