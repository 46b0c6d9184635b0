//! Independent validation of solver output: every constraint is recomputed
//! from the raw placement and allocations, without reusing the planner's
//! evaluation path.

use std::collections::BTreeMap;

use crate::planner::{Instance, SolveResult};

/// Tolerance for per-node CPU share sums; the closed form is exact up to
/// floating round-off.
pub const SHARE_SUM_TOL: f64 = 1e-12;
/// Relative tolerance when re-deriving the reported objective.
pub const OBJECTIVE_TOL: f64 = 1e-9;

/// Re-derive every constraint from raw (E, B, V). Returns human-readable
/// violation descriptions; an empty list means the solution is valid.
pub fn validate_solution(instance: &Instance, result: &SolveResult) -> Vec<String> {
    let mut violations = Vec::new();
    let scenario = &instance.scenario;
    let tasks = scenario.membership.tasks();

    // The placement must label exactly the task set.
    if result.placement.tasks() != tasks.as_slice() {
        violations.push("placement is not defined exactly on the scenario task set".into());
        return violations;
    }

    // Subcarrier constraints: integer counts within [0, B/Bs], full
    // bandwidth spent when at least one flow exists, and the allocation
    // keyed exactly by the offloaded tasks.
    let total = instance.link.total_subcarriers;
    let offloaded: Vec<(usize, usize)> = tasks
        .iter()
        .enumerate()
        .filter(|(i, _)| result.placement.is_offloaded(*i))
        .map(|(_, t)| (t.object, t.cav))
        .collect();
    let allocated: Vec<(usize, usize)> = result
        .subcarriers
        .entries
        .iter()
        .map(|e| (e.object, e.cav))
        .collect();
    let mut offloaded_sorted = offloaded.clone();
    offloaded_sorted.sort_unstable();
    let mut allocated_sorted = allocated.clone();
    allocated_sorted.sort_unstable();
    if offloaded_sorted != allocated_sorted {
        violations.push("subcarrier allocation does not cover exactly the offloaded flows".into());
        // the remaining checks key into the allocation; stop here
        return violations;
    }
    for e in &result.subcarriers.entries {
        if e.subcarriers > total {
            violations.push(format!(
                "flow (object {}, cav {}) holds {} subcarriers, above the cap {}",
                e.object, e.cav, e.subcarriers, total
            ));
        }
    }
    if !result.subcarriers.entries.is_empty() && result.subcarriers.total() != total {
        violations.push(format!(
            "allocated subcarriers sum to {} instead of {}",
            result.subcarriers.total(),
            total
        ));
    }

    // CPU share constraints: each share in [0, 1], per-node sums within
    // 1 + round-off, and positive shares exactly where demands exist.
    let mut node_sums: BTreeMap<usize, f64> = BTreeMap::new();
    for s in &result.compute.shares {
        if !(s.fraction >= 0.0 && s.fraction <= 1.0) {
            violations.push(format!(
                "CPU share of object {} on node {} is {} (outside [0, 1])",
                s.object, s.node, s.fraction
            ));
        }
        *node_sums.entry(s.node).or_insert(0.0) += s.fraction;
    }
    for (node, sum) in &node_sums {
        if *sum > 1.0 + SHARE_SUM_TOL {
            violations.push(format!("node {node} hands out {sum} of its CPU"));
        }
    }

    // Accuracy constraint: recompute per-task accuracies from the grids and
    // the model, then check every CAV's mean against the threshold.
    let report = instance.accuracy_report(&result.placement);
    for (idx, mean) in report.cav_means.iter().enumerate() {
        if let Some(mean) = mean {
            if *mean < instance.threshold {
                violations.push(format!(
                    "CAV {} mean accuracy {} is below the threshold {}",
                    idx + 1,
                    mean,
                    instance.threshold
                ));
            }
        }
    }
    for value in report.per_task.iter().map(|t| t.value) {
        if !(0.0..=1.0).contains(&value) {
            violations.push(format!("task accuracy {value} outside [0, 1]"));
        }
    }

    // Objective: re-derive the completion time of every task from raw
    // allocations with inline arithmetic.
    let mut flow_seconds: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    for e in &result.subcarriers.entries {
        let idx = tasks
            .iter()
            .position(|t| t.object == e.object && t.cav == e.cav)
            .expect("allocation keys checked above");
        let bits = instance.size_bits()[idx] as f64;
        let per_subcarrier =
            instance.link.subcarrier_bandwidth_hz * (1.0 + instance.link.snr(e.cav)).log2();
        let seconds = if bits == 0.0 {
            0.0
        } else {
            bits / (f64::from(e.subcarriers) * per_subcarrier)
        };
        flow_seconds.insert((e.object, e.cav), seconds);
    }
    let mut delta = 0.0f64;
    for (i, task) in tasks.iter().enumerate() {
        let comm = if result.placement.is_offloaded(i) {
            let barrier = flow_seconds
                .iter()
                .filter(|((k, _), _)| *k == task.object)
                .map(|(_, s)| *s)
                .fold(0.0, f64::max);
            instance.broadcast_s + barrier
        } else {
            instance.broadcast_s
        };
        let (node, cycles) = if result.placement.is_offloaded(i) {
            (
                0,
                rsu_fused_demand(instance, task.object, &result.placement),
            )
        } else {
            (task.cav, local_fused_demand(instance, i))
        };
        let comp = if cycles == 0 {
            0.0
        } else {
            match result.compute.get(node, task.object) {
                Some(f) if f > 0.0 => {
                    cycles as f64 / (f * instance.scenario.nodes[node].compute_capacity_hz)
                }
                _ => {
                    violations.push(format!(
                        "object {} needs cycles on node {node} but holds no CPU share",
                        task.object
                    ));
                    0.0
                }
            }
        };
        delta += comm + comp;
    }
    if (delta - result.delta).abs() > OBJECTIVE_TOL * result.delta.max(1e-12) {
        violations.push(format!(
            "reported objective {} differs from the re-derived {}",
            result.delta, delta
        ));
    }

    // Trace sanity: the best-so-far column never rises.
    for w in result.trace.windows(2) {
        if w[1].best > w[0].best * (1.0 + 1e-12) + f64::EPSILON {
            violations.push(format!(
                "best-so-far rises at iteration {}: {} -> {}",
                w[1].iteration, w[0].best, w[1].best
            ));
            break;
        }
    }

    violations
}

/// Cycles the RSU needs for `object` under `placement`.
fn rsu_fused_demand(
    instance: &Instance,
    object: usize,
    placement: &crate::planner::PlacementDecision,
) -> u64 {
    let tasks = instance.scenario.membership.tasks();
    let mut count = instance.rsu_count(object);
    for (i, task) in tasks.iter().enumerate() {
        if task.object == object && placement.is_offloaded(i) {
            count += instance.own_count(i);
        }
    }
    count * instance.cycles_per_point
}

/// Cycles a CAV needs for its local task `index`.
fn local_fused_demand(instance: &Instance, index: usize) -> u64 {
    let tasks = instance.scenario.membership.tasks();
    (instance.own_count(index) + instance.rsu_count(tasks[index].object))
        * instance.cycles_per_point
}
