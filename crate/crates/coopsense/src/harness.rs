//! Experiment runners behind the CLI: single solves, the convergence sweep
//! over temperatures, the standalone-vs-cooperative accuracy comparison,
//! and the completion-time sweep over CAV compute budgets. Everything is
//! emitted as CSV plus a JSON summary, reproducible byte-for-byte from
//! (config, seed).

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, GibbsConfig};
use crate::error::{Error, Result};
use crate::oracle;
use crate::planner::{Instance, SolveResult};
use crate::scenario::generate_scenario;
use crate::validate::validate_solution;

/// Identifies the run that produced a bundle.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Provenance {
    pub config_hash: String,
    pub seeds: Vec<u64>,
    pub version: String,
}

impl Provenance {
    fn new(cfg: &ExperimentConfig, seeds: &[u64]) -> Self {
        Self {
            config_hash: cfg.content_hash(),
            seeds: seeds.to_vec(),
            version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }
}

/// Paths produced by one experiment run.
#[derive(Debug, Clone)]
pub struct ResultBundle {
    pub out_dir: PathBuf,
    pub files: Vec<PathBuf>,
    pub summary_path: PathBuf,
    pub provenance: Provenance,
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    fs::write(path, contents)?;
    Ok(())
}

fn write_summary(path: &Path, value: &serde_json::Value) -> Result<()> {
    write_file(path, &format!("{:#}\n", value))
}

fn gibbs_for_seed(cfg: &ExperimentConfig, seed: u64) -> GibbsConfig {
    GibbsConfig {
        seed,
        ..cfg.gibbs.clone()
    }
}

/// Compact label for a temperature, e.g. `1e-4`, used in file names.
fn tau_label(tau: f64) -> String {
    format!("{tau:e}")
}

/// Render the trace CSV of one solve: iteration, accepted, best.
fn trace_csv(result: &SolveResult) -> String {
    let mut out = String::from("iteration,accepted_delta_s,best_delta_s\n");
    for p in &result.trace {
        let _ = writeln!(out, "{},{},{}", p.iteration, p.accepted, p.best);
    }
    out
}

/// Render the subcarrier allocation CSV: object, cav, subcarriers, rate,
/// upload seconds.
fn subcarriers_csv(instance: &Instance, result: &SolveResult) -> String {
    let mut out = String::from("object,cav,subcarriers,rate_bps,upload_s\n");
    for e in &result.subcarriers.entries {
        let rate = crate::comm::link_rate(e.subcarriers, &instance.link, e.cav);
        let idx = instance
            .tasks()
            .iter()
            .position(|t| t.object == e.object && t.cav == e.cav)
            .expect("allocation covers offloaded tasks");
        let bits = instance.size_bits()[idx] as f64;
        let seconds = if bits == 0.0 { 0.0 } else { bits / rate };
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            e.object, e.cav, e.subcarriers, rate, seconds
        );
    }
    out
}

/// Render the CPU allocation CSV: node, object, weighted demand, share,
/// and the resulting processing time.
fn compute_csv(instance: &Instance, result: &SolveResult) -> String {
    let mut out = String::from("node,object,weighted_cycles,share,processing_s\n");
    for s in &result.compute.shares {
        let (multiplicity, cycles) = if s.node == 0 {
            let set = result.placement.rsu_set(s.object);
            let fused: u64 = instance.rsu_count(s.object)
                + instance
                    .tasks()
                    .iter()
                    .enumerate()
                    .filter(|(i, t)| t.object == s.object && result.placement.is_offloaded(*i))
                    .map(|(i, _)| instance.own_count(i))
                    .sum::<u64>();
            (set.len() as u64, fused * instance.cycles_per_point)
        } else {
            let index = instance
                .tasks()
                .iter()
                .position(|t| t.object == s.object && t.cav == s.node)
                .expect("local share belongs to a task");
            (
                1,
                (instance.own_count(index) + instance.rsu_count(s.object))
                    * instance.cycles_per_point,
            )
        };
        let seconds =
            cycles as f64 / (s.fraction * instance.scenario.nodes[s.node].compute_capacity_hz);
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            s.node,
            s.object,
            multiplicity * cycles,
            s.fraction,
            seconds
        );
    }
    out
}

/// Render the per-task breakdown CSV.
fn breakdown_csv(result: &SolveResult) -> String {
    let mut out =
        String::from("object,cav,offloaded,transmission_s,communication_s,computation_s,total_s\n");
    for t in &result.breakdown {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            t.object,
            t.cav,
            t.offloaded as u8,
            t.transmission_s,
            t.communication_s,
            t.computation_s,
            t.total_s
        );
    }
    out
}

fn accuracy_json(result: &SolveResult) -> serde_json::Value {
    serde_json::json!({
        "threshold": result.accuracy.threshold,
        "cav_means": result.accuracy.cav_means,
        "per_task": result.accuracy.per_task.iter().map(|t| {
            serde_json::json!({"object": t.object, "cav": t.cav, "accuracy": t.value})
        }).collect::<Vec<_>>(),
    })
}

/// Generate the scenario for a seed and write the versioned replay file,
/// optionally dumping each node's synthesized point cloud as one
/// `x y z` triple per line.
pub fn run_generate(
    cfg: &ExperimentConfig,
    seed: u64,
    out_dir: &Path,
    dump_clouds: bool,
) -> Result<ResultBundle> {
    let scenario = generate_scenario(&cfg.scenario, seed)?;
    let path = out_dir.join(format!("scenario_seed{seed}.toml"));
    write_file(&path, &scenario.to_toml_string())?;
    let mut cloud_files = Vec::new();
    if dump_clouds {
        let snapshot = crate::sensing::SensingSnapshot::collect(&scenario, &cfg.sensing, seed)?;
        for cloud in &snapshot.clouds {
            let cloud_path = out_dir.join(format!("cloud_seed{seed}_node{}.xyz", cloud.node));
            write_file(&cloud_path, &cloud.to_xyz_text())?;
            cloud_files.push(cloud_path);
        }
    }
    let provenance = Provenance::new(cfg, &[seed]);
    let summary_path = out_dir.join(format!("scenario_seed{seed}_summary.json"));
    write_summary(
        &summary_path,
        &serde_json::json!({
            "scenario_file": path.file_name().and_then(|s| s.to_str()),
            "nodes": scenario.nodes.len(),
            "objects": scenario.object_count(),
            "tasks": scenario.membership.tasks().len(),
            "provenance": serde_json::to_value(&provenance).unwrap(),
        }),
    )?;
    println!(
        "scenario seed {seed}: {} nodes, {} objects, {} tasks -> {}",
        scenario.nodes.len(),
        scenario.object_count(),
        scenario.membership.tasks().len(),
        path.display()
    );
    let mut files = vec![path];
    files.extend(cloud_files);
    Ok(ResultBundle {
        out_dir: out_dir.to_path_buf(),
        files,
        summary_path,
        provenance,
    })
}

/// Solve one instance end to end, validate the output, and emit the trace,
/// allocations, breakdown, and a JSON summary.
pub fn run_solve(cfg: &ExperimentConfig, seed: u64, out_dir: &Path) -> Result<ResultBundle> {
    let instance = Instance::build(cfg, seed)?;
    let result = instance.gibbs_solve(&gibbs_for_seed(cfg, seed))?;
    let violations = validate_solution(&instance, &result);
    if !violations.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "solver output failed validation: {violations:?}"
        )));
    }

    let mut files = Vec::new();
    for (name, contents) in [
        (format!("solve_seed{seed}_trace.csv"), trace_csv(&result)),
        (
            format!("solve_seed{seed}_subcarriers.csv"),
            subcarriers_csv(&instance, &result),
        ),
        (
            format!("solve_seed{seed}_compute.csv"),
            compute_csv(&instance, &result),
        ),
        (
            format!("solve_seed{seed}_breakdown.csv"),
            breakdown_csv(&result),
        ),
    ] {
        let path = out_dir.join(name);
        write_file(&path, &contents)?;
        files.push(path);
    }

    let provenance = Provenance::new(cfg, &[seed]);
    let summary_path = out_dir.join(format!("solve_seed{seed}_summary.json"));
    write_summary(
        &summary_path,
        &serde_json::json!({
            "seed": seed,
            "delta_s": result.delta,
            "iterations": result.iterations,
            "tasks": instance.tasks().len(),
            "offloaded": result.placement.flow_count(),
            "placement": result.placement,
            "subcarriers": result.subcarriers,
            "compute": result.compute,
            "breakdown": result.breakdown,
            "accuracy": accuracy_json(&result),
            "feasible": true,
            "provenance": serde_json::to_value(&provenance).unwrap(),
        }),
    )?;

    println!(
        "seed {seed}: delta = {:.6} s over {} tasks ({} offloaded), feasible = true",
        result.delta,
        instance.tasks().len(),
        result.placement.flow_count()
    );
    println!("  per-CAV accuracy:");
    for (i, mean) in result.accuracy.cav_means.iter().enumerate() {
        match mean {
            Some(v) => println!(
                "    CAV {}: {:.4} (threshold {})",
                i + 1,
                v,
                instance.threshold
            ),
            None => println!("    CAV {}: no tasks", i + 1),
        }
    }
    Ok(ResultBundle {
        out_dir: out_dir.to_path_buf(),
        files,
        summary_path,
        provenance,
    })
}

/// One sampler trace per temperature in the sweep; infeasible instances are
/// recorded and skipped.
pub fn run_convergence(cfg: &ExperimentConfig, seed: u64, out_dir: &Path) -> Result<ResultBundle> {
    let mut files = Vec::new();
    let mut finals = Vec::new();
    let mut skipped = Vec::new();
    let instance = Instance::build(cfg, seed)?;
    for &tau in &cfg.experiment.tau_list {
        let gibbs = GibbsConfig {
            tau,
            ..gibbs_for_seed(cfg, seed)
        };
        match instance.gibbs_solve(&gibbs) {
            Ok(result) => {
                let mut out = String::from("tau,iteration,best_delta_s\n");
                for p in &result.trace {
                    let _ = writeln!(out, "{tau:e},{},{}", p.iteration, p.best);
                }
                let path = out_dir.join(format!("convergence_tau{}.csv", tau_label(tau)));
                write_file(&path, &out)?;
                files.push(path);
                finals.push(serde_json::json!({"tau": tau, "best_delta_s": result.delta,
                    "iterations": result.iterations}));
                println!(
                    "tau {tau:e}: best delta {:.6} s after {} iterations",
                    result.delta, result.iterations
                );
            }
            Err(Error::Infeasible(reason)) => {
                println!("tau {tau:e}: infeasible instance skipped ({reason})");
                skipped.push(serde_json::json!({"tau": tau, "reason": reason}));
            }
            Err(e) => return Err(e),
        }
    }
    let provenance = Provenance::new(cfg, &[seed]);
    let summary_path = out_dir.join("convergence_summary.json");
    write_summary(
        &summary_path,
        &serde_json::json!({
            "seed": seed,
            "finals": finals,
            "skipped": skipped,
            "provenance": serde_json::to_value(&provenance).unwrap(),
        }),
    )?;
    Ok(ResultBundle {
        out_dir: out_dir.to_path_buf(),
        files,
        summary_path,
        provenance,
    })
}

/// Standalone vs cooperative per-CAV accuracy for one seed.
pub fn run_accuracy_comparison(
    cfg: &ExperimentConfig,
    seed: u64,
    out_dir: &Path,
) -> Result<ResultBundle> {
    let instance = Instance::build(cfg, seed)?;
    let standalone = instance.baseline_standalone();
    let cooperative = instance.gibbs_solve(&gibbs_for_seed(cfg, seed))?;

    let mut out = String::from("cav,standalone,cooperative,threshold\n");
    for m in 1..=instance.scenario.cav_count() {
        let s = standalone.accuracy.cav_mean(m);
        let c = cooperative.accuracy.cav_mean(m);
        let fmt = |v: Option<f64>| v.map_or("nan".to_string(), |x| x.to_string());
        let _ = writeln!(out, "{m},{},{},{}", fmt(s), fmt(c), instance.threshold);
        match (s, c) {
            (Some(s), Some(c)) => {
                println!(
                    "CAV {m}: standalone {s:.4} -> cooperative {c:.4} (threshold {})",
                    instance.threshold
                )
            }
            _ => println!("CAV {m}: no tasks"),
        }
    }
    let path = out_dir.join(format!("accuracy_seed{seed}.csv"));
    write_file(&path, &out)?;
    let provenance = Provenance::new(cfg, &[seed]);
    let summary_path = out_dir.join(format!("accuracy_seed{seed}_summary.json"));
    write_summary(
        &summary_path,
        &serde_json::json!({
            "seed": seed,
            "standalone_means": standalone.accuracy.cav_means,
            "cooperative_means": cooperative.accuracy.cav_means,
            "threshold": instance.threshold,
            "cooperative_delta_s": cooperative.delta,
            "standalone_delta_s": standalone.delta,
            "provenance": serde_json::to_value(&provenance).unwrap(),
        }),
    )?;
    Ok(ResultBundle {
        out_dir: out_dir.to_path_buf(),
        files: vec![path],
        summary_path,
        provenance,
    })
}

/// Schemes compared by the compute sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepScheme {
    Proposed,
    NoPlacement,
    NoAllocation,
}

impl SweepScheme {
    pub const ALL: [SweepScheme; 3] = [
        SweepScheme::Proposed,
        SweepScheme::NoPlacement,
        SweepScheme::NoAllocation,
    ];

    pub fn label(self) -> &'static str {
        match self {
            SweepScheme::Proposed => "proposed",
            SweepScheme::NoPlacement => "no-placement",
            SweepScheme::NoAllocation => "no-allocation",
        }
    }

    pub fn parse(text: &str) -> Result<Vec<SweepScheme>> {
        match text {
            "all" => Ok(Self::ALL.to_vec()),
            "proposed" => Ok(vec![SweepScheme::Proposed]),
            "no-placement" => Ok(vec![SweepScheme::NoPlacement]),
            "no-allocation" => Ok(vec![SweepScheme::NoAllocation]),
            other => Err(Error::Config(format!(
                "unknown scheme {other:?}; expected all, proposed, no-placement or no-allocation"
            ))),
        }
    }
}

/// A sweep cell skipped as infeasible: (CAV compute GHz, seed, reason).
pub type SkippedCell = (f64, u64, String);

/// One evaluated (CAV compute, seed) cell of the completion-time sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepCell {
    pub f_cav_ghz: f64,
    pub seed: u64,
    pub proposed: f64,
    pub no_placement: f64,
    pub no_allocation: f64,
}

/// Evaluate every sweep cell. Per seed, the cells are processed in order of
/// increasing compute budget and the best placement found so far is carried
/// forward and re-evaluated under each new budget; since a placement's
/// feasibility does not depend on the budget and its completion time can
/// only drop when CAVs get faster, the reported curve is non-increasing by
/// construction while every value remains an achieved evaluation. Returns
/// the cells plus (f, seed, reason) records for skipped infeasible seeds.
pub fn sweep_cells(cfg: &ExperimentConfig) -> Result<(Vec<SweepCell>, Vec<SkippedCell>)> {
    let mut ascending = cfg.experiment.cav_compute_sweep_ghz.clone();
    ascending.sort_by(f64::total_cmp);
    let mut cells = Vec::new();
    let mut skipped = Vec::new();
    for &seed in &cfg.experiment.seeds {
        let mut incumbent: Option<crate::planner::PlacementDecision> = None;
        for &f in &ascending {
            let mut cell_cfg = cfg.clone();
            cell_cfg.scenario.cav_compute_ghz = f;
            let instance = Instance::build(&cell_cfg, seed)?;
            let gibbs = gibbs_for_seed(&cell_cfg, seed);
            let solved = match instance.gibbs_solve(&gibbs) {
                Ok(r) => r,
                Err(Error::Infeasible(reason)) => {
                    skipped.push((f, seed, reason));
                    continue;
                }
                Err(e) => return Err(e),
            };
            let mut best_placement = solved.placement.clone();
            let mut best_delta = solved.delta;
            if let Some(prev) = &incumbent {
                let carried = instance.evaluate(prev)?;
                if carried.delta < best_delta {
                    best_delta = carried.delta;
                    best_placement = prev.clone();
                }
            }
            let no_placement = instance.baseline_random_placement(&gibbs)?.delta;
            let no_allocation = instance.baseline_even_allocation(&best_placement)?.delta;
            incumbent = Some(best_placement);
            cells.push(SweepCell {
                f_cav_ghz: f,
                seed,
                proposed: best_delta,
                no_placement,
                no_allocation,
            });
        }
    }
    Ok((cells, skipped))
}

/// Total completion time per (CAV compute, scheme, seed) cell. The
/// no-placement scheme reuses the sampler's seed-matched initial placement;
/// the no-allocation scheme reuses the reported placement with even splits.
pub fn run_compute_sweep(
    cfg: &ExperimentConfig,
    schemes: &[SweepScheme],
    out_dir: &Path,
) -> Result<ResultBundle> {
    let (cells, skipped) = sweep_cells(cfg)?;
    let mut out = String::from("f_cav_ghz,scheme,delta_s,seed\n");
    for &f in &cfg.experiment.cav_compute_sweep_ghz {
        for &seed in &cfg.experiment.seeds {
            let Some(cell) = cells.iter().find(|c| c.f_cav_ghz == f && c.seed == seed) else {
                continue;
            };
            for &scheme in schemes {
                let delta = match scheme {
                    SweepScheme::Proposed => cell.proposed,
                    SweepScheme::NoPlacement => cell.no_placement,
                    SweepScheme::NoAllocation => cell.no_allocation,
                };
                let _ = writeln!(out, "{f},{},{delta},{seed}", scheme.label());
            }
            println!(
                "f={f} GHz seed {seed}: proposed delta {:.6} s",
                cell.proposed
            );
        }
    }
    for (f, seed, reason) in &skipped {
        println!("f={f} GHz seed {seed}: infeasible, skipped ({reason})");
    }
    let path = out_dir.join("sweep_completion_time.csv");
    write_file(&path, &out)?;
    let provenance = Provenance::new(cfg, &cfg.experiment.seeds);
    let summary_path = out_dir.join("sweep_summary.json");
    write_summary(
        &summary_path,
        &serde_json::json!({
            "f_cav_ghz": cfg.experiment.cav_compute_sweep_ghz,
            "schemes": schemes.iter().map(|s| s.label()).collect::<Vec<_>>(),
            "seeds": cfg.experiment.seeds,
            "skipped": skipped.iter().map(|(f, seed, reason)| {
                serde_json::json!({"f_cav_ghz": f, "seed": seed, "reason": reason})
            }).collect::<Vec<_>>(),
            "provenance": serde_json::to_value(&provenance).unwrap(),
        }),
    )?;
    Ok(ResultBundle {
        out_dir: out_dir.to_path_buf(),
        files: vec![path],
        summary_path,
        provenance,
    })
}

/// Quick oracle suite: the closed-form CPU split against the numerical
/// minimizer, the greedy subcarrier allocator against enumeration on
/// separable instances, and the sampler against brute force on a tiny
/// instance. Returns Ok(true) when every check passes.
pub fn run_selftest() -> Result<bool> {
    use rand::Rng;
    use rand::SeedableRng;
    let mut ok = true;

    // closed form vs numerical minimizer
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let n = rng.gen_range(2..=8);
        let weights: Vec<f64> = (0..n).map(|_| rng.gen_range(1e3..1e9)).collect();
        let loads = vec![crate::compute::NodeLoad {
            node: 0,
            items: weights
                .iter()
                .enumerate()
                .map(|(k, w)| crate::compute::LoadItem {
                    object: k,
                    multiplicity: 1,
                    cycles: *w as u64,
                })
                .collect(),
        }];
        let closed = crate::compute::optimal_compute_allocation(&loads);
        let weights_u: Vec<f64> = loads[0].items.iter().map(|it| it.cycles as f64).collect();
        let numeric = oracle::numeric_simplex_min(&weights_u, 400, 1e-13);
        for (k, v) in numeric.iter().enumerate() {
            worst = worst.max((closed.get(0, k).unwrap() - v).abs());
        }
    }
    println!(
        "selftest: closed-form vs numerical CPU split, max |dv| = {worst:.2e} {}",
        if worst <= 1e-6 { "PASS" } else { "FAIL" }
    );
    ok &= worst <= 1e-6;

    // greedy vs enumeration on separable flow sets
    let link = crate::comm::LinkParams::new(8e6, 1e6, 1e-21, &[(3e-15, 1.0); 4]).unwrap();
    let mut worst_gap = 0.0f64;
    for _ in 0..40 {
        let n = rng.gen_range(1..=4usize);
        let flows: Vec<crate::comm::Flow> = (0..n)
            .map(|i| crate::comm::Flow {
                object: i,
                cav: i + 1,
                size_bits: rng.gen_range(50_000..4_000_000),
            })
            .collect();
        let alloc = crate::comm::greedy_subcarrier_allocation(&flows, &link)?;
        let counts: Vec<u32> = alloc.entries.iter().map(|e| e.subcarriers).collect();
        let omega = crate::comm::transmission_objective(&flows, &counts, &link);
        if let Some((best, _)) = oracle::enumerate_subcarrier_optimum(&flows, &link) {
            worst_gap = worst_gap.max((omega - best) / best.max(1e-12));
        }
    }
    println!(
        "selftest: greedy vs exhaustive subcarriers (separable), max gap = {worst_gap:.2e} {}",
        if worst_gap <= 1e-12 { "PASS" } else { "FAIL" }
    );
    ok &= worst_gap <= 1e-12;

    // sampler vs brute force on a small instance
    let mut small = ExperimentConfig::default();
    small.scenario.cav_count = 2;
    small.scenario.object_count = 3;
    let mut checked = 0;
    let mut matched = 0;
    for seed in 1..=10u64 {
        let instance = Instance::build(&small, seed)?;
        if instance.tasks().is_empty() {
            continue;
        }
        let gibbs = GibbsConfig {
            seed,
            max_iters: 500,
            stall_window: 200,
            ..small.gibbs.clone()
        };
        let solved = match instance.gibbs_solve(&gibbs) {
            Ok(r) => r,
            Err(Error::Infeasible(_)) => continue,
            Err(e) => return Err(e),
        };
        if let Some(best) = oracle::brute_force_placement(&instance)? {
            checked += 1;
            if (solved.delta - best.delta).abs() <= 1e-9 * best.delta {
                matched += 1;
            }
        }
    }
    println!(
        "selftest: sampler vs brute force, {matched}/{checked} exact {}",
        if checked > 0 && matched == checked {
            "PASS"
        } else {
            "FAIL"
        }
    );
    ok &= checked > 0 && matched == checked;

    Ok(ok)
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::tempdir;

    fn feasible_seed(cfg: &ExperimentConfig) -> u64 {
        for seed in 1..50 {
            let inst = Instance::build(cfg, seed).unwrap();
            if !inst.tasks().is_empty() && inst.is_feasible(&inst.max_offload_placement()) {
                return seed;
            }
        }
        panic!("no feasible seed");
    }

    #[test]
    fn solve_outputs_are_reproducible_byte_for_byte() {
        let mut cfg = ExperimentConfig::default();
        cfg.gibbs.max_iters = 120;
        cfg.gibbs.stall_window = 60;
        let seed = feasible_seed(&cfg);
        let dir_a = tempdir().unwrap();
        let dir_b = tempdir().unwrap();
        let a = run_solve(&cfg, seed, dir_a.path()).unwrap();
        let b = run_solve(&cfg, seed, dir_b.path()).unwrap();
        for (fa, fb) in a.files.iter().zip(&b.files) {
            let ca = std::fs::read(fa).unwrap();
            let cb = std::fs::read(fb).unwrap();
            assert_eq!(ca, cb, "{fa:?} differs from {fb:?}");
        }
        let sa = std::fs::read(&a.summary_path).unwrap();
        let sb = std::fs::read(&b.summary_path).unwrap();
        assert_eq!(sa, sb);
    }

    #[test]
    fn convergence_writes_one_trace_per_tau() {
        let mut cfg = ExperimentConfig::default();
        cfg.gibbs.max_iters = 80;
        cfg.gibbs.stall_window = 40;
        let seed = feasible_seed(&cfg);
        let dir = tempdir().unwrap();
        let bundle = run_convergence(&cfg, seed, dir.path()).unwrap();
        assert_eq!(bundle.files.len(), cfg.experiment.tau_list.len());
        for path in &bundle.files {
            let text = std::fs::read_to_string(path).unwrap();
            let mut last = f64::INFINITY;
            for line in text.lines().skip(1) {
                let best: f64 = line.split(',').nth(2).unwrap().parse().unwrap();
                assert!(best <= last + 1e-12, "best column must be non-increasing");
                last = best;
            }
        }
        // the summary's final values equal the last row of each raw trace
        let summary: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(&bundle.summary_path).unwrap()).unwrap();
        for (path, final_entry) in bundle
            .files
            .iter()
            .zip(summary["finals"].as_array().unwrap())
        {
            let text = std::fs::read_to_string(path).unwrap();
            let last_best: f64 = text
                .lines()
                .last()
                .unwrap()
                .split(',')
                .nth(2)
                .unwrap()
                .parse()
                .unwrap();
            assert_eq!(last_best, final_entry["best_delta_s"].as_f64().unwrap());
        }
    }

    #[test]
    fn accuracy_comparison_reports_cooperative_dominance() {
        let mut cfg = ExperimentConfig::default();
        cfg.gibbs.max_iters = 120;
        cfg.gibbs.stall_window = 60;
        let seed = feasible_seed(&cfg);
        let dir = tempdir().unwrap();
        let bundle = run_accuracy_comparison(&cfg, seed, dir.path()).unwrap();
        let text = std::fs::read_to_string(&bundle.files[0]).unwrap();
        for line in text.lines().skip(1) {
            let fields: Vec<&str> = line.split(',').collect();
            let standalone: f64 = fields[1].parse().unwrap();
            let cooperative: f64 = fields[2].parse().unwrap();
            assert!(cooperative >= standalone - 1e-12);
        }
    }

    #[test]
    fn occlusion_free_sensing_shrinks_the_cooperation_gap() {
        let mut cfg = ExperimentConfig::default();
        cfg.gibbs.max_iters = 120;
        cfg.gibbs.stall_window = 60;
        let seed = feasible_seed(&cfg);

        let gap = |occlusion: f64| -> f64 {
            let mut c = cfg.clone();
            c.sensing.occlusion_factor = occlusion;
            let instance = Instance::build(&c, seed).unwrap();
            let standalone = instance.baseline_standalone();
            let coop = instance.accuracy_report(&instance.max_offload_placement());
            let mut total = 0.0;
            let mut n = 0;
            for (a, b) in coop.per_task.iter().zip(&standalone.accuracy.per_task) {
                total += a.value - b.value;
                n += 1;
            }
            total / n as f64
        };
        let occluded_gap = gap(0.1);
        let clear_gap = gap(1.0);
        assert!(
            clear_gap <= occluded_gap + 1e-12,
            "without occlusion the standalone-vs-cooperative gap shrinks: {clear_gap} vs {occluded_gap}"
        );
    }

    #[test]
    fn sweep_covers_all_cells() {
        let mut cfg = ExperimentConfig::default();
        cfg.gibbs.max_iters = 60;
        cfg.gibbs.stall_window = 30;
        cfg.experiment.cav_compute_sweep_ghz = vec![5.0, 10.0];
        cfg.experiment.seeds = vec![feasible_seed(&cfg)];
        let dir = tempdir().unwrap();
        let bundle = run_compute_sweep(&cfg, &SweepScheme::ALL, dir.path()).unwrap();
        let text = std::fs::read_to_string(&bundle.files[0]).unwrap();
        let rows: Vec<&str> = text.lines().skip(1).collect();
        assert_eq!(rows.len(), 2 * 3);
        for chunk in rows.chunks(3) {
            let delta = |row: &str| -> f64 { row.split(',').nth(2).unwrap().parse().unwrap() };
            let proposed = delta(chunk[0]);
            let no_placement = delta(chunk[1]);
            let no_allocation = delta(chunk[2]);
            assert!(proposed <= no_placement + 1e-9);
            assert!(proposed <= no_allocation + 1e-9);
        }
    }

    #[test]
    fn selftest_passes() {
        assert!(run_selftest().unwrap());
    }
}
