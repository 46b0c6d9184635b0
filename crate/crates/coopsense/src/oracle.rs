//! Independent reference solvers used to verify the fast paths: a
//! derivative-free numerical minimizer for the per-node CPU split, an
//! exhaustive subcarrier enumerator, and a brute-force placement search.
//!
//! None of these share formulas with the implementations they check: the
//! CPU-split oracle only ever evaluates the objective, and the enumerators
//! walk the full decision space.

use crate::comm::{transmission_objective, Flow, LinkParams};
use crate::error::Result;
use crate::planner::{Instance, PlacementDecision};

/// Objective of the per-node CPU split: sum of weight / share.
pub fn inverse_share_cost(weights: &[f64], shares: &[f64]) -> f64 {
    weights
        .iter()
        .zip(shares)
        .map(|(w, v)| if *w == 0.0 { 0.0 } else { w / v })
        .sum()
}

/// Golden-section search for the minimum of a strictly convex function on
/// [lo, hi].
fn golden_section_min(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut c = hi - INV_PHI * (hi - lo);
    let mut d = lo + INV_PHI * (hi - lo);
    let mut fc = f(c);
    let mut fd = f(d);
    while hi - lo > tol {
        if fc < fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - INV_PHI * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + INV_PHI * (hi - lo);
            fd = f(d);
        }
    }
    (lo + hi) / 2.0
}

/// Numerically minimize `sum_i weights[i] / v[i]` over the simplex
/// `sum v = 1, v > 0` by cyclic pairwise redistribution, each pair solved
/// with golden-section search. Entries with zero weight receive zero.
///
/// Purely evaluation-based: no optimality conditions or closed forms are
/// used, so the result is an independent check of the analytic allocator.
pub fn numeric_simplex_min(weights: &[f64], sweeps: usize, tol: f64) -> Vec<f64> {
    let n = weights.len();
    let active: Vec<usize> = (0..n).filter(|&i| weights[i] > 0.0).collect();
    let mut shares = vec![0.0; n];
    if active.is_empty() {
        return shares;
    }
    if active.len() == 1 {
        shares[active[0]] = 1.0;
        return shares;
    }
    for &i in &active {
        shares[i] = 1.0 / active.len() as f64;
    }
    for _ in 0..sweeps {
        let mut moved = 0.0f64;
        for a in 0..active.len() {
            for b in (a + 1)..active.len() {
                let (i, j) = (active[a], active[b]);
                let budget = shares[i] + shares[j];
                let wi = weights[i];
                let wj = weights[j];
                let lo = budget * 1e-12;
                let best = golden_section_min(
                    |x| wi / x + wj / (budget - x),
                    lo,
                    budget - lo,
                    budget * tol,
                );
                moved = moved.max((shares[i] - best).abs());
                shares[i] = best;
                shares[j] = budget - best;
            }
        }
        if moved < tol {
            break;
        }
    }
    shares
}

/// Exhaustive optimum of the subcarrier split: every flow gets at least one
/// subcarrier and the whole band is spent. Returns (objective, counts) with
/// counts aligned to flows sorted by (object, cav).
pub fn enumerate_subcarrier_optimum(flows: &[Flow], link: &LinkParams) -> Option<(f64, Vec<u32>)> {
    let mut ordered: Vec<Flow> = flows.to_vec();
    ordered.sort_by_key(|f| (f.object, f.cav));
    let n = ordered.len();
    let total = link.total_subcarriers;
    if n == 0 || (n as u32) > total {
        return None;
    }

    let mut counts = vec![1u32; n];
    let mut best: Option<(f64, Vec<u32>)> = None;
    fn recurse(
        flows: &[Flow],
        link: &LinkParams,
        counts: &mut Vec<u32>,
        index: usize,
        left: u32,
        best: &mut Option<(f64, Vec<u32>)>,
    ) {
        let n = flows.len();
        if index == n - 1 {
            counts[index] = left;
            let omega = transmission_objective(flows, counts, link);
            if best.as_ref().is_none_or(|(b, _)| omega < *b) {
                *best = Some((omega, counts.clone()));
            }
            return;
        }
        let reserve = (n - index - 1) as u32;
        for b in 1..=(left - reserve) {
            counts[index] = b;
            recurse(flows, link, counts, index + 1, left - b, best);
        }
    }
    recurse(&ordered, link, &mut counts, 0, total, &mut best);
    best
}

/// Outcome of the exhaustive placement search.
#[derive(Debug, Clone)]
pub struct BruteForceResult {
    pub placement: PlacementDecision,
    pub delta: f64,
    pub feasible_count: usize,
    pub total_count: usize,
}

/// Evaluate every placement of the instance with the same inner allocators
/// the sampler uses, and keep the feasible minimum. Only viable for small
/// task sets.
pub fn brute_force_placement(instance: &Instance) -> Result<Option<BruteForceResult>> {
    let tasks = instance.tasks().to_vec();
    assert!(tasks.len() <= 20, "brute force is limited to 20 tasks");
    let total = 1usize << tasks.len();
    let mut best: Option<BruteForceResult> = None;
    let mut feasible_count = 0usize;
    for mask in 0..total {
        let offload: Vec<bool> = (0..tasks.len()).map(|i| mask >> i & 1 == 1).collect();
        let candidate = PlacementDecision::new(tasks.clone(), offload);
        if !instance.is_feasible(&candidate) {
            continue;
        }
        feasible_count += 1;
        let eval = instance.evaluate(&candidate)?;
        if best.as_ref().is_none_or(|b| eval.delta < b.delta) {
            best = Some(BruteForceResult {
                placement: candidate,
                delta: eval.delta,
                feasible_count: 0,
                total_count: total,
            });
        }
    }
    Ok(best.map(|mut b| {
        b.feasible_count = feasible_count;
        b
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn numeric_min_matches_hand_case() {
        // weights {1, 4, 4}: optimum {0.2, 0.4, 0.4}
        let v = numeric_simplex_min(&[1.0, 4.0, 4.0], 200, 1e-13);
        assert!((v[0] - 0.2).abs() < 1e-8, "{v:?}");
        assert!((v[1] - 0.4).abs() < 1e-8);
        assert!((v[2] - 0.4).abs() < 1e-8);
        assert!((v.iter().sum::<f64>() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn numeric_min_handles_zero_weights_and_singletons() {
        let v = numeric_simplex_min(&[0.0, 5.0, 0.0], 50, 1e-12);
        assert_eq!(v, vec![0.0, 1.0, 0.0]);
        let v = numeric_simplex_min(&[], 50, 1e-12);
        assert!(v.is_empty());
    }

    #[test]
    fn numeric_min_beats_perturbations() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..10 {
            let n = rng.gen_range(2..=6);
            let weights: Vec<f64> = (0..n).map(|_| rng.gen_range(1e3..1e9)).collect();
            let v = numeric_simplex_min(&weights, 300, 1e-13);
            let base = inverse_share_cost(&weights, &v);
            // nudging mass between any pair should not help
            for i in 0..n {
                for j in 0..n {
                    if i == j {
                        continue;
                    }
                    let mut w = v.clone();
                    let step = 1e-6;
                    if w[j] > step {
                        w[i] += step;
                        w[j] -= step;
                        assert!(inverse_share_cost(&weights, &w) >= base - 1e-9 * base);
                    }
                }
            }
        }
    }
}
