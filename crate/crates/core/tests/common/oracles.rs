//! Independent reference implementations used by the integration and
//! acceptance tests.
#![allow(dead_code)]

use evw_core::network::{ArcId, Class, ClassParams, NodeId, PathFlow, RoadNetwork};
use rand::Rng;

/// Minimum of `Σ η_t (ℓ0_t + ℓ_t)^n` over `{ℓ ≥ 0, Σ ℓ = L}` by accelerated
/// projected gradient with adaptive restart.
pub fn projected_gradient_charging(eta: &[f64], ell0: &[f64], n: u32, total: f64) -> f64 {
    let t = eta.len();
    let cost = |x: &[f64]| -> f64 { (0..t).map(|i| eta[i] * (ell0[i] + x[i]).powi(n as i32)).sum() };
    if total == 0.0 {
        return cost(&vec![0.0; t]);
    }
    let lip = (0..t)
        .map(|i| {
            let nn = n as f64;
            nn * (nn - 1.0) * eta[i] * (ell0[i] + total).powi(n as i32 - 2)
        })
        .fold(0.0, f64::max);
    let step = 1.0 / lip;
    let mut x = vec![total / t as f64; t];
    let mut y = x.clone();
    let mut mom = 1.0f64;
    let mut best = cost(&x);
    let mut stalled = 0;
    let mut grad = vec![0.0; t];
    let mut next = vec![0.0; t];
    for _ in 0..200_000 {
        for i in 0..t {
            grad[i] = n as f64 * eta[i] * (ell0[i] + y[i]).powi(n as i32 - 1);
            next[i] = y[i] - step * grad[i];
        }
        project_simplex(&mut next, total);
        let value = cost(&next);
        let mom_next = 0.5 * (1.0 + (1.0 + 4.0 * mom * mom).sqrt());
        if value > best {
            // Restart the momentum.
            mom = 1.0;
            y.copy_from_slice(&x);
            continue;
        }
        let improvement = best - value;
        for i in 0..t {
            y[i] = next[i] + (mom - 1.0) / mom_next * (next[i] - x[i]);
        }
        x.copy_from_slice(&next);
        mom = mom_next;
        best = value;
        if improvement <= 1e-15 * value {
            stalled += 1;
            if stalled == 100 {
                break;
            }
        } else {
            stalled = 0;
        }
    }
    best
}

/// Euclidean projection onto `{x ≥ 0, Σ x = total}`.
pub fn project_simplex(v: &mut [f64], total: f64) {
    let mut u: Vec<f64> = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cum = 0.0;
    let mut shift = 0.0;
    for (j, &uj) in u.iter().enumerate() {
        cum += uj;
        let cand = (cum - total) / (j + 1) as f64;
        if uj - cand > 0.0 {
            shift = cand;
        }
    }
    for x in v.iter_mut() {
        *x = (*x - shift).max(0.0);
    }
}

/// Exhaustive minimum over all simple paths; ties go to the lexicographically
/// smallest arc-id sequence.
pub fn brute_force_shortest_path(
    net: &RoadNetwork,
    origin: NodeId,
    destination: NodeId,
    cost: &[f64],
) -> Option<(Vec<ArcId>, f64)> {
    #[allow(clippy::too_many_arguments)]
    fn dfs(
        net: &RoadNetwork,
        at: NodeId,
        destination: NodeId,
        cost: &[f64],
        visited: &mut Vec<bool>,
        path: &mut Vec<ArcId>,
        acc: f64,
        best: &mut Option<(Vec<ArcId>, f64)>,
    ) {
        if at == destination {
            let better = match best {
                None => true,
                Some((p, c)) => acc < *c || (acc == *c && path < p),
            };
            if better {
                *best = Some((path.clone(), acc));
            }
            return;
        }
        for (i, arc) in net.arcs().iter().enumerate() {
            if arc.tail == at && !visited[arc.head.0] {
                visited[arc.head.0] = true;
                path.push(ArcId(i));
                dfs(net, arc.head, destination, cost, visited, path, acc + cost[i], best);
                path.pop();
                visited[arc.head.0] = false;
            }
        }
    }
    let mut visited = vec![false; net.nodes().len()];
    visited[origin.0] = true;
    let mut best = None;
    dfs(
        net,
        origin,
        destination,
        cost,
        &mut visited,
        &mut Vec::new(),
        0.0,
        &mut best,
    );
    best
}

/// Random feasible path flows over the registered paths of `net`.
pub fn random_path_flows<R: Rng>(net: &RoadNetwork, params: &ClassParams, rng: &mut R) -> Vec<PathFlow> {
    let mut out = Vec::new();
    for (k, od) in net.od_pairs().iter().enumerate() {
        for class in Class::ALL {
            let demand = params.share(class) * od.demand;
            let paths: Vec<_> = net.paths().iter().filter(|p| p.od == k).collect();
            let weights: Vec<f64> = paths.iter().map(|_| -rng.gen_range(1e-12f64..1.0).ln()).collect();
            let sum: f64 = weights.iter().sum();
            for (p, w) in paths.iter().zip(&weights) {
                out.push(PathFlow {
                    od: k,
                    class,
                    arcs: p.arcs.clone(),
                    flow: demand * w / sum,
                });
            }
        }
    }
    out
}
