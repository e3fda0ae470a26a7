//! Brute-force equilibrium search on two-node parallel networks, an
//! independent check of the solver.

use alloc::vec;
use alloc::vec::Vec;

use super::potential::Beckmann;
use crate::charging::ChargingScenario;
use crate::error::{Error, Result};
use crate::network::{Class, ClassParams, FlowAssignment, PerClass, RoadNetwork};

const MAX_ARCS: usize = 4;

fn check_topology(net: &RoadNetwork) -> Result<()> {
    if !net.is_parallel() || net.arcs().len() > MAX_ARCS {
        return Err(Error::invalid(
            "network",
            alloc::format!("expected a two-node parallel network with at most {MAX_ARCS} arcs"),
        ));
    }
    Ok(())
}

// Every split of `resolution` units over `m` arcs.
fn compositions(m: usize, resolution: usize) -> Vec<Vec<usize>> {
    fn rec(m: usize, left: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if m == 1 {
            cur.push(left);
            out.push(cur.clone());
            cur.pop();
            return;
        }
        for k in 0..=left {
            cur.push(k);
            rec(m - 1, left - k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(m, resolution, &mut Vec::new(), &mut out);
    out
}

/// Minimises the potential over the product of the per-class simplices: an
/// exhaustive grid with `resolution` steps per class, then a pattern search
/// from the best grid point. Returns arc flows only.
pub fn enumerate_parallel_equilibrium(
    net: &RoadNetwork,
    params: &ClassParams,
    sc: &ChargingScenario,
    resolution: usize,
) -> Result<FlowAssignment> {
    check_topology(net)?;
    if resolution == 0 {
        return Err(Error::invalid("resolution", "must be >= 1"));
    }
    let bk = Beckmann::new(net, params, sc)?;
    let m = net.arcs().len();
    let grid = compositions(m, resolution);
    let share = PerClass::new(params.share(Class::Ev), params.share(Class::Gv));
    let step = 1.0 / resolution as f64;
    let mut flows = vec![PerClass::default(); m];
    let mut best = (f64::INFINITY, flows.clone());
    for ev in &grid {
        for gv in &grid {
            for i in 0..m {
                flows[i] = PerClass::new(share.ev * ev[i] as f64 * step, share.gv * gv[i] as f64 * step);
            }
            let b = bk.value(&flows);
            if b < best.0 {
                best = (b, flows.clone());
            }
        }
    }
    Ok(pattern_search(&bk, best.1, step * share.ev.max(share.gv)))
}

/// Pattern search from a feasible parallel-network assignment: repeatedly
/// moves mass between two arcs of one class while the potential decreases,
/// halving the step when no move helps.
pub fn refine_parallel_equilibrium(
    net: &RoadNetwork,
    params: &ClassParams,
    sc: &ChargingScenario,
    start: &FlowAssignment,
) -> Result<FlowAssignment> {
    check_topology(net)?;
    start.check_feasible(net, params)?;
    let bk = Beckmann::new(net, params, sc)?;
    let initial = 0.25 * params.share(Class::Ev).max(params.share(Class::Gv));
    Ok(pattern_search(&bk, start.arc.clone(), initial))
}

fn pattern_search(bk: &Beckmann<'_>, mut flows: Vec<PerClass<f64>>, initial_step: f64) -> FlowAssignment {
    let m = flows.len();
    let mut value = bk.value(&flows);
    let mut step = initial_step;
    while step > 1e-13 {
        let mut improved = false;
        for class in Class::ALL {
            for i in 0..m {
                for j in 0..m {
                    if i == j {
                        continue;
                    }
                    let delta = step.min(flows[i][class]);
                    if delta <= 0.0 {
                        continue;
                    }
                    let (old_i, old_j) = (flows[i][class], flows[j][class]);
                    flows[i][class] = old_i - delta;
                    flows[j][class] = old_j + delta;
                    let trial = bk.value(&flows);
                    if trial < value {
                        value = trial;
                        improved = true;
                    } else {
                        flows[i][class] = old_i;
                        flows[j][class] = old_j;
                    }
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    FlowAssignment::from_arc_flows(flows)
}
