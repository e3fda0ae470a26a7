use alloc::vec::Vec;

use super::potential::Beckmann;
use crate::charging::ChargingScenario;
use crate::error::{Error, Result};
use crate::network::{Class, ClassParams, FlowAssignment, RoadNetwork, USED_FLOW};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WardropReport {
    /// Largest relative excess of the average used-path cost over the
    /// shortest-path cost, over classes and O-D pairs.
    pub residual: f64,
    /// Largest relative excess of any single used path. `None` when only arc
    /// flows are available.
    pub max_used_excess: Option<f64>,
    pub certified: bool,
}

/// Certifies the equilibrium conditions. Paths carrying at least `1e-9` count
/// as used. Without path flows the residual is computed per class from arc
/// flows: total class cost against the all-shortest-path cost.
pub fn verify_wardrop(
    net: &RoadNetwork,
    flows: &FlowAssignment,
    params: &ClassParams,
    sc: &ChargingScenario,
    epsilon: f64,
) -> Result<WardropReport> {
    if !(epsilon.is_finite() && epsilon > 0.0) {
        return Err(Error::invalid("epsilon", "must be finite and > 0"));
    }
    let bk = Beckmann::new(net, params, sc)?;
    flows.check_feasible(net, params)?;
    block_report(net, &bk, flows, epsilon)
}

fn excess(cost: f64, best: f64) -> f64 {
    let d = (cost - best).max(0.0);
    if best > 0.0 {
        d / best
    } else {
        d
    }
}

pub(super) fn block_report(
    net: &RoadNetwork,
    bk: &Beckmann<'_>,
    flows: &FlowAssignment,
    epsilon: f64,
) -> Result<WardropReport> {
    let grad = bk.gradient(&flows.arc);
    let params = bk.params();
    let mut residual = 0.0f64;
    let mut max_used: Option<f64> = flows.paths.as_ref().map(|_| 0.0);
    for class in Class::ALL {
        let share = params.share(class);
        if share <= 0.0 {
            continue;
        }
        let costs: Vec<f64> = grad.iter().map(|g| g[class]).collect();
        let mut arc_best = 0.0;
        for (k, od) in net.od_pairs().iter().enumerate() {
            if od.demand <= 0.0 {
                continue;
            }
            let (_, best) = net.shortest_path(od.origin, od.destination, &costs)?;
            arc_best += share * od.demand * best;
            if let Some(paths) = &flows.paths {
                let mut mass = 0.0;
                let mut cost = 0.0;
                for p in paths
                    .iter()
                    .filter(|p| p.od == k && p.class == class && p.flow >= USED_FLOW)
                {
                    let c: f64 = p.arcs.iter().map(|a| costs[a.0]).sum();
                    mass += p.flow;
                    cost += p.flow * c;
                    max_used = max_used.map(|m| m.max(excess(c, best)));
                }
                if mass > 0.0 {
                    residual = residual.max(excess(cost / mass, best));
                }
            }
        }
        if flows.paths.is_none() {
            let total: f64 = flows.arc.iter().zip(&costs).map(|(x, c)| x[class] * c).sum();
            residual = residual.max(excess(total, arc_best));
        }
    }
    Ok(WardropReport {
        residual,
        max_used_excess: max_used,
        certified: residual <= epsilon,
    })
}
