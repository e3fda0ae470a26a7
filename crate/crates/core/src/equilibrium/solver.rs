//! Conditional gradient over path flows with pairwise steps.
//!
//! Each (class, O-D pair) block keeps its active paths. Per iteration the
//! Frank-Wolfe gap is evaluated at the current point; then, block after block,
//! flow moves from the block's most expensive active path to its current
//! shortest path with an exact line search. Moving mass between two paths of
//! the same block keeps the iterate feasible and, unlike the classical
//! all-or-nothing direction, does not zig-zag near the optimum.

use alloc::boxed::Box;
use alloc::vec;
use alloc::vec::Vec;

use super::potential::Beckmann;
use super::wardrop::block_report;
use super::{EquilibriumConfig, EquilibriumResult};
use crate::charging::ChargingScenario;
use crate::error::{Error, Result};
use crate::network::{ArcId, Class, ClassParams, FlowAssignment, NodeId, PathFlow, PerClass, RoadNetwork};

struct Block {
    od: usize,
    class: Class,
    origin: NodeId,
    destination: NodeId,
    demand: f64,
    paths: Vec<(Vec<ArcId>, f64)>,
}

/// Solves for the equilibrium starting from the all-or-nothing assignment at
/// zero-flow costs.
pub fn solve_equilibrium(
    net: &RoadNetwork,
    params: &ClassParams,
    sc: &ChargingScenario,
    cfg: &EquilibriumConfig,
) -> Result<EquilibriumResult> {
    solve_equilibrium_from(net, params, sc, cfg, None)
}

/// As [`solve_equilibrium`], optionally starting from feasible path flows
/// (a warm start or a random initial point). Paths of zero-demand blocks are
/// ignored; every other block must be covered and sum to its demand.
pub fn solve_equilibrium_from(
    net: &RoadNetwork,
    params: &ClassParams,
    sc: &ChargingScenario,
    cfg: &EquilibriumConfig,
    start: Option<&[PathFlow]>,
) -> Result<EquilibriumResult> {
    cfg.validate()?;
    let bk = Beckmann::new(net, params, sc)?;
    let unique_regime = sc.price_monotonicity().increasing;

    let mut blocks = Vec::new();
    for (k, od) in net.od_pairs().iter().enumerate() {
        for class in Class::ALL {
            let demand = params.share(class) * od.demand;
            if demand > 0.0 {
                blocks.push(Block {
                    od: k,
                    class,
                    origin: od.origin,
                    destination: od.destination,
                    demand,
                    paths: Vec::new(),
                });
            }
        }
    }
    match start {
        Some(paths) => load_start(net, &mut blocks, paths)?,
        None => {
            let zero = vec![PerClass::default(); net.arcs().len()];
            let grad = bk.gradient(&zero);
            for class in Class::ALL {
                let costs: Vec<f64> = grad.iter().map(|g| g[class]).collect();
                for b in blocks.iter_mut().filter(|b| b.class == class) {
                    let (arcs, _) = net.shortest_path(b.origin, b.destination, &costs)?;
                    b.paths.push((arcs, b.demand));
                }
            }
        }
    }

    let mut state = State {
        bk: &bk,
        flows: vec![PerClass::default(); net.arcs().len()],
        charging_need: 0.0,
        unique_regime,
        fallback_steps: 0,
        line_tol: cfg.line_search_tolerance,
        mark: vec![0; net.arcs().len()],
    };
    let mut trace = Vec::new();
    let mut k = 0;
    loop {
        state.aggregate(&blocks);
        let potential = bk.value(&state.flows);
        trace.push(potential);
        let grad = bk.gradient(&state.flows);
        let mut gap = 0.0;
        for b in &blocks {
            let costs: Vec<f64> = grad.iter().map(|g| g[b.class]).collect();
            let (_, sp) = net.shortest_path(b.origin, b.destination, &costs)?;
            let used: f64 = b.paths.iter().map(|(p, f)| f * path_cost(&costs, p)).sum();
            gap += (used - b.demand * sp).max(0.0);
        }
        let relative_gap = if potential != 0.0 { gap / potential.abs() } else { gap };
        let done = relative_gap <= cfg.gap_tolerance;
        if done || k >= cfg.max_iterations {
            let result = finish(&bk, cfg, &blocks, &state, potential, relative_gap, k, trace)?;
            return if done {
                Ok(result)
            } else {
                Err(Error::NotConverged(Box::new(result)))
            };
        }
        for b in blocks.iter_mut() {
            state.pairwise_step(b, k)?;
        }
        k += 1;
    }
}

fn load_start(net: &RoadNetwork, blocks: &mut [Block], paths: &[PathFlow]) -> Result<()> {
    for (i, p) in paths.iter().enumerate() {
        let field = alloc::format!("start[{i}]");
        if !(p.flow.is_finite() && p.flow >= 0.0) {
            return Err(Error::invalid(field, "flow must be finite and >= 0"));
        }
        let od = net
            .od_pairs()
            .get(p.od)
            .ok_or_else(|| Error::invalid(field.clone(), "unknown O-D pair"))?;
        let mut at = od.origin;
        for a in &p.arcs {
            let arc = net.arcs().get(a.0).ok_or(Error::UnknownArc(a.0))?;
            if arc.tail != at {
                return Err(Error::invalid(field, "arcs do not form a walk from the origin"));
            }
            at = arc.head;
        }
        if at != od.destination {
            return Err(Error::invalid(field, "path does not end at the destination"));
        }
        if let Some(b) = blocks.iter_mut().find(|b| b.od == p.od && b.class == p.class) {
            if p.flow > 0.0 {
                match b.paths.iter_mut().find(|(arcs, _)| *arcs == p.arcs) {
                    Some(slot) => slot.1 += p.flow,
                    None => b.paths.push((p.arcs.clone(), p.flow)),
                }
            }
        }
    }
    for b in blocks.iter_mut() {
        let sum: f64 = b.paths.iter().map(|(_, f)| f).sum();
        if (sum - b.demand).abs() > 1e-9 * b.demand.max(1.0) {
            return Err(Error::invalid(
                alloc::format!("start[od={}, class={}]", b.od, b.class.as_str()),
                alloc::format!("flows sum to {sum} instead of {}", b.demand),
            ));
        }
        let scale = b.demand / sum;
        for (_, f) in b.paths.iter_mut() {
            *f *= scale;
        }
    }
    Ok(())
}

fn path_cost(costs: &[f64], arcs: &[ArcId]) -> f64 {
    arcs.iter().map(|a| costs[a.0]).sum()
}

struct State<'a, 'n> {
    bk: &'a Beckmann<'n>,
    flows: Vec<PerClass<f64>>,
    charging_need: f64,
    unique_regime: bool,
    fallback_steps: usize,
    line_tol: f64,
    mark: Vec<i32>,
}

impl State<'_, '_> {
    fn aggregate(&mut self, blocks: &[Block]) {
        for x in self.flows.iter_mut() {
            *x = PerClass::default();
        }
        for b in blocks {
            for (arcs, f) in &b.paths {
                for a in arcs {
                    self.flows[a.0][b.class] += f;
                }
            }
        }
        self.charging_need = self.bk.charging_need(&self.flows);
    }

    fn class_costs(&self, class: Class) -> Vec<f64> {
        let net = self.bk.network();
        let price = self.bk.unit_price(self.charging_need);
        (0..net.arcs().len())
            .map(|i| net.arc_cost_unchecked(ArcId(i), self.flows[i].total(), class, self.bk.params(), price))
            .collect()
    }

    fn pairwise_step(&mut self, b: &mut Block, k: usize) -> Result<()> {
        let net = self.bk.network();
        let costs = self.class_costs(b.class);
        let (sp, _) = net.shortest_path(b.origin, b.destination, &costs)?;
        let s = match b.paths.iter().position(|(arcs, _)| *arcs == sp) {
            Some(s) => s,
            None => {
                b.paths.push((sp, 0.0));
                b.paths.len() - 1
            }
        };
        let v = b
            .paths
            .iter()
            .enumerate()
            .filter(|&(i, (_, f))| i != s && *f > 0.0)
            .map(|(i, (arcs, _))| (i, path_cost(&costs, arcs)))
            .max_by(|x, y| x.1.total_cmp(&y.1).then(y.0.cmp(&x.0)))
            .map(|(i, _)| i);
        let Some(v) = v else {
            b.paths.retain(|(_, f)| *f > 0.0);
            return Ok(());
        };

        // Arcs whose flow changes, with multiplicity: +1 on the shortest path,
        // -1 on the path losing flow.
        for a in &b.paths[s].0 {
            self.mark[a.0] += 1;
        }
        for a in &b.paths[v].0 {
            self.mark[a.0] -= 1;
        }
        let mut diff: Vec<(usize, f64)> = Vec::new();
        for a in b.paths[s].0.iter().chain(&b.paths[v].0) {
            let m = self.mark[a.0];
            if m != 0 {
                diff.push((a.0, m as f64));
                self.mark[a.0] = 0;
            }
        }
        let f_v = b.paths[v].1;
        let d_km: f64 = diff.iter().map(|&(a, m)| m * net.arcs()[a].length_km).sum();
        let p = *self.bk.params();
        let d_need = if b.class == Class::Ev {
            p.m_e * p.fleet_scale * d_km
        } else {
            0.0
        };
        let slope = |theta: f64| -> f64 {
            let price = self.bk.unit_price((self.charging_need + theta * d_need).max(0.0));
            diff.iter()
                .map(|&(a, m)| {
                    let x = (self.flows[a].total() + m * theta).max(0.0);
                    m * net.arc_cost_unchecked(ArcId(a), x, b.class, &p, price)
                })
                .sum()
        };

        let theta = if slope(0.0) >= 0.0 {
            0.0
        } else if !self.unique_regime && b.class == Class::Ev && !monotone_on(&slope, f_v) {
            self.fallback_steps += 1;
            f_v * (2.0 / (k as f64 + 2.0)).min(1.0)
        } else if slope(f_v) <= 0.0 {
            f_v
        } else {
            let (mut lo, mut hi) = (0.0, f_v);
            while hi - lo > self.line_tol * f_v {
                let mid = 0.5 * (lo + hi);
                if slope(mid) < 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            lo
        };

        if theta > 0.0 {
            for &(a, m) in &diff {
                let x = &mut self.flows[a][b.class];
                *x = (*x + m * theta).max(0.0);
            }
            self.charging_need = (self.charging_need + theta * d_need).max(0.0);
            b.paths[s].1 += theta;
            b.paths[v].1 = if theta == f_v { 0.0 } else { b.paths[v].1 - theta };
        }
        b.paths.retain(|(_, f)| *f > 0.0);
        Ok(())
    }
}

// Samples the line derivative and reports whether it is nondecreasing.
fn monotone_on(slope: &impl Fn(f64) -> f64, f_v: f64) -> bool {
    const SAMPLES: usize = 16;
    let values: Vec<f64> = (0..=SAMPLES).map(|i| slope(f_v * i as f64 / SAMPLES as f64)).collect();
    let scale = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    values.windows(2).all(|w| w[1] >= w[0] - 1e-12 * scale)
}

#[allow(clippy::too_many_arguments)]
fn finish(
    bk: &Beckmann<'_>,
    cfg: &EquilibriumConfig,
    blocks: &[Block],
    state: &State<'_, '_>,
    potential: f64,
    relative_gap: f64,
    iterations: usize,
    potential_trace: Vec<f64>,
) -> Result<EquilibriumResult> {
    let net = bk.network();
    let mut paths: Vec<PathFlow> = blocks
        .iter()
        .flat_map(|b| {
            b.paths.iter().map(move |(arcs, f)| PathFlow {
                od: b.od,
                class: b.class,
                arcs: arcs.clone(),
                flow: *f,
            })
        })
        .collect();
    paths.sort_by(|x, y| (x.od, x.class, &x.arcs).cmp(&(y.od, y.class, &y.arcs)));
    let flows = FlowAssignment::from_path_flows(net, paths)?;
    let report = block_report(net, bk, &flows, cfg.wardrop_epsilon)?;
    Ok(EquilibriumResult {
        charging_need: state.charging_need,
        unit_price: bk.unit_price(state.charging_need),
        flows,
        potential,
        relative_gap,
        iterations,
        wardrop_residual: report.residual,
        certified: report.certified,
        unique_regime: state.unique_regime,
        fallback_steps: state.fallback_steps,
        potential_trace,
    })
}
