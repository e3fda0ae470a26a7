//! Environmental cost of gasoline traffic, toll grid search on one arc and
//! parameter sweeps.
//!
//! The expected number of gasoline vehicles on an arc is `x_{a,g} d_a(x_a)`
//! (Little's law); the environmental cost weighs it per arc. The operator tolls
//! gasoline vehicles on a single arc and picks the toll on a uniform grid that
//! minimises the cost at equilibrium.

use alloc::boxed::Box;
use alloc::vec;
use alloc::vec::Vec;

use crate::charging::ChargingScenario;
use crate::equilibrium::{solve_equilibrium_from, EquilibriumConfig, EquilibriumResult};
use crate::error::{Error, Result};
use crate::network::{ArcId, Class, ClassParams, FlowAssignment, PathFlow, PerClass, RoadNetwork};

/// Two grid costs closer than this (relative) count as a tie; ties go to the
/// smaller toll. Flat stretches of the cost curve are only resolved when the
/// equilibrium solves run at a gap well below this (1e-8 works).
pub const TIE_RTOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct EnvWeights {
    gamma: Vec<f64>,
}

impl EnvWeights {
    pub fn uniform(arcs: usize) -> Self {
        EnvWeights { gamma: vec![1.0; arcs] }
    }

    pub fn new(gamma: Vec<f64>) -> Result<Self> {
        if let Some(i) = gamma.iter().position(|g| !(g.is_finite() && *g >= 1.0)) {
            return Err(Error::invalid(alloc::format!("gamma[{i}]"), "must be finite and >= 1"));
        }
        Ok(EnvWeights { gamma })
    }

    pub fn with(mut self, arc: ArcId, gamma: f64) -> Result<Self> {
        if !(gamma.is_finite() && gamma >= 1.0) {
            return Err(Error::invalid(
                "gamma",
                alloc::format!("must be finite and >= 1, got {gamma}"),
            ));
        }
        *self.gamma.get_mut(arc.0).ok_or(Error::UnknownArc(arc.0))? = gamma;
        Ok(self)
    }

    pub fn gamma(&self) -> &[f64] {
        &self.gamma
    }
}

/// `Σ_a γ_a x_{a,g} d_a(x_a)`, in vehicle-hours.
pub fn environmental_cost(net: &RoadNetwork, flows: &FlowAssignment, weights: &EnvWeights) -> Result<f64> {
    if weights.gamma.len() != net.arcs().len() || flows.arc.len() != net.arcs().len() {
        return Err(Error::invalid(
            "weights",
            "one weight and one flow per arc are required",
        ));
    }
    let mut c = 0.0;
    for ((arc, x), g) in net.arcs().iter().zip(&flows.arc).zip(&weights.gamma) {
        if x.gv > 0.0 {
            c += g * x.gv * arc.travel_time(x.total())?;
        }
    }
    Ok(c)
}

/// `{0, step, 2 step, …}` up to `max`: `⌊max/step⌋ + 1` points.
pub fn toll_grid(max: f64, step: f64) -> Result<Vec<f64>> {
    if !(step.is_finite() && step > 0.0) {
        return Err(Error::invalid("step", "must be finite and > 0"));
    }
    if !(max.is_finite() && max >= 0.0) {
        return Err(Error::invalid("max", "must be finite and >= 0"));
    }
    // Absorbs representation error, e.g. 5 / 0.01 = 499.99999999999994.
    let count = libm::floor(max / step + 1e-9) as usize + 1;
    Ok((0..count).map(|i| i as f64 * step).collect())
}

/// Equilibrium summary at one grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct TollPoint {
    pub toll: f64,
    pub env_cost: f64,
    pub arc_flows: Vec<PerClass<f64>>,
    pub unit_price: f64,
}

/// Solves the equilibrium with `toll` on gasoline vehicles of `arc` and
/// evaluates the environmental cost. `warm` optionally seeds the solver.
#[allow(clippy::too_many_arguments)]
pub fn evaluate_toll_point(
    net: &RoadNetwork,
    params: &ClassParams,
    sc: &ChargingScenario,
    cfg: &EquilibriumConfig,
    weights: &EnvWeights,
    arc: ArcId,
    toll: f64,
    warm: Option<&[PathFlow]>,
) -> Result<(TollPoint, EquilibriumResult)> {
    let wrap = |e: Error| Error::TollPoint {
        toll,
        source: Box::new(e),
    };
    let tolled = net.clone().with_toll(arc, Class::Gv, toll).map_err(wrap)?;
    let eq = solve_equilibrium_from(&tolled, params, sc, cfg, warm).map_err(wrap)?;
    let env_cost = environmental_cost(&tolled, &eq.flows, weights).map_err(wrap)?;
    Ok((
        TollPoint {
            toll,
            env_cost,
            arc_flows: eq.flows.arc.clone(),
            unit_price: eq.unit_price,
        },
        eq,
    ))
}

#[derive(Debug, Clone, PartialEq)]
pub struct TollSweepResult {
    pub points: Vec<TollPoint>,
    pub best_index: usize,
    pub best_toll: f64,
    pub best_cost: f64,
    /// `δ = |c* − c(0)| / c(0)`, zero when `c(0) = 0`.
    pub gain: f64,
}

impl TollSweepResult {
    /// Reduces grid points (in grid order, first point at toll 0).
    pub fn from_points(points: Vec<TollPoint>) -> Result<Self> {
        let first = points
            .first()
            .ok_or_else(|| Error::invalid("toll_grid", "empty grid"))?;
        let reference = first.env_cost;
        let min = points.iter().map(|p| p.env_cost).fold(f64::INFINITY, f64::min);
        let slack = TIE_RTOL * min.abs();
        let best_index = points.iter().position(|p| p.env_cost <= min + slack).expect("nonempty");
        let best_cost = points[best_index].env_cost;
        let gain = if reference > 0.0 && best_index != 0 {
            (best_cost - reference).abs() / reference
        } else {
            0.0
        };
        Ok(TollSweepResult {
            best_toll: points[best_index].toll,
            best_index,
            best_cost,
            gain,
            points,
        })
    }

    pub fn toll_grid(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.toll).collect()
    }

    pub fn env_costs(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.env_cost).collect()
    }
}

/// Exhaustive search of the gasoline toll on `arc` over
/// `{0, increment, …, toll_max}`. Each solve is warm-started from the previous
/// grid point.
#[allow(clippy::too_many_arguments)]
pub fn optimize_toll(
    net: &RoadNetwork,
    params: &ClassParams,
    sc: &ChargingScenario,
    cfg: &EquilibriumConfig,
    weights: &EnvWeights,
    arc: ArcId,
    toll_max: f64,
    increment: f64,
) -> Result<TollSweepResult> {
    net.arcs().get(arc.0).ok_or(Error::UnknownArc(arc.0))?;
    let grid = toll_grid(toll_max, increment)?;
    let mut points = Vec::with_capacity(grid.len());
    let mut warm: Option<Vec<PathFlow>> = None;
    for toll in grid {
        let (point, eq) = evaluate_toll_point(net, params, sc, cfg, weights, arc, toll, warm.as_deref())?;
        warm = eq.flows.paths;
        points.push(point);
    }
    TollSweepResult::from_points(points)
}

/// Equilibria along a fuel-price grid, warm-started in grid order.
pub fn sweep_fuel_price(
    net: &RoadNetwork,
    params: &ClassParams,
    sc: &ChargingScenario,
    cfg: &EquilibriumConfig,
    lambda_g_grid: &[f64],
) -> Result<Vec<EquilibriumResult>> {
    let mut out: Vec<EquilibriumResult> = Vec::with_capacity(lambda_g_grid.len());
    for &lambda_g in lambda_g_grid {
        let wrap = |e: Error| Error::SweepPoint {
            value: lambda_g,
            source: Box::new(e),
        };
        let p = ClassParams { lambda_g, ..*params };
        let warm = out.last().and_then(|r| r.flows.paths.as_deref());
        out.push(solve_equilibrium_from(net, &p, sc, cfg, warm).map_err(wrap)?);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PenetrationPoint {
    pub x_e: f64,
    pub sweep: TollSweepResult,
}

/// Optimal toll and gain for each EV share. Toll sweeps start cold at each
/// share since the demand split changes.
#[allow(clippy::too_many_arguments)]
pub fn sweep_ev_penetration(
    net: &RoadNetwork,
    params: &ClassParams,
    sc: &ChargingScenario,
    cfg: &EquilibriumConfig,
    weights: &EnvWeights,
    x_e_grid: &[f64],
    arc: ArcId,
    toll_max: f64,
    increment: f64,
) -> Result<Vec<PenetrationPoint>> {
    x_e_grid
        .iter()
        .map(|&x_e| {
            let p = ClassParams { x_e, ..*params };
            p.validate()?;
            let sweep =
                optimize_toll(net, &p, sc, cfg, weights, arc, toll_max, increment).map_err(|e| Error::SweepPoint {
                    value: x_e,
                    source: Box::new(e),
                })?;
            Ok(PenetrationPoint { x_e, sweep })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{build_parallel_network, three_arc_network};

    #[test]
    fn grid_sizes() {
        assert_eq!(toll_grid(5.0, 0.01).unwrap().len(), 501);
        assert_eq!(toll_grid(1.0, 0.3).unwrap().len(), 4);
        assert_eq!(toll_grid(0.0, 0.3).unwrap(), vec![0.0]);
        assert!(toll_grid(1.0, 0.0).is_err());
        assert!(toll_grid(-1.0, 0.1).is_err());
    }

    #[test]
    fn weights_validation() {
        assert!(EnvWeights::new(vec![1.0, 0.5]).is_err());
        let w = EnvWeights::uniform(3).with(ArcId(0), 2.0).unwrap();
        assert_eq!(w.gamma(), &[2.0, 1.0, 1.0]);
        assert!(EnvWeights::uniform(3).with(ArcId(5), 2.0).is_err());
    }

    #[test]
    fn env_cost_only_counts_gasoline() {
        let net = three_arc_network();
        let w = EnvWeights::uniform(3);
        let ev_only = FlowAssignment::from_arc_flows(vec![
            PerClass::new(0.4, 0.0),
            PerClass::new(0.4, 0.0),
            PerClass::new(0.2, 0.0),
        ]);
        assert_eq!(environmental_cost(&net, &ev_only, &w).unwrap(), 0.0);
        let mixed = FlowAssignment::from_arc_flows(vec![
            PerClass::new(0.2, 0.3),
            PerClass::new(0.2, 0.1),
            PerClass::new(0.1, 0.1),
        ]);
        let base = environmental_cost(&net, &mixed, &w).unwrap();
        let doubled = environmental_cost(&net, &mixed, &w.clone().with(ArcId(0), 2.0).unwrap()).unwrap();
        let term_a = 0.3 * net.arcs()[0].travel_time(0.5).unwrap();
        assert!((doubled - base - term_a).abs() < 1e-12);
    }

    #[test]
    fn tie_break_and_gain() {
        let pt = |toll, env_cost| TollPoint {
            toll,
            env_cost,
            arc_flows: Vec::new(),
            unit_price: 0.0,
        };
        let r = TollSweepResult::from_points(vec![pt(0.0, 2.0), pt(0.1, 1.0), pt(0.2, 1.0)]).unwrap();
        assert_eq!((r.best_index, r.best_toll, r.gain), (1, 0.1, 0.5));
        let r = TollSweepResult::from_points(vec![pt(0.0, 1.0), pt(0.1, 1.0)]).unwrap();
        assert_eq!((r.best_index, r.gain), (0, 0.0));
        assert!(TollSweepResult::from_points(Vec::new()).is_err());
    }

    #[test]
    fn single_arc_toll_is_zero() {
        let net = build_parallel_network(&[10.0], &[50.0], &[1.0]).unwrap();
        let r = optimize_toll(
            &net,
            &ClassParams::default(),
            &ChargingScenario::two_slot_reference(),
            &EquilibriumConfig::default(),
            &EnvWeights::uniform(1),
            ArcId(0),
            0.5,
            0.1,
        )
        .unwrap();
        assert_eq!(r.points.len(), 6);
        assert_eq!((r.best_toll, r.gain), (0.0, 0.0));
    }
}
