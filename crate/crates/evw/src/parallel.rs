//! Sweeps fanned out over a thread pool.
//!
//! `threads == 0` runs the warm-started sequential sweeps of `evw-core`.
//! Otherwise every grid point is solved from a cold start on a pool of
//! `threads` workers and results are reduced in grid order, so any positive
//! thread count gives identical output.

use evw_core::equilibrium::{solve_equilibrium, EquilibriumConfig, EquilibriumResult};
use evw_core::incentives::{self, evaluate_toll_point, EnvWeights, PenetrationPoint, TollPoint, TollSweepResult};
use evw_core::network::{ArcId, ClassParams, RoadNetwork};
use evw_core::{ChargingScenario, Error};
use rayon::prelude::*;

use crate::error::{EvwError, Result};

pub const THREADS_VAR: &str = "EVW_THREADS";

/// Worker count from `EVW_THREADS`; unset or empty means 0 (sequential).
pub fn threads_from_env() -> Result<usize> {
    match std::env::var(THREADS_VAR) {
        Err(_) => Ok(0),
        Ok(s) if s.trim().is_empty() => Ok(0),
        Ok(s) => s
            .trim()
            .parse()
            .map_err(|_| EvwError::Usage(format!("{THREADS_VAR} must be a nonnegative integer, got `{s}`"))),
    }
}

fn pool(threads: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| EvwError::Usage(format!("cannot start {threads} worker threads: {e}")))
}

// First error in grid order, so failures are reported deterministically.
fn in_order<T>(results: Vec<evw_core::Result<T>>) -> evw_core::Result<Vec<T>> {
    results.into_iter().collect()
}

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
    threads: usize,
) -> Result<TollSweepResult> {
    if threads == 0 {
        return Ok(incentives::optimize_toll(
            net, params, sc, cfg, weights, arc, toll_max, increment,
        )?);
    }
    net.arcs().get(arc.0).ok_or(Error::UnknownArc(arc.0))?;
    let grid = incentives::toll_grid(toll_max, increment)?;
    let results: Vec<evw_core::Result<TollPoint>> = pool(threads)?.install(|| {
        grid.par_iter()
            .map(|&t| evaluate_toll_point(net, params, sc, cfg, weights, arc, t, None).map(|(p, _)| p))
            .collect()
    });
    Ok(TollSweepResult::from_points(in_order(results)?)?)
}

pub fn sweep_fuel_price(
    net: &RoadNetwork,
    params: &ClassParams,
    sc: &ChargingScenario,
    cfg: &EquilibriumConfig,
    lambda_g_grid: &[f64],
    threads: usize,
) -> Result<Vec<EquilibriumResult>> {
    if threads == 0 {
        return Ok(incentives::sweep_fuel_price(net, params, sc, cfg, lambda_g_grid)?);
    }
    let results: Vec<evw_core::Result<EquilibriumResult>> = pool(threads)?.install(|| {
        lambda_g_grid
            .par_iter()
            .map(|&lambda_g| {
                let p = ClassParams { lambda_g, ..*params };
                solve_equilibrium(net, &p, sc, cfg).map_err(|e| Error::SweepPoint {
                    value: lambda_g,
                    source: Box::new(e),
                })
            })
            .collect()
    });
    Ok(in_order(results)?)
}

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
    threads: usize,
) -> Result<Vec<PenetrationPoint>> {
    if threads == 0 {
        return Ok(incentives::sweep_ev_penetration(
            net, params, sc, cfg, weights, x_e_grid, arc, toll_max, increment,
        )?);
    }
    net.arcs().get(arc.0).ok_or(Error::UnknownArc(arc.0))?;
    for &x_e in x_e_grid {
        ClassParams { x_e, ..*params }.validate()?;
    }
    let grid = incentives::toll_grid(toll_max, increment)?;
    // One task per (share, toll) pair balances the load better than one per share.
    let tasks: Vec<(usize, f64)> = (0..x_e_grid.len())
        .flat_map(|i| grid.iter().map(move |&t| (i, t)))
        .collect();
    let results: Vec<evw_core::Result<TollPoint>> = pool(threads)?.install(|| {
        tasks
            .par_iter()
            .map(|&(i, t)| {
                let p = ClassParams {
                    x_e: x_e_grid[i],
                    ..*params
                };
                evaluate_toll_point(net, &p, sc, cfg, weights, arc, t, None)
                    .map(|(pt, _)| pt)
                    .map_err(|e| Error::SweepPoint {
                        value: x_e_grid[i],
                        source: Box::new(e),
                    })
            })
            .collect()
    });
    let mut points = in_order(results)?.into_iter();
    let mut out = Vec::with_capacity(x_e_grid.len());
    for &x_e in x_e_grid {
        let chunk: Vec<TollPoint> = points.by_ref().take(grid.len()).collect();
        out.push(PenetrationPoint {
            x_e,
            sweep: TollSweepResult::from_points(chunk)?,
        });
    }
    Ok(out)
}
