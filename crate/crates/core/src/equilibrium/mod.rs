//! Wardrop equilibria of the coupled driving and charging game.
//!
//! Equilibria are the minimisers of a Beckmann-type potential whose partial
//! derivatives are exactly the generalized arc costs. [`solve_equilibrium`]
//! minimises it with a conditional-gradient method over path flows and
//! [`verify_wardrop`] certifies the result against shortest-path costs.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::network::FlowAssignment;

mod oracle;
mod potential;
mod solver;
mod wardrop;

pub use oracle::{enumerate_parallel_equilibrium, refine_parallel_equilibrium};
pub use potential::{beckmann_gradient, beckmann_potential, Beckmann};
pub use solver::{solve_equilibrium, solve_equilibrium_from};
pub use wardrop::{verify_wardrop, WardropReport};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EquilibriumConfig {
    /// Stop once the Frank-Wolfe gap divided by the potential is below this.
    pub gap_tolerance: f64,
    pub max_iterations: usize,
    /// Bisection stops when the step bracket is narrower than this fraction
    /// of the movable flow.
    pub line_search_tolerance: f64,
    /// Relative path-cost slack accepted by the Wardrop certificate.
    pub wardrop_epsilon: f64,
}

impl Default for EquilibriumConfig {
    fn default() -> Self {
        EquilibriumConfig {
            gap_tolerance: 1e-6,
            max_iterations: 100_000,
            line_search_tolerance: 1e-10,
            wardrop_epsilon: 1e-5,
        }
    }
}

impl EquilibriumConfig {
    pub fn validate(&self) -> Result<()> {
        for (field, v) in [
            ("gap_tolerance", self.gap_tolerance),
            ("line_search_tolerance", self.line_search_tolerance),
            ("wardrop_epsilon", self.wardrop_epsilon),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(field, alloc::format!("must be finite and > 0, got {v}")));
            }
        }
        if self.max_iterations == 0 {
            return Err(Error::invalid("max_iterations", "must be >= 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumResult {
    /// Arc flows together with the path flows producing them.
    pub flows: FlowAssignment,
    /// `L_e` (kWh).
    pub charging_need: f64,
    /// `λ_e(L_e)` (€/kWh).
    pub unit_price: f64,
    pub potential: f64,
    pub relative_gap: f64,
    /// Completed step rounds (one pairwise step per class and O-D pair each).
    pub iterations: usize,
    pub wardrop_residual: f64,
    /// `wardrop_residual <= wardrop_epsilon`.
    pub certified: bool,
    /// The charging price is increasing, so the equilibrium is unique.
    /// Otherwise the result is only known to be a local minimum.
    pub unique_regime: bool,
    /// Steps taken with the `2/(k+2)` rule because the line derivative was
    /// not monotone. Nonzero only outside the unique regime.
    pub fallback_steps: usize,
    /// Potential at every gap evaluation.
    pub potential_trace: Vec<f64>,
}
