use alloc::vec::Vec;

use crate::charging::{ChargingScenario, WaterFilling};
use crate::error::Result;
use crate::network::{ArcId, Class, ClassParams, FlowAssignment, PerClass, RoadNetwork};

/// Evaluator of the potential
///
/// ```text
/// B(x) = τ Σ_a ∫_0^{x_a} d_a + Σ_{a,s} t_{a,s} x_{a,s} + (∫_0^{L_e} λ_e + λ_g L_g) / fleet_scale
/// ```
///
/// The energy terms are divided by `fleet_scale` so that `∂B/∂x_{a,s}` is the
/// per-vehicle arc cost for any scaling (with the default scale of 1 this is
/// the plain sum). Methods accept any nonnegative arc flows, feasible or not.
#[derive(Debug, Clone)]
pub struct Beckmann<'a> {
    net: &'a RoadNetwork,
    params: ClassParams,
    wf: WaterFilling,
}

impl<'a> Beckmann<'a> {
    pub fn new(net: &'a RoadNetwork, params: &ClassParams, sc: &ChargingScenario) -> Result<Self> {
        params.validate()?;
        Ok(Beckmann {
            net,
            params: *params,
            wf: sc.water_filling(),
        })
    }

    pub fn network(&self) -> &RoadNetwork {
        self.net
    }

    pub fn params(&self) -> &ClassParams {
        &self.params
    }

    pub fn water_filling(&self) -> &WaterFilling {
        &self.wf
    }

    /// `L_e` for the given arc flows.
    pub fn charging_need(&self, arc: &[PerClass<f64>]) -> f64 {
        let km: f64 = self.net.arcs().iter().zip(arc).map(|(a, x)| x.ev * a.length_km).sum();
        self.params.m_e * self.params.fleet_scale * km
    }

    pub fn unit_price(&self, charging_need: f64) -> f64 {
        self.wf.price_or_limit(charging_need)
    }

    pub fn value(&self, arc: &[PerClass<f64>]) -> f64 {
        let p = &self.params;
        let mut congestion = 0.0;
        let mut tolls = 0.0;
        let mut km = PerClass::<f64>::default();
        for (i, (a, x)) in self.net.arcs().iter().zip(arc).enumerate() {
            congestion += a.delay_integral(x.total());
            tolls += self.net.toll(ArcId(i), Class::Ev) * x.ev + self.net.toll(ArcId(i), Class::Gv) * x.gv;
            km.ev += x.ev * a.length_km;
            km.gv += x.gv * a.length_km;
        }
        let l_e = p.m_e * p.fleet_scale * km.ev;
        p.tau * congestion + tolls + self.wf.price_integral(l_e) / p.fleet_scale + p.lambda_g * p.m_g * km.gv
    }

    /// Per-arc, per-class partial derivatives, i.e. the generalized arc costs
    /// at `λ_e(L_e(x))`.
    pub fn gradient(&self, arc: &[PerClass<f64>]) -> Vec<PerClass<f64>> {
        let price = self.unit_price(self.charging_need(arc));
        (0..self.net.arcs().len())
            .map(|i| {
                let total = arc[i].total();
                PerClass::new(
                    self.net
                        .arc_cost_unchecked(ArcId(i), total, Class::Ev, &self.params, price),
                    self.net
                        .arc_cost_unchecked(ArcId(i), total, Class::Gv, &self.params, price),
                )
            })
            .collect()
    }
}

/// Potential of a feasible assignment.
pub fn beckmann_potential(
    net: &RoadNetwork,
    flows: &FlowAssignment,
    params: &ClassParams,
    sc: &ChargingScenario,
) -> Result<f64> {
    let b = Beckmann::new(net, params, sc)?;
    flows.check_feasible(net, params)?;
    Ok(b.value(&flows.arc))
}

/// Gradient of the potential at a feasible assignment; entry `a` holds
/// `∂B/∂x_{a,e}` and `∂B/∂x_{a,g}`.
pub fn beckmann_gradient(
    net: &RoadNetwork,
    flows: &FlowAssignment,
    params: &ClassParams,
    sc: &ChargingScenario,
) -> Result<Vec<PerClass<f64>>> {
    let b = Beckmann::new(net, params, sc)?;
    flows.check_feasible(net, params)?;
    Ok(b.gradient(&flows.arc))
}
