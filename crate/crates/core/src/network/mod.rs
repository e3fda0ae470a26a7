//! Road graph, BPR congestion, generalized costs and demand feasibility.
//!
//! Units throughout: hours, kilometres, kWh (litres for gasoline vehicles)
//! and euros. Flows are normalized so that the O-D demands sum to one; an arc
//! capacity is expressed in the same normalized unit.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Index, IndexMut};

use crate::error::{Error, Result};

mod paths;
mod shortest_path;

pub use paths::{PathFlow, PATH_LIMIT};

/// Flows below this are treated as unused by certificates and reports.
pub const USED_FLOW: f64 = 1e-9;

/// Tolerance on demand sums and flow conservation.
pub const FEASIBILITY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ArcId(pub usize);

/// Index into [`RoadNetwork::paths`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PathId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Class {
    /// Electric vehicles, paying the endogenous charging price.
    Ev,
    /// Gasoline vehicles, paying the exogenous fuel price.
    Gv,
}

impl Class {
    pub const ALL: [Class; 2] = [Class::Ev, Class::Gv];

    pub fn as_str(self) -> &'static str {
        match self {
            Class::Ev => "ev",
            Class::Gv => "gv",
        }
    }
}

/// A pair of values, one per vehicle class.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PerClass<T> {
    pub ev: T,
    pub gv: T,
}

impl<T> PerClass<T> {
    pub fn new(ev: T, gv: T) -> Self {
        PerClass { ev, gv }
    }

    pub fn map<U>(self, mut f: impl FnMut(Class, T) -> U) -> PerClass<U> {
        PerClass {
            ev: f(Class::Ev, self.ev),
            gv: f(Class::Gv, self.gv),
        }
    }
}

impl PerClass<f64> {
    pub fn total(&self) -> f64 {
        self.ev + self.gv
    }
}

impl<T> Index<Class> for PerClass<T> {
    type Output = T;
    fn index(&self, class: Class) -> &T {
        match class {
            Class::Ev => &self.ev,
            Class::Gv => &self.gv,
        }
    }
}

impl<T> IndexMut<Class> for PerClass<T> {
    fn index_mut(&mut self, class: Class) -> &mut T {
        match class {
            Class::Ev => &mut self.ev,
            Class::Gv => &mut self.gv,
        }
    }
}

fn positive(field: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(field, alloc::format!("must be finite and > 0, got {v}")))
    }
}

fn nonnegative(field: &str, v: f64) -> Result<()> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(
            field,
            alloc::format!("must be finite and >= 0, got {v}"),
        ))
    }
}

/// A directed road segment with a BPR travel-time function
/// `d(x) = d0 * (1 + alpha * (x / capacity)^beta)`, `d0 = length / speed`.
#[derive(Debug, Clone, PartialEq)]
pub struct Arc {
    pub label: String,
    pub tail: NodeId,
    pub head: NodeId,
    pub length_km: f64,
    pub capacity: f64,
    pub free_flow_speed: f64,
    pub bpr_alpha: f64,
    pub bpr_beta: f64,
}

impl Arc {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        label: impl Into<String>,
        tail: NodeId,
        head: NodeId,
        length_km: f64,
        capacity: f64,
        free_flow_speed: f64,
        bpr_alpha: f64,
        bpr_beta: f64,
    ) -> Result<Self> {
        positive("length_km", length_km)?;
        positive("capacity", capacity)?;
        positive("speed_kmh", free_flow_speed)?;
        positive("alpha", bpr_alpha)?;
        if !(bpr_beta.is_finite() && bpr_beta > 1.0) {
            return Err(Error::invalid("beta", alloc::format!("must be > 1, got {bpr_beta}")));
        }
        let arc = Arc {
            label: label.into(),
            tail,
            head,
            length_km,
            capacity,
            free_flow_speed,
            bpr_alpha,
            bpr_beta,
        };
        positive("free_flow_time", arc.free_flow_time())?;
        Ok(arc)
    }

    /// Free-flow time `d0` in hours.
    pub fn free_flow_time(&self) -> f64 {
        self.length_km / self.free_flow_speed
    }

    /// Travel time in hours at total flow `flow`.
    pub fn travel_time(&self, flow: f64) -> Result<f64> {
        nonnegative("flow", flow)?;
        Ok(self.delay(flow))
    }

    /// Unchecked BPR evaluation; `flow` is assumed nonnegative.
    #[inline]
    pub(crate) fn delay(&self, flow: f64) -> f64 {
        let ratio = flow / self.capacity;
        self.free_flow_time() * (1.0 + self.bpr_alpha * pow_ratio(ratio, self.bpr_beta))
    }

    /// `∫_0^flow d(x) dx` in closed form.
    pub fn delay_integral(&self, flow: f64) -> f64 {
        let b = self.bpr_beta;
        let ratio = flow / self.capacity;
        self.free_flow_time() * flow * (1.0 + self.bpr_alpha * pow_ratio(ratio, b) / (b + 1.0))
    }
}

#[inline]
fn pow_ratio(ratio: f64, beta: f64) -> f64 {
    if ratio <= 0.0 {
        0.0
    } else if beta == 4.0 {
        let r2 = ratio * ratio;
        r2 * r2
    } else {
        libm::pow(ratio, beta)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OdPair {
    pub origin: NodeId,
    pub destination: NodeId,
    /// Share of the fleet travelling from `origin` to `destination`.
    pub demand: f64,
}

/// Per-class driving parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassParams {
    /// Share of electric vehicles, in `[0, 1]`.
    pub x_e: f64,
    /// Electric consumption, kWh/km.
    pub m_e: f64,
    /// Fuel consumption, L/km.
    pub m_g: f64,
    /// Fuel unit price, €/L.
    pub lambda_g: f64,
    /// Value of time, €/h.
    pub tau: f64,
    /// Number of vehicles represented by one unit of normalized flow. Scales
    /// the fleet charging need handed to the aggregator.
    pub fleet_scale: f64,
}

impl Default for ClassParams {
    /// Half-electric fleet, 0.2 kWh/km, 0.06 L/km, 1.5 €/L, 10 €/h.
    fn default() -> Self {
        ClassParams {
            x_e: 0.5,
            m_e: 0.2,
            m_g: 0.06,
            lambda_g: 1.5,
            tau: 10.0,
            fleet_scale: 1.0,
        }
    }
}

impl ClassParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.x_e.is_finite() && (0.0..=1.0).contains(&self.x_e)) {
            return Err(Error::invalid(
                "x_e",
                alloc::format!("must lie in [0, 1], got {}", self.x_e),
            ));
        }
        positive("m_e", self.m_e)?;
        positive("m_g", self.m_g)?;
        positive("lambda_g", self.lambda_g)?;
        positive("tau", self.tau)?;
        positive("fleet_scale", self.fleet_scale)
    }

    /// Class share `X_s`.
    pub fn share(&self, class: Class) -> f64 {
        match class {
            Class::Ev => self.x_e,
            Class::Gv => 1.0 - self.x_e,
        }
    }

    /// Energy consumed per km, `m_s`.
    pub fn consumption(&self, class: Class) -> f64 {
        match class {
            Class::Ev => self.m_e,
            Class::Gv => self.m_g,
        }
    }

    /// Energy unit price `λ_s` given the current charging price.
    pub fn energy_price(&self, class: Class, unit_price_e: f64) -> f64 {
        match class {
            Class::Ev => unit_price_e,
            Class::Gv => self.lambda_g,
        }
    }
}

/// A route of an O-D pair, stored as its arc sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct Path {
    pub od: usize,
    pub arcs: Vec<ArcId>,
}

/// The transportation graph with demands and per-class tolls.
#[derive(Debug, Clone, PartialEq)]
pub struct RoadNetwork {
    nodes: Vec<String>,
    arcs: Vec<Arc>,
    od_pairs: Vec<OdPair>,
    tolls: Vec<PerClass<f64>>,
    paths: Vec<Path>,
    out_arcs: Vec<Vec<ArcId>>,
}

impl RoadNetwork {
    /// Builds and validates a network. Demands must be nonnegative and sum to
    /// one, and every O-D pair must be connected by a directed path.
    pub fn new(nodes: Vec<String>, arcs: Vec<Arc>, od_pairs: Vec<OdPair>) -> Result<Self> {
        if nodes.is_empty() {
            return Err(Error::invalid("nodes", "at least one node is required"));
        }
        let mut out_arcs = vec![Vec::new(); nodes.len()];
        for (i, arc) in arcs.iter().enumerate() {
            for (field, node) in [("tail", arc.tail), ("head", arc.head)] {
                if node.0 >= nodes.len() {
                    return Err(Error::invalid(
                        alloc::format!("arcs[{i}].{field}"),
                        alloc::format!("node #{} does not exist", node.0),
                    ));
                }
            }
            out_arcs[arc.tail.0].push(ArcId(i));
        }
        if od_pairs.is_empty() {
            return Err(Error::invalid("od_pairs", "at least one O-D pair is required"));
        }
        let mut total = 0.0;
        for (k, od) in od_pairs.iter().enumerate() {
            nonnegative("demand", od.demand).map_err(|e| e.within(&alloc::format!("od_pairs[{k}]")))?;
            for (field, node) in [("origin", od.origin), ("destination", od.destination)] {
                if node.0 >= nodes.len() {
                    return Err(Error::invalid(
                        alloc::format!("od_pairs[{k}].{field}"),
                        alloc::format!("node #{} does not exist", node.0),
                    ));
                }
            }
            if od.origin == od.destination {
                return Err(Error::invalid(
                    alloc::format!("od_pairs[{k}]"),
                    "origin and destination coincide",
                ));
            }
            total += od.demand;
        }
        if (total - 1.0).abs() > FEASIBILITY_TOL {
            return Err(Error::invalid(
                "od_pairs",
                alloc::format!("demands must sum to 1, got {total}"),
            ));
        }
        let tolls = vec![PerClass::default(); arcs.len()];
        let net = RoadNetwork {
            nodes,
            arcs,
            od_pairs,
            tolls,
            paths: Vec::new(),
            out_arcs,
        };
        let zero = vec![0.0; net.arcs.len()];
        for (k, od) in net.od_pairs.iter().enumerate() {
            if od.demand > 0.0 && net.shortest_path(od.origin, od.destination, &zero).is_err() {
                return Err(Error::invalid(
                    alloc::format!("od_pairs[{k}]"),
                    "destination is not reachable from origin",
                ));
            }
        }
        Ok(net)
    }

    pub fn nodes(&self) -> &[String] {
        &self.nodes
    }

    pub fn arcs(&self) -> &[Arc] {
        &self.arcs
    }

    pub fn arc(&self, id: ArcId) -> &Arc {
        &self.arcs[id.0]
    }

    pub fn od_pairs(&self) -> &[OdPair] {
        &self.od_pairs
    }

    pub fn paths(&self) -> &[Path] {
        &self.paths
    }

    pub fn out_arcs(&self, node: NodeId) -> &[ArcId] {
        &self.out_arcs[node.0]
    }

    pub fn arc_by_label(&self, label: &str) -> Option<ArcId> {
        self.arcs.iter().position(|a| a.label == label).map(ArcId)
    }

    pub fn node_by_label(&self, label: &str) -> Option<NodeId> {
        self.nodes.iter().position(|n| n == label).map(NodeId)
    }

    pub fn toll(&self, arc: ArcId, class: Class) -> f64 {
        self.tolls[arc.0][class]
    }

    pub fn set_toll(&mut self, arc: ArcId, class: Class, euro: f64) -> Result<()> {
        if arc.0 >= self.arcs.len() {
            return Err(Error::UnknownArc(arc.0));
        }
        nonnegative("toll", euro)?;
        self.tolls[arc.0][class] = euro;
        Ok(())
    }

    pub fn with_toll(mut self, arc: ArcId, class: Class, euro: f64) -> Result<Self> {
        self.set_toll(arc, class, euro)?;
        Ok(self)
    }

    /// Registers an explicit route for O-D pair `od`. The arc sequence must be
    /// a connected walk from its origin to its destination.
    pub fn add_path(&mut self, od: usize, arcs: Vec<ArcId>) -> Result<PathId> {
        let pair = self
            .od_pairs
            .get(od)
            .ok_or_else(|| Error::invalid("od", "unknown O-D pair"))?;
        let mut at = pair.origin;
        for &a in &arcs {
            let arc = self.arcs.get(a.0).ok_or(Error::UnknownArc(a.0))?;
            if arc.tail != at {
                return Err(Error::invalid("path", "arcs do not form a connected walk"));
            }
            at = arc.head;
        }
        if at != pair.destination || arcs.is_empty() {
            return Err(Error::invalid("path", "walk does not end at the destination"));
        }
        self.paths.push(Path { od, arcs });
        Ok(PathId(self.paths.len() - 1))
    }

    /// Replaces the path set by every simple path of every O-D pair, in
    /// lexicographic arc-id order. Fails when more than [`PATH_LIMIT`] paths exist.
    pub fn with_enumerated_paths(mut self) -> Result<Self> {
        self.paths = paths::enumerate_simple_paths(&self, PATH_LIMIT)?;
        Ok(self)
    }

    /// Aggregates path flows onto arcs: `x_{a,s} = Σ_r δ_{a,r} f_{r,s}`.
    pub fn arc_flows_from_path_flows(&self, path_flows: &[(PathId, PerClass<f64>)]) -> Result<Vec<PerClass<f64>>> {
        let mut arc = vec![PerClass::default(); self.arcs.len()];
        for &(pid, flow) in path_flows {
            let path = self.paths.get(pid.0).ok_or(Error::UnknownPath(pid.0))?;
            nonnegative("path_flow", flow.ev)?;
            nonnegative("path_flow", flow.gv)?;
            for a in &path.arcs {
                arc[a.0].ev += flow.ev;
                arc[a.0].gv += flow.gv;
            }
        }
        Ok(arc)
    }

    /// Generalized cost of one arc for one vehicle of `class`:
    /// `τ·d_a(x_a) + t_{a,s} + l_a·m_s·λ_s`, in euros.
    pub fn arc_cost(
        &self,
        arc: ArcId,
        total_flow: f64,
        class: Class,
        params: &ClassParams,
        unit_price_e: f64,
    ) -> Result<f64> {
        self.arcs.get(arc.0).ok_or(Error::UnknownArc(arc.0))?;
        nonnegative("flow", total_flow)?;
        nonnegative("unit_price_e", unit_price_e)?;
        Ok(self.arc_cost_unchecked(arc, total_flow, class, params, unit_price_e))
    }

    #[inline]
    pub(crate) fn arc_cost_unchecked(
        &self,
        arc: ArcId,
        total_flow: f64,
        class: Class,
        params: &ClassParams,
        unit_price_e: f64,
    ) -> f64 {
        let a = &self.arcs[arc.0];
        params.tau * a.delay(total_flow)
            + self.tolls[arc.0][class]
            + a.length_km * params.consumption(class) * params.energy_price(class, unit_price_e)
    }

    /// Cost of a registered path under the given flows.
    pub fn path_cost(
        &self,
        path: PathId,
        flows: &FlowAssignment,
        class: Class,
        params: &ClassParams,
        unit_price_e: f64,
    ) -> Result<f64> {
        let p = self.paths.get(path.0).ok_or(Error::UnknownPath(path.0))?;
        p.arcs
            .iter()
            .map(|&a| self.arc_cost(a, flows.total(a), class, params, unit_price_e))
            .sum()
    }

    /// Total energy `L_s = m_s · fleet_scale · Σ_a x_{a,s} l_a` (kWh for EV, L for GV).
    pub fn total_class_energy(&self, flows: &FlowAssignment, class: Class, params: &ClassParams) -> f64 {
        let km: f64 = self
            .arcs
            .iter()
            .zip(&flows.arc)
            .map(|(a, x)| x[class] * a.length_km)
            .sum();
        params.consumption(class) * params.fleet_scale * km
    }

    /// Minimum-cost directed path under nonnegative per-arc costs. Among
    /// equal-cost paths the lexicographically smallest arc-id sequence wins.
    pub fn shortest_path(&self, origin: NodeId, destination: NodeId, arc_cost: &[f64]) -> Result<(Vec<ArcId>, f64)> {
        shortest_path::shortest_path(self, origin, destination, arc_cost)
    }

    /// The `fleet_scale` for which the largest feasible EV charging need equals
    /// `fraction` of `total_nonflexible` (kWh). Needs enumerable paths.
    pub fn fleet_scale_for_fraction(&self, params: &ClassParams, total_nonflexible: f64, fraction: f64) -> Result<f64> {
        positive("fraction", fraction)?;
        positive("total_nonflexible", total_nonflexible)?;
        positive("x_e", params.x_e)?;
        let all = paths::enumerate_simple_paths(self, PATH_LIMIT)?;
        let mut km = 0.0;
        for (k, od) in self.od_pairs.iter().enumerate() {
            let longest = all
                .iter()
                .filter(|p| p.od == k)
                .map(|p| p.arcs.iter().map(|a| self.arcs[a.0].length_km).sum::<f64>())
                .fold(0.0, f64::max);
            km += od.demand * longest;
        }
        Ok(fraction * total_nonflexible / (params.m_e * params.x_e * km))
    }

    /// `true` when the graph is two nodes joined only by parallel arcs from
    /// the single positive-demand origin to its destination.
    pub fn is_parallel(&self) -> bool {
        let active: Vec<&OdPair> = self.od_pairs.iter().filter(|o| o.demand > 0.0).collect();
        if self.nodes.len() != 2 || active.len() != 1 {
            return false;
        }
        let od = active[0];
        self.arcs
            .iter()
            .all(|a| a.tail == od.origin && a.head == od.destination)
    }
}

/// Builds a two-node network `O -> D` with one arc per entry, unit demand and
/// BPR parameters `alpha = 2`, `beta = 4`.
pub fn build_parallel_network(lengths: &[f64], speeds: &[f64], capacities: &[f64]) -> Result<RoadNetwork> {
    if lengths.len() != speeds.len() || lengths.len() != capacities.len() {
        return Err(Error::invalid(
            "lengths/speeds/capacities",
            alloc::format!(
                "lengths differ ({}, {}, {})",
                lengths.len(),
                speeds.len(),
                capacities.len()
            ),
        ));
    }
    if lengths.is_empty() {
        return Err(Error::invalid("lengths", "at least one arc is required"));
    }
    const LABELS: &[&str] = &["a", "b", "c", "d", "e", "f", "g", "h"];
    let arcs = lengths
        .iter()
        .zip(speeds)
        .zip(capacities)
        .enumerate()
        .map(|(i, ((&l, &v), &c))| {
            let label = LABELS
                .get(i)
                .map(|s| String::from(*s))
                .unwrap_or_else(|| alloc::format!("arc{i}"));
            Arc::new(label, NodeId(0), NodeId(1), l, c, v, 2.0, 4.0).map_err(|e| e.within(&alloc::format!("arcs[{i}]")))
        })
        .collect::<Result<Vec<_>>>()?;
    RoadNetwork::new(
        vec![String::from("O"), String::from("D")],
        arcs,
        vec![OdPair {
            origin: NodeId(0),
            destination: NodeId(1),
            demand: 1.0,
        }],
    )
}

/// The city-crossing instance: a direct arc `a` of 30 km at 50 km/h and two
/// ring roads `b`, `c` of `π/2 · 30` km at 70 km/h, capacities 1/2, 1, 1/2.
/// Every arc carries its single path, so path enumeration is already done.
pub fn three_arc_network() -> RoadNetwork {
    let ring = core::f64::consts::FRAC_PI_2 * 30.0;
    build_parallel_network(&[30.0, ring, ring], &[50.0, 70.0, 70.0], &[0.5, 1.0, 0.5])
        .and_then(RoadNetwork::with_enumerated_paths)
        .expect("built-in network is valid")
}

/// Per-class flows on arcs, optionally with the path flows they aggregate.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowAssignment {
    pub arc: Vec<PerClass<f64>>,
    pub paths: Option<Vec<PathFlow>>,
}

impl FlowAssignment {
    pub fn zeros(arcs: usize) -> Self {
        FlowAssignment {
            arc: vec![PerClass::default(); arcs],
            paths: None,
        }
    }

    pub fn from_arc_flows(arc: Vec<PerClass<f64>>) -> Self {
        FlowAssignment { arc, paths: None }
    }

    /// Arc flows obtained by aggregating self-describing path flows.
    pub fn from_path_flows(net: &RoadNetwork, paths: Vec<PathFlow>) -> Result<Self> {
        let mut arc = vec![PerClass::default(); net.arcs().len()];
        for (i, p) in paths.iter().enumerate() {
            nonnegative("flow", p.flow).map_err(|e| e.within(&alloc::format!("paths[{i}]")))?;
            for a in &p.arcs {
                let slot = arc.get_mut(a.0).ok_or(Error::UnknownArc(a.0))?;
                slot[p.class] += p.flow;
            }
        }
        Ok(FlowAssignment {
            arc,
            paths: Some(paths),
        })
    }

    pub fn flow(&self, arc: ArcId, class: Class) -> f64 {
        self.arc[arc.0][class]
    }

    /// `x_a = x_{a,e} + x_{a,g}`.
    pub fn total(&self, arc: ArcId) -> f64 {
        self.arc[arc.0].total()
    }

    /// Checks nonnegativity and the demand constraints
    /// `Σ_{r∈R_k} f_{r,s} = X_s D_k` (path flows when present, node
    /// conservation of arc flows otherwise).
    pub fn check_feasible(&self, net: &RoadNetwork, params: &ClassParams) -> Result<()> {
        if self.arc.len() != net.arcs().len() {
            return Err(Error::invalid("flows", "one entry per arc is required"));
        }
        for (i, x) in self.arc.iter().enumerate() {
            for class in Class::ALL {
                if !(x[class].is_finite() && x[class] >= -FEASIBILITY_TOL) {
                    return Err(Error::invalid(
                        alloc::format!("flows[{i}].{}", class.as_str()),
                        alloc::format!("must be >= 0, got {}", x[class]),
                    ));
                }
            }
        }
        for class in Class::ALL {
            let share = params.share(class);
            if let Some(paths) = &self.paths {
                let mut sums = vec![0.0; net.od_pairs().len()];
                for p in paths.iter().filter(|p| p.class == class) {
                    *sums
                        .get_mut(p.od)
                        .ok_or_else(|| Error::invalid("paths.od", "unknown O-D pair"))? += p.flow;
                }
                for (k, od) in net.od_pairs().iter().enumerate() {
                    let want = share * od.demand;
                    if (sums[k] - want).abs() > FEASIBILITY_TOL * want.max(1.0) {
                        return Err(Error::invalid(
                            alloc::format!("paths[od={k}, class={}]", class.as_str()),
                            alloc::format!("flows sum to {} instead of {want}", sums[k]),
                        ));
                    }
                }
            }
            let mut balance = vec![0.0; net.nodes().len()];
            for od in net.od_pairs() {
                balance[od.origin.0] += share * od.demand;
                balance[od.destination.0] -= share * od.demand;
            }
            for (arc, x) in net.arcs().iter().zip(&self.arc) {
                balance[arc.tail.0] -= x[class];
                balance[arc.head.0] += x[class];
            }
            if let Some((n, b)) = balance.iter().enumerate().find(|(_, b)| b.abs() > FEASIBILITY_TOL) {
                return Err(Error::invalid(
                    alloc::format!("flows[class={}]", class.as_str()),
                    alloc::format!("flow conservation violated at node #{n} by {b}"),
                ));
            }
        }
        Ok(())
    }
}
