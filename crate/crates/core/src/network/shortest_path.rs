//! Label-setting shortest paths with a deterministic tie rule.
//!
//! Distances to the destination are computed on the reverse graph; the route
//! is then read forward from the origin along tight arcs, trying arcs in
//! increasing id order. The result is the lexicographically smallest arc-id
//! sequence among minimum-cost simple paths.

use alloc::collections::BinaryHeap;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use super::{ArcId, NodeId, RoadNetwork};
use crate::error::{Error, Result};

#[derive(PartialEq)]
struct Label(f64, usize);

impl Eq for Label {}

impl Ord for Label {
    fn cmp(&self, other: &Self) -> Ordering {
        // min-heap on distance, then node index
        other.0.total_cmp(&self.0).then_with(|| other.1.cmp(&self.1))
    }
}

impl PartialOrd for Label {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn tight(cost: f64, dist_head: f64, dist_tail: f64) -> bool {
    cost + dist_head <= dist_tail + 1e-12 * dist_tail.abs().max(1e-300)
}

pub(super) fn shortest_path(
    net: &RoadNetwork,
    origin: NodeId,
    destination: NodeId,
    arc_cost: &[f64],
) -> Result<(Vec<ArcId>, f64)> {
    let n = net.nodes().len();
    if origin.0 >= n {
        return Err(Error::UnknownNode(origin.0));
    }
    if destination.0 >= n {
        return Err(Error::UnknownNode(destination.0));
    }
    if arc_cost.len() != net.arcs().len() {
        return Err(Error::invalid("arc_cost", "one cost per arc is required"));
    }
    if let Some(i) = arc_cost.iter().position(|c| !(c.is_finite() && *c >= 0.0)) {
        return Err(Error::invalid(
            alloc::format!("arc_cost[{i}]"),
            alloc::format!("must be finite and >= 0, got {}", arc_cost[i]),
        ));
    }

    let mut in_arcs = vec![Vec::new(); n];
    for (i, arc) in net.arcs().iter().enumerate() {
        in_arcs[arc.head.0].push(i);
    }
    let mut dist = vec![f64::INFINITY; n];
    let mut done = vec![false; n];
    let mut heap = BinaryHeap::new();
    dist[destination.0] = 0.0;
    heap.push(Label(0.0, destination.0));
    while let Some(Label(d, v)) = heap.pop() {
        if done[v] {
            continue;
        }
        done[v] = true;
        for &i in &in_arcs[v] {
            let u = net.arcs()[i].tail.0;
            let nd = d + arc_cost[i];
            if nd < dist[u] {
                dist[u] = nd;
                heap.push(Label(nd, u));
            }
        }
    }
    if !dist[origin.0].is_finite() {
        return Err(Error::Unreachable {
            origin: origin.0,
            destination: destination.0,
        });
    }

    // Forward read-out along tight arcs, smallest arc id first.
    let mut on_path = vec![false; n];
    let mut dead = vec![false; n];
    let mut route = Vec::new();
    if read_out(
        net,
        origin,
        destination,
        arc_cost,
        &dist,
        &done,
        &mut on_path,
        &mut dead,
        &mut route,
    ) {
        let cost = route.iter().map(|a: &ArcId| arc_cost[a.0]).sum();
        Ok((route, cost))
    } else {
        Err(Error::Unreachable {
            origin: origin.0,
            destination: destination.0,
        })
    }
}

#[allow(clippy::too_many_arguments)]
fn read_out(
    net: &RoadNetwork,
    at: NodeId,
    destination: NodeId,
    cost: &[f64],
    dist: &[f64],
    done: &[bool],
    on_path: &mut [bool],
    dead: &mut [bool],
    route: &mut Vec<ArcId>,
) -> bool {
    if at == destination {
        return true;
    }
    on_path[at.0] = true;
    for &a in net.out_arcs(at) {
        let head = net.arc(a).head.0;
        if on_path[head] || dead[head] || !done[head] {
            continue;
        }
        if tight(cost[a.0], dist[head], dist[at.0]) {
            route.push(a);
            if read_out(net, NodeId(head), destination, cost, dist, done, on_path, dead, route) {
                return true;
            }
            route.pop();
        }
    }
    on_path[at.0] = false;
    dead[at.0] = true;
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{build_parallel_network, Arc, OdPair};
    use alloc::string::String;

    #[test]
    fn parallel_arcs_pick_cheapest() {
        let net = build_parallel_network(&[1.0; 3], &[1.0; 3], &[1.0; 3]).unwrap();
        let (p, c) = net.shortest_path(NodeId(0), NodeId(1), &[3.0, 5.0, 5.0]).unwrap();
        assert_eq!((p, c), (vec![ArcId(0)], 3.0));
        let (p, _) = net.shortest_path(NodeId(0), NodeId(1), &[6.0, 5.0, 5.0]).unwrap();
        assert_eq!(p, vec![ArcId(1)]);
    }

    #[test]
    fn unreachable_and_bad_costs() {
        let net = build_parallel_network(&[1.0], &[1.0], &[1.0]).unwrap();
        assert!(matches!(
            net.shortest_path(NodeId(1), NodeId(0), &[1.0]),
            Err(Error::Unreachable { .. })
        ));
        assert!(net.shortest_path(NodeId(0), NodeId(1), &[-1.0]).is_err());
        assert!(net.shortest_path(NodeId(0), NodeId(1), &[f64::NAN]).is_err());
    }

    #[test]
    fn zero_cost_cycle_is_not_followed() {
        // 0 <-> 1 at zero cost, 1 -> 2 and 0 -> 2
        let mk = |t, h| Arc::new("", NodeId(t), NodeId(h), 1.0, 1.0, 1.0, 1.0, 2.0).unwrap();
        let net = RoadNetwork::new(
            (0..3).map(|i| alloc::format!("{i}")).collect::<Vec<String>>(),
            vec![mk(0, 1), mk(1, 0), mk(1, 2), mk(0, 2)],
            vec![OdPair {
                origin: NodeId(0),
                destination: NodeId(2),
                demand: 1.0,
            }],
        )
        .unwrap();
        let (p, c) = net.shortest_path(NodeId(0), NodeId(2), &[0.0, 0.0, 1.0, 1.0]).unwrap();
        assert_eq!(c, 1.0);
        assert_eq!(p, vec![ArcId(0), ArcId(2)]);
    }
}
