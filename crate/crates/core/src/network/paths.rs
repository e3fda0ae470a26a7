use alloc::vec;
use alloc::vec::Vec;

use super::{ArcId, Class, NodeId, Path, RoadNetwork};
use crate::error::{Error, Result};

/// Largest path set enumerated for oracles and certificates.
pub const PATH_LIMIT: usize = 10_000;

/// Flow of one class on one route, carrying its own arc sequence so that it
/// does not depend on a pre-enumerated path set.
#[derive(Debug, Clone, PartialEq)]
pub struct PathFlow {
    pub od: usize,
    pub class: Class,
    pub arcs: Vec<ArcId>,
    pub flow: f64,
}

pub(super) fn enumerate_simple_paths(net: &RoadNetwork, limit: usize) -> Result<Vec<Path>> {
    let mut out = Vec::new();
    for (k, od) in net.od_pairs().iter().enumerate() {
        let mut on_path = vec![false; net.nodes().len()];
        let mut stack = Vec::new();
        walk(
            net,
            od.origin,
            od.destination,
            k,
            &mut on_path,
            &mut stack,
            &mut out,
            limit,
        )?;
    }
    Ok(out)
}

#[allow(clippy::too_many_arguments)]
fn walk(
    net: &RoadNetwork,
    at: NodeId,
    target: NodeId,
    od: usize,
    on_path: &mut [bool],
    stack: &mut Vec<ArcId>,
    out: &mut Vec<Path>,
    limit: usize,
) -> Result<()> {
    if at == target {
        if out.len() == limit {
            return Err(Error::invalid(
                "paths",
                alloc::format!("more than {limit} simple paths; enumeration refused"),
            ));
        }
        out.push(Path {
            od,
            arcs: stack.clone(),
        });
        return Ok(());
    }
    on_path[at.0] = true;
    for &a in net.out_arcs(at) {
        let head = net.arc(a).head;
        if !on_path[head.0] {
            stack.push(a);
            walk(net, head, target, od, on_path, stack, out, limit)?;
            stack.pop();
        }
    }
    on_path[at.0] = false;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{Arc, OdPair};
    use alloc::string::String;

    #[test]
    fn grid_paths_are_lexicographic() {
        // 0 -> 1 -> 3, 0 -> 2 -> 3, 0 -> 3
        let mk = |t, h| Arc::new("", NodeId(t), NodeId(h), 1.0, 1.0, 1.0, 1.0, 2.0).unwrap();
        let net = RoadNetwork::new(
            (0..4).map(|i| alloc::format!("n{i}")).collect::<Vec<String>>(),
            vec![mk(0, 1), mk(0, 2), mk(1, 3), mk(2, 3), mk(0, 3), mk(1, 2)],
            vec![OdPair {
                origin: NodeId(0),
                destination: NodeId(3),
                demand: 1.0,
            }],
        )
        .unwrap()
        .with_enumerated_paths()
        .unwrap();
        let seqs: Vec<Vec<usize>> = net
            .paths()
            .iter()
            .map(|p| p.arcs.iter().map(|a| a.0).collect())
            .collect();
        assert_eq!(seqs, vec![vec![0, 2], vec![0, 5, 3], vec![1, 3], vec![4]]);
    }
}
