//! JSON input files.
//!
//! Network file:
//!
//! ```json
//! {
//!   "nodes": ["O", "D"],
//!   "arcs": [{"id": "a", "tail": "O", "head": "D", "length_km": 30.0,
//!             "capacity": 0.5, "speed_kmh": 50.0, "alpha": 2.0, "beta": 4.0}],
//!   "od_pairs": [{"origin": "O", "destination": "D", "demand": 1.0}],
//!   "tolls": [{"arc_id": "a", "class": "gv", "euro": 0.0}],
//!   "class_params": {"x_e": 0.5, "lambda_g": 1.5}
//! }
//! ```
//!
//! `tolls` and `class_params` are optional; missing class parameters take
//! their defaults. A parameters file has the `class_params` shape. A scenario
//! file holds `n`, `eta` (a number or one value per slot) and `ell0`.
//! Unknown keys are rejected everywhere.

use std::path::Path;

use evw_core::network::{Arc, ArcId, Class, ClassParams, NodeId, OdPair, RoadNetwork};
use evw_core::ChargingScenario;
use serde::{Deserialize, Serialize};

use crate::error::{EvwError, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkFile {
    pub nodes: Vec<String>,
    pub arcs: Vec<ArcSpec>,
    pub od_pairs: Vec<OdSpec>,
    #[serde(default)]
    pub tolls: Vec<TollSpec>,
    #[serde(default)]
    pub class_params: Option<ParamsFile>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArcSpec {
    pub id: String,
    pub tail: String,
    pub head: String,
    pub length_km: f64,
    pub capacity: f64,
    pub speed_kmh: f64,
    pub alpha: f64,
    pub beta: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OdSpec {
    pub origin: String,
    pub destination: String,
    pub demand: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClassTag {
    Ev,
    Gv,
}

impl From<ClassTag> for Class {
    fn from(c: ClassTag) -> Self {
        match c {
            ClassTag::Ev => Class::Ev,
            ClassTag::Gv => Class::Gv,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TollSpec {
    pub arc_id: String,
    pub class: ClassTag,
    pub euro: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsFile {
    pub x_e: Option<f64>,
    pub m_e: Option<f64>,
    pub m_g: Option<f64>,
    pub lambda_g: Option<f64>,
    pub tau: Option<f64>,
    pub fleet_scale: Option<f64>,
}

impl ParamsFile {
    /// Fields set here replace those of `base`.
    pub fn apply(&self, base: ClassParams) -> ClassParams {
        ClassParams {
            x_e: self.x_e.unwrap_or(base.x_e),
            m_e: self.m_e.unwrap_or(base.m_e),
            m_g: self.m_g.unwrap_or(base.m_g),
            lambda_g: self.lambda_g.unwrap_or(base.lambda_g),
            tau: self.tau.unwrap_or(base.tau),
            fleet_scale: self.fleet_scale.unwrap_or(base.fleet_scale),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum EtaSpec {
    Uniform(f64),
    PerSlot(Vec<f64>),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub n: u32,
    pub eta: EtaSpec,
    pub ell0: Vec<f64>,
}

impl ScenarioFile {
    pub fn build(&self) -> evw_core::Result<ChargingScenario> {
        match &self.eta {
            EtaSpec::Uniform(e) => ChargingScenario::uniform(self.n, *e, self.ell0.clone()),
            EtaSpec::PerSlot(v) => ChargingScenario::new(self.n, v.clone(), self.ell0.clone()),
        }
    }
}

pub fn read(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|source| EvwError::Read {
        path: path.to_path_buf(),
        source,
    })
}

pub fn parse_json<T: serde::de::DeserializeOwned>(path: &Path, bytes: &[u8]) -> Result<T> {
    serde_json::from_slice(bytes).map_err(|e| EvwError::Json {
        path: path.to_path_buf(),
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })
}

impl NetworkFile {
    /// Resolves labels and validates. Errors name the offending field, e.g.
    /// `arcs[2].capacity`.
    pub fn build(&self) -> evw_core::Result<(RoadNetwork, ClassParams)> {
        let node = |label: &str, field: String| -> evw_core::Result<NodeId> {
            self.nodes
                .iter()
                .position(|n| n == label)
                .map(NodeId)
                .ok_or_else(|| invalid(field, format!("unknown node `{label}`")))
        };
        for (i, n) in self.nodes.iter().enumerate() {
            if self.nodes[..i].contains(n) {
                return Err(invalid(format!("nodes[{i}]"), format!("duplicate node `{n}`")));
            }
        }
        let mut arcs = Vec::with_capacity(self.arcs.len());
        for (i, a) in self.arcs.iter().enumerate() {
            if self.arcs[..i].iter().any(|b| b.id == a.id) {
                return Err(invalid(format!("arcs[{i}].id"), format!("duplicate arc `{}`", a.id)));
            }
            let tail = node(&a.tail, format!("arcs[{i}].tail"))?;
            let head = node(&a.head, format!("arcs[{i}].head"))?;
            arcs.push(
                Arc::new(
                    a.id.clone(),
                    tail,
                    head,
                    a.length_km,
                    a.capacity,
                    a.speed_kmh,
                    a.alpha,
                    a.beta,
                )
                .map_err(|e| e.within(&format!("arcs[{i}]")))?,
            );
        }
        let mut od_pairs = Vec::with_capacity(self.od_pairs.len());
        for (k, od) in self.od_pairs.iter().enumerate() {
            od_pairs.push(OdPair {
                origin: node(&od.origin, format!("od_pairs[{k}].origin"))?,
                destination: node(&od.destination, format!("od_pairs[{k}].destination"))?,
                demand: od.demand,
            });
        }
        let mut net = RoadNetwork::new(self.nodes.clone(), arcs, od_pairs)?;
        for (i, t) in self.tolls.iter().enumerate() {
            let arc = net
                .arc_by_label(&t.arc_id)
                .ok_or_else(|| invalid(format!("tolls[{i}].arc_id"), format!("unknown arc `{}`", t.arc_id)))?;
            net.set_toll(arc, t.class.into(), t.euro)
                .map_err(|e| invalid(format!("tolls[{i}].euro"), e.to_string()))?;
        }
        let params = self
            .class_params
            .clone()
            .unwrap_or_default()
            .apply(ClassParams::default());
        params.validate().map_err(|e| e.within("class_params"))?;
        Ok((net, params))
    }

    /// File representation of a network and its parameters.
    pub fn from_network(net: &RoadNetwork, params: &ClassParams) -> Self {
        let label = |n: NodeId| net.nodes()[n.0].clone();
        let mut tolls = Vec::new();
        for (i, a) in net.arcs().iter().enumerate() {
            for (class, tag) in [(Class::Ev, ClassTag::Ev), (Class::Gv, ClassTag::Gv)] {
                let euro = net.toll(ArcId(i), class);
                if euro != 0.0 {
                    tolls.push(TollSpec {
                        arc_id: a.label.clone(),
                        class: tag,
                        euro,
                    });
                }
            }
        }
        NetworkFile {
            nodes: net.nodes().to_vec(),
            arcs: net
                .arcs()
                .iter()
                .map(|a| ArcSpec {
                    id: a.label.clone(),
                    tail: label(a.tail),
                    head: label(a.head),
                    length_km: a.length_km,
                    capacity: a.capacity,
                    speed_kmh: a.free_flow_speed,
                    alpha: a.bpr_alpha,
                    beta: a.bpr_beta,
                })
                .collect(),
            od_pairs: net
                .od_pairs()
                .iter()
                .map(|od| OdSpec {
                    origin: label(od.origin),
                    destination: label(od.destination),
                    demand: od.demand,
                })
                .collect(),
            tolls,
            class_params: Some(ParamsFile {
                x_e: Some(params.x_e),
                m_e: Some(params.m_e),
                m_g: Some(params.m_g),
                lambda_g: Some(params.lambda_g),
                tau: Some(params.tau),
                fleet_scale: Some(params.fleet_scale),
            }),
        }
    }
}

fn invalid(field: String, reason: String) -> evw_core::Error {
    evw_core::Error::Invalid { field, reason }
}

/// Reads and validates a network file.
pub fn load_network(path: &Path) -> Result<(RoadNetwork, ClassParams, Vec<u8>)> {
    let bytes = read(path)?;
    let file: NetworkFile = parse_json(path, &bytes)?;
    let (net, params) = file.build().map_err(|source| EvwError::Invalid {
        path: path.to_path_buf(),
        source,
    })?;
    Ok((net, params, bytes))
}

pub fn load_params(path: &Path) -> Result<(ParamsFile, Vec<u8>)> {
    let bytes = read(path)?;
    Ok((parse_json(path, &bytes)?, bytes))
}

pub fn load_scenario(path: &Path) -> Result<(ChargingScenario, Vec<u8>)> {
    let bytes = read(path)?;
    let file: ScenarioFile = parse_json(path, &bytes)?;
    let sc = file.build().map_err(|source| EvwError::Invalid {
        path: path.to_path_buf(),
        source,
    })?;
    Ok((sc, bytes))
}

#[cfg(test)]
mod tests {
    use super::*;
    use evw_core::network::three_arc_network;

    #[test]
    fn round_trip() {
        let net = three_arc_network().with_toll(ArcId(0), Class::Gv, 0.9).unwrap();
        let params = ClassParams::default();
        let text = serde_json::to_string(&NetworkFile::from_network(&net, &params)).unwrap();
        let file: NetworkFile = serde_json::from_str(&text).unwrap();
        let (back, p) = file.build().unwrap();
        assert_eq!(back.arcs(), net.arcs());
        assert_eq!(back.toll(ArcId(0), Class::Gv), 0.9);
        assert_eq!(p, params);
    }

    #[test]
    fn field_names_in_errors() {
        let mut file = NetworkFile::from_network(&three_arc_network(), &ClassParams::default());
        file.arcs[1].capacity = -1.0;
        let err = file.build().unwrap_err().to_string();
        assert!(err.contains("arcs[1].capacity"), "{err}");
        let mut file = NetworkFile::from_network(&three_arc_network(), &ClassParams::default());
        file.od_pairs[0].origin = "X".into();
        assert!(file.build().unwrap_err().to_string().contains("od_pairs[0].origin"));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let bad = br#"{"n": 2, "eta": 0.01, "ell0": [1, 2], "extra": 1}"#;
        let err = parse_json::<ScenarioFile>(Path::new("s.json"), bad).unwrap_err();
        assert!(matches!(err, EvwError::Json { line: 1, .. }), "{err}");
        let ok: ScenarioFile =
            parse_json(Path::new("s.json"), br#"{"n": 2, "eta": [0.01, 0.02], "ell0": [1, 2]}"#).unwrap();
        assert_eq!(ok.build().unwrap().eta(), &[0.01, 0.02]);
    }
}
