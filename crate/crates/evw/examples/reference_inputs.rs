//! Writes the built-in three-arc network and two-slot scenario as JSON files.
//!
//! `cargo run -p evw --example reference_inputs -- data/`

use std::path::PathBuf;

use evw::formats::{EtaSpec, NetworkFile, ScenarioFile};
use evw_core::network::{three_arc_network, ClassParams};
use evw_core::ChargingScenario;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| ".".into()));
    std::fs::create_dir_all(&dir)?;
    let net = NetworkFile::from_network(&three_arc_network(), &ClassParams::default());
    std::fs::write(dir.join("three_arc.json"), serde_json::to_string_pretty(&net)? + "\n")?;
    let sc = ChargingScenario::two_slot_reference();
    let file = ScenarioFile {
        n: sc.exponent(),
        eta: EtaSpec::PerSlot(sc.eta().to_vec()),
        ell0: sc.ell0().to_vec(),
    };
    std::fs::write(dir.join("two_slot.json"), serde_json::to_string_pretty(&file)? + "\n")?;
    Ok(())
}
