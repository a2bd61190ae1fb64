//! Fixtures shared by the benchmarks.

use pulsepair::sim::FramePair;
use pulsepair::{Detector, Scenario, ScalePreset, SkySimulator};

/// A desk-scale simulator, detector and a handful of noise frame pairs.
pub struct DeskFixture {
    pub scenario: Scenario,
    pub sim: SkySimulator,
    pub detector: Detector,
    pub frames: Vec<FramePair>,
}

impl DeskFixture {
    pub fn new(ticks: u64) -> Self {
        let scenario = Scenario::for_preset(ScalePreset::Desk);
        let sim = scenario.simulator().expect("desk simulator");
        let detector = scenario.detector().expect("desk detector");
        let frames = sim.frames(60300.0, ticks, 0).collect();
        Self { scenario, sim, detector, frames }
    }
}
