//! Packaged experiments: open-loop EMT circuit, grid-following inverter
//! microgrid, and droop/secondary DC microgrid. Each builds a dataflow
//! cluster around an ELN plant, runs it for the configured duration and
//! returns named waveforms.

pub mod dc;
pub mod emt;
pub mod gfl;

use thiserror::Error;

use crate::config::{ScenarioConfig, ScenarioKind};
use crate::eln::ElnError;
use crate::tdf::{SimAbort, TdfError};
use crate::waveform::Waveform;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("network build failed: {0}")]
    Network(#[from] ElnError),
    #[error("dataflow build failed: {0}")]
    Dataflow(#[from] TdfError),
    #[error(transparent)]
    Abort(#[from] SimAbort),
}

pub fn run_scenario(cfg: &ScenarioConfig) -> Result<Vec<Waveform>, ScenarioError> {
    match cfg.scenario {
        ScenarioKind::Emt => emt::run_emt(cfg),
        ScenarioKind::Gfl => gfl::run_gfl(cfg),
        ScenarioKind::Dc => dc::run_dc(cfg),
    }
}

/// Split a waveform set into groups sharing a time base (start, period,
/// length), so each group can go into one CSV.
pub fn group_by_timebase(ws: Vec<Waveform>) -> Vec<Vec<Waveform>> {
    let mut groups: Vec<Vec<Waveform>> = Vec::new();
    for w in ws {
        match groups.iter_mut().find(|g| {
            let f = &g[0];
            f.period == w.period && f.start == w.start && f.len() == w.len()
        }) {
            Some(g) => g.push(w),
            None => groups.push(vec![w]),
        }
    }
    groups
}
