//! Fear-appraisal driven spectrum handover for cognitive-radio vehicles.
//!
//! A vehicle drives a surveyed route. Each tick it appraises fear of the next
//! bad-signal point, steps a nine-state automaton and lets the CR-Site decide
//! whether to sense, optimise or hand over to another provider.

pub mod cli;
pub mod crsite;
pub mod export;
pub mod fear;
pub mod fuzzy;
pub mod invariants;
pub mod pdfa;
pub mod route;
pub mod scenario;
pub mod sim;

pub use crsite::{TimingModel, TimingPreset};
pub use fear::{FearInputs, FearIntensity, FearModel, FearParams};
pub use route::{ProviderId, RouteDb};
pub use sim::{run, RunLog, SimConfig, Simulation};
