//! Simulation of fragment dispersal against mobile attackers in
//! unattended wireless sensor networks.

pub mod energy;
pub mod engine;
pub mod harness;
pub mod mobility;
pub mod placement;
pub mod routing;
pub mod scenario;
pub mod stats;
pub mod sweep;
pub mod topology;
