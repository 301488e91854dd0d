//! Cucker–Smale flocking under hierarchical leadership with a distributed
//! time delay: a fixed-step simulator plus probes that check the
//! qualitative properties of the delayed dynamics on computed trajectories.

pub mod model;
mod numeric;
pub mod integrator;
pub mod diagnostics;
pub mod scenarios;
pub mod cli;
