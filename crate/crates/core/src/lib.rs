//! Reinforcement-learning generation of grid parking garages.

pub mod coloring;
pub mod dqn;
pub mod env;
pub mod garage_set;
pub mod grid;
pub mod maps;
pub mod metrics;
pub mod par;
pub mod reward;
pub mod roadnet;
pub mod sim;
