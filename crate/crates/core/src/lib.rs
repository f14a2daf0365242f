pub mod kinematics;
pub mod model;
pub mod belief;
pub mod preference;
pub mod policy;
pub mod simulation;
pub mod config;
pub mod stats;
pub mod cli;
