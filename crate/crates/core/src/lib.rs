//! Intention reading for human–robot collaboration in a simulated kitchen.
//!
//! The pipeline turns raw world states into qualitative spatial relations,
//! estimates which object the person attends to, classifies single-tick
//! movements, aggregates them into actions, and matches the action stream
//! against a library of goal plans. A knowledge base filters out actions and
//! explanations that are physically implausible.

pub mod action;
pub mod config;
pub mod fixtures;
pub mod focus;
pub mod goal;
pub mod kb;
pub mod movement;
pub mod qsr;
pub mod session;
pub mod sim;
pub mod similarity;
pub mod supervisor;
pub mod world;
