//! Sink-equilibrium analysis of multi-agent meta-games and the perturbed
//! strict best response dynamics that select among sink equilibria.

pub mod error;
pub mod fixtures;
pub mod formats;
pub mod chain;
pub mod dynamics;
pub mod equilibrium;
pub mod game_model;
pub mod metrics;
pub mod report;
pub mod response_graph;
pub mod rng;
pub mod simplex;

pub use error::{Error, Result};
