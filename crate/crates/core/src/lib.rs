//! Routing-free information diffusion in a simulated robot swarm.
//!
//! Robots move in a walled 2D arena and talk over a directional, range-limited
//! infrared-like channel. Two diffusion protocols run on top of it:
//!
//! * [`field`]: a virtual gradient field, decremented at each hop, that robots
//!   can climb back to its source;
//! * [`epidemic`]: a low-rate unmodified message that infects every robot it
//!   reaches and drives cluster-size-dependent waiting.
//!
//! [`analytic`] holds the closed-form spreading-time estimate, and
//! [`scenario`] ties everything to the config files and artifacts used by the
//! `swarm-diffusion` binary.

pub mod analytic;
pub mod channel;
pub mod config;
pub mod epidemic;
pub mod error;
pub mod field;
pub mod geometry;
pub mod io;
pub mod metrics;
pub mod scenario;
pub mod sim;

pub use config::{parse_config, RunConfig, Scenario};
pub use error::{Error, Result};
pub use geometry::{Pose, Vec2};
pub use sim::{init_world, SimConfig, World};
