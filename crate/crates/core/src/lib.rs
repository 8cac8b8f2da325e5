//! Kinematics, soil traction, cycle sequencing, simulation, sensing,
//! analysis and planning for a push-pull interlock-drive field robot.

// `!(x > 0.0)` also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod calibrate;
pub mod cli;
pub mod cycle;
pub mod error;
pub mod io;
pub mod kinematics;
pub mod planner;
pub mod sensors;
pub mod sim;
pub mod soil;
pub mod trajectory;

pub use error::{Error, Result};
