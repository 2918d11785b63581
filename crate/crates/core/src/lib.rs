// SPDX-License-Identifier: Apache-2.0 OR MIT

//! Distance-free collision avoidance for unicycle vehicles.
//!
//! The avoidance law reads only loom (`ρ̇/ρ`), the line-of-sight angle and
//! its rate, plus the robot's own heading and speed. Range appears only on
//! the truth side: in region classification, the runtime certificate and
//! the simulator.

pub mod certificate;
pub mod control;
pub mod error;
pub mod geometry;
pub mod params;
pub mod regions;
pub mod sensing;
pub mod sim;

pub use error::{Error, Result};
