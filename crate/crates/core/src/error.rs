// SPDX-License-Identifier: Apache-2.0 OR MIT

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    /// Robot and obstacle occupy the same point; the range is zero.
    #[error("robot and obstacle are coincident")]
    Coincident,

    #[error("time-to-collision undefined: retinal expansion rate is zero")]
    UndefinedTtc,

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    /// The initial engagement state already lies in the avoidance region.
    #[error("scenario rejected: initial state lies inside the avoidance region ({0})")]
    StartsInAvoidanceRegion(String),

    #[error("certificate monitor needs at least 3 samples, got {0}")]
    InsufficientData(usize),

    #[error("unknown obstacle policy `{0}`")]
    UnknownPolicy(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
