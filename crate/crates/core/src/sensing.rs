// SPDX-License-Identifier: Apache-2.0 OR MIT

//! The measurable triple (loom, LOS angle, LOS rate) and the sensor model
//! that produces it from ground truth.
//!
//! The controller never sees range. [`Sensor`] samples the truth at a fixed
//! rate, optionally corrupts each sample with seeded Gaussian noise, and
//! releases samples after a fixed latency with zero-order hold.

use std::collections::VecDeque;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{principal_angle, RelativeGeometry};

/// Tolerance for comparing sample stamps against the clock.
const STAMP_EPS: f64 = 1e-9;

/// Loom `l = min(ρ̇/ρ, 0)`: the negative inverse time-to-collision.
pub fn loom(rho: f64, rho_dot: f64) -> Result<f64> {
    if !(rho > 0.0) {
        return Err(Error::Domain(format!("loom needs a positive range, got {rho}")));
    }
    Ok((rho_dot / rho).min(0.0))
}

/// Angle subtended on the retina by an object of `width` at range `rho`.
pub fn retinal_angle(rho: f64, width: f64) -> Result<f64> {
    if !(rho > 0.0) || !(width > 0.0) {
        return Err(Error::Domain(format!(
            "retinal angle needs positive range and width, got rho={rho}, width={width}"
        )));
    }
    Ok(2.0 * (width / (2.0 * rho)).atan())
}

/// Retinal time-to-collision estimate `θ / θ̇`.
pub fn retinal_ttc(theta: f64, theta_dot: f64) -> Result<f64> {
    if theta_dot == 0.0 {
        return Err(Error::UndefinedTtc);
    }
    Ok(theta / theta_dot)
}

/// What the avoidance system is allowed to observe about the obstacle.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Measurement {
    /// 1/s, never positive.
    pub loom: f64,
    pub lambda: f64,
    pub lambda_dot: f64,
    /// Time at which the underlying truth was sampled.
    pub stamp: f64,
}

impl Measurement {
    /// Noise-free measurement of `truth` stamped at `t`.
    pub fn exact(truth: &RelativeGeometry, t: f64) -> Result<Self> {
        Ok(Self {
            loom: loom(truth.rho, truth.rho_dot)?,
            lambda: truth.lambda,
            lambda_dot: truth.lambda_dot,
            stamp: t,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SensorConfig {
    pub noise_std_loom: f64,
    pub noise_std_lambda: f64,
    pub noise_std_lambda_dot: f64,
    /// Seconds between sampling and availability.
    pub latency: f64,
    /// Sampling rate in Hz.
    pub rate: f64,
    pub seed: u64,
}

impl Default for SensorConfig {
    fn default() -> Self {
        Self {
            noise_std_loom: 0.0,
            noise_std_lambda: 0.0,
            noise_std_lambda_dot: 0.0,
            latency: 0.0,
            rate: 50.0,
            seed: 0,
        }
    }
}

impl SensorConfig {
    pub fn validate(&self) -> Result<()> {
        let non_negative = [
            ("noise_std_loom", self.noise_std_loom),
            ("noise_std_lambda", self.noise_std_lambda),
            ("noise_std_lambda_dot", self.noise_std_lambda_dot),
            ("latency", self.latency),
        ];
        for (name, value) in non_negative {
            if !(value >= 0.0) || !value.is_finite() {
                return Err(Error::Config(format!("sensor.{name} must be finite and >= 0, got {value}")));
            }
        }
        if !(self.rate > 0.0) || !self.rate.is_finite() {
            return Err(Error::Config(format!("sensor.rate must be > 0, got {}", self.rate)));
        }
        Ok(())
    }

    pub fn period(&self) -> f64 {
        1.0 / self.rate
    }
}

/// Stateful sensor for one episode: sample-and-hold, noise and latency.
#[derive(Debug, Clone)]
pub struct Sensor {
    cfg: SensorConfig,
    rng: ChaCha8Rng,
    pending: VecDeque<Measurement>,
    samples_taken: u64,
    first_stamp: Option<f64>,
}

impl Sensor {
    pub fn new(cfg: SensorConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            rng: ChaCha8Rng::seed_from_u64(cfg.seed),
            cfg,
            pending: VecDeque::new(),
            samples_taken: 0,
            first_stamp: None,
        })
    }

    pub fn config(&self) -> &SensorConfig {
        &self.cfg
    }

    fn next_sample_time(&self) -> Option<f64> {
        self.first_stamp
            .map(|t0| t0 + self.samples_taken as f64 * self.cfg.period())
    }

    fn noisy(&mut self, exact: Measurement) -> Measurement {
        let mut m = exact;
        if self.cfg.noise_std_loom > 0.0 {
            m.loom += gaussian(&mut self.rng, self.cfg.noise_std_loom);
        }
        if self.cfg.noise_std_lambda > 0.0 {
            m.lambda = principal_angle(m.lambda + gaussian(&mut self.rng, self.cfg.noise_std_lambda));
        }
        if self.cfg.noise_std_lambda_dot > 0.0 {
            m.lambda_dot += gaussian(&mut self.rng, self.cfg.noise_std_lambda_dot);
        }
        m.loom = m.loom.min(0.0);
        m
    }

    /// Observes `truth` at time `t` and returns the measurement currently
    /// available to the controller.
    ///
    /// A new sample is taken whenever `t` reaches the next sampling instant.
    /// The output is the newest sample at least `latency` old; before any
    /// sample is that old, the oldest sample is returned.
    pub fn sense(&mut self, truth: &RelativeGeometry, t: f64) -> Result<Measurement> {
        let due = match self.next_sample_time() {
            None => {
                self.first_stamp = Some(t);
                true
            }
            Some(next) => t + STAMP_EPS >= next,
        };
        if due {
            let sample = self.noisy(Measurement::exact(truth, t)?);
            self.pending.push_back(sample);
            // Skip sampling instants the caller stepped over.
            while self.next_sample_time().is_some_and(|next| next <= t + STAMP_EPS) {
                self.samples_taken += 1;
            }
        }

        let horizon = t - self.cfg.latency + STAMP_EPS;
        while self.pending.len() >= 2 && self.pending[1].stamp <= horizon {
            self.pending.pop_front();
        }
        Ok(self.pending[0])
    }
}

fn gaussian(rng: &mut ChaCha8Rng, std: f64) -> f64 {
    // std > 0 and finite was checked by validate().
    Normal::new(0.0, std).expect("valid normal").sample(rng)
}
