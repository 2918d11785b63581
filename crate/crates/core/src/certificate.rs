// SPDX-License-Identifier: Apache-2.0 OR MIT

//! Runtime Lyapunov-style monitor.
//!
//! `A1` and `A2` vanish on the boundaries of the two avoidance components and
//! are positive outside them. `V = ln(A1 + 1) + ln(A2 + 1)` must not decrease
//! while the state is in the conflict region. The monitor checks that on a
//! realized trajectory with a central finite difference of `V`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::{DesignParams, EnvelopeBounds};
use crate::regions::EngagementState;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CertificateSample {
    pub a1: f64,
    pub a2: f64,
    /// NaN when either barrier is at or below −1.
    pub v: f64,
    /// Filled in by [`fill_v_dot`]; NaN until then.
    pub v_dot_numeric: f64,
    pub in_conflict: bool,
    pub on_symmetry_surface: bool,
}

impl CertificateSample {
    pub fn new(a1: f64, a2: f64, in_conflict: bool, on_symmetry_surface: bool) -> Self {
        Self {
            a1,
            a2,
            v: lyapunov(a1, a2),
            v_dot_numeric: f64::NAN,
            in_conflict,
            on_symmetry_surface,
        }
    }
}

/// `(A1, A2)` for the engagement state `x`.
pub fn barriers(x: &EngagementState, d: &DesignParams, b: &EnvelopeBounds) -> Result<(f64, f64)> {
    if !(x.x4 > 0.0) {
        return Err(Error::Domain(format!("inverse range x4 must be > 0, got {}", x.x4)));
    }
    let offset = x.heading_offset().abs();
    let a1 = x.x1 + d.beta / (d.gamma() - offset);
    let a2 = 1.0 / x.x4 - (d.r + (x.x6 + b.v_o_max) * (PI - offset) / d.beta);
    Ok((a1, a2))
}

/// `ln(A1 + 1) + ln(A2 + 1)`, or NaN where it is undefined.
pub fn lyapunov(a1: f64, a2: f64) -> f64 {
    if a1 > -1.0 && a2 > -1.0 {
        a1.ln_1p() + a2.ln_1p()
    } else {
        f64::NAN
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MonitorConfig {
    /// Allowed negative `V̇`, 1/s. `None` means `10·dt`.
    pub epsilon: Option<f64>,
    /// Half-width (rad) of the band around `x5 = x2` that is not checked.
    pub symmetry_band: f64,
}

impl Default for MonitorConfig {
    fn default() -> Self {
        Self {
            epsilon: None,
            symmetry_band: 0.02,
        }
    }
}

impl MonitorConfig {
    pub fn epsilon(&self, dt: f64) -> f64 {
        self.epsilon.unwrap_or(10.0 * dt)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateVerdict {
    pub pass: bool,
    /// Conflict-region samples off the symmetry band.
    pub checked: usize,
    pub violations: usize,
    /// Smallest `V̇` among checked samples; `+inf` when nothing was checked.
    pub worst_v_dot: f64,
    pub first_violation: Option<usize>,
    pub epsilon: f64,
}

/// Writes the central-difference `V̇` into every sample (one-sided at the ends).
pub fn fill_v_dot(samples: &mut [CertificateSample], dt: f64) -> Result<()> {
    let n = samples.len();
    if n < 3 {
        return Err(Error::InsufficientData(n));
    }
    let v: Vec<f64> = samples.iter().map(|s| s.v).collect();
    for (i, s) in samples.iter_mut().enumerate() {
        s.v_dot_numeric = match i {
            0 => (v[1] - v[0]) / dt,
            i if i == n - 1 => (v[n - 1] - v[n - 2]) / dt,
            i => (v[i + 1] - v[i - 1]) / (2.0 * dt),
        };
    }
    Ok(())
}

/// Checks `V̇ >= −ε` on every conflict-region sample off the symmetry band.
///
/// A NaN derivative at a checked sample (a neighbour with undefined `V`)
/// counts as a violation.
pub fn monitor(samples: &mut [CertificateSample], dt: f64, cfg: &MonitorConfig) -> Result<CertificateVerdict> {
    fill_v_dot(samples, dt)?;
    let epsilon = cfg.epsilon(dt);
    let mut checked = 0;
    let mut violations = 0;
    let mut worst = f64::INFINITY;
    let mut first_violation = None;
    for (i, s) in samples.iter().enumerate() {
        if !s.in_conflict || s.on_symmetry_surface {
            continue;
        }
        checked += 1;
        let vd = s.v_dot_numeric;
        if vd.is_nan() || vd < -epsilon {
            violations += 1;
            first_violation.get_or_insert(i);
        }
        worst = if vd.is_nan() { f64::NEG_INFINITY } else { worst.min(vd) };
    }
    Ok(CertificateVerdict {
        pass: violations == 0,
        checked,
        violations,
        worst_v_dot: worst,
        first_violation,
        epsilon,
    })
}
