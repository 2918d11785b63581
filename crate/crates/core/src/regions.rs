// SPDX-License-Identifier: Apache-2.0 OR MIT

//! Engagement state and membership in the anti-target set `T`, the avoidance
//! set `A = A1 ∪ A2` and the conflict region `Ω`.
//!
//! `x4` (inverse range) is truth-side only. It is used here and by the
//! certificate; the controller's input type has no slot for it.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{principal_angle, RelativeGeometry, VehicleState};
use crate::params::{DesignParams, EnvelopeBounds};
use crate::sensing::loom;

/// The six-dimensional engagement state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EngagementState {
    /// Loom, 1/s, never positive.
    pub x1: f64,
    /// LOS angle, rad.
    pub x2: f64,
    /// LOS rate, rad/s.
    pub x3: f64,
    /// Inverse range, 1/m.
    pub x4: f64,
    /// Robot heading, rad.
    pub x5: f64,
    /// Robot speed, m/s.
    pub x6: f64,
}

impl EngagementState {
    pub fn from_truth(robot: &VehicleState, truth: &RelativeGeometry) -> Result<Self> {
        Ok(Self {
            x1: loom(truth.rho, truth.rho_dot)?,
            x2: truth.lambda,
            x3: truth.lambda_dot,
            x4: 1.0 / truth.rho,
            x5: robot.psi,
            x6: robot.v,
        })
    }

    /// Principal value of `x5 − x2`.
    pub fn heading_offset(&self) -> f64 {
        principal_angle(self.x5 - self.x2)
    }

    pub fn range(&self) -> f64 {
        1.0 / self.x4
    }
}

/// `Δt = (π − |x5 − x2|)/β` with the principal-value difference.
pub fn delta_t(x5: f64, x2: f64, beta: f64) -> f64 {
    (PI - principal_angle(x5 - x2).abs()) / beta
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegionVerdict {
    pub in_antitarget: bool,
    pub in_avoidance_a1: bool,
    pub in_avoidance_a2: bool,
    pub in_conflict: bool,
    /// `x1 + β/(γ − |x5 − x2|)`; negative inside `A1`.
    pub a1_value: f64,
    /// `1/x4 − (r + (x6 + V_o,max)Δt)`; negative inside `A2`.
    pub a2_value: f64,
    pub delta_t: f64,
}

impl RegionVerdict {
    pub fn in_avoidance(&self) -> bool {
        self.in_avoidance_a1 || self.in_avoidance_a2
    }
}

/// Region membership of `x`, with the barrier values as signed margins.
///
/// All memberships use the closed inequalities; the lower bounds of `Ω` are
/// strict, so boundary states count as inside `A`.
pub fn classify(x: &EngagementState, d: &DesignParams, b: &EnvelopeBounds) -> Result<RegionVerdict> {
    if !(x.x4 > 0.0) {
        return Err(Error::Domain(format!("inverse range x4 must be > 0, got {}", x.x4)));
    }
    let gamma = d.gamma();
    let offset = x.heading_offset().abs();
    let dt = (PI - offset) / d.beta;
    let range = 1.0 / x.x4;

    let a1_threshold = -1.0 / (d.tau_safe + dt);
    let a2_threshold = d.r + (x.x6 + b.v_o_max) * dt;

    let in_antitarget = x.x1 <= -1.0 / d.tau_safe || range <= d.r;
    let in_avoidance_a1 = x.x1 <= a1_threshold;
    let in_avoidance_a2 = range <= a2_threshold;
    let in_conflict = a1_threshold < x.x1
        && x.x1 <= -d.beta / gamma
        && a2_threshold < range
        && range <= d.omega;

    Ok(RegionVerdict {
        in_antitarget,
        in_avoidance_a1,
        in_avoidance_a2,
        in_conflict,
        // γ − |offset| >= γ − π = τ_safe·β > 0
        a1_value: x.x1 + d.beta / (gamma - offset),
        a2_value: range - a2_threshold,
        delta_t: dt,
    })
}

/// `|x3| <= L`; meaningful only outside the anti-target set.
pub fn los_rate_bound_check(x: &EngagementState, los_rate_bound: f64) -> bool {
    x.x3.abs() <= los_rate_bound
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::{derive, DesignParams, EnvelopeBounds};

    fn state(x1: f64, x2: f64, x3: f64, x4: f64, x5: f64, x6: f64) -> EngagementState {
        EngagementState { x1, x2, x3, x4, x5, x6 }
    }

    #[test]
    fn delta_t_examples() {
        assert!((delta_t(0.0, 0.0, 6.3) - PI / 6.3).abs() < 1e-15);
        assert!((delta_t(0.0, 0.0, 6.3) - 0.49867).abs() < 1e-5);
        assert!(delta_t(PI, 0.0, 6.3).abs() < 1e-15);
        assert!((delta_t(-PI / 2.0, 0.0, PI) - 0.5).abs() < 1e-15);
        // Wrapped difference: 3π/2 is really −π/2.
        assert!((delta_t(1.5 * PI, 0.0, PI) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn deep_inside_both_avoidance_components() {
        let d = DesignParams::experimental();
        let b = EnvelopeBounds::experimental();
        let v = classify(&state(-2.0, 0.0, 0.0, 1.0, 0.0, 0.5), &d, &b).unwrap();
        assert!(v.in_avoidance_a1 && v.in_avoidance_a2);
        assert!(v.in_antitarget);
        assert!(!v.in_conflict);
        assert!((v.a1_value - (-0.9987)).abs() < 1e-4);
        assert!((v.a2_value - (-0.7467)).abs() < 1e-4);
    }

    #[test]
    fn far_and_not_approaching_is_nowhere() {
        let d = DesignParams::experimental();
        let b = EnvelopeBounds::experimental();
        for heading in [-3.0, -1.0, 0.0, 1.0, 3.0] {
            let v = classify(&state(0.0, 0.3, 0.0, 0.1, heading, 0.3), &d, &b).unwrap();
            assert!(!v.in_antitarget && !v.in_avoidance() && !v.in_conflict);
        }
    }

    #[test]
    fn antitarget_loom_boundary_is_in_a1() {
        let d = DesignParams::experimental();
        let b = EnvelopeBounds::experimental();
        let v = classify(&state(-1.0 / d.tau_safe, 0.0, 0.0, 0.1, 1.0, 0.3), &d, &b).unwrap();
        assert!(v.delta_t > 0.0);
        assert!(v.in_antitarget && v.in_avoidance_a1);
    }

    #[test]
    fn conflict_region_sample() {
        let d = DesignParams::experimental();
        let b = EnvelopeBounds::experimental();
        // Heading off the LOS by 2 rad: Δt ≈ 0.18, A1 boundary ≈ −1.47, A2 boundary ≈ 0.97 m.
        let v = classify(&state(-1.2, 0.0, 0.0, 1.0 / 1.5, 2.0, 0.3), &d, &b).unwrap();
        assert!(v.in_conflict, "{v:?}");
        assert!(!v.in_avoidance());
        assert!(v.a1_value > 0.0 && v.a2_value > 0.0);
    }

    #[test]
    fn non_positive_inverse_range_rejected() {
        let d = DesignParams::experimental();
        let b = EnvelopeBounds::experimental();
        assert!(classify(&state(0.0, 0.0, 0.0, 0.0, 0.0, 0.3), &d, &b).is_err());
    }

    #[test]
    fn los_rate_bound_boundary() {
        let l = derive(&EnvelopeBounds::experimental(), &DesignParams::experimental()).los_rate_bound;
        assert!(los_rate_bound_check(&state(0.0, 0.0, l, 0.1, 0.0, 0.3), l));
        assert!(los_rate_bound_check(&state(0.0, 0.0, -l, 0.1, 0.0, 0.3), l));
        assert!(!los_rate_bound_check(&state(0.0, 0.0, 1.1 * l, 0.1, 0.0, 0.3), l));
    }
}
