// SPDX-License-Identifier: Apache-2.0 OR MIT

//! Heading control: the distance-free avoidance term, the exogenous path
//! follower, and their composition behind a loom-driven engage gate.

use serde::{Deserialize, Serialize};

use crate::geometry::{principal_angle, VehicleState};
use crate::params::{DesignParams, EnvelopeBounds};
use crate::regions::delta_t;
use crate::sensing::Measurement;

/// Everything the avoidance law may read. There is deliberately no range or
/// inverse-range field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasurableState {
    /// Measured loom, 1/s.
    pub x1: f64,
    /// Measured LOS angle, rad.
    pub x2: f64,
    /// Measured LOS rate, rad/s.
    pub x3: f64,
    /// Own heading, rad.
    pub x5: f64,
    /// Own speed, m/s.
    pub x6: f64,
    /// Longitudinal acceleration commanded on the previous control tick.
    pub a_r: f64,
}

impl MeasurableState {
    pub fn new(meas: &Measurement, own: &VehicleState, a_r: f64) -> Self {
        Self {
            x1: meas.loom.min(0.0),
            x2: meas.lambda,
            x3: meas.lambda_dot,
            x5: own.psi,
            x6: own.v,
            a_r,
        }
    }

    pub fn heading_offset(&self) -> f64 {
        principal_angle(self.x5 - self.x2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlphaTerms {
    /// ±1: side of the line of sight the robot is turning towards.
    pub alpha0: f64,
    pub alpha1: f64,
    pub alpha2: f64,
}

pub fn alpha_terms(m: &MeasurableState, d: &DesignParams, b: &EnvelopeBounds) -> AlphaTerms {
    let offset = m.heading_offset();
    let alpha0 = if offset >= 0.0 { 1.0 } else { -1.0 };
    let (sin, cos) = offset.sin_cos();
    let buffer = d.r + (m.x6 + b.v_o_max) * delta_t(m.x5, m.x2, d.beta);
    let alpha1 = (d.k * m.x1 * m.x1 + m.x6 * (-m.x3 * sin).max(0.0) - (-m.a_r * cos).min(0.0)) / buffer;
    let alpha2 = -2.0 * d.beta * d.omega * m.x1 / (m.x6 + b.v_o_max);
    AlphaTerms { alpha0, alpha1, alpha2 }
}

/// Avoidance heading-rate component
/// `u_ca = α0·((γ²/β)·(x1² + α1) + α2) + x3`.
pub fn avoidance_control(m: &MeasurableState, d: &DesignParams, b: &EnvelopeBounds) -> f64 {
    let a = alpha_terms(m, d, b);
    let gamma = d.gamma();
    a.alpha0 * (gamma * gamma / d.beta * (m.x1 * m.x1 + a.alpha1) + a.alpha2) + m.x3
}

/// Gains of the path follower `u_tr = −g_ψ·sin ψ_e`, `V = g_v·D·cos ψ_e`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrackingGains {
    pub heading: f64,
    pub speed: f64,
}

impl Default for TrackingGains {
    fn default() -> Self {
        Self { heading: 3.0, speed: 1.5 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrackingCommand {
    /// Saturated heading rate, rad/s.
    pub u_tr: f64,
    /// Saturated speed command, m/s.
    pub v_cmd: f64,
    pub heading_error: f64,
    pub distance: f64,
}

/// Path-following toward a (moving) target point, saturated to the envelope.
pub fn tracking_control(
    robot: &VehicleState,
    target: [f64; 2],
    b: &EnvelopeBounds,
    gains: &TrackingGains,
) -> TrackingCommand {
    let xe = target[0] - robot.x;
    let ye = target[1] - robot.y;
    let distance = xe.hypot(ye);
    let heading_error = principal_angle(robot.psi - ye.atan2(xe));
    let u_tr = (-gains.heading * heading_error.sin()).clamp(-b.u_tr_max, b.u_tr_max);
    let v_cmd = (gains.speed * distance * heading_error.cos()).clamp(b.v_r_min, b.v_r_max);
    TrackingCommand {
        u_tr,
        v_cmd,
        heading_error,
        distance,
    }
}

/// Default engage threshold on measured loom, 1/s.
pub const DEFAULT_ENGAGE_LOOM: f64 = -0.2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ControllerConfig {
    /// Loom at or below which avoidance engages, 1/s. `None` uses the upper
    /// loom bound of the conflict region, `−β/γ`.
    pub engage_loom: Option<f64>,
    /// Release happens above `engage_loom + h`, with `h` this fraction of
    /// `|engage_loom|`.
    pub hysteresis_fraction: f64,
    /// Optional actuator limit on `u_ca`; off for certification runs.
    pub ca_saturation: Option<f64>,
    /// Fault injection: flips the sign of `u_ca`.
    pub invert_avoidance: bool,
    pub tracking: TrackingGains,
}

impl Default for ControllerConfig {
    fn default() -> Self {
        // Engage at a 5 s time-to-collision, release once it exceeds 50 s.
        Self {
            engage_loom: Some(DEFAULT_ENGAGE_LOOM),
            hysteresis_fraction: 0.9,
            ca_saturation: None,
            invert_avoidance: false,
            tracking: TrackingGains::default(),
        }
    }
}

impl ControllerConfig {
    pub fn engage_threshold(&self, d: &DesignParams) -> f64 {
        self.engage_loom.unwrap_or(-d.beta / d.gamma())
    }

    pub fn release_threshold(&self, d: &DesignParams) -> f64 {
        let on = self.engage_threshold(d);
        on + self.hysteresis_fraction * on.abs()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GateEvent {
    Engaged,
    Released,
}

/// Hysteresis gate on measured loom.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GateState {
    pub engaged: bool,
    pub engage_below: f64,
    pub release_above: f64,
}

impl GateState {
    pub fn new(engage_below: f64, release_above: f64) -> Self {
        debug_assert!(release_above >= engage_below);
        Self {
            engaged: false,
            engage_below,
            release_above,
        }
    }

    pub fn from_config(cfg: &ControllerConfig, d: &DesignParams) -> Self {
        Self::new(cfg.engage_threshold(d), cfg.release_threshold(d))
    }

    pub fn update(&mut self, loom: f64) -> Option<GateEvent> {
        if !self.engaged && loom <= self.engage_below {
            self.engaged = true;
            Some(GateEvent::Engaged)
        } else if self.engaged && loom > self.release_above {
            self.engaged = false;
            Some(GateEvent::Released)
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ControlCommand {
    /// Total heading rate u, rad/s.
    pub turn_rate: f64,
    /// Longitudinal acceleration u_v, m/s².
    pub accel: f64,
    pub ca_component: f64,
    pub tr_component: f64,
    pub engaged: bool,
}

/// One control tick: gate on measured loom, add `u_ca` to the tracking rate
/// when engaged, and turn the speed command into a rate-limited acceleration
/// over `period`.
pub fn compose(
    m: &MeasurableState,
    tr: &TrackingCommand,
    d: &DesignParams,
    b: &EnvelopeBounds,
    cfg: &ControllerConfig,
    gate: &mut GateState,
    period: f64,
) -> ControlCommand {
    gate.update(m.x1);
    let accel = ((tr.v_cmd - m.x6) / period).clamp(-b.a_r_max, b.a_r_max);
    let ca = if gate.engaged {
        let mut u = avoidance_control(m, d, b);
        if cfg.invert_avoidance {
            u = -u;
        }
        if let Some(limit) = cfg.ca_saturation {
            u = u.clamp(-limit, limit);
        }
        u
    } else {
        0.0
    };
    ControlCommand {
        turn_rate: tr.u_tr + ca,
        accel,
        ca_component: ca,
        tr_component: tr.u_tr,
        engaged: gate.engaged,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::{DesignParams, EnvelopeBounds};
    use std::f64::consts::PI;

    fn ms(x1: f64, x2: f64, x3: f64, x5: f64, x6: f64, a_r: f64) -> MeasurableState {
        MeasurableState { x1, x2, x3, x5, x6, a_r }
    }

    #[test]
    fn alpha0_boundary_is_positive() {
        let d = DesignParams::experimental();
        let b = EnvelopeBounds::experimental();
        assert_eq!(alpha_terms(&ms(-1.0, 0.4, 0.0, 0.4, 0.3, 0.0), &d, &b).alpha0, 1.0);
        assert_eq!(alpha_terms(&ms(-1.0, 0.4, 0.0, 0.3, 0.3, 0.0), &d, &b).alpha0, -1.0);
    }

    #[test]
    fn no_threat_no_command() {
        let d = DesignParams::experimental();
        let b = EnvelopeBounds::experimental();
        let m = ms(0.0, 1.0, 0.0, -0.5, 0.4, 0.0);
        let a = alpha_terms(&m, &d, &b);
        assert_eq!(a.alpha1, 0.0);
        assert_eq!(a.alpha2, 0.0);
        assert_eq!(avoidance_control(&m, &d, &b), 0.0);
    }

    #[test]
    fn facing_deep_threat_values() {
        let d = DesignParams::experimental();
        let b = EnvelopeBounds::experimental();
        let m = ms(-2.0, 0.0, 0.0, 0.0, 0.5, 0.0);
        let a = alpha_terms(&m, &d, &b);
        assert!((a.alpha1 - 4.0 / 1.74668).abs() < 1e-4);
        assert!((a.alpha2 - 17.64).abs() < 1e-12);
        let u = avoidance_control(&m, &d, &b);
        assert!((u - 57.2).abs() < 0.5, "u_ca = {u}");
    }

    #[test]
    fn mirror_state_negates_command() {
        let d = DesignParams::experimental();
        let b = EnvelopeBounds::experimental();
        let m = ms(-1.3, 0.2, 0.7, 1.1, 0.35, 0.8);
        let mirrored = ms(-1.3, 0.2, -0.7, 0.2 - 0.9, 0.35, 0.8);
        let (u, um) = (avoidance_control(&m, &d, &b), avoidance_control(&mirrored, &d, &b));
        assert!((u + um).abs() < 1e-12, "{u} vs {um}");
    }

    #[test]
    fn tracking_saturation_examples() {
        let b = EnvelopeBounds::experimental();
        let g = TrackingGains::default();
        let t = tracking_control(&VehicleState::new(0.0, 0.0, 0.0, 0.3), [1.0, 0.0], &b, &g);
        assert_eq!(t.heading_error, 0.0);
        assert_eq!(t.u_tr, 0.0);
        assert_eq!(t.v_cmd, 0.5);

        let t = tracking_control(&VehicleState::new(0.0, 0.0, PI / 2.0, 0.3), [1.0, 0.0], &b, &g);
        assert!((t.heading_error - PI / 2.0).abs() < 1e-15);
        assert_eq!(t.u_tr, -1.0);

        let t = tracking_control(&VehicleState::new(1.0, 2.0, 0.3, 0.3), [1.0, 2.0], &b, &g);
        assert_eq!(t.distance, 0.0);
        assert_eq!(t.v_cmd, 0.2);
    }

    #[test]
    fn unset_threshold_is_conflict_bound() {
        let d = DesignParams::experimental();
        let cfg = ControllerConfig {
            engage_loom: None,
            hysteresis_fraction: 0.05,
            ..Default::default()
        };
        let on = cfg.engage_threshold(&d);
        assert!((on - (-1.0013)).abs() < 1e-4);
        assert!((-1.0 / on - 0.9987).abs() < 1e-4);
        assert!((cfg.release_threshold(&d) - 0.95 * on).abs() < 1e-12);
    }

    #[test]
    fn default_gate_thresholds() {
        let d = DesignParams::experimental();
        let cfg = ControllerConfig::default();
        assert_eq!(cfg.engage_threshold(&d), -0.2);
        assert!((cfg.release_threshold(&d) - (-0.02)).abs() < 1e-15);
    }

    #[test]
    fn gate_hysteresis_single_cycle() {
        let mut g = GateState::new(-1.0, -0.95);
        let looms = [0.0, -0.5, -0.99, -1.0, -1.2, -0.97, -0.96, -0.95, -0.9, -0.97, -0.5, 0.0];
        let events: Vec<_> = looms.iter().filter_map(|&l| g.update(l)).collect();
        assert_eq!(events, vec![GateEvent::Engaged, GateEvent::Released]);
    }

    #[test]
    fn no_loom_means_pure_tracking() {
        let d = DesignParams::experimental();
        let b = EnvelopeBounds::experimental();
        let cfg = ControllerConfig::default();
        let mut gate = GateState::from_config(&cfg, &d);
        let tr = TrackingCommand {
            u_tr: 0.4,
            v_cmd: 0.5,
            heading_error: 0.0,
            distance: 1.0,
        };
        let c = compose(&ms(0.0, 0.0, 0.1, 0.2, 0.3, 0.0), &tr, &d, &b, &cfg, &mut gate, 0.02);
        assert!(!c.engaged);
        assert_eq!(c.turn_rate, 0.4);
        assert_eq!(c.ca_component, 0.0);
        assert!((c.accel - 3.5).abs() < 1e-12);
    }

    #[test]
    fn engaged_turn_rate_is_the_sum() {
        let d = DesignParams::experimental();
        let b = EnvelopeBounds::experimental();
        let cfg = ControllerConfig::default();
        let mut gate = GateState::from_config(&cfg, &d);
        let tr = TrackingCommand {
            u_tr: -0.4,
            v_cmd: 0.3,
            heading_error: 0.0,
            distance: 1.0,
        };
        let m = ms(-1.5, 0.0, 0.2, 0.5, 0.3, 0.0);
        let c = compose(&m, &tr, &d, &b, &cfg, &mut gate, 0.02);
        assert!(c.engaged);
        assert_eq!(c.turn_rate, c.ca_component + c.tr_component);
        assert_eq!(c.ca_component, avoidance_control(&m, &d, &b));
    }
}
