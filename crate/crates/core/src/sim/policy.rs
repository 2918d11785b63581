// SPDX-License-Identifier: Apache-2.0 OR MIT

//! Obstacle behaviours. Every policy is passed through [`ObstacleDriver`],
//! which enforces the envelope (speed, turn rate, acceleration) no matter
//! what the policy asks for.

use std::f64::consts::FRAC_PI_4;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{principal_angle, AgentInputs, VehicleState};
use crate::params::EnvelopeBounds;

fn default_gain() -> f64 {
    2.0
}

fn default_amplitude() -> f64 {
    FRAC_PI_4
}

fn default_capture() -> f64 {
    0.2
}

/// Serializable description of an obstacle policy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PolicySpec {
    /// Zero commands.
    Static,
    /// Straight line at the initial heading and speed.
    HeadOn,
    /// Steers toward the robot's current position.
    Pursuit {
        #[serde(default = "default_gain")]
        gain: f64,
    },
    /// Heading alternates `±amplitude` about the initial bearing to the robot,
    /// switching every half period.
    ZigZag {
        period: f64,
        #[serde(default = "default_amplitude")]
        amplitude: f64,
        #[serde(default = "default_gain")]
        gain: f64,
        /// Delay before the first switch, s.
        #[serde(default)]
        phase: f64,
    },
    /// Visits `[x, y]` points in order.
    Waypoints {
        points: Vec<[f64; 2]>,
        #[serde(default = "default_gain")]
        gain: f64,
        #[serde(default = "default_capture")]
        capture_radius: f64,
    },
    /// Driven from outside the episode (live console); holds the last command.
    External,
}

impl PolicySpec {
    /// Builds a spec from a policy id and a JSON parameter object.
    pub fn parse(id: &str, params: serde_json::Value) -> Result<Self> {
        const KNOWN: [&str; 6] = ["static", "head_on", "pursuit", "zig_zag", "waypoints", "external"];
        if !KNOWN.contains(&id) {
            return Err(Error::UnknownPolicy(id.to_string()));
        }
        let mut obj = match params {
            serde_json::Value::Object(m) => m,
            serde_json::Value::Null => serde_json::Map::new(),
            other => return Err(Error::Config(format!("policy parameters must be an object, got {other}"))),
        };
        obj.insert("kind".into(), serde_json::Value::String(id.into()));
        Ok(serde_json::from_value(serde_json::Value::Object(obj))?)
    }

    pub fn name(&self) -> &'static str {
        match self {
            PolicySpec::Static => "static",
            PolicySpec::HeadOn => "head_on",
            PolicySpec::Pursuit { .. } => "pursuit",
            PolicySpec::ZigZag { .. } => "zig_zag",
            PolicySpec::Waypoints { .. } => "waypoints",
            PolicySpec::External => "external",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            PolicySpec::ZigZag { period, .. } if !(*period > 0.0) => {
                Err(Error::Config(format!("zig_zag period must be > 0, got {period}")))
            }
            PolicySpec::Waypoints { points, .. } if points.is_empty() => {
                Err(Error::Config("waypoints policy needs at least one point".into()))
            }
            _ => Ok(()),
        }
    }
}

/// What a policy asks for: a heading rate and a target speed.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ObstacleCommand {
    pub turn_rate: f64,
    pub speed: f64,
}

#[derive(Debug, Clone)]
enum PolicyState {
    Static,
    HeadOn,
    Pursuit { gain: f64 },
    ZigZag { period: f64, amplitude: f64, gain: f64, phase: f64, base: Option<f64> },
    Waypoints { points: Vec<[f64; 2]>, gain: f64, capture: f64, next: usize },
    External { last: Option<ObstacleCommand> },
}

/// A policy instance bound to the envelope it must respect.
#[derive(Debug, Clone)]
pub struct ObstacleDriver {
    state: PolicyState,
    bounds: EnvelopeBounds,
    last_applied: ObstacleCommand,
}

fn steer(gain: f64, desired: f64, heading: f64) -> f64 {
    gain * principal_angle(desired - heading)
}

fn bearing(from: &VehicleState, to: [f64; 2]) -> f64 {
    (to[1] - from.y).atan2(to[0] - from.x)
}

impl ObstacleDriver {
    pub fn new(spec: &PolicySpec, bounds: EnvelopeBounds) -> Result<Self> {
        spec.validate()?;
        let state = match spec.clone() {
            PolicySpec::Static => PolicyState::Static,
            PolicySpec::HeadOn => PolicyState::HeadOn,
            PolicySpec::Pursuit { gain } => PolicyState::Pursuit { gain },
            PolicySpec::ZigZag { period, amplitude, gain, phase } => PolicyState::ZigZag {
                period,
                amplitude,
                gain,
                phase,
                base: None,
            },
            PolicySpec::Waypoints {
                points,
                gain,
                capture_radius,
            } => PolicyState::Waypoints {
                points,
                gain,
                capture: capture_radius,
                next: 0,
            },
            PolicySpec::External => PolicyState::External { last: None },
        };
        Ok(Self {
            state,
            bounds,
            last_applied: ObstacleCommand::default(),
        })
    }

    /// Replaces the held command of an external policy. Ignored otherwise.
    /// Holds `cmd` until the next one. A scripted policy is replaced: once a
    /// human steers, the script does not come back.
    pub fn set_external(&mut self, cmd: ObstacleCommand) {
        self.state = PolicyState::External { last: Some(cmd) };
    }

    pub fn is_external(&self) -> bool {
        matches!(self.state, PolicyState::External { .. })
    }

    /// The most recent command after clamping.
    pub fn last_applied(&self) -> ObstacleCommand {
        self.last_applied
    }

    fn raw_command(&mut self, t: f64, robot: &VehicleState, me: &VehicleState) -> ObstacleCommand {
        let hold = me.v;
        match &mut self.state {
            PolicyState::Static => ObstacleCommand { turn_rate: 0.0, speed: hold },
            PolicyState::HeadOn => ObstacleCommand { turn_rate: 0.0, speed: hold },
            PolicyState::Pursuit { gain } => ObstacleCommand {
                turn_rate: steer(*gain, bearing(me, robot.position()), me.psi),
                speed: hold,
            },
            PolicyState::ZigZag { period, amplitude, gain, phase, base } => {
                let base = *base.get_or_insert_with(|| bearing(me, robot.position()));
                let half = ((t - *phase).max(0.0) / (*period / 2.0)).floor() as i64;
                let sign = if half % 2 == 0 { 1.0 } else { -1.0 };
                ObstacleCommand {
                    turn_rate: steer(*gain, base + sign * *amplitude, me.psi),
                    speed: hold,
                }
            }
            PolicyState::Waypoints { points, gain, capture, next } => {
                while *next < points.len() {
                    let p = points[*next];
                    if (p[0] - me.x).hypot(p[1] - me.y) > *capture {
                        break;
                    }
                    *next += 1;
                }
                match points.get(*next) {
                    Some(&p) => ObstacleCommand {
                        turn_rate: steer(*gain, bearing(me, p), me.psi),
                        speed: hold,
                    },
                    None => ObstacleCommand { turn_rate: 0.0, speed: 0.0 },
                }
            }
            PolicyState::External { last } => last.unwrap_or(ObstacleCommand { turn_rate: 0.0, speed: hold }),
        }
    }

    /// Clamps a requested command to the envelope.
    pub fn clamp(&self, cmd: ObstacleCommand) -> ObstacleCommand {
        let finite = |v: f64| if v.is_finite() { v } else { 0.0 };
        ObstacleCommand {
            turn_rate: finite(cmd.turn_rate).clamp(-self.bounds.psi_dot_o_max, self.bounds.psi_dot_o_max),
            speed: finite(cmd.speed).clamp(0.0, self.bounds.v_o_max),
        }
    }

    /// Inputs to integrate over the next `period` seconds.
    pub fn inputs(&mut self, t: f64, robot: &VehicleState, me: &VehicleState, period: f64) -> AgentInputs {
        let raw = self.raw_command(t, robot, me);
        let cmd = self.clamp(raw);
        self.last_applied = cmd;
        let accel = ((cmd.speed - me.v) / period).clamp(-self.bounds.a_o_max, self.bounds.a_o_max);
        AgentInputs::new(cmd.turn_rate, accel)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn bounds() -> EnvelopeBounds {
        EnvelopeBounds::experimental()
    }

    #[test]
    fn static_policy_is_inert() {
        let mut d = ObstacleDriver::new(&PolicySpec::Static, bounds()).unwrap();
        let me = VehicleState::new(1.0, 1.0, 0.3, 0.0);
        let r = VehicleState::new(0.0, 0.0, 0.0, 0.3);
        for k in 0..50 {
            assert_eq!(d.inputs(k as f64 * 0.02, &r, &me, 0.02), AgentInputs::default());
        }
    }

    #[test]
    fn pursuit_turn_rate_is_clamped() {
        let mut d = ObstacleDriver::new(&PolicySpec::Pursuit { gain: 50.0 }, bounds()).unwrap();
        let me = VehicleState::new(5.0, 0.0, 0.0, 1.0);
        let r = VehicleState::new(0.0, 0.0, 0.0, 0.3);
        let i = d.inputs(0.0, &r, &me, 0.02);
        assert_eq!(i.turn_rate.abs(), 0.5);
    }

    #[test]
    fn zig_zag_alternates_about_initial_bearing() {
        let spec = PolicySpec::ZigZag {
            period: 4.0,
            amplitude: PI / 4.0,
            gain: 100.0,
            phase: 0.0,
        };
        let mut d = ObstacleDriver::new(&spec, bounds()).unwrap();
        let r = VehicleState::new(0.0, 0.0, 0.0, 0.3);
        // Bearing to the robot is π; first half period aims at π + π/4.
        let me = VehicleState::new(5.0, 0.0, PI, 1.0);
        assert!(d.inputs(0.0, &r, &me, 0.02).turn_rate > 0.0);
        assert!(d.inputs(2.5, &r, &me, 0.02).turn_rate < 0.0);
        assert!(d.inputs(4.5, &r, &me, 0.02).turn_rate > 0.0);
    }

    #[test]
    fn over_limit_speed_is_clamped_and_acceleration_bounded() {
        let b = EnvelopeBounds {
            a_o_max: 1.0,
            ..bounds()
        };
        let mut d = ObstacleDriver::new(&PolicySpec::External, b).unwrap();
        d.set_external(ObstacleCommand {
            turn_rate: -3.0,
            speed: 10.0,
        });
        let me = VehicleState::new(0.0, 0.0, 0.0, 0.0);
        let i = d.inputs(0.0, &me, &me, 0.02);
        assert_eq!(d.last_applied().speed, 2.0);
        assert_eq!(d.last_applied().turn_rate, -0.5);
        assert_eq!(i.accel, 1.0);
    }

    #[test]
    fn pilot_takes_over_scripted_policy() {
        let mut d = ObstacleDriver::new(&PolicySpec::Pursuit { gain: 2.0 }, bounds()).unwrap();
        assert!(!d.is_external());
        d.set_external(ObstacleCommand {
            turn_rate: 0.1,
            speed: 1.0,
        });
        assert!(d.is_external());
        let me = VehicleState::new(0.0, 0.0, 0.0, 1.0);
        let robot = VehicleState::new(0.0, 5.0, 0.0, 0.3);
        assert_eq!(d.inputs(0.0, &robot, &me, 0.02).turn_rate, 0.1);
    }

    #[test]
    fn unknown_policy_id_rejected() {
        assert!(matches!(
            PolicySpec::parse("teleport", serde_json::Value::Null),
            Err(Error::UnknownPolicy(_))
        ));
        let p = PolicySpec::parse("zig_zag", serde_json::json!({"period": 3.0})).unwrap();
        assert_eq!(p.name(), "zig_zag");
    }
}
