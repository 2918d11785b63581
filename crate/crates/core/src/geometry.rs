// SPDX-License-Identifier: Apache-2.0 OR MIT

//! Unicycle kinematics and the exact relative geometry between the robot and
//! the obstacle.
//!
//! Everything here is a pure function over value types. Headings are kept in
//! the principal range `[-π, π]` so that heading differences such as
//! `ψ_r − λ` can be compared by magnitude.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default physics step used by the simulator.
pub const DEFAULT_DT: f64 = 0.005;

/// Planar pose and speed of one unicycle agent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VehicleState {
    /// Position in meters.
    pub x: f64,
    /// Position in meters.
    pub y: f64,
    /// Heading in radians, wrapped to `[-π, π]`.
    pub psi: f64,
    /// Speed in m/s, never negative.
    pub v: f64,
}

impl VehicleState {
    pub fn new(x: f64, y: f64, psi: f64, v: f64) -> Self {
        Self {
            x,
            y,
            psi: principal_angle(psi),
            v: v.max(0.0),
        }
    }

    pub fn position(&self) -> [f64; 2] {
        [self.x, self.y]
    }

    pub fn distance_to(&self, other: &VehicleState) -> f64 {
        (other.x - self.x).hypot(other.y - self.y)
    }

    fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.psi.is_finite() && self.v.is_finite()
    }
}

/// Heading rate and longitudinal acceleration applied to an agent.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct AgentInputs {
    /// rad/s
    pub turn_rate: f64,
    /// m/s²
    pub accel: f64,
}

impl AgentInputs {
    pub fn new(turn_rate: f64, accel: f64) -> Self {
        Self { turn_rate, accel }
    }
}

/// Range, line-of-sight angle and their derivatives, robot to obstacle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RelativeGeometry {
    /// Distance in meters, strictly positive.
    pub rho: f64,
    /// Line-of-sight angle in `[-π, π]`.
    pub lambda: f64,
    /// Range rate in m/s (negative while closing).
    pub rho_dot: f64,
    /// Line-of-sight rate in rad/s.
    pub lambda_dot: f64,
    /// Range acceleration in m/s². Zero unless agent inputs were supplied.
    pub rho_ddot: f64,
}

/// Principal value of an angle in `[-π, π)`. Non-finite input passes through.
#[inline]
pub fn principal_angle(theta: f64) -> f64 {
    if (-PI..PI).contains(&theta) {
        return theta;
    }
    (theta + PI).rem_euclid(TAU) - PI
}

/// Wraps `theta` to `[-π, π]`, rejecting non-finite input.
pub fn wrap_angle(theta: f64) -> Result<f64> {
    if !theta.is_finite() {
        return Err(Error::Domain(format!("cannot wrap non-finite angle {theta}")));
    }
    Ok(principal_angle(theta))
}

fn unicycle_rate(s: [f64; 4], inputs: AgentInputs) -> [f64; 4] {
    let (sin, cos) = s[2].sin_cos();
    [s[3] * cos, s[3] * sin, inputs.turn_rate, inputs.accel]
}

fn axpy(a: f64, x: [f64; 4], y: [f64; 4]) -> [f64; 4] {
    [y[0] + a * x[0], y[1] + a * x[1], y[2] + a * x[2], y[3] + a * x[3]]
}

/// Advances one agent by a single RK4 step with inputs held constant.
pub fn step_unicycle(s: &VehicleState, inputs: AgentInputs, dt: f64) -> Result<VehicleState> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::Domain(format!("step size must be positive and finite, got {dt}")));
    }
    if !s.is_finite() || !inputs.turn_rate.is_finite() || !inputs.accel.is_finite() {
        return Err(Error::Domain("non-finite state or input".into()));
    }
    let y0 = [s.x, s.y, s.psi, s.v];
    let k1 = unicycle_rate(y0, inputs);
    let k2 = unicycle_rate(axpy(dt / 2.0, k1, y0), inputs);
    let k3 = unicycle_rate(axpy(dt / 2.0, k2, y0), inputs);
    let k4 = unicycle_rate(axpy(dt, k3, y0), inputs);
    let mut y = y0;
    for i in 0..4 {
        y[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    Ok(VehicleState {
        x: y[0],
        y: y[1],
        psi: principal_angle(y[2]),
        v: y[3].max(0.0),
    })
}

/// Relative geometry with both agents unforced (`rho_ddot` evaluated for zero
/// turn rates and accelerations).
pub fn relative_geometry(robot: &VehicleState, obstacle: &VehicleState) -> Result<RelativeGeometry> {
    relative_geometry_with_inputs(robot, obstacle, AgentInputs::default(), AgentInputs::default())
}

/// Relative geometry including the range acceleration implied by the agents'
/// current turn rates and accelerations.
pub fn relative_geometry_with_inputs(
    robot: &VehicleState,
    obstacle: &VehicleState,
    robot_inputs: AgentInputs,
    obstacle_inputs: AgentInputs,
) -> Result<RelativeGeometry> {
    if !robot.is_finite() || !obstacle.is_finite() {
        return Err(Error::Domain("non-finite agent state".into()));
    }
    let dx = obstacle.x - robot.x;
    let dy = obstacle.y - robot.y;
    let rho = dx.hypot(dy);
    if rho == 0.0 {
        return Err(Error::Coincident);
    }
    let lambda = dy.atan2(dx);
    let (sin_r, cos_r) = (robot.psi - lambda).sin_cos();
    let (sin_o, cos_o) = (obstacle.psi - lambda).sin_cos();

    let rho_dot = obstacle.v * cos_o - robot.v * cos_r;
    let lambda_dot = (obstacle.v * sin_o - robot.v * sin_r) / rho;
    let rho_ddot = robot.v * sin_r * (robot_inputs.turn_rate - lambda_dot)
        - robot_inputs.accel * cos_r
        - obstacle.v * sin_o * (obstacle_inputs.turn_rate - lambda_dot)
        + obstacle_inputs.accel * cos_o;

    Ok(RelativeGeometry {
        rho,
        lambda,
        rho_dot,
        lambda_dot,
        rho_ddot,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn wrap_examples() {
        assert_eq!(wrap_angle(0.0).unwrap(), 0.0);
        assert!(close(wrap_angle(1.5 * PI).unwrap(), -PI / 2.0, 1e-15));
        assert!(close(wrap_angle(-1.5 * PI).unwrap(), PI / 2.0, 1e-15));
        assert!(close(wrap_angle(7.0 * TAU + 0.25).unwrap(), 0.25, 1e-12));
    }

    #[test]
    fn wrap_rejects_non_finite() {
        assert!(wrap_angle(f64::NAN).is_err());
        assert!(wrap_angle(f64::INFINITY).is_err());
    }

    #[test]
    fn straight_line_steps() {
        let s = VehicleState::new(0.0, 0.0, 0.0, 1.0);
        let n = step_unicycle(&s, AgentInputs::default(), 0.1).unwrap();
        assert!(close(n.x, 0.1, 1e-15) && close(n.y, 0.0, 1e-15));
        assert_eq!(n.v, 1.0);

        let s = VehicleState::new(0.0, 0.0, PI / 2.0, 1.0);
        let n = step_unicycle(&s, AgentInputs::default(), 0.1).unwrap();
        assert!(close(n.x, 0.0, 1e-15) && close(n.y, 0.1, 1e-15));
        assert!(close(n.psi, PI / 2.0, 1e-15));
    }

    #[test]
    fn unit_turn_follows_circular_arc() {
        // Closed form for ψ̇ = 1, v = 1 from the origin heading +x.
        let mut s = VehicleState::new(0.0, 0.0, 0.0, 1.0);
        for _ in 0..100 {
            s = step_unicycle(&s, AgentInputs::new(1.0, 0.0), 0.01).unwrap();
        }
        assert!(close(s.x, 1f64.sin(), 1e-6), "x = {}", s.x);
        assert!(close(s.y, 1.0 - 1f64.cos(), 1e-6), "y = {}", s.y);
        assert!(close(s.psi, 1.0, 1e-12));
    }

    #[test]
    fn speed_clamped_at_zero() {
        let s = VehicleState::new(0.0, 0.0, 0.0, 0.1);
        let n = step_unicycle(&s, AgentInputs::new(0.0, -10.0), 0.1).unwrap();
        assert_eq!(n.v, 0.0);
    }

    #[test]
    fn step_rejects_bad_inputs() {
        let s = VehicleState::new(0.0, 0.0, 0.0, 1.0);
        assert!(step_unicycle(&s, AgentInputs::default(), 0.0).is_err());
        assert!(step_unicycle(&s, AgentInputs::new(f64::NAN, 0.0), 0.1).is_err());
    }

    #[test]
    fn head_on_geometry() {
        let r = VehicleState::new(0.0, 0.0, 0.0, 1.0);
        let o = VehicleState::new(2.0, 0.0, PI, 1.0);
        let g = relative_geometry(&r, &o).unwrap();
        assert!(close(g.rho, 2.0, 1e-15));
        assert!(close(g.lambda, 0.0, 1e-15));
        assert!(close(g.rho_dot, -2.0, 1e-15));
        assert!(close(g.lambda_dot, 0.0, 1e-15));
    }

    #[test]
    fn crossing_geometry() {
        let r = VehicleState::new(0.0, 0.0, 0.0, 1.0);
        let o = VehicleState::new(0.0, 2.0, 0.0, 0.0);
        let g = relative_geometry(&r, &o).unwrap();
        assert!(close(g.rho, 2.0, 1e-15));
        assert!(close(g.lambda, PI / 2.0, 1e-15));
        assert!(close(g.rho_dot, 0.0, 1e-15));
        assert!(close(g.lambda_dot, 0.5, 1e-15));

        // Finite-difference oracle over dt = 1e-5.
        let h = 1e-5;
        let r1 = step_unicycle(&r, AgentInputs::default(), h).unwrap();
        let r0 = VehicleState::new(-h, 0.0, 0.0, 1.0);
        let l1 = (o.y - r1.y).atan2(o.x - r1.x);
        let l0 = (o.y - r0.y).atan2(o.x - r0.x);
        assert!(close((l1 - l0) / (2.0 * h), g.lambda_dot, 1e-6));
    }

    #[test]
    fn static_pair() {
        let r = VehicleState::new(0.0, 0.0, 0.0, 0.0);
        let o = VehicleState::new(3.0, 4.0, 0.0, 0.0);
        let g = relative_geometry(&r, &o).unwrap();
        assert!(close(g.rho, 5.0, 1e-15));
        assert!(close(g.lambda, 4f64.atan2(3.0), 1e-15));
        assert_eq!(g.rho_dot, 0.0);
        assert_eq!(g.lambda_dot, 0.0);
    }

    #[test]
    fn coincident_agents_fault() {
        let r = VehicleState::new(1.0, 1.0, 0.0, 1.0);
        assert!(matches!(relative_geometry(&r, &r), Err(Error::Coincident)));
    }
}
