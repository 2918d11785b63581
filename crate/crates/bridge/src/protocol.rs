// SPDX-License-Identifier: Apache-2.0 OR MIT

//! JSON wire format. Every server frame carries `"v"` and a `"type"` tag;
//! client frames may omit `"v"`.

use loomcas::geometry::VehicleState;
use loomcas::sim::{ScenarioConfig, TraceRecord};
use serde::{Deserialize, Serialize};

pub const PROTOCOL_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Frame {
    pub v: u32,
    #[serde(flatten)]
    pub body: ServerMessage,
}

impl Frame {
    pub fn new(body: ServerMessage) -> Self {
        Self {
            v: PROTOCOL_VERSION,
            body,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("frames contain only plain data")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ServerMessage {
    /// Sent on connect and whenever the scenario is (re)started.
    Hello(Hello),
    State(StateFrame),
    Error { message: String },
}

/// What a client needs to map its input axes and label its charts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hello {
    pub scenario: String,
    /// Control ticks per second; one state frame per tick.
    pub rate: f64,
    pub v_o_max: f64,
    pub psi_dot_o_max: f64,
    pub a_o_max: f64,
    /// Safety radius drawn around the obstacle, m.
    pub r: f64,
    pub tau_safe: f64,
    /// Loom at which avoidance engages, 1/s.
    pub engage_loom: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    pub psi: f64,
    pub v: f64,
}

impl From<VehicleState> for Pose {
    fn from(s: VehicleState) -> Self {
        Self {
            x: s.x,
            y: s.y,
            psi: s.psi,
            v: s.v,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Meas {
    pub loom: f64,
    pub lambda: f64,
    pub lambda_dot: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cmd {
    /// Applied heading rate, rad/s.
    pub u: f64,
    pub u_ca: f64,
    pub u_tr: f64,
    pub engaged: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObstacleCmd {
    pub turn_rate: f64,
    pub speed: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    #[serde(rename = "T")]
    pub antitarget: bool,
    #[serde(rename = "A1")]
    pub a1: bool,
    #[serde(rename = "A2")]
    pub a2: bool,
    pub conflict: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cert {
    pub a1: f64,
    pub a2: f64,
    /// `null` where the barrier function is undefined.
    pub v: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateFrame {
    pub t: f64,
    pub tick: u64,
    pub paused: bool,
    /// The episode ran out of time or the agents coincided.
    pub finished: bool,
    pub robot: Pose,
    pub obstacle: Pose,
    pub meas: Meas,
    pub cmd: Cmd,
    /// Obstacle command in force after clamping.
    pub obstacle_cmd: ObstacleCmd,
    pub verdict: Verdict,
    pub cert: Cert,
}

impl StateFrame {
    pub fn from_record(r: &TraceRecord, tick: u64, paused: bool, finished: bool) -> Self {
        Self {
            t: r.t,
            tick,
            paused,
            finished,
            robot: r.robot.into(),
            obstacle: r.obstacle.into(),
            meas: Meas {
                loom: r.meas.loom,
                lambda: r.meas.lambda,
                lambda_dot: r.meas.lambda_dot,
            },
            cmd: Cmd {
                u: r.cmd.turn_rate,
                u_ca: r.cmd.ca_component,
                u_tr: r.cmd.tr_component,
                engaged: r.cmd.engaged,
            },
            obstacle_cmd: ObstacleCmd {
                turn_rate: r.obstacle_cmd.turn_rate,
                speed: r.obstacle_cmd.speed,
            },
            verdict: Verdict {
                antitarget: r.verdict.in_antitarget,
                a1: r.verdict.in_avoidance_a1,
                a2: r.verdict.in_avoidance_a2,
                conflict: r.verdict.in_conflict,
            },
            cert: Cert {
                a1: r.cert.a1,
                a2: r.cert.a2,
                v: Some(r.cert.v).filter(|v| v.is_finite()),
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ControlAction {
    Pause,
    Resume,
    Reset,
    SetScenario,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ClientMessage {
    ObstacleCmd {
        turn_rate: f64,
        speed: f64,
    },
    Control {
        action: ControlAction,
        /// Required by `set_scenario`, ignored otherwise.
        #[serde(default)]
        scenario: Option<Box<ScenarioConfig>>,
    },
}

/// Parses one inbound text frame. The error string is sent back verbatim.
pub fn parse_client(text: &str) -> Result<ClientMessage, String> {
    let value: serde_json::Value = serde_json::from_str(text).map_err(|e| format!("malformed JSON: {e}"))?;
    if let Some(v) = value.get("v") {
        if v.as_u64() != Some(u64::from(PROTOCOL_VERSION)) {
            return Err(format!("unsupported protocol version {v}, expected {PROTOCOL_VERSION}"));
        }
    }
    serde_json::from_value(value).map_err(|e| format!("invalid message: {e}"))
}
