// SPDX-License-Identifier: Apache-2.0 OR MIT

//! Closed-loop episode engine.
//!
//! Physics runs at `dt` with RK4; sensing and control run at the sensor rate
//! and their outputs are held between ticks. One [`Episode`] owns all mutable
//! state, so it can be driven step by step (live console) or run to
//! completion ([`run_episode`]).

mod falsify;
mod policy;
mod reference;
mod trace;

use std::path::Path;

use serde::{Deserialize, Serialize};

pub use falsify::{falsify, Campaign, CounterExample, FalsificationReport, PolicyMix, PolicyTally};
pub use policy::{ObstacleCommand, ObstacleDriver, PolicySpec};
pub use reference::ReferencePath;
pub use trace::{write_csv, write_jsonl, write_plot_csv, TRACE_SCHEMA};

use crate::certificate::{barriers, monitor, CertificateSample, CertificateVerdict, MonitorConfig};
use crate::control::{compose, tracking_control, ControlCommand, ControllerConfig, GateState, MeasurableState};
use crate::error::{Error, Result};
use crate::geometry::{
    relative_geometry_with_inputs, step_unicycle, AgentInputs, RelativeGeometry, VehicleState, DEFAULT_DT,
};
use crate::params::{check_feasibility, DesignParams, EnvelopeBounds};
use crate::regions::{classify, EngagementState, RegionVerdict};
use crate::sensing::{Measurement, Sensor, SensorConfig};

/// Reference-time window `[t − behind, t + ahead]` searched for cross-track
/// error, s.
pub const CROSS_TRACK_WINDOW: (f64, f64) = (30.0, 5.0);

fn default_dt() -> f64 {
    DEFAULT_DT
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    #[serde(default)]
    pub name: String,
    #[serde(default = "default_dt")]
    pub dt: f64,
    pub duration: f64,
    pub robot_init: VehicleState,
    pub obstacle_init: VehicleState,
    pub obstacle_policy: PolicySpec,
    pub reference_path: ReferencePath,
    #[serde(default)]
    pub sensor: SensorConfig,
    pub design: DesignParams,
    pub envelope: EnvelopeBounds,
    #[serde(default)]
    pub controller: ControllerConfig,
    #[serde(default)]
    pub monitor: MonitorConfig,
    #[serde(default)]
    pub seed: u64,
}

impl ScenarioConfig {
    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    /// Physics steps per control tick.
    pub fn steps_per_tick(&self) -> Result<usize> {
        let ratio = self.sensor.period() / self.dt;
        let n = ratio.round();
        if n < 1.0 || (ratio - n).abs() > 1e-9 * ratio.max(1.0) {
            return Err(Error::InvalidScenario(format!(
                "sensor period {} s is not a whole multiple of dt = {} s",
                self.sensor.period(),
                self.dt
            )));
        }
        Ok(n as usize)
    }

    /// Structural checks. The initial-state check lives in [`Episode::new`].
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::InvalidScenario(format!("dt must be > 0, got {}", self.dt)));
        }
        if !(self.duration > self.dt) || !self.duration.is_finite() {
            return Err(Error::InvalidScenario(format!(
                "duration must exceed dt, got {} with dt = {}",
                self.duration, self.dt
            )));
        }
        self.envelope.validate()?;
        self.design.validate()?;
        self.sensor.validate()?;
        self.reference_path.validate()?;
        self.obstacle_policy.validate()?;
        self.steps_per_tick()?;
        let b = &self.envelope;
        let v = self.robot_init.v;
        if v < b.v_r_min || v > b.v_r_max {
            return Err(Error::InvalidScenario(format!(
                "robot speed {v} outside [{}, {}]",
                b.v_r_min, b.v_r_max
            )));
        }
        if self.obstacle_init.v > b.v_o_max {
            return Err(Error::InvalidScenario(format!(
                "obstacle speed {} above {}",
                self.obstacle_init.v, b.v_o_max
            )));
        }
        if let Some(eps) = self.monitor.epsilon {
            if !(eps >= 0.0) {
                return Err(Error::InvalidScenario(format!("monitor epsilon must be >= 0, got {eps}")));
            }
        }
        Ok(())
    }

    /// Engagement state at `t = 0`.
    pub fn initial_state(&self) -> Result<EngagementState> {
        let truth = relative_geometry_with_inputs(
            &self.robot_init,
            &self.obstacle_init,
            AgentInputs::default(),
            AgentInputs::default(),
        )?;
        EngagementState::from_truth(&self.robot_init, &truth)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub t: f64,
    pub robot: VehicleState,
    pub obstacle: VehicleState,
    pub truth: RelativeGeometry,
    pub meas: Measurement,
    pub cmd: ControlCommand,
    pub obstacle_cmd: ObstacleCommand,
    pub verdict: RegionVerdict,
    pub cert: CertificateSample,
    /// Distance from the robot to the reference path within
    /// [`CROSS_TRACK_WINDOW`] of the current reference time, refreshed on
    /// control ticks.
    pub cross_track: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeResult {
    pub name: String,
    pub samples: usize,
    pub min_rho: f64,
    /// Smallest `−1/loom` over samples with negative loom; `+inf` if none.
    pub min_ttc: f64,
    /// Smallest true loom seen.
    pub min_loom: f64,
    pub engaged_intervals: Vec<[f64; 2]>,
    pub antitarget_hit: bool,
    /// Agents became coincident and the episode stopped early.
    pub collision_fault: bool,
    pub certificate: CertificateVerdict,
    pub final_cross_track: f64,
}

impl EpisodeResult {
    /// Same episode judged only on truth-side safety and the certificate.
    pub fn is_clean(&self) -> bool {
        !self.antitarget_hit && self.certificate.pass
    }
}

/// A running closed-loop episode.
#[derive(Debug, Clone)]
pub struct Episode {
    cfg: ScenarioConfig,
    steps_per_tick: usize,
    total_steps: usize,
    step: usize,
    robot: VehicleState,
    obstacle: VehicleState,
    sensor: Sensor,
    gate: GateState,
    driver: ObstacleDriver,
    meas: Measurement,
    cmd: ControlCommand,
    robot_inputs: AgentInputs,
    obstacle_inputs: AgentInputs,
    cross_track: f64,
    fault: bool,
}

/// Mixes the scenario seed into the sensor's own seed.
fn sensor_seed(scenario: u64, sensor: u64) -> u64 {
    scenario.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ sensor
}

impl Episode {
    pub fn new(cfg: ScenarioConfig) -> Result<Self> {
        cfg.validate()?;
        let x0 = cfg.initial_state()?;
        let v = classify(&x0, &cfg.design, &cfg.envelope)?;
        if v.in_avoidance() {
            return Err(Error::StartsInAvoidanceRegion(format!(
                "range {:.3} m, loom {:.4} 1/s, A1 margin {:.4}, A2 margin {:.4}",
                x0.range(),
                x0.x1,
                v.a1_value,
                v.a2_value
            )));
        }
        let steps_per_tick = cfg.steps_per_tick()?;
        let total_steps = (cfg.duration / cfg.dt).round() as usize;
        let mut sensor_cfg = cfg.sensor;
        sensor_cfg.seed = sensor_seed(cfg.seed, sensor_cfg.seed);
        Ok(Self {
            steps_per_tick,
            total_steps,
            step: 0,
            robot: cfg.robot_init,
            obstacle: cfg.obstacle_init,
            sensor: Sensor::new(sensor_cfg)?,
            gate: GateState::from_config(&cfg.controller, &cfg.design),
            driver: ObstacleDriver::new(&cfg.obstacle_policy, cfg.envelope)?,
            meas: Measurement::default(),
            cmd: ControlCommand::default(),
            robot_inputs: AgentInputs::default(),
            obstacle_inputs: AgentInputs::default(),
            cross_track: 0.0,
            fault: false,
            cfg,
        })
    }

    pub fn config(&self) -> &ScenarioConfig {
        &self.cfg
    }

    pub fn time(&self) -> f64 {
        self.step as f64 * self.cfg.dt
    }

    pub fn is_finished(&self) -> bool {
        self.fault || self.step > self.total_steps
    }

    pub fn collision_fault(&self) -> bool {
        self.fault
    }

    pub fn steps_per_tick(&self) -> usize {
        self.steps_per_tick
    }

    /// Hands the obstacle to an external pilot holding `cmd`.
    pub fn set_obstacle_command(&mut self, cmd: ObstacleCommand) {
        self.driver.set_external(cmd);
    }

    /// Clamps `cmd` the way the episode would.
    pub fn clamp_obstacle_command(&self, cmd: ObstacleCommand) -> ObstacleCommand {
        self.driver.clamp(cmd)
    }

    fn control_tick(&mut self, truth: &RelativeGeometry, t: f64) -> Result<()> {
        let cfg = &self.cfg;
        let period = cfg.sensor.period();
        self.meas = self.sensor.sense(truth, t)?;
        let m = MeasurableState::new(&self.meas, &self.robot, self.cmd.accel);
        let target = cfg.reference_path.position(t);
        let tr = tracking_control(&self.robot, target, &cfg.envelope, &cfg.controller.tracking);
        self.cmd = compose(&m, &tr, &cfg.design, &cfg.envelope, &cfg.controller, &mut self.gate, period);
        self.robot_inputs = AgentInputs::new(self.cmd.turn_rate, self.cmd.accel);
        self.obstacle_inputs = self.driver.inputs(t, &self.robot, &self.obstacle, period);
        self.cross_track = cfg.reference_path.cross_track(
            self.robot.position(),
            (t - CROSS_TRACK_WINDOW.0).max(0.0),
            t + CROSS_TRACK_WINDOW.1,
        );
        Ok(())
    }

    /// Records the current sample and advances one physics step.
    ///
    /// Returns `None` once the episode is over. Coincident agents end the
    /// episode with a fault flag instead of an error.
    pub fn step(&mut self) -> Result<Option<TraceRecord>> {
        if self.is_finished() {
            return Ok(None);
        }
        let t = self.time();
        let zero = AgentInputs::default();
        let coarse = match relative_geometry_with_inputs(&self.robot, &self.obstacle, zero, zero) {
            Ok(g) => g,
            Err(Error::Coincident) => {
                self.fault = true;
                return Ok(None);
            }
            Err(e) => return Err(e),
        };
        if self.step.is_multiple_of(self.steps_per_tick) {
            self.control_tick(&coarse, t)?;
        }
        let truth = relative_geometry_with_inputs(&self.robot, &self.obstacle, self.robot_inputs, self.obstacle_inputs)?;
        let x = EngagementState::from_truth(&self.robot, &truth)?;
        let verdict = classify(&x, &self.cfg.design, &self.cfg.envelope)?;
        let (a1, a2) = barriers(&x, &self.cfg.design, &self.cfg.envelope)?;
        let on_symmetry = x.heading_offset().abs() < self.cfg.monitor.symmetry_band;
        let record = TraceRecord {
            t,
            robot: self.robot,
            obstacle: self.obstacle,
            truth,
            meas: self.meas,
            cmd: self.cmd,
            obstacle_cmd: self.driver.last_applied(),
            verdict,
            cert: CertificateSample::new(a1, a2, verdict.in_conflict, on_symmetry),
            cross_track: self.cross_track,
        };
        self.robot = step_unicycle(&self.robot, self.robot_inputs, self.cfg.dt)?;
        self.obstacle = step_unicycle(&self.obstacle, self.obstacle_inputs, self.cfg.dt)?;
        self.step += 1;
        Ok(Some(record))
    }
}

/// Runs the episode to completion and scores it.
pub fn run_episode(cfg: ScenarioConfig) -> Result<(Vec<TraceRecord>, EpisodeResult)> {
    let mut ep = Episode::new(cfg)?;
    let mut trace = Vec::with_capacity(ep.total_steps + 1);
    while let Some(r) = ep.step()? {
        trace.push(r);
    }
    let fault = ep.collision_fault();
    let cfg = ep.cfg;
    let result = summarize(&cfg, &mut trace, fault)?;
    Ok((trace, result))
}

/// Fills certificate derivatives into `trace` and builds the result.
pub fn summarize(cfg: &ScenarioConfig, trace: &mut [TraceRecord], collision_fault: bool) -> Result<EpisodeResult> {
    let mut cert: Vec<CertificateSample> = trace.iter().map(|r| r.cert).collect();
    let certificate = monitor(&mut cert, cfg.dt, &cfg.monitor)?;
    for (r, c) in trace.iter_mut().zip(&cert) {
        r.cert.v_dot_numeric = c.v_dot_numeric;
    }

    let mut min_rho = f64::INFINITY;
    let mut min_ttc = f64::INFINITY;
    let mut min_loom = 0.0f64;
    let mut antitarget_hit = collision_fault;
    let mut intervals: Vec<[f64; 2]> = Vec::new();
    let mut open: Option<f64> = None;
    for r in trace.iter() {
        min_rho = min_rho.min(r.truth.rho);
        let l = r.truth.rho_dot.min(0.0) / r.truth.rho;
        min_loom = min_loom.min(l);
        if l < 0.0 {
            min_ttc = min_ttc.min(-1.0 / l);
        }
        antitarget_hit |= r.verdict.in_antitarget;
        match (r.cmd.engaged, open) {
            (true, None) => open = Some(r.t),
            (false, Some(s)) => {
                intervals.push([s, r.t]);
                open = None;
            }
            _ => {}
        }
    }
    let last = trace.last().ok_or(Error::InsufficientData(0))?;
    if let Some(s) = open {
        intervals.push([s, last.t]);
    }
    Ok(EpisodeResult {
        name: cfg.name.clone(),
        samples: trace.len(),
        min_rho,
        min_ttc,
        min_loom,
        engaged_intervals: intervals,
        antitarget_hit,
        collision_fault,
        certificate,
        final_cross_track: last.cross_track,
    })
}

/// Feasibility must hold before an episode may be called certified.
pub fn is_certified_setup(cfg: &ScenarioConfig) -> bool {
    check_feasibility(&cfg.envelope, &cfg.design).all_satisfied()
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn head_on() -> ScenarioConfig {
        ScenarioConfig {
            name: "head-on".into(),
            dt: DEFAULT_DT,
            duration: 20.0,
            robot_init: VehicleState::new(0.0, 0.0, 0.0, 0.3),
            obstacle_init: VehicleState::new(6.0, 0.0, std::f64::consts::PI, 1.0),
            obstacle_policy: PolicySpec::HeadOn,
            reference_path: ReferencePath::straight([0.0, 0.0], 0.0, 0.3),
            sensor: SensorConfig::default(),
            design: DesignParams::experimental(),
            envelope: EnvelopeBounds::experimental(),
            controller: ControllerConfig::default(),
            monitor: MonitorConfig::default(),
            seed: 1,
        }
    }

    #[test]
    fn trace_spacing_is_constant() {
        let mut cfg = head_on();
        cfg.duration = 1.0;
        let (trace, res) = run_episode(cfg).unwrap();
        assert_eq!(trace.len(), 201);
        assert_eq!(res.samples, 201);
        for (i, r) in trace.iter().enumerate() {
            assert_eq!(r.t, i as f64 * DEFAULT_DT);
        }
    }

    #[test]
    fn start_inside_avoidance_rejected() {
        let mut cfg = head_on();
        cfg.obstacle_init = VehicleState::new(1.0, 0.0, std::f64::consts::PI, 1.0);
        assert!(matches!(Episode::new(cfg), Err(Error::StartsInAvoidanceRegion(_))));
    }

    #[test]
    fn bad_timing_rejected() {
        let mut cfg = head_on();
        cfg.dt = 0.003;
        assert!(matches!(cfg.validate(), Err(Error::InvalidScenario(_))));
        let mut cfg = head_on();
        cfg.duration = cfg.dt;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn distant_static_obstacle_never_engages() {
        let mut cfg = head_on();
        cfg.obstacle_init = VehicleState::new(100.0, 0.0, 0.0, 0.0);
        cfg.obstacle_policy = PolicySpec::Static;
        let (trace, res) = run_episode(cfg).unwrap();
        assert!(res.engaged_intervals.is_empty());
        assert!(trace.iter().all(|r| r.cmd.ca_component == 0.0));
        assert!(trace.iter().skip(400).all(|r| r.cross_track < 0.1));
    }

    #[test]
    fn coincidence_ends_episode_as_hit() {
        let mut cfg = head_on();
        cfg.controller.invert_avoidance = true;
        cfg.obstacle_init = VehicleState::new(3.0, 0.0, std::f64::consts::PI, 0.0);
        cfg.obstacle_policy = PolicySpec::Static;
        cfg.reference_path = ReferencePath::straight([0.0, 0.0], 0.0, 0.5);
        cfg.robot_init.v = 0.5;
        let (_, res) = run_episode(cfg).unwrap();
        assert!(res.antitarget_hit);
    }
}
