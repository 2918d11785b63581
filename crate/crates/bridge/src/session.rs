// SPDX-License-Identifier: Apache-2.0 OR MIT

//! One client's simulation. Owned by a single task; nothing here is shared.

use loomcas::sim::{Episode, ObstacleCommand, ScenarioConfig, TraceRecord};
use loomcas::Result;

use crate::protocol::{parse_client, ClientMessage, ControlAction, Frame, Hello, ServerMessage, StateFrame};

pub struct Session {
    base: ScenarioConfig,
    episode: Episode,
    paused: bool,
    tick: u64,
    generation: u64,
    last: Option<TraceRecord>,
    record: bool,
    trace: Vec<TraceRecord>,
}

impl Session {
    /// Fails when the scenario is invalid or starts inside the avoidance set.
    pub fn new(base: ScenarioConfig) -> Result<Self> {
        let episode = Episode::new(base.clone())?;
        Ok(Self {
            base,
            episode,
            paused: false,
            tick: 0,
            generation: 0,
            last: None,
            record: false,
            trace: Vec::new(),
        })
    }

    /// Keeps every physics sample for [`Session::take_trace`].
    pub fn recording(mut self, on: bool) -> Self {
        self.record = on;
        self
    }

    pub fn config(&self) -> &ScenarioConfig {
        &self.base
    }

    /// Bumped by every successful reset or scenario switch.
    pub fn generation(&self) -> u64 {
        self.generation
    }

    pub fn is_paused(&self) -> bool {
        self.paused
    }

    /// Wall-clock spacing of control ticks, s.
    pub fn period(&self) -> f64 {
        self.episode.steps_per_tick() as f64 * self.base.dt
    }

    pub fn hello(&self) -> Frame {
        let cfg = &self.base;
        Frame::new(ServerMessage::Hello(Hello {
            scenario: cfg.name.clone(),
            rate: 1.0 / self.period(),
            v_o_max: cfg.envelope.v_o_max,
            psi_dot_o_max: cfg.envelope.psi_dot_o_max,
            a_o_max: cfg.envelope.a_o_max,
            r: cfg.design.r,
            tau_safe: cfg.design.tau_safe,
            engage_loom: cfg.controller.engage_threshold(&cfg.design),
        }))
    }

    /// Samples recorded since the last call, in trace order.
    pub fn take_trace(&mut self) -> Vec<TraceRecord> {
        std::mem::take(&mut self.trace)
    }

    /// Applies one inbound text frame and returns the frames to send back.
    pub fn handle_text(&mut self, text: &str) -> Vec<Frame> {
        match parse_client(text) {
            Ok(msg) => self.handle(msg),
            Err(e) => vec![error(e)],
        }
    }

    pub fn handle(&mut self, msg: ClientMessage) -> Vec<Frame> {
        match msg {
            ClientMessage::ObstacleCmd { turn_rate, speed } => {
                // Clamped by the episode on the next control tick.
                self.episode.set_obstacle_command(ObstacleCommand { turn_rate, speed });
                Vec::new()
            }
            ClientMessage::Control { action, scenario } => match action {
                ControlAction::Pause => {
                    self.paused = true;
                    Vec::new()
                }
                ControlAction::Resume => {
                    self.paused = false;
                    Vec::new()
                }
                ControlAction::Reset => self.restart(self.base.clone()),
                ControlAction::SetScenario => match scenario {
                    Some(cfg) => self.restart(*cfg),
                    None => vec![error("set_scenario needs a scenario object".into())],
                },
            },
        }
    }

    fn restart(&mut self, cfg: ScenarioConfig) -> Vec<Frame> {
        match Episode::new(cfg.clone()) {
            Ok(ep) => {
                self.base = cfg;
                self.episode = ep;
                self.tick = 0;
                self.generation += 1;
                self.last = None;
                vec![self.hello()]
            }
            Err(e) => vec![error(format!("scenario rejected: {e}"))],
        }
    }

    /// Advances one control period and reports the sample taken at the tick.
    ///
    /// While paused or finished the previous sample is repeated. Returns
    /// `None` only before the first sample exists.
    pub fn tick(&mut self) -> Result<Option<Frame>> {
        if !self.paused && !self.episode.is_finished() {
            for i in 0..self.episode.steps_per_tick() {
                let Some(rec) = self.episode.step()? else { break };
                if i == 0 {
                    self.last = Some(rec);
                    self.tick += 1;
                }
                if self.record {
                    self.trace.push(rec);
                }
            }
        }
        Ok(self.last.as_ref().map(|r| {
            Frame::new(ServerMessage::State(StateFrame::from_record(
                r,
                self.tick,
                self.paused,
                self.episode.is_finished(),
            )))
        }))
    }
}

fn error(message: String) -> Frame {
    Frame::new(ServerMessage::Error { message })
}
