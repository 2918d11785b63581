// SPDX-License-Identifier: Apache-2.0 OR MIT

//! Monte-Carlo falsification: random bounded obstacle behaviours and initial
//! geometries around a base scenario, run in parallel.
//!
//! Episode `i` draws everything from a ChaCha stream selected by `i`, so the
//! report does not depend on thread count or scheduling.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{run_episode, EpisodeResult, PolicySpec, ScenarioConfig};
use crate::error::{Error, Result};
use crate::geometry::{principal_angle, VehicleState};
use crate::regions::classify;

/// Relative weights of the sampled obstacle behaviours.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PolicyMix {
    pub head_on: f64,
    pub pursuit: f64,
    pub zig_zag: f64,
}

impl Default for PolicyMix {
    fn default() -> Self {
        Self {
            head_on: 1.0,
            pursuit: 1.0,
            zig_zag: 1.0,
        }
    }
}

impl PolicyMix {
    pub fn head_on_only() -> Self {
        Self {
            head_on: 1.0,
            pursuit: 0.0,
            zig_zag: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Campaign {
    pub n_episodes: usize,
    pub seed: u64,
    pub mix: PolicyMix,
    /// Initial range to the obstacle, m.
    pub range: [f64; 2],
    /// Obstacle speed, m/s; the upper end is capped at `V_o,max`.
    pub obstacle_speed: [f64; 2],
    /// Uniform error added to the obstacle's aim at the robot, rad.
    pub aim_jitter: f64,
    pub zig_zag_period: [f64; 2],
    pub steering_gain: [f64; 2],
    /// Redraws allowed when a draw starts inside the avoidance set.
    pub max_redraws: usize,
}

impl Default for Campaign {
    fn default() -> Self {
        Self {
            n_episodes: 1000,
            seed: 7,
            mix: PolicyMix::default(),
            range: [3.0, 8.0],
            obstacle_speed: [0.2, 2.0],
            aim_jitter: 0.3,
            zig_zag_period: [2.0, 6.0],
            steering_gain: [1.0, 4.0],
            max_redraws: 100,
        }
    }
}

impl Campaign {
    pub fn validate(&self) -> Result<()> {
        if self.n_episodes == 0 {
            return Err(Error::Config("falsification needs at least one episode".into()));
        }
        let m = &self.mix;
        let weights = [m.head_on, m.pursuit, m.zig_zag];
        if weights.iter().any(|w| !(*w >= 0.0)) || weights.iter().sum::<f64>() <= 0.0 {
            return Err(Error::Config("policy mix weights must be >= 0 with a positive sum".into()));
        }
        for (name, [lo, hi]) in [
            ("range", self.range),
            ("zig_zag_period", self.zig_zag_period),
            ("steering_gain", self.steering_gain),
        ] {
            if !(lo > 0.0 && hi >= lo && hi.is_finite()) {
                return Err(Error::Config(format!("{name} must be a positive, ordered interval")));
            }
        }
        let [lo, hi] = self.obstacle_speed;
        if !(lo >= 0.0 && hi >= lo) {
            return Err(Error::Config("obstacle_speed must be a non-negative, ordered interval".into()));
        }
        if !(self.aim_jitter >= 0.0) {
            return Err(Error::Config("aim_jitter must be >= 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CounterExample {
    pub index: usize,
    pub policy: String,
    pub min_rho: f64,
    pub min_ttc: f64,
    pub min_loom: f64,
    pub antitarget_hit: bool,
    pub certificate_pass: bool,
    /// Complete scenario; re-running it reproduces the episode.
    pub scenario: ScenarioConfig,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PolicyTally {
    pub policy: String,
    pub episodes: usize,
    pub antitarget_hits: usize,
    pub certificate_failures: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FalsificationReport {
    pub n_episodes: usize,
    pub seed: u64,
    pub antitarget_episodes: usize,
    /// Episodes that reached the anti-target set.
    pub counterexamples: Vec<CounterExample>,
    /// Episodes whose certificate check failed.
    pub certificate_failures: Vec<CounterExample>,
    pub certificate_pass_rate: f64,
    pub worst_min_rho: f64,
    pub worst_min_ttc: f64,
    pub worst_min_loom: f64,
    pub by_policy: Vec<PolicyTally>,
    /// Draws discarded because they started inside the avoidance set.
    pub redraws: usize,
}

impl FalsificationReport {
    pub fn is_clean(&self) -> bool {
        self.antitarget_episodes == 0
    }
}

fn uniform(rng: &mut ChaCha8Rng, [lo, hi]: [f64; 2]) -> f64 {
    if hi > lo {
        rng.random_range(lo..hi)
    } else {
        lo
    }
}

fn pick_policy(rng: &mut ChaCha8Rng, c: &Campaign) -> PolicySpec {
    let m = &c.mix;
    let total = m.head_on + m.pursuit + m.zig_zag;
    let u = rng.random::<f64>() * total;
    let gain = uniform(rng, c.steering_gain);
    if u < m.head_on {
        PolicySpec::HeadOn
    } else if u < m.head_on + m.pursuit {
        PolicySpec::Pursuit { gain }
    } else {
        PolicySpec::ZigZag {
            period: uniform(rng, c.zig_zag_period),
            amplitude: PI / 4.0,
            gain,
            phase: 0.0,
        }
    }
}

/// Draws episode `index`, redrawing until the start is outside `A`.
pub(crate) fn draw(base: &ScenarioConfig, c: &Campaign, index: usize) -> Result<(ScenarioConfig, usize)> {
    let mut rng = ChaCha8Rng::seed_from_u64(c.seed);
    rng.set_stream(index as u64);
    let speed_hi = c.obstacle_speed[1].min(base.envelope.v_o_max);
    let speed_lo = c.obstacle_speed[0].min(speed_hi);
    for attempt in 0..=c.max_redraws {
        let policy = pick_policy(&mut rng, c);
        let range = uniform(&mut rng, c.range);
        let bearing = rng.random_range(-PI..PI);
        let speed = uniform(&mut rng, [speed_lo, speed_hi]);
        let jitter = if c.aim_jitter > 0.0 {
            rng.random_range(-c.aim_jitter..=c.aim_jitter)
        } else {
            0.0
        };
        let r = &base.robot_init;
        let (ox, oy) = (r.x + range * bearing.cos(), r.y + range * bearing.sin());
        let heading = principal_angle(bearing + PI + jitter);
        let mut cfg = base.clone();
        cfg.name = format!("{}-{index}", policy.name());
        cfg.obstacle_init = VehicleState::new(ox, oy, heading, speed);
        cfg.obstacle_policy = policy;
        cfg.seed = rng.random();
        let x0 = cfg.initial_state()?;
        if !classify(&x0, &cfg.design, &cfg.envelope)?.in_avoidance() {
            return Ok((cfg, attempt));
        }
    }
    Err(Error::InvalidScenario(format!(
        "episode {index}: no start outside the avoidance set after {} draws",
        c.max_redraws + 1
    )))
}

fn counterexample(index: usize, cfg: ScenarioConfig, r: &EpisodeResult) -> CounterExample {
    CounterExample {
        index,
        policy: cfg.obstacle_policy.name().to_string(),
        min_rho: r.min_rho,
        min_ttc: r.min_ttc,
        min_loom: r.min_loom,
        antitarget_hit: r.antitarget_hit,
        certificate_pass: r.certificate.pass,
        scenario: cfg,
    }
}

/// Runs `campaign.n_episodes` randomized episodes around `base`.
pub fn falsify(base: &ScenarioConfig, campaign: &Campaign) -> Result<FalsificationReport> {
    campaign.validate()?;
    base.validate()?;
    let outcomes: Vec<(ScenarioConfig, usize, EpisodeResult)> = (0..campaign.n_episodes)
        .into_par_iter()
        .map(|i| {
            let (cfg, redraws) = draw(base, campaign, i)?;
            let (_, result) = run_episode(cfg.clone())?;
            Ok((cfg, redraws, result))
        })
        .collect::<Result<_>>()?;

    let mut report = FalsificationReport {
        n_episodes: campaign.n_episodes,
        seed: campaign.seed,
        antitarget_episodes: 0,
        counterexamples: Vec::new(),
        certificate_failures: Vec::new(),
        certificate_pass_rate: 0.0,
        worst_min_rho: f64::INFINITY,
        worst_min_ttc: f64::INFINITY,
        worst_min_loom: 0.0,
        by_policy: ["head_on", "pursuit", "zig_zag"]
            .iter()
            .map(|p| PolicyTally {
                policy: p.to_string(),
                ..Default::default()
            })
            .collect(),
        redraws: 0,
    };
    let mut passes = 0usize;
    for (i, (cfg, redraws, r)) in outcomes.into_iter().enumerate() {
        report.redraws += redraws;
        report.worst_min_rho = report.worst_min_rho.min(r.min_rho);
        report.worst_min_ttc = report.worst_min_ttc.min(r.min_ttc);
        report.worst_min_loom = report.worst_min_loom.min(r.min_loom);
        if let Some(t) = report.by_policy.iter_mut().find(|t| t.policy == cfg.obstacle_policy.name()) {
            t.episodes += 1;
            t.antitarget_hits += r.antitarget_hit as usize;
            t.certificate_failures += !r.certificate.pass as usize;
        }
        if r.certificate.pass {
            passes += 1;
        } else {
            report.certificate_failures.push(counterexample(i, cfg.clone(), &r));
        }
        if r.antitarget_hit {
            report.antitarget_episodes += 1;
            report.counterexamples.push(counterexample(i, cfg, &r));
        }
    }
    report.certificate_pass_rate = passes as f64 / campaign.n_episodes as f64;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::tests::head_on;

    #[test]
    fn zero_episodes_rejected() {
        let c = Campaign {
            n_episodes: 0,
            ..Campaign::default()
        };
        assert!(matches!(falsify(&head_on(), &c), Err(Error::Config(_))));
    }

    #[test]
    fn draws_are_reproducible_and_start_outside_a() {
        let c = Campaign::default();
        let base = head_on();
        for i in 0..20 {
            let (a, _) = draw(&base, &c, i).unwrap();
            let (b, _) = draw(&base, &c, i).unwrap();
            assert_eq!(a, b);
            let x0 = a.initial_state().unwrap();
            assert!(!classify(&x0, &a.design, &a.envelope).unwrap().in_avoidance());
            assert!(a.obstacle_init.v <= a.envelope.v_o_max);
        }
        assert_ne!(draw(&base, &c, 0).unwrap().0, draw(&base, &c, 1).unwrap().0);
    }

    #[test]
    fn report_independent_of_thread_count() {
        let c = Campaign {
            n_episodes: 6,
            ..Campaign::default()
        };
        let mut base = head_on();
        base.duration = 3.0;
        let a = falsify(&base, &c).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let b = pool.install(|| falsify(&base, &c)).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    }
}
