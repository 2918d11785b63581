// SPDX-License-Identifier: Apache-2.0 OR MIT

//! Time-parameterized reference paths for the exogenous tracker.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Time resolution used when measuring distance to the path, s.
const CROSS_TRACK_STEP: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ReferencePath {
    /// `x(t) = Σ x[i]·tⁱ`, `y(t) = Σ y[i]·tⁱ`.
    Polynomial { x: Vec<f64>, y: Vec<f64> },
    /// Piecewise-linear through `[t, x, y]` points; holds the last point.
    Waypoints { points: Vec<[f64; 3]> },
}

fn horner(c: &[f64], t: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &a| acc * t + a)
}

impl ReferencePath {
    /// Straight line through `start` along `heading` at `speed`.
    pub fn straight(start: [f64; 2], heading: f64, speed: f64) -> Self {
        let (s, c) = heading.sin_cos();
        ReferencePath::Polynomial {
            x: vec![start[0], speed * c],
            y: vec![start[1], speed * s],
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ReferencePath::Polynomial { x, y } => {
                if x.is_empty() || y.is_empty() || x.iter().chain(y).any(|c| !c.is_finite()) {
                    return Err(Error::Config("polynomial path needs finite, non-empty coefficients".into()));
                }
            }
            ReferencePath::Waypoints { points } => {
                if points.is_empty() {
                    return Err(Error::Config("waypoint path needs at least one point".into()));
                }
                if points.windows(2).any(|w| !(w[1][0] > w[0][0])) {
                    return Err(Error::Config("waypoint times must be strictly increasing".into()));
                }
            }
        }
        Ok(())
    }

    pub fn position(&self, t: f64) -> [f64; 2] {
        match self {
            ReferencePath::Polynomial { x, y } => [horner(x, t), horner(y, t)],
            ReferencePath::Waypoints { points } => {
                let first = points[0];
                if t <= first[0] {
                    return [first[1], first[2]];
                }
                for w in points.windows(2) {
                    let (a, b) = (w[0], w[1]);
                    if t <= b[0] {
                        let s = (t - a[0]) / (b[0] - a[0]);
                        return [a[1] + s * (b[1] - a[1]), a[2] + s * (b[2] - a[2])];
                    }
                }
                let last = points[points.len() - 1];
                [last[1], last[2]]
            }
        }
    }

    /// Distance from `p` to the path traced over `[t0, t1]`.
    pub fn cross_track(&self, p: [f64; 2], t0: f64, t1: f64) -> f64 {
        let span = (t1 - t0).max(0.0);
        let n = ((span / CROSS_TRACK_STEP).ceil() as usize).max(1);
        let mut best = f64::INFINITY;
        let mut prev = self.position(t0);
        for i in 1..=n {
            let cur = self.position(t0 + span * i as f64 / n as f64);
            best = best.min(point_segment_distance(p, prev, cur));
            prev = cur;
        }
        best.min(dist(p, prev))
    }
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

fn point_segment_distance(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let ab = [b[0] - a[0], b[1] - a[1]];
    let len2 = ab[0] * ab[0] + ab[1] * ab[1];
    if len2 == 0.0 {
        return dist(p, a);
    }
    let s = (((p[0] - a[0]) * ab[0] + (p[1] - a[1]) * ab[1]) / len2).clamp(0.0, 1.0);
    dist(p, [a[0] + s * ab[0], a[1] + s * ab[1]])
}
