// SPDX-License-Identifier: Apache-2.0 OR MIT

//! Physical bounds, design constants and the sufficient conditions that tie
//! them together.
//!
//! [`check_feasibility`] never fails: an infeasible set is reported with
//! negative margins so that callers (and the `check` command) can show every
//! violated condition at once.

use std::f64::consts::PI;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Known bounds on both agents and on the exogenous tracking controller.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeBounds {
    pub v_r_min: f64,
    pub v_r_max: f64,
    pub v_o_max: f64,
    pub psi_dot_o_max: f64,
    pub a_r_max: f64,
    /// Defaults to zero: a constant-speed obstacle.
    #[serde(default)]
    pub a_o_max: f64,
    pub u_tr_max: f64,
}

impl EnvelopeBounds {
    /// Saturations and obstacle bounds of the ground-robot experiments.
    pub fn experimental() -> Self {
        Self {
            v_r_min: 0.2,
            v_r_max: 0.5,
            v_o_max: 2.0,
            psi_dot_o_max: 0.5,
            a_r_max: 3.5,
            a_o_max: 0.0,
            u_tr_max: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let all = [
            ("v_r_min", self.v_r_min),
            ("v_r_max", self.v_r_max),
            ("v_o_max", self.v_o_max),
            ("psi_dot_o_max", self.psi_dot_o_max),
            ("a_r_max", self.a_r_max),
            ("a_o_max", self.a_o_max),
            ("u_tr_max", self.u_tr_max),
        ];
        for (name, v) in all {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidParams(format!("envelope.{name} must be finite and >= 0, got {v}")));
            }
        }
        if !(self.v_r_min > 0.0 && self.v_r_max > self.v_r_min) {
            return Err(Error::InvalidParams(format!(
                "envelope needs v_r_max > v_r_min > 0, got [{}, {}]",
                self.v_r_min, self.v_r_max
            )));
        }
        if !(self.v_o_max > 0.0) {
            return Err(Error::InvalidParams("envelope.v_o_max must be > 0".into()));
        }
        Ok(())
    }
}

/// Designer-chosen constants of the avoidance law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DesignParams {
    /// Analysis radius in meters.
    pub r: f64,
    /// Minimal admissible separation; `r >= rho_safe`. Defaults to `r`.
    #[serde(default)]
    pub rho_safe: Option<f64>,
    pub tau_safe: f64,
    pub beta: f64,
    pub omega: f64,
    pub k: f64,
}

impl DesignParams {
    pub fn experimental() -> Self {
        Self {
            r: 0.5,
            rho_safe: None,
            tau_safe: 0.5,
            beta: 6.3,
            omega: 1.75,
            k: 1.0,
        }
    }

    pub fn rho_safe(&self) -> f64 {
        self.rho_safe.unwrap_or(self.r)
    }

    /// `γ = τ_safe·β + π`
    pub fn gamma(&self) -> f64 {
        self.tau_safe * self.beta + PI
    }

    pub fn validate(&self) -> Result<()> {
        let all = [
            ("r", self.r),
            ("tau_safe", self.tau_safe),
            ("beta", self.beta),
            ("omega", self.omega),
            ("k", self.k),
            ("rho_safe", self.rho_safe()),
        ];
        for (name, v) in all {
            if !v.is_finite() {
                return Err(Error::InvalidParams(format!("design.{name} must be finite, got {v}")));
            }
        }
        if !(self.rho_safe() > 0.0 && self.r >= self.rho_safe()) {
            return Err(Error::InvalidParams(format!(
                "design needs r >= rho_safe > 0, got r={}, rho_safe={}",
                self.r,
                self.rho_safe()
            )));
        }
        if !(self.tau_safe > 0.0 && self.beta > 0.0) {
            return Err(Error::InvalidParams("design needs tau_safe > 0 and beta > 0".into()));
        }
        // ω = 0 is let through so that the C1 violation can be reported.
        if self.omega < 0.0 || !(self.k > 0.0) {
            return Err(Error::InvalidParams("design needs omega >= 0 and k > 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedConstants {
    /// `τ_safe·β + π`
    pub gamma: f64,
    /// Bound `L` on the LOS rate outside the anti-target set, rad/s.
    pub los_rate_bound: f64,
    /// Conservative bound on the avoidance command, rad/s.
    pub u_max: f64,
}

/// Computes γ, the LOS-rate bound `L = (V_r,max + V_o,max)/r` and the
/// conservative avoidance-command bound.
///
/// The command bound uses `τ_safe` as its time constant.
pub fn derive(b: &EnvelopeBounds, d: &DesignParams) -> DerivedConstants {
    let gamma = d.gamma();
    let l = (b.v_r_max + b.v_o_max) / d.r;
    let g2 = gamma * gamma;
    let tau = d.tau_safe;
    let u_max = g2 / d.beta
        * (d.k * (1.0 / tau).powi(2) + b.v_r_max * l / (d.r + (b.v_r_min + b.v_o_max) * PI / d.beta))
        + 2.0 * g2 / (b.v_r_min * tau)
        + l;
    DerivedConstants {
        gamma,
        los_rate_bound: l,
        u_max,
    }
}

/// One inequality of the feasibility check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Condition {
    pub id: String,
    pub description: String,
    pub lhs: f64,
    /// `"<"`, `">"`, `"<="` or `">="`.
    pub relation: String,
    pub rhs: f64,
    pub satisfied: bool,
    /// Positive when satisfied; distance to the boundary in the units of `lhs`.
    pub margin: f64,
}

impl Condition {
    fn new(id: &str, description: &str, lhs: f64, relation: &str, rhs: f64) -> Self {
        let (satisfied, margin) = match relation {
            ">" => (lhs > rhs, lhs - rhs),
            ">=" => (lhs >= rhs, lhs - rhs),
            "<" => (lhs < rhs, rhs - lhs),
            "<=" => (lhs <= rhs, rhs - lhs),
            _ => unreachable!("unknown relation {relation}"),
        };
        Self {
            id: id.into(),
            description: description.into(),
            lhs,
            relation: relation.into(),
            rhs,
            satisfied,
            margin,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityReport {
    pub conditions: Vec<Condition>,
    pub derived: DerivedConstants,
    /// Interpretation notes carried along with the numbers.
    pub notes: Vec<String>,
}

impl FeasibilityReport {
    pub fn all_satisfied(&self) -> bool {
        self.conditions.iter().all(|c| c.satisfied)
    }

    pub fn condition(&self, id: &str) -> Option<&Condition> {
        self.conditions.iter().find(|c| c.id == id)
    }
}

impl fmt::Display for FeasibilityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.conditions {
            writeln!(
                f,
                "[{}] {:<3} {:>12.6} {:>2} {:<12.6} margin {:+.6}  {}",
                if c.satisfied { "ok" } else { "!!" },
                c.id,
                c.lhs,
                c.relation,
                c.rhs,
                c.margin,
                c.description
            )?;
        }
        writeln!(
            f,
            "gamma = {:.6}, L = {:.6} rad/s, u_max = {:.3} rad/s",
            self.derived.gamma, self.derived.los_rate_bound, self.derived.u_max
        )?;
        for n in &self.notes {
            writeln!(f, "note: {n}")?;
        }
        write!(f, "{}", if self.all_satisfied() { "FEASIBLE" } else { "INFEASIBLE" })
    }
}

/// Evaluates the four sufficient conditions of the avoidance guarantee.
///
/// * C1: `ω > r + (V_r,max + V_o,max)·π/β`
/// * C2: `u_tr,max < min(β²ω/(V_r,max·γ), β)`
/// * C3: `a_r,max < β²ω/(γπ)`
/// * C4: `k >= (γ/β)²·(V_o,max·ψ̇_o,max + a_o,max)`
pub fn check_feasibility(b: &EnvelopeBounds, d: &DesignParams) -> FeasibilityReport {
    let derived = derive(b, d);
    let gamma = derived.gamma;
    let beta = d.beta;

    let c1_rhs = d.r + (b.v_r_max + b.v_o_max) * PI / beta;
    let c2_rhs = (beta * beta * d.omega / (b.v_r_max * gamma)).min(beta);
    let c3_rhs = beta * beta * d.omega / (gamma * PI);
    let c4_rhs = (gamma / beta).powi(2) * (b.v_o_max * b.psi_dot_o_max + b.a_o_max);

    let conditions = vec![
        Condition::new("C1", "conflict-region width omega", d.omega, ">", c1_rhs),
        Condition::new("C2", "tracking heading authority u_tr_max", b.u_tr_max, "<", c2_rhs),
        Condition::new("C3", "robot acceleration a_r_max", b.a_r_max, "<", c3_rhs),
        Condition::new("C4", "avoidance gain k", d.k, ">=", c4_rhs),
    ];
    let mut notes = vec!["u_max uses tau_safe as its time constant".to_string()];
    if b.a_o_max == 0.0 {
        notes.push("a_o_max = 0: obstacle assumed to move at constant speed".to_string());
    }
    FeasibilityReport {
        conditions,
        derived,
        notes,
    }
}

/// Parameter document: `{"envelope": {...}, "design": {...}}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParamSet {
    pub envelope: EnvelopeBounds,
    pub design: DesignParams,
}

impl ParamSet {
    pub fn experimental() -> Self {
        Self {
            envelope: EnvelopeBounds::experimental(),
            design: DesignParams::experimental(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.envelope.validate()?;
        self.design.validate()
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let p: Self = serde_json::from_str(s)?;
        p.validate()?;
        Ok(p)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn feasibility(&self) -> FeasibilityReport {
        check_feasibility(&self.envelope, &self.design)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gamma_and_los_bound() {
        let d = derive(&EnvelopeBounds::experimental(), &DesignParams::experimental());
        assert!((d.gamma - 6.2916).abs() < 1e-4);
        assert!((d.los_rate_bound - 5.0).abs() < 1e-12);
    }

    #[test]
    fn u_max_is_linear_in_gain() {
        let b = EnvelopeBounds::experimental();
        let d = DesignParams::experimental();
        let g = d.gamma();
        let slope = g * g / (d.beta * d.tau_safe * d.tau_safe);
        let u1 = derive(&b, &d).u_max;
        let u3 = derive(&b, &DesignParams { k: 3.0, ..d }).u_max;
        assert!(((u3 - u1) - 2.0 * slope).abs() < 1e-9);
    }

    #[test]
    fn experimental_set_is_feasible() {
        let r = check_feasibility(&EnvelopeBounds::experimental(), &DesignParams::experimental());
        assert!(r.all_satisfied(), "{r}");
        let c1 = r.condition("C1").unwrap();
        assert!((c1.rhs - 1.7467).abs() < 1e-4);
        assert!((c1.margin - 0.0033).abs() < 1e-4);
        assert!((r.condition("C2").unwrap().rhs - 6.3).abs() < 1e-12);
        let c3 = r.condition("C3").unwrap();
        assert!((c3.rhs - 3.514).abs() < 1e-3);
        assert!((c3.margin - 0.014).abs() < 1e-3);
    }

    #[test]
    fn zero_omega_violates_c1() {
        let d = DesignParams {
            omega: 0.0,
            ..DesignParams::experimental()
        };
        let r = check_feasibility(&EnvelopeBounds::experimental(), &d);
        assert!(!r.condition("C1").unwrap().satisfied);
        assert!(!r.all_satisfied());
    }

    #[test]
    fn strictness_follows_the_relation() {
        assert!(!Condition::new("x", "", 1.0, ">", 1.0).satisfied);
        assert!(Condition::new("x", "", 1.0, ">=", 1.0).satisfied);
        assert!(!Condition::new("x", "", 1.0, "<", 1.0).satisfied);
    }

    #[test]
    fn validation_rejects_inverted_speed_band() {
        let b = EnvelopeBounds {
            v_r_min: 0.6,
            ..EnvelopeBounds::experimental()
        };
        assert!(b.validate().is_err());
        let d = DesignParams {
            rho_safe: Some(0.8),
            ..DesignParams::experimental()
        };
        assert!(d.validate().is_err());
    }

    #[test]
    fn json_round_trip() {
        let p = ParamSet::experimental();
        let s = serde_json::to_string(&p).unwrap();
        assert_eq!(ParamSet::from_json(&s).unwrap(), p);
        assert!(ParamSet::from_json("{\"envelope\": {}}").is_err());
    }
}
