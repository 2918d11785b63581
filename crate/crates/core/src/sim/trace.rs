// SPDX-License-Identifier: Apache-2.0 OR MIT

//! Trace export. Floats are written with Rust's shortest round-trip
//! formatting, so identical runs give identical bytes.

use std::io::Write;

use super::TraceRecord;
use crate::error::Result;

/// First line of every trace CSV.
pub const TRACE_SCHEMA: &str = "# loomcas-trace v1";

const COLUMNS: &[&str] = &[
    "t",
    "robot_x",
    "robot_y",
    "robot_psi",
    "robot_v",
    "obstacle_x",
    "obstacle_y",
    "obstacle_psi",
    "obstacle_v",
    "rho",
    "lambda",
    "rho_dot",
    "lambda_dot",
    "rho_ddot",
    "meas_loom",
    "meas_lambda",
    "meas_lambda_dot",
    "meas_stamp",
    "turn_rate",
    "accel",
    "u_ca",
    "u_tr",
    "engaged",
    "obstacle_turn_rate",
    "obstacle_speed",
    "in_antitarget",
    "in_a1",
    "in_a2",
    "in_conflict",
    "a1",
    "a2",
    "delta_t",
    "v",
    "v_dot",
    "on_symmetry_surface",
    "cross_track",
];

fn flag(b: bool) -> u8 {
    b as u8
}

pub fn write_csv<W: Write>(mut w: W, trace: &[TraceRecord]) -> Result<()> {
    writeln!(w, "{TRACE_SCHEMA}")?;
    writeln!(w, "{}", COLUMNS.join(","))?;
    for r in trace {
        let (ro, ob, g, m, c, v) = (&r.robot, &r.obstacle, &r.truth, &r.meas, &r.cmd, &r.verdict);
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.t,
            ro.x,
            ro.y,
            ro.psi,
            ro.v,
            ob.x,
            ob.y,
            ob.psi,
            ob.v,
            g.rho,
            g.lambda,
            g.rho_dot,
            g.lambda_dot,
            g.rho_ddot,
            m.loom,
            m.lambda,
            m.lambda_dot,
            m.stamp,
            c.turn_rate,
            c.accel,
            c.ca_component,
            c.tr_component,
            flag(c.engaged),
            r.obstacle_cmd.turn_rate,
            r.obstacle_cmd.speed,
            flag(v.in_antitarget),
            flag(v.in_avoidance_a1),
            flag(v.in_avoidance_a2),
            flag(v.in_conflict),
            v.a1_value,
            v.a2_value,
            v.delta_t,
            r.cert.v,
            r.cert.v_dot_numeric,
            flag(r.cert.on_symmetry_surface),
            r.cross_track,
        )?;
    }
    w.flush()?;
    Ok(())
}

/// One JSON object per line. Non-finite floats become `null`.
pub fn write_jsonl<W: Write>(mut w: W, trace: &[TraceRecord]) -> Result<()> {
    for r in trace {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

/// `t, rho, ttc, u_ca, u_tr, engaged`; `ttc` is empty when loom is zero.
pub fn write_plot_csv<W: Write>(mut w: W, trace: &[TraceRecord]) -> Result<()> {
    writeln!(w, "t,rho,ttc,u_ca,u_tr,engaged")?;
    for r in trace {
        let ttc = if r.truth.rho_dot < 0.0 {
            format!("{}", -r.truth.rho / r.truth.rho_dot)
        } else {
            String::new()
        };
        writeln!(
            w,
            "{},{},{},{},{},{}",
            r.t,
            r.truth.rho,
            ttc,
            r.cmd.ca_component,
            r.cmd.tr_component,
            flag(r.cmd.engaged)
        )?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{run_episode, tests::head_on};

    #[test]
    fn csv_has_schema_header_and_one_row_per_record() {
        let mut cfg = head_on();
        cfg.duration = 0.5;
        let (trace, _) = run_episode(cfg).unwrap();
        let mut buf = Vec::new();
        write_csv(&mut buf, &trace).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], TRACE_SCHEMA);
        assert_eq!(lines[1].split(',').count(), COLUMNS.len());
        assert_eq!(lines.len(), trace.len() + 2);
        assert!(lines[2..].iter().all(|l| l.split(',').count() == COLUMNS.len()));
    }

    #[test]
    fn jsonl_round_trips_positions() {
        let mut cfg = head_on();
        cfg.duration = 0.1;
        let (trace, _) = run_episode(cfg).unwrap();
        let mut buf = Vec::new();
        write_jsonl(&mut buf, &trace).unwrap();
        let text = String::from_utf8(buf).unwrap();
        for (line, r) in text.lines().zip(&trace) {
            let v: serde_json::Value = serde_json::from_str(line).unwrap();
            assert_eq!(v["t"].as_f64().unwrap(), r.t);
            assert_eq!(v["obstacle"]["x"].as_f64().unwrap(), r.obstacle.x);
        }
    }
}
