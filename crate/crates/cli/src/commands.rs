// SPDX-License-Identifier: Apache-2.0 OR MIT

use std::fmt;
use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use loomcas::params::{check_feasibility, ParamSet};
use loomcas::sim::{
    falsify as run_campaign, run_episode, write_csv, write_jsonl, write_plot_csv, Campaign, ScenarioConfig,
};
use loomcas_bridge::BridgeConfig;
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::Value;

use crate::overrides;
use crate::ConfigArgs;

#[derive(Debug)]
pub enum CliError {
    /// Bad input: unreadable or malformed config, bad override.
    Usage(String),
    /// Valid input the domain rejects, or an I/O failure while working.
    Domain(String),
}

impl CliError {
    pub fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Domain(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Domain(m) => f.write_str(m),
        }
    }
}

impl From<loomcas::Error> for CliError {
    fn from(e: loomcas::Error) -> Self {
        use loomcas::Error as E;
        match e {
            E::StartsInAvoidanceRegion(_) | E::Coincident | E::Domain(_) | E::UndefinedTtc | E::InsufficientData(_) => {
                CliError::Domain(e.to_string())
            }
            E::Io(_) => CliError::Domain(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> CliError + '_ {
    move |e| CliError::Domain(format!("{}: {e}", path.display()))
}

/// `Ok(true)` maps to exit 0, `Ok(false)` to exit 1.
pub type Outcome = Result<bool, CliError>;

fn load_doc(args: &ConfigArgs) -> Result<Value, CliError> {
    let path = &args.config;
    let text = fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    let mut doc: Value =
        serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    overrides::apply(&mut doc, &args.overrides).map_err(CliError::Usage)?;
    Ok(doc)
}

fn typed<T: DeserializeOwned>(doc: Value, what: &str) -> Result<T, CliError> {
    serde_json::from_value(doc).map_err(|e| CliError::Usage(format!("invalid {what}: {e}")))
}

fn load_scenario(args: &ConfigArgs) -> Result<ScenarioConfig, CliError> {
    let cfg: ScenarioConfig = typed(load_doc(args)?, "scenario")?;
    cfg.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(cfg)
}

/// Refuses infeasible parameters unless forced.
fn gate_feasibility(cfg: &ScenarioConfig, force: bool) -> Result<(), CliError> {
    let report = check_feasibility(&cfg.envelope, &cfg.design);
    if report.all_satisfied() {
        return Ok(());
    }
    if force {
        log::warn!("parameters are infeasible; running anyway (--force)\n{report}");
        return Ok(());
    }
    Err(CliError::Domain(format!("parameters are infeasible (use --force to run anyway)\n{report}")))
}

/// Creates `<parent>/<stem>-NNN`, never reusing an existing directory.
fn fresh_dir(parent: &Path, stem: &str) -> Result<PathBuf, CliError> {
    fs::create_dir_all(parent).map_err(io_err(parent))?;
    let stem: String = stem
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect();
    for i in 1..100_000 {
        let dir = parent.join(format!("{stem}-{i:03}"));
        match fs::create_dir(&dir) {
            Ok(()) => return Ok(dir),
            Err(e) if e.kind() == io::ErrorKind::AlreadyExists => continue,
            Err(e) => return Err(io_err(&dir)(e)),
        }
    }
    Err(CliError::Domain(format!("no free run directory under {}", parent.display())))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let f = File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(f);
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| CliError::Domain(e.to_string()))?;
    writeln!(w).and_then(|_| w.flush()).map_err(io_err(path))
}

fn write_with(path: &Path, f: impl FnOnce(BufWriter<File>) -> loomcas::Result<()>) -> Result<(), CliError> {
    let file = File::create(path).map_err(io_err(path))?;
    f(BufWriter::new(file)).map_err(|e| CliError::Domain(format!("{}: {e}", path.display())))
}

pub fn check(args: &ConfigArgs, json: bool) -> Outcome {
    let params: ParamSet = typed(load_doc(args)?, "parameter set")?;
    params.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    let report = params.feasibility();
    if json {
        println!("{}", serde_json::to_string_pretty(&report).expect("plain data"));
    } else {
        println!("{report}");
    }
    Ok(report.all_satisfied())
}

pub fn run(args: &ConfigArgs, out: &Path, force: bool) -> Outcome {
    let cfg = load_scenario(args)?;
    gate_feasibility(&cfg, force)?;
    let (trace, result) = run_episode(cfg.clone())?;

    let dir = fresh_dir(out, &cfg.name)?;
    write_json(&dir.join("config.json"), &cfg)?;
    write_with(&dir.join("trace.csv"), |w| write_csv(w, &trace))?;
    write_with(&dir.join("trace.jsonl"), |w| write_jsonl(w, &trace))?;
    write_with(&dir.join("plot.csv"), |w| write_plot_csv(w, &trace))?;
    write_json(&dir.join("result.json"), &result)?;

    println!("run directory: {}", dir.display());
    println!("samples: {}", result.samples);
    println!("min range: {:.4} m, min ttc: {:.4} s, min loom: {:.4} 1/s", result.min_rho, result.min_ttc, result.min_loom);
    println!("engaged intervals: {:?}", result.engaged_intervals);
    println!("final cross-track error: {:.4} m", result.final_cross_track);
    println!(
        "certificate: {} ({} conflict samples checked, {} violations)",
        if result.certificate.pass { "PASS" } else { "FAIL" },
        result.certificate.checked,
        result.certificate.violations
    );
    println!("anti-target reached: {}", if result.antitarget_hit { "YES" } else { "no" });
    if result.collision_fault {
        println!("episode ended early: robot and obstacle coincided");
    }
    Ok(!result.antitarget_hit)
}

pub fn falsify(
    args: &ConfigArgs,
    n: Option<usize>,
    seed: Option<u64>,
    campaign: Option<&Path>,
    out: &Path,
    force: bool,
) -> Outcome {
    let cfg = load_scenario(args)?;
    let mut c = match campaign {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
            serde_json::from_str::<Campaign>(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?
        }
        None => Campaign::default(),
    };
    if let Some(n) = n {
        c.n_episodes = n;
    }
    if let Some(s) = seed {
        c.seed = s;
    }
    c.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    gate_feasibility(&cfg, force)?;

    log::info!("running {} episodes, seed {}", c.n_episodes, c.seed);
    let report = run_campaign(&cfg, &c)?;
    let dir = fresh_dir(out, &format!("falsify-{}", cfg.name))?;
    write_json(&dir.join("config.json"), &cfg)?;
    write_json(&dir.join("campaign.json"), &c)?;
    write_json(&dir.join("report.json"), &report)?;

    println!("run directory: {}", dir.display());
    println!("episodes: {} (seed {}, {} redraws)", report.n_episodes, report.seed, report.redraws);
    for t in &report.by_policy {
        println!(
            "  {:<8} {:>5} episodes, {:>5} anti-target, {:>5} certificate failures",
            t.policy, t.episodes, t.antitarget_hits, t.certificate_failures
        );
    }
    println!("counterexamples: {}", report.antitarget_episodes);
    println!(
        "worst min range {:.4} m, worst min ttc {:.4} s, certificate pass rate {:.3}",
        report.worst_min_rho, report.worst_min_ttc, report.certificate_pass_rate
    );
    Ok(report.is_clean())
}

pub fn serve(args: &ConfigArgs, host: &str, port: u16, trace_dir: Option<PathBuf>) -> Outcome {
    let cfg = load_scenario(args)?;
    gate_feasibility(&cfg, false)?;
    let mut bridge = BridgeConfig::new(cfg);
    bridge.trace_dir = trace_dir;
    let rt = tokio::runtime::Runtime::new().map_err(|e| CliError::Domain(e.to_string()))?;
    rt.block_on(async {
        let listener = tokio::net::TcpListener::bind((host, port))
            .await
            .map_err(|e| CliError::Domain(format!("cannot listen on {host}:{port}: {e}")))?;
        println!("bridge listening on ws://{}/ws", listener.local_addr().map_err(|e| CliError::Domain(e.to_string()))?);
        loomcas_bridge::serve(listener, bridge).await.map_err(|e| CliError::Domain(e.to_string()))
    })?;
    Ok(true)
}
