//! The five subcommands. Each writes its artifacts under the output directory
//! together with `manifest.json`, and every artifact carries the config hash
//! and seed.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use gbridge_core::compensator::compensate_ensemble;
use gbridge_core::filter::{snap_to_stopped, Filter};
use gbridge_core::harness::{format_table, run_section, SuiteConfig, SUITE_SECTIONS};
use gbridge_core::pathgen::{simulate_ensemble, write_paths_csv, BridgeSample, EnsembleSpec};
use gbridge_core::MixingLaw;
use log::{info, warn};
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::config::{Command, LoadedConfig, Validated};

/// Result of one command.
#[derive(Debug)]
pub struct Outcome {
    /// Written files with their SHA-256 digests, in write order.
    pub files: Vec<(PathBuf, String)>,
    /// Text for standard output.
    pub report: String,
    /// Process exit status.
    pub exit_code: i32,
}

struct Artifacts<'a> {
    dir: &'a Path,
    hash: String,
    seed: u64,
    files: Vec<(PathBuf, String)>,
}

impl<'a> Artifacts<'a> {
    fn new(dir: &'a Path, loaded: &LoadedConfig) -> Result<Self> {
        fs::create_dir_all(dir).with_context(|| format!("creating output directory {}", dir.display()))?;
        Ok(Self {
            dir,
            hash: loaded.config.sha256(),
            seed: loaded.config.seed,
            files: Vec::new(),
        })
    }

    fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let path = self.dir.join(name);
        fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
        self.files.push((path, hex::encode(Sha256::digest(bytes))));
        Ok(())
    }

    /// CSV with a leading `# config_sha256=… seed=…` comment line.
    fn write_csv(&mut self, name: &str, body: &[u8]) -> Result<()> {
        let mut bytes = format!("# config_sha256={} seed={}\n", self.hash, self.seed).into_bytes();
        bytes.extend_from_slice(body);
        self.write(name, &bytes)
    }

    /// JSON object with `command`, `config_sha256` and `seed` added.
    fn write_json<T: Serialize>(&mut self, name: &str, command: &str, body: &T) -> Result<()> {
        let mut doc = serde_json::Map::new();
        doc.insert("command".into(), json!(command));
        doc.insert("config_sha256".into(), json!(self.hash));
        doc.insert("seed".into(), json!(self.seed));
        match serde_json::to_value(body)? {
            Value::Object(fields) => doc.extend(fields),
            other => {
                doc.insert("result".into(), other);
            }
        }
        let mut text = serde_json::to_string_pretty(&Value::Object(doc))?;
        text.push('\n');
        self.write(name, text.as_bytes())
    }

    fn finish(mut self, command: &str, loaded: &LoadedConfig, extra: Value) -> Result<Vec<(PathBuf, String)>> {
        let files: Vec<Value> = self
            .files
            .iter()
            .map(|(p, h)| json!({"name": p.file_name().map(|n| n.to_string_lossy()), "sha256": h}))
            .collect();
        let body = json!({
            "version": env!("CARGO_PKG_VERSION"),
            "config": loaded.config,
            "files": files,
            "checks": extra,
        });
        self.write_json("manifest.json", command, &body)?;
        Ok(self.files)
    }
}

fn law(v: &Validated) -> &MixingLaw {
    v.law.as_ref().expect("validated commands that use a law have one")
}

fn simulate_samples(loaded: &LoadedConfig, v: &Validated) -> Result<Vec<BridgeSample>> {
    let cfg = &loaded.config;
    let spec = EnsembleSpec {
        grid: &v.grid,
        law: law(v),
        params: cfg.process,
        sampler: cfg.run.sampler,
    };
    info!("simulating {} paths on {} grid times", cfg.run.paths, v.grid.len());
    Ok(simulate_ensemble(&spec, cfg.seed, cfg.run.paths)?)
}

/// Writes `paths.csv` and a manifest with stopped-fraction checks.
pub fn cmd_simulate(loaded: &LoadedConfig, out: &Path) -> Result<Outcome> {
    let v = loaded.validate(Command::Simulate)?;
    let samples = simulate_samples(loaded, &v)?;
    let cfg = &loaded.config;
    let mut art = Artifacts::new(out, loaded)?;
    let mut body = Vec::new();
    write_paths_csv(&mut body, &samples)?;
    art.write_csv("paths.csv", &body)?;

    let checks_at: Vec<f64> = if cfg.run.stopping_checks.is_empty() {
        vec![*v.grid.last().expect("nonempty grid")]
    } else {
        cfg.run.stopping_checks.clone()
    };
    let n = samples.len() as f64;
    let a = cfg.process.endpoint_a;
    let mut report = String::new();
    let checks: Vec<Value> = checks_at
        .iter()
        .map(|&t| {
            let stopped = samples.iter().filter(|s| s.path.value_at(t) == Some(a)).count() as f64;
            let p_hat = stopped / n;
            let expected = law(&v).cdf(t);
            let se = (expected * (1.0 - expected) / n).sqrt();
            let z = if se > 0.0 { (p_hat - expected) / se } else if p_hat == expected { 0.0 } else { f64::INFINITY };
            report.push_str(&format!(
                "t = {t}: stopped fraction {p_hat:.6}, F(t) = {expected:.6}, z = {z:.3}\n"
            ));
            json!({"t": t, "stopped_fraction": p_hat, "expected": expected, "standard_error": se, "z": z, "within_3_se": z.abs() <= 3.0})
        })
        .collect();
    let files = art.finish("simulate", loaded, json!({ "stopped_fraction": checks }))?;
    Ok(Outcome {
        files,
        report,
        exit_code: 0,
    })
}

#[derive(Serialize)]
struct SurvivalPoint {
    u: f64,
    probability: f64,
}

/// Writes `posterior.json`: the law of τ given one observation.
pub fn cmd_filter(loaded: &LoadedConfig, out: &Path) -> Result<Outcome> {
    let v = loaded.validate(Command::Filter)?;
    let cfg = &loaded.config;
    let run = &cfg.run;
    let obs = run.observation.expect("validated");
    let (x, _) = snap_to_stopped(obs.x, run.stop_delta);
    let stopped = x == 1.0;
    let filter = Filter::with_kappa(law(&v), cfg.process.kappa)?;
    let body = match (stopped, obs.tau) {
        (true, Some(tau)) => {
            // The realized stopping time is part of the observed path.
            let survival: Vec<SurvivalPoint> = run
                .horizons
                .iter()
                .map(|&u| SurvivalPoint {
                    u,
                    probability: f64::from(u8::from(u < tau)),
                })
                .collect();
            json!({
                "posterior": {
                    "observation": {"t": obs.t, "x": 1.0},
                    "stopped_weight": 1.0,
                    "atoms": [[tau, 1.0]],
                    "grid": [],
                    "weights": [],
                },
                "summary": {
                    "stopped": true,
                    "mean": tau,
                    "quantiles": run.quantiles.iter().map(|&p| json!({"p": p, "value": tau})).collect::<Vec<_>>(),
                    "survival": survival,
                },
            })
        }
        (false, Some(_)) => bail!("run.observation.tau given but x = {} is not stopped", obs.x),
        _ => {
            let post = filter.posterior_tau(x, obs.t)?;
            let survival: Vec<SurvivalPoint> = run
                .horizons
                .iter()
                .map(|&u| SurvivalPoint {
                    u,
                    probability: post.survival(u),
                })
                .collect();
            json!({
                "posterior": post,
                "summary": {
                    "stopped": post.is_stopped(),
                    "mean": post.mean(),
                    "quantiles": run.quantiles.iter().map(|&p| json!({"p": p, "value": post.quantile(p)})).collect::<Vec<_>>(),
                    "survival": survival,
                },
            })
        }
    };
    let mut art = Artifacts::new(out, loaded)?;
    art.write_json("posterior.json", "filter", &body)?;
    let report = format!(
        "posterior mean of tau: {}\n",
        body["summary"]["mean"].as_f64().unwrap_or(f64::NAN)
    );
    let files = art.finish("filter", loaded, Value::Null)?;
    Ok(Outcome {
        files,
        report,
        exit_code: 0,
    })
}

/// Writes `predictive.json`: the law of `ζ_u` given `ζ_t = x`.
pub fn cmd_predict(loaded: &LoadedConfig, out: &Path) -> Result<Outcome> {
    let v = loaded.validate(Command::Predict)?;
    let cfg = &loaded.config;
    let obs = cfg.run.observation.expect("validated");
    let u = cfg.run.horizon.expect("validated");
    let filter = Filter::with_kappa(law(&v), cfg.process.kappa)?;
    let pred = filter.predictive_law(obs.x, obs.t, u)?;
    let (ys, ds) = pred.density_grid(cfg.run.density_points);
    let body = json!({
        "predictive": pred,
        "summary": {"atom_at_one": pred.atom_at_one, "continuous_mass": pred.continuous_mass()},
        "density": {"y": ys, "density": ds},
    });
    let mut art = Artifacts::new(out, loaded)?;
    art.write_json("predictive.json", "predict", &body)?;
    let report = format!(
        "P(zeta_u = 1 | zeta_t = x) = {}\ncontinuous mass = {}\n",
        pred.atom_at_one,
        pred.continuous_mass()
    );
    let files = art.finish("predict", loaded, Value::Null)?;
    Ok(Outcome {
        files,
        report,
        exit_code: 0,
    })
}

/// Max `|mean|/SE` of residual increments accepted as a martingale.
pub const MARTINGALE_Z_LIMIT: f64 = 4.0;

/// Writes `drift.csv` and `drift_summary.json` for the configured ensemble.
pub fn cmd_compensate(loaded: &LoadedConfig, out: &Path) -> Result<Outcome> {
    let v = loaded.validate(Command::Compensate)?;
    let samples = simulate_samples(loaded, &v)?;
    let cfg = &loaded.config;
    let filter = Filter::with_kappa(law(&v), cfg.process.kappa)?;
    let report = compensate_ensemble(&samples, &filter, cfg.run.mode, cfg.process.endpoint_a, &v.grid)?;
    let mut art = Artifacts::new(out, loaded)?;
    let mut body = Vec::new();
    gbridge_core::compensator::write_drift_csv(&mut body, &report.paths)?;
    art.write_csv("drift.csv", &body)?;
    let passed = report.summary.max_abs_z <= MARTINGALE_Z_LIMIT;
    art.write_json(
        "drift_summary.json",
        "compensate",
        &json!({
            "mode": report.mode,
            "summary": report.summary,
            "martingale_check": {"max_abs_z": report.summary.max_abs_z, "limit": MARTINGALE_Z_LIMIT, "passed": passed},
        }),
    )?;
    let text = format!(
        "mode {:?}: max |mean|/SE of residual increments = {:.3} ({})\n",
        report.mode,
        report.summary.max_abs_z,
        if passed { "within limit" } else { "above limit" }
    );
    let files = art.finish("compensate", loaded, json!({"martingale_passed": passed}))?;
    Ok(Outcome {
        files,
        report: text,
        exit_code: 0,
    })
}

/// Runs the gate suite, writes `gate_report.json` and prints the table.
/// Exits 1 when any gate other than a negative control fails.
pub fn cmd_validate(loaded: &LoadedConfig, out: &Path) -> Result<Outcome> {
    loaded.validate(Command::Validate)?;
    let cfg = &loaded.config;
    let suite = SuiteConfig {
        seed: cfg.seed,
        scale: cfg.run.scale,
        negative_controls: cfg.run.negative_controls,
        params: cfg.process,
    };
    let sections: Vec<String> = match &cfg.run.sections {
        Some(s) => s.clone(),
        None => SUITE_SECTIONS.iter().map(|s| s.to_string()).collect(),
    };
    let mut results = Vec::new();
    for s in &sections {
        info!("running gate section {s}");
        results.extend(run_section(&suite, s)?);
    }
    for r in results.iter().filter(|r| r.negative_control && r.passed) {
        warn!("negative control '{}' passed; the gate lacks power", r.name);
    }
    let failed: Vec<&str> = results
        .iter()
        .filter(|r| !r.negative_control && !r.passed)
        .map(|r| r.name.as_str())
        .collect();
    let mut art = Artifacts::new(out, loaded)?;
    art.write_json(
        "gate_report.json",
        "validate",
        &json!({"all_passed": failed.is_empty(), "failed": failed, "results": results}),
    )?;
    let files = art.finish("validate", loaded, json!({"failed": failed}))?;
    Ok(Outcome {
        files,
        report: format_table(&results),
        exit_code: i32::from(!failed.is_empty()),
    })
}

pub fn run(command: Command, loaded: &LoadedConfig, out: &Path) -> Result<Outcome> {
    match command {
        Command::Simulate => cmd_simulate(loaded, out),
        Command::Filter => cmd_filter(loaded, out),
        Command::Predict => cmd_predict(loaded, out),
        Command::Compensate => cmd_compensate(loaded, out),
        Command::Validate => cmd_validate(loaded, out),
    }
}
