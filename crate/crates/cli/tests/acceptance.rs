//! Acceptance criteria at full sample sizes. Prints one line per criterion
//! and exits nonzero if any fails.

use std::fs;
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use gbridge_core::harness::{run_section, GateResult, SuiteConfig};
use sha2::{Digest, Sha256};

type Criterion<'a> = Box<dyn Fn() -> Verdict + 'a>;

struct Verdict {
    passed: bool,
    summary: String,
    details: Vec<String>,
}

/// A section passes when every gate passes and every control fails.
fn judge(results: &[GateResult], elapsed: Duration, budget: Option<Duration>) -> Verdict {
    let mut notes = Vec::new();
    let mut passed = true;
    for r in results {
        if !r.as_expected() {
            passed = false;
            notes.push(format!("unexpected: {} = {:.6} vs {:.6}", r.name, r.statistic, r.threshold));
        }
    }
    if let Some(limit) = budget {
        if elapsed > limit {
            passed = false;
            notes.push(format!("runtime {:.1} s over {:.0} s", elapsed.as_secs_f64(), limit.as_secs_f64()));
        }
    }
    let gates = results.iter().filter(|r| !r.negative_control).count();
    let controls = results.len() - gates;
    let summary = format!("{gates} gates, {controls} controls, {:.1} s", elapsed.as_secs_f64());
    let mut details: Vec<String> = results
        .iter()
        .map(|r| format!("{} = {:.6} (threshold {:.6})", r.name, r.statistic, r.threshold))
        .collect();
    details.extend(notes);
    Verdict {
        passed,
        summary,
        details,
    }
}

fn section(cfg: &SuiteConfig, name: &str, budget: Option<Duration>) -> Verdict {
    let start = Instant::now();
    match run_section(cfg, name) {
        Ok(results) => judge(&results, start.elapsed(), budget),
        Err(e) => Verdict {
            passed: false,
            summary: format!("error: {e}"),
            details: Vec::new(),
        },
    }
}

const CONFIG: &str = r#"{
  "seed": 5,
  "law": {"family": "exponential", "rate": 1.0, "truncation": 20.0, "nodes": 128},
  "grid": {"end": 2.0, "steps": 16},
  "run": {
    "paths": 2000,
    "sampler": {"kind": "markov"},
    "observation": {"t": 1.0, "x": 0.4},
    "horizon": 1.5,
    "horizons": [1.5, 3.0],
    "scale": 0.02,
    "sections": ["laplace", "jump_time"],
    "negative_controls": true
  }
}
"#;

fn digest_dir(dir: &Path) -> Vec<(String, String)> {
    let mut out: Vec<(String, String)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            let name = p.file_name().unwrap().to_string_lossy().into_owned();
            (name, hex::encode(Sha256::digest(fs::read(&p).unwrap())))
        })
        .collect();
    out.sort();
    out
}

/// Every command twice with one thread and once with four; all output
/// digests must agree, and must match the digests listed in the manifest.
fn determinism() -> Verdict {
    let start = Instant::now();
    let tmp = tempfile::TempDir::new().unwrap();
    let cfg = tmp.path().join("config.json");
    fs::write(&cfg, CONFIG).unwrap();
    let mut problems = Vec::new();
    let mut files = 0;
    for cmd in ["simulate", "filter", "predict", "compensate", "validate"] {
        let mut digests = Vec::new();
        let mut codes = Vec::new();
        for (run, threads) in [(0, "1"), (1, "1"), (2, "4")] {
            let out = tmp.path().join(format!("{cmd}-{run}"));
            let status = Command::new(env!("CARGO_BIN_EXE_gbridge"))
                .args([cmd, "--config", cfg.to_str().unwrap(), "--threads", threads, "--out", out.to_str().unwrap()])
                .output()
                .unwrap();
            // A failed gate at this reduced scale exits 1; only reproducibility is judged here.
            let code = status.status.code();
            let acceptable = code == Some(0) || (cmd == "validate" && code == Some(1));
            if !acceptable {
                problems.push(format!("{cmd} exited with {code:?}"));
                continue;
            }
            codes.push(code);
            let d = digest_dir(&out);
            let manifest: serde_json::Value = serde_json::from_slice(&fs::read(out.join("manifest.json")).unwrap()).unwrap();
            for f in manifest["files"].as_array().unwrap() {
                let name = f["name"].as_str().unwrap();
                let listed = f["sha256"].as_str().unwrap();
                if !d.iter().any(|(n, h)| n == name && h == listed) {
                    problems.push(format!("{cmd}: manifest digest of {name} does not match the file"));
                }
            }
            digests.push(d);
        }
        files += digests.first().map_or(0, Vec::len);
        if digests.windows(2).any(|w| w[0] != w[1]) || codes.windows(2).any(|w| w[0] != w[1]) {
            problems.push(format!("{cmd}: outputs differ between runs"));
        }
    }
    Verdict {
        passed: problems.is_empty(),
        summary: format!(
            "5 commands x 3 runs, {files} files per run set, {:.1} s",
            start.elapsed().as_secs_f64()
        ),
        details: problems,
    }
}

fn main() -> ExitCode {
    let cfg = SuiteConfig::default();
    let criteria: Vec<(&str, Criterion)> = vec![
        ("laplace transform", Box::new(|| section(&cfg, "laplace", Some(Duration::from_secs(10))))),
        ("bridge marginal", Box::new(|| section(&cfg, "bridge_marginal", None))),
        ("transition law", Box::new(|| section(&cfg, "transition", None))),
        ("stopping equivalence", Box::new(|| section(&cfg, "stopping", None))),
        ("posterior oracle", Box::new(|| section(&cfg, "posterior", Some(Duration::from_secs(180))))),
        ("predictive law", Box::new(|| section(&cfg, "predictive", None))),
        ("markov property", Box::new(|| section(&cfg, "markov", None))),
        ("compensator", Box::new(|| section(&cfg, "compensator", None))),
        ("jump-time law", Box::new(|| section(&cfg, "jump_time", None))),
        ("determinism", Box::new(determinism)),
    ];
    let start = Instant::now();
    let mut failures = 0;
    println!("\nacceptance criteria (seed {})", cfg.seed);
    for (i, (name, check)) in criteria.iter().enumerate() {
        let v = check();
        if !v.passed {
            failures += 1;
        }
        println!(
            "criterion {:>2} {:<22} {}  ({})",
            i + 1,
            name,
            if v.passed { "PASS" } else { "FAIL" },
            v.summary
        );
        for d in &v.details {
            println!("      {d}");
        }
    }
    let total = start.elapsed();
    let within_budget = total < Duration::from_secs(600);
    println!(
        "{} of {} criteria passed; total {:.1} s ({} the 10 minute budget)",
        criteria.len() - failures,
        criteria.len(),
        total.as_secs_f64(),
        if within_budget { "within" } else { "over" }
    );
    if failures == 0 && within_budget {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
