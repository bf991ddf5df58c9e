//! Drift of the random-length bridge and the martingale residual along paths.
//!
//! Two drifts are available. Given τ, the drift is `(1−ζ_s)/(τ−s)` up to τ.
//! In the bridge's own filtration τ is integrated out against the posterior:
//! `(1−ζ_s) ∫_{(s,∞)} φ_{ζ_s^r}(ζ_s) / (r−s) P_τ(dr)`.
//! The residual `ζ_t − ∫_0^t drift ds` is a martingale in the matching
//! filtration and is frozen from the pin time on.

use std::io::{self, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::filter::Filter;
use crate::mixing_law::{neumaier_sum, MixingLaw};
use crate::pathgen::{BridgeSample, Path};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Drift given the realized τ.
    H,
    /// Drift given the bridge values only.
    F,
}

impl std::str::FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "h" => Ok(Mode::H),
            "f" => Ok(Mode::F),
            other => Err(format!("unknown mode '{other}', expected 'h' or 'f'")),
        }
    }
}

/// `(1−x)/(τ−s)` for `s < τ`, else 0.
pub fn h_drift(x: f64, tau: f64, s: f64) -> f64 {
    if s >= tau || x >= 1.0 {
        0.0
    } else {
        (1.0 - x) / (tau - s)
    }
}

/// `(1−x) ∫_{(s,∞)} φ_{ζ_s^r}(x)/(r−s) P_τ(dr)` for `0 <= x < 1`, 0 at `x = 1`.
pub fn f_drift(filter: &Filter<'_>, x: f64, s: f64) -> Result<f64> {
    if x >= 1.0 {
        return Ok(0.0);
    }
    if !(x >= 0.0) {
        return Err(invalid("f_drift", format!("x = {x} must lie in [0, 1]")));
    }
    let weights = filter.tail_weights(x, s)?;
    Ok(neumaier_sum(weights.iter().map(|&(r, pw)| ((1.0 - x) / (r - s)) * pw)))
}

/// `E ∫_0^t Z_s ds = ∫ (t∧r)/r P_τ(dr)`, at most 1.
pub fn integrated_drift_bound(law: &MixingLaw, t: f64) -> f64 {
    let t = t.max(0.0);
    let head = law.cdf(t);
    let tail = law.integrate_tail(t, |r| t / r).expect("locations are positive");
    (head + tail).min(1.0)
}

/// A path with its drift, integrated drift and residual, all in path units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompensatedPath {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub drift: Vec<f64>,
    pub drift_integral: Vec<f64>,
    pub residual: Vec<f64>,
}

impl CompensatedPath {
    pub fn residual_at(&self, t: f64) -> Option<f64> {
        let i = self.times.partition_point(|&s| s < t);
        (i < self.times.len() && self.times[i] == t).then(|| self.residual[i])
    }
}

/// Compensates one bridge path pinned at `a`.
///
/// Integration is trapezoidal on the path's grid, except on a step ending at
/// the pin, where only the left value is used.
pub fn compensate_path(path: &Path, filter: &Filter<'_>, mode: Mode, a: f64) -> Result<CompensatedPath> {
    let pin = path.pin;
    if mode == Mode::H && pin.is_none() {
        return Err(invalid("compensator", "H-mode needs the path's pin time"));
    }
    let normalized: Vec<f64> = path
        .values
        .iter()
        .map(|&v| if v == a { 1.0 } else { (v / a).min(1.0 - f64::EPSILON / 2.0) })
        .collect();
    let drift: Vec<f64> = path
        .times
        .iter()
        .zip(&normalized)
        .map(|(&s, &x)| match mode {
            Mode::H => Ok(h_drift(x, pin.expect("checked").time, s)),
            Mode::F => f_drift(filter, x, s),
        })
        .collect::<Result<_>>()?;
    let n = path.times.len();
    let mut drift_integral = Vec::with_capacity(n);
    let mut residual = Vec::with_capacity(n);
    let mut acc = 0.0;
    drift_integral.push(0.0);
    residual.push(a * (normalized[0] - 0.0));
    for i in 1..n {
        let h = path.times[i] - path.times[i - 1];
        if normalized[i - 1] < 1.0 {
            acc += if normalized[i] == 1.0 {
                h * drift[i - 1]
            } else {
                0.5 * h * (drift[i - 1] + drift[i])
            };
        }
        drift_integral.push(a * acc);
        residual.push(a * (normalized[i] - acc));
    }
    Ok(CompensatedPath {
        times: path.times.clone(),
        values: path.values.clone(),
        drift: drift.iter().map(|d| a * d).collect(),
        drift_integral,
        residual,
    })
}

/// Ensemble statistics of residual increments over one grid step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepStat {
    pub t0: f64,
    pub t1: f64,
    pub mean: f64,
    pub standard_error: f64,
    /// `mean / standard_error`, 0 when both vanish.
    pub z: f64,
    /// Sample correlation of the increment with the path value at `t0`.
    pub correlation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftSummary {
    pub paths: usize,
    pub steps: Vec<StepStat>,
    pub max_abs_z: f64,
    pub max_abs_correlation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftReport {
    pub mode: Mode,
    pub paths: Vec<CompensatedPath>,
    pub summary: DriftSummary,
}

fn mean(xs: &[f64]) -> f64 {
    neumaier_sum(xs.iter().copied()) / xs.len() as f64
}

/// Statistics of residual increments on consecutive `grid` steps.
pub fn summarize(paths: &[CompensatedPath], grid: &[f64]) -> DriftSummary {
    let n = paths.len();
    let mut steps = Vec::with_capacity(grid.len().saturating_sub(1));
    for w in grid.windows(2) {
        let (t0, t1) = (w[0], w[1]);
        let mut inc = Vec::with_capacity(n);
        let mut start = Vec::with_capacity(n);
        for p in paths {
            let i0 = p.times.partition_point(|&s| s < t0);
            let i1 = p.times.partition_point(|&s| s < t1);
            if i0 < p.times.len() && i1 < p.times.len() && p.times[i0] == t0 && p.times[i1] == t1 {
                inc.push(p.residual[i1] - p.residual[i0]);
                start.push(p.values[i0]);
            }
        }
        let m = mean(&inc);
        let k = inc.len() as f64;
        let var = neumaier_sum(inc.iter().map(|d| (d - m) * (d - m))) / (k - 1.0);
        let se = (var / k).sqrt();
        let ms = mean(&start);
        let vs = neumaier_sum(start.iter().map(|v| (v - ms) * (v - ms))) / (k - 1.0);
        let cov = neumaier_sum(inc.iter().zip(&start).map(|(d, v)| (d - m) * (v - ms))) / (k - 1.0);
        let denom = (var * vs).sqrt();
        steps.push(StepStat {
            t0,
            t1,
            mean: m,
            standard_error: se,
            z: if se > 0.0 { m / se } else if m == 0.0 { 0.0 } else { f64::INFINITY },
            correlation: if denom > 0.0 { cov / denom } else { 0.0 },
        });
    }
    let max_abs_z = steps.iter().map(|s| s.z.abs()).fold(0.0, f64::max);
    let max_abs_correlation = steps.iter().map(|s| s.correlation.abs()).fold(0.0, f64::max);
    DriftSummary {
        paths: n,
        steps,
        max_abs_z,
        max_abs_correlation,
    }
}

/// Compensates every path in parallel and summarizes on `grid`.
pub fn compensate_ensemble(
    samples: &[BridgeSample],
    filter: &Filter<'_>,
    mode: Mode,
    a: f64,
    grid: &[f64],
) -> Result<DriftReport> {
    let paths = samples
        .par_iter()
        .map(|s| compensate_path(&s.path, filter, mode, a))
        .collect::<Result<Vec<_>>>()?;
    let summary = summarize(&paths, grid);
    Ok(DriftReport { mode, paths, summary })
}

/// Writes `path_id,time,value,drift_integral,residual` rows.
pub fn write_drift_csv<W: Write>(out: &mut W, paths: &[CompensatedPath]) -> io::Result<()> {
    writeln!(out, "path_id,time,value,drift_integral,residual")?;
    for (id, p) in paths.iter().enumerate() {
        for i in 0..p.times.len() {
            writeln!(
                out,
                "{id},{},{},{},{}",
                p.times[i], p.values[i], p.drift_integral[i], p.residual[i]
            )?;
        }
    }
    Ok(())
}
