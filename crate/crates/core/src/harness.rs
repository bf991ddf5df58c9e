//! Monte Carlo oracles and pass/fail gates.
//!
//! Every gate is a pure function of its configuration and seed. Simulation is
//! parallel over path indices with one counter-addressed stream per index, and
//! all reductions run over index-ordered vectors, so results do not depend on
//! the number of worker threads.

use std::fmt::Write as _;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::compensator::{compensate_path, integrated_drift_bound, summarize, write_drift_csv, Mode};
use crate::error::{invalid, Result};
use crate::filter::Filter;
use crate::mixing_law::{neumaier_sum, MixingLaw};
use crate::pathgen::{
    jump_time_cdf, markov_step, path_streams, sample_bridge, sample_bridge_jumps, sample_gamma_path,
    sample_random_length_bridge, simulate_ensemble, uniform_grid, BridgeSample, EnsembleSpec, ProcessParams, Sampler,
};
use crate::quadrature::gauss_legendre_rule;
use crate::rng::{stream, Purpose, StreamFactory};
use crate::specfun::{beta_log_pdf_unchecked, incbeta_unchecked};

/// Level of every hypothesis test.
pub const TEST_LEVEL: f64 = 0.01;

/// Smallest ensemble accepted by the Laplace gate and the posterior oracle.
pub const MIN_ORACLE_PATHS: usize = 100_000;

/// Smallest stratum kept by the binned oracles.
pub const OCCUPANCY_FLOOR: usize = 100;

pub const DEFAULT_BINS: usize = 40;

/// How a gate's statistic is compared with its threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Comparison {
    #[serde(rename = "<")]
    Below,
    #[serde(rename = "<=")]
    AtMost,
    #[serde(rename = ">=")]
    AtLeast,
}

impl Comparison {
    fn holds(self, statistic: f64, threshold: f64) -> bool {
        match self {
            Comparison::Below => statistic < threshold,
            Comparison::AtMost => statistic <= threshold,
            Comparison::AtLeast => statistic >= threshold,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateResult {
    pub name: String,
    pub statistic: f64,
    pub comparison: Comparison,
    pub threshold: f64,
    pub passed: bool,
    pub sample_size: usize,
    pub seed: u64,
    /// Controls are built to fail; they check that the gate has power.
    pub negative_control: bool,
    #[serde(default, skip_serializing_if = "serde_json::Value::is_null")]
    pub detail: serde_json::Value,
}

impl GateResult {
    pub fn new(name: &str, statistic: f64, comparison: Comparison, threshold: f64, sample_size: usize, seed: u64) -> Self {
        Self {
            name: name.to_string(),
            statistic,
            comparison,
            threshold,
            passed: comparison.holds(statistic, threshold),
            sample_size,
            seed,
            negative_control: false,
            detail: serde_json::Value::Null,
        }
    }

    pub fn with_detail(mut self, detail: serde_json::Value) -> Self {
        self.detail = detail;
        self
    }

    pub fn as_control(mut self) -> Self {
        self.negative_control = true;
        self.name.push_str(" [control]");
        self
    }

    /// True when the gate passed, or when a control failed.
    pub fn as_expected(&self) -> bool {
        self.passed != self.negative_control
    }
}

fn factory(seed: u64, label: &str) -> StreamFactory {
    StreamFactory::new(seed).derive(label)
}

fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = neumaier_sum(xs.iter().copied()) / n;
    let var = neumaier_sum(xs.iter().map(|x| (x - m) * (x - m))) / (n - 1.0);
    (m, (var / n).sqrt())
}

/// One-sample Kolmogorov-Smirnov statistic; sorts `samples`.
pub fn ks_statistic<F: Fn(f64) -> f64>(samples: &mut [f64], cdf: F) -> f64 {
    samples.sort_by(f64::total_cmp);
    let n = samples.len() as f64;
    samples
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max)
}

/// Critical value of the one-sample statistic at the 1% level (Stephens' form).
pub fn ks_critical(n: usize) -> f64 {
    let sn = (n as f64).sqrt();
    ks_alpha_coefficient() / (sn + 0.12 + 0.11 / sn)
}

fn ks_alpha_coefficient() -> f64 {
    (-(TEST_LEVEL / 2.0).ln() / 2.0).sqrt()
}

/// Two-sample Kolmogorov-Smirnov statistic; sorts both inputs.
pub fn ks_two_sample_statistic(a: &mut [f64], b: &mut [f64]) -> f64 {
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (n, m) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    d
}

pub fn ks_two_sample_critical(n: usize, m: usize) -> f64 {
    let (n, m) = (n as f64, m as f64);
    ks_alpha_coefficient() * ((n + m) / (n * m)).sqrt()
}

/// One-sample KS test at the 1% level.
pub fn ks_gate<F: Fn(f64) -> f64>(name: &str, mut samples: Vec<f64>, cdf: F, seed: u64) -> Result<GateResult> {
    if samples.len() < 1000 {
        return Err(invalid("ks gate", format!("{} samples, need at least 1000", samples.len())));
    }
    let n = samples.len();
    let d = ks_statistic(&mut samples, cdf);
    Ok(GateResult::new(name, d, Comparison::Below, ks_critical(n), n, seed))
}

/// Two-sample KS test at the 1% level.
pub fn ks_two_sample_gate(name: &str, mut a: Vec<f64>, mut b: Vec<f64>, seed: u64) -> GateResult {
    let (n, m) = (a.len(), b.len());
    let d = ks_two_sample_statistic(&mut a, &mut b);
    GateResult::new(name, d, Comparison::Below, ks_two_sample_critical(n, m), n + m, seed)
}

/// `|mean e^{−λγ_t} − (1+λ/η)^{−κt}| / SE` maximized over `lambdas`, gated at 3.
pub fn laplace_gate(params: &ProcessParams, t: f64, lambdas: &[f64], n: usize, seed: u64) -> Result<GateResult> {
    laplace_gate_against(params, t, t, lambdas, n, seed)
}

/// Laplace gate with the analytic target evaluated at `target_t`.
fn laplace_gate_against(
    params: &ProcessParams,
    t: f64,
    target_t: f64,
    lambdas: &[f64],
    n: usize,
    seed: u64,
) -> Result<GateResult> {
    if n < MIN_ORACLE_PATHS {
        return Err(invalid("laplace gate", format!("{n} paths, need at least {MIN_ORACLE_PATHS}")));
    }
    let f = factory(seed, "laplace");
    let grid = uniform_grid(t, 4);
    let values: Vec<f64> = (0..n as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = f.stream(Purpose::Path, i);
            sample_gamma_path(&grid, params, &mut rng).map(|p| p.values[4])
        })
        .collect::<Result<_>>()?;
    let mut worst: f64 = 0.0;
    let mut rows = Vec::new();
    for &lambda in lambdas {
        let target = (1.0 + lambda / params.eta).powf(-params.kappa * target_t);
        let xs: Vec<f64> = values.iter().map(|g| (-lambda * g).exp()).collect();
        let (m, se) = mean_and_se(&xs);
        let z = if se > 0.0 {
            (m - target).abs() / se
        } else if m == target {
            0.0
        } else {
            f64::INFINITY
        };
        worst = worst.max(z);
        rows.push(json!({"lambda": lambda, "mean": m, "target": target, "se": se}));
    }
    Ok(
        GateResult::new("laplace transform", worst, Comparison::AtMost, 3.0, n, seed)
            .with_detail(json!({"t": t, "lambdas": rows})),
    )
}

/// Values `ζ_t^r` of fixed-length bridges, one per path index.
pub fn bridge_marginal_samples(
    sampler: Sampler,
    params: &ProcessParams,
    t: f64,
    r: f64,
    n: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    let f = factory(seed, "bridge marginal");
    let grid = [0.0, t];
    (0..n as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = f.stream(Purpose::Path, i);
            let path = sample_bridge(sampler, &grid, r, params, &mut rng)?;
            Ok(path.values[1] / params.endpoint_a)
        })
        .collect()
}

/// Draws of `ζ_u^r` given `ζ_t^r = x` from the sequential sampler.
pub fn transition_samples(x: f64, t: f64, u: f64, r: f64, kappa: f64, n: usize, seed: u64) -> Vec<f64> {
    let f = factory(seed, "transition");
    (0..n as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = f.stream(Purpose::Path, i);
            markov_step(x, t, u, r, kappa, &mut rng)
        })
        .collect()
}

/// Counts paths with `(ζ_t = a) XOR (τ <= t)`; must be zero.
pub fn stopping_equivalence_gate(samples: &[BridgeSample], t: f64, a: f64, seed: u64) -> GateResult {
    stopping_count(samples, t, |v| v == a, seed)
}

fn stopping_count(samples: &[BridgeSample], t: f64, stopped: impl Fn(f64) -> bool + Sync, seed: u64) -> GateResult {
    let violations = samples
        .par_iter()
        .filter(|s| {
            let v = s.path.value_at(t).expect("t is a grid time");
            stopped(v) != (s.tau <= t)
        })
        .count();
    let stopped_count = samples.iter().filter(|s| s.tau <= t).count();
    GateResult::new("stopping equivalence", violations as f64, Comparison::AtMost, 0.0, samples.len(), seed)
        .with_detail(json!({"t": t, "stopped": stopped_count}))
}

/// Partition of `(lo, hi]` into cells by support points: one cell per point
/// when there are at most `max_cells`, otherwise cells of equal prior mass.
/// Returns upper edges; the last is `+inf`.
fn support_cells(law: &MixingLaw, lo: f64, hi: f64, max_cells: usize) -> Vec<f64> {
    let pts: Vec<(f64, f64)> = law.points().filter(|&(r, _)| r > lo && r <= hi).collect();
    if pts.len() <= max_cells {
        let mut edges: Vec<f64> = pts.iter().map(|p| p.0).collect();
        if let Some(last) = edges.last_mut() {
            *last = f64::INFINITY;
        }
        return edges;
    }
    let total: f64 = pts.iter().map(|p| p.1).sum();
    let mut edges = Vec::with_capacity(max_cells);
    let mut acc = 0.0;
    let mut k = 1;
    for &(r, w) in &pts {
        acc += w;
        if k < max_cells && acc >= total * k as f64 / max_cells as f64 {
            edges.push(r);
            k += 1;
        }
    }
    edges.push(f64::INFINITY);
    edges
}

fn cell_of(edges: &[f64], r: f64) -> usize {
    edges.partition_point(|&e| e < r).min(edges.len() - 1)
}

fn cell_masses(law: &MixingLaw, cells: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; cells.len()];
    for (r, w) in law.points() {
        out[cell_of(cells, r)] += w;
    }
    out
}

fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

fn bin_of(x: f64, bins: usize) -> usize {
    ((x * bins as f64) as usize).min(bins - 1)
}

/// One `ζ_t` bin of the posterior oracle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorBin {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
    pub empirical: Vec<f64>,
    /// Posterior at the bin center.
    pub analytic: Vec<f64>,
    /// Exact bin-averaged posterior from the beta marginals.
    pub bin_average: Vec<f64>,
    pub tv: f64,
    /// TV between the posterior at the center and its bin average.
    pub bin_width_correction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorOracleReport {
    pub t: f64,
    /// Upper edges of the τ cells beyond `t`.
    pub cells: Vec<f64>,
    pub bins: Vec<PosteriorBin>,
    /// `(lo, hi, count)` of bins under the occupancy floor.
    pub excluded: Vec<(f64, f64, usize)>,
    /// Stopped paths against the prior restricted to `(0, t]`.
    pub stopped: Option<PosteriorBin>,
    /// Max over bins of `tv − bin_width_correction`.
    pub max_excess_tv: f64,
}

/// Simulated `(τ, ζ_t / a)` pairs from the normalized sampler.
fn simulate_pairs(law: &MixingLaw, params: &ProcessParams, t: f64, n: usize, f: StreamFactory) -> Result<Vec<(f64, f64)>> {
    let grid = [0.0, t];
    (0..n as u64)
        .into_par_iter()
        .map(|i| {
            let (mut a, mut b) = path_streams(f.seed, i);
            let (tau, path) = sample_random_length_bridge(Sampler::Normalized, &grid, law, params, &mut a, &mut b)?;
            let v = path.value_at(t).expect("t is a grid time");
            let x = if v == params.endpoint_a { 1.0 } else { v / params.endpoint_a };
            Ok((tau, x))
        })
        .collect()
}

/// Brute-force check of the posterior law of τ: simulate `(τ, ζ_t)`, bin
/// `ζ_t`, and compare the τ distribution in each bin with `posterior_tau`.
pub fn posterior_oracle(
    filter: &Filter<'_>,
    params: &ProcessParams,
    t: f64,
    bins: usize,
    max_cells: usize,
    n: usize,
    seed: u64,
) -> Result<PosteriorOracleReport> {
    if n < MIN_ORACLE_PATHS {
        return Err(invalid("posterior oracle", format!("{n} paths, need at least {MIN_ORACLE_PATHS}")));
    }
    let law = filter.law();
    let pairs = simulate_pairs(law, params, t, n, factory(seed, "posterior oracle"))?;
    posterior_report(filter, &pairs, t, bins, max_cells, |x| {
        filter.posterior_tau(x, t).map(|p| p.law().clone())
    })
}

fn posterior_report(
    filter: &Filter<'_>,
    pairs: &[(f64, f64)],
    t: f64,
    bins: usize,
    max_cells: usize,
    analytic_law: impl Fn(f64) -> Result<MixingLaw>,
) -> Result<PosteriorOracleReport> {
    let law = filter.law();
    let kappa = filter.kappa();
    let cells = support_cells(law, t, f64::INFINITY, max_cells);
    let k = cells.len();
    let mut counts = vec![vec![0usize; k]; bins];
    let mut stopped_taus = Vec::new();
    for &(tau, x) in pairs {
        if x == 1.0 {
            stopped_taus.push(tau);
        } else {
            counts[bin_of(x, bins)][cell_of(&cells, tau)] += 1;
        }
    }
    let tail: Vec<(f64, f64)> = law.points().filter(|&(r, _)| r > t).collect();
    let mut report_bins = Vec::new();
    let mut excluded = Vec::new();
    for (b, row) in counts.iter().enumerate() {
        let lo = b as f64 / bins as f64;
        let hi = (b + 1) as f64 / bins as f64;
        let count: usize = row.iter().sum();
        if count < OCCUPANCY_FLOOR {
            excluded.push((lo, hi, count));
            continue;
        }
        let empirical: Vec<f64> = row.iter().map(|&c| c as f64 / count as f64).collect();
        let analytic = cell_masses(&analytic_law(0.5 * (lo + hi))?, &cells);
        let posterior = cell_masses(filter.posterior_tau(0.5 * (lo + hi), t)?.law(), &cells);
        // ∫_bin Beta(κt, κ(r−t)) density, exactly.
        let mut bin_average = vec![0.0; k];
        for &(r, w) in &tail {
            let (a, bb) = (kappa * t, kappa * (r - t));
            let mass = incbeta_unchecked(hi, a, bb) - incbeta_unchecked(lo, a, bb);
            bin_average[cell_of(&cells, r)] += w * mass.max(0.0);
        }
        let z: f64 = bin_average.iter().sum();
        bin_average.iter_mut().for_each(|v| *v /= z);
        let tv = total_variation(&empirical, &analytic);
        let correction = total_variation(&posterior, &bin_average);
        report_bins.push(PosteriorBin {
            lo,
            hi,
            count,
            empirical,
            analytic,
            bin_average,
            tv,
            bin_width_correction: correction,
        });
    }
    let stopped = if stopped_taus.len() >= OCCUPANCY_FLOOR {
        let s_cells = support_cells(law, 0.0, t, max_cells);
        let mut empirical = vec![0.0; s_cells.len()];
        for &tau in &stopped_taus {
            empirical[cell_of(&s_cells, tau)] += 1.0 / stopped_taus.len() as f64;
        }
        let analytic = cell_masses(filter.posterior_tau(1.0, t)?.law(), &s_cells);
        Some(PosteriorBin {
            lo: 1.0,
            hi: 1.0,
            count: stopped_taus.len(),
            tv: total_variation(&empirical, &analytic),
            empirical,
            bin_average: analytic.clone(),
            analytic,
            bin_width_correction: 0.0,
        })
    } else {
        None
    };
    let max_excess_tv = report_bins
        .iter()
        .chain(stopped.iter())
        .map(|b| b.tv - b.bin_width_correction)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(PosteriorOracleReport {
        t,
        cells,
        bins: report_bins,
        excluded,
        stopped,
        max_excess_tv,
    })
}

fn posterior_gate_from(name: &str, report: &PosteriorOracleReport, n: usize, seed: u64) -> GateResult {
    let worst = report
        .bins
        .iter()
        .max_by(|a, b| (a.tv - a.bin_width_correction).total_cmp(&(b.tv - b.bin_width_correction)));
    GateResult::new(name, report.max_excess_tv, Comparison::Below, 0.02, n, seed).with_detail(json!({
        "t": report.t,
        "cells": report.cells.iter().map(|c| if c.is_finite() { json!(c) } else { json!("inf") }).collect::<Vec<_>>(),
        "occupied_bins": report.bins.len(),
        "excluded_bins": report.excluded,
        "worst_bin": worst.map(|b| json!({"lo": b.lo, "hi": b.hi, "count": b.count, "tv": b.tv, "correction": b.bin_width_correction})),
        "stopped": report.stopped.as_ref().map(|s| json!({"count": s.count, "tv": s.tv})),
    }))
}

/// Posterior oracle gate: max over occupied bins of TV minus the bin-width
/// correction, below 0.02.
pub fn posterior_gate(
    filter: &Filter<'_>,
    params: &ProcessParams,
    t: f64,
    n: usize,
    max_cells: usize,
    seed: u64,
) -> Result<(GateResult, PosteriorOracleReport)> {
    let report = posterior_oracle(filter, params, t, DEFAULT_BINS, max_cells, n, seed)?;
    Ok((posterior_gate_from("posterior oracle", &report, n, seed), report))
}

/// Control: the same oracle scored against the prior tail without reweighting.
fn posterior_control(
    filter: &Filter<'_>,
    params: &ProcessParams,
    t: f64,
    n: usize,
    max_cells: usize,
    seed: u64,
) -> Result<GateResult> {
    let law = filter.law();
    let pairs = simulate_pairs(law, params, t, n, factory(seed, "posterior oracle"))?;
    let prior_tail = law.reweighted(|r| if r > t { 1.0 } else { 0.0 })?;
    let report = posterior_report(filter, &pairs, t, DEFAULT_BINS, max_cells, |_| Ok(prior_tail.clone()))?;
    Ok(posterior_gate_from("posterior oracle", &report, n, seed).as_control())
}

/// Empirical weight of the shortest atom beyond `t` among paths with `ζ_t`
/// within `half_width` of `x`, against the analytic posterior at `x`.
pub fn posterior_point_gate(
    filter: &Filter<'_>,
    params: &ProcessParams,
    t: f64,
    x: f64,
    half_width: f64,
    n: usize,
    seed: u64,
) -> Result<GateResult> {
    let pairs = simulate_pairs(filter.law(), params, t, n, factory(seed, "posterior point"))?;
    let post = filter.posterior_tau(x, t)?;
    let (r0, w0) = post.law().points().next().expect("nonempty posterior");
    let hits: Vec<f64> = pairs
        .iter()
        .filter(|p| p.1 != 1.0 && (p.1 - x).abs() <= half_width)
        .map(|p| if p.0 == r0 { 1.0 } else { 0.0 })
        .collect();
    let (m, se) = mean_and_se(&hits);
    let z = (m - w0).abs() / se;
    Ok(
        GateResult::new("posterior worked example", z, Comparison::AtMost, 3.0, hits.len(), seed).with_detail(json!({
            "x": x, "t": t, "atom": r0, "analytic": w0, "empirical": m, "se": se
        })),
    )
}

/// Histogram of `ζ_u` on `cells` equal cells of `(lo, 1)` plus the atom at 1.
fn predictive_histogram(values: &[f64], lo: f64, cells: usize) -> Vec<f64> {
    let mut h = vec![0.0; cells + 1];
    for &y in values {
        if y == 1.0 {
            h[cells] += 1.0;
        } else {
            let k = (((y - lo) / (1.0 - lo)) * cells as f64).floor().clamp(0.0, (cells - 1) as f64) as usize;
            h[k] += 1.0;
        }
    }
    let n = values.len() as f64;
    h.iter_mut().for_each(|v| *v /= n);
    h
}

/// Predictive law averaged over `x ∈ [lo, hi]` against the marginal density
/// of `ζ_t`, on the cells of [`predictive_histogram`].
fn averaged_predictive(filter: &Filter<'_>, t: f64, u: f64, lo: f64, hi: f64, cells: usize) -> Result<Vec<f64>> {
    let kappa = filter.kappa();
    let tail: Vec<(f64, f64)> = filter.law().points().filter(|&(r, _)| r > t).collect();
    let marginal = |x: f64| -> f64 {
        tail.iter()
            .map(|&(r, w)| w * beta_log_pdf_unchecked(x, kappa * t, kappa * (r - t)).density())
            .sum()
    };
    let (nodes, weights) = gauss_legendre_rule(24);
    let edges: Vec<f64> = (0..=cells).map(|k| lo + (1.0 - lo) * k as f64 / cells as f64).collect();
    let mut acc = vec![0.0; cells + 1];
    let mut z = 0.0;
    for (g, gw) in nodes.iter().zip(&weights) {
        let x = 0.5 * (lo + hi) + 0.5 * (hi - lo) * g;
        let m = gw * marginal(x);
        let pred = filter.predictive_law(x, t, u)?;
        let probs = pred.bin_probabilities(&edges);
        for (slot, p) in acc.iter_mut().zip(probs.iter()) {
            *slot += m * p;
        }
        acc[cells] += m * pred.atom_at_one;
        z += m;
    }
    acc.iter_mut().for_each(|v| *v /= z);
    Ok(acc)
}

/// Predictive-law oracle: paths with `ζ_t` in the bin of width `1/bins`
/// centered at `x`, histogram of `ζ_u` against the predictive law.
#[allow(clippy::too_many_arguments)]
pub fn predictive_gate(
    filter: &Filter<'_>,
    params: &ProcessParams,
    x: f64,
    t: f64,
    u: f64,
    n: usize,
    seed: u64,
    control_shift: f64,
) -> Result<GateResult> {
    let half = 0.5 / DEFAULT_BINS as f64;
    let (lo, hi) = (x - half, x + half);
    let f = factory(seed, "predictive oracle");
    let grid = [0.0, t, u];
    let a = params.endpoint_a;
    let law = filter.law();
    let draws: Vec<Option<f64>> = (0..n as u64)
        .into_par_iter()
        .map(|i| {
            let (mut sa, mut sb) = path_streams(f.seed, i);
            let (_, path) = sample_random_length_bridge(Sampler::Normalized, &grid, law, params, &mut sa, &mut sb)?;
            let xt = path.value_at(t).expect("grid time");
            if xt == a || xt / a < lo || xt / a >= hi {
                return Ok(None);
            }
            let yu = path.value_at(u).expect("grid time");
            Ok(Some(if yu == a { 1.0 } else { yu / a }))
        })
        .collect::<Result<_>>()?;
    let ys: Vec<f64> = draws.into_iter().flatten().collect();
    let cells = 10;
    let empirical = predictive_histogram(&ys, lo, cells);
    let analytic = averaged_predictive(filter, t, u + control_shift, lo, hi, cells)?;
    let tv = total_variation(&empirical, &analytic);
    let gate = GateResult::new("predictive law", tv, Comparison::Below, 0.02, ys.len(), seed).with_detail(json!({
        "x": x, "t": t, "u": u, "bin": [lo, hi], "paths": n,
        "atom_empirical": empirical[cells], "atom_analytic": analytic[cells],
    }));
    Ok(if control_shift != 0.0 { gate.as_control() } else { gate })
}

/// Sufficient statistics of one ANCOVA group.
#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    n: f64,
    sx: f64,
    sy: f64,
    sxx: f64,
    sxy: f64,
    syy: f64,
}

impl Moments {
    fn from_points(points: &[(f64, f64)]) -> Self {
        let n = points.len() as f64;
        let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
        let my = points.iter().map(|p| p.1).sum::<f64>() / n;
        let mut m = Moments {
            n,
            sx: mx * n,
            sy: my * n,
            ..Default::default()
        };
        for &(x, y) in points {
            let (dx, dy) = (x - mx, y - my);
            m.sxx += dx * dx;
            m.sxy += dx * dy;
            m.syy += dy * dy;
        }
        m
    }

    /// Pools centered sums of several groups around the overall means.
    fn pooled(groups: &[Moments]) -> Self {
        let n: f64 = groups.iter().map(|g| g.n).sum();
        let mx = groups.iter().map(|g| g.sx).sum::<f64>() / n;
        let my = groups.iter().map(|g| g.sy).sum::<f64>() / n;
        let mut out = Moments {
            n,
            sx: mx * n,
            sy: my * n,
            ..Default::default()
        };
        for g in groups {
            let (dx, dy) = (g.sx / g.n - mx, g.sy / g.n - my);
            out.sxx += g.sxx + g.n * dx * dx;
            out.sxy += g.sxy + g.n * dx * dy;
            out.syy += g.syy + g.n * dy * dy;
        }
        out
    }
}

/// Upper tail `P(F > f)` of the F distribution with `(d1, d2)` degrees of freedom.
pub fn f_distribution_sf(f: f64, d1: f64, d2: f64) -> f64 {
    if !(f > 0.0) {
        return 1.0;
    }
    incbeta_unchecked(d2 / (d2 + d1 * f), 0.5 * d2, 0.5 * d1)
}

/// p-value of the ANCOVA test for equal group intercepts with a common slope
/// on the covariate.
fn ancova_p_value(groups: &[Moments]) -> Option<f64> {
    let g = groups.len() as f64;
    let all = Moments::pooled(groups);
    let sxx_w: f64 = groups.iter().map(|m| m.sxx).sum();
    let sxy_w: f64 = groups.iter().map(|m| m.sxy).sum();
    let syy_w: f64 = groups.iter().map(|m| m.syy).sum();
    if !(sxx_w > 0.0 && all.sxx > 0.0) {
        return None;
    }
    let sse_full = syy_w - sxy_w * sxy_w / sxx_w;
    let sse_reduced = all.syy - all.sxy * all.sxy / all.sxx;
    let d1 = g - 1.0;
    let d2 = all.n - g - 1.0;
    if !(d2 > 0.0 && sse_full > 0.0) {
        return None;
    }
    let f = ((sse_reduced - sse_full) / d1) / (sse_full / d2);
    Some(f_distribution_sf(f, d1, d2))
}

/// Simulated `(ζ_{t_hist}, ζ_t, ζ_u)` on the normalized scale.
fn simulate_triples(
    law: &MixingLaw,
    params: &ProcessParams,
    t_hist: f64,
    t: f64,
    u: f64,
    n: usize,
    f: StreamFactory,
) -> Result<Vec<[f64; 3]>> {
    let grid = [0.0, t_hist, t, u];
    let a = params.endpoint_a;
    let norm = |v: f64| if v == a { 1.0 } else { v / a };
    (0..n as u64)
        .into_par_iter()
        .map(|i| {
            let (mut sa, mut sb) = path_streams(f.seed, i);
            let (_, p) = sample_random_length_bridge(Sampler::Normalized, &grid, law, params, &mut sa, &mut sb)?;
            Ok([
                norm(p.value_at(t_hist).expect("grid time")),
                norm(p.value_at(t).expect("grid time")),
                norm(p.value_at(u).expect("grid time")),
            ])
        })
        .collect()
}

/// Quantile edges splitting `values` into `groups` equal-count groups.
fn quantile_edges(values: &[f64], groups: usize) -> Vec<f64> {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    (1..groups).map(|k| v[k * v.len() / groups]).collect()
}

/// Markov gate: within each `ζ_t` bin, no effect of the history ratio
/// `ζ_{t_hist}/ζ_t` on `ζ_u + injected·ζ_{t_hist}` after adjusting for `ζ_t`.
/// Bonferroni-adjusted smallest p-value must be at least 1%.
#[allow(clippy::too_many_arguments)]
pub fn markov_gate(
    law: &MixingLaw,
    params: &ProcessParams,
    t_hist: f64,
    t: f64,
    u: f64,
    n: usize,
    seed: u64,
    injected: f64,
) -> Result<GateResult> {
    if !(0.0 < t_hist && t_hist < t && t < u) {
        return Err(invalid("markov gate", "need 0 < t_hist < t < u"));
    }
    let triples = simulate_triples(law, params, t_hist, t, u, n, factory(seed, "markov"))?;
    let live: Vec<&[f64; 3]> = triples.iter().filter(|p| p[1] < 1.0 && p[1] > 0.0).collect();
    let ratios: Vec<f64> = live.iter().map(|p| p[0] / p[1]).collect();
    let history_groups = 5;
    let edges = quantile_edges(&ratios, history_groups);
    let bins = DEFAULT_BINS;
    let mut strata: Vec<Vec<Vec<(f64, f64)>>> = vec![vec![Vec::new(); history_groups]; bins];
    for (p, &ratio) in live.iter().zip(&ratios) {
        let h = edges.partition_point(|&e| e <= ratio);
        strata[bin_of(p[1], bins)][h].push((p[1], p[2] + injected * p[0]));
    }
    let mut p_values = Vec::new();
    let mut excluded = 0usize;
    for bin in &strata {
        let groups: Vec<Moments> = bin
            .iter()
            .filter(|g| {
                let keep = g.len() >= OCCUPANCY_FLOOR;
                if !keep && !g.is_empty() {
                    excluded += 1;
                }
                keep
            })
            .map(|g| Moments::from_points(g))
            .collect();
        if groups.len() >= 2 {
            if let Some(p) = ancova_p_value(&groups) {
                p_values.push(p);
            }
        }
    }
    let tests = p_values.len();
    let min_p = p_values.iter().copied().fold(1.0, f64::min);
    let adjusted = (min_p * tests as f64).min(1.0);
    let gate = GateResult::new("markov property", adjusted, Comparison::AtLeast, TEST_LEVEL, n, seed).with_detail(json!({
        "t_hist": t_hist, "t": t, "u": u, "tests": tests, "min_p": min_p,
        "excluded_strata": excluded, "stopped_at_t": triples.len() - live.len(), "injected": injected,
    }));
    Ok(if injected != 0.0 { gate.as_control() } else { gate })
}

/// Predictive law from `(t, x)` alone against ζ_u conditioned on `ζ_t` near
/// `x` and on each half of the history ratio.
#[allow(clippy::too_many_arguments)]
pub fn markov_restatement_gate(
    filter: &Filter<'_>,
    params: &ProcessParams,
    t_hist: f64,
    t: f64,
    u: f64,
    x: f64,
    n: usize,
    seed: u64,
) -> Result<GateResult> {
    let triples = simulate_triples(filter.law(), params, t_hist, t, u, n, factory(seed, "markov"))?;
    let half = 0.5 / DEFAULT_BINS as f64;
    let (lo, hi) = (x - half, x + half);
    let live: Vec<&[f64; 3]> = triples.iter().filter(|p| p[1] >= lo && p[1] < hi).collect();
    let ratios: Vec<f64> = live.iter().map(|p| p[0] / p[1]).collect();
    let median = quantile_edges(&ratios, 2)[0];
    let cells = 8;
    let analytic = averaged_predictive(filter, t, u, lo, hi, cells)?;
    let mut worst: f64 = 0.0;
    let mut sizes = Vec::new();
    for lower in [true, false] {
        let ys: Vec<f64> = live
            .iter()
            .zip(&ratios)
            .filter(|(_, &r)| (r < median) == lower)
            .map(|(p, _)| p[2])
            .collect();
        sizes.push(ys.len());
        worst = worst.max(total_variation(&predictive_histogram(&ys, lo, cells), &analytic));
    }
    Ok(GateResult::new("markov restatement", worst, Comparison::AtMost, 0.03, n, seed)
        .with_detail(json!({"x": x, "bin": [lo, hi], "group_sizes": sizes})))
}

/// F-mode residual increments: returns the centering gate (max |mean|/SE at
/// most 4) and the orthogonality gate (max |corr| with ζ at step start at
/// most 4/√N).
pub fn compensator_gates(
    filter: &Filter<'_>,
    params: &ProcessParams,
    grid: &[f64],
    n: usize,
    seed: u64,
    sampling_law: &MixingLaw,
) -> Result<(GateResult, GateResult)> {
    let spec = EnsembleSpec {
        grid,
        law: sampling_law,
        params: *params,
        sampler: Sampler::Normalized,
    };
    let samples = simulate_ensemble(&spec, factory(seed, "compensator").seed, n)?;
    let paths = samples
        .par_iter()
        .map(|s| compensate_path(&s.path, filter, Mode::F, params.endpoint_a))
        .collect::<Result<Vec<_>>>()?;
    let summary = summarize(&paths, grid);
    let steps = json!(summary.steps.iter().map(|s| json!([s.t0, s.t1, s.mean, s.standard_error])).collect::<Vec<_>>());
    let centered = GateResult::new("compensator martingale", summary.max_abs_z, Comparison::AtMost, 4.0, n, seed)
        .with_detail(json!({"steps": steps}));
    let orthogonal = GateResult::new(
        "compensator orthogonality",
        summary.max_abs_correlation,
        Comparison::AtMost,
        4.0 / (n as f64).sqrt(),
        n,
        seed,
    );
    Ok((centered, orthogonal))
}

/// Dirac prior: number of differing bytes between the H-mode and F-mode CSVs.
pub fn dirac_identity_gate(r: f64, params: &ProcessParams, grid: &[f64], n: usize, seed: u64) -> Result<GateResult> {
    let law = MixingLaw::dirac(r)?;
    let filter = Filter::with_kappa(&law, params.kappa)?;
    let spec = EnsembleSpec {
        grid,
        law: &law,
        params: *params,
        sampler: Sampler::Normalized,
    };
    let samples = simulate_ensemble(&spec, factory(seed, "dirac identity").seed, n)?;
    let render = |mode| -> Result<Vec<u8>> {
        let paths = samples
            .par_iter()
            .map(|s| compensate_path(&s.path, &filter, mode, params.endpoint_a))
            .collect::<Result<Vec<_>>>()?;
        let mut buf = Vec::new();
        write_drift_csv(&mut buf, &paths).expect("writing to memory");
        Ok(buf)
    };
    let h = render(Mode::H)?;
    let f = render(Mode::F)?;
    let diff = h.iter().zip(&f).filter(|(a, b)| a != b).count() + h.len().abs_diff(f.len());
    Ok(GateResult::new("dirac modes identical", diff as f64, Comparison::AtMost, 0.0, n, seed)
        .with_detail(json!({"bytes": h.len()})))
}

/// `E ∫_0^t Z ds` by simulation against `∫ (t∧r)/r dP_τ`, within 3 SE, and
/// the bound itself at most 1.
pub fn integrated_drift_gate(
    law: &MixingLaw,
    params: &ProcessParams,
    t: f64,
    steps: usize,
    n: usize,
    seed: u64,
) -> Result<GateResult> {
    let grid = uniform_grid(t, steps);
    let filter = Filter::with_kappa(law, params.kappa)?;
    let spec = EnsembleSpec {
        grid: &grid,
        law,
        params: *params,
        sampler: Sampler::Normalized,
    };
    let samples = simulate_ensemble(&spec, factory(seed, "integrated drift").seed, n)?;
    let integrals: Vec<f64> = samples
        .par_iter()
        .map(|s| {
            compensate_path(&s.path, &filter, Mode::H, params.endpoint_a)
                .map(|c| c.drift_integral.last().copied().unwrap_or(0.0) / params.endpoint_a)
        })
        .collect::<Result<_>>()?;
    let (m, se) = mean_and_se(&integrals);
    let bound = integrated_drift_bound(law, t);
    let z = (m - bound).abs() / se;
    let statistic = if bound <= 1.0 && m <= 1.0 + 3.0 * se { z } else { f64::INFINITY };
    Ok(GateResult::new("integrated drift", statistic, Comparison::AtMost, 3.0, n, seed)
        .with_detail(json!({"t": t, "mc_mean": m, "se": se, "bound": bound})))
}

/// One jump time per path (that of the largest jump) from random-length
/// bridges built by the jump sampler.
pub fn jump_time_samples(law: &MixingLaw, params: &ProcessParams, epsilon: f64, n: usize, seed: u64) -> Result<Vec<f64>> {
    let f = factory(seed, "jump times");
    (0..n as u64)
        .into_par_iter()
        .map(|i| {
            let (mut tau_rng, mut path_rng) = path_streams(f.seed, i);
            let tau = law.sample_tau(&mut tau_rng);
            let js = sample_bridge_jumps(tau, epsilon, 1e7, params, &mut path_rng)?;
            Ok(js.times[0])
        })
        .collect()
}

/// Run-time configuration of the gate suite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SuiteConfig {
    pub seed: u64,
    /// Multiplies every default sample size; 1 is the acceptance setting.
    pub scale: f64,
    pub negative_controls: bool,
    pub params: ProcessParams,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self {
            seed: 20_240_601,
            scale: 1.0,
            negative_controls: true,
            params: ProcessParams::default(),
        }
    }
}

impl SuiteConfig {
    fn n(&self, base: usize) -> usize {
        ((base as f64 * self.scale).round() as usize).max(1000)
    }

    fn n_at_least(&self, base: usize, floor: usize) -> usize {
        self.n(base).max(floor)
    }
}

/// Suite section names in run order, each mapping to one or more gates.
pub const SUITE_SECTIONS: [&str; 9] = [
    "laplace",
    "bridge_marginal",
    "transition",
    "stopping",
    "posterior",
    "predictive",
    "markov",
    "compensator",
    "jump_time",
];

/// Runs one section of the suite.
pub fn run_section(cfg: &SuiteConfig, section: &str) -> Result<Vec<GateResult>> {
    let seed = cfg.seed;
    let p = cfg.params;
    let mut out = Vec::new();
    let named = |mut g: GateResult, label: String| {
        let control = g.negative_control;
        g.name = if control { format!("{label} [control]") } else { label };
        g
    };
    let bridge_params = ProcessParams::new(1.0, 1.0, p.endpoint_a)?;
    match section {
        "laplace" => {
            let n = cfg.n_at_least(100_000, MIN_ORACLE_PATHS);
            let unit = ProcessParams::new(1.0, 1.0, p.endpoint_a)?;
            let g = laplace_gate(&unit, 1.0, &[0.5, 1.0, 2.0], n, seed)?;
            out.push(named(g, "laplace (eta, kappa) = (1, 1)".into()));
            let g = laplace_gate(&ProcessParams::new(2.0, 3.0, 1.0)?, 1.0, &[0.0, 2.0], n, seed)?;
            out.push(named(g, "laplace (eta, kappa) = (2, 3)".into()));
            if cfg.negative_controls {
                let g = laplace_gate_against(&unit, 1.0, 1.05, &[0.5, 1.0, 2.0], n, seed)?.as_control();
                out.push(named(g, "laplace at shifted time".into()));
            }
        }
        "bridge_marginal" => {
            let n = cfg.n(100_000);
            let samplers = [
                ("normalized", Sampler::Normalized),
                ("markov", Sampler::Markov),
                ("jumps", Sampler::Jumps { epsilon: 1e-6, max_expected_jumps: 1e7 }),
            ];
            let mut sets = Vec::new();
            for (i, (label, s)) in samplers.iter().enumerate() {
                // Distinct seeds per sampler so the two-sample tests compare independent sets.
                let sub = StreamFactory::new(seed).derive(label).seed;
                let xs = bridge_marginal_samples(*s, &bridge_params, 0.5, 1.0, n, sub)?;
                let g = ks_gate("", xs.clone(), |x| incbeta_unchecked(x, 0.5, 0.5), seed)?;
                out.push(named(g, format!("bridge marginal KS ({label})")));
                sets.push((i, *label, xs));
            }
            for a in 0..sets.len() {
                for b in a + 1..sets.len() {
                    let g = ks_two_sample_gate("", sets[a].2.clone(), sets[b].2.clone(), seed);
                    out.push(named(g, format!("two-sample KS ({} vs {})", sets[a].1, sets[b].1)));
                }
            }
            if cfg.negative_controls {
                let sub = StreamFactory::new(seed).derive("control").seed;
                let f = factory(sub, "beta(2,1)");
                let xs: Vec<f64> = (0..n as u64)
                    .map(|i| f.stream(Purpose::Oracle, i).random::<f64>().sqrt())
                    .collect();
                let g = ks_gate("", xs, |x| incbeta_unchecked(x, 1.0, 2.0), seed)?.as_control();
                out.push(named(g, "KS of Beta(2,1) draws against Beta(1,2)".into()));
            }
        }
        "transition" => {
            let n = cfg.n(100_000);
            let (x, t, u, r) = (0.2, 0.5, 1.0, 2.0);
            let ys = transition_samples(x, t, u, r, 1.0, n, seed);
            let scaled = |y: f64| incbeta_unchecked(((y - x) / (1.0 - x)).clamp(0.0, 1.0), u - t, r - u);
            let g = ks_gate("", ys.clone(), scaled, seed)?;
            out.push(named(g, "transition law KS".into()));
            let k = 2.5;
            let ys2 = transition_samples(x, t, u, r, k, n, seed ^ 1);
            let g = ks_gate(
                "",
                ys2,
                |y| incbeta_unchecked(((y - x) / (1.0 - x)).clamp(0.0, 1.0), k * (u - t), k * (r - u)),
                seed,
            )?;
            out.push(named(g, "transition law KS (kappa = 2.5)".into()));
            if cfg.negative_controls {
                let g = ks_gate("", ys, |y| incbeta_unchecked(y.clamp(0.0, 1.0), u - t, r - u), seed)?.as_control();
                out.push(named(g, "transition law without shift".into()));
            }
        }
        "stopping" => {
            let n = cfg.n(100_000);
            let grid = uniform_grid(3.0, 30);
            let laws = [
                ("dirac at 2", MixingLaw::dirac(2.0)?),
                ("two atoms {1, 2}", MixingLaw::discrete(&[(1.0, 0.5), (2.0, 0.5)])?),
                ("gridded exponential", MixingLaw::exponential_gridded(1.0, 20.0, 512)?),
            ];
            for (label, law) in &laws {
                let spec = EnsembleSpec {
                    grid: &grid,
                    law,
                    params: p,
                    sampler: Sampler::Normalized,
                };
                let samples = simulate_ensemble(&spec, factory(seed, label).seed, n)?;
                for t in [1.0, 2.0, 3.0] {
                    let g = stopping_equivalence_gate(&samples, t, p.endpoint_a, seed);
                    out.push(named(g, format!("stopping equivalence ({label}, t = {t})")));
                }
                if cfg.negative_controls && *label == "gridded exponential" {
                    let a = p.endpoint_a;
                    let g = stopping_count(&samples, 1.0, |v| v >= a * (1.0 - 1e-3), seed).as_control();
                    out.push(named(g, "stopping equivalence with tolerance test".into()));
                }
            }
        }
        "posterior" => {
            let n = cfg.n_at_least(1_000_000, MIN_ORACLE_PATHS);
            let two = MixingLaw::discrete(&[(2.0, 0.5), (4.0, 0.5)])?;
            let expo = MixingLaw::exponential_gridded(1.0, 20.0, 512)?;
            for (label, law) in [("two atoms {2, 4}", &two), ("gridded exponential", &expo)] {
                let filter = Filter::with_kappa(law, bridge_params.kappa)?;
                let (g, _) = posterior_gate(&filter, &bridge_params, 1.0, n, 4, seed)?;
                out.push(named(g, format!("posterior oracle ({label})")));
                if cfg.negative_controls && law == &two {
                    let g = posterior_control(&filter, &bridge_params, 1.0, n, 4, seed)?;
                    out.push(named(g, format!("posterior oracle against prior ({label})")));
                }
            }
            let filter = Filter::new(&two);
            let g = posterior_point_gate(&filter, &bridge_params, 1.0, 0.5, 0.005, n, seed)?;
            out.push(named(g, "posterior weight 4/7 at x = 0.5".into()));
        }
        "predictive" => {
            let n = cfg.n(1_000_000);
            let law = MixingLaw::discrete(&[(1.5, 0.5), (3.0, 0.5)])?;
            let filter = Filter::new(&law);
            let g = predictive_gate(&filter, &bridge_params, 0.4, 1.0, 2.0, n, seed, 0.0)?;
            out.push(named(g, "predictive law {1.5, 3}".into()));
            if cfg.negative_controls {
                let g = predictive_gate(&filter, &bridge_params, 0.4, 1.0, 2.0, n, seed, 0.5)?;
                out.push(named(g, "predictive law at wrong horizon".into()));
            }
        }
        "markov" => {
            let n = cfg.n(1_000_000);
            let law = MixingLaw::discrete(&[(1.0, 0.5), (2.0, 0.5)])?;
            let g = markov_gate(&law, &bridge_params, 0.25, 0.5, 1.5, n, seed, 0.0)?;
            out.push(named(g, "markov property {1, 2}".into()));
            let dirac = MixingLaw::dirac(2.0)?;
            let g = markov_gate(&dirac, &bridge_params, 0.25, 0.5, 1.5, n, seed, 0.0)?;
            out.push(named(g, "markov property (dirac at 2)".into()));
            let filter = Filter::new(&law);
            let g = markov_restatement_gate(&filter, &bridge_params, 0.25, 0.5, 1.5, 0.3125, n, seed)?;
            out.push(named(g, "predictive given history {1, 2}".into()));
            if cfg.negative_controls {
                let g = markov_gate(&law, &bridge_params, 0.25, 0.5, 1.5, n, seed, 0.1)?;
                out.push(named(g, "markov property with injected history".into()));
            }
        }
        "compensator" => {
            let n = cfg.n(100_000);
            let law = MixingLaw::discrete(&[(1.0, 0.5), (2.0, 0.5)])?;
            let filter = Filter::with_kappa(&law, p.kappa)?;
            let grid = uniform_grid(0.9, 9);
            let (c, o) = compensator_gates(&filter, &p, &grid, n, seed, &law)?;
            out.push(named(c, "F-mode residual centered {1, 2}".into()));
            out.push(named(o, "F-mode residual orthogonal {1, 2}".into()));
            let g = dirac_identity_gate(0.75, &p, &uniform_grid(1.0, 8), cfg.n(10_000), seed)?;
            out.push(named(g, "dirac prior: H and F reports identical".into()));
            let wide = MixingLaw::discrete(&[(1.0, 0.5), (4.0, 0.5)])?;
            let g = integrated_drift_gate(&wide, &p, 2.0, 40, n, seed)?;
            out.push(named(g, "integrated drift {1, 4}, t = 2".into()));
            let expo = MixingLaw::exponential_gridded(1.0, 20.0, 512)?;
            let g = integrated_drift_gate(&expo, &p, 1.5, 30, n, seed)?;
            out.push(named(g, "integrated drift (gridded exponential), t = 1.5".into()));
            if cfg.negative_controls {
                let wrong = Filter::with_kappa(&law, p.kappa * 3.0)?;
                let (c, _) = compensator_gates(&wrong, &p, &grid, n, seed, &law)?;
                out.push(named(c.as_control(), "F-mode residual with misspecified kappa".into()));
            }
        }
        "jump_time" => {
            let n = cfg.n(100_000);
            let laws = [
                ("two atoms {1, 2}", MixingLaw::discrete(&[(1.0, 0.5), (2.0, 0.5)])?),
                ("gridded exponential", MixingLaw::exponential_gridded(1.0, 20.0, 512)?),
            ];
            for (label, law) in &laws {
                let us = jump_time_samples(law, &p, 1e-6, n, factory(seed, label).seed)?;
                let g = ks_gate("", us.clone(), |t| jump_time_cdf(law, t), seed)?;
                out.push(named(g, format!("jump-time law KS ({label})")));
                if cfg.negative_controls && *label == "two atoms {1, 2}" {
                    let mean = MixingLaw::dirac(law.tail_moment(1.0))?;
                    let g = ks_gate("", us, |t| jump_time_cdf(&mean, t), seed)?.as_control();
                    out.push(named(g, "jump-time law of the mean length".into()));
                }
            }
        }
        other => return Err(invalid("suite", format!("unknown section '{other}'"))),
    }
    Ok(out)
}

/// Runs every section in order.
pub fn run_suite(cfg: &SuiteConfig) -> Result<Vec<GateResult>> {
    let mut out = Vec::new();
    for s in SUITE_SECTIONS {
        out.extend(run_section(cfg, s)?);
    }
    Ok(out)
}

/// Human-readable table, one gate per line.
pub fn format_table(results: &[GateResult]) -> String {
    let width = results.iter().map(|r| r.name.len()).max().unwrap_or(4).max(4);
    let mut s = String::new();
    let _ = writeln!(s, "{:<width$}  {:>12}  {:>2}  {:>12}  {:>9}  result", "gate", "statistic", "", "threshold", "n");
    for r in results {
        let verdict = match (r.passed, r.negative_control) {
            (true, false) => "PASS",
            (false, false) => "FAIL",
            (false, true) => "PASS (control failed as expected)",
            (true, true) => "FAIL (control passed)",
        };
        let cmp = match r.comparison {
            Comparison::Below => "<",
            Comparison::AtMost => "<=",
            Comparison::AtLeast => ">=",
        };
        let _ = writeln!(
            s,
            "{:<width$}  {:>12.6}  {:>2}  {:>12.6}  {:>9}  {verdict}",
            r.name, r.statistic, cmp, r.threshold, r.sample_size
        );
    }
    s
}

/// Sample from `Uniform(0,1)` on an oracle stream; used by tests of the gates.
pub fn uniform_samples(n: usize, seed: u64) -> Vec<f64> {
    (0..n as u64).map(|i| stream(seed, Purpose::Oracle, i).random::<f64>()).collect()
}
