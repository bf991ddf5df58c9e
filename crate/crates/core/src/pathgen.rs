//! Samplers for gamma process paths and gamma bridges of fixed or random length.

use std::io::{self, Write};

use rand::Rng;
use rand_distr::{Beta, Distribution, Exp1, Gamma, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::mixing_law::{neumaier_sum, MixingLaw};
use crate::rng::{stream, Purpose, Stream};
use crate::specfun::e1_unchecked;

/// Default ceiling on the expected number of jumps drawn by [`sample_bridge_jumps`].
pub const DEFAULT_MAX_EXPECTED_JUMPS: f64 = 1e7;

/// Parameters of the generalized gamma process: Lévy measure `(κ/x) e^{-ηx} dx`,
/// bridges pinned at `endpoint_a`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProcessParams {
    pub eta: f64,
    pub kappa: f64,
    #[serde(alias = "a")]
    pub endpoint_a: f64,
}

impl Default for ProcessParams {
    fn default() -> Self {
        Self {
            eta: 1.0,
            kappa: 1.0,
            endpoint_a: 1.0,
        }
    }
}

impl ProcessParams {
    pub fn new(eta: f64, kappa: f64, endpoint_a: f64) -> Result<Self> {
        let p = Self { eta, kappa, endpoint_a };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("eta", self.eta), ("kappa", self.kappa), ("endpoint_a", self.endpoint_a)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(invalid("process params", format!("{name} = {v} must be positive and finite")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pin {
    pub time: f64,
    pub value: f64,
}

/// Values recorded at grid times. Nothing is defined between grid points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Path {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pin: Option<Pin>,
}

impl Path {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Value at a time that lies exactly on the grid.
    pub fn value_at(&self, t: f64) -> Option<f64> {
        let i = self.times.partition_point(|&s| s < t);
        (i < self.times.len() && self.times[i] == t).then(|| self.values[i])
    }

    /// Checks the type invariants: grid from 0, monotone values, exact pin.
    pub fn check_invariants(&self) -> Result<()> {
        check_grid(&self.times)?;
        if self.values.len() != self.times.len() {
            return Err(invalid("path", "times and values differ in length"));
        }
        if self.values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(invalid("path", "values must be finite and nonnegative"));
        }
        if let Some(i) = self.values.windows(2).position(|w| w[1] < w[0]) {
            return Err(invalid("path", format!("value decreases after time {}", self.times[i])));
        }
        if let Some(pin) = self.pin {
            if self.values[0] != 0.0 {
                return Err(invalid("path", "bridge must start at 0"));
            }
            for (&t, &v) in self.times.iter().zip(&self.values) {
                if (t >= pin.time) != (v == pin.value) {
                    return Err(invalid("path", format!("pin violated at time {t}")));
                }
                if v > pin.value {
                    return Err(invalid("path", format!("value {v} above pin at time {t}")));
                }
            }
        }
        Ok(())
    }
}

/// Jumps of a gamma bridge above a size threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JumpSet {
    /// Decreasing.
    pub sizes: Vec<f64>,
    /// `times[k]` is the time of jump `sizes[k]`.
    pub times: Vec<f64>,
    pub length: f64,
    pub epsilon: f64,
    pub expected_count: f64,
    /// Expected total size of the discarded jumps below `epsilon`.
    pub truncated_mass: f64,
}

impl JumpSet {
    /// Normalized bridge path `a Σ J_k 1{U_k <= t} / Σ J_k` on `grid ∪ {length}`.
    pub fn to_path(&self, grid: &[f64], endpoint_a: f64) -> Result<Path> {
        check_grid(grid)?;
        let times = with_point(grid, self.length);
        let mut order: Vec<usize> = (0..self.sizes.len()).collect();
        order.sort_by(|&i, &j| self.times[i].total_cmp(&self.times[j]));
        let total = neumaier_sum(self.sizes.iter().copied());
        let mut values = Vec::with_capacity(times.len());
        let mut k = 0;
        let mut acc = 0.0;
        for &t in &times {
            if t >= self.length {
                values.push(endpoint_a);
                continue;
            }
            while k < order.len() && self.times[order[k]] <= t {
                acc += self.sizes[order[k]];
                k += 1;
            }
            values.push(below_pin(endpoint_a * acc / total, endpoint_a));
        }
        Ok(Path {
            times,
            values,
            pin: Some(Pin {
                time: self.length,
                value: endpoint_a,
            }),
        })
    }
}

/// Bridge sampling algorithm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Sampler {
    /// Gamma increments divided by their total.
    #[default]
    Normalized,
    /// Sequential beta transitions.
    Markov,
    /// Jump representation truncated below `epsilon`.
    Jumps {
        epsilon: f64,
        #[serde(default = "default_max_jumps")]
        max_expected_jumps: f64,
    },
}

fn default_max_jumps() -> f64 {
    DEFAULT_MAX_EXPECTED_JUMPS
}


/// Checks that `grid` starts at 0 and is strictly increasing and finite.
pub fn check_grid(grid: &[f64]) -> Result<()> {
    match grid.first() {
        None => return Err(invalid("grid", "empty")),
        Some(&t0) if t0 != 0.0 => return Err(invalid("grid", format!("must start at 0, starts at {t0}"))),
        _ => {}
    }
    if grid.iter().any(|t| !t.is_finite()) {
        return Err(invalid("grid", "times must be finite"));
    }
    if let Some(i) = grid.windows(2).position(|w| w[1] <= w[0]) {
        return Err(invalid("grid", format!("not strictly increasing at index {}", i + 1)));
    }
    Ok(())
}

/// `0, h, 2h, ..., end` with `steps` intervals.
pub fn uniform_grid(end: f64, steps: usize) -> Vec<f64> {
    (0..=steps)
        .map(|i| if i == steps { end } else { end * i as f64 / steps as f64 })
        .collect()
}

/// Sorted union of `grid` and `{t}`.
fn with_point(grid: &[f64], t: f64) -> Vec<f64> {
    let i = grid.partition_point(|&s| s < t);
    let mut out = grid.to_vec();
    if i == grid.len() || grid[i] != t {
        out.insert(i, t);
    }
    out
}

/// Keeps pre-pin values strictly below the pin value.
fn below_pin(v: f64, a: f64) -> f64 {
    if v < a {
        v.max(0.0)
    } else {
        f64::from_bits(a.to_bits() - 1)
    }
}

fn gamma_increment<R: Rng + ?Sized>(shape: f64, rate: f64, rng: &mut R) -> f64 {
    Gamma::new(shape, 1.0 / rate)
        .expect("shape and rate are positive")
        .sample(rng)
}

/// Gamma process on `grid`: independent Gamma(κΔt, η) increments from 0.
pub fn sample_gamma_path<R: Rng + ?Sized>(grid: &[f64], params: &ProcessParams, rng: &mut R) -> Result<Path> {
    check_grid(grid)?;
    params.validate()?;
    let mut values = Vec::with_capacity(grid.len());
    values.push(0.0);
    let mut acc = 0.0;
    for w in grid.windows(2) {
        acc += gamma_increment(params.kappa * (w[1] - w[0]), params.eta, rng);
        values.push(acc);
    }
    Ok(Path {
        times: grid.to_vec(),
        values,
        pin: None,
    })
}

fn check_length(r: f64) -> Result<()> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(invalid("bridge", format!("length {r} must be positive and finite")));
    }
    Ok(())
}

/// Bridge `a γ_{t∧r} / γ_r` on `grid ∪ {r}` from normalized gamma increments.
pub fn sample_bridge_normalized<R: Rng + ?Sized>(
    grid: &[f64],
    r: f64,
    params: &ProcessParams,
    rng: &mut R,
) -> Result<Path> {
    check_grid(grid)?;
    check_length(r)?;
    params.validate()?;
    let times = with_point(grid, r);
    let n_inner = times.partition_point(|&s| s < r);
    let mut cumulative = Vec::with_capacity(n_inner + 1);
    let mut total;
    loop {
        cumulative.clear();
        cumulative.push(0.0);
        total = 0.0;
        for i in 1..=n_inner {
            total += gamma_increment(params.kappa * (times[i] - times[i - 1]), params.eta, rng);
            cumulative.push(total);
        }
        // All increments can underflow when κr is tiny; redraw.
        if total > 0.0 {
            break;
        }
    }
    let a = params.endpoint_a;
    let values = times
        .iter()
        .enumerate()
        .map(|(i, &t)| if t >= r { a } else { below_pin(a * (cumulative[i] / total), a) })
        .collect();
    Ok(Path {
        times,
        values,
        pin: Some(Pin { time: r, value: a }),
    })
}

/// Draws `Beta(alpha, beta)`, redrawing on the rare non-finite output of the
/// generator at extreme parameters.
fn beta_variate<R: Rng + ?Sized>(alpha: f64, beta: f64, rng: &mut R) -> f64 {
    let dist = Beta::new(alpha, beta).expect("beta parameters are positive");
    loop {
        let b: f64 = dist.sample(rng);
        if b.is_finite() {
            return b.clamp(0.0, 1.0);
        }
    }
}

/// One transition of the normalized bridge of length `r` from `ζ_t = x` to
/// time `u < r`: `x + (1 − x) Beta(κ(u−t), κ(r−u))`.
pub fn markov_step<R: Rng + ?Sized>(x: f64, t: f64, u: f64, r: f64, kappa: f64, rng: &mut R) -> f64 {
    let b = beta_variate(kappa * (u - t), kappa * (r - u), rng);
    (x + (1.0 - x) * b).min(1.0)
}

/// Bridge on `grid ∪ {r}` by sequential sampling of the transition law: the
/// normalized increment `(ζ_u − ζ_t)/(1 − ζ_t)` is `Beta(κ(u−t), κ(r−u))`.
pub fn sample_bridge_markov<R: Rng + ?Sized>(
    grid: &[f64],
    r: f64,
    params: &ProcessParams,
    rng: &mut R,
) -> Result<Path> {
    check_grid(grid)?;
    check_length(r)?;
    params.validate()?;
    let times = with_point(grid, r);
    let k = params.kappa;
    let a = params.endpoint_a;
    let mut values = Vec::with_capacity(times.len());
    values.push(0.0);
    let mut x = 0.0f64;
    for w in times.windows(2) {
        let (t, u) = (w[0], w[1]);
        if u >= r {
            values.push(a);
            continue;
        }
        x = markov_step(x, t, u, r, k, rng);
        values.push(below_pin(a * x, a));
    }
    Ok(Path {
        times,
        values,
        pin: Some(Pin { time: r, value: a }),
    })
}

/// Draws from the density proportional to `e^{-y}/y` on `(c, ∞)`.
fn exp_over_y<R: Rng + ?Sized>(c: f64, w_low: f64, w_high: f64, rng: &mut R) -> f64 {
    let split = c.max(1.0);
    if c < 1.0 && rng.random::<f64>() * (w_low + w_high) < w_low {
        // log-uniform on (c, 1], accept with e^{-(y - c)}
        loop {
            let y = c * (rng.random::<f64>() * -c.ln()).exp();
            if rng.random::<f64>() < (c - y).exp() {
                return y;
            }
        }
    }
    // split + Exp(1), accept with split / y
    loop {
        let e: f64 = Exp1.sample(rng);
        let y = split + e;
        if rng.random::<f64>() * y < split {
            return y;
        }
    }
}

/// Jumps of γ on `[0, r]` with size above `epsilon`: a Poisson number with
/// mean `r κ E1(η ε)`, conditioned to be at least one, with i.i.d. uniform
/// times and sizes from the normalized Lévy measure restricted to `(ε, ∞)`.
pub fn sample_bridge_jumps<R: Rng + ?Sized>(
    r: f64,
    epsilon: f64,
    max_expected_jumps: f64,
    params: &ProcessParams,
    rng: &mut R,
) -> Result<JumpSet> {
    check_length(r)?;
    params.validate()?;
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(invalid("jump sampler", format!("epsilon {epsilon} must be positive")));
    }
    let c = params.eta * epsilon;
    let tail = e1_unchecked(c);
    let expected_count = r * params.kappa * tail;
    if !(expected_count <= max_expected_jumps) {
        return Err(invalid(
            "jump sampler",
            format!("expected jump count {expected_count:e} exceeds cap {max_expected_jumps:e}"),
        ));
    }
    let (w_low, w_high) = if c < 1.0 {
        let e1_one = e1_unchecked(1.0);
        (tail - e1_one, e1_one)
    } else {
        (0.0, tail)
    };
    let poisson = Poisson::new(expected_count).map_err(|e| invalid("jump sampler", e.to_string()))?;
    let n = loop {
        let n: f64 = poisson.sample(rng);
        if n >= 1.0 {
            break n as usize;
        }
    };
    let mut jumps: Vec<(f64, f64)> = (0..n)
        .map(|_| {
            let size = exp_over_y(c, w_low, w_high, rng) / params.eta;
            let time = rng.random::<f64>() * r;
            (size, time)
        })
        .collect();
    jumps.sort_by(|a, b| b.0.total_cmp(&a.0));
    let (sizes, times) = jumps.into_iter().unzip();
    Ok(JumpSet {
        sizes,
        times,
        length: r,
        epsilon,
        expected_count,
        truncated_mass: r * params.kappa * (-(-c).exp_m1()) / params.eta,
    })
}

/// Fixed-length bridge on `grid ∪ {r}` with the chosen algorithm.
pub fn sample_bridge<R: Rng + ?Sized>(
    sampler: Sampler,
    grid: &[f64],
    r: f64,
    params: &ProcessParams,
    rng: &mut R,
) -> Result<Path> {
    match sampler {
        Sampler::Normalized => sample_bridge_normalized(grid, r, params, rng),
        Sampler::Markov => sample_bridge_markov(grid, r, params, rng),
        Sampler::Jumps {
            epsilon,
            max_expected_jumps,
        } => sample_bridge_jumps(r, epsilon, max_expected_jumps, params, rng)?.to_path(grid, params.endpoint_a),
    }
}

/// Restricts a bridge sampled on `grid ∪ {r}` back to the recorded range:
/// `r` is kept only when it lies inside the grid's span.
fn clip_to_grid(mut path: Path, grid: &[f64]) -> Path {
    let end = *grid.last().expect("grid is nonempty");
    let keep = path.times.partition_point(|&t| t <= end);
    path.times.truncate(keep);
    path.values.truncate(keep);
    path
}

/// Random-length bridge `a γ_{t∧τ}/γ_τ` with τ drawn from `law` on `tau_rng`
/// and the driving process drawn on `path_rng`.
///
/// When τ falls strictly inside the grid it is inserted as a grid time.
pub fn sample_random_length_bridge<R: Rng + ?Sized, S: Rng + ?Sized>(
    sampler: Sampler,
    grid: &[f64],
    law: &MixingLaw,
    params: &ProcessParams,
    tau_rng: &mut R,
    path_rng: &mut S,
) -> Result<(f64, Path)> {
    let tau = law.sample_tau(tau_rng);
    let path = sample_bridge(sampler, grid, tau, params, path_rng)?;
    Ok((tau, clip_to_grid(path, grid)))
}

/// `P(U^τ <= t) = F(t) + t E[(1/τ) 1{τ > t}]` for a jump time of the
/// random-length bridge.
pub fn jump_time_cdf(law: &MixingLaw, t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    let tail = law.integrate_tail(t, |r| 1.0 / r).expect("locations are positive");
    (law.cdf(t) + t * tail).clamp(0.0, 1.0)
}

/// `γ_t − ∫_0^t (γ_r − γ_s)/(r − s) ds` along a gamma path observed on a grid
/// ending at `r`, by the trapezoid rule with the left value on the last step.
pub fn gamma_bridge_martingale(path: &Path) -> Vec<f64> {
    let n = path.times.len();
    let r = path.times[n - 1];
    let g_r = path.values[n - 1];
    let drift = |i: usize| (g_r - path.values[i]) / (r - path.times[i]);
    let mut out = Vec::with_capacity(n);
    out.push(path.values[0]);
    let mut integral = 0.0;
    for i in 1..n {
        let h = path.times[i] - path.times[i - 1];
        integral += if i == n - 1 {
            h * drift(i - 1)
        } else {
            0.5 * h * (drift(i - 1) + drift(i))
        };
        out.push(path.values[i] - integral);
    }
    out
}

/// One random-length bridge and its hidden length.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BridgeSample {
    pub tau: f64,
    pub path: Path,
}

/// Everything needed to simulate an ensemble of random-length bridges.
#[derive(Debug, Clone)]
pub struct EnsembleSpec<'a> {
    pub grid: &'a [f64],
    pub law: &'a MixingLaw,
    pub params: ProcessParams,
    pub sampler: Sampler,
}

/// Streams for path `index`: τ on the `Tau` stream, the process on `Path`.
pub fn path_streams(seed: u64, index: u64) -> (Stream, Stream) {
    (stream(seed, Purpose::Tau, index), stream(seed, Purpose::Path, index))
}

/// Simulates paths `0..n` in parallel; the result depends on `(seed, n)` only.
pub fn simulate_ensemble(spec: &EnsembleSpec<'_>, seed: u64, n: usize) -> Result<Vec<BridgeSample>> {
    check_grid(spec.grid)?;
    spec.params.validate()?;
    (0..n as u64)
        .into_par_iter()
        .map(|i| {
            let (mut tau_rng, mut path_rng) = path_streams(seed, i);
            let (tau, path) =
                sample_random_length_bridge(spec.sampler, spec.grid, spec.law, &spec.params, &mut tau_rng, &mut path_rng)?;
            Ok(BridgeSample { tau, path })
        })
        .collect()
}

/// Writes `path_id,time,value` rows.
pub fn write_paths_csv<W: Write>(out: &mut W, paths: &[BridgeSample]) -> io::Result<()> {
    writeln!(out, "path_id,time,value")?;
    for (id, s) in paths.iter().enumerate() {
        for (t, v) in s.path.times.iter().zip(&s.path.values) {
            writeln!(out, "{id},{t},{v}")?;
        }
    }
    Ok(())
}
