//! The prior law of the random length τ.
//!
//! A [`MixingLaw`] is a finite measure on `(0, ∞)` made of point atoms plus an
//! optional gridded part standing in for an absolutely continuous density. The
//! grid is a quadrature rule fixed at construction: each node carries the
//! probability of its cell and sits at the cell's conditional mean. Every
//! integral against the law is then a finite sum, posteriors are reweightings
//! of the same nodes, and the sampler draws from exactly the measure that the
//! analytic formulas integrate against.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::specfun::{lower_gamma_unchecked, regularized_lower_gamma};

/// Smallest admissible location of τ.
pub const MIN_LOCATION: f64 = 1e-9;

/// Tolerance on total mass.
pub const MASS_TOLERANCE: f64 = 1e-12;

/// Largest prior mass allowed beyond a declared truncation point.
pub const MAX_TRUNCATED_MASS: f64 = 1e-6;

pub const DEFAULT_GRID_NODES: usize = 512;

/// Ratio between the truncation point and the upper end of the first cell
/// of a geometric grid.
const FIRST_CELL_FRACTION: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub location: f64,
    pub weight: f64,
}

/// Quadrature representation of the continuous part of the law.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GriddedDensity {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    /// Upper end of the represented support, when the source law was unbounded.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truncation: Option<f64>,
    /// Prior mass beyond `truncation`, removed at construction.
    #[serde(default)]
    pub truncated_mass: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct MixingLawData {
    atoms: Vec<Atom>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    density: Option<GriddedDensity>,
}

/// The law of τ. Immutable after construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MixingLawData", into = "MixingLawData")]
pub struct MixingLaw {
    atoms: Vec<Atom>,
    density: Option<GriddedDensity>,
    // Merged support, sorted by location, with running sums of weights.
    locations: Vec<f64>,
    weights: Vec<f64>,
    cumulative: Vec<f64>,
}

impl TryFrom<MixingLawData> for MixingLaw {
    type Error = Error;

    fn try_from(data: MixingLawData) -> Result<Self> {
        MixingLaw::from_parts(data.atoms, data.density)
    }
}

impl From<MixingLaw> for MixingLawData {
    fn from(law: MixingLaw) -> Self {
        MixingLawData {
            atoms: law.atoms,
            density: law.density,
        }
    }
}

impl MixingLaw {
    /// Builds a law from atoms and an optional gridded part, checking every
    /// invariant: positive locations, strictly sorted atoms, unit total mass.
    pub fn from_parts(atoms: Vec<Atom>, density: Option<GriddedDensity>) -> Result<Self> {
        for (i, a) in atoms.iter().enumerate() {
            if !(a.location.is_finite() && a.location >= MIN_LOCATION) {
                return Err(invalid(
                    "mixing law",
                    format!("atom {i} at {} is not >= {MIN_LOCATION}", a.location),
                ));
            }
            if !(a.weight > 0.0 && a.weight <= 1.0 + MASS_TOLERANCE) {
                return Err(invalid(
                    "mixing law",
                    format!("atom {i} weight {} not in (0, 1]", a.weight),
                ));
            }
        }
        if atoms.windows(2).any(|w| w[0].location >= w[1].location) {
            return Err(invalid("mixing law", "atom locations must be strictly increasing"));
        }
        if let Some(d) = &density {
            if d.nodes.len() != d.weights.len() {
                return Err(invalid("mixing law", "grid nodes and weights differ in length"));
            }
            if d.nodes.windows(2).any(|w| w[0] >= w[1]) {
                return Err(invalid("mixing law", "grid nodes must be strictly increasing"));
            }
            if let Some(&first) = d.nodes.first() {
                if !(first.is_finite() && first >= MIN_LOCATION) {
                    return Err(invalid("mixing law", format!("grid node {first} is not >= {MIN_LOCATION}")));
                }
            }
            if d.nodes.iter().any(|x| !x.is_finite()) {
                return Err(invalid("mixing law", "grid nodes must be finite"));
            }
            if d.weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
                return Err(invalid("mixing law", "grid weights must be finite and nonnegative"));
            }
        }
        let mut merged: Vec<(f64, f64)> = atoms.iter().map(|a| (a.location, a.weight)).collect();
        if let Some(d) = &density {
            merged.extend(d.nodes.iter().copied().zip(d.weights.iter().copied()));
        }
        merged.sort_by(|a, b| a.0.total_cmp(&b.0));
        let total = neumaier_sum(merged.iter().map(|p| p.1));
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return Err(invalid("mixing law", format!("total mass {total} differs from 1")));
        }
        let locations: Vec<f64> = merged.iter().map(|p| p.0).collect();
        let weights: Vec<f64> = merged.iter().map(|p| p.1).collect();
        let mut cumulative = Vec::with_capacity(weights.len());
        let mut acc = 0.0;
        for w in &weights {
            acc += w;
            cumulative.push(acc);
        }
        Ok(Self {
            atoms,
            density,
            locations,
            weights,
            cumulative,
        })
    }

    /// Point mass at `r`.
    pub fn dirac(r: f64) -> Result<Self> {
        Self::discrete(&[(r, 1.0)])
    }

    /// Finite discrete law from `(location, weight)` pairs in any order.
    pub fn discrete(points: &[(f64, f64)]) -> Result<Self> {
        let mut atoms: Vec<Atom> = points
            .iter()
            .map(|&(location, weight)| Atom { location, weight })
            .collect();
        atoms.sort_by(|a, b| a.location.total_cmp(&b.location));
        Self::from_parts(atoms, None)
    }

    /// Explicit grid; weights are normalised to unit mass.
    pub fn from_grid(nodes: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        let total: f64 = neumaier_sum(weights.iter().copied());
        if !(total > 0.0 && total.is_finite()) {
            return Err(invalid("mixing law", "grid weights must have positive finite sum"));
        }
        let weights = weights.into_iter().map(|w| w / total).collect();
        Self::from_parts(
            Vec::new(),
            Some(GriddedDensity {
                nodes,
                weights,
                truncation: None,
                truncated_mass: 0.0,
            }),
        )
    }

    /// Exponential(rate) on a geometric grid over `(0, truncation]`.
    pub fn exponential_gridded(rate: f64, truncation: f64, nodes: usize) -> Result<Self> {
        if !(rate > 0.0 && rate.is_finite()) {
            return Err(invalid("exponential law", format!("rate {rate} must be positive")));
        }
        let cdf = |x: f64| -(-rate * x).exp_m1();
        // ∫_0^x s rate e^{-rate s} ds
        let partial_mean = |x: f64| (1.0 - (1.0 + rate * x) * (-rate * x).exp()) / rate;
        gridded_from_cdf("exponential law", cdf, partial_mean, 0.0, truncation, nodes, true)
    }

    /// Uniform on `[low, high]` with `low >= 0`, equal-width cells.
    pub fn uniform_gridded(low: f64, high: f64, nodes: usize) -> Result<Self> {
        if !(low >= 0.0 && high > low && high.is_finite()) {
            return Err(invalid("uniform law", format!("need 0 <= low < high, got [{low}, {high}]")));
        }
        let width = high - low;
        let cdf = |x: f64| ((x - low) / width).clamp(0.0, 1.0);
        let partial_mean = |x: f64| {
            let c = x.clamp(low, high);
            (c * c - low * low) / (2.0 * width)
        };
        gridded_from_cdf("uniform law", cdf, partial_mean, low, high, nodes, false)
    }

    /// Gamma(shape, rate) on a geometric grid over `(0, truncation]`.
    pub fn gamma_gridded(shape: f64, rate: f64, truncation: f64, nodes: usize) -> Result<Self> {
        if !(shape > 0.0 && rate > 0.0 && shape.is_finite() && rate.is_finite()) {
            return Err(invalid("gamma law", format!("need shape, rate > 0, got {shape}, {rate}")));
        }
        regularized_lower_gamma(shape, 1.0)?;
        let cdf = |x: f64| lower_gamma_unchecked(shape, rate * x);
        // E[X; X <= x] = (shape / rate) P(shape + 1, rate x)
        let partial_mean = |x: f64| shape / rate * lower_gamma_unchecked(shape + 1.0, rate * x);
        gridded_from_cdf("gamma law", cdf, partial_mean, 0.0, truncation, nodes, true)
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn density_part(&self) -> Option<&GriddedDensity> {
        self.density.as_ref()
    }

    /// Total mass as recomputed from the stored weights.
    pub fn total_mass(&self) -> f64 {
        neumaier_sum(self.weights.iter().copied())
    }

    /// Merged support points `(location, weight)` in increasing location.
    pub fn points(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.locations.iter().copied().zip(self.weights.iter().copied())
    }

    pub fn len(&self) -> usize {
        self.locations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.locations.is_empty()
    }

    pub fn min_location(&self) -> f64 {
        self.locations[0]
    }

    pub fn max_location(&self) -> f64 {
        *self.locations.last().expect("a law has at least one point")
    }

    /// Index of the first support point strictly beyond `t`.
    fn first_beyond(&self, t: f64) -> usize {
        self.locations.partition_point(|&x| x <= t)
    }

    /// `F(t) = P(τ <= t)`.
    pub fn cdf(&self, t: f64) -> f64 {
        let k = self.first_beyond(t);
        if k == 0 {
            0.0
        } else {
            self.cumulative[k - 1].clamp(0.0, 1.0)
        }
    }

    /// `P(τ > t)`, summed over the tail directly rather than as `1 - F(t)`.
    pub fn tail_mass(&self, t: f64) -> f64 {
        let k = self.first_beyond(t);
        neumaier_sum(self.weights[k..].iter().copied()).clamp(0.0, 1.0)
    }

    /// `∫_{(t, ∞)} f(r) P_τ(dr)`.
    pub fn integrate_tail<F: Fn(f64) -> f64>(&self, t: f64, f: F) -> Result<f64> {
        let k = self.first_beyond(t);
        let mut acc = Neumaier::default();
        for (&r, &w) in self.locations[k..].iter().zip(&self.weights[k..]) {
            let v = f(r);
            if !v.is_finite() {
                return Err(Error::NonFinite { node: r, value: v });
            }
            acc.add(v * w);
        }
        Ok(acc.total())
    }

    /// `∫_{(0, t]} f(r) P_τ(dr)`.
    pub fn integrate_head<F: Fn(f64) -> f64>(&self, t: f64, f: F) -> Result<f64> {
        let k = self.first_beyond(t);
        let mut acc = Neumaier::default();
        for (&r, &w) in self.locations[..k].iter().zip(&self.weights[..k]) {
            let v = f(r);
            if !v.is_finite() {
                return Err(Error::NonFinite { node: r, value: v });
            }
            acc.add(v * w);
        }
        Ok(acc.total())
    }

    /// `E[τ^α]`.
    pub fn tail_moment(&self, alpha: f64) -> f64 {
        neumaier_sum(self.points().map(|(r, w)| w * r.powf(alpha)))
    }

    /// Draws τ by inversion of the cumulative weights.
    pub fn sample_tau<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let total = *self.cumulative.last().expect("a law has at least one point");
        let u: f64 = rng.random::<f64>() * total;
        let k = self.cumulative.partition_point(|&c| c <= u);
        self.locations[k.min(self.locations.len() - 1)]
    }

    /// New law with each point's weight multiplied by `factor(location)`,
    /// points given a zero factor dropped, and the result renormalised.
    ///
    /// The atom / grid split is preserved.
    pub(crate) fn reweighted<F: Fn(f64) -> f64>(&self, factor: F) -> Result<Self> {
        let atoms: Vec<Atom> = self
            .atoms
            .iter()
            .map(|a| Atom {
                location: a.location,
                weight: a.weight * factor(a.location),
            })
            .filter(|a| a.weight > 0.0)
            .collect();
        let density = self.density.as_ref().map(|d| {
            let (nodes, weights): (Vec<f64>, Vec<f64>) = d
                .nodes
                .iter()
                .zip(&d.weights)
                .map(|(&x, &w)| (x, w * factor(x)))
                .filter(|&(_, w)| w > 0.0)
                .unzip();
            GriddedDensity {
                nodes,
                weights,
                truncation: d.truncation,
                truncated_mass: d.truncated_mass,
            }
        });
        let total = neumaier_sum(
            atoms
                .iter()
                .map(|a| a.weight)
                .chain(density.iter().flat_map(|d| d.weights.iter().copied())),
        );
        if !(total > 0.0 && total.is_finite()) {
            return Err(Error::Precondition("reweighted law has no mass".into()));
        }
        let atoms = atoms
            .into_iter()
            .map(|a| Atom {
                location: a.location,
                weight: a.weight / total,
            })
            .collect();
        let density = density.and_then(|mut d| {
            if d.nodes.is_empty() {
                return None;
            }
            d.weights.iter_mut().for_each(|w| *w /= total);
            Some(d)
        });
        Self::from_parts(atoms, density)
    }
}

/// Builds a gridded law from a CDF and partial first moment on `[low, high]`.
///
/// With `geometric` the first cell is `(low, high * FIRST_CELL_FRACTION]` and
/// the remaining cells are geometrically spaced; otherwise cells are equal.
fn gridded_from_cdf<C, M>(
    what: &'static str,
    cdf: C,
    partial_mean: M,
    low: f64,
    high: f64,
    nodes: usize,
    geometric: bool,
) -> Result<MixingLaw>
where
    C: Fn(f64) -> f64,
    M: Fn(f64) -> f64,
{
    if nodes < 2 {
        return Err(invalid(what, "need at least 2 grid nodes"));
    }
    if !(high.is_finite() && high > low && high > MIN_LOCATION) {
        return Err(invalid(what, format!("truncation {high} must be finite and above {low}")));
    }
    let beyond = 1.0 - cdf(high);
    if beyond >= MAX_TRUNCATED_MASS {
        return Err(invalid(
            what,
            format!("mass {beyond:e} beyond truncation {high} exceeds {MAX_TRUNCATED_MASS:e}"),
        ));
    }
    let edges: Vec<f64> = if geometric {
        let first = high * FIRST_CELL_FRACTION;
        let ratio = (high / first).powf(1.0 / (nodes - 1) as f64);
        let mut e = vec![low];
        e.extend((0..nodes).map(|i| if i == nodes - 1 { high } else { first * ratio.powi(i as i32) }));
        e
    } else {
        (0..=nodes)
            .map(|i| if i == nodes { high } else { low + (high - low) * i as f64 / nodes as f64 })
            .collect()
    };
    let mut grid_nodes = Vec::with_capacity(nodes);
    let mut grid_weights = Vec::with_capacity(nodes);
    for w in edges.windows(2) {
        let (a, b) = (w[0], w[1]);
        let mass = cdf(b) - cdf(a);
        if !(mass > 0.0) {
            continue;
        }
        let mean = (partial_mean(b) - partial_mean(a)) / mass;
        // Cancellation can push the conditional mean out of its cell.
        let lo_bound = a.max(MIN_LOCATION);
        let node = if mean > lo_bound && mean < b { mean } else { 0.5 * (lo_bound + b) };
        grid_nodes.push(node);
        grid_weights.push(mass);
    }
    let kept = neumaier_sum(grid_weights.iter().copied());
    grid_weights.iter_mut().for_each(|w| *w /= kept);
    MixingLaw::from_parts(
        Vec::new(),
        Some(GriddedDensity {
            nodes: grid_nodes,
            weights: grid_weights,
            truncation: Some(high),
            truncated_mass: beyond.max(0.0),
        }),
    )
}

/// Declarative description of a mixing law, as found in configuration files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum LawSpec {
    Dirac {
        r: f64,
    },
    Discrete {
        atoms: Vec<(f64, f64)>,
    },
    Exponential {
        rate: f64,
        truncation: f64,
        #[serde(default = "default_nodes")]
        nodes: usize,
    },
    Uniform {
        low: f64,
        high: f64,
        #[serde(default = "default_nodes")]
        nodes: usize,
    },
    Gamma {
        shape: f64,
        rate: f64,
        truncation: f64,
        #[serde(default = "default_nodes")]
        nodes: usize,
    },
    Grid {
        nodes: Vec<f64>,
        weights: Vec<f64>,
    },
}

fn default_nodes() -> usize {
    DEFAULT_GRID_NODES
}

impl LawSpec {
    pub fn build(&self) -> Result<MixingLaw> {
        match self {
            LawSpec::Dirac { r } => MixingLaw::dirac(*r),
            LawSpec::Discrete { atoms } => MixingLaw::discrete(atoms),
            LawSpec::Exponential { rate, truncation, nodes } => {
                MixingLaw::exponential_gridded(*rate, *truncation, *nodes)
            }
            LawSpec::Uniform { low, high, nodes } => MixingLaw::uniform_gridded(*low, *high, *nodes),
            LawSpec::Gamma {
                shape,
                rate,
                truncation,
                nodes,
            } => MixingLaw::gamma_gridded(*shape, *rate, *truncation, *nodes),
            LawSpec::Grid { nodes, weights } => MixingLaw::from_grid(nodes.clone(), weights.clone()),
        }
    }
}

/// Compensated summation.
#[derive(Debug, Default, Clone, Copy)]
pub(crate) struct Neumaier {
    sum: f64,
    comp: f64,
}

impl Neumaier {
    pub(crate) fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub(crate) fn total(&self) -> f64 {
        self.sum + self.comp
    }
}

pub(crate) fn neumaier_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut acc = Neumaier::default();
    for v in values {
        acc.add(v);
    }
    acc.total()
}
