//! Finite carriers (grids and samples) and labeled partitions over them.
//!
//! A carrier is the discrete stand-in for ℝ^d on which partitions and their
//! distances are computed: grid atoms weighted by quadrature mass, or sample
//! atoms weighted uniformly. A [`Partition`] labels every atom with a cluster
//! id or leaves it unassigned (basin-boundary atoms).

use std::str::FromStr;

use nalgebra::DVector;

use crate::density::{CriticalPoint, Density, Model};
use crate::error::{Error, Result};

/// Tolerance on total grid-carrier mass after renormalization.
const GRID_MASS_TOL: f64 = 1e-9;

/// One axis of a rectangular grid: `steps` evenly spaced points covering
/// `[lo, hi]` inclusive.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct GridSpec {
    pub lo: f64,
    pub hi: f64,
    pub steps: usize,
}

impl GridSpec {
    pub fn new(lo: f64, hi: f64, steps: usize) -> Result<Self> {
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::Input(format!("grid bounds [{lo}, {hi}] invalid")));
        }
        if steps < 2 {
            return Err(Error::Input(format!("grid needs at least 2 steps, got {steps}")));
        }
        Ok(GridSpec { lo, hi, steps })
    }

    /// Spacing between adjacent points.
    pub fn step(&self) -> f64 {
        (self.hi - self.lo) / (self.steps - 1) as f64
    }

    pub fn points(&self) -> Vec<f64> {
        let h = self.step();
        (0..self.steps).map(|i| self.lo + i as f64 * h).collect()
    }
}

impl FromStr for GridSpec {
    type Err = Error;

    /// Parse `"lo:hi:steps"`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err(Error::Input(format!(
                "grid spec '{s}' must be lo:hi:steps"
            )));
        }
        let lo: f64 = parts[0]
            .parse()
            .map_err(|_| Error::Input(format!("grid spec '{s}': bad lower bound")))?;
        let hi: f64 = parts[1]
            .parse()
            .map_err(|_| Error::Input(format!("grid spec '{s}': bad upper bound")))?;
        let steps: usize = parts[2]
            .parse()
            .map_err(|_| Error::Input(format!("grid spec '{s}': bad step count")))?;
        GridSpec::new(lo, hi, steps)
    }
}

/// How the carrier atoms were produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CarrierKind {
    /// Rectangular grid; atom weights are midpoint-quadrature masses,
    /// renormalized to total one.
    Grid,
    /// Sample points; every atom carries weight `1/n`.
    Sample,
}

/// Weighted atoms shared by one or more partitions.
#[derive(Debug, Clone, PartialEq)]
pub struct Carrier {
    locations: Vec<DVector<f64>>,
    weights: Vec<f64>,
    kind: CarrierKind,
}

impl Carrier {
    /// Rectangular grid carrier with midpoint-quadrature weights
    /// `f(x)·Πh_k`, renormalized to total mass one.
    pub fn grid(model: &Model, specs: &[GridSpec]) -> Result<Carrier> {
        if specs.is_empty() {
            return Err(Error::Input("grid needs at least one dimension".into()));
        }
        if specs.len() != model.dim() {
            return Err(Error::DimensionMismatch {
                expected: model.dim(),
                got: specs.len(),
            });
        }
        let axes: Vec<Vec<f64>> = specs.iter().map(|s| s.points()).collect();
        let cell_volume: f64 = specs.iter().map(|s| s.step()).product();
        let total_atoms: usize = axes.iter().map(|a| a.len()).product();
        // row-major strides: the last axis varies fastest
        let mut strides = vec![1usize; specs.len()];
        for k in (0..specs.len().saturating_sub(1)).rev() {
            strides[k] = strides[k + 1] * axes[k + 1].len();
        }
        let locations: Vec<DVector<f64>> = (0..total_atoms)
            .map(|flat| {
                DVector::from_fn(specs.len(), |k, _| {
                    axes[k][(flat / strides[k]) % axes[k].len()]
                })
            })
            .collect();
        Self::finish_grid(model, locations, cell_volume)
    }

    fn finish_grid(
        model: &Model,
        locations: Vec<DVector<f64>>,
        cell_volume: f64,
    ) -> Result<Carrier> {
        let mut weights: Vec<f64> = locations
            .iter()
            .map(|x| model.density(x).map(|f| f * cell_volume))
            .collect::<Result<_>>()?;
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) {
            return Err(Error::Numerical(
                "grid carrier has zero total mass; grid misses the density support".into(),
            ));
        }
        for w in &mut weights {
            *w /= total;
        }
        Ok(Carrier {
            locations,
            weights,
            kind: CarrierKind::Grid,
        })
    }

    /// Sample carrier with uniform weights `1/n`.
    pub fn sample(points: Vec<DVector<f64>>) -> Result<Carrier> {
        if points.is_empty() {
            return Err(Error::Input("sample carrier needs at least one point".into()));
        }
        let w = 1.0 / points.len() as f64;
        Ok(Carrier {
            weights: vec![w; points.len()],
            locations: points,
            kind: CarrierKind::Sample,
        })
    }

    /// Carrier with explicit weights (deserialization and tests).
    pub fn from_parts(
        locations: Vec<DVector<f64>>,
        weights: Vec<f64>,
        kind: CarrierKind,
    ) -> Result<Carrier> {
        if locations.is_empty() {
            return Err(Error::Input("carrier needs at least one atom".into()));
        }
        if locations.len() != weights.len() {
            return Err(Error::Input(format!(
                "carrier has {} locations but {} weights",
                locations.len(),
                weights.len()
            )));
        }
        if weights.iter().any(|w| *w < 0.0 || !w.is_finite()) {
            return Err(Error::Input("carrier weights must be nonnegative".into()));
        }
        let dim = locations[0].len();
        if locations.iter().any(|p| p.len() != dim) {
            return Err(Error::Input("carrier atoms must share one dimension".into()));
        }
        if kind == CarrierKind::Grid {
            let total: f64 = weights.iter().sum();
            if (total - 1.0).abs() > GRID_MASS_TOL {
                return Err(Error::Input(format!(
                    "grid carrier mass {total} differs from 1 beyond {GRID_MASS_TOL}"
                )));
            }
        }
        Ok(Carrier {
            locations,
            weights,
            kind,
        })
    }

    pub fn len(&self) -> usize {
        self.locations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.locations.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.locations[0].len()
    }

    pub fn kind(&self) -> CarrierKind {
        self.kind
    }

    pub fn locations(&self) -> &[DVector<f64>] {
        &self.locations
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Bounding-box diagonal; the length scale for displacement tolerances
    /// and mode merge radii.
    pub fn diameter(&self) -> f64 {
        let d = self.dim();
        let mut lo = vec![f64::INFINITY; d];
        let mut hi = vec![f64::NEG_INFINITY; d];
        for p in &self.locations {
            for k in 0..d {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        lo.iter()
            .zip(&hi)
            .map(|(a, b)| (b - a) * (b - a))
            .sum::<f64>()
            .sqrt()
    }

    /// Exact equality of atoms and weights; partitions can only be compared
    /// over identical carriers.
    pub fn same_atoms(&self, other: &Carrier) -> bool {
        self.locations.len() == other.locations.len()
            && self.weights == other.weights
            && self.locations == other.locations
    }
}

/// A clustering of a carrier: every atom labeled with a cluster id or
/// left unassigned.
#[derive(Debug, Clone)]
pub struct Partition {
    carrier: Carrier,
    labels: Vec<Option<usize>>,
    /// Indexed by cluster id; the mode anchoring the cluster when known.
    clusters: Vec<Option<CriticalPoint>>,
}

impl Partition {
    pub fn new(
        carrier: Carrier,
        labels: Vec<Option<usize>>,
        clusters: Vec<Option<CriticalPoint>>,
    ) -> Result<Partition> {
        if labels.len() != carrier.len() {
            return Err(Error::Input(format!(
                "{} labels for {} atoms",
                labels.len(),
                carrier.len()
            )));
        }
        if let Some(bad) = labels.iter().flatten().find(|l| **l >= clusters.len()) {
            return Err(Error::Input(format!(
                "label {bad} has no entry in the cluster table (len {})",
                clusters.len()
            )));
        }
        Ok(Partition {
            carrier,
            labels,
            clusters,
        })
    }

    /// Partition with anonymous clusters inferred from the label vector.
    pub fn from_labels(carrier: Carrier, labels: Vec<Option<usize>>) -> Result<Partition> {
        let n_clusters = labels.iter().flatten().map(|l| l + 1).max().unwrap_or(0);
        Partition::new(carrier, labels, vec![None; n_clusters])
    }

    pub fn carrier(&self) -> &Carrier {
        &self.carrier
    }

    pub fn labels(&self) -> &[Option<usize>] {
        &self.labels
    }

    pub fn clusters(&self) -> &[Option<CriticalPoint>] {
        &self.clusters
    }

    pub fn n_clusters(&self) -> usize {
        self.clusters.len()
    }

    /// Total weight of unassigned atoms.
    pub fn unassigned_mass(&self) -> f64 {
        self.labels
            .iter()
            .zip(self.carrier.weights())
            .filter(|(l, _)| l.is_none())
            .map(|(_, w)| w)
            .sum()
    }

    /// Per-cluster probability mass.
    pub fn cluster_masses(&self) -> Vec<f64> {
        let mut masses = vec![0.0; self.clusters.len()];
        for (label, w) in self.labels.iter().zip(self.carrier.weights()) {
            if let Some(l) = label {
                masses[*l] += w;
            }
        }
        masses
    }

    /// Whether two partitions are the same up to a relabeling of cluster ids
    /// (exact comparison of label equivalence classes, unassigned respected).
    pub fn same_up_to_relabeling(&self, other: &Partition) -> bool {
        self.carrier.same_atoms(&other.carrier)
            && self.canonical_labels() == other.canonical_labels()
    }

    /// Labels renumbered in order of first appearance.
    pub fn canonical_labels(&self) -> Vec<Option<usize>> {
        let mut map: Vec<Option<usize>> = vec![None; self.clusters.len().max(1)];
        let mut next = 0usize;
        self.labels
            .iter()
            .map(|l| {
                l.map(|l| {
                    if map[l].is_none() {
                        map[l] = Some(next);
                        next += 1;
                    }
                    map[l].unwrap()
                })
            })
            .collect()
    }
}
