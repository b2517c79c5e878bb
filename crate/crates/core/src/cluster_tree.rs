//! Level sets, cluster trees, and local-minima partitions for univariate
//! densities on a grid.
//!
//! Raising the level λ from zero, a connected component of the level set
//! `{f ≥ λ}` splits exactly when λ crosses the value of a local minimum.
//! Recording those splits yields the cluster tree; its leaves coincide with
//! the connected components of the line minus the local-minimum points, which
//! is the direct formulation of the same partition. Both constructions are
//! provided and must agree atom for atom.

use nalgebra::DVector;

use crate::density::{Density, Model};
use crate::error::{Error, Result};
use crate::partition::{Carrier, CarrierKind, GridSpec, Partition};

/// Grid points for the default 1-D discretization.
pub const DEFAULT_GRID_POINTS: usize = 4096;

/// A univariate density tabulated on a uniform grid, with renormalized
/// midpoint-quadrature weights.
#[derive(Debug, Clone)]
pub struct DensityGrid1d {
    points: Vec<f64>,
    values: Vec<f64>,
    weights: Vec<f64>,
    step: f64,
}

impl DensityGrid1d {
    pub fn new(model: &Model, spec: GridSpec) -> Result<DensityGrid1d> {
        if model.dim() != 1 {
            return Err(Error::DimensionMismatch {
                expected: 1,
                got: model.dim(),
            });
        }
        let points = spec.points();
        let values = points
            .iter()
            .map(|&x| model.density(&DVector::from_vec(vec![x])))
            .collect::<Result<Vec<f64>>>()?;
        Self::from_values(points, values)
    }

    /// Tabulate over the model's own default range: component means (or data)
    /// extended by four of the largest marginal standard deviations.
    pub fn with_default_grid(model: &Model) -> Result<DensityGrid1d> {
        Self::new(model, default_grid_spec(model)?)
    }

    /// Build from precomputed density values on a uniform grid.
    pub fn from_values(points: Vec<f64>, values: Vec<f64>) -> Result<DensityGrid1d> {
        if points.len() < 3 {
            return Err(Error::Input("1-D grid needs at least 3 points".into()));
        }
        if points.len() != values.len() {
            return Err(Error::Input("grid points and values differ in length".into()));
        }
        let step = points[1] - points[0];
        if !(step > 0.0) {
            return Err(Error::Input("grid points must be strictly increasing".into()));
        }
        for w in points.windows(2) {
            if ((w[1] - w[0]) - step).abs() > 1e-9 * step.max(1.0) {
                return Err(Error::Input("grid must be uniformly spaced".into()));
            }
        }
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::Input("density values must be finite and nonnegative".into()));
        }
        let total: f64 = values.iter().map(|v| v * step).sum();
        if !(total > 0.0) {
            return Err(Error::Numerical("grid misses the density support".into()));
        }
        let weights = values.iter().map(|v| v * step / total).collect();
        Ok(DensityGrid1d {
            points,
            values,
            weights,
            step,
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    /// The grid atoms as a carrier for partition distances.
    pub fn carrier(&self) -> Carrier {
        Carrier::from_parts(
            self.points
                .iter()
                .map(|&x| DVector::from_vec(vec![x]))
                .collect(),
            self.weights.clone(),
            CarrierKind::Grid,
        )
        .expect("grid weights renormalized at construction")
    }

    /// Connected components of `{f ≥ λ}` with their probability content.
    pub fn level_set(&self, lambda: f64) -> Result<LevelSet1D> {
        if !(lambda >= 0.0) {
            return Err(Error::Input(format!("level must be nonnegative, got {lambda}")));
        }
        let mut components = Vec::new();
        let mut content = 0.0;
        let mut run_start: Option<usize> = None;
        for i in 0..=self.len() {
            let inside = i < self.len() && self.values[i] >= lambda;
            match (inside, run_start) {
                (true, None) => run_start = Some(i),
                (false, Some(a)) => {
                    components.push((self.points[a], self.points[i - 1]));
                    content += self.weights[a..i].iter().sum::<f64>();
                    run_start = None;
                }
                _ => {}
            }
        }
        Ok(LevelSet1D {
            level: lambda,
            components,
            content,
        })
    }

    /// Largest λ whose level set still holds probability mass above `p`,
    /// found by monotone bisection on the quadrature content.
    pub fn coverage_level(&self, p: f64) -> Result<f64> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::Input(format!("coverage must lie in (0,1), got {p}")));
        }
        let max_value = self.values.iter().cloned().fold(0.0f64, f64::max);
        let mut lo = 0.0;
        let mut hi = max_value * (1.0 + 1e-12) + f64::MIN_POSITIVE;
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if self.level_set(mid)?.content > p {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    /// Maximum number of simultaneous level-set components over all levels
    /// (scanning every distinct tabulated value covers every possible set).
    pub fn max_component_count(&self) -> Result<usize> {
        let mut levels = self.values.clone();
        levels.sort_by(|a, b| a.partial_cmp(b).unwrap());
        levels.dedup();
        let mut max_count = 0;
        for lambda in levels {
            max_count = max_count.max(self.level_set(lambda)?.components.len());
        }
        Ok(max_count)
    }
}

/// A λ-level set of a 1-D density: disjoint closed intervals.
#[derive(Debug, Clone)]
pub struct LevelSet1D {
    pub level: f64,
    pub components: Vec<(f64, f64)>,
    pub content: f64,
}

/// Node of the 1-D cluster tree.
#[derive(Debug, Clone)]
pub struct TreeNode {
    /// Interval covered by this node (grid-point coordinates).
    pub interval: (f64, f64),
    /// Inclusive grid-index range of the node's atoms.
    pub atom_range: (usize, usize),
    /// Level-set component (core) that seeded this node at its parent's
    /// split level; `None` for the root.
    pub core: Option<(f64, f64)>,
    /// Density level at which this node splits; `None` for leaves.
    pub split_level: Option<f64>,
    /// Refined location of the local minimum where this node splits.
    pub split_point: Option<f64>,
    pub children: Vec<TreeNode>,
}

impl TreeNode {
    fn leaf(interval: (f64, f64), atom_range: (usize, usize), core: Option<(f64, f64)>) -> Self {
        TreeNode {
            interval,
            atom_range,
            core,
            split_level: None,
            split_point: None,
            children: Vec::new(),
        }
    }

    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }

    fn leaves_into<'a>(&'a self, out: &mut Vec<&'a TreeNode>) {
        if self.is_leaf() {
            out.push(self);
        } else {
            for child in &self.children {
                child.leaves_into(out);
            }
        }
    }
}

/// Cluster tree of a univariate density with split metadata.
#[derive(Debug, Clone)]
pub struct ClusterTree1d {
    pub root: TreeNode,
    /// Refined local-minimum locations, ascending.
    pub split_points: Vec<f64>,
    /// Split levels in the order the splits occur (ascending density).
    pub split_levels: Vec<f64>,
}

impl ClusterTree1d {
    /// Final clusters, left to right.
    pub fn leaves(&self) -> Vec<&TreeNode> {
        let mut out = Vec::new();
        self.root.leaves_into(&mut out);
        out.sort_by(|a, b| a.atom_range.0.cmp(&b.atom_range.0));
        out
    }
}

/// A detected interior local minimum of the tabulated density.
///
/// `start..=end` is the grid run attaining the minimum: a single atom in
/// general, two atoms when the true minimum falls exactly between grid
/// points placed symmetrically around it (their values then collide in f64).
#[derive(Debug, Clone, Copy)]
struct Minimum {
    start: usize,
    end: usize,
    /// Derivative-bisection refinement of the location (grid point if the
    /// model cannot bracket).
    location: f64,
    /// Density at the refined location.
    level: f64,
}

/// Detect interior local minima: maximal equal-value runs with both outer
/// neighbors strictly greater. Flat extremum runs longer than two atoms mean
/// the density is not numerically Morse on this grid and raise a
/// degenerate-density error naming the interval.
fn detect_minima(grid: &DensityGrid1d) -> Result<Vec<(usize, usize)>> {
    let v = grid.values();
    let n = v.len();
    let mut runs = Vec::new();
    let mut start = 0usize;
    for i in 0..n {
        if i + 1 < n && v[i + 1] == v[start] {
            continue;
        }
        // run start..=i of equal values
        let interior_min =
            start > 0 && i < n - 1 && v[start - 1] > v[start] && v[i + 1] > v[i];
        let interior_max =
            start > 0 && i < n - 1 && v[start - 1] < v[start] && v[i + 1] < v[i];
        if i - start + 1 >= 3 && (interior_min || interior_max) {
            return Err(Error::DegenerateDensity {
                lo: grid.points()[start],
                hi: grid.points()[i],
            });
        }
        if interior_min {
            runs.push((start, i));
        }
        start = i + 1;
    }
    Ok(runs)
}

fn refine_minima(
    model: &Model,
    grid: &DensityGrid1d,
    runs: &[(usize, usize)],
) -> Result<Vec<Minimum>> {
    let slope = |x: f64| -> Result<f64> {
        Ok(model.gradient(&DVector::from_vec(vec![x]))?[0])
    };
    let mut minima = Vec::with_capacity(runs.len());
    for &(start, end) in runs {
        let (mut lo, mut hi) = (grid.points()[start - 1], grid.points()[end + 1]);
        let (slo, shi) = (slope(lo)?, slope(hi)?);
        let location = if slo < 0.0 && shi > 0.0 {
            for _ in 0..100 {
                let mid = 0.5 * (lo + hi);
                if slope(mid)? < 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            0.5 * (lo + hi)
        } else {
            0.5 * (grid.points()[start] + grid.points()[end])
        };
        minima.push(Minimum {
            start,
            end,
            location,
            level: model.density(&DVector::from_vec(vec![location]))?,
        });
    }
    // splits must occur at distinct critical values
    let mut levels: Vec<f64> = minima.iter().map(|m| m.level).collect();
    levels.sort_by(|a, b| a.partial_cmp(b).unwrap());
    if levels.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::Numerical(
            "two local minima share a critical value; cluster tree splits are ambiguous".into(),
        ));
    }
    Ok(minima)
}

/// Maximal run of grid values strictly above `threshold` adjacent to `from`,
/// scanning in `dir` (+1/-1) while staying inside `range`.
fn core_run(
    grid: &DensityGrid1d,
    threshold: f64,
    from: usize,
    dir: isize,
    range: (usize, usize),
) -> (usize, usize) {
    let mut idx = from as isize;
    loop {
        let next = idx + dir;
        if next < range.0 as isize || next > range.1 as isize {
            break;
        }
        if grid.values()[next as usize] <= threshold {
            break;
        }
        idx = next;
    }
    if dir < 0 {
        (idx as usize, from)
    } else {
        (from, idx as usize)
    }
}

/// Build the cluster tree: starting from the whole line, raise the level and
/// split a component in two each time the level crosses a local minimum; the
/// level-set cores absorb their fluff on each side.
///
/// A split at a single minimum atom leaves that atom unassigned; a split
/// falling exactly between two tied atoms puts one on each side.
pub fn build_tree(model: &Model, grid: &DensityGrid1d) -> Result<ClusterTree1d> {
    let runs = detect_minima(grid)?;
    let mut minima = refine_minima(model, grid, &runs)?;
    minima.sort_by(|a, b| a.level.partial_cmp(&b.level).unwrap());

    let n = grid.len();
    let mut root = TreeNode::leaf((grid.points()[0], grid.points()[n - 1]), (0, n - 1), None);
    let mut split_levels = Vec::with_capacity(minima.len());
    for min in &minima {
        let node = find_leaf_containing(&mut root, min.start);
        let node = node.ok_or_else(|| {
            Error::Numerical("local minimum fell outside every leaf interval".into())
        })?;
        let (lo, hi) = node.atom_range;
        if min.start <= lo || min.end >= hi {
            return Err(Error::Numerical(
                "local minimum on a leaf boundary; grid too coarse".into(),
            ));
        }
        let threshold = grid.values()[min.start];
        let left_core = core_run(grid, threshold, min.start - 1, -1, (lo, hi));
        let right_core = core_run(grid, threshold, min.end + 1, 1, (lo, hi));
        let (left_end, right_start) = if min.start == min.end {
            (min.start - 1, min.end + 1)
        } else {
            (min.start, min.end)
        };
        node.split_level = Some(min.level);
        node.split_point = Some(min.location);
        node.children = vec![
            TreeNode::leaf(
                (grid.points()[lo], grid.points()[left_end]),
                (lo, left_end),
                Some((grid.points()[left_core.0], grid.points()[left_core.1])),
            ),
            TreeNode::leaf(
                (grid.points()[right_start], grid.points()[hi]),
                (right_start, hi),
                Some((grid.points()[right_core.0], grid.points()[right_core.1])),
            ),
        ];
        split_levels.push(min.level);
    }
    minima.sort_by(|a, b| a.location.partial_cmp(&b.location).unwrap());
    Ok(ClusterTree1d {
        root,
        split_points: minima.iter().map(|m| m.location).collect(),
        split_levels,
    })
}

fn find_leaf_containing(node: &mut TreeNode, index: usize) -> Option<&mut TreeNode> {
    if index < node.atom_range.0 || index > node.atom_range.1 {
        return None;
    }
    if node.is_leaf() {
        return Some(node);
    }
    for child in &mut node.children {
        if index >= child.atom_range.0 && index <= child.atom_range.1 {
            return find_leaf_containing(child, index);
        }
    }
    None
}

/// Partition of the grid into the connected components of the line minus the
/// local-minimum points: the direct formulation of the cluster-tree leaves.
///
/// The minimum atoms themselves stay unassigned (either side would do, and
/// the choice makes no difference).
pub fn minima_partition(model: &Model, grid: &DensityGrid1d) -> Result<Partition> {
    let runs = detect_minima(grid)?;
    refine_minima(model, grid, &runs)?;
    let mut labels: Vec<Option<usize>> = Vec::with_capacity(grid.len());
    let mut cluster = 0usize;
    let mut boundary = runs.iter().peekable();
    let mut i = 0usize;
    while i < grid.len() {
        match boundary.peek() {
            Some(&&(start, end)) if i == start => {
                if start == end {
                    // split exactly on an atom: unassigned
                    labels.push(None);
                    i += 1;
                } else {
                    // split between two tied atoms: one per side
                    labels.push(Some(cluster));
                    labels.push(Some(cluster + 1));
                    i += 2;
                }
                cluster += 1;
                boundary.next();
            }
            _ => {
                labels.push(Some(cluster));
                i += 1;
            }
        }
    }
    Partition::from_labels(grid.carrier(), labels)
}

/// Default tabulation range for a 1-D model: means (or data) extended by four
/// of the largest marginal standard deviations, `DEFAULT_GRID_POINTS` points.
pub fn default_grid_spec(model: &Model) -> Result<GridSpec> {
    if model.dim() != 1 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            got: model.dim(),
        });
    }
    let (centers, spread): (Vec<f64>, f64) = match model {
        Model::Mixture(m) => (
            m.means().iter().map(|mu| mu[0]).collect(),
            m.covariances()
                .iter()
                .map(|c| c[(0, 0)].sqrt())
                .fold(0.0f64, f64::max),
        ),
        Model::Kde(k) => (
            k.data().iter().map(|p| p[0]).collect(),
            k.bandwidth()[(0, 0)].sqrt(),
        ),
    };
    let lo = centers.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = centers.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    GridSpec::new(lo - 4.0 * spread, hi + 4.0 * spread, DEFAULT_GRID_POINTS)
}
