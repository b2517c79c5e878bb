//! Distances between clusterings over a shared carrier.
//!
//! All distances consume an [`OverlapTable`] of pairwise intersection masses
//! `P(C_i ∩ D_j)`. From it the symmetric-difference mass
//! `P(C_i △ D_j) = P(C_i) + P(D_j) − 2·P(C_i ∩ D_j)` drives:
//!
//! * the transfer distance: half the optimal-assignment sum after padding the
//!   smaller clustering with empty clusters — the minimal probability mass
//!   that must move to turn one partition into the other;
//! * the `L_p` family over matched symmetric differences (equal counts);
//! * the Hausdorff distance over the symmetric-difference metric, which
//!   involves no matching at all.
//!
//! Empirical versions replace `P` with the empirical measure of a sample:
//! both code paths accumulate the same `1/n` masses, so distances computed
//! from label vectors agree bit-for-bit with distances over a uniform-weight
//! sample carrier.

use nalgebra::DMatrix;

use crate::assignment::{solve_lbap, solve_lsap, CostMatrix};
use crate::error::{Error, Result};
use crate::partition::Partition;

/// Pairwise intersection masses of two clusterings plus marginals.
#[derive(Debug, Clone)]
pub struct OverlapTable {
    masses: DMatrix<f64>,
    row_marginals: Vec<f64>,
    col_marginals: Vec<f64>,
    row_labels: Vec<usize>,
    col_labels: Vec<usize>,
    /// Total mass in the table (≤ 1 when atoms were excluded).
    total_mass: f64,
    /// Mass of atoms excluded because either partition left them unassigned.
    excluded_mass: f64,
}

impl OverlapTable {
    /// Build from an explicit intersection-mass matrix; marginals derived.
    pub fn from_masses(masses: DMatrix<f64>) -> Result<OverlapTable> {
        let row_labels = (0..masses.nrows()).collect();
        let col_labels = (0..masses.ncols()).collect();
        Self::assemble(masses, row_labels, col_labels, 0.0)
    }

    fn assemble(
        masses: DMatrix<f64>,
        row_labels: Vec<usize>,
        col_labels: Vec<usize>,
        excluded_mass: f64,
    ) -> Result<OverlapTable> {
        if masses.nrows() == 0 || masses.ncols() == 0 {
            return Err(Error::Input("overlap table must have at least one cluster per side".into()));
        }
        if masses.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::Input("overlap masses must be finite and nonnegative".into()));
        }
        let row_marginals: Vec<f64> = (0..masses.nrows())
            .map(|i| (0..masses.ncols()).map(|j| masses[(i, j)]).sum())
            .collect();
        let col_marginals: Vec<f64> = (0..masses.ncols())
            .map(|j| (0..masses.nrows()).map(|i| masses[(i, j)]).sum())
            .collect();
        let total_mass = row_marginals.iter().sum();
        Ok(OverlapTable {
            masses,
            row_marginals,
            col_marginals,
            row_labels,
            col_labels,
            total_mass,
            excluded_mass,
        })
    }

    pub fn masses(&self) -> &DMatrix<f64> {
        &self.masses
    }

    pub fn row_marginals(&self) -> &[f64] {
        &self.row_marginals
    }

    pub fn col_marginals(&self) -> &[f64] {
        &self.col_marginals
    }

    pub fn row_labels(&self) -> &[usize] {
        &self.row_labels
    }

    pub fn col_labels(&self) -> &[usize] {
        &self.col_labels
    }

    pub fn nrows(&self) -> usize {
        self.masses.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.masses.ncols()
    }

    pub fn total_mass(&self) -> f64 {
        self.total_mass
    }

    pub fn excluded_mass(&self) -> f64 {
        self.excluded_mass
    }

    /// `P(C_i △ D_j)`, clamped at zero against rounding.
    pub fn sym_diff(&self, i: usize, j: usize) -> f64 {
        (self.row_marginals[i] + self.col_marginals[j] - 2.0 * self.masses[(i, j)]).max(0.0)
    }

    fn sym_diff_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.nrows(), self.ncols(), |i, j| self.sym_diff(i, j))
    }

    /// Table with the two clusterings swapped.
    pub fn transposed(&self) -> OverlapTable {
        OverlapTable {
            masses: self.masses.transpose(),
            row_marginals: self.col_marginals.clone(),
            col_marginals: self.row_marginals.clone(),
            row_labels: self.col_labels.clone(),
            col_labels: self.row_labels.clone(),
            total_mass: self.total_mass,
            excluded_mass: self.excluded_mass,
        }
    }
}

/// Intersection masses of two partitions over one carrier.
///
/// Atoms unassigned in either partition are excluded symmetrically; their
/// mass is reported on the table.
pub fn overlap_from_partitions(c: &Partition, d: &Partition) -> Result<OverlapTable> {
    if !c.carrier().same_atoms(d.carrier()) {
        return Err(Error::CarrierMismatch(
            "partitions must share identical atoms and weights".into(),
        ));
    }
    let r = c.n_clusters();
    let s = d.n_clusters();
    if r == 0 || s == 0 {
        return Err(Error::Input("both partitions need at least one cluster".into()));
    }
    let mut masses = DMatrix::zeros(r, s);
    let mut excluded = 0.0;
    let weights = c.carrier().weights();
    for ((lc, ld), w) in c.labels().iter().zip(d.labels()).zip(weights) {
        match (lc, ld) {
            (Some(i), Some(j)) => masses[(*i, *j)] += *w,
            _ => excluded += *w,
        }
    }
    OverlapTable::assemble(masses, (0..r).collect(), (0..s).collect(), excluded)
}

/// Empirical intersection masses from two label vectors over the same data.
///
/// Entry `(i, j)` is the fraction of points carrying the `i`-th distinct
/// label in `labels_c` and the `j`-th distinct label in `labels_d`.
pub fn empirical_overlap(labels_c: &[usize], labels_d: &[usize]) -> Result<OverlapTable> {
    if labels_c.len() != labels_d.len() {
        return Err(Error::Input(format!(
            "label vectors differ in length: {} vs {}",
            labels_c.len(),
            labels_d.len()
        )));
    }
    if labels_c.is_empty() {
        return Err(Error::Input("label vectors must be non-empty".into()));
    }
    let mut row_labels: Vec<usize> = labels_c.to_vec();
    row_labels.sort_unstable();
    row_labels.dedup();
    let mut col_labels: Vec<usize> = labels_d.to_vec();
    col_labels.sort_unstable();
    col_labels.dedup();
    let row_of = |l: usize| row_labels.binary_search(&l).unwrap();
    let col_of = |l: usize| col_labels.binary_search(&l).unwrap();
    // accumulate 1/n per point, matching the uniform-weight carrier path
    // term for term so the two routes agree exactly
    let w = 1.0 / labels_c.len() as f64;
    let mut masses = DMatrix::zeros(row_labels.len(), col_labels.len());
    for (lc, ld) in labels_c.iter().zip(labels_d) {
        masses[(row_of(*lc), col_of(*ld))] += w;
    }
    OverlapTable::assemble(masses, row_labels, col_labels, 0.0)
}

/// One matched pair in an optimal transfer; `None` stands for a padded
/// empty cluster.
#[derive(Debug, Clone, serde::Serialize)]
pub struct MatchPair {
    pub c_label: Option<usize>,
    pub d_label: Option<usize>,
    pub sym_diff: f64,
    /// This pair's share of the transfer distance: half its symmetric
    /// difference; the shares sum to the distance.
    pub mass_moved: f64,
}

/// Result of the transfer distance with its optimal matching.
#[derive(Debug, Clone, serde::Serialize)]
pub struct TransferReport {
    /// The distance: half the optimal symmetric-difference sum, in `[0, 1]`.
    pub distance: f64,
    pub matching: Vec<MatchPair>,
    /// Mass of clusters matched against padded empty clusters.
    pub unmatched_penalty: f64,
    /// Carrier mass excluded because atoms were unassigned.
    pub excluded_mass: f64,
}

/// Transfer distance between clusterings: pad the side with fewer clusters
/// with empty ones, solve the assignment over symmetric differences, and
/// halve the optimum.
pub fn transfer_distance(table: &OverlapTable) -> Result<TransferReport> {
    if table.nrows() > table.ncols() {
        let mut report = transfer_distance(&table.transposed())?;
        for pair in &mut report.matching {
            std::mem::swap(&mut pair.c_label, &mut pair.d_label);
        }
        return Ok(report);
    }
    let r = table.nrows();
    let s = table.ncols();
    // rows r..s are empty clusters: P(∅ △ D_j) = P(D_j)
    let cost = DMatrix::from_fn(s, s, |i, j| {
        if i < r {
            table.sym_diff(i, j)
        } else {
            table.col_marginals()[j]
        }
    });
    let solved = solve_lsap(&CostMatrix::new(cost.clone())?)?;
    let mut matching = Vec::with_capacity(s);
    let mut penalty = 0.0;
    for (i, &j) in solved.permutation.iter().enumerate() {
        if i < r {
            matching.push(MatchPair {
                c_label: Some(table.row_labels()[i]),
                d_label: Some(table.col_labels()[j]),
                sym_diff: cost[(i, j)],
                mass_moved: 0.5 * cost[(i, j)],
            });
        } else {
            penalty += cost[(i, j)];
            matching.push(MatchPair {
                c_label: None,
                d_label: Some(table.col_labels()[j]),
                sym_diff: cost[(i, j)],
                mass_moved: 0.5 * cost[(i, j)],
            });
        }
    }
    Ok(TransferReport {
        distance: 0.5 * solved.value,
        matching,
        unmatched_penalty: penalty,
        excluded_mass: table.excluded_mass(),
    })
}

/// Hausdorff distance over the symmetric-difference metric: the largest
/// row-wise or column-wise minimum. No matching problem involved.
pub fn hausdorff_distance(table: &OverlapTable) -> f64 {
    let sd = table.sym_diff_matrix();
    let rows = (0..sd.nrows())
        .map(|i| (0..sd.ncols()).map(|j| sd[(i, j)]).fold(f64::INFINITY, f64::min))
        .fold(0.0f64, f64::max);
    let cols = (0..sd.ncols())
        .map(|j| (0..sd.nrows()).map(|i| sd[(i, j)]).fold(f64::INFINITY, f64::min))
        .fold(0.0f64, f64::max);
    rows.max(cols)
}

/// Order of the `L_p` distance over matched symmetric differences.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DpOrder {
    Finite(f64),
    Infinity,
}

/// `L_p` distance over optimally matched symmetric differences; defined for
/// equal cluster counts (use [`transfer_distance`] otherwise).
pub fn dp_distance(table: &OverlapTable, order: DpOrder) -> Result<f64> {
    if table.nrows() != table.ncols() {
        return Err(Error::Input(format!(
            "the L_p family needs equal cluster counts, got {}x{}; use the transfer distance for padding",
            table.nrows(),
            table.ncols()
        )));
    }
    let sd = table.sym_diff_matrix();
    match order {
        DpOrder::Infinity => Ok(solve_lbap(&CostMatrix::new(sd)?)?.value),
        DpOrder::Finite(p) => {
            if !(p >= 1.0) {
                return Err(Error::Input(format!("L_p order must satisfy p >= 1, got {p}")));
            }
            if p == 1.0 {
                return Ok(solve_lsap(&CostMatrix::new(sd)?)?.value);
            }
            let powered = sd.map(|v| v.powf(p));
            Ok(solve_lsap(&CostMatrix::new(powered)?)?.value.powf(1.0 / p))
        }
    }
}

/// Transfer distance between two partitions of one carrier.
pub fn dist_transfer(c: &Partition, d: &Partition) -> Result<TransferReport> {
    transfer_distance(&overlap_from_partitions(c, d)?)
}

/// Hausdorff distance between two partitions of one carrier.
pub fn dist_hausdorff(c: &Partition, d: &Partition) -> Result<f64> {
    Ok(hausdorff_distance(&overlap_from_partitions(c, d)?))
}

/// `L_p` distance between two equal-count partitions of one carrier.
pub fn dist_dp_family(c: &Partition, d: &Partition, order: DpOrder) -> Result<f64> {
    dp_distance(&overlap_from_partitions(c, d)?, order)
}
