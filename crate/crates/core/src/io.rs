//! File formats: mixture specs (JSON), point data (headerless CSV),
//! partitions (headered CSV), mode sets and cluster trees (JSON), and
//! experiment configurations/results.
//!
//! Floats are written with Rust's shortest round-trip formatting, so
//! partition files re-read by the distance command reproduce in-memory
//! distances bit-exactly. Lines starting with `#` carry metadata
//! (`# key=value`) and are ignored by record parsing.

use std::collections::BTreeMap;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::cluster_tree::{ClusterTree1d, TreeNode};
use crate::density::{CriticalPoint, NormalMixture};
use crate::error::{Error, Result};
use crate::harness::{BandwidthRule, ExperimentConfig, ExperimentResult};
use crate::mode_seek::ModeSet;
use crate::partition::{Carrier, CarrierKind, GridSpec, Partition};

/// Label column value for atoms outside every cluster.
pub const UNASSIGNED_LABEL: &str = "UNASSIGNED";

// ---------------------------------------------------------------------------
// mixture specs

#[derive(Debug, Serialize, Deserialize)]
struct ComponentSpec {
    weight: f64,
    mean: Vec<f64>,
    cov: Vec<Vec<f64>>,
}

#[derive(Debug, Serialize, Deserialize)]
struct MixtureSpec {
    dim: usize,
    components: Vec<ComponentSpec>,
}

/// Parse a mixture from its JSON spec
/// `{"dim": d, "components": [{"weight", "mean", "cov"}]}`.
pub fn mixture_from_json(text: &str) -> Result<NormalMixture> {
    let spec: MixtureSpec =
        serde_json::from_str(text).map_err(|e| Error::Input(format!("mixture spec: {e}")))?;
    if spec.components.is_empty() {
        return Err(Error::Input("mixture spec: components must be non-empty".into()));
    }
    let mut triples = Vec::with_capacity(spec.components.len());
    for (i, c) in spec.components.into_iter().enumerate() {
        if c.mean.len() != spec.dim {
            return Err(Error::Input(format!(
                "components[{i}].mean: has {} entries, dim says {}",
                c.mean.len(),
                spec.dim
            )));
        }
        if c.cov.len() != spec.dim || c.cov.iter().any(|row| row.len() != spec.dim) {
            return Err(Error::Input(format!(
                "components[{i}].cov: must be a {0}x{0} matrix",
                spec.dim
            )));
        }
        let mean = DVector::from_vec(c.mean);
        let cov = DMatrix::from_fn(spec.dim, spec.dim, |r, s| c.cov[r][s]);
        triples.push((c.weight, mean, cov));
    }
    NormalMixture::new(triples)
}

/// Render a mixture as its JSON spec.
pub fn mixture_to_json(m: &NormalMixture) -> String {
    let dim = m.means().first().map(|v| v.len()).unwrap_or(0);
    let spec = MixtureSpec {
        dim,
        components: m
            .weights()
            .iter()
            .zip(m.means())
            .zip(m.covariances())
            .map(|((w, mean), cov)| ComponentSpec {
                weight: *w,
                mean: mean.iter().cloned().collect(),
                cov: (0..dim)
                    .map(|r| (0..dim).map(|s| cov[(r, s)]).collect())
                    .collect(),
            })
            .collect(),
    };
    serde_json::to_string_pretty(&spec).expect("mixture spec serializes")
}

// ---------------------------------------------------------------------------
// point data (headerless CSV)

/// Parse headerless CSV, one point per row.
pub fn data_from_csv(text: &str) -> Result<Vec<DVector<f64>>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let mut points = Vec::new();
    let mut dim = None;
    for (row, record) in reader.records().enumerate() {
        let record = record?;
        let values: Vec<f64> = record
            .iter()
            .map(|f| {
                f.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::Input(format!("data row {}: '{f}' is not a number", row + 1)))
            })
            .collect::<Result<_>>()?;
        if let Some(d) = dim {
            if values.len() != d {
                return Err(Error::Input(format!(
                    "data row {}: {} columns, expected {d}",
                    row + 1,
                    values.len()
                )));
            }
        } else {
            dim = Some(values.len());
        }
        points.push(DVector::from_vec(values));
    }
    if points.is_empty() {
        return Err(Error::Input("data file holds no points".into()));
    }
    Ok(points)
}

/// Render points as headerless CSV; optional leading `# key=value` comments.
pub fn data_to_csv(points: &[DVector<f64>], comments: &[(&str, String)]) -> String {
    let mut out = String::new();
    for (k, v) in comments {
        out.push_str(&format!("# {k}={v}\n"));
    }
    for p in points {
        let row: Vec<String> = p.iter().map(|v| v.to_string()).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

// ---------------------------------------------------------------------------
// partitions (headered CSV)

/// Render a partition as headered CSV: `x1..xd,weight,label`.
pub fn partition_to_csv(p: &Partition, comments: &[(&str, String)]) -> String {
    let d = p.carrier().dim();
    let mut out = String::new();
    let kind = match p.carrier().kind() {
        CarrierKind::Grid => "grid",
        CarrierKind::Sample => "sample",
    };
    out.push_str(&format!("# kind={kind}\n"));
    for (k, v) in comments {
        out.push_str(&format!("# {k}={v}\n"));
    }
    let header: Vec<String> = (1..=d)
        .map(|k| format!("x{k}"))
        .chain(["weight".into(), "label".into()])
        .collect();
    out.push_str(&header.join(","));
    out.push('\n');
    for ((loc, w), label) in p
        .carrier()
        .locations()
        .iter()
        .zip(p.carrier().weights())
        .zip(p.labels())
    {
        let mut row: Vec<String> = loc.iter().map(|v| v.to_string()).collect();
        row.push(w.to_string());
        row.push(match label {
            Some(l) => l.to_string(),
            None => UNASSIGNED_LABEL.into(),
        });
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// Leading `# key=value` metadata of a CSV file.
pub fn csv_metadata(text: &str) -> BTreeMap<String, String> {
    let mut meta = BTreeMap::new();
    for line in text.lines() {
        let Some(rest) = line.strip_prefix('#') else {
            continue;
        };
        if let Some((k, v)) = rest.trim().split_once('=') {
            meta.insert(k.trim().to_string(), v.trim().to_string());
        }
    }
    meta
}

/// Parse a partition CSV produced by [`partition_to_csv`].
pub fn partition_from_csv(text: &str) -> Result<Partition> {
    let meta = csv_metadata(text);
    let kind = match meta.get("kind").map(|s| s.as_str()) {
        Some("sample") => CarrierKind::Sample,
        _ => CarrierKind::Grid,
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let headers = reader.headers()?.clone();
    if headers.len() < 3 {
        return Err(Error::Input(
            "partition CSV needs coordinate, weight and label columns".into(),
        ));
    }
    let d = headers.len() - 2;
    let mut locations = Vec::new();
    let mut weights = Vec::new();
    let mut labels: Vec<Option<usize>> = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record?;
        if record.len() != headers.len() {
            return Err(Error::Input(format!(
                "partition row {}: {} fields, expected {}",
                row + 1,
                record.len(),
                headers.len()
            )));
        }
        let coords: Vec<f64> = (0..d)
            .map(|k| {
                record[k].trim().parse::<f64>().map_err(|_| {
                    Error::Input(format!("partition row {}: bad coordinate '{}'", row + 1, &record[k]))
                })
            })
            .collect::<Result<_>>()?;
        let weight: f64 = record[d]
            .trim()
            .parse()
            .map_err(|_| Error::Input(format!("partition row {}: bad weight", row + 1)))?;
        let label = record[d + 1].trim();
        labels.push(if label == UNASSIGNED_LABEL {
            None
        } else {
            Some(label.parse::<usize>().map_err(|_| {
                Error::Input(format!("partition row {}: bad label '{label}'", row + 1))
            })?)
        });
        locations.push(DVector::from_vec(coords));
        weights.push(weight);
    }
    let carrier = Carrier::from_parts(locations, weights, kind)?;
    Partition::from_labels(carrier, labels)
}

// ---------------------------------------------------------------------------
// mode sets and trees (JSON)

fn critical_point_value(cp: &CriticalPoint) -> Value {
    json!({
        "location": cp.location.iter().cloned().collect::<Vec<f64>>(),
        "density": cp.density,
        "morse_index": cp.morse_index,
    })
}

/// Mode set as JSON: the mode list plus rejected critical points.
pub fn modeset_value(modes: &ModeSet) -> Value {
    json!({
        "merge_radius": modes.merge_radius,
        "modes": modes.modes.iter().map(critical_point_value).collect::<Vec<_>>(),
        "rejected": modes.rejected.iter().map(critical_point_value).collect::<Vec<_>>(),
    })
}

fn tree_node_value(node: &TreeNode) -> Value {
    json!({
        "interval": [node.interval.0, node.interval.1],
        "core": node.core.map(|(a, b)| vec![a, b]),
        "split_level": node.split_level,
        "split_point": node.split_point,
        "children": node.children.iter().map(tree_node_value).collect::<Vec<_>>(),
    })
}

/// Cluster tree as nested JSON.
pub fn tree_value(tree: &ClusterTree1d) -> Value {
    json!({
        "split_points": tree.split_points,
        "split_levels": tree.split_levels,
        "root": tree_node_value(&tree.root),
    })
}

// ---------------------------------------------------------------------------
// grid flags

/// Parse `"lo:hi:steps,lo:hi:steps,..."`, one spec per dimension.
pub fn parse_grid_axes(flag: &str) -> Result<Vec<GridSpec>> {
    flag.split(',').map(GridSpec::from_str).collect()
}

// ---------------------------------------------------------------------------
// experiments

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
enum BandwidthSpec {
    Fixed { matrix: Vec<Vec<f64>> },
    Scalar { h: f64 },
    NormalReference,
}

#[derive(Debug, Serialize, Deserialize)]
struct ExperimentSpec {
    ground_truth: MixtureSpec,
    sizes: Vec<usize>,
    replicates: usize,
    bandwidth: BandwidthSpec,
    seed: u64,
    #[serde(default)]
    max_iterations: Option<usize>,
    #[serde(default)]
    estimated_mixture: Option<MixtureSpec>,
}

/// Parse an experiment configuration from JSON.
pub fn experiment_config_from_json(text: &str) -> Result<ExperimentConfig> {
    let spec: ExperimentSpec =
        serde_json::from_str(text).map_err(|e| Error::Input(format!("experiment config: {e}")))?;
    let ground_truth = mixture_from_json(&serde_json::to_string(&spec.ground_truth)?)?;
    let estimated_mixture = spec
        .estimated_mixture
        .map(|m| mixture_from_json(&serde_json::to_string(&m)?))
        .transpose()?;
    let bandwidth = match spec.bandwidth {
        BandwidthSpec::Scalar { h } => BandwidthRule::Scalar(h),
        BandwidthSpec::NormalReference => BandwidthRule::NormalReference,
        BandwidthSpec::Fixed { matrix } => {
            let d = matrix.len();
            if matrix.iter().any(|row| row.len() != d) {
                return Err(Error::Input("bandwidth.matrix: must be square".into()));
            }
            BandwidthRule::Fixed(DMatrix::from_fn(d, d, |r, s| matrix[r][s]))
        }
    };
    Ok(ExperimentConfig {
        ground_truth,
        sizes: spec.sizes,
        replicates: spec.replicates,
        bandwidth,
        seed: spec.seed,
        max_iterations: spec.max_iterations,
        estimated_mixture,
    })
}

/// Experiment cells as headered CSV, one row per (size, replicate).
pub fn experiment_results_to_csv(result: &ExperimentResult, comments: &[(&str, String)]) -> String {
    let mut out = String::new();
    for (k, v) in comments {
        out.push_str(&format!("# {k}={v}\n"));
    }
    out.push_str(
        "size,replicate,transfer,hausdorff,mode_count,excluded_mass,nonconverged_fraction,flagged,density_l2,wall_ms\n",
    );
    for c in &result.cells {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            c.size,
            c.replicate,
            c.transfer,
            c.hausdorff,
            c.mode_count,
            c.excluded_mass,
            c.nonconverged_fraction,
            c.flagged,
            c.density_l2,
            c.wall_ms
        ));
    }
    out
}

/// Per-size summaries as JSON.
pub fn experiment_summary_value(result: &ExperimentResult) -> Value {
    json!({
        "bandwidth": result.bandwidth_note,
        "summaries": result.summaries,
    })
}
