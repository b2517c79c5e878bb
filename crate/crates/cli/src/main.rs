//! Command-line front end: model loading, mode finding, basin partitions,
//! partition distances, cluster trees, KDE clustering, sampling, and
//! consistency experiments.
//!
//! Exit codes: 0 success, 2 input error, 3 numerical failure. Errors go to
//! stderr as one JSON object. Every command prints the run-manifest hash and
//! stamps it into its output files; writes are atomic (temp file + rename).

mod manifest;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use nalgebra::DVector;
use serde_json::json;

use modalclust::cluster_tree::{build_tree, default_grid_spec, DensityGrid1d};
use modalclust::density::{Density, KernelModel, KernelProfile, Model};
use modalclust::error::Error;
use modalclust::io as formats;
use modalclust::metrics::{
    dp_distance, hausdorff_distance, overlap_from_partitions, transfer_distance, DpOrder,
};
use modalclust::mode_seek::{find_modes, partition_carrier, ShiftConfig, StepRule};
use modalclust::partition::{Carrier, GridSpec};

use manifest::RunManifest;

#[derive(Parser)]
#[command(
    name = "modalclust",
    version,
    about = "Modal clustering: density modes, basin partitions, and distances between clusterings"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Find the modes of a mixture density from grid or CSV starts.
    Modes {
        /// Mixture spec JSON file.
        #[arg(long)]
        model: PathBuf,
        /// Grid starts, one `lo:hi:steps` per dimension, comma-separated.
        #[arg(long, allow_hyphen_values = true)]
        grid: Option<String>,
        /// CSV of explicit start points (headerless, one per row).
        #[arg(long)]
        starts: Option<PathBuf>,
        /// Override the mode merge radius.
        #[arg(long)]
        merge_radius: Option<f64>,
        /// Override the iteration cap.
        #[arg(long)]
        max_iter: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Label every carrier atom with its basin of attraction.
    Partition {
        #[arg(long)]
        model: PathBuf,
        /// Grid carrier, one `lo:hi:steps` per dimension, comma-separated.
        #[arg(long, allow_hyphen_values = true)]
        grid: Option<String>,
        /// Sample carrier: CSV of points (uniform weights).
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long)]
        merge_radius: Option<f64>,
        #[arg(long)]
        max_iter: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Distance between two partition CSVs over the same carrier.
    Distance {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        /// One of dP, dH, dinf, or dp:<p> with p >= 1.
        #[arg(long, default_value = "dP")]
        metric: String,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Build the cluster tree of a univariate density.
    Tree {
        #[arg(long)]
        model: PathBuf,
        /// Optional `lo:hi:steps` grid (defaults to the model's own range).
        #[arg(long, allow_hyphen_values = true)]
        grid: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Mean-shift cluster a data set under its own kernel density estimate.
    Cluster {
        /// CSV of points (headerless, one per row).
        #[arg(long)]
        data: PathBuf,
        /// Isotropic kernel with standard deviation h per axis (H = h²·I).
        #[arg(long)]
        bandwidth: Option<f64>,
        /// JSON file holding a full bandwidth matrix [[...]].
        #[arg(long)]
        bandwidth_matrix: Option<PathBuf>,
        /// Normal-reference (Scott) bandwidth scaling of the sample covariance.
        #[arg(long)]
        normal_reference: bool,
        #[arg(long)]
        max_iter: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run a consistency experiment from a JSON configuration.
    Experiment {
        #[arg(long)]
        config: PathBuf,
        /// Output prefix: writes <out>.csv and <out>.summary.json.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Overrides the seed in the configuration file.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Draw a seeded sample from a mixture model.
    Sample {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    if let Ok(threads) = std::env::var("MODALCLUST_THREADS") {
        if let Ok(n) = threads.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            let kind = if err.is_input() { "input" } else { "numerical" };
            eprintln!(
                "{}",
                json!({"error": {"kind": kind, "message": err.to_string()}})
            );
            ExitCode::from(if err.is_input() { 2 } else { 3 })
        }
    }
}

fn read_input(path: &Path) -> Result<String, Error> {
    std::fs::read_to_string(path)
        .map_err(|e| Error::Input(format!("cannot read {}: {e}", path.display())))
}

fn write_atomic(path: &Path, content: &str) -> Result<(), Error> {
    let tmp = path.with_extension(format!(
        "{}.tmp{}",
        path.extension().and_then(|e| e.to_str()).unwrap_or(""),
        std::process::id()
    ));
    std::fs::write(&tmp, content)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

fn load_model(path: &Path) -> Result<(Model, String), Error> {
    let text = read_input(path)?;
    let mixture = formats::mixture_from_json(&text)?;
    Ok((Model::Mixture(mixture), text))
}

fn bounding_diameter(points: &[DVector<f64>]) -> f64 {
    if points.is_empty() {
        return 1.0;
    }
    let d = points[0].len();
    let mut lo = vec![f64::INFINITY; d];
    let mut hi = vec![f64::NEG_INFINITY; d];
    for p in points {
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
        .max(f64::MIN_POSITIVE)
}

fn cartesian_grid(specs: &[GridSpec]) -> Vec<DVector<f64>> {
    let axes: Vec<Vec<f64>> = specs.iter().map(|s| s.points()).collect();
    let total: usize = axes.iter().map(|a| a.len()).product();
    let mut strides = vec![1usize; specs.len()];
    for k in (0..specs.len().saturating_sub(1)).rev() {
        strides[k] = strides[k + 1] * axes[k + 1].len();
    }
    (0..total)
        .map(|flat| {
            DVector::from_fn(specs.len(), |k, _| axes[k][(flat / strides[k]) % axes[k].len()])
        })
        .collect()
}

fn shift_config(
    rule: StepRule,
    diameter: f64,
    merge_radius: Option<f64>,
    max_iter: Option<usize>,
) -> ShiftConfig {
    let mut config = ShiftConfig::for_domain(rule, diameter);
    if let Some(r) = merge_radius {
        config.merge_radius = r;
    }
    if let Some(m) = max_iter {
        config.max_iter = m;
    }
    config
}

fn parse_metric(metric: &str) -> Result<Metric, Error> {
    match metric {
        "dP" | "dp" | "transfer" => Ok(Metric::Transfer),
        "dH" | "dh" | "hausdorff" => Ok(Metric::Hausdorff),
        "dinf" => Ok(Metric::Lp(DpOrder::Infinity)),
        other => {
            if let Some(p) = other.strip_prefix("dp:") {
                let p: f64 = p
                    .parse()
                    .map_err(|_| Error::Input(format!("bad metric order in '{other}'")))?;
                Ok(Metric::Lp(DpOrder::Finite(p)))
            } else {
                Err(Error::Input(format!(
                    "unknown metric '{other}' (use dP, dH, dinf, or dp:<p>)"
                )))
            }
        }
    }
}

enum Metric {
    Transfer,
    Hausdorff,
    Lp(DpOrder),
}

fn run(command: Command) -> Result<(), Error> {
    match command {
        Command::Modes {
            model,
            grid,
            starts,
            merge_radius,
            max_iter,
            out,
            seed,
        } => {
            let (density_model, model_text) = load_model(&model)?;
            let mut flags = vec![("model".to_string(), model.display().to_string())];
            let mut inputs = vec![(model.display().to_string(), model_text.as_str())];
            let starts_text;
            let start_points = match (&grid, &starts) {
                (Some(flag), None) => {
                    flags.push(("grid".into(), flag.clone()));
                    let specs = formats::parse_grid_axes(flag)?;
                    if specs.len() != density_model.dim() {
                        return Err(Error::DimensionMismatch {
                            expected: density_model.dim(),
                            got: specs.len(),
                        });
                    }
                    cartesian_grid(&specs)
                }
                (None, Some(path)) => {
                    starts_text = read_input(path)?;
                    flags.push(("starts".into(), path.display().to_string()));
                    inputs.push((path.display().to_string(), starts_text.as_str()));
                    formats::data_from_csv(&starts_text)?
                }
                _ => {
                    return Err(Error::Input(
                        "provide exactly one of --grid or --starts".into(),
                    ))
                }
            };
            let config = shift_config(
                StepRule::for_model(&density_model),
                bounding_diameter(&start_points),
                merge_radius,
                max_iter,
            );
            let modes = find_modes(&density_model, &start_points, &config)?;
            let run_manifest = RunManifest::new("modes", &flags, &inputs, seed);
            let mut value = formats::modeset_value(&modes);
            value["manifest"] = run_manifest.to_value();
            let out = out.unwrap_or_else(|| PathBuf::from("modes.json"));
            write_atomic(&out, &serde_json::to_string_pretty(&value)?)?;
            println!("manifest {}", run_manifest.short_hash());
            println!(
                "{} modes ({} rejected critical points) -> {}",
                modes.modes.len(),
                modes.rejected.len(),
                out.display()
            );
            Ok(())
        }
        Command::Partition {
            model,
            grid,
            data,
            merge_radius,
            max_iter,
            out,
            seed,
        } => {
            let (density_model, model_text) = load_model(&model)?;
            let mut flags = vec![("model".to_string(), model.display().to_string())];
            let mut inputs = vec![(model.display().to_string(), model_text.as_str())];
            let data_text;
            let carrier = match (&grid, &data) {
                (Some(flag), None) => {
                    flags.push(("grid".into(), flag.clone()));
                    Carrier::grid(&density_model, &formats::parse_grid_axes(flag)?)?
                }
                (None, Some(path)) => {
                    data_text = read_input(path)?;
                    flags.push(("data".into(), path.display().to_string()));
                    inputs.push((path.display().to_string(), data_text.as_str()));
                    Carrier::sample(formats::data_from_csv(&data_text)?)?
                }
                _ => {
                    return Err(Error::Input(
                        "provide exactly one of --grid or --data".into(),
                    ))
                }
            };
            let config = shift_config(
                StepRule::for_model(&density_model),
                carrier.diameter(),
                merge_radius,
                max_iter,
            );
            let partition = partition_carrier(&density_model, &carrier, &config)?;
            let run_manifest = RunManifest::new("partition", &flags, &inputs, seed);
            let csv = formats::partition_to_csv(
                &partition,
                &[("manifest", run_manifest.short_hash().to_string())],
            );
            let out = out.unwrap_or_else(|| PathBuf::from("partition.csv"));
            write_atomic(&out, &csv)?;
            println!("manifest {}", run_manifest.short_hash());
            println!(
                "{} atoms in {} clusters (unassigned mass {:.3e}) -> {}",
                carrier.len(),
                partition.n_clusters(),
                partition.unassigned_mass(),
                out.display()
            );
            Ok(())
        }
        Command::Distance {
            a,
            b,
            metric,
            out,
            seed,
        } => {
            let metric_kind = parse_metric(&metric)?;
            let text_a = read_input(&a)?;
            let text_b = read_input(&b)?;
            let pa = formats::partition_from_csv(&text_a)?;
            let pb = formats::partition_from_csv(&text_b)?;
            let table = overlap_from_partitions(&pa, &pb)?;
            let flags = vec![
                ("a".to_string(), a.display().to_string()),
                ("b".to_string(), b.display().to_string()),
                ("metric".to_string(), metric.clone()),
            ];
            let inputs = vec![
                (a.display().to_string(), text_a.as_str()),
                (b.display().to_string(), text_b.as_str()),
            ];
            let run_manifest = RunManifest::new("distance", &flags, &inputs, seed);
            let report = match metric_kind {
                Metric::Transfer => {
                    let r = transfer_distance(&table)?;
                    json!({
                        "manifest": run_manifest.to_value(),
                        "metric": "dP",
                        "distance": r.distance,
                        "optimal_matching": r.matching,
                        "unmatched_penalty": r.unmatched_penalty,
                        "unassigned_mass": r.excluded_mass,
                    })
                }
                Metric::Hausdorff => {
                    json!({
                        "manifest": run_manifest.to_value(),
                        "metric": "dH",
                        "distance": hausdorff_distance(&table),
                        "optimal_matching": serde_json::Value::Null,
                        "unmatched_penalty": 0.0,
                        "unassigned_mass": table.excluded_mass(),
                    })
                }
                Metric::Lp(order) => {
                    json!({
                        "manifest": run_manifest.to_value(),
                        "metric": metric,
                        "distance": dp_distance(&table, order)?,
                        "optimal_matching": serde_json::Value::Null,
                        "unmatched_penalty": 0.0,
                        "unassigned_mass": table.excluded_mass(),
                    })
                }
            };
            let out = out.unwrap_or_else(|| PathBuf::from("distance.json"));
            write_atomic(&out, &serde_json::to_string_pretty(&report)?)?;
            println!("manifest {}", run_manifest.short_hash());
            println!("{} = {} -> {}", metric, report["distance"], out.display());
            Ok(())
        }
        Command::Tree {
            model,
            grid,
            out,
            seed,
        } => {
            let (density_model, model_text) = load_model(&model)?;
            let mut flags = vec![("model".to_string(), model.display().to_string())];
            let inputs = vec![(model.display().to_string(), model_text.as_str())];
            let spec = match &grid {
                Some(flag) => {
                    flags.push(("grid".into(), flag.clone()));
                    let specs = formats::parse_grid_axes(flag)?;
                    if specs.len() != 1 {
                        return Err(Error::Input("tree needs a 1-D grid".into()));
                    }
                    specs[0]
                }
                None => default_grid_spec(&density_model)?,
            };
            let density_grid = DensityGrid1d::new(&density_model, spec)?;
            let tree = build_tree(&density_model, &density_grid)?;
            let run_manifest = RunManifest::new("tree", &flags, &inputs, seed);
            let mut value = formats::tree_value(&tree);
            value["manifest"] = run_manifest.to_value();
            let out = out.unwrap_or_else(|| PathBuf::from("tree.json"));
            write_atomic(&out, &serde_json::to_string_pretty(&value)?)?;
            println!("manifest {}", run_manifest.short_hash());
            println!(
                "{} leaves, {} splits -> {}",
                tree.leaves().len(),
                tree.split_points.len(),
                out.display()
            );
            Ok(())
        }
        Command::Cluster {
            data,
            bandwidth,
            bandwidth_matrix,
            normal_reference,
            max_iter,
            out,
            seed,
        } => {
            let data_text = read_input(&data)?;
            let points = formats::data_from_csv(&data_text)?;
            let dim = points[0].len();
            let mut flags = vec![("data".to_string(), data.display().to_string())];
            let mut inputs = vec![(data.display().to_string(), data_text.as_str())];
            let matrix_text;
            let h = match (bandwidth, &bandwidth_matrix, normal_reference) {
                (Some(h), None, false) => {
                    if !(h > 0.0) {
                        return Err(Error::Input(format!("bandwidth must be positive, got {h}")));
                    }
                    flags.push(("bandwidth".into(), h.to_string()));
                    nalgebra::DMatrix::identity(dim, dim) * (h * h)
                }
                (None, Some(path), false) => {
                    matrix_text = read_input(path)?;
                    flags.push(("bandwidth-matrix".into(), path.display().to_string()));
                    inputs.push((path.display().to_string(), matrix_text.as_str()));
                    let rows: Vec<Vec<f64>> = serde_json::from_str(&matrix_text)
                        .map_err(|e| Error::Input(format!("bandwidth matrix: {e}")))?;
                    if rows.len() != dim || rows.iter().any(|r| r.len() != dim) {
                        return Err(Error::Input(format!(
                            "bandwidth matrix must be {dim}x{dim}"
                        )));
                    }
                    nalgebra::DMatrix::from_fn(dim, dim, |r, s| rows[r][s])
                }
                (None, None, true) => {
                    flags.push(("normal-reference".into(), "true".into()));
                    use modalclust::harness::BandwidthRule;
                    BandwidthRule::NormalReference.resolve_for(&points)?
                }
                _ => {
                    return Err(Error::Input(
                        "provide exactly one of --bandwidth, --bandwidth-matrix, --normal-reference"
                            .into(),
                    ))
                }
            };
            let kde = KernelModel::new(points.clone(), h, KernelProfile::Gaussian)?;
            let model = Model::Kde(kde);
            let carrier = Carrier::sample(points)?;
            let config = shift_config(StepRule::Bandwidth, carrier.diameter(), None, max_iter);
            let partition = partition_carrier(&model, &carrier, &config)?;
            let run_manifest = RunManifest::new("cluster", &flags, &inputs, seed);
            let csv = formats::partition_to_csv(
                &partition,
                &[("manifest", run_manifest.short_hash().to_string())],
            );
            let out = out.unwrap_or_else(|| PathBuf::from("labels.csv"));
            write_atomic(&out, &csv)?;
            println!("manifest {}", run_manifest.short_hash());
            println!(
                "{} points in {} clusters -> {}",
                partition.carrier().len(),
                partition.n_clusters(),
                out.display()
            );
            Ok(())
        }
        Command::Experiment { config, out, seed } => {
            let config_text = read_input(&config)?;
            let mut experiment = formats::experiment_config_from_json(&config_text)?;
            if let Some(s) = seed {
                experiment.seed = s;
            }
            let flags = vec![("config".to_string(), config.display().to_string())];
            let inputs = vec![(config.display().to_string(), config_text.as_str())];
            let run_manifest = RunManifest::new("experiment", &flags, &inputs, seed);
            let result = modalclust::harness::run_consistency(&experiment)?;
            let prefix = out.unwrap_or_else(|| PathBuf::from("results"));
            let csv_path = prefix.with_extension("csv");
            let summary_path = prefix.with_extension("summary.json");
            let csv = formats::experiment_results_to_csv(
                &result,
                &[("manifest", run_manifest.short_hash().to_string())],
            );
            write_atomic(&csv_path, &csv)?;
            let mut summary = formats::experiment_summary_value(&result);
            summary["manifest"] = run_manifest.to_value();
            write_atomic(&summary_path, &serde_json::to_string_pretty(&summary)?)?;
            println!("manifest {}", run_manifest.short_hash());
            println!(
                "{} cells -> {} and {}",
                result.cells.len(),
                csv_path.display(),
                summary_path.display()
            );
            Ok(())
        }
        Command::Sample {
            model,
            n,
            seed,
            out,
        } => {
            let (density_model, model_text) = load_model(&model)?;
            let mixture = density_model
                .as_mixture()
                .ok_or_else(|| Error::Input("sampling needs a mixture model".into()))?;
            let points = mixture.sample_seeded(n, seed)?;
            let flags = vec![
                ("model".to_string(), model.display().to_string()),
                ("n".to_string(), n.to_string()),
            ];
            let inputs = vec![(model.display().to_string(), model_text.as_str())];
            let run_manifest = RunManifest::new("sample", &flags, &inputs, Some(seed));
            let csv = formats::data_to_csv(
                &points,
                &[("manifest", run_manifest.short_hash().to_string())],
            );
            let out = out.unwrap_or_else(|| PathBuf::from("sample.csv"));
            write_atomic(&out, &csv)?;
            println!("manifest {}", run_manifest.short_hash());
            println!("{n} points -> {}", out.display());
            Ok(())
        }
    }
}
