//! Mean-shift mode seeking and basin-of-attraction partitions.
//!
//! The recursion `y_{j+1} = y_j + A·Df(y_j)/f(y_j)` climbs the density; with
//! the posterior-weighted harmonic-mean step matrix for normal mixtures, or
//! the bandwidth matrix for a Gaussian-profile KDE, the density is
//! non-decreasing along iterates and every start converges to a critical
//! point. Labeling each carrier atom with the mode its ascent reaches
//! realizes the population clustering: the basins of attraction of the
//! density modes under the gradient flow.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::density::{CriticalKind, CriticalPoint, Density, Model};
use crate::error::{Error, Result};
use crate::partition::{Carrier, Partition};

/// Which step matrix `A` the recursion uses.
#[derive(Debug, Clone)]
pub enum StepRule {
    /// User-supplied constant positive-definite matrix. Convergence is the
    /// caller's responsibility.
    Fixed(DMatrix<f64>),
    /// Posterior-weighted harmonic mean of component covariances; mixtures
    /// only, convergent from every start.
    HarmonicMean,
    /// The KDE bandwidth matrix; convergent for convex decreasing profiles.
    Bandwidth,
}

impl StepRule {
    /// Default convergent rule for the given model family.
    pub fn for_model(model: &Model) -> StepRule {
        match model {
            Model::Mixture(_) => StepRule::HarmonicMean,
            Model::Kde(_) => StepRule::Bandwidth,
        }
    }
}

/// Stopping rule and merge radius for mode seeking.
///
/// `grad_tol` bounds the normalized gradient `‖Df‖/f` (gradient norm relative
/// to the local density scale); `disp_tol` and `merge_radius` are absolute
/// lengths, normally scaled to the carrier diameter via
/// [`ShiftConfig::for_domain`].
#[derive(Debug, Clone)]
pub struct ShiftConfig {
    pub step_rule: StepRule,
    pub grad_tol: f64,
    pub disp_tol: f64,
    pub max_iter: usize,
    pub merge_radius: f64,
}

impl ShiftConfig {
    /// Relative defaults for a unit-diameter domain.
    pub fn new(step_rule: StepRule) -> ShiftConfig {
        ShiftConfig {
            step_rule,
            grad_tol: 1e-8,
            disp_tol: 1e-8,
            max_iter: 10_000,
            merge_radius: 1e-3,
        }
    }

    /// Defaults with displacement tolerance and merge radius scaled to a
    /// domain of the given diameter.
    pub fn for_domain(step_rule: StepRule, diameter: f64) -> ShiftConfig {
        ShiftConfig {
            step_rule,
            grad_tol: 1e-8,
            disp_tol: 1e-8 * diameter,
            max_iter: 10_000,
            merge_radius: 1e-3 * diameter,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.grad_tol > 0.0) || !(self.disp_tol > 0.0) || !(self.merge_radius > 0.0) {
            return Err(Error::Input("shift tolerances must be positive".into()));
        }
        if self.max_iter == 0 {
            return Err(Error::Input("max iterations must be at least 1".into()));
        }
        Ok(())
    }
}

/// Resolve the step matrix at `y` under the configured rule.
pub fn step_matrix(model: &Model, y: &DVector<f64>, rule: &StepRule) -> Result<DMatrix<f64>> {
    match (model, rule) {
        (_, StepRule::Fixed(a)) => {
            if a.nrows() != model.dim() || a.ncols() != model.dim() {
                return Err(Error::DimensionMismatch {
                    expected: model.dim(),
                    got: a.nrows(),
                });
            }
            Ok(a.clone())
        }
        (Model::Mixture(m), StepRule::HarmonicMean) => m.harmonic_mean_covariance(y),
        (Model::Kde(k), StepRule::Bandwidth) => Ok(k.bandwidth().clone()),
        (Model::Kde(_), StepRule::HarmonicMean) => Err(Error::Unsupported(
            "harmonic-mean step rule requires a mixture model".into(),
        )),
        (Model::Mixture(_), StepRule::Bandwidth) => Err(Error::Unsupported(
            "bandwidth step rule requires a kernel model".into(),
        )),
    }
}

/// The next iterate and the normalized gradient at `y` in one density pass.
///
/// With the bandwidth rule on a KDE the iterate is computed directly as the
/// kernel weighted mean of the data (an exact convex combination), which is
/// algebraically identical to `y + H·Df/f`.
fn step_and_gradient(
    model: &Model,
    y: &DVector<f64>,
    rule: &StepRule,
) -> Result<(DVector<f64>, DVector<f64>)> {
    match (model, rule) {
        (Model::Kde(k), StepRule::Bandwidth) => {
            let target = k.shift_target(y)?;
            let ng = k.precision() * (&target - y);
            Ok((target, ng))
        }
        (Model::Mixture(m), StepRule::HarmonicMean) => {
            let (ng, step) = m.shift_parts(y)?;
            Ok((y + step * &ng, ng))
        }
        (_, StepRule::Fixed(a)) => {
            if a.nrows() != model.dim() || a.ncols() != model.dim() {
                return Err(Error::DimensionMismatch {
                    expected: model.dim(),
                    got: a.nrows(),
                });
            }
            let ng = model.grad_over_density(y)?;
            Ok((y + a * &ng, ng))
        }
        (Model::Kde(_), StepRule::HarmonicMean) => Err(Error::Unsupported(
            "harmonic-mean step rule requires a mixture model".into(),
        )),
        (Model::Mixture(_), StepRule::Bandwidth) => Err(Error::Unsupported(
            "bandwidth step rule requires a kernel model".into(),
        )),
    }
}

/// One mean-shift step `y + A·Df(y)/f(y)`.
pub fn shift_step(model: &Model, y: &DVector<f64>, config: &ShiftConfig) -> Result<DVector<f64>> {
    let (target, ng) = step_and_gradient(model, y, &config.step_rule)?;
    if ng.iter().any(|v| !v.is_finite()) {
        return Err(Error::ShiftUndefined);
    }
    Ok(target)
}

/// Outcome of a mean-shift ascent.
#[derive(Debug, Clone)]
pub struct Ascent {
    pub terminal: DVector<f64>,
    pub iterations: usize,
    pub converged: bool,
}

/// Iterate the recursion from `y0` until both the normalized gradient and the
/// displacement fall under tolerance, or `max_iter` is exhausted.
///
/// Non-convergence is reported in the flag, not as an error; NaN along the
/// trajectory is a numerical error.
pub fn ascend(model: &Model, y0: &DVector<f64>, config: &ShiftConfig) -> Result<Ascent> {
    ascend_observed(model, y0, config, |_| {})
}

/// [`ascend`] invoking `observer` with every iterate after the start.
pub fn ascend_observed(
    model: &Model,
    y0: &DVector<f64>,
    config: &ShiftConfig,
    mut observer: impl FnMut(&DVector<f64>),
) -> Result<Ascent> {
    config.validate()?;
    if y0.len() != model.dim() {
        return Err(Error::DimensionMismatch {
            expected: model.dim(),
            got: y0.len(),
        });
    }
    if y0.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("non-finite start point".into()));
    }
    let mut y = y0.clone();
    let mut displacement = f64::INFINITY;
    for iteration in 0..=config.max_iter {
        let (target, ng) = step_and_gradient(model, &y, &config.step_rule)?;
        if ng.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical(
                "non-finite normalized gradient along trajectory".into(),
            ));
        }
        if ng.norm() <= config.grad_tol && (iteration == 0 || displacement <= config.disp_tol) {
            return Ok(Ascent {
                terminal: y,
                iterations: iteration,
                converged: true,
            });
        }
        if iteration == config.max_iter {
            break;
        }
        displacement = (&target - &y).norm();
        y = target;
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical("non-finite iterate along trajectory".into()));
        }
        observer(&y);
    }
    Ok(Ascent {
        terminal: y,
        iterations: config.max_iter,
        converged: false,
    })
}

/// Classify the critical point at `x` by the spectrum of the Hessian.
///
/// Precondition: `‖Df(x)‖/f(x) ≤ grad_tol`, otherwise a `NotCritical` error.
pub fn classify_critical(model: &Model, x: &DVector<f64>, grad_tol: f64) -> Result<CriticalPoint> {
    let ng = model.grad_over_density(x)?;
    let relative_gradient = ng.norm();
    if relative_gradient > grad_tol {
        return Err(Error::NotCritical {
            relative_gradient,
            tol: grad_tol,
        });
    }
    let density = model.density(x)?;
    let hess = model.hessian(x)?;
    let sym = (&hess + hess.transpose()) * 0.5;
    let eigenvalues: Vec<f64> = sym.symmetric_eigen().eigenvalues.iter().cloned().collect();
    Ok(CriticalPoint::from_spectrum(
        x.clone(),
        density,
        relative_gradient * density,
        &eigenvalues,
    ))
}

/// Converged modes plus any merged terminals that failed the maximum check.
#[derive(Debug, Clone)]
pub struct ModeSet {
    /// Local maxima (Morse index `d`), ordered by decreasing density.
    pub modes: Vec<CriticalPoint>,
    /// Merged terminals classified as saddle/minimum/degenerate; reported,
    /// never silently dropped.
    pub rejected: Vec<CriticalPoint>,
    pub merge_radius: f64,
}

/// Ascents from all starts plus the per-start mode assignment.
struct SeekOutcome {
    mode_set: ModeSet,
    /// Mode index per start: `None` for unconverged starts and for starts
    /// whose ascent terminated on a non-maximum critical point.
    assignments: Vec<Option<usize>>,
    unconverged: usize,
}

fn seek(model: &Model, starts: &[DVector<f64>], config: &ShiftConfig) -> Result<SeekOutcome> {
    if starts.is_empty() {
        return Err(Error::Input("mode seeking needs at least one start".into()));
    }
    config.validate()?;
    let ascents: Vec<Ascent> = starts
        .par_iter()
        .map(|y0| ascend(model, y0, config))
        .collect::<Result<_>>()?;

    // group converged terminals by proximity, highest density first so the
    // group representative is the highest-density terminal
    let mut order: Vec<usize> = (0..ascents.len()).filter(|i| ascents[*i].converged).collect();
    let unconverged = ascents.len() - order.len();
    let log_densities: Vec<f64> = ascents
        .iter()
        .map(|a| model.log_density(&a.terminal))
        .collect::<Result<_>>()?;
    order.sort_by(|&a, &b| {
        log_densities[b]
            .partial_cmp(&log_densities[a])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });

    let mut representatives: Vec<DVector<f64>> = Vec::new();
    let mut group_of_start: Vec<Option<usize>> = vec![None; ascents.len()];
    for &idx in &order {
        let terminal = &ascents[idx].terminal;
        let group = representatives
            .iter()
            .position(|rep| (rep - terminal).norm() <= config.merge_radius);
        let group = match group {
            Some(g) => g,
            None => {
                representatives.push(terminal.clone());
                representatives.len() - 1
            }
        };
        group_of_start[idx] = Some(group);
    }

    // classify one representative per group; only Morse-index-d groups
    // become modes
    let mut modes = Vec::new();
    let mut rejected = Vec::new();
    let mut mode_of_group: Vec<Option<usize>> = Vec::with_capacity(representatives.len());
    for rep in &representatives {
        // converged terminals satisfy the gradient tolerance, but allow slack
        // for representatives whose displacement check fired first
        let cp = classify_critical(model, rep, config.grad_tol.max(1e-6))?;
        if cp.kind == CriticalKind::Maximum {
            mode_of_group.push(Some(modes.len()));
            modes.push(cp);
        } else {
            mode_of_group.push(None);
            rejected.push(cp);
        }
    }

    let assignments = group_of_start
        .iter()
        .map(|g| g.and_then(|g| mode_of_group[g]))
        .collect();
    Ok(SeekOutcome {
        mode_set: ModeSet {
            modes,
            rejected,
            merge_radius: config.merge_radius,
        },
        assignments,
        unconverged,
    })
}

/// Run ascents from every start, merge nearby terminals, and verify each
/// retained mode has full Morse index.
pub fn find_modes(
    model: &Model,
    starts: &[DVector<f64>],
    config: &ShiftConfig,
) -> Result<ModeSet> {
    Ok(seek(model, starts, config)?.mode_set)
}

/// Label every carrier atom with the basin of attraction its ascent reaches.
///
/// Atoms whose ascent does not converge, or converges to a non-maximum
/// critical point (a basin boundary), stay unassigned and keep their weight.
pub fn partition_carrier(
    model: &Model,
    carrier: &Carrier,
    config: &ShiftConfig,
) -> Result<Partition> {
    let outcome = seek(model, carrier.locations(), config)?;
    let clusters = outcome.mode_set.modes.iter().cloned().map(Some).collect();
    Partition::new(carrier.clone(), outcome.assignments, clusters)
}

/// [`partition_carrier`] also reporting the mode set and the count of
/// unconverged atoms (for harness diagnostics).
pub fn partition_carrier_detailed(
    model: &Model,
    carrier: &Carrier,
    config: &ShiftConfig,
) -> Result<(Partition, ModeSet, usize)> {
    let outcome = seek(model, carrier.locations(), config)?;
    let clusters = outcome.mode_set.modes.iter().cloned().map(Some).collect();
    let partition = Partition::new(carrier.clone(), outcome.assignments, clusters)?;
    Ok((partition, outcome.mode_set, outcome.unconverged))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::{KernelModel, KernelProfile, NormalMixture};
    use crate::partition::GridSpec;
    use rand::Rng;
    use rand_chacha::{rand_core::SeedableRng, ChaCha8Rng};

    fn bimodal_2d() -> Model {
        Model::Mixture(
            NormalMixture::new(vec![
                (
                    0.5,
                    DVector::from_vec(vec![-1.5, 0.0]),
                    DMatrix::identity(2, 2),
                ),
                (
                    0.5,
                    DVector::from_vec(vec![1.5, 0.0]),
                    DMatrix::identity(2, 2),
                ),
            ])
            .unwrap(),
        )
    }

    /// Trimodal density proportional to 6e^{-x²/2} + 4e^{-(x-3)²/2} + 2e^{-(x-6)²}.
    pub(crate) fn trimodal_1d() -> Model {
        let two_pi_sqrt = (2.0 * std::f64::consts::PI).sqrt();
        let pi_sqrt = std::f64::consts::PI.sqrt();
        Model::Mixture(
            NormalMixture::from_unnormalized(vec![
                (
                    6.0 * two_pi_sqrt,
                    DVector::from_vec(vec![0.0]),
                    DMatrix::from_element(1, 1, 1.0),
                ),
                (
                    4.0 * two_pi_sqrt,
                    DVector::from_vec(vec![3.0]),
                    DMatrix::from_element(1, 1, 1.0),
                ),
                (
                    2.0 * pi_sqrt,
                    DVector::from_vec(vec![6.0]),
                    DMatrix::from_element(1, 1, 0.5),
                ),
            ])
            .unwrap(),
        )
    }

    /// Derivative of the trimodal density up to a positive constant;
    /// independent scalar oracle for mode/minimum locations.
    fn trimodal_slope(x: f64) -> f64 {
        -6.0 * x * (-x * x / 2.0).exp()
            - 4.0 * (x - 3.0) * (-(x - 3.0) * (x - 3.0) / 2.0).exp()
            - 4.0 * (x - 6.0) * (-(x - 6.0) * (x - 6.0)).exp()
    }

    /// Bisection on a sign change of `f` over `[lo, hi]`.
    pub(crate) fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
        let flo = f(lo);
        assert!(
            flo * f(hi) < 0.0,
            "bisection bracket [{lo}, {hi}] has no sign change"
        );
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(mid) * flo > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    /// Slope of the bimodal density restricted to the x-axis, up to a positive
    /// constant; oracle for the Fig.-3-style axis modes.
    fn bimodal_axis_slope(t: f64) -> f64 {
        -(t + 1.5) * (-0.5 * (t + 1.5) * (t + 1.5)).exp()
            - (t - 1.5) * (-0.5 * (t - 1.5) * (t - 1.5)).exp()
    }

    #[test]
    fn shift_step_fixes_single_mode() {
        let model = Model::Mixture(
            NormalMixture::single(DVector::from_vec(vec![2.0, -1.0]), DMatrix::identity(2, 2))
                .unwrap(),
        );
        let cfg = ShiftConfig::new(StepRule::HarmonicMean);
        let y = DVector::from_vec(vec![2.0, -1.0]);
        let stepped = shift_step(&model, &y, &cfg).unwrap();
        assert!((stepped - y).norm() < 1e-14);
    }

    #[test]
    fn shift_step_fixes_saddle() {
        let model = bimodal_2d();
        let cfg = ShiftConfig::new(StepRule::HarmonicMean);
        let y = DVector::from_vec(vec![0.0, 0.0]);
        let stepped = shift_step(&model, &y, &cfg).unwrap();
        assert!((stepped - y).norm() < 1e-14);
    }

    #[test]
    fn kde_shift_step_is_kernel_weighted_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let data: Vec<DVector<f64>> = (0..12)
            .map(|_| DVector::from_fn(2, |_, _| rng.gen_range(-2.0..2.0)))
            .collect();
        let kde = KernelModel::with_scalar_bandwidth(data.clone(), 0.5, KernelProfile::Gaussian)
            .unwrap();
        let model = Model::Kde(kde);
        let cfg = ShiftConfig::new(StepRule::Bandwidth);
        for _ in 0..20 {
            let y = DVector::from_fn(2, |_, _| rng.gen_range(-3.0..3.0));
            let stepped = shift_step(&model, &y, &cfg).unwrap();
            // independent computation of the kernel weights W_i(y);
            // bandwidth std 0.5 means kernel variance 0.25
            let mut weights: Vec<f64> = data
                .iter()
                .map(|xi| (-0.5 * (&y - xi).norm_squared() / 0.25).exp())
                .collect();
            let total: f64 = weights.iter().sum();
            for w in &mut weights {
                *w /= total;
            }
            let mut expected = DVector::zeros(2);
            for (w, xi) in weights.iter().zip(&data) {
                expected += xi * *w;
            }
            assert!(
                (stepped - expected).norm() < 1e-10,
                "shift step differs from the weighted-mean oracle"
            );
        }
    }

    #[test]
    fn mixture_fixed_point_identity() {
        // y + Σ*(y)·Df/f must equal Σ*(y)·Σ_ℓ α_ℓ Σ_ℓ⁻¹ μ_ℓ
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..40 {
            let dim = rng.gen_range(1..=3);
            let n_comp = rng.gen_range(1..=3);
            let raw: Vec<f64> = (0..n_comp).map(|_| rng.gen_range(0.2..1.0)).collect();
            let total: f64 = raw.iter().sum();
            let mixture = NormalMixture::new(
                raw.iter()
                    .map(|w| {
                        let mean = DVector::from_fn(dim, |_, _| rng.gen_range(-3.0..3.0));
                        let a = DMatrix::from_fn(dim, dim, |_, _| rng.gen_range(-1.0..1.0));
                        let cov = &a * a.transpose() + DMatrix::identity(dim, dim) * 0.3;
                        (w / total, mean, cov)
                    })
                    .collect(),
            )
            .unwrap();
            let model = Model::Mixture(mixture.clone());
            let cfg = ShiftConfig::new(StepRule::HarmonicMean);
            let y = DVector::from_fn(dim, |_, _| rng.gen_range(-4.0..4.0));
            let stepped = shift_step(&model, &y, &cfg).unwrap();
            let target =
                mixture.harmonic_mean_covariance(&y).unwrap() * mixture.precision_weighted_mean(&y).unwrap();
            assert!(
                (stepped - target).norm() < 1e-10,
                "fixed-point identity violated"
            );
        }
    }

    #[test]
    fn ascend_from_mode_stops_immediately() {
        let model = Model::Mixture(
            NormalMixture::single(DVector::from_vec(vec![1.0]), DMatrix::identity(1, 1)).unwrap(),
        );
        let cfg = ShiftConfig::new(StepRule::HarmonicMean);
        let a = ascend(&model, &DVector::from_vec(vec![1.0]), &cfg).unwrap();
        assert!(a.converged);
        assert!(a.iterations <= 1);
        assert!((a.terminal[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ascend_reaches_left_mode_of_bimodal() {
        let model = bimodal_2d();
        let cfg = ShiftConfig::for_domain(StepRule::HarmonicMean, 8.0 * std::f64::consts::SQRT_2);
        let a = ascend(&model, &DVector::from_vec(vec![-2.3, 0.7]), &cfg).unwrap();
        assert!(a.converged);
        // oracle: solve the axis slope for the left mode by bisection
        let mode_x = bisect(bimodal_axis_slope, -3.0, -0.5);
        let expected = DVector::from_vec(vec![mode_x, 0.0]);
        assert!(
            (a.terminal - expected).norm() <= cfg.merge_radius,
            "terminal not within merge radius of the bisection mode"
        );
    }

    #[test]
    fn ascend_reaches_third_mode_of_trimodal() {
        let model = trimodal_1d();
        let cfg = ShiftConfig::for_domain(StepRule::HarmonicMean, 11.0);
        let a = ascend(&model, &DVector::from_vec(vec![5.0]), &cfg).unwrap();
        assert!(a.converged);
        let mode = bisect(trimodal_slope, 5.5, 6.5);
        assert!((a.terminal[0] - mode).abs() <= cfg.merge_radius);
    }

    #[test]
    fn ascend_reports_non_convergence() {
        let model = bimodal_2d();
        let mut cfg = ShiftConfig::new(StepRule::HarmonicMean);
        cfg.max_iter = 1;
        cfg.grad_tol = 1e-14;
        let a = ascend(&model, &DVector::from_vec(vec![-2.3, 0.7]), &cfg).unwrap();
        assert!(!a.converged);
        assert_eq!(a.iterations, 1);
    }

    #[test]
    fn ascend_flags_nan_as_numerical_error() {
        let model = bimodal_2d();
        let cfg = ShiftConfig {
            step_rule: StepRule::Fixed(DMatrix::from_element(2, 2, f64::NAN)),
            ..ShiftConfig::new(StepRule::HarmonicMean)
        };
        let err = ascend(&model, &DVector::from_vec(vec![1.0, 1.0]), &cfg).unwrap_err();
        assert!(matches!(err, Error::Numerical(_)));
    }

    #[test]
    fn find_modes_bimodal_grid() {
        let model = bimodal_2d();
        let spec = GridSpec::new(-4.0, 4.0, 21).unwrap();
        let starts: Vec<DVector<f64>> = spec
            .points()
            .iter()
            .flat_map(|&x| spec.points().iter().map(move |&y| DVector::from_vec(vec![x, y])).collect::<Vec<_>>())
            .collect();
        let cfg = ShiftConfig::for_domain(StepRule::HarmonicMean, 8.0 * std::f64::consts::SQRT_2);
        let modes = find_modes(&model, &starts, &cfg).unwrap();
        assert_eq!(modes.modes.len(), 2, "expected exactly two modes");
        // the grid contains the x₁ = 0 line whose ascents end on the saddle
        assert!(!modes.rejected.is_empty());
        assert!(modes
            .rejected
            .iter()
            .all(|cp| cp.kind == CriticalKind::Saddle));
        let mut xs: Vec<f64> = modes.modes.iter().map(|m| m.location[0]).collect();
        xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mode_x = bisect(bimodal_axis_slope, 0.5, 3.0);
        assert!((xs[0] + mode_x).abs() < 1e-3);
        assert!((xs[1] - mode_x).abs() < 1e-3);
        // retained modes are pairwise separated beyond the merge radius and
        // carry full Morse index
        for (i, a) in modes.modes.iter().enumerate() {
            assert_eq!(a.morse_index, 2);
            for b in modes.modes.iter().skip(i + 1) {
                assert!((&a.location - &b.location).norm() > modes.merge_radius);
            }
        }
    }

    #[test]
    fn find_modes_trimodal_line() {
        let model = trimodal_1d();
        let starts: Vec<DVector<f64>> = (0..200)
            .map(|i| DVector::from_vec(vec![-3.0 + 11.0 * i as f64 / 199.0]))
            .collect();
        let cfg = ShiftConfig::for_domain(StepRule::HarmonicMean, 11.0);
        let modes = find_modes(&model, &starts, &cfg).unwrap();
        assert_eq!(modes.modes.len(), 3, "expected exactly three modes");
    }

    #[test]
    fn find_modes_single_normal() {
        let model = Model::Mixture(
            NormalMixture::single(
                DVector::from_vec(vec![0.5, -0.25]),
                DMatrix::from_row_slice(2, 2, &[1.0, 0.3, 0.3, 2.0]),
            )
            .unwrap(),
        );
        let starts: Vec<DVector<f64>> = vec![
            DVector::from_vec(vec![-3.0, -3.0]),
            DVector::from_vec(vec![3.0, 3.0]),
            DVector::from_vec(vec![0.0, 4.0]),
        ];
        let cfg = ShiftConfig::for_domain(StepRule::HarmonicMean, 10.0);
        let modes = find_modes(&model, &starts, &cfg).unwrap();
        assert_eq!(modes.modes.len(), 1);
        assert!((&modes.modes[0].location - DVector::from_vec(vec![0.5, -0.25])).norm() < 1e-6);
        assert_eq!(modes.modes[0].morse_index, 2);
    }

    #[test]
    fn classify_saddle_and_extrema() {
        let model = bimodal_2d();
        let saddle = classify_critical(&model, &DVector::from_vec(vec![0.0, 0.0]), 1e-8).unwrap();
        assert_eq!(saddle.morse_index, 1);
        assert_eq!(saddle.kind, CriticalKind::Saddle);

        let single = Model::Mixture(
            NormalMixture::single(DVector::from_vec(vec![0.0, 0.0]), DMatrix::identity(2, 2))
                .unwrap(),
        );
        let max = classify_critical(&single, &DVector::from_vec(vec![0.0, 0.0]), 1e-8).unwrap();
        assert_eq!(max.morse_index, 2);
        assert_eq!(max.kind, CriticalKind::Maximum);

        // middle local minimum of the trimodal density, located by bisection
        let tri = trimodal_1d();
        let min_x = bisect(trimodal_slope, 1.0, 2.5);
        let min =
            classify_critical(&tri, &DVector::from_vec(vec![min_x]), 1e-6).unwrap();
        assert_eq!(min.morse_index, 0);
        assert_eq!(min.kind, CriticalKind::Minimum);
    }

    #[test]
    fn step_rules_are_tied_to_model_families() {
        let mixture = bimodal_2d();
        let y = DVector::from_vec(vec![0.5, 0.5]);
        let err = step_matrix(&mixture, &y, &StepRule::Bandwidth).unwrap_err();
        assert!(matches!(err, Error::Unsupported(_)));
        let err = ascend(&mixture, &y, &ShiftConfig::new(StepRule::Bandwidth)).unwrap_err();
        assert!(matches!(err, Error::Unsupported(_)));

        let kde = Model::Kde(
            KernelModel::with_scalar_bandwidth(
                vec![DVector::from_vec(vec![0.0, 0.0])],
                1.0,
                KernelProfile::Gaussian,
            )
            .unwrap(),
        );
        let err = step_matrix(&kde, &y, &StepRule::HarmonicMean).unwrap_err();
        assert!(matches!(err, Error::Unsupported(_)));
        // a fixed matrix works for either family
        let cfg = ShiftConfig::new(StepRule::Fixed(DMatrix::identity(2, 2) * 0.5));
        assert!(ascend(&kde, &y, &cfg).unwrap().converged);
    }

    #[test]
    fn classify_rejects_non_critical_points() {
        let model = bimodal_2d();
        let err = classify_critical(&model, &DVector::from_vec(vec![1.0, 1.0]), 1e-8).unwrap_err();
        assert!(matches!(err, Error::NotCritical { .. }));
    }

    #[test]
    fn partition_single_normal_is_one_cluster() {
        let model = Model::Mixture(
            NormalMixture::single(DVector::from_vec(vec![0.0]), DMatrix::identity(1, 1)).unwrap(),
        );
        let carrier = Carrier::grid(&model, &[GridSpec::new(-4.0, 4.0, 101).unwrap()]).unwrap();
        let cfg = ShiftConfig::for_domain(StepRule::HarmonicMean, carrier.diameter());
        let p = partition_carrier(&model, &carrier, &cfg).unwrap();
        assert_eq!(p.n_clusters(), 1);
        assert!(p.labels().iter().all(|l| *l == Some(0)));
    }

    #[test]
    fn partition_trimodal_grid_splits_at_minima() {
        let model = trimodal_1d();
        let carrier = Carrier::grid(&model, &[GridSpec::new(-3.0, 8.0, 401).unwrap()]).unwrap();
        let cfg = ShiftConfig::for_domain(StepRule::HarmonicMean, carrier.diameter());
        let p = partition_carrier(&model, &carrier, &cfg).unwrap();
        assert_eq!(p.n_clusters(), 3);
        let step = (8.0 - (-3.0)) / 400.0;
        let min1 = bisect(trimodal_slope, 1.0, 2.5);
        let min2 = bisect(trimodal_slope, 3.5, 5.5);
        // the labels must change exactly at each local minimum (within one step)
        let mut boundaries = Vec::new();
        for i in 1..carrier.len() {
            let a = p.labels()[i - 1];
            let b = p.labels()[i];
            if a.is_some() && b.is_some() && a != b {
                boundaries.push(0.5 * (carrier.locations()[i - 1][0] + carrier.locations()[i][0]));
            }
        }
        assert_eq!(boundaries.len(), 2, "expected two internal boundaries");
        assert!((boundaries[0] - min1).abs() <= step);
        assert!((boundaries[1] - min2).abs() <= step);
    }

    #[test]
    fn partition_bimodal_matches_half_planes() {
        let model = bimodal_2d();
        let spec = GridSpec::new(-4.0, 4.0, 41).unwrap();
        let carrier = Carrier::grid(&model, &[spec, spec]).unwrap();
        let cfg = ShiftConfig::for_domain(StepRule::HarmonicMean, carrier.diameter());
        let p = partition_carrier(&model, &carrier, &cfg).unwrap();
        assert_eq!(p.n_clusters(), 2);
        // identify which label owns the left half-plane
        let left_label = p
            .labels()
            .iter()
            .zip(carrier.locations())
            .find_map(|(l, x)| if x[0] < -0.5 { *l } else { None })
            .unwrap();
        let mut mismatched = 0.0;
        for ((label, x), w) in p.labels().iter().zip(carrier.locations()).zip(carrier.weights()) {
            let expected = if x[0] < 0.0 {
                Some(left_label)
            } else if x[0] > 0.0 {
                Some(1 - left_label)
            } else {
                None
            };
            if x[0] != 0.0 && *label != expected {
                mismatched += w;
            }
        }
        assert!(mismatched < 1e-3, "mismatched mass {mismatched}");
        // atoms on the boundary line ascend to the saddle and stay unassigned
        assert!(p.unassigned_mass() > 0.0);
        // clusters both carry positive probability content
        assert!(p.cluster_masses().iter().all(|m| *m > 0.0));
    }

    #[test]
    fn monotone_ascent_and_hull_property() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        // mixtures with the harmonic-mean rule
        for _ in 0..30 {
            let dim = rng.gen_range(1..=2);
            let n_comp = rng.gen_range(1..=3);
            let raw: Vec<f64> = (0..n_comp).map(|_| rng.gen_range(0.2..1.0)).collect();
            let total: f64 = raw.iter().sum();
            let mixture = NormalMixture::new(
                raw.iter()
                    .map(|w| {
                        let mean = DVector::from_fn(dim, |_, _| rng.gen_range(-2.0..2.0));
                        let a = DMatrix::from_fn(dim, dim, |_, _| rng.gen_range(-1.0..1.0));
                        let cov = &a * a.transpose() + DMatrix::identity(dim, dim) * 0.4;
                        (w / total, mean, cov)
                    })
                    .collect(),
            )
            .unwrap();
            let model = Model::Mixture(mixture);
            let cfg = ShiftConfig::for_domain(StepRule::HarmonicMean, 12.0);
            let y0 = DVector::from_fn(dim, |_, _| rng.gen_range(-5.0..5.0));
            let mut last = model.density(&y0).unwrap();
            let a = ascend_observed(&model, &y0, &cfg, |y| {
                let f = model.density(y).unwrap();
                assert!(f >= last - 1e-12, "density decreased: {last} -> {f}");
                last = f;
            })
            .unwrap();
            assert!(a.converged);
        }
        // KDEs with the bandwidth rule: monotone and inside the data hull
        for _ in 0..15 {
            let dim = 2;
            let data: Vec<DVector<f64>> = (0..rng.gen_range(5..20))
                .map(|_| DVector::from_fn(dim, |_, _| rng.gen_range(-2.0..2.0)))
                .collect();
            let mut lo = [f64::INFINITY; 2];
            let mut hi = [f64::NEG_INFINITY; 2];
            for p in &data {
                for k in 0..2 {
                    lo[k] = lo[k].min(p[k]);
                    hi[k] = hi[k].max(p[k]);
                }
            }
            let model = Model::Kde(
                KernelModel::with_scalar_bandwidth(
                    data,
                    rng.gen_range(0.1..1.0),
                    KernelProfile::Gaussian,
                )
                .unwrap(),
            );
            let cfg = ShiftConfig::for_domain(StepRule::Bandwidth, 8.0);
            let y0 = DVector::from_fn(dim, |_, _| rng.gen_range(-4.0..4.0));
            let mut last = model.density(&y0).unwrap();
            let a = ascend_observed(&model, &y0, &cfg, |y| {
                let f = model.density(y).unwrap();
                assert!(f >= last - 1e-12, "kde density decreased");
                last = f;
                for k in 0..2 {
                    assert!(y[k] >= lo[k] - 1e-9 && y[k] <= hi[k] + 1e-9, "left data hull");
                }
            })
            .unwrap();
            assert!(a.converged);
        }
    }

    #[test]
    fn labels_stable_under_tolerance_refinement() {
        let model = bimodal_2d();
        let spec = GridSpec::new(-4.0, 4.0, 41).unwrap();
        let carrier = Carrier::grid(&model, &[spec, spec]).unwrap();
        let coarse = ShiftConfig::for_domain(StepRule::HarmonicMean, carrier.diameter());
        let mut fine = coarse.clone();
        fine.grad_tol *= 0.5;
        fine.disp_tol *= 0.5;
        let pa = partition_carrier(&model, &carrier, &coarse).unwrap();
        let pb = partition_carrier(&model, &carrier, &fine).unwrap();
        let ca = pa.canonical_labels();
        let cb = pb.canonical_labels();
        let mut changed = 0.0;
        for ((a, b), w) in ca.iter().zip(&cb).zip(carrier.weights()) {
            if a != b {
                changed += w;
            }
        }
        assert!(changed < 1e-3, "label mass changed {changed}");
    }
}
