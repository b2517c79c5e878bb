//! Density models: normal mixtures and kernel density estimators.
//!
//! Both model families expose the same evaluation surface (density, gradient,
//! Hessian) through [`Density`]. Mixtures additionally provide posterior
//! component weights, the posterior-weighted harmonic mean of component
//! covariances used as a convergent mean-shift step matrix, and sampling.
//!
//! Internally every density is evaluated in log space with log-sum-exp so the
//! normalized gradient `Df/f` stays finite deep in the tails, where the raw
//! density underflows f64.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::Rng;
use rand_chacha::{rand_core::SeedableRng, ChaCha8Rng};
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Symmetry tolerance for covariance validation (absolute, scaled by entry magnitude).
const SYMMETRY_TOL: f64 = 1e-12;
/// Weight-sum tolerance for mixture validation.
const WEIGHT_SUM_TOL: f64 = 1e-12;
/// Relative determinant threshold below which a Hessian is flagged degenerate.
const DEGENERATE_DET_TOL: f64 = 1e-10;
/// Condition-number cap for the accumulated precision in the harmonic mean.
const CONDITION_LIMIT: f64 = 1e12;

const LOG_TWO_PI: f64 = 1.837877066409345483560659472811;

/// Kernel profile `k` with `K(x) ∝ k(xᵀx)`.
///
/// Only the Gaussian profile is supported; the enum exists so additional
/// profiles can be admitted after passing the convexity/monotonicity check
/// required for mean-shift convergence with the bandwidth step matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelProfile {
    /// `k(t) = exp(-t/2)`; the kernel is the standard normal density.
    Gaussian,
}

impl KernelProfile {
    /// `log k(t)`.
    pub fn log_value(self, t: f64) -> f64 {
        match self {
            KernelProfile::Gaussian => -0.5 * t,
        }
    }

    /// Log of the constant `c` making `c·k(xᵀx)` integrate to one in dimension `d`.
    pub fn log_norm_const(self, dim: usize) -> f64 {
        match self {
            KernelProfile::Gaussian => -0.5 * dim as f64 * LOG_TWO_PI,
        }
    }

    /// Whether the profile is convex and monotonically decreasing, the
    /// condition under which the bandwidth step rule is convergent.
    pub fn is_convex_decreasing(self) -> bool {
        match self {
            KernelProfile::Gaussian => true,
        }
    }

    /// Whether second derivatives of the induced density exist everywhere.
    pub fn is_twice_differentiable(self) -> bool {
        match self {
            KernelProfile::Gaussian => true,
        }
    }
}

/// Classification of a critical point of a density.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CriticalKind {
    Maximum,
    Saddle,
    Minimum,
    /// Hessian determinant below the degeneracy threshold; the reported
    /// Morse index is the negative-eigenvalue count and may be unreliable.
    Degenerate,
}

/// A critical point `x0` with `Df(x0) ≈ 0`, classified by the Hessian.
#[derive(Debug, Clone, PartialEq)]
pub struct CriticalPoint {
    pub location: DVector<f64>,
    pub density: f64,
    /// Euclidean norm of the gradient at `location`.
    pub gradient_norm: f64,
    /// Number of negative Hessian eigenvalues; `d` for a local maximum.
    pub morse_index: usize,
    pub kind: CriticalKind,
}

impl CriticalPoint {
    /// Classify `x` from local density information. `d` is the space dimension,
    /// `hessian_eigenvalues` the spectrum of the (symmetrized) Hessian.
    pub(crate) fn from_spectrum(
        location: DVector<f64>,
        density: f64,
        gradient_norm: f64,
        eigenvalues: &[f64],
    ) -> Self {
        let d = eigenvalues.len();
        let morse_index = eigenvalues.iter().filter(|&&ev| ev < 0.0).count();
        let trace_scale = eigenvalues.iter().map(|ev| ev.abs()).sum::<f64>() / d as f64;
        let det_abs: f64 = eigenvalues.iter().map(|ev| ev.abs()).product();
        let degenerate =
            trace_scale == 0.0 || det_abs < DEGENERATE_DET_TOL * trace_scale.powi(d as i32);
        let kind = if degenerate {
            CriticalKind::Degenerate
        } else if morse_index == d {
            CriticalKind::Maximum
        } else if morse_index == 0 {
            CriticalKind::Minimum
        } else {
            CriticalKind::Saddle
        };
        CriticalPoint {
            location,
            density,
            gradient_norm,
            morse_index,
            kind,
        }
    }
}

/// Common evaluation surface for all density models.
///
/// All methods are pure; models are immutable after construction and safe to
/// share across threads.
pub trait Density {
    /// Space dimension `d`.
    fn dim(&self) -> usize;

    /// `log f(x)`; finite wherever the model has positive density.
    fn log_density(&self, x: &DVector<f64>) -> Result<f64>;

    /// `f(x)`. May underflow to zero in extreme tails even though the
    /// mathematical density is strictly positive; use [`Density::log_density`]
    /// when the magnitude matters.
    fn density(&self, x: &DVector<f64>) -> Result<f64> {
        Ok(self.log_density(x)?.exp())
    }

    /// Normalized gradient `Df(x)/f(x)`, computed without forming `f(x)`.
    fn grad_over_density(&self, x: &DVector<f64>) -> Result<DVector<f64>>;

    /// Gradient `Df(x)`.
    fn gradient(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        Ok(self.grad_over_density(x)? * self.density(x)?)
    }

    /// Normalized Hessian `Hf(x)/f(x)`.
    fn hessian_over_density(&self, x: &DVector<f64>) -> Result<DMatrix<f64>>;

    /// Hessian `Hf(x)`.
    fn hessian(&self, x: &DVector<f64>) -> Result<DMatrix<f64>> {
        Ok(self.hessian_over_density(x)? * self.density(x)?)
    }
}

fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}

fn validate_spd(name: &str, m: &DMatrix<f64>) -> Result<Cholesky<f64, Dyn>> {
    if !m.is_square() {
        return Err(Error::Input(format!("{name}: covariance must be square")));
    }
    let scale = m.amax().max(1.0);
    for i in 0..m.nrows() {
        for j in (i + 1)..m.ncols() {
            if (m[(i, j)] - m[(j, i)]).abs() > SYMMETRY_TOL * scale {
                return Err(Error::Input(format!(
                    "{name}: covariance not symmetric at ({i},{j})"
                )));
            }
        }
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::Input(format!("{name}: covariance has non-finite entries")));
    }
    Cholesky::new(m.clone())
        .ok_or_else(|| Error::Input(format!("{name}: covariance not positive-definite")))
}

fn log_sum_exp(terms: &[f64]) -> f64 {
    let m = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    let sum: f64 = terms.iter().map(|t| (t - m).exp()).sum();
    m + sum.ln()
}

/// One mixture component with precomputed factorization.
#[derive(Debug, Clone)]
struct Component {
    weight: f64,
    mean: DVector<f64>,
    covariance: DMatrix<f64>,
    /// Σ⁻¹, from the Cholesky factor.
    precision: DMatrix<f64>,
    chol: Cholesky<f64, Dyn>,
    /// `-½(d·log 2π + log|Σ|)`.
    log_norm: f64,
}

impl Component {
    fn new(weight: f64, mean: DVector<f64>, covariance: DMatrix<f64>, idx: usize) -> Result<Self> {
        let chol = validate_spd(&format!("components[{idx}].cov"), &covariance)?;
        let d = mean.len();
        check_dim(covariance.nrows(), d).map_err(|_| {
            Error::Input(format!(
                "components[{idx}]: mean has length {d} but cov is {}x{}",
                covariance.nrows(),
                covariance.ncols()
            ))
        })?;
        let log_det: f64 = chol.l().diagonal().iter().map(|v| 2.0 * v.ln()).sum();
        let precision = chol.inverse();
        Ok(Component {
            weight,
            mean,
            covariance,
            precision,
            chol,
            log_norm: -0.5 * (d as f64 * LOG_TWO_PI + log_det),
        })
    }

    /// `log(π_ℓ φ(x|μ_ℓ,Σ_ℓ))`.
    fn log_weighted_pdf(&self, x: &DVector<f64>) -> f64 {
        let delta = x - &self.mean;
        let q = self.chol.solve(&delta).dot(&delta);
        self.weight.ln() + self.log_norm - 0.5 * q
    }
}

/// Finite mixture of multivariate normals.
#[derive(Debug, Clone)]
pub struct NormalMixture {
    components: Vec<Component>,
    dim: usize,
    /// Set when every component carries the same covariance matrix; the
    /// harmonic mean then equals it for every query point.
    shared_covariance: Option<DMatrix<f64>>,
}

impl NormalMixture {
    /// Build a mixture from `(weight, mean, covariance)` triples.
    ///
    /// Weights must be nonnegative and sum to one within `1e-12`; every
    /// covariance must be symmetric positive-definite and share the dimension
    /// of its mean.
    pub fn new(components: Vec<(f64, DVector<f64>, DMatrix<f64>)>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::Input("mixture needs at least one component".into()));
        }
        let dim = components[0].1.len();
        if dim == 0 {
            return Err(Error::Input("components[0].mean: empty mean vector".into()));
        }
        let weight_sum: f64 = components.iter().map(|(w, _, _)| w).sum();
        if components.iter().any(|(w, _, _)| *w < 0.0 || !w.is_finite()) {
            return Err(Error::Input("component weights must be nonnegative".into()));
        }
        if (weight_sum - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(Error::Input(format!(
                "component weights sum to {weight_sum}, expected 1"
            )));
        }
        let components = components
            .into_iter()
            .enumerate()
            .map(|(idx, (w, mean, cov))| {
                if mean.len() != dim {
                    return Err(Error::Input(format!(
                        "components[{idx}].mean: dimension {} differs from components[0] ({dim})",
                        mean.len()
                    )));
                }
                Component::new(w, mean, cov, idx)
            })
            .collect::<Result<Vec<_>>>()?;
        let shared_covariance = components
            .iter()
            .all(|c| c.covariance == components[0].covariance)
            .then(|| components[0].covariance.clone());
        Ok(NormalMixture {
            components,
            dim,
            shared_covariance,
        })
    }

    /// Convenience constructor normalizing arbitrary nonnegative masses to weights.
    pub fn from_unnormalized(components: Vec<(f64, DVector<f64>, DMatrix<f64>)>) -> Result<Self> {
        let total: f64 = components.iter().map(|(w, _, _)| w).sum();
        if !(total > 0.0) {
            return Err(Error::Input("total component mass must be positive".into()));
        }
        Self::new(
            components
                .into_iter()
                .map(|(w, m, c)| (w / total, m, c))
                .collect(),
        )
    }

    /// Single normal `N(mean, covariance)`.
    pub fn single(mean: DVector<f64>, covariance: DMatrix<f64>) -> Result<Self> {
        Self::new(vec![(1.0, mean, covariance)])
    }

    pub fn n_components(&self) -> usize {
        self.components.len()
    }

    pub fn weights(&self) -> Vec<f64> {
        self.components.iter().map(|c| c.weight).collect()
    }

    pub fn means(&self) -> Vec<&DVector<f64>> {
        self.components.iter().map(|c| &c.mean).collect()
    }

    pub fn covariances(&self) -> Vec<&DMatrix<f64>> {
        self.components.iter().map(|c| &c.covariance).collect()
    }

    fn log_terms(&self, x: &DVector<f64>) -> Result<Vec<f64>> {
        check_dim(self.dim, x.len())?;
        Ok(self
            .components
            .iter()
            .map(|c| c.log_weighted_pdf(x))
            .collect())
    }

    /// Posterior component weights `α_ℓ(y) = π_ℓ φ(y|μ_ℓ,Σ_ℓ) / f(y)`.
    ///
    /// Nonnegative and summing to one.
    pub fn posterior_weights(&self, y: &DVector<f64>) -> Result<Vec<f64>> {
        let terms = self.log_terms(y)?;
        let log_f = log_sum_exp(&terms);
        let mut alphas: Vec<f64> = terms.iter().map(|t| (t - log_f).exp()).collect();
        let total: f64 = alphas.iter().sum();
        for a in &mut alphas {
            *a /= total;
        }
        Ok(alphas)
    }

    /// Posterior-weighted harmonic mean of the component covariances,
    /// `{Σ_ℓ α_ℓ(y) Σ_ℓ⁻¹}⁻¹` — the step matrix that makes the mean-shift
    /// recursion convergent from every starting point for normal mixtures.
    pub fn harmonic_mean_covariance(&self, y: &DVector<f64>) -> Result<DMatrix<f64>> {
        if let Some(shared) = &self.shared_covariance {
            // identical covariances: the weighted harmonic mean is exact
            check_dim(self.dim, y.len())?;
            return Ok(shared.clone());
        }
        let alphas = self.posterior_weights(y)?;
        self.harmonic_from_posteriors(&alphas)
    }

    fn harmonic_from_posteriors(&self, alphas: &[f64]) -> Result<DMatrix<f64>> {
        let mut acc = DMatrix::zeros(self.dim, self.dim);
        for (alpha, comp) in alphas.iter().zip(&self.components) {
            acc += &comp.precision * *alpha;
        }
        // symmetrize before factorizing; the sum is symmetric up to rounding
        let acc = (&acc + acc.transpose()) * 0.5;
        let eig = acc.clone().symmetric_eigen();
        let max_ev = eig.eigenvalues.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let min_ev = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
        if min_ev <= 0.0 || max_ev / min_ev > CONDITION_LIMIT {
            return Err(Error::IllConditioned {
                cond: if min_ev > 0.0 { max_ev / min_ev } else { f64::INFINITY },
            });
        }
        let chol = Cholesky::new(acc)
            .ok_or(Error::IllConditioned { cond: max_ev / min_ev })?;
        let inv = chol.inverse();
        Ok((&inv + inv.transpose()) * 0.5)
    }

    /// Normalized gradient and step matrix from a single posterior pass.
    pub(crate) fn shift_parts(&self, y: &DVector<f64>) -> Result<(DVector<f64>, DMatrix<f64>)> {
        let alphas = self.posterior_weights(y)?;
        let mut ng = DVector::zeros(self.dim);
        for (alpha, comp) in alphas.iter().zip(&self.components) {
            ng -= (&comp.precision * (y - &comp.mean)) * *alpha;
        }
        let step = match &self.shared_covariance {
            Some(shared) => shared.clone(),
            None => self.harmonic_from_posteriors(&alphas)?,
        };
        Ok((ng, step))
    }

    /// Accumulate `Σ_ℓ α_ℓ(y) Σ_ℓ⁻¹ μ_ℓ`, the precision-weighted mean target.
    pub fn precision_weighted_mean(&self, y: &DVector<f64>) -> Result<DVector<f64>> {
        let alphas = self.posterior_weights(y)?;
        let mut acc = DVector::zeros(self.dim);
        for (alpha, comp) in alphas.iter().zip(&self.components) {
            acc += (&comp.precision * &comp.mean) * *alpha;
        }
        Ok(acc)
    }

    /// Draw `n` i.i.d. points using the supplied generator.
    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<Vec<DVector<f64>>> {
        if n == 0 {
            return Err(Error::Input("sample size must be at least 1".into()));
        }
        let mut out = Vec::with_capacity(n);
        for _ in 0..n {
            let u: f64 = rng.gen();
            let mut cum = 0.0;
            let mut chosen = self.components.len() - 1;
            for (idx, c) in self.components.iter().enumerate() {
                cum += c.weight;
                if u < cum {
                    chosen = idx;
                    break;
                }
            }
            let comp = &self.components[chosen];
            let z = DVector::from_fn(self.dim, |_, _| rng.sample::<f64, _>(StandardNormal));
            out.push(&comp.mean + comp.chol.l() * z);
        }
        Ok(out)
    }

    /// Deterministic sampling from a 64-bit seed.
    pub fn sample_seeded(&self, n: usize, seed: u64) -> Result<Vec<DVector<f64>>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        self.sample(n, &mut rng)
    }
}

impl Density for NormalMixture {
    fn dim(&self) -> usize {
        self.dim
    }

    fn log_density(&self, x: &DVector<f64>) -> Result<f64> {
        Ok(log_sum_exp(&self.log_terms(x)?))
    }

    fn grad_over_density(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        let alphas = self.posterior_weights(x)?;
        let mut g = DVector::zeros(self.dim);
        for (alpha, comp) in alphas.iter().zip(&self.components) {
            g -= (&comp.precision * (x - &comp.mean)) * *alpha;
        }
        Ok(g)
    }

    fn hessian_over_density(&self, x: &DVector<f64>) -> Result<DMatrix<f64>> {
        let alphas = self.posterior_weights(x)?;
        let mut h = DMatrix::zeros(self.dim, self.dim);
        for (alpha, comp) in alphas.iter().zip(&self.components) {
            let scaled = &comp.precision * (x - &comp.mean);
            h += (&scaled * scaled.transpose() - &comp.precision) * *alpha;
        }
        Ok(h)
    }
}

/// Kernel density estimator with a full bandwidth matrix,
/// `f̂(x) = n⁻¹ Σ_i |H|^{-1/2} K(H^{-1/2}(x - X_i))`.
#[derive(Debug, Clone)]
pub struct KernelModel {
    data: Vec<DVector<f64>>,
    bandwidth: DMatrix<f64>,
    profile: KernelProfile,
    dim: usize,
    /// H⁻¹.
    precision: DMatrix<f64>,
    /// `log c_k − ½log|H| − log n`, the constant part of each log term.
    log_norm: f64,
    /// Row-major copies for the per-point evaluation loops, which dominate
    /// mean-shift runtime.
    data_flat: Vec<f64>,
    precision_flat: Vec<f64>,
}

impl KernelModel {
    /// Build a KDE from sample points, a bandwidth matrix, and a profile.
    pub fn new(
        data: Vec<DVector<f64>>,
        bandwidth: DMatrix<f64>,
        profile: KernelProfile,
    ) -> Result<Self> {
        if data.is_empty() {
            return Err(Error::Input("kernel model needs at least one data point".into()));
        }
        if !profile.is_convex_decreasing() {
            return Err(Error::Input(
                "kernel profile must be convex and monotonically decreasing".into(),
            ));
        }
        let dim = data[0].len();
        if dim == 0 {
            return Err(Error::Input("data points must have positive dimension".into()));
        }
        for (i, p) in data.iter().enumerate() {
            if p.len() != dim {
                return Err(Error::Input(format!(
                    "data[{i}]: dimension {} differs from data[0] ({dim})",
                    p.len()
                )));
            }
        }
        let chol = validate_spd("bandwidth", &bandwidth)?;
        check_dim(bandwidth.nrows(), dim)?;
        let log_det: f64 = chol.l().diagonal().iter().map(|v| 2.0 * v.ln()).sum();
        let n = data.len() as f64;
        let precision = chol.inverse();
        let precision = (&precision + precision.transpose()) * 0.5;
        let data_flat: Vec<f64> = data.iter().flat_map(|p| p.iter().cloned()).collect();
        let precision_flat: Vec<f64> = (0..dim)
            .flat_map(|a| (0..dim).map(move |b| (a, b)))
            .map(|(a, b)| precision[(a, b)])
            .collect();
        Ok(KernelModel {
            data,
            bandwidth,
            profile,
            dim,
            precision,
            log_norm: profile.log_norm_const(dim) - 0.5 * log_det - n.ln(),
            data_flat,
            precision_flat,
        })
    }

    /// Isotropic kernel with standard deviation `h` per axis: `H = h²·I`.
    pub fn with_scalar_bandwidth(
        data: Vec<DVector<f64>>,
        h: f64,
        profile: KernelProfile,
    ) -> Result<Self> {
        if !(h > 0.0) {
            return Err(Error::Input(format!("bandwidth must be positive, got {h}")));
        }
        let dim = data.first().map(|p| p.len()).unwrap_or(0);
        Self::new(data, DMatrix::identity(dim, dim) * (h * h), profile)
    }

    pub fn data(&self) -> &[DVector<f64>] {
        &self.data
    }

    pub fn bandwidth(&self) -> &DMatrix<f64> {
        &self.bandwidth
    }

    pub(crate) fn precision(&self) -> &DMatrix<f64> {
        &self.precision
    }

    pub fn profile(&self) -> KernelProfile {
        self.profile
    }

    pub fn n_points(&self) -> usize {
        self.data.len()
    }

    fn log_terms(&self, x: &DVector<f64>) -> Result<Vec<f64>> {
        check_dim(self.dim, x.len())?;
        let d = self.dim;
        let n = self.data.len();
        let mut out = Vec::with_capacity(n);
        let mut delta = vec![0.0f64; d];
        for i in 0..n {
            let row = &self.data_flat[i * d..(i + 1) * d];
            for a in 0..d {
                delta[a] = x[a] - row[a];
            }
            let mut t = 0.0;
            for a in 0..d {
                let mut acc = 0.0;
                for b in 0..d {
                    acc += self.precision_flat[a * d + b] * delta[b];
                }
                t += delta[a] * acc;
            }
            out.push(self.log_norm + self.profile.log_value(t));
        }
        Ok(out)
    }

    /// Normalized kernel weights `W_i(y)`: positive and summing to one.
    ///
    /// The mean-shift iterate with the bandwidth step matrix is exactly
    /// `Σ_i W_i(y)·X_i`, a convex combination of the data.
    pub fn shift_weights(&self, y: &DVector<f64>) -> Result<Vec<f64>> {
        let terms = self.log_terms(y)?;
        let log_f = log_sum_exp(&terms);
        if !log_f.is_finite() {
            return Err(Error::ShiftUndefined);
        }
        let mut w: Vec<f64> = terms.iter().map(|t| (t - log_f).exp()).collect();
        let total: f64 = w.iter().sum();
        for wi in &mut w {
            *wi /= total;
        }
        Ok(w)
    }

    /// The mean-shift iterate under the bandwidth step rule: the kernel
    /// weighted mean `Σ_i W_i(y)·X_i`, computed in one pass.
    pub fn shift_target(&self, y: &DVector<f64>) -> Result<DVector<f64>> {
        let w = self.shift_weights(y)?;
        let d = self.dim;
        let mut target = vec![0.0f64; d];
        for (i, wi) in w.iter().enumerate() {
            let row = &self.data_flat[i * d..(i + 1) * d];
            for a in 0..d {
                target[a] += wi * row[a];
            }
        }
        Ok(DVector::from_vec(target))
    }
}

impl Density for KernelModel {
    fn dim(&self) -> usize {
        self.dim
    }

    fn log_density(&self, x: &DVector<f64>) -> Result<f64> {
        Ok(log_sum_exp(&self.log_terms(x)?))
    }

    fn grad_over_density(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        let w = self.shift_weights(x)?;
        let mut weighted = DVector::zeros(self.dim);
        for (wi, xi) in w.iter().zip(&self.data) {
            weighted += (x - xi) * *wi;
        }
        Ok(-(&self.precision * weighted))
    }

    fn hessian_over_density(&self, x: &DVector<f64>) -> Result<DMatrix<f64>> {
        if !self.profile.is_twice_differentiable() {
            return Err(Error::Unsupported(
                "hessian requires a twice-differentiable kernel profile".into(),
            ));
        }
        let w = self.shift_weights(x)?;
        let mut h = DMatrix::zeros(self.dim, self.dim);
        for (wi, xi) in w.iter().zip(&self.data) {
            let scaled = &self.precision * (x - xi);
            h += (&scaled * scaled.transpose() - &self.precision) * *wi;
        }
        Ok(h)
    }
}

/// A density model: either a parametric normal mixture or a KDE.
#[derive(Debug, Clone)]
pub enum Model {
    Mixture(NormalMixture),
    Kde(KernelModel),
}

impl Model {
    pub fn as_mixture(&self) -> Option<&NormalMixture> {
        match self {
            Model::Mixture(m) => Some(m),
            Model::Kde(_) => None,
        }
    }

    pub fn as_kde(&self) -> Option<&KernelModel> {
        match self {
            Model::Kde(k) => Some(k),
            Model::Mixture(_) => None,
        }
    }
}

impl Density for Model {
    fn dim(&self) -> usize {
        match self {
            Model::Mixture(m) => m.dim(),
            Model::Kde(k) => k.dim(),
        }
    }

    fn log_density(&self, x: &DVector<f64>) -> Result<f64> {
        match self {
            Model::Mixture(m) => m.log_density(x),
            Model::Kde(k) => k.log_density(x),
        }
    }

    fn grad_over_density(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        match self {
            Model::Mixture(m) => m.grad_over_density(x),
            Model::Kde(k) => k.grad_over_density(x),
        }
    }

    fn hessian_over_density(&self, x: &DVector<f64>) -> Result<DMatrix<f64>> {
        match self {
            Model::Mixture(m) => m.hessian_over_density(x),
            Model::Kde(k) => k.hessian_over_density(x),
        }
    }
}
