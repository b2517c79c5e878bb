//! Shared test oracles, independent of the library's evaluation paths:
//! direct scalar formulas for mixture densities and derivatives, bisection
//! root finding, and random instance builders.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use modalclust::{Model, NormalMixture};

/// One mixture component in plain scalar form for the oracle evaluator.
#[derive(Clone)]
pub struct ScalarComponent {
    pub weight: f64,
    pub mean: Vec<f64>,
    pub cov: Vec<Vec<f64>>,
}

/// Direct evaluation of the normal mixture density by the textbook formula:
/// explicit inverse and determinant, no factorizations, no log-sum-exp.
pub fn oracle_density(components: &[ScalarComponent], x: &[f64]) -> f64 {
    let d = x.len();
    components
        .iter()
        .map(|c| {
            let (inv, det) = invert(&c.cov);
            let delta: Vec<f64> = x.iter().zip(&c.mean).map(|(a, b)| a - b).collect();
            let mut q = 0.0;
            for i in 0..d {
                for j in 0..d {
                    q += delta[i] * inv[i][j] * delta[j];
                }
            }
            let norm = ((2.0 * std::f64::consts::PI).powi(d as i32) * det).sqrt();
            c.weight * (-0.5 * q).exp() / norm
        })
        .sum()
}

/// Gauss-Jordan inverse with determinant, for the oracle only.
fn invert(m: &[Vec<f64>]) -> (Vec<Vec<f64>>, f64) {
    let n = m.len();
    let mut a: Vec<Vec<f64>> = m.to_vec();
    let mut inv: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    let mut det = 1.0;
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&p, &q| a[p][col].abs().partial_cmp(&a[q][col].abs()).unwrap())
            .unwrap();
        if pivot != col {
            a.swap(col, pivot);
            inv.swap(col, pivot);
            det = -det;
        }
        let p = a[col][col];
        det *= p;
        for j in 0..n {
            a[col][j] /= p;
            inv[col][j] /= p;
        }
        for row in 0..n {
            if row != col {
                let factor = a[row][col];
                for j in 0..n {
                    a[row][j] -= factor * a[col][j];
                    inv[row][j] -= factor * inv[col][j];
                }
            }
        }
    }
    (inv, det)
}

/// Bisection on a sign change of `f` over `[lo, hi]`.
pub fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let flo = f(lo);
    assert!(flo * f(hi) < 0.0, "no sign change over [{lo}, {hi}]");
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

/// Equal mixture of N((-1.5,0), I) and N((1.5,0), I): two clearly separated
/// groups split by the vertical axis.
pub fn bimodal_2d() -> NormalMixture {
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
    .unwrap()
}

/// Slope of the bimodal density along the x-axis, up to a positive constant.
pub fn bimodal_axis_slope(t: f64) -> f64 {
    -(t + 1.5) * (-0.5 * (t + 1.5) * (t + 1.5)).exp()
        - (t - 1.5) * (-0.5 * (t - 1.5) * (t - 1.5)).exp()
}

/// Trimodal density proportional to 6e^{-x²/2} + 4e^{-(x-3)²/2} + 2e^{-(x-6)²}.
pub fn trimodal_1d() -> NormalMixture {
    let two_pi_sqrt = (2.0 * std::f64::consts::PI).sqrt();
    let pi_sqrt = std::f64::consts::PI.sqrt();
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
    .unwrap()
}

/// Derivative of the trimodal density up to a positive constant.
pub fn trimodal_slope(x: f64) -> f64 {
    -6.0 * x * (-x * x / 2.0).exp()
        - 4.0 * (x - 3.0) * (-(x - 3.0) * (x - 3.0) / 2.0).exp()
        - 4.0 * (x - 6.0) * (-(x - 6.0) * (x - 6.0)).exp()
}

/// Random well-conditioned mixture for property tests.
pub fn random_mixture(rng: &mut ChaCha8Rng, dim: usize, n_comp: usize) -> NormalMixture {
    let raw: Vec<f64> = (0..n_comp).map(|_| rng.gen_range(0.2..1.0)).collect();
    let total: f64 = raw.iter().sum();
    NormalMixture::new(
        raw.iter()
            .map(|w| {
                let mean = DVector::from_fn(dim, |_, _| rng.gen_range(-2.5..2.5));
                let a = DMatrix::from_fn(dim, dim, |_, _| rng.gen_range(-1.0..1.0));
                let cov = &a * a.transpose() + DMatrix::identity(dim, dim) * 0.35;
                (w / total, mean, cov)
            })
            .collect(),
    )
    .unwrap()
}

/// Scalar form of a built mixture, for feeding the oracle evaluator.
pub fn scalar_components(m: &NormalMixture) -> Vec<ScalarComponent> {
    m.weights()
        .iter()
        .zip(m.means())
        .zip(m.covariances())
        .map(|((w, mean), cov)| ScalarComponent {
            weight: *w,
            mean: mean.iter().cloned().collect(),
            cov: (0..cov.nrows())
                .map(|i| (0..cov.ncols()).map(|j| cov[(i, j)]).collect())
                .collect(),
        })
        .collect()
}

/// Random label vector over `n` atoms with every label in `0..k` present.
pub fn random_full_labels(rng: &mut ChaCha8Rng, n: usize, k: usize) -> Vec<usize> {
    let mut labels: Vec<usize> = (0..n).map(|_| rng.gen_range(0..k)).collect();
    // pin each label at a distinct position (partial Fisher-Yates) so every
    // cluster is non-empty
    let mut positions: Vec<usize> = (0..n).collect();
    for l in 0..k {
        let j = rng.gen_range(l..n);
        positions.swap(l, j);
        labels[positions[l]] = l;
    }
    labels
}

pub fn model_of(m: NormalMixture) -> Model {
    Model::Mixture(m)
}
