//! Data-generating model, noise reparameterization, and cost functions.
//!
//! All costs are expressed through the reparameterized sample mean
//! X̄ = μ⁰ + (σ/√n)ξ with ξ standard normal (or N(0, Σ) in the correlated
//! model), so one d-vector draw stands in for a whole size-n data set.
//!
//! Every cost used here is affine over the support of μ after a per-ξ
//! precomputation: cost(μ) = g(base + Σ_{j ∈ supp(μ)} delta_j). `CostCtx`
//! caches `base` and `delta` once per noise draw, making each hypothesis
//! evaluation O(k) instead of O(d).

use alloc::vec::Vec;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::hypothesis::Hypothesis;

/// Noise covariance of one feature vector, normalized to unit diagonal.
#[derive(Debug, Clone)]
pub enum Covariance {
    /// Independent features: Σ = I_d.
    Identity,
    /// Correlated features: Σ stored row-major together with its lower
    /// Cholesky factor, computed once at construction.
    Dense { dim: usize, matrix: Vec<f64>, chol: Vec<f64> },
}

impl Covariance {
    /// Builds a dense covariance from a row-major d×d matrix, checking
    /// symmetry, unit diagonal, and positive definiteness.
    pub fn dense(dim: usize, matrix: Vec<f64>) -> Result<Self> {
        if matrix.len() != dim * dim {
            return Err(Error::DimensionMismatch { expected: dim * dim, got: matrix.len() });
        }
        for i in 0..dim {
            if (matrix[i * dim + i] - 1.0).abs() > 1e-12 {
                return Err(Error::Domain("covariance diagonal must be 1"));
            }
            for j in 0..i {
                if (matrix[i * dim + j] - matrix[j * dim + i]).abs() > 1e-12 {
                    return Err(Error::Domain("covariance must be symmetric"));
                }
            }
        }
        let chol = cholesky_lower(dim, &matrix)?;
        Ok(Covariance::Dense { dim, matrix, chol })
    }

    pub fn is_identity(&self) -> bool {
        matches!(self, Covariance::Identity)
    }
}

/// Lower Cholesky factor of a symmetric positive-definite matrix,
/// row-major, or `NotPositiveDefinite`.
fn cholesky_lower(dim: usize, a: &[f64]) -> Result<Vec<f64>> {
    let mut l = alloc::vec![0.0f64; dim * dim];
    for i in 0..dim {
        for j in 0..=i {
            let mut s = a[i * dim + j];
            for t in 0..j {
                s -= l[i * dim + t] * l[j * dim + t];
            }
            if i == j {
                if s <= 0.0 {
                    return Err(Error::NotPositiveDefinite);
                }
                l[i * dim + i] = libm::sqrt(s);
            } else {
                l[i * dim + j] = s / l[j * dim + j];
            }
        }
    }
    Ok(l)
}

/// Problem instance: true mean, noise level, sample size, covariance.
#[derive(Debug, Clone)]
pub struct ModelParams {
    pub mu0: Hypothesis,
    pub sigma: f64,
    pub n: u32,
    pub covariance: Covariance,
}

impl ModelParams {
    /// Identity-covariance instance with the default sample size n = 100.
    pub fn new(mu0: Hypothesis, sigma: f64) -> Result<Self> {
        Self::with_n(mu0, sigma, 100)
    }

    pub fn with_n(mu0: Hypothesis, sigma: f64, n: u32) -> Result<Self> {
        if !(sigma > 0.0) {
            return Err(Error::Domain("sigma must be positive"));
        }
        if n == 0 {
            return Err(Error::Domain("n must be at least 1"));
        }
        Ok(ModelParams { mu0, sigma, n, covariance: Covariance::Identity })
    }

    pub fn with_covariance(mut self, covariance: Covariance) -> Result<Self> {
        if let Covariance::Dense { dim, .. } = &covariance {
            if *dim != self.mu0.dim() as usize {
                return Err(Error::DimensionMismatch {
                    expected: self.mu0.dim() as usize,
                    got: *dim,
                });
            }
        }
        self.covariance = covariance;
        Ok(self)
    }

    pub fn d(&self) -> u32 {
        self.mu0.dim()
    }

    /// The noise scale s = σ/√n multiplying ξ in X̄ = μ⁰ + sξ.
    pub fn scale(&self) -> f64 {
        self.sigma / libm::sqrt(self.n as f64)
    }
}

/// One standardized noise vector ξ.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseDraw {
    pub xi: Vec<f64>,
}

impl NoiseDraw {
    pub fn zeros(d: u32) -> Self {
        NoiseDraw { xi: alloc::vec![0.0; d as usize] }
    }

    pub fn dim(&self) -> usize {
        self.xi.len()
    }
}

/// Draws ξ ∼ N(0, I_d), or N(0, Σ) for a dense covariance.
pub fn draw_noise<R: Rng + ?Sized>(params: &ModelParams, rng: &mut R) -> NoiseDraw {
    let d = params.d() as usize;
    let z: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
    match &params.covariance {
        Covariance::Identity => NoiseDraw { xi: z },
        Covariance::Dense { dim, chol, .. } => {
            let mut xi = alloc::vec![0.0f64; *dim];
            for i in 0..*dim {
                let mut s = 0.0;
                for j in 0..=i {
                    s += chol[i * dim + j] * z[j];
                }
                xi[i] = s;
            }
            NoiseDraw { xi }
        }
    }
}

fn check_dims(mu: &Hypothesis, xi: &NoiseDraw) -> Result<()> {
    if mu.dim() as usize != xi.dim() {
        return Err(Error::DimensionMismatch { expected: mu.dim() as usize, got: xi.dim() });
    }
    Ok(())
}

fn bitf(mu: &Hypothesis, j: u32) -> f64 {
    if mu.bit(j) {
        1.0
    } else {
        0.0
    }
}

/// Squared L2 cost ‖μ − μ⁰ − sξ‖²₂.
pub fn risk_sq(mu: &Hypothesis, xi: &NoiseDraw, params: &ModelParams) -> Result<f64> {
    check_dims(mu, xi)?;
    let s = params.scale();
    let mut total = 0.0;
    for j in 0..mu.dim() {
        let xbar = bitf(&params.mu0, j) + s * xi.xi[j as usize];
        let r = bitf(mu, j) - xbar;
        total += r * r;
    }
    Ok(total)
}

/// Linear form μᵀ(1 − 2sξ − 2μ⁰); differs from `risk_sq` by a constant
/// independent of μ, so Gibbs distributions and information content agree.
pub fn risk_linear(mu: &Hypothesis, xi: &NoiseDraw, params: &ModelParams) -> Result<f64> {
    check_dims(mu, xi)?;
    let s = params.scale();
    let mut total = 0.0;
    for &j in mu.support() {
        total += 1.0 - 2.0 * s * xi.xi[j as usize] - 2.0 * bitf(&params.mu0, j);
    }
    Ok(total)
}

/// Hit-count form −2[h + s·μᵀξ]; on the sparse class equals
/// `risk_linear` − k because μᵀ1 = k there.
pub fn risk_hits(h: u32, dot: f64, params: &ModelParams) -> f64 {
    -2.0 * (h as f64 + params.scale() * dot)
}

/// Joint form 2μᵀ(1 − √2·sξ − 2μ⁰) for a single draw ξ standing in for
/// (ξ₁+ξ₂)/√2; distributionally equal to risk_linear(μ,ξ₁)+risk_linear(μ,ξ₂).
pub fn joint_risk_crn(mu: &Hypothesis, xi: &NoiseDraw, params: &ModelParams) -> Result<f64> {
    check_dims(mu, xi)?;
    let s = params.scale();
    let sqrt2 = libm::sqrt(2.0);
    let mut total = 0.0;
    for &j in mu.support() {
        total += 2.0 * (1.0 - sqrt2 * s * xi.xi[j as usize] - 2.0 * bitf(&params.mu0, j));
    }
    Ok(total)
}

/// Squared L1 cost (Σ_j |μ_j − X̄_j|)².
pub fn risk_l1(mu: &Hypothesis, xi: &NoiseDraw, params: &ModelParams) -> Result<f64> {
    let v = risk_l1_unsquared(mu, xi, params)?;
    Ok(v * v)
}

/// Plain L1 cost Σ_j |μ_j − X̄_j| (the unsquared variant).
pub fn risk_l1_unsquared(mu: &Hypothesis, xi: &NoiseDraw, params: &ModelParams) -> Result<f64> {
    check_dims(mu, xi)?;
    let s = params.scale();
    let mut total = 0.0;
    for j in 0..mu.dim() {
        let xbar = bitf(&params.mu0, j) + s * xi.xi[j as usize];
        total += (bitf(mu, j) - xbar).abs();
    }
    Ok(total)
}

/// Log-domain Boltzmann weight −β·cost (exponentiation is deferred to
/// log-sum-exp).
pub fn boltzmann_logweight(beta: f64, cost: f64) -> f64 {
    -beta * cost
}

/// Which cost function a run uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CostKind {
    /// ‖μ − X̄‖²₂ (default).
    SquaredL2,
    /// (‖μ − X̄‖₁)², the squared L1 form.
    L1Squared,
    /// ‖μ − X̄‖₁, the unsquared variant.
    L1,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Post {
    None,
    Square,
}

/// Per-noise-draw evaluation context: cost(μ) = g(base + Σ_{supp μ} delta_j),
/// where g is identity or squaring. O(k) per hypothesis after O(d) setup.
#[derive(Debug, Clone)]
pub struct CostCtx {
    base: f64,
    delta: Vec<f64>,
    post: Post,
}

impl CostCtx {
    /// Context for the configured cost kind on noise draw ξ.
    pub fn new(kind: CostKind, xi: &NoiseDraw, params: &ModelParams) -> Result<Self> {
        if params.d() as usize != xi.dim() {
            return Err(Error::DimensionMismatch {
                expected: params.d() as usize,
                got: xi.dim(),
            });
        }
        let s = params.scale();
        let d = xi.dim();
        match kind {
            CostKind::SquaredL2 => {
                // (μ_j − X̄_j)² = X̄_j² + μ_j(1 − 2X̄_j) for binary μ_j.
                let mut base = 0.0;
                let mut delta = alloc::vec![0.0f64; d];
                for j in 0..d {
                    let xbar = bitf(&params.mu0, j as u32) + s * xi.xi[j];
                    base += xbar * xbar;
                    delta[j] = 1.0 - 2.0 * xbar;
                }
                Ok(CostCtx { base, delta, post: Post::None })
            }
            CostKind::L1 | CostKind::L1Squared => {
                let mut base = 0.0;
                let mut delta = alloc::vec![0.0f64; d];
                for j in 0..d {
                    let xbar = bitf(&params.mu0, j as u32) + s * xi.xi[j];
                    base += xbar.abs();
                    delta[j] = (1.0 - xbar).abs() - xbar.abs();
                }
                let post = if kind == CostKind::L1Squared { Post::Square } else { Post::None };
                Ok(CostCtx { base, delta, post })
            }
        }
    }

    /// Context for the linear form μᵀ(1 − 2sξ − 2μ⁰).
    pub fn linear(xi: &NoiseDraw, params: &ModelParams) -> Result<Self> {
        Self::affine(xi, params, 2.0, 1.0)
    }

    /// Context for the joint form 2μᵀ(1 − √2·sξ − 2μ⁰).
    pub fn joint_linear(xi: &NoiseDraw, params: &ModelParams) -> Result<Self> {
        Self::affine(xi, params, 2.0 * libm::sqrt(2.0), 2.0)
    }

    fn affine(xi: &NoiseDraw, params: &ModelParams, noise_coef: f64, outer: f64) -> Result<Self> {
        if params.d() as usize != xi.dim() {
            return Err(Error::DimensionMismatch {
                expected: params.d() as usize,
                got: xi.dim(),
            });
        }
        let s = params.scale();
        let d = xi.dim();
        let mut delta = alloc::vec![0.0f64; d];
        for j in 0..d {
            delta[j] =
                outer * (1.0 - 2.0 * bitf(&params.mu0, j as u32)) - noise_coef * s * xi.xi[j];
        }
        Ok(CostCtx { base: 0.0, delta, post: Post::None })
    }

    /// Cost of a hypothesis, O(popcount).
    pub fn eval(&self, mu: &Hypothesis) -> f64 {
        self.eval_support(mu.support())
    }

    /// Cost from a support slice alone (for enumeration loops that never
    /// materialize a `Hypothesis`).
    pub fn eval_support(&self, support: &[u32]) -> f64 {
        let mut total = self.base;
        for &j in support {
            total += self.delta[j as usize];
        }
        match self.post {
            Post::None => total,
            Post::Square => total * total,
        }
    }
}
