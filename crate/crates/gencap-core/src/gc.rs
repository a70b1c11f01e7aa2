//! Information content, noise-repetition averaging under common random
//! numbers, and generalization-capacity estimation over a β grid.
//!
//! Per repetition i the information content over the grid is
//! Î^i_β = log|𝒞| + logΔZ_β − logZ_β(ξ₁) − logZ_β(ξ₂) (absolute
//! normalization; the log|𝒞| term cancels against the mean normalization of
//! the sampling estimators). The generalization capacity is the grid maximum
//! of the repetition mean.

use alloc::vec::Vec;

use crate::cost::{draw_noise, CostCtx, CostKind, ModelParams, NoiseDraw};
use crate::error::{Error, Result};
use crate::hypothesis::HypothesisClass;
use crate::partition::{
    draw_stratified_set, draw_uniform_set, exhaustive_logz_grid, exhaustive_triple_grid,
    sampled_logz_grid, sampled_triple_grid, DrawSet, LogPartitionTriple, LogSumExpAcc,
    Normalization,
};
use crate::rng::substream;

/// Strictly increasing grid of positive resolutions β.
#[derive(Debug, Clone, PartialEq)]
pub struct BetaGrid {
    betas: Vec<f64>,
}

impl BetaGrid {
    pub fn new(betas: Vec<f64>) -> Result<Self> {
        if betas.is_empty() {
            return Err(Error::Domain("beta grid must be nonempty"));
        }
        if betas.iter().any(|&b| !(b > 0.0) || !b.is_finite()) {
            return Err(Error::Domain("beta grid entries must be positive and finite"));
        }
        if betas.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Domain("beta grid must be strictly increasing"));
        }
        Ok(BetaGrid { betas })
    }

    /// `count` log-spaced points on [min, max].
    pub fn log_spaced(min: f64, max: f64, count: usize) -> Result<Self> {
        if !(min > 0.0) || !(max > min) || count < 2 {
            return Err(Error::Domain("log-spaced grid needs 0 < min < max and count >= 2"));
        }
        let (lo, hi) = (libm::log(min), libm::log(max));
        let betas = (0..count)
            .map(|i| libm::exp(lo + (hi - lo) * i as f64 / (count - 1) as f64))
            .collect();
        Self::new(betas)
    }

    pub fn betas(&self) -> &[f64] {
        &self.betas
    }

    pub fn len(&self) -> usize {
        self.betas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.betas.is_empty()
    }
}

/// Which partition estimator a run uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Exhaustive,
    Uniform,
    Importance,
}

/// Noise-coupling scheme across the three partition terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CrnScheme {
    /// Independent draws: m draws feed both single-Z terms, a second m feed
    /// ΔZ through the joint single-draw form.
    Crn1,
    /// All 2m draws feed every term; consecutive draws pair up for ΔZ.
    Crn2,
    /// Fully coupled pairs (ξ₁ᵢ, ξ₂ᵢ) shared by Z(ξ₁), Z(ξ₂) and ΔZ.
    Crn3,
}

/// Full estimator configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EstimatorSpec {
    pub method: Method,
    /// Hypothesis sample size per partition sum (sampling methods).
    pub r: usize,
    /// Number of noise repetitions.
    pub m: usize,
    pub crn: CrnScheme,
    pub master_seed: u64,
}

impl EstimatorSpec {
    pub fn validate(&self) -> Result<()> {
        if self.m < 2 {
            return Err(Error::Domain("m must be at least 2 for variance estimates"));
        }
        if self.method != Method::Exhaustive && self.r == 0 {
            return Err(Error::Domain("sampling methods need r >= 1"));
        }
        Ok(())
    }
}

/// Per-β mean information content, its sample variance, and the grid
/// maximum.
#[derive(Debug, Clone, PartialEq)]
pub struct GcResult {
    pub betas: Vec<f64>,
    pub per_beta_mean: Vec<f64>,
    pub per_beta_variance: Vec<f64>,
    pub beta_star_index: usize,
    pub beta_star: f64,
    pub gc_estimate: f64,
    pub std_at_beta_star: f64,
}

/// Î_β from one partition triple: log|𝒞| + logΔZ − logZ₁ − logZ₂ in
/// absolute normalization; the class-size term must be 0 for the mean
/// normalization, where it cancels.
pub fn information_content(triple: &LogPartitionTriple, log_cardinality: f64) -> Result<f64> {
    match triple.normalization {
        Normalization::Absolute => {
            Ok(log_cardinality + triple.log_dz - triple.log_z1 - triple.log_z2)
        }
        Normalization::Mean => {
            if log_cardinality != 0.0 {
                return Err(Error::NormalizationMismatch);
            }
            Ok(triple.log_dz - triple.log_z1 - triple.log_z2)
        }
    }
}

/// The noise draws of a full run and the per-repetition index assignments.
#[derive(Debug, Clone)]
pub struct NoisePlan {
    pub scheme: CrnScheme,
    pub draws: Vec<NoiseDraw>,
    /// Per repetition: indices into `draws`. For CRN-2/3 these are the
    /// (ξ₁, ξ₂) pair; for CRN-1 the (Z-draw, joint-ΔZ-draw) pair.
    pub pairs: Vec<(usize, usize)>,
}

/// Draws all noise for m repetitions on substream 0 of the master seed.
pub fn crn_noise_plan(
    scheme: CrnScheme,
    m: usize,
    params: &ModelParams,
    master_seed: u64,
) -> NoisePlan {
    let mut rng = substream(master_seed, 0);
    let draws: Vec<NoiseDraw> = (0..2 * m).map(|_| draw_noise(params, &mut rng)).collect();
    let pairs = match scheme {
        // draw i feeds both Z terms of repetition i, draw m+i feeds ΔZ
        CrnScheme::Crn1 => (0..m).map(|i| (i, m + i)).collect(),
        // consecutive draws pair up; every draw appears in exactly one pair,
        // so the repetition mean uses all 2m draws for the Z terms as well
        CrnScheme::Crn2 | CrnScheme::Crn3 => (0..m).map(|i| (2 * i, 2 * i + 1)).collect(),
    };
    NoisePlan { scheme, draws, pairs }
}

fn hypothesis_draws<R: rand::Rng + ?Sized>(
    method: Method,
    class: &HypothesisClass,
    params: &ModelParams,
    r: usize,
    rng: &mut R,
) -> Result<Option<DrawSet>> {
    match method {
        Method::Exhaustive => Ok(None),
        Method::Uniform => Ok(Some(draw_uniform_set(class, r, rng)?)),
        Method::Importance => match class {
            HypothesisClass::Sparse(space) => {
                Ok(Some(draw_stratified_set(space, &params.mu0, r, rng)?))
            }
            HypothesisClass::Full { .. } => Err(Error::Unsupported(
                "importance sampling requires the sparse hypothesis class",
            )),
        },
    }
}

/// Î^i_β over the whole grid for repetition `rep`. Hypothesis draws for the
/// sampling estimators come from substream 1 + rep of the master seed, so
/// repetitions can be evaluated in any order or in parallel.
pub fn repetition_information(
    params: &ModelParams,
    class: &HypothesisClass,
    grid: &BetaGrid,
    kind: CostKind,
    spec: &EstimatorSpec,
    plan: &NoisePlan,
    rep: usize,
) -> Result<Vec<f64>> {
    let (a, b) = plan.pairs[rep];
    let betas = grid.betas();
    let ln_card = class.ln_cardinality();
    let mut rng = substream(spec.master_seed, 1 + rep as u64);
    let draws = hypothesis_draws(spec.method, class, params, spec.r, &mut rng)?;

    match plan.scheme {
        CrnScheme::Crn2 | CrnScheme::Crn3 => {
            let ctx1 = CostCtx::new(kind, &plan.draws[a], params)?;
            let ctx2 = CostCtx::new(kind, &plan.draws[b], params)?;
            let triples = match &draws {
                None => exhaustive_triple_grid(betas, &ctx1, &ctx2, class)?,
                Some(set) => sampled_triple_grid(betas, &ctx1, &ctx2, set)?,
            };
            triples
                .iter()
                .map(|t| {
                    let lc = match t.normalization {
                        Normalization::Absolute => ln_card,
                        Normalization::Mean => 0.0,
                    };
                    let i = information_content(t, lc)?;
                    if t.normalization == Normalization::Absolute {
                        // exact bound: ΔZ <= Z1 Z2 termwise
                        assert!(i <= ln_card + 1e-9, "information content exceeds log-cardinality");
                    }
                    Ok(i)
                })
                .collect()
        }
        CrnScheme::Crn1 => {
            // the joint ΔZ form exists only for the linear/squared-L2 cost
            if kind != CostKind::SquaredL2 {
                return Err(Error::Unsupported("CRN-1 requires the squared-L2 cost"));
            }
            let ctx_z = CostCtx::linear(&plan.draws[a], params)?;
            let ctx_dz = CostCtx::joint_linear(&plan.draws[b], params)?;
            let (log_z, log_dz) = match &draws {
                None => (
                    exhaustive_logz_grid(betas, &ctx_z, class)?,
                    exhaustive_logz_grid(betas, &ctx_dz, class)?,
                ),
                Some(set) => (
                    sampled_logz_grid(betas, &ctx_z, set)?,
                    sampled_logz_grid(betas, &ctx_dz, set)?,
                ),
            };
            let offset = if draws.is_none() { ln_card } else { 0.0 };
            Ok(log_dz
                .iter()
                .zip(&log_z)
                .map(|(dz, z)| offset + dz - 2.0 * z)
                .collect())
        }
    }
}

/// Collapses per-repetition information curves into the final result:
/// per-β mean and sample variance, grid maximum, smallest maximizing β.
pub fn assemble_gc(grid: &BetaGrid, per_rep: &[Vec<f64>]) -> Result<GcResult> {
    let m = per_rep.len();
    if m < 2 {
        return Err(Error::Domain("need at least 2 repetitions"));
    }
    let l = grid.len();
    let mut mean = alloc::vec![0.0f64; l];
    let mut var = alloc::vec![0.0f64; l];
    for rep in per_rep {
        if rep.len() != l {
            return Err(Error::DimensionMismatch { expected: l, got: rep.len() });
        }
        for (s, &v) in mean.iter_mut().zip(rep) {
            *s += v;
        }
    }
    for s in &mut mean {
        *s /= m as f64;
    }
    for rep in per_rep {
        for ((v, &x), &mu) in var.iter_mut().zip(rep).zip(&mean) {
            *v += (x - mu) * (x - mu);
        }
    }
    for v in &mut var {
        *v /= (m - 1) as f64;
    }
    let mut star = 0usize;
    for (i, &x) in mean.iter().enumerate() {
        if x > mean[star] {
            star = i;
        }
    }
    Ok(GcResult {
        betas: grid.betas().to_vec(),
        per_beta_mean: mean.clone(),
        per_beta_variance: var.clone(),
        beta_star_index: star,
        beta_star: grid.betas()[star],
        gc_estimate: mean[star],
        std_at_beta_star: libm::sqrt(var[star]),
    })
}

/// Full pipeline: noise plan, m repetitions, grid maximum. Deterministic in
/// the master seed; repetitions are evaluated serially here, and
/// `repetition_information` is public so callers can distribute them.
pub fn estimate_gc(
    params: &ModelParams,
    class: &HypothesisClass,
    grid: &BetaGrid,
    kind: CostKind,
    spec: &EstimatorSpec,
) -> Result<GcResult> {
    spec.validate()?;
    let plan = crn_noise_plan(spec.crn, spec.m, params, spec.master_seed);
    let mut per_rep = Vec::with_capacity(spec.m);
    for rep in 0..spec.m {
        per_rep.push(repetition_information(params, class, grid, kind, spec, &plan, rep)?);
    }
    assemble_gc(grid, &per_rep)
}

/// Gibbs distribution over the enumerated class for a cost context.
pub fn gibbs_distribution_ctx(
    beta: f64,
    ctx: &CostCtx,
    class: &HypothesisClass,
) -> Result<Vec<f64>> {
    class.check_enumerable()?;
    let mut logs = Vec::new();
    class.for_each(|mu| logs.push(-beta * ctx.eval(mu)))?;
    let mut acc = LogSumExpAcc::new();
    for &v in &logs {
        acc.push(v);
    }
    let log_z = acc.log_sum()?;
    Ok(logs.iter().map(|&v| libm::exp(v - log_z)).collect())
}

/// Gibbs distribution P_G(μ) = e^{−β·cost(μ)} / Z_β over the enumerated
/// class, in canonical enumeration order.
pub fn gibbs_distribution(
    beta: f64,
    xi: &NoiseDraw,
    class: &HypothesisClass,
    kind: CostKind,
    params: &ModelParams,
) -> Result<Vec<f64>> {
    let ctx = CostCtx::new(kind, xi, params)?;
    gibbs_distribution_ctx(beta, &ctx, class)
}

/// Component marginals ℙ_G(μ_j = 1) of the Gibbs distribution.
pub fn componentwise_gibbs(
    beta: f64,
    xi: &NoiseDraw,
    class: &HypothesisClass,
    kind: CostKind,
    params: &ModelParams,
) -> Result<Vec<f64>> {
    let probs = gibbs_distribution(beta, xi, class, kind, params)?;
    let mut marginals = alloc::vec![0.0f64; class.d() as usize];
    let mut idx = 0usize;
    class.for_each(|mu| {
        for &j in mu.support() {
            marginals[j as usize] += probs[idx];
        }
        idx += 1;
    })?;
    Ok(marginals)
}
