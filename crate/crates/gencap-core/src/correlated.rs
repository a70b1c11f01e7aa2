//! Stratified estimation of E_ξ[log Z_β(ξ)] for correlated features.
//!
//! With the hit-count risk on the sparse class, log Z decomposes over
//! hit-count strata: Z = Σ_h e^{2βh} Y_h(ξ) with
//! Y_h = Σ_{μ ∈ 𝒞ᵏ_h} e^{βη(μ)} and η(μ) = 2sμᵀξ. Reweighting by the
//! hypergeometric law of the hit count turns the stratum sum into an
//! expectation that can be sampled:
//! E[log Z] = −βk + log C(d,k) + E_ξ log E_H[e^{2βH} Y_H(ξ) / |𝒞ᵏ_H|]
//! (the −βk constant shifts to the linear-form risk; additive constants do
//! not affect Gibbs quantities). Y_h is evaluated exactly at small d or via
//! a pluggable η-collapse approximation.

use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Distribution, Hypergeometric};

use crate::cost::{draw_noise, CostCtx, ModelParams, NoiseDraw};
use crate::error::{Error, Result};
use crate::hypothesis::{
    ln_stratum_size, sample_in_stratum, stratum_size, HypothesisClass, SparseSpace,
    ENUMERATION_GUARD,
};
use crate::partition::{exhaustive_logz_grid, LogSumExpAcc};
use crate::rng::substream;

/// Law of the hit count H = μᵀμ⁰ of a uniform draw from 𝒞ᵏ:
/// Hypergeometric with population d, k marked, k drawn.
#[derive(Debug, Clone)]
pub struct HypergeometricLaw {
    space: SparseSpace,
    dist: Hypergeometric,
}

impl HypergeometricLaw {
    pub fn new(space: SparseSpace) -> Result<Self> {
        let (d, k) = (space.d() as u64, space.k() as u64);
        let dist = Hypergeometric::new(d, k, k)
            .map_err(|_| Error::Domain("invalid hypergeometric parameters"))?;
        Ok(HypergeometricLaw { space, dist })
    }

    /// P(H = h) = C(k,h) C(d−k,k−h) / C(d,k), exact counts divided in f64.
    pub fn pmf(&self, h: u32) -> Result<f64> {
        let num = stratum_size(self.space.d(), self.space.k(), h)?;
        Ok(num as f64 / self.space.cardinality() as f64)
    }

    pub fn support(&self) -> core::ops::RangeInclusive<u32> {
        self.space.min_hits()..=self.space.k()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u32 {
        self.dist.sample(rng) as u32
    }
}

/// Visits every k-subset of {0,..,n-1} in lexicographic order.
fn for_each_combination<F: FnMut(&[u32])>(n: u32, k: u32, mut f: F) {
    if k > n {
        return;
    }
    let mut idx: Vec<u32> = (0..k).collect();
    loop {
        f(&idx);
        // advance to the next combination
        let mut i = k;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            if idx[i as usize] < n - k + i {
                break;
            }
        }
        if idx[i as usize] >= n - k + i {
            return;
        }
        idx[i as usize] += 1;
        for j in i + 1..k {
            idx[j as usize] = idx[j as usize - 1] + 1;
        }
    }
}

/// log Y_h(ξ) by exact enumeration of the stratum. The sum factorizes over
/// hit and miss positions: Y_h = (Σ_{A ⊂ supp μ⁰, |A|=h} e^{2βs Σ_A ξ}) ·
/// (Σ_{B ⊂ supp μ⁰ᶜ, |B|=k−h} e^{2βs Σ_B ξ}).
pub fn y_h_exact(beta: f64, h: u32, xi: &NoiseDraw, params: &ModelParams) -> Result<f64> {
    let d = params.d();
    let k = params.mu0.popcount();
    if stratum_size(d, k, h)? > ENUMERATION_GUARD {
        return Err(Error::Capacity { d, k: Some(k) });
    }
    let s = params.scale();
    let supp0 = params.mu0.support();
    let comp: Vec<u32> = (0..d).filter(|j| !params.mu0.bit(*j)).collect();
    let factor = |positions: &[u32], take: u32| -> Result<f64> {
        let mut acc = LogSumExpAcc::new();
        for_each_combination(positions.len() as u32, take, |subset| {
            let eta_part: f64 =
                subset.iter().map(|&t| xi.xi[positions[t as usize] as usize]).sum();
            acc.push(2.0 * beta * s * eta_part);
        });
        acc.log_sum()
    };
    Ok(factor(supp0, h)? + factor(&comp, k - h)?)
}

/// log Y_h under the η(μ) ≈ η_h collapse: log|𝒞ᵏ_h| + β·η_h.
pub fn y_h_eta_approx(beta: f64, h: u32, eta_h: f64, d: u32, k: u32) -> f64 {
    ln_stratum_size(d, k, h) + beta * eta_h
}

/// Strategy for evaluating log Y_h inside the estimator.
pub enum YhApproximator<'a> {
    /// Exact stratum sum; needs the stratum to be enumerable.
    Exact,
    /// η-collapse with η evaluated at one uniformly drawn stratum
    /// representative per evaluation.
    EtaRepresentative,
    /// η-collapse with a caller-supplied representative η_h(ξ).
    EtaCollapse(&'a dyn Fn(u32, &NoiseDraw) -> f64),
}

impl YhApproximator<'_> {
    fn ln_y_h<R: Rng + ?Sized>(
        &self,
        beta: f64,
        h: u32,
        xi: &NoiseDraw,
        params: &ModelParams,
        space: &SparseSpace,
        rng: &mut R,
    ) -> Result<f64> {
        match self {
            YhApproximator::Exact => y_h_exact(beta, h, xi, params),
            YhApproximator::EtaRepresentative => {
                let mu = sample_in_stratum(space, &params.mu0, h, rng);
                let dot: f64 = mu.support().iter().map(|&j| xi.xi[j as usize]).sum();
                let eta = 2.0 * params.scale() * dot;
                Ok(y_h_eta_approx(beta, h, eta, space.d(), space.k()))
            }
            YhApproximator::EtaCollapse(f) => {
                Ok(y_h_eta_approx(beta, h, f(h, xi), space.d(), space.k()))
            }
        }
    }
}

/// One-ξ term of the estimator: −βk + log C(d,k) + log (1/p) Σⱼ aⱼ with
/// aⱼ = e^{2βHⱼ} Y_{Hⱼ}(ξ) / |𝒞ᵏ_{Hⱼ}| and Hⱼ hypergeometric.
pub fn elogz_rep<R: Rng + ?Sized>(
    params: &ModelParams,
    space: &SparseSpace,
    beta: f64,
    p: usize,
    approx: &YhApproximator<'_>,
    xi: &NoiseDraw,
    rng: &mut R,
) -> Result<f64> {
    if p == 0 {
        return Err(Error::Domain("inner sample size p must be at least 1"));
    }
    let law = HypergeometricLaw::new(*space)?;
    let (d, k) = (space.d(), space.k());
    let mut acc = LogSumExpAcc::new();
    for _ in 0..p {
        let h = law.sample(rng);
        let ln_y = approx.ln_y_h(beta, h, xi, params, space, rng)?;
        acc.push(2.0 * beta * h as f64 - ln_stratum_size(d, k, h) + ln_y);
    }
    Ok(-beta * k as f64 + space.ln_cardinality() + acc.log_mean()?)
}

/// Test hook: replaces the inner sampling by exact enumeration of all hit
/// counts with exact pmf weights. With exact Y_h this equals the exhaustive
/// linear-form log Z_β(ξ) identically.
pub fn elogz_enumerate_h(
    params: &ModelParams,
    space: &SparseSpace,
    beta: f64,
    xi: &NoiseDraw,
) -> Result<f64> {
    let law = HypergeometricLaw::new(*space)?;
    let (d, k) = (space.d(), space.k());
    let mut acc = LogSumExpAcc::new();
    for h in law.support() {
        let ln_y = y_h_exact(beta, h, xi, params)?;
        acc.push(libm::log(law.pmf(h)?) + 2.0 * beta * h as f64 - ln_stratum_size(d, k, h) + ln_y);
    }
    Ok(-beta * k as f64 + space.ln_cardinality() + acc.log_sum()?)
}

/// The estimate together with its per-repetition terms.
#[derive(Debug, Clone, PartialEq)]
pub struct ElogzEstimate {
    pub mean: f64,
    pub per_rep: Vec<f64>,
}

impl ElogzEstimate {
    /// Standard error of the mean over repetitions.
    pub fn std_error(&self) -> f64 {
        let m = self.per_rep.len() as f64;
        if m < 2.0 {
            return f64::NAN;
        }
        let var: f64 =
            self.per_rep.iter().map(|&x| (x - self.mean) * (x - self.mean)).sum::<f64>()
                / (m - 1.0);
        libm::sqrt(var / m)
    }
}

/// Nested Monte Carlo estimate of E_ξ[log Z_β]: m outer draws ξ ∼ N(0, Σ)
/// on substream 0 of the master seed, p inner hypergeometric draws per ξ on
/// substream 1 + i.
pub fn estimate_elogz_correlated(
    params: &ModelParams,
    space: &SparseSpace,
    beta: f64,
    m: usize,
    p: usize,
    approx: &YhApproximator<'_>,
    master_seed: u64,
) -> Result<ElogzEstimate> {
    if m == 0 {
        return Err(Error::Domain("outer sample size m must be at least 1"));
    }
    let mut noise_rng = substream(master_seed, 0);
    let mut per_rep = Vec::with_capacity(m);
    for i in 0..m {
        let xi = draw_noise(params, &mut noise_rng);
        let mut inner = substream(master_seed, 1 + i as u64);
        per_rep.push(elogz_rep(params, space, beta, p, approx, &xi, &mut inner)?);
    }
    let mean = per_rep.iter().sum::<f64>() / m as f64;
    Ok(ElogzEstimate { mean, per_rep })
}

/// Exhaustive linear-form log Z_β(ξ), the oracle the stratified estimator
/// targets.
pub fn exhaustive_linear_logz(
    params: &ModelParams,
    space: &SparseSpace,
    beta: f64,
    xi: &NoiseDraw,
) -> Result<f64> {
    let ctx = CostCtx::linear(xi, params)?;
    Ok(exhaustive_logz_grid(&[beta], &ctx, &HypothesisClass::Sparse(*space))?[0])
}
