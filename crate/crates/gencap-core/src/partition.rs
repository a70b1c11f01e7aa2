//! Numerically stable evaluation and estimation of log partition functions.
//!
//! Z_β(ξ) sums Boltzmann weights e^{−β·cost(μ)} over the hypothesis class;
//! ΔZ_β(ξ₁, ξ₂) sums the products of weights for two noise draws. All sums
//! run in the log domain through a running-max accumulator, so values stay
//! finite far beyond where a linear-domain sum would underflow.
//!
//! Three estimators are provided: exact enumeration, uniform sampling, and
//! importance sampling from the hit-count-stratified proposal. Within one
//! call the same hypothesis draws feed all three sums of a triple. Each
//! sampling estimator also has an enumeration hook that replaces random
//! draws by an exact expectation under the proposal, used to validate the
//! estimators against the exhaustive path.

use alloc::vec::Vec;

use rand::Rng;

use crate::cost::{CostCtx, CostKind, ModelParams, NoiseDraw};
use crate::error::{Error, Result};
use crate::hypothesis::{
    ln_importance_weight, ln_proposal_density, sample_stratified, sample_uniform, Hypothesis,
    HypothesisClass, SparseSpace,
};

/// How the logs of a triple are normalized.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Normalization {
    /// Full sums over the class; at β = 0 every log equals log|𝒞|.
    Absolute,
    /// Log of a sample mean (sampling estimators); at β = 0 the logs are
    /// near 0 and the class-size terms cancel in the information content.
    Mean,
}

/// The three log partition values entering one information-content term.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogPartitionTriple {
    pub log_z1: f64,
    pub log_z2: f64,
    pub log_dz: f64,
    pub normalization: Normalization,
}

/// log Σ e^{aᵢ} of a nonempty slice.
pub fn log_sum_exp(values: &[f64]) -> Result<f64> {
    let mut acc = LogSumExpAcc::new();
    for &v in values {
        acc.push(v);
    }
    acc.log_sum()
}

/// Streaming log-sum-exp accumulator with running-max rescaling. Partials
/// merge associatively, so parallel reductions are bit-stable in a fixed
/// merge order.
#[derive(Debug, Clone, Copy)]
pub struct LogSumExpAcc {
    max: f64,
    /// Σ e^{aᵢ − max} over pushed values.
    sum: f64,
    count: u64,
}

impl LogSumExpAcc {
    pub fn new() -> Self {
        LogSumExpAcc { max: f64::NEG_INFINITY, sum: 0.0, count: 0 }
    }

    pub fn push(&mut self, a: f64) {
        self.count += 1;
        if a == f64::NEG_INFINITY {
            return;
        }
        if a <= self.max {
            self.sum += libm::exp(a - self.max);
        } else {
            self.sum = self.sum * libm::exp(self.max - a) + 1.0;
            self.max = a;
        }
    }

    pub fn merge(&mut self, other: &LogSumExpAcc) {
        self.count += other.count;
        if other.sum == 0.0 {
            return;
        }
        if other.max <= self.max {
            self.sum += other.sum * libm::exp(other.max - self.max);
        } else {
            self.sum = self.sum * libm::exp(self.max - other.max) + other.sum;
            self.max = other.max;
        }
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    /// log Σ e^{aᵢ}; error if nothing was pushed.
    pub fn log_sum(&self) -> Result<f64> {
        if self.count == 0 {
            return Err(Error::EmptySum);
        }
        if self.sum == 0.0 {
            return Ok(f64::NEG_INFINITY);
        }
        Ok(self.max + libm::log(self.sum))
    }

    /// log of the mean, log (1/count) Σ e^{aᵢ}.
    pub fn log_mean(&self) -> Result<f64> {
        Ok(self.log_sum()? - libm::log(self.count as f64))
    }
}

impl Default for LogSumExpAcc {
    fn default() -> Self {
        Self::new()
    }
}

/// Exact log Σ_μ e^{−β·ctx(μ)} over the whole class, one value per β.
pub fn exhaustive_logz_grid(
    betas: &[f64],
    ctx: &CostCtx,
    class: &HypothesisClass,
) -> Result<Vec<f64>> {
    class.check_enumerable()?;
    let mut accs = alloc::vec![LogSumExpAcc::new(); betas.len()];
    class.for_each(|mu| {
        let c = ctx.eval(mu);
        for (acc, &beta) in accs.iter_mut().zip(betas) {
            acc.push(-beta * c);
        }
    })?;
    accs.iter().map(|a| a.log_sum()).collect()
}

/// Exact triples over a β grid: one enumeration pass, costs evaluated once
/// per hypothesis and reused for every β.
pub fn exhaustive_triple_grid(
    betas: &[f64],
    ctx1: &CostCtx,
    ctx2: &CostCtx,
    class: &HypothesisClass,
) -> Result<Vec<LogPartitionTriple>> {
    class.check_enumerable()?;
    let mut z1 = alloc::vec![LogSumExpAcc::new(); betas.len()];
    let mut z2 = alloc::vec![LogSumExpAcc::new(); betas.len()];
    let mut dz = alloc::vec![LogSumExpAcc::new(); betas.len()];
    class.for_each(|mu| {
        let c1 = ctx1.eval(mu);
        let c2 = ctx2.eval(mu);
        for (i, &beta) in betas.iter().enumerate() {
            z1[i].push(-beta * c1);
            z2[i].push(-beta * c2);
            dz[i].push(-beta * (c1 + c2));
        }
    })?;
    collect_triples(&z1, &z2, &dz, Normalization::Absolute)
}

fn collect_triples(
    z1: &[LogSumExpAcc],
    z2: &[LogSumExpAcc],
    dz: &[LogSumExpAcc],
    normalization: Normalization,
) -> Result<Vec<LogPartitionTriple>> {
    let reduce = |a: &LogSumExpAcc| match normalization {
        Normalization::Absolute => a.log_sum(),
        Normalization::Mean => a.log_mean(),
    };
    z1.iter()
        .zip(z2)
        .zip(dz)
        .map(|((a, b), c)| {
            Ok(LogPartitionTriple {
                log_z1: reduce(a)?,
                log_z2: reduce(b)?,
                log_dz: reduce(c)?,
                normalization,
            })
        })
        .collect()
}

/// Exact triple at a single β via full enumeration.
pub fn exhaustive_log_partitions(
    beta: f64,
    xi1: &NoiseDraw,
    xi2: &NoiseDraw,
    class: &HypothesisClass,
    kind: CostKind,
    params: &ModelParams,
) -> Result<LogPartitionTriple> {
    let ctx1 = CostCtx::new(kind, xi1, params)?;
    let ctx2 = CostCtx::new(kind, xi2, params)?;
    Ok(exhaustive_triple_grid(&[beta], &ctx1, &ctx2, class)?[0])
}

/// One shared batch of hypothesis draws with per-draw log importance
/// weights (all zero for uniform draws).
pub struct DrawSet {
    pub hyps: Vec<Hypothesis>,
    pub ln_weights: Vec<f64>,
}

/// r uniform draws from the class.
pub fn draw_uniform_set<R: Rng + ?Sized>(
    class: &HypothesisClass,
    r: usize,
    rng: &mut R,
) -> Result<DrawSet> {
    if r == 0 {
        return Err(Error::Domain("sample size r must be at least 1"));
    }
    let hyps: Vec<Hypothesis> = match class {
        HypothesisClass::Sparse(space) => (0..r).map(|_| sample_uniform(space, rng)).collect(),
        HypothesisClass::Full { d } => (0..r)
            .map(|_| {
                let support: Vec<u32> = (0..*d).filter(|_| rng.gen::<bool>()).collect();
                Hypothesis::from_support(*d, support).expect("indices in range")
            })
            .collect(),
    };
    Ok(DrawSet { ln_weights: alloc::vec![0.0; r], hyps })
}

/// r stratified draws around μ⁰ with their log importance weights.
pub fn draw_stratified_set<R: Rng + ?Sized>(
    space: &SparseSpace,
    mu0: &Hypothesis,
    r: usize,
    rng: &mut R,
) -> Result<DrawSet> {
    if r == 0 {
        return Err(Error::Domain("sample size r must be at least 1"));
    }
    if !space.contains(mu0) {
        return Err(Error::Domain("mu0 must lie in the sparse space"));
    }
    let mut hyps = Vec::with_capacity(r);
    let mut ln_weights = Vec::with_capacity(r);
    for _ in 0..r {
        let (mu, h) = sample_stratified(space, mu0, rng);
        ln_weights.push(ln_importance_weight(space, h));
        hyps.push(mu);
    }
    Ok(DrawSet { hyps, ln_weights })
}

/// Mean-normalized triples from one shared draw set over a β grid: each
/// log is log (1/r) Σⱼ wⱼ e^{−β·cost(μⱼ)}.
pub fn sampled_triple_grid(
    betas: &[f64],
    ctx1: &CostCtx,
    ctx2: &CostCtx,
    draws: &DrawSet,
) -> Result<Vec<LogPartitionTriple>> {
    let mut z1 = alloc::vec![LogSumExpAcc::new(); betas.len()];
    let mut z2 = alloc::vec![LogSumExpAcc::new(); betas.len()];
    let mut dz = alloc::vec![LogSumExpAcc::new(); betas.len()];
    for (mu, &lnw) in draws.hyps.iter().zip(&draws.ln_weights) {
        let c1 = ctx1.eval(mu);
        let c2 = ctx2.eval(mu);
        for (i, &beta) in betas.iter().enumerate() {
            z1[i].push(lnw - beta * c1);
            z2[i].push(lnw - beta * c2);
            dz[i].push(lnw - beta * (c1 + c2));
        }
    }
    collect_triples(&z1, &z2, &dz, Normalization::Mean)
}

/// Mean-normalized single sums from one shared draw set: one
/// log (1/r) Σⱼ wⱼ e^{−β·cost(μⱼ)} per β.
pub fn sampled_logz_grid(betas: &[f64], ctx: &CostCtx, draws: &DrawSet) -> Result<Vec<f64>> {
    let mut accs = alloc::vec![LogSumExpAcc::new(); betas.len()];
    for (mu, &lnw) in draws.hyps.iter().zip(&draws.ln_weights) {
        let c = ctx.eval(mu);
        for (acc, &beta) in accs.iter_mut().zip(betas) {
            acc.push(lnw - beta * c);
        }
    }
    accs.iter().map(|a| a.log_mean()).collect()
}

/// Uniform-sampling estimate at a single β, one shared sample of size r
/// for all three sums.
pub fn uniform_sample_log_partitions<R: Rng + ?Sized>(
    beta: f64,
    xi1: &NoiseDraw,
    xi2: &NoiseDraw,
    class: &HypothesisClass,
    kind: CostKind,
    params: &ModelParams,
    r: usize,
    rng: &mut R,
) -> Result<LogPartitionTriple> {
    let ctx1 = CostCtx::new(kind, xi1, params)?;
    let ctx2 = CostCtx::new(kind, xi2, params)?;
    let draws = draw_uniform_set(class, r, rng)?;
    Ok(sampled_triple_grid(&[beta], &ctx1, &ctx2, &draws)?[0])
}

/// Importance-sampling estimate at a single β from the stratified proposal,
/// weights applied per hypothesis inside each sum.
pub fn importance_sample_log_partitions<R: Rng + ?Sized>(
    beta: f64,
    xi1: &NoiseDraw,
    xi2: &NoiseDraw,
    space: &SparseSpace,
    kind: CostKind,
    params: &ModelParams,
    r: usize,
    rng: &mut R,
) -> Result<LogPartitionTriple> {
    let ctx1 = CostCtx::new(kind, xi1, params)?;
    let ctx2 = CostCtx::new(kind, xi2, params)?;
    let draws = draw_stratified_set(space, &params.mu0, r, rng)?;
    Ok(sampled_triple_grid(&[beta], &ctx1, &ctx2, &draws)?[0])
}

/// Test hook: the exact expectation of the uniform-sampling estimator,
/// obtained by enumerating the class with equal proposal weights. Equals
/// the exhaustive result minus log|𝒞|.
pub fn uniform_enumeration_triple_grid(
    betas: &[f64],
    ctx1: &CostCtx,
    ctx2: &CostCtx,
    class: &HypothesisClass,
) -> Result<Vec<LogPartitionTriple>> {
    let lnq = -class.ln_cardinality();
    expectation_triple_grid(betas, ctx1, ctx2, class, |_| (lnq, 0.0))
}

/// Test hook: the exact expectation of the importance-sampling estimator,
/// enumerating the proposal support with exact proposal probabilities.
/// Equals the exhaustive result minus log|𝒞ᵏ|.
pub fn importance_enumeration_triple_grid(
    betas: &[f64],
    ctx1: &CostCtx,
    ctx2: &CostCtx,
    space: &SparseSpace,
    mu0: &Hypothesis,
) -> Result<Vec<LogPartitionTriple>> {
    let class = HypothesisClass::Sparse(*space);
    expectation_triple_grid(betas, ctx1, ctx2, &class, |mu| {
        let h = crate::hypothesis::hit_count(mu, mu0).expect("dimensions agree");
        (ln_proposal_density(space, h), ln_importance_weight(space, h))
    })
}

/// E_q[w(μ) e^{−β·cost(μ)}] for each β, computed by enumeration; the
/// sampling estimators converge to these values as r → ∞.
fn expectation_triple_grid<F: Fn(&Hypothesis) -> (f64, f64)>(
    betas: &[f64],
    ctx1: &CostCtx,
    ctx2: &CostCtx,
    class: &HypothesisClass,
    proposal: F,
) -> Result<Vec<LogPartitionTriple>> {
    class.check_enumerable()?;
    let mut z1 = alloc::vec![LogSumExpAcc::new(); betas.len()];
    let mut z2 = alloc::vec![LogSumExpAcc::new(); betas.len()];
    let mut dz = alloc::vec![LogSumExpAcc::new(); betas.len()];
    class.for_each(|mu| {
        let (lnq, lnw) = proposal(mu);
        let c1 = ctx1.eval(mu);
        let c2 = ctx2.eval(mu);
        for (i, &beta) in betas.iter().enumerate() {
            z1[i].push(lnq + lnw - beta * c1);
            z2[i].push(lnq + lnw - beta * c2);
            dz[i].push(lnq + lnw - beta * (c1 + c2));
        }
    })?;
    // log_sum here is already the expectation: Σ_μ q(μ) w(μ) e^{−βc}.
    collect_triples(&z1, &z2, &dz, Normalization::Absolute).map(|mut v| {
        for t in &mut v {
            t.normalization = Normalization::Mean;
        }
        v
    })
}
