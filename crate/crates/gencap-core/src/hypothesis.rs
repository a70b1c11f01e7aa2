//! Binary hypothesis vectors, the sparse class of popcount-k vectors, and
//! the ranking/unranking, counting and sampling machinery over them.
//!
//! Hypotheses are stored as sorted support index lists, so all per-hypothesis
//! work is O(k) even at very large ambient dimension. The canonical total
//! order on the sparse class is ascending lexicographic on the bit string
//! read from component 1 to d, which coincides with ascending numeric order
//! of the bit string interpreted with component 1 as the most significant
//! bit; unranking uses the 0-indexed combinadic for that order.

use alloc::vec::Vec;

use rand::Rng;

use crate::combin::{choose_exact, ln_choose_best};
use crate::error::{Error, Result};

/// A binary hypothesis vector of fixed dimension, stored by its support.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Hypothesis {
    d: u32,
    /// Sorted 0-based indices of components equal to one.
    support: Vec<u32>,
}

impl Hypothesis {
    /// Builds a hypothesis from a sorted list of support indices.
    pub fn from_support(d: u32, mut support: Vec<u32>) -> Result<Self> {
        support.sort_unstable();
        if support.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Domain("duplicate support index"));
        }
        if support.last().is_some_and(|&j| j >= d) {
            return Err(Error::Domain("support index out of range"));
        }
        Ok(Hypothesis { d, support })
    }

    /// Builds a hypothesis from dense 0/1 components.
    pub fn from_bits(bits: &[u8]) -> Result<Self> {
        let mut support = Vec::new();
        for (j, &b) in bits.iter().enumerate() {
            match b {
                0 => {}
                1 => support.push(j as u32),
                _ => return Err(Error::Domain("components must be 0 or 1")),
            }
        }
        Ok(Hypothesis { d: bits.len() as u32, support })
    }

    pub fn dim(&self) -> u32 {
        self.d
    }

    pub fn popcount(&self) -> u32 {
        self.support.len() as u32
    }

    /// Sorted 0-based indices of the one-components.
    pub fn support(&self) -> &[u32] {
        &self.support
    }

    pub fn bit(&self, j: u32) -> bool {
        self.support.binary_search(&j).is_ok()
    }

    /// Dense 0/1 representation; only sensible at small d.
    pub fn to_bits(&self) -> Vec<u8> {
        let mut bits = alloc::vec![0u8; self.d as usize];
        for &j in &self.support {
            bits[j as usize] = 1;
        }
        bits
    }
}

/// The class C^k = { mu in B^d : popcount(mu) = k }.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SparseSpace {
    d: u32,
    k: u32,
    cardinality: u128,
}

impl SparseSpace {
    pub fn new(d: u32, k: u32) -> Result<Self> {
        if k > d {
            return Err(Error::Domain("k must satisfy k <= d"));
        }
        if d == 0 {
            return Err(Error::Domain("dimension must be positive"));
        }
        let cardinality = choose_exact(d as u64, k as u64)?;
        Ok(SparseSpace { d, k, cardinality })
    }

    pub fn d(&self) -> u32 {
        self.d
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    /// Exact |C^k| = C(d, k).
    pub fn cardinality(&self) -> u128 {
        self.cardinality
    }

    pub fn ln_cardinality(&self) -> f64 {
        ln_choose_best(self.d as u64, self.k as u64)
    }

    /// Lowest attainable hit count against a popcount-k reference.
    pub fn min_hits(&self) -> u32 {
        (2 * self.k).saturating_sub(self.d)
    }

    /// Number of hit-count strata, k - max(0, 2k-d) + 1.
    pub fn strata_count(&self) -> u32 {
        self.k - self.min_hits() + 1
    }

    pub fn contains(&self, mu: &Hypothesis) -> bool {
        mu.dim() == self.d && mu.popcount() == self.k
    }
}

/// A hit-count stratum of the sparse class.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Stratum {
    pub h: u32,
    pub size: u128,
}

impl Stratum {
    pub fn new(space: &SparseSpace, h: u32) -> Result<Self> {
        Ok(Stratum { h, size: stratum_size(space.d, space.k, h)? })
    }
}

/// Number of hypotheses in C^k with exactly h hits: C(k,h) * C(d-k, k-h).
pub fn stratum_size(d: u32, k: u32, h: u32) -> Result<u128> {
    if k > d {
        return Err(Error::Domain("k must satisfy k <= d"));
    }
    let h_min = (2 * k).saturating_sub(d);
    if h < h_min || h > k {
        return Err(Error::Domain("hit count outside its valid range"));
    }
    let a = choose_exact(k as u64, h as u64)?;
    let b = choose_exact((d - k) as u64, (k - h) as u64)?;
    a.checked_mul(b).ok_or(Error::Overflow("stratum_size"))
}

/// ln of the stratum size, defined even where the exact count overflows.
pub fn ln_stratum_size(d: u32, k: u32, h: u32) -> f64 {
    ln_choose_best(k as u64, h as u64) + ln_choose_best((d - k) as u64, (k - h) as u64)
}

/// Maps i in [0, 2^d - 1] to its d-length binary representation, component 1
/// as the most significant bit.
pub fn unrank_full(i: u128, d: u32) -> Result<Hypothesis> {
    if d > 30 {
        return Err(Error::Capacity { d, k: None });
    }
    if i >= 1u128 << d {
        return Err(Error::Domain("rank out of range for the full space"));
    }
    let mut support = Vec::new();
    for j in 0..d {
        if i >> (d - 1 - j) & 1 == 1 {
            support.push(j);
        }
    }
    Ok(Hypothesis { d, support })
}

/// Maps i in [1, C(d,k)] to the i-th element of C^k in canonical order.
pub fn unrank_sparse(i: u128, space: &SparseSpace) -> Result<Hypothesis> {
    if i < 1 || i > space.cardinality {
        return Err(Error::Domain("rank out of range for the sparse space"));
    }
    let (d, k) = (space.d, space.k);
    let mut m = i - 1;
    let mut support = Vec::with_capacity(k as usize);
    // Combinadic digits: bit positions (weight 2^q) descending in q.
    let mut upper = d as u64; // q_j < upper, strictly decreasing
    for j in (1..=k as u64).rev() {
        // largest q with C(q, j) <= m
        let mut q = upper - 1;
        while choose_exact(q, j)? > m {
            q -= 1;
        }
        m -= choose_exact(q, j)?;
        // component index, 0-based from the left; q strictly decreases, so
        // pushes arrive in ascending component order
        support.push(d - 1 - q as u32);
        upper = q;
    }
    Ok(Hypothesis { d, support })
}

/// Inverse of `unrank_sparse` (1-based).
pub fn rank_sparse(mu: &Hypothesis, space: &SparseSpace) -> Result<u128> {
    if mu.dim() != space.d {
        return Err(Error::DimensionMismatch { expected: space.d as usize, got: mu.dim() as usize });
    }
    if mu.popcount() != space.k {
        return Err(Error::Domain("hypothesis popcount does not equal k"));
    }
    // Bit positions ascending in q pair with combinadic digits 1..k.
    let mut rank: u128 = 1;
    for (t, &j) in mu.support.iter().rev().enumerate() {
        let q = (space.d - 1 - j) as u64;
        rank += choose_exact(q, t as u64 + 1)?;
    }
    Ok(rank)
}

/// h = mu^T mu0, the popcount of the bitwise AND.
pub fn hit_count(mu: &Hypothesis, mu0: &Hypothesis) -> Result<u32> {
    if mu.dim() != mu0.dim() {
        return Err(Error::DimensionMismatch { expected: mu0.dim() as usize, got: mu.dim() as usize });
    }
    let (mut a, mut b) = (mu.support.iter().peekable(), mu0.support.iter().peekable());
    let mut hits = 0;
    while let (Some(&&x), Some(&&y)) = (a.peek(), b.peek()) {
        if x == y {
            hits += 1;
            a.next();
            b.next();
        } else if x < y {
            a.next();
        } else {
            b.next();
        }
    }
    Ok(hits)
}

/// Uniform draw from C^k via Floyd's k-of-d subset sampling.
pub fn sample_uniform<R: Rng + ?Sized>(space: &SparseSpace, rng: &mut R) -> Hypothesis {
    let (d, k) = (space.d, space.k);
    let mut support: Vec<u32> = Vec::with_capacity(k as usize);
    for j in d - k..d {
        let t = rng.gen_range(0..=j);
        if support.contains(&t) {
            support.push(j);
        } else {
            support.push(t);
        }
    }
    support.sort_unstable();
    Hypothesis { d, support }
}

/// Stratified proposal draw: h uniform on its range, then mu uniform within
/// the stratum C^k_h relative to mu0. Returns the drawn hypothesis and its
/// hit count.
pub fn sample_stratified<R: Rng + ?Sized>(
    space: &SparseSpace,
    mu0: &Hypothesis,
    rng: &mut R,
) -> (Hypothesis, u32) {
    let k = space.k;
    let h_min = space.min_hits();
    let h = rng.gen_range(h_min..=k);
    (sample_in_stratum(space, mu0, h, rng), h)
}

/// Uniform draw from the stratum C^k_h.
pub fn sample_in_stratum<R: Rng + ?Sized>(
    space: &SparseSpace,
    mu0: &Hypothesis,
    h: u32,
    rng: &mut R,
) -> Hypothesis {
    let (d, k) = (space.d, space.k);
    // h of the k support positions of mu0, and k-h of the d-k others.
    let hits = floyd_subset(k, h, rng);
    let misses = floyd_subset(d - k, k - h, rng);
    let supp0 = mu0.support();
    let mut support: Vec<u32> = hits.iter().map(|&t| supp0[t as usize]).collect();
    for &t in &misses {
        // t-th component index not in supp0 (supp0 is sorted).
        let mut idx = t;
        for &s in supp0 {
            if s <= idx {
                idx += 1;
            } else {
                break;
            }
        }
        support.push(idx);
    }
    support.sort_unstable();
    Hypothesis { d, support }
}

/// Floyd's algorithm: uniform k-subset of {0, .., n-1}.
fn floyd_subset<R: Rng + ?Sized>(n: u32, k: u32, rng: &mut R) -> Vec<u32> {
    let mut chosen: Vec<u32> = Vec::with_capacity(k as usize);
    for j in n - k..n {
        let t = rng.gen_range(0..=j);
        if chosen.contains(&t) {
            chosen.push(j);
        } else {
            chosen.push(t);
        }
    }
    chosen
}

/// Importance weight w(mu) = p(mu)/q(mu) of the stratified proposal, in the
/// linear domain: (#strata) * C(k,h) C(d-k,k-h) / C(d,k). Valid only while
/// the counts fit exactly.
pub fn importance_weight(mu: &Hypothesis, mu0: &Hypothesis, space: &SparseSpace) -> Result<f64> {
    let h = hit_count(mu, mu0)?;
    let num = stratum_size(space.d, space.k, h)? as f64;
    Ok(space.strata_count() as f64 * num / space.cardinality as f64)
}

/// ln w(h) for a given hit count; defined at any dimension.
pub fn ln_importance_weight(space: &SparseSpace, h: u32) -> f64 {
    libm::log(space.strata_count() as f64) + ln_stratum_size(space.d, space.k, h)
        - space.ln_cardinality()
}

/// ln q(mu) of the stratified proposal for a given hit count.
pub fn ln_proposal_density(space: &SparseSpace, h: u32) -> f64 {
    -libm::log(space.strata_count() as f64) - ln_stratum_size(space.d, space.k, h)
}

/// Either the full space B^d or the sparse class C^k.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HypothesisClass {
    Full { d: u32 },
    Sparse(SparseSpace),
}

/// Enumeration guard for exhaustive sums.
pub const ENUMERATION_GUARD: u128 = 1 << 24;

impl HypothesisClass {
    pub fn d(&self) -> u32 {
        match self {
            HypothesisClass::Full { d } => *d,
            HypothesisClass::Sparse(s) => s.d(),
        }
    }

    pub fn cardinality(&self) -> Result<u128> {
        match self {
            HypothesisClass::Full { d } => {
                if *d >= 128 {
                    Err(Error::Overflow("full-space cardinality"))
                } else {
                    Ok(1u128 << d)
                }
            }
            HypothesisClass::Sparse(s) => Ok(s.cardinality()),
        }
    }

    pub fn ln_cardinality(&self) -> f64 {
        match self {
            HypothesisClass::Full { d } => *d as f64 * core::f64::consts::LN_2,
            HypothesisClass::Sparse(s) => s.ln_cardinality(),
        }
    }

    /// Errors out unless the class is small enough to enumerate.
    pub fn check_enumerable(&self) -> Result<u128> {
        let n = self.cardinality().map_err(|_| self.capacity_error())?;
        if n > ENUMERATION_GUARD {
            Err(self.capacity_error())
        } else {
            Ok(n)
        }
    }

    fn capacity_error(&self) -> Error {
        match self {
            HypothesisClass::Full { d } => Error::Capacity { d: *d, k: None },
            HypothesisClass::Sparse(s) => Error::Capacity { d: s.d(), k: Some(s.k()) },
        }
    }

    /// Visits every hypothesis in canonical order.
    pub fn for_each<F: FnMut(&Hypothesis)>(&self, mut f: F) -> Result<()> {
        let n = self.check_enumerable()?;
        match self {
            HypothesisClass::Full { d } => {
                for i in 0..n {
                    f(&unrank_full(i, *d)?);
                }
            }
            HypothesisClass::Sparse(s) => {
                for i in 1..=n {
                    f(&unrank_sparse(i, s)?);
                }
            }
        }
        Ok(())
    }
}
