//! Feature-selection stability measures.
//!
//! Given m sets of selected features, the unadjusted measure scores the
//! pairwise set overlaps against the overlap expected for random selections
//! of the same sizes. The adjusted measure additionally credits selections
//! of distinct but similar features (similarity at or above a threshold
//! theta), so swapping one feature for a near-duplicate does not read as
//! instability. Both measures are bounded above by 1 and are centered so
//! that random selection scores about 0.

use crate::data::{Dataset, FeatureSet};
use crate::error::{Error, Result};
use crate::rng::{derive_seed, rng_from_seed, salt, SubsetSampler};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;

/// Default similarity threshold for the adjusted measure.
pub const DEFAULT_THETA: f64 = 0.9;
/// Default Monte-Carlo sample count for the adjusted expectation.
pub const DEFAULT_MC_SAMPLES: u32 = 10_000;

/// Symmetric p x p feature-similarity values in [0, 1] with a threshold.
///
/// Storage is either a dense matrix (data-driven similarities) or an exact
/// block structure (1 within a block, 0 between), which stays O(1) in
/// memory for large p.
#[derive(Debug, Clone)]
pub struct SimilarityMatrix {
    p: usize,
    theta: f64,
    storage: Storage,
    has_similar_pair: bool,
}

#[derive(Debug, Clone)]
enum Storage {
    Dense(DMatrix<f64>),
    Blocks { block_size: usize },
}

impl SimilarityMatrix {
    /// Wrap a dense similarity matrix. Checks symmetry, unit diagonal and
    /// the [0, 1] range.
    pub fn from_dense(values: DMatrix<f64>, theta: f64) -> Result<Self> {
        check_theta(theta)?;
        let p = values.nrows();
        if p == 0 || values.ncols() != p {
            return Err(Error::InvalidData(format!(
                "similarity matrix must be square and non-empty, got {} x {}",
                values.nrows(),
                values.ncols()
            )));
        }
        for i in 0..p {
            if (values[(i, i)] - 1.0).abs() > 1e-9 {
                return Err(Error::InvalidData(format!(
                    "similarity diagonal entry ({i},{i}) = {} is not 1",
                    values[(i, i)]
                )));
            }
            for j in 0..i {
                let v = values[(i, j)];
                if !v.is_finite() || !(-1e-9..=1.0 + 1e-9).contains(&v) {
                    return Err(Error::InvalidData(format!(
                        "similarity entry ({i},{j}) = {v} outside [0, 1]"
                    )));
                }
                if (v - values[(j, i)]).abs() > 1e-9 {
                    return Err(Error::InvalidData(format!(
                        "similarity matrix not symmetric at ({i},{j})"
                    )));
                }
            }
        }
        let has_similar_pair =
            (0..p).any(|i| (0..i).any(|j| values[(i, j)] >= theta));
        Ok(SimilarityMatrix {
            p,
            theta,
            storage: Storage::Dense(values),
            has_similar_pair,
        })
    }

    /// Exact block similarity: 1 for features in the same block of
    /// `block_size` consecutive indices, 0 otherwise.
    pub fn block_structure(p: usize, block_size: usize, theta: f64) -> Result<Self> {
        check_theta(theta)?;
        if p == 0 || block_size == 0 {
            return Err(Error::InvalidParameter(
                "block similarity needs p >= 1 and block_size >= 1".to_string(),
            ));
        }
        Ok(SimilarityMatrix {
            p,
            theta,
            storage: Storage::Blocks { block_size },
            has_similar_pair: block_size >= 2 && p >= 2,
        })
    }

    /// Identity similarity: no two distinct features are similar.
    pub fn identity(p: usize, theta: f64) -> Result<Self> {
        Self::block_structure(p, 1, theta)
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn value(&self, i: usize, j: usize) -> f64 {
        match &self.storage {
            Storage::Dense(m) => m[(i, j)],
            Storage::Blocks { block_size } => {
                if i / block_size == j / block_size {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    /// Whether features i and j count as similar (value >= theta).
    pub fn similar(&self, i: usize, j: usize) -> bool {
        match &self.storage {
            Storage::Dense(m) => m[(i, j)] >= self.theta,
            Storage::Blocks { block_size } => i / block_size == j / block_size,
        }
    }

    /// True if some off-diagonal entry reaches the threshold. When false,
    /// the adjusted measure provably coincides with the unadjusted one.
    pub fn has_similar_pair(&self) -> bool {
        self.has_similar_pair
    }
}

fn check_theta(theta: f64) -> Result<()> {
    if !(theta > 0.0 && theta <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "theta must lie in (0, 1], got {theta}"
        )));
    }
    Ok(())
}

/// Which stability measure produced a score.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MeasureKind {
    Unadjusted,
    Adjusted,
}

impl std::fmt::Display for MeasureKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            MeasureKind::Unadjusted => write!(f, "unadjusted"),
            MeasureKind::Adjusted => write!(f, "adjusted"),
        }
    }
}

/// A stability score together with how it was computed.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct StabilityResult {
    pub score: f64,
    pub measure_kind: MeasureKind,
    /// 0 when every expectation was evaluated exactly.
    pub mc_samples_used: u32,
}

/// Expected size of the intersection of two uniformly random subsets of
/// sizes `c1` and `c2` drawn from `p` features (hypergeometric mean).
pub fn expected_intersection(c1: usize, c2: usize, p: usize) -> Result<f64> {
    if p == 0 {
        return Err(Error::InvalidParameter(
            "feature count p must be at least 1".to_string(),
        ));
    }
    if c1 > p {
        return Err(Error::CardinalityExceedsDimension { size: c1, p });
    }
    if c2 > p {
        return Err(Error::CardinalityExceedsDimension { size: c2, p });
    }
    Ok(c1 as f64 * c2 as f64 / p as f64)
}

/// Similarity credit between two feature sets.
///
/// Counts, in each direction, the features unique to one set that have a
/// similar counterpart unique to the other set, and takes the minimum of
/// the two counts.
pub fn adjustment(vi: &FeatureSet, vj: &FeatureSet, sim: &SimilarityMatrix) -> Result<usize> {
    vi.check_dimension(sim.p())?;
    vj.check_dimension(sim.p())?;
    let di = vi.difference(vj);
    let dj = vj.difference(vi);
    Ok(adjustment_of_differences(&di, &dj, sim))
}

fn adjustment_of_differences(di: &[usize], dj: &[usize], sim: &SimilarityMatrix) -> usize {
    if di.is_empty() || dj.is_empty() {
        return 0;
    }
    let a_ij = di
        .iter()
        .filter(|&&x| dj.iter().any(|&y| sim.similar(x, y)))
        .count();
    let a_ji = dj
        .iter()
        .filter(|&&y| di.iter().any(|&x| sim.similar(x, y)))
        .count();
    a_ij.min(a_ji)
}

/// Monte-Carlo estimate of E[|U ∩ W| + Adj(U, W)] for independent uniform
/// random subsets U, W of sizes `c1`, `c2`.
///
/// When the similarity matrix has no off-diagonal entry at the threshold,
/// the adjustment is identically zero and the exact hypergeometric value is
/// returned instead of sampling. Sample s of the estimate uses RNG stream s
/// derived from `seed`, so the estimate does not depend on evaluation order.
pub fn expected_adjusted_intersection(
    c1: usize,
    c2: usize,
    sim: &SimilarityMatrix,
    mc_samples: u32,
    seed: u64,
) -> Result<f64> {
    Ok(expected_adjusted_impl(c1, c2, sim, mc_samples, seed)?.0)
}

/// Returns (expectation, mc samples actually used).
fn expected_adjusted_impl(
    c1: usize,
    c2: usize,
    sim: &SimilarityMatrix,
    mc_samples: u32,
    seed: u64,
) -> Result<(f64, u32)> {
    let p = sim.p();
    if c1 > p {
        return Err(Error::CardinalityExceedsDimension { size: c1, p });
    }
    if c2 > p {
        return Err(Error::CardinalityExceedsDimension { size: c2, p });
    }
    if c1 == 0 || c2 == 0 {
        return Ok((0.0, 0));
    }
    if !sim.has_similar_pair() {
        // Adj is identically 0, so the expectation reduces to the
        // hypergeometric mean; exact and bit-identical to the unadjusted path.
        return Ok((expected_intersection(c1, c2, p)?, 0));
    }
    if mc_samples == 0 {
        return Err(Error::InvalidParameter(
            "mc_samples must be at least 1".to_string(),
        ));
    }

    let base = rng_from_seed(seed);
    let mut sampler = SubsetSampler::new(p);
    let mut u_buf = Vec::with_capacity(c1);
    let mut w_buf = Vec::with_capacity(c2);
    let mut sum = 0.0;
    for s in 0..mc_samples {
        let mut rng = base.clone();
        rng.set_stream(s as u64);
        sampler.sample_into(c1, &mut rng, &mut u_buf);
        sampler.sample_into(c2, &mut rng, &mut w_buf);
        u_buf.sort_unstable();
        w_buf.sort_unstable();
        sum += overlap_plus_adjustment(&u_buf, &w_buf, sim) as f64;
    }
    Ok((sum / mc_samples as f64, mc_samples))
}

/// |U ∩ W| + Adj(U, W) for sorted index slices.
fn overlap_plus_adjustment(u: &[usize], w: &[usize], sim: &SimilarityMatrix) -> usize {
    let (mut i, mut j) = (0, 0);
    let mut inter = 0;
    let mut du: Vec<usize> = Vec::new();
    let mut dw: Vec<usize> = Vec::new();
    while i < u.len() && j < w.len() {
        match u[i].cmp(&w[j]) {
            std::cmp::Ordering::Less => {
                du.push(u[i]);
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                dw.push(w[j]);
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                inter += 1;
                i += 1;
                j += 1;
            }
        }
    }
    du.extend_from_slice(&u[i..]);
    dw.extend_from_slice(&w[j..]);
    inter + adjustment_of_differences(&du, &dw, sim)
}

/// Unadjusted stability of m feature sets over p features.
///
/// Pairwise mean of (observed overlap - expected overlap) / (maximal
/// overlap - expected overlap). Pairs involving an empty set score 0;
/// pairs with a zero denominator are skipped.
pub fn smu(sets: &[FeatureSet], p: usize) -> Result<StabilityResult> {
    let score = pairwise_mean(sets, p, |vi, vj| {
        let (c1, c2) = (vi.len(), vj.len());
        let e = expected_intersection(c1, c2, p)?;
        Ok(PairTerm {
            numerator: vi.intersection_size(vj) as f64 - e,
            denominator: ((c1 * c2) as f64).sqrt() - e,
        })
    })?;
    Ok(StabilityResult {
        score,
        measure_kind: MeasureKind::Unadjusted,
        mc_samples_used: 0,
    })
}

/// Adjusted stability of m feature sets under a similarity matrix.
///
/// Like [`smu`], but overlaps are credited with the similarity adjustment
/// and the chance expectation accounts for it. The Monte-Carlo expectation
/// is estimated once per distinct pair of cardinalities with a seed derived
/// from `seed` and the cardinalities, so the score is independent of the
/// order in which pairs are visited.
pub fn sma(
    sets: &[FeatureSet],
    sim: &SimilarityMatrix,
    mc_samples: u32,
    seed: u64,
) -> Result<StabilityResult> {
    let mut expectation_cache: HashMap<(usize, usize), (f64, u32)> = HashMap::new();
    let mut mc_used = 0;
    let score = pairwise_mean(sets, sim.p(), |vi, vj| {
        let (c1, c2) = (vi.len(), vj.len());
        let combo = (c1.min(c2), c1.max(c2));
        let (e, used) = match expectation_cache.get(&combo) {
            Some(&hit) => hit,
            None => {
                let combo_seed =
                    derive_seed(seed, &[salt::MEASURE_MC, combo.0 as u64, combo.1 as u64]);
                let computed =
                    expected_adjusted_impl(combo.0, combo.1, sim, mc_samples, combo_seed)?;
                expectation_cache.insert(combo, computed);
                computed
            }
        };
        mc_used = mc_used.max(used);
        let observed = (vi.intersection_size(vj) + adjustment(vi, vj, sim)?) as f64;
        Ok(PairTerm {
            numerator: observed - e,
            denominator: ((c1 * c2) as f64).sqrt() - e,
        })
    })?;
    Ok(StabilityResult {
        score,
        measure_kind: MeasureKind::Adjusted,
        mc_samples_used: mc_used,
    })
}

struct PairTerm {
    numerator: f64,
    denominator: f64,
}

const DEGENERATE_EPS: f64 = 1e-12;

fn pairwise_mean<F>(sets: &[FeatureSet], p: usize, mut term: F) -> Result<f64>
where
    F: FnMut(&FeatureSet, &FeatureSet) -> Result<PairTerm>,
{
    let m = sets.len();
    if m < 2 {
        return Err(Error::InvalidParameter(format!(
            "stability needs at least 2 feature sets, got {m}"
        )));
    }
    for set in sets {
        set.check_dimension(p)?;
    }
    let mut sum = 0.0;
    let mut scored = 0usize;
    for i in 0..m {
        for j in (i + 1)..m {
            if sets[i].is_empty() || sets[j].is_empty() {
                // empty selection carries no stability evidence: chance level
                scored += 1;
                continue;
            }
            let t = term(&sets[i], &sets[j])?;
            if t.denominator.abs() < DEGENERATE_EPS {
                log::warn!("skipping degenerate stability pair ({i}, {j}): zero denominator");
                continue;
            }
            sum += t.numerator / t.denominator;
            scored += 1;
        }
    }
    if scored == 0 {
        return Err(Error::UndefinedStability);
    }
    Ok(sum / scored as f64)
}

/// Absolute Pearson correlation between all feature pairs of a dataset.
///
/// Constant features get similarity 0 to every other feature and 1 to
/// themselves.
pub fn similarity_from_data(data: &Dataset, theta: f64) -> Result<SimilarityMatrix> {
    check_theta(theta)?;
    let (n, p) = (data.n(), data.p());
    if n < 2 {
        return Err(Error::InvalidData(
            "correlation needs at least 2 observations".to_string(),
        ));
    }
    // Normalize columns to zero mean and unit Euclidean norm; the Gram
    // matrix of the result is the correlation matrix.
    let mut normalized = DMatrix::<f64>::zeros(n, p);
    for j in 0..p {
        let col = data.x().column(j);
        let mean = col.sum() / n as f64;
        let mut norm_sq = 0.0;
        for i in 0..n {
            let c = col[i] - mean;
            normalized[(i, j)] = c;
            norm_sq += c * c;
        }
        if norm_sq > 0.0 {
            let inv = 1.0 / norm_sq.sqrt();
            for i in 0..n {
                normalized[(i, j)] *= inv;
            }
        } else {
            for i in 0..n {
                normalized[(i, j)] = 0.0;
            }
        }
    }
    let mut corr = normalized.transpose() * &normalized;
    for i in 0..p {
        corr[(i, i)] = 1.0;
        for j in 0..i {
            let v = corr[(i, j)].abs().min(1.0);
            corr[(i, j)] = v;
            corr[(j, i)] = v;
        }
    }
    SimilarityMatrix::from_dense(corr, theta)
}
