//! Simulated benchmark data with block-correlated features.
//!
//! Features are standard Gaussian with a block covariance: correlation
//! `within_corr` inside each block of consecutive features and
//! `between_corr` across blocks. The binary target follows a logistic
//! model with unit coefficients on the first feature of each of the first
//! `n_generating` blocks, so every other feature of those blocks is a
//! redundant stand-in for a true one.
//!
//! Sampling exploits the covariance structure directly: a draw is the sum
//! of a global effect, a per-block effect, and per-feature noise, scaled
//! so the covariance comes out exactly right. That keeps generation O(n*p)
//! where a dense factorization would be O(p^3) — the difference between
//! instant and hopeless at p = 10 000.

use crate::data::{Dataset, FeatureSet};
use crate::error::{Error, Result};
use crate::rng::{derive_seed, rng_from_seed, salt};
use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

/// Parameters of one simulation scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub n: usize,
    pub p: usize,
    pub block_size: usize,
    #[serde(default = "default_within")]
    pub within_corr: f64,
    #[serde(default = "default_between")]
    pub between_corr: f64,
    #[serde(default = "default_generating")]
    pub n_generating: usize,
    #[serde(default)]
    pub seed: u64,
}

fn default_within() -> f64 {
    0.95
}

fn default_between() -> f64 {
    0.1
}

fn default_generating() -> usize {
    5
}

impl ScenarioSpec {
    /// Scenario with the standard correlation levels (0.95 within, 0.1
    /// between) and 5 generating features.
    pub fn new(n: usize, p: usize, block_size: usize, seed: u64) -> Self {
        ScenarioSpec {
            n,
            p,
            block_size,
            within_corr: default_within(),
            between_corr: default_between(),
            n_generating: default_generating(),
            seed,
        }
    }

    /// Number of blocks; the last block may be smaller than `block_size`
    /// when it does not divide p evenly.
    pub fn n_blocks(&self) -> usize {
        self.p.div_ceil(self.block_size.max(1))
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::InvalidParameter(format!(
                "scenario needs n >= 2 observations, got {}",
                self.n
            )));
        }
        if self.p == 0 || self.block_size == 0 {
            return Err(Error::InvalidParameter(
                "scenario needs p >= 1 and block_size >= 1".to_string(),
            ));
        }
        if self.block_size > self.p {
            return Err(Error::InvalidParameter(format!(
                "block_size {} exceeds p {}",
                self.block_size, self.p
            )));
        }
        if self.n_generating == 0 || self.n_blocks() < self.n_generating {
            return Err(Error::InvalidParameter(format!(
                "need at least {} blocks for the generating features, got {}",
                self.n_generating,
                self.n_blocks()
            )));
        }
        if !(0.0..=1.0).contains(&self.between_corr)
            || !(0.0..=1.0).contains(&self.within_corr)
            || self.between_corr >= self.within_corr
        {
            return Err(Error::InvalidParameter(format!(
                "correlations must satisfy 0 <= between < within <= 1, got between {} within {}",
                self.between_corr, self.within_corr
            )));
        }
        Ok(())
    }

    /// Identifier used in result tables, e.g. "p200_b15".
    pub fn scenario_id(&self) -> String {
        format!("p{}_b{}", self.p, self.block_size)
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        ScenarioSpec { seed, ..self.clone() }
    }

    /// Indices of the generating features: the first feature of each of
    /// the first `n_generating` blocks.
    pub fn generating_features(&self) -> FeatureSet {
        FeatureSet::new((0..self.n_generating).map(|b| b * self.block_size))
    }
}

/// What actually generated the target, for scoring selections against.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub generating_features: FeatureSet,
    pub block_size: usize,
}

/// Block id of a feature.
pub fn block_of(feature: usize, block_size: usize) -> usize {
    feature / block_size
}

fn check_positive_definite(spec: &ScenarioSpec) -> Result<()> {
    // Sigma = (1-w) I + (w-b) B + b J with B the block indicator and J all
    // ones. The last two terms are positive semidefinite whenever b <= w,
    // so Sigma is positive definite iff the identity part survives:
    // w < 1, except for blocks of size 1 where B = I absorbs w entirely
    // and only b < 1 is needed.
    let single = spec.block_size == 1;
    if (single && spec.between_corr < 1.0) || (!single && spec.within_corr < 1.0) {
        Ok(())
    } else {
        Err(Error::NotPositiveDefinite(format!(
            "block covariance with within {} / between {} at block size {} is singular",
            spec.within_corr, spec.between_corr, spec.block_size
        )))
    }
}

/// Dense block covariance matrix: unit diagonal, `within_corr` inside
/// blocks, `between_corr` elsewhere. Checked positive definite.
pub fn make_block_covariance(spec: &ScenarioSpec) -> Result<DMatrix<f64>> {
    spec.validate()?;
    check_positive_definite(spec)?;
    let p = spec.p;
    let mut sigma = DMatrix::from_element(p, p, spec.between_corr);
    for i in 0..p {
        for j in 0..p {
            if block_of(i, spec.block_size) == block_of(j, spec.block_size) {
                sigma[(i, j)] = spec.within_corr;
            }
        }
        sigma[(i, i)] = 1.0;
    }
    Ok(sigma)
}

/// Draw one dataset plus its ground truth, deterministic given the seed.
///
/// Per row, the draw order is fixed: one global effect, one effect per
/// block, one noise term per feature, then the label. The feature value is
/// sqrt(b) g + sqrt(w-b) u_block + sqrt(1-w) e, whose covariance is
/// exactly the block covariance above.
pub fn sample_dataset(spec: &ScenarioSpec) -> Result<(Dataset, GroundTruth)> {
    spec.validate()?;
    check_positive_definite(spec)?;
    let (n, p) = (spec.n, spec.p);
    let n_blocks = spec.n_blocks();
    let sd_global = spec.between_corr.sqrt();
    let sd_block = (spec.within_corr - spec.between_corr).sqrt();
    let sd_noise = (1.0 - spec.within_corr).sqrt();
    let generating = spec.generating_features();

    let mut rng = rng_from_seed(spec.seed);
    let mut x = DMatrix::<f64>::zeros(n, p);
    let mut y = Vec::with_capacity(n);
    let mut block_effects = vec![0.0; n_blocks];
    for i in 0..n {
        let g: f64 = rng.sample(StandardNormal);
        for u in block_effects.iter_mut() {
            *u = rng.sample(StandardNormal);
        }
        for f in 0..p {
            let e: f64 = rng.sample(StandardNormal);
            x[(i, f)] = sd_global * g
                + sd_block * block_effects[block_of(f, spec.block_size)]
                + sd_noise * e;
        }
        let eta: f64 = generating.iter().map(|f| x[(i, f)]).sum();
        let prob = 1.0 / (1.0 + (-eta).exp());
        y.push(u8::from(rng.gen::<f64>() < prob));
    }
    let data = Dataset::new(x, y, None)?;
    let truth = GroundTruth {
        generating_features: generating,
        block_size: spec.block_size,
    };
    Ok((data, truth))
}

/// Companion test-set spec: same scenario, seed derived from the training
/// seed so train and test draws never overlap but remain reproducible.
pub fn test_spec(spec: &ScenarioSpec) -> ScenarioSpec {
    spec.with_seed(derive_seed(spec.seed, &[salt::TEST_DATA]))
}

/// The benchmark grid: n = 100, p in {200, 2000, 10000} (desk scale: only
/// 200), block sizes {1, 5, 15, 25}.
pub fn scenario_grid(desk_scale: bool) -> Vec<ScenarioSpec> {
    let ps: &[usize] = if desk_scale {
        &[200]
    } else {
        &[200, 2_000, 10_000]
    };
    let mut out = Vec::new();
    for &p in ps {
        for &bs in &[1usize, 5, 15, 25] {
            out.push(ScenarioSpec::new(100, p, bs, 0));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn covariance_matches_spec_example() {
        let spec = ScenarioSpec {
            n_generating: 2,
            ..ScenarioSpec::new(10, 4, 2, 0)
        };
        let sigma = make_block_covariance(&spec).unwrap();
        let expect = [
            [1.0, 0.95, 0.1, 0.1],
            [0.95, 1.0, 0.1, 0.1],
            [0.1, 0.1, 1.0, 0.95],
            [0.1, 0.1, 0.95, 1.0],
        ];
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(sigma[(i, j)], expect[i][j], "entry ({i},{j})");
            }
        }
        // smallest eigenvalue must be positive
        let eig = sigma.symmetric_eigenvalues();
        assert!(eig.min() > 0.0, "covariance not PD: min eig {}", eig.min());
    }

    #[test]
    fn covariance_block_size_one() {
        let spec = ScenarioSpec {
            n_generating: 3,
            ..ScenarioSpec::new(10, 3, 1, 0)
        };
        let sigma = make_block_covariance(&spec).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { 1.0 } else { 0.1 };
                assert_eq!(sigma[(i, j)], want);
            }
        }
    }

    #[test]
    fn degenerate_correlation_is_rejected() {
        let bad = ScenarioSpec {
            within_corr: 1.0,
            ..ScenarioSpec::new(10, 25, 5, 0)
        };
        assert!(matches!(
            make_block_covariance(&bad),
            Err(Error::NotPositiveDefinite(_))
        ));
        // but within = 1 is harmless when blocks are singletons
        let ok = ScenarioSpec {
            within_corr: 1.0,
            between_corr: 0.1,
            n_generating: 5,
            ..ScenarioSpec::new(10, 5, 1, 0)
        };
        assert!(make_block_covariance(&ok).is_ok());
    }

    #[test]
    fn validation_catches_bad_specs() {
        assert!(ScenarioSpec::new(1, 10, 5, 0).validate().is_err()); // n too small
        assert!(ScenarioSpec::new(10, 10, 11, 0).validate().is_err()); // block > p
        assert!(ScenarioSpec::new(10, 20, 15, 0).validate().is_err()); // 2 blocks < 5 generating
        let neg = ScenarioSpec {
            between_corr: 0.96,
            ..ScenarioSpec::new(10, 25, 5, 0)
        };
        assert!(neg.validate().is_err()); // between >= within
        assert!(ScenarioSpec::new(100, 200, 15, 0).validate().is_ok()); // partial last block
    }

    #[test]
    fn sampled_moments_match_covariance() {
        let spec = ScenarioSpec {
            n_generating: 4,
            ..ScenarioSpec::new(10_000, 20, 5, 42)
        };
        let (data, truth) = sample_dataset(&spec).unwrap();
        assert_eq!(data.n(), 10_000);
        assert_eq!(data.p(), 20);
        assert_eq!(truth.generating_features.as_slice(), &[0, 5, 10, 15]);

        let n = data.n() as f64;
        let mut means = vec![0.0; 20];
        for j in 0..20 {
            means[j] = data.x().column(j).sum() / n;
            assert!(means[j].abs() < 0.05, "mean[{j}] = {}", means[j]);
        }
        // empirical correlations vs the target covariance
        let sigma = make_block_covariance(&spec).unwrap();
        for i in 0..20 {
            for j in 0..=i {
                let mut cov = 0.0;
                let mut vi = 0.0;
                let mut vj = 0.0;
                for r in 0..data.n() {
                    let a = data.value(r, i) - means[i];
                    let b = data.value(r, j) - means[j];
                    cov += a * b;
                    vi += a * a;
                    vj += b * b;
                }
                let corr = cov / (vi.sqrt() * vj.sqrt());
                assert!(
                    (corr - sigma[(i, j)]).abs() < 0.05,
                    "corr({i},{j}) = {corr}, want {}",
                    sigma[(i, j)]
                );
            }
        }
        // eta is symmetric around zero, so labels are balanced
        assert_relative_eq!(data.positive_rate(), 0.5, epsilon = 0.02);
    }

    #[test]
    fn sampling_is_deterministic() {
        let spec = ScenarioSpec::new(50, 30, 5, 7);
        let (a, ta) = sample_dataset(&spec).unwrap();
        let (b, tb) = sample_dataset(&spec).unwrap();
        assert_eq!(a.x(), b.x());
        assert_eq!(a.labels(), b.labels());
        assert_eq!(ta, tb);

        let (c, _) = sample_dataset(&spec.with_seed(8)).unwrap();
        assert_ne!(a.x(), c.x());
    }

    #[test]
    fn test_spec_changes_seed_only() {
        let spec = ScenarioSpec::new(100, 200, 25, 3);
        let test = test_spec(&spec);
        assert_ne!(test.seed, spec.seed);
        assert_eq!(test.p, spec.p);
        assert_eq!(test.block_size, spec.block_size);
        let (train, t1) = sample_dataset(&spec).unwrap();
        let (testd, t2) = sample_dataset(&test).unwrap();
        assert_eq!(t1, t2, "truth must transfer to the test set");
        assert_ne!(train.x(), testd.x());
    }

    #[test]
    fn generating_features_lie_in_distinct_blocks() {
        for spec in scenario_grid(false) {
            let gen = spec.generating_features();
            let blocks: Vec<usize> = gen.iter().map(|f| block_of(f, spec.block_size)).collect();
            let mut dedup = blocks.clone();
            dedup.dedup();
            assert_eq!(blocks.len(), 5);
            assert_eq!(dedup.len(), 5, "{}: blocks {blocks:?}", spec.scenario_id());
        }
    }

    #[test]
    fn grid_shapes() {
        let full = scenario_grid(false);
        assert_eq!(full.len(), 12);
        let desk = scenario_grid(true);
        assert_eq!(desk.len(), 4);
        assert!(desk.iter().all(|s| s.p == 200 && s.n == 100));
        for spec in &full {
            spec.validate().unwrap();
        }
        let ids: Vec<String> = desk.iter().map(|s| s.scenario_id()).collect();
        assert_eq!(ids, vec!["p200_b1", "p200_b5", "p200_b15", "p200_b25"]);
    }

    #[test]
    fn block_of_examples() {
        assert_eq!(block_of(0, 5), 0);
        assert_eq!(block_of(4, 5), 0);
        assert_eq!(block_of(5, 5), 1);
    }
}
