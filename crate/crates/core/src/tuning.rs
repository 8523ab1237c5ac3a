//! Cross-validated tuning of the support size and multi-criteria
//! configuration selection.
//!
//! The grid search evaluates every candidate support size k under the same
//! CV splits, recording per-fold held-out accuracy and the per-fold
//! selected feature sets, then scores feature-selection stability across
//! the folds. Selection is either single-criteria (accuracy, random
//! tie-break) or the epsilon-constraint rule that trades a little accuracy
//! for a lot of stability.
//!
//! The expensive part — fitting one subset path per fold — is factored out
//! as [`grid_fold_fits`] so callers comparing several stability measures
//! can score the same fits under each measure instead of refitting.

use crate::data::{Dataset, FeatureSet};
use crate::error::{Error, Result};
use crate::l0logreg::{accuracy, fit_l0_path, SolverOptions, SparseModel};
use crate::rng::{derive_seed, rng_from_seed, salt};
use crate::stability::{
    similarity_from_data, sma, smu, MeasureKind, SimilarityMatrix, DEFAULT_MC_SAMPLES,
    DEFAULT_THETA,
};
use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::Write;

/// A random partition of rows into folds of near-equal size.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CVSplits {
    folds: Vec<Vec<usize>>,
    fold_of: Vec<usize>,
    seed: u64,
}

impl CVSplits {
    pub fn n_folds(&self) -> usize {
        self.folds.len()
    }

    pub fn n(&self) -> usize {
        self.fold_of.len()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Held-out rows of a fold, ascending.
    pub fn test_rows(&self, fold: usize) -> &[usize] {
        &self.folds[fold]
    }

    /// Training rows of a fold (everything else), ascending.
    pub fn train_rows(&self, fold: usize) -> Vec<usize> {
        (0..self.n()).filter(|&i| self.fold_of[i] != fold).collect()
    }
}

/// Random F-fold partition of [0, n); fold sizes differ by at most one.
pub fn make_cv_splits(n: usize, folds: usize, seed: u64) -> Result<CVSplits> {
    if folds < 2 || folds > n {
        return Err(Error::InvalidParameter(format!(
            "need 2 <= folds <= n, got folds {folds} for n {n}"
        )));
    }
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut rng_from_seed(derive_seed(seed, &[salt::CV_SPLITS])));
    let base = n / folds;
    let rem = n % folds;
    let mut fold_list = Vec::with_capacity(folds);
    let mut fold_of = vec![0usize; n];
    let mut start = 0;
    for f in 0..folds {
        let size = base + usize::from(f < rem);
        let mut fold: Vec<usize> = perm[start..start + size].to_vec();
        fold.sort_unstable();
        for &i in &fold {
            fold_of[i] = f;
        }
        fold_list.push(fold);
        start += size;
    }
    Ok(CVSplits {
        folds: fold_list,
        fold_of,
        seed,
    })
}

/// Where feature similarity for the adjusted measure comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum SimilaritySource {
    /// Exact block structure: 1 within a block of consecutive features,
    /// 0 between. Right choice when the block layout is known (simulated
    /// data with a ground-truth sidecar).
    Block { block_size: usize },
    /// Absolute Pearson correlation computed from the dataset itself.
    Correlation,
}

/// Full description of the stability measure used during tuning.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureSpec {
    pub kind: MeasureKind,
    #[serde(default = "default_theta")]
    pub theta: f64,
    #[serde(default = "default_mc_samples")]
    pub mc_samples: u32,
    #[serde(default = "default_source")]
    pub source: SimilaritySource,
    /// Seed for the Monte-Carlo chance correction of the adjusted measure.
    #[serde(default)]
    pub mc_seed: u64,
}

fn default_theta() -> f64 {
    DEFAULT_THETA
}

fn default_mc_samples() -> u32 {
    DEFAULT_MC_SAMPLES
}

fn default_source() -> SimilaritySource {
    SimilaritySource::Correlation
}

impl MeasureSpec {
    pub fn unadjusted() -> Self {
        MeasureSpec {
            kind: MeasureKind::Unadjusted,
            theta: default_theta(),
            mc_samples: default_mc_samples(),
            source: default_source(),
            mc_seed: 0,
        }
    }

    pub fn adjusted_block(block_size: usize, mc_seed: u64) -> Self {
        MeasureSpec {
            kind: MeasureKind::Adjusted,
            theta: default_theta(),
            mc_samples: default_mc_samples(),
            source: SimilaritySource::Block { block_size },
            mc_seed,
        }
    }

    pub fn adjusted_correlation(mc_seed: u64) -> Self {
        MeasureSpec {
            kind: MeasureKind::Adjusted,
            theta: default_theta(),
            mc_samples: default_mc_samples(),
            source: default_source(),
            mc_seed,
        }
    }

    /// Materialize the similarity matrix this measure scores against.
    /// The unadjusted measure needs none and returns None.
    pub fn build_similarity(&self, data: &Dataset) -> Result<Option<SimilarityMatrix>> {
        if self.kind == MeasureKind::Unadjusted {
            return Ok(None);
        }
        let sim = match &self.source {
            SimilaritySource::Block { block_size } => {
                SimilarityMatrix::block_structure(data.p(), *block_size, self.theta)?
            }
            SimilaritySource::Correlation => similarity_from_data(data, self.theta)?,
        };
        Ok(Some(sim))
    }
}

/// CV performance of one support size.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConfigPerformance {
    pub k: usize,
    pub mean_accuracy: f64,
    /// Absent for accuracy-only tuning.
    pub stability: Option<f64>,
    pub fold_feature_sets: Vec<FeatureSet>,
    pub fold_accuracies: Vec<f64>,
}

/// Per-fold subset-path fits over a k grid: the shared expensive part of
/// tuning. `models[fold][i]` is the fit for `k_grid[i]` trained without
/// that fold; `holdout_accuracies` mirrors the layout.
#[derive(Debug, Clone)]
pub struct GridFits {
    pub k_grid: Vec<usize>,
    pub models: Vec<Vec<SparseModel>>,
    pub holdout_accuracies: Vec<Vec<f64>>,
}

/// Fit the subset path on every fold's training part and score each model
/// on the held-out part. Folds run in parallel; results are ordered by
/// fold regardless of scheduling.
pub fn grid_fold_fits(
    data: &Dataset,
    k_grid: &[usize],
    splits: &CVSplits,
    opts: &SolverOptions,
) -> Result<GridFits> {
    if k_grid.is_empty() {
        return Err(Error::InvalidParameter("empty k grid".to_string()));
    }
    if splits.n() != data.n() {
        return Err(Error::InvalidData(format!(
            "splits cover {} rows but the dataset has {}",
            splits.n(),
            data.n()
        )));
    }
    let mut sorted = k_grid.to_vec();
    sorted.sort_unstable();
    sorted.dedup();

    let per_fold: Result<Vec<(Vec<SparseModel>, Vec<f64>)>> = (0..splits.n_folds())
        .into_par_iter()
        .map(|fold| {
            let train = data.subset_rows(&splits.train_rows(fold));
            let test = data.subset_rows(splits.test_rows(fold));
            let path = fit_l0_path(&train, &sorted, opts).map_err(|e| Error::FoldSolver {
                k: *sorted.last().expect("non-empty"),
                fold,
                source: Box::new(e),
            })?;
            let accs = path
                .iter()
                .map(|m| accuracy(m, &test))
                .collect::<Result<Vec<f64>>>()?;
            Ok((path, accs))
        })
        .collect();
    let per_fold = per_fold?;

    Ok(GridFits {
        k_grid: sorted,
        models: per_fold.iter().map(|(m, _)| m.clone()).collect(),
        holdout_accuracies: per_fold.into_iter().map(|(_, a)| a).collect(),
    })
}

/// Score pre-computed fold fits as one ConfigPerformance per grid entry.
///
/// The similarity matrix must be provided when the measure is adjusted
/// (see [`MeasureSpec::build_similarity`]); passing `None` for `measure`
/// skips stability entirely (accuracy-only tuning).
pub fn score_configs(
    fits: &GridFits,
    measure: Option<&MeasureSpec>,
    similarity: Option<&SimilarityMatrix>,
    p: usize,
) -> Result<Vec<ConfigPerformance>> {
    let f = fits.models.len();
    let mut out = Vec::with_capacity(fits.k_grid.len());
    for (i, &k) in fits.k_grid.iter().enumerate() {
        let supports: Vec<FeatureSet> = (0..f)
            .map(|fold| fits.models[fold][i].features.clone())
            .collect();
        let fold_accuracies: Vec<f64> =
            (0..f).map(|fold| fits.holdout_accuracies[fold][i]).collect();
        let mean_accuracy = fold_accuracies.iter().sum::<f64>() / f as f64;
        let stability = match measure {
            None => None,
            Some(spec) => match spec.kind {
                MeasureKind::Unadjusted => Some(smu(&supports, p)?.score),
                MeasureKind::Adjusted => {
                    let sim = similarity.ok_or_else(|| {
                        Error::InvalidParameter(
                            "adjusted measure needs a similarity matrix".to_string(),
                        )
                    })?;
                    Some(sma(&supports, sim, spec.mc_samples, spec.mc_seed)?.score)
                }
            },
        };
        out.push(ConfigPerformance {
            k,
            mean_accuracy,
            stability,
            fold_feature_sets: supports,
            fold_accuracies,
        });
    }
    Ok(out)
}

/// CV-evaluate a single support size.
pub fn evaluate_config(
    data: &Dataset,
    k: usize,
    splits: &CVSplits,
    measure: Option<&MeasureSpec>,
) -> Result<ConfigPerformance> {
    Ok(grid_tune(data, &[k], splits, measure)?.pop().expect("one config"))
}

/// CV-evaluate every support size in the grid, in input order.
pub fn grid_tune(
    data: &Dataset,
    k_grid: &[usize],
    splits: &CVSplits,
    measure: Option<&MeasureSpec>,
) -> Result<Vec<ConfigPerformance>> {
    let fits = grid_fold_fits(data, k_grid, splits, &SolverOptions::default())?;
    let similarity = match measure {
        Some(spec) => spec.build_similarity(data)?,
        None => None,
    };
    let scored = score_configs(&fits, measure, similarity.as_ref(), data.p())?;
    // scored is ordered by the deduplicated sorted grid; map back to the
    // caller's order (duplicates allowed)
    let mut out = Vec::with_capacity(k_grid.len());
    for &k in k_grid {
        let idx = fits
            .k_grid
            .binary_search(&k)
            .expect("every requested k was fitted");
        out.push(scored[idx].clone());
    }
    Ok(out)
}

fn require_stability(configs: &[ConfigPerformance]) -> Result<Vec<f64>> {
    configs
        .iter()
        .map(|c| {
            c.stability.ok_or_else(|| {
                Error::InvalidParameter(format!(
                    "config k = {} has no stability score; multi-criteria \
                     selection needs one for every config",
                    c.k
                ))
            })
        })
        .collect()
}

/// Configurations not strictly dominated in (accuracy, stability)
/// maximization. Input order is preserved; duplicates are kept (they do
/// not dominate each other).
pub fn pareto_front(configs: &[ConfigPerformance]) -> Result<Vec<ConfigPerformance>> {
    let stab = require_stability(configs)?;
    let acc: Vec<f64> = configs.iter().map(|c| c.mean_accuracy).collect();
    let mut keep = Vec::new();
    for i in 0..configs.len() {
        let dominated = (0..configs.len()).any(|j| {
            j != i
                && acc[j] >= acc[i]
                && stab[j] >= stab[i]
                && (acc[j] > acc[i] || stab[j] > stab[i])
        });
        if !dominated {
            keep.push(configs[i].clone());
        }
    }
    Ok(keep)
}

/// Tolerances and tie-break seed for [`epsilon_constraint_select`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SelectionParams {
    #[serde(default = "default_acc_const")]
    pub acc_const: f64,
    #[serde(default = "default_stab_const")]
    pub stab_const: f64,
    #[serde(default)]
    pub seed: u64,
}

fn default_acc_const() -> f64 {
    0.025
}

fn default_stab_const() -> f64 {
    0.1
}

impl SelectionParams {
    pub fn new(seed: u64) -> Self {
        SelectionParams {
            acc_const: default_acc_const(),
            stab_const: default_stab_const(),
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.acc_const < 0.0 || self.stab_const < 0.0 {
            return Err(Error::InvalidParameter(
                "selection tolerances must be non-negative".to_string(),
            ));
        }
        Ok(())
    }
}

/// Pick one configuration by the epsilon-constraint rule:
///
/// 1. find the maximal accuracy acc.max;
/// 2. drop configs with accuracy < acc.max - acc_const;
/// 3. find the maximal stability stab.max among survivors;
/// 4. drop configs with stability < stab.max - stab_const;
/// 5. find the maximal accuracy acc.end among survivors;
/// 6. drop configs with accuracy < acc.end;
/// 7. if several remain, find their maximal stability s.end;
/// 8. drop configs with stability < s.end;
/// 9. if several remain, pick one uniformly at random (seeded).
pub fn epsilon_constraint_select(
    configs: &[ConfigPerformance],
    params: &SelectionParams,
) -> Result<ConfigPerformance> {
    params.validate()?;
    if configs.is_empty() {
        return Err(Error::InvalidParameter(
            "cannot select from zero configurations".to_string(),
        ));
    }
    let stab = require_stability(configs)?;
    let acc: Vec<f64> = configs.iter().map(|c| c.mean_accuracy).collect();
    let mut alive: Vec<usize> = (0..configs.len()).collect();

    let acc_max = alive.iter().map(|&i| acc[i]).fold(f64::NEG_INFINITY, f64::max);
    alive.retain(|&i| acc[i] >= acc_max - params.acc_const);
    let stab_max = alive.iter().map(|&i| stab[i]).fold(f64::NEG_INFINITY, f64::max);
    alive.retain(|&i| stab[i] >= stab_max - params.stab_const);
    let acc_end = alive.iter().map(|&i| acc[i]).fold(f64::NEG_INFINITY, f64::max);
    alive.retain(|&i| acc[i] >= acc_end);
    if alive.len() > 1 {
        let s_end = alive.iter().map(|&i| stab[i]).fold(f64::NEG_INFINITY, f64::max);
        alive.retain(|&i| stab[i] >= s_end);
    }
    let chosen = pick_random(&alive, params.seed);
    Ok(configs[chosen].clone())
}

/// Pick the configuration with maximal accuracy; exact ties are resolved
/// uniformly at random (seeded).
pub fn single_criteria_select(
    configs: &[ConfigPerformance],
    seed: u64,
) -> Result<ConfigPerformance> {
    if configs.is_empty() {
        return Err(Error::InvalidParameter(
            "cannot select from zero configurations".to_string(),
        ));
    }
    let acc_max = configs
        .iter()
        .map(|c| c.mean_accuracy)
        .fold(f64::NEG_INFINITY, f64::max);
    let alive: Vec<usize> = (0..configs.len())
        .filter(|&i| configs[i].mean_accuracy >= acc_max)
        .collect();
    let chosen = pick_random(&alive, seed);
    Ok(configs[chosen].clone())
}

fn pick_random(alive: &[usize], seed: u64) -> usize {
    debug_assert!(!alive.is_empty());
    if alive.len() == 1 {
        return alive[0];
    }
    let mut rng = rng_from_seed(derive_seed(seed, &[salt::TIE_BREAK]));
    alive[rng.gen_range(0..alive.len())]
}

/// One row per config: k, mean accuracy, stability (empty if absent), and
/// the per-fold support sizes joined with '|'.
pub fn write_tuning_csv<W: Write>(configs: &[ConfigPerformance], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["k", "mean_accuracy", "stability", "fold_support_sizes"])?;
    for c in configs {
        let sizes = c
            .fold_feature_sets
            .iter()
            .map(|s| s.len().to_string())
            .collect::<Vec<_>>()
            .join("|");
        w.write_record([
            c.k.to_string(),
            format!("{}", c.mean_accuracy),
            c.stability.map(|s| format!("{s}")).unwrap_or_default(),
            sizes,
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simdata::{sample_dataset, ScenarioSpec};
    use approx::assert_relative_eq;

    fn cfg(k: usize, acc: f64, stab: f64) -> ConfigPerformance {
        ConfigPerformance {
            k,
            mean_accuracy: acc,
            stability: Some(stab),
            fold_feature_sets: Vec::new(),
            fold_accuracies: Vec::new(),
        }
    }

    #[test]
    fn cv_splits_partition_evenly() {
        let splits = make_cv_splits(103, 10, 5).unwrap();
        assert_eq!(splits.n_folds(), 10);
        let mut seen = vec![false; 103];
        let mut sizes = Vec::new();
        for f in 0..10 {
            let test = splits.test_rows(f);
            sizes.push(test.len());
            for &i in test {
                assert!(!seen[i], "row {i} in two folds");
                seen[i] = true;
            }
            let train = splits.train_rows(f);
            assert_eq!(train.len() + test.len(), 103);
        }
        assert!(seen.iter().all(|&s| s));
        assert_eq!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap(), 1);

        // n = folds means ten singletons
        let tiny = make_cv_splits(10, 10, 1).unwrap();
        assert!((0..10).all(|f| tiny.test_rows(f).len() == 1));

        assert!(make_cv_splits(5, 6, 0).is_err());
        assert!(make_cv_splits(5, 1, 0).is_err());
    }

    #[test]
    fn cv_splits_deterministic() {
        let a = make_cv_splits(50, 5, 9).unwrap();
        let b = make_cv_splits(50, 5, 9).unwrap();
        let c = make_cv_splits(50, 5, 10).unwrap();
        for f in 0..5 {
            assert_eq!(a.test_rows(f), b.test_rows(f));
        }
        assert!((0..5).any(|f| a.test_rows(f) != c.test_rows(f)));
    }

    #[test]
    fn epsilon_constraint_worked_example() {
        // step 2 keeps A (0.90) and B (0.88 >= 0.875); C is cut.
        // step 4: stab.max = 0.80 among survivors; A (0.50 < 0.70) is cut.
        // B remains through steps 5-9.
        let configs = vec![cfg(1, 0.90, 0.50), cfg(2, 0.88, 0.80), cfg(3, 0.86, 0.95)];
        let params = SelectionParams::new(0);
        let chosen = epsilon_constraint_select(&configs, &params).unwrap();
        assert_eq!(chosen.k, 2);
    }

    #[test]
    fn epsilon_constraint_single_and_ties() {
        let one = vec![cfg(4, 0.7, 0.3)];
        assert_eq!(
            epsilon_constraint_select(&one, &SelectionParams::new(1)).unwrap().k,
            4
        );

        // identical pairs: choice is random but fixed per seed
        let tied = vec![cfg(1, 0.8, 0.6), cfg(2, 0.8, 0.6), cfg(3, 0.8, 0.6)];
        let p7 = SelectionParams::new(7);
        let first = epsilon_constraint_select(&tied, &p7).unwrap().k;
        for _ in 0..5 {
            assert_eq!(epsilon_constraint_select(&tied, &p7).unwrap().k, first);
        }
        // some seed picks a different one
        let other = (0..64)
            .map(|s| {
                epsilon_constraint_select(&tied, &SelectionParams::new(s))
                    .unwrap()
                    .k
            })
            .any(|k| k != first);
        assert!(other, "tie-break never varied across 64 seeds");
    }

    #[test]
    fn selected_config_is_never_dominated() {
        let mut rng = rng_from_seed(17);
        for round in 0..300 {
            let m = rng.gen_range(1..=12);
            let configs: Vec<ConfigPerformance> = (0..m)
                .map(|i| {
                    cfg(
                        i,
                        (rng.gen_range(0..=20) as f64) * 0.05,
                        (rng.gen_range(0..=20) as f64) * 0.05,
                    )
                })
                .collect();
            let params = SelectionParams::new(round);
            let sel = epsilon_constraint_select(&configs, &params).unwrap();
            let dominated = configs.iter().any(|c| {
                c.mean_accuracy >= sel.mean_accuracy
                    && c.stability.unwrap() >= sel.stability.unwrap()
                    && (c.mean_accuracy > sel.mean_accuracy
                        || c.stability.unwrap() > sel.stability.unwrap())
            });
            assert!(
                !dominated,
                "round {round}: selected ({}, {:?}) is dominated",
                sel.mean_accuracy, sel.stability
            );
        }
    }

    #[test]
    fn zero_tolerances_reduce_to_accuracy_selection() {
        let mut rng = rng_from_seed(23);
        for _ in 0..100 {
            // distinct accuracies so the single-criteria argmax is unique
            let mut accs: Vec<f64> = (0..6).map(|i| 0.5 + 0.07 * i as f64).collect();
            accs.shuffle(&mut rng);
            let configs: Vec<ConfigPerformance> = accs
                .iter()
                .enumerate()
                .map(|(i, &a)| cfg(i, a, rng.gen_range(0.0..1.0)))
                .collect();
            let eps = epsilon_constraint_select(
                &configs,
                &SelectionParams {
                    acc_const: 0.0,
                    stab_const: 0.0,
                    seed: 1,
                },
            )
            .unwrap();
            let single = single_criteria_select(&configs, 1).unwrap();
            assert_eq!(eps.k, single.k);
        }
    }

    #[test]
    fn single_criteria_examples() {
        let configs = vec![cfg(0, 0.7, 0.0), cfg(1, 0.9, 0.0), cfg(2, 0.8, 0.0)];
        assert_eq!(single_criteria_select(&configs, 3).unwrap().k, 1);
        assert!(single_criteria_select(&[], 0).is_err());
    }

    #[test]
    fn pareto_front_matches_brute_force() {
        let examples = vec![
            (vec![cfg(0, 0.9, 0.5), cfg(1, 0.8, 0.8)], 2),
            (vec![cfg(0, 0.9, 0.5), cfg(1, 0.9, 0.6)], 1),
            (vec![cfg(0, 0.7, 0.7)], 1),
        ];
        for (configs, want) in examples {
            assert_eq!(pareto_front(&configs).unwrap().len(), want);
        }

        let mut rng = rng_from_seed(29);
        for _ in 0..100 {
            let configs: Vec<ConfigPerformance> = (0..10)
                .map(|i| {
                    cfg(
                        i,
                        (rng.gen_range(0..=10) as f64) * 0.1,
                        (rng.gen_range(0..=10) as f64) * 0.1,
                    )
                })
                .collect();
            let front = pareto_front(&configs).unwrap();
            // every front member is non-dominated; all non-dominated are in
            for c in &configs {
                let dominated = configs.iter().any(|d| {
                    d.mean_accuracy >= c.mean_accuracy
                        && d.stability.unwrap() >= c.stability.unwrap()
                        && (d.mean_accuracy > c.mean_accuracy
                            || d.stability.unwrap() > c.stability.unwrap())
                });
                let in_front = front.iter().any(|f| f.k == c.k);
                assert_eq!(!dominated, in_front, "k = {}", c.k);
            }
        }
    }

    #[test]
    fn missing_stability_is_an_error_for_multiobjective_ops() {
        let mut c = cfg(0, 0.9, 0.5);
        c.stability = None;
        assert!(pareto_front(&[c.clone()]).is_err());
        assert!(epsilon_constraint_select(&[c.clone()], &SelectionParams::new(0)).is_err());
        // but single-criteria selection does not need stability
        assert_eq!(single_criteria_select(&[c], 0).unwrap().k, 0);
    }

    fn small_scenario_data() -> Dataset {
        let spec = ScenarioSpec::new(80, 30, 5, 11);
        sample_dataset(&spec).unwrap().0
    }

    #[test]
    fn grid_tune_smoke() {
        let data = small_scenario_data();
        let splits = make_cv_splits(data.n(), 5, 2).unwrap();
        let measure = MeasureSpec::adjusted_block(5, 3);
        let k_grid = [0usize, 1, 2, 3, 4];
        let configs = grid_tune(&data, &k_grid, &splits, Some(&measure)).unwrap();
        assert_eq!(configs.len(), 5);
        for (i, c) in configs.iter().enumerate() {
            assert_eq!(c.k, k_grid[i]);
            assert_eq!(c.fold_feature_sets.len(), 5);
            assert_eq!(c.fold_accuracies.len(), 5);
            assert_relative_eq!(
                c.mean_accuracy,
                c.fold_accuracies.iter().sum::<f64>() / 5.0,
                max_relative = 1e-12
            );
            assert!((0.0..=1.0).contains(&c.mean_accuracy));
            let stab = c.stability.expect("adjusted measure present");
            assert!(stab <= 1.0 + 1e-12);
            for set in &c.fold_feature_sets {
                assert!(set.len() <= c.k, "fold support exceeds k = {}", c.k);
            }
        }
        // k = 0: empty supports, chance-level stability, majority-class accuracy
        assert!(configs[0].fold_feature_sets.iter().all(|s| s.is_empty()));
        assert_eq!(configs[0].stability, Some(0.0));
        assert!(configs[0].mean_accuracy >= 0.35);
    }

    #[test]
    fn accuracy_only_tuning_skips_stability() {
        let data = small_scenario_data();
        let splits = make_cv_splits(data.n(), 4, 2).unwrap();
        let configs = grid_tune(&data, &[1, 2], &splits, None).unwrap();
        assert!(configs.iter().all(|c| c.stability.is_none()));
    }

    #[test]
    fn shared_fits_score_identically_under_both_measures_at_block_one() {
        // with singleton blocks the adjusted and unadjusted measures must
        // coincide exactly on the same fold fits
        let data = small_scenario_data();
        let splits = make_cv_splits(data.n(), 5, 4).unwrap();
        let fits = grid_fold_fits(&data, &[1, 2, 3], &splits, &SolverOptions::default()).unwrap();
        let unadj = score_configs(&fits, Some(&MeasureSpec::unadjusted()), None, data.p()).unwrap();
        let spec = MeasureSpec::adjusted_block(1, 9);
        let sim = spec.build_similarity(&data).unwrap();
        let adj = score_configs(&fits, Some(&spec), sim.as_ref(), data.p()).unwrap();
        for (u, a) in unadj.iter().zip(&adj) {
            assert_eq!(u.stability.unwrap(), a.stability.unwrap());
            assert_eq!(u.mean_accuracy, a.mean_accuracy);
        }
    }

    #[test]
    fn grid_tune_handles_duplicate_unsorted_grids() {
        let data = small_scenario_data();
        let splits = make_cv_splits(data.n(), 4, 6).unwrap();
        let configs = grid_tune(&data, &[3, 1, 3], &splits, None).unwrap();
        let ks: Vec<usize> = configs.iter().map(|c| c.k).collect();
        assert_eq!(ks, vec![3, 1, 3]);
        assert_eq!(configs[0].mean_accuracy, configs[2].mean_accuracy);
    }

    #[test]
    fn evaluate_config_matches_grid_tune() {
        let data = small_scenario_data();
        let splits = make_cv_splits(data.n(), 4, 8).unwrap();
        let single = evaluate_config(&data, 2, &splits, None).unwrap();
        let grid = grid_tune(&data, &[2], &splits, None).unwrap();
        assert_eq!(single.mean_accuracy, grid[0].mean_accuracy);
        assert_eq!(single.fold_feature_sets.len(), grid[0].fold_feature_sets.len());
    }

    #[test]
    fn tuning_is_reproducible() {
        let data = small_scenario_data();
        let splits = make_cv_splits(data.n(), 5, 12).unwrap();
        let measure = MeasureSpec::adjusted_block(5, 13);
        let a = grid_tune(&data, &[1, 2, 3], &splits, Some(&measure)).unwrap();
        let b = grid_tune(&data, &[1, 2, 3], &splits, Some(&measure)).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.mean_accuracy, y.mean_accuracy);
            assert_eq!(x.stability, y.stability);
            assert_eq!(x.fold_feature_sets, y.fold_feature_sets);
        }
    }

    #[test]
    fn tuning_csv_layout() {
        let configs = vec![cfg(1, 0.875, 0.5)];
        let mut buf = Vec::new();
        write_tuning_csv(&configs, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "k,mean_accuracy,stability,fold_support_sizes"
        );
        assert_eq!(lines.next().unwrap(), "1,0.875,0.5,");
    }
}
