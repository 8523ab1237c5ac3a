//! Experiment harness: run tuning approaches on simulated scenarios,
//! score final models on fresh test data, and count block-exchangeable
//! selection errors.
//!
//! False positives and negatives honor the block structure: selecting a
//! different feature from a generating feature's block is as good as
//! selecting the generating feature itself; a second feature from the
//! same block is redundant and counts against the model.

use crate::data::{Dataset, FeatureSet};
use crate::error::{Error, Result};
use crate::l0logreg::{accuracy, fit_l0, fit_logistic, SolverOptions, SparseModel};
use crate::rng::{derive_seed, salt};
use crate::simdata::{block_of, sample_dataset, test_spec, GroundTruth, ScenarioSpec};
use crate::stabsel::{
    derive_q, selection_frequencies, stable_set, subsample_solver_options, tune_stabsel,
    StabSelParams, DEFAULT_N_POINTS,
};
use crate::tuning::{
    epsilon_constraint_select, grid_fold_fits, make_cv_splits, score_configs,
    single_criteria_select, MeasureSpec, SelectionParams,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::io::Write;
use std::time::Instant;

/// The tuning strategies under comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Approach {
    /// Multi-criteria tuning with the similarity-adjusted stability measure.
    Adj,
    /// Multi-criteria tuning with the unadjusted stability measure.
    Unadj,
    /// Accuracy-only tuning.
    Acc,
    /// Stability selection with a refit logistic model.
    Stabs,
    /// Oracle that knows the generating features.
    Truth,
}

impl Approach {
    pub const ALL: [Approach; 5] = [
        Approach::Adj,
        Approach::Unadj,
        Approach::Acc,
        Approach::Stabs,
        Approach::Truth,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Approach::Adj => "adj",
            Approach::Unadj => "unadj",
            Approach::Acc => "acc",
            Approach::Stabs => "stabs",
            Approach::Truth => "truth",
        }
    }
}

impl std::fmt::Display for Approach {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Approach {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "adj" => Ok(Approach::Adj),
            "unadj" => Ok(Approach::Unadj),
            "acc" => Ok(Approach::Acc),
            "stabs" => Ok(Approach::Stabs),
            "truth" => Ok(Approach::Truth),
            other => Err(Error::InvalidParameter(format!(
                "unknown approach '{other}' (expected adj, unadj, acc, stabs or truth)"
            ))),
        }
    }
}

/// What the tuner picked, with enough detail to rebuild the final model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Chosen {
    /// A support size for the subset solver (adj / unadj / acc).
    K { k: usize },
    /// Stability-selection hyperparameters (stabs).
    StabSel { params: StabSelParams },
    /// The generating features themselves (truth oracle).
    Truth { features: FeatureSet },
}

/// One approach's outcome on one dataset.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ApproachResult {
    pub approach: Approach,
    pub final_support: FeatureSet,
    pub test_accuracy: f64,
    pub false_positives: usize,
    pub false_negatives: usize,
    pub chosen: Chosen,
}

/// Block-exchangeable selection error counts.
///
/// A generating block with no selected feature is one false negative.
/// Selections outside every generating block are false positives, as is
/// every selected feature beyond the first within a generating block.
pub fn false_counts(selected: &FeatureSet, truth: &GroundTruth) -> (usize, usize) {
    let bs = truth.block_size.max(1);
    let mut per_block: HashMap<usize, usize> = HashMap::new();
    for f in truth.generating_features.iter() {
        per_block.insert(block_of(f, bs), 0);
    }
    let mut fp = 0usize;
    for f in selected.iter() {
        match per_block.get_mut(&block_of(f, bs)) {
            Some(count) => {
                if *count > 0 {
                    fp += 1; // redundant pick within an already-hit block
                }
                *count += 1;
            }
            None => fp += 1, // irrelevant block
        }
    }
    let fneg = per_block.values().filter(|&&c| c == 0).count();
    (fp, fneg)
}

/// Refit the final model on the full dataset from a tuner's choice.
pub fn build_final_model(data: &Dataset, approach: Approach, chosen: &Chosen) -> Result<SparseModel> {
    let opts = SolverOptions::default();
    match (approach, chosen) {
        (Approach::Adj | Approach::Unadj | Approach::Acc, Chosen::K { k }) => {
            fit_l0(data, *k, &opts)
        }
        (Approach::Stabs, Chosen::StabSel { params }) => {
            let freqs = selection_frequencies(data, params, &subsample_solver_options())?;
            let stable = stable_set(&freqs, params.cutoff)?;
            fit_logistic(data, &stable, &opts)
        }
        (Approach::Truth, Chosen::Truth { features }) => fit_logistic(data, features, &opts),
        (a, c) => Err(Error::InvalidParameter(format!(
            "approach {a} cannot build a final model from {c:?}"
        ))),
    }
}

/// Knobs for scenario runs; the defaults match the full-scale study setup.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunOptions {
    #[serde(default = "default_folds")]
    pub folds: usize,
    /// The tuning grid is 0..=k_max (clamped to what the folds support).
    #[serde(default = "default_k_max")]
    pub k_max: usize,
    #[serde(default = "default_stabsel_points")]
    pub stabsel_points: usize,
    /// Record real wall times. Off by default so identical runs produce
    /// byte-identical result files.
    #[serde(default)]
    pub timings: bool,
}

fn default_folds() -> usize {
    10
}

fn default_k_max() -> usize {
    20
}

fn default_stabsel_points() -> usize {
    DEFAULT_N_POINTS
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            folds: default_folds(),
            k_max: default_k_max(),
            stabsel_points: default_stabsel_points(),
            timings: false,
        }
    }
}

/// One line of the long-format results table. Failed runs carry the error
/// message and empty metrics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioRow {
    pub scenario_id: String,
    pub replication: usize,
    pub approach: Approach,
    pub test_accuracy: Option<f64>,
    pub false_positives: Option<usize>,
    pub false_negatives: Option<usize>,
    pub n_selected: Option<usize>,
    pub chosen_k: Option<usize>,
    pub wall_time_ms: u64,
    pub error: Option<String>,
}

/// Run `replications` train/test draws of a scenario and evaluate each
/// approach on every draw.
///
/// Within a replication all approaches share the training data, the test
/// data, the CV splits, the fold fits of the subset solver, and the
/// selection seed, so approaches differ only in how they score and choose.
/// Replications run in parallel; row order is (replication, approach) as
/// given, independent of scheduling.
pub fn run_scenario(
    spec: &ScenarioSpec,
    replications: usize,
    approaches: &[Approach],
    seed: u64,
    options: &RunOptions,
) -> Result<Vec<ScenarioRow>> {
    if replications == 0 {
        return Err(Error::InvalidParameter(
            "need at least one replication".to_string(),
        ));
    }
    if approaches.is_empty() {
        return Err(Error::InvalidParameter(
            "need at least one approach".to_string(),
        ));
    }
    spec.validate()?;
    let scenario_id = spec.scenario_id();

    let per_rep: Vec<Vec<ScenarioRow>> = (0..replications)
        .into_par_iter()
        .map(|rep| {
            run_replication(spec, rep, approaches, seed, options).unwrap_or_else(|e| {
                log::warn!("{scenario_id} replication {rep} failed entirely: {e}");
                approaches
                    .iter()
                    .map(|&a| error_row(&scenario_id, rep, a, &e))
                    .collect()
            })
        })
        .collect();
    Ok(per_rep.into_iter().flatten().collect())
}

fn error_row(scenario_id: &str, rep: usize, approach: Approach, e: &Error) -> ScenarioRow {
    ScenarioRow {
        scenario_id: scenario_id.to_string(),
        replication: rep,
        approach,
        test_accuracy: None,
        false_positives: None,
        false_negatives: None,
        n_selected: None,
        chosen_k: None,
        wall_time_ms: 0,
        error: Some(e.to_string()),
    }
}

fn run_replication(
    spec: &ScenarioSpec,
    rep: usize,
    approaches: &[Approach],
    seed: u64,
    options: &RunOptions,
) -> Result<Vec<ScenarioRow>> {
    let scenario_id = spec.scenario_id();
    let train_seed = derive_seed(
        seed,
        &[
            salt::SCENARIO,
            spec.p as u64,
            spec.block_size as u64,
            salt::REPLICATION,
            rep as u64,
        ],
    );
    let rep_spec = spec.with_seed(train_seed);
    let (train, truth) = sample_dataset(&rep_spec)?;
    let (test, _) = sample_dataset(&test_spec(&rep_spec))?;
    let splits = make_cv_splits(train.n(), options.folds, train_seed)?;
    let selection_seed = derive_seed(train_seed, &[salt::SELECTION]);

    // grid clamped so every fold's training part can host the largest k
    let min_fold_train = (0..splits.n_folds())
        .map(|f| train.n() - splits.test_rows(f).len())
        .min()
        .expect("at least two folds");
    let k_cap = options.k_max.min(spec.p).min(min_fold_train.saturating_sub(2));
    let k_grid: Vec<usize> = (0..=k_cap).collect();

    // the subset-path fold fits are identical for adj, unadj and acc;
    // compute them once per replication
    let needs_fits = approaches.iter().any(|a| {
        matches!(a, Approach::Adj | Approach::Unadj | Approach::Acc)
    });
    let fits = if needs_fits {
        Some(grid_fold_fits(&train, &k_grid, &splits, &SolverOptions::default())?)
    } else {
        None
    };

    let mut rows = Vec::with_capacity(approaches.len());
    for &approach in approaches {
        let started = Instant::now();
        let outcome = run_approach(
            approach,
            &train,
            &test,
            &truth,
            &splits,
            fits.as_ref(),
            selection_seed,
            train_seed,
            options,
        );
        let wall_time_ms = if options.timings {
            started.elapsed().as_millis() as u64
        } else {
            0
        };
        rows.push(match outcome {
            Ok(res) => ScenarioRow {
                scenario_id: scenario_id.clone(),
                replication: rep,
                approach,
                test_accuracy: Some(res.test_accuracy),
                false_positives: Some(res.false_positives),
                false_negatives: Some(res.false_negatives),
                n_selected: Some(res.final_support.len()),
                chosen_k: Some(match &res.chosen {
                    Chosen::K { k } => *k,
                    Chosen::StabSel { params } => derive_q(params, train.p()),
                    Chosen::Truth { features } => features.len(),
                }),
                wall_time_ms,
                error: None,
            },
            Err(e) => {
                log::warn!("{scenario_id} replication {rep} approach {approach}: {e}");
                ScenarioRow {
                    wall_time_ms,
                    ..error_row(&scenario_id, rep, approach, &e)
                }
            }
        });
    }
    Ok(rows)
}

#[allow(clippy::too_many_arguments)]
fn run_approach(
    approach: Approach,
    train: &Dataset,
    test: &Dataset,
    truth: &GroundTruth,
    splits: &crate::tuning::CVSplits,
    fits: Option<&crate::tuning::GridFits>,
    selection_seed: u64,
    train_seed: u64,
    options: &RunOptions,
) -> Result<ApproachResult> {
    let chosen = match approach {
        Approach::Adj | Approach::Unadj => {
            let fits = fits.expect("fold fits precomputed");
            let measure = if approach == Approach::Adj {
                MeasureSpec::adjusted_block(
                    truth.block_size,
                    derive_seed(train_seed, &[salt::MEASURE_MC]),
                )
            } else {
                MeasureSpec::unadjusted()
            };
            let similarity = measure.build_similarity(train)?;
            let configs = score_configs(fits, Some(&measure), similarity.as_ref(), train.p())?;
            Chosen::K {
                k: epsilon_constraint_select(&configs, &SelectionParams::new(selection_seed))?.k,
            }
        }
        Approach::Acc => {
            let fits = fits.expect("fold fits precomputed");
            let configs = score_configs(fits, None, None, train.p())?;
            Chosen::K {
                k: single_criteria_select(&configs, selection_seed)?.k,
            }
        }
        Approach::Stabs => {
            let (params, _) = tune_stabsel(
                train,
                splits,
                options.stabsel_points,
                derive_seed(train_seed, &[salt::CANDIDATES]),
            )?;
            Chosen::StabSel { params }
        }
        Approach::Truth => Chosen::Truth {
            features: truth.generating_features.clone(),
        },
    };

    let model = build_final_model(train, approach, &chosen)?;
    let test_accuracy = accuracy(&model, test)?;
    let (fp, fneg) = false_counts(&model.features, truth);
    Ok(ApproachResult {
        approach,
        final_support: model.features,
        test_accuracy,
        false_positives: fp,
        false_negatives: fneg,
        chosen,
    })
}

/// One row per outer fold of a nested cross-validation on real data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NestedCvRow {
    pub fold: usize,
    pub approach: Approach,
    pub test_accuracy: f64,
    pub n_selected: usize,
    pub chosen_k: usize,
}

/// Nested CV for datasets without ground truth: tune on the inner folds of
/// each outer training part, refit on the whole outer training part, and
/// score on the outer test fold. Similarity for the adjusted measure is
/// the absolute feature correlation of the outer training part.
pub fn run_nested_cv(
    data: &Dataset,
    approach: Approach,
    outer_folds: usize,
    inner_folds: usize,
    seed: u64,
    options: &RunOptions,
) -> Result<Vec<NestedCvRow>> {
    if approach == Approach::Truth {
        return Err(Error::InvalidParameter(
            "the truth approach needs simulated data with known generating features".to_string(),
        ));
    }
    let outer = make_cv_splits(data.n(), outer_folds, derive_seed(seed, &[salt::OUTER_CV]))?;

    (0..outer.n_folds())
        .into_par_iter()
        .map(|fold| {
            let train = data.subset_rows(&outer.train_rows(fold));
            let test = data.subset_rows(outer.test_rows(fold));
            let inner = make_cv_splits(
                train.n(),
                inner_folds,
                derive_seed(seed, &[salt::INNER_CV, fold as u64]),
            )?;
            let selection_seed = derive_seed(seed, &[salt::SELECTION, fold as u64]);

            let min_fold_train = (0..inner.n_folds())
                .map(|f| train.n() - inner.test_rows(f).len())
                .min()
                .expect("at least two folds");
            let k_cap = options.k_max.min(data.p()).min(min_fold_train.saturating_sub(2));
            let k_grid: Vec<usize> = (0..=k_cap).collect();

            let chosen = match approach {
                Approach::Adj | Approach::Unadj => {
                    let fits =
                        grid_fold_fits(&train, &k_grid, &inner, &SolverOptions::default())?;
                    let measure = if approach == Approach::Adj {
                        MeasureSpec::adjusted_correlation(derive_seed(
                            seed,
                            &[salt::MEASURE_MC, fold as u64],
                        ))
                    } else {
                        MeasureSpec::unadjusted()
                    };
                    let similarity = measure.build_similarity(&train)?;
                    let configs =
                        score_configs(&fits, Some(&measure), similarity.as_ref(), train.p())?;
                    Chosen::K {
                        k: epsilon_constraint_select(
                            &configs,
                            &SelectionParams::new(selection_seed),
                        )?
                        .k,
                    }
                }
                Approach::Acc => {
                    let fits =
                        grid_fold_fits(&train, &k_grid, &inner, &SolverOptions::default())?;
                    let configs = score_configs(&fits, None, None, train.p())?;
                    Chosen::K {
                        k: single_criteria_select(&configs, selection_seed)?.k,
                    }
                }
                Approach::Stabs => {
                    let (params, _) = tune_stabsel(
                        &train,
                        &inner,
                        options.stabsel_points,
                        derive_seed(seed, &[salt::CANDIDATES, fold as u64]),
                    )?;
                    Chosen::StabSel { params }
                }
                Approach::Truth => unreachable!("rejected above"),
            };

            let model = build_final_model(&train, approach, &chosen)?;
            Ok(NestedCvRow {
                fold,
                approach,
                test_accuracy: accuracy(&model, &test)?,
                n_selected: model.features.len(),
                chosen_k: match &chosen {
                    Chosen::K { k } => *k,
                    Chosen::StabSel { params } => derive_q(params, train.p()),
                    Chosen::Truth { .. } => unreachable!(),
                },
            })
        })
        .collect()
}

fn fmt_opt<T: std::fmt::Display>(v: &Option<T>) -> String {
    v.as_ref().map(|x| x.to_string()).unwrap_or_default()
}

/// Long-format results CSV. Failed rows leave the metrics empty and fill
/// the trailing error column.
pub fn write_results_csv<W: Write>(rows: &[ScenarioRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "scenario_id",
        "replication",
        "approach",
        "test_accuracy",
        "false_positives",
        "false_negatives",
        "n_selected",
        "chosen_k",
        "wall_time_ms",
        "error",
    ])?;
    for r in rows {
        w.write_record([
            r.scenario_id.clone(),
            r.replication.to_string(),
            r.approach.to_string(),
            fmt_opt(&r.test_accuracy),
            fmt_opt(&r.false_positives),
            fmt_opt(&r.false_negatives),
            fmt_opt(&r.n_selected),
            fmt_opt(&r.chosen_k),
            r.wall_time_ms.to_string(),
            r.error.clone().unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Parse a results CSV produced by [`write_results_csv`].
pub fn read_results_csv<R: std::io::Read>(input: R) -> Result<Vec<ScenarioRow>> {
    let mut reader = csv::Reader::from_reader(input);
    let mut rows = Vec::new();
    for record in reader.records() {
        let rec = record?;
        let get = |i: usize| rec.get(i).unwrap_or_default().to_string();
        let parse_opt_f = |s: String| -> Result<Option<f64>> {
            if s.is_empty() {
                Ok(None)
            } else {
                Ok(Some(s.parse().map_err(|e| {
                    Error::InvalidData(format!("bad float '{s}': {e}"))
                })?))
            }
        };
        let parse_opt_u = |s: String| -> Result<Option<usize>> {
            if s.is_empty() {
                Ok(None)
            } else {
                Ok(Some(s.parse().map_err(|e| {
                    Error::InvalidData(format!("bad integer '{s}': {e}"))
                })?))
            }
        };
        rows.push(ScenarioRow {
            scenario_id: get(0),
            replication: get(1)
                .parse()
                .map_err(|e| Error::InvalidData(format!("bad replication: {e}")))?,
            approach: get(2).parse()?,
            test_accuracy: parse_opt_f(get(3))?,
            false_positives: parse_opt_u(get(4))?,
            false_negatives: parse_opt_u(get(5))?,
            n_selected: parse_opt_u(get(6))?,
            chosen_k: parse_opt_u(get(7))?,
            wall_time_ms: get(8)
                .parse()
                .map_err(|e| Error::InvalidData(format!("bad wall time: {e}")))?,
            error: Some(get(9)).filter(|s| !s.is_empty()),
        });
    }
    Ok(rows)
}

/// One row per outer fold and approach.
pub fn write_nested_csv<W: Write>(rows: &[NestedCvRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["fold", "approach", "test_accuracy", "n_selected", "chosen_k"])?;
    for r in rows {
        w.write_record([
            r.fold.to_string(),
            r.approach.to_string(),
            format!("{}", r.test_accuracy),
            r.n_selected.to_string(),
            r.chosen_k.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;
    use rand::Rng;

    fn truth(features: &[usize], block_size: usize) -> GroundTruth {
        GroundTruth {
            generating_features: FeatureSet::new(features.iter().copied()),
            block_size,
        }
    }

    #[test]
    fn false_counts_examples() {
        let t = truth(&[0, 5, 10, 15, 20], 5);
        // one feature from each generating block, not necessarily the
        // generating feature itself
        let perfect = FeatureSet::new([1, 5, 12, 15, 24]);
        assert_eq!(false_counts(&perfect, &t), (0, 0));

        // a second feature from block 0 is redundant
        let redundant = FeatureSet::new([0, 1, 5, 12, 15, 24]);
        assert_eq!(false_counts(&redundant, &t), (1, 0));

        assert_eq!(false_counts(&FeatureSet::empty(), &t), (0, 5));

        // an irrelevant-block selection plus a missing block
        let mixed = FeatureSet::new([0, 5, 10, 15, 27]);
        assert_eq!(false_counts(&mixed, &t), (1, 1));
    }

    #[test]
    fn false_counts_block_one_degenerates_to_set_differences() {
        let mut rng = rng_from_seed(3);
        let t = truth(&[2, 7, 11, 13, 19], 1);
        for _ in 0..50 {
            let sel = FeatureSet::new((0..25).filter(|_| rng.gen_bool(0.3)));
            let (fp, fneg) = false_counts(&sel, &t);
            let gen = &t.generating_features;
            assert_eq!(fp, sel.difference(gen).len());
            assert_eq!(fneg, gen.difference(&sel).len());
        }
    }

    #[test]
    fn false_counts_bounds() {
        let mut rng = rng_from_seed(5);
        let t = truth(&[0, 5, 10, 15, 20], 5);
        for _ in 0..100 {
            let sel = FeatureSet::new((0..30).filter(|_| rng.gen_bool(0.4)));
            let (fp, fneg) = false_counts(&sel, &t);
            assert!(fp <= sel.len());
            assert!(fneg <= 5);
        }
    }

    fn tiny_options() -> RunOptions {
        RunOptions {
            folds: 4,
            k_max: 4,
            stabsel_points: 4,
            timings: false,
        }
    }

    #[test]
    fn truth_approach_is_perfect_by_construction() {
        let spec = ScenarioSpec::new(50, 30, 5, 1);
        let rows =
            run_scenario(&spec, 1, &[Approach::Truth], 99, &tiny_options()).unwrap();
        assert_eq!(rows.len(), 1);
        let row = &rows[0];
        assert_eq!(row.scenario_id, "p30_b5");
        assert_eq!(row.error, None);
        assert_eq!(row.false_positives, Some(0));
        assert_eq!(row.false_negatives, Some(0));
        assert_eq!(row.n_selected, Some(5));
        assert!(row.test_accuracy.unwrap() > 0.5);
    }

    #[test]
    fn build_final_model_shapes() {
        let spec = ScenarioSpec::new(60, 30, 5, 2);
        let (data, truth) = sample_dataset(&spec).unwrap();

        let m = build_final_model(&data, Approach::Acc, &Chosen::K { k: 0 }).unwrap();
        assert!(m.features.is_empty());

        let m = build_final_model(&data, Approach::Adj, &Chosen::K { k: 3 }).unwrap();
        assert!(m.features.len() <= 3);

        let m = build_final_model(
            &data,
            Approach::Truth,
            &Chosen::Truth {
                features: truth.generating_features.clone(),
            },
        )
        .unwrap();
        assert_eq!(m.features, truth.generating_features);

        // mismatched approach/choice combinations are rejected
        assert!(build_final_model(&data, Approach::Stabs, &Chosen::K { k: 1 }).is_err());
    }

    #[test]
    fn run_scenario_produces_ordered_complete_rows() {
        let spec = ScenarioSpec::new(48, 30, 5, 0);
        let approaches = [Approach::Adj, Approach::Acc, Approach::Truth];
        let rows = run_scenario(&spec, 2, &approaches, 7, &tiny_options()).unwrap();
        assert_eq!(rows.len(), 6);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.replication, i / 3);
            assert_eq!(row.approach, approaches[i % 3]);
            assert!(row.error.is_none(), "row {i}: {:?}", row.error);
            assert!(row.test_accuracy.unwrap() >= 0.0);
            assert!(row.wall_time_ms == 0);
        }
    }

    #[test]
    fn run_scenario_is_reproducible_including_stabs() {
        let spec = ScenarioSpec::new(48, 30, 5, 0);
        let approaches = [Approach::Adj, Approach::Unadj, Approach::Stabs];
        let a = run_scenario(&spec, 2, &approaches, 11, &tiny_options()).unwrap();
        let b = run_scenario(&spec, 2, &approaches, 11, &tiny_options()).unwrap();
        assert_eq!(a, b);
        let c = run_scenario(&spec, 2, &approaches, 12, &tiny_options()).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn adj_and_unadj_choose_identically_at_block_size_one() {
        // with singleton blocks the adjusted measure has no similar pairs,
        // so both approaches score and choose identically
        let spec = ScenarioSpec::new(48, 20, 1, 4);
        let rows = run_scenario(
            &spec,
            3,
            &[Approach::Adj, Approach::Unadj],
            21,
            &tiny_options(),
        )
        .unwrap();
        for pair in rows.chunks(2) {
            assert_eq!(pair[0].chosen_k, pair[1].chosen_k);
            assert_eq!(pair[0].n_selected, pair[1].n_selected);
            assert_eq!(pair[0].test_accuracy, pair[1].test_accuracy);
        }
    }

    #[test]
    fn nested_cv_contract() {
        let spec = ScenarioSpec::new(40, 10, 1, 8);
        let (data, _) = sample_dataset(&spec).unwrap();
        let opts = RunOptions {
            folds: 2,
            k_max: 3,
            stabsel_points: 2,
            timings: false,
        };
        let rows = run_nested_cv(&data, Approach::Acc, 2, 2, 5, &opts).unwrap();
        assert_eq!(rows.len(), 2);
        for (i, r) in rows.iter().enumerate() {
            assert_eq!(r.fold, i);
            assert!((0.0..=1.0).contains(&r.test_accuracy));
            assert!(r.n_selected <= data.p());
        }
        let again = run_nested_cv(&data, Approach::Acc, 2, 2, 5, &opts).unwrap();
        assert_eq!(rows, again);

        assert!(run_nested_cv(&data, Approach::Truth, 2, 2, 5, &opts).is_err());
    }

    #[test]
    fn results_csv_round_trips() {
        let rows = vec![
            ScenarioRow {
                scenario_id: "p200_b5".to_string(),
                replication: 0,
                approach: Approach::Adj,
                test_accuracy: Some(0.8125),
                false_positives: Some(1),
                false_negatives: Some(0),
                n_selected: Some(6),
                chosen_k: Some(6),
                wall_time_ms: 0,
                error: None,
            },
            ScenarioRow {
                scenario_id: "p200_b5".to_string(),
                replication: 1,
                approach: Approach::Stabs,
                test_accuracy: None,
                false_positives: None,
                false_negatives: None,
                n_selected: None,
                chosen_k: None,
                wall_time_ms: 0,
                error: Some("solver failed".to_string()),
            },
        ];
        let mut buf = Vec::new();
        write_results_csv(&rows, &mut buf).unwrap();
        let parsed = read_results_csv(buf.as_slice()).unwrap();
        assert_eq!(rows, parsed);
    }

    #[test]
    fn approach_names_round_trip() {
        for a in Approach::ALL {
            let parsed: Approach = a.as_str().parse().unwrap();
            assert_eq!(parsed, a);
        }
        assert!("bogus".parse::<Approach>().is_err());
    }
}
