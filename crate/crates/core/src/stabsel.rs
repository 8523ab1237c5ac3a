//! Stability selection with complementary-pairs subsampling.
//!
//! Repeatedly runs best-subset selection on random half-samples and keeps
//! the features that are selected in at least a `cutoff` fraction of them.
//! The per-subsample support size q is not tuned directly: it is derived
//! from the target per-family error rate (PFER) and the cutoff through the
//! classical stability-selection error bound, so the procedure has exactly
//! two real-valued hyperparameters. Those two are tuned by random search
//! against cross-validated accuracy of a plain logistic model refit on the
//! stable set.

use crate::data::{Dataset, FeatureSet};
use crate::error::{Error, Result};
use crate::l0logreg::{accuracy, fit_l0_path, fit_logistic, SolverOptions};
use crate::rng::{derive_seed, rng_from_seed, salt};
use crate::tuning::{CVSplits, ConfigPerformance};
use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::io::Write;

/// Random-search range for the selection cutoff.
pub const CUTOFF_RANGE: (f64, f64) = (0.55, 0.99);
/// Random-search range for the PFER bound (sampled log-uniformly).
pub const PFER_RANGE: (f64, f64) = (0.1, 10.0);
/// Default number of random-search candidates.
pub const DEFAULT_N_POINTS: usize = 50;
/// Default number of subsamples (must stay even: they come in
/// complementary pairs).
pub const DEFAULT_N_SUBSAMPLES: usize = 50;

/// The two tuned hyperparameters plus subsampling bookkeeping.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabSelParams {
    /// Selection-frequency threshold, in (0.5, 1].
    pub cutoff: f64,
    /// Target per-family error rate, > 0.
    pub pfer: f64,
    #[serde(default = "default_n_subsamples")]
    pub n_subsamples: usize,
    #[serde(default)]
    pub seed: u64,
}

fn default_n_subsamples() -> usize {
    DEFAULT_N_SUBSAMPLES
}

impl StabSelParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.cutoff > 0.5 && self.cutoff <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "cutoff must lie in (0.5, 1], got {}",
                self.cutoff
            )));
        }
        if !(self.pfer > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "pfer must be positive, got {}",
                self.pfer
            )));
        }
        if self.n_subsamples < 2 || self.n_subsamples % 2 != 0 {
            return Err(Error::InvalidParameter(format!(
                "n_subsamples must be even and >= 2, got {}",
                self.n_subsamples
            )));
        }
        Ok(())
    }
}

/// Per-feature selection frequencies over all subsamples.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SelectionFrequencies {
    /// counts[f] / n_subsamples, in [0, 1].
    pub freq: Vec<f64>,
    /// Raw selection counts.
    pub counts: Vec<u32>,
    /// The per-subsample support size that produced these frequencies.
    pub q_used: usize,
}

/// `n_subsamples` index sets forming n_subsamples/2 random partitions of
/// [0, n) into complementary halves of size floor(n/2) and ceil(n/2).
pub fn complementary_subsamples(
    n: usize,
    n_subsamples: usize,
    seed: u64,
) -> Result<Vec<Vec<usize>>> {
    if n < 4 {
        return Err(Error::InvalidParameter(format!(
            "complementary subsampling needs n >= 4, got {n}"
        )));
    }
    if n_subsamples < 2 || n_subsamples % 2 != 0 {
        return Err(Error::InvalidParameter(format!(
            "n_subsamples must be even and >= 2, got {n_subsamples}"
        )));
    }
    let mut rng = rng_from_seed(derive_seed(seed, &[salt::SUBSAMPLES]));
    let mut out = Vec::with_capacity(n_subsamples);
    let half = n / 2;
    let mut perm: Vec<usize> = (0..n).collect();
    for _ in 0..n_subsamples / 2 {
        perm.shuffle(&mut rng);
        let mut a: Vec<usize> = perm[..half].to_vec();
        let mut b: Vec<usize> = perm[half..].to_vec();
        a.sort_unstable();
        b.sort_unstable();
        out.push(a);
        out.push(b);
    }
    Ok(out)
}

/// Per-subsample support size from the stability-selection error bound:
/// q = floor(sqrt(pfer * (2 cutoff - 1) * p)), clamped to [1, p].
pub fn derive_q(params: &StabSelParams, p: usize) -> usize {
    let q = (params.pfer * (2.0 * params.cutoff - 1.0) * p as f64).sqrt().floor();
    (q.max(1.0) as usize).min(p)
}

/// Solver settings for the many small subsample fits: forward selection
/// only (no swap refinement) and fewer inner iterations. Selection
/// frequencies average over 50 subsamples, which forgives the rougher
/// individual fits and buys an order of magnitude in speed.
pub fn subsample_solver_options() -> SolverOptions {
    SolverOptions {
        swap_search: false,
        shortlist: 4,
        candidate_irls_iters: 4,
        max_irls_iters: 25,
        ..SolverOptions::default()
    }
}

fn check_q_feasible(q: usize, n: usize) -> Result<()> {
    let half = n / 2;
    if half < 2 || q >= half - 1 {
        return Err(Error::InvalidParameter(format!(
            "per-subsample support size {q} is too large for subsamples of {half} rows"
        )));
    }
    Ok(())
}

/// Run the subsample fits for `params` and count how often each feature
/// is selected. A subsample whose fit fails counts as selecting nothing.
pub fn selection_frequencies(
    data: &Dataset,
    params: &StabSelParams,
    opts: &SolverOptions,
) -> Result<SelectionFrequencies> {
    params.validate()?;
    let q = derive_q(params, data.p());
    check_q_feasible(q, data.n())?;
    let subsamples = complementary_subsamples(data.n(), params.n_subsamples, params.seed)?;
    let supports: Vec<FeatureSet> = subsamples
        .par_iter()
        .map(|rows| {
            let sub = data.subset_rows(rows);
            match fit_l0_path(&sub, &[q], opts) {
                Ok(mut path) => path.pop().expect("one model").features,
                Err(e) => {
                    log::warn!("subsample fit failed ({e}); counting an empty selection");
                    FeatureSet::empty()
                }
            }
        })
        .collect();
    Ok(tally(&supports, data.p(), params.n_subsamples, q))
}

fn tally(supports: &[FeatureSet], p: usize, n_subsamples: usize, q: usize) -> SelectionFrequencies {
    let mut counts = vec![0u32; p];
    for s in supports {
        for f in s.iter() {
            counts[f] += 1;
        }
    }
    let freq = counts
        .iter()
        .map(|&c| c as f64 / n_subsamples as f64)
        .collect();
    SelectionFrequencies {
        freq,
        counts,
        q_used: q,
    }
}

/// Features whose selection frequency reaches the cutoff.
pub fn stable_set(freqs: &SelectionFrequencies, cutoff: f64) -> Result<FeatureSet> {
    if !(cutoff > 0.5 && cutoff <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "cutoff must lie in (0.5, 1], got {cutoff}"
        )));
    }
    Ok(FeatureSet::new(
        freqs
            .freq
            .iter()
            .enumerate()
            .filter(|(_, &f)| f >= cutoff)
            .map(|(i, _)| i),
    ))
}

/// One row per feature: index and selection frequency.
pub fn write_frequencies_csv<W: Write>(freqs: &SelectionFrequencies, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["feature", "frequency"])?;
    for (i, f) in freqs.freq.iter().enumerate() {
        w.write_record([i.to_string(), format!("{f}")])?;
    }
    w.flush()?;
    Ok(())
}

/// Random search over (cutoff, pfer).
///
/// All candidates share the same subsamples within a CV fold, so the
/// expensive subsample fits are computed once per distinct support size q
/// and fold, then reused across candidates. Returns the accuracy-best
/// candidate (random tie-break, seeded) with its CV performance; the
/// reported `k` is the q the winning parameters imply on the full dataset.
pub fn tune_stabsel(
    data: &Dataset,
    splits: &CVSplits,
    n_points: usize,
    seed: u64,
) -> Result<(StabSelParams, ConfigPerformance)> {
    if n_points == 0 {
        return Err(Error::InvalidParameter(
            "random search needs at least one candidate".to_string(),
        ));
    }
    if splits.n() != data.n() {
        return Err(Error::InvalidData(format!(
            "splits cover {} rows but the dataset has {}",
            splits.n(),
            data.n()
        )));
    }
    let p = data.p();
    let subsample_seed = derive_seed(seed, &[salt::SUBSAMPLES]);
    let mut rng = rng_from_seed(derive_seed(seed, &[salt::CANDIDATES]));
    let candidates: Vec<StabSelParams> = (0..n_points)
        .map(|_| {
            let cutoff = rng.gen_range(CUTOFF_RANGE.0..=CUTOFF_RANGE.1);
            let pfer = (rng.gen_range(PFER_RANGE.0.ln()..=PFER_RANGE.1.ln())).exp();
            StabSelParams {
                cutoff,
                pfer,
                n_subsamples: DEFAULT_N_SUBSAMPLES,
                seed: subsample_seed,
            }
        })
        .collect();

    // the subsample fits depend only on (fold, q): compute each once
    let mut q_values: Vec<usize> = candidates.iter().map(|c| derive_q(c, p)).collect();
    q_values.sort_unstable();
    q_values.dedup();
    let n_folds = splits.n_folds();
    let fold_train: Vec<Dataset> = (0..n_folds)
        .map(|f| data.subset_rows(&splits.train_rows(f)))
        .collect();
    let fold_test: Vec<Dataset> = (0..n_folds)
        .map(|f| data.subset_rows(splits.test_rows(f)))
        .collect();
    let opts = subsample_solver_options();

    // one subsample path per (fold, subsample) covering every feasible q
    let freq_entries: Vec<((usize, usize), SelectionFrequencies)> = (0..n_folds)
        .into_par_iter()
        .flat_map(|fold| {
            let train = &fold_train[fold];
            let feasible: Vec<usize> = q_values
                .iter()
                .copied()
                .filter(|&q| check_q_feasible(q, train.n()).is_ok())
                .collect();
            if feasible.is_empty() {
                return Vec::new();
            }
            let subsamples =
                match complementary_subsamples(train.n(), DEFAULT_N_SUBSAMPLES, subsample_seed) {
                    Ok(s) => s,
                    Err(e) => {
                        log::warn!("fold {fold}: subsampling failed ({e})");
                        return Vec::new();
                    }
                };
            let per_sub: Vec<Vec<FeatureSet>> = subsamples
                .par_iter()
                .map(|rows| {
                    let sub = train.subset_rows(rows);
                    match fit_l0_path(&sub, &feasible, &opts) {
                        Ok(path) => path.into_iter().map(|m| m.features).collect(),
                        Err(e) => {
                            log::warn!(
                                "fold {fold}: subsample fit failed ({e}); empty selection"
                            );
                            vec![FeatureSet::empty(); feasible.len()]
                        }
                    }
                })
                .collect();
            feasible
                .iter()
                .enumerate()
                .map(|(qi, &q)| {
                    let supports: Vec<FeatureSet> =
                        per_sub.iter().map(|s| s[qi].clone()).collect();
                    ((fold, q), tally(&supports, p, DEFAULT_N_SUBSAMPLES, q))
                })
                .collect::<Vec<_>>()
        })
        .collect();
    let freq_cache: HashMap<(usize, usize), SelectionFrequencies> =
        freq_entries.into_iter().collect();

    // score candidates against the cached frequencies
    let mut results: Vec<Option<ConfigPerformance>> = Vec::with_capacity(n_points);
    for cand in &candidates {
        let q = derive_q(cand, p);
        let mut fold_accuracies = Vec::with_capacity(n_folds);
        let mut fold_sets = Vec::with_capacity(n_folds);
        let mut valid = true;
        for fold in 0..n_folds {
            let Some(freqs) = freq_cache.get(&(fold, q)) else {
                log::warn!(
                    "candidate (cutoff {:.3}, pfer {:.3}) needs q = {q}, infeasible on fold {fold}",
                    cand.cutoff,
                    cand.pfer
                );
                valid = false;
                break;
            };
            let stable = stable_set(freqs, cand.cutoff)?;
            let train = &fold_train[fold];
            if stable.len() + 2 > train.n() {
                log::warn!(
                    "candidate (cutoff {:.3}, pfer {:.3}): stable set of {} features is too \
                     large for {} training rows",
                    cand.cutoff,
                    cand.pfer,
                    stable.len(),
                    train.n()
                );
                valid = false;
                break;
            }
            let model = fit_logistic(train, &stable, &SolverOptions::default())?;
            fold_accuracies.push(accuracy(&model, &fold_test[fold])?);
            fold_sets.push(stable);
        }
        results.push(if valid {
            let mean_accuracy = fold_accuracies.iter().sum::<f64>() / n_folds as f64;
            Some(ConfigPerformance {
                k: q,
                mean_accuracy,
                stability: None,
                fold_feature_sets: fold_sets,
                fold_accuracies,
            })
        } else {
            None
        });
    }

    let best_acc = results
        .iter()
        .flatten()
        .map(|c| c.mean_accuracy)
        .fold(f64::NEG_INFINITY, f64::max);
    let alive: Vec<usize> = (0..n_points)
        .filter(|&i| {
            results[i]
                .as_ref()
                .is_some_and(|c| c.mean_accuracy >= best_acc)
        })
        .collect();
    if alive.is_empty() {
        return Err(Error::InvalidParameter(
            "no feasible stability-selection candidate; try a smaller PFER range".to_string(),
        ));
    }
    let chosen = if alive.len() == 1 {
        alive[0]
    } else {
        let mut tie_rng = rng_from_seed(derive_seed(seed, &[salt::TIE_BREAK]));
        alive[tie_rng.gen_range(0..alive.len())]
    };
    Ok((
        candidates[chosen].clone(),
        results[chosen].take().expect("chosen candidate is valid"),
    ))
}
