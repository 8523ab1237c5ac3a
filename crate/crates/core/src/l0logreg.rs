//! Best-subset (L0-constrained) logistic regression.
//!
//! Fits logistic models that use at most k features, for k fixed in
//! advance. The solver greedily grows the support one feature at a time
//! and then tries to improve it by swapping single features in and out,
//! re-fitting with warm-started iteratively reweighted least squares
//! (IRLS) after every change. Features are standardized internally; the
//! returned coefficients live on the original scale.
//!
//! A tiny ridge term keeps the Newton systems well posed. Models on
//! separable data are returned with `converged = false` once coefficients
//! saturate, rather than erroring out.

use crate::data::{Dataset, FeatureSet};
use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

/// Tuning knobs of the subset solver. The defaults are what every other
/// module in this crate uses.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Ridge penalty on standardized coefficients (never on the intercept).
    pub ridge: f64,
    /// Iteration cap for a full IRLS solve.
    pub max_irls_iters: usize,
    /// Stop when the max-norm of the penalized gradient falls below this.
    pub tol_grad: f64,
    /// Minimal relative loss improvement for accepting a feature swap.
    pub tol_swap: f64,
    /// Whether to run the swap local search after each forward step.
    pub swap_search: bool,
    /// How many candidate features get an exact warm-started evaluation
    /// per step; the rest are ranked by a quadratic approximation only.
    pub shortlist: usize,
    /// IRLS iteration cap for shortlist candidate evaluation.
    pub candidate_irls_iters: usize,
    /// Cap on full sweeps of the swap search per support size.
    pub max_swap_rounds: usize,
    /// Standardized coefficients beyond this magnitude count as saturated
    /// (quasi-separable data) and clear the `converged` flag.
    pub saturation_cap: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            ridge: 1e-6,
            max_irls_iters: 50,
            tol_grad: 1e-6,
            tol_swap: 1e-8,
            swap_search: true,
            shortlist: 8,
            candidate_irls_iters: 8,
            max_swap_rounds: 10,
            saturation_cap: 25.0,
        }
    }
}

/// A fitted sparse logistic model on the original feature scale.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SparseModel {
    /// Selected features, sorted ascending.
    pub features: FeatureSet,
    /// Coefficients aligned with `features`.
    pub coefficients: Vec<f64>,
    pub intercept: f64,
    /// Mean negative log-likelihood on the training data (no penalty).
    pub train_loss: f64,
    /// False when the gradient tolerance was not reached or a coefficient
    /// saturated (typically: separable training data).
    pub converged: bool,
}

impl SparseModel {
    pub fn k(&self) -> usize {
        self.features.len()
    }

    /// Linear scores intercept + x . beta for every row.
    pub fn decision_values(&self, data: &Dataset) -> Result<Vec<f64>> {
        self.features.check_dimension(data.p())?;
        let mut out = Vec::with_capacity(data.n());
        for i in 0..data.n() {
            let mut s = self.intercept;
            for (idx, f) in self.features.iter().enumerate() {
                s += self.coefficients[idx] * data.value(i, f);
            }
            out.push(s);
        }
        Ok(out)
    }

    /// Class predictions; a non-negative decision value maps to class 1.
    pub fn predict_class(&self, data: &Dataset) -> Result<Vec<u8>> {
        Ok(self
            .decision_values(data)?
            .into_iter()
            .map(|s| u8::from(s >= 0.0))
            .collect())
    }
}

/// Fraction of rows whose predicted class matches the label.
pub fn accuracy(model: &SparseModel, data: &Dataset) -> Result<f64> {
    let pred = model.predict_class(data)?;
    let hits = pred
        .iter()
        .zip(data.labels())
        .filter(|(p, y)| p == y)
        .count();
    Ok(hits as f64 / data.n() as f64)
}

/// Column-standardized view of a dataset plus the back-transform.
struct Standardized {
    z: DMatrix<f64>,
    means: Vec<f64>,
    /// Population standard deviations; constant columns get scale 1 so the
    /// transform stays invertible (their standardized column is all zero).
    scales: Vec<f64>,
    y: Vec<f64>,
}

impl Standardized {
    fn new(data: &Dataset) -> Self {
        let (n, p) = (data.n(), data.p());
        let mut z = data.x().clone();
        let mut means = Vec::with_capacity(p);
        let mut scales = Vec::with_capacity(p);
        for j in 0..p {
            let mean = z.column(j).sum() / n as f64;
            let mut var = 0.0;
            for i in 0..n {
                let c = z[(i, j)] - mean;
                z[(i, j)] = c;
                var += c * c;
            }
            var /= n as f64;
            let scale = if var > 0.0 { var.sqrt() } else { 1.0 };
            let inv = 1.0 / scale;
            for i in 0..n {
                z[(i, j)] *= inv;
            }
            means.push(mean);
            scales.push(scale);
        }
        let y = data.labels().iter().map(|&v| v as f64).collect();
        Standardized { z, means, scales, y }
    }

    fn n(&self) -> usize {
        self.z.nrows()
    }

    fn p(&self) -> usize {
        self.z.ncols()
    }
}

/// IRLS state for one support: parameters are [intercept, beta...] on the
/// standardized scale.
#[derive(Clone)]
struct Fit {
    support: Vec<usize>,
    w: DVector<f64>,
    penalized_loss: f64,
    plain_loss: f64,
    reached_tol: bool,
}

fn scores(std: &Standardized, support: &[usize], w: &DVector<f64>) -> DVector<f64> {
    let n = std.n();
    let mut s = DVector::from_element(n, w[0]);
    for (idx, &f) in support.iter().enumerate() {
        let beta = w[idx + 1];
        if beta != 0.0 {
            s.axpy(beta, &std.z.column(f), 1.0);
        }
    }
    s
}

/// log(1 + exp(v)) without overflow.
fn log1p_exp(v: f64) -> f64 {
    if v > 0.0 {
        v + (-v).exp().ln_1p()
    } else {
        v.exp().ln_1p()
    }
}

fn sigmoid(v: f64) -> f64 {
    if v >= 0.0 {
        1.0 / (1.0 + (-v).exp())
    } else {
        let e = v.exp();
        e / (1.0 + e)
    }
}

/// Mean negative log-likelihood for labels in {0, 1}.
fn plain_loss(s: &DVector<f64>, y: &[f64]) -> f64 {
    let n = y.len();
    let mut sum = 0.0;
    for i in 0..n {
        // -[y log mu + (1 - y) log(1 - mu)] = log(1 + e^s) - y s
        sum += log1p_exp(s[i]) - y[i] * s[i];
    }
    sum / n as f64
}

fn penalty(w: &DVector<f64>, ridge: f64) -> f64 {
    let mut sq = 0.0;
    for j in 1..w.len() {
        sq += w[j] * w[j];
    }
    0.5 * ridge * sq
}

/// Penalized gradient: [mean residual, Z_S^T r / n + ridge beta].
fn gradient(
    std: &Standardized,
    support: &[usize],
    w: &DVector<f64>,
    mu: &DVector<f64>,
    ridge: f64,
) -> DVector<f64> {
    let n = std.n() as f64;
    let mut g = DVector::zeros(support.len() + 1);
    let mut r0 = 0.0;
    for i in 0..std.n() {
        r0 += mu[i] - std.y[i];
    }
    g[0] = r0 / n;
    for (idx, &f) in support.iter().enumerate() {
        let mut acc = 0.0;
        for i in 0..std.n() {
            acc += std.z[(i, f)] * (mu[i] - std.y[i]);
        }
        g[idx + 1] = acc / n + ridge * w[idx + 1];
    }
    g
}

/// One warm-started IRLS run on a fixed support, with halving line search
/// on the penalized loss.
fn irls(
    std: &Standardized,
    support: Vec<usize>,
    warm: Option<&DVector<f64>>,
    opts: &SolverOptions,
    max_iters: usize,
) -> Result<Fit> {
    let n = std.n();
    let dim = support.len() + 1;
    let mut w = match warm {
        Some(prev) => {
            debug_assert_eq!(prev.len(), dim);
            prev.clone()
        }
        None => DVector::zeros(dim),
    };
    let mut s = scores(std, &support, &w);
    let mut loss = plain_loss(&s, &std.y) + penalty(&w, opts.ridge);
    let mut reached_tol = false;

    for _ in 0..max_iters {
        let mu = s.map(sigmoid);
        let g = gradient(std, &support, &w, &mu, opts.ridge);
        if g.amax() <= opts.tol_grad {
            reached_tol = true;
            break;
        }

        // Newton system: H = [1 Z_S]^T W [1 Z_S] / n + ridge on the beta block
        let mut h = DMatrix::zeros(dim, dim);
        for i in 0..n {
            let wt = mu[i] * (1.0 - mu[i]);
            if wt == 0.0 {
                continue;
            }
            h[(0, 0)] += wt;
            for (a, &fa) in support.iter().enumerate() {
                let za = std.z[(i, fa)] * wt;
                h[(a + 1, 0)] += za;
                for (b, &fb) in support.iter().enumerate().take(a + 1) {
                    h[(a + 1, b + 1)] += za / wt * (std.z[(i, fb)] * wt);
                }
            }
        }
        h /= n as f64;
        for j in 1..dim {
            h[(j, j)] += opts.ridge;
        }
        for a in 0..dim {
            for b in (a + 1)..dim {
                h[(a, b)] = h[(b, a)];
            }
        }

        let dir = solve_spd(h, &-&g)?;
        let slope: f64 = g.dot(&dir);
        if slope >= 0.0 {
            // numerically not a descent direction; give up on this run
            break;
        }

        // backtracking with the Armijo condition
        let mut step = 1.0;
        let mut accepted = false;
        while step >= 1e-10 {
            let w_try = &w + &dir * step;
            let s_try = scores(std, &support, &w_try);
            let loss_try = plain_loss(&s_try, &std.y) + penalty(&w_try, opts.ridge);
            if loss_try <= loss + 1e-4 * step * slope {
                w = w_try;
                s = s_try;
                loss = loss_try;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            break;
        }
    }

    let plain = plain_loss(&s, &std.y);
    Ok(Fit {
        support,
        w,
        penalized_loss: loss,
        plain_loss: plain,
        reached_tol,
    })
}

/// Cholesky solve with escalating diagonal regularization.
fn solve_spd(mut h: DMatrix<f64>, rhs: &DVector<f64>) -> Result<DVector<f64>> {
    let mut bump = 0.0;
    for _ in 0..8 {
        if bump > 0.0 {
            for j in 0..h.nrows() {
                h[(j, j)] += bump;
            }
        }
        if let Some(chol) = h.clone().cholesky() {
            return Ok(chol.solve(rhs));
        }
        bump = if bump == 0.0 { 1e-10 } else { bump * 100.0 };
    }
    Err(Error::DegenerateDesign)
}

fn saturated(w: &DVector<f64>, cap: f64) -> bool {
    w.iter().any(|v| v.abs() > cap)
}

fn to_model(fit: &Fit, std: &Standardized, opts: &SolverOptions) -> SparseModel {
    // order the support ascending and destandardize
    let mut order: Vec<usize> = (0..fit.support.len()).collect();
    order.sort_unstable_by_key(|&idx| fit.support[idx]);
    let mut features = Vec::with_capacity(order.len());
    let mut coefficients = Vec::with_capacity(order.len());
    let mut intercept = fit.w[0];
    for &idx in &order {
        let f = fit.support[idx];
        let beta_std = fit.w[idx + 1];
        let beta = beta_std / std.scales[f];
        intercept -= beta * std.means[f];
        features.push(f);
        coefficients.push(beta);
    }
    SparseModel {
        features: FeatureSet::new(features),
        coefficients,
        intercept,
        train_loss: fit.plain_loss,
        converged: fit.reached_tol && !saturated(&fit.w, opts.saturation_cap),
    }
}

/// Approximate loss decrease from adding feature `f` alone, via one
/// coordinate Newton step: g^2 / (2 h).
fn candidate_scores(
    std: &Standardized,
    mu: &DVector<f64>,
    in_support: &[bool],
    ridge: f64,
) -> Vec<(usize, f64)> {
    let n = std.n();
    let nf = n as f64;
    let mut out = Vec::new();
    for f in 0..std.p() {
        if in_support[f] {
            continue;
        }
        let mut g = 0.0;
        let mut h = 0.0;
        for i in 0..n {
            let z = std.z[(i, f)];
            g += z * (mu[i] - std.y[i]);
            h += z * z * mu[i] * (1.0 - mu[i]);
        }
        g /= nf;
        h = h / nf + ridge;
        if h > 0.0 {
            out.push((f, g * g / (2.0 * h)));
        } else {
            out.push((f, 0.0));
        }
    }
    out
}

/// Top-`limit` candidates by approximate score, ties broken toward the
/// smaller feature index.
fn shortlist(mut scored: Vec<(usize, f64)>, limit: usize) -> Vec<usize> {
    scored.sort_unstable_by(|a, b| {
        b.1.partial_cmp(&a.1)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.0.cmp(&b.0))
    });
    scored.truncate(limit.max(1));
    scored.into_iter().map(|(f, _)| f).collect()
}

/// Relative tie window for comparing candidate losses.
fn loss_tie_eps(reference: f64) -> f64 {
    1e-12 * (1.0 + reference.abs())
}

/// Extend `fit` by the best single feature. Returns the refit model.
fn forward_extend(std: &Standardized, fit: &Fit, opts: &SolverOptions) -> Result<Fit> {
    let mut in_support = vec![false; std.p()];
    for &f in &fit.support {
        in_support[f] = true;
    }
    let s = scores(std, &fit.support, &fit.w);
    let mu = s.map(sigmoid);
    let cands = shortlist(
        candidate_scores(std, &mu, &in_support, opts.ridge),
        opts.shortlist,
    );
    if cands.is_empty() {
        return Err(Error::SupportTooLarge {
            k: fit.support.len() + 1,
            max: std.p(),
        });
    }

    let mut best: Option<(f64, usize)> = None;
    for &f in &cands {
        let mut support = fit.support.clone();
        support.push(f);
        let mut warm = DVector::zeros(support.len() + 1);
        warm.rows_mut(0, fit.w.len()).copy_from(&fit.w);
        let probe = irls(std, support, Some(&warm), opts, opts.candidate_irls_iters)?;
        let better = match best {
            None => true,
            Some((best_loss, best_f)) => {
                probe.penalized_loss < best_loss - loss_tie_eps(best_loss)
                    || ((probe.penalized_loss - best_loss).abs() <= loss_tie_eps(best_loss)
                        && f < best_f)
            }
        };
        if better {
            best = Some((probe.penalized_loss, f));
        }
    }
    let (_, chosen) = best.expect("shortlist is non-empty");
    let mut support = fit.support.clone();
    support.push(chosen);
    let mut warm = DVector::zeros(support.len() + 1);
    warm.rows_mut(0, fit.w.len()).copy_from(&fit.w);
    irls(std, support, Some(&warm), opts, opts.max_irls_iters)
}

/// Local search: repeatedly try to replace one selected feature with a
/// better outside feature; keep going while a sweep improves the penalized
/// loss by more than the relative tolerance.
fn swap_search(std: &Standardized, mut fit: Fit, opts: &SolverOptions) -> Result<Fit> {
    if fit.support.len() >= std.p() {
        return Ok(fit); // nothing outside the support to swap in
    }
    for _ in 0..opts.max_swap_rounds {
        let mut improved = false;
        // visit positions in ascending feature order for determinism
        let mut positions: Vec<usize> = (0..fit.support.len()).collect();
        positions.sort_unstable_by_key(|&idx| fit.support[idx]);
        for pos in positions {
            let removed = fit.support[pos];
            let mut reduced_support = fit.support.clone();
            reduced_support.remove(pos);
            let mut warm = DVector::zeros(reduced_support.len() + 1);
            warm[0] = fit.w[0];
            let mut t = 1;
            for idx in 0..fit.support.len() {
                if idx != pos {
                    warm[t] = fit.w[idx + 1];
                    t += 1;
                }
            }
            let reduced = irls(
                std,
                reduced_support,
                Some(&warm),
                opts,
                opts.candidate_irls_iters,
            )?;
            let extended = forward_extend(std, &reduced, opts)?;
            let gain = fit.penalized_loss - extended.penalized_loss;
            let accept = gain > opts.tol_swap * (1.0 + fit.penalized_loss.abs())
                && *extended.support.last().expect("non-empty") != removed;
            if accept {
                fit = extended;
                improved = true;
            }
        }
        if !improved {
            break;
        }
    }
    Ok(fit)
}

fn validate_ks(ks: &[usize], p: usize) -> Result<Vec<usize>> {
    if ks.is_empty() {
        return Err(Error::InvalidParameter(
            "at least one support size k is required".to_string(),
        ));
    }
    for &k in ks {
        if k > p {
            return Err(Error::SupportTooLarge { k, max: p });
        }
    }
    let mut sorted = ks.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    Ok(sorted)
}

/// Fit one model per requested support size, sharing the greedy path.
///
/// The path grows from the intercept-only model to max(ks), snapshotting
/// the model whenever the current size is requested. Returned models are
/// ordered by ascending k; their training losses are non-increasing in k
/// up to the (tiny) ridge term.
pub fn fit_l0_path(data: &Dataset, ks: &[usize], opts: &SolverOptions) -> Result<Vec<SparseModel>> {
    let ks = validate_ks(ks, data.p())?;
    let std = Standardized::new(data);
    let mut fit = irls(&std, Vec::new(), None, opts, opts.max_irls_iters)?;
    let mut out = Vec::with_capacity(ks.len());
    let max_k = *ks.last().expect("validated non-empty");
    let mut next = 0;
    if ks[next] == 0 {
        out.push(to_model(&fit, &std, opts));
        next += 1;
    }
    for size in 1..=max_k {
        fit = forward_extend(&std, &fit, opts)?;
        if opts.swap_search && fit.support.len() >= 2 {
            fit = swap_search(&std, fit, opts)?;
        }
        debug_assert_eq!(fit.support.len(), size);
        if next < ks.len() && ks[next] == size {
            out.push(to_model(&fit, &std, opts));
            next += 1;
        }
    }
    Ok(out)
}

/// Best-subset fit with exactly `k` features (fewer only if p < k, which
/// is an error).
pub fn fit_l0(data: &Dataset, k: usize, opts: &SolverOptions) -> Result<SparseModel> {
    Ok(fit_l0_path(data, &[k], opts)?.pop().expect("one model"))
}

/// Plain (ridge-stabilized) logistic regression on a fixed feature set.
pub fn fit_logistic(data: &Dataset, features: &FeatureSet, opts: &SolverOptions) -> Result<SparseModel> {
    features.check_dimension(data.p())?;
    let std = Standardized::new(data);
    let fit = irls(
        &std,
        features.iter().collect(),
        None,
        opts,
        opts.max_irls_iters,
    )?;
    Ok(to_model(&fit, &std, opts))
}

/// Budget guard for [`fit_l0_exhaustive`].
pub const EXHAUSTIVE_BUDGET: u128 = 1_000_000;

/// Exact best-subset fit by enumerating all size-`k` supports.
///
/// Refuses to enumerate more than [`EXHAUSTIVE_BUDGET`] combinations. Ties
/// in penalized loss go to the lexicographically smallest support, which
/// makes the result unique. Intended as a reference for small problems.
pub fn fit_l0_exhaustive(data: &Dataset, k: usize, opts: &SolverOptions) -> Result<SparseModel> {
    let p = data.p();
    if k > p {
        return Err(Error::SupportTooLarge { k, max: p });
    }
    let combos = binomial(p as u128, k as u128);
    if combos > EXHAUSTIVE_BUDGET {
        return Err(Error::CombinatorialBudget {
            combos,
            limit: EXHAUSTIVE_BUDGET,
        });
    }
    let std = Standardized::new(data);
    let mut best: Option<Fit> = None;
    let mut support: Vec<usize> = (0..k).collect();
    loop {
        let fit = irls(&std, support.clone(), None, opts, opts.max_irls_iters)?;
        let take = match &best {
            None => true,
            // strict improvement beyond the tie window; lexicographic
            // enumeration order means earlier ties win automatically
            Some(b) => fit.penalized_loss < b.penalized_loss - loss_tie_eps(b.penalized_loss),
        };
        if take {
            best = Some(fit);
        }
        if !next_combination(&mut support, p) {
            break;
        }
    }
    let best = best.expect("at least one combination");
    Ok(to_model(&best, &std, opts))
}

fn binomial(n: u128, k: u128) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.saturating_mul(n - i) / (i + 1);
    }
    acc
}

/// Advance `combo` to the next k-combination of 0..p in lexicographic
/// order; false when exhausted. The empty combination has no successor.
fn next_combination(combo: &mut [usize], p: usize) -> bool {
    let k = combo.len();
    if k == 0 {
        return false;
    }
    let mut i = k;
    while i > 0 {
        i -= 1;
        if combo[i] < p - (k - i) {
            combo[i] += 1;
            for j in (i + 1)..k {
                combo[j] = combo[j - 1] + 1;
            }
            return true;
        }
    }
    false
}
