//! Five ways to aim belief propagation at a target, compared on unbelievable
//! targets only:
//!
//! (i)   BP at the parameters that generated the target,
//! (ii)  BP after pseudo-moment matching,
//! (iii) the best beliefs encountered during wake-sleep learning,
//! (iv)  ensemble BP over the exact parameters of the final learning window,
//! (v)   ensemble BP over Gaussian-sampled parameters with the window's
//!       first- and second-order statistics.

use rayon::prelude::*;
use std::fmt::Write as _;

use crate::bp::{run_bp, BpOptions, MessageInit};
use crate::ensemble::{ebp_exact, ebp_gaussian, fit_gaussian};
use crate::error::Result;
use crate::learning::{best_beliefs, bethe_wake_sleep, ThetaInit, WakeSleepOptions};
use crate::metrics::{metrics, Metrics};
use crate::model::{generate_random_ising, IsingModel, Topology};
use crate::pseudomarginal::Pseudomarginals;
use crate::seeding::{derive_seed, RNG_ALGORITHM};
use crate::spectral::{is_believable, Believability, BELIEVABILITY_TOL};

/// The five parameter-selection strategies, tagged i..v in output files.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModelTag {
    GeneratingParameters,
    PseudoMomentMatching,
    BestLearned,
    EbpExact,
    EbpGaussian,
}

impl ModelTag {
    pub const ALL: [ModelTag; 5] = [
        ModelTag::GeneratingParameters,
        ModelTag::PseudoMomentMatching,
        ModelTag::BestLearned,
        ModelTag::EbpExact,
        ModelTag::EbpGaussian,
    ];
}

impl std::fmt::Display for ModelTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            ModelTag::GeneratingParameters => "i",
            ModelTag::PseudoMomentMatching => "ii",
            ModelTag::BestLearned => "iii",
            ModelTag::EbpExact => "iv",
            ModelTag::EbpGaussian => "v",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone)]
pub struct ComparisonConfig {
    /// Number of unbelievable targets to process.
    pub trials: usize,
    pub n: usize,
    pub sigma_h: f64,
    pub sigma_j: f64,
    pub base_seed: u64,
    /// Generation attempts allowed while searching for unbelievable targets.
    pub max_attempts: usize,
    pub learning_iters: usize,
    pub epsilon: f64,
    /// BP budget used inside learning and for every evaluation run. Learning
    /// needs thousands of BP runs per target, so the default here is lower
    /// than the standalone default; non-converged runs are flagged and
    /// excluded from ensemble averages.
    pub bp_max_iters: usize,
    pub bp_damping_tau: f64,
    pub bp_tol: f64,
    /// Trailing-window length for models (iv) and (v).
    pub window: usize,
    pub gaussian_samples: usize,
    pub variance_fraction: f64,
    pub max_rank: usize,
    pub believability_tol: f64,
}

impl Default for ComparisonConfig {
    fn default() -> Self {
        ComparisonConfig {
            trials: 100,
            n: 8,
            sigma_h: 1.0 / 3.0,
            sigma_j: 1.0 / 3.0,
            base_seed: 1,
            max_attempts: 2000,
            learning_iters: 2000,
            epsilon: 0.1,
            bp_max_iters: 2500,
            bp_damping_tau: 5.0,
            bp_tol: 1e-9,
            window: 100,
            gaussian_samples: 500,
            variance_fraction: 0.99,
            max_rank: 2,
            believability_tol: BELIEVABILITY_TOL,
        }
    }
}

impl ComparisonConfig {
    fn bp_options(&self) -> BpOptions {
        BpOptions {
            damping_tau: self.bp_damping_tau,
            tol: self.bp_tol,
            max_iters: self.bp_max_iters,
            init: MessageInit::Uniform,
        }
    }
}

/// One row of the comparison output.
#[derive(Debug, Clone)]
pub struct ComparisonRecord {
    pub trial: usize,
    pub model: ModelTag,
    pub bethe_divergence: f64,
    pub euclidean_distance: f64,
    /// Fraction of BP runs behind this row that converged.
    pub bp_converged_frac: f64,
}

/// Central quartiles of both metrics for one strategy.
#[derive(Debug, Clone)]
pub struct ModelSummary {
    pub model: ModelTag,
    pub bethe_q1: f64,
    pub bethe_median: f64,
    pub bethe_q3: f64,
    pub dist_q1: f64,
    pub dist_median: f64,
    pub dist_q3: f64,
}

/// Full output of the comparison protocol.
#[derive(Debug, Clone)]
pub struct ComparisonOutput {
    pub records: Vec<ComparisonRecord>,
    pub summaries: Vec<ModelSummary>,
    /// Generation attempts consumed during target selection.
    pub attempts_used: usize,
    /// Unbelievable targets found (may fall short of `trials`).
    pub targets_found: usize,
}

/// Run the five strategies against one target. The Bethe divergence is
/// evaluated with the parameters each strategy actually ran: the generating
/// parameters for (i), the matched parameters for (ii), the best iterate's
/// parameters for (iii), and the window-mean parameters for (iv) and (v).
pub fn run_five_models(
    model: &IsingModel,
    p: &Pseudomarginals,
    cfg: &ComparisonConfig,
    trial: usize,
    trial_seed: u64,
) -> Result<Vec<ComparisonRecord>> {
    let bp_opts = cfg.bp_options();
    let graph = model.graph();
    let mut records = Vec::with_capacity(5);
    let push = |records: &mut Vec<ComparisonRecord>, tag, m: Metrics, frac: f64| {
        records.push(ComparisonRecord {
            trial,
            model: tag,
            bethe_divergence: m.bethe_divergence,
            euclidean_distance: m.euclidean_distance,
            bp_converged_frac: frac,
        });
    };

    // (i) generating parameters
    let r1 = run_bp(model, &bp_opts)?;
    push(
        &mut records,
        ModelTag::GeneratingParameters,
        metrics(p, &r1.beliefs, model)?,
        if r1.converged { 1.0 } else { 0.0 },
    );

    // (ii) pseudo-moment matching
    let matched = crate::learning::pseudo_moment_matching(p)?;
    let r2 = run_bp(&matched, &bp_opts)?;
    push(
        &mut records,
        ModelTag::PseudoMomentMatching,
        metrics(p, &r2.beliefs, &matched)?,
        if r2.converged { 1.0 } else { 0.0 },
    );

    // one wake-sleep run feeds (iii), (iv), and (v)
    let ws = WakeSleepOptions {
        epsilon: cfg.epsilon,
        iters: cfg.learning_iters,
        theta_init: ThetaInit::PseudoMomentMatching,
        bp: bp_opts.clone(),
        message_policy: crate::learning::MessagePolicy::FreshUniform,
        seed: derive_seed(trial_seed, 1),
    };
    let traj = bethe_wake_sleep(p, &ws)?;
    let learn_frac =
        traj.records().iter().filter(|r| r.converged).count() as f64 / traj.len().max(1) as f64;

    // (iii) best beliefs over the whole run
    let (best_idx, best) = best_beliefs(&traj, p)?;
    let best_rec = &traj.records()[best_idx];
    let best_model = IsingModel::new(graph.clone(), best_rec.h.clone(), best_rec.j.clone())?;
    push(
        &mut records,
        ModelTag::BestLearned,
        metrics(p, &best, &best_model)?,
        learn_frac,
    );

    // (iv) exact-window ensemble
    let window = cfg.window.min(traj.len());
    let exact = ebp_exact(&traj, window)?;
    let spec = fit_gaussian(&traj, window, cfg.variance_fraction, cfg.max_rank)?;
    let (mean_h, mean_j) = spec.theta_mean.split_at(graph.n());
    let mean_model = IsingModel::new(graph.clone(), mean_h.to_vec(), mean_j.to_vec())?;
    push(
        &mut records,
        ModelTag::EbpExact,
        metrics(p, &exact.beliefs, &mean_model)?,
        exact.used as f64 / window as f64,
    );

    // (v) gaussian ensemble with the window statistics
    let gauss = ebp_gaussian(
        &spec,
        graph,
        cfg.gaussian_samples,
        derive_seed(trial_seed, 2),
        &bp_opts,
    )?;
    push(
        &mut records,
        ModelTag::EbpGaussian,
        metrics(p, &gauss.beliefs, &mean_model)?,
        gauss.n_converged as f64 / cfg.gaussian_samples as f64,
    );

    Ok(records)
}

/// Generate random targets, keep the unbelievable ones, and evaluate all five
/// strategies on each. Selection walks generation attempts in order, so the
/// chosen targets do not depend on thread count.
pub fn five_model_comparison(cfg: &ComparisonConfig) -> Result<ComparisonOutput> {
    assert!(cfg.trials >= 1, "need at least one trial");
    // phase 1: find unbelievable targets
    let mut selected: Vec<(usize, IsingModel, Pseudomarginals)> = Vec::new();
    let mut attempts_used = 0;
    let chunk = (4 * cfg.trials).max(16);
    while attempts_used < cfg.max_attempts && selected.len() < cfg.trials {
        let stop = (attempts_used + chunk).min(cfg.max_attempts);
        let mut found: Vec<(usize, IsingModel, Pseudomarginals)> = (attempts_used..stop)
            .into_par_iter()
            .filter_map(|attempt| {
                let seed = derive_seed(cfg.base_seed, attempt as u64);
                let model =
                    generate_random_ising(cfg.n, cfg.sigma_h, cfg.sigma_j, Topology::Full, seed)
                        .expect("full topology generation cannot fail");
                let p = model.exact_marginals().ok()?;
                match is_believable(&p, cfg.believability_tol) {
                    Ok((Believability::Unbelievable, _)) => Some((attempt, model, p)),
                    _ => None,
                }
            })
            .collect();
        selected.append(&mut found);
        attempts_used = stop;
    }
    selected.truncate(cfg.trials);
    let targets_found = selected.len();

    // phase 2: evaluate the five strategies per target
    let per_target: Vec<Result<Vec<ComparisonRecord>>> = selected
        .par_iter()
        .enumerate()
        .map(|(trial, (attempt, model, p))| {
            let trial_seed = derive_seed(cfg.base_seed, u64::MAX - *attempt as u64);
            run_five_models(model, p, cfg, trial, trial_seed)
        })
        .collect();
    let mut records = Vec::with_capacity(5 * targets_found);
    for r in per_target {
        records.extend(r?);
    }
    let summaries = summarize(&records);
    Ok(ComparisonOutput {
        records,
        summaries,
        attempts_used,
        targets_found,
    })
}

fn summarize(records: &[ComparisonRecord]) -> Vec<ModelSummary> {
    ModelTag::ALL
        .iter()
        .filter_map(|&tag| {
            let mut bethe: Vec<f64> = records
                .iter()
                .filter(|r| r.model == tag)
                .map(|r| r.bethe_divergence)
                .collect();
            let mut dist: Vec<f64> = records
                .iter()
                .filter(|r| r.model == tag)
                .map(|r| r.euclidean_distance)
                .collect();
            if bethe.is_empty() {
                return None;
            }
            bethe.sort_by(f64::total_cmp);
            dist.sort_by(f64::total_cmp);
            Some(ModelSummary {
                model: tag,
                bethe_q1: super::quantile(&bethe, 0.25),
                bethe_median: super::quantile(&bethe, 0.5),
                bethe_q3: super::quantile(&bethe, 0.75),
                dist_q1: super::quantile(&dist, 0.25),
                dist_median: super::quantile(&dist, 0.5),
                dist_q3: super::quantile(&dist, 0.75),
            })
        })
        .collect()
}

impl ComparisonOutput {
    /// Per-trial records as CSV with a reproducibility header. Rows are
    /// sorted by (trial, model).
    pub fn records_csv(&self, cfg: &ComparisonConfig) -> String {
        let mut out = String::new();
        writeln!(out, "# five-model-comparison").unwrap();
        writeln!(
            out,
            "# rng={} base_seed={} n={} sigma_h={} sigma_j={} trials={} max_attempts={}",
            RNG_ALGORITHM,
            cfg.base_seed,
            cfg.n,
            cfg.sigma_h,
            cfg.sigma_j,
            cfg.trials,
            cfg.max_attempts
        )
        .unwrap();
        writeln!(
            out,
            "# learning_iters={} epsilon={} bp_max_iters={} bp_damping_tau={} bp_tol={} window={} gaussian_samples={} variance_fraction={} max_rank={}",
            cfg.learning_iters,
            cfg.epsilon,
            cfg.bp_max_iters,
            cfg.bp_damping_tau,
            cfg.bp_tol,
            cfg.window,
            cfg.gaussian_samples,
            cfg.variance_fraction,
            cfg.max_rank
        )
        .unwrap();
        writeln!(
            out,
            "# attempts_used={} targets_found={} divergence_theta=window_mean_for_iv_v",
            self.attempts_used, self.targets_found
        )
        .unwrap();
        writeln!(
            out,
            "trial,model,bethe_divergence,euclidean_distance,bp_converged_frac"
        )
        .unwrap();
        let mut rows: Vec<&ComparisonRecord> = self.records.iter().collect();
        rows.sort_by_key(|r| {
            (
                r.trial,
                ModelTag::ALL.iter().position(|t| *t == r.model).unwrap(),
            )
        });
        for r in rows {
            writeln!(
                out,
                "{},{},{},{},{}",
                r.trial, r.model, r.bethe_divergence, r.euclidean_distance, r.bp_converged_frac
            )
            .unwrap();
        }
        out
    }

    /// Quartile summary as CSV.
    pub fn summary_csv(&self) -> String {
        let mut out = String::new();
        writeln!(
            out,
            "model,bethe_q1,bethe_median,bethe_q3,dist_q1,dist_median,dist_q3"
        )
        .unwrap();
        for s in &self.summaries {
            writeln!(
                out,
                "{},{},{},{},{},{},{}",
                s.model,
                s.bethe_q1,
                s.bethe_median,
                s.bethe_q3,
                s.dist_q1,
                s.dist_median,
                s.dist_q3
            )
            .unwrap();
        }
        out
    }

    pub fn summary_for(&self, tag: ModelTag) -> Option<&ModelSummary> {
        self.summaries.iter().find(|s| s.model == tag)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn believable_only_batch_yields_no_records() {
        let cfg = ComparisonConfig {
            trials: 3,
            sigma_j: 0.05,
            max_attempts: 30,
            n: 6,
            ..ComparisonConfig::default()
        };
        let out = five_model_comparison(&cfg).unwrap();
        assert_eq!(out.targets_found, 0);
        assert!(out.records.is_empty());
        assert!(out.summaries.is_empty());
        assert_eq!(out.attempts_used, 30);
    }

    #[test]
    fn model_tag_labels() {
        let labels: Vec<String> = ModelTag::ALL.iter().map(|t| t.to_string()).collect();
        assert_eq!(labels, ["i", "ii", "iii", "iv", "v"]);
    }

    #[test]
    fn exact_window_ensemble_beats_best_learned_on_one_target() {
        // first unbelievable target drawn at strong couplings
        let (model, p) = (0..50)
            .find_map(|seed| {
                let m = generate_random_ising(6, 1.0 / 3.0, 0.5, Topology::Full, seed).unwrap();
                let p = m.exact_marginals().unwrap();
                match is_believable(&p, BELIEVABILITY_TOL) {
                    Ok((Believability::Unbelievable, _)) => Some((m, p)),
                    _ => None,
                }
            })
            .expect("an unbelievable target exists among the seeds");
        let cfg = ComparisonConfig {
            n: 6,
            sigma_j: 0.5,
            learning_iters: 400,
            window: 80,
            gaussian_samples: 60,
            bp_max_iters: 1500,
            ..ComparisonConfig::default()
        };
        let records = run_five_models(&model, &p, &cfg, 0, 99).unwrap();
        assert_eq!(records.len(), 5);
        let by_tag = |tag: ModelTag| {
            records
                .iter()
                .find(|r| r.model == tag)
                .expect("record present")
        };
        for r in &records {
            assert!(r.euclidean_distance >= 0.0);
            assert!((0.0..=1.0).contains(&r.bp_converged_frac));
        }
        assert!(
            by_tag(ModelTag::EbpExact).euclidean_distance
                < by_tag(ModelTag::BestLearned).euclidean_distance,
            "exact-window ensemble did not beat the best single belief"
        );
    }
}
