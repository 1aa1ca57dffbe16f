//! Fraction of random targets that are unbelievable, as a function of the
//! coupling spread.

use rayon::prelude::*;
use std::fmt::Write as _;

use crate::model::{generate_random_ising, Topology};
use crate::seeding::{derive_seed, RNG_ALGORITHM};
use crate::spectral::{is_believable, Believability, BELIEVABILITY_TOL};

#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub n: usize,
    pub sigma_h: f64,
    pub sigma_j_grid: Vec<f64>,
    pub trials: usize,
    pub base_seed: u64,
    pub believability_tol: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            n: 8,
            sigma_h: 1.0 / 3.0,
            sigma_j_grid: (0..=10).map(|k| 0.05 * k as f64).collect(),
            trials: 500,
            base_seed: 1,
            believability_tol: BELIEVABILITY_TOL,
        }
    }
}

/// One grid point of the sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRecord {
    pub sigma_j: f64,
    pub trials: usize,
    pub n_unbelievable: usize,
    pub n_boundary: usize,
    pub fraction: f64,
}

fn classify_trial(cfg: &SweepConfig, sigma_j: f64, seed: u64) -> Believability {
    let model = generate_random_ising(cfg.n, cfg.sigma_h, sigma_j, Topology::Full, seed)
        .expect("full topology generation cannot fail");
    let p = model
        .exact_marginals()
        .expect("sweep node counts stay within the enumeration cap");
    match is_believable(&p, cfg.believability_tol) {
        Ok((class, _)) => class,
        // a target numerically on the polytope boundary cannot be classified
        Err(_) => Believability::Boundary,
    }
}

/// For each grid sigma, draw `trials` random fully connected models, compute
/// their exact marginals, and count how many are unbelievable. Boundary
/// verdicts count as believable but are tallied separately. Trial seeds are
/// derived from `(base_seed, grid_index * trials + trial_index)`.
pub fn sweep_unbelievable_fraction(cfg: &SweepConfig) -> Vec<SweepRecord> {
    assert!(!cfg.sigma_j_grid.is_empty(), "grid must be nonempty");
    cfg.sigma_j_grid
        .iter()
        .enumerate()
        .map(|(g, &sigma_j)| {
            let classes: Vec<Believability> = (0..cfg.trials)
                .into_par_iter()
                .map(|t| {
                    let seed = derive_seed(cfg.base_seed, (g * cfg.trials + t) as u64);
                    classify_trial(cfg, sigma_j, seed)
                })
                .collect();
            let n_unbelievable = classes
                .iter()
                .filter(|c| **c == Believability::Unbelievable)
                .count();
            let n_boundary = classes
                .iter()
                .filter(|c| **c == Believability::Boundary)
                .count();
            SweepRecord {
                sigma_j,
                trials: cfg.trials,
                n_unbelievable,
                n_boundary,
                fraction: n_unbelievable as f64 / cfg.trials as f64,
            }
        })
        .collect()
}

/// Render sweep records as CSV with a reproducibility header.
pub fn sweep_csv(cfg: &SweepConfig, records: &[SweepRecord]) -> String {
    let mut out = String::new();
    writeln!(out, "# sweep-fraction").unwrap();
    writeln!(
        out,
        "# rng={} base_seed={} n={} sigma_h={} trials={} believability_tol={}",
        RNG_ALGORITHM, cfg.base_seed, cfg.n, cfg.sigma_h, cfg.trials, cfg.believability_tol
    )
    .unwrap();
    writeln!(out, "sigma_j,trials,n_unbelievable,n_boundary,fraction").unwrap();
    for r in records {
        writeln!(
            out,
            "{},{},{},{},{}",
            r.sigma_j, r.trials, r.n_unbelievable, r.n_boundary, r.fraction
        )
        .unwrap();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_coupling_targets_are_believable() {
        let cfg = SweepConfig {
            sigma_j_grid: vec![0.0],
            trials: 40,
            n: 5,
            ..SweepConfig::default()
        };
        let records = sweep_unbelievable_fraction(&cfg);
        assert_eq!(records[0].n_unbelievable, 0);
        assert_eq!(records[0].fraction, 0.0);
    }

    #[test]
    fn strong_couplings_make_most_targets_unbelievable() {
        let cfg = SweepConfig {
            sigma_j_grid: vec![0.3],
            trials: 150,
            base_seed: 3,
            ..SweepConfig::default()
        };
        let records = sweep_unbelievable_fraction(&cfg);
        assert!(
            records[0].fraction > 0.5,
            "fraction at sigma_j=0.3 only {}",
            records[0].fraction
        );
    }

    #[test]
    fn csv_is_stable_across_runs() {
        let cfg = SweepConfig {
            sigma_j_grid: vec![0.0, 0.3],
            trials: 25,
            n: 5,
            ..SweepConfig::default()
        };
        let a = sweep_csv(&cfg, &sweep_unbelievable_fraction(&cfg));
        let b = sweep_csv(&cfg, &sweep_unbelievable_fraction(&cfg));
        assert_eq!(a, b);
        assert!(a.starts_with("# sweep-fraction"));
        assert!(a.contains("sigma_j,trials,n_unbelievable,n_boundary,fraction"));
    }
}
