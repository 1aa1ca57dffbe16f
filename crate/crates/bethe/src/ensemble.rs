//! Ensemble belief propagation: averaging BP fixed points over the learned
//! parameter trajectory, or over Gaussian-sampled parameters matched to its
//! first- and second-order statistics.
//!
//! The averaging happens in belief space, never in parameter space; running
//! BP once at the mean parameters is a different (and much worse) estimator.

use rand_distr::StandardNormal;

use crate::bp::{run_bp, BpOptions, MessageInit};
use crate::error::{BetheError, Result};
use crate::graph::Graph;
use crate::learning::LearningTrajectory;
use crate::model::IsingModel;
use crate::pseudomarginal::Pseudomarginals;
use crate::seeding::rng_from_seed;
use crate::spectral::{symmetric_eigen, SymMatrix};
use rand::Rng;

/// Coordinate-wise mean of pseudomarginals on a shared graph. Averaging in
/// minimal coordinates equals averaging in moment coordinates because the
/// map between them is affine.
pub fn average_beliefs(items: &[Pseudomarginals]) -> Result<Pseudomarginals> {
    let first = items.first().ok_or(BetheError::EmptyInput("belief list"))?;
    let graph = first.graph().clone();
    let mut qi = vec![0.0; graph.n()];
    let mut qij = vec![0.0; graph.num_edges()];
    for q in items {
        if q.graph() != &graph {
            return Err(BetheError::GraphMismatch);
        }
        for (acc, v) in qi.iter_mut().zip(q.qi_plus()) {
            *acc += v;
        }
        for (acc, v) in qij.iter_mut().zip(q.qij_pp()) {
            *acc += v;
        }
    }
    let k = items.len() as f64;
    for v in qi.iter_mut().chain(qij.iter_mut()) {
        *v /= k;
    }
    Pseudomarginals::new(graph, qi, qij)
}

/// Result of averaging the recorded beliefs of a trajectory window.
#[derive(Debug, Clone)]
pub struct EbpExact {
    pub beliefs: Pseudomarginals,
    /// Window iterations skipped because their BP run had not converged.
    pub excluded: usize,
    /// Converged iterations that entered the average.
    pub used: usize,
}

/// Average the beliefs recorded in the final `last` iterations of a learning
/// trajectory, using converged iterations only.
pub fn ebp_exact(trajectory: &LearningTrajectory, last: usize) -> Result<EbpExact> {
    assert!(last >= 1, "window must be nonempty");
    if last > trajectory.len() {
        return Err(BetheError::WindowTooLarge {
            window: last,
            len: trajectory.len(),
        });
    }
    let start = trajectory.len() - last;
    let converged: Vec<Pseudomarginals> = (start..trajectory.len())
        .filter(|&idx| trajectory.records()[idx].converged)
        .map(|idx| trajectory.beliefs(idx))
        .collect();
    if converged.is_empty() {
        return Err(BetheError::NoConvergedIterations);
    }
    Ok(EbpExact {
        beliefs: average_beliefs(&converged)?,
        excluded: last - converged.len(),
        used: converged.len(),
    })
}

/// One retained principal component of the parameter covariance.
#[derive(Debug, Clone)]
pub struct EnsembleFactor {
    pub eigenvalue: f64,
    pub vector: Vec<f64>,
}

/// Gaussian parameter ensemble: mean, full covariance, and the retained
/// low-rank factors. Parameters are concatenated as (h, J) in graph order.
#[derive(Debug, Clone)]
pub struct EnsembleSpec {
    pub theta_mean: Vec<f64>,
    pub covariance: SymMatrix,
    pub factors: Vec<EnsembleFactor>,
    /// Fraction of total variance captured by the retained factors.
    pub variance_fraction_retained: f64,
}

impl EnsembleSpec {
    pub fn rank(&self) -> usize {
        self.factors.len()
    }
}

/// Fit a Gaussian ensemble to the parameters of the final `last` iterations:
/// sample mean, unbiased sample covariance, and the smallest set of leading
/// covariance eigenpairs reaching `variance_fraction`, capped at `max_rank`.
/// A constant window yields rank 0.
pub fn fit_gaussian(
    trajectory: &LearningTrajectory,
    last: usize,
    variance_fraction: f64,
    max_rank: usize,
) -> Result<EnsembleSpec> {
    assert!(last >= 2, "covariance needs at least two samples");
    assert!(
        (0.0..=1.0).contains(&variance_fraction),
        "variance fraction must lie in [0, 1]"
    );
    if last > trajectory.len() {
        return Err(BetheError::WindowTooLarge {
            window: last,
            len: trajectory.len(),
        });
    }
    let start = trajectory.len() - last;
    let thetas: Vec<Vec<f64>> = trajectory.records()[start..]
        .iter()
        .map(|r| r.theta())
        .collect();
    let dim = trajectory.graph().dim();
    let mut mean = vec![0.0; dim];
    for t in &thetas {
        for (acc, v) in mean.iter_mut().zip(t) {
            *acc += v;
        }
    }
    for v in &mut mean {
        *v /= last as f64;
    }
    let mut cov = SymMatrix::zeros(dim);
    for t in &thetas {
        let centered: Vec<f64> = t.iter().zip(&mean).map(|(v, m)| v - m).collect();
        for i in 0..dim {
            for j in i..dim {
                cov.add_sym(i, j, centered[i] * centered[j] / (last as f64 - 1.0));
            }
        }
    }
    let (values, vectors, _) = symmetric_eigen(&cov);
    // descending order; clamp eigensolver noise around zero and drop
    // directions whose variance is centering round-off rather than signal
    let noise_floor = 1e-24 * mean.iter().map(|v| v * v).sum::<f64>().max(1.0);
    let mut pairs: Vec<(f64, Vec<f64>)> = values
        .into_iter()
        .zip(vectors)
        .rev()
        .map(|(v, vec)| (v.max(0.0), vec))
        .collect();
    pairs.retain(|(v, _)| *v > noise_floor);
    let total: f64 = pairs.iter().map(|(v, _)| v).sum();
    let mut factors = Vec::new();
    let mut captured = 0.0;
    for (value, vector) in pairs {
        if factors.len() >= max_rank || (total > 0.0 && captured >= variance_fraction * total) {
            break;
        }
        captured += value;
        factors.push(EnsembleFactor {
            eigenvalue: value,
            vector,
        });
    }
    Ok(EnsembleSpec {
        theta_mean: mean,
        covariance: cov,
        factors,
        variance_fraction_retained: if total > 0.0 { captured / total } else { 0.0 },
    })
}

/// Per-sample outcome of a Gaussian-ensemble run.
#[derive(Debug, Clone, Copy)]
pub struct SampleDiagnostics {
    pub converged: bool,
    pub iterations: usize,
}

/// Gaussian-ensemble BP output.
#[derive(Debug, Clone)]
pub struct EbpGaussian {
    /// Average beliefs over the converged samples.
    pub beliefs: Pseudomarginals,
    pub n_converged: usize,
    pub per_sample: Vec<SampleDiagnostics>,
}

/// Draw `n_samples` parameter vectors `theta = mean + sum_r sqrt(lambda_r)
/// z_r v_r` with standard-normal `z`, run BP from uniform messages at each,
/// and average the beliefs of the converged samples. Deterministic in
/// `seed`; the reduction runs in sample order.
pub fn ebp_gaussian(
    spec: &EnsembleSpec,
    graph: &Graph,
    n_samples: usize,
    seed: u64,
    bp: &BpOptions,
) -> Result<EbpGaussian> {
    assert!(n_samples >= 1, "need at least one sample");
    if spec.theta_mean.len() != graph.dim() {
        return Err(BetheError::ShapeMismatch {
            what: "theta_mean",
            expected: graph.dim(),
            got: spec.theta_mean.len(),
        });
    }
    let mut rng = rng_from_seed(seed);
    let scales: Vec<f64> = spec.factors.iter().map(|f| f.eigenvalue.sqrt()).collect();
    let mut per_sample = Vec::with_capacity(n_samples);
    let mut sum_qi = vec![0.0; graph.n()];
    let mut sum_qij = vec![0.0; graph.num_edges()];
    let mut n_converged = 0usize;
    for _ in 0..n_samples {
        let mut theta = spec.theta_mean.clone();
        for (factor, &scale) in spec.factors.iter().zip(&scales) {
            let z: f64 = rng.sample(StandardNormal);
            for (t, v) in theta.iter_mut().zip(&factor.vector) {
                *t += scale * z * v;
            }
        }
        let (h, j) = theta.split_at(graph.n());
        let model = IsingModel::new(graph.clone(), h.to_vec(), j.to_vec())?;
        let options = BpOptions {
            init: MessageInit::Uniform,
            ..bp.clone()
        };
        let result = run_bp(&model, &options)?;
        per_sample.push(SampleDiagnostics {
            converged: result.converged,
            iterations: result.iterations,
        });
        if result.converged {
            n_converged += 1;
            for (acc, v) in sum_qi.iter_mut().zip(result.beliefs.qi_plus()) {
                *acc += v;
            }
            for (acc, v) in sum_qij.iter_mut().zip(result.beliefs.qij_pp()) {
                *acc += v;
            }
        }
    }
    if n_converged == 0 {
        return Err(BetheError::NoConvergedIterations);
    }
    for v in sum_qi.iter_mut().chain(sum_qij.iter_mut()) {
        *v /= n_converged as f64;
    }
    Ok(EbpGaussian {
        beliefs: Pseudomarginals::new(graph.clone(), sum_qi, sum_qij)?,
        n_converged,
        per_sample,
    })
}
