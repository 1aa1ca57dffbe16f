//! Distance measures between target marginals and beliefs.

use serde::Serialize;

use crate::error::{BetheError, Result};
use crate::model::IsingModel;
use crate::pseudomarginal::{bethe_free_energy, Pseudomarginals};

/// The two performance measures used throughout the experiments.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Metrics {
    /// Bethe divergence `F_beta[p] - F_beta[b]`, evaluated with the given
    /// model's parameters.
    pub bethe_divergence: f64,
    /// Euclidean norm of the difference in minimal coordinates.
    pub euclidean_distance: f64,
}

/// Compare beliefs `b` against target `p` under `model`'s parameters.
pub fn metrics(p: &Pseudomarginals, b: &Pseudomarginals, model: &IsingModel) -> Result<Metrics> {
    if p.graph() != b.graph() || p.graph() != model.graph() {
        return Err(BetheError::GraphMismatch);
    }
    let bethe_divergence = bethe_free_energy(model, p)? - bethe_free_energy(model, b)?;
    let euclidean_distance = p
        .minimal_coordinates()
        .iter()
        .zip(b.minimal_coordinates())
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt();
    Ok(Metrics {
        bethe_divergence,
        euclidean_distance,
    })
}
