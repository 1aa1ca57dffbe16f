//! Batch experiment protocols: believability sweeps over coupling strength,
//! the five-model comparison on unbelievable targets, and principal-component
//! projections of learning trajectories.
//!
//! Every protocol derives one seed per trial from the batch base seed, so
//! parallel and sequential execution produce identical records, and CSV
//! output is byte-stable across reruns and thread counts.

mod compare;
mod project;
mod sweep;

pub use compare::{
    five_model_comparison, run_five_models, ComparisonConfig, ComparisonOutput, ComparisonRecord,
    ModelSummary, ModelTag,
};
pub use project::{export_trajectory_projection, projection_csv, ProjectionTable};
pub use sweep::{sweep_csv, sweep_unbelievable_fraction, SweepConfig, SweepRecord};

/// Linear-interpolation quantile of ascending-sorted values.
pub(crate) fn quantile(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty());
    if sorted.len() == 1 {
        return sorted[0];
    }
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Centered principal-component analysis. Returns the top-`k` components
/// (unit vectors), the per-row coordinates in those components, and the
/// fraction of total variance each component explains. A constant input has
/// zero total variance; coordinates and fractions are then all zero.
pub(crate) fn pca(rows: &[Vec<f64>], k: usize) -> (Vec<Vec<f64>>, Vec<Vec<f64>>, Vec<f64>) {
    assert!(
        rows.len() >= 2,
        "principal components need at least two rows"
    );
    let dim = rows[0].len();
    let k = k.min(dim);
    let n = rows.len() as f64;
    let mut mean = vec![0.0; dim];
    for row in rows {
        for (m, v) in mean.iter_mut().zip(row) {
            *m += v;
        }
    }
    for m in &mut mean {
        *m /= n;
    }
    let mut cov = crate::spectral::SymMatrix::zeros(dim);
    for row in rows {
        let c: Vec<f64> = row.iter().zip(&mean).map(|(v, m)| v - m).collect();
        for i in 0..dim {
            for j in i..dim {
                cov.add_sym(i, j, c[i] * c[j] / (n - 1.0));
            }
        }
    }
    let (values, vectors, _) = crate::spectral::symmetric_eigen(&cov);
    let total: f64 = values.iter().map(|v| v.max(0.0)).sum();
    let mut components = Vec::with_capacity(k);
    let mut explained = Vec::with_capacity(k);
    for (value, vector) in values.into_iter().zip(vectors).rev().take(k) {
        explained.push(if total > 0.0 {
            value.max(0.0) / total
        } else {
            0.0
        });
        components.push(vector);
    }
    let coords = rows
        .iter()
        .map(|row| {
            components
                .iter()
                .map(|comp| {
                    row.iter()
                        .zip(&mean)
                        .zip(comp)
                        .map(|((v, m), c)| (v - m) * c)
                        .sum()
                })
                .collect()
        })
        .collect();
    (components, coords, explained)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantile_interpolates() {
        let v = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile(&v, 0.0), 1.0);
        assert_eq!(quantile(&v, 1.0), 4.0);
        assert_eq!(quantile(&v, 0.5), 2.5);
        assert_eq!(quantile(&v, 0.25), 1.75);
    }

    #[test]
    fn pca_recovers_a_line() {
        let rows: Vec<Vec<f64>> = (0..10)
            .map(|t| vec![t as f64, 2.0 * t as f64, 0.0])
            .collect();
        let (components, coords, explained) = pca(&rows, 2);
        assert!((explained[0] - 1.0).abs() < 1e-12);
        assert!(explained[1].abs() < 1e-12);
        // first component is (1,2,0)/sqrt(5)
        let c = &components[0];
        assert!((c[1] / c[0] - 2.0).abs() < 1e-9);
        // coordinates along the second component vanish
        for row in &coords {
            assert!(row[1].abs() < 1e-9);
        }
    }

    #[test]
    fn pca_constant_rows_are_all_zero() {
        let rows = vec![vec![1.0, 2.0]; 5];
        let (_, coords, explained) = pca(&rows, 2);
        assert!(coords.iter().flatten().all(|v| v.abs() < 1e-12));
        assert!(explained.iter().all(|v| *v == 0.0));
    }
}
