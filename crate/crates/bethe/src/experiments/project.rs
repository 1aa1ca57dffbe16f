//! Principal-component projection of learning trajectories, for plotting
//! limit cycles in parameter and belief space.

use std::fmt::Write as _;

use crate::error::Result;
use crate::learning::LearningTrajectory;

/// Plot-ready projection: per-iteration coordinates of the parameter and
/// belief trajectories in their own top principal components.
#[derive(Debug, Clone)]
pub struct ProjectionTable {
    pub k: usize,
    pub iters: Vec<usize>,
    pub theta_coords: Vec<Vec<f64>>,
    pub belief_coords: Vec<Vec<f64>>,
    pub theta_components: Vec<Vec<f64>>,
    pub belief_components: Vec<Vec<f64>>,
    pub theta_variance_explained: Vec<f64>,
    pub belief_variance_explained: Vec<f64>,
}

/// Centered PCA of the trajectory's parameters and beliefs, separately,
/// keeping `k` components each. Needs at least two iterations.
pub fn export_trajectory_projection(
    trajectory: &LearningTrajectory,
    k: usize,
) -> Result<ProjectionTable> {
    assert!(
        trajectory.len() >= 2,
        "projection needs at least two iterations"
    );
    let thetas: Vec<Vec<f64>> = trajectory.records().iter().map(|r| r.theta()).collect();
    let beliefs: Vec<Vec<f64>> = trajectory
        .records()
        .iter()
        .map(|r| r.belief_coordinates())
        .collect();
    let (theta_components, theta_coords, theta_variance_explained) = super::pca(&thetas, k);
    let (belief_components, belief_coords, belief_variance_explained) = super::pca(&beliefs, k);
    Ok(ProjectionTable {
        k: theta_components.len(),
        iters: trajectory.records().iter().map(|r| r.iter).collect(),
        theta_coords,
        belief_coords,
        theta_components,
        belief_components,
        theta_variance_explained,
        belief_variance_explained,
    })
}

fn join(values: &[f64]) -> String {
    values
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(";")
}

/// Render the projection as CSV. Component vectors and variance fractions
/// ride along as `#` header lines so the row section stays plot-ready.
pub fn projection_csv(table: &ProjectionTable) -> String {
    let mut out = String::new();
    writeln!(out, "# trajectory-projection k={}", table.k).unwrap();
    writeln!(
        out,
        "# theta_variance_explained={}",
        join(&table.theta_variance_explained)
    )
    .unwrap();
    writeln!(
        out,
        "# belief_variance_explained={}",
        join(&table.belief_variance_explained)
    )
    .unwrap();
    for (idx, c) in table.theta_components.iter().enumerate() {
        writeln!(out, "# theta_component_{}={}", idx + 1, join(c)).unwrap();
    }
    for (idx, c) in table.belief_components.iter().enumerate() {
        writeln!(out, "# belief_component_{}={}", idx + 1, join(c)).unwrap();
    }
    let mut header = String::from("iter");
    for i in 1..=table.k {
        write!(header, ",theta_pc{i}").unwrap();
    }
    for i in 1..=table.k {
        write!(header, ",belief_pc{i}").unwrap();
    }
    writeln!(out, "{header}").unwrap();
    for (row, iter) in table.iters.iter().enumerate() {
        let mut line = iter.to_string();
        for v in &table.theta_coords[row] {
            write!(line, ",{v}").unwrap();
        }
        for v in &table.belief_coords[row] {
            write!(line, ",{v}").unwrap();
        }
        writeln!(out, "{line}").unwrap();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learning::{bethe_wake_sleep, ThetaInit, WakeSleepOptions};
    use crate::model::{generate_random_ising, Topology};

    #[test]
    fn variance_fractions_sum_to_at_most_one() {
        let m = generate_random_ising(4, 0.3, 0.3, Topology::Full, 51).unwrap();
        let p = m.exact_marginals().unwrap();
        let opts = WakeSleepOptions {
            iters: 30,
            theta_init: ThetaInit::Zeros,
            ..WakeSleepOptions::default()
        };
        let traj = bethe_wake_sleep(&p, &opts).unwrap();
        let table = export_trajectory_projection(&traj, 2).unwrap();
        let sum: f64 = table.theta_variance_explained.iter().sum();
        assert!(sum <= 1.0 + 1e-12);
        let sum_b: f64 = table.belief_variance_explained.iter().sum();
        assert!(sum_b <= 1.0 + 1e-12);
        let csv = projection_csv(&table);
        assert!(csv.contains("iter,theta_pc1,theta_pc2,belief_pc1,belief_pc2"));
        assert_eq!(csv.lines().filter(|l| !l.starts_with('#')).count(), 31);
    }

    #[test]
    fn constant_trajectory_projects_to_zero() {
        // zero-iteration updates: a believable target already matched
        let m = generate_random_ising(3, 0.2, 0.1, Topology::Full, 52).unwrap();
        let p = m.exact_marginals().unwrap();
        let opts = WakeSleepOptions {
            iters: 5,
            epsilon: 1e-9,
            ..WakeSleepOptions::default()
        };
        let traj = bethe_wake_sleep(&p, &opts).unwrap();
        let table = export_trajectory_projection(&traj, 2).unwrap();
        for row in &table.theta_coords {
            for v in row {
                assert!(v.abs() < 1e-6, "theta coordinate {v} not ~0");
            }
        }
    }
}
