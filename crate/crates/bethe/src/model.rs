//! Binary pairwise (Ising) models with exact brute-force inference.
//!
//! Spins take values in {-1,+1}. The energy of a configuration is
//! `E(x) = -sum_i h_i x_i - sum_(ij) J_ij x_i x_j`, and the model
//! distribution is `exp(-E(x)) / Z`. Exhaustive enumeration provides the
//! ground-truth marginals used as learning targets throughout the crate.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{BetheError, Result};
use crate::graph::Graph;
use crate::pseudomarginal::Pseudomarginals;
use crate::seeding::rng_from_seed;

/// Hard cap on exhaustive enumeration (2^20 states).
pub const ENUMERATION_CAP: usize = 20;

/// Ising model: topology plus natural parameters `(h, J)` aligned with the
/// graph's node and canonical edge order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ModelData", into = "ModelData")]
pub struct IsingModel {
    graph: Graph,
    h: Vec<f64>,
    j: Vec<f64>,
}

/// Wire form: `{"n":..,"edges":[[i,j],..],"h":[..],"J":[..]}` with edges
/// sorted ascending lexicographically and arrays aligned.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct ModelData {
    n: usize,
    edges: Vec<(usize, usize)>,
    h: Vec<f64>,
    #[serde(rename = "J")]
    j: Vec<f64>,
}

impl TryFrom<ModelData> for IsingModel {
    type Error = BetheError;
    fn try_from(d: ModelData) -> Result<Self> {
        // The wire contract pins the edge order, so J stays aligned only if
        // the input is already canonical.
        let sorted = d.edges.windows(2).all(|w| w[0] < w[1]) && d.edges.iter().all(|&(i, j)| i < j);
        if !sorted {
            return Err(BetheError::InvalidEdges(
                "model edges must be (i,j) with i<j, sorted ascending".into(),
            ));
        }
        let graph = Graph::from_edges(d.n, d.edges)?;
        IsingModel::new(graph, d.h, d.j)
    }
}

impl From<IsingModel> for ModelData {
    fn from(m: IsingModel) -> Self {
        ModelData {
            n: m.graph.n(),
            edges: m.graph.edges().to_vec(),
            h: m.h,
            j: m.j,
        }
    }
}

/// Topology choice for random model generation.
#[derive(Debug, Clone)]
pub enum Topology {
    /// Fully connected graph.
    Full,
    /// Explicit edge list, validated and canonicalized.
    Edges(Vec<(usize, usize)>),
}

impl IsingModel {
    pub fn new(graph: Graph, h: Vec<f64>, j: Vec<f64>) -> Result<Self> {
        if h.len() != graph.n() {
            return Err(BetheError::ShapeMismatch {
                what: "h",
                expected: graph.n(),
                got: h.len(),
            });
        }
        if j.len() != graph.num_edges() {
            return Err(BetheError::ShapeMismatch {
                what: "J",
                expected: graph.num_edges(),
                got: j.len(),
            });
        }
        if !h.iter().chain(j.iter()).all(|v| v.is_finite()) {
            return Err(BetheError::OutOfDomain {
                what: "model parameters",
                value: f64::NAN,
                domain: "finite reals",
            });
        }
        Ok(IsingModel { graph, h, j })
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn h(&self) -> &[f64] {
        &self.h
    }

    pub fn j(&self) -> &[f64] {
        &self.j
    }

    /// Energy of a spin configuration (entries must be -1 or +1).
    pub fn energy(&self, spins: &[i8]) -> f64 {
        assert_eq!(spins.len(), self.graph.n(), "spin vector length mismatch");
        debug_assert!(spins.iter().all(|&s| s == 1 || s == -1));
        let mut e = 0.0;
        for (i, &hi) in self.h.iter().enumerate() {
            e -= hi * f64::from(spins[i]);
        }
        for (k, &(i, j)) in self.graph.edges().iter().enumerate() {
            e -= self.j[k] * f64::from(spins[i]) * f64::from(spins[j]);
        }
        e
    }

    /// log of the negated energy for the state encoded by `mask` bit b
    /// (bit set = spin +1).
    fn neg_energy_of_mask(&self, mask: u32) -> f64 {
        let spin = |i: usize| if mask >> i & 1 == 1 { 1.0 } else { -1.0 };
        let mut ne = 0.0;
        for (i, &hi) in self.h.iter().enumerate() {
            ne += hi * spin(i);
        }
        for (k, &(i, j)) in self.graph.edges().iter().enumerate() {
            ne += self.j[k] * spin(i) * spin(j);
        }
        ne
    }

    fn check_enumeration_cap(&self) -> Result<()> {
        if self.graph.n() > ENUMERATION_CAP {
            return Err(BetheError::CapacityExceeded {
                n: self.graph.n(),
                max: ENUMERATION_CAP,
            });
        }
        Ok(())
    }

    /// Exact node and pair marginals by summing `exp(-E)` over all states,
    /// stabilized with log-sum-exp. Refuses models above [`ENUMERATION_CAP`].
    pub fn exact_marginals(&self) -> Result<Pseudomarginals> {
        self.check_enumeration_cap()?;
        let n = self.graph.n();
        let states = 1u64 << n;
        let mut neg_energies = Vec::with_capacity(states as usize);
        let mut max_ne = f64::NEG_INFINITY;
        for mask in 0..states {
            let ne = self.neg_energy_of_mask(mask as u32);
            max_ne = max_ne.max(ne);
            neg_energies.push(ne);
        }
        let mut z = 0.0;
        let mut qi = vec![0.0; n];
        let mut qij = vec![0.0; self.graph.num_edges()];
        for (mask, ne) in neg_energies.iter().enumerate() {
            let w = (ne - max_ne).exp();
            z += w;
            for (i, q) in qi.iter_mut().enumerate() {
                if mask >> i & 1 == 1 {
                    *q += w;
                }
            }
            for (k, &(i, j)) in self.graph.edges().iter().enumerate() {
                if mask >> i & 1 == 1 && mask >> j & 1 == 1 {
                    qij[k] += w;
                }
            }
        }
        for q in &mut qi {
            *q /= z;
        }
        for q in &mut qij {
            *q /= z;
        }
        Pseudomarginals::new(self.graph.clone(), qi, qij)
    }

    /// log Z by log-sum-exp over all states. Same capacity bound as
    /// [`IsingModel::exact_marginals`].
    pub fn exact_log_partition(&self) -> Result<f64> {
        self.check_enumeration_cap()?;
        let states = 1u64 << self.graph.n();
        let mut max_ne = f64::NEG_INFINITY;
        let mut neg_energies = Vec::with_capacity(states as usize);
        for mask in 0..states {
            let ne = self.neg_energy_of_mask(mask as u32);
            max_ne = max_ne.max(ne);
            neg_energies.push(ne);
        }
        let sum: f64 = neg_energies.iter().map(|ne| (ne - max_ne).exp()).sum();
        Ok(max_ne + sum.ln())
    }

    /// The same model with nodes renamed by `perm` (node i becomes `perm[i]`).
    pub fn relabel(&self, perm: &[usize]) -> Result<IsingModel> {
        if perm.len() != self.graph.n() {
            return Err(BetheError::ShapeMismatch {
                what: "permutation",
                expected: self.graph.n(),
                got: perm.len(),
            });
        }
        let mut h = vec![0.0; self.h.len()];
        for (i, &hi) in self.h.iter().enumerate() {
            h[perm[i]] = hi;
        }
        let mut pairs: Vec<((usize, usize), f64)> = self
            .graph
            .edges()
            .iter()
            .zip(&self.j)
            .map(|(&(i, j), &jij)| {
                let (a, b) = (perm[i], perm[j]);
                ((a.min(b), a.max(b)), jij)
            })
            .collect();
        pairs.sort_by_key(|&(e, _)| e);
        let graph = Graph::from_edges(self.graph.n(), pairs.iter().map(|&(e, _)| e))?;
        let j = pairs.into_iter().map(|(_, v)| v).collect();
        IsingModel::new(graph, h, j)
    }
}

/// Random Ising model with `h_i ~ Normal(0, sigma_h^2)` and
/// `J_ij ~ Normal(0, sigma_j^2)` (the sigmas are standard deviations).
/// Deterministic in `seed`; draws h in node order, then J in edge order.
pub fn generate_random_ising(
    n: usize,
    sigma_h: f64,
    sigma_j: f64,
    topology: Topology,
    seed: u64,
) -> Result<IsingModel> {
    assert!(n >= 1, "need at least one node");
    assert!(
        sigma_h >= 0.0 && sigma_j >= 0.0,
        "standard deviations must be nonnegative"
    );
    let graph = match topology {
        Topology::Full => Graph::complete(n),
        Topology::Edges(edges) => Graph::from_edges(n, edges)?,
    };
    let mut rng = rng_from_seed(seed);
    let h = (0..n)
        .map(|_| sigma_h * rng.sample::<f64, _>(StandardNormal))
        .collect();
    let j = (0..graph.num_edges())
        .map(|_| sigma_j * rng.sample::<f64, _>(StandardNormal))
        .collect();
    IsingModel::new(graph, h, j)
}

/// Fully connected four-node model with no fields and a shared coupling `J`
/// on all six edges.
pub fn symmetric_four_node(j: f64) -> IsingModel {
    IsingModel::new(Graph::complete(4), vec![0.0; 4], vec![j; 6])
        .expect("four-node construction is valid")
}

/// Closed-form equal-spin pair probability `q_ij(+,+)` for the symmetric
/// four-node model: `rho(J) = (2 + 4/(1 + e^{2J} - e^{4J} + e^{6J}))^{-1}`.
pub fn rho_closed_form(j: f64) -> f64 {
    1.0 / (2.0 + 4.0 / (1.0 + (2.0 * j).exp() - (4.0 * j).exp() + (6.0 * j).exp()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn zero_variance_draws_give_zero_parameters() {
        let m = generate_random_ising(2, 0.0, 0.0, Topology::Full, 7).unwrap();
        assert_eq!(m.h(), &[0.0, 0.0]);
        assert_eq!(m.j(), &[0.0]);
    }

    #[test]
    fn full_topology_edge_count() {
        let m = generate_random_ising(8, 1.0, 1.0, Topology::Full, 1).unwrap();
        assert_eq!(m.graph().num_edges(), 28);
    }

    #[test]
    fn seeded_generation_is_deterministic() {
        let a = generate_random_ising(8, 1.0 / 3.0, 1.0 / 3.0, Topology::Full, 42).unwrap();
        let b = generate_random_ising(8, 1.0 / 3.0, 1.0 / 3.0, Topology::Full, 42).unwrap();
        assert_eq!(a, b);
        let c = generate_random_ising(8, 1.0 / 3.0, 1.0 / 3.0, Topology::Full, 43).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn energy_examples() {
        let zero = IsingModel::new(Graph::complete(3), vec![0.0; 3], vec![0.0; 3]).unwrap();
        assert_eq!(zero.energy(&[1, -1, 1]), 0.0);

        let m = IsingModel::new(Graph::complete(2), vec![0.0, 0.0], vec![0.5]).unwrap();
        assert_abs_diff_eq!(m.energy(&[1, 1]), -0.5);

        let m = IsingModel::new(Graph::complete(2), vec![1.0, 0.0], vec![0.5]).unwrap();
        assert_abs_diff_eq!(m.energy(&[-1, 1]), 1.5);
    }

    #[test]
    fn exact_marginals_single_field() {
        let m = IsingModel::new(Graph::from_edges(2, []).unwrap(), vec![0.5, 0.0], vec![]).unwrap();
        let q = m.exact_marginals().unwrap();
        // q_1^+ = e^{0.5} / (e^{0.5} + e^{-0.5})
        assert_abs_diff_eq!(q.qi_plus()[0], 0.731058578630005, epsilon = 1e-12);
        assert_abs_diff_eq!(q.qi_plus()[1], 0.5, epsilon = 1e-15);
    }

    #[test]
    fn independence_when_couplings_vanish() {
        let m = generate_random_ising(5, 0.7, 0.0, Topology::Full, 3).unwrap();
        let q = m.exact_marginals().unwrap();
        for (k, &(i, j)) in m.graph().edges().iter().enumerate() {
            assert_abs_diff_eq!(
                q.qij_pp()[k],
                q.qi_plus()[i] * q.qi_plus()[j],
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn four_node_pair_marginal_matches_closed_form() {
        let m = symmetric_four_node(0.5);
        let q = m.exact_marginals().unwrap();
        assert_abs_diff_eq!(q.qij_pp()[0], 0.4456957432002249, epsilon = 1e-12);
        assert_abs_diff_eq!(q.qij_pp()[0], rho_closed_form(0.5), epsilon = 1e-12);
        for &qi in q.qi_plus() {
            assert_abs_diff_eq!(qi, 0.5, epsilon = 1e-12);
        }
    }

    #[test]
    fn log_partition_examples() {
        let single = IsingModel::new(Graph::from_edges(1, []).unwrap(), vec![0.0], vec![]).unwrap();
        assert_abs_diff_eq!(
            single.exact_log_partition().unwrap(),
            std::f64::consts::LN_2,
            epsilon = 1e-14
        );

        let pair = IsingModel::new(Graph::complete(2), vec![0.0, 0.0], vec![0.5]).unwrap();
        // log(2 e^{0.5} + 2 e^{-0.5})
        assert_abs_diff_eq!(
            pair.exact_log_partition().unwrap(),
            1.506408868078168,
            epsilon = 1e-12
        );

        let frees = IsingModel::new(Graph::complete(6), vec![0.0; 6], vec![0.0; 15]).unwrap();
        assert_abs_diff_eq!(
            frees.exact_log_partition().unwrap(),
            6.0 * std::f64::consts::LN_2,
            epsilon = 1e-12
        );
    }

    #[test]
    fn enumeration_cap_is_enforced() {
        let g = Graph::from_edges(21, []).unwrap();
        let m = IsingModel::new(g, vec![0.0; 21], vec![]).unwrap();
        assert!(matches!(
            m.exact_marginals(),
            Err(BetheError::CapacityExceeded { n: 21, max: 20 })
        ));
        assert!(m.exact_log_partition().is_err());
    }

    #[test]
    fn rho_closed_form_reference_points() {
        assert_abs_diff_eq!(rho_closed_form(0.0), 0.25, epsilon = 1e-15);
        // threshold location: rho = 3/8 at J just below 0.316
        assert_abs_diff_eq!(rho_closed_form(0.316), 0.375, epsilon = 1e-4);
        assert_abs_diff_eq!(rho_closed_form(0.5), 0.4456957432002249, epsilon = 1e-15);
    }

    #[test]
    fn spin_flip_symmetry() {
        let m = generate_random_ising(6, 0.5, 0.4, Topology::Full, 11).unwrap();
        let flipped = IsingModel::new(
            m.graph().clone(),
            m.h().iter().map(|v| -v).collect(),
            m.j().to_vec(),
        )
        .unwrap();
        let q = m.exact_marginals().unwrap();
        let qf = flipped.exact_marginals().unwrap();
        for i in 0..6 {
            let mag = 2.0 * q.qi_plus()[i] - 1.0;
            let mag_f = 2.0 * qf.qi_plus()[i] - 1.0;
            assert_abs_diff_eq!(mag, -mag_f, epsilon = 1e-12);
        }
        for (k, &(i, j)) in m.graph().edges().iter().enumerate() {
            let corr = 4.0 * q.qij_pp()[k] - 2.0 * q.qi_plus()[i] - 2.0 * q.qi_plus()[j] + 1.0;
            let corr_f = 4.0 * qf.qij_pp()[k] - 2.0 * qf.qi_plus()[i] - 2.0 * qf.qi_plus()[j] + 1.0;
            assert_abs_diff_eq!(corr, corr_f, epsilon = 1e-12);
        }
    }

    #[test]
    fn log_partition_invariant_under_relabeling() {
        let m = generate_random_ising(6, 0.5, 0.5, Topology::Full, 23).unwrap();
        let perm = [3, 0, 5, 1, 4, 2];
        let relabeled = m.relabel(&perm).unwrap();
        assert_abs_diff_eq!(
            m.exact_log_partition().unwrap(),
            relabeled.exact_log_partition().unwrap(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn model_json_roundtrip_and_validation() {
        let m = generate_random_ising(4, 0.3, 0.3, Topology::Full, 9).unwrap();
        let s = serde_json::to_string(&m).unwrap();
        assert!(s.contains("\"J\""));
        let back: IsingModel = serde_json::from_str(&s).unwrap();
        assert_eq!(m, back);

        let bad = r#"{"n":2,"edges":[[1,0]],"h":[0,0],"J":[1.0]}"#;
        assert!(serde_json::from_str::<IsingModel>(bad).is_err());
    }
}
