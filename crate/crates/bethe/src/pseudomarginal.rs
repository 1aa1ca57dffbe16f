//! Pseudomarginal algebra in minimal coordinates.
//!
//! A pseudomarginal assigns each node the probability `q_i^+ = q_i(x_i=+1)`
//! and each edge the probability `q_ij^{++} = q_ij(+,+)`. The remaining pair
//! cells are affine in these values:
//!
//! ```text
//! q^{+-} = q_i^+ - q^{++}      q^{-+} = q_j^+ - q^{++}
//! q^{--} = 1 - q_i^+ - q_j^+ + q^{++}
//! ```
//!
//! Local consistency is the box `0 <= q_i^+ <= 1` together with
//! `max(0, q_i^+ + q_j^+ - 1) <= q_ij^{++} <= min(q_i^+, q_j^+)`, which makes
//! all four pair cells nonnegative. This module provides the consistency
//! check, conversions to moment coordinates, the Bethe entropy, and the Bethe
//! free energy with its gradient in minimal coordinates.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{BetheError, Result};
use crate::graph::Graph;
use crate::model::IsingModel;

/// Floor applied to every probability cell before a logarithm.
pub const PROB_FLOOR: f64 = 1e-12;

/// Consistency slack accepted by entropy/free-energy evaluation. Converged
/// belief-propagation beliefs satisfy local consistency to well below this.
pub const CONSISTENCY_TOL: f64 = 1e-6;

/// Locally consistent node and pair probabilities on a shared graph.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(into = "MarginalsData")]
pub struct Pseudomarginals {
    graph: Graph,
    qi_plus: Vec<f64>,
    qij_pp: Vec<f64>,
}

/// Wire form of marginals: `{"qi_plus": [...], "qij_pp": [...]}`, aligned
/// with the owning model's node and edge order.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MarginalsData {
    pub qi_plus: Vec<f64>,
    pub qij_pp: Vec<f64>,
}

impl From<Pseudomarginals> for MarginalsData {
    fn from(q: Pseudomarginals) -> Self {
        MarginalsData {
            qi_plus: q.qi_plus,
            qij_pp: q.qij_pp,
        }
    }
}

/// Node and edge expectation values `<x_i>` and `<x_i x_j>`.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentVector {
    node: Vec<f64>,
    edge: Vec<f64>,
}

impl MomentVector {
    pub fn new(node: Vec<f64>, edge: Vec<f64>) -> Self {
        MomentVector { node, edge }
    }

    pub fn node(&self) -> &[f64] {
        &self.node
    }

    pub fn edge(&self) -> &[f64] {
        &self.edge
    }

    /// Concatenated (node, edge) vector.
    pub fn concat(&self) -> Vec<f64> {
        let mut v = self.node.clone();
        v.extend_from_slice(&self.edge);
        v
    }

    pub fn infinity_norm(&self) -> f64 {
        self.node
            .iter()
            .chain(self.edge.iter())
            .fold(0.0, |a, v| a.max(v.abs()))
    }
}

/// The four cells of a pair distribution reconstructed from minimal
/// coordinates, in (++, +-, -+, --) order.
#[derive(Debug, Clone, Copy)]
pub struct PairTable {
    pub pp: f64,
    pub pm: f64,
    pub mp: f64,
    pub mm: f64,
}

impl PairTable {
    pub fn min_cell(&self) -> f64 {
        self.pp.min(self.pm).min(self.mp).min(self.mm)
    }
}

/// One violated consistency constraint.
#[derive(Debug, Clone)]
pub struct ConsistencyViolation {
    /// Human-readable constraint label, e.g. `"edge (0,2) lower bound"`.
    pub constraint: String,
    /// How far outside the feasible interval the value sits.
    pub magnitude: f64,
}

/// Outcome of a local-consistency check.
#[derive(Debug, Clone)]
pub struct ConsistencyReport {
    pub ok: bool,
    pub violations: Vec<ConsistencyViolation>,
}

impl Pseudomarginals {
    pub fn new(graph: Graph, qi_plus: Vec<f64>, qij_pp: Vec<f64>) -> Result<Self> {
        if qi_plus.len() != graph.n() {
            return Err(BetheError::ShapeMismatch {
                what: "qi_plus",
                expected: graph.n(),
                got: qi_plus.len(),
            });
        }
        if qij_pp.len() != graph.num_edges() {
            return Err(BetheError::ShapeMismatch {
                what: "qij_pp",
                expected: graph.num_edges(),
                got: qij_pp.len(),
            });
        }
        Ok(Pseudomarginals {
            graph,
            qi_plus,
            qij_pp,
        })
    }

    /// The maximally uncertain point: all nodes 1/2, all pairs 1/4.
    pub fn uniform(graph: Graph) -> Self {
        let qi = vec![0.5; graph.n()];
        let qij = vec![0.25; graph.num_edges()];
        Pseudomarginals {
            graph,
            qi_plus: qi,
            qij_pp: qij,
        }
    }

    /// Sample a strictly interior consistent point: node values uniform on
    /// [0.2, 0.8], pair values uniform on the middle 70% of their feasible
    /// interval. Useful for randomized calculus checks.
    pub fn random_interior(graph: Graph, rng: &mut impl Rng) -> Self {
        let qi: Vec<f64> = (0..graph.n()).map(|_| rng.gen_range(0.2..0.8)).collect();
        let qij = graph
            .edges()
            .iter()
            .map(|&(i, j)| {
                let lo = (qi[i] + qi[j] - 1.0).max(0.0);
                let hi = qi[i].min(qi[j]);
                let w = hi - lo;
                rng.gen_range(lo + 0.15 * w..hi - 0.15 * w)
            })
            .collect();
        Pseudomarginals {
            graph,
            qi_plus: qi,
            qij_pp: qij,
        }
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn qi_plus(&self) -> &[f64] {
        &self.qi_plus
    }

    pub fn qij_pp(&self) -> &[f64] {
        &self.qij_pp
    }

    /// Concatenated minimal coordinates: node entries, then edge entries.
    pub fn minimal_coordinates(&self) -> Vec<f64> {
        let mut v = self.qi_plus.clone();
        v.extend_from_slice(&self.qij_pp);
        v
    }

    /// Pair cells for edge `e`.
    pub fn pair_table(&self, e: usize) -> PairTable {
        let (i, j) = self.graph.edges()[e];
        let pp = self.qij_pp[e];
        PairTable {
            pp,
            pm: self.qi_plus[i] - pp,
            mp: self.qi_plus[j] - pp,
            mm: 1.0 - self.qi_plus[i] - self.qi_plus[j] + pp,
        }
    }

    /// Check the positivity and marginalization box constraints within `tol`.
    pub fn check_local_consistency(&self, tol: f64) -> ConsistencyReport {
        let mut violations = Vec::new();
        for (i, &q) in self.qi_plus.iter().enumerate() {
            if q < -tol {
                violations.push(ConsistencyViolation {
                    constraint: format!("node {i} lower bound"),
                    magnitude: -q,
                });
            }
            if q > 1.0 + tol {
                violations.push(ConsistencyViolation {
                    constraint: format!("node {i} upper bound"),
                    magnitude: q - 1.0,
                });
            }
        }
        for (e, &(i, j)) in self.graph.edges().iter().enumerate() {
            let lo = (self.qi_plus[i] + self.qi_plus[j] - 1.0).max(0.0);
            let hi = self.qi_plus[i].min(self.qi_plus[j]);
            let q = self.qij_pp[e];
            if q < lo - tol {
                violations.push(ConsistencyViolation {
                    constraint: format!("edge ({i},{j}) lower bound"),
                    magnitude: lo - q,
                });
            }
            if q > hi + tol {
                violations.push(ConsistencyViolation {
                    constraint: format!("edge ({i},{j}) upper bound"),
                    magnitude: q - hi,
                });
            }
        }
        ConsistencyReport {
            ok: violations.is_empty(),
            violations,
        }
    }

    /// Moment coordinates: `<x_i> = 2 q_i^+ - 1` and
    /// `<x_i x_j> = 4 q_ij^{++} - 2 q_i^+ - 2 q_j^+ + 1`.
    pub fn to_moments(&self) -> MomentVector {
        let node = self.qi_plus.iter().map(|q| 2.0 * q - 1.0).collect();
        let edge = self
            .graph
            .edges()
            .iter()
            .zip(&self.qij_pp)
            .map(|(&(i, j), &qpp)| 4.0 * qpp - 2.0 * self.qi_plus[i] - 2.0 * self.qi_plus[j] + 1.0)
            .collect();
        MomentVector { node, edge }
    }

    /// Inverse of [`Pseudomarginals::to_moments`].
    pub fn from_moments(moments: &MomentVector, graph: Graph) -> Result<Self> {
        if moments.node.len() != graph.n() {
            return Err(BetheError::ShapeMismatch {
                what: "node moments",
                expected: graph.n(),
                got: moments.node.len(),
            });
        }
        if moments.edge.len() != graph.num_edges() {
            return Err(BetheError::ShapeMismatch {
                what: "edge moments",
                expected: graph.num_edges(),
                got: moments.edge.len(),
            });
        }
        let qi: Vec<f64> = moments.node.iter().map(|m| 0.5 * (1.0 + m)).collect();
        let qij = graph
            .edges()
            .iter()
            .zip(&moments.edge)
            .map(|(&(i, j), &c)| 0.25 * (1.0 + moments.node[i] + moments.node[j] + c))
            .collect();
        Ok(Pseudomarginals {
            graph,
            qi_plus: qi,
            qij_pp: qij,
        })
    }

    /// Image under the global spin flip: `q_i^+ -> 1 - q_i^+` and
    /// `q_ij^{++} -> q_ij^{--}`.
    pub fn global_spin_flip(&self) -> Self {
        let qi: Vec<f64> = self.qi_plus.iter().map(|q| 1.0 - q).collect();
        let qij = (0..self.graph.num_edges())
            .map(|e| self.pair_table(e).mm)
            .collect();
        Pseudomarginals {
            graph: self.graph.clone(),
            qi_plus: qi,
            qij_pp: qij,
        }
    }

    /// Marginals relabeled by `perm` (node i becomes `perm[i]`).
    pub fn relabel(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.graph.n() {
            return Err(BetheError::ShapeMismatch {
                what: "permutation",
                expected: self.graph.n(),
                got: perm.len(),
            });
        }
        let mut qi = vec![0.0; self.qi_plus.len()];
        for (i, &q) in self.qi_plus.iter().enumerate() {
            qi[perm[i]] = q;
        }
        let mut pairs: Vec<((usize, usize), f64)> = self
            .graph
            .edges()
            .iter()
            .zip(&self.qij_pp)
            .map(|(&(i, j), &q)| {
                let (a, b) = (perm[i], perm[j]);
                ((a.min(b), a.max(b)), q)
            })
            .collect();
        pairs.sort_by_key(|&(e, _)| e);
        let graph = Graph::from_edges(self.graph.n(), pairs.iter().map(|&(e, _)| e))?;
        let qij = pairs.into_iter().map(|(_, v)| v).collect();
        Pseudomarginals::new(graph, qi, qij)
    }

    pub(crate) fn ensure_consistent(&self) -> Result<()> {
        let report = self.check_local_consistency(CONSISTENCY_TOL);
        if !report.ok {
            let worst = report
                .violations
                .iter()
                .max_by(|a, b| a.magnitude.total_cmp(&b.magnitude))
                .expect("non-ok report has violations");
            return Err(BetheError::Inconsistent(format!(
                "{} violated by {:e} ({} constraints total)",
                worst.constraint,
                worst.magnitude,
                report.violations.len()
            )));
        }
        Ok(())
    }

    /// Error unless every probability cell is strictly above the clamp floor.
    pub(crate) fn ensure_interior(&self) -> Result<()> {
        for (i, &q) in self.qi_plus.iter().enumerate() {
            if q <= PROB_FLOOR || 1.0 - q <= PROB_FLOOR {
                return Err(BetheError::Boundary {
                    coordinate: format!("q_{i}"),
                    value: q.min(1.0 - q),
                });
            }
        }
        for (e, &(i, j)) in self.graph.edges().iter().enumerate() {
            let cells = self.pair_table(e);
            if cells.min_cell() <= PROB_FLOOR {
                return Err(BetheError::Boundary {
                    coordinate: format!("pair cell of edge ({i},{j})"),
                    value: cells.min_cell(),
                });
            }
        }
        Ok(())
    }
}

fn xlogx(p: f64) -> f64 {
    let p = p.max(PROB_FLOOR);
    p * p.ln()
}

/// Bethe entropy: pair entropies plus `(1 - d_i)`-weighted node entropies,
/// where `d_i` is the node degree. Exact on trees.
pub fn bethe_entropy(q: &Pseudomarginals) -> Result<f64> {
    q.ensure_consistent()?;
    let mut s = 0.0;
    for e in 0..q.graph().num_edges() {
        let t = q.pair_table(e);
        s -= xlogx(t.pp) + xlogx(t.pm) + xlogx(t.mp) + xlogx(t.mm);
    }
    for (i, &qi) in q.qi_plus().iter().enumerate() {
        let si = -(xlogx(qi) + xlogx(1.0 - qi));
        s += (1.0 - q.graph().degree(i) as f64) * si;
    }
    Ok(s)
}

/// Average energy `U = -sum_i h_i <x_i> - sum_(ij) J_ij <x_i x_j>`.
pub fn average_energy(model: &IsingModel, q: &Pseudomarginals) -> Result<f64> {
    if model.graph() != q.graph() {
        return Err(BetheError::GraphMismatch);
    }
    q.ensure_consistent()?;
    let m = q.to_moments();
    let u_node: f64 = model.h().iter().zip(m.node()).map(|(h, x)| h * x).sum();
    let u_edge: f64 = model.j().iter().zip(m.edge()).map(|(j, c)| j * c).sum();
    Ok(-u_node - u_edge)
}

/// Bethe free energy `U - S`.
pub fn bethe_free_energy(model: &IsingModel, q: &Pseudomarginals) -> Result<f64> {
    Ok(average_energy(model, q)? - bethe_entropy(q)?)
}

/// Gradient of the Bethe free energy in minimal coordinates (node entries
/// first, then edges):
///
/// ```text
/// dF/dq_ij^{++} = -4 J_ij + ln( q^{++} q^{--} / (q^{+-} q^{-+}) )
/// dF/dq_i^+     = -2 h_i + 2 sum_{j in N_i} J_ij
///                 + (1 - d_i) ln(q_i^+ / q_i^-)
///                 + sum_{j in N_i} ln( q^{+-}_{ij} / q^{--}_{ij} )
/// ```
///
/// where `q^{+-}_{ij}` is the cell with node i up and its neighbor down.
/// Requires a strictly interior point.
pub fn bethe_free_energy_gradient(model: &IsingModel, q: &Pseudomarginals) -> Result<Vec<f64>> {
    if model.graph() != q.graph() {
        return Err(BetheError::GraphMismatch);
    }
    q.ensure_consistent()?;
    q.ensure_interior()?;
    let graph = q.graph();
    let mut grad = vec![0.0; graph.dim()];
    for (i, &qi) in q.qi_plus().iter().enumerate() {
        let di = graph.degree(i) as f64;
        let mut g = -2.0 * model.h()[i] + (1.0 - di) * (qi / (1.0 - qi)).ln();
        for inc in graph.incidences(i) {
            g += 2.0 * model.j()[inc.edge];
            let t = q.pair_table(inc.edge);
            // cell with node i up, neighbor down
            let own_down = if graph.edges()[inc.edge].0 == i {
                t.pm
            } else {
                t.mp
            };
            g += (own_down / t.mm).ln();
        }
        grad[i] = g;
    }
    let n = graph.n();
    for e in 0..graph.num_edges() {
        let t = q.pair_table(e);
        grad[n + e] = -4.0 * model.j()[e] + (t.pp * t.mm / (t.pm * t.mp)).ln();
    }
    Ok(grad)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{generate_random_ising, IsingModel, Topology};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn single_edge_graph() -> Graph {
        Graph::complete(2)
    }

    #[test]
    fn uniform_is_consistent() {
        let q = Pseudomarginals::uniform(Graph::complete(4));
        assert!(q.check_local_consistency(0.0).ok);
    }

    #[test]
    fn box_constraint_violation_detected() {
        let q = Pseudomarginals::new(single_edge_graph(), vec![0.9, 0.9], vec![0.5]).unwrap();
        let report = q.check_local_consistency(1e-9);
        assert!(!report.ok);
        assert_eq!(report.violations.len(), 1);
        assert!(report.violations[0].constraint.contains("lower bound"));
        assert_abs_diff_eq!(report.violations[0].magnitude, 0.3, epsilon = 1e-12);
    }

    #[test]
    fn exact_marginals_are_consistent() {
        for seed in 0..5 {
            let m = generate_random_ising(6, 0.5, 0.5, Topology::Full, seed).unwrap();
            let q = m.exact_marginals().unwrap();
            assert!(q.check_local_consistency(1e-12).ok);
        }
        let big = generate_random_ising(12, 0.5, 0.5, Topology::Full, 60).unwrap();
        assert!(
            big.exact_marginals()
                .unwrap()
                .check_local_consistency(1e-12)
                .ok
        );
    }

    #[test]
    fn uniform_moments_vanish() {
        let q = Pseudomarginals::uniform(Graph::complete(3));
        let m = q.to_moments();
        assert!(m.node().iter().all(|&x| x == 0.0));
        assert!(m.edge().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn correlated_pair_moment() {
        let rho = crate::model::rho_closed_form(0.5);
        let q = Pseudomarginals::new(single_edge_graph(), vec![0.5, 0.5], vec![rho]).unwrap();
        assert_abs_diff_eq!(q.to_moments().edge()[0], 4.0 * rho - 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(
            q.to_moments().edge()[0],
            0.7827829728008997,
            epsilon = 1e-12
        );
    }

    #[test]
    fn entropy_single_edge_uniform() {
        let q = Pseudomarginals::uniform(single_edge_graph());
        assert_abs_diff_eq!(bethe_entropy(&q).unwrap(), 4.0_f64.ln(), epsilon = 1e-12);
    }

    #[test]
    fn entropy_isolated_node() {
        let g = Graph::from_edges(1, []).unwrap();
        let p = 0.731058578630005_f64;
        let q = Pseudomarginals::new(g, vec![p], vec![]).unwrap();
        let expected = -(p * p.ln() + (1.0 - p) * (1.0 - p).ln());
        assert_abs_diff_eq!(bethe_entropy(&q).unwrap(), expected, epsilon = 1e-12);
        assert_abs_diff_eq!(
            bethe_entropy(&q).unwrap(),
            0.5822031088882178,
            epsilon = 1e-12
        );
    }

    #[test]
    fn entropy_rejects_inconsistent_input() {
        let q = Pseudomarginals::new(single_edge_graph(), vec![0.9, 0.9], vec![0.5]).unwrap();
        assert!(matches!(
            bethe_entropy(&q),
            Err(BetheError::Inconsistent(_))
        ));
    }

    #[test]
    fn average_energy_examples() {
        let zero = IsingModel::new(Graph::complete(3), vec![0.0; 3], vec![0.0; 3]).unwrap();
        let mut rng = crate::seeding::rng_from_seed(2);
        let q = Pseudomarginals::random_interior(Graph::complete(3), &mut rng);
        assert_abs_diff_eq!(average_energy(&zero, &q).unwrap(), 0.0, epsilon = 1e-15);

        let m = generate_random_ising(4, 0.8, 0.8, Topology::Full, 3).unwrap();
        let uniform = Pseudomarginals::uniform(m.graph().clone());
        assert_abs_diff_eq!(average_energy(&m, &uniform).unwrap(), 0.0, epsilon = 1e-15);

        // two spins coupled by J: <x1 x2> = tanh J
        let pair = IsingModel::new(single_edge_graph(), vec![0.0, 0.0], vec![0.5]).unwrap();
        let exact = pair.exact_marginals().unwrap();
        assert_abs_diff_eq!(
            average_energy(&pair, &exact).unwrap(),
            -0.23105857863000487,
            epsilon = 1e-12
        );
    }

    #[test]
    fn free_energy_uniform_zero_model() {
        let g = Graph::complete(4);
        let m = IsingModel::new(g.clone(), vec![0.0; 4], vec![0.0; 6]).unwrap();
        let q = Pseudomarginals::uniform(g.clone());
        let expected = -(6.0 * 4.0_f64.ln()
            + (0..4)
                .map(|i| (1.0 - g.degree(i) as f64) * 2.0_f64.ln())
                .sum::<f64>());
        assert_abs_diff_eq!(
            bethe_free_energy(&m, &q).unwrap(),
            expected,
            epsilon = 1e-12
        );
    }

    #[test]
    fn free_energy_is_minus_log_z_on_trees() {
        let pair = IsingModel::new(single_edge_graph(), vec![0.0, 0.0], vec![0.5]).unwrap();
        let exact = pair.exact_marginals().unwrap();
        let f = bethe_free_energy(&pair, &exact).unwrap();
        assert_abs_diff_eq!(f, -1.506408868078168, epsilon = 1e-12);
        assert_abs_diff_eq!(f, -pair.exact_log_partition().unwrap(), epsilon = 1e-12);

        // moving toward the exact point lowers the free energy
        let uniform = Pseudomarginals::uniform(pair.graph().clone());
        assert!(bethe_free_energy(&pair, &uniform).unwrap() > f);
    }

    #[test]
    fn gradient_vanishes_at_full_symmetry() {
        let g = Graph::complete(4);
        let m = IsingModel::new(g.clone(), vec![0.0; 4], vec![0.0; 6]).unwrap();
        let q = Pseudomarginals::uniform(g);
        for v in bethe_free_energy_gradient(&m, &q).unwrap() {
            assert_abs_diff_eq!(v, 0.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn gradient_vanishes_at_tree_truth() {
        let pair = IsingModel::new(single_edge_graph(), vec![0.0, 0.0], vec![0.5]).unwrap();
        let exact = pair.exact_marginals().unwrap();
        for v in bethe_free_energy_gradient(&pair, &exact).unwrap() {
            assert_abs_diff_eq!(v, 0.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn gradient_rejects_boundary_points() {
        let q = Pseudomarginals::new(single_edge_graph(), vec![0.5, 0.5], vec![0.5]).unwrap();
        let m = IsingModel::new(single_edge_graph(), vec![0.0, 0.0], vec![0.0]).unwrap();
        assert!(matches!(
            bethe_free_energy_gradient(&m, &q),
            Err(BetheError::Boundary { .. })
        ));
    }

    #[test]
    fn graph_mismatch_is_rejected() {
        let m = IsingModel::new(Graph::complete(3), vec![0.0; 3], vec![0.0; 3]).unwrap();
        let q = Pseudomarginals::uniform(Graph::complete(4));
        assert!(matches!(
            average_energy(&m, &q),
            Err(BetheError::GraphMismatch)
        ));
    }

    proptest! {
        #[test]
        fn moment_roundtrip_is_identity(qi in 0.01f64..0.99, qj in 0.01f64..0.99, t in 0.0f64..1.0) {
            let lo = (qi + qj - 1.0).max(0.0);
            let hi = qi.min(qj);
            let qpp = lo + t * (hi - lo);
            let g = Graph::complete(2);
            let q = Pseudomarginals::new(g.clone(), vec![qi, qj], vec![qpp]).unwrap();
            let back = Pseudomarginals::from_moments(&q.to_moments(), g).unwrap();
            prop_assert!((back.qi_plus()[0] - qi).abs() < 1e-15);
            prop_assert!((back.qi_plus()[1] - qj).abs() < 1e-15);
            prop_assert!((back.qij_pp()[0] - qpp).abs() < 1e-15);
        }

        #[test]
        fn entropy_invariant_under_spin_flip(qi in 0.05f64..0.95, qj in 0.05f64..0.95, t in 0.05f64..0.95) {
            let lo = (qi + qj - 1.0).max(0.0);
            let hi = qi.min(qj);
            let qpp = lo + t * (hi - lo);
            let g = Graph::complete(2);
            let q = Pseudomarginals::new(g, vec![qi, qj], vec![qpp]).unwrap();
            let s = bethe_entropy(&q).unwrap();
            let s_flipped = bethe_entropy(&q.global_spin_flip()).unwrap();
            prop_assert!((s - s_flipped).abs() < 1e-12);
        }
    }

    #[test]
    fn random_interior_is_strictly_interior() {
        let mut rng = crate::seeding::rng_from_seed(9);
        for _ in 0..50 {
            let q = Pseudomarginals::random_interior(Graph::complete(5), &mut rng);
            assert!(q.check_local_consistency(0.0).ok);
            assert!(q.ensure_interior().is_ok());
        }
    }
}
