//! Finite-difference oracles for the Bethe free-energy calculus, plus the
//! tree-exactness identities that anchor it to brute-force enumeration.

use bethe::graph::Graph;
use bethe::model::{generate_random_ising, IsingModel, Topology};
use bethe::pseudomarginal::{
    bethe_entropy, bethe_free_energy, bethe_free_energy_gradient, Pseudomarginals,
};
use bethe::seeding::rng_from_seed;
use bethe::spectral::bethe_hessian;

fn with_coordinate(q: &Pseudomarginals, k: usize, delta: f64) -> Pseudomarginals {
    let n = q.graph().n();
    let mut qi = q.qi_plus().to_vec();
    let mut qij = q.qij_pp().to_vec();
    if k < n {
        qi[k] += delta;
    } else {
        qij[k - n] += delta;
    }
    Pseudomarginals::new(q.graph().clone(), qi, qij).unwrap()
}

/// Central finite difference of the free energy along coordinate `k`.
fn fd_gradient(model: &IsingModel, q: &Pseudomarginals, step: f64) -> Vec<f64> {
    (0..q.graph().dim())
        .map(|k| {
            let fp = bethe_free_energy(model, &with_coordinate(q, k, step)).unwrap();
            let fm = bethe_free_energy(model, &with_coordinate(q, k, -step)).unwrap();
            (fp - fm) / (2.0 * step)
        })
        .collect()
}

/// Central finite difference of the gradient: column `k` of the Hessian.
fn fd_hessian_column(model: &IsingModel, q: &Pseudomarginals, k: usize, step: f64) -> Vec<f64> {
    let gp = bethe_free_energy_gradient(model, &with_coordinate(q, k, step)).unwrap();
    let gm = bethe_free_energy_gradient(model, &with_coordinate(q, k, -step)).unwrap();
    gp.iter()
        .zip(&gm)
        .map(|(a, b)| (a - b) / (2.0 * step))
        .collect()
}

fn random_test_graph(n: usize, rng: &mut impl rand::Rng) -> Graph {
    loop {
        let g = Graph::random_gnp(n, 0.6, rng);
        if g.num_edges() > 0 {
            return g;
        }
    }
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |a, x| a.max(x.abs()))
}

#[test]
fn gradient_matches_finite_differences() {
    let mut rng = rng_from_seed(1001);
    for case in 0..25 {
        let n = 3 + (case % 4);
        let graph = random_test_graph(n, &mut rng);
        let model = generate_random_ising(
            n,
            0.5,
            0.5,
            Topology::Edges(graph.edges().to_vec()),
            2000 + case as u64,
        )
        .unwrap();
        let q = Pseudomarginals::random_interior(graph, &mut rng);
        let analytic = bethe_free_energy_gradient(&model, &q).unwrap();
        let numeric = fd_gradient(&model, &q, 1e-6);
        let err: Vec<f64> = analytic.iter().zip(&numeric).map(|(a, b)| a - b).collect();
        let rel = inf_norm(&err) / inf_norm(&analytic).max(1.0);
        assert!(rel < 1e-5, "case {case}: gradient relative error {rel}");
    }
}

#[test]
fn hessian_matches_finite_differences_of_gradient() {
    let mut rng = rng_from_seed(1002);
    for case in 0..15 {
        let n = 3 + (case % 4);
        let graph = random_test_graph(n, &mut rng);
        let model = generate_random_ising(
            n,
            0.5,
            0.5,
            Topology::Edges(graph.edges().to_vec()),
            3000 + case as u64,
        )
        .unwrap();
        let q = Pseudomarginals::random_interior(graph.clone(), &mut rng);
        let hessian = bethe_hessian(&q).unwrap();
        let mut worst_abs = 0.0_f64;
        let mut scale = 0.0_f64;
        for k in 0..graph.dim() {
            let col = fd_hessian_column(&model, &q, k, 1e-5);
            for (row, fd) in col.iter().enumerate() {
                worst_abs = worst_abs.max((hessian.matrix().get(row, k) - fd).abs());
                scale = scale.max(hessian.matrix().get(row, k).abs());
            }
        }
        let rel = worst_abs / scale.max(1.0);
        assert!(rel < 1e-4, "case {case}: hessian relative error {rel}");
    }
}

#[test]
fn hessian_is_model_independent() {
    // the energy is linear in the pseudomarginals, so the Hessian cannot
    // depend on the parameters
    let mut rng = rng_from_seed(1003);
    let graph = random_test_graph(5, &mut rng);
    let q = Pseudomarginals::random_interior(graph.clone(), &mut rng);
    let h = bethe_hessian(&q).unwrap();
    for seed in [1, 2] {
        let model =
            generate_random_ising(5, 1.0, 1.0, Topology::Edges(graph.edges().to_vec()), seed)
                .unwrap();
        let fd0 = fd_hessian_column(&model, &q, 0, 1e-5);
        for (row, fd) in fd0.iter().enumerate() {
            let rel = (h.matrix().get(row, 0) - fd).abs() / h.matrix().frobenius();
            assert!(rel < 1e-6);
        }
    }
}

#[test]
fn bethe_free_energy_equals_minus_log_z_on_trees() {
    let mut rng = rng_from_seed(1004);
    for case in 0..10 {
        let n = 2 + (case % 7);
        let tree = Graph::random_tree(n, &mut rng);
        let model = generate_random_ising(
            n,
            0.6,
            0.6,
            Topology::Edges(tree.edges().to_vec()),
            4000 + case as u64,
        )
        .unwrap();
        let p = model.exact_marginals().unwrap();
        let f = bethe_free_energy(&model, &p).unwrap();
        let log_z = model.exact_log_partition().unwrap();
        assert!(
            (f + log_z).abs() < 1e-9,
            "case {case}: F = {f}, -logZ = {}",
            -log_z
        );
    }
}

#[test]
fn bethe_entropy_equals_true_entropy_on_trees() {
    // oracle: -sum_x Q(x) ln Q(x) by enumeration
    let mut rng = rng_from_seed(1005);
    for case in 0..8 {
        let n = 2 + (case % 6);
        let tree = Graph::random_tree(n, &mut rng);
        let model = generate_random_ising(
            n,
            0.5,
            0.7,
            Topology::Edges(tree.edges().to_vec()),
            5000 + case as u64,
        )
        .unwrap();
        let log_z = model.exact_log_partition().unwrap();
        let mut true_entropy = 0.0;
        for mask in 0..(1u32 << n) {
            let spins: Vec<i8> = (0..n)
                .map(|i| if mask >> i & 1 == 1 { 1 } else { -1 })
                .collect();
            let log_q = -model.energy(&spins) - log_z;
            true_entropy -= log_q.exp() * log_q;
        }
        let p = model.exact_marginals().unwrap();
        let s = bethe_entropy(&p).unwrap();
        assert!(
            (s - true_entropy).abs() < 1e-9,
            "case {case}: bethe {s} vs true {true_entropy}"
        );
    }
}

#[test]
fn pseudo_moment_matching_zeroes_the_gradient() {
    let mut rng = rng_from_seed(1006);
    for case in 0..25 {
        let n = 3 + (case % 4);
        let graph = random_test_graph(n, &mut rng);
        let p = Pseudomarginals::random_interior(graph, &mut rng);
        let model = bethe::learning::pseudo_moment_matching(&p).unwrap();
        let grad = bethe_free_energy_gradient(&model, &p).unwrap();
        assert!(
            inf_norm(&grad) < 1e-9,
            "case {case}: residual gradient {}",
            inf_norm(&grad)
        );
    }
}
