//! Bethe Hessian assembly, symmetric eigensolving, and believability
//! classification of target marginals.
//!
//! The Hessian of the Bethe free energy in minimal coordinates equals the
//! negated second derivative of the Bethe entropy (the energy term is linear,
//! so the model parameters drop out). Indexing is nodes first, then edges in
//! canonical order. A target is *unbelievable* when this matrix has a
//! negative eigenvalue at the target marginals: no parameters can then make
//! the target a stable fixed point of belief propagation.

use serde::Serialize;

use crate::error::{BetheError, Result};
use crate::pseudomarginal::Pseudomarginals;

/// Width of the eigenvalue band classified as "boundary".
pub const BELIEVABILITY_TOL: f64 = 1e-9;

/// Dense symmetric matrix in row-major storage.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    dim: usize,
    data: Vec<f64>,
}

impl SymMatrix {
    pub fn zeros(dim: usize) -> Self {
        SymMatrix {
            dim,
            data: vec![0.0; dim * dim],
        }
    }

    /// Wrap row-major data, rejecting asymmetry beyond `1e-12 * scale`.
    pub fn from_row_major(dim: usize, data: Vec<f64>) -> Result<Self> {
        assert_eq!(data.len(), dim * dim, "row-major data length mismatch");
        let m = SymMatrix { dim, data };
        let asym = m.max_asymmetry();
        if asym > 1e-12 * m.frobenius().max(1.0) {
            return Err(BetheError::NotSymmetric(asym));
        }
        Ok(m)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.dim + j] = v;
    }

    /// Add `v` at (i, j) and, when off-diagonal, at (j, i).
    pub fn add_sym(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.dim + j] += v;
        if i != j {
            self.data[j * self.dim + i] += v;
        }
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn max_asymmetry(&self) -> f64 {
        let mut worst = 0.0_f64;
        for i in 0..self.dim {
            for j in i + 1..self.dim {
                worst = worst.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        worst
    }

    fn off_diagonal_norm(&self) -> f64 {
        let mut s = 0.0;
        for i in 0..self.dim {
            for j in 0..self.dim {
                if i != j {
                    let v = self.get(i, j);
                    s += v * v;
                }
            }
        }
        s.sqrt()
    }

    /// Matrix-vector product.
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.dim);
        (0..self.dim)
            .map(|i| (0..self.dim).map(|j| self.get(i, j) * x[j]).sum())
            .collect()
    }
}

/// Full eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.
///
/// Returns eigenvalues in ascending order with matching unit eigenvectors
/// (each sign-normalized so its largest-magnitude component is positive),
/// plus the number of sweeps used. Converges to an off-diagonal norm below
/// `1e-13 * max(1, ||A||_F)`.
pub fn symmetric_eigen(matrix: &SymMatrix) -> (Vec<f64>, Vec<Vec<f64>>, usize) {
    let d = matrix.dim();
    let mut a = matrix.clone();
    let mut v = SymMatrix::zeros(d);
    for i in 0..d {
        v.set(i, i, 1.0);
    }
    let tol = 1e-13 * a.frobenius().max(1.0);
    let mut sweeps = 0;
    while a.off_diagonal_norm() > tol && sweeps < 100 {
        sweeps += 1;
        for p in 0..d {
            for q in p + 1..d {
                let apq = a.get(p, q);
                if apq.abs() <= f64::MIN_POSITIVE {
                    continue;
                }
                let theta = (a.get(q, q) - a.get(p, p)) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..d {
                    let akp = a.get(k, p);
                    let akq = a.get(k, q);
                    a.set(k, p, c * akp - s * akq);
                    a.set(k, q, s * akp + c * akq);
                }
                for k in 0..d {
                    let apk = a.get(p, k);
                    let aqk = a.get(q, k);
                    a.set(p, k, c * apk - s * aqk);
                    a.set(q, k, s * apk + c * aqk);
                }
                for k in 0..d {
                    let vkp = v.get(k, p);
                    let vkq = v.get(k, q);
                    v.set(k, p, c * vkp - s * vkq);
                    v.set(k, q, s * vkp + c * vkq);
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&i, &j| a.get(i, i).total_cmp(&a.get(j, j)));
    let values: Vec<f64> = order.iter().map(|&i| a.get(i, i)).collect();
    let vectors: Vec<Vec<f64>> = order
        .iter()
        .map(|&col| {
            let mut vec: Vec<f64> = (0..d).map(|row| v.get(row, col)).collect();
            let lead = vec
                .iter()
                .cloned()
                .fold(0.0_f64, |acc, x| if x.abs() > acc.abs() { x } else { acc });
            if lead < 0.0 {
                for x in &mut vec {
                    *x = -*x;
                }
            }
            let norm = vec.iter().map(|x| x * x).sum::<f64>().sqrt();
            for x in &mut vec {
                *x /= norm;
            }
            vec
        })
        .collect();
    (values, vectors, sweeps)
}

/// Hessian of the Bethe free energy at a pseudomarginal point, indexed nodes
/// first and edges second.
#[derive(Debug, Clone)]
pub struct BetheHessian {
    matrix: SymMatrix,
    n_nodes: usize,
    n_edges: usize,
}

impl BetheHessian {
    pub fn matrix(&self) -> &SymMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn n_edges(&self) -> usize {
        self.n_edges
    }
}

/// Assemble the Bethe Hessian at `q`. Writing the pair cells of edge (i,j)
/// as `pp, pm, mp, mm`, the nonzero entries are:
///
/// ```text
/// H[i][i]      = (1-d_i)(1/q_i + 1/(1-q_i)) + sum_{(ik)} (1/pm_ik + 1/mm_ik)
/// H[i][j]      = 1/mm_ij                       for neighbors j
/// H[i][(i,k)]  = -(1/pm_ik + 1/mm_ik)          (own-node down-cell)
/// H[(ij)][(ij)] = 1/pp + 1/pm + 1/mp + 1/mm
/// ```
///
/// Requires a consistent, strictly interior point; the offending coordinate
/// is reported otherwise.
pub fn bethe_hessian(q: &Pseudomarginals) -> Result<BetheHessian> {
    let report = q.check_local_consistency(crate::pseudomarginal::CONSISTENCY_TOL);
    if !report.ok {
        return Err(BetheError::Inconsistent(format!(
            "{} constraint(s) violated",
            report.violations.len()
        )));
    }
    q.ensure_interior()?;
    let graph = q.graph();
    let n = graph.n();
    let mut h = SymMatrix::zeros(graph.dim());
    for (i, &qi) in q.qi_plus().iter().enumerate() {
        let di = graph.degree(i) as f64;
        h.add_sym(i, i, (1.0 - di) * (1.0 / qi + 1.0 / (1.0 - qi)));
    }
    for (e, &(i, j)) in graph.edges().iter().enumerate() {
        let t = q.pair_table(e);
        let (rpp, rpm, rmp, rmm) = (1.0 / t.pp, 1.0 / t.pm, 1.0 / t.mp, 1.0 / t.mm);
        h.add_sym(i, j, rmm);
        h.add_sym(i, i, rpm + rmm);
        h.add_sym(j, j, rmp + rmm);
        h.add_sym(i, n + e, -(rpm + rmm));
        h.add_sym(j, n + e, -(rmp + rmm));
        h.add_sym(n + e, n + e, rpp + rpm + rmp + rmm);
    }
    Ok(BetheHessian {
        matrix: h,
        n_nodes: n,
        n_edges: graph.num_edges(),
    })
}

/// Smallest eigenpair of a symmetric matrix.
#[derive(Debug, Clone)]
pub struct SpectralResult {
    pub lambda_min: f64,
    /// Unit eigenvector for `lambda_min`.
    pub eigvec: Vec<f64>,
    /// Jacobi sweeps used.
    pub iterations: usize,
}

/// Smallest eigenvalue and unit eigenvector of a dense symmetric matrix.
/// Rejects input whose asymmetry exceeds `1e-12 * max(1, ||A||_F)`.
pub fn min_eigenpair(matrix: &SymMatrix) -> Result<SpectralResult> {
    let asym = matrix.max_asymmetry();
    if asym > 1e-12 * matrix.frobenius().max(1.0) {
        return Err(BetheError::NotSymmetric(asym));
    }
    let (values, vectors, sweeps) = symmetric_eigen(matrix);
    Ok(SpectralResult {
        lambda_min: values[0],
        eigvec: vectors.into_iter().next().expect("nonempty spectrum"),
        iterations: sweeps,
    })
}

/// Classification of a target against the Bethe Hessian spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Believability {
    /// Positive-definite Hessian: a stable BP fixed point can exist here.
    Believable,
    /// Negative eigenvalue: BP cannot converge here for any parameters.
    Unbelievable,
    /// Smallest eigenvalue within the tolerance band around zero.
    Boundary,
}

impl std::fmt::Display for Believability {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Believability::Believable => "believable",
            Believability::Unbelievable => "unbelievable",
            Believability::Boundary => "boundary",
        };
        f.write_str(s)
    }
}

/// Classify target marginals: unbelievable iff `lambda_min < -tol`,
/// believable iff `lambda_min > +tol`, boundary otherwise.
pub fn is_believable(p: &Pseudomarginals, tol: f64) -> Result<(Believability, SpectralResult)> {
    let hessian = bethe_hessian(p)?;
    let spectral = min_eigenpair(hessian.matrix())?;
    let class = if spectral.lambda_min < -tol {
        Believability::Unbelievable
    } else if spectral.lambda_min > tol {
        Believability::Believable
    } else {
        Believability::Boundary
    };
    Ok((class, spectral))
}

/// Closed-form components of the symmetric eigenvector of the four-node
/// Hessian at node value 1/2 and shared pair value `rho`: the node component
/// is `(-2 + 7 rho - 8 rho^2 + sqrt(10 - 28 rho + 81 rho^2 - 112 rho^3
/// + 64 rho^4)) / 2` and every edge component is 1 (before normalization).
/// Valid for `1/4 <= rho < 1/2`.
pub fn four_node_symmetric_eigenvector(rho: f64) -> Result<(f64, f64)> {
    if !(0.25..0.5).contains(&rho) {
        return Err(BetheError::OutOfDomain {
            what: "rho",
            value: rho,
            domain: "[0.25, 0.5)",
        });
    }
    let disc = 10.0 - 28.0 * rho + 81.0 * rho * rho - 112.0 * rho.powi(3) + 64.0 * rho.powi(4);
    let u_node = 0.5 * (-2.0 + 7.0 * rho - 8.0 * rho * rho + disc.sqrt());
    Ok((u_node, 1.0))
}
