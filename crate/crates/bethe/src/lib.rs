//! Loopy belief propagation, Bethe free-energy analysis, and ensemble BP for
//! binary pairwise graphical models.
//!
//! The crate answers three questions about a set of target marginals on an
//! Ising-type model:
//!
//! 1. **Can belief propagation reach them at all?** The Bethe Hessian at the
//!    target classifies marginals as believable (positive definite) or
//!    unbelievable (negative eigenvalue: no parameters make the target a
//!    stable BP fixed point). See [`spectral`].
//! 2. **What parameters put a stationary point there?** Closed-form
//!    pseudo-moment matching, plus the wake-sleep gradient loop on the Bethe
//!    divergence for iterative learning. See [`learning`].
//! 3. **How can unbelievable targets still be matched?** By averaging BP
//!    fixed points over the learned parameter trajectory or over a Gaussian
//!    parameter ensemble fitted to it. See [`ensemble`].
//!
//! [`experiments`] drives the batch protocols (believability sweeps, the
//! five-model comparison, trajectory projections) with reproducible seeding.

pub mod bp;
pub mod ensemble;
pub mod error;
pub mod experiments;
pub mod graph;
pub mod learning;
pub mod metrics;
pub mod model;
pub mod pseudomarginal;
pub mod seeding;
pub mod spectral;

pub use bp::{beliefs_from_messages, run_bp, BpOptions, BpResult, MessageInit, MessageSet};
pub use ensemble::{
    average_beliefs, ebp_exact, ebp_gaussian, fit_gaussian, EbpExact, EbpGaussian, EnsembleSpec,
};
pub use error::{BetheError, Result};
pub use graph::Graph;
pub use learning::{
    best_beliefs, bethe_wake_sleep, detect_equilibrium, pseudo_moment_matching, LearningRecord,
    LearningTrajectory, MessagePolicy, ThetaInit, WakeSleepOptions,
};
pub use metrics::{metrics, Metrics};
pub use model::{
    generate_random_ising, rho_closed_form, symmetric_four_node, IsingModel, Topology,
};
pub use pseudomarginal::{
    average_energy, bethe_entropy, bethe_free_energy, bethe_free_energy_gradient, MarginalsData,
    MomentVector, Pseudomarginals,
};
pub use spectral::{
    bethe_hessian, four_node_symmetric_eigenvector, is_believable, min_eigenpair, Believability,
    BetheHessian, SpectralResult, SymMatrix,
};
