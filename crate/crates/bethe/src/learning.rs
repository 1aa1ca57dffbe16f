//! Parameter learning: closed-form pseudo-moment matching and the wake-sleep
//! gradient loop on the Bethe divergence.
//!
//! Pseudo-moment matching solves for the parameters that put a stationary
//! point of the Bethe free energy exactly at the target marginals. When that
//! stationary point is not a minimum, no parameters make the target a stable
//! BP fixed point; the wake-sleep iteration then settles into a bounded
//! recurrent trajectory whose time-averaged beliefs reproduce the target.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::bp::{run_bp_with_messages, BpOptions, MessageInit, MessageSet};
use crate::error::{BetheError, Result};
use crate::graph::Graph;
use crate::model::IsingModel;
use crate::pseudomarginal::Pseudomarginals;
use crate::seeding::rng_from_seed;

/// Windowed-mean mismatch threshold for equilibrium detection.
pub const EQUILIBRIUM_MISMATCH_TOL: f64 = 1e-3;
/// Per-coordinate drift threshold between window halves.
pub const EQUILIBRIUM_DRIFT_TOL: f64 = 1e-2;

/// Closed-form parameters placing a Bethe stationary point at `p`:
///
/// ```text
/// J_ij = ln( p^{++} p^{--} / (p^{+-} p^{-+}) ) / 4
/// h_i  = sum_{j in N_i} J_ij + (1 - d_i) ln(p_i^+ / p_i^-) / 2
///        + sum_{j in N_i} ln(p^{+-}_{ij} / p^{--}_{ij}) / 2
/// ```
///
/// The Bethe free-energy gradient of the returned model vanishes at `p`.
pub fn pseudo_moment_matching(p: &Pseudomarginals) -> Result<IsingModel> {
    p.ensure_consistent()?;
    p.ensure_interior()?;
    let graph = p.graph();
    let mut j = Vec::with_capacity(graph.num_edges());
    for e in 0..graph.num_edges() {
        let t = p.pair_table(e);
        j.push(0.25 * (t.pp * t.mm / (t.pm * t.mp)).ln());
    }
    let mut h = Vec::with_capacity(graph.n());
    for (i, &qi) in p.qi_plus().iter().enumerate() {
        let di = graph.degree(i) as f64;
        let mut hi = 0.5 * (1.0 - di) * (qi / (1.0 - qi)).ln();
        for inc in graph.incidences(i) {
            hi += j[inc.edge];
            let t = p.pair_table(inc.edge);
            let own_down = if graph.edges()[inc.edge].0 == i {
                t.pm
            } else {
                t.mp
            };
            hi += 0.5 * (own_down / t.mm).ln();
        }
        h.push(hi);
    }
    IsingModel::new(graph.clone(), h, j)
}

/// Starting parameters for wake-sleep learning.
#[derive(Debug, Clone, Default)]
pub enum ThetaInit {
    /// Start from the pseudo-moment-matching solution at the target.
    #[default]
    PseudoMomentMatching,
    Zeros,
    Given {
        h: Vec<f64>,
        j: Vec<f64>,
    },
}

/// Message initialization policy for the BP run inside each learning step.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum MessagePolicy {
    /// Constant (uniform) messages at the start of every BP run.
    #[default]
    FreshUniform,
    /// Random messages at the start of every BP run, drawn from the
    /// trajectory's seeded stream.
    RandomRestart,
    /// Resume from the previous step's final messages.
    WarmStart,
}

#[derive(Debug, Clone)]
pub struct WakeSleepOptions {
    /// Learning rate.
    pub epsilon: f64,
    pub iters: usize,
    pub theta_init: ThetaInit,
    pub bp: BpOptions,
    pub message_policy: MessagePolicy,
    /// Seeds the random-restart message stream; unused by other policies.
    pub seed: u64,
}

impl Default for WakeSleepOptions {
    fn default() -> Self {
        WakeSleepOptions {
            epsilon: 0.1,
            iters: 2000,
            theta_init: ThetaInit::default(),
            bp: BpOptions::default(),
            message_policy: MessagePolicy::default(),
            seed: 0,
        }
    }
}

/// One learning iteration: the parameters used, the beliefs they produced,
/// and the moment mismatch that drives the next update.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LearningRecord {
    pub iter: usize,
    pub h: Vec<f64>,
    #[serde(rename = "J")]
    pub j: Vec<f64>,
    pub qi_plus: Vec<f64>,
    pub qij_pp: Vec<f64>,
    pub converged: bool,
    pub mismatch_inf: f64,
    /// Full mismatch vector (node moments then edge moments); in-memory
    /// only, reconstructible from the beliefs and the target.
    #[serde(skip)]
    pub mismatch: Vec<f64>,
}

impl LearningRecord {
    /// Concatenated parameter vector (h then J).
    pub fn theta(&self) -> Vec<f64> {
        let mut t = self.h.clone();
        t.extend_from_slice(&self.j);
        t
    }

    /// Concatenated belief coordinates (node then edge).
    pub fn belief_coordinates(&self) -> Vec<f64> {
        let mut b = self.qi_plus.clone();
        b.extend_from_slice(&self.qij_pp);
        b
    }
}

/// Full wake-sleep trajectory with the post-run parameters.
#[derive(Debug, Clone)]
pub struct LearningTrajectory {
    graph: Graph,
    records: Vec<LearningRecord>,
    final_h: Vec<f64>,
    final_j: Vec<f64>,
    epsilon: f64,
}

impl LearningTrajectory {
    /// Assemble a trajectory from pre-existing records, e.g. synthetic ones
    /// in tests or records produced elsewhere.
    pub fn from_parts(
        graph: Graph,
        records: Vec<LearningRecord>,
        final_h: Vec<f64>,
        final_j: Vec<f64>,
        epsilon: f64,
    ) -> Result<Self> {
        for r in &records {
            if r.h.len() != graph.n() || r.j.len() != graph.num_edges() {
                return Err(BetheError::ShapeMismatch {
                    what: "trajectory record",
                    expected: graph.dim(),
                    got: r.h.len() + r.j.len(),
                });
            }
        }
        if final_h.len() != graph.n() || final_j.len() != graph.num_edges() {
            return Err(BetheError::ShapeMismatch {
                what: "final parameters",
                expected: graph.dim(),
                got: final_h.len() + final_j.len(),
            });
        }
        Ok(LearningTrajectory {
            graph,
            records,
            final_h,
            final_j,
            epsilon,
        })
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn records(&self) -> &[LearningRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Parameters after the last update.
    pub fn final_theta(&self) -> (&[f64], &[f64]) {
        (&self.final_h, &self.final_j)
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// Beliefs of record `idx` as pseudomarginals on the trajectory's graph.
    pub fn beliefs(&self, idx: usize) -> Pseudomarginals {
        let r = &self.records[idx];
        Pseudomarginals::new(self.graph.clone(), r.qi_plus.clone(), r.qij_pp.clone())
            .expect("recorded beliefs match the trajectory graph")
    }

    /// Write one JSON record per line:
    /// `{"iter","h","J","qi_plus","qij_pp","converged","mismatch_inf"}`.
    pub fn write_jsonl(&self, mut w: impl Write) -> Result<()> {
        for r in &self.records {
            serde_json::to_writer(&mut w, r)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }

    /// Read a trajectory written by [`LearningTrajectory::write_jsonl`]. The
    /// loaded records carry empty mismatch vectors; call
    /// [`LearningTrajectory::recompute_mismatches`] with the target if
    /// equilibrium detection is needed. `final_theta` is set to the last
    /// recorded parameters and `epsilon` to NaN (not stored in the file).
    pub fn read_jsonl(graph: Graph, r: impl BufRead) -> Result<Self> {
        let mut records: Vec<LearningRecord> = Vec::new();
        for line in r.lines() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let rec: LearningRecord = serde_json::from_str(&line)?;
            if rec.h.len() != graph.n() || rec.j.len() != graph.num_edges() {
                return Err(BetheError::ShapeMismatch {
                    what: "trajectory record",
                    expected: graph.dim(),
                    got: rec.h.len() + rec.j.len(),
                });
            }
            records.push(rec);
        }
        let (final_h, final_j) = match records.last() {
            Some(r) => (r.h.clone(), r.j.clone()),
            None => (vec![0.0; graph.n()], vec![0.0; graph.num_edges()]),
        };
        Ok(LearningTrajectory {
            graph,
            records,
            final_h,
            final_j,
            epsilon: f64::NAN,
        })
    }

    /// Rebuild the mismatch vectors of every record against target `p`.
    pub fn recompute_mismatches(&mut self, p: &Pseudomarginals) -> Result<()> {
        if p.graph() != &self.graph {
            return Err(BetheError::GraphMismatch);
        }
        let eta_p = p.to_moments().concat();
        for idx in 0..self.records.len() {
            let b = self.beliefs(idx);
            let eta_b = b.to_moments().concat();
            let mismatch: Vec<f64> = eta_p.iter().zip(&eta_b).map(|(p, b)| p - b).collect();
            let inf = mismatch.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
            self.records[idx].mismatch = mismatch;
            self.records[idx].mismatch_inf = inf;
        }
        Ok(())
    }
}

/// Wake-sleep learning toward target marginals `p`: each iteration runs BP
/// at the current parameters, then moves the parameters by
/// `epsilon * (moments(p) - moments(beliefs))`. Every iteration is recorded.
/// BP non-convergence is flagged in the record but still contributes its
/// final iterate to the update; message overflow aborts.
pub fn bethe_wake_sleep(
    p: &Pseudomarginals,
    options: &WakeSleepOptions,
) -> Result<LearningTrajectory> {
    assert!(options.epsilon > 0.0, "epsilon must be positive");
    p.ensure_consistent()?;
    let graph = p.graph().clone();
    let (mut h, mut j) = match &options.theta_init {
        ThetaInit::PseudoMomentMatching => {
            let m = pseudo_moment_matching(p)?;
            (m.h().to_vec(), m.j().to_vec())
        }
        ThetaInit::Zeros => (vec![0.0; graph.n()], vec![0.0; graph.num_edges()]),
        ThetaInit::Given { h, j } => {
            if h.len() != graph.n() || j.len() != graph.num_edges() {
                return Err(BetheError::ShapeMismatch {
                    what: "theta_init",
                    expected: graph.dim(),
                    got: h.len() + j.len(),
                });
            }
            (h.clone(), j.clone())
        }
    };
    let eta_p = p.to_moments().concat();
    let mut rng = rng_from_seed(options.seed);
    let mut warm: Option<MessageSet> = None;
    let mut records = Vec::with_capacity(options.iters);
    for iter in 0..options.iters {
        let init = match options.message_policy {
            MessagePolicy::FreshUniform => MessageInit::Uniform,
            MessagePolicy::RandomRestart => {
                MessageInit::Given(MessageSet::random(&graph, &mut rng))
            }
            MessagePolicy::WarmStart => match warm.take() {
                Some(m) => MessageInit::Given(m),
                None => MessageInit::Uniform,
            },
        };
        let bp_options = BpOptions {
            init,
            ..options.bp.clone()
        };
        let model = IsingModel::new(graph.clone(), h.clone(), j.clone())?;
        let (result, msgs) = run_bp_with_messages(&model, &bp_options)?;
        warm = Some(msgs);
        let eta_b = result.beliefs.to_moments().concat();
        let mismatch: Vec<f64> = eta_p.iter().zip(&eta_b).map(|(p, b)| p - b).collect();
        let mismatch_inf = mismatch.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
        records.push(LearningRecord {
            iter,
            h: h.clone(),
            j: j.clone(),
            qi_plus: result.beliefs.qi_plus().to_vec(),
            qij_pp: result.beliefs.qij_pp().to_vec(),
            converged: result.converged,
            mismatch_inf,
            mismatch: mismatch.clone(),
        });
        for (i, hv) in h.iter_mut().enumerate() {
            *hv += options.epsilon * mismatch[i];
        }
        for (e, jv) in j.iter_mut().enumerate() {
            *jv += options.epsilon * mismatch[graph.n() + e];
        }
    }
    Ok(LearningTrajectory {
        graph,
        records,
        final_h: h,
        final_j: j,
        epsilon: options.epsilon,
    })
}

/// The recorded beliefs (converged iterations only) closest to `p` in
/// Euclidean distance over minimal coordinates; ties resolve to the earliest
/// iteration.
pub fn best_beliefs(
    trajectory: &LearningTrajectory,
    p: &Pseudomarginals,
) -> Result<(usize, Pseudomarginals)> {
    if trajectory.is_empty() {
        return Err(BetheError::EmptyInput("trajectory"));
    }
    if p.graph() != trajectory.graph() {
        return Err(BetheError::GraphMismatch);
    }
    let target = p.minimal_coordinates();
    let mut best: Option<(usize, f64)> = None;
    for (idx, r) in trajectory.records().iter().enumerate() {
        if !r.converged {
            continue;
        }
        let d2: f64 = r
            .belief_coordinates()
            .iter()
            .zip(&target)
            .map(|(b, p)| (b - p) * (b - p))
            .sum();
        if best.is_none_or(|(_, best_d2)| d2 < best_d2) {
            best = Some((idx, d2));
        }
    }
    match best {
        Some((idx, _)) => Ok((idx, trajectory.beliefs(idx))),
        None => Err(BetheError::NoConvergedIterations),
    }
}

/// Stationarity report over the trailing `window` iterations.
#[derive(Debug, Clone, Serialize)]
pub struct EquilibriumReport {
    pub equilibrated: bool,
    /// Infinity norm of the windowed mean moment mismatch.
    pub mean_mismatch_inf: f64,
    /// Max per-coordinate difference between the parameter means of the
    /// window's first and second halves.
    pub theta_drift_inf: f64,
}

/// Learning has equilibrated when the windowed mean mismatch is below
/// [`EQUILIBRIUM_MISMATCH_TOL`] and the parameter means of the two window
/// halves agree within [`EQUILIBRIUM_DRIFT_TOL`] per coordinate.
pub fn detect_equilibrium(
    trajectory: &LearningTrajectory,
    window: usize,
) -> Result<EquilibriumReport> {
    assert!(window >= 2, "window must cover at least two iterations");
    if window > trajectory.len() {
        return Err(BetheError::WindowTooLarge {
            window,
            len: trajectory.len(),
        });
    }
    let tail = &trajectory.records()[trajectory.len() - window..];
    if tail.iter().any(|r| r.mismatch.is_empty()) {
        return Err(BetheError::EmptyInput(
            "mismatch vectors (recompute_mismatches after loading a trajectory)",
        ));
    }
    let dim = trajectory.graph().dim();
    let mut mean_mismatch = vec![0.0; dim];
    for r in tail {
        for (acc, v) in mean_mismatch.iter_mut().zip(&r.mismatch) {
            *acc += v;
        }
    }
    for v in &mut mean_mismatch {
        *v /= window as f64;
    }
    let mean_mismatch_inf = mean_mismatch.iter().fold(0.0_f64, |a, v| a.max(v.abs()));

    let half = window / 2;
    let mut first = vec![0.0; dim];
    let mut second = vec![0.0; dim];
    for r in &tail[..half] {
        for (acc, v) in first.iter_mut().zip(r.theta()) {
            *acc += v;
        }
    }
    for r in &tail[half..] {
        for (acc, v) in second.iter_mut().zip(r.theta()) {
            *acc += v;
        }
    }
    let theta_drift_inf = first
        .iter()
        .zip(&second)
        .map(|(a, b)| (a / half as f64 - b / (window - half) as f64).abs())
        .fold(0.0_f64, f64::max);

    Ok(EquilibriumReport {
        equilibrated: mean_mismatch_inf < EQUILIBRIUM_MISMATCH_TOL
            && theta_drift_inf < EQUILIBRIUM_DRIFT_TOL,
        mean_mismatch_inf,
        theta_drift_inf,
    })
}
