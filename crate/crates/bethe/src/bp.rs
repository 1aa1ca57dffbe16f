//! Damped synchronous sum-product belief propagation.
//!
//! Unary terms are folded into the node factors, so the only stored messages
//! are factor-to-node messages, one per directed edge incidence. Updates are
//! synchronous (all messages recomputed from the previous sweep), each new
//! message is mixed with the old one in linear space,
//! `m <- a * m_old + (1 - a) * m_new` with `a = exp(-1/damping_tau)`, and
//! renormalized. A fixed point is declared when no message moves more than
//! `tol` in one sweep. Non-convergence is reported, not raised.

use rand::Rng;

use crate::error::{BetheError, Result};
use crate::graph::Graph;
use crate::model::IsingModel;
use crate::pseudomarginal::Pseudomarginals;

/// Options for a belief-propagation run.
#[derive(Debug, Clone)]
pub struct BpOptions {
    /// Exponential damping time constant; mixing weight is `exp(-1/tau)`.
    /// Zero disables damping.
    pub damping_tau: f64,
    /// Convergence threshold on the max single-sweep message change.
    pub tol: f64,
    pub max_iters: usize,
    pub init: MessageInit,
}

impl Default for BpOptions {
    fn default() -> Self {
        BpOptions {
            damping_tau: 5.0,
            tol: 1e-9,
            max_iters: 50_000,
            init: MessageInit::Uniform,
        }
    }
}

/// Initial message choice.
#[derive(Debug, Clone, Default)]
pub enum MessageInit {
    /// All messages (1/2, 1/2).
    #[default]
    Uniform,
    Given(MessageSet),
}

/// Factor-to-node messages. Slot `2e` holds the message from edge `e` toward
/// its smaller endpoint, slot `2e + 1` toward the larger one. Each message is
/// `[m(+1), m(-1)]`, normalized to sum 1.
#[derive(Debug, Clone, PartialEq)]
pub struct MessageSet {
    graph: Graph,
    values: Vec<[f64; 2]>,
}

impl MessageSet {
    pub fn uniform(graph: &Graph) -> Self {
        MessageSet {
            graph: graph.clone(),
            values: vec![[0.5, 0.5]; 2 * graph.num_edges()],
        }
    }

    /// Messages with independent uniform random components, normalized.
    pub fn random(graph: &Graph, rng: &mut impl Rng) -> Self {
        let values = (0..2 * graph.num_edges())
            .map(|_| {
                let a: f64 = rng.gen_range(0.05..0.95);
                [a, 1.0 - a]
            })
            .collect();
        MessageSet {
            graph: graph.clone(),
            values,
        }
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn values(&self) -> &[[f64; 2]] {
        &self.values
    }

    /// Slot index of the message on edge `e` flowing toward `node`.
    pub fn slot_toward(&self, edge: usize, node: usize) -> usize {
        let (i, j) = self.graph.edges()[edge];
        if node == i {
            2 * edge
        } else {
            assert_eq!(node, j, "node {node} is not an endpoint of edge {edge}");
            2 * edge + 1
        }
    }

    /// Overwrite one message; it is renormalized to sum 1.
    pub fn set_message(&mut self, edge: usize, toward_node: usize, m: [f64; 2]) {
        let slot = self.slot_toward(edge, toward_node);
        let sum = m[0] + m[1];
        self.values[slot] = [m[0] / sum, m[1] / sum];
    }
}

/// Outcome of a BP run.
#[derive(Debug, Clone)]
pub struct BpResult {
    pub beliefs: Pseudomarginals,
    pub converged: bool,
    pub iterations: usize,
    /// Max message change in the final sweep.
    pub final_delta: f64,
}

/// Leave-one-out node evidence: `exp(h_u x) * prod of messages into u except
/// the one on `skip_edge``, normalized by its max component.
fn node_evidence(
    graph: &Graph,
    exp_h: &[[f64; 2]],
    values: &[[f64; 2]],
    node: usize,
    skip_edge: Option<usize>,
) -> [f64; 2] {
    let mut p = exp_h[node];
    for inc in graph.incidences(node) {
        if Some(inc.edge) == skip_edge {
            continue;
        }
        let slot = if graph.edges()[inc.edge].0 == node {
            2 * inc.edge
        } else {
            2 * inc.edge + 1
        };
        p[0] *= values[slot][0];
        p[1] *= values[slot][1];
    }
    let scale = p[0].max(p[1]);
    [p[0] / scale, p[1] / scale]
}

/// Run belief propagation and also return the final messages (useful for
/// warm-started runs).
pub fn run_bp_with_messages(
    model: &IsingModel,
    options: &BpOptions,
) -> Result<(BpResult, MessageSet)> {
    assert!(
        options.damping_tau >= 0.0,
        "damping_tau must be nonnegative"
    );
    assert!(options.tol > 0.0, "tol must be positive");
    let graph = model.graph();
    let a = if options.damping_tau > 0.0 {
        (-1.0 / options.damping_tau).exp()
    } else {
        0.0
    };
    let exp_h: Vec<[f64; 2]> = model.h().iter().map(|&h| [h.exp(), (-h).exp()]).collect();
    let exp_j: Vec<[f64; 2]> = model.j().iter().map(|&j| [j.exp(), (-j).exp()]).collect();

    let mut msgs = match &options.init {
        MessageInit::Uniform => MessageSet::uniform(graph),
        MessageInit::Given(m) => {
            if m.graph() != graph {
                return Err(BetheError::GraphMismatch);
            }
            m.clone()
        }
    };
    let mut next = msgs.values.clone();

    let mut converged = false;
    let mut iterations = 0;
    let mut final_delta = 0.0;
    for iter in 1..=options.max_iters {
        let mut delta = 0.0_f64;
        for (e, &(i, j)) in graph.edges().iter().enumerate() {
            let [ej, enj] = exp_j[e];
            for (slot, source) in [(2 * e, j), (2 * e + 1, i)] {
                let p = node_evidence(graph, &exp_h, &msgs.values, source, Some(e));
                let raw = [ej * p[0] + enj * p[1], enj * p[0] + ej * p[1]];
                let raw_sum = raw[0] + raw[1];
                let old = msgs.values[slot];
                let mut m = [
                    a * old[0] + (1.0 - a) * raw[0] / raw_sum,
                    a * old[1] + (1.0 - a) * raw[1] / raw_sum,
                ];
                let sum = m[0] + m[1];
                m = [m[0] / sum, m[1] / sum];
                if !(m[0].is_finite() && m[1].is_finite()) {
                    return Err(BetheError::MessageOverflow { iteration: iter });
                }
                delta = delta.max((m[0] - old[0]).abs()).max((m[1] - old[1]).abs());
                next[slot] = m;
            }
        }
        std::mem::swap(&mut msgs.values, &mut next);
        iterations = iter;
        final_delta = delta;
        if delta < options.tol {
            converged = true;
            break;
        }
    }
    let beliefs = beliefs_from_messages(model, &msgs)?;
    Ok((
        BpResult {
            beliefs,
            converged,
            iterations,
            final_delta,
        },
        msgs,
    ))
}

/// Run belief propagation with the given options.
pub fn run_bp(model: &IsingModel, options: &BpOptions) -> Result<BpResult> {
    run_bp_with_messages(model, options).map(|(r, _)| r)
}

/// Beliefs induced by a message set: node beliefs are the normalized product
/// of the local field factor with all incoming messages; pair beliefs
/// combine the coupling factor, both field factors, and incoming messages
/// excluding the partner edge. At non-fixed-points the result may violate
/// local consistency.
pub fn beliefs_from_messages(model: &IsingModel, msgs: &MessageSet) -> Result<Pseudomarginals> {
    if msgs.graph() != model.graph() {
        return Err(BetheError::GraphMismatch);
    }
    let graph = model.graph();
    let exp_h: Vec<[f64; 2]> = model.h().iter().map(|&h| [h.exp(), (-h).exp()]).collect();
    let mut qi = Vec::with_capacity(graph.n());
    for node in 0..graph.n() {
        let p = node_evidence(graph, &exp_h, &msgs.values, node, None);
        let sum = p[0] + p[1];
        if sum <= 0.0 || !sum.is_finite() {
            return Err(BetheError::ZeroNormalizer("node belief"));
        }
        qi.push(p[0] / sum);
    }
    let mut qij = Vec::with_capacity(graph.num_edges());
    for (e, &(i, j)) in graph.edges().iter().enumerate() {
        let pi = node_evidence(graph, &exp_h, &msgs.values, i, Some(e));
        let pj = node_evidence(graph, &exp_h, &msgs.values, j, Some(e));
        let [ej, enj] = [model.j()[e].exp(), (-model.j()[e]).exp()];
        let pp = ej * pi[0] * pj[0];
        let pm = enj * pi[0] * pj[1];
        let mp = enj * pi[1] * pj[0];
        let mm = ej * pi[1] * pj[1];
        let sum = pp + pm + mp + mm;
        if sum <= 0.0 || !sum.is_finite() {
            return Err(BetheError::ZeroNormalizer("pair belief"));
        }
        qij.push(pp / sum);
    }
    Pseudomarginals::new(graph.clone(), qi, qij)
}
