//! The routing policy network.
//!
//! Per instance the forward pass is: KNN windows -> 1-D convolution over
//! each node's `[self, nearest, ..., K-th nearest]` window plus a linear
//! projection (`h = W1 x + W2 conv`), a residual attention encoder, and an
//! autoregressive decoder whose query is built from the graph mean, the
//! last visited node, and (for CVRP) the remaining capacity. Feasibility is
//! enforced by masking the decoder softmax.

use super::params::{PolicyConfig, PolicyParams};
use crate::autodiff::{NodeId, Tape, Tensor};
use crate::error::{Error, Result};
use crate::instances::{Point, VrpInstance};
use crate::rng::{self, Rng};
use crate::tour::{RolloutBatch, Tour};
use rand::Rng as _;

/// Node features and geometry as consumed by the network. For CVRP the
/// depot is model node 0 with demand 0.
#[derive(Debug, Clone)]
pub struct ModelInput {
    pub features: Tensor,
    pub points: Vec<Point>,
    pub demands: Option<Vec<f64>>,
}

impl ModelInput {
    pub fn from_vrp(inst: &VrpInstance) -> Self {
        match inst {
            VrpInstance::Tsp(tsp) => {
                let pts = tsp.coords().to_vec();
                let data = pts.iter().flat_map(|p| [p.x, p.y]).collect();
                ModelInput {
                    features: Tensor::new(vec![pts.len(), 2], data).expect("2 per node"),
                    points: pts,
                    demands: None,
                }
            }
            VrpInstance::Cvrp(cvrp) => {
                let mut pts = Vec::with_capacity(cvrp.customers.len() + 1);
                pts.push(cvrp.depot);
                pts.extend_from_slice(cvrp.customers.coords());
                let mut demands = vec![0.0];
                demands.extend(cvrp.normalized_demands());
                let data = pts
                    .iter()
                    .zip(&demands)
                    .flat_map(|(p, d)| [p.x, p.y, *d])
                    .collect();
                ModelInput {
                    features: Tensor::new(vec![pts.len(), 3], data).expect("3 per node"),
                    points: pts,
                    demands: Some(demands),
                }
            }
        }
    }

    pub fn node_count(&self) -> usize {
        self.points.len()
    }

    pub fn is_cvrp(&self) -> bool {
        self.demands.is_some()
    }
}

/// K nearest neighbors per node by Euclidean distance, ascending, excluding
/// the node itself; distance ties prefer the lower index.
pub fn knn(points: &[Point], k: usize) -> Result<Vec<Vec<usize>>> {
    let n = points.len();
    if k >= n {
        return Err(Error::Parameter(format!("K={k} must be < n={n}")));
    }
    let mut table = Vec::with_capacity(n);
    for i in 0..n {
        let mut by_dist: Vec<(f64, usize)> = (0..n)
            .filter(|&j| j != i)
            .map(|j| (points[i].dist(points[j]), j))
            .collect();
        by_dist.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
        table.push(by_dist[..k].iter().map(|&(_, j)| j).collect());
    }
    Ok(table)
}

/// Parameter tensors bound onto a tape, aligned with the params registry.
pub struct BoundParams {
    nodes: Vec<NodeId>,
    names: Vec<String>,
}

impl BoundParams {
    pub fn bind(tape: &mut Tape, params: &PolicyParams) -> Self {
        let mut nodes = Vec::with_capacity(params.entries().len());
        let mut names = Vec::with_capacity(params.entries().len());
        for (name, tensor) in params.entries() {
            nodes.push(tape.leaf(tensor.clone()));
            names.push(name.clone());
        }
        BoundParams { nodes, names }
    }

    pub fn node(&self, name: &str) -> NodeId {
        let idx = self
            .names
            .iter()
            .position(|n| n == name)
            .unwrap_or_else(|| panic!("unknown parameter '{name}'"));
        self.nodes[idx]
    }

    pub fn nodes(&self) -> &[NodeId] {
        &self.nodes
    }
}

/// Distribution-aware node embedding: `h = X·W1 + conv(windows)·W2` where
/// each node's window is `[self, knn_1, ..., knn_K]` cyclically extended to
/// the kernel size, so the convolution emits one position per node.
pub fn embed(
    tape: &mut Tape,
    bound: &BoundParams,
    cfg: &PolicyConfig,
    features: NodeId,
    knn_table: &[Vec<usize>],
) -> Result<NodeId> {
    let n = knn_table.len();
    let feat_dim = tape.value(features).shape()[1];
    if feat_dim != cfg.input_dim {
        return Err(Error::Shape(format!(
            "feature dim {feat_dim} vs model input_dim {}",
            cfg.input_dim
        )));
    }
    let ks = cfg.kernel_size;
    let window = cfg.neighbors + 1;
    let mut idx = Vec::with_capacity(n * ks);
    for (i, neighbors) in knn_table.iter().enumerate() {
        if neighbors.len() != cfg.neighbors {
            return Err(Error::Shape(format!(
                "knn table row {i} has {} entries, expected {}",
                neighbors.len(),
                cfg.neighbors
            )));
        }
        for t in 0..ks {
            let w = t % window;
            idx.push(if w == 0 { i } else { neighbors[w - 1] });
        }
    }
    let windows = tape.gather_rows(features, &idx)?;
    let conv = tape.conv1d(windows, bound.node("embed.conv_kernel"), ks)?;
    let lin = tape.matmul(features, bound.node("embed.w1"))?;
    let mixed = tape.matmul(conv, bound.node("embed.w2"))?;
    tape.add(lin, mixed)
}

/// Residual attention encoder: per layer, multi-head self-attention and a
/// ReLU feed-forward block, both added back onto the stream. Zero weights
/// make every layer the identity.
pub fn encode(
    tape: &mut Tape,
    bound: &BoundParams,
    cfg: &PolicyConfig,
    mut h: NodeId,
) -> Result<NodeId> {
    let scale = 1.0 / (cfg.head_dim() as f64).sqrt();
    for l in 0..cfg.layers {
        let mut attn: Option<NodeId> = None;
        for head in 0..cfg.heads {
            let q = tape.matmul(h, bound.node(&format!("enc{l}.attn.wq{head}")))?;
            let k = tape.matmul(h, bound.node(&format!("enc{l}.attn.wk{head}")))?;
            let v = tape.matmul(h, bound.node(&format!("enc{l}.attn.wv{head}")))?;
            let kt = tape.transpose(k)?;
            let scores = tape.matmul(q, kt)?;
            let scores = tape.scale(scores, scale);
            let weights = tape.softmax_rows(scores, None)?;
            let ctx = tape.matmul(weights, v)?;
            let out = tape.matmul(ctx, bound.node(&format!("enc{l}.attn.wo{head}")))?;
            attn = Some(match attn {
                Some(acc) => tape.add(acc, out)?,
                None => out,
            });
        }
        h = tape.add(h, attn.expect("heads >= 1"))?;
        let ff_in = tape.matmul(h, bound.node(&format!("enc{l}.ff.w_in")))?;
        let ff_act = tape.relu(ff_in);
        let ff_out = tape.matmul(ff_act, bound.node(&format!("enc{l}.ff.w_out")))?;
        h = tape.add(h, ff_out)?;
    }
    Ok(h)
}

/// Forward pass shared by every rollout of an instance.
struct EncodedInstance {
    enc: NodeId,
    keys: NodeId,
    graph_query: NodeId,
    n: usize,
}

fn encode_instance(
    tape: &mut Tape,
    bound: &BoundParams,
    cfg: &PolicyConfig,
    input: &ModelInput,
) -> Result<EncodedInstance> {
    let n = input.node_count();
    if cfg.neighbors >= n {
        return Err(Error::Parameter(format!(
            "model needs K={} < node count {n}",
            cfg.neighbors
        )));
    }
    let features = tape.leaf(input.features.clone());
    let table = knn(&input.points, cfg.neighbors)?;
    let h = embed(tape, bound, cfg, features, &table)?;
    let enc = encode(tape, bound, cfg, h)?;
    let keys = tape.matmul(enc, bound.node("dec.wk"))?;
    // Graph context: mean of encoder outputs, projected once per instance.
    let mean_weights =
        tape.leaf(Tensor::new(vec![1, n], vec![1.0 / n as f64; n]).expect("mean row"));
    let graph = tape.matmul(mean_weights, enc)?;
    let graph_query = tape.matmul(graph, bound.node("dec.wg"))?;
    Ok(EncodedInstance {
        enc,
        keys,
        graph_query,
        n,
    })
}

/// How the decoder picks each action.
enum Decode<'a> {
    Greedy,
    Sample(&'a mut Rng),
    Forced(&'a [usize]),
}

/// One decode step: probabilities over `n` nodes given the feasibility
/// mask and the current context. Returns the chosen node and the log
/// probability node on the tape.
#[allow(clippy::too_many_arguments)]
fn decode_step(
    tape: &mut Tape,
    bound: &BoundParams,
    cfg: &PolicyConfig,
    inst: &EncodedInstance,
    last: usize,
    capacity: Option<f64>,
    mask: &[bool],
    pick: &mut Decode<'_>,
    step_idx: usize,
) -> Result<(usize, NodeId)> {
    let last_emb = tape.gather_rows(inst.enc, &[last])?;
    let last_q = tape.matmul(last_emb, bound.node("dec.wl"))?;
    let mut query = tape.add(inst.graph_query, last_q)?;
    if let Some(cap) = capacity {
        let cap_leaf = tape.leaf(Tensor::new(vec![1, 1], vec![cap]).expect("1x1"));
        let cap_q = tape.matmul(cap_leaf, bound.node("dec.wc"))?;
        query = tape.add(query, cap_q)?;
    }
    let qt = tape.transpose(query)?;
    let compat = tape.matmul(inst.keys, qt)?; // (n, 1)
    let compat = tape.reshape(compat, vec![1, inst.n])?;
    let scaled = tape.scale(compat, 1.0 / (cfg.channels as f64).sqrt());
    let squashed = tape.tanh(scaled);
    let logits = tape.scale(squashed, cfg.logit_clip);
    let probs = tape.softmax_rows(logits, Some(mask))?;
    let p = tape.value(probs).data();
    debug_assert!((p.iter().sum::<f64>() - 1.0).abs() <= 1e-12, "step probabilities normalized");

    let chosen = match pick {
        Decode::Greedy => {
            let mut best = usize::MAX;
            let mut best_p = -1.0;
            for (j, &pj) in p.iter().enumerate() {
                if mask[j] && pj > best_p {
                    best_p = pj;
                    best = j;
                }
            }
            best
        }
        Decode::Sample(rng) => {
            let draw: f64 = rng.random();
            let mut cum = 0.0;
            let mut picked = None;
            for (j, &pj) in p.iter().enumerate() {
                if mask[j] {
                    cum += pj;
                    if draw < cum {
                        picked = Some(j);
                        break;
                    }
                }
            }
            // Floating remainder: fall back to the last allowed node.
            picked.unwrap_or_else(|| mask.iter().rposition(|&m| m).expect("mask not empty"))
        }
        Decode::Forced(seq) => {
            if step_idx >= seq.len() {
                return Err(Error::Contract(format!(
                    "forced sequence ended at step {step_idx} with nodes unvisited"
                )));
            }
            let j = seq[step_idx];
            if !mask[j] {
                return Err(Error::Contract(format!(
                    "forced action {j} infeasible at step {step_idx}"
                )));
            }
            j
        }
    };
    let onehot = {
        let mut data = vec![0.0; inst.n];
        data[chosen] = 1.0;
        tape.leaf(Tensor::new(vec![inst.n, 1], data).expect("onehot"))
    };
    let picked_p = tape.matmul(probs, onehot)?;
    let logp = tape.ln(picked_p);
    Ok((chosen, logp))
}

/// Fully decoded rollout: the visit sequence over model nodes and the total
/// log-probability node.
struct DecodedRollout {
    sequence: Vec<usize>,
    logprob: NodeId,
}

/// TSP decode from a fixed first node. The first node is given (multi-start
/// convention), so it contributes no probability; every later step is
/// decoded under the visited-mask.
fn decode_tsp(
    tape: &mut Tape,
    bound: &BoundParams,
    cfg: &PolicyConfig,
    inst: &EncodedInstance,
    first: usize,
    mut pick: Decode<'_>,
) -> Result<DecodedRollout> {
    let n = inst.n;
    let mut visited = vec![false; n];
    let mut sequence = Vec::with_capacity(n);
    visited[first] = true;
    sequence.push(first);
    let mut logprob = tape.leaf(Tensor::new(vec![1, 1], vec![0.0]).expect("1x1"));
    let mut last = first;
    for step in 1..n {
        let mask: Vec<bool> = visited.iter().map(|v| !v).collect();
        let (chosen, logp) =
            decode_step(tape, bound, cfg, inst, last, None, &mask, &mut pick, step)?;
        visited[chosen] = true;
        sequence.push(chosen);
        last = chosen;
        logprob = tape.add(logprob, logp)?;
    }
    Ok(DecodedRollout { sequence, logprob })
}

/// CVRP decode from a fixed first customer. Model node 0 is the depot.
/// Customers whose demand exceeds the remaining capacity are masked; the
/// depot is available whenever the vehicle is away from it, and is the
/// forced choice when no customer fits. Decoding ends once every customer
/// is visited (the final depot return is implicit in the length).
fn decode_cvrp(
    tape: &mut Tape,
    bound: &BoundParams,
    cfg: &PolicyConfig,
    inst: &EncodedInstance,
    demands: &[f64],
    first_customer: usize,
    mut pick: Decode<'_>,
) -> Result<DecodedRollout> {
    let n = inst.n;
    let customers = n - 1;
    const CAP_EPS: f64 = 1e-12;
    let mut visited = vec![false; n];
    let mut remaining = 1.0 - demands[first_customer];
    visited[first_customer] = true;
    let mut sequence = vec![first_customer];
    let mut served = 1usize;
    let mut pos = first_customer;
    let mut logprob = tape.leaf(Tensor::new(vec![1, 1], vec![0.0]).expect("1x1"));
    let mut step = 1usize;
    while served < customers {
        let mut mask = vec![false; n];
        mask[0] = pos != 0;
        let mut any_customer = false;
        for j in 1..n {
            if !visited[j] && demands[j] <= remaining + CAP_EPS {
                mask[j] = true;
                any_customer = true;
            }
        }
        if !any_customer && pos == 0 {
            // Full capacity always fits any single demand, so this state
            // signals a masking bug rather than a real instance.
            return Err(Error::Contract(
                "no feasible action with customers unvisited".into(),
            ));
        }
        let (chosen, logp) = decode_step(
            tape,
            bound,
            cfg,
            inst,
            pos,
            Some(remaining),
            &mask,
            &mut pick,
            step,
        )?;
        if chosen == 0 {
            remaining = 1.0;
        } else {
            visited[chosen] = true;
            remaining -= demands[chosen];
            served += 1;
        }
        pos = chosen;
        sequence.push(chosen);
        logprob = tape.add(logprob, logp)?;
        step += 1;
    }
    Ok(DecodedRollout { sequence, logprob })
}

fn sequence_to_tour(input: &ModelInput, sequence: &[usize]) -> Tour {
    if input.is_cvrp() {
        let mut routes = Vec::new();
        let mut current = Vec::new();
        for &node in sequence {
            if node == 0 {
                if !current.is_empty() {
                    routes.push(std::mem::take(&mut current));
                }
            } else {
                current.push(node - 1);
            }
        }
        if !current.is_empty() {
            routes.push(current);
        }
        Tour::cvrp(routes)
    } else {
        Tour::tsp(sequence.to_vec())
    }
}

fn tour_to_sequence(input: &ModelInput, tour: &Tour) -> Result<Vec<usize>> {
    match tour {
        Tour::Tsp { order } => {
            if input.is_cvrp() {
                return Err(Error::Contract("TSP tour for a CVRP input".into()));
            }
            Ok(order.clone())
        }
        Tour::Cvrp { routes } => {
            if !input.is_cvrp() {
                return Err(Error::Contract("CVRP tour for a TSP input".into()));
            }
            let mut seq = Vec::new();
            for (i, route) in routes.iter().enumerate() {
                if i > 0 {
                    seq.push(0);
                }
                seq.extend(route.iter().map(|&c| c + 1));
            }
            Ok(seq)
        }
    }
}

fn sequence_length(input: &ModelInput, sequence: &[usize]) -> f64 {
    let pts = &input.points;
    if input.is_cvrp() {
        // depot -> sequence -> depot, with every 0 a depot stop.
        let mut total = 0.0;
        let mut prev = pts[0];
        for &node in sequence {
            total += prev.dist(pts[node]);
            prev = pts[node];
        }
        total += prev.dist(pts[0]);
        total
    } else {
        let n = sequence.len();
        let mut total = 0.0;
        for i in 0..n {
            total += pts[sequence[i]].dist(pts[sequence[(i + 1) % n]]);
        }
        total
    }
}

/// Rollout decoding mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RolloutMode {
    /// Argmax decoding; deterministic, consumes no randomness.
    Greedy,
    /// Categorical sampling from the decoder distribution.
    Sample,
}

/// A rollout batch together with its tape, for gradient-based training.
pub struct RolloutTrace {
    pub tape: Tape,
    pub logprob_nodes: Vec<NodeId>,
    pub param_nodes: Vec<NodeId>,
}

/// Multi-start rollouts: start `s` fixes the first visited node (TSP) or
/// first customer (CVRP) to `s`. Greedy mode ignores `seed`.
pub fn rollout(
    params: &PolicyParams,
    input: &ModelInput,
    mode: RolloutMode,
    starts: usize,
    seed: u64,
) -> Result<RolloutBatch> {
    rollout_traced(params, input, mode, starts, seed).map(|(batch, _)| batch)
}

pub fn rollout_traced(
    params: &PolicyParams,
    input: &ModelInput,
    mode: RolloutMode,
    starts: usize,
    seed: u64,
) -> Result<(RolloutBatch, RolloutTrace)> {
    let cfg = params.config().clone();
    if input.is_cvrp() != cfg.is_cvrp() {
        return Err(Error::Shape(
            "model input_dim does not match instance variant".into(),
        ));
    }
    let max_starts = if input.is_cvrp() {
        input.node_count() - 1
    } else {
        input.node_count()
    };
    if starts < 1 || starts > max_starts {
        return Err(Error::Parameter(format!(
            "starts {starts} outside 1..={max_starts}"
        )));
    }
    let mut tape = Tape::new();
    let bound = BoundParams::bind(&mut tape, params);
    let enc = encode_instance(&mut tape, &bound, &cfg, input)?;
    let mut rng = rng::seeded(seed);

    let mut tours = Vec::with_capacity(starts);
    let mut logprobs = Vec::with_capacity(starts);
    let mut lengths = Vec::with_capacity(starts);
    let mut logprob_nodes = Vec::with_capacity(starts);
    for s in 0..starts {
        let decoded = if input.is_cvrp() {
            let demands = input.demands.as_ref().expect("cvrp input");
            let pick = match mode {
                RolloutMode::Greedy => Decode::Greedy,
                RolloutMode::Sample => Decode::Sample(&mut rng),
            };
            decode_cvrp(&mut tape, &bound, &cfg, &enc, demands, s + 1, pick)?
        } else {
            let pick = match mode {
                RolloutMode::Greedy => Decode::Greedy,
                RolloutMode::Sample => Decode::Sample(&mut rng),
            };
            decode_tsp(&mut tape, &bound, &cfg, &enc, s, pick)?
        };
        lengths.push(sequence_length(input, &decoded.sequence));
        logprobs.push(tape.value(decoded.logprob).item());
        tours.push(sequence_to_tour(input, &decoded.sequence));
        logprob_nodes.push(decoded.logprob);
    }
    Ok((
        RolloutBatch {
            tours,
            logprobs,
            lengths,
        },
        RolloutTrace {
            tape,
            logprob_nodes,
            param_nodes: bound.nodes().to_vec(),
        },
    ))
}

/// Log-probability of a given feasible tour (teacher forcing) and its
/// gradient with respect to every parameter tensor, in registry order.
pub fn logprob_and_grad(
    params: &PolicyParams,
    input: &ModelInput,
    tour: &Tour,
) -> Result<(f64, Vec<Tensor>)> {
    let (logprob, trace, node) = forced_logprob(params, input, tour)?;
    let grads = trace.tape.grad(node)?;
    let out = params
        .entries()
        .iter()
        .zip(&trace.param_nodes)
        .map(|((_, t), &pid)| grads.get(pid, t))
        .collect();
    Ok((logprob, out))
}

/// Log-probability of a feasible tour without gradients.
pub fn logprob_of_tour(params: &PolicyParams, input: &ModelInput, tour: &Tour) -> Result<f64> {
    forced_logprob(params, input, tour).map(|(lp, _, _)| lp)
}

fn forced_logprob(
    params: &PolicyParams,
    input: &ModelInput,
    tour: &Tour,
) -> Result<(f64, RolloutTrace, NodeId)> {
    let cfg = params.config().clone();
    let sequence = tour_to_sequence(input, tour)?;
    if sequence.is_empty() {
        return Err(Error::Contract("empty tour".into()));
    }
    let mut tape = Tape::new();
    let bound = BoundParams::bind(&mut tape, params);
    let enc = encode_instance(&mut tape, &bound, &cfg, input)?;
    let decoded = if input.is_cvrp() {
        let demands = input.demands.as_ref().expect("cvrp input");
        decode_cvrp(
            &mut tape,
            &bound,
            &cfg,
            &enc,
            demands,
            sequence[0],
            Decode::Forced(&sequence),
        )?
    } else {
        decode_tsp(
            &mut tape,
            &bound,
            &cfg,
            &enc,
            sequence[0],
            Decode::Forced(&sequence),
        )?
    };
    if decoded.sequence != sequence {
        return Err(Error::Contract(
            "forced decode did not reproduce the tour".into(),
        ));
    }
    let logprob = tape.value(decoded.logprob).item();
    let node = decoded.logprob;
    Ok((
        logprob,
        RolloutTrace {
            tape,
            logprob_nodes: vec![node],
            param_nodes: bound.nodes().to_vec(),
        },
        node,
    ))
}

/// Embedding output as plain values (fresh tape); test and inspection
/// helper.
pub fn embed_values(params: &PolicyParams, input: &ModelInput) -> Result<Tensor> {
    let cfg = params.config();
    let mut tape = Tape::new();
    let bound = BoundParams::bind(&mut tape, params);
    let features = tape.leaf(input.features.clone());
    let table = knn(&input.points, cfg.neighbors)?;
    let h = embed(&mut tape, &bound, cfg, features, &table)?;
    Ok(tape.value(h).clone())
}

/// Embed + encode as plain values (fresh tape).
pub fn encode_values(params: &PolicyParams, input: &ModelInput) -> Result<Tensor> {
    let cfg = params.config();
    let mut tape = Tape::new();
    let bound = BoundParams::bind(&mut tape, params);
    let features = tape.leaf(input.features.clone());
    let table = knn(&input.points, cfg.neighbors)?;
    let h = embed(&mut tape, &bound, cfg, features, &table)?;
    let enc = encode(&mut tape, &bound, cfg, h)?;
    Ok(tape.value(enc).clone())
}

/// Encoder applied to an explicit embedding matrix (fresh tape); used by
/// the permutation-equivariance and identity tests.
pub fn encode_matrix(params: &PolicyParams, h: &Tensor) -> Result<Tensor> {
    let cfg = params.config();
    let mut tape = Tape::new();
    let bound = BoundParams::bind(&mut tape, params);
    let hid = tape.leaf(h.clone());
    let enc = encode(&mut tape, &bound, cfg, hid)?;
    Ok(tape.value(enc).clone())
}
