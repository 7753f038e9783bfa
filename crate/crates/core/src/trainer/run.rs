//! The training loop: state, inner REINFORCE/supervised steps, the outer
//! group-weight update, checkpointing, and bit-exact resume.

use super::{eg_update, GroupSampling, GroupWeights, TrainConfig, TrainMode};
use crate::autodiff::Tensor;
use crate::checkpoint;
use crate::error::{Error, Result};
use crate::instances::{GroupedDataset, VrpInstance};
use crate::policy::{
    logprob_and_grad, rollout_traced, ModelInput, PolicyParams, RolloutMode, RolloutTrace,
};
use crate::rng::{self, Rng, RngState};
use crate::solvers;
use crate::tour::{RolloutBatch, Tour};
use rand::Rng as _;
use rayon::prelude::*;
use std::collections::HashMap;
use std::path::Path;
use std::time::Instant;

/// POMO-style shared baseline: the mean tour length across an instance's
/// rollout starts.
pub fn shared_baseline(batch: &RolloutBatch) -> f64 {
    batch.lengths.iter().sum::<f64>() / batch.len() as f64
}

/// REINFORCE surrogate for one instance: returns the mean advantage
/// `mean_s(l_s - b)` and the gradient of `mean_s((l_s - b) * logprob_s)`
/// with respect to every parameter tensor.
pub fn reinforce_loss(
    trace: &mut RolloutTrace,
    batch: &RolloutBatch,
    baseline: f64,
) -> Result<(f64, Vec<Tensor>)> {
    if batch.is_empty() {
        return Err(Error::Contract("empty rollout batch".into()));
    }
    if !baseline.is_finite() {
        return Err(Error::Contract(format!("non-finite baseline {baseline}")));
    }
    let s = batch.len() as f64;
    let tape = &mut trace.tape;
    let mut loss_node = None;
    for (node, len) in trace.logprob_nodes.iter().zip(&batch.lengths) {
        let advantage = (len - baseline) / s;
        let term = tape.scale(*node, advantage);
        loss_node = Some(match loss_node {
            None => term,
            Some(acc) => tape.add(acc, term)?,
        });
    }
    let loss_node = loss_node.expect("non-empty batch");
    let grads = tape.grad(loss_node)?;
    let out = trace
        .param_nodes
        .iter()
        .map(|&pid| {
            grads
                .get_opt(pid)
                .cloned()
                .unwrap_or_else(|| Tensor::zeros(tape.value(pid).shape().to_vec()))
        })
        .collect();
    let mean_advantage = batch.lengths.iter().map(|l| l - baseline).sum::<f64>() / s;
    Ok((mean_advantage, out))
}

/// Per-instance advantages against a baseline.
pub fn advantages(batch: &RolloutBatch, baseline: f64) -> Vec<f64> {
    batch.lengths.iter().map(|l| l - baseline).collect()
}

/// Supervised step for one instance: cross-entropy toward a reference tour.
/// Returns `-log P(tour | x)` and its gradient per parameter tensor.
pub fn supervised_step(
    params: &PolicyParams,
    input: &ModelInput,
    oracle_tour: &Tour,
) -> Result<(f64, Vec<Tensor>)> {
    let (logprob, mut grads) = logprob_and_grad(params, input, oracle_tour)?;
    for t in &mut grads {
        for v in t.data_mut() {
            *v = -*v;
        }
    }
    Ok((-logprob, grads))
}

/// Momentum SGD with L2 decay, scaled by the sampled group's weight:
/// `v <- mu v + q_g (grad + wd * theta); theta <- theta - eta v`.
/// Non-finite gradients abort before any mutation.
pub fn sgd_step(
    params: &mut PolicyParams,
    momentum: &mut [Tensor],
    grad: &[Tensor],
    q_g: f64,
    eta: f64,
    mu: f64,
    wd: f64,
) -> Result<()> {
    if grad.len() != momentum.len() || grad.len() != params.entries().len() {
        return Err(Error::Shape("gradient/momentum tensor count mismatch".into()));
    }
    for g in grad {
        if !g.is_finite() {
            return Err(Error::NumericalAbort("non-finite gradient".into()));
        }
    }
    for ((theta, v), g) in params.tensors_mut().zip(momentum.iter_mut()).zip(grad) {
        for ((t, vi), gi) in theta
            .data_mut()
            .iter_mut()
            .zip(v.data_mut().iter_mut())
            .zip(g.data())
        {
            *vi = mu * *vi + q_g * (gi + wd * *t);
            *t -= eta * *vi;
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct HistoryEntry {
    pub step: usize,
    pub group: usize,
    pub loss: f64,
}

/// Everything the trainer needs to continue bit-exactly.
pub struct TrainState {
    pub params: PolicyParams,
    pub q: GroupWeights,
    pub momentum: Vec<Tensor>,
    pub outer_step: usize,
    pub rng: Rng,
    pub history: Vec<HistoryEntry>,
    /// Per-group running mean of observed losses (for the optional
    /// normalization) as (mean, count).
    pub group_loss_mean: Vec<f64>,
    pub group_loss_count: Vec<u64>,
}

/// One outer step's log record.
#[derive(Debug, Clone)]
pub struct StepRecord {
    pub t: usize,
    pub group: usize,
    pub q: Vec<f64>,
    pub batch_loss: f64,
    pub grad_norm: f64,
    pub wallclock: f64,
}

pub fn log_header(group_count: usize) -> String {
    let qs: Vec<String> = (0..group_count).map(|g| format!("q_{g}")).collect();
    format!("t,g,{},batch_loss,grad_norm,wallclock", qs.join(","))
}

pub fn log_row(rec: &StepRecord) -> String {
    let qs: Vec<String> = rec.q.iter().map(|v| format!("{v}")).collect();
    format!(
        "{},{},{},{},{},{}",
        rec.t,
        rec.group,
        qs.join(","),
        rec.batch_loss,
        rec.grad_norm,
        rec.wallclock
    )
}

pub struct Trainer<'d> {
    cfg: TrainConfig,
    dataset: &'d GroupedDataset,
    state: TrainState,
    oracle_cache: HashMap<(usize, usize), Tour>,
    started: Instant,
}

struct InstanceGrad {
    monitored: f64,
    grads: Vec<Tensor>,
}

impl<'d> Trainer<'d> {
    pub fn new(cfg: TrainConfig, dataset: &'d GroupedDataset) -> Result<Self> {
        cfg.validate()?;
        let m = dataset.group_count();
        let q = match cfg.mode {
            TrainMode::Erm => GroupWeights::from_sizes(&dataset.group_sizes())?,
            _ => GroupWeights::uniform(m)?,
        };
        let params = PolicyParams::init(cfg.model.clone(), cfg.seed)?;
        let momentum = params
            .entries()
            .iter()
            .map(|(_, t)| Tensor::zeros(t.shape().to_vec()))
            .collect();
        let rng = rng::stream(cfg.seed, TRAINER_RNG_STREAM);
        Ok(Trainer {
            cfg,
            dataset,
            state: TrainState {
                params,
                q,
                momentum,
                outer_step: 0,
                rng,
                history: Vec::new(),
                group_loss_mean: vec![0.0; m],
                group_loss_count: vec![0; m],
            },
            oracle_cache: HashMap::new(),
            started: Instant::now(),
        })
    }

    pub fn config(&self) -> &TrainConfig {
        &self.cfg
    }

    pub fn state(&self) -> &TrainState {
        &self.state
    }

    pub fn params(&self) -> &PolicyParams {
        &self.state.params
    }

    pub fn finished(&self) -> bool {
        self.state.outer_step >= self.cfg.outer_steps
    }

    /// Runs outer steps until `outer_steps`, reporting each step.
    pub fn run<F: FnMut(&StepRecord) -> Result<()>>(&mut self, mut on_step: F) -> Result<()> {
        while !self.finished() {
            let rec = self.outer_step()?;
            on_step(&rec)?;
        }
        Ok(())
    }

    /// One outer iteration: sample a group, run T' weighted inner steps,
    /// then update the group weights from the last inner loss (DRO and
    /// supervised modes; ERM keeps its size-proportional weights).
    pub fn outer_step(&mut self) -> Result<StepRecord> {
        let t = self.state.outer_step + 1;
        let group = self.sample_group();
        let mut last_loss = 0.0;
        let mut grad_norm = 0.0;
        for _ in 0..self.cfg.inner_steps {
            let (monitored, grad) = self.inner_batch(group)?;
            let q_g = self.state.q.get(group);
            sgd_step(
                &mut self.state.params,
                &mut self.state.momentum,
                &grad,
                q_g,
                self.cfg.eta_theta,
                self.cfg.momentum,
                self.cfg.weight_decay,
            )?;
            last_loss = monitored;
            grad_norm = grad
                .iter()
                .map(|g| g.data().iter().map(|v| v * v).sum::<f64>())
                .sum::<f64>()
                .sqrt();
        }
        // Running per-group mean, updated with the last inner loss.
        let count = self.state.group_loss_count[group] + 1;
        let mean = self.state.group_loss_mean[group]
            + (last_loss - self.state.group_loss_mean[group]) / count as f64;
        self.state.group_loss_count[group] = count;
        self.state.group_loss_mean[group] = mean;

        if self.cfg.mode != TrainMode::Erm {
            let eg_loss = if self.cfg.normalize_group_loss && mean.abs() > 1e-12 {
                last_loss / mean
            } else {
                last_loss
            };
            eg_update(&mut self.state.q, group, eg_loss, self.cfg.eta_q)?;
            self.state.q.validate()?;
        }
        self.state.history.push(HistoryEntry {
            step: t,
            group,
            loss: last_loss,
        });
        self.state.outer_step = t;
        Ok(StepRecord {
            t,
            group,
            q: self.state.q.as_slice().to_vec(),
            batch_loss: last_loss,
            grad_norm,
            wallclock: self.started.elapsed().as_secs_f64(),
        })
    }

    fn sample_group(&mut self) -> usize {
        match self.cfg.group_sampling {
            GroupSampling::Uniform => self.state.rng.random_range(0..self.dataset.group_count()),
            GroupSampling::SizeProportional => {
                let total = self.dataset.total_instances();
                let mut pick = self.state.rng.random_range(0..total);
                for (g, size) in self.dataset.group_sizes().iter().enumerate() {
                    if pick < *size {
                        return g;
                    }
                    pick -= size;
                }
                self.dataset.group_count() - 1
            }
        }
    }

    fn resolve_starts(&self, inst: &VrpInstance) -> usize {
        if self.cfg.starts > 0 {
            self.cfg.starts
        } else {
            inst.len().min(8)
        }
    }

    /// One inner step: a batch sampled (with replacement) from the group,
    /// rollouts evaluated concurrently against read-only parameters, and
    /// gradients reduced in batch-index order so the result is independent
    /// of scheduling.
    fn inner_batch(&mut self, group: usize) -> Result<(f64, Vec<Tensor>)> {
        let g = &self.dataset.groups()[group];
        let size = g.instances.len();
        let picks: Vec<usize> = (0..self.cfg.batch_size)
            .map(|_| self.state.rng.random_range(0..size))
            .collect();
        let seeds: Vec<u64> = (0..self.cfg.batch_size)
            .map(|_| self.state.rng.random())
            .collect();

        if self.cfg.mode == TrainMode::Supervised {
            self.fill_oracle_cache(group, &picks)?;
        }

        let params = &self.state.params;
        let mode = self.cfg.mode;
        let cache = &self.oracle_cache;
        let jobs: Vec<(usize, u64)> = picks.iter().copied().zip(seeds).collect();
        let results: Result<Vec<InstanceGrad>> = jobs
            .par_iter()
            .map(|&(idx, seed)| {
                let inst = &g.instances[idx];
                let input = ModelInput::from_vrp(inst);
                match mode {
                    TrainMode::Dro | TrainMode::Erm => {
                        let starts = self.resolve_starts(inst);
                        let (batch, mut trace) =
                            rollout_traced(params, &input, RolloutMode::Sample, starts, seed)?;
                        let baseline = shared_baseline(&batch);
                        let (_, grads) = reinforce_loss(&mut trace, &batch, baseline)?;
                        let mean_len =
                            batch.lengths.iter().sum::<f64>() / batch.len() as f64;
                        Ok(InstanceGrad {
                            monitored: mean_len,
                            grads,
                        })
                    }
                    TrainMode::Supervised => {
                        let tour = cache
                            .get(&(group, idx))
                            .expect("oracle cache filled above");
                        let (loss, grads) = supervised_step(params, &input, tour)?;
                        Ok(InstanceGrad {
                            monitored: loss,
                            grads,
                        })
                    }
                }
            })
            .collect();
        let results = results?;

        let scale = 1.0 / results.len() as f64;
        let mut grads: Vec<Tensor> = self
            .state
            .params
            .entries()
            .iter()
            .map(|(_, t)| Tensor::zeros(t.shape().to_vec()))
            .collect();
        let mut monitored = 0.0;
        for item in &results {
            monitored += item.monitored * scale;
            for (acc, gi) in grads.iter_mut().zip(&item.grads) {
                for (a, b) in acc.data_mut().iter_mut().zip(gi.data()) {
                    *a += b * scale;
                }
            }
        }
        Ok((monitored, grads))
    }

    /// Classical reference tours for supervised training, computed once per
    /// instance: exact Held-Karp when small enough, otherwise 2-opt over
    /// nearest-neighbor (TSP) or the savings construction (CVRP).
    fn fill_oracle_cache(&mut self, group: usize, picks: &[usize]) -> Result<()> {
        let g = &self.dataset.groups()[group];
        let mut missing: Vec<usize> = picks
            .iter()
            .copied()
            .filter(|idx| !self.oracle_cache.contains_key(&(group, *idx)))
            .collect();
        missing.sort_unstable();
        missing.dedup();
        let tours: Result<Vec<(usize, Tour)>> = missing
            .par_iter()
            .map(|&idx| {
                let tour = match &g.instances[idx] {
                    VrpInstance::Tsp(inst) => {
                        if inst.len() <= solvers::HELD_KARP_MAX_N {
                            solvers::held_karp(inst)?
                        } else {
                            solvers::two_opt(inst, &solvers::nearest_neighbor(inst, 0)?)?
                        }
                    }
                    VrpInstance::Cvrp(cvrp) => solvers::cvrp_reference(cvrp)?,
                };
                Ok((idx, tour))
            })
            .collect();
        for (idx, tour) in tours? {
            self.oracle_cache.insert((group, idx), tour);
        }
        Ok(())
    }

    // ------------------------------------------------------------------
    // Checkpointing
    // ------------------------------------------------------------------

    pub fn save(&self, path: &Path) -> Result<()> {
        checkpoint::write_tensors(path, &self.checkpoint_entries())
    }

    fn checkpoint_entries(&self) -> Vec<(String, Tensor)> {
        let mut entries = self.state.params.checkpoint_entries();
        entries.extend(train_config_entries(&self.cfg));
        for ((name, _), v) in self.state.params.entries().iter().zip(&self.state.momentum) {
            entries.push((format!("opt/momentum/{name}"), v.clone()));
        }
        entries.push((
            "state/q".to_string(),
            Tensor::new(vec![self.state.q.len()], self.state.q.as_slice().to_vec()).unwrap(),
        ));
        entries.push((
            "state/outer_step".to_string(),
            Tensor::scalar(self.state.outer_step as f64),
        ));
        entries.push(("state/rng".to_string(), rng_tensor(&rng::capture(&self.state.rng))));
        let hist = &self.state.history;
        entries.push((
            "state/history_step".to_string(),
            Tensor::new(vec![hist.len()], hist.iter().map(|h| h.step as f64).collect()).unwrap(),
        ));
        entries.push((
            "state/history_group".to_string(),
            Tensor::new(vec![hist.len()], hist.iter().map(|h| h.group as f64).collect()).unwrap(),
        ));
        entries.push((
            "state/history_loss".to_string(),
            Tensor::new(vec![hist.len()], hist.iter().map(|h| h.loss).collect()).unwrap(),
        ));
        entries.push((
            "state/group_loss_mean".to_string(),
            Tensor::new(
                vec![self.state.group_loss_mean.len()],
                self.state.group_loss_mean.clone(),
            )
            .unwrap(),
        ));
        entries.push((
            "state/group_loss_count".to_string(),
            Tensor::new(
                vec![self.state.group_loss_count.len()],
                self.state.group_loss_count.iter().map(|&c| c as f64).collect(),
            )
            .unwrap(),
        ));
        entries
    }

    /// Restores a trainer mid-run; continuing reproduces the uninterrupted
    /// run bit-exactly. The stored train config is authoritative.
    pub fn resume(path: &Path, dataset: &'d GroupedDataset) -> Result<Self> {
        let entries = checkpoint::read_tensors(path)?;
        let params = PolicyParams::from_checkpoint_entries(&entries)?;
        let cfg = train_config_from_entries(&entries, params.config().clone())?;
        let find = |name: &str| -> Result<&Tensor> {
            entries
                .iter()
                .find(|(n, _)| n == name)
                .map(|(_, t)| t)
                .ok_or_else(|| Error::Checkpoint(format!("missing entry '{name}'")))
        };
        let mut momentum = Vec::with_capacity(params.entries().len());
        for (name, t) in params.entries() {
            let m = find(&format!("opt/momentum/{name}"))?;
            if m.shape() != t.shape() {
                return Err(Error::Checkpoint(format!("momentum shape mismatch for {name}")));
            }
            momentum.push(m.clone());
        }
        let q = GroupWeights::from_vec(find("state/q")?.data().to_vec())
            .map_err(|e| Error::Checkpoint(format!("bad stored q: {e}")))?;
        if q.len() != dataset.group_count() {
            return Err(Error::Dataset(format!(
                "checkpoint has {} groups, dataset has {}",
                q.len(),
                dataset.group_count()
            )));
        }
        let outer_step = find("state/outer_step")?.item() as usize;
        let rng = rng_from_tensor(find("state/rng")?)?;
        let steps = find("state/history_step")?.data().to_vec();
        let groups = find("state/history_group")?.data().to_vec();
        let losses = find("state/history_loss")?.data().to_vec();
        if steps.len() != groups.len() || steps.len() != losses.len() || steps.len() != outer_step {
            return Err(Error::Checkpoint("inconsistent history length".into()));
        }
        let history = steps
            .iter()
            .zip(&groups)
            .zip(&losses)
            .map(|((s, g), l)| HistoryEntry {
                step: *s as usize,
                group: *g as usize,
                loss: *l,
            })
            .collect();
        let group_loss_mean = find("state/group_loss_mean")?.data().to_vec();
        let group_loss_count = find("state/group_loss_count")?
            .data()
            .iter()
            .map(|&c| c as u64)
            .collect();
        Ok(Trainer {
            cfg,
            dataset,
            state: TrainState {
                params,
                q,
                momentum,
                outer_step,
                rng,
                history,
                group_loss_mean,
                group_loss_count,
            },
            oracle_cache: HashMap::new(),
            started: Instant::now(),
        })
    }
}

/// Dedicated ChaCha stream for the training loop, distinct from dataset
/// generation streams.
const TRAINER_RNG_STREAM: u64 = u64::MAX;

fn rng_tensor(state: &RngState) -> Tensor {
    let mut words = Vec::with_capacity(7);
    for chunk in state.seed.chunks(8) {
        words.push(f64::from_bits(u64::from_le_bytes(chunk.try_into().unwrap())));
    }
    words.push(f64::from_bits(state.stream));
    words.push(f64::from_bits(state.word_pos as u64));
    words.push(f64::from_bits((state.word_pos >> 64) as u64));
    Tensor::new(vec![7], words).unwrap()
}

fn rng_from_tensor(t: &Tensor) -> Result<Rng> {
    if t.numel() != 7 {
        return Err(Error::Checkpoint("bad rng state size".into()));
    }
    let words: Vec<u64> = t.data().iter().map(|v| v.to_bits()).collect();
    let mut seed = [0u8; 32];
    for (i, w) in words[..4].iter().enumerate() {
        seed[i * 8..(i + 1) * 8].copy_from_slice(&w.to_le_bytes());
    }
    let state = RngState {
        seed,
        stream: words[4],
        word_pos: (words[5] as u128) | ((words[6] as u128) << 64),
    };
    Ok(rng::restore(&state))
}

fn train_config_entries(cfg: &TrainConfig) -> Vec<(String, Tensor)> {
    let mode = match cfg.mode {
        TrainMode::Dro => 0.0,
        TrainMode::Erm => 1.0,
        TrainMode::Supervised => 2.0,
    };
    let sampling = match cfg.group_sampling {
        GroupSampling::Uniform => 0.0,
        GroupSampling::SizeProportional => 1.0,
    };
    [
        ("tcfg/eta_theta", cfg.eta_theta),
        ("tcfg/momentum", cfg.momentum),
        ("tcfg/eta_q", cfg.eta_q),
        ("tcfg/outer_steps", cfg.outer_steps as f64),
        ("tcfg/inner_steps", cfg.inner_steps as f64),
        ("tcfg/batch_size", cfg.batch_size as f64),
        ("tcfg/weight_decay", cfg.weight_decay),
        ("tcfg/mode", mode),
        ("tcfg/seed", f64::from_bits(cfg.seed)),
        ("tcfg/starts", cfg.starts as f64),
        (
            "tcfg/normalize_group_loss",
            if cfg.normalize_group_loss { 1.0 } else { 0.0 },
        ),
        ("tcfg/group_sampling", sampling),
        ("tcfg/checkpoint_interval", cfg.checkpoint_interval as f64),
    ]
    .into_iter()
    .map(|(n, v)| (n.to_string(), Tensor::scalar(v)))
    .collect()
}

fn train_config_from_entries(
    entries: &[(String, Tensor)],
    model: crate::policy::PolicyConfig,
) -> Result<TrainConfig> {
    let get = |name: &str| -> Result<f64> {
        entries
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, t)| t.item())
            .ok_or_else(|| Error::Checkpoint(format!("missing entry '{name}'")))
    };
    let mode = match get("tcfg/mode")? as u8 {
        0 => TrainMode::Dro,
        1 => TrainMode::Erm,
        2 => TrainMode::Supervised,
        other => return Err(Error::Checkpoint(format!("bad stored mode {other}"))),
    };
    let group_sampling = match get("tcfg/group_sampling")? as u8 {
        0 => GroupSampling::Uniform,
        1 => GroupSampling::SizeProportional,
        other => return Err(Error::Checkpoint(format!("bad stored sampling {other}"))),
    };
    let cfg = TrainConfig {
        eta_theta: get("tcfg/eta_theta")?,
        momentum: get("tcfg/momentum")?,
        eta_q: get("tcfg/eta_q")?,
        outer_steps: get("tcfg/outer_steps")? as usize,
        inner_steps: get("tcfg/inner_steps")? as usize,
        batch_size: get("tcfg/batch_size")? as usize,
        weight_decay: get("tcfg/weight_decay")?,
        mode,
        seed: get("tcfg/seed")?.to_bits(),
        starts: get("tcfg/starts")? as usize,
        normalize_group_loss: get("tcfg/normalize_group_loss")? != 0.0,
        group_sampling,
        checkpoint_interval: get("tcfg/checkpoint_interval")? as usize,
        model,
    };
    cfg.validate()
        .map_err(|e| Error::Checkpoint(format!("stored config invalid: {e}")))?;
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::{generate, DistributionKind};
    use crate::policy::{rollout, PolicyConfig};

    fn tiny_cfg() -> PolicyConfig {
        PolicyConfig {
            input_dim: 2,
            channels: 8,
            kernel_size: 4,
            neighbors: 3,
            layers: 1,
            heads: 2,
            ff_dim: 16,
            logit_clip: 10.0,
        }
    }

    #[test]
    fn shared_baseline_examples() {
        let batch = RolloutBatch {
            tours: vec![Tour::tsp(vec![0, 1]), Tour::tsp(vec![1, 0])],
            logprobs: vec![-0.5, -0.7],
            lengths: vec![4.0, 6.0],
        };
        assert_eq!(shared_baseline(&batch), 5.0);
        assert_eq!(advantages(&batch, 5.0), vec![-1.0, 1.0]);
        let single = RolloutBatch {
            tours: vec![Tour::tsp(vec![0, 1])],
            logprobs: vec![-0.5],
            lengths: vec![3.0],
        };
        let b = shared_baseline(&single);
        assert_eq!(advantages(&single, b), vec![0.0], "single start has zero advantage");
    }

    #[test]
    fn reinforce_zero_advantage_zero_gradient() {
        let params = PolicyParams::init(tiny_cfg(), 3).unwrap();
        let inst = generate(&DistributionKind::Uniform, 6, 5).unwrap();
        let input = ModelInput::from_vrp(&VrpInstance::Tsp(inst));
        let (mut batch, mut trace) =
            rollout_traced(&params, &input, RolloutMode::Sample, 3, 9).unwrap();
        // Pretend all rollouts had identical length; baseline equals it.
        batch.lengths = vec![4.0; batch.lengths.len()];
        let (loss, grads) = reinforce_loss(&mut trace, &batch, 4.0).unwrap();
        assert_eq!(loss, 0.0);
        for g in grads {
            assert!(g.data().iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn reinforce_empty_batch_is_contract_error() {
        let params = PolicyParams::init(tiny_cfg(), 3).unwrap();
        let inst = generate(&DistributionKind::Uniform, 6, 5).unwrap();
        let input = ModelInput::from_vrp(&VrpInstance::Tsp(inst));
        let (mut batch, mut trace) =
            rollout_traced(&params, &input, RolloutMode::Sample, 1, 9).unwrap();
        batch.tours.clear();
        batch.lengths.clear();
        batch.logprobs.clear();
        assert!(matches!(
            reinforce_loss(&mut trace, &batch, 0.0),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn plain_sgd_when_momentum_and_decay_are_off() {
        let mut params = PolicyParams::init(tiny_cfg(), 1).unwrap();
        let before = params.flat();
        let grad: Vec<Tensor> = params
            .entries()
            .iter()
            .map(|(_, t)| {
                Tensor::new(t.shape().to_vec(), vec![2.0; t.numel()]).unwrap()
            })
            .collect();
        let mut momentum: Vec<Tensor> = params
            .entries()
            .iter()
            .map(|(_, t)| Tensor::zeros(t.shape().to_vec()))
            .collect();
        sgd_step(&mut params, &mut momentum, &grad, 1.0, 0.1, 0.0, 0.0).unwrap();
        for (b, a) in before.iter().zip(params.flat()) {
            assert!((a - (b - 0.2)).abs() < 1e-15);
        }
    }

    #[test]
    fn zero_group_weight_freezes_parameters() {
        let mut params = PolicyParams::init(tiny_cfg(), 2).unwrap();
        let before = params.flat();
        let grad: Vec<Tensor> = params
            .entries()
            .iter()
            .map(|(_, t)| Tensor::new(t.shape().to_vec(), vec![5.0; t.numel()]).unwrap())
            .collect();
        let mut momentum: Vec<Tensor> = params
            .entries()
            .iter()
            .map(|(_, t)| Tensor::zeros(t.shape().to_vec()))
            .collect();
        sgd_step(&mut params, &mut momentum, &grad, 0.0, 0.1, 0.0, 1e-4).unwrap();
        assert_eq!(before, params.flat());
    }

    #[test]
    fn momentum_two_step_closed_form() {
        // Constant gradient g, mu=0.9: displacement after two steps is
        // eta * q * g * (1 + 1.9).
        let mut params = PolicyParams::init(tiny_cfg(), 3).unwrap();
        let before = params.flat();
        let (eta, mu, q, gval) = (0.01, 0.9, 0.5, 3.0);
        let grad: Vec<Tensor> = params
            .entries()
            .iter()
            .map(|(_, t)| Tensor::new(t.shape().to_vec(), vec![gval; t.numel()]).unwrap())
            .collect();
        let mut momentum: Vec<Tensor> = params
            .entries()
            .iter()
            .map(|(_, t)| Tensor::zeros(t.shape().to_vec()))
            .collect();
        sgd_step(&mut params, &mut momentum, &grad, q, eta, mu, 0.0).unwrap();
        sgd_step(&mut params, &mut momentum, &grad, q, eta, mu, 0.0).unwrap();
        let expect = eta * q * gval * (1.0 + 1.9);
        for (b, a) in before.iter().zip(params.flat()) {
            assert!((b - a - expect).abs() < 1e-12, "displacement {}", b - a);
        }
    }

    #[test]
    fn nan_gradient_aborts() {
        let mut params = PolicyParams::init(tiny_cfg(), 4).unwrap();
        let mut grad: Vec<Tensor> = params
            .entries()
            .iter()
            .map(|(_, t)| Tensor::zeros(t.shape().to_vec()))
            .collect();
        grad[0].data_mut()[0] = f64::NAN;
        let mut momentum: Vec<Tensor> = params
            .entries()
            .iter()
            .map(|(_, t)| Tensor::zeros(t.shape().to_vec()))
            .collect();
        let before = params.flat();
        let err = sgd_step(&mut params, &mut momentum, &grad, 1.0, 0.1, 0.9, 0.0);
        assert!(matches!(err, Err(Error::NumericalAbort(_))));
        assert_eq!(before, params.flat(), "no partial update on abort");
    }

    #[test]
    fn rollout_then_reinforce_gradient_is_finite() {
        let params = PolicyParams::init(tiny_cfg(), 11).unwrap();
        let inst = generate(&DistributionKind::Uniform, 8, 6).unwrap();
        let input = ModelInput::from_vrp(&VrpInstance::Tsp(inst));
        let (batch, mut trace) =
            rollout_traced(&params, &input, RolloutMode::Sample, 4, 2).unwrap();
        let baseline = shared_baseline(&batch);
        let (_, grads) = reinforce_loss(&mut trace, &batch, baseline).unwrap();
        assert!(grads.iter().all(|g| g.is_finite()));
        assert!(grads.iter().any(|g| g.data().iter().any(|&v| v != 0.0)));
        let _ = rollout(&params, &input, RolloutMode::Greedy, 2, 0).unwrap();
    }
}
