//! Policy parameter registry: named tensors with deterministic
//! initialization, flat addressing for gradient checks, and checkpoint I/O.

use crate::autodiff::Tensor;
use crate::checkpoint;
use crate::error::{Error, Result};
use crate::rng;
use rand::Rng as _;
use std::path::Path;

/// Architecture hyperparameters.
///
/// The convolutional window over a node and its K nearest neighbors has
/// length K+1 and is cyclically extended to `kernel_size`, producing exactly
/// one convolution output per node; `kernel_size >= neighbors + 1` is
/// therefore required (equality at paper scale: K=10, kernel 11).
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyConfig {
    /// Per-node input features: 2 for TSP (x, y), 3 for CVRP (x, y, demand).
    pub input_dim: usize,
    /// Embedding width C.
    pub channels: usize,
    /// Convolution kernel size over the neighbor window.
    pub kernel_size: usize,
    /// Neighbor count K.
    pub neighbors: usize,
    /// Encoder layer count.
    pub layers: usize,
    /// Attention heads per layer; must divide `channels`.
    pub heads: usize,
    /// Feed-forward hidden width.
    pub ff_dim: usize,
    /// Decoder logits are `clip * tanh(u)`.
    pub logit_clip: f64,
}

impl PolicyConfig {
    /// Desk-scale TSP model: C=32, K=4, kernel 5, 2 layers.
    pub fn desk_tsp() -> Self {
        PolicyConfig {
            input_dim: 2,
            channels: 32,
            kernel_size: 5,
            neighbors: 4,
            layers: 2,
            heads: 4,
            ff_dim: 64,
            logit_clip: 10.0,
        }
    }

    /// Desk-scale CVRP model (adds the demand feature and capacity context).
    pub fn desk_cvrp() -> Self {
        PolicyConfig {
            input_dim: 3,
            ..Self::desk_tsp()
        }
    }

    /// Paper-scale dimensions: C=128, K=10, kernel 11, 3 layers.
    pub fn paper_tsp() -> Self {
        PolicyConfig {
            input_dim: 2,
            channels: 128,
            kernel_size: 11,
            neighbors: 10,
            layers: 3,
            heads: 8,
            ff_dim: 256,
            logit_clip: 10.0,
        }
    }

    pub fn paper_cvrp() -> Self {
        PolicyConfig {
            input_dim: 3,
            ..Self::paper_tsp()
        }
    }

    pub fn is_cvrp(&self) -> bool {
        self.input_dim == 3
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_dim != 2 && self.input_dim != 3 {
            return Err(Error::Config(format!(
                "input_dim {} must be 2 (TSP) or 3 (CVRP)",
                self.input_dim
            )));
        }
        if self.channels == 0 || self.layers == 0 || self.ff_dim == 0 {
            return Err(Error::Config("zero-sized model dimension".into()));
        }
        if self.heads == 0 || self.channels % self.heads != 0 {
            return Err(Error::Config(format!(
                "heads {} must divide channels {}",
                self.heads, self.channels
            )));
        }
        if self.neighbors == 0 {
            return Err(Error::Config("neighbors must be >= 1".into()));
        }
        if self.kernel_size < self.neighbors + 1 {
            return Err(Error::Config(format!(
                "kernel_size {} shorter than neighbor window {}",
                self.kernel_size,
                self.neighbors + 1
            )));
        }
        if !(self.logit_clip > 0.0) {
            return Err(Error::Config("logit_clip must be > 0".into()));
        }
        Ok(())
    }

    pub fn head_dim(&self) -> usize {
        self.channels / self.heads
    }

    /// Registry of (name, shape, fan_in) in fixed order. The fan-in drives
    /// the uniform(+-1/sqrt(fan_in)) initialization.
    fn registry(&self) -> Vec<(String, Vec<usize>, usize)> {
        let (c, ks, f) = (self.channels, self.kernel_size, self.input_dim);
        let dh = self.head_dim();
        let mut reg = vec![
            ("embed.conv_kernel".to_string(), vec![c, ks, f], ks * f),
            ("embed.w1".to_string(), vec![f, c], f),
            ("embed.w2".to_string(), vec![c, c], c),
        ];
        for l in 0..self.layers {
            for h in 0..self.heads {
                reg.push((format!("enc{l}.attn.wq{h}"), vec![c, dh], c));
                reg.push((format!("enc{l}.attn.wk{h}"), vec![c, dh], c));
                reg.push((format!("enc{l}.attn.wv{h}"), vec![c, dh], c));
                reg.push((format!("enc{l}.attn.wo{h}"), vec![dh, c], dh));
            }
            reg.push((format!("enc{l}.ff.w_in"), vec![c, self.ff_dim], c));
            reg.push((format!("enc{l}.ff.w_out"), vec![self.ff_dim, c], self.ff_dim));
        }
        reg.push(("dec.wk".to_string(), vec![c, c], c));
        reg.push(("dec.wg".to_string(), vec![c, c], c));
        reg.push(("dec.wl".to_string(), vec![c, c], c));
        if self.is_cvrp() {
            reg.push(("dec.wc".to_string(), vec![1, c], 1));
        }
        reg
    }
}

/// All trainable tensors of the policy, flat-addressable in registry order.
#[derive(Debug, Clone)]
pub struct PolicyParams {
    cfg: PolicyConfig,
    entries: Vec<(String, Tensor)>,
}

impl PolicyParams {
    /// Deterministic init: each tensor filled row-major with
    /// uniform(+-1/sqrt(fan_in)) draws, tensors in registry order.
    pub fn init(cfg: PolicyConfig, seed: u64) -> Result<Self> {
        cfg.validate()?;
        let mut rng = rng::seeded(seed);
        let entries = cfg
            .registry()
            .into_iter()
            .map(|(name, shape, fan_in)| {
                let bound = 1.0 / (fan_in as f64).sqrt();
                let numel: usize = shape.iter().product();
                let data = (0..numel)
                    .map(|_| rng.random_range(-bound..bound))
                    .collect();
                (name, Tensor::new(shape, data).expect("registry shapes"))
            })
            .collect();
        Ok(PolicyParams { cfg, entries })
    }

    /// All-zero parameters (identity encoder, uniform decoder); test helper.
    pub fn zeros(cfg: PolicyConfig) -> Result<Self> {
        cfg.validate()?;
        let entries = cfg
            .registry()
            .into_iter()
            .map(|(name, shape, _)| (name, Tensor::zeros(shape)))
            .collect();
        Ok(PolicyParams { cfg, entries })
    }

    pub fn config(&self) -> &PolicyConfig {
        &self.cfg
    }

    pub fn entries(&self) -> &[(String, Tensor)] {
        &self.entries
    }

    pub fn tensor(&self, name: &str) -> Option<&Tensor> {
        self.entries
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, t)| t)
    }

    pub fn set_tensor(&mut self, name: &str, tensor: Tensor) -> Result<()> {
        let entry = self
            .entries
            .iter_mut()
            .find(|(n, _)| n == name)
            .ok_or_else(|| Error::Parameter(format!("no parameter named '{name}'")))?;
        if entry.1.shape() != tensor.shape() {
            return Err(Error::Shape(format!(
                "'{name}' expects {:?}, got {:?}",
                entry.1.shape(),
                tensor.shape()
            )));
        }
        entry.1 = tensor;
        Ok(())
    }

    pub fn tensors_mut(&mut self) -> impl Iterator<Item = &mut Tensor> {
        self.entries.iter_mut().map(|(_, t)| t)
    }

    pub fn flat_len(&self) -> usize {
        self.entries.iter().map(|(_, t)| t.numel()).sum()
    }

    /// Concatenation of all tensors in registry order.
    pub fn flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.flat_len());
        for (_, t) in &self.entries {
            out.extend_from_slice(t.data());
        }
        out
    }

    pub fn set_flat(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.flat_len() {
            return Err(Error::Shape(format!(
                "flat vector length {} vs {}",
                flat.len(),
                self.flat_len()
            )));
        }
        let mut offset = 0;
        for (_, t) in &mut self.entries {
            let n = t.numel();
            t.data_mut().copy_from_slice(&flat[offset..offset + n]);
            offset += n;
        }
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.entries.iter().all(|(_, t)| t.is_finite())
    }

    /// Serializes the config followed by every parameter tensor.
    pub fn checkpoint_entries(&self) -> Vec<(String, Tensor)> {
        let mut out = config_entries(&self.cfg);
        out.extend(self.entries.iter().cloned());
        out
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        checkpoint::write_tensors(path, &self.checkpoint_entries())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let entries = checkpoint::read_tensors(path)?;
        Self::from_checkpoint_entries(&entries)
    }

    /// Rebuilds params from checkpoint entries (extra entries such as
    /// optimizer state are ignored); missing tensors or shape mismatches are
    /// checkpoint errors.
    pub fn from_checkpoint_entries(entries: &[(String, Tensor)]) -> Result<Self> {
        let cfg = config_from_entries(entries)?;
        let mut params = Self::zeros(cfg)?;
        for (name, shape, _) in params.cfg.registry() {
            let found = entries
                .iter()
                .find(|(n, _)| *n == name)
                .ok_or_else(|| Error::Checkpoint(format!("missing tensor '{name}'")))?;
            if found.1.shape() != shape {
                return Err(Error::Checkpoint(format!(
                    "tensor '{name}' has shape {:?}, expected {:?}",
                    found.1.shape(),
                    shape
                )));
            }
            params.set_tensor(&name, found.1.clone())?;
        }
        Ok(params)
    }
}

fn config_entries(cfg: &PolicyConfig) -> Vec<(String, Tensor)> {
    [
        ("cfg/input_dim", cfg.input_dim as f64),
        ("cfg/channels", cfg.channels as f64),
        ("cfg/kernel_size", cfg.kernel_size as f64),
        ("cfg/neighbors", cfg.neighbors as f64),
        ("cfg/layers", cfg.layers as f64),
        ("cfg/heads", cfg.heads as f64),
        ("cfg/ff_dim", cfg.ff_dim as f64),
        ("cfg/logit_clip", cfg.logit_clip),
    ]
    .into_iter()
    .map(|(n, v)| (n.to_string(), Tensor::scalar(v)))
    .collect()
}

fn config_from_entries(entries: &[(String, Tensor)]) -> Result<PolicyConfig> {
    let get = |name: &str| -> Result<f64> {
        entries
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, t)| t.item())
            .ok_or_else(|| Error::Checkpoint(format!("missing config entry '{name}'")))
    };
    let cfg = PolicyConfig {
        input_dim: get("cfg/input_dim")? as usize,
        channels: get("cfg/channels")? as usize,
        kernel_size: get("cfg/kernel_size")? as usize,
        neighbors: get("cfg/neighbors")? as usize,
        layers: get("cfg/layers")? as usize,
        heads: get("cfg/heads")? as usize,
        ff_dim: get("cfg/ff_dim")? as usize,
        logit_clip: get("cfg/logit_clip")?,
    };
    cfg.validate()
        .map_err(|e| Error::Checkpoint(format!("invalid checkpoint config: {e}")))?;
    Ok(cfg)
}
