//! Training configuration and its line-oriented `key = value` file format.

use crate::error::{Error, Result};
use crate::policy::PolicyConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrainMode {
    /// REINFORCE with exponentiated-gradient group weights.
    Dro,
    /// REINFORCE with weights frozen at group-size proportions.
    Erm,
    /// Cross-entropy toward classical reference tours, with group weights.
    Supervised,
}

impl TrainMode {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "dro" => Ok(TrainMode::Dro),
            "erm" => Ok(TrainMode::Erm),
            "supervised" => Ok(TrainMode::Supervised),
            other => Err(Error::Config(format!(
                "mode '{other}' is not one of dro|erm|supervised"
            ))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            TrainMode::Dro => "dro",
            TrainMode::Erm => "erm",
            TrainMode::Supervised => "supervised",
        }
    }
}

/// How the outer loop picks the group to train on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GroupSampling {
    /// Every group equally often, so minority groups are visited as often
    /// as the majority.
    Uniform,
    /// Proportional to group sizes.
    SizeProportional,
}

impl GroupSampling {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(GroupSampling::Uniform),
            "size_proportional" => Ok(GroupSampling::SizeProportional),
            other => Err(Error::Config(format!(
                "group_sampling '{other}' is not one of uniform|size_proportional"
            ))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            GroupSampling::Uniform => "uniform",
            GroupSampling::SizeProportional => "size_proportional",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    /// Parameter learning rate.
    pub eta_theta: f64,
    /// SGD momentum, in [0, 1).
    pub momentum: f64,
    /// Group-weight step size.
    pub eta_q: f64,
    /// Outer iterations T.
    pub outer_steps: usize,
    /// Inner iterations T' per sampled group.
    pub inner_steps: usize,
    pub batch_size: usize,
    /// L2 coefficient applied inside the group-weighted update.
    pub weight_decay: f64,
    pub mode: TrainMode,
    pub seed: u64,
    /// Rollout starts per instance; 0 means `min(n, 8)`.
    pub starts: usize,
    /// Divide each group's reported loss by its running mean before the
    /// weight update; off by default so raw mean tour lengths drive q.
    pub normalize_group_loss: bool,
    pub group_sampling: GroupSampling,
    /// Checkpoint every this many outer steps; 0 disables.
    pub checkpoint_interval: usize,
    pub model: PolicyConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            eta_theta: 1e-4,
            momentum: 0.9,
            eta_q: 0.01,
            outer_steps: 100,
            inner_steps: 1,
            batch_size: 8,
            weight_decay: 1e-4,
            mode: TrainMode::Dro,
            seed: 0,
            starts: 0,
            normalize_group_loss: false,
            group_sampling: GroupSampling::Uniform,
            checkpoint_interval: 0,
            model: PolicyConfig::desk_tsp(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.eta_theta > 0.0) {
            return Err(Error::Config("eta_theta must be > 0".into()));
        }
        if !(self.eta_q > 0.0) {
            return Err(Error::Config("eta_q must be > 0".into()));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::Config("momentum must be in [0, 1)".into()));
        }
        if self.outer_steps < 1 || self.inner_steps < 1 {
            return Err(Error::Config("outer_steps and inner_steps must be >= 1".into()));
        }
        if self.batch_size < 1 {
            return Err(Error::Config("batch_size must be >= 1".into()));
        }
        if !(self.weight_decay >= 0.0) {
            return Err(Error::Config("weight_decay must be >= 0".into()));
        }
        self.model
            .validate()
            .map_err(|e| Error::Config(format!("model: {e}")))
    }

    /// Parses the `key = value` config text. Unknown keys are errors;
    /// missing keys keep their defaults. Lines starting with `#` are
    /// comments.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = TrainConfig::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("line {}: expected 'key = value'", lineno + 1))
            })?;
            let (key, value) = (key.trim(), value.trim());
            cfg.apply(key, value)
                .map_err(|e| Error::Config(format!("line {}: {e}", lineno + 1)))?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn apply(&mut self, key: &str, value: &str) -> Result<()> {
        fn num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
            value
                .parse()
                .map_err(|_| Error::Config(format!("bad value '{value}' for {key}")))
        }
        match key {
            "eta_theta" => self.eta_theta = num(key, value)?,
            "momentum" => self.momentum = num(key, value)?,
            "eta_q" => self.eta_q = num(key, value)?,
            "outer_steps" => self.outer_steps = num(key, value)?,
            "inner_steps" => self.inner_steps = num(key, value)?,
            "batch_size" => self.batch_size = num(key, value)?,
            "weight_decay" => self.weight_decay = num(key, value)?,
            "mode" => self.mode = TrainMode::parse(value)?,
            "seed" => self.seed = num(key, value)?,
            "starts" => self.starts = num(key, value)?,
            "normalize_group_loss" => self.normalize_group_loss = num(key, value)?,
            "group_sampling" => self.group_sampling = GroupSampling::parse(value)?,
            "checkpoint_interval" => self.checkpoint_interval = num(key, value)?,
            "model_input_dim" => self.model.input_dim = num(key, value)?,
            "model_channels" => self.model.channels = num(key, value)?,
            "model_kernel_size" => self.model.kernel_size = num(key, value)?,
            "model_neighbors" => self.model.neighbors = num(key, value)?,
            "model_layers" => self.model.layers = num(key, value)?,
            "model_heads" => self.model.heads = num(key, value)?,
            "model_ff_dim" => self.model.ff_dim = num(key, value)?,
            "model_logit_clip" => self.model.logit_clip = num(key, value)?,
            other => return Err(Error::Config(format!("unknown key '{other}'"))),
        }
        Ok(())
    }

    /// Config text that parses back to this config.
    pub fn to_text(&self) -> String {
        format!(
            "eta_theta = {}\nmomentum = {}\neta_q = {}\nouter_steps = {}\n\
             inner_steps = {}\nbatch_size = {}\nweight_decay = {}\nmode = {}\n\
             seed = {}\nstarts = {}\nnormalize_group_loss = {}\ngroup_sampling = {}\n\
             checkpoint_interval = {}\nmodel_input_dim = {}\nmodel_channels = {}\n\
             model_kernel_size = {}\nmodel_neighbors = {}\nmodel_layers = {}\n\
             model_heads = {}\nmodel_ff_dim = {}\nmodel_logit_clip = {}\n",
            self.eta_theta,
            self.momentum,
            self.eta_q,
            self.outer_steps,
            self.inner_steps,
            self.batch_size,
            self.weight_decay,
            self.mode.name(),
            self.seed,
            self.starts,
            self.normalize_group_loss,
            self.group_sampling.name(),
            self.checkpoint_interval,
            self.model.input_dim,
            self.model.channels,
            self.model.kernel_size,
            self.model.neighbors,
            self.model.layers,
            self.model.heads,
            self.model.ff_dim,
            self.model.logit_clip,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_overrides_and_defaults() {
        let cfg = TrainConfig::parse(
            "# comment\n\
             eta_theta = 0.01\n\
             mode = erm\n\
             outer_steps = 50\n\
             model_channels = 16\n\
             model_heads = 2\n",
        )
        .unwrap();
        assert_eq!(cfg.eta_theta, 0.01);
        assert_eq!(cfg.mode, TrainMode::Erm);
        assert_eq!(cfg.outer_steps, 50);
        assert_eq!(cfg.model.channels, 16);
        assert_eq!(cfg.momentum, 0.9, "default kept");
    }

    #[test]
    fn unknown_key_is_a_config_error() {
        assert!(matches!(
            TrainConfig::parse("etatheta = 1\n"),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn invalid_values_are_config_errors() {
        assert!(TrainConfig::parse("momentum = 1.0\n").is_err());
        assert!(TrainConfig::parse("eta_theta = 0\n").is_err());
        assert!(TrainConfig::parse("mode = adam\n").is_err());
    }

    #[test]
    fn text_round_trip() {
        let mut cfg = TrainConfig::default();
        cfg.mode = TrainMode::Supervised;
        cfg.eta_q = 0.05;
        cfg.model.channels = 16;
        cfg.model.heads = 2;
        let parsed = TrainConfig::parse(&cfg.to_text()).unwrap();
        assert_eq!(cfg, parsed);
    }
}
