//! The neural routing policy: distribution-aware embedding, encoder,
//! autoregressive masked decoder, and multi-start rollouts.

mod model;
mod params;

pub use model::{
    embed, embed_values, encode, encode_matrix, encode_values, knn, logprob_and_grad,
    logprob_of_tour, rollout, rollout_traced, BoundParams, ModelInput, RolloutMode, RolloutTrace,
};
pub use params::{PolicyConfig, PolicyParams};


#[cfg(test)]
mod embed_grad_tests {
    use super::*;
    use crate::autodiff::{check_gradients, Tape, Tensor};
    use crate::instances::{generate, DistributionKind, VrpInstance};

    /// Finite differences of ||H||^2 with respect to the convolution
    /// kernels, through the embedding alone.
    #[test]
    fn embed_norm_gradient_matches_finite_differences() {
        let cfg = PolicyConfig {
            input_dim: 2,
            channels: 8,
            kernel_size: 4,
            neighbors: 3,
            layers: 1,
            heads: 2,
            ff_dim: 16,
            logit_clip: 10.0,
        };
        let base = PolicyParams::init(cfg.clone(), 17).unwrap();
        let inst = generate(&DistributionKind::Uniform, 9, 23).unwrap();
        let input = ModelInput::from_vrp(&VrpInstance::Tsp(inst));
        let table = knn(&input.points, cfg.neighbors).unwrap();

        let mut kernel = vec![base.tensor("embed.conv_kernel").unwrap().clone()];
        let mut eval = |ts: &[Tensor]| {
            let mut params = base.clone();
            params.set_tensor("embed.conv_kernel", ts[0].clone()).unwrap();
            let mut tape = Tape::new();
            let bound = BoundParams::bind(&mut tape, &params);
            let feats = tape.leaf(input.features.clone());
            let h = embed(&mut tape, &bound, &cfg, feats, &table).unwrap();
            let sq = tape.mul(h, h).unwrap();
            let loss = tape.sum(sq);
            let grads = tape.grad(loss).unwrap();
            let kid = bound.node("embed.conv_kernel");
            (
                tape.value(loss).item(),
                vec![grads.get(kid, &ts[0])],
            )
        };
        let report = check_gradients(&mut eval, &mut kernel, 64, 1e-5, 6);
        assert!(
            report.max_rel_err <= 1e-5,
            "max rel err {}",
            report.max_rel_err
        );
    }
}
