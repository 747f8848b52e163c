//! Central finite-difference check of the manual backward pass.

use super::mlp::{Gradients, Mlp};
use super::qlearn::{compute_targets, td_loss, QLearnerConfig, TrainingBatch};
use super::NetError;

pub const MAX_CHECKED_PARAMS: usize = 10_000;
pub const FD_STEP: f64 = 1e-4;
const REL_FLOOR: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct GradientReport {
    pub analytic: Vec<f64>,
    pub numeric: Vec<f64>,
    pub max_rel_error: f64,
}

pub fn relative_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(REL_FLOOR)
}

/// Compares backprop against central differences of the TD loss. Targets
/// are computed once with `net` acting as both online and target network
/// and then held fixed, as in training.
pub fn gradient_check(net: &Mlp, batch: &TrainingBatch, cfg: &QLearnerConfig) -> Result<GradientReport, NetError> {
    check_with(net, batch, cfg, |net, cache, grad_out| net.backward(cache, grad_out))
}

/// Like [`gradient_check`] with a caller-supplied backward pass.
pub fn check_with<F>(net: &Mlp, batch: &TrainingBatch, cfg: &QLearnerConfig, backward: F) -> Result<GradientReport, NetError>
where
    F: Fn(&Mlp, &super::mlp::ForwardCache, &[f64]) -> Gradients,
{
    if net.param_count() > MAX_CHECKED_PARAMS {
        return Err(NetError::TooManyParameters(net.param_count()));
    }
    let targets = compute_targets(batch, net, net, cfg)?;
    let n_act = net.n_actions();
    let loss_at = |probe: &Mlp| -> Result<f64, NetError> {
        let cache = probe.forward_cached(&batch.states, batch.len)?;
        Ok(td_loss(&cache, &batch.actions, &targets, n_act).0)
    };

    let cache = net.forward_cached(&batch.states, batch.len)?;
    let (_, grad_out) = td_loss(&cache, &batch.actions, &targets, n_act);
    let analytic = backward(net, &cache, &grad_out).flat();

    let mut probe = net.clone();
    let mut numeric = Vec::with_capacity(analytic.len());
    for k in 0..net.param_count() {
        let orig = *probe.param_mut(k);
        *probe.param_mut(k) = orig + FD_STEP;
        let plus = loss_at(&probe)?;
        *probe.param_mut(k) = orig - FD_STEP;
        let minus = loss_at(&probe)?;
        *probe.param_mut(k) = orig;
        numeric.push((plus - minus) / (2.0 * FD_STEP));
    }
    let max_rel_error = analytic.iter().zip(&numeric).map(|(&a, &n)| relative_error(a, n)).fold(0.0, f64::max);
    Ok(GradientReport { analytic, numeric, max_rel_error })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    pub(crate) fn random_batch(rng: &mut ChaCha8Rng, n: usize, dim: usize, n_act: usize) -> TrainingBatch {
        TrainingBatch {
            len: n,
            states: (0..n * dim).map(|_| rng.gen_range(-1.0..1.0)).collect(),
            actions: (0..n).map(|_| rng.gen_range(0..n_act)).collect(),
            rewards: (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect(),
            next_states: (0..n * dim).map(|_| rng.gen_range(-1.0..1.0)).collect(),
            dones: (0..n).map(|_| rng.gen_bool(0.3)).collect(),
        }
    }

    #[test]
    fn backprop_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let net = Mlp::new(4, &[8, 6], 3, &mut rng);
        let batch = random_batch(&mut rng, 5, 4, 3);
        let report = gradient_check(&net, &batch, &QLearnerConfig::default()).unwrap();
        assert!(report.max_rel_error <= 1e-4, "{}", report.max_rel_error);
    }

    #[test]
    fn zero_loss_gives_zero_gradients() {
        let net = Mlp::zeros(3, &[4], 2);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut batch = random_batch(&mut rng, 4, 3, 2);
        batch.rewards.iter_mut().for_each(|r| *r = 0.0);
        batch.dones.iter_mut().for_each(|d| *d = true);
        let report = gradient_check(&net, &batch, &QLearnerConfig::default()).unwrap();
        assert!(report.analytic.iter().all(|&g| g == 0.0));
        assert!(report.numeric.iter().all(|&g| g == 0.0));
    }

    #[test]
    fn corrupted_backprop_is_caught() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let net = Mlp::new(4, &[8], 2, &mut rng);
        let batch = random_batch(&mut rng, 6, 4, 2);
        let report = check_with(&net, &batch, &QLearnerConfig::default(), |net, cache, g| {
            let mut grads = net.backward(cache, g);
            // Drop the bias gradient of the first layer.
            grads.layers[0].bias.iter_mut().for_each(|b| *b = 0.0);
            grads
        })
        .unwrap();
        assert!(report.max_rel_error > 1e-2, "{}", report.max_rel_error);
    }

    #[test]
    fn oversized_network_is_refused() {
        let net = Mlp::zeros(100, &[100], 2);
        let batch = TrainingBatch { len: 1, states: vec![0.0; 100], actions: vec![0], rewards: vec![0.0], next_states: vec![0.0; 100], dones: vec![true] };
        assert!(matches!(gradient_check(&net, &batch, &QLearnerConfig::default()), Err(NetError::TooManyParameters(_))));
    }
}
