//! Training loop: Adam optimization, threshold-gated activation of material
//! updates and experimental losses, sigmoid fade-in, rolling-window learning
//! rate scheduling and early stopping, and the delayed learnable contact
//! parameter.

mod objective;

pub use objective::{eval_network, Objective};

use std::collections::VecDeque;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::adnet::{init_network, NetworkParams, NetworkSpec};
use crate::error::{Error, Result};
use crate::residuals::{LossBundle, LossWeights};

/// Hyperparameters of one training run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainConfig {
    pub max_epochs: usize,
    /// Initial learning rate η.
    pub lr: f64,
    /// Gate threshold L_thr on the total loss.
    pub loss_threshold: f64,
    /// Fade-in transition length s_t in epochs.
    pub fade_epochs: f64,
    /// Rolling-window length k of the scheduler (also its patience).
    pub window: usize,
    /// Early-stop window (k + 500 by default).
    pub stop_window: usize,
    /// Learning-rate reduction factor.
    pub lr_factor: f64,
    /// Stop once the total loss reaches the analytic reference.
    pub reference_loss: f64,
    pub weights: LossWeights,
    pub seed: u64,
    /// Ablation: activate experimental losses and material updates from
    /// epoch 0 instead of waiting for the threshold.
    #[serde(default)]
    pub immediate_experimental: bool,
    /// Ablation: skip the sigmoid fade (f ≡ 1 once the gate opens).
    #[serde(default)]
    pub disable_fade: bool,
    /// Ablation: ordinary best-ever plateau scheduler instead of the
    /// rolling window.
    #[serde(default)]
    pub disable_rolling_window: bool,
    /// Persist a checkpoint every this many epochs (0 = only at stop).
    pub checkpoint_every: usize,
    /// Mini-batch size over the PDE set; 0 trains full-batch.
    #[serde(default)]
    pub batch_size: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            max_epochs: 100_000,
            lr: 1e-3,
            loss_threshold: 1e-3,
            fade_epochs: 1500.0,
            window: 1000,
            stop_window: 1500,
            lr_factor: 0.1,
            reference_loss: 3.01e-7,
            weights: LossWeights::default(),
            seed: 0,
            immediate_experimental: false,
            disable_fade: false,
            disable_rolling_window: false,
            checkpoint_every: 1000,
            batch_size: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_epochs == 0 || self.lr <= 0.0 || self.window == 0 || self.stop_window < self.window {
            return Err(Error::Config(
                "training needs max_epochs > 0, lr > 0, window > 0, stop_window >= window".into(),
            ));
        }
        Ok(())
    }
}

/// Sigmoid fade factor f = 1/(1 + exp(−0.01·(s − s_ref − s_t))).
pub fn fade_factor(epoch: usize, epoch_ref: usize, fade_epochs: f64) -> f64 {
    let x = -0.01 * (epoch as f64 - epoch_ref as f64 - fade_epochs);
    1.0 / (1.0 + x.exp())
}

/// Mutable run state threaded through the strategy state machines.
#[derive(Debug, Clone)]
pub struct TrainState {
    pub epoch: usize,
    pub lr: f64,
    pub n_bad: usize,
    pub n_stall: usize,
    pub gate_material: bool,
    pub gate_experimental: bool,
    pub epoch_ref: Option<usize>,
    /// Learnable log(n); present once registered (inverse model, open gate).
    pub log_n_spots: Option<f64>,
    /// Best total loss ever seen (used by the plateau-scheduler ablation).
    pub best_ever: f64,
    /// Rolling loss history, newest last, capped at stop_window + 1.
    history: VecDeque<f64>,
}

impl TrainState {
    pub fn new(lr: f64) -> Self {
        Self {
            epoch: 0,
            lr,
            n_bad: 0,
            n_stall: 0,
            gate_material: false,
            gate_experimental: false,
            epoch_ref: None,
            log_n_spots: None,
            best_ever: f64::INFINITY,
            history: VecDeque::new(),
        }
    }

    pub fn n_spots(&self) -> Option<f64> {
        self.log_n_spots.map(f64::exp)
    }

    pub fn history_len(&self) -> usize {
        self.history.len()
    }
}

/// Latch the gates open on the first epoch whose total loss reaches the
/// threshold; records the reference epoch and registers the contact-spot
/// count as learnable for the inverse model. Gates never re-close.
pub fn gate_check(total_loss: f64, cfg: &TrainConfig, state: &mut TrainState, n_spots_init: Option<f64>) {
    if state.gate_experimental {
        return;
    }
    if total_loss <= cfg.loss_threshold {
        state.gate_material = true;
        state.gate_experimental = true;
        state.epoch_ref = Some(state.epoch);
        if let Some(n0) = n_spots_init {
            state.log_n_spots = Some(n0.ln());
        }
    }
}

/// Rolling-window bad-epoch update: compare against the best loss within
/// the last `window` epochs (including the current one); reset on
/// improvement or after a reduction fired.
pub fn update_bad_epochs(state: &mut TrainState, loss: f64, cfg: &TrainConfig) {
    state.history.push_back(loss);
    while state.history.len() > cfg.stop_window + 1 {
        state.history.pop_front();
    }
    let window_best = if cfg.disable_rolling_window {
        // Ordinary plateau scheduler: best loss ever seen.
        state
            .best_ever
            .min(loss)
    } else {
        state
            .history
            .iter()
            .rev()
            .take(cfg.window + 1)
            .fold(f64::INFINITY, |m, &v| m.min(v))
    };
    if loss > window_best {
        state.n_bad += 1;
    } else {
        state.n_bad = 0;
    }
    if loss < state.best_ever {
        state.best_ever = loss;
    }
}

/// Multiply the learning rate by the reduction factor exactly when the
/// bad-epoch count reaches the window length, then reset the counter.
pub fn maybe_reduce_lr(state: &mut TrainState, cfg: &TrainConfig) -> bool {
    if state.n_bad >= cfg.window {
        state.lr *= cfg.lr_factor;
        state.n_bad = 0;
        true
    } else {
        false
    }
}

/// Early-stop rule: `true` once no loss within the stop window improved on
/// the minimum preceding it, i.e. after `stop_window` consecutive
/// non-improving epochs, or when the reference loss is reached.
pub fn early_stop_check(state: &mut TrainState, loss: f64, cfg: &TrainConfig) -> bool {
    if loss <= cfg.reference_loss {
        return true;
    }
    let prior_best = if cfg.disable_rolling_window {
        if state.epoch == 0 { f64::INFINITY } else { state.best_ever }
    } else if state.history.len() <= 1 {
        f64::INFINITY
    } else {
        // Window of losses preceding the current one.
        state
            .history
            .iter()
            .rev()
            .skip(1)
            .take(cfg.stop_window)
            .fold(f64::INFINITY, |m, &v| m.min(v))
    };
    if loss < prior_best {
        state.n_stall = 0;
    } else {
        state.n_stall += 1;
    }
    state.n_stall >= cfg.stop_window
}

/// Standard Adam with bias correction.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Adam {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub t: usize,
    pub m: Vec<f64>,
    pub v: Vec<f64>,
}

impl Adam {
    pub fn new(n: usize) -> Self {
        Self { beta1: 0.9, beta2: 0.999, eps: 1e-8, t: 0, m: vec![0.0; n], v: vec![0.0; n] }
    }

    /// One bias-corrected descent step; errors on non-finite gradients.
    pub fn step(&mut self, params: &mut [f64], grad: &[f64], lr: f64) -> Result<()> {
        assert_eq!(params.len(), grad.len());
        assert_eq!(params.len(), self.m.len());
        if grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::Numeric("non-finite gradient in Adam step".into()));
        }
        self.t += 1;
        let b1t = 1.0 - self.beta1.powi(self.t as i32);
        let b2t = 1.0 - self.beta2.powi(self.t as i32);
        for i in 0..params.len() {
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * grad[i];
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * grad[i] * grad[i];
            let m_hat = self.m[i] / b1t;
            let v_hat = self.v[i] / b2t;
            params[i] -= lr * m_hat / (v_hat.sqrt() + self.eps);
        }
        Ok(())
    }
}

/// Why a run ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    MaxEpochs,
    EarlyStop,
    ReferenceReached,
}

/// Everything a finished run hands back.
pub struct TrainArtifacts {
    pub params: NetworkParams,
    pub state: TrainState,
    pub bundles: Vec<LossBundle>,
    pub lr_log: Vec<f64>,
    pub final_bundle: LossBundle,
    pub stop_reason: StopReason,
    /// Trace of the learnable contact-spot count, one entry per epoch after
    /// registration.
    pub n_spots_trace: Vec<f64>,
}

/// Run the full strategy pipeline on a prepared objective.
///
/// Phases: constant-property optimization until the loss threshold opens the
/// gates, then per-point material updates plus faded-in experimental losses,
/// throughout governed by the rolling-window scheduler and early stopping.
/// Checkpoints are written to `out_dir` when given; the loss log streams to
/// `loss_log.csv` there.
pub fn train(
    objective: &Objective,
    spec: &NetworkSpec,
    cfg: &TrainConfig,
    out_dir: Option<&std::path::Path>,
) -> Result<TrainArtifacts> {
    cfg.validate()?;
    let mut params = init_network(spec)?;
    let n_net = spec.param_count();
    let mut adam = Adam::new(n_net);
    let mut adam_n = Adam::new(1);
    let mut state = TrainState::new(cfg.lr);
    state.best_ever = f64::INFINITY;

    let mut log_file = match out_dir {
        Some(dir) => {
            std::fs::create_dir_all(dir)?;
            let mut f = std::fs::File::create(dir.join("loss_log.csv"))?;
            writeln!(f, "{}", LossBundle::CSV_HEADER)?;
            Some(f)
        }
        None => None,
    };

    if cfg.immediate_experimental {
        state.gate_material = true;
        state.gate_experimental = true;
        state.epoch_ref = Some(0);
        if objective.has_learnable_n() {
            state.log_n_spots = Some(objective.n_spots_init().ln());
        }
    }

    let mut bundles: Vec<LossBundle> = Vec::new();
    let mut lr_log: Vec<f64> = Vec::new();
    let mut n_trace: Vec<f64> = Vec::new();
    let mut stop_reason = StopReason::MaxEpochs;

    for epoch in 0..cfg.max_epochs {
        state.epoch = epoch;
        let fade = match (state.gate_experimental, state.epoch_ref) {
            (true, Some(s_ref)) => {
                if cfg.disable_fade {
                    1.0
                } else {
                    fade_factor(epoch, s_ref, cfg.fade_epochs)
                }
            }
            _ => 0.0,
        };

        let (mut bundle, grad) = objective.eval(&params, &state, fade, epoch)?;
        let total = crate::residuals::total_loss(&mut bundle, &cfg.weights);

        if !total.is_finite() {
            if let Some(dir) = out_dir {
                let _ = crate::checkpoint::save(
                    &dir.join("diagnostic_checkpoint.json"),
                    &params,
                    &state,
                    &adam,
                );
            }
            return Err(Error::Numeric(format!("loss became non-finite at epoch {epoch}")));
        }

        if let Some(f) = log_file.as_mut() {
            writeln!(f, "{}", bundle.csv_row(epoch, state.lr))?;
        }
        bundles.push(bundle);
        lr_log.push(state.lr);
        if let Some(n) = state.n_spots() {
            n_trace.push(n);
        }

        gate_check(total, cfg, &mut state, objective.gate_n_init());

        // Scheduler and early stopping act on the total training loss; the
        // history push happens inside the bad-epoch update.
        update_bad_epochs(&mut state, total, cfg);
        if early_stop_check(&mut state, total, cfg) {
            stop_reason = if total <= cfg.reference_loss {
                StopReason::ReferenceReached
            } else {
                StopReason::EarlyStop
            };
            break;
        }
        maybe_reduce_lr(&mut state, cfg);

        let step_result = adam.step(params.data_mut(), &grad[..n_net], state.lr);
        if let Err(e) = step_result {
            if let Some(dir) = out_dir {
                let _ = crate::checkpoint::save(
                    &dir.join("diagnostic_checkpoint.json"),
                    &params,
                    &state,
                    &adam,
                );
            }
            return Err(e);
        }
        if let Some(log_n) = state.log_n_spots.as_mut() {
            let mut slot = [*log_n];
            adam_n.step(&mut slot, &grad[n_net..n_net + 1], state.lr)?;
            // The hyperbolic regime n < 1 is rejected; log-space keeps n
            // positive, clamp well above the singular threshold.
            *log_n = slot[0].max(0.0);
        }

        if let Some(dir) = out_dir {
            if cfg.checkpoint_every > 0 && epoch > 0 && epoch % cfg.checkpoint_every == 0 {
                crate::checkpoint::save(&dir.join("checkpoint.json"), &params, &state, &adam)?;
            }
        }
    }

    let final_bundle = *bundles.last().ok_or_else(|| Error::Config("zero training epochs".into()))?;
    if let Some(dir) = out_dir {
        crate::checkpoint::save(&dir.join("checkpoint.json"), &params, &state, &adam)?;
    }
    Ok(TrainArtifacts {
        params,
        state,
        bundles,
        lr_log,
        final_bundle,
        stop_reason,
        n_spots_trace: n_trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn cfg_with(window: usize, stop: usize) -> TrainConfig {
        TrainConfig { window, stop_window: stop, ..TrainConfig::default() }
    }

    #[test]
    fn fade_midpoint_is_exactly_half() {
        assert_eq!(fade_factor(3000, 1500, 1500.0), 0.5);
    }

    #[test]
    fn fade_at_gate_opening_is_negligible() {
        let f = fade_factor(100, 100, 1500.0);
        assert_relative_eq!(f, 1.0 / (1.0 + 15.0f64.exp()), max_relative = 1e-12);
        assert!(f <= 1e-6);
        assert!((f - 3.059e-7).abs() < 1e-10);
    }

    #[test]
    fn fade_is_strictly_increasing() {
        // Stay below the f64 saturation point of the sigmoid.
        let mut prev = 0.0;
        for s in (0..4000).step_by(100) {
            let f = fade_factor(s, 0, 1500.0);
            assert!(f > prev);
            prev = f;
        }
    }

    #[test]
    fn gate_latches_and_records_reference_epoch() {
        let cfg = TrainConfig::default();
        let mut state = TrainState::new(1e-3);
        state.best_ever = f64::INFINITY;
        state.epoch = 42;
        gate_check(0.01, &cfg, &mut state, Some(120_000.0));
        assert!(!state.gate_material && !state.gate_experimental);
        assert!(state.log_n_spots.is_none());
        gate_check(0.0009, &cfg, &mut state, Some(120_000.0));
        assert!(state.gate_material && state.gate_experimental);
        assert_eq!(state.epoch_ref, Some(42));
        assert_relative_eq!(state.n_spots().unwrap(), 120_000.0, max_relative = 1e-12);
        // Never re-closes, reference epoch stays.
        state.epoch = 50;
        gate_check(10.0, &cfg, &mut state, Some(120_000.0));
        assert!(state.gate_experimental);
        assert_eq!(state.epoch_ref, Some(42));
    }

    #[test]
    fn bad_epochs_hand_simulation() {
        // k = 3, losses (1.0, 1.1, 1.2, 1.3) → n_bad reaches 3.
        let cfg = cfg_with(3, 10);
        let mut state = TrainState::new(1e-3);
        state.best_ever = f64::INFINITY;
        for loss in [1.0, 1.1, 1.2, 1.3] {
            update_bad_epochs(&mut state, loss, &cfg);
        }
        assert_eq!(state.n_bad, 3);
    }

    #[test]
    fn bad_epochs_reset_on_window_improvement() {
        let cfg = cfg_with(5, 10);
        let mut state = TrainState::new(1e-3);
        state.best_ever = f64::INFINITY;
        for loss in [1.0, 1.1, 1.2] {
            update_bad_epochs(&mut state, loss, &cfg);
        }
        assert_eq!(state.n_bad, 2);
        update_bad_epochs(&mut state, 0.5, &cfg);
        assert_eq!(state.n_bad, 0);
    }

    #[test]
    fn strictly_decreasing_losses_never_accumulate_bad_epochs() {
        let cfg = cfg_with(10, 20);
        let mut state = TrainState::new(1e-3);
        state.best_ever = f64::INFINITY;
        for i in 0..100 {
            update_bad_epochs(&mut state, 1.0 / (i as f64 + 1.0), &cfg);
            assert_eq!(state.n_bad, 0);
        }
    }

    #[test]
    fn lr_reduces_by_exact_factor_only_at_window() {
        let cfg = cfg_with(4, 10);
        let mut state = TrainState::new(1e-3);
        state.best_ever = f64::INFINITY;
        update_bad_epochs(&mut state, 1.0, &cfg);
        for _ in 0..3 {
            update_bad_epochs(&mut state, 2.0, &cfg);
            assert!(!maybe_reduce_lr(&mut state, &cfg));
        }
        assert_eq!(state.lr, 1e-3);
        update_bad_epochs(&mut state, 2.0, &cfg);
        assert_eq!(state.n_bad, 4);
        assert!(maybe_reduce_lr(&mut state, &cfg));
        assert_relative_eq!(state.lr, 1e-4, max_relative = 1e-12);
        assert_eq!(state.n_bad, 0);
        // Second reduction lands exactly at 1e-5.
        update_bad_epochs(&mut state, 3.0, &cfg);
        for _ in 0..3 {
            update_bad_epochs(&mut state, 3.0, &cfg);
        }
        assert!(maybe_reduce_lr(&mut state, &cfg));
        assert_relative_eq!(state.lr, 1e-5, max_relative = 1e-12);
    }

    #[test]
    fn early_stop_fires_after_exactly_stop_window_flat_epochs() {
        let cfg = cfg_with(4, 6);
        let mut state = TrainState::new(1e-3);
        state.best_ever = f64::INFINITY;
        // First observation counts as an improvement; then exactly
        // stop_window flat epochs trigger the stop on the last one.
        state.history.push_back(1.0);
        state.epoch = 1;
        for i in 1..=6 {
            state.history.push_back(1.0);
            let fired = early_stop_check(&mut state, 1.0, &cfg);
            assert_eq!(fired, i == 6, "at flat epoch {i}");
        }
    }

    #[test]
    fn early_stop_never_fires_on_monotone_decrease() {
        let cfg = cfg_with(4, 6);
        let mut state = TrainState::new(1e-3);
        state.best_ever = f64::INFINITY;
        for i in 0..1000 {
            let loss = 1.0 / (i as f64 + 1.0);
            state.history.push_back(loss);
            while state.history.len() > cfg.stop_window + 1 {
                state.history.pop_front();
            }
            assert!(!early_stop_check(&mut state, loss, &cfg));
        }
    }

    #[test]
    fn early_stop_on_reference_loss() {
        let cfg = TrainConfig::default();
        let mut state = TrainState::new(1e-3);
        state.best_ever = f64::INFINITY;
        assert!(early_stop_check(&mut state, 2e-7, &cfg));
    }

    #[test]
    fn adam_zero_gradients_leave_parameters_unchanged() {
        let mut adam = Adam::new(3);
        let mut p = vec![1.0, -2.0, 0.5];
        adam.step(&mut p, &[0.0, 0.0, 0.0], 1e-3).unwrap();
        assert_eq!(p, vec![1.0, -2.0, 0.5]);
    }

    #[test]
    fn adam_first_step_is_lr_sized() {
        // g = 1: m̂ = v̂ = 1 → Δθ = −lr/(1 + ε) ≈ −lr.
        let mut adam = Adam::new(1);
        let mut p = vec![0.0];
        adam.step(&mut p, &[1.0], 1e-3).unwrap();
        assert_relative_eq!(p[0], -1e-3, max_relative = 1e-6);
    }

    #[test]
    fn adam_is_odd_in_gradient_sign() {
        let mut a = Adam::new(1);
        let mut b = Adam::new(1);
        let mut pa = vec![0.0];
        let mut pb = vec![0.0];
        for g in [0.5, -0.2, 1.3] {
            a.step(&mut pa, &[g], 1e-3).unwrap();
            b.step(&mut pb, &[-g], 1e-3).unwrap();
        }
        assert_relative_eq!(pa[0], -pb[0], max_relative = 1e-12);
    }

    #[test]
    fn adam_rejects_non_finite_gradients() {
        let mut adam = Adam::new(1);
        let mut p = vec![0.0];
        assert!(adam.step(&mut p, &[f64::NAN], 1e-3).is_err());
    }
}
