//! Per-round records, checkpoint curves, and whole-run traces shared by
//! both bidders.

use crate::config::ExperimentConfig;

/// Everything observable about one auction round.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundRecord {
    pub t: u64,
    pub value: f64,
    /// `v_t / (1 + λ_t)`, recorded for diagnostics.
    pub shaded_target: f64,
    pub lambda: f64,
    pub bid_index: usize,
    pub bid: f64,
    pub won: bool,
    pub reward: f64,
    pub cost: f64,
    /// Budget remaining after this round's payment.
    pub remaining_budget: f64,
    /// One-sided only: shaded value grid index m(t).
    pub m_index: Option<usize>,
    /// One-sided only: N_t^{m(t)}.
    pub n_min: Option<u64>,
    /// One-sided only: confidence width w_t^{m(t)}.
    pub width: Option<f64>,
}

/// Reward-per-round curve sample; curves continue past budget depletion
/// (with zero incremental reward) so that plotted tails decay as 1/t.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Checkpoint {
    pub t: u64,
    pub reward_per_round: f64,
    pub remaining_budget: f64,
    pub lambda: f64,
}

/// Whether a run retains every round record or only strided ones.
/// Checkpoints, totals, and invariant checks are full-resolution either
/// way.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RecordMode {
    Full,
    Strided,
}

impl RecordMode {
    /// Full retention up to 1e5 rounds, strided beyond (memory budget).
    pub fn auto(horizon: u64) -> Self {
        if horizon <= 100_000 {
            RecordMode::Full
        } else {
            RecordMode::Strided
        }
    }
}

#[derive(Debug, Clone)]
pub struct Trace {
    pub seed: u64,
    pub records: Vec<RoundRecord>,
    pub record_mode: RecordMode,
    pub checkpoints: Vec<Checkpoint>,
    /// Last round whose starting budget was at least v̄ (0 if none).
    pub depletion_round: u64,
    pub total_reward: f64,
    pub total_cost: f64,
    /// One-sided only: Σ_{t=2..τ} (N_t^{m(t)})^{-1/2}.
    pub fig2_sum: Option<f64>,
    /// Invariant violations observed during the run (should be empty).
    pub violations: Vec<String>,
    /// Soft-check warnings (e.g. the λ cap under one-sided feedback).
    pub warnings: Vec<String>,
    /// Number of empty-active-set fallbacks (δ-failure events).
    pub anomalies: u64,
}

impl Trace {
    pub fn new(seed: u64, record_mode: RecordMode) -> Self {
        Trace {
            seed,
            records: Vec::new(),
            record_mode,
            checkpoints: Vec::new(),
            depletion_round: 0,
            total_reward: 0.0,
            total_cost: 0.0,
            fig2_sum: None,
            violations: Vec::new(),
            warnings: Vec::new(),
            anomalies: 0,
        }
    }

    pub fn violation(&mut self, t: u64, message: String) {
        if self.violations.len() < 64 {
            self.violations.push(format!("t={t}: {message}"));
        } else if self.violations.len() == 64 {
            self.violations.push("(further violations suppressed)".into());
        }
        log::warn!("invariant violation at t={t}: {message}");
    }

    pub fn warning(&mut self, t: u64, message: String) {
        if self.warnings.len() < 64 {
            self.warnings.push(format!("t={t}: {message}"));
        }
    }

    pub fn push_record(&mut self, record: RoundRecord, log_stride: u64) {
        let keep = match self.record_mode {
            RecordMode::Full => true,
            RecordMode::Strided => record.t % log_stride == 0 || record.t == 1,
        };
        if keep {
            self.records.push(record);
        }
    }

    /// Extend the checkpoint curve through the horizon after the bidder
    /// halted: reward-per-round decays as (total at τ)/t, budget and λ
    /// stay frozen.
    pub fn fill_tail_checkpoints(&mut self, config: &ExperimentConfig, remaining_budget: f64, lambda: f64) {
        let stride = config.log_stride;
        let mut t = match self.checkpoints.last() {
            Some(c) => (c.t / stride + 1) * stride,
            None => stride,
        };
        while t <= config.horizon {
            self.checkpoints.push(Checkpoint {
                t,
                reward_per_round: self.total_reward / t as f64,
                remaining_budget,
                lambda,
            });
            t += stride;
        }
        let final_t = config.horizon;
        if self.checkpoints.last().map(|c| c.t) != Some(final_t) {
            self.checkpoints.push(Checkpoint {
                t: final_t,
                reward_per_round: self.total_reward / final_t as f64,
                remaining_budget,
                lambda,
            });
        }
    }
}
