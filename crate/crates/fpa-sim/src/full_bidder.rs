//! Budget-paced bidding under full information feedback.
//!
//! Round 1 bids 0 unconditionally to seed the estimator. From round 2 on
//! the bidder maximizes the estimated cost-adjusted reward over the bid
//! grid, updates the dual multiplier with the estimated spend of the
//! chosen bid *before* observing the round's competing bid, then ingests
//! the observation and pays the realized cost. Bidding stops for good
//! once the remaining budget drops below v̄.
//!
//! With `budget_control` off the same estimator and argmax run with the
//! multiplier pinned to 0 (no controller update, shading disabled); the
//! low-budget stop is kept so the baseline can never overspend.

use crate::config::{ExperimentConfig, FeedbackMode};
use crate::env::AuctionEnv;
use crate::error::{Error, Result};
use crate::estimators::FullInfoEstimator;
use crate::grid::Grid;
use crate::pacing::DualController;
use crate::trace::{Checkpoint, RecordMode, RoundRecord, Trace};

const EPS: f64 = 1e-9;

pub struct FullBidder {
    config: ExperimentConfig,
    grid: Grid,
    estimator: FullInfoEstimator,
    controller: DualController,
    remaining_budget: f64,
    round: u64,
    halted: bool,
    issues: Vec<(u64, String)>,
}

impl FullBidder {
    pub fn new(config: &ExperimentConfig) -> Result<Self> {
        let grid = config.bid_grid()?;
        let estimator = FullInfoEstimator::new(&grid);
        let controller = DualController::new(config.step_size, config.rho());
        let halted = config.budget < config.value_bound;
        Ok(FullBidder {
            config: config.clone(),
            grid,
            estimator,
            controller,
            remaining_budget: config.budget,
            round: 1,
            halted,
            issues: Vec::new(),
        })
    }

    pub fn halted(&self) -> bool {
        self.halted
    }

    pub fn remaining_budget(&self) -> f64 {
        self.remaining_budget
    }

    pub fn lambda(&self) -> f64 {
        if self.config.budget_control {
            self.controller.lambda()
        } else {
            0.0
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// Grid index maximizing `r̃(v, b^k) - λ c̃(b^k)`, smallest on ties.
    pub fn select_bid(&mut self, v: f64) -> Result<usize> {
        if self.round < 2 {
            return Err(Error::Simulation("select_bid needs at least one observation".into()));
        }
        self.estimator.refresh();
        let lambda = self.lambda();
        let t1 = self.estimator.rounds_observed() as f64;
        let cum = self.estimator.cum_counts();
        let mut best_k = 0usize;
        let mut best_obj = f64::NEG_INFINITY;
        for k in 0..self.grid.len() {
            let b = self.grid.point(k);
            let g = cum[k] as f64 / t1;
            let r = g * (v - b);
            let c = g * b;
            let obj = r - lambda * c;
            if obj > best_obj {
                best_obj = obj;
                best_k = k;
            }
        }
        Ok(best_k)
    }

    pub fn run_round(&mut self, v: f64, d: f64) -> Result<RoundRecord> {
        if self.halted {
            return Err(Error::Simulation("run_round called on a halted bidder".into()));
        }
        let t = self.round;
        let lambda = self.lambda();
        let shaded_target = v / (1.0 + lambda);
        let bid_index = if t == 1 { 0 } else { self.select_bid(v)? };
        let bid = self.grid.point(bid_index);

        if t >= 2 && bid > shaded_target + self.grid.point(1.min(self.grid.len() - 1)) + EPS {
            self.issues.push((t, format!(
                "shading bound violated: bid {bid} > v/(1+lambda) = {shaded_target} + grid step"
            )));
        }

        let won = bid >= d;
        let reward = if won { v - bid } else { 0.0 };
        let cost = if won { bid } else { 0.0 };

        if t >= 2 && self.config.budget_control {
            let (_, est_cost) = self.estimator.estimates(v, bid_index, &self.grid)?;
            if est_cost > self.config.value_bound / (1.0 + lambda) + EPS {
                self.issues.push((t, format!(
                    "estimated spend {est_cost} exceeds vbar/(1+lambda) = {}",
                    self.config.value_bound / (1.0 + lambda)
                )));
            }
            self.controller.update(est_cost);
            if self.controller.cap_applies() {
                let cap = self.controller.lambda_cap(self.config.value_bound);
                if self.controller.lambda() > cap + EPS {
                    self.issues.push((t, format!(
                        "lambda {} exceeds cap {cap}",
                        self.controller.lambda()
                    )));
                }
            }
        }

        self.estimator.observe(d, &self.grid);
        self.remaining_budget -= cost;
        self.round += 1;
        if self.remaining_budget < self.config.value_bound {
            self.halted = true;
        }

        Ok(RoundRecord {
            t,
            value: v,
            shaded_target,
            lambda,
            bid_index,
            bid,
            won,
            reward,
            cost,
            remaining_budget: self.remaining_budget,
            m_index: None,
            n_min: None,
            width: None,
        })
    }

    fn drain_issues(&mut self, trace: &mut Trace) {
        for (t, msg) in self.issues.drain(..) {
            trace.violation(t, msg);
        }
    }
}

/// Simulate one seeded run of the full-information bidder.
pub fn run(config: &ExperimentConfig, seed: u64) -> Result<Trace> {
    run_with_mode(config, seed, RecordMode::auto(config.horizon))
}

pub fn run_with_mode(config: &ExperimentConfig, seed: u64, mode: RecordMode) -> Result<Trace> {
    if config.feedback != FeedbackMode::Full {
        return Err(Error::Config("full_bidder::run requires feedback = \"full\"".into()));
    }
    let mut env = AuctionEnv::new(config, seed);
    let mut bidder = FullBidder::new(config)?;
    let mut trace = Trace::new(seed, mode);

    for t in 1..=config.horizon {
        if bidder.halted() {
            break;
        }
        trace.depletion_round = t;
        let (v, d) = env.next_round()?;
        let record = bidder.run_round(v, d)?;
        trace.total_reward += record.reward;
        trace.total_cost += record.cost;
        if t % config.log_stride == 0 {
            trace.checkpoints.push(Checkpoint {
                t,
                reward_per_round: trace.total_reward / t as f64,
                remaining_budget: record.remaining_budget,
                lambda: record.lambda,
            });
        }
        trace.push_record(record, config.log_stride);
    }

    bidder.drain_issues(&mut trace);
    if trace.total_cost > config.budget {
        trace.violation(trace.depletion_round, format!(
            "total cost {} exceeds budget {}",
            trace.total_cost, config.budget
        ));
    }
    trace.fill_tail_checkpoints(config, bidder.remaining_budget(), bidder.lambda());
    Ok(trace)
}
