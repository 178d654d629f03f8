//! Empirical reward/cost estimators for both feedback models, plus the
//! two confidence-width formulas.
//!
//! Both estimators keep integer counts bucketed by grid index and refresh
//! prefix sums lazily once per round, so a query is a ratio of two counts
//! and state is exactly `(counts, rounds seen)`.

use crate::error::{Error, Result};
use crate::grid::Grid;

/// Empirical CDF of the observed maximum competing bids over the bid grid.
///
/// `ceil_buckets[j]` counts observations whose smallest covering grid
/// point is `j` (i.e. `points[j] >= d`, ties inclusive — a tie at a grid
/// point is a win for that bid). `#{s : d_s <= b^k}` is then the prefix
/// sum through `k`; observations above the top grid point land in the
/// overflow bucket and never count toward any grid bid.
#[derive(Debug, Clone)]
pub struct FullInfoEstimator {
    ceil_buckets: Vec<u64>,
    overflow: u64,
    cum_counts: Vec<u64>,
    rounds_observed: u64,
    dirty: bool,
}

impl FullInfoEstimator {
    pub fn new(bid_grid: &Grid) -> Self {
        FullInfoEstimator {
            ceil_buckets: vec![0; bid_grid.len()],
            overflow: 0,
            cum_counts: vec![0; bid_grid.len()],
            rounds_observed: 0,
            dirty: false,
        }
    }

    pub fn rounds_observed(&self) -> u64 {
        self.rounds_observed
    }

    /// Ingest one observed maximum competing bid.
    pub fn observe(&mut self, d: f64, grid: &Grid) {
        debug_assert!(d >= 0.0);
        match grid.ceil_index(d) {
            Some(j) => self.ceil_buckets[j] += 1,
            None => self.overflow += 1,
        }
        self.rounds_observed += 1;
        self.dirty = true;
    }

    /// Recompute prefix sums; called once per round before any queries.
    pub fn refresh(&mut self) {
        if !self.dirty {
            return;
        }
        let mut acc = 0u64;
        for (cum, bucket) in self.cum_counts.iter_mut().zip(&self.ceil_buckets) {
            acc += *bucket;
            *cum = acc;
        }
        self.dirty = false;
    }

    /// Empirical win probability at grid bid `k`.
    pub fn win_prob(&self, k: usize) -> Result<f64> {
        if self.rounds_observed == 0 {
            return Err(Error::Simulation(
                "estimator queried before any observation (queries start at t = 2)".into(),
            ));
        }
        debug_assert!(!self.dirty, "refresh() must run before queries");
        Ok(self.cum_counts[k] as f64 / self.rounds_observed as f64)
    }

    /// Empirical reward and cost estimates for value `v` at grid bid `k`.
    pub fn estimates(&self, v: f64, k: usize, grid: &Grid) -> Result<(f64, f64)> {
        let g = self.win_prob(k)?;
        let b = grid.point(k);
        Ok((g * (v - b), g * b))
    }

    pub fn cum_counts(&self) -> &[u64] {
        &self.cum_counts
    }
}

/// DKW uniform confidence band for the empirical CDF after `t - 1`
/// observations: `v̄ · sqrt(ln(2T/δ) / (2(t-1)))`.
pub fn dkw_bound(t: u64, horizon: u64, delta: f64, value_bound: f64) -> Result<f64> {
    if t < 2 {
        return Err(Error::Simulation(format!(
            "dkw_bound needs t >= 2 (one observation), got t = {t}"
        )));
    }
    let samples = (t - 1) as f64;
    Ok(value_bound * ((2.0 * horizon as f64 / delta).ln() / (2.0 * samples)).sqrt())
}

/// Winner-censored estimator.
///
/// `n_counts[k]` counts past rounds whose own bid was at most `b^k`;
/// `win_counts[k]` counts those of them where `b^k >= d_s` is resolvable
/// and true. On a win `d_s <= b_s <= b^k` resolves the indicator for
/// every `k` at or above the round's bid; on a loss the revealed `d_s`
/// resolves it everywhere.
#[derive(Debug, Clone)]
pub struct OneSidedEstimator {
    bid_buckets: Vec<u64>,
    win_buckets: Vec<u64>,
    win_overflow: u64,
    n_counts: Vec<u64>,
    win_counts: Vec<u64>,
    ratios: Vec<f64>,
    rounds_observed: u64,
    dirty: bool,
}

impl OneSidedEstimator {
    pub fn new(bid_grid: &Grid) -> Self {
        let k = bid_grid.len();
        OneSidedEstimator {
            bid_buckets: vec![0; k],
            win_buckets: vec![0; k],
            win_overflow: 0,
            n_counts: vec![0; k],
            win_counts: vec![0; k],
            ratios: vec![0.0; k],
            rounds_observed: 0,
            dirty: false,
        }
    }

    pub fn rounds_observed(&self) -> u64 {
        self.rounds_observed
    }

    /// Ingest one round. `bid_index` is the grid index of the submitted
    /// bid; on a loss the observed `d` must be present and above the bid,
    /// on a win it must be absent (the winner never sees it).
    pub fn observe(
        &mut self,
        bid_index: usize,
        won: bool,
        d_if_lost: Option<f64>,
        grid: &Grid,
    ) -> Result<()> {
        let bid = grid.point(bid_index);
        match (won, d_if_lost) {
            (true, Some(_)) => {
                return Err(Error::Simulation(
                    "a winning round must not reveal the competing bid".into(),
                ))
            }
            (false, None) => {
                return Err(Error::Simulation(
                    "a losing round must reveal the competing bid".into(),
                ))
            }
            (false, Some(d)) if d <= bid => {
                return Err(Error::Simulation(format!(
                    "inconsistent loss: revealed d = {d} does not exceed the bid {bid}"
                )))
            }
            _ => {}
        }
        self.bid_buckets[bid_index] += 1;
        match d_if_lost {
            None => self.win_buckets[bid_index] += 1,
            Some(d) => match grid.ceil_index(d) {
                // d > bid on a loss, so the credited range starts above
                // the bid index automatically.
                Some(j) => self.win_buckets[j] += 1,
                None => self.win_overflow += 1,
            },
        }
        self.rounds_observed += 1;
        self.dirty = true;
        Ok(())
    }

    /// Recompute prefix sums and win-rate ratios; once per round.
    pub fn refresh(&mut self) {
        if !self.dirty {
            return;
        }
        let mut n_acc = 0u64;
        let mut w_acc = 0u64;
        for i in 0..self.n_counts.len() {
            n_acc += self.bid_buckets[i];
            w_acc += self.win_buckets[i];
            self.n_counts[i] = n_acc;
            self.win_counts[i] = w_acc;
            self.ratios[i] = if n_acc == 0 { 0.0 } else { w_acc as f64 / n_acc as f64 };
        }
        self.dirty = false;
    }

    pub fn n_count(&self, k: usize) -> u64 {
        debug_assert!(!self.dirty);
        self.n_counts[k]
    }

    pub fn n_counts(&self) -> &[u64] {
        debug_assert!(!self.dirty);
        &self.n_counts
    }

    pub fn win_counts(&self) -> &[u64] {
        debug_assert!(!self.dirty);
        &self.win_counts
    }

    /// Per-bid empirical win rates `win_counts[k] / n_counts[k]`.
    pub fn ratios(&self) -> &[f64] {
        debug_assert!(!self.dirty);
        &self.ratios
    }

    /// `(r̃, c̃, n)` for value `v` at grid bid `k`.
    pub fn estimates(&self, v: f64, k: usize, grid: &Grid) -> Result<(f64, f64, u64)> {
        debug_assert!(!self.dirty);
        let n = self.n_counts[k];
        if n == 0 {
            return Err(Error::Simulation(format!(
                "no observation at or below grid bid index {k} (cannot occur after round 1)"
            )));
        }
        let q = self.ratios[k];
        let b = grid.point(k);
        Ok((q * (v - b), q * b, n))
    }

    pub fn cost_estimate(&self, k: usize, grid: &Grid) -> Result<f64> {
        self.estimates(0.0, k, grid).map(|(_, c, _)| c)
    }
}

/// Confidence width for the censored estimator after `n` usable
/// observations: `v̄ · sqrt(4 ln T · ln(KT/δ) / n)`. Both logarithms are
/// natural, which is what the underlying concentration argument uses.
pub fn azuma_width(n: u64, horizon: u64, bid_grid: usize, delta: f64, value_bound: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::Simulation("azuma_width needs n >= 1".into()));
    }
    if horizon < 2 {
        return Err(Error::Simulation("azuma_width needs horizon >= 2".into()));
    }
    let t = horizon as f64;
    let coef = 4.0 * t.ln() * (bid_grid as f64 * t / delta).ln();
    Ok(value_bound * (coef / n as f64).sqrt())
}

/// Factor of `azuma_width` that does not depend on `n`; hoisted out of
/// the per-round loop. `azuma_width(n, ..) == v̄ * sqrt(coef / n)` exactly.
pub fn azuma_coefficient(horizon: u64, bid_grid: usize, delta: f64) -> f64 {
    let t = horizon as f64;
    4.0 * t.ln() * (bid_grid as f64 * t / delta).ln()
}
