//! Experiment configuration: parsing, validation, and seeded sampling of
//! private values and maximum competing bids.
//!
//! The random source is ChaCha8 (a portable counter-mode stream RNG), so
//! a given `(config, seed)` pair reproduces the exact same sample stream
//! run after run. Repetition `i` of an experiment uses
//! `seed.wrapping_add(i)`.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal, Normal, Uniform};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;

/// Maximum redraws before a rejection sampler gives up on a degenerate spec.
const MAX_REJECTIONS: u32 = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Normal,
    LogNormal,
    Uniform,
    PointMass,
}

/// One of the four distribution families used by the experiments.
///
/// Parameter meaning by family: Normal `(mean, std_dev)`, LogNormal
/// `(log-mean, log-std-dev)`, Uniform `(lower, upper)`, PointMass
/// `(atom, unused)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DistributionSpec {
    pub family: Family,
    pub p1: f64,
    #[serde(default)]
    pub p2: f64,
}

impl DistributionSpec {
    pub fn normal(mean: f64, std_dev: f64) -> Self {
        Self { family: Family::Normal, p1: mean, p2: std_dev }
    }

    pub fn log_normal(log_mean: f64, log_std: f64) -> Self {
        Self { family: Family::LogNormal, p1: log_mean, p2: log_std }
    }

    pub fn uniform(lower: f64, upper: f64) -> Self {
        Self { family: Family::Uniform, p1: lower, p2: upper }
    }

    pub fn point_mass(atom: f64) -> Self {
        Self { family: Family::PointMass, p1: atom, p2: 0.0 }
    }

    pub fn validate(&self, label: &str) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(format!("{label}: {msg}")));
        if !self.p1.is_finite() || !self.p2.is_finite() {
            return bad(format!("parameters must be finite, got ({}, {})", self.p1, self.p2));
        }
        match self.family {
            Family::Normal | Family::LogNormal => {
                if self.p2 <= 0.0 {
                    return bad(format!("std-dev parameter must be > 0, got {}", self.p2));
                }
            }
            Family::Uniform => {
                if self.p1 >= self.p2 {
                    return bad(format!(
                        "uniform requires p1 < p2, got [{}, {}]",
                        self.p1, self.p2
                    ));
                }
            }
            Family::PointMass => {}
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeedbackMode {
    /// The maximum competing bid is revealed every round.
    Full,
    /// The maximum competing bid is revealed only on a loss.
    OneSided,
}

/// Validated experiment configuration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub horizon: u64,
    pub budget: f64,
    pub value_bound: f64,
    pub bid_grid: usize,
    pub value_grid: usize,
    pub step_size: f64,
    pub failure_prob: f64,
    pub value_dist: DistributionSpec,
    pub competing_dist: DistributionSpec,
    pub repetitions: usize,
    pub seed: u64,
    pub budget_control: bool,
    pub feedback: FeedbackMode,
    pub log_stride: u64,
}

/// Raw on-disk document; unspecified fields take the documented defaults.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    horizon: u64,
    budget: f64,
    value_bound: f64,
    bid_grid: Option<usize>,
    value_grid: Option<usize>,
    step_size: Option<f64>,
    failure_prob: Option<f64>,
    value_dist: DistributionSpec,
    competing_dist: DistributionSpec,
    repetitions: Option<usize>,
    seed: Option<u64>,
    budget_control: Option<bool>,
    feedback: Option<FeedbackMode>,
    log_stride: Option<u64>,
}

/// Parse a JSON configuration document and validate every invariant.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let raw: RawConfig =
        serde_json::from_str(text).map_err(|e| Error::Config(format!("malformed document: {e}")))?;
    let horizon = raw.horizon;
    let config = ExperimentConfig {
        horizon,
        budget: raw.budget,
        value_bound: raw.value_bound,
        bid_grid: raw.bid_grid.unwrap_or(100),
        value_grid: raw.value_grid.unwrap_or(100),
        step_size: raw.step_size.unwrap_or(1.0 / (horizon.max(1) as f64).sqrt()),
        failure_prob: raw.failure_prob.unwrap_or(0.01),
        value_dist: raw.value_dist,
        competing_dist: raw.competing_dist,
        repetitions: raw.repetitions.unwrap_or(20),
        seed: raw.seed.unwrap_or(0),
        budget_control: raw.budget_control.unwrap_or(true),
        feedback: raw.feedback.unwrap_or(FeedbackMode::Full),
        log_stride: raw.log_stride.unwrap_or(1000),
    };
    config.validate()?;
    Ok(config)
}

impl ExperimentConfig {
    /// Target spend rate ρ = B/T.
    pub fn rho(&self) -> f64 {
        self.budget / self.horizon as f64
    }

    pub fn bid_grid(&self) -> Result<Grid> {
        Grid::uniform(self.bid_grid, self.value_bound)
    }

    pub fn value_grid(&self) -> Result<Grid> {
        Grid::uniform(self.value_grid, self.value_bound)
    }

    pub fn validate(&self) -> Result<()> {
        if self.horizon == 0 {
            return Err(Error::Config("horizon must be >= 1".into()));
        }
        if !(self.value_bound > 0.0) || !self.value_bound.is_finite() {
            return Err(Error::Config(format!(
                "value_bound must be positive and finite, got {}",
                self.value_bound
            )));
        }
        let rho = self.rho();
        if !(rho > 0.0) {
            return Err(Error::Config(format!(
                "budget/horizon: spend rate rho must be > 0, got {rho}"
            )));
        }
        if rho > self.value_bound {
            return Err(Error::Config(format!(
                "budget/horizon: rho = {rho} exceeds value_bound = {}; \
                 the budget constraint would never bind",
                self.value_bound
            )));
        }
        if self.bid_grid == 0 {
            return Err(Error::Config("bid_grid must be >= 1".into()));
        }
        if self.value_grid == 0 {
            return Err(Error::Config("value_grid must be >= 1".into()));
        }
        if !(self.step_size > 0.0) || !self.step_size.is_finite() {
            return Err(Error::Config(format!(
                "step_size must be > 0, got {}",
                self.step_size
            )));
        }
        if !(self.failure_prob > 0.0 && self.failure_prob < 1.0) {
            return Err(Error::Config(format!(
                "failure_prob must lie in (0, 1), got {}",
                self.failure_prob
            )));
        }
        if self.repetitions == 0 {
            return Err(Error::Config("repetitions must be >= 1".into()));
        }
        if self.log_stride == 0 {
            return Err(Error::Config("log_stride must be >= 1".into()));
        }
        self.value_dist.validate("value_dist")?;
        self.competing_dist.validate("competing_dist")?;
        if self.value_dist.family == Family::PointMass
            && !(0.0..=self.value_bound).contains(&self.value_dist.p1)
        {
            return Err(Error::Config(format!(
                "value_dist: point mass at {} lies outside [0, {}]",
                self.value_dist.p1, self.value_bound
            )));
        }
        if self.value_dist.family == Family::Uniform
            && (self.value_dist.p2 <= 0.0 || self.value_dist.p1 >= self.value_bound)
        {
            return Err(Error::Config(format!(
                "value_dist: uniform support [{}, {}] does not intersect [0, {}]",
                self.value_dist.p1, self.value_dist.p2, self.value_bound
            )));
        }
        Ok(())
    }

    /// FNV-1a hash of the canonical JSON serialization; used to tag output files.
    pub fn short_hash(&self) -> String {
        let text = serde_json::to_string(self).expect("config serializes");
        let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
        for byte in text.as_bytes() {
            hash ^= u64::from(*byte);
            hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
        }
        format!("{hash:016x}")
    }
}

/// The deterministic generator used everywhere in this crate.
pub type SimRng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> SimRng {
    SimRng::seed_from_u64(seed)
}

/// Draw a private value in `[0, value_bound]`. Continuous draws falling
/// outside the range are rejected and redrawn, which preserves the shape
/// of the named distribution instead of piling mass on the boundary.
pub fn sample_value(spec: &DistributionSpec, value_bound: f64, rng: &mut SimRng) -> Result<f64> {
    spec.validate("value_dist")?;
    let in_range = |v: f64| (0.0..=value_bound).contains(&v);
    match spec.family {
        Family::PointMass => {
            if in_range(spec.p1) {
                Ok(spec.p1)
            } else {
                Err(Error::Sampling(format!(
                    "point mass at {} lies outside [0, {value_bound}]",
                    spec.p1
                )))
            }
        }
        Family::Normal => {
            let dist = Normal::new(spec.p1, spec.p2)
                .map_err(|e| Error::Sampling(format!("normal({}, {}): {e}", spec.p1, spec.p2)))?;
            reject_into(|r| dist.sample(r), in_range, rng)
        }
        Family::LogNormal => {
            let dist = LogNormal::new(spec.p1, spec.p2).map_err(|e| {
                Error::Sampling(format!("log_normal({}, {}): {e}", spec.p1, spec.p2))
            })?;
            reject_into(|r| dist.sample(r), in_range, rng)
        }
        Family::Uniform => {
            let dist = Uniform::new_inclusive(spec.p1, spec.p2)
                .map_err(|e| Error::Sampling(format!("uniform({}, {}): {e}", spec.p1, spec.p2)))?;
            reject_into(|r| dist.sample(r), in_range, rng)
        }
    }
}

/// Draw a maximum competing bid, clamped below at 0. A negative draw is
/// behaviorally identical to 0 under the win rule `b >= d`, so unlike
/// values no rejection is needed. There is no upper clamp.
pub fn sample_competing_bid(spec: &DistributionSpec, rng: &mut SimRng) -> Result<f64> {
    spec.validate("competing_dist")?;
    let raw = match spec.family {
        Family::PointMass => spec.p1,
        Family::Normal => {
            let dist = Normal::new(spec.p1, spec.p2)
                .map_err(|e| Error::Sampling(format!("normal({}, {}): {e}", spec.p1, spec.p2)))?;
            dist.sample(rng)
        }
        Family::LogNormal => {
            let dist = LogNormal::new(spec.p1, spec.p2).map_err(|e| {
                Error::Sampling(format!("log_normal({}, {}): {e}", spec.p1, spec.p2))
            })?;
            dist.sample(rng)
        }
        Family::Uniform => {
            let dist = Uniform::new_inclusive(spec.p1, spec.p2)
                .map_err(|e| Error::Sampling(format!("uniform({}, {}): {e}", spec.p1, spec.p2)))?;
            dist.sample(rng)
        }
    };
    Ok(raw.max(0.0))
}

fn reject_into(
    mut draw: impl FnMut(&mut SimRng) -> f64,
    accept: impl Fn(f64) -> bool,
    rng: &mut SimRng,
) -> Result<f64> {
    for _ in 0..MAX_REJECTIONS {
        let v = draw(rng);
        if accept(v) {
            return Ok(v);
        }
    }
    Err(Error::Sampling(format!(
        "rejection sampling exceeded {MAX_REJECTIONS} draws; \
         distribution has (almost) no mass in range"
    )))
}

// Convenience used by tests and the harness: make sure a u64 never
// panics when mixed into a seed.
pub fn rep_seed(base: u64, rep: usize) -> u64 {
    base.wrapping_add(rep as u64)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "horizon": 1000,
        "budget": 10.0,
        "value_bound": 1.0,
        "value_dist": {"family": "uniform", "p1": 0.25, "p2": 1.0},
        "competing_dist": {"family": "normal", "p1": 0.4, "p2": 0.1}
    }"#;

    #[test]
    fn minimal_document_takes_defaults() {
        let cfg = parse_config(MINIMAL).unwrap();
        assert_eq!(cfg.step_size, 1.0 / (1000.0f64).sqrt());
        assert_eq!(cfg.bid_grid, 100);
        assert_eq!(cfg.value_grid, 100);
        assert_eq!(cfg.failure_prob, 0.01);
        assert_eq!(cfg.repetitions, 20);
        assert_eq!(cfg.log_stride, 1000);
        assert!(cfg.budget_control);
        assert_eq!(cfg.feedback, FeedbackMode::Full);
    }

    #[test]
    fn paper_scale_setup_is_accepted() {
        let text = r#"{
            "horizon": 1000000,
            "budget": 10000.0,
            "value_bound": 1.0,
            "bid_grid": 100,
            "value_grid": 100,
            "failure_prob": 0.01,
            "value_dist": {"family": "normal", "p1": 0.6, "p2": 0.1},
            "competing_dist": {"family": "normal", "p1": 0.4, "p2": 0.1},
            "repetitions": 20,
            "seed": 1,
            "budget_control": true,
            "feedback": "one_sided",
            "log_stride": 10000
        }"#;
        let cfg = parse_config(text).unwrap();
        assert_eq!(cfg.rho(), 0.01);
        assert_eq!(cfg.step_size, 1e-3);
        assert_eq!(cfg.feedback, FeedbackMode::OneSided);
    }

    #[test]
    fn rho_above_value_bound_is_rejected() {
        let text = r#"{
            "horizon": 100,
            "budget": 200.0,
            "value_bound": 1.0,
            "value_dist": {"family": "point_mass", "p1": 0.5},
            "competing_dist": {"family": "point_mass", "p1": 0.3}
        }"#;
        let err = parse_config(text).unwrap_err().to_string();
        assert!(err.contains("rho"), "diagnostic should name rho: {err}");
        assert!(err.contains("exceeds value_bound"), "{err}");
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = MINIMAL.replace("\"horizon\"", "\"horizonn\"");
        assert!(parse_config(&text).is_err());
    }

    #[test]
    fn invalid_distribution_parameters_name_the_field() {
        let text = MINIMAL.replace(
            r#"{"family": "normal", "p1": 0.4, "p2": 0.1}"#,
            r#"{"family": "normal", "p1": 0.4, "p2": -1.0}"#,
        );
        let err = parse_config(&text).unwrap_err().to_string();
        assert!(err.contains("competing_dist"), "{err}");
    }

    #[test]
    fn uniform_samples_stay_in_support() {
        let spec = DistributionSpec::uniform(0.25, 1.0);
        let mut rng = rng_from_seed(7);
        for _ in 0..10_000 {
            let v = sample_value(&spec, 1.0, &mut rng).unwrap();
            assert!((0.25..=1.0).contains(&v));
        }
    }

    #[test]
    fn point_mass_is_constant() {
        let spec = DistributionSpec::point_mass(0.5);
        let mut rng = rng_from_seed(3);
        for _ in 0..100 {
            assert_eq!(sample_value(&spec, 1.0, &mut rng).unwrap(), 0.5);
        }
        assert_eq!(sample_competing_bid(&DistributionSpec::point_mass(0.0), &mut rng).unwrap(), 0.0);
    }

    #[test]
    fn rejected_normal_values_match_target_mean() {
        let spec = DistributionSpec::normal(0.6, 0.1);
        let mut rng = rng_from_seed(42);
        let n = 100_000;
        let mut sum = 0.0;
        for _ in 0..n {
            let v = sample_value(&spec, 1.0, &mut rng).unwrap();
            assert!((0.0..=1.0).contains(&v));
            sum += v;
        }
        let mean = sum / n as f64;
        assert!((mean - 0.6).abs() < 0.01, "mean {mean} drifted from 0.6");
    }

    #[test]
    fn clamped_competing_bids_match_target_mean() {
        let spec = DistributionSpec::normal(0.4, 0.1);
        let mut rng = rng_from_seed(42);
        let n = 100_000;
        let mut sum = 0.0;
        for _ in 0..n {
            let d = sample_competing_bid(&spec, &mut rng).unwrap();
            assert!(d >= 0.0);
            sum += d;
        }
        let mean = sum / n as f64;
        assert!((mean - 0.4).abs() < 0.01, "mean {mean} drifted from 0.4");
    }

    #[test]
    fn identical_seed_reproduces_stream() {
        let spec = DistributionSpec::log_normal(-0.4, 0.1);
        let a: Vec<f64> = {
            let mut rng = rng_from_seed(99);
            (0..1000).map(|_| sample_value(&spec, 1.0, &mut rng).unwrap()).collect()
        };
        let b: Vec<f64> = {
            let mut rng = rng_from_seed(99);
            (0..1000).map(|_| sample_value(&spec, 1.0, &mut rng).unwrap()).collect()
        };
        assert_eq!(a, b);
    }

    #[test]
    fn uniform_midpoint_cdf_sanity() {
        let spec = DistributionSpec::uniform(0.2, 0.8);
        let mut rng = rng_from_seed(11);
        let n = 10_000;
        let mid = 0.5;
        let below = (0..n)
            .filter(|_| sample_value(&spec, 1.0, &mut rng).unwrap() <= mid)
            .count();
        let freq = below as f64 / n as f64;
        assert!((freq - 0.5).abs() <= 3.0 / (n as f64).sqrt(), "freq {freq}");
    }

    #[test]
    fn degenerate_rejection_spec_errors_out() {
        // Point mass outside the range cannot be rejected into it.
        let spec = DistributionSpec::point_mass(2.0);
        let mut rng = rng_from_seed(1);
        assert!(sample_value(&spec, 1.0, &mut rng).is_err());
        // Uniform support entirely above the bound exhausts the loop.
        let spec = DistributionSpec::uniform(5.0, 6.0);
        assert!(sample_value(&spec, 1.0, &mut rng).is_err());
    }

    #[test]
    fn short_hash_is_stable_between_calls() {
        let cfg = parse_config(MINIMAL).unwrap();
        assert_eq!(cfg.short_hash(), cfg.short_hash());
        let other = parse_config(&MINIMAL.replace("\"budget\": 10.0", "\"budget\": 11.0")).unwrap();
        assert_ne!(cfg.short_hash(), other.short_hash());
    }
}
