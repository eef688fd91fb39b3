use std::fmt;
use std::str::FromStr;

use super::TrainError;

/// Baseline subtracted from the REINFORCE reward.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Baseline {
    Constant(f64),
    /// `E_{d∼p_θ}[reward(d)]` by enumerating the pool.
    ValueExact,
    /// Monte-Carlo estimate of the value function from `n` extra draws.
    ValueMc(usize),
}

impl fmt::Display for Baseline {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Baseline::Constant(b) => write!(f, "constant({b})"),
            Baseline::ValueExact => write!(f, "value-exact"),
            Baseline::ValueMc(n) => write!(f, "value-mc({n})"),
        }
    }
}

impl FromStr for Baseline {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s == "value-exact" || s == "value-function-exact" {
            return Ok(Baseline::ValueExact);
        }
        let arg = |prefix: &str| {
            s.strip_prefix(prefix)
                .and_then(|r| r.strip_prefix('('))
                .and_then(|r| r.strip_suffix(')'))
        };
        if let Some(b) = arg("constant") {
            return b
                .trim()
                .parse::<f64>()
                .ok()
                .filter(|b| b.is_finite())
                .map(Baseline::Constant)
                .ok_or_else(|| format!("bad constant baseline `{s}`"));
        }
        if let Some(n) = arg("value-mc").or_else(|| arg("value-function-mc")) {
            return n
                .trim()
                .parse::<usize>()
                .ok()
                .filter(|&n| n >= 1)
                .map(Baseline::ValueMc)
                .ok_or_else(|| format!("bad Monte-Carlo baseline `{s}`"));
        }
        Err(format!(
            "unknown baseline `{s}` (expected constant(b), value-exact or value-mc(n))"
        ))
    }
}

/// Reward fed to the generator's policy gradient.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RewardKind {
    /// `log(1 + e^f)`, the raw adversarial reward.
    Softplus,
    /// `σ(f)`.
    Sigmoid,
    /// `2(σ(f) − b)`: the sigmoid reward with a constant baseline folded in.
    SigmoidBaselined(f64),
}

impl RewardKind {
    pub fn reward(self, f: f64) -> f64 {
        match self {
            RewardKind::Softplus => crate::math::softplus(f),
            RewardKind::Sigmoid => crate::math::sigmoid(f),
            RewardKind::SigmoidBaselined(b) => 2.0 * (crate::math::sigmoid(f) - b),
        }
    }
}

impl fmt::Display for RewardKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RewardKind::Softplus => write!(f, "raw"),
            RewardKind::Sigmoid => write!(f, "sigmoid"),
            RewardKind::SigmoidBaselined(b) => write!(f, "sigmoid-baselined({b})"),
        }
    }
}

impl FromStr for RewardKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        match s {
            "raw" | "softplus" => return Ok(RewardKind::Softplus),
            "sigmoid" => return Ok(RewardKind::Sigmoid),
            "sigmoid-baselined" => return Ok(RewardKind::SigmoidBaselined(0.5)),
            _ => {}
        }
        s.strip_prefix("sigmoid-baselined(")
            .and_then(|r| r.strip_suffix(')'))
            .and_then(|b| b.trim().parse::<f64>().ok())
            .filter(|b| b.is_finite())
            .map(RewardKind::SigmoidBaselined)
            .ok_or_else(|| format!("unknown reward `{s}` (expected raw, sigmoid or sigmoid-baselined(b))"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    /// Shared by generator and discriminator.
    pub learning_rate: f64,
    /// Queries per gradient step.
    pub batch_size: usize,
    pub epochs_outer: usize,
    /// Dual-D epochs per model per outer epoch.
    pub epochs_inner: usize,
    /// Documents sampled per query (generator draws, contrastive negatives).
    pub k: usize,
    /// Uniform candidates per positive for dynamic negative sampling.
    pub dns_k: usize,
    pub baseline: Baseline,
    pub reward: RewardKind,
    pub seed: u64,
    pub temperature: f64,
    /// Drop known positives from negative-sampling pools.
    pub exclude_positives: bool,
    /// Generator draws with replacement.
    pub replacement: bool,
    /// Discriminator steps per generator step in the adversarial loops.
    pub d_steps: usize,
    pub g_steps: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.004,
            batch_size: 8,
            epochs_outer: 50,
            epochs_inner: 1,
            k: 5,
            dns_k: 5,
            baseline: Baseline::Constant(0.0),
            reward: RewardKind::SigmoidBaselined(0.5),
            seed: 40,
            temperature: 1.0,
            exclude_positives: true,
            replacement: true,
            d_steps: 1,
            g_steps: 1,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        let bad = |key: &str, why: &str| Err(TrainError::Config(format!("`{key}` {why}")));
        if !(self.learning_rate >= 0.0) || !self.learning_rate.is_finite() {
            return bad("learning_rate", "must be a non-negative finite number");
        }
        for (key, v) in [
            ("batch_size", self.batch_size),
            ("epochs_outer", self.epochs_outer),
            ("epochs_inner", self.epochs_inner),
            ("k", self.k),
            ("dns_k", self.dns_k),
            ("d_steps", self.d_steps),
            ("g_steps", self.g_steps),
        ] {
            if v < 1 {
                return bad(key, "must be at least 1");
            }
        }
        if !(self.temperature > 0.0) || !self.temperature.is_finite() {
            return bad("temperature", "must be positive");
        }
        if let Baseline::Constant(b) = self.baseline {
            if !b.is_finite() {
                return bad("baseline", "must be finite");
            }
        }
        Ok(())
    }

    /// Single-D for web search: lr 0.004, batch 8, seed 40.
    pub fn web_single_d() -> Self {
        Self {
            learning_rate: 0.004,
            batch_size: 8,
            epochs_outer: 50,
            seed: 40,
            ..Self::default()
        }
    }

    /// Dual-D for web search: lr 0.006, 50 outer x 30 inner epochs, batch 8, seed 40.
    pub fn web_dual_d() -> Self {
        Self {
            learning_rate: 0.006,
            batch_size: 8,
            epochs_outer: 50,
            epochs_inner: 30,
            seed: 40,
            ..Self::default()
        }
    }

    /// Single-D for item recommendation: lr 0.02, batch 10, seed 70, DNS k 5.
    pub fn recommendation() -> Self {
        Self {
            learning_rate: 0.02,
            batch_size: 10,
            seed: 70,
            dns_k: 5,
            ..Self::default()
        }
    }

    /// Single-D for QA: lr 0.05, 20 epochs, batch 100.
    pub fn qa_single_d() -> Self {
        Self {
            learning_rate: 0.05,
            epochs_outer: 20,
            batch_size: 100,
            ..Self::default()
        }
    }

    /// Dual-D for QA: lr 0.05, 20 outer x 1 inner epochs, batch 100.
    pub fn qa_dual_d() -> Self {
        Self {
            epochs_inner: 1,
            ..Self::qa_single_d()
        }
    }
}
