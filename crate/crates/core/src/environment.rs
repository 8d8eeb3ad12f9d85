//! Non-stationary reward processes.
//!
//! A [`MeanSequence`] stores the true expected reward of every arm at every
//! round and is the ground truth for regret. Generators build sequences whose
//! total variation respects a budget; [`RewardSampler`] draws the realized
//! rewards.

use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::config::{validate_hard_regime, ValidatedConfig};
use crate::error::{Error, Result};
use crate::fmt::sig17;
use crate::rng::{RandomStream, StreamId};

/// `T x K` matrix of expected rewards, rounds and arms 1-indexed in the API.
#[derive(Debug, Clone, PartialEq)]
pub struct MeanSequence {
    horizon: u64,
    arms: usize,
    means: Vec<f64>,
}

impl MeanSequence {
    /// Builds a sequence from row-major means (`horizon` rows of `arms`).
    pub fn new(horizon: u64, arms: usize, means: Vec<f64>) -> Result<Self> {
        if horizon == 0 || arms == 0 {
            return Err(Error::ShapeMismatch("empty mean sequence".into()));
        }
        if means.len() as u64 != horizon * arms as u64 {
            return Err(Error::ShapeMismatch(format!(
                "expected {horizon} x {arms} = {} entries, got {}",
                horizon * arms as u64,
                means.len()
            )));
        }
        for (i, &value) in means.iter().enumerate() {
            if !(0.0..=1.0).contains(&value) {
                return Err(Error::MeanOutOfRange {
                    t: i as u64 / arms as u64 + 1,
                    arm: i % arms + 1,
                    value,
                });
            }
        }
        Ok(Self {
            horizon,
            arms,
            means,
        })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let arms = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != arms) {
            return Err(Error::ShapeMismatch("ragged rows".into()));
        }
        Self::new(rows.len() as u64, arms, rows.concat())
    }

    pub fn constant(horizon: u64, means: &[f64]) -> Result<Self> {
        let mut data = Vec::with_capacity(horizon as usize * means.len());
        for _ in 0..horizon {
            data.extend_from_slice(means);
        }
        Self::new(horizon, means.len(), data)
    }

    pub fn horizon(&self) -> u64 {
        self.horizon
    }

    pub fn arms(&self) -> usize {
        self.arms
    }

    /// Means of all arms at round `t` (1-indexed).
    pub fn row(&self, t: u64) -> &[f64] {
        let start = (t - 1) as usize * self.arms;
        &self.means[start..start + self.arms]
    }

    /// Mean of arm `arm` (0-indexed) at round `t` (1-indexed).
    pub fn mean(&self, t: u64, arm: usize) -> f64 {
        self.means[(t - 1) as usize * self.arms + arm]
    }

    pub fn best_mean(&self, t: u64) -> f64 {
        self.row(t)
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.means.chunks_exact(self.arms)
    }

    /// Checks the sequence against a problem shape.
    pub fn check_shape(&self, cfg: &ValidatedConfig) -> Result<()> {
        if self.horizon != cfg.horizon || self.arms != cfg.arms {
            return Err(Error::ShapeMismatch(format!(
                "environment is {} x {}, config expects {} x {}",
                self.horizon, self.arms, cfg.horizon, cfg.arms
            )));
        }
        Ok(())
    }

    /// Writes `t,arm_1..arm_K` CSV with 17 significant digits.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["t".to_string()];
        header.extend((1..=self.arms).map(|k| format!("arm_{k}")));
        w.write_record(&header)?;
        for (i, row) in self.rows().enumerate() {
            let mut rec = Vec::with_capacity(self.arms + 1);
            rec.push((i + 1).to_string());
            rec.extend(row.iter().map(|&x| sig17(x)));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(input);
        let headers = r.headers()?.clone();
        if headers.get(0) != Some("t") || headers.len() < 2 {
            return Err(Error::ShapeMismatch(
                "mean CSV must start with columns t,arm_1".into(),
            ));
        }
        for (k, h) in headers.iter().skip(1).enumerate() {
            if h != format!("arm_{}", k + 1) {
                return Err(Error::ShapeMismatch(format!("unexpected column {h:?}")));
            }
        }
        let arms = headers.len() - 1;
        let mut data = Vec::new();
        let mut horizon = 0u64;
        for rec in r.records() {
            let rec = rec?;
            horizon += 1;
            let t: u64 = rec[0]
                .trim()
                .parse()
                .map_err(|e| Error::Parse(format!("round index {:?}: {e}", &rec[0])))?;
            if t != horizon {
                return Err(Error::ShapeMismatch(format!(
                    "expected round {horizon}, found {t}"
                )));
            }
            for field in rec.iter().skip(1) {
                data.push(
                    field
                        .trim()
                        .parse::<f64>()
                        .map_err(|e| Error::Parse(format!("mean {field:?}: {e}")))?,
                );
            }
        }
        Self::new(horizon, arms, data)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::read_csv(std::fs::File::open(path)?)
    }
}

/// `sum_{t=1}^{T-1} max_k |mu_{t+1}^k - mu_t^k|`.
pub fn total_variation(seq: &MeanSequence) -> f64 {
    seq.rows()
        .zip(seq.rows().skip(1))
        .map(|(prev, next)| {
            prev.iter()
                .zip(next)
                .map(|(a, b)| (b - a).abs())
                .fold(0.0, f64::max)
        })
        .sum()
}

/// Piecewise-constant means over `segment_count` near-equal segments.
///
/// Segment 1 draws means uniformly from `[0.2, 0.8]`. At every boundary a
/// uniformly chosen arm moves by the jump size: the current best arm moves
/// down, any other arm moves up, and the direction flips if the move would
/// leave `[0, 1]`. The jump is `gap_scale`, shrunk to `V_T / (segments - 1)`
/// when a variation budget is present and would otherwise be exceeded.
pub fn gen_piecewise(
    cfg: &ValidatedConfig,
    segment_count: u64,
    gap_scale: f64,
    stream: &mut RandomStream,
) -> Result<MeanSequence> {
    let horizon = cfg.horizon;
    let arms = cfg.arms;
    if segment_count == 0 || segment_count > horizon {
        return Err(Error::InfeasibleVariation(format!(
            "segment count {segment_count} must lie in [1, {horizon}]"
        )));
    }
    if !(0.0..=1.0).contains(&gap_scale) {
        return Err(Error::InfeasibleVariation(format!(
            "jump {gap_scale} outside [0, 1]"
        )));
    }
    let mut jump = gap_scale;
    if let (Some(v), true) = (cfg.variation_budget, segment_count > 1) {
        jump = jump.min(v / (segment_count - 1) as f64);
    }

    let mut current: Vec<f64> = (0..arms).map(|_| stream.random_range(0.2..=0.8)).collect();
    let mut data = Vec::with_capacity(horizon as usize * arms);
    let mut segment = 0u64;
    for t in 1..=horizon {
        // segment s covers rounds (floor(s T / S), floor((s+1) T / S)]
        let seg_of_t = ((t - 1) * segment_count) / horizon;
        while segment < seg_of_t {
            segment += 1;
            let best = argmax(&current);
            let arm = stream.random_range(0..arms);
            let x = current[arm];
            let (first, second) = if arm == best {
                (x - jump, x + jump)
            } else {
                (x + jump, x - jump)
            };
            current[arm] = if (0.0..=1.0).contains(&first) {
                first
            } else if (0.0..=1.0).contains(&second) {
                second
            } else {
                return Err(Error::InfeasibleVariation(format!(
                    "jump {jump} from mean {x} leaves [0, 1] in both directions"
                )));
            };
        }
        data.extend_from_slice(&current);
    }
    MeanSequence::new(horizon, arms, data)
}

/// Smoothly drifting means whose total variation equals `V_T`.
///
/// Every round moves arm `k` by `step * speed_k` in its current direction,
/// where `step = V_T / (T - 1)` and the fastest arm has speed 1, so each
/// round contributes exactly `step` to the variation. Directions flip at
/// random (rate 1%) and reflect before a move would leave `[0, 1]`.
pub fn gen_drift(cfg: &ValidatedConfig, stream: &mut RandomStream) -> Result<MeanSequence> {
    let v = cfg.require_variation()?;
    let horizon = cfg.horizon;
    let arms = cfg.arms;
    let step = if horizon > 1 {
        v / (horizon - 1) as f64
    } else {
        0.0
    };
    if step > 0.5 {
        return Err(Error::InfeasibleVariation(format!(
            "per-round drift {step} exceeds 1/2"
        )));
    }
    let mut current: Vec<f64> = (0..arms).map(|_| stream.random_range(0.2..=0.8)).collect();
    let mut speed: Vec<f64> = (0..arms).map(|_| stream.random::<f64>()).collect();
    let fastest = stream.random_range(0..arms);
    speed[fastest] = 1.0;
    let mut dir: Vec<f64> = (0..arms)
        .map(|_| if stream.random::<bool>() { 1.0 } else { -1.0 })
        .collect();

    let mut data = Vec::with_capacity(horizon as usize * arms);
    data.extend_from_slice(&current);
    for _ in 1..horizon {
        for k in 0..arms {
            if stream.random::<f64>() < 0.01 {
                dir[k] = -dir[k];
            }
            let delta = step * speed[k];
            let next = current[k] + dir[k] * delta;
            if !(0.0..=1.0).contains(&next) {
                dir[k] = -dir[k];
            }
            current[k] = (current[k] + dir[k] * delta).clamp(0.0, 1.0);
        }
        data.extend_from_slice(&current);
    }
    MeanSequence::new(horizon, arms, data)
}

/// Parameters of the batched lower-bound construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HardInstanceParams {
    /// Rounds per batch.
    pub batch_length: u64,
    /// Mean advantage of the good arm.
    pub gap: f64,
    /// Good arm (0-indexed) of every batch.
    pub good_arms: Vec<usize>,
    pub batch_count: u64,
    /// Unrounded batch length.
    pub raw_batch_length: f64,
}

/// Builds the batched hard instance: `ceil(T / batch_length)` batches, each
/// with one arm at `1/2 + gap` and the rest at `1/2`.
///
/// The batch length is `(K T^3 / (1920 V_T^2 B))^(1/3)` rounded to nearest
/// and clamped to `[2, T/2]`; the gap is
/// `min(1/4, K^(1/3) V_T^(1/3) / (1920 B)^(1/3))`, further capped at
/// `V_T / (batch_count - 1)` so that rounding never breaks the budget.
pub fn gen_hard_instance(
    cfg: &ValidatedConfig,
    stream: &mut RandomStream,
) -> Result<(MeanSequence, HardInstanceParams)> {
    let v = validate_hard_regime(cfg)?;
    let horizon = cfg.horizon;
    let k = cfg.arms as f64;
    let t = horizon as f64;
    let b = cfg.query_budget as f64;

    let raw = (k * t.powi(3) / (1920.0 * v * v * b)).cbrt();
    if raw >= t {
        return Err(Error::DegenerateInstance {
            batch_length: raw,
            horizon,
        });
    }
    let upper = (horizon / 2).max(2);
    let batch_length = (raw.round() as u64).clamp(2, upper);
    let batch_count = horizon.div_ceil(batch_length);
    let mut gap = (k.cbrt() * v.cbrt() / (1920.0 * b).cbrt()).min(0.25);
    if batch_count > 1 {
        gap = gap.min(v / (batch_count - 1) as f64);
    }

    let good_arms: Vec<usize> = (0..batch_count)
        .map(|_| stream.random_range(0..cfg.arms))
        .collect();
    let mut data = Vec::with_capacity(horizon as usize * cfg.arms);
    for round in 0..horizon {
        let good = good_arms[(round / batch_length) as usize];
        data.extend((0..cfg.arms).map(|arm| if arm == good { 0.5 + gap } else { 0.5 }));
    }
    let seq = MeanSequence::new(horizon, cfg.arms, data)?;
    Ok((
        seq,
        HardInstanceParams {
            batch_length,
            gap,
            good_arms,
            batch_count,
            raw_batch_length: raw,
        },
    ))
}

/// Reward distribution with mean `mu` supported on `[0, 1]`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RewardLaw {
    #[default]
    Bernoulli,
    /// Uniform on `[mu - w, mu + w]` with `w = min(mu, 1 - mu)`.
    Uniform,
}

/// Counter-based reward draws: the reward of `(t, k)` depends only on the
/// seed, so it is the same no matter which arms were pulled before.
#[derive(Debug, Clone)]
pub struct RewardSampler {
    law: RewardLaw,
    stream: RandomStream,
}

impl RewardSampler {
    pub fn new(seed: u64, law: RewardLaw) -> Self {
        Self {
            law,
            stream: RandomStream::new(seed, StreamId::Reward),
        }
    }

    /// Draws the reward of arm `arm` (0-indexed) at round `t` (1-indexed).
    pub fn sample(&mut self, seq: &MeanSequence, t: u64, arm: usize) -> f64 {
        let word = ((t - 1) as u128 * seq.arms() as u128 + arm as u128) * 2;
        self.stream.seek_word(word);
        let u: f64 = self.stream.random();
        sample_with_law(self.law, seq.mean(t, arm), u)
    }
}

fn sample_with_law(law: RewardLaw, mu: f64, u: f64) -> f64 {
    match law {
        RewardLaw::Bernoulli => {
            if u < mu {
                1.0
            } else {
                0.0
            }
        }
        RewardLaw::Uniform => {
            let w = mu.min(1.0 - mu);
            (mu - w + 2.0 * w * u).clamp(0.0, 1.0)
        }
    }
}

/// One draw with expectation `mu_t^k` from `stream`.
pub fn sample_reward(
    seq: &MeanSequence,
    t: u64,
    arm: usize,
    law: RewardLaw,
    stream: &mut RandomStream,
) -> f64 {
    sample_with_law(law, seq.mean(t, arm), stream.random())
}

/// Which generator a run uses.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnvironmentKind {
    #[default]
    Piecewise,
    Drift,
    HardInstance,
    File,
}

fn default_gap() -> f64 {
    0.5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvironmentSpec {
    #[serde(default)]
    pub kind: EnvironmentKind,
    /// Piecewise segment count; defaults to `1 + ceil(V_T / gap)`, or 2
    /// without a variation budget.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub segments: Option<u64>,
    /// Largest piecewise jump.
    #[serde(default = "default_gap")]
    pub gap: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    #[serde(default)]
    pub reward_law: RewardLaw,
}

impl Default for EnvironmentSpec {
    fn default() -> Self {
        Self {
            kind: EnvironmentKind::default(),
            segments: None,
            gap: default_gap(),
            path: None,
            reward_law: RewardLaw::default(),
        }
    }
}

impl EnvironmentSpec {
    pub fn segment_count(&self, cfg: &ValidatedConfig) -> u64 {
        self.segments.unwrap_or_else(|| match cfg.variation_budget {
            Some(v) if self.gap > 0.0 => 1 + (v / self.gap).ceil() as u64,
            _ => 2,
        })
    }

    /// Generates (or loads) the mean sequence for one run.
    pub fn build(&self, cfg: &ValidatedConfig, seed: u64) -> Result<MeanSequence> {
        let mut stream = RandomStream::new(seed, StreamId::Environment);
        let seq = match self.kind {
            EnvironmentKind::Piecewise => {
                let segments = self.segment_count(cfg).min(cfg.horizon);
                gen_piecewise(cfg, segments, self.gap, &mut stream)?
            }
            EnvironmentKind::Drift => gen_drift(cfg, &mut stream)?,
            EnvironmentKind::HardInstance => gen_hard_instance(cfg, &mut stream)?.0,
            EnvironmentKind::File => {
                let path = self
                    .path
                    .as_ref()
                    .ok_or_else(|| Error::InvalidSpec("file environment needs a path".into()))?;
                MeanSequence::load(path)?
            }
        };
        seq.check_shape(cfg)?;
        Ok(seq)
    }
}

fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ProblemConfig;
    use proptest::strategy::Strategy;

    fn brute_variation(rows: &[Vec<f64>]) -> f64 {
        let mut total = 0.0;
        for t in 0..rows.len().saturating_sub(1) {
            let mut sup = 0.0f64;
            for (now, next) in rows[t].iter().zip(&rows[t + 1]) {
                let d = (next - now).abs();
                if d > sup {
                    sup = d;
                }
            }
            total += sup;
        }
        total
    }

    fn cfg(t: u64, k: usize, b: u64, v: Option<f64>) -> ValidatedConfig {
        let mut c = ProblemConfig::new(t, k, b);
        c.variation_budget = v;
        c.validate().unwrap()
    }

    #[test]
    fn variation_of_constant_is_zero() {
        let seq = MeanSequence::constant(20, &[0.1, 0.9, 0.4]).unwrap();
        assert_eq!(total_variation(&seq), 0.0);
    }

    #[test]
    fn variation_small_example() {
        let seq =
            MeanSequence::from_rows(&[vec![0.5, 0.2], vec![0.8, 0.2], vec![0.8, 0.6]]).unwrap();
        assert!((total_variation(&seq) - 0.7).abs() < 1e-12);
    }

    #[test]
    fn variation_matches_double_loop() {
        let mut s = RandomStream::new(9, StreamId::Environment);
        let rows: Vec<Vec<f64>> = (0..50)
            .map(|_| (0..4).map(|_| s.random::<f64>()).collect())
            .collect();
        let seq = MeanSequence::from_rows(&rows).unwrap();
        assert_eq!(total_variation(&seq), brute_variation(&rows));
    }

    #[test]
    fn rejects_out_of_range_means() {
        let err = MeanSequence::from_rows(&[vec![0.5, 1.2]]).unwrap_err();
        assert!(matches!(err, Error::MeanOutOfRange { t: 1, arm: 2, .. }));
    }

    #[test]
    fn piecewise_single_segment_is_constant() {
        let c = cfg(100, 3, 10, None);
        let seq =
            gen_piecewise(&c, 1, 0.3, &mut RandomStream::new(1, StreamId::Environment)).unwrap();
        assert_eq!(total_variation(&seq), 0.0);
    }

    #[test]
    fn piecewise_single_jump() {
        let c = cfg(100, 3, 10, None);
        let seq =
            gen_piecewise(&c, 2, 0.3, &mut RandomStream::new(1, StreamId::Environment)).unwrap();
        assert!((total_variation(&seq) - 0.3).abs() < 1e-12);
        // the change happens at the segment boundary only
        assert_eq!(seq.row(50), seq.row(1));
        assert_ne!(seq.row(51), seq.row(50));
    }

    #[test]
    fn piecewise_respects_budget() {
        let c = cfg(1000, 4, 100, Some(1.0));
        for seed in 0..20 {
            let seq = gen_piecewise(
                &c,
                10,
                0.5,
                &mut RandomStream::new(seed, StreamId::Environment),
            )
            .unwrap();
            assert!(total_variation(&seq) <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn piecewise_rejects_oversized_jump() {
        let c = cfg(100, 2, 10, None);
        let mut s = RandomStream::new(1, StreamId::Environment);
        assert!(matches!(
            gen_piecewise(&c, 2, 1.5, &mut s),
            Err(Error::InfeasibleVariation(_))
        ));
        assert!(matches!(
            gen_piecewise(&c, 101, 0.1, &mut s),
            Err(Error::InfeasibleVariation(_))
        ));
    }

    #[test]
    fn drift_zero_budget_is_constant() {
        let c = cfg(200, 3, 10, Some(0.0));
        let seq = gen_drift(&c, &mut RandomStream::new(4, StreamId::Environment)).unwrap();
        assert_eq!(total_variation(&seq), 0.0);
    }

    #[test]
    fn drift_spends_budget_exactly() {
        let c = cfg(1000, 4, 100, Some(0.5));
        let a = gen_drift(&c, &mut RandomStream::new(1, StreamId::Environment)).unwrap();
        let b = gen_drift(&c, &mut RandomStream::new(2, StreamId::Environment)).unwrap();
        assert!((total_variation(&a) - 0.5).abs() < 1e-9);
        assert!((total_variation(&b) - 0.5).abs() < 1e-9);
        assert_ne!(a, b);
    }

    #[test]
    fn drift_requires_variation() {
        let c = cfg(100, 2, 10, None);
        assert!(matches!(
            gen_drift(&c, &mut RandomStream::new(1, StreamId::Environment)),
            Err(Error::MissingVariation)
        ));
    }

    #[test]
    fn hard_instance_reference_values() {
        let c = cfg(1920, 2, 240, Some(1.0));
        let (seq, p) =
            gen_hard_instance(&c, &mut RandomStream::new(3, StreamId::Environment)).unwrap();
        // reference values evaluated at 30 significant digits
        assert!((p.raw_batch_length - 31.318_941_129_350_91).abs() < 1e-9);
        assert_eq!(p.batch_length, 31);
        assert!((p.gap - 0.016_311_948_504_870_265).abs() < 1e-12);
        assert_eq!(p.batch_count, 62);
        assert!(total_variation(&seq) <= 1.0);
    }

    #[test]
    fn hard_instance_structure() {
        let c = cfg(5000, 4, 800, Some(2.0));
        let (seq, p) =
            gen_hard_instance(&c, &mut RandomStream::new(5, StreamId::Environment)).unwrap();
        assert!(p.gap <= 0.25);
        for t in 1..=seq.horizon() {
            let row = seq.row(t);
            let good: Vec<usize> = (0..4).filter(|&k| row[k] == 0.5 + p.gap).collect();
            assert_eq!(good.len(), 1);
            assert!(row.iter().all(|&x| x == 0.5 || x == 0.5 + p.gap));
            assert_eq!(good[0], p.good_arms[((t - 1) / p.batch_length) as usize]);
        }
        assert!((p.batch_count - 1) as f64 * p.gap <= 2.0 + 1e-12);
    }

    #[test]
    fn hard_instance_degenerate() {
        // K^3 >= 1920 B with V_T = 1/K pushes the batch past the horizon
        let c = cfg(100, 50, 50, Some(0.02));
        assert!(matches!(
            gen_hard_instance(&c, &mut RandomStream::new(1, StreamId::Environment)),
            Err(Error::DegenerateInstance { .. })
        ));
    }

    #[test]
    fn degenerate_bernoulli() {
        let seq = MeanSequence::from_rows(&[vec![0.0, 1.0]]).unwrap();
        let mut s = RandomStream::new(1, StreamId::Reward);
        for _ in 0..100 {
            assert_eq!(sample_reward(&seq, 1, 0, RewardLaw::Bernoulli, &mut s), 0.0);
            assert_eq!(sample_reward(&seq, 1, 1, RewardLaw::Bernoulli, &mut s), 1.0);
        }
    }

    #[test]
    fn bernoulli_monte_carlo_mean() {
        let seq = MeanSequence::from_rows(&[vec![0.3, 0.6]]).unwrap();
        let mut s = RandomStream::new(2, StreamId::Reward);
        let n = 100_000;
        let sum: f64 = (0..n)
            .map(|_| sample_reward(&seq, 1, 0, RewardLaw::Bernoulli, &mut s))
            .sum();
        assert!((sum / n as f64 - 0.3).abs() < 0.005);
    }

    #[test]
    fn uniform_law_mean_and_support() {
        let seq = MeanSequence::from_rows(&[vec![0.3, 0.9]]).unwrap();
        let mut s = RandomStream::new(2, StreamId::Reward);
        let n = 100_000;
        let mut sum = 0.0;
        for _ in 0..n {
            let r = sample_reward(&seq, 1, 1, RewardLaw::Uniform, &mut s);
            assert!((0.8..=1.0).contains(&r));
            sum += r;
        }
        assert!((sum / n as f64 - 0.9).abs() < 0.002);
    }

    #[test]
    fn sampler_is_positional() {
        let seq = MeanSequence::constant(10, &[0.5, 0.5, 0.5]).unwrap();
        let mut a = RewardSampler::new(77, RewardLaw::Uniform);
        let mut b = RewardSampler::new(77, RewardLaw::Uniform);
        let x = a.sample(&seq, 4, 2);
        for t in 1..=10 {
            b.sample(&seq, t, 0);
        }
        assert_eq!(b.sample(&seq, 4, 2), x);
        assert_ne!(a.sample(&seq, 4, 1), x);
    }

    #[test]
    fn csv_round_trip() {
        let c = cfg(50, 3, 10, Some(0.7));
        let seq = gen_drift(&c, &mut RandomStream::new(8, StreamId::Environment)).unwrap();
        let mut buf = Vec::new();
        seq.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("t,arm_1,arm_2,arm_3\n1,"));
        assert_eq!(MeanSequence::read_csv(buf.as_slice()).unwrap(), seq);
    }

    #[test]
    fn csv_rejects_bad_input() {
        let bad = "t,arm_1,arm_2\n1,0.5,1.5\n";
        assert!(MeanSequence::read_csv(bad.as_bytes()).is_err());
        let skipped = "t,arm_1,arm_2\n2,0.5,0.5\n";
        assert!(MeanSequence::read_csv(skipped.as_bytes()).is_err());
    }

    proptest::proptest! {
        #[test]
        fn variation_matches_brute_force(
            rows in (1usize..200, 1usize..8).prop_flat_map(|(t, k)| {
                proptest::collection::vec(proptest::collection::vec(0.0f64..=1.0, k), t)
            })
        ) {
            let seq = MeanSequence::from_rows(&rows).unwrap();
            proptest::prop_assert_eq!(total_variation(&seq), brute_variation(&rows));
        }

        #[test]
        fn hard_instance_invariants(
            k in 2usize..6,
            t in 500u64..4000,
            budget_frac in 0.1f64..1.0,
            v_frac in 0.0f64..1.0,
            seed in 0u64..1000,
        ) {
            let b = ((t as f64 * budget_frac) as u64).max(k as u64);
            let low = 1.0 / k as f64;
            let high = b as f64 / k as f64;
            let v = low + (high - low) * v_frac;
            let c = cfg(t, k, b, Some(v));
            match gen_hard_instance(&c, &mut RandomStream::new(seed, StreamId::Environment)) {
                Ok((seq, p)) => {
                    proptest::prop_assert!(p.gap <= 0.25);
                    proptest::prop_assert!((p.batch_count - 1) as f64 * p.gap <= v + 1e-12);
                    proptest::prop_assert!(total_variation(&seq) <= v + 1e-12);
                }
                Err(Error::DegenerateInstance { .. }) => {}
                Err(e) => return Err(proptest::test_runner::TestCaseError::fail(e.to_string())),
            }
        }
    }
}
