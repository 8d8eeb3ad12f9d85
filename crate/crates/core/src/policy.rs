//! Base learners run inside query batches.
//!
//! Both learners report an auxiliary quantity with every selection. For UCB1
//! it is the optimistic index of the selected arm; EXP3 reports its largest
//! normalized weight, which is only used for tracing. The change tests compare
//! the index against observed rewards, so another learner only has to fill in
//! [`Selection`].

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The learner's optimistic estimate of the best mean, clamped to `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct PolicyIndex(f64);

impl PolicyIndex {
    pub fn new(raw: f64) -> Self {
        Self(raw.clamp(0.0, 1.0))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// One arm choice: 0-indexed arm, reported index, and the probability with
/// which the arm was drawn (1 for deterministic learners).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Selection {
    pub arm: usize,
    pub index: PolicyIndex,
    pub probability: f64,
}

/// Interface shared by the learners that run inside query batches.
pub trait BasePolicy {
    fn arms(&self) -> usize;

    fn select<R: Rng + ?Sized>(&self, rng: &mut R) -> Selection;

    fn update(&mut self, selection: &Selection, reward: f64) -> Result<()>;
}

fn check_reward(reward: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&reward) {
        return Err(Error::RewardOutOfRange(reward));
    }
    Ok(())
}

fn check_arm(arm: usize, arms: usize) -> Result<()> {
    if arm >= arms {
        return Err(Error::ArmOutOfRange { arm, arms });
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ucb1State {
    pull_counts: Vec<u64>,
    reward_sums: Vec<f64>,
    local_time: u64,
}

impl Ucb1State {
    pub fn new(arms: usize) -> Self {
        Self {
            pull_counts: vec![0; arms],
            reward_sums: vec![0.0; arms],
            local_time: 0,
        }
    }

    /// Builds a state from explicit statistics; `local_time` is their total.
    pub fn from_stats(pull_counts: Vec<u64>, reward_sums: Vec<f64>) -> Self {
        assert_eq!(pull_counts.len(), reward_sums.len());
        let local_time = pull_counts.iter().sum();
        Self {
            pull_counts,
            reward_sums,
            local_time,
        }
    }

    pub fn pull_counts(&self) -> &[u64] {
        &self.pull_counts
    }

    pub fn reward_sums(&self) -> &[f64] {
        &self.reward_sums
    }

    pub fn local_time(&self) -> u64 {
        self.local_time
    }

    pub fn empirical_mean(&self, arm: usize) -> Option<f64> {
        let n = self.pull_counts[arm];
        (n > 0).then(|| self.reward_sums[arm] / n as f64)
    }

    /// Unclamped UCB value of every arm; `None` for unpulled arms.
    pub fn raw_indices(&self) -> Vec<Option<f64>> {
        let log_time = (self.local_time.max(1) as f64).ln();
        self.pull_counts
            .iter()
            .zip(&self.reward_sums)
            .map(|(&n, &s)| {
                (n > 0).then(|| {
                    let n = n as f64;
                    s / n + (2.0 * log_time / n).sqrt()
                })
            })
            .collect()
    }

    /// Lowest-id unpulled arm with index 1, else the UCB argmax (ties to the
    /// lowest id) with its index clamped to `[0, 1]`.
    pub fn select_arm(&self) -> (usize, PolicyIndex) {
        if let Some(arm) = self.pull_counts.iter().position(|&n| n == 0) {
            return (arm, PolicyIndex::new(1.0));
        }
        let mut best = 0;
        let mut best_value = f64::NEG_INFINITY;
        for (arm, value) in self.raw_indices().into_iter().enumerate() {
            let value = value.expect("all arms pulled");
            if value > best_value {
                best = arm;
                best_value = value;
            }
        }
        (best, PolicyIndex::new(best_value))
    }

    pub fn record(&mut self, arm: usize, reward: f64) -> Result<()> {
        check_arm(arm, self.pull_counts.len())?;
        check_reward(reward)?;
        self.pull_counts[arm] += 1;
        self.reward_sums[arm] += reward;
        self.local_time += 1;
        Ok(())
    }
}

impl BasePolicy for Ucb1State {
    fn arms(&self) -> usize {
        self.pull_counts.len()
    }

    fn select<R: Rng + ?Sized>(&self, _rng: &mut R) -> Selection {
        let (arm, index) = self.select_arm();
        Selection {
            arm,
            index,
            probability: 1.0,
        }
    }

    fn update(&mut self, selection: &Selection, reward: f64) -> Result<()> {
        self.record(selection.arm, reward)
    }
}

/// Weights above this are rescaled by their maximum.
const WEIGHT_CEILING: f64 = 1e300;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Exp3State {
    weights: Vec<f64>,
    gamma: f64,
}

impl Exp3State {
    pub fn new(arms: usize, gamma: f64) -> Self {
        assert!((0.0..=1.0).contains(&gamma), "gamma must lie in [0, 1]");
        Self {
            weights: vec![1.0; arms],
            gamma,
        }
    }

    pub fn with_weights(weights: Vec<f64>, gamma: f64) -> Self {
        assert!(weights.iter().all(|&w| w > 0.0 && w.is_finite()));
        Self { weights, gamma }
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Resets every weight to 1.
    pub fn reset(&mut self) {
        self.weights.iter_mut().for_each(|w| *w = 1.0);
    }

    /// `p_k = (1 - gamma) w_k / sum(w) + gamma / K`.
    pub fn probabilities(&self) -> Vec<f64> {
        let k = self.weights.len() as f64;
        let total: f64 = self.weights.iter().sum();
        self.weights
            .iter()
            .map(|w| (1.0 - self.gamma) * w / total + self.gamma / k)
            .collect()
    }

    /// Importance-weighted exponential update of the played arm.
    pub fn record(&mut self, arm: usize, reward: f64, probability: f64) -> Result<()> {
        check_arm(arm, self.weights.len())?;
        check_reward(reward)?;
        if probability.is_nan() || probability <= 0.0 {
            return Err(Error::ZeroProbability(probability));
        }
        let k = self.weights.len() as f64;
        let estimate = reward / probability;
        self.weights[arm] *= (self.gamma * estimate / k).exp();
        let max = self.weights.iter().copied().fold(0.0, f64::max);
        if max > WEIGHT_CEILING {
            for w in &mut self.weights {
                *w /= max;
                // keep weights strictly positive after rescaling
                if *w < f64::MIN_POSITIVE {
                    *w = f64::MIN_POSITIVE;
                }
            }
        }
        Ok(())
    }
}

impl BasePolicy for Exp3State {
    fn arms(&self) -> usize {
        self.weights.len()
    }

    fn select<R: Rng + ?Sized>(&self, rng: &mut R) -> Selection {
        let probs = self.probabilities();
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut arm = probs.len() - 1;
        for (k, p) in probs.iter().enumerate() {
            acc += p;
            if u < acc {
                arm = k;
                break;
            }
        }
        let best = self.weights.iter().copied().fold(0.0, f64::max);
        let total: f64 = self.weights.iter().sum();
        Selection {
            arm,
            index: PolicyIndex::new(best / total),
            probability: probs[arm],
        }
    }

    fn update(&mut self, selection: &Selection, reward: f64) -> Result<()> {
        self.record(selection.arm, reward, selection.probability)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{RandomStream, StreamId};
    use proptest::prelude::*;

    #[test]
    fn fresh_ucb_picks_first_arm() {
        let s = Ucb1State::new(3);
        assert_eq!(s.select_arm(), (0, PolicyIndex::new(1.0)));
    }

    #[test]
    fn ucb_initialization_order() {
        let mut s = Ucb1State::new(3);
        s.record(0, 0.2).unwrap();
        assert_eq!(s.select_arm().0, 1);
        s.record(2, 0.2).unwrap();
        assert_eq!(s.select_arm().0, 1);
    }

    #[test]
    fn ucb_two_arm_index() {
        let s = Ucb1State::from_stats(vec![1, 1], vec![1.0, 0.0]);
        let (arm, index) = s.select_arm();
        assert_eq!(arm, 0);
        // 1 + sqrt(2 ln 2), evaluated at 30 digits
        let raw = s.raw_indices()[0].unwrap();
        assert!((raw - 2.177_410_022_515_475).abs() < 1e-12);
        assert_eq!(index.value(), 1.0);
    }

    #[test]
    fn ucb_ties_go_to_lowest_id() {
        let s = Ucb1State::from_stats(vec![10, 10], vec![5.0, 5.0]);
        assert_eq!(s.select_arm().0, 0);
        let idx = s.raw_indices();
        assert_eq!(idx[0], idx[1]);
    }

    #[test]
    fn ucb_update_examples() {
        let mut s = Ucb1State::new(3);
        s.record(1, 0.7).unwrap();
        assert_eq!(s.pull_counts(), &[0, 1, 0]);
        assert_eq!(s.reward_sums()[1], 0.7);

        let mut s = Ucb1State::new(2);
        s.record(0, 1.0).unwrap();
        s.record(0, 0.0).unwrap();
        assert_eq!(s.empirical_mean(0), Some(0.5));

        let mut s = Ucb1State::new(2);
        for _ in 0..1000 {
            s.record(0, 0.25).unwrap();
        }
        assert_eq!(s.empirical_mean(0), Some(0.25));
        assert_eq!(s.local_time(), 1000);
    }

    #[test]
    fn ucb_rejects_bad_reward() {
        let mut s = Ucb1State::new(2);
        assert!(matches!(s.record(0, 1.5), Err(Error::RewardOutOfRange(_))));
        assert!(matches!(s.record(0, -0.1), Err(Error::RewardOutOfRange(_))));
        assert_eq!(s.local_time(), 0);
    }

    #[test]
    fn exp3_probability_examples() {
        let close = |a: &[f64], b: &[f64]| a.iter().zip(b).all(|(x, y)| (x - y).abs() < 1e-12);
        assert!(close(
            &Exp3State::with_weights(vec![1.0, 1.0], 0.2).probabilities(),
            &[0.5, 0.5]
        ));
        assert!(close(
            &Exp3State::with_weights(vec![3.0, 1.0], 0.0).probabilities(),
            &[0.75, 0.25]
        ));
        assert!(close(
            &Exp3State::with_weights(vec![3.0, 1.0], 0.2).probabilities(),
            &[0.7, 0.3]
        ));
    }

    #[test]
    fn exp3_zero_reward_leaves_weights() {
        let mut s = Exp3State::with_weights(vec![2.0, 3.0], 0.3);
        s.record(1, 0.0, 0.4).unwrap();
        assert_eq!(s.weights(), &[2.0, 3.0]);
    }

    #[test]
    fn exp3_update_example() {
        let mut s = Exp3State::new(2, 0.2);
        s.record(0, 1.0, 0.5).unwrap();
        assert!((s.weights()[0] - 1.221_402_758_160_169_8).abs() < 1e-12);
        assert_eq!(s.weights()[1], 1.0);
    }

    #[test]
    fn exp3_rejects_zero_probability() {
        let mut s = Exp3State::new(2, 0.2);
        assert!(matches!(
            s.record(0, 1.0, 0.0),
            Err(Error::ZeroProbability(_))
        ));
    }

    #[test]
    fn exp3_renormalizes_without_changing_probabilities() {
        let mut big = Exp3State::with_weights(vec![6e299, 1e290, 1.0], 0.1);
        let mut small = big.clone();
        small.weights.iter_mut().for_each(|w| *w /= 6e299);
        big.record(0, 1.0, 0.05).unwrap();
        small.record(0, 1.0, 0.05).unwrap();
        assert!(big.weights().iter().all(|w| w.is_finite() && *w > 0.0));
        assert!(big.weights().iter().copied().fold(0.0, f64::max) <= 1.0);
        for (p, q) in big.probabilities().iter().zip(small.probabilities()) {
            assert!((p - q).abs() < 1e-12);
        }
    }

    #[test]
    fn exp3_long_run_stays_finite() {
        let mut s = Exp3State::new(3, 0.05);
        let mut rng = RandomStream::new(1, StreamId::Policy);
        for _ in 0..200_000 {
            let sel = s.select(&mut rng);
            s.update(&sel, if sel.arm == 0 { 1.0 } else { 0.0 })
                .unwrap();
        }
        assert!(s.weights().iter().all(|w| w.is_finite() && *w > 0.0));
        assert!(s.probabilities()[0] > 0.9);
    }

    proptest! {
        #[test]
        fn exp3_probs_on_simplex(
            weights in proptest::collection::vec(1e-6f64..1e6, 2..10),
            gamma in 0.0f64..=1.0,
        ) {
            let k = weights.len() as f64;
            let s = Exp3State::with_weights(weights, gamma);
            let p = s.probabilities();
            prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            for x in p {
                prop_assert!(x >= gamma / k - 1e-15);
            }
        }

        #[test]
        fn exp3_probs_scale_invariant(
            weights in proptest::collection::vec(1e-3f64..1e3, 2..8),
            gamma in 0.0f64..=1.0,
            scale in 1e-3f64..1e3,
        ) {
            let a = Exp3State::with_weights(weights.clone(), gamma).probabilities();
            let b = Exp3State::with_weights(weights.iter().map(|w| w * scale).collect(), gamma)
                .probabilities();
            for (x, y) in a.iter().zip(&b) {
                prop_assert!((x - y).abs() < 1e-12);
            }
        }

        #[test]
        fn ucb_shift_invariance(
            n in 1u64..50,
            sums in proptest::collection::vec(0.0f64..1.0, 2..6),
            shift in 0.0f64..1.0,
        ) {
            let k = sums.len();
            let sums: Vec<f64> = sums.iter().map(|s| s * n as f64).collect();
            let a = Ucb1State::from_stats(vec![n; k], sums.clone());
            let b = Ucb1State::from_stats(vec![n; k], sums.iter().map(|s| s + shift).collect());
            prop_assert_eq!(a.select_arm().0, b.select_arm().0);
        }

        #[test]
        fn reported_index_in_unit_interval(
            counts in proptest::collection::vec(0u64..20, 2..6),
            frac in 0.0f64..=1.0,
        ) {
            let sums = counts.iter().map(|&n| n as f64 * frac).collect();
            let s = Ucb1State::from_stats(counts, sums);
            let v = s.select_arm().1.value();
            prop_assert!((0.0..=1.0).contains(&v));
        }
    }
}
