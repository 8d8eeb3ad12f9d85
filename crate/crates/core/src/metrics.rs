//! Regret, its query/error/drift split, run lengths, and scaling fits.
//!
//! Everything here is a pure function of an [`ActionLog`] and the
//! [`MeanSequence`] it was played against.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::action_log::ActionLog;
use crate::environment::MeanSequence;
use crate::error::{Error, Result};
use crate::fmt::sig17;

/// Neumaier compensated sum, so long regret sums do not depend on
/// summation order beyond a few ulps.
#[derive(Debug, Clone, Copy, Default)]
struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

impl std::iter::Sum<f64> for CompensatedSum {
    fn sum<I: Iterator<Item = f64>>(iter: I) -> Self {
        let mut acc = Self::default();
        iter.for_each(|x| acc.add(x));
        acc
    }
}

/// Pseudo-regret `sum_t (max_k mu_t^k - mu_t^{a_t})`.
pub fn dynamic_regret(log: &ActionLog, seq: &MeanSequence) -> f64 {
    log.records()
        .iter()
        .map(|r| seq.best_mean(r.t) - seq.mean(r.t, r.arm))
        .sum::<CompensatedSum>()
        .value()
}

/// Regret against realized rewards, `sum_t (max_k mu_t^k - X_t)`.
///
/// Needs the in-memory `realized` field, so logs read back from CSV give
/// `NaN` unless every round was a query round.
pub fn dynamic_regret_realized(log: &ActionLog, seq: &MeanSequence) -> f64 {
    log.records()
        .iter()
        .map(|r| seq.best_mean(r.t) - r.realized)
        .sum::<CompensatedSum>()
        .value()
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct RegretParts {
    pub query: f64,
    pub error: f64,
    pub drift: f64,
}

impl RegretParts {
    pub fn total(&self) -> f64 {
        self.query + self.error + self.drift
    }
}

type OwnerKey = (u64, u32, u32, u64);

/// Splits the regret into query, error and drift parts.
///
/// Query rounds contribute their gap to `query`. On a non-query round the
/// benchmark is the best empirical mean among arms the owning instance has
/// observed before `t`; `error` collects `bench - mu_t^{a_t}` and `drift`
/// collects `mu_t^* - bench`. An owner with no feedback yet uses
/// `bench = mu_t^{a_t}`, so such rounds count entirely as drift.
pub fn decompose_regret(log: &ActionLog, seq: &MeanSequence) -> RegretParts {
    let arms = seq.arms();
    let mut feedback: HashMap<OwnerKey, (Vec<f64>, Vec<u64>)> = HashMap::new();
    let mut query = CompensatedSum::default();
    let mut error = CompensatedSum::default();
    let mut drift = CompensatedSum::default();
    for r in log.records() {
        let best = seq.best_mean(r.t);
        let played = seq.mean(r.t, r.arm);
        let (sums, counts) = feedback
            .entry(r.owner_key())
            .or_insert_with(|| (vec![0.0; arms], vec![0; arms]));
        match r.reward {
            Some(x) if r.query => {
                query.add(best - played);
                sums[r.arm] += x;
                counts[r.arm] += 1;
            }
            _ => {
                let bench = sums
                    .iter()
                    .zip(counts.iter())
                    .filter(|(_, &c)| c > 0)
                    .map(|(s, &c)| s / c as f64)
                    .fold(None, |acc: Option<f64>, m| {
                        Some(acc.map_or(m, |a| a.max(m)))
                    })
                    .unwrap_or(played);
                error.add(bench - played);
                drift.add(best - bench);
            }
        }
    }
    RegretParts {
        query: query.value(),
        error: error.value(),
        drift: drift.value(),
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunLengthStats {
    pub max_nonquery_run: u64,
    pub max_query_run: u64,
    /// Run length to number of maximal non-query runs of that length.
    pub nonquery_histogram: BTreeMap<u64, u64>,
    pub query_histogram: BTreeMap<u64, u64>,
}

/// Maximal runs of equal query status; a block boundary ends every run.
pub fn run_length_stats(log: &ActionLog) -> RunLengthStats {
    let mut stats = RunLengthStats::default();
    let close = |query: bool, len: u64, stats: &mut RunLengthStats| {
        if len == 0 {
            return;
        }
        let (max, hist) = if query {
            (&mut stats.max_query_run, &mut stats.query_histogram)
        } else {
            (&mut stats.max_nonquery_run, &mut stats.nonquery_histogram)
        };
        *max = (*max).max(len);
        *hist.entry(len).or_default() += 1;
    };

    let mut current: Option<((u64, u32), bool)> = None;
    let mut len = 0u64;
    for r in log.records() {
        let key = (r.block_key(), r.query);
        if current == Some(key) {
            len += 1;
        } else {
            if let Some((_, q)) = current {
                close(q, len, &mut stats);
            }
            current = Some(key);
            len = 1;
        }
    }
    if let Some((_, q)) = current {
        close(q, len, &mut stats);
    }
    stats
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn fit_scaling(points: &[(f64, f64)]) -> Result<f64> {
    if points.len() < 3 {
        return Err(Error::InsufficientPoints(points.len()));
    }
    if let Some(&(x, y)) = points.iter().find(|(x, y)| !(*x > 0.0 && *y > 0.0)) {
        return Err(Error::NonPositiveInput(x, y));
    }
    Ok(log_log_slope(points))
}

pub(crate) fn log_log_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let (lx, ly): (Vec<f64>, Vec<f64>) = points.iter().map(|(x, y)| (x.ln(), y.ln())).unzip();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

/// Query share of one phase.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseFraction {
    pub phase: u64,
    pub rounds: u64,
    pub queries: u64,
    /// Ended by a restart rather than by the horizon.
    pub restarted: bool,
}

impl PhaseFraction {
    pub fn fraction(&self) -> f64 {
        self.queries as f64 / self.rounds as f64
    }
}

pub fn phase_query_fractions(log: &ActionLog) -> Vec<PhaseFraction> {
    let mut out: Vec<PhaseFraction> = Vec::new();
    for r in log.records() {
        match out.last_mut() {
            Some(p) if p.phase == r.phase => {
                p.rounds += 1;
                p.queries += r.query as u64;
            }
            _ => {
                if let Some(p) = out.last_mut() {
                    p.restarted = true;
                }
                out.push(PhaseFraction {
                    phase: r.phase,
                    rounds: 1,
                    queries: r.query as u64,
                    restarted: false,
                });
            }
        }
    }
    out
}

pub const RESULTS_HEADER: [&str; 13] = [
    "seed",
    "T",
    "K",
    "B",
    "V_T",
    "algo",
    "R_T",
    "R_query",
    "R_error",
    "R_drift",
    "queries",
    "max_nq_run",
    "max_q_run",
];

/// Summary of one run, written as one row of a results file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegretReport {
    pub seed: u64,
    pub horizon: u64,
    pub arms: usize,
    pub budget: u64,
    pub variation: Option<f64>,
    pub algorithm: String,
    pub total: f64,
    pub parts: RegretParts,
    pub queries: u64,
    pub max_nonquery_run: u64,
    pub max_query_run: u64,
    pub phase_fractions: Vec<f64>,
}

/// Run identity copied into a [`RegretReport`].
#[derive(Debug, Clone, PartialEq)]
pub struct RunMeta {
    pub seed: u64,
    pub horizon: u64,
    pub arms: usize,
    pub budget: u64,
    pub variation: Option<f64>,
    pub algorithm: String,
}

impl RegretReport {
    pub fn from_log(meta: RunMeta, log: &ActionLog, seq: &MeanSequence) -> Self {
        let runs = run_length_stats(log);
        Self {
            seed: meta.seed,
            horizon: meta.horizon,
            arms: meta.arms,
            budget: meta.budget,
            variation: meta.variation,
            algorithm: meta.algorithm,
            total: dynamic_regret(log, seq),
            parts: decompose_regret(log, seq),
            queries: log.queries(),
            max_nonquery_run: runs.max_nonquery_run,
            max_query_run: runs.max_query_run,
            phase_fractions: phase_query_fractions(log)
                .iter()
                .map(PhaseFraction::fraction)
                .collect(),
        }
    }

    pub fn csv_row(&self) -> [String; 13] {
        [
            self.seed.to_string(),
            self.horizon.to_string(),
            self.arms.to_string(),
            self.budget.to_string(),
            self.variation.map(sig17).unwrap_or_default(),
            self.algorithm.clone(),
            sig17(self.total),
            sig17(self.parts.query),
            sig17(self.parts.error),
            sig17(self.parts.drift),
            self.queries.to_string(),
            self.max_nonquery_run.to_string(),
            self.max_query_run.to_string(),
        ]
    }
}

/// Sample mean and standard error of the mean.
pub fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::action_log::RoundRecord;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rec(t: u64, arm: usize, query: bool, reward: f64) -> RoundRecord {
        RoundRecord {
            t,
            phase: 1,
            n: 0,
            m: 0,
            tau: 0,
            arm,
            query,
            on_demand: false,
            reward: query.then_some(reward),
            realized: reward,
        }
    }

    fn random_case(seed: u64) -> (ActionLog, MeanSequence) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t = rng.random_range(1..=200u64);
        let k = rng.random_range(2..=8usize);
        let means: Vec<f64> = (0..t as usize * k).map(|_| rng.random()).collect();
        let seq = MeanSequence::new(t, k, means).unwrap();
        let mut phase = 1;
        let mut n = 0;
        let records = (1..=t)
            .map(|r| {
                if rng.random_bool(0.05) {
                    phase += 1;
                    n = 0;
                } else if rng.random_bool(0.1) {
                    n += 1;
                }
                let query = rng.random_bool(0.4);
                RoundRecord {
                    t: r,
                    phase,
                    n,
                    m: rng.random_range(0..=n),
                    tau: 0,
                    arm: rng.random_range(0..k),
                    query,
                    on_demand: false,
                    reward: query.then(|| rng.random()),
                    realized: 0.0,
                }
            })
            .collect();
        (ActionLog::from_records(records), seq)
    }

    fn regret_oracle(log: &ActionLog, seq: &MeanSequence) -> f64 {
        let mut total = 0.0;
        for r in log.records() {
            let mut best = 0.0f64;
            for k in 0..seq.arms() {
                if seq.mean(r.t, k) > best {
                    best = seq.mean(r.t, k);
                }
            }
            total += best;
        }
        for r in log.records() {
            total -= seq.mean(r.t, r.arm);
        }
        total
    }

    fn runs_oracle(log: &ActionLog) -> (u64, u64) {
        let recs = log.records();
        let (mut mq, mut mn) = (0u64, 0u64);
        let mut i = 0;
        while i < recs.len() {
            let mut j = i;
            while j + 1 < recs.len()
                && recs[j + 1].query == recs[i].query
                && recs[j + 1].phase == recs[i].phase
                && recs[j + 1].n == recs[i].n
            {
                j += 1;
            }
            let len = (j - i + 1) as u64;
            if recs[i].query {
                mq = mq.max(len);
            } else {
                mn = mn.max(len);
            }
            i = j + 1;
        }
        (mn, mq)
    }

    #[test]
    fn optimal_play_has_zero_regret() {
        let seq = MeanSequence::from_rows(&[vec![0.1, 0.9], vec![0.8, 0.2]]).unwrap();
        let log = ActionLog::from_records(vec![rec(1, 1, true, 1.0), rec(2, 0, false, 0.0)]);
        assert_eq!(dynamic_regret(&log, &seq), 0.0);
    }

    #[test]
    fn constant_gap_regret() {
        let seq = MeanSequence::constant(10, &[0.9, 0.4]).unwrap();
        let log = ActionLog::from_records((1..=10).map(|t| rec(t, 1, true, 0.0)).collect());
        assert!((dynamic_regret(&log, &seq) - 5.0).abs() < 1e-12);
    }

    #[test]
    fn all_query_log_has_no_error_or_drift() {
        let seq = MeanSequence::constant(6, &[0.3, 0.6]).unwrap();
        let log = ActionLog::from_records(
            (1..=6)
                .map(|t| rec(t, (t % 2) as usize, true, 0.5))
                .collect(),
        );
        let p = decompose_regret(&log, &seq);
        assert_eq!((p.error, p.drift), (0.0, 0.0));
        assert!((p.query - 0.9).abs() < 1e-12);
    }

    #[test]
    fn decomposition_hand_case() {
        // arm 0 observed at 1.0 and 0.0, arm 1 at 1.0 -> bench 1.0
        let seq = MeanSequence::constant(4, &[0.5, 0.7]).unwrap();
        let log = ActionLog::from_records(vec![
            rec(1, 0, true, 1.0),
            rec(2, 0, true, 0.0),
            rec(3, 1, true, 1.0),
            rec(4, 0, false, 0.0),
        ]);
        let p = decompose_regret(&log, &seq);
        assert!((p.query - 0.4).abs() < 1e-12);
        assert!((p.error - 0.5).abs() < 1e-12);
        assert!((p.drift + 0.3).abs() < 1e-12);
    }

    #[test]
    fn unobserved_owner_counts_as_drift() {
        let seq = MeanSequence::constant(2, &[0.5, 0.7]).unwrap();
        let log = ActionLog::from_records(vec![rec(1, 0, false, 0.0), rec(2, 0, false, 0.0)]);
        let p = decompose_regret(&log, &seq);
        assert_eq!(p.error, 0.0);
        assert!((p.drift - 0.4).abs() < 1e-12);
    }

    #[test]
    fn run_length_cases() {
        let all_q = ActionLog::from_records((1..=5).map(|t| rec(t, 0, true, 0.0)).collect());
        assert_eq!(run_length_stats(&all_q).max_nonquery_run, 0);
        assert_eq!(run_length_stats(&all_q).max_query_run, 5);

        let alt = ActionLog::from_records((1..=6).map(|t| rec(t, 0, t % 2 == 0, 0.0)).collect());
        let s = run_length_stats(&alt);
        assert_eq!((s.max_nonquery_run, s.max_query_run), (1, 1));
        assert_eq!(s.query_histogram.get(&1), Some(&3));
    }

    #[test]
    fn runs_stop_at_block_boundaries() {
        let mut recs: Vec<RoundRecord> = (1..=6).map(|t| rec(t, 0, false, 0.0)).collect();
        for r in &mut recs[3..] {
            r.n = 1;
        }
        let s = run_length_stats(&ActionLog::from_records(recs));
        assert_eq!(s.max_nonquery_run, 3);
        assert_eq!(s.nonquery_histogram.get(&3), Some(&2));
    }

    #[test]
    fn fit_exact_power_laws() {
        let pts: Vec<(f64, f64)> = [1.0, 2.0, 5.0, 10.0, 40.0]
            .iter()
            .map(|&x: &f64| (x, 3.0 * x.powf(-1.0 / 3.0)))
            .collect();
        assert!((fit_scaling(&pts).unwrap() + 1.0 / 3.0).abs() < 1e-9);
        let flat = [(1.0, 2.0), (2.0, 2.0), (3.0, 2.0)];
        assert!(fit_scaling(&flat).unwrap().abs() < 1e-12);
        let sq: Vec<(f64, f64)> = (1..6).map(|x| (x as f64, (x * x) as f64)).collect();
        assert!((fit_scaling(&sq).unwrap() - 2.0).abs() < 1e-9);
    }

    #[test]
    fn fit_rejects_bad_input() {
        assert!(matches!(
            fit_scaling(&[(1.0, 1.0), (2.0, 2.0)]),
            Err(Error::InsufficientPoints(2))
        ));
        assert!(matches!(
            fit_scaling(&[(1.0, 1.0), (2.0, 0.0), (3.0, 1.0)]),
            Err(Error::NonPositiveInput(..))
        ));
    }

    #[test]
    fn phase_fractions_flag_restarts() {
        let mut recs: Vec<RoundRecord> = (1..=6).map(|t| rec(t, 0, t <= 2, 0.0)).collect();
        for r in &mut recs[4..] {
            r.phase = 2;
        }
        let f = phase_query_fractions(&ActionLog::from_records(recs));
        assert_eq!(f.len(), 2);
        assert!(f[0].restarted && !f[1].restarted);
        assert_eq!(f[0].fraction(), 0.5);
        assert_eq!(f[1].fraction(), 0.0);
    }

    #[test]
    fn report_row_layout() {
        let seq = MeanSequence::constant(2, &[0.5, 0.7]).unwrap();
        let log = ActionLog::from_records(vec![rec(1, 0, true, 1.0), rec(2, 1, false, 0.0)]);
        let meta = RunMeta {
            seed: 4,
            horizon: 2,
            arms: 2,
            budget: 1,
            variation: None,
            algorithm: "hyque".into(),
        };
        let row = RegretReport::from_log(meta, &log, &seq).csv_row();
        assert_eq!(row[4], "");
        assert_eq!(row[5], "hyque");
        assert_eq!(row[10], "1");
    }

    #[test]
    fn mean_and_standard_error() {
        let (m, se) = mean_and_se(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        assert!((se - (5.0f64 / 3.0 / 4.0).sqrt()).abs() < 1e-12);
        assert_eq!(mean_and_se(&[7.0]), (7.0, 0.0));
    }

    proptest! {
        #[test]
        fn oracles_agree(seed in 0u64..10_000) {
            let (log, seq) = random_case(seed);
            let fast = dynamic_regret(&log, &seq);
            prop_assert!((fast - regret_oracle(&log, &seq)).abs() < 1e-9);
            prop_assert!((decompose_regret(&log, &seq).total() - fast).abs() < 1e-9);
            let s = run_length_stats(&log);
            prop_assert_eq!((s.max_nonquery_run, s.max_query_run), runs_oracle(&log));
            let counted: u64 = s.query_histogram.iter().chain(&s.nonquery_histogram)
                .map(|(len, c)| len * c).sum();
            prop_assert_eq!(counted, log.len() as u64);
        }
    }
}
