//! Hybrid query allocation.
//!
//! Time is cut into phases; each phase runs blocks of `b * 2^n` rounds for
//! `n = 0, 1, 2, ...`, every block scheduled by [`crate::baque`]. Query
//! rounds feed two change tests, and a failing test ends the phase so the
//! next round starts a fresh phase at `n = 0`. Non-query rounds replay arm
//! frequencies unless cumulative usage lags the linear pace `t B / T` by more
//! than `min(T / sqrt(B), 2^n, T - t)`, in which case the round is turned
//! into a query for the owning instance.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::action_log::{ActionLog, RoundRecord};
use crate::baque::BlockSchedule;
use crate::config::{budget_ratio, ValidatedConfig};
use crate::environment::{MeanSequence, RewardLaw, RewardSampler};
use crate::error::{Error, Result};
use crate::fmt::sig17;
use crate::ledger::BudgetLedger;
use crate::rng::{RandomStream, StreamId};

/// Logarithm used for the `(log T + 1)` multiplier of the confidence radius.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LogBase {
    #[default]
    Natural,
    Binary,
}

/// Divisor of the reward sum in the end-of-batch test.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EndTestNormalizer {
    /// `2^m`, the nominal batch size of an order-`m` instance.
    #[default]
    Nominal,
    /// The number of recorded query rounds.
    QueryCount,
}

fn default_scale() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HyqueOptions {
    #[serde(default)]
    pub log_base: LogBase,
    #[serde(default)]
    pub end_test_normalizer: EndTestNormalizer,
    /// Multiplier on the confidence radius. 1 is the unmodified radius;
    /// smaller values make the change tests reachable at desk-scale horizons.
    #[serde(default = "default_scale")]
    pub detection_scale: f64,
}

impl Default for HyqueOptions {
    fn default() -> Self {
        Self {
            log_base: LogBase::default(),
            end_test_normalizer: EndTestNormalizer::default(),
            detection_scale: default_scale(),
        }
    }
}

/// Confidence radius
/// `6 (log T + 1) log(T / delta) (sqrt(K ln t / t) + K / t)`.
pub fn rho_hat(t_count: u64, cfg: &ValidatedConfig, opts: &HyqueOptions) -> f64 {
    assert!(t_count >= 1, "rho_hat needs at least one round");
    let horizon = cfg.horizon as f64;
    let log_t_big = match opts.log_base {
        LogBase::Natural => horizon.ln(),
        LogBase::Binary => horizon.log2(),
    };
    let multiplier = 6.0 * (log_t_big + 1.0) * (horizon / cfg.confidence).ln();
    let t = t_count as f64;
    let k = cfg.arms as f64;
    let rho = (k * t.ln() / t).sqrt() + k / t;
    opts.detection_scale * multiplier * rho
}

/// Query history of one instance within the current phase.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DetectionState {
    history: Vec<DetectionEntry>,
    running_min: f64,
    reward_sum: f64,
    discrepancy_sum: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectionEntry {
    pub t: u64,
    pub index: f64,
    pub reward: f64,
}

impl DetectionState {
    pub fn record(&mut self, t: u64, index: f64, reward: f64) {
        if self.history.is_empty() || index < self.running_min {
            self.running_min = index;
        }
        self.reward_sum += reward;
        self.discrepancy_sum += index - reward;
        self.history.push(DetectionEntry { t, index, reward });
    }

    pub fn history(&self) -> &[DetectionEntry] {
        &self.history
    }

    pub fn len(&self) -> usize {
        self.history.len()
    }

    pub fn is_empty(&self) -> bool {
        self.history.is_empty()
    }

    /// Minimum index recorded so far.
    pub fn running_min(&self) -> f64 {
        self.running_min
    }
}

/// Both sides of a change-test inequality; the test fails when
/// `statistic >= threshold`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestEval {
    pub statistic: f64,
    pub threshold: f64,
}

impl TestEval {
    pub fn failed(&self) -> bool {
        self.statistic >= self.threshold
    }

    pub fn margin(&self) -> f64 {
        self.statistic - self.threshold
    }
}

/// End-of-batch test for an order-`scale` instance:
/// `(1 / 2^m) sum R >= U + 9 rho_hat(2^m)`.
pub fn change_test_end(
    state: &DetectionState,
    scale: u32,
    cfg: &ValidatedConfig,
    opts: &HyqueOptions,
) -> TestEval {
    let nominal = 1u64 << scale;
    let normalizer = match opts.end_test_normalizer {
        EndTestNormalizer::Nominal => nominal as f64,
        EndTestNormalizer::QueryCount => state.len().max(1) as f64,
    };
    TestEval {
        statistic: state.reward_sum / normalizer,
        threshold: state.running_min + 9.0 * rho_hat(nominal, cfg, opts),
    }
}

/// Running discrepancy test:
/// `(1 / |S|) sum (index - R) >= 3 rho_hat(|S|)`.
pub fn change_test_running(
    state: &DetectionState,
    cfg: &ValidatedConfig,
    opts: &HyqueOptions,
) -> TestEval {
    let count = state.len().max(1);
    TestEval {
        statistic: state.discrepancy_sum / count as f64,
        threshold: 3.0 * rho_hat(count as u64, cfg, opts),
    }
}

/// True when usage `used` lags `t B / T` by more than
/// `min(T / sqrt(B), 2^n, T - t)` at round `t`.
pub fn on_demand_check(used: u64, t: u64, n: u32, cfg: &ValidatedConfig) -> bool {
    let horizon = cfg.horizon as f64;
    let budget = cfg.query_budget as f64;
    let buffer = (horizon / budget.sqrt())
        .min(2f64.powi(n as i32))
        .min((cfg.horizon - t) as f64);
    (used as f64) < t as f64 * budget / horizon - buffer
}

/// Detection statistics of one query round.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRecord {
    pub t: u64,
    pub phase: u64,
    pub n: u32,
    pub m: u32,
    pub tau: u64,
    pub on_demand: bool,
    pub arm: usize,
    pub index: f64,
    pub reward: f64,
    pub running_min: f64,
    pub running: TestEval,
    pub end: Option<TestEval>,
    pub restart: bool,
}

pub const TRACE_HEADER: [&str; 16] = [
    "t",
    "phase",
    "n",
    "m",
    "tau",
    "on_demand",
    "arm",
    "index",
    "reward",
    "running_min",
    "running_stat",
    "running_threshold",
    "end_stat",
    "end_threshold",
    "margin",
    "restart",
];

pub fn write_trace_csv<W: Write>(trace: &[TraceRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TRACE_HEADER)?;
    for r in trace {
        let margin = r
            .end
            .map_or(r.running.margin(), |e| e.margin().max(r.running.margin()));
        w.write_record([
            r.t.to_string(),
            r.phase.to_string(),
            r.n.to_string(),
            r.m.to_string(),
            r.tau.to_string(),
            (r.on_demand as u8).to_string(),
            (r.arm + 1).to_string(),
            sig17(r.index),
            sig17(r.reward),
            sig17(r.running_min),
            sig17(r.running.statistic),
            sig17(r.running.threshold),
            r.end.map(|e| sig17(e.statistic)).unwrap_or_default(),
            r.end.map(|e| sig17(e.threshold)).unwrap_or_default(),
            sig17(margin),
            (r.restart as u8).to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct HyqueStats {
    pub restarts: u64,
    pub on_demand: u64,
    /// Baseline query rounds skipped because the ledger was full.
    pub blocked_queries: u64,
    pub blocks: u64,
    pub ledger: Option<BudgetLedger>,
}

#[derive(Debug, Clone)]
pub struct HyqueRun {
    pub log: ActionLog,
    pub stats: HyqueStats,
    pub trace: Vec<TraceRecord>,
}

/// Runs the hybrid allocator over the whole horizon.
pub fn run_hyque(
    env: &MeanSequence,
    cfg: &ValidatedConfig,
    opts: &HyqueOptions,
    law: RewardLaw,
    seed: u64,
) -> Result<HyqueRun> {
    simulate(env, cfg, opts, law, seed, false)
}

/// [`run_hyque`] that also records per-query detection statistics.
pub fn run_hyque_traced(
    env: &MeanSequence,
    cfg: &ValidatedConfig,
    opts: &HyqueOptions,
    law: RewardLaw,
    seed: u64,
) -> Result<HyqueRun> {
    simulate(env, cfg, opts, law, seed, true)
}

fn simulate(
    env: &MeanSequence,
    cfg: &ValidatedConfig,
    opts: &HyqueOptions,
    law: RewardLaw,
    seed: u64,
    tracing: bool,
) -> Result<HyqueRun> {
    env.check_shape(cfg)?;
    let horizon = cfg.horizon;
    let ratio = budget_ratio(cfg);
    let mut ledger = BudgetLedger::new(cfg.query_budget);
    let mut sampler = RewardSampler::new(seed, law);
    let mut sched_rng = RandomStream::new(seed, StreamId::Scheduler);
    let mut replay_rng = RandomStream::new(seed, StreamId::Replay);

    let mut log = ActionLog::with_capacity(horizon as usize);
    let mut stats = HyqueStats::default();
    let mut trace = Vec::new();

    let mut t = 1u64;
    let mut phase = 1u64;
    'phases: while t <= horizon {
        let mut n = 0u32;
        loop {
            let block_start = t;
            let limit = (ratio << n).min(horizon - t + 1);
            let mut schedule = BlockSchedule::build(n, ratio, cfg.arms, limit, &mut sched_rng);
            let mut detection = vec![DetectionState::default(); schedule.instances().len()];
            stats.blocks += 1;

            for r in 1..=limit {
                t = block_start + r - 1;
                let slot = schedule.slot(r);
                let mut query = slot.baseline_query;
                let mut on_demand = false;
                if !query && on_demand_check(ledger.used(), t, n, cfg) {
                    query = true;
                    on_demand = true;
                }
                if query && ledger.is_exhausted() {
                    if slot.baseline_query {
                        stats.blocked_queries += 1;
                    }
                    query = false;
                    on_demand = false;
                }

                let inst = schedule.instance_mut(slot.instance);
                let id = inst.id;
                let mut record = RoundRecord {
                    t,
                    phase,
                    n,
                    m: id.scale,
                    tau: id.offset,
                    arm: 0,
                    query,
                    on_demand,
                    reward: None,
                    realized: 0.0,
                };

                if !query {
                    let arm = match inst.nonquery_step(&mut replay_rng) {
                        Ok(arm) => arm,
                        // only reachable after the ledger blocked the batch
                        Err(Error::EmptyReplay) if ledger.is_exhausted() => {
                            inst.policy().select_arm().0
                        }
                        Err(e) => return Err(e),
                    };
                    record.arm = arm;
                    record.realized = sampler.sample(env, t, arm);
                    log.push(record);
                    if t == horizon {
                        break 'phases;
                    }
                    continue;
                }

                ledger.record_query()?;
                if on_demand {
                    stats.on_demand += 1;
                }
                let last_baseline = slot.baseline_query && inst.query_rounds().last() == Some(&r);
                let outcome = inst.query_step(|arm| sampler.sample(env, t, arm))?;
                let state = &mut detection[slot.instance];
                state.record(t, outcome.index.value(), outcome.reward);

                let running = change_test_running(state, cfg, opts);
                let end = (last_baseline || on_demand)
                    .then(|| change_test_end(state, id.scale, cfg, opts));
                let restart = running.failed() || end.is_some_and(|e| e.failed());

                record.arm = outcome.arm;
                record.reward = Some(outcome.reward);
                record.realized = outcome.reward;
                log.push(record);
                if tracing {
                    trace.push(TraceRecord {
                        t,
                        phase,
                        n,
                        m: id.scale,
                        tau: id.offset,
                        on_demand,
                        arm: outcome.arm,
                        index: outcome.index.value(),
                        reward: outcome.reward,
                        running_min: state.running_min(),
                        running,
                        end,
                        restart,
                    });
                }
                if t == horizon {
                    break 'phases;
                }
                if restart {
                    stats.restarts += 1;
                    phase += 1;
                    t += 1;
                    continue 'phases;
                }
            }
            t = block_start + limit;
            n += 1;
        }
    }

    debug_assert_eq!(log.len() as u64, horizon);
    debug_assert_eq!(log.queries(), ledger.used());
    stats.ledger = Some(ledger);
    Ok(HyqueRun { log, stats, trace })
}
