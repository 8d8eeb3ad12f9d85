//! Restarted EXP3 with a query budget, for a known variation budget.
//!
//! The horizon is cut into batches of `Δ_T` rounds. Each batch spends its
//! first `Δ_B` rounds running EXP3 with feedback and then replays arms drawn
//! uniformly from the ones it played, without observing rewards.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::action_log::{ActionLog, RoundRecord};
use crate::config::ValidatedConfig;
use crate::environment::{MeanSequence, RewardLaw, RewardSampler};
use crate::error::{Error, Result};
use crate::ledger::BudgetLedger;
use crate::policy::{BasePolicy, Exp3State};
use crate::rng::{RandomStream, StreamId};

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Rexp3bOptions {
    /// Reset EXP3 weights to 1 at every batch boundary.
    #[serde(default = "yes")]
    pub weight_reset: bool,
}

impl Default for Rexp3bOptions {
    fn default() -> Self {
        Self { weight_reset: true }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rexp3bParams {
    /// `Δ_T`, rounds per batch.
    pub batch_length: u64,
    /// `Δ_B`, query rounds per batch.
    pub query_length: u64,
    pub gamma: f64,
    /// Whether `Δ_B` was raised from 0 to 1.
    pub floored: bool,
}

impl Rexp3bParams {
    pub fn batch_count(&self, horizon: u64) -> u64 {
        horizon.div_ceil(self.batch_length)
    }
}

/// `Δ_T = T (K ln K)^(1/3) / (B^(1/3) V^(2/3))` rounded and clamped to
/// `[1, T]`, `Δ_B = floor(B Δ_T / T)` (at least 1) and
/// `γ = min(1, sqrt(K ln K / ((e - 1) Δ_B)))`.
pub fn rexp3b_params(cfg: &ValidatedConfig) -> Result<Rexp3bParams> {
    let v = cfg.require_variation()?;
    if v <= 0.0 {
        return Err(Error::VariationOutOfRange {
            value: v,
            low: f64::MIN_POSITIVE,
            high: f64::INFINITY,
        });
    }
    let t = cfg.horizon as f64;
    let b = cfg.query_budget as f64;
    let k = cfg.arms as f64;
    let k_ln_k = k * k.ln();

    let raw = t * k_ln_k.cbrt() / (b.cbrt() * v.powf(2.0 / 3.0));
    let batch_length = (raw.round().max(1.0) as u64).min(cfg.horizon);
    let unfloored = (cfg.query_budget as u128 * batch_length as u128 / cfg.horizon as u128) as u64;
    let floored = unfloored == 0;
    if floored {
        log::warn!(
            "query length rounds to 0 for batch length {batch_length}; using 1 query per batch"
        );
    }
    let query_length = unfloored.max(1);
    let gamma = (k_ln_k / ((std::f64::consts::E - 1.0) * query_length as f64))
        .sqrt()
        .min(1.0);
    Ok(Rexp3bParams {
        batch_length,
        query_length,
        gamma,
        floored,
    })
}

/// Statistics of a finished Rexp3B run.
#[derive(Debug, Clone, PartialEq)]
pub struct Rexp3bRun {
    pub log: ActionLog,
    pub params: Rexp3bParams,
    /// Batches whose query phase was cut short by the ledger.
    pub shortened_batches: u64,
    pub ledger: BudgetLedger,
}

pub fn run_rexp3b(
    env: &MeanSequence,
    cfg: &ValidatedConfig,
    opts: &Rexp3bOptions,
    law: RewardLaw,
    seed: u64,
) -> Result<Rexp3bRun> {
    env.check_shape(cfg)?;
    let params = rexp3b_params(cfg)?;
    let horizon = cfg.horizon;
    let mut ledger = BudgetLedger::new(cfg.query_budget);
    let mut sampler = RewardSampler::new(seed, law);
    let mut policy_rng = RandomStream::new(seed, StreamId::Policy);
    let mut replay_rng = RandomStream::new(seed, StreamId::Replay);
    let mut exp3 = Exp3State::new(cfg.arms, params.gamma);
    let mut log = ActionLog::with_capacity(horizon as usize);
    let mut pool: Vec<usize> = Vec::with_capacity(params.query_length as usize);
    let mut shortened = 0u64;

    for batch in 0..params.batch_count(horizon) {
        let start = batch * params.batch_length + 1;
        let end = (start + params.batch_length - 1).min(horizon);
        if opts.weight_reset {
            exp3.reset();
        }
        pool.clear();
        let planned = params.query_length.min(end - start + 1);
        if planned > ledger.remaining() {
            shortened += 1;
        }
        let queries = planned.min(ledger.remaining());

        for t in start..=end {
            let mut record = RoundRecord {
                t,
                phase: batch + 1,
                n: 0,
                m: 0,
                tau: 0,
                arm: 0,
                query: false,
                on_demand: false,
                reward: None,
                realized: 0.0,
            };
            if t - start < queries {
                ledger.record_query()?;
                let sel = exp3.select(&mut policy_rng);
                let reward = sampler.sample(env, t, sel.arm);
                exp3.update(&sel, reward)?;
                pool.push(sel.arm);
                record.arm = sel.arm;
                record.query = true;
                record.reward = Some(reward);
                record.realized = reward;
            } else {
                record.arm = if pool.is_empty() {
                    replay_rng.random_range(0..cfg.arms)
                } else {
                    pool[replay_rng.random_range(0..pool.len())]
                };
                record.realized = sampler.sample(env, t, record.arm);
            }
            log.push(record);
        }
    }

    Ok(Rexp3bRun {
        log,
        params,
        shortened_batches: shortened,
        ledger,
    })
}
