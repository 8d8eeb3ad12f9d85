//! Simulation lab for non-stationary multi-armed bandits in which reward
//! feedback may only be observed on a limited number of rounds.
//!
//! The crate provides
//! * mean-sequence generators ([`environment`]), including a batched
//!   lower-bound construction,
//! * the multi-scale query scheduler ([`baque`]) and the hybrid allocator
//!   built on it ([`hyque`]),
//! * a restarted EXP3 variant for a known variation budget ([`rexp3b`]),
//! * regret metrics ([`metrics`]) and a seeded experiment harness
//!   ([`harness`], [`plot`]).
//!
//! ```
//! use nsbandit::{ProblemConfig, EnvironmentSpec, HyqueOptions, RewardLaw};
//!
//! let cfg = ProblemConfig::new(2000, 3, 200).with_variation(1.0).validate()?;
//! let env = EnvironmentSpec::default().build(&cfg, 7)?;
//! let run = nsbandit::run_hyque(&env, &cfg, &HyqueOptions::default(), RewardLaw::Bernoulli, 7)?;
//! assert!(run.log.queries() <= 200);
//! println!("regret {:.1}", nsbandit::dynamic_regret(&run.log, &env));
//! # Ok::<(), nsbandit::Error>(())
//! ```

pub mod action_log;
pub mod baque;
pub mod config;
pub mod environment;
pub mod error;
pub mod fmt;
pub mod harness;
pub mod hyque;
pub mod ledger;
pub mod metrics;
pub mod plot;
pub mod policy;
pub mod rexp3b;
pub mod rng;

pub use action_log::{ActionLog, RoundRecord};
pub use baque::BlockSchedule;
pub use config::{budget_ratio, ProblemConfig, RunConfig, ValidatedConfig};
pub use environment::{
    gen_drift, gen_hard_instance, gen_piecewise, total_variation, EnvironmentKind, EnvironmentSpec,
    MeanSequence, RewardLaw,
};
pub use error::{Error, Result};
pub use harness::{run_experiment, Algorithm, ExperimentSpec};
pub use hyque::{run_hyque, run_hyque_traced, HyqueOptions};
pub use ledger::BudgetLedger;
pub use metrics::{decompose_regret, dynamic_regret, fit_scaling, run_length_stats, RegretReport};
pub use rexp3b::{rexp3b_params, run_rexp3b, Rexp3bOptions};
pub use rng::{RandomStream, StreamId};
