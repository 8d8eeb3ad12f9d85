//! Run HyQue once on a piecewise-stationary environment and report regret,
//! budget use and the query/error/drift split.
//!
//! ```text
//! cargo run --release --example quickstart_hyque -- [seed]
//! ```

use nsbandit::metrics::{decompose_regret, dynamic_regret, run_length_stats};
use nsbandit::{run_hyque, EnvironmentSpec, HyqueOptions, ProblemConfig, RewardLaw};

fn main() -> nsbandit::Result<()> {
    let seed: u64 = std::env::args()
        .nth(1)
        .map_or(7, |s| s.parse().expect("seed must be an integer"));

    let cfg = ProblemConfig::new(20_000, 5, 2_500)
        .with_variation(1.0)
        .validate()?;
    let env = EnvironmentSpec::default().build(&cfg, seed)?;
    let run = run_hyque(
        &env,
        &cfg,
        &HyqueOptions::default(),
        RewardLaw::Bernoulli,
        seed,
    )?;

    let regret = dynamic_regret(&run.log, &env);
    let parts = decompose_regret(&run.log, &env);
    let runs = run_length_stats(&run.log);
    println!(
        "T = {}, K = {}, B = {}, seed = {seed}",
        cfg.horizon, cfg.arms, cfg.query_budget
    );
    println!(
        "queries used      {} (on demand {})",
        run.log.queries(),
        run.stats.on_demand
    );
    println!(
        "blocks / phases   {} / {}",
        run.stats.blocks,
        run.log.phase_count()
    );
    println!("dynamic regret    {regret:.2}");
    println!(
        "  query {:.2}  error {:.2}  drift {:.2}",
        parts.query, parts.error, parts.drift
    );
    println!(
        "longest runs      non-query {}  query {}",
        runs.max_nonquery_run, runs.max_query_run
    );
    Ok(())
}
