//! Where does the regret come from? Splits HyQue's regret on a slowly
//! drifting environment into query, error and drift parts for several
//! budgets, alongside the longest non-query stretch.
//!
//! ```text
//! cargo run --release --example regret_decomposition
//! ```

use nsbandit::metrics::{decompose_regret, dynamic_regret, run_length_stats};
use nsbandit::{
    run_hyque, EnvironmentKind, EnvironmentSpec, HyqueOptions, ProblemConfig, RewardLaw,
};

fn main() -> nsbandit::Result<()> {
    let spec = EnvironmentSpec {
        kind: EnvironmentKind::Drift,
        ..Default::default()
    };
    println!(
        "{:>6} {:>10} {:>10} {:>10} {:>10} {:>8}",
        "B", "R_T", "query", "error", "drift", "max gap"
    );
    for budget in [512u64, 1024, 2048, 4096, 8192] {
        let cfg = ProblemConfig::new(8192, 4, budget)
            .with_variation(2.0)
            .validate()?;
        let env = spec.build(&cfg, 11)?;
        let run = run_hyque(
            &env,
            &cfg,
            &HyqueOptions::default(),
            RewardLaw::Bernoulli,
            11,
        )?;
        let parts = decompose_regret(&run.log, &env);
        let total = dynamic_regret(&run.log, &env);
        assert!((parts.total() - total).abs() < 1e-9);
        println!(
            "{budget:>6} {total:>10.2} {:>10.2} {:>10.2} {:>10.2} {:>8}",
            parts.query,
            parts.error,
            parts.drift,
            run_length_stats(&run.log).max_nonquery_run
        );
    }
    Ok(())
}
