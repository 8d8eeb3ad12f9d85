//! Rexp3B against HyQue when the variation budget is known in advance.
//!
//! ```text
//! cargo run --release --example rexp3b_known_variation
//! ```

use nsbandit::{
    dynamic_regret, rexp3b_params, run_hyque, run_rexp3b, EnvironmentSpec, HyqueOptions,
    ProblemConfig, RewardLaw, Rexp3bOptions,
};

fn main() -> nsbandit::Result<()> {
    let env_spec = EnvironmentSpec::default();
    println!(
        "{:>6} {:>6} {:>7} {:>7} {:>8} {:>12} {:>12}",
        "B", "V_T", "Δ_T", "Δ_B", "γ", "Rexp3B", "HyQue"
    );
    for (budget, variation) in [(1_000, 1.0), (4_000, 1.0), (4_000, 4.0), (10_000, 4.0)] {
        let cfg = ProblemConfig::new(10_000, 3, budget)
            .with_variation(variation)
            .validate()?;
        let p = rexp3b_params(&cfg)?;
        let (mut r_exp, mut r_hy) = (0.0, 0.0);
        let seeds = 10;
        for seed in 0..seeds {
            let env = env_spec.build(&cfg, seed)?;
            let a = run_rexp3b(
                &env,
                &cfg,
                &Rexp3bOptions::default(),
                RewardLaw::Bernoulli,
                seed,
            )?;
            let b = run_hyque(
                &env,
                &cfg,
                &HyqueOptions::default(),
                RewardLaw::Bernoulli,
                seed,
            )?;
            r_exp += dynamic_regret(&a.log, &env) / seeds as f64;
            r_hy += dynamic_regret(&b.log, &env) / seeds as f64;
        }
        println!(
            "{budget:>6} {variation:>6} {:>7} {:>7} {:>8.4} {r_exp:>12.1} {r_hy:>12.1}",
            p.batch_length, p.query_length, p.gamma
        );
    }
    Ok(())
}
