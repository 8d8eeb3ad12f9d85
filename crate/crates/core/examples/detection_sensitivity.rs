//! How often HyQue restarts after a single large mean swap, as the
//! confidence radius is scaled down.
//!
//! Half-way through the horizon the two arms exchange means 0.9 and 0.1.
//! For each radius multiplier the example reports the share of seeds with
//! a restart after the swap and the share with a spurious restart before it.
//!
//! ```text
//! cargo run --release --example detection_sensitivity -- [seeds] [swap_round]
//! ```

use nsbandit::{run_hyque, HyqueOptions, MeanSequence, ProblemConfig, RewardLaw};
use rayon::prelude::*;

fn main() -> nsbandit::Result<()> {
    let mut args = std::env::args().skip(1);
    let seeds: u64 = args.next().map_or(100, |s| s.parse().expect("seed count"));
    let horizon = 8192u64;
    let swap: u64 = args
        .next()
        .map_or(horizon / 2, |s| s.parse().expect("swap round"));
    let cfg = ProblemConfig::new(horizon, 2, 2048).validate()?;
    let rows: Vec<Vec<f64>> = (1..=horizon)
        .map(|t| {
            if t <= swap {
                vec![0.9, 0.1]
            } else {
                vec![0.1, 0.9]
            }
        })
        .collect();
    let env = MeanSequence::from_rows(&rows)?;

    println!("swap at t = {swap}, T = {horizon}, B = 2048, {seeds} seeds");
    println!(
        "{:>10} {:>12} {:>14} {:>12}",
        "scale", "detected", "false alarm", "mean delay"
    );
    for scale in [1.0, 0.1, 0.03, 0.01, 0.003, 0.001] {
        let opts = HyqueOptions {
            detection_scale: scale,
            ..Default::default()
        };
        let outcomes: Vec<(bool, bool, Option<u64>)> = (0..seeds)
            .into_par_iter()
            .map(|seed| {
                let run = run_hyque(&env, &cfg, &opts, RewardLaw::Bernoulli, seed)?;
                let starts: Vec<u64> = run
                    .log
                    .records()
                    .windows(2)
                    .filter(|w| w[1].phase != w[0].phase)
                    .map(|w| w[1].t)
                    .collect();
                let early = starts.iter().any(|&t| t <= swap);
                let first_late = starts.iter().copied().find(|&t| t > swap);
                Ok((first_late.is_some(), early, first_late.map(|t| t - swap)))
            })
            .collect::<nsbandit::Result<_>>()?;
        let detected = outcomes.iter().filter(|o| o.0).count();
        let alarms = outcomes.iter().filter(|o| o.1).count();
        let delays: Vec<u64> = outcomes.iter().filter_map(|o| o.2).collect();
        let delay = if delays.is_empty() {
            "-".to_string()
        } else {
            format!(
                "{:.0}",
                delays.iter().sum::<u64>() as f64 / delays.len() as f64
            )
        };
        println!("{scale:>10} {detected:>8}/{seeds:<3} {alarms:>10}/{seeds:<3} {delay:>12}");
    }
    Ok(())
}
