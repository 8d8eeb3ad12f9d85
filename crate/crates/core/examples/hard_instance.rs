//! Build the batched lower-bound instance, check its budget and run both
//! algorithms on it.
//!
//! ```text
//! cargo run --release --example hard_instance -- [out.csv]
//! ```

use nsbandit::{
    dynamic_regret, gen_hard_instance, run_hyque, run_rexp3b, total_variation, HyqueOptions,
    ProblemConfig, RandomStream, RewardLaw, Rexp3bOptions, StreamId,
};

fn main() -> nsbandit::Result<()> {
    let cfg = ProblemConfig::new(1920, 2, 240)
        .with_variation(1.0)
        .validate()?;
    let mut stream = RandomStream::new(3, StreamId::Environment);
    let (seq, params) = gen_hard_instance(&cfg, &mut stream)?;

    println!(
        "batch length Δ = {} (unrounded {:.4})",
        params.batch_length, params.raw_batch_length
    );
    println!("gap ε = {:.6}, {} batches", params.gap, params.batch_count);
    println!("total variation {:.6} <= V_T = 1", total_variation(&seq));
    let shown: Vec<String> = params
        .good_arms
        .iter()
        .take(16)
        .map(|a| (a + 1).to_string())
        .collect();
    println!("good arm per batch: {} ...", shown.join(" "));

    let hy = run_hyque(
        &seq,
        &cfg,
        &HyqueOptions::default(),
        RewardLaw::Bernoulli,
        3,
    )?;
    let ex = run_rexp3b(
        &seq,
        &cfg,
        &Rexp3bOptions::default(),
        RewardLaw::Bernoulli,
        3,
    )?;
    println!("HyQue regret  {:.2}", dynamic_regret(&hy.log, &seq));
    println!("Rexp3B regret {:.2}", dynamic_regret(&ex.log, &seq));

    if let Some(path) = std::env::args().nth(1) {
        seq.save(&path)?;
        println!("wrote {path}");
    }
    Ok(())
}
