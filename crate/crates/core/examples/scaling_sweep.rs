//! Sweep the query budget with the experiment harness, fit the log-log
//! slope of mean regret against B and render the figures.
//!
//! ```text
//! cargo run --release --example scaling_sweep -- [output_dir]
//! ```

use std::path::PathBuf;

use nsbandit::harness::{run_experiment, ExperimentSpec};
use nsbandit::plot::{emit_plots, PlotKind};

const SPEC: &str = r#"
algorithm = "hyque"
output_dir = "target/scaling_sweep"
write_logs = true

[environment]
kind = "piecewise"

[grid]
horizon = [8192]
arms = [4]
query_budget = [512, 1024, 2048, 4096, 8192]
variation_budget = [1.0]

[seeds]
count = 8
base = 100
"#;

fn main() -> nsbandit::Result<()> {
    let mut spec = ExperimentSpec::from_toml_str(SPEC)?;
    if let Some(dir) = std::env::args().nth(1) {
        spec.output_dir = PathBuf::from(dir);
    }
    let out = run_experiment(&spec)?;
    for row in &out.summary {
        println!(
            "B = {:>5}: mean regret {:>8.1} ± {:.1}, queries {:.0}",
            row.budget, row.mean_regret, row.se_regret, row.mean_queries
        );
    }
    let results = spec.output_dir.join("results.csv");
    let fig = emit_plots(&results, PlotKind::RegretVsBudget, None, None)?;
    if let Some(slope) = fig.slope {
        println!("log-log slope {slope:.3}");
    }
    println!("wrote {}", fig.path.display());

    let log = spec
        .output_dir
        .join("logs")
        .join("hyque_T8192_K4_B1024_V1_seed100.csv");
    let trace = emit_plots(&log, PlotKind::BudgetTrace, None, Some(1024))?;
    println!("wrote {}", trace.path.display());
    Ok(())
}
