//! Seeded experiment sweeps.
//!
//! An [`ExperimentSpec`] names an algorithm, an environment and a grid over
//! `(T, K, B, V_T)`. Every grid point is run once per seed `base + i`, in
//! parallel, and the reports are written in grid-then-seed order so the
//! output files depend only on the spec.
//!
//! ```toml
//! algorithm = "hyque"
//! output_dir = "out/sweep_b"
//!
//! [environment]
//! kind = "piecewise"
//!
//! [grid]
//! horizon = [20000]
//! arms = [5]
//! query_budget = [1250, 2500, 5000]
//! variation_budget = [1.0]
//!
//! [seeds]
//! count = 20
//! base = 0
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::action_log::ActionLog;
use crate::config::{
    seed_override, validate_hard_regime, ProblemConfig, ValidatedConfig, DEFAULT_CONFIDENCE,
};
use crate::environment::{EnvironmentKind, EnvironmentSpec, MeanSequence};
use crate::error::{Error, Result};
use crate::fmt::sig17;
use crate::hyque::{run_hyque, HyqueOptions};
use crate::metrics::{mean_and_se, RegretReport, RunMeta, RESULTS_HEADER};
use crate::rexp3b::{run_rexp3b, Rexp3bOptions};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    #[default]
    Hyque,
    Rexp3b,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Hyque => "hyque",
            Algorithm::Rexp3b => "rexp3b",
        }
    }
}

fn default_confidence() -> f64 {
    DEFAULT_CONFIDENCE
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    pub horizon: Vec<u64>,
    pub arms: Vec<usize>,
    pub query_budget: Vec<u64>,
    /// May be empty for algorithms and environments that do not need it.
    #[serde(default)]
    pub variation_budget: Vec<f64>,
    #[serde(default = "default_confidence")]
    pub confidence: f64,
}

impl Grid {
    /// Grid points ordered by `T`, then `K`, then `B`, then `V_T`.
    pub fn points(&self) -> Vec<ProblemConfig> {
        let variations: Vec<Option<f64>> = if self.variation_budget.is_empty() {
            vec![None]
        } else {
            self.variation_budget.iter().copied().map(Some).collect()
        };
        let mut out = Vec::new();
        for &t in &self.horizon {
            for &k in &self.arms {
                for &b in &self.query_budget {
                    for &v in &variations {
                        out.push(ProblemConfig {
                            horizon: t,
                            arms: k,
                            query_budget: b,
                            confidence: self.confidence,
                            variation_budget: v,
                        });
                    }
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Seeds {
    pub count: u64,
    #[serde(default)]
    pub base: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub algorithm: Algorithm,
    #[serde(default)]
    pub environment: EnvironmentSpec,
    pub grid: Grid,
    pub seeds: Seeds,
    pub output_dir: PathBuf,
    /// Also write one action log per run under `output_dir/logs`.
    #[serde(default)]
    pub write_logs: bool,
    #[serde(default)]
    pub hyque: HyqueOptions,
    #[serde(default)]
    pub rexp3b: Rexp3bOptions,
}

impl ExperimentSpec {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    /// Reads a spec file. `NSBANDIT_SEED` replaces the base seed, and a
    /// relative `output_dir` or environment path is resolved against the
    /// spec's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut spec = Self::from_toml_str(&fs::read_to_string(path)?)?;
        if let Some(seed) = seed_override()? {
            spec.seeds.base = seed;
        }
        let dir = path.parent().unwrap_or(Path::new("."));
        if spec.output_dir.is_relative() {
            spec.output_dir = dir.join(&spec.output_dir);
        }
        if let Some(p) = spec.environment.path.as_mut() {
            if p.is_relative() {
                *p = dir.join(&*p);
            }
        }
        Ok(spec)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Parse(e.to_string()))
    }

    /// Checks every grid point before anything runs.
    pub fn validate(&self) -> Result<Vec<ValidatedConfig>> {
        let g = &self.grid;
        for (name, empty) in [
            ("horizon", g.horizon.is_empty()),
            ("arms", g.arms.is_empty()),
            ("query_budget", g.query_budget.is_empty()),
        ] {
            if empty {
                return Err(Error::InvalidSpec(format!("grid.{name} is empty")));
            }
        }
        if self.seeds.count == 0 {
            return Err(Error::InvalidSpec("seeds.count must be positive".into()));
        }
        if !(self.hyque.detection_scale > 0.0 && self.hyque.detection_scale.is_finite()) {
            return Err(Error::InvalidSpec(
                "hyque.detection_scale must be positive".into(),
            ));
        }
        let file_env = match self.environment.kind {
            EnvironmentKind::File => {
                let path = self.environment.path.as_ref().ok_or_else(|| {
                    Error::InvalidSpec("environment.path is required for kind = \"file\"".into())
                })?;
                Some(MeanSequence::load(path)?)
            }
            _ => None,
        };

        let mut out = Vec::new();
        for point in g.points() {
            let cfg = point.validate()?;
            let needs_variation = self.algorithm == Algorithm::Rexp3b
                || matches!(
                    self.environment.kind,
                    EnvironmentKind::Drift | EnvironmentKind::HardInstance
                );
            if needs_variation {
                cfg.require_variation()?;
            }
            match self.environment.kind {
                EnvironmentKind::HardInstance => {
                    validate_hard_regime(&cfg)?;
                }
                EnvironmentKind::File => {
                    file_env.as_ref().expect("loaded above").check_shape(&cfg)?
                }
                _ => {}
            }
            out.push(cfg);
        }
        Ok(out)
    }

    pub fn run_count(&self) -> u64 {
        self.grid.points().len() as u64 * self.seeds.count
    }
}

/// Reports of one sweep, in grid-then-seed order.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutput {
    pub reports: Vec<RegretReport>,
    pub summary: Vec<SummaryRow>,
}

/// Mean and standard error across seeds at one grid point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub horizon: u64,
    pub arms: usize,
    pub budget: u64,
    pub variation: Option<f64>,
    pub algorithm: String,
    pub runs: u64,
    pub mean_regret: f64,
    pub se_regret: f64,
    pub mean_query: f64,
    pub mean_error: f64,
    pub mean_drift: f64,
    pub mean_queries: f64,
}

pub const SUMMARY_HEADER: [&str; 12] = [
    "T",
    "K",
    "B",
    "V_T",
    "algo",
    "runs",
    "mean_R_T",
    "se_R_T",
    "mean_R_query",
    "mean_R_error",
    "mean_R_drift",
    "mean_queries",
];

impl SummaryRow {
    fn csv_row(&self) -> [String; 12] {
        [
            self.horizon.to_string(),
            self.arms.to_string(),
            self.budget.to_string(),
            self.variation.map(sig17).unwrap_or_default(),
            self.algorithm.clone(),
            self.runs.to_string(),
            sig17(self.mean_regret),
            sig17(self.se_regret),
            sig17(self.mean_query),
            sig17(self.mean_error),
            sig17(self.mean_drift),
            sig17(self.mean_queries),
        ]
    }
}

/// Plays one algorithm on one environment.
pub fn simulate(
    algorithm: Algorithm,
    env: &MeanSequence,
    cfg: &ValidatedConfig,
    spec: &EnvironmentSpec,
    hyque: &HyqueOptions,
    rexp3b: &Rexp3bOptions,
    seed: u64,
) -> Result<ActionLog> {
    Ok(match algorithm {
        Algorithm::Hyque => run_hyque(env, cfg, hyque, spec.reward_law, seed)?.log,
        Algorithm::Rexp3b => run_rexp3b(env, cfg, rexp3b, spec.reward_law, seed)?.log,
    })
}

struct Job {
    cfg: ValidatedConfig,
    seed: u64,
}

fn log_file_name(algorithm: Algorithm, cfg: &ValidatedConfig, seed: u64) -> String {
    let v = cfg
        .variation_budget
        .map(|v| format!("_V{v}"))
        .unwrap_or_default();
    format!(
        "{}_T{}_K{}_B{}{v}_seed{seed}.csv",
        algorithm.name(),
        cfg.horizon,
        cfg.arms,
        cfg.query_budget
    )
}

/// Runs every (grid point, seed) pair without touching the filesystem,
/// apart from reading a file-backed environment.
pub fn run_grid(spec: &ExperimentSpec) -> Result<Vec<RegretReport>> {
    Ok(execute(spec, None)?.into_iter().map(|(r, _)| r).collect())
}

fn execute(
    spec: &ExperimentSpec,
    keep_logs: Option<()>,
) -> Result<Vec<(RegretReport, Option<ActionLog>)>> {
    let points = spec.validate()?;
    let jobs: Vec<Job> = points
        .iter()
        .flat_map(|cfg| {
            (0..spec.seeds.count).map(move |i| Job {
                cfg: *cfg,
                seed: spec.seeds.base + i,
            })
        })
        .collect();
    log::info!("running {} jobs", jobs.len());
    jobs.par_iter()
        .map(|job| {
            let env = spec.environment.build(&job.cfg, job.seed)?;
            let log = simulate(
                spec.algorithm,
                &env,
                &job.cfg,
                &spec.environment,
                &spec.hyque,
                &spec.rexp3b,
                job.seed,
            )?;
            let meta = RunMeta {
                seed: job.seed,
                horizon: job.cfg.horizon,
                arms: job.cfg.arms,
                budget: job.cfg.query_budget,
                variation: job.cfg.variation_budget,
                algorithm: spec.algorithm.name().to_string(),
            };
            let report = RegretReport::from_log(meta, &log, &env);
            Ok((report, keep_logs.map(|_| log)))
        })
        .collect()
}

type GroupKey<'a> = (u64, usize, u64, Option<u64>, &'a str);

/// Aggregates reports per grid point, preserving first-appearance order.
pub fn summarize(reports: &[RegretReport]) -> Vec<SummaryRow> {
    let mut groups: Vec<(Vec<&RegretReport>, GroupKey)> = Vec::new();
    for r in reports {
        let key = (
            r.horizon,
            r.arms,
            r.budget,
            r.variation.map(f64::to_bits),
            r.algorithm.as_str(),
        );
        match groups.iter_mut().find(|(_, k)| *k == key) {
            Some((members, _)) => members.push(r),
            None => groups.push((vec![r], key)),
        }
    }
    groups
        .into_iter()
        .map(|(members, _)| {
            let first = members[0];
            let col = |f: fn(&RegretReport) -> f64| -> Vec<f64> {
                members.iter().map(|r| f(r)).collect()
            };
            let (mean_regret, se_regret) = mean_and_se(&col(|r| r.total));
            SummaryRow {
                horizon: first.horizon,
                arms: first.arms,
                budget: first.budget,
                variation: first.variation,
                algorithm: first.algorithm.clone(),
                runs: members.len() as u64,
                mean_regret,
                se_regret,
                mean_query: mean_and_se(&col(|r| r.parts.query)).0,
                mean_error: mean_and_se(&col(|r| r.parts.error)).0,
                mean_drift: mean_and_se(&col(|r| r.parts.drift)).0,
                mean_queries: mean_and_se(&col(|r| r.queries as f64)).0,
            }
        })
        .collect()
}

pub fn write_results(reports: &[RegretReport], path: impl AsRef<Path>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(RESULTS_HEADER)?;
    for r in reports {
        w.write_record(r.csv_row())?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_summary(rows: &[SummaryRow], path: impl AsRef<Path>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(SUMMARY_HEADER)?;
    for r in rows {
        w.write_record(r.csv_row())?;
    }
    w.flush()?;
    Ok(())
}

/// Runs the sweep and writes `results.csv` and `summary.csv` (plus
/// per-run logs when requested) into the output directory.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentOutput> {
    let runs = execute(spec, spec.write_logs.then_some(()))?;
    fs::create_dir_all(&spec.output_dir)?;
    if spec.write_logs {
        let dir = spec.output_dir.join("logs");
        fs::create_dir_all(&dir)?;
        for (report, log) in &runs {
            let cfg = ProblemConfig {
                horizon: report.horizon,
                arms: report.arms,
                query_budget: report.budget,
                confidence: spec.grid.confidence,
                variation_budget: report.variation,
            }
            .validate()?;
            if let Some(log) = log {
                log.save(dir.join(log_file_name(spec.algorithm, &cfg, report.seed)))?;
            }
        }
    }
    let reports: Vec<RegretReport> = runs.into_iter().map(|(r, _)| r).collect();
    let summary = summarize(&reports);
    write_results(&reports, spec.output_dir.join("results.csv"))?;
    write_summary(&summary, spec.output_dir.join("summary.csv"))?;
    Ok(ExperimentOutput { reports, summary })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(dir: &Path, budgets: &[u64], seeds: u64) -> ExperimentSpec {
        ExperimentSpec {
            algorithm: Algorithm::Hyque,
            environment: EnvironmentSpec::default(),
            grid: Grid {
                horizon: vec![600],
                arms: vec![3],
                query_budget: budgets.to_vec(),
                variation_budget: vec![1.0],
                confidence: 0.05,
            },
            seeds: Seeds {
                count: seeds,
                base: 10,
            },
            output_dir: dir.to_path_buf(),
            write_logs: false,
            hyque: HyqueOptions::default(),
            rexp3b: Rexp3bOptions::default(),
        }
    }

    #[test]
    fn single_point_single_seed() {
        let dir = tempfile::tempdir().unwrap();
        let out = run_experiment(&spec(dir.path(), &[100], 1)).unwrap();
        assert_eq!(out.reports.len(), 1);
        let text = fs::read_to_string(dir.path().join("results.csv")).unwrap();
        assert_eq!(text.lines().count(), 2);
    }

    #[test]
    fn three_budgets_twenty_seeds() {
        let dir = tempfile::tempdir().unwrap();
        let out = run_experiment(&spec(dir.path(), &[60, 120, 300], 20)).unwrap();
        assert_eq!(out.reports.len(), 60);
        assert_eq!(out.summary.len(), 3);
        assert!(out.summary.iter().all(|s| s.runs == 20));
        let summary = fs::read_to_string(dir.path().join("summary.csv")).unwrap();
        assert_eq!(summary.lines().count(), 4);
    }

    #[test]
    fn reruns_are_byte_identical() {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        run_experiment(&spec(a.path(), &[60, 200], 6)).unwrap();
        run_experiment(&spec(b.path(), &[60, 200], 6)).unwrap();
        for f in ["results.csv", "summary.csv"] {
            assert_eq!(
                fs::read(a.path().join(f)).unwrap(),
                fs::read(b.path().join(f)).unwrap()
            );
        }
    }

    #[test]
    fn writes_logs_on_request() {
        let dir = tempfile::tempdir().unwrap();
        let mut s = spec(dir.path(), &[100], 2);
        s.write_logs = true;
        run_experiment(&s).unwrap();
        let names: Vec<String> = fs::read_dir(dir.path().join("logs"))
            .unwrap()
            .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
            .collect();
        assert_eq!(names.len(), 2);
        let log = ActionLog::load(
            dir.path()
                .join("logs")
                .join("hyque_T600_K3_B100_V1_seed10.csv"),
        )
        .unwrap();
        assert_eq!(log.len(), 600);
    }

    #[test]
    fn rejects_invalid_points() {
        let dir = tempfile::tempdir().unwrap();
        let s = spec(dir.path(), &[100, 700], 1);
        assert!(matches!(
            s.validate(),
            Err(Error::BudgetExceedsHorizon { .. })
        ));
        let mut s = spec(dir.path(), &[100], 1);
        s.algorithm = Algorithm::Rexp3b;
        s.grid.variation_budget.clear();
        assert!(matches!(s.validate(), Err(Error::MissingVariation)));
        let mut s = spec(dir.path(), &[100], 0);
        s.seeds.count = 0;
        assert!(matches!(s.validate(), Err(Error::InvalidSpec(_))));
    }

    #[test]
    fn toml_round_trip() {
        let text = r#"
            algorithm = "rexp3b"
            output_dir = "out"
            [environment]
            kind = "drift"
            [grid]
            horizon = [1000]
            arms = [2, 4]
            query_budget = [100]
            variation_budget = [0.5, 1.0]
            [seeds]
            count = 3
        "#;
        let s = ExperimentSpec::from_toml_str(text).unwrap();
        assert_eq!(s.grid.points().len(), 4);
        assert_eq!(s.run_count(), 12);
        assert_eq!(
            ExperimentSpec::from_toml_str(&s.to_toml_string().unwrap()).unwrap(),
            s
        );
        assert!(ExperimentSpec::from_toml_str(&format!("{text}\nbogus = 1")).is_err());
    }
}
