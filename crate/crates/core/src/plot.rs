//! SVG figures from results files and action logs.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use plotters::prelude::*;

use crate::action_log::ActionLog;
use crate::error::{Error, Result};
use crate::metrics::log_log_slope;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotKind {
    RegretVsBudget,
    RegretVsVariation,
    RegretVsHorizon,
    BudgetTrace,
}

impl PlotKind {
    pub const ALL: [PlotKind; 4] = [
        PlotKind::RegretVsBudget,
        PlotKind::RegretVsVariation,
        PlotKind::RegretVsHorizon,
        PlotKind::BudgetTrace,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PlotKind::RegretVsBudget => "regret_vs_B",
            PlotKind::RegretVsVariation => "regret_vs_V",
            PlotKind::RegretVsHorizon => "regret_vs_T",
            PlotKind::BudgetTrace => "budget_trace",
        }
    }

    /// Results column used as the x axis.
    fn x_column(self) -> Option<&'static str> {
        match self {
            PlotKind::RegretVsBudget => Some("B"),
            PlotKind::RegretVsVariation => Some("V_T"),
            PlotKind::RegretVsHorizon => Some("T"),
            PlotKind::BudgetTrace => None,
        }
    }
}

impl fmt::Display for PlotKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PlotKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        PlotKind::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| {
                Error::Parse(format!(
                    "unknown plot kind {s:?}; expected one of regret_vs_B, regret_vs_V, regret_vs_T, budget_trace"
                ))
            })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlotSummary {
    pub path: PathBuf,
    /// `(x, mean regret)` for scaling plots, `(t, queries used)` for traces.
    pub points: Vec<(f64, f64)>,
    /// Fitted log-log slope; only for scaling plots with at least 3 points.
    pub slope: Option<f64>,
}

fn plot_err<E: fmt::Display>(e: E) -> Error {
    Error::Plot(e.to_string())
}

/// Reads the mean of `R_T` per distinct value of `x_column`.
pub fn mean_regret_by(path: &Path, x_column: &str) -> Result<Vec<(f64, f64)>> {
    let mut reader = csv::Reader::from_path(path)?;
    let headers = reader.headers()?.clone();
    let find = |name: &str| headers.iter().position(|h| h == name);
    let (xi, yi) = match (find(x_column), find("R_T")) {
        (Some(x), Some(y)) => (x, y),
        (x, y) => {
            let mut columns = Vec::new();
            if x.is_none() {
                columns.push(x_column.to_string());
            }
            if y.is_none() {
                columns.push("R_T".to_string());
            }
            return Err(Error::MissingColumns {
                path: path.to_path_buf(),
                columns,
            });
        }
    };
    let mut groups: BTreeMap<u64, (f64, f64, u64)> = BTreeMap::new();
    for rec in reader.records() {
        let rec = rec?;
        let parse = |i: usize| -> Result<f64> {
            rec[i]
                .trim()
                .parse::<f64>()
                .map_err(|e| Error::Parse(format!("{} = {:?}: {e}", &headers[i], &rec[i])))
        };
        let x = parse(xi)?;
        let y = parse(yi)?;
        let g = groups.entry(x.to_bits()).or_insert((x, 0.0, 0));
        g.1 += y;
        g.2 += 1;
    }
    let mut points: Vec<(f64, f64)> = groups
        .into_values()
        .map(|(x, sum, n)| (x, sum / n as f64))
        .collect();
    points.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(points)
}

fn padded_log_range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, 0.0f64), |(lo, hi), v| {
        (lo.min(v), hi.max(v))
    });
    (lo / 1.5, hi * 1.5)
}

fn draw_scaling(
    out: &Path,
    kind: PlotKind,
    points: &[(f64, f64)],
    slope: Option<f64>,
) -> Result<()> {
    let root = SVGBackend::new(out, (800, 600)).into_drawing_area();
    root.fill(&WHITE).map_err(plot_err)?;
    let (x0, x1) = padded_log_range(points.iter().map(|p| p.0));
    let (y0, y1) = padded_log_range(points.iter().map(|p| p.1));
    let caption = match slope {
        Some(s) => format!("{kind} (slope {s:.3})"),
        None => kind.to_string(),
    };
    let mut chart = ChartBuilder::on(&root)
        .caption(caption, ("sans-serif", 24))
        .margin(16)
        .x_label_area_size(44)
        .y_label_area_size(70)
        .build_cartesian_2d((x0..x1).log_scale(), (y0..y1).log_scale())
        .map_err(plot_err)?;
    chart
        .configure_mesh()
        .x_desc(kind.x_column().unwrap_or("x"))
        .y_desc("mean dynamic regret")
        .draw()
        .map_err(plot_err)?;
    chart
        .draw_series(LineSeries::new(points.iter().copied(), &BLUE))
        .map_err(plot_err)?;
    chart
        .draw_series(points.iter().map(|&p| Circle::new(p, 4, BLUE.filled())))
        .map_err(plot_err)?;
    if let Some(s) = slope {
        // fitted line through the geometric centre of the points
        let n = points.len() as f64;
        let cx = points.iter().map(|p| p.0.ln()).sum::<f64>() / n;
        let cy = points.iter().map(|p| p.1.ln()).sum::<f64>() / n;
        let fit = |x: f64| (cy + s * (x.ln() - cx)).exp();
        let ends = [points[0].0, points[points.len() - 1].0];
        chart
            .draw_series(LineSeries::new(ends.map(|x| (x, fit(x))), &RED))
            .map_err(plot_err)?
            .label(format!("fit, slope {s:.3}"))
            .legend(|(x, y)| PathElement::new([(x, y), (x + 20, y)], RED));
        chart
            .configure_series_labels()
            .border_style(BLACK)
            .background_style(WHITE)
            .draw()
            .map_err(plot_err)?;
    }
    root.present().map_err(plot_err)
}

/// Scaling figure (`regret_vs_*`) from a results CSV, written to `out`.
pub fn plot_scaling(results: &Path, kind: PlotKind, out: &Path) -> Result<PlotSummary> {
    let column = kind
        .x_column()
        .ok_or_else(|| Error::InvalidSpec(format!("{kind} is not a scaling plot")))?;
    let points = mean_regret_by(results, column)?;
    if points.is_empty() {
        return Err(Error::InsufficientPoints(0));
    }
    if let Some(&(x, y)) = points.iter().find(|(x, y)| !(*x > 0.0 && *y > 0.0)) {
        return Err(Error::NonPositiveInput(x, y));
    }
    let slope = (points.len() >= 3).then(|| log_log_slope(&points));
    draw_scaling(out, kind, &points, slope)?;
    Ok(PlotSummary {
        path: out.to_path_buf(),
        points,
        slope,
    })
}

/// Cumulative queries against the pacing line `t B / T` and the cap `B`.
pub fn plot_budget_trace(log: &ActionLog, budget: u64, out: &Path) -> Result<PlotSummary> {
    let horizon = log.len() as u64;
    if horizon == 0 {
        return Err(Error::EmptyHorizon);
    }
    let trace = log.budget_trace();
    let points: Vec<(f64, f64)> = trace
        .iter()
        .enumerate()
        .map(|(i, &used)| ((i + 1) as f64, used as f64))
        .collect();

    let root = SVGBackend::new(out, (800, 600)).into_drawing_area();
    root.fill(&WHITE).map_err(plot_err)?;
    let y_top = budget.max(*trace.last().unwrap_or(&0)) as f64 * 1.05 + 1.0;
    let mut chart = ChartBuilder::on(&root)
        .caption("budget_trace", ("sans-serif", 24))
        .margin(16)
        .x_label_area_size(44)
        .y_label_area_size(70)
        .build_cartesian_2d(0f64..horizon as f64, 0f64..y_top)
        .map_err(plot_err)?;
    chart
        .configure_mesh()
        .x_desc("round t")
        .y_desc("queries used")
        .draw()
        .map_err(plot_err)?;

    // thin long traces so the file stays small
    let stride = (points.len() / 4000).max(1);
    let thinned = points
        .iter()
        .copied()
        .enumerate()
        .filter(|(i, _)| i % stride == 0 || *i == points.len() - 1)
        .map(|(_, p)| p);
    chart
        .draw_series(LineSeries::new(thinned, &BLUE))
        .map_err(plot_err)?
        .label("queries used")
        .legend(|(x, y)| PathElement::new([(x, y), (x + 20, y)], BLUE));
    let pace = budget as f64 / horizon as f64;
    chart
        .draw_series(LineSeries::new(
            [(0.0, 0.0), (horizon as f64, horizon as f64 * pace)],
            &GREEN,
        ))
        .map_err(plot_err)?
        .label("pace t B / T")
        .legend(|(x, y)| PathElement::new([(x, y), (x + 20, y)], GREEN));
    chart
        .draw_series(LineSeries::new(
            [(0.0, budget as f64), (horizon as f64, budget as f64)],
            &RED,
        ))
        .map_err(plot_err)?
        .label("cap B")
        .legend(|(x, y)| PathElement::new([(x, y), (x + 20, y)], RED));
    chart
        .configure_series_labels()
        .position(SeriesLabelPosition::UpperLeft)
        .border_style(BLACK)
        .background_style(WHITE)
        .draw()
        .map_err(plot_err)?;
    root.present().map_err(plot_err)?;
    Ok(PlotSummary {
        path: out.to_path_buf(),
        points,
        slope: None,
    })
}

/// Writes `<kind>.svg` next to `input` (or into `out_dir`).
///
/// Scaling kinds read a results CSV; `budget_trace` reads an action log and
/// needs the query budget.
pub fn emit_plots(
    input: &Path,
    kind: PlotKind,
    out_dir: Option<&Path>,
    budget: Option<u64>,
) -> Result<PlotSummary> {
    let dir = out_dir
        .map(Path::to_path_buf)
        .unwrap_or_else(|| input.parent().unwrap_or(Path::new(".")).to_path_buf());
    std::fs::create_dir_all(&dir)?;
    let out = dir.join(format!("{}.svg", kind.name()));
    match kind {
        PlotKind::BudgetTrace => {
            let budget = budget
                .ok_or_else(|| Error::InvalidSpec("budget_trace needs the query budget".into()))?;
            plot_budget_trace(&ActionLog::load(input)?, budget, &out)
        }
        _ => plot_scaling(input, kind, &out),
    }
}
