//! CSV and SVG output for sweep results.
//!
//! Numbers use Rust's `Display` formatting, which is locale independent and
//! round-trips `f64` exactly. Lines end with `\n`.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::harness::sweep::{SweepResult, SweepRow, TrialRecord};

pub const SUMMARY_HEADER: &str = "n_users,trials,sched_min,sched_avg,sched_max,rate_min,rate_avg,rate_max,avg_swaps,avg_iters,converged_frac";

pub const TRIALS_HEADER: &str = "n_users,trial,seed,scheduled,sum_rate,initial_scheduled,initial_sum_rate,baseline_scheduled,baseline_sum_rate,swaps,iterations,converged";

pub fn summary_csv(rows: &[SweepRow]) -> String {
    let mut out = String::new();
    out.push_str(SUMMARY_HEADER);
    out.push('\n');
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{}",
            r.n_users,
            r.trials,
            r.sched_min,
            r.sched_avg,
            r.sched_max,
            r.rate_min,
            r.rate_avg,
            r.rate_max,
            r.avg_swaps,
            r.avg_iters,
            r.converged_frac
        )
        .unwrap();
    }
    out
}

pub fn trials_csv(trials: &[TrialRecord]) -> String {
    let mut out = String::new();
    out.push_str(TRIALS_HEADER);
    out.push('\n');
    for t in trials {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            t.n_users,
            t.trial,
            t.seed,
            t.scheduled,
            t.sum_rate,
            t.initial_scheduled,
            t.initial_sum_rate,
            t.baseline_scheduled,
            t.baseline_sum_rate,
            t.swaps,
            t.iterations,
            t.converged
        )
        .unwrap();
    }
    out
}

/// Parses the output of [`trials_csv`].
pub fn parse_trials_csv(text: &str) -> std::result::Result<Vec<TrialRecord>, String> {
    let mut lines = text.lines();
    match lines.next() {
        Some(TRIALS_HEADER) => {}
        other => return Err(format!("unexpected header {other:?}")),
    }
    lines
        .enumerate()
        .map(|(i, line)| {
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 12 {
                return Err(format!(
                    "line {}: expected 12 fields, got {}",
                    i + 2,
                    f.len()
                ));
            }
            let bad = |name: &str| format!("line {}: bad {name}", i + 2);
            Ok(TrialRecord {
                n_users: f[0].parse().map_err(|_| bad("n_users"))?,
                trial: f[1].parse().map_err(|_| bad("trial"))?,
                seed: f[2].parse().map_err(|_| bad("seed"))?,
                scheduled: f[3].parse().map_err(|_| bad("scheduled"))?,
                sum_rate: f[4].parse().map_err(|_| bad("sum_rate"))?,
                initial_scheduled: f[5].parse().map_err(|_| bad("initial_scheduled"))?,
                initial_sum_rate: f[6].parse().map_err(|_| bad("initial_sum_rate"))?,
                baseline_scheduled: f[7].parse().map_err(|_| bad("baseline_scheduled"))?,
                baseline_sum_rate: f[8].parse().map_err(|_| bad("baseline_sum_rate"))?,
                swaps: f[9].parse().map_err(|_| bad("swaps"))?,
                iterations: f[10].parse().map_err(|_| bad("iterations"))?,
                converged: f[11].parse().map_err(|_| bad("converged"))?,
            })
        })
        .collect()
}

const PANEL_W: f64 = 420.0;
const PANEL_H: f64 = 300.0;
const MARGIN_L: f64 = 60.0;
const MARGIN_B: f64 = 50.0;
const MARGIN_T: f64 = 30.0;

struct Series<'a> {
    label: &'a str,
    color: &'a str,
    dashed: bool,
    points: Vec<(f64, f64)>,
}

fn bounds(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
        (lo.min(v), hi.max(v))
    });
    if !lo.is_finite() {
        (0.0, 1.0)
    } else if hi > lo {
        (lo.min(0.0), hi)
    } else {
        (lo.min(0.0), lo + 1.0)
    }
}

fn panel(out: &mut String, x0: f64, title: &str, x_label: &str, y_label: &str, series: &[Series]) {
    let (xmin, xmax) = bounds(series.iter().flat_map(|s| s.points.iter().map(|p| p.0)));
    let (ymin, ymax) = bounds(series.iter().flat_map(|s| s.points.iter().map(|p| p.1)));
    let plot_w = PANEL_W - MARGIN_L - 20.0;
    let plot_h = PANEL_H - MARGIN_T - MARGIN_B;
    let sx = |x: f64| x0 + MARGIN_L + (x - xmin) / (xmax - xmin) * plot_w;
    let sy = |y: f64| MARGIN_T + plot_h - (y - ymin) / (ymax - ymin) * plot_h;

    let left = x0 + MARGIN_L;
    let bottom = MARGIN_T + plot_h;
    writeln!(
        out,
        r#"<text x="{:.1}" y="18" text-anchor="middle" font-size="14">{title}</text>"#,
        left + plot_w / 2.0
    )
    .unwrap();
    writeln!(
        out,
        r#"<line x1="{left:.1}" y1="{bottom:.1}" x2="{:.1}" y2="{bottom:.1}" stroke="black"/>"#,
        left + plot_w
    )
    .unwrap();
    writeln!(out, r#"<line x1="{left:.1}" y1="{MARGIN_T:.1}" x2="{left:.1}" y2="{bottom:.1}" stroke="black"/>"#).unwrap();
    for i in 0..=4 {
        let f = i as f64 / 4.0;
        let (xv, yv) = (xmin + f * (xmax - xmin), ymin + f * (ymax - ymin));
        writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle" font-size="10">{:.0}</text>"#,
            sx(xv),
            bottom + 14.0,
            xv
        )
        .unwrap();
        writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end" font-size="10">{:.1}</text>"#,
            left - 4.0,
            sy(yv) + 3.0,
            yv
        )
        .unwrap();
    }
    writeln!(
        out,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle" font-size="12">{x_label}</text>"#,
        left + plot_w / 2.0,
        PANEL_H - 12.0
    )
    .unwrap();
    writeln!(out, r#"<text x="{:.1}" y="{:.1}" text-anchor="middle" font-size="12" transform="rotate(-90 {:.1} {:.1})">{y_label}</text>"#, x0 + 16.0, MARGIN_T + plot_h / 2.0, x0 + 16.0, MARGIN_T + plot_h / 2.0).unwrap();

    for (idx, s) in series.iter().enumerate() {
        let pts: Vec<String> = s
            .points
            .iter()
            .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
            .collect();
        let dash = if s.dashed {
            r#" stroke-dasharray="5,3""#
        } else {
            ""
        };
        writeln!(
            out,
            r#"<polyline fill="none" stroke="{}" stroke-width="1.5"{dash} points="{}"/>"#,
            s.color,
            pts.join(" ")
        )
        .unwrap();
        let ly = MARGIN_T + 8.0 + 14.0 * idx as f64;
        writeln!(
            out,
            r#"<line x1="{:.1}" y1="{ly:.1}" x2="{:.1}" y2="{ly:.1}" stroke="{}"{dash}/>"#,
            left + 10.0,
            left + 30.0,
            s.color
        )
        .unwrap();
        writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" font-size="10">{}</text>"#,
            left + 34.0,
            ly + 3.0,
            s.label
        )
        .unwrap();
    }
}

/// Two panels: scheduled users (min/avg/max) and sum-rate (min/avg/max)
/// against the number of users.
pub fn chart_svg(rows: &[SweepRow]) -> String {
    let n = |r: &SweepRow| r.n_users as f64;
    let sched = [
        Series {
            label: "max",
            color: "#d62728",
            dashed: true,
            points: rows.iter().map(|r| (n(r), r.sched_max as f64)).collect(),
        },
        Series {
            label: "average",
            color: "#1f77b4",
            dashed: false,
            points: rows.iter().map(|r| (n(r), r.sched_avg)).collect(),
        },
        Series {
            label: "min",
            color: "#2ca02c",
            dashed: true,
            points: rows.iter().map(|r| (n(r), r.sched_min as f64)).collect(),
        },
    ];
    let rate = [
        Series {
            label: "max",
            color: "#d62728",
            dashed: true,
            points: rows.iter().map(|r| (n(r), r.rate_max)).collect(),
        },
        Series {
            label: "average",
            color: "#1f77b4",
            dashed: false,
            points: rows.iter().map(|r| (n(r), r.rate_avg)).collect(),
        },
        Series {
            label: "min",
            color: "#2ca02c",
            dashed: true,
            points: rows.iter().map(|r| (n(r), r.rate_min)).collect(),
        },
    ];
    let mut out = String::new();
    writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{:.0}" height="{:.0}" viewBox="0 0 {:.0} {:.0}" font-family="sans-serif">"#,
        2.0 * PANEL_W, PANEL_H, 2.0 * PANEL_W, PANEL_H
    )
    .unwrap();
    writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#).unwrap();
    panel(
        &mut out,
        0.0,
        "Scheduled users",
        "number of users",
        "scheduled users",
        &sched,
    );
    panel(
        &mut out,
        PANEL_W,
        "Sum-rate",
        "number of users",
        "sum-rate (bit/s/Hz)",
        &rate,
    );
    out.push_str("</svg>\n");
    out
}

fn write_file(path: PathBuf, contents: &str) -> Result<PathBuf> {
    fs::write(&path, contents).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

/// Writes `summary.csv`, `trials.csv` and optionally `chart.svg` into `dir`,
/// creating it if needed. Returns the paths written.
pub fn emit(result: &SweepResult, dir: &Path, chart: bool) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = vec![
        write_file(dir.join("summary.csv"), &summary_csv(&result.rows))?,
        write_file(dir.join("trials.csv"), &trials_csv(&result.trials))?,
    ];
    if chart {
        written.push(write_file(dir.join("chart.svg"), &chart_svg(&result.rows))?);
    }
    Ok(written)
}
