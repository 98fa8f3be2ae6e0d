//! Plots rendered from the CSV artifacts of a run directory. The output
//! depends only on the CSV contents.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use super::plot::{Heatmap, Mark, Series, XyPlot};
use crate::error::{Error, Result};

/// A CSV file as header names plus numeric-or-text cells.
struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    fn read(path: &Path) -> Result<Self> {
        let mut r = csv::Reader::from_path(path)?;
        let header = r.headers()?.iter().map(str::to_string).collect();
        let rows = r
            .records()
            .map(|rec| rec.map(|r| r.iter().map(str::to_string).collect()))
            .collect::<std::result::Result<_, _>>()?;
        Ok(Self { header, rows })
    }

    fn col(&self, name: &str) -> Result<usize> {
        self.header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingInput(format!("column `{name}`")))
    }

    fn num(&self, row: &[String], idx: usize) -> f64 {
        row[idx].parse().unwrap_or(f64::NAN)
    }

    fn xy(&self, x: &str, y: &str) -> Result<Vec<(f64, f64)>> {
        let (i, j) = (self.col(x)?, self.col(y)?);
        Ok(self.rows.iter().map(|r| (self.num(r, i), self.num(r, j))).collect())
    }

    /// `(x, y)` grouped by the text of column `by`, in first-seen order.
    fn grouped(&self, by: &str, x: &str, y: &str) -> Result<Vec<(String, Vec<(f64, f64)>)>> {
        let (g, i, j) = (self.col(by)?, self.col(x)?, self.col(y)?);
        let mut out: Vec<(String, Vec<(f64, f64)>)> = Vec::new();
        for r in &self.rows {
            let p = (self.num(r, i), self.num(r, j));
            match out.iter_mut().find(|(k, _)| *k == r[g]) {
                Some((_, v)) => v.push(p),
                None => out.push((r[g].clone(), vec![p])),
            }
        }
        Ok(out)
    }
}

fn write_svg(dir: &Path, name: &str, svg: String) -> Result<PathBuf> {
    let path = dir.join(name);
    std::fs::write(&path, svg)?;
    Ok(path)
}

fn entropy_label(file: &str) -> String {
    match file {
        "entropy_sampler_vs_true.csv" => "H(p̃|p) measured".into(),
        "entropy_true_vs_sampler.csv" => "H(p|p̃) measured".into(),
        other => other
            .trim_start_matches("entropy_")
            .trim_end_matches(".csv")
            .replace('_', " "),
    }
}

/// Writes an SVG for each recognised CSV in `dir` and returns their paths.
pub fn emit_plots(dir: &Path) -> Result<Vec<PathBuf>> {
    if !dir.is_dir() {
        return Err(Error::MissingInput(format!("directory {}", dir.display())));
    }
    let mut names: Vec<String> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok())
        .map(|e| e.file_name().to_string_lossy().into_owned())
        .filter(|n| n.ends_with(".csv"))
        .collect();
    names.sort();
    let has = |n: &str| names.iter().any(|m| m == n);
    let mut out = Vec::new();

    let entropy_files: Vec<&String> = names.iter().filter(|n| n.starts_with("entropy_")).collect();
    if !entropy_files.is_empty() || has("bounds.csv") || has("analytic_kl.csv") {
        let mut series = Vec::new();
        for f in &entropy_files {
            let t = Table::read(&dir.join(f))?;
            series.push(Series::new(entropy_label(f), t.xy("forward_time", "estimate")?, Mark::LineDots));
        }
        if has("analytic_kl.csv") {
            let t = Table::read(&dir.join("analytic_kl.csv"))?;
            series.push(Series::new("H(p̃|p) exact", t.xy("forward_time", "kl_exact")?, Mark::Line));
        }
        if has("bounds.csv") {
            let t = Table::read(&dir.join("bounds.csv"))?;
            for (kind, pts) in t.grouped("kind", "forward_time", "bound_value")? {
                series.push(Series::new(format!("bound {kind}"), pts, Mark::Line));
            }
        }
        let plot = XyPlot {
            title: "Relative entropy along the reverse process".into(),
            x_label: "forward time t".into(),
            y_label: "KL".into(),
            series,
            ..Default::default()
        };
        out.push(write_svg(dir, "entropy.svg", plot.render())?);
    }

    if has("interval_matrix.csv") {
        let t = Table::read(&dir.join("interval_matrix.csv"))?;
        let (ci, cj, cs0, cs1, ck) = (
            t.col("i")?,
            t.col("j")?,
            t.col("s_min")?,
            t.col("s_max")?,
            t.col("final_kl")?,
        );
        let n = t
            .rows
            .iter()
            .map(|r| t.num(r, cj) as usize + 1)
            .max()
            .unwrap_or(0);
        let mut values = vec![f64::NAN; n];
        let mut cells = Vec::new();
        let mut notes = Vec::new();
        let mut best: Option<(usize, usize, f64)> = None;
        for r in &t.rows {
            let (i, j, kl) = (t.num(r, ci) as usize, t.num(r, cj) as usize, t.num(r, ck));
            values[i] = t.num(r, cs0);
            values[j] = t.num(r, cs1);
            cells.push((i, j, kl));
            if i == j {
                notes.push((i, j, "ODE".to_string()));
            }
            if best.is_none_or(|b| kl < b.2) {
                best = Some((i, j, kl));
            }
        }
        if let Some((i, j, _)) = best {
            if i != j {
                notes.push((i, j, "min".into()));
            }
        }
        let h = Heatmap {
            title: "Final KL for γ on [S_min, S_max]".into(),
            x_label: "S_min".into(),
            y_label: "S_max".into(),
            x_values: values.clone(),
            y_values: values,
            cells,
            notes,
        };
        out.push(write_svg(dir, "interval_heatmap.svg", h.render())?);
    }

    if has("sweep_gamma.csv") {
        let t = Table::read(&dir.join("sweep_gamma.csv"))?;
        let series = t
            .grouped("n_steps", "gamma_over_steps", "final_kl")?
            .into_iter()
            .map(|(n, pts)| Series::new(format!("{n} steps"), pts.into_iter().filter(|p| p.0 > 0.0).collect(), Mark::Dots))
            .collect();
        let plot = XyPlot {
            title: "Final KL against γ / n_steps".into(),
            x_label: "γ / n_steps".into(),
            y_label: "final KL".into(),
            series,
            log_x: true,
            log_y: true,
        };
        out.push(write_svg(dir, "sweep_gamma.svg", plot.render())?);
    }

    if has("sweep_time.csv") {
        let t = Table::read(&dir.join("sweep_time.csv"))?;
        let series = vec![
            Series::new("initial", t.xy("t_start", "initial_kl")?, Mark::LineDots),
            Series::new("SDE final", t.xy("t_start", "final_kl_sde")?, Mark::LineDots),
            Series::new("ODE final", t.xy("t_start", "final_kl_ode")?, Mark::LineDots),
        ];
        let plot = XyPlot {
            title: "Effect of the initial time".into(),
            x_label: "initial time T".into(),
            y_label: "KL".into(),
            series,
            log_y: true,
            ..Default::default()
        };
        out.push(write_svg(dir, "sweep_time.svg", plot.render())?);
    }

    if has("analytic_sweep.csv") {
        let t = Table::read(&dir.join("analytic_sweep.csv"))?;
        let series = t
            .grouped("effect", "gamma", "final_kl")?
            .into_iter()
            .map(|(e, pts)| Series::new(format!("γ {e}"), pts, Mark::Dots))
            .collect();
        let plot = XyPlot {
            title: "Final KL over model and prior parameters".into(),
            x_label: "γ".into(),
            y_label: "final KL".into(),
            series,
            log_y: true,
            ..Default::default()
        };
        out.push(write_svg(dir, "analytic_sweep.svg", plot.render())?);
    }

    if has("analytic_traces.csv") {
        let t = Table::read(&dir.join("analytic_traces.csv"))?;
        let mut series = Vec::new();
        for col in ["kl_exact", "thm4_eq1", "thm4_eq2"] {
            for (g, pts) in t.grouped("gamma", "forward_time", col)? {
                let pts: Vec<(f64, f64)> = pts.into_iter().filter(|p| p.1.is_finite()).collect();
                if !pts.is_empty() {
                    series.push(Series::new(format!("{col} γ={g}"), pts, Mark::Line));
                }
            }
        }
        let plot = XyPlot {
            title: "Exact KL and perturbed-score bounds".into(),
            x_label: "forward time t".into(),
            y_label: "KL".into(),
            series,
            log_y: true,
            ..Default::default()
        };
        out.push(write_svg(dir, "analytic_traces.svg", plot.render())?);
    }

    if has("train_loss.csv") {
        let t = Table::read(&dir.join("train_loss.csv"))?;
        let plot = XyPlot {
            title: "Denoising score matching loss".into(),
            x_label: "step".into(),
            y_label: "loss".into(),
            series: vec![Series::new("smoothed", t.xy("step", "smoothed")?, Mark::Line)],
            ..Default::default()
        };
        out.push(write_svg(dir, "train_loss.svg", plot.render())?);
    }

    if has("score_error_profile.csv") {
        let t = Table::read(&dir.join("score_error_profile.csv"))?;
        let plot = XyPlot {
            title: "Score error E|ε_t|²".into(),
            x_label: "forward time t".into(),
            y_label: "mean squared error".into(),
            series: vec![Series::new("learned", t.xy("forward_time", "score_mse")?, Mark::LineDots)],
            log_y: true,
            ..Default::default()
        };
        out.push(write_svg(dir, "score_error.svg", plot.render())?);
    }

    if out.is_empty() {
        return Err(Error::MissingInput(format!(
            "no plottable CSV files in {}",
            dir.display()
        )));
    }
    Ok(out)
}

/// Reads back the `(x, y)` columns of a CSV; used to check plotted data.
pub fn read_xy(path: &Path, x: &str, y: &str) -> Result<Vec<(f64, f64)>> {
    Table::read(path)?.xy(x, y)
}

/// Reads `(group, x, y)` triples of a CSV, grouped by a text column.
pub fn read_grouped(path: &Path, by: &str, x: &str, y: &str) -> Result<BTreeMap<String, Vec<(f64, f64)>>> {
    Ok(Table::read(path)?.grouped(by, x, y)?.into_iter().collect())
}
