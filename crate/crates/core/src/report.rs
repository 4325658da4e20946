//! Benchmark reports: one record per (method, eps, holdout, keep,
//! classifier) cell, emitted as CSV or as fixed-width tables.

use std::fmt::Write as _;
use std::io::{Read, Write};
use std::path::Path;

use crate::classify::mean_std;
use crate::config::{Classifier, Method};
use crate::error::{Error, Result};

pub const CSV_COLUMNS: [&str; 16] = [
    "method",
    "eps",
    "holdout",
    "keep_dims",
    "classifier",
    "csr_mean",
    "csr_std",
    "n_features",
    "bond_dims",
    "wall_ms",
    "cost_estimate",
    "n_features_std",
    "trials",
    "csr_trials",
    "n_features_trials",
    "status",
];

/// Aggregated result of one benchmark cell.
///
/// Per-trial CSR and feature counts are kept because bond dimensions (and
/// so `N_f`) can change from split to split. A failed cell has empty
/// per-trial lists and its diagnostic in `status`.
#[derive(Debug, Clone, PartialEq)]
pub struct CellRecord {
    pub method: Method,
    pub eps: f64,
    pub holdout: f64,
    pub keep_dims: String,
    pub classifier: Classifier,
    pub csr_trials: Vec<f64>,
    pub n_features_trials: Vec<usize>,
    /// Mean bond dimensions (MPS) or Tucker ranks (HOOI), joined by `-`.
    pub bond_dims: String,
    /// Mean decomposition plus projection time per trial, when timing is on.
    pub wall_ms: Option<f64>,
    /// Mean cost-model estimate per trial.
    pub cost_estimate: Option<f64>,
    pub status: String,
}

impl CellRecord {
    pub fn is_ok(&self) -> bool {
        self.status == "ok"
    }

    pub fn csr_mean_std(&self) -> Option<(f64, f64)> {
        (!self.csr_trials.is_empty()).then(|| mean_std(&self.csr_trials))
    }

    pub fn n_features_mean_std(&self) -> Option<(f64, f64)> {
        let v: Vec<f64> = self.n_features_trials.iter().map(|&n| n as f64).collect();
        (!v.is_empty()).then(|| mean_std(&v))
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct BenchmarkReport {
    pub cells: Vec<CellRecord>,
}

/// Measured and modeled HOOI / MPS ratios for one (eps, holdout) pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MethodRatio {
    pub eps: f64,
    pub holdout: f64,
    pub wall_ratio: Option<f64>,
    pub cost_ratio: Option<f64>,
}

impl BenchmarkReport {
    pub fn find(
        &self,
        method: Method,
        eps: f64,
        holdout: f64,
        keep_dims: &str,
        classifier: Classifier,
    ) -> Option<&CellRecord> {
        self.cells.iter().find(|c| {
            c.method == method
                && c.eps == eps
                && c.holdout == holdout
                && c.keep_dims == keep_dims
                && c.classifier == classifier
        })
    }

    /// HOOI over MPS wall time and cost estimate, from the first successful
    /// cell of each method at every (eps, holdout).
    pub fn method_ratios(&self) -> Vec<MethodRatio> {
        let mut out = Vec::new();
        for (eps, holdout) in self.eps_holdout_pairs() {
            let pick = |m: Method| {
                self.cells
                    .iter()
                    .find(|c| c.method == m && c.eps == eps && c.holdout == holdout && c.is_ok())
            };
            let (Some(mps), Some(hooi)) = (pick(Method::Mps), pick(Method::Hooi)) else {
                continue;
            };
            let ratio = |a: Option<f64>, b: Option<f64>| match (a, b) {
                (Some(a), Some(b)) if b > 0.0 => Some(a / b),
                _ => None,
            };
            out.push(MethodRatio {
                eps,
                holdout,
                wall_ratio: ratio(hooi.wall_ms, mps.wall_ms),
                cost_ratio: ratio(hooi.cost_estimate, mps.cost_estimate),
            });
        }
        out
    }

    fn eps_holdout_pairs(&self) -> Vec<(f64, f64)> {
        let mut seen: Vec<(f64, f64)> = Vec::new();
        for c in &self.cells {
            if !seen.contains(&(c.eps, c.holdout)) {
                seen.push((c.eps, c.holdout));
            }
        }
        seen
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(w);
        w.write_record(CSV_COLUMNS)?;
        for c in &self.cells {
            let csr = c.csr_mean_std();
            let nf = c.n_features_mean_std();
            let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
            w.write_record([
                c.method.name().to_string(),
                c.eps.to_string(),
                c.holdout.to_string(),
                c.keep_dims.clone(),
                c.classifier.name().to_string(),
                opt(csr.map(|s| s.0)),
                opt(csr.map(|s| s.1)),
                opt(nf.map(|s| s.0)),
                c.bond_dims.clone(),
                opt(c.wall_ms),
                opt(c.cost_estimate),
                opt(nf.map(|s| s.1)),
                c.csr_trials.len().to_string(),
                join(c.csr_trials.iter().map(f64::to_string)),
                join(c.n_features_trials.iter().map(usize::to_string)),
                c.status.clone(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        String::from_utf8(buf).map_err(|e| Error::Format(e.to_string()))
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(r);
        let headers = rdr.headers()?.clone();
        if headers.iter().ne(CSV_COLUMNS.iter().copied()) {
            return Err(Error::Format(format!("unexpected report header {headers:?}")));
        }
        let mut cells = Vec::new();
        for (row, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let bad = |col: &str| Error::Format(format!("row {}: bad {col}", row + 2));
            let f = |i: usize| rec[i].parse::<f64>().map_err(|_| bad(CSV_COLUMNS[i]));
            let of = |i: usize| {
                if rec[i].is_empty() {
                    Ok(None)
                } else {
                    f(i).map(Some)
                }
            };
            let csr_trials = split_list(&rec[13], |s| s.parse::<f64>().ok()).ok_or_else(|| bad("csr_trials"))?;
            let n_features_trials =
                split_list(&rec[14], |s| s.parse::<usize>().ok()).ok_or_else(|| bad("n_features_trials"))?;
            let cell = CellRecord {
                method: Method::parse(&rec[0])?,
                eps: f(1)?,
                holdout: f(2)?,
                keep_dims: rec[3].to_string(),
                classifier: Classifier::parse(&rec[4])?,
                csr_trials,
                n_features_trials,
                bond_dims: rec[8].to_string(),
                wall_ms: of(9)?,
                cost_estimate: of(10)?,
                status: rec[15].to_string(),
            };
            let trials: usize = rec[12].parse().map_err(|_| bad("trials"))?;
            if trials != cell.csr_trials.len() {
                return Err(bad("trials"));
            }
            cells.push(cell);
        }
        Ok(BenchmarkReport { cells })
    }

    pub fn load_csv(path: impl AsRef<Path>) -> Result<Self> {
        Self::read_csv(std::fs::File::open(path)?)
    }

    /// One table per (holdout, keep, classifier): method rows, eps columns,
    /// each entry `CSR mean ± std (N_f)`. A best-CSR summary per holdout and
    /// the HOOI/MPS time and cost ratios follow.
    pub fn pretty(&self) -> String {
        let mut out = String::new();
        let mut groups: Vec<(f64, &str, Classifier)> = Vec::new();
        for c in &self.cells {
            let g = (c.holdout, c.keep_dims.as_str(), c.classifier);
            if !groups.contains(&g) {
                groups.push(g);
            }
        }
        for (holdout, keep, classifier) in &groups {
            let in_group: Vec<&CellRecord> = self
                .cells
                .iter()
                .filter(|c| c.holdout == *holdout && c.keep_dims == *keep && c.classifier == *classifier)
                .collect();
            let mut eps_cols: Vec<f64> = Vec::new();
            let mut methods: Vec<Method> = Vec::new();
            for c in &in_group {
                if !eps_cols.contains(&c.eps) {
                    eps_cols.push(c.eps);
                }
                if !methods.contains(&c.method) {
                    methods.push(c.method);
                }
            }
            let _ = writeln!(
                out,
                "H/O = {holdout}, keep = {keep}, classifier = {}",
                classifier.name()
            );
            let mut rows = vec![std::iter::once("Algorithm".to_string())
                .chain(eps_cols.iter().map(|e| format!("eps = {e}")))
                .collect::<Vec<_>>()];
            for m in &methods {
                let mut row = vec![m.name().to_string()];
                for e in &eps_cols {
                    let cell = in_group.iter().find(|c| c.method == *m && c.eps == *e);
                    row.push(cell.map_or_else(|| "-".into(), |c| entry(c)));
                }
                rows.push(row);
            }
            write_table(&mut out, &rows);
            out.push('\n');
        }

        let mut holdouts: Vec<f64> = Vec::new();
        for c in &self.cells {
            if !holdouts.contains(&c.holdout) {
                holdouts.push(c.holdout);
            }
        }
        if !self.cells.is_empty() {
            let _ = writeln!(out, "Best CSR per H/O ratio");
            let mut rows = vec![vec![
                "H/O".to_string(),
                "Algorithm".into(),
                "CSR".into(),
                "N_f".into(),
                "eps".into(),
            ]];
            for h in &holdouts {
                for m in [Method::Mps, Method::Hooi] {
                    let best = self
                        .cells
                        .iter()
                        .filter(|c| c.holdout == *h && c.method == m && c.is_ok())
                        .max_by(|a, b| {
                            let ka = a.csr_mean_std().map_or(f64::NEG_INFINITY, |s| s.0);
                            let kb = b.csr_mean_std().map_or(f64::NEG_INFINITY, |s| s.0);
                            ka.total_cmp(&kb)
                        });
                    if let Some(c) = best {
                        let (cm, cs) = c.csr_mean_std().unwrap_or_default();
                        let (nm, ns) = c.n_features_mean_std().unwrap_or_default();
                        rows.push(vec![
                            h.to_string(),
                            m.name().into(),
                            format!("{cm:.2} ± {cs:.2}"),
                            format!("{} ± {}", fmt_num(nm), fmt_num(ns)),
                            c.eps.to_string(),
                        ]);
                    }
                }
            }
            write_table(&mut out, &rows);
        }

        let ratios = self.method_ratios();
        if !ratios.is_empty() {
            out.push('\n');
            let _ = writeln!(out, "HOOI / MPS");
            let mut rows = vec![vec![
                "H/O".to_string(),
                "eps".into(),
                "wall time".into(),
                "cost model".into(),
            ]];
            for r in ratios {
                let f = |v: Option<f64>| v.map_or_else(|| "-".into(), |x| format!("{x:.3}"));
                rows.push(vec![r.holdout.to_string(), r.eps.to_string(), f(r.wall_ratio), f(r.cost_ratio)]);
            }
            write_table(&mut out, &rows);
        }
        out
    }
}

fn entry(c: &CellRecord) -> String {
    match (c.csr_mean_std(), c.n_features_mean_std()) {
        (Some((m, s)), Some((nm, _))) if c.is_ok() => format!("{m:.2} ± {s:.2} ({})", fmt_num(nm)),
        _ => "error".into(),
    }
}

fn write_table(out: &mut String, rows: &[Vec<String>]) {
    let ncols = rows.iter().map(Vec::len).max().unwrap_or(0);
    let widths: Vec<usize> = (0..ncols)
        .map(|j| rows.iter().filter_map(|r| r.get(j)).map(|s| s.chars().count()).max().unwrap_or(0))
        .collect();
    for (i, row) in rows.iter().enumerate() {
        let line: Vec<String> = row
            .iter()
            .zip(&widths)
            .map(|(s, &w)| format!("{s:<w$}"))
            .collect();
        let _ = writeln!(out, "{}", line.join(" | ").trim_end());
        if i == 0 {
            let rule: Vec<String> = widths.iter().map(|&w| "-".repeat(w)).collect();
            let _ = writeln!(out, "{}", rule.join("-+-"));
        }
    }
}

/// Integers print bare, everything else with two decimals.
pub fn fmt_num(v: f64) -> String {
    if v.fract() == 0.0 && v.abs() < 1e15 {
        format!("{}", v as i64)
    } else {
        format!("{v:.2}")
    }
}

fn join(items: impl Iterator<Item = String>) -> String {
    items.collect::<Vec<_>>().join(";")
}

fn split_list<T>(s: &str, parse: impl Fn(&str) -> Option<T>) -> Option<Vec<T>> {
    if s.is_empty() {
        return Some(Vec::new());
    }
    s.split(';').map(parse).collect()
}
