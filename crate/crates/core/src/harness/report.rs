use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use super::{HarnessError, SubsetResult};
use crate::dsp::FeatureKind;
use crate::nn::{EpochRecord, ModelCheckpoint};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TableFormat {
    Csv,
    #[default]
    Markdown,
}

impl FromStr for TableFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Self::Csv),
            "markdown" | "md" => Ok(Self::Markdown),
            other => Err(format!("unknown table format '{other}' (expected csv or markdown)")),
        }
    }
}

impl fmt::Display for TableFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Csv => "csv",
            Self::Markdown => "markdown",
        })
    }
}

/// One configuration aggregated over repeats.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigRow {
    pub members: Vec<FeatureKind>,
    pub label: String,
    pub accuracies: Vec<f64>,
    pub accuracy_mean: f64,
    /// Population standard deviation over repeats.
    pub accuracy_std: f64,
    pub infer_time_ms_mean: f64,
    pub extract_time_ms_mean: f64,
}

/// Everything one repeat produced.
#[derive(Debug, Clone)]
pub struct RunRecord {
    pub repeat: usize,
    pub seed: u64,
    /// Test clip paths relative to the dataset root.
    pub sample_ids: Vec<String>,
    pub labels: Vec<usize>,
    pub subsets: Vec<SubsetResult>,
    pub curves: Vec<(FeatureKind, Vec<EpochRecord>)>,
    pub models: Vec<ModelCheckpoint>,
}

#[derive(Debug, Clone)]
pub struct MetricsReport {
    pub features: Vec<FeatureKind>,
    pub rows: Vec<ConfigRow>,
    pub runs: Vec<RunRecord>,
    /// Set when the experiment stopped early; rows cover the finished repeats.
    pub failure: Option<String>,
}

/// "CNN (MS)", "CNN (MS and MFCC)", "CNN (MS, MFCC, ZCR)".
pub fn subset_label(members: &[FeatureKind]) -> String {
    let names: Vec<&str> = members.iter().map(|k| k.name()).collect();
    let inner = match names.len() {
        2 => format!("{} and {}", names[0], names[1]),
        _ => names.join(", "),
    };
    format!("CNN ({inner})")
}

/// File-name form of a member set: "MS+MFCC".
pub fn subset_slug(members: &[FeatureKind]) -> String {
    members.iter().map(|k| k.name()).collect::<Vec<_>>().join("+")
}

fn round3(x: f64) -> f64 {
    (x * 1000.0).round() / 1000.0
}

/// "0.888 ± 0.015": both values rounded half away from zero to 3 decimals.
pub fn format_accuracy(mean: f64, std: f64) -> String {
    format!("{:.3} ± {:.3}", round3(mean), round3(std))
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

impl MetricsReport {
    pub fn from_runs(features: Vec<FeatureKind>, runs: Vec<RunRecord>, failure: Option<String>) -> Self {
        let rows = match runs.first() {
            None => Vec::new(),
            Some(first) => (0..first.subsets.len())
                .map(|i| {
                    let pick = |f: fn(&SubsetResult) -> f64| -> Vec<f64> { runs.iter().map(|r| f(&r.subsets[i])).collect() };
                    let accuracies = pick(|s| s.accuracy);
                    let m = mean(&accuracies);
                    let var = accuracies.iter().map(|a| (a - m).powi(2)).sum::<f64>() / accuracies.len() as f64;
                    let members = first.subsets[i].members.clone();
                    ConfigRow {
                        label: subset_label(&members),
                        members,
                        accuracy_mean: m,
                        accuracy_std: var.sqrt(),
                        infer_time_ms_mean: mean(&pick(|s| s.infer_ms)),
                        extract_time_ms_mean: mean(&pick(|s| s.extract_ms)),
                        accuracies,
                    }
                })
                .collect(),
        };
        Self {
            features,
            rows,
            runs,
            failure,
        }
    }

    pub fn row(&self, members: &[FeatureKind]) -> Option<&ConfigRow> {
        self.rows.iter().find(|r| r.members == members)
    }
}

const HEADERS: [&str; 4] = ["Configuration", "Accuracy", "Inference time (ms)", "Extraction time (ms)"];
const CSV_HEADERS: [&str; 4] = ["configuration", "accuracy", "infer_time_ms", "extract_time_ms"];

pub fn emit_table(report: &MetricsReport, format: TableFormat) -> String {
    emit_table_with(report, format, false)
}

/// Renders the comparison table. With `omit_timing` the wall-clock columns
/// print "-" so repeated runs give byte-identical output.
pub fn emit_table_with(report: &MetricsReport, format: TableFormat, omit_timing: bool) -> String {
    let time = |ms: f64| if omit_timing { "-".to_string() } else { format!("{ms:.3}") };
    let cells: Vec<[String; 4]> = report
        .rows
        .iter()
        .map(|r| {
            [
                r.label.clone(),
                format_accuracy(r.accuracy_mean, r.accuracy_std),
                time(r.infer_time_ms_mean),
                time(r.extract_time_ms_mean),
            ]
        })
        .collect();
    let mut out = String::new();
    match format {
        TableFormat::Markdown => {
            if let Some(failure) = &report.failure {
                out.push_str(&format!("**Incomplete results:** {failure}\n\n"));
            }
            out.push_str(&format!("| {} |\n", HEADERS.join(" | ")));
            out.push_str("|---|---:|---:|---:|\n");
            for row in &cells {
                out.push_str(&format!("| {} |\n", row.join(" | ")));
            }
        }
        TableFormat::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(CSV_HEADERS).expect("in-memory write");
            for row in &cells {
                w.write_record(row).expect("in-memory write");
            }
            out.push_str(&String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 cells"));
            if let Some(failure) = &report.failure {
                out.push_str(&format!("# incomplete results: {failure}\n"));
            }
        }
    }
    out
}

fn csv_writer(path: &Path) -> Result<csv::Writer<fs::File>, HarnessError> {
    csv::Writer::from_path(path).map_err(|source| HarnessError::Csv {
        path: path.to_path_buf(),
        source,
    })
}

fn write_rows(path: &Path, header: &[String], rows: impl IntoIterator<Item = Vec<String>>) -> Result<(), HarnessError> {
    let csv_err = |source| HarnessError::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut w = csv_writer(path)?;
    w.write_record(header).map_err(csv_err)?;
    for row in rows {
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush().map_err(HarnessError::io(path))
}

/// Writes `run<r>_<FEATURE>.csv` with columns `epoch,train_loss,val_accuracy`
/// for every run and feature.
pub fn emit_curves(report: &MetricsReport, dir: impl AsRef<Path>) -> Result<Vec<PathBuf>, HarnessError> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(HarnessError::io(dir))?;
    let header: Vec<String> = ["epoch", "train_loss", "val_accuracy"].map(String::from).to_vec();
    let mut written = Vec::new();
    for run in &report.runs {
        for (kind, history) in &run.curves {
            let path = dir.join(format!("run{}_{}.csv", run.repeat, kind.name()));
            let rows = history
                .iter()
                .map(|r| vec![r.epoch.to_string(), r.train_loss.to_string(), r.val_accuracy.to_string()]);
            write_rows(&path, &header, rows)?;
            written.push(path);
        }
    }
    Ok(written)
}

/// Writes `run<r>_<MEMBERS>.csv` (`sample_id,label,p0..p9`) for every run and
/// configuration, with probabilities in shortest round-trip form.
pub fn write_probability_dumps(report: &MetricsReport, dir: impl AsRef<Path>) -> Result<Vec<PathBuf>, HarnessError> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(HarnessError::io(dir))?;
    let mut written = Vec::new();
    for run in &report.runs {
        for subset in &run.subsets {
            let path = dir.join(format!("run{}_{}.csv", run.repeat, subset_slug(&subset.members)));
            let classes = subset.probabilities.first().map_or(0, |p| p.len());
            let mut header = vec!["sample_id".to_string(), "label".to_string()];
            header.extend((0..classes).map(|c| format!("p{c}")));
            let rows = run
                .sample_ids
                .iter()
                .zip(&run.labels)
                .zip(&subset.probabilities)
                .map(|((id, label), p)| {
                    let mut row = vec![id.clone(), label.to_string()];
                    row.extend(p.as_slice().iter().map(|v| format!("{v:e}")));
                    row
                });
            write_rows(&path, &header, rows)?;
            written.push(path);
        }
    }
    Ok(written)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DumpRow {
    pub sample_id: String,
    pub label: usize,
    pub probabilities: Vec<f64>,
}

pub fn read_probability_dump(path: impl AsRef<Path>) -> Result<Vec<DumpRow>, HarnessError> {
    let path = path.as_ref();
    let csv_err = |source| HarnessError::Csv {
        path: path.to_path_buf(),
        source,
    };
    let bad = |msg: String| HarnessError::Config(format!("{}: {msg}", path.display()));
    let mut reader = csv::Reader::from_path(path).map_err(csv_err)?;
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(csv_err)?;
        let field = |i: usize| record.get(i).ok_or_else(|| bad(format!("missing column {i}")));
        let label = field(1)?.parse().map_err(|e| bad(format!("label: {e}")))?;
        let probabilities = (2..record.len())
            .map(|i| field(i)?.parse::<f64>().map_err(|e| bad(format!("p{}: {e}", i - 2))))
            .collect::<Result<_, _>>()?;
        rows.push(DumpRow {
            sample_id: field(0)?.to_string(),
            label,
            probabilities,
        });
    }
    Ok(rows)
}
