use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::EvalReport;
use crate::datamodel::FormatError;

pub const REPORT_JSON: &str = "report.json";
pub const REPORT_TXT: &str = "report.txt";
pub const SWEEP_CSV: &str = "sweep.csv";

fn write(path: &Path, contents: &str) -> Result<(), FormatError> {
    fs::write(path, contents).map_err(|source| FormatError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Human-readable summary table.
pub fn render_text(report: &EvalReport) -> String {
    let th = &report.thresholds;
    let mut s = String::new();
    let _ = writeln!(
        s,
        "accuracy at {:.2} m / {:.1} deg / {:.0}% scale",
        th.translation,
        th.rotation,
        th.scale * 100.0
    );
    let width = report.per_class.keys().map(|k| k.len()).max().unwrap_or(0).max(9);
    let _ = writeln!(s, "{:<width$}  {:>5}  {:>8}  {:>8}", "class", "gt", "accurate", "accuracy");
    for (class, c) in &report.per_class {
        let _ = writeln!(s, "{class:<width$}  {:>5}  {:>8}  {:>8.4}", c.n_gt, c.n_accurate, c.accuracy);
    }
    let _ = writeln!(s, "{:<width$}  {:>5}  {:>8}  {:>8.4}", "class avg", "", "", report.class_avg);
    let _ = writeln!(s, "{:<width$}  {:>5}  {:>8}  {:>8.4}", "global", "", "", report.global_avg);
    if !report.box_prf.is_empty() {
        let _ = writeln!(s);
        let _ = writeln!(s, "{:>8}  {:>9}  {:>6}  {:>6}", "iou >", "precision", "recall", "f1");
        for r in &report.box_prf {
            let _ = writeln!(s, "{:>8.2}  {:>9.4}  {:>6.4}  {:>6.4}", r.iou_threshold, r.precision, r.recall, r.f1);
        }
    }
    s
}

pub fn write_sweep_csv(path: &Path, report: &EvalReport) -> Result<(), FormatError> {
    let mut s = String::from("transformation,threshold,class_avg,global_avg\n");
    for c in &report.sweeps {
        for p in &c.points {
            let _ = writeln!(s, "{},{},{},{}", c.transformation.name(), p.threshold, p.class_avg, p.global_avg);
        }
    }
    write(path, &s)
}

/// Writes `report.json`, `report.txt` and `sweep.csv` into `dir`.
pub fn write_report(dir: &Path, report: &EvalReport) -> Result<(), FormatError> {
    fs::create_dir_all(dir).map_err(|source| FormatError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let json = serde_json::to_string_pretty(report).expect("report serializes");
    write(&dir.join(REPORT_JSON), &(json + "\n"))?;
    write(&dir.join(REPORT_TXT), &render_text(report))?;
    write_sweep_csv(&dir.join(SWEEP_CSV), report)
}
