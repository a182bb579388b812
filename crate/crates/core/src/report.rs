//! CSV report emission with a fixed numeric format: LF line endings, '.'
//! decimal separator, 6 significant digits.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ReportError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("row kind {row} does not match report kind {report}")]
    SchemaMismatch { report: &'static str, row: &'static str },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportKind {
    Attack,
    Transfer,
    Crop,
    TrainingCurve,
    ImitationLog,
}

impl ReportKind {
    pub fn header(&self) -> &'static str {
        match self {
            ReportKind::Attack => "victim_id,demo_count,episode,regret,perturbations",
            ReportKind::Transfer => "victim_id,demo_count,episode,crafted,transferred",
            ReportKind::Crop => "omega,mean_return,imitation_agreement,mean_transfers",
            ReportKind::TrainingCurve => "episode,steps,return",
            ReportKind::ImitationLog => "step,loss,agreement",
        }
    }

    fn name(&self) -> &'static str {
        match self {
            ReportKind::Attack => "attack",
            ReportKind::Transfer => "transfer",
            ReportKind::Crop => "crop",
            ReportKind::TrainingCurve => "training-curve",
            ReportKind::ImitationLog => "imitation-log",
        }
    }
}

/// Episode label: a concrete index or the aggregate row marker.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowIndex {
    Episode(usize),
    Mean,
}

impl std::fmt::Display for RowIndex {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RowIndex::Episode(i) => write!(f, "{i}"),
            RowIndex::Mean => write!(f, "mean"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ReportRow {
    Attack {
        victim_id: String,
        demo_count: usize,
        episode: RowIndex,
        regret: f64,
        perturbations: f64,
    },
    Transfer {
        victim_id: String,
        demo_count: usize,
        episode: RowIndex,
        crafted: f64,
        transferred: f64,
    },
    Crop {
        omega: f64,
        mean_return: f64,
        imitation_agreement: f64,
        mean_transfers: f64,
    },
    TrainingCurve {
        episode: usize,
        steps: u32,
        ret: f64,
    },
    ImitationLog {
        step: usize,
        loss: f64,
        agreement: f64,
    },
}

impl ReportRow {
    fn kind_name(&self) -> &'static str {
        match self {
            ReportRow::Attack { .. } => "attack",
            ReportRow::Transfer { .. } => "transfer",
            ReportRow::Crop { .. } => "crop",
            ReportRow::TrainingCurve { .. } => "training-curve",
            ReportRow::ImitationLog { .. } => "imitation-log",
        }
    }

    fn matches(&self, kind: ReportKind) -> bool {
        self.kind_name() == kind.name()
    }
}

/// Formats a value with 6 significant digits in plain decimal notation,
/// e.g. 490.73 -> "490.730".
pub fn format_significant(value: f64) -> String {
    const DIGITS: i32 = 6;
    if value == 0.0 {
        return format!("{:.*}", (DIGITS - 1) as usize, 0.0);
    }
    if !value.is_finite() {
        return value.to_string();
    }
    let magnitude = value.abs().log10().floor() as i32;
    let precision = (DIGITS - 1 - magnitude).max(0) as usize;
    format!("{value:.precision$}")
}

/// Renders a report to its CSV text.
pub fn render_report(kind: ReportKind, rows: &[ReportRow]) -> Result<String, ReportError> {
    let mut out = String::new();
    out.push_str(kind.header());
    out.push('\n');
    for row in rows {
        if !row.matches(kind) {
            return Err(ReportError::SchemaMismatch { report: kind.name(), row: row.kind_name() });
        }
        match row {
            ReportRow::Attack { victim_id, demo_count, episode, regret, perturbations } => {
                writeln!(
                    out,
                    "{victim_id},{demo_count},{episode},{},{}",
                    format_significant(*regret),
                    format_significant(*perturbations)
                )
                .expect("string write");
            }
            ReportRow::Transfer { victim_id, demo_count, episode, crafted, transferred } => {
                writeln!(
                    out,
                    "{victim_id},{demo_count},{episode},{},{}",
                    format_significant(*crafted),
                    format_significant(*transferred)
                )
                .expect("string write");
            }
            ReportRow::Crop { omega, mean_return, imitation_agreement, mean_transfers } => {
                writeln!(
                    out,
                    "{},{},{},{}",
                    format_significant(*omega),
                    format_significant(*mean_return),
                    format_significant(*imitation_agreement),
                    format_significant(*mean_transfers)
                )
                .expect("string write");
            }
            ReportRow::TrainingCurve { episode, steps, ret } => {
                writeln!(out, "{episode},{steps},{}", format_significant(*ret)).expect("string write");
            }
            ReportRow::ImitationLog { step, loss, agreement } => {
                writeln!(
                    out,
                    "{step},{},{}",
                    format_significant(*loss),
                    format_significant(*agreement)
                )
                .expect("string write");
            }
        }
    }
    Ok(out)
}

/// Writes a report file (header plus rows, LF endings).
pub fn emit_report(kind: ReportKind, rows: &[ReportRow], path: &Path) -> Result<(), ReportError> {
    let text = render_report(kind, rows)?;
    fs::write(path, text)?;
    Ok(())
}
