//! Selection report: serialized form and human-readable explanations.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::bpmn::TaskRequirement;
use crate::config::SelectionConfig;
use crate::functional::FunctionalScore;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateScores {
    pub fp: FunctionalScore,
    #[serde(rename = "fpNorm")]
    pub fp_norm: f64,
    pub uf_series: Vec<f64>,
    pub changes: Vec<f64>,
    pub score_ac: f64,
    pub ac_norm: f64,
    pub uf_norm: f64,
    pub nfp: f64,
    pub global: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Candidate {
    pub rank: usize,
    pub service_key: String,
    pub service_name: String,
    #[serde(rename = "operation")]
    pub operation_name: String,
    pub scores: CandidateScores,
    pub rated: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskSelection {
    #[serde(flatten)]
    pub requirement: TaskRequirement,
    pub candidates: Vec<Candidate>,
    pub diagnostics: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SelectionReport {
    pub process_id: String,
    pub tasks: Vec<TaskSelection>,
    #[serde(rename = "config")]
    pub config: SelectionConfig,
}

#[derive(Debug, thiserror::Error)]
pub enum ExplainError {
    #[error("report has no task `{0}`")]
    UnknownTask(String),
    #[error("task `{task}` has {available} ranked candidates; rank {rank} does not exist")]
    UnknownRank {
        task: String,
        rank: usize,
        available: usize,
    },
    #[error("report is malformed at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
}

impl SelectionReport {
    /// Canonical JSON. Byte-identical for identical inputs.
    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("report serializes");
        text.push('\n');
        text
    }

    pub fn from_json(text: &str) -> Result<Self, ExplainError> {
        serde_json::from_str(text).map_err(|e| ExplainError::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })
    }

    pub fn task(&self, task_id: &str) -> Option<&TaskSelection> {
        self.tasks.iter().find(|t| t.requirement.task_id == task_id)
    }

    /// Plain-text summary of every task's ranking.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "process {}", self.process_id);
        for task in &self.tasks {
            let req = &task.requirement;
            let _ = writeln!(out, "\ntask {} ({})", req.task_id, req.task_name);
            if task.candidates.is_empty() {
                let _ = writeln!(out, "  no candidates");
            }
            for c in &task.candidates {
                let _ = writeln!(
                    out,
                    "  #{:<3} {:<32} {:<24} global={:.4} fp={} nfp={:.4}{}",
                    c.rank,
                    c.service_key,
                    c.operation_name,
                    c.scores.global,
                    c.scores.fp.total,
                    c.scores.nfp,
                    if c.rated { "" } else { " (unrated)" }
                );
            }
            for d in &task.diagnostics {
                let _ = writeln!(out, "  note: {d}");
            }
        }
        out
    }
}

fn series(values: &[f64]) -> String {
    let items: Vec<String> = values.iter().map(|v| format!("{v:.6}")).collect();
    format!("[{}]", items.join(", "))
}

/// Short form of a weight: `0.3` rather than `0.30000000000000004`.
fn weight(w: f64) -> String {
    let s = format!("{w:.6}");
    let s = s.trim_end_matches('0');
    s.strip_suffix('.').unwrap_or(s).to_owned()
}

/// Breaks one ranked candidate's score down to the rule behind each number.
pub fn explain(report: &SelectionReport, task_id: &str, rank: usize) -> Result<String, ExplainError> {
    let task = report
        .task(task_id)
        .ok_or_else(|| ExplainError::UnknownTask(task_id.to_owned()))?;
    let cand = task
        .candidates
        .iter()
        .find(|c| c.rank == rank)
        .ok_or(ExplainError::UnknownRank {
            task: task_id.to_owned(),
            rank,
            available: task.candidates.len(),
        })?;
    let cfg = &report.config;
    let table = &cfg.score_table;
    let s = &cand.scores;
    let fp = &s.fp;
    let req = &task.requirement;

    let mut out = String::new();
    let w = &mut out;
    let _ = writeln!(w, "task {} ({}) rank {}", req.task_id, req.task_name, cand.rank);
    let _ = writeln!(w, "candidate {} [{}] operation {}", cand.service_name, cand.service_key, cand.operation_name);
    let _ = writeln!(w, "\nfunctional score");
    let _ = writeln!(
        w,
        "  nbInput            = {:>3}  count comparison of inputs (equal {}, request has more {}, request has fewer {})",
        fp.nb_input, table.nb_equal, table.nb_favorable, table.nb_unfavorable
    );
    let _ = writeln!(
        w,
        "  nbOutput           = {:>3}  count comparison of outputs (equal {}, request has fewer {}, request has more {})",
        fp.nb_output, table.nb_equal, table.nb_favorable, table.nb_unfavorable
    );
    for (label, value) in [
        ("strInputName", fp.str_input_name),
        ("strOutputName", fp.str_output_name),
        ("strInputDatatype", fp.str_input_datatype),
        ("strOutputDatatype", fp.str_output_datatype),
    ] {
        let _ = writeln!(
            w,
            "  {label:<18} = {value:>3}  {} per paired parameter, {} per unpaired requested parameter",
            table.string_same, table.string_different
        );
    }
    let _ = writeln!(w, "  SCORE_FP = {}  (sum of the six components)", fp.total);
    let _ = writeln!(
        w,
        "  SCORE_min_FP = {}  ({} + {} + {}*min(requested inputs, offered inputs) + {}*requested outputs)",
        fp.min_acceptable,
        table.nb_unfavorable,
        table.nb_favorable,
        2 * table.string_same,
        2 * table.string_same
    );
    let _ = writeln!(w, "  fpNorm = {:.6}  (min-max of SCORE_FP over the gated pool)", s.fp_norm);

    let _ = writeln!(w, "\nQoS score");
    if cand.rated {
        let _ = writeln!(w, "  UF series   = {}  (weighted z-scores per time gap, oldest first)", series(&s.uf_series));
        let _ = writeln!(w, "  changes     = {}  (UF[k+1]/UF[k] - 1, 0 when |UF[k]| < epsilon)", series(&s.changes));
        let _ = writeln!(w, "  SCORE_AC    = {:.6}  (sum of changes)", s.score_ac);
        let _ = writeln!(w, "  AC norm     = {:.6}  (min-max of SCORE_AC over rated candidates)", s.ac_norm);
        let _ = writeln!(w, "  UF norm     = {:.6}  (min-max of latest UF over rated candidates)", s.uf_norm);
        let _ = writeln!(
            w,
            "  nfp         = {:.6}  ({} * UF norm + {} * AC norm)",
            s.nfp,
            weight(cfg.qos.stability_weight),
            weight(1.0 - cfg.qos.stability_weight)
        );
    } else {
        let _ = writeln!(w, "  no QoS history: unrated, nfp = 0");
    }
    let _ = writeln!(
        w,
        "\nglobal = {:.6}  ({} * fpNorm + {} * nfp)",
        s.global,
        weight(cfg.functional_weight),
        weight(1.0 - cfg.functional_weight)
    );
    Ok(out)
}
