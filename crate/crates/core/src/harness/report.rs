use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::protocols::PipelineConfig;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubjectAccuracy {
    pub subject: String,
    pub correct: usize,
    pub total: usize,
    pub accuracy: f64,
}

/// Training/test split of one evaluation fold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fold {
    pub test_subject: String,
    pub train_subjects: Vec<String>,
    pub train_count: usize,
    pub test_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub protocol: String,
    pub per_subject: Vec<SubjectAccuracy>,
    pub overall: f64,
    pub correct: usize,
    pub total: usize,
    pub vocabulary: Vec<String>,
    /// `confusion[true][predicted]`, indexed like `vocabulary`.
    pub confusion: Vec<Vec<usize>>,
    pub folds: Vec<Fold>,
    pub config: PipelineConfig,
}

impl EvaluationReport {
    pub fn subject_accuracy(&self, subject: &str) -> Option<f64> {
        self.per_subject
            .iter()
            .find(|s| s.subject == subject)
            .map(|s| s.accuracy)
    }

    /// Aligned plain-text table: one row per subject, then an `All` row.
    pub fn to_table(&self) -> String {
        let width = self
            .per_subject
            .iter()
            .map(|s| s.subject.len())
            .max()
            .unwrap_or(0)
            .max("Subject".len());
        let mut out = String::new();
        let _ = writeln!(out, "Word recognition rates ({})", self.protocol);
        let _ = writeln!(out, "{:<width$}  {:>9}  {:>13}", "Subject", "Accuracy", "Correct/Total");
        for s in &self.per_subject {
            let _ = writeln!(
                out,
                "{:<width$}  {:>8.2}%  {:>13}",
                s.subject,
                s.accuracy * 100.0,
                format!("{}/{}", s.correct, s.total)
            );
        }
        let _ = writeln!(
            out,
            "{:<width$}  {:>8.2}%  {:>13}",
            "All",
            self.overall * 100.0,
            format!("{}/{}", self.correct, self.total)
        );
        out
    }

    /// Writes `<stem>.json` and `<stem>.txt` into `dir`.
    pub fn write(&self, dir: &Path, stem: &str) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let json_path = dir.join(format!("{stem}.json"));
        let mut json = serde_json::to_string_pretty(self).map_err(|e| Error::json(&json_path, e))?;
        json.push('\n');
        fs::write(&json_path, json).map_err(|e| Error::io(&json_path, e))?;
        let txt_path = dir.join(format!("{stem}.txt"));
        fs::write(&txt_path, self.to_table()).map_err(|e| Error::io(&txt_path, e))
    }

    pub fn read_json(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::json(path, e))
    }
}
