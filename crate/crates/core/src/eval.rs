//! Word-level precision/recall/F1 per task and per tag class. The `O` tag
//! is excluded everywhere; overall rows are micro-averaged across non-O
//! classes. Capitalization is reported in three buckets: Capital (C-tagged
//! words), Uppercase (U-tagged words longer than one letter), and
//! Single-case (U-tagged one-letter words).

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::tags::{CapTag, TagSet, TaskTag};

#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("record {record}: prediction has {pred} words but gold has {gold}")]
    LengthMismatch {
        record: String,
        pred: usize,
        gold: usize,
    },
    #[error("record {record}: word list has {words} words but tags have {tags}")]
    WordCountMismatch {
        record: String,
        words: usize,
        tags: usize,
    },
}

/// One aligned prediction/gold pair over the same word sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalRecord {
    pub id: String,
    pub words: Vec<String>,
    pub pred: TagSet,
    pub gold: TagSet,
}

/// Raw counts and derived metrics for one class (or an overall row).
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
}

impl ClassMetrics {
    fn finalize(mut self) -> ClassMetrics {
        self.precision = ratio(self.tp, self.tp + self.fp);
        self.recall = ratio(self.tp, self.tp + self.fn_);
        self.f1 = if self.precision + self.recall > 0.0 {
            2.0 * self.precision * self.recall / (self.precision + self.recall)
        } else {
            0.0
        };
        self.support = self.tp + self.fn_;
        self
    }
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TaskReport {
    pub classes: BTreeMap<String, ClassMetrics>,
    /// Micro-average over the non-O classes.
    pub overall: ClassMetrics,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    /// Keyed by task name: itn, punct, cap, disf.
    pub tasks: BTreeMap<String, TaskReport>,
    /// How the overall rows are computed; always "micro".
    pub averaging: String,
}

#[derive(Default)]
struct Counter {
    classes: BTreeMap<String, ClassMetrics>,
}

impl Counter {
    fn observe(&mut self, pred: &str, gold: &str) {
        if pred == gold {
            if pred != "O" {
                self.classes.entry(pred.to_string()).or_default().tp += 1;
            }
            return;
        }
        if pred != "O" {
            self.classes.entry(pred.to_string()).or_default().fp += 1;
        }
        if gold != "O" {
            self.classes.entry(gold.to_string()).or_default().fn_ += 1;
        }
    }

    fn report(self) -> TaskReport {
        let mut overall = ClassMetrics::default();
        let mut classes = BTreeMap::new();
        for (name, counts) in self.classes {
            overall.tp += counts.tp;
            overall.fp += counts.fp;
            overall.fn_ += counts.fn_;
            classes.insert(name, counts.finalize());
        }
        TaskReport {
            classes,
            overall: overall.finalize(),
        }
    }
}

/// The Capital / Uppercase / Single-case bucket for one capitalization tag
/// on one word. `O` stays `O` and is excluded from scoring.
fn cap_bucket(tag: CapTag, word: &str) -> &'static str {
    match tag {
        CapTag::O => "O",
        CapTag::C => "Capital",
        CapTag::U => {
            if word.chars().count() > 1 {
                "Uppercase"
            } else {
                "Single-case"
            }
        }
    }
}

/// Scores aligned prediction/gold streams word by word.
pub fn score<'a, I>(records: I) -> Result<EvalReport, EvalError>
where
    I: IntoIterator<Item = &'a EvalRecord>,
{
    let mut itn = Counter::default();
    let mut punct = Counter::default();
    let mut cap = Counter::default();
    let mut disf = Counter::default();
    for rec in records {
        if rec.pred.len() != rec.gold.len() {
            return Err(EvalError::LengthMismatch {
                record: rec.id.clone(),
                pred: rec.pred.len(),
                gold: rec.gold.len(),
            });
        }
        if rec.words.len() != rec.pred.len() {
            return Err(EvalError::WordCountMismatch {
                record: rec.id.clone(),
                words: rec.words.len(),
                tags: rec.pred.len(),
            });
        }
        for i in 0..rec.words.len() {
            itn.observe(rec.pred.itn[i].as_str(), rec.gold.itn[i].as_str());
            punct.observe(rec.pred.punct[i].as_str(), rec.gold.punct[i].as_str());
            cap.observe(
                cap_bucket(rec.pred.cap[i], &rec.words[i]),
                cap_bucket(rec.gold.cap[i], &rec.words[i]),
            );
            disf.observe(rec.pred.disf[i].as_str(), rec.gold.disf[i].as_str());
        }
    }
    let mut tasks = BTreeMap::new();
    tasks.insert("itn".to_string(), itn.report());
    tasks.insert("punct".to_string(), punct.report());
    tasks.insert("cap".to_string(), cap.report());
    tasks.insert("disf".to_string(), disf.report());
    Ok(EvalReport {
        tasks,
        averaging: "micro".to_string(),
    })
}

/// Rounds a proportion to an integer percentage, half away from zero.
pub fn percent(v: f64) -> i64 {
    (v * 100.0 + 0.5).floor() as i64
}

/// Renders the report as fixed-width text, percentages rounded half-up,
/// one block per task with per-class rows and an OVERALL row.
pub fn render_report(report: &EvalReport) -> String {
    let mut out = String::new();
    let order = ["itn", "punct", "cap", "disf"];
    for task in order {
        let Some(tr) = report.tasks.get(task) else {
            continue;
        };
        out.push_str(&format!("TASK {task}\n"));
        out.push_str(&format!(
            "{:<16} {:>4} {:>4} {:>4} {:>8}\n",
            "CLASS", "P", "R", "F1", "SUPPORT"
        ));
        for (name, m) in &tr.classes {
            out.push_str(&row(name, m));
        }
        out.push_str(&row("OVERALL", &tr.overall));
        out.push('\n');
    }
    out
}

fn row(name: &str, m: &ClassMetrics) -> String {
    format!(
        "{:<16} {:>4} {:>4} {:>4} {:>8}\n",
        name,
        percent(m.precision),
        percent(m.recall),
        percent(m.f1),
        m.support
    )
}
