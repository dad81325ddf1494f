//! Suite reports and file emission. Output is deterministic for a fixed
//! `(config, seed)`: floats are printed with fixed precision, maps are
//! ordered, and wall-clock timings never enter the report files.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Serialize;

use crate::decay::DecaySeries;
use crate::error::Result;

#[derive(Clone, Debug, Serialize)]
pub struct CheckRecord {
    pub lemma: String,
    pub seed: u64,
    pub item: String,
    pub lhs: f64,
    pub rhs: f64,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub slack_series: Option<Vec<(usize, Vec<usize>, String)>>,
}

impl CheckRecord {
    pub fn scalar(lemma: &str, seed: u64, item: impl Into<String>, lhs: f64, rhs: f64) -> Self {
        CheckRecord {
            lemma: lemma.into(),
            seed,
            item: item.into(),
            lhs,
            rhs,
            pass: lhs <= rhs,
            slack_series: None,
        }
    }

    /// Max-absolute-error record against a tolerance.
    pub fn error(lemma: &str, seed: u64, item: impl Into<String>, err: f64, tol: f64) -> Self {
        Self::scalar(lemma, seed, item, err, tol)
    }

    pub fn with_series(mut self, s: &DecaySeries) -> Self {
        self.slack_series = Some(s.records());
        self
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SuiteReport {
    pub suite: String,
    pub pass: bool,
    pub metrics: BTreeMap<String, serde_json::Value>,
    pub records: Vec<CheckRecord>,
}

impl SuiteReport {
    pub fn new(suite: &str) -> Self {
        SuiteReport {
            suite: suite.into(),
            pass: true,
            metrics: BTreeMap::new(),
            records: Vec::new(),
        }
    }

    pub fn push(&mut self, rec: CheckRecord) {
        self.pass &= rec.pass;
        self.records.push(rec);
    }

    /// Record a row without folding it into the suite verdict (for
    /// informational comparisons the statements do not assert).
    pub fn push_info(&mut self, rec: CheckRecord) {
        self.records.push(rec);
    }

    pub fn metric(&mut self, key: &str, value: impl Serialize) {
        self.metrics
            .insert(key.into(), serde_json::to_value(value).expect("serializable metric"));
    }

    pub fn metric_f64(&mut self, key: &str, value: f64) {
        // fixed formatting keeps the JSON byte-stable
        self.metrics
            .insert(key.into(), serde_json::Value::String(format!("{value:.16e}")));
    }

    pub fn fail(&mut self, reason: &str) {
        self.pass = false;
        self.metrics.insert(
            "failure".into(),
            serde_json::Value::String(reason.to_string()),
        );
    }
}

#[derive(Serialize)]
struct SummaryEntry<'a> {
    suite: &'a str,
    pass: bool,
    metrics: &'a BTreeMap<String, serde_json::Value>,
    #[serde(rename = "config-hash")]
    config_hash: &'a str,
    seed: u64,
}

/// Write `summary.json`, `records.json` and `checks.csv` under `out_dir`.
pub fn emit_report(
    reports: &[SuiteReport],
    out_dir: &Path,
    config_hash: &str,
    seed: u64,
) -> Result<bool> {
    std::fs::create_dir_all(out_dir)?;
    let summary: Vec<SummaryEntry> = reports
        .iter()
        .map(|r| SummaryEntry {
            suite: &r.suite,
            pass: r.pass,
            metrics: &r.metrics,
            config_hash,
            seed,
        })
        .collect();
    std::fs::write(
        out_dir.join("summary.json"),
        serde_json::to_string_pretty(&summary).expect("serializable summary") + "\n",
    )?;

    #[derive(Serialize)]
    struct RecordEntry<'a> {
        suite: &'a str,
        #[serde(flatten)]
        rec: &'a CheckRecord,
    }
    let records: Vec<RecordEntry> = reports
        .iter()
        .flat_map(|r| r.records.iter().map(move |rec| RecordEntry { suite: &r.suite, rec }))
        .collect();
    std::fs::write(
        out_dir.join("records.json"),
        serde_json::to_string_pretty(&records).expect("serializable records") + "\n",
    )?;

    let mut csv = String::from("suite,lemma,seed,item,lhs,rhs,pass\n");
    for r in reports {
        for rec in &r.records {
            csv.push_str(&format!(
                "{},{},{},{},{:.16e},{:.16e},{}\n",
                r.suite, rec.lemma, rec.seed, rec.item, rec.lhs, rec.rhs, rec.pass
            ));
        }
    }
    std::fs::write(out_dir.join("checks.csv"), csv)?;
    Ok(reports.iter().all(|r| r.pass))
}
