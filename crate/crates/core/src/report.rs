//! Verification reports.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityResult {
    pub identity: String,
    pub paper_ref: String,
    pub lhs: String,
    pub rhs: String,
    pub pass: bool,
    pub seed: u64,
    pub trial: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub suite: String,
    pub params: BTreeMap<String, serde_json::Value>,
    pub results: Vec<IdentityResult>,
    pub failures: usize,
}

impl VerificationReport {
    pub fn new(suite: &str, params: BTreeMap<String, serde_json::Value>, results: Vec<IdentityResult>) -> Self {
        let failures = results.iter().filter(|r| !r.pass).count();
        VerificationReport {
            suite: suite.to_string(),
            params,
            results,
            failures,
        }
    }

    pub fn passed(&self) -> bool {
        self.failures == 0
    }

    /// Failure counts keyed by identity.
    pub fn failures_by_identity(&self) -> BTreeMap<&str, (usize, usize)> {
        let mut out: BTreeMap<&str, (usize, usize)> = BTreeMap::new();
        for r in &self.results {
            let e = out.entry(r.identity.as_str()).or_default();
            e.1 += 1;
            if !r.pass {
                e.0 += 1;
            }
        }
        out
    }
}

pub const CSV_COLUMNS: [&str; 8] = ["suite", "identity", "paper_ref", "lhs", "rhs", "pass", "seed", "trial"];

pub fn reports_to_json(reports: &[VerificationReport]) -> Result<String> {
    let mut s = serde_json::to_string_pretty(reports).map_err(|e| Error::Parse(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

pub fn reports_to_csv(reports: &[VerificationReport]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| Error::Parse(e.to_string());
    w.write_record(CSV_COLUMNS).map_err(io)?;
    for rep in reports {
        for r in &rep.results {
            w.write_record([
                rep.suite.as_str(),
                &r.identity,
                &r.paper_ref,
                &r.lhs,
                &r.rhs,
                if r.pass { "true" } else { "false" },
                &r.seed.to_string(),
                &r.trial.to_string(),
            ])
            .map_err(io)?;
        }
    }
    let bytes = w.into_inner().map_err(|e| Error::Parse(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Parse(e.to_string()))
}
