use std::io::Write;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::{ExperimentConfig, ExperimentKind};
use crate::error::Result;

/// Version of the CSV layout and the manifest fields.
pub const SCHEMA_VERSION: u32 = 1;

pub const COLUMNS: [&str; 9] = [
    "experiment-kind",
    "class-member-id",
    "n",
    "statistic",
    "value",
    "mc-std-error",
    "seed",
    "family-descriptor",
    "timestamp",
];

/// One persisted Monte Carlo result.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub experiment_kind: ExperimentKind,
    pub member_id: String,
    pub n: usize,
    pub statistic: String,
    pub value: f64,
    pub std_error: f64,
    pub seed: u64,
    pub family_descriptor: String,
    /// Logical ordinal of the row within its table.
    pub timestamp: u64,
}

/// Floats with 17 significant digits, so that values round-trip exactly.
pub fn format_float(v: f64) -> String {
    if v.is_nan() {
        "NaN".into()
    } else if v.is_infinite() {
        if v > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else {
        format!("{v:.16e}")
    }
}

/// Rows of one experiment in emission order.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultTable {
    pub kind: ExperimentKind,
    pub seed: u64,
    pub family_descriptor: String,
    pub rows: Vec<ResultRow>,
}

impl ResultTable {
    pub fn new(kind: ExperimentKind, seed: u64, family_descriptor: impl Into<String>) -> Self {
        Self {
            kind,
            seed,
            family_descriptor: family_descriptor.into(),
            rows: Vec::new(),
        }
    }

    pub fn push(
        &mut self,
        member_id: impl Into<String>,
        n: usize,
        statistic: impl Into<String>,
        value: f64,
        std_error: f64,
    ) {
        let timestamp = self.rows.len() as u64;
        self.rows.push(ResultRow {
            experiment_kind: self.kind,
            member_id: member_id.into(),
            n,
            statistic: statistic.into(),
            value,
            std_error,
            seed: self.seed,
            family_descriptor: self.family_descriptor.clone(),
            timestamp,
        });
    }

    /// Rows with the given member, statistic and sample size.
    pub fn find(&self, member_id: &str, statistic: &str, n: usize) -> Option<&ResultRow> {
        self.rows
            .iter()
            .find(|r| r.member_id == member_id && r.statistic == statistic && r.n == n)
    }

    pub fn select<'a>(
        &'a self,
        member_id: &'a str,
        statistic: &'a str,
    ) -> impl Iterator<Item = &'a ResultRow> + 'a {
        self.rows
            .iter()
            .filter(move |r| r.member_id == member_id && r.statistic == statistic)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(COLUMNS)?;
        for r in &self.rows {
            w.write_record([
                r.experiment_kind.to_string(),
                r.member_id.clone(),
                r.n.to_string(),
                r.statistic.clone(),
                format_float(r.value),
                format_float(r.std_error),
                r.seed.to_string(),
                r.family_descriptor.clone(),
                r.timestamp.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv is utf-8")
    }
}

/// Result of a run: the table plus everything the manifest reports.
#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub table: ResultTable,
    /// `(member id, description)` per class member.
    pub members: Vec<(String, String)>,
    /// How each reference marginal was realized.
    pub reference_notes: Vec<String>,
    /// Members whose computation failed, with the reason.
    pub failures: Vec<String>,
    /// Experiment assertions that did not hold; nonempty means the run
    /// failed its check.
    pub violations: Vec<String>,
}

impl ExperimentOutcome {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct Manifest {
    pub schema_version: u32,
    pub tool_version: String,
    pub experiment_kind: ExperimentKind,
    pub config_sha256: String,
    pub master_seed: u64,
    pub family_descriptor: String,
    pub csv_columns: Vec<String>,
    pub rows: usize,
    pub threads: usize,
    pub wall_clock_seconds: f64,
    pub members: Vec<(String, String)>,
    pub reference_accuracy: Vec<String>,
    pub failures: Vec<String>,
    pub violations: Vec<String>,
}

/// Hex SHA-256 of the canonical JSON form of a config.
pub fn config_hash(config: &ExperimentConfig) -> String {
    let digest = Sha256::digest(serde_json::to_vec(config).expect("config serializes"));
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

impl Manifest {
    pub fn new(
        config: &ExperimentConfig,
        outcome: &ExperimentOutcome,
        threads: usize,
        wall_clock_seconds: f64,
    ) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            tool_version: env!("CARGO_PKG_VERSION").into(),
            experiment_kind: config.experiment_kind,
            config_sha256: config_hash(config),
            master_seed: config.master_seed,
            family_descriptor: outcome.table.family_descriptor.clone(),
            csv_columns: COLUMNS.iter().map(|c| c.to_string()).collect(),
            rows: outcome.table.rows.len(),
            threads,
            wall_clock_seconds,
            members: outcome.members.clone(),
            reference_accuracy: outcome.reference_notes.clone(),
            failures: outcome.failures.clone(),
            violations: outcome.violations.clone(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_keep_seventeen_digits() {
        for v in [0.1, 1.0 / 3.0, -2.5e-300, 123456789.123, 0.0] {
            let s = format_float(v);
            assert_eq!(s.parse::<f64>().unwrap(), v);
        }
        assert_eq!(format_float(0.1), "1.0000000000000001e-1");
        assert_eq!(format_float(f64::NAN), "NaN");
    }

    #[test]
    fn csv_layout() {
        let mut t = ResultTable::new(ExperimentKind::Ugc, 9, "levy");
        t.push("member-00", 16, "exceedance", 0.5, 0.25);
        t.push("sup", 16, "exceedance", 0.5, 0.25);
        let csv = t.to_csv_string();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], COLUMNS.join(","));
        assert_eq!(
            lines[2],
            "ugc,sup,16,exceedance,5.0000000000000000e-1,2.5000000000000000e-1,9,levy,1"
        );
        assert_eq!(t.select("sup", "exceedance").count(), 1);
    }
}
