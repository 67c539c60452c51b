use crate::error::Result;
use serde::{Deserialize, Serialize};
use std::io::Write;

/// Version of the CSV column layout written by [`EstimateReport::write_csv`].
pub const CSV_SCHEMA_VERSION: u32 = 1;

/// One inequality evaluated on one instance. `slack = rhs − lhs`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimateRecord {
    pub instance: String,
    pub inequality: String,
    pub p: Option<f64>,
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
    /// Set when the slack is below `−tolerance`.
    pub flagged: bool,
}

impl EstimateRecord {
    pub fn new(instance: &str, inequality: &str, p: Option<f64>, lhs: f64, rhs: f64, tolerance: f64) -> Self {
        let slack = rhs - lhs;
        EstimateRecord {
            instance: instance.into(),
            inequality: inequality.into(),
            p,
            lhs,
            rhs,
            slack,
            flagged: slack < -tolerance,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormSummary {
    pub instance: String,
    pub phi_c0: f64,
    pub phi_lp: Vec<(f64, f64)>,
    pub f_c0: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub records: Vec<EstimateRecord>,
    pub norms: Vec<NormSummary>,
    pub grid: String,
    pub input_hash: String,
}

#[derive(Serialize)]
struct CsvRow<'a> {
    schema_version: u32,
    instance: &'a str,
    inequality: &'a str,
    p: Option<f64>,
    lhs: f64,
    rhs: f64,
    slack: f64,
    flagged: bool,
}

impl EstimateReport {
    pub fn any_flagged(&self) -> bool {
        self.records.iter().any(|r| r.flagged)
    }

    /// One row per record, header included.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        if self.records.is_empty() {
            w.write_record(["schema_version", "instance", "inequality", "p", "lhs", "rhs", "slack", "flagged"])?;
        }
        for r in &self.records {
            w.serialize(CsvRow {
                schema_version: CSV_SCHEMA_VERSION,
                instance: &r.instance,
                inequality: &r.inequality,
                p: r.p,
                lhs: r.lhs,
                rhs: r.rhs,
                slack: r.slack,
                flagged: r.flagged,
            })?;
        }
        w.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slack_sign_and_flag() {
        let ok = EstimateRecord::new("a", "energy", Some(2.0), 1.0, 1.5, 1e-8);
        assert_eq!(ok.slack, 0.5);
        assert!(!ok.flagged);
        let bad = EstimateRecord::new("a", "energy", Some(2.0), 1.0, 0.5, 1e-8);
        assert!(bad.flagged);
    }

    #[test]
    fn csv_layout() {
        let report = EstimateReport {
            records: vec![EstimateRecord::new("x", "energy", Some(3.0), 1.0, 2.0, 0.0)],
            ..Default::default()
        };
        let mut buf = Vec::new();
        report.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "schema_version,instance,inequality,p,lhs,rhs,slack,flagged");
        assert_eq!(lines.next().unwrap(), "1,x,energy,3.0,1.0,2.0,1.0,false");
    }
}
