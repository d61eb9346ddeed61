use std::fmt;
use std::io::{Read, Write};
use std::path::Path;

use csv::StringRecord;

use super::WorkerRecord;
use crate::error::{Error, Result};

pub const REQUIRED_COLUMNS: [&str; 9] = [
    "worker_id",
    "geo",
    "gjs",
    "job",
    "female",
    "recent_perf",
    "past_perf",
    "time_in_job",
    "salary",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ExclusionReason {
    MissingField,
    UnparseableField,
    InvalidFemale,
    NonpositiveSalary,
    NegativeTimeInJob,
}

impl ExclusionReason {
    pub fn code(self) -> &'static str {
        match self {
            ExclusionReason::MissingField => "MISSING_FIELD",
            ExclusionReason::UnparseableField => "UNPARSEABLE_FIELD",
            ExclusionReason::InvalidFemale => "INVALID_FEMALE",
            ExclusionReason::NonpositiveSalary => "NONPOSITIVE_SALARY",
            ExclusionReason::NegativeTimeInJob => "NEGATIVE_TIME_IN_JOB",
        }
    }
}

impl fmt::Display for ExclusionReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Exclusion {
    /// 1-based data row number (the header is row 0).
    pub row_number: usize,
    pub worker_id: String,
    pub reason: ExclusionReason,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ExclusionLog {
    pub entries: Vec<Exclusion>,
}

impl ExclusionLog {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn count(&self, reason: ExclusionReason) -> usize {
        self.entries.iter().filter(|e| e.reason == reason).count()
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["row_number", "worker_id", "reason_code"])?;
        for e in &self.entries {
            wtr.write_record([e.row_number.to_string().as_str(), &e.worker_id, e.reason.code()])?;
        }
        wtr.flush().map_err(|e| Error::io("<exclusion log>", e))?;
        Ok(())
    }
}

/// Loads and validates a workforce CSV. Invalid rows are dropped and logged.
pub fn load_csv(path: &Path) -> Result<(Vec<WorkerRecord>, ExclusionLog)> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv(file)
}

pub fn read_csv<R: Read>(reader: R) -> Result<(Vec<WorkerRecord>, ExclusionLog)> {
    let mut rdr = csv::ReaderBuilder::new()
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    let mut cols = [0usize; 9];
    for (slot, name) in cols.iter_mut().zip(REQUIRED_COLUMNS) {
        *slot = headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))?;
    }

    let mut records = Vec::new();
    let mut log = ExclusionLog::default();
    for (i, row) in rdr.records().enumerate() {
        let row = row?;
        let row_number = i + 1;
        match parse_row(&row, &cols) {
            Ok(rec) => records.push(rec),
            Err(reason) => log.entries.push(Exclusion {
                row_number,
                worker_id: row.get(cols[0]).unwrap_or("").to_string(),
                reason,
            }),
        }
    }
    if records.is_empty() {
        return Err(Error::EmptyDataset { excluded: log.len() });
    }
    Ok((records, log))
}

fn parse_row(row: &StringRecord, cols: &[usize; 9]) -> std::result::Result<WorkerRecord, ExclusionReason> {
    let mut fields = [""; 9];
    for (f, &c) in fields.iter_mut().zip(cols) {
        *f = match row.get(c) {
            Some(s) if !s.is_empty() => s,
            _ => return Err(ExclusionReason::MissingField),
        };
    }
    let [id, geo, gjs, job, female, recent, past, tij, salary] = fields;
    let female = parse_female(female).ok_or(ExclusionReason::InvalidFemale)?;
    let num = |s: &str| {
        s.parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or(ExclusionReason::UnparseableField)
    };
    let (recent, past, tij, salary) = (num(recent)?, num(past)?, num(tij)?, num(salary)?);
    if salary <= 0.0 {
        return Err(ExclusionReason::NonpositiveSalary);
    }
    if tij < 0.0 {
        return Err(ExclusionReason::NegativeTimeInJob);
    }
    Ok(WorkerRecord::new(id, geo, gjs, job, female, recent, past, tij, salary))
}

fn parse_female(s: &str) -> Option<bool> {
    match s.to_ascii_lowercase().as_str() {
        "1" | "true" => Some(true),
        "0" | "false" => Some(false),
        _ => None,
    }
}

/// Writes records with the required column set. Floats use the shortest
/// representation that round-trips exactly.
pub fn write_csv<W: Write>(records: &[WorkerRecord], w: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(REQUIRED_COLUMNS)?;
    for r in records {
        wtr.write_record([
            r.worker_id.as_str(),
            &r.geo,
            &r.gjs,
            &r.job,
            if r.female { "1" } else { "0" },
            &r.recent_perf.to_string(),
            &r.past_perf.to_string(),
            &r.time_in_job.to_string(),
            &r.salary.to_string(),
        ])?;
    }
    wtr.flush().map_err(|e| Error::io("<csv output>", e))?;
    Ok(())
}
