use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::layers::SampleWindow;
use crate::tensor::Matrix;

/// One contiguous recording of one activity by one subject.
#[derive(Clone, Debug, PartialEq)]
pub struct Trial {
    pub trial_id: u64,
    pub subject_id: u64,
    pub label: usize,
    /// `L×N`, rows in time order.
    pub series: Matrix,
}

impl Trial {
    pub fn len(&self) -> usize {
        self.series.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.series.rows() == 0
    }

    pub fn channels(&self) -> usize {
        self.series.cols()
    }
}

/// A fixed-length window cut from a trial, with provenance.
#[derive(Clone, Debug, PartialEq)]
pub struct Sample {
    pub window: SampleWindow,
    pub label: usize,
    pub trial_id: u64,
    pub subject_id: u64,
    pub start: usize,
}

const FIXED_COLUMNS: [&str; 4] = ["trial_id", "subject_id", "label", "t"];

/// Reads the canonical trial CSV:
/// `trial_id,subject_id,label,t,ch_0,...,ch_{N-1}`, one row per time point.
/// Rows may appear in any order; each trial is sorted by `t`.
pub fn load_trials(path: &Path) -> Result<Vec<Trial>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_trials(file)
}

pub fn parse_trials(reader: impl std::io::Read) -> Result<Vec<Trial>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);

    let header = rdr
        .headers()
        .map_err(|e| Error::Parse {
            line: 1,
            msg: e.to_string(),
        })?
        .clone();
    let header_err = |msg: String| Error::Parse { line: 1, msg };
    if header.len() < FIXED_COLUMNS.len() + 1 {
        return Err(header_err(format!(
            "expected `trial_id,subject_id,label,t,ch_0,...`, got {} columns",
            header.len()
        )));
    }
    for (i, want) in FIXED_COLUMNS.iter().enumerate() {
        if &header[i] != *want {
            return Err(header_err(format!(
                "column {i} must be `{want}`, found `{}`",
                &header[i]
            )));
        }
    }
    for (n, name) in header.iter().skip(FIXED_COLUMNS.len()).enumerate() {
        if name != format!("ch_{n}") {
            return Err(header_err(format!("expected channel column `ch_{n}`, found `{name}`")));
        }
    }
    let channels = header.len() - FIXED_COLUMNS.len();

    struct Partial {
        subject_id: u64,
        label: usize,
        rows: BTreeMap<i64, Vec<f64>>,
    }
    let mut trials: BTreeMap<u64, Partial> = BTreeMap::new();

    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::Parse {
            line: e.position().map_or(0, |p| p.line() as usize),
            msg: e.to_string(),
        })?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        if rec.len() != header.len() {
            return Err(Error::Parse {
                line,
                msg: format!("expected {} fields, found {}", header.len(), rec.len()),
            });
        }
        fn field<T: std::str::FromStr>(rec: &csv::StringRecord, i: usize, line: usize) -> Result<T> {
            rec[i].parse().map_err(|_| Error::Parse {
                line,
                msg: format!("column {i}: cannot parse `{}`", &rec[i]),
            })
        }
        let trial_id: u64 = field(&rec, 0, line)?;
        let subject_id: u64 = field(&rec, 1, line)?;
        let label: usize = field(&rec, 2, line)?;
        let t: i64 = field(&rec, 3, line)?;
        let mut values = Vec::with_capacity(channels);
        for i in FIXED_COLUMNS.len()..rec.len() {
            let v: f64 = field(&rec, i, line)?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    line,
                    msg: format!("column {i}: non-finite value"),
                });
            }
            values.push(v);
        }

        let entry = trials.entry(trial_id).or_insert_with(|| Partial {
            subject_id,
            label,
            rows: BTreeMap::new(),
        });
        if entry.subject_id != subject_id || entry.label != label {
            return Err(Error::Parse {
                line,
                msg: format!("trial {trial_id} changes subject or label mid-trial"),
            });
        }
        if entry.rows.insert(t, values).is_some() {
            return Err(Error::Parse {
                line,
                msg: format!("duplicate time index {t} in trial {trial_id}"),
            });
        }
    }

    if trials.is_empty() {
        return Err(Error::Data("no trials".into()));
    }
    trials
        .into_iter()
        .map(|(trial_id, p)| {
            let len = p.rows.len();
            let data: Vec<f64> = p.rows.into_values().flatten().collect();
            Ok(Trial {
                trial_id,
                subject_id: p.subject_id,
                label: p.label,
                series: Matrix::new(len, channels, data)?,
            })
        })
        .collect()
}

/// Writes trials in the canonical CSV format, time index starting at 0.
pub fn write_trials(out: &mut impl Write, trials: &[Trial]) -> Result<()> {
    let channels = trials.first().map_or(0, Trial::channels);
    let mut wtr = csv::Writer::from_writer(out);
    let mut header: Vec<String> = FIXED_COLUMNS.iter().map(|s| s.to_string()).collect();
    header.extend((0..channels).map(|n| format!("ch_{n}")));
    let csv_err = |e: csv::Error| Error::Data(e.to_string());
    wtr.write_record(&header).map_err(csv_err)?;
    for tr in trials {
        if tr.channels() != channels {
            return Err(Error::Data(format!(
                "trial {} has {} channels, expected {channels}",
                tr.trial_id,
                tr.channels()
            )));
        }
        for t in 0..tr.len() {
            let mut row = vec![
                tr.trial_id.to_string(),
                tr.subject_id.to_string(),
                tr.label.to_string(),
                t.to_string(),
            ];
            row.extend(tr.series.row(t).iter().map(|v| v.to_string()));
            wtr.write_record(&row).map_err(csv_err)?;
        }
    }
    wtr.flush().map_err(|e| Error::Data(e.to_string()))?;
    Ok(())
}

pub fn save_trials(path: &Path, trials: &[Trial]) -> Result<()> {
    let mut file = std::io::BufWriter::new(std::fs::File::create(path).map_err(|e| Error::io(path, e))?);
    write_trials(&mut file, trials)?;
    file.flush().map_err(|e| Error::io(path, e))
}
