use crate::error::{Error, Result};
use crate::frames::SettingLabel;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

/// Measurement scheme that produced a record.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuorumId {
    Homodyne,
    SqueezedHomodyne,
    Parity,
    Spin,
    Pauli,
    Kerr,
}

impl QuorumId {
    pub const ALL: [QuorumId; 6] =
        [Self::Homodyne, Self::SqueezedHomodyne, Self::Parity, Self::Spin, Self::Pauli, Self::Kerr];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Homodyne => "homodyne",
            Self::SqueezedHomodyne => "squeezed_homodyne",
            Self::Parity => "parity",
            Self::Spin => "spin",
            Self::Pauli => "pauli",
            Self::Kerr => "kerr",
        }
    }
}

impl fmt::Display for QuorumId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for QuorumId {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|q| q.as_str() == s)
            .ok_or_else(|| Error::Format(format!("unknown quorum id {s:?}")))
    }
}

/// One simulated outcome. Column layout per quorum:
///
/// | quorum | s1 | s2 | s3 | o1 |
/// |---|---|---|---|---|
/// | homodyne | phi | 0 | 0 | q |
/// | squeezed_homodyne | phi | Re zeta | Im zeta | q |
/// | parity | Re beta | Im beta | disk radius | +1 or -1 |
/// | spin | n_x | n_y | n_z | m |
/// | pauli | axis x | axis y | axis z | m |
/// | kerr | psi | 0 | 0 | phi |
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MeasurementRecord {
    pub quorum: QuorumId,
    pub settings: [f64; 3],
    pub outcome: f64,
}

impl MeasurementRecord {
    pub fn new(quorum: QuorumId, settings: [f64; 3], outcome: f64) -> Self {
        Self { quorum, settings, outcome }
    }

    pub fn setting_label(&self) -> SettingLabel {
        let coords = match self.quorum {
            QuorumId::Homodyne | QuorumId::Kerr => vec![self.settings[0]],
            QuorumId::Parity => vec![self.settings[0], self.settings[1]],
            _ => self.settings.to_vec(),
        };
        SettingLabel::new(self.quorum.as_str(), coords)
    }
}

pub const CSV_HEADER: &str = "quorum,s1,s2,s3,o1";

/// 17 significant digits, enough to round-trip any `f64`.
fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_csv<W: Write>(mut w: W, records: &[MeasurementRecord]) -> Result<()> {
    writeln!(w, "{CSV_HEADER}")?;
    for r in records {
        writeln!(
            w,
            "{},{},{},{},{}",
            r.quorum,
            fmt_f64(r.settings[0]),
            fmt_f64(r.settings[1]),
            fmt_f64(r.settings[2]),
            fmt_f64(r.outcome)
        )?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<R: BufRead>(r: R) -> Result<Vec<MeasurementRecord>> {
    let mut lines = r.lines();
    let header = lines.next().transpose()?;
    if header.as_deref().map(str::trim) != Some(CSV_HEADER) {
        return Err(Error::Format(format!("records file must start with header {CSV_HEADER:?}")));
    }
    let mut out = Vec::new();
    for (k, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let row = k + 2;
        let fields: Vec<&str> = line.trim().split(',').collect();
        if fields.len() != 5 {
            return Err(Error::Format(format!("line {row}: expected 5 fields, found {}", fields.len())));
        }
        let num = |s: &str| -> Result<f64> {
            s.trim().parse::<f64>().map_err(|e| Error::Format(format!("line {row}: {s:?}: {e}")))
        };
        out.push(MeasurementRecord {
            quorum: fields[0].trim().parse()?,
            settings: [num(fields[1])?, num(fields[2])?, num(fields[3])?],
            outcome: num(fields[4])?,
        });
    }
    Ok(out)
}

/// Errors unless every record comes from `quorum`.
pub fn require_quorum(records: &[MeasurementRecord], quorum: QuorumId) -> Result<()> {
    if let Some(r) = records.iter().find(|r| r.quorum != quorum) {
        return Err(Error::InvalidSpec(format!(
            "records from quorum {} cannot be used with the {quorum} estimator",
            r.quorum
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip_is_exact() {
        let recs = vec![
            MeasurementRecord::new(QuorumId::Homodyne, [0.1, 0.0, 0.0], -1.234_567_890_123_456_7e-3),
            MeasurementRecord::new(QuorumId::Parity, [0.5, -0.25, 4.0], -1.0),
            MeasurementRecord::new(QuorumId::Spin, [1.0 / 3f64.sqrt(); 3], 0.5),
        ];
        let mut buf = Vec::new();
        write_csv(&mut buf, &recs).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("quorum,s1,s2,s3,o1\n"));
        assert!(text.contains("1.0000000000000001e-1") || text.contains("1.0000000000000000e-1"));
        let back = read_csv(buf.as_slice()).unwrap();
        assert_eq!(back, recs);
    }

    #[test]
    fn rejects_bad_files() {
        assert!(read_csv("q,s1\n".as_bytes()).is_err());
        assert!(read_csv("quorum,s1,s2,s3,o1\nnope,1,2,3,4\n".as_bytes()).is_err());
        assert!(read_csv("quorum,s1,s2,s3,o1\nspin,1,2,3\n".as_bytes()).is_err());
    }
}
