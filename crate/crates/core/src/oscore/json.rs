use super::{DensityMatrix, Operator};
use crate::error::{Error, Result};
use crate::FORMAT_VERSION;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Wire form of an operator: `{"version", "dim", "entries": [[re, im], ...]}`, row-major.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OperatorJson {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub version: Option<u32>,
    pub dim: usize,
    pub entries: Vec<[f64; 2]>,
}

impl From<&Operator> for OperatorJson {
    fn from(op: &Operator) -> Self {
        let d = op.dim();
        let entries = (0..d * d)
            .map(|k| {
                let z = op.get(k / d, k % d);
                [z.re, z.im]
            })
            .collect();
        Self { version: Some(FORMAT_VERSION), dim: d, entries }
    }
}

impl TryFrom<OperatorJson> for Operator {
    type Error = Error;

    fn try_from(js: OperatorJson) -> Result<Self> {
        if js.dim == 0 {
            return Err(Error::Format("operator dim must be at least 1".into()));
        }
        if js.entries.len() != js.dim * js.dim {
            return Err(Error::Format(format!(
                "operator of dim {} needs {} entries, found {}",
                js.dim,
                js.dim * js.dim,
                js.entries.len()
            )));
        }
        let d = js.dim;
        let m = nalgebra::DMatrix::from_fn(d, d, |i, j| {
            let [re, im] = js.entries[i * d + j];
            C64::new(re, im)
        });
        Operator::new(m)
    }
}

impl Serialize for Operator {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        OperatorJson::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for Operator {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let js = OperatorJson::deserialize(d)?;
        Operator::try_from(js).map_err(serde::de::Error::custom)
    }
}

impl Serialize for DensityMatrix {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.op().serialize(s)
    }
}

impl<'de> Deserialize<'de> for DensityMatrix {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let op = Operator::deserialize(d)?;
        DensityMatrix::new(op).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oscore::annihilation;

    #[test]
    fn round_trip_preserves_entries() {
        let a = annihilation(3).scale(C64::new(0.25, -1.5));
        let text = serde_json::to_string(&a).unwrap();
        assert!(text.contains("\"dim\":3"));
        let back: Operator = serde_json::from_str(&text).unwrap();
        assert_eq!(a, back);
    }

    #[test]
    fn rejects_wrong_entry_count() {
        let text = r#"{"dim": 2, "entries": [[1,0],[0,0],[0,0]]}"#;
        let err = serde_json::from_str::<Operator>(text).unwrap_err();
        assert!(err.to_string().contains("needs 4 entries"));
    }

    #[test]
    fn density_matrix_reader_validates() {
        let text = r#"{"dim": 2, "entries": [[1,0],[0,0],[0,0],[1,0]]}"#;
        assert!(serde_json::from_str::<DensityMatrix>(text).is_err());
        let text = r#"{"dim": 2, "entries": [[0.5,0],[0,0],[0,0],[0.5,0]]}"#;
        assert!(serde_json::from_str::<DensityMatrix>(text).is_ok());
    }
}
