use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::IngestError;
use crate::frame::{Column, ColumnData, DataFrame};

/// `true` drops rows with a null anywhere; `"used"` only looks at columns the
/// pipeline references downstream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DropNa {
    #[default]
    Off,
    All,
    Used,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum DropNaRepr {
    Flag(bool),
    Mode(UsedMarker),
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum UsedMarker {
    Used,
}

impl Serialize for DropNa {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            DropNa::Off => DropNaRepr::Flag(false),
            DropNa::All => DropNaRepr::Flag(true),
            DropNa::Used => DropNaRepr::Mode(UsedMarker::Used),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for DropNa {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        DropNaRepr::deserialize(d)
            .map(|r| match r {
                DropNaRepr::Flag(false) => DropNa::Off,
                DropNaRepr::Flag(true) => DropNa::All,
                DropNaRepr::Mode(UsedMarker::Used) => DropNa::Used,
            })
            .map_err(|_| serde::de::Error::custom("expected true, false or \"used\""))
    }
}

impl DropNa {
    pub fn is_off(&self) -> bool {
        *self == DropNa::Off
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Encoding {
    Numerical,
    Onehot,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Preprocessing {
    #[serde(default, skip_serializing_if = "DropNa::is_off")]
    pub dropna: DropNa,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub encodings: BTreeMap<String, Encoding>,
}

impl Preprocessing {
    pub fn is_empty(&self) -> bool {
        self.dropna.is_off() && self.encodings.is_empty()
    }
}

/// Drops incomplete rows, then applies categorical encodings in place.
///
/// `used` names the columns referenced downstream; it only matters for
/// `dropna: "used"`.
pub fn preprocess(
    frame: &DataFrame,
    spec: &Preprocessing,
    used: Option<&BTreeSet<String>>,
) -> Result<DataFrame, IngestError> {
    for name in spec.encodings.keys() {
        let col = frame
            .column(name)
            .ok_or_else(|| IngestError::UnknownColumn(name.clone()))?;
        if col.dictionary().is_none() {
            return Err(IngestError::EncodeNonCategorical(name.clone()));
        }
    }

    let check: Vec<&Arc<Column>> = match spec.dropna {
        DropNa::Off => Vec::new(),
        DropNa::All => frame.columns().iter().collect(),
        DropNa::Used => frame
            .columns()
            .iter()
            .filter(|c| used.is_none_or(|u| u.contains(c.name()) || one_hot_used(c.name(), u)))
            .collect(),
    };
    let mut frame = if check.iter().any(|c| c.null_count() > 0) {
        let keep: Vec<usize> = (0..frame.row_count())
            .filter(|&i| check.iter().all(|c| c.is_valid(i)))
            .collect();
        frame.take(&keep)
    } else {
        frame.clone()
    };

    for (name, enc) in &spec.encodings {
        frame = encode(&frame, name, *enc);
    }
    Ok(frame)
}

fn one_hot_used(name: &str, used: &BTreeSet<String>) -> bool {
    let prefix = format!("{name}=");
    used.iter().any(|u| u.starts_with(&prefix))
}

fn encode(frame: &DataFrame, name: &str, enc: Encoding) -> DataFrame {
    let pos = frame.columns().iter().position(|c| c.name() == name).unwrap();
    let col = &frame.columns()[pos];
    let ColumnData::Categorical { codes, dictionary } = col.data() else {
        unreachable!("checked above")
    };
    let n = col.len();
    let replacement: Vec<Column> = match enc {
        Encoding::Numerical => {
            let v: Vec<Option<i64>> = (0..n)
                .map(|i| col.is_valid(i).then(|| codes[i] as i64))
                .collect();
            vec![Column::from_i64_options(name, &v)]
        }
        Encoding::Onehot => dictionary
            .iter()
            .enumerate()
            .map(|(k, value)| {
                let v = (0..n)
                    .map(|i| i64::from(col.is_valid(i) && codes[i] as usize == k))
                    .collect();
                Column::int64(format!("{name}={value}"), v)
            })
            .collect(),
    };
    let mut columns: Vec<Arc<Column>> = frame.columns()[..pos].to_vec();
    columns.extend(replacement.into_iter().map(Arc::new));
    columns.extend_from_slice(&frame.columns()[pos + 1..]);
    DataFrame::from_arcs(columns, Some(n)).expect("encoded names are unique")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frame::Scalar;

    fn frame() -> DataFrame {
        DataFrame::new(vec![
            Column::categorical("c", &[Some("b"), Some("a"), Some("b")]),
            Column::from_f64_options("x", &[Some(1.0), None, Some(3.0)]),
        ])
        .unwrap()
    }

    fn pp(dropna: DropNa, enc: &[(&str, Encoding)]) -> Preprocessing {
        Preprocessing {
            dropna,
            encodings: enc.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
        }
    }

    #[test]
    fn one_hot_in_dictionary_order() {
        let out = preprocess(&frame(), &pp(DropNa::Off, &[("c", Encoding::Onehot)]), None).unwrap();
        assert_eq!(out.column_names(), vec!["c=a", "c=b", "x"]);
        assert_eq!(out.require("c=a").unwrap().data(), &ColumnData::Int64(vec![0, 1, 0]));
        assert_eq!(out.require("c=b").unwrap().data(), &ColumnData::Int64(vec![1, 0, 1]));
    }

    #[test]
    fn numerical_codes() {
        let out = preprocess(&frame(), &pp(DropNa::Off, &[("c", Encoding::Numerical)]), None).unwrap();
        assert_eq!(out.require("c").unwrap().data(), &ColumnData::Int64(vec![1, 0, 1]));
    }

    #[test]
    fn dropna_variants() {
        let out = preprocess(&frame(), &pp(DropNa::All, &[]), None).unwrap();
        assert_eq!(out.row_count(), 2);
        assert_eq!(out.require("x").unwrap().get(1), Scalar::Float(3.0));
        let used: BTreeSet<String> = ["c".to_string()].into();
        let kept = preprocess(&frame(), &pp(DropNa::Used, &[]), Some(&used)).unwrap();
        assert_eq!(kept.row_count(), 3);
    }

    #[test]
    fn non_categorical_encoding_fails() {
        let err = preprocess(&frame(), &pp(DropNa::Off, &[("x", Encoding::Onehot)]), None).unwrap_err();
        assert_eq!(err, IngestError::EncodeNonCategorical("x".into()));
    }

    #[test]
    fn dropna_serde_forms() {
        let t: Preprocessing = serde_json::from_str(r#"{"dropna":"used"}"#).unwrap();
        assert_eq!(t.dropna, DropNa::Used);
        let b: Preprocessing = serde_json::from_str(r#"{"dropna":true}"#).unwrap();
        assert_eq!(b.dropna, DropNa::All);
        assert!(serde_json::from_str::<Preprocessing>(r#"{"dropna":"all"}"#).is_err());
    }
}
