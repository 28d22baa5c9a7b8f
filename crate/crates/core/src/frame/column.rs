use std::collections::BTreeSet;

use serde_json::Value as Json;

use super::{Bitmap, FrameError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DType {
    Float64,
    Int64,
    Categorical,
}

impl DType {
    pub fn is_numeric(self) -> bool {
        matches!(self, DType::Float64 | DType::Int64)
    }

    pub fn code(self) -> u8 {
        match self {
            DType::Float64 => 0,
            DType::Int64 => 1,
            DType::Categorical => 2,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(DType::Float64),
            1 => Some(DType::Int64),
            2 => Some(DType::Categorical),
            _ => None,
        }
    }
}

#[derive(Debug, Clone)]
pub enum ColumnData {
    Float64(Vec<f64>),
    Int64(Vec<i64>),
    Categorical { codes: Vec<u32>, dictionary: Vec<String> },
}

impl ColumnData {
    pub fn len(&self) -> usize {
        match self {
            ColumnData::Float64(v) => v.len(),
            ColumnData::Int64(v) => v.len(),
            ColumnData::Categorical { codes, .. } => codes.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dtype(&self) -> DType {
        match self {
            ColumnData::Float64(_) => DType::Float64,
            ColumnData::Int64(_) => DType::Int64,
            ColumnData::Categorical { .. } => DType::Categorical,
        }
    }
}

/// Floats compare by bit pattern so that NaN payloads and signed zeros count
/// as part of a column's identity.
impl PartialEq for ColumnData {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (ColumnData::Float64(a), ColumnData::Float64(b)) => {
                a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits())
            }
            (ColumnData::Int64(a), ColumnData::Int64(b)) => a == b,
            (
                ColumnData::Categorical { codes: ca, dictionary: da },
                ColumnData::Categorical { codes: cb, dictionary: db },
            ) => ca == cb && da == db,
            _ => false,
        }
    }
}

/// A single cell, borrowed from its column.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Scalar<'a> {
    Null,
    Float(f64),
    Int(i64),
    Str(&'a str),
}

impl Scalar<'_> {
    pub fn as_f64(&self) -> Option<f64> {
        match *self {
            Scalar::Float(v) => Some(v),
            Scalar::Int(v) => Some(v as f64),
            _ => None,
        }
    }

    pub fn to_json(&self) -> Json {
        match *self {
            Scalar::Null => Json::Null,
            Scalar::Float(v) => serde_json::Number::from_f64(v).map_or(Json::Null, Json::Number),
            Scalar::Int(v) => Json::from(v),
            Scalar::Str(s) => Json::from(s),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Column {
    name: String,
    data: ColumnData,
    validity: Option<Bitmap>,
}

impl Column {
    /// Checks lengths and that every present categorical code indexes the dictionary.
    pub fn new(
        name: impl Into<String>,
        data: ColumnData,
        validity: Option<Bitmap>,
    ) -> Result<Self, FrameError> {
        let name = name.into();
        if let Some(v) = &validity {
            if v.len() != data.len() {
                return Err(FrameError::LengthMismatch {
                    expected: data.len(),
                    found: v.len(),
                });
            }
        }
        if let ColumnData::Categorical { codes, dictionary } = &data {
            let bad = codes.iter().enumerate().any(|(i, &c)| {
                (c as usize) >= dictionary.len() && validity.as_ref().is_none_or(|v| v.get(i))
            });
            if bad {
                return Err(FrameError::InvalidCode(name));
            }
        }
        Ok(Self {
            name,
            data,
            validity,
        })
    }

    pub fn float64(name: impl Into<String>, values: Vec<f64>) -> Self {
        Self {
            name: name.into(),
            data: ColumnData::Float64(values),
            validity: None,
        }
    }

    pub fn int64(name: impl Into<String>, values: Vec<i64>) -> Self {
        Self {
            name: name.into(),
            data: ColumnData::Int64(values),
            validity: None,
        }
    }

    pub fn from_f64_options(name: impl Into<String>, values: &[Option<f64>]) -> Self {
        let data = values.iter().map(|v| v.unwrap_or(0.0)).collect();
        Self::with_mask(name, ColumnData::Float64(data), values.iter().map(Option::is_some))
    }

    pub fn from_i64_options(name: impl Into<String>, values: &[Option<i64>]) -> Self {
        let data = values.iter().map(|v| v.unwrap_or(0)).collect();
        Self::with_mask(name, ColumnData::Int64(data), values.iter().map(Option::is_some))
    }

    /// Builds a categorical column whose dictionary is the sorted set of distinct values.
    pub fn categorical<S: AsRef<str>>(name: impl Into<String>, values: &[Option<S>]) -> Self {
        let dictionary: Vec<String> = values
            .iter()
            .flatten()
            .map(|s| s.as_ref())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .map(str::to_string)
            .collect();
        let codes = values
            .iter()
            .map(|v| match v {
                Some(s) => dictionary.binary_search_by(|d| d.as_str().cmp(s.as_ref())).unwrap() as u32,
                None => 0,
            })
            .collect();
        Self::with_mask(
            name,
            ColumnData::Categorical { codes, dictionary },
            values.iter().map(Option::is_some),
        )
    }

    fn with_mask(name: impl Into<String>, data: ColumnData, present: impl Iterator<Item = bool>) -> Self {
        let present: Vec<bool> = present.collect();
        let validity = (!present.iter().all(|&p| p)).then(|| Bitmap::from_bools(&present));
        Self {
            name: name.into(),
            data,
            validity,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn data(&self) -> &ColumnData {
        &self.data
    }

    pub fn dtype(&self) -> DType {
        self.data.dtype()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn validity(&self) -> Option<&Bitmap> {
        self.validity.as_ref()
    }

    #[inline]
    pub fn is_valid(&self, i: usize) -> bool {
        self.validity.as_ref().is_none_or(|v| v.get(i))
    }

    pub fn null_count(&self) -> usize {
        self.validity.as_ref().map_or(0, |v| v.len() - v.count_set())
    }

    pub fn dictionary(&self) -> Option<&[String]> {
        match &self.data {
            ColumnData::Categorical { dictionary, .. } => Some(dictionary),
            _ => None,
        }
    }

    pub fn get(&self, i: usize) -> Scalar<'_> {
        if !self.is_valid(i) {
            return Scalar::Null;
        }
        match &self.data {
            ColumnData::Float64(v) => Scalar::Float(v[i]),
            ColumnData::Int64(v) => Scalar::Int(v[i]),
            ColumnData::Categorical { codes, dictionary } => Scalar::Str(&dictionary[codes[i] as usize]),
        }
    }

    /// Numeric value at `i`; `None` for nulls and categorical cells.
    #[inline]
    pub fn f64_at(&self, i: usize) -> Option<f64> {
        if !self.is_valid(i) {
            return None;
        }
        match &self.data {
            ColumnData::Float64(v) => Some(v[i]),
            ColumnData::Int64(v) => Some(v[i] as f64),
            ColumnData::Categorical { .. } => None,
        }
    }

    pub fn renamed(&self, name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            ..self.clone()
        }
    }

    pub fn take(&self, indices: &[usize]) -> Self {
        let data = match &self.data {
            ColumnData::Float64(v) => ColumnData::Float64(indices.iter().map(|&i| v[i]).collect()),
            ColumnData::Int64(v) => ColumnData::Int64(indices.iter().map(|&i| v[i]).collect()),
            ColumnData::Categorical { codes, dictionary } => ColumnData::Categorical {
                codes: indices.iter().map(|&i| codes[i]).collect(),
                dictionary: dictionary.clone(),
            },
        };
        let validity = self
            .validity
            .as_ref()
            .map(|v| v.select(indices))
            .filter(|v| v.count_set() < v.len());
        Self {
            name: self.name.clone(),
            data,
            validity,
        }
    }

    pub fn to_json(&self) -> Vec<Json> {
        (0..self.len()).map(|i| self.get(i).to_json()).collect()
    }

    /// Approximate heap footprint, used for cache accounting.
    pub fn byte_size(&self) -> usize {
        let payload = match &self.data {
            ColumnData::Float64(v) => v.len() * 8,
            ColumnData::Int64(v) => v.len() * 8,
            ColumnData::Categorical { codes, dictionary } => {
                codes.len() * 4 + dictionary.iter().map(|s| s.len() + 24).sum::<usize>()
            }
        };
        payload + self.validity.as_ref().map_or(0, |v| v.as_bytes().len()) + self.name.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn categorical_dictionary_is_lexicographic() {
        let c = Column::categorical("c", &[Some("b"), Some("a"), None, Some("b")]);
        assert_eq!(c.dictionary().unwrap(), &["a".to_string(), "b".to_string()]);
        assert_eq!(c.get(0), Scalar::Str("b"));
        assert_eq!(c.get(2), Scalar::Null);
        assert_eq!(c.null_count(), 1);
    }

    #[test]
    fn rejects_out_of_range_codes() {
        let data = ColumnData::Categorical {
            codes: vec![0, 2],
            dictionary: vec!["a".into()],
        };
        assert!(matches!(Column::new("c", data, None), Err(FrameError::InvalidCode(_))));
    }

    #[test]
    fn take_drops_mask_when_no_nulls_remain() {
        let c = Column::from_f64_options("x", &[Some(1.0), None, Some(3.0)]);
        let t = c.take(&[2, 0]);
        assert!(t.validity().is_none());
        assert_eq!(t.f64_at(0), Some(3.0));
    }
}
