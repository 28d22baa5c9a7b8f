use std::cmp::Ordering;

use serde::Serialize;
use serde_json::Value as Json;

use crate::frame::{Column, ColumnData};

pub const TABLEAU10: [&str; 10] = [
    "#4e79a7", "#f28e2c", "#e15759", "#76b7b2", "#59a14f", "#edc949", "#af7aa1", "#ff9da7", "#9c755f", "#bab0ab",
];

pub const TABLEAU20: [&str; 20] = [
    "#4e79a7", "#a0cbe8", "#f28e2b", "#ffbe7d", "#59a14f", "#8cd17d", "#b6992d", "#f1ce63", "#499894", "#86bcb6",
    "#e15759", "#ff9d9a", "#79706e", "#bab0ac", "#d37295", "#fabfd2", "#b07aa1", "#d4a6c8", "#9d7660", "#d7b5a6",
];

/// Colors for `n` categories: the 10-color cycle up to 10, the 20-color one
/// beyond, repeating after 20.
pub fn palette(n: usize) -> Vec<&'static str> {
    let base: &[&str] = if n <= 10 { &TABLEAU10 } else { &TABLEAU20 };
    (0..n).map(|i| base[i % base.len()]).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScaleKind {
    Linear,
    Band,
    OrdinalColor,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Scale {
    pub id: String,
    pub kind: ScaleKind,
    pub domain: Vec<Json>,
    pub range: Vec<Json>,
    pub nice: bool,
}

impl Scale {
    /// Maps a data value into the range; `None` for values outside a band or
    /// ordinal domain.
    pub fn apply(&self, v: &Json) -> Option<Json> {
        match self.kind {
            ScaleKind::Linear => {
                let (d0, d1) = (self.domain[0].as_f64()?, self.domain[1].as_f64()?);
                let x = v.as_f64()?;
                let t = (x - d0) / (d1 - d0);
                match (self.range[0].as_f64(), self.range[1].as_f64()) {
                    (Some(r0), Some(r1)) => Some(Json::from(r0 + t * (r1 - r0))),
                    _ => Some(self.range[if t < 0.5 { 0 } else { 1 }].clone()),
                }
            }
            ScaleKind::Band => {
                let i = self.domain.iter().position(|d| json_eq(d, v))?;
                let (r0, r1) = (self.range[0].as_f64()?, self.range[1].as_f64()?);
                let step = (r1 - r0) / self.domain.len() as f64;
                Some(Json::from(r0 + step * (i as f64 + 0.5)))
            }
            ScaleKind::OrdinalColor => {
                let i = self.domain.iter().position(|d| json_eq(d, v))?;
                Some(self.range[i].clone())
            }
        }
    }
}

fn json_eq(a: &Json, b: &Json) -> bool {
    match (a.as_f64(), b.as_f64()) {
        (Some(x), Some(y)) => x == y,
        _ => a == b,
    }
}

/// Data extent of one channel before it becomes a scale.
#[derive(Debug, Clone, PartialEq)]
pub enum Extent {
    /// `None` when no valid value exists.
    Numeric(Option<(f64, f64)>),
    Categories(Vec<Json>),
}

fn cmp_json(a: &Json, b: &Json) -> Ordering {
    match (a, b) {
        (Json::String(x), Json::String(y)) => x.cmp(y),
        (Json::String(_), _) => Ordering::Greater,
        (_, Json::String(_)) => Ordering::Less,
        _ => a.as_f64().unwrap_or(f64::NAN).total_cmp(&b.as_f64().unwrap_or(f64::NAN)),
    }
}

impl Extent {
    pub fn numeric(col: &Column) -> Self {
        let mut acc: Option<(f64, f64)> = None;
        for i in 0..col.len() {
            if let Some(v) = col.f64_at(i) {
                acc = Some(match acc {
                    None => (v, v),
                    Some((lo, hi)) => (lo.min(v), hi.max(v)),
                });
            }
        }
        Extent::Numeric(acc)
    }

    /// Distinct valid values, ascending (dictionary order for categoricals).
    pub fn categories(col: &Column) -> Self {
        let mut out: Vec<Json> = match col.data() {
            ColumnData::Categorical { codes, dictionary } => {
                let mut seen = vec![false; dictionary.len()];
                for (i, &c) in codes.iter().enumerate() {
                    if col.is_valid(i) {
                        seen[c as usize] = true;
                    }
                }
                return Extent::Categories(
                    dictionary
                        .iter()
                        .zip(seen)
                        .filter(|(_, s)| *s)
                        .map(|(d, _)| Json::String(d.clone()))
                        .collect(),
                );
            }
            _ => (0..col.len()).filter(|&i| col.is_valid(i)).map(|i| col.get(i).to_json()).collect(),
        };
        out.sort_by(cmp_json);
        out.dedup_by(|a, b| json_eq(a, b));
        Extent::Categories(out)
    }

    pub fn union(&self, other: &Extent) -> Extent {
        match (self, other) {
            (Extent::Numeric(a), Extent::Numeric(b)) => Extent::Numeric(match (a, b) {
                (Some((l0, h0)), Some((l1, h1))) => Some((l0.min(*l1), h0.max(*h1))),
                (x, None) | (None, x) => *x,
            }),
            (Extent::Categories(a), Extent::Categories(b)) => {
                let mut all: Vec<Json> = a.iter().chain(b).cloned().collect();
                all.sort_by(cmp_json);
                all.dedup_by(|x, y| json_eq(x, y));
                Extent::Categories(all)
            }
            // Mixed kinds cannot share a scale; keep the first.
            (a, _) => a.clone(),
        }
    }

    /// Linear domain: widened when degenerate, `[0, 1]` when empty.
    pub fn linear_domain(&self, include_zero: bool) -> [f64; 2] {
        let (mut lo, mut hi) = match self {
            Extent::Numeric(Some(r)) => *r,
            _ => return [0.0, 1.0],
        };
        if include_zero {
            lo = lo.min(0.0);
            hi = hi.max(0.0);
        }
        if lo == hi {
            lo -= 0.5;
            hi += 0.5;
        }
        [lo, hi]
    }
}

pub fn linear(id: String, domain: [f64; 2], range: [Json; 2]) -> Scale {
    Scale {
        id,
        kind: ScaleKind::Linear,
        domain: domain.iter().map(|&v| Json::from(v)).collect(),
        range: range.to_vec(),
        nice: false,
    }
}

pub fn band(id: String, domain: Vec<Json>, range: [f64; 2]) -> Scale {
    Scale {
        id,
        kind: ScaleKind::Band,
        domain,
        range: range.iter().map(|&v| Json::from(v)).collect(),
        nice: false,
    }
}

pub fn ordinal_color(id: String, domain: Vec<Json>) -> Scale {
    let range = palette(domain.len()).into_iter().map(Json::from).collect();
    Scale {
        id,
        kind: ScaleKind::OrdinalColor,
        domain,
        range,
        nice: false,
    }
}

#[cfg(test)]
mod tests {
    use serde_json::json;

    use super::*;

    #[test]
    fn palette_switches_at_ten_and_cycles_after_twenty() {
        assert_eq!(palette(10), TABLEAU10.to_vec());
        let p = palette(11);
        assert_eq!(p.iter().collect::<std::collections::BTreeSet<_>>().len(), 11);
        let p = palette(23);
        assert_eq!(p[20], p[0]);
        assert_eq!(p[..20].iter().collect::<std::collections::BTreeSet<_>>().len(), 20);
    }

    #[test]
    fn domains() {
        assert_eq!(Extent::Numeric(Some((3.0, 3.0))).linear_domain(false), [2.5, 3.5]);
        assert_eq!(Extent::Numeric(None).linear_domain(false), [0.0, 1.0]);
        assert_eq!(Extent::Numeric(Some((2.0, 9.0))).linear_domain(true), [0.0, 9.0]);
        let cats = Extent::categories(&Column::categorical("c", &[Some("b"), None, Some("a")]));
        assert_eq!(cats, Extent::Categories(vec![json!("a"), json!("b")]));
        let ints = Extent::categories(&Column::int64("k", vec![2, 0, 2, 1]));
        assert_eq!(ints, Extent::Categories(vec![json!(0), json!(1), json!(2)]));
    }

    #[test]
    fn scales_map_into_range() {
        let s = linear("x".into(), [0.0, 10.0], [json!(100.0), json!(200.0)]);
        assert_eq!(s.apply(&json!(5)), Some(json!(150.0)));
        let b = band("x".into(), vec![json!(0), json!(1)], [0.0, 100.0]);
        assert_eq!(b.apply(&json!(1)), Some(json!(75.0)));
        assert_eq!(b.apply(&json!(7)), None);
    }
}
