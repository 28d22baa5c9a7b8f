use std::cmp::Ordering;
use std::collections::BTreeMap;

use super::{AggOp, AggregateSpec, BinSpec, Expr, Predicate, SortOrder, TransformError};
use crate::frame::{Column, ColumnData, DType, DataFrame, Scalar};

pub fn match_rows(frame: &DataFrame, predicate: &Predicate) -> Result<DataFrame, TransformError> {
    let mask = predicate.evaluate(frame)?;
    if mask.iter().all(|&m| m) {
        return Ok(frame.clone());
    }
    let keep: Vec<usize> = mask.iter().enumerate().filter(|(_, m)| **m).map(|(i, _)| i).collect();
    Ok(frame.take(&keep))
}

pub fn derive(frame: &DataFrame, name: &str, expr: &Expr) -> Result<DataFrame, TransformError> {
    let col = expr.evaluate_column(frame, name)?;
    Ok(frame.append_column(col)?)
}

/// Stable sort on one field; nulls go last in either direction.
pub fn sort_top(
    frame: &DataFrame,
    by: &str,
    order: SortOrder,
    limit: Option<usize>,
) -> Result<DataFrame, TransformError> {
    let col = frame
        .column(by)
        .ok_or_else(|| TransformError::UnknownColumn(by.to_string()))?;
    let mut idx: Vec<usize> = (0..frame.row_count()).collect();
    idx.sort_by(|&a, &b| {
        let (x, y) = (col.get(a), col.get(b));
        match (x, y) {
            (Scalar::Null, Scalar::Null) => Ordering::Equal,
            (Scalar::Null, _) => Ordering::Greater,
            (_, Scalar::Null) => Ordering::Less,
            _ => {
                let o = cmp_scalar(&x, &y);
                if order == SortOrder::Desc {
                    o.reverse()
                } else {
                    o
                }
            }
        }
    });
    if let Some(k) = limit {
        idx.truncate(k);
    }
    Ok(frame.take(&idx))
}

fn cmp_scalar(x: &Scalar, y: &Scalar) -> Ordering {
    match (x, y) {
        (Scalar::Int(a), Scalar::Int(b)) => a.cmp(b),
        (Scalar::Str(a), Scalar::Str(b)) => a.cmp(b),
        _ => x.as_f64().unwrap_or(f64::NAN).total_cmp(&y.as_f64().unwrap_or(f64::NAN)),
    }
}

/// Group key part. Variant order puts nulls after every value.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
enum Key<'a> {
    Int(i64),
    Float(OrdF64),
    Str(&'a str),
    Null,
}

#[derive(Debug, Clone, Copy)]
struct OrdF64(f64);

impl PartialEq for OrdF64 {
    fn eq(&self, other: &Self) -> bool {
        self.0.total_cmp(&other.0) == Ordering::Equal
    }
}
impl Eq for OrdF64 {}
impl PartialOrd for OrdF64 {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for OrdF64 {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

fn key_of(s: Scalar<'_>) -> Key<'_> {
    match s {
        Scalar::Null => Key::Null,
        Scalar::Int(v) => Key::Int(v),
        // -0.0 and 0.0 belong to the same group.
        Scalar::Float(v) => Key::Float(OrdF64(if v == 0.0 { 0.0 } else { v })),
        Scalar::Str(s) => Key::Str(s),
    }
}

/// Equal-width bin edges over `[min, max]` of the non-null values; `None` for
/// an all-null field. The last bin is closed on the right.
pub fn bin_edges(col: &Column, spec: &BinSpec) -> Result<Option<Vec<f64>>, TransformError> {
    if col.dtype() == DType::Categorical {
        return Err(TransformError::InvalidBin(format!("`{}` is not numeric", spec.field)));
    }
    let (lo, hi) = (0..col.len())
        .filter_map(|i| col.f64_at(i))
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if lo > hi {
        return Ok(None);
    }
    let edges = match (spec.bin_count, spec.bin_width) {
        (Some(k), None) if k >= 1 => {
            if lo == hi {
                vec![lo, hi]
            } else {
                let w = (hi - lo) / k as f64;
                (0..=k).map(|i| if i == k { hi } else { lo + w * i as f64 }).collect()
            }
        }
        (None, Some(w)) if w > 0.0 && w.is_finite() => {
            let count = (((hi - lo) / w).ceil() as usize).max(1);
            (0..=count).map(|i| lo + w * i as f64).collect()
        }
        _ => {
            return Err(TransformError::InvalidBin(
                "give exactly one of a positive bin_count or bin_width".into(),
            ))
        }
    };
    Ok(Some(edges))
}

fn bin_index(edges: &[f64], v: f64) -> usize {
    let bins = edges.len() - 1;
    // First edge strictly above v, minus one; values at the top edge land in the last bin.
    let i = edges.partition_point(|&e| e <= v);
    i.saturating_sub(1).min(bins - 1)
}

pub fn aggregate(frame: &DataFrame, spec: &AggregateSpec) -> Result<DataFrame, TransformError> {
    let require = |name: &str| {
        frame
            .column(name)
            .map(|c| c.as_ref())
            .ok_or_else(|| TransformError::UnknownColumn(name.to_string()))
    };
    let group_cols: Vec<&Column> = spec.groupby.iter().map(|g| require(g)).collect::<Result<_, _>>()?;
    let bin = match &spec.bin {
        Some(b) => {
            let col = require(&b.field)?;
            Some((col, bin_edges(col, b)?))
        }
        None => None,
    };
    let agg_cols: Vec<Option<&Column>> = spec
        .aggregations
        .iter()
        .map(|a| a.field.as_deref().map(require).transpose())
        .collect::<Result<_, _>>()?;
    for (a, col) in spec.aggregations.iter().zip(&agg_cols) {
        match (a.op, col) {
            (AggOp::Sum | AggOp::Mean, Some(c)) if c.dtype() == DType::Categorical => {
                return Err(TransformError::AggregateOnCategorical {
                    op: a.op.name(),
                    field: c.name().to_string(),
                })
            }
            (AggOp::Sum | AggOp::Mean | AggOp::Min | AggOp::Max, None) => {
                return Err(TransformError::TypeMismatch {
                    field: a.output_name(),
                    message: format!("`{}` needs a field", a.op.name()),
                })
            }
            _ => {}
        }
    }

    let mut groups: BTreeMap<(Vec<Key>, usize), Vec<usize>> = BTreeMap::new();
    for i in 0..frame.row_count() {
        let b = match &bin {
            Some((col, edges)) => match (col.f64_at(i), edges) {
                (Some(v), Some(e)) if v.is_finite() => bin_index(e, v),
                _ => continue,
            },
            None => 0,
        };
        let key = group_cols.iter().map(|c| key_of(c.get(i))).collect();
        groups.entry((key, b)).or_default().push(i);
    }

    let mut out: Vec<Column> = Vec::new();
    for (j, gc) in group_cols.iter().enumerate() {
        let rep: Vec<usize> = groups.values().map(|rows| rows[0]).collect();
        let mut col = gc.take(&rep);
        if let ColumnData::Categorical { .. } = col.data() {
            let vals: Vec<Option<&str>> = (0..col.len())
                .map(|i| match col.get(i) {
                    Scalar::Str(s) => Some(s),
                    _ => None,
                })
                .collect();
            col = Column::categorical(spec.groupby[j].clone(), &vals);
        }
        out.push(col);
    }
    if let (Some(b), Some((_, edges))) = (&spec.bin, &bin) {
        let edges = edges.as_deref().unwrap_or(&[]);
        let starts = groups.keys().map(|(_, k)| edges[*k]).collect();
        let ends = groups.keys().map(|(_, k)| edges[*k + 1]).collect();
        out.push(Column::float64(b.field.clone(), starts));
        out.push(Column::float64(b.end_name(), ends));
    }
    for (a, col) in spec.aggregations.iter().zip(&agg_cols) {
        let name = a.output_name();
        let column = match (a.op, col) {
            (AggOp::Count, None) => Column::int64(name, groups.values().map(|r| r.len() as i64).collect()),
            (AggOp::Count, Some(c)) => Column::int64(
                name,
                groups.values().map(|r| r.iter().filter(|&&i| c.is_valid(i)).count() as i64).collect(),
            ),
            (AggOp::Sum | AggOp::Mean, Some(c)) => {
                let vals: Vec<Option<f64>> = groups
                    .values()
                    .map(|rows| {
                        let present: Vec<f64> = rows.iter().filter_map(|&i| c.f64_at(i)).collect();
                        if present.is_empty() {
                            return None;
                        }
                        let s: f64 = present.iter().sum();
                        Some(if a.op == AggOp::Sum { s } else { s / present.len() as f64 })
                    })
                    .collect();
                Column::from_f64_options(name, &vals)
            }
            (AggOp::Min | AggOp::Max, Some(c)) => {
                let picks: Vec<Option<usize>> = groups
                    .values()
                    .map(|rows| {
                        let it = rows.iter().copied().filter(|&i| c.is_valid(i));
                        let cmp = |x: &usize, y: &usize| cmp_scalar(&c.get(*x), &c.get(*y));
                        if a.op == AggOp::Min {
                            it.min_by(cmp)
                        } else {
                            it.max_by(cmp)
                        }
                    })
                    .collect();
                pick_column(c, &name, &picks)
            }
            _ => unreachable!("validated above"),
        };
        out.push(column);
    }
    let rows = groups.len();
    DataFrame::from_arcs(out.into_iter().map(std::sync::Arc::new).collect(), Some(rows)).map_err(Into::into)
}

fn pick_column(c: &Column, name: &str, picks: &[Option<usize>]) -> Column {
    match c.data() {
        ColumnData::Float64(v) => Column::from_f64_options(name, &picks.iter().map(|p| p.map(|i| v[i])).collect::<Vec<_>>()),
        ColumnData::Int64(v) => Column::from_i64_options(name, &picks.iter().map(|p| p.map(|i| v[i])).collect::<Vec<_>>()),
        ColumnData::Categorical { .. } => {
            let vals: Vec<Option<&str>> = picks
                .iter()
                .map(|p| match p.map(|i| c.get(i)) {
                    Some(Scalar::Str(s)) => Some(s),
                    _ => None,
                })
                .collect();
            Column::categorical(name, &vals)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transform::{parse_predicate, Aggregation, COUNT};

    fn agg(groupby: &[&str], aggs: Vec<Aggregation>) -> AggregateSpec {
        AggregateSpec {
            groupby: groupby.iter().map(|s| s.to_string()).collect(),
            bin: None,
            aggregations: aggs,
        }
    }

    #[test]
    fn count_by_cluster() {
        let f = DataFrame::new(vec![Column::int64("Clusters", vec![1, 0, 0])]).unwrap();
        let out = aggregate(&f, &agg(&["Clusters"], vec![Aggregation::count()])).unwrap();
        assert_eq!(out.require("Clusters").unwrap().data(), &ColumnData::Int64(vec![0, 1]));
        assert_eq!(out.require(COUNT).unwrap().data(), &ColumnData::Int64(vec![2, 1]));
    }

    #[test]
    fn sum_by_date_and_constant_group() {
        let f = DataFrame::new(vec![
            Column::int64("Date", vec![2, 1, 2, 1]),
            Column::categorical("Country", &[Some("A"), Some("A"), Some("B"), Some("B")]),
            Column::float64("Confirmed", vec![5.0, 1.0, 7.0, 2.0]),
            Column::int64("k", vec![3; 4]),
        ])
        .unwrap();
        let sum = Aggregation {
            op: AggOp::Sum,
            field: Some("Confirmed".into()),
            out: Some("Confirmed".into()),
        };
        let out = aggregate(&f, &agg(&["Date"], vec![sum])).unwrap();
        assert_eq!(out.require("Confirmed").unwrap().data(), &ColumnData::Float64(vec![3.0, 12.0]));
        let one = aggregate(&f, &agg(&["k"], vec![Aggregation::count()])).unwrap();
        assert_eq!(one.row_count(), 1);
        assert_eq!(one.require(COUNT).unwrap().get(0), Scalar::Int(4));
        let bad = Aggregation {
            op: AggOp::Mean,
            field: Some("Country".into()),
            out: None,
        };
        assert!(matches!(
            aggregate(&f, &agg(&[], vec![bad])),
            Err(TransformError::AggregateOnCategorical { .. })
        ));
    }

    #[test]
    fn nulls_group_last_and_empty_input() {
        let f = DataFrame::new(vec![Column::from_i64_options("g", &[None, Some(2), Some(1)])]).unwrap();
        let out = aggregate(&f, &agg(&["g"], vec![Aggregation::count()])).unwrap();
        assert_eq!(out.require("g").unwrap().to_json(), serde_json::json!([1, 2, null]).as_array().unwrap().clone());
        let empty = aggregate(&f.take(&[]), &agg(&["g"], vec![Aggregation::count()])).unwrap();
        assert_eq!((empty.row_count(), empty.n_columns()), (0, 2));
    }

    #[test]
    fn binning_tiles_the_range() {
        let f = DataFrame::new(vec![Column::from_f64_options(
            "v",
            &[Some(0.0), Some(1.0), Some(2.5), Some(10.0), None, Some(9.99)],
        )])
        .unwrap();
        let spec = AggregateSpec {
            groupby: vec![],
            bin: Some(BinSpec {
                field: "v".into(),
                bin_count: Some(4),
                bin_width: None,
            }),
            aggregations: vec![Aggregation::count()],
        };
        let out = aggregate(&f, &spec).unwrap();
        assert_eq!(out.require("v").unwrap().data(), &ColumnData::Float64(vec![0.0, 2.5, 7.5]));
        assert_eq!(out.require("v_end").unwrap().data(), &ColumnData::Float64(vec![2.5, 5.0, 10.0]));
        assert_eq!(out.require(COUNT).unwrap().data(), &ColumnData::Int64(vec![2, 1, 2]));
    }

    #[test]
    fn sort_is_stable_with_nulls_last() {
        let f = DataFrame::new(vec![
            Column::from_i64_options("k", &[Some(3), None, Some(1), Some(3), Some(2)]),
            Column::int64("id", vec![0, 1, 2, 3, 4]),
        ])
        .unwrap();
        let ids = |o, l| {
            sort_top(&f, "k", o, l).unwrap().require("id").unwrap().to_json()
        };
        assert_eq!(ids(SortOrder::Asc, None), serde_json::json!([2, 4, 0, 3, 1]).as_array().unwrap().clone());
        assert_eq!(ids(SortOrder::Desc, Some(2)), serde_json::json!([0, 3]).as_array().unwrap().clone());
        assert!(sort_top(&f, "zz", SortOrder::Asc, None).is_err());
    }

    #[test]
    fn match_keeps_order() {
        let f = DataFrame::new(vec![Column::int64("ChangePoints", vec![0, 1, 0, 1])]).unwrap();
        let out = match_rows(&f, &parse_predicate("ChangePoints == 1").unwrap()).unwrap();
        assert_eq!(out.row_count(), 2);
        let same = match_rows(&f, &parse_predicate("true").unwrap()).unwrap();
        assert_eq!(same, f);
    }
}
