//! Expansion of `$rows` / `$cols` facets into concrete views.

use p6_analytics::{rank_model_attributes, AnalyticsError, Model};
use serde_json::Value as Json;

use crate::frame::{ColumnData, DataFrame};
use crate::transform::{field_ref, parse_predicate, quote, TransformError};

use super::types::*;
use super::SpecError;

/// What a facet selector may look at: trained models and the pipeline frame.
pub trait FacetContext {
    fn model(&self, name: &str) -> Option<&Model>;
    fn frame(&self) -> Option<&DataFrame>;
}

/// Views produced by one facet, in placement order.
#[derive(Debug, Clone, PartialEq)]
pub struct FacetGroup {
    pub prefix: String,
    pub axis: FacetAxis,
    pub members: Vec<String>,
    pub values: Vec<Json>,
}

fn selector_values(sel: &Selector, ctx: &dyn FacetContext, path: &str) -> Result<Vec<Json>, SpecError> {
    match sel {
        Selector::List(items) => Ok(items.clone()),
        Selector::Model(m) => {
            let model = ctx.model(&m.model).ok_or_else(|| SpecError::UnknownModel(m.model.clone()))?;
            let ranked = rank_model_attributes(model, &m.attribute, m.top_k, m.order).map_err(|e| match e {
                AnalyticsError::UnknownModelAttribute(a) => SpecError::UnknownModelAttribute {
                    model: m.model.clone(),
                    attribute: a,
                },
                other => SpecError::schema(path, &other.to_string()),
            })?;
            Ok(ranked.into_iter().map(|(name, _)| Json::String(name)).collect())
        }
        Selector::Field(f) => {
            let frame = ctx
                .frame()
                .ok_or_else(|| SpecError::schema(path, "field selectors need the pipeline frame"))?;
            let selector_err = |source: TransformError| SpecError::Selector {
                path: path.to_string(),
                source,
            };
            let keep: Vec<usize> = match &f.filter {
                None => (0..frame.row_count()).collect(),
                Some(src) => {
                    let mask = parse_predicate(src).and_then(|p| p.evaluate(frame)).map_err(selector_err)?;
                    (0..frame.row_count()).filter(|&i| mask[i]).collect()
                }
            };
            let col = frame
                .column(&f.field)
                .ok_or_else(|| selector_err(TransformError::UnknownColumn(f.field.clone())))?;
            let rows = keep.into_iter().filter(|&i| col.is_valid(i));
            let mut values: Vec<Json> = match col.data() {
                ColumnData::Int64(v) => {
                    let mut xs: Vec<i64> = rows.map(|i| v[i]).collect();
                    xs.sort_unstable();
                    xs.dedup();
                    xs.into_iter().map(Json::from).collect()
                }
                ColumnData::Float64(v) => {
                    let mut xs: Vec<f64> = rows.map(|i| v[i]).collect();
                    xs.sort_by(f64::total_cmp);
                    xs.dedup();
                    xs.into_iter().map(Json::from).collect()
                }
                ColumnData::Categorical { codes, dictionary } => {
                    let mut xs: Vec<u32> = rows.map(|i| codes[i]).collect();
                    xs.sort_unstable();
                    xs.dedup();
                    xs.into_iter().map(|c| Json::String(dictionary[c as usize].clone())).collect()
                }
            };
            if let Some(limit) = f.limit {
                values.truncate(limit);
            }
            Ok(values)
        }
    }
}

fn literal(raw: &Json) -> String {
    match raw {
        Json::String(s) => quote(s),
        other => other.to_string(),
    }
}

fn subst(v: &mut Json, raw: &Json) {
    match v {
        Json::String(s) if s == SELECT => *v = raw.clone(),
        Json::String(s) if s.contains(SELECT) => {
            let name = raw.as_str().map_or_else(|| raw.to_string(), str::to_string);
            *s = s
                .replace(&format!("`{SELECT}`"), &field_ref(&name))
                .replace(SELECT, &literal(raw));
        }
        Json::Array(items) => items.iter_mut().for_each(|i| subst(i, raw)),
        Json::Object(map) => map.values_mut().for_each(|i| subst(i, raw)),
        _ => {}
    }
}

/// Binds the template's `$select` placeholders to `raw`. A string that is
/// exactly `$select` becomes the value itself; inside longer strings it is
/// written as a literal, or as a field reference when backtick-quoted.
pub fn substitute(template: &ViewSpec, raw: &Json, path: &str) -> Result<ViewSpec, SpecError> {
    let mut doc = serde_json::to_value(template).expect("view serializes");
    subst(&mut doc, raw);
    serde_json::from_value(doc)
        .map_err(|e| SpecError::schema(path, &format!("substituting {raw} gives an invalid view: {e}")))
}

/// Expands one visualization entry. Non-facet entries come back unchanged.
pub fn expand_entry(
    entry: &VisEntry,
    index: usize,
    layout: &ViewLayout,
    ctx: &dyn FacetContext,
) -> Result<(Vec<VisEntry>, Option<FacetGroup>), SpecError> {
    let VisEntry::Facet(f) = entry else {
        return Ok((vec![entry.clone()], None));
    };
    let path = format!("/visualizations/{index}/{}", f.axis.key());
    let values = selector_values(&f.select, ctx, &format!("{path}/$select"))?;
    let start = f
        .template
        .view
        .and_then(|s| s.index(layout))
        .ok_or_else(|| SpecError::FacetOverflow {
            path: path.clone(),
            needed: values.len(),
            available: 0,
        })?;
    let (r, c) = (start / layout.cols, start % layout.cols);
    let available = match f.axis {
        FacetAxis::Cols => layout.cols - c,
        FacetAxis::Rows => layout.rows - r,
    };
    if values.len() > available {
        return Err(SpecError::FacetOverflow {
            path,
            needed: values.len(),
            available,
        });
    }
    let prefix = entry.id().to_string();
    let mut views = Vec::with_capacity(values.len());
    let mut members = Vec::with_capacity(values.len());
    for (j, raw) in values.iter().enumerate() {
        let mut v = substitute(&f.template, raw, &path)?;
        let id = format!("{prefix}.{j}");
        v.id = Some(id.clone());
        v.view = Some(Slot::Index(match f.axis {
            FacetAxis::Cols => start + j,
            FacetAxis::Rows => start + j * layout.cols,
        }));
        members.push(id);
        views.push(VisEntry::View(v));
    }
    let group = FacetGroup {
        prefix,
        axis: f.axis,
        members,
        values,
    };
    Ok((views, Some(group)))
}

/// Replaces a facet prefix by its member ids; other ids pass through.
pub fn expand_view_ref(id: &str, groups: &[FacetGroup]) -> Vec<String> {
    match groups.iter().find(|g| g.prefix == id) {
        Some(g) => g.members.clone(),
        None => vec![id.to_string()],
    }
}

/// A spec with every facet replaced by concrete views. Interactions and
/// annotations that name a facet apply to each of its views.
pub fn expand_facets(spec: &PipelineSpec, ctx: &dyn FacetContext) -> Result<PipelineSpec, SpecError> {
    let mut out = spec.clone();
    let mut groups = Vec::new();
    out.visualizations.clear();
    for (i, entry) in spec.visualizations.iter().enumerate() {
        let (views, group) = expand_entry(entry, i, &spec.view_layout, ctx)?;
        out.visualizations.extend(views);
        groups.extend(group);
    }
    if groups.is_empty() {
        return Ok(out);
    }
    out.interactions = spec
        .interactions
        .iter()
        .flat_map(|inter| {
            let targets: Vec<String> = inter.targets.iter().flat_map(|t| expand_view_ref(t, &groups)).collect();
            expand_view_ref(&inter.source, &groups)
                .into_iter()
                .map(move |source| InteractionSpec {
                    source,
                    targets: targets.clone(),
                    ..inter.clone()
                })
        })
        .collect();
    out.annotations = spec
        .annotations
        .iter()
        .flat_map(|a| {
            expand_view_ref(&a.view, &groups)
                .into_iter()
                .map(move |view| AnnotationSpec { view, ..a.clone() })
        })
        .collect();
    Ok(out)
}
