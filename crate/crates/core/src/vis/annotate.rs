use serde::Serialize;
use serde_json::Value as Json;

use p6_analytics::{fit_linear_regression, FeatureMatrix, FittedState};

use crate::frame::{DataFrame, Scalar};
use crate::ingest::format_epoch_days;
use crate::spec::{template_fields, AnnotationKind, AnnotationSpec, ViewSpec};
use crate::transform::parse_predicate;

use super::{SceneSpec, VisError};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LabelItem {
    pub x: Json,
    pub y: Json,
    pub text: String,
}

/// Annotation resolved against data, in the scene's scale space.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SceneAnnotation {
    /// Vertical rule at one x position; a rule spec yields one per matched value.
    Rule { field: String, scale: Option<String>, value: Json },
    Label { items: Vec<LabelItem> },
    /// Least-squares line of y on x over the view's rows.
    Trendline {
        slope: f64,
        intercept: f64,
        x0: f64,
        x1: f64,
        x_scale: Option<String>,
        y_scale: Option<String>,
    },
}

fn err(view: &str, message: impl Into<String>) -> VisError {
    VisError::Annotation {
        view: view.to_string(),
        message: message.into(),
    }
}

/// Rows picked by a `data_ref`: its filter when given, otherwise rows whose
/// named column is valid and nonzero.
fn selected_rows(view: &str, a: &AnnotationSpec, frame: &DataFrame) -> Result<Vec<usize>, VisError> {
    let Some(dr) = &a.data_ref else {
        return Ok((0..frame.row_count()).collect());
    };
    let col = frame.column(&dr.name).ok_or_else(|| VisError::UnresolvedAnnotationRef {
        view: view.to_string(),
        name: dr.name.clone(),
    })?;
    let mask: Vec<bool> = match &dr.filter {
        Some(f) => parse_predicate(f)
            .and_then(|p| p.evaluate(frame))
            .map_err(|source| VisError::Transform {
                view: view.to_string(),
                source,
            })?,
        None => (0..frame.row_count())
            .map(|i| match col.get(i) {
                Scalar::Null => false,
                Scalar::Str(s) => !s.is_empty(),
                v => v.as_f64().is_some_and(|x| x != 0.0),
            })
            .collect(),
    };
    Ok(mask.iter().enumerate().filter(|(_, &m)| m).map(|(i, _)| i).collect())
}

fn format_value(view: &str, v: Scalar<'_>, fmt: Option<&str>) -> Result<String, VisError> {
    Ok(match (fmt, v) {
        (_, Scalar::Null) => String::new(),
        (None, Scalar::Str(s)) => s.to_string(),
        (None, v) => match v.to_json() {
            Json::Number(n) => n.to_string(),
            other => other.to_string(),
        },
        (Some("date"), v) => v
            .as_f64()
            .and_then(|d| format_epoch_days(d.round() as i64))
            .ok_or_else(|| err(view, "`date` format needs a day count"))?,
        (Some(f), v) if f.starts_with('.') && f.ends_with('f') => {
            let digits: usize = f[1..f.len() - 1].parse().map_err(|_| err(view, format!("bad format `{f}`")))?;
            let x = v.as_f64().ok_or_else(|| err(view, format!("`{f}` needs a number")))?;
            format!("{x:.digits$}")
        }
        (Some(f), _) => return Err(err(view, format!("unknown format `{f}`"))),
    })
}

/// Renders `{Field}` and `{Field|fmt}` placeholders for one row.
pub fn render_template(view: &str, text: &str, frame: &DataFrame, row: usize) -> Result<String, VisError> {
    let mut out = text.to_string();
    for (field, fmt) in template_fields(text) {
        let col = frame.column(&field).ok_or_else(|| VisError::UnresolvedAnnotationRef {
            view: view.to_string(),
            name: field.clone(),
        })?;
        let rendered = format_value(view, col.get(row), fmt.as_deref())?;
        let placeholder = match &fmt {
            Some(f) => format!("{{{field}|{f}}}"),
            None => format!("{{{field}}}"),
        };
        out = out.replace(&placeholder, &rendered);
    }
    Ok(out)
}

fn value_at(frame: &DataFrame, field: Option<&str>, row: usize) -> Json {
    field
        .and_then(|f| frame.column(f))
        .map_or(Json::Null, |c| c.get(row).to_json())
}

fn numeric(frame: &DataFrame, field: &str, rows: &[usize]) -> Option<Vec<Option<f64>>> {
    let col = frame.column(field)?;
    Some(rows.iter().map(|&i| col.f64_at(i)).collect())
}

/// Resolves `annotations` for one scene. Rules and labels with a `data_ref`
/// read the pipeline frame; everything else reads the view's own rows.
pub fn attach_annotations(
    scene: &mut SceneSpec,
    view: &ViewSpec,
    annotations: &[&AnnotationSpec],
    pipeline: &DataFrame,
    view_data: &DataFrame,
) -> Result<(), VisError> {
    let id = scene.view_id.clone();
    let xf = view.x.as_ref().and_then(|e| e.field());
    let yf = view.y.as_ref().and_then(|e| e.field());
    let scale_of = |ch: &str| scene.channels.get(ch).and_then(|b| b.scale.clone());
    let (x_scale, y_scale) = (scale_of("x"), scale_of("y"));
    for a in annotations {
        let frame = if a.data_ref.is_some() { pipeline } else { view_data };
        let built = match a.kind {
            AnnotationKind::Rule => {
                if a.data_ref.is_none() {
                    return Err(err(&id, "a rule needs `data_ref`"));
                }
                let x = xf.ok_or_else(|| err(&id, "a rule needs a field on x"))?;
                let rows = selected_rows(&id, a, frame)?;
                let col = frame
                    .column(x)
                    .ok_or_else(|| err(&id, format!("rule positions need `{x}` in the pipeline frame")))?;
                let mut values: Vec<Json> = rows.iter().map(|&i| col.get(i).to_json()).filter(|v| !v.is_null()).collect();
                values.sort_by(|a, b| match (a.as_f64(), b.as_f64()) {
                    (Some(p), Some(q)) => p.total_cmp(&q),
                    _ => a.to_string().cmp(&b.to_string()),
                });
                values.dedup();
                scene.annotations.extend(values.into_iter().map(|value| SceneAnnotation::Rule {
                    field: x.to_string(),
                    scale: x_scale.clone(),
                    value,
                }));
                continue;
            }
            AnnotationKind::Label => {
                let text = a.text.as_deref().ok_or_else(|| err(&id, "a label needs `text`"))?;
                let rows = selected_rows(&id, a, frame)?;
                let items = rows
                    .iter()
                    .map(|&i| {
                        Ok(LabelItem {
                            x: value_at(frame, xf, i),
                            y: value_at(frame, yf, i),
                            text: render_template(&id, text, frame, i)?,
                        })
                    })
                    .collect::<Result<_, VisError>>()?;
                SceneAnnotation::Label { items }
            }
            AnnotationKind::Trendline => {
                let (Some(x), Some(y)) = (xf, yf) else {
                    return Err(err(&id, "a trendline needs fields on x and y"));
                };
                let rows = selected_rows(&id, a, frame)?;
                let xs = numeric(frame, x, &rows).ok_or_else(|| err(&id, format!("unknown field `{x}`")))?;
                let ys = numeric(frame, y, &rows).ok_or_else(|| err(&id, format!("unknown field `{y}`")))?;
                let pairs: Vec<(f64, f64)> = xs.into_iter().zip(ys).filter_map(|(a, b)| Some((a?, b?))).collect();
                if pairs.len() < 2 {
                    return Err(err(&id, "a trendline needs at least two numeric points"));
                }
                let rows: Vec<[f64; 1]> = pairs.iter().map(|p| [p.0]).collect();
                let target: Vec<f64> = pairs.iter().map(|p| p.1).collect();
                let fm = FeatureMatrix::from_rows(&rows).map_err(|e| err(&id, e.to_string()))?;
                let model = fit_linear_regression(&fm, &target).map_err(|e| err(&id, e.to_string()))?;
                let FittedState::Linear { coefficients, intercept } = model.state else {
                    unreachable!("linear fit yields linear state")
                };
                let (x0, x1) = pairs.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| (lo.min(p.0), hi.max(p.0)));
                SceneAnnotation::Trendline {
                    slope: coefficients[0],
                    intercept,
                    x0,
                    x1,
                    x_scale: x_scale.clone(),
                    y_scale: y_scale.clone(),
                }
            }
        };
        scene.annotations.push(built);
    }
    Ok(())
}
