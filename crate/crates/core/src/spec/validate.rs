//! Static checks over a parsed pipeline. Problems are reported as findings
//! rather than errors so a client can show all of them at once.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::frame::DType;
use crate::transform::{parse_predicate, Schema, TransformError, TransformStep};

use super::catalog::{check_params, ParamIssue, Registry};
use super::symbols::{analysis_outputs, Producer, Scope, Symbol, SymbolTable};
use super::types::*;
use super::{template_fields, SELECT};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum FindingCode {
    Syntax,
    Schema,
    UnresolvedReference,
    UnknownParameter,
    InvalidParameter,
    DuplicateName,
    UnknownModel,
    UnknownView,
    FacetOverflow,
    LayoutOverflow,
    SlotConflict,
    TypeMismatch,
    InvalidTransform,
    CycleDetected,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Finding {
    pub code: FindingCode,
    /// JSON pointer into the document as written.
    pub path: String,
    pub message: String,
    pub severity: Severity,
    #[serde(skip)]
    symbol: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ValidationReport {
    pub findings: Vec<Finding>,
}

impl ValidationReport {
    /// True when nothing blocks execution.
    pub fn is_ok(&self) -> bool {
        self.errors().next().is_none()
    }

    pub fn errors(&self) -> impl Iterator<Item = &Finding> {
        self.findings.iter().filter(|f| f.severity == Severity::Error)
    }

    /// A single finding for a document that failed to parse.
    pub fn from_parse_error(e: &super::SpecError) -> Self {
        let code = match e {
            super::SpecError::Syntax { .. } => FindingCode::Syntax,
            super::SpecError::UnresolvedReference { .. } => FindingCode::UnresolvedReference,
            super::SpecError::FacetOverflow { .. } => FindingCode::FacetOverflow,
            super::SpecError::UnknownModel(_) => FindingCode::UnknownModel,
            _ => FindingCode::Schema,
        };
        let mut report = Self::default();
        report.push(code, e.path().unwrap_or(""), e.to_string());
        report
    }

    pub(crate) fn first_unresolved(&self) -> Option<(String, String)> {
        self.findings
            .iter()
            .find(|f| f.code == FindingCode::UnresolvedReference)
            .map(|f| (f.path.clone(), f.symbol.clone().unwrap_or_default()))
    }

    fn push(&mut self, code: FindingCode, path: impl Into<String>, message: impl Into<String>) {
        self.findings.push(Finding {
            code,
            path: path.into(),
            message: message.into(),
            severity: Severity::Error,
            symbol: None,
        });
    }

    fn unresolved(&mut self, path: impl Into<String>, name: &str) {
        self.findings.push(Finding {
            code: FindingCode::UnresolvedReference,
            path: path.into(),
            message: format!("`{name}` is not an input column, analysis output or derived column"),
            severity: Severity::Error,
            symbol: Some(name.to_string()),
        });
    }
}

/// Checks references, parameters and layout. `input` is the schema of the
/// loaded data; without it, references to input columns are taken on trust.
pub fn validate_pipeline(spec: &PipelineSpec, registry: &Registry, input: Option<&Schema>) -> ValidationReport {
    walk(spec, registry, input).0
}

#[derive(Debug, Clone)]
struct Col {
    name: String,
    dtype: Option<DType>,
    symbol: Symbol,
}

/// Columns visible at some point of the pipeline. An open environment accepts
/// unknown names (used when the input schema is not known).
#[derive(Debug, Clone)]
struct Env {
    cols: Vec<Col>,
    open: bool,
}

impl Env {
    fn find(&self, name: &str) -> Option<&Col> {
        self.cols.iter().find(|c| c.name == name)
    }

    fn schema(&self) -> Schema {
        self.cols.iter().map(|c| (c.name.clone(), c.dtype.unwrap_or(DType::Float64))).collect()
    }

    fn push(&mut self, name: String, dtype: Option<DType>, scope: Scope, producer: Producer) {
        self.cols.retain(|c| c.name != name);
        self.cols.push(Col {
            symbol: Symbol {
                name: name.clone(),
                scope,
                producer,
            },
            name,
            dtype,
        });
    }

    /// Resolves a consumed name, recording it or reporting it.
    fn consume(&self, name: &str, path: &str, report: &mut ValidationReport, table: &mut SymbolTable) -> Option<Option<DType>> {
        match self.find(name) {
            Some(c) => {
                table.record(c.symbol.clone());
                Some(c.dtype)
            }
            None if self.open => Some(None),
            None => {
                report.unresolved(path, name);
                None
            }
        }
    }
}

fn has_select(v: &impl Serialize) -> bool {
    serde_json::to_string(v).is_ok_and(|s| s.contains(SELECT))
}

fn transform_finding(e: &TransformError) -> FindingCode {
    match e {
        TransformError::UnknownColumn(_) => FindingCode::UnresolvedReference,
        TransformError::TypeMismatch { .. } | TransformError::AggregateOnCategorical { .. } => FindingCode::TypeMismatch,
        TransformError::DuplicateName(_) => FindingCode::DuplicateName,
        TransformError::SelfReference { .. } => FindingCode::CycleDetected,
        _ => FindingCode::InvalidTransform,
    }
}

/// Runs `steps` over `env`, recording consumed symbols and returning the
/// environment after the last step.
fn walk_steps(
    steps: &[TransformStep],
    mut env: Env,
    scope: &Scope,
    base: &str,
    skip_placeholders: bool,
    report: &mut ValidationReport,
    table: &mut SymbolTable,
) -> Env {
    for (k, step) in steps.iter().enumerate() {
        let path = format!("{base}/transform/{k}");
        if skip_placeholders && has_select(step) {
            env.open = true;
            continue;
        }
        let inputs = match step.inputs() {
            Ok(i) => i,
            Err(e) => {
                report.push(transform_finding(&e), &path, e.to_string());
                env.open = true;
                continue;
            }
        };
        let before = report.findings.len();
        for f in &inputs {
            env.consume(f, &path, report, table);
        }
        if report.findings.len() > before {
            env.open = true;
        }
        if env.open {
            for out in step.outputs() {
                if env.find(&out).is_none() {
                    env.push(out, None, scope.clone(), Producer::Derived);
                }
            }
            continue;
        }
        match step.output_schema(&env.schema()) {
            Ok(schema) => {
                let cols = schema
                    .into_iter()
                    .map(|(name, dtype)| match env.find(&name) {
                        Some(c) => Col {
                            dtype: Some(dtype),
                            ..c.clone()
                        },
                        _ => Col {
                            symbol: Symbol {
                                name: name.clone(),
                                scope: scope.clone(),
                                producer: Producer::Derived,
                            },
                            name,
                            dtype: Some(dtype),
                        },
                    })
                    .collect();
                env.cols = cols;
            }
            Err(e) => {
                report.push(transform_finding(&e), &path, e.to_string());
                env.open = true;
            }
        }
    }
    env
}

struct Placed {
    slots: Vec<Option<String>>,
}

impl Placed {
    fn take(&mut self, slot: usize, id: &str, path: &str, report: &mut ValidationReport) {
        match &self.slots[slot] {
            Some(other) => report.push(
                FindingCode::SlotConflict,
                path,
                format!("slot {slot} is already used by `{other}`"),
            ),
            None => self.slots[slot] = Some(id.to_string()),
        }
    }
}

/// Number of views a facet expands to, when known before execution.
pub(crate) fn static_facet_count(f: &FacetSpec) -> Option<usize> {
    match &f.select {
        Selector::List(items) => Some(items.len()),
        Selector::Model(m) => Some(m.top_k),
        Selector::Field(s) => s.limit,
    }
}

pub(crate) fn walk(spec: &PipelineSpec, registry: &Registry, input: Option<&Schema>) -> (ValidationReport, SymbolTable) {
    let mut report = ValidationReport::default();
    let mut table = SymbolTable::default();
    let mut env = Env {
        cols: Vec::new(),
        open: input.is_none(),
    };
    for (name, dtype) in input.into_iter().flatten() {
        env.push(name.clone(), Some(*dtype), Scope::Pipeline, Producer::Input);
    }

    if let Some(sel) = &spec.data.selection {
        if sel.sample_n == Some(0) {
            report.push(FindingCode::InvalidParameter, "/data/selection/sample_n", "sample_n must be at least 1");
        }
    }
    let mut env = walk_steps(&spec.data.transform, env, &Scope::Pipeline, "/data", false, &mut report, &mut table);
    let data_env = env.clone();

    // Outputs first, so analyses may consume each other in any order.
    for (name, a) in &spec.analyses {
        if data_env.find(name).is_some() {
            report.push(
                FindingCode::DuplicateName,
                format!("/analyses/{name}"),
                format!("analysis `{name}` shadows an existing column"),
            );
        }
        let outputs = analysis_outputs(name, a);
        let multi = outputs.len() > 1;
        for (i, (col, dtype)) in outputs.into_iter().enumerate() {
            let producer = Producer::Analysis {
                name: name.clone(),
                component: multi.then_some(i),
            };
            env.push(col, Some(dtype), Scope::Pipeline, producer);
        }
    }

    // Dependency edges among analyses and models, for cycle detection.
    let mut deps: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    let producer_node = |env: &Env, field: &str| -> Option<String> {
        match env.find(field).map(|c| &c.symbol.producer) {
            Some(Producer::Analysis { name, .. }) => Some(format!("analysis:{name}")),
            _ => None,
        }
    };

    for (name, a) in &spec.analyses {
        let base = format!("/analyses/{}", escape(name));
        let node = format!("analysis:{name}");
        let set = registry.algorithm(a.algorithm);
        for issue in check_params(set, &a.parameters) {
            let path = format!("{base}/parameters/{}", escape(issue.key()));
            match issue {
                ParamIssue::Unknown { key, known } => report.push(
                    FindingCode::UnknownParameter,
                    path,
                    format!("`{key}` is not a parameter of {} (expected one of {known:?})", a.algorithm.name()),
                ),
                ParamIssue::Invalid { message, .. } => report.push(FindingCode::InvalidParameter, path, message),
            }
        }
        if let p6_analytics::Scaling::Minmax(lo, hi) = a.scaling {
            if lo.partial_cmp(&hi) != Some(std::cmp::Ordering::Less) {
                report.push(FindingCode::InvalidParameter, format!("{base}/scaling"), "minmax range needs lo < hi");
            }
        }
        let mut consumed: Vec<(String, String)> = a
            .features
            .iter()
            .enumerate()
            .map(|(i, f)| (f.clone(), format!("{base}/features/{i}")))
            .collect();
        if let Some(index) = a.parameters.get("index").and_then(|v| v.as_str()) {
            consumed.push((index.to_string(), format!("{base}/parameters/index")));
        }
        for (i, (field, path)) in consumed.iter().enumerate() {
            if let Some(dep) = producer_node(&env, field) {
                deps.entry(node.clone()).or_default().insert(dep);
            }
            let dtype = env.consume(field, path, &mut report, &mut table);
            let is_feature = i < a.features.len();
            if is_feature && dtype == Some(Some(DType::Categorical)) {
                report.push(
                    FindingCode::TypeMismatch,
                    path.clone(),
                    format!("feature `{field}` is categorical; encode it in preprocessing first"),
                );
            }
        }
        match (a.algorithm, &a.model) {
            (Algorithm::ModelApply, Some(m)) => {
                if spec.models.contains_key(m) {
                    deps.entry(node).or_default().insert(format!("model:{m}"));
                } else {
                    report.push(FindingCode::UnknownModel, format!("{base}/model"), format!("no model named `{m}`"));
                }
            }
            (Algorithm::ModelApply, None) => {
                report.push(FindingCode::UnknownModel, format!("{base}/model"), "ModelApply needs a model")
            }
            (_, Some(_)) => report.push(
                FindingCode::InvalidParameter,
                format!("{base}/model"),
                format!("{} does not use a model", a.algorithm.name()),
            ),
            (_, None) => {}
        }
    }

    for (name, m) in &spec.models {
        let base = format!("/models/{}", escape(name));
        let node = format!("model:{name}");
        if m.module != "p6" {
            report.push(FindingCode::UnknownModel, format!("{base}/module"), format!("unknown module `{}`", m.module));
        }
        let set = registry.method(m.method);
        for issue in check_params(&set, &m.parameters) {
            let path = format!("{base}/parameters/{}", escape(issue.key()));
            match issue {
                ParamIssue::Unknown { key, .. } => report.push(
                    FindingCode::UnknownParameter,
                    path,
                    format!("`{key}` is not a parameter of {}", m.method.name()),
                ),
                ParamIssue::Invalid { message, .. } => report.push(FindingCode::InvalidParameter, path, message),
            }
        }
        if let Some(grid) = &m.param_grid {
            for (key, values) in grid {
                let path = format!("{base}/param_grid/{}", escape(key));
                let Some(def) = set.get(key) else {
                    report.push(
                        FindingCode::UnknownParameter,
                        path,
                        format!("`{key}` is not a parameter of {}", m.method.name()),
                    );
                    continue;
                };
                if values.is_empty() {
                    report.push(FindingCode::InvalidParameter, &path, "grid values must not be empty");
                }
                for (i, v) in values.iter().enumerate() {
                    if let Err(message) = def.kind.check(v) {
                        report.push(FindingCode::InvalidParameter, format!("{path}/{i}"), message);
                    }
                }
            }
            if m.cv_folds < 2 {
                report.push(FindingCode::InvalidParameter, format!("{base}/cv_folds"), "cv_folds must be at least 2");
            }
        }
        if m.load.is_none() {
            match &m.target {
                None => report.push(FindingCode::InvalidParameter, format!("{base}/target"), "a trained model needs a target"),
                Some(t) => {
                    if let Some(i) = m.features.iter().position(|f| f == t) {
                        report.push(
                            FindingCode::InvalidParameter,
                            format!("{base}/features/{i}"),
                            format!("target `{t}` cannot also be a feature"),
                        );
                    }
                }
            }
            if m.training_data == PIPELINE_DATA {
                let mut fields: Vec<(String, String)> =
                    m.target.iter().map(|t| (t.clone(), format!("{base}/target"))).collect();
                fields.extend(m.features.iter().enumerate().map(|(i, f)| (f.clone(), format!("{base}/features/{i}"))));
                for (field, path) in fields {
                    if let Some(dep) = producer_node(&env, &field) {
                        deps.entry(node.clone()).or_default().insert(dep);
                    }
                    env.consume(&field, &path, &mut report, &mut table);
                }
            }
        }
    }

    for cycle_node in find_cycle(&deps) {
        let path = match cycle_node.split_once(':') {
            Some(("analysis", n)) => format!("/analyses/{}", escape(n)),
            Some((_, n)) => format!("/models/{}", escape(n)),
            None => String::new(),
        };
        report.push(FindingCode::CycleDetected, path, format!("`{cycle_node}` depends on its own output"));
    }

    let layout = &spec.view_layout;
    if layout.rows == 0 || layout.cols == 0 {
        report.push(FindingCode::InvalidParameter, "/view_layout", "rows and cols must be at least 1");
        return (report, table);
    }

    let mut placed = Placed {
        slots: vec![None; layout.slots()],
    };
    let mut view_envs: BTreeMap<String, Env> = BTreeMap::new();
    let mut ids: BTreeSet<String> = BTreeSet::new();
    let mut facet_prefixes: BTreeMap<String, Option<usize>> = BTreeMap::new();

    for (i, entry) in spec.visualizations.iter().enumerate() {
        let base = match entry {
            VisEntry::Facet(f) => format!("/visualizations/{i}/{}", f.axis.key()),
            _ => format!("/visualizations/{i}"),
        };
        let id = entry.id().to_string();
        let id_path = match entry {
            VisEntry::Layers(_) => format!("{base}/0/id"),
            _ => format!("{base}/id"),
        };
        if !ids.insert(id.clone()) {
            report.push(FindingCode::DuplicateName, id_path, format!("view id `{id}` is used twice"));
        }
        let slot_path = match entry {
            VisEntry::Layers(_) => format!("{base}/0/view"),
            _ => format!("{base}/view"),
        };
        match entry.slot().and_then(|s| s.index(layout)) {
            None => report.push(
                FindingCode::LayoutOverflow,
                &slot_path,
                format!("slot is outside the {}x{} layout", layout.rows, layout.cols),
            ),
            Some(start) => match entry {
                VisEntry::Facet(f) => {
                    let count = static_facet_count(f);
                    facet_prefixes.insert(id.clone(), count);
                    let (r, c) = (start / layout.cols, start % layout.cols);
                    let available = match f.axis {
                        FacetAxis::Cols => layout.cols - c,
                        FacetAxis::Rows => layout.rows - r,
                    };
                    let n = count.unwrap_or(1);
                    if n > available {
                        report.push(
                            FindingCode::FacetOverflow,
                            &base,
                            format!("facet expands to {n} views but only {available} slots remain along its axis"),
                        );
                    }
                    for j in 0..n.min(available) {
                        let slot = match f.axis {
                            FacetAxis::Cols => start + j,
                            FacetAxis::Rows => start + j * layout.cols,
                        };
                        placed.take(slot, &format!("{id}.{j}"), &slot_path, &mut report);
                    }
                    if let Selector::Model(sel) = &f.select {
                        if !spec.models.contains_key(&sel.model) {
                            report.push(
                                FindingCode::UnknownModel,
                                format!("{base}/$select/model"),
                                format!("no model named `{}`", sel.model),
                            );
                        }
                    }
                    if let Selector::Field(sel) = &f.select {
                        env.consume(&sel.field, &format!("{base}/$select/field"), &mut report, &mut table);
                        if let Some(filter) = &sel.filter {
                            check_filter(filter, &env, &format!("{base}/$select/filter"), &mut report, &mut table);
                        }
                    }
                }
                _ => placed.take(start, &id, &slot_path, &mut report),
            },
        }

        let facet = matches!(entry, VisEntry::Facet(_));
        for (j, layer) in entry.layers().iter().enumerate() {
            let lbase = match entry {
                VisEntry::Layers(_) => format!("{base}/{j}"),
                _ => base.clone(),
            };
            if j > 0 {
                if let Some(lid) = &layer.id {
                    if !ids.insert(lid.clone()) {
                        report.push(FindingCode::DuplicateName, format!("{lbase}/id"), format!("view id `{lid}` is used twice"));
                    }
                }
            }
            let scope = Scope::View(id.clone());
            let venv = walk_steps(&layer.transform, env.clone(), &scope, &lbase, facet, &mut report, &mut table);
            for (ch, enc) in layer.encodings() {
                if let Some(field) = enc.field() {
                    if facet && field.contains(SELECT) {
                        continue;
                    }
                    venv.consume(field, &format!("{lbase}/{}", ch.name()), &mut report, &mut table);
                }
            }
            for (k, dim) in layer.dims.iter().enumerate() {
                if facet && dim.contains(SELECT) {
                    continue;
                }
                venv.consume(dim, &format!("{lbase}/dims/{k}"), &mut report, &mut table);
            }
            if j == 0 {
                view_envs.insert(id.clone(), venv);
            }
        }
    }

    let known_view = |v: &str| {
        ids.contains(v)
            || v.rsplit_once('.').is_some_and(|(prefix, idx)| match (facet_prefixes.get(prefix), idx.parse::<usize>()) {
                (Some(Some(n)), Ok(k)) => k < *n,
                (Some(None), Ok(_)) => true,
                _ => false,
            })
    };

    for (i, inter) in spec.interactions.iter().enumerate() {
        if !known_view(&inter.source) {
            report.push(
                FindingCode::UnknownView,
                format!("/interactions/{i}/source"),
                format!("no view `{}`", inter.source),
            );
        }
        for (j, t) in inter.targets.iter().enumerate() {
            if !known_view(t) {
                report.push(FindingCode::UnknownView, format!("/interactions/{i}/targets/{j}"), format!("no view `{t}`"));
            }
        }
    }

    for (i, ann) in spec.annotations.iter().enumerate() {
        let base = format!("/annotations/{i}");
        if !known_view(&ann.view) {
            report.push(FindingCode::UnknownView, format!("{base}/view"), format!("no view `{}`", ann.view));
        }
        let text_env = match &ann.data_ref {
            Some(r) => {
                env.consume(&r.name, &format!("{base}/data_ref/name"), &mut report, &mut table);
                if let Some(filter) = &r.filter {
                    check_filter(filter, &env, &format!("{base}/data_ref/filter"), &mut report, &mut table);
                }
                &env
            }
            None => view_envs.get(&ann.view).unwrap_or(&env),
        };
        if let Some(text) = &ann.text {
            for (field, _) in template_fields(text) {
                text_env.consume(&field, &format!("{base}/text"), &mut report, &mut table);
            }
        }
    }

    (report, table)
}

fn check_filter(filter: &str, env: &Env, path: &str, report: &mut ValidationReport, table: &mut SymbolTable) {
    match parse_predicate(filter) {
        Ok(p) => {
            for f in p.fields() {
                env.consume(&f, path, report, table);
            }
        }
        Err(e) => report.push(FindingCode::InvalidTransform, path, e.to_string()),
    }
}

/// Escapes one JSON-pointer segment.
pub fn escape(key: &str) -> String {
    key.replace('~', "~0").replace('/', "~1")
}

/// Nodes that lie on a dependency cycle.
fn find_cycle(deps: &BTreeMap<String, BTreeSet<String>>) -> Vec<String> {
    let mut on_cycle = BTreeSet::new();
    for start in deps.keys() {
        let mut stack: Vec<&String> = deps[start].iter().collect();
        let mut seen = BTreeSet::new();
        while let Some(n) = stack.pop() {
            if n == start {
                on_cycle.insert(start.clone());
                break;
            }
            if seen.insert(n) {
                stack.extend(deps.get(n).into_iter().flatten());
            }
        }
    }
    on_cycle.into_iter().collect()
}
