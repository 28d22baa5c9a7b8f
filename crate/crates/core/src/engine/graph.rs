//! Operation dependency graph derived from a pipeline spec.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap, HashMap};

use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;
use petgraph::Direction;
use serde::Serialize;
use serde_json::{json, Value as Json};

use crate::ingest::DropNa;
use crate::spec::{
    analysis_outputs, template_fields, vis_entry_json, Algorithm, PipelineSpec, Selector, SpecError, VisEntry,
    PIPELINE_DATA, SELECT,
};
use crate::transform::{parse_predicate, TransformStep};

use super::EngineError;

pub const LOAD: &str = "load";
pub const TRANSFORM: &str = "transform";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum NodeKind {
    Load,
    Transform,
    Analysis,
    Model,
    View,
}

/// One operation: what it is, where it lives in the spec, the spec subtree it
/// reads (its snapshot) and the nodes whose results it consumes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Node {
    pub id: String,
    pub kind: NodeKind,
    /// JSON pointer of the spec block that defines the node.
    pub path: String,
    pub snapshot: Json,
    pub deps: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DepGraph {
    /// Topologically ordered.
    nodes: Vec<Node>,
    #[serde(skip)]
    index: HashMap<String, usize>,
}

impl DepGraph {
    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn node(&self, id: &str) -> Option<&Node> {
        self.index.get(id).map(|&i| &self.nodes[i])
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// `(from, to)` data edges.
    pub fn edges(&self) -> Vec<(String, String)> {
        self.nodes
            .iter()
            .flat_map(|n| n.deps.iter().map(move |d| (d.clone(), n.id.clone())))
            .collect()
    }

    /// Topological position of a node.
    pub fn position(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    /// `seeds` plus every node reachable from them.
    pub fn closure(&self, seeds: &BTreeSet<String>) -> BTreeSet<String> {
        let mut out: BTreeSet<String> = seeds.iter().filter(|s| self.index.contains_key(*s)).cloned().collect();
        for n in &self.nodes {
            if !out.contains(&n.id) && n.deps.iter().any(|d| out.contains(d)) {
                out.insert(n.id.clone());
            }
        }
        out
    }

    /// Ids in topological order.
    pub fn order(&self) -> Vec<String> {
        self.nodes.iter().map(|n| n.id.clone()).collect()
    }
}

fn is_ident_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_' || c == '.'
}

/// Whether `name` occurs in `text` as a whole token.
fn mentions(text: &str, name: &str) -> bool {
    text.match_indices(name).any(|(i, _)| {
        let before = text[..i].chars().next_back();
        let after = text[i + name.len()..].chars().next();
        !before.is_some_and(is_ident_char) && !after.is_some_and(is_ident_char)
    })
}

fn strings(v: &Json, out: &mut Vec<String>) {
    match v {
        Json::String(s) => out.push(s.clone()),
        Json::Array(items) => items.iter().for_each(|i| strings(i, out)),
        Json::Object(map) => {
            for (k, v) in map {
                out.push(k.clone());
                strings(v, out);
            }
        }
        _ => {}
    }
}

struct Builder<'a> {
    spec: &'a PipelineSpec,
    outputs: BTreeMap<&'a str, Vec<String>>,
}

impl<'a> Builder<'a> {
    fn producers_of(&self, name: &str) -> Option<&'a str> {
        self.outputs
            .iter()
            .find(|(_, outs)| outs.iter().any(|o| o == name))
            .map(|(a, _)| *a)
    }

    /// Analyses producing any of `names` exactly.
    fn exact(&self, names: impl IntoIterator<Item = impl AsRef<str>>) -> BTreeSet<String> {
        names
            .into_iter()
            .filter_map(|n| self.producers_of(n.as_ref()))
            .map(str::to_string)
            .collect()
    }

    /// Analyses whose outputs are mentioned anywhere in `texts`.
    fn mentioned(&self, texts: &[String]) -> BTreeSet<String> {
        self.outputs
            .iter()
            .filter(|(_, outs)| outs.iter().any(|o| texts.iter().any(|t| mentions(t, o))))
            .map(|(a, _)| a.to_string())
            .collect()
    }

    fn model_deps(&self, model: &str) -> BTreeSet<String> {
        let mut deps = BTreeSet::from([model.to_string()]);
        if let Some(m) = self.spec.models.get(model) {
            if m.training_data == PIPELINE_DATA && m.load.is_none() {
                deps.extend(self.exact(m.features.iter().chain(m.target.iter())));
            }
        }
        deps
    }
}

fn base_id(spec: &PipelineSpec) -> &'static str {
    if spec.data.transform.is_empty() {
        LOAD
    } else {
        TRANSFORM
    }
}

fn self_reference(steps: &[TransformStep], node: &str) -> Result<(), EngineError> {
    for step in steps {
        if let TransformStep::Derive(map) = step {
            for (name, expr) in map {
                if let Ok(e) = crate::transform::parse_expr(expr) {
                    if e.fields().iter().any(|f| f == name) {
                        return Err(EngineError::CycleDetected {
                            cycle: vec![format!("{node}:{name}"), format!("{node}:{name}")],
                        });
                    }
                }
            }
        }
    }
    Ok(())
}

/// Columns the pipeline reads from its loaded data, for `dropna: "used"`.
/// `None` when some analysis or model takes every numeric column.
pub fn used_fields(spec: &PipelineSpec) -> Option<BTreeSet<String>> {
    let mut used = BTreeSet::new();
    let step_inputs = |steps: &[TransformStep], used: &mut BTreeSet<String>| {
        for s in steps {
            if let Ok(inputs) = s.inputs() {
                used.extend(inputs);
            }
        }
    };
    step_inputs(&spec.data.transform, &mut used);
    for a in spec.analyses.values() {
        if a.features.is_empty() && a.algorithm != Algorithm::ModelApply {
            return None;
        }
        used.extend(a.features.iter().cloned());
        if let Some(Json::String(index)) = a.parameters.get("index") {
            used.insert(index.clone());
        }
    }
    for m in spec.models.values() {
        if m.training_data == PIPELINE_DATA && m.load.is_none() {
            if m.features.is_empty() {
                return None;
            }
            used.extend(m.features.iter().chain(m.target.iter()).cloned());
        }
    }
    for entry in &spec.visualizations {
        if let VisEntry::Facet(f) = entry {
            match &f.select {
                Selector::List(items) => used.extend(items.iter().filter_map(|v| v.as_str().map(str::to_string))),
                Selector::Field(fs) => {
                    used.insert(fs.field.clone());
                    if let Some(p) = fs.filter.as_deref().and_then(|p| parse_predicate(p).ok()) {
                        used.extend(p.fields());
                    }
                }
                Selector::Model(_) => {}
            }
        }
        for layer in entry.layers() {
            step_inputs(&layer.transform, &mut used);
            used.extend(layer.bound_fields());
        }
    }
    for a in &spec.annotations {
        if let Some(dr) = &a.data_ref {
            used.insert(dr.name.clone());
            if let Some(p) = dr.filter.as_deref().and_then(|p| parse_predicate(p).ok()) {
                used.extend(p.fields());
            }
        }
        if let Some(t) = &a.text {
            used.extend(template_fields(t).into_iter().map(|(f, _)| f));
        }
    }
    used.remove(SELECT);
    Some(used)
}

fn touches(view_ref: &str, id: &str) -> bool {
    view_ref == id || view_ref.strip_prefix(id).is_some_and(|rest| rest.starts_with('.'))
}

/// Builds the graph. Node ids are `load`, `transform` (only when the data
/// block transforms), analysis and model names, and visualization ids.
pub fn build_graph(spec: &PipelineSpec) -> Result<DepGraph, EngineError> {
    let outputs: BTreeMap<&str, Vec<String>> = spec
        .analyses
        .iter()
        .map(|(name, a)| (name.as_str(), analysis_outputs(name, a).into_iter().map(|(n, _)| n).collect()))
        .collect();
    let b = Builder { spec, outputs };
    let base = base_id(spec);
    let mut nodes: Vec<Node> = Vec::new();

    let mut load_snapshot = json!({
        "source": spec.data.source,
        "format": spec.data.format,
        "selection": spec.data.selection,
        "preprocessing": spec.data.preprocessing,
    });
    if spec.data.preprocessing.dropna == DropNa::Used {
        load_snapshot["used"] = json!(used_fields(spec));
    }
    nodes.push(Node {
        id: LOAD.into(),
        kind: NodeKind::Load,
        path: "/data".into(),
        snapshot: load_snapshot,
        deps: Vec::new(),
    });
    if !spec.data.transform.is_empty() {
        self_reference(&spec.data.transform, TRANSFORM)?;
        nodes.push(Node {
            id: TRANSFORM.into(),
            kind: NodeKind::Transform,
            path: "/data/transform".into(),
            snapshot: json!(spec.data.transform),
            deps: vec![LOAD.into()],
        });
    }

    for (name, a) in &spec.analyses {
        let mut deps = b.exact(&a.features);
        if let Some(Json::String(index)) = a.parameters.get("index") {
            deps.extend(b.exact([index]));
        }
        if let Some(m) = &a.model {
            deps.extend(b.model_deps(m));
        }
        deps.insert(base.into());
        nodes.push(Node {
            id: name.clone(),
            kind: NodeKind::Analysis,
            path: format!("/analyses/{}", crate::spec::escape_pointer(name)),
            snapshot: json!(a),
            deps: deps.into_iter().collect(),
        });
    }

    for (name, m) in &spec.models {
        let mut deps = BTreeSet::new();
        if m.training_data == PIPELINE_DATA && m.load.is_none() {
            deps.extend(b.exact(m.features.iter().chain(m.target.iter())));
            deps.insert(base.to_string());
        }
        nodes.push(Node {
            id: name.clone(),
            kind: NodeKind::Model,
            path: format!("/models/{}", crate::spec::escape_pointer(name)),
            snapshot: json!(m),
            deps: deps.into_iter().collect(),
        });
    }

    for (i, entry) in spec.visualizations.iter().enumerate() {
        let id = entry.id().to_string();
        for layer in entry.layers() {
            self_reference(&layer.transform, &id)?;
        }
        let entry_json = vis_entry_json(entry);
        let annotations: Vec<Json> = spec
            .annotations
            .iter()
            .filter(|a| touches(&a.view, &id))
            .map(|a| json!(a))
            .collect();
        let interactions: Vec<Json> = spec
            .interactions
            .iter()
            .filter(|it| touches(&it.source, &id) || it.targets.iter().any(|t| touches(t, &id)))
            .map(|it| json!(it))
            .collect();
        let mut texts = Vec::new();
        strings(&entry_json, &mut texts);
        strings(&Json::Array(annotations.clone()), &mut texts);
        let mut deps = b.mentioned(&texts);
        if let VisEntry::Facet(f) = entry {
            if let Selector::Model(m) = &f.select {
                deps.extend(b.model_deps(&m.model));
            }
        }
        deps.insert(base.to_string());
        nodes.push(Node {
            id,
            kind: NodeKind::View,
            path: format!("/visualizations/{i}"),
            snapshot: json!({
                "entry": entry_json,
                "layout": spec.view_layout,
                "annotations": annotations,
                "interactions": interactions,
            }),
            deps: deps.into_iter().collect(),
        });
    }

    let mut index = HashMap::new();
    for (i, n) in nodes.iter().enumerate() {
        if index.insert(n.id.clone(), i).is_some() {
            return Err(EngineError::Spec(SpecError::Schema {
                path: n.path.clone(),
                message: format!("name `{}` is used by more than one operation", n.id),
            }));
        }
    }
    let mut g = DiGraph::<usize, ()>::new();
    let ix: Vec<_> = (0..nodes.len()).map(|i| g.add_node(i)).collect();
    for (i, n) in nodes.iter().enumerate() {
        for d in &n.deps {
            let &j = index.get(d).ok_or_else(|| {
                EngineError::Spec(SpecError::Schema {
                    path: n.path.clone(),
                    message: format!("unknown model `{d}`"),
                })
            })?;
            g.add_edge(ix[j], ix[i], ());
        }
    }
    // Kahn's algorithm, taking the earliest-declared ready node first so the
    // order is stable under unrelated edits.
    let mut indegree: Vec<usize> = ix.iter().map(|&n| g.neighbors_directed(n, Direction::Incoming).count()).collect();
    let mut ready: BinaryHeap<Reverse<usize>> = (0..nodes.len()).filter(|&i| indegree[i] == 0).map(Reverse).collect();
    let mut order = Vec::with_capacity(nodes.len());
    while let Some(Reverse(i)) = ready.pop() {
        order.push(ix[i]);
        for m in g.neighbors_directed(ix[i], Direction::Outgoing) {
            let j = g[m];
            indegree[j] -= 1;
            if indegree[j] == 0 {
                ready.push(Reverse(j));
            }
        }
    }
    if order.len() < nodes.len() {
        let cycle = tarjan_scc(&g)
            .into_iter()
            .find(|c| c.len() > 1)
            .map(|c| {
                let mut ids: Vec<String> = c.iter().map(|&n| nodes[g[n]].id.clone()).collect();
                ids.sort();
                ids.push(ids[0].clone());
                ids
            })
            .unwrap_or_default();
        return Err(EngineError::CycleDetected { cycle });
    }
    let mut slots: Vec<Option<Node>> = nodes.into_iter().map(Some).collect();
    let nodes: Vec<Node> = order.into_iter().map(|n| slots[g[n]].take().expect("each node once")).collect();
    let index = nodes.iter().enumerate().map(|(i, n)| (n.id.clone(), i)).collect();
    Ok(DepGraph { nodes, index })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spec::parse_pipeline;

    #[test]
    fn token_mentions() {
        assert!(mentions("PC.0", "PC.0"));
        assert!(mentions("Clusters == 1", "Clusters"));
        assert!(!mentions("SubClusters", "Clusters"));
        assert!(!mentions("PC.01", "PC.0"));
    }

    #[test]
    fn figure_two_edges() {
        let spec = parse_pipeline(include_str!("../../../../specs/baby_fig2.json")).unwrap();
        let g = build_graph(&spec).unwrap();
        assert_eq!(g.len(), 5);
        let deps = |id: &str| g.node(id).unwrap().deps.clone();
        assert_eq!(deps("view0"), vec!["Clusters", "PC", "load"]);
        assert_eq!(deps("view1"), vec!["Clusters", "load"]);
        let touched = g.closure(&BTreeSet::from(["Clusters".to_string()]));
        assert_eq!(touched, BTreeSet::from(["Clusters".into(), "view0".into(), "view1".into()]));
    }

    #[test]
    fn cycles_are_rejected() {
        let spec = parse_pipeline(
            r#"{"data": {"source": "x.csv", "transform": [{"derive": {"x": "x + 1"}}]}, "visualizations": []}"#,
        )
        .unwrap();
        assert!(matches!(build_graph(&spec), Err(EngineError::CycleDetected { .. })));
        let spec = parse_pipeline(
            r#"{"data": {"source": "x.csv"},
                "analyses": {"A": {"algorithm": "KMeans", "features": ["B"]}, "B": {"algorithm": "KMeans", "features": ["A"]}}}"#,
        )
        .unwrap();
        let Err(EngineError::CycleDetected { cycle }) = build_graph(&spec) else { panic!() };
        assert_eq!(cycle, vec!["A", "B", "A"]);
    }

    #[test]
    fn no_analyses_means_load_then_views() {
        let spec = parse_pipeline(r#"{"data": {"source": "x.csv"}, "visualizations": [{"mark": "circle", "x": "a", "y": "b"}]}"#)
            .unwrap();
        let g = build_graph(&spec).unwrap();
        assert_eq!(g.order(), vec!["load", "view0"]);
        assert_eq!(g.edges(), vec![("load".to_string(), "view0".to_string())]);
    }
}
