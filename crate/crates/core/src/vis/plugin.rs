//! Chart plugins: custom mark types rendered by client-side code.
//!
//! A view whose mark type matches a plugin's condition skips mark
//! compilation. The plugin receives the post-transform rows and the view
//! setting (viewport and encodings) instead.

use std::collections::BTreeMap;

use serde_json::{json, Map, Value as Json};

use crate::frame::DataFrame;
use crate::spec::{Channel, ViewSpec};

use super::{Viewport, VisError};

#[derive(Debug, Clone, PartialEq)]
pub struct Plugin {
    pub key: String,
    /// Mark type that selects this plugin.
    pub condition: String,
    pub required: Vec<Channel>,
}

#[derive(Debug, Clone)]
pub struct PluginRegistry {
    plugins: BTreeMap<String, Plugin>,
}

impl Default for PluginRegistry {
    /// The registry with the bundled `area` chart.
    fn default() -> Self {
        let mut r = Self::empty();
        r.register("area", "area", &[Channel::X, Channel::Y]).expect("fresh registry");
        r
    }
}

impl PluginRegistry {
    pub fn empty() -> Self {
        Self {
            plugins: BTreeMap::new(),
        }
    }

    pub fn register(&mut self, key: &str, condition: &str, required: &[Channel]) -> Result<&Plugin, VisError> {
        if self.plugins.contains_key(key) || self.for_mark(condition).is_some() {
            return Err(VisError::DuplicatePlugin(key.to_string()));
        }
        let plugin = Plugin {
            key: key.to_string(),
            condition: condition.to_string(),
            required: required.to_vec(),
        };
        Ok(self.plugins.entry(key.to_string()).or_insert(plugin))
    }

    pub fn for_mark(&self, mark: &str) -> Option<&Plugin> {
        self.plugins.values().find(|p| p.condition == mark)
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.plugins.keys().map(String::as_str)
    }

    /// Checks the contract and builds the payload handed to the plugin.
    pub fn dispatch(&self, view: &ViewSpec, id: &str, data: &DataFrame, viewport: Viewport) -> Result<Json, VisError> {
        let plugin = self.for_mark(&view.mark).ok_or_else(|| VisError::IncompatibleChannel {
            view: id.to_string(),
            message: format!("no plugin is registered for mark type `{}`", view.mark),
        })?;
        for ch in &plugin.required {
            if view.encoding(*ch).is_none() {
                return Err(VisError::MissingRequiredChannel {
                    view: id.to_string(),
                    mark: view.mark.clone(),
                    channel: ch.name().to_string(),
                });
            }
        }
        let encodings: Map<String, Json> = view
            .encodings()
            .map(|(ch, e)| (ch.name().to_string(), serde_json::to_value(e).expect("encoding serializes")))
            .collect();
        Ok(json!({
            "plugin": plugin.key,
            "data": Json::Object(data.to_json_columns()),
            "view": {
                "viewport": viewport,
                "mark_type": view.mark,
                "encodings": encodings,
            },
        }))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn keys_and_conditions_are_unique() {
        let mut r = PluginRegistry::default();
        assert!(r.for_mark("area").is_some());
        assert_eq!(r.register("area", "stream", &[]), Err(VisError::DuplicatePlugin("area".into())));
        assert!(matches!(r.register("area2", "area", &[]), Err(VisError::DuplicatePlugin(_))));
        r.register("sankey", "sankey", &[Channel::X]).unwrap();
        assert_eq!(r.keys().collect::<Vec<_>>(), vec!["area", "sankey"]);
    }
}
