//! Stream bundles: per-port message assignments over discrete rounds.
//!
//! The JSON file format is
//!
//! ```json
//! {
//!   "ports": {"frontUS": "UltraSonic", "gotCoffee": "bool"},
//!   "rounds": [{"frontUS": "tooClose"}, {}, {"gotCoffee": true}]
//! }
//! ```
//!
//! A key absent from a round means no message on that channel. Enum values
//! are strings, booleans and integers use their native JSON forms.

use crate::model::{Component, PortId, ResolvedModel, Value, ValueType};
use std::collections::BTreeMap;
use std::fmt;

/// A finite prefix of the streams on a set of named ports. Rounds are
/// indexed contiguously from 0; each round carries at most one message per
/// port.
#[derive(Debug, Clone, PartialEq)]
pub struct StreamBundle {
    pub ports: Vec<(String, ValueType)>,
    pub rounds: Vec<BTreeMap<String, Value>>,
}

#[derive(Debug, Clone, thiserror::Error)]
pub enum BundleError {
    #[error("malformed bundle: {0}")]
    Malformed(String),
    #[error("unknown type `{0}` in bundle port declaration")]
    UnknownType(String),
    #[error("port `{0}` is not an in-port of the simulated component")]
    UnknownPort(String),
    #[error("port `{port}`: value {value} is not in the domain of {ty}")]
    BadValue {
        port: String,
        value: String,
        ty: String,
    },
    #[error("port `{port}` declared as {declared} but the component declares {actual}")]
    TypeMismatch {
        port: String,
        declared: String,
        actual: String,
    },
}

impl StreamBundle {
    pub fn empty() -> Self {
        StreamBundle {
            ports: Vec::new(),
            rounds: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.rounds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rounds.is_empty()
    }

    /// Parses the JSON bundle format. Type names are resolved against the
    /// model's enums; `bool` and `int(lo..hi)` are built in.
    pub fn from_json(model: &ResolvedModel, text: &str) -> Result<StreamBundle, BundleError> {
        let json: serde_json::Value =
            serde_json::from_str(text).map_err(|e| BundleError::Malformed(e.to_string()))?;
        let obj = json
            .as_object()
            .ok_or_else(|| BundleError::Malformed("expected a JSON object".into()))?;
        let ports_json = obj
            .get("ports")
            .and_then(|p| p.as_object())
            .ok_or_else(|| BundleError::Malformed("missing `ports` object".into()))?;

        let mut ports = Vec::new();
        for (name, ty_json) in ports_json {
            let ty_name = ty_json
                .as_str()
                .ok_or_else(|| BundleError::Malformed(format!("port `{name}`: type must be a string")))?;
            let ty = parse_type_name(model, ty_name)
                .ok_or_else(|| BundleError::UnknownType(ty_name.to_string()))?;
            ports.push((name.clone(), ty));
        }

        let rounds_json = obj
            .get("rounds")
            .and_then(|r| r.as_array())
            .ok_or_else(|| BundleError::Malformed("missing `rounds` array".into()))?;
        let mut rounds = Vec::new();
        for (i, round) in rounds_json.iter().enumerate() {
            let entries = round.as_object().ok_or_else(|| {
                BundleError::Malformed(format!("round {i} is not a JSON object"))
            })?;
            let mut out = BTreeMap::new();
            for (port, value) in entries {
                let Some((_, ty)) = ports.iter().find(|(n, _)| n == port) else {
                    return Err(BundleError::Malformed(format!(
                        "round {i} mentions undeclared port `{port}`"
                    )));
                };
                let Some(v) = model.value_from_json(value, *ty) else {
                    return Err(BundleError::BadValue {
                        port: port.clone(),
                        value: value.to_string(),
                        ty: model.type_name(*ty),
                    });
                };
                out.insert(port.clone(), v);
            }
            rounds.push(out);
        }
        Ok(StreamBundle { ports, rounds })
    }

    pub fn to_json(&self, model: &ResolvedModel) -> serde_json::Value {
        let mut ports = serde_json::Map::new();
        for (name, ty) in &self.ports {
            ports.insert(
                name.clone(),
                serde_json::Value::String(model.type_name(*ty)),
            );
        }
        let rounds: Vec<serde_json::Value> = self
            .rounds
            .iter()
            .map(|round| {
                let mut obj = serde_json::Map::new();
                for (port, value) in round {
                    obj.insert(port.clone(), model.value_json(*value));
                }
                serde_json::Value::Object(obj)
            })
            .collect();
        let mut root = serde_json::Map::new();
        root.insert("ports".into(), serde_json::Value::Object(ports));
        root.insert("rounds".into(), serde_json::Value::Array(rounds));
        serde_json::Value::Object(root)
    }

    /// Validates this bundle against the in-ports of `comp` and rebinds the
    /// rounds to port ids. Ports of `comp` missing from the bundle are
    /// simply always-absent channels.
    pub fn bind(
        &self,
        model: &ResolvedModel,
        comp: &Component,
    ) -> Result<Vec<BTreeMap<PortId, Value>>, BundleError> {
        let mut port_ids: BTreeMap<&str, PortId> = BTreeMap::new();
        for (name, ty) in &self.ports {
            let Some(id) = comp.port_by_name(name) else {
                return Err(BundleError::UnknownPort(name.clone()));
            };
            let port = comp.port(id);
            if port.direction != crate::model::Direction::In {
                return Err(BundleError::UnknownPort(name.clone()));
            }
            if port.ty != *ty {
                return Err(BundleError::TypeMismatch {
                    port: name.clone(),
                    declared: model.type_name(*ty),
                    actual: model.type_name(port.ty),
                });
            }
            port_ids.insert(name.as_str(), id);
        }
        Ok(self
            .rounds
            .iter()
            .map(|round| {
                round
                    .iter()
                    .map(|(name, v)| (port_ids[name.as_str()], *v))
                    .collect()
            })
            .collect())
    }
}

impl fmt::Display for StreamBundle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "bundle({} ports, {} rounds)",
            self.ports.len(),
            self.rounds.len()
        )
    }
}

fn parse_type_name(model: &ResolvedModel, name: &str) -> Option<ValueType> {
    if name == "bool" {
        return Some(ValueType::Bool);
    }
    if let Some(rest) = name.strip_prefix("int(").and_then(|r| r.strip_suffix(')')) {
        let (lo, hi) = rest.split_once("..")?;
        let (lo, hi) = (lo.trim().parse().ok()?, hi.trim().parse().ok()?);
        if lo > hi {
            return None;
        }
        return Some(ValueType::Int { lo, hi });
    }
    model
        .enums
        .iter()
        .position(|e| e.name == name)
        .map(|i| ValueType::Enum(crate::model::EnumId(i as u32)))
}
