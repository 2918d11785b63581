// SPDX-License-Identifier: Apache-2.0 OR MIT

//! `a.b.c=value` assignments applied to a JSON document before it is typed.

use serde_json::{Map, Value};

/// Values are read as JSON when they parse, as plain strings otherwise, so
/// `design.beta=6.3`, `controller.engage_loom=null` and `name=run-a` all work.
pub fn apply(doc: &mut Value, assignments: &[String]) -> Result<(), String> {
    for a in assignments {
        let (path, raw) = a
            .split_once('=')
            .ok_or_else(|| format!("override `{a}` is not of the form key.path=value"))?;
        let keys: Vec<&str> = path.split('.').collect();
        if keys.iter().any(|k| k.is_empty()) {
            return Err(format!("override `{a}` has an empty key"));
        }
        let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
        set(doc, &keys, value).map_err(|e| format!("override `{a}`: {e}"))?;
    }
    Ok(())
}

fn set(node: &mut Value, keys: &[&str], value: Value) -> Result<(), String> {
    let (head, rest) = keys.split_first().expect("non-empty path");
    match node {
        Value::Array(items) => {
            let i: usize = head.parse().map_err(|_| format!("`{head}` is not an array index"))?;
            let len = items.len();
            let slot = items.get_mut(i).ok_or_else(|| format!("index {i} out of range (length {len})"))?;
            if rest.is_empty() {
                *slot = value;
                Ok(())
            } else {
                set(slot, rest, value)
            }
        }
        Value::Object(map) => {
            if rest.is_empty() {
                map.insert(head.to_string(), value);
                Ok(())
            } else {
                let child = map.entry(head.to_string()).or_insert_with(|| Value::Object(Map::new()));
                if child.is_null() {
                    *child = Value::Object(Map::new());
                }
                set(child, rest, value)
            }
        }
        other => Err(format!("cannot set `{head}` inside {other}")),
    }
}
