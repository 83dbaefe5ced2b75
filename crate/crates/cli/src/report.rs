//! Pieces shared by the JSON reports.
//!
//! Wall-clock measurements always live under a key named `timing`, so two runs
//! can be compared byte-for-byte after [`strip_timing`].

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};
use spcafs::data::Dataset;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetInfo {
    pub provenance: String,
    pub n: usize,
    pub d: usize,
    pub classes: Option<usize>,
}

impl DatasetInfo {
    pub fn of(ds: &Dataset) -> Self {
        Self {
            provenance: ds.provenance.clone(),
            n: ds.x.n_samples(),
            d: ds.x.n_features(),
            classes: ds.labels.as_ref().map(|l| l.n_distinct()),
        }
    }
}

/// First 16 hex digits of the SHA-256 of the value's JSON encoding.
pub fn config_hash<T: Serialize>(value: &T) -> String {
    let json = serde_json::to_vec(value).expect("config values serialize");
    hex::encode(&Sha256::digest(&json)[..8])
}

/// Removes every `timing` entry, recursively.
pub fn strip_timing(value: &mut Value) {
    match value {
        Value::Object(map) => {
            map.remove("timing");
            map.values_mut().for_each(strip_timing);
        }
        Value::Array(items) => items.iter_mut().for_each(strip_timing),
        _ => {}
    }
}

pub fn to_json_pretty<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("reports serialize");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn strip_removes_nested_timing() {
        let mut v = json!({"a": 1, "timing": {"s": 1.0}, "cells": [{"timing": 2, "b": 3}]});
        strip_timing(&mut v);
        assert_eq!(v, json!({"a": 1, "cells": [{"b": 3}]}));
    }

    #[test]
    fn hash_is_stable_and_sensitive() {
        let a = config_hash(&json!({"gamma": 1.0}));
        assert_eq!(a.len(), 16);
        assert_eq!(a, config_hash(&json!({"gamma": 1.0})));
        assert_ne!(a, config_hash(&json!({"gamma": 2.0})));
    }
}
