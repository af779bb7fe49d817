//! Config files and `--set key=value` overrides on top of serde structs.

use std::path::Path;

use anyhow::{anyhow, bail, Context};
use serde::{de::DeserializeOwned, Serialize};
use serde_json::Value;

/// Parses JSON into `T`, rejecting keys that `T` does not know about.
pub fn from_json_str<T: Serialize + DeserializeOwned>(text: &str) -> anyhow::Result<T> {
    let raw: Value = serde_json::from_str(text)?;
    let parsed: T = serde_json::from_value(raw.clone())?;
    let canonical = serde_json::to_value(&parsed)?;
    let mut unknown = Vec::new();
    unknown_keys(&raw, &canonical, String::new(), &mut unknown);
    if !unknown.is_empty() {
        bail!("unknown config key(s): {}", unknown.join(", "));
    }
    Ok(parsed)
}

pub fn load<T: Serialize + DeserializeOwned>(path: &Path) -> anyhow::Result<T> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    from_json_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn unknown_keys(raw: &Value, canonical: &Value, prefix: String, out: &mut Vec<String>) {
    let (Value::Object(r), Value::Object(c)) = (raw, canonical) else {
        return;
    };
    for (k, v) in r {
        let path = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
        match c.get(k) {
            Some(cv) => unknown_keys(v, cv, path, out),
            None => out.push(path),
        }
    }
}

/// Applies `a.b.c=value` assignments. The value is read as JSON when it
/// parses, otherwise as a bare string.
pub fn apply_sets<T: Serialize + DeserializeOwned>(target: &T, sets: &[String]) -> anyhow::Result<T> {
    let mut value = serde_json::to_value(target)?;
    for assignment in sets {
        let (path, raw) = assignment
            .split_once('=')
            .ok_or_else(|| anyhow!("--set expects key=value, got {assignment:?}"))?;
        let new: Value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
        let mut slot = &mut value;
        for part in path.split('.') {
            slot = match slot {
                Value::Object(map) => map
                    .get_mut(part)
                    .ok_or_else(|| anyhow!("unknown config key {path:?}"))?,
                _ => bail!("{path:?} does not name a config field"),
            };
        }
        *slot = new;
    }
    serde_json::from_value(value).context("applying --set overrides")
}

#[cfg(test)]
mod tests {
    use super::*;
    use memsnn::experiment::TrialSpec;

    #[test]
    fn nested_set() {
        let spec = apply_sets(
            &TrialSpec::default(),
            &["network.tau_theta=5000".into(), "dataset=breast_cancer".into(), "g_mode=random".into()],
        )
        .unwrap();
        assert_eq!(spec.network.tau_theta, 5000.0);
        assert_eq!(spec.dataset, "breast_cancer");
        assert_eq!(spec.g_mode, memsnn::network::GMode::Random);
    }

    #[test]
    fn bad_sets() {
        let spec = TrialSpec::default();
        assert!(apply_sets(&spec, &["network.nope=1".into()]).is_err());
        assert!(apply_sets(&spec, &["epochs".into()]).is_err());
        assert!(apply_sets(&spec, &["epochs=-1".into()]).is_err());
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(from_json_str::<TrialSpec>(r#"{"seed": 3}"#).is_ok());
        let err = from_json_str::<TrialSpec>(r#"{"network": {"tau_thta": 3}}"#).unwrap_err();
        assert!(err.to_string().contains("network.tau_thta"));
        assert!(from_json_str::<TrialSpec>("{").is_err());
    }
}
