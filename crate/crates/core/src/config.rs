//! Flat `key = value` configuration files.
//!
//! Blank lines and `#` comments are ignored. A key given twice keeps the
//! last value, which is also how command-line overrides are layered on top
//! of a file.

use std::fmt::Display;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::synthetic::SyntheticConfig;
use crate::training::TrainConfig;

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct KeyValues {
    entries: Vec<(String, String)>,
}

impl KeyValues {
    pub fn new() -> Self {
        KeyValues::default()
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut kv = KeyValues::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::parse(i + 1, format!("expected `key = value`, found `{line}`")))?;
            let k = k.trim();
            if k.is_empty() || k.contains(char::is_whitespace) {
                return Err(Error::parse(i + 1, format!("invalid key `{k}`")));
            }
            kv.set(k, v.trim());
        }
        Ok(kv)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        KeyValues::parse(&text)
    }

    pub fn set(&mut self, key: &str, value: impl Into<String>) {
        let value = value.into();
        match self.entries.iter_mut().find(|(k, _)| k == key) {
            Some(slot) => slot.1 = value,
            None => self.entries.push((key.to_string(), value)),
        }
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    /// Layers `other` on top of `self`.
    pub fn merge(&mut self, other: &KeyValues) {
        for (k, v) in &other.entries {
            self.set(k, v.clone());
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|(k, _)| k.as_str())
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn to_text(&self) -> String {
        self.entries.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }
}

pub(crate) fn parse_value<T: FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: Display,
{
    value
        .trim()
        .parse()
        .map_err(|e| Error::invalid(format!("invalid value `{value}` for `{key}`: {e}")))
}

pub(crate) fn parse_list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>>
where
    T::Err: Display,
{
    value.split(',').map(|v| parse_value(key, v)).collect()
}

/// Something configurable from flat key-value pairs.
pub trait Configurable {
    /// Applies one setting. Returns `Ok(false)` if the key is not one of
    /// this type's keys.
    fn set_key(&mut self, key: &str, value: &str) -> Result<bool>;

    /// Current settings as key-value pairs (the same keys `set_key` accepts).
    fn to_key_values(&self) -> KeyValues;

    /// Applies every recognized key of `kv`; unknown keys are left to other
    /// consumers.
    fn apply(&mut self, kv: &KeyValues) -> Result<()> {
        for (k, v) in kv.iter() {
            self.set_key(k, v)?;
        }
        Ok(())
    }
}

/// Fails on keys that none of `consumers` recognizes.
pub fn check_known_keys(kv: &KeyValues, consumers: &[&dyn Fn(&str) -> bool]) -> Result<()> {
    for k in kv.keys() {
        if !consumers.iter().any(|c| c(k)) {
            return Err(Error::invalid(format!("unknown configuration key `{k}`")));
        }
    }
    Ok(())
}

pub const TRAIN_KEYS: &[&str] = &[
    "hidden_sizes",
    "hidden_activation",
    "feature_activation",
    "tau",
    "cost",
    "pairing",
    "epochs",
    "batch_size",
    "pairs_per_query",
    "seed",
    "lr",
    "beta1",
    "beta2",
    "epsilon",
    "early_stop_tol",
    "patience",
];

impl Configurable for TrainConfig {
    fn set_key(&mut self, key: &str, value: &str) -> Result<bool> {
        match key {
            "hidden_sizes" => self.hidden_sizes = parse_list(key, value)?,
            "hidden_activation" => self.hidden_activation = parse_value(key, value)?,
            "feature_activation" => self.feature_activation = parse_value(key, value)?,
            "tau" => self.tau = parse_value(key, value)?,
            "cost" => self.cost = parse_value(key, value)?,
            "pairing" => self.pairing = parse_value(key, value)?,
            "epochs" => self.epochs = parse_value(key, value)?,
            "batch_size" => self.batch_size = parse_value(key, value)?,
            "pairs_per_query" => {
                self.pairs_per_query = match value {
                    "all" => None,
                    v => Some(parse_value(key, v)?),
                }
            }
            "seed" => self.seed = parse_value(key, value)?,
            "lr" => self.adam.lr = parse_value(key, value)?,
            "beta1" => self.adam.beta1 = parse_value(key, value)?,
            "beta2" => self.adam.beta2 = parse_value(key, value)?,
            "epsilon" => self.adam.epsilon = parse_value(key, value)?,
            "early_stop_tol" => {
                self.early_stop_tol = match value {
                    "none" | "off" => None,
                    v => Some(parse_value(key, v)?),
                }
            }
            "patience" => self.patience = parse_value(key, value)?,
            _ => return Ok(false),
        }
        Ok(true)
    }

    fn to_key_values(&self) -> KeyValues {
        let mut kv = KeyValues::new();
        let sizes: Vec<String> = self.hidden_sizes.iter().map(ToString::to_string).collect();
        kv.set("hidden_sizes", sizes.join(","));
        kv.set("hidden_activation", self.hidden_activation.to_string());
        kv.set("feature_activation", self.feature_activation.to_string());
        kv.set("tau", self.tau.to_string());
        kv.set("cost", self.cost.to_string());
        kv.set("pairing", self.pairing.to_string());
        kv.set("epochs", self.epochs.to_string());
        kv.set("batch_size", self.batch_size.to_string());
        kv.set(
            "pairs_per_query",
            self.pairs_per_query.map_or("all".to_string(), |n| n.to_string()),
        );
        kv.set("seed", self.seed.to_string());
        kv.set("lr", self.adam.lr.to_string());
        kv.set("beta1", self.adam.beta1.to_string());
        kv.set("beta2", self.adam.beta2.to_string());
        kv.set("epsilon", self.adam.epsilon.to_string());
        kv.set(
            "early_stop_tol",
            self.early_stop_tol.map_or("none".to_string(), |t| t.to_string()),
        );
        kv.set("patience", self.patience.to_string());
        kv
    }
}

pub const SYNTHETIC_KEYS: &[&str] = &[
    "n_classes",
    "n_features",
    "train_size",
    "test_size",
    "mean_min",
    "mean_max",
    "std_min",
    "std_max",
    "noise_sigma",
    "seed",
];

impl Configurable for SyntheticConfig {
    fn set_key(&mut self, key: &str, value: &str) -> Result<bool> {
        match key {
            "n_classes" => self.n_classes = parse_value(key, value)?,
            "n_features" => self.n_features = parse_value(key, value)?,
            "train_size" => self.train_size = parse_value(key, value)?,
            "test_size" => self.test_size = parse_value(key, value)?,
            "mean_min" => self.mean_range.0 = parse_value(key, value)?,
            "mean_max" => self.mean_range.1 = parse_value(key, value)?,
            "std_min" => self.std_range.0 = parse_value(key, value)?,
            "std_max" => self.std_range.1 = parse_value(key, value)?,
            "noise_sigma" => self.noise_sigma = parse_value(key, value)?,
            "seed" => self.seed = parse_value(key, value)?,
            _ => return Ok(false),
        }
        Ok(true)
    }

    fn to_key_values(&self) -> KeyValues {
        let mut kv = KeyValues::new();
        kv.set("n_classes", self.n_classes.to_string());
        kv.set("n_features", self.n_features.to_string());
        kv.set("train_size", self.train_size.to_string());
        kv.set("test_size", self.test_size.to_string());
        kv.set("mean_min", self.mean_range.0.to_string());
        kv.set("mean_max", self.mean_range.1.to_string());
        kv.set("std_min", self.std_range.0.to_string());
        kv.set("std_max", self.std_range.1.to_string());
        kv.set("noise_sigma", self.noise_sigma.to_string());
        kv.set("seed", self.seed.to_string());
        kv
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::training::{Cost, Pairing};

    #[test]
    fn parses_comments_and_overrides() {
        let kv = KeyValues::parse("# header\nepochs = 5\n\nlr=0.01 # inline\nepochs = 7\n").unwrap();
        assert_eq!(kv.get("epochs"), Some("7"));
        assert_eq!(kv.get("lr"), Some("0.01"));
        assert_eq!(kv.keys().count(), 2);
    }

    #[test]
    fn rejects_malformed_lines() {
        match KeyValues::parse("epochs = 5\njust words\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
        assert!(KeyValues::parse("two words = 1\n").is_err());
    }

    #[test]
    fn train_config_round_trip() {
        let mut cfg = TrainConfig::default();
        let kv = KeyValues::parse(
            "hidden_sizes = 70,5\ncost = squared\npairing = all_different\npairs_per_query = all\nearly_stop_tol = none\nlr = 0.005\n",
        )
        .unwrap();
        cfg.apply(&kv).unwrap();
        assert_eq!(cfg.hidden_sizes, vec![70, 5]);
        assert_eq!(cfg.cost, Cost::Squared);
        assert_eq!(cfg.pairing, Pairing::AllDifferent);
        assert_eq!(cfg.pairs_per_query, None);
        assert_eq!(cfg.early_stop_tol, None);
        assert_eq!(cfg.adam.lr, 0.005);
        let mut again = TrainConfig::default();
        again.apply(&cfg.to_key_values()).unwrap();
        assert_eq!(again, cfg);
    }

    #[test]
    fn bad_values_and_unknown_keys() {
        let mut cfg = TrainConfig::default();
        assert!(cfg.set_key("epochs", "many").is_err());
        assert!(!cfg.set_key("colour", "red").unwrap());
        let kv = KeyValues::parse("epochs = 3\ncolour = red\n").unwrap();
        let is_train = |k: &str| TRAIN_KEYS.contains(&k);
        assert!(check_known_keys(&kv, &[&is_train]).is_err());
    }

    #[test]
    fn synthetic_config_round_trip() {
        let mut cfg = SyntheticConfig::default();
        cfg.apply(&KeyValues::parse("n_classes = 3\nnoise_sigma = 0.25\nstd_min = 10").unwrap())
            .unwrap();
        assert_eq!((cfg.n_classes, cfg.noise_sigma, cfg.std_range.0), (3, 0.25, 10.0));
        let mut again = SyntheticConfig::default();
        again.apply(&cfg.to_key_values()).unwrap();
        assert_eq!(again, cfg);
    }

    #[test]
    fn key_lists_match_setters() {
        for &k in TRAIN_KEYS {
            let v = TrainConfig::default().to_key_values().get(k).unwrap().to_string();
            assert!(TrainConfig::default().set_key(k, &v).unwrap(), "{k}");
        }
        for &k in SYNTHETIC_KEYS {
            let v = SyntheticConfig::default().to_key_values().get(k).unwrap().to_string();
            assert!(SyntheticConfig::default().set_key(k, &v).unwrap(), "{k}");
        }
    }
}
