//! Flat `key = value` configuration files with `[section]` headers.
//!
//! Keys inside a section are addressed as `section.key`, both in lookups and
//! in command-line overrides (`--train.learning_rate 1e-3`). Top-level keys
//! have no prefix. `#` starts a comment line. Lists are comma separated.
//!
//! Precedence, highest first: command-line overrides, the config file, the
//! built-in defaults of the experiment.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Display;
use std::path::Path;
use std::str::FromStr;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::CliError;

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Document {
    entries: BTreeMap<String, String>,
}

impl Document {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut doc = Document::default();
        let mut section = String::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some(rest) = line.strip_prefix('[') {
                let name = rest
                    .strip_suffix(']')
                    .map(str::trim)
                    .filter(|s| valid_name(s))
                    .ok_or_else(|| CliError::Config(format!("line {}: bad section header `{line}`", n + 1)))?;
                section = name.to_string();
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("line {}: expected `key = value`, got `{line}`", n + 1)))?;
            let k = k.trim();
            if !valid_name(k) {
                return Err(CliError::Config(format!("line {}: bad key `{k}`", n + 1)));
            }
            let key = if section.is_empty() {
                k.to_string()
            } else {
                format!("{section}.{k}")
            };
            if doc.entries.insert(key.clone(), v.trim().to_string()).is_some() {
                return Err(CliError::Config(format!("line {}: duplicate key `{key}`", n + 1)));
            }
        }
        Ok(doc)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Core(blab_core::Error::io(path, e)))?;
        Self::parse(&text)
    }

    pub fn set(&mut self, key: impl Into<String>, value: impl Into<String>) {
        self.entries.insert(key.into(), value.into());
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    /// Applies `--key value` pairs on top of the file values.
    pub fn apply_overrides(&mut self, pairs: &[(String, String)]) {
        for (k, v) in pairs {
            self.set(k.clone(), v.clone());
        }
    }

    /// Top-level keys first, then one block per section, keys sorted.
    pub fn render(&self) -> String {
        let mut out = String::new();
        let mut sections: BTreeMap<&str, Vec<(&str, &str)>> = BTreeMap::new();
        for (k, v) in &self.entries {
            match k.split_once('.') {
                Some((s, rest)) => sections.entry(s).or_default().push((rest, v)),
                None => out.push_str(&format!("{k} = {v}\n")),
            }
        }
        for (s, kvs) in sections {
            out.push_str(&format!("\n[{s}]\n"));
            for (k, v) in kvs {
                out.push_str(&format!("{k} = {v}\n"));
            }
        }
        out
    }

    pub fn reader(&self) -> Reader<'_> {
        Reader {
            doc: self,
            used: BTreeSet::new(),
        }
    }
}

fn valid_name(s: &str) -> bool {
    !s.is_empty() && s.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// Splits trailing `--key value` arguments into pairs.
pub fn parse_overrides(args: &[String]) -> Result<Vec<(String, String)>, CliError> {
    let mut out = Vec::new();
    let mut it = args.iter();
    while let Some(a) = it.next() {
        let key = a
            .strip_prefix("--")
            .filter(|k| !k.is_empty())
            .ok_or_else(|| CliError::Config(format!("expected `--key value`, got `{a}`")))?;
        let value = it
            .next()
            .ok_or_else(|| CliError::Config(format!("override `--{key}` has no value")))?;
        if !key.split('.').all(valid_name) || key.split('.').count() > 2 {
            return Err(CliError::Config(format!("bad override key `{key}`")));
        }
        out.push((key.to_string(), value.clone()));
    }
    Ok(out)
}

/// Typed access that remembers which keys were consumed, so leftovers can be
/// reported as unknown.
pub struct Reader<'a> {
    doc: &'a Document,
    used: BTreeSet<String>,
}

impl Reader<'_> {
    pub fn opt<T: FromStr>(&mut self, key: &str) -> Result<Option<T>, CliError>
    where
        T::Err: Display,
    {
        self.used.insert(key.to_string());
        match self.doc.get(key) {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|e| CliError::Config(format!("key `{key}`: cannot parse `{v}`: {e}"))),
        }
    }

    pub fn or<T: FromStr>(&mut self, key: &str, default: T) -> Result<T, CliError>
    where
        T::Err: Display,
    {
        Ok(self.opt(key)?.unwrap_or(default))
    }

    pub fn req<T: FromStr>(&mut self, key: &str) -> Result<T, CliError>
    where
        T::Err: Display,
    {
        self.opt(key)?
            .ok_or_else(|| CliError::Config(format!("missing key `{key}`")))
    }

    pub fn list<T: FromStr>(&mut self, key: &str) -> Result<Option<Vec<T>>, CliError>
    where
        T::Err: Display,
    {
        let Some(raw) = self.opt::<String>(key)? else {
            return Ok(None);
        };
        raw.split(',')
            .map(|p| {
                p.trim()
                    .parse()
                    .map_err(|e| CliError::Config(format!("key `{key}`: cannot parse `{p}`: {e}")))
            })
            .collect::<Result<Vec<T>, _>>()
            .map(Some)
    }

    pub fn req_list<T: FromStr>(&mut self, key: &str) -> Result<Vec<T>, CliError>
    where
        T::Err: Display,
    {
        self.list(key)?
            .ok_or_else(|| CliError::Config(format!("missing key `{key}`")))
    }

    /// Enum given by its snake_case serde name.
    pub fn named<T: DeserializeOwned>(&mut self, key: &str) -> Result<Option<T>, CliError> {
        let Some(raw) = self.opt::<String>(key)? else {
            return Ok(None);
        };
        serde_json::from_value(serde_json::Value::String(raw.clone()))
            .map(Some)
            .map_err(|_| CliError::Config(format!("key `{key}`: unknown value `{raw}`")))
    }

    pub fn finish(self) -> Result<(), CliError> {
        self.finish_matching(|_| true)
    }

    /// As [`Reader::finish`], checking only keys under `section.`.
    pub fn finish_section(self, section: &str) -> Result<(), CliError> {
        let prefix = format!("{section}.");
        self.finish_matching(|k| k.starts_with(&prefix))
    }

    fn finish_matching(self, check: impl Fn(&str) -> bool) -> Result<(), CliError> {
        match self
            .doc
            .entries
            .keys()
            .find(|k| check(k) && !self.used.contains(*k))
        {
            Some(k) => Err(CliError::Config(format!("unknown key `{k}`"))),
            None => Ok(()),
        }
    }
}

/// Counterpart of [`Reader`] for producing documents.
#[derive(Default)]
pub struct Writer {
    pub doc: Document,
}

impl Writer {
    pub fn num(&mut self, key: &str, v: f64) {
        // Debug formatting is the shortest string that parses back to `v`.
        self.doc.set(key, format!("{v:?}"));
    }

    pub fn int(&mut self, key: &str, v: impl Display) {
        self.doc.set(key, v.to_string());
    }

    pub fn text(&mut self, key: &str, v: impl Display) {
        self.doc.set(key, v.to_string());
    }

    pub fn nums(&mut self, key: &str, vs: &[f64]) {
        let parts: Vec<String> = vs.iter().map(|v| format!("{v:?}")).collect();
        self.doc.set(key, parts.join(","));
    }

    pub fn ints(&mut self, key: &str, vs: &[usize]) {
        let parts: Vec<String> = vs.iter().map(usize::to_string).collect();
        self.doc.set(key, parts.join(","));
    }

    pub fn named<T: Serialize>(&mut self, key: &str, v: &T) {
        let name = serde_json::to_value(v)
            .ok()
            .and_then(|j| j.as_str().map(str::to_string))
            .unwrap_or_default();
        self.doc.set(key, name);
    }
}
