//! Nested key-value config files.
//!
//! Syntax: `key = value` lines grouped under `[section]` headers; `#`
//! starts a comment; `include = PATH` (top level or inside a section)
//! splices another file relative to the including file. Keys are addressed
//! as `section.key`; repeated keys accumulate and the last one wins for
//! scalar lookups.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};

#[derive(Clone, Debug, Default)]
pub struct Config {
    /// (dotted key, value) pairs in file order, includes spliced in place.
    pairs: Vec<(String, String)>,
}

impl Config {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let mut cfg = Config::default();
        let mut seen = BTreeSet::new();
        load_into(path.as_ref(), &mut cfg, &mut seen)?;
        Ok(cfg)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Config::default();
        parse_into(text, None, &mut cfg, &mut BTreeSet::new())?;
        Ok(cfg)
    }

    pub fn pairs(&self) -> &[(String, String)] {
        &self.pairs
    }

    pub fn set(&mut self, key: &str, value: impl Into<String>) {
        self.pairs.push((key.to_string(), value.into()));
    }

    /// Last value for a key, if any.
    pub fn get(&self, key: &str) -> Option<&str> {
        self.pairs
            .iter()
            .rev()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    /// Every value bound to a key, in file order.
    pub fn get_all(&self, key: &str) -> Vec<&str> {
        self.pairs
            .iter()
            .filter(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
            .collect()
    }

    pub fn require(&self, key: &str) -> Result<&str> {
        self.get(key)
            .with_context(|| format!("config key `{key}` is missing"))
    }

    pub fn get_f64(&self, key: &str) -> Result<Option<f64>> {
        self.get(key)
            .map(|v| v.parse().with_context(|| format!("config key `{key}`: bad float `{v}`")))
            .transpose()
    }

    pub fn get_u64(&self, key: &str) -> Result<Option<u64>> {
        self.get(key)
            .map(|v| v.parse().with_context(|| format!("config key `{key}`: bad integer `{v}`")))
            .transpose()
    }

    pub fn get_usize(&self, key: &str) -> Result<Option<usize>> {
        self.get(key)
            .map(|v| v.parse().with_context(|| format!("config key `{key}`: bad integer `{v}`")))
            .transpose()
    }

    pub fn get_i8(&self, key: &str) -> Result<Option<i8>> {
        self.get(key)
            .map(|v| v.parse().with_context(|| format!("config key `{key}`: bad level `{v}`")))
            .transpose()
    }

    pub fn get_bool(&self, key: &str) -> Result<Option<bool>> {
        match self.get(key) {
            None => Ok(None),
            Some("true") | Some("yes") | Some("1") => Ok(Some(true)),
            Some("false") | Some("no") | Some("0") => Ok(Some(false)),
            Some(v) => bail!("config key `{key}`: bad bool `{v}`"),
        }
    }

    pub fn f64_or(&self, key: &str, default: f64) -> Result<f64> {
        Ok(self.get_f64(key)?.unwrap_or(default))
    }

    pub fn u64_or(&self, key: &str, default: u64) -> Result<u64> {
        Ok(self.get_u64(key)?.unwrap_or(default))
    }

    pub fn usize_or(&self, key: &str, default: usize) -> Result<usize> {
        Ok(self.get_usize(key)?.unwrap_or(default))
    }

    pub fn i8_or(&self, key: &str, default: i8) -> Result<i8> {
        Ok(self.get_i8(key)?.unwrap_or(default))
    }

    pub fn bool_or(&self, key: &str, default: bool) -> Result<bool> {
        Ok(self.get_bool(key)?.unwrap_or(default))
    }

    /// Seed list: `seeds = 0..50` (half-open range) or `seeds = 1,5,9`.
    pub fn get_seeds(&self, key: &str) -> Result<Option<Vec<u64>>> {
        let Some(v) = self.get(key) else {
            return Ok(None);
        };
        if let Some((lo, hi)) = v.split_once("..") {
            let lo: u64 = lo.trim().parse().with_context(|| format!("bad seed range `{v}`"))?;
            let hi: u64 = hi.trim().parse().with_context(|| format!("bad seed range `{v}`"))?;
            if hi < lo {
                bail!("config key `{key}`: empty seed range `{v}`");
            }
            return Ok(Some((lo..hi).collect()));
        }
        let list = v
            .split(',')
            .map(|s| s.trim().parse().with_context(|| format!("bad seed `{s}`")))
            .collect::<Result<Vec<u64>>>()?;
        Ok(Some(list))
    }

    /// Render back to config syntax (one flat listing with dotted keys
    /// grouped into sections).
    pub fn render(&self) -> String {
        let mut out = String::new();
        let mut section = "";
        for (k, v) in &self.pairs {
            let (sec, key) = k.rsplit_once('.').unwrap_or(("", k.as_str()));
            if sec != section {
                if !out.is_empty() {
                    out.push('\n');
                }
                let _ = writeln!(out, "[{sec}]");
                section = sec;
            }
            let _ = writeln!(out, "{key} = {v}");
        }
        out
    }
}

fn load_into(path: &Path, cfg: &mut Config, seen: &mut BTreeSet<PathBuf>) -> Result<()> {
    let canon = path
        .canonicalize()
        .with_context(|| format!("cannot open config `{}`", path.display()))?;
    if !seen.insert(canon.clone()) {
        bail!("config include cycle through `{}`", path.display());
    }
    let text = std::fs::read_to_string(&canon)
        .with_context(|| format!("cannot read config `{}`", path.display()))?;
    parse_into(&text, canon.parent(), cfg, seen)?;
    seen.remove(&canon);
    Ok(())
}

fn parse_into(
    text: &str,
    dir: Option<&Path>,
    cfg: &mut Config,
    seen: &mut BTreeSet<PathBuf>,
) -> Result<()> {
    let mut section = String::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
            section = name.trim().to_string();
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            bail!("config line {}: expected `key = value`, got `{raw}`", i + 1);
        };
        let (key, value) = (key.trim(), value.trim());
        if key == "include" {
            let dir = dir.with_context(|| {
                format!("config line {}: include is only valid in a file", i + 1)
            })?;
            load_into(&dir.join(value), cfg, seen)?;
            continue;
        }
        let full = if section.is_empty() {
            key.to_string()
        } else {
            format!("{section}.{key}")
        };
        cfg.pairs.push((full, value.to_string()));
    }
    Ok(())
}
