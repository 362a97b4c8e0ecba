//! The `modpK` / `file:path` mini-language for naming boxes.

use std::fs;

use anyhow::{bail, Context, Result};
use boxkit::boxes::BipartiteBox;
use boxkit::format::box_from_json;
use boxkit::wiring::ResourceSet;

pub enum BoxSpec {
    Modp(u64),
    File(String),
}

impl BoxSpec {
    /// Accepts `modpK`, `modp K` (two tokens joined by the caller) or `file:path`.
    pub fn parse(text: &str) -> Result<Self> {
        let text = text.trim();
        if let Some(path) = text.strip_prefix("file:") {
            if path.is_empty() {
                bail!("empty path in box spec {text:?}");
            }
            return Ok(BoxSpec::File(path.to_string()));
        }
        if let Some(rest) = text.strip_prefix("modp") {
            let p: u64 = rest
                .trim()
                .parse()
                .with_context(|| format!("box spec {text:?}: expected modpK with integer K"))?;
            return Ok(BoxSpec::Modp(p));
        }
        bail!("unknown box spec {text:?}; use modpK or file:path")
    }

    pub fn label(&self) -> String {
        match self {
            BoxSpec::Modp(p) => format!("modp{p}"),
            BoxSpec::File(path) => format!("file:{path}"),
        }
    }

    pub fn load(&self) -> Result<BipartiteBox> {
        match self {
            BoxSpec::Modp(p) => Ok(BipartiteBox::modp(*p)?),
            BoxSpec::File(path) => read_box(path),
        }
    }
}

pub fn read_box(path: &str) -> Result<BipartiteBox> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {path}"))?;
    box_from_json(&text).with_context(|| format!("parsing box file {path}"))
}

pub fn parse_resources(list: &str) -> Result<ResourceSet> {
    let specs = list
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(BoxSpec::parse)
        .collect::<Result<Vec<_>>>()?;
    resources_from(&specs)
}

pub fn resources_from(specs: &[BoxSpec]) -> Result<ResourceSet> {
    let boxes = specs.iter().map(BoxSpec::load).collect::<Result<Vec<_>>>()?;
    let labels = specs.iter().map(BoxSpec::label).collect();
    Ok(ResourceSet::with_labels(boxes, labels)?)
}

pub fn parse_list(text: &str, what: &str) -> Result<Vec<usize>> {
    text.split(',')
        .map(|s| s.trim().parse::<usize>().with_context(|| format!("{what}: {s:?} is not a nonnegative integer")))
        .collect()
}
