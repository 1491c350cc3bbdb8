//! On-disk document model: canonical JSON for designs, colourings and the
//! catalogue manifest, with atomic writes and sha256 digests.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use blockdesign::{BlockingSystem, Design, GroupedDesign};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct DesignDocument {
    pub format_version: u32,
    /// bibd | partial_bibd | gdd | td
    pub kind: String,
    pub lambda: u64,
    pub points: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub groups: Option<Vec<Vec<String>>>,
    pub blocks: Vec<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub blocking_systems: Option<BTreeMap<String, Vec<Vec<String>>>>,
    pub provenance: String,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct ColouringDocument {
    pub format_version: u32,
    pub c: u32,
    pub assignment: BTreeMap<String, u32>,
    pub provenance: String,
}

pub const KINDS: [&str; 4] = ["bibd", "partial_bibd", "gdd", "td"];

impl DesignDocument {
    /// Sort points, labels within blocks/groups/sets, and the block and
    /// group lists themselves, so equal designs serialize identically.
    pub fn canonicalize(&mut self) {
        self.points.sort();
        self.points.dedup();
        for b in self.blocks.iter_mut() {
            b.sort();
        }
        self.blocks.sort();
        if let Some(gs) = self.groups.as_mut() {
            for g in gs.iter_mut() {
                g.sort();
                g.dedup();
            }
            gs.sort();
        }
        if let Some(systems) = self.blocking_systems.as_mut() {
            for sets in systems.values_mut() {
                for s in sets.iter_mut() {
                    s.sort();
                    s.dedup();
                }
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.format_version != FORMAT_VERSION {
            bail!("unsupported format_version {}", self.format_version);
        }
        if !KINDS.contains(&self.kind.as_str()) {
            bail!("unknown kind '{}'", self.kind);
        }
        let points: BTreeSet<&String> = self.points.iter().collect();
        let check = |labels: &[String], what: &str| -> Result<()> {
            for l in labels {
                if !points.contains(l) {
                    bail!("{} uses unknown label '{}'", what, l);
                }
            }
            Ok(())
        };
        for b in &self.blocks {
            check(b, "a block")?;
        }
        for g in self.groups.iter().flatten() {
            check(g, "a group")?;
        }
        for (name, sets) in self.blocking_systems.iter().flatten() {
            for s in sets {
                check(s, &format!("blocking system '{}'", name))?;
            }
        }
        if matches!(self.kind.as_str(), "gdd" | "td") && self.groups.is_none() {
            bail!("kind '{}' requires groups", self.kind);
        }
        Ok(())
    }

    pub fn to_design(&self) -> Design {
        Design::new(self.points.iter().cloned(), self.blocks.clone(), self.lambda)
    }

    pub fn to_grouped(&self) -> Result<GroupedDesign> {
        let groups = self
            .groups
            .as_ref()
            .context("document has no groups")?
            .iter()
            .map(|g| g.iter().cloned().collect())
            .collect();
        Ok(GroupedDesign { design: self.to_design(), groups })
    }

    pub fn system(&self, name: &str) -> Result<BlockingSystem> {
        let sets = self
            .blocking_systems
            .as_ref()
            .and_then(|m| m.get(name))
            .with_context(|| format!("no blocking system named '{}'", name))?;
        Ok(BlockingSystem::new(sets.iter().map(|s| s.iter().cloned().collect()).collect()))
    }

    /// The lexicographically first stored system, for ingredient files that
    /// carry exactly one.
    pub fn first_system(&self) -> Result<(String, BlockingSystem)> {
        let (name, _) = self
            .blocking_systems
            .as_ref()
            .and_then(|m| m.iter().next())
            .context("document carries no blocking system")?;
        Ok((name.clone(), self.system(name)?))
    }

    pub fn attach_system(&mut self, name: &str, bs: &BlockingSystem) {
        let sets: Vec<Vec<String>> =
            bs.sets.iter().map(|s| s.iter().cloned().collect()).collect();
        self.blocking_systems
            .get_or_insert_with(BTreeMap::new)
            .insert(name.to_string(), sets);
    }
}

pub fn document_from_design(
    kind: &str,
    d: &Design,
    groups: Option<&[BTreeSet<String>]>,
    provenance: &str,
) -> DesignDocument {
    let mut doc = DesignDocument {
        format_version: FORMAT_VERSION,
        kind: kind.to_string(),
        lambda: d.lambda,
        points: d.points.iter().cloned().collect(),
        groups: groups.map(|gs| gs.iter().map(|g| g.iter().cloned().collect()).collect()),
        blocks: d.blocks.clone(),
        blocking_systems: None,
        provenance: provenance.to_string(),
    };
    doc.canonicalize();
    doc
}

fn to_sorted_json<T: Serialize>(value: &T) -> Result<String> {
    // serde_json's default map is ordered, so a Value round-trip sorts keys
    let v = serde_json::to_value(value)?;
    Ok(format!("{:#}\n", v))
}

pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, bytes).with_context(|| format!("writing {}", tmp.display()))?;
    fs::rename(&tmp, path).with_context(|| format!("renaming into {}", path.display()))?;
    Ok(())
}

pub fn write_document(path: &Path, doc: &mut DesignDocument) -> Result<()> {
    doc.canonicalize();
    doc.validate()?;
    write_atomic(path, to_sorted_json(doc)?.as_bytes())
}

pub fn write_colouring(path: &Path, doc: &ColouringDocument) -> Result<()> {
    write_atomic(path, to_sorted_json(doc)?.as_bytes())
}

pub fn read_document(path: &Path) -> Result<DesignDocument> {
    let text =
        fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let doc: DesignDocument =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    doc.validate()?;
    Ok(doc)
}

pub fn read_colouring(path: &Path) -> Result<ColouringDocument> {
    let text =
        fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?)
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(bytes);
    format!("{:x}", h.finalize())
}

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
pub struct CatalogueManifest {
    pub entries: Vec<CatalogueEntry>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CatalogueEntry {
    pub name: String,
    pub file: String,
    pub kind: String,
    pub parameters: Parameters,
    pub digest: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Parameters {
    pub v: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    pub lambda: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub group_type: Option<String>,
}

pub fn read_manifest(dir: &Path) -> Result<CatalogueManifest> {
    let path = dir.join("manifest.json");
    let text =
        fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
    Ok(serde_json::from_str(&text)?)
}

pub fn write_manifest(dir: &Path, manifest: &CatalogueManifest) -> Result<()> {
    write_atomic(&dir.join("manifest.json"), to_sorted_json(manifest)?.as_bytes())
}
