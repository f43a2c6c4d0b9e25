//! Versioned JSON case files.
//!
//! Units are explicit in the field names: MW for power, per-unit for
//! susceptance, $/MW for cost. Bus ids are the labels used everywhere else;
//! branch orientation is kept exactly as written.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use log::info;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::{
    split_mixed_buses, Branch, GeneratorSpec, NormalizedNetwork, RawBus, RawNetwork, DEFAULT_BASE_MVA,
    DEFAULT_SURROGATE_SUSCEPTANCE,
};
use crate::opf::OpfInstance;
use crate::privacy::RegionPartition;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BusKindSpec {
    Generator,
    Load,
    Mixed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BusSpec {
    pub id: u32,
    pub kind: BusKindSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub load_mw: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorEntry {
    pub bus: u32,
    pub cost_per_mw: f64,
    pub min_mw: f64,
    pub max_mw: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BranchSpec {
    pub from: u32,
    pub to: u32,
    pub susceptance_pu: f64,
    pub flow_min_mw: f64,
    pub flow_max_mw: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CaseFile {
    pub schema_version: u32,
    #[serde(default)]
    pub name: String,
    #[serde(default = "default_base_mva")]
    pub base_mva: f64,
    pub buses: Vec<BusSpec>,
    pub generators: Vec<GeneratorEntry>,
    pub branches: Vec<BranchSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub regions: Option<Vec<Vec<u32>>>,
}

fn default_base_mva() -> f64 {
    DEFAULT_BASE_MVA
}

/// A case ready for analysis.
#[derive(Debug, Clone)]
pub struct LoadedCase {
    pub name: String,
    pub instance: OpfInstance,
    /// MW, one entry per load bus in network order.
    pub load: Vec<f64>,
    /// Expressed over the normalized bus labels.
    pub partition: Option<RegionPartition>,
    pub normalized: NormalizedNetwork,
    /// Case-file bus ids in file order.
    pub raw_labels: Vec<u32>,
}

impl CaseFile {
    pub fn from_json_str(text: &str) -> Result<Self> {
        let case: CaseFile = serde_json::from_str(text).map_err(|e| Error::Case(e.to_string()))?;
        case.validate()?;
        Ok(case)
    }

    pub fn to_json_string(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("case files always serialize");
        s.push('\n');
        s
    }

    /// Schema version, referential integrity and per-kind field rules.
    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::Case(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        if !(self.base_mva.is_finite() && self.base_mva > 0.0) {
            return Err(Error::Case("base_mva must be positive".into()));
        }
        let mut kinds = BTreeMap::new();
        for b in &self.buses {
            if kinds.insert(b.id, b.kind).is_some() {
                return Err(Error::Case(format!("duplicate bus id {}", b.id)));
            }
            match (b.kind, b.load_mw) {
                (BusKindSpec::Generator, Some(l)) if l != 0.0 => {
                    return Err(Error::Case(format!(
                        "bus {}: generator bus with load_mw; use kind \"mixed\"",
                        b.id
                    )))
                }
                (BusKindSpec::Load | BusKindSpec::Mixed, None) => {
                    return Err(Error::Case(format!("bus {}: missing load_mw", b.id)))
                }
                (BusKindSpec::Load | BusKindSpec::Mixed, Some(l)) if !(l.is_finite() && l > 0.0) => {
                    return Err(Error::Case(format!("bus {}: load_mw must be positive", b.id)))
                }
                _ => {}
            }
        }
        let mut with_gen = BTreeSet::new();
        for g in &self.generators {
            match kinds.get(&g.bus) {
                None => return Err(Error::Case(format!("generator references unknown bus {}", g.bus))),
                Some(BusKindSpec::Load) => {
                    return Err(Error::Case(format!("generator on bus {} which has kind \"load\"", g.bus)))
                }
                Some(_) => {}
            }
            if !with_gen.insert(g.bus) {
                return Err(Error::Case(format!("more than one generator on bus {}", g.bus)));
            }
        }
        for (id, kind) in &kinds {
            if *kind != BusKindSpec::Load && !with_gen.contains(id) {
                return Err(Error::Case(format!("bus {id} has kind {kind:?} but no generator entry")));
            }
        }
        for (i, br) in self.branches.iter().enumerate() {
            for end in [br.from, br.to] {
                if !kinds.contains_key(&end) {
                    return Err(Error::Case(format!("branch {} references unknown bus {end}", i + 1)));
                }
            }
        }
        if let Some(regions) = &self.regions {
            let mut seen = BTreeSet::new();
            for r in regions {
                for id in r {
                    if !kinds.contains_key(id) {
                        return Err(Error::Case(format!("region references unknown bus {id}")));
                    }
                    if !seen.insert(*id) {
                        return Err(Error::Case(format!("bus {id} is in more than one region")));
                    }
                }
            }
            if seen.len() != kinds.len() {
                return Err(Error::Case("regions must cover every bus".into()));
            }
        }
        Ok(())
    }

    pub fn to_raw_network(&self) -> Result<RawNetwork> {
        let position: BTreeMap<u32, usize> = self.buses.iter().enumerate().map(|(i, b)| (b.id, i)).collect();
        let gens: BTreeMap<u32, &GeneratorEntry> = self.generators.iter().map(|g| (g.bus, g)).collect();
        let buses = self
            .buses
            .iter()
            .map(|b| RawBus {
                label: b.id,
                generator: gens.get(&b.id).map(|g| GeneratorSpec {
                    cost: g.cost_per_mw,
                    min: g.min_mw,
                    max: g.max_mw,
                }),
                load: b.load_mw.unwrap_or(0.0),
            })
            .collect();
        let branches = self
            .branches
            .iter()
            .map(|br| Branch {
                from: position[&br.from],
                to: position[&br.to],
                susceptance: br.susceptance_pu,
                flow_min: br.flow_min_mw,
                flow_max: br.flow_max_mw,
            })
            .collect();
        Ok(RawNetwork {
            buses,
            branches,
            base_mva: self.base_mva,
        })
    }

    /// Builds the OPF instance, splitting mixed buses first.
    pub fn load(&self) -> Result<LoadedCase> {
        self.validate()?;
        let raw = self.to_raw_network()?;
        let normalized = split_mixed_buses(&raw, DEFAULT_SURROGATE_SUSCEPTANCE)?;
        if normalized.split_count > 0 {
            info!(
                "split {} mixed bus(es) into generator and load buses",
                normalized.split_count
            );
        }
        let gens = &normalized.generators;
        let instance = OpfInstance::new(
            normalized.network.clone(),
            gens.iter().map(|g| g.cost).collect(),
            gens.iter().map(|g| g.min).collect(),
            gens.iter().map(|g| g.max).collect(),
        )?;
        let raw_labels: Vec<u32> = raw.buses.iter().map(|b| b.label).collect();
        let partition = match &self.regions {
            None => None,
            Some(groups) => Some(partition_over(&normalized, &raw_labels, groups)?),
        };
        Ok(LoadedCase {
            name: self.name.clone(),
            load: normalized.loads.clone(),
            instance,
            partition,
            normalized,
            raw_labels,
        })
    }
}

/// Reads, validates and builds a case from a JSON file.
pub fn load_case(path: impl AsRef<Path>) -> Result<LoadedCase> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    CaseFile::from_json_str(&text)
        .map_err(|e| match e {
            Error::Case(m) => Error::Case(format!("{}: {m}", path.display())),
            other => other,
        })?
        .load()
}

/// Parses an inline region list such as `"1,2,4;3,5"`.
pub fn parse_regions(text: &str) -> Result<Vec<Vec<u32>>> {
    text.split(';')
        .map(|group| {
            group
                .split(',')
                .map(|t| {
                    t.trim()
                        .parse::<u32>()
                        .map_err(|_| Error::InvalidInput(format!("bad bus id {t:?} in region list")))
                })
                .collect()
        })
        .collect()
}

impl LoadedCase {
    /// Region partition over normalized buses from groups of case-file bus
    /// ids. A split bus inherits the region of the bus it came from.
    pub fn partition_from_groups(&self, groups: &[Vec<u32>]) -> Result<RegionPartition> {
        partition_over(&self.normalized, &self.raw_labels, groups)
    }
}

fn partition_over(normalized: &NormalizedNetwork, raw_labels: &[u32], groups: &[Vec<u32>]) -> Result<RegionPartition> {
    let mut region_of = BTreeMap::new();
    for (r, ids) in groups.iter().enumerate() {
        for id in ids {
            if region_of.insert(*id, r).is_some() {
                return Err(Error::InvalidInput(format!("bus {id} is in more than one region")));
            }
        }
    }
    if let Some(id) = region_of.keys().find(|id| !raw_labels.contains(id)) {
        return Err(Error::InvalidInput(format!("region list names unknown bus {id}")));
    }
    let mut out = vec![Vec::new(); groups.len()];
    for (pos, bus) in normalized.network.buses().iter().enumerate() {
        let raw = raw_labels[normalized.origin[pos]];
        let r = region_of
            .get(&raw)
            .ok_or_else(|| Error::InvalidInput(format!("bus {raw} has no region")))?;
        out[*r].push(bus.label);
    }
    RegionPartition::from_groups(&out)
}
