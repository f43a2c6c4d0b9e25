use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::network::PowerNetwork;

/// Assignment of every bus to one of `r` regions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegionPartition {
    /// Bus label to zero-based region index.
    region_of: BTreeMap<u32, usize>,
    regions: usize,
}

impl RegionPartition {
    /// Builds a partition from groups of bus labels; group `i` becomes region `i`.
    pub fn from_groups(groups: &[Vec<u32>]) -> Result<Self> {
        let mut region_of = BTreeMap::new();
        for (i, g) in groups.iter().enumerate() {
            if g.is_empty() {
                return Err(Error::InvalidInput(format!("region {} is empty", i + 1)));
            }
            for &label in g {
                if region_of.insert(label, i).is_some() {
                    return Err(Error::InvalidInput(format!("bus {label} appears in more than one region")));
                }
            }
        }
        Ok(RegionPartition {
            region_of,
            regions: groups.len(),
        })
    }

    /// Every bus in its own region, in bus order.
    pub fn singletons(network: &PowerNetwork) -> Self {
        let groups: Vec<Vec<u32>> = network.buses().iter().map(|b| vec![b.label]).collect();
        Self::from_groups(&groups).expect("bus labels are unique")
    }

    /// One region holding every bus.
    pub fn single(network: &PowerNetwork) -> Self {
        let all: Vec<u32> = network.buses().iter().map(|b| b.label).collect();
        Self::from_groups(&[all]).expect("bus labels are unique")
    }

    pub fn regions(&self) -> usize {
        self.regions
    }

    pub fn region_of(&self, label: u32) -> Option<usize> {
        self.region_of.get(&label).copied()
    }

    /// Labels grouped by region.
    pub fn groups(&self) -> Vec<Vec<u32>> {
        let mut out = vec![Vec::new(); self.regions];
        for (&label, &r) in &self.region_of {
            out[r].push(label);
        }
        out
    }

    /// The partition must cover exactly the network's buses.
    pub fn check(&self, network: &PowerNetwork) -> Result<()> {
        for b in network.buses() {
            if !self.region_of.contains_key(&b.label) {
                return Err(Error::InvalidInput(format!("bus {} has no region", b.label)));
            }
        }
        if self.region_of.len() != network.n_buses() {
            let extra = self.region_of.keys().find(|l| network.position_of_label(**l).is_none());
            return Err(Error::InvalidInput(format!(
                "region list names bus {} which is not in the network",
                extra.copied().unwrap_or_default()
            )));
        }
        Ok(())
    }
}

/// Regional totals ordered `[M^g_1..M^g_r, M^l_1..M^l_r]`, in MW.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AggregateVector {
    pub values: Vec<f64>,
    pub noisy: bool,
}

impl AggregateVector {
    pub fn regions(&self) -> usize {
        self.values.len() / 2
    }

    pub fn generation(&self) -> &[f64] {
        &self.values[..self.regions()]
    }

    pub fn load(&self) -> &[f64] {
        &self.values[self.regions()..]
    }
}

/// Sums generation and load per region.
pub fn aggregate(network: &PowerNetwork, gen: &[f64], load: &[f64], partition: &RegionPartition) -> Result<AggregateVector> {
    let (ng, nl) = (network.n_generators(), network.n_loads());
    if gen.len() != ng {
        return Err(Error::DimensionMismatch {
            what: "generation vector",
            expected: ng,
            got: gen.len(),
        });
    }
    if load.len() != nl {
        return Err(Error::DimensionMismatch {
            what: "load vector",
            expected: nl,
            got: load.len(),
        });
    }
    partition.check(network)?;
    let r = partition.regions();
    let mut values = vec![0.0; 2 * r];
    for (pos, bus) in network.buses().iter().enumerate() {
        let region = partition.region_of(bus.label).expect("checked above");
        if pos < ng {
            values[region] += gen[pos];
        } else {
            values[r + region] += load[pos - ng];
        }
    }
    Ok(AggregateVector { values, noisy: false })
}
