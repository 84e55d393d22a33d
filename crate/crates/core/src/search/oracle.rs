//! Accuracy oracles standing in for trained-network evaluation.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{from_json_str, Error, Result};
use crate::netgraph::LayerKind;
use crate::splitspace::{SearchSpace, SubNetDescriptor};

pub trait AccuracyOracle: Sync {
    /// Accuracy in `[0, 1]`.
    fn query(&self, desc: &SubNetDescriptor) -> Result<f64>;
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct TableRecord {
    descriptor: SubNetDescriptor,
    accuracy: f64,
}

/// Exact lookup table.
#[derive(Debug, Clone, Default)]
pub struct TableOracle {
    table: HashMap<SubNetDescriptor, f64>,
}

impl TableOracle {
    pub fn from_json(text: &str) -> Result<Self> {
        let records: Vec<TableRecord> = from_json_str(text)?;
        let mut table = HashMap::with_capacity(records.len());
        for (i, r) in records.into_iter().enumerate() {
            if !(0.0..=1.0).contains(&r.accuracy) {
                return Err(Error::Parse { path: format!("[{i}].accuracy"), message: "must lie in [0, 1]".into() });
            }
            table.insert(r.descriptor, r.accuracy);
        }
        Ok(TableOracle { table })
    }

    pub fn insert(&mut self, desc: SubNetDescriptor, accuracy: f64) {
        self.table.insert(desc, accuracy);
    }

    pub fn to_json(&self) -> String {
        let mut records: Vec<TableRecord> =
            self.table.iter().map(|(d, a)| TableRecord { descriptor: d.clone(), accuracy: *a }).collect();
        records.sort_by(|a, b| a.descriptor.cmp(&b.descriptor));
        serde_json::to_string_pretty(&records).expect("records serialize")
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }
}

impl AccuracyOracle for TableOracle {
    fn query(&self, desc: &SubNetDescriptor) -> Result<f64> {
        self.table.get(desc).copied().ok_or_else(|| Error::OracleMiss(desc.to_string()))
    }
}

/// Coefficients of the synthetic accuracy model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SurrogateParams {
    pub offset: f64,
    /// Weight on `ln(total MACs / 1e6)`.
    pub log_macs: f64,
    /// Penalty per unit of compression ratio `c / d` at the split.
    pub compression: f64,
    /// Bonus for splitting later, scaled by the split's relative depth.
    pub depth: f64,
    /// Peak-to-peak amplitude of the descriptor-hashed noise (logit units).
    pub noise: f64,
}

impl Default for SurrogateParams {
    fn default() -> Self {
        SurrogateParams { offset: -2.0, log_macs: 0.5, compression: 0.02, depth: 0.5, noise: 0.05 }
    }
}

/// Deterministic synthetic accuracy:
/// `sigmoid(offset + log_macs ln(MACs/1e6) - compression c/d + depth t - noise)`
/// where `t` is the split position over the layer count.
#[derive(Debug, Clone)]
pub struct SurrogateOracle {
    space: SearchSpace,
    params: SurrogateParams,
    seed: u64,
}

/// 64-bit FNV-1a; stable across platforms and releases.
fn fnv1a(bytes: &[u8], seed: u64) -> u64 {
    let mut h = 0xcbf2_9ce4_8422_2325u64 ^ seed.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    for b in bytes {
        h ^= *b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

impl SurrogateOracle {
    pub fn new(space: SearchSpace, params: SurrogateParams, seed: u64) -> Self {
        SurrogateOracle { space, params, seed }
    }

    pub fn with_defaults(space: SearchSpace, seed: u64) -> Self {
        Self::new(space, SurrogateParams::default(), seed)
    }

    /// Uniform draw in `[0, 1)` keyed by the descriptor.
    fn unit_noise(&self, desc: &SubNetDescriptor) -> f64 {
        (fnv1a(desc.key().as_bytes(), self.seed) >> 11) as f64 / (1u64 << 53) as f64
    }
}

impl AccuracyOracle for SurrogateOracle {
    fn query(&self, desc: &SubNetDescriptor) -> Result<f64> {
        let net = self.space.materialize(desc)?;
        let macs = net.count_ops()?.total.max(1) as f64;
        let reduce = net.layers.iter().find(|l| l.kind == LayerKind::ConvReduce);
        let ratio = reduce.map(|l| l.in_ch as f64 / l.out_ch as f64).unwrap_or(1.0);
        let depth = self.space.split_index(desc).map(|i| i as f64 / net.len() as f64).unwrap_or(1.0);
        let p = &self.params;
        let logit = p.offset + p.log_macs * (macs / 1e6).ln() - p.compression * ratio + p.depth * depth
            - p.noise * self.unit_noise(desc);
        Ok(1.0 / (1.0 + (-logit).exp()))
    }
}
