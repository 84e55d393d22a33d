//! Reference split strategies and the bundled reference networks.

pub mod zoo;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::hwmodel::{evaluate_split, CostReport, HardwareConfig};
use crate::netgraph::NetworkIR;
use crate::par::Exec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    AllOnSensor,
    AllOnAggregator,
    Neurosurgeon,
    SplitAtFusion,
}

impl Strategy {
    pub const ALL: [Strategy; 4] =
        [Strategy::AllOnSensor, Strategy::AllOnAggregator, Strategy::Neurosurgeon, Strategy::SplitAtFusion];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::AllOnSensor => "all-on-sen",
            Strategy::AllOnAggregator => "all-on-agg",
            Strategy::Neurosurgeon => "neurosurgeon",
            Strategy::SplitAtFusion => "split-at-fusion",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|s| s.name() == name)
    }

    pub fn apply(self, net: &NetworkIR, hw: &HardwareConfig) -> Result<SplitDecision> {
        match self {
            Strategy::AllOnSensor => all_on_sensor(net, hw),
            Strategy::AllOnAggregator => all_on_aggregator(net, hw),
            Strategy::Neurosurgeon => neurosurgeon(net, hw, Exec::default()),
            Strategy::SplitAtFusion => split_at_fusion(net, hw),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SplitDecision {
    pub strategy: Strategy,
    pub index: usize,
    pub report: CostReport,
    pub feasible: bool,
}

fn decide(strategy: Strategy, net: &NetworkIR, index: usize, hw: &HardwareConfig) -> Result<SplitDecision> {
    let report = evaluate_split(net, index, hw)?;
    Ok(SplitDecision { strategy, index, feasible: report.mem_ok, report })
}

pub fn all_on_sensor(net: &NetworkIR, hw: &HardwareConfig) -> Result<SplitDecision> {
    decide(Strategy::AllOnSensor, net, net.len(), hw)
}

pub fn all_on_aggregator(net: &NetworkIR, hw: &HardwareConfig) -> Result<SplitDecision> {
    decide(Strategy::AllOnAggregator, net, 0, hw)
}

/// Every split index with its report, in index order. Multi-view networks are
/// only scanned up to the fusion layer.
pub fn scan(net: &NetworkIR, hw: &HardwareConfig, exec: Exec) -> Result<Vec<CostReport>> {
    net.infer_shapes()?;
    let last = net.fusion_index().unwrap_or(net.len());
    exec.map_range(last + 1, |i| evaluate_split(net, i, hw)).into_iter().collect()
}

/// Fastest memory-feasible split; ties go to the smaller index.
pub fn neurosurgeon(net: &NetworkIR, hw: &HardwareConfig, exec: Exec) -> Result<SplitDecision> {
    let reports = scan(net, hw, exec)?;
    let (index, report) = reports
        .into_iter()
        .enumerate()
        .filter(|(_, r)| r.mem_ok)
        .min_by(|(i, a), (j, b)| a.overall.total_cmp(&b.overall).then(i.cmp(j)))
        .ok_or(Error::NoFeasible)?;
    Ok(SplitDecision { strategy: Strategy::Neurosurgeon, index, feasible: true, report })
}

pub fn split_at_fusion(net: &NetworkIR, hw: &HardwareConfig) -> Result<SplitDecision> {
    let index = net.fusion_index().ok_or(Error::NoFusionLayer)?;
    decide(Strategy::SplitAtFusion, net, index, hw)
}

/// CSV header of [`table_row`].
pub const TABLE_HEADER: &str = "method,backbone,head_params,head_ops,head_peak_bytes,head_latency_ms,\
comm_size,comm_bytes,comm_latency_ms,tail_params,tail_ops,tail_latency_ms,overall_ms,feasible";

/// One comparison-table row.
pub fn table_row(backbone: &str, d: &SplitDecision) -> String {
    let r = &d.report;
    let size = r.feature.map(|f| format!("{}x{}x{}", f.channels, f.spatial, f.spatial)).unwrap_or_else(|| "0".into());
    format!(
        "{},{},{},{},{},{:.4},{},{},{:.4},{},{},{:.4},{:.4},{}",
        d.strategy.name(),
        backbone,
        r.head_params,
        r.head_ops,
        r.peak_mem_sen,
        r.t_sen * 1e3,
        size,
        r.comm_bytes,
        r.t_comm * 1e3,
        r.tail_params,
        r.tail_ops,
        r.t_agg * 1e3,
        r.overall * 1e3,
        d.feasible
    )
}
