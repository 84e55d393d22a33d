//! Sensor / bus / aggregator cost model.
//!
//! `overall = t_sen + t_comm + t_agg`. Sensors run their heads in parallel;
//! the shared bus is divided evenly between the `V` sensors; the aggregator
//! runs every tail layer that precedes view fusion once per view.

use serde::{Deserialize, Serialize};

use crate::error::{from_json_str, Error, Result};
use crate::netgraph::{FeatureShape, NetworkIR};

/// Bytes per megabyte in every report.
pub const MB: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HardwareConfig {
    /// Sensor throughput, OP/s.
    pub comp_sen: f64,
    /// Aggregator throughput, OP/s.
    pub comp_agg: f64,
    /// Shared bus bandwidth, bytes/s.
    pub bw_total: f64,
    /// Sensor memory, bytes.
    pub mem_sen: u64,
    pub num_sensors: u64,
    pub act_bits: u32,
    pub weight_bits: u32,
}

impl HardwareConfig {
    /// 125 GOP/s sensor, 1.25 TOP/s aggregator, 1.2 Gb/s bus, 2 MB sensor
    /// memory, 8-bit weights and activations.
    pub fn with_sensors(num_sensors: u64) -> Self {
        HardwareConfig {
            comp_sen: 125e9,
            comp_agg: 1.25e12,
            bw_total: 1.2e9 / 8.0,
            mem_sen: 2_000_000,
            num_sensors,
            act_bits: 8,
            weight_bits: 8,
        }
    }

    pub fn single_view() -> Self {
        Self::with_sensors(4)
    }

    pub fn multi_view() -> Self {
        Self::with_sensors(12)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let hw: Self = from_json_str(text)?;
        hw.validate()?;
        Ok(hw)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("hardware serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::InvalidHardware(format!("{name} must be positive, got {v}")))
            }
        };
        positive("comp_sen", self.comp_sen)?;
        positive("comp_agg", self.comp_agg)?;
        positive("bw_total", self.bw_total)?;
        positive("mem_sen", self.mem_sen as f64)?;
        positive("num_sensors", self.num_sensors as f64)?;
        positive("act_bits", self.act_bits as f64)?;
        positive("weight_bits", self.weight_bits as f64)?;
        Ok(())
    }

    /// Bandwidth available to one sensor, bytes/s.
    pub fn per_sensor_bw(&self) -> f64 {
        self.bw_total / self.num_sensors as f64
    }
}

impl Default for HardwareConfig {
    fn default() -> Self {
        Self::single_view()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Deployment {
    SingleView,
    MultiView,
}

impl Deployment {
    /// Multi-view exactly when the network fuses views.
    pub fn infer(net: &NetworkIR) -> Self {
        if net.fusion_index().is_some() {
            Deployment::MultiView
        } else {
            Deployment::SingleView
        }
    }
}

/// Cost breakdown of one split network. Times in seconds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostReport {
    pub t_sen: f64,
    pub t_comm: f64,
    pub t_agg: f64,
    pub overall: f64,
    pub peak_mem_sen: u64,
    pub head_params: u64,
    pub head_ops: u64,
    pub tail_params: u64,
    /// Aggregator work, including per-view repetition before fusion.
    pub tail_ops: u64,
    pub comm_bytes: u64,
    pub mem_ok: bool,
    /// Transmitted feature per sensor; `None` when nothing is sent.
    pub feature: Option<FeatureShape>,
}

impl CostReport {
    pub const CSV_HEADER: &'static str =
        "t_sen_ms,t_comm_ms,t_agg_ms,overall_ms,peak_mem_bytes,head_ops,tail_ops,comm_bytes,mem_ok";

    pub fn csv_row(&self) -> String {
        format!(
            "{:.6},{:.6},{:.6},{:.6},{},{},{},{},{}",
            self.t_sen * 1e3,
            self.t_comm * 1e3,
            self.t_agg * 1e3,
            self.overall * 1e3,
            self.peak_mem_sen,
            self.head_ops,
            self.tail_ops,
            self.comm_bytes,
            self.mem_ok
        )
    }

    pub fn overall_ms(&self) -> f64 {
        self.overall * 1e3
    }
}

pub fn compute_latency(ops: u64, throughput: f64) -> f64 {
    ops as f64 / throughput
}

pub fn feature_bytes(shape: FeatureShape, hw: &HardwareConfig) -> u64 {
    shape.bytes(hw.act_bits)
}

/// One sensor's transfer time on its share of the bus.
pub fn comm_latency(shape: FeatureShape, hw: &HardwareConfig) -> f64 {
    feature_bytes(shape, hw) as f64 / hw.per_sensor_bw()
}

/// Peak sensor memory of a head: all weights plus the largest activation
/// working set over its sequential steps.
///
/// Each step holds its input, its output buffer and any pending shortcut
/// tensor. Composite layers are stepped per sub-convolution. A depthwise step
/// allocates its output buffer at the larger of its input and output sizes.
/// The raw frame feeding the first layer is streamed from the sensor and never
/// buffered.
pub fn peak_memory(head: &NetworkIR, hw: &HardwareConfig) -> Result<u64> {
    let shapes = head.infer_shapes()?;
    let mut params = 0u64;
    let mut act_peak = 0u64;
    for (li, (layer, shape)) in head.layers.iter().zip(&shapes).enumerate() {
        let prims = layer.primitives(shape.input);
        let layer_in = shape.input.elems();
        let streamed = li == 0;
        let proj_out = prims.iter().find(|p| p.projection).map(|p| p.output);
        let mut first_main = true;
        for p in &prims {
            params += p.params;
            let reads_layer_input = p.projection || first_main;
            let step_in = if reads_layer_input && streamed { 0 } else { p.input };
            let out_buf = if p.depthwise { p.input.max(p.output) } else { p.output };
            let skip = if p.projection {
                0
            } else if let Some(proj) = proj_out {
                proj
            } else if layer.identity_skip() && !first_main {
                layer_in
            } else {
                0
            };
            act_peak = act_peak.max(step_in + out_buf + skip);
            if !p.projection {
                first_main = false;
            }
        }
    }
    let weight_bytes = (params * hw.weight_bits as u64).div_ceil(8);
    let act_bytes = (act_peak * hw.act_bits as u64).div_ceil(8);
    Ok(weight_bytes + act_bytes)
}

/// Aggregator op count: tail layers before fusion run once per view.
fn tail_work(tail: &NetworkIR, hw: &HardwareConfig, deployment: Deployment) -> Result<u64> {
    let ops = tail.count_ops()?;
    match deployment {
        Deployment::SingleView => Ok(ops.total),
        Deployment::MultiView => {
            if tail.is_empty() {
                return Ok(0);
            }
            let f = tail.fusion_index().ok_or(Error::NoFusionLayer)?;
            let fuse = &tail.layers[f];
            if fuse.kind == crate::netgraph::LayerKind::ViewFuse && fuse.out_ch != fuse.in_ch * hw.num_sensors {
                return Err(Error::ViewMismatch(format!(
                    "ViewFuse emits {} channels from {} per view, expected {} views",
                    fuse.out_ch, fuse.in_ch, hw.num_sensors
                )));
            }
            let before: u64 = ops.per_layer[..f].iter().sum();
            let after: u64 = ops.per_layer[f..].iter().sum();
            Ok(hw.num_sensors * before + after)
        }
    }
}

/// Cost of running `head` on each sensor and `tail` on the aggregator.
pub fn evaluate(head: &NetworkIR, tail: &NetworkIR, hw: &HardwareConfig, deployment: Deployment) -> Result<CostReport> {
    hw.validate()?;
    let head_out = head.output_shape()?;
    if head_out != tail.input_shape() {
        return Err(Error::ShapeMismatch {
            layer: head.len(),
            reason: format!("head emits {head_out}, tail expects {}", tail.input_shape()),
        });
    }
    if deployment == Deployment::MultiView && head.fusion_index().is_some() {
        return Err(Error::InvalidNetwork("view fusion cannot run on a sensor".into()));
    }
    let head_ops = head.count_ops()?.total;
    let tail_ops = tail_work(tail, hw, deployment)?;
    let head_params = head.count_params()?;
    let tail_params = tail.count_params()?;
    let peak_mem_sen = peak_memory(head, hw)?;
    // Nothing leaves the sensor when it runs the whole network.
    let feature = (!tail.is_empty()).then_some(head_out);
    let comm_bytes = feature.map(|f| feature_bytes(f, hw)).unwrap_or(0);
    let t_sen = compute_latency(head_ops, hw.comp_sen);
    let t_comm = comm_bytes as f64 / hw.per_sensor_bw();
    let t_agg = compute_latency(tail_ops, hw.comp_agg);
    Ok(CostReport {
        t_sen,
        t_comm,
        t_agg,
        overall: t_sen + t_comm + t_agg,
        peak_mem_sen,
        head_params,
        head_ops,
        tail_params,
        tail_ops,
        comm_bytes,
        mem_ok: peak_mem_sen <= hw.mem_sen,
        feature,
    })
}

/// Split `net` at `index` and evaluate, inferring the deployment.
pub fn evaluate_split(net: &NetworkIR, index: usize, hw: &HardwareConfig) -> Result<CostReport> {
    let split = net.split_at(index)?;
    evaluate(&split.head, &split.tail, hw, Deployment::infer(net))
}
