//! Network intermediate representation.
//!
//! A [`NetworkIR`] is an ordered list of [`LayerDesc`]s over square feature
//! maps. Composite layers (MBConv, bottlenecks, basic blocks) expand into
//! primitive sub-operations that drive operation counting, parameter counting
//! and the activation liveness model in [`crate::hwmodel`].
//!
//! Counting conventions: one multiply-accumulate is one operation, convolutions
//! are bias-free and followed by a normalization layer worth `2 * c_out`
//! parameters, fully connected layers carry a bias. Pools, view fusion and
//! elementwise work cost nothing.

use serde::{Deserialize, Serialize};

use crate::error::{from_json_str, Error, Result};

/// Layer type, carrying the per-kind hyper-parameters that are not shared by
/// every layer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LayerKind {
    Conv,
    DepthwiseConv,
    /// Inverted residual block: 1x1 expand, kxk depthwise, 1x1 project.
    MBConv { expansion: f64 },
    /// Global average pool.
    Pool,
    /// Windowed max pool (k x k, stride).
    MaxPool,
    FullyConnected,
    ConvReduce,
    ConvRecover,
    /// Interlacing concatenation of `V` views along channels.
    ViewFuse,
    /// Elementwise max over views (MVCNN view pooling).
    ViewPool,
    /// 1x1 reduce, kxk (optionally grouped), 1x1 expand, with a skip or
    /// projection shortcut. `expansion` is the bottleneck width over `out_ch`.
    Bottleneck { expansion: f64 },
    /// Two kxk convolutions with a skip or projection shortcut.
    BasicBlock,
}

impl LayerKind {
    pub fn name(&self) -> &'static str {
        match self {
            LayerKind::Conv => "Conv",
            LayerKind::DepthwiseConv => "DepthwiseConv",
            LayerKind::MBConv { .. } => "MBConv",
            LayerKind::Pool => "Pool",
            LayerKind::MaxPool => "MaxPool",
            LayerKind::FullyConnected => "FullyConnected",
            LayerKind::ConvReduce => "ConvReduce",
            LayerKind::ConvRecover => "ConvRecover",
            LayerKind::ViewFuse => "ViewFuse",
            LayerKind::ViewPool => "ViewPool",
            LayerKind::Bottleneck { .. } => "Bottleneck",
            LayerKind::BasicBlock => "BasicBlock",
        }
    }

    pub fn is_fusion(&self) -> bool {
        matches!(self, LayerKind::ViewFuse | LayerKind::ViewPool)
    }

    fn expansion(&self) -> Option<f64> {
        match *self {
            LayerKind::MBConv { expansion } | LayerKind::Bottleneck { expansion } => Some(expansion),
            _ => None,
        }
    }
}

/// One layer of the network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "LayerRecord", into = "LayerRecord")]
pub struct LayerDesc {
    pub kind: LayerKind,
    pub in_ch: u64,
    pub out_ch: u64,
    pub k: u64,
    pub stride: u64,
    pub residual: bool,
    /// Convolution groups (`Conv`, `Bottleneck` middle conv).
    pub groups: u64,
    /// Squeeze-excitation width inside an MBConv; 0 means none.
    pub se_ch: u64,
}

/// Wire form of a layer.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LayerRecord {
    kind: String,
    in_ch: u64,
    out_ch: u64,
    k: u64,
    stride: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    expansion: Option<f64>,
    #[serde(default)]
    residual: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    groups: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    se_ch: Option<u64>,
}

impl TryFrom<LayerRecord> for LayerDesc {
    type Error = String;

    fn try_from(r: LayerRecord) -> std::result::Result<Self, String> {
        let need_expansion = |name: &str| {
            r.expansion
                .filter(|e| e.is_finite() && *e > 0.0)
                .ok_or_else(|| format!("{name} requires a positive `expansion`"))
        };
        let kind = match r.kind.as_str() {
            "Conv" => LayerKind::Conv,
            "DepthwiseConv" => LayerKind::DepthwiseConv,
            "MBConv" => LayerKind::MBConv { expansion: need_expansion("MBConv")? },
            "Pool" => LayerKind::Pool,
            "MaxPool" => LayerKind::MaxPool,
            "FullyConnected" => LayerKind::FullyConnected,
            "ConvReduce" => LayerKind::ConvReduce,
            "ConvRecover" => LayerKind::ConvRecover,
            "ViewFuse" => LayerKind::ViewFuse,
            "ViewPool" => LayerKind::ViewPool,
            "Bottleneck" => LayerKind::Bottleneck { expansion: need_expansion("Bottleneck")? },
            "BasicBlock" => LayerKind::BasicBlock,
            other => return Err(format!("unknown layer kind `{other}`")),
        };
        Ok(LayerDesc {
            kind,
            in_ch: r.in_ch,
            out_ch: r.out_ch,
            k: r.k,
            stride: r.stride,
            residual: r.residual,
            groups: r.groups.unwrap_or(1),
            se_ch: r.se_ch.unwrap_or(0),
        })
    }
}

impl From<LayerDesc> for LayerRecord {
    fn from(l: LayerDesc) -> Self {
        LayerRecord {
            kind: l.kind.name().to_string(),
            in_ch: l.in_ch,
            out_ch: l.out_ch,
            k: l.k,
            stride: l.stride,
            expansion: l.kind.expansion(),
            residual: l.residual,
            groups: (l.groups != 1).then_some(l.groups),
            se_ch: (l.se_ch != 0).then_some(l.se_ch),
        }
    }
}

impl LayerDesc {
    fn base(kind: LayerKind, in_ch: u64, out_ch: u64, k: u64, stride: u64) -> Self {
        LayerDesc { kind, in_ch, out_ch, k, stride, residual: false, groups: 1, se_ch: 0 }
    }

    pub fn conv(in_ch: u64, out_ch: u64, k: u64, stride: u64) -> Self {
        Self::base(LayerKind::Conv, in_ch, out_ch, k, stride)
    }

    pub fn grouped_conv(in_ch: u64, out_ch: u64, k: u64, stride: u64, groups: u64) -> Self {
        LayerDesc { groups, ..Self::conv(in_ch, out_ch, k, stride) }
    }

    pub fn depthwise(ch: u64, k: u64, stride: u64) -> Self {
        Self::base(LayerKind::DepthwiseConv, ch, ch, k, stride)
    }

    /// MBConv; the residual flag is set automatically when legal.
    pub fn mbconv(in_ch: u64, out_ch: u64, k: u64, stride: u64, expansion: f64) -> Self {
        LayerDesc {
            residual: stride == 1 && in_ch == out_ch,
            ..Self::base(LayerKind::MBConv { expansion }, in_ch, out_ch, k, stride)
        }
    }

    pub fn with_se(mut self, se_ch: u64) -> Self {
        self.se_ch = se_ch;
        self
    }

    pub fn with_residual(mut self, residual: bool) -> Self {
        self.residual = residual;
        self
    }

    pub fn pool(ch: u64) -> Self {
        Self::base(LayerKind::Pool, ch, ch, 1, 1)
    }

    pub fn max_pool(ch: u64, k: u64, stride: u64) -> Self {
        Self::base(LayerKind::MaxPool, ch, ch, k, stride)
    }

    pub fn fc(in_ch: u64, out_ch: u64) -> Self {
        Self::base(LayerKind::FullyConnected, in_ch, out_ch, 1, 1)
    }

    pub fn conv_reduce(c: u64, d: u64) -> Self {
        Self::base(LayerKind::ConvReduce, c, d, 1, 1)
    }

    pub fn conv_recover(d: u64, c: u64) -> Self {
        Self::base(LayerKind::ConvRecover, d, c, 1, 1)
    }

    pub fn view_fuse(d: u64, views: u64) -> Self {
        Self::base(LayerKind::ViewFuse, d, d * views, 1, 1)
    }

    pub fn view_pool(ch: u64) -> Self {
        Self::base(LayerKind::ViewPool, ch, ch, 1, 1)
    }

    pub fn bottleneck(in_ch: u64, out_ch: u64, k: u64, stride: u64, expansion: f64, groups: u64) -> Self {
        LayerDesc {
            residual: true,
            groups,
            ..Self::base(LayerKind::Bottleneck { expansion }, in_ch, out_ch, k, stride)
        }
    }

    pub fn basic_block(in_ch: u64, out_ch: u64, stride: u64) -> Self {
        LayerDesc { residual: true, ..Self::base(LayerKind::BasicBlock, in_ch, out_ch, 3, stride) }
    }

    /// Channels of the internal wide tensor of MBConv / Bottleneck layers.
    fn inner_channels(&self) -> Option<u64> {
        match self.kind {
            LayerKind::MBConv { expansion } => Some((self.in_ch as f64 * expansion).round() as u64),
            LayerKind::Bottleneck { expansion } => Some((self.out_ch as f64 * expansion).round() as u64),
            _ => None,
        }
    }

    fn has_projection(&self) -> bool {
        matches!(self.kind, LayerKind::Bottleneck { .. } | LayerKind::BasicBlock)
            && (self.stride != 1 || self.in_ch != self.out_ch)
    }
}

/// Feature tensor shape `(channels, spatial, spatial)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FeatureShape {
    pub channels: u64,
    pub spatial: u64,
}

impl FeatureShape {
    pub fn new(channels: u64, spatial: u64) -> Self {
        FeatureShape { channels, spatial }
    }

    pub fn elems(&self) -> u64 {
        self.channels * self.spatial * self.spatial
    }

    /// Size in bytes at `bits` per element, rounded up.
    pub fn bytes(&self, bits: u32) -> u64 {
        (self.elems() * bits as u64).div_ceil(8)
    }
}

impl std::fmt::Display for FeatureShape {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}·{}²", self.channels, self.spatial)
    }
}

/// Input and output shape of one layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct LayerShape {
    pub input: FeatureShape,
    pub output: FeatureShape,
}

/// Sequential network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkIR {
    pub input_resolution: u64,
    pub input_channels: u64,
    pub layers: Vec<LayerDesc>,
}

/// Per-layer and total multiply-accumulate counts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OpCount {
    pub total: u64,
    pub per_layer: Vec<u64>,
}

/// Result of cutting a network in two.
#[derive(Debug, Clone, PartialEq)]
pub struct Split {
    pub head: NetworkIR,
    pub tail: NetworkIR,
    /// Head output, or the raw input when the head is empty.
    pub feature: FeatureShape,
}

/// One primitive sub-operation of a layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Primitive {
    pub input: u64,
    pub output: u64,
    pub macs: u64,
    pub params: u64,
    pub depthwise: bool,
    /// Shortcut projection, computed before the main path.
    pub projection: bool,
}

fn conv_prim(cin: u64, cout: u64, k: u64, stride: u64, groups: u64, s_in: u64) -> Primitive {
    let s_out = s_in.div_ceil(stride);
    let weights = k * k * cin * cout / groups;
    Primitive {
        input: cin * s_in * s_in,
        output: cout * s_out * s_out,
        macs: weights * s_out * s_out,
        params: weights + 2 * cout,
        depthwise: groups > 1 && groups == cin && cin == cout,
        projection: false,
    }
}

fn free_prim(input: u64, output: u64) -> Primitive {
    Primitive { input, output, macs: 0, params: 0, depthwise: false, projection: false }
}

fn mismatch(layer: usize, reason: impl Into<String>) -> Error {
    Error::ShapeMismatch { layer, reason: reason.into() }
}

impl LayerDesc {
    /// Validate this layer against its input and return the output shape.
    pub fn output_shape(&self, index: usize, input: FeatureShape) -> Result<FeatureShape> {
        let s = input.spatial;
        if self.in_ch != input.channels && self.kind != LayerKind::FullyConnected {
            return Err(mismatch(
                index,
                format!("{} expects {} input channels, got {}", self.kind.name(), self.in_ch, input.channels),
            ));
        }
        if self.in_ch == 0 || self.out_ch == 0 {
            return Err(mismatch(index, "zero channels"));
        }
        if !matches!(self.stride, 1 | 2) {
            return Err(mismatch(index, format!("stride {} not in {{1, 2}}", self.stride)));
        }
        if self.k == 0 {
            return Err(mismatch(index, "kernel size must be positive"));
        }
        let same_channels = |what: &str| -> Result<()> {
            if self.in_ch != self.out_ch {
                return Err(mismatch(index, format!("{what} must keep the channel count")));
            }
            Ok(())
        };
        let strided = FeatureShape::new(self.out_ch, s.div_ceil(self.stride));
        let out = match self.kind {
            LayerKind::Conv => {
                if self.groups == 0 || !self.in_ch.is_multiple_of(self.groups) || !self.out_ch.is_multiple_of(self.groups) {
                    return Err(mismatch(index, format!("groups {} do not divide the channels", self.groups)));
                }
                strided
            }
            LayerKind::DepthwiseConv => {
                same_channels("DepthwiseConv")?;
                strided
            }
            LayerKind::MBConv { expansion } => {
                if !(expansion.is_finite() && expansion > 0.0) || self.inner_channels() == Some(0) {
                    return Err(mismatch(index, "MBConv expansion must give at least one channel"));
                }
                strided
            }
            LayerKind::Bottleneck { expansion } => {
                let mid = self.inner_channels().unwrap_or(0);
                if !(expansion.is_finite() && expansion > 0.0) || mid == 0 {
                    return Err(mismatch(index, "Bottleneck expansion must give at least one channel"));
                }
                if self.groups == 0 || !mid.is_multiple_of(self.groups) {
                    return Err(mismatch(index, format!("groups {} do not divide width {mid}", self.groups)));
                }
                strided
            }
            LayerKind::BasicBlock => strided,
            LayerKind::MaxPool => {
                same_channels("MaxPool")?;
                strided
            }
            LayerKind::Pool => {
                same_channels("Pool")?;
                FeatureShape::new(self.out_ch, 1)
            }
            LayerKind::FullyConnected => {
                if self.in_ch != input.channels * s * s && !(s == 1 && self.in_ch == input.channels) {
                    return Err(mismatch(index, "FullyConnected input does not match the flattened feature"));
                }
                FeatureShape::new(self.out_ch, 1)
            }
            LayerKind::ConvReduce | LayerKind::ConvRecover => {
                if self.k != 1 || self.stride != 1 {
                    return Err(mismatch(index, format!("{} must be 1x1 with stride 1", self.kind.name())));
                }
                FeatureShape::new(self.out_ch, s)
            }
            LayerKind::ViewFuse => {
                if !self.out_ch.is_multiple_of(self.in_ch) {
                    return Err(mismatch(index, "ViewFuse output must be a whole number of views"));
                }
                FeatureShape::new(self.out_ch, s)
            }
            LayerKind::ViewPool => {
                same_channels("ViewPool")?;
                FeatureShape::new(self.out_ch, s)
            }
        };
        if self.residual
            && !matches!(self.kind, LayerKind::Bottleneck { .. } | LayerKind::BasicBlock)
            && (self.stride != 1 || self.in_ch != self.out_ch)
        {
            return Err(mismatch(index, "identity residual requires stride 1 and equal channels"));
        }
        Ok(out)
    }

    /// Primitive sub-operations, in execution order, for the given input.
    pub(crate) fn primitives(&self, input: FeatureShape) -> Vec<Primitive> {
        let s = input.spatial;
        let (cin, cout, k, st) = (self.in_ch, self.out_ch, self.k, self.stride);
        let s_out = s.div_ceil(st);
        match self.kind {
            LayerKind::Conv | LayerKind::ConvReduce | LayerKind::ConvRecover => {
                vec![conv_prim(cin, cout, k, st, self.groups, s)]
            }
            LayerKind::DepthwiseConv => vec![conv_prim(cin, cout, k, st, cin, s)],
            LayerKind::MBConv { .. } => {
                let exp = self.inner_channels().unwrap_or(cin);
                let mut prims = Vec::with_capacity(4);
                if exp != cin {
                    prims.push(conv_prim(cin, exp, 1, 1, 1, s));
                }
                prims.push(conv_prim(exp, exp, k, st, exp, s));
                if self.se_ch > 0 {
                    let se = self.se_ch;
                    prims.push(Primitive {
                        input: exp * s_out * s_out,
                        // channel rescale is applied in place
                        output: exp,
                        macs: 2 * exp * se,
                        params: 2 * exp * se + se + exp,
                        depthwise: false,
                        projection: false,
                    });
                }
                prims.push(conv_prim(exp, cout, 1, 1, 1, s_out));
                prims
            }
            LayerKind::Bottleneck { .. } => {
                let mid = self.inner_channels().unwrap_or(cout);
                let mut prims = Vec::with_capacity(4);
                if self.has_projection() {
                    prims.push(Primitive { projection: true, ..conv_prim(cin, cout, 1, st, 1, s) });
                }
                prims.push(conv_prim(cin, mid, 1, 1, 1, s));
                prims.push(conv_prim(mid, mid, k, st, self.groups, s));
                prims.push(conv_prim(mid, cout, 1, 1, 1, s_out));
                prims
            }
            LayerKind::BasicBlock => {
                let mut prims = Vec::with_capacity(3);
                if self.has_projection() {
                    prims.push(Primitive { projection: true, ..conv_prim(cin, cout, 1, st, 1, s) });
                }
                prims.push(conv_prim(cin, cout, k, st, 1, s));
                prims.push(conv_prim(cout, cout, k, 1, 1, s_out));
                prims
            }
            LayerKind::Pool => vec![free_prim(cin * s * s, cout)],
            LayerKind::MaxPool => vec![free_prim(cin * s * s, cout * s_out * s_out)],
            LayerKind::FullyConnected => vec![Primitive {
                input: cin,
                output: cout,
                macs: cin * cout,
                params: cin * cout + cout,
                depthwise: false,
                projection: false,
            }],
            LayerKind::ViewFuse | LayerKind::ViewPool => vec![free_prim(cin * s * s, cout * s * s)],
        }
    }

    /// True when the layer keeps its input alive for an identity shortcut.
    pub(crate) fn identity_skip(&self) -> bool {
        self.residual && !self.has_projection()
    }
}

impl NetworkIR {
    pub fn new(input_channels: u64, input_resolution: u64, layers: Vec<LayerDesc>) -> Self {
        NetworkIR { input_resolution, input_channels, layers }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        from_json_str(text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("network serializes")
    }

    pub fn len(&self) -> usize {
        self.layers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.layers.is_empty()
    }

    pub fn input_shape(&self) -> FeatureShape {
        FeatureShape::new(self.input_channels, self.input_resolution)
    }

    /// Index of the view fusion layer, if any.
    pub fn fusion_index(&self) -> Option<usize> {
        self.layers.iter().position(|l| l.kind.is_fusion())
    }

    fn validate_structure(&self) -> Result<()> {
        if self.input_resolution == 0 || self.input_channels == 0 {
            return Err(Error::InvalidNetwork(format!(
                "input {}x{}x{} is degenerate",
                self.input_channels, self.input_resolution, self.input_resolution
            )));
        }
        let fusions: Vec<usize> = self
            .layers
            .iter()
            .enumerate()
            .filter(|(_, l)| l.kind.is_fusion())
            .map(|(i, _)| i)
            .collect();
        if fusions.len() > 1 {
            return Err(Error::InvalidNetwork(format!("{} view fusion layers; at most one allowed", fusions.len())));
        }
        // A fragment that starts at the fusion layer had its reduction upstream.
        if let Some(&f) = fusions.first() {
            if f > 0
                && self.layers[f].kind == LayerKind::ViewFuse
                && !self.layers[..f].iter().any(|l| l.kind == LayerKind::ConvReduce)
            {
                return Err(Error::InvalidNetwork("ViewFuse without a preceding ConvReduce".into()));
            }
        }
        Ok(())
    }

    /// Annotate every layer with its input and output shape.
    pub fn infer_shapes(&self) -> Result<Vec<LayerShape>> {
        self.validate_structure()?;
        let mut cur = self.input_shape();
        let mut shapes = Vec::with_capacity(self.layers.len());
        for (i, layer) in self.layers.iter().enumerate() {
            let out = layer.output_shape(i, cur)?;
            shapes.push(LayerShape { input: cur, output: out });
            cur = out;
        }
        Ok(shapes)
    }

    /// Final output shape (the input shape for an empty network).
    pub fn output_shape(&self) -> Result<FeatureShape> {
        Ok(self.infer_shapes()?.last().map(|s| s.output).unwrap_or_else(|| self.input_shape()))
    }

    pub(crate) fn layer_primitives(&self) -> Result<Vec<Vec<Primitive>>> {
        let shapes = self.infer_shapes()?;
        Ok(self.layers.iter().zip(&shapes).map(|(l, s)| l.primitives(s.input)).collect())
    }

    pub fn count_ops(&self) -> Result<OpCount> {
        let per_layer: Vec<u64> = self
            .layer_primitives()?
            .iter()
            .map(|prims| prims.iter().map(|p| p.macs).sum())
            .collect();
        Ok(OpCount { total: per_layer.iter().sum(), per_layer })
    }

    pub fn count_params(&self) -> Result<u64> {
        Ok(self.layer_primitives()?.iter().flatten().map(|p| p.params).sum())
    }

    /// Cut into `layers[..index]` and `layers[index..]`.
    pub fn split_at(&self, index: usize) -> Result<Split> {
        if index > self.layers.len() {
            return Err(Error::IndexOutOfRange { index, len: self.layers.len() });
        }
        let shapes = self.infer_shapes()?;
        let feature = if index == 0 { self.input_shape() } else { shapes[index - 1].output };
        let head = NetworkIR::new(self.input_channels, self.input_resolution, self.layers[..index].to_vec());
        let tail = NetworkIR::new(feature.channels, feature.spatial, self.layers[index..].to_vec());
        Ok(Split { head, tail, feature })
    }
}
