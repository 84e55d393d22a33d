//! Split-aware architecture space.
//!
//! The backbone is a stem convolution, `N` phases and a classifier head. Each
//! phase runs `depth_before` blocks, an optional splitting module selected by
//! its gate, one strided block and `depth_after` blocks. The splitting module
//! is ConvReduce + ConvRecover for a single view, or ConvReduce + ViewFuse for
//! `V` views, in which case everything after the fusion sees the fused
//! `V * d` channel tensor.

use std::fmt;

use ordered_float::OrderedFloat;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{from_json_str, Error, Result};
use crate::netgraph::{LayerDesc, NetworkIR};

const INPUT_CHANNELS: u64 = 3;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ViewMode {
    #[default]
    Single,
    Multi { views: u64 },
}

impl ViewMode {
    pub fn views(self) -> u64 {
        match self {
            ViewMode::Single => 1,
            ViewMode::Multi { views } => views,
        }
    }

    pub fn is_multi(self) -> bool {
        matches!(self, ViewMode::Multi { .. })
    }
}

fn default_kernels() -> Vec<u64> {
    vec![3]
}

fn default_stride() -> u64 {
    2
}

fn default_classes() -> u64 {
    1000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseSpec {
    pub channels: Vec<u64>,
    pub expansions: Vec<f64>,
    #[serde(default = "default_kernels")]
    pub kernels: Vec<u64>,
    pub depth_before: Vec<u64>,
    pub depth_after: Vec<u64>,
    pub reduced_d: Vec<u64>,
    /// Stride of the phase's anchor block.
    #[serde(default = "default_stride")]
    pub stride: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchSpace {
    pub input_resolutions: Vec<u64>,
    pub stem_channels: Vec<u64>,
    pub phases: Vec<PhaseSpec>,
    pub head_channels: Vec<u64>,
    #[serde(default = "default_classes")]
    pub num_classes: u64,
    #[serde(default)]
    pub view_mode: ViewMode,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseChoice {
    pub channels: u64,
    pub expansion: OrderedFloat<f64>,
    pub kernel: u64,
    pub depth_before: u64,
    pub depth_after: u64,
    pub reduced_d: u64,
}

/// One concrete architecture drawn from a [`SearchSpace`].
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubNetDescriptor {
    pub resolution: u64,
    pub stem: u64,
    pub phases: Vec<PhaseChoice>,
    pub head_channels: u64,
    pub gates: Vec<bool>,
    pub view_mode: ViewMode,
}

impl SubNetDescriptor {
    /// Index of the single set gate, if exactly one is set.
    pub fn gate_position(&self) -> Option<usize> {
        let mut set = self.gates.iter().enumerate().filter(|(_, g)| **g).map(|(i, _)| i);
        match (set.next(), set.next()) {
            (Some(i), None) => Some(i),
            _ => None,
        }
    }

    pub fn gate_count(&self) -> usize {
        self.gates.iter().filter(|g| **g).count()
    }

    /// Compact JSON; the stable identity used for hashing and logs.
    pub fn key(&self) -> String {
        serde_json::to_string(self).expect("descriptor serializes")
    }
}

impl fmt::Display for SubNetDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "r{}-s{}", self.resolution, self.stem)?;
        for (i, p) in self.phases.iter().enumerate() {
            write!(
                f,
                "|c{}e{}k{}b{}a{}d{}{}",
                p.channels,
                p.expansion,
                p.kernel,
                p.depth_before,
                p.depth_after,
                p.reduced_d,
                if self.gates.get(i) == Some(&true) { "*" } else { "" }
            )?;
        }
        write!(f, "|h{}", self.head_channels)
    }
}

/// Position of a layer in the supernet.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Block {
    Stem,
    Before { phase: usize, index: u64 },
    Stride { phase: usize },
    After { phase: usize, index: u64 },
    Reduce { phase: usize },
    Recover { phase: usize },
    Fuse { phase: usize },
    HeadConv,
    Pool,
    Classifier,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Side {
    /// Single-view weights shared regardless of the split position.
    Shared,
    Sensor,
    Aggregator,
}

/// Parameter-slot identity of one materialized layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Slot {
    pub block: Block,
    pub side: Side,
}

impl fmt::Display for Slot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.block {
            Block::Stem => write!(f, "stem")?,
            Block::Before { phase, index } => write!(f, "p{}.before{index}", phase + 1)?,
            Block::Stride { phase } => write!(f, "p{}.stride", phase + 1)?,
            Block::After { phase, index } => write!(f, "p{}.after{index}", phase + 1)?,
            Block::Reduce { phase } => write!(f, "p{}.reduce", phase + 1)?,
            Block::Recover { phase } => write!(f, "p{}.recover", phase + 1)?,
            Block::Fuse { phase } => write!(f, "p{}.fuse", phase + 1)?,
            Block::HeadConv => write!(f, "head")?,
            Block::Pool => write!(f, "pool")?,
            Block::Classifier => write!(f, "classifier")?,
        }
        match self.side {
            Side::Shared => Ok(()),
            Side::Sensor => write!(f, "-S"),
            Side::Aggregator => write!(f, "-A"),
        }
    }
}

/// Named entry of a training sampling plan.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PlanEntry {
    pub tag: &'static str,
    pub descriptor: SubNetDescriptor,
}

/// Number of choice fields per phase, in encoding order: channels, expansion,
/// kernel, depth_before, depth_after, reduced_d.
pub const PHASE_FIELDS: usize = 6;
const PHASE_FIELD_NAMES: [&str; PHASE_FIELDS] = ["channels", "expansions", "kernels", "depth_before", "depth_after", "reduced_d"];

fn index_of<T: PartialEq>(list: &[T], value: &T) -> Option<usize> {
    list.iter().position(|v| v == value)
}

fn argmax<T: PartialOrd>(list: &[T]) -> usize {
    (0..list.len()).fold(0, |best, i| if list[i] > list[best] { i } else { best })
}

fn argmin<T: PartialOrd>(list: &[T]) -> usize {
    (0..list.len()).fold(0, |best, i| if list[i] < list[best] { i } else { best })
}

impl PhaseSpec {
    fn choice_lists(&self) -> [usize; PHASE_FIELDS] {
        [
            self.channels.len(),
            self.expansions.len(),
            self.kernels.len(),
            self.depth_before.len(),
            self.depth_after.len(),
            self.reduced_d.len(),
        ]
    }

    fn pick(&self, idx: &[usize]) -> PhaseChoice {
        PhaseChoice {
            channels: self.channels[idx[0]],
            expansion: OrderedFloat(self.expansions[idx[1]]),
            kernel: self.kernels[idx[2]],
            depth_before: self.depth_before[idx[3]],
            depth_after: self.depth_after[idx[4]],
            reduced_d: self.reduced_d[idx[5]],
        }
    }

    fn locate(&self, phase: usize, c: &PhaseChoice) -> Result<[usize; PHASE_FIELDS]> {
        let miss = |f: usize| Error::InvalidChoice { phase, field: PHASE_FIELD_NAMES[f] };
        Ok([
            index_of(&self.channels, &c.channels).ok_or_else(|| miss(0))?,
            self.expansions.iter().position(|e| *e == c.expansion.0).ok_or_else(|| miss(1))?,
            index_of(&self.kernels, &c.kernel).ok_or_else(|| miss(2))?,
            index_of(&self.depth_before, &c.depth_before).ok_or_else(|| miss(3))?,
            index_of(&self.depth_after, &c.depth_after).ok_or_else(|| miss(4))?,
            index_of(&self.reduced_d, &c.reduced_d).ok_or_else(|| miss(5))?,
        ])
    }

    fn extreme(&self, max: bool) -> [usize; PHASE_FIELDS] {
        macro_rules! pick {
            ($list:expr) => {
                if max {
                    argmax(&$list)
                } else {
                    argmin(&$list)
                }
            };
        }
        [
            pick!(self.channels),
            pick!(self.expansions),
            pick!(self.kernels),
            pick!(self.depth_before),
            pick!(self.depth_after),
            pick!(self.reduced_d),
        ]
    }
}

impl SearchSpace {
    pub fn from_json(text: &str) -> Result<Self> {
        let space: Self = from_json_str(text)?;
        space.validate()?;
        Ok(space)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("space serializes")
    }

    /// Four-phase single-view space of the reference supernet.
    pub fn default_single_view() -> Self {
        let phase = |channels: Vec<u64>, expansions: Vec<f64>, before: Vec<u64>, after: Vec<u64>, d: Vec<u64>| PhaseSpec {
            channels,
            expansions,
            kernels: vec![3],
            depth_before: before,
            depth_after: after,
            reduced_d: d,
            stride: 2,
        };
        SearchSpace {
            input_resolutions: vec![192, 224, 256, 288],
            stem_channels: vec![16, 24],
            phases: vec![
                phase(vec![24, 32], vec![4.0, 5.0, 6.0], vec![2, 3, 4, 5], vec![1, 2, 3], vec![4, 6, 8]),
                phase(vec![32, 40], vec![4.0, 5.0, 6.0], vec![1, 2, 3], vec![1, 2, 3], vec![6, 8, 10]),
                phase(vec![64, 72], vec![4.0, 5.0, 6.0], vec![1, 2, 3], vec![4, 5, 6, 7, 8, 9], vec![10, 14, 18]),
                phase(vec![192, 200, 208, 216], vec![6.0], vec![1, 2, 3, 4], vec![2, 3, 4, 5, 6], vec![16, 24, 32]),
            ],
            head_channels: vec![1792, 1984],
            num_classes: 1000,
            view_mode: ViewMode::Single,
        }
    }

    /// Five-phase space for `views` cameras. The last phase
    /// keeps its resolution, so a gate in phase 5 fuses at 1/32 of the input.
    pub fn default_multi_view(views: u64) -> Self {
        let phase = |channels: Vec<u64>, before: Vec<u64>, after: Vec<u64>, d: Vec<u64>, stride: u64| PhaseSpec {
            channels,
            expansions: vec![3.0, 4.0, 6.0],
            kernels: vec![3, 5],
            depth_before: before,
            depth_after: after,
            reduced_d: d,
            stride,
        };
        SearchSpace {
            input_resolutions: vec![160, 192, 224],
            stem_channels: vec![16],
            phases: vec![
                phase(vec![16, 24], vec![0, 1], vec![0, 1], vec![2, 4], 2),
                phase(vec![24, 32], vec![0, 1], vec![0, 1, 2], vec![4, 6], 2),
                phase(vec![32, 40, 48], vec![0, 1], vec![0, 1, 2], vec![4, 6, 8], 2),
                phase(vec![56, 64, 80, 96], vec![0, 1, 2], vec![0, 1, 2], vec![6, 8, 12], 2),
                phase(vec![80, 96, 128, 160], vec![0, 1, 2], vec![0, 1, 2], vec![12, 16, 24], 1),
            ],
            head_channels: vec![960, 1024, 1280],
            num_classes: 1000,
            view_mode: ViewMode::Multi { views },
        }
    }

    /// Small spaces that can be enumerated exhaustively.
    pub fn toy(name: &str) -> Option<Self> {
        let phase = |channels: Vec<u64>, expansions: Vec<f64>, before: Vec<u64>, after: Vec<u64>, d: Vec<u64>| PhaseSpec {
            channels,
            expansions,
            kernels: vec![3],
            depth_before: before,
            depth_after: after,
            reduced_d: d,
            stride: 2,
        };
        let (resolutions, phases, head, view_mode) = match name {
            "toy_a" => (
                vec![96, 128],
                vec![
                    phase(vec![16, 24], vec![4.0], vec![0, 1], vec![0], vec![4]),
                    phase(vec![32, 40], vec![4.0, 6.0], vec![0], vec![0, 1], vec![8]),
                    phase(vec![64, 96], vec![6.0], vec![0], vec![1, 2], vec![8, 16]),
                ],
                vec![256],
                ViewMode::Single,
            ),
            "toy_b" => (
                vec![96, 128],
                vec![
                    phase(vec![16], vec![3.0, 6.0], vec![0, 1], vec![0, 1], vec![4]),
                    phase(vec![24, 32], vec![3.0], vec![0], vec![0, 1], vec![4, 8]),
                    phase(vec![48, 64], vec![4.0], vec![0], vec![0, 1], vec![8]),
                ],
                vec![256],
                ViewMode::Multi { views: 4 },
            ),
            "toy_c" => (
                vec![112, 160],
                vec![
                    phase(vec![16, 24], vec![3.0], vec![0, 1], vec![0], vec![4]),
                    phase(vec![24, 40], vec![4.0], vec![0], vec![0, 1], vec![6]),
                    phase(vec![48, 64], vec![6.0], vec![0], vec![0, 1], vec![8]),
                    phase(vec![96], vec![6.0], vec![0], vec![0, 1], vec![16]),
                ],
                vec![384],
                ViewMode::Single,
            ),
            _ => return None,
        };
        Some(SearchSpace {
            input_resolutions: resolutions,
            stem_channels: vec![16],
            phases,
            head_channels: head,
            num_classes: 100,
            view_mode,
        })
    }

    pub const TOYS: [&'static str; 3] = ["toy_a", "toy_b", "toy_c"];

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidSpace(msg));
        if self.phases.is_empty() {
            return bad("at least one phase is required".into());
        }
        for (name, list) in [
            ("input_resolutions", &self.input_resolutions),
            ("stem_channels", &self.stem_channels),
            ("head_channels", &self.head_channels),
        ] {
            if list.is_empty() || list.contains(&0) {
                return bad(format!("{name} must be non-empty and positive"));
            }
        }
        if self.num_classes == 0 {
            return bad("num_classes must be positive".into());
        }
        if self.view_mode.views() == 0 {
            return bad("views must be positive".into());
        }
        for (i, p) in self.phases.iter().enumerate() {
            if p.choice_lists().contains(&0) {
                return bad(format!("phase {}: every choice list must be non-empty", i + 1));
            }
            if p.channels.contains(&0) || p.kernels.contains(&0) || p.reduced_d.contains(&0) {
                return bad(format!("phase {}: channels, kernels and d must be positive", i + 1));
            }
            if p.expansions.iter().any(|e| !(e.is_finite() && *e > 0.0)) {
                return bad(format!("phase {}: expansions must be positive", i + 1));
            }
            if !matches!(p.stride, 1 | 2) {
                return bad(format!("phase {}: stride must be 1 or 2", i + 1));
            }
            let min_c = p.channels.iter().min().copied().unwrap_or(0);
            if p.reduced_d.iter().any(|&d| d >= min_c) {
                return bad(format!("phase {}: every d must be below every channel choice", i + 1));
            }
        }
        Ok(())
    }

    pub fn num_phases(&self) -> usize {
        self.phases.len()
    }

    /// Radix of every encoded field: resolution, stem, the per-phase fields,
    /// head channels, then the gate position.
    pub fn radices(&self) -> Vec<usize> {
        let mut r = vec![self.input_resolutions.len(), self.stem_channels.len()];
        for p in &self.phases {
            r.extend(p.choice_lists());
        }
        r.push(self.head_channels.len());
        r.push(self.phases.len());
        r
    }

    /// Number of one-hot descriptors.
    pub fn cardinality(&self) -> u128 {
        self.radices().iter().map(|&r| r as u128).product()
    }

    /// Descriptor with the gate set at `gate` (one-hot) from field indices.
    /// The last entry of `genes` is the gate position.
    pub fn decode(&self, genes: &[usize]) -> SubNetDescriptor {
        let n = self.phases.len();
        let phases = (0..n).map(|i| self.phases[i].pick(&genes[2 + i * PHASE_FIELDS..])).collect();
        let mut gates = vec![false; n];
        gates[genes[2 + n * PHASE_FIELDS + 1]] = true;
        SubNetDescriptor {
            resolution: self.input_resolutions[genes[0]],
            stem: self.stem_channels[genes[1]],
            phases,
            head_channels: self.head_channels[genes[2 + n * PHASE_FIELDS]],
            gates,
            view_mode: self.view_mode,
        }
    }

    /// Inverse of [`decode`](Self::decode); requires a one-hot gate.
    pub fn encode(&self, desc: &SubNetDescriptor) -> Result<Vec<usize>> {
        self.check(desc)?;
        let gate = desc
            .gate_position()
            .ok_or_else(|| Error::InvalidDescriptor("gate vector is not one-hot".into()))?;
        let mut genes = vec![
            index_of(&self.input_resolutions, &desc.resolution).expect("checked"),
            index_of(&self.stem_channels, &desc.stem).expect("checked"),
        ];
        for (i, (p, c)) in self.phases.iter().zip(&desc.phases).enumerate() {
            genes.extend(p.locate(i, c)?);
        }
        genes.push(index_of(&self.head_channels, &desc.head_channels).expect("checked"));
        genes.push(gate);
        Ok(genes)
    }

    /// Validate that every choice of `desc` belongs to this space.
    pub fn check(&self, desc: &SubNetDescriptor) -> Result<()> {
        let n = self.phases.len();
        if desc.phases.len() != n || desc.gates.len() != n {
            return Err(Error::InvalidDescriptor(format!(
                "expected {n} phases and gates, got {} and {}",
                desc.phases.len(),
                desc.gates.len()
            )));
        }
        if !self.input_resolutions.contains(&desc.resolution) {
            return Err(Error::InvalidDescriptor(format!("resolution {} not in the space", desc.resolution)));
        }
        if !self.stem_channels.contains(&desc.stem) {
            return Err(Error::InvalidDescriptor(format!("stem {} not in the space", desc.stem)));
        }
        if !self.head_channels.contains(&desc.head_channels) {
            return Err(Error::InvalidDescriptor(format!("head channels {} not in the space", desc.head_channels)));
        }
        if desc.view_mode != self.view_mode {
            return Err(Error::InvalidDescriptor("view mode differs from the space".into()));
        }
        if desc.view_mode.is_multi() && desc.gate_position().is_none() {
            return Err(Error::InvalidDescriptor("multi-view descriptors need exactly one gate".into()));
        }
        for (i, (p, c)) in self.phases.iter().zip(&desc.phases).enumerate() {
            p.locate(i, c)?;
        }
        Ok(())
    }

    /// Layers of `desc` tagged with their supernet block.
    fn build(&self, desc: &SubNetDescriptor) -> Result<Vec<(LayerDesc, Block)>> {
        self.check(desc)?;
        let mut out = vec![(LayerDesc::conv(INPUT_CHANNELS, desc.stem, 3, 2), Block::Stem)];
        let mut cur = desc.stem;
        for (phase, (spec, c)) in self.phases.iter().zip(&desc.phases).enumerate() {
            let (k, e) = (c.kernel, c.expansion.0);
            for index in 0..c.depth_before {
                out.push((LayerDesc::mbconv(cur, c.channels, k, 1, e), Block::Before { phase, index }));
                cur = c.channels;
            }
            if desc.gates[phase] {
                out.push((LayerDesc::conv_reduce(cur, c.reduced_d), Block::Reduce { phase }));
                match desc.view_mode {
                    ViewMode::Single => {
                        out.push((LayerDesc::conv_recover(c.reduced_d, cur), Block::Recover { phase }));
                    }
                    ViewMode::Multi { views } => {
                        out.push((LayerDesc::view_fuse(c.reduced_d, views), Block::Fuse { phase }));
                        cur = c.reduced_d * views;
                    }
                }
            }
            out.push((LayerDesc::mbconv(cur, c.channels, k, spec.stride, e), Block::Stride { phase }));
            cur = c.channels;
            for index in 0..c.depth_after {
                out.push((LayerDesc::mbconv(cur, cur, k, 1, e), Block::After { phase, index }));
            }
        }
        out.push((LayerDesc::conv(cur, desc.head_channels, 1, 1), Block::HeadConv));
        out.push((LayerDesc::pool(desc.head_channels), Block::Pool));
        out.push((LayerDesc::fc(desc.head_channels, self.num_classes), Block::Classifier));
        Ok(out)
    }

    pub fn materialize(&self, desc: &SubNetDescriptor) -> Result<NetworkIR> {
        let layers = self.build(desc)?.into_iter().map(|(l, _)| l).collect();
        let net = NetworkIR::new(INPUT_CHANNELS, desc.resolution, layers);
        net.infer_shapes()?;
        Ok(net)
    }

    /// Parameter slot of every materialized layer, aligned with layer indices.
    pub fn share_map(&self, desc: &SubNetDescriptor) -> Result<Vec<Slot>> {
        let blocks = self.build(desc)?;
        let fuse_at = blocks.iter().position(|(_, b)| matches!(b, Block::Fuse { .. }));
        Ok(blocks
            .into_iter()
            .enumerate()
            .map(|(i, (_, block))| {
                let side = match fuse_at {
                    None => Side::Shared,
                    Some(f) if i < f => Side::Sensor,
                    Some(_) => Side::Aggregator,
                };
                Slot { block, side }
            })
            .collect())
    }

    /// Layer index where the deployed network is cut: the ConvRecover
    /// (single view) or ViewFuse (multi view) of the gated phase.
    pub fn split_index(&self, desc: &SubNetDescriptor) -> Result<usize> {
        self.build(desc)?
            .iter()
            .position(|(_, b)| matches!(b, Block::Recover { .. } | Block::Fuse { .. }))
            .ok_or_else(|| Error::InvalidDescriptor("no splitting module is gated".into()))
    }

    fn extreme(&self, max: bool, gates: Vec<bool>) -> SubNetDescriptor {
        let mut genes = vec![
            if max { argmax(&self.input_resolutions) } else { argmin(&self.input_resolutions) },
            if max { argmax(&self.stem_channels) } else { argmin(&self.stem_channels) },
        ];
        for p in &self.phases {
            genes.extend(p.extreme(max));
        }
        genes.push(if max { argmax(&self.head_channels) } else { argmin(&self.head_channels) });
        genes.push(0);
        SubNetDescriptor { gates, ..self.decode(&genes) }
    }

    /// Largest choice of every field.
    pub fn max_descriptor(&self, gates: Vec<bool>) -> SubNetDescriptor {
        self.extreme(true, gates)
    }

    /// Smallest choice of every field.
    pub fn min_descriptor(&self, gates: Vec<bool>) -> SubNetDescriptor {
        self.extreme(false, gates)
    }

    /// Uniformly random one-hot descriptor.
    pub fn random_descriptor<R: Rng + ?Sized>(&self, rng: &mut R) -> SubNetDescriptor {
        let genes: Vec<usize> = self.radices().iter().map(|&r| rng.random_range(0..r)).collect();
        self.decode(&genes)
    }

    fn one_hot<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<bool> {
        let mut gates = vec![false; self.phases.len()];
        gates[rng.random_range(0..self.phases.len())] = true;
        gates
    }

    /// Sub-networks trained together in one step. Single view: the max and
    /// min networks with no and with every splitting module, plus a random
    /// one-hot network. Multi view: max, min and random, all one-hot.
    pub fn sampling_plan(&self, mode: ViewMode, seed: u64) -> Result<Vec<PlanEntry>> {
        self.validate()?;
        let space = SearchSpace { view_mode: mode, ..self.clone() };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = space.phases.len();
        let entry = |tag, descriptor| PlanEntry { tag, descriptor };
        Ok(match mode {
            ViewMode::Single => vec![
                entry("max-zero-hot", space.max_descriptor(vec![false; n])),
                entry("max-all-hot", space.max_descriptor(vec![true; n])),
                entry("min-zero-hot", space.min_descriptor(vec![false; n])),
                entry("min-all-hot", space.min_descriptor(vec![true; n])),
                entry("random-one-hot", space.random_descriptor(&mut rng)),
            ],
            ViewMode::Multi { .. } => {
                let max_gate = space.one_hot(&mut rng);
                let min_gate = space.one_hot(&mut rng);
                vec![
                    entry("max-one-hot", space.max_descriptor(max_gate)),
                    entry("min-one-hot", space.min_descriptor(min_gate)),
                    entry("random-one-hot", space.random_descriptor(&mut rng)),
                ]
            }
        })
    }

    /// Lexicographic one-hot descriptors (last field fastest), at most `max_count`.
    pub fn enumerate(&self, max_count: usize) -> Enumerate<'_> {
        let radices = self.radices();
        let exhausted = radices.contains(&0);
        Enumerate { space: self, genes: vec![0; radices.len()], radices, left: if exhausted { 0 } else { max_count } }
    }
}

impl Default for SearchSpace {
    fn default() -> Self {
        Self::default_single_view()
    }
}

pub struct Enumerate<'a> {
    space: &'a SearchSpace,
    radices: Vec<usize>,
    genes: Vec<usize>,
    left: usize,
}

impl Iterator for Enumerate<'_> {
    type Item = SubNetDescriptor;

    fn next(&mut self) -> Option<SubNetDescriptor> {
        if self.left == 0 {
            return None;
        }
        self.left -= 1;
        let desc = self.space.decode(&self.genes);
        // advance the mixed-radix counter; wrapping to all zeros ends the walk
        let mut carry = true;
        for i in (0..self.genes.len()).rev() {
            self.genes[i] += 1;
            if self.genes[i] < self.radices[i] {
                carry = false;
                break;
            }
            self.genes[i] = 0;
        }
        if carry {
            self.left = 0;
        }
        Some(desc)
    }
}
