//! Reference networks at 224x224 with 1000 classes.
//!
//! Single-view models are plain classifiers. Multi-view variants put a
//! [`LayerKind::ViewPool`](crate::netgraph::LayerKind::ViewPool) after the
//! last convolution, so their natural split point is the fusion layer.

use crate::netgraph::{LayerDesc, NetworkIR};

const RES: u64 = 224;
const CLASSES: u64 = 1000;

/// Names of every bundled network, in fixture order.
pub const NAMES: &[&str] = &[
    "mobilenet_v2",
    "mnasnet_1_0",
    "efficientnet_b0",
    "resnet152",
    "regnetx_3_2gf",
    "vgg11_mv",
    "resnet18_mv",
    "mobilenet_v3_small_mv",
    "mnasnet_0_5_mv",
    "efficientnet_b0_mv",
    "head_distill_resnet152",
];

pub fn by_name(name: &str) -> Option<NetworkIR> {
    Some(match name {
        "mobilenet_v2" => mobilenet_v2(),
        "mnasnet_1_0" => mnasnet(1.0),
        "efficientnet_b0" => efficientnet_b0(false),
        "resnet152" => resnet152(),
        "regnetx_3_2gf" => regnetx_3_2gf(),
        "vgg11_mv" => vgg11_mv(),
        "resnet18_mv" => resnet18_mv(),
        "mobilenet_v3_small_mv" => mobilenet_v3_small_mv(),
        "mnasnet_0_5_mv" => mnasnet(0.5),
        "efficientnet_b0_mv" => efficientnet_b0(true),
        "head_distill_resnet152" => head_distill_resnet152(),
        _ => return None,
    })
}

fn classifier(layers: &mut Vec<LayerDesc>, ch: u64) {
    layers.push(LayerDesc::pool(ch));
    layers.push(LayerDesc::fc(ch, CLASSES));
}

/// Repeat an inverted-residual stage; only the first block strides.
fn stage(layers: &mut Vec<LayerDesc>, cin: u64, cout: u64, k: u64, stride: u64, e: f64, n: usize) {
    for i in 0..n {
        let (a, s) = if i == 0 { (cin, stride) } else { (cout, 1) };
        layers.push(LayerDesc::mbconv(a, cout, k, s, e));
    }
}

pub fn mobilenet_v2() -> NetworkIR {
    let mut l = vec![LayerDesc::conv(3, 32, 3, 2), LayerDesc::mbconv(32, 16, 3, 1, 1.0)];
    let mut c = 16;
    for (t, out, n, s) in [(6.0, 24, 2, 2), (6.0, 32, 3, 2), (6.0, 64, 4, 2), (6.0, 96, 3, 1), (6.0, 160, 3, 2), (6.0, 320, 1, 1)] {
        stage(&mut l, c, out, 3, s, t, n);
        c = out;
    }
    l.push(LayerDesc::conv(320, 1280, 1, 1));
    classifier(&mut l, 1280);
    NetworkIR::new(3, RES, l)
}

/// MNASNet-B1 at width `alpha`; 0.5 is the multi-view variant.
fn mnasnet(alpha: f64) -> NetworkIR {
    let depths: [u64; 8] = if alpha == 1.0 {
        [32, 16, 24, 40, 80, 96, 192, 320]
    } else {
        [16, 8, 16, 24, 40, 48, 96, 160]
    };
    let mut l = vec![
        LayerDesc::conv(3, depths[0], 3, 2),
        LayerDesc::depthwise(depths[0], 3, 1),
        LayerDesc::conv(depths[0], depths[1], 1, 1),
    ];
    let stacks = [(3, 2, 3.0, 3), (5, 2, 3.0, 3), (5, 2, 6.0, 3), (3, 1, 6.0, 2), (5, 2, 6.0, 4), (3, 1, 6.0, 1)];
    for (i, (k, s, e, n)) in stacks.into_iter().enumerate() {
        stage(&mut l, depths[i + 1], depths[i + 2], k, s, e, n);
    }
    l.push(LayerDesc::conv(depths[7], 1280, 1, 1));
    if alpha != 1.0 {
        l.push(LayerDesc::view_pool(1280));
    }
    classifier(&mut l, 1280);
    NetworkIR::new(3, RES, l)
}

fn efficientnet_b0(multi_view: bool) -> NetworkIR {
    let mut l = vec![LayerDesc::conv(3, 32, 3, 2)];
    let mut c = 32;
    for (e, k, s, out, n) in [
        (1.0, 3, 1, 16, 1),
        (6.0, 3, 2, 24, 2),
        (6.0, 5, 2, 40, 2),
        (6.0, 3, 2, 80, 3),
        (6.0, 5, 1, 112, 3),
        (6.0, 5, 2, 192, 4),
        (6.0, 3, 1, 320, 1),
    ] {
        for i in 0..n {
            let (a, st) = if i == 0 { (c, s) } else { (out, 1) };
            let se = (a / 4).max(1);
            l.push(LayerDesc::mbconv(a, out, k, st, e).with_se(se));
        }
        c = out;
    }
    l.push(LayerDesc::conv(320, 1280, 1, 1));
    if multi_view {
        l.push(LayerDesc::view_pool(1280));
    }
    classifier(&mut l, 1280);
    NetworkIR::new(3, RES, l)
}

fn resnet_stem() -> Vec<LayerDesc> {
    vec![LayerDesc::conv(3, 64, 7, 2), LayerDesc::max_pool(64, 3, 2)]
}

pub fn resnet152() -> NetworkIR {
    let mut l = resnet_stem();
    let mut c = 64;
    for (i, (width, n)) in [(64u64, 3), (128, 8), (256, 36), (512, 3)].into_iter().enumerate() {
        let out = width * 4;
        for b in 0..n {
            let stride = if b == 0 && i > 0 { 2 } else { 1 };
            l.push(LayerDesc::bottleneck(c, out, 3, stride, 0.25, 1));
            c = out;
        }
    }
    classifier(&mut l, c);
    NetworkIR::new(3, RES, l)
}

pub fn regnetx_3_2gf() -> NetworkIR {
    const GROUP_WIDTH: u64 = 48;
    let mut l = vec![LayerDesc::conv(3, 32, 3, 2)];
    let mut c = 32;
    for (width, n) in [(96u64, 2), (192, 6), (432, 15), (1008, 2)] {
        for b in 0..n {
            let stride = if b == 0 { 2 } else { 1 };
            l.push(LayerDesc::bottleneck(c, width, 3, stride, 1.0, width / GROUP_WIDTH));
            c = width;
        }
    }
    classifier(&mut l, c);
    NetworkIR::new(3, RES, l)
}

fn vgg11_mv() -> NetworkIR {
    let mut l = Vec::new();
    let mut c = 3;
    for item in [Some(64), None, Some(128), None, Some(256), Some(256), None, Some(512), Some(512), None, Some(512), Some(512), None] {
        match item {
            Some(out) => {
                l.push(LayerDesc::conv(c, out, 3, 1));
                c = out;
            }
            None => l.push(LayerDesc::max_pool(c, 2, 2)),
        }
    }
    l.push(LayerDesc::view_pool(512));
    let flat = 512 * 7 * 7;
    l.extend([LayerDesc::fc(flat, 4096), LayerDesc::fc(4096, 4096), LayerDesc::fc(4096, CLASSES)]);
    NetworkIR::new(3, RES, l)
}

fn resnet18_mv() -> NetworkIR {
    let mut l = resnet_stem();
    let mut c = 64;
    for (i, width) in [64u64, 128, 256, 512].into_iter().enumerate() {
        for b in 0..2 {
            let stride = if b == 0 && i > 0 { 2 } else { 1 };
            l.push(LayerDesc::basic_block(c, width, stride));
            c = width;
        }
    }
    l.push(LayerDesc::view_pool(c));
    classifier(&mut l, c);
    NetworkIR::new(3, RES, l)
}

fn make_divisible(v: u64, divisor: u64) -> u64 {
    let rounded = ((v + divisor / 2) / divisor * divisor).max(divisor);
    if (rounded as f64) < 0.9 * v as f64 {
        rounded + divisor
    } else {
        rounded
    }
}

fn mobilenet_v3_small_mv() -> NetworkIR {
    let mut l = vec![LayerDesc::conv(3, 16, 3, 2)];
    // (in, k, expanded, out, squeeze-excite, stride)
    let blocks: [(u64, u64, u64, u64, bool, u64); 11] = [
        (16, 3, 16, 16, true, 2),
        (16, 3, 72, 24, false, 2),
        (24, 3, 88, 24, false, 1),
        (24, 5, 96, 40, true, 2),
        (40, 5, 240, 40, true, 1),
        (40, 5, 240, 40, true, 1),
        (40, 5, 120, 48, true, 1),
        (48, 5, 144, 48, true, 1),
        (48, 5, 288, 96, true, 2),
        (96, 5, 576, 96, true, 1),
        (96, 5, 576, 96, true, 1),
    ];
    for (cin, k, exp, out, se, stride) in blocks {
        let mut block = LayerDesc::mbconv(cin, out, k, stride, exp as f64 / cin as f64);
        if se {
            block = block.with_se(make_divisible(exp / 4, 8));
        }
        l.push(block);
    }
    l.push(LayerDesc::conv(96, 576, 1, 1));
    l.push(LayerDesc::view_pool(576));
    l.push(LayerDesc::pool(576));
    l.push(LayerDesc::fc(576, 1024));
    l.push(LayerDesc::fc(1024, CLASSES));
    NetworkIR::new(3, RES, l)
}

/// Distilled replacement head for a ResNet-152 split (sensor side only).
fn head_distill_resnet152() -> NetworkIR {
    NetworkIR::new(
        3,
        RES,
        vec![LayerDesc::conv(3, 64, 7, 2), LayerDesc::conv(64, 8, 2, 2), LayerDesc::conv(8, 12, 2, 2)],
    )
}
